use crate::error::{Error, Result};

/// Hard cap on root-finder iterations.
pub const MAX_ROOT_ITERATIONS: usize = 200;

/// A sign-changing interval for [`find_root`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootBracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
    /// Absolute tolerance on the argument.
    pub tol: f64,
}

impl RootBracket {
    /// Evaluates `f` at both ends and checks for a sign change.
    pub fn new<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64, tol: f64) -> Result<Self> {
        let f_lo = f(lo);
        let f_hi = f(hi);
        Self::from_values(lo, hi, f_lo, f_hi, tol)
    }

    pub fn from_values(lo: f64, hi: f64, f_lo: f64, f_hi: f64, tol: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi || tol.is_nan() || tol <= 0.0 {
            return Err(Error::Domain {
                what: "bracket needs lo < hi and a positive tolerance",
                value: hi - lo,
            });
        }
        if f_lo.is_nan() || f_hi.is_nan() || f_lo * f_hi > 0.0 {
            return Err(Error::Bracket { lo, hi, f_lo, f_hi });
        }
        Ok(Self {
            lo,
            hi,
            f_lo,
            f_hi,
            tol,
        })
    }
}

/// Root of a monotone `f` inside `bracket`.
///
/// Newton steps use the secant slope through the two most recent iterates and
/// are rejected in favour of bisection whenever they leave the bracket or the
/// bracket fails to halve over two consecutive steps.
pub fn find_root<F: FnMut(f64) -> f64>(mut f: F, bracket: RootBracket) -> Result<f64> {
    let RootBracket {
        mut lo,
        mut hi,
        mut f_lo,
        f_hi,
        tol,
    } = RootBracket::from_values(
        bracket.lo,
        bracket.hi,
        bracket.f_lo,
        bracket.f_hi,
        bracket.tol,
    )?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    let mut f_hi = f_hi;

    // Start from the secant through the bracket ends.
    let mut x_prev = lo;
    let mut f_prev = f_lo;
    let mut x = lo - f_lo * (hi - lo) / (f_hi - f_lo);
    if !(x > lo && x < hi) {
        x = 0.5 * (lo + hi);
    }
    let mut width_two_back = f64::INFINITY;
    let mut width_one_back = hi - lo;

    for _ in 0..MAX_ROOT_ITERATIONS {
        let fx = f(x);
        if fx.is_nan() {
            return Err(Error::Evaluation { node: x, value: fx });
        }
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx < 0.0) == (f_lo < 0.0) {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
            f_hi = fx;
        }
        let width = hi - lo;
        if width <= 2.0 * tol {
            return Ok(if f_lo.abs() < f_hi.abs() { lo } else { hi });
        }

        let slope = (fx - f_prev) / (x - x_prev);
        let mut next = x - fx / slope;
        let stalled = width > 0.5 * width_two_back;
        if !(next > lo && next < hi) || stalled || !slope.is_finite() {
            next = 0.5 * (lo + hi);
        } else if (next - x).abs() < tol {
            // Step across the root so the bracket collapses.
            next = if next > x { x + tol } else { x - tol };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
        }
        width_two_back = width_one_back;
        width_one_back = width;
        x_prev = x;
        f_prev = fx;
        x = next;
    }
    Ok(0.5 * (lo + hi))
}
