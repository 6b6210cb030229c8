use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Order of the default Gauss–Legendre rule.
pub const DEFAULT_ORDER: usize = 64;

/// Default absolute tolerance for z-integrals of conditional copulas.
pub const PARTIAL_TOL: f64 = 1e-9;

const MAX_DEPTH: u32 = 40;

/// Gauss–Legendre rule mapped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    order: usize,
}

impl QuadratureRule {
    /// Builds the `order`-point rule. Nodes are increasing, weights sum to one.
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::Domain {
                what: "quadrature order must be positive",
                value: 0.0,
            });
        }
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        // Roots of P_n by Newton iteration from the Tricomi initial guess;
        // the rule is symmetric, so only half of the roots are computed.
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // x is the i-th largest root on [-1, 1].
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            nodes[i] = 0.5 * (1.0 - x);
            weights[n - 1 - i] = 0.5 * w;
            weights[i] = 0.5 * w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.5;
        }
        Ok(Self {
            nodes,
            weights,
            order,
        })
    }

    /// The `order`-point rule composed with `u = t³(10 − 15t + 6t²)`.
    ///
    /// The substitution flattens the integrand at both endpoints, which
    /// restores fast convergence for copula functionals whose derivatives blow
    /// up at the edges of the unit square. Polynomial exactness is traded for
    /// that: the rule is exact only up to degree `(2·order − 1) / 5`.
    pub fn endpoint_graded(order: usize) -> Result<Self> {
        let plain = Self::new(order)?;
        let (nodes, weights) = plain
            .nodes
            .iter()
            .zip(&plain.weights)
            .map(|(&t, &w)| {
                let u = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
                let du = 30.0 * t * t * (1.0 - t) * (1.0 - t);
                (u, w * du)
            })
            .unzip();
        Ok(Self {
            nodes,
            weights,
            order,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Applies the rule on `[lo, hi]`.
    pub fn apply<F: FnMut(f64) -> f64>(&self, f: &mut F, lo: f64, hi: f64) -> Result<f64> {
        let width = hi - lo;
        let mut sum = 0.0;
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            let x = lo + width * t;
            let fx = f(x);
            if !fx.is_finite() {
                return Err(Error::Evaluation { node: x, value: fx });
            }
            sum += w * fx;
        }
        Ok(sum * width)
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let dp = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Shared order-64 rule.
pub fn gauss_legendre() -> &'static QuadratureRule {
    static RULE: OnceLock<QuadratureRule> = OnceLock::new();
    RULE.get_or_init(|| QuadratureRule::new(DEFAULT_ORDER).expect("positive order"))
}

/// Shared endpoint-graded order-64 rule for double integrals over `[0, 1]²`.
pub fn graded_gauss_legendre() -> &'static QuadratureRule {
    static RULE: OnceLock<QuadratureRule> = OnceLock::new();
    RULE.get_or_init(|| QuadratureRule::endpoint_graded(DEFAULT_ORDER).expect("positive order"))
}

/// Adaptive integral of `f` over `[lo, hi]`.
///
/// The whole-interval estimate is compared with the sum over both halves; an
/// interval is accepted once the two levels agree to `tol`, otherwise each
/// half is refined with `tol / 2`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Domain {
            what: "integration tolerance must be positive",
            value: tol,
        });
    }
    if lo == hi {
        return Ok(0.0);
    }
    let rule = gauss_legendre();
    let whole = rule.apply(&mut f, lo, hi)?;
    refine(rule, &mut f, lo, hi, whole, tol, 0)
}

fn refine<F: FnMut(f64) -> f64>(
    rule: &QuadratureRule,
    f: &mut F,
    lo: f64,
    hi: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let mid = 0.5 * (lo + hi);
    let left = rule.apply(f, lo, mid)?;
    let right = rule.apply(f, mid, hi)?;
    let halves = left + right;
    if (halves - whole).abs() <= tol || depth >= MAX_DEPTH {
        return Ok(halves);
    }
    let tol = 0.5 * tol;
    Ok(refine(rule, f, lo, mid, left, tol, depth + 1)?
        + refine(rule, f, mid, hi, right, tol, depth + 1)?)
}

/// `∫₀¹ f(z) dz` to absolute tolerance `tol`.
pub fn integrate_01<F: FnMut(f64) -> f64>(f: F, tol: f64) -> Result<f64> {
    integrate(f, 0.0, 1.0, tol)
}
