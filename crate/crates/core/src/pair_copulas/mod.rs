//! Bivariate copula families with CDFs, h-functions, their inverses and
//! rotations.
//!
//! Conventions: `h2(u, v) = ∂C/∂v` is the distribution of the first argument
//! given the second, `h1(u, v) = ∂C/∂u` the distribution of the second given
//! the first. `h2_inv(w, v)` returns the `u` with `h2(u, v) = w`, and
//! `h1_inv(w, u)` returns the `v` with `h1(u, v) = w`.

mod base;
mod functionals;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use functionals::{
    kdd_analytic, kdd_analytic_with, kdd_of, qpd_check, qpd_check_with, quadrant_class,
    quadrant_flags, rho_s_analytic, tau_analytic, QuadrantDependence, QuadrantFlags,
};

/// Largest admissible `|ρ|` for the Gaussian family.
pub const GAUSSIAN_RHO_CAP: f64 = 0.9999;
/// Smallest admissible `|θ|` for the Frank family.
pub const FRANK_MIN_ABS_THETA: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Independence,
    Gaussian,
    Frank,
    Clayton,
    Gumbel,
    Fgm,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Independence,
        Family::Gaussian,
        Family::Frank,
        Family::Clayton,
        Family::Gumbel,
        Family::Fgm,
    ];

    /// Name used on the command line and in CSV output.
    pub fn name(self) -> &'static str {
        match self {
            Family::Independence => "indep",
            Family::Gaussian => "gaussian",
            Family::Frank => "frank",
            Family::Clayton => "clayton",
            Family::Gumbel => "gumbel",
            Family::Fgm => "fgm",
        }
    }

    /// Checks `theta` against the family's parameter domain.
    pub fn check_theta(self, theta: f64) -> Result<()> {
        let bad = |constraint| {
            Err(Error::InvalidParameter {
                family: self.name(),
                theta,
                constraint,
            })
        };
        if !theta.is_finite() {
            return bad("parameter must be finite");
        }
        match self {
            Family::Independence => Ok(()),
            Family::Gaussian if theta.abs() > GAUSSIAN_RHO_CAP => bad("|rho| <= 0.9999"),
            Family::Frank if theta.abs() < FRANK_MIN_ABS_THETA => {
                bad("|theta| >= 1e-5 (use indep for theta = 0)")
            }
            Family::Clayton if theta <= 0.0 => bad("theta > 0 (rotate for negative dependence)"),
            Family::Gumbel if theta < 1.0 => bad("theta >= 1 (rotate for negative dependence)"),
            Family::Fgm if theta.abs() > 1.0 => bad("theta in [-1, 1]"),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Family::ALL
            .into_iter()
            .find(|f| f.name() == lower)
            .or(match lower.as_str() {
                "independence" => Some(Family::Independence),
                "normal" => Some(Family::Gaussian),
                _ => None,
            })
            .ok_or_else(|| {
                Error::Usage(format!(
                    "unknown family `{s}`; expected one of indep, gaussian, frank, clayton, gumbel, fgm"
                ))
            })
    }
}

/// Counter-clockwise rotation of a copula's density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Rotation {
    #[default]
    R0,
    R90,
    R180,
    R270,
}

impl Rotation {
    pub const ALL: [Rotation; 4] = [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270];

    pub fn degrees(self) -> u16 {
        match self {
            Rotation::R0 => 0,
            Rotation::R90 => 90,
            Rotation::R180 => 180,
            Rotation::R270 => 270,
        }
    }

    pub fn from_degrees(deg: u16) -> Result<Self> {
        match deg {
            0 => Ok(Rotation::R0),
            90 => Ok(Rotation::R90),
            180 => Ok(Rotation::R180),
            270 => Ok(Rotation::R270),
            _ => Err(Error::Usage(format!(
                "unknown rotation {deg}; expected one of 0, 90, 180, 270"
            ))),
        }
    }
}

/// A bivariate copula: family, parameter and rotation.
///
/// Immutable once built; the constructor enforces the parameter domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCopulaSpec {
    family: Family,
    theta: f64,
    rotation: Rotation,
}

impl PairCopulaSpec {
    pub fn new(family: Family, theta: f64, rotation: Rotation) -> Result<Self> {
        if family == Family::Independence {
            if rotation != Rotation::R0 {
                return Err(Error::InvalidParameter {
                    family: family.name(),
                    theta: rotation.degrees() as f64,
                    constraint: "independence admits only rotation 0",
                });
            }
            return Ok(Self::independence());
        }
        family.check_theta(theta)?;
        Ok(Self {
            family,
            theta,
            rotation,
        })
    }

    pub const fn independence() -> Self {
        Self {
            family: Family::Independence,
            theta: 0.0,
            rotation: Rotation::R0,
        }
    }

    pub fn gaussian(rho: f64) -> Result<Self> {
        Self::new(Family::Gaussian, rho, Rotation::R0)
    }

    pub fn frank(theta: f64) -> Result<Self> {
        Self::new(Family::Frank, theta, Rotation::R0)
    }

    pub fn clayton(theta: f64) -> Result<Self> {
        Self::new(Family::Clayton, theta, Rotation::R0)
    }

    pub fn gumbel(theta: f64) -> Result<Self> {
        Self::new(Family::Gumbel, theta, Rotation::R0)
    }

    pub fn fgm(theta: f64) -> Result<Self> {
        Self::new(Family::Fgm, theta, Rotation::R0)
    }

    /// Same family and parameter under another rotation.
    pub fn rotated(self, rotation: Rotation) -> Result<Self> {
        Self::new(self.family, self.theta, rotation)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn rotation(&self) -> Rotation {
        self.rotation
    }

    /// Short label such as `clayton(2)@90`.
    pub fn label(&self) -> String {
        match (self.family, self.rotation) {
            (Family::Independence, _) => "indep".to_string(),
            (f, Rotation::R0) => format!("{}({})", f, self.theta),
            (f, r) => format!("{}({})@{}", f, self.theta, r.degrees()),
        }
    }

    /// `C(u, v)`.
    pub fn cdf(&self, u: f64, v: f64) -> Result<f64> {
        check_closed("u", u)?;
        check_closed("v", v)?;
        Ok(self.cdf_unchecked(u, v))
    }

    /// `∂C(u, v)/∂v`, the CDF of the first argument given the second.
    pub fn h2(&self, u: f64, v: f64) -> Result<f64> {
        check_closed("u", u)?;
        check_open("v", v)?;
        Ok(self.h2_unchecked(u, v))
    }

    /// `∂C(u, v)/∂u`, the CDF of the second argument given the first.
    pub fn h1(&self, u: f64, v: f64) -> Result<f64> {
        check_open("u", u)?;
        check_closed("v", v)?;
        Ok(self.h1_unchecked(u, v))
    }

    /// The `u` solving `h2(u, v) = w`.
    pub fn h2_inv(&self, w: f64, v: f64) -> Result<f64> {
        check_closed("w", w)?;
        check_open("v", v)?;
        self.h2_inv_unchecked(w, v)
    }

    /// The `v` solving `h1(u, v) = w`.
    pub fn h1_inv(&self, w: f64, u: f64) -> Result<f64> {
        check_closed("w", w)?;
        check_open("u", u)?;
        self.h1_inv_unchecked(w, u)
    }

    pub(crate) fn cdf_unchecked(&self, u: f64, v: f64) -> f64 {
        let base = |a, b| base::cdf(self.family, self.theta, a, b);
        let c = match self.rotation {
            Rotation::R0 => base(u, v),
            Rotation::R90 => v - base(1.0 - u, v),
            Rotation::R180 => u + v - 1.0 + base(1.0 - u, 1.0 - v),
            Rotation::R270 => u - base(u, 1.0 - v),
        };
        // Fréchet–Hoeffding bounds absorb rounding from the reflections.
        let upper = u.min(v);
        c.clamp((u + v - 1.0).max(0.0).min(upper), upper)
    }

    pub(crate) fn h2_unchecked(&self, u: f64, v: f64) -> f64 {
        let base = |a, b| base::h2(self.family, self.theta, a, b);
        let h = match self.rotation {
            Rotation::R0 => base(u, v),
            Rotation::R90 => 1.0 - base(1.0 - u, v),
            Rotation::R180 => 1.0 - base(1.0 - u, 1.0 - v),
            Rotation::R270 => base(u, 1.0 - v),
        };
        h.clamp(0.0, 1.0)
    }

    pub(crate) fn h1_unchecked(&self, u: f64, v: f64) -> f64 {
        // Every base family is exchangeable: h1_base(u, v) = h2_base(v, u).
        let base = |a, b| base::h2(self.family, self.theta, b, a);
        let h = match self.rotation {
            Rotation::R0 => base(u, v),
            Rotation::R90 => base(1.0 - u, v),
            Rotation::R180 => 1.0 - base(1.0 - u, 1.0 - v),
            Rotation::R270 => 1.0 - base(u, 1.0 - v),
        };
        h.clamp(0.0, 1.0)
    }

    pub(crate) fn h2_inv_unchecked(&self, w: f64, v: f64) -> Result<f64> {
        let base = |a, b| base::h2_inv(self.family, self.theta, a, b);
        let u = match self.rotation {
            Rotation::R0 => base(w, v)?,
            Rotation::R90 => 1.0 - base(1.0 - w, v)?,
            Rotation::R180 => 1.0 - base(1.0 - w, 1.0 - v)?,
            Rotation::R270 => base(w, 1.0 - v)?,
        };
        finite_prob(u, w, v)
    }

    pub(crate) fn h1_inv_unchecked(&self, w: f64, u: f64) -> Result<f64> {
        let base = |a, b| base::h2_inv(self.family, self.theta, a, b);
        let v = match self.rotation {
            Rotation::R0 => base(w, u)?,
            Rotation::R90 => base(w, 1.0 - u)?,
            Rotation::R180 => 1.0 - base(1.0 - w, 1.0 - u)?,
            Rotation::R270 => 1.0 - base(1.0 - w, u)?,
        };
        finite_prob(v, w, u)
    }
}

impl fmt::Display for PairCopulaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn finite_prob(x: f64, w: f64, v: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::Inversion { w, v });
    }
    Ok(x.clamp(0.0, 1.0))
}

fn check_closed(what: &'static str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain {
            what: match what {
                "u" => "u must lie in [0, 1]",
                "v" => "v must lie in [0, 1]",
                _ => "w must lie in [0, 1]",
            },
            value: x,
        })
    }
}

fn check_open(what: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: match what {
                "u" => "conditioning u must lie in (0, 1)",
                _ => "conditioning v must lie in (0, 1)",
            },
            value: x,
        })
    }
}


/// Family × parameter × rotation matrix exercised by the verification suite.
pub fn reference_specs() -> Vec<PairCopulaSpec> {
    let mut out = vec![PairCopulaSpec::independence()];
    let params: [(Family, &[f64]); 5] = [
        (Family::Gaussian, &[-0.8, -0.5, 0.3, 0.8]),
        (Family::Frank, &[-5.0, -1.0, 2.0, 8.0]),
        (Family::Clayton, &[0.5, 2.0, 5.0]),
        (Family::Gumbel, &[1.5, 2.0, 4.0]),
        (Family::Fgm, &[-1.0, -0.5, 0.5, 1.0]),
    ];
    for (family, thetas) in params {
        for &theta in thetas {
            for rotation in Rotation::ALL {
                out.push(
                    PairCopulaSpec::new(family, theta, rotation).expect("valid reference spec"),
                );
            }
        }
    }
    out
}
