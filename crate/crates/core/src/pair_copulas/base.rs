//! Unrotated family formulas. Callers guarantee `theta` is admissible, the
//! first argument lies in `[0, 1]` and the conditioning argument in `(0, 1)`
//! where one is required.

use super::Family;
use crate::error::Result;
use crate::numerics::normal::{phi, phi_inv};
use crate::numerics::{bvn_cdf, find_root, RootBracket};

const GUMBEL_INV_TOL: f64 = 1e-15;

pub(super) fn cdf(family: Family, theta: f64, u: f64, v: f64) -> f64 {
    if u <= 0.0 || v <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return v;
    }
    if v >= 1.0 {
        return u;
    }
    match family {
        Family::Independence => u * v,
        Family::Gaussian => bvn_cdf(phi_inv(u), phi_inv(v), theta).unwrap_or(f64::NAN),
        Family::Frank => {
            let num = (-theta * u).exp_m1() * (-theta * v).exp_m1();
            -(num / (-theta).exp_m1()).ln_1p() / theta
        }
        Family::Clayton => (u.powf(-theta) + v.powf(-theta) - 1.0).powf(-1.0 / theta),
        Family::Gumbel => {
            let s = (-u.ln()).powf(theta) + (-v.ln()).powf(theta);
            (-s.powf(1.0 / theta)).exp()
        }
        Family::Fgm => u * v * (1.0 + theta * (1.0 - u) * (1.0 - v)),
    }
}

pub(super) fn h2(family: Family, theta: f64, u: f64, v: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    match family {
        Family::Independence => u,
        Family::Gaussian => {
            let s = (1.0 - theta * theta).sqrt();
            phi((phi_inv(u) - theta * phi_inv(v)) / s)
        }
        Family::Frank => {
            let eu = (-theta * u).exp_m1();
            let ev = (-theta * v).exp_m1();
            (-theta * v).exp() * eu / ((-theta).exp_m1() + eu * ev)
        }
        Family::Clayton => {
            let s = u.powf(-theta) + v.powf(-theta) - 1.0;
            ((-theta - 1.0) * v.ln() + (-1.0 / theta - 1.0) * s.ln()).exp()
        }
        Family::Gumbel => {
            let lu = -u.ln();
            let lv = -v.ln();
            let s = lu.powf(theta) + lv.powf(theta);
            let c = (-s.powf(1.0 / theta)).exp();
            c * lv.powf(theta - 1.0) / v * s.powf(1.0 / theta - 1.0)
        }
        Family::Fgm => u + theta * u * (1.0 - u) * (1.0 - 2.0 * v),
    }
}

pub(super) fn h2_inv(family: Family, theta: f64, w: f64, v: f64) -> Result<f64> {
    if w <= 0.0 {
        return Ok(0.0);
    }
    if w >= 1.0 {
        return Ok(1.0);
    }
    let u = match family {
        Family::Independence => w,
        Family::Gaussian => {
            let s = (1.0 - theta * theta).sqrt();
            phi(s * phi_inv(w) + theta * phi_inv(v))
        }
        Family::Frank => {
            let a = w * (-theta).exp_m1() / (w + (1.0 - w) * (-theta * v).exp());
            -a.ln_1p() / theta
        }
        Family::Clayton => {
            let t = (w.ln() + (theta + 1.0) * v.ln()) * (-theta / (theta + 1.0));
            (t.exp() + 1.0 - v.powf(-theta)).powf(-1.0 / theta)
        }
        Family::Gumbel => {
            let mut f = |u: f64| h2(family, theta, u, v) - w;
            let bracket = RootBracket::from_values(0.0, 1.0, -w, 1.0 - w, GUMBEL_INV_TOL)?;
            find_root(&mut f, bracket)?
        }
        Family::Fgm => {
            // Root in [0, 1] of k u² − (1 + k) u + w = 0, written without
            // dividing by k.
            let k = theta * (1.0 - 2.0 * v);
            let b = 1.0 + k;
            2.0 * w / (b + (b * b - 4.0 * k * w).sqrt())
        }
    };
    Ok(u)
}
