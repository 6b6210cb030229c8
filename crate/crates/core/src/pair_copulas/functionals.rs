use rayon::prelude::*;

use super::PairCopulaSpec;
use crate::error::Result;
use crate::grid::{unit_grid, GridConfig};
use crate::numerics::graded_gauss_legendre;

/// Slack allowed on `C − uv` when classifying quadrant dependence.
const QUADRANT_SLACK: f64 = 1e-12;

/// Spearman's rho, `12 ∬ C − 3`, by a 64×64 endpoint-graded Gauss–Legendre
/// tensor rule.
pub fn rho_s_analytic(spec: &PairCopulaSpec) -> f64 {
    let rule = graded_gauss_legendre();
    let (x, w) = (rule.nodes(), rule.weights());
    let total: f64 = x
        .iter()
        .zip(w)
        .map(|(&u, &wu)| {
            wu * x
                .iter()
                .zip(w)
                .map(|(&v, &wv)| wv * spec.cdf_unchecked(u, v))
                .sum::<f64>()
        })
        .sum();
    12.0 * total - 3.0
}

/// Kendall's tau, `1 − 4 ∬ ∂₁C ∂₂C`, on the same tensor rule as
/// [`rho_s_analytic`].
pub fn tau_analytic(spec: &PairCopulaSpec) -> f64 {
    let rule = graded_gauss_legendre();
    let (x, w) = (rule.nodes(), rule.weights());
    let total: f64 = x
        .iter()
        .zip(w)
        .map(|(&u, &wu)| {
            wu * x
                .iter()
                .zip(w)
                .map(|(&v, &wv)| wv * spec.h1_unchecked(u, v) * spec.h2_unchecked(u, v))
                .sum::<f64>()
        })
        .sum();
    1.0 - 4.0 * total
}

/// KDD, `4 sup |C − uv|`, with the default grid.
pub fn kdd_analytic(spec: &PairCopulaSpec) -> f64 {
    kdd_analytic_with(spec, &GridConfig::default())
}

pub fn kdd_analytic_with(spec: &PairCopulaSpec, grid: &GridConfig) -> f64 {
    kdd_of(|u, v| Ok(spec.cdf_unchecked(u, v)), grid).expect("copula evaluation is infallible")
}

/// `4 · max |C(u, v) − uv|` over a uniform `grid.kdd`² lattice, followed by a
/// `grid.zoom`² lattice spanning one coarse cell on each side of the argmax.
///
/// The result is a lower bound on the supremum; it is what this crate reports
/// as KDD.
pub fn kdd_of<F>(cdf: F, grid: &GridConfig) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    let coarse = unit_grid(grid.kdd);
    let (best, bu, bv) = max_deviation(&cdf, &coarse, &coarse)?;
    let h = 1.0 / (grid.kdd - 1) as f64;
    let zoom_axis = |c: f64| -> Vec<f64> {
        let steps = (grid.zoom - 1) as f64;
        (0..grid.zoom)
            .map(|i| (c - h + 2.0 * h * i as f64 / steps).clamp(0.0, 1.0))
            .collect()
    };
    let (fine, _, _) = max_deviation(&cdf, &zoom_axis(bu), &zoom_axis(bv))?;
    Ok((4.0 * best.max(fine)).min(1.0))
}

/// Largest `|C − uv|` over `us × vs` and the first point attaining it.
fn max_deviation<F>(cdf: &F, us: &[f64], vs: &[f64]) -> Result<(f64, f64, f64)>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    let rows: Vec<(f64, f64, f64)> = us
        .par_iter()
        .map(|&u| {
            let mut best = (-1.0, u, 0.0);
            for &v in vs {
                let d = (cdf(u, v)? - u * v).abs();
                if d > best.0 {
                    best = (d, u, v);
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    Ok(rows
        .into_iter()
        .fold((-1.0, 0.0, 0.0), |acc, r| if r.0 > acc.0 { r } else { acc }))
}

/// Sign class of `C − uv` over a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuadrantDependence {
    Qpd,
    Qnd,
    Neither,
}

impl QuadrantDependence {
    pub fn name(self) -> &'static str {
        match self {
            QuadrantDependence::Qpd => "QPD",
            QuadrantDependence::Qnd => "QND",
            QuadrantDependence::Neither => "neither",
        }
    }
}

impl std::fmt::Display for QuadrantDependence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub fn qpd_check(spec: &PairCopulaSpec) -> QuadrantDependence {
    qpd_check_with(spec, &GridConfig::default())
}

pub fn qpd_check_with(spec: &PairCopulaSpec, grid: &GridConfig) -> QuadrantDependence {
    quadrant_class(|u, v| Ok(spec.cdf_unchecked(u, v)), grid.qpd)
        .expect("copula evaluation is infallible")
}

/// Classifies `C − uv` on an `n × n` grid of `[0, 1]²`. When both QPD and QND
/// hold (independence), QPD is reported.
pub fn quadrant_class<F>(cdf: F, n: usize) -> Result<QuadrantDependence>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    Ok(quadrant_flags(cdf, n)?.class())
}

/// Which of QPD and QND hold on the grid; both do for independence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadrantFlags {
    pub qpd: bool,
    pub qnd: bool,
}

impl QuadrantFlags {
    pub fn class(self) -> QuadrantDependence {
        if self.qpd {
            QuadrantDependence::Qpd
        } else if self.qnd {
            QuadrantDependence::Qnd
        } else {
            QuadrantDependence::Neither
        }
    }
}

pub fn quadrant_flags<F>(cdf: F, n: usize) -> Result<QuadrantFlags>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    let axis = unit_grid(n);
    let (min, max) = axis
        .par_iter()
        .map(|&u| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &v in &axis {
                let d = cdf(u, v)? - u * v;
                lo = lo.min(d);
                hi = hi.max(d);
            }
            Ok((lo, hi))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (lo, hi)| {
            (a.min(lo), b.max(hi))
        });
    Ok(QuadrantFlags {
        qpd: min >= -QUADRANT_SLACK,
        qnd: max <= QUADRANT_SLACK,
    })
}
