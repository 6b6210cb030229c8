//! The invariant suite behind `pcopula verify`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::{unit_grid, GridConfig};
use crate::measures::{kdd_emp, kdd_emp_brute, kendall_brute, kendall_emp, spearman_emp};
use crate::numerics::{bvn_cdf, bvn_cdf_conditional, std_normal_cdf, std_normal_quantile};
use crate::pair_copulas::{reference_specs, Family, PairCopulaSpec, QuadrantDependence};
use crate::partial::{
    certificate_configs, certify_bounds_with, conditional_kdd_sup_with, partial_cdf, partial_rho,
    partial_rho_from_cdf, pseudo_observations, BoundCertificate, ConditionalFamily, ThetaFunction,
};
use crate::sampler::{scenario_table, DEFAULT_N, DEFAULT_SEED};

/// Outcome of one check: the measured value against its tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn at_most(name: &'static str, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            name,
            value,
            tolerance,
            passed: value <= tolerance,
            detail: detail.into(),
        }
    }

    fn failed(name: &'static str, err: crate::Error) -> Self {
        Self {
            name,
            value: f64::NAN,
            tolerance: f64::NAN,
            passed: false,
            detail: format!("error: {err}"),
        }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<32} value={:.3e} tol={:.1e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.tolerance
        )?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    pub grid: GridConfig,
    /// Corrupts the Gumbel h2 seen by the finite-difference check, to show
    /// that the check can fail.
    pub mutate_gumbel_h2: bool,
    /// Restricts the run to the groups producing these check names; empty
    /// runs everything.
    pub only: Vec<String>,
}

type Group = (
    &'static [&'static str],
    Box<dyn Fn(&VerifyOptions) -> Vec<CheckResult>>,
);

fn groups() -> Vec<Group> {
    vec![
        (&["copula_axioms"], Box::new(|_| vec![copula_axioms()])),
        (
            &["h2_finite_difference"],
            Box::new(|o| vec![h2_finite_differences(o.mutate_gumbel_h2)]),
        ),
        (
            &["h1_finite_difference"],
            Box::new(|_| vec![h1_finite_differences()]),
        ),
        (&["h_round_trips"], Box::new(|_| vec![h_round_trips()])),
        (
            &["normal_quantile_round_trip"],
            Box::new(|_| vec![normal_round_trip()]),
        ),
        (
            &["bvn_product_and_routes"],
            Box::new(|_| vec![bvn_checks()]),
        ),
        (
            &["constant_theta_partial_equals_conditional"],
            Box::new(|_| vec![constant_theta_identity()]),
        ),
        (
            &[
                "fgm_switch_partial_is_independence",
                "fgm_switch_conditional_kdd",
                "fgm_switch_empirical_rho",
            ],
            Box::new(|o| fgm_switch(&o.grid)),
        ),
        (
            &[
                "expected_rho_identity",
                "gaussian_1-2z_partial_rho",
                "bound_certificates",
                "quadrant_certificates",
            ],
            Box::new(|o| {
                certificates(&o.grid)
                    .unwrap_or_else(|e| vec![CheckResult::failed("bound_certificates", e)])
            }),
        ),
        (
            &["sampler_consistency"],
            Box::new(|_| vec![sampler_consistency()]),
        ),
        (
            &["kendall_fast_vs_brute"],
            Box::new(|_| vec![kendall_fast_vs_brute()]),
        ),
        (
            &["kdd_emp_fast_vs_brute"],
            Box::new(|_| vec![kdd_fast_vs_brute()]),
        ),
    ]
}

/// Names of every check, in report order.
pub fn check_names() -> Vec<&'static str> {
    groups()
        .iter()
        .flat_map(|(names, _)| names.iter().copied())
        .collect()
}

/// Runs the selected checks. Errors inside a check become FAIL rows.
pub fn run_suite(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let known = check_names();
    if let Some(bad) = opts.only.iter().find(|n| !known.contains(&n.as_str())) {
        return Err(crate::Error::Usage(format!(
            "unknown check `{bad}`; valid checks: {}",
            known.join(", ")
        )));
    }
    Ok(groups()
        .into_iter()
        .filter(|(names, _)| {
            opts.only.is_empty() || names.iter().any(|n| opts.only.iter().any(|o| o == n))
        })
        .flat_map(|(_, run)| run(opts))
        .collect())
}

fn interior(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}

fn guard(name: &'static str, f: impl FnOnce() -> Result<CheckResult>) -> CheckResult {
    f().unwrap_or_else(|e| CheckResult::failed(name, e))
}

fn copula_axioms() -> CheckResult {
    let grid = unit_grid(51);
    let n = grid.len();
    let mut worst: f64 = 0.0;
    for spec in reference_specs() {
        let c: Vec<Vec<f64>> = grid
            .iter()
            .map(|&u| grid.iter().map(|&v| spec.cdf_unchecked(u, v)).collect())
            .collect();
        for (i, &t) in grid.iter().enumerate() {
            worst = worst
                .max(c[i][0].abs())
                .max(c[0][i].abs())
                .max((c[i][n - 1] - t).abs())
                .max((c[n - 1][i] - t).abs());
        }
        for i in 1..n {
            for j in 1..n {
                let vol = c[i][j] - c[i - 1][j] - c[i][j - 1] + c[i - 1][j - 1];
                worst = worst.max(-vol);
            }
        }
    }
    CheckResult::at_most(
        "copula_axioms",
        worst,
        1e-10,
        "51x51 grid, reference matrix",
    )
}

const FD_EPS: f64 = 1e-6;

fn h2_finite_differences(mutate_gumbel: bool) -> CheckResult {
    let mut worst: f64 = 0.0;
    for spec in reference_specs() {
        for &u in &interior(19) {
            for &v in &interior(19) {
                let mut h2 = spec.h2_unchecked(u, v);
                if mutate_gumbel && spec.family() == Family::Gumbel {
                    h2 += 1e-3 * u * (1.0 - u);
                }
                let fd = (spec.cdf_unchecked(u, v + FD_EPS) - spec.cdf_unchecked(u, v - FD_EPS))
                    / (2.0 * FD_EPS);
                worst = worst.max((h2 - fd).abs());
            }
        }
    }
    let detail = if mutate_gumbel {
        "mutated gumbel h2"
    } else {
        "central differences, 19x19"
    };
    CheckResult::at_most("h2_finite_difference", worst, 1e-6, detail)
}

fn h1_finite_differences() -> CheckResult {
    let mut worst: f64 = 0.0;
    for spec in reference_specs() {
        for &u in &interior(19) {
            for &v in &interior(19) {
                let fd = (spec.cdf_unchecked(u + FD_EPS, v) - spec.cdf_unchecked(u - FD_EPS, v))
                    / (2.0 * FD_EPS);
                worst = worst.max((spec.h1_unchecked(u, v) - fd).abs());
            }
        }
    }
    CheckResult::at_most(
        "h1_finite_difference",
        worst,
        1e-6,
        "central differences, 19x19",
    )
}

fn h_round_trips() -> CheckResult {
    guard("h_round_trips", || {
        let mut worst: f64 = 0.0;
        for spec in reference_specs() {
            for &u in &interior(19) {
                for &v in &interior(19) {
                    let back = spec.h2_inv(spec.h2(u, v)?, v)?;
                    worst = worst.max((back - u).abs());
                    let back = spec.h1_inv(spec.h1(u, v)?, u)?;
                    worst = worst.max((back - v).abs());
                }
            }
        }
        Ok(CheckResult::at_most(
            "h_round_trips",
            worst,
            1e-8,
            "19x19 grid",
        ))
    })
}

fn normal_round_trip() -> CheckResult {
    guard("normal_quantile_round_trip", || {
        let mut worst: f64 = 0.0;
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            let x = std_normal_quantile(p)?;
            let px = std_normal_cdf(x)?;
            worst = worst
                .max((px - p).abs())
                .max((std_normal_quantile(px)? - x).abs());
        }
        Ok(CheckResult::at_most(
            "normal_quantile_round_trip",
            worst,
            1e-12,
            "999-point grid",
        ))
    })
}

fn bvn_checks() -> CheckResult {
    guard("bvn", || {
        let axis: Vec<f64> = (0..25).map(|i| -4.0 + i as f64 / 3.0).collect();
        let mut product: f64 = 0.0;
        let mut routes: f64 = 0.0;
        for &a in &axis {
            for &b in &axis {
                product = product
                    .max((bvn_cdf(a, b, 0.0)? - std_normal_cdf(a)? * std_normal_cdf(b)?).abs());
                for rho in [-0.9999, -0.7, 0.2, 0.95] {
                    routes =
                        routes.max((bvn_cdf(a, b, rho)? - bvn_cdf_conditional(a, b, rho)?).abs());
                }
            }
        }
        Ok(CheckResult::at_most(
            "bvn_product_and_routes",
            product.max(routes),
            1e-10,
            format!("rho=0 product {product:.1e}, route gap {routes:.1e}"),
        ))
    })
}

fn constant_theta_identity() -> CheckResult {
    guard("constant_theta_partial_equals_conditional", || {
        let grid = unit_grid(21);
        let mut worst: f64 = 0.0;
        for spec in reference_specs() {
            let cond = ConditionalFamily::constant(spec);
            for &u in &grid {
                for &v in &grid {
                    worst = worst.max((partial_cdf(&cond, u, v)? - spec.cdf(u, v)?).abs());
                }
            }
        }
        Ok(CheckResult::at_most(
            "constant_theta_partial_equals_conditional",
            worst,
            1e-8,
            "21x21 grid",
        ))
    })
}

fn fgm_switch(grid: &GridConfig) -> Vec<CheckResult> {
    let cond =
        ConditionalFamily::new(Family::Fgm, ThetaFunction::two_z_minus_one()).expect("valid");
    let cdf = guard("fgm_switch_partial_is_independence", || {
        let axis = unit_grid(21);
        let mut worst: f64 = 0.0;
        for &u in &axis {
            for &v in &axis {
                worst = worst.max((partial_cdf(&cond, u, v)? - u * v).abs());
            }
        }
        Ok(CheckResult::at_most(
            "fgm_switch_partial_is_independence",
            worst,
            1e-8,
            "fgm 2z-1, 21x21",
        ))
    });
    let k = conditional_kdd_sup_with(&cond, grid);
    let ends = [0.0, 1.0]
        .iter()
        .map(|&z| crate::pair_copulas::kdd_analytic_with(&cond.at(z), grid))
        .fold(0.0f64, |a, d| a.max((d - 0.25).abs()));
    let emp = guard("fgm_switch_empirical_rho", || {
        let model = crate::sampler::VineModel::new(
            PairCopulaSpec::independence(),
            PairCopulaSpec::independence(),
            cond.clone(),
        );
        let s = crate::sampler::sample_cvine(&model, DEFAULT_N, DEFAULT_SEED)?;
        let p = pseudo_observations(&s, &model.c_xz, &model.c_yz)?;
        let rho = spearman_emp(&p.u_x, &p.u_y)?;
        Ok(CheckResult::at_most(
            "fgm_switch_empirical_rho",
            rho.abs(),
            0.035,
            "n=5000, seed 42",
        ))
    });
    vec![
        cdf,
        CheckResult::at_most(
            "fgm_switch_conditional_kdd",
            ends.max((k - 0.25).abs()),
            1e-3,
            format!("|D(z)-0.25| at z=0,1; sup k={k:.6}"),
        ),
        emp,
    ]
}

/// Certificates and the expected-rho identity over [`certificate_configs`].
fn certificates(grid: &GridConfig) -> Result<Vec<CheckResult>> {
    let mut identity: f64 = 0.0;
    let mut failing = Vec::new();
    let mut violation: f64 = 0.0;
    let mut quadrant_ok = true;
    let configs = certificate_configs();
    for (id, cond) in &configs {
        let cert: BoundCertificate = certify_bounds_with(cond, grid, id)?;
        identity = identity.max((cert.rho_partial - partial_rho_from_cdf(cond)?).abs());
        let cap_rho = (3.0 * cert.k).min(1.0);
        let cap_tau = (2.0 * cert.k).min(1.0);
        violation = violation
            .max(cert.kdd_partial - cert.k)
            .max(cert.rho_partial.abs() - cap_rho)
            .max(cert.tau_partial.abs() - cap_tau);
        quadrant_ok &= cert.pass_quadrant;
        if !cert.passed() {
            failing.push(id.clone());
        }
    }
    let gaussian = ConditionalFamily::new(Family::Gaussian, ThetaFunction::OneMinus2z)?;
    let cancel = partial_rho(&gaussian)?.abs();
    let detail = if failing.is_empty() {
        format!("{} configs", configs.len())
    } else {
        format!("failing: {}", failing.join(" "))
    };
    Ok(vec![
        CheckResult::at_most(
            "expected_rho_identity",
            identity,
            1e-6,
            format!("{} configs", configs.len()),
        ),
        CheckResult::at_most("gaussian_1-2z_partial_rho", cancel, 1e-7, ""),
        CheckResult::at_most("bound_certificates", violation.max(0.0), 1e-6, detail),
        CheckResult {
            name: "quadrant_certificates",
            value: if quadrant_ok { 0.0 } else { 1.0 },
            tolerance: 0.0,
            passed: quadrant_ok,
            detail: format!(
                "all-{}/all-{} conditionals carry over",
                QuadrantDependence::Qpd,
                QuadrantDependence::Qnd
            ),
        },
    ])
}

fn sampler_consistency() -> CheckResult {
    guard("sampler_consistency", || {
        let mut worst: f64 = 0.0;
        let mut at = String::new();
        for cfg in scenario_table() {
            let s = cfg.sample()?;
            let p = pseudo_observations(&s, &cfg.model.c_xz, &cfg.model.c_yz)?;
            let gap = (spearman_emp(&p.u_x, &p.u_y)? - partial_rho(&cfg.model.cond)?).abs();
            if gap > worst {
                worst = gap;
                at = cfg.id();
            }
        }
        Ok(CheckResult::at_most(
            "sampler_consistency",
            worst,
            0.045,
            format!("worst {at}"),
        ))
    })
}

fn random_columns(rng: &mut ChaCha8Rng, n: usize, coarse: bool) -> (Vec<f64>, Vec<f64>) {
    let mut draw = || {
        let v: f64 = rng.random();
        if coarse {
            (v * 6.0).floor()
        } else {
            v
        }
    };
    let a = (0..n).map(|_| draw()).collect();
    let b = (0..n).map(|_| draw()).collect();
    (a, b)
}

fn kendall_fast_vs_brute() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut mismatches = 0;
    for case in 0..50 {
        let n = rng.random_range(2..=200);
        let (a, b) = random_columns(&mut rng, n, case % 2 == 0);
        if kendall_emp(&a, &b).ok() != kendall_brute(&a, &b).ok() {
            mismatches += 1;
        }
    }
    CheckResult::at_most(
        "kendall_fast_vs_brute",
        mismatches as f64,
        0.0,
        "50 instances, n<=200, exact",
    )
}

fn kdd_fast_vs_brute() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED + 1);
    let mut mismatches = 0;
    for case in 0..50 {
        let n = rng.random_range(3..=50);
        let (a, b) = random_columns(&mut rng, n, case % 3 == 0);
        if kdd_emp(&a, &b).ok() != kdd_emp_brute(&a, &b).ok() {
            mismatches += 1;
        }
    }
    CheckResult::at_most(
        "kdd_emp_fast_vs_brute",
        mismatches as f64,
        0.0,
        "50 instances, n<=50, exact",
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_checks_pass() {
        for check in [
            copula_axioms(),
            h2_finite_differences(false),
            h1_finite_differences(),
            h_round_trips(),
            normal_round_trip(),
            bvn_checks(),
            kendall_fast_vs_brute(),
            kdd_fast_vs_brute(),
        ] {
            assert!(check.passed, "{check}");
        }
    }

    #[test]
    fn mutation_is_caught() {
        let check = h2_finite_differences(true);
        assert!(!check.passed, "{check}");
    }

    #[test]
    fn selection_by_name() {
        let opts = VerifyOptions {
            only: vec!["kendall_fast_vs_brute".into()],
            ..Default::default()
        };
        let checks = run_suite(&opts).unwrap();
        assert_eq!(checks.len(), 1);
        assert_eq!(checks[0].name, "kendall_fast_vs_brute");
        let bad = VerifyOptions {
            only: vec!["nope".into()],
            ..Default::default()
        };
        assert!(run_suite(&bad).is_err());
    }

    #[test]
    fn report_line_format() {
        let line = CheckResult::at_most("x", 1e-9, 1e-8, "d").to_string();
        assert!(line.starts_with("PASS x "), "{line}");
        assert!(line.ends_with("value=1.000e-9 tol=1.0e-8 (d)"), "{line}");
    }
}
