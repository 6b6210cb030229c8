//! Acceptance criteria 1 to 9. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use partial_copula::cli;
use partial_copula::measures::{
    kdd_emp, kdd_emp_brute, kendall_brute, kendall_emp, partial_correlation, pearson, spearman_emp,
};
use partial_copula::numerics::{bvn_cdf, std_normal_cdf, std_normal_quantile};
use partial_copula::pair_copulas::{
    kdd_analytic, reference_specs, rho_s_analytic, QuadrantDependence,
};
use partial_copula::partial::{
    certificate_configs, certify_bounds, partial_cdf, partial_rho, partial_rho_from_cdf,
    pseudo_observations, BoundCertificate, ConditionalFamily, ThetaFunction,
};
use partial_copula::sampler::{
    find_scenario, sample_cvine, sample_pitfall, scenario_table, VineModel, SCENARIO_FAMILIES,
};
use partial_copula::{Family, PairCopulaSpec, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 5000;
const SEED: u64 = 42;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn interior(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}

fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

fn criterion_1() -> Result<Verdict> {
    let mut worst = (0.0f64, 0.0f64, f64::INFINITY, 0.0f64);
    for scenario in ["2", "3", "4"] {
        let start = Instant::now();
        for family in SCENARIO_FAMILIES {
            let cfg = find_scenario(scenario, Some(family))?;
            let s = cfg.sample()?;
            let p = pseudo_observations(&s, &cfg.model.c_xz, &cfg.model.c_yz)?;
            worst.0 = worst.0.max(spearman_emp(&p.u_x, &p.u_y)?.abs());
            worst.1 = worst.1.max(kendall_emp(&p.u_x, &p.u_y)?.abs());
            worst.2 = worst.2.min(spearman_emp(&s.x, &s.y)?.abs());
        }
        worst.3 = worst.3.max(start.elapsed().as_secs_f64());
    }
    let (rho, tau, marginal, secs) = worst;
    Ok(Verdict::new(
        rho <= 0.035 && tau <= 0.03 && marginal >= 0.2 && secs <= 5.0,
        format!(
            "max partial |rho|={rho:.4} (<=0.035), max partial |tau|={tau:.4} (<=0.03), min marginal |rho|={marginal:.3} (>=0.2), slowest scenario {secs:.2}s (<=5)"
        ),
    ))
}

fn criterion_2() -> Result<Verdict> {
    let mut pass = true;
    let mut parts = Vec::new();
    for scenario in ["5", "7", "8"] {
        let cfg = find_scenario(scenario, Some(Family::Gaussian))?;
        let s = cfg.sample()?;
        let p = pseudo_observations(&s, &cfg.model.c_xz, &cfg.model.c_yz)?;
        let marginal = spearman_emp(&s.x, &s.y)?;
        let partial = spearman_emp(&p.u_x, &p.u_y)?;
        pass &= marginal.signum() != partial.signum()
            && marginal.abs() >= 0.05
            && partial.abs() >= 0.05;
        parts.push(format!("s{scenario} {marginal:+.3}/{partial:+.3}"));
        if scenario == "7" {
            let (a, b, c) = (
                cfg.model.c_xz.theta(),
                cfg.model.c_yz.theta(),
                cfg.model.cond.at(0.5).theta(),
            );
            let oracle = a * b + c * ((1.0 - a * a) * (1.0 - b * b)).sqrt();
            let normal = |col: &[f64]| -> Result<Vec<f64>> {
                col.iter().map(|&u| std_normal_quantile(u)).collect()
            };
            let r = pearson(&normal(&s.x)?, &normal(&s.y)?)?;
            pass &= (r - oracle).abs() <= 0.04;
            parts.push(format!("s7 pearson {r:.4} vs oracle {oracle:.4} (±0.04)"));
        }
    }
    Ok(Verdict::new(pass, parts.join(", ")))
}

fn criterion_3() -> Result<Verdict> {
    let cond = ConditionalFamily::new(Family::Fgm, ThetaFunction::two_z_minus_one())?;
    let mut cdf_gap: f64 = 0.0;
    for &u in &grid(21) {
        for &v in &grid(21) {
            cdf_gap = cdf_gap.max((partial_cdf(&cond, u, v)? - u * v).abs());
        }
    }
    let edge = PairCopulaSpec::gaussian(0.6)?;
    let model = VineModel::new(edge, edge, cond.clone());
    let s = sample_cvine(&model, N, SEED)?;
    let p = pseudo_observations(&s, &edge, &edge)?;
    let rho = spearman_emp(&p.u_x, &p.u_y)?;
    let k0 = kdd_analytic(&cond.at(0.0));
    let k1 = kdd_analytic(&cond.at(1.0));
    Ok(Verdict::new(
        cdf_gap <= 1e-8 && rho.abs() <= 0.035 && (k0 - 0.25).abs() <= 1e-3 && (k1 - 0.25).abs() <= 1e-3,
        format!("max |C-uv|={cdf_gap:.2e} (<=1e-8), partial rho={rho:+.4} (|.|<=0.035), D(0)={k0:.5}, D(1)={k1:.5} (0.25±1e-3)"),
    ))
}

fn criterion_4() -> Result<Verdict> {
    let mut cdf_gap: f64 = 0.0;
    let mut specs = reference_specs();
    let table = scenario_table();
    let constant: Vec<_> = table
        .iter()
        .filter(|c| c.model.cond.is_constant())
        .collect();
    specs.extend(constant.iter().map(|c| c.model.cond.at(0.0)));
    for spec in &specs {
        let cond = ConditionalFamily::constant(*spec);
        for &u in &grid(21) {
            for &v in &grid(21) {
                cdf_gap = cdf_gap.max((partial_cdf(&cond, u, v)? - spec.cdf(u, v)?).abs());
            }
        }
    }
    let mut rho_gap: f64 = 0.0;
    for cfg in &constant {
        let s = cfg.sample()?;
        let p = pseudo_observations(&s, &cfg.model.c_xz, &cfg.model.c_yz)?;
        rho_gap = rho_gap
            .max((spearman_emp(&p.u_x, &p.u_y)? - rho_s_analytic(&cfg.model.cond.at(0.0))).abs());
    }
    Ok(Verdict::new(
        cdf_gap <= 1e-8 && rho_gap <= 0.045,
        format!(
            "{} specs: max |partial-conditional|={cdf_gap:.2e} (<=1e-8); {} sampled configs: max |rho_hat-rho|={rho_gap:.4} (<=0.045)",
            specs.len(),
            constant.len()
        ),
    ))
}

fn criterion_5(certs: &[(ConditionalFamily, BoundCertificate)]) -> Result<Verdict> {
    let mut gap: f64 = 0.0;
    for (cond, cert) in certs {
        gap = gap.max((cert.rho_partial - partial_rho_from_cdf(cond)?).abs());
    }
    let g = partial_rho(&ConditionalFamily::new(
        Family::Gaussian,
        ThetaFunction::OneMinus2z,
    )?)?;
    Ok(Verdict::new(
        certs.len() >= 20 && gap <= 1e-6 && g.abs() <= 1e-7,
        format!("{} configs: max route gap {gap:.2e} (<=1e-6); gaussian 1-2z partial rho {g:.2e} (|.|<=1e-7)", certs.len()),
    ))
}

fn criterion_6(certs: &[(ConditionalFamily, BoundCertificate)]) -> Verdict {
    let mut failing = Vec::new();
    for (cond, c) in certs {
        let ok_kdd = c.kdd_partial <= c.k + 1e-6;
        let ok_rho = c.rho_partial.abs() <= (3.0 * c.k).min(1.0) + 1e-6;
        let ok_tau = c.tau_partial.abs() <= (2.0 * c.k).min(1.0) + 1e-6;
        let ok_quadrant = match c.conditional_class {
            QuadrantDependence::Neither => true,
            class => c.partial_class == class,
        };
        let ok_fgm = cond.family() != Family::Fgm || c.rho_partial.abs() <= 0.75;
        if !(ok_kdd && ok_rho && ok_tau && ok_quadrant && ok_fgm) {
            failing.push(c.id.clone());
        }
    }
    let qpd = certs
        .iter()
        .filter(|(_, c)| c.conditional_class == QuadrantDependence::Qpd)
        .count();
    Verdict::new(
        failing.is_empty() && certs.len() >= 20,
        if failing.is_empty() {
            format!(
                "{} configs within all bounds ({qpd} with all-QPD conditionals)",
                certs.len()
            )
        } else {
            format!("violations: {}", failing.join(", "))
        },
    )
}

fn criterion_7() -> Result<Verdict> {
    let mut pass = true;
    let mut parts = Vec::new();
    for sigma in [0.1, 0.5, 2.0] {
        let s = sample_pitfall(sigma, N, SEED)?;
        let pc = partial_correlation(&s.x, &s.y, &s.z)?;
        let theory = 2.0 / (2.0 + sigma * sigma);
        let rho = spearman_emp(&s.u_x, &s.u_y)?;
        pass &= (pc - theory).abs() <= 0.03 && rho.abs() <= 0.035;
        parts.push(format!(
            "σ={sigma}: {pc:.4} vs {theory:.4}, copula rho {rho:+.4}"
        ));
    }
    Ok(Verdict::new(pass, parts.join("; ")))
}

fn criterion_8() -> Result<Verdict> {
    let mut normal: f64 = 0.0;
    for i in 1..1000 {
        let x = std_normal_quantile(i as f64 / 1000.0)?;
        normal = normal.max((std_normal_quantile(std_normal_cdf(x)?)? - x).abs());
    }
    let mut bvn: f64 = 0.0;
    for a in (-16..=16).map(|i| i as f64 / 4.0) {
        for b in (-16..=16).map(|i| i as f64 / 4.0) {
            bvn = bvn.max((bvn_cdf(a, b, 0.0)? - std_normal_cdf(a)? * std_normal_cdf(b)?).abs());
        }
    }
    let (mut round, mut fd): (f64, f64) = (0.0, 0.0);
    let eps = 1e-6;
    for spec in reference_specs() {
        for &u in &interior(19) {
            for &v in &interior(19) {
                round = round
                    .max((spec.h2_inv(spec.h2(u, v)?, v)? - u).abs())
                    .max((spec.h1_inv(spec.h1(u, v)?, u)? - v).abs());
                let diff = (spec.cdf(u, v + eps)? - spec.cdf(u, v - eps)?) / (2.0 * eps);
                fd = fd.max((spec.h2(u, v)? - diff).abs());
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut kendall_mismatch = 0;
    for case in 0..50 {
        let n = rng.random_range(2..=200);
        let ties = case % 2 == 0;
        let col = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..n)
                .map(|_| {
                    let x: f64 = rng.random();
                    if ties {
                        (x * 8.0).floor()
                    } else {
                        x
                    }
                })
                .collect()
        };
        let (a, b) = (col(&mut rng), col(&mut rng));
        if kendall_emp(&a, &b).ok() != kendall_brute(&a, &b).ok() {
            kendall_mismatch += 1;
        }
    }
    let mut kdd_mismatch = 0;
    for _ in 0..50 {
        let n = rng.random_range(3..=50);
        let a: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        if kdd_emp(&a, &b)? != kdd_emp_brute(&a, &b)? {
            kdd_mismatch += 1;
        }
    }
    Ok(Verdict::new(
        normal <= 1e-12 && bvn <= 1e-10 && round <= 1e-8 && fd <= 1e-6 && kendall_mismatch == 0 && kdd_mismatch == 0,
        format!(
            "quantile {normal:.1e}, bvn {bvn:.1e}, h round trip {round:.1e}, h2 fd {fd:.1e}, kendall mismatches {kendall_mismatch}/50, kdd mismatches {kdd_mismatch}/50"
        ),
    ))
}

fn read_outputs(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        // Metadata records the output directory, which differs between runs.
        if name.ends_with(".csv") {
            out.insert(name, fs::read(&path)?);
        }
    }
    Ok(out)
}

fn criterion_9() -> Result<Verdict> {
    let tmp = tempfile::tempdir()?;
    let mut runs = Vec::new();
    let mut secs: f64 = 0.0;
    for name in ["a", "b"] {
        let dir = tmp.path().join(name);
        let start = Instant::now();
        let code = cli::main_with_args([
            "pcopula",
            "sweep",
            "--workers",
            "4",
            "--out",
            dir.to_str().unwrap(),
        ]);
        secs = secs.max(start.elapsed().as_secs_f64());
        if code != 0 {
            return Ok(Verdict::new(false, format!("sweep exited with {code}")));
        }
        runs.push(read_outputs(&dir)?);
    }
    let rows = std::str::from_utf8(&runs[0]["sweep.csv"]).map_or(0, |s| s.lines().count() - 1);
    let identical = runs[0] == runs[1];
    Ok(Verdict::new(
        secs <= 60.0 && identical && rows == scenario_table().len(),
        format!(
            "slowest run {secs:.2}s (<=60), {rows} rows, {} csv files byte-identical: {identical}",
            runs[0].len()
        ),
    ))
}

fn main() {
    let start = Instant::now();
    let certs: Result<Vec<_>> = certificate_configs()
        .into_iter()
        .map(|(_, cond)| certify_bounds(&cond).map(|c| (cond, c)))
        .collect();
    let results: Vec<(&str, Result<Verdict>)> = vec![
        (
            "conditional independence hides marginal dependence",
            criterion_1(),
        ),
        ("gaussian sign reversal", criterion_2()),
        ("sign-switching FGM cancels to independence", criterion_3()),
        ("constant conditional equals partial", criterion_4()),
        (
            "expected conditional rho identity",
            certs
                .as_ref()
                .map_err(clone_err)
                .and_then(|c| criterion_5(c)),
        ),
        (
            "bound certificates",
            certs.as_ref().map_err(clone_err).map(|c| criterion_6(c)),
        ),
        ("regression partial correlation pitfall", criterion_7()),
        ("numerics", criterion_8()),
        ("sweep runtime and reproducibility", criterion_9()),
    ];
    let mut all = true;
    for (i, (name, verdict)) in results.into_iter().enumerate() {
        let (pass, detail) = match verdict {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        all &= pass;
        println!(
            "criterion {} {} {name}: {detail}",
            i + 1,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    println!(
        "acceptance: {} in {:.1}s",
        if all { "all criteria pass" } else { "FAILURES" },
        start.elapsed().as_secs_f64()
    );
    if !all {
        std::process::exit(1);
    }
}

fn clone_err(e: &partial_copula::Error) -> partial_copula::Error {
    partial_copula::Error::Input(e.to_string())
}
