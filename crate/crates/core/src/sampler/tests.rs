use super::*;
use crate::measures::{kendall_emp, pearson, spearman_emp};
use crate::partial::{partial_rho, pseudo_observations};

fn moments(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n)
}

#[test]
fn deterministic_and_row_keyed() {
    let cfg = find_scenario("5", Some(Family::Clayton)).unwrap();
    let a = sample_cvine(&cfg.model, 300, 9).unwrap();
    let b = sample_cvine(&cfg.model, 300, 9).unwrap();
    assert_eq!(a, b);
    let prefix = sample_cvine(&cfg.model, 100, 9).unwrap();
    assert_eq!(prefix.x[..], a.x[..100]);
    let other = sample_cvine(&cfg.model, 300, 10).unwrap();
    assert_ne!(other.z, a.z);
    assert!(sample_cvine(&cfg.model, 0, 9).is_err());
}

#[test]
fn independence_model_gives_independent_columns() {
    let s = sample_cvine(&VineModel::independence(), 5000, 42).unwrap();
    let int = s.internals.as_ref().unwrap();
    assert_eq!(s.x, int.w_x);
    assert_eq!(s.y, int.w_y);
    for (a, b) in [(&s.x, &s.y), (&s.x, &s.z), (&s.y, &s.z)] {
        assert!(spearman_emp(a, b).unwrap().abs() <= 0.03);
    }
}

#[test]
fn pseudo_observations_recover_internal_draws() {
    for cfg in scenario_table().iter().step_by(3) {
        let s = sample_cvine(&cfg.model, 400, 1).unwrap();
        let p = pseudo_observations(&s, &cfg.model.c_xz, &cfg.model.c_yz).unwrap();
        let int = s.internals.as_ref().unwrap();
        for i in 0..s.n() {
            assert!(
                (p.u_x[i] - int.w_x[i]).abs() <= 1e-8,
                "{} row {i}",
                cfg.id()
            );
            assert!(
                (p.u_y[i] - int.u_y[i]).abs() <= 1e-8,
                "{} row {i}",
                cfg.id()
            );
        }
    }
}

#[test]
fn scenario_table_shape_and_signs() {
    let table = scenario_table();
    assert_eq!(table.len(), 43);
    let mut ids: Vec<String> = table.iter().map(|c| c.id()).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 43);

    let sign_of = |s: &PairCopulaSpec| {
        if s.family() == Family::Independence {
            Sign::Ind
        } else if s.theta() < 0.0 || matches!(s.rotation(), Rotation::R90 | Rotation::R270) {
            Sign::Neg
        } else {
            Sign::Pos
        }
    };
    for cfg in &table[..40] {
        let k: usize = cfg.scenario.parse().unwrap();
        let (sxz, syz, sc) = SCENARIO_SIGNS[k - 1];
        assert_eq!(sign_of(&cfg.model.c_xz), sxz, "{}", cfg.id());
        assert_eq!(sign_of(&cfg.model.c_yz), syz, "{}", cfg.id());
        assert_eq!(sign_of(&cfg.model.cond.at(0.5)), sc, "{}", cfg.id());
    }
    let g1 = find_scenario("1", Some(Family::Gaussian)).unwrap();
    assert_eq!(g1.params(), "(0.6, 0.6, 0.6)");
    let c3 = find_scenario("3", Some(Family::Clayton)).unwrap();
    assert_eq!(c3.params(), "(2@90, 2@90, ind)");
    let g7 = find_scenario("7", Some(Family::Gaussian)).unwrap();
    assert_eq!(g7.params(), "(-0.7, -0.7, -0.3)");
    assert_eq!(
        find_scenario("11c", None).unwrap().params(),
        "(0.6, 0.6, one-minus-2z)"
    );
}

#[test]
fn find_scenario_errors_list_valid_choices() {
    let e = find_scenario("12", None).unwrap_err().to_string();
    assert!(e.contains("11c"), "{e}");
    let e = find_scenario("2", None).unwrap_err().to_string();
    assert!(e.contains("gumbel"), "{e}");
    let e = find_scenario("11a", Some(Family::Gaussian))
        .unwrap_err()
        .to_string();
    assert!(e.contains("frank"), "{e}");
}

#[test]
fn margins_uniform_and_partial_matches_analytics() {
    for cfg in scenario_table() {
        let s = cfg.sample().unwrap();
        for col in [&s.x, &s.y, &s.z] {
            let (m, v) = moments(col);
            assert!((m - 0.5).abs() <= 0.02, "{} mean {m}", cfg.id());
            assert!((v - 1.0 / 12.0).abs() <= 0.01, "{} var {v}", cfg.id());
        }
        let p = pseudo_observations(&s, &cfg.model.c_xz, &cfg.model.c_yz).unwrap();
        let emp = spearman_emp(&p.u_x, &p.u_y).unwrap();
        let ana = partial_rho(&cfg.model.cond).unwrap();
        assert!((emp - ana).abs() <= 0.045, "{}: {emp} vs {ana}", cfg.id());
        if cfg.scenario == "10" {
            let marginal = spearman_emp(&s.x, &s.y).unwrap();
            assert!((marginal - emp).abs() <= 0.045, "{}", cfg.id());
        }
    }
}

#[test]
fn conditional_independence_hides_marginal_dependence() {
    let cfg = find_scenario("2", Some(Family::Gaussian)).unwrap();
    let s = cfg.sample().unwrap();
    let p = pseudo_observations(&s, &cfg.model.c_xz, &cfg.model.c_yz).unwrap();
    assert!(spearman_emp(&s.x, &s.y).unwrap() >= 0.2);
    assert!(spearman_emp(&p.u_x, &p.u_y).unwrap().abs() <= 0.035);
    assert!(kendall_emp(&p.u_x, &p.u_y).unwrap().abs() <= 0.03);
}

#[test]
fn gaussian_sign_flip_matches_trivariate_oracle() {
    let cfg = find_scenario("7", Some(Family::Gaussian)).unwrap();
    let s = cfg.sample().unwrap();
    let to_normal =
        |c: &[f64]| -> Vec<f64> { c.iter().map(|&u| std_normal_quantile(u).unwrap()).collect() };
    let r = pearson(&to_normal(&s.x), &to_normal(&s.y)).unwrap();
    let oracle = 0.49 - 0.3 * 0.51;
    assert!((r - oracle).abs() <= 0.04, "{r} vs {oracle}");
}

#[test]
fn pitfall_generator() {
    assert!(sample_pitfall(0.0, 10, 1).is_err());
    assert!(sample_pitfall(-1.0, 10, 1).is_err());
    let s = sample_pitfall(100.0, 5000, 42).unwrap();
    assert!((pearson(&s.x, &s.y).unwrap() - 2.0 / (2.0 + 1e4)).abs() <= 0.05);
    let s = sample_pitfall(0.5, 5000, 42).unwrap();
    assert!(spearman_emp(&s.u_x, &s.u_y).unwrap().abs() <= 0.035);
    assert_eq!(s, sample_pitfall(0.5, 5000, 42).unwrap());
}
