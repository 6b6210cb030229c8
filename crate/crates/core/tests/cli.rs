use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pcopula(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcopula"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn records(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn header(path: &Path) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().map(str::to_string).collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn summary(dir: &Path, id: &str) -> (f64, f64) {
    let rows = records(&dir.join(format!("summary_{id}.csv")));
    assert_eq!(rows[0][0], "x~y");
    assert_eq!(rows[1][0], "u_x~u_y");
    (num(&rows[0][1]), num(&rows[1][1]))
}

#[test]
fn simulate_writes_reproducible_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let run = pcopula(&[
        "simulate",
        "--scenario",
        "2",
        "--family",
        "gaussian",
        "--seed",
        "42",
        "--out",
        out,
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );

    let samples = tmp.path().join("samples_2-gaussian.csv");
    assert_eq!(header(&samples), ["x", "y", "z", "u_x", "u_y"]);
    let rows = records(&samples);
    assert_eq!(rows.len(), 5000);
    assert!(rows.iter().flatten().all(|c| (0.0..=1.0).contains(&num(c))));
    let (marginal, partial) = summary(tmp.path(), "2-gaussian");
    assert!(marginal >= 0.2, "{marginal}");
    assert!(partial.abs() <= 0.035, "{partial}");

    let meta = fs::read_to_string(tmp.path().join("meta_2-gaussian.txt")).unwrap();
    for key in [
        "rng = \"ChaCha8Rng",
        "seed = 42",
        "n = 5000",
        "artifact_version",
        "[config.grid]",
    ] {
        assert!(meta.contains(key), "{key} missing from\n{meta}");
    }

    let first = fs::read(&samples).unwrap();
    let again = pcopula(&[
        "simulate",
        "--scenario",
        "2",
        "--family",
        "gaussian",
        "--out",
        out,
    ]);
    assert!(again.status.success());
    assert_eq!(first, fs::read(&samples).unwrap());
}

#[test]
fn simulate_no_confounding_and_cancellation() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert!(pcopula(&[
        "simulate",
        "--scenario",
        "10",
        "--family",
        "clayton",
        "--out",
        out
    ])
    .status
    .success());
    let (marginal, partial) = summary(tmp.path(), "10-clayton");
    assert!((marginal - partial).abs() <= 0.045);

    assert!(pcopula(&["simulate", "--scenario", "11c", "--out", out])
        .status
        .success());
    let (_, partial) = summary(tmp.path(), "11c-gaussian");
    assert!(partial.abs() <= 0.035, "{partial}");
}

#[test]
fn usage_errors_list_valid_choices() {
    let run = pcopula(&["simulate", "--scenario", "12", "--out", "unused"]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("11a"));

    let run = pcopula(&[
        "simulate",
        "--scenario",
        "3",
        "--family",
        "student",
        "--out",
        "unused",
    ]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("gaussian"));

    let run = pcopula(&[
        "eval",
        "--family",
        "gumbel",
        "--theta-fn",
        "negexp",
        "--out",
        "unused",
    ]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("theta >= 1"));

    let run = pcopula(&["pitfall", "--sigma", "0", "--out", "unused"]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn config_file_and_flag_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    let out = tmp.path().join("o");
    fs::write(
        &cfg,
        format!(
            "command = \"simulate\"\nscenario = \"5\"\nfamily = \"frank\"\nn = 200\nseed = 7\nout_dir = {:?}\n",
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let run = pcopula(&["simulate", "--config", cfg.to_str().unwrap(), "--n", "300"]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let meta = fs::read_to_string(out.join("meta_5-frank.txt")).unwrap();
    assert!(
        meta.contains("n = 300") && meta.contains("seed = 7"),
        "{meta}"
    );
    assert_eq!(records(&out.join("samples_5-frank.csv")).len(), 300);

    let run = pcopula(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
}

type EvalGrid = Vec<(f64, f64, f64)>;

fn eval_values(dir: &Path) -> (EvalGrid, std::collections::HashMap<String, f64>) {
    let mut grid = Vec::new();
    let mut scalars = std::collections::HashMap::new();
    for row in records(&dir.join("eval.csv")) {
        if row[0] == "partial_cdf" {
            grid.push((num(&row[1]), num(&row[2]), num(&row[3])));
        } else {
            scalars.insert(row[0].clone(), num(&row[3]));
        }
    }
    (grid, scalars)
}

#[test]
fn eval_sign_switching_fgm() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let run = pcopula(&[
        "eval",
        "--family",
        "fgm",
        "--theta-fn",
        "table:0:-1;1:1",
        "--out",
        out,
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let (grid, scalars) = eval_values(tmp.path());
    assert_eq!(grid.len(), 441);
    assert!(grid.iter().all(|&(u, v, c)| (c - u * v).abs() <= 1e-8));
    assert!((scalars["conditional_kdd_sup"] - 0.25).abs() <= 1e-3);

    let cert = tmp.path().join("certificate.csv");
    assert_eq!(header(&cert)[0], "config");
    let row = &records(&cert)[0];
    assert!(row[7..].iter().all(|f| f == "true"), "{row:?}");
}

#[test]
fn eval_constant_families() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert!(pcopula(&[
        "eval",
        "--family",
        "clayton",
        "--theta-fn",
        "const:2",
        "--out",
        out
    ])
    .status
    .success());
    let (_, s) = eval_values(tmp.path());
    assert!((s["partial_tau"] - 0.5).abs() <= 1e-5);

    assert!(pcopula(&[
        "eval",
        "--family",
        "indep",
        "--theta-fn",
        "const:0",
        "--out",
        out
    ])
    .status
    .success());
    let (grid, s) = eval_values(tmp.path());
    assert!(grid.iter().all(|&(u, v, c)| (c - u * v).abs() <= 1e-12));
    for key in [
        "partial_rho",
        "partial_tau",
        "conditional_kdd_sup",
        "partial_kdd",
    ] {
        assert!(s[key].abs() <= 1e-12, "{key} = {}", s[key]);
    }

    assert!(pcopula(&[
        "eval",
        "--family",
        "gumbel@270",
        "--theta-fn",
        "exp",
        "--out",
        out
    ])
    .status
    .success());
    let (_, s) = eval_values(tmp.path());
    assert!(s["partial_rho"] < 0.0);
}

#[test]
fn pitfall_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert!(pcopula(&["pitfall", "--out", out]).status.success());
    let path = tmp.path().join("pitfall.csv");
    assert_eq!(
        header(&path),
        [
            "sigma",
            "pearson_marginal",
            "partial_correlation",
            "theory",
            "partial_copula_rho"
        ]
    );
    let rows = records(&path);
    let sigmas: Vec<f64> = rows.iter().map(|r| num(&r[0])).collect();
    assert_eq!(sigmas, [0.1, 0.5, 1.0, 2.0]);
    assert!((num(&rows[0][2]) - 2.0 / 2.01).abs() <= 0.02);
    assert!((num(&rows[3][3]) - 1.0 / 3.0).abs() <= 1e-15);
    assert!(rows.iter().all(|r| num(&r[4]).abs() <= 0.035));

    assert!(pcopula(&["pitfall", "--sigma", "3", "--out", out])
        .status
        .success());
    assert_eq!(records(&path).len(), 5);
}

#[test]
fn verify_mutation_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let args = ["verify", "--check", "h2_finite_difference", "--out", out];
    assert_eq!(pcopula(&args).status.code(), Some(0));
    let mut mutated = args.to_vec();
    mutated.push("--mutate-gumbel-h2");
    assert_eq!(pcopula(&mutated).status.code(), Some(1));
    let report = fs::read_to_string(tmp.path().join("verify_report.txt")).unwrap();
    assert!(report.starts_with("FAIL h2_finite_difference"), "{report}");
}

#[test]
fn verify_full_suite_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let run = pcopula(&["verify", "--out", tmp.path().to_str().unwrap()]);
    let report = fs::read_to_string(tmp.path().join("verify_report.txt")).unwrap();
    assert_eq!(run.status.code(), Some(0), "{report}");
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines.len(), partial_copula::verify::check_names().len());
    assert!(lines.iter().all(|l| l.starts_with("PASS ")), "{report}");
}
