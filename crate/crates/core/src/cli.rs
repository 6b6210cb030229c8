//! The `pcopula` command line.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{unit_grid, GridConfig};
use crate::io::{fmt17, write_csv};
use crate::measures::{partial_correlation, pearson, spearman_emp, DependenceSummary};
use crate::pair_copulas::{Family, Rotation};
use crate::partial::{
    certify_bounds_with, partial_cdf, partial_rho, partial_rho_from_cdf, partial_tau,
    pseudo_observations, BoundCertificate, ConditionalFamily, PseudoPairs, ThetaFunction,
};
use crate::sampler::{
    find_scenario, sample_pitfall, scenario_table, triple_records, SampleTriples, ScenarioConfig,
    DEFAULT_N, DEFAULT_SEED, RNG_NAME,
};
use crate::verify::{run_suite, VerifyOptions};

/// Noise levels always reported by `pitfall`.
pub const PITFALL_SIGMAS: [f64; 4] = [0.1, 0.5, 1.0, 2.0];

#[derive(Debug, Parser)]
#[command(
    name = "pcopula",
    version,
    about = "Partial copulas: simulation, analytic evaluation and verification"
)]
pub struct Cli {
    /// TOML file with run-config fields. Flags take precedence over it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample one scenario and summarise marginal and partial dependence.
    Simulate(SimulateArgs),
    /// Run every scenario configuration.
    Sweep(SweepArgs),
    /// Evaluate a partial copula and its bound certificate analytically.
    Eval(EvalArgs),
    /// Run the invariant suite.
    Verify(VerifyArgs),
    /// Residual partial correlation versus the partial copula under Z² confounding.
    Pitfall(PitfallArgs),
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Sample size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Random seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario id: 1 to 10, 11a, 11b or 11c.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Copula family (frank, gumbel, clayton, gaussian).
    #[arg(long)]
    pub family: Option<String>,
    #[command(flatten)]
    pub sample: SampleArgs,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub sample: SampleArgs,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Conditional family, optionally rotated: `clayton@90`.
    #[arg(long)]
    pub family: Option<String>,
    /// θ(z): const:<v>, exp, negexp, one-minus-2z or table:<z>:<θ>;...
    #[arg(long, value_name = "SPEC", allow_hyphen_values = true)]
    pub theta_fn: Option<String>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Run only the named check (repeatable).
    #[arg(long = "check", value_name = "NAME")]
    pub checks: Vec<String>,
    /// Corrupt the Gumbel h2 used by the finite-difference check.
    #[arg(long, hide = true)]
    pub mutate_gumbel_h2: bool,
}

#[derive(Debug, Args)]
pub struct PitfallArgs {
    /// Extra noise level reported alongside 0.1, 0.5, 1 and 2.
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<f64>,
    #[command(flatten)]
    pub sample: SampleArgs,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

/// Run configuration as read from a `--config` file. Every field is
/// optional; flags override it and defaults fill the rest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub scenario: Option<String>,
    pub family: Option<String>,
    /// θ(z) for `eval`, σ for `pitfall`.
    pub params: Option<String>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub grid: Option<GridConfig>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text)
            .map_err(|e| Error::Usage(format!("config file {}: {e}", path.display())))
    }
}

/// Fully resolved configuration, as recorded in run metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<String>,
    pub n: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub grid: GridConfig,
}

/// Whether a command produced FAIL or error rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

/// Parses arguments, runs the command and maps the outcome to an exit code:
/// 0 on success, 1 when FAIL or error rows were produced, 2 on errors.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(Outcome::Pass) => 0,
        Ok(Outcome::Fail) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let file = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let name = match &cli.command {
        Command::Simulate(_) => "simulate",
        Command::Sweep(_) => "sweep",
        Command::Eval(_) => "eval",
        Command::Verify(_) => "verify",
        Command::Pitfall(_) => "pitfall",
    };
    if let Some(c) = &file.command {
        if c != name {
            return Err(Error::Usage(format!(
                "config file is for `{c}`, not `{name}`"
            )));
        }
    }
    let grid = file.grid.unwrap_or_default();
    grid.validate()?;
    let base = |out: &Option<PathBuf>, sample: Option<&SampleArgs>| ResolvedConfig {
        command: name.into(),
        scenario: None,
        family: None,
        params: None,
        n: sample.and_then(|s| s.n).or(file.n).unwrap_or(DEFAULT_N),
        seed: sample
            .and_then(|s| s.seed)
            .or(file.seed)
            .unwrap_or(DEFAULT_SEED),
        out_dir: out
            .clone()
            .or_else(|| file.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from(".")),
        grid,
    };
    match cli.command {
        Command::Simulate(a) => {
            let mut cfg = base(&a.out, Some(&a.sample));
            cfg.scenario = a.scenario.or_else(|| file.scenario.clone());
            cfg.family = a.family.or_else(|| file.family.clone());
            reject_params(&file, name)?;
            cmd_simulate(&cfg)
        }
        Command::Sweep(a) => {
            let cfg = base(&a.out, Some(&a.sample));
            reject_params(&file, name)?;
            let workers = a
                .workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            cmd_sweep(&cfg, workers)
        }
        Command::Eval(a) => {
            let mut cfg = base(&a.out, None);
            cfg.family = a.family.or_else(|| file.family.clone());
            cfg.params = a.theta_fn.or_else(|| file.params.clone());
            cmd_eval(&cfg)
        }
        Command::Verify(a) => {
            let cfg = base(&a.out, None);
            cmd_verify(&cfg, a.checks, a.mutate_gumbel_h2)
        }
        Command::Pitfall(a) => {
            let mut cfg = base(&a.out, Some(&a.sample));
            cfg.params = match a.sigma {
                Some(s) => Some(s.to_string()),
                None => file.params.clone(),
            };
            cmd_pitfall(&cfg)
        }
    }
}

fn reject_params(file: &RunConfig, command: &str) -> Result<()> {
    match file.params {
        Some(_) => Err(Error::Usage(format!("`params` is not used by `{command}`"))),
        None => Ok(()),
    }
}

fn out_dir(cfg: &ResolvedConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out_dir)?;
    Ok(&cfg.out_dir)
}

#[derive(Serialize)]
struct Meta<'a> {
    artifact_version: &'static str,
    rng: &'static str,
    seed: u64,
    id: &'a str,
    model_params: &'a str,
    note: &'static str,
    config: &'a ResolvedConfig,
}

fn write_meta(path: &Path, cfg: &ResolvedConfig, id: &str, model_params: &str) -> Result<()> {
    let meta = Meta {
        artifact_version: env!("CARGO_PKG_VERSION"),
        rng: RNG_NAME,
        seed: cfg.seed,
        id,
        model_params,
        note:
            "scenario parameter magnitudes are artifact defaults; only their signs are prescribed",
        config: cfg,
    };
    let text = toml::to_string(&meta).map_err(|e| Error::Input(format!("metadata: {e}")))?;
    fs::write(path, text)?;
    Ok(())
}

fn write_samples(path: &Path, s: &SampleTriples, p: &PseudoPairs) -> Result<()> {
    let rows = triple_records(s)
        .zip(p.u_x.iter().zip(&p.u_y))
        .map(|([x, y, z], (u, v))| [x, y, z, fmt17(*u), fmt17(*v)]);
    write_csv(path, &["x", "y", "z", "u_x", "u_y"], rows)
}

fn write_summary(path: &Path, rows: &[DependenceSummary]) -> Result<()> {
    write_csv(
        path,
        &DependenceSummary::CSV_HEADER,
        rows.iter().map(|r| r.csv_record()),
    )
}

struct ScenarioRun {
    sample: SampleTriples,
    pseudo: PseudoPairs,
    marginal: DependenceSummary,
    partial: DependenceSummary,
}

fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun> {
    let sample = cfg.sample()?;
    let pseudo = pseudo_observations(&sample, &cfg.model.c_xz, &cfg.model.c_yz)?;
    let marginal = DependenceSummary::compute("x~y", &sample.x, &sample.y)?;
    let partial = DependenceSummary::compute("u_x~u_y", &pseudo.u_x, &pseudo.u_y)?;
    Ok(ScenarioRun {
        sample,
        pseudo,
        marginal,
        partial,
    })
}

fn write_scenario(dir: &Path, id: &str, run: &ScenarioRun) -> Result<()> {
    write_samples(
        &dir.join(format!("samples_{id}.csv")),
        &run.sample,
        &run.pseudo,
    )?;
    write_summary(
        &dir.join(format!("summary_{id}.csv")),
        &[run.marginal.clone(), run.partial.clone()],
    )
}

pub fn cmd_simulate(cfg: &ResolvedConfig) -> Result<Outcome> {
    let scenario = cfg.scenario.as_deref().ok_or_else(|| {
        Error::Usage("simulate needs --scenario; valid scenarios: 1-10, 11a, 11b, 11c".into())
    })?;
    let family = cfg
        .family
        .as_deref()
        .map(str::parse::<Family>)
        .transpose()?;
    let scenario_cfg = find_scenario(scenario, family)?.with_sample(cfg.n, cfg.seed);
    let mut cfg = cfg.clone();
    cfg.family = Some(scenario_cfg.family.name().into());
    let dir = out_dir(&cfg)?;
    let id = scenario_cfg.id();
    let run = run_scenario(&scenario_cfg)?;
    write_scenario(dir, &id, &run)?;
    write_meta(
        &dir.join(format!("meta_{id}.txt")),
        &cfg,
        &id,
        &scenario_cfg.params(),
    )?;
    for s in [&run.marginal, &run.partial] {
        println!(
            "{id} {:<8} spearman={:+.4} kendall={:+.4} kdd={:.4} n={}",
            s.label, s.spearman, s.kendall, s.kdd, s.n
        );
    }
    Ok(Outcome::Pass)
}

pub const SWEEP_HEADER: [&str; 13] = [
    "config",
    "scenario",
    "family",
    "params",
    "n",
    "seed",
    "marginal_rho",
    "marginal_tau",
    "partial_rho",
    "partial_tau",
    "analytic_partial_rho",
    "analytic_partial_tau",
    "status",
];

pub fn cmd_sweep(cfg: &ResolvedConfig, workers: usize) -> Result<Outcome> {
    if workers == 0 {
        return Err(Error::Usage("--workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Input(format!("thread pool: {e}")))?;
    let table: Vec<ScenarioConfig> = scenario_table()
        .into_iter()
        .map(|c| c.with_sample(cfg.n, cfg.seed))
        .collect();
    let results: Vec<_> = pool.install(|| {
        table
            .par_iter()
            .map(|c| {
                let run = run_scenario(c)?;
                let rho = partial_rho(&c.model.cond)?;
                let tau = partial_tau(&c.model.cond)?;
                Ok((run, rho, tau))
            })
            .collect::<Vec<Result<_>>>()
    });

    let dir = out_dir(cfg)?;
    let mut rows = Vec::with_capacity(table.len());
    let mut all_ok = true;
    for (c, result) in table.iter().zip(results) {
        let id = c.id();
        let mut row = vec![
            id.clone(),
            c.scenario.clone(),
            c.family.name().into(),
            c.params(),
            c.n.to_string(),
            c.seed.to_string(),
        ];
        match result {
            Ok((run, rho, tau)) => {
                write_scenario(dir, &id, &run)?;
                row.extend([
                    fmt17(run.marginal.spearman),
                    fmt17(run.marginal.kendall),
                    fmt17(run.partial.spearman),
                    fmt17(run.partial.kendall),
                    fmt17(rho),
                    fmt17(tau),
                    "ok".into(),
                ]);
            }
            Err(e) => {
                all_ok = false;
                eprintln!("{id}: {e}");
                row.extend(std::iter::repeat_n(String::new(), 6));
                row.push(format!("error: {e}"));
            }
        }
        rows.push(row);
    }
    write_csv(dir.join("sweep.csv"), &SWEEP_HEADER, rows)?;
    write_meta(&dir.join("meta_sweep.txt"), cfg, "sweep", "see sweep.csv")?;
    println!(
        "sweep: {} configs, {}",
        table.len(),
        if all_ok { "all ok" } else { "with errors" }
    );
    Ok(Outcome::from_pass(all_ok))
}

/// `family` or `family@degrees`.
fn parse_rotated_family(s: &str) -> Result<(Family, Rotation)> {
    match s.split_once('@') {
        Some((f, r)) => {
            let deg: u16 = r.trim().parse().map_err(|_| {
                Error::Usage(format!("bad rotation `{r}`; expected 0, 90, 180 or 270"))
            })?;
            Ok((f.parse()?, Rotation::from_degrees(deg)?))
        }
        None => Ok((s.parse()?, Rotation::R0)),
    }
}

pub fn cmd_eval(cfg: &ResolvedConfig) -> Result<Outcome> {
    let family = cfg
        .family
        .as_deref()
        .ok_or_else(|| Error::Usage("eval needs --family".into()))?;
    let theta_fn: ThetaFunction = cfg
        .params
        .as_deref()
        .ok_or_else(|| Error::Usage("eval needs --theta-fn".into()))?
        .parse()?;
    let (family, rotation) = parse_rotated_family(family)?;
    let cond = ConditionalFamily::with_rotation(family, rotation, theta_fn)?;
    let dir = out_dir(cfg)?;
    let label = cond.label();

    let axis = unit_grid(21);
    let mut rows: Vec<[String; 4]> = Vec::with_capacity(axis.len() * axis.len() + 5);
    for &u in &axis {
        for &v in &axis {
            rows.push([
                "partial_cdf".into(),
                fmt17(u),
                fmt17(v),
                fmt17(partial_cdf(&cond, u, v)?),
            ]);
        }
    }
    let cert = certify_bounds_with(&cond, &cfg.grid, &label)?;
    let scalar =
        |name: &str, value: f64| [name.to_string(), String::new(), String::new(), fmt17(value)];
    rows.push(scalar("partial_rho", cert.rho_partial));
    rows.push(scalar("partial_rho_from_cdf", partial_rho_from_cdf(&cond)?));
    rows.push(scalar("partial_tau", cert.tau_partial));
    rows.push(scalar("conditional_kdd_sup", cert.k));
    rows.push(scalar("partial_kdd", cert.kdd_partial));
    write_csv(dir.join("eval.csv"), &["quantity", "u", "v", "value"], rows)?;
    write_csv(
        dir.join("certificate.csv"),
        &BoundCertificate::CSV_HEADER,
        [cert.csv_record()],
    )?;
    println!(
        "{label}: rho={:+.6} tau={:+.6} k={:.6} kdd={:.6} class={} certificate {}",
        cert.rho_partial,
        cert.tau_partial,
        cert.k,
        cert.kdd_partial,
        cert.partial_class,
        if cert.passed() { "PASS" } else { "FAIL" }
    );
    Ok(Outcome::from_pass(cert.passed()))
}

pub fn cmd_verify(
    cfg: &ResolvedConfig,
    only: Vec<String>,
    mutate_gumbel_h2: bool,
) -> Result<Outcome> {
    let opts = VerifyOptions {
        grid: cfg.grid,
        mutate_gumbel_h2,
        only,
    };
    let checks = run_suite(&opts)?;
    let report: String = checks.iter().map(|c| format!("{c}\n")).collect();
    let dir = out_dir(cfg)?;
    fs::write(dir.join("verify_report.txt"), &report)?;
    print!("{report}");
    Ok(Outcome::from_pass(checks.iter().all(|c| c.passed)))
}

pub const PITFALL_HEADER: [&str; 5] = [
    "sigma",
    "pearson_marginal",
    "partial_correlation",
    "theory",
    "partial_copula_rho",
];

pub fn cmd_pitfall(cfg: &ResolvedConfig) -> Result<Outcome> {
    let mut sigmas = PITFALL_SIGMAS.to_vec();
    if let Some(p) = &cfg.params {
        let sigma: f64 = p
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("sigma must be a positive number, got `{p}`")))?;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Usage(format!("sigma must be positive, got {sigma}")));
        }
        if !sigmas.contains(&sigma) {
            sigmas.push(sigma);
            sigmas.sort_by(f64::total_cmp);
        }
    }
    let mut rows = Vec::with_capacity(sigmas.len());
    for sigma in sigmas {
        let s = sample_pitfall(sigma, cfg.n, cfg.seed)?;
        let row = [
            sigma,
            pearson(&s.x, &s.y)?,
            partial_correlation(&s.x, &s.y, &s.z)?,
            2.0 / (2.0 + sigma * sigma),
            spearman_emp(&s.u_x, &s.u_y)?,
        ];
        println!(
            "sigma={sigma}: pearson={:+.4} partial_correlation={:+.4} theory={:.4} partial_copula_rho={:+.4}",
            row[1], row[2], row[3], row[4]
        );
        rows.push(row.map(fmt17));
    }
    let dir = out_dir(cfg)?;
    write_csv(dir.join("pitfall.csv"), &PITFALL_HEADER, rows)?;
    Ok(Outcome::Pass)
}
