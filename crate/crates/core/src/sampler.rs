//! Three-dimensional C-vine sampling with `Z` as the root, the default
//! scenario matrix, and the Gaussian-noise pitfall generator.

use std::fmt;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::fmt17;
use crate::numerics::{clamp_prob, std_normal_cdf, std_normal_quantile};
use crate::pair_copulas::{Family, PairCopulaSpec, Rotation};
use crate::partial::{ConditionalFamily, ThetaFunction};

/// Pinned generator description, written into run metadata.
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9); seed_from_u64(seed), stream = row index";

pub const DEFAULT_N: usize = 5000;
pub const DEFAULT_SEED: u64 = 42;

/// Three uniforms for row `row`, independent of every other row.
fn row_uniforms(seed: u64, row: usize) -> [f64; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row as u64);
    std::array::from_fn(|_| clamp_prob(rng.sample::<f64, _>(Open01)))
}

/// Pair copulas `C_XZ`, `C_YZ` and the conditional copula `C_{X,Y|Z}`.
#[derive(Debug, Clone, PartialEq)]
pub struct VineModel {
    pub c_xz: PairCopulaSpec,
    pub c_yz: PairCopulaSpec,
    pub cond: ConditionalFamily,
}

impl VineModel {
    pub fn new(c_xz: PairCopulaSpec, c_yz: PairCopulaSpec, cond: ConditionalFamily) -> Self {
        Self { c_xz, c_yz, cond }
    }

    pub fn independence() -> Self {
        Self::new(
            PairCopulaSpec::independence(),
            PairCopulaSpec::independence(),
            ConditionalFamily::independence(),
        )
    }
}

/// Raw draws kept for round-trip checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Internals {
    pub w_x: Vec<f64>,
    pub w_y: Vec<f64>,
    pub u_y: Vec<f64>,
}

/// A sample on the copula scale.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTriples {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub seed: u64,
    pub internals: Option<Internals>,
}

impl SampleTriples {
    pub fn n(&self) -> usize {
        self.z.len()
    }
}

/// Draws `n` rows from the vine. Row `i` depends only on `(seed, i)`.
pub fn sample_cvine(model: &VineModel, n: usize, seed: u64) -> Result<SampleTriples> {
    if n == 0 {
        return Err(Error::Input("sample size must be at least 1".into()));
    }
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let [w_z, w_x, w_y] = row_uniforms(seed, i);
            let row = || -> Result<[f64; 6]> {
                let (z, u_x) = (w_z, w_x);
                let u_y = model.cond.at(z).h1_inv(w_y, u_x)?;
                let x = model.c_xz.h2_inv(u_x, z)?;
                let y = model.c_yz.h2_inv(u_y, z)?;
                Ok([x, y, z, w_x, w_y, u_y])
            };
            row().map_err(|e| Error::Sampling {
                row: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
    Ok(SampleTriples {
        x: col(0),
        y: col(1),
        z: col(2),
        seed,
        internals: Some(Internals {
            w_x: col(3),
            w_y: col(4),
            u_y: col(5),
        }),
    })
}

/// Dependence sign of one edge of the vine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Pos,
    Neg,
    Ind,
}

impl Sign {
    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Pos => "+",
            Sign::Neg => "-",
            Sign::Ind => "ind",
        }
    }
}

/// Sign triplets `(XZ, YZ, XY|Z)` for scenarios 1 to 10.
pub const SCENARIO_SIGNS: [(Sign, Sign, Sign); 10] = {
    use Sign::*;
    [
        (Pos, Pos, Pos),
        (Pos, Pos, Ind),
        (Neg, Neg, Ind),
        (Pos, Neg, Ind),
        (Pos, Pos, Neg),
        (Neg, Neg, Pos),
        (Neg, Neg, Neg),
        (Pos, Neg, Pos),
        (Pos, Neg, Neg),
        (Ind, Ind, Pos),
    ]
};

/// Families swept in scenarios 1 to 10, in output order.
pub const SCENARIO_FAMILIES: [Family; 4] = [
    Family::Frank,
    Family::Gumbel,
    Family::Clayton,
    Family::Gaussian,
];

fn default_magnitude(family: Family) -> f64 {
    match family {
        Family::Gaussian => 0.6,
        Family::Frank => 5.0,
        Family::Clayton | Family::Gumbel => 2.0,
        Family::Fgm => 1.0,
        Family::Independence => 0.0,
    }
}

fn signed_spec(family: Family, magnitude: f64, sign: Sign) -> PairCopulaSpec {
    let spec = match sign {
        Sign::Ind => return PairCopulaSpec::independence(),
        Sign::Pos => PairCopulaSpec::new(family, magnitude, Rotation::R0),
        Sign::Neg => match family {
            Family::Clayton | Family::Gumbel => {
                PairCopulaSpec::new(family, magnitude, Rotation::R90)
            }
            _ => PairCopulaSpec::new(family, -magnitude, Rotation::R0),
        },
    };
    spec.expect("default scenario parameters are admissible")
}

/// One row of the default scenario matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// `1` to `10`, or `11a`, `11b`, `11c`.
    pub scenario: String,
    pub family: Family,
    pub model: VineModel,
    pub n: usize,
    pub seed: u64,
}

impl ScenarioConfig {
    /// File-name friendly identifier such as `2-gaussian`.
    pub fn id(&self) -> String {
        format!("{}-{}", self.scenario, self.family.name())
    }

    /// `(θ_XZ, θ_YZ, θ_XY|Z)` with rotations marked, e.g. `(2@90, 2@90, ind)`.
    pub fn params(&self) -> String {
        let edge = |s: &PairCopulaSpec| match (s.family(), s.rotation()) {
            (Family::Independence, _) => "ind".to_string(),
            (_, Rotation::R0) => s.theta().to_string(),
            (_, r) => format!("{}@{}", s.theta(), r.degrees()),
        };
        let cond = &self.model.cond;
        let c = if cond.is_constant() {
            edge(&cond.at(0.0))
        } else if cond.rotation() == Rotation::R0 {
            cond.theta_fn().to_string()
        } else {
            format!("{}@{}", cond.theta_fn(), cond.rotation().degrees())
        };
        format!(
            "({}, {}, {})",
            edge(&self.model.c_xz),
            edge(&self.model.c_yz),
            c
        )
    }

    pub fn with_sample(mut self, n: usize, seed: u64) -> Self {
        self.n = n;
        self.seed = seed;
        self
    }

    pub fn sample(&self) -> Result<SampleTriples> {
        sample_cvine(&self.model, self.n, self.seed)
    }
}

impl fmt::Display for ScenarioConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.id(), self.params())
    }
}

/// The default scenario matrix: scenarios 1 to 10 for each of
/// [`SCENARIO_FAMILIES`], then 11a, 11b, 11c.
pub fn scenario_table() -> Vec<ScenarioConfig> {
    let mut out = Vec::new();
    for (idx, &(sxz, syz, sc)) in SCENARIO_SIGNS.iter().enumerate() {
        let scenario = idx + 1;
        for family in SCENARIO_FAMILIES {
            let (mxz, myz, mc) = match (family, scenario) {
                // Large enough edges for the sign flip to be visible.
                (Family::Gaussian, 5 | 7 | 8) => (0.7, 0.7, 0.3),
                _ => {
                    let m = default_magnitude(family);
                    (m, m, m)
                }
            };
            let model = VineModel::new(
                signed_spec(family, mxz, sxz),
                signed_spec(family, myz, syz),
                ConditionalFamily::constant(signed_spec(family, mc, sc)),
            );
            out.push(ScenarioConfig {
                scenario: scenario.to_string(),
                family,
                model,
                n: DEFAULT_N,
                seed: DEFAULT_SEED,
            });
        }
    }
    let edge = PairCopulaSpec::gaussian(0.6).expect("valid");
    for (sub, family, theta_fn) in [
        ("11a", Family::Frank, ThetaFunction::ExpZ),
        ("11b", Family::Frank, ThetaFunction::NegExpZ),
        ("11c", Family::Gaussian, ThetaFunction::OneMinus2z),
    ] {
        let cond = ConditionalFamily::new(family, theta_fn).expect("valid");
        out.push(ScenarioConfig {
            scenario: sub.into(),
            family,
            model: VineModel::new(edge, edge, cond),
            n: DEFAULT_N,
            seed: DEFAULT_SEED,
        });
    }
    out
}

/// Looks up a scenario. `family` may be omitted when the scenario has a
/// single family (11a, 11b, 11c).
pub fn find_scenario(scenario: &str, family: Option<Family>) -> Result<ScenarioConfig> {
    let table = scenario_table();
    let matching: Vec<_> = table.iter().filter(|c| c.scenario == scenario).collect();
    if matching.is_empty() {
        let mut ids: Vec<&str> = table.iter().map(|c| c.scenario.as_str()).collect();
        ids.dedup();
        return Err(Error::Usage(format!(
            "unknown scenario `{scenario}`; valid scenarios: {}",
            ids.join(", ")
        )));
    }
    let list = || {
        matching
            .iter()
            .map(|c| c.family.name())
            .collect::<Vec<_>>()
            .join(", ")
    };
    match family {
        Some(f) => matching
            .iter()
            .find(|c| c.family == f)
            .map(|c| (*c).clone())
            .ok_or_else(|| {
                Error::Usage(format!(
                    "scenario {scenario} has no `{f}` config; valid families: {}",
                    list()
                ))
            }),
        None if matching.len() == 1 => Ok(matching[0].clone()),
        None => Err(Error::Usage(format!(
            "scenario {scenario} needs --family; valid families: {}",
            list()
        ))),
    }
}

/// Natural-scale sample with exact conditional-CDF pseudo-observations.
#[derive(Debug, Clone, PartialEq)]
pub struct PitfallSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub u_x: Vec<f64>,
    pub u_y: Vec<f64>,
}

/// `Z ~ N(0, 1)`, `X = Z² + σε₁`, `Y = Z² + σε₂`; `U_X = Φ(ε₁)`, `U_Y = Φ(ε₂)`.
pub fn sample_pitfall(sigma: f64, n: usize, seed: u64) -> Result<PitfallSample> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Usage(format!("sigma must be positive, got {sigma}")));
    }
    if n == 0 {
        return Err(Error::Input("sample size must be at least 1".into()));
    }
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let [a, b, c] = row_uniforms(seed, i);
            let z = std_normal_quantile(a)?;
            let e1 = std_normal_quantile(b)?;
            let e2 = std_normal_quantile(c)?;
            Ok((
                z * z + sigma * e1,
                z * z + sigma * e2,
                z,
                std_normal_cdf(e1)?,
                std_normal_cdf(e2)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = PitfallSample {
        x: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
        z: Vec::with_capacity(n),
        u_x: Vec::with_capacity(n),
        u_y: Vec::with_capacity(n),
    };
    for (x, y, z, u, v) in rows {
        out.x.push(x);
        out.y.push(y);
        out.z.push(z);
        out.u_x.push(u);
        out.u_y.push(v);
    }
    Ok(out)
}

/// Rows of `x,y,z` rendered for CSV output.
pub fn triple_records(s: &SampleTriples) -> impl Iterator<Item = [String; 3]> + '_ {
    (0..s.n()).map(|i| [fmt17(s.x[i]), fmt17(s.y[i]), fmt17(s.z[i])])
}

#[cfg(test)]
mod tests;
