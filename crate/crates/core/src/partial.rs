//! Partial copulas: the z-mixture of conditional copulas, pseudo-observations
//! obtained through h-functions, and the bounds the conditional copulas
//! impose on partial dependence measures.
//!
//! Everything lives in pseudo space: `Z` is uniform on `[0, 1]`, so the
//! mixing density is 1.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{unit_grid, GridConfig};
use crate::numerics::{clamp_prob, graded_gauss_legendre, integrate, PARTIAL_TOL};
use crate::pair_copulas::{
    kdd_analytic_with, kdd_of, quadrant_class, quadrant_flags, rho_s_analytic, tau_analytic,
    Family, PairCopulaSpec, QuadrantDependence, QuadrantFlags, Rotation, GAUSSIAN_RHO_CAP,
};
use crate::sampler::SampleTriples;

/// Tolerance of the z-integral of conditional Spearman correlations.
pub const RHO_TOL: f64 = 1e-7;

/// Slack granted to every bound in a [`BoundCertificate`].
pub const CERTIFICATE_TOL: f64 = 1e-6;

/// Map from `z ∈ [0, 1]` to the conditional copula parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum ThetaFunction {
    Constant(f64),
    /// `exp(z)`
    ExpZ,
    /// `−exp(z)`
    NegExpZ,
    /// `1 − 2z`
    OneMinus2z,
    /// Piecewise-linear interpolation of `(z, θ)` knots.
    Table(Vec<(f64, f64)>),
}

impl ThetaFunction {
    /// Knots must be strictly increasing in `z`, start at 0 and end at 1.
    pub fn table(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Input("theta table needs at least two knots".into()));
        }
        if knots.iter().any(|(z, t)| !z.is_finite() || !t.is_finite()) {
            return Err(Error::Input("theta table knots must be finite".into()));
        }
        if knots.windows(2).any(|p| p[0].0 >= p[1].0) {
            return Err(Error::Input(
                "theta table knots must be strictly increasing in z".into(),
            ));
        }
        if knots[0].0 != 0.0 || knots[knots.len() - 1].0 != 1.0 {
            return Err(Error::Input(
                "theta table knots must cover [0, 1] exactly".into(),
            ));
        }
        Ok(ThetaFunction::Table(knots))
    }

    /// `2z − 1`, the sign-switching FGM parameter.
    pub fn two_z_minus_one() -> Self {
        ThetaFunction::Table(vec![(0.0, -1.0), (1.0, 1.0)])
    }

    pub fn eval(&self, z: f64) -> f64 {
        match self {
            ThetaFunction::Constant(v) => *v,
            ThetaFunction::ExpZ => z.exp(),
            ThetaFunction::NegExpZ => -z.exp(),
            ThetaFunction::OneMinus2z => 1.0 - 2.0 * z,
            ThetaFunction::Table(knots) => {
                let i = knots.partition_point(|&(kz, _)| kz <= z);
                if i == 0 {
                    return knots[0].1;
                }
                if i == knots.len() {
                    return knots[knots.len() - 1].1;
                }
                let (z0, t0) = knots[i - 1];
                let (z1, t1) = knots[i];
                t0 + (t1 - t0) * (z - z0) / (z1 - z0)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            ThetaFunction::Constant(_) => true,
            ThetaFunction::Table(k) => k.windows(2).all(|p| p[0].1 == p[1].1),
            _ => false,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ThetaFunction::Constant(_) => "constant",
            ThetaFunction::ExpZ => "exp_z",
            ThetaFunction::NegExpZ => "neg_exp_z",
            ThetaFunction::OneMinus2z => "one_minus_2z",
            ThetaFunction::Table(_) => "table",
        }
    }

    /// Points at which θ attains its extremes on every linear or monotone
    /// piece.
    fn critical_points(&self) -> Vec<f64> {
        match self {
            ThetaFunction::Table(knots) => knots.iter().map(|&(z, _)| z).collect(),
            ThetaFunction::Constant(_) => vec![0.0],
            _ => vec![0.0, 1.0],
        }
    }
}

impl fmt::Display for ThetaFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThetaFunction::Constant(v) => write!(f, "const:{v}"),
            ThetaFunction::ExpZ => f.write_str("exp"),
            ThetaFunction::NegExpZ => f.write_str("negexp"),
            ThetaFunction::OneMinus2z => f.write_str("one-minus-2z"),
            ThetaFunction::Table(knots) => {
                f.write_str("table:")?;
                for (i, (z, t)) in knots.iter().enumerate() {
                    if i > 0 {
                        f.write_str(";")?;
                    }
                    write!(f, "{z}:{t}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for ThetaFunction {
    type Err = Error;

    /// Accepts `const:v`, `exp`, `negexp`, `one-minus-2z`, and
    /// `table:z0:t0;z1:t1;...`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || {
            Error::Usage(format!(
                "unknown theta function `{s}`; expected const:<v>, exp, negexp, one-minus-2z or table:<z>:<t>;..."
            ))
        };
        if let Some(v) = s.strip_prefix("const:") {
            return v
                .trim()
                .parse()
                .map(ThetaFunction::Constant)
                .map_err(|_| bad());
        }
        if let Some(rest) = s.strip_prefix("table:") {
            let knots = rest
                .split(';')
                .map(|pair| {
                    let (z, t) = pair.split_once(':').ok_or_else(bad)?;
                    Ok((
                        z.trim().parse().map_err(|_| bad())?,
                        t.trim().parse().map_err(|_| bad())?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            return ThetaFunction::table(knots);
        }
        match s {
            "exp" | "exp_z" => Ok(ThetaFunction::ExpZ),
            "negexp" | "neg_exp_z" => Ok(ThetaFunction::NegExpZ),
            "one-minus-2z" | "one_minus_2z" => Ok(ThetaFunction::OneMinus2z),
            _ => Err(bad()),
        }
    }
}

/// The conditional copula `C_{X,Y|Z=z}` as a family with a z-dependent
/// parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalFamily {
    family: Family,
    rotation: Rotation,
    theta_fn: ThetaFunction,
}

impl ConditionalFamily {
    pub fn new(family: Family, theta_fn: ThetaFunction) -> Result<Self> {
        Self::with_rotation(family, Rotation::R0, theta_fn)
    }

    /// Rotated conditional families give Clayton and Gumbel negative
    /// conditional dependence.
    pub fn with_rotation(
        family: Family,
        rotation: Rotation,
        theta_fn: ThetaFunction,
    ) -> Result<Self> {
        if family == Family::Independence {
            return Ok(Self::independence());
        }
        // Fails early on rotations the family does not admit.
        PairCopulaSpec::new(family, admissible_example(family), rotation)?;
        for z in theta_fn.critical_points() {
            let theta = theta_fn.eval(z);
            check_conditional_theta(family, z, theta)?;
        }
        if family == Family::Frank {
            // Frank's domain has a hole at 0; a continuous θ cannot change sign.
            let pts = theta_fn.critical_points();
            for w in pts.windows(2) {
                let (t0, t1) = (theta_fn.eval(w[0]), theta_fn.eval(w[1]));
                if t0.signum() != t1.signum() {
                    let z = w[0] + (w[1] - w[0]) * t0 / (t0 - t1);
                    return Err(Error::ThetaOutOfDomain {
                        family: family.name(),
                        z,
                        theta: 0.0,
                        constraint: "frank theta must not cross zero",
                    });
                }
            }
        }
        Ok(Self {
            family,
            rotation,
            theta_fn,
        })
    }

    /// Constant parameter, i.e. the simplifying assumption.
    pub fn constant(spec: PairCopulaSpec) -> Self {
        Self {
            family: spec.family(),
            rotation: spec.rotation(),
            theta_fn: ThetaFunction::Constant(spec.theta()),
        }
    }

    pub fn independence() -> Self {
        Self {
            family: Family::Independence,
            rotation: Rotation::R0,
            theta_fn: ThetaFunction::Constant(0.0),
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn rotation(&self) -> Rotation {
        self.rotation
    }

    pub fn theta_fn(&self) -> &ThetaFunction {
        &self.theta_fn
    }

    /// True when the conditional copula does not vary with `z`.
    pub fn is_constant(&self) -> bool {
        self.family == Family::Independence || self.theta_fn.is_constant()
    }

    /// The conditional copula at `z`. Gaussian correlations are capped at
    /// `±GAUSSIAN_RHO_CAP`.
    pub fn at(&self, z: f64) -> PairCopulaSpec {
        if self.family == Family::Independence {
            return PairCopulaSpec::independence();
        }
        let mut theta = self.theta_fn.eval(z);
        if self.family == Family::Gaussian {
            theta = theta.clamp(-GAUSSIAN_RHO_CAP, GAUSSIAN_RHO_CAP);
        }
        PairCopulaSpec::new(self.family, theta, self.rotation)
            .expect("theta function validated at construction")
    }

    /// `∫₀¹ f(z) dz`, split at the kinks of a tabulated θ.
    pub fn integrate_z<F: FnMut(f64) -> f64>(&self, mut f: F, tol: f64) -> Result<f64> {
        let pts = match &self.theta_fn {
            ThetaFunction::Table(knots) if !self.is_constant() => {
                knots.iter().map(|k| k.0).collect()
            }
            _ => vec![0.0, 1.0],
        };
        let piece_tol = tol / (pts.len() - 1) as f64;
        pts.windows(2)
            .map(|w| integrate(&mut f, w[0], w[1], piece_tol))
            .sum()
    }

    pub fn label(&self) -> String {
        match (self.family, self.rotation) {
            (Family::Independence, _) => "indep".into(),
            (f, Rotation::R0) => format!("{f}[{}]", self.theta_fn),
            (f, r) => format!("{f}[{}]@{}", self.theta_fn, r.degrees()),
        }
    }
}

impl fmt::Display for ConditionalFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn admissible_example(family: Family) -> f64 {
    match family {
        Family::Independence | Family::Gaussian | Family::Fgm => 0.0,
        Family::Frank | Family::Clayton | Family::Gumbel => 1.0,
    }
}

fn check_conditional_theta(family: Family, z: f64, theta: f64) -> Result<()> {
    // Gaussian correlations up to ±1 are accepted and capped on evaluation.
    let probe = if family == Family::Gaussian && theta.abs() <= 1.0 {
        theta.clamp(-GAUSSIAN_RHO_CAP, GAUSSIAN_RHO_CAP)
    } else {
        theta
    };
    family.check_theta(probe).map_err(|e| match e {
        Error::InvalidParameter { constraint, .. } => Error::ThetaOutOfDomain {
            family: family.name(),
            z,
            theta,
            constraint,
        },
        other => other,
    })
}

/// Partial-copula pseudo-observations `(U_X, U_Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoPairs {
    pub u_x: Vec<f64>,
    pub u_y: Vec<f64>,
}

impl PseudoPairs {
    pub fn new(u_x: Vec<f64>, u_y: Vec<f64>) -> Result<Self> {
        if u_x.len() != u_y.len() {
            return Err(Error::Input(format!(
                "pseudo-observation columns differ in length: {} vs {}",
                u_x.len(),
                u_y.len()
            )));
        }
        if u_x.iter().chain(&u_y).any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Input(
                "pseudo-observations must lie in [0, 1]".into(),
            ));
        }
        Ok(Self { u_x, u_y })
    }

    pub fn n(&self) -> usize {
        self.u_x.len()
    }
}

/// `U_X = h₂(X | Z; C_XZ)` and `U_Y = h₂(Y | Z; C_YZ)` row by row, clamped to
/// `[1e-12, 1 − 1e-12]`.
pub fn pseudo_observations(
    samples: &SampleTriples,
    c_xz: &PairCopulaSpec,
    c_yz: &PairCopulaSpec,
) -> Result<PseudoPairs> {
    pseudo_observations_from(&samples.x, &samples.y, &samples.z, c_xz, c_yz)
}

pub fn pseudo_observations_from(
    x: &[f64],
    y: &[f64],
    z: &[f64],
    c_xz: &PairCopulaSpec,
    c_yz: &PairCopulaSpec,
) -> Result<PseudoPairs> {
    if x.len() != z.len() || y.len() != z.len() {
        return Err(Error::Input(format!(
            "sample columns differ in length: x {}, y {}, z {}",
            x.len(),
            y.len(),
            z.len()
        )));
    }
    let transform = |col: &[f64], spec: &PairCopulaSpec| -> Result<Vec<f64>> {
        col.iter()
            .zip(z)
            .map(|(&a, &zi)| Ok(clamp_prob(spec.h2(a, clamp_prob(zi))?)))
            .collect()
    };
    Ok(PseudoPairs {
        u_x: transform(x, c_xz)?,
        u_y: transform(y, c_yz)?,
    })
}

/// `C_{X,Y;Z}(u, v) = ∫₀¹ C_{X,Y|Z=z}(u, v) dz`.
pub fn partial_cdf(cond: &ConditionalFamily, u: f64, v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain {
            what: "partial copula arguments must lie in [0, 1]",
            value: if (0.0..=1.0).contains(&u) { v } else { u },
        });
    }
    cond.integrate_z(|z| cond.at(z).cdf_unchecked(u, v), PARTIAL_TOL)
}

/// Spearman's rho of the partial copula as the z-average of the conditional
/// Spearman correlations.
pub fn partial_rho(cond: &ConditionalFamily) -> Result<f64> {
    if cond.is_constant() {
        return Ok(rho_s_analytic(&cond.at(0.0)));
    }
    cond.integrate_z(|z| rho_s_analytic(&cond.at(z)), RHO_TOL)
}

/// Spearman's rho of the partial copula as `12 ∬ C_{X,Y;Z} − 3`.
///
/// Independent of [`partial_rho`]: the z-integral is taken pointwise inside
/// the double integral rather than outside it.
pub fn partial_rho_from_cdf(cond: &ConditionalFamily) -> Result<f64> {
    let rule = graded_gauss_legendre();
    let (x, w) = (rule.nodes(), rule.weights());
    let rows = x
        .par_iter()
        .zip(w)
        .map(|(&u, &wu)| {
            let mut acc = 0.0;
            for (&v, &wv) in x.iter().zip(w) {
                acc += wv * partial_cdf(cond, u, v)?;
            }
            Ok(wu * acc)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(12.0 * rows.iter().sum::<f64>() - 3.0)
}

/// Kendall's tau of the partial copula, `1 − 4 ∬ ∂ᵤC ∂ᵥC`, where both
/// partials are z-integrals of the conditional h-functions.
pub fn partial_tau(cond: &ConditionalFamily) -> Result<f64> {
    if cond.is_constant() {
        return Ok(tau_analytic(&cond.at(0.0)));
    }
    let rule = graded_gauss_legendre();
    let (x, w) = (rule.nodes(), rule.weights());
    let rows = x
        .par_iter()
        .zip(w)
        .map(|(&u, &wu)| {
            let mut acc = 0.0;
            for (&v, &wv) in x.iter().zip(w) {
                let d1 = cond.integrate_z(|z| cond.at(z).h1_unchecked(u, v), PARTIAL_TOL)?;
                let d2 = cond.integrate_z(|z| cond.at(z).h2_unchecked(u, v), PARTIAL_TOL)?;
                acc += wv * d1 * d2;
            }
            Ok(wu * acc)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(1.0 - 4.0 * rows.iter().sum::<f64>())
}

/// KDD of the partial copula on the same grid scheme as
/// [`kdd_analytic_with`].
pub fn partial_kdd(cond: &ConditionalFamily, grid: &GridConfig) -> Result<f64> {
    kdd_of(|u, v| partial_cdf(cond, u, v), grid)
}

/// `k`: the largest conditional KDD over a uniform z-grid.
pub fn conditional_kdd_sup(cond: &ConditionalFamily) -> f64 {
    conditional_kdd_sup_with(cond, &GridConfig::default())
}

pub fn conditional_kdd_sup_with(cond: &ConditionalFamily, grid: &GridConfig) -> f64 {
    if cond.is_constant() {
        return kdd_analytic_with(&cond.at(0.0), grid);
    }
    unit_grid(grid.z)
        .par_iter()
        .map(|&z| kdd_analytic_with(&cond.at(z), grid))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max)
}

/// Common quadrant class of the conditionals on the z-grid, or `Neither`.
/// Independent conditionals count as both QPD and QND.
pub fn conditional_quadrant_class(
    cond: &ConditionalFamily,
    grid: &GridConfig,
) -> QuadrantDependence {
    let flags = |z: f64| {
        let spec = cond.at(z);
        quadrant_flags(|u, v| Ok(spec.cdf_unchecked(u, v)), grid.qpd)
            .expect("copula evaluation is infallible")
    };
    if cond.is_constant() {
        return flags(0.0).class();
    }
    let mut all = QuadrantFlags {
        qpd: true,
        qnd: true,
    };
    for z in unit_grid(grid.z) {
        let f = flags(z);
        all.qpd &= f.qpd;
        all.qnd &= f.qnd;
        if !all.qpd && !all.qnd {
            break;
        }
    }
    all.class()
}

/// Partial dependence measures together with the bounds implied by the
/// conditional copulas. Violations are recorded in the pass flags.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCertificate {
    pub id: String,
    pub k: f64,
    pub rho_partial: f64,
    pub tau_partial: f64,
    pub kdd_partial: f64,
    pub conditional_class: QuadrantDependence,
    pub partial_class: QuadrantDependence,
    pub pass_kdd: bool,
    pub pass_rho: bool,
    pub pass_tau: bool,
    pub pass_quadrant: bool,
}

impl BoundCertificate {
    pub fn passed(&self) -> bool {
        self.pass_kdd && self.pass_rho && self.pass_tau && self.pass_quadrant
    }

    pub const CSV_HEADER: [&'static str; 11] = [
        "config",
        "k",
        "rho_partial",
        "tau_partial",
        "kdd_partial",
        "conditional_class",
        "qpd_class",
        "pass_kdd",
        "pass_rho",
        "pass_tau",
        "pass_quadrant",
    ];

    pub fn csv_record(&self) -> Vec<String> {
        use crate::io::fmt17;
        let flag = |b: bool| if b { "true" } else { "false" }.to_string();
        vec![
            self.id.clone(),
            fmt17(self.k),
            fmt17(self.rho_partial),
            fmt17(self.tau_partial),
            fmt17(self.kdd_partial),
            self.conditional_class.name().into(),
            self.partial_class.name().into(),
            flag(self.pass_kdd),
            flag(self.pass_rho),
            flag(self.pass_tau),
            flag(self.pass_quadrant),
        ]
    }
}

pub fn certify_bounds(cond: &ConditionalFamily) -> Result<BoundCertificate> {
    certify_bounds_with(cond, &GridConfig::default(), &cond.label())
}

pub fn certify_bounds_with(
    cond: &ConditionalFamily,
    grid: &GridConfig,
    id: &str,
) -> Result<BoundCertificate> {
    let k = conditional_kdd_sup_with(cond, grid);
    let rho_partial = partial_rho(cond)?;
    let tau_partial = partial_tau(cond)?;
    let kdd_partial = partial_kdd(cond, grid)?;
    let conditional_class = conditional_quadrant_class(cond, grid);
    let partial_class = quadrant_class(|u, v| partial_cdf(cond, u, v), grid.qpd)?;

    let pass_quadrant = match conditional_class {
        QuadrantDependence::Neither => true,
        required => partial_class == required,
    };
    Ok(BoundCertificate {
        id: id.to_string(),
        k,
        rho_partial,
        tau_partial,
        kdd_partial,
        conditional_class,
        partial_class,
        pass_kdd: kdd_partial <= k + CERTIFICATE_TOL,
        pass_rho: rho_partial.abs() <= (3.0 * k).min(1.0) + CERTIFICATE_TOL,
        pass_tau: tau_partial.abs() <= (2.0 * k).min(1.0) + CERTIFICATE_TOL,
        pass_quadrant,
    })
}

/// Conditional families covering every family and every kind of θ(z), used
/// by the verification suite.
pub fn certificate_configs() -> Vec<(String, ConditionalFamily)> {
    use Family::*;
    use ThetaFunction as T;
    let table = |k: &[(f64, f64)]| T::table(k.to_vec()).expect("valid table");
    let raw: Vec<(Family, Rotation, ThetaFunction)> = vec![
        (Independence, Rotation::R0, T::Constant(0.0)),
        (Gaussian, Rotation::R0, T::Constant(0.6)),
        (Gaussian, Rotation::R0, T::Constant(-0.5)),
        (Gaussian, Rotation::R0, T::OneMinus2z),
        (
            Gaussian,
            Rotation::R0,
            table(&[(0.0, -0.8), (0.5, 0.2), (1.0, 0.7)]),
        ),
        (Frank, Rotation::R0, T::Constant(5.0)),
        (Frank, Rotation::R0, T::Constant(-5.0)),
        (Frank, Rotation::R0, T::ExpZ),
        (Frank, Rotation::R0, T::NegExpZ),
        (
            Frank,
            Rotation::R0,
            table(&[(0.0, 2.0), (0.5, 8.0), (1.0, 3.0)]),
        ),
        (Clayton, Rotation::R0, T::Constant(2.0)),
        (Clayton, Rotation::R90, T::Constant(2.0)),
        (Clayton, Rotation::R0, T::ExpZ),
        (Clayton, Rotation::R90, T::ExpZ),
        (Clayton, Rotation::R0, table(&[(0.0, 0.5), (1.0, 4.0)])),
        (Gumbel, Rotation::R0, T::Constant(2.0)),
        (Gumbel, Rotation::R0, T::ExpZ),
        (Gumbel, Rotation::R270, T::ExpZ),
        (
            Gumbel,
            Rotation::R0,
            table(&[(0.0, 1.0), (0.3, 3.0), (1.0, 1.5)]),
        ),
        (Fgm, Rotation::R0, T::Constant(1.0)),
        (Fgm, Rotation::R0, T::Constant(-0.5)),
        (Fgm, Rotation::R0, T::two_z_minus_one()),
        (Fgm, Rotation::R0, T::OneMinus2z),
    ];
    raw.into_iter()
        .map(|(family, rotation, theta_fn)| {
            let cond = ConditionalFamily::with_rotation(family, rotation, theta_fn)
                .expect("valid certificate config");
            (cond.label(), cond)
        })
        .collect()
}
