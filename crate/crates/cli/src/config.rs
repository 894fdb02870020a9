//! JSON run configuration. Every struct rejects unknown keys.

use std::f64::consts::PI;
use std::path::Path;

use laxol::{
    CflMode, ConvEngine, GridFn, HamiltonianSpec, Harmonic, Kinetic, Potential, PotentialTime, SchemeParams,
    TabulatedConjugate,
};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A real number, or a multiple of π written as `"pi"`, `"-2pi"`, `"pi/2"`,
/// `"0.5pi"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Expr(String),
}

impl Scalar {
    pub fn value(&self) -> Result<f64, CliError> {
        match self {
            Scalar::Number(v) => Ok(*v),
            Scalar::Expr(s) => parse_pi_multiple(s)
                .ok_or_else(|| CliError::Config(format!("cannot read {s:?} as a number or multiple of pi"))),
        }
    }
}

fn parse_pi_multiple(s: &str) -> Option<f64> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim().parse::<f64>().ok()?),
        None => (s, 1.0),
    };
    let coef = num.strip_suffix("pi")?.trim();
    let c = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.trim_end_matches('*').parse::<f64>().ok()?,
    };
    Some(c * PI / den)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub discretization: DiscretizationConfig,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolsweep: Option<TolSweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hbar: Option<HbarConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub kinetic: KineticConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    /// Period of V in t; inferred for builtin time-dependent potentials.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_period: Option<Scalar>,
    pub initial: InitialConfig,
    #[serde(default)]
    pub domain: DomainConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KineticConfig {
    /// `K*(v) = ½v² - P·v`.
    Mechanical {
        #[serde(default)]
        drift: f64,
    },
    /// Convex `K*` sampled uniformly on `[v_min, v_max]`.
    Tabulated { v_min: f64, v_max: f64, samples: Vec<f64> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicConfig {
    pub amplitude: f64,
    pub wavenumber: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub time_frequency: f64,
    #[serde(default)]
    pub time_phase: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    #[default]
    Zero,
    Constant { value: f64 },
    /// `amplitude·(1 - cos x)`.
    Pendulum {
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `amplitude·sin(t)·cos(wavenumber·x)`, time period 2π.
    SinTCos {
        #[serde(default = "one")]
        amplitude: f64,
        wavenumber: f64,
    },
    /// `offset + Σ amplitude·cos(k x + phase)·cos(ν t + time_phase)`.
    Harmonics {
        #[serde(default)]
        offset: f64,
        terms: Vec<HarmonicConfig>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Constant {
        #[serde(default)]
        value: f64,
    },
    /// `amplitude·cos(wavenumber·x + phase)`.
    Cos {
        #[serde(default = "one")]
        amplitude: f64,
        wavenumber: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `slope·|x - center|`.
    Abs {
        slope: f64,
        #[serde(default)]
        center: f64,
    },
    /// `offset + Σ amplitude·cos(k x + phase)`.
    Harmonics {
        #[serde(default)]
        offset: f64,
        terms: Vec<HarmonicConfig>,
    },
    /// Independent uniform samples in `[-amplitude, amplitude]` from `run.seed`.
    Random {
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Explicit samples; the length must equal `n_space`.
    Samples { values: Vec<f64> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    #[serde(default = "zero_scalar")]
    pub x_min: Scalar,
    /// Period (periodic) or window length (non-periodic).
    #[serde(default = "one_scalar")]
    pub length: Scalar,
    #[serde(default = "yes")]
    pub periodic: bool,
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig {
            x_min: zero_scalar(),
            length: one_scalar(),
            periodic: true,
        }
    }
}

/// Time step: a number, `"sqrt_eps"` (τ = √ε) or `"sqrt_eps_unit_fraction"`
/// (τ = 1/round(1/√ε)).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TauSpec {
    Value(f64),
    Rule(String),
}

/// Decomposition tolerance: a number or `"ten_eps_squared"` (η = 10/N²).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EtaSpec {
    Value(f64),
    Rule(String),
}

impl Default for EtaSpec {
    fn default() -> Self {
        EtaSpec::Value(0.0)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CflConfig {
    #[default]
    Fail,
    Warn,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialTimeConfig {
    #[default]
    Arrival,
    Departure,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineConfig {
    #[default]
    Fast,
    Naive,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationConfig {
    pub n_space: usize,
    pub tau: TauSpec,
    #[serde(default)]
    pub eta: EtaSpec,
    #[serde(default = "one")]
    pub h0: f64,
    #[serde(default)]
    pub cfl: CflConfig,
    #[serde(default)]
    pub potential_time: PotentialTimeConfig,
    #[serde(default)]
    pub engine: EngineConfig,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub t0: f64,
    /// Exactly one of `t_final` and `steps` must be given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    /// Times written as snapshot files; each must be a whole number of steps.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Keep every k-th state in memory (default: automatic thinning).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_stride: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Record `u(t, track_x)` after every step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub track_x: Option<Scalar>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    /// Subset of `snapshots`, `steps`, `trajectory` (evolve only).
    #[serde(default = "default_fields")]
    pub fields: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            formats: default_formats(),
            fields: default_fields(),
        }
    }
}

impl OutputConfig {
    pub fn csv(&self) -> bool {
        self.formats.contains(&Format::Csv)
    }

    pub fn json(&self) -> bool {
        self.formats.contains(&Format::Json)
    }

    pub fn wants(&self, field: &str) -> bool {
        self.fields.iter().any(|f| f == field)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsRule {
    /// ε = τ².
    #[default]
    TauSquared,
    /// ε = ratio·τ.
    FixedRatio,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub taus: Vec<f64>,
    #[serde(default)]
    pub eps_rule: EpsRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    /// Error measured on `[a, b]` only (default: the whole grid).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_window: Option<[Scalar; 2]>,
    /// Smallest acceptable fitted order in `ε/τ + τ`.
    #[serde(default = "default_min_order")]
    pub min_order: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolSweepConfig {
    pub etas: Vec<EtaSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderPoint {
    pub n_space: usize,
    pub tau: TauSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub x: Scalar,
    pub t_final: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HbarConfig {
    /// Discretizations to estimate on (default: the main one).
    #[serde(default)]
    pub ladder: Vec<LadderPoint>,
    #[serde(default = "default_max_periods")]
    pub max_periods: usize,
    /// Default 1e-8 for autonomous problems, 1e-6 otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Largest grid for the matrix eigenvalue estimator.
    #[serde(default = "default_matrix_max_n")]
    pub matrix_max_n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    #[serde(default = "default_expected_tol")]
    pub expected_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<TrajectoryConfig>,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn zero_scalar() -> Scalar {
    Scalar::Number(0.0)
}

fn one_scalar() -> Scalar {
    Scalar::Number(1.0)
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

fn default_fields() -> Vec<String> {
    ["snapshots", "steps", "trajectory"].iter().map(|s| s.to_string()).collect()
}

fn default_min_order() -> f64 {
    0.8
}

fn default_max_periods() -> usize {
    1000
}

fn default_matrix_max_n() -> usize {
    128
}

fn default_expected_tol() -> f64 {
    1e-10
}

const KNOWN_FIELDS: [&str; 3] = ["snapshots", "steps", "trajectory"];

/// Parses and validates a config file.
pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Everything a run needs, built from the config for one discretization.
#[derive(Clone, Debug)]
pub struct Built {
    pub spec: HamiltonianSpec,
    pub params: SchemeParams,
    pub u0: GridFn,
    pub x_min: f64,
    pub length: f64,
}

impl Built {
    pub fn eps(&self) -> f64 {
        self.params.eps()
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let r = &self.run;
        if r.t_final.is_some() && r.steps.is_some() {
            return Err(CliError::Config("give either run.t_final or run.steps, not both".into()));
        }
        for f in &self.output.fields {
            if !KNOWN_FIELDS.contains(&f.as_str()) {
                return Err(CliError::Config(format!("unknown output field {f:?}")));
            }
        }
        if self.output.formats.is_empty() {
            return Err(CliError::Config("output.formats is empty".into()));
        }
        if self.discretization.n_space == 0 {
            return Err(CliError::Config("n_space must be positive".into()));
        }
        self.problem.domain.x_min.value()?;
        let length = self.problem.domain.length.value()?;
        if !(length > 0.0) {
            return Err(CliError::Config("domain length must be positive".into()));
        }
        if let Some(x) = &r.track_x {
            x.value()?;
        }
        if let Some(c) = &self.convergence {
            if c.taus.is_empty() || c.taus.iter().any(|t| !(*t > 0.0)) {
                return Err(CliError::Config("convergence.taus must be positive and nonempty".into()));
            }
            if c.eps_rule == EpsRule::FixedRatio && !c.ratio.is_some_and(|r| r > 0.0) {
                return Err(CliError::Config("fixed_ratio needs a positive convergence.ratio".into()));
            }
        }
        if let Some(s) = &self.tolsweep {
            if s.etas.is_empty() {
                return Err(CliError::Config("tolsweep.etas is empty".into()));
            }
        }
        // Build once to surface every remaining problem as a config error.
        self.build_with(self.discretization.n_space, &self.discretization.tau, &self.discretization.eta)?;
        Ok(())
    }

    /// Copy embedded in reports: the output directory is a property of the
    /// invocation, not of the run.
    pub fn resolved(&self) -> RunConfig {
        let mut c = self.clone();
        c.output.dir = None;
        c
    }

    pub fn build(&self) -> Result<Built, CliError> {
        self.build_with(self.discretization.n_space, &self.discretization.tau, &self.discretization.eta)
    }

    pub fn build_with(&self, n_space: usize, tau: &TauSpec, eta: &EtaSpec) -> Result<Built, CliError> {
        let p = &self.problem;
        let x_min = p.domain.x_min.value()?;
        let length = p.domain.length.value()?;
        if n_space == 0 {
            return Err(CliError::Config("n_space must be positive".into()));
        }
        let eps = length / n_space as f64;
        let tau = resolve_tau(tau, eps)?;
        let eta = resolve_eta(eta, n_space)?;
        let d = &self.discretization;
        let cfl = match d.cfl {
            CflConfig::Fail => CflMode::Fail,
            CflConfig::Warn => CflMode::Warn,
        };
        let params = SchemeParams::new(n_space, length, tau, eta, d.h0, cfl)
            .map_err(|e| CliError::Config(e.to_string()))?
            .with_potential_time(match d.potential_time {
                PotentialTimeConfig::Arrival => PotentialTime::Arrival,
                PotentialTimeConfig::Departure => PotentialTime::Departure,
            })
            .with_engine(match d.engine {
                EngineConfig::Fast => ConvEngine::Fast,
                EngineConfig::Naive => ConvEngine::Naive,
            });
        let spec = self.hamiltonian()?;
        let u0 = self.initial(n_space, eps, x_min)?;
        Ok(Built {
            spec,
            params,
            u0,
            x_min,
            length,
        })
    }

    fn hamiltonian(&self) -> Result<HamiltonianSpec, CliError> {
        let p = &self.problem;
        let kinetic = match &p.kinetic {
            KineticConfig::Mechanical { drift } => Kinetic::mechanical_1d(*drift),
            KineticConfig::Tabulated { v_min, v_max, samples } => Kinetic::Tabulated(vec![
                TabulatedConjugate::new(*v_min, *v_max, samples.clone()).map_err(|e| CliError::Config(e.to_string()))?,
            ]),
        };
        let (potential, inferred_period) = match &p.potential {
            PotentialConfig::Zero => (Potential::Zero, None),
            PotentialConfig::Constant { value } => (Potential::Constant(*value), None),
            PotentialConfig::Pendulum { amplitude } => (
                Potential::Harmonics {
                    offset: *amplitude,
                    terms: vec![Harmonic::spatial(-amplitude, 1.0, 0.0)],
                },
                None,
            ),
            PotentialConfig::SinTCos { amplitude, wavenumber } => (
                Potential::Harmonics {
                    offset: 0.0,
                    terms: vec![Harmonic {
                        amplitude: *amplitude,
                        wavevector: vec![*wavenumber],
                        phase: 0.0,
                        time_frequency: 1.0,
                        time_phase: -PI / 2.0,
                    }],
                },
                Some(2.0 * PI),
            ),
            PotentialConfig::Harmonics { offset, terms } => {
                let freqs: Vec<f64> = terms
                    .iter()
                    .map(|t| t.time_frequency.abs())
                    .filter(|f| *f != 0.0)
                    .collect();
                let period = match freqs.first() {
                    Some(&f) if freqs.iter().all(|g| *g == f) => Some(2.0 * PI / f),
                    _ => None,
                };
                (
                    Potential::Harmonics {
                        offset: *offset,
                        terms: terms
                            .iter()
                            .map(|t| Harmonic {
                                amplitude: t.amplitude,
                                wavevector: vec![t.wavenumber],
                                phase: t.phase,
                                time_frequency: t.time_frequency,
                                time_phase: t.time_phase,
                            })
                            .collect(),
                    },
                    period,
                )
            }
        };
        let time_period = match &p.time_period {
            Some(s) => Some(s.value()?),
            None if potential.is_autonomous() => None,
            None => Some(inferred_period.ok_or_else(|| {
                CliError::Config("time-dependent potential needs problem.time_period".into())
            })?),
        };
        HamiltonianSpec::new(kinetic, potential, time_period).map_err(|e| CliError::Config(e.to_string()))
    }

    fn initial(&self, n: usize, eps: f64, x_min: f64) -> Result<GridFn, CliError> {
        let periodic = self.problem.domain.periodic;
        let cos_sum = |offset: f64, terms: &[HarmonicConfig], x: f64| {
            offset + terms.iter().map(|t| t.amplitude * (t.wavenumber * x + t.phase).cos()).sum::<f64>()
        };
        let values: Vec<f64> = match &self.problem.initial {
            InitialConfig::Constant { value } => vec![*value; n],
            InitialConfig::Cos {
                amplitude,
                wavenumber,
                phase,
            } => (0..n)
                .map(|i| amplitude * (wavenumber * (x_min + i as f64 * eps) + phase).cos())
                .collect(),
            InitialConfig::Abs { slope, center } => {
                (0..n).map(|i| slope * (x_min + i as f64 * eps - center).abs()).collect()
            }
            InitialConfig::Harmonics { offset, terms } => {
                (0..n).map(|i| cos_sum(*offset, terms, x_min + i as f64 * eps)).collect()
            }
            InitialConfig::Random { amplitude } => {
                let mut rng = rand::rngs::StdRng::seed_from_u64(self.run.seed);
                (0..n).map(|_| rng.gen_range(-1.0..=1.0) * amplitude).collect()
            }
            InitialConfig::Samples { values } => {
                if values.len() != n {
                    return Err(CliError::Config(format!(
                        "initial.values has {} samples, expected n_space = {n}",
                        values.len()
                    )));
                }
                values.clone()
            }
        };
        let u = if periodic {
            GridFn::periodic(values, eps, x_min)
        } else {
            GridFn::new(values, eps, x_min)
        };
        u.map_err(|e| CliError::Config(e.to_string()))
    }
}

pub fn resolve_tau(tau: &TauSpec, eps: f64) -> Result<f64, CliError> {
    match tau {
        TauSpec::Value(t) if *t > 0.0 && t.is_finite() => Ok(*t),
        TauSpec::Value(t) => Err(CliError::Config(format!("tau must be positive, got {t}"))),
        TauSpec::Rule(r) if r == "sqrt_eps" => Ok(eps.sqrt()),
        TauSpec::Rule(r) if r == "sqrt_eps_unit_fraction" => Ok(1.0 / (1.0 / eps.sqrt()).round().max(1.0)),
        TauSpec::Rule(r) => Err(CliError::Config(format!("unknown tau rule {r:?}"))),
    }
}

/// `"ten_eps_squared"` measures ε on the grid of a unit period, `1/n_space`:
/// the tolerance bounds raw second differences, which do not depend on the
/// domain length.
pub fn resolve_eta(eta: &EtaSpec, n_space: usize) -> Result<f64, CliError> {
    match eta {
        EtaSpec::Value(v) if *v >= 0.0 && v.is_finite() => Ok(*v),
        EtaSpec::Value(v) => Err(CliError::Config(format!("eta must be nonnegative, got {v}"))),
        EtaSpec::Rule(r) if r == "ten_eps_squared" => Ok(10.0 / (n_space as f64).powi(2)),
        EtaSpec::Rule(r) => Err(CliError::Config(format!("unknown eta rule {r:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "problem": {"kinetic": {"kind": "mechanical", "drift": 1.0},
                    "potential": {"kind": "pendulum"},
                    "initial": {"kind": "cos", "wavenumber": 2},
                    "domain": {"x_min": "-pi", "length": "2pi"}},
        "discretization": {"n_space": 600, "tau": "sqrt_eps_unit_fraction"},
        "run": {"t_final": 15, "snapshot_times": [1, 2, 5, 15]}
    }"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = parse(MINIMAL).unwrap();
        let b = cfg.build().unwrap();
        assert_eq!(b.params.tau(), 0.1);
        assert!((b.x_min + PI).abs() < 1e-15);
        assert!((b.eps() - 2.0 * PI / 600.0).abs() < 1e-15);
        assert_eq!(b.u0.values()[0], (2.0 * -PI).cos());
        assert!(b.spec.is_autonomous());
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = MINIMAL.replace("\"n_space\"", "\"n_spcae\": 3, \"n_space\"");
        assert!(matches!(parse(&bad), Err(CliError::Config(_))));
        let bad = MINIMAL.replace("\"kind\": \"pendulum\"", "\"kind\": \"pendulum\", \"freq\": 2");
        assert!(matches!(parse(&bad), Err(CliError::Config(_))));
    }

    #[test]
    fn pi_expressions() {
        assert_eq!(parse_pi_multiple("pi"), Some(PI));
        assert_eq!(parse_pi_multiple("-pi"), Some(-PI));
        assert_eq!(parse_pi_multiple("2pi"), Some(2.0 * PI));
        assert_eq!(parse_pi_multiple("pi/2"), Some(PI / 2.0));
        assert_eq!(parse_pi_multiple("0.5pi"), Some(0.5 * PI));
        assert_eq!(parse_pi_multiple("tau"), None);
    }

    #[test]
    fn sin_t_cos_gets_two_pi_period() {
        let text = MINIMAL.replace("{\"kind\": \"pendulum\"}", "{\"kind\": \"sin_t_cos\", \"wavenumber\": 2}");
        let cfg = parse(&text).unwrap();
        let b = cfg.build().unwrap();
        assert_eq!(b.spec.time_period(), Some(2.0 * PI));
        let v = b.spec.potential().eval(PI / 2.0, &[0.0]);
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn anti_cfl_violation_is_a_config_error() {
        let text = MINIMAL.replace("\"sqrt_eps_unit_fraction\"", "0.001");
        assert!(matches!(parse(&text), Err(CliError::Config(_))));
    }
}
