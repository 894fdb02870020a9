use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Convex conjugate `K*` sampled on a uniform velocity grid and interpolated
/// linearly between samples.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedConjugate {
    v_min: f64,
    dv: f64,
    samples: Vec<f64>,
}

impl TabulatedConjugate {
    /// `samples[k]` is `K*(v_min + k·dv)` with `dv = (v_max - v_min)/(len-1)`.
    pub fn new(v_min: f64, v_max: f64, samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::invalid("tabulated conjugate needs at least two samples"));
        }
        if !(v_max > v_min) || !v_min.is_finite() || !v_max.is_finite() {
            return Err(Error::invalid("tabulated velocity window must be a finite interval"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("tabulated conjugate has non-finite samples"));
        }
        let scale = samples.iter().fold(1.0f64, |a, s| a.max(s.abs()));
        let tol = 64.0 * f64::EPSILON * scale;
        if let Some(i) = (1..samples.len() - 1)
            .find(|&i| samples[i + 1] - samples[i] < samples[i] - samples[i - 1] - tol)
        {
            return Err(Error::invalid(format!(
                "tabulated conjugate is not convex at sample {i}"
            )));
        }
        let dv = (v_max - v_min) / (samples.len() - 1) as f64;
        Ok(TabulatedConjugate { v_min, dv, samples })
    }

    /// Samples `f` on `len` equally spaced velocities of `[v_min, v_max]`.
    pub fn from_fn(v_min: f64, v_max: f64, len: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let dv = (v_max - v_min) / (len.max(2) - 1) as f64;
        let samples = (0..len).map(|k| f(v_min + k as f64 * dv)).collect();
        Self::new(v_min, v_max, samples)
    }

    pub fn v_min(&self) -> f64 {
        self.v_min
    }

    pub fn v_max(&self) -> f64 {
        self.v_min + self.dv * (self.samples.len() - 1) as f64
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Linear interpolation; `None` outside the tabulated window.
    pub fn eval(&self, v: f64) -> Option<f64> {
        let pos = (v - self.v_min) / self.dv;
        let last = (self.samples.len() - 1) as f64;
        let slack = 1e-9;
        if !(pos >= -slack && pos <= last + slack) {
            return None;
        }
        let pos = pos.clamp(0.0, last);
        let k = (pos.floor() as usize).min(self.samples.len() - 2);
        let w = pos - k as f64;
        if w == 0.0 {
            return Some(self.samples[k]);
        }
        Some(self.samples[k] + w * (self.samples[k + 1] - self.samples[k]))
    }

    /// Velocity of the smallest sample (first one on ties).
    pub fn argmin(&self) -> f64 {
        let k = self
            .samples
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bk, bv), (k, &v)| if v < bv { (k, v) } else { (bk, bv) })
            .0;
        self.v_min + k as f64 * self.dv
    }
}

/// Kinetic part of the Hamiltonian, described through its conjugate `K*`.
#[derive(Clone, Debug, PartialEq)]
pub enum Kinetic {
    /// `K(p) = ½|p + P|²`, i.e. `K*(v) = ½|v|² - P·v`.
    Mechanical { drift: Vec<f64> },
    /// `K*(v) = ½ vᵀ M v - P·v` for a symmetric positive definite `M`.
    /// Separable only when `M` is diagonal.
    Metric { mass: Vec<Vec<f64>>, drift: Vec<f64> },
    /// Separable `K*(v) = Σ Kᵢ*(vᵢ)`, one table per axis.
    Tabulated(Vec<TabulatedConjugate>),
}

impl Kinetic {
    pub fn mechanical_1d(drift: f64) -> Self {
        Kinetic::Mechanical { drift: vec![drift] }
    }

    pub fn dim(&self) -> usize {
        match self {
            Kinetic::Mechanical { drift } | Kinetic::Metric { drift, .. } => drift.len(),
            Kinetic::Tabulated(t) => t.len(),
        }
    }

    pub fn is_separable(&self) -> bool {
        match self {
            Kinetic::Metric { mass, .. } => mass
                .iter()
                .enumerate()
                .all(|(i, row)| row.iter().enumerate().all(|(j, &m)| i == j || m == 0.0)),
            _ => true,
        }
    }

    /// Full conjugate `K*(v)`; `None` outside a tabulated window.
    pub fn conjugate(&self, v: &[f64]) -> Option<f64> {
        match self {
            Kinetic::Mechanical { drift } => Some(
                v.iter()
                    .zip(drift)
                    .map(|(&vi, &p)| 0.5 * vi * vi - p * vi)
                    .sum(),
            ),
            Kinetic::Metric { mass, drift } => {
                let mut q = 0.0;
                for (i, row) in mass.iter().enumerate() {
                    for (j, &m) in row.iter().enumerate() {
                        q += v[i] * m * v[j];
                    }
                }
                Some(0.5 * q - v.iter().zip(drift).map(|(a, b)| a * b).sum::<f64>())
            }
            Kinetic::Tabulated(tables) => tables
                .iter()
                .zip(v)
                .map(|(t, &vi)| t.eval(vi))
                .sum::<Option<f64>>(),
        }
    }

    /// One-dimensional conjugate along `axis`, valid for separable kinetics.
    pub(crate) fn axis_conjugate(&self, axis: usize, v: f64) -> Option<f64> {
        match self {
            Kinetic::Mechanical { drift } => Some(0.5 * v * v - drift[axis] * v),
            Kinetic::Metric { mass, drift } => Some(0.5 * mass[axis][axis] * v * v - drift[axis] * v),
            Kinetic::Tabulated(t) => t[axis].eval(v),
        }
    }

    /// Minimizing velocity of the axis conjugate.
    pub(crate) fn axis_argmin(&self, axis: usize) -> f64 {
        match self {
            Kinetic::Mechanical { drift } => drift[axis],
            Kinetic::Metric { mass, drift } => drift[axis] / mass[axis][axis],
            Kinetic::Tabulated(t) => t[axis].argmin(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::invalid("kinetic part has dimension 0"));
        }
        match self {
            Kinetic::Mechanical { drift } => {
                if drift.iter().any(|p| !p.is_finite()) {
                    return Err(Error::invalid("drift must be finite"));
                }
            }
            Kinetic::Metric { mass, drift } => {
                let n = drift.len();
                if mass.len() != n || mass.iter().any(|r| r.len() != n) {
                    return Err(Error::invalid("mass matrix shape does not match drift"));
                }
                for i in 0..n {
                    for j in 0..n {
                        if mass[i][j] != mass[j][i] || !mass[i][j].is_finite() {
                            return Err(Error::invalid("mass matrix must be finite and symmetric"));
                        }
                    }
                }
                if !cholesky_ok(mass) {
                    return Err(Error::invalid("mass matrix must be positive definite"));
                }
            }
            Kinetic::Tabulated(_) => {}
        }
        Ok(())
    }
}

fn cholesky_ok(m: &[Vec<f64>]) -> bool {
    let n = m.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = m[i][i] - s;
                if d <= 0.0 {
                    return false;
                }
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (m[i][j] - s) / l[j][j];
            }
        }
    }
    true
}

/// `amplitude · cos(k·x + phase) · cos(ν·t + time_phase)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Harmonic {
    pub amplitude: f64,
    pub wavevector: Vec<f64>,
    pub phase: f64,
    pub time_frequency: f64,
    pub time_phase: f64,
}

impl Harmonic {
    /// Time-independent `amplitude · cos(k·x + phase)` in one dimension.
    pub fn spatial(amplitude: f64, wavenumber: f64, phase: f64) -> Self {
        Harmonic {
            amplitude,
            wavevector: vec![wavenumber],
            phase,
            time_frequency: 0.0,
            time_phase: 0.0,
        }
    }

    fn eval(&self, t: f64, x: &[f64]) -> f64 {
        let arg: f64 = self.wavevector.iter().zip(x).map(|(k, xi)| k * xi).sum();
        let time = if self.time_frequency == 0.0 && self.time_phase == 0.0 {
            1.0
        } else {
            (self.time_frequency * t + self.time_phase).cos()
        };
        self.amplitude * (arg + self.phase).cos() * time
    }
}

pub type PotentialFn = dyn Fn(f64, &[f64]) -> f64 + Send + Sync;

/// The potential `V(t, x)`.
#[derive(Clone)]
pub enum Potential {
    Zero,
    Constant(f64),
    /// `offset + Σ terms`.
    Harmonics { offset: f64, terms: Vec<Harmonic> },
    /// Arbitrary evaluator with a declared bound `|V| ≤ bound`.
    Custom {
        eval: Arc<PotentialFn>,
        bound: f64,
        autonomous: bool,
    },
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Zero => write!(f, "Zero"),
            Potential::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            Potential::Harmonics { offset, terms } => f
                .debug_struct("Harmonics")
                .field("offset", offset)
                .field("terms", terms)
                .finish(),
            Potential::Custom {
                bound, autonomous, ..
            } => f
                .debug_struct("Custom")
                .field("bound", bound)
                .field("autonomous", autonomous)
                .finish_non_exhaustive(),
        }
    }
}

impl Potential {
    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Constant(c) => *c,
            Potential::Harmonics { offset, terms } => {
                offset + terms.iter().map(|h| h.eval(t, x)).sum::<f64>()
            }
            Potential::Custom { eval, .. } => eval(t, x),
        }
    }

    /// A bound `B ≥ sup |V|`.
    pub fn bound(&self) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Constant(c) => c.abs(),
            Potential::Harmonics { offset, terms } => {
                offset.abs() + terms.iter().map(|h| h.amplitude.abs()).sum::<f64>()
            }
            Potential::Custom { bound, .. } => *bound,
        }
    }

    pub fn is_autonomous(&self) -> bool {
        match self {
            Potential::Zero | Potential::Constant(_) => true,
            Potential::Harmonics { terms, .. } => terms
                .iter()
                .all(|h| h.time_frequency == 0.0 && h.time_phase == 0.0),
            Potential::Custom { autonomous, .. } => *autonomous,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Potential::Zero)
    }
}

/// Separable Hamiltonian `H(t,x,p) = K(p) + V(t,x)`.
#[derive(Clone, Debug)]
pub struct HamiltonianSpec {
    kinetic: Kinetic,
    potential: Potential,
    time_period: Option<f64>,
}

impl HamiltonianSpec {
    /// Validates the kinetic data and spot-checks `|V| ≤ B`.
    ///
    /// `time_period` declares the period of `V` in `t`; autonomous potentials
    /// may leave it unset.
    pub fn new(kinetic: Kinetic, potential: Potential, time_period: Option<f64>) -> Result<Self> {
        kinetic.validate()?;
        if let Some(p) = time_period {
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::invalid("time period must be positive"));
            }
        }
        let bound = potential.bound();
        if !(bound >= 0.0) || !bound.is_finite() {
            return Err(Error::invalid("potential bound must be finite"));
        }
        let dim = kinetic.dim();
        let mut x = vec![0.0; dim];
        for probe in 0..64u32 {
            // Deterministic low-discrepancy probes over [0,7)^d × [0,7).
            let t = 7.0 * frac(probe as f64 * 0.618_033_988_749_895);
            for (d, xi) in x.iter_mut().enumerate() {
                *xi = 7.0 * frac(probe as f64 * (0.754_877_666 + 0.1 * d as f64) + 0.5);
            }
            let v = potential.eval(t, &x);
            if !v.is_finite() {
                return Err(Error::Evaluation(format!("V({t}, {x:?}) is not finite")));
            }
            if v.abs() > bound * (1.0 + 1e-12) + 1e-300 {
                return Err(Error::invalid(format!(
                    "|V({t}, {x:?})| = {} exceeds the declared bound {bound}",
                    v.abs()
                )));
            }
        }
        Ok(HamiltonianSpec {
            kinetic,
            potential,
            time_period,
        })
    }

    /// One-dimensional mechanical Hamiltonian `½(p+P)² + V`.
    pub fn mechanical_1d(drift: f64, potential: Potential) -> Result<Self> {
        Self::new(Kinetic::mechanical_1d(drift), potential, None)
    }

    pub fn kinetic(&self) -> &Kinetic {
        &self.kinetic
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn dim(&self) -> usize {
        self.kinetic.dim()
    }

    pub fn time_period(&self) -> Option<f64> {
        self.time_period
    }

    /// Period used by long-time analysis: the declared period, or 1 for an
    /// autonomous potential without one.
    pub fn analysis_period(&self) -> Option<f64> {
        match self.time_period {
            Some(p) => Some(p),
            None if self.potential.is_autonomous() => Some(1.0),
            None => None,
        }
    }

    pub fn is_autonomous(&self) -> bool {
        self.potential.is_autonomous()
    }

    /// Lagrangian `L(t,x,v) = K*(v) - V(t,x)`.
    pub fn lagrangian(&self, t: f64, x: &[f64], v: &[f64]) -> Option<f64> {
        Some(self.kinetic.conjugate(v)? - self.potential.eval(t, x))
    }
}

fn frac(x: f64) -> f64 {
    x - x.floor()
}
