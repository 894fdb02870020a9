use crate::error::{Error, Result};

/// What to do when the anti-CFL bound `ε/τ < h0` fails.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CflMode {
    #[default]
    Fail,
    Warn,
}

/// Time at which the potential is sampled inside a step from `t` to `t + τ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PotentialTime {
    /// `V(t + τ, x)`.
    #[default]
    Arrival,
    /// `V(t, x)`.
    Departure,
}

/// Which convolution routine a step uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ConvEngine {
    #[default]
    Fast,
    Naive,
}

/// Discretization parameters.
///
/// The space step is `ε = length / n_space`. For periodic problems `length`
/// is the spatial period and a periodic grid function holds `n_space`
/// samples; kernels always span `2·length` around their minimum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeParams {
    n_space: usize,
    length: f64,
    tau: f64,
    eta: f64,
    h0: f64,
    cfl: CflMode,
    potential_time: PotentialTime,
    engine: ConvEngine,
}

impl SchemeParams {
    pub fn new(n_space: usize, length: f64, tau: f64, eta: f64, h0: f64, cfl: CflMode) -> Result<Self> {
        if n_space < 1 {
            return Err(Error::invalid("n_space must be at least 1"));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::invalid(format!("length must be positive, got {length}")));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::invalid(format!("tau must be positive, got {tau}")));
        }
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::invalid(format!("eta must be nonnegative, got {eta}")));
        }
        if !(h0 > 0.0) {
            return Err(Error::invalid(format!("h0 must be positive, got {h0}")));
        }
        let params = SchemeParams {
            n_space,
            length,
            tau,
            eta,
            h0,
            cfl,
            potential_time: PotentialTime::default(),
            engine: ConvEngine::default(),
        };
        let ratio = params.eps() / tau;
        if ratio >= h0 {
            let msg = format!("anti-CFL bound violated: eps/tau = {ratio} >= h0 = {h0}");
            match cfl {
                CflMode::Fail => return Err(Error::InvalidInput(msg)),
                CflMode::Warn => log::warn!("{msg}"),
            }
        }
        Ok(params)
    }

    /// Unit period, `η = 0`, `h0 = 1`, failing on anti-CFL violations.
    pub fn unit_period(n_space: usize, tau: f64) -> Result<Self> {
        Self::new(n_space, 1.0, tau, 0.0, 1.0, CflMode::Fail)
    }

    pub fn with_potential_time(mut self, potential_time: PotentialTime) -> Self {
        self.potential_time = potential_time;
        self
    }

    pub fn with_engine(mut self, engine: ConvEngine) -> Self {
        self.engine = engine;
        self
    }

    /// Same parameters with another tolerance.
    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::invalid(format!("eta must be nonnegative, got {eta}")));
        }
        self.eta = eta;
        Ok(self)
    }

    pub fn n_space(&self) -> usize {
        self.n_space
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn eps(&self) -> f64 {
        self.length / self.n_space as f64
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn h0(&self) -> f64 {
        self.h0
    }

    pub fn cfl(&self) -> CflMode {
        self.cfl
    }

    pub fn potential_time(&self) -> PotentialTime {
        self.potential_time
    }

    pub fn engine(&self) -> ConvEngine {
        self.engine
    }

    /// Time at which a step starting at `t` samples the potential.
    pub fn potential_sample_time(&self, t: f64) -> f64 {
        match self.potential_time {
            PotentialTime::Arrival => t + self.tau,
            PotentialTime::Departure => t,
        }
    }
}
