use std::collections::BTreeSet;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::grid::GridFn;

use super::hamiltonian::HamiltonianSpec;
use super::kernel::build_kernel;
use super::params::SchemeParams;
use super::step::step_values;

/// Snapshots kept by default before thinning kicks in.
pub const DEFAULT_SNAPSHOT_BUDGET: usize = 1024;

/// Snapshot thinning for [`evolve`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EvolveOptions {
    /// Keep every `stride`-th state. `None` keeps all states when
    /// `steps ≤ 1024` and every `⌈steps/1024⌉`-th otherwise.
    pub stride: Option<usize>,
    /// Step indices kept regardless of the stride.
    pub keep_steps: Vec<usize>,
}

impl EvolveOptions {
    pub fn every(stride: usize) -> Self {
        EvolveOptions {
            stride: Some(stride),
            keep_steps: Vec::new(),
        }
    }

    pub fn effective_stride(&self, steps: usize) -> usize {
        match self.stride {
            Some(s) => s.max(1),
            None => steps.div_ceil(DEFAULT_SNAPSHOT_BUDGET).max(1),
        }
    }
}

/// Per-step diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    /// 1-based index of the step (state `step` is its output).
    pub step: usize,
    /// Time at the end of the step.
    pub time: f64,
    /// Blocks in the decomposition of the input state.
    pub blocks: usize,
    pub wall_seconds: f64,
    /// Mean of `u_{n+1} - u_n`.
    pub drift: f64,
}

/// Output of [`evolve`]. State `n` lives at time `t0 + n·τ`; the initial and
/// final states are always kept.
#[derive(Clone, Debug)]
pub struct EvolutionTrace {
    pub t0: f64,
    pub tau: f64,
    pub snapshots: Vec<GridFn>,
    pub snapshot_steps: Vec<usize>,
    pub times: Vec<f64>,
    pub per_step: Vec<StepRecord>,
}

impl EvolutionTrace {
    fn new(t0: f64, tau: f64, u0: GridFn) -> Self {
        EvolutionTrace {
            t0,
            tau,
            snapshots: vec![u0],
            snapshot_steps: vec![0],
            times: vec![t0],
            per_step: Vec::new(),
        }
    }

    fn push(&mut self, step: usize, u: GridFn) {
        self.snapshots.push(u);
        self.snapshot_steps.push(step);
        self.times.push(self.t0 + step as f64 * self.tau);
    }

    /// Number of steps taken.
    pub fn steps(&self) -> usize {
        self.per_step.len()
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn first(&self) -> &GridFn {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &GridFn {
        self.snapshots.last().expect("trace holds the initial state")
    }

    /// Snapshot of state `step`, if it was kept.
    pub fn at_step(&self, step: usize) -> Option<&GridFn> {
        self.snapshot_steps
            .binary_search(&step)
            .ok()
            .map(|i| &self.snapshots[i])
    }

    /// Final time.
    pub fn final_time(&self) -> f64 {
        self.t0 + self.steps() as f64 * self.tau
    }
}

/// Applies `steps` fully discrete steps starting from `u0` at time `t0`.
///
/// Non-finite values abort the run with [`Error::NonFinite`], whose partial
/// trace ends at the last finite state.
pub fn evolve(
    u0: &GridFn,
    t0: f64,
    steps: usize,
    spec: &HamiltonianSpec,
    params: &SchemeParams,
    options: &EvolveOptions,
) -> Result<EvolutionTrace> {
    evolve_observed(u0, t0, steps, spec, params, options, |_, _| {})
}

/// [`evolve`], calling `observe(step, state)` after every step.
pub fn evolve_observed(
    u0: &GridFn,
    t0: f64,
    steps: usize,
    spec: &HamiltonianSpec,
    params: &SchemeParams,
    options: &EvolveOptions,
    mut observe: impl FnMut(usize, &GridFn),
) -> Result<EvolutionTrace> {
    if steps < 1 {
        return Err(Error::invalid("steps must be at least 1"));
    }
    if !t0.is_finite() {
        return Err(Error::invalid("t0 must be finite"));
    }
    let kernel = build_kernel(spec, params)?;
    let stride = options.effective_stride(steps);
    let keep: BTreeSet<usize> = options.keep_steps.iter().copied().collect();
    let tau = params.tau();
    let mut trace = EvolutionTrace::new(t0, tau, u0.clone());
    let mut u = u0.clone();
    for n in 0..steps {
        let t = t0 + n as f64 * tau;
        let clock = Instant::now();
        let (values, blocks) = step_values(&u, t, spec, params, &kernel)?;
        let wall_seconds = clock.elapsed().as_secs_f64();
        if values.iter().any(|v| !v.is_finite()) {
            if trace.snapshot_steps.last() != Some(&n) {
                trace.push(n, u);
            }
            return Err(Error::NonFinite {
                step: n + 1,
                partial: Box::new(trace),
            });
        }
        let drift = values.iter().zip(u.values()).map(|(a, b)| a - b).sum::<f64>() / values.len() as f64;
        let next = GridFn::from_parts(values, u.step(), u.origin(), u.is_periodic());
        let step = n + 1;
        trace.per_step.push(StepRecord {
            step,
            time: t0 + step as f64 * tau,
            blocks,
            wall_seconds,
            drift,
        });
        observe(step, &next);
        if step % stride == 0 || step == steps || keep.contains(&step) {
            trace.push(step, next.clone());
        }
        u = next;
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minplus::{decompose, BlockKind};
    use crate::scheme::hamiltonian::Potential;
    use crate::scheme::step::step_fully_discrete;

    fn params(n: usize, tau: f64) -> SchemeParams {
        SchemeParams::unit_period(n, tau).unwrap()
    }

    #[test]
    fn one_step_matches_step_call() {
        let spec = HamiltonianSpec::mechanical_1d(0.5, Potential::Constant(0.25)).unwrap();
        let p = params(40, 0.1);
        let u0 = GridFn::from_fn(40, p.eps(), 0.0, true, |x| (6.0 * x).sin()).unwrap();
        let trace = evolve(&u0, 0.0, 1, &spec, &p, &EvolveOptions::default()).unwrap();
        assert_eq!(trace.len(), 2);
        let kernel = build_kernel(&spec, &p).unwrap();
        let direct = step_fully_discrete(&u0, 0.0, &spec, &p, &kernel).unwrap();
        assert_eq!(trace.last(), &direct);
        assert_eq!(trace.times, vec![0.0, 0.1]);
    }

    #[test]
    fn convex_data_stays_convex() {
        let spec = HamiltonianSpec::mechanical_1d(0.0, Potential::Zero).unwrap();
        let p = params(50, 0.1);
        let u0 = GridFn::from_fn(50, p.eps(), -0.5, false, |x| x.abs() + 3.0 * x * x).unwrap();
        let trace = evolve(&u0, 0.0, 20, &spec, &p, &EvolveOptions::every(1)).unwrap();
        assert_eq!(trace.len(), 21);
        for s in &trace.snapshots {
            assert_eq!(decompose(s, 1e-12).kinds(), vec![BlockKind::Convex]);
        }
    }

    #[test]
    fn thinning_keeps_ends_and_requested_steps() {
        let spec = HamiltonianSpec::mechanical_1d(0.0, Potential::Zero).unwrap();
        let p = params(10, 0.5);
        let u0 = GridFn::periodic(vec![0.0; 10], p.eps(), 0.0).unwrap();
        let options = EvolveOptions {
            stride: Some(4),
            keep_steps: vec![3],
        };
        let trace = evolve(&u0, 1.0, 10, &spec, &p, &options).unwrap();
        assert_eq!(trace.snapshot_steps, vec![0, 3, 4, 8, 10]);
        assert_eq!(trace.steps(), 10);
        assert!(trace.at_step(8).is_some() && trace.at_step(5).is_none());
        assert_eq!(EvolveOptions::default().effective_stride(1024), 1);
        assert_eq!(EvolveOptions::default().effective_stride(1025), 2);
    }

    #[test]
    fn blow_up_returns_partial_trace() {
        // Each step adds τ·MAX = MAX/2, so the third step overflows.
        let spec = HamiltonianSpec::mechanical_1d(0.0, Potential::Constant(-f64::MAX)).unwrap();
        let p = params(10, 0.5);
        let u0 = GridFn::periodic(vec![0.0; 10], p.eps(), 0.0).unwrap();
        match evolve(&u0, 0.0, 5, &spec, &p, &EvolveOptions::default()) {
            Err(Error::NonFinite { step, partial }) => {
                assert_eq!(step, 3);
                assert_eq!(partial.snapshot_steps, vec![0, 1, 2]);
                assert_eq!(partial.steps(), 2);
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
    }
}
