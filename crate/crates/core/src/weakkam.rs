//! Long-time behavior of the discrete semigroup: effective Hamiltonian
//! estimators, weak-KAM residuals and a min-plus matrix eigenvalue oracle.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridFn;
use crate::scheme::{build_kernel, step_fully_discrete, EvolutionTrace, HamiltonianSpec, Kernel, SchemeParams};

/// Default tolerance for fixed-point and periodicity detection in
/// autonomous problems.
pub const DEFAULT_FIXED_POINT_TOL: f64 = 1e-8;
/// Default tolerance on successive per-period increments.
pub const DEFAULT_DRIFT_TOL: f64 = 1e-6;
/// Longest cycle of per-period increments the drift estimator looks for.
pub const MAX_INCREMENT_CYCLE: usize = 8;
/// Largest quotient grid [`build_period_matrix`] accepts.
pub const MAX_MATRIX_SIZE: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimateMethod {
    Drift,
    MatrixEigenvalue,
}

impl EstimateMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimateMethod::Drift => "drift",
            EstimateMethod::MatrixEigenvalue => "matrix_eigenvalue",
        }
    }
}

/// An estimate of the discrete effective Hamiltonian, per unit time.
#[derive(Clone, Debug)]
pub struct EffectiveHEstimate {
    pub h_bar: f64,
    pub method: EstimateMethod,
    /// Scheme steps performed (one period for the matrix method).
    pub n_steps: usize,
    /// `|T u - u - h_bar·T|∞` for the returned `state`, `T` the time period.
    pub residual: f64,
    pub converged: bool,
    /// Length, in periods, of the cycle of increments detected (drift
    /// method; 1 means the increments became constant).
    pub cycle: usize,
    /// Final iterate (drift) or critical eigenvector (matrix).
    pub state: GridFn,
}

/// Dense square matrix over the (min,plus) semiring; entry `(y, x)` is the
/// cost of going from source `y` to target `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct MinPlusMatrix {
    n: usize,
    data: Vec<f64>,
}

impl MinPlusMatrix {
    /// Row-major entries; all must be finite.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::invalid(format!("expected {n}×{n} entries, got {}", data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix entries must be finite"));
        }
        Ok(MinPlusMatrix { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("matrix rows must have equal length n"));
        }
        Self::new(n, rows.concat())
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.n + x]
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.n..(y + 1) * self.n]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Row-vector product `(u ⊗ C)[x] = min_y u[y] + C[y][x]`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.n, "vector length does not match matrix size");
        let mut out = vec![f64::INFINITY; self.n];
        for (y, &uy) in u.iter().enumerate() {
            for (o, &c) in out.iter_mut().zip(self.row(y)) {
                let v = uy + c;
                if v < *o {
                    *o = v;
                }
            }
        }
        out
    }

    /// `(self ⊗ other)[y][x] = min_z self[y][z] + other[z][x]`.
    pub fn product(&self, other: &MinPlusMatrix) -> MinPlusMatrix {
        assert_eq!(self.n, other.n, "matrix sizes differ");
        let n = self.n;
        let mut data = vec![0.0; n * n];
        data.par_chunks_mut(n)
            .enumerate()
            .for_each(|(y, row)| row.copy_from_slice(&other.apply(self.row(y))));
        MinPlusMatrix { n, data }
    }
}

/// Number of steps per time period, requiring `τ` to divide the period.
pub(crate) fn steps_per_period(spec: &HamiltonianSpec, params: &SchemeParams) -> Result<(usize, f64)> {
    let period = spec.analysis_period().ok_or_else(|| {
        Error::invalid("time-dependent potential needs a declared time period")
    })?;
    let ratio = period / params.tau();
    let steps = ratio.round();
    if steps < 1.0 || (steps - ratio).abs() > 1e-9 * ratio {
        return Err(Error::invalid(format!(
            "tau = {} does not divide the time period {period}",
            params.tau()
        )));
    }
    Ok((steps as usize, period))
}

fn check_1d_periodic(u: &GridFn, spec: &HamiltonianSpec, params: &SchemeParams) -> Result<()> {
    if spec.dim() != 1 {
        return Err(Error::invalid("long-time analysis is one-dimensional"));
    }
    if !u.is_periodic() || u.len() != params.n_space() {
        return Err(Error::invalid(format!(
            "expected a periodic grid function with {} samples",
            params.n_space()
        )));
    }
    Ok(())
}

fn advance_period(
    u: &GridFn,
    t0: f64,
    steps: usize,
    spec: &HamiltonianSpec,
    params: &SchemeParams,
    kernel: &Kernel,
) -> Result<GridFn> {
    let mut u = u.clone();
    for i in 0..steps {
        u = step_fully_discrete(&u, t0 + i as f64 * params.tau(), spec, params, kernel)?;
    }
    Ok(u)
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Iterates whole time periods from `u0` until `u_{k+p} - u_k` is constant
/// up to `tol` (max minus min) for some `p ≤ MAX_INCREMENT_CYCLE`, smallest `p`
/// first. Monotonicity and non-expansiveness then pin every later `p`-period
/// increment to the same constant within `tol`, so the estimate is that
/// constant divided by `p` periods. Without convergence after `max_periods`
/// periods the increments of the second half of the run are averaged and
/// `converged` is false.
pub fn estimate_hbar_drift(
    u0: &GridFn,
    spec: &HamiltonianSpec,
    params: &SchemeParams,
    max_periods: usize,
    tol: f64,
) -> Result<EffectiveHEstimate> {
    check_1d_periodic(u0, spec, params)?;
    if max_periods < 1 {
        return Err(Error::invalid("max_periods must be at least 1"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol must be positive"));
    }
    let (ell, period) = steps_per_period(spec, params)?;
    let kernel = build_kernel(spec, params)?;

    let mut increments: Vec<Vec<f64>> = Vec::new();
    let mut u = u0.clone();
    let mut prev = u0.clone();
    for k in 0..max_periods {
        let next = advance_period(&u, k as f64 * period, ell, spec, params, &kernel)?;
        let d: Vec<f64> = next.values().iter().zip(u.values()).map(|(a, b)| a - b).collect();
        increments.push(d);
        prev = u;
        u = next;
        let last = increments.len() - 1;
        let cycle = (1..=MAX_INCREMENT_CYCLE.min(last + 1)).find(|&p| spread(&summed(&increments[last + 1 - p..])) < tol);
        if let Some(p) = cycle {
            let total = summed(&increments[last + 1 - p..]);
            let h_bar = mean(&total) / (p as f64 * period);
            let residual = residual_from_increment(&increments[last], h_bar * period);
            return Ok(EffectiveHEstimate {
                h_bar,
                method: EstimateMethod::Drift,
                n_steps: (k + 1) * ell,
                residual,
                converged: true,
                cycle: p,
                state: prev,
            });
        }
    }
    let half = increments.len() / 2;
    let tail = &increments[half..];
    let h_bar = tail.iter().map(|d| mean(d)).sum::<f64>() / tail.len() as f64 / period;
    let residual = residual_from_increment(increments.last().expect("at least one period"), h_bar * period);
    log::warn!("drift estimate did not converge within {max_periods} periods");
    Ok(EffectiveHEstimate {
        h_bar,
        method: EstimateMethod::Drift,
        n_steps: max_periods * ell,
        residual,
        converged: false,
        cycle: 0,
        state: prev,
    })
}

fn summed(increments: &[Vec<f64>]) -> Vec<f64> {
    let mut total = vec![0.0; increments[0].len()];
    for d in increments {
        for (t, v) in total.iter_mut().zip(d) {
            *t += v;
        }
    }
    total
}

fn spread(v: &[f64]) -> f64 {
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    hi - lo
}

fn residual_from_increment(d: &[f64], shift: f64) -> f64 {
    d.iter().map(|v| (v - shift).abs()).fold(0.0, f64::max)
}

/// `|T u - u - h_bar·T|∞` with `T` one time period of the scheme started at
/// time 0.
pub fn fixed_point_residual(u: &GridFn, h_bar: f64, spec: &HamiltonianSpec, params: &SchemeParams) -> Result<f64> {
    check_1d_periodic(u, spec, params)?;
    let (ell, period) = steps_per_period(spec, params)?;
    let kernel = build_kernel(spec, params)?;
    let next = advance_period(u, 0.0, ell, spec, params, &kernel)?;
    let d: Vec<f64> = next.values().iter().zip(u.values()).map(|(a, b)| a - b).collect();
    Ok(residual_from_increment(&d, h_bar * period))
}

/// One-period transition matrix on the quotient grid with origin 0, starting
/// at time 0.
pub fn build_period_matrix(spec: &HamiltonianSpec, params: &SchemeParams) -> Result<MinPlusMatrix> {
    build_period_matrix_at(spec, params, 0.0, 0.0)
}

/// One-period transition matrix for grid points `origin + iε`, starting at
/// time `t0`: the (min,plus) product `S_0 ⊗ … ⊗ S_{ℓ-1}` of the per-step
/// matrices `S_i[y][x] = min_{d ≡ x-y (mod N)} τK*(dε/τ) - τV(s_i, x)`, the
/// minimum taken over the kernel window.
pub fn build_period_matrix_at(
    spec: &HamiltonianSpec,
    params: &SchemeParams,
    origin: f64,
    t0: f64,
) -> Result<MinPlusMatrix> {
    if spec.dim() != 1 {
        return Err(Error::invalid("period matrix is one-dimensional"));
    }
    let n = params.n_space();
    if n > MAX_MATRIX_SIZE {
        return Err(Error::invalid(format!(
            "n_space = {n} exceeds the dense matrix limit {MAX_MATRIX_SIZE}"
        )));
    }
    let (ell, _) = steps_per_period(spec, params)?;
    let kernel = build_kernel(spec, params)?;
    let mut residue_cost = vec![f64::INFINITY; n];
    for d in kernel.displacements() {
        let r = d.rem_euclid(n as isize) as usize;
        residue_cost[r] = residue_cost[r].min(kernel.at_displacement(d));
    }
    let tau = params.tau();
    let eps = params.eps();
    let mut product: Option<MinPlusMatrix> = None;
    for i in 0..ell {
        let s = params.potential_sample_time(t0 + i as f64 * tau);
        let pot: Vec<f64> = (0..n)
            .map(|x| {
                let xc = origin + x as f64 * eps;
                let v = spec.potential().eval(s, &[xc]);
                if v.is_finite() {
                    Ok(tau * v)
                } else {
                    Err(Error::Evaluation(format!("V({s}, {xc}) is not finite")))
                }
            })
            .collect::<Result<_>>()?;
        let mut data = vec![0.0; n * n];
        for (y, row) in data.chunks_mut(n).enumerate() {
            for (x, slot) in row.iter_mut().enumerate() {
                *slot = residue_cost[(x + n - y) % n] - pot[x];
            }
        }
        let step = MinPlusMatrix::new(n, data)?;
        product = Some(match product {
            None => step,
            Some(p) => p.product(&step),
        });
    }
    Ok(product.expect("at least one step per period"))
}

/// Minimum cycle mean of the complete digraph with arc weights `C[y][x]`
/// (Karp's algorithm, `O(n³)`). For a matrix with finite entries this is its
/// unique (min,plus) eigenvalue.
pub fn eigenvalue_karp(c: &MinPlusMatrix) -> f64 {
    let n = c.size();
    // dist[k][v]: cheapest walk of exactly k arcs ending at v, from any start.
    let mut dist = vec![vec![0.0; n]; n + 1];
    for k in 1..=n {
        let next = c.apply(&dist[k - 1]);
        dist[k] = next;
    }
    let mut best = f64::INFINITY;
    for v in 0..n {
        let mut worst = f64::NEG_INFINITY;
        for k in 0..n {
            let mean = (dist[n][v] - dist[k][v]) / (n - k) as f64;
            worst = worst.max(mean);
        }
        best = best.min(worst);
    }
    best
}

/// A (min,plus) eigenvector for eigenvalue `lambda`: the row of the Kleene
/// plus of `C - lambda` at a critical node.
pub fn eigenvector(c: &MinPlusMatrix, lambda: f64) -> Vec<f64> {
    let n = c.size();
    let mut a: Vec<f64> = c.data().iter().map(|v| v - lambda).collect();
    for k in 0..n {
        let row_k: Vec<f64> = a[k * n..(k + 1) * n].to_vec();
        for i in 0..n {
            let aik = a[i * n + k];
            for (aij, &akj) in a[i * n..(i + 1) * n].iter_mut().zip(&row_k) {
                let v = aik + akj;
                if v < *aij {
                    *aij = v;
                }
            }
        }
    }
    let critical = (0..n)
        .min_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]))
        .expect("nonempty matrix");
    a[critical * n..(critical + 1) * n].to_vec()
}

/// `|u ⊗ C - u - lambda|∞`.
pub fn matrix_residual(c: &MinPlusMatrix, u: &[f64], lambda: f64) -> f64 {
    let next = c.apply(u);
    next.iter().zip(u).map(|(a, b)| (a - b - lambda).abs()).fold(0.0, f64::max)
}

/// Effective Hamiltonian from the eigenvalue of the one-period matrix, for
/// the grid of `params` with origin `origin`.
pub fn estimate_hbar_matrix(spec: &HamiltonianSpec, params: &SchemeParams, origin: f64) -> Result<EffectiveHEstimate> {
    let (ell, period) = steps_per_period(spec, params)?;
    let c = build_period_matrix_at(spec, params, origin, 0.0)?;
    let lambda = eigenvalue_karp(&c);
    let v = eigenvector(&c, lambda);
    let residual = matrix_residual(&c, &v, lambda);
    Ok(EffectiveHEstimate {
        h_bar: lambda / period,
        method: EstimateMethod::MatrixEigenvalue,
        n_steps: ell,
        residual,
        converged: true,
        cycle: 1,
        state: GridFn::periodic(v, params.eps(), origin)?,
    })
}

/// Searches the drift-compensated snapshots `w_n = u_n - (t_n - t_0)·h_bar`
/// for the first `j` with some `i < j` and `|w_i - w_j|∞ < tol`, returning
/// `(preperiod, period)` in steps. With `period_steps` set only snapshot
/// pairs whose step difference is a multiple of it are compared.
pub fn detect_eventual_periodicity(
    trace: &EvolutionTrace,
    h_bar: f64,
    tol: f64,
    period_steps: Option<usize>,
) -> Option<(usize, usize)> {
    let shifted: Vec<Vec<f64>> = trace
        .snapshots
        .iter()
        .zip(&trace.times)
        .map(|(u, &t)| {
            let s = (t - trace.t0) * h_bar;
            u.values().iter().map(|v| v - s).collect()
        })
        .collect();
    let steps = &trace.snapshot_steps;
    for j in 1..shifted.len() {
        for i in 0..j {
            let gap = steps[j] - steps[i];
            if let Some(p) = period_steps {
                if p == 0 || gap % p != 0 {
                    continue;
                }
            }
            if sup_diff(&shifted[i], &shifted[j]) < tol {
                return Some((steps[i], gap));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{evolve, CflMode, EvolveOptions, Harmonic, Potential};
    use rand::{Rng, SeedableRng};

    fn params(n: usize, tau: f64) -> SchemeParams {
        SchemeParams::new(n, 1.0, tau, 0.0, 1.0, CflMode::Fail).unwrap()
    }

    fn brute_min_cycle_mean(c: &MinPlusMatrix) -> f64 {
        fn dfs(c: &MinPlusMatrix, start: usize, v: usize, len: usize, cost: f64, seen: &mut Vec<bool>, best: &mut f64) {
            let back = (cost + c.get(v, start)) / (len + 1) as f64;
            *best = best.min(back);
            for w in start + 1..c.size() {
                if !seen[w] {
                    seen[w] = true;
                    dfs(c, start, w, len + 1, cost + c.get(v, w), seen, best);
                    seen[w] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        for s in 0..c.size() {
            let mut seen = vec![false; c.size()];
            seen[s] = true;
            dfs(c, s, s, 0, 0.0, &mut seen, &mut best);
        }
        best
    }

    #[test]
    fn karp_small_cases() {
        let z = MinPlusMatrix::new(3, vec![0.0; 9]).unwrap();
        assert_eq!(eigenvalue_karp(&z), 0.0);
        let c = MinPlusMatrix::from_rows(&[vec![0.0, 5.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(eigenvalue_karp(&c), 0.0);
        let c = MinPlusMatrix::from_rows(&[vec![4.0, 1.0], vec![2.0, 6.0]]).unwrap();
        assert_eq!(eigenvalue_karp(&c), 1.5);
    }

    #[test]
    fn karp_matches_cycle_enumeration() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for n in 1..=8 {
            for _ in 0..10 {
                let data = (0..n * n).map(|_| rng.gen_range(-5.0..5.0)).collect();
                let c = MinPlusMatrix::new(n, data).unwrap();
                let karp = eigenvalue_karp(&c);
                assert!((karp - brute_min_cycle_mean(&c)).abs() < 1e-12);
                let v = eigenvector(&c, karp);
                assert!(matrix_residual(&c, &v, karp) < 1e-12);
            }
        }
    }

    #[test]
    fn zero_potential_matrix_is_circulant() {
        let spec = HamiltonianSpec::mechanical_1d(0.3, Potential::Zero).unwrap();
        let p = params(12, 1.0);
        let c = build_period_matrix(&spec, &p).unwrap();
        for y in 0..12 {
            for x in 0..12 {
                assert_eq!(c.get(y, x), c.get((y + 1) % 12, (x + 1) % 12));
            }
        }
    }

    #[test]
    fn matrix_matches_scheme_steps() {
        let pot = Potential::Harmonics {
            offset: 0.2,
            terms: vec![Harmonic {
                amplitude: 0.7,
                wavevector: vec![std::f64::consts::TAU],
                phase: 0.4,
                time_frequency: std::f64::consts::TAU,
                time_phase: 0.0,
            }],
        };
        let spec = HamiltonianSpec::new(crate::Kinetic::mechanical_1d(0.6), pot, Some(1.0)).unwrap();
        let p = params(32, 0.25);
        let c = build_period_matrix(&spec, &p).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let u: Vec<f64> = (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = GridFn::periodic(u, p.eps(), 0.0).unwrap();
        let kernel = build_kernel(&spec, &p).unwrap();
        let stepped = advance_period(&u, 0.0, 4, &spec, &p, &kernel).unwrap();
        let via_matrix = c.apply(u.values());
        assert!(sup_diff(stepped.values(), &via_matrix) < 1e-13);
    }

    #[test]
    fn drift_trivial_cases() {
        let p = params(20, 0.25);
        let u0 = GridFn::periodic(vec![1.0; 20], p.eps(), 0.0).unwrap();

        let spec = HamiltonianSpec::mechanical_1d(0.0, Potential::Zero).unwrap();
        let e = estimate_hbar_drift(&u0, &spec, &p, 10, DEFAULT_DRIFT_TOL).unwrap();
        assert_eq!(e.h_bar, 0.0);
        assert_eq!(e.residual, 0.0);
        assert!(e.converged);

        let spec = HamiltonianSpec::mechanical_1d(0.0, Potential::Constant(0.75)).unwrap();
        let e = estimate_hbar_drift(&u0, &spec, &p, 10, DEFAULT_DRIFT_TOL).unwrap();
        assert!((e.h_bar + 0.75).abs() < 1e-14);

        // τP/ε = 0.25·1.6·20 = 8.
        let spec = HamiltonianSpec::mechanical_1d(1.6, Potential::Zero).unwrap();
        let e = estimate_hbar_drift(&u0, &spec, &p, 10, DEFAULT_DRIFT_TOL).unwrap();
        assert!((e.h_bar + 1.28).abs() < 1e-14);
    }

    #[test]
    fn drift_rejects_non_dividing_tau() {
        let spec = HamiltonianSpec::mechanical_1d(0.0, Potential::Zero).unwrap();
        let p = params(20, 0.3);
        let u0 = GridFn::periodic(vec![0.0; 20], p.eps(), 0.0).unwrap();
        assert!(estimate_hbar_drift(&u0, &spec, &p, 10, 1e-6).is_err());
    }

    #[test]
    fn drift_and_matrix_agree_on_pendulum() {
        let pot = Potential::Harmonics {
            offset: 1.0,
            terms: vec![Harmonic::spatial(-1.0, std::f64::consts::TAU, 0.0)],
        };
        let spec = HamiltonianSpec::mechanical_1d(0.4, pot).unwrap();
        let p = params(48, 0.125);
        let u0 = GridFn::from_fn(48, p.eps(), 0.0, true, |x| (std::f64::consts::TAU * 2.0 * x).cos()).unwrap();
        let drift = estimate_hbar_drift(&u0, &spec, &p, 400, 1e-10).unwrap();
        assert!(drift.converged);
        let matrix = estimate_hbar_matrix(&spec, &p, 0.0).unwrap();
        assert!((drift.h_bar - matrix.h_bar).abs() < 1e-8, "{} {}", drift.h_bar, matrix.h_bar);
        assert!(matrix.residual < 1e-10);
        let r = fixed_point_residual(&matrix.state, matrix.h_bar, &spec, &p).unwrap();
        assert!(r < 1e-10);
    }

    #[test]
    fn periodicity_of_constant_fixed_point() {
        let spec = HamiltonianSpec::mechanical_1d(0.0, Potential::Zero).unwrap();
        let p = params(10, 0.5);
        let u0 = GridFn::periodic(vec![2.0; 10], p.eps(), 0.0).unwrap();
        let trace = evolve(&u0, 0.0, 4, &spec, &p, &EvolveOptions::default()).unwrap();
        assert_eq!(detect_eventual_periodicity(&trace, 0.0, 1e-8, None), Some((0, 1)));
    }

    #[test]
    fn short_trace_has_no_period() {
        let spec = HamiltonianSpec::mechanical_1d(0.0, Potential::Zero).unwrap();
        let p = params(40, 0.1);
        let u0 = GridFn::from_fn(40, p.eps(), 0.0, true, |x| 5.0 * (std::f64::consts::TAU * x).sin()).unwrap();
        let trace = evolve(&u0, 0.0, 2, &spec, &p, &EvolveOptions::default()).unwrap();
        assert_eq!(detect_eventual_periodicity(&trace, 0.0, 1e-8, None), None);
    }

    #[test]
    fn matrix_size_guard() {
        let spec = HamiltonianSpec::mechanical_1d(0.0, Potential::Zero).unwrap();
        let p = params(600, 0.1);
        assert!(build_period_matrix(&spec, &p).is_err());
    }
}
