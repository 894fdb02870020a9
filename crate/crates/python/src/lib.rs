//! Python bindings: `import pylaxol`.
//!
//! Grid functions cross the boundary as lists of floats; the grid step and
//! origin come from the `Scheme` (periodic problems) or are passed explicitly.

use std::f64::consts::TAU;

use laxol::{
    build_kernel, build_period_matrix, conv_convex_concave, conv_convex_convex, conv_fast, conv_naive, decompose,
    eigenvalue_karp, estimate_hbar_drift, estimate_hbar_matrix, evolve, step_fully_discrete, BlockKind,
    EffectiveHEstimate, EvolveOptions, GridFn, HamiltonianSpec, Harmonic, Kinetic, Potential, SchemeParams,
};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: laxol::Error) -> PyErr {
    match e {
        laxol::Error::InvalidInput(m) => PyValueError::new_err(m),
        other => PyArithmeticError::new_err(other.to_string()),
    }
}

fn line(values: Vec<f64>, step: f64, origin: f64) -> PyResult<GridFn> {
    GridFn::new(values, step, origin).map_err(to_py)
}

/// Mechanical Hamiltonian `½(p + P)² + V(t, x)` in one dimension.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Hamiltonian {
    spec: HamiltonianSpec,
}

#[pymethods]
impl Hamiltonian {
    /// `V = 0`.
    #[staticmethod]
    #[pyo3(signature = (drift=0.0))]
    fn free(drift: f64) -> PyResult<Self> {
        Self::build(drift, Potential::Zero, None)
    }

    /// `V = value`.
    #[staticmethod]
    #[pyo3(signature = (value, drift=0.0))]
    fn constant(value: f64, drift: f64) -> PyResult<Self> {
        Self::build(drift, Potential::Constant(value), None)
    }

    /// `V = amplitude·(1 - cos(wavenumber·x))`.
    #[staticmethod]
    #[pyo3(signature = (drift, amplitude=1.0, wavenumber=1.0))]
    fn pendulum(drift: f64, amplitude: f64, wavenumber: f64) -> PyResult<Self> {
        let potential = Potential::Harmonics {
            offset: amplitude,
            terms: vec![Harmonic::spatial(-amplitude, wavenumber, 0.0)],
        };
        Self::build(drift, potential, None)
    }

    /// `V = offset + Σ a·cos(k x + φ)·cos(ν t + ψ)` with `terms` a list of
    /// `(a, k, φ, ν, ψ)` tuples.
    #[staticmethod]
    #[pyo3(signature = (drift, terms, offset=0.0, time_period=None))]
    fn harmonics(
        drift: f64,
        terms: Vec<(f64, f64, f64, f64, f64)>,
        offset: f64,
        time_period: Option<f64>,
    ) -> PyResult<Self> {
        let terms = terms
            .into_iter()
            .map(|(amplitude, k, phase, time_frequency, time_phase)| Harmonic {
                amplitude,
                wavevector: vec![k],
                phase,
                time_frequency,
                time_phase,
            })
            .collect();
        Self::build(drift, Potential::Harmonics { offset, terms }, time_period)
    }

    /// `V = amplitude·sin(t)·cos(wavenumber·x)`, time period 2π.
    #[staticmethod]
    #[pyo3(signature = (drift, wavenumber, amplitude=1.0))]
    fn sin_t_cos(drift: f64, wavenumber: f64, amplitude: f64) -> PyResult<Self> {
        let term = Harmonic {
            amplitude,
            wavevector: vec![wavenumber],
            phase: 0.0,
            time_frequency: 1.0,
            time_phase: -TAU / 4.0,
        };
        let potential = Potential::Harmonics {
            offset: 0.0,
            terms: vec![term],
        };
        Self::build(drift, potential, Some(TAU))
    }

    fn potential(&self, t: f64, x: f64) -> f64 {
        self.spec.potential().eval(t, &[x])
    }

    #[getter]
    fn is_autonomous(&self) -> bool {
        self.spec.is_autonomous()
    }

    fn __repr__(&self) -> String {
        format!("Hamiltonian({:?}, {:?})", self.spec.kinetic(), self.spec.potential())
    }
}

impl Hamiltonian {
    fn build(drift: f64, potential: Potential, time_period: Option<f64>) -> PyResult<Self> {
        let spec = HamiltonianSpec::new(Kinetic::mechanical_1d(drift), potential, time_period).map_err(to_py)?;
        Ok(Hamiltonian { spec })
    }
}

/// Discretization: `n_space` points on a period of length `length` starting
/// at `x_min`, time step `tau`, decomposition tolerance `eta`.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Scheme {
    params: SchemeParams,
    x_min: f64,
}

#[pymethods]
impl Scheme {
    #[new]
    #[pyo3(signature = (n_space, tau, length=1.0, x_min=0.0, eta=0.0, h0=1.0))]
    fn new(n_space: usize, tau: f64, length: f64, x_min: f64, eta: f64, h0: f64) -> PyResult<Self> {
        let params = SchemeParams::new(n_space, length, tau, eta, h0, laxol::CflMode::Fail).map_err(to_py)?;
        Ok(Scheme { params, x_min })
    }

    #[getter]
    fn eps(&self) -> f64 {
        self.params.eps()
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.params.tau()
    }

    #[getter]
    fn n_space(&self) -> usize {
        self.params.n_space()
    }

    /// Grid coordinates `x_min + iε`.
    fn grid(&self) -> Vec<f64> {
        (0..self.params.n_space()).map(|i| self.x_min + i as f64 * self.params.eps()).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Scheme(n_space={}, tau={}, eps={}, eta={})",
            self.params.n_space(),
            self.params.tau(),
            self.params.eps(),
            self.params.eta()
        )
    }
}

impl Scheme {
    fn periodic(&self, values: Vec<f64>) -> PyResult<GridFn> {
        GridFn::periodic(values, self.params.eps(), self.x_min).map_err(to_py)
    }
}

#[pyfunction]
fn conv_naive_values(f: Vec<f64>, g: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(conv_naive(&line(f, 1.0, 0.0)?, &line(g, 1.0, 0.0)?)
        .map_err(to_py)?
        .into_values())
}

#[pyfunction]
fn conv_convex_convex_values(f: Vec<f64>, g: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(conv_convex_convex(&line(f, 1.0, 0.0)?, &line(g, 1.0, 0.0)?)
        .map_err(to_py)?
        .into_values())
}

#[pyfunction]
fn conv_convex_concave_values(f: Vec<f64>, g: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(conv_convex_concave(&line(f, 1.0, 0.0)?, &line(g, 1.0, 0.0)?)
        .map_err(to_py)?
        .into_values())
}

/// Block-decomposed convolution; returns `(values, block_count)`.
#[pyfunction]
#[pyo3(signature = (kernel, u, eta=0.0))]
fn conv_fast_values(kernel: Vec<f64>, u: Vec<f64>, eta: f64) -> PyResult<(Vec<f64>, usize)> {
    let r = conv_fast(&line(kernel, 1.0, 0.0)?, &line(u, 1.0, 0.0)?, eta).map_err(to_py)?;
    Ok((r.result.into_values(), r.blocks))
}

/// Convex/concave runs as `(kind, start, end)` with inclusive sample ranges.
#[pyfunction]
#[pyo3(signature = (u, eta=0.0))]
fn decompose_blocks(u: Vec<f64>, eta: f64) -> PyResult<Vec<(&'static str, usize, usize)>> {
    let d = decompose(&line(u, 1.0, 0.0)?, eta);
    Ok(d.blocks()
        .iter()
        .map(|b| {
            let kind = match b.kind {
                BlockKind::Convex => "convex",
                BlockKind::Concave => "concave",
            };
            (kind, b.start, b.end)
        })
        .collect())
}

/// One fully discrete step of a periodic grid function from time `t`.
#[pyfunction]
fn step(u: Vec<f64>, t: f64, hamiltonian: &Hamiltonian, scheme: &Scheme) -> PyResult<Vec<f64>> {
    let kernel = build_kernel(&hamiltonian.spec, &scheme.params).map_err(to_py)?;
    let u = scheme.periodic(u)?;
    Ok(step_fully_discrete(&u, t, &hamiltonian.spec, &scheme.params, &kernel)
        .map_err(to_py)?
        .into_values())
}

/// Runs `steps` steps; returns a dict with `steps`, `times`, `snapshots` and
/// per-step `blocks`.
#[pyfunction]
#[pyo3(signature = (u0, t0, steps, hamiltonian, scheme, stride=None))]
fn run<'py>(
    py: Python<'py>,
    u0: Vec<f64>,
    t0: f64,
    steps: usize,
    hamiltonian: &Hamiltonian,
    scheme: &Scheme,
    stride: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let u0 = scheme.periodic(u0)?;
    let options = EvolveOptions {
        stride,
        keep_steps: Vec::new(),
    };
    let trace = evolve(&u0, t0, steps, &hamiltonian.spec, &scheme.params, &options).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("steps", trace.snapshot_steps.clone())?;
    out.set_item("times", trace.times.clone())?;
    let snaps: Vec<Vec<f64>> = trace.snapshots.iter().map(|s| s.values().to_vec()).collect();
    out.set_item("snapshots", snaps)?;
    let blocks: Vec<usize> = trace.per_step.iter().map(|r| r.blocks).collect();
    out.set_item("blocks", blocks)?;
    Ok(out)
}

fn estimate_dict<'py>(py: Python<'py>, e: &EffectiveHEstimate) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    out.set_item("h_bar", e.h_bar)?;
    out.set_item("method", e.method.as_str())?;
    out.set_item("n_steps", e.n_steps)?;
    out.set_item("residual", e.residual)?;
    out.set_item("converged", e.converged)?;
    out.set_item("cycle", e.cycle)?;
    out.set_item("state", e.state.values().to_vec())?;
    Ok(out)
}

/// Effective Hamiltonian from the long-time drift of the scheme.
#[pyfunction]
#[pyo3(signature = (u0, hamiltonian, scheme, max_periods=1000, tol=1e-8))]
fn hbar_drift<'py>(
    py: Python<'py>,
    u0: Vec<f64>,
    hamiltonian: &Hamiltonian,
    scheme: &Scheme,
    max_periods: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let u0 = scheme.periodic(u0)?;
    let e = estimate_hbar_drift(&u0, &hamiltonian.spec, &scheme.params, max_periods, tol).map_err(to_py)?;
    estimate_dict(py, &e)
}

/// Effective Hamiltonian as the (min,plus) eigenvalue of the period matrix.
#[pyfunction]
fn hbar_matrix<'py>(py: Python<'py>, hamiltonian: &Hamiltonian, scheme: &Scheme) -> PyResult<Bound<'py, PyDict>> {
    let e = estimate_hbar_matrix(&hamiltonian.spec, &scheme.params, scheme.x_min).map_err(to_py)?;
    estimate_dict(py, &e)
}

/// One-period transition matrix as a list of rows (origin 0, start time 0).
#[pyfunction]
fn period_matrix(hamiltonian: &Hamiltonian, scheme: &Scheme) -> PyResult<Vec<Vec<f64>>> {
    let c = build_period_matrix(&hamiltonian.spec, &scheme.params).map_err(to_py)?;
    Ok((0..c.size()).map(|y| c.row(y).to_vec()).collect())
}

/// Minimum cycle mean of a square matrix given as rows.
#[pyfunction]
fn karp_eigenvalue(rows: Vec<Vec<f64>>) -> PyResult<f64> {
    let c = laxol::MinPlusMatrix::from_rows(&rows).map_err(to_py)?;
    Ok(eigenvalue_karp(&c))
}

#[pymodule]
fn pylaxol(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Hamiltonian>()?;
    m.add_class::<Scheme>()?;
    m.add_function(wrap_pyfunction!(conv_naive_values, m)?)?;
    m.add_function(wrap_pyfunction!(conv_convex_convex_values, m)?)?;
    m.add_function(wrap_pyfunction!(conv_convex_concave_values, m)?)?;
    m.add_function(wrap_pyfunction!(conv_fast_values, m)?)?;
    m.add_function(wrap_pyfunction!(decompose_blocks, m)?)?;
    m.add_function(wrap_pyfunction!(step, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(hbar_drift, m)?)?;
    m.add_function(wrap_pyfunction!(hbar_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(period_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(karp_eigenvalue, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
