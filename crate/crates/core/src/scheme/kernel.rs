use crate::error::{Error, Result};
use crate::grid::GridFn;

use super::hamiltonian::{HamiltonianSpec, Kinetic};
use super::params::SchemeParams;

/// The convex convolution kernel `x ↦ τ·K*(x/τ)` on a window of width
/// `2·length` centered on the grid point nearest to `τ·argmin K*`.
///
/// Sample `k` of the window is the displacement `d = center - n_space + k`
/// grid steps.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    window: GridFn,
    argmin_index: usize,
    center: isize,
    half_width: usize,
}

impl Kernel {
    pub fn window(&self) -> &GridFn {
        &self.window
    }

    /// Index of the smallest window sample.
    pub fn argmin_index(&self) -> usize {
        self.argmin_index
    }

    /// Displacement (in grid steps) the window is centered on.
    pub fn center(&self) -> isize {
        self.center
    }

    /// Samples on each side of the center.
    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Displacement of window sample 0.
    pub fn first_displacement(&self) -> isize {
        self.center - self.half_width as isize
    }

    /// Kernel value at displacement `d`, `+∞` outside the window.
    pub fn at_displacement(&self, d: isize) -> f64 {
        self.window.at(d - self.first_displacement())
    }

    pub fn displacements(&self) -> std::ops::RangeInclusive<isize> {
        self.first_displacement()..=self.center + self.half_width as isize
    }
}

/// Kernel for a one-dimensional Hamiltonian.
pub fn build_kernel(spec: &HamiltonianSpec, params: &SchemeParams) -> Result<Kernel> {
    if spec.dim() != 1 {
        return Err(Error::invalid(format!(
            "build_kernel needs a 1D Hamiltonian, got dimension {}",
            spec.dim()
        )));
    }
    build_axis_kernel(spec.kinetic(), 0, params)
}

/// Kernel of the axis-`axis` factor of a separable kinetic part.
pub fn build_axis_kernel(kinetic: &Kinetic, axis: usize, params: &SchemeParams) -> Result<Kernel> {
    if axis >= kinetic.dim() {
        return Err(Error::invalid(format!("axis {axis} out of range")));
    }
    if kinetic.dim() > 1 && !kinetic.is_separable() {
        return Err(Error::invalid("axis kernels need a separable kinetic part"));
    }
    let half_width = params.n_space();
    if half_width < 1 {
        return Err(Error::invalid("kernel window narrower than two samples"));
    }
    let (eps, tau) = (params.eps(), params.tau());
    let center = (tau * kinetic.axis_argmin(axis) / eps).round() as isize;
    let first = center - half_width as isize;
    let len = 2 * half_width + 1;
    let mut values = Vec::with_capacity(len);
    for k in 0..len {
        let d = first + k as isize;
        let v = d as f64 * eps / tau;
        let kstar = kinetic.axis_conjugate(axis, v).ok_or_else(|| {
            Error::invalid(format!(
                "velocity {v} needed by the kernel window lies outside the tabulated range"
            ))
        })?;
        let value = tau * kstar;
        if !value.is_finite() {
            return Err(Error::Evaluation(format!("kernel value at velocity {v} is not finite")));
        }
        values.push(value);
    }
    let argmin_index = values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bk, bv), (k, &v)| if v < bv { (k, v) } else { (bk, bv) })
        .0;
    let window = GridFn::new(values, eps, first as f64 * eps)?;
    Ok(Kernel {
        window,
        argmin_index,
        center,
        half_width,
    })
}
