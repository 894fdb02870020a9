//! Sampled functions on uniform grids.

use crate::error::{Error, Result};

/// A real function sampled on the uniform grid `origin + i·step`.
///
/// Outside the stored index range the function is `+∞`. When `periodic` is
/// set the samples hold exactly one period, of length `len()·step`, and index
/// arithmetic wraps.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFn {
    values: Vec<f64>,
    step: f64,
    origin: f64,
    periodic: bool,
}

/// Difference of two consecutive samples, `u[i] - u[i-1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Slope(pub f64);

impl GridFn {
    /// A non-periodic grid function.
    pub fn new(values: Vec<f64>, step: f64, origin: f64) -> Result<Self> {
        Self::build(values, step, origin, false)
    }

    /// One period of a periodic grid function.
    pub fn periodic(values: Vec<f64>, step: f64, origin: f64) -> Result<Self> {
        Self::build(values, step, origin, true)
    }

    /// Samples `f(origin + i·step)` for `i in 0..len`.
    pub fn from_fn(
        len: usize,
        step: f64,
        origin: f64,
        periodic: bool,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let values = (0..len).map(|i| f(origin + i as f64 * step)).collect();
        Self::build(values, step, origin, periodic)
    }

    fn build(values: Vec<f64>, step: f64, origin: f64, periodic: bool) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("grid function needs at least one sample"));
        }
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::invalid(format!("grid step must be positive, got {step}")));
        }
        if !origin.is_finite() {
            return Err(Error::invalid("grid origin must be finite"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {i}")));
        }
        Ok(GridFn {
            values,
            step,
            origin,
            periodic,
        })
    }

    /// Constructor for values already known to be finite.
    pub(crate) fn from_parts(values: Vec<f64>, step: f64, origin: f64, periodic: bool) -> Self {
        debug_assert!(!values.is_empty() && step > 0.0);
        GridFn {
            values,
            step,
            origin,
            periodic,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the last sample, `n` in `0..=n`.
    pub fn last_index(&self) -> usize {
        self.values.len() - 1
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    /// Period length for periodic functions.
    pub fn period(&self) -> Option<f64> {
        self.periodic.then(|| self.values.len() as f64 * self.step)
    }

    /// Coordinate of sample `i`.
    pub fn x(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.step
    }

    pub fn coordinates(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| self.x(i))
    }

    /// `values[i] - values[i-1]` for `i in 1..len`.
    pub fn slopes(&self) -> Vec<Slope> {
        self.values.windows(2).map(|w| Slope(w[1] - w[0])).collect()
    }

    /// Sample at a possibly out-of-range index; wraps when periodic, `+∞`
    /// otherwise.
    pub fn at(&self, i: isize) -> f64 {
        let n = self.values.len() as isize;
        if self.periodic {
            self.values[i.rem_euclid(n) as usize]
        } else if (0..n).contains(&i) {
            self.values[i as usize]
        } else {
            f64::INFINITY
        }
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `sup_i |self[i] - other[i]|`; the grids must have equal length.
    pub fn sup_distance(&self, other: &GridFn) -> f64 {
        assert_eq!(self.len(), other.len(), "sup_distance on grids of different length");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Same grid, values mapped pointwise.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<GridFn> {
        Self::build(
            self.values.iter().map(|&v| f(v)).collect(),
            self.step,
            self.origin,
            self.periodic,
        )
    }

    /// Same grid with a constant added.
    pub fn add_constant(&self, c: f64) -> GridFn {
        GridFn::from_parts(
            self.values.iter().map(|v| v + c).collect(),
            self.step,
            self.origin,
            self.periodic,
        )
    }

    /// Same samples with the periodic flag changed.
    pub fn with_periodic(&self, periodic: bool) -> GridFn {
        GridFn {
            periodic,
            ..self.clone()
        }
    }

    /// Same samples with the origin moved.
    pub fn with_origin(&self, origin: f64) -> GridFn {
        GridFn {
            origin,
            ..self.clone()
        }
    }
}

/// A real function sampled on a uniform n-dimensional grid, stored row-major
/// (last axis fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct GridTensor {
    shape: Vec<usize>,
    step: f64,
    origin: Vec<f64>,
    periodic: bool,
    values: Vec<f64>,
}

impl GridTensor {
    pub fn new(
        shape: Vec<usize>,
        step: f64,
        origin: Vec<f64>,
        periodic: bool,
        values: Vec<f64>,
    ) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::invalid(format!("invalid tensor shape {shape:?}")));
        }
        if origin.len() != shape.len() {
            return Err(Error::invalid("origin dimension does not match shape"));
        }
        if shape.iter().product::<usize>() != values.len() {
            return Err(Error::invalid("value count does not match shape"));
        }
        if !(step > 0.0) {
            return Err(Error::invalid("grid step must be positive"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite tensor sample"));
        }
        Ok(GridTensor {
            shape,
            step,
            origin,
            periodic,
            values,
        })
    }

    /// Samples `f(x)` at every grid point.
    pub fn from_fn(
        shape: Vec<usize>,
        step: f64,
        origin: Vec<f64>,
        periodic: bool,
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<Self> {
        let total = shape.iter().product::<usize>();
        let mut values = Vec::with_capacity(total);
        let mut x = vec![0.0; shape.len()];
        for flat in 0..total {
            let idx = unravel(flat, &shape);
            for (d, i) in idx.iter().enumerate() {
                x[d] = origin[d] + *i as f64 * step;
            }
            values.push(f(&x));
        }
        Self::new(shape, step, origin, periodic, values)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.values[ravel(idx, &self.shape)]
    }

    /// Coordinates of the grid point with multi-index `idx`.
    pub fn point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .zip(&self.origin)
            .map(|(&i, &o)| o + i as f64 * self.step)
            .collect()
    }

    /// Distance between element `i` and `i+1` along `axis` in the flat array.
    pub(crate) fn axis_stride(&self, axis: usize) -> usize {
        self.shape[axis + 1..].iter().product()
    }

    pub fn sup_distance(&self, other: &GridTensor) -> f64 {
        assert_eq!(self.shape, other.shape);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn unravel(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for d in (0..shape.len()).rev() {
        idx[d] = flat % shape[d];
        flat /= shape[d];
    }
    idx
}

pub(crate) fn ravel(idx: &[usize], shape: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (&i, &n)| acc * n + i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_construction() {
        assert!(GridFn::new(vec![], 1.0, 0.0).is_err());
        assert!(GridFn::new(vec![1.0], 0.0, 0.0).is_err());
        assert!(GridFn::new(vec![1.0, f64::NAN], 1.0, 0.0).is_err());
        assert!(GridFn::new(vec![1.0, f64::INFINITY], 1.0, 0.0).is_err());
    }

    #[test]
    fn slopes_are_consecutive_differences() {
        let f = GridFn::new(vec![0.0, 1.0, 4.0], 0.5, 0.0).unwrap();
        assert_eq!(f.slopes(), vec![Slope(1.0), Slope(3.0)]);
    }

    #[test]
    fn periodic_access_wraps() {
        let f = GridFn::periodic(vec![1.0, 2.0, 3.0], 0.25, 0.0).unwrap();
        assert_eq!(f.at(-1), 3.0);
        assert_eq!(f.at(4), 2.0);
        assert_eq!(f.period(), Some(0.75));
        let g = f.with_periodic(false);
        assert_eq!(g.at(3), f64::INFINITY);
    }

    #[test]
    fn ravel_roundtrip() {
        let shape = [3, 4, 5];
        for flat in 0..60 {
            assert_eq!(ravel(&unravel(flat, &shape), &shape), flat);
        }
    }
}
