use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{unravel, GridTensor};

use super::hamiltonian::HamiltonianSpec;
use super::kernel::{build_axis_kernel, Kernel};
use super::params::SchemeParams;
use super::step::convolve_line;

/// One fully discrete step in `n` dimensions for a separable kinetic part,
/// sweeping the axes in ascending order.
///
/// Each sweep convolves every line along one axis with that axis' kernel; the
/// potential `τV` is subtracted once at the end. Because the kinetic cost is a
/// sum over axes, this equals the minimum over the whole product grid.
pub fn split_step_nd(u: &GridTensor, t: f64, spec: &HamiltonianSpec, params: &SchemeParams) -> Result<GridTensor> {
    let order: Vec<usize> = (0..u.ndim()).collect();
    split_step_nd_ordered(u, t, spec, params, &order)
}

/// [`split_step_nd`] with an explicit axis order (a permutation of the axes).
pub fn split_step_nd_ordered(
    u: &GridTensor,
    t: f64,
    spec: &HamiltonianSpec,
    params: &SchemeParams,
    order: &[usize],
) -> Result<GridTensor> {
    let dim = u.ndim();
    if spec.dim() != dim {
        return Err(Error::invalid(format!(
            "Hamiltonian dimension {} does not match tensor dimension {dim}",
            spec.dim()
        )));
    }
    if !spec.kinetic().is_separable() {
        return Err(Error::invalid("dimensional splitting needs a separable kinetic part"));
    }
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..dim).collect::<Vec<_>>() {
        return Err(Error::invalid(format!("axis order {order:?} is not a permutation")));
    }
    let eps = params.eps();
    if (u.step() - eps).abs() > 1e-12 * eps {
        return Err(Error::invalid(format!("grid step {} does not match eps = {eps}", u.step())));
    }
    if u.is_periodic() {
        if let Some(&n) = u.shape().iter().find(|&&n| n != params.n_space()) {
            return Err(Error::invalid(format!(
                "periodic axes must hold n_space = {} samples, got {n}",
                params.n_space()
            )));
        }
    }
    let kernels = (0..dim)
        .map(|axis| build_axis_kernel(spec.kinetic(), axis, params))
        .collect::<Result<Vec<_>>>()?;

    let mut out = u.clone();
    for &axis in order {
        sweep(&mut out, axis, &kernels[axis], params)?;
    }

    let potential = spec.potential();
    if !potential.is_zero() {
        let s = params.potential_sample_time(t);
        let tau = params.tau();
        let shape = out.shape().to_vec();
        let points: Vec<Vec<f64>> = (0..out.values().len())
            .map(|flat| out.point(&unravel(flat, &shape)))
            .collect();
        for (v, x) in out.values_mut().iter_mut().zip(&points) {
            let p = potential.eval(s, x);
            if !p.is_finite() {
                return Err(Error::Evaluation(format!("V({s}, {x:?}) is not finite")));
            }
            *v -= tau * p;
        }
    }
    if out.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::Evaluation("split step produced non-finite values".into()));
    }
    Ok(out)
}

fn sweep(u: &mut GridTensor, axis: usize, kernel: &Kernel, params: &SchemeParams) -> Result<()> {
    let n = u.shape()[axis];
    let stride = u.axis_stride(axis);
    let lines = u.values().len() / n;
    let periodic = u.is_periodic();
    let starts: Vec<usize> = (0..lines)
        .map(|l| (l / stride) * n * stride + l % stride)
        .collect();
    let src = u.values();
    let results: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|&start| {
            let line: Vec<f64> = (0..n).map(|k| src[start + k * stride]).collect();
            convolve_line(kernel, &line, periodic, params.eta(), params.engine()).0
        })
        .collect();
    let dst = u.values_mut();
    for (&start, line) in starts.iter().zip(&results) {
        for (k, &v) in line.iter().enumerate() {
            dst[start + k * stride] = v;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridFn;
    use crate::scheme::hamiltonian::{Harmonic, Kinetic, Potential};
    use crate::scheme::kernel::build_kernel;
    use crate::scheme::params::CflMode;
    use crate::scheme::step::step_fully_discrete;

    fn params(n: usize, tau: f64) -> SchemeParams {
        SchemeParams::new(n, 1.0, tau, 0.0, 1.0, CflMode::Fail).unwrap()
    }

    /// Direct minimum over every source point of the product window.
    fn brute_force_2d(u: &GridTensor, spec: &HamiltonianSpec, p: &SchemeParams) -> Vec<f64> {
        let n = u.shape()[0];
        let k0 = build_axis_kernel(spec.kinetic(), 0, p).unwrap();
        let k1 = build_axis_kernel(spec.kinetic(), 1, p).unwrap();
        let mut out = vec![f64::INFINITY; n * n];
        for x0 in 0..n as isize {
            for x1 in 0..n as isize {
                let slot = &mut out[(x0 * n as isize + x1) as usize];
                for d0 in k0.displacements() {
                    for d1 in k1.displacements() {
                        let y0 = (x0 - d0).rem_euclid(n as isize) as usize;
                        let y1 = (x1 - d1).rem_euclid(n as isize) as usize;
                        let c = u.get(&[y0, y1]) + (k0.at_displacement(d0) + k1.at_displacement(d1));
                        *slot = slot.min(c);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn separable_data_splits() {
        let spec = HamiltonianSpec::new(Kinetic::Mechanical { drift: vec![0.25, -0.5] }, Potential::Zero, None).unwrap();
        let p = params(16, 0.25);
        let f = |x: f64| (9.0 * x).sin();
        let g = |x: f64| (4.0 * x).cos() * 0.5;
        let u = GridTensor::from_fn(vec![16, 16], p.eps(), vec![0.0, 0.0], true, |x| f(x[0]) + g(x[1])).unwrap();
        let v = split_step_nd(&u, 0.0, &spec, &p).unwrap();
        let line = |h: &dyn Fn(f64) -> f64, drift: f64| {
            let s = HamiltonianSpec::mechanical_1d(drift, Potential::Zero).unwrap();
            let k = build_kernel(&s, &p).unwrap();
            let w = GridFn::from_fn(16, p.eps(), 0.0, true, h).unwrap();
            step_fully_discrete(&w, 0.0, &s, &p, &k).unwrap()
        };
        let (a, b) = (line(&f, 0.25), line(&g, -0.5));
        for i in 0..16 {
            for j in 0..16 {
                let want = a.values()[i] + b.values()[j];
                assert!((v.get(&[i, j]) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn matches_brute_force_and_is_order_independent() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let spec = HamiltonianSpec::new(Kinetic::Mechanical { drift: vec![0.0, 1.0] }, Potential::Zero, None).unwrap();
        // ε = 1/16, τ = 1/4: kernel values are dyadic, so sums are exact.
        let p = params(16, 0.25);
        for _ in 0..5 {
            let vals: Vec<f64> = (0..256).map(|_| rng.gen_range(-64..64) as f64 / 64.0).collect();
            let u = GridTensor::new(vec![16, 16], p.eps(), vec![0.0, 0.0], true, vals).unwrap();
            let a = split_step_nd(&u, 0.0, &spec, &p).unwrap();
            let b = split_step_nd_ordered(&u, 0.0, &spec, &p, &[1, 0]).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.values(), &brute_force_2d(&u, &spec, &p)[..]);
        }
    }

    #[test]
    fn potential_subtracted_once() {
        let pot = Potential::Harmonics {
            offset: 1.0,
            terms: vec![Harmonic::spatial(0.5, std::f64::consts::TAU, 0.0)],
        };
        let spec = HamiltonianSpec::new(Kinetic::Mechanical { drift: vec![0.0, 0.0] }, pot, None).unwrap();
        let p = params(8, 0.5);
        let u = GridTensor::new(vec![8, 8], p.eps(), vec![0.0, 0.0], true, vec![0.0; 64]).unwrap();
        let v = split_step_nd(&u, 0.0, &spec, &p).unwrap();
        for i in 0..8 {
            let x = i as f64 / 8.0;
            let want = -0.5 * (1.0 + 0.5 * (std::f64::consts::TAU * x).cos());
            assert!((v.get(&[i, 3]) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn non_separable_is_rejected() {
        let kin = Kinetic::Metric {
            mass: vec![vec![2.0, 0.5], vec![0.5, 1.0]],
            drift: vec![0.0, 0.0],
        };
        let spec = HamiltonianSpec::new(kin, Potential::Zero, None).unwrap();
        let p = params(8, 0.5);
        let u = GridTensor::new(vec![8, 8], p.eps(), vec![0.0, 0.0], true, vec![0.0; 64]).unwrap();
        assert!(matches!(split_step_nd(&u, 0.0, &spec, &p), Err(Error::InvalidInput(_))));
    }
}
