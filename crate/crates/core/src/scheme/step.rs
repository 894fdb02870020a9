use crate::error::{Error, Result};
use crate::grid::GridFn;
use crate::minplus::conv_fast_values;

use super::hamiltonian::HamiltonianSpec;
use super::kernel::Kernel;
use super::params::{ConvEngine, SchemeParams};

fn naive_values(f: &[f64], g: &[f64]) -> Vec<f64> {
    let mut out = vec![f64::INFINITY; f.len() + g.len() - 1];
    for (i, &a) in f.iter().enumerate() {
        for (slot, &b) in out[i..].iter_mut().zip(g) {
            let v = a + b;
            if v < *slot {
                *slot = v;
            }
        }
    }
    out
}

/// Kinetic part of a step on one line of samples: `min_d u[x-d] + kernel(d)`.
///
/// Periodic lines must hold exactly `kernel.half_width()` samples; the linear
/// convolution of one period is folded back onto the period by a pointwise min
/// over aliased indices. Non-periodic lines see `+∞` outside their range.
/// Returns the values and the block count of the decomposition.
pub(crate) fn convolve_line(
    kernel: &Kernel,
    u: &[f64],
    periodic: bool,
    eta: f64,
    engine: ConvEngine,
) -> (Vec<f64>, usize) {
    let w = kernel.window().values();
    let (conv, blocks) = match engine {
        ConvEngine::Fast => {
            let (v, b, _) = conv_fast_values(w, u, eta);
            (v, b)
        }
        ConvEngine::Naive => (naive_values(w, u), 1),
    };
    let n = u.len();
    let half = kernel.half_width() as isize;
    let shift = kernel.center() - half;
    let out = if periodic {
        debug_assert_eq!(n as isize, half);
        let mut out = vec![f64::INFINITY; n];
        for (k, &v) in conv.iter().enumerate() {
            let slot = &mut out[(k as isize + shift).rem_euclid(n as isize) as usize];
            if v < *slot {
                *slot = v;
            }
        }
        out
    } else {
        (0..n as isize)
            .map(|x| {
                let k = x - shift;
                if (0..conv.len() as isize).contains(&k) {
                    conv[k as usize]
                } else {
                    f64::INFINITY
                }
            })
            .collect()
    };
    (out, blocks)
}

fn check_line_grid(u: &GridFn, params: &SchemeParams, kernel: &Kernel) -> Result<()> {
    let eps = params.eps();
    if (u.step() - eps).abs() > 1e-12 * eps {
        return Err(Error::invalid(format!(
            "grid step {} does not match eps = {eps}",
            u.step()
        )));
    }
    if kernel.half_width() != params.n_space() || (kernel.window().step() - eps).abs() > 1e-12 * eps {
        return Err(Error::invalid("kernel was built with different parameters"));
    }
    if u.is_periodic() && u.len() != params.n_space() {
        return Err(Error::invalid(format!(
            "periodic grid function must hold n_space = {} samples, got {}",
            params.n_space(),
            u.len()
        )));
    }
    Ok(())
}

/// Samples `τ·V(s, x_i)` on the grid of `u`.
fn potential_term(u: &GridFn, s: f64, spec: &HamiltonianSpec, tau: f64) -> Result<Vec<f64>> {
    let potential = spec.potential();
    if potential.is_zero() {
        return Ok(vec![0.0; u.len()]);
    }
    u.coordinates()
        .map(|x| {
            let v = potential.eval(s, &[x]);
            if v.is_finite() {
                Ok(tau * v)
            } else {
                Err(Error::Evaluation(format!("V({s}, {x}) is not finite")))
            }
        })
        .collect()
}

/// Unchecked step: values may be non-finite on blow-up.
pub(crate) fn step_values(
    u: &GridFn,
    t: f64,
    spec: &HamiltonianSpec,
    params: &SchemeParams,
    kernel: &Kernel,
) -> Result<(Vec<f64>, usize)> {
    if spec.dim() != 1 {
        return Err(Error::invalid("one-dimensional step needs a 1D Hamiltonian"));
    }
    check_line_grid(u, params, kernel)?;
    let (mut out, blocks) = convolve_line(kernel, u.values(), u.is_periodic(), params.eta(), params.engine());
    let pot = potential_term(u, params.potential_sample_time(t), spec, params.tau())?;
    for (o, p) in out.iter_mut().zip(&pot) {
        *o -= p;
    }
    Ok((out, blocks))
}

/// One step of the fully discrete semigroup together with the block count of
/// the decomposition of `u`.
pub fn step_fully_discrete_with_stats(
    u: &GridFn,
    t: f64,
    spec: &HamiltonianSpec,
    params: &SchemeParams,
    kernel: &Kernel,
) -> Result<(GridFn, usize)> {
    let (out, blocks) = step_values(u, t, spec, params, kernel)?;
    if let Some(i) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::Evaluation(format!(
            "step produced a non-finite value at index {i}"
        )));
    }
    Ok((GridFn::from_parts(out, u.step(), u.origin(), u.is_periodic()), blocks))
}

/// One step of the fully discrete semigroup from time `t` to `t + τ`:
/// `x ↦ min_y [u(y) + τK*((x-y)/τ)] - τV(s, x)`, with `s` chosen by
/// [`SchemeParams::potential_time`].
pub fn step_fully_discrete(
    u: &GridFn,
    t: f64,
    spec: &HamiltonianSpec,
    params: &SchemeParams,
    kernel: &Kernel,
) -> Result<GridFn> {
    step_fully_discrete_with_stats(u, t, spec, params, kernel).map(|r| r.0)
}

/// Reference step with the cost integrated along straight segments.
///
/// `T u(x) = min_y u(y) + τK*((x-y)/τ) - ∫ V(s, y + (s-t)(x-y)/τ) ds`, the
/// integral taken by the composite trapezoid rule on `quad_points + 1` nodes.
/// Brute force over all window displacements: `O(N²·quad_points)`.
pub fn step_semidiscrete(
    u: &GridFn,
    t: f64,
    spec: &HamiltonianSpec,
    params: &SchemeParams,
    kernel: &Kernel,
    quad_points: usize,
) -> Result<GridFn> {
    if quad_points < 1 {
        return Err(Error::invalid("quad_points must be at least 1"));
    }
    if spec.dim() != 1 {
        return Err(Error::invalid("one-dimensional step needs a 1D Hamiltonian"));
    }
    check_line_grid(u, params, kernel)?;
    let (eps, tau) = (params.eps(), params.tau());
    let potential = spec.potential();
    let h = tau / quad_points as f64;
    let mut out = Vec::with_capacity(u.len());
    for i in 0..u.len() {
        let x = u.x(i);
        let mut best = f64::INFINITY;
        for d in kernel.displacements() {
            let src = i as isize - d;
            let uy = u.at(src);
            if uy.is_infinite() {
                continue;
            }
            let y = x - d as f64 * eps;
            let integral = if potential.is_zero() {
                0.0
            } else {
                let mut acc = 0.0;
                for q in 0..=quad_points {
                    let s = q as f64 * h;
                    let w = if q == 0 || q == quad_points { 0.5 } else { 1.0 };
                    let v = potential.eval(t + s, &[y + s * (x - y) / tau]);
                    if !v.is_finite() {
                        return Err(Error::Evaluation(format!("V at time {} is not finite", t + s)));
                    }
                    acc += w * v;
                }
                acc * h
            };
            let c = uy + kernel.at_displacement(d) - integral;
            if c < best {
                best = c;
            }
        }
        if !best.is_finite() {
            return Err(Error::Evaluation(format!("no finite candidate at index {i}")));
        }
        out.push(best);
    }
    Ok(GridFn::from_parts(out, u.step(), u.origin(), u.is_periodic()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minplus::conv_naive;
    use crate::scheme::hamiltonian::{Harmonic, Potential};
    use crate::scheme::kernel::build_kernel;
    use crate::scheme::params::CflMode;

    fn setup(drift: f64, potential: Potential, n: usize, tau: f64) -> (HamiltonianSpec, SchemeParams, Kernel) {
        let spec = HamiltonianSpec::mechanical_1d(drift, potential).unwrap();
        let params = SchemeParams::new(n, 1.0, tau, 0.0, 1.0, CflMode::Fail).unwrap();
        let kernel = build_kernel(&spec, &params).unwrap();
        (spec, params, kernel)
    }

    #[test]
    fn constant_is_fixed_without_potential() {
        let (spec, params, kernel) = setup(0.0, Potential::Zero, 50, 0.1);
        let u = GridFn::periodic(vec![3.5; 50], params.eps(), 0.0).unwrap();
        let v = step_fully_discrete(&u, 0.0, &spec, &params, &kernel).unwrap();
        assert_eq!(v, u);
    }

    #[test]
    fn drift_reaches_exact_minimum() {
        // τP/ε = 0.125·1.5·64 = 12.
        let (spec, params, kernel) = setup(1.5, Potential::Zero, 64, 0.125);
        let u = GridFn::periodic(vec![0.0; 64], params.eps(), 0.0).unwrap();
        let v = step_fully_discrete(&u, 0.0, &spec, &params, &kernel).unwrap();
        for &x in v.values() {
            assert_eq!(x, -0.125 * 1.5 * 1.5 / 2.0);
        }
    }

    #[test]
    fn periodic_step_matches_three_period_unrolling() {
        let (spec, params, kernel) = setup(0.7, Potential::Harmonics {
            offset: 0.0,
            terms: vec![Harmonic::spatial(0.5, std::f64::consts::TAU, 0.3)],
        }, 24, 0.25);
        let u = GridFn::from_fn(24, params.eps(), 0.0, true, |x| (7.0 * x).sin() + x * x).unwrap();
        let v = step_fully_discrete(&u, 0.0, &spec, &params, &kernel).unwrap();
        let wide: Vec<f64> = (0..72).map(|i| u.at(i)).collect();
        let wide = GridFn::new(wide, params.eps(), -1.0).unwrap();
        let w = step_fully_discrete(&wide, 0.0, &spec, &params, &kernel).unwrap();
        // The middle period sees coordinates shifted by one period, so V
        // agrees only up to rounding.
        for i in 0..24 {
            assert!((v.values()[i] - w.values()[24 + i]).abs() < 1e-14);
        }
    }

    #[test]
    fn non_periodic_step_is_windowed_convolution() {
        let (spec, params, kernel) = setup(0.0, Potential::Zero, 10, 0.5);
        let u = GridFn::new(vec![1.0, -2.0, 0.5, 3.0, 0.0, 1.0], params.eps(), 0.0).unwrap();
        let v = step_fully_discrete(&u, 0.0, &spec, &params, &kernel).unwrap();
        let full = conv_naive(kernel.window(), &u).unwrap();
        for i in 0..u.len() {
            assert_eq!(v.values()[i], full.values()[i + 10]);
        }
    }

    #[test]
    fn engines_agree() {
        let (spec, params, kernel) = setup(0.3, Potential::Zero, 40, 0.2);
        let u = GridFn::from_fn(40, params.eps(), 0.0, true, |x| (13.0 * x).cos() * (3.0 * x).sin()).unwrap();
        let a = step_fully_discrete(&u, 0.0, &spec, &params, &kernel).unwrap();
        let naive = params.with_engine(ConvEngine::Naive);
        let b = step_fully_discrete(&u, 0.0, &spec, &naive, &kernel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn potential_sampled_at_arrival_time() {
        let v = Potential::Custom {
            eval: std::sync::Arc::new(|t: f64, _: &[f64]| t / 10.0),
            bound: 1.0,
            autonomous: false,
        };
        let spec = HamiltonianSpec::new(crate::Kinetic::mechanical_1d(0.0), v, Some(10.0)).unwrap();
        let params = SchemeParams::new(8, 1.0, 0.5, 0.0, 1.0, CflMode::Fail).unwrap();
        let kernel = build_kernel(&spec, &params).unwrap();
        let u = GridFn::periodic(vec![0.0; 8], params.eps(), 0.0).unwrap();
        let a = step_fully_discrete(&u, 1.0, &spec, &params, &kernel).unwrap();
        assert!(a.values().iter().all(|&x| (x + 0.5 * 0.15).abs() < 1e-15));
        let dep = params.with_potential_time(crate::PotentialTime::Departure);
        let b = step_fully_discrete(&u, 1.0, &spec, &dep, &kernel).unwrap();
        assert!(b.values().iter().all(|&x| (x + 0.5 * 0.1).abs() < 1e-15));
    }

    #[test]
    fn semidiscrete_matches_without_potential() {
        let (spec, params, kernel) = setup(0.4, Potential::Zero, 32, 0.25);
        let u = GridFn::from_fn(32, params.eps(), 0.0, true, |x| (9.0 * x).sin()).unwrap();
        let a = step_fully_discrete(&u, 0.0, &spec, &params, &kernel).unwrap();
        let b = step_semidiscrete(&u, 0.0, &spec, &params, &kernel, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn semidiscrete_close_for_autonomous_potential() {
        let amp = 0.8;
        let k = std::f64::consts::TAU;
        let pot = Potential::Harmonics {
            offset: 0.0,
            terms: vec![Harmonic::spatial(amp, k, 0.0)],
        };
        let (spec, params, kernel) = setup(0.0, pot, 32, 0.25);
        let u = GridFn::from_fn(32, params.eps(), 0.0, true, |x| (k * x).cos()).unwrap();
        let a = step_fully_discrete(&u, 0.0, &spec, &params, &kernel).unwrap();
        let b = step_semidiscrete(&u, 0.0, &spec, &params, &kernel, 16).unwrap();
        // The segment sample of V differs from the endpoint sample by at most
        // Lip(V)·|x - y|; the displacement reaches at most one period.
        let bound = params.tau() * amp * k * 1.0;
        assert!(a.sup_distance(&b) <= bound);
    }

    #[test]
    fn semidiscrete_quadrature_converges() {
        let pot = Potential::Harmonics {
            offset: 0.0,
            terms: vec![Harmonic {
                amplitude: 0.6,
                wavevector: vec![std::f64::consts::TAU],
                phase: 0.2,
                time_frequency: 3.0,
                time_phase: 0.1,
            }],
        };
        let spec = HamiltonianSpec::new(crate::Kinetic::mechanical_1d(0.2), pot, None).unwrap();
        let params = SchemeParams::new(16, 1.0, 0.5, 0.0, 1.0, CflMode::Fail).unwrap();
        let kernel = build_kernel(&spec, &params).unwrap();
        let u = GridFn::from_fn(16, params.eps(), 0.0, true, |x| (6.0 * x).cos()).unwrap();
        let reference = step_semidiscrete(&u, 0.3, &spec, &params, &kernel, 1024).unwrap();
        let errs: Vec<f64> = [2, 4, 8, 16]
            .iter()
            .map(|&q| step_semidiscrete(&u, 0.3, &spec, &params, &kernel, q).unwrap().sup_distance(&reference))
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] <= 0.5 * w[0] + 1e-14, "{errs:?}");
        }
    }

    #[test]
    fn rejects_mismatched_grid() {
        let (spec, params, kernel) = setup(0.0, Potential::Zero, 10, 0.5);
        let u = GridFn::periodic(vec![0.0; 12], params.eps(), 0.0).unwrap();
        assert!(step_fully_discrete(&u, 0.0, &spec, &params, &kernel).is_err());
        let u = GridFn::periodic(vec![0.0; 10], 0.5, 0.0).unwrap();
        assert!(step_fully_discrete(&u, 0.0, &spec, &params, &kernel).is_err());
        let u = GridFn::periodic(vec![0.0; 10], params.eps(), 0.0).unwrap();
        assert!(step_semidiscrete(&u, 0.0, &spec, &params, &kernel, 0).is_err());
    }
}
