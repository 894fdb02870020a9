use std::f64::consts::TAU;

use laxol::weakkam::{eigenvector, matrix_residual};
use laxol::{
    build_kernel, build_period_matrix, eigenvalue_karp, estimate_hbar_drift, estimate_hbar_matrix, evolve,
    fixed_point_residual, step_fully_discrete, EvolveOptions, GridFn, HamiltonianSpec, Harmonic, Potential,
    SchemeParams,
};
use proptest::prelude::*;

const N: usize = 32;
const TAU_STEP: f64 = 0.25;

fn spec(drift: f64, amplitude: f64) -> HamiltonianSpec {
    let potential = Potential::Harmonics {
        offset: amplitude,
        terms: vec![Harmonic::spatial(-amplitude, TAU, 0.0)],
    };
    HamiltonianSpec::mechanical_1d(drift, potential).unwrap()
}

fn params() -> SchemeParams {
    SchemeParams::unit_period(N, TAU_STEP).unwrap()
}

fn samples() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, N)
}

fn periodic(v: Vec<f64>) -> GridFn {
    GridFn::periodic(v, 1.0 / N as f64, 0.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn drift_estimate_does_not_depend_on_initial_data(u in samples(), drift in -1.5..1.5f64, amp in 0.0..2.0f64) {
        let (s, p) = (spec(drift, amp), params());
        let by_matrix = estimate_hbar_matrix(&s, &p, 0.0).unwrap();
        let by_drift = estimate_hbar_drift(&periodic(u), &s, &p, 2000, 1e-10).unwrap();
        if by_drift.converged {
            prop_assert!((by_drift.h_bar - by_matrix.h_bar).abs() < 1e-8);
        } else {
            prop_assert!((by_drift.h_bar - by_matrix.h_bar).abs() < 1e-3);
        }
    }

    #[test]
    fn compensated_orbit_stays_bounded(u in samples(), drift in -1.5..1.5f64, amp in 0.0..2.0f64) {
        let (s, p) = (spec(drift, amp), params());
        let c = build_period_matrix(&s, &p).unwrap();
        let lambda = eigenvalue_karp(&c);
        let w = eigenvector(&c, lambda);
        let g = periodic(u.clone());
        let bound = g.values().iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let steps = 40;
        let trace = evolve(&g, 0.0, steps, &s, &p, &EvolveOptions::every(4)).unwrap();
        for (k, snap) in trace.snapshots.iter().enumerate().skip(1) {
            let periods = trace.snapshot_steps[k] as f64 * TAU_STEP;
            let gap = snap
                .values()
                .iter()
                .zip(&w)
                .map(|(a, b)| (a - periods * lambda - b).abs())
                .fold(0.0, f64::max);
            prop_assert!(gap <= bound + 1e-9, "gap {} bound {}", gap, bound);
        }
    }

    #[test]
    fn noise_raises_the_residual_by_at_most_twice_its_size(
        noise in prop::collection::vec(-1.0..1.0f64, N),
        delta in 0.0..0.1f64,
        drift in -1.5..1.5f64,
    ) {
        let (s, p) = (spec(drift, 1.0), params());
        let fixed = estimate_hbar_matrix(&s, &p, 0.0).unwrap();
        let base = fixed_point_residual(&fixed.state, fixed.h_bar, &s, &p).unwrap();
        let noisy: Vec<f64> = fixed.state.values().iter().zip(&noise).map(|(a, e)| a + delta * e).collect();
        let r = fixed_point_residual(&periodic(noisy), fixed.h_bar, &s, &p).unwrap();
        prop_assert!(r <= 2.0 * delta + base + 1e-12);
    }

    #[test]
    fn period_matrix_reproduces_the_scheme(u in samples(), drift in -1.5..1.5f64, amp in 0.0..2.0f64) {
        let (s, p) = (spec(drift, amp), params());
        let c = build_period_matrix(&s, &p).unwrap();
        let k = build_kernel(&s, &p).unwrap();
        let mut g = periodic(u.clone());
        for i in 0..4 {
            g = step_fully_discrete(&g, i as f64 * TAU_STEP, &s, &p, &k).unwrap();
        }
        let via = c.apply(&u);
        for (a, b) in g.values().iter().zip(&via) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let w = eigenvector(&c, eigenvalue_karp(&c));
        prop_assert!(matrix_residual(&c, &w, eigenvalue_karp(&c)) < 1e-12);
    }
}
