//! Property tests over random models, states and times.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use qlab::bounds::{trig_roots, PhaseFunction};
use qlab::covariance::Covariance;
use qlab::model::HoppingModel;
use qlab::propagator::propagate;

fn model_strategy() -> impl Strategy<Value = HoppingModel> {
    (8usize..40, 1usize..=3)
        .prop_flat_map(|(l, r)| {
            let r = r.min((l - 1) / 2);
            (
                Just(l),
                proptest::collection::vec(-2.0f64..2.0, r + 1..=r + 1),
            )
        })
        .prop_filter_map("need at least one hopping term", |(l, mut j)| {
            j[0] = 0.0;
            if j[1..].iter().all(|v| v.abs() < 0.05) {
                None
            } else {
                HoppingModel::new(l, j).ok()
            }
        })
}

fn diag_state(l: usize, seed: &[f64]) -> Covariance {
    let diag: Vec<f64> = (0..l).map(|x| seed[x % seed.len()].clamp(0.0, 1.0)).collect();
    Covariance::from_diagonal(&diag)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn evolution_preserves_conserved_quantities(
        model in model_strategy(),
        fillings in proptest::collection::vec(0.0f64..1.0, 5..12),
        t in 0.0f64..20.0,
    ) {
        let l = model.l();
        let gamma = diag_state(l, &fillings);
        let evolved = gamma.evolve(&propagate(&model, t)).unwrap();
        // trace, momentum occupations and currents are all constants of motion
        prop_assert!((gamma.trace() - evolved.trace()).abs() < 1e-9);
        let (n0, n1) = (gamma.momentum_occupations(), evolved.momentum_occupations());
        for (a, b) in n0.iter().zip(n1.iter()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        let (c0, c1) = (gamma.currents(), evolved.currents());
        for (a, b) in c0.i.iter().zip(c1.i.iter()) {
            prop_assert!((a - b).norm() < 1e-9);
        }
        evolved.validate_admissible(1e-8).unwrap();
    }

    #[test]
    fn dephasing_is_idempotent_and_current_preserving(
        model in model_strategy(),
        fillings in proptest::collection::vec(0.0f64..1.0, 5..12),
    ) {
        let l = model.l();
        let gamma = diag_state(l, &fillings);
        let omega = model.eigenvalues();
        let tol = model.default_degeneracy_tol();
        let once = gamma.dephase(&omega, tol).unwrap();
        let twice = once.dephase(&omega, tol).unwrap();
        prop_assert!(once.max_norm_distance(&twice).unwrap() < 1e-10);
        let (c0, c1) = (gamma.currents(), once.currents());
        for (a, b) in c0.i.iter().zip(c1.i.iter()) {
            prop_assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn band_spectrum_reconstructs_bands(
        model in model_strategy(),
        fillings in proptest::collection::vec(0.0f64..1.0, 5..12),
        t in 0.0f64..10.0,
        d in -4i64..=4,
    ) {
        let l = model.l();
        let d = d.clamp(-(l as i64 - 1) / 2, l as i64 / 2);
        let gamma = diag_state(l, &fillings).evolve(&propagate(&model, t)).unwrap();
        let band = gamma.band(d);
        let spec = gamma.band_spectrum(d);
        for (z, expect) in band.iter().enumerate() {
            let mut v = Complex64::ZERO;
            for n in 1..=l {
                v += spec.weight(n)
                    * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (n * z) as f64 / l as f64);
            }
            prop_assert!((v - expect).norm() < 1e-9);
        }
    }

    #[test]
    fn trig_root_count_respects_range(
        coeffs in proptest::collection::vec((-2.0f64..2.0, 0.0f64..std::f64::consts::TAU), 1..=3),
        a0 in -2.0f64..2.0,
    ) {
        let r = coeffs.len();
        let a: Vec<Complex64> = coeffs
            .iter()
            .map(|(amp, phase)| Complex64::from_polar(amp.abs().max(1e-6), *phase))
            .collect();
        let b: Vec<Complex64> = a.iter().map(|c| c.conj()).collect();
        let roots = trig_roots(Complex64::new(a0, 0.0), &a, &b).unwrap();
        prop_assert!(roots.len() <= 2 * r, "got {} roots for R = {r}", roots.len());
        // every reported root really is a root
        for p in roots {
            let mut v = Complex64::new(a0, 0.0);
            for (z, az) in a.iter().enumerate() {
                v += az * Complex64::from_polar(1.0, p * (z + 1) as f64);
                v += b[z] * Complex64::from_polar(1.0, -p * (z + 1) as f64);
            }
            prop_assert!(v.norm() < 1e-6, "Ω({p}) = {v}");
        }
    }

    #[test]
    fn propagator_composition(model in model_strategy(), t1 in 0.0f64..8.0, t2 in 0.0f64..8.0) {
        let g12 = propagate(&model, t1 + t2).to_dense();
        let prod = propagate(&model, t1).to_dense() * propagate(&model, t2).to_dense();
        let dev = (&g12 - &prod).map(|c| c.norm()).max();
        prop_assert!(dev < 1e-9, "composition deviation {dev:.3e}");
    }

    #[test]
    fn band_phases_are_bounded_exponential_sums(
        model in model_strategy(),
        n_frac in 0.05f64..0.95,
        t in 0.5f64..30.0,
    ) {
        let l = 128usize;
        let model = HoppingModel::new(l, model.couplings().to_vec()).unwrap();
        let n = ((n_frac * l as f64) as usize).clamp(1, l - 1);
        let phi = PhaseFunction::band_phase(&model, l, n, 0, t);
        if phi.is_flat() {
            return Ok(());
        }
        let s = qlab::bounds::exponential_sum(&phi, l).norm();
        prop_assert!(s <= 1.0 + 1e-12, "normalized sum {s} above 1");
    }
}

#[test]
fn covariance_spectrum_stays_admissible_under_composed_evolutions() {
    // long composed evolutions keep the spectrum inside [0, 1]
    let model = HoppingModel::new(24, vec![0.0, 1.0, -0.4]).unwrap();
    let mut gamma = Covariance::from_occupations(
        &(0..24).map(|x| x % 3 == 0).collect::<Vec<_>>(),
    );
    for k in 1..=6 {
        gamma = gamma.evolve(&propagate(&model, 0.7 * k as f64)).unwrap();
    }
    gamma.validate_admissible(1e-8).unwrap();
    let m: &DMatrix<Complex64> = gamma.matrix();
    assert_eq!(m.nrows(), 24);
}
