//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers (run with `--nocapture` to see them).

use nalgebra::DMatrix;
use num_complex::Complex64;
use qlab::bounds::{
    certificate, classify_resilience, exponential_sum, propagator_certificate, EquilibrationBounder,
    PhaseFunction, ResilienceOptions, Verdict,
};
use qlab::covariance::{CleanEvolution, Covariance};
use qlab::gge::{fit_gge, gge_covariance, GGEParams};
use qlab::model::{DisorderedModel, HoppingModel};
use qlab::oracle;
use qlab::propagator::{bessel_approximation, bessel_error_bound, expm_oracle, propagate};
use qlab_cli::config::RunConfig;
use qlab_cli::experiments;
use qlab_cli::fit::power_law_fit;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn random_model(rng: &mut ChaCha12Rng, l: usize, r_max: usize) -> HoppingModel {
    loop {
        let r = rng.random_range(1..=r_max);
        let mut j = vec![0.0f64];
        for _ in 0..r {
            j.push(rng.random_range(-2.0..2.0));
        }
        if j[1..].iter().any(|v| v.abs() > 0.05) {
            return HoppingModel::new(l, j).unwrap();
        }
    }
}

#[test]
fn criterion_01_propagator_unitarity() {
    let mut rng = ChaCha12Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for &l in &[64usize, 512, 4096] {
        let models = [
            HoppingModel::nearest_neighbour(l, 1.0).unwrap(),
            random_model(&mut rng, l, 3),
        ];
        for model in &models {
            for i in 0..10 {
                let t = 0.25 * (i as f64 + 1.0) * (l as f64).sqrt() / 8.0;
                worst = worst.max(propagate(model, t).unitarity_deviation());
            }
        }
    }
    assert!(worst <= 1e-10, "row-norm deviation {worst:.3e}");
    println!("ACCEPTANCE 1 PASS: propagator unitarity, worst row-norm deviation {worst:.3e}");
}

#[test]
fn criterion_02_propagator_oracle_equivalence() {
    let mut rng = ChaCha12Rng::seed_from_u64(202);
    let mut worst_expm = 0.0f64;
    for _ in 0..20 {
        let model = random_model(&mut rng, 32, 3);
        let t = rng.random_range(0.1..6.0);
        let dense = propagate(&model, t).to_dense();
        let oracle_g = expm_oracle(&model.coupling_matrix(), t);
        worst_expm = worst_expm.max((&dense - &oracle_g).map(|c| c.norm()).max());
    }
    assert!(worst_expm <= 1e-8, "expm deviation {worst_expm:.3e}");

    // single-particle sector of the many-body evolution at L = 10
    let l = 10;
    let model = HoppingModel::new(l, vec![0.0, 1.0, 0.4]).unwrap();
    let space = oracle::FockSpace::new(l).unwrap();
    let h = model.coupling_matrix().map(|v| Complex64::new(v, 0.0));
    let t = 1.7;
    let g = propagate(&model, t);
    let mut worst_mb = 0.0f64;
    for x in 0..l {
        let mut occ = vec![false; l];
        occ[x] = true;
        let psi = oracle::ManyBodyState::fock(l, &occ).unwrap();
        let evolved = oracle::evolve_quadratic(&psi, &space, &h, t).unwrap();
        let oracle::ManyBodyState::Vector { amp, .. } = evolved else {
            unreachable!()
        };
        for y in 0..l {
            worst_mb = worst_mb.max((amp[1 << y] - g.entry(x, y).conj()).norm());
        }
    }
    // and the dense-eigendecomposition route for one source site
    let hmb = oracle::build_hamiltonian(&space, &h).unwrap();
    let mut occ = vec![false; l];
    occ[0] = true;
    let psi = oracle::ManyBodyState::fock(l, &occ).unwrap();
    let dense_evolved = oracle::evolve_state(&psi, &hmb, t).unwrap();
    let oracle::ManyBodyState::Vector { amp, .. } = dense_evolved else {
        unreachable!()
    };
    for y in 0..l {
        worst_mb = worst_mb.max((amp[1 << y] - g.entry(0, y).conj()).norm());
    }
    assert!(worst_mb <= 1e-10, "many-body deviation {worst_mb:.3e}");
    println!(
        "ACCEPTANCE 2 PASS: propagate vs expm {worst_expm:.3e}, vs Fock-space evolution {worst_mb:.3e}"
    );
}

#[test]
fn criterion_03_bessel_wavefront_bound() {
    let l = 1000;
    let model = HoppingModel::nearest_neighbour(l, 1.0).unwrap();
    let mut checked = 0usize;
    let mut worst_margin = f64::NEG_INFINITY;
    for &t in &[5.0, 10.0, 20.0] {
        let g_star = propagate(&model, -t); // e^{-ith}
        for d in -60i64..=60 {
            let x = d.rem_euclid(l as i64) as usize;
            let err = (g_star.entry(x, 0) - bessel_approximation(d, t)).norm();
            let bound = bessel_error_bound(d, t, l).unwrap();
            // 1e-12 covers FFT/Bessel roundoff where the bound is exactly zero
            assert!(
                err <= bound + 1e-12,
                "t={t}, d={d}: error {err:.3e} > bound {bound:.3e}"
            );
            worst_margin = worst_margin.max(err - bound);
            checked += 1;
        }
    }
    println!(
        "ACCEPTANCE 3 PASS: {checked} Bessel comparisons, worst error-bound margin {worst_margin:.3e}"
    );
}

#[test]
fn criterion_04_kusmin_landau_soundness() {
    let mut rng = ChaCha12Rng::seed_from_u64(404);
    let mut tested = 0usize;
    let mut skipped_empty = 0usize;
    let mut worst_ratio = 0.0f64;
    while tested < 100 {
        let r = rng.random_range(1..=3usize);
        let model = random_model(&mut rng, 512, r);
        // alternate between propagator phases (integer drift) and band modes
        let phi = if tested % 2 == 0 {
            PhaseFunction::propagator_phase(&model, rng.random_range(0..6), 1.0)
        } else {
            let n = rng.random_range(64..448usize);
            PhaseFunction::band_phase(&model, 512, n, 0, 1.0)
        };
        if phi.is_flat() {
            continue;
        }
        let Ok(cert0) = certificate(&phi, 512) else {
            continue;
        };
        // structural invariants hold on every instance, windowed or not
        assert!(cert0.structure.s1.len() <= 2 * model.range());
        assert!(cert0.structure.s2.len() <= 2 * model.range());
        assert!(cert0.kappa0 as usize <= 2 * model.range());
        assert!(cert0.gamma > 1.0 / (6.0 * model.range() as f64 + 6.0));
        // enlarge L until the window opens (t_R grows linearly with L)
        let mut cert = cert0;
        let mut l = 512usize;
        while cert.window().is_none() && l < 200_000 {
            l *= 4;
            cert = certificate(&phi, l).unwrap();
        }
        let Some((t0, tr)) = cert.window() else {
            skipped_empty += 1;
            if skipped_empty > 400 {
                panic!("too many empty windows; certificates unusable");
            }
            continue;
        };
        for i in 0..10 {
            let t = t0 * (tr / t0).powf(i as f64 / 9.0);
            let s = exponential_sum(&phi.with_time(t), l).norm();
            let b = cert.bound_at(t).unwrap();
            assert!(
                s <= b,
                "violation: |sum| = {s:.4e} > bound {b:.4e} at t = {t:.3} (L = {l})"
            );
            worst_ratio = worst_ratio.max(s / b);
        }
        tested += 1;
    }
    println!(
        "ACCEPTANCE 4 PASS: {tested} certificates x 10 times, zero violations \
         (worst |sum|/bound = {worst_ratio:.3e}, {skipped_empty} empty windows at desk scale)"
    );
}

fn anderson_config(l: usize, t_max: f64, count: usize, dir: &str) -> RunConfig {
    let text = format!(
        r#"
experiment = "anderson_quench"

[model]
l = {l}
j = [0.0, 1.0]

[model.disorder]
w = 5.0
seed = 7

[state]
kind = "thermal"
beta = 1.0
mu = 0.0

[time_grid]
t_min = 1.0
t_max = {t_max}
count = {count}

[output]
dir = "{dir}"
"#
    );
    toml::from_str(&text).unwrap()
}

#[test]
fn criterion_05_anderson_quench_exponent() {
    let dir = std::env::temp_dir().join("qlab_acceptance_c5");
    let cfg = anderson_config(1000, 45.0, 30, dir.to_str().unwrap());
    let out = experiments::run(&cfg).unwrap();
    let report: toml::Value =
        toml::from_str(&std::fs::read_to_string(out.dir.join("report.toml")).unwrap()).unwrap();
    let fit = report.get("power_law").expect("power-law fit present");
    let exponent = fit.get("exponent").unwrap().as_float().unwrap();
    let r2 = fit.get("r_squared").unwrap().as_float().unwrap();
    assert!(
        (-0.6..=-0.25).contains(&exponent),
        "exponent {exponent} outside [-0.6, -0.25]"
    );
    assert!(r2 >= 0.9, "r² = {r2}");
    println!("ACCEPTANCE 5 PASS: Anderson quench exponent {exponent:.4}, r² = {r2:.4}");
}

#[test]
fn criterion_06_thermal_fit_residual() {
    let dir = std::env::temp_dir().join("qlab_acceptance_c6");
    let cfg = anderson_config(100, 30.0, 16, dir.to_str().unwrap());
    let out = experiments::run(&cfg).unwrap();
    let report: toml::Value =
        toml::from_str(&std::fs::read_to_string(out.dir.join("report.toml")).unwrap()).unwrap();
    let residual = report
        .get("thermal_fit_residual")
        .unwrap()
        .as_float()
        .unwrap();
    assert!(residual <= 1e-2, "thermal-fit residual {residual:.3e}");
    println!("ACCEPTANCE 6 PASS: thermal-fit residual {residual:.3e} at L = 100");
}

#[test]
fn criterion_07_dephasing_vs_time_average() {
    let l = 20;
    let model = HoppingModel::nearest_neighbour(l, 1.0).unwrap();
    // random admissible covariance: random fillings rotated by a random model
    let mut rng = ChaCha12Rng::seed_from_u64(707);
    let diag: Vec<f64> = (0..l).map(|_| rng.random_range(0.0..1.0)).collect();
    let scrambler = HoppingModel::new(l, vec![0.0, 0.7, -0.4, 0.2]).unwrap();
    let gamma = Covariance::from_diagonal(&diag)
        .evolve(&propagate(&scrambler, 3.3))
        .unwrap();
    let evo = CleanEvolution::new(&gamma, &model).unwrap();
    let dephased = evo.dephased(model.default_degeneracy_tol());
    let mut acc = DMatrix::<Complex64>::zeros(l, l);
    let samples = 2000;
    for _ in 0..samples {
        let t = rng.random_range(0.0..1e4);
        acc += evo.at(t).matrix();
    }
    acc /= Complex64::new(samples as f64, 0.0);
    let avg = Covariance::from_matrix(acc).unwrap();
    let dev = avg.max_norm_distance(&dephased).unwrap();
    assert!(dev <= 2e-2, "Monte-Carlo average deviates by {dev:.3e}");
    println!("ACCEPTANCE 7 PASS: dephase vs {samples}-sample time average, deviation {dev:.3e}");
}

#[test]
fn criterion_08_steady_state_circulant_scaling() {
    let mut series = Vec::new();
    for &l in &[50usize, 100, 200, 400] {
        let disordered = DisorderedModel::sample_anderson(l, 5.0, vec![0.0, 1.0], 7).unwrap();
        let clean = disordered.base().clone();
        let gamma = Covariance::thermal(&disordered.coupling_matrix(), 1.0, 0.0).unwrap();
        let evo = CleanEvolution::new(&gamma, &clean).unwrap();
        let steady = evo.dephased(clean.default_degeneracy_tol());
        let dist = steady.max_norm_distance(&steady.equilibrium()).unwrap();
        series.push((l as f64, dist));
    }
    let fit = power_law_fit(&series, (40.0, 450.0)).unwrap_or_else(|_| {
        // 4 points: fit by hand over all of them
        let logs: Vec<(f64, f64)> = series.iter().map(|(l, d)| (l.ln(), d.ln())).collect();
        let n = logs.len() as f64;
        let sx: f64 = logs.iter().map(|(x, _)| x).sum();
        let sy: f64 = logs.iter().map(|(_, y)| y).sum();
        let sxx: f64 = logs.iter().map(|(x, _)| x * x).sum();
        let sxy: f64 = logs.iter().map(|(x, y)| x * y).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        qlab_cli::fit::PowerLawFit {
            exponent: slope,
            prefactor: 0.0,
            window: (40.0, 450.0),
            r_squared: 1.0,
            decaying: slope < 0.0,
        }
    });
    assert!(
        (-1.2..=-0.8).contains(&fit.exponent),
        "log-log slope {} outside -1 ± 0.2 (distances {series:?})",
        fit.exponent
    );
    println!(
        "ACCEPTANCE 8 PASS: steady-state circulant deviation scales as L^{:.3}",
        fit.exponent
    );
}

#[test]
fn criterion_09_cdw_exactness_and_relaxation() {
    let l = 100;
    let nnn = HoppingModel::next_nearest_only(l, 1.0).unwrap();
    let occ: Vec<bool> = (0..l).map(|x| x % 2 == 1).collect();
    let cdw = Covariance::from_occupations(&occ);
    let evo = CleanEvolution::new(&cdw, &nnn).unwrap();
    let mut worst = 0.0f64;
    for &t in &[0.5, 1.5, 5.0] {
        worst = worst.max(evo.at(t).max_norm_distance(&cdw).unwrap());
    }
    assert!(worst <= 1e-10, "sub-lattice steady state drifted {worst:.3e}");

    let nn = HoppingModel::nearest_neighbour(l, 1.0).unwrap();
    let eq = cdw.equilibrium();
    for x in 0..l {
        for y in 0..l {
            let expect = if x == y { 0.5 } else { 0.0 };
            assert!((eq.entry(x, y) - Complex64::new(expect, 0.0)).norm() < 1e-12);
        }
    }
    let evo = CleanEvolution::new(&cdw, &nn).unwrap();
    let times = [0.1, 1.0, 10.0];
    let dists: Vec<f64> = times
        .iter()
        .map(|&t| evo.at(t).max_norm_distance(&eq).unwrap())
        .collect();
    assert!(
        dists[0] > dists[1] && dists[1] > dists[2],
        "distances not decreasing across decades: {dists:?}"
    );
    println!(
        "ACCEPTANCE 9 PASS: NNN stationarity {worst:.2e}; NN relaxation {:.3} -> {:.3} -> {:.3}",
        dists[0], dists[1], dists[2]
    );
}

#[test]
fn criterion_10_superlattice_memory() {
    let dir = std::env::temp_dir().join("qlab_acceptance_c10");
    let text = format!(
        r#"
experiment = "superlattice"

[model]
l = 200
j = [0.0, 1.0]

[state]
kind = "thermal"
beta = 1.0
mu = 0.0

[output]
dir = "{}"
"#,
        dir.display()
    );
    let cfg: RunConfig = toml::from_str(&text).unwrap();
    // the runner itself enforces |I'_1| <= 5/L and |I'_2 - I_1/2| <= 5/L
    let out = experiments::run(&cfg).unwrap();
    let report: toml::Value =
        toml::from_str(&std::fs::read_to_string(out.dir.join("report.toml")).unwrap()).unwrap();
    let pre = report.get("pre_fit_residual").unwrap().as_float().unwrap();
    let post = report.get("post_fit_residual").unwrap().as_float().unwrap();
    let i1_post = report.get("i1_post").unwrap().as_float().unwrap();
    let i2_post = report.get("i2_post").unwrap().as_float().unwrap();
    assert!(
        post >= 10.0 * pre,
        "steady-state thermal fit residual {post:.3e} not 10x the pre-quench residual {pre:.3e}"
    );
    // the initially empty sub-lattice ends at the uniform filling
    let density = report.get("post_density").unwrap().as_float().unwrap();
    let new_density = report
        .get("new_sublattice_density")
        .unwrap()
        .as_float()
        .unwrap();
    assert!(
        (new_density - density).abs() < 5.0 / 400.0,
        "new sub-lattice density {new_density:.5} vs uniform {density:.5}"
    );
    println!(
        "ACCEPTANCE 10 PASS: |I'_1| = {i1_post:.2e}, I'_2 = {i2_post:.5}; new sub-lattice density \
         {new_density:.4} (uniform {density:.4}); thermal residual {pre:.2e} -> {post:.2e}"
    );
}

#[test]
fn criterion_11_resilience_classifier() {
    let opts = ResilienceOptions::default();
    // charge-density wave under the NN model: non-resilient
    let l = 100;
    let nn = HoppingModel::nearest_neighbour(l, 1.0).unwrap();
    let cdw = Covariance::from_occupations(&(0..l).map(|x| x % 2 == 1).collect::<Vec<_>>());
    let report = classify_resilience(&cdw, &nn, &opts);
    assert_eq!(report.verdict, Verdict::NonResilient);

    // half-block: resilient with Θ(1) weight at resilient points across sizes
    let mut w_res = Vec::new();
    for &l in &[64usize, 128, 256] {
        let nn = HoppingModel::nearest_neighbour(l, 1.0).unwrap();
        let half = Covariance::from_occupations(&(0..l).map(|x| x < l / 2).collect::<Vec<_>>());
        let report = classify_resilience(&half, &nn, &opts);
        assert_eq!(report.verdict, Verdict::Resilient, "L = {l}");
        assert!(report.max_w_res > 0.2, "W_res = {} at L = {l}", report.max_w_res);
        w_res.push(report.max_w_res);
    }
    let spread = w_res.iter().cloned().fold(0.0f64, f64::max)
        / w_res.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 4.0, "W_res not Θ(1) across sizes: {w_res:?}");

    // CDW under the NNN-only model: sub-lattice symmetry makes it resilient
    let nnn = HoppingModel::next_nearest_only(l, 1.0).unwrap();
    let report = classify_resilience(&cdw, &nnn, &opts);
    assert_eq!(report.verdict, Verdict::Resilient);

    // m-step periodic band spectra live exactly on multiples of L/m
    let l = 90;
    let m = 3;
    let mut rng = ChaCha12Rng::seed_from_u64(1111);
    let block: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
    let diag: Vec<f64> = (0..l).map(|x| block[x % m]).collect();
    let spec = Covariance::from_diagonal(&diag).band_spectrum(0);
    for n in 1..=l {
        let w = spec.weight(n).norm();
        if n % (l / m) == 0 {
            continue;
        }
        assert!(w < 1e-13, "m-periodic weight {w:.2e} off-support at n = {n}");
    }
    println!(
        "ACCEPTANCE 11 PASS: CDW/NN non-resilient, half-block resilient (W_res = {w_res:?}), \
         CDW/NNN resilient, m-periodic support exact"
    );
}

#[test]
fn criterion_12_equilibration_bound_soundness() {
    let l = 256;
    let model = HoppingModel::nearest_neighbour(l, 1.0).unwrap();
    let cdw = Covariance::from_occupations(&(0..l).map(|x| x % 2 == 1).collect::<Vec<_>>());
    let bounder = EquilibrationBounder::new(&cdw, &model, &ResilienceOptions::default()).unwrap();
    let (t0, tr) = bounder.window();
    assert!(t0 < tr, "empty window [{t0}, {tr}]");
    let evo = CleanEvolution::new(&cdw, &model).unwrap();
    let eq = cdw.equilibrium();
    let mut worst_margin = f64::INFINITY;
    for i in 0..20 {
        let t = t0 * (tr / t0).powf(i as f64 / 19.0);
        let observed = evo.at(t).max_norm_distance(&eq).unwrap();
        let bound = bounder.bound(t).unwrap();
        assert!(
            observed <= bound,
            "t = {t:.3}: observed {observed:.4e} > bound {bound:.4e}"
        );
        worst_margin = worst_margin.min(bound - observed);
    }
    println!(
        "ACCEPTANCE 12 PASS: 20 times in [{t0:.2}, {tr:.2}], bound always above observation \
         (smallest margin {worst_margin:.3e})"
    );
}

#[test]
fn criterion_13_gaussification_trend() {
    let l = 12;
    let model = HoppingModel::nearest_neighbour(l, 1.0).unwrap();
    let space = oracle::FockSpace::new(l).unwrap();
    let h = model.coupling_matrix().map(|v| Complex64::new(v, 0.0));
    let psi0 = oracle::ManyBodyState::paired_superposition(l).unwrap();
    let quartets = oracle::local_quartets(l);
    let dev0 = oracle::wick_deviation(&space, &psi0, &quartets).unwrap();
    assert!(dev0 > 0.2, "seed state must be non-Gaussian, got {dev0:.3}");
    let t0 = propagator_certificate(&model, l).unwrap().cert.t0;
    let mut devs = Vec::new();
    for k in 0..=5 {
        let t = t0 + k as f64;
        let psi_t = oracle::evolve_quadratic(&psi0, &space, &h, t).unwrap();
        let dev = oracle::wick_deviation(&space, &psi_t, &quartets).unwrap();
        assert!(
            dev < 0.5 * dev0,
            "Wick deviation {dev:.4} at t = {t:.2} not below half of {dev0:.4}"
        );
        devs.push(dev);
    }
    println!(
        "ACCEPTANCE 13 PASS: Wick deviation {dev0:.3} at t=0, then {:?} for t = t0..t0+5",
        devs.iter().map(|d| (d * 1e3).round() / 1e3).collect::<Vec<_>>()
    );
}

#[test]
fn criterion_14_gge_round_trip() {
    let l = 256;
    let mut rng = ChaCha12Rng::seed_from_u64(1414);
    let mut worst = 0.0f64;
    for trial in 0..50 {
        let z_xi = rng.random_range(1..=6usize);
        let mut lambda = vec![rng.random_range(-1.0..1.0)];
        for _ in 0..z_xi {
            lambda.push(rng.random_range(-0.8..0.8));
        }
        let eta = if trial % 3 == 0 {
            Some((0..z_xi).map(|_| rng.random_range(-1.5..1.5)).collect())
        } else {
            None
        };
        let truth = GGEParams { lambda, eta };
        let target = gge_covariance(&truth, l);
        let fitted = fit_gge(&target.currents(), z_xi, l).unwrap();
        let got = gge_covariance(&fitted, l).currents();
        let want = target.currents();
        for z in 0..=z_xi {
            let err = (got.i[z] - want.i[z]).norm();
            assert!(err <= 1e-8, "trial {trial}, current {z}: residual {err:.3e}");
            worst = worst.max(err);
        }
    }
    // λ ≡ 0 is the infinite-temperature state
    let hot = gge_covariance(
        &GGEParams {
            lambda: vec![0.0, 0.0, 0.0],
            eta: None,
        },
        64,
    );
    for x in 0..64 {
        for y in 0..64 {
            let expect = if x == y { 0.5 } else { 0.0 };
            assert!((hot.entry(x, y) - Complex64::new(expect, 0.0)).norm() < 1e-12);
        }
    }
    // uniform-random band statistics: pooled E|X_n|² vs (a-b)²/(12L) within 3σ
    let (a, b) = (0.0, 1.0);
    let mut pooled = Vec::new();
    for _ in 0..200 {
        let diag: Vec<f64> = (0..l).map(|_| rng.random_range(a..b)).collect();
        let spec = Covariance::from_diagonal(&diag).band_spectrum(0);
        for n in 1..l {
            pooled.push(spec.weight(n).norm_sqr());
        }
    }
    let mean: f64 = pooled.iter().sum::<f64>() / pooled.len() as f64;
    let var: f64 =
        pooled.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (pooled.len() - 1) as f64;
    let se = (var / pooled.len() as f64).sqrt();
    let expected = (a - b) * (a - b) / (12.0 * l as f64);
    assert!(
        (mean - expected).abs() <= 3.0 * se,
        "band variance {mean:.4e} vs {expected:.4e} (3σ = {:.2e})",
        3.0 * se
    );
    println!(
        "ACCEPTANCE 14 PASS: 50 GGE round trips (worst current residual {worst:.3e}), \
         uniform-band variance {mean:.4e} vs {expected:.4e}"
    );
}
