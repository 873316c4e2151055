//! Generalized Gibbs ensembles e^{-Σ_z λ_z Î_z}/Z and ensemble fitting.
//!
//! The 1/L normalization of the current operators is absorbed into the
//! multipliers, so a GGE is diagonal in momentum with intensive mode energies
//! ε_k = λ_0 + 2 Σ_{z>=1} λ_z cos(2πkz/L + η_z) and occupations
//! n_k = 1/(1 + e^{ε_k}). With this convention the thermal state of the
//! nearest-neighbour chain at (β, μ) is the GGE with λ_0 = -βμ, λ_1 = βJ_1.

use crate::covariance::{Covariance, CurrentTable};
use crate::error::{Error, Result};
use crate::fourier::FourierTable;
use crate::model::HoppingModel;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct GGEParams {
    /// λ_0..λ_{z_ξ}
    pub lambda: Vec<f64>,
    /// Peierls angles η_1..η_{z_ξ} for complex-current ensembles
    pub eta: Option<Vec<f64>>,
}

impl GGEParams {
    pub fn z_xi(&self) -> usize {
        self.lambda.len() - 1
    }

    /// ε_m = λ_0 + 2 Σ_z λ_z cos(2πmz/L + η_z) in DFT mode order.
    pub fn mode_energies(&self, l: usize) -> Vec<f64> {
        (0..l)
            .map(|m| {
                let mut e = self.lambda[0];
                for (zi, lam) in self.lambda.iter().enumerate().skip(1) {
                    let eta = self.eta.as_ref().map(|v| v[zi - 1]).unwrap_or(0.0);
                    e += 2.0 * lam * (2.0 * PI * (m * zi) as f64 / l as f64 + eta).cos();
                }
                e
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ThermalFit {
    pub beta: f64,
    pub mu: f64,
    pub residual: f64,
    /// best point sits on the edge of the search domain
    pub boundary_hit: bool,
}

fn occupation(e: f64) -> f64 {
    if e > 0.0 {
        let x = (-e).exp();
        x / (1.0 + x)
    } else {
        1.0 / (1.0 + e.exp())
    }
}

/// Covariance of the GGE: translation invariant, diagonal in momentum.
pub fn gge_covariance(params: &GGEParams, l: usize) -> Covariance {
    let table = FourierTable::new(l);
    let mut kernel: Vec<Complex64> = params
        .mode_energies(l)
        .iter()
        .map(|&e| Complex64::new(occupation(e), 0.0))
        .collect();
    table.forward(&mut kernel);
    let m = DMatrix::from_fn(l, l, |x, y| kernel[(x + l - y) % l] / l as f64);
    Covariance::from_matrix(m).expect("GGE covariance is Hermitian by construction")
}

/// Currents I_z = (1/L) Σ_k n_k e^{2πikz/L} of a mode-occupation sequence.
fn currents_of_occupations(n: &[f64], z_max: usize) -> Vec<Complex64> {
    let l = n.len();
    (0..=z_max)
        .map(|z| {
            let mut s = Complex64::ZERO;
            for (m, &nk) in n.iter().enumerate() {
                s += nk * Complex64::from_polar(1.0, 2.0 * PI * (m * z) as f64 / l as f64);
            }
            s / l as f64
        })
        .collect()
}

/// Max-entropy fit: Lagrange multipliers whose GGE reproduces the target
/// currents I_0..I_{z_ξ}, solved as a damped Newton iteration on the convex
/// dual (the gradient components are exactly the current mismatches).
pub fn fit_gge(targets: &CurrentTable, z_xi: usize, l: usize) -> Result<GGEParams> {
    if z_xi > targets.range() {
        return Err(Error::InvalidParameter(format!(
            "z_xi = {z_xi} exceeds the target table range {}",
            targets.range()
        )));
    }
    let i0 = targets.i[0].re;
    if targets.i[0].im.abs() > 1e-10 {
        return Err(Error::Infeasible("density I_0 must be real".into()));
    }
    if !(i0 > 1e-12 && i0 < 1.0 - 1e-12) {
        return Err(Error::Infeasible(format!(
            "density I_0 = {i0} leaves no admissible occupations in (0,1)"
        )));
    }
    let cap = i0.min(1.0 - i0);
    for z in 1..=z_xi {
        if targets.i[z].norm() > cap + 1e-12 {
            return Err(Error::Infeasible(format!(
                "|I_{z}| = {} exceeds the admissible cap min(I_0, 1-I_0) = {cap}",
                targets.i[z].norm()
            )));
        }
    }

    // unknowns: [λ_0, (λ_z cos η_z, λ_z sin η_z) for z = 1..z_xi]
    let dim = 1 + 2 * z_xi;
    let mut v = DVector::<f64>::zeros(dim);
    let theta: Vec<Vec<f64>> = (0..l)
        .map(|m| {
            (1..=z_xi)
                .map(|z| 2.0 * PI * (m * z) as f64 / l as f64)
                .collect()
        })
        .collect();
    let occ = |v: &DVector<f64>| -> Vec<f64> {
        (0..l)
            .map(|m| {
                let mut e = v[0];
                for z in 1..=z_xi {
                    e += 2.0 * v[2 * z - 1] * theta[m][z - 1].cos()
                        - 2.0 * v[2 * z] * theta[m][z - 1].sin();
                }
                occupation(e)
            })
            .collect()
    };
    let mismatch = |n: &[f64]| -> DVector<f64> {
        let cur = currents_of_occupations(n, z_xi);
        let mut f = DVector::zeros(dim);
        f[0] = cur[0].re - i0;
        for z in 1..=z_xi {
            f[2 * z - 1] = cur[z].re - targets.i[z].re;
            f[2 * z] = cur[z].im - targets.i[z].im;
        }
        f
    };

    let mut n = occ(&v);
    let mut f = mismatch(&n);
    for _ in 0..300 {
        if f.amax() < 1e-11 {
            break;
        }
        // J_{ab} = -(1/L) Σ_m c_a(m) c_b(m) n_m (1 - n_m) with the basis
        // c_0 = 1, c_{2z-1} = cos θ_zm (paired with Re I_z),
        // c_{2z} = -sin θ_zm ... the current derivative picks up e^{iθ}
        let mut jac = DMatrix::<f64>::zeros(dim, dim);
        for m in 0..l {
            let w = -n[m] * (1.0 - n[m]) / l as f64;
            let mut basis = vec![0.0; dim];
            basis[0] = 1.0;
            for z in 1..=z_xi {
                basis[2 * z - 1] = 2.0 * theta[m][z - 1].cos();
                basis[2 * z] = -2.0 * theta[m][z - 1].sin();
            }
            // derivative of the z-th current w.r.t. mode occupation carries
            // cos θ (real part) and sin θ (imag part)
            let mut row = vec![0.0; dim];
            row[0] = 1.0;
            for z in 1..=z_xi {
                row[2 * z - 1] = theta[m][z - 1].cos();
                row[2 * z] = theta[m][z - 1].sin();
            }
            for a in 0..dim {
                for b in 0..dim {
                    jac[(a, b)] += row[a] * w * basis[b];
                }
            }
        }
        let decomp = jac.lu();
        let Some(step) = decomp.solve(&f) else {
            return Err(Error::NoConvergence(
                "singular Jacobian in the GGE Newton solve".into(),
            ));
        };
        // damped update: backtrack until the residual shrinks
        let mut alpha = 1.0;
        let base = f.amax();
        loop {
            let trial = &v - &step * alpha;
            let n_t = occ(&trial);
            let f_t = mismatch(&n_t);
            if f_t.amax() < base || alpha < 1e-6 {
                v = trial;
                n = n_t;
                f = f_t;
                break;
            }
            alpha *= 0.5;
        }
    }
    if f.amax() > 1e-9 {
        return Err(Error::NoConvergence(format!(
            "GGE fit residual {:.3e} after Newton iterations",
            f.amax()
        )));
    }
    let mut lambda = vec![v[0]];
    let mut eta = Vec::new();
    let mut any_sine = false;
    for z in 1..=z_xi {
        let (c, s) = (v[2 * z - 1], v[2 * z]);
        if s.abs() > 1e-10 {
            any_sine = true;
        }
        lambda.push((c * c + s * s).sqrt());
        eta.push(s.atan2(c));
    }
    if any_sine {
        Ok(GGEParams {
            lambda,
            eta: Some(eta),
        })
    } else {
        // real targets: keep signed cosine multipliers, no Peierls angles
        let mut lam = vec![v[0]];
        for z in 1..=z_xi {
            lam.push(v[2 * z - 1]);
        }
        Ok(GGEParams {
            lambda: lam,
            eta: None,
        })
    }
}

/// Best (β, μ) thermal state of the model in max-norm distance to the
/// target: coarse grid followed by shrinking local grids.
pub fn fit_thermal(target: &Covariance, model: &HoppingModel) -> Result<ThermalFit> {
    let l = target.l();
    if l != model.l() {
        return Err(Error::Dimension {
            left: l,
            right: model.l(),
            context: "covariance vs model size in fit_thermal",
        });
    }
    let omega = model.eigenvalues();
    let omega_min = omega.iter().cloned().fold(f64::INFINITY, f64::min);
    let omega_max = omega.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (beta_lo, beta_hi) = (0.02f64, 50.0f64);
    let (mu_lo, mu_hi) = (omega_min - 2.0, omega_max + 2.0);

    let table = FourierTable::new(l);
    let omega_fft = {
        let mut v = vec![0.0; l];
        for (m, w) in v.iter_mut().enumerate() {
            *w = model.dispersion(2.0 * PI * m as f64 / l as f64);
        }
        v
    };
    let residual = |beta: f64, mu: f64| -> f64 {
        let mut kernel: Vec<Complex64> = omega_fft
            .iter()
            .map(|&w| Complex64::new(occupation(beta * (w - mu)), 0.0))
            .collect();
        table.forward(&mut kernel);
        let mut worst = 0.0f64;
        for x in 0..l {
            for y in 0..l {
                let th = kernel[(x + l - y) % l] / l as f64;
                worst = worst.max((target.entry(x, y) - th).norm());
            }
        }
        worst
    };

    let mut best = (f64::INFINITY, beta_lo, 0.0);
    for i in 0..21 {
        let beta = beta_lo * (beta_hi / beta_lo).powf(i as f64 / 20.0);
        for j in 0..25 {
            let mu = mu_lo + (mu_hi - mu_lo) * j as f64 / 24.0;
            let r = residual(beta, mu);
            if r < best.0 {
                best = (r, beta, mu);
            }
        }
    }
    // shrinking local grids in (ln β, μ)
    let mut half_log = (beta_hi / beta_lo).ln() / 20.0;
    let mut half_mu = (mu_hi - mu_lo) / 24.0;
    for _ in 0..22 {
        let (_, b0, m0) = best;
        for di in -2i32..=2 {
            for dj in -2i32..=2 {
                let beta = (b0.ln() + di as f64 * half_log / 2.0).exp();
                if beta <= 0.0 {
                    continue;
                }
                let mu = m0 + dj as f64 * half_mu / 2.0;
                let r = residual(beta, mu);
                if r < best.0 {
                    best = (r, beta, mu);
                }
            }
        }
        half_log *= 0.45;
        half_mu *= 0.45;
    }
    let (res, beta, mu) = best;
    let boundary_hit = beta <= beta_lo * 1.01 || beta >= beta_hi * 0.99 || mu <= mu_lo || mu >= mu_hi;
    Ok(ThermalFit {
        beta,
        mu,
        residual: res,
        boundary_hit,
    })
}

/// Number of currents needed at resolution ε given the clustering constants:
/// z_ξ = ceil(ξ ln(C_Clust / ε)), floored at zero.
pub fn relevant_range(c_clust: f64, xi: f64, eps: f64) -> Result<usize> {
    if eps <= 0.0 || c_clust <= 0.0 {
        return Err(Error::InvalidParameter(
            "relevant_range needs ε > 0 and C_Clust > 0".into(),
        ));
    }
    if !xi.is_finite() || xi < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "correlation length ξ = {xi} is not usable"
        )));
    }
    let z = xi * (c_clust / eps).ln();
    Ok(if z <= 0.0 { 0 } else { z.ceil() as usize })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn lambda_zero_only_is_uniform_filling() {
        let p = GGEParams {
            lambda: vec![0.7],
            eta: None,
        };
        let g = gge_covariance(&p, 12);
        let expect = 1.0 / (1.0 + 0.7f64.exp());
        for x in 0..12 {
            for y in 0..12 {
                let want = if x == y { expect } else { 0.0 };
                assert!((g.entry(x, y) - Complex64::new(want, 0.0)).norm() < 1e-12);
            }
        }
        let hot = GGEParams {
            lambda: vec![0.0, 0.0],
            eta: None,
        };
        let g = gge_covariance(&hot, 8);
        for x in 0..8 {
            assert!((g.entry(x, x).re - 0.5).abs() < 1e-13);
        }
    }

    #[test]
    fn gge_reproduces_thermal_state_of_nn_chain() {
        let l = 24;
        let (beta, mu, j1) = (1.3, 0.4, 1.0);
        let model = HoppingModel::nearest_neighbour(l, j1).unwrap();
        let thermal = Covariance::thermal_clean(&model, beta, mu).unwrap();
        let gge = gge_covariance(
            &GGEParams {
                lambda: vec![-beta * mu, beta * j1],
                eta: None,
            },
            l,
        );
        assert!(thermal.max_norm_distance(&gge).unwrap() < 1e-10);
    }

    #[test]
    fn fit_gge_round_trip() {
        let l = 64;
        let truth = GGEParams {
            lambda: vec![0.3, -0.8, 0.25, 0.1],
            eta: None,
        };
        let gamma = gge_covariance(&truth, l);
        let fitted = fit_gge(&gamma.currents(), 3, l).unwrap();
        for (a, b) in truth.lambda.iter().zip(fitted.lambda.iter()) {
            assert!((a - b).abs() < 1e-6, "λ mismatch: {a} vs {b}");
        }
        assert!(fitted.eta.is_none());
        // currents reproduced
        let refit = gge_covariance(&fitted, l);
        let ca = gamma.currents();
        let cb = refit.currents();
        for z in 0..=3 {
            assert!((ca.i[z] - cb.i[z]).norm() < 1e-8);
        }
    }

    #[test]
    fn fit_gge_with_peierls_angles() {
        let l = 48;
        let truth = GGEParams {
            lambda: vec![0.2, 0.6, 0.3],
            eta: Some(vec![0.7, -1.1]),
        };
        let gamma = gge_covariance(&truth, l);
        let fitted = fit_gge(&gamma.currents(), 2, l).unwrap();
        let refit = gge_covariance(&fitted, l);
        assert!(gamma.max_norm_distance(&refit).unwrap() < 1e-8);
        assert!(fitted.eta.is_some());
    }

    #[test]
    fn fit_gge_uniform_density_gives_zero_multipliers() {
        let l = 32;
        let half = Covariance::from_diagonal(&[0.5; 32]);
        let fitted = fit_gge(&half.currents(), 2, l).unwrap();
        for lam in &fitted.lambda {
            assert!(lam.abs() < 1e-9, "λ = {lam}");
        }
    }

    #[test]
    fn fit_gge_rejects_infeasible_targets() {
        let mut table = Covariance::from_diagonal(&[0.5; 16]).currents();
        table.i[1] = Complex64::new(0.9, 0.0); // exceeds min(I_0, 1-I_0)
        assert!(matches!(fit_gge(&table, 1, 16), Err(Error::Infeasible(_))));
        let vacuum = Covariance::from_diagonal(&[0.0; 16]).currents();
        assert!(fit_gge(&vacuum, 1, 16).is_err());
    }

    #[test]
    fn fit_thermal_in_model_round_trip() {
        let l = 40;
        let model = HoppingModel::nearest_neighbour(l, 1.0).unwrap();
        let target = Covariance::thermal_clean(&model, 1.7, 0.3).unwrap();
        let fit = fit_thermal(&target, &model).unwrap();
        assert!((fit.beta - 1.7).abs() < 1e-3, "β = {}", fit.beta);
        assert!((fit.mu - 0.3).abs() < 1e-3, "μ = {}", fit.mu);
        assert!(fit.residual < 1e-9, "residual = {:.3e}", fit.residual);
        assert!(!fit.boundary_hit);
    }

    #[test]
    fn thermal_fit_never_beats_gge_on_gge_targets() {
        let l = 48;
        let model = HoppingModel::nearest_neighbour(l, 1.0).unwrap();
        let truth = GGEParams {
            lambda: vec![0.1, 0.9, -0.45],
            eta: None,
        };
        let target = gge_covariance(&truth, l);
        let thermal = fit_thermal(&target, &model).unwrap();
        let gge = gge_covariance(&fit_gge(&target.currents(), 2, l).unwrap(), l);
        let gge_res = target.max_norm_distance(&gge).unwrap();
        assert!(
            gge_res <= thermal.residual + 1e-12,
            "GGE residual {gge_res:.3e} vs thermal {:.3e}",
            thermal.residual
        );
    }

    #[test]
    fn periodic_filling_equilibrates_to_infinite_temperature_at_fixed_mu() {
        // period-F diagonal data: Γ^(eq) = δ_{x,y}/F, the infinite-temperature
        // state at chemical potential μ = -ln(F-1), i.e. λ_0 = ln(F-1)
        let l = 60;
        for f in [2usize, 3, 4] {
            let occ: Vec<bool> = (0..l).map(|x| x % f == 0).collect();
            let eq = Covariance::from_occupations(&occ).equilibrium();
            let fitted = fit_gge(&eq.currents(), 2, l).unwrap();
            let expected = ((f - 1) as f64).ln();
            assert!(
                (fitted.lambda[0] - expected).abs() < 1e-7,
                "F = {f}: λ_0 = {} vs ln(F-1) = {expected}",
                fitted.lambda[0]
            );
            for lam in &fitted.lambda[1..] {
                assert!(lam.abs() < 1e-7);
            }
        }
    }

    #[test]
    fn relevant_range_arithmetic() {
        assert_eq!(relevant_range(1.0, 1.0, 1.0).unwrap(), 0);
        assert_eq!(relevant_range(10.0, 2.0, 1e-3).unwrap(), 19);
        assert_eq!(relevant_range(0.5, 3.0, 1.0).unwrap(), 0);
        assert!(relevant_range(1.0, f64::INFINITY, 0.1).is_err());
    }

    #[test]
    fn gge_currents_decay_exponentially() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let l = 96;
        let p = GGEParams {
            lambda: vec![
                rng.random_range(-0.5..0.5),
                rng.random_range(0.3..1.0),
                rng.random_range(-0.3..0.3),
            ],
            eta: None,
        };
        let g = gge_covariance(&p, l);
        let cur = g.currents();
        // log-linear envelope: |I_z| below C e^{-z/ξ_A} for the fitted pair
        let fit = g.clustering_fit();
        assert!(fit.reliable && fit.xi.is_finite());
        for z in 0..=l / 2 {
            if cur.i[z].norm() < 1e-12 {
                continue; // numerical noise floor
            }
            let env = fit.c_clust * (-(z as f64) / fit.xi).exp();
            assert!(
                cur.i[z].norm() <= env * (1.0 + 1e-9),
                "current {z} above envelope"
            );
        }
    }
}
