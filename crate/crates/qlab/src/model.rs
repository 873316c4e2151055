//! Translation-invariant hopping chains on a ring and their disordered
//! (Anderson) variants.
//!
//! A clean model is fixed by the system size L, the hopping range R and the
//! real amplitudes J_0..J_R. Its coupling matrix is real symmetric circulant,
//! so the dispersion E(p) = J_0 + 2 Σ_z J_z cos(pz) evaluated at p_k = 2πk/L
//! gives the exact single-particle spectrum for any L > 2R.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::f64::consts::PI;
use std::sync::OnceLock;

#[derive(Debug, Clone, PartialEq)]
pub struct HoppingModel {
    l: usize,
    couplings: Vec<f64>, // J_0..J_R
}

impl HoppingModel {
    pub fn new(l: usize, couplings: Vec<f64>) -> Result<Self> {
        if couplings.is_empty() {
            return Err(Error::InvalidParameter("couplings must contain at least J_0".into()));
        }
        let r = couplings.len() - 1;
        if l <= 2 * r {
            return Err(Error::InvalidParameter(format!(
                "need L > 2R for the circulant eigenvalue formula, got L = {l}, R = {r}"
            )));
        }
        Ok(HoppingModel { l, couplings })
    }

    /// Nearest-neighbour chain with J_1 = j, J_0 = 0.
    pub fn nearest_neighbour(l: usize, j: f64) -> Result<Self> {
        Self::new(l, vec![0.0, j])
    }

    /// Next-nearest-neighbour-only chain with J_2 = j, J_0 = J_1 = 0.
    pub fn next_nearest_only(l: usize, j: f64) -> Result<Self> {
        Self::new(l, vec![0.0, 0.0, j])
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn range(&self) -> usize {
        self.couplings.len() - 1
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn coupling(&self, z: usize) -> f64 {
        self.couplings.get(z).copied().unwrap_or(0.0)
    }

    /// J_max = max_{z>=1} |J_z|.
    pub fn j_max(&self) -> f64 {
        self.couplings[1..].iter().fold(0.0, |m, j| m.max(j.abs()))
    }

    /// Dispersion relation E(p) = J_0 + 2 Σ_z J_z cos(pz).
    pub fn dispersion(&self, p: f64) -> f64 {
        let mut e = self.couplings[0];
        for (z, j) in self.couplings.iter().enumerate().skip(1) {
            e += 2.0 * j * (p * z as f64).cos();
        }
        e
    }

    /// Exact m-th derivative of the dispersion, m >= 1:
    /// E^{(m)}(p) = 2 Σ_z J_z z^m cos(pz + mπ/2).
    pub fn dispersion_derivative(&self, order: u32, p: f64) -> f64 {
        assert!(order >= 1, "derivative order must be >= 1");
        let shift = order as f64 * PI / 2.0;
        let mut e = 0.0;
        for (z, j) in self.couplings.iter().enumerate().skip(1) {
            e += 2.0 * j * (z as f64).powi(order as i32) * (p * z as f64 + shift).cos();
        }
        e
    }

    /// Eigenvalues ω_k = E(2πk/L) for k = 1..L (vector position k-1).
    pub fn eigenvalues(&self) -> Vec<f64> {
        (1..=self.l)
            .map(|k| self.dispersion(2.0 * PI * k as f64 / self.l as f64))
            .collect()
    }

    /// Eigenvalues in DFT mode order m = 0..L-1, ω_m = E(2πm/L).
    pub(crate) fn omega_fft(&self) -> Vec<f64> {
        (0..self.l)
            .map(|m| self.dispersion(2.0 * PI * m as f64 / self.l as f64))
            .collect()
    }

    /// Spectral range max ω - min ω, used for relative tolerances.
    pub fn spectral_range(&self) -> f64 {
        let omega = self.eigenvalues();
        let max = omega.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = omega.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }

    /// Dense circulant coupling matrix with h_{x,x+z} = J_z, periodic indices.
    pub fn coupling_matrix(&self) -> DMatrix<f64> {
        let l = self.l;
        let mut h = DMatrix::zeros(l, l);
        for x in 0..l {
            for (z, &j) in self.couplings.iter().enumerate() {
                if j == 0.0 {
                    continue;
                }
                if z == 0 {
                    h[(x, x)] = j;
                } else {
                    h[(x, (x + z) % l)] += j;
                    h[((x + z) % l, x)] += j;
                }
            }
        }
        h
    }

    /// All n in 1..L-1 with ω_{k+n} = ω_k for every k within `tol`.
    pub fn shift_symmetries(&self, tol: f64) -> Vec<usize> {
        assert!(tol > 0.0, "tolerance must be positive");
        let omega = self.omega_fft();
        let l = self.l;
        (1..l)
            .filter(|&n| {
                (0..l).all(|k| (omega[(k + n) % l] - omega[k]).abs() <= tol)
            })
            .collect()
    }

    /// Default degeneracy tolerance: 1e-9 times the spectral scale.
    pub fn default_degeneracy_tol(&self) -> f64 {
        let scale = self
            .eigenvalues()
            .iter()
            .fold(0.0f64, |m, w| m.max(w.abs()))
            .max(1e-300);
        1e-9 * scale
    }
}

/// Clean model plus on-site potentials ξ_1..ξ_L.
#[derive(Debug)]
pub struct DisorderedModel {
    base: HoppingModel,
    onsite: Vec<f64>,
    eig: OnceLock<(DMatrix<f64>, DVector<f64>)>,
}

impl Clone for DisorderedModel {
    fn clone(&self) -> Self {
        DisorderedModel {
            base: self.base.clone(),
            onsite: self.onsite.clone(),
            eig: OnceLock::new(),
        }
    }
}

impl DisorderedModel {
    /// Attach explicit on-site potentials to a clean model.
    pub fn from_onsite(base: HoppingModel, onsite: Vec<f64>) -> Result<Self> {
        if onsite.len() != base.l() {
            return Err(Error::Dimension {
                left: onsite.len(),
                right: base.l(),
                context: "on-site potential length vs system size",
            });
        }
        Ok(DisorderedModel {
            base,
            onsite,
            eig: OnceLock::new(),
        })
    }

    /// ξ_x i.i.d. uniform on [-w, w], reproducible from the seed (ChaCha12 stream).
    pub fn sample_anderson(l: usize, w: f64, couplings: Vec<f64>, seed: u64) -> Result<Self> {
        if w < 0.0 {
            return Err(Error::InvalidParameter(format!("disorder width w = {w} must be >= 0")));
        }
        let base = HoppingModel::new(l, couplings)?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let onsite = (0..l)
            .map(|_| if w == 0.0 { 0.0 } else { rng.random_range(-w..w) })
            .collect();
        Self::from_onsite(base, onsite)
    }

    /// One-sided variant with ξ_x uniform on [0, w].
    pub fn sample_one_sided(l: usize, w: f64, couplings: Vec<f64>, seed: u64) -> Result<Self> {
        if w < 0.0 {
            return Err(Error::InvalidParameter(format!("disorder width w = {w} must be >= 0")));
        }
        let base = HoppingModel::new(l, couplings)?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let onsite = (0..l)
            .map(|_| if w == 0.0 { 0.0 } else { rng.random_range(0.0..w) })
            .collect();
        Self::from_onsite(base, onsite)
    }

    pub fn base(&self) -> &HoppingModel {
        &self.base
    }

    pub fn onsite(&self) -> &[f64] {
        &self.onsite
    }

    pub fn l(&self) -> usize {
        self.base.l()
    }

    pub fn coupling_matrix(&self) -> DMatrix<f64> {
        let mut h = self.base.coupling_matrix();
        for (x, xi) in self.onsite.iter().enumerate() {
            h[(x, x)] += xi;
        }
        h
    }

    /// Cached eigendecomposition h = Q diag(ω) Qᵀ, computed once.
    pub fn eigendecomposition(&self) -> &(DMatrix<f64>, DVector<f64>) {
        self.eig.get_or_init(|| {
            let eig = self.coupling_matrix().symmetric_eigen();
            (eig.eigenvectors, eig.eigenvalues)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dispersion_nearest_neighbour_values() {
        let m = HoppingModel::nearest_neighbour(8, 1.0).unwrap();
        assert!((m.dispersion(0.0) - 2.0).abs() < 1e-15);
        assert!(m.dispersion(PI / 2.0).abs() < 1e-15);
        // ω_k = 2 cos(2πk/8)
        let omega = m.eigenvalues();
        for (i, w) in omega.iter().enumerate() {
            let k = i + 1;
            assert!((w - 2.0 * (2.0 * PI * k as f64 / 8.0).cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn dispersion_is_periodic() {
        let m = HoppingModel::new(16, vec![0.3, 1.0, -0.4, 0.2]).unwrap();
        for i in 0..40 {
            let p = i as f64 * 0.173;
            assert!((m.dispersion(p) - m.dispersion(p + 2.0 * PI)).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenvalues_nn_l4() {
        let m = HoppingModel::nearest_neighbour(4, 1.0).unwrap();
        let omega = m.eigenvalues();
        let expected = [0.0, -2.0, 0.0, 2.0];
        for (w, e) in omega.iter().zip(expected.iter()) {
            assert!((w - e).abs() < 1e-14, "omega {omega:?}");
        }
    }

    #[test]
    fn flat_band_constant_dispersion() {
        let m = HoppingModel::new(10, vec![5.0]).unwrap();
        for w in m.eigenvalues() {
            assert_eq!(w, 5.0);
        }
        // every shift is a symmetry of a flat band
        assert_eq!(m.shift_symmetries(1e-12).len(), 9);
    }

    #[test]
    fn eigenvalues_match_dense_solver() {
        let m = HoppingModel::new(64, vec![0.1, 1.0, -0.35, 0.2]).unwrap();
        let mut ours = m.eigenvalues();
        let mut dense: Vec<f64> = m
            .coupling_matrix()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .collect();
        ours.sort_by(f64::total_cmp);
        dense.sort_by(f64::total_cmp);
        for (a, b) in ours.iter().zip(dense.iter()) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let m = HoppingModel::new(32, vec![0.0, 1.0, 0.3]).unwrap();
        for order in 1..=3u32 {
            // step chosen per order: f64 roundoff scales as eps/h^order
            let h = if order < 3 { 1e-4 } else { 1e-3 };
            for i in 0..10 {
                let p = 0.17 + i as f64 * 0.55;
                let exact = m.dispersion_derivative(order, p);
                let fd = match order {
                    1 => (m.dispersion(p + h) - m.dispersion(p - h)) / (2.0 * h),
                    2 => (m.dispersion(p + h) - 2.0 * m.dispersion(p) + m.dispersion(p - h)) / (h * h),
                    _ => {
                        (m.dispersion(p + 2.0 * h) - 2.0 * m.dispersion(p + h)
                            + 2.0 * m.dispersion(p - h)
                            - m.dispersion(p - 2.0 * h))
                            / (2.0 * h * h * h)
                    }
                };
                let scale = exact.abs().max(1.0);
                assert!(
                    (exact - fd).abs() / scale < 1e-5,
                    "order {order} at p={p}: exact {exact}, fd {fd}"
                );
            }
        }
    }

    #[test]
    fn coupling_matrix_ring_adjacency() {
        let m = HoppingModel::nearest_neighbour(3, 1.0).unwrap();
        let h = m.coupling_matrix();
        let expected = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]);
        assert_eq!(h, expected);
    }

    #[test]
    fn coupling_matrix_circulant_first_row() {
        let m = HoppingModel::new(6, vec![0.0, 1.0, 0.5]).unwrap();
        let h = m.coupling_matrix();
        let first: Vec<f64> = (0..6).map(|y| h[(0, y)]).collect();
        assert_eq!(first, vec![0.0, 1.0, 0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn coupling_matrix_shift_invariance() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..100 {
            let l = rng.random_range(5..40);
            let r = rng.random_range(1..=(l - 1) / 2).min(3);
            let couplings: Vec<f64> = (0..=r).map(|_| rng.random_range(-2.0..2.0)).collect();
            let m = HoppingModel::new(l, couplings).unwrap();
            let h = m.coupling_matrix();
            let x = rng.random_range(0..l);
            let y = rng.random_range(0..l);
            assert_eq!(h[(x, y)], h[((x + 1) % l, (y + 1) % l)]);
        }
    }

    #[test]
    fn shift_symmetry_of_next_nearest_model() {
        let nn = HoppingModel::nearest_neighbour(12, 1.0).unwrap();
        assert!(nn.shift_symmetries(nn.default_degeneracy_tol()).is_empty());
        let nnn = HoppingModel::next_nearest_only(12, 1.0).unwrap();
        let syms = nnn.shift_symmetries(nnn.default_degeneracy_tol());
        assert!(syms.contains(&6), "NNN-only on even L must contain L/2, got {syms:?}");
    }

    #[test]
    fn anderson_sampling_is_deterministic_and_bounded() {
        let a = DisorderedModel::sample_anderson(1000, 5.0, vec![0.0, 1.0], 7).unwrap();
        let b = DisorderedModel::sample_anderson(1000, 5.0, vec![0.0, 1.0], 7).unwrap();
        assert_eq!(a.onsite(), b.onsite());
        assert!(a.onsite().iter().all(|x| x.abs() <= 5.0));
        let c = DisorderedModel::sample_anderson(1000, 5.0, vec![0.0, 1.0], 8).unwrap();
        assert_ne!(a.onsite(), c.onsite());
    }

    #[test]
    fn anderson_zero_disorder_is_clean() {
        let d = DisorderedModel::sample_anderson(16, 0.0, vec![0.0, 1.0], 1).unwrap();
        assert_eq!(d.coupling_matrix(), d.base().coupling_matrix());
    }

    #[test]
    fn one_sided_disorder_is_nonnegative() {
        let d = DisorderedModel::sample_one_sided(500, 5.0, vec![0.0, 1.0], 3).unwrap();
        assert!(d.onsite().iter().all(|&x| (0.0..=5.0).contains(&x)));
        let mean: f64 = d.onsite().iter().sum::<f64>() / 500.0;
        assert!((mean - 2.5).abs() < 0.4, "one-sided mean {mean}");
    }

    #[test]
    fn anderson_mean_law_of_large_numbers() {
        let l = 100_000;
        let w = 5.0;
        let d = DisorderedModel::sample_anderson(l, w, vec![0.0, 1.0], 7).unwrap();
        let mean: f64 = d.onsite().iter().sum::<f64>() / l as f64;
        let bound = 3.0 * w / (3.0 * l as f64).sqrt();
        assert!(mean.abs() < bound, "mean {mean:.3e} exceeds {bound:.3e}");
    }
}
