//! One-particle propagators G(t) for quadratic hopping Hamiltonians.
//!
//! Mode operators evolve as f_x(t) = Σ_y G*_{x,y}(t) f_y with G*(t) = e^{-ith},
//! so the object stored here is G(t) = e^{ith} (h real) and covariances evolve
//! verbatim as Γ(t) = G Γ G†. Clean models give a circulant G held as its
//! first column (O(L) memory); disordered models fall back to a dense matrix
//! from the cached eigendecomposition.

use crate::bessel::{bessel_j, i_pow};
use crate::error::{Error, Result};
use crate::fourier::FourierTable;
use crate::model::{DisorderedModel, HoppingModel};
use nalgebra::DMatrix;
use num_complex::Complex64;

#[derive(Debug, Clone)]
pub enum Propagator {
    Circulant {
        l: usize,
        t: f64,
        /// e^{i ω_m t} in DFT mode order m = 0..L-1.
        phases: Vec<Complex64>,
        /// kernel g with G_{x,y} = g_{(x-y) mod L}.
        kernel: Vec<Complex64>,
    },
    Dense {
        l: usize,
        t: f64,
        matrix: DMatrix<Complex64>,
    },
}

/// Circulant propagator of a clean model, via one inverse DFT of the phase
/// sequence e^{i ω_k t}; cost O(L log L).
pub fn propagate(model: &HoppingModel, t: f64) -> Propagator {
    let l = model.l();
    let phases: Vec<Complex64> = model
        .omega_fft()
        .iter()
        .map(|&w| Complex64::from_polar(1.0, w * t))
        .collect();
    let table = FourierTable::new(l);
    let mut kernel = phases.clone();
    table.inverse(&mut kernel);
    for g in kernel.iter_mut() {
        *g /= l as f64;
    }
    Propagator::Circulant { l, t, phases, kernel }
}

/// Dense propagator of a disordered model from h = Q ω Qᵀ: G(t) = Q e^{iωt} Qᵀ.
/// Agrees with `propagate` when the disorder vanishes.
pub fn propagate_disordered(model: &DisorderedModel, t: f64) -> Propagator {
    let (q, omega) = model.eigendecomposition();
    let l = model.l();
    let mut phased = DMatrix::<Complex64>::zeros(l, l);
    // columns of Q scaled by the phases
    for k in 0..l {
        let ph = Complex64::from_polar(1.0, omega[k] * t);
        for x in 0..l {
            phased[(x, k)] = ph * q[(x, k)];
        }
    }
    let qc = q.map(|v| Complex64::new(v, 0.0));
    let matrix = &phased * qc.transpose();
    Propagator::Dense { l, t, matrix }
}

impl Propagator {
    pub fn l(&self) -> usize {
        match self {
            Propagator::Circulant { l, .. } | Propagator::Dense { l, .. } => *l,
        }
    }

    pub fn time(&self) -> f64 {
        match self {
            Propagator::Circulant { t, .. } | Propagator::Dense { t, .. } => *t,
        }
    }

    /// G_{x,y} with 0-based indices.
    pub fn entry(&self, x: usize, y: usize) -> Complex64 {
        match self {
            Propagator::Circulant { l, kernel, .. } => kernel[(x + l - y) % l],
            Propagator::Dense { matrix, .. } => matrix[(x, y)],
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        match self {
            Propagator::Circulant { l, kernel, .. } => {
                DMatrix::from_fn(*l, *l, |x, y| kernel[(x + l - y) % l])
            }
            Propagator::Dense { matrix, .. } => matrix.clone(),
        }
    }

    /// max_x |Σ_y |G_{x,y}|² - 1|; zero for a unitary matrix.
    pub fn unitarity_deviation(&self) -> f64 {
        match self {
            Propagator::Circulant { kernel, .. } => {
                (kernel.iter().map(|g| g.norm_sqr()).sum::<f64>() - 1.0).abs()
            }
            Propagator::Dense { l, matrix, .. } => {
                let mut worst = 0.0f64;
                for x in 0..*l {
                    let s: f64 = (0..*l).map(|y| matrix[(x, y)].norm_sqr()).sum();
                    worst = worst.max((s - 1.0).abs());
                }
                worst
            }
        }
    }

    /// Largest |G_{x,y}| over all entries.
    pub fn max_abs_entry(&self) -> f64 {
        match self {
            Propagator::Circulant { kernel, .. } => {
                kernel.iter().fold(0.0f64, |m, g| m.max(g.norm()))
            }
            Propagator::Dense { matrix, .. } => {
                matrix.iter().fold(0.0f64, |m, g| m.max(g.norm()))
            }
        }
    }
}

/// i^d J_d(-2t): the large-L limit of the nearest-neighbour propagator
/// G*_{x,y}(t) at separation d = x - y (convention J_1 = 1).
pub fn bessel_approximation(d: i64, t: f64) -> Complex64 {
    i_pow(d) * bessel_j(d, -2.0 * t)
}

/// Riemann-sum error bound π|d - 2t| / L for the Bessel approximation.
pub fn bessel_error_bound(d: i64, t: f64, l: usize) -> Result<f64> {
    if l == 0 {
        return Err(Error::InvalidParameter("L must be positive".into()));
    }
    Ok(std::f64::consts::PI * (d as f64 - 2.0 * t).abs() / l as f64)
}

/// Dense matrix exponential e^{ith} of a real symmetric coupling matrix,
/// an O(L³) oracle used to cross-check `propagate`.
pub fn expm_oracle(h: &DMatrix<f64>, t: f64) -> DMatrix<Complex64> {
    let eig = h.clone().symmetric_eigen();
    let l = h.nrows();
    let mut phased = DMatrix::<Complex64>::zeros(l, l);
    for k in 0..l {
        let ph = Complex64::from_polar(1.0, eig.eigenvalues[k] * t);
        for x in 0..l {
            phased[(x, k)] = ph * eig.eigenvectors[(x, k)];
        }
    }
    let qc = eig.eigenvectors.map(|v| Complex64::new(v, 0.0));
    &phased * qc.transpose()
}
