//! Discrete Fourier transform helpers shared by the propagator and covariance code.
//!
//! Conventions: the unitary DFT matrix is U_{k,x} = exp(-2πi k x / L) / √L with
//! 0-based mode and site labels. `forward` computes the unnormalized sum with
//! e^{-2πi}, `inverse` the one with e^{+2πi}. A clean coupling matrix satisfies
//! h = U† diag(ω) U with ω_m = E(2πm/L).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub struct FourierTable {
    l: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl FourierTable {
    pub fn new(l: usize) -> Self {
        let mut planner = FftPlanner::new();
        FourierTable {
            l,
            fwd: planner.plan_fft_forward(l),
            inv: planner.plan_fft_inverse(l),
        }
    }

    pub fn len(&self) -> usize {
        self.l
    }

    /// Unnormalized forward DFT in place: out[k] = Σ_x in[x] e^{-2πikx/L}.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.fwd.process(buf);
    }

    /// Unnormalized inverse DFT in place: out[x] = Σ_k in[k] e^{+2πikx/L}.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inv.process(buf);
    }

    fn transform_cols(&self, m: &mut DMatrix<Complex64>, forward: bool) {
        let l = self.l;
        for c in 0..m.ncols() {
            let col = &mut m.as_mut_slice()[c * l..(c + 1) * l];
            if forward {
                self.fwd.process(col);
            } else {
                self.inv.process(col);
            }
        }
    }

    fn transform_rows(&self, m: &mut DMatrix<Complex64>, forward: bool) {
        let l = self.l;
        let mut scratch = vec![Complex64::ZERO; m.ncols()];
        for r in 0..l {
            for c in 0..m.ncols() {
                scratch[c] = m[(r, c)];
            }
            if forward {
                self.fwd.process(&mut scratch);
            } else {
                self.inv.process(&mut scratch);
            }
            for c in 0..m.ncols() {
                m[(r, c)] = scratch[c];
            }
        }
    }

    /// Momentum representation U Γ U†. The diagonal of the result holds the
    /// momentum occupations of Γ.
    pub fn to_momentum(&self, gamma: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut m = gamma.clone();
        self.transform_cols(&mut m, true);
        self.transform_rows(&mut m, false);
        m /= Complex64::new(self.l as f64, 0.0);
        m
    }

    /// Inverse of `to_momentum`: U† M U.
    pub fn from_momentum(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut g = m.clone();
        self.transform_cols(&mut g, false);
        self.transform_rows(&mut g, true);
        g /= Complex64::new(self.l as f64, 0.0);
        g
    }
}
