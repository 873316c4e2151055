//! Covariance matrices Γ_{x,y} = ⟨f†_x f_y⟩: construction, time evolution,
//! band/current decomposition, equilibrium averages, dephased steady states
//! and distance measures.
//!
//! All indices in this API are 0-based; file formats are 1-based (see `io`).

use crate::error::{Error, Result};
use crate::fourier::FourierTable;
use crate::model::HoppingModel;
use crate::propagator::Propagator;
use nalgebra::DMatrix;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct Covariance {
    m: DMatrix<Complex64>,
}

/// Fourier weights X^{(d)}_n of one band, indexed n = 1..L so that the
/// last entry is the conserved band average X^{(d)}_L.
#[derive(Debug, Clone)]
pub struct BandSpectrum {
    pub d: i64,
    pub weights: Vec<Complex64>,
}

impl BandSpectrum {
    /// X^{(d)}_n for n = 1..L.
    pub fn weight(&self, n: usize) -> Complex64 {
        self.weights[n - 1]
    }

    /// The conserved equilibrium value X^{(d)}_{n=L}.
    pub fn conserved(&self) -> Complex64 {
        *self.weights.last().unwrap()
    }
}

/// Band averages I_d = (1/L) Σ_x Γ_{x,x+d} and their Peierls angles.
#[derive(Debug, Clone)]
pub struct CurrentTable {
    pub i: Vec<Complex64>, // d = 0..=L/2
    pub eta: Vec<f64>,
}

impl CurrentTable {
    pub fn range(&self) -> usize {
        self.i.len() - 1
    }
}

/// Exponential-clustering fit |Γ_{x,x+z}| <= C e^{-z/ξ}.
#[derive(Debug, Clone, Copy)]
pub struct ClusteringFit {
    pub c_clust: f64,
    pub xi: f64,
    /// false when fewer than 3 bands carried usable weight
    pub reliable: bool,
}

fn fermi_dirac(arg: f64) -> f64 {
    if arg > 0.0 {
        let e = (-arg).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + arg.exp())
    }
}

impl Covariance {
    /// Wrap a matrix, checking shape and Hermiticity.
    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension {
                left: m.nrows(),
                right: m.ncols(),
                context: "covariance matrix must be square",
            });
        }
        let dev = hermiticity_deviation(&m);
        if dev > 1e-8 {
            return Err(Error::InvalidParameter(format!(
                "matrix is not Hermitian (max |Γ - Γ†| = {dev:.3e})"
            )));
        }
        Ok(Covariance { m })
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<Complex64>) -> Self {
        Covariance { m }
    }

    /// Diagonal covariance of a Fock state with the given occupation pattern.
    pub fn from_occupations(occ: &[bool]) -> Self {
        let l = occ.len();
        let mut m = DMatrix::zeros(l, l);
        for (x, &o) in occ.iter().enumerate() {
            if o {
                m[(x, x)] = Complex64::new(1.0, 0.0);
            }
        }
        Covariance { m }
    }

    /// Diagonal covariance with arbitrary fillings in [0, 1].
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let l = diag.len();
        let mut m = DMatrix::zeros(l, l);
        for (x, &v) in diag.iter().enumerate() {
            m[(x, x)] = Complex64::new(v, 0.0);
        }
        Covariance { m }
    }

    /// Grand-canonical covariance of H(h) for a real symmetric coupling
    /// matrix: Γ = [V f_FD(ω) V†]ᵀ with h = V ω Vᵀ.
    pub fn thermal(h: &DMatrix<f64>, beta: f64, mu: f64) -> Result<Self> {
        let hc = h.map(|v| Complex64::new(v, 0.0));
        Self::thermal_hermitian(&hc, beta, mu)
    }

    /// General Hermitian-h version. The transpose convention is pinned by the
    /// Fock-space oracle: Γ_{x,y} = Σ_k conj(V_{x,k}) n_k V_{y,k}.
    pub fn thermal_hermitian(h: &DMatrix<Complex64>, beta: f64, mu: f64) -> Result<Self> {
        if beta <= 0.0 {
            return Err(Error::InvalidParameter(format!("beta = {beta} must be > 0")));
        }
        if h.nrows() != h.ncols() {
            return Err(Error::Dimension {
                left: h.nrows(),
                right: h.ncols(),
                context: "coupling matrix must be square",
            });
        }
        let l = h.nrows();
        let eig = h.clone().symmetric_eigen();
        let mut m = DMatrix::<Complex64>::zeros(l, l);
        // scale eigenvector columns by n_k, then m = conj(V) diag(n) Vᵀ
        let mut scaled = eig.eigenvectors.clone();
        for k in 0..l {
            let n = fermi_dirac(beta * (eig.eigenvalues[k] - mu));
            for x in 0..l {
                scaled[(x, k)] *= n;
            }
        }
        let v_conj = eig.eigenvectors.map(|c| c.conj());
        m.gemm(
            Complex64::new(1.0, 0.0),
            &v_conj,
            &scaled.transpose(),
            Complex64::ZERO,
        );
        let mut cov = Covariance { m };
        cov.hermitize();
        Ok(cov)
    }

    /// Thermal covariance of a clean model via the Fourier diagonalization;
    /// O(L²) and exactly circulant.
    pub fn thermal_clean(model: &HoppingModel, beta: f64, mu: f64) -> Result<Self> {
        if beta <= 0.0 {
            return Err(Error::InvalidParameter(format!("beta = {beta} must be > 0")));
        }
        let l = model.l();
        let table = FourierTable::new(l);
        let mut kernel: Vec<Complex64> = model
            .omega_fft()
            .iter()
            .map(|&w| Complex64::new(fermi_dirac(beta * (w - mu)), 0.0))
            .collect();
        table.forward(&mut kernel);
        let m = DMatrix::from_fn(l, l, |x, y| kernel[(x + l - y) % l] / l as f64);
        let mut cov = Covariance { m };
        cov.hermitize();
        Ok(cov)
    }

    pub fn l(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn entry(&self, x: usize, y: usize) -> Complex64 {
        self.m[(x, y)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.l()).map(|x| self.m[(x, x)].re).sum()
    }

    fn hermitize(&mut self) {
        let adj = self.m.adjoint();
        self.m += adj;
        self.m *= Complex64::new(0.5, 0.0);
    }

    /// Γ(t) = G Γ G†. Circulant propagators use the Fourier route
    /// (O(L² log L)); dense ones a plain conjugation.
    pub fn evolve(&self, prop: &Propagator) -> Result<Self> {
        if prop.l() != self.l() {
            return Err(Error::Dimension {
                left: prop.l(),
                right: self.l(),
                context: "propagator vs covariance size",
            });
        }
        let mut out = match prop {
            Propagator::Circulant { l, phases, .. } => {
                let table = FourierTable::new(*l);
                let mut tilde = table.to_momentum(&self.m);
                for k in 0..*l {
                    for kp in 0..*l {
                        tilde[(k, kp)] *= phases[k] * phases[kp].conj();
                    }
                }
                Covariance {
                    m: table.from_momentum(&tilde),
                }
            }
            Propagator::Dense { matrix, .. } => Covariance {
                m: matrix * &self.m * matrix.adjoint(),
            },
        };
        out.hermitize();
        Ok(out)
    }

    /// Band z ↦ Γ_{z+d,z} (length L, indices mod L); |d| <= L/2.
    pub fn band(&self, d: i64) -> Vec<Complex64> {
        let l = self.l() as i64;
        assert!(d.abs() <= l / 2, "band offset {d} out of range for L = {l}");
        (0..l)
            .map(|z| self.m[((z + d).rem_euclid(l) as usize, z as usize)])
            .collect()
    }

    /// Discrete Fourier weights of a band: Γ_{z+d,z} = Σ_n X^{(d)}_n e^{2πinz/L}.
    pub fn band_spectrum(&self, d: i64) -> BandSpectrum {
        let l = self.l();
        let table = FourierTable::new(l);
        let mut buf = self.band(d);
        table.forward(&mut buf);
        let weights = (1..=l)
            .map(|n| buf[n % l] / l as f64)
            .collect();
        BandSpectrum { d, weights }
    }

    /// Real-space average Γ^(eq)_{x,y} = (1/L) Σ_z Γ_{x+z,y+z}: the circulant
    /// matrix whose bands are the conserved band averages.
    pub fn equilibrium(&self) -> Self {
        let l = self.l();
        let mut avg = vec![Complex64::ZERO; l];
        for delta in 0..l {
            let mut s = Complex64::ZERO;
            for z in 0..l {
                s += self.m[((z + delta) % l, z)];
            }
            avg[delta] = s / l as f64;
        }
        let m = DMatrix::from_fn(l, l, |x, y| avg[(x + l - y) % l]);
        let mut cov = Covariance { m };
        cov.hermitize();
        cov
    }

    /// Momentum representation U Γ U† whose diagonal holds n_k.
    pub fn to_momentum(&self) -> DMatrix<Complex64> {
        FourierTable::new(self.l()).to_momentum(&self.m)
    }

    /// Infinite-time average of the evolution generated by a clean model with
    /// eigenvalues `omega` (in the k = 1..L order of `HoppingModel::eigenvalues`):
    /// rotate to the Fourier eigenbasis, kill all entries between modes whose
    /// energies differ by more than `tol`, rotate back.
    pub fn dephase(&self, omega: &[f64], tol: f64) -> Result<Self> {
        let l = self.l();
        if omega.len() != l {
            return Err(Error::Dimension {
                left: omega.len(),
                right: l,
                context: "eigenvalue sequence vs covariance size",
            });
        }
        // mode order: omega_fft[m] = omega_{k=m} with k = L mapped to m = 0
        let omega_fft: Vec<f64> = (0..l).map(|m| omega[(m + l - 1) % l]).collect();
        let table = FourierTable::new(l);
        let mut tilde = table.to_momentum(&self.m);
        for k in 0..l {
            for kp in 0..l {
                if (omega_fft[k] - omega_fft[kp]).abs() > tol {
                    tilde[(k, kp)] = Complex64::ZERO;
                }
            }
        }
        let mut cov = Covariance {
            m: table.from_momentum(&tilde),
        };
        cov.hermitize();
        Ok(cov)
    }

    /// Conserved currents I_d = (1/L) Σ_x Γ_{x,x+d} for d = 0..L/2 and their
    /// Peierls angles η_d = arg I_d (zero where I_d vanishes).
    pub fn currents(&self) -> CurrentTable {
        let l = self.l();
        let mut i = Vec::with_capacity(l / 2 + 1);
        let mut eta = Vec::with_capacity(l / 2 + 1);
        for d in 0..=l / 2 {
            let mut s = Complex64::ZERO;
            for x in 0..l {
                s += self.m[(x, (x + d) % l)];
            }
            let v = s / l as f64;
            i.push(v);
            eta.push(if v.norm() < 1e-15 { 0.0 } else { v.arg() });
        }
        CurrentTable { i, eta }
    }

    /// Momentum occupation numbers n_k = (1/L) Σ_{x,y} e^{2πik(y-x)/L} Γ_{x,y}
    /// for k = 1..L, via band sums and one DFT.
    pub fn momentum_occupations(&self) -> Vec<f64> {
        let l = self.l();
        let table = FourierTable::new(l);
        // s_m = Σ_x Γ_{x,x+m}; n_k = (1/L) Σ_m s_m e^{+2πikm/L}
        let mut s = vec![Complex64::ZERO; l];
        for m in 0..l {
            let mut acc = Complex64::ZERO;
            for x in 0..l {
                acc += self.m[(x, (x + m) % l)];
            }
            s[m] = acc;
        }
        table.inverse(&mut s);
        (1..=l).map(|k| s[k % l].re / l as f64).collect()
    }

    /// Max-norm distance max_{x,y} |a_{x,y} - b_{x,y}|.
    pub fn max_norm_distance(&self, other: &Covariance) -> Result<f64> {
        if self.l() != other.l() {
            return Err(Error::Dimension {
                left: self.l(),
                right: other.l(),
                context: "covariance sizes in max_norm_distance",
            });
        }
        Ok((&self.m - &other.m).map(|c| c.norm()).max())
    }

    /// Least-squares fit of log max_x |Γ_{x,x+z}| against z, over bands whose
    /// sup exceeds 1e-12. The returned constant is inflated to the smallest
    /// value making C e^{-z/ξ} a valid envelope for every band at t = 0.
    pub fn clustering_fit(&self) -> ClusteringFit {
        let l = self.l();
        let sups: Vec<f64> = (0..=l / 2)
            .map(|d| {
                (0..l)
                    .map(|x| self.m[(x, (x + d) % l)].norm())
                    .fold(0.0f64, f64::max)
            })
            .collect();
        let usable: Vec<(f64, f64)> = sups
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > 1e-12)
            .map(|(z, &s)| (z as f64, s.ln()))
            .collect();
        if usable.len() < 3 {
            return ClusteringFit {
                c_clust: sups[0].max(1e-300),
                xi: 0.0,
                reliable: false,
            };
        }
        let n = usable.len() as f64;
        let sx: f64 = usable.iter().map(|(z, _)| z).sum();
        let sy: f64 = usable.iter().map(|(_, y)| y).sum();
        let sxx: f64 = usable.iter().map(|(z, _)| z * z).sum();
        let sxy: f64 = usable.iter().map(|(z, y)| z * y).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let xi = if slope >= 0.0 { f64::INFINITY } else { -1.0 / slope };
        // envelope inflation: C >= m_z e^{z/ξ} for every usable band
        let c_env = usable
            .iter()
            .map(|(z, y)| {
                if xi.is_finite() {
                    (y + z / xi).exp()
                } else {
                    y.exp()
                }
            })
            .fold(0.0f64, f64::max);
        ClusteringFit {
            c_clust: c_env,
            xi,
            reliable: true,
        }
    }

    /// Hermiticity plus spectrum in [-tol, 1 + tol]; O(L³).
    pub fn validate_admissible(&self, tol: f64) -> Result<()> {
        let dev = hermiticity_deviation(&self.m);
        if dev > tol {
            return Err(Error::InvalidParameter(format!(
                "covariance not Hermitian within {tol:.1e} (deviation {dev:.3e})"
            )));
        }
        let eig = self.m.clone().symmetric_eigen();
        for v in eig.eigenvalues.iter() {
            if *v < -tol || *v > 1.0 + tol {
                return Err(Error::InvalidParameter(format!(
                    "covariance eigenvalue {v} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

fn hermiticity_deviation(m: &DMatrix<Complex64>) -> f64 {
    let mut dev = 0.0f64;
    for x in 0..m.nrows() {
        for y in x..m.ncols() {
            dev = dev.max((m[(x, y)] - m[(y, x)].conj()).norm());
        }
    }
    dev
}

/// Repeated clean evolution of one initial covariance: the momentum
/// representation is computed once, every time step is then a phase
/// multiplication plus one back transform.
pub struct CleanEvolution {
    table: FourierTable,
    tilde: DMatrix<Complex64>,
    omega_fft: Vec<f64>,
}

impl CleanEvolution {
    pub fn new(gamma: &Covariance, model: &HoppingModel) -> Result<Self> {
        if gamma.l() != model.l() {
            return Err(Error::Dimension {
                left: gamma.l(),
                right: model.l(),
                context: "covariance vs model size",
            });
        }
        let table = FourierTable::new(model.l());
        let tilde = table.to_momentum(gamma.matrix());
        Ok(CleanEvolution {
            table,
            tilde,
            omega_fft: model.omega_fft(),
        })
    }

    pub fn at(&self, t: f64) -> Covariance {
        let l = self.omega_fft.len();
        let phases: Vec<Complex64> = self
            .omega_fft
            .iter()
            .map(|&w| Complex64::from_polar(1.0, w * t))
            .collect();
        let mut m = self.tilde.clone();
        for k in 0..l {
            for kp in 0..l {
                m[(k, kp)] *= phases[k] * phases[kp].conj();
            }
        }
        let mut cov = Covariance::from_matrix_unchecked(self.table.from_momentum(&m));
        cov.hermitize();
        cov
    }

    /// Infinite-time average in this eigenbasis.
    pub fn dephased(&self, tol: f64) -> Covariance {
        let l = self.omega_fft.len();
        let mut m = self.tilde.clone();
        for k in 0..l {
            for kp in 0..l {
                if (self.omega_fft[k] - self.omega_fft[kp]).abs() > tol {
                    m[(k, kp)] = Complex64::ZERO;
                }
            }
        }
        let mut cov = Covariance::from_matrix_unchecked(self.table.from_momentum(&m));
        cov.hermitize();
        cov
    }
}
