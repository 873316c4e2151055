//! Brute-force many-body reference at tiny sizes.
//!
//! Fermionic operators act on the 2^L occupation basis through Jordan-Wigner
//! sign strings (bit x of the basis index = occupation of site x, signs from
//! the parity of lower bits). Everything here is slow and dense on purpose:
//! it is the ground truth that pins the propagator, thermal-covariance and
//! Wick-contraction conventions used by the fast code paths.

use crate::covariance::Covariance;
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

const MAX_VECTOR_SITES: usize = 16;
const MAX_DENSE_SITES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    MixedCommuting,
}

#[derive(Debug, Clone, Copy)]
pub struct FockSpace {
    l: usize,
}

impl FockSpace {
    pub fn new(l: usize) -> Result<Self> {
        if l == 0 || l > MAX_VECTOR_SITES {
            return Err(Error::InvalidParameter(format!(
                "Fock space supports 1..={MAX_VECTOR_SITES} sites, got {l}"
            )));
        }
        let space = FockSpace { l };
        if l <= 8 {
            space.verify_anticommutation()?;
        }
        Ok(space)
    }

    pub fn sites(&self) -> usize {
        self.l
    }

    pub fn dim(&self) -> usize {
        1 << self.l
    }

    fn jw_sign(&self, mask: usize, x: usize) -> f64 {
        if (mask & ((1 << x) - 1)).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// f_x acting on a basis state: Some((sign, new_mask)) or None.
    fn annihilate_basis(&self, mask: usize, x: usize) -> Option<(f64, usize)> {
        if mask & (1 << x) == 0 {
            None
        } else {
            Some((self.jw_sign(mask, x), mask & !(1 << x)))
        }
    }

    /// f†_x acting on a basis state.
    fn create_basis(&self, mask: usize, x: usize) -> Option<(f64, usize)> {
        if mask & (1 << x) != 0 {
            None
        } else {
            Some((self.jw_sign(mask, x), mask | (1 << x)))
        }
    }

    pub fn apply_annihilate(&self, x: usize, amp: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::ZERO; self.dim()];
        for (mask, &a) in amp.iter().enumerate() {
            if a == Complex64::ZERO {
                continue;
            }
            if let Some((s, m)) = self.annihilate_basis(mask, x) {
                out[m] += s * a;
            }
        }
        out
    }

    pub fn apply_create(&self, x: usize, amp: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::ZERO; self.dim()];
        for (mask, &a) in amp.iter().enumerate() {
            if a == Complex64::ZERO {
                continue;
            }
            if let Some((s, m)) = self.create_basis(mask, x) {
                out[m] += s * a;
            }
        }
        out
    }

    /// Σ_{x,y} h_{x,y} f†_x f_y applied to an amplitude vector.
    pub fn apply_quadratic(&self, h: &DMatrix<Complex64>, amp: &[Complex64]) -> Vec<Complex64> {
        let l = self.l;
        let mut out = vec![Complex64::ZERO; self.dim()];
        for (mask, &a) in amp.iter().enumerate() {
            if a == Complex64::ZERO {
                continue;
            }
            for y in 0..l {
                let Some((s1, m1)) = self.annihilate_basis(mask, y) else {
                    continue;
                };
                for x in 0..l {
                    if h[(x, y)] == Complex64::ZERO {
                        continue;
                    }
                    if let Some((s2, m2)) = self.create_basis(m1, x) {
                        out[m2] += h[(x, y)] * (s1 * s2) * a;
                    }
                }
            }
        }
        out
    }

    fn verify_anticommutation(&self) -> Result<()> {
        let dim = self.dim();
        for x in 0..self.l {
            for y in 0..self.l {
                for mask in 0..dim {
                    // {f_x, f†_y} |mask⟩ must equal δ_{x,y} |mask⟩
                    let mut acc = std::collections::HashMap::new();
                    if let Some((s1, m1)) = self.create_basis(mask, y) {
                        if let Some((s2, m2)) = self.annihilate_basis(m1, x) {
                            *acc.entry(m2).or_insert(0.0) += s1 * s2;
                        }
                    }
                    if let Some((s1, m1)) = self.annihilate_basis(mask, x) {
                        if let Some((s2, m2)) = self.create_basis(m1, y) {
                            *acc.entry(m2).or_insert(0.0) += s1 * s2;
                        }
                    }
                    for (m, v) in acc {
                        let expect = if x == y && m == mask { 1.0 } else { 0.0 };
                        if (v - expect).abs() > 1e-12 {
                            return Err(Error::InvalidParameter(format!(
                                "anticommutation violated at x={x}, y={y}, basis {mask}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum ManyBodyState {
    Vector { l: usize, amp: Vec<Complex64> },
    Density { l: usize, rho: DMatrix<Complex64> },
}

impl ManyBodyState {
    pub fn sites(&self) -> usize {
        match self {
            ManyBodyState::Vector { l, .. } | ManyBodyState::Density { l, .. } => *l,
        }
    }

    pub fn fock(l: usize, occ: &[bool]) -> Result<Self> {
        if occ.len() != l {
            return Err(Error::Dimension {
                left: occ.len(),
                right: l,
                context: "occupation pattern vs site count",
            });
        }
        let mut mask = 0usize;
        for (x, &o) in occ.iter().enumerate() {
            if o {
                mask |= 1 << x;
            }
        }
        let mut amp = vec![Complex64::ZERO; 1 << l];
        amp[mask] = Complex64::new(1.0, 0.0);
        Ok(ManyBodyState::Vector { l, amp })
    }

    /// (|1100…⟩ + |0011…⟩)/√2: a two-particle non-Gaussian superposition used
    /// as the seed state for the Gaussification demonstration.
    pub fn paired_superposition(l: usize) -> Result<Self> {
        if l < 4 {
            return Err(Error::InvalidParameter("paired state needs at least 4 sites".into()));
        }
        let mut amp = vec![Complex64::ZERO; 1 << l];
        let inv = Complex64::new(1.0 / 2.0f64.sqrt(), 0.0);
        amp[0b0011] = inv; // sites 1, 2 occupied
        amp[0b1100] = inv; // sites 3, 4 occupied
        Ok(ManyBodyState::Vector { l, amp })
    }

    pub fn norm(&self) -> f64 {
        match self {
            ManyBodyState::Vector { amp, .. } => amp.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt(),
            ManyBodyState::Density { rho, .. } => (0..rho.nrows()).map(|i| rho[(i, i)].re).sum(),
        }
    }

    /// Parity classification; states that fail to commute with (-1)^N within
    /// 1e-10 are rejected.
    pub fn parity(&self) -> Result<Parity> {
        match self {
            ManyBodyState::Vector { amp, .. } => {
                let mut w_even = 0.0;
                let mut w_odd = 0.0;
                for (mask, a) in amp.iter().enumerate() {
                    if mask.count_ones() % 2 == 0 {
                        w_even += a.norm_sqr();
                    } else {
                        w_odd += a.norm_sqr();
                    }
                }
                if w_odd < 1e-10 {
                    Ok(Parity::Even)
                } else if w_even < 1e-10 {
                    Ok(Parity::Odd)
                } else {
                    Err(Error::InvalidParameter(
                        "pure state superposes even and odd particle parity".into(),
                    ))
                }
            }
            ManyBodyState::Density { rho, .. } => {
                let mut off = 0.0f64;
                let mut w_even = 0.0;
                let mut w_odd = 0.0;
                for i in 0..rho.nrows() {
                    for j in 0..rho.ncols() {
                        if (i.count_ones() % 2) != (j.count_ones() % 2) {
                            off = off.max(rho[(i, j)].norm());
                        }
                    }
                    if i.count_ones() % 2 == 0 {
                        w_even += rho[(i, i)].re;
                    } else {
                        w_odd += rho[(i, i)].re;
                    }
                }
                if off > 1e-10 {
                    return Err(Error::InvalidParameter(format!(
                        "density matrix breaks parity superselection (off-block {off:.2e})"
                    )));
                }
                if w_odd < 1e-10 {
                    Ok(Parity::Even)
                } else if w_even < 1e-10 {
                    Ok(Parity::Odd)
                } else {
                    Ok(Parity::MixedCommuting)
                }
            }
        }
    }
}

/// Dense many-body Hamiltonian Σ h_{x,y} f†_x f_y on the full Fock space.
pub fn build_hamiltonian(space: &FockSpace, h: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let l = space.sites();
    if l > MAX_DENSE_SITES {
        return Err(Error::InvalidParameter(format!(
            "dense many-body matrices are limited to {MAX_DENSE_SITES} sites, got {l}"
        )));
    }
    if h.nrows() != l || h.ncols() != l {
        return Err(Error::Dimension {
            left: h.nrows(),
            right: l,
            context: "coupling matrix vs site count",
        });
    }
    let dim = space.dim();
    let mut hmb = DMatrix::<Complex64>::zeros(dim, dim);
    let mut basis = vec![Complex64::ZERO; dim];
    for col in 0..dim {
        basis[col] = Complex64::new(1.0, 0.0);
        let out = space.apply_quadratic(h, &basis);
        for (row, v) in out.iter().enumerate() {
            hmb[(row, col)] = *v;
        }
        basis[col] = Complex64::ZERO;
    }
    Ok(hmb)
}

/// Total number operator as a diagonal matrix.
pub fn number_operator(space: &FockSpace) -> DMatrix<Complex64> {
    let dim = space.dim();
    DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            Complex64::new(i.count_ones() as f64, 0.0)
        } else {
            Complex64::ZERO
        }
    })
}

/// e^{-iHt}|ψ⟩ or e^{-iHt} ρ e^{iHt} via dense eigendecomposition of H.
pub fn evolve_state(state: &ManyBodyState, hmb: &DMatrix<Complex64>, t: f64) -> Result<ManyBodyState> {
    let dim = hmb.nrows();
    match state {
        ManyBodyState::Vector { l, amp } => {
            if amp.len() != dim {
                return Err(Error::Dimension {
                    left: amp.len(),
                    right: dim,
                    context: "state vs Hamiltonian dimension",
                });
            }
            let eig = hmb.clone().symmetric_eigen();
            let psi = nalgebra::DVector::from_column_slice(amp);
            let mut coeff = eig.eigenvectors.adjoint() * psi;
            for (k, c) in coeff.iter_mut().enumerate() {
                *c *= Complex64::from_polar(1.0, -eig.eigenvalues[k] * t);
            }
            let out = &eig.eigenvectors * coeff;
            Ok(ManyBodyState::Vector {
                l: *l,
                amp: out.iter().cloned().collect(),
            })
        }
        ManyBodyState::Density { l, rho } => {
            if rho.nrows() != dim {
                return Err(Error::Dimension {
                    left: rho.nrows(),
                    right: dim,
                    context: "density matrix vs Hamiltonian dimension",
                });
            }
            let eig = hmb.clone().symmetric_eigen();
            let mut u = eig.eigenvectors.clone();
            for k in 0..dim {
                let ph = Complex64::from_polar(1.0, -eig.eigenvalues[k] * t);
                for r in 0..dim {
                    u[(r, k)] *= ph;
                }
            }
            let u = u * eig.eigenvectors.adjoint();
            Ok(ManyBodyState::Density {
                l: *l,
                rho: &u * rho * u.adjoint(),
            })
        }
    }
}

/// Sector-resolved evolution under a quadratic Hamiltonian given its L×L
/// coupling matrix; avoids dense 2^L matrices by using number conservation.
pub fn evolve_quadratic(
    state: &ManyBodyState,
    space: &FockSpace,
    h: &DMatrix<Complex64>,
    t: f64,
) -> Result<ManyBodyState> {
    let ManyBodyState::Vector { l, amp } = state else {
        return Err(Error::InvalidParameter(
            "sector evolution is implemented for state vectors".into(),
        ));
    };
    let mut out = vec![Complex64::ZERO; amp.len()];
    for n in 0..=*l {
        let basis: Vec<usize> = (0..space.dim())
            .filter(|m| m.count_ones() as usize == n)
            .collect();
        let weight: f64 = basis.iter().map(|&m| amp[m].norm_sqr()).sum();
        if weight < 1e-300 {
            continue;
        }
        let index: std::collections::HashMap<usize, usize> =
            basis.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        let dim = basis.len();
        let mut h_sector = DMatrix::<Complex64>::zeros(dim, dim);
        let mut unit = vec![Complex64::ZERO; space.dim()];
        for (col, &m) in basis.iter().enumerate() {
            unit[m] = Complex64::new(1.0, 0.0);
            let image = space.apply_quadratic(h, &unit);
            unit[m] = Complex64::ZERO;
            for (&m2, &row) in index.iter() {
                h_sector[(row, col)] = image[m2];
            }
        }
        let eig = h_sector.symmetric_eigen();
        let psi = nalgebra::DVector::from_iterator(dim, basis.iter().map(|&m| amp[m]));
        let mut coeff = eig.eigenvectors.adjoint() * psi;
        for (k, c) in coeff.iter_mut().enumerate() {
            *c *= Complex64::from_polar(1.0, -eig.eigenvalues[k] * t);
        }
        let evolved = &eig.eigenvectors * coeff;
        for (i, &m) in basis.iter().enumerate() {
            out[m] = evolved[i];
        }
    }
    Ok(ManyBodyState::Vector { l: *l, amp: out })
}

/// Grand-canonical density matrix e^{-β(H-μN)}/Z, overflow-guarded by a
/// spectral shift before exponentiation.
pub fn gibbs_state(
    space: &FockSpace,
    hmb: &DMatrix<Complex64>,
    beta: f64,
    mu: f64,
) -> Result<ManyBodyState> {
    if beta <= 0.0 {
        return Err(Error::InvalidParameter(format!("beta = {beta} must be > 0")));
    }
    let dim = hmb.nrows();
    let a = hmb - number_operator(space) * Complex64::new(mu, 0.0);
    let eig = a.symmetric_eigen();
    let w_min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&w| (-beta * (w - w_min)).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    let mut scaled = eig.eigenvectors.clone();
    for k in 0..dim {
        let p = weights[k] / z;
        for r in 0..dim {
            scaled[(r, k)] *= p;
        }
    }
    let rho = scaled * eig.eigenvectors.adjoint();
    Ok(ManyBodyState::Density {
        l: space.sites(),
        rho,
    })
}

/// Γ_{x,y} = ⟨f†_x f_y⟩ of an arbitrary many-body state.
pub fn covariance_of(space: &FockSpace, state: &ManyBodyState) -> Result<Covariance> {
    let l = space.sites();
    match state {
        ManyBodyState::Vector { amp, .. } => {
            let lowered: Vec<Vec<Complex64>> =
                (0..l).map(|x| space.apply_annihilate(x, amp)).collect();
            let mut m = DMatrix::<Complex64>::zeros(l, l);
            for x in 0..l {
                for y in 0..l {
                    let mut s = Complex64::ZERO;
                    for i in 0..amp.len() {
                        s += lowered[x][i].conj() * lowered[y][i];
                    }
                    m[(x, y)] = s;
                }
            }
            Covariance::from_matrix(m)
        }
        ManyBodyState::Density { rho, .. } => {
            let mut m = DMatrix::<Complex64>::zeros(l, l);
            for x in 0..l {
                for y in 0..l {
                    // tr[ρ f†_x f_y] with the unique-image structure of f†_x f_y
                    let mut s = Complex64::ZERO;
                    for mask in 0..rho.nrows() {
                        let Some((s1, m1)) = space.annihilate_basis(mask, y) else {
                            continue;
                        };
                        let Some((s2, m2)) = space.create_basis(m1, x) else {
                            continue;
                        };
                        s += (s1 * s2) * rho[(mask, m2)];
                    }
                    m[(x, y)] = s;
                }
            }
            Covariance::from_matrix(m)
        }
    }
}

/// ⟨f†_{x1} f†_{x2} f_{x3} f_{x4}⟩.
pub fn quartic_expectation(
    space: &FockSpace,
    state: &ManyBodyState,
    q: [usize; 4],
) -> Result<Complex64> {
    let [x1, x2, x3, x4] = q;
    match state {
        ManyBodyState::Vector { amp, .. } => {
            // ⟨ψ| f†_1 f†_2 f_3 f_4 |ψ⟩ = ⟨ f_2 f_1 ψ , f_3 f_4 ψ ⟩
            let left = space.apply_annihilate(x2, &space.apply_annihilate(x1, amp));
            let right = space.apply_annihilate(x3, &space.apply_annihilate(x4, amp));
            let mut s = Complex64::ZERO;
            for i in 0..amp.len() {
                s += left[i].conj() * right[i];
            }
            Ok(s)
        }
        ManyBodyState::Density { rho, .. } => {
            // tr[A ρ] with A = f†_1 f†_2 f_3 f_4 mapping each basis state to
            // at most one other
            let mut s = Complex64::ZERO;
            for mask in 0..rho.nrows() {
                let Some((s4, m4)) = space.annihilate_basis(mask, x4) else {
                    continue;
                };
                let Some((s3, m3)) = space.annihilate_basis(m4, x3) else {
                    continue;
                };
                let Some((s2, m2)) = space.create_basis(m3, x2) else {
                    continue;
                };
                let Some((s1, m1)) = space.create_basis(m2, x1) else {
                    continue;
                };
                s += (s1 * s2 * s3 * s4) * rho[(mask, m1)];
            }
            Ok(s)
        }
    }
}

/// Max over the given quartets of |⟨f†f†ff⟩ - Wick(Γ)| with the
/// number-conserving contraction Γ_{x1,x4}Γ_{x2,x3} - Γ_{x1,x3}Γ_{x2,x4}.
pub fn wick_deviation(
    space: &FockSpace,
    state: &ManyBodyState,
    quartets: &[[usize; 4]],
) -> Result<f64> {
    let gamma = covariance_of(space, state)?;
    let mut worst = 0.0f64;
    for &q in quartets {
        let actual = quartic_expectation(space, state, q)?;
        let [x1, x2, x3, x4] = q;
        let wick = gamma.entry(x1, x4) * gamma.entry(x2, x3)
            - gamma.entry(x1, x3) * gamma.entry(x2, x4);
        worst = worst.max((actual - wick).norm());
    }
    Ok(worst)
}

/// Quartets probing 4-site windows around every site: density-density pairs
/// and the pair-hopping combinations that detect the non-Gaussian seed.
pub fn local_quartets(l: usize) -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for x in 0..l {
        let (a, b, c, d) = (x, (x + 1) % l, (x + 2) % l, (x + 3) % l);
        out.push([a, b, b, a]); // ⟨n_x n_{x+1}⟩
        out.push([a, b, c, d]); // pair moves across the window
        out.push([a, c, c, a]);
        out.push([a, d, b, c]);
    }
    out
}
