//! The convention-lock suite: one check per sign/ordering convention that
//! the fast code paths share with the Fock-space oracle. Each check fails
//! loudly if its convention flips.

use anyhow::{anyhow, Result};
use num_complex::Complex64;
use qlab::covariance::Covariance;
use qlab::model::HoppingModel;
use qlab::oracle::{
    build_hamiltonian, covariance_of, evolve_state, gibbs_state, local_quartets, wick_deviation,
    FockSpace, ManyBodyState,
};
use qlab::propagator::propagate;

pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub fn run_all() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    out.push(propagator_convention()?);
    out.push(thermal_transpose_convention()?);
    out.push(current_sign_convention()?);
    out.push(wick_closure()?);
    Ok(out)
}

fn propagator_convention() -> Result<CheckResult> {
    let l = 6;
    let model = HoppingModel::new(l, vec![0.0, 1.0, 0.3]).map_err(|e| anyhow!("{e}"))?;
    let space = FockSpace::new(l).map_err(|e| anyhow!("{e}"))?;
    let h = model.coupling_matrix().map(|v| Complex64::new(v, 0.0));
    let hmb = build_hamiltonian(&space, &h).map_err(|e| anyhow!("{e}"))?;
    let t = 1.3;
    let g = propagate(&model, t);
    let mut worst = 0.0f64;
    for x in 0..l {
        let mut occ = vec![false; l];
        occ[x] = true;
        let psi = ManyBodyState::fock(l, &occ).map_err(|e| anyhow!("{e}"))?;
        let evolved = evolve_state(&psi, &hmb, t).map_err(|e| anyhow!("{e}"))?;
        let ManyBodyState::Vector { amp, .. } = evolved else {
            unreachable!()
        };
        for y in 0..l {
            worst = worst.max((amp[1 << y] - g.entry(x, y).conj()).norm());
        }
    }
    Ok(CheckResult {
        name: "propagator sign convention (G* = e^{-ith})",
        passed: worst < 1e-10,
        detail: format!("max deviation {worst:.3e}"),
    })
}

fn thermal_transpose_convention() -> Result<CheckResult> {
    let space = FockSpace::new(2).map_err(|e| anyhow!("{e}"))?;
    let mut h = nalgebra::DMatrix::<Complex64>::zeros(2, 2);
    h[(0, 1)] = Complex64::new(0.8, 0.5);
    h[(1, 0)] = Complex64::new(0.8, -0.5);
    h[(1, 1)] = Complex64::new(0.1, 0.0);
    let hmb = build_hamiltonian(&space, &h).map_err(|e| anyhow!("{e}"))?;
    let rho = gibbs_state(&space, &hmb, 1.0, 0.2).map_err(|e| anyhow!("{e}"))?;
    let slow = covariance_of(&space, &rho).map_err(|e| anyhow!("{e}"))?;
    let fast = Covariance::thermal_hermitian(&h, 1.0, 0.2).map_err(|e| anyhow!("{e}"))?;
    let dev = slow.max_norm_distance(&fast).map_err(|e| anyhow!("{e}"))?;
    Ok(CheckResult {
        name: "thermal covariance transpose convention",
        passed: dev < 1e-10,
        detail: format!("max deviation {dev:.3e}"),
    })
}

fn current_sign_convention() -> Result<CheckResult> {
    let l = 4;
    let model = HoppingModel::nearest_neighbour(l, 1.0).map_err(|e| anyhow!("{e}"))?;
    let space = FockSpace::new(l).map_err(|e| anyhow!("{e}"))?;
    let h = model.coupling_matrix().map(|v| Complex64::new(v, 0.0));
    let hmb = build_hamiltonian(&space, &h).map_err(|e| anyhow!("{e}"))?;
    let rho = gibbs_state(&space, &hmb, 1.0, 0.0).map_err(|e| anyhow!("{e}"))?;
    let oracle_gamma = covariance_of(&space, &rho).map_err(|e| anyhow!("{e}"))?;
    let fast = Covariance::thermal(&model.coupling_matrix(), 1.0, 0.0).map_err(|e| anyhow!("{e}"))?;
    let dev = oracle_gamma.max_norm_distance(&fast).map_err(|e| anyhow!("{e}"))?;
    let i1 = fast.currents().i[1].re;
    let passed = dev < 1e-10 && i1 < 0.0;
    Ok(CheckResult {
        name: "current sign (negative bond order of the Fermi sea)",
        passed,
        detail: format!("entrywise deviation {dev:.3e}, I_1 = {i1:.6}"),
    })
}

fn wick_closure() -> Result<CheckResult> {
    let space = FockSpace::new(4).map_err(|e| anyhow!("{e}"))?;
    let model = HoppingModel::nearest_neighbour(4, 1.0).map_err(|e| anyhow!("{e}"))?;
    let h = model.coupling_matrix().map(|v| Complex64::new(v, 0.0));
    let hmb = build_hamiltonian(&space, &h).map_err(|e| anyhow!("{e}"))?;
    let rho = gibbs_state(&space, &hmb, 0.7, 0.1).map_err(|e| anyhow!("{e}"))?;
    let quartets = local_quartets(4);
    let gaussian_dev = wick_deviation(&space, &rho, &quartets).map_err(|e| anyhow!("{e}"))?;
    let paired = ManyBodyState::paired_superposition(4).map_err(|e| anyhow!("{e}"))?;
    let paired_dev = wick_deviation(&space, &paired, &quartets).map_err(|e| anyhow!("{e}"))?;
    let passed = gaussian_dev < 1e-10 && paired_dev > 0.2;
    Ok(CheckResult {
        name: "Wick contraction ordering",
        passed,
        detail: format!(
            "Gaussian closure {gaussian_dev:.3e}, paired-state deviation {paired_dev:.3}"
        ),
    })
}
