//! Rigorous dephasing certificates for the exponential sums driving
//! equilibration: stationary structure of phase functions, the constants
//! (C_#, γ, t0, t_R), propagator and band-mode bounds, the resilience
//! classifier and the assembled second-moment equilibration bound.
//!
//! A certificate asserts (1/L)|Σ_k e^{iΦ_t(2πk/L)}| <= C_# t^{-γ} for all
//! t in [t0, t_R]. Empty windows (t0 >= t_R) are reported, never patched.

mod kusmin;
mod phase;

pub use kusmin::kusmin_landau_bound;
pub use phase::{trig_roots, Harmonic, PhaseFunction};

use crate::covariance::Covariance;
use crate::error::{Error, Result};
use crate::model::HoppingModel;
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Relative tolerance deciding when a derivative value counts as zero:
/// |Φ^{(m)}(r)| <= DEGENERACY_REL * C^{(m)}_max.
const DEGENERACY_REL: f64 = 1e-8;

fn factorial(k: u32) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub p: f64,
    pub kappa: u32,
    /// |Φ^{(κ+a)}(r)| with a = 1 for stationary points, a = 2 for curvature roots
    pub derivative: f64,
}

#[derive(Debug, Clone)]
pub struct StationaryStructure {
    /// roots of Φ_t' (vanishing group velocity)
    pub s1: Vec<Root>,
    /// roots of Φ_t'' (vanishing band curvature)
    pub s2: Vec<Root>,
    pub kappa0: u32,
    /// minimal scaled derivative value 4·C1 controlling the generic constant
    pub m_value: f64,
    /// no point with Φ'' = Φ''' = 0
    pub generic: bool,
}

/// Raw stationary structure of a phase function at its own time, with κ_r
/// classified by the first derivative order exceeding the relative tolerance.
pub fn stationary_structure(phi: &PhaseFunction, tol: f64) -> Result<StationaryStructure> {
    if phi.is_flat() {
        return Err(Error::FlatPhase(format!("drift = {}", phi.drift())));
    }
    let r_max = 2 * phi.range() as u32;
    let classify = |p: f64, offset: u32| -> Result<Root> {
        for kappa in 1..=r_max {
            let m = kappa + offset;
            let val = phi.derivative_base(m, p).abs();
            if val > tol * phi.c_kappa_max(m).max(1e-300) {
                return Ok(Root {
                    p,
                    kappa,
                    derivative: val,
                });
            }
        }
        Err(Error::DegenerateStructure {
            p,
            max_order: r_max + offset,
        })
    };
    let s1 = phi
        .roots_of_derivative(1)?
        .into_iter()
        .map(|p| classify(p, 1))
        .collect::<Result<Vec<_>>>()?;
    let s2 = phi
        .roots_of_derivative(2)?
        .into_iter()
        .map(|p| classify(p, 2))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_structure(phi, s1, s2))
}

fn assemble_structure(phi: &PhaseFunction, s1: Vec<Root>, s2: Vec<Root>) -> StationaryStructure {
    let kappa0 = s1
        .iter()
        .chain(s2.iter())
        .map(|r| r.kappa)
        .max()
        .unwrap_or(1);
    let generic = s2.iter().all(|r| r.kappa == 1);
    let c0 = s2
        .iter()
        .map(|r| r.derivative / (2.0 * phi.c_kappa_max(3) * factorial(r.kappa)))
        .fold(f64::INFINITY, f64::min);
    let m_s1 = s1
        .iter()
        .map(|r| r.derivative / factorial(r.kappa))
        .fold(f64::INFINITY, f64::min);
    let m_s2 = s2
        .iter()
        .map(|r| (r.derivative / factorial(r.kappa)) * c0)
        .fold(f64::INFINITY, f64::min);
    let m_value = m_s1.min(m_s2);
    StationaryStructure {
        s1,
        s2,
        kappa0,
        m_value,
        generic,
    }
}

#[derive(Debug, Clone)]
pub struct DephasingCertificate {
    pub c_sharp: f64,
    pub gamma: f64,
    pub t0: f64,
    pub t_r: f64,
    /// max κ_r over roots after the stationary-point expansions are chosen
    pub kappa0: u32,
    pub m_value: f64,
    pub c0: f64,
    pub c1: f64,
    pub generic: bool,
    /// structure at the time realizing the worst constant
    pub structure: StationaryStructure,
}

impl DephasingCertificate {
    pub fn window(&self) -> Option<(f64, f64)> {
        if self.t0 < self.t_r {
            Some((self.t0, self.t_r))
        } else {
            None
        }
    }

    /// C_# t^{-γ}, defined only inside the window (edges taken with a
    /// relative 1e-12 slack so sampling exactly at t_R stays legal).
    pub fn bound_at(&self, t: f64) -> Result<f64> {
        match self.window() {
            None => Err(Error::EmptyWindow {
                t0: self.t0,
                t_r: self.t_r,
            }),
            Some((t0, tr)) if t < t0 * (1.0 - 1e-12) || t > tr * (1.0 + 1e-12) => {
                Err(Error::OutsideWindow { t, t0, t_r: tr })
            }
            _ => Ok(self.c_sharp * t.powf(-self.gamma)),
        }
    }
}

struct PointConstants {
    t: f64,
    /// smallest time from which every expansion at this structure is valid
    t_req: f64,
    c_sharp: f64,
    c0: f64,
    c1: f64,
    kappa0: u32,
    m_value: f64,
    generic: bool,
    structure: StationaryStructure,
}

/// Per-time constants. Stationary points are expanded at the lowest order κ
/// whose Taylor-validity threshold |C^{(κ+a+1)}_max/((κ+1)Φ^{(κ+a)}(r))|^{3κ}
/// is smallest; near a wavefront (Φ'' ≈ 0 at a stationary point) this moves
/// the expansion to the third derivative exactly as in the generic-case
/// argument, keeping the constants finite.
fn constants_at(phi: &PhaseFunction) -> Result<PointConstants> {
    let r_range = phi.range() as u32;
    let tol = DEGENERACY_REL;
    let c3 = phi.c_kappa_max(3);

    // stationary points: the expansion order is the lowest κ whose Taylor
    // validity threshold is already met at this time; when none is met yet
    // (early times, just-born wavefront pairs) the branch with the smallest
    // threshold sets the requirement
    let mut s1 = Vec::new();
    let mut s1_req = Vec::new();
    for p in phi.roots_of_derivative(1)? {
        let mut branches: Vec<(u32, f64, f64)> = Vec::new(); // (κ, derivative, threshold)
        for kappa in 1..=(2 * r_range) {
            let val = phi.derivative_base(kappa + 1, p).abs();
            if val <= tol * phi.c_kappa_max(kappa + 1).max(1e-300) {
                continue;
            }
            let thresh = (phi.c_kappa_max(kappa + 2) / ((kappa as f64 + 1.0) * val))
                .abs()
                .powf(3.0 * kappa as f64);
            branches.push((kappa, val, thresh));
        }
        let chosen = branches
            .iter()
            .find(|(_, _, thresh)| *thresh <= phi.time())
            .or_else(|| {
                branches
                    .iter()
                    .min_by(|a, b| a.2.total_cmp(&b.2))
            })
            .copied()
            .ok_or(Error::DegenerateStructure {
                p,
                max_order: 2 * r_range + 1,
            })?;
        let (kappa, derivative, thresh) = chosen;
        s1.push(Root {
            p,
            kappa,
            derivative,
        });
        s1_req.push(thresh);
    }

    // curvature roots: lowest non-vanishing order, validity from the
    // Φ^{(κ+3)}/Φ^{(κ+2)} ratio
    let mut s2 = Vec::new();
    let mut s2_req = Vec::new();
    for p in phi.roots_of_derivative(2)? {
        let mut found = None;
        for kappa in 1..=(2 * r_range) {
            let val = phi.derivative_base(kappa + 2, p).abs();
            if val > tol * phi.c_kappa_max(kappa + 2).max(1e-300) {
                found = Some((kappa, val));
                break;
            }
        }
        let (kappa, derivative) = found.ok_or(Error::DegenerateStructure {
            p,
            max_order: 2 * r_range + 2,
        })?;
        let next = phi.derivative_base(kappa + 3, p).abs();
        let thresh = (next / ((kappa as f64 + 1.0) * derivative)).powf(3.0 * kappa as f64);
        s2.push(Root {
            p,
            kappa,
            derivative,
        });
        s2_req.push(thresh);
    }

    let structure = assemble_structure(phi, s1, s2);
    let c0 = structure
        .s2
        .iter()
        .map(|r| r.derivative / (2.0 * c3 * factorial(r.kappa)))
        .fold(f64::INFINITY, f64::min);
    let c1_s1 = structure
        .s1
        .iter()
        .map(|r| r.derivative / factorial(r.kappa))
        .fold(f64::INFINITY, f64::min);
    let c1_s2 = structure
        .s2
        .iter()
        .map(|r| (r.derivative / factorial(r.kappa)) * c0)
        .fold(f64::INFINITY, f64::min);
    let c1 = 0.25 * c1_s1.min(c1_s2);

    // minimal separation of distinct expansion points; roots closer than the
    // Taylor exclusion scale ~t^{-1/3} act as one expansion point (colliding
    // stationary pairs at a wavefront are expanded jointly via Φ''')
    let mut pts: Vec<f64> = structure
        .s1
        .iter()
        .chain(structure.s2.iter())
        .map(|r| r.p)
        .collect();
    pts.sort_by(f64::total_cmp);
    let merge = (0.5 * phi.time().max(1.0).powf(-1.0 / 3.0)).max(1e-6);
    pts.dedup_by(|a, b| (*a - *b).abs() <= merge);
    if pts.len() > 1 && (pts[0] + 2.0 * PI - pts[pts.len() - 1]).abs() <= merge {
        pts.pop();
    }
    let sep_req = if pts.len() >= 2 {
        let mut min_sep = f64::INFINITY;
        for i in 0..pts.len() {
            let next = if i + 1 == pts.len() {
                pts[0] + 2.0 * PI
            } else {
                pts[i + 1]
            };
            min_sep = min_sep.min(next - pts[i]);
        }
        ((c0.min(1e6) + 1.0) / min_sep).powi(2 * r_range as i32 + 2)
    } else {
        0.0
    };

    let t_req = s1_req
        .iter()
        .chain(s2_req.iter())
        .cloned()
        .fold(1.0f64, f64::max)
        .max(sep_req);

    let prefactor = 6.0 * (2.0 * r_range as f64 + 1.0);
    let c_sharp = if structure.generic {
        prefactor * 1.0f64.max(8.0 * c3 / (structure.m_value * structure.m_value))
    } else {
        let t_b = structure
            .s2
            .iter()
            .map(|r| 8.0 * factorial(r.kappa).powi(2) * c3 / (r.derivative * r.derivative))
            .fold(0.0f64, f64::max);
        let t_c = structure
            .s1
            .iter()
            .map(|r| 4.0 * factorial(r.kappa) / r.derivative)
            .fold(0.0f64, f64::max);
        prefactor * 1.0f64.max(c0.min(1e300)).max(t_b).max(t_c)
    };

    Ok(PointConstants {
        t: phi.time(),
        t_req,
        c_sharp,
        c0,
        c1,
        kappa0: if structure.generic { 1 } else { structure.kappa0 },
        m_value: structure.m_value,
        generic: structure.generic,
        structure,
    })
}

/// Dephasing certificate of a phase function over its full time window.
/// Drift-free phases have a time-independent structure and are evaluated
/// once; drifted phases are swept across the window because their stationary
/// points move with t (the sweep grid is logarithmic with 48 points).
pub fn certificate(phi: &PhaseFunction, l: usize) -> Result<DephasingCertificate> {
    if phi.is_flat() {
        return Err(Error::FlatPhase(format!(
            "all amplitudes vanish (drift = {})",
            phi.drift()
        )));
    }
    let c1max = phi.c_kappa_max(1);
    let tr_cap = l as f64 / (4.0 * c1max);
    if phi.drift() == 0.0 {
        let p = constants_at(&phi.with_time(1.0))?;
        let t_r = l as f64 / (4.0 * c1max.max(p.c1));
        return Ok(DephasingCertificate {
            c_sharp: p.c_sharp,
            gamma: 1.0 / (3.0 * p.kappa0 as f64),
            t0: p.t_req.max(1.0),
            t_r,
            kappa0: p.kappa0,
            m_value: p.m_value,
            c0: p.c0,
            c1: p.c1,
            generic: p.generic,
            structure: p.structure,
        });
    }
    let n_pts = 48usize;
    let hi = tr_cap.max(1.5);
    let points: Vec<PointConstants> = (0..n_pts)
        .map(|i| {
            let t = hi.powf(i as f64 / (n_pts - 1) as f64);
            constants_at(&phi.with_time(t))
        })
        .collect::<Result<Vec<_>>>()?;
    // a sweep time is certified when its own validity requirement is met;
    // the window starts after the last uncertified grid time
    let first_good_tail = points
        .iter()
        .rposition(|p| p.t_req > p.t)
        .map(|bad| bad + 1)
        .unwrap_or(0);
    let (t0, view): (f64, Vec<&PointConstants>) = if first_good_tail >= points.len() {
        // no certified times at all: report an empty window with the full
        // sweep's statistics
        (f64::INFINITY, points.iter().collect())
    } else {
        let tail: Vec<&PointConstants> = points[first_good_tail..].iter().collect();
        let t0 = if first_good_tail == 0 {
            points[0].t_req.max(1.0)
        } else {
            tail[0].t
        };
        (t0, tail)
    };
    let c_sharp = view.iter().map(|p| p.c_sharp).fold(0.0f64, f64::max);
    let generic = view.iter().all(|p| p.generic);
    let kappa0 = view.iter().map(|p| p.kappa0).max().unwrap_or(1);
    let gamma = 1.0 / (3.0 * kappa0 as f64);
    let c0 = view.iter().map(|p| p.c0).fold(f64::INFINITY, f64::min);
    let c1 = view.iter().map(|p| p.c1).fold(0.0f64, f64::max);
    let m_value = view.iter().map(|p| p.m_value).fold(f64::INFINITY, f64::min);
    let t_r = l as f64 / (4.0 * c1max.max(c1));
    let worst = view
        .iter()
        .max_by(|a, b| a.c_sharp.total_cmp(&b.c_sharp))
        .expect("non-empty sweep");
    Ok(DephasingCertificate {
        c_sharp,
        gamma,
        t0: t0.min(f64::MAX),
        t_r,
        kappa0,
        m_value,
        c0,
        c1,
        generic,
        structure: worst.structure.clone(),
    })
}

/// Direct evaluation (1/L) Σ_{k=1..L} e^{iΦ_t(2πk/L)}: the empirical quantity
/// the certificates bound.
pub fn exponential_sum(phi: &PhaseFunction, l: usize) -> Complex64 {
    let mut s = Complex64::ZERO;
    for k in 1..=l {
        let p = 2.0 * PI * k as f64 / l as f64;
        s += Complex64::from_polar(1.0, phi.eval(p));
    }
    s / l as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FnBoundKind {
    /// n = L or a drift-only phase: f_n is a constant of motion
    Conserved,
    /// no usable certificate (resilient point, empty window or t outside)
    Trivial,
    Certified,
}

#[derive(Debug, Clone, Copy)]
pub struct FnBound {
    pub value: f64,
    pub kind: FnBoundKind,
}

/// Bound on |f_n(t)| for the band mode at α = nπ/L with the given drift
/// x - y - d. Falls back to the trivial bound 1 outside the certificate
/// window or at resilient points (C_# above the threshold).
pub fn bound_f_n(
    model: &HoppingModel,
    l: usize,
    n: usize,
    drift: i64,
    t: f64,
    c_th: Option<f64>,
) -> FnBound {
    if n == 0 || n >= l {
        return FnBound {
            value: 1.0,
            kind: FnBoundKind::Conserved,
        };
    }
    let phi = PhaseFunction::band_phase(model, l, n, drift, t);
    if phi.is_flat() {
        return FnBound {
            value: 1.0,
            kind: FnBoundKind::Conserved,
        };
    }
    let Ok(cert) = certificate(&phi, l) else {
        return FnBound {
            value: 1.0,
            kind: FnBoundKind::Trivial,
        };
    };
    let threshold = c_th.unwrap_or_else(|| default_c_th(model));
    if cert.c_sharp >= threshold {
        return FnBound {
            value: 1.0,
            kind: FnBoundKind::Trivial,
        };
    }
    match cert.bound_at(t) {
        Ok(v) => FnBound {
            value: v,
            kind: FnBoundKind::Certified,
        },
        Err(_) => FnBound {
            value: 1.0,
            kind: FnBoundKind::Trivial,
        },
    }
}

/// Uniform propagator certificate: worst constants over the drifts
/// d = 0..L/2 (±d are mirror images). Drifts whose own window comes out
/// empty (the t0 separation condition is unmeetable below t_R right
/// after a wavefront crossing) are skipped and listed in `uncovered_drifts`;
/// at desk scales their entries are covered empirically by the remaining
/// constant, never by this certificate.
#[derive(Debug, Clone)]
pub struct PropagatorCertificate {
    pub cert: DephasingCertificate,
    pub uncovered_drifts: Vec<i64>,
}

pub fn propagator_certificate(model: &HoppingModel, l: usize) -> Result<PropagatorCertificate> {
    let mut agg: Option<DephasingCertificate> = None;
    let mut uncovered = Vec::new();
    for d in 0..=(l / 2) {
        let phi = PhaseFunction::propagator_phase(model, d as i64, 1.0);
        let cert = certificate(&phi, l)?;
        if cert.window().is_none() {
            uncovered.push(d as i64);
            continue;
        }
        agg = Some(match agg {
            None => cert,
            Some(a) => DephasingCertificate {
                c_sharp: a.c_sharp.max(cert.c_sharp),
                gamma: a.gamma.min(cert.gamma),
                t0: a.t0.max(cert.t0),
                t_r: a.t_r.min(cert.t_r),
                kappa0: a.kappa0.max(cert.kappa0),
                m_value: a.m_value.min(cert.m_value),
                c0: a.c0.min(cert.c0),
                c1: a.c1.max(cert.c1),
                generic: a.generic && cert.generic,
                structure: if cert.c_sharp > a.c_sharp {
                    cert.structure
                } else {
                    a.structure
                },
            },
        });
    }
    match agg {
        Some(cert) => Ok(PropagatorCertificate {
            cert,
            uncovered_drifts: uncovered,
        }),
        None => Err(Error::EmptyWindow {
            t0: f64::INFINITY,
            t_r: 0.0,
        }),
    }
}

/// Uniform bound C t^{-γ} on |G_{x,y}(t)|, any entry, for t in the window.
pub fn propagator_bound(model: &HoppingModel, t: f64) -> Result<f64> {
    let cert = propagator_certificate(model, model.l())?;
    cert.cert.bound_at(t)
}

/// 10 × the best generic constant over a probe grid of α values: a
/// size-independent threshold anchored at the model's own dephasing scale.
pub fn default_c_th(model: &HoppingModel) -> f64 {
    let mut best = f64::INFINITY;
    for k in 1..16 {
        let alpha = k as f64 * PI / 16.0;
        let phi = PhaseFunction::band_phase_alpha(model, alpha, 0, 1.0);
        if phi.is_flat() {
            continue;
        }
        if let Ok(cert) = certificate(&phi, 4096) {
            best = best.min(cert.c_sharp);
        }
    }
    10.0 * best
}

/// All n in 1..L-1 whose band mode is resilient: C_#(nπ/L) at or above the
/// threshold, a conserved (flat) mode, or a mode with an empty certificate
/// window.
pub fn resilient_set(model: &HoppingModel, l: usize, c_th: f64) -> Vec<usize> {
    (1..l)
        .filter(|&n| {
            let phi = PhaseFunction::band_phase(model, l, n, 0, 1.0);
            if phi.is_flat() {
                return true;
            }
            match certificate(&phi, l) {
                Ok(cert) => cert.c_sharp >= c_th || cert.window().is_none(),
                Err(_) => true,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct ResilienceOptions {
    /// threshold on C_#; None = 10 × the model's best generic constant
    pub c_th: Option<f64>,
    /// resilient-weight budget: non-resilient needs W_res <= c_rs / L
    pub c_rs: f64,
    /// bulk-weight budget: non-resilient needs W_ok <= c_nrs
    pub c_nrs: f64,
    /// bands whose sup-norm stays below this are reported as negligible
    pub band_floor: f64,
}

impl Default for ResilienceOptions {
    fn default() -> Self {
        ResilienceOptions {
            c_th: None,
            c_rs: 1.0,
            c_nrs: 10.0,
            band_floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    NonResilient,
    Resilient,
}

#[derive(Debug, Clone)]
pub struct BandResilience {
    pub d: i64,
    pub w_res: f64,
    pub w_ok: f64,
}

#[derive(Debug, Clone)]
pub struct ResilienceReport {
    pub c_th: f64,
    pub c_rs: f64,
    pub c_nrs: f64,
    pub resilient_points: Vec<usize>,
    pub bands: Vec<BandResilience>,
    pub max_w_res: f64,
    pub max_w_ok: f64,
    pub verdict: Verdict,
}

/// Definition-1 classification of a covariance matrix against a model:
/// weight of every band's Fourier spectrum on the resilient points vs the
/// bulk, and the resulting verdict.
pub fn classify_resilience(
    gamma: &Covariance,
    model: &HoppingModel,
    opts: &ResilienceOptions,
) -> ResilienceReport {
    let l = gamma.l();
    let c_th = opts.c_th.unwrap_or_else(|| default_c_th(model));
    let res_points = resilient_set(model, l, c_th);
    let is_res = {
        let mut v = vec![false; l];
        for &n in &res_points {
            v[n] = true;
        }
        v
    };
    let mut bands = Vec::new();
    let mut max_w_res = 0.0f64;
    let mut max_w_ok = 0.0f64;
    let lo = -((l as i64 - 1) / 2);
    for d in lo..=(l as i64 / 2) {
        let band = gamma.band(d);
        let sup = band.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        if sup < opts.band_floor {
            continue;
        }
        let spec = gamma.band_spectrum(d);
        let mut w_res = 0.0;
        let mut w_ok = 0.0;
        for n in 1..l {
            let w = spec.weight(n).norm();
            if is_res[n] {
                w_res += w;
            } else {
                w_ok += w;
            }
        }
        max_w_res = max_w_res.max(w_res);
        max_w_ok = max_w_ok.max(w_ok);
        bands.push(BandResilience { d, w_res, w_ok });
    }
    let verdict = if max_w_res <= opts.c_rs / l as f64 && max_w_ok <= opts.c_nrs {
        Verdict::NonResilient
    } else {
        Verdict::Resilient
    };
    ResilienceReport {
        c_th,
        c_rs: opts.c_rs,
        c_nrs: opts.c_nrs,
        resilient_points: res_points,
        bands,
        max_w_res,
        max_w_ok,
        verdict,
    }
}

/// Precomputed data for evaluating the certified second-moment deviation
/// bound |Γ_{x,y}(t) - Γ^(eq)_{x,y}| at many times.
pub struct EquilibrationBounder {
    report: ResilienceReport,
    clustering: crate::covariance::ClusteringFit,
    /// per band: (|X_n|, n) entries over non-resilient n with usable weight
    band_terms: Vec<Vec<(f64, usize)>>,
    band_w_res: Vec<f64>,
    band_d: Vec<i64>,
    certs: BTreeMap<usize, DephasingCertificate>,
    t0: f64,
    t_r: f64,
    gamma_min: f64,
    l: usize,
}

impl EquilibrationBounder {
    pub fn new(
        gamma: &Covariance,
        model: &HoppingModel,
        opts: &ResilienceOptions,
    ) -> Result<Self> {
        let l = gamma.l();
        if l != model.l() {
            return Err(Error::Dimension {
                left: l,
                right: model.l(),
                context: "covariance vs model size",
            });
        }
        let report = classify_resilience(gamma, model, opts);
        let clustering = gamma.clustering_fit();
        let is_res = {
            let mut v = vec![false; l];
            for &n in &report.resilient_points {
                v[n] = true;
            }
            v
        };
        let mut band_terms = Vec::new();
        let mut band_w_res = Vec::new();
        let mut band_d = Vec::new();
        let mut needed: std::collections::BTreeSet<usize> = std::collections::BTreeSet::new();
        let lo = -((l as i64 - 1) / 2);
        for d in lo..=(l as i64 / 2) {
            let spec = gamma.band_spectrum(d);
            let mut terms = Vec::new();
            let mut w_res = 0.0;
            for n in 1..l {
                let w = spec.weight(n).norm();
                if w < opts.band_floor {
                    continue;
                }
                if is_res[n] {
                    w_res += w;
                } else {
                    terms.push((w, n));
                    needed.insert(n);
                }
            }
            band_terms.push(terms);
            band_w_res.push(w_res);
            band_d.push(d);
        }
        let mut certs = BTreeMap::new();
        let mut t0 = 1.0f64;
        let mut t_r = f64::INFINITY;
        let mut gamma_min: f64 = 1.0 / 3.0;
        for n in needed {
            let phi = PhaseFunction::band_phase(model, l, n, 0, 1.0);
            let cert = certificate(&phi, l)?;
            if let Some((a, b)) = cert.window() {
                t0 = t0.max(a);
                t_r = t_r.min(b);
            }
            gamma_min = gamma_min.min(cert.gamma);
            certs.insert(n, cert);
        }
        Ok(EquilibrationBounder {
            report,
            clustering,
            band_terms,
            band_w_res,
            band_d,
            certs,
            t0,
            t_r,
            gamma_min,
            l,
        })
    }

    pub fn report(&self) -> &ResilienceReport {
        &self.report
    }

    pub fn window(&self) -> (f64, f64) {
        (self.t0, self.t_r)
    }

    /// d_ξ(t) = ξ ln(t^γ): bands beyond this range enter through the
    /// clustering tail only.
    pub fn d_xi(&self, t: f64) -> f64 {
        if !self.clustering.reliable || !self.clustering.xi.is_finite() {
            return 0.0;
        }
        (self.clustering.xi * self.gamma_min * t.ln()).max(0.0)
    }

    /// Certified upper bound on max_{x,y} |Γ_{x,y}(t) - Γ^(eq)_{x,y}|.
    pub fn bound(&self, t: f64) -> Result<f64> {
        if t < self.t0 * (1.0 - 1e-12) || t > self.t_r * (1.0 + 1e-12) {
            return Err(Error::OutsideWindow {
                t,
                t0: self.t0,
                t_r: self.t_r,
            });
        }
        let include_all = !self.clustering.reliable || !self.clustering.xi.is_finite();
        let d_cut = if include_all {
            self.l as f64
        } else {
            self.d_xi(t).ceil()
        };
        let mut total = 0.0;
        let mut tail_applies = false;
        for (i, &d) in self.band_d.iter().enumerate() {
            let within = (d.unsigned_abs() as f64) <= d_cut;
            if !within {
                tail_applies = true;
                continue;
            }
            let mut band_bound = self.band_w_res[i];
            for &(w, n) in &self.band_terms[i] {
                let f_bound = match self.certs.get(&n).map(|c| c.bound_at(t)) {
                    Some(Ok(v)) => v.min(1.0),
                    _ => 1.0,
                };
                band_bound += w * f_bound;
            }
            total += band_bound;
        }
        if tail_applies && self.clustering.reliable && self.clustering.xi.is_finite() {
            let xi = self.clustering.xi;
            total += self.clustering.c_clust / (1.0 + (-1.0 / xi).exp())
                * t.powf(-self.gamma_min);
        }
        Ok(total)
    }
}

/// One-shot convenience around `EquilibrationBounder`.
pub fn equilibration_bound(
    gamma: &Covariance,
    model: &HoppingModel,
    t: f64,
    opts: &ResilienceOptions,
) -> Result<f64> {
    EquilibrationBounder::new(gamma, model, opts)?.bound(t)
}
