//! Phase functions Φ_t(p) = d·p + t Σ_z A_z cos(zp + φ_z) and root finding
//! for real trigonometric polynomials.
//!
//! Every exponential sum bounded in this crate is first brought into this
//! canonical cosine form: a propagator entry uses A_z = 2 J_z, while the band
//! dephasing functions f_n use A_z = 4 J_z sin(zα) with a π/2 phase offset
//! (the sine rewritten as a shifted cosine), α = nπ/L.

use crate::error::{Error, Result};
use crate::model::HoppingModel;
use num_complex::Complex64;
use std::f64::consts::PI;

const FLAT_REL_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct Harmonic {
    /// amplitude A_z of cos(zp + φ_z); z is 1 + the index in the harmonic list
    pub amplitude: f64,
    pub phase: f64,
}

#[derive(Debug, Clone)]
pub struct PhaseFunction {
    drift: f64,
    t: f64,
    harmonics: Vec<Harmonic>,
    /// scale against which "all amplitudes vanish" is judged
    amplitude_anchor: f64,
}

impl PhaseFunction {
    pub fn new(drift: f64, t: f64, harmonics: Vec<Harmonic>) -> Self {
        let anchor = harmonics
            .iter()
            .map(|h| h.amplitude.abs())
            .sum::<f64>()
            .max(1e-300);
        PhaseFunction {
            drift,
            t,
            harmonics,
            amplitude_anchor: anchor,
        }
    }

    /// Phase of the propagator entry G_{x,y}(t) with drift d = x - y:
    /// Φ_t(p) = d p + t E(p) up to the constant J_0 term, so A_z = 2 J_z.
    pub fn propagator_phase(model: &HoppingModel, d: i64, t: f64) -> Self {
        let harmonics: Vec<Harmonic> = (1..=model.range())
            .map(|z| Harmonic {
                amplitude: 2.0 * model.coupling(z),
                phase: 0.0,
            })
            .collect();
        let anchor = harmonics
            .iter()
            .map(|h| h.amplitude.abs())
            .sum::<f64>()
            .max(1e-300);
        PhaseFunction {
            drift: d as f64,
            t,
            harmonics,
            amplitude_anchor: anchor,
        }
    }

    /// Phase of the band dephasing function f_n at α = nπ/L with integer
    /// drift x - y - d: Φ_{t,α}(p) = (drift)p - 4t Σ_z J_z sin(zα) sin(zp + zα),
    /// written with cosines through sin θ = -cos(θ + π/2).
    pub fn band_phase_alpha(model: &HoppingModel, alpha: f64, drift: i64, t: f64) -> Self {
        let harmonics: Vec<Harmonic> = (1..=model.range())
            .map(|z| Harmonic {
                amplitude: 4.0 * model.coupling(z) * (z as f64 * alpha).sin(),
                phase: z as f64 * alpha + PI / 2.0,
            })
            .collect();
        let anchor = (1..=model.range())
            .map(|z| 4.0 * model.coupling(z).abs())
            .sum::<f64>()
            .max(1e-300);
        PhaseFunction {
            drift: drift as f64,
            t,
            harmonics,
            amplitude_anchor: anchor,
        }
    }

    pub fn band_phase(model: &HoppingModel, l: usize, n: usize, drift: i64, t: f64) -> Self {
        Self::band_phase_alpha(model, n as f64 * PI / l as f64, drift, t)
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn with_time(&self, t: f64) -> Self {
        let mut p = self.clone();
        p.t = t;
        p
    }

    pub fn harmonics(&self) -> &[Harmonic] {
        &self.harmonics
    }

    /// Effective range: highest z whose amplitude is non-negligible.
    pub fn range(&self) -> usize {
        self.harmonics
            .iter()
            .rposition(|h| h.amplitude.abs() > FLAT_REL_THRESHOLD * self.amplitude_anchor)
            .map(|i| i + 1)
            .unwrap_or(0)
    }

    /// True when every harmonic amplitude vanishes on the anchor scale; the
    /// sum is then a pure geometric (drift-only) sum.
    pub fn is_flat(&self) -> bool {
        self.range() == 0
    }

    /// Φ_t(p).
    pub fn eval(&self, p: f64) -> f64 {
        let mut v = self.drift * p;
        for (i, h) in self.harmonics.iter().enumerate() {
            let z = (i + 1) as f64;
            v += self.t * h.amplitude * (z * p + h.phase).cos();
        }
        v
    }

    /// Full derivative Φ_t^{(m)}(p), m >= 1 (the drift appears only at m = 1).
    pub fn derivative_full(&self, m: u32, p: f64) -> f64 {
        let base = self.t * self.derivative_base(m, p);
        if m == 1 {
            self.drift + base
        } else {
            base
        }
    }

    /// Time-stripped derivative Φ^{(m)}(p) = Σ_z A_z z^m cos(zp + φ_z + mπ/2), m >= 1.
    pub fn derivative_base(&self, m: u32, p: f64) -> f64 {
        let shift = m as f64 * PI / 2.0;
        let mut v = 0.0;
        for (i, h) in self.harmonics.iter().enumerate() {
            let z = (i + 1) as f64;
            v += h.amplitude * z.powi(m as i32) * (z * p + h.phase + shift).cos();
        }
        v
    }

    /// C^{(κ)}_max = Σ_z z^κ |A_z|.
    pub fn c_kappa_max(&self, kappa: u32) -> f64 {
        self.harmonics
            .iter()
            .enumerate()
            .map(|(i, h)| ((i + 1) as f64).powi(kappa as i32) * h.amplitude.abs())
            .sum()
    }

    /// All roots of Φ_t^{(m)} in [0, 2π).
    pub fn roots_of_derivative(&self, m: u32) -> Result<Vec<f64>> {
        let r = self.harmonics.len();
        let shift = m as f64 * PI / 2.0;
        let a0 = if m == 1 {
            Complex64::new(self.drift, 0.0)
        } else {
            Complex64::ZERO
        };
        let mut a = vec![Complex64::ZERO; r];
        let mut b = vec![Complex64::ZERO; r];
        for (i, h) in self.harmonics.iter().enumerate() {
            let z = (i + 1) as f64;
            let coeff = 0.5 * self.t * h.amplitude * z.powi(m as i32);
            let c = Complex64::from_polar(coeff.abs(), h.phase + shift)
                * if coeff < 0.0 { -1.0 } else { 1.0 };
            a[i] = c;
            b[i] = c.conj();
        }
        let roots = trig_roots(a0, &a, &b)?;
        // Newton polish on the actual derivative
        let polished = roots
            .into_iter()
            .map(|mut p| {
                for _ in 0..8 {
                    let f = self.derivative_full(m, p);
                    let fp = self.derivative_full(m + 1, p);
                    if fp.abs() < 1e-14 {
                        break;
                    }
                    let step = f / fp;
                    if !step.is_finite() || step.abs() > 0.1 {
                        break;
                    }
                    p -= step;
                }
                p.rem_euclid(2.0 * PI)
            })
            .collect::<Vec<_>>();
        Ok(dedupe_circular(polished, 1e-9))
    }
}

/// Roots in [0, 2π) of Ω(p) = a_0 + Σ_z (a_z e^{ipz} + b_z e^{-ipz}): the
/// associated polynomial Y(u) = a_0 u^R + Σ (a_z u^{R+z} + b_z u^{R-z}) has
/// degree at most 2R, its unit-circle roots u = e^{ip} are kept, the rest
/// discarded.
pub fn trig_roots(a0: Complex64, a: &[Complex64], b: &[Complex64]) -> Result<Vec<f64>> {
    let r = a.len().max(b.len());
    let mut coeffs = vec![Complex64::ZERO; 2 * r + 1];
    coeffs[r] = a0;
    for (z, &az) in a.iter().enumerate() {
        coeffs[r + z + 1] += az;
    }
    for (z, &bz) in b.iter().enumerate() {
        coeffs[r - z - 1] += bz;
    }
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    if scale == 0.0 {
        return Err(Error::InvalidParameter(
            "trig_roots: all Fourier coefficients vanish".into(),
        ));
    }
    for c in coeffs.iter_mut() {
        *c /= scale;
    }
    // strip zero leading coefficients (degree drop) and zero roots at u = 0
    let hi = coeffs
        .iter()
        .rposition(|c| c.norm() > 1e-14)
        .expect("nonzero polynomial");
    coeffs.truncate(hi + 1);
    let lo = coeffs
        .iter()
        .position(|c| c.norm() > 1e-14)
        .expect("nonzero polynomial");
    let coeffs = &coeffs[lo..];
    if coeffs.len() <= 1 {
        return Ok(Vec::new()); // constant: no roots on the circle
    }
    let roots = durand_kerner(coeffs);
    let mut on_circle: Vec<f64> = roots
        .into_iter()
        .filter(|u| (u.norm() - 1.0).abs() <= 1e-7)
        .map(|u| u.arg().rem_euclid(2.0 * PI))
        .collect();
    // Newton polish on the real function when the input is a real trig poly
    let is_real = a0.im.abs() < 1e-13
        && a.iter()
            .zip(b.iter())
            .all(|(x, y)| (x.conj() - y).norm() < 1e-12 * (1.0 + x.norm()));
    if is_real {
        let omega = |p: f64| -> f64 {
            let mut v = a0.re;
            for (z, &az) in a.iter().enumerate() {
                v += 2.0 * (az * Complex64::from_polar(1.0, p * (z + 1) as f64)).re;
            }
            v
        };
        let omega_prime = |p: f64| -> f64 {
            let mut v = 0.0;
            for (z, &az) in a.iter().enumerate() {
                let zz = (z + 1) as f64;
                v += 2.0 * (Complex64::new(0.0, zz) * az * Complex64::from_polar(1.0, p * zz)).re;
            }
            v
        };
        for p in on_circle.iter_mut() {
            for _ in 0..6 {
                let f = omega(*p);
                let fp = omega_prime(*p);
                if fp.abs() < 1e-13 {
                    break;
                }
                let step = f / fp;
                if !step.is_finite() || step.abs() > 0.1 {
                    break;
                }
                *p -= step;
            }
            *p = p.rem_euclid(2.0 * PI);
        }
    }
    Ok(dedupe_circular(on_circle, 1e-9))
}

fn dedupe_circular(mut roots: Vec<f64>, tol: f64) -> Vec<f64> {
    roots.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(roots.len());
    for r in roots {
        if let Some(&last) = out.last() {
            if (r - last).abs() <= tol {
                continue;
            }
        }
        out.push(r);
    }
    // wrap-around duplicate: 2π-ε vs 0+ε
    if out.len() > 1 {
        let first = out[0];
        let last = *out.last().unwrap();
        if (first + 2.0 * PI - last).abs() <= tol {
            out.pop();
        }
    }
    out
}

/// Durand-Kerner iteration for all complex roots of a polynomial given by
/// coefficients c[0] + c[1] u + ... (c normalized, degree >= 1).
fn durand_kerner(coeffs: &[Complex64]) -> Vec<Complex64> {
    let deg = coeffs.len() - 1;
    let lead = coeffs[deg];
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    let eval = |u: Complex64| -> Complex64 {
        let mut v = Complex64::ZERO;
        for c in monic.iter().rev() {
            v = v * u + c;
        }
        v
    };
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..deg).map(|j| seed.powu(j as u32 + 1)).collect();
    for _ in 0..600 {
        let mut moved = 0.0f64;
        for i in 0..deg {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() < 1e-290 {
                continue;
            }
            let delta = eval(roots[i]) / denom;
            roots[i] -= delta;
            moved = moved.max(delta.norm());
        }
        if moved < 1e-14 {
            break;
        }
    }
    roots
}
