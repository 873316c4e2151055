//! Structured-text reports for the certificate, resilience and ensemble-fit
//! subcommands.

use crate::config::RunConfig;
use crate::experiments::initial_state;
use anyhow::{anyhow, bail, Result};
use qlab::bounds::{
    certificate, classify_resilience, exponential_sum, propagator_certificate,
    DephasingCertificate, PhaseFunction, ResilienceOptions, Verdict,
};
use qlab::gge::{fit_gge, fit_thermal, relevant_range};
use qlab::model::HoppingModel;
use qlab::propagator::propagate;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

fn certificate_text(cert: &DephasingCertificate, uncovered: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "c_sharp = {:.6e}", cert.c_sharp);
    let _ = writeln!(s, "gamma = {:.12}", cert.gamma);
    let _ = writeln!(s, "t0 = {:.6e}", cert.t0);
    let _ = writeln!(s, "t_r = {:.6e}", cert.t_r);
    let _ = writeln!(s, "window_empty = {}", cert.window().is_none());
    let _ = writeln!(s, "generic = {}", cert.generic);
    let _ = writeln!(s, "kappa0 = {}", cert.kappa0);
    let _ = writeln!(s, "m = {:.6e}", cert.m_value);
    let _ = writeln!(s, "c0 = {:.6e}", cert.c0);
    let _ = writeln!(s, "c1 = {:.6e}", cert.c1);
    let roots1: Vec<String> = cert
        .structure
        .s1
        .iter()
        .map(|r| format!("{:.6}", r.p))
        .collect();
    let kappa1: Vec<String> = cert.structure.s1.iter().map(|r| r.kappa.to_string()).collect();
    let roots2: Vec<String> = cert
        .structure
        .s2
        .iter()
        .map(|r| format!("{:.6}", r.p))
        .collect();
    let _ = writeln!(s, "stationary_points = [{}]", roots1.join(", "));
    let _ = writeln!(s, "kappa = [{}]", kappa1.join(", "));
    let _ = writeln!(s, "curvature_roots = [{}]", roots2.join(", "));
    if uncovered > 0 {
        let _ = writeln!(s, "uncovered_drifts = {uncovered}");
    }
    s
}

/// `certify-bound`: certificate report plus an optional CSV of
/// (t, bound, empirical) samples across the window.
pub fn certify_bound(cfg: &RunConfig) -> Result<String> {
    let model = cfg.clean_model()?;
    let l = model.l();
    let (cert, uncovered, empirical): (DephasingCertificate, usize, Box<dyn Fn(f64) -> f64>) =
        match cfg.certify.mode.as_str() {
            "propagator" => {
                let pc = propagator_certificate(&model, l).map_err(|e| anyhow!("{e}"))?;
                let m = model.clone();
                (
                    pc.cert,
                    pc.uncovered_drifts.len(),
                    Box::new(move |t| propagate(&m, t).max_abs_entry()),
                )
            }
            "band" => {
                let n = cfg.certify.n;
                if n == 0 || n >= l {
                    bail!("certify.n must lie in 1..L-1 for band mode");
                }
                let phi = PhaseFunction::band_phase(&model, l, n, cfg.certify.drift, 1.0);
                let cert = certificate(&phi, l).map_err(|e| anyhow!("{e}"))?;
                (
                    cert,
                    0,
                    Box::new(move |t| exponential_sum(&phi.with_time(t), l).norm()),
                )
            }
            other => bail!("unknown certify mode '{other}'"),
        };
    let mut text = certificate_text(&cert, uncovered);
    if let Some((t0, tr)) = cert.window() {
        if cfg.certify.samples > 0 {
            let dir = cfg.out_dir();
            std::fs::create_dir_all(&dir)?;
            let path = dir.join("certificate_samples.csv");
            let mut w = std::io::BufWriter::new(std::fs::File::create(&path)?);
            writeln!(w, "t,bound,empirical")?;
            for i in 0..cfg.certify.samples {
                let t = t0 * (tr / t0).powf(i as f64 / (cfg.certify.samples.max(2) - 1) as f64);
                let bound = cert.bound_at(t).map_err(|e| anyhow!("{e}"))?;
                writeln!(w, "{t:.17e},{bound:.17e},{:.17e}", empirical(t))?;
            }
            let _ = writeln!(text, "samples_csv = \"{}\"", path.display());
        }
    }
    Ok(text)
}

/// `classify-resilience`: per-band weights and the verdict.
pub fn classify(cfg: &RunConfig) -> Result<String> {
    let model = cfg.clean_model()?;
    let gamma = initial_state(cfg)?;
    let opts = ResilienceOptions {
        c_th: cfg.c_th(),
        ..Default::default()
    };
    let report = classify_resilience(&gamma, &model, &opts);
    let mut s = String::new();
    let _ = writeln!(s, "c_th = {:.6e}", report.c_th);
    let _ = writeln!(s, "resilient_points = {}", report.resilient_points.len());
    let _ = writeln!(s, "max_w_res = {:.6e}", report.max_w_res);
    let _ = writeln!(s, "max_w_ok = {:.6e}", report.max_w_ok);
    let _ = writeln!(
        s,
        "verdict = \"{}\"",
        match report.verdict {
            Verdict::NonResilient => "non-resilient",
            Verdict::Resilient => "resilient",
        }
    );
    for band in report.bands.iter().take(32) {
        let _ = writeln!(
            s,
            "band d = {:>4}: w_res = {:.6e}, w_ok = {:.6e}",
            band.d, band.w_res, band.w_ok
        );
    }
    if report.bands.len() > 32 {
        let _ = writeln!(s, "... {} further bands", report.bands.len() - 32);
    }
    Ok(s)
}

/// `fit-thermal`: best (β, μ) thermal state of the config's model for a
/// covariance loaded from file.
pub fn fit_thermal_report(cov_path: &Path, cfg: &RunConfig) -> Result<String> {
    let gamma = qlab::io::load_covariance(cov_path).map_err(|e| anyhow!("{e}"))?;
    let model = HoppingModel::new(gamma.l(), cfg.model.j.clone()).map_err(|e| anyhow!("{e}"))?;
    let fit = fit_thermal(&gamma, &model).map_err(|e| anyhow!("{e}"))?;
    let mut s = String::new();
    let _ = writeln!(s, "beta = {:.9}", fit.beta);
    let _ = writeln!(s, "mu = {:.9}", fit.mu);
    let _ = writeln!(s, "residual = {:.9e}", fit.residual);
    let _ = writeln!(s, "boundary_hit = {}", fit.boundary_hit);
    Ok(s)
}

/// `dump-propagator`: CSV of G_{x,y}(t) (columns x, y, re, im, 1-based) for
/// debugging; circulant structure makes one column per separation enough,
/// but the full matrix is emitted for direct inspection.
pub fn dump_propagator(cfg: &RunConfig, t: f64, out: &Path) -> Result<String> {
    let g = match cfg.disordered_model()? {
        Some(d) => qlab::propagator::propagate_disordered(&d, t),
        None => propagate(&cfg.clean_model()?, t),
    };
    let l = g.l();
    let mut w = std::io::BufWriter::new(std::fs::File::create(out)?);
    writeln!(w, "x,y,re,im")?;
    for x in 0..l {
        for y in 0..l {
            let v = g.entry(x, y);
            writeln!(w, "{},{},{:.17e},{:.17e}", x + 1, y + 1, v.re, v.im)?;
        }
    }
    Ok(format!("wrote {} ({} entries)", out.display(), l * l))
}

/// `fit-gge`: currents of the loaded covariance matched by a GGE; the
/// truncation range defaults to the clustering estimate z_ξ = ξ ln(C/ε).
pub fn fit_gge_report(cov_path: &Path, z_xi: Option<usize>, eps: f64) -> Result<String> {
    let gamma = qlab::io::load_covariance(cov_path).map_err(|e| anyhow!("{e}"))?;
    let l = gamma.l();
    let clustering = gamma.clustering_fit();
    let z = match z_xi {
        Some(z) => z,
        None => relevant_range(clustering.c_clust, clustering.xi, eps)
            .map_err(|e| anyhow!("{e}"))?
            .min(l / 2)
            .max(1),
    };
    let targets = gamma.currents();
    let params = fit_gge(&targets, z, l).map_err(|e| anyhow!("{e}"))?;
    let refit = qlab::gge::gge_covariance(&params, l);
    let got = refit.currents();
    let mut s = String::new();
    let _ = writeln!(s, "z_xi = {z}");
    let _ = writeln!(
        s,
        "clustering: c = {:.6e}, xi = {:.6e}, reliable = {}",
        clustering.c_clust, clustering.xi, clustering.reliable
    );
    let lams: Vec<String> = params.lambda.iter().map(|v| format!("{v:.9}")).collect();
    let _ = writeln!(s, "lambda = [{}]", lams.join(", "));
    if let Some(eta) = &params.eta {
        let etas: Vec<String> = eta.iter().map(|v| format!("{v:.9}")).collect();
        let _ = writeln!(s, "eta = [{}]", etas.join(", "));
    }
    for d in 0..=z {
        let _ = writeln!(
            s,
            "current {d}: target = {:.9e}, fitted = {:.9e}, residual = {:.3e}",
            targets.i[d].re,
            got.i[d].re,
            (targets.i[d] - got.i[d]).norm()
        );
    }
    Ok(s)
}
