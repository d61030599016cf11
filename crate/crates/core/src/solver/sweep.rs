use serde::Serialize;

use crate::eigenbasis::{build_basis, SpectralField};
use crate::error::{Error, Result};
use crate::report::CheckReport;

use super::{run, SolverConfig};

#[derive(Clone, Debug, Serialize)]
pub struct SweepEntry {
    pub epsilon: f64,
    /// ‖θ_ε(T) − θ_{ε=0}(T)‖₂.
    pub discrepancy: f64,
    pub final_l2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ViscositySweep {
    pub entries: Vec<SweepEntry>,
    /// Least-squares slope of log discrepancy against log ε over ε > 0.
    pub slope: Option<f64>,
    pub monotone: bool,
    pub report: CheckReport,
}

/// Run every ε in `eps_list` (strictly decreasing, nonnegative) plus the
/// inviscid reference, and compare terminal states.
pub fn vanishing_viscosity_sweep(theta0: &SpectralField, eps_list: &[f64], cfg: &SolverConfig) -> Result<ViscositySweep> {
    if eps_list.is_empty() {
        return Err(Error::InvalidArgument("empty viscosity list".into()));
    }
    if eps_list.iter().any(|&e| !(e >= 0.0)) || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(format!(
            "viscosities must be nonnegative and strictly decreasing, got {eps_list:?}"
        )));
    }
    let terminal = |eps: f64| -> Result<SpectralField> {
        let rec = run(theta0, &SolverConfig { epsilon: eps, ..cfg.clone() })?;
        if let Some(msg) = rec.aborted {
            return Err(Error::InvalidArgument(format!("run at epsilon = {eps} aborted: {msg}")));
        }
        Ok(rec.last().theta.clone())
    };
    let reference = terminal(0.0)?;
    let mut entries = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let th = if eps == 0.0 { reference.clone() } else { terminal(eps)? };
        entries.push(SweepEntry {
            epsilon: eps,
            discrepancy: th.sub(&reference)?.l2_norm(),
            final_l2: th.l2_norm(),
        });
    }
    let monotone = entries.windows(2).all(|w| w[1].discrepancy <= w[0].discrepancy * (1.0 + 1e-12));
    let pts: Vec<(f64, f64)> = entries
        .iter()
        .filter(|e| e.epsilon > 0.0 && e.discrepancy > 0.0)
        .map(|e| (e.epsilon.ln(), e.discrepancy.ln()))
        .collect();
    let slope = (pts.len() >= 2).then(|| {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    let mut report = CheckReport::new("vanishing_viscosity");
    for e in &entries {
        report.metric(&format!("discrepancy_eps_{}", e.epsilon), e.discrepancy);
    }
    if let Some(s) = slope {
        report.metric("slope", s);
    }
    report.require("discrepancy decreases with epsilon", monotone);
    Ok(ViscositySweep { entries, slope, monotone, report })
}

/// Evolve θ_a(x) = θ(a x) on Ω/a with viscosity ε/a for time T/a and compare
/// with θ(T, a·); in coefficients the rescaled field is c/a.
pub fn scaling_covariance(theta0: &SpectralField, cfg: &SolverConfig, a: f64) -> Result<CheckReport> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidArgument(format!("scaling factor must be positive, got {a}")));
    }
    let basis = theta0.basis();
    let small = build_basis(basis.domain().rescale(1.0 / a)?, basis.truncation())?;
    let theta_a = SpectralField::new(small, theta0.coeffs.iter().map(|c| c / a).collect())?;
    let cfg_a = SolverConfig { epsilon: cfg.epsilon / a, dt: cfg.dt / a, t_end: cfg.t_end / a, ..cfg.clone() };
    let orig = run(theta0, cfg)?;
    let scaled = run(&theta_a, &cfg_a)?;
    let expect: Vec<f64> = orig.last().theta.coeffs.iter().map(|c| c / a).collect();
    let got = &scaled.last().theta.coeffs;
    let diff = expect.iter().zip(got).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm = expect.iter().map(|x| x * x).sum::<f64>().sqrt();
    let rel = if norm > 0.0 { diff / norm } else { diff };
    let mut r = CheckReport::new("scaling_covariance");
    r.metric("scale", a).metric("rel_error", rel);
    r.require("rescaled trajectory matches", rel <= 1e-10 && orig.aborted.is_none() && scaled.aborted.is_none());
    Ok(r)
}
