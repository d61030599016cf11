//! Oscillation of a field over nested space-time cylinders and the Hölder
//! exponent read off their decay.

use serde::Serialize;

use super::path::LagrangianPath;
use super::SpaceTimeSamples;
use crate::eigenbasis::Point;
use crate::error::{Error, Result};
use crate::report::CheckReport;

/// Where the nested cylinders are centered.
#[derive(Clone, Debug)]
pub enum CylinderCenter {
    Fixed(Point),
    /// Level k follows path k (the last path for deeper levels).
    Paths(Vec<LagrangianPath>),
}

impl CylinderCenter {
    fn at(&self, k: usize, t: f64) -> Point {
        match self {
            Self::Fixed(p) => *p,
            Self::Paths(ps) => ps[k.min(ps.len() - 1)].position_at(t),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CylinderSpec {
    pub center: CylinderCenter,
    /// Radius of level 0; level k has eps^k·radius.
    pub radius: f64,
    /// Time span of level 0, ending at the last sample.
    pub timespan: f64,
    pub eps: f64,
    pub levels: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct OscillationRow {
    pub k: usize,
    pub radius: f64,
    pub timespan: f64,
    pub osc: f64,
    pub center: Point,
}

#[derive(Clone, Debug, Serialize)]
pub struct OscillationReport {
    pub rows: Vec<OscillationRow>,
    /// −slope of ln osc_k against k, divided by ln(1/ε); +∞ when every
    /// oscillation vanishes.
    pub alpha: f64,
    /// Each cylinder lies inside its predecessor.
    pub nested: bool,
    #[serde(skip)]
    pub report: CheckReport,
}

impl OscillationReport {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["k", "radius", "timespan", "osc", "center_x", "center_y"])?;
        for r in &self.rows {
            wtr.write_record([
                r.k.to_string(),
                r.radius.to_string(),
                r.timespan.to_string(),
                r.osc.to_string(),
                r.center[0].to_string(),
                r.center[1].to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// osc_k = max − min of the samples in cylinder k, then a log-linear fit.
pub fn oscillation_scan(samples: &SpaceTimeSamples, spec: &CylinderSpec) -> Result<OscillationReport> {
    if !(spec.eps > 0.0 && spec.eps < 1.0) {
        return Err(Error::InvalidArgument(format!("zoom factor must lie in (0, 1), got {}", spec.eps)));
    }
    if !(spec.radius > 0.0 && spec.timespan > 0.0) {
        return Err(Error::InvalidArgument("cylinder radius and timespan must be positive".into()));
    }
    if let CylinderCenter::Paths(p) = &spec.center {
        if p.is_empty() {
            return Err(Error::InvalidArgument("no center paths".into()));
        }
    }
    let mut report = CheckReport::new("oscillation decay");
    let h = samples.grid.min_spacing();
    let mut levels = spec.levels;
    while levels > 0 && h > spec.eps.powi(levels as i32) * spec.radius / 8.0 {
        levels -= 1;
    }
    if levels < spec.levels {
        report.warn(format!(
            "grid spacing {h:.3e} resolves only {levels} of {} levels; deeper cylinders dropped",
            spec.levels
        ));
    }
    let t_end = *samples.times.last().expect("nonempty");
    let pts = samples.grid.points();
    let mut rows = Vec::with_capacity(levels + 1);
    for k in 0..=levels {
        let scale = spec.eps.powi(k as i32);
        let (r, span) = (scale * spec.radius, scale * spec.timespan);
        let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
        for (&t, vals) in samples.times.iter().zip(&samples.values) {
            if t < t_end - span * (1.0 + 1e-12) {
                continue;
            }
            let c = spec.center.at(k, t);
            for (p, &v) in pts.iter().zip(vals) {
                if (p[0] - c[0]).hypot(p[1] - c[1]) <= r {
                    hi = hi.max(v);
                    lo = lo.min(v);
                }
            }
        }
        if hi < lo {
            return Err(Error::InvalidArgument(format!("cylinder {k} contains no sample points")));
        }
        rows.push(OscillationRow { k, radius: r, timespan: span, osc: hi - lo, center: spec.center.at(k, t_end) });
    }

    let mut nested = true;
    for k in 1..rows.len() {
        let span = rows[k].timespan;
        for &t in samples.times.iter().filter(|&&t| t >= t_end - span * (1.0 + 1e-12)) {
            let (a, b) = (spec.center.at(k, t), spec.center.at(k - 1, t));
            if (a[0] - b[0]).hypot(a[1] - b[1]) + rows[k].radius > rows[k - 1].radius * (1.0 + 1e-9) {
                nested = false;
            }
        }
    }
    if !nested {
        report.warn("cylinders are not nested along the center paths");
    }

    let fit: Vec<(f64, f64)> = rows.iter().filter(|r| r.osc > 0.0).map(|r| (r.k as f64, r.osc.ln())).collect();
    let alpha = if fit.is_empty() {
        report.note("field is constant on every cylinder");
        f64::INFINITY
    } else if fit.len() < 2 {
        report.warn("fewer than two nonzero oscillations; exponent unavailable");
        f64::NAN
    } else {
        let n = fit.len() as f64;
        let mk = fit.iter().map(|f| f.0).sum::<f64>() / n;
        let my = fit.iter().map(|f| f.1).sum::<f64>() / n;
        let sxy: f64 = fit.iter().map(|f| (f.0 - mk) * (f.1 - my)).sum();
        let sxx: f64 = fit.iter().map(|f| (f.0 - mk).powi(2)).sum();
        -(sxy / sxx) / (1.0 / spec.eps).ln()
    };
    report.metric("alpha", alpha).metric("levels", levels as f64).metric("grid_spacing", h);
    report.require("exponent is nonnegative", alpha.is_nan() || alpha >= 0.0);
    Ok(OscillationReport { rows, alpha, nested, report })
}
