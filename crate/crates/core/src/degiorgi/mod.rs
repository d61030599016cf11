//! De Giorgi diagnostics on trajectories: truncation-energy ladders,
//! level-set measures, barrier profiles, Lagrangian paths, oscillation decay
//! and the technical lemmas used by the iteration.

pub mod barrier;
pub mod lemmas;
pub mod oscillation;
pub mod path;

use std::sync::Arc;

use serde::Serialize;

use crate::eigenbasis::{Deriv, Grid, Point, SpectralField};
use crate::error::{Error, Result};
use crate::report::CheckReport;
use crate::solver::{run, SolverConfig, TrajectoryRecord};

pub use barrier::BarrierFn;
pub use lemmas::{verify_barrier_lemma, verify_interpolation, BarrierLemma, InterpolationSamples};
pub use oscillation::{oscillation_scan, CylinderCenter, CylinderSpec, OscillationReport, OscillationRow};
pub use path::{gamma_recursion, integrate_path, low_pass_levels, GammaRecursion, LagrangianPath, VelocityRecord};

/// Values of a scalar field on a fixed grid at increasing times.
#[derive(Clone)]
pub struct SpaceTimeSamples {
    pub times: Vec<f64>,
    pub grid: Arc<Grid>,
    pub values: Vec<Vec<f64>>,
}

impl SpaceTimeSamples {
    /// Snapshots of the record on `grid` for every entry in [start, end],
    /// with interpolated snapshots added at the ends when needed.
    pub fn from_record(rec: &TrajectoryRecord, start: f64, end: f64, grid: &Arc<Grid>) -> Result<Self> {
        let (t0, t1) = (rec.initial().t, rec.last().t);
        let slack = 1e-12 * t1.abs().max(1.0);
        if !(start < end) || start < t0 - slack || end > t1 + slack {
            return Err(Error::OutOfSpan { t: if start < t0 { start } else { end }, t0, t1 });
        }
        let mut fields: Vec<(f64, SpectralField)> = Vec::new();
        let inside = |t: f64| t >= start - slack && t <= end + slack;
        if !rec.entries.iter().any(|e| (e.t - start).abs() <= slack) {
            fields.push((start, rec.theta_at(start)?));
        }
        for e in rec.entries.iter().filter(|e| inside(e.t)) {
            fields.push((e.t, e.theta.clone()));
        }
        if !rec.entries.iter().any(|e| (e.t - end).abs() <= slack) {
            fields.push((end, rec.theta_at(end)?));
        }
        let values = fields.iter().map(|(_, f)| f.eval_on(grid, Deriv::Value)).collect::<Result<Vec<_>>>()?;
        Ok(Self { times: fields.iter().map(|(t, _)| *t).collect(), grid: grid.clone(), values })
    }

    pub fn from_fn(grid: &Arc<Grid>, times: &[f64], f: impl Fn(f64, Point) -> f64) -> Self {
        let values = times.iter().map(|&t| grid.points().iter().map(|&p| f(t, p)).collect()).collect();
        Self { times: times.to_vec(), grid: grid.clone(), values }
    }

    /// Affinely map the sampled span onto [−length, 0].
    pub fn normalized(mut self, length: f64) -> Self {
        let (a, b) = (self.times[0], *self.times.last().expect("nonempty"));
        let span = (b - a).max(f64::MIN_POSITIVE);
        for t in &mut self.times {
            *t = -length + length * (*t - a) / span;
        }
        self
    }

    /// ∫_from^{last} g(t) dt by the trapezoid rule on the sample times, with
    /// g linearly interpolated at `from`.
    pub fn time_integral(&self, g: &[f64], from: f64) -> f64 {
        let t = &self.times;
        let mut acc = 0.0;
        for i in 1..t.len() {
            let (a, b) = (t[i - 1], t[i]);
            if b <= from {
                continue;
            }
            let (lo, glo) = if a < from {
                let w = (from - a) / (b - a);
                (from, g[i - 1] * (1.0 - w) + g[i] * w)
            } else {
                (a, g[i - 1])
            };
            acc += 0.5 * (b - lo) * (glo + g[i]);
        }
        acc
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DeGiorgiLadder {
    pub cutoffs: Vec<f64>,
    pub time_gates: Vec<f64>,
    /// E_k = ∫_{t_k}^0 ∫ (f − a_k)₊² dx dt.
    pub energies: Vec<f64>,
    /// Space-time measure of {f > a_k} over [t_k, 0].
    pub levelset_measures: Vec<f64>,
    /// C in E_{k+1} ≈ C^k E_{k−1}^{3/2}, least squares over usable k.
    pub recursion_constant: Option<f64>,
    /// Free exponent β in E_{k+1} ≈ C^k E_{k−1}^β.
    pub recursion_exponent: Option<f64>,
}

impl DeGiorgiLadder {
    pub fn is_monotone(&self) -> bool {
        self.energies.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["k", "t_k", "a_k", "E_k", "levelset_measure"])?;
        for k in 0..self.energies.len() {
            wtr.write_record([
                k.to_string(),
                self.time_gates[k].to_string(),
                self.cutoffs[k].to_string(),
                self.energies[k].to_string(),
                self.levelset_measures[k].to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub fn cutoff(k: usize) -> f64 {
    1.0 - 0.5f64.powi(k as i32)
}

pub fn time_gate(k: usize) -> f64 {
    -1.0 - 0.5f64.powi(k as i32)
}

/// Truncation energies on samples already normalized to [−2, 0].
pub fn ladder(samples: &SpaceTimeSamples, levels: usize) -> Result<DeGiorgiLadder> {
    let (first, last) = (samples.times[0], *samples.times.last().expect("nonempty"));
    if first > -2.0 + 1e-12 || last < -1e-12 {
        return Err(Error::OutOfSpan { t: if first > -2.0 { -2.0 } else { 0.0 }, t0: first, t1: last });
    }
    let grid = &samples.grid;
    let mut energies = Vec::with_capacity(levels + 1);
    let mut measures = Vec::with_capacity(levels + 1);
    for k in 0..=levels {
        let a = cutoff(k);
        let (sq, ind): (Vec<f64>, Vec<f64>) = samples
            .values
            .iter()
            .map(|v| {
                let sq: Vec<f64> = v.iter().map(|&f| (f - a).max(0.0).powi(2)).collect();
                let ind: Vec<f64> = v.iter().map(|&f| if f > a { 1.0 } else { 0.0 }).collect();
                (grid.integrate(&sq), grid.integrate(&ind))
            })
            .unzip();
        energies.push(samples.time_integral(&sq, time_gate(k)));
        measures.push(samples.time_integral(&ind, time_gate(k)));
    }
    let (recursion_constant, recursion_exponent) = fit_recursion(&energies);
    Ok(DeGiorgiLadder {
        cutoffs: (0..=levels).map(cutoff).collect(),
        time_gates: (0..=levels).map(time_gate).collect(),
        energies,
        levelset_measures: measures,
        recursion_constant,
        recursion_exponent,
    })
}

fn fit_recursion(e: &[f64]) -> (Option<f64>, Option<f64>) {
    // Rows (k, log E_{k−1}, log E_{k+1}) with both energies positive.
    let rows: Vec<(f64, f64, f64)> = (1..e.len().saturating_sub(1))
        .filter(|&k| e[k - 1] > 0.0 && e[k + 1] > 0.0)
        .map(|k| (k as f64, e[k - 1].ln(), e[k + 1].ln()))
        .collect();
    if rows.is_empty() {
        return (None, None);
    }
    let num: f64 = rows.iter().map(|(k, lp, ln)| k * (ln - 1.5 * lp)).sum();
    let den: f64 = rows.iter().map(|(k, _, _)| k * k).sum();
    let c = (num / den).exp();
    if rows.len() < 2 {
        return (Some(c), None);
    }
    // Two-parameter least squares: y = β·x + k·γ.
    let (mut sxx, mut sxk, mut skk, mut sxy, mut sky) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (k, x, y) in &rows {
        sxx += x * x;
        sxk += x * k;
        skk += k * k;
        sxy += x * y;
        sky += k * y;
    }
    let det = sxx * skk - sxk * sxk;
    let beta = (det.abs() > 1e-12 * sxx * skk).then(|| (sxy * skk - sky * sxk) / det);
    (Some(c), beta)
}

#[derive(Clone, Debug, Serialize)]
pub struct SmallnessThreshold {
    /// Largest amplitude found for which E_K ≤ tolerance.
    pub amplitude: f64,
    /// E_0 at that amplitude.
    pub delta_est: f64,
    pub evaluations: usize,
}

/// Bisect over amplitudes A of θ0 = A·shape for the largest A whose run has
/// E_K ≤ `tol` on the whole run mapped to [−2, 0].
pub fn smallness_threshold(
    shape: &SpectralField,
    cfg: &SolverConfig,
    levels: usize,
    tol: f64,
    rel_tol: f64,
) -> Result<SmallnessThreshold> {
    let grid = shape.basis().fine_grid().clone();
    let probe = |a: f64| -> Result<(bool, f64)> {
        let rec = run(&shape.scaled(a), cfg)?;
        if let Some(msg) = &rec.aborted {
            return Err(Error::InvalidArgument(format!("run at amplitude {a} aborted: {msg}")));
        }
        let s = SpaceTimeSamples::from_record(&rec, 0.0, cfg.t_end, &grid)?.normalized(2.0);
        let l = ladder(&s, levels)?;
        Ok((l.energies[levels] <= tol, l.energies[0]))
    };
    let sup = crate::eigenbasis::sup_norm(shape);
    if sup == 0.0 {
        return Err(Error::InvalidArgument("shape is identically zero".into()));
    }
    let mut evals = 0;
    let (mut lo, mut lo_e0) = (0.0, 0.0);
    let mut hi = 1.0 / sup;
    loop {
        evals += 1;
        let (ok, e0) = probe(hi)?;
        if !ok {
            break;
        }
        (lo, lo_e0) = (hi, e0);
        hi *= 2.0;
        if evals > 60 {
            return Err(Error::InvalidArgument("ladder never exceeds the tolerance".into()));
        }
    }
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        evals += 1;
        let (ok, e0) = probe(mid)?;
        if ok {
            (lo, lo_e0) = (mid, e0);
        } else {
            hi = mid;
        }
    }
    Ok(SmallnessThreshold { amplitude: lo, delta_est: lo_e0, evaluations: evals })
}

#[derive(Clone, Debug, Serialize)]
pub struct Dg1Probe {
    pub delta: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Dg1Report {
    /// ∫_{−2}^0 ∫_{B_2(Γ)} θ₊².
    pub mass: f64,
    /// sup θ over [−1, 0] × B_1(Γ).
    pub sup: f64,
    pub growth_violations: usize,
    /// (t, x, y, excess) of the worst growth violation.
    pub worst_violation: Option<[f64; 4]>,
    pub probes: Vec<Dg1Probe>,
    #[serde(skip)]
    pub report: CheckReport,
}

/// Check "small mass on [−2,0]×B_2 ⇒ θ ≤ 1 on [−1,0]×B_1" along a path,
/// on samples normalized to [−2, 0].
pub fn dg1_empirical(
    samples: &SpaceTimeSamples,
    barrier: &BarrierFn,
    center: &dyn Fn(f64) -> Point,
    probes: &[f64],
) -> Result<Dg1Report> {
    let (first, last) = (samples.times[0], *samples.times.last().expect("nonempty"));
    if first > -2.0 + 1e-12 || last < -1e-12 {
        return Err(Error::OutOfSpan { t: -2.0, t0: first, t1: last });
    }
    let grid = &samples.grid;
    let pts = grid.points();
    let mut mass_t = Vec::with_capacity(samples.times.len());
    let mut sup = f64::NEG_INFINITY;
    let mut violations = 0;
    let mut worst: Option<[f64; 4]> = None;
    for (&t, vals) in samples.times.iter().zip(&samples.values) {
        let c = center(t);
        let mut sq = vec![0.0; vals.len()];
        for (i, (&p, &v)) in pts.iter().zip(vals).enumerate() {
            let r = (p[0] - c[0]).hypot(p[1] - c[1]);
            if r <= 2.0 {
                sq[i] = v.max(0.0).powi(2);
            }
            if r <= 1.0 && t >= -1.0 {
                sup = sup.max(v);
            }
            if r > barrier.r_out() {
                let excess = v - barrier.radial(r);
                if excess > 1e-12 {
                    violations += 1;
                    if worst.map_or(true, |w| excess > w[3]) {
                        worst = Some([t, p[0], p[1], excess]);
                    }
                }
            }
        }
        mass_t.push(grid.integrate(&sq));
    }
    let mass = samples.time_integral(&mass_t, -2.0);
    if sup == f64::NEG_INFINITY {
        sup = 0.0;
    }
    let probes: Vec<Dg1Probe> =
        probes.iter().map(|&delta| Dg1Probe { delta, holds: mass > delta || sup <= 1.0 + 1e-12 }).collect();
    let mut report = CheckReport::new("first De Giorgi lemma (empirical)");
    report.metric("mass", mass).metric("sup", sup).metric("growth_violations", violations as f64);
    if let Some(w) = worst {
        report.warn(format!(
            "growth hypothesis violated at t = {}, x = ({}, {}) by {:.3e}",
            w[0], w[1], w[2], w[3]
        ));
    }
    report.require("implication holds at every probe", probes.iter().all(|p| p.holds));
    Ok(Dg1Report { mass, sup, growth_violations: violations, worst_violation: worst, probes, report })
}

/// Measures of the three sets in the second De Giorgi lemma's trichotomy
/// around a fixed center, on samples normalized to [−4, 0].
#[derive(Clone, Debug, Serialize)]
pub struct Trichotomy {
    /// |{θ ≥ 1} ∩ [−2,0]×B_2|
    pub above: f64,
    /// |{0 < θ < 1} ∩ [−4,0]×B_4|
    pub between: f64,
    /// |{θ ≤ 0} ∩ [−4,0]×B_4|
    pub below: f64,
}

pub fn level_set_trichotomy(samples: &SpaceTimeSamples, center: Point) -> Trichotomy {
    let pts = samples.grid.points();
    let measure = |radius: f64, from: f64, pred: &dyn Fn(f64) -> bool| {
        let g: Vec<f64> = samples
            .values
            .iter()
            .map(|v| {
                let ind: Vec<f64> = pts
                    .iter()
                    .zip(v)
                    .map(|(p, &f)| {
                        let inside = (p[0] - center[0]).hypot(p[1] - center[1]) <= radius;
                        if inside && pred(f) {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect();
                samples.grid.integrate(&ind)
            })
            .collect();
        samples.time_integral(&g, from)
    };
    Trichotomy {
        above: measure(2.0, -2.0, &|f| f >= 1.0),
        between: measure(4.0, -4.0, &|f| f > 0.0 && f < 1.0),
        below: measure(4.0, -4.0, &|f| f <= 0.0),
    }
}

#[cfg(test)]
mod tests;
