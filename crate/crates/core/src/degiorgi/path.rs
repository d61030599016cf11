//! Lagrangian paths of low-pass velocities and the level-by-level
//! correction recursion used when zooming.

use std::sync::Arc;

use serde::Serialize;

use crate::eigenbasis::{perp_gradient_on, DomainSpec, Grid, Point, SpectralField};
use crate::error::{Error, Result};
use crate::lpcalib::{calibrate, LpBump};
use crate::report::CheckReport;
use crate::solver::TrajectoryRecord;

type VelocityFn = dyn Fn(f64, Point) -> [f64; 2] + Send + Sync;

enum Storage {
    /// Nodal values on a tensor grid, bilinear in space.
    Tensor { grid: Arc<Grid>, ux: Vec<Vec<f64>>, uy: Vec<Vec<f64>> },
    /// Stream functions evaluated pointwise (non-tensor domains).
    Stream(Vec<SpectralField>),
    Analytic(Arc<VelocityFn>),
}

/// Time-indexed velocity, linear in time between samples.
pub struct VelocityRecord {
    times: Vec<f64>,
    domain: DomainSpec,
    storage: Storage,
}

impl VelocityRecord {
    /// u = ∇⊥ψ for stream functions ψ sampled at `times`.
    pub fn from_streams(times: Vec<f64>, streams: Vec<SpectralField>) -> Result<Self> {
        if times.is_empty() || times.len() != streams.len() || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("velocity samples need increasing times, one field each".into()));
        }
        let basis = streams[0].basis().clone();
        let domain = *basis.domain();
        if basis.is_disk() {
            return Ok(Self { times, domain, storage: Storage::Stream(streams) });
        }
        let grid = basis.fine_grid().clone();
        let mut ux = Vec::with_capacity(streams.len());
        let mut uy = Vec::with_capacity(streams.len());
        for s in &streams {
            let v = perp_gradient_on(s, &grid)?;
            ux.push(v.x);
            uy.push(v.y);
        }
        Ok(Self { times, domain, storage: Storage::Tensor { grid, ux, uy } })
    }

    pub fn analytic(
        domain: DomainSpec,
        span: (f64, f64),
        f: impl Fn(f64, Point) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        Self { times: vec![span.0, span.1], domain, storage: Storage::Analytic(Arc::new(f)) }
    }

    pub fn zero(domain: DomainSpec, span: (f64, f64)) -> Self {
        Self::analytic(domain, span, |_, _| [0.0, 0.0])
    }

    pub fn span(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().expect("nonempty"))
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    /// Largest nodal speed over all samples (analytic fields report 0).
    pub fn sup_speed(&self) -> f64 {
        match &self.storage {
            Storage::Tensor { ux, uy, .. } => ux
                .iter()
                .zip(uy)
                .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.hypot(*y)))
                .fold(0.0, f64::max),
            Storage::Stream(s) => {
                let g = s[0].basis().fine_grid().clone();
                s.iter()
                    .filter_map(|f| perp_gradient_on(f, &g).ok())
                    .map(|v| v.sup_norm())
                    .fold(0.0, f64::max)
            }
            Storage::Analytic(_) => 0.0,
        }
    }

    pub fn velocity(&self, t: f64, p: Point) -> Result<[f64; 2]> {
        let (t0, t1) = self.span();
        let slack = 1e-12 * t1.abs().max(t0.abs()).max(1.0);
        if t < t0 - slack || t > t1 + slack {
            return Err(Error::OutOfSpan { t, t0, t1 });
        }
        if let Storage::Analytic(f) = &self.storage {
            return Ok(f(t, p));
        }
        let k = self.times.partition_point(|&s| s <= t).clamp(1, self.times.len().max(2) - 1);
        let (ka, kb, w) = if self.times.len() == 1 {
            (0, 0, 0.0)
        } else {
            let (a, b) = (self.times[k - 1], self.times[k]);
            (k - 1, k, ((t - a) / (b - a)).clamp(0.0, 1.0))
        };
        let at = |i: usize| -> [f64; 2] {
            match &self.storage {
                Storage::Tensor { grid, ux, uy } => bilinear(grid, &ux[i], &uy[i], p),
                Storage::Stream(s) => {
                    let j = s[i].jet(p);
                    [-j.dy, j.dx]
                }
                Storage::Analytic(_) => unreachable!(),
            }
        };
        let (a, b) = (at(ka), at(kb));
        Ok([a[0] * (1.0 - w) + b[0] * w, a[1] * (1.0 - w) + b[1] * w])
    }
}

fn bilinear(grid: &Grid, ux: &[f64], uy: &[f64], p: Point) -> [f64; 2] {
    let (nx, ny, hx, hy) = grid.tensor_dims().expect("tensor grid");
    let fx = (p[0] / hx).clamp(0.0, (nx - 1) as f64);
    let fy = (p[1] / hy).clamp(0.0, (ny - 1) as f64);
    let i = (fx.floor() as usize).min(nx - 2);
    let j = (fy.floor() as usize).min(ny - 2);
    let (sx, sy) = (fx - i as f64, fy - j as f64);
    let idx = |i: usize, j: usize| j * nx + i;
    let mix = |v: &[f64]| {
        (1.0 - sx) * (1.0 - sy) * v[idx(i, j)]
            + sx * (1.0 - sy) * v[idx(i + 1, j)]
            + (1.0 - sx) * sy * v[idx(i, j + 1)]
            + sx * sy * v[idx(i + 1, j + 1)]
    };
    [mix(ux), mix(uy)]
}

#[derive(Clone, Debug, Serialize)]
pub struct LagrangianPath {
    /// Increasing sample times; the path ends at the last one.
    pub times: Vec<f64>,
    /// Γ_ℓ at each time.
    pub points: Vec<Point>,
    /// Γ̇_ℓ = u(t, Γ_ℓ) at each time.
    pub velocities: Vec<[f64; 2]>,
    /// γ = Γ_ℓ − Γ against the reference path (a constant for a lone path).
    pub correction: Vec<Point>,
    /// sup |γ̇|.
    pub c_pth: f64,
    /// sup |Γ̇_ℓ|.
    pub speed: f64,
    /// (t, x, y) where the flow pushed the path outside Ω̄ and it was clamped.
    pub clamp_events: Vec<[f64; 3]>,
    /// Difference against the half-step solution, relative to diam Ω.
    pub error_estimate: f64,
}

impl LagrangianPath {
    /// Linear interpolation of Γ_ℓ; times outside the span are clamped.
    pub fn position_at(&self, t: f64) -> Point {
        interp(&self.times, &self.points, t)
    }

    pub fn velocity_at(&self, t: f64) -> [f64; 2] {
        interp(&self.times, &self.velocities, t)
    }
}

fn interp(times: &[f64], vals: &[[f64; 2]], t: f64) -> [f64; 2] {
    if times.len() == 1 || t <= times[0] {
        return vals[0];
    }
    let k = times.partition_point(|&s| s <= t).min(times.len() - 1);
    let (a, b) = (times[k - 1], times[k]);
    let w = ((t - a) / (b - a)).clamp(0.0, 1.0);
    [vals[k - 1][0] * (1.0 - w) + vals[k][0] * w, vals[k - 1][1] * (1.0 - w) + vals[k][1] * w]
}

struct RawPath {
    times: Vec<f64>,
    points: Vec<Point>,
    clamps: Vec<[f64; 3]>,
}

/// RK4 backward in time from (t_end, end) over `n` steps.
fn rk4_backward(vel: &VelocityRecord, end: Point, t_end: f64, span: f64, n: usize) -> Result<RawPath> {
    let dom = vel.domain();
    let h = -span / n as f64;
    let mut p = end;
    let mut t = t_end;
    let mut times = vec![t];
    let mut points = vec![p];
    let mut clamps = Vec::new();
    let keep = |q: Point, t: f64, clamps: &mut Vec<[f64; 3]>| -> Point {
        let c = dom.clamp(q);
        if (c[0] - q[0]).hypot(c[1] - q[1]) > 1e-12 * dom.diameter() {
            clamps.push([t, q[0], q[1]]);
        }
        c
    };
    for step in 1..=n {
        let k1 = vel.velocity(t, p)?;
        let q2 = keep([p[0] + 0.5 * h * k1[0], p[1] + 0.5 * h * k1[1]], t + 0.5 * h, &mut clamps);
        let k2 = vel.velocity(t + 0.5 * h, q2)?;
        let q3 = keep([p[0] + 0.5 * h * k2[0], p[1] + 0.5 * h * k2[1]], t + 0.5 * h, &mut clamps);
        let k3 = vel.velocity(t + 0.5 * h, q3)?;
        let q4 = keep([p[0] + h * k3[0], p[1] + h * k3[1]], t + h, &mut clamps);
        let k4 = vel.velocity(t + h, q4)?;
        let next = [
            p[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            p[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        t = t_end - span * step as f64 / n as f64;
        p = keep(next, t, &mut clamps);
        times.push(t);
        points.push(p);
    }
    times.reverse();
    points.reverse();
    Ok(RawPath { times, points, clamps })
}

const PATH_TOL: f64 = 1e-6;
const MAX_PATH_STEPS: usize = 1 << 16;

/// Γ̇_ℓ = u(t, Γ_ℓ) on [t_end − span, t_end] with Γ_ℓ(t_end) = `end`. Steps
/// are doubled until two successive solutions agree to 1e-6·diam Ω.
pub fn integrate_path(vel: &VelocityRecord, end: Point, t_end: f64, span: f64) -> Result<LagrangianPath> {
    if !(span > 0.0) {
        return Err(Error::InvalidArgument(format!("path span must be positive, got {span}")));
    }
    let (t0, t1) = vel.span();
    let slack = 1e-12 * t1.abs().max(1.0);
    if t_end - span < t0 - slack || t_end > t1 + slack {
        return Err(Error::OutOfSpan { t: t_end - span, t0, t1 });
    }
    let diam = vel.domain().diameter();
    let mut n = 16;
    let mut coarse = rk4_backward(vel, end, t_end, span, n)?;
    let (fine, err) = loop {
        let fine = rk4_backward(vel, end, t_end, span, 2 * n)?;
        let err = coarse
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let q = fine.points[2 * i];
                (p[0] - q[0]).hypot(p[1] - q[1])
            })
            .fold(0.0, f64::max)
            / diam;
        n *= 2;
        if err <= PATH_TOL || n >= MAX_PATH_STEPS {
            break (fine, err);
        }
        coarse = fine;
    };
    let velocities = fine.times.iter().zip(&fine.points).map(|(&t, &p)| vel.velocity(t, p)).collect::<Result<Vec<_>>>()?;
    let speed = velocities.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max);
    let correction = fine.points.iter().map(|p| [p[0] - end[0], p[1] - end[1]]).collect();
    Ok(LagrangianPath {
        times: fine.times,
        points: fine.points,
        velocities,
        correction,
        c_pth: speed,
        speed,
        clamp_events: fine.clamps,
        error_estimate: err,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaRecursion {
    /// Level-k path in original coordinates, spanning eps^k·span.
    pub paths: Vec<LagrangianPath>,
    /// sup |γ̇_k| per level.
    pub gamma_dot_sup: Vec<f64>,
    pub kappa: f64,
    /// −κ log₂(ε) e^{10εκ}.
    pub bound: f64,
    #[serde(skip)]
    pub report: CheckReport,
}

/// Level paths and corrections. Level k follows `levels[k]` over the last
/// eps^k·span of time ending at (t_end, end); γ_k is its deviation from the
/// level-(k−1) path (from the fixed end point for k = 0). In zoomed units
/// γ̇_k is the velocity difference, which scaling leaves unchanged.
pub fn gamma_recursion(
    levels: &[VelocityRecord],
    end: Point,
    t_end: f64,
    span: f64,
    eps: f64,
    kappa: f64,
) -> Result<GammaRecursion> {
    if !(eps > 0.0 && eps <= 0.2) {
        return Err(Error::InvalidArgument(format!("zoom factor must lie in (0, 1/5], got {eps}")));
    }
    if levels.is_empty() {
        return Err(Error::InvalidArgument("no velocity levels".into()));
    }
    let mut paths: Vec<LagrangianPath> = Vec::with_capacity(levels.len());
    let mut sups = Vec::with_capacity(levels.len());
    for (k, vel) in levels.iter().enumerate() {
        let mut p = integrate_path(vel, end, t_end, span * eps.powi(k as i32))?;
        if let Some(ev) = p.clamp_events.first() {
            return Err(Error::PathExit { level: k, t: ev[0] });
        }
        if let Some(prev) = paths.last() {
            let mut c = 0.0f64;
            for i in 0..p.times.len() {
                let t = p.times[i];
                let (q, v) = (prev.position_at(t), prev.velocity_at(t));
                p.correction[i] = [p.points[i][0] - q[0], p.points[i][1] - q[1]];
                c = c.max((p.velocities[i][0] - v[0]).hypot(p.velocities[i][1] - v[1]));
            }
            p.c_pth = c;
        }
        sups.push(p.c_pth);
        paths.push(p);
    }
    let bound = -kappa * eps.log2() * (10.0 * eps * kappa).exp();
    let worst = sups.iter().copied().fold(0.0, f64::max);
    let mut report = CheckReport::new("path corrections");
    report.metric("kappa", kappa).metric("bound", bound).metric("max_gamma_dot", worst);
    for (k, s) in sups.iter().enumerate() {
        report.metric(&format!("gamma_dot_level_{k}"), *s);
    }
    report.require("|gamma'_k| within the Gronwall bound", worst <= bound * (1.0 + 1e-12));
    Ok(GammaRecursion { paths, gamma_dot_sup: sups, kappa, bound, report })
}

/// Low-pass velocities per zoom level from calibrated snapshots of the
/// record on [t_end − span, t_end]: level k keeps bands up to the final
/// snapshot's center plus k·log₂(1/ε). Returns the levels and max κ.
pub fn low_pass_levels(
    rec: &TrajectoryRecord,
    t_end: f64,
    span: f64,
    eps: f64,
    levels: usize,
    bump: &LpBump,
) -> Result<(Vec<VelocityRecord>, f64)> {
    let start = t_end - span;
    let mut snaps: Vec<(f64, SpectralField)> = Vec::new();
    let slack = 1e-12 * t_end.abs().max(1.0);
    if !rec.entries.iter().any(|e| (e.t - start).abs() <= slack) {
        snaps.push((start, rec.theta_at(start)?));
    }
    for e in rec.entries.iter().filter(|e| e.t >= start - slack && e.t <= t_end + slack) {
        snaps.push((e.t, e.theta.clone()));
    }
    if !rec.entries.iter().any(|e| (e.t - t_end).abs() <= slack) {
        snaps.push((t_end, rec.theta_at(t_end)?));
    }
    let decomps = snaps.iter().map(|(_, th)| calibrate(th, bump)).collect::<Result<Vec<_>>>()?;
    let kappa = decomps.iter().map(|d| d.kappa).fold(0.0, f64::max);
    let n0 = decomps.last().expect("at least two snapshots").center;
    let shift = (1.0 / eps).log2().floor() as i32;
    let times: Vec<f64> = snaps.iter().map(|(t, _)| *t).collect();
    let out = (0..=levels)
        .map(|k| {
            let streams = decomps.iter().map(|d| d.low_stream(n0 + k as i32 * shift)).collect();
            VelocityRecord::from_streams(times.clone(), streams)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((out, kappa))
}
