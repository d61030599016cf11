//! Heat kernels and the interaction/boundary kernels of the spectral fractional
//! Laplacian obtained by subordination:
//!
//!   K_{2s}(x,y) = |Γ(−s)|⁻¹ ∫ p_t(x,y) t^{−1−s} dt
//!   B_{2s}(x)   = |Γ(−s)|⁻¹ ∫ (1 − ∫_Ω p_t(x,y) dy) t^{−1−s} dt
//!
//! so that ∫Λ^s f Λ^s g = ½∬(f(x)−f(y))(g(x)−g(y))K_{2s} + ∫ f g B_{2s}.
//!
//! On rectangles the heat kernel factorises into two interval kernels, each
//! summed exactly (images for small t, eigenfunctions for large t), so kernels
//! are available at any separation. On disks the truncated eigen-sum is used
//! together with the free-space Gaussian where the boundary is invisible.

mod bilinear;
pub mod heat;

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

pub use bilinear::{verify_bilinear_identity, BilinearOptions};
pub use heat::{heat_kernel, heat_kernel_spectral, survival};

use crate::eigenbasis::{DomainSpec, EigenBasis, Point};
use crate::error::{Error, Result};
use crate::report::CheckReport;
use crate::special::{abs_gamma_neg, free_space_constant, gauss_legendre_on};

/// Panels of 64-point Gauss–Legendre in u = ln t over [a, b].
fn log_panels(f: &impl Fn(f64) -> f64, s: f64, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let w = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * w;
        let (u, wt) = gauss_legendre_on(64, lo, lo + w);
        for (u, wt) in u.iter().zip(&wt) {
            let t = u.exp();
            total += wt * f(t) * (-s * u).exp();
        }
    }
    total
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadratureMeta {
    pub t_lo: f64,
    pub t_split: f64,
    pub t_hi: f64,
    pub panels: usize,
    pub converged: bool,
}

/// ∫_{t_lo}^{t_hi} F(t) t^{−1−s} dt, split at t_split, panels doubled until
/// the relative change drops below `tol`.
fn subordinate(
    f: impl Fn(f64) -> f64,
    s: f64,
    t_lo: f64,
    t_split: f64,
    t_hi: f64,
    tol: f64,
) -> (f64, QuadratureMeta) {
    let (a, m, b) = (t_lo.ln(), t_split.ln(), t_hi.ln());
    let eval = |n: usize| log_panels(&f, s, a, m, n) + log_panels(&f, s, m, b, n);
    let mut n = 1;
    let mut prev = eval(n);
    let mut converged = false;
    while n < 64 {
        n *= 2;
        let cur = eval(n);
        let change = (cur - prev).abs();
        prev = cur;
        if change <= tol * cur.abs() {
            converged = true;
            break;
        }
    }
    let meta = QuadratureMeta { t_lo, t_split, t_hi, panels: n, converged };
    (prev, meta)
}

fn check_s(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("s must lie in (0,1), got {s}")))
    }
}

/// Relative tolerance of the t-quadrature.
pub const QUAD_TOL: f64 = 1e-6;

/// K_{2s}(x, y) for x ≠ y.
pub fn kernel_k(basis: &EigenBasis, s: f64, x: Point, y: Point) -> Result<f64> {
    Ok(kernel_k_meta(basis, s, x, y)?.0)
}

pub fn kernel_k_meta(basis: &EigenBasis, s: f64, x: Point, y: Point) -> Result<(f64, QuadratureMeta)> {
    check_s(s)?;
    let r2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
    if r2 == 0.0 {
        return Err(Error::InvalidArgument("K is singular at x = y".into()));
    }
    let t_hi = r2.max(40.0 / basis.lambda0());
    // Probe the full t-range once so truncation errors surface as errors.
    heat_kernel(basis, r2 / 160.0, x, y)?;
    let (v, meta) = subordinate(
        |t| heat_kernel(basis, t, x, y).unwrap_or(f64::NAN),
        s,
        r2 / 160.0,
        r2,
        t_hi,
        QUAD_TOL,
    );
    if v.is_nan() {
        return Err(Error::InsufficientTruncation(format!(
            "heat kernel unavailable on the t-range of |x−y| = {:.3e}",
            r2.sqrt()
        )));
    }
    Ok((v / abs_gamma_neg(s), meta))
}

/// B_{2s}(x) for interior x.
pub fn kernel_b(basis: &EigenBasis, s: f64, x: Point) -> Result<f64> {
    check_s(s)?;
    let d = basis.domain().distance_to_boundary(x);
    if d <= 0.0 {
        return Err(Error::InvalidArgument("B is defined at interior points only".into()));
    }
    let d2 = d * d;
    let t_hi = d2.max(40.0 / basis.lambda0());
    survival(basis, d2 / 160.0, x)?;
    let (v, _) = subordinate(
        |t| 1.0 - survival(basis, t, x).unwrap_or(f64::NAN),
        s,
        d2 / 160.0,
        d2,
        t_hi,
        QUAD_TOL,
    );
    if v.is_nan() {
        return Err(Error::InsufficientTruncation("survival probability unavailable".into()));
    }
    // Beyond t_hi the survival probability is below e^{-40}.
    let tail = t_hi.powf(-s) / s;
    Ok((v + tail) / abs_gamma_neg(s))
}

#[derive(Clone, Debug, Serialize)]
pub struct PairSample {
    pub x: Point,
    pub y: Point,
    pub dist: f64,
    pub k: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundarySample {
    pub x: Point,
    pub b: f64,
}

/// Sampled K_{2s} and B_{2s} values.
#[derive(Clone, Debug, Serialize)]
pub struct KernelTable {
    pub s: f64,
    pub pairs: Vec<PairSample>,
    pub boundary_samples: Vec<BoundarySample>,
    pub quadrature: String,
    #[serde(skip)]
    pub basis: Option<Arc<EigenBasis>>,
}

impl KernelTable {
    /// Evaluate kernels at the given pairs and points (in parallel).
    pub fn build(basis: &Arc<EigenBasis>, s: f64, pairs: &[(Point, Point)], points: &[Point]) -> Result<Self> {
        check_s(s)?;
        let pairs = pairs
            .par_iter()
            .map(|&(x, y)| {
                let k = kernel_k(basis, s, x, y)?;
                Ok(PairSample { x, y, dist: (x[0] - y[0]).hypot(x[1] - y[1]), k })
            })
            .collect::<Result<Vec<_>>>()?;
        let boundary_samples = points
            .par_iter()
            .map(|&x| Ok(BoundarySample { x, b: kernel_b(basis, s, x)? }))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            s,
            pairs,
            boundary_samples,
            quadrature: format!(
                "64-point Gauss-Legendre panels in ln t, split at |x-y|^2, doubled to rel. change {QUAD_TOL:e}"
            ),
            basis: Some(basis.clone()),
        })
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["s", "x1", "x2", "y1", "y2", "dist", "K", "K_times_dist_pow"])?;
        for p in &self.pairs {
            let scaled = p.k * p.dist.powf(2.0 + 2.0 * self.s);
            wtr.write_record(
                [self.s, p.x[0], p.x[1], p.y[0], p.y[1], p.dist, p.k, scaled].map(|v| v.to_string()),
            )?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Halton point in [0,1)² for index i ≥ 1.
pub fn halton(i: usize) -> [f64; 2] {
    let radical = |mut n: usize, b: usize| {
        let mut f = 1.0;
        let mut r = 0.0;
        while n > 0 {
            f /= b as f64;
            r += f * (n % b) as f64;
            n /= b;
        }
        r
    };
    [radical(i, 2), radical(i, 3)]
}

/// Map a unit-square point into the domain (area-preserving map for disks).
pub fn to_domain(domain: &DomainSpec, u: [f64; 2]) -> Point {
    match domain.sides() {
        Some((lx, ly)) => [u[0] * lx, u[1] * ly],
        None => {
            let r = domain.radius().unwrap() * u[0].sqrt();
            let phi = 2.0 * std::f64::consts::PI * u[1];
            [r * phi.cos(), r * phi.sin()]
        }
    }
}

/// Quasi-random pairs whose points keep at least `margin` from the boundary
/// and whose separation is at least `min_dist`.
pub fn quasi_random_pairs(domain: &DomainSpec, count: usize, margin: f64, min_dist: f64) -> Vec<(Point, Point)> {
    let mut out = Vec::with_capacity(count);
    let mut i = 1;
    while out.len() < count && i < 200 * count + 1000 {
        let x = to_domain(domain, halton(i));
        let y = to_domain(domain, halton(i + 7919));
        i += 1;
        let ok = domain.distance_to_boundary(x) >= margin
            && domain.distance_to_boundary(y) >= margin
            && (x[0] - y[0]).hypot(x[1] - y[1]) >= min_dist;
        if ok {
            out.push((x, y));
        }
    }
    out
}

/// Interior tensor points plus a boundary-layer sheet at distances h, 2h, 4h.
pub fn default_sample_points(domain: &DomainSpec, n: usize, h: f64) -> Vec<Point> {
    let mut pts = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let u = [(i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64];
            let p = to_domain(domain, u);
            if domain.distance_to_boundary(p) > 0.0 {
                pts.push(p);
            }
        }
    }
    let c = domain.center();
    for &d in &[h, 2.0 * h, 4.0 * h] {
        match domain.sides() {
            Some((lx, ly)) => {
                for k in 1..n {
                    let a = k as f64 / n as f64;
                    pts.push([a * lx, d]);
                    pts.push([d, a * ly]);
                }
            }
            None => {
                let r = domain.radius().unwrap() - d;
                for k in 0..2 * n {
                    let phi = std::f64::consts::PI * k as f64 / n as f64;
                    pts.push([c[0] + r * phi.cos(), c[1] + r * phi.sin()]);
                }
            }
        }
    }
    pts
}

/// sup K_{2s}·|x−y|^{2+2s} over the table, against twice the free-space constant.
pub fn verify_upper_bound(table: &KernelTable) -> CheckReport {
    let mut r = CheckReport::new(format!("kernel upper bound, s = {}", table.s));
    let c = free_space_constant(table.s);
    r.metric("free_space_constant", c);
    if table.pairs.is_empty() {
        r.warn("empty sample set: bound holds vacuously");
        return r;
    }
    let sup = table
        .pairs
        .iter()
        .map(|p| p.k * p.dist.powf(2.0 + 2.0 * table.s))
        .fold(0.0, f64::max);
    let min_k = table.pairs.iter().map(|p| p.k).fold(f64::INFINITY, f64::min);
    let min_b = table.boundary_samples.iter().map(|p| p.b).fold(f64::INFINITY, f64::min);
    r.metric("sup_K_times_dist_pow", sup);
    r.metric("min_K", min_k);
    if min_b.is_finite() {
        r.metric("min_B", min_b);
        r.require("B >= -1e-12", min_b >= -1e-12);
    }
    r.require("sup finite", sup.is_finite());
    r.require("sup <= 2 x free-space constant", sup <= 2.0 * c);
    r.require("K >= -1e-12", min_k >= -1e-12);
    r
}

#[derive(Clone, Debug, Serialize)]
pub struct DomainConstant {
    pub c_dmn: f64,
    pub s_from: f64,
    pub s_to: f64,
    pub sample_count: usize,
    pub skipped: usize,
    pub max_ratio_location: (Point, Point),
    /// Same constant on the dilated domain 2Ω with dilated pairs.
    pub c_dmn_rescaled: f64,
    pub rescale_ratio: f64,
    /// sup |x−y|^{3/4} K_1 / K_{1/4}: the reverse comparison between orders.
    pub reverse_sup: f64,
    pub label: String,
}

fn order_ratio_max(
    basis: &EigenBasis,
    pairs: &[(Point, Point)],
    s_small: f64,
    s_big: f64,
) -> Result<(f64, usize, (Point, Point), f64)> {
    let exponent = 2.0 * (s_big - s_small);
    let vals = pairs
        .par_iter()
        .map(|&(x, y)| {
            let a = kernel_k(basis, s_small, x, y)?;
            let b = kernel_k(basis, s_big, x, y)?;
            Ok((a, b, (x[0] - y[0]).hypot(x[1] - y[1])))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0.0;
    let mut loc = pairs.first().copied().unwrap_or(([0.0; 2], [0.0; 2]));
    let mut skipped = 0;
    let mut reverse: f64 = 0.0;
    for (&(a, b, d), &pair) in vals.iter().zip(pairs) {
        if b < 1e-12 * a.abs().max(1e-300) || b <= 0.0 {
            skipped += 1;
            continue;
        }
        let ratio = a / (d.powf(exponent) * b);
        if ratio > best {
            best = ratio;
            loc = pair;
        }
        if a > 0.0 {
            reverse = reverse.max(d.powf(exponent) * b / a);
        }
    }
    Ok((best, skipped, loc, reverse))
}

/// Sampled lower estimate of C_dmn in K_{2s_from}(x,y) ≤ C_dmn |x−y|^{2(s_to−s_from)} K_{2s_to}(x,y),
/// with s_from = 1/8 and s_to = 1/2 for the K_{1/4}–K_1 relation.
pub fn estimate_c_dmn(basis: &Arc<EigenBasis>, s_from: f64, s_to: f64, pairs: &[(Point, Point)]) -> Result<DomainConstant> {
    check_s(s_from)?;
    check_s(s_to)?;
    let (c, skipped, loc, reverse) = order_ratio_max(basis, pairs, s_from, s_to)?;
    let dilated = crate::eigenbasis::build_basis(basis.domain().rescale(2.0)?, basis.truncation())?;
    let scaled: Vec<(Point, Point)> =
        pairs.iter().map(|(x, y)| ([2.0 * x[0], 2.0 * x[1]], [2.0 * y[0], 2.0 * y[1]])).collect();
    let (c2, _, _, _) = order_ratio_max(&dilated, &scaled, s_from, s_to)?;
    Ok(DomainConstant {
        c_dmn: c,
        s_from,
        s_to,
        sample_count: pairs.len(),
        skipped,
        max_ratio_location: loc,
        c_dmn_rescaled: c2,
        rescale_ratio: c / c2,
        reverse_sup: reverse,
        label: "sampled lower estimate of the true constant".into(),
    })
}

#[cfg(test)]
mod tests;
