//! Numerical checks of the barrier inequality and the Hölder interpolation
//! inequalities used in the iteration.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::eigenbasis::{Deriv, Point, SpectralField};
use crate::error::{Error, Result};
use crate::report::CheckReport;

const Q: f64 = 1.189_207_115_002_721; // 2^{1/4}

/// (|(z−1)/ε + 3|^{1/4} − 2^{1/4})₊ − α(|z|^{1/4} − 2^{1/4})₊
pub fn barrier_gap(alpha: f64, eps: f64, z: f64) -> f64 {
    let lead = (((z - 1.0) / eps + 3.0).abs().powf(0.25) - Q).max(0.0);
    lead - alpha * (z.abs().powf(0.25) - Q).max(0.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct BarrierLemma {
    /// Reported α, midway between 1 and the largest admissible value.
    pub alpha: f64,
    /// min over z and ε of the gap at the reported α.
    pub lambda_bar: f64,
    /// Largest α with a positive minimum (capped by the large-z tail).
    pub alpha_max: f64,
    /// Best (α, min gap) over a uniform α grid in (1, α_max).
    pub grid_best: (f64, f64),
    /// Leading coefficient 2^{1/4} − α of the gap as z → ∞ at ε = ½.
    pub tail_coefficient: f64,
    pub zmax: f64,
    pub eps_checked: Vec<f64>,
    #[serde(skip)]
    pub report: CheckReport,
}

/// Minimum over [1, zmax] of the gap: log-spaced scan, then golden-section
/// refinement around the smallest node.
fn min_over_z(alpha: f64, eps: f64, zmax: f64, n: usize) -> (f64, f64) {
    let z_at = |i: usize| zmax.powf(i as f64 / (n - 1) as f64);
    let (mut bi, mut bv) = (0, f64::INFINITY);
    for i in 0..n {
        let v = barrier_gap(alpha, eps, z_at(i));
        if v < bv {
            (bi, bv) = (i, v);
        }
    }
    let (mut a, mut b) = (z_at(bi.saturating_sub(1)), z_at((bi + 1).min(n - 1)));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let (c, d) = (b - g * (b - a), a + g * (b - a));
        if barrier_gap(alpha, eps, c) < barrier_gap(alpha, eps, d) {
            b = d;
        } else {
            a = c;
        }
    }
    let zm = 0.5 * (a + b);
    let vm = barrier_gap(alpha, eps, zm);
    if vm < bv {
        (zm, vm)
    } else {
        (z_at(bi), bv)
    }
}

fn min_over_all(alpha: f64, eps: &[f64], zmax: f64, n: usize) -> f64 {
    eps.iter().map(|&e| min_over_z(alpha, e, zmax, n).1).fold(f64::INFINITY, f64::min)
}

/// Find α > 1 and λ̄ > 0 with gap ≥ λ̄ on [1, zmax] for every ε in (0, ½].
pub fn verify_barrier_lemma(zmax: f64, n_z: usize) -> Result<BarrierLemma> {
    if !(zmax >= 10.0) || n_z < 16 {
        return Err(Error::InvalidArgument(format!("need zmax >= 10 and at least 16 nodes, got {zmax}, {n_z}")));
    }
    let eps_checked = vec![0.5, 0.4, 0.25, 0.1, 0.01, 1e-4];
    // The large-z tail forces α < 2^{1/4}; the minimum decreases in α.
    let (mut lo, mut hi) = (1.0, Q);
    if min_over_all(hi, &eps_checked, zmax, n_z) > 0.0 {
        lo = hi;
    } else {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if min_over_all(mid, &eps_checked, zmax, n_z) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let alpha_max = lo;
    let alpha = 0.5 * (1.0 + alpha_max);
    let lambda_bar = min_over_all(alpha, &eps_checked, zmax, n_z);
    let grid_best = (1..20)
        .map(|i| {
            let a = 1.0 + (alpha_max - 1.0) * i as f64 / 20.0;
            (a, min_over_all(a, &eps_checked, zmax, n_z))
        })
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .expect("nonempty grid");
    let tail_coefficient = Q - alpha;

    let mut report = CheckReport::new("barrier lemma");
    report
        .metric("alpha", alpha)
        .metric("lambda_bar", lambda_bar)
        .metric("alpha_max", alpha_max)
        .metric("grid_best_alpha", grid_best.0)
        .metric("grid_best_lambda", grid_best.1)
        .metric("tail_coefficient", tail_coefficient)
        .metric("zmax", zmax);
    report.note("the minimum gap decreases in alpha, so the max-min choice tends to alpha -> 1");
    report.require("alpha > 1", alpha > 1.0);
    report.require("lambda_bar > 0", lambda_bar > 0.0);
    report.require("gap grows at large z", tail_coefficient > 0.0);
    Ok(BarrierLemma { alpha, lambda_bar, alpha_max, grid_best, tail_coefficient, zmax, eps_checked, report })
}

/// Values and gradients of a function at scattered points of a convex domain.
#[derive(Clone, Debug)]
pub struct InterpolationSamples {
    pub points: Vec<Point>,
    pub values: Vec<f64>,
    pub gradients: Vec<[f64; 2]>,
    /// Inradius of the domain, the largest scale δ tried.
    pub inradius: f64,
}

impl InterpolationSamples {
    /// Samples of a spectral field on its basis grid of the given density.
    pub fn from_field(f: &SpectralField, density: usize) -> Result<Self> {
        let basis = f.basis();
        let grid = basis.make_grid(density);
        Ok(Self {
            points: grid.points().to_vec(),
            values: f.eval_on(&grid, Deriv::Value)?,
            gradients: f
                .eval_on(&grid, Deriv::Dx)?
                .into_iter()
                .zip(f.eval_on(&grid, Deriv::Dy)?)
                .map(|(x, y)| [x, y])
                .collect(),
            inradius: basis.domain().inradius(),
        })
    }

    pub fn from_fn(
        points: Vec<Point>,
        inradius: f64,
        f: impl Fn(Point) -> f64,
        grad: impl Fn(Point) -> [f64; 2],
    ) -> Self {
        Self {
            values: points.iter().map(|&p| f(p)).collect(),
            gradients: points.iter().map(|&p| grad(p)).collect(),
            points,
            inradius,
        }
    }
}

const PAIR_POINTS: usize = 2000;

/// ([f]_α, [∇f]_α) over all pairs of the given indices.
fn holder_pairs(s: &InterpolationSamples, idx: &[usize], alpha: f64) -> (f64, f64) {
    let (mut hf, mut hg) = (0.0f64, 0.0f64);
    for (a, &i) in idx.iter().enumerate() {
        let (p, fi, gi) = (s.points[i], s.values[i], s.gradients[i]);
        for &j in &idx[a + 1..] {
            let q = s.points[j];
            let d = (p[0] - q[0]).hypot(p[1] - q[1]);
            if d == 0.0 {
                continue;
            }
            let w = d.powf(-alpha);
            hf = hf.max((fi - s.values[j]).abs() * w);
            let gj = s.gradients[j];
            hg = hg.max((gi[0] - gj[0]).hypot(gi[1] - gj[1]) * w);
        }
    }
    (hf, hg)
}

/// Check [f]_α ≤ 2^{1−α}‖f‖^{1−α}‖∇f‖^α and fit the constant in
/// ‖∇f‖ ≤ C(δ^{−1}‖f‖ + δ^α[∇f]_α) over dyadic δ up to the inradius.
pub fn verify_interpolation(s: &InterpolationSamples, alpha: f64, seed: u64) -> Result<CheckReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("Hölder exponent must lie in (0, 1), got {alpha}")));
    }
    let n = s.points.len();
    if n < 2 || s.values.len() != n || s.gradients.len() != n {
        return Err(Error::InvalidArgument("need at least two consistent samples".into()));
    }
    let sup_f = s.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let sup_g = s.gradients.iter().fold(0.0f64, |a, g| a.max(g[0].hypot(g[1])));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, n, n.min(PAIR_POINTS)).into_vec();
    idx.sort_unstable();
    let (hf, hg) = holder_pairs(s, &idx, alpha);
    let half: Vec<usize> = idx.iter().copied().step_by(2).collect();
    let (hf_half, hg_half) = holder_pairs(s, &half, alpha);

    let bound = 2f64.powf(1.0 - alpha) * sup_f.powf(1.0 - alpha) * sup_g.powf(alpha);
    let ratio = if bound > 0.0 { hf / bound } else { 0.0 };
    let c_fit = (0..=12)
        .map(|i| {
            let delta = s.inradius * 0.5f64.powi(i);
            let den = sup_f / delta + delta.powf(alpha) * hg;
            if den > 0.0 {
                sup_g / den
            } else {
                0.0
            }
        })
        .fold(0.0f64, f64::max);

    let mut r = CheckReport::new("Hölder interpolation");
    r.metric("alpha", alpha)
        .metric("sup_f", sup_f)
        .metric("sup_grad", sup_g)
        .metric("holder_f", hf)
        .metric("holder_grad", hg)
        .metric("holder_bound", bound)
        .metric("holder_ratio", ratio)
        .metric("c_fit", c_fit)
        .metric("refinement_change_f", rel_change(hf, hf_half))
        .metric("refinement_change_grad", rel_change(hg, hg_half));
    r.require("[f]_a within 2^(1-a) |f|^(1-a) |grad f|^a", hf <= bound * (1.0 + 1e-9));
    r.require("interpolation constant is finite", c_fit.is_finite());
    Ok(r)
}

fn rel_change(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        (a - b).abs() / a
    }
}
