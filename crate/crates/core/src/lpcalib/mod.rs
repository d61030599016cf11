//! Littlewood–Paley projections adapted to the Dirichlet eigenbasis, Bernstein
//! and commutator diagnostics, and the calibrated decomposition of the Riesz
//! velocity u = Σ_j ∇⊥Λ⁻¹P_jθ.
//!
//! Band j keeps the multiplier φ(2^{−j}√λ_k), so band j holds frequencies
//! √λ ≈ 2^j. Sup norms, gradients and Λ^{−1/4} of velocity components are
//! evaluated on an extended basis (twice the modes plus one) whose oversampled
//! grid coincides with the density-4 grid of the original rectangle basis.

mod bump;

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

pub use bump::LpBump;

use crate::eigenbasis::{
    build_basis, sobolev_norm, stream_function, sup_norm, Deriv, EigenBasis, Grid, GridField, Jet,
    SpectralField, Truncation, VectorField,
};
use crate::error::{Error, Result};
use crate::report::CheckReport;

/// Lowest band index: P_j = 0 for every j < j_0.
pub fn lowest_band(basis: &EigenBasis) -> i32 {
    basis.lambda0().sqrt().log2().floor() as i32 - 1
}

/// Highest band that can be nonzero for this truncation.
pub fn highest_band(basis: &EigenBasis) -> i32 {
    basis.lambda_max().sqrt().log2().floor() as i32 + 1
}

/// Multiplier of band j at eigenvalue λ.
pub fn band_multiplier(bump: &LpBump, j: i32, lambda: f64) -> f64 {
    bump.phi(2f64.powi(-j) * lambda.sqrt())
}

/// P_j f.
pub fn lp_project(f: &SpectralField, j: i32, bump: &LpBump) -> SpectralField {
    f.map_coeffs(|l, c| c * band_multiplier(bump, j, l))
}

/// Bands in `lowest_band..=highest_band` on which P_j f is not identically zero.
pub fn nonempty_bands(f: &SpectralField, bump: &LpBump) -> Vec<i32> {
    let b = f.basis();
    (lowest_band(b)..=highest_band(b))
        .filter(|&j| lp_project(f, j, bump).coeffs.iter().any(|&c| c != 0.0))
        .collect()
}

/// Random-sign field whose band contents ‖P_j f‖₂ are equal across all
/// nonempty bands (to within 1%), so band-to-band ratio spreads reflect the
/// operators rather than the spectrum of the test field. Bands that only see
/// the spectrum through the far tail of φ (multiplier < 1/2 at every mode)
/// cannot be balanced; modes touching them are left out.
pub fn band_balanced_field(basis: &Arc<EigenBasis>, seed: u64, bump: &LpBump) -> SpectralField {
    let base = SpectralField::random(basis, seed, 0.0).map_coeffs(|_, c| c.signum());
    let bands: Vec<i32> = (lowest_band(basis)..=highest_band(basis)).collect();
    let weights: Vec<Vec<f64>> = basis
        .eigenvalues()
        .iter()
        .map(|&l| bands.iter().map(|&j| band_multiplier(bump, j, l)).collect())
        .collect();
    let degenerate: Vec<bool> = (0..bands.len())
        .map(|b| weights.iter().all(|w| w[b] < 0.5))
        .collect();
    let mut f = base;
    for (c, w) in f.coeffs.iter_mut().zip(&weights) {
        if w.iter().zip(&degenerate).any(|(&wj, &d)| d && wj > 0.0) {
            *c = 0.0;
        }
    }
    for _ in 0..200 {
        let norms: Vec<f64> = bands.iter().map(|&j| lp_project(&f, j, bump).l2_norm()).collect();
        let live: Vec<f64> = norms.iter().copied().filter(|&n| n > 0.0).collect();
        let target = live.iter().map(|n| n.ln()).sum::<f64>() / live.len() as f64;
        let target = target.exp();
        let (lo, hi) = live.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &n| (a.min(n), b.max(n)));
        if hi / lo <= 1.01 {
            break;
        }
        for (c, w) in f.coeffs.iter_mut().zip(&weights) {
            let factor: f64 = w
                .iter()
                .zip(&norms)
                .filter(|(_, &n)| n > 0.0)
                .map(|(wj, n)| wj * target / n)
                .sum();
            *c *= factor;
        }
    }
    let n = f.l2_norm();
    f.scaled(1.0 / n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Norm {
    L2,
    Sup,
}

impl Norm {
    pub fn label(self) -> &'static str {
        match self {
            Norm::L2 => "2",
            Norm::Sup => "inf",
        }
    }
}

fn scalar_norm(f: &SpectralField, p: Norm) -> f64 {
    match p {
        Norm::L2 => f.l2_norm(),
        Norm::Sup => sup_norm(f),
    }
}

/// ‖∇f‖_p: exact H¹ seminorm for p = 2, oversampled-grid max for p = ∞.
fn gradient_norm(f: &SpectralField, p: Norm) -> f64 {
    match p {
        Norm::L2 => sobolev_norm(f, 1.0),
        Norm::Sup => {
            let g = f.basis().fine_grid();
            let dx = f.eval_on(g, Deriv::Dx).expect("own grid");
            let dy = f.eval_on(g, Deriv::Dy).expect("own grid");
            dx.iter().zip(&dy).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BandRatio {
    pub j: i32,
    pub ratio: f64,
    pub gradient_ratio: f64,
}

/// Ratios ‖Λ^α P_j f‖_p/(2^{αj}‖f‖_p) and ‖∇Λ^α P_j f‖_p/(2^{(1+α)j}‖f‖_p)
/// over the nonempty bands in `bands`; PASS if max/min of each family ≤ `slack`.
pub fn bernstein_check(
    f: &SpectralField,
    alpha: f64,
    p: Norm,
    bands: Option<std::ops::RangeInclusive<i32>>,
    bump: &LpBump,
    slack: f64,
) -> Result<CheckReport> {
    let fnorm = scalar_norm(f, p);
    if fnorm == 0.0 {
        return Err(Error::InvalidArgument("Bernstein check needs a nonzero field".into()));
    }
    let mut candidates = nonempty_bands(f, bump);
    if let Some(r) = bands {
        candidates.retain(|j| r.contains(j));
    }
    let rows: Vec<BandRatio> = candidates
        .par_iter()
        .map(|&j| {
            let pj = lp_project(f, j, bump);
            let g = pj.map_coeffs(|l, c| c * l.powf(0.5 * alpha));
            BandRatio {
                j,
                ratio: scalar_norm(&g, p) / (2f64.powf(alpha * j as f64) * fnorm),
                gradient_ratio: gradient_norm(&g, p) / (2f64.powf((1.0 + alpha) * j as f64) * fnorm),
            }
        })
        .collect();
    let mut r = CheckReport::new(format!("Bernstein inequality, alpha = {alpha}, p = {}", p.label()));
    let spread = |v: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = v.fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x), hi.max(x)));
        (lo, hi, hi / lo)
    };
    if rows.is_empty() {
        r.warn("no nonempty band in range: bound holds vacuously");
        return Ok(r);
    }
    let (lo, hi, s1) = spread(&mut rows.iter().map(|b| b.ratio));
    let (glo, ghi, s2) = spread(&mut rows.iter().map(|b| b.gradient_ratio));
    r.metric("bands", rows.len() as f64);
    r.metric("min_ratio", lo);
    r.metric("max_ratio", hi);
    r.metric("ratio_spread", s1);
    r.metric("min_gradient_ratio", glo);
    r.metric("max_gradient_ratio", ghi);
    r.metric("gradient_ratio_spread", s2);
    r.metric("slack", slack);
    r.details = json!({ "bands": rows });
    r.require("ratio spread within slack", s1 <= slack);
    r.require("gradient ratio spread within slack", s2 <= slack);
    Ok(r)
}

/// Shared evaluation machinery: an extended basis whose oversampled grid is
/// where velocity components are sampled and re-analysed.
pub struct VelocitySampler {
    basis: Arc<EigenBasis>,
    ext: Arc<EigenBasis>,
    /// Original-basis grid with the same nodes as `ext_grid` (rectangles).
    same_nodes: Option<Arc<Grid>>,
    ext_grid: Arc<Grid>,
}

impl VelocitySampler {
    pub fn new(basis: &Arc<EigenBasis>) -> Result<Self> {
        let t = basis.truncation();
        let ext = build_basis(*basis.domain(), Truncation::new(2 * t.first + 1, 2 * t.second + 1))?;
        let ext_grid = ext.fine_grid().clone();
        let same_nodes = if basis.is_disk() {
            None
        } else {
            let g = basis.make_grid(4);
            debug_assert_eq!(g.points(), ext_grid.points());
            Some(g)
        };
        Ok(Self { basis: basis.clone(), ext, same_nodes, ext_grid })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.ext_grid
    }

    pub fn extended_basis(&self) -> &Arc<EigenBasis> {
        &self.ext
    }

    /// Value, gradient and Hessian of ψ at every sampling node.
    pub fn jets(&self, psi: &SpectralField) -> Vec<Jet> {
        match &self.same_nodes {
            Some(g) => {
                let ev = |d| psi.eval_on(g, d).expect("own grid");
                let (v, dx, dy) = (ev(Deriv::Value), ev(Deriv::Dx), ev(Deriv::Dy));
                let (dxx, dxy, dyy) = (ev(Deriv::Dxx), ev(Deriv::Dxy), ev(Deriv::Dyy));
                (0..v.len())
                    .map(|i| Jet { v: v[i], dx: dx[i], dy: dy[i], dxx: dxx[i], dxy: dxy[i], dyy: dyy[i] })
                    .collect()
            }
            None => self.ext_grid.points().par_iter().map(|&p| psi.jet(p)).collect(),
        }
    }

    /// Velocity components ∇⊥ψ re-expanded in the extended basis.
    pub fn velocity_coefficients(&self, jets: &[Jet]) -> Result<[SpectralField; 2]> {
        let ux: Vec<f64> = jets.iter().map(|j| -j.dy).collect();
        let uy: Vec<f64> = jets.iter().map(|j| j.dx).collect();
        let a = crate::eigenbasis::analyze(&self.ext, &GridField::new(self.ext_grid.clone(), ux)?)?;
        let b = crate::eigenbasis::analyze(&self.ext, &GridField::new(self.ext_grid.clone(), uy)?)?;
        Ok([a, b])
    }

    pub fn basis(&self) -> &Arc<EigenBasis> {
        &self.basis
    }
}

fn vector_sup(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max)
}

/// Frobenius norm of ∇u for u = ∇⊥ψ: entries (−ψ_xy, −ψ_yy; ψ_xx, ψ_xy).
fn grad_velocity_sup(jets: &[Jet]) -> f64 {
    jets.iter()
        .map(|j| (2.0 * j.dxy * j.dxy + j.dxx * j.dxx + j.dyy * j.dyy).sqrt())
        .fold(0.0, f64::max)
}

fn lambda_quarter_sup(comp: &[SpectralField; 2], grid: &Arc<Grid>) -> Result<(f64, [SpectralField; 2])> {
    let a = comp[0].map_coeffs(|l, c| c * l.powf(-0.125));
    let b = comp[1].map_coeffs(|l, c| c * l.powf(-0.125));
    let sup = vector_sup(&a.eval_on(grid, Deriv::Value)?, &b.eval_on(grid, Deriv::Value)?);
    Ok((sup, [a, b]))
}

/// Ratio ‖P_i ∇P_j f‖_p / (min(2^i, 2^j)‖f‖_p), with ∇P_j f re-expanded in
/// the extended basis before P_i is applied. f = 0 gives ratio 0.
pub fn commutator_ratio(f: &SpectralField, i: i32, j: i32, p: Norm, bump: &LpBump, sampler: &VelocitySampler) -> Result<f64> {
    let fnorm = scalar_norm(f, p);
    if fnorm == 0.0 {
        return Ok(0.0);
    }
    let pj = lp_project(f, j, bump);
    let jets = sampler.jets(&pj);
    // ∇⊥ rotates components, which leaves both norms unchanged; reuse it with ψ = P_j f.
    let [gx, gy] = sampler.velocity_coefficients(&jets)?;
    let (px, py) = (lp_project(&gx, i, bump), lp_project(&gy, i, bump));
    let num = match p {
        Norm::L2 => px.l2_norm().hypot(py.l2_norm()),
        Norm::Sup => {
            let g = sampler.grid();
            vector_sup(&px.eval_on(g, Deriv::Value)?, &py.eval_on(g, Deriv::Value)?)
        }
    };
    Ok(num / (2f64.powi(i.min(j)) * fnorm))
}

/// Single-pair commutator report.
pub fn commutator_check(f: &SpectralField, i: i32, j: i32, p: Norm, bump: &LpBump, slack: f64) -> Result<CheckReport> {
    let sampler = VelocitySampler::new(f.basis())?;
    let ratio = commutator_ratio(f, i, j, p, bump, &sampler)?;
    let mut r = CheckReport::new(format!("commutator bound, i = {i}, j = {j}, p = {}", p.label()));
    r.metric("ratio", ratio);
    r.metric("slack", slack);
    r.require("ratio within slack", ratio <= slack);
    Ok(r)
}

/// Commutator ratios over every pair of nonempty bands.
pub fn commutator_grid(f: &SpectralField, p: Norm, bump: &LpBump, slack: f64) -> Result<CheckReport> {
    let sampler = VelocitySampler::new(f.basis())?;
    let bands = nonempty_bands(f, bump);
    let pairs: Vec<(i32, i32)> = bands.iter().flat_map(|&i| bands.iter().map(move |&j| (i, j))).collect();
    let ratios = pairs
        .par_iter()
        .map(|&(i, j)| commutator_ratio(f, i, j, p, bump, &sampler).map(|r| (i, j, r)))
        .collect::<Result<Vec<_>>>()?;
    let max = ratios.iter().map(|x| x.2).fold(0.0, f64::max);
    let mut r = CheckReport::new(format!("commutator bound over band pairs, p = {}", p.label()));
    r.metric("pairs", ratios.len() as f64);
    r.metric("max_ratio", max);
    r.metric("slack", slack);
    r.details = json!({
        "ratios": ratios.iter().map(|(i, j, v)| json!({"i": i, "j": j, "ratio": v})).collect::<Vec<_>>()
    });
    r.require("all ratios within slack", max <= slack);
    Ok(r)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BandStats {
    pub j: i32,
    pub sup_u: f64,
    pub sup_grad_u: f64,
    pub sup_lam_minus_quarter_u: f64,
}

impl BandStats {
    /// The three Def.-style bound ratios at center `n` with constant `kappa`.
    pub fn ratios(&self, n: i32, kappa: f64) -> [f64; 3] {
        let j = self.j as f64;
        let n = n as f64;
        [
            self.sup_u / kappa,
            2f64.powf(n - j) * self.sup_grad_u / kappa,
            2f64.powf((j - n) / 4.0) * self.sup_lam_minus_quarter_u / kappa,
        ]
    }
    fn kappa_needed(&self, n: i32) -> f64 {
        let [a, b, c] = self.ratios(n, 1.0);
        a.max(b).max(c)
    }
}

struct Band {
    psi: SpectralField,
    lam_quarter: [SpectralField; 2],
}

/// Velocity bands u_j = ∇⊥Λ⁻¹P_jθ with their sup-norm statistics.
pub struct CalibratedDecomposition {
    pub kappa: f64,
    pub center: i32,
    pub j0: i32,
    pub stats: Vec<BandStats>,
    /// Label offset: band label j uses the multiplier of index j − offset.
    pub label_offset: i32,
    pub reconstruction_error: f64,
    bands: Vec<Band>,
    sampler: Arc<VelocitySampler>,
    theta: SpectralField,
}

impl CalibratedDecomposition {
    /// Smallest κ for which every band satisfies the three bounds at center `n`.
    pub fn kappa_at(&self, n: i32) -> f64 {
        self.stats.iter().map(|s| s.kappa_needed(n)).fold(0.0, f64::max)
    }

    /// Center minimising κ over a window around the stored center.
    pub fn best_center(&self) -> (i32, f64) {
        let lo = self.j0 - 20;
        let hi = self.stats.last().map_or(self.j0, |s| s.j) + 20;
        (lo..=hi)
            .map(|n| (n, self.kappa_at(n)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((self.center, self.kappa))
    }

    pub fn theta(&self) -> &SpectralField {
        &self.theta
    }

    pub fn sampler(&self) -> &Arc<VelocitySampler> {
        &self.sampler
    }

    /// Stream function Λ⁻¹P_jθ of band label j.
    pub fn band_stream(&self, j: i32) -> Option<&SpectralField> {
        self.stats.iter().position(|s| s.j == j).map(|k| &self.bands[k].psi)
    }

    /// u_j on the sampling grid.
    pub fn band_velocity(&self, j: i32) -> Option<VectorField> {
        let psi = self.band_stream(j)?;
        let jets = self.sampler.jets(psi);
        Some(jets_to_velocity(self.sampler.grid(), &jets))
    }

    /// Stream function of Σ_{j ≤ n} u_j.
    pub fn low_stream(&self, n: i32) -> SpectralField {
        let mut acc = SpectralField::zeros(self.theta.basis());
        for (s, b) in self.stats.iter().zip(&self.bands) {
            if s.j <= n {
                acc = acc.add(&b.psi).expect("same basis");
            }
        }
        acc
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record([
            "j",
            "sup_u",
            "sup_grad_u",
            "sup_lam_minus_quarter_u",
            "ratio_u",
            "ratio_grad_u",
            "ratio_lam_minus_quarter_u",
        ])?;
        for s in &self.stats {
            let r = s.ratios(self.center, self.kappa);
            wtr.write_record([
                s.j.to_string(),
                s.sup_u.to_string(),
                s.sup_grad_u.to_string(),
                s.sup_lam_minus_quarter_u.to_string(),
                r[0].to_string(),
                r[1].to_string(),
                r[2].to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Re-check the three inequalities on every band with the stored κ.
    pub fn verify(&self) -> CheckReport {
        let mut r = CheckReport::new("calibration inequalities");
        r.metric("kappa", self.kappa);
        r.metric("center", self.center as f64);
        r.metric("j0", self.j0 as f64);
        r.metric("bands", self.stats.len() as f64);
        r.metric("reconstruction_error", self.reconstruction_error);
        let tol = 1.0 + 1e-12;
        let worst = self
            .stats
            .iter()
            .map(|s| s.ratios(self.center, self.kappa).into_iter().fold(0.0, f64::max))
            .fold(0.0, f64::max);
        r.metric("max_ratio", worst);
        r.require("every band within kappa", worst <= tol);
        r.require("reconstruction within 1e-9", self.reconstruction_error <= 1e-9);
        r.details = json!({ "bands": self.stats });
        r
    }
}

fn jets_to_velocity(grid: &Arc<Grid>, jets: &[Jet]) -> VectorField {
    VectorField {
        grid: grid.clone(),
        x: jets.iter().map(|j| -j.dy).collect(),
        y: jets.iter().map(|j| j.dx).collect(),
    }
}

fn decompose(theta: &SpectralField, bump: &LpBump, label_offset: i32, sampler: Arc<VelocitySampler>) -> Result<CalibratedDecomposition> {
    let basis = theta.basis();
    if basis.is_empty() {
        return Err(Error::InvalidArgument("empty spectrum".into()));
    }
    if !theta.coeffs.iter().all(|c| c.is_finite()) {
        return Err(Error::InvalidArgument("theta has non-finite coefficients".into()));
    }
    let psi_full = stream_function(theta);
    let indices: Vec<i32> = (lowest_band(basis)..=highest_band(basis)).collect();
    let built = indices
        .par_iter()
        .map(|&i| -> Result<Option<(BandStats, Band)>> {
            let psi = lp_project(&psi_full, i, bump);
            if psi.coeffs.iter().all(|&c| c == 0.0) {
                return Ok(None);
            }
            let jets = sampler.jets(&psi);
            let sup_u = jets.iter().map(|j| j.dx.hypot(j.dy)).fold(0.0, f64::max);
            let sup_grad_u = grad_velocity_sup(&jets);
            let comps = sampler.velocity_coefficients(&jets)?;
            let (sup_lq, lam_quarter) = lambda_quarter_sup(&comps, sampler.grid())?;
            let stats = BandStats { j: i + label_offset, sup_u, sup_grad_u, sup_lam_minus_quarter_u: sup_lq };
            Ok(Some((stats, Band { psi, lam_quarter })))
        })
        .collect::<Result<Vec<_>>>()?;
    let (stats, bands): (Vec<_>, Vec<_>) = built.into_iter().flatten().unzip();
    // Σ_j ψ_j against Λ⁻¹θ in the H¹ seminorm, i.e. the velocity L² norm.
    let mut sum = SpectralField::zeros(basis);
    for b in &bands {
        sum = sum.add(&b.psi)?;
    }
    let denom = sobolev_norm(&psi_full, 1.0);
    let err = sobolev_norm(&sum.sub(&psi_full)?, 1.0);
    let reconstruction_error = if denom == 0.0 { err } else { err / denom };
    let mut d = CalibratedDecomposition {
        kappa: 0.0,
        center: 0,
        j0: lowest_band(basis) + label_offset,
        stats,
        label_offset,
        reconstruction_error,
        bands,
        sampler,
        theta: theta.clone(),
    };
    d.kappa = d.kappa_at(0);
    Ok(d)
}

/// Calibrated decomposition of ∇⊥Λ⁻¹θ at center 0.
pub fn calibrate(theta: &SpectralField, bump: &LpBump) -> Result<CalibratedDecomposition> {
    let sampler = Arc::new(VelocitySampler::new(theta.basis())?);
    decompose(theta, bump, 0, sampler)
}

#[derive(Clone, Debug, Serialize)]
pub struct RescaleCheck {
    pub eps: f64,
    pub center_original: i32,
    pub center_rescaled: i32,
    pub kappa_original: f64,
    pub kappa_rescaled: f64,
    pub kappa_drift: f64,
    pub best_center_original: i32,
    pub best_center_rescaled: i32,
}

/// θ̄(x) = θ(εx) on Ω_ε = ε⁻¹Ω for a power-of-two ε.
pub fn rescale_field(theta: &SpectralField, eps: f64) -> Result<SpectralField> {
    let shift = eps.log2();
    if !(eps > 0.0) || shift.fract() != 0.0 {
        return Err(Error::InvalidArgument(format!("rescaling needs a power-of-two ε, got {eps}")));
    }
    let basis = theta.basis();
    let scaled = build_basis(basis.domain().rescale(1.0 / eps)?, basis.truncation())?;
    // ē_k(x) = ε e_k(εx) is the normalised eigenfunction of Ω_ε.
    SpectralField::new(scaled, theta.coeffs.iter().map(|c| c / eps).collect())
}

/// Recompute the decomposition of θ̄ on Ω_ε, keeping band labels of the
/// original domain (ū_j(x) = u_j(εx)), and compare κ at center N − log₂ε.
pub fn rescale_check(decomp: &CalibratedDecomposition, eps: f64, bump: &LpBump) -> Result<(RescaleCheck, CheckReport)> {
    let scaled = rescale_field(&decomp.theta, eps)?;
    let offset = -(eps.log2() as i32);
    let sampler = Arc::new(VelocitySampler::new(scaled.basis())?);
    let d2 = decompose(&scaled, bump, decomp.label_offset + offset, sampler)?;
    let center_rescaled = decomp.center + offset;
    let kappa_rescaled = d2.kappa_at(center_rescaled);
    let drift = (kappa_rescaled / decomp.kappa - 1.0).abs();
    let (b1, _) = decomp.best_center();
    let (b2, _) = d2.best_center();
    let chk = RescaleCheck {
        eps,
        center_original: decomp.center,
        center_rescaled,
        kappa_original: decomp.kappa,
        kappa_rescaled,
        kappa_drift: drift,
        best_center_original: b1,
        best_center_rescaled: b2,
    };
    let mut r = CheckReport::new(format!("calibration under rescaling, eps = {eps}"));
    r.metric("kappa_original", decomp.kappa);
    r.metric("kappa_rescaled", kappa_rescaled);
    r.metric("kappa_drift", drift);
    r.metric("center_shift", (center_rescaled - decomp.center) as f64);
    r.metric("best_center_shift", (b2 - b1) as f64);
    r.require("kappa drift within 1%", drift <= 0.01);
    r.require("center shifts by -log2(eps)", center_rescaled - decomp.center == offset);
    r.require("optimal center shifts by -log2(eps)", b2 - b1 == offset);
    Ok((chk, r))
}

pub struct LowHighSplit {
    pub u_low: VectorField,
    pub u_high: VectorField,
    pub report: CheckReport,
}

/// u_low = Σ_{j ≤ N} u_j, u_high = Σ_{j > N} u_j, with the Lipschitz bound on
/// u_low and the Λ^{−1/4} bound on u_high checked against κ at center N.
pub fn split_low_high(decomp: &CalibratedDecomposition, n: i32) -> Result<LowHighSplit> {
    let grid = decomp.sampler.grid().clone();
    let len = grid.len();
    let kappa = decomp.kappa_at(n);
    let low_psi = decomp.low_stream(n);
    let low_jets = decomp.sampler.jets(&low_psi);
    let u_low = jets_to_velocity(&grid, &low_jets);
    let grad_low = grad_velocity_sup(&low_jets);
    let mut u_high = VectorField::zeros(grid.clone());
    let mut lq_x = vec![0.0; len];
    let mut lq_y = vec![0.0; len];
    for (s, b) in decomp.stats.iter().zip(&decomp.bands) {
        if s.j <= n {
            continue;
        }
        let jets = decomp.sampler.jets(&b.psi);
        u_high.add(&jets_to_velocity(&grid, &jets));
        let ax = b.lam_quarter[0].eval_on(&grid, Deriv::Value)?;
        let ay = b.lam_quarter[1].eval_on(&grid, Deriv::Value)?;
        for k in 0..len {
            lq_x[k] += ax[k];
            lq_y[k] += ay[k];
        }
    }
    let lq_high = vector_sup(&lq_x, &lq_y);
    let geometric = 2f64.powf(-0.25) / (1.0 - 2f64.powf(-0.25));
    let mut r = CheckReport::new(format!("low/high split at N = {n}"));
    r.metric("kappa", kappa);
    r.metric("sup_grad_u_low", grad_low);
    r.metric("sup_lam_minus_quarter_u_high", lq_high);
    r.metric("grad_low_over_kappa", grad_low / kappa);
    r.metric("lam_high_over_kappa", lq_high / kappa);
    r.metric("geometric_tail_constant", geometric);
    r.require("grad u_low <= 2 kappa", grad_low <= 2.0 * kappa * (1.0 + 1e-12));
    r.require("Lambda^{-1/4} u_high <= 6 kappa", lq_high <= 6.0 * kappa * (1.0 + 1e-12));
    Ok(LowHighSplit { u_low, u_high, report: r })
}
