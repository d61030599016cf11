//! Spectral Galerkin solver for ∂_t θ + u·∇θ + Λθ = εΔθ, u = ∇⊥Λ⁻¹θ.
//!
//! The linear part is diagonal in the eigenbasis and integrated exactly; the
//! transport term is evaluated pseudospectrally on a padded grid and advanced
//! with an explicit scheme under the integrating factor.

pub mod init;
pub mod monitor;
pub mod sweep;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::eigenbasis::{stream_function, Deriv, EigenBasis, Grid, SpectralField};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Shu–Osher SSP-RK3 under the integrating factor.
    #[serde(rename = "if-rk3")]
    IfRk3,
    #[serde(rename = "if-euler")]
    IfEuler,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub dt: f64,
    pub t_end: f64,
    pub dealias_pad: usize,
    pub scheme: Scheme,
    pub record_stride: usize,
    pub seed: u64,
    /// Per-step energy residual tolerance relative to ‖θ0‖₂².
    pub tol_energy: f64,
    pub cfl: f64,
    pub max_halvings: u32,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.0,
            dt: 1e-3,
            t_end: 1.0,
            dealias_pad: 2,
            scheme: Scheme::IfRk3,
            record_stride: 1,
            seed: 0,
            tol_energy: 1e-5,
            cfl: 0.5,
            max_halvings: 4,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be nonnegative, got {}", self.t_end));
        }
        if self.dealias_pad < 2 {
            return bad(format!("dealias_pad must be at least 2, got {}", self.dealias_pad));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon must lie in [0, 1], got {}", self.epsilon));
        }
        if self.record_stride == 0 {
            return bad("record_stride must be at least 1".into());
        }
        Ok(())
    }
}

/// Galerkin projection of u·∇θ evaluated on a padded grid.
pub struct Advection {
    basis: Arc<EigenBasis>,
    grid: Arc<Grid>,
}

impl Advection {
    pub fn new(basis: &Arc<EigenBasis>, pad: usize) -> Self {
        Self { basis: basis.clone(), grid: basis.make_grid(pad) }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Nodal velocity on the padded grid.
    pub fn velocity(&self, theta: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let psi = stream_coeffs(&self.basis, theta);
        let ev = |d| self.basis.eval_grid(&self.grid, &psi, d).expect("own grid");
        let ux: Vec<f64> = ev(Deriv::Dy).into_iter().map(|v| -v).collect();
        (ux, ev(Deriv::Dx))
    }

    /// Coefficients of P(u·∇θ), together with max |u| on the padded grid.
    pub fn apply(&self, theta: &[f64]) -> (Vec<f64>, f64) {
        let (ux, uy) = self.velocity(theta);
        let ev = |d| self.basis.eval_grid(&self.grid, theta, d).expect("own grid");
        let (tx, ty) = (ev(Deriv::Dx), ev(Deriv::Dy));
        let mut umax: f64 = 0.0;
        let prod: Vec<f64> = (0..ux.len())
            .map(|i| {
                umax = umax.max(ux[i].hypot(uy[i]));
                ux[i] * tx[i] + uy[i] * ty[i]
            })
            .collect();
        (self.basis.project_grid(&self.grid, &prod).expect("own grid"), umax)
    }
}

fn stream_coeffs(basis: &EigenBasis, theta: &[f64]) -> Vec<f64> {
    theta.iter().zip(basis.eigenvalues()).map(|(c, l)| c / l.sqrt()).collect()
}

/// P(u·∇θ) for u = ∇⊥Λ⁻¹θ, with the default pad factor 2.
pub fn nonlinear_term(theta: &SpectralField) -> SpectralField {
    nonlinear_term_padded(theta, 2)
}

pub fn nonlinear_term_padded(theta: &SpectralField, pad: usize) -> SpectralField {
    let adv = Advection::new(theta.basis(), pad.max(2));
    let (c, _) = adv.apply(&theta.coeffs);
    SpectralField::new(theta.basis().clone(), c).expect("same basis")
}

/// |⟨θ, P(u·∇θ)⟩| in two normalisations: against ‖θ‖₂‖θ‖_{H¹} and against
/// ‖θ‖₂‖P(u·∇θ)‖₂.
pub fn skew_symmetry_defect(theta: &SpectralField, pad: usize) -> (f64, f64) {
    let n = nonlinear_term_padded(theta, pad);
    let pairing = theta.dot(&n).abs();
    let h1 = crate::eigenbasis::sobolev_norm(theta, 1.0);
    let a = theta.l2_norm() * h1;
    let b = theta.l2_norm() * n.l2_norm();
    (if a > 0.0 { pairing / a } else { 0.0 }, if b > 0.0 { pairing / b } else { 0.0 })
}

/// Exact linear flow e^{−t(√λ + ελ)} per mode.
pub fn linear_rates(basis: &EigenBasis, epsilon: f64) -> Vec<f64> {
    basis.eigenvalues().iter().map(|l| l.sqrt() + epsilon * l).collect()
}

/// Per-mode weights for ∫_0^dt c_k(s)² ds from the endpoint values f = c²
/// and slopes f' = −2af − 2cN.
///
/// Mildly damped modes (a·dt ≤ ½) write f = e^{−2as}G and interpolate G by a
/// cubic Hermite polynomial. Strongly damped modes use the rule exact on
/// span{e^{−2as}, e^{−as}, 1, s}, which covers free decay and the slaved
/// response to slowly varying forcing. Both are exact for the linear flow.
#[derive(Clone, Debug)]
pub struct EnergyQuadrature {
    dt: f64,
    /// Weights of f(0), dt·f'(0), f(dt), dt·f'(dt), in units of dt.
    weights: Vec<[f64; 4]>,
}

const HERMITE_LIMIT: f64 = 0.5;

fn hermite_weights(x: f64, tau: &[f64], w: &[f64]) -> [f64; 4] {
    let mut m = [0.0; 4];
    for (&t, &w) in tau.iter().zip(w) {
        let e = w * (-2.0 * x * t).exp();
        let (t2, t3) = (t * t, t * t * t);
        m[0] += e * (2.0 * t3 - 3.0 * t2 + 1.0);
        m[1] += e * (t3 - 2.0 * t2 + t);
        m[2] += e * (3.0 * t2 - 2.0 * t3);
        m[3] += e * (t3 - t2);
    }
    let g = (2.0 * x).exp();
    // G' = e^{2as}(f' + 2af)
    [m[0] + 2.0 * x * m[1], m[1], g * (m[2] + 2.0 * x * m[3]), g * m[3]]
}

fn slaved_weights(x: f64) -> [f64; 4] {
    let (e1, e2) = ((-x).exp(), (-2.0 * x).exp());
    // Rows: basis function; columns: f(0), f'(0), f(1), f'(1) on τ ∈ [0, 1].
    let mut a = [
        [1.0, -2.0 * x, e2, -2.0 * x * e2],
        [1.0, -x, e1, -x * e1],
        [1.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 1.0, 1.0],
    ];
    let mut rhs = [-(-2.0 * x).exp_m1() / (2.0 * x), -(-x).exp_m1() / x, 1.0, 0.5];
    for col in 0..4 {
        let piv = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).expect("nonempty");
        a.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut w = [0.0; 4];
    for col in (0..4).rev() {
        let s: f64 = (col + 1..4).map(|k| a[col][k] * w[k]).sum();
        w[col] = (rhs[col] - s) / a[col][col];
    }
    w
}

impl EnergyQuadrature {
    pub fn new(rates: &[f64], dt: f64) -> Self {
        let (tau, w) = crate::special::gauss_legendre_on(16, 0.0, 1.0);
        let weights = rates
            .iter()
            .map(|&a| {
                let x = a * dt;
                if x <= HERMITE_LIMIT {
                    hermite_weights(x, &tau, &w)
                } else {
                    slaved_weights(x)
                }
            })
            .collect();
        Self { dt, weights }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Approximate ∫c_k² for mode k with decay rate `a`; `n0`, `n1` are
    /// P(u·∇θ) at the endpoints.
    fn integral(&self, k: usize, a: f64, c0: f64, n0: f64, c1: f64, n1: f64) -> f64 {
        let dt = self.dt;
        let w = &self.weights[k];
        let (f0, f1) = (c0 * c0, c1 * c1);
        let d0 = -2.0 * a * f0 - 2.0 * c0 * n0;
        let d1 = -2.0 * a * f1 - 2.0 * c1 * n1;
        dt * (w[0] * f0 + w[1] * dt * d0 + w[2] * f1 + w[3] * dt * d1)
    }

    /// Residual [‖θ1‖² − ‖θ0‖²]/dt + 2Σ(√λ+ελ)·(1/dt)∫c_k² over one step.
    pub fn residual(&self, rates: &[f64], c0: &[f64], n0: &[f64], c1: &[f64], n1: &[f64]) -> f64 {
        let mut de = 0.0;
        let mut diss = 0.0;
        for k in 0..rates.len() {
            de += c1[k] * c1[k] - c0[k] * c0[k];
            diss += 2.0 * rates[k] * self.integral(k, rates[k], c0[k], n0[k], c1[k], n1[k]);
        }
        (de + diss) / self.dt
    }
}

/// One time step of the exact-linear/explicit-transport scheme.
pub struct Stepper {
    pub basis: Arc<EigenBasis>,
    pub advection: Advection,
    pub rates: Vec<f64>,
    pub scheme: Scheme,
}

impl Stepper {
    pub fn new(basis: &Arc<EigenBasis>, epsilon: f64, pad: usize, scheme: Scheme) -> Self {
        Self {
            basis: basis.clone(),
            advection: Advection::new(basis, pad),
            rates: linear_rates(basis, epsilon),
            scheme,
        }
    }

    fn decay(&self, c: &[f64], t: f64) -> Vec<f64> {
        c.iter().zip(&self.rates).map(|(v, a)| v * (-a * t).exp()).collect()
    }

    /// Advance by dt; returns the new coefficients and max |u| at the start.
    pub fn step(&self, c: &[f64], dt: f64) -> (Vec<f64>, f64) {
        let (n0, umax) = self.advection.apply(c);
        (self.step_from(c, &n0, dt), umax)
    }

    /// Advance by dt given n0 = P(u·∇θ) at the current state.
    pub fn step_from(&self, c: &[f64], n0: &[f64], dt: f64) -> Vec<f64> {
        let euler = |y: &[f64], n: &[f64]| -> Vec<f64> { y.iter().zip(n).map(|(a, b)| a - dt * b).collect() };
        match self.scheme {
            Scheme::IfEuler => self.decay(&euler(c, n0), dt),
            Scheme::IfRk3 => {
                let y1 = self.decay(&euler(c, n0), dt);
                let (n1, _) = self.advection.apply(&y1);
                // y2 = ¾E(h/2)y + ¼E(−h/2)(y1 − hN(y1)), with E(−h/2)y1 folded into E(h/2).
                let e_half = self.decay(c, 0.5 * dt);
                let pre = self.decay(&euler(c, n0), 0.5 * dt);
                let back: Vec<f64> = n1.iter().zip(&self.rates).map(|(v, a)| v * (0.5 * a * dt).exp()).collect();
                let y2: Vec<f64> = (0..c.len())
                    .map(|k| 0.75 * e_half[k] + 0.25 * (pre[k] - dt * back[k]))
                    .collect();
                let (n2, _) = self.advection.apply(&y2);
                let e_full = self.decay(c, dt);
                let tail = self.decay(&euler(&y2, &n2), 0.5 * dt);
                (0..c.len()).map(|k| e_full[k] / 3.0 + 2.0 * tail[k] / 3.0).collect()
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct RecordEntry {
    pub t: f64,
    pub theta: SpectralField,
    pub l2: f64,
    pub linf: f64,
    pub h_half: f64,
    /// ε‖∇θ‖₂².
    pub visc_dissipation: f64,
    /// Residual of the step that ended at this time (0 at t = 0).
    pub energy_residual: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct RunStats {
    pub steps: usize,
    pub halvings: u32,
    pub final_dt: f64,
    pub max_abs_residual: f64,
    pub max_umax: f64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub entries: Vec<RecordEntry>,
    /// |residual| of every step, relative to ‖θ0‖₂².
    pub step_residuals: Vec<f64>,
    pub stats: RunStats,
    pub epsilon: f64,
    /// Set when the run stopped early; the last entry is the last good state.
    pub aborted: Option<String>,
}

impl TrajectoryRecord {
    pub fn initial(&self) -> &RecordEntry {
        &self.entries[0]
    }
    pub fn last(&self) -> &RecordEntry {
        self.entries.last().expect("record holds t = 0")
    }
    pub fn times(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.t).collect()
    }
    pub fn basis(&self) -> &Arc<EigenBasis> {
        self.entries[0].theta.basis()
    }

    /// Record rebuilt from stored snapshots; per-step residuals are unknown
    /// and left at zero.
    pub fn from_snapshots(snaps: Vec<(f64, SpectralField)>, epsilon: f64) -> Result<Self> {
        if snaps.is_empty() {
            return Err(Error::InvalidArgument("no snapshots".into()));
        }
        if snaps.windows(2).any(|w| w[1].0 <= w[0].0 || !w[1].1.same_basis(&w[0].1)) {
            return Err(Error::InvalidArgument("snapshots need increasing times and a common basis".into()));
        }
        let entries = snaps.into_iter().map(|(t, th)| entry(th, t, epsilon, 0.0)).collect();
        Ok(Self { entries, step_residuals: Vec::new(), stats: RunStats::default(), epsilon, aborted: None })
    }

    /// Snapshot at time t by linear interpolation of coefficients.
    pub fn theta_at(&self, t: f64) -> Result<SpectralField> {
        let (t0, t1) = (self.entries[0].t, self.last().t);
        if t < t0 - 1e-12 || t > t1 + 1e-12 {
            return Err(Error::OutOfSpan { t, t0, t1 });
        }
        let k = self.entries.partition_point(|e| e.t <= t).clamp(1, self.entries.len().max(2) - 1);
        if self.entries.len() == 1 {
            return Ok(self.entries[0].theta.clone());
        }
        let (a, b) = (&self.entries[k - 1], &self.entries[k]);
        let w = if b.t > a.t { ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0) } else { 0.0 };
        a.theta.scaled(1.0 - w).add(&b.theta.scaled(w))
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["t", "l2", "linf", "h_half", "energy_residual"])?;
        for e in &self.entries {
            wtr.write_record([e.t, e.l2, e.linf, e.h_half, e.energy_residual].map(|v| v.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn entry(theta: SpectralField, t: f64, epsilon: f64, residual: f64) -> RecordEntry {
    use crate::eigenbasis::{sobolev_norm, sup_norm};
    RecordEntry {
        t,
        l2: theta.l2_norm(),
        linf: sup_norm(&theta),
        h_half: sobolev_norm(&theta, 0.5),
        visc_dissipation: epsilon * sobolev_norm(&theta, 1.0).powi(2),
        energy_residual: residual,
        theta,
    }
}

/// Integrate from θ0 to t_end, recording every `record_stride` steps and at
/// the final time.
pub fn run(theta0: &SpectralField, cfg: &SolverConfig) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    if !theta0.coeffs.iter().all(|c| c.is_finite()) {
        return Err(Error::InvalidArgument("initial data is not finite".into()));
    }
    let basis = theta0.basis().clone();
    let stepper = Stepper::new(&basis, cfg.epsilon, cfg.dealias_pad, cfg.scheme);
    let h_min = basis.grid().min_spacing();
    let e0 = theta0.l2_norm().powi(2);
    let norm = if e0 > 0.0 { e0 } else { 1.0 };
    let mut rec = TrajectoryRecord {
        entries: vec![entry(theta0.clone(), 0.0, cfg.epsilon, 0.0)],
        step_residuals: Vec::new(),
        stats: RunStats { final_dt: cfg.dt, ..Default::default() },
        epsilon: cfg.epsilon,
        aborted: None,
    };
    let mut c = theta0.coeffs.clone();
    let mut t = 0.0;
    let mut dt = cfg.dt;
    let mut since_record = 0;
    let total = cfg.t_end;
    let (mut n_cur, mut umax) = stepper.advection.apply(&c);
    let mut quad: Option<EnergyQuadrature> = None;
    while t < total - 1e-12 * total.max(1.0) {
        let h = dt.min(total - t);
        rec.stats.max_umax = rec.stats.max_umax.max(umax);
        if h * umax > cfg.cfl * h_min {
            if rec.stats.halvings >= cfg.max_halvings {
                let err = Error::Cfl { halvings: rec.stats.halvings, dt, umax };
                rec.aborted = Some(err.to_string());
                push_last(&mut rec, &basis, &c, t, cfg.epsilon);
                return Ok(rec);
            }
            dt *= 0.5;
            rec.stats.halvings += 1;
            rec.stats
                .warnings
                .push(format!("CFL: dt halved to {dt:e} at t = {t:e} (max |u| = {umax:e})"));
            continue;
        }
        let next = stepper.step_from(&c, &n_cur, h);
        if !next.iter().all(|v| v.is_finite()) {
            let err = Error::NonFinite { t: t + h, detail: "coefficients overflowed".into() };
            rec.aborted = Some(err.to_string());
            push_last(&mut rec, &basis, &c, t, cfg.epsilon);
            return Ok(rec);
        }
        let (n_next, u_next) = stepper.advection.apply(&next);
        if quad.as_ref().map_or(true, |q| q.dt() != h) {
            quad = Some(EnergyQuadrature::new(&stepper.rates, h));
        }
        let r = quad.as_ref().expect("set above").residual(&stepper.rates, &c, &n_cur, &next, &n_next);
        rec.step_residuals.push(r.abs() / norm);
        rec.stats.max_abs_residual = rec.stats.max_abs_residual.max(r.abs() / norm);
        c = next;
        n_cur = n_next;
        umax = u_next;
        t += h;
        rec.stats.steps += 1;
        since_record += 1;
        let done = t >= total - 1e-12 * total.max(1.0);
        if since_record == cfg.record_stride || done {
            since_record = 0;
            let th = SpectralField::new(basis.clone(), c.clone())?;
            rec.entries.push(entry(th, t, cfg.epsilon, r));
        }
    }
    rec.stats.final_dt = dt;
    Ok(rec)
}

fn push_last(rec: &mut TrajectoryRecord, basis: &Arc<EigenBasis>, c: &[f64], t: f64, eps: f64) {
    if rec.last().t < t {
        let th = SpectralField::new(basis.clone(), c.to_vec()).expect("same basis");
        rec.entries.push(entry(th, t, eps, 0.0));
    }
}

/// sup_t t‖θ(t)‖∞/‖θ0‖₂ over the record (0 for θ0 = 0).
pub fn linfty_decay_constant(rec: &TrajectoryRecord) -> f64 {
    let n0 = rec.initial().l2;
    if n0 == 0.0 {
        return 0.0;
    }
    rec.entries.iter().map(|e| e.t * e.linf / n0).fold(0.0, f64::max)
}

/// Stream function of θ (re-exported for callers that need Λ⁻¹θ).
pub fn stream(theta: &SpectralField) -> SpectralField {
    stream_function(theta)
}

#[cfg(test)]
mod tests;
