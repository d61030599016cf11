//! Named verification suites driven by a run configuration.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::config::Config;
use crate::degiorgi::{
    dg1_empirical, integrate_path, ladder, oscillation_scan, verify_barrier_lemma, verify_interpolation, BarrierFn,
    CylinderCenter, CylinderSpec, InterpolationSamples, SpaceTimeSamples, VelocityRecord,
};
use crate::eigenbasis::{build_basis, stream_function, DomainSpec, EigenBasis, SpectralField, Truncation};
use crate::error::{Error, Result};
use crate::kernels::{
    default_sample_points, estimate_c_dmn, quasi_random_pairs, verify_bilinear_identity, verify_upper_bound,
    BilinearOptions, KernelTable,
};
use crate::lpcalib::{
    band_balanced_field, bernstein_check, calibrate, commutator_grid, rescale_check, split_low_high, LpBump, Norm,
};
use crate::report::CheckReport;
use crate::solver::monitor::{suitability_monitor, ConstantBarrier};
use crate::solver::run;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Kernels,
    Lp,
    Calibration,
    Degiorgi,
    Interpolation,
    Barrier,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 7] = ["kernels", "lp", "calibration", "degiorgi", "interpolation", "barrier", "all"];

    fn parts(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![
                Suite::Kernels,
                Suite::Lp,
                Suite::Calibration,
                Suite::Degiorgi,
                Suite::Interpolation,
                Suite::Barrier,
            ],
            s => vec![s],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = [Suite::Kernels, Suite::Lp, Suite::Calibration, Suite::Degiorgi, Suite::Interpolation, Suite::Barrier]
            .iter()
            .position(|s| s == self)
            .unwrap_or(6);
        f.write_str(Self::NAMES[i])
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "kernels" => Suite::Kernels,
            "lp" => Suite::Lp,
            "calibration" => Suite::Calibration,
            "degiorgi" => Suite::Degiorgi,
            "interpolation" => Suite::Interpolation,
            "barrier" => Suite::Barrier,
            "all" => Suite::All,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown suite `{s}`; expected one of {}",
                    Suite::NAMES.join(", ")
                )))
            }
        })
    }
}

/// Reports grouped by the suite that produced them.
pub struct SuiteOutcome {
    pub suite: Suite,
    pub reports: Vec<CheckReport>,
}

impl SuiteOutcome {
    pub fn pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }
}

pub fn run_suite(suite: Suite, cfg: &Config) -> Result<Vec<SuiteOutcome>> {
    suite
        .parts()
        .into_iter()
        .map(|s| {
            let reports = match s {
                Suite::Kernels => kernels(cfg)?,
                Suite::Lp => lp(cfg)?,
                Suite::Calibration => calibration(cfg)?,
                Suite::Degiorgi => degiorgi(cfg)?,
                Suite::Interpolation => interpolation(cfg)?,
                Suite::Barrier => barrier(cfg)?,
                Suite::All => unreachable!("expanded above"),
            };
            Ok(SuiteOutcome { suite: s, reports })
        })
        .collect()
}

fn unit_square(m: usize) -> Result<Arc<EigenBasis>> {
    build_basis(DomainSpec::square(1.0)?, Truncation::square(m))
}

fn kernels(cfg: &Config) -> Result<Vec<CheckReport>> {
    let v = &cfg.verify;
    let basis = unit_square(v.kernel_m)?;
    let dom = basis.domain();
    let pairs = quasi_random_pairs(dom, v.kernel_pairs, 0.0, 0.01);
    let pts = default_sample_points(dom, 4, 0.02);
    let table = KernelTable::build(&basis, 0.5, &pairs, &pts)?;
    let mut out = vec![verify_upper_bound(&table)];

    let opts = BilinearOptions { cells: v.bilinear_cells, ..Default::default() };
    for (a, b) in [(3u64, 5u64), (7, 11)] {
        let f = SpectralField::random_band_limited(&basis, a, 3.0 * std::f64::consts::PI);
        let g = SpectralField::random_band_limited(&basis, b, 3.0 * std::f64::consts::PI);
        let mut r = verify_bilinear_identity(&f, &g, 0.5, &opts)?;
        r.name = format!("{} (seeds {a}, {b})", r.name);
        out.push(r);
    }

    let inner = quasi_random_pairs(dom, 12, 0.02, 0.02);
    let d = estimate_c_dmn(&basis, 0.125, 0.5, &inner)?;
    let mut r = CheckReport::new("domain constant between kernel orders");
    r.metric("c_dmn", d.c_dmn).metric("rescale_ratio", d.rescale_ratio).metric("reverse_sup", d.reverse_sup);
    r.require("constant is positive and finite", d.c_dmn > 0.0 && d.c_dmn.is_finite());
    r.require("constant is scale free to 5%", (d.rescale_ratio - 1.0).abs() < 0.05);
    out.push(r);
    Ok(out)
}

fn lp(cfg: &Config) -> Result<Vec<CheckReport>> {
    let v = &cfg.verify;
    let balanced = band_balanced_field(&unit_square(v.lp_m)?, cfg.solver.seed, &LpBump);
    let mut out = Vec::new();
    for alpha in [-0.25, 0.0, 1.0] {
        for p in [Norm::L2, Norm::Sup] {
            out.push(bernstein_check(&balanced, alpha, p, None, &LpBump, v.slack)?);
        }
    }
    let f = SpectralField::random(&unit_square(v.commutator_m)?, cfg.solver.seed, 1.0);
    for p in [Norm::L2, Norm::Sup] {
        out.push(commutator_grid(&f, p, &LpBump, v.slack)?);
    }
    Ok(out)
}

fn calibration(cfg: &Config) -> Result<Vec<CheckReport>> {
    let theta = SpectralField::random(&unit_square(cfg.verify.calibration_m)?, cfg.solver.seed, 1.5);
    let d = calibrate(&theta, &LpBump)?;
    let mut out = vec![d.verify()];
    let mut centers = vec![d.j0 - 1, d.center, d.center + 2];
    centers.sort_unstable();
    centers.dedup();
    for n in centers {
        out.push(split_low_high(&d, n)?.report);
    }
    let (chk, mut r) = rescale_check(&d, 0.5, &LpBump)?;
    r.require("center shifts by exactly 1", chk.center_rescaled == chk.center_original + 1);
    r.require("kappa drift within 1%", chk.kappa_drift <= 0.01);
    out.push(r);
    Ok(out)
}

fn degiorgi(cfg: &Config) -> Result<Vec<CheckReport>> {
    let basis = cfg.basis()?;
    let scfg = cfg.solver_config()?;
    let theta0 = cfg.initial_field(&basis)?;
    let rec = run(&theta0, &scfg)?;
    let mut out = Vec::new();

    let mut r = CheckReport::new("trajectory");
    r.metric("steps", rec.stats.steps as f64)
        .metric("max_abs_energy_residual", rec.stats.max_abs_residual)
        .metric("final_l2", rec.last().l2);
    for w in &rec.stats.warnings {
        r.warn(w.clone());
    }
    r.require("run completed", rec.aborted.is_none());
    r.require(
        "energy residual within tolerance",
        rec.stats.max_abs_residual <= scfg.tol_energy * rec.initial().l2.powi(2).max(f64::MIN_POSITIVE),
    );
    out.push(r);

    let t_end = rec.last().t;
    if t_end <= 0.0 {
        return Err(Error::InvalidArgument("De Giorgi suite needs solver.t_end > 0".into()));
    }
    let grid = basis.fine_grid().clone();
    let samples = SpaceTimeSamples::from_record(&rec, 0.0, t_end, &grid)?;
    let window = samples.clone().normalized(2.0);
    let l = ladder(&window, cfg.verify.ladder_levels)?;
    let mut r = CheckReport::new("truncation energy ladder");
    r.metric("E_0", l.energies[0]).metric("E_K", *l.energies.last().expect("nonempty"));
    if let Some(c) = l.recursion_constant {
        r.metric("recursion_constant", c);
    }
    if let Some(b) = l.recursion_exponent {
        r.metric("recursion_exponent", b);
    }
    r.require("energies nonincreasing in k", l.is_monotone());
    out.push(r);

    let center = basis.domain().center();
    out.push(dg1_empirical(&window, &BarrierFn::standard(), &move |_| center, &[1e-8, 1e-4])?.report);

    let mut m = suitability_monitor(&rec, &ConstantBarrier { level: 0.0 }, 0.0)?.report;
    m.name = "truncated energy inequality at level 0".into();
    out.push(m);

    let streams: Vec<SpectralField> = rec.entries.iter().map(|e| stream_function(&e.theta)).collect();
    let vel = VelocityRecord::from_streams(rec.times(), streams)?;
    let path = integrate_path(&vel, center, t_end, t_end)?;
    let mut r = CheckReport::new("Lagrangian path of the full velocity");
    r.metric("speed", path.speed)
        .metric("error_estimate", path.error_estimate)
        .metric("clamp_events", path.clamp_events.len() as f64);
    r.require("path resolved to tolerance", path.error_estimate <= 1e-6);
    r.require("path stays finite", path.points.iter().all(|p| p[0].is_finite() && p[1].is_finite()));
    out.push(r);

    let spec = CylinderSpec {
        center: CylinderCenter::Fixed(center),
        radius: 0.5 * basis.domain().inradius(),
        timespan: t_end,
        eps: 0.5,
        levels: 3,
    };
    out.push(oscillation_scan(&samples, &spec)?.report);
    Ok(out)
}

fn interpolation(cfg: &Config) -> Result<Vec<CheckReport>> {
    let basis = unit_square(cfg.verify.interpolation_m)?;
    let mut out = Vec::new();
    for seed in 0..cfg.verify.interpolation_seeds {
        let f = SpectralField::random(&basis, cfg.solver.seed.wrapping_add(seed), 2.0);
        let s = InterpolationSamples::from_field(&f, 2)?;
        for alpha in [0.25, 0.5, 0.75] {
            let mut r = verify_interpolation(&s, alpha, seed)?;
            r.name = format!("{} (seed {seed}, alpha {alpha})", r.name);
            out.push(r);
        }
    }
    Ok(out)
}

fn barrier(cfg: &Config) -> Result<Vec<CheckReport>> {
    let l = verify_barrier_lemma(cfg.verify.barrier_zmax, cfg.verify.barrier_nodes)?;
    let b = BarrierFn::standard();
    let mut r = CheckReport::new("barrier profile");
    r.metric("grad_sup", b.grad_sup).metric("hess_sup", b.hess_sup).metric("holder_quarter", b.holder_quarter);
    r.require("derivative bounds finite", b.grad_sup.is_finite() && b.hess_sup.is_finite());
    r.require("vanishes on the unit ball", b.radial(1.0) == 0.0);
    Ok(vec![l.report, r])
}
