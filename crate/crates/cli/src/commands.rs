use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sqg_core::config::{CenterKind, Config};
use sqg_core::degiorgi::{
    gamma_recursion, low_pass_levels, oscillation_scan, CylinderCenter, CylinderSpec, SpaceTimeSamples,
};
use sqg_core::eigenbasis::EigenBasis;
use sqg_core::io::{read_sqgf, write_coefficients_csv, write_sqgf};
use sqg_core::lpcalib::LpBump;
use sqg_core::report::CheckReport;
use sqg_core::solver::{linfty_decay_constant, run, RunStats, TrajectoryRecord};
use sqg_core::suites::{run_suite, Suite};
use sqg_core::Error;

use crate::manifest::ArtifactSink;
use crate::CliError;

const TINY_CONFIG: &str = include_str!("../../../configs/tiny.toml");
const GOLDEN_ENV: &str = "SQG_GOLDEN_DIR";

pub struct Options {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub deterministic: bool,
}

type CmdResult = Result<bool, CliError>;

struct Loaded {
    cfg: Config,
    text: String,
    /// File stem used to look up golden values.
    stem: String,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn load(opts: &Options, fallback_tiny: bool) -> Result<Loaded, CliError> {
    let (text, stem, origin) = match &opts.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| usage(format!("cannot read config {}: {e}", p.display())))?;
            let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            (text, stem, p.display().to_string())
        }
        None if fallback_tiny => (TINY_CONFIG.to_string(), "tiny".to_string(), "built-in tiny config".to_string()),
        None => return Err(usage("--config is required for this command")),
    };
    let cfg: Config = toml::from_str(&text).map_err(|e| usage(format!("invalid config {origin}: {e}")))?;
    cfg.validate().map_err(|e| usage(format!("invalid config {origin}: {e}")))?;
    Ok(Loaded { cfg, text, stem })
}

fn out_dir(opts: &Options, cfg: &Config) -> PathBuf {
    opts.out.clone().or_else(|| cfg.output.dir.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("sqg-out"))
}

fn core_err(e: Error) -> CliError {
    match e {
        Error::InvalidArgument(_) | Error::InvalidDomain(_) | Error::InvalidTruncation(_) => usage(e.to_string()),
        other => CliError::Failure(other.to_string()),
    }
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s.into_bytes()
}

fn sqgf_bytes(field: &sqg_core::eigenbasis::SpectralField) -> anyhow::Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_sqgf(field, &mut buf)?;
    Ok(buf)
}

#[derive(Serialize)]
struct RunSummary<'a> {
    stats: &'a RunStats,
    final_time: f64,
    initial_l2: f64,
    final_l2: f64,
    initial_linf: f64,
    final_linf: f64,
    linfty_decay_constant: f64,
    aborted: Option<&'a str>,
}

fn summary(rec: &TrajectoryRecord) -> RunSummary<'_> {
    RunSummary {
        stats: &rec.stats,
        final_time: rec.last().t,
        initial_l2: rec.initial().l2,
        final_l2: rec.last().l2,
        initial_linf: rec.initial().linf,
        final_linf: rec.last().linf,
        linfty_decay_constant: linfty_decay_constant(rec),
        aborted: rec.aborted.as_deref(),
    }
}

pub fn simulate(opts: &Options) -> CmdResult {
    let Loaded { cfg, text, .. } = load(opts, false)?;
    let mut sink = ArtifactSink::new(&out_dir(opts, &cfg), "simulate", &text, cfg.solver.seed, opts.deterministic)?;
    sink.phase("setup");
    let basis = cfg.basis().map_err(core_err)?;
    let theta0 = cfg.initial_field(&basis).map_err(core_err)?;
    let scfg = cfg.solver_config().map_err(core_err)?;
    sink.phase("solve");
    let rec = run(&theta0, &scfg).map_err(core_err)?;
    sink.phase("write");
    let mut csv = Vec::new();
    rec.write_csv(&mut csv).map_err(core_err)?;
    sink.write("trajectory.csv", &csv)?;
    sink.write("run_report.json", &json(&summary(&rec)))?;
    if let Some(msg) = &rec.aborted {
        // Diagnostic dump: last good state plus its coefficient table.
        sink.write("abort_state.sqgf", &sqgf_bytes(&rec.last().theta)?)?;
        let mut table = Vec::new();
        write_coefficients_csv(&rec.last().theta, &mut table).map_err(core_err)?;
        sink.write("abort_state.csv", &table)?;
        let dir = sink.root().display().to_string();
        sink.finish()?;
        eprintln!("solver aborted at t = {}: {msg}; diagnostic dump in {dir}", rec.last().t);
        return Ok(false);
    }
    sink.write("final.sqgf", &sqgf_bytes(&rec.last().theta)?)?;
    if cfg.output.snapshots {
        let mut index = String::from("t,file\n");
        for (i, e) in rec.entries.iter().enumerate() {
            let name = format!("theta_{i:05}.sqgf");
            sink.write(&format!("snapshots/{name}"), &sqgf_bytes(&e.theta)?)?;
            index.push_str(&format!("{:?},{name}\n", e.t));
        }
        sink.write("snapshots/index.csv", index.as_bytes())?;
    }
    let n = sink.artifact_count();
    let path = sink.finish()?;
    println!(
        "simulated to t = {} in {} steps; {n} artifacts, manifest {}",
        rec.last().t,
        rec.stats.steps,
        path.display()
    );
    Ok(true)
}

pub fn verify(opts: &Options, suite: &str) -> CmdResult {
    let suite: Suite = suite.parse().map_err(|e: Error| usage(e.to_string()))?;
    let Loaded { cfg, text, .. } = load(opts, true)?;
    let mut sink = ArtifactSink::new(&out_dir(opts, &cfg), "verify", &text, cfg.solver.seed, opts.deterministic)?;
    sink.phase(&format!("suite {suite}"));
    let outcomes = run_suite(suite, &cfg).map_err(core_err)?;
    sink.phase("write");
    let mut all_pass = true;
    for o in &outcomes {
        let mut txt = String::new();
        for r in &o.reports {
            println!("{} {}: {}", r.status(), o.suite, r.name);
            txt.push_str(&r.to_text());
        }
        all_pass &= o.pass();
        sink.write(&format!("verify_{}.json", o.suite), &json(&o.reports))?;
        sink.write(&format!("verify_{}.txt", o.suite), txt.as_bytes())?;
    }
    sink.finish()?;
    println!("{} suite {suite}", if all_pass { "PASS" } else { "FAIL" });
    Ok(all_pass)
}

fn load_snapshots(dir: &Path, basis: &std::sync::Arc<EigenBasis>, epsilon: f64) -> Result<TrajectoryRecord, CliError> {
    let index = dir.join("snapshots").join("index.csv");
    if !index.is_file() {
        return Err(usage(format!(
            "missing trajectory: {} not found; run `sqg simulate` with output.snapshots = true or pass --inline",
            index.display()
        )));
    }
    let mut rdr = csv::Reader::from_path(&index).map_err(|e| usage(format!("reading {}: {e}", index.display())))?;
    let mut snaps = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| usage(format!("reading {}: {e}", index.display())))?;
        let t: f64 = row
            .get(0)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| usage(format!("bad time in {}", index.display())))?;
        let file = dir.join("snapshots").join(row.get(1).unwrap_or_default());
        let bytes = fs::read(&file).map_err(|e| usage(format!("missing snapshot {}: {e}", file.display())))?;
        let field = read_sqgf(bytes.as_slice()).and_then(|s| s.into_field(basis)).map_err(core_err)?;
        snaps.push((t, field));
    }
    TrajectoryRecord::from_snapshots(snaps, epsilon).map_err(core_err)
}

#[derive(Deserialize)]
struct GoldenRange {
    alpha_min: f64,
    alpha_max: f64,
}

#[derive(Serialize)]
struct HolderSummary {
    /// Fitted exponent; null when every oscillation vanishes.
    alpha: Option<f64>,
    regular: bool,
    levels_used: usize,
    levels_requested: usize,
    levels_reduced: bool,
    nested: bool,
    report: CheckReport,
}

pub fn holder(opts: &Options, inline: bool) -> CmdResult {
    let Loaded { cfg, text, stem } = load(opts, false)?;
    let out = out_dir(opts, &cfg);
    let basis = cfg.basis().map_err(core_err)?;
    // Check for the stored trajectory before creating any output.
    let rec = if inline {
        None
    } else {
        let dir = cfg.holder.trajectory.as_ref().map(PathBuf::from).unwrap_or_else(|| out.clone());
        Some(load_snapshots(&dir, &basis, cfg.solver.epsilon)?)
    };
    let mut sink = ArtifactSink::new(&out, "holder", &text, cfg.solver.seed, opts.deterministic)?;
    let rec = match rec {
        Some(r) => r,
        None => {
            sink.phase("solve");
            let theta0 = cfg.initial_field(&basis).map_err(core_err)?;
            let rec = run(&theta0, &cfg.solver_config().map_err(core_err)?).map_err(core_err)?;
            if let Some(msg) = &rec.aborted {
                return Err(CliError::Failure(format!("inline run aborted: {msg}")));
            }
            rec
        }
    };
    sink.phase("scan");
    let h = &cfg.holder;
    let t_end = rec.last().t;
    let span = h.timespan.unwrap_or(t_end - rec.initial().t);
    if !(span > 0.0) {
        return Err(usage("holder needs a trajectory of positive length"));
    }
    let grid = basis.make_grid(h.density);
    let samples = SpaceTimeSamples::from_record(&rec, t_end - span, t_end, &grid).map_err(core_err)?;
    let x0 = h.x0.unwrap_or_else(|| basis.domain().center());
    let center = match h.center {
        CenterKind::Fixed => CylinderCenter::Fixed(x0),
        CenterKind::Path => {
            let (levels, kappa) = low_pass_levels(&rec, t_end, span, h.eps, h.levels, &LpBump).map_err(core_err)?;
            let gr = gamma_recursion(&levels, x0, t_end, span, h.eps, kappa).map_err(core_err)?;
            CylinderCenter::Paths(gr.paths)
        }
    };
    let radius = h.radius.unwrap_or(0.5 * basis.domain().inradius());
    let spec = CylinderSpec { center, radius, timespan: span, eps: h.eps, levels: h.levels };
    let scan = oscillation_scan(&samples, &spec).map_err(core_err)?;
    let mut report = scan.report.clone();

    if let Ok(dir) = std::env::var(GOLDEN_ENV) {
        let file = Path::new(&dir).join(format!("holder_{stem}.json"));
        match fs::read_to_string(&file) {
            Ok(s) => {
                let g: GoldenRange =
                    serde_json::from_str(&s).map_err(|e| usage(format!("bad golden file {}: {e}", file.display())))?;
                report.metric("golden_alpha_min", g.alpha_min).metric("golden_alpha_max", g.alpha_max);
                report.require("alpha within golden range", scan.alpha >= g.alpha_min && scan.alpha <= g.alpha_max);
            }
            Err(_) => {
                report.note(format!("no golden file {}", file.display()));
            }
        }
    }

    let used = scan.rows.len().saturating_sub(1);
    let summary = HolderSummary {
        alpha: scan.alpha.is_finite().then_some(scan.alpha),
        regular: scan.alpha == f64::INFINITY,
        levels_used: used,
        levels_requested: h.levels,
        levels_reduced: used < h.levels,
        nested: scan.nested,
        report: report.clone(),
    };
    let mut csv = Vec::new();
    scan.write_csv(&mut csv).map_err(core_err)?;
    sink.write("oscillation.csv", &csv)?;
    sink.write("holder_report.json", &json(&summary))?;
    sink.finish()?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if summary.regular {
        println!("alpha = inf (regular: every oscillation vanishes)");
    } else {
        println!("alpha = {}", scan.alpha);
    }
    println!("{} holder exponent", report.status());
    Ok(report.pass)
}
