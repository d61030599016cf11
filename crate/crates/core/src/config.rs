//! Run configuration: flat sections of key-value pairs, deserialised by the
//! front-end from a structured text file.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::eigenbasis::{build_basis, DomainSpec, EigenBasis, Point, SpectralField, Truncation};
use crate::error::{Error, Result};
use crate::solver::init::InitialData;
use crate::solver::{Scheme, SolverConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Rectangle,
    Disk,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub shape: ShapeKind,
    pub lx: Option<f64>,
    pub ly: Option<f64>,
    pub radius: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSection {
    pub mx: usize,
    pub my: usize,
}

fn d_pad() -> usize {
    2
}
fn d_scheme() -> Scheme {
    Scheme::IfRk3
}
fn d_one() -> usize {
    1
}
fn d_tol() -> f64 {
    1e-5
}
fn d_cfl() -> f64 {
    0.5
}
fn d_halvings() -> u32 {
    4
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub epsilon: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "d_pad")]
    pub pad: usize,
    #[serde(default = "d_scheme")]
    pub scheme: Scheme,
    #[serde(default = "d_one")]
    pub record_stride: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_tol")]
    pub tol_energy: f64,
    #[serde(default = "d_cfl")]
    pub cfl: f64,
    #[serde(default = "d_halvings")]
    pub max_halvings: u32,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
    /// Write every recorded state as an SQGF snapshot.
    #[serde(default)]
    pub snapshots: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterKind {
    Fixed,
    Path,
}

fn d_holder_eps() -> f64 {
    0.5
}
fn d_levels() -> usize {
    4
}
fn d_center() -> CenterKind {
    CenterKind::Fixed
}
fn d_density() -> usize {
    8
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderSection {
    #[serde(default = "d_holder_eps")]
    pub eps: f64,
    /// Level-0 radius; half the inradius when absent.
    pub radius: Option<f64>,
    /// Level-0 time span; the whole run when absent.
    pub timespan: Option<f64>,
    #[serde(default = "d_levels")]
    pub levels: usize,
    #[serde(default = "d_center")]
    pub center: CenterKind,
    /// Fixed center; the domain center when absent.
    pub x0: Option<Point>,
    /// Directory holding snapshots/index.csv from an earlier simulate.
    pub trajectory: Option<String>,
    /// Sampling grid density relative to the collocation grid.
    #[serde(default = "d_density")]
    pub density: usize,
}

impl Default for HolderSection {
    fn default() -> Self {
        Self {
            eps: d_holder_eps(),
            radius: None,
            timespan: None,
            levels: d_levels(),
            center: d_center(),
            x0: None,
            trajectory: None,
            density: d_density(),
        }
    }
}

/// Problem sizes for the verification suites.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub kernel_m: usize,
    pub kernel_pairs: usize,
    pub bilinear_cells: usize,
    pub lp_m: usize,
    pub commutator_m: usize,
    pub calibration_m: usize,
    pub interpolation_m: usize,
    pub interpolation_seeds: u64,
    pub barrier_zmax: f64,
    pub barrier_nodes: usize,
    pub ladder_levels: usize,
    pub slack: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            kernel_m: 8,
            kernel_pairs: 40,
            bilinear_cells: 32,
            lp_m: 32,
            commutator_m: 16,
            calibration_m: 16,
            interpolation_m: 10,
            interpolation_seeds: 4,
            barrier_zmax: 1e6,
            barrier_nodes: 4000,
            ladder_levels: 8,
            slack: 10.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub domain: DomainSection,
    pub truncation: TruncationSection,
    pub solver: SolverSection,
    pub initial: InitialData,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub holder: HolderSection,
    #[serde(default)]
    pub verify: VerifySection,
}

impl Config {
    pub fn domain(&self) -> Result<DomainSpec> {
        let d = &self.domain;
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| Error::InvalidArgument(format!("domain.{key} is required for a {:?} domain", d.shape)))
        };
        match d.shape {
            ShapeKind::Rectangle => {
                if d.radius.is_some() {
                    return Err(Error::InvalidArgument("domain.radius applies to disks only".into()));
                }
                DomainSpec::rectangle(need(d.lx, "lx")?, need(d.ly, "ly")?)
            }
            ShapeKind::Disk => {
                if d.lx.is_some() || d.ly.is_some() {
                    return Err(Error::InvalidArgument("domain.lx and domain.ly apply to rectangles only".into()));
                }
                DomainSpec::disk(need(d.radius, "radius")?)
            }
        }
    }

    pub fn basis(&self) -> Result<Arc<EigenBasis>> {
        build_basis(self.domain()?, Truncation::new(self.truncation.mx, self.truncation.my))
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let s = &self.solver;
        let cfg = SolverConfig {
            epsilon: s.epsilon,
            dt: s.dt,
            t_end: s.t_end,
            dealias_pad: s.pad,
            scheme: s.scheme,
            record_stride: s.record_stride,
            seed: s.seed,
            tol_energy: s.tol_energy,
            cfl: s.cfl,
            max_halvings: s.max_halvings,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn initial_field(&self, basis: &Arc<EigenBasis>) -> Result<SpectralField> {
        self.initial.build(basis, self.solver.seed)
    }

    /// Check everything that can be checked without running anything.
    pub fn validate(&self) -> Result<()> {
        let basis = self.basis()?;
        self.solver_config()?;
        self.initial_field(&basis)?;
        let h = &self.holder;
        if !(h.eps > 0.0 && h.eps < 1.0) {
            return Err(Error::InvalidArgument(format!("holder.eps must lie in (0, 1), got {}", h.eps)));
        }
        if h.center == CenterKind::Path && h.eps > 0.2 {
            return Err(Error::InvalidArgument("holder.center = \"path\" needs holder.eps <= 0.2".into()));
        }
        if h.density == 0 {
            return Err(Error::InvalidArgument("holder.density must be at least 1".into()));
        }
        Ok(())
    }
}
