//! Dirichlet eigensystems on rectangles and disks, transforms between
//! coefficient and grid representations, and the spectral multipliers built
//! on them (fractional powers, gradients, the Riesz velocity ∇⊥Λ⁻¹).

mod disk;
pub mod domain;
pub mod embedding;
mod rect;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use domain::{DomainSpec, Point, Shape};
pub use embedding::{extension_embedding_check, EmbeddingReport};

use crate::error::{Error, Result};
use disk::{DiskBasis, DiskGrid};
use rect::{RectBasis, RectGrid};

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModeId {
    Rect { m: u32, n: u32 },
    /// `sine` selects sin(mφ) over cos(mφ); only m ≥ 1 has a sine partner.
    Disk { m: u32, k: u32, sine: bool },
}

/// Mode counts. Rectangle: `first`×`second` = Mx×My tensor modes.
/// Disk: angular orders 0..=`first`, radial indices 1..=`second`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    pub first: usize,
    pub second: usize,
}

impl Truncation {
    pub fn new(first: usize, second: usize) -> Self {
        Self { first, second }
    }
    pub fn square(m: usize) -> Self {
        Self { first: m, second: m }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Deriv {
    Value,
    Dx,
    Dy,
    Dxx,
    Dxy,
    Dyy,
}

/// Value, gradient and Hessian at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

enum Kind {
    Rect(RectBasis),
    Disk(DiskBasis),
}

enum Layout {
    Tensor(RectGrid),
    Polar(DiskGrid),
}

/// Quadrature nodes tied to one basis. `density` 1 is the collocation grid,
/// 2 the oversampled grid used for products and sup norms.
pub struct Grid {
    basis_id: u64,
    density: usize,
    points: Vec<Point>,
    weights: Vec<f64>,
    layout: Layout,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
    pub fn density(&self) -> usize {
        self.density
    }
    pub fn points(&self) -> &[Point] {
        &self.points
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// (nx, ny, hx, hy) for tensor grids; values are stored x-fastest.
    pub fn tensor_dims(&self) -> Option<(usize, usize, f64, f64)> {
        match &self.layout {
            Layout::Tensor(g) => Some((g.nx(), g.ny(), g.hx, g.hy)),
            Layout::Polar(_) => None,
        }
    }

    /// (radial nodes, angular nodes) for polar grids; values are stored φ-fastest.
    pub fn polar_dims(&self) -> Option<(usize, usize)> {
        match &self.layout {
            Layout::Polar(g) => Some((g.n_r(), g.n_phi())),
            Layout::Tensor(_) => None,
        }
    }

    pub fn min_spacing(&self) -> f64 {
        match &self.layout {
            Layout::Tensor(g) => g.hx.min(g.hy),
            Layout::Polar(g) => {
                let dr = g.r.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
                let rmax = *g.r.last().unwrap();
                dr.min(rmax * g.dphi)
            }
        }
    }

    /// Nodes on the boundary of the domain (rectangle grids only).
    pub fn is_boundary(&self, idx: usize) -> bool {
        match &self.layout {
            Layout::Tensor(g) => {
                let (i, j) = (idx % g.nx(), idx / g.nx());
                i == 0 || j == 0 || i == g.px || j == g.py
            }
            Layout::Polar(_) => false,
        }
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}

pub struct EigenBasis {
    id: u64,
    domain: DomainSpec,
    truncation: Truncation,
    modes: Vec<ModeId>,
    eigenvalues: Vec<f64>,
    kind: Kind,
    grid: Arc<Grid>,
    fine: Arc<Grid>,
}

impl std::fmt::Debug for EigenBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EigenBasis")
            .field("domain", &self.domain)
            .field("truncation", &self.truncation)
            .field("modes", &self.modes.len())
            .finish()
    }
}

/// Build the Dirichlet eigensystem of `domain` truncated to `truncation`.
pub fn build_basis(domain: DomainSpec, truncation: Truncation) -> Result<Arc<EigenBasis>> {
    domain.validate()?;
    if truncation.first == 0 || truncation.second == 0 {
        return Err(Error::InvalidTruncation(format!(
            "mode counts must be at least 1 in each direction, got {}×{}",
            truncation.first, truncation.second
        )));
    }
    let id = NEXT_ID.fetch_add(1, Ordering::Relaxed);
    let (kind, modes, eigenvalues) = match domain.shape {
        Shape::Rectangle { .. } => {
            let (lx, ly) = domain.sides().unwrap();
            let (b, m, e) = RectBasis::new(truncation.first, truncation.second, lx, ly);
            (Kind::Rect(b), m, e)
        }
        Shape::Disk { .. } => {
            let r = domain.radius().unwrap();
            let (b, m, e) = DiskBasis::new(truncation.first, truncation.second, r);
            (Kind::Disk(b), m, e)
        }
    };
    let grid = Arc::new(make_grid(&kind, id, 1));
    let fine = Arc::new(make_grid(&kind, id, 2));
    Ok(Arc::new(EigenBasis { id, domain, truncation, modes, eigenvalues, kind, grid, fine }))
}

fn make_grid(kind: &Kind, basis_id: u64, density: usize) -> Grid {
    let (layout, points, weights) = match kind {
        Kind::Rect(b) => {
            let (g, p, w) = b.make_grid(density);
            (Layout::Tensor(g), p, w)
        }
        Kind::Disk(b) => {
            let (g, p, w) = b.make_grid(density);
            (Layout::Polar(g), p, w)
        }
    };
    Grid { basis_id, density, points, weights, layout }
}

impl EigenBasis {
    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }
    pub fn truncation(&self) -> Truncation {
        self.truncation
    }
    pub fn len(&self) -> usize {
        self.modes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }
    pub fn modes(&self) -> &[ModeId] {
        &self.modes
    }
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
    pub fn lambda0(&self) -> f64 {
        self.eigenvalues[0]
    }
    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }
    /// Every Dirichlet eigenvalue of the domain below this value is in the basis.
    pub fn lambda_complete(&self) -> f64 {
        match &self.kind {
            Kind::Rect(b) => {
                let (kx, ky) = (std::f64::consts::PI / b.lx, std::f64::consts::PI / b.ly);
                let lx = kx * kx * ((b.mx + 1) * (b.mx + 1)) as f64 + ky * ky;
                let ly = kx * kx + ky * ky * ((b.my + 1) * (b.my + 1)) as f64;
                lx.min(ly)
            }
            Kind::Disk(b) => b.lambda_complete,
        }
    }
    pub fn index_of(&self, mode: ModeId) -> Option<usize> {
        self.modes.iter().position(|&m| m == mode)
    }
    pub fn is_disk(&self) -> bool {
        matches!(self.kind, Kind::Disk(_))
    }

    /// Collocation grid (density 1).
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    /// Oversampled grid (density 2).
    pub fn fine_grid(&self) -> &Arc<Grid> {
        &self.fine
    }
    /// A fresh grid at any density ≥ 1.
    pub fn make_grid(&self, density: usize) -> Arc<Grid> {
        match density {
            1 => self.grid.clone(),
            2 => self.fine.clone(),
            d => Arc::new(make_grid(&self.kind, self.id, d.max(1))),
        }
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        if grid.basis_id == self.id {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    /// Σ c_k ∂e_k at the nodes of `grid`.
    pub fn eval_grid(&self, grid: &Grid, coeffs: &[f64], d: Deriv) -> Result<Vec<f64>> {
        self.check_grid(grid)?;
        if coeffs.len() != self.len() {
            return Err(Error::BasisMismatch);
        }
        Ok(match (&self.kind, &grid.layout) {
            (Kind::Rect(b), Layout::Tensor(g)) => b.eval(g, coeffs, d),
            (Kind::Disk(b), Layout::Polar(g)) => b.eval(g, coeffs, d),
            _ => return Err(Error::BasisMismatch),
        })
    }

    /// Quadrature projection of nodal values onto the modes.
    pub fn project_grid(&self, grid: &Grid, values: &[f64]) -> Result<Vec<f64>> {
        self.check_grid(grid)?;
        if values.len() != grid.len() {
            return Err(Error::BasisMismatch);
        }
        Ok(match (&self.kind, &grid.layout) {
            (Kind::Rect(b), Layout::Tensor(g)) => b.analyze(g, values),
            (Kind::Disk(b), Layout::Polar(g)) => b.analyze(g, values),
            _ => return Err(Error::BasisMismatch),
        })
    }

    /// e_k(p) for every mode, in mode order.
    pub fn mode_values(&self, p: Point) -> Vec<f64> {
        match &self.kind {
            Kind::Rect(b) => b.mode_values(p),
            Kind::Disk(b) => b.mode_values(p),
        }
    }

    pub fn jet(&self, coeffs: &[f64], p: Point) -> Jet {
        match &self.kind {
            Kind::Rect(b) => b.jet(coeffs, p),
            Kind::Disk(b) => b.jet(coeffs, p),
        }
    }

    /// Rectangle mode numbers (m, n) per mode; disk (m, k).
    pub fn mode_numbers(&self, idx: usize) -> (u32, u32) {
        match self.modes[idx] {
            ModeId::Rect { m, n } => (m, n),
            ModeId::Disk { m, k, .. } => (m, k),
        }
    }

    /// L² projection of a pointwise-defined function, sampled on the fine grid.
    pub fn project_fn(self: &Arc<Self>, f: impl Fn(Point) -> f64) -> SpectralField {
        let values: Vec<f64> = self.fine.points.iter().map(|&p| f(p)).collect();
        let coeffs = self.project_grid(&self.fine, &values).expect("own grid");
        SpectralField { basis: self.clone(), coeffs }
    }
}

/// Scalar nodal values on a grid.
#[derive(Clone)]
pub struct GridField {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "grid has {} nodes, got {} values",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
    pub fn l2_norm(&self) -> f64 {
        self.grid.integrate(&self.values.iter().map(|v| v * v).collect::<Vec<_>>()).sqrt()
    }
    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }
}

/// Vector field sampled at the nodes of a grid.
#[derive(Clone)]
pub struct VectorField {
    pub grid: Arc<Grid>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl VectorField {
    pub fn sup_norm(&self) -> f64 {
        self.x.iter().zip(&self.y).fold(0.0, |a, (x, y)| a.max(x.hypot(*y)))
    }
    pub fn l2_norm(&self) -> f64 {
        let sq: Vec<f64> = self.x.iter().zip(&self.y).map(|(x, y)| x * x + y * y).collect();
        self.grid.integrate(&sq).sqrt()
    }
    pub fn add(&mut self, other: &VectorField) {
        for (a, b) in self.x.iter_mut().zip(&other.x) {
            *a += b;
        }
        for (a, b) in self.y.iter_mut().zip(&other.y) {
            *a += b;
        }
    }
    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Self { grid, x: vec![0.0; n], y: vec![0.0; n] }
    }
}

/// Coefficients over an eigenbasis, in mode order.
#[derive(Clone)]
pub struct SpectralField {
    basis: Arc<EigenBasis>,
    pub coeffs: Vec<f64>,
}

impl std::fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralField").field("coeffs", &self.coeffs).finish()
    }
}

impl SpectralField {
    pub fn new(basis: Arc<EigenBasis>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::InvalidArgument(format!(
                "basis has {} modes, got {} coefficients",
                basis.len(),
                coeffs.len()
            )));
        }
        Ok(Self { basis, coeffs })
    }
    pub fn zeros(basis: &Arc<EigenBasis>) -> Self {
        Self { basis: basis.clone(), coeffs: vec![0.0; basis.len()] }
    }
    pub fn unit(basis: &Arc<EigenBasis>, k: usize) -> Self {
        let mut f = Self::zeros(basis);
        f.coeffs[k] = 1.0;
        f
    }
    /// Seeded random coefficients, uniform in [-1,1] and damped by
    /// (λ_k/λ_0)^{-decay/2}.
    pub fn random(basis: &Arc<EigenBasis>, seed: u64, decay: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l0 = basis.lambda0();
        let coeffs = basis
            .eigenvalues
            .iter()
            .map(|l| rng.gen_range(-1.0..1.0) * (l / l0).powf(-0.5 * decay))
            .collect();
        Self { basis: basis.clone(), coeffs }
    }
    /// Like `random` but only modes with √λ ≤ `kmax` are populated.
    pub fn random_band_limited(basis: &Arc<EigenBasis>, seed: u64, kmax: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = basis
            .eigenvalues
            .iter()
            .map(|l| {
                let v: f64 = rng.gen_range(-1.0..1.0);
                if l.sqrt() <= kmax {
                    v
                } else {
                    0.0
                }
            })
            .collect();
        Self { basis: basis.clone(), coeffs }
    }

    pub fn basis(&self) -> &Arc<EigenBasis> {
        &self.basis
    }
    pub fn same_basis(&self, other: &SpectralField) -> bool {
        Arc::ptr_eq(&self.basis, &other.basis)
    }
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
    pub fn dot(&self, other: &SpectralField) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }
    pub fn scaled(&self, a: f64) -> Self {
        self.map_coeffs(|_, c| a * c)
    }
    pub fn add(&self, other: &SpectralField) -> Result<Self> {
        if !self.same_basis(other) {
            return Err(Error::BasisMismatch);
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Self { basis: self.basis.clone(), coeffs })
    }
    pub fn sub(&self, other: &SpectralField) -> Result<Self> {
        self.add(&other.scaled(-1.0))
    }
    /// Coefficient-wise map with access to λ_k.
    pub fn map_coeffs(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&self.basis.eigenvalues)
            .map(|(c, l)| f(*l, *c))
            .collect();
        Self { basis: self.basis.clone(), coeffs }
    }

    pub fn eval_on(&self, grid: &Grid, d: Deriv) -> Result<Vec<f64>> {
        self.basis.eval_grid(grid, &self.coeffs, d)
    }
    pub fn synthesize_on(&self, grid: &Arc<Grid>) -> Result<GridField> {
        Ok(GridField { grid: grid.clone(), values: self.eval_on(grid, Deriv::Value)? })
    }
    pub fn eval_point(&self, p: Point) -> f64 {
        let e = self.basis.mode_values(p);
        e.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum()
    }
    pub fn jet(&self, p: Point) -> Jet {
        self.basis.jet(&self.coeffs, p)
    }
}

/// Nodal values of `field` on its basis's collocation grid.
pub fn synthesize(field: &SpectralField) -> GridField {
    field.synthesize_on(field.basis.grid()).expect("own grid")
}

/// Coefficients of a grid field with respect to `basis`.
pub fn analyze(basis: &Arc<EigenBasis>, field: &GridField) -> Result<SpectralField> {
    let coeffs = basis.project_grid(&field.grid, &field.values)?;
    Ok(SpectralField { basis: basis.clone(), coeffs })
}

/// Multiply coefficient k by λ_k^{s/2}.
pub fn apply_fractional(f: &SpectralField, s: f64) -> SpectralField {
    if s == 0.0 {
        return f.clone();
    }
    f.map_coeffs(|l, c| c * l.powf(0.5 * s))
}

/// (Σ λ_k^s f_k²)^{1/2}.
pub fn sobolev_norm(f: &SpectralField, s: f64) -> f64 {
    f.coeffs
        .iter()
        .zip(&f.basis.eigenvalues)
        .map(|(c, l)| if s == 0.0 { c * c } else { l.powf(s) * c * c })
        .sum::<f64>()
        .sqrt()
}

pub fn gradient_on(f: &SpectralField, grid: &Arc<Grid>) -> Result<VectorField> {
    Ok(VectorField {
        grid: grid.clone(),
        x: f.eval_on(grid, Deriv::Dx)?,
        y: f.eval_on(grid, Deriv::Dy)?,
    })
}

/// ∇f on the collocation grid by term-by-term differentiation.
pub fn gradient(f: &SpectralField) -> VectorField {
    gradient_on(f, f.basis.grid()).expect("own grid")
}

/// Stream function Λ⁻¹θ.
pub fn stream_function(theta: &SpectralField) -> SpectralField {
    apply_fractional(theta, -1.0)
}

/// ∇⊥ψ = (−∂yψ, ∂xψ) for a stream function ψ, on `grid`.
pub fn perp_gradient_on(psi: &SpectralField, grid: &Arc<Grid>) -> Result<VectorField> {
    let dy = psi.eval_on(grid, Deriv::Dy)?;
    Ok(VectorField {
        grid: grid.clone(),
        x: dy.iter().map(|v| -v).collect(),
        y: psi.eval_on(grid, Deriv::Dx)?,
    })
}

pub fn riesz_velocity_on(theta: &SpectralField, grid: &Arc<Grid>) -> Result<VectorField> {
    perp_gradient_on(&stream_function(theta), grid)
}

/// u = ∇⊥Λ⁻¹θ on the collocation grid.
pub fn riesz_velocity(theta: &SpectralField) -> VectorField {
    riesz_velocity_on(theta, theta.basis.grid()).expect("own grid")
}

/// Velocity at a single point.
pub fn riesz_velocity_at(theta: &SpectralField, p: Point) -> [f64; 2] {
    let j = stream_function(theta).jet(p);
    [-j.dy, j.dx]
}

/// sup |f| over Ω: maximum over the oversampled grid, then Newton polishing of
/// the largest nodal candidates.
pub fn sup_norm(f: &SpectralField) -> f64 {
    let basis = f.basis();
    let grid = basis.fine_grid();
    let vals = f.eval_on(grid, Deriv::Value).expect("own grid");
    let mut best = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if best == 0.0 {
        return 0.0;
    }
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| vals[b].abs().total_cmp(&vals[a].abs()));
    let h = grid.min_spacing();
    let dom = basis.domain();
    for &i in idx.iter().take(6) {
        let mut p = grid.points()[i];
        if grid.is_boundary(i) {
            continue;
        }
        for _ in 0..8 {
            let j = f.jet(p);
            let det = j.dxx * j.dyy - j.dxy * j.dxy;
            if det.abs() < 1e-300 {
                break;
            }
            let sx = (j.dyy * j.dx - j.dxy * j.dy) / det;
            let sy = (j.dxx * j.dy - j.dxy * j.dx) / det;
            let len = sx.hypot(sy);
            if len > 2.0 * h || !len.is_finite() {
                break;
            }
            let q = [p[0] - sx, p[1] - sy];
            if !dom.contains(q) {
                break;
            }
            p = q;
            if len < 1e-13 * dom.diameter() {
                break;
            }
        }
        best = best.max(f.eval_point(p).abs());
    }
    best
}
