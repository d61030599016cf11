use serde::Serialize;

use crate::eigenbasis::Point;
use crate::error::{Error, Result};

/// Radial barrier ψ: 0 for |x| ≤ r_in, 2 + (|x|^{1/4} − 2^{1/4})₊ for
/// |x| ≥ r_out, and a quintic in between matching value, slope and curvature
/// at both ends.
#[derive(Clone, Debug, Serialize)]
pub struct BarrierFn {
    r_in: f64,
    r_out: f64,
    /// q(s) = a s³ + b s⁴ + c s⁵ on s = (r − r_in)/(r_out − r_in).
    quintic: [f64; 3],
    pub grad_sup: f64,
    pub hess_sup: f64,
    pub holder_quarter: f64,
}

fn outer(r: f64) -> [f64; 3] {
    let q = 2f64.powf(0.25);
    let v = 2.0 + (r.powf(0.25) - q).max(0.0);
    // One-sided derivatives from the right at the kink r = 2.
    if r >= 2.0 {
        [v, 0.25 * r.powf(-0.75), -0.1875 * r.powf(-1.75)]
    } else {
        [v, 0.0, 0.0]
    }
}

impl BarrierFn {
    pub fn new(r_in: f64, r_out: f64) -> Result<Self> {
        if !(r_in > 0.0 && r_out > r_in && r_out >= 2.0) {
            return Err(Error::InvalidArgument(format!(
                "barrier radii must satisfy 0 < r_in < r_out and r_out >= 2, got {r_in}, {r_out}"
            )));
        }
        let w = r_out - r_in;
        let [g, g1, g2] = outer(r_out);
        let (g1, g2) = (g1 * w, g2 * w * w);
        let quintic = [10.0 * g - 4.0 * g1 + 0.5 * g2, -15.0 * g + 7.0 * g1 - g2, 6.0 * g - 3.0 * g1 + 0.5 * g2];
        let mut b = Self { r_in, r_out, quintic, grad_sup: 0.0, hess_sup: 0.0, holder_quarter: 0.0 };
        b.measure();
        Ok(b)
    }

    /// ψ = 0 on the unit ball, barrier growth beyond radius 2.
    pub fn standard() -> Self {
        Self::new(1.0, 2.0).expect("valid radii")
    }

    pub fn r_in(&self) -> f64 {
        self.r_in
    }
    pub fn r_out(&self) -> f64 {
        self.r_out
    }

    /// (ψ, ψ', ψ'') as functions of the radius.
    pub fn radial_jet(&self, r: f64) -> [f64; 3] {
        if r <= self.r_in {
            return [0.0; 3];
        }
        if r >= self.r_out {
            return outer(r);
        }
        let w = self.r_out - self.r_in;
        let s = (r - self.r_in) / w;
        let [a, b, c] = self.quintic;
        let v = s * s * s * (a + s * (b + s * c));
        let d = s * s * (3.0 * a + s * (4.0 * b + 5.0 * c * s)) / w;
        let dd = s * (6.0 * a + s * (12.0 * b + 20.0 * c * s)) / (w * w);
        [v, d, dd]
    }

    pub fn radial(&self, r: f64) -> f64 {
        self.radial_jet(r)[0]
    }

    pub fn value(&self, x: Point) -> f64 {
        self.radial(x[0].hypot(x[1]))
    }

    pub fn gradient(&self, x: Point) -> [f64; 2] {
        let r = x[0].hypot(x[1]);
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let d = self.radial_jet(r)[1];
        [d * x[0] / r, d * x[1] / r]
    }

    /// Spectral norm of the Hessian: max(|ψ''|, |ψ'/r|).
    pub fn hessian_norm(&self, x: Point) -> f64 {
        let r = x[0].hypot(x[1]);
        if r <= self.r_in {
            return 0.0;
        }
        let [_, d, dd] = self.radial_jet(r);
        dd.abs().max((d / r).abs())
    }

    fn measure(&mut self) {
        let n = 4000;
        let (mut g, mut h) = (0.0f64, 0.0f64);
        for i in 0..=n {
            let r = self.r_in + (self.r_out - self.r_in) * i as f64 / n as f64;
            let [_, d, dd] = self.radial_jet(r);
            g = g.max(d.abs());
            h = h.max(dd.abs()).max((d / r).abs());
        }
        // Outside r_out both derivatives decay monotonically.
        let [_, d, dd] = outer(self.r_out);
        self.grad_sup = g.max(d.abs());
        self.hess_sup = h.max(dd.abs()).max(d.abs() / self.r_out);
        // For a nondecreasing radial profile the quarter-Hölder quotient is
        // largest along a ray, so a one-dimensional scan suffices.
        let mut rs: Vec<f64> = (0..=1500).map(|i| (self.r_out + 1.0) * i as f64 / 1500.0).collect();
        rs.extend((1..=300).map(|i| (self.r_out + 1.0) * 1e4f64.powf(i as f64 / 300.0)));
        let vals: Vec<f64> = rs.iter().map(|&r| self.radial(r)).collect();
        let mut best = 0.0f64;
        for i in 0..rs.len() {
            for j in i + 1..rs.len() {
                best = best.max((vals[j] - vals[i]).abs() / (rs[j] - rs[i]).powf(0.25));
            }
        }
        self.holder_quarter = best;
    }
}
