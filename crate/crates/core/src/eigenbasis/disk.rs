//! Dirichlet eigenfunctions of a disk: N_{mk} J_m(j_{mk} r/R) {cos, sin}(mφ).
//! Quadrature is Gauss–Legendre in r (weight r dr) and the trapezoid rule in φ.

use std::f64::consts::PI;

use super::{Deriv, Jet, ModeId, Point};
use crate::special::{bessel_j_orders, bessel_zeros, gauss_legendre_on};

pub(crate) struct DiskBasis {
    pub m_ang: usize,
    pub m_rad: usize,
    pub radius: f64,
    /// Wavenumbers j_{mk}/R at `[m * m_rad + k]`.
    pub wavenumber: Vec<f64>,
    norm: Vec<f64>,
    pub slot_cos: Vec<usize>,
    /// `usize::MAX` for m = 0.
    pub slot_sin: Vec<usize>,
    /// Base radial node count at density 1.
    pub nr0: usize,
    /// Every Dirichlet eigenvalue below this is present in the basis.
    pub lambda_complete: f64,
}

pub(crate) struct DiskGrid {
    pub r: Vec<f64>,
    pub phi: Vec<f64>,
    /// R_{mk}(r_i) at `[(i * (m_ang+1) + m) * m_rad + k]`.
    radial: Vec<f64>,
    radial_d: Vec<f64>,
    cos_t: Vec<f64>,
    sin_t: Vec<f64>,
    pub rweight: Vec<f64>,
    pub dphi: f64,
}

impl DiskGrid {
    pub fn n_r(&self) -> usize {
        self.r.len()
    }
    pub fn n_phi(&self) -> usize {
        self.phi.len()
    }
}

struct Polar {
    f: f64,
    fr: f64,
    fp: f64,
    frr: f64,
    frp: f64,
    fpp: f64,
}

fn to_cartesian(p: &Polar, r: f64, c: f64, s: f64) -> Jet {
    let (r1, r2) = (1.0 / r, 1.0 / (r * r));
    Jet {
        v: p.f,
        dx: c * p.fr - s * p.fp * r1,
        dy: s * p.fr + c * p.fp * r1,
        dxx: c * c * p.frr + s * s * r1 * p.fr + s * s * r2 * p.fpp - 2.0 * c * s * r1 * p.frp
            + 2.0 * c * s * r2 * p.fp,
        dyy: s * s * p.frr + c * c * r1 * p.fr + c * c * r2 * p.fpp + 2.0 * c * s * r1 * p.frp
            - 2.0 * c * s * r2 * p.fp,
        dxy: c * s * p.frr - c * s * r1 * p.fr - c * s * r2 * p.fpp
            + (c * c - s * s) * r1 * p.frp
            - (c * c - s * s) * r2 * p.fp,
    }
}

fn pick(j: &Jet, d: Deriv) -> f64 {
    match d {
        Deriv::Value => j.v,
        Deriv::Dx => j.dx,
        Deriv::Dy => j.dy,
        Deriv::Dxx => j.dxx,
        Deriv::Dxy => j.dxy,
        Deriv::Dyy => j.dyy,
    }
}

impl DiskBasis {
    pub fn new(m_ang: usize, m_rad: usize, radius: f64) -> (Self, Vec<ModeId>, Vec<f64>) {
        let zeros = bessel_zeros(m_ang + 1, m_rad + 1);
        let first_missing = zeros[0][m_rad].min(zeros[m_ang + 1][0]) / radius;
        let mut list: Vec<(f64, u32, u32, bool)> = Vec::new();
        let mut wavenumber = vec![0.0; (m_ang + 1) * m_rad];
        let mut norm = vec![0.0; (m_ang + 1) * m_rad];
        let mut jmax: f64 = 0.0;
        for m in 0..=m_ang {
            for k in 0..m_rad {
                let j = zeros[m][k];
                jmax = jmax.max(j);
                let w = j / radius;
                wavenumber[m * m_rad + k] = w;
                let jm1 = bessel_j_orders(m + 1, j)[m + 1];
                let ang = if m == 0 { 2.0 * PI } else { PI };
                norm[m * m_rad + k] = 1.0 / (ang * 0.5 * radius * radius * jm1 * jm1).sqrt();
                list.push((w * w, m as u32, k as u32 + 1, false));
                if m > 0 {
                    list.push((w * w, m as u32, k as u32 + 1, true));
                }
            }
        }
        list.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2, a.3).cmp(&(b.1, b.2, b.3))));
        let mut slot_cos = vec![usize::MAX; (m_ang + 1) * m_rad];
        let mut slot_sin = vec![usize::MAX; (m_ang + 1) * m_rad];
        for (pos, &(_, m, k, sine)) in list.iter().enumerate() {
            let idx = m as usize * m_rad + (k as usize - 1);
            if sine {
                slot_sin[idx] = pos;
            } else {
                slot_cos[idx] = pos;
            }
        }
        let modes = list
            .iter()
            .map(|&(_, m, k, sine)| ModeId::Disk { m, k, sine })
            .collect();
        let eig = list.iter().map(|t| t.0).collect();
        // Products of two radial modes oscillate with total wavenumber up to
        // 2·jmax; Gauss–Legendre with n nodes is exact to degree 2n−1.
        let nr0 = (2 * m_rad).max((0.75 * jmax) as usize + 24);
        let lambda_complete = first_missing * first_missing;
        let basis = Self { m_ang, m_rad, radius, wavenumber, norm, slot_cos, slot_sin, nr0, lambda_complete };
        (basis, modes, eig)
    }

    pub fn n_phi0(&self) -> usize {
        2 * self.m_ang + 2
    }

    fn radial_at(&self, r: f64, m: usize, k: usize) -> (f64, f64) {
        let idx = m * self.m_rad + k;
        let w = self.wavenumber[idx];
        let j = bessel_j_orders(m + 1, w * r);
        let d = if m == 0 { -j[1] } else { 0.5 * (j[m - 1] - j[m + 1]) };
        (self.norm[idx] * j[m], self.norm[idx] * w * d)
    }

    pub fn make_grid(&self, density: usize) -> (DiskGrid, Vec<Point>, Vec<f64>) {
        let n_r = density * self.nr0;
        let n_phi = density * self.n_phi0();
        let (r, w) = gauss_legendre_on(n_r, 0.0, self.radius);
        let rweight: Vec<f64> = r.iter().zip(&w).map(|(r, w)| r * w).collect();
        let dphi = 2.0 * PI / n_phi as f64;
        let phi: Vec<f64> = (0..n_phi).map(|l| l as f64 * dphi).collect();
        let ma = self.m_ang + 1;
        let mut radial = vec![0.0; n_r * ma * self.m_rad];
        let mut radial_d = vec![0.0; n_r * ma * self.m_rad];
        for (i, &ri) in r.iter().enumerate() {
            for m in 0..ma {
                for k in 0..self.m_rad {
                    let (v, d) = self.radial_at(ri, m, k);
                    radial[(i * ma + m) * self.m_rad + k] = v;
                    radial_d[(i * ma + m) * self.m_rad + k] = d;
                }
            }
        }
        let mut cos_t = vec![0.0; ma * n_phi];
        let mut sin_t = vec![0.0; ma * n_phi];
        for m in 0..ma {
            for l in 0..n_phi {
                let (s, c) = (m as f64 * phi[l]).sin_cos();
                cos_t[m * n_phi + l] = c;
                sin_t[m * n_phi + l] = s;
            }
        }
        let mut points = Vec::with_capacity(n_r * n_phi);
        let mut weights = Vec::with_capacity(n_r * n_phi);
        for i in 0..n_r {
            for l in 0..n_phi {
                let (s, c) = phi[l].sin_cos();
                points.push([r[i] * c, r[i] * s]);
                weights.push(rweight[i] * dphi);
            }
        }
        let g = DiskGrid { r, phi, radial, radial_d, cos_t, sin_t, rweight, dphi };
        (g, points, weights)
    }

    fn split(&self, coeffs: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = (self.m_ang + 1) * self.m_rad;
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        for idx in 0..n {
            a[idx] = coeffs[self.slot_cos[idx]];
            if self.slot_sin[idx] != usize::MAX {
                b[idx] = coeffs[self.slot_sin[idx]];
            }
        }
        (a, b)
    }

    pub fn eval(&self, g: &DiskGrid, coeffs: &[f64], d: Deriv) -> Vec<f64> {
        let (a, b) = self.split(coeffs);
        let (n_r, n_phi) = (g.n_r(), g.n_phi());
        let ma = self.m_ang + 1;
        let mr = self.m_rad;
        let value_only = d == Deriv::Value;
        let mut out = vec![0.0; n_r * n_phi];
        // Radial sums per (m, derivative order, parity).
        let mut rs = vec![[0.0f64; 6]; ma];
        for i in 0..n_r {
            let r = g.r[i];
            for m in 0..ma {
                let mut acc = [0.0; 6];
                for k in 0..mr {
                    let idx = m * mr + k;
                    let (ak, bk) = (a[idx], b[idx]);
                    if ak == 0.0 && bk == 0.0 {
                        continue;
                    }
                    let t = (i * ma + m) * mr + k;
                    let rv = g.radial[t];
                    acc[0] += ak * rv;
                    acc[1] += bk * rv;
                    if !value_only {
                        let rd = g.radial_d[t];
                        let w = self.wavenumber[idx];
                        let mm = (m * m) as f64;
                        let rdd = -rd / r - (w * w - mm / (r * r)) * rv;
                        acc[2] += ak * rd;
                        acc[3] += bk * rd;
                        acc[4] += ak * rdd;
                        acc[5] += bk * rdd;
                    }
                }
                rs[m] = acc;
            }
            for l in 0..n_phi {
                if value_only {
                    let mut f = 0.0;
                    for m in 0..ma {
                        f += rs[m][0] * g.cos_t[m * n_phi + l] + rs[m][1] * g.sin_t[m * n_phi + l];
                    }
                    out[i * n_phi + l] = f;
                    continue;
                }
                let mut p = Polar { f: 0.0, fr: 0.0, fp: 0.0, frr: 0.0, frp: 0.0, fpp: 0.0 };
                for m in 0..ma {
                    let (c, s) = (g.cos_t[m * n_phi + l], g.sin_t[m * n_phi + l]);
                    let mf = m as f64;
                    let acc = &rs[m];
                    let v = acc[0] * c + acc[1] * s;
                    p.f += v;
                    p.fr += acc[2] * c + acc[3] * s;
                    p.frr += acc[4] * c + acc[5] * s;
                    p.fp += mf * (-acc[0] * s + acc[1] * c);
                    p.frp += mf * (-acc[2] * s + acc[3] * c);
                    p.fpp -= mf * mf * v;
                }
                let (s1, c1) = g.phi[l].sin_cos();
                out[i * n_phi + l] = pick(&to_cartesian(&p, r, c1, s1), d);
            }
        }
        out
    }

    pub fn analyze(&self, g: &DiskGrid, values: &[f64]) -> Vec<f64> {
        let (n_r, n_phi) = (g.n_r(), g.n_phi());
        let ma = self.m_ang + 1;
        let mr = self.m_rad;
        let mut a = vec![0.0; ma * mr];
        let mut b = vec![0.0; ma * mr];
        for i in 0..n_r {
            let row = &values[i * n_phi..(i + 1) * n_phi];
            for m in 0..ma {
                let mut fc = 0.0;
                let mut fs = 0.0;
                for l in 0..n_phi {
                    fc += row[l] * g.cos_t[m * n_phi + l];
                    fs += row[l] * g.sin_t[m * n_phi + l];
                }
                let wi = g.rweight[i] * g.dphi;
                for k in 0..mr {
                    let rv = g.radial[(i * ma + m) * mr + k] * wi;
                    a[m * mr + k] += fc * rv;
                    b[m * mr + k] += fs * rv;
                }
            }
        }
        let mut out = vec![0.0; ma * mr + self.m_ang * mr];
        for idx in 0..ma * mr {
            out[self.slot_cos[idx]] = a[idx];
            if self.slot_sin[idx] != usize::MAX {
                out[self.slot_sin[idx]] = b[idx];
            }
        }
        out
    }

    pub fn mode_values(&self, p: Point) -> Vec<f64> {
        let r = p[0].hypot(p[1]);
        let phi = p[1].atan2(p[0]);
        let ma = self.m_ang + 1;
        let mut out = vec![0.0; ma * self.m_rad + self.m_ang * self.m_rad];
        for m in 0..ma {
            let (s, c) = (m as f64 * phi).sin_cos();
            for k in 0..self.m_rad {
                let idx = m * self.m_rad + k;
                let (rv, _) = self.radial_at(r, m, k);
                out[self.slot_cos[idx]] = rv * c;
                if self.slot_sin[idx] != usize::MAX {
                    out[self.slot_sin[idx]] = rv * s;
                }
            }
        }
        out
    }

    pub fn jet(&self, coeffs: &[f64], p: Point) -> Jet {
        // Polar formulas are singular at the origin; evaluate just off it.
        let mut r = p[0].hypot(p[1]);
        let mut phi = p[1].atan2(p[0]);
        if r < 1e-9 * self.radius {
            r = 1e-9 * self.radius;
            phi = 0.0;
        }
        let (a, b) = self.split(coeffs);
        let mut pol = Polar { f: 0.0, fr: 0.0, fp: 0.0, frr: 0.0, frp: 0.0, fpp: 0.0 };
        for m in 0..=self.m_ang {
            let (s, c) = (m as f64 * phi).sin_cos();
            let mf = m as f64;
            for k in 0..self.m_rad {
                let idx = m * self.m_rad + k;
                let (ak, bk) = (a[idx], b[idx]);
                if ak == 0.0 && bk == 0.0 {
                    continue;
                }
                let (rv, rd) = self.radial_at(r, m, k);
                let w = self.wavenumber[idx];
                let rdd = -rd / r - (w * w - mf * mf / (r * r)) * rv;
                let ang = ak * c + bk * s;
                let angd = mf * (-ak * s + bk * c);
                pol.f += rv * ang;
                pol.fr += rd * ang;
                pol.frr += rdd * ang;
                pol.fp += rv * angd;
                pol.frp += rd * angd;
                pol.fpp -= mf * mf * rv * ang;
            }
        }
        let (s, c) = phi.sin_cos();
        to_cartesian(&pol, r, c, s)
    }
}
