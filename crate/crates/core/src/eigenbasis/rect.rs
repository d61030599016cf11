//! Sine basis on (0,Lx)×(0,Ly). Sums of sin/cos series at the equispaced
//! nodes x_i = i·Lx/P (boundary included) are evaluated with one complex FFT
//! of length 2P: Σ a_m e^{iπmi/P} carries the cosine sum in its real part and
//! the sine sum in its imaginary part.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Deriv, Jet, ModeId, Point};

pub(crate) struct RectBasis {
    pub mx: usize,
    pub my: usize,
    pub lx: f64,
    pub ly: f64,
    /// Sorted position of mode (m, n), stored at `(n-1)*mx + (m-1)`.
    pub slot: Vec<usize>,
    norm: f64,
}

pub(crate) struct RectGrid {
    pub px: usize,
    pub py: usize,
    pub hx: f64,
    pub hy: f64,
    fft_x: Arc<dyn Fft<f64>>,
    fft_y: Arc<dyn Fft<f64>>,
}

impl RectGrid {
    pub fn nx(&self) -> usize {
        self.px + 1
    }
    pub fn ny(&self) -> usize {
        self.py + 1
    }
}

fn order_pair(d: Deriv) -> (u32, u32) {
    match d {
        Deriv::Value => (0, 0),
        Deriv::Dx => (1, 0),
        Deriv::Dy => (0, 1),
        Deriv::Dxx => (2, 0),
        Deriv::Dxy => (1, 1),
        Deriv::Dyy => (0, 2),
    }
}

/// Multiplier applied to sin(kx) by differentiating `order` times, paired with
/// whether the result is a cosine series.
fn diff_factor(k: f64, order: u32) -> (f64, bool) {
    match order {
        0 => (1.0, false),
        1 => (k, true),
        2 => (-k * k, false),
        _ => unreachable!(),
    }
}

impl RectBasis {
    pub fn new(mx: usize, my: usize, lx: f64, ly: f64) -> (Self, Vec<ModeId>, Vec<f64>) {
        let mut list: Vec<(f64, u32, u32)> = Vec::with_capacity(mx * my);
        for m in 1..=mx {
            for n in 1..=my {
                let lam = PI * PI * ((m * m) as f64 / (lx * lx) + (n * n) as f64 / (ly * ly));
                list.push((lam, m as u32, n as u32));
            }
        }
        list.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        let mut slot = vec![0; mx * my];
        for (pos, &(_, m, n)) in list.iter().enumerate() {
            slot[(n as usize - 1) * mx + (m as usize - 1)] = pos;
        }
        let modes = list.iter().map(|&(_, m, n)| ModeId::Rect { m, n }).collect();
        let eig = list.iter().map(|t| t.0).collect();
        let norm = 2.0 / (lx * ly).sqrt();
        (Self { mx, my, lx, ly, slot, norm }, modes, eig)
    }

    pub fn make_grid(&self, density: usize) -> (RectGrid, Vec<Point>, Vec<f64>) {
        let px = density * (self.mx + 1);
        let py = density * (self.my + 1);
        let hx = self.lx / px as f64;
        let hy = self.ly / py as f64;
        let mut planner = FftPlanner::new();
        let fft_x = planner.plan_fft_inverse(2 * px);
        let fft_y = planner.plan_fft_inverse(2 * py);
        let mut points = Vec::with_capacity((px + 1) * (py + 1));
        let mut weights = Vec::with_capacity((px + 1) * (py + 1));
        for j in 0..=py {
            let wy = if j == 0 || j == py { 0.5 * hy } else { hy };
            for i in 0..=px {
                let wx = if i == 0 || i == px { 0.5 * hx } else { hx };
                points.push([i as f64 * hx, j as f64 * hy]);
                weights.push(wx * wy);
            }
        }
        (RectGrid { px, py, hx, hy, fft_x, fft_y }, points, weights)
    }

    pub fn wavenumbers(&self) -> (Vec<f64>, Vec<f64>) {
        (
            (1..=self.mx).map(|m| m as f64 * PI / self.lx).collect(),
            (1..=self.my).map(|n| n as f64 * PI / self.ly).collect(),
        )
    }

    pub fn eval(&self, g: &RectGrid, coeffs: &[f64], d: Deriv) -> Vec<f64> {
        let (ox, oy) = order_pair(d);
        let (kx, ky) = self.wavenumbers();
        let (mx, my) = (self.mx, self.my);
        let (nx, ny) = (g.nx(), g.ny());
        let (lenx, leny) = (2 * g.px, 2 * g.py);
        let fx: Vec<(f64, bool)> = kx.iter().map(|&k| diff_factor(k, ox)).collect();
        let fy: Vec<(f64, bool)> = ky.iter().map(|&k| diff_factor(k, oy)).collect();
        let cos_x = fx[0].1;
        let cos_y = fy[0].1;

        // Pass 1: for each n, sum over m along x.
        let mut buf = vec![Complex64::new(0.0, 0.0); my * lenx];
        for n in 0..my {
            let row = &mut buf[n * lenx..(n + 1) * lenx];
            for m in 0..mx {
                let c = coeffs[self.slot[n * mx + m]];
                row[m + 1] = Complex64::new(c * self.norm * fx[m].0 * fy[n].0, 0.0);
            }
        }
        g.fft_x.process(&mut buf);
        // Pass 2: for each node i, sum over n along y.
        let mut buf2 = vec![Complex64::new(0.0, 0.0); nx * leny];
        for n in 0..my {
            let row = &buf[n * lenx..(n + 1) * lenx];
            for i in 0..nx {
                let v = if cos_x { row[i].re } else { row[i].im };
                buf2[i * leny + n + 1] = Complex64::new(v, 0.0);
            }
        }
        g.fft_y.process(&mut buf2);
        let mut out = vec![0.0; nx * ny];
        for i in 0..nx {
            let col = &buf2[i * leny..(i + 1) * leny];
            for j in 0..ny {
                out[j * nx + i] = if cos_y { col[j].re } else { col[j].im };
            }
        }
        out
    }

    /// Discrete projection onto the sine modes. Exact for sine series with
    /// frequencies below 2P − M in each direction.
    pub fn analyze(&self, g: &RectGrid, values: &[f64]) -> Vec<f64> {
        let (mx, my) = (self.mx, self.my);
        let (nx, ny) = (g.nx(), g.ny());
        let (lenx, leny) = (2 * g.px, 2 * g.py);
        let mut buf = vec![Complex64::new(0.0, 0.0); ny * lenx];
        for j in 0..ny {
            for i in 0..nx {
                buf[j * lenx + i] = Complex64::new(values[j * nx + i], 0.0);
            }
        }
        g.fft_x.process(&mut buf);
        let mut buf2 = vec![Complex64::new(0.0, 0.0); mx * leny];
        for j in 0..ny {
            for m in 0..mx {
                buf2[m * leny + j] = Complex64::new(buf[j * lenx + m + 1].im, 0.0);
            }
        }
        g.fft_y.process(&mut buf2);
        let scale = self.norm * g.hx * g.hy;
        let mut out = vec![0.0; mx * my];
        for m in 0..mx {
            for n in 0..my {
                out[self.slot[n * mx + m]] = buf2[m * leny + n + 1].im * scale;
            }
        }
        out
    }

    fn trig_tables(&self, p: Point) -> [Vec<f64>; 4] {
        let (kx, ky) = self.wavenumbers();
        let (sx, cx): (Vec<f64>, Vec<f64>) = kx.iter().map(|k| (k * p[0]).sin_cos()).unzip();
        let (sy, cy): (Vec<f64>, Vec<f64>) = ky.iter().map(|k| (k * p[1]).sin_cos()).unzip();
        [sx, cx, sy, cy]
    }

    pub fn mode_values(&self, p: Point) -> Vec<f64> {
        let [sx, _, sy, _] = self.trig_tables(p);
        let mut out = vec![0.0; self.mx * self.my];
        for n in 0..self.my {
            for m in 0..self.mx {
                out[self.slot[n * self.mx + m]] = self.norm * sx[m] * sy[n];
            }
        }
        out
    }

    pub fn jet(&self, coeffs: &[f64], p: Point) -> Jet {
        let [sx, cx, sy, cy] = self.trig_tables(p);
        let (kx, ky) = self.wavenumbers();
        let mut j = Jet::default();
        for n in 0..self.my {
            for m in 0..self.mx {
                let c = coeffs[self.slot[n * self.mx + m]] * self.norm;
                if c == 0.0 {
                    continue;
                }
                j.v += c * sx[m] * sy[n];
                j.dx += c * kx[m] * cx[m] * sy[n];
                j.dy += c * ky[n] * sx[m] * cy[n];
                j.dxx -= c * kx[m] * kx[m] * sx[m] * sy[n];
                j.dxy += c * kx[m] * ky[n] * cx[m] * cy[n];
                j.dyy -= c * ky[n] * ky[n] * sx[m] * sy[n];
            }
        }
        j
    }
}
