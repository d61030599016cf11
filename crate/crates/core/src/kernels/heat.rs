//! Dirichlet heat kernels.

use std::f64::consts::PI;

use crate::eigenbasis::{EigenBasis, Point};
use crate::error::{Error, Result};
use crate::special::erf;

/// Heat kernel of (0, l) with Dirichlet ends. Uses the image series when
/// t(π/l)² < 1 and the sine series otherwise; both are exact representations.
pub fn interval_kernel(l: f64, t: f64, x: f64, y: f64) -> f64 {
    let k1 = PI / l;
    if t * k1 * k1 < 1.0 {
        let c = 1.0 / (4.0 * PI * t).sqrt();
        let reach = (160.0 * t).sqrt();
        let nmax = ((reach + l) / (2.0 * l)).ceil() as i64 + 1;
        let mut sum = 0.0;
        for n in -nmax..=nmax {
            let shift = 2.0 * n as f64 * l;
            let a = x - y + shift;
            let b = x + y + shift;
            sum += (-a * a / (4.0 * t)).exp() - (-b * b / (4.0 * t)).exp();
        }
        c * sum
    } else {
        let mut sum = 0.0;
        let mut m = 1;
        loop {
            let k = m as f64 * k1;
            let decay = (-k * k * t).exp();
            sum += decay * (k * x).sin() * (k * y).sin();
            if decay < 1e-18 {
                break;
            }
            m += 1;
        }
        2.0 / l * sum
    }
}

/// ∫_0^l of the interval kernel in y: the probability of not yet having hit an end.
pub fn interval_survival(l: f64, t: f64, x: f64) -> f64 {
    let k1 = PI / l;
    if t * k1 * k1 < 1.0 {
        let q = 1.0 / (4.0 * t).sqrt();
        let f = |a: f64, b: f64| 0.5 * (erf(b * q) - erf(a * q));
        let reach = (160.0 * t).sqrt();
        let nmax = ((reach + l) / (2.0 * l)).ceil() as i64 + 1;
        let mut sum = 0.0;
        for n in -nmax..=nmax {
            let nl = n as f64 * l;
            sum += f(x + 2.0 * nl - l, x + 2.0 * nl) - f(x + 2.0 * nl, x + 2.0 * nl + l);
        }
        sum
    } else {
        let mut sum = 0.0;
        let mut m = 1;
        loop {
            let k = m as f64 * k1;
            let decay = (-k * k * t).exp();
            if m % 2 == 1 {
                sum += decay * (k * x).sin() * 2.0 / k;
            }
            if decay < 1e-18 {
                break;
            }
            m += 1;
        }
        2.0 / l * sum
    }
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("heat kernel needs t > 0, got {t}")))
    }
}

/// Σ_k e^{−λ_k t} e_k(x) e_k(y) over the basis, provided the dropped tail is
/// below 1e-16 relative to the leading term.
pub fn heat_kernel_spectral(basis: &EigenBasis, t: f64, x: Point, y: Point) -> Result<f64> {
    check_t(t)?;
    let l0 = basis.lambda0();
    let needed = l0 + 16.0 * 10f64.ln() / t;
    if basis.lambda_complete() < needed {
        return Err(Error::InsufficientTruncation(format!(
            "t = {t:.3e} needs the complete spectrum up to {needed:.3e}, basis is complete to {:.3e}",
            basis.lambda_complete()
        )));
    }
    let ex = basis.mode_values(x);
    let ey = basis.mode_values(y);
    let mut sum = 0.0;
    for (k, &l) in basis.eigenvalues().iter().enumerate() {
        if (-(l - l0) * t).exp() < 1e-16 || l >= basis.lambda_complete() {
            break;
        }
        sum += (-l * t).exp() * ex[k] * ey[k];
    }
    Ok(sum)
}

/// Free-space Gaussian is accurate to e^{-40} when both points are far from
/// the boundary on the diffusion scale.
fn boundary_invisible(basis: &EigenBasis, t: f64, x: Point, y: Point) -> bool {
    let d = basis.domain().distance_to_boundary(x) + basis.domain().distance_to_boundary(y);
    d * d / (4.0 * t) > 40.0
}

/// Dirichlet heat kernel p_t(x, y) of the basis's domain.
pub fn heat_kernel(basis: &EigenBasis, t: f64, x: Point, y: Point) -> Result<f64> {
    check_t(t)?;
    let dom = basis.domain();
    if let Some((lx, ly)) = dom.sides() {
        return Ok(interval_kernel(lx, t, x[0], y[0]) * interval_kernel(ly, t, x[1], y[1]));
    }
    if boundary_invisible(basis, t, x, y) {
        let r2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
        return Ok((-r2 / (4.0 * t)).exp() / (4.0 * PI * t));
    }
    heat_kernel_spectral(basis, t, x, y)
}

/// ∫_Ω p_t(x, y) dy.
pub fn survival(basis: &EigenBasis, t: f64, x: Point) -> Result<f64> {
    check_t(t)?;
    let dom = basis.domain();
    if let Some((lx, ly)) = dom.sides() {
        return Ok(interval_survival(lx, t, x[0]) * interval_survival(ly, t, x[1]));
    }
    let d = dom.distance_to_boundary(x);
    if d * d / (4.0 * t) > 40.0 {
        return Ok(1.0);
    }
    let l0 = basis.lambda0();
    let needed = l0 + 16.0 * 10f64.ln() / t;
    if basis.lambda_complete() < needed {
        return Err(Error::InsufficientTruncation(format!(
            "t = {t:.3e} needs the complete spectrum up to {needed:.3e}, basis is complete to {:.3e}",
            basis.lambda_complete()
        )));
    }
    // Only radially symmetric modes have nonzero mean: ∫ e = N 2π R² J_1(j)/j.
    let ex = basis.mode_values(x);
    let r = dom.radius().unwrap();
    let e_center = basis.mode_values([0.0, 0.0]);
    let mut sum = 0.0;
    for (k, (&l, mode)) in basis.eigenvalues().iter().zip(basis.modes()).enumerate() {
        if let crate::eigenbasis::ModeId::Disk { m: 0, .. } = mode {
            let j = l.sqrt() * r;
            // e(0) = N, so ∫ e = e(0)·2πR² J_1(j)/j.
            let mean = e_center[k] * 2.0 * PI * r * r * crate::special::bessel_j(1, j) / j;
            sum += (-l * t).exp() * ex[k] * mean;
        }
    }
    Ok(sum)
}
