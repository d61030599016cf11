//! Special functions: Bessel functions of integer order, their zeros,
//! Gauss–Legendre rules and the few Gamma/zeta values the kernels need.

use std::f64::consts::PI;

/// J_0(x) .. J_nmax(x) for x >= 0 by Miller's backward recurrence,
/// normalized with J_0 + 2 Σ J_{2k} = 1.
pub fn bessel_j_orders(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let x = x.abs();
    let big = (nmax as f64).max(x);
    let mut start = (big + 30.0 + (60.0 * big).sqrt()) as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let mut jp1 = 0.0f64;
    let mut j = 1.0f64;
    let mut sum = 0.0f64;
    for k in (1..=start).rev() {
        if k <= nmax {
            out[k] = j;
        }
        if k % 2 == 0 {
            sum += 2.0 * j;
        }
        let jm1 = 2.0 * k as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            sum *= 1e-250;
            for v in out.iter_mut().skip(k.min(nmax + 1)) {
                *v *= 1e-250;
            }
        }
    }
    out[0] = j;
    sum += j;
    for v in out.iter_mut() {
        *v /= sum;
    }
    out
}

/// J_n(x) for a single order.
pub fn bessel_j(n: usize, x: f64) -> f64 {
    bessel_j_orders(n + 1, x)[n]
}

/// J_n'(x) via (J_{n-1} - J_{n+1})/2, with J_{-1} = -J_1.
pub fn bessel_j_prime(n: usize, x: f64) -> f64 {
    let j = bessel_j_orders(n + 1, x);
    if n == 0 {
        -j[1]
    } else {
        0.5 * (j[n - 1] - j[n + 1])
    }
}

/// First `count` positive zeros of J_m for every m in 0..=mmax.
/// Result is indexed `[m][k]`.
pub fn bessel_zeros(mmax: usize, count: usize) -> Vec<Vec<f64>> {
    let mut brackets: Vec<Vec<(f64, f64)>> = vec![Vec::with_capacity(count); mmax + 1];
    let step = 0.2;
    let mut x_prev = 0.0;
    let mut prev = bessel_j_orders(mmax, 1e-300);
    prev[0] = 1.0;
    let mut x = step;
    while brackets.iter().any(|b| b.len() < count) {
        let cur = bessel_j_orders(mmax, x);
        for m in 0..=mmax {
            if brackets[m].len() < count && x_prev > 0.0 && prev[m] * cur[m] < 0.0 {
                brackets[m].push((x_prev, x));
            }
        }
        prev = cur;
        x_prev = x;
        x += step;
    }
    brackets
        .iter()
        .enumerate()
        .map(|(m, bs)| bs.iter().map(|&(a, b)| refine_zero(m, a, b)).collect())
        .collect()
}

fn refine_zero(m: usize, mut a: f64, mut b: f64) -> f64 {
    let mut fa = bessel_j(m, a);
    for _ in 0..20 {
        let c = 0.5 * (a + b);
        let fc = bessel_j(m, c);
        if fa * fc <= 0.0 {
            b = c;
        } else {
            a = c;
            fa = fc;
        }
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..50 {
        let v = bessel_j_orders(m + 1, x);
        let d = if m == 0 { -v[1] } else { 0.5 * (v[m - 1] - v[m + 1]) };
        let dx = v[m] / d;
        let next = x - dx;
        if !(a..=b).contains(&next) {
            break;
        }
        x = next;
        if dx.abs() <= 1e-15 * x {
            break;
        }
    }
    x
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|v| v * half).collect(),
    )
}

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

pub fn erf(x: f64) -> f64 {
    statrs::function::erf::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    statrs::function::erf::erfc(x)
}

/// |Γ(-s)| = Γ(1-s)/s for s in (0,1).
pub fn abs_gamma_neg(s: f64) -> f64 {
    gamma(1.0 - s) / s
}

/// Free-space constant c with (-Δ)^s f(x) = c ∫ (f(x)-f(y))/|x-y|^{2+2s} dy in the plane.
pub fn free_space_constant(s: f64) -> f64 {
    4f64.powf(s) * gamma(1.0 + s) / (PI * abs_gamma_neg(s))
}

/// Riemann zeta for real s in (0,1) via the alternating (Dirichlet eta) series
/// with Euler-transformed partial sums.
pub fn zeta(s: f64) -> f64 {
    let eta = alternating_sum(|n| 1.0 / ((n + 1) as f64).powf(s));
    eta / (1.0 - 2f64.powf(1.0 - s))
}

/// Dirichlet beta β(s) = Σ (-1)^n (2n+1)^{-s}.
pub fn dirichlet_beta(s: f64) -> f64 {
    alternating_sum(|n| 1.0 / ((2 * n + 1) as f64).powf(s))
}

/// Σ_{n>=0} (-1)^n a(n) for a slowly decaying positive sequence, using the
/// Cohen–Rodriguez Villegas–Zagier acceleration.
fn alternating_sum(a: impl Fn(usize) -> f64) -> f64 {
    let n = 60usize;
    let d = (3.0 + 8f64.sqrt()).powi(n as i32);
    let d = 0.5 * (d + 1.0 / d);
    let mut b = -1.0;
    let mut c = -d;
    let mut s = 0.0;
    for k in 0..n {
        c = b - c;
        s += c * a(k);
        let kf = k as f64;
        let nf = n as f64;
        b *= (kf + nf) * (kf - nf) / ((kf + 0.5) * (kf + 1.0));
    }
    s / d
}

/// Z(s) = Σ'_{k ∈ ℤ²} |k|^{-2s} (analytically continued) = 4 ζ(s) β(s).
pub fn lattice_zeta(s: f64) -> f64 {
    4.0 * zeta(s) * dirichlet_beta(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j0_series(x: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        let q = -x * x / 4.0;
        for k in 1..200 {
            term *= q / (k as f64 * k as f64);
            sum += term;
            if term.abs() < 1e-18 {
                break;
            }
        }
        sum
    }

    #[test]
    fn j0_matches_power_series() {
        for &x in &[0.1, 0.5, 1.0, 2.404825557695773, 3.7, 7.5] {
            assert!((bessel_j(0, x) - j0_series(x)).abs() < 1e-13, "x={x}");
        }
    }

    #[test]
    fn first_zero_of_j0() {
        let z = bessel_zeros(0, 3);
        assert!((z[0][0] - 2.404825557695773).abs() < 1e-13);
        assert!((z[0][1] - 5.520078110286311).abs() < 1e-12);
        assert!((z[0][2] - 8.653727912911013).abs() < 1e-12);
    }

    #[test]
    fn zeros_of_higher_orders() {
        let z = bessel_zeros(3, 2);
        assert!((z[1][0] - 3.831705970207512).abs() < 1e-12);
        assert!((z[2][0] - 5.135622301840683).abs() < 1e-12);
        assert!((z[3][1] - 9.761023129981670).abs() < 1e-12);
        for (m, row) in z.iter().enumerate() {
            for &x in row {
                assert!(bessel_j(m, x).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn large_argument_recurrence_is_stable() {
        // J_n(x) for moderately large x satisfies the three-term recurrence.
        let x = 150.0;
        let v = bessel_j_orders(80, x);
        for n in 1..79 {
            let r = v[n - 1] + v[n + 1] - 2.0 * n as f64 / x * v[n];
            assert!(r.abs() < 1e-12);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        for p in 0..24 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "p={p}");
        }
    }

    #[test]
    fn free_space_constant_at_half() {
        assert!((free_space_constant(0.5) - 1.0 / (2.0 * PI)).abs() < 1e-14);
    }

    #[test]
    fn zeta_and_beta_at_half() {
        assert!((zeta(0.5) + 1.4603545088095868).abs() < 1e-12);
        assert!((dirichlet_beta(0.5) - 0.6676914571896092).abs() < 1e-12);
    }
}
