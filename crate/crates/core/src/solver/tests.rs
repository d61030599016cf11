use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;

use super::init::InitialData;
use super::monitor::{suitability_monitor, ConstantBarrier, MovingBump};
use super::sweep::{scaling_covariance, vanishing_viscosity_sweep};
use super::*;
use crate::eigenbasis::{build_basis, DomainSpec, Truncation};
use crate::special::gauss_legendre_on;

fn unit_square(m: usize) -> Arc<EigenBasis> {
    build_basis(DomainSpec::square(1.0).unwrap(), Truncation::square(m)).unwrap()
}

fn smooth(basis: &Arc<EigenBasis>, seed: u64, kmax: f64) -> SpectralField {
    InitialData::RandomBandLimited { kmax, l2: 1.0 }.build(basis, seed).unwrap()
}

/// Σ_jk λ_j^{-1/2} ∫ e_i ∇⊥e_j·∇e_k α_j α_k on the unit square, from 1D
/// Gauss–Legendre tables of sine/cosine triple products.
fn tensor_oracle(theta: &SpectralField) -> Vec<f64> {
    let basis = theta.basis();
    let n = basis.len();
    let mmax = (0..n).map(|i| basis.mode_numbers(i).0.max(basis.mode_numbers(i).1)).max().unwrap() as usize;
    let (xs, ws) = gauss_legendre_on(80, 0.0, 1.0);
    let s = |a: usize, x: f64| (a as f64 * PI * x).sin();
    let c = |a: usize, x: f64| a as f64 * PI * (a as f64 * PI * x).cos();
    // sss[a][b][d] = ∫ s_a s_b' s_d with the middle factor differentiated or not.
    let table = |f: &dyn Fn(usize, usize, usize, f64) -> f64| {
        let mut t = vec![0.0; (mmax + 1).pow(3)];
        for a in 1..=mmax {
            for b in 1..=mmax {
                for d in 1..=mmax {
                    t[(a * (mmax + 1) + b) * (mmax + 1) + d] =
                        xs.iter().zip(&ws).map(|(&x, &w)| w * f(a, b, d, x)).sum();
                }
            }
        }
        t
    };
    let sds = table(&|a, b, d, x| s(a, x) * c(b, x) * s(d, x));
    let ssd = table(&|a, b, d, x| s(a, x) * s(b, x) * c(d, x));
    let at = |t: &[f64], a: u32, b: u32, d: u32| t[((a as usize) * (mmax + 1) + b as usize) * (mmax + 1) + d as usize];
    let lam = basis.eigenvalues();
    (0..n)
        .map(|i| {
            let (mi, ni) = basis.mode_numbers(i);
            let mut acc = 0.0;
            for j in 0..n {
                let aj = theta.coeffs[j];
                if aj == 0.0 {
                    continue;
                }
                let (mj, nj) = basis.mode_numbers(j);
                for k in 0..n {
                    let ak = theta.coeffs[k];
                    if ak == 0.0 {
                        continue;
                    }
                    let (mk, nk) = basis.mode_numbers(k);
                    // ∇⊥e_j·∇e_k = −∂_y e_j ∂_x e_k + ∂_x e_j ∂_y e_k
                    let t1 = at(&ssd, mi, mj, mk) * at(&sds, ni, nj, nk);
                    let t2 = at(&sds, mi, mj, mk) * at(&ssd, ni, nj, nk);
                    acc += 8.0 * (t2 - t1) / lam[j].sqrt() * aj * ak;
                }
            }
            acc
        })
        .collect()
}

#[test]
fn nonlinear_term_matches_tensor_contraction() {
    let b = unit_square(8);
    let th = SpectralField::random(&b, 11, 1.0);
    let fast = nonlinear_term(&th);
    let slow = tensor_oracle(&th);
    let scale = slow.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    assert!(scale > 1.0);
    let err = fast.coeffs.iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-8 * scale, "err {err:e} scale {scale:e}");
}

#[test]
fn single_mode_and_zero_have_no_transport() {
    let b = unit_square(12);
    for k in [0, 5, 40] {
        let n = nonlinear_term(&SpectralField::unit(&b, k));
        assert!(n.l2_norm() < 1e-10, "mode {k}: {}", n.l2_norm());
    }
    assert_eq!(nonlinear_term(&SpectralField::zeros(&b)).l2_norm(), 0.0);
}

#[test]
fn advection_is_skew() {
    let b = build_basis(DomainSpec::rectangle(1.0, 1.5).unwrap(), Truncation::new(16, 20)).unwrap();
    let th = SpectralField::random(&b, 3, 1.5);
    let (h1, own) = skew_symmetry_defect(&th, 2);
    assert!(h1 <= 1e-10 && own <= 1e-10, "{h1:e} {own:e}");
}

#[test]
fn single_mode_decays_exactly() {
    let b = unit_square(16);
    for (eps, k) in [(0.0, 0), (1.0, 200)] {
        let th0 = SpectralField::unit(&b, k);
        let cfg = SolverConfig { epsilon: eps, dt: 1e-3, t_end: 0.05, ..Default::default() };
        let rec = run(&th0, &cfg).unwrap();
        let lam = b.eigenvalues()[k];
        for e in &rec.entries {
            let exact = (-(lam.sqrt() + eps * lam) * e.t).exp();
            let err = e.theta.sub(&th0.scaled(exact)).unwrap().l2_norm();
            assert!(err <= 1e-12, "eps {eps} t {}: {err:e}", e.t);
            assert!(e.energy_residual.abs() <= 1e-9 * lam, "{}", e.energy_residual);
        }
    }
}

#[test]
fn rk3_is_third_order() {
    let b = unit_square(12);
    let th0 = smooth(&b, 4, 4.0 * PI).scaled(1.5);
    let at = |dt: f64| {
        let cfg = SolverConfig { dt, t_end: 0.4, epsilon: 0.0, record_stride: 1000, ..Default::default() };
        let r = run(&th0, &cfg).unwrap();
        assert!(r.aborted.is_none() && r.stats.halvings == 0);
        r.last().theta.clone()
    };
    let reference = at(0.0025);
    let e1 = at(0.01).sub(&reference).unwrap().l2_norm();
    let e2 = at(0.005).sub(&reference).unwrap().l2_norm();
    let ratio = e1 / e2;
    assert!(ratio > 6.0 && ratio < 10.5, "ratio {ratio} ({e1:e}, {e2:e})");
}

#[test]
fn euler_is_first_order() {
    let b = unit_square(10);
    let th0 = smooth(&b, 4, 4.0 * PI).scaled(1.5);
    let at = |dt: f64| {
        let cfg = SolverConfig { dt, t_end: 0.4, scheme: Scheme::IfEuler, record_stride: 1000, ..Default::default() };
        run(&th0, &cfg).unwrap().last().theta.clone()
    };
    let reference = at(0.000625);
    let ratio = at(0.01).sub(&reference).unwrap().l2_norm() / at(0.005).sub(&reference).unwrap().l2_norm();
    assert!(ratio > 1.7 && ratio < 2.6, "ratio {ratio}");
}

#[test]
fn energy_identity_and_l2_decay_hold() {
    let b = unit_square(16);
    let th0 = smooth(&b, 9, 6.0 * PI).scaled(2.0);
    // The residual is the scheme's own O(dt³) error, largest for stiff viscous modes.
    for (eps, dt) in [(0.0, 1e-3), (0.1, 1e-3), (1.0, 2.5e-4)] {
        let cfg = SolverConfig { epsilon: eps, dt, t_end: 0.1, ..Default::default() };
        let rec = run(&th0, &cfg).unwrap();
        assert!(rec.aborted.is_none());
        assert!(rec.stats.max_abs_residual <= cfg.tol_energy, "eps {eps}: {:e}", rec.stats.max_abs_residual);
        for w in rec.entries.windows(2) {
            assert!(w[1].l2 <= w[0].l2 * (1.0 + 1e-12));
        }
    }
}

#[test]
fn energy_quadrature_is_exact_for_decay() {
    for (a, dt) in [(1e-7f64, 0.1f64), (0.5, 0.01), (30.0, 0.01), (30.0, 0.1), (1e4, 1e-3), (1e6, 1e-3)] {
        let f1 = (-2.0 * a * dt).exp();
        let exact = -(-2.0 * a * dt).exp_m1() / (2.0 * a);
        let q = EnergyQuadrature::new(&[a], dt);
        let got = q.integral(0, a, 1.0, 0.0, f1.sqrt(), 0.0);
        assert!((got - exact).abs() <= 1e-12 * exact, "{a} {dt}: {got} {exact}");
    }
}

#[test]
fn energy_quadrature_is_exact_for_slaved_modes() {
    // c' = −ac − N with constant N: c = (c0 + N/a)e^{−as} − N/a.
    for a in [1e3, 1e4, 1e6] {
        let (c0, n) = (0.3, 2.0);
        let dt = 1e-3;
        let c = |s: f64| (c0 + n / a) * (-a * s).exp() - n / a;
        let (x, w) = gauss_legendre_on(400, 0.0, dt);
        let exact: f64 = x.iter().zip(&w).map(|(&s, &w)| w * c(s).powi(2)).sum();
        let got = EnergyQuadrature::new(&[a], dt).integral(0, a, c0, n, c(dt), n);
        assert!((got - exact).abs() <= 1e-9 * exact, "{a}: {got} {exact}");
    }
}

#[test]
fn energy_quadrature_is_fourth_order() {
    // c' = −ac − N with N = −(1 + 3s²)e^{−as} gives c = e^{−as}(1 + s + s³).
    let a = 3.0;
    let c = |s: f64| (-a * s).exp() * (1.0 + s + s.powi(3));
    let n = |s: f64| -(1.0 + 3.0 * s * s) * (-a * s).exp();
    let err = |dt: f64| {
        let q = EnergyQuadrature::new(&[a], dt);
        let (x, w) = gauss_legendre_on(30, 0.0, dt);
        let exact: f64 = x.iter().zip(&w).map(|(&s, &w)| w * c(s).powi(2)).sum();
        (q.integral(0, a, c(0.0), n(0.0), c(dt), n(dt)) - exact).abs()
    };
    let ratio = err(0.1) / err(0.05);
    assert!(ratio > 25.0, "ratio {ratio}");
}

#[test]
fn linfty_constant_of_single_mode() {
    let b = unit_square(8);
    let th0 = SpectralField::unit(&b, 0);
    let rec = run(&th0, &SolverConfig { dt: 0.01, t_end: 1.0, ..Default::default() }).unwrap();
    // ‖e_0‖∞ = 2; t e^{−√λ t} peaks at t = 1/√λ.
    let s = b.lambda0().sqrt();
    let exact = 2.0 / (s * std::f64::consts::E);
    let got = linfty_decay_constant(&rec);
    assert!((got - exact).abs() <= 1e-3 * exact, "{got} {exact}");
    let zero = run(&SpectralField::zeros(&b), &SolverConfig { dt: 0.1, t_end: 0.5, ..Default::default() }).unwrap();
    assert_eq!(linfty_decay_constant(&zero), 0.0);
}

#[test]
fn cfl_halves_then_aborts() {
    let b = unit_square(12);
    let th0 = smooth(&b, 1, 4.0 * PI).scaled(200.0);
    let loose = SolverConfig { dt: 0.01, t_end: 0.02, ..Default::default() };
    let rec = run(&th0, &loose).unwrap();
    assert!(rec.stats.halvings > 0 && !rec.stats.warnings.is_empty());
    let strict = SolverConfig { max_halvings: 0, ..loose };
    let rec = run(&th0, &strict).unwrap();
    assert!(rec.aborted.as_deref().unwrap().contains("CFL"));
    assert_eq!(rec.last().t, 0.0);
}

#[test]
fn config_validation() {
    let ok = SolverConfig::default();
    assert!(ok.validate().is_ok());
    for bad in [
        SolverConfig { dt: 0.0, ..ok.clone() },
        SolverConfig { dealias_pad: 1, ..ok.clone() },
        SolverConfig { epsilon: 1.5, ..ok.clone() },
        SolverConfig { record_stride: 0, ..ok.clone() },
    ] {
        assert!(bad.validate().is_err());
    }
}

#[test]
fn record_interpolation_and_csv() {
    let b = unit_square(8);
    let th0 = SpectralField::unit(&b, 0);
    let rec = run(&th0, &SolverConfig { dt: 0.01, t_end: 0.1, record_stride: 2, ..Default::default() }).unwrap();
    assert_eq!(rec.entries.len(), 6);
    let mid = rec.theta_at(0.03).unwrap();
    let exact = (-b.lambda0().sqrt() * 0.03).exp();
    assert!((mid.coeffs[0] - exact).abs() < 1e-3);
    assert!(matches!(rec.theta_at(0.2), Err(Error::OutOfSpan { .. })));
    let mut buf = Vec::new();
    rec.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,l2,linf,h_half,energy_residual\n"));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn rescaled_problem_reproduces_rescaled_solution() {
    let b = unit_square(12);
    let th0 = smooth(&b, 2, 4.0 * PI).scaled(3.0);
    let cfg = SolverConfig { epsilon: 0.1, dt: 2e-3, t_end: 0.05, ..Default::default() };
    let r = scaling_covariance(&th0, &cfg, 2.0).unwrap();
    assert!(r.pass, "{}", r.to_text());
}

#[test]
fn viscosity_sweep_single_mode_is_analytic() {
    let b = unit_square(8);
    let k = 10;
    let th0 = SpectralField::unit(&b, k);
    let cfg = SolverConfig { dt: 0.01, t_end: 0.2, ..Default::default() };
    let sw = vanishing_viscosity_sweep(&th0, &[0.1, 0.05, 0.0], &cfg).unwrap();
    let lam = b.eigenvalues()[k];
    for e in &sw.entries {
        let exact = ((-(lam.sqrt() + e.epsilon * lam) * 0.2).exp() - (-lam.sqrt() * 0.2).exp()).abs();
        assert!((e.discrepancy - exact).abs() <= 1e-12, "{} {}", e.discrepancy, exact);
    }
    assert!(sw.monotone && sw.report.pass);
    let only = vanishing_viscosity_sweep(&th0, &[0.0], &cfg).unwrap();
    assert_eq!(only.entries[0].discrepancy, 0.0);
    assert!(vanishing_viscosity_sweep(&th0, &[0.0, 0.1], &cfg).is_err());
}

#[test]
fn viscosity_sweep_is_first_order() {
    let b = unit_square(12);
    let th0 = smooth(&b, 5, 3.0 * PI).scaled(2.0);
    let cfg = SolverConfig { dt: 1e-3, t_end: 0.02, record_stride: 1000, ..Default::default() };
    let sw = vanishing_viscosity_sweep(&th0, &[0.1, 0.05, 0.025, 0.0], &cfg).unwrap();
    let slope = sw.slope.unwrap();
    assert!(sw.monotone && (slope - 1.0).abs() < 0.1, "slope {slope}");
}

#[test]
fn suitability_with_dominating_constant_is_trivial() {
    let b = unit_square(10);
    let th0 = smooth(&b, 6, 4.0 * PI);
    let rec = run(&th0, &SolverConfig { dt: 5e-3, t_end: 0.05, ..Default::default() }).unwrap();
    let huge = ConstantBarrier { level: 10.0 * rec.initial().linf };
    let s = suitability_monitor(&rec, &huge, 0.0).unwrap();
    assert_eq!(s.skipped, rec.entries.len());
    assert!(s.lhs.iter().all(|&v| v == 0.0) && s.report.pass);
}

#[test]
fn suitability_zero_barrier_reduces_to_energy_decay() {
    let b = unit_square(12);
    let th0 = smooth(&b, 6, 4.0 * PI);
    let rec = run(&th0, &SolverConfig { dt: 2e-3, t_end: 0.05, ..Default::default() }).unwrap();
    let s = suitability_monitor(&rec, &ConstantBarrier { level: 0.0 }, 0.0).unwrap();
    assert!(s.report.pass, "{}", s.report.to_text());
}

#[test]
fn suitability_moving_bump() {
    let b = unit_square(12);
    let th0 = smooth(&b, 6, 4.0 * PI).scaled(3.0);
    let rec = run(&th0, &SolverConfig { dt: 2e-3, t_end: 0.05, ..Default::default() }).unwrap();
    let psi = MovingBump { base: 0.0, height: 0.5, radius: 0.3, start: [0.5, 0.5], velocity: [1.0, 0.0] };
    let k = psi.lipschitz() * 1.05;
    let s = suitability_monitor(&rec, &psi, k).unwrap();
    assert!(s.c_star.is_finite() && s.report.pass, "{}", s.report.to_text());
    let err = suitability_monitor(&rec, &psi, 0.5 * psi.lipschitz()).unwrap_err();
    assert!(err.to_string().contains("measured"));
}

#[test]
fn initial_data_generators() {
    let b = unit_square(8);
    assert!(InitialData::SingleMode { index: 64 }.build(&b, 0).is_err());
    let r = InitialData::RandomBandLimited { kmax: 3.0 * PI, l2: 2.0 }.build(&b, 1).unwrap();
    assert!((r.l2_norm() - 2.0).abs() < 1e-12);
    assert!(InitialData::RandomBandLimited { kmax: 1.0, l2: 1.0 }.build(&b, 1).is_err());
    let bump = InitialData::Bump { center: [0.5, 0.5], radius: 0.3, amplitude: 1.0 }.build(&b, 0).unwrap();
    assert!((bump.eval_point([0.5, 0.5]) - 1.0).abs() < 0.05);
}

#[test]
fn disk_run_is_stable() {
    let b = build_basis(DomainSpec::disk(1.0).unwrap(), Truncation::new(6, 6)).unwrap();
    let th0 = smooth(&b, 2, 8.0);
    let rec = run(&th0, &SolverConfig { dt: 2e-3, t_end: 0.02, ..Default::default() }).unwrap();
    assert!(rec.aborted.is_none());
    for w in rec.entries.windows(2) {
        assert!(w[1].l2 <= w[0].l2 * (1.0 + 1e-8));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn skew_for_random_fields(seed in 0u64..10_000, decay in 0.5f64..3.0) {
        let b = unit_square(10);
        let th = SpectralField::random(&b, seed, decay);
        let (h1, _) = skew_symmetry_defect(&th, 2);
        prop_assert!(h1 <= 1e-10);
    }
}
