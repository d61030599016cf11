use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;

use super::lemmas::barrier_gap;
use super::*;
use crate::eigenbasis::{build_basis, stream_function, DomainSpec, EigenBasis, Truncation};
use crate::lpcalib::LpBump;
use crate::solver::init::InitialData;

fn square(l: f64, m: usize) -> Arc<EigenBasis> {
    build_basis(DomainSpec::square(l).unwrap(), Truncation::square(m)).unwrap()
}

fn span_times(n: usize) -> Vec<f64> {
    (0..=n).map(|i| -2.0 + 2.0 * i as f64 / n as f64).collect()
}

#[test]
fn constant_field_ladder_closed_form() {
    let basis = square(1.0, 8);
    let s = SpaceTimeSamples::from_fn(basis.grid(), &span_times(8), |_, _| 2.0);
    let l = ladder(&s, 8).unwrap();
    for (k, e) in l.energies.iter().enumerate() {
        let exact = (1.0 + 0.5f64.powi(k as i32)).powi(3);
        assert!((e - exact).abs() <= 1e-12 * exact, "k={k}: {e} vs {exact}");
        let meas = 1.0 + 0.5f64.powi(k as i32);
        assert!((l.levelset_measures[k] - meas).abs() <= 1e-12);
    }
    assert!(l.is_monotone());
}

#[test]
fn zero_field_ladder_vanishes() {
    let basis = square(1.0, 8);
    let s = SpaceTimeSamples::from_fn(basis.grid(), &span_times(4), |_, _| 0.0);
    let l = ladder(&s, 5).unwrap();
    assert!(l.energies.iter().all(|&e| e == 0.0));
    assert!(l.recursion_constant.is_none() && l.recursion_exponent.is_none());
}

#[test]
fn ladder_requires_full_window() {
    let basis = square(1.0, 4);
    let s = SpaceTimeSamples::from_fn(basis.grid(), &[-1.0, 0.0], |_, _| 1.0);
    assert!(matches!(ladder(&s, 3), Err(Error::OutOfSpan { .. })));
}

#[test]
fn recursion_fit_recovers_exact_data() {
    let (c, beta) = (3.0f64, 1.5);
    let mut e: Vec<f64> = vec![0.2, 0.1];
    for k in 1..8 {
        let next = c.powi(k as i32) * e[k - 1].powf(beta);
        e.push(next);
    }
    let (fc, fb) = fit_recursion(&e);
    assert!((fc.unwrap() - c).abs() < 1e-10 * c);
    assert!((fb.unwrap() - beta).abs() < 1e-10);
}

#[test]
fn time_integral_of_linear_data_is_exact() {
    let basis = square(1.0, 4);
    let s = SpaceTimeSamples::from_fn(basis.grid(), &[-2.0, -1.0, 0.0], |_, _| 0.0);
    let g = [0.0, 1.0, 2.0]; // g(t) = t + 2
    let exact = |a: f64| (0.5 * (0.0f64 + 2.0).powi(2)) - 0.5 * (a + 2.0).powi(2);
    for from in [-2.0, -1.7, -1.0, -0.3] {
        assert!((s.time_integral(&g, from) - exact(from)).abs() < 1e-14);
    }
}

#[test]
fn normalization_maps_span_to_window() {
    let basis = square(1.0, 4);
    let s = SpaceTimeSamples::from_fn(basis.grid(), &[3.0, 3.5, 5.0], |_, _| 0.0).normalized(2.0);
    assert_eq!(s.times, vec![-2.0, -1.5, 0.0]);
}

#[test]
fn ladder_of_a_run_is_monotone() {
    let basis = square(1.0, 8);
    let theta = InitialData::RandomBandLimited { kmax: 4.0 * PI, l2: 2.0 }.build(&basis, 3).unwrap();
    let cfg = SolverConfig { epsilon: 0.1, dt: 2e-3, t_end: 0.1, record_stride: 5, ..Default::default() };
    let rec = run(&theta, &cfg).unwrap();
    let s = SpaceTimeSamples::from_record(&rec, 0.0, 0.1, basis.fine_grid()).unwrap().normalized(2.0);
    let l = ladder(&s, 8).unwrap();
    assert!(l.is_monotone(), "{:?}", l.energies);
    let mut buf = Vec::new();
    l.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 10);
}

#[test]
fn smallness_threshold_is_reproducible() {
    let basis = square(1.0, 6);
    let shape = InitialData::Bump { center: [0.5, 0.5], radius: 0.3, amplitude: 1.0 }.build(&basis, 0).unwrap();
    let cfg = SolverConfig { epsilon: 0.0, dt: 5e-3, t_end: 0.05, record_stride: 2, ..Default::default() };
    let a = smallness_threshold(&shape, &cfg, 6, 1e-8, 1e-3).unwrap();
    let b = smallness_threshold(&shape, &cfg, 6, 1e-8, 1e-3).unwrap();
    assert_eq!(a.amplitude.to_bits(), b.amplitude.to_bits());
    assert_eq!(a.delta_est.to_bits(), b.delta_est.to_bits());
    assert!(a.amplitude > 0.0 && a.delta_est > 0.0);
}

#[test]
fn first_lemma_on_constant_fields() {
    let basis = square(6.0, 8);
    let center = |_: f64| [3.0, 3.0];
    let b = BarrierFn::standard();
    for (c, mass_expected_zero) in [(0.0, true), (1.0, false)] {
        let s = SpaceTimeSamples::from_fn(basis.fine_grid(), &span_times(4), |_, _| c);
        let r = dg1_empirical(&s, &b, &center, &[1e-3, 1.0, 100.0]).unwrap();
        assert_eq!(r.mass == 0.0, mass_expected_zero);
        assert!(r.report.pass, "{}", r.report.to_text());
        assert_eq!(r.growth_violations, 0);
    }
    // θ ≡ 2 exceeds 1 on the unit ball, so a probe above its mass must fail.
    let s = SpaceTimeSamples::from_fn(basis.fine_grid(), &span_times(4), |_, _| 2.0);
    let r = dg1_empirical(&s, &b, &center, &[1e-3, 1e3]).unwrap();
    assert!(r.probes[0].holds && !r.probes[1].holds);
    assert!(!r.report.pass);
    // Four times the area of B_2 over a window of length 2 (up to grid error).
    assert!((r.mass - 32.0 * PI).abs() < 0.05 * 32.0 * PI, "{}", r.mass);
}

#[test]
fn trichotomy_partitions_the_large_cylinder() {
    let basis = square(10.0, 8);
    let s = SpaceTimeSamples::from_fn(&basis.make_grid(12), &[-4.0, -2.0, 0.0], |_, p| p[0] - 5.0);
    let t = level_set_trichotomy(&s, [5.0, 5.0]);
    // θ = x − 5 splits B_4 in half; 0 < θ < 1 is a thin strip of it.
    let half_ball = 0.5 * PI * 16.0 * 4.0;
    assert!((t.below - half_ball).abs() < 0.05 * half_ball, "{t:?}");
    assert!(t.between > 0.0 && t.between < t.below);
    assert!(t.above > 0.0);
}

#[test]
fn barrier_profile_matches_at_the_joins() {
    let b = BarrierFn::standard();
    for r in [b.r_in(), b.r_out()] {
        let (lo, hi) = (b.radial_jet(r - 1e-9), b.radial_jet(r + 1e-9));
        for i in 0..3 {
            assert!((lo[i] - hi[i]).abs() < 1e-6, "r={r} order {i}: {lo:?} {hi:?}");
        }
    }
    assert_eq!(b.value([0.3, 0.4]), 0.0);
    assert!((b.value([3.0, 4.0]) - (2.0 + 5f64.powf(0.25) - 2f64.powf(0.25))).abs() < 1e-14);
}

#[test]
fn barrier_norms_agree_with_a_planar_scan() {
    let b = BarrierFn::standard();
    let n = 601;
    let (mut g, mut h) = (0.0f64, 0.0f64);
    for i in 0..n {
        for j in 0..n {
            let p = [-3.0 + 6.0 * i as f64 / (n - 1) as f64, -3.0 + 6.0 * j as f64 / (n - 1) as f64];
            let d = b.gradient(p);
            g = g.max(d[0].hypot(d[1]));
            h = h.max(b.hessian_norm(p));
        }
    }
    assert!((g - b.grad_sup).abs() < 0.02 * b.grad_sup, "{g} vs {}", b.grad_sup);
    assert!((h - b.hess_sup).abs() < 0.02 * b.hess_sup, "{h} vs {}", b.hess_sup);
    assert!(b.holder_quarter > 0.0 && b.holder_quarter.is_finite());
}

#[test]
fn barrier_rejects_bad_radii() {
    assert!(BarrierFn::new(1.0, 1.5).is_err());
    assert!(BarrierFn::new(2.0, 2.0).is_err());
}

fn disk_rotation(omega: f64) -> VelocityRecord {
    VelocityRecord::analytic(DomainSpec::disk(1.0).unwrap(), (-1.0, 1.0), move |_, p| [-omega * p[1], omega * p[0]])
}

#[test]
fn rigid_rotation_keeps_radius() {
    let vel = disk_rotation(2.0);
    let path = integrate_path(&vel, [0.5, 0.0], 1.0, 1.5).unwrap();
    for (&t, p) in path.times.iter().zip(&path.points) {
        assert!((p[0].hypot(p[1]) - 0.5).abs() < 1e-6);
        let ang = 2.0 * (t - 1.0);
        assert!((p[0] - 0.5 * ang.cos()).abs() < 1e-6 && (p[1] - 0.5 * ang.sin()).abs() < 1e-6);
    }
    assert!((path.speed - 1.0).abs() < 1e-9);
    assert!(path.clamp_events.is_empty());
    assert!(path.error_estimate <= 1e-6);
}

#[test]
fn zero_velocity_path_is_constant() {
    let vel = VelocityRecord::zero(DomainSpec::square(1.0).unwrap(), (0.0, 1.0));
    let path = integrate_path(&vel, [0.2, 0.7], 1.0, 1.0).unwrap();
    assert!(path.points.iter().all(|p| *p == [0.2, 0.7]));
    assert_eq!(path.c_pth, 0.0);
}

#[test]
fn path_outside_record_is_rejected() {
    let vel = VelocityRecord::zero(DomainSpec::square(1.0).unwrap(), (0.0, 1.0));
    assert!(matches!(integrate_path(&vel, [0.5, 0.5], 1.0, 2.0), Err(Error::OutOfSpan { .. })));
    assert!(integrate_path(&vel, [0.5, 0.5], 1.0, 0.0).is_err());
}

#[test]
fn single_level_recursion_is_the_plain_path() {
    let vel = disk_rotation(1.0);
    let rec = gamma_recursion(std::slice::from_ref(&vel), [0.3, 0.1], 1.0, 1.0, 0.2, 1.0).unwrap();
    let plain = integrate_path(&vel, [0.3, 0.1], 1.0, 1.0).unwrap();
    assert_eq!(rec.paths.len(), 1);
    assert_eq!(rec.paths[0].points, plain.points);
    assert_eq!(rec.gamma_dot_sup[0], plain.c_pth);
    assert!((rec.bound - 0.2f64.log2().abs() * 2f64.exp()).abs() < 1e-12);
}

#[test]
fn recursion_differences_levels() {
    // Level 1 adds a small drift: γ̇_1 is exactly that drift.
    let dom = DomainSpec::disk(1.0).unwrap();
    let l0 = VelocityRecord::analytic(dom, (0.0, 1.0), |_, _| [0.1, 0.0]);
    let l1 = VelocityRecord::analytic(dom, (0.0, 1.0), |_, _| [0.1, 0.05]);
    let rec = gamma_recursion(&[l0, l1], [0.0, 0.0], 1.0, 1.0, 0.2, 1.0).unwrap();
    assert!((rec.gamma_dot_sup[0] - 0.1).abs() < 1e-12);
    assert!((rec.gamma_dot_sup[1] - 0.05).abs() < 1e-12);
    assert!((rec.paths[1].times[0] - 0.8).abs() < 1e-12);
    let last = rec.paths[1].correction[0];
    assert!((last[1] + 0.05 * 0.2).abs() < 1e-9, "{last:?}");
    assert!(rec.report.pass);
}

#[test]
fn exiting_path_reports_level() {
    let dom = DomainSpec::square(1.0).unwrap();
    let l0 = VelocityRecord::analytic(dom, (0.0, 1.0), |_, _| [1.0, 0.0]);
    match gamma_recursion(&[l0], [0.1, 0.5], 1.0, 1.0, 0.2, 1.0) {
        Err(Error::PathExit { level, t }) => {
            assert_eq!(level, 0);
            assert!((t - 0.9).abs() < 0.05, "{t}");
        }
        other => panic!("expected exit, got {:?}", other.map(|r| r.gamma_dot_sup)),
    }
}

#[test]
fn stream_record_matches_exact_velocity() {
    let basis = square(1.0, 12);
    let theta = InitialData::RandomBandLimited { kmax: 3.0 * PI, l2: 1.0 }.build(&basis, 5).unwrap();
    let psi = stream_function(&theta);
    let vel = VelocityRecord::from_streams(vec![0.0, 1.0], vec![psi.clone(), psi.scaled(3.0)]).unwrap();
    let p = [0.37, 0.61];
    let j = psi.jet(p);
    let v = vel.velocity(0.5, p).unwrap();
    let exact = [-2.0 * j.dy, 2.0 * j.dx];
    let scale = exact[0].hypot(exact[1]).max(vel.sup_speed() * 0.1);
    assert!((v[0] - exact[0]).hypot(v[1] - exact[1]) < 0.02 * scale, "{v:?} vs {exact:?}");
    assert!(vel.velocity(1.5, p).is_err());
    assert!(VelocityRecord::from_streams(vec![1.0, 0.0], vec![psi.clone(), psi]).is_err());
}

#[test]
fn low_pass_levels_from_a_run() {
    let basis = square(1.0, 10);
    let theta = InitialData::RandomBandLimited { kmax: 4.0 * PI, l2: 1.0 }.build(&basis, 1).unwrap();
    let cfg = SolverConfig { epsilon: 0.1, dt: 2e-3, t_end: 0.04, record_stride: 5, ..Default::default() };
    let rec = run(&theta, &cfg).unwrap();
    let (levels, kappa) = low_pass_levels(&rec, 0.04, 0.04, 0.2, 2, &LpBump).unwrap();
    assert_eq!(levels.len(), 3);
    assert!(kappa > 0.0);
    for l in &levels {
        let (a, b) = l.span();
        assert!(a.abs() < 1e-12 && (b - 0.04).abs() < 1e-12);
    }
    let gr = gamma_recursion(&levels, [0.5, 0.5], 0.04, 0.04, 0.2, kappa).unwrap();
    assert_eq!(gr.paths.len(), 3);
    assert!(gr.gamma_dot_sup.iter().all(|g| g.is_finite()));
}

fn synthetic_samples(density: usize, x0: Point) -> SpaceTimeSamples {
    let basis = square(1.0, 31);
    let grid = basis.make_grid(density);
    SpaceTimeSamples::from_fn(&grid, &[-1.0, -0.5, 0.0], move |_, p| (p[0] - x0[0]).hypot(p[1] - x0[1]).sqrt())
}

#[test]
fn synthetic_half_holder_exponent() {
    let s = synthetic_samples(16, [0.5, 0.5]);
    let spec =
        CylinderSpec { center: CylinderCenter::Fixed([0.5, 0.5]), radius: 0.4, timespan: 1.0, eps: 0.5, levels: 4 };
    let r = oscillation_scan(&s, &spec).unwrap();
    assert!((r.alpha - 0.5).abs() <= 0.05, "alpha = {}", r.alpha);
    assert!(r.nested);
    assert_eq!(r.rows.len(), 5);
    assert!(r.report.warnings.is_empty());
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    assert!(String::from_utf8(buf).unwrap().starts_with("k,radius,timespan,osc,center_x,center_y"));
}

#[test]
fn coarse_grid_drops_levels() {
    let s = synthetic_samples(1, [0.5, 0.5]);
    let spec =
        CylinderSpec { center: CylinderCenter::Fixed([0.5, 0.5]), radius: 0.4, timespan: 1.0, eps: 0.5, levels: 8 };
    let r = oscillation_scan(&s, &spec).unwrap();
    assert!(r.rows.len() < 9);
    assert!(!r.report.warnings.is_empty());
}

#[test]
fn constant_field_is_regular() {
    let basis = square(1.0, 8);
    let s = SpaceTimeSamples::from_fn(basis.fine_grid(), &[0.0, 1.0], |_, _| 4.0);
    let spec =
        CylinderSpec { center: CylinderCenter::Fixed([0.5, 0.5]), radius: 0.4, timespan: 1.0, eps: 0.5, levels: 2 };
    assert_eq!(oscillation_scan(&s, &spec).unwrap().alpha, f64::INFINITY);
}

#[test]
fn barrier_gap_at_one_is_independent_of_alpha() {
    let v = 3f64.powf(0.25) - 2f64.powf(0.25);
    for a in [1.0, 1.1, 1.18] {
        assert!((barrier_gap(a, 0.5, 1.0) - v).abs() < 1e-15);
    }
    assert!((v - 0.126_86).abs() < 1e-5);
}

#[test]
fn barrier_lemma_holds() {
    let l = verify_barrier_lemma(1e6, 4000).unwrap();
    assert!(l.alpha > 1.0 && l.lambda_bar > 0.0, "{:?}", l);
    assert!(l.alpha_max <= 2f64.powf(0.25));
    assert!(l.tail_coefficient > 0.0);
    assert!(l.report.pass);
    // Max-min over α is attained at the smallest grid α.
    assert!(l.grid_best.1 >= l.lambda_bar);
    assert!(verify_barrier_lemma(5.0, 100).is_err());
}

#[test]
fn interpolation_holds_for_random_fields() {
    let basis = square(1.0, 10);
    for seed in 0..4 {
        let f = SpectralField::random(&basis, seed, 2.0);
        let s = InterpolationSamples::from_field(&f, 2).unwrap();
        let r = verify_interpolation(&s, 0.5, seed).unwrap();
        assert!(r.pass, "{}", r.to_text());
        assert!(r.get("holder_ratio").unwrap() <= 1.0);
    }
}

#[test]
fn interpolation_for_sine() {
    let pts: Vec<Point> = (0..=400).map(|i| [PI * i as f64 / 400.0, 0.0]).collect();
    let s = InterpolationSamples::from_fn(pts, PI / 2.0, |p| p[0].sin(), |p| [p[0].cos(), 0.0]);
    let r = verify_interpolation(&s, 0.5, 0).unwrap();
    assert!(r.pass);
    assert!((r.get("holder_bound").unwrap() - 2f64.sqrt()).abs() < 1e-12);
    assert!(verify_interpolation(&s, 1.0, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ladder_monotone_for_affine_fields(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -1.0f64..3.0) {
        let basis = square(1.0, 4);
        let s = SpaceTimeSamples::from_fn(basis.grid(), &span_times(6), |t, p| a * p[0] + b * p[1] + c + 0.1 * t);
        prop_assert!(ladder(&s, 6).unwrap().is_monotone());
    }

    #[test]
    fn barrier_is_nondecreasing(r1 in 0.0f64..50.0, dr in 0.0f64..10.0) {
        let b = BarrierFn::standard();
        prop_assert!(b.radial(r1 + dr) >= b.radial(r1) - 1e-14);
    }

    #[test]
    fn barrier_gap_positive_at_reported_alpha(z in 1.0f64..1e6, eps in 1e-3f64..0.5) {
        prop_assert!(barrier_gap(1.09, eps, z) > 0.0);
    }
}
