use std::f64::consts::PI;

use super::bilinear::cell_kernels;
use super::*;
use crate::eigenbasis::{build_basis, SpectralField, Truncation};

fn square_pi(m: usize) -> Arc<EigenBasis> {
    build_basis(DomainSpec::square(PI).unwrap(), Truncation::square(m)).unwrap()
}

fn unit_square(m: usize) -> Arc<EigenBasis> {
    build_basis(DomainSpec::square(1.0).unwrap(), Truncation::square(m)).unwrap()
}

/// Method of images on (0, π)² summed directly over a generous window.
fn image_sum(t: f64, x: Point, y: Point) -> f64 {
    let one = |a: f64, b: f64| {
        let mut s = 0.0;
        for n in -20i32..=20 {
            let sh = 2.0 * PI * n as f64;
            s += (-(a - b + sh).powi(2) / (4.0 * t)).exp() - (-(a + b + sh).powi(2) / (4.0 * t)).exp();
        }
        s / (4.0 * PI * t).sqrt()
    };
    one(x[0], y[0]) * one(x[1], y[1])
}

#[test]
fn heat_kernel_matches_images_and_eigen_sum() {
    let b = square_pi(48);
    let x = [PI / 2.0, PI / 2.0];
    let y = [1.2, 2.1];
    let t = 0.5;
    let img = image_sum(t, x, y);
    let spec = heat_kernel_spectral(&b, t, x, y).unwrap();
    let direct = heat_kernel(&b, t, x, y).unwrap();
    assert!((img - spec).abs() < 1e-6 * img.abs().max(1e-12), "{img} {spec}");
    assert!((img - direct).abs() < 1e-12 * img.abs().max(1e-12));
}

#[test]
fn interval_representations_agree_at_switch() {
    let l = 1.3;
    let t = (l / PI).powi(2);
    for &(x, y) in &[(0.2, 0.9), (0.65, 0.65), (0.01, 1.2)] {
        let a = heat::interval_kernel(l, t * 0.999_999, x, y);
        let b = heat::interval_kernel(l, t * 1.000_001, x, y);
        assert!((a - b).abs() < 1e-5 * b.abs().max(1e-10), "{a} {b}");
        let sa = heat::interval_survival(l, t * 0.999_999, x);
        let sb = heat::interval_survival(l, t * 1.000_001, x);
        assert!((sa - sb).abs() < 1e-5, "{sa} {sb}");
    }
}

#[test]
fn heat_kernel_symmetric_and_positive() {
    let b = unit_square(16);
    let x = [0.3, 0.7];
    let y = [0.8, 0.25];
    for &t in &[1e-4, 1e-2, 0.1, 1.0] {
        let a = heat_kernel(&b, t, x, y).unwrap();
        let c = heat_kernel(&b, t, y, x).unwrap();
        assert!(a >= 0.0);
        assert!((a - c).abs() <= 1e-14 * a.abs().max(1e-300));
    }
}

#[test]
fn heat_kernel_large_time_is_leading_mode() {
    let b = unit_square(8);
    let x = [0.3, 0.4];
    let y = [0.6, 0.55];
    let t = 2.0;
    let e = |p: Point| 2.0 * (PI * p[0]).sin() * (PI * p[1]).sin();
    let lead = (-2.0 * PI * PI * t).exp() * e(x) * e(y);
    let k = heat_kernel(&b, t, x, y).unwrap();
    assert!((k - lead).abs() < 1e-12 * lead);
}

#[test]
fn survival_is_probability_and_decays() {
    let b = unit_square(8);
    let mid = survival(&b, 0.01, [0.5, 0.5]).unwrap();
    let edge = survival(&b, 0.01, [0.02, 0.5]).unwrap();
    assert!(mid > 0.99 && mid <= 1.0 + 1e-12);
    assert!(edge < mid && edge > 0.0);
}

#[test]
fn disk_survival_below_free_space_exit_bound() {
    // Survival in the disk is at most the probability of |B_t| < R from the center.
    let b = build_basis(DomainSpec::disk(1.0).unwrap(), Truncation::new(30, 30)).unwrap();
    let t = 0.05;
    let v = survival(&b, t, [0.0, 0.0]).unwrap();
    let bound = 1.0 - (-1.0 / (4.0 * t)).exp();
    assert!(v < bound && v > 0.98, "{v} {bound}");
    let far = survival(&b, 1e-3, [0.0, 0.0]).unwrap();
    assert_eq!(far, 1.0);
}

#[test]
fn disk_heat_kernel_rejects_insufficient_truncation() {
    let b = build_basis(DomainSpec::disk(1.0).unwrap(), Truncation::new(4, 4)).unwrap();
    let e = heat_kernel_spectral(&b, 1e-4, [0.1, 0.0], [0.2, 0.0]);
    assert!(matches!(e, Err(Error::InsufficientTruncation(_))));
}

#[test]
fn kernel_nonnegative_and_symmetric() {
    let b = unit_square(8);
    let x = [0.2, 0.3];
    let y = [0.7, 0.6];
    let a = kernel_k(&b, 0.5, x, y).unwrap();
    let c = kernel_k(&b, 0.5, y, x).unwrap();
    assert!(a > 0.0);
    assert!((a - c).abs() < 1e-12 * a);
}

#[test]
fn kernel_approaches_free_space_at_short_range() {
    let b = unit_square(8);
    let c = free_space_constant(0.5);
    assert!((c - 1.0 / (2.0 * PI)).abs() < 1e-14);
    let x = [0.5, 0.5];
    let mut last = f64::INFINITY;
    for &r in &[0.05, 0.01, 0.002] {
        let k = kernel_k(&b, 0.5, x, [0.5 + r, 0.5]).unwrap();
        let dev = (k * r.powi(3) / c - 1.0).abs();
        assert!(dev < last);
        last = dev;
    }
    assert!(last < 1e-3, "{last}");
}

#[test]
fn kernel_decays_towards_boundary() {
    let b = unit_square(8);
    let k_in = kernel_k(&b, 0.5, [0.5, 0.5], [0.6, 0.5]).unwrap();
    let k_edge = kernel_k(&b, 0.5, [0.01, 0.5], [0.11, 0.5]).unwrap();
    assert!(k_edge < k_in);
}

#[test]
fn kernel_rejects_coincident_points_and_bad_order() {
    let b = unit_square(4);
    assert!(kernel_k(&b, 0.5, [0.3, 0.3], [0.3, 0.3]).is_err());
    assert!(kernel_k(&b, 1.0, [0.3, 0.3], [0.4, 0.3]).is_err());
    assert!(kernel_b(&b, 0.5, [0.0, 0.3]).is_err());
}

#[test]
fn boundary_kernel_positive_and_blows_up_at_edge() {
    let b = unit_square(8);
    let mid = kernel_b(&b, 0.5, [0.5, 0.5]).unwrap();
    let near = kernel_b(&b, 0.5, [0.01, 0.5]).unwrap();
    assert!(mid > 0.0);
    assert!(near > 5.0 * mid);
}

#[test]
fn cell_table_matches_pointwise_kernel() {
    let b = unit_square(8);
    let ck = cell_kernels(1.0, 1.0, 8, 0.5).unwrap();
    for &(i1, j1, i2, j2) in &[(0, 0, 1, 0), (3, 4, 5, 2), (0, 7, 7, 0)] {
        let tab = ck.k(i1, j1, i2, j2);
        let direct = kernel_k(&b, 0.5, ck.center(i1, j1), ck.center(i2, j2)).unwrap();
        assert!((tab - direct).abs() < 1e-5 * direct, "{tab} {direct}");
    }
    let bt = ck.b(2, 3);
    let bd = kernel_b(&b, 0.5, ck.center(2, 3)).unwrap();
    assert!((bt - bd).abs() < 1e-5 * bd, "{bt} {bd}");
}

#[test]
fn upper_bound_holds_on_square() {
    let b = unit_square(8);
    let pairs = quasi_random_pairs(b.domain(), 40, 0.0, 0.01);
    let pts = default_sample_points(b.domain(), 4, 0.02);
    let table = KernelTable::build(&b, 0.5, &pairs, &pts).unwrap();
    let r = verify_upper_bound(&table);
    assert!(r.pass, "{}", r.to_text());
    let mut buf = Vec::new();
    table.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 41);
}

#[test]
fn empty_table_passes_vacuously_with_warning() {
    let b = unit_square(4);
    let table = KernelTable::build(&b, 0.5, &[], &[]).unwrap();
    let r = verify_upper_bound(&table);
    assert!(r.pass && !r.warnings.is_empty());
}

#[test]
fn domain_constant_is_scale_free() {
    let b = unit_square(8);
    let pairs = quasi_random_pairs(b.domain(), 12, 0.02, 0.02);
    let d = estimate_c_dmn(&b, 0.125, 0.5, &pairs).unwrap();
    assert!(d.c_dmn > 0.0 && d.c_dmn.is_finite());
    assert!((d.rescale_ratio - 1.0).abs() < 0.05, "{}", d.rescale_ratio);
    let swapped: Vec<_> = pairs.iter().map(|&(x, y)| (y, x)).collect();
    let d2 = estimate_c_dmn(&b, 0.125, 0.5, &swapped).unwrap();
    assert!((d.c_dmn - d2.c_dmn).abs() < 1e-10 * d.c_dmn);
}

#[test]
fn halton_points_in_unit_square() {
    for i in 1..200 {
        let p = halton(i);
        assert!((0.0..1.0).contains(&p[0]) && (0.0..1.0).contains(&p[1]));
    }
    assert_eq!(halton(1), [0.5, 1.0 / 3.0]);
}

#[test]
fn bilinear_identity_smooth_fields() {
    let b = unit_square(8);
    let f = SpectralField::random_band_limited(&b, 3, 3.0 * PI);
    let g = SpectralField::random_band_limited(&b, 5, 3.0 * PI);
    let opts = BilinearOptions { cells: 32, ..Default::default() };
    let r = verify_bilinear_identity(&f, &g, 0.5, &opts).unwrap();
    assert!(r.pass, "{}", r.to_text());
}

#[test]
fn bilinear_identity_zero_field() {
    let b = unit_square(4);
    let f = SpectralField::zeros(&b);
    let g = SpectralField::unit(&b, 0);
    let r = verify_bilinear_identity(&f, &g, 0.5, &BilinearOptions::default()).unwrap();
    assert!(r.pass);
    assert_eq!(r.get("rhs_quadrature"), Some(0.0));
}

#[test]
fn bilinear_identity_rejects_disk() {
    let b = build_basis(DomainSpec::disk(1.0).unwrap(), Truncation::new(3, 3)).unwrap();
    let f = SpectralField::unit(&b, 0);
    assert!(matches!(
        verify_bilinear_identity(&f, &f, 0.5, &BilinearOptions::default()),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn disjoint_bumps_have_nonpositive_pairing() {
    // Separated supports leave only the interaction term, which is −∬ f g K.
    let b = unit_square(24);
    let bump = |cx: f64| {
        move |p: Point| {
            let u = (p[0] - cx) / 0.2;
            let v = (p[1] - 0.5) / 0.2;
            if u.abs() < 1.0 && v.abs() < 1.0 {
                ((1.0 - u * u) * (1.0 - v * v)).powi(4)
            } else {
                0.0
            }
        }
    };
    let f = b.project_fn(bump(0.25));
    let g = b.project_fn(bump(0.75));
    let pairing: f64 = f
        .coeffs
        .iter()
        .zip(&g.coeffs)
        .zip(b.eigenvalues())
        .map(|((a, c), l)| a * c * l.sqrt())
        .sum();
    assert!(pairing <= 0.0, "{pairing}");
}

#[test]
fn bilinear_identity_single_mode_reproduces_eigenvalue_power() {
    let b = unit_square(4);
    let e0 = SpectralField::unit(&b, 0);
    let r = verify_bilinear_identity(&e0, &e0, 0.5, &BilinearOptions::default()).unwrap();
    assert!(r.pass, "{}", r.to_text());
    assert!((r.get("lhs_spectral").unwrap() - b.lambda0().sqrt()).abs() < 1e-12);
    assert!((r.get("rhs_quadrature").unwrap() / b.lambda0().sqrt() - 1.0).abs() < 0.02);
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn kernel_symmetric_and_nonnegative(
            x in (0.02f64..0.98, 0.02f64..0.98),
            y in (0.02f64..0.98, 0.02f64..0.98),
            s in 0.1f64..0.9,
        ) {
            let b = unit_square(6);
            let (x, y) = ([x.0, x.1], [y.0, y.1]);
            prop_assume!((x[0] - y[0]).hypot(x[1] - y[1]) > 1e-3);
            let a = kernel_k(&b, s, x, y).unwrap();
            let c = kernel_k(&b, s, y, x).unwrap();
            prop_assert!(a >= -1e-12);
            prop_assert!((a - c).abs() <= 1e-10 * a.abs());
        }
    }
}
