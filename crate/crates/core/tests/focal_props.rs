use focalis::focal::{
    equifocal_check, focal_radii_pair, jacobi_amplitude, jacobi_amplitude_derivative, parallel_shape_eigenvalue,
    riccati_oracle, weakly_isoparametric_check, EigenGrid, ParallelValue, RadiusSign, Window,
};
use focalis::Tolerances;
use proptest::prelude::*;

/// Zeros of `Y` found by scanning `(0, max]` with step `h` and bisecting each
/// sign change.
fn scanned_zeros(lr: f64, la: f64, max: f64, h: f64) -> Vec<f64> {
    let y = |s: f64| jacobi_amplitude(lr, la, s);
    let n = (max / h).round() as usize;
    let mut out = Vec::new();
    let mut prev = y(0.0);
    for k in 1..=n {
        let s = k as f64 * h;
        let cur = y(s);
        if cur == 0.0 {
            out.push(s);
        } else if prev != 0.0 && prev.signum() != cur.signum() {
            let (mut a, mut b) = (s - h, s);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if y(m).signum() == y(a).signum() {
                    a = m;
                } else {
                    b = m;
                }
            }
            out.push(0.5 * (a + b));
        }
        prev = cur;
    }
    out
}

/// Away from focal radii by a margin relative to the derivative.
fn well_defined(lr: f64, la: f64, r: f64) -> bool {
    jacobi_amplitude(lr, la, r).abs() > 1e-3 * (1.0 + jacobi_amplitude_derivative(lr, la, r).abs())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn radii_are_zeros_and_match_scan(lr in -4.0f64..4.0, la in -3.0f64..3.0) {
        let w = Window::new(1e-9, 10.0).unwrap();
        let radii = focal_radii_pair(lr, la, &w);
        for &r in &radii {
            prop_assert!(jacobi_amplitude(lr, la, r).abs() < 1e-9);
        }
        let scan = scanned_zeros(lr, la, 10.0, 1e-3);
        prop_assert_eq!(radii.len(), scan.len(), "closed {:?} scan {:?}", radii, scan);
        for (a, b) in radii.iter().zip(&scan) {
            prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
        }
    }

    #[test]
    fn negative_window_radii_are_zeros(lr in -4.0f64..4.0, la in -3.0f64..3.0) {
        let w = Window::signed(1e-9, 10.0, RadiusSign::Negative).unwrap();
        for r in focal_radii_pair(lr, la, &w) {
            prop_assert!(r < 0.0);
            prop_assert!(jacobi_amplitude(lr, la, r).abs() < 1e-9);
        }
    }

    #[test]
    fn riccati_semigroup(lr in -4.0f64..4.0, la in -3.0f64..3.0, r in 0.0f64..2.0, r2 in 0.0f64..2.0) {
        prop_assume!(well_defined(lr, la, r) && well_defined(lr, la, r + r2));
        let mid = parallel_shape_eigenvalue(lr, la, r).value().unwrap();
        prop_assume!(well_defined(lr, mid, r2));
        let two = parallel_shape_eigenvalue(lr, mid, r2).value().unwrap();
        let one = parallel_shape_eigenvalue(lr, la, r + r2).value().unwrap();
        prop_assert!(close(two, one, 1e-8), "{} vs {}", two, one);
    }

    #[test]
    fn closed_form_matches_riccati_oracle(lr in -4.0f64..4.0, la in -3.0f64..3.0, r in 0.0f64..3.0) {
        prop_assume!(well_defined(lr, la, r));
        let closed = parallel_shape_eigenvalue(lr, la, r).value().unwrap();
        let oracle = riccati_oracle(lr, la, r, 4000).unwrap();
        prop_assert!(close(closed, oracle, 1e-7), "{} vs {}", closed, oracle);
    }

    #[test]
    fn continuity_across_flat_curvature(la in -3.0f64..3.0, s in 0.0f64..5.0) {
        let y0 = jacobi_amplitude(0.0, la, s);
        prop_assert!((jacobi_amplitude(1e-8, la, s) - y0).abs() < 1e-6);
        prop_assert!((jacobi_amplitude(-1e-8, la, s) - y0).abs() < 1e-6);
    }

    #[test]
    fn radii_scale_with_reparametrization(lr in -4.0f64..4.0, la in -3.0f64..3.0, c in 0.25f64..4.0) {
        let w = Window::new(1e-9, 10.0).unwrap();
        let base = focal_radii_pair(lr, la, &w);
        let wide = Window::new(1e-9, 10.0 / c).unwrap();
        let scaled = focal_radii_pair(c * c * lr, c * la, &wide);
        prop_assert_eq!(base.len(), scaled.len());
        for (a, b) in base.iter().zip(&scaled) {
            prop_assert!((a / c - b).abs() < 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn weak_implies_equifocal(
        pairs in prop::collection::vec((-4.0f64..4.0, -3.0f64..3.0, 1u64..4), 1..8),
        seed in any::<u64>(),
        lo in 0.01f64..1.0,
        span in 0.5f64..10.0,
    ) {
        let g0 = EigenGrid::from_triples(Some("a"), pairs.clone()).unwrap();
        let mut shuffled = pairs;
        let k = (seed as usize) % shuffled.len();
        shuffled.rotate_left(k);
        shuffled.reverse();
        let g1 = EigenGrid::from_triples(Some("b"), shuffled).unwrap();
        let tol = Tolerances::default();
        let grids = [g0, g1];
        prop_assert!(weakly_isoparametric_check(&grids, &tol).unwrap().passed);
        let w = Window::new(lo, lo + span).unwrap();
        prop_assert!(equifocal_check(&grids, &w, &tol).unwrap().passed);
    }
}

#[test]
fn regular_and_focal_values() {
    assert_eq!(parallel_shape_eigenvalue(1.0, 0.0, std::f64::consts::FRAC_PI_2), ParallelValue::Focal);
    assert!(matches!(parallel_shape_eigenvalue(1.0, 0.0, 1.0), ParallelValue::Regular(_)));
}
