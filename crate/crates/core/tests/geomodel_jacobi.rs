//! Focal radii of the closed-form eigen-grid against the dense Jacobi system
//! `Q'' = −R̃ Q`, `Q(0) = I`, `Q'(0) = −A` on the tangent space of a small model.

use focalis::focal::{focal_set, Window};
use focalis::geomodel::{build_model, dense_operators, eigen_grid_of, Block, ParallelNormalField, SphereProductConfig};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_config() -> SphereProductConfig {
    SphereProductConfig {
        blocks: vec![Block { m: 5, r: 1.0 }, Block { m: 3, r: 0.8 }],
        k1: 2,
        rprime: vec![0.6, 0.5],
        k2: 1,
        n: 16,
    }
}

type State = (DMatrix<f64>, DMatrix<f64>);

fn rk4_step((q, p): &State, r: &DMatrix<f64>, h: f64) -> State {
    let f = |q: &DMatrix<f64>, p: &DMatrix<f64>| (p.clone(), -(r * q));
    let (k1q, k1p) = f(q, p);
    let (k2q, k2p) = f(&(q + &k1q * (h / 2.0)), &(p + &k1p * (h / 2.0)));
    let (k3q, k3p) = f(&(q + &k2q * (h / 2.0)), &(p + &k2p * (h / 2.0)));
    let (k4q, k4p) = f(&(q + &k3q * h), &(p + &k3p * h));
    (
        q + (k1q + k2q * 2.0 + k3q * 2.0 + k4q) * (h / 6.0),
        p + (k1p + k2p * 2.0 + k3p * 2.0 + k4p) * (h / 6.0),
    )
}

/// Sign changes of `det Q(s)` on `(0, max]`, each refined by bisection.
fn det_sign_changes(a: &DMatrix<f64>, r: &DMatrix<f64>, max: f64, h: f64) -> (Vec<f64>, Vec<(f64, State)>) {
    let n = a.nrows();
    let mut state: State = (DMatrix::identity(n, n), -a);
    let mut prev = state.0.determinant();
    let mut changes = Vec::new();
    let mut trajectory = Vec::new();
    let steps = (max / h).round() as usize;
    for k in 0..steps {
        let s = k as f64 * h;
        trajectory.push((s, state.clone()));
        let next = rk4_step(&state, r, h);
        let cur = next.0.determinant();
        if prev != 0.0 && cur != 0.0 && prev.signum() != cur.signum() {
            let left_sign = prev.signum();
            let (mut lo, mut hi) = (0.0, h);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let d = rk4_step(&state, r, mid).0.determinant();
                if d.signum() == left_sign {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            changes.push(s + 0.5 * (lo + hi));
        }
        prev = cur;
        state = next;
    }
    (changes, trajectory)
}

fn q_at(trajectory: &[(f64, State)], r: &DMatrix<f64>, s: f64) -> DMatrix<f64> {
    let idx = trajectory.iter().rposition(|(t, _)| *t <= s).expect("s inside the scan");
    let (t, state) = &trajectory[idx];
    rk4_step(state, r, s - t).0
}

#[test]
fn focal_radii_match_dense_jacobi_system() {
    let cfg = small_config();
    let model = build_model(cfg.clone(), 3, 11).expect("valid model");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let window = Window::new(1e-3, 6.0).unwrap();
    let mut checked = 0;
    for trial in 0..4 {
        let field = ParallelNormalField::random(&cfg, &mut rng);
        let index = trial % model.points.len();
        let xi = field.at(&model, index).unwrap();
        let grid = eigen_grid_of(&model, index, &xi).unwrap();
        let set = focal_set(&grid, &window);

        let ops = dense_operators(&model, index, &xi).unwrap();
        let n = cfg.n;
        let p = DMatrix::<f64>::identity(n, n) - &ops.normal_basis * ops.normal_basis.transpose();
        let eig = p.symmetric_eigen();
        let cols: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
        let t = DMatrix::from_fn(n, cols.len(), |r, c| eig.eigenvectors[(r, cols[c])]);
        assert!(t.ncols() <= 40);
        let a = t.transpose() * &ops.shape * &t;
        let rt = t.transpose() * &ops.jacobi * &t;

        let (changes, trajectory) = det_sign_changes(&a, &rt, window.max + 0.01, 1e-3);
        let odd: Vec<f64> = set.entries.iter().filter(|e| e.mult % 2 == 1).map(|e| e.radius).collect();
        assert_eq!(odd.len(), changes.len(), "odd-multiplicity radii {odd:?} vs det sign changes {changes:?}");
        for (r, c) in odd.iter().zip(&changes) {
            assert!((r - c).abs() < 1e-6, "radius {r} vs sign change {c}");
        }
        // Every radius, including even multiplicities, is a kernel of the right dimension.
        for e in &set.entries {
            let q = q_at(&trajectory, &rt, e.radius);
            let scale = q.norm().max(1.0);
            let mut sv: Vec<f64> = q.singular_values().iter().copied().collect();
            sv.sort_by(f64::total_cmp);
            let m = e.mult as usize;
            assert!(sv[m - 1] < 1e-6 * scale, "radius {} mult {m}: singular values {sv:?}", e.radius);
            assert!(sv[m] > 1e-4 * scale, "radius {} has a larger kernel than {m}", e.radius);
            checked += 1;
        }
    }
    assert!(checked > 0);
}
