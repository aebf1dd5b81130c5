//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs without the libtest harness so the lines are always
//! printed.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{random_element, random_loop, SmoothField};
use focalis::focal::{
    focal_radii_pair, jacobi_amplitude, jacobi_amplitude_derivative, parallel_shape_eigenvalue, riccati_oracle,
    Window,
};
use focalis::geomodel::{build_model, example41_report, Example41Options, ParallelNormalField, SphereProductConfig};
use focalis::greenop::{box_operator_1d, green_apply, green_kernel, kernel_apply, OperatorMatrix};
use focalis::liegroup::{
    expm, gauge_act, holonomy_element, load_algebra, pullback_connection, restricted_root_decomposition,
    section_orthogonality_check, transport, transport_fn, AlgebraPath, BracketPattern, CMat, GroupName,
    Involution, verify_bracket_pattern,
};
use focalis::spectral::{
    reg_trace, trace_square, zeta_trace, Eigenvalue, SpectralData, TailModel, TraceEstimate, ZetaConfig,
};
use focalis::Tolerances;
use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }
}

fn within(elapsed: Duration, limit: f64) -> bool {
    elapsed.as_secs_f64() < limit
}

// ---------------------------------------------------------------- 1

/// Positive sign changes of the RK4 solution of `Y'' = −λR·Y` on `(0, max]`,
/// each refined by bisection over single RK4 sub-steps from the left state.
fn rk4_sign_changes(lr: f64, la: f64, max: f64, h: f64) -> Vec<f64> {
    let step = |(y, v): (f64, f64), dt: f64| {
        let f = |y: f64, v: f64| (v, -lr * y);
        let (k1y, k1v) = f(y, v);
        let (k2y, k2v) = f(y + 0.5 * dt * k1y, v + 0.5 * dt * k1v);
        let (k3y, k3v) = f(y + 0.5 * dt * k2y, v + 0.5 * dt * k2v);
        let (k4y, k4v) = f(y + dt * k3y, v + dt * k3v);
        (y + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y), v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v))
    };
    let n = (max / h).round() as usize;
    let mut state = (1.0, -la);
    let mut out = Vec::new();
    for k in 0..n {
        let next = step(state, h);
        if state.0 != 0.0 && next.0 != 0.0 && state.0.signum() != next.0.signum() {
            let (mut lo, mut hi) = (0.0, h);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if step(state, mid).0.signum() == state.0.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(k as f64 * h + 0.5 * (lo + hi));
        } else if next.0 == 0.0 {
            out.push((k + 1) as f64 * h);
        }
        state = next;
    }
    out
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let window = Window::new(f64::MIN_POSITIVE, 10.0).unwrap();
    let (mut radii, mut worst_amp, mut worst_match): (usize, f64, f64) = (0, 0.0, 0.0);
    let mut count_ok = true;
    for lr in [-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0] {
        for la in [-3.0, -1.0, 0.0, 0.5, 1.0, 3.0] {
            let closed = focal_radii_pair(lr, la, &window);
            let oracle = rk4_sign_changes(lr, la, 10.0, 1e-3);
            count_ok &= closed.len() == oracle.len();
            for (r, o) in closed.iter().zip(&oracle) {
                worst_amp = worst_amp.max(jacobi_amplitude(lr, la, *r).abs());
                worst_match = worst_match.max((r - o).abs());
            }
            radii += closed.len();
        }
    }
    let t = start.elapsed();
    Verdict::new(
        count_ok && worst_amp < 1e-9 && worst_match < 1e-7 && within(t, 10.0),
        format!(
            "{radii} radii; counts agree: {count_ok}; max |Y| = {worst_amp:.2e} (< 1e-9); \
             max |r − oracle| = {worst_match:.2e} (< 1e-7); {:.2}s (< 10s)",
            t.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 2

/// `2Y(s) = (1 − λA/w)e^{ws} + (1 + λA/w)e^{−ws}` with `w = √−λR`, sampled on
/// a uniform grid of `(0, max]`; returns the smallest sample.
fn dense_min_amplitude(lr: f64, la: f64, max: f64, h: f64) -> f64 {
    let w = (-lr).sqrt();
    let n = (max / h).round() as usize;
    (1..=n)
        .map(|k| {
            let x = k as f64 * h * w;
            0.5 * ((1.0 - la / w) * x.exp() + (1.0 + la / w) * (-x).exp())
        })
        .fold(f64::INFINITY, f64::min)
}

fn criterion_2() -> Verdict {
    let window = Window::new(f64::MIN_POSITIVE, 50.0).unwrap();
    let (mut cases, mut ok, mut threshold_disagree) = (0, true, 0);
    let mut min_lib: f64 = f64::INFINITY;
    for lr in [-4.0f64, -2.0, -1.0, -0.5, -0.25, -0.01] {
        let w = (-lr).sqrt();
        for k in 0..=20 {
            let la = -w + 2.0 * w * k as f64 / 20.0;
            cases += 1;
            let oracle_min = dense_min_amplitude(lr, la, 50.0, 1e-3);
            let lib_min = (1..=50_000)
                .map(|i| jacobi_amplitude(lr, la, i as f64 * 1e-3))
                .fold(f64::INFINITY, f64::min);
            min_lib = min_lib.min(lib_min);
            ok &= oracle_min > 0.0 && lib_min > 0.0 && focal_radii_pair(lr, la, &window).is_empty();
            // The rule |λA| > |λR| would predict a radius here.
            if la.abs() > lr.abs() {
                threshold_disagree += 1;
            }
        }
        // Just past the threshold a radius appears.
        let la = w * 1.01;
        ok &= focal_radii_pair(lr, la, &window).len() == 1;
    }
    Verdict::new(
        ok,
        format!(
            "{cases} cases with |λA| ≤ √−λR: no zero on (0, 50] (min Y = {min_lib:.2e}); \
             {threshold_disagree} of them would be focal under |λA| > |λR|"
        ),
    )
}

// ---------------------------------------------------------------- 3

fn well_defined(lr: f64, la: f64, r: f64) -> bool {
    jacobi_amplitude(lr, la, r).abs() > 1e-3 * (1.0 + jacobi_amplitude_derivative(lr, la, r).abs())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn criterion_3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut oracle_worst, mut n_oracle): (f64, usize) = (0.0, 0);
    while n_oracle < 1000 {
        let (lr, la, r) = (rng.random_range(-4.0..4.0), rng.random_range(-3.0..3.0), rng.random_range(0.0..3.0));
        if !well_defined(lr, la, r) {
            continue;
        }
        let closed = parallel_shape_eigenvalue(lr, la, r).value().unwrap();
        oracle_worst = oracle_worst.max(rel(closed, riccati_oracle(lr, la, r, 4000).unwrap()));
        n_oracle += 1;
    }
    let (mut semi_worst, mut n_semi): (f64, usize) = (0.0, 0);
    while n_semi < 1000 {
        let (lr, la) = (rng.random_range(-4.0..4.0), rng.random_range(-3.0..3.0));
        let (r1, r2) = (rng.random_range(0.0..2.0), rng.random_range(0.0..2.0));
        if !(well_defined(lr, la, r1) && well_defined(lr, la, r1 + r2)) {
            continue;
        }
        let mid = parallel_shape_eigenvalue(lr, la, r1).value().unwrap();
        if !well_defined(lr, mid, r2) {
            continue;
        }
        let two = parallel_shape_eigenvalue(lr, mid, r2).value().unwrap();
        let one = parallel_shape_eigenvalue(lr, la, r1 + r2).value().unwrap();
        semi_worst = semi_worst.max(rel(two, one));
        n_semi += 1;
    }
    Verdict::new(
        oracle_worst < 1e-7 && semi_worst < 1e-8,
        format!(
            "oracle worst rel. diff {oracle_worst:.2e} (< 1e-7, {n_oracle} samples); \
             semigroup worst {semi_worst:.2e} (< 1e-8, {n_semi} pairs)"
        ),
    )
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(41);

    let cfg = SphereProductConfig::default();
    let model = build_model(cfg.clone(), 100, 7).unwrap();
    let field = ParallelNormalField::random(&cfg, &mut rng);
    let opts = Example41Options { dense_points: 0, commutator_trials: 100, ..Example41Options::default() };
    let small = example41_report(&model, &field, &opts, &tol).unwrap();
    let closed_exact = small.constancy.iter().all(|c| c.closed_min == c.closed_max);
    let commutator = small.commutator.max_norm;

    let big_cfg = SphereProductConfig::scaled(2000).unwrap();
    let big = build_model(big_cfg.clone(), 100, 8).unwrap();
    let big_field = ParallelNormalField::random(&big_cfg, &mut rng);
    let big_opts = Example41Options { dense_points: 3, commutator_trials: 0, ..Example41Options::default() };
    let dense = example41_report(&big, &big_field, &big_opts, &tol).unwrap();
    let big_exact = dense.constancy.iter().all(|c| c.closed_min == c.closed_max);
    let dense_dev = dense.constancy.iter().filter_map(|c| c.dense_max_deviation).fold(0.0, f64::max);

    let t = start.elapsed();
    let ok = closed_exact
        && big_exact
        && small.weakly_isoparametric
        && small.isoparametric
        && small.equifocal
        && commutator < 1e-10
        && dense_dev < 1e-6
        && within(t, 60.0);
    Verdict::new(
        ok,
        format!(
            "N = 64, 100 points: closed form identical: {closed_exact}; max commutator {commutator:.2e} \
             (< 1e-10, 100 trials); N = 2000, 100 points identical: {big_exact}, dense deviation on 3 points \
             {dense_dev:.2e} (< 1e-6); {:.1}s (< 60s)",
            t.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 5

fn finite(e: TraceEstimate) -> Option<(f64, f64)> {
    match e {
        TraceEstimate::Finite { value, error } => Some((value, error)),
        TraceEstimate::Divergent { .. } => None,
    }
}

fn criterion_5() -> Verdict {
    let half = 500_000u64;
    let alt = SpectralData::new(
        (1..=half).map(|i| Eigenvalue::new(1.0 / (2 * i) as f64, 1)).collect(),
        (1..=half).map(|i| Eigenvalue::new(1.0 / (2 * i - 1) as f64, 1)).collect(),
        None,
    )
    .unwrap();
    let alt_err = finite(reg_trace(&alt)).map(|(v, _)| (v + std::f64::consts::LN_2).abs());

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut zeta_ok = 0;
    let mut worst_gap: f64 = 0.0;
    for k in 0..20 {
        let spec = if k % 2 == 0 {
            let (cp, cn, q): (f64, f64, f64) = (rng.random_range(0.1..3.0), rng.random_range(0.1..3.0), rng.random_range(0.2..0.8));
            let c = cp.min(cn);
            let side = |c0: f64, n: usize| (1..=n).map(|i| Eigenvalue::new(c0 * q.powi(i as i32), 1)).collect();
            SpectralData::new(side(cp, 40), side(cn, 30), Some(TailModel { ratio: q, scale: c })).unwrap()
        } else {
            let (p, cp, cn) = (rng.random_range(2.0..3.0), rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
            let side = |c0: f64| (1..=20_000u64).map(|i| Eigenvalue::new(c0 / (i as f64).powf(p), 1)).collect();
            SpectralData::new(side(cp), side(cn), None).unwrap()
        };
        let (r, z) = (finite(reg_trace(&spec)), finite(zeta_trace(&spec, &ZetaConfig::default()).unwrap()));
        if let (Some((r, er)), Some((z, ez))) = (r, z) {
            let gap = (r - z).abs();
            worst_gap = worst_gap.max(gap);
            if gap <= er + ez + 1e-12 {
                zeta_ok += 1;
            }
        }
    }

    let inv_sqrt =
        SpectralData::new((1..=1_000_000u64).map(|i| Eigenvalue::new(1.0 / (i as f64).sqrt(), 1)).collect(), vec![], None)
            .unwrap();
    let divergent = matches!(trace_square(&inv_sqrt), TraceEstimate::Divergent { .. });

    Verdict::new(
        alt_err.is_some_and(|e| e < 1e-3) && zeta_ok == 20 && divergent,
        format!(
            "alternating harmonic |Tr_r + ln 2| = {} (< 1e-3, 10^6 terms); zeta = reg within combined \
             error on {zeta_ok}/20 spectra (max gap {worst_gap:.2e}); 1/√i square trace divergent: {divergent}",
            alt_err.map_or("divergent".to_owned(), |e| format!("{e:.2e}"))
        ),
    )
}

// ---------------------------------------------------------------- 6

const GROUPS: [GroupName; 3] = [GroupName::SU2, GroupName::SO3, GroupName::SU3];

/// `|φ − exact|` on `u(t) = Y + Ad(exp tY)X`, whose transport is `exp(Y)exp(X)`.
fn defect(x: &CMat, y: &CMat, steps: usize) -> f64 {
    let exact = expm(y) * expm(x);
    let u = |t: f64| {
        let e = expm(&(y * Complex::new(t, 0.0)));
        y + &e * x * e.adjoint()
    };
    (transport_fn(x.nrows(), steps, u) - exact).norm()
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut const_worst, mut order_worst): (f64, f64) = (0.0, 0.0);
    for _ in 0..50 {
        let x = random_element(GroupName::SU2, &mut rng, 2.0);
        let u = AlgebraPath::constant(GroupName::SU2, x.clone(), 1).unwrap();
        const_worst = const_worst.max((transport(&u, 1000).unwrap() - expm(&x)).norm());
        let y = random_element(GroupName::SU2, &mut rng, 2.0);
        let (d1, d2) = (defect(&x, &y, 500), defect(&x, &y, 1000));
        order_worst = order_worst.max(((d1 / d2).log2() - 2.0).abs());
    }

    let mut hol_worst: f64 = 0.0;
    for k in 0..100 {
        let group = GROUPS[k % 3];
        let speed = rng.random_range(0.5..2.0);
        let s = 2000;
        let omega = SmoothField::random(group, &mut rng, 1.0).sample(group, s, speed);
        let omega0 = SmoothField::random(group, &mut rng, 1.0).sample(group, s, speed);
        let hol = holonomy_element(&omega, &omega0, 2 * s).unwrap();
        let mu = pullback_connection(&omega, &omega0, 2 * s).unwrap();
        hol_worst = hol_worst.max((hol - transport(&mu, 2 * s).unwrap()).norm());
    }

    let mut fiber_worst: f64 = 0.0;
    for k in 0..50 {
        let group = GROUPS[k % 3];
        let s = 1000;
        let u = SmoothField::random(group, &mut rng, 1.0).sample(group, s, 1.0);
        let g = random_loop(group, &mut rng, s);
        let gu = gauge_act(&g, &u).unwrap();
        fiber_worst = fiber_worst.max((transport(&gu, 8 * s).unwrap() - transport(&u, 8 * s).unwrap()).norm());
    }

    Verdict::new(
        const_worst < 1e-8 && order_worst < 0.01 && hol_worst < 1e-6 && fiber_worst < 1e-6,
        format!(
            "|φ(X) − exp X| ≤ {const_worst:.2e} (< 1e-8, 50 X); observed order within {order_worst:.1e} of 2; \
             |hol − φ∘μ| ≤ {hol_worst:.2e} (< 1e-6, 100 connections); loop invariance ≤ {fiber_worst:.2e} \
             (< 1e-6, 50 loops)"
        ),
    )
}

// ---------------------------------------------------------------- 7

fn criterion_7() -> Verdict {
    let start = Instant::now();
    let tol = Tolerances::default();
    let mut parts = Vec::new();
    let mut ok = true;
    for (alg, theta) in [("su2", "so2"), ("su3", "so3")] {
        let a = load_algebra(alg).unwrap();
        let data = restricted_root_decomposition(&a, &Involution::parse(alg, theta).unwrap(), theta, &tol).unwrap();
        let summary = data.summary();
        let rep = verify_bracket_pattern(&data, BracketPattern::SumOnly, &tol);
        let bad: Vec<String> =
            rep.rows.iter().filter(|r| r.residual >= 1e-9).map(|r| format!("[{}, {}]", r.left, r.right)).collect();
        // Informational: the same rows with g_{|λ−μ|} admitted as a target.
        let with_diff = verify_bracket_pattern(&data, BracketPattern::SumAndDifference, &tol).max_residual;
        ok &= summary.dimension_identity && rep.max_residual < 1e-9;
        parts.push(format!(
            "{alg}/{theta}: n0 + Σn = {} of {}, sum-only max residual {:.2e} (< 1e-9), offending {:?}, \
             with difference roots {with_diff:.2e}",
            data.n0() + summary.multiplicities.iter().sum::<usize>(),
            summary.dim,
            rep.max_residual,
            bad
        ));
    }
    let t = start.elapsed();
    ok &= within(t, 5.0);
    Verdict::new(ok, format!("{}; {:.2}s (< 5s)", parts.join("; "), t.as_secs_f64()))
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Verdict {
    let tol = Tolerances::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for (group, k) in [(GroupName::SU2, "u1diag"), (GroupName::SU3, "so3")] {
        let r = section_orthogonality_check(group, k, k, 50, 8, &tol).unwrap();
        ok &= r.max_residual < 1e-8 && r.abelian_exact;
        parts.push(format!(
            "{group:?} with {k}: residual {:.2e} (< 1e-8), abelian exact: {} ({:.1e})",
            r.max_residual, r.abelian_exact, r.abelian_residual
        ));
    }
    Verdict::new(ok, parts.join("; "))
}

// ---------------------------------------------------------------- 9

fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> OperatorMatrix {
    let a = DMatrix::from_fn(n, n, |_, _| -> f64 { StandardNormal.sample(rng) });
    OperatorMatrix::new(a.transpose() * &a / n as f64 + DMatrix::identity(n, n)).unwrap()
}

fn gaussian(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

fn criterion_9() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let residual = |op: &OperatorMatrix, rng: &mut ChaCha8Rng| {
        let psi = gaussian(op.dim(), rng);
        (op.apply(&green_apply(op, &psi).unwrap()).unwrap() - psi).norm()
    };
    let spd = residual(&random_spd(200, &mut rng), &mut rng);
    let periodic = residual(&box_operator_1d(200, 3.0, true).unwrap(), &mut rng);
    let neumann = residual(&box_operator_1d(200, 3.0, false).unwrap(), &mut rng);
    let mut kernel_worst: f64 = 0.0;
    for n in [10, 50, 100] {
        let op = random_spd(n, &mut rng);
        let psi = gaussian(n, &mut rng);
        let via_kernel = kernel_apply(&green_kernel(&op).unwrap(), &psi).unwrap();
        kernel_worst = kernel_worst.max((via_kernel - green_apply(&op, &psi).unwrap()).norm());
    }
    Verdict::new(
        spd < 1e-10 && periodic < 1e-10 && neumann < 1e-10 && kernel_worst < 1e-10,
        format!(
            "residual SPD 200×200 {spd:.2e}, periodic box {periodic:.2e}, Neumann box {neumann:.2e} (< 1e-10); \
             kernel vs eigen route {kernel_worst:.2e} (< 1e-10, n ≤ 100)"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("focal-formula fidelity", criterion_1),
        ("nonexistence branch", criterion_2),
        ("parallel shape operator", criterion_3),
        ("isoparametric constancy of the model", criterion_4),
        ("trace machinery", criterion_5),
        ("transport and holonomy", criterion_6),
        ("root-space structure", criterion_7),
        ("hyperpolarity backbone", criterion_8),
        ("Green operator", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = panic::catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|_| Verdict::new(false, "panicked"));
        let status = if verdict.passed { "PASS" } else { "FAIL" };
        println!(
            "criterion {} [{status}] {name}: {} [{:.2}s]",
            i + 1,
            verdict.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!verdict.passed);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
