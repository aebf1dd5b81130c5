//! Section check for the two-sided action `(k₁, k₂)·g = k₁·g·k₂⁻¹` of a pair
//! of symmetric subgroups on a compact group.
//!
//! The candidate section is `exp(a)` with `a` maximal abelian in
//! `p₁ ∩ p₂`, which requires the involutions to commute. At `g = exp(H)` the
//! orbit tangent space, right-translated to the identity, is
//! `k₁ + Ad(g)k₂`, and the section tangent is `a`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::roots::{ad_combination, eigenspace, null_space, primes};
use super::{expm, GroupName, Involution, LieError};
use crate::tolerance::Tolerances;

/// Relative bound for the abelian check: exact up to accumulated roundoff.
const ABELIAN_EXACT: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperpolarReport {
    pub group: GroupName,
    pub k1: String,
    pub k2: String,
    pub dim: usize,
    pub section_dim: usize,
    pub samples: usize,
    pub seed: u64,
    /// `‖θ₁θ₂ − θ₂θ₁‖`.
    pub commute_residual: f64,
    /// Largest `|⟨v, t⟩|` over unit orbit vectors `v` and unit section vectors `t`.
    pub max_residual: f64,
    /// Largest `‖[H, H']‖ / (‖H‖‖H'‖)` over section basis pairs.
    pub abelian_residual: f64,
    pub abelian_exact: bool,
    pub orbit_dim_min: usize,
    pub orbit_dim_max: usize,
    /// Orbit and section dimensions add up to `dim G` at every sample.
    pub complementary: bool,
    pub passed: bool,
}

pub fn section_orthogonality_check(
    group: GroupName,
    k1: &str,
    k2: &str,
    n_samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<HyperpolarReport, LieError> {
    let alg = group.algebra();
    let d = alg.dim();
    let frame = alg.orthonormal_frame();
    let frame_inv = frame.clone().try_inverse().expect("frame is invertible");
    let theta = |name: &str| -> Result<DMatrix<f64>, LieError> {
        let m = &frame_inv * Involution::parse(alg.name(), name)?.matrix(&alg)? * &frame;
        Ok((&m + m.transpose()) * 0.5)
    };
    let (t1, t2) = (theta(k1)?, theta(k2)?);
    let commute_residual = (&t1 * &t2 - &t2 * &t1).norm();
    if commute_residual > 1e-10 {
        return Err(LieError::Involution(format!("involutions do not commute ({commute_residual:.3e})")));
    }

    let k1_basis = eigenspace(&t1, |v| (v - 1.0).abs() < 1e-8);
    let k2_basis = eigenspace(&t2, |v| (v - 1.0).abs() < 1e-8);
    let p12 = {
        let id = DMatrix::<f64>::identity(d, d);
        let mut stacked = DMatrix::zeros(2 * d, d);
        stacked.view_mut((0, 0), (d, d)).copy_from(&(&t1 + &id));
        stacked.view_mut((d, 0), (d, d)).copy_from(&(&t2 + &id));
        null_space(&stacked, 1e-10)
    };
    if p12.ncols() == 0 {
        return Err(LieError::Abelian("p₁ ∩ p₂ = 0".into()));
    }

    let ad: Vec<DMatrix<f64>> = (0..d)
        .map(|i| &frame_inv * alg.ad(&frame.column(i).into_owned()) * &frame)
        .collect();
    let weights = DVector::from_iterator(p12.ncols(), primes(p12.ncols()).into_iter().map(|p| (p as f64).sqrt()));
    let h0 = &p12 * weights;
    let a_basis = {
        let c = null_space(&(ad_combination(&ad, &h0) * &p12), 1e-10);
        (&p12 * c).qr().q()
    };
    let rank = a_basis.ncols();

    let to_matrix = |o: &DVector<f64>| alg.from_coords(&(&frame * o));
    let a_mats: Vec<_> = (0..rank).map(|i| to_matrix(&a_basis.column(i).into_owned())).collect();
    let mut abelian_residual: f64 = 0.0;
    for x in &a_mats {
        for y in &a_mats {
            let br = x * y - y * x;
            abelian_residual = abelian_residual.max(br.norm() / (x.norm() * y.norm()));
        }
    }

    let ortho: Vec<_> = (0..d)
        .map(|i| to_matrix(&DVector::from_fn(d, |k, _| if k == i { 1.0 } else { 0.0 })))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_residual: f64 = 0.0;
    let (mut orbit_min, mut orbit_max) = (usize::MAX, 0);
    for _ in 0..n_samples {
        let h = DVector::from_fn(rank, |_, _| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
        let g = expm(&to_matrix(&(&a_basis * h)));
        let g_inv = g.adjoint();
        let mut ad_g = DMatrix::zeros(d, d);
        for (j, e) in ortho.iter().enumerate() {
            let img = alg.coords(&(&g * e * &g_inv))?;
            ad_g.set_column(j, &(&frame_inv * img));
        }
        let moved = &ad_g * &k2_basis;
        let mut span = DMatrix::zeros(d, k1_basis.ncols() + moved.ncols());
        span.view_mut((0, 0), (d, k1_basis.ncols())).copy_from(&k1_basis);
        span.view_mut((0, k1_basis.ncols()), (d, moved.ncols())).copy_from(&moved);
        let svd = span.svd(true, false);
        let u = svd.u.expect("requested");
        let smax = svd.singular_values.max();
        let idx: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > 1e-8 * smax)
            .collect();
        orbit_min = orbit_min.min(idx.len());
        orbit_max = orbit_max.max(idx.len());
        let q = DMatrix::from_fn(d, idx.len(), |r, c| u[(r, idx[c])]);
        let overlap = q.transpose() * &a_basis;
        max_residual = max_residual.max(overlap.amax());
    }
    if n_samples == 0 {
        orbit_min = 0;
    }
    let complementary = n_samples > 0 && orbit_min == orbit_max && orbit_max + rank == d;
    let abelian_exact = abelian_residual <= ABELIAN_EXACT;
    Ok(HyperpolarReport {
        group,
        k1: k1.to_owned(),
        k2: k2.to_owned(),
        dim: d,
        section_dim: rank,
        samples: n_samples,
        seed,
        commute_residual,
        max_residual,
        abelian_residual,
        abelian_exact,
        orbit_dim_min: orbit_min,
        orbit_dim_max: orbit_max,
        complementary,
        passed: n_samples > 0 && max_residual < tol.orthogonality && abelian_exact && complementary,
    })
}
