//! Restricted root spaces of a symmetric pair `(g, θ)`.
//!
//! Computations run in a basis orthonormal for the negative Killing form,
//! where every `ad(x)` is antisymmetric and `ad(H)²` is symmetric negative
//! semidefinite. A generic element `H₀` of `p = ker(θ + 1)` determines the
//! maximal abelian subspace `a` (its centralizer in `p`) and the positive
//! system (roots with `λ(H₀) > 0`). Each real root space
//! `g_λ = (g^C_λ ⊕ g^C_{−λ}) ∩ g` is an eigenspace of `ad(H₀)²` for the
//! eigenvalue `−λ(H₀)²`; on it `ad(H) = λ(H)·J` for a complex structure `J`
//! shared by all `H ∈ a`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{Involution, LieAlgebraBasis, LieError};
use crate::tolerance::Tolerances;

/// One positive restricted root with its real root space.
#[derive(Debug, Clone)]
pub struct RootSpace {
    /// `λ(H_i)` on the orthonormal basis `H_i` of `a`.
    pub root: DVector<f64>,
    /// `dim g_λ`.
    pub mult: usize,
    /// `dim (g_λ ∩ p)`, the usual restricted-root multiplicity.
    pub p_mult: usize,
    /// Orthonormal basis (columns, orthonormal coordinates).
    pub basis: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct RestrictedRootData {
    pub algebra: String,
    pub involution: String,
    /// Coordinates of a negative-Killing orthonormal basis of `g` in the
    /// algebra's own basis.
    pub frame: DMatrix<f64>,
    /// Structure matrices `ad(f_i)` in the orthonormal basis `f_i`.
    pub ad: Vec<DMatrix<f64>>,
    pub p_basis: DMatrix<f64>,
    pub a_basis: DMatrix<f64>,
    pub g0_basis: DMatrix<f64>,
    pub roots: Vec<RootSpace>,
    /// `max ‖ad(H)² v + λ(H)² v‖` over `H` in the `a` basis and `v` in the root spaces.
    pub eigen_residual: f64,
    /// `max ‖[H_i, H_j]‖` over the `a` basis.
    pub abelian_residual: f64,
}

impl RestrictedRootData {
    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn n0(&self) -> usize {
        self.g0_basis.ncols()
    }

    pub fn rank(&self) -> usize {
        self.a_basis.ncols()
    }

    fn ad_of(&self, x: &DVector<f64>) -> DMatrix<f64> {
        ad_combination(&self.ad, x)
    }

    /// Index of the positive root equal to `v`, if any.
    pub fn find_root(&self, v: &DVector<f64>, tol: f64) -> Option<usize> {
        self.roots.iter().position(|r| (&r.root - v).norm() <= tol)
    }

    pub fn summary(&self) -> RootSummary {
        RootSummary {
            algebra: self.algebra.clone(),
            involution: self.involution.clone(),
            dim: self.dim(),
            dim_p: self.p_basis.ncols(),
            rank: self.rank(),
            n0: self.n0(),
            roots: self.roots.iter().map(|r| r.root.iter().copied().collect()).collect(),
            multiplicities: self.roots.iter().map(|r| r.mult).collect(),
            p_multiplicities: self.roots.iter().map(|r| r.p_mult).collect(),
            dimension_identity: self.n0() + self.roots.iter().map(|r| r.mult).sum::<usize>() == self.dim(),
            eigen_residual: self.eigen_residual,
            abelian_residual: self.abelian_residual,
        }
    }
}

/// Serializable view of [`RestrictedRootData`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootSummary {
    pub algebra: String,
    pub involution: String,
    pub dim: usize,
    pub dim_p: usize,
    pub rank: usize,
    pub n0: usize,
    pub roots: Vec<Vec<f64>>,
    pub multiplicities: Vec<usize>,
    pub p_multiplicities: Vec<usize>,
    pub dimension_identity: bool,
    pub eigen_residual: f64,
    pub abelian_residual: f64,
}

pub(super) fn ad_combination(ad: &[DMatrix<f64>], x: &DVector<f64>) -> DMatrix<f64> {
    let d = ad.len();
    let mut out = DMatrix::zeros(d, d);
    for (a, &xi) in ad.iter().zip(x.iter()) {
        if xi != 0.0 {
            out += a * xi;
        }
    }
    out
}

/// Orthonormal basis of the null space of `m` (columns), via SVD.
pub(super) fn null_space(m: &DMatrix<f64>, rel: f64) -> DMatrix<f64> {
    let cols = m.ncols();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    // Pad so the SVD returns a full right factor.
    let padded = if m.nrows() < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let smax = svd.singular_values.max().max(1.0);
    let idx: Vec<usize> = (0..cols).filter(|&i| svd.singular_values[i] <= rel * smax).collect();
    DMatrix::from_fn(cols, idx.len(), |r, c| vt[(idx[c], r)])
}

/// Orthonormal basis of the eigenspace of a symmetric matrix with
/// eigenvalues in `pred`.
pub(super) fn eigenspace(m: &DMatrix<f64>, pred: impl Fn(f64) -> bool) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let idx: Vec<usize> = (0..m.nrows()).filter(|&i| pred(eig.eigenvalues[i])).collect();
    DMatrix::from_fn(m.nrows(), idx.len(), |r, c| eig.eigenvectors[(r, idx[c])])
}

pub(super) fn primes(count: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(count);
    let mut n = 2u32;
    while out.len() < count {
        if (2..n).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d)) {
            out.push(n);
        }
        n += 1;
    }
    out
}

pub fn restricted_root_decomposition(
    alg: &LieAlgebraBasis,
    theta: &Involution,
    theta_name: &str,
    tol: &Tolerances,
) -> Result<RestrictedRootData, LieError> {
    let d = alg.dim();
    let frame = alg.orthonormal_frame();
    let frame_inv = frame.clone().try_inverse().expect("frame is invertible");
    let ad: Vec<DMatrix<f64>> = (0..d)
        .map(|i| &frame_inv * alg.ad(&frame.column(i).into_owned()) * &frame)
        .collect();
    let theta_o = &frame_inv * theta.matrix(alg)? * &frame;
    let theta_o = (&theta_o + theta_o.transpose()) * 0.5;

    let p_basis = eigenspace(&theta_o, |v| (v + 1.0).abs() < 1e-8);
    if p_basis.ncols() == 0 {
        return Err(LieError::Involution("θ is the identity; p = 0".into()));
    }

    // Generic element of p with incommensurable weights.
    let weights = DVector::from_iterator(p_basis.ncols(), primes(p_basis.ncols()).into_iter().map(|p| (p as f64).sqrt()));
    let h0 = &p_basis * weights;
    let ad_h0 = ad_combination(&ad, &h0);

    let a_in_p = null_space(&(&ad_h0 * &p_basis), 1e-10);
    let a_basis = (&p_basis * a_in_p).qr().q();
    let rank = a_basis.ncols();

    let mut abelian: f64 = 0.0;
    for i in 0..rank {
        for j in 0..rank {
            let br = ad_combination(&ad, &a_basis.column(i).into_owned()) * a_basis.column(j);
            abelian = abelian.max(br.norm());
        }
    }
    if abelian > 1e-10 {
        return Err(LieError::Abelian(format!("[a, a] residual {abelian:.3e}")));
    }
    // Maximality: the common centralizer of a in p is a itself.
    let stacked = {
        let blocks: Vec<DMatrix<f64>> = (0..rank)
            .map(|i| ad_combination(&ad, &a_basis.column(i).into_owned()) * &p_basis)
            .collect();
        let mut s = DMatrix::zeros(d * rank, p_basis.ncols());
        for (i, b) in blocks.iter().enumerate() {
            s.view_mut((i * d, 0), (d, p_basis.ncols())).copy_from(b);
        }
        s
    };
    let centralizer = null_space(&stacked, 1e-10).ncols();
    if centralizer != rank {
        return Err(LieError::Abelian(format!("a has dimension {rank} but its centralizer in p has {centralizer}")));
    }

    // Cluster the spectrum of ad(H₀)².
    let sq = &ad_h0 * &ad_h0;
    let sq = (&sq + sq.transpose()) * 0.5;
    let eig = sq.clone().symmetric_eigen();
    let scale = eig.eigenvalues.amax().max(1.0);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match clusters.last_mut() {
            Some(c) if (eig.eigenvalues[i] - eig.eigenvalues[c[0]]).abs() <= tol.eigen_cluster * scale => c.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    let columns = |idx: &[usize]| DMatrix::from_fn(d, idx.len(), |r, c| eig.eigenvectors[(r, idx[c])]);

    let mut g0_basis = DMatrix::zeros(d, 0);
    let mut roots = Vec::new();
    let mut residual: f64 = 0.0;
    for c in &clusters {
        let mu = eig.eigenvalues[c[0]];
        let v = columns(c);
        if mu.abs() <= tol.eigen_cluster * scale {
            g0_basis = v;
            continue;
        }
        let lam0 = (-mu).sqrt();
        let j = &ad_h0 * &v / lam0;
        let mut root = DVector::zeros(rank);
        for i in 0..rank {
            let ad_h = ad_combination(&ad, &a_basis.column(i).into_owned());
            let hv = &ad_h * &v;
            let mut num = 0.0;
            let mut den = 0.0;
            for col in 0..v.ncols() {
                num += hv.column(col).dot(&j.column(col));
                den += j.column(col).norm_squared();
            }
            root[i] = num / den;
            let hhv = &ad_h * &hv;
            residual = residual.max((hhv + &v * root[i].powi(2)).norm());
        }
        let p_mult = (p_basis.transpose() * &v)
            .singular_values()
            .iter()
            .filter(|s| **s > 0.5)
            .count();
        roots.push(RootSpace { root, mult: v.ncols(), p_mult, basis: v });
    }
    roots.sort_by(|a, b| {
        a.root
            .iter()
            .zip(b.root.iter())
            .map(|(x, y)| y.total_cmp(x))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    Ok(RestrictedRootData {
        algebra: alg.name().to_owned(),
        involution: theta_name.to_owned(),
        frame,
        ad,
        p_basis,
        a_basis,
        g0_basis,
        roots,
        eigen_residual: residual,
        abelian_residual: abelian,
    })
}

/// Which containment rule to test for brackets of two distinct root spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketPattern {
    /// `[g_λ, g_μ] ⊂ g_{λ+μ}` for `λ ≠ μ`.
    SumOnly,
    /// `[g_λ, g_μ] ⊂ g_{λ+μ} ⊕ g_{|λ−μ|}` for `λ ≠ μ`, the containment that
    /// holds for real root spaces.
    SumAndDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketRow {
    pub left: String,
    pub right: String,
    pub target: Vec<String>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketReport {
    pub pattern: BracketPattern,
    pub rows: Vec<BracketRow>,
    pub max_residual: f64,
    /// `ad(a)` acts with nonzero image on every root space.
    pub a_acts_nontrivially: bool,
    pub passed: bool,
}

/// Projects brackets of basis vectors of every pair of spaces onto the
/// orthogonal complement of the predicted target space.
pub fn verify_bracket_pattern(data: &RestrictedRootData, pattern: BracketPattern, tol: &Tolerances) -> BracketReport {
    let l = data.roots.len();
    let name = |s: usize| if s == 0 { "g0".to_owned() } else { format!("g_{}", s) };
    let basis = |s: usize| if s == 0 { &data.g0_basis } else { &data.roots[s - 1].basis };
    let root_tol = 1e-8 * data.roots.iter().map(|r| r.root.norm()).fold(1.0, f64::max);

    let mut rows = Vec::new();
    for s1 in 0..=l {
        for s2 in s1..=l {
            let mut target: Vec<usize> = Vec::new();
            match (s1, s2) {
                (0, 0) => target.push(0),
                (0, b) => target.push(b),
                (a, b) if a == b => {
                    target.push(0);
                    let twice = &data.roots[a - 1].root * 2.0;
                    if let Some(k) = data.find_root(&twice, root_tol) {
                        target.push(k + 1);
                    }
                }
                (a, b) => {
                    let (ra, rb) = (&data.roots[a - 1].root, &data.roots[b - 1].root);
                    if let Some(k) = data.find_root(&(ra + rb), root_tol) {
                        target.push(k + 1);
                    }
                    if pattern == BracketPattern::SumAndDifference {
                        for diff in [ra - rb, rb - ra] {
                            if let Some(k) = data.find_root(&diff, root_tol) {
                                target.push(k + 1);
                            }
                        }
                    }
                }
            }
            let mut t = DMatrix::zeros(data.dim(), 0);
            for &k in &target {
                let b = basis(k);
                let cols = t.ncols();
                t = t.insert_columns(cols, b.ncols(), 0.0);
                t.view_mut((0, cols), (data.dim(), b.ncols())).copy_from(b);
            }
            let (b1, b2) = (basis(s1), basis(s2));
            let mut residual: f64 = 0.0;
            for i in 0..b1.ncols() {
                let ad_v = data.ad_of(&b1.column(i).into_owned());
                for j in 0..b2.ncols() {
                    let br = &ad_v * b2.column(j);
                    let outside = &br - &t * (t.transpose() * &br);
                    residual = residual.max(outside.norm());
                }
            }
            rows.push(BracketRow {
                left: name(s1),
                right: name(s2),
                target: target.iter().map(|&k| name(k)).collect(),
                residual,
            });
        }
    }

    let a_acts = data.roots.iter().all(|r| {
        (0..data.rank()).any(|i| {
            let ad_h = data.ad_of(&data.a_basis.column(i).into_owned());
            (&ad_h * &r.basis).norm() > 1e-8
        })
    });
    let max_residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    BracketReport { pattern, rows, max_residual, a_acts_nontrivially: a_acts, passed: max_residual < tol.bracket && a_acts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liegroup::load_algebra;

    fn decompose(alg: &str, theta: &str) -> RestrictedRootData {
        let a = load_algebra(alg).unwrap();
        let t = Involution::parse(alg, theta).unwrap();
        restricted_root_decomposition(&a, &t, theta, &Tolerances::default()).unwrap()
    }

    #[test]
    fn su2_so2_has_one_root_of_multiplicity_two() {
        let d = decompose("su2", "so2");
        assert_eq!(d.n0(), 1);
        assert_eq!(d.rank(), 1);
        assert_eq!(d.roots.len(), 1);
        assert_eq!(d.roots[0].mult, 2);
        assert!(d.eigen_residual < 1e-9);
    }

    #[test]
    fn su3_so3_is_a2() {
        let d = decompose("su3", "so3");
        assert_eq!(d.rank(), 2);
        assert_eq!(d.n0(), 2);
        assert_eq!(d.roots.len(), 3);
        for r in &d.roots {
            assert_eq!(r.mult, 2);
            assert_eq!(r.p_mult, 1);
        }
        // A₂: all roots of equal length, one root is the sum of the other two.
        let lens: Vec<f64> = d.roots.iter().map(|r| r.root.norm()).collect();
        assert!(lens.iter().all(|l| (l - lens[0]).abs() < 1e-9));
        let sums = (0..3).filter(|&k| {
            let others: Vec<usize> = (0..3).filter(|&i| i != k).collect();
            (&d.roots[others[0]].root + &d.roots[others[1]].root - &d.roots[k].root).norm() < 1e-9
        });
        assert_eq!(sums.count(), 1);
        assert!(d.eigen_residual < 1e-9);
    }

    #[test]
    fn g0_contains_a() {
        let d = decompose("su3", "so3");
        let proj = &d.g0_basis * (d.g0_basis.transpose() * &d.a_basis);
        assert!((proj - &d.a_basis).norm() < 1e-10);
    }

    #[test]
    fn so3_so2_matches_su2() {
        let d = decompose("so3", "so2");
        assert_eq!((d.n0(), d.roots.len(), d.roots[0].mult), (1, 1, 2));
    }

    #[test]
    fn trivial_involution_rejected() {
        let a = load_algebra("so3").unwrap();
        let r = restricted_root_decomposition(&a, &Involution::Conjugation, "conj", &Tolerances::default());
        assert!(matches!(r, Err(LieError::Involution(_))));
    }

    #[test]
    fn bracket_patterns() {
        let tol = Tolerances::default();
        let d = decompose("su2", "so2");
        for p in [BracketPattern::SumOnly, BracketPattern::SumAndDifference] {
            let rep = verify_bracket_pattern(&d, p, &tol);
            assert!(rep.passed, "{rep:?}");
        }
        let d = decompose("su3", "so3");
        let full = verify_bracket_pattern(&d, BracketPattern::SumAndDifference, &tol);
        assert!(full.passed && full.max_residual < 1e-9);
        let sum_only = verify_bracket_pattern(&d, BracketPattern::SumOnly, &tol);
        assert!(!sum_only.passed);
        // Only the pair of roots differing by a root violates the sum-only rule.
        let bad: Vec<_> = sum_only.rows.iter().filter(|r| r.residual > 1e-9).collect();
        assert_eq!(bad.len(), 2);
    }
}
