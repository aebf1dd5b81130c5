//! A product of round spheres cut by hyperplanes, inside a truncated
//! sequence space.
//!
//! Coordinates of `R^N` alternate as `(b_1, a_1, b_2, a_2, ...)`: the `a`
//! entries (odd ambient indices, 0-based) are grouped into consecutive blocks
//! `I_1, ..., I_K` of sizes `m_k`, the `b` entries (even ambient indices) are
//! flat. The ambient manifold `M̃` is `Π S^{m_k−1}(r_k) × R^{b}`. The model
//! submanifold `M ⊂ M̃` additionally fixes the last coordinate of each block
//! `j ≤ k1` to the height `h_j = √(r_j² − r′_j²)`, which cuts block `j` down to a
//! sphere of radius `r′_j`, and sets `b_j = 0` for `j ≤ k2`.
//!
//! Per point the tangent space splits as `E_1 ⊕ ... ⊕ E_{k1} ⊕ E_0`, where
//! `E_j` is the tangent space of the cut sphere in block `j` and `E_0` collects
//! the uncut blocks and the free flat coordinates. Both the shape operator and
//! the normal Jacobi operator are scalar on every `E_j`.
//!
//! Two independent routes are provided: closed-form block data
//! ([`eigen_grid_of`]) and dense ambient matrices ([`dense_operators`],
//! [`dense_eigen_grid`]) built from constraint gradients via Lagrange
//! multipliers and the round-sphere curvature tensor.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::focal::{self, EigenGrid, FocalRadiusSet, GridPair, Window};
use crate::spectral::SpectralData;
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomodelError {
    #[error("invalid sphere-product config: {0}")]
    InvalidConfig(String),
    #[error("point index {index} out of range ({count} points)")]
    PointIndex { index: usize, count: usize },
    #[error("vector has length {got}, expected {expected}")]
    Length { got: usize, expected: usize },
    #[error("vector is not normal to the model submanifold (residual {residual:.3e})")]
    NotNormal { residual: f64 },
    #[error("parallel field has {got} coefficients, expected {expected}")]
    FieldShape { got: String, expected: String },
    #[error("dense joint diagonalization failed: {0}")]
    Dense(String),
    #[error(transparent)]
    Focal(#[from] focal::FocalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub m: usize,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereProductConfig {
    pub blocks: Vec<Block>,
    pub k1: usize,
    pub rprime: Vec<f64>,
    pub k2: usize,
    /// Ambient truncation dimension; `n / 2` must equal `Σ m_k`.
    pub n: usize,
}

impl Default for SphereProductConfig {
    fn default() -> Self {
        Self {
            blocks: vec![
                Block { m: 5, r: 1.0 },
                Block { m: 7, r: 0.8 },
                Block { m: 9, r: 0.6 },
                Block { m: 11, r: 0.5 },
            ],
            k1: 3,
            rprime: vec![0.7, 0.5, 0.4],
            k2: 4,
            n: 64,
        }
    }
}

impl SphereProductConfig {
    /// Default radii and cut radii with block sizes scaled so that
    /// `Σ m_k = n / 2`.
    pub fn scaled(n: usize) -> Result<Self, GeomodelError> {
        let mut cfg = Self::default();
        let half = n / 2;
        let base: usize = cfg.blocks.iter().map(|b| b.m).sum();
        let mut assigned = 0;
        let last = cfg.blocks.len() - 1;
        for (k, b) in cfg.blocks.iter_mut().enumerate() {
            b.m = if k == last { half.saturating_sub(assigned) } else { b.m * half / base };
            assigned += b.m;
        }
        cfg.n = n;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), GeomodelError> {
        let bad = |msg: String| Err(GeomodelError::InvalidConfig(msg));
        if self.blocks.is_empty() {
            return bad("no blocks".into());
        }
        for (k, b) in self.blocks.iter().enumerate() {
            if b.m < 2 {
                return bad(format!("block {} has m = {} < 2", k + 1, b.m));
            }
            if !(b.r.is_finite() && b.r > 0.0) {
                return bad(format!("block {} has radius {}", k + 1, b.r));
            }
        }
        if self.k1 > self.blocks.len() {
            return bad(format!("k1 = {} exceeds K = {}", self.k1, self.blocks.len()));
        }
        if self.rprime.len() != self.k1 {
            return bad(format!("{} cut radii given for k1 = {}", self.rprime.len(), self.k1));
        }
        for (j, (&rp, b)) in self.rprime.iter().zip(&self.blocks).enumerate() {
            if !(rp > 0.0 && rp < b.r) {
                return bad(format!("cut radius r'_{} = {} not in (0, {})", j + 1, rp, b.r));
            }
        }
        let total: usize = self.blocks.iter().map(|b| b.m).sum();
        if self.n / 2 != total {
            return bad(format!("floor(N/2) = {} but block sizes sum to {}", self.n / 2, total));
        }
        if self.k2 > self.flat_count() {
            return bad(format!("k2 = {} exceeds the {} flat coordinates", self.k2, self.flat_count()));
        }
        Ok(())
    }

    /// Number of flat (`b`) coordinates.
    pub fn flat_count(&self) -> usize {
        self.n - self.blocks.iter().map(|b| b.m).sum::<usize>()
    }

    /// Ambient indices of block `k`.
    pub fn block_coords(&self, k: usize) -> std::ops::Range<usize> {
        let start: usize = self.blocks[..k].iter().map(|b| b.m).sum();
        start..start + self.blocks[k].m
    }

    pub fn a_index(i: usize) -> usize {
        2 * i + 1
    }

    pub fn b_index(j: usize) -> usize {
        2 * j
    }

    /// Ambient index of the fixed (last) coordinate of block `j`.
    pub fn pole_index(&self, j: usize) -> usize {
        Self::a_index(self.block_coords(j).end - 1)
    }

    /// Height `√(r_j² − r′_j²)` of the cut in block `j ≤ k1`.
    pub fn height(&self, j: usize) -> f64 {
        let (r, rp) = (self.blocks[j].r, self.rprime[j]);
        (r * r - rp * rp).sqrt()
    }

    /// `√(1/r′_j² − 1/r_j²)`, the curvature of the cut sphere inside its block.
    pub fn kappa(&self, j: usize) -> f64 {
        let (r, rp) = (self.blocks[j].r, self.rprime[j]);
        (1.0 / (rp * rp) - 1.0 / (r * r)).sqrt()
    }

    /// `dim E_j = m_j − 2` for `j ≤ k1`.
    pub fn e_dims(&self) -> Vec<usize> {
        self.blocks[..self.k1].iter().map(|b| b.m - 2).collect()
    }

    pub fn e0_dim(&self) -> usize {
        self.blocks[self.k1..].iter().map(|b| b.m - 1).sum::<usize>() + self.flat_count() - self.k2
    }

    pub fn tangent_dim(&self) -> usize {
        self.e_dims().iter().sum::<usize>() + self.e0_dim()
    }

    /// Codimension of `M` in `M̃`.
    pub fn normal_dim(&self) -> usize {
        self.k1 + self.k2
    }

    /// Number of constraints defining `M` in `R^N`.
    pub fn constraint_count(&self) -> usize {
        self.blocks.len() + self.k1 + self.k2
    }
}

/// Random sample points of `M` for a fixed config.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSubmanifold {
    pub config: SphereProductConfig,
    pub seed: u64,
    pub points: Vec<DVector<f64>>,
}

pub fn build_model(config: SphereProductConfig, n_points: usize, seed: u64) -> Result<ModelSubmanifold, GeomodelError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n_points);
    for _ in 0..n_points {
        let mut x = DVector::zeros(config.n);
        for (k, b) in config.blocks.iter().enumerate() {
            let coords = config.block_coords(k);
            let (free, radius) = if k < config.k1 {
                x[config.pole_index(k)] = config.height(k);
                (coords.start..coords.end - 1, config.rprime[k])
            } else {
                (coords.clone(), b.r)
            };
            let g: Vec<f64> = free.clone().map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            for (i, gi) in free.zip(&g) {
                x[SphereProductConfig::a_index(i)] = radius * gi / norm;
            }
        }
        for j in config.k2..config.flat_count() {
            x[SphereProductConfig::b_index(j)] = StandardNormal.sample(&mut rng);
        }
        points.push(x);
    }
    Ok(ModelSubmanifold { config, seed, points })
}

impl ModelSubmanifold {
    pub fn point(&self, index: usize) -> Result<&DVector<f64>, GeomodelError> {
        self.points.get(index).ok_or(GeomodelError::PointIndex { index, count: self.points.len() })
    }

    fn block_vector(&self, x: &DVector<f64>, k: usize) -> DVector<f64> {
        let mut out = DVector::zeros(self.config.n);
        for i in self.config.block_coords(k) {
            let a = SphereProductConfig::a_index(i);
            out[a] = x[a];
        }
        out
    }

    /// Max absolute violation of the defining equations.
    pub fn constraint_residual(&self, index: usize) -> Result<f64, GeomodelError> {
        let x = self.point(index)?;
        let c = &self.config;
        let mut res: f64 = 0.0;
        for (k, b) in c.blocks.iter().enumerate() {
            let s: f64 = c.block_coords(k).map(|i| x[SphereProductConfig::a_index(i)].powi(2)).sum();
            res = res.max((s - b.r * b.r).abs());
        }
        for j in 0..c.k1 {
            res = res.max((x[c.pole_index(j)] - c.height(j)).abs());
        }
        for j in 0..c.k2 {
            res = res.max(x[SphereProductConfig::b_index(j)].abs());
        }
        Ok(res)
    }

    /// Gradients of the defining functions as columns: sphere constraints,
    /// then cut constraints, then frozen flat coordinates.
    pub fn constraint_gradients(&self, index: usize) -> Result<DMatrix<f64>, GeomodelError> {
        let x = self.point(index)?;
        let c = &self.config;
        let mut g = DMatrix::zeros(c.n, c.constraint_count());
        for k in 0..c.blocks.len() {
            g.set_column(k, &(self.block_vector(x, k) * 2.0));
        }
        for j in 0..c.k1 {
            g[(c.pole_index(j), c.blocks.len() + j)] = 1.0;
        }
        for j in 0..c.k2 {
            g[(SphereProductConfig::b_index(j), c.blocks.len() + c.k1 + j)] = 1.0;
        }
        Ok(g)
    }

    /// Orthonormal basis of the normal space of `M` in `R^N`.
    pub fn ambient_normal_basis(&self, index: usize) -> Result<DMatrix<f64>, GeomodelError> {
        Ok(self.constraint_gradients(index)?.qr().q())
    }

    pub fn normal_projector(&self, index: usize) -> Result<DMatrix<f64>, GeomodelError> {
        let q = self.ambient_normal_basis(index)?;
        Ok(&q * q.transpose())
    }

    pub fn tangent_projector(&self, index: usize) -> Result<DMatrix<f64>, GeomodelError> {
        let n = self.config.n;
        Ok(DMatrix::identity(n, n) - self.normal_projector(index)?)
    }

    /// Unit normal of `M` inside block `j` of `M̃`, pointing toward the pole
    /// of the cut.
    pub fn block_normal(&self, index: usize, j: usize) -> Result<DVector<f64>, GeomodelError> {
        let x = self.point(index)?;
        let c = &self.config;
        let (r, rp, h) = (c.blocks[j].r, c.rprime[j], c.height(j));
        let mut n = self.block_vector(x, j) * (-h);
        n[c.pole_index(j)] += r * r;
        Ok(n / (rp * r))
    }

    /// Orthonormal basis of the normal space of `M` in `M̃`: block normals
    /// then frozen flat directions.
    pub fn normal_frame(&self, index: usize) -> Result<DMatrix<f64>, GeomodelError> {
        let c = &self.config;
        let mut f = DMatrix::zeros(c.n, c.normal_dim());
        for j in 0..c.k1 {
            f.set_column(j, &self.block_normal(index, j)?);
        }
        for j in 0..c.k2 {
            f[(SphereProductConfig::b_index(j), c.k1 + j)] = 1.0;
        }
        Ok(f)
    }

    /// Coordinates of `xi` in [`normal_frame`](Self::normal_frame), rejecting
    /// vectors that are not normal to `M` inside `M̃`.
    pub fn normal_coefficients(&self, index: usize, xi: &DVector<f64>, tol: &Tolerances) -> Result<DVector<f64>, GeomodelError> {
        if xi.len() != self.config.n {
            return Err(GeomodelError::Length { got: xi.len(), expected: self.config.n });
        }
        let f = self.normal_frame(index)?;
        let coeffs = f.transpose() * xi;
        let residual = (xi - &f * &coeffs).norm();
        if residual > tol.normal_residual * xi.norm().max(1.0) {
            return Err(GeomodelError::NotNormal { residual });
        }
        Ok(coeffs)
    }
}

/// A parallel normal field, stored through its invariants: the signed
/// components along the block normals and the frozen flat components. Both
/// are constant along `M` because the normal connection is flat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelNormalField {
    pub block: Vec<f64>,
    pub flat: Vec<f64>,
}

impl ParallelNormalField {
    pub fn new(config: &SphereProductConfig, block: Vec<f64>, flat: Vec<f64>) -> Result<Self, GeomodelError> {
        let field = Self { block, flat };
        field.check(config)?;
        Ok(field)
    }

    pub fn check(&self, config: &SphereProductConfig) -> Result<(), GeomodelError> {
        if self.block.len() != config.k1 || self.flat.len() != config.k2 {
            return Err(GeomodelError::FieldShape {
                got: format!("({}, {})", self.block.len(), self.flat.len()),
                expected: format!("({}, {})", config.k1, config.k2),
            });
        }
        Ok(())
    }

    /// Random unit field.
    pub fn random(config: &SphereProductConfig, rng: &mut impl rand::Rng) -> Self {
        let mut v: Vec<f64> = (0..config.normal_dim()).map(|_| StandardNormal.sample(&mut *rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        v.iter_mut().for_each(|x| *x /= norm);
        let flat = v.split_off(config.k1);
        Self { block: v, flat }
    }

    pub fn at(&self, model: &ModelSubmanifold, index: usize) -> Result<DVector<f64>, GeomodelError> {
        self.check(&model.config)?;
        let coeffs: Vec<f64> = self.block.iter().chain(&self.flat).copied().collect();
        Ok(model.normal_frame(index)? * DVector::from_vec(coeffs))
    }
}

/// Eigenvalue of a block-diagonal operator on one summand of the tangent
/// space; `block == None` stands for `E_0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockEigen {
    pub block: Option<usize>,
    pub value: f64,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockOperator {
    pub blocks: Vec<BlockEigen>,
}

impl BlockOperator {
    pub fn spectrum(&self) -> SpectralData {
        SpectralData::from_signed(self.blocks.iter().map(|b| (b.value, b.dim as u64)))
    }
}

fn block_operator(config: &SphereProductConfig, per_block: impl Fn(usize) -> f64) -> BlockOperator {
    let mut blocks: Vec<BlockEigen> = config
        .e_dims()
        .into_iter()
        .enumerate()
        .map(|(j, dim)| BlockEigen { block: Some(j), value: per_block(j), dim })
        .collect();
    blocks.push(BlockEigen { block: None, value: 0.0, dim: config.e0_dim() });
    blocks.retain(|b| b.dim > 0);
    BlockOperator { blocks }
}

fn jacobi_blocks(cfg: &SphereProductConfig, c: &[f64]) -> BlockOperator {
    block_operator(cfg, |j| c[j] * c[j] / cfg.blocks[j].r.powi(2))
}

fn shape_blocks(cfg: &SphereProductConfig, c: &[f64]) -> BlockOperator {
    block_operator(cfg, |j| cfg.kappa(j) * c[j])
}

fn grid_from_coefficients(cfg: &SphereProductConfig, label: String, c: &[f64]) -> Result<EigenGrid, GeomodelError> {
    let r = jacobi_blocks(cfg, c);
    let a = shape_blocks(cfg, c);
    let pairs = r
        .blocks
        .iter()
        .zip(&a.blocks)
        .map(|(r, a)| GridPair { lambda_r: r.value, lambda_a: a.value, mult: r.dim as u64 })
        .collect();
    Ok(EigenGrid::new(Some(label), pairs)?)
}

/// `R̃(·, ξ)ξ` on `T_xM`: `c_j² / r_j²` on `E_j`, zero on `E_0`.
pub fn normal_jacobi_operator(model: &ModelSubmanifold, index: usize, xi: &DVector<f64>) -> Result<BlockOperator, GeomodelError> {
    let c = model.normal_coefficients(index, xi, &Tolerances::default())?;
    Ok(jacobi_blocks(&model.config, c.as_slice()))
}

/// `A_ξ` on `T_xM`: `κ_j c_j` on `E_j`, zero on `E_0`, where `c_j` is the
/// signed component of `ξ` along the pole-pointing block normal.
pub fn shape_operator(model: &ModelSubmanifold, index: usize, xi: &DVector<f64>) -> Result<BlockOperator, GeomodelError> {
    let c = model.normal_coefficients(index, xi, &Tolerances::default())?;
    Ok(shape_blocks(&model.config, c.as_slice()))
}

/// Joint `(λR, λA, dim)` data from the block formulas.
pub fn eigen_grid_of(model: &ModelSubmanifold, index: usize, xi: &DVector<f64>) -> Result<EigenGrid, GeomodelError> {
    let c = model.normal_coefficients(index, xi, &Tolerances::default())?;
    grid_from_coefficients(&model.config, format!("x{index}"), c.as_slice())
}

/// Closed-form grid of a parallel field at a sample point, read off the
/// field invariants; identical at every point.
pub fn field_grid(model: &ModelSubmanifold, index: usize, field: &ParallelNormalField) -> Result<EigenGrid, GeomodelError> {
    model.point(index)?;
    field.check(&model.config)?;
    grid_from_coefficients(&model.config, format!("x{index}"), &field.block)
}

/// Round-sphere curvature applied blockwise,
/// `Σ_k (1/r_k²)(|v_k|² w_k − ⟨w_k, v_k⟩ v_k)`; flat coordinates contribute
/// nothing.
pub fn ambient_curvature(config: &SphereProductConfig, w: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(config.n);
    for (k, b) in config.blocks.iter().enumerate() {
        let idx: Vec<usize> = config.block_coords(k).map(SphereProductConfig::a_index).collect();
        let vv: f64 = idx.iter().map(|&i| v[i] * v[i]).sum();
        let wv: f64 = idx.iter().map(|&i| w[i] * v[i]).sum();
        let s = 1.0 / (b.r * b.r);
        for &i in &idx {
            out[i] = s * (vv * w[i] - wv * v[i]);
        }
    }
    out
}

/// Ambient `N × N` matrices of `A_ξ` and `R̃(ξ)` compressed to `T_xM`
/// (`P X P`), with the orthonormal ambient normal basis `Q` (`P = I − QQᵀ`).
#[derive(Debug, Clone)]
pub struct DenseOperators {
    pub shape: DMatrix<f64>,
    pub jacobi: DMatrix<f64>,
    pub normal_basis: DMatrix<f64>,
}

fn compress(x: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    let xq = x * q;
    let qtxq = q.transpose() * &xq;
    let qtx = xq.transpose(); // x is symmetric
    let mut out = x - q * &qtx - &xq * q.transpose() + q * qtxq * q.transpose();
    // Symmetrize to suppress roundoff asymmetry before eigendecomposition.
    let t = out.transpose();
    out += t;
    out * 0.5
}

pub fn dense_operators(model: &ModelSubmanifold, index: usize, xi: &DVector<f64>) -> Result<DenseOperators, GeomodelError> {
    model.normal_coefficients(index, xi, &Tolerances::default())?;
    let cfg = &model.config;
    let n = cfg.n;
    let grads = model.constraint_gradients(index)?;
    let q = grads.clone().qr().q();

    // Second fundamental form in R^N: for tangent v, w,
    // <II(v, w), ξ> = −Σ_c γ_c Hess F_c(v, w) with Gram·γ = (<∇F_c, ξ>)_c.
    let gram = grads.transpose() * &grads;
    let rhs = grads.transpose() * xi;
    let gamma = gram
        .cholesky()
        .ok_or_else(|| GeomodelError::Dense("constraint gradients are rank deficient".into()))?
        .solve(&rhs);
    let mut hess = DMatrix::zeros(n, n);
    for k in 0..cfg.blocks.len() {
        for i in cfg.block_coords(k) {
            let a = SphereProductConfig::a_index(i);
            hess[(a, a)] = -2.0 * gamma[k];
        }
    }
    let shape = compress(&hess, &q);

    let mut curv = DMatrix::zeros(n, n);
    let mut e = DVector::zeros(n);
    for i in 0..n {
        e[i] = 1.0;
        curv.set_column(i, &ambient_curvature(cfg, &e, xi));
        e[i] = 0.0;
    }
    let curv = (&curv + curv.transpose()) * 0.5;
    let jacobi = compress(&curv, &q);
    Ok(DenseOperators { shape, jacobi, normal_basis: q })
}

/// Frobenius norm of `AB − BA`.
pub fn commutator_norm(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a * b - b * a).norm()
}

/// Joint eigendata from dense matrices plus the worst eigen-residual.
#[derive(Debug, Clone)]
pub struct DenseGrid {
    pub grid: EigenGrid,
    pub joint_residual: f64,
}

fn to_faer(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Simultaneous diagonalization of the dense `A_ξ` and `R̃(ξ)`: eigenvectors of
/// `A + cR` (generic `c`) with normal directions shifted out of range, then
/// Rayleigh quotients of each operator. Eigenvalue pairs within
/// `eigen_cluster` are merged.
pub fn dense_eigen_grid(ops: &DenseOperators, label: Option<String>, tol: &Tolerances) -> Result<DenseGrid, GeomodelError> {
    const MIX: f64 = 0.739_085_133_215_160_6;
    let n = ops.shape.nrows();
    let q = &ops.normal_basis;
    let tangent = n - q.ncols();
    let shift = 2.0 * (ops.shape.norm() + MIX * ops.jacobi.norm()) + 1.0;
    let m = &ops.shape + &ops.jacobi * MIX + q * q.transpose() * shift;
    let evd = to_faer(&m)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| GeomodelError::Dense(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[i].total_cmp(&s[j]));
    let u = evd.U();
    let v = faer::Mat::from_fn(n, tangent, |i, j| u[(i, order[j])]);
    let av = to_faer(&ops.shape) * &v;
    let rv = to_faer(&ops.jacobi) * &v;

    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(tangent);
    let mut residual: f64 = 0.0;
    for j in 0..tangent {
        let (mut la, mut lr) = (0.0, 0.0);
        for i in 0..n {
            la += v[(i, j)] * av[(i, j)];
            lr += v[(i, j)] * rv[(i, j)];
        }
        let (mut ra, mut rr) = (0.0, 0.0);
        for i in 0..n {
            ra += (av[(i, j)] - la * v[(i, j)]).powi(2);
            rr += (rv[(i, j)] - lr * v[(i, j)]).powi(2);
        }
        residual = residual.max(ra.sqrt()).max(rr.sqrt());
        pairs.push((lr, la));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    // Cluster by running mean.
    let mut clusters: Vec<(f64, f64, u64)> = Vec::new();
    for (lr, la) in pairs {
        match clusters.last_mut() {
            Some((cr, ca, m))
                if (lr - *cr / *m as f64).abs() <= tol.eigen_cluster
                    && (la - *ca / *m as f64).abs() <= tol.eigen_cluster =>
            {
                *cr += lr;
                *ca += la;
                *m += 1;
            }
            _ => clusters.push((lr, la, 1)),
        }
    }
    let grid = EigenGrid::new(
        label,
        clusters
            .into_iter()
            .map(|(cr, ca, m)| GridPair { lambda_r: cr / m as f64, lambda_a: ca / m as f64, mult: m })
            .collect(),
    )?;
    Ok(DenseGrid { grid, joint_residual: residual })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutatorReport {
    pub trials: usize,
    pub max_norm: f64,
    pub passed: bool,
    pub norms: Vec<f64>,
}

/// `‖[A_ξ, R̃(ξ)]‖` from dense matrices on random (point, unit normal) pairs.
pub fn curvature_adapted_check(model: &ModelSubmanifold, n_trials: usize, seed: u64, tol: &Tolerances) -> Result<CommutatorReport, GeomodelError> {
    if model.points.is_empty() {
        return Err(GeomodelError::PointIndex { index: 0, count: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut norms = Vec::with_capacity(n_trials);
    for t in 0..n_trials {
        let index = t % model.points.len();
        let field = ParallelNormalField::random(&model.config, &mut rng);
        let ops = dense_operators(model, index, &field.at(model, index)?)?;
        norms.push(commutator_norm(&ops.shape, &ops.jacobi));
    }
    let max_norm = norms.iter().copied().fold(0.0, f64::max);
    Ok(CommutatorReport { trials: n_trials, max_norm, passed: max_norm < tol.commutator, norms })
}

/// `Σ_j κ_j c_j dim E_j` against the variant that uses the factor
/// `m_j − 1` and the unsigned block norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeTraceComparison {
    pub block_dims: Vec<usize>,
    pub variant_dims: Vec<usize>,
    pub computed: f64,
    pub variant: f64,
    pub mismatch: bool,
}

pub fn shape_trace_comparison(config: &SphereProductConfig, field: &ParallelNormalField) -> ShapeTraceComparison {
    let dims = config.e_dims();
    let variant_dims: Vec<usize> = config.blocks[..config.k1].iter().map(|b| b.m - 1).collect();
    let computed: f64 = (0..config.k1).map(|j| config.kappa(j) * field.block[j] * dims[j] as f64).sum();
    let variant: f64 = (0..config.k1)
        .map(|j| config.kappa(j) * field.block[j].abs() * variant_dims[j] as f64)
        .sum();
    ShapeTraceComparison {
        mismatch: dims != variant_dims || (computed - variant).abs() > 1e-12,
        block_dims: dims,
        variant_dims,
        computed,
        variant,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstancyRow {
    pub r: f64,
    pub closed_min: f64,
    pub closed_max: f64,
    pub dense: Vec<f64>,
    pub dense_max_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFocalSet {
    pub point: usize,
    pub focal: FocalRadiusSet,
}

/// Full verification of one model and one parallel normal field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example41Report {
    pub config: SphereProductConfig,
    pub points: usize,
    pub seed: u64,
    pub field: ParallelNormalField,
    pub max_constraint_residual: f64,
    pub commutator: CommutatorReport,
    pub constancy: Vec<ConstancyRow>,
    pub dense_joint_residual: Option<f64>,
    pub shape_trace: ShapeTraceComparison,
    pub weakly_isoparametric: bool,
    pub isoparametric: bool,
    pub equifocal: bool,
    pub focal_sets: Vec<PointFocalSet>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example41Options {
    pub radii: Vec<f64>,
    pub window: Window,
    pub dense_points: usize,
    pub commutator_trials: usize,
}

impl Default for Example41Options {
    fn default() -> Self {
        Self {
            radii: vec![0.05, 0.1, 0.2],
            window: Window { min: 0.01, max: 10.0, sign: Default::default() },
            dense_points: 4,
            commutator_trials: 100,
        }
    }
}

pub fn example41_report(
    model: &ModelSubmanifold,
    field: &ParallelNormalField,
    opts: &Example41Options,
    tol: &Tolerances,
) -> Result<Example41Report, GeomodelError> {
    let mut max_res: f64 = 0.0;
    let mut grids = Vec::with_capacity(model.points.len());
    for i in 0..model.points.len() {
        max_res = max_res.max(model.constraint_residual(i)?);
        grids.push(field_grid(model, i, field)?);
    }
    let commutator = curvature_adapted_check(model, opts.commutator_trials, model.seed ^ 0x5eed, tol)?;

    let dense_n = opts.dense_points.min(model.points.len());
    let mut dense_grids = Vec::with_capacity(dense_n);
    let mut joint: Option<f64> = None;
    for i in 0..dense_n {
        let ops = dense_operators(model, i, &field.at(model, i)?)?;
        let dg = dense_eigen_grid(&ops, Some(format!("x{i}")), tol)?;
        joint = Some(joint.unwrap_or(0.0).max(dg.joint_residual));
        dense_grids.push(dg.grid);
    }

    let mut constancy = Vec::with_capacity(opts.radii.len());
    let mut passed = true;
    for &r in &opts.radii {
        let closed: Vec<f64> = grids
            .iter()
            .map(|g| focal::parallel_reg_mean_curvature_with(g, r, tol))
            .collect::<Result<_, _>>()?;
        let lo = closed.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = closed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let dense: Vec<f64> = dense_grids
            .iter()
            .map(|g| focal::parallel_reg_mean_curvature_with(g, r, tol))
            .collect::<Result<_, _>>()?;
        let dev = (!dense.is_empty())
            .then(|| dense.iter().map(|d| (d - closed[0]).abs()).fold(0.0, f64::max));
        passed &= hi == lo && dev.is_none_or(|d| d < tol.dense_trace);
        constancy.push(ConstancyRow { r, closed_min: lo, closed_max: hi, dense, dense_max_deviation: dev });
    }

    let weakly = focal::weakly_isoparametric_check(&grids, tol)?.passed;
    let iso = focal::isoparametric_check(&grids, &opts.radii, tol)?.passed;
    let equi = focal::equifocal_check(&grids, &opts.window, tol)?.passed;
    passed &= weakly && iso && equi && commutator.passed && max_res < 1e-12;
    passed &= joint.is_none_or(|j| j < tol.dense_trace);

    let focal_sets = grids
        .iter()
        .enumerate()
        .map(|(point, g)| PointFocalSet { point, focal: focal::focal_set_with(g, &opts.window, tol) })
        .collect();

    Ok(Example41Report {
        config: model.config.clone(),
        points: model.points.len(),
        seed: model.seed,
        field: field.clone(),
        max_constraint_residual: max_res,
        commutator,
        constancy,
        dense_joint_residual: joint,
        shape_trace: shape_trace_comparison(&model.config, field),
        weakly_isoparametric: weakly,
        isoparametric: iso,
        equifocal: equi,
        focal_sets,
        passed,
    })
}
