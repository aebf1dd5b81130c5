//! Green operators of symmetric matrices through their eigenbasis, a 1D
//! discrete model `id − a⁻²·D²` of the box operator, and the weighted inner
//! product `⟨u, Lˢv⟩`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Eigenvalues at or below this magnitude make an operator singular.
pub const SINGULAR_EIGENVALUE: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GreenError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is empty")]
    Empty,
    #[error("matrix is not symmetric (residual {residual:.3e})")]
    Asymmetric { residual: f64 },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("vector has length {got}, operator has dimension {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("operator is singular: eigenvalue {eigenvalue:.3e} at index {index} (null eigenvector {vector:?})")]
    Singular { index: usize, eigenvalue: f64, vector: Vec<f64> },
    #[error("fractional power s = {s} of negative eigenvalue {eigenvalue:.3e}")]
    NegativeFractional { eigenvalue: f64, s: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// How [`green_apply_with`] treats (near-)null eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GreenMode {
    /// Fail on a singular operator.
    #[default]
    Strict,
    /// Solve on the orthogonal complement of the null space, dropping the
    /// null component of the right-hand side.
    Project,
}

/// Symmetric matrix with its eigendecomposition, fixed at construction.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    matrix: DMatrix<f64>,
    eigen: SymmetricEigen<f64, nalgebra::Dyn>,
}

impl OperatorMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self, GreenError> {
        let (rows, cols) = matrix.shape();
        if rows != cols {
            return Err(GreenError::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(GreenError::Empty);
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(GreenError::NonFinite);
        }
        let residual = (&matrix - matrix.transpose()).amax();
        if residual > SYMMETRY_TOL * matrix.amax().max(1.0) {
            return Err(GreenError::Asymmetric { residual });
        }
        let sym = (&matrix + matrix.transpose()) * 0.5;
        let eigen = sym.clone().symmetric_eigen();
        Ok(Self { matrix: sym, eigen })
    }

    /// Row-major nested rows, as in the JSON operator files.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, GreenError> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(GreenError::NotSquare { rows: n, cols: bad.len() });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigen.eigenvalues
    }

    /// Orthonormal eigenvectors as columns, matching [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigen.eigenvectors
    }

    /// Eigenvalues sorted ascending.
    pub fn sorted_eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.eigen.eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn apply(&self, v: &DVector<f64>) -> Result<DVector<f64>, GreenError> {
        self.check_len(v)?;
        Ok(&self.matrix * v)
    }

    fn check_len(&self, v: &DVector<f64>) -> Result<(), GreenError> {
        if v.len() != self.dim() {
            return Err(GreenError::Dimension { expected: self.dim(), got: v.len() });
        }
        Ok(())
    }

    fn null_indices(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.eigen.eigenvalues[i].abs() <= SINGULAR_EIGENVALUE).collect()
    }

    fn singular_error(&self, i: usize) -> GreenError {
        GreenError::Singular {
            index: i,
            eigenvalue: self.eigen.eigenvalues[i],
            vector: self.eigen.eigenvectors.column(i).iter().copied().collect(),
        }
    }
}

/// `σ = Σ λᵢ⁻¹⟨ψ, ηᵢ⟩ηᵢ`, the solution of `Lσ = ψ`.
pub fn green_apply(op: &OperatorMatrix, psi: &DVector<f64>) -> Result<DVector<f64>, GreenError> {
    green_apply_with(op, psi, GreenMode::Strict)
}

pub fn green_apply_with(op: &OperatorMatrix, psi: &DVector<f64>, mode: GreenMode) -> Result<DVector<f64>, GreenError> {
    op.check_len(psi)?;
    let null = op.null_indices();
    if mode == GreenMode::Strict {
        if let Some(&i) = null.first() {
            return Err(op.singular_error(i));
        }
    }
    let vecs = &op.eigen.eigenvectors;
    let mut coeffs = vecs.transpose() * psi;
    for (i, c) in coeffs.iter_mut().enumerate() {
        *c = if null.contains(&i) { 0.0 } else { *c / op.eigen.eigenvalues[i] };
    }
    Ok(vecs * coeffs)
}

/// Kernel `G(x, y) = Σ λᵢ⁻¹ ηᵢ(x) ηᵢ(y)` assembled entry by entry.
pub fn green_kernel(op: &OperatorMatrix) -> Result<DMatrix<f64>, GreenError> {
    if let Some(&i) = op.null_indices().first() {
        return Err(op.singular_error(i));
    }
    let n = op.dim();
    let (vals, vecs) = (&op.eigen.eigenvalues, &op.eigen.eigenvectors);
    Ok(DMatrix::from_fn(n, n, |x, y| (0..n).map(|i| vecs[(x, i)] * vecs[(y, i)] / vals[i]).sum()))
}

/// `σ(x) = Σ_y G(x, y)ψ(y)`.
pub fn kernel_apply(kernel: &DMatrix<f64>, psi: &DVector<f64>) -> Result<DVector<f64>, GreenError> {
    if kernel.ncols() != psi.len() {
        return Err(GreenError::Dimension { expected: kernel.ncols(), got: psi.len() });
    }
    Ok(DVector::from_fn(kernel.nrows(), |x, _| (0..psi.len()).map(|y| kernel[(x, y)] * psi[y]).sum()))
}

/// `‖Lσ − ψ‖`.
pub fn green_residual(op: &OperatorMatrix, sigma: &DVector<f64>, psi: &DVector<f64>) -> Result<f64, GreenError> {
    Ok((op.apply(sigma)? - psi).norm())
}

/// Matrix of `id − a⁻²·D²` on `samples` points with spacing `h = 1/samples`,
/// where `D²` is the periodic or reflecting (Neumann) second difference.
/// `speed = ∞` gives the identity.
pub fn box_operator_1d(samples: usize, speed: f64, periodic: bool) -> Result<OperatorMatrix, GreenError> {
    if samples < 4 {
        return Err(GreenError::InvalidArgument(format!("need at least 4 samples, got {samples}")));
    }
    if speed.is_nan() || speed <= 0.0 {
        return Err(GreenError::InvalidArgument(format!("speed must be positive, got {speed}")));
    }
    let n = samples;
    let c = (n as f64 / speed).powi(2);
    let mut m = DMatrix::identity(n, n);
    for i in 0..n {
        let mut neighbours = 0.0;
        for j in [i.wrapping_sub(1), i + 1] {
            let j = if periodic { (j.wrapping_add(n)) % n } else { j };
            if j < n {
                m[(i, j)] -= c;
                neighbours += 1.0;
            }
        }
        m[(i, i)] += c * neighbours;
    }
    OperatorMatrix::new(m)
}

/// Closed-form spectrum of the periodic box operator, `1 + (2/(a·h))²·sin²(πk/S)`.
pub fn periodic_box_eigenvalues(samples: usize, speed: f64) -> Vec<f64> {
    let c = (2.0 * samples as f64 / speed).powi(2);
    (0..samples)
        .map(|k| 1.0 + c * (std::f64::consts::PI * k as f64 / samples as f64).sin().powi(2))
        .collect()
}

/// `⟨u, Lˢv⟩` through the eigenbasis; `s = 0` is the plain inner product.
pub fn ls2_inner(u: &DVector<f64>, v: &DVector<f64>, op: &OperatorMatrix, s: f64) -> Result<f64, GreenError> {
    op.check_len(u)?;
    op.check_len(v)?;
    if !(s.is_finite() && s >= 0.0) {
        return Err(GreenError::InvalidArgument(format!("s must be a nonnegative number, got {s}")));
    }
    if s == 0.0 {
        return Ok(u.dot(v));
    }
    let integral = s.fract() == 0.0;
    let vecs = &op.eigen.eigenvectors;
    let (cu, cv) = (vecs.transpose() * u, vecs.transpose() * v);
    let mut total = 0.0;
    for (i, &lam) in op.eigen.eigenvalues.iter().enumerate() {
        let w = if integral {
            lam.powi(s as i32)
        } else if lam < 0.0 {
            return Err(GreenError::NegativeFractional { eigenvalue: lam, s });
        } else {
            lam.powf(s)
        };
        total += w * cu[i] * cv[i];
    }
    Ok(total)
}
