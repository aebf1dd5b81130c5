//! Matrix Lie groups and algebras: structure constants, restricted roots of
//! symmetric pairs, parallel transport of algebra-valued paths, holonomy of
//! connections along a curve, and the section check for two-sided actions of
//! symmetric subgroups.

mod algebra;
mod hyperpolar;
mod roots;
mod transport;

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use algebra::{load_algebra, AlgebraResiduals, LieAlgebraBasis};
pub use hyperpolar::{section_orthogonality_check, HyperpolarReport};
pub use roots::{
    restricted_root_decomposition, verify_bracket_pattern, BracketPattern, BracketReport, BracketRow,
    RestrictedRootData, RootSpace, RootSummary,
};
pub use transport::{
    gauge_act, gauge_connection, holonomy_element, pullback_connection, transport, transport_fn,
    transport_steps, transport_with, AlgebraPath, ConnectionPath, GaugePath, Interpolation,
};

pub type CMat = DMatrix<Complex<f64>>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LieError {
    #[error("unsupported algebra `{0}`")]
    UnsupportedAlgebra(String),
    #[error("unsupported group `{0}`")]
    UnsupportedGroup(String),
    #[error("unknown involution `{name}` for {group}")]
    UnknownInvolution { group: String, name: String },
    #[error("structure check failed: {0}")]
    Structure(String),
    #[error("matrix has shape {got:?}, expected {expected}x{expected}")]
    Shape { expected: usize, got: (usize, usize) },
    #[error("involution check failed: {0}")]
    Involution(String),
    #[error("maximal abelian subspace check failed: {0}")]
    Abelian(String),
    #[error("sample {index} is not in the algebra (residual {residual:.3e})")]
    NotInAlgebra { index: usize, residual: f64 },
    #[error("sample {index} is not in the group (residual {residual:.3e})")]
    NotInGroup { index: usize, residual: f64 },
    #[error("invalid path: {0}")]
    Path(String),
    #[error("paths do not share a sample grid ({left} vs {right} samples)")]
    GridMismatch { left: usize, right: usize },
    #[error("need at least {min} steps, got {got}")]
    Steps { min: usize, got: usize },
}

/// Compact matrix groups with a supported algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupName {
    SU2,
    SO3,
    SU3,
}

impl GroupName {
    pub fn algebra_name(self) -> &'static str {
        match self {
            GroupName::SU2 => "su2",
            GroupName::SO3 => "so3",
            GroupName::SU3 => "su3",
        }
    }

    pub fn matrix_size(self) -> usize {
        match self {
            GroupName::SU2 => 2,
            GroupName::SO3 | GroupName::SU3 => 3,
        }
    }

    pub fn algebra(self) -> LieAlgebraBasis {
        load_algebra(self.algebra_name()).expect("built-in algebra")
    }

    /// `max(‖gᴴg − I‖, |det g − 1|)`.
    pub fn membership_residual(self, g: &CMat) -> f64 {
        let n = self.matrix_size();
        if g.nrows() != n || g.ncols() != n {
            return f64::INFINITY;
        }
        let unitary = (g.adjoint() * g - CMat::identity(n, n)).norm();
        let det = (g.determinant() - Complex::new(1.0, 0.0)).norm();
        let real = match self {
            GroupName::SO3 => g.iter().map(|z| z.im.abs()).fold(0.0, f64::max),
            _ => 0.0,
        };
        unitary.max(det).max(real)
    }
}

impl std::str::FromStr for GroupName {
    type Err = LieError;
    fn from_str(s: &str) -> Result<Self, LieError> {
        match s.trim().to_ascii_uppercase().as_str() {
            "SU2" | "SU(2)" => Ok(GroupName::SU2),
            "SO3" | "SO(3)" => Ok(GroupName::SO3),
            "SU3" | "SU(3)" => Ok(GroupName::SU3),
            _ => Err(LieError::UnsupportedGroup(s.to_owned())),
        }
    }
}

impl std::fmt::Display for GroupName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Involutive automorphism of a matrix algebra.
#[derive(Debug, Clone, PartialEq)]
pub enum Involution {
    /// Entrywise complex conjugation.
    Conjugation,
    /// `Ad(s)` for a matrix `s` with `s² ∝ I`.
    Adjoint(CMat),
}

impl Involution {
    /// Named involutions:
    /// `conj` (complex conjugation), `diag` / `u1diag`
    /// (`Ad(diag(1, ..., 1, −1))`), and the fixed-algebra aliases `so2`
    /// (conjugation on su2, `diag` on so3) and `so3` (conjugation on su3).
    pub fn parse(algebra: &str, name: &str) -> Result<Self, LieError> {
        let alg = algebra.to_ascii_lowercase();
        let n = match alg.as_str() {
            "su2" => 2,
            "so3" | "su3" => 3,
            other => other
                .trim_start_matches("so_")
                .trim_start_matches("so")
                .parse()
                .map_err(|_| LieError::UnsupportedAlgebra(algebra.to_owned()))?,
        };
        let diag = || {
            let mut d = vec![Complex::new(1.0, 0.0); n];
            d[n - 1] = Complex::new(-1.0, 0.0);
            Involution::Adjoint(CMat::from_diagonal(&DVector::from_vec(d)))
        };
        match (alg.as_str(), name.trim().to_ascii_lowercase().as_str()) {
            (_, "conj") => Ok(Involution::Conjugation),
            (_, "diag" | "u1diag") => Ok(diag()),
            ("su2", "so2") | ("su3", "so3") => Ok(Involution::Conjugation),
            ("so3", "so2") => Ok(diag()),
            _ => Err(LieError::UnknownInvolution { group: algebra.to_owned(), name: name.to_owned() }),
        }
    }

    pub fn apply(&self, x: &CMat) -> CMat {
        match self {
            Involution::Conjugation => x.map(|z| z.conj()),
            Involution::Adjoint(s) => {
                let inv = s.clone().try_inverse().expect("involution matrix is invertible");
                s * x * inv
            }
        }
    }

    /// Matrix of the involution on basis coordinates, after checking that it
    /// preserves the algebra, squares to the identity and respects brackets.
    pub fn matrix(&self, alg: &LieAlgebraBasis) -> Result<DMatrix<f64>, LieError> {
        let d = alg.dim();
        let mut m = DMatrix::zeros(d, d);
        for (j, b) in alg.basis().iter().enumerate() {
            let img = self.apply(b);
            let res = alg.membership_residual(&img)?;
            if res > 1e-10 {
                return Err(LieError::Involution(format!("image of basis vector {j} leaves the algebra ({res:.3e})")));
            }
            m.set_column(j, &alg.coords(&img)?);
        }
        let square = (&m * &m - DMatrix::identity(d, d)).norm();
        if square > 1e-10 {
            return Err(LieError::Involution(format!("θ² ≠ id (residual {square:.3e})")));
        }
        let mut hom: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let ei = DVector::from_fn(d, |k, _| if k == i { 1.0 } else { 0.0 });
                let ej = DVector::from_fn(d, |k, _| if k == j { 1.0 } else { 0.0 });
                let lhs = &m * alg.bracket_coords(&ei, &ej);
                let rhs = alg.bracket_coords(&(&m * &ei), &(&m * &ej));
                hom = hom.max((lhs - rhs).norm());
            }
        }
        if hom > 1e-10 {
            return Err(LieError::Involution(format!("θ is not a homomorphism (residual {hom:.3e})")));
        }
        Ok(m)
    }
}

/// Matrix exponential.
pub fn expm(x: &CMat) -> CMat {
    x.clone().exp()
}
