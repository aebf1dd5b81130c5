//! Compact matrix Lie algebras with structure constants and the negative
//! Killing form.

use nalgebra::{Complex, DMatrix, DVector};

use super::{CMat, LieError};

const CHECK: f64 = 1e-12;

/// Residuals of the algebraic identities verified at construction.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AlgebraResiduals {
    pub bracket: f64,
    pub antisymmetry: f64,
    pub jacobi: f64,
    pub invariance: f64,
}

#[derive(Debug, Clone)]
pub struct LieAlgebraBasis {
    name: String,
    size: usize,
    basis: Vec<CMat>,
    gram: DMatrix<f64>,
    /// `ad(e_i)` with `(ad_i)[k, j] = c_ij^k`.
    ad: Vec<DMatrix<f64>>,
    metric: DMatrix<f64>,
    residuals: AlgebraResiduals,
}

fn c(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

fn su2_basis() -> Vec<CMat> {
    let h = 0.5;
    vec![
        CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, h), c(0.0, h), c(0.0, 0.0)]),
        CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(h, 0.0), c(-h, 0.0), c(0.0, 0.0)]),
        CMat::from_row_slice(2, 2, &[c(0.0, h), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -h)]),
    ]
}

fn so3_basis() -> Vec<CMat> {
    // (L_i)_{jk} = −ε_{ijk}
    let eps = |i: usize, j: usize, k: usize| -> f64 {
        match (i, j, k) {
            (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
            (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
            _ => 0.0,
        }
    };
    (0..3)
        .map(|i| CMat::from_fn(3, 3, |j, k| c(-eps(i, j, k), 0.0)))
        .collect()
}

fn su3_basis() -> Vec<CMat> {
    let z = c(0.0, 0.0);
    let sym = |a: usize, b: usize| {
        let mut m = CMat::from_element(3, 3, z);
        m[(a, b)] = c(1.0, 0.0);
        m[(b, a)] = c(1.0, 0.0);
        m
    };
    let (l1, l4, l6) = (sym(0, 1), sym(0, 2), sym(1, 2));
    let anti = |a: usize, b: usize| {
        let mut m = CMat::from_element(3, 3, z);
        m[(a, b)] = c(0.0, -1.0);
        m[(b, a)] = c(0.0, 1.0);
        m
    };
    let (l2, l5, l7) = (anti(0, 1), anti(0, 2), anti(1, 2));
    let l3 = CMat::from_diagonal(&DVector::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0), z]));
    let s = 1.0 / 3f64.sqrt();
    let l8 = CMat::from_diagonal(&DVector::from_vec(vec![c(s, 0.0), c(s, 0.0), c(-2.0 * s, 0.0)]));
    [l1, l2, l3, l4, l5, l6, l7, l8]
        .into_iter().map(|l| l * c(0.0, 0.5)).collect()
}

fn so_n_basis(n: usize) -> Vec<CMat> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let mut m = CMat::from_element(n, n, c(0.0, 0.0));
            m[(i, j)] = c(1.0, 0.0);
            m[(j, i)] = c(-1.0, 0.0);
            out.push(m);
        }
    }
    out
}

/// Real Frobenius inner product `Re tr(xᴴ y)`.
pub(crate) fn frob(x: &CMat, y: &CMat) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| (a.conj() * b).re).sum()
}

pub(crate) fn commutator(x: &CMat, y: &CMat) -> CMat {
    x * y - y * x
}

/// Builds one of `su2`, `so3`, `su3` or `so<n>` (`n ≥ 3`, also spelled `so_n`).
pub fn load_algebra(name: &str) -> Result<LieAlgebraBasis, LieError> {
    let key = name.trim().to_ascii_lowercase();
    let basis = match key.as_str() {
        "su2" => su2_basis(),
        "so3" => so3_basis(),
        "su3" => su3_basis(),
        other => {
            let n = other
                .strip_prefix("so_")
                .or_else(|| other.strip_prefix("so"))
                .and_then(|d| d.parse::<usize>().ok())
                .filter(|&n| n >= 3)
                .ok_or_else(|| LieError::UnsupportedAlgebra(name.to_owned()))?;
            so_n_basis(n)
        }
    };
    LieAlgebraBasis::from_basis(key, basis)
}

impl LieAlgebraBasis {
    /// Builds structure constants and the metric from basis matrices and
    /// verifies the algebraic identities.
    pub fn from_basis(name: String, basis: Vec<CMat>) -> Result<Self, LieError> {
        let dim = basis.len();
        let size = basis.first().map_or(0, |b| b.nrows());
        let gram = DMatrix::from_fn(dim, dim, |i, j| frob(&basis[i], &basis[j]));
        let mut alg = Self {
            name,
            size,
            basis,
            gram,
            ad: Vec::new(),
            metric: DMatrix::zeros(dim, dim),
            residuals: AlgebraResiduals { bracket: 0.0, antisymmetry: 0.0, jacobi: 0.0, invariance: 0.0 },
        };
        let mut bracket_res: f64 = 0.0;
        let mut ad = vec![DMatrix::zeros(dim, dim); dim];
        for (i, ad_i) in ad.iter_mut().enumerate() {
            for j in 0..dim {
                let br = commutator(&alg.basis[i], &alg.basis[j]);
                let coords = alg.coords(&br)?;
                bracket_res = bracket_res.max((&br - alg.from_coords(&coords)).norm());
                ad_i.set_column(j, &coords);
            }
        }
        alg.ad = ad;
        let killing = DMatrix::from_fn(dim, dim, |i, j| (&alg.ad[i] * &alg.ad[j]).trace());
        alg.metric = -killing;

        let mut anti: f64 = 0.0;
        let mut jac: f64 = 0.0;
        let mut inv: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                anti = anti.max((alg.ad[i].column(j) + alg.ad[j].column(i)).norm());
                // ad([e_i, e_j]) = [ad e_i, ad e_j] is the Jacobi identity.
                let lhs = alg.ad(&alg.ad[i].column(j).into_owned());
                let rhs = &alg.ad[i] * &alg.ad[j] - &alg.ad[j] * &alg.ad[i];
                jac = jac.max((lhs - rhs).norm());
            }
            let g_ad = &alg.metric * &alg.ad[i];
            inv = inv.max((&g_ad + g_ad.transpose()).norm());
        }
        alg.residuals = AlgebraResiduals { bracket: bracket_res, antisymmetry: anti, jacobi: jac, invariance: inv };
        let scale = alg.metric.norm().max(1.0);
        if bracket_res > CHECK || anti > CHECK || jac > CHECK * scale || inv > CHECK * scale {
            return Err(LieError::Structure(format!("{:?}", alg.residuals)));
        }
        if alg.metric.clone().cholesky().is_none() {
            return Err(LieError::Structure("negative Killing form is not positive definite".into()));
        }
        Ok(alg)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Size of the defining matrices.
    pub fn matrix_size(&self) -> usize {
        self.size
    }

    pub fn basis(&self) -> &[CMat] {
        &self.basis
    }

    /// `c_ij^k`.
    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> f64 {
        self.ad[i][(k, j)]
    }

    /// Negative Killing form in basis coordinates.
    pub fn metric(&self) -> &DMatrix<f64> {
        &self.metric
    }

    pub fn residuals(&self) -> AlgebraResiduals {
        self.residuals
    }

    /// Least-squares coordinates of `x` in the basis.
    pub fn coords(&self, x: &CMat) -> Result<DVector<f64>, LieError> {
        if x.nrows() != self.size || x.ncols() != self.size {
            return Err(LieError::Shape { expected: self.size, got: (x.nrows(), x.ncols()) });
        }
        let rhs = DVector::from_iterator(self.dim(), self.basis.iter().map(|b| frob(b, x)));
        self.gram
            .clone()
            .cholesky()
            .map(|ch| ch.solve(&rhs))
            .ok_or_else(|| LieError::Structure("basis is linearly dependent".into()))
    }

    pub fn from_coords(&self, v: &DVector<f64>) -> CMat {
        let mut out = CMat::zeros(self.size, self.size);
        for (b, &x) in self.basis.iter().zip(v.iter()) {
            out += b * Complex::new(x, 0.0);
        }
        out
    }

    /// Distance from `x` to the algebra, relative to `max(1, ‖x‖)`.
    pub fn membership_residual(&self, x: &CMat) -> Result<f64, LieError> {
        let p = self.from_coords(&self.coords(x)?);
        Ok((x - p).norm() / x.norm().max(1.0))
    }

    /// Nearest algebra element in the Frobenius sense.
    pub fn project(&self, x: &CMat) -> Result<CMat, LieError> {
        Ok(self.from_coords(&self.coords(x)?))
    }

    /// `ad(x)` in basis coordinates.
    pub fn ad(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim();
        let mut out = DMatrix::zeros(d, d);
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                out += &self.ad[i] * xi;
            }
        }
        out
    }

    pub fn bracket_coords(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        self.ad(x) * y
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.dot(&(&self.metric * y))
    }

    /// `W` with `Wᵀ·metric·W = I`; its columns are coordinates of a metric
    /// orthonormal basis.
    pub fn orthonormal_frame(&self) -> DMatrix<f64> {
        let l = self.metric.clone().cholesky().expect("checked at construction").l();
        l.transpose()
            .try_inverse()
            .expect("triangular factor of a positive definite matrix")
    }
}
