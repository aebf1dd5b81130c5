//! Default numerical tolerances, in one place.
//!
//! | key                  | default | used by                                              |
//! |----------------------|---------|------------------------------------------------------|
//! | `cauchy`             | 1e-6    | Cauchy window test on truncated partial sums         |
//! | `zeta`               | 1e-6    | accepted extrapolation increment of the zeta trace   |
//! | `focal_proximity`    | 1e-9    | `|Y(r)| < tol (1 + |Y'(r)|)` marks a focal radius     |
//! | `radius_merge`       | 1e-9    | merging coincident focal radii                       |
//! | `spectrum_abs`       | 1e-9    | absolute part of multiset comparison                 |
//! | `spectrum_rel`       | 1e-12   | relative part of multiset comparison                 |
//! | `normal_residual`    | 1e-9    | a vector counts as normal to the model submanifold   |
//! | `commutator`         | 1e-9    | curvature-adaptedness `‖[A, R]‖`                     |
//! | `bracket`            | 1e-9    | restricted-root bracket containment                  |
//! | `orthogonality`      | 1e-8    | section vs. orbit orthogonality                      |
//! | `eigen_cluster`      | 1e-8    | clustering of `ad(H)^2` eigenvalues                  |
//! | `green_residual`     | 1e-10   | `‖L G(ψ) − ψ‖` verdict of the green command           |
//! | `holonomy`           | 1e-6    | agreement of holonomy and transport routes           |
//! | `dense_trace`        | 1e-6    | dense-matrix vs closed-form mean curvature; joint     |
//! |                      |         | eigen-residual of the dense diagonalization          |
//!
//! Every CLI command accepts `--tol key=value` to override an entry.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub cauchy: f64,
    pub zeta: f64,
    pub focal_proximity: f64,
    pub radius_merge: f64,
    pub spectrum_abs: f64,
    pub spectrum_rel: f64,
    pub normal_residual: f64,
    pub commutator: f64,
    pub bracket: f64,
    pub orthogonality: f64,
    pub eigen_cluster: f64,
    pub green_residual: f64,
    pub holonomy: f64,
    pub dense_trace: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            cauchy: 1e-6,
            zeta: 1e-6,
            focal_proximity: 1e-9,
            radius_merge: 1e-9,
            spectrum_abs: 1e-9,
            spectrum_rel: 1e-12,
            normal_residual: 1e-9,
            commutator: 1e-9,
            bracket: 1e-9,
            orthogonality: 1e-8,
            eigen_cluster: 1e-8,
            green_residual: 1e-10,
            holonomy: 1e-6,
            dense_trace: 1e-6,
        }
    }
}

impl Tolerances {
    /// Sets one entry by key. Returns an error naming the key when it is unknown
    /// or the value is not a positive finite number.
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), String> {
        if !(value.is_finite() && value > 0.0) {
            return Err(format!("tolerance {key} must be positive, got {value}"));
        }
        let slot = match key {
            "cauchy" => &mut self.cauchy,
            "zeta" => &mut self.zeta,
            "focal_proximity" => &mut self.focal_proximity,
            "radius_merge" => &mut self.radius_merge,
            "spectrum_abs" => &mut self.spectrum_abs,
            "spectrum_rel" => &mut self.spectrum_rel,
            "normal_residual" => &mut self.normal_residual,
            "commutator" => &mut self.commutator,
            "bracket" => &mut self.bracket,
            "orthogonality" => &mut self.orthogonality,
            "eigen_cluster" => &mut self.eigen_cluster,
            "green_residual" => &mut self.green_residual,
            "holonomy" => &mut self.holonomy,
            "dense_trace" => &mut self.dense_trace,
            _ => return Err(format!("unknown tolerance key `{key}`")),
        };
        *slot = value;
        Ok(())
    }

    /// `|a − b| ≤ abs + rel·max(|a|, |b|)`.
    pub fn spectra_close(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.spectrum_abs + self.spectrum_rel * a.abs().max(b.abs())
    }
}
