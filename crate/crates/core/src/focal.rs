//! Focal radii, Jacobi amplitudes and parallel shape operators for
//! curvature-adapted eigendata.
//!
//! On a joint eigenspace where the normal Jacobi operator acts by `λR` and the
//! shape operator by `λA`, a strongly M-Jacobi field along the normal
//! geodesic is a scalar multiple `Y(s)` of a parallel field, with
//! `Y'' = −λR·Y`, `Y(0) = 1`, `Y'(0) = −λA`. Its zeros are the focal radii and
//! `−Y'(r)/Y(r)` is the shape eigenvalue of the parallel submanifold at
//! distance `r`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::{self, SpectralData};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FocalError {
    #[error("degenerate window [{min}, {max}]: need 0 < min < max")]
    BadWindow { min: f64, max: f64 },
    #[error("eigen grid pair {index} has zero multiplicity")]
    ZeroMultiplicity { index: usize },
    #[error("eigen grid pair {index} is not finite")]
    NonFinite { index: usize },
    #[error("no grids supplied")]
    NoGrids,
    #[error("r = {r} is a focal radius of grid {label} (pair λR = {lambda_r}, λA = {lambda_a})")]
    Focal { label: String, r: f64, lambda_r: f64, lambda_a: f64 },
    #[error("riccati oracle undefined: r = {r} is within tolerance of a focal radius")]
    OracleUndefined { r: f64 },
    #[error("riccati oracle needs at least 10 steps, got {0}")]
    TooFewSteps(usize),
}

/// `(C, S, C')` with `C = cos(s√λ)`, `S = sin(s√λ)/√λ` for `λ ≥ 0`.
fn cos_sinc(lambda_r: f64, s: f64) -> (f64, f64, f64) {
    if lambda_r > 0.0 {
        let w = lambda_r.sqrt();
        let (sin, cos) = (s * w).sin_cos();
        (cos, sin / w, -w * sin)
    } else {
        (1.0, s, 0.0)
    }
}

/// Scalar amplitude `Y(s) = C(s) − λA·S(s)` of the strongly M-Jacobi field.
pub fn jacobi_amplitude(lambda_r: f64, lambda_a: f64, s: f64) -> f64 {
    if lambda_r < 0.0 {
        // ½[(1 − λA/w)e^{ws} + (1 + λA/w)e^{−ws}]: no cancellation when λA ≈ w.
        let w = (-lambda_r).sqrt();
        let x = s * w;
        return 0.5 * ((1.0 - lambda_a / w) * x.exp() + (1.0 + lambda_a / w) * (-x).exp());
    }
    let (c, sn, _) = cos_sinc(lambda_r, s);
    c - lambda_a * sn
}

/// `Y'(s) = −λR·S(s) − λA·C(s)`.
pub fn jacobi_amplitude_derivative(lambda_r: f64, lambda_a: f64, s: f64) -> f64 {
    if lambda_r < 0.0 {
        let w = (-lambda_r).sqrt();
        let x = s * w;
        return 0.5 * ((w - lambda_a) * x.exp() - (w + lambda_a) * (-x).exp());
    }
    let (c, _, dc) = cos_sinc(lambda_r, s);
    dc - lambda_a * c
}

/// Which half-line a window searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RadiusSign {
    #[default]
    Positive,
    Negative,
}

/// Search interval `[min, max]` with `0 < min < max`; a negative window
/// covers `[−max, −min]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub min: f64,
    pub max: f64,
    #[serde(default)]
    pub sign: RadiusSign,
}

impl Window {
    pub fn new(min: f64, max: f64) -> Result<Self, FocalError> {
        Self::signed(min, max, RadiusSign::Positive)
    }

    pub fn signed(min: f64, max: f64, sign: RadiusSign) -> Result<Self, FocalError> {
        if !(min.is_finite() && max.is_finite() && min > 0.0 && min < max) {
            return Err(FocalError::BadWindow { min, max });
        }
        Ok(Self { min, max, sign })
    }

    pub fn contains(&self, r: f64) -> bool {
        let a = match self.sign {
            RadiusSign::Positive => r,
            RadiusSign::Negative => -r,
        };
        a >= self.min && a <= self.max
    }
}

/// Positive zeros of `Y` in `[min, max]`, ascending.
fn positive_zeros(lambda_r: f64, lambda_a: f64, min: f64, max: f64) -> Vec<f64> {
    if lambda_r > 0.0 {
        let w = lambda_r.sqrt();
        // cot θ = λA/√λR with θ = s√λR; the first positive root has θ in (0, π).
        let first = w.atan2(lambda_a) / w;
        let period = std::f64::consts::PI / w;
        let k0 = ((min - first) / period).ceil().max(0.0) as u64;
        let mut out = Vec::new();
        let mut k = k0;
        loop {
            let r = first + k as f64 * period;
            if r > max {
                break;
            }
            if r >= min {
                out.push(r);
            }
            k += 1;
        }
        out
    } else if lambda_r < 0.0 {
        let w = (-lambda_r).sqrt();
        // tanh(s w) = w / λA has a positive root iff λA > w.
        if lambda_a > w {
            let r = (w / lambda_a).atanh() / w;
            if r >= min && r <= max {
                return vec![r];
            }
        }
        Vec::new()
    } else if lambda_a > 0.0 {
        let r = 1.0 / lambda_a;
        if r >= min && r <= max {
            vec![r]
        } else {
            Vec::new()
        }
    } else {
        Vec::new()
    }
}

/// All zeros of `jacobi_amplitude(λR, λA, ·)` inside the window, ascending.
pub fn focal_radii_pair(lambda_r: f64, lambda_a: f64, window: &Window) -> Vec<f64> {
    match window.sign {
        RadiusSign::Positive => positive_zeros(lambda_r, lambda_a, window.min, window.max),
        // Y(−s; λR, λA) = Y(s; λR, −λA).
        RadiusSign::Negative => {
            let mut v: Vec<f64> = positive_zeros(lambda_r, -lambda_a, window.min, window.max)
                .into_iter()
                .map(|r| -r)
                .collect();
            v.reverse();
            v
        }
    }
}

/// One joint eigenvalue pair of `(R̃(ξ), A_ξ)` with the dimension of the joint
/// eigenspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPair {
    #[serde(rename = "lambdaR")]
    pub lambda_r: f64,
    #[serde(rename = "lambdaA")]
    pub lambda_a: f64,
    pub mult: u64,
}

/// Joint eigendata of a curvature-adapted pair at one base point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct EigenGrid {
    label: Option<String>,
    pairs: Vec<GridPair>,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    #[serde(default)]
    label: Option<String>,
    pairs: Vec<GridPair>,
}

impl TryFrom<RawGrid> for EigenGrid {
    type Error = FocalError;
    fn try_from(raw: RawGrid) -> Result<Self, FocalError> {
        EigenGrid::new(raw.label, raw.pairs)
    }
}

impl From<EigenGrid> for RawGrid {
    fn from(g: EigenGrid) -> Self {
        RawGrid { label: g.label, pairs: g.pairs }
    }
}

impl EigenGrid {
    /// Validates multiplicities and merges pairs with identical eigenvalues.
    pub fn new(label: Option<String>, pairs: Vec<GridPair>) -> Result<Self, FocalError> {
        let mut merged: Vec<GridPair> = Vec::with_capacity(pairs.len());
        for (index, p) in pairs.into_iter().enumerate() {
            if p.mult == 0 {
                return Err(FocalError::ZeroMultiplicity { index });
            }
            if !(p.lambda_r.is_finite() && p.lambda_a.is_finite()) {
                return Err(FocalError::NonFinite { index });
            }
            match merged
                .iter_mut()
                .find(|q| q.lambda_r == p.lambda_r && q.lambda_a == p.lambda_a)
            {
                Some(q) => q.mult += p.mult,
                None => merged.push(p),
            }
        }
        Ok(Self { label, pairs: merged })
    }

    pub fn from_triples<I>(label: Option<&str>, triples: I) -> Result<Self, FocalError>
    where
        I: IntoIterator<Item = (f64, f64, u64)>,
    {
        let pairs = triples
            .into_iter()
            .map(|(lambda_r, lambda_a, mult)| GridPair { lambda_r, lambda_a, mult })
            .collect();
        Self::new(label.map(str::to_owned), pairs)
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or("")
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn pairs(&self) -> &[GridPair] {
        &self.pairs
    }

    pub fn total_multiplicity(&self) -> u64 {
        self.pairs.iter().map(|p| p.mult).sum()
    }

    /// Spectrum of the shape operator.
    pub fn shape_spectrum(&self) -> SpectralData {
        SpectralData::from_signed(self.pairs.iter().map(|p| (p.lambda_a, p.mult)))
    }

    /// Spectrum of the normal Jacobi operator.
    pub fn jacobi_spectrum(&self) -> SpectralData {
        SpectralData::from_signed(self.pairs.iter().map(|p| (p.lambda_r, p.mult)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocalRadius {
    pub radius: f64,
    pub mult: u64,
}

/// Focal radii with multiplicities inside a window, strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocalRadiusSet {
    pub entries: Vec<FocalRadius>,
    pub window: Window,
}

impl FocalRadiusSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_multiplicity(&self) -> u64 {
        self.entries.iter().map(|e| e.mult).max().unwrap_or(0)
    }
}

pub fn focal_set(grid: &EigenGrid, window: &Window) -> FocalRadiusSet {
    focal_set_with(grid, window, &Tolerances::default())
}

/// Union of the per-pair focal radii; radii closer than `radius_merge` are
/// merged with summed multiplicity.
pub fn focal_set_with(grid: &EigenGrid, window: &Window, tol: &Tolerances) -> FocalRadiusSet {
    let mut all: Vec<FocalRadius> = grid
        .pairs()
        .iter()
        .flat_map(|p| {
            focal_radii_pair(p.lambda_r, p.lambda_a, window)
                .into_iter()
                .map(move |radius| FocalRadius { radius, mult: p.mult })
        })
        .collect();
    all.sort_by(|a, b| a.radius.total_cmp(&b.radius));
    let mut entries: Vec<FocalRadius> = Vec::with_capacity(all.len());
    for fr in all {
        match entries.last_mut() {
            Some(last) if fr.radius - last.radius <= tol.radius_merge => last.mult += fr.mult,
            _ => entries.push(fr),
        }
    }
    FocalRadiusSet { entries, window: *window }
}

/// Minimal gap between consecutive focal radii with `|r| ≥ eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapEntry {
    pub eps: f64,
    pub count: usize,
    pub min_gap: Option<f64>,
}

/// Finite-truncation witness for the proper Fredholm property: finitely many
/// focal radii in the window, finite multiplicities and no accumulation away
/// from zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FredholmReport {
    pub count: usize,
    pub total_multiplicity: u64,
    pub max_multiplicity: u64,
    pub gaps: Vec<GapEntry>,
    pub accumulation: bool,
}

pub fn proper_fredholm_witness(grid: &EigenGrid, window: &Window, eps: &[f64]) -> FredholmReport {
    let tol = Tolerances::default();
    let set = focal_set_with(grid, window, &tol);
    let gaps: Vec<GapEntry> = eps
        .iter()
        .map(|&e| {
            let radii: Vec<f64> = set
                .entries
                .iter()
                .map(|f| f.radius)
                .filter(|r| r.abs() >= e)
                .collect();
            let min_gap = radii
                .windows(2)
                .map(|w| w[1] - w[0])
                .min_by(|a, b| a.total_cmp(b));
            GapEntry { eps: e, count: radii.len(), min_gap }
        })
        .collect();
    let accumulation = gaps
        .iter()
        .any(|g| matches!(g.min_gap, Some(d) if d <= tol.radius_merge));
    FredholmReport {
        count: set.len(),
        total_multiplicity: set.entries.iter().map(|e| e.mult).sum(),
        max_multiplicity: set.max_multiplicity(),
        gaps,
        accumulation,
    }
}

/// Shape eigenvalue of the parallel submanifold, or `Focal` when the end-point
/// map degenerates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ParallelValue {
    Regular(f64),
    Focal,
}

impl ParallelValue {
    pub fn value(self) -> Option<f64> {
        match self {
            ParallelValue::Regular(v) => Some(v),
            ParallelValue::Focal => None,
        }
    }
}

pub fn parallel_shape_eigenvalue(lambda_r: f64, lambda_a: f64, r: f64) -> ParallelValue {
    parallel_shape_eigenvalue_with(lambda_r, lambda_a, r, &Tolerances::default())
}

/// `−Y'(r)/Y(r)`, i.e. `(√λR tan(r√λR) + λA)/(1 − λA tan(r√λR)/√λR)` with the
/// hyperbolic and linear continuations.
pub fn parallel_shape_eigenvalue_with(
    lambda_r: f64,
    lambda_a: f64,
    r: f64,
    tol: &Tolerances,
) -> ParallelValue {
    let y = jacobi_amplitude(lambda_r, lambda_a, r);
    let dy = jacobi_amplitude_derivative(lambda_r, lambda_a, r);
    if y.abs() < tol.focal_proximity * (1.0 + dy.abs()) {
        ParallelValue::Focal
    } else {
        ParallelValue::Regular(-dy / y)
    }
}

/// Classical RK4 for `Y'' = −λR·Y`, `Y(0) = 1`, `Y'(0) = −λA` on `[0, s]`.
/// Returns `(Y(s), Y'(s))`.
pub fn jacobi_rk4(lambda_r: f64, lambda_a: f64, s: f64, steps: usize) -> (f64, f64) {
    let h = s / steps as f64;
    let f = |y: f64, v: f64| (v, -lambda_r * y);
    let (mut y, mut v) = (1.0, -lambda_a);
    for _ in 0..steps {
        let (k1y, k1v) = f(y, v);
        let (k2y, k2v) = f(y + 0.5 * h * k1y, v + 0.5 * h * k1v);
        let (k3y, k3v) = f(y + 0.5 * h * k2y, v + 0.5 * h * k2v);
        let (k4y, k4v) = f(y + h * k3y, v + h * k3v);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    (y, v)
}

/// `−Y'(r)/Y(r)` from the RK4 Jacobi integration.
pub fn riccati_oracle(lambda_r: f64, lambda_a: f64, r: f64, steps: usize) -> Result<f64, FocalError> {
    if steps < 10 {
        return Err(FocalError::TooFewSteps(steps));
    }
    let (y, dy) = jacobi_rk4(lambda_r, lambda_a, r, steps);
    if y.abs() < Tolerances::default().focal_proximity * (1.0 + dy.abs()) {
        return Err(FocalError::OracleUndefined { r });
    }
    Ok(-dy / y)
}

/// Regularized trace of the parallel submanifold's shape operator at
/// distance `r` along the parallel normal field.
pub fn parallel_reg_mean_curvature(grid: &EigenGrid, r: f64) -> Result<f64, FocalError> {
    parallel_reg_mean_curvature_with(grid, r, &Tolerances::default())
}

pub fn parallel_reg_mean_curvature_with(
    grid: &EigenGrid,
    r: f64,
    tol: &Tolerances,
) -> Result<f64, FocalError> {
    let spec = transformed_spectrum(grid, r, tol)?;
    Ok(spectral::reg_trace_with(&spec, tol)
        .value()
        .expect("finite-rank spectra always have a regularized trace"))
}

fn transformed_spectrum(grid: &EigenGrid, r: f64, tol: &Tolerances) -> Result<SpectralData, FocalError> {
    let mut values = Vec::with_capacity(grid.pairs().len());
    for p in grid.pairs() {
        match parallel_shape_eigenvalue_with(p.lambda_r, p.lambda_a, r, tol) {
            ParallelValue::Regular(v) => values.push((v, p.mult)),
            ParallelValue::Focal => {
                return Err(FocalError::Focal {
                    label: grid.label().to_owned(),
                    r,
                    lambda_r: p.lambda_r,
                    lambda_a: p.lambda_a,
                })
            }
        }
    }
    Ok(SpectralData::from_signed(values))
}

/// One line of a check report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    pub value: f64,
    pub residual: f64,
}

/// Verdict of a cross-grid comparison with the per-grid residuals against the
/// first grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub passed: bool,
    pub max_residual: f64,
    pub rows: Vec<CheckRow>,
}

fn expanded(values: impl Iterator<Item = (f64, u64)>) -> Vec<f64> {
    let mut v: Vec<f64> = values
        .flat_map(|(x, m)| std::iter::repeat_n(x, m as usize))
        .collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// `(all close, max |a_i − b_i|)`; infinite residual when sizes differ.
fn compare_multisets(a: &[f64], b: &[f64], tol: &Tolerances) -> (bool, f64) {
    if a.len() != b.len() {
        return (false, f64::INFINITY);
    }
    let mut ok = true;
    let mut res: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        ok &= tol.spectra_close(*x, *y);
        res = res.max((x - y).abs());
    }
    (ok, res)
}

/// Orthogonal equivalence of the shape operators and of the normal Jacobi
/// operators across base points, i.e. equal spectra with multiplicity.
pub fn weakly_isoparametric_check(grids: &[EigenGrid], tol: &Tolerances) -> Result<CheckReport, FocalError> {
    let reference = grids.first().ok_or(FocalError::NoGrids)?;
    let spectra = |g: &EigenGrid| {
        (
            expanded(g.pairs().iter().map(|p| (p.lambda_a, p.mult))),
            expanded(g.pairs().iter().map(|p| (p.lambda_r, p.mult))),
        )
    };
    let (ref_a, ref_r) = spectra(reference);
    let mut passed = true;
    let mut rows = Vec::with_capacity(grids.len());
    for g in grids {
        let (a, r) = spectra(g);
        let (ok_a, res_a) = compare_multisets(&ref_a, &a, tol);
        let (ok_r, res_r) = compare_multisets(&ref_r, &r, tol);
        passed &= ok_a && ok_r;
        rows.push(CheckRow {
            label: g.label().to_owned(),
            r: None,
            value: g.total_multiplicity() as f64,
            residual: res_a.max(res_r),
        });
    }
    Ok(finish("weak", passed, rows))
}

/// Constancy of the regularized mean curvature of the parallel submanifolds
/// at each radius in `radii` across all grids.
pub fn isoparametric_check(grids: &[EigenGrid], radii: &[f64], tol: &Tolerances) -> Result<CheckReport, FocalError> {
    if grids.is_empty() {
        return Err(FocalError::NoGrids);
    }
    let mut passed = true;
    let mut rows = Vec::new();
    for g in grids {
        passed &= spectral::is_regularizable(&g.shape_spectrum())
            && spectral::is_regularizable(&g.jacobi_spectrum());
    }
    for &r in radii {
        let mut reference = None;
        for g in grids {
            let spec = transformed_spectrum(g, r, tol)?;
            passed &= spectral::is_regularizable(&spec);
            let value = spectral::reg_trace_with(&spec, tol).value().unwrap_or(f64::NAN);
            let base = *reference.get_or_insert(value);
            passed &= tol.spectra_close(base, value);
            rows.push(CheckRow {
                label: g.label().to_owned(),
                r: Some(r),
                value,
                residual: (value - base).abs(),
            });
        }
    }
    Ok(finish("iso", passed, rows))
}

/// Focal radii with multiplicity agree across grids on the window.
pub fn equifocal_check(grids: &[EigenGrid], window: &Window, tol: &Tolerances) -> Result<CheckReport, FocalError> {
    let reference = grids.first().ok_or(FocalError::NoGrids)?;
    let ref_set = focal_set_with(reference, window, tol);
    let mut passed = true;
    let mut rows = Vec::with_capacity(grids.len());
    for g in grids {
        let set = focal_set_with(g, window, tol);
        let (ok, residual) = if set.len() == ref_set.len() {
            ref_set.entries.iter().zip(&set.entries).fold((true, 0.0f64), |(ok, res), (a, b)| {
                (
                    ok && a.mult == b.mult && tol.spectra_close(a.radius, b.radius),
                    res.max((a.radius - b.radius).abs()),
                )
            })
        } else {
            (false, f64::INFINITY)
        };
        passed &= ok;
        rows.push(CheckRow {
            label: g.label().to_owned(),
            r: None,
            value: set.len() as f64,
            residual,
        });
    }
    Ok(finish("equifocal", passed, rows))
}

fn finish(check: &str, passed: bool, rows: Vec<CheckRow>) -> CheckReport {
    let max_residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    CheckReport { check: check.to_owned(), passed, max_residual, rows }
}
