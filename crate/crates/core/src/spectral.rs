//! Spectra of compact self-adjoint operators, their regularized trace, zeta
//! trace and the trace of the square.
//!
//! A spectrum is stored as two non-increasing lists of magnitudes, one for the
//! positive eigenvalues and one for the negative ones, each entry carrying a
//! multiplicity. Everything beyond the stored truncation is described by an
//! optional geometric tail bound `|λ_i| ≤ C q^i` (1-based index over the
//! multiplicity-expanded list of one sign). A tail with `C = 0` declares the
//! operator to be of finite rank.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

use crate::tolerance::Tolerances;

/// Fraction of the partial sums (from the end) inspected by the Cauchy test.
pub const CAUCHY_WINDOW: f64 = 0.1;

/// Number of halvings used when accelerating partial sums without a tail model.
const RICHARDSON_LEVELS: usize = 4;
const RICHARDSON_MIN_LEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Positives,
    Negatives,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Positives => f.write_str("positive"),
            Side::Negatives => f.write_str("negative"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("{side} eigenvalues are not sorted non-increasing at entry {index}")]
    Unsorted { side: Side, index: usize },
    #[error("{side} entry {index} has invalid magnitude {value}")]
    BadMagnitude { side: Side, index: usize, value: f64 },
    #[error("{side} entry {index} has zero multiplicity")]
    ZeroMultiplicity { side: Side, index: usize },
    #[error("tail model needs ratio in (0,1) and scale >= 0, got ratio {ratio}, scale {scale}")]
    BadTail { ratio: f64, scale: f64 },
    #[error("{side} eigenvalue {value} at index {index} lies below the tail bound {bound}")]
    BelowTail { side: Side, index: u64, value: f64, bound: f64 },
    #[error("invalid zeta configuration: {0}")]
    BadZetaConfig(String),
}

/// One eigenvalue magnitude with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub value: f64,
    pub mult: u64,
}

impl Eigenvalue {
    pub fn new(value: f64, mult: u64) -> Self {
        Self { value, mult }
    }
}

/// Geometric decay bound `C q^i` for the eigenvalues past the truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    pub ratio: f64,
    pub scale: f64,
}

impl TailModel {
    /// Nothing beyond the stored entries.
    pub fn finite_rank() -> Self {
        Self { ratio: 0.5, scale: 0.0 }
    }

    pub fn bound(&self, index: u64) -> f64 {
        self.scale * self.ratio.powf(index as f64)
    }

    /// `Σ_{i>n} (C q^i)^p`.
    fn remainder(&self, stored: u64, power: f64) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        let qp = self.ratio.powf(power);
        self.scale.powf(power) * qp.powf((stored + 1) as f64) / (1.0 - qp)
    }
}

/// Signed spectrum of a compact self-adjoint operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpectrum", into = "RawSpectrum")]
pub struct SpectralData {
    positives: Vec<Eigenvalue>,
    negatives: Vec<Eigenvalue>,
    tail: Option<TailModel>,
}

#[derive(Serialize, Deserialize)]
struct RawSpectrum {
    #[serde(default)]
    positives: Vec<Eigenvalue>,
    #[serde(default)]
    negatives: Vec<Eigenvalue>,
    #[serde(default)]
    tail: Option<TailModel>,
}

impl TryFrom<RawSpectrum> for SpectralData {
    type Error = SpectralError;
    fn try_from(raw: RawSpectrum) -> Result<Self, Self::Error> {
        SpectralData::new(raw.positives, raw.negatives, raw.tail)
    }
}

impl From<SpectralData> for RawSpectrum {
    fn from(s: SpectralData) -> Self {
        RawSpectrum { positives: s.positives, negatives: s.negatives, tail: s.tail }
    }
}

impl SpectralData {
    /// Validates and builds a spectrum. Entries whose magnitude is exactly zero
    /// are dropped.
    pub fn new(
        positives: Vec<Eigenvalue>,
        negatives: Vec<Eigenvalue>,
        tail: Option<TailModel>,
    ) -> Result<Self, SpectralError> {
        if let Some(t) = tail {
            if !(t.ratio > 0.0 && t.ratio < 1.0 && t.scale >= 0.0 && t.scale.is_finite()) {
                return Err(SpectralError::BadTail { ratio: t.ratio, scale: t.scale });
            }
        }
        let positives = validate_side(positives, Side::Positives, tail)?;
        let negatives = validate_side(negatives, Side::Negatives, tail)?;
        Ok(Self { positives, negatives, tail })
    }

    /// Finite-rank spectrum from signed eigenvalues in any order.
    pub fn from_signed<I>(values: I) -> Self
    where
        I: IntoIterator<Item = (f64, u64)>,
    {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (v, m) in values {
            if m == 0 || v == 0.0 {
                continue;
            }
            if v > 0.0 {
                pos.push(Eigenvalue::new(v, m));
            } else {
                neg.push(Eigenvalue::new(-v, m));
            }
        }
        let desc = |a: &Eigenvalue, b: &Eigenvalue| b.value.total_cmp(&a.value);
        pos.sort_by(desc);
        neg.sort_by(desc);
        Self::new(pos, neg, Some(TailModel::finite_rank()))
            .expect("sorted finite values always validate")
    }

    pub fn empty() -> Self {
        Self { positives: Vec::new(), negatives: Vec::new(), tail: Some(TailModel::finite_rank()) }
    }

    pub fn positives(&self) -> &[Eigenvalue] {
        &self.positives
    }

    pub fn negatives(&self) -> &[Eigenvalue] {
        &self.negatives
    }

    pub fn tail(&self) -> Option<TailModel> {
        self.tail
    }

    pub fn is_finite_rank(&self) -> bool {
        matches!(self.tail, Some(t) if t.scale == 0.0)
    }

    /// The spectrum of `-A`.
    pub fn negated(&self) -> Self {
        Self {
            positives: self.negatives.clone(),
            negatives: self.positives.clone(),
            tail: self.tail,
        }
    }

    /// Same spectrum with every multiplicity-`m` entry split into `m` entries.
    pub fn split_multiplicities(&self) -> Self {
        let split = |side: &[Eigenvalue]| {
            side.iter()
                .flat_map(|e| std::iter::repeat_n(Eigenvalue::new(e.value, 1), e.mult as usize))
                .collect()
        };
        Self { positives: split(&self.positives), negatives: split(&self.negatives), tail: self.tail }
    }

    fn count(side: &[Eigenvalue]) -> u64 {
        side.iter().map(|e| e.mult).sum()
    }

    /// Plain signed sum `Σ λ` with multiplicity over the stored entries.
    pub fn stored_sum(&self) -> f64 {
        let s = |side: &[Eigenvalue]| side.iter().map(|e| e.value * e.mult as f64).sum::<f64>();
        s(&self.positives) - s(&self.negatives)
    }

    /// Remainder bound for a paired series whose terms are `f(λ⁺) ∓ f(λ⁻)`
    /// with `f(x) = x^power`.
    fn tail_remainder(&self, power: f64) -> Option<f64> {
        self.tail.map(|t| {
            t.remainder(Self::count(&self.positives), power)
                + t.remainder(Self::count(&self.negatives), power)
        })
    }

    /// Multiplicity-expanded pairs `(λ_i⁺, λ_i⁻)`, missing entries as 0.
    fn paired(&self) -> Paired<'_> {
        Paired::new(&self.positives, &self.negatives)
    }

    fn paired_len(&self) -> u64 {
        Self::count(&self.positives).max(Self::count(&self.negatives))
    }
}

fn validate_side(
    entries: Vec<Eigenvalue>,
    side: Side,
    tail: Option<TailModel>,
) -> Result<Vec<Eigenvalue>, SpectralError> {
    let mut out: Vec<Eigenvalue> = Vec::with_capacity(entries.len());
    let mut index: u64 = 1;
    for (i, e) in entries.into_iter().enumerate() {
        if e.value == 0.0 {
            continue;
        }
        if !(e.value.is_finite() && e.value > 0.0) {
            return Err(SpectralError::BadMagnitude { side, index: i, value: e.value });
        }
        if e.mult == 0 {
            return Err(SpectralError::ZeroMultiplicity { side, index: i });
        }
        if let Some(prev) = out.last() {
            if e.value > prev.value {
                return Err(SpectralError::Unsorted { side, index: i });
            }
        }
        if let Some(t) = tail {
            let bound = t.bound(index);
            if e.value < bound * (1.0 - 1e-12) {
                return Err(SpectralError::BelowTail { side, index, value: e.value, bound });
            }
        }
        index += e.mult;
        out.push(e);
    }
    Ok(out)
}

struct Paired<'a> {
    pos: RunCursor<'a>,
    neg: RunCursor<'a>,
}

impl<'a> Paired<'a> {
    fn new(pos: &'a [Eigenvalue], neg: &'a [Eigenvalue]) -> Self {
        Self { pos: RunCursor::new(pos), neg: RunCursor::new(neg) }
    }
}

impl Iterator for Paired<'_> {
    type Item = (f64, f64);
    fn next(&mut self) -> Option<(f64, f64)> {
        match (self.pos.next(), self.neg.next()) {
            (None, None) => None,
            (p, n) => Some((p.unwrap_or(0.0), n.unwrap_or(0.0))),
        }
    }
}

struct RunCursor<'a> {
    runs: &'a [Eigenvalue],
    run: usize,
    used: u64,
}

impl<'a> RunCursor<'a> {
    fn new(runs: &'a [Eigenvalue]) -> Self {
        Self { runs, run: 0, used: 0 }
    }
}

impl Iterator for RunCursor<'_> {
    type Item = f64;
    fn next(&mut self) -> Option<f64> {
        let e = self.runs.get(self.run)?;
        let v = e.value;
        self.used += 1;
        if self.used == e.mult {
            self.run += 1;
            self.used = 0;
        }
        Some(v)
    }
}

/// Outcome of a trace estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum TraceEstimate {
    /// Converged value with an error estimate (tail bound or acceleration
    /// increment).
    Finite { value: f64, error: f64 },
    /// Partial sums failed the Cauchy test (or the extrapolation its own error
    /// estimate). `spread` is the oscillation that caused the verdict.
    Divergent { partial: f64, spread: f64 },
}

impl TraceEstimate {
    pub fn value(&self) -> Option<f64> {
        match *self {
            TraceEstimate::Finite { value, .. } => Some(value),
            TraceEstimate::Divergent { .. } => None,
        }
    }

    pub fn error(&self) -> Option<f64> {
        match *self {
            TraceEstimate::Finite { error, .. } => Some(error),
            TraceEstimate::Divergent { .. } => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, TraceEstimate::Finite { .. })
    }
}

/// Sums a series given term by term. With a tail remainder bound the stored
/// partial sum is returned as is; otherwise the last `CAUCHY_WINDOW` of the
/// partial sums must stay within `cauchy · max(1, |S|)` and the sum is
/// accelerated by Richardson extrapolation in `1/N`.
fn sum_series<I>(terms: I, len: u64, remainder: Option<f64>, cauchy: f64) -> TraceEstimate
where
    I: Iterator<Item = f64>,
{
    let window_start = ((1.0 - CAUCHY_WINDOW) * len as f64).floor() as u64;
    let checkpoints: Vec<u64> = (0..RICHARDSON_LEVELS)
        .map(|k| len >> k)
        .filter(|&n| n >= 1)
        .collect();
    let mut at_checkpoint = vec![0.0; checkpoints.len()];

    let mut sum = 0.0;
    let (mut lo, mut hi) = if window_start == 0 { (0.0, 0.0) } else { (f64::INFINITY, f64::NEG_INFINITY) };
    for (j, t) in (1..=len).zip(terms) {
        sum += t;
        if j >= window_start {
            lo = lo.min(sum);
            hi = hi.max(sum);
        }
        if let Some(k) = checkpoints.iter().position(|&n| n == j) {
            at_checkpoint[k] = sum;
        }
    }

    if let Some(rem) = remainder {
        return TraceEstimate::Finite { value: sum, error: rem };
    }
    if len == 0 {
        return TraceEstimate::Finite { value: 0.0, error: 0.0 };
    }
    let spread = hi - lo;
    if spread > cauchy * sum.abs().max(1.0) {
        return TraceEstimate::Divergent { partial: sum, spread };
    }
    if (len as usize) < RICHARDSON_MIN_LEN {
        return TraceEstimate::Finite { value: sum, error: spread };
    }
    // Nodes x = 1/N ordered from the coarsest to the finest level.
    let xs: Vec<f64> = checkpoints.iter().rev().map(|&n| 1.0 / n as f64).collect();
    let ys: Vec<f64> = at_checkpoint.iter().rev().copied().collect();
    let (value, increment) = neville_at_zero(&xs, &ys);
    TraceEstimate::Finite { value, error: increment.abs().max((value - sum).abs()) }
}

/// Neville polynomial extrapolation to `x = 0`. Returns the extrapolated
/// value and the last increment (difference between the full-order estimate
/// and the estimate that omits the first node).
pub fn neville_at_zero(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(!xs.is_empty());
    let n = xs.len();
    // p[i] holds the value at 0 of the interpolant through nodes i..=i+level.
    let mut p = ys.to_vec();
    let mut last_increment = 0.0;
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (xs[i], xs[i + level]);
            p[i] = (xi * p[i + 1] - xj * p[i]) / (xi - xj);
        }
        if level == n - 1 {
            // p[0] is full order; p[1] (from the previous level) omitted node 0.
            last_increment = p[0] - p[1];
        }
    }
    (p[0], last_increment)
}

/// Regularized trace `Σ_i (λ_i⁺ − λ_i⁻)` of paired partial sums.
pub fn reg_trace(spec: &SpectralData) -> TraceEstimate {
    reg_trace_with(spec, &Tolerances::default())
}

pub fn reg_trace_with(spec: &SpectralData, tol: &Tolerances) -> TraceEstimate {
    let terms = spec.paired().map(|(p, n)| p - n);
    sum_series(terms, spec.paired_len(), spec.tail_remainder(1.0), tol.cauchy)
}

/// Usual trace of the square, `Σ λ²` over both signs.
pub fn trace_square(spec: &SpectralData) -> TraceEstimate {
    trace_square_with(spec, &Tolerances::default())
}

pub fn trace_square_with(spec: &SpectralData, tol: &Tolerances) -> TraceEstimate {
    let terms = spec.paired().map(|(p, n)| p * p + n * n);
    sum_series(terms, spec.paired_len(), spec.tail_remainder(2.0), tol.cauchy)
}

/// Both the regularized trace and the trace of the square are finite.
pub fn is_regularizable(spec: &SpectralData) -> bool {
    reg_trace(spec).is_finite() && trace_square(spec).is_finite()
}

/// Exponent grid and extrapolation order for the zeta trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaConfig {
    /// Strictly decreasing exponents `s_k > 1`.
    pub exponents: Vec<f64>,
    /// Polynomial degree of the extrapolation; the `order + 1` exponents
    /// closest to 1 are used.
    pub order: usize,
}

impl Default for ZetaConfig {
    fn default() -> Self {
        Self::dyadic(12)
    }
}

impl ZetaConfig {
    /// `s_k = 1 + 2^{-k}`, `k = 1..=levels`, full-order extrapolation.
    pub fn dyadic(levels: usize) -> Self {
        let exponents = (1..=levels).map(|k| 1.0 + 0.5f64.powi(k as i32)).collect();
        Self { exponents, order: levels.saturating_sub(1) }
    }

    fn validate(&self) -> Result<(), SpectralError> {
        if self.exponents.len() < 2 {
            return Err(SpectralError::BadZetaConfig("need at least two exponents".into()));
        }
        if self.exponents.iter().any(|&s| !(s.is_finite() && s > 1.0)) {
            return Err(SpectralError::BadZetaConfig("exponents must exceed 1".into()));
        }
        if self.exponents.windows(2).any(|w| w[1] >= w[0]) {
            return Err(SpectralError::BadZetaConfig("exponents must strictly decrease".into()));
        }
        if self.order == 0 || self.order >= self.exponents.len() {
            return Err(SpectralError::BadZetaConfig(format!(
                "order {} needs 1 <= order < {}",
                self.order,
                self.exponents.len()
            )));
        }
        Ok(())
    }
}

/// Zeta trace `lim_{s↓1} Σ ((λ_i⁺)^s − (λ_i⁻)^s)`, evaluated on the exponent
/// grid and extrapolated polynomially to `s = 1`.
pub fn zeta_trace(spec: &SpectralData, cfg: &ZetaConfig) -> Result<TraceEstimate, SpectralError> {
    zeta_trace_with(spec, cfg, &Tolerances::default())
}

pub fn zeta_trace_with(
    spec: &SpectralData,
    cfg: &ZetaConfig,
    tol: &Tolerances,
) -> Result<TraceEstimate, SpectralError> {
    cfg.validate()?;
    let used = &cfg.exponents[cfg.exponents.len() - cfg.order - 1..];
    let mut hs = Vec::with_capacity(used.len());
    let mut zs = Vec::with_capacity(used.len());
    let mut tail_error: f64 = 0.0;
    for &s in used {
        let terms = spec.paired().map(|(p, n)| p.powf(s) - n.powf(s));
        match sum_series(terms, spec.paired_len(), spec.tail_remainder(s), tol.cauchy) {
            TraceEstimate::Finite { value, error } => {
                hs.push(s - 1.0);
                zs.push(value);
                tail_error = tail_error.max(error);
            }
            d @ TraceEstimate::Divergent { .. } => return Ok(d),
        }
    }
    let (value, increment) = neville_at_zero(&hs, &zs);
    if increment.abs() > tol.zeta * value.abs().max(1.0) {
        return Ok(TraceEstimate::Divergent { partial: value, spread: increment.abs() });
    }
    Ok(TraceEstimate::Finite { value, error: increment.abs() + tail_error })
}
