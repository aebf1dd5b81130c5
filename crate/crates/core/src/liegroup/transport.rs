//! Sampled algebra-valued paths, their parallel transport `g' = u·g`, gauge
//! paths, and connections along a curve in a trivialized bundle.
//!
//! A connection along a curve of constant speed `a` is stored through its
//! coefficient `α(t)` in a fixed trivializing section, normalized per unit
//! speed: the horizontal lift through the identity solves `h' = −a·α·h`.
//! The holonomy element relative to a reference connection `β` is
//! `k(1)⁻¹·h(1)` where `k' = −a·β·k`, and the pull-back along the
//! `β`-horizontal lift is `μ(t) = −a·Ad(k(t)⁻¹)(α(t) − β(t))`.

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use super::{expm, CMat, GroupName, LieError};

const ALGEBRA_TOL: f64 = 1e-12;
const GROUP_TOL: f64 = 1e-10;

/// How a sampled path is evaluated between samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Linear,
    /// Four-point Lagrange cubic on the samples around each interval
    /// (shifted inward at the ends).
    #[default]
    Cubic,
    /// Left-continuous step: the value at `t_k` holds on `[t_k, t_{k+1})`.
    Step,
}

#[derive(Serialize, Deserialize)]
struct RawPath {
    group: GroupName,
    samples: Vec<(f64, Vec<[f64; 2]>)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    speed: Option<f64>,
}

fn decode(raw: &RawPath) -> Result<Vec<CMat>, LieError> {
    let n = raw.group.matrix_size();
    let s = raw.samples.len();
    if s < 2 {
        return Err(LieError::Path(format!("need at least 2 samples, got {s}")));
    }
    raw.samples
        .iter()
        .enumerate()
        .map(|(k, (t, entries))| {
            let expected = k as f64 / (s - 1) as f64;
            if (t - expected).abs() > 1e-9 {
                return Err(LieError::Path(format!("sample {k} at t = {t}, expected uniform t = {expected}")));
            }
            if entries.len() != n * n {
                return Err(LieError::Path(format!("sample {k} has {} entries, expected {}", entries.len(), n * n)));
            }
            Ok(CMat::from_row_iterator(n, n, entries.iter().map(|[re, im]| Complex::new(*re, *im))))
        })
        .collect()
}

fn encode(group: GroupName, samples: &[CMat], speed: Option<f64>) -> RawPath {
    let s = samples.len() - 1;
    RawPath {
        group,
        samples: samples
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let entries = (0..m.nrows())
                    .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
                    .map(|(i, j)| [m[(i, j)].re, m[(i, j)].im])
                    .collect();
                (k as f64 / s as f64, entries)
            })
            .collect(),
        speed,
    }
}

/// Samples `u(t_k)`, `t_k = k/S`, of a path in the Lie algebra, with the speed
/// of the underlying base curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPath", into = "RawPath")]
pub struct AlgebraPath {
    group: GroupName,
    samples: Vec<CMat>,
    speed: f64,
}

/// Connection coefficients along a curve share the path representation.
pub type ConnectionPath = AlgebraPath;

impl TryFrom<RawPath> for AlgebraPath {
    type Error = LieError;
    fn try_from(raw: RawPath) -> Result<Self, LieError> {
        let samples = decode(&raw)?;
        AlgebraPath::new(raw.group, samples, raw.speed.unwrap_or(1.0))
    }
}

impl From<AlgebraPath> for RawPath {
    fn from(p: AlgebraPath) -> Self {
        encode(p.group, &p.samples, Some(p.speed))
    }
}

impl AlgebraPath {
    pub fn new(group: GroupName, samples: Vec<CMat>, speed: f64) -> Result<Self, LieError> {
        if samples.len() < 2 {
            return Err(LieError::Path(format!("need at least 2 samples, got {}", samples.len())));
        }
        if !(speed.is_finite() && speed > 0.0) {
            return Err(LieError::Path(format!("speed must be positive, got {speed}")));
        }
        let alg = group.algebra();
        for (index, x) in samples.iter().enumerate() {
            let residual = alg.membership_residual(x)?;
            if residual > ALGEBRA_TOL {
                return Err(LieError::NotInAlgebra { index, residual });
            }
        }
        Ok(Self { group, samples, speed })
    }

    /// Samples `f(k/S)` for `k = 0..=S`.
    pub fn from_fn(group: GroupName, intervals: usize, speed: f64, f: impl Fn(f64) -> CMat) -> Result<Self, LieError> {
        let samples = (0..=intervals).map(|k| f(k as f64 / intervals as f64)).collect();
        Self::new(group, samples, speed)
    }

    pub fn constant(group: GroupName, x: CMat, intervals: usize) -> Result<Self, LieError> {
        Self::new(group, vec![x; intervals + 1], 1.0)
    }

    pub fn zero(group: GroupName, intervals: usize, speed: f64) -> Self {
        let n = group.matrix_size();
        Self { group, samples: vec![CMat::zeros(n, n); intervals + 1], speed }
    }

    pub fn group(&self) -> GroupName {
        self.group
    }

    pub fn samples(&self) -> &[CMat] {
        &self.samples
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    /// Number of sample intervals `S`.
    pub fn intervals(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn at(&self, t: f64, mode: Interpolation) -> CMat {
        let s = self.intervals();
        let x = (t.clamp(0.0, 1.0) * s as f64).min(s as f64);
        let k = (x.floor() as usize).min(s - 1);
        match mode {
            Interpolation::Step => self.samples[k].clone(),
            Interpolation::Linear => {
                let w = x - k as f64;
                &self.samples[k] * Complex::new(1.0 - w, 0.0) + &self.samples[k + 1] * Complex::new(w, 0.0)
            }
            Interpolation::Cubic if s < 3 => self.at(t, Interpolation::Linear),
            Interpolation::Cubic => {
                let first = k.saturating_sub(1).min(s - 3);
                let w = x - first as f64;
                let nodes = [0.0, 1.0, 2.0, 3.0];
                let mut out = CMat::zeros(self.samples[0].nrows(), self.samples[0].ncols());
                for (i, xi) in nodes.iter().enumerate() {
                    let l: f64 = nodes
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, xj)| (w - xj) / (xi - xj))
                        .product();
                    out += &self.samples[first + i] * Complex::new(l, 0.0);
                }
                out
            }
        }
    }

    fn scaled(&self, factor: f64) -> Self {
        let f = Complex::new(factor, 0.0);
        Self { group: self.group, samples: self.samples.iter().map(|x| x * f).collect(), speed: self.speed }
    }

    fn check_grid(&self, other_len: usize) -> Result<(), LieError> {
        if self.samples.len() != other_len {
            return Err(LieError::GridMismatch { left: self.samples.len(), right: other_len });
        }
        Ok(())
    }
}

/// Samples of a path in the group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPath", into = "RawPath")]
pub struct GaugePath {
    group: GroupName,
    samples: Vec<CMat>,
}

impl TryFrom<RawPath> for GaugePath {
    type Error = LieError;
    fn try_from(raw: RawPath) -> Result<Self, LieError> {
        let samples = decode(&raw)?;
        GaugePath::new(raw.group, samples)
    }
}

impl From<GaugePath> for RawPath {
    fn from(p: GaugePath) -> Self {
        encode(p.group, &p.samples, None)
    }
}

impl GaugePath {
    pub fn new(group: GroupName, samples: Vec<CMat>) -> Result<Self, LieError> {
        if samples.len() < 5 {
            return Err(LieError::Path(format!("gauge paths need at least 5 samples, got {}", samples.len())));
        }
        for (index, g) in samples.iter().enumerate() {
            let residual = group.membership_residual(g);
            if residual > GROUP_TOL {
                return Err(LieError::NotInGroup { index, residual });
            }
        }
        Ok(Self { group, samples })
    }

    pub fn from_fn(group: GroupName, intervals: usize, f: impl Fn(f64) -> CMat) -> Result<Self, LieError> {
        Self::new(group, (0..=intervals).map(|k| f(k as f64 / intervals as f64)).collect())
    }

    pub fn samples(&self) -> &[CMat] {
        &self.samples
    }

    /// `(g(0), g(1))`.
    pub fn endpoints(&self) -> (&CMat, &CMat) {
        (&self.samples[0], &self.samples[self.samples.len() - 1])
    }

    /// `g'(t_k)` by five-point differences: centered in the interior,
    /// one-sided of the same order near the ends.
    pub fn derivative(&self) -> Vec<CMat> {
        let s = self.samples.len() - 1;
        let g = &self.samples;
        let combo = |idx: [usize; 5], w: [f64; 5]| {
            idx.iter()
                .zip(w)
                .fold(CMat::zeros(g[0].nrows(), g[0].ncols()), |acc, (&i, c)| acc + &g[i] * Complex::new(c, 0.0))
                * Complex::new(s as f64 / 12.0, 0.0)
        };
        (0..=s)
            .map(|k| match k {
                0 => combo([0, 1, 2, 3, 4], [-25.0, 48.0, -36.0, 16.0, -3.0]),
                1 => combo([0, 1, 2, 3, 4], [-3.0, -10.0, 18.0, -6.0, 1.0]),
                k if k == s - 1 => combo([s, s - 1, s - 2, s - 3, s - 4], [3.0, 10.0, -18.0, 6.0, -1.0]),
                k if k == s => combo([s, s - 1, s - 2, s - 3, s - 4], [25.0, -48.0, 36.0, -16.0, 3.0]),
                k => combo([k - 2, k - 1, k + 1, k + 2, k], [1.0, -8.0, 8.0, -1.0, 0.0]),
            })
            .collect()
    }
}

/// Every iterate of the midpoint-exponential scheme
/// `g_{k+1} = exp(h·u(t_k + h/2))·g_k`, `g_0 = I`.
pub fn transport_steps(u: &AlgebraPath, steps: usize, mode: Interpolation) -> Result<Vec<CMat>, LieError> {
    let min = 2 * u.intervals();
    if steps < min {
        return Err(LieError::Steps { min, got: steps });
    }
    let n = u.group.matrix_size();
    let h = 1.0 / steps as f64;
    let mut g = CMat::identity(n, n);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(g.clone());
    for k in 0..steps {
        let mid = u.at((k as f64 + 0.5) * h, mode);
        g = expm(&(mid * Complex::new(h, 0.0))) * g;
        out.push(g.clone());
    }
    Ok(out)
}

/// `φ(u) = g_u(1)` with the default (cubic) interpolation between samples.
pub fn transport(u: &AlgebraPath, steps: usize) -> Result<CMat, LieError> {
    transport_with(u, steps, Interpolation::default())
}

pub fn transport_with(u: &AlgebraPath, steps: usize, mode: Interpolation) -> Result<CMat, LieError> {
    Ok(transport_steps(u, steps, mode)?.pop().expect("nonempty"))
}

/// Transport of an analytically given field `u(t)` of `size × size` matrices.
pub fn transport_fn(size: usize, steps: usize, u: impl Fn(f64) -> CMat) -> CMat {
    let h = 1.0 / steps as f64;
    let mut g = CMat::identity(size, size);
    for k in 0..steps {
        g = expm(&(u((k as f64 + 0.5) * h) * Complex::new(h, 0.0))) * g;
    }
    g
}

/// `(g·u)(t) = Ad(g(t))u(t) + g'(t)g(t)⁻¹`, projected back onto the algebra.
/// With this action `φ(g·u) = g(1)·φ(u)·g(0)⁻¹`.
pub fn gauge_act(g: &GaugePath, u: &AlgebraPath) -> Result<AlgebraPath, LieError> {
    if g.group != u.group {
        return Err(LieError::Path(format!("gauge path in {} acts on a path in {}", g.group, u.group)));
    }
    u.check_grid(g.samples.len())?;
    let alg = u.group.algebra();
    let dg = g.derivative();
    let samples = g
        .samples
        .iter()
        .zip(&dg)
        .zip(&u.samples)
        .map(|((gk, dgk), uk)| {
            let inv = gk.adjoint();
            alg.project(&(gk * uk * &inv + dgk * &inv))
        })
        .collect::<Result<Vec<_>, _>>()?;
    AlgebraPath::new(u.group, samples, u.speed)
}

/// Gauge transform of connection coefficients,
/// `α ↦ Ad(g)α − a⁻¹·g'g⁻¹`; for a trivial reference connection the holonomy
/// becomes `g(1)·hol·g(0)⁻¹`.
pub fn gauge_connection(g: &GaugePath, omega: &ConnectionPath) -> Result<ConnectionPath, LieError> {
    let negated = omega.scaled(-omega.speed);
    let acted = gauge_act(g, &negated)?;
    Ok(AlgebraPath { speed: omega.speed, ..acted.scaled(-1.0 / omega.speed) })
}

fn check_pair(omega: &ConnectionPath, omega0: &ConnectionPath) -> Result<(), LieError> {
    if omega.group != omega0.group {
        return Err(LieError::Path(format!("connections in {} and {}", omega.group, omega0.group)));
    }
    omega.check_grid(omega0.samples.len())?;
    if (omega.speed - omega0.speed).abs() > 1e-12 * omega.speed {
        return Err(LieError::Path(format!("speeds differ: {} vs {}", omega.speed, omega0.speed)));
    }
    Ok(())
}

/// `μ(t_k) = −a·Ad(k(t_k)⁻¹)(α(t_k) − β(t_k))` along the horizontal lift `k`
/// of the reference connection, which is integrated with `steps` steps.
pub fn pullback_connection(omega: &ConnectionPath, omega0: &ConnectionPath, steps: usize) -> Result<AlgebraPath, LieError> {
    check_pair(omega, omega0)?;
    let s = omega.intervals();
    let per = steps.div_ceil(s).max(2);
    let lift = transport_steps(&omega0.scaled(-omega0.speed), per * s, Interpolation::default())?;
    let a = Complex::new(-omega.speed, 0.0);
    let alg = omega.group.algebra();
    let samples = (0..=s)
        .map(|k| {
            let kk = &lift[k * per];
            alg.project(&(kk.adjoint() * (&omega.samples[k] - &omega0.samples[k]) * kk * a))
        })
        .collect::<Result<Vec<_>, _>>()?;
    AlgebraPath::new(omega.group, samples, omega.speed)
}

/// `hol(ω) = k(1)⁻¹·h(1)`: the transport of the reference connection followed
/// by `hol` equals the transport of `ω`.
pub fn holonomy_element(omega: &ConnectionPath, omega0: &ConnectionPath, steps: usize) -> Result<CMat, LieError> {
    check_pair(omega, omega0)?;
    let h = transport(&omega.scaled(-omega.speed), steps)?;
    let k = transport(&omega0.scaled(-omega0.speed), steps)?;
    Ok(k.adjoint() * h)
}
