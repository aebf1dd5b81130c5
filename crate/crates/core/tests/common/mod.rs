//! Random algebra paths, gauge paths and connections shared by the
//! integration suites.
#![allow(dead_code)]

use std::f64::consts::PI;

use focalis::liegroup::{expm, AlgebraPath, CMat, GaugePath, GroupName};
use nalgebra::{Complex, DVector};
use rand::Rng;

pub fn random_element(group: GroupName, rng: &mut impl Rng, max_norm: f64) -> CMat {
    let alg = group.algebra();
    let v = DVector::from_fn(alg.dim(), |_, _| rng.random_range(-1.0..1.0));
    let x = alg.from_coords(&v);
    let target = rng.random_range(0.0..max_norm);
    let n = x.norm();
    if n == 0.0 {
        x
    } else {
        x * Complex::new(target / n, 0.0)
    }
}

/// Smooth path `Σ_k (A_k cos 2πkt + B_k sin 2πkt)`, `k = 0..=2`.
pub struct SmoothField {
    pub terms: Vec<(CMat, CMat)>,
}

impl SmoothField {
    pub fn random(group: GroupName, rng: &mut impl Rng, amplitude: f64) -> Self {
        Self {
            terms: (0..3)
                .map(|_| (random_element(group, rng, amplitude), random_element(group, rng, amplitude)))
                .collect(),
        }
    }

    pub fn at(&self, t: f64) -> CMat {
        let n = self.terms[0].0.nrows();
        let mut out = CMat::zeros(n, n);
        for (k, (a, b)) in self.terms.iter().enumerate() {
            let w = 2.0 * PI * k as f64 * t;
            out += a * Complex::new(w.cos(), 0.0) + b * Complex::new(w.sin(), 0.0);
        }
        out
    }

    pub fn sample(&self, group: GroupName, intervals: usize, speed: f64) -> AlgebraPath {
        let alg = group.algebra();
        AlgebraPath::from_fn(group, intervals, speed, |t| alg.project(&self.at(t)).unwrap()).unwrap()
    }
}

/// `exp(sin(πt)X)·exp(sin(2πt)Y)`: a based loop.
pub fn random_loop(group: GroupName, rng: &mut impl Rng, intervals: usize) -> GaugePath {
    let (x, y) = (random_element(group, rng, 1.5), random_element(group, rng, 1.5));
    GaugePath::from_fn(group, intervals, |t| {
        let (a, b) = ((PI * t).sin(), (2.0 * PI * t).sin());
        // sin(π) is not exactly zero; pin the endpoints.
        let a = if t == 0.0 || t == 1.0 { 0.0 } else { a };
        expm(&(&x * Complex::new(a, 0.0))) * expm(&(&y * Complex::new(b, 0.0)))
    })
    .unwrap()
}

/// `g0·exp(tX)·exp(sin(2πt)Y)`: a gauge path with arbitrary endpoints.
pub fn random_gauge(group: GroupName, rng: &mut impl Rng, intervals: usize) -> GaugePath {
    let g0 = expm(&random_element(group, rng, 3.0));
    let (x, y) = (random_element(group, rng, 1.5), random_element(group, rng, 1.0));
    GaugePath::from_fn(group, intervals, |t| {
        &g0 * expm(&(&x * Complex::new(t, 0.0))) * expm(&(&y * Complex::new((2.0 * PI * t).sin(), 0.0)))
    })
    .unwrap()
}
