use std::collections::HashSet;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::group::{inverse_index, mobius_key, FuchsianGroup, Word};
use super::mesh::SurfaceMesh;
use crate::disk::{self, Mobius};
use crate::{Error, Result};

/// Terms with `|γ'(z)|²` below this are dropped from the theta series.
pub const THETA_CUTOFF: f64 = 1e-14;

/// Highest supported polynomial degree.
pub const MAX_POLY_DEGREE: usize = 6;

/// Weight-4 automorphic form sampled at the mesh vertices.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuadDifferentialSample {
    pub values: Vec<Complex64>,
    pub word_length: usize,
    /// `max |q(γz)γ'(z)² − q(z)| / max|q|` over identified vertex pairs.
    pub invariance_residual: f64,
    /// Number of (element, vertex) terms skipped by the magnitude cutoff.
    pub skipped_terms: usize,
    pub group_elements: usize,
}

/// Beltrami coefficient `μ dz̄/dz` sampled at the mesh vertices.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BeltramiSample {
    pub values: Vec<Complex64>,
    pub sup_norm: f64,
    /// Factor applied to `q̄/λ` to reach the sup-norm bound.
    pub scale: f64,
    /// `max |μ(γz)·conj(γ')/γ' − μ(z)| / ‖μ‖∞` over identified pairs.
    pub invariance_residual: f64,
}

impl BeltramiSample {
    pub fn zero(n: usize) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); n],
            sup_norm: 0.0,
            scale: 1.0,
            invariance_residual: 0.0,
        }
    }

    /// `c·μ`, bookkeeping scaled accordingly.
    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            values: self.values.iter().map(|m| m * c).collect(),
            sup_norm: self.sup_norm * c.norm(),
            scale: self.scale * c.norm(),
            invariance_residual: self.invariance_residual,
        }
    }

    /// `self + c·other`.
    pub fn add_scaled(&self, other: &BeltramiSample, c: Complex64) -> Self {
        let values: Vec<Complex64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b * c)
            .collect();
        let sup_norm = values.iter().map(|m| m.norm()).fold(0.0, f64::max);
        Self {
            values,
            sup_norm,
            scale: 1.0,
            invariance_residual: self.invariance_residual.max(other.invariance_residual),
        }
    }
}

/// Distinct group elements of word length at most `max_len`, shortest
/// words first. Elements are compared as `±` matrices.
pub fn enumerate_group(group: &FuchsianGroup, max_len: usize) -> Vec<(Word, Mobius)> {
    let mut seen = HashSet::new();
    let id = Mobius::identity();
    seen.insert(mobius_key(&id, 1e8));
    let mut out = vec![(Vec::new(), id)];
    let mut frontier = vec![(Vec::<u8>::new(), id)];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for (w, m) in &frontier {
            for g in 0..8u8 {
                if w.last() == Some(&inverse_index(g)) {
                    continue;
                }
                let mg = m.compose(&group.generators[g as usize]);
                if seen.insert(mobius_key(&mg, 1e8)) {
                    let mut wg = w.clone();
                    wg.push(g);
                    next.push((wg, mg));
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn eval_poly(poly: &[Complex64], z: Complex64) -> Complex64 {
    poly.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

/// Truncated Poincaré series `q(z) = Σ_{|γ| ≤ L} poly(γz)·γ'(z)²` at every
/// mesh vertex.
pub fn poincare_theta_series(
    mesh: &SurfaceMesh,
    poly: &[Complex64],
    max_len: usize,
) -> Result<QuadDifferentialSample> {
    poincare_series(mesh, poly, max_len, 2)
}

/// Theta series of order `k`: `Σ_γ p(γz) γ'(z)^k`, a holomorphic
/// `k`-differential. Order 2 is [`poincare_theta_series`].
pub fn poincare_series(
    mesh: &SurfaceMesh,
    poly: &[Complex64],
    max_len: usize,
    order: u32,
) -> Result<QuadDifferentialSample> {
    if order < 2 {
        return Err(Error::Invalid("theta series needs order at least 2".into()));
    }
    if poly.len() > MAX_POLY_DEGREE + 1 {
        return Err(Error::Invalid(format!(
            "polynomial degree {} exceeds {MAX_POLY_DEGREE}",
            poly.len() - 1
        )));
    }
    let elements = enumerate_group(&mesh.group, max_len);
    let rows: Vec<(Complex64, usize)> = mesh
        .vertices
        .par_iter()
        .map(|&z| {
            let mut sum = Complex64::new(0.0, 0.0);
            let mut skipped = 0;
            for (_, g) in &elements {
                let d = g.derivative(z);
                let d2 = d * d;
                if d2.norm() < THETA_CUTOFF {
                    skipped += 1;
                    continue;
                }
                sum += eval_poly(poly, g.apply(z)) * d.powu(order);
            }
            (sum, skipped)
        })
        .collect();
    let values: Vec<Complex64> = rows.iter().map(|r| r.0).collect();
    if values
        .iter()
        .any(|v| !v.re.is_finite() || !v.im.is_finite())
    {
        return Err(Error::Unbounded("non-finite theta series value".into()));
    }
    let skipped_terms = rows.iter().map(|r| r.1).sum();
    let invariance_residual = differential_invariance_residual(mesh, &values, order);
    Ok(QuadDifferentialSample {
        values,
        word_length: max_len,
        invariance_residual,
        skipped_terms,
        group_elements: elements.len(),
    })
}

/// `max |q(v)·γ'(z)² − q(z)| / max|q|` with `v = γz` over identifications.
pub fn quad_invariance_residual(mesh: &SurfaceMesh, q: &[Complex64]) -> f64 {
    differential_invariance_residual(mesh, q, 2)
}

/// As [`quad_invariance_residual`] for a `k`-differential.
pub fn differential_invariance_residual(mesh: &SurfaceMesh, q: &[Complex64], order: u32) -> f64 {
    let scale = q.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    mesh.identifications
        .iter()
        .map(|id| {
            let g = mesh.group.eval(&id.word);
            let d = g.derivative(mesh.vertices[id.representative]);
            (q[id.vertex] * d.powu(order) - q[id.representative]).norm()
        })
        .fold(0.0, f64::max)
        / scale
}

/// `max |μ(v)·conj(γ')/γ' − μ(z)| / ‖μ‖∞` with `v = γz` over identifications.
pub fn beltrami_invariance_residual(mesh: &SurfaceMesh, mu: &[Complex64]) -> f64 {
    let scale = mu.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    mesh.identifications
        .iter()
        .map(|id| {
            let g = mesh.group.eval(&id.word);
            let d = g.derivative(mesh.vertices[id.representative]);
            (mu[id.vertex] * d.conj() / d - mu[id.representative]).norm()
        })
        .fold(0.0, f64::max)
        / scale
}

/// Harmonic Beltrami coefficient `μ = s·q̄/λ`, with `s ≤ 1` chosen so that
/// `‖μ‖∞ ≤ 1/2`.
pub fn beltrami_from_quaddiff(
    mesh: &SurfaceMesh,
    q: &QuadDifferentialSample,
) -> Result<BeltramiSample> {
    if q.values.len() != mesh.num_vertices() {
        return Err(Error::Invalid(
            "quadratic differential has wrong length".into(),
        ));
    }
    let raw: Vec<Complex64> = q
        .values
        .iter()
        .zip(&mesh.vertices)
        .map(|(v, &z)| v.conj() / disk::area_density(z))
        .collect();
    let sup = raw.iter().map(|m| m.norm()).fold(0.0, f64::max);
    if !sup.is_finite() {
        return Err(Error::Unbounded(format!("sup |q̄/λ| = {sup}")));
    }
    let scale = if sup > 0.5 { 0.5 / sup } else { 1.0 };
    let values: Vec<Complex64> = raw.iter().map(|m| m * scale).collect();
    let invariance_residual = beltrami_invariance_residual(mesh, &values);
    Ok(BeltramiSample {
        sup_norm: sup * scale,
        values,
        scale,
        invariance_residual,
    })
}
