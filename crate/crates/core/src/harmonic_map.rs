//! Equivariant discrete harmonic maps from the triangulated surface into
//! H², for a conformal structure given by a Beltrami coefficient.
//!
//! A map stores one disk point per logical dof; the image of a boundary
//! copy `v` is `ρ(γ_v)·x[dof(v)]`, so equivariance holds by construction.
//! The discrete energy is `½ Σ_e w_e d(f(e₊), f(e₋))²` with cotangent
//! weights of the sheared triangles. It is minimised by Riemannian Newton
//! steps (block-preconditioned CG on the exact Hessian) with a backtracking
//! line search on the energy.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disk::{self, Mobius};
use crate::sparse::{pcg, Triplets};
use crate::surface::{cotan_weights, FuchsianGroup, SurfaceMesh};
use crate::{Error, Result};

/// Images of identified vertices may disagree with `ρ(γ)f(rep)` by this
/// much when a map is built from per-vertex values.
const EQUIVARIANCE_TOL: f64 = 1e-9;
/// Images must stay this far inside the unit disk.
const DISK_MARGIN: f64 = 1e-12;

type Block = [[f64; 2]; 2];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquivariantMap {
    /// Image of each dof representative.
    pub points: Vec<Complex64>,
    pub target: FuchsianGroup,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EnergyValue {
    pub value: f64,
    /// Largest per-dof Riemannian gradient norm.
    pub gradient_norm: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Stop when the per-dof gradient norm is below `tol_rel · E`.
    pub tol_rel: f64,
    pub max_iterations: usize,
    pub cg_max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol_rel: 1e-9,
            max_iterations: 100_000,
            cg_max_iterations: 20_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct HarmonicSolution {
    pub map: EquivariantMap,
    pub energy: EnergyValue,
    pub iterations: usize,
    /// Energy before each iteration and after the last.
    pub energy_history: Vec<f64>,
}

impl EquivariantMap {
    /// `f(v) = v`, equivariant for the domain group itself.
    pub fn identity(mesh: &SurfaceMesh) -> Self {
        Self {
            points: mesh
                .representatives
                .iter()
                .map(|&v| mesh.vertices[v])
                .collect(),
            target: mesh.group.clone(),
        }
    }

    /// Builds a map from one value per mesh vertex, checking that copies of
    /// a dof are related by the target group.
    pub fn from_vertex_values(
        mesh: &SurfaceMesh,
        target: &FuchsianGroup,
        values: &[Complex64],
    ) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(Error::Invalid("one value per vertex expected".into()));
        }
        let map = Self {
            points: mesh.representatives.iter().map(|&v| values[v]).collect(),
            target: target.clone(),
        };
        map.check_inside()?;
        let images = map.vertex_images(mesh);
        for (v, (a, b)) in images.iter().zip(values).enumerate() {
            let d = disk::distance(*a, *b);
            if !(d <= EQUIVARIANCE_TOL) {
                return Err(Error::NotEquivariant(format!(
                    "vertex {v} is {d:e} away from the image of its representative"
                )));
            }
        }
        Ok(map)
    }

    fn check_inside(&self) -> Result<()> {
        for p in &self.points {
            let r = p.norm();
            if !(r < 1.0 - DISK_MARGIN) {
                return Err(Error::LeftDisk(r));
            }
        }
        Ok(())
    }

    pub fn vertex_transforms(&self, mesh: &SurfaceMesh) -> Vec<Mobius> {
        mesh.words.iter().map(|w| self.target.eval(w)).collect()
    }

    /// Image of every mesh vertex.
    pub fn vertex_images(&self, mesh: &SurfaceMesh) -> Vec<Complex64> {
        self.vertex_transforms(mesh)
            .iter()
            .enumerate()
            .map(|(v, g)| g.apply(self.points[mesh.dof[v]]))
            .collect()
    }

    /// `max d(f(γz), ρ(γ) f(z))` over identified vertex pairs.
    pub fn equivariance_defect(&self, mesh: &SurfaceMesh) -> f64 {
        let images = self.vertex_images(mesh);
        mesh.identifications
            .iter()
            .map(|id| {
                let g = self.target.eval(&id.word);
                disk::distance(images[id.vertex], g.apply(images[id.representative]))
            })
            .fold(0.0, f64::max)
    }

    /// Moves every dof by a random tangent vector of length ≤ `amplitude`.
    pub fn perturbed(&self, amplitude: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = self
            .points
            .iter()
            .map(|&p| {
                let v = Complex64::from_polar(
                    amplitude * rng.gen::<f64>(),
                    2.0 * std::f64::consts::PI * rng.gen::<f64>(),
                );
                disk::exp(p, v)
            })
            .collect();
        Self {
            points,
            target: self.target.clone(),
        }
    }

    /// `max_i d(x_i, y_i)`.
    pub fn sup_distance(&self, other: &EquivariantMap) -> f64 {
        self.points
            .iter()
            .zip(&other.points)
            .map(|(a, b)| disk::distance(*a, *b))
            .fold(0.0, f64::max)
    }

    /// Plain-text dump: one line `vertex re im` per dof representative.
    pub fn to_table(&self, mesh: &SurfaceMesh) -> String {
        let mut s = String::from("# vertex re im\n");
        for (i, p) in self.points.iter().enumerate() {
            let _ = writeln!(s, "{} {:e} {:e}", mesh.representatives[i], p.re, p.im);
        }
        s
    }
}

/// One edge term `½ w d(x_i, g x_j)²`.
#[derive(Clone, Copy, Debug)]
struct EdgeTerm {
    i: usize,
    j: usize,
    g: Mobius,
    w: f64,
}

fn edge_terms(
    mesh: &SurfaceMesh,
    mu: Option<&[Complex64]>,
    f: &EquivariantMap,
) -> Result<Vec<EdgeTerm>> {
    let weights = cotan_weights(mesh, mu)?;
    let transforms = f.vertex_transforms(mesh);
    Ok(mesh
        .edges
        .iter()
        .zip(&weights.per_edge)
        .map(|(&[a, b], &w)| EdgeTerm {
            i: mesh.dof[a],
            j: mesh.dof[b],
            g: transforms[a].inverse().compose(&transforms[b]),
            w,
        })
        .collect())
}

struct EdgeEval {
    energy: f64,
    grad_i: Complex64,
    grad_j: Complex64,
    /// Blocks `(ii, ij, jj)`.
    hess: Option<(Block, Block, Block)>,
}

fn outer(a: Complex64, b: Complex64) -> Block {
    [[a.re * b.re, a.re * b.im], [a.im * b.re, a.im * b.im]]
}

fn add(a: Block, b: Block, s: f64) -> Block {
    [
        [a[0][0] + s * b[0][0], a[0][1] + s * b[0][1]],
        [a[1][0] + s * b[1][0], a[1][1] + s * b[1][1]],
    ]
}

fn mul(a: Block, b: Block) -> Block {
    let mut c = [[0.0; 2]; 2];
    for r in 0..2 {
        for k in 0..2 {
            c[r][k] = a[r][0] * b[0][k] + a[r][1] * b[1][k];
        }
    }
    c
}

fn transpose(a: Block) -> Block {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

fn rotation(theta: f64) -> Block {
    let (s, c) = theta.sin_cos();
    [[c, -s], [s, c]]
}

/// `d coth d` and `d / sinh d`.
fn jacobi_factors(d: f64) -> (f64, f64) {
    if d < 1e-4 {
        let d2 = d * d;
        (1.0 + d2 / 3.0, 1.0 - d2 / 6.0)
    } else {
        (d / d.tanh(), d / d.sinh())
    }
}

fn eval_edge(t: &EdgeTerm, x: &[Complex64], hessian: bool) -> EdgeEval {
    let p = x[t.i];
    let xj = x[t.j];
    let q = t.g.apply(xj);
    let theta = t.g.frame_angle(xj);
    let lp = disk::log(p, q);
    let lq = disk::log(q, p);
    let d = lp.norm();
    let rot = Complex64::from_polar(1.0, -theta);
    let grad_i = -lp * t.w;
    let grad_j = -lq * rot * t.w;
    let hess = hessian.then(|| {
        let (u, v) = if d > 1e-12 {
            (lp / d, lq / d)
        } else {
            let u = Complex64::new(1.0, 0.0);
            (u, -disk::transport(p, q, u))
        };
        let i = Complex64::new(0.0, 1.0);
        let (c, s) = jacobi_factors(d);
        let hpp = add(outer(u, u), outer(i * u, i * u), c);
        let hqq = add(outer(v, v), outer(i * v, i * v), c);
        let hpq = add(outer(u, v), outer(i * u, i * v), s);
        let r = rotation(theta);
        let hij = mul(hpq, r);
        let hjj = mul(transpose(r), mul(hqq, r));
        let sc = |b: Block| add([[0.0; 2]; 2], b, t.w);
        (sc(hpp), sc(hij), sc(hjj))
    });
    EdgeEval {
        energy: 0.5 * t.w * d * d,
        grad_i,
        grad_j,
        hess,
    }
}

fn energy_only(terms: &[EdgeTerm], x: &[Complex64]) -> f64 {
    let parts: Vec<f64> = terms
        .par_chunks(4096)
        .map(|ch| {
            ch.iter()
                .map(|t| {
                    let d = disk::distance(x[t.i], t.g.apply(x[t.j]));
                    0.5 * t.w * d * d
                })
                .sum()
        })
        .collect();
    parts.iter().sum()
}

fn energy_and_gradient(terms: &[EdgeTerm], x: &[Complex64]) -> (f64, Vec<Complex64>) {
    let evals: Vec<EdgeEval> = terms.par_iter().map(|t| eval_edge(t, x, false)).collect();
    let mut g = vec![Complex64::new(0.0, 0.0); x.len()];
    let mut e = 0.0;
    for (t, ev) in terms.iter().zip(&evals) {
        e += ev.energy;
        g[t.i] += ev.grad_i;
        g[t.j] += ev.grad_j;
    }
    (e, g)
}

/// Discrete energy of `f` for the structure `μ` (per-vertex values).
pub fn discrete_energy(
    mesh: &SurfaceMesh,
    mu: Option<&[Complex64]>,
    f: &EquivariantMap,
) -> Result<EnergyValue> {
    if f.points.len() != mesh.num_dofs() {
        return Err(Error::Invalid("map does not match the mesh".into()));
    }
    f.check_inside()?;
    let terms = edge_terms(mesh, mu, f)?;
    let (value, g) = energy_and_gradient(&terms, &f.points);
    Ok(EnergyValue {
        value,
        gradient_norm: g.iter().map(|v| v.norm()).fold(0.0, f64::max),
    })
}

/// Energy-decreasing Newton iteration for the ρ-equivariant harmonic map.
pub fn solve_harmonic(
    mesh: &SurfaceMesh,
    mu: Option<&[Complex64]>,
    rho: &FuchsianGroup,
    init: Option<&EquivariantMap>,
    opts: &SolveOptions,
) -> Result<HarmonicSolution> {
    let mut map = match init {
        Some(m) => {
            if m.points.len() != mesh.num_dofs() {
                return Err(Error::Invalid("initial map does not match the mesh".into()));
            }
            EquivariantMap {
                points: m.points.clone(),
                target: rho.clone(),
            }
        }
        None => EquivariantMap {
            points: EquivariantMap::identity(mesh).points,
            target: rho.clone(),
        },
    };
    map.check_inside()?;
    let terms = edge_terms(mesh, mu, &map)?;
    let n = mesh.num_dofs();
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let evals: Vec<EdgeEval> = terms
            .par_iter()
            .map(|t| eval_edge(t, &map.points, true))
            .collect();
        let mut energy = 0.0;
        let mut grad = vec![Complex64::new(0.0, 0.0); n];
        let mut trip = Triplets::new(2 * n);
        let push = |trip: &mut Triplets, a: usize, b: usize, blk: &Block| {
            for r in 0..2 {
                for c in 0..2 {
                    trip.push(2 * a + r, 2 * b + c, blk[r][c]);
                }
            }
        };
        for (t, ev) in terms.iter().zip(&evals) {
            energy += ev.energy;
            grad[t.i] += ev.grad_i;
            grad[t.j] += ev.grad_j;
            let (hii, hij, hjj) = ev.hess.expect("requested");
            push(&mut trip, t.i, t.i, &hii);
            push(&mut trip, t.j, t.j, &hjj);
            push(&mut trip, t.i, t.j, &hij);
            push(&mut trip, t.j, t.i, &transpose(hij));
        }
        history.push(energy);
        let gnorm = grad.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if gnorm < opts.tol_rel * energy {
            return Ok(HarmonicSolution {
                map,
                energy: EnergyValue {
                    value: energy,
                    gradient_norm: gnorm,
                },
                iterations,
                energy_history: history,
            });
        }
        if iterations >= opts.max_iterations {
            return Err(Error::NoConvergence {
                what: "harmonic map",
                iterations,
                residual: gnorm / energy,
            });
        }
        iterations += 1;
        let hess = trip.build();
        let rhs: Vec<f64> = grad.iter().flat_map(|g| [-g.re, -g.im]).collect();
        let l2 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut step = vec![0.0; 2 * n];
        let cg_tol = (0.5 * l2.sqrt()).clamp(1e-12, 1e-2);
        pcg(&hess, &rhs, &mut step, 2, cg_tol, opts.cg_max_iterations);
        let mut slope: f64 = step.iter().zip(&rhs).map(|(s, r)| -s * r).sum();
        if !(slope < 0.0) {
            // Not a descent direction: fall back to steepest descent.
            step = rhs.clone();
            slope = -l2 * l2;
        }
        let mut t = 1.0;
        loop {
            let trial: Vec<Complex64> = map
                .points
                .iter()
                .enumerate()
                .map(|(i, &p)| disk::exp(p, Complex64::new(step[2 * i], step[2 * i + 1]) * t))
                .collect();
            let inside = trial.iter().all(|p| p.norm() < 1.0 - DISK_MARGIN);
            if inside {
                let e = energy_only(&terms, &trial);
                let noise = 1e-14 * energy.abs().max(1.0);
                if e <= energy + 1e-4 * t * slope
                    || (e <= energy + noise && t == 1.0 && gnorm < 1e-6 * energy)
                {
                    map.points = trial;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::NoConvergence {
                    what: "harmonic map line search",
                    iterations,
                    residual: gnorm / energy,
                });
            }
        }
    }
}

/// Hopf differential and harmonicity diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HopfReport {
    /// `⟨f_w, f_w⟩` per triangle, expressed against `(dz + μ dz̄)²`.
    pub per_triangle: Vec<Complex64>,
    /// `¼(|f_x|² + |f_y|²)` in the same coordinate; bounds `|Φ|`.
    pub density: Vec<f64>,
    /// `max |Φ| / density`.
    pub max_relative: f64,
    /// `Σ_v |∮ Φ dζ| / E` over dual cells of interior vertices.
    pub dbar_residual: f64,
}

/// Per-triangle Hopf differential and dual-cell circulation residual.
///
/// Each triangle is read in the conformal disk charts centred at its first
/// domain vertex and at its first image, so the identity map is exactly
/// conformal. The circulation uses the local holomorphic
/// coordinate `ζ` of `μ`, with `ζ_z` expanded to first order at the vertex
/// assuming `μ` is a multiple of `q̄/λ` for holomorphic `q`.
pub fn hopf_differential(
    mesh: &SurfaceMesh,
    mu: Option<&[Complex64]>,
    f: &EquivariantMap,
) -> Result<HopfReport> {
    let images = f.vertex_images(mesh);
    let zero = Complex64::new(0.0, 0.0);
    let mu_at = |v: usize| mu.map_or(zero, |m| m[v]);
    let energy = discrete_energy(mesh, mu, f)?.value;
    let mut per_triangle = Vec::with_capacity(mesh.triangles.len());
    let mut density = Vec::with_capacity(mesh.triangles.len());
    for t in &mesh.triangles {
        let z = [
            mesh.vertices[t[0]],
            mesh.vertices[t[1]],
            mesh.vertices[t[2]],
        ];
        let centroid = (z[0] + z[1] + z[2]) / 3.0;
        let mu_t = (mu_at(t[0]) + mu_at(t[1]) + mu_at(t[2])) / 3.0;
        let chart = Mobius::transvection(z[0]).inverse();
        let dpsi = chart.derivative(centroid);
        let mu_c = mu_t * dpsi / dpsi.conj();
        let w: Vec<Complex64> = z
            .iter()
            .map(|&p| {
                let c = chart.apply(p);
                c + mu_c * c.conj()
            })
            .collect();
        // Conformal chart of the target: frame components at f(a) are twice
        // the disk coordinates centred there.
        let target_chart = Mobius::transvection(images[t[0]]).inverse();
        let x: Vec<Complex64> = (0..3)
            .map(|k| target_chart.apply(images[t[k]]) * 2.0)
            .collect();
        // Solve [dw1 dw2] (as real 2-vectors) ↦ [x1 x2] for f_u, f_v.
        let (a, b) = (w[1] - w[0], w[2] - w[0]);
        let det = a.re * b.im - a.im * b.re;
        // Columns of the inverse domain matrix.
        let inv = [[b.im / det, -b.re / det], [-a.im / det, a.re / det]];
        let fu = x[1] * inv[0][0] + x[2] * inv[1][0];
        let fv = x[1] * inv[0][1] + x[2] * inv[1][1];
        let dot = |p: Complex64, q: Complex64| p.re * q.re + p.im * q.im;
        let phi = Complex64::new(dot(fu, fu) - dot(fv, fv), -2.0 * dot(fu, fv)) / 4.0;
        let e = (dot(fu, fu) + dot(fv, fv)) / 4.0;
        let scale = dpsi * dpsi;
        per_triangle.push(phi * scale);
        density.push(e * scale.norm());
    }
    let max_relative = per_triangle
        .iter()
        .zip(&density)
        .map(|(p, e)| if *e > 0.0 { p.norm() / e } else { 0.0 })
        .fold(0.0, f64::max);
    // Dual-cell circulation around interior vertices.
    let mut circ = vec![zero; mesh.num_vertices()];
    let boundary: Vec<bool> = mesh
        .vertices
        .iter()
        .map(|&z| on_polygon_boundary(mesh, z))
        .collect();
    for (ti, t) in mesh.triangles.iter().enumerate() {
        let mu_t = (mu_at(t[0]) + mu_at(t[1]) + mu_at(t[2])) / 3.0;
        let centroid = (mesh.vertices[t[0]] + mesh.vertices[t[1]] + mesh.vertices[t[2]]) / 3.0;
        for k in 0..3 {
            let v = t[k];
            if boundary[v] {
                continue;
            }
            let zv = mesh.vertices[v];
            let ma = (zv + mesh.vertices[t[(k + 1) % 3]]) / 2.0;
            let mb = (zv + mesh.vertices[t[(k + 2) % 3]]) / 2.0;
            let dz = mb - ma;
            let mu_z = -mu_at(v) * disk::d_log_area_density(zv);
            let zeta_z = (mu_z * (centroid - zv).conj()).exp();
            circ[v] += per_triangle[ti] / zeta_z * (dz + mu_t * dz.conj());
        }
    }
    let dbar_residual = circ.iter().map(|c| c.norm()).sum::<f64>() / energy;
    Ok(HopfReport {
        per_triangle,
        density,
        max_relative,
        dbar_residual,
    })
}

fn on_polygon_boundary(mesh: &SurfaceMesh, z: Complex64) -> bool {
    (0..8).any(|k| {
        let (c, r) = mesh.octagon.side_circle(k);
        ((z - c).norm() - r).abs() < 1e-9
    })
}
