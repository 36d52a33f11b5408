//! Energy over holomorphic disks in Teichmüller space.
//!
//! A disk is the family of structures with Beltrami coefficient
//! `μ(u) = μ_base + u μ₀`, `u = s + it`, which is holomorphic in `u`. For
//! `μ_base = 0` the first-order variation of the structure is
//! `H = ∂J/∂s = m dz̄⊗∂_z + m̄ dz⊗∂_z̄` with `m = 2iμ₀`, and `∂J/∂t = J₀H`.
//! As a real endomorphism in the `(x, y)` frame `H = [[m₁, m₂], [m₂, −m₁]]`.
//!
//! With `Aα = −α∘A` the Toledo integrands become, per triangle with
//! constant gradients,
//!
//! ```text
//! b = ∫ |m|² |df|²
//! a = −∫ ⟨∇f_s ∧ H df⟩ + ⟨∇f_t ∧ J₀H df⟩
//! α = 2 ∫ |∇_z̄ W|²
//! ρ = −∫ |f_z ∧ W|²          (curvature −1)
//! ```
//!
//! integrated against `dx dy`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disk::{self, Mobius};
use crate::harmonic_map::{solve_harmonic, EquivariantMap, SolveOptions};
use crate::surface::{BeltramiSample, FuchsianGroup, SurfaceMesh};
use crate::{Error, Result};

type C = Complex64;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn sup(v: &[C]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

#[derive(Clone, Debug)]
pub struct DiskScenario {
    /// Direction `μ₀`, one value per mesh vertex.
    pub mu0: Vec<C>,
    /// Centre of the disk; `None` is the base structure of the mesh.
    pub base_mu: Option<Vec<C>>,
    pub radius: f64,
    pub half_width: usize,
    pub target: FuchsianGroup,
    pub level: u32,
}

impl DiskScenario {
    pub fn new(mesh: &SurfaceMesh, mu0: &BeltramiSample, radius: f64, half_width: usize) -> Self {
        Self {
            mu0: mu0.values.clone(),
            base_mu: None,
            radius,
            half_width,
            target: mesh.group.clone(),
            level: mesh.level,
        }
    }

    pub fn step(&self) -> f64 {
        self.radius / self.half_width as f64
    }

    pub fn validate(&self, mesh: &SurfaceMesh) -> Result<()> {
        if mesh.level != self.level {
            return Err(Error::Invalid(format!(
                "scenario is for level {}, mesh is level {}",
                self.level, mesh.level
            )));
        }
        if self.mu0.len() != mesh.num_vertices() {
            return Err(Error::Invalid("μ₀ needs one value per vertex".into()));
        }
        if self.half_width == 0 || !(self.radius > 0.0) {
            return Err(Error::Invalid(
                "disk needs positive radius and half-width".into(),
            ));
        }
        let s = self.radius * sup(&self.mu0);
        if s >= 0.5 {
            return Err(Error::Invalid(format!("r·‖μ₀‖∞ = {s} must stay below 1/2")));
        }
        if let Some(base) = &self.base_mu {
            if base.len() != mesh.num_vertices() {
                return Err(Error::Invalid("base μ needs one value per vertex".into()));
            }
            if sup(base) + s >= 1.0 {
                return Err(Error::BeltramiTooLarge(sup(base) + s));
            }
        }
        Ok(())
    }

    pub fn mu_at(&self, u: C) -> Vec<C> {
        match &self.base_mu {
            Some(b) => b.iter().zip(&self.mu0).map(|(b, m)| b + u * m).collect(),
            None => self.mu0.iter().map(|m| u * m).collect(),
        }
    }
}

/// Energies on the `(2m+1)²` grid `u = h(i + i·j)`, `|i|, |j| ≤ m`.
#[derive(Clone, Debug)]
pub struct EnergySurface {
    pub half_width: usize,
    pub step: f64,
    pub values: Vec<f64>,
    /// Converged maps, empty for synthetic surfaces.
    pub maps: Vec<EquivariantMap>,
    /// Final relative gradient norm per cell.
    pub residuals: Vec<f64>,
}

impl EnergySurface {
    /// Grid sampled from a function, for checking the stencils.
    pub fn synthetic(half_width: usize, step: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        let m = half_width as i64;
        let mut values = Vec::new();
        for j in -m..=m {
            for i in -m..=m {
                values.push(f(i as f64 * step, j as f64 * step));
            }
        }
        let residuals = vec![0.0; values.len()];
        Self {
            half_width,
            step,
            values,
            maps: Vec::new(),
            residuals,
        }
    }

    fn index(&self, i: i64, j: i64) -> usize {
        let m = self.half_width as i64;
        assert!(
            i.abs() <= m && j.abs() <= m,
            "cell ({i}, {j}) outside the grid"
        );
        ((j + m) * (2 * m + 1) + (i + m)) as usize
    }

    pub fn energy(&self, i: i64, j: i64) -> f64 {
        self.values[self.index(i, j)]
    }

    pub fn map(&self, i: i64, j: i64) -> &EquivariantMap {
        &self.maps[self.index(i, j)]
    }

    pub fn centre_is_minimum(&self) -> bool {
        let e0 = self.energy(0, 0);
        self.values.iter().all(|&e| e >= e0)
    }

    /// `s,t,energy,residual` rows.
    pub fn to_csv(&self) -> String {
        let m = self.half_width as i64;
        let mut out = String::from("s,t,energy,residual\n");
        for j in -m..=m {
            for i in -m..=m {
                let k = self.index(i, j);
                out.push_str(&format!(
                    "{:.6},{:.6},{:.15e},{:.3e}\n",
                    i as f64 * self.step,
                    j as f64 * self.step,
                    self.values[k],
                    self.residuals[k]
                ));
            }
        }
        out
    }
}

/// Solves every cell of the disk. The `s = 0` column is solved outward from
/// the centre; rows are then solved in parallel, each outward from its
/// column cell.
pub fn energy_disk(
    mesh: &SurfaceMesh,
    scenario: &DiskScenario,
    opts: &SolveOptions,
) -> Result<EnergySurface> {
    scenario.validate(mesh)?;
    let m = scenario.half_width as i64;
    let h = scenario.step();
    let solve =
        |i: i64, j: i64, init: Option<&EquivariantMap>| -> Result<(f64, EquivariantMap, f64)> {
            let mu = scenario.mu_at(c(i as f64 * h, j as f64 * h));
            let mu_arg = if mu.iter().all(|x| *x == c(0.0, 0.0)) {
                None
            } else {
                Some(&mu[..])
            };
            let s = solve_harmonic(mesh, mu_arg, &scenario.target, init, opts).map_err(|e| {
                Error::Cell {
                    i,
                    j,
                    source: Box::new(e),
                }
            })?;
            let res = s.energy.gradient_norm / s.energy.value;
            Ok((s.energy.value, s.map, res))
        };
    let centre = solve(0, 0, None)?;
    let mut column = vec![None; (2 * m + 1) as usize];
    column[m as usize] = Some(centre);
    for dir in [1i64, -1] {
        for k in 1..=m {
            let j = dir * k;
            let prev = column[(j - dir + m) as usize]
                .as_ref()
                .expect("solved")
                .1
                .clone();
            column[(j + m) as usize] = Some(solve(0, j, Some(&prev))?);
        }
    }
    let rows: Vec<Vec<(f64, EquivariantMap, f64)>> = (-m..=m)
        .into_par_iter()
        .map(|j| -> Result<Vec<(f64, EquivariantMap, f64)>> {
            let mut row = vec![None; (2 * m + 1) as usize];
            row[m as usize] = column[(j + m) as usize].clone();
            for dir in [1i64, -1] {
                for k in 1..=m {
                    let i = dir * k;
                    let prev = row[(i - dir + m) as usize]
                        .as_ref()
                        .expect("solved")
                        .1
                        .clone();
                    row[(i + m) as usize] = Some(solve(i, j, Some(&prev))?);
                }
            }
            Ok(row.into_iter().map(|x| x.expect("solved")).collect())
        })
        .collect::<Result<_>>()?;
    let mut values = Vec::new();
    let mut maps = Vec::new();
    let mut residuals = Vec::new();
    for row in rows {
        for (e, f, r) in row {
            values.push(e);
            maps.push(f);
            residuals.push(r);
        }
    }
    if values.iter().any(|e| !e.is_finite()) {
        return Err(Error::Invalid("non-finite energy on the disk".into()));
    }
    Ok(EnergySurface {
        half_width: scenario.half_width,
        step: h,
        values,
        maps,
        residuals,
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FdLaplacian {
    pub value: f64,
    /// `|Δ_h − Δ_{2h}|/3`.
    pub error_estimate: f64,
    pub step: f64,
    pub inconclusive: bool,
}

fn five_point(e: impl Fn(i64, i64) -> f64, k: i64, h: f64) -> f64 {
    (e(k, 0) + e(-k, 0) + e(0, k) + e(0, -k) - 4.0 * e(0, 0)) / (k as f64 * h).powi(2)
}

fn richardson_laplacian(e: impl Fn(i64, i64) -> f64, h: f64) -> FdLaplacian {
    let l1 = five_point(&e, 1, h);
    let l2 = five_point(&e, 2, h);
    let err = (l1 - l2).abs() / 3.0;
    FdLaplacian {
        value: l1,
        error_estimate: err,
        step: h,
        inconclusive: err > l1.abs(),
    }
}

/// Five-point Laplacian at grid cell `(i, j)`.
pub fn fd_laplacian_at(surface: &EnergySurface, i: i64, j: i64) -> Result<FdLaplacian> {
    let m = surface.half_width as i64;
    if i.abs() + 2 > m || j.abs() + 2 > m {
        return Err(Error::Invalid(format!(
            "cell ({i}, {j}) needs two layers of neighbours"
        )));
    }
    Ok(richardson_laplacian(
        |a, b| surface.energy(i + a, j + b),
        surface.step,
    ))
}

pub fn fd_laplacian(surface: &EnergySurface) -> Result<FdLaplacian> {
    fd_laplacian_at(surface, 0, 0)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Criticality {
    /// Richardson-extrapolated `∂E/∂s`, `∂E/∂t`.
    pub ds: f64,
    pub dt: f64,
    /// `|D_h − D_{2h}|` over both directions.
    pub tolerance: f64,
    pub critical: bool,
}

pub fn criticality(surface: &EnergySurface) -> Result<Criticality> {
    if surface.half_width < 2 {
        return Err(Error::Invalid("criticality needs half-width ≥ 2".into()));
    }
    let h = surface.step;
    let d = |k: i64, s: bool| {
        let (p, q) = if s {
            ((k, 0), (-k, 0))
        } else {
            ((0, k), (0, -k))
        };
        (surface.energy(p.0, p.1) - surface.energy(q.0, q.1)) / (2.0 * k as f64 * h)
    };
    let (s1, s2, t1, t2) = (d(1, true), d(2, true), d(1, false), d(2, false));
    let ds = (4.0 * s1 - s2) / 3.0;
    let dt = (4.0 * t1 - t2) / 3.0;
    // Truncation scale plus the derivative noise of energies resolved to
    // about 1e-12 relative.
    let noise = 1e-12 * surface.energy(0, 0) / h;
    let tolerance = (s1 - s2).abs().max((t1 - t2).abs()) + noise;
    Ok(Criticality {
        ds,
        dt,
        tolerance,
        critical: ds.abs() < tolerance && dt.abs() < tolerance,
    })
}

/// Per-vertex tangent vectors `(f(k,0) ⊖ f(−k,0))/(2kh)` and the same in
/// `t`, in the orthonormal frame at `f(0,0)`.
fn variation_fields(
    mesh: &SurfaceMesh,
    surface: &EnergySurface,
    k: i64,
) -> (Vec<C>, Vec<C>, Vec<C>) {
    let f0 = surface.map(0, 0).vertex_images(mesh);
    let h2 = 2.0 * k as f64 * surface.step;
    let diff = |p: (i64, i64), q: (i64, i64)| -> Vec<C> {
        let a = surface.map(p.0, p.1).vertex_images(mesh);
        let b = surface.map(q.0, q.1).vertex_images(mesh);
        f0.iter()
            .zip(a.iter().zip(&b))
            .map(|(&o, (&x, &y))| (disk::log(o, x) - disk::log(o, y)) / h2)
            .collect()
    };
    let vs = diff((k, 0), (-k, 0));
    let vt = diff((0, k), (0, -k));
    (f0, vs, vt)
}

/// Raw integrals for one finite-difference step.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
struct Integrals {
    a: f64,
    b: f64,
    alpha: f64,
    rho: f64,
    gap_plus: f64,
    gap_minus: f64,
    scale: f64,
}

/// Complexified target vector as its two frame components.
type CVec = [C; 2];

fn grad(z: &[C; 3], q: [C; 3]) -> (C, C) {
    let (e1, e2) = (z[1] - z[0], z[2] - z[0]);
    let det = e1.re * e2.im - e1.im * e2.re;
    let (d1, d2) = (q[1] - q[0], q[2] - q[0]);
    (
        (d1 * e2.im - d2 * e1.im) / det,
        (d2 * e1.re - d1 * e2.re) / det,
    )
}

fn dot(x: C, y: C) -> f64 {
    (x * y.conj()).re
}

/// `V_s + i V_t` in components.
fn complexify(vs: C, vt: C) -> CVec {
    [c(vs.re, vt.re), c(vs.im, vt.im)]
}

fn norm2(v: &CVec) -> f64 {
    v[0].norm_sqr() + v[1].norm_sqr()
}

fn triangle_integrals(
    mesh: &SurfaceMesh,
    t: &[usize; 3],
    mu0: &[C],
    f0: &[C],
    vs: &[C],
    vt: &[C],
) -> Integrals {
    let z = t.map(|v| mesh.vertices[v]);
    let p = t.map(|v| f0[v]);
    // Chart centred at the image of the centroid.
    let to0 = Mobius::transvection(p[0]).inverse();
    let w0 = p.map(|x| to0.apply(x));
    let cen = (w0[0] + w0[1] + w0[2]) / 3.0;
    let chart = Mobius::transvection(cen).inverse().compose(&to0);
    let w = p.map(|x| chart.apply(x));
    let rot = p.map(|x| {
        let d = chart.derivative(x);
        d / d.norm()
    });
    let s = [0, 1, 2].map(|k| vs[t[k]] * rot[k]);
    let tv = [0, 1, 2].map(|k| vt[t[k]] * rot[k]);
    let area = 0.5 * ((z[1] - z[0]).conj() * (z[2] - z[0])).im;
    let (fx, fy) = grad(&z, w.map(|x| x * 2.0));
    let (sx, sy) = grad(&z, s);
    let (tx, ty) = grad(&z, tv);
    let vs_c = (s[0] + s[1] + s[2]) / 3.0;
    let vt_c = (tv[0] + tv[1] + tv[2]) / 3.0;
    let m = c(0.0, 2.0) * (mu0[t[0]] + mu0[t[1]] + mu0[t[2]]) / 3.0;
    let (m1, m2) = (m.re, m.im);

    let b = m.norm_sqr() * (fx.norm_sqr() + fy.norm_sqr());
    let hdf_x = -(fx * m1 + fy * m2);
    let hdf_y = -(fx * m2 - fy * m1);
    let jhdf_x = fx * m2 - fy * m1;
    let jhdf_y = -(fx * m1 + fy * m2);
    let a = -(dot(sx, hdf_y) - dot(sy, hdf_x) + dot(tx, jhdf_y) - dot(ty, jhdf_x));

    let wx = complexify(sx, tx);
    let wy = complexify(sy, ty);
    let dbar: CVec = [0, 1].map(|k| (wx[k] + c(0.0, 1.0) * wy[k]) * 0.5);
    let alpha = 2.0 * norm2(&dbar);
    let w_c = complexify(vs_c, vt_c);
    let fz: CVec = [c(fx.re, -fy.re) * 0.5, c(fx.im, -fy.im) * 0.5];
    let rho = -(fz[0] * w_c[1] - fz[1] * w_c[0]).norm_sqr();
    let mfz: CVec = [m * fz[0], m * fz[1]];
    let gp = norm2(&[dbar[0] - mfz[0], dbar[1] - mfz[1]]);
    let gm = norm2(&[dbar[0] + mfz[0], dbar[1] + mfz[1]]);
    Integrals {
        a: a * area,
        b: b * area,
        alpha: alpha * area,
        rho: rho * area,
        gap_plus: gp * area,
        gap_minus: gm * area,
        scale: norm2(&mfz) * area,
    }
}

fn integrals(mesh: &SurfaceMesh, mu0: &[C], f0: &[C], vs: &[C], vt: &[C]) -> Integrals {
    mesh.triangles
        .par_iter()
        .map(|t| triangle_integrals(mesh, t, mu0, f0, vs, vt))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Integrals::default(), |s, x| Integrals {
            a: s.a + x.a,
            b: s.b + x.b,
            alpha: s.alpha + x.alpha,
            rho: s.rho + x.rho,
            gap_plus: s.gap_plus + x.gap_plus,
            gap_minus: s.gap_minus + x.gap_minus,
            scale: s.scale + x.scale,
        })
}

fn check_toledo_inputs(mesh: &SurfaceMesh, surface: &EnergySurface, mu0: &[C]) -> Result<()> {
    if surface.half_width < 2 || surface.maps.is_empty() {
        return Err(Error::Invalid(
            "Toledo quantities need solved maps and half-width ≥ 2".into(),
        ));
    }
    if mu0.len() != mesh.num_vertices() {
        return Err(Error::Invalid("μ₀ needs one value per vertex".into()));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ToledoQuantities {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub rho: f64,
    pub laplacian_fd: FdLaplacian,
    pub step: f64,
    /// Richardson error estimates `|X_h − X_{2h}|/3`.
    pub err_a: f64,
    pub err_b: f64,
    pub err_alpha: f64,
    pub err_rho: f64,
}

impl ToledoQuantities {
    /// `|ΔE − (−a + b)|` against `max(5%, FD error)`.
    pub fn decomposition_defect(&self) -> (f64, f64) {
        let defect = (self.laplacian_fd.value - (self.b - self.a)).abs();
        let tol = (0.05 * self.laplacian_fd.value.abs())
            .max(self.laplacian_fd.error_estimate + self.err_a + self.err_b);
        (defect, tol)
    }

    /// Propagated tolerance for `a ≤ α + b/2`.
    pub fn eps_inequality(&self) -> f64 {
        self.err_a + self.err_alpha + 0.5 * self.err_b
    }

    /// Propagated tolerance for `α = a/2 + ρ`.
    pub fn eps_identity(&self) -> f64 {
        self.err_alpha + 0.5 * self.err_a + self.err_rho
    }

    /// The two tolerances with the mesh error added, estimated by the
    /// change from a coarser level: `(ε_inequality, ε_identity)`.
    pub fn eps_with_refinement(&self, coarse: &ToledoQuantities) -> (f64, f64) {
        let d = |x: f64, y: f64| (x - y).abs();
        let (da, db) = (d(self.a, coarse.a), d(self.b, coarse.b));
        let (dal, dr) = (d(self.alpha, coarse.alpha), d(self.rho, coarse.rho));
        (
            self.eps_inequality() + da + dal + 0.5 * db,
            self.eps_identity() + dal + 0.5 * da + dr,
        )
    }
}

/// `a, b, α, ρ` from the solved maps at the centre and `(±h, 0)`, `(0, ±h)`,
/// with Richardson estimates from `±2h`. Requires the disk to be centred at
/// the base structure (`μ_base = 0`).
pub fn toledo_quantities(
    mesh: &SurfaceMesh,
    surface: &EnergySurface,
    mu0: &[C],
) -> Result<ToledoQuantities> {
    check_toledo_inputs(mesh, surface, mu0)?;
    let at = |k: i64| {
        let (f0, vs, vt) = variation_fields(mesh, surface, k);
        integrals(mesh, mu0, &f0, &vs, &vt)
    };
    let (i1, i2) = (at(1), at(2));
    let r = |x: f64, y: f64| (x - y).abs() / 3.0;
    Ok(ToledoQuantities {
        a: i1.a,
        b: i1.b,
        alpha: i1.alpha,
        rho: i1.rho,
        laplacian_fd: fd_laplacian(surface)?,
        step: surface.step,
        err_a: r(i1.a, i2.a),
        err_b: r(i1.b, i2.b),
        err_alpha: r(i1.alpha, i2.alpha),
        err_rho: r(i1.rho, i2.rho),
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GapReport {
    /// `‖∇_z̄W − m f_z‖`.
    pub gap_plus: f64,
    /// `‖∇_z̄W + m f_z‖`.
    pub gap_minus: f64,
    /// `‖m f_z‖`.
    pub scale: f64,
    pub degenerate: bool,
}

impl GapReport {
    pub fn relative_min(&self) -> f64 {
        self.gap_plus.min(self.gap_minus) / self.scale
    }
}

/// L² distances of `d''W` from `±μ d'f`.
pub fn equality_locus_gap(
    mesh: &SurfaceMesh,
    surface: &EnergySurface,
    mu0: &[C],
) -> Result<GapReport> {
    check_toledo_inputs(mesh, surface, mu0)?;
    let (f0, vs, vt) = variation_fields(mesh, surface, 1);
    let i = integrals(mesh, mu0, &f0, &vs, &vt);
    let scale = i.scale.sqrt();
    Ok(GapReport {
        gap_plus: i.gap_plus.sqrt(),
        gap_minus: i.gap_minus.sqrt(),
        scale,
        degenerate: scale < 1e-12,
    })
}

/// Pointwise `ρ` integrand `−|f_z ∧ W|²` per triangle.
pub fn rho_density(mesh: &SurfaceMesh, surface: &EnergySurface) -> Result<Vec<f64>> {
    let zero = vec![c(0.0, 0.0); mesh.num_vertices()];
    check_toledo_inputs(mesh, surface, &zero)?;
    let (f0, vs, vt) = variation_fields(mesh, surface, 1);
    Ok(mesh
        .triangles
        .iter()
        .map(|t| {
            let i = triangle_integrals(mesh, t, &zero, &f0, &vs, &vt);
            let z = t.map(|v| mesh.vertices[v]);
            i.rho / (0.5 * ((z[1] - z[0]).conj() * (z[2] - z[0])).im)
        })
        .collect())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HessianReport {
    /// `∂²E/∂u_α∂ū_β`, row-major.
    pub hermitian: Vec<Vec<(f64, f64)>>,
    pub eigenvalues: Vec<f64>,
    /// Bound on the spectral error from the Richardson estimates.
    pub noise: f64,
    pub positive_definite: bool,
    pub inconclusive: bool,
    /// Eigenvalues of the real Hessian in the basis `μ₁, iμ₁, μ₂, …`.
    pub real_eigenvalues: Vec<f64>,
    /// Negative real eigenvalues beyond the noise, when all are resolved.
    pub index: Option<usize>,
}

/// Hyperbolic L² Gram matrix of the directions.
pub fn gram_matrix(mesh: &SurfaceMesh, directions: &[BeltramiSample]) -> DMatrix<C> {
    let k = directions.len();
    DMatrix::from_fn(k, k, |a, b| {
        mesh.representatives
            .iter()
            .enumerate()
            .map(|(d, &v)| {
                directions[a].values[v] * directions[b].values[v].conj() * mesh.dof_area[d]
            })
            .sum()
    })
}

/// Rejects directions whose Gram matrix is numerically singular.
pub fn check_independent(mesh: &SurfaceMesh, directions: &[BeltramiSample]) -> Result<()> {
    let g = gram_matrix(mesh, directions);
    let ev = SymmetricEigen::new(g).eigenvalues;
    let max = ev.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let min = ev.iter().fold(f64::INFINITY, |m, x| m.min(*x));
    let ratio = if max > 0.0 { min / max } else { 0.0 };
    if ratio < 1e-8 {
        return Err(Error::DependentDirections(ratio));
    }
    Ok(())
}

/// Second directional derivatives of `E` at the base structure along a
/// Beltrami direction: along `s`, along `t`, and the mixed `∂²/∂s∂t`, each
/// with a Richardson estimate.
#[derive(Clone, Copy, Debug)]
struct Star {
    ss: (f64, f64),
    tt: (f64, f64),
    st: (f64, f64),
}

fn star(
    mesh: &SurfaceMesh,
    dir: &[C],
    h: f64,
    target: &FuchsianGroup,
    base: &EquivariantMap,
    e0: f64,
    opts: &SolveOptions,
) -> Result<Star> {
    let offsets: Vec<(i64, i64)> = vec![
        (1, 0),
        (-1, 0),
        (0, 1),
        (0, -1),
        (1, 1),
        (-1, -1),
        (1, -1),
        (-1, 1),
        (2, 0),
        (-2, 0),
        (0, 2),
        (0, -2),
        (2, 2),
        (-2, -2),
        (2, -2),
        (-2, 2),
    ];
    let energies: Vec<f64> = offsets
        .par_iter()
        .map(|&(i, j)| {
            let u = c(i as f64 * h, j as f64 * h);
            let mu: Vec<C> = dir.iter().map(|m| u * m).collect();
            solve_harmonic(mesh, Some(&mu), target, Some(base), opts)
                .map(|s| s.energy.value)
                .map_err(|e| Error::Cell {
                    i,
                    j,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    let e = |i: i64, j: i64| {
        if (i, j) == (0, 0) {
            e0
        } else {
            energies[offsets
                .iter()
                .position(|&o| o == (i, j))
                .expect("stencil point")]
        }
    };
    let pair = |k: i64| {
        let hk = k as f64 * h;
        (
            (e(k, 0) + e(-k, 0) - 2.0 * e0) / (hk * hk),
            (e(0, k) + e(0, -k) - 2.0 * e0) / (hk * hk),
            (e(k, k) + e(-k, -k) - e(k, -k) - e(-k, k)) / (4.0 * hk * hk),
        )
    };
    let (p1, p2) = (pair(1), pair(2));
    let r = |a: f64, b: f64| (a, (a - b).abs() / 3.0);
    Ok(Star {
        ss: r(p1.0, p2.0),
        tt: r(p1.1, p2.1),
        st: r(p1.2, p2.2),
    })
}

/// Mixed Hessian `∂²E/∂u_α∂ū_β` at the harmonic map `base` (for the base
/// structure of the mesh) by polarisation of disk Laplacians along
/// `μ_α`, `μ_α + μ_β` and `μ_α + iμ_β`.
pub fn hessian_probe(
    mesh: &SurfaceMesh,
    directions: &[BeltramiSample],
    h: f64,
    target: &FuchsianGroup,
    opts: &SolveOptions,
) -> Result<HessianReport> {
    if directions.is_empty() {
        return Err(Error::Invalid("no directions".into()));
    }
    check_independent(mesh, directions)?;
    let k = directions.len();
    let max_sup = directions
        .iter()
        .map(|d| sup(&d.values))
        .fold(0.0, f64::max);
    if 2.0 * h * 2.0 * max_sup >= 0.5 {
        return Err(Error::Invalid(
            "step too large for the direction norms".into(),
        ));
    }
    let base = solve_harmonic(mesh, None, target, None, opts)?;
    let e0 = base.energy.value;
    let combo = |a: usize, b: usize, w: C| -> Vec<C> {
        directions[a]
            .values
            .iter()
            .zip(&directions[b].values)
            .map(|(x, y)| x + w * y)
            .collect()
    };
    let diag: Vec<Star> = (0..k)
        .map(|a| star(mesh, &directions[a].values, h, target, &base.map, e0, opts))
        .collect::<Result<_>>()?;
    let mut herm = DMatrix::<C>::zeros(k, k);
    let mut err = DMatrix::<f64>::zeros(k, k);
    // Real Hessian in the basis (μ₁, iμ₁, μ₂, iμ₂, …).
    let mut real = DMatrix::<f64>::zeros(2 * k, 2 * k);
    let mut real_err = DMatrix::<f64>::zeros(2 * k, 2 * k);
    for a in 0..k {
        let s = &diag[a];
        herm[(a, a)] = c((s.ss.0 + s.tt.0) / 4.0, 0.0);
        err[(a, a)] = (s.ss.1 + s.tt.1) / 4.0;
        real[(2 * a, 2 * a)] = s.ss.0;
        real[(2 * a + 1, 2 * a + 1)] = s.tt.0;
        real[(2 * a, 2 * a + 1)] = s.st.0;
        real[(2 * a + 1, 2 * a)] = s.st.0;
        real_err[(2 * a, 2 * a)] = s.ss.1;
        real_err[(2 * a + 1, 2 * a + 1)] = s.tt.1;
        real_err[(2 * a, 2 * a + 1)] = s.st.1;
        real_err[(2 * a + 1, 2 * a)] = s.st.1;
    }
    for a in 0..k {
        for b in a + 1..k {
            let one = star(
                mesh,
                &combo(a, b, c(1.0, 0.0)),
                h,
                target,
                &base.map,
                e0,
                opts,
            )?;
            let eye = star(
                mesh,
                &combo(a, b, c(0.0, 1.0)),
                h,
                target,
                &base.map,
                e0,
                opts,
            )?;
            let (haa, hbb) = (herm[(a, a)].re, herm[(b, b)].re);
            let re = ((one.ss.0 + one.tt.0) / 4.0 - haa - hbb) / 2.0;
            let im = ((eye.ss.0 + eye.tt.0) / 4.0 - haa - hbb) / 2.0;
            herm[(a, b)] = c(re, im);
            herm[(b, a)] = c(re, -im);
            let e = (((one.ss.1 + one.tt.1) / 4.0).max((eye.ss.1 + eye.tt.1) / 4.0)
                + err[(a, a)]
                + err[(b, b)])
                / 2.0;
            err[(a, b)] = e;
            err[(b, a)] = e;
            // Q(x, y) = (D(x + y) − D(x) − D(y))/2 for the real basis vectors.
            let (sa, ta, sb, tb) = (2 * a, 2 * a + 1, 2 * b, 2 * b + 1);
            let d = |i: usize| real[(i, i)];
            let de = |i: usize| real_err[(i, i)];
            // x = μ_a + μ_b: s-line of `one`; x = iμ_a + iμ_b: t-line of `one`.
            let q_ss = (one.ss.0 - d(sa) - d(sb)) / 2.0;
            let q_tt = (one.tt.0 - d(ta) - d(tb)) / 2.0;
            // x = μ_a + iμ_b: s-line of `eye`; x = iμ_a − μ_b: t-line of `eye`.
            let q_st = (eye.ss.0 - d(sa) - d(tb)) / 2.0;
            let q_ts = -(eye.tt.0 - d(ta) - d(sb)) / 2.0;
            for (i, j, v, e) in [
                (sa, sb, q_ss, (one.ss.1 + de(sa) + de(sb)) / 2.0),
                (ta, tb, q_tt, (one.tt.1 + de(ta) + de(tb)) / 2.0),
                (sa, tb, q_st, (eye.ss.1 + de(sa) + de(tb)) / 2.0),
                (ta, sb, q_ts, (eye.tt.1 + de(ta) + de(sb)) / 2.0),
            ] {
                real[(i, j)] = v;
                real[(j, i)] = v;
                real_err[(i, j)] = e;
                real_err[(j, i)] = e;
            }
        }
    }
    let eigenvalues: Vec<f64> = {
        let mut v: Vec<f64> = SymmetricEigen::new(herm.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        v.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
        v
    };
    let noise = err.iter().fold(0.0_f64, |m, x| m.max(*x)) * k as f64;
    let real_eigenvalues: Vec<f64> = {
        let mut v: Vec<f64> = SymmetricEigen::new(real.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        v.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
        v
    };
    let real_noise = real_err.iter().fold(0.0_f64, |m, x| m.max(*x)) * (2 * k) as f64;
    let index = if real_eigenvalues.iter().all(|x| x.abs() > real_noise) {
        Some(real_eigenvalues.iter().filter(|&&x| x < 0.0).count())
    } else {
        None
    };
    Ok(HessianReport {
        hermitian: (0..k)
            .map(|a| (0..k).map(|b| (herm[(a, b)].re, herm[(a, b)].im)).collect())
            .collect(),
        positive_definite: eigenvalues[0] > noise,
        inconclusive: eigenvalues[0].abs() <= noise,
        eigenvalues,
        noise,
        real_eigenvalues,
        index,
    })
}

/// Machine-readable summary of one disk experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PshSummary {
    pub laplacian: f64,
    pub error_estimate: f64,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub alpha: Option<f64>,
    pub rho: Option<f64>,
    pub gaps: Option<GapReport>,
    pub hessian_eigenvalues: Vec<f64>,
    pub verdicts: Vec<(String, String)>,
}
