//! Cyclic self-duality equations on the genus-2 surface.
//!
//! For the Hitchin-section field with only `q_n` possibly nonzero the
//! harmonic metric is diagonal in the splitting `E = ⊕ K^{m_i}`,
//! `m_i = (n+1-2i)/2`. Writing the metric on the `i`-th summand as
//! `h_i = λ^{-m_i} e^{2w_i}` (so `w = 0` is the metric induced by the
//! hyperbolic background `λ|dz|²`) and `F^H + [φ, φ*] = 0` reduces to
//!
//! ```text
//! Δ_g w_i = m_i + 2 r_{i-1}² e^{2(w_i - w_{i-1})} - 2 r_i² e^{2(w_{i+1} - w_i)}
//!           + 2 |q̃|² e^{2(w_1 - w_n)} (δ_{i1} - δ_{in}),      |q̃|² = |q_n|² λ^{-n},
//! ```
//!
//! where `Δ_g = λ⁻¹ 4∂∂̄` and terms with `r_0`, `r_n` are absent. The
//! right-hand side is `∂P/∂w_i` for the convex potential
//! `P(w) = Σ m_i w_i + Σ r_i² e^{2(w_{i+1}-w_i)} + |q̃|² e^{2(w_1-w_n)}`,
//! so solutions minimise `∫ ½|∇w|² + P(w) dA` on `Σ w_i = 0`.
//!
//! At `q = 0` the constant solution has `e^{2(w_{i+1}-w_i)} = 1/(i(n-i))`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::disk::{self, Mobius};
use crate::higgs_algebra::{
    higgs_energy_density, hitchin_higgs_field, subdiagonal_constant, DifferentialTuple, MAX_RANK,
};
use crate::sparse::{pcg, Triplets};
use crate::surface::{cotan_weights, SurfaceMesh};
use crate::{Error, Result};

/// Energy normalisation `E = c_E ∫ |φ|²_H dA`, fixed by the rank-2
/// Fuchsian point: `|φ|² = 1/4` there and the energy must be the area `4π`.
pub const ENERGY_CONSTANT: f64 = 4.0;

type CMat = DMatrix<Complex64>;

/// Conformal background metric of the base.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Background {
    /// `λ = 4/(1-|z|²)²`.
    Hyperbolic,
    /// `λ = 1`, for checks on a flat patch.
    Flat,
}

impl Background {
    pub fn density(self, z: Complex64) -> f64 {
        match self {
            Background::Hyperbolic => disk::area_density(z),
            Background::Flat => 1.0,
        }
    }

    pub fn d_log_density(self, z: Complex64) -> Complex64 {
        match self {
            Background::Hyperbolic => disk::d_log_area_density(z),
            Background::Flat => Complex64::new(0.0, 0.0),
        }
    }
}

/// Cyclic Higgs data: rank, `q_n` at every mesh vertex and the background.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CyclicHiggsData {
    pub rank: usize,
    pub qn: Vec<Complex64>,
    pub background: Background,
    /// When false the Higgs field is switched off (`φ = 0`).
    pub with_field: bool,
}

impl CyclicHiggsData {
    pub fn new(mesh: &SurfaceMesh, rank: usize, qn: Option<Vec<Complex64>>) -> Result<Self> {
        if rank < 2 {
            return Err(Error::RankTooSmall(rank));
        }
        if rank > MAX_RANK {
            return Err(Error::RankTooLarge(rank));
        }
        let qn = qn.unwrap_or_else(|| vec![Complex64::new(0.0, 0.0); mesh.num_vertices()]);
        if qn.len() != mesh.num_vertices() {
            return Err(Error::Invalid("q_n needs one value per vertex".into()));
        }
        Ok(Self {
            rank,
            qn,
            background: Background::Hyperbolic,
            with_field: true,
        })
    }

    /// `m_i = (n+1-2i)/2` for `i = 1..n`.
    pub fn degrees(&self) -> Vec<f64> {
        let n = self.rank as f64;
        (1..=self.rank)
            .map(|i| (n + 1.0 - 2.0 * i as f64) / 2.0)
            .collect()
    }

    /// `|q̃|² = |q_n|² λ^{-n}` at vertex `v`.
    fn q_norm_sqr(&self, mesh: &SurfaceMesh, v: usize) -> f64 {
        let lam = self.background.density(mesh.vertices[v]);
        self.qn[v].norm_sqr() * lam.powi(-(self.rank as i32))
    }
}

/// Per-dof exponents `(w_1, …, w_n)` with `Σ w_i = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricWeights {
    pub rank: usize,
    /// Row-major, `rank` entries per dof.
    pub values: Vec<f64>,
}

impl MetricWeights {
    pub fn constant(num_dofs: usize, w: &[f64]) -> Self {
        Self {
            rank: w.len(),
            values: (0..num_dofs).flat_map(|_| w.iter().copied()).collect(),
        }
    }

    pub fn num_dofs(&self) -> usize {
        self.values.len() / self.rank
    }

    pub fn at(&self, dof: usize) -> &[f64] {
        &self.values[dof * self.rank..(dof + 1) * self.rank]
    }

    /// Exponents `W_i = w_i − (m_i/2) log λ` of the metric written as
    /// `H = diag(e^{2W_i})` in the holomorphic frame, per dof.
    pub fn absolute(&self, mesh: &SurfaceMesh, background: Background) -> Vec<Vec<f64>> {
        let n = self.rank as f64;
        (0..self.num_dofs())
            .map(|v| {
                let log_lam = background
                    .density(mesh.vertices[mesh.representatives[v]])
                    .ln();
                self.at(v)
                    .iter()
                    .enumerate()
                    .map(|(i, w)| w - 0.5 * (n - 1.0 - 2.0 * i as f64) / 2.0 * log_lam)
                    .collect()
            })
            .collect()
    }

    /// `max_v |Σ_i w_i(v)|`.
    pub fn sum_defect(&self) -> f64 {
        self.values
            .chunks(self.rank)
            .map(|c| c.iter().sum::<f64>().abs())
            .fold(0.0, f64::max)
    }
}

/// Constant solution at `q = 0`: `w_{i+1} - w_i = -½ log(i(n-i))`, centred
/// so that `Σ w_i = 0`.
pub fn fuchsian_weights(n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n];
    for i in 1..n {
        w[i] = w[i - 1] - 0.5 * ((i * (n - i)) as f64).ln();
    }
    let mean = w.iter().sum::<f64>() / n as f64;
    w.iter_mut().for_each(|x| *x -= mean);
    // Exact antisymmetry w_i = -w_{n+1-i}.
    for i in 0..n / 2 {
        let a = 0.5 * (w[i] - w[n - 1 - i]);
        w[i] = a;
        w[n - 1 - i] = -a;
    }
    if n % 2 == 1 {
        w[n / 2] = 0.0;
    }
    w
}

pub fn fuchsian_closed_form(mesh: &SurfaceMesh, n: usize) -> Result<MetricWeights> {
    if n < 2 {
        return Err(Error::RankTooSmall(n));
    }
    if n > MAX_RANK {
        return Err(Error::RankTooLarge(n));
    }
    Ok(MetricWeights::constant(
        mesh.num_dofs(),
        &fuchsian_weights(n),
    ))
}

/// `∂P/∂w` at one point.
fn potential_gradient(m: &[f64], r2: &[f64], q2: f64, w: &[f64], out: &mut [f64]) {
    let n = w.len();
    out.copy_from_slice(m);
    for i in 0..n - 1 {
        let t = 2.0 * r2[i] * (2.0 * (w[i + 1] - w[i])).exp();
        out[i] -= t;
        out[i + 1] += t;
    }
    if q2 > 0.0 {
        let t = 2.0 * q2 * (2.0 * (w[0] - w[n - 1])).exp();
        out[0] += t;
        out[n - 1] -= t;
    }
}

/// `∂²P/∂w²` at one point (row-major `n×n`).
fn potential_hessian(r2: &[f64], q2: f64, w: &[f64]) -> Vec<f64> {
    let n = w.len();
    let mut h = vec![0.0; n * n];
    let mut add = |a: usize, b: usize, c: f64| {
        h[a * n + a] += c;
        h[b * n + b] += c;
        h[a * n + b] -= c;
        h[b * n + a] -= c;
    };
    for i in 0..n - 1 {
        add(i, i + 1, 4.0 * r2[i] * (2.0 * (w[i + 1] - w[i])).exp());
    }
    if q2 > 0.0 {
        add(0, n - 1, 4.0 * q2 * (2.0 * (w[0] - w[n - 1])).exp());
    }
    h
}

/// Orthonormal basis of `{Σ w_i = 0}` as columns (row-major `n×(n-1)`).
fn zero_sum_basis(n: usize) -> Vec<f64> {
    let k1 = n - 1;
    let mut b = vec![0.0; n * k1];
    for k in 1..n {
        let s = 1.0 / ((k * (k + 1)) as f64).sqrt();
        for i in 0..k {
            b[i * k1 + (k - 1)] = s;
        }
        b[k * k1 + (k - 1)] = -(k as f64) * s;
    }
    b
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CyclicSolution {
    pub weights: MetricWeights,
    /// Strong residual `max_v |(Lw)_v/A_v + ∂P(w_v)|` before each Newton
    /// step and after the last.
    pub residual_history: Vec<f64>,
    pub iterations: usize,
}

impl CyclicSolution {
    pub fn residual(&self) -> f64 {
        *self.residual_history.last().expect("nonempty")
    }
}

struct TodaSystem<'a> {
    mesh: &'a SurfaceMesh,
    n: usize,
    m: Vec<f64>,
    r2: Vec<f64>,
    q2: Vec<f64>,
    edges: Vec<(usize, usize, f64)>,
}

impl<'a> TodaSystem<'a> {
    fn new(mesh: &'a SurfaceMesh, data: &CyclicHiggsData) -> Result<Self> {
        let n = data.rank;
        let weights = cotan_weights(mesh, None)?;
        let edges = mesh
            .edges
            .iter()
            .zip(&weights.per_edge)
            .map(|(&[a, b], &w)| (mesh.dof[a], mesh.dof[b], w))
            .collect();
        let r2 = (1..n).map(|i| subdiagonal_constant(n, i).powi(2)).collect();
        let q2 = mesh
            .representatives
            .iter()
            .map(|&v| data.q_norm_sqr(mesh, v))
            .collect();
        Ok(Self {
            mesh,
            n,
            m: data.degrees(),
            r2,
            q2,
            edges,
        })
    }

    /// `L w` per component (unnormalised, `L` positive semidefinite).
    fn stiffness(&self, w: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; w.len()];
        for &(a, b, c) in &self.edges {
            for i in 0..n {
                let d = c * (w[a * n + i] - w[b * n + i]);
                out[a * n + i] += d;
                out[b * n + i] -= d;
            }
        }
        out
    }

    /// Weak gradient `L w + A ∂P` and strong residual sup norm.
    fn residual(&self, w: &[f64]) -> (Vec<f64>, f64) {
        let n = self.n;
        let mut g = self.stiffness(w);
        let mut sup: f64 = 0.0;
        let mut dp = vec![0.0; n];
        for v in 0..self.mesh.num_dofs() {
            let a = self.mesh.dof_area[v];
            potential_gradient(
                &self.m,
                &self.r2,
                self.q2[v],
                &w[v * n..(v + 1) * n],
                &mut dp,
            );
            for i in 0..n {
                g[v * n + i] += a * dp[i];
                sup = sup.max((g[v * n + i] / a).abs());
            }
        }
        (g, sup)
    }
}

/// Newton iteration in the zero-sum subspace for the cyclic system.
pub fn solve_cyclic_metric(
    mesh: &SurfaceMesh,
    data: &CyclicHiggsData,
    init: Option<&MetricWeights>,
    tol: f64,
) -> Result<CyclicSolution> {
    const MAX_NEWTON: usize = 60;
    let n = data.rank;
    let k1 = n - 1;
    let sys = TodaSystem::new(mesh, data)?;
    let nd = mesh.num_dofs();
    let mut w = match init {
        Some(w0) => {
            if w0.rank != n || w0.num_dofs() != nd {
                return Err(Error::Invalid("initial weights do not match".into()));
            }
            if w0.sum_defect() > 1e-12 {
                return Err(Error::WeightSum(w0.sum_defect()));
            }
            w0.values.clone()
        }
        None => fuchsian_closed_form(mesh, n)?.values,
    };
    let basis = zero_sum_basis(n);
    let project = |g: &[f64]| -> Vec<f64> {
        // Bᵀ g per dof.
        let mut out = vec![0.0; nd * k1];
        for v in 0..nd {
            for k in 0..k1 {
                out[v * k1 + k] = (0..n).map(|i| basis[i * k1 + k] * g[v * n + i]).sum();
            }
        }
        out
    };
    let lift = |y: &[f64], w: &mut [f64], t: f64| {
        for v in 0..nd {
            for i in 0..n {
                w[v * n + i] += t
                    * (0..k1)
                        .map(|k| basis[i * k1 + k] * y[v * k1 + k])
                        .sum::<f64>();
            }
        }
    };
    let (mut g, mut res) = sys.residual(&w);
    let mut history = vec![res];
    let mut iterations = 0;
    while res > tol {
        if iterations >= MAX_NEWTON {
            return Err(Error::NoConvergence {
                what: "cyclic self-duality Newton",
                iterations,
                residual: res,
            });
        }
        iterations += 1;
        // Jacobian L ⊗ I + A BᵀP''B.
        let mut t = Triplets::new(nd * k1);
        for &(a, b, c) in &sys.edges {
            for k in 0..k1 {
                t.push(a * k1 + k, a * k1 + k, c);
                t.push(b * k1 + k, b * k1 + k, c);
                t.push(a * k1 + k, b * k1 + k, -c);
                t.push(b * k1 + k, a * k1 + k, -c);
            }
        }
        for v in 0..nd {
            let h = potential_hessian(&sys.r2, sys.q2[v], &w[v * n..(v + 1) * n]);
            let a = mesh.dof_area[v];
            for k in 0..k1 {
                for l in 0..k1 {
                    let mut s = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            s += basis[i * k1 + k] * h[i * n + j] * basis[j * k1 + l];
                        }
                    }
                    t.push(v * k1 + k, v * k1 + l, a * s);
                }
            }
        }
        let jac = t.build();
        let rhs: Vec<f64> = project(&g).iter().map(|x| -x).collect();
        let gnorm = rhs.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut step = vec![0.0; nd * k1];
        let eta = (res.min(1e-2) * 1e-2).max(1e-15);
        pcg(&jac, &rhs, &mut step, k1, eta, 50_000);
        let mut tstep = 1.0;
        loop {
            let mut trial = w.clone();
            lift(&step, &mut trial, tstep);
            let (g_new, res_new) = sys.residual(&trial);
            let gn = project(&g_new).iter().map(|x| x * x).sum::<f64>().sqrt();
            if gn.is_finite() && (gn <= (1.0 - 1e-4 * tstep) * gnorm || res_new <= tol) {
                w = trial;
                g = g_new;
                res = res_new;
                break;
            }
            tstep *= 0.5;
            if tstep < 1e-10 {
                history.push(res);
                return Err(Error::NoConvergence {
                    what: "cyclic self-duality line search",
                    iterations,
                    residual: res,
                });
            }
        }
        history.push(res);
    }
    Ok(CyclicSolution {
        weights: MetricWeights { rank: n, values: w },
        residual_history: history,
        iterations,
    })
}

/// Strong residual of given weights (no solve).
pub fn cyclic_residual(
    mesh: &SurfaceMesh,
    data: &CyclicHiggsData,
    w: &MetricWeights,
) -> Result<f64> {
    let sys = TodaSystem::new(mesh, data)?;
    Ok(sys.residual(&w.values).1)
}

/// `∫ |φ|²_H dA` integrand at dof `v`.
fn energy_density_at(
    mesh: &SurfaceMesh,
    data: &CyclicHiggsData,
    w: &MetricWeights,
    v: usize,
) -> Result<f64> {
    if !data.with_field {
        return Ok(0.0);
    }
    let vert = mesh.representatives[v];
    let n = data.rank;
    let lam = data.background.density(mesh.vertices[vert]);
    // In the frame normalised by the background metric the field is the
    // Hitchin matrix with q_n replaced by q̃ = q_n λ^{-n/2}.
    let qt = data.qn[vert] * lam.powf(-(n as f64) / 2.0);
    let phi = hitchin_higgs_field(&DifferentialTuple::cyclic(n, qt)?);
    higgs_energy_density(&phi, w.at(v))
}

/// `c_E ∫ |φ|²_H dA`.
pub fn energy_from_higgs(
    mesh: &SurfaceMesh,
    data: &CyclicHiggsData,
    w: &MetricWeights,
) -> Result<f64> {
    let mut total = 0.0;
    for v in 0..mesh.num_dofs() {
        total += energy_density_at(mesh, data, w, v)? * mesh.dof_area[v];
    }
    Ok(ENERGY_CONSTANT * total)
}

/// The constant that makes the rank-2 Fuchsian Higgs energy equal to `4π`
/// on this mesh; [`ENERGY_CONSTANT`] is its continuum value.
pub fn calibrate_energy_constant(mesh: &SurfaceMesh) -> Result<f64> {
    let data = CyclicHiggsData::new(mesh, 2, None)?;
    let w = fuchsian_closed_form(mesh, 2)?;
    let e = energy_from_higgs(mesh, &data, &w)? / ENERGY_CONSTANT;
    Ok(4.0 * std::f64::consts::PI / e)
}

/// Fields of the connection `D = ∇^H + φ + φ*` on one triangle.
struct TriangleField<'a> {
    data: &'a CyclicHiggsData,
    z: [Complex64; 3],
    w: [&'a [f64]; 3],
    q: [Complex64; 3],
    /// `∂_z w_i`, constant on the triangle.
    dw: Vec<Complex64>,
}

impl<'a> TriangleField<'a> {
    fn new(
        mesh: &'a SurfaceMesh,
        data: &'a CyclicHiggsData,
        w: &'a MetricWeights,
        t: &[usize; 3],
    ) -> Self {
        let z = [
            mesh.vertices[t[0]],
            mesh.vertices[t[1]],
            mesh.vertices[t[2]],
        ];
        let ws = [
            w.at(mesh.dof[t[0]]),
            w.at(mesh.dof[t[1]]),
            w.at(mesh.dof[t[2]]),
        ];
        let (e1, e2) = (z[1] - z[0], z[2] - z[0]);
        let det = e1.re * e2.im - e1.im * e2.re;
        let dw = (0..data.rank)
            .map(|i| {
                let (d1, d2) = (ws[1][i] - ws[0][i], ws[2][i] - ws[0][i]);
                // Solve ∇w · e_k = d_k.
                let gx = (d1 * e2.im - d2 * e1.im) / det;
                let gy = (d2 * e1.re - d1 * e2.re) / det;
                Complex64::new(gx, -gy) * 0.5
            })
            .collect();
        Self {
            data,
            z,
            w: ws,
            q: [data.qn[t[0]], data.qn[t[1]], data.qn[t[2]]],
            dw,
        }
    }

    fn barycentric(&self, p: Complex64) -> [f64; 3] {
        let (e1, e2, d) = (self.z[1] - self.z[0], self.z[2] - self.z[0], p - self.z[0]);
        let det = e1.re * e2.im - e1.im * e2.re;
        let b1 = (d.re * e2.im - d.im * e2.re) / det;
        let b2 = (e1.re * d.im - e1.im * d.re) / det;
        [1.0 - b1 - b2, b1, b2]
    }

    /// Quadratic Lagrange interpolant of `q_n` in `z`, so that `∂̄q = 0`.
    fn holomorphic_q(&self, p: Complex64) -> Complex64 {
        let z = &self.z;
        (0..3)
            .map(|k| {
                let (a, b) = (z[(k + 1) % 3], z[(k + 2) % 3]);
                self.q[k] * (p - a) * (p - b) / ((z[k] - a) * (z[k] - b))
            })
            .sum()
    }

    /// `𝒜(δ) = (diag ∂ log h + Φ) δ + Φ* δ̄` at `p`.
    fn connection(&self, p: Complex64, delta: Complex64) -> CMat {
        let n = self.data.rank;
        let bc = self.barycentric(p);
        let m = self.data.degrees();
        let lam = self.data.background.density(p);
        let dlog = self.data.background.d_log_density(p);
        let w: Vec<f64> = (0..n)
            .map(|i| (0..3).map(|k| bc[k] * self.w[k][i]).sum())
            .collect();
        let h: Vec<f64> = (0..n)
            .map(|i| lam.powf(-m[i]) * (2.0 * w[i]).exp())
            .collect();
        let mut a = CMat::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = (dlog * (-m[i]) + self.dw[i] * 2.0) * delta;
        }
        if self.data.with_field {
            let q = self.holomorphic_q(p);
            let mut phi = CMat::zeros(n, n);
            for i in 0..n - 1 {
                phi[(i + 1, i)] = Complex64::new(subdiagonal_constant(n, i + 1), 0.0);
            }
            phi[(0, n - 1)] += q;
            for i in 0..n {
                for j in 0..n {
                    // (Φ*)_{ij} = conj(Φ_{ji}) h_j / h_i.
                    let adj = phi[(j, i)].conj() * (h[j] / h[i]);
                    a[(i, j)] += phi[(i, j)] * delta + adj * delta.conj();
                }
            }
        }
        a
    }

    /// Transport matrix along the segment `p → p + δ` (one RK4 step of
    /// `V' = -𝒜 V`).
    fn transport(&self, p: Complex64, delta: Complex64) -> CMat {
        let n = self.data.rank;
        let id = CMat::identity(n, n);
        let a0 = self.connection(p, delta);
        let am = self.connection(p + delta * 0.5, delta);
        let a1 = self.connection(p + delta, delta);
        let k1 = -&a0;
        let k2 = -&am * (&id + &k1 * Complex64::new(0.5, 0.0));
        let k3 = -&am * (&id + &k2 * Complex64::new(0.5, 0.0));
        let k4 = -&a1 * (&id + &k3);
        let sixth = Complex64::new(1.0 / 6.0, 0.0);
        &id + (k1 + &k2 * Complex64::new(2.0, 0.0) + &k3 * Complex64::new(2.0, 0.0) + k4) * sixth
    }
}

fn on_polygon_boundary(mesh: &SurfaceMesh, z: Complex64) -> bool {
    (0..8).any(|k| {
        let (c, r) = mesh.octagon.side_circle(k);
        ((z - c).norm() - r).abs() < 1e-9
    })
}

/// Per-vertex holonomy defect `‖hol − I‖_max / area` around the dual cells
/// (through edge midpoints and triangle centroids) of interior vertices.
pub fn flatness_profile(
    mesh: &SurfaceMesh,
    data: &CyclicHiggsData,
    w: &MetricWeights,
) -> Result<Vec<(usize, f64)>> {
    if w.rank != data.rank || w.num_dofs() != mesh.num_dofs() {
        return Err(Error::Invalid("weights do not match data".into()));
    }
    let nv = mesh.num_vertices();
    let mut fans: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (ti, t) in mesh.triangles.iter().enumerate() {
        for &v in t {
            fans[v].push(ti);
        }
    }
    let interior: Vec<usize> = (0..nv)
        .filter(|&v| !on_polygon_boundary(mesh, mesh.vertices[v]))
        .collect();
    use rayon::prelude::*;
    let out = interior
        .par_iter()
        .map(|&v| {
            // Order the fan counter-clockwise: triangle (v, a, b) is followed
            // by the one containing (v, b, ·).
            let rot = |ti: usize| {
                let t = mesh.triangles[ti];
                let k = t.iter().position(|&x| x == v).expect("in fan");
                (t[(k + 1) % 3], t[(k + 2) % 3])
            };
            let fan = &fans[v];
            let mut order = vec![fan[0]];
            while order.len() < fan.len() {
                let (_, b) = rot(*order.last().expect("nonempty"));
                let next = fan
                    .iter()
                    .copied()
                    .find(|&t| rot(t).0 == b)
                    .expect("closed fan");
                order.push(next);
            }
            let n = data.rank;
            let mut hol = CMat::identity(n, n);
            let zv = mesh.vertices[v];
            for &ti in &order {
                let t = mesh.triangles[ti];
                let field = TriangleField::new(mesh, data, w, &t);
                let (a, b) = rot(ti);
                let ma = (zv + mesh.vertices[a]) / 2.0;
                let mb = (zv + mesh.vertices[b]) / 2.0;
                let c = (zv + mesh.vertices[a] + mesh.vertices[b]) / 3.0;
                hol = field.transport(ma, c - ma) * hol;
                hol = field.transport(c, mb - c) * hol;
            }
            let defect = (hol - CMat::identity(n, n))
                .iter()
                .map(|x| x.norm())
                .fold(0.0, f64::max);
            (v, defect / mesh.vertex_area[v])
        })
        .collect();
    Ok(out)
}

/// Sup-norm over interior dual cells of the holonomy defect per area.
pub fn flatness_residual(
    mesh: &SurfaceMesh,
    data: &CyclicHiggsData,
    w: &MetricWeights,
) -> Result<f64> {
    Ok(flatness_profile(mesh, data, w)?
        .iter()
        .map(|x| x.1)
        .fold(0.0, f64::max))
}

/// Traces of the holonomy of `D` along the four side pairings: transport
/// from the centre to the midpoint `u` of the source side, identify the
/// fibres over `u` and `g(u)` through `diag(g'(u)^{-m_i})`, transport back.
pub fn holonomy_traces(
    mesh: &SurfaceMesh,
    data: &CyclicHiggsData,
    w: &MetricWeights,
) -> Result<Vec<Complex64>> {
    let n = data.rank;
    let m = data.degrees();
    let radial = |end: Complex64, outward: bool| -> Result<CMat> {
        // Triangles whose bounding box meets the segment [0, end].
        let (lo, hi) = (
            Complex64::new(end.re.min(0.0) - 1e-9, end.im.min(0.0) - 1e-9),
            Complex64::new(end.re.max(0.0) + 1e-9, end.im.max(0.0) + 1e-9),
        );
        let candidates: Vec<usize> = (0..mesh.triangles.len())
            .filter(|&ti| {
                let z = mesh.triangles[ti].map(|v| mesh.vertices[v]);
                z.iter().map(|p| p.re).fold(f64::INFINITY, f64::min) <= hi.re
                    && z.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max) >= lo.re
                    && z.iter().map(|p| p.im).fold(f64::INFINITY, f64::min) <= hi.im
                    && z.iter().map(|p| p.im).fold(f64::NEG_INFINITY, f64::max) >= lo.im
            })
            .collect();
        let steps = 8 * mesh.subdivisions;
        let mut p = if outward {
            Complex64::new(0.0, 0.0)
        } else {
            end
        };
        let delta = if outward { end } else { -end } / steps as f64;
        let mut acc = CMat::identity(n, n);
        for _ in 0..steps {
            let mid = p + delta * 0.5;
            let f = candidates
                .iter()
                .map(|&ti| TriangleField::new(mesh, data, w, &mesh.triangles[ti]))
                .find(|f| f.barycentric(mid).iter().all(|&b| b > -1e-12))
                .ok_or_else(|| Error::Invalid("holonomy path left the mesh".into()))?;
            acc = f.transport(p, delta) * acc;
            p += delta;
        }
        Ok(acc)
    };
    let mut out = Vec::new();
    for &(from, to, gen) in &mesh.octagon.pairings {
        let g: Mobius = mesh.group.generators[gen as usize];
        let r = mesh.octagon.midpoint_radius;
        let u = Complex64::from_polar(r, crate::surface::Octagon::side_angle(from));
        let gu = Complex64::from_polar(r, crate::surface::Octagon::side_angle(to));
        let d = g.derivative(u);
        let ident = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            n,
            m.iter().map(|&mi| d.powf(-mi)),
        ));
        let hol = radial(gu, false)? * ident * radial(u, true)?;
        out.push(hol.trace());
    }
    Ok(out)
}

/// Machine-readable summary of one cyclic solve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CyclicReport {
    pub rank: usize,
    pub level: u32,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub residual: f64,
    pub flatness: f64,
    pub energy: f64,
    pub holonomy_traces: Vec<(f64, f64)>,
}

pub fn cyclic_report(
    mesh: &SurfaceMesh,
    data: &CyclicHiggsData,
    tol: f64,
) -> Result<(CyclicSolution, CyclicReport)> {
    let sol = solve_cyclic_metric(mesh, data, None, tol)?;
    let flatness = flatness_residual(mesh, data, &sol.weights)?;
    let energy = energy_from_higgs(mesh, data, &sol.weights)?;
    let traces = holonomy_traces(mesh, data, &sol.weights)?;
    let report = CyclicReport {
        rank: data.rank,
        level: mesh.level,
        iterations: sol.iterations,
        residual_history: sol.residual_history.clone(),
        residual: sol.residual(),
        flatness,
        energy,
        holonomy_traces: traces.iter().map(|t| (t.re, t.im)).collect(),
    };
    Ok((sol, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fuchsian_weights_pattern() {
        assert_eq!(fuchsian_weights(2), vec![0.0, 0.0]);
        let w3 = fuchsian_weights(3);
        let h = 0.5 * 2f64.ln();
        assert!((w3[0] - h).abs() < 1e-15 && w3[1] == 0.0 && (w3[2] + h).abs() < 1e-15);
        for n in 2..=MAX_RANK {
            let w = fuchsian_weights(n);
            assert!(w.iter().sum::<f64>().abs() < 1e-15);
        }
    }

    #[test]
    fn fuchsian_weights_solve_the_pointwise_system() {
        for n in 2..=MAX_RANK {
            let w = fuchsian_weights(n);
            let m: Vec<f64> = (1..=n)
                .map(|i| (n as f64 + 1.0 - 2.0 * i as f64) / 2.0)
                .collect();
            let r2: Vec<f64> = (1..n).map(|i| subdiagonal_constant(n, i).powi(2)).collect();
            let mut g = vec![0.0; n];
            potential_gradient(&m, &r2, 0.0, &w, &mut g);
            assert!(g.iter().all(|x| x.abs() < 1e-12), "{n} {g:?}");
        }
    }

    #[test]
    fn zero_sum_basis_is_orthonormal() {
        for n in 2..=MAX_RANK {
            let k1 = n - 1;
            let b = zero_sum_basis(n);
            for k in 0..k1 {
                assert!((0..n).map(|i| b[i * k1 + k]).sum::<f64>().abs() < 1e-14);
                for l in 0..k1 {
                    let d: f64 = (0..n).map(|i| b[i * k1 + k] * b[i * k1 + l]).sum();
                    assert!((d - if k == l { 1.0 } else { 0.0 }).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn potential_hessian_matches_gradient_differences() {
        let n = 4;
        let w = [0.3, -0.1, 0.05, -0.25];
        let m: Vec<f64> = (1..=n)
            .map(|i| (n as f64 + 1.0 - 2.0 * i as f64) / 2.0)
            .collect();
        let r2: Vec<f64> = (1..n).map(|i| subdiagonal_constant(n, i).powi(2)).collect();
        let h = potential_hessian(&r2, 0.7, &w);
        let eps = 1e-6;
        for j in 0..n {
            let (mut wp, mut wm) = (w, w);
            wp[j] += eps;
            wm[j] -= eps;
            let (mut gp, mut gm) = (vec![0.0; n], vec![0.0; n]);
            potential_gradient(&m, &r2, 0.7, &wp, &mut gp);
            potential_gradient(&m, &r2, 0.7, &wm, &mut gm);
            for i in 0..n {
                let fd = (gp[i] - gm[i]) / (2.0 * eps);
                assert!((fd - h[i * n + j]).abs() < 1e-6);
            }
        }
    }
}
