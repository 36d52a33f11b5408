//! Pointwise algebra of the Hitchin section.
//!
//! A Higgs field of the Hitchin section is evaluated at a point of the
//! surface in a fixed local coordinate, which turns the holomorphic
//! differentials `q_2, …, q_n` into complex numbers and the Higgs field into
//! an `n × n` complex matrix with zero diagonal, constants
//! `r_i = i(n-i)/2` on the subdiagonal and `q_{k+1}` along the k-th
//! superdiagonal.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Largest rank handled by the dense routines here.
pub const MAX_RANK: usize = 7;

pub type CMatrix = DMatrix<Complex64>;

/// Pointwise values `(q_2, …, q_n)` of holomorphic differentials.
#[derive(Clone, Debug, PartialEq)]
pub struct DifferentialTuple {
    values: Vec<Complex64>,
}

impl DifferentialTuple {
    pub fn new(rank: usize, values: Vec<Complex64>) -> Result<Self> {
        check_rank(rank)?;
        if values.len() != rank - 1 {
            return Err(Error::DifferentialCount {
                rank,
                expected: rank - 1,
                got: values.len(),
            });
        }
        Ok(Self { values })
    }

    pub fn zero(rank: usize) -> Result<Self> {
        Self::new(rank, vec![Complex64::new(0.0, 0.0); rank.saturating_sub(1)])
    }

    /// Cyclic tuple: only the top differential `q_n` is nonzero.
    pub fn cyclic(rank: usize, qn: Complex64) -> Result<Self> {
        let mut t = Self::zero(rank)?;
        *t.values.last_mut().expect("rank >= 2") = qn;
        Ok(t)
    }

    pub fn rank(&self) -> usize {
        self.values.len() + 1
    }

    /// `q_k` for `2 <= k <= n`.
    pub fn q(&self, k: usize) -> Complex64 {
        self.values[k - 2]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

/// Higgs field of the Hitchin section at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct HiggsFieldSample {
    matrix: CMatrix,
}

impl HiggsFieldSample {
    pub fn rank(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }
}

/// Characteristic-polynomial coefficients `(p̃_2, …, p̃_n)` of a trace-free
/// matrix, `det(λ - A) = λ^n + Σ_k p̃_k λ^{n-k}`.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantTuple {
    values: Vec<Complex64>,
}

impl InvariantTuple {
    /// `p̃_k` for `2 <= k <= n`.
    pub fn p(&self, k: usize) -> Complex64 {
        self.values[k - 2]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

fn check_rank(rank: usize) -> Result<()> {
    if rank < 2 {
        return Err(Error::RankTooSmall(rank));
    }
    if rank > MAX_RANK {
        return Err(Error::RankTooLarge(rank));
    }
    Ok(())
}

/// Subdiagonal constant `r_i = i(n-i)/2` of the Hitchin section.
pub fn subdiagonal_constant(n: usize, i: usize) -> f64 {
    (i * (n - i)) as f64 / 2.0
}

pub fn hitchin_higgs_field(q: &DifferentialTuple) -> HiggsFieldSample {
    let n = q.rank();
    let mut m = CMatrix::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = Complex64::new(subdiagonal_constant(n, i), 0.0);
    }
    for k in 1..n {
        let qk = q.q(k + 1);
        for i in 0..n - k {
            m[(i, i + k)] = qk;
        }
    }
    HiggsFieldSample { matrix: m }
}

fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Characteristic-polynomial coefficients via the Faddeev–LeVerrier recursion.
pub fn charpoly_invariants(a: &CMatrix) -> Result<InvariantTuple> {
    let (rows, cols) = a.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    let n = rows;
    check_rank(n)?;
    let trace = a.trace().norm();
    let tol = 1e-10 * frobenius(a).max(f64::MIN_POSITIVE);
    if trace > tol {
        return Err(Error::NotTraceFree { trace, tol });
    }
    // c[k] is the coefficient of λ^k.
    let mut c = vec![Complex64::new(0.0, 0.0); n + 1];
    c[n] = Complex64::new(1.0, 0.0);
    let id = CMatrix::identity(n, n);
    let mut m = CMatrix::zeros(n, n);
    for k in 1..=n {
        m = a * &m + &id * c[n - k + 1];
        let am = a * &m;
        c[n - k] = -am.trace() / k as f64;
    }
    // p̃_k multiplies λ^{n-k}.
    let values = (2..=n).map(|k| c[n - k]).collect();
    Ok(InvariantTuple { values })
}

/// Outcome of the section-triangularity probe.
#[derive(Clone, Debug)]
pub struct SectionReport {
    pub rank: usize,
    pub samples: usize,
    /// `∂p̃_k/∂q_k` for `k = 2..=n`, taken from the first sample.
    pub diagonal: Vec<Complex64>,
    /// Largest `|∂p̃_k/∂q_j|`, `j > k`, relative to the Jacobian scale.
    pub max_upper_relative: f64,
    /// Largest deviation of a diagonal entry from its first-sample value.
    pub max_diagonal_drift: f64,
    pub triangular: bool,
}

/// Complex Jacobian `J[k-2][j-2] = ∂p̃_k/∂q_j` by central differences.
///
/// The invariants are polynomial in `q`, so a real step in each complex
/// coordinate gives the holomorphic derivative.
pub fn section_jacobian(q: &DifferentialTuple) -> Result<Vec<Vec<Complex64>>> {
    let n = q.rank();
    let step = 1e-5;
    let mut jac = vec![vec![Complex64::new(0.0, 0.0); n - 1]; n - 1];
    for j in 0..n - 1 {
        let mut plus = q.values.clone();
        let mut minus = q.values.clone();
        plus[j] += step;
        minus[j] -= step;
        let pp =
            charpoly_invariants(hitchin_higgs_field(&DifferentialTuple::new(n, plus)?).matrix())?;
        let pm =
            charpoly_invariants(hitchin_higgs_field(&DifferentialTuple::new(n, minus)?).matrix())?;
        for k in 0..n - 1 {
            jac[k][j] = (pp.values[k] - pm.values[k]) / (2.0 * step);
        }
    }
    Ok(jac)
}

/// Checks that `q ↦ p̃(φ(q))` has a triangular Jacobian with constant,
/// nonzero diagonal at `sample_count` random points (plus `q = 0`).
pub fn verify_section_triangularity(
    n: usize,
    sample_count: usize,
    seed: u64,
) -> Result<SectionReport> {
    check_rank(n)?;
    if sample_count == 0 {
        return Err(Error::Invalid("sample_count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = vec![DifferentialTuple::zero(n)?];
    for _ in 0..sample_count {
        let vals = (0..n - 1)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        points.push(DifferentialTuple::new(n, vals)?);
    }

    let mut diagonal: Option<Vec<Complex64>> = None;
    let mut max_upper: f64 = 0.0;
    let mut max_drift: f64 = 0.0;
    for q in &points {
        let jac = section_jacobian(q)?;
        let scale = jac
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(1.0_f64, f64::max);
        for k in 0..n - 1 {
            for j in k + 1..n - 1 {
                max_upper = max_upper.max(jac[k][j].norm() / scale);
            }
        }
        let diag: Vec<Complex64> = (0..n - 1).map(|k| jac[k][k]).collect();
        for (k, d) in diag.iter().enumerate() {
            if d.norm() < 1e-8 {
                return Err(Error::DegenerateSection {
                    degree: k + 2,
                    value: d.norm(),
                });
            }
        }
        match &diagonal {
            None => diagonal = Some(diag),
            Some(first) => {
                for (a, b) in first.iter().zip(&diag) {
                    max_drift = max_drift.max((a - b).norm() / a.norm());
                }
            }
        }
    }
    Ok(SectionReport {
        rank: n,
        samples: points.len(),
        diagonal: diagonal.expect("at least one sample"),
        max_upper_relative: max_upper,
        max_diagonal_drift: max_drift,
        triangular: max_upper < 1e-6 && max_drift < 1e-6,
    })
}

/// Residual of the grading identity
/// `φ(t²q₂, …, tⁿqₙ) = t · g_t φ(q) g_t⁻¹` with
/// `g_t = diag(t^{(n-1)/2}, …, t^{(1-n)/2})`, relative to `‖φ‖`.
pub fn grading_residual(q: &DifferentialTuple, t: f64) -> Result<f64> {
    let n = q.rank();
    let scaled: Vec<Complex64> = (2..=n).map(|k| q.q(k) * t.powi(k as i32)).collect();
    let lhs = hitchin_higgs_field(&DifferentialTuple::new(n, scaled)?).into_matrix();
    let phi = hitchin_higgs_field(q).into_matrix();
    let expo = |i: usize| (n as f64 - 1.0 - 2.0 * i as f64) / 2.0;
    let mut rhs = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            rhs[(i, j)] = phi[(i, j)] * t * t.powf(expo(i) - expo(j));
        }
    }
    Ok(frobenius(&(lhs - &rhs)) / frobenius(&rhs).max(1.0))
}

fn diagonal_metric(w: &[f64]) -> Result<Vec<f64>> {
    let sum: f64 = w.iter().sum();
    let scale = w.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    if sum.abs() > 1e-12 * scale {
        return Err(Error::WeightSum(sum));
    }
    Ok(w.iter().map(|x| (2.0 * x).exp()).collect())
}

/// Adjoint `φ^{*H} = H⁻¹ φ̄ᵀ H` for a general Hermitian metric `H`.
pub fn metric_adjoint(phi: &CMatrix, h: &CMatrix) -> Result<CMatrix> {
    let hinv = h
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Invalid("metric is singular".into()))?;
    Ok(hinv * phi.adjoint() * h)
}

fn diagonal_adjoint(phi: &CMatrix, h: &[f64]) -> CMatrix {
    let n = phi.nrows();
    CMatrix::from_fn(n, n, |i, j| phi[(j, i)].conj() * h[j] / h[i])
}

/// `[φ, φ^{*H}]` for the diagonal metric `H = diag(e^{2w_1}, …, e^{2w_n})`.
pub fn metric_bracket(phi: &HiggsFieldSample, w: &[f64]) -> Result<CMatrix> {
    if w.len() != phi.rank() {
        return Err(Error::Invalid(format!(
            "expected {} weights, got {}",
            phi.rank(),
            w.len()
        )));
    }
    let h = diagonal_metric(w)?;
    let m = phi.matrix();
    let adj = diagonal_adjoint(m, &h);
    Ok(m * &adj - &adj * m)
}

/// Defect of `H·[φ, φ^{*H}]` from being Hermitian.
///
/// The bracket coefficient is self-adjoint for `H`; multiplied by the
/// imaginary area form `dz∧dz̄` it becomes the anti-Hermitian curvature
/// term of the self-duality equation.
pub fn bracket_hermiticity_defect(phi: &HiggsFieldSample, w: &[f64]) -> Result<f64> {
    let b = metric_bracket(phi, w)?;
    let h = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        w.len(),
        diagonal_metric(w)?
            .into_iter()
            .map(|x| Complex64::new(x, 0.0)),
    ));
    let hb = h * b;
    Ok(frobenius(&(&hb - hb.adjoint())))
}

/// Pointwise `|φ|²_H = tr(φ φ^{*H})` for a diagonal metric.
pub fn higgs_energy_density(phi: &HiggsFieldSample, w: &[f64]) -> Result<f64> {
    if w.len() != phi.rank() {
        return Err(Error::Invalid(format!(
            "expected {} weights, got {}",
            phi.rank(),
            w.len()
        )));
    }
    let h = diagonal_metric(w)?;
    let m = phi.matrix();
    let n = m.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += m[(i, j)].norm_sqr() * h[i] / h[j];
        }
    }
    Ok(s)
}

/// `tr(φ φ^{*H})` for a general Hermitian metric.
pub fn higgs_energy_density_general(phi: &CMatrix, h: &CMatrix) -> Result<f64> {
    let adj = metric_adjoint(phi, h)?;
    Ok((phi * adj).trace().re)
}

/// Entry (2,1) of `μ·φ`; equals `r_1 μ = (n-1)/2 · μ` on the Hitchin section.
pub fn mu_phi_entry21(mu: Complex64, phi: &HiggsFieldSample) -> Complex64 {
    mu * phi.matrix()[(1, 0)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rank_two_field() {
        let q = DifferentialTuple::zero(2).unwrap();
        let m = hitchin_higgs_field(&q).into_matrix();
        assert_eq!(m[(0, 0)], c(0.0, 0.0));
        assert_eq!(m[(0, 1)], c(0.0, 0.0));
        assert_eq!(m[(1, 0)], c(0.5, 0.0));
        assert_eq!(m[(1, 1)], c(0.0, 0.0));
    }

    #[test]
    fn rank_three_field() {
        let (a, b) = (c(0.3, -1.0), c(2.0, 0.5));
        let q = DifferentialTuple::new(3, vec![a, b]).unwrap();
        let m = hitchin_higgs_field(&q).into_matrix();
        let z = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        let expected = CMatrix::from_row_slice(3, 3, &[z, a, b, one, z, a, z, one, z]);
        assert_eq!(m, expected);
    }

    #[test]
    fn zero_differentials_give_nilpotent_field() {
        for n in 2..=MAX_RANK {
            let m = hitchin_higgs_field(&DifferentialTuple::zero(n).unwrap()).into_matrix();
            assert_eq!(m.trace(), c(0.0, 0.0));
            let mut p = CMatrix::identity(n, n);
            for _ in 0..n {
                p = &p * &m;
            }
            assert!(p.iter().all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn rank_errors() {
        assert!(matches!(
            DifferentialTuple::new(1, vec![]),
            Err(Error::RankTooSmall(1))
        ));
        assert!(matches!(
            DifferentialTuple::new(3, vec![c(1.0, 0.0)]),
            Err(Error::DifferentialCount { .. })
        ));
    }

    #[test]
    fn charpoly_rank_two() {
        let qc = c(0.7, -0.2);
        let q = DifferentialTuple::new(2, vec![qc]).unwrap();
        let inv = charpoly_invariants(hitchin_higgs_field(&q).matrix()).unwrap();
        // det(λ - A) = λ² - c r₁ for A = [[0, c], [1/2, 0]].
        assert!((inv.p(2) + qc / 2.0).norm() < 1e-14);
    }

    #[test]
    fn charpoly_zero_and_nilpotent() {
        let inv = charpoly_invariants(&CMatrix::zeros(4, 4)).unwrap();
        assert!(inv.values().iter().all(|z| z.norm() == 0.0));
        let q = DifferentialTuple::zero(3).unwrap();
        let inv = charpoly_invariants(hitchin_higgs_field(&q).matrix()).unwrap();
        assert!(inv.values().iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn charpoly_matches_eigenvalue_product() {
        // Diagonal trace-free matrix: det(λ - A) = Π (λ - d_i).
        let d = [c(1.0, 0.5), c(-2.0, 0.25), c(0.5, -1.0), c(0.5, 0.25)];
        let a = CMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&d));
        let inv = charpoly_invariants(&a).unwrap();
        // Expand Π (λ - d_i) directly.
        let mut poly = vec![c(1.0, 0.0)];
        for di in d {
            let mut next = vec![c(0.0, 0.0); poly.len() + 1];
            for (k, pk) in poly.iter().enumerate() {
                next[k] += pk;
                next[k + 1] -= pk * di;
            }
            poly = next;
        }
        for k in 2..=4 {
            assert!((inv.p(k) - poly[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn charpoly_rejects_bad_input() {
        let rect = CMatrix::zeros(2, 3);
        assert!(matches!(
            charpoly_invariants(&rect),
            Err(Error::NotSquare { .. })
        ));
        let a = CMatrix::identity(3, 3);
        assert!(matches!(
            charpoly_invariants(&a),
            Err(Error::NotTraceFree { .. })
        ));
    }

    #[test]
    fn section_rank_two_diagonal() {
        let report = verify_section_triangularity(2, 3, 1).unwrap();
        assert!((report.diagonal[0] - c(-0.5, 0.0)).norm() < 1e-8);
        assert!(report.triangular);
    }

    #[test]
    fn section_rank_three_upper_entry_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let q = DifferentialTuple::new(
                3,
                vec![
                    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                ],
            )
            .unwrap();
            let jac = section_jacobian(&q).unwrap();
            assert!(jac[0][1].norm() < 1e-8, "{}", jac[0][1]);
        }
    }

    #[test]
    fn section_diagonal_independent_of_point() {
        for n in 2..=MAX_RANK {
            let zero = section_jacobian(&DifferentialTuple::zero(n).unwrap()).unwrap();
            let vals = (0..n - 1).map(|k| c(0.3 * k as f64 - 0.4, 0.2)).collect();
            let other = section_jacobian(&DifferentialTuple::new(n, vals).unwrap()).unwrap();
            for k in 0..n - 1 {
                let rel = (zero[k][k] - other[k][k]).norm() / zero[k][k].norm();
                assert!(rel < 1e-7, "n={n} k={k} rel={rel}");
            }
        }
    }

    #[test]
    fn bracket_zero_field() {
        let phi = HiggsFieldSample {
            matrix: CMatrix::zeros(3, 3),
        };
        let b = metric_bracket(&phi, &[0.1, 0.2, -0.3]).unwrap();
        assert!(b.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn bracket_normal_hermitian_commutes() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(0.5, 0.5), c(0.5, -0.5), c(-1.0, 0.0)],
        );
        let phi = HiggsFieldSample { matrix: m };
        let b = metric_bracket(&phi, &[0.0, 0.0]).unwrap();
        assert!(b.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn bracket_rank_two_closed_form() {
        let phi = hitchin_higgs_field(&DifferentialTuple::zero(2).unwrap());
        for w in [-0.7, 0.0, 0.3, 1.1] {
            let b = metric_bracket(&phi, &[w, -w]).unwrap();
            let e = 0.25 * (-4.0 * w).exp();
            assert!((b[(0, 0)] - c(-e, 0.0)).norm() < 1e-14);
            assert!((b[(1, 1)] - c(e, 0.0)).norm() < 1e-14);
            assert!(b[(0, 1)].norm() < 1e-15 && b[(1, 0)].norm() < 1e-15);
        }
    }

    #[test]
    fn bracket_rejects_nonzero_sum() {
        let phi = hitchin_higgs_field(&DifferentialTuple::zero(2).unwrap());
        assert!(matches!(
            metric_bracket(&phi, &[0.1, 0.1]),
            Err(Error::WeightSum(_))
        ));
    }

    #[test]
    fn energy_density_values() {
        let phi = hitchin_higgs_field(&DifferentialTuple::zero(2).unwrap());
        assert!((higgs_energy_density(&phi, &[0.0, 0.0]).unwrap() - 0.25).abs() < 1e-15);
        let zero = HiggsFieldSample {
            matrix: CMatrix::zeros(2, 2),
        };
        assert_eq!(higgs_energy_density(&zero, &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn energy_density_matches_general_metric() {
        let q = DifferentialTuple::new(3, vec![c(0.2, 0.1), c(-0.4, 0.3)]).unwrap();
        let phi = hitchin_higgs_field(&q);
        let w: [f64; 3] = [0.3, -0.1, -0.2];
        let h = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            3,
            w.iter().map(|x| c((2.0 * x).exp(), 0.0)),
        ));
        let a = higgs_energy_density(&phi, &w).unwrap();
        let b = higgs_energy_density_general(phi.matrix(), &h).unwrap();
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn entry21() {
        let phi2 = hitchin_higgs_field(&DifferentialTuple::zero(2).unwrap());
        assert_eq!(mu_phi_entry21(c(1.0, 0.0), &phi2), c(0.5, 0.0));
        let phi3 = hitchin_higgs_field(&DifferentialTuple::cyclic(3, c(0.4, 0.1)).unwrap());
        assert_eq!(mu_phi_entry21(c(0.0, 2.0), &phi3), c(0.0, 2.0));
        assert_eq!(mu_phi_entry21(c(0.0, 0.0), &phi3), c(0.0, 0.0));
    }
}
