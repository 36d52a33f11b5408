//! Acceptance suite: one line per criterion, then a hard assert.

use std::f64::consts::PI;
use std::time::Instant;

use hitchlab::harmonic_map::{solve_harmonic, SolveOptions};
use hitchlab::higgs_algebra::{
    grading_residual, hitchin_higgs_field, mu_phi_entry21, verify_section_triangularity,
    DifferentialTuple,
};
use hitchlab::psh_lab::{
    energy_disk, equality_locus_gap, fd_laplacian, hessian_probe, toledo_quantities, DiskScenario,
    EnergySurface, GapReport, ToledoQuantities,
};
use hitchlab::selfduality::{
    energy_from_higgs, flatness_residual, solve_cyclic_metric, CyclicHiggsData, MetricWeights,
};
use hitchlab::surface::{
    beltrami_from_quaddiff, poincare_theta_series, BeltramiSample, SurfaceMesh,
};
use hitchlab::{disk, Complex64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ENERGY_REL_TOL: f64 = 0.01;
const ENERGY_TIME_BUDGET_S: f64 = 60.0;
const ROUTE_REL_TOL: f64 = 0.02;
const RANK_RATIO_TOL: f64 = 0.01;
const DECOMPOSITION_FLOOR: f64 = 0.05;
const GAP_STABILITY: f64 = 0.2;
const GRADING_TOL: f64 = 1e-10;
const TRIANGULAR_TOL: f64 = 1e-6;
const TRIANGULAR_POINTS: usize = 100;
const FLATNESS_MIN_ORDER: f64 = 1.5;
const HESSIAN_INDEX_BOUND: usize = 3;
const DISK_RADIUS: f64 = 0.04;
const DISK_HALF_WIDTH: usize = 2;
const HESSIAN_STEP: f64 = 0.02;
const OFF_MINIMUM_BASE: f64 = 0.2;

struct Sheet {
    lines: Vec<(String, bool)>,
}

impl Sheet {
    fn record(&mut self, id: &str, ok: bool, detail: String) {
        println!("[{}] {id}: {detail}", if ok { "PASS" } else { "FAIL" });
        self.lines.push((id.to_string(), ok));
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn theta_direction(mesh: &SurfaceMesh, k: usize) -> BeltramiSample {
    let mut poly = vec![c(0.0, 0.0); k + 1];
    poly[k] = c(1.0, 0.0);
    let q = poincare_theta_series(mesh, &poly, 4).unwrap();
    let mu = beltrami_from_quaddiff(mesh, &q).unwrap();
    mu.scaled(c(1.0 / mu.sup_norm, 0.0))
}

fn disk_at(mesh: &SurfaceMesh, mu: &BeltramiSample, base: f64) -> EnergySurface {
    let mut sc = DiskScenario::new(mesh, mu, DISK_RADIUS, DISK_HALF_WIDTH);
    if base != 0.0 {
        sc.base_mu = Some(mu.values.iter().map(|x| x * base).collect());
    }
    energy_disk(mesh, &sc, &SolveOptions::default()).unwrap()
}

fn harmonic_energy(mesh: &SurfaceMesh) -> f64 {
    solve_harmonic(mesh, None, &mesh.group, None, &SolveOptions::default())
        .unwrap()
        .energy
        .value
}

fn higgs_energy(mesh: &SurfaceMesh, n: usize) -> f64 {
    let d = CyclicHiggsData::new(mesh, n, None).unwrap();
    let s = solve_cyclic_metric(mesh, &d, None, 1e-10).unwrap();
    energy_from_higgs(mesh, &d, &s.weights).unwrap()
}

fn energy_criteria(sheet: &mut Sheet, m2: &SurfaceMesh, m3: &SurfaceMesh) {
    let t0 = Instant::now();
    let e2 = harmonic_energy(m2);
    let secs = t0.elapsed().as_secs_f64();
    let rel = (e2 - 4.0 * PI).abs() / (4.0 * PI);
    sheet.record(
        "1 identity energy 4π at level 2",
        rel < ENERGY_REL_TOL && secs < ENERGY_TIME_BUDGET_S,
        format!(
            "E = {e2:.6}, rel {rel:.2e} < {ENERGY_REL_TOL}, {secs:.1} s < {ENERGY_TIME_BUDGET_S} s"
        ),
    );

    let h2 = higgs_energy(m2, 2);
    let e3 = harmonic_energy(m3);
    let h3 = higgs_energy(m3, 2);
    let (g2, g3) = ((h2 - e2).abs() / e2, (h3 - e3).abs() / e3);
    sheet.record(
        "2 two-route energy agreement, levels 2 and 3",
        g2 < ROUTE_REL_TOL && g3 < ROUTE_REL_TOL,
        format!("level 2 {g2:.2e}, level 3 {g3:.2e} < {ROUTE_REL_TOL}"),
    );

    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for n in 3..=5 {
        let want = (n * n * n - n) as f64 / 6.0;
        let got = higgs_energy(m2, n) / h2;
        let r = (got - want).abs() / want;
        worst = worst.max(r);
        parts.push(format!("n={n} {got:.4}/{want}"));
    }
    sheet.record(
        "3 rank scaling E(n)/E(2) = (n³−n)/6",
        worst < RANK_RATIO_TOL,
        format!(
            "{}, worst rel {worst:.2e} < {RANK_RATIO_TOL}",
            parts.join(", ")
        ),
    );
}

struct DirectionData {
    fine: ToledoQuantities,
    coarse: ToledoQuantities,
    gap_fine: GapReport,
    gap_coarse: GapReport,
}

fn psh_criteria(sheet: &mut Sheet, m1: &SurfaceMesh, m2: &SurfaceMesh) {
    let mut failures = 0;
    let mut parts = Vec::new();
    let mut data = Vec::new();
    for k in 0..3 {
        let mu1 = theta_direction(m1, k);
        for base in [0.0, OFF_MINIMUM_BASE] {
            let s = disk_at(m1, &mu1, base);
            let lap = fd_laplacian(&s).unwrap();
            if lap.inconclusive || lap.value <= lap.error_estimate {
                failures += 1;
            }
            parts.push(format!("{:.2}±{:.1e}", lap.value, lap.error_estimate));
            if base == 0.0 {
                let mu2 = theta_direction(m2, k);
                let s2 = disk_at(m2, &mu2, 0.0);
                data.push(DirectionData {
                    coarse: toledo_quantities(m1, &s, &mu1.values).unwrap(),
                    gap_coarse: equality_locus_gap(m1, &s, &mu1.values).unwrap(),
                    fine: toledo_quantities(m2, &s2, &mu2.values).unwrap(),
                    gap_fine: equality_locus_gap(m2, &s2, &mu2.values).unwrap(),
                });
            }
        }
    }
    sheet.record(
        "4 strict PSH, 3 theta directions × 2 base points, level 1",
        failures == 0,
        format!("ΔE ± err: {}; {failures} failures", parts.join(", ")),
    );

    for (k, d) in data.iter().enumerate() {
        let t = &d.fine;
        let (eps_ineq, eps_id) = t.eps_with_refinement(&d.coarse);
        let defect = t.decomposition_defect().0;
        let lap = &t.laplacian_fd;
        let tol =
            (DECOMPOSITION_FLOOR * lap.value.abs()).max(lap.error_estimate + t.err_a + t.err_b);
        let id = (t.alpha - (t.a / 2.0 + t.rho)).abs();
        let ok = defect <= tol
            && t.a <= t.alpha + t.b / 2.0 + eps_ineq
            && id <= eps_id
            && t.rho <= eps_id;
        sheet.record(
            &format!("5 Toledo decomposition, direction {k}"),
            ok,
            format!(
                "|ΔE−(−a+b)| {defect:.2e} ≤ {tol:.2e} (floor {DECOMPOSITION_FLOOR}·ΔE); \
                 a {:.2e} ≤ α+b/2 {:.4} + ε {eps_ineq:.1e}; |α−(a/2+ρ)| {id:.2e} ≤ ε {eps_id:.1e}; ρ {:.2e}",
                t.a,
                t.alpha + t.b / 2.0,
                t.rho
            ),
        );
    }

    for (k, d) in data.iter().enumerate() {
        let (g1, g2) = (d.gap_coarse.relative_min(), d.gap_fine.relative_min());
        let ok = !d.gap_fine.degenerate && g2 > 0.0 && (g2 - g1).abs() <= GAP_STABILITY * g1;
        sheet.record(
            &format!("6 equality gap, direction {k}"),
            ok,
            format!("level 1 {g1:.6}, level 2 {g2:.6}, drift within {GAP_STABILITY}"),
        );
    }
}

fn hessian_criterion(sheet: &mut Sheet, m0: &SurfaceMesh) {
    let dirs: Vec<BeltramiSample> = (0..3).map(|k| theta_direction(m0, k)).collect();
    let r = hessian_probe(m0, &dirs, HESSIAN_STEP, &m0.group, &SolveOptions::default()).unwrap();
    let ok = r.positive_definite
        && !r.inconclusive
        && r.eigenvalues[0] > r.noise
        && r.index.is_some_and(|i| i <= HESSIAN_INDEX_BOUND);
    sheet.record(
        "7 mixed Hessian positive definite, index ≤ 3",
        ok,
        format!(
            "eigenvalues {:?}, noise {:.2e}, index {:?}",
            r.eigenvalues, r.noise, r.index
        ),
    );
}

fn algebraic_criterion(sheet: &mut Sheet) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut trace_ok = true;
    let mut grading: f64 = 0.0;
    let mut entry_ok = true;
    for _ in 0..200 {
        let n = rng.gen_range(2..=7);
        let q: Vec<Complex64> = (0..n - 1)
            .map(|_| c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
            .collect();
        let q = DifferentialTuple::new(n, q).unwrap();
        let phi = hitchin_higgs_field(&q);
        trace_ok &= phi.matrix().trace() == c(0.0, 0.0);
        let t = rng.gen_range(0.2..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        grading = grading.max(grading_residual(&q, t).unwrap());
        let mu = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        entry_ok &= mu_phi_entry21(mu, &phi) == mu * ((n - 1) as f64 / 2.0);
    }
    let mut upper: f64 = 0.0;
    let mut drift: f64 = 0.0;
    for n in 2..=7 {
        let r = verify_section_triangularity(n, TRIANGULAR_POINTS, 100 + n as u64).unwrap();
        upper = upper.max(r.max_upper_relative);
        drift = drift.max(r.max_diagonal_drift);
    }
    sheet.record(
        "8 algebraic suite",
        trace_ok
            && grading < GRADING_TOL
            && upper < TRIANGULAR_TOL
            && drift < TRIANGULAR_TOL
            && entry_ok,
        format!(
            "trace exact {trace_ok}, grading {grading:.1e} < {GRADING_TOL:e}, \
             Jacobian upper {upper:.1e} and diagonal drift {drift:.1e} < {TRIANGULAR_TOL:e}, \
             entry (2,1) exact {entry_ok}"
        ),
    );
}

fn pde_criterion(sheet: &mut Sheet, meshes: &[&SurfaceMesh]) {
    let mut constants = Vec::new();
    let mut quadratic = true;
    for m in &meshes[..2] {
        let d = CyclicHiggsData::new(m, 3, None).unwrap();
        let zero = MetricWeights::constant(m.num_dofs(), &[0.0; 3]);
        let s = solve_cyclic_metric(m, &d, Some(&zero), 1e-10).unwrap();
        let cs: Vec<f64> = s
            .residual_history
            .windows(2)
            .filter(|p| p[1] > 1e-11)
            .map(|p| p[1] / (p[0] * p[0]))
            .collect();
        quadratic &= cs.len() >= 2;
        constants.push(cs.last().copied().unwrap_or(f64::INFINITY));
    }
    let ratio = constants[0] / constants[1];
    quadratic &= ratio > 0.5 && ratio < 2.0;
    let flat: Vec<f64> = meshes
        .iter()
        .map(|m| {
            let d = CyclicHiggsData::new(m, 3, None).unwrap();
            let s = solve_cyclic_metric(m, &d, None, 1e-10).unwrap();
            flatness_residual(m, &d, &s.weights).unwrap()
        })
        .collect();
    let order = (flat[0] / flat[2]).log2() / 2.0;
    sheet.record(
        "9 Newton quadratic convergence and flatness order",
        quadratic && order >= FLATNESS_MIN_ORDER,
        format!(
            "terminal C at levels 1, 2: {:.3}, {:.3}; flatness {:.2e} → {:.2e} → {:.2e}, order {order:.2} ≥ {FLATNESS_MIN_ORDER}",
            constants[0], constants[1], flat[0], flat[1], flat[2]
        ),
    );
}

/// The non-harmonic control direction, reported but not graded.
fn toledo_control(m1: &SurfaceMesh) {
    let q = poincare_theta_series(m1, &[c(1.0, 0.0)], 4).unwrap();
    let mu = beltrami_from_quaddiff(m1, &q).unwrap();
    let w: Vec<f64> = m1
        .vertices
        .iter()
        .zip(&q.values)
        .map(|(&z, v)| v.norm_sqr() / disk::area_density(z).powi(2))
        .collect();
    let wmax = w.iter().cloned().fold(0.0, f64::max);
    let values: Vec<Complex64> = mu
        .values
        .iter()
        .zip(&w)
        .map(|(m, x)| m * (1.0 + 3.0 * x / wmax))
        .collect();
    let s = values.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let dir = BeltramiSample {
        values: values.iter().map(|x| x / s).collect(),
        sup_norm: 1.0,
        scale: mu.scale / s,
        invariance_residual: mu.invariance_residual,
    };
    let surf = disk_at(m1, &dir, 0.0);
    let t = toledo_quantities(m1, &surf, &dir.values).unwrap();
    println!(
        "[INFO] non-harmonic control: α {:.5}, a/2+ρ {:.5}, a/2+2ρ {:.5}",
        t.alpha,
        t.a / 2.0 + t.rho,
        t.a / 2.0 + 2.0 * t.rho
    );
}

#[test]
fn acceptance() {
    println!();
    let m0 = SurfaceMesh::octagon(0).unwrap();
    let m1 = SurfaceMesh::octagon(1).unwrap();
    let m2 = SurfaceMesh::octagon(2).unwrap();
    let m3 = SurfaceMesh::octagon(3).unwrap();
    let mut sheet = Sheet { lines: Vec::new() };

    energy_criteria(&mut sheet, &m2, &m3);
    psh_criteria(&mut sheet, &m1, &m2);
    hessian_criterion(&mut sheet, &m0);
    algebraic_criterion(&mut sheet);
    pde_criterion(&mut sheet, &[&m1, &m2, &m3]);
    toledo_control(&m1);
    println!(
        "[NOT REPRODUCIBLE] 10 PSH for n ≥ 3, properness, higher-rank geometry: \
         no symmetric-space harmonic-map solver; covered by 3, 8, 9 on the Higgs side"
    );

    let failed: Vec<&str> = sheet
        .lines
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(id, _)| id.as_str())
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
