use hitchlab::disk;
use hitchlab::harmonic_map::SolveOptions;
use hitchlab::psh_lab::{
    check_independent, criticality, energy_disk, equality_locus_gap, fd_laplacian, fd_laplacian_at,
    hessian_probe, toledo_quantities, DiskScenario, EnergySurface,
};
use hitchlab::surface::{
    beltrami_from_quaddiff, poincare_theta_series, BeltramiSample, SurfaceMesh,
};
use hitchlab::{Complex64, Error};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Theta-series direction `q̄/λ` for `q = Θ(z^k)`, normalised to sup 1.
fn theta_direction(mesh: &SurfaceMesh, k: usize) -> BeltramiSample {
    let mut poly = vec![c(0.0, 0.0); k + 1];
    poly[k] = c(1.0, 0.0);
    let q = poincare_theta_series(mesh, &poly, 4).unwrap();
    let mu = beltrami_from_quaddiff(mesh, &q).unwrap();
    mu.scaled(c(1.0 / mu.sup_norm, 0.0))
}

/// `(1 + 3|q|²/λ² / max) q̄/λ`: Γ-invariant but not harmonic.
fn nonharmonic_direction(mesh: &SurfaceMesh) -> BeltramiSample {
    let q = poincare_theta_series(mesh, &[c(1.0, 0.0)], 4).unwrap();
    let mu = beltrami_from_quaddiff(mesh, &q).unwrap();
    let w: Vec<f64> = mesh
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
    BeltramiSample {
        values: values.iter().map(|x| x / s).collect(),
        sup_norm: 1.0,
        scale: mu.scale / s,
        invariance_residual: mu.invariance_residual,
    }
}

#[test]
fn stencil_on_quartic_with_offset_centre() {
    let h = 0.01;
    let s = EnergySurface::synthetic(4, h, |s, t| (s * s + t * t).powi(2));
    let at0 = fd_laplacian(&s).unwrap();
    // Five-point truncation of (s²+t²)² is exactly 4h².
    assert!((at0.value - 4.0 * h * h).abs() < 1e-10);
    let off = fd_laplacian_at(&s, 1, 2).unwrap();
    let u0 = h * h + 4.0 * h * h;
    assert!(
        (off.value - 16.0 * u0).abs() < 4.0 * h * h + 1e-10,
        "{off:?}"
    );
    assert!((off.error_estimate - 4.0 * h * h).abs() < 1e-9);
    assert!(fd_laplacian_at(&s, 3, 0).is_err());
}

#[test]
fn zero_direction_gives_a_constant_disk() {
    let m = SurfaceMesh::octagon(0).unwrap();
    let zero = BeltramiSample::zero(m.num_vertices());
    let s = energy_disk(
        &m,
        &DiskScenario::new(&m, &zero, 0.04, 2),
        &SolveOptions::default(),
    )
    .unwrap();
    let e0 = s.energy(0, 0);
    assert!(s.values.iter().all(|&e| e == e0));
    let t = toledo_quantities(&m, &s, &zero.values).unwrap();
    assert_eq!((t.a, t.b, t.alpha, t.rho), (0.0, 0.0, 0.0, 0.0));
    assert!(equality_locus_gap(&m, &s, &zero.values).unwrap().degenerate);
}

#[test]
fn opposite_direction_reflects_the_grid() {
    let m = SurfaceMesh::octagon(0).unwrap();
    let mu = theta_direction(&m, 1);
    let neg = mu.scaled(c(-1.0, 0.0));
    let opts = SolveOptions::default();
    let a = energy_disk(&m, &DiskScenario::new(&m, &mu, 0.04, 2), &opts).unwrap();
    let b = energy_disk(&m, &DiskScenario::new(&m, &neg, 0.04, 2), &opts).unwrap();
    for i in -2..=2 {
        for j in -2..=2 {
            let (x, y) = (a.energy(i, j), b.energy(-i, -j));
            assert!((x - y).abs() < 1e-9 * x, "{i} {j}");
        }
    }
}

#[test]
fn fuchsian_point_is_a_strict_critical_minimum() {
    let m = SurfaceMesh::octagon(1).unwrap();
    for k in 0..3 {
        let mu = theta_direction(&m, k);
        let s = energy_disk(
            &m,
            &DiskScenario::new(&m, &mu, 0.04, 2),
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(s.centre_is_minimum());
        let cr = criticality(&s).unwrap();
        assert!(cr.critical, "{cr:?}");
        let lap = fd_laplacian(&s).unwrap();
        assert!(
            !lap.inconclusive && lap.value > lap.error_estimate,
            "{lap:?}"
        );
        assert!(s.residuals.iter().all(|&r| r < 1e-9));
        let csv = s.to_csv();
        assert_eq!(csv.lines().count(), 26);
        assert!(csv.starts_with("s,t,energy,residual\n"));
    }
}

#[test]
fn off_minimum_base_point_is_subharmonic_and_not_critical() {
    let m = SurfaceMesh::octagon(1).unwrap();
    let mu = theta_direction(&m, 0);
    let mut sc = DiskScenario::new(&m, &mu, 0.04, 2);
    sc.base_mu = Some(mu.values.iter().map(|x| x * 0.2).collect());
    let s = energy_disk(&m, &sc, &SolveOptions::default()).unwrap();
    let lap = fd_laplacian(&s).unwrap();
    assert!(lap.value > lap.error_estimate, "{lap:?}");
    assert!(!criticality(&s).unwrap().critical);
}

#[test]
fn toledo_decomposition_for_theta_direction() {
    let m = SurfaceMesh::octagon(1).unwrap();
    let mu = theta_direction(&m, 0);
    let s = energy_disk(
        &m,
        &DiskScenario::new(&m, &mu, 0.04, 2),
        &SolveOptions::default(),
    )
    .unwrap();
    let t = toledo_quantities(&m, &s, &mu.values).unwrap();
    let (defect, tol) = t.decomposition_defect();
    assert!(defect <= tol, "{defect} {tol}");
    assert!(t.rho <= t.err_rho);
    assert!(t.a <= t.alpha + t.b / 2.0 + t.eps_inequality());
    // The first variation of the identity along a harmonic Beltrami
    // differential vanishes, so W and with it a, α, ρ are small against b.
    assert!(t.a.abs() < 1e-3 * t.b && t.alpha < 1e-3 * t.b);
    let g = equality_locus_gap(&m, &s, &mu.values).unwrap();
    assert!(g.scale > 0.0 && (g.relative_min() - 1.0).abs() < 1e-3);
}

#[test]
fn toledo_identities_for_nonharmonic_direction() {
    let m = SurfaceMesh::octagon(1).unwrap();
    let mu = nonharmonic_direction(&m);
    let s = energy_disk(
        &m,
        &DiskScenario::new(&m, &mu, 0.04, 2),
        &SolveOptions::default(),
    )
    .unwrap();
    let t = toledo_quantities(&m, &s, &mu.values).unwrap();
    println!("{t:?}");
    let (defect, tol) = t.decomposition_defect();
    assert!(
        defect <= tol && defect < 0.005 * t.laplacian_fd.value,
        "{defect}"
    );
    assert!(t.a > 0.01 * t.b && t.rho < 0.0);
    assert!(t.a <= t.alpha + t.b / 2.0);
    // Measured relation between α, a and ρ with the integrands as defined.
    assert!((t.alpha - (t.a / 2.0 + 2.0 * t.rho)).abs() < 0.01 * t.a);
}

#[test]
fn hessian_probe_single_direction_and_duplicates() {
    let m = SurfaceMesh::octagon(0).unwrap();
    let opts = SolveOptions::default();
    let mu = theta_direction(&m, 0);
    let r = hessian_probe(&m, std::slice::from_ref(&mu), 0.02, &m.group, &opts).unwrap();
    let s = energy_disk(&m, &DiskScenario::new(&m, &mu, 0.04, 2), &opts).unwrap();
    let lap = fd_laplacian(&s).unwrap().value;
    assert!((r.hermitian[0][0].0 - lap / 4.0).abs() < 1e-6 * lap);
    assert_eq!(r.index, Some(0));
    let dup = vec![mu.clone(), mu.scaled(c(0.0, 2.0))];
    assert!(matches!(
        check_independent(&m, &dup),
        Err(Error::DependentDirections(_))
    ));
    assert!(hessian_probe(&m, &dup, 0.02, &m.group, &opts).is_err());
}

#[test]
fn hessian_of_three_theta_directions_is_positive_definite() {
    let m = SurfaceMesh::octagon(0).unwrap();
    let dirs: Vec<BeltramiSample> = (0..3).map(|k| theta_direction(&m, k)).collect();
    let r = hessian_probe(&m, &dirs, 0.02, &m.group, &SolveOptions::default()).unwrap();
    println!("{r:?}");
    assert!(r.positive_definite && !r.inconclusive);
    for a in 0..3 {
        for b in 0..3 {
            let (x, y) = (r.hermitian[a][b], r.hermitian[b][a]);
            assert!((x.0 - y.0).abs() < 1e-12 && (x.1 + y.1).abs() < 1e-12);
        }
    }
    // A Hermitian-positive block bounds the real index by the complex dimension.
    assert!(r.index.map_or(true, |i| i <= 3));
}
