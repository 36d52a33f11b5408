use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Result};
use hitchlab::disk;
use hitchlab::harmonic_map::{solve_harmonic, EquivariantMap, SolveOptions};
use hitchlab::psh_lab::{
    criticality, energy_disk, equality_locus_gap, fd_laplacian, hessian_probe, toledo_quantities,
    DiskScenario, EnergySurface, ToledoQuantities,
};
use hitchlab::selfduality::{
    cyclic_report, energy_from_higgs, solve_cyclic_metric, CyclicHiggsData,
};
use hitchlab::surface::{
    beltrami_from_quaddiff, poincare_series, poincare_theta_series, BeltramiSample, SurfaceMesh,
};
use hitchlab::Complex64;
use serde_json::json;

use crate::config::Config;
use crate::report::{Report, Status, Verdict};

pub fn run(command: &str, cfg: &Config, out: &Path) -> Result<Report> {
    cfg.validate()?;
    std::fs::create_dir_all(out)?;
    let threads = cfg.usize("threads")?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()?;
    pool.install(|| match command {
        "mesh" => mesh(cfg, out),
        "theta" => theta(cfg, out),
        "harmonic" => harmonic(cfg, out),
        "hitchin" => hitchin(cfg, out),
        "disk" => disk_cmd(cfg, out),
        "psh-report" => psh_report(cfg, out),
        "hessian" => hessian(cfg, out),
        "crosscheck" => crosscheck(cfg, out),
        other => bail!("unknown command `{other}`"),
    })
}

fn level(cfg: &Config) -> Result<u32> {
    Ok(cfg.usize("level")? as u32)
}

fn solve_options(cfg: &Config) -> Result<SolveOptions> {
    Ok(SolveOptions {
        tol_rel: cfg.f64("harmonic_tol")?,
        ..SolveOptions::default()
    })
}

/// Direction `q̄/λ` for `q = Θ(poly)`, scaled to sup norm 1.
fn theta_direction(
    mesh: &SurfaceMesh,
    poly: &[Complex64],
    truncation: usize,
) -> Result<BeltramiSample> {
    if poly.iter().all(|c| c.norm() == 0.0) {
        return Ok(BeltramiSample::zero(mesh.num_vertices()));
    }
    let q = poincare_theta_series(mesh, poly, truncation)?;
    let mu = beltrami_from_quaddiff(mesh, &q)?;
    if mu.sup_norm == 0.0 {
        return Ok(mu);
    }
    Ok(mu.scaled(Complex64::new(1.0 / mu.sup_norm, 0.0)))
}

fn monomial(k: usize) -> Vec<Complex64> {
    let mut p = vec![Complex64::new(0.0, 0.0); k + 1];
    p[k] = Complex64::new(1.0, 0.0);
    p
}

fn direction_csv(mesh: &SurfaceMesh, mu: &BeltramiSample) -> String {
    let mut s = String::from("x,y,mu_re,mu_im\n");
    for (z, m) in mesh.vertices.iter().zip(&mu.values) {
        let _ = writeln!(s, "{},{},{},{}", z.re, z.im, m.re, m.im);
    }
    s
}

fn mesh(cfg: &Config, out: &Path) -> Result<Report> {
    let l = level(cfg)?;
    let m = SurfaceMesh::octagon(l)?;
    m.save(&out.join(format!("mesh_L{l}.txt")))?;
    let area = m.total_area();
    let chi = m.euler_characteristic();
    let verdicts = vec![
        Verdict::check("euler characteristic", chi == -2, format!("chi = {chi}")),
        Verdict::check(
            "area 4π within 1%",
            (area - 4.0 * std::f64::consts::PI).abs() < 0.04 * std::f64::consts::PI,
            format!("area = {area}"),
        ),
    ];
    let results = json!({
        "vertices": m.num_vertices(),
        "dofs": m.num_dofs(),
        "triangles": m.triangles.len(),
        "area": area,
        "mesh_size": m.mesh_size(),
        "relation_defect": m.group.relation_defect(),
    });
    Ok(Report::new("mesh", cfg, l, results, verdicts, "mesh built"))
}

fn theta(cfg: &Config, out: &Path) -> Result<Report> {
    let l = level(cfg)?;
    let m = SurfaceMesh::octagon(l)?;
    let poly = cfg.complex_list("direction")?;
    let truncation = cfg.usize("truncation")?;
    let mu = theta_direction(&m, &poly, truncation)?;
    std::fs::write(out.join("direction.csv"), direction_csv(&m, &mu))?;
    let degenerate = mu.sup_norm == 0.0;
    let verdicts = vec![if degenerate {
        Verdict::new("direction", Status::Inconclusive, "degenerate direction")
    } else {
        Verdict::check(
            "Γ-invariance of μ",
            mu.invariance_residual < cfg.f64("theta_tol")?,
            format!("residual {:e}", mu.invariance_residual),
        )
    }];
    let results = json!({
        "sup_norm": mu.sup_norm,
        "invariance_residual": mu.invariance_residual,
        "truncation": truncation,
    });
    Ok(Report::new(
        "theta",
        cfg,
        l,
        results,
        verdicts,
        "theta direction",
    ))
}

fn harmonic(cfg: &Config, out: &Path) -> Result<Report> {
    let l = level(cfg)?;
    let m = SurfaceMesh::octagon(l)?;
    let poly = cfg.complex_list("direction")?;
    let radius = cfg.f64("radius")?;
    let mu = theta_direction(&m, &poly, cfg.usize("truncation")?)?;
    let scaled: Vec<Complex64> = mu.values.iter().map(|x| x * radius).collect();
    let mu_arg = (mu.sup_norm > 0.0).then_some(&scaled[..]);
    let init = EquivariantMap::identity(&m).perturbed(cfg.f64("perturb")?, cfg.u64("seed")?);
    let opts = solve_options(cfg)?;
    let s = solve_harmonic(&m, mu_arg, &m.group, Some(&init), &opts)?;
    std::fs::write(out.join("map.txt"), s.map.to_table(&m))?;
    let converged = s.energy.gradient_norm <= opts.tol_rel * s.energy.value;
    let mut verdicts = vec![Verdict::check(
        "gradient below tolerance",
        converged,
        format!("|grad| = {:e}", s.energy.gradient_norm),
    )];
    if mu_arg.is_none() {
        let e = s.energy.value;
        let rel = (e - 4.0 * std::f64::consts::PI).abs() / (4.0 * std::f64::consts::PI);
        verdicts.push(Verdict::new(
            "identity energy 4π",
            if rel < 0.01 {
                Status::Pass
            } else {
                Status::Info
            },
            format!("relative deviation {rel:e}"),
        ));
    }
    let results = json!({
        "energy": s.energy.value,
        "gradient_norm": s.energy.gradient_norm,
        "iterations": s.iterations,
        "equivariance_defect": s.map.equivariance_defect(&m),
    });
    Ok(Report::new(
        "harmonic",
        cfg,
        l,
        results,
        verdicts,
        "harmonic map",
    ))
}

/// `q_n` from a theta series of order `n`, with `sup |q_n| λ^{-n/2} = sup`.
fn qn_field(cfg: &Config, m: &SurfaceMesh, n: usize) -> Result<Option<Vec<Complex64>>> {
    let sup = cfg.f64("qn_sup")?;
    if sup == 0.0 {
        return Ok(None);
    }
    let q = poincare_series(
        m,
        &cfg.complex_list("qn_poly")?,
        cfg.usize("truncation")?,
        n as u32,
    )?;
    let cur = q
        .values
        .iter()
        .zip(&m.vertices)
        .map(|(v, &z)| v.norm() * disk::area_density(z).powf(-(n as f64) / 2.0))
        .fold(0.0, f64::max);
    if cur == 0.0 {
        bail!("q_n theta series vanishes");
    }
    Ok(Some(q.values.iter().map(|v| v * (sup / cur)).collect()))
}

fn hitchin(cfg: &Config, out: &Path) -> Result<Report> {
    let l = level(cfg)?;
    let m = SurfaceMesh::octagon(l)?;
    let n = cfg.usize("n")?;
    let tol = cfg.f64("pde_tol")?;
    let data = CyclicHiggsData::new(&m, n, qn_field(cfg, &m, n)?)?;
    let (sol, rep) = cyclic_report(&m, &data, tol)?;
    let mut csv = String::from("x,y");
    for i in 1..=n {
        let _ = write!(csv, ",w{i}");
    }
    csv.push('\n');
    for v in 0..m.num_dofs() {
        let z = m.vertices[m.representatives[v]];
        let _ = write!(csv, "{},{}", z.re, z.im);
        for w in sol.weights.at(v) {
            let _ = write!(csv, ",{w}");
        }
        csv.push('\n');
    }
    std::fs::write(out.join("weights.csv"), csv)?;
    let verdicts = vec![
        Verdict::check(
            "discrete residual below tolerance",
            rep.residual < tol,
            format!("{:e}", rep.residual),
        ),
        Verdict::new(
            "flatness residual",
            Status::Info,
            format!("{:e}", rep.flatness),
        ),
    ];
    Ok(Report::new(
        "hitchin",
        cfg,
        l,
        serde_json::to_value(&rep)?,
        verdicts,
        "self-duality solve",
    ))
}

fn base_mu(mu: &BeltramiSample, scale: f64) -> Option<Vec<Complex64>> {
    (scale != 0.0).then(|| mu.values.iter().map(|x| x * scale).collect())
}

fn disk_surface(
    cfg: &Config,
    m: &SurfaceMesh,
    mu: &BeltramiSample,
    base: f64,
) -> Result<EnergySurface> {
    let mut sc = DiskScenario::new(m, mu, cfg.f64("radius")?, cfg.usize("grid")?);
    sc.base_mu = base_mu(mu, base);
    Ok(energy_disk(m, &sc, &solve_options(cfg)?)?)
}

fn subharmonic_verdict(name: String, s: &EnergySurface) -> Result<(Verdict, serde_json::Value)> {
    let lap = fd_laplacian(s)?;
    let status = if lap.inconclusive {
        Status::Inconclusive
    } else if lap.value > lap.error_estimate {
        Status::Pass
    } else {
        Status::Fail
    };
    let v = Verdict::new(
        name,
        status,
        format!("ΔE = {:e} ± {:e}", lap.value, lap.error_estimate),
    );
    let j = json!({"laplacian": lap.value, "error_estimate": lap.error_estimate, "step": lap.step});
    Ok((v, j))
}

fn disk_cmd(cfg: &Config, out: &Path) -> Result<Report> {
    let l = level(cfg)?;
    let m = SurfaceMesh::octagon(l)?;
    let mu = theta_direction(
        &m,
        &cfg.complex_list("direction")?,
        cfg.usize("truncation")?,
    )?;
    let base = cfg.f64_list("base_scales")?[0];
    let s = disk_surface(cfg, &m, &mu, base)?;
    std::fs::write(out.join("disk.csv"), s.to_csv())?;
    let lap = fd_laplacian(&s)?;
    let crit = criticality(&s)?;
    let results = json!({
        "laplacian": lap.value,
        "error_estimate": lap.error_estimate,
        "step": lap.step,
        "ds": crit.ds,
        "dt": crit.dt,
        "critical_tolerance": crit.tolerance,
        "critical": crit.critical,
        "centre_is_minimum": s.centre_is_minimum(),
    });
    let verdicts = if mu.sup_norm == 0.0 {
        vec![Verdict::new(
            "direction",
            Status::Inconclusive,
            "degenerate direction",
        )]
    } else {
        vec![subharmonic_verdict("ΔE > FD error".into(), &s)?.0]
    };
    let headline = if mu.sup_norm == 0.0 {
        "degenerate direction"
    } else {
        "subharmonic at resolvable scale"
    };
    Ok(Report::new("disk", cfg, l, results, verdicts, headline))
}

fn toledo_verdicts(
    k: usize,
    t: &ToledoQuantities,
    coarse: Option<&ToledoQuantities>,
) -> Vec<Verdict> {
    let (eps_ineq, eps_id) = match coarse {
        Some(c) => t.eps_with_refinement(c),
        None => (t.eps_inequality(), t.eps_identity()),
    };
    let (defect, tol) = t.decomposition_defect();
    let id = (t.alpha - (t.a / 2.0 + t.rho)).abs();
    vec![
        Verdict::check(
            format!("dir {k}: ΔE = −a + b"),
            defect <= tol,
            format!("defect {defect:e}, tolerance {tol:e}"),
        ),
        Verdict::check(
            format!("dir {k}: a ≤ α + b/2 + ε"),
            t.a <= t.alpha + t.b / 2.0 + eps_ineq,
            format!(
                "a {:e}, α + b/2 {:e}, ε {eps_ineq:e}",
                t.a,
                t.alpha + t.b / 2.0
            ),
        ),
        Verdict::check(
            format!("dir {k}: |α − (a/2 + ρ)| ≤ ε"),
            id <= eps_id,
            format!("{id:e} vs ε {eps_id:e}"),
        ),
        Verdict::check(
            format!("dir {k}: ρ ≤ ε"),
            t.rho <= eps_id,
            format!("ρ {:e}, ε {eps_id:e}", t.rho),
        ),
    ]
}

fn psh_report(cfg: &Config, out: &Path) -> Result<Report> {
    let l = level(cfg)?;
    let m = SurfaceMesh::octagon(l)?;
    let coarse_mesh = if l > 0 {
        Some(SurfaceMesh::octagon(l - 1)?)
    } else {
        None
    };
    let truncation = cfg.usize("truncation")?;
    let ndir = cfg.usize("directions")?;
    let bases = cfg.f64_list("base_scales")?;
    let stability = cfg.f64("gap_stability")?;
    let mut verdicts = Vec::new();
    let mut rows = Vec::new();
    for k in 0..ndir {
        let mu = theta_direction(&m, &monomial(k), truncation)?;
        for &b in &bases {
            let s = disk_surface(cfg, &m, &mu, b)?;
            std::fs::write(out.join(format!("disk_dir{k}_base{b}.csv")), s.to_csv())?;
            let (v, mut row) =
                subharmonic_verdict(format!("dir {k}, base {b}: ΔE > FD error"), &s)?;
            verdicts.push(v);
            row["direction"] = json!(k);
            row["base_scale"] = json!(b);
            if b == 0.0 {
                let t = toledo_quantities(&m, &s, &mu.values)?;
                let gap = equality_locus_gap(&m, &s, &mu.values)?;
                let coarse = match &coarse_mesh {
                    Some(cm) => {
                        let cmu = theta_direction(cm, &monomial(k), truncation)?;
                        let cs = disk_surface(cfg, cm, &cmu, 0.0)?;
                        Some((
                            toledo_quantities(cm, &cs, &cmu.values)?,
                            equality_locus_gap(cm, &cs, &cmu.values)?,
                        ))
                    }
                    None => None,
                };
                verdicts.extend(toledo_verdicts(k, &t, coarse.as_ref().map(|c| &c.0)));
                let g = gap.relative_min();
                verdicts.push(Verdict::check(
                    format!("dir {k}: equality gap > 0"),
                    !gap.degenerate && g > 0.0,
                    format!("{g:e}"),
                ));
                if let Some((_, cg)) = &coarse {
                    let gc = cg.relative_min();
                    verdicts.push(Verdict::check(
                        format!("dir {k}: gap stable between levels"),
                        (g - gc).abs() <= stability * gc,
                        format!("{gc:e} → {g:e}"),
                    ));
                }
                row["a"] = json!(t.a);
                row["b"] = json!(t.b);
                row["alpha"] = json!(t.alpha);
                row["rho"] = json!(t.rho);
                row["gap_plus"] = json!(gap.gap_plus);
                row["gap_minus"] = json!(gap.gap_minus);
                row["gap_relative"] = json!(g);
            }
            rows.push(row);
        }
    }
    let hess = if ndir > 0 {
        let (r, v) = hessian_run(cfg, ndir)?;
        verdicts.extend(v);
        Some(r)
    } else {
        None
    };
    let results = json!({"disks": rows, "hessian": hess});
    Ok(Report::new(
        "psh-report",
        cfg,
        l,
        results,
        verdicts,
        "strictly plurisubharmonic at resolvable scale",
    ))
}

fn hessian_run(cfg: &Config, ndir: usize) -> Result<(serde_json::Value, Vec<Verdict>)> {
    let hl = cfg.usize("hessian_level")? as u32;
    let m = SurfaceMesh::octagon(hl)?;
    let truncation = cfg.usize("truncation")?;
    let dirs = (0..ndir)
        .map(|k| theta_direction(&m, &monomial(k), truncation))
        .collect::<Result<Vec<_>>>()?;
    let r = hessian_probe(
        &m,
        &dirs,
        cfg.f64("hessian_step")?,
        &m.group,
        &solve_options(cfg)?,
    )?;
    let status = if r.inconclusive {
        Status::Inconclusive
    } else if r.positive_definite {
        Status::Pass
    } else {
        Status::Fail
    };
    let mut v = vec![Verdict::new(
        "mixed Hessian positive definite",
        status,
        format!("λ_min {:e}, noise {:e}", r.eigenvalues[0], r.noise),
    )];
    let bound = 3;
    v.push(match r.index {
        Some(i) => Verdict::check("index ≤ 3", i <= bound, format!("index {i}")),
        None => Verdict::new("index ≤ 3", Status::Inconclusive, "unresolved"),
    });
    let j = json!({
        "level": hl,
        "hermitian": r.hermitian,
        "eigenvalues": r.eigenvalues,
        "noise": r.noise,
        "real_eigenvalues": r.real_eigenvalues,
        "index": r.index,
    });
    Ok((j, v))
}

fn hessian(cfg: &Config, _out: &Path) -> Result<Report> {
    let (results, verdicts) = hessian_run(cfg, cfg.usize("directions")?)?;
    let hl = cfg.usize("hessian_level")? as u32;
    Ok(Report::new(
        "hessian",
        cfg,
        hl,
        results,
        verdicts,
        "Hessian probe",
    ))
}

fn crosscheck(cfg: &Config, _out: &Path) -> Result<Report> {
    let l = level(cfg)?;
    let m = SurfaceMesh::octagon(l)?;
    let n = cfg.usize("n")?;
    if cfg.f64("qn_sup")? != 0.0 {
        bail!("crosscheck compares against the Fuchsian harmonic map and needs qn_sup = 0");
    }
    let data = CyclicHiggsData::new(&m, n, None)?;
    let sol = solve_cyclic_metric(&m, &data, None, cfg.f64("pde_tol")?)?;
    let higgs = energy_from_higgs(&m, &data, &sol.weights)?;
    let harm = solve_harmonic(&m, None, &m.group, None, &solve_options(cfg)?)?
        .energy
        .value;
    // E(n)/E(2) = (n³ − n)/6 at the Fuchsian point.
    let factor = (n * n * n - n) as f64 / 6.0;
    let gap = (higgs - factor * harm).abs() / (factor * harm);
    let tol = cfg.f64("energy_tol")?;
    let verdicts = vec![Verdict::check(
        "relative energy gap below tolerance",
        gap < tol,
        format!("{gap:e} vs {tol:e}"),
    )];
    let results = json!({
        "higgs_energy": higgs,
        "harmonic_energy": harm,
        "rank_factor": factor,
        "relative_gap": gap,
    });
    Ok(Report::new(
        "crosscheck",
        cfg,
        l,
        results,
        verdicts,
        "energy routes agree",
    ))
}
