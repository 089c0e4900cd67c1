use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use ddfem::elements::quadrature;
use ddfem::forms::{
    apply_dirichlet, assemble, triple_norm_squared, AssemblyOptions, BoundaryCondition, Field,
    Formulation, FormulationKind, ProblemData, VectorData,
};
use ddfem::manufactured::{verify_strong_system, ManufacturedCase};
use ddfem::mesh::{mesh_size, unit_square_mesh, BoundaryTag, Point};
use ddfem::postproc::{
    error_norms, nodal_error_field, write_nodal_csv, ExactSolution, ReportRow, StudyReport,
    ERROR_COLUMNS,
};
use ddfem::study::{
    case_dataset, report_from_entries, sampled_problem_data, solve_case, sweep_entry_with,
    MeshFamily, StudyError, SweepEntry,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use crate::config::{CaseConfig, RunConfig};
use crate::CliError;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn prepare_output(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn options(config: &RunConfig) -> AssemblyOptions {
    AssemblyOptions {
        quadrature_degree: config.quadrature_degree,
        symmetric: false,
    }
}

fn family(config: &RunConfig, case: &ManufacturedCase) -> MeshFamily {
    MeshFamily::for_case(case, config.mesh.grading)
}

fn file_stem(config: &RunConfig) -> String {
    format!(
        "{}_{}_k{}",
        config.case_label(),
        config.formulation.kind().name(),
        config.k
    )
}

/// Problem data for one mesh: exact fields, or sampled ones for case 3
/// with `nd` set.
fn data_for(
    config: &RunConfig,
    case: &ManufacturedCase,
    mesh: &ddfem::mesh::Mesh,
) -> Result<ProblemData, StudyError> {
    match config.case {
        CaseConfig::Case3 { nd: Some(nd) } => {
            sampled_problem_data(case, mesh, &case_dataset(case, nd)?)
        }
        _ => Ok(case.problem_data()),
    }
}

fn vector_csv(values: &[f64]) -> String {
    let mut out = String::from("dof,value\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{i},{v:e}");
    }
    out
}

fn audit_json(entries: &[SweepEntry]) -> String {
    let rows: Vec<serde_json::Value> = entries
        .iter()
        .map(|e| {
            serde_json::json!({
                "n": e.n,
                "nodes": e.audit.nodes,
                "violations": e.audit.violations,
                "max_value": e.audit.max_value,
            })
        })
        .collect();
    serde_json::to_string_pretty(&rows).expect("audit serializes")
}

pub fn cmd_solve(config: &RunConfig) -> Result<(), CliError> {
    let case = config.manufactured_case()?;
    let formulation = config.formulation()?;
    let mesh = family(config, &case)
        .build(config.mesh.n)
        .map_err(StudyError::from)?;
    let data = data_for(config, &case, &mesh)?;
    let (out, errors, audit) = solve_case(&mesh, &formulation, &case, &data, options(config))?;
    let dir = &config.output;
    prepare_output(dir)?;
    for field in Field::ALL {
        let name = match field {
            Field::U => "u",
            Field::E => "e",
            Field::S => "s",
            Field::Lambda => "lambda",
            Field::Mu => "mu",
        };
        write(
            &dir.join(format!("solution_{name}.csv")),
            &vector_csv(out.solution.field(field)),
        )?;
    }
    let h = mesh_size(&mesh).map_err(StudyError::from)?;
    let mut report = StudyReport::new(config.case_label(), formulation.kind.name());
    report.push(ReportRow {
        h,
        dofs: out.n_dofs(),
        errors,
    });
    let stem = file_stem(config);
    let report_path = dir.join(format!("solve_{stem}.csv"));
    report
        .write_csv(&report_path)
        .map_err(|e| io_err(&report_path, e))?;
    let entry = SweepEntry {
        n: config.mesh.n,
        h,
        dofs: out.n_dofs(),
        errors,
        audit,
        relative_residual: out.relative_residual,
    };
    write(
        &dir.join(format!("audit_{stem}.json")),
        &audit_json(&[entry]),
    )?;
    let nodal = nodal_error_field(&out.spaces.scalar, &out.solution.u, |p| case.u(p))
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let nodal_path = dir.join(format!("nodal_error_u_{stem}.csv"));
    write_nodal_csv(&nodal, &nodal_path).map_err(|e| io_err(&nodal_path, e))?;
    println!(
        "{stem} n={} h={h:.4e} dofs={} residual={:.2e}",
        config.mesh.n,
        out.n_dofs(),
        out.relative_residual
    );
    for (name, v) in ERROR_COLUMNS.iter().zip(errors.to_array()) {
        println!("  {name:<10} {v:.6e}");
    }
    println!(
        "  second-law audit: {} of {} nodes above tolerance (max s·e {:.3e})",
        audit.violations, audit.nodes, audit.max_value
    );
    Ok(())
}

/// One solve per mesh size; mesh failures abort with the size named.
fn run_sweep(
    config: &RunConfig,
    case: &ManufacturedCase,
    formulation: &Formulation,
    make_data: &(dyn Fn(&ddfem::mesh::Mesh) -> Result<ProblemData, StudyError> + Sync),
) -> Result<Vec<SweepEntry>, CliError> {
    if config.mesh.sizes.len() < 3 {
        return Err(CliError::Config(format!(
            "mesh.sizes: a sweep needs at least 3 meshes, got {}",
            config.mesh.sizes.len()
        )));
    }
    let fam = family(config, case);
    let opts = options(config);
    let results: Vec<Result<SweepEntry, StudyError>> = config
        .mesh
        .sizes
        .par_iter()
        .map(|&n| sweep_entry_with(case, formulation, fam, n, opts, make_data))
        .collect();
    results
        .into_iter()
        .map(|r| r.map_err(CliError::from))
        .collect()
}

fn write_report(
    dir: &Path,
    stem: &str,
    report: &StudyReport,
    entries: &[SweepEntry],
) -> Result<(), CliError> {
    let csv = dir.join(format!("{stem}.csv"));
    report.write_csv(&csv).map_err(|e| io_err(&csv, e))?;
    let svg = dir.join(format!("{stem}.svg"));
    report.write_svg(&svg).map_err(|e| io_err(&svg, e))?;
    write(
        &dir.join(format!("{stem}_audit.json")),
        &audit_json(entries),
    )
}

fn print_rates(title: &str, report: &StudyReport, entries: &[SweepEntry]) {
    println!("{title}");
    for name in ERROR_COLUMNS {
        let fit = report
            .rate(name)
            .map_or("n/a".to_string(), |r| format!("{r:.3}"));
        let last = report
            .last_pair_rate(name)
            .map_or("n/a".to_string(), |r| format!("{r:.3}"));
        println!("  {name:<10} rate {fit:>7} (last pair {last:>7})");
    }
    let violations: usize = entries.iter().map(|e| e.audit.violations).sum();
    println!("  second-law violations: {violations}");
}

pub fn cmd_convergence(config: &RunConfig) -> Result<(), CliError> {
    let case = config.manufactured_case()?;
    let formulation = config.formulation()?;
    let entries = run_sweep(config, &case, &formulation, &|mesh| {
        data_for(config, &case, mesh)
    })?;
    let report = report_from_entries(&config.case_label(), formulation.kind.name(), &entries);
    prepare_output(&config.output)?;
    let stem = format!("convergence_{}", file_stem(config));
    write_report(&config.output, &stem, &report, &entries)?;
    print_rates(&stem, &report, &entries);
    Ok(())
}

pub fn cmd_data_study(config: &RunConfig) -> Result<(), CliError> {
    if matches!(config.case, CaseConfig::Case2 { .. }) {
        return Err(CliError::Config(
            "case: data studies sample the unit square; use case1 or case3".into(),
        ));
    }
    let case = config.manufactured_case()?;
    let formulation = config.formulation()?;
    prepare_output(&config.output)?;
    for &nd in &config.data_study.nd {
        let dataset = case_dataset(&case, nd).map_err(|e| CliError::Config(e.to_string()))?;
        let entries = run_sweep(config, &case, &formulation, &|mesh| {
            sampled_problem_data(&case, mesh, &dataset)
        })?;
        let report = report_from_entries(&config.case_label(), formulation.kind.name(), &entries);
        let stem = format!(
            "data_study_{}_{}_nd{nd}",
            match config.case {
                CaseConfig::Case1 => "case1",
                _ => "case3",
            },
            formulation.kind.name()
        );
        write_report(&config.output, &stem, &report, &entries)?;
        dataset
            .write_csv(config.output.join(format!("dataset_nd{nd}.csv")))
            .map_err(|e| CliError::Io(e.to_string()))?;
        print_rates(&stem, &report, &entries);
        if let [.., a, b] = entries.as_slice() {
            let change = (a.errors.u_l2 - b.errors.u_l2).abs() / a.errors.u_l2;
            println!(
                "  u_L2 change over the last two meshes: {:.1}%",
                100.0 * change
            );
        }
    }
    Ok(())
}

const STRONG_TOL: f64 = 1e-6;
const QUADRATURE_TOL: f64 = 1e-14;
const PATCH_TOL: f64 = 1e-8;
const COERCIVITY_RATIO: f64 = 0.05;
const SKEW_TOL: f64 = 1e-12;

// u = x with e = ∇u, s = −e, λ = 0, μ = 0.
struct Patch;

impl ExactSolution for Patch {
    fn u(&self, p: Point) -> f64 {
        p[0]
    }
    fn grad_u(&self, _: Point) -> [f64; 2] {
        [1.0, 0.0]
    }
    fn lambda(&self, _: Point) -> f64 {
        0.0
    }
    fn grad_lambda(&self, _: Point) -> [f64; 2] {
        [0.0; 2]
    }
    fn e(&self, _: Point) -> [f64; 2] {
        [1.0, 0.0]
    }
    fn s(&self, _: Point) -> [f64; 2] {
        [-1.0, 0.0]
    }
    fn mu(&self, _: Point) -> [f64; 2] {
        [0.0; 2]
    }
    fn div_e(&self, _: Point) -> f64 {
        0.0
    }
    fn div_s(&self, _: Point) -> f64 {
        0.0
    }
    fn div_mu(&self, _: Point) -> f64 {
        0.0
    }
}

fn check_strong_systems(config: &RunConfig) -> Result<String, String> {
    let pi = std::f64::consts::PI;
    let mut cases = vec![
        ("case1", ManufacturedCase::case1()),
        ("case3", ManufacturedCase::case3()),
    ];
    for phi in [pi / 4.0, pi / 2.0, 3.0 * pi / 4.0] {
        cases.push((
            "case2",
            ManufacturedCase::case2(phi).map_err(|e| e.to_string())?,
        ));
    }
    let mut worst = 0.0f64;
    for (name, case) in cases {
        let r = verify_strong_system(&case, config.verify.samples, config.verify.fd_step)
            .map_err(|e| format!("{name}: {e}"))?;
        if r.max() > STRONG_TOL {
            return Err(format!("{name}: residuals {:?} exceed {STRONG_TOL:e}", r.0));
        }
        worst = worst.max(r.max());
    }
    Ok(format!(
        "max residual {worst:.2e} (fd step {:e})",
        config.verify.fd_step
    ))
}

fn check_quadrature() -> Result<String, String> {
    let factorial = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
    let mut worst = 0.0f64;
    for d in 1..=10 {
        let rule = quadrature(d).map_err(|e| e.to_string())?;
        for a in 0..=d {
            for b in 0..=d - a {
                let q: f64 = rule
                    .iter()
                    .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                    .sum();
                worst = worst.max((q - factorial(a) * factorial(b) / factorial(a + b + 2)).abs());
            }
        }
    }
    if worst > QUADRATURE_TOL {
        return Err(format!("monomial error {worst:.2e}"));
    }
    Ok(format!("max monomial error {worst:.2e}"))
}

fn check_patch() -> Result<String, String> {
    let tags = [
        BoundaryTag::Left,
        BoundaryTag::Right,
        BoundaryTag::Bottom,
        BoundaryTag::Top,
    ];
    let mut data = ProblemData::zero(&tags);
    data.e_tilde = VectorData::constant([1.0, 0.0]);
    data.s_tilde = VectorData::constant([-1.0, 0.0]);
    for tag in tags {
        let bc = BoundaryCondition::Dirichlet {
            u: Arc::new(|p: Point| p[0]),
            lambda: Arc::new(|_| 0.0),
        };
        data.boundary.insert(tag, bc);
    }
    let mesh = unit_square_mesh(4).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for kind in FormulationKind::ALL {
        let f = Formulation::new(kind, 0).map_err(|e| e.to_string())?;
        let out = ddfem::study::solve(&mesh, &f, &data, AssemblyOptions::default())
            .map_err(|e| format!("{kind}: {e}"))?;
        let err = error_norms(&mesh, &out.spaces, &out.solution, &Patch, None)
            .map_err(|e| e.to_string())?;
        worst = err.to_array().into_iter().fold(worst, f64::max);
    }
    if worst > PATCH_TOL {
        return Err(format!("max error {worst:.2e}"));
    }
    Ok(format!("max error {worst:.2e}"))
}

fn check_coercivity(config: &RunConfig) -> Result<String, String> {
    let mesh = unit_square_mesh(16).map_err(|e| e.to_string())?;
    let h = mesh_size(&mesh).map_err(|e| e.to_string())?;
    let case = config.manufactured_case().map_err(|e| e.to_string())?;
    let data = case.problem_data();
    let f = Formulation::new(FormulationKind::EqualOrderFull, 0).map_err(|e| e.to_string())?;
    let sys = assemble(&mesh, &f, &data).map_err(|e| e.to_string())?;
    let constrained = apply_dirichlet(sys.clone(), &mesh, &data)
        .map_err(|e| e.to_string())?
        .dirichlet;
    let mut rng = StdRng::seed_from_u64(config.seed);
    let mut worst = f64::INFINITY;
    for _ in 0..config.verify.coercivity_samples {
        let mut z: Vec<f64> = (0..sys.n_dofs())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        for (d, _) in &constrained {
            z[*d] = 0.0;
        }
        let kz = sys.matrix.matvec(&z).map_err(|e| e.to_string())?;
        let num: f64 = z.iter().zip(&kz).map(|(a, b)| a * b).sum();
        let den = triple_norm_squared(&mesh, &sys.spaces, &z, data.kappa, h)
            .map_err(|e| e.to_string())?;
        worst = worst.min(num / den);
    }
    if !(worst >= COERCIVITY_RATIO) {
        return Err(format!("min ratio {worst:.4} < {COERCIVITY_RATIO}"));
    }
    Ok(format!(
        "min ratio {worst:.4} over {} samples",
        config.verify.coercivity_samples
    ))
}

/// Primal/multiplier coupling blocks are antisymmetric, the other blocks
/// symmetric.
fn check_skew_structure() -> Result<String, String> {
    let mesh = unit_square_mesh(3).map_err(|e| e.to_string())?;
    let data = ManufacturedCase::case1().problem_data();
    let mut entries = 0usize;
    for kind in FormulationKind::ALL {
        for k in 0..=2 {
            let f = Formulation::new(kind, k).map_err(|e| e.to_string())?;
            let sys = assemble(&mesh, &f, &data).map_err(|e| e.to_string())?;
            let m = &sys.matrix;
            let tol = SKEW_TOL * m.max_abs();
            let primal: Vec<bool> = (0..m.dim())
                .map(|i| {
                    Field::ALL
                        .into_iter()
                        .find(|f| sys.field_range(*f).contains(&i))
                        .is_some_and(Field::is_primal)
                })
                .collect();
            for r in 0..m.dim() {
                let (cols, vals) = m.row(r);
                for (&c, &v) in cols.iter().zip(vals) {
                    let sign = if primal[r] == primal[c] { -1.0 } else { 1.0 };
                    if (v + sign * m.get(c, r)).abs() > tol {
                        return Err(format!("{kind} k={k}: entry ({r},{c})"));
                    }
                    entries += 1;
                }
            }
        }
    }
    Ok(format!("{entries} entries checked"))
}

pub fn cmd_verify(config: &RunConfig) -> Result<(), CliError> {
    let checks: [(&str, Box<dyn Fn() -> Result<String, String>>); 5] = [
        ("strong system", Box::new(|| check_strong_systems(config))),
        ("quadrature exactness", Box::new(check_quadrature)),
        ("patch test", Box::new(check_patch)),
        ("coercivity sampling", Box::new(|| check_coercivity(config))),
        ("skew structure", Box::new(check_skew_structure)),
    ];
    let mut failed = Vec::new();
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                println!("FAIL {name}: {detail}");
                failed.push(name);
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::VerificationFailed(failed.join(", ")))
    }
}
