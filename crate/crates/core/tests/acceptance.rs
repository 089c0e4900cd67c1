//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Run with `cargo test -p ddfem --test acceptance`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use ddfem::elements::{lagrange_eval, lagrange_grad, n_basis, quadrature};
use ddfem::forms::{
    apply_dirichlet, assemble, triple_norm_squared, AssemblyOptions, BoundaryCondition, Field,
    Formulation, FormulationKind, ProblemData, StabilizationParams, VectorData,
};
use ddfem::manufactured::{verify_strong_system, ManufacturedCase};
use ddfem::mesh::{mesh_size, unit_square_mesh, BoundaryTag, Point};
use ddfem::postproc::{error_norms, ExactSolution, StudyReport};
use ddfem::study::{
    convergence_sweep, data_sweep, interpolation_sweep, report_from_entries, MeshFamily,
    SweepEntry, AUDIT_TOLERANCE,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const SIZES: [usize; 4] = [8, 16, 32, 64];

// Criterion 1
const PATCH_TOL: f64 = 1e-8;
const PATCH_SIZES: [usize; 4] = [1, 2, 5, 8];
const PATCH_TIME: Duration = Duration::from_secs(1);
// Criterion 2
const C2_L2_RATE: (f64, f64) = (2.0, 0.2);
const C2_H1_RATE: (f64, f64) = (1.0, 0.15);
const C2_NATURAL_VECTOR_MIN: f64 = 0.9;
const C2_EQUAL_ORDER_VECTOR_MIN: f64 = 1.3;
// Criterion 3
const C3_RATE_TOL: f64 = 0.2;
const C3_FLUX_EXCESS: f64 = 1.6;
const C3_UNSTAB_EXCESS: f64 = 0.5;
// Criterion 5
const C5_TOL: f64 = 0.1;
const C5_GRADING: f64 = 2.0;
const C5_PHIS: [f64; 3] = [PI / 4.0, PI / 2.0, 3.0 * PI / 4.0];
const C5_NATURAL_U_H1: [f64; 3] = [0.57, 0.72, 0.81];
const C5_NATURAL_LAMBDA_H1: f64 = 0.99;
const C5_UNSTAB_U_H1: [f64; 3] = [0.46, 0.59, 0.64];
const C5_NATURAL_S_L2: [f64; 3] = [0.57, 0.73, 0.83];
const C5_INTERPOLATION: [f64; 3] = [0.57, 0.66, 0.80];
// Criterion 6
const C6_ND: usize = 64;
const C6_EQUAL_ORDER_SIZES: [usize; 4] = [32, 64, 128, 256];
const C6_NATURAL_SIZES: [usize; 5] = [32, 64, 128, 256, 512];
const C6_STAGNATION: f64 = 0.10;
// Criterion 8
const C8_N: usize = 16;
const C8_SAMPLES: u64 = 1000;
const C8_RATIO: f64 = 0.05;
// Criterion 9
const C9_RESIDUAL: f64 = 1e-6;
const C9_FD_STEP: f64 = 1e-5;
const C9_SAMPLES: usize = 500;
const C9_QUADRATURE: f64 = 1e-14;
const C9_BASIS_STEP: f64 = 1e-6;
const C9_BASIS_TOL: f64 = 1e-7;
// Criterion 11
const C11_BUDGET: Duration = Duration::from_secs(300);

struct Outcome {
    pass: bool,
    detail: String,
}

/// Collects failed checks plus an informational log for one criterion.
#[derive(Default)]
struct Check {
    failures: Vec<String>,
    log: String,
}

impl Check {
    fn expect(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn within(&mut self, label: &str, value: f64, (target, tol): (f64, f64)) {
        self.expect((value - target).abs() <= tol, || {
            format!("{label} = {value:.3} not in {target} ± {tol}")
        });
    }

    fn at_least(&mut self, label: &str, value: f64, min: f64) {
        self.expect(value >= min, || format!("{label} = {value:.3} < {min}"));
    }

    fn at_most(&mut self, label: &str, value: f64, max: f64) {
        self.expect(value <= max, || format!("{label} = {value:.3} > {max}"));
    }

    fn note(&mut self, text: impl AsRef<str>) {
        if !self.log.is_empty() {
            self.log.push_str("; ");
        }
        self.log.push_str(text.as_ref());
    }

    fn finish(self) -> Outcome {
        let mut detail = self.log;
        if !self.failures.is_empty() {
            let _ = write!(detail, " | failed: {}", self.failures.join(", "));
        }
        Outcome {
            pass: self.failures.is_empty(),
            detail,
        }
    }
}

/// Audit totals gathered from every solve of criteria 1 to 6.
#[derive(Default)]
struct AuditLog {
    rows: Vec<(String, usize, f64)>,
}

impl AuditLog {
    fn add(&mut self, label: String, entries: &[SweepEntry]) {
        let violations = entries.iter().map(|e| e.audit.violations).sum();
        let worst = entries
            .iter()
            .map(|e| e.audit.max_value)
            .fold(f64::NEG_INFINITY, f64::max);
        self.rows.push((label, violations, worst));
    }
}

fn rate(report: &StudyReport, column: &str) -> f64 {
    report.rate(column).unwrap_or(f64::NAN)
}

fn sweep(
    case: &ManufacturedCase,
    kind: FormulationKind,
    k: usize,
    family: MeshFamily,
    sizes: &[usize],
) -> Result<Vec<SweepEntry>, String> {
    let f = Formulation::new(kind, k).map_err(|e| e.to_string())?;
    convergence_sweep(case, &f, family, sizes, AssemblyOptions::default())
        .map_err(|e| format!("{kind}: {e}"))
}

// Exact fields of the patch test: u = x, e = ∇u, s = −e, λ = 0, μ = 0.
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

fn patch_data() -> ProblemData {
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
    data
}

fn criterion1(audits: &mut AuditLog) -> Outcome {
    let mut c = Check::default();
    let start = Instant::now();
    let data = patch_data();
    let mut worst = 0.0f64;
    for kind in FormulationKind::ALL {
        let f = Formulation::new(kind, 0).unwrap();
        let mut entries = Vec::new();
        for n in PATCH_SIZES {
            let mesh = unit_square_mesh(n).unwrap();
            match ddfem::study::solve(&mesh, &f, &data, AssemblyOptions::default()) {
                Ok(out) => {
                    let err = error_norms(&mesh, &out.spaces, &out.solution, &Patch, None).unwrap();
                    let e = err.to_array().into_iter().fold(0.0, f64::max);
                    worst = worst.max(e);
                    c.at_most(&format!("{kind} n={n} max error"), e, PATCH_TOL);
                    let audit = ddfem::postproc::second_law_audit(
                        &out.spaces,
                        &out.solution,
                        AUDIT_TOLERANCE,
                    );
                    entries.push(SweepEntry {
                        n,
                        h: mesh_size(&mesh).unwrap(),
                        dofs: out.n_dofs(),
                        errors: err,
                        audit,
                        relative_residual: out.relative_residual,
                    });
                }
                Err(e) => c.expect(false, || format!("{kind} n={n}: {e}")),
            }
        }
        audits.add(format!("C1 {kind}"), &entries);
    }
    let elapsed = start.elapsed();
    c.expect(elapsed < PATCH_TIME, || {
        format!("runtime {elapsed:.2?} ≥ {PATCH_TIME:?}")
    });
    c.note(format!(
        "max error {worst:.1e} over all formulations and meshes, {elapsed:.2?}"
    ));
    c.finish()
}

fn criterion2(audits: &mut AuditLog) -> (Outcome, Duration) {
    let mut c = Check::default();
    let start = Instant::now();
    let case = ManufacturedCase::case1();
    for kind in FormulationKind::ALL {
        let entries = match sweep(&case, kind, 0, MeshFamily::UnitSquare, &SIZES) {
            Ok(e) => e,
            Err(e) => {
                c.expect(false, || e);
                continue;
            }
        };
        audits.add(format!("C2 {kind}"), &entries);
        let r = report_from_entries("case1", kind.name(), &entries);
        for col in ["u_L2", "lambda_L2"] {
            c.within(&format!("{kind} {col}"), rate(&r, col), C2_L2_RATE);
        }
        for col in ["u_H1", "lambda_H1"] {
            c.within(&format!("{kind} {col}"), rate(&r, col), C2_H1_RATE);
        }
        let min = if kind.is_equal_order() {
            C2_EQUAL_ORDER_VECTOR_MIN
        } else {
            C2_NATURAL_VECTOR_MIN
        };
        for col in ["e_L2", "s_L2", "mu_L2"] {
            c.at_least(&format!("{kind} {col}"), rate(&r, col), min);
        }
        c.note(format!(
            "{kind}: u {:.2}/{:.2} λ {:.2}/{:.2} e {:.2} s {:.2} μ {:.2}",
            rate(&r, "u_L2"),
            rate(&r, "u_H1"),
            rate(&r, "lambda_L2"),
            rate(&r, "lambda_H1"),
            rate(&r, "e_L2"),
            rate(&r, "s_L2"),
            rate(&r, "mu_L2"),
        ));
    }
    (c.finish(), start.elapsed())
}

/// Criteria 3 and 4 share the k = 1, 2 sweeps.
fn criteria3_and_4(audits: &mut AuditLog) -> (Outcome, Outcome) {
    let mut c3 = Check::default();
    let mut c4 = Check::default();
    let case = ManufacturedCase::case1();
    for k in [1, 2] {
        let kf = k as f64;
        let mut u_l2 = std::collections::BTreeMap::new();
        for kind in [
            FormulationKind::EqualOrderUnstabilized,
            FormulationKind::EqualOrderMinimal,
            FormulationKind::EqualOrderFull,
        ] {
            let entries = match sweep(&case, kind, k, MeshFamily::UnitSquare, &SIZES) {
                Ok(e) => e,
                Err(e) => {
                    c3.expect(false, || e);
                    continue;
                }
            };
            audits.add(format!("C3 {kind} k={k}"), &entries);
            let r = report_from_entries("case1", kind.name(), &entries);
            if kind == FormulationKind::EqualOrderUnstabilized {
                for col in ["u_H1", "lambda_H1"] {
                    c3.at_most(
                        &format!("{kind} k={k} {col}"),
                        rate(&r, col),
                        kf + C3_UNSTAB_EXCESS,
                    );
                }
                c3.note(format!(
                    "{kind} k={k}: u H1 {:.2} λ H1 {:.2}",
                    rate(&r, "u_H1"),
                    rate(&r, "lambda_H1")
                ));
            } else {
                for col in ["u_H1", "lambda_H1", "e_L2", "mu_L2"] {
                    c3.within(
                        &format!("{kind} k={k} {col}"),
                        rate(&r, col),
                        (kf + 1.0, C3_RATE_TOL),
                    );
                }
                c3.at_least(
                    &format!("{kind} k={k} s_L2"),
                    rate(&r, "s_L2"),
                    kf + C3_FLUX_EXCESS,
                );
                c3.note(format!(
                    "{kind} k={k}: u H1 {:.2} λ H1 {:.2} e {:.2} μ {:.2} s {:.2}",
                    rate(&r, "u_H1"),
                    rate(&r, "lambda_H1"),
                    rate(&r, "e_L2"),
                    rate(&r, "mu_L2"),
                    rate(&r, "s_L2"),
                ));
            }
            u_l2.insert(
                kind.name(),
                entries
                    .iter()
                    .map(|e| (e.n, e.errors.u_l2))
                    .collect::<Vec<_>>(),
            );
        }
        if let (Some(full), Some(unstab)) = (u_l2.get("eo_full"), u_l2.get("eo_unstab")) {
            for ((n, f), (_, u)) in full.iter().zip(unstab) {
                c4.expect(f <= u, || {
                    format!("k={k} n={n}: full {f:.4e} > unstabilized {u:.4e}")
                });
            }
            let ratios: Vec<String> = full
                .iter()
                .zip(unstab)
                .map(|((_, f), (_, u))| format!("{:.2}", f / u))
                .collect();
            c4.note(format!(
                "k={k} full/unstabilized u L2 = [{}]",
                ratios.join(", ")
            ));
        } else {
            c4.expect(false, || format!("k={k}: sweeps missing"));
        }
    }
    (c3.finish(), c4.finish())
}

fn criterion5(audits: &mut AuditLog) -> Outcome {
    let mut c = Check::default();
    for (i, phi) in C5_PHIS.into_iter().enumerate() {
        let case = ManufacturedCase::case2(phi).unwrap();
        let psi = format!("ψ={:.2}π", 2.0 - phi / PI);
        let family = MeshFamily::Sector {
            phi,
            grading: C5_GRADING,
        };
        let natural = sweep(&case, FormulationKind::Natural, 0, family, &SIZES);
        let unstab = sweep(
            &case,
            FormulationKind::EqualOrderUnstabilized,
            0,
            family,
            &SIZES,
        );
        let interp = interpolation_sweep(&case, family, &SIZES, 1);
        match (natural, unstab, interp) {
            (Ok(nat), Ok(uns), Ok(int)) => {
                audits.add(format!("C5 natural {psi}"), &nat);
                audits.add(format!("C5 eo_unstab {psi}"), &uns);
                let rn = report_from_entries("case2", "natural", &nat);
                let ru = report_from_entries("case2", "eo_unstab", &uns);
                let (hs, errs): (Vec<f64>, Vec<f64>) = int.into_iter().unzip();
                let ri = ddfem::postproc::convergence_rate(&hs, &errs).unwrap_or(f64::NAN);
                c.within(
                    &format!("{psi} natural u_H1"),
                    rate(&rn, "u_H1"),
                    (C5_NATURAL_U_H1[i], C5_TOL),
                );
                c.within(
                    &format!("{psi} natural lambda_H1"),
                    rate(&rn, "lambda_H1"),
                    (C5_NATURAL_LAMBDA_H1, C5_TOL),
                );
                c.within(
                    &format!("{psi} eo_unstab u_H1"),
                    rate(&ru, "u_H1"),
                    (C5_UNSTAB_U_H1[i], C5_TOL),
                );
                c.within(
                    &format!("{psi} natural s_L2"),
                    rate(&rn, "s_L2"),
                    (C5_NATURAL_S_L2[i], C5_TOL),
                );
                c.within(
                    &format!("{psi} interpolation"),
                    ri,
                    (C5_INTERPOLATION[i], C5_TOL),
                );
                c.note(format!(
                    "{psi} grading {C5_GRADING}: natural u H1 {:.2} λ H1 {:.2} s {:.2}, eo_unstab u H1 {:.2}, interp {:.2}",
                    rate(&rn, "u_H1"),
                    rate(&rn, "lambda_H1"),
                    rate(&rn, "s_L2"),
                    rate(&ru, "u_H1"),
                    ri
                ));
            }
            (a, b, d) => {
                for e in [a.err(), b.err(), d.err().map(|e| e.to_string())]
                    .into_iter()
                    .flatten()
                {
                    c.expect(false, || format!("{psi}: {e}"));
                }
            }
        }
        // Diagnostic only: quasi-uniform sector meshes.
        let uniform = MeshFamily::Sector { phi, grading: 1.0 };
        if let (Ok(nat), Ok(int)) = (
            sweep(&case, FormulationKind::Natural, 0, uniform, &SIZES),
            interpolation_sweep(&case, uniform, &SIZES, 1),
        ) {
            let rn = report_from_entries("case2", "natural", &nat);
            let (hs, errs): (Vec<f64>, Vec<f64>) = int.into_iter().unzip();
            c.note(format!(
                "{psi} grading 1 (diagnostic): natural u H1 {:.2} s {:.2}, interp {:.2}",
                rate(&rn, "u_H1"),
                rate(&rn, "s_L2"),
                ddfem::postproc::convergence_rate(&hs, &errs).unwrap_or(f64::NAN)
            ));
        }
    }
    c.finish()
}

fn criterion6(audits: &mut AuditLog) -> Outcome {
    let mut c = Check::default();
    let case = ManufacturedCase::case3();
    for kind in FormulationKind::ALL {
        let sizes: &[usize] = if kind.is_equal_order() {
            &C6_EQUAL_ORDER_SIZES
        } else {
            &C6_NATURAL_SIZES
        };
        let f = Formulation::new(kind, 0).unwrap();
        match data_sweep(
            &case,
            &f,
            MeshFamily::UnitSquare,
            C6_ND,
            sizes,
            AssemblyOptions::default(),
        ) {
            Ok(entries) => {
                audits.add(format!("C6 {kind} nd={C6_ND}"), &entries);
                let m = entries.len();
                let (a, b) = (entries[m - 2].errors.u_l2, entries[m - 1].errors.u_l2);
                let change = (a - b).abs() / a;
                c.at_most(
                    &format!("{kind} nd={C6_ND} last-pair u_L2 change"),
                    change,
                    C6_STAGNATION,
                );
                c.note(format!(
                    "{kind} nd={C6_ND} n={}→{}: u L2 {a:.3e}→{b:.3e} ({:.1}%)",
                    entries[m - 2].n,
                    entries[m - 1].n,
                    100.0 * change
                ));
            }
            Err(e) => c.expect(false, || format!("{kind} sampled: {e}")),
        }
        match sweep(&case, kind, 0, MeshFamily::UnitSquare, &SIZES) {
            Ok(entries) => {
                audits.add(format!("C6 {kind} exact"), &entries);
                let r = report_from_entries("case3", kind.name(), &entries);
                c.within(&format!("{kind} exact u_L2"), rate(&r, "u_L2"), C2_L2_RATE);
                c.within(&format!("{kind} exact u_H1"), rate(&r, "u_H1"), C2_H1_RATE);
                let min = if kind.is_equal_order() {
                    C2_EQUAL_ORDER_VECTOR_MIN
                } else {
                    C2_NATURAL_VECTOR_MIN
                };
                for col in ["e_L2", "s_L2"] {
                    c.at_least(&format!("{kind} exact {col}"), rate(&r, col), min);
                }
                c.note(format!(
                    "{kind} exact data: u {:.2}/{:.2} e {:.2} s {:.2} (λ {:.2}/{:.2}, exact λ = 0)",
                    rate(&r, "u_L2"),
                    rate(&r, "u_H1"),
                    rate(&r, "e_L2"),
                    rate(&r, "s_L2"),
                    rate(&r, "lambda_L2"),
                    rate(&r, "lambda_H1"),
                ));
            }
            Err(e) => c.expect(false, || e),
        }
    }
    c.finish()
}

fn criterion7(audits: &AuditLog) -> Outcome {
    let mut c = Check::default();
    let total: usize = audits.rows.iter().map(|r| r.1).sum();
    for (label, violations, worst) in &audits.rows {
        if *violations > 0 {
            c.note(format!("{label}: {violations} (max s·e {worst:.2e})"));
        }
    }
    c.expect(total == 0, || {
        format!(
            "{total} nodes with s_h·e_h > {AUDIT_TOLERANCE:e} over {} sweeps",
            audits.rows.len()
        )
    });
    if total == 0 {
        c.note(format!("no violations over {} sweeps", audits.rows.len()));
    }
    c.finish()
}

fn criterion8() -> Outcome {
    let mut c = Check::default();
    let mesh = unit_square_mesh(C8_N).unwrap();
    let h = mesh_size(&mesh).unwrap();
    c.at_most("h", h, 0.1);
    let data = ManufacturedCase::case1().problem_data();
    let mut worst = f64::INFINITY;
    for k in [0, 1] {
        let f = Formulation::new(FormulationKind::EqualOrderFull, k).unwrap();
        let sys = assemble(&mesh, &f, &data).unwrap();
        let constrained = apply_dirichlet(sys.clone(), &mesh, &data)
            .unwrap()
            .dirichlet;
        let mut rng = StdRng::seed_from_u64(k as u64);
        for _ in 0..C8_SAMPLES {
            let mut z: Vec<f64> = (0..sys.n_dofs())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            for (d, _) in &constrained {
                z[*d] = 0.0;
            }
            let kz = sys.matrix.matvec(&z).unwrap();
            let num: f64 = z.iter().zip(&kz).map(|(a, b)| a * b).sum();
            let den = triple_norm_squared(&mesh, &sys.spaces, &z, data.kappa, h).unwrap();
            worst = worst.min(num / den);
        }
    }
    c.at_least("min zᵀKz/|||z|||²", worst, C8_RATIO);
    c.note(format!(
        "min ratio {worst:.4} over {} samples (k = 0, 1), h = {h:.4}",
        2 * C8_SAMPLES
    ));
    c.finish()
}

fn criterion9() -> Outcome {
    let mut c = Check::default();
    let mut cases = vec![
        ("case1", ManufacturedCase::case1()),
        ("case3", ManufacturedCase::case3()),
    ];
    for phi in C5_PHIS {
        cases.push(("case2", ManufacturedCase::case2(phi).unwrap()));
    }
    let mut worst = 0.0f64;
    for (name, case) in &cases {
        match verify_strong_system(case, C9_SAMPLES, C9_FD_STEP) {
            Ok(r) => {
                worst = worst.max(r.max());
                c.at_most(&format!("{name} strong residual"), r.max(), C9_RESIDUAL);
            }
            Err(e) => c.expect(false, || format!("{name}: {e}")),
        }
    }
    let factorial = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
    let mut quad = 0.0f64;
    for d in 1..=10 {
        let rule = quadrature(d).unwrap();
        for a in 0..=d {
            for b in 0..=d - a {
                let q: f64 = rule
                    .iter()
                    .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                    .sum();
                quad = quad.max((q - factorial(a) * factorial(b) / factorial(a + b + 2)).abs());
            }
        }
    }
    c.at_most("quadrature monomial error", quad, C9_QUADRATURE);
    let mut fd = 0.0f64;
    let mut rng = StdRng::seed_from_u64(9);
    let h = C9_BASIS_STEP;
    for k in 1..=3 {
        for _ in 0..50 {
            let (a, b) = (rng.random_range(0.01..0.98), rng.random_range(0.01..0.98));
            if a + b > 0.98 {
                continue;
            }
            let g = lagrange_grad(k, [a, b]).unwrap();
            let (xp, xm) = (
                lagrange_eval(k, [a + h, b]).unwrap(),
                lagrange_eval(k, [a - h, b]).unwrap(),
            );
            let (yp, ym) = (
                lagrange_eval(k, [a, b + h]).unwrap(),
                lagrange_eval(k, [a, b - h]).unwrap(),
            );
            for i in 0..n_basis(k) {
                fd = fd.max(((xp[i] - xm[i]) / (2.0 * h) - g[i][0]).abs());
                fd = fd.max(((yp[i] - ym[i]) / (2.0 * h) - g[i][1]).abs());
            }
        }
    }
    c.at_most("basis gradient FD error", fd, C9_BASIS_TOL);
    c.note(format!(
        "strong residual {worst:.1e}, quadrature {quad:.1e}, basis FD {fd:.1e}"
    ));
    c.finish()
}

fn criterion10() -> Outcome {
    let mut c = Check::default();
    let mesh = unit_square_mesh(6).unwrap();
    let data = ManufacturedCase::case1()
        .with_params(1.0, 0.0)
        .unwrap()
        .problem_data();
    let mut checked = 0usize;
    for kind in FormulationKind::ALL {
        for k in 0..=2 {
            let f = Formulation::with_params(kind, k, StabilizationParams::NONE).unwrap();
            let sys = assemble(&mesh, &f, &data).unwrap();
            let primal: Vec<bool> = (0..sys.n_dofs())
                .map(|i| {
                    let field = Field::ALL
                        .into_iter()
                        .find(|f| sys.field_range(*f).contains(&i))
                        .unwrap();
                    matches!(field, Field::U | Field::E | Field::Mu)
                })
                .collect();
            let mut nonzero = 0usize;
            for r in 0..sys.matrix.dim() {
                let (cols, vals) = sys.matrix.row(r);
                for (&col, &v) in cols.iter().zip(vals) {
                    if primal[r] != primal[col] {
                        checked += 1;
                        if v != 0.0 {
                            nonzero += 1;
                        }
                    }
                }
            }
            c.expect(nonzero == 0, || {
                format!("{kind} k={k}: {nonzero} nonzero coupling entries")
            });
        }
    }
    c.note(format!(
        "{checked} stored cross entries checked, all formulations, k = 0..2"
    ));
    c.finish()
}

fn main() -> ExitCode {
    let mut audits = AuditLog::default();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let report =
        |id: usize, name: &'static str, o: Outcome, results: &mut Vec<(usize, &str, Outcome)>| {
            println!(
                "C{id:<2} {} {name}: {}",
                if o.pass { "PASS" } else { "FAIL" },
                o.detail
            );
            results.push((id, name, o));
        };
    report(1, "patch test", criterion1(&mut audits), &mut results);
    let (c2, c2_time) = criterion2(&mut audits);
    report(2, "case 1, k = 0 rates", c2, &mut results);
    let (c3, c4) = criteria3_and_4(&mut audits);
    report(3, "case 1, k = 1, 2 rates", c3, &mut results);
    report(4, "fully stabilized vs unstabilized", c4, &mut results);
    report(
        5,
        "case 2 singular rates",
        criterion5(&mut audits),
        &mut results,
    );
    report(
        6,
        "case 3 data stagnation",
        criterion6(&mut audits),
        &mut results,
    );
    report(7, "second-law audit", criterion7(&audits), &mut results);
    report(8, "coercivity sampling", criterion8(), &mut results);
    report(9, "manufactured verification", criterion9(), &mut results);
    report(10, "decoupling", criterion10(), &mut results);
    let c11 = Outcome {
        pass: c2_time < C11_BUDGET,
        detail: format!("criterion-2 sweep took {c2_time:.1?} (budget {C11_BUDGET:?})"),
    };
    report(11, "performance envelope", c11, &mut results);
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.2.pass)
        .map(|r| format!("C{}", r.0))
        .collect();
    println!(
        "acceptance: {} passed, {} failed {:?}",
        results.len() - failed.len(),
        failed.len(),
        failed
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
