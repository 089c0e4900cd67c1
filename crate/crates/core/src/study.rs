//! End-to-end drivers: one solve, mesh sweeps, interpolation sweeps.

use thiserror::Error;

use crate::data_assign::{
    assign_to_elements, build_dataset, with_assigned_data, DataError, DataSet,
};
use crate::elements::{build_space, interpolate_scalar, Family, ValueRank};
use crate::forms::{
    apply_dirichlet, assemble_with, AssemblyOptions, FieldSpaces, FormsError, Formulation,
    ProblemData, Solution,
};
use crate::manufactured::{CaseId, ManufacturedCase};
use crate::mesh::{mesh_size, reentrant_mesh_level, unit_square_mesh, Mesh, MeshError};
use crate::postproc::{
    error_norms, second_law_audit, AuditResult, ErrorRecord, PostprocError, ReportRow, StudyReport,
};
use crate::solver::{residual_norm, solve_symmetric_grouped, SolverError};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Forms(#[from] FormsError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Postproc(#[from] PostprocError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("solve failed on mesh n = {n}: {source}")]
    OnMesh {
        n: usize,
        #[source]
        source: Box<StudyError>,
    },
}

impl StudyError {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            StudyError::Solver(_) => true,
            StudyError::OnMesh { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub spaces: FieldSpaces,
    pub solution: Solution,
    pub relative_residual: f64,
}

impl SolveOutput {
    pub fn n_dofs(&self) -> usize {
        self.spaces.n_dofs()
    }
}

/// Assembles, applies Dirichlet conditions and solves.
pub fn solve(
    mesh: &Mesh,
    formulation: &Formulation,
    data: &ProblemData,
    options: AssemblyOptions,
) -> Result<SolveOutput, StudyError> {
    let system = assemble_with(mesh, formulation, data, options)?;
    let system = apply_dirichlet(system, mesh, data)?.into_symmetric();
    let x = solve_symmetric_grouped(&system.matrix, &system.rhs, &system.spaces.node_groups())?;
    let b = system
        .rhs
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
        .max(f64::EPSILON);
    let relative_residual = residual_norm(&system.matrix, &x, &system.rhs)? / b;
    let solution = Solution::split(&system.spaces, &x)?;
    Ok(SolveOutput {
        spaces: system.spaces,
        solution,
        relative_residual,
    })
}

/// Mesh family of a sweep, indexed by the refinement parameter `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeshFamily {
    UnitSquare,
    /// Sector with re-entrant corner; `n` radial layers with grading.
    Sector {
        phi: f64,
        grading: f64,
    },
}

impl MeshFamily {
    pub fn for_case(case: &ManufacturedCase, grading: f64) -> Self {
        match case.id {
            CaseId::Case2 { phi } => MeshFamily::Sector { phi, grading },
            _ => MeshFamily::UnitSquare,
        }
    }

    pub fn build(&self, n: usize) -> Result<Mesh, MeshError> {
        match *self {
            MeshFamily::UnitSquare => unit_square_mesh(n),
            MeshFamily::Sector { phi, grading } => reentrant_mesh_level(phi, n, grading),
        }
    }
}

/// One sweep entry: the errors plus the audit of the solved fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepEntry {
    pub n: usize,
    pub h: f64,
    pub dofs: usize,
    pub errors: ErrorRecord,
    pub audit: AuditResult,
    pub relative_residual: f64,
}

/// Solves one manufactured case on one mesh and measures it.
pub fn solve_case(
    mesh: &Mesh,
    formulation: &Formulation,
    case: &ManufacturedCase,
    data: &ProblemData,
    options: AssemblyOptions,
) -> Result<(SolveOutput, ErrorRecord, AuditResult), StudyError> {
    let out = solve(mesh, formulation, data, options)?;
    let errors = error_norms(
        mesh,
        &out.spaces,
        &out.solution,
        case,
        options.quadrature_degree,
    )?;
    let audit = second_law_audit(&out.spaces, &out.solution, AUDIT_TOLERANCE);
    Ok((out, errors, audit))
}

/// Threshold above which `s_h·e_h` counts as a second-law violation.
pub const AUDIT_TOLERANCE: f64 = 1e-10;

/// Runs `case` with exact data on every mesh of the sweep.
pub fn convergence_sweep(
    case: &ManufacturedCase,
    formulation: &Formulation,
    family: MeshFamily,
    sizes: &[usize],
    options: AssemblyOptions,
) -> Result<Vec<SweepEntry>, StudyError> {
    let data = case.problem_data();
    sizes
        .iter()
        .map(|&n| sweep_entry(case, formulation, family, n, &data, options))
        .collect()
}

/// One entry of a sweep, with failures tagged by mesh parameter.
pub fn sweep_entry(
    case: &ManufacturedCase,
    formulation: &Formulation,
    family: MeshFamily,
    n: usize,
    data: &ProblemData,
    options: AssemblyOptions,
) -> Result<SweepEntry, StudyError> {
    sweep_entry_with(case, formulation, family, n, options, |_| Ok(data.clone()))
}

/// Like [`sweep_entry`] with problem data built for the mesh at hand.
pub fn sweep_entry_with(
    case: &ManufacturedCase,
    formulation: &Formulation,
    family: MeshFamily,
    n: usize,
    options: AssemblyOptions,
    make_data: impl Fn(&Mesh) -> Result<ProblemData, StudyError>,
) -> Result<SweepEntry, StudyError> {
    let run = || -> Result<SweepEntry, StudyError> {
        let mesh = family.build(n)?;
        let data = make_data(&mesh)?;
        let (out, errors, audit) = solve_case(&mesh, formulation, case, &data, options)?;
        Ok(SweepEntry {
            n,
            h: mesh_size(&mesh)?,
            dofs: out.n_dofs(),
            errors,
            audit,
            relative_residual: out.relative_residual,
        })
    };
    run().map_err(|e| StudyError::OnMesh {
        n,
        source: Box::new(e),
    })
}

/// Samples the exact gradient and flux of `case` on an `nd × nd` grid.
pub fn case_dataset(case: &ManufacturedCase, nd: usize) -> Result<DataSet, DataError> {
    build_dataset(
        nd,
        |p| case.e(p).unwrap_or([f64::NAN; 2]),
        |p| case.s(p).unwrap_or([f64::NAN; 2]),
    )
}

/// Problem data of `case` with `ẽ`, `s̃` replaced by the samples assigned
/// to the elements of `mesh`.
pub fn sampled_problem_data(
    case: &ManufacturedCase,
    mesh: &Mesh,
    dataset: &DataSet,
) -> Result<ProblemData, StudyError> {
    let assigned = assign_to_elements(mesh, dataset)?;
    Ok(with_assigned_data(case.problem_data(), assigned))
}

/// Convergence sweep driven by sampled data instead of the exact fields.
pub fn data_sweep(
    case: &ManufacturedCase,
    formulation: &Formulation,
    family: MeshFamily,
    nd: usize,
    sizes: &[usize],
    options: AssemblyOptions,
) -> Result<Vec<SweepEntry>, StudyError> {
    let dataset = case_dataset(case, nd)?;
    sizes
        .iter()
        .map(|&n| {
            sweep_entry_with(case, formulation, family, n, options, |mesh| {
                sampled_problem_data(case, mesh, &dataset)
            })
        })
        .collect()
}

pub fn report_from_entries(case: &str, formulation: &str, entries: &[SweepEntry]) -> StudyReport {
    let mut report = StudyReport::new(case, formulation);
    for e in entries {
        report.push(ReportRow {
            h: e.h,
            dofs: e.dofs,
            errors: e.errors,
        });
    }
    report
}

/// `(h, |u − I_h u|_{H1})` for the nodal interpolant in CG_degree.
pub fn interpolation_sweep(
    case: &ManufacturedCase,
    family: MeshFamily,
    sizes: &[usize],
    degree: usize,
) -> Result<Vec<(f64, f64)>, StudyError> {
    sizes
        .iter()
        .map(|&n| {
            let mesh = family.build(n)?;
            let space = build_space(&mesh, Family::Cg, degree, ValueRank::Scalar)
                .map_err(FormsError::from)?;
            let coeffs =
                interpolate_scalar(&mesh, &space, |p| case.u(p)).map_err(FormsError::from)?;
            let err = crate::postproc::scalar_h1_error(&mesh, &space, &coeffs, |p| {
                case.e(p).unwrap_or([f64::NAN; 2])
            })?;
            Ok((mesh_size(&mesh)?, err))
        })
        .collect()
}
