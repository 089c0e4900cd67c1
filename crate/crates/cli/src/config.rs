use std::fs;
use std::path::{Path, PathBuf};

use ddfem::forms::{Formulation, FormulationKind, LengthScale, StabilizationParams};
use ddfem::manufactured::ManufacturedCase;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum CaseConfig {
    Case1,
    Case2 {
        phi: f64,
    },
    /// `nd` switches from exact data to data sampled on an `nd × nd` grid.
    Case3 {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nd: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulationName {
    Natural,
    EoUnstab,
    EoMin,
    EoFull,
}

impl FormulationName {
    pub fn kind(self) -> FormulationKind {
        match self {
            FormulationName::Natural => FormulationKind::Natural,
            FormulationName::EoUnstab => FormulationKind::EqualOrderUnstabilized,
            FormulationName::EoMin => FormulationKind::EqualOrderMinimal,
            FormulationName::EoFull => FormulationKind::EqualOrderFull,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    /// Mesh parameter of a single solve.
    #[serde(default = "default_n")]
    pub n: usize,
    /// Mesh parameters of a sweep.
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    /// Radial grading of the sector meshes of case 2.
    #[serde(default = "default_grading")]
    pub grading: f64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig {
            n: default_n(),
            sizes: default_sizes(),
            grading: default_grading(),
        }
    }
}

/// Optional overrides of the coefficients of the chosen formulation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilizationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Fixed length scale for both ℓ_s and ℓ_μ; element diameter if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default = "one")]
    pub zeta: f64,
    #[serde(default)]
    pub stabilization: StabilizationConfig,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        ParamsConfig {
            kappa: 1.0,
            zeta: 1.0,
            stabilization: StabilizationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataStudyConfig {
    #[serde(default = "default_nd")]
    pub nd: Vec<usize>,
}

impl Default for DataStudyConfig {
    fn default() -> Self {
        DataStudyConfig { nd: default_nd() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    #[serde(default = "default_fd_samples")]
    pub samples: usize,
    #[serde(default = "default_coercivity_samples")]
    pub coercivity_samples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            fd_step: default_fd_step(),
            samples: default_fd_samples(),
            coercivity_samples: default_coercivity_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_case")]
    pub case: CaseConfig,
    #[serde(default = "default_formulation")]
    pub formulation: FormulationName,
    #[serde(default)]
    pub k: usize,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature_degree: Option<usize>,
    #[serde(default)]
    pub data_study: DataStudyConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

fn one() -> f64 {
    1.0
}
fn default_n() -> usize {
    16
}
fn default_sizes() -> Vec<usize> {
    vec![8, 16, 32, 64]
}
fn default_grading() -> f64 {
    2.0
}
fn default_nd() -> Vec<usize> {
    vec![64]
}
fn default_fd_step() -> f64 {
    1e-5
}
fn default_fd_samples() -> usize {
    200
}
fn default_coercivity_samples() -> usize {
    200
}
fn default_case() -> CaseConfig {
    CaseConfig::Case1
}
fn default_formulation() -> FormulationName {
    FormulationName::Natural
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    /// Parses JSON, reporting the path of the offending field on error.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("{path}: {}", e.into_inner()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Applies the case-specific degree rule and checks every value.
    /// Returns notes about adjusted settings.
    pub fn normalize(&mut self) -> Result<Vec<String>, CliError> {
        let mut notes = Vec::new();
        let bad = |field: &str, msg: String| Err(CliError::Config(format!("{field}: {msg}")));
        if self.k > 2 {
            return bad("k", format!("{} is not one of 0, 1, 2", self.k));
        }
        if matches!(
            self.case,
            CaseConfig::Case2 { .. } | CaseConfig::Case3 { .. }
        ) && self.k != 0
        {
            notes.push(format!("k = {} overridden to 0 for this case", self.k));
            self.k = 0;
        }
        match self.case {
            CaseConfig::Case2 { phi } if !(phi > 0.0 && phi < std::f64::consts::PI) => {
                return bad("case.phi", format!("{phi} is outside (0, π)"));
            }
            CaseConfig::Case3 { nd: Some(0) } => return bad("case.nd", "must be >= 1".into()),
            _ => {}
        }
        if self.mesh.n == 0 {
            return bad("mesh.n", "must be >= 1".into());
        }
        if self.mesh.sizes.contains(&0) {
            return bad("mesh.sizes", "entries must be >= 1".into());
        }
        if !(self.mesh.grading >= 1.0) {
            return bad(
                "mesh.grading",
                format!("{} must be >= 1", self.mesh.grading),
            );
        }
        if self.data_study.nd.is_empty() || self.data_study.nd.contains(&0) {
            return bad("data_study.nd", "needs at least one entry, all >= 1".into());
        }
        if !(self.verify.fd_step > 0.0) {
            return bad("verify.fd_step", "must be > 0".into());
        }
        self.manufactured_case()?;
        self.formulation()?;
        Ok(notes)
    }

    pub fn manufactured_case(&self) -> Result<ManufacturedCase, CliError> {
        let base = match self.case {
            CaseConfig::Case1 => ManufacturedCase::case1(),
            CaseConfig::Case2 { phi } => ManufacturedCase::case2(phi)
                .map_err(|e| CliError::Config(format!("case.phi: {e}")))?,
            CaseConfig::Case3 { .. } => ManufacturedCase::case3(),
        };
        base.with_params(self.params.kappa, self.params.zeta)
            .map_err(|e| CliError::Config(format!("params: {e}")))
    }

    pub fn stabilization(&self) -> StabilizationParams {
        let s = &self.params.stabilization;
        let mut p = self.formulation.kind().default_params();
        p.alpha = s.alpha.unwrap_or(p.alpha);
        p.gamma = s.gamma.unwrap_or(p.gamma);
        p.eta = s.eta.unwrap_or(p.eta);
        p.theta = s.theta.unwrap_or(p.theta);
        p.beta = s.beta.unwrap_or(p.beta);
        if let Some(l) = s.length {
            p.ell_s = LengthScale::Fixed(l);
            p.ell_mu = LengthScale::Fixed(l);
        }
        p
    }

    pub fn formulation(&self) -> Result<Formulation, CliError> {
        Formulation::with_params(self.formulation.kind(), self.k, self.stabilization())
            .map_err(|e| CliError::Config(format!("params.stabilization: {e}")))
    }

    /// Short label used in file names and reports.
    pub fn case_label(&self) -> String {
        match self.case {
            CaseConfig::Case1 => "case1".into(),
            CaseConfig::Case2 { phi } => format!("case2_phi{:.4}", phi),
            CaseConfig::Case3 { nd: None } => "case3".into(),
            CaseConfig::Case3 { nd: Some(nd) } => format!("case3_nd{nd}"),
        }
    }
}
