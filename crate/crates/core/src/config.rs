//! Experiment configuration file and the assumption report.
//!
//! The file is JSON with a `model` section (see [`Model`]) and an optional
//! `experiment` section whose fields all have defaults.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limit::regimes;
use crate::model::{InitialLaw, Model, PastInfluenceLaw};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Mass tolerance of the PDE rows; defaults to 10·Δ.
    pub mass_tol: Option<f64>,
    pub fp_tol: f64,
    pub max_iter: usize,
    /// Tolerance of the boundary identity check.
    pub quad_tol: f64,
    pub event_cap: usize,
    /// Target SE(mean δ_n) / mean δ_n in sweeps.
    pub target_rel_se: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            mass_tol: None,
            fp_tol: 1e-10,
            max_iter: 50,
            quad_tol: 1e-8,
            event_cap: crate::particle::DEFAULT_EVENT_CAP,
            target_rel_se: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Experiment {
    pub command: Option<String>,
    pub theta: f64,
    pub dx: f64,
    pub n_list: Vec<usize>,
    /// Replicas for `simulate`/`couple`; minimum batch for `sweep`.
    pub replicas: usize,
    /// Upper replica count per n in `sweep`.
    pub max_replicas: usize,
    pub seed: u64,
    pub output_dir: Option<String>,
    pub tolerances: Tolerances,
    /// Times at which particle ages are compared with the PDE density.
    pub w1_times: Vec<f64>,
    pub force_pde: bool,
    /// Export intensity and envelope of every accepted event.
    pub audit: bool,
}

impl Default for Experiment {
    fn default() -> Self {
        Experiment {
            command: None,
            theta: 5.0,
            dx: 1e-3,
            n_list: vec![8, 16, 32, 64, 128, 256],
            replicas: 32,
            max_replicas: 8192,
            seed: 1,
            output_dir: None,
            tolerances: Tolerances::default(),
            w1_times: Vec::new(),
            force_pde: false,
            audit: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: Model,
    #[serde(default)]
    pub experiment: Experiment,
}

impl ExperimentConfig {
    pub fn mass_tol(&self) -> f64 {
        self.experiment.tolerances.mass_tol.unwrap_or(10.0 * self.experiment.dx)
    }
}

/// Parses a config; syntax and schema errors carry line and column.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.model.validate().map_err(|e| Error::Config(e.to_string()))?;
    let x = &cfg.experiment;
    if !(x.theta > 0.0) || !x.theta.is_finite() {
        return Err(Error::Config(format!("experiment.theta must be > 0, got {}", x.theta)));
    }
    if !(x.dx > 0.0) || !x.dx.is_finite() {
        return Err(Error::Config(format!("experiment.dx must be > 0, got {}", x.dx)));
    }
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Satisfied,
    Violated,
    NotCheckable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionStatus {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub assumptions: Vec<AssumptionStatus>,
    pub h1: bool,
    pub h2: bool,
    pub notes: Vec<String>,
}

impl AssumptionReport {
    pub fn status(&self, name: &str) -> Option<Status> {
        self.assumptions.iter().find(|a| a.name == name).map(|a| a.status)
    }

    /// Error explaining why no limit pipeline applies, if so.
    pub fn require_pipeline(&self) -> Result<()> {
        if self.h1 || self.h2 {
            return Ok(());
        }
        Err(Error::Hypothesis(self.notes.join("; ")))
    }
}

fn item(name: &'static str, ok: bool, detail: impl Into<String>) -> AssumptionStatus {
    AssumptionStatus { name, status: if ok { Status::Satisfied } else { Status::Violated }, detail: detail.into() }
}

/// Status of every model assumption and the pipelines they enable.
pub fn validate_config(cfg: &ExperimentConfig) -> AssumptionReport {
    let m = &cfg.model;
    let psi = &m.psi;
    let base = &m.interaction.base;
    let mut a = Vec::new();

    a.push(item(
        "A_zeta_uin",
        m.initial.has_density(),
        match m.initial.density_bound() {
            Some(b) => format!("initial age density bounded by {b}"),
            None => "initial age law is a Dirac mass, no density".into(),
        },
    ));
    a.push(item(
        "A_muH_inf",
        true,
        format!("envelope w_max*|h| with w_max = {}", m.interaction.weight_law.w_max()),
    ));
    a.push(item("A_nuF_1", true, "past term bounded by w_max * sup|h|"));
    a.push(item("A_Psi_Lip", true, format!("Lip = {}", psi.lip())));
    a.push(match psi.sup_bound() {
        Some(s) => item("A_Psi_inf", true, format!("sup Psi = {s}")),
        None => item("A_Psi_inf", false, "Phi is unbounded"),
    });
    a.push(item(
        "A_Psi_eq_Psi0",
        psi.age_independent(),
        format!("refractory delta = {}", psi.refractory_delta),
    ));
    a.push(match m.initial.age_bound() {
        Some(b) => item("A_zeta_inf", true, format!("initial age bounded by {b}")),
        None => item("A_zeta_inf", false, "initial age law has unbounded support"),
    });
    a.push(item("A_muH_inf2", true, "kernel envelope is bounded, hence locally square integrable"));
    let continuous = match &m.past {
        PastInfluenceLaw::Zero => true,
        PastInfluenceLaw::CommonStimulus { .. } => !base.is_discontinuous(),
        PastInfluenceLaw::HawkesPast => !base.is_discontinuous() || !matches!(m.initial, InitialLaw::Dirac { .. }),
    };
    a.push(item(
        "A_nuF_2",
        continuous,
        if continuous {
            "mean past term continuous, variance bounded"
        } else {
            "mean past term jumps: discontinuous kernel sampled at a deterministic shift"
        },
    ));

    let (h1, h2) = regimes(m);
    let mut notes = Vec::new();
    if !h1 && !h2 {
        if psi.sup_bound().is_none() {
            notes.push(
                "unbounded intensity that depends on the age (delta > 0) is outside both regimes: \
                 H1 needs a bounded intensity, H2 needs delta = 0"
                    .to_string(),
            );
        } else {
            notes.push("bounded intensity with delta > 0 needs an initial age density (H1)".to_string());
        }
    }
    if psi.sup_bound().is_none() && !base.envelope_is_monotone() {
        notes.push("kernel envelope is not monotone; thinning uses its non-increasing majorant".to_string());
    }
    if !continuous {
        notes.push("continuity of the mean past term fails; limit curves are computed but unsupported".into());
    }
    AssumptionReport { assumptions: a, h1, h2, notes }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(psi: &str, initial: &str) -> ExperimentConfig {
        let text = format!(
            r#"{{"model": {{
                "kernel": {{"family": "exponential", "alpha": 0.5, "beta": 2.0}},
                "weights": {{"law": "deterministic", "w": 1.0}},
                "psi": {psi},
                "initial": {initial},
                "past": {{"mode": "zero"}}
            }}}}"#
        );
        parse_config(&text).unwrap()
    }

    #[test]
    fn pipeline_gates() {
        let r = validate_config(&cfg(
            r#"{"phi": "clipped_affine", "mu": 0.5, "slope": 1, "cap": 2, "delta": 0.1}"#,
            r#"{"age0": "exponential", "rate": 1}"#,
        ));
        assert!(r.h1 && !r.h2);
        let r = validate_config(&cfg(r#"{"phi": "affine", "mu": 1, "slope": 1}"#, r#"{"age0": "exponential", "rate": 1}"#));
        assert!(!r.h1 && r.h2);
        let r = validate_config(&cfg(
            r#"{"phi": "affine", "mu": 1, "slope": 1, "delta": 0.2}"#,
            r#"{"age0": "exponential", "rate": 1}"#,
        ));
        assert!(!r.h1 && !r.h2);
        let err = r.require_pipeline().unwrap_err();
        assert!(err.to_string().contains("outside both regimes"));
    }

    #[test]
    fn syntax_errors_have_location() {
        let e = parse_config("{\n  \"model\": [1,\n").unwrap_err();
        match e {
            Error::Config(msg) => assert!(msg.contains("line"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn defaults_fill_experiment() {
        let c = cfg(r#"{"phi": "constant", "c": 1}"#, r#"{"age0": "uniform", "max": 1}"#);
        assert_eq!(c.experiment.theta, 5.0);
        assert_eq!(c.mass_tol(), 1e-2);
        assert_eq!(validate_config(&c).status("A_zeta_inf"), Some(Status::Satisfied));
    }
}
