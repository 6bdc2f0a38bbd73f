//! Machine-readable run reports.
//!
//! Every CLI run writes one JSON document next to its field dumps. The
//! report carries what a later reader needs to audit the run — grids,
//! convergence histories, measured contraction ratios and mass drift, the
//! random-generator identity when particles were involved — and nothing
//! that would make two identical runs differ (no timestamps, no host
//! names, no absolute paths). Re-running with the same configuration and
//! seed reproduces the report byte for byte.
//!
//! The structs here are summaries assembled *from* solver outputs, not the
//! solver internals themselves: trajectories keep their full per-step
//! vectors in memory, while the report keeps scalars plus the short
//! histories worth reading back.

use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::fp::FpTrajectory;
use crate::grid::DomainSpec;
use crate::hjb::HjbDiagnostics;
use crate::mfg::{MfgResiduals, MfgState, OuterRecord, UniquenessReport};
use crate::particles::ParticleComparison;
use crate::presets::EnvelopeReport;

/// Forward-solve summary: conservation and positivity bookkeeping.
#[derive(Debug, Clone, Serialize)]
pub struct FpReport {
    /// Largest relative mass drift against the initial mass.
    pub mass_drift: f64,
    /// Most negative cell value over all slices (after clamping).
    pub min_density: f64,
    /// Most negative value seen before the positivity clamp.
    pub min_before_clamp: f64,
    /// Largest mass removed by the clamp, relative to slice mass.
    pub max_clamped_mass: f64,
    /// Largest transport sub-step count within one time step.
    pub max_substeps: usize,
    pub initial_mass: f64,
    pub final_mass: f64,
    pub slices: usize,
}

impl FpReport {
    pub fn from_trajectory(traj: &FpTrajectory) -> Self {
        let d = &traj.diagnostics;
        Self {
            mass_drift: d.mass_drift,
            min_density: d.step_min.iter().copied().fold(f64::INFINITY, f64::min),
            min_before_clamp: d.min_before_clamp,
            max_clamped_mass: d.max_clamped_mass,
            max_substeps: d.max_substeps,
            initial_mass: traj.initial.mass(),
            final_mass: traj.final_slice().mass(),
            slices: traj.slices.len(),
        }
    }
}

/// Backward-solve summary: how the gradient fixed point contracted.
#[derive(Debug, Clone, Serialize)]
pub struct HjbReport {
    /// Largest measured ratio of successive Picard increments.
    pub contraction_ratio: f64,
    /// Steps covered by each accepted slab, latest solve.
    pub slab_steps: Vec<usize>,
    /// Slab halvings needed before contraction was accepted.
    pub halvings: usize,
    /// Total Picard iterations over all slabs.
    pub picard_iterations: usize,
    /// Final fixed-point residual of the integral identity.
    pub mild_residual: f64,
    /// Gap between the value gradient and the primary unknown.
    pub grad_consistency: f64,
}

impl HjbReport {
    pub fn from_diagnostics(d: &HjbDiagnostics) -> Self {
        Self {
            contraction_ratio: d.contraction_ratio,
            slab_steps: d.slab_steps.clone(),
            halvings: d.halvings,
            picard_iterations: d.residual_history.len(),
            mild_residual: d.mild_residual,
            grad_consistency: d.grad_consistency,
        }
    }
}

/// Coupled-solve summary: the sweep history plus the optimality certificate.
#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    pub converged: bool,
    pub outer_iterations: usize,
    /// Smoothing level the couplings were finally evaluated at.
    pub final_eps: f64,
    pub cost: f64,
    pub residuals: MfgResiduals,
    /// One record per damped sweep, in order.
    pub history: Vec<OuterRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
    pub density: FpReport,
    pub value: HjbReport,
}

impl EquilibriumReport {
    pub fn from_state(state: &MfgState) -> Self {
        Self {
            converged: state.converged,
            outer_iterations: state.outer_iterations,
            final_eps: state.final_eps,
            cost: state.cost,
            residuals: state.residuals,
            history: state.history.clone(),
            warning: state.warning.clone(),
            density: FpReport::from_trajectory(&state.rho),
            value: HjbReport::from_diagnostics(&state.value.diagnostics),
        }
    }
}

/// Particle-march summary, including the generator identity that makes the
/// sample stream reproducible.
#[derive(Debug, Clone, Serialize)]
pub struct ParticleReport {
    /// Generator family, seed, and streaming scheme.
    pub generator: String,
    pub particle_count: usize,
    /// Time indices where the empirical density was compared to the grid.
    pub compared_at: Vec<usize>,
    /// `L^1` distances at those indices.
    pub distances: Vec<f64>,
    pub max_distance: f64,
}

impl ParticleReport {
    pub fn from_comparison(comparison: &ParticleComparison, particle_count: usize) -> Self {
        Self {
            generator: comparison.generator.clone(),
            particle_count,
            compared_at: comparison.time_indices.clone(),
            distances: comparison.distances.clone(),
            max_distance: comparison.max_distance,
        }
    }
}

/// Two-start comparison summary for the uniqueness probe.
#[derive(Debug, Clone, Serialize)]
pub struct UniquenessSummary {
    /// Space-time `L^1` distance between the two equilibrium densities.
    pub rho_distance: f64,
    pub control_distance: f64,
    pub value_distance: f64,
    /// Whether the configured couplings put the run in the regime where
    /// coincidence is a theorem rather than an observation.
    pub uniqueness_guaranteed: bool,
    pub note: String,
}

impl UniquenessSummary {
    pub fn from_report(report: &UniquenessReport) -> Self {
        Self {
            rho_distance: report.rho_distance,
            control_distance: report.control_distance,
            value_distance: report.value_distance,
            uniqueness_guaranteed: report.uniqueness_guaranteed,
            note: report.note.clone(),
        }
    }
}

/// Structural checks on the configured costs: growth envelopes of the
/// running cost and its conjugate.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub running_cost_envelope: EnvelopeReport,
    pub conjugate_envelope: EnvelopeReport,
}

/// The top-level document one CLI run writes.
///
/// Sections are present exactly when the corresponding solver ran, so a
/// forward-only run reports only `density`, while the coupled command
/// fills `equilibrium`.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    /// Which subcommand produced this report.
    pub command: String,
    pub domain: DomainSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<FpReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<HjbReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<EquilibriumReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub particles: Option<ParticleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniqueness: Option<UniquenessSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hypotheses: Option<HypothesisReport>,
    /// Free-form notes (dump paths, convergence warnings).
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl RunReport {
    pub fn new(command: &str, domain: DomainSpec) -> Self {
        Self {
            command: command.into(),
            domain,
            seed: None,
            density: None,
            value: None,
            equilibrium: None,
            particles: None,
            uniqueness: None,
            hypotheses: None,
            notes: Vec::new(),
        }
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| crate::error::Error::FieldFormat(format!("JSON encoding: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Write a report (or any serializable value) as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, json_string(value)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fp::solve_fp;
    use crate::grid::{HeatKernelSpec, KernelOps, ScalarField, VectorField};

    fn tiny_run() -> RunReport {
        let domain = DomainSpec::new(1, 2.0, 32, 0.25, 16, 0.5).unwrap();
        let ops = KernelOps::new(&domain, HeatKernelSpec::operator_consistent(domain.viscosity));
        let rho0 = ScalarField::gaussian(&domain, &[0.0, 0.0], 0.4);
        let controls = vec![VectorField::zeros(&domain)];
        let traj = solve_fp(&rho0, &controls, &ops).unwrap();
        let mut report = RunReport::new("solve-fp", domain);
        report.density = Some(FpReport::from_trajectory(&traj));
        report
    }

    #[test]
    fn report_reflects_the_solve_and_omits_empty_sections() {
        let report = tiny_run();
        let text = json_string(&report).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["command"], "solve-fp");
        assert_eq!(parsed["domain"]["points"], 32);
        assert_eq!(parsed["density"]["slices"], 17);
        assert!(parsed["density"]["mass_drift"].as_f64().unwrap() <= 1e-12);
        // Sections for solvers that did not run are absent, not null.
        assert!(parsed.get("equilibrium").is_none());
        assert!(parsed.get("particles").is_none());
        // Nothing run-dependent beyond the solve itself.
        assert!(!text.contains("time_stamp") && !text.contains("timestamp"));
    }

    #[test]
    fn identical_runs_serialize_byte_identically() {
        let a = json_string(&tiny_run()).unwrap();
        let b = json_string(&tiny_run()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn write_json_round_trips_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        let report = tiny_run();
        write_json(&path, &report).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, json_string(&report).unwrap());
        assert!(text.ends_with('\n'));
    }
}
