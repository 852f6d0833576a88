//! JSON run reports.

use std::path::Path;

use anyhow::Context;
use serde::Serialize;

use fracopt::m2vpi::{PhaseReport, Side};

/// One solver invocation, summarized for machine consumption.
#[derive(Serialize)]
pub struct RunReport {
    /// Path of the instance file.
    pub instance: String,
    pub solver: &'static str,
    pub method: &'static str,
    /// `feasible`, `infeasible`, or `solved`.
    pub verdict: String,
    pub phase_iterations: Vec<PhaseIterations>,
    /// Oracle invocations where the solver counts them (submodular
    /// minimization calls).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_calls: Option<usize>,
    pub wall_time_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_path: Option<String>,
}

#[derive(Serialize)]
pub struct PhaseIterations {
    pub phase: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side: Option<&'static str>,
    pub iterations: usize,
}

pub fn side_name(side: Side) -> &'static str {
    match side {
        Side::Forward => "forward",
        Side::Reversed => "reversed",
    }
}

/// Per-phase iteration counts from a multi-phase solve (skipped phases count
/// zero iterations).
pub fn phases_to_iterations(phases: &[PhaseReport]) -> Vec<PhaseIterations> {
    phases
        .iter()
        .map(|p| PhaseIterations {
            phase: p.phase,
            node: Some(p.node),
            side: Some(side_name(p.side)),
            iterations: p.newton.as_ref().map_or(0, |n| n.result.iterations()),
        })
        .collect()
}

/// A single root search (minimum-ratio, parametric submodular).
pub fn single_phase(iterations: usize) -> Vec<PhaseIterations> {
    vec![PhaseIterations { phase: 0, node: None, side: None, iterations }]
}

pub fn write(report: &RunReport, path: &Path) -> anyhow::Result<()> {
    let json = serde_json::to_string_pretty(report).context("serializing run report")?;
    std::fs::write(path, json + "\n")
        .with_context(|| format!("writing report to {}", path.display()))?;
    Ok(())
}
