use serde::Serialize;

use super::paths::PathReport;
use crate::decimal::Decimal;
use crate::diagnostics::{Code, Diagnostic};
use crate::model::{Scenario, SceneNum};

/// How the enumerated paths fare against one principal objective.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ObjectiveCoverage {
    pub objective: String,
    pub threshold: Decimal,
    /// Paths whose best case stays below the threshold.
    pub impossible_paths: Vec<usize>,
    /// Paths where the threshold is reachable but not assured.
    pub unguaranteed_paths: Vec<usize>,
}

/// Per-objective verdicts over the report's paths. Scores are computed if the
/// report does not carry them yet.
pub fn coverage_verdicts(s: &Scenario, report: &PathReport) -> Vec<ObjectiveCoverage> {
    let scored;
    let report = if report.scores.len() == report.paths.len() {
        report
    } else {
        let mut r = report.clone();
        r.score(s);
        scored = r;
        &scored
    };
    let mut out = Vec::new();
    for id in &s.principal_objectives {
        let Some(objective) = s.objective(id) else { continue };
        let mut verdict = ObjectiveCoverage {
            objective: id.clone(),
            threshold: objective.threshold,
            impossible_paths: Vec::new(),
            unguaranteed_paths: Vec::new(),
        };
        for (i, scores) in report.scores.iter().enumerate() {
            let Some(bounds) = scores.get(id) else { continue };
            if bounds.hi < objective.threshold {
                verdict.impossible_paths.push(i);
            } else if bounds.lo < objective.threshold {
                verdict.unguaranteed_paths.push(i);
            }
        }
        out.push(verdict);
    }
    out
}

fn render_path(path: &[SceneNum]) -> String {
    path.iter().map(ToString::to_string).collect::<Vec<_>>().join(">")
}

/// E011 when some path cannot reach a principal objective's threshold even in
/// the best case, W015 when some path reaches it only in favorable cases.
pub fn check_objective_coverage(s: &Scenario, report: &PathReport) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let total = report.paths.len();
    for v in coverage_verdicts(s, report) {
        if let Some(&first) = v.impossible_paths.first() {
            out.push(Diagnostic::global(
                Code::CoverageImpossible,
                format!(
                    "objective `{}` (threshold {}) cannot be attained on {} of {total} paths, e.g. {}",
                    v.objective,
                    v.threshold,
                    v.impossible_paths.len(),
                    render_path(&report.paths[first])
                ),
            ));
        }
        if let Some(&first) = v.unguaranteed_paths.first() {
            out.push(Diagnostic::global(
                Code::CoverageNotGuaranteed,
                format!(
                    "objective `{}` (threshold {}) is not guaranteed on {} of {total} paths, e.g. {}",
                    v.objective,
                    v.threshold,
                    v.unguaranteed_paths.len(),
                    render_path(&report.paths[first])
                ),
            ));
        }
    }
    if report.truncated {
        out.push(Diagnostic::global(
            Code::PathsTruncated,
            format!("only the first {total} paths were checked"),
        ));
    }
    out
}
