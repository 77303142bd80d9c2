//! Static pedagogical quality control over a scenario's scene graph.
//!
//! [`validate`] runs every check in order: structure, guard sanity,
//! reachability, dead ends, then path enumeration and objective coverage.
//! Graph analyses are skipped while the graph itself is ill-formed (duplicate
//! scenes, dangling targets, start problems, bad routing).

mod coverage;
mod graph;
mod guards;
mod paths;
mod structure;

pub use coverage::{check_objective_coverage, coverage_verdicts, ObjectiveCoverage};
pub use graph::{build_graph, find_dead_ends, find_unreachable, Edge, EdgeKind, GraphError, SceneGraph};
pub use guards::check_guard_sanity;
pub use paths::{enumerate_paths, path_score_bounds, PathLimits, PathReport};
pub use structure::check_structure;

use crate::diagnostics::{normalize, Code, Diagnostic};
use crate::model::Scenario;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub diagnostics: Vec<Diagnostic>,
    pub graph: Option<SceneGraph>,
    pub paths: Option<PathReport>,
}

impl ValidationReport {
    pub fn has_errors(&self) -> bool {
        crate::diagnostics::has_errors(&self.diagnostics)
    }
}

const GRAPH_BLOCKERS: &[Code] = &[
    Code::DuplicateScene,
    Code::DanglingTarget,
    Code::NoStart,
    Code::MultipleStarts,
    Code::MissingFallback,
    Code::MixedRouting,
];

pub fn validate(s: &Scenario, limits: PathLimits) -> ValidationReport {
    let mut report = ValidationReport {
        diagnostics: check_structure(s),
        ..Default::default()
    };
    let blocked = report
        .diagnostics
        .iter()
        .any(|d| GRAPH_BLOCKERS.contains(&d.code));
    if !blocked {
        analyze_graph(s, limits, &mut report);
    }
    normalize(&mut report.diagnostics);
    report
}

fn analyze_graph(s: &Scenario, limits: PathLimits, report: &mut ValidationReport) {
    let Ok(graph) = build_graph(s) else { return };
    let diags = &mut report.diagnostics;
    diags.extend(check_guard_sanity(s));

    let unreachable = find_unreachable(&graph);
    for &n in &unreachable {
        diags.push(Diagnostic::at(
            Code::UnreachableScene,
            n,
            format!("scene {n} cannot be reached from start scene {}", graph.start),
        ));
    }
    for act in &s.acts {
        if !act.scenes.is_empty() && act.scenes.iter().all(|sc| unreachable.contains(&sc.num)) {
            diags.push(Diagnostic::global(
                Code::UnreachableAct,
                format!("no scene of act `{}` is reachable; objective `{}` is never worked on", act.id, act.objective_id),
            ));
        }
    }

    let dead = find_dead_ends(&graph);
    for &n in &dead {
        diags.push(Diagnostic::at(
            Code::DeadEnd,
            n,
            format!("no terminal scene can be reached from scene {n}"),
        ));
    }
    if dead.is_empty() {
        let mut paths = enumerate_paths(&graph, limits);
        paths.score(s);
        diags.extend(check_objective_coverage(s, &paths));
        report.paths = Some(paths);
    }
    report.graph = Some(graph);
}
