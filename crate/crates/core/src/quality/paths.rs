use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::graph::SceneGraph;
use crate::condition::Interval;
use crate::decimal::Decimal;
use crate::model::{Scenario, SceneNum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathLimits {
    pub max_paths: usize,
    /// How many times a path may re-enter a scene it already visited.
    pub max_cycle_unrolls: usize,
}

impl Default for PathLimits {
    fn default() -> Self {
        PathLimits {
            max_paths: 10_000,
            max_cycle_unrolls: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PathReport {
    /// Complete start-to-terminal scene sequences, in depth-first order.
    pub paths: Vec<Vec<SceneNum>>,
    pub truncated: bool,
    /// Per path (same index as `paths`): pessimistic and optimistic score per
    /// principal objective. Empty until [`PathReport::score`] runs.
    pub scores: Vec<BTreeMap<String, Interval>>,
}

/// Enumerates start-to-terminal paths over feasible edges.
///
/// A scene may appear on one path at most `1 + max_cycle_unrolls` times, so
/// every cycle is walked at most `max_cycle_unrolls` extra times. Enumeration
/// stops once more than `max_paths` paths exist and sets `truncated`.
pub fn enumerate_paths(g: &SceneGraph, limits: PathLimits) -> PathReport {
    let cap = limits.max_cycle_unrolls.saturating_add(1);
    let mut report = PathReport::default();
    let mut visits: BTreeMap<SceneNum, usize> = BTreeMap::new();
    let mut path = vec![g.start];
    // Each frame: the scene and the index of the next successor to try.
    let mut stack: Vec<(SceneNum, usize)> = vec![(g.start, 0)];
    *visits.entry(g.start).or_default() += 1;

    while let Some(frame) = stack.last_mut() {
        let (node, next) = *frame;
        if next == 0 && g.is_terminal(node) {
            if report.paths.len() == limits.max_paths {
                report.truncated = true;
                break;
            }
            report.paths.push(path.clone());
        }
        let succ = g.successors(node);
        if let Some(&m) = succ.get(next) {
            frame.1 += 1;
            let count = visits.entry(m).or_default();
            if *count < cap {
                *count += 1;
                path.push(m);
                stack.push((m, 0));
            }
        } else {
            stack.pop();
            path.pop();
            if let Some(c) = visits.get_mut(&node) {
                *c -= 1;
            }
        }
    }
    report
}

/// Score bounds a learner can collect on `path` for `objective`, following
/// the objective's score mechanism. A path with no scoring activity yields 0.
pub fn path_score_bounds(s: &Scenario, path: &[SceneNum], objective: &str) -> Interval {
    let mechanism = s.learner_profile.mechanism(objective);
    let mut lo: Option<Decimal> = None;
    let mut hi: Option<Decimal> = None;
    for &num in path {
        let Some(scene) = s.scene(num) else { continue };
        let Some(effect) = s
            .scene_activity(scene)
            .and_then(|a| a.objective_effects.get(objective))
        else {
            continue;
        };
        lo = Some(mechanism.accumulate(lo, effect.lo));
        hi = Some(mechanism.accumulate(hi, effect.hi));
    }
    Interval::new(lo.unwrap_or_default(), hi.unwrap_or_default())
}

impl PathReport {
    /// Fills `scores` for the scenario's principal objectives.
    pub fn score(&mut self, s: &Scenario) {
        self.scores = self
            .paths
            .iter()
            .map(|p| {
                s.principal_objectives
                    .iter()
                    .filter(|o| s.objective(o).is_some())
                    .map(|o| (o.clone(), path_score_bounds(s, p, o)))
                    .collect()
            })
            .collect();
    }
}
