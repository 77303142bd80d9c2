use std::collections::BTreeMap;

use crate::condition::{free_vars, satisfiable, ConditionExpr, Interval, Satisfiability};
use crate::diagnostics::{Code, Diagnostic};
use crate::model::Scenario;

/// E009 for guards that can never hold over the declared ranges; W010 for a
/// guard that can never fire because earlier guards on the same scene
/// already cover every value that satisfies it.
pub fn check_guard_sanity(s: &Scenario) -> Vec<Diagnostic> {
    let ranges: BTreeMap<String, Interval> = s.variable_ranges();
    let analyzable = |g: &ConditionExpr| free_vars(g).iter().all(|v| ranges.contains_key(v));
    let mut out = Vec::new();
    for scene in s.scenes() {
        let mut earlier: Vec<&ConditionExpr> = Vec::new();
        let mut earlier_complete = true;
        for t in &scene.transitions {
            let Some(guard) = &t.guard else { continue };
            if !analyzable(guard) {
                earlier_complete = false;
                continue;
            }
            let verdict = satisfiable(guard, &ranges).expect("ranges checked");
            if verdict == Satisfiability::Never {
                out.push(Diagnostic::at(
                    Code::UnsatisfiableGuard,
                    scene.num,
                    format!("guard `{guard}` (to scene {}) can never be true over the declared ranges", t.target),
                ));
            } else if earlier_complete && !earlier.is_empty() {
                let covered = earlier
                    .iter()
                    .map(|g| (*g).clone())
                    .reduce(ConditionExpr::or)
                    .expect("non-empty");
                let residual = ConditionExpr::and(guard.clone(), ConditionExpr::not(covered));
                if satisfiable(&residual, &ranges).expect("ranges checked") == Satisfiability::Never {
                    out.push(Diagnostic::at(
                        Code::ShadowedGuard,
                        scene.num,
                        format!("guard `{guard}` (to scene {}) is implied by earlier guards and never fires", t.target),
                    ));
                }
            }
            earlier.push(guard);
        }
    }
    out
}
