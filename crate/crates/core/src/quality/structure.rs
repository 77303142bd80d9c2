use std::collections::{BTreeMap, BTreeSet};

use crate::condition::free_vars;
use crate::diagnostics::{Code, Diagnostic};
use crate::model::{Scenario, SceneNum};

fn duplicates<'a>(items: impl Iterator<Item = &'a str>) -> BTreeSet<&'a str> {
    let mut seen = BTreeSet::new();
    let mut dups = BTreeSet::new();
    for item in items {
        if !seen.insert(item) {
            dups.insert(item);
        }
    }
    dups
}

/// Well-formedness of a scenario: declarations, references, start scene and
/// the shape of each scene's routing.
pub fn check_structure(s: &Scenario) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let objectives: BTreeSet<&str> = s.objectives.iter().map(|o| o.id.as_str()).collect();
    let variables: BTreeSet<&str> = s.variables.iter().map(|v| v.name.as_str()).collect();

    let groups: [(&str, Vec<&str>); 5] = [
        ("objective", s.objectives.iter().map(|o| o.id.as_str()).collect()),
        ("variable", s.variables.iter().map(|v| v.name.as_str()).collect()),
        ("act", s.acts.iter().map(|a| a.id.as_str()).collect()),
        ("tool", s.toolbar.iter().map(String::as_str).collect()),
        ("learner-profile objective", s.learner_profile.objectives.iter().map(String::as_str).collect()),
    ];
    for (kind, ids) in groups {
        for dup in duplicates(ids.into_iter()) {
            out.push(Diagnostic::global(
                Code::DuplicateDeclaration,
                format!("{kind} `{dup}` declared more than once"),
            ));
        }
    }

    let mut undeclared_objective = |context: String, id: &str| {
        if !objectives.contains(id) {
            out.push(Diagnostic::global(
                Code::UndeclaredReference,
                format!("{context} refers to undeclared objective `{id}`"),
            ));
        }
    };
    for id in &s.principal_objectives {
        undeclared_objective("principal objective list".into(), id);
    }
    for act in &s.acts {
        undeclared_objective(format!("act `{}`", act.id), &act.objective_id);
    }
    for id in &s.learner_profile.objectives {
        undeclared_objective("learner profile".into(), id);
    }
    for v in &s.variables {
        if let Some(t) = &v.tracks {
            undeclared_objective(format!("variable `{}`", v.name), t);
        }
    }
    for a in s.activities.values() {
        for o in a.objective_effects.keys() {
            undeclared_objective(format!("activity `{}`", a.id), o);
        }
    }
    if s.principal_objectives.is_empty() {
        out.push(Diagnostic::global(
            Code::UndeclaredReference,
            "no principal objective is declared",
        ));
    }
    for a in s.activities.values() {
        for v in a.variable_effects.keys() {
            if !variables.contains(v.as_str()) {
                out.push(Diagnostic::global(
                    Code::UndeclaredReference,
                    format!("activity `{}` updates undeclared variable `{v}`", a.id),
                ));
            }
        }
    }

    let mut scene_count: BTreeMap<SceneNum, usize> = BTreeMap::new();
    for scene in s.scenes() {
        *scene_count.entry(scene.num).or_default() += 1;
    }
    for (num, count) in &scene_count {
        if *count > 1 {
            out.push(Diagnostic::at(
                Code::DuplicateScene,
                *num,
                format!("scene num {num} defined {count} times"),
            ));
        }
    }

    let starts: Vec<SceneNum> = s.scenes().filter(|sc| sc.is_start()).map(|sc| sc.num).collect();
    match starts.len() {
        0 => out.push(Diagnostic::global(Code::NoStart, "no scene has prec=\"0\"")),
        1 => {}
        _ => {
            for n in starts {
                out.push(Diagnostic::at(Code::MultipleStarts, n, "more than one scene has prec=\"0\""));
            }
        }
    }

    let mut predecessors: BTreeMap<SceneNum, BTreeSet<SceneNum>> = BTreeMap::new();
    for scene in s.scenes() {
        for t in scene.transitions.iter().chain(&scene.choice_group) {
            predecessors.entry(t.target).or_default().insert(scene.num);
        }
    }

    for scene in s.scenes() {
        let n = scene.num;
        for t in scene.transitions.iter().chain(&scene.choice_group) {
            if !scene_count.contains_key(&t.target) {
                out.push(Diagnostic::at(
                    Code::DanglingTarget,
                    n,
                    format!("transition targets scene {} which is not defined", t.target),
                ));
            }
        }
        if !scene.transitions.is_empty() && !scene.choice_group.is_empty() {
            out.push(Diagnostic::at(
                Code::MixedRouting,
                n,
                "a scene routes either by transitions or by player choices, not both",
            ));
        }
        let unguarded: Vec<usize> = scene
            .transitions
            .iter()
            .enumerate()
            .filter(|(_, t)| t.guard.is_none())
            .map(|(i, _)| i)
            .collect();
        let last = scene.transitions.len().wrapping_sub(1);
        if !scene.transitions.is_empty() {
            if unguarded.is_empty() {
                out.push(Diagnostic::at(
                    Code::MissingFallback,
                    n,
                    "guarded transitions need a trailing unguarded fallback",
                ));
            } else if unguarded != [last] {
                out.push(Diagnostic::at(
                    Code::MissingFallback,
                    n,
                    "exactly one unguarded fallback is allowed and it must come last",
                ));
            }
        }
        for t in &scene.transitions {
            if let Some(g) = &t.guard {
                for v in free_vars(g) {
                    if !variables.contains(v.as_str()) {
                        out.push(Diagnostic::at(
                            Code::UndeclaredVariable,
                            n,
                            format!("guard `{g}` uses undeclared variable `{v}`"),
                        ));
                    }
                }
            }
        }
        if let Some(a) = &scene.activity_id {
            if !s.activities.contains_key(a) {
                out.push(Diagnostic::at(
                    Code::DanglingActivity,
                    n,
                    format!("activity `{a}` is not in the activity catalog"),
                ));
            }
        }
        if scene.prec != 0 {
            let is_pred = u32::try_from(scene.prec)
                .ok()
                .is_some_and(|p| predecessors.get(&n).is_some_and(|ps| ps.contains(&p)));
            if !is_pred {
                out.push(Diagnostic::at(
                    Code::PrecInconsistent,
                    n,
                    format!("prec={} is not a predecessor of scene {n} in the graph", scene.prec),
                ));
            }
        }
    }
    out
}
