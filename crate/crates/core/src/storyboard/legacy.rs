//! The flat `<scenes>` storyboard dialect.
//!
//! Each `<scene>` carries `num`, `prec`, `chemin`, `description` and numbered
//! routing attributes: `conditionK` guards `suivK`, tried in order of `K`; the
//! last `suivK` without a condition is the fallback. An unindexed `condition`
//! is the same as `condition1`.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::condition::{parse_condition, ConditionError, Interval};
use crate::decimal::Decimal;
use crate::diagnostics::{Code, Diagnostic};
use crate::model::{
    Act, Extensions, Moment, PedagogicalObjective, Scenario, Scene, SceneNum, Transition,
    VariableDecl,
};
use crate::xml::{self, Element, Mode, XmlError};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LegacyStoryboard {
    pub scenes: Vec<LegacyScene>,
    /// Unknown child elements of `<scenes>`, kept for re-export.
    pub extra_elements: Vec<Element>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LegacyScene {
    pub num: SceneNum,
    pub prec: i64,
    pub chemin: String,
    pub description: String,
    pub transitions: Vec<Transition>,
    pub extra_attrs: Vec<(String, String)>,
    pub extra_elements: Vec<Element>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LegacyError {
    #[error(transparent)]
    Xml(#[from] XmlError),
    #[error("root element must be <scenes>, found <{0}>")]
    WrongRoot(String),
    #[error("scene #{position}: missing required attribute `{attr}`")]
    MissingAttribute { position: usize, attr: &'static str },
    #[error("scene #{position}: `{attr}` must be an integer, got `{value}`")]
    NotAnInteger {
        position: usize,
        attr: String,
        value: String,
    },
    #[error("scene {scene}: condition{index} has no matching suiv{index}")]
    ConditionWithoutTarget { scene: SceneNum, index: usize },
    #[error("scene {scene}: index {index} given twice (`condition` is `condition1`)")]
    DuplicateIndex { scene: SceneNum, index: usize },
    #[error("scene {scene}: suiv indices must run 1..={count} without gaps")]
    NonContiguous { scene: SceneNum, count: usize },
    #[error("scene {scene}: {attr}: {source}")]
    Condition {
        scene: SceneNum,
        attr: String,
        source: ConditionError,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConversionError {
    #[error("cannot lift storyboard: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidStart(Vec<Diagnostic>),
    #[error("not representable in the legacy storyboard format: {0}")]
    NotRepresentable(String),
}

fn parse_int<T: std::str::FromStr>(
    position: usize,
    attr: &str,
    value: &str,
) -> Result<T, LegacyError> {
    value.trim().parse().map_err(|_| LegacyError::NotAnInteger {
        position,
        attr: attr.to_string(),
        value: value.to_string(),
    })
}

/// Splits `condition7` / `suiv7` into kind and index.
fn routing_attr(name: &str) -> Option<(&'static str, usize)> {
    if name == "condition" {
        return Some(("condition", 1));
    }
    for kind in ["condition", "suiv"] {
        if let Some(digits) = name.strip_prefix(kind) {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                let index: usize = digits.parse().ok()?;
                if index >= 1 {
                    return Some((if kind == "suiv" { "suiv" } else { "condition" }, index));
                }
            }
        }
    }
    None
}

fn parse_scene(position: usize, el: &Element, diags: &mut Vec<Diagnostic>) -> Result<LegacyScene, LegacyError> {
    let num_text = el
        .attr("num")
        .ok_or(LegacyError::MissingAttribute { position, attr: "num" })?;
    let num: SceneNum = parse_int(position, "num", num_text)?;
    if num == 0 {
        return Err(LegacyError::NotAnInteger {
            position,
            attr: "num".into(),
            value: num_text.into(),
        });
    }
    let prec: i64 = parse_int(
        position,
        "prec",
        el.attr("prec")
            .ok_or(LegacyError::MissingAttribute { position, attr: "prec" })?,
    )?;

    let mut conditions: BTreeMap<usize, (String, String)> = BTreeMap::new();
    let mut targets: BTreeMap<usize, SceneNum> = BTreeMap::new();
    let mut extra_attrs = Vec::new();
    for (name, value) in &el.attrs {
        match name.as_str() {
            "num" | "prec" | "chemin" | "description" => {}
            _ => match routing_attr(name) {
                Some(("condition", index)) => {
                    if conditions.insert(index, (name.clone(), value.clone())).is_some() {
                        return Err(LegacyError::DuplicateIndex { scene: num, index });
                    }
                }
                Some((_, index)) => {
                    let target = parse_int(position, name, value)?;
                    targets.insert(index, target);
                }
                None => {
                    diags.push(Diagnostic::at(
                        Code::UnknownMarkup,
                        num,
                        format!("unknown attribute `{name}` preserved"),
                    ));
                    extra_attrs.push((name.clone(), value.clone()));
                }
            },
        }
    }
    if let Some(&index) = conditions.keys().find(|k| !targets.contains_key(k)) {
        return Err(LegacyError::ConditionWithoutTarget { scene: num, index });
    }
    let count = targets.len();
    if targets.keys().copied().ne(1..=count) {
        return Err(LegacyError::NonContiguous { scene: num, count });
    }
    let mut transitions = Vec::with_capacity(count);
    for (index, target) in targets {
        let guard = match conditions.get(&index) {
            Some((attr, text)) => Some(parse_condition(text).map_err(|source| {
                LegacyError::Condition {
                    scene: num,
                    attr: attr.clone(),
                    source,
                }
            })?),
            None => None,
        };
        transitions.push(Transition { guard, target });
    }
    let extra_elements: Vec<Element> = el.elements().cloned().collect();
    for child in &extra_elements {
        diags.push(Diagnostic::at(
            Code::UnknownMarkup,
            num,
            format!("unknown element <{}> preserved", child.name),
        ));
    }
    Ok(LegacyScene {
        num,
        prec,
        chemin: el.attr("chemin").unwrap_or_default().to_string(),
        description: el.attr("description").unwrap_or_default().to_string(),
        transitions,
        extra_attrs,
        extra_elements,
    })
}

/// Reads a `<scenes>` storyboard.
///
/// Hand-written markup is repaired where possible (each repair is reported as
/// W020). The returned diagnostics also cover duplicate scene numbers, dangling
/// targets and the start-scene rules.
pub fn parse_legacy(bytes: &[u8]) -> Result<(LegacyStoryboard, Vec<Diagnostic>), LegacyError> {
    let doc = xml::parse(bytes, Mode::Lenient)?;
    if doc.root.name != "scenes" {
        return Err(LegacyError::WrongRoot(doc.root.name));
    }
    let mut diags: Vec<Diagnostic> = doc
        .recoveries
        .iter()
        .map(|r| Diagnostic::global(Code::RecoveredMarkup, format!("byte {}: {}", r.offset, r.message)))
        .collect();
    let mut board = LegacyStoryboard::default();
    let mut position = 0;
    for el in doc.root.elements() {
        if el.name == "scene" {
            position += 1;
            board.scenes.push(parse_scene(position, el, &mut diags)?);
        } else {
            diags.push(Diagnostic::global(
                Code::UnknownMarkup,
                format!("unknown element <{}> preserved", el.name),
            ));
            board.extra_elements.push(el.clone());
        }
    }
    diags.extend(board_diagnostics(&board));
    Ok((board, diags))
}

fn board_diagnostics(board: &LegacyStoryboard) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut seen = BTreeSet::new();
    for s in &board.scenes {
        if !seen.insert(s.num) {
            diags.push(Diagnostic::at(Code::DuplicateScene, s.num, format!("scene num {} defined more than once", s.num)));
        }
    }
    for s in &board.scenes {
        for t in &s.transitions {
            if !seen.contains(&t.target) {
                diags.push(Diagnostic::at(
                    Code::DanglingTarget,
                    s.num,
                    format!("transition targets scene {} which is not defined", t.target),
                ));
            }
        }
    }
    diags.extend(start_diagnostics(board));
    diags
}

fn start_diagnostics(board: &LegacyStoryboard) -> Vec<Diagnostic> {
    let starts: Vec<SceneNum> = board.scenes.iter().filter(|s| s.prec == 0).map(|s| s.num).collect();
    match starts.len() {
        0 => vec![Diagnostic::global(Code::NoStart, "no scene has prec=\"0\"")],
        1 => Vec::new(),
        _ => starts
            .iter()
            .map(|n| Diagnostic::at(Code::MultipleStarts, *n, "more than one scene has prec=\"0\""))
            .collect(),
    }
}

/// Values used when lifting a storyboard into a full scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDefaults {
    pub id: String,
    pub title: String,
    pub act_id: String,
    pub objective_id: String,
    pub objective_name: String,
    pub threshold: Decimal,
    pub score_variable: String,
    pub score_initial: Decimal,
    pub score_range: Interval,
}

impl Default for ScenarioDefaults {
    fn default() -> Self {
        ScenarioDefaults {
            id: "storyboard".into(),
            title: String::new(),
            act_id: "act-1".into(),
            objective_id: "objective-1".into(),
            objective_name: "Principal objective".into(),
            threshold: Decimal::ZERO,
            score_variable: "score".into(),
            score_initial: Decimal::ZERO,
            score_range: Interval::ints(0, 100),
        }
    }
}

/// Wraps every scene into a single act dedicated to one default objective and
/// declares the `score` variable the guards test.
pub fn to_scenario(legacy: &LegacyStoryboard, defaults: &ScenarioDefaults) -> Result<Scenario, ConversionError> {
    let start_problems = start_diagnostics(legacy);
    if !start_problems.is_empty() {
        return Err(ConversionError::InvalidStart(start_problems));
    }
    let scenes = legacy
        .scenes
        .iter()
        .map(|s| Scene {
            num: s.num,
            prec: s.prec,
            asset_path: s.chemin.clone(),
            description: s.description.clone(),
            activity_id: None,
            moment_tags: BTreeSet::from([Moment::Learning]),
            transitions: s.transitions.clone(),
            choice_group: Vec::new(),
            extensions: Extensions {
                attrs: s.extra_attrs.clone(),
                elements: s.extra_elements.clone(),
            },
        })
        .collect();
    Ok(Scenario {
        id: defaults.id.clone(),
        title: defaults.title.clone(),
        principal_objectives: vec![defaults.objective_id.clone()],
        objectives: vec![PedagogicalObjective {
            id: defaults.objective_id.clone(),
            name: defaults.objective_name.clone(),
            threshold: defaults.threshold,
        }],
        variables: vec![VariableDecl {
            name: defaults.score_variable.clone(),
            initial: defaults.score_initial,
            range: defaults.score_range,
            tracks: Some(defaults.objective_id.clone()),
        }],
        learner_profile: Default::default(),
        activities: BTreeMap::new(),
        toolbar: Vec::new(),
        acts: vec![Act {
            id: defaults.act_id.clone(),
            objective_id: defaults.objective_id.clone(),
            scenes,
            extensions: Extensions::default(),
        }],
        extensions: Extensions {
            attrs: Vec::new(),
            elements: legacy.extra_elements.clone(),
        },
    })
}

/// Projects a scenario onto the legacy dialect.
///
/// Only single-act scenarios without player choices are representable.
/// Objectives, variables, activities and moment tags have no legacy form and
/// are not written.
pub fn export_legacy(scenario: &Scenario) -> Result<Vec<u8>, ConversionError> {
    if scenario.acts.len() != 1 {
        return Err(ConversionError::NotRepresentable(format!(
            "{} acts (the legacy format holds exactly one)",
            scenario.acts.len()
        )));
    }
    if let Some(s) = scenario.scenes().find(|s| !s.choice_group.is_empty()) {
        return Err(ConversionError::NotRepresentable(format!(
            "scene {} offers player choices",
            s.num
        )));
    }
    let mut root = Element::new("scenes");
    for s in scenario.scenes() {
        let mut el = Element::new("scene")
            .with_attr("num", s.num.to_string())
            .with_attr("prec", s.prec.to_string())
            .with_attr("chemin", &s.asset_path)
            .with_attr("description", &s.description);
        for (i, t) in s.transitions.iter().enumerate() {
            let k = i + 1;
            if let Some(guard) = &t.guard {
                el.push_attr(format!("condition{k}"), guard.to_string());
            }
            el.push_attr(format!("suiv{k}"), t.target.to_string());
        }
        el.attrs.extend(s.extensions.attrs.iter().cloned());
        el.children
            .extend(s.extensions.elements.iter().cloned().map(xml::Node::Element));
        root.push_child(el);
    }
    root.children.extend(
        scenario
            .extensions
            .elements
            .iter()
            .cloned()
            .map(xml::Node::Element),
    );
    Ok(xml::write_document(&root).into_bytes())
}
