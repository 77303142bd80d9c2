//! The canonical `<scenario>` dialect: objectives, variables, learner
//! profile, activity catalog, toolbar and acts of scenes in one document.
//! `docs/canonical-format.md` describes every element.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use thiserror::Error;

use crate::condition::{parse_condition, Interval};
use crate::decimal::Decimal;
use crate::diagnostics::{Code, Diagnostic};
use crate::model::{
    Act, ActivitySpec, Extensions, Grain, Indicator, LearnerProfileSpec, Moment,
    PedagogicalObjective, Scenario, Scene, SceneNum, ScoreMechanism, Transition, VariableDecl,
};
use crate::quality::check_structure;
use crate::xml::{self, Element, Mode, Node, XmlError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioParseError {
    #[error(transparent)]
    Xml(#[from] XmlError),
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
}

type Result<T> = std::result::Result<T, ScenarioParseError>;

/// Walks the tree keeping the element path for error messages.
struct Ctx<'d> {
    diags: &'d mut Vec<Diagnostic>,
    /// Unknown children of container elements, hoisted to the scenario root.
    hoisted: Vec<Element>,
}

fn child_path(parent: &str, el: &Element, index: usize) -> String {
    format!("{parent}/{}[{index}]", el.name)
}

fn schema(path: &str, message: impl Into<String>) -> ScenarioParseError {
    ScenarioParseError::Schema {
        path: path.to_string(),
        message: message.into(),
    }
}

fn required<'e>(el: &'e Element, path: &str, attr: &str) -> Result<&'e str> {
    el.attr(attr)
        .ok_or_else(|| schema(&format!("{path}/@{attr}"), "required attribute missing"))
}

fn parsed<T: FromStr>(el: &Element, path: &str, attr: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match el.attr(attr) {
        None => Ok(None),
        Some(text) => text
            .parse()
            .map(Some)
            .map_err(|e| schema(&format!("{path}/@{attr}"), format!("`{text}`: {e}"))),
    }
}

fn parsed_required<T: FromStr>(el: &Element, path: &str, attr: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    parsed(el, path, attr)?
        .ok_or_else(|| schema(&format!("{path}/@{attr}"), "required attribute missing"))
}

fn interval(el: &Element, path: &str, lo: &str, hi: &str) -> Result<Interval> {
    let iv = Interval::new(parsed_required(el, path, lo)?, parsed_required(el, path, hi)?);
    if !iv.is_valid() {
        return Err(schema(path, format!("`{lo}` must not exceed `{hi}`")));
    }
    Ok(iv)
}

impl Ctx<'_> {
    /// Splits attributes into known ones and extensions, warning on the latter.
    fn extension_attrs(&mut self, el: &Element, known: &[&str], scene: Option<SceneNum>, path: &str) -> Vec<(String, String)> {
        let mut extra = Vec::new();
        for (k, v) in &el.attrs {
            if !known.contains(&k.as_str()) {
                self.diags.push(Diagnostic::new(
                    Code::UnknownMarkup,
                    scene,
                    format!("{path}: unknown attribute `{k}` preserved"),
                ));
                extra.push((k.clone(), v.clone()));
            }
        }
        extra
    }

    /// Warns about attributes on elements that have no extension slot.
    fn ignore_unknown_attrs(&mut self, el: &Element, known: &[&str], scene: Option<SceneNum>, path: &str) {
        for (k, _) in &el.attrs {
            if !known.contains(&k.as_str()) {
                self.diags.push(Diagnostic::new(
                    Code::UnknownMarkup,
                    scene,
                    format!("{path}: unknown attribute `{k}` ignored"),
                ));
            }
        }
    }

    fn unknown_element(&mut self, el: &Element, scene: Option<SceneNum>, path: &str) {
        self.diags.push(Diagnostic::new(
            Code::UnknownMarkup,
            scene,
            format!("{path}: unknown element <{}> preserved", el.name),
        ));
    }

    /// Iterates children, reporting unknown names. Unknown children of
    /// containers without an extension slot move to the scenario root.
    fn children<'e>(&mut self, el: &'e Element, path: &str, expected: &str) -> Vec<(String, &'e Element)> {
        let mut out = Vec::new();
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for child in el.elements() {
            let n = counts.entry(child.name.as_str()).or_default();
            *n += 1;
            let p = child_path(path, child, *n);
            if child.name == expected {
                out.push((p, child));
            } else {
                self.unknown_element(child, None, &p);
                self.hoisted.push(child.clone());
            }
        }
        if !el.text().trim().is_empty() {
            self.diags.push(Diagnostic::global(
                Code::UnknownMarkup,
                format!("{path}: text content ignored"),
            ));
        }
        out
    }
}

fn id_list(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

fn parse_objectives(ctx: &mut Ctx, el: &Element, path: &str, scenario: &mut Scenario) -> Result<()> {
    ctx.ignore_unknown_attrs(el, &["principal"], None, path);
    scenario.principal_objectives = id_list(el.attr("principal").unwrap_or_default());
    for (p, o) in ctx.children(el, path, "objective") {
        ctx.ignore_unknown_attrs(o, &["id", "name", "threshold"], None, &p);
        let threshold: Decimal = parsed_required(o, &p, "threshold")?;
        if threshold < Decimal::ZERO {
            return Err(schema(&format!("{p}/@threshold"), "threshold must be >= 0"));
        }
        scenario.objectives.push(PedagogicalObjective {
            id: required(o, &p, "id")?.to_string(),
            name: o.attr("name").unwrap_or_default().to_string(),
            threshold,
        });
    }
    Ok(())
}

fn parse_variables(ctx: &mut Ctx, el: &Element, path: &str, scenario: &mut Scenario) -> Result<()> {
    ctx.ignore_unknown_attrs(el, &[], None, path);
    for (p, v) in ctx.children(el, path, "variable") {
        ctx.ignore_unknown_attrs(v, &["name", "initial", "lo", "hi", "tracks"], None, &p);
        let name = required(v, &p, "name")?;
        if !is_identifier(name) {
            return Err(schema(&format!("{p}/@name"), format!("`{name}` is not an identifier")));
        }
        let range = interval(v, &p, "lo", "hi")?;
        let initial: Decimal = parsed_required(v, &p, "initial")?;
        if !range.contains(initial) {
            return Err(schema(&format!("{p}/@initial"), "initial value outside [lo, hi]"));
        }
        scenario.variables.push(VariableDecl {
            name: name.to_string(),
            initial,
            range,
            tracks: v.attr("tracks").map(str::to_string),
        });
    }
    Ok(())
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_profile(ctx: &mut Ctx, el: &Element, path: &str, scenario: &mut Scenario) -> Result<()> {
    ctx.ignore_unknown_attrs(el, &["indicators"], None, path);
    let mut profile = LearnerProfileSpec::default();
    for word in el.attr("indicators").unwrap_or_default().split_whitespace() {
        let ind: Indicator = word
            .parse()
            .map_err(|e: String| schema(&format!("{path}/@indicators"), e))?;
        profile.indicators.insert(ind);
    }
    for (p, s) in ctx.children(el, path, "score") {
        ctx.ignore_unknown_attrs(s, &["objective", "mechanism"], None, &p);
        let objective = required(s, &p, "objective")?.to_string();
        let mechanism: ScoreMechanism = parsed(s, &p, "mechanism")?.unwrap_or_default();
        profile.objectives.push(objective.clone());
        profile.score_mechanism.insert(objective, mechanism);
    }
    scenario.learner_profile = profile;
    Ok(())
}

fn parse_activities(ctx: &mut Ctx, el: &Element, path: &str, scenario: &mut Scenario) -> Result<()> {
    ctx.ignore_unknown_attrs(el, &[], None, path);
    for (p, a) in ctx.children(el, path, "activity") {
        let id = required(a, &p, "id")?.to_string();
        let grain: Grain = parsed(a, &p, "grain")?.unwrap_or(Grain::Activity);
        let duration: Decimal = parsed(a, &p, "duration")?.unwrap_or_default();
        if duration < Decimal::ZERO {
            return Err(schema(&format!("{p}/@duration"), "duration must be >= 0"));
        }
        let attrs = ctx.extension_attrs(a, &["id", "grain", "duration"], None, &p);
        let mut activity = ActivitySpec {
            id: id.clone(),
            grain,
            expected_duration_s: duration,
            objective_effects: BTreeMap::new(),
            variable_effects: BTreeMap::new(),
            extensions: Extensions { attrs, elements: Vec::new() },
        };
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for child in a.elements() {
            let n = counts.entry(child.name.as_str()).or_default();
            *n += 1;
            let cp = child_path(&p, child, *n);
            let (key_attr, map) = match child.name.as_str() {
                "objective-effect" => ("objective", &mut activity.objective_effects),
                "variable-effect" => ("variable", &mut activity.variable_effects),
                _ => {
                    ctx.unknown_element(child, None, &cp);
                    activity.extensions.elements.push(child.clone());
                    continue;
                }
            };
            ctx.ignore_unknown_attrs(child, &[key_attr, "min", "max"], None, &cp);
            let key = required(child, &cp, key_attr)?.to_string();
            let iv = interval(child, &cp, "min", "max")?;
            if map.insert(key.clone(), iv).is_some() {
                return Err(schema(&cp, format!("effect on `{key}` given twice")));
            }
        }
        if scenario.activities.contains_key(&id) {
            ctx.diags.push(Diagnostic::global(
                Code::DuplicateDeclaration,
                format!("activity `{id}` declared more than once; the first declaration is kept"),
            ));
            continue;
        }
        scenario.activities.insert(id, activity);
    }
    Ok(())
}

fn parse_toolbar(ctx: &mut Ctx, el: &Element, path: &str, scenario: &mut Scenario) -> Result<()> {
    ctx.ignore_unknown_attrs(el, &[], None, path);
    for (p, t) in ctx.children(el, path, "tool") {
        ctx.ignore_unknown_attrs(t, &["id"], None, &p);
        scenario.toolbar.push(required(t, &p, "id")?.to_string());
    }
    Ok(())
}

fn parse_scene(ctx: &mut Ctx, el: &Element, path: &str) -> Result<Scene> {
    let num: SceneNum = parsed_required(el, path, "num")?;
    if num == 0 {
        return Err(schema(&format!("{path}/@num"), "scene num must be positive"));
    }
    let prec: i64 = parsed_required(el, path, "prec")?;
    let moment_tags = match el.attr("moments") {
        None => BTreeSet::from([Moment::Learning]),
        Some(text) => {
            let tags = text
                .split_whitespace()
                .map(|w| w.parse::<Moment>())
                .collect::<std::result::Result<BTreeSet<_>, _>>()
                .map_err(|e| schema(&format!("{path}/@moments"), e))?;
            if tags.is_empty() {
                return Err(schema(&format!("{path}/@moments"), "at least one moment tag is required"));
            }
            tags
        }
    };
    let attrs = ctx.extension_attrs(
        el,
        &["num", "prec", "chemin", "description", "activity", "moments"],
        Some(num),
        path,
    );
    let mut scene = Scene {
        num,
        prec,
        asset_path: el.attr("chemin").unwrap_or_default().to_string(),
        description: el.attr("description").unwrap_or_default().to_string(),
        activity_id: el.attr("activity").map(str::to_string),
        moment_tags,
        transitions: Vec::new(),
        choice_group: Vec::new(),
        extensions: Extensions { attrs, elements: Vec::new() },
    };
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for child in el.elements() {
        let n = counts.entry(child.name.as_str()).or_default();
        *n += 1;
        let cp = child_path(path, child, *n);
        match child.name.as_str() {
            "t" => {
                ctx.ignore_unknown_attrs(child, &["cond", "to"], Some(num), &cp);
                let guard = match child.attr("cond") {
                    Some(text) => Some(
                        parse_condition(text)
                            .map_err(|e| schema(&format!("{cp}/@cond"), e.to_string()))?,
                    ),
                    None => None,
                };
                scene.transitions.push(Transition {
                    guard,
                    target: parsed_required(child, &cp, "to")?,
                });
            }
            "choice" => {
                ctx.ignore_unknown_attrs(child, &["to"], Some(num), &cp);
                scene
                    .choice_group
                    .push(Transition::fallback(parsed_required(child, &cp, "to")?));
            }
            _ => {
                ctx.unknown_element(child, Some(num), &cp);
                scene.extensions.elements.push(child.clone());
            }
        }
    }
    Ok(scene)
}

fn parse_acts(ctx: &mut Ctx, el: &Element, path: &str, scenario: &mut Scenario) -> Result<()> {
    ctx.ignore_unknown_attrs(el, &[], None, path);
    for (p, a) in ctx.children(el, path, "act") {
        let attrs = ctx.extension_attrs(a, &["id", "objective"], None, &p);
        let mut act = Act {
            id: required(a, &p, "id")?.to_string(),
            objective_id: required(a, &p, "objective")?.to_string(),
            scenes: Vec::new(),
            extensions: Extensions { attrs, elements: Vec::new() },
        };
        let mut n = 0;
        for child in a.elements() {
            if child.name == "scene" {
                n += 1;
                act.scenes.push(parse_scene(ctx, child, &child_path(&p, child, n))?);
            } else {
                ctx.unknown_element(child, None, &format!("{p}/{}", child.name));
                act.extensions.elements.push(child.clone());
            }
        }
        scenario.acts.push(act);
    }
    Ok(())
}

/// Reads a canonical scenario document. Structural problems that do not
/// prevent building the model are returned as diagnostics.
pub fn parse_scenario(bytes: &[u8]) -> Result<(Scenario, Vec<Diagnostic>)> {
    let doc = xml::parse(bytes, Mode::Strict)?;
    let root = doc.root;
    if root.name != "scenario" {
        return Err(schema(&format!("/{}", root.name), "root element must be <scenario>"));
    }
    let mut diags = Vec::new();
    let mut ctx = Ctx {
        diags: &mut diags,
        hoisted: Vec::new(),
    };
    let path = "/scenario";
    let mut scenario = Scenario {
        id: required(&root, path, "id")?.to_string(),
        title: root.attr("title").unwrap_or_default().to_string(),
        ..Default::default()
    };
    scenario.extensions.attrs = ctx.extension_attrs(&root, &["id", "title"], None, path);
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for child in root.elements() {
        let p = format!("{path}/{}", child.name);
        let known = matches!(
            child.name.as_str(),
            "objectives" | "variables" | "learner-profile" | "activities" | "toolbar" | "acts"
        );
        if known && !seen.insert(child.name.as_str()) {
            return Err(schema(&p, "section given more than once"));
        }
        match child.name.as_str() {
            "objectives" => parse_objectives(&mut ctx, child, &p, &mut scenario)?,
            "variables" => parse_variables(&mut ctx, child, &p, &mut scenario)?,
            "learner-profile" => parse_profile(&mut ctx, child, &p, &mut scenario)?,
            "activities" => parse_activities(&mut ctx, child, &p, &mut scenario)?,
            "toolbar" => parse_toolbar(&mut ctx, child, &p, &mut scenario)?,
            "acts" => parse_acts(&mut ctx, child, &p, &mut scenario)?,
            _ => {
                ctx.unknown_element(child, None, &p);
                scenario.extensions.elements.push(child.clone());
            }
        }
    }
    for required_section in ["objectives", "acts"] {
        if !seen.contains(required_section) {
            return Err(schema(&format!("{path}/{required_section}"), "required section missing"));
        }
    }
    let hoisted = std::mem::take(&mut ctx.hoisted);
    scenario.extensions.elements.extend(hoisted);
    diags.extend(check_structure(&scenario));
    crate::diagnostics::normalize(&mut diags);
    Ok((scenario, diags))
}

fn with_extensions(mut el: Element, ext: &Extensions) -> Element {
    el.attrs.extend(ext.attrs.iter().cloned());
    el.children
        .extend(ext.elements.iter().cloned().map(Node::Element));
    el
}

fn scene_element(scene: &Scene) -> Element {
    let mut el = Element::new("scene")
        .with_attr("num", scene.num.to_string())
        .with_attr("prec", scene.prec.to_string())
        .with_attr("chemin", &scene.asset_path)
        .with_attr("description", &scene.description);
    if let Some(a) = &scene.activity_id {
        el.push_attr("activity", a);
    }
    let moments: Vec<String> = scene.moment_tags.iter().map(ToString::to_string).collect();
    el.push_attr("moments", moments.join(" "));
    for t in &scene.transitions {
        let mut te = Element::new("t");
        if let Some(g) = &t.guard {
            te.push_attr("cond", g.to_string());
        }
        te.push_attr("to", t.target.to_string());
        el.push_child(te);
    }
    for c in &scene.choice_group {
        el.push_child(Element::new("choice").with_attr("to", c.target.to_string()));
    }
    with_extensions(el, &scene.extensions)
}

/// Writes the canonical document. Output is deterministic: fixed element and
/// attribute order, UTF-8, LF line endings.
pub fn serialize_scenario(scenario: &Scenario) -> Vec<u8> {
    let mut root = Element::new("scenario").with_attr("id", &scenario.id);
    if !scenario.title.is_empty() {
        root.push_attr("title", &scenario.title);
    }
    root.attrs.extend(scenario.extensions.attrs.iter().cloned());

    let mut objectives = Element::new("objectives")
        .with_attr("principal", scenario.principal_objectives.join(" "));
    for o in &scenario.objectives {
        objectives.push_child(
            Element::new("objective")
                .with_attr("id", &o.id)
                .with_attr("name", &o.name)
                .with_attr("threshold", o.threshold.to_string()),
        );
    }
    root.push_child(objectives);

    let mut variables = Element::new("variables");
    for v in &scenario.variables {
        let mut ve = Element::new("variable")
            .with_attr("name", &v.name)
            .with_attr("initial", v.initial.to_string())
            .with_attr("lo", v.range.lo.to_string())
            .with_attr("hi", v.range.hi.to_string());
        if let Some(t) = &v.tracks {
            ve.push_attr("tracks", t);
        }
        variables.push_child(ve);
    }
    root.push_child(variables);

    let profile = &scenario.learner_profile;
    let indicators: Vec<&str> = profile.indicators.iter().map(|i| i.as_str()).collect();
    let mut pe = Element::new("learner-profile").with_attr("indicators", indicators.join(" "));
    for o in &profile.objectives {
        pe.push_child(
            Element::new("score")
                .with_attr("objective", o)
                .with_attr("mechanism", profile.mechanism(o).as_str()),
        );
    }
    root.push_child(pe);

    let mut activities = Element::new("activities");
    for a in scenario.activities.values() {
        let mut ae = Element::new("activity")
            .with_attr("id", &a.id)
            .with_attr("grain", a.grain.as_str())
            .with_attr("duration", a.expected_duration_s.to_string());
        for (o, iv) in &a.objective_effects {
            ae.push_child(
                Element::new("objective-effect")
                    .with_attr("objective", o)
                    .with_attr("min", iv.lo.to_string())
                    .with_attr("max", iv.hi.to_string()),
            );
        }
        for (v, iv) in &a.variable_effects {
            ae.push_child(
                Element::new("variable-effect")
                    .with_attr("variable", v)
                    .with_attr("min", iv.lo.to_string())
                    .with_attr("max", iv.hi.to_string()),
            );
        }
        activities.push_child(with_extensions(ae, &a.extensions));
    }
    root.push_child(activities);

    let mut toolbar = Element::new("toolbar");
    for t in &scenario.toolbar {
        toolbar.push_child(Element::new("tool").with_attr("id", t));
    }
    root.push_child(toolbar);

    let mut acts = Element::new("acts");
    for act in &scenario.acts {
        let mut ae = Element::new("act")
            .with_attr("id", &act.id)
            .with_attr("objective", &act.objective_id);
        for s in &act.scenes {
            ae.push_child(scene_element(s));
        }
        acts.push_child(with_extensions(ae, &act.extensions));
    }
    root.push_child(acts);
    root.children
        .extend(scenario.extensions.elements.iter().cloned().map(Node::Element));
    xml::write_document(&root).into_bytes()
}
