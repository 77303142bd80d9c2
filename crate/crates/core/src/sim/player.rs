use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use super::profile::{BehaviorProfile, KnowledgeState, ProfileError};
use crate::condition::{eval_condition, UnboundVariable, VariableEnv};
use crate::decimal::Decimal;
use crate::diagnostics::Diagnostic;
use crate::model::{Scenario, Scene, SceneNum};
use crate::quality::{validate, PathLimits};

/// A scenario that passed quality control without errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedScenario {
    scenario: Scenario,
    warnings: Vec<Diagnostic>,
}

impl ValidatedScenario {
    pub fn new(scenario: Scenario) -> Result<Self, SimError> {
        Self::with_limits(scenario, PathLimits::default())
    }

    pub fn with_limits(scenario: Scenario, limits: PathLimits) -> Result<Self, SimError> {
        let report = validate(&scenario, limits);
        if report.has_errors() {
            return Err(SimError::Invalid(report.diagnostics));
        }
        Ok(ValidatedScenario {
            scenario,
            warnings: report.diagnostics,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn warnings(&self) -> &[Diagnostic] {
        &self.warnings
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("scenario has {} quality-control error(s); refusing to simulate", .0.iter().filter(|d| d.is_error()).count())]
    Invalid(Vec<Diagnostic>),
    #[error("guard on scene {scene} reads unbound variable `{}`", .source.0)]
    Unbound { scene: SceneNum, source: UnboundVariable },
    #[error("scene {0} has no route out")]
    NoRoute(SceneNum),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("invalid simulation setting: {0}")]
    Setting(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct SimParams {
    /// Learning rate: k <- k + alpha * (1 - k) after each scored activity.
    pub alpha: f64,
    pub help_bonus: f64,
    /// Maximum number of scene visits per player.
    pub max_steps: usize,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            alpha: 0.3,
            help_bonus: 0.1,
            max_steps: 1000,
        }
    }
}

impl SimParams {
    pub fn check(&self) -> Result<(), SimError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(SimError::Setting(format!("alpha = {} is outside [0, 1]", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.help_bonus) {
            return Err(SimError::Setting(format!("help_bonus = {} is outside [0, 1]", self.help_bonus)));
        }
        if self.max_steps == 0 {
            return Err(SimError::Setting("max_steps must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Step {
    pub scene: SceneNum,
    pub duration_s: f64,
    pub scores: BTreeMap<String, Decimal>,
    pub tool_clicks: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlayTrace {
    pub scenes_visited: Vec<SceneNum>,
    pub steps: Vec<Step>,
    /// Variable values before the first step and after every step.
    pub env_history: Vec<BTreeMap<String, Decimal>>,
    /// Knowledge before the first step and after every step.
    pub knowledge_history: Vec<KnowledgeState>,
    /// Score per objective accumulated with the objective's score mechanism.
    pub accumulated: BTreeMap<String, Decimal>,
    pub truncated: bool,
}

impl PlayTrace {
    pub fn initial_knowledge(&self) -> &KnowledgeState {
        &self.knowledge_history[0]
    }

    pub fn final_knowledge(&self) -> &KnowledgeState {
        self.knowledge_history.last().expect("history holds the initial state")
    }

    /// Mean knowledge delta over the principal objectives (0 if there are none).
    pub fn gain(&self, s: &Scenario) -> f64 {
        let objectives: Vec<&str> = s
            .principal_objectives
            .iter()
            .filter(|o| s.objective(o).is_some())
            .map(String::as_str)
            .collect();
        if objectives.is_empty() {
            return 0.0;
        }
        let (k0, k1) = (self.initial_knowledge(), self.final_knowledge());
        objectives.iter().map(|o| k1.get(o) - k0.get(o)).sum::<f64>() / objectives.len() as f64
    }
}

/// Awarded score for an objective effect `[lo, hi]` at performance `p`:
/// `lo + round((hi - lo) * clamp(p, 0, 1))`, clamped to `[lo, hi]`.
pub fn award(lo: Decimal, hi: Decimal, p: f64) -> Decimal {
    let span = (hi - lo).to_f64();
    let raw = lo + Decimal::from_f64((span * p.clamp(0.0, 1.0)).round());
    raw.clamp_to(lo, hi)
}

fn env_snapshot(env: &VariableEnv) -> BTreeMap<String, Decimal> {
    env.iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Plays one learner through the scenario with a fresh RNG seeded from `seed`.
pub fn simulate_player(
    v: &ValidatedScenario,
    profile: &BehaviorProfile,
    k0: &KnowledgeState,
    params: &SimParams,
    seed: u64,
) -> Result<PlayTrace, SimError> {
    profile.check()?;
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run_player(v.scenario(), profile, k0.clone(), params, &mut rng)
}

// Per step the RNG is consumed in a fixed order: help draw, noise draw, then
// (only at a choice group) exploration draw and, if exploring, the pick.
pub(crate) fn run_player(
    s: &Scenario,
    profile: &BehaviorProfile,
    mut k: KnowledgeState,
    params: &SimParams,
    rng: &mut ChaCha8Rng,
) -> Result<PlayTrace, SimError> {
    let start = s.start_scene().ok_or_else(|| SimError::Setting("scenario has no start scene".into()))?;
    let mut env: VariableEnv = s.variables.iter().map(|d| (d.name.clone(), d.initial)).collect();
    let mut visits: BTreeMap<SceneNum, u32> = BTreeMap::new();
    let mut trace = PlayTrace {
        scenes_visited: Vec::new(),
        steps: Vec::new(),
        env_history: vec![env_snapshot(&env)],
        knowledge_history: vec![k.clone()],
        accumulated: BTreeMap::new(),
        truncated: false,
    };

    let mut scene: &Scene = start;
    loop {
        let retry = visits.get(&scene.num).copied().unwrap_or(0);
        *visits.entry(scene.num).or_default() += 1;
        trace.scenes_visited.push(scene.num);

        let help = rng.random::<f64>() < profile.help_use_prob;
        let eps = profile.noise_level * (2.0 * rng.random::<f64>() - 1.0);
        let mut step = Step {
            scene: scene.num,
            duration_s: 0.0,
            scores: BTreeMap::new(),
            tool_clicks: BTreeMap::new(),
        };
        if let Some(activity) = s.scene_activity(scene) {
            if help {
                step.tool_clicks.insert("help".into(), 1);
            }
            step.duration_s = activity.expected_duration_s.to_f64() * profile.speed_factor * (1.0 + if help { 0.5 } else { 0.0 });
            for (o, effect) in &activity.objective_effects {
                let ko = k.get(o);
                let p = ko
                    + if help { params.help_bonus } else { 0.0 }
                    + if retry > 0 { profile.retry_care_bonus } else { 0.0 }
                    + eps;
                let score = award(effect.lo, effect.hi, p);
                step.scores.insert(o.clone(), score);
                k.set(o, ko + params.alpha * (1.0 - ko));
                let mechanism = s.learner_profile.mechanism(o);
                let acc = mechanism.accumulate(trace.accumulated.get(o).copied(), score);
                trace.accumulated.insert(o.clone(), acc);
            }
            for decl in &s.variables {
                if decl.tracks.is_some() {
                    continue;
                }
                if let Some(effect) = activity.variable_effects.get(&decl.name) {
                    let delta = effect.midpoint().to_f64() + eps * effect.width().to_f64();
                    let current = env.get(&decl.name).unwrap_or(decl.initial);
                    let next = (current + Decimal::from_f64(delta)).clamp_to(decl.range.lo, decl.range.hi);
                    env.set(decl.name.clone(), next);
                }
            }
        }
        for decl in &s.variables {
            if let Some(o) = &decl.tracks {
                let value = trace.accumulated.get(o).copied().unwrap_or(decl.initial);
                env.set(decl.name.clone(), value.clamp_to(decl.range.lo, decl.range.hi));
            }
        }
        trace.steps.push(step);
        trace.env_history.push(env_snapshot(&env));
        trace.knowledge_history.push(k.clone());

        if scene.is_terminal() {
            break;
        }
        if trace.scenes_visited.len() >= params.max_steps {
            trace.truncated = true;
            break;
        }
        let next = route(scene, &env, &visits, profile, rng)?;
        scene = s.scene(next).ok_or(SimError::NoRoute(scene.num))?;
    }
    Ok(trace)
}

fn route(
    scene: &Scene,
    env: &VariableEnv,
    visits: &BTreeMap<SceneNum, u32>,
    profile: &BehaviorProfile,
    rng: &mut ChaCha8Rng,
) -> Result<SceneNum, SimError> {
    if !scene.choice_group.is_empty() {
        let explore = rng.random::<f64>() < profile.exploration_prob;
        let unvisited: Vec<SceneNum> = scene
            .choice_group
            .iter()
            .map(|c| c.target)
            .filter(|t| !visits.contains_key(t))
            .collect();
        if explore && !unvisited.is_empty() {
            return Ok(unvisited[rng.random_range(0..unvisited.len())]);
        }
        return Ok(scene.choice_group[0].target);
    }
    for t in &scene.transitions {
        match &t.guard {
            None => return Ok(t.target),
            Some(g) => {
                let pass = eval_condition(g, env).map_err(|source| SimError::Unbound {
                    scene: scene.num,
                    source,
                })?;
                if pass {
                    return Ok(t.target);
                }
            }
        }
    }
    Err(SimError::NoRoute(scene.num))
}
