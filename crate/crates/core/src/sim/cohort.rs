use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::player::{run_player, SimError, SimParams, ValidatedScenario};
use super::profile::{BehaviorProfile, KnowledgeDist, KnowledgeState};
use crate::decimal::Decimal;
use crate::model::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortGroup {
    pub profile: BehaviorProfile,
    pub k0: KnowledgeDist,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Cohort {
    pub seed: u64,
    pub params: SimParams,
    pub groups: Vec<CohortGroup>,
}

impl Cohort {
    pub fn n_players(&self) -> usize {
        self.groups.iter().map(|g| g.count).sum()
    }

    /// The group of every player, in player order.
    fn players(&self) -> impl Iterator<Item = &CohortGroup> {
        self.groups.iter().flat_map(|g| std::iter::repeat_n(g, g.count))
    }
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of player `i` (0-based, cohort order): `splitmix64(seed + (i + 1) * 0x9E3779B97F4A7C15)`
/// with wrapping arithmetic.
pub fn child_seed(seed: u64, i: u64) -> u64 {
    splitmix64(seed.wrapping_add(i.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GainStats {
    pub mean: Decimal,
    pub stddev: Decimal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Attainment {
    pub threshold: Decimal,
    pub attained: usize,
    pub rate: Decimal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SimulationReport {
    pub n_players: usize,
    /// Absent when no player was simulated.
    pub pedagogical_gain: Option<GainStats>,
    pub attainment: BTreeMap<String, Attainment>,
    /// Visited scene sequence (scene numbers joined by `>`) to player count.
    pub path_frequency: BTreeMap<String, usize>,
    pub truncation_count: usize,
    pub seed: u64,
}

struct Outcome {
    path: String,
    truncated: bool,
    gain: f64,
    accumulated: BTreeMap<String, Decimal>,
}

fn play(s: &Scenario, cohort: &Cohort, i: usize, group: &CohortGroup) -> Result<Outcome, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(child_seed(cohort.seed, i as u64));
    let level = match &group.k0 {
        KnowledgeDist::Point(v) => *v,
        KnowledgeDist::Uniform(levels) => levels[rng.random_range(0..levels.len())],
    };
    let k0 = KnowledgeState::uniform(s.objectives.iter().map(|o| o.id.as_str()), level);
    let trace = run_player(s, &group.profile, k0, &cohort.params, &mut rng)?;
    let path: Vec<String> = trace.scenes_visited.iter().map(ToString::to_string).collect();
    Ok(Outcome {
        path: path.join(">"),
        truncated: trace.truncated,
        gain: trace.gain(s),
        accumulated: trace.accumulated,
    })
}

/// Simulates every player of the cohort on the current rayon pool.
pub fn simulate_cohort(v: &ValidatedScenario, cohort: &Cohort) -> Result<SimulationReport, SimError> {
    cohort.params.check()?;
    for g in &cohort.groups {
        g.profile.check()?;
        g.k0.check().map_err(SimError::Setting)?;
    }
    let s = v.scenario();
    let players: Vec<(usize, &CohortGroup)> = cohort.players().enumerate().collect();
    let outcomes: Vec<Outcome> = players
        .par_iter()
        .map(|&(i, g)| play(s, cohort, i, g))
        .collect::<Result<_, _>>()?;
    Ok(aggregate(s, cohort.seed, &outcomes))
}

/// Same as [`simulate_cohort`] on a dedicated pool of `threads` workers.
pub fn simulate_cohort_with_threads(
    v: &ValidatedScenario,
    cohort: &Cohort,
    threads: usize,
) -> Result<SimulationReport, SimError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| SimError::Setting(e.to_string()))?;
    pool.install(|| simulate_cohort(v, cohort))
}

fn ratio(num: usize, den: usize) -> Decimal {
    // Exact to six fractional digits, rounded half up.
    let scaled = (num as u128 * 1_000_000 + den as u128 / 2) / den as u128;
    Decimal::from_raw(scaled as i64)
}

fn aggregate(s: &Scenario, seed: u64, outcomes: &[Outcome]) -> SimulationReport {
    let n = outcomes.len();
    let mut path_frequency: BTreeMap<String, usize> = BTreeMap::new();
    for o in outcomes {
        *path_frequency.entry(o.path.clone()).or_default() += 1;
    }
    let attainment = s
        .objectives
        .iter()
        .map(|obj| {
            let attained = outcomes
                .iter()
                .filter(|o| o.accumulated.get(&obj.id).copied().unwrap_or_default() >= obj.threshold)
                .count();
            let rate = if n == 0 { Decimal::ZERO } else { ratio(attained, n) };
            (
                obj.id.clone(),
                Attainment {
                    threshold: obj.threshold,
                    attained,
                    rate,
                },
            )
        })
        .collect();
    let pedagogical_gain = (n > 0).then(|| {
        let mean = outcomes.iter().map(|o| o.gain).sum::<f64>() / n as f64;
        let var = outcomes.iter().map(|o| (o.gain - mean).powi(2)).sum::<f64>() / n as f64;
        GainStats {
            mean: Decimal::from_f64(mean),
            stddev: Decimal::from_f64(var.sqrt()),
        }
    });
    SimulationReport {
        n_players: n,
        pedagogical_gain,
        attainment,
        path_frequency,
        truncation_count: outcomes.iter().filter(|o| o.truncated).count(),
        seed,
    }
}

#[derive(Debug, Error)]
pub enum CohortError {
    #[error("cohort line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("cohort line {line}: {message}")]
    Invalid { line: usize, message: String },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SettingsLine {
    seed: Option<u64>,
    max_steps: Option<usize>,
    alpha: Option<f64>,
    help_bonus: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupLine {
    profile: String,
    count: usize,
    k0: KnowledgeDist,
    exploration_prob: Option<f64>,
    retry_care_bonus: Option<f64>,
    help_use_prob: Option<f64>,
    speed_factor: Option<f64>,
    noise_level: Option<f64>,
}

impl GroupLine {
    fn into_group(self) -> Result<CohortGroup, String> {
        let overrides = [
            self.exploration_prob,
            self.retry_care_bonus,
            self.help_use_prob,
            self.speed_factor,
            self.noise_level,
        ];
        let mut profile = match BehaviorProfile::preset(&self.profile) {
            Ok(p) => p,
            // A custom profile must set every parameter.
            Err(_) if overrides.iter().all(Option::is_some) => BehaviorProfile::steady(self.profile.clone()),
            Err(e) => return Err(format!("{e}; custom profiles must set all five parameters")),
        };
        if let Some(v) = self.exploration_prob {
            profile.exploration_prob = v;
        }
        if let Some(v) = self.retry_care_bonus {
            profile.retry_care_bonus = v;
        }
        if let Some(v) = self.help_use_prob {
            profile.help_use_prob = v;
        }
        if let Some(v) = self.speed_factor {
            profile.speed_factor = v;
        }
        if let Some(v) = self.noise_level {
            profile.noise_level = v;
        }
        profile.check().map_err(|e| e.to_string())?;
        self.k0.check()?;
        Ok(CohortGroup {
            profile,
            k0: self.k0,
            count: self.count,
        })
    }
}

/// Parses a JSON-lines cohort file: lines with a `count` key are groups, any
/// other object sets `seed`, `max_steps`, `alpha` or `help_bonus`. Blank lines
/// and lines starting with `#` are skipped.
pub fn parse_cohort(text: &str) -> Result<Cohort, CohortError> {
    let mut cohort = Cohort::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(trimmed).map_err(|source| CohortError::Json { line, source })?;
        let is_group = value.get("count").is_some();
        if is_group {
            let g: GroupLine = serde_json::from_value(value).map_err(|source| CohortError::Json { line, source })?;
            let group = g.into_group().map_err(|message| CohortError::Invalid { line, message })?;
            cohort.groups.push(group);
        } else {
            let s: SettingsLine = serde_json::from_value(value).map_err(|source| CohortError::Json { line, source })?;
            if let Some(v) = s.seed {
                cohort.seed = v;
            }
            if let Some(v) = s.max_steps {
                cohort.params.max_steps = v;
            }
            if let Some(v) = s.alpha {
                cohort.params.alpha = v;
            }
            if let Some(v) = s.help_bonus {
                cohort.params.help_bonus = v;
            }
            cohort
                .params
                .check()
                .map_err(|e| CohortError::Invalid { line, message: e.to_string() })?;
        }
    }
    Ok(cohort)
}
