//! Scenario domain types: acts, scenes, transitions, objectives, variables
//! and the activity catalog referenced by scenes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::condition::{ConditionExpr, Interval};
use crate::decimal::Decimal;
use crate::xml::Element;

pub type SceneNum = u32;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scenario {
    pub id: String,
    pub title: String,
    pub principal_objectives: Vec<String>,
    pub objectives: Vec<PedagogicalObjective>,
    pub variables: Vec<VariableDecl>,
    pub learner_profile: LearnerProfileSpec,
    pub activities: BTreeMap<String, ActivitySpec>,
    pub toolbar: Vec<String>,
    pub acts: Vec<Act>,
    pub extensions: Extensions,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Act {
    pub id: String,
    pub objective_id: String,
    pub scenes: Vec<Scene>,
    pub extensions: Extensions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub num: SceneNum,
    /// Declared predecessor; `0` marks the start scene, other values are advisory.
    pub prec: i64,
    pub asset_path: String,
    pub description: String,
    pub activity_id: Option<String>,
    pub moment_tags: BTreeSet<Moment>,
    /// Guarded transitions in priority order followed by the unguarded fallback.
    pub transitions: Vec<Transition>,
    /// Unguarded player choices.
    pub choice_group: Vec<Transition>,
    pub extensions: Extensions,
}

impl Scene {
    pub fn new(num: SceneNum, prec: i64) -> Self {
        Scene {
            num,
            prec,
            asset_path: String::new(),
            description: String::new(),
            activity_id: None,
            moment_tags: BTreeSet::from([Moment::Learning]),
            transitions: Vec::new(),
            choice_group: Vec::new(),
            extensions: Extensions::default(),
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.transitions.is_empty() && self.choice_group.is_empty()
    }

    pub fn is_start(&self) -> bool {
        self.prec == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub guard: Option<ConditionExpr>,
    pub target: SceneNum,
}

impl Transition {
    pub fn guarded(guard: ConditionExpr, target: SceneNum) -> Self {
        Transition {
            guard: Some(guard),
            target,
        }
    }

    pub fn fallback(target: SceneNum) -> Self {
        Transition { guard: None, target }
    }
}

/// Layer of the global scenario a scene belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Moment {
    Learning,
    Entertaining,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableDecl {
    pub name: String,
    pub initial: Decimal,
    pub range: Interval,
    /// When set, the variable mirrors the accumulated score of this objective.
    pub tracks: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PedagogicalObjective {
    pub id: String,
    pub name: String,
    pub threshold: Decimal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivitySpec {
    pub id: String,
    pub grain: Grain,
    pub expected_duration_s: Decimal,
    pub objective_effects: BTreeMap<String, Interval>,
    pub variable_effects: BTreeMap<String, Interval>,
    pub extensions: Extensions,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LearnerProfileSpec {
    pub objectives: Vec<String>,
    pub score_mechanism: BTreeMap<String, ScoreMechanism>,
    pub indicators: BTreeSet<Indicator>,
}

impl LearnerProfileSpec {
    pub fn mechanism(&self, objective: &str) -> ScoreMechanism {
        self.score_mechanism.get(objective).copied().unwrap_or_default()
    }
}

/// Unknown attributes and child elements kept verbatim for round trips.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Extensions {
    pub attrs: Vec<(String, String)>,
    pub elements: Vec<Element>,
}

impl Extensions {
    pub fn is_empty(&self) -> bool {
        self.attrs.is_empty() && self.elements.is_empty()
    }
}

macro_rules! keyword_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!(
                        "`{other}` is not one of: {}",
                        [$($text),+].join(", ")
                    )),
                }
            }
        }
    };
}
pub(crate) use keyword_enum;

keyword_enum!(
    /// Size class of an activity. Flat: grains do not nest.
    Grain {
        MicroActivity => "micro-activity",
        Activity => "activity",
        Module => "module",
    }
);

keyword_enum!(ScoreMechanism {
    Sum => "sum",
    Max => "max",
    Last => "last",
});

#[allow(clippy::derivable_impls)]
impl Default for ScoreMechanism {
    fn default() -> Self {
        ScoreMechanism::Sum
    }
}

keyword_enum!(Indicator {
    PathFollowed => "path_followed",
    ActionSpeed => "action_speed",
    ClickCounts => "click_counts",
});

impl FromStr for Moment {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "learning" => Ok(Moment::Learning),
            "entertaining" => Ok(Moment::Entertaining),
            other => Err(format!("`{other}` is not one of: learning, entertaining")),
        }
    }
}

impl fmt::Display for Moment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Moment::Learning => "learning",
            Moment::Entertaining => "entertaining",
        })
    }
}

impl ScoreMechanism {
    /// Folds a newly awarded score into the running total.
    pub fn accumulate(self, current: Option<Decimal>, awarded: Decimal) -> Decimal {
        match (self, current) {
            (_, None) | (ScoreMechanism::Last, _) => awarded,
            (ScoreMechanism::Sum, Some(c)) => c + awarded,
            (ScoreMechanism::Max, Some(c)) => c.max(awarded),
        }
    }
}

impl Scenario {
    pub fn scenes(&self) -> impl Iterator<Item = &Scene> {
        self.acts.iter().flat_map(|a| a.scenes.iter())
    }

    pub fn scene(&self, num: SceneNum) -> Option<&Scene> {
        self.scenes().find(|s| s.num == num)
    }

    /// The unique scene with `prec == 0`, if exactly one exists.
    pub fn start_scene(&self) -> Option<&Scene> {
        let mut starts = self.scenes().filter(|s| s.is_start());
        match (starts.next(), starts.next()) {
            (Some(s), None) => Some(s),
            _ => None,
        }
    }

    pub fn objective(&self, id: &str) -> Option<&PedagogicalObjective> {
        self.objectives.iter().find(|o| o.id == id)
    }

    pub fn variable(&self, name: &str) -> Option<&VariableDecl> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn variable_ranges(&self) -> BTreeMap<String, Interval> {
        self.variables
            .iter()
            .map(|v| (v.name.clone(), v.range))
            .collect()
    }

    pub fn scene_activity(&self, scene: &Scene) -> Option<&ActivitySpec> {
        scene
            .activity_id
            .as_deref()
            .and_then(|id| self.activities.get(id))
    }
}
