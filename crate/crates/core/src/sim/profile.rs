use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorProfile {
    pub name: String,
    pub exploration_prob: f64,
    pub retry_care_bonus: f64,
    pub help_use_prob: f64,
    pub speed_factor: f64,
    pub noise_level: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("unknown profile preset `{0}`")]
    UnknownPreset(String),
    #[error("profile `{profile}`: {field} = {value} is outside {range}")]
    OutOfRange {
        profile: String,
        field: &'static str,
        value: f64,
        range: &'static str,
    },
}

pub const PRESETS: &[&str] = &["curious", "prudent", "hasty", "confident"];

impl BehaviorProfile {
    pub fn preset(name: &str) -> Result<Self, ProfileError> {
        let (exploration_prob, help_use_prob, retry_care_bonus, speed_factor, noise_level) = match name {
            "curious" => (0.9, 0.5, 0.0, 1.0, 0.1),
            "prudent" => (0.3, 0.9, 0.2, 1.3, 0.05),
            "hasty" => (0.2, 0.1, 0.0, 0.6, 0.3),
            "confident" => (0.5, 0.1, 0.0, 0.9, 0.15),
            other => return Err(ProfileError::UnknownPreset(other.to_string())),
        };
        Ok(BehaviorProfile {
            name: name.to_string(),
            exploration_prob,
            retry_care_bonus,
            help_use_prob,
            speed_factor,
            noise_level,
        })
    }

    /// A deterministic learner: never explores, never asks for help, no noise.
    pub fn steady(name: impl Into<String>) -> Self {
        BehaviorProfile {
            name: name.into(),
            exploration_prob: 0.0,
            retry_care_bonus: 0.0,
            help_use_prob: 0.0,
            speed_factor: 1.0,
            noise_level: 0.0,
        }
    }

    pub fn check(&self) -> Result<(), ProfileError> {
        let fields: [(&'static str, f64, bool, &'static str); 5] = [
            ("exploration_prob", self.exploration_prob, (0.0..=1.0).contains(&self.exploration_prob), "[0, 1]"),
            ("retry_care_bonus", self.retry_care_bonus, (0.0..=0.5).contains(&self.retry_care_bonus), "[0, 0.5]"),
            ("help_use_prob", self.help_use_prob, (0.0..=1.0).contains(&self.help_use_prob), "[0, 1]"),
            ("speed_factor", self.speed_factor, self.speed_factor > 0.0 && self.speed_factor.is_finite(), "(0, inf)"),
            ("noise_level", self.noise_level, (0.0..=0.5).contains(&self.noise_level), "[0, 0.5]"),
        ];
        for (field, value, ok, range) in fields {
            if !ok {
                return Err(ProfileError::OutOfRange {
                    profile: self.name.clone(),
                    field,
                    value,
                    range,
                });
            }
        }
        Ok(())
    }
}

/// Knowledge level per objective, each clamped to [0, 1].
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct KnowledgeState(BTreeMap<String, f64>);

impl KnowledgeState {
    pub fn uniform<'a>(objectives: impl IntoIterator<Item = &'a str>, level: f64) -> Self {
        let mut k = KnowledgeState::default();
        for o in objectives {
            k.set(o, level);
        }
        k
    }

    pub fn get(&self, objective: &str) -> f64 {
        self.0.get(objective).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, objective: &str, level: f64) {
        let level = if level.is_nan() { 0.0 } else { level.clamp(0.0, 1.0) };
        self.0.insert(objective.to_string(), level);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Initial knowledge of a cohort group, applied to every objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnowledgeDist {
    Point(f64),
    /// Each player draws one of the listed levels with equal probability.
    Uniform(Vec<f64>),
}

impl KnowledgeDist {
    pub fn check(&self) -> Result<(), String> {
        let levels: &[f64] = match self {
            KnowledgeDist::Point(v) => std::slice::from_ref(v),
            KnowledgeDist::Uniform(v) if v.is_empty() => return Err("uniform knowledge needs at least one level".into()),
            KnowledgeDist::Uniform(v) => v,
        };
        match levels.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            Some(l) => Err(format!("knowledge level {l} is outside [0, 1]")),
            None => Ok(()),
        }
    }
}

impl fmt::Display for KnowledgeDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KnowledgeDist::Point(v) => write!(f, "{v}"),
            KnowledgeDist::Uniform(v) => {
                let parts: Vec<String> = v.iter().map(ToString::to_string).collect();
                write!(f, "uniform{{{}}}", parts.join(", "))
            }
        }
    }
}
