//! Reading and writing storyboard files in both dialects.

mod canonical;
mod legacy;

pub use canonical::{parse_scenario, serialize_scenario, ScenarioParseError};
pub use legacy::{
    export_legacy, parse_legacy, to_scenario, ConversionError, LegacyError, LegacyScene,
    LegacyStoryboard, ScenarioDefaults,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{normalize, Code, Diagnostic};
use crate::model::Scenario;
use crate::quality::check_structure;
use crate::xml::{self, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    /// `<scenes>` storyboard
    Legacy,
    /// `<scenario>` document
    Canonical,
}

impl std::str::FromStr for SourceFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "legacy" => Ok(SourceFormat::Legacy),
            "canonical" => Ok(SourceFormat::Canonical),
            other => Err(format!("unknown format `{other}` (expected legacy or canonical)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoadError {
    #[error(transparent)]
    Legacy(#[from] LegacyError),
    #[error(transparent)]
    Canonical(#[from] ScenarioParseError),
    #[error("unrecognized document: root element <{0}> is neither <scenes> nor <scenario>")]
    UnknownRoot(String),
    #[error(transparent)]
    Xml(#[from] xml::XmlError),
}

impl LoadError {
    /// Renders the error as a diagnostic so every surface can report it the
    /// same way.
    pub fn to_diagnostic(&self) -> Diagnostic {
        let code = match self {
            LoadError::Legacy(LegacyError::ConditionWithoutTarget { .. }) => Code::MissingFallback,
            LoadError::Legacy(LegacyError::DuplicateIndex { .. }) => Code::DuplicateDeclaration,
            _ => Code::Unreadable,
        };
        Diagnostic::global(code, self.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub format: SourceFormat,
    /// `None` when a legacy storyboard has no usable start scene.
    pub scenario: Option<Scenario>,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn detect_format(bytes: &[u8]) -> Result<SourceFormat, LoadError> {
    let doc = xml::parse(bytes, Mode::Lenient)?;
    match doc.root.name.as_str() {
        "scenes" => Ok(SourceFormat::Legacy),
        "scenario" => Ok(SourceFormat::Canonical),
        other => Err(LoadError::UnknownRoot(other.to_string())),
    }
}

/// Loads either dialect, lifting legacy storyboards with `defaults`.
pub fn load(bytes: &[u8], defaults: &ScenarioDefaults) -> Result<Loaded, LoadError> {
    match detect_format(bytes)? {
        SourceFormat::Canonical => {
            let (scenario, diagnostics) = parse_scenario(bytes)?;
            Ok(Loaded {
                format: SourceFormat::Canonical,
                scenario: Some(scenario),
                diagnostics,
            })
        }
        SourceFormat::Legacy => {
            let (board, parse_diags) = parse_legacy(bytes)?;
            let (scenario, mut diagnostics) = match to_scenario(&board, defaults) {
                Ok(s) => {
                    // Graph-level findings are recomputed on the lifted scenario.
                    let mut d: Vec<Diagnostic> = parse_diags
                        .into_iter()
                        .filter(|d| matches!(d.code, Code::UnknownMarkup | Code::RecoveredMarkup))
                        .collect();
                    d.extend(check_structure(&s));
                    (Some(s), d)
                }
                Err(_) => (None, parse_diags),
            };
            normalize(&mut diagnostics);
            Ok(Loaded {
                format: SourceFormat::Legacy,
                scenario,
                diagnostics,
            })
        }
    }
}
