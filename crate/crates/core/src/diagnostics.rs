//! Diagnostic records and the registry of stable codes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::SceneNum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

macro_rules! codes {
    ($($variant:ident => ($text:literal, $severity:ident, $summary:literal)),+ $(,)?) => {
        /// Registered diagnostic codes. The letter gives the severity.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum Code {
            $($variant),+
        }

        impl Code {
            pub const ALL: &'static [Code] = &[$(Code::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $(Code::$variant => $text),+ }
            }

            pub fn severity(self) -> Severity {
                match self { $(Code::$variant => Severity::$severity),+ }
            }

            pub fn summary(self) -> &'static str {
                match self { $(Code::$variant => $summary),+ }
            }
        }

        impl FromStr for Code {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($text => Ok(Code::$variant),)+
                    other => Err(format!("unregistered diagnostic code `{other}`")),
                }
            }
        }
    };
}

codes! {
    DuplicateScene => ("E001", Error, "duplicate scene num"),
    DanglingTarget => ("E002", Error, "transition targets an undefined scene"),
    NoStart => ("E003", Error, "no start scene (prec=0)"),
    MultipleStarts => ("E004", Error, "multiple start scenes"),
    MissingFallback => ("E005", Error, "missing or misplaced unguarded fallback"),
    UnreachableAct => ("E006", Error, "no scene of an act is reachable"),
    UnreachableScene => ("W006", Warning, "unreachable scene"),
    DeadEnd => ("E007", Error, "dead-end: no terminal scene reachable"),
    UndeclaredVariable => ("E008", Error, "guard uses an undeclared variable"),
    UnsatisfiableGuard => ("E009", Error, "guard can never be true"),
    ShadowedGuard => ("W010", Warning, "guard shadowed by earlier guards"),
    CoverageImpossible => ("E011", Error, "objective cannot be attained on some path"),
    PrecInconsistent => ("W012", Warning, "prec is not an actual predecessor"),
    DanglingActivity => ("E013", Error, "scene references an undefined activity"),
    UnknownMarkup => ("W014", Warning, "unknown attribute or element preserved"),
    CoverageNotGuaranteed => ("W015", Warning, "objective attainment not guaranteed on some path"),
    MixedRouting => ("E016", Error, "scene mixes guarded transitions and player choices"),
    UndeclaredReference => ("E017", Error, "reference to an undeclared objective or variable"),
    DuplicateDeclaration => ("E018", Error, "duplicate declaration"),
    PathsTruncated => ("W019", Warning, "path enumeration truncated; coverage is partial"),
    RecoveredMarkup => ("W020", Warning, "malformed markup recovered"),
    Unreadable => ("E021", Error, "document cannot be read as a storyboard"),
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Code {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Code {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: Code,
    pub severity: Severity,
    pub scene: Option<SceneNum>,
    pub message: String,
}

impl Diagnostic {
    pub fn new(code: Code, scene: Option<SceneNum>, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            severity: code.severity(),
            scene,
            message: message.into(),
        }
    }

    pub fn at(code: Code, scene: SceneNum, message: impl Into<String>) -> Self {
        Self::new(code, Some(scene), message)
    }

    pub fn global(code: Code, message: impl Into<String>) -> Self {
        Self::new(code, None, message)
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("diagnostic serializes")
    }

    fn sort_key(&self) -> (&'static str, Option<SceneNum>, &str) {
        (self.code.as_str(), self.scene, &self.message)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match self.scene {
            Some(n) => write!(f, "{sev}[{}] scene {n}: {}", self.code, self.message),
            None => write!(f, "{sev}[{}]: {}", self.code, self.message),
        }
    }
}

/// Sorts by code, then scene, then message, and drops exact duplicates.
pub fn normalize(diags: &mut Vec<Diagnostic>) {
    diags.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    diags.dedup();
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

pub fn to_json_lines(diags: &[Diagnostic]) -> String {
    let mut out = String::new();
    for d in diags {
        out.push_str(&d.to_json_line());
        out.push('\n');
    }
    out
}
