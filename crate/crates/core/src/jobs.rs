//! Job runners shared by the command line and the HTTP service, so both
//! surfaces produce the same records for the same input.

use std::fmt::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::diagnostics::{has_errors, normalize, Diagnostic, Severity};
use crate::quality::{enumerate_paths, validate, PathLimits, PathReport};
use crate::sim::{gain_summary_records, gain_summary_text, simulate_cohort, Cohort, SimError, SimulationReport, ValidatedScenario};
use crate::storyboard::{export_legacy, load, serialize_scenario, ConversionError, Loaded, ScenarioDefaults, SourceFormat};

/// Version of the JSON records emitted by jobs and the service.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JobKind {
    Validate,
    Simulate,
    Paths,
    Convert,
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_WARNINGS: u8 = 1;
pub const EXIT_ERRORS: u8 = 2;
pub const EXIT_USAGE: u8 = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JobResult {
    pub kind: JobKind,
    pub exit_code: u8,
    pub diagnostics: Vec<Diagnostic>,
    /// Why the job stopped early (refusal, usage problem, failed conversion).
    pub message: Option<String>,
    pub report: Option<SimulationReport>,
    pub paths: Option<PathReport>,
    pub document: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct JobOptions {
    pub limits: PathLimits,
    pub defaults: ScenarioDefaults,
}

fn exit_for(diagnostics: &[Diagnostic]) -> u8 {
    if has_errors(diagnostics) {
        EXIT_ERRORS
    } else if diagnostics.is_empty() {
        EXIT_OK
    } else {
        EXIT_WARNINGS
    }
}

impl JobResult {
    fn new(kind: JobKind, diagnostics: Vec<Diagnostic>) -> Self {
        JobResult {
            kind,
            exit_code: exit_for(&diagnostics),
            diagnostics,
            message: None,
            report: None,
            paths: None,
            document: None,
        }
    }

    pub fn usage(kind: JobKind, message: impl Into<String>) -> Self {
        JobResult {
            exit_code: EXIT_USAGE,
            message: Some(message.into()),
            ..JobResult::new(kind, Vec::new())
        }
    }

    fn refused(kind: JobKind, diagnostics: Vec<Diagnostic>, message: impl Into<String>) -> Self {
        JobResult {
            exit_code: EXIT_ERRORS,
            message: Some(message.into()),
            ..JobResult::new(kind, diagnostics)
        }
    }

    /// JSON records, one per output line: diagnostics first, then the
    /// kind-specific records, then a `message` record if any.
    pub fn records(&self) -> Vec<Value> {
        let mut out: Vec<Value> = self
            .diagnostics
            .iter()
            .map(|d| {
                json!({
                    "record": "diagnostic",
                    "code": d.code,
                    "severity": d.severity,
                    "scene": d.scene,
                    "message": d.message,
                })
            })
            .collect();
        if let Some(r) = &self.report {
            out.extend(gain_summary_records(r));
        }
        if let Some(p) = &self.paths {
            for (i, path) in p.paths.iter().enumerate() {
                out.push(json!({
                    "record": "path",
                    "scenes": path,
                    "scores": p.scores.get(i),
                }));
            }
            out.push(json!({"record": "paths", "count": p.paths.len(), "truncated": p.truncated}));
        }
        if let Some(doc) = &self.document {
            out.push(json!({"record": "document", "content": doc}));
        }
        if let Some(m) = &self.message {
            out.push(json!({"record": "message", "message": m}));
        }
        out
    }

    pub fn json_lines(&self) -> String {
        self.records().iter().map(|v| format!("{v}\n")).collect()
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        for d in &self.diagnostics {
            let _ = writeln!(out, "{d}");
        }
        if let Some(r) = &self.report {
            out.push_str(&gain_summary_text(r));
        }
        if let Some(p) = &self.paths {
            for (i, path) in p.paths.iter().enumerate() {
                let scenes: Vec<String> = path.iter().map(ToString::to_string).collect();
                let _ = write!(out, "{}", scenes.join(" > "));
                if let Some(scores) = p.scores.get(i) {
                    for (o, iv) in scores {
                        let _ = write!(out, "  {o}=[{}, {}]", iv.lo, iv.hi);
                    }
                }
                out.push('\n');
            }
            let _ = writeln!(
                out,
                "{} path(s){}",
                p.paths.len(),
                if p.truncated { ", truncated" } else { "" }
            );
        }
        if let Some(doc) = &self.document {
            out.push_str(doc);
        }
        if let Some(m) = &self.message {
            let _ = writeln!(out, "{m}");
        }
        if self.kind == JobKind::Validate && self.message.is_none() {
            let errors = self.diagnostics.iter().filter(|d| d.severity == Severity::Error).count();
            let warnings = self.diagnostics.len() - errors;
            if self.diagnostics.is_empty() {
                out.push_str("no issues found\n");
            } else {
                let _ = writeln!(out, "{errors} error(s), {warnings} warning(s)");
            }
        }
        out
    }
}

/// Loads a document; on failure returns the finished job.
#[allow(clippy::result_large_err)]
fn load_or_fail(kind: JobKind, bytes: &[u8], opts: &JobOptions) -> Result<Loaded, JobResult> {
    match load(bytes, &opts.defaults) {
        Ok(l) => Ok(l),
        Err(e) => Err(JobResult::new(kind, vec![e.to_diagnostic()])),
    }
}

fn merged(mut a: Vec<Diagnostic>, b: Vec<Diagnostic>) -> Vec<Diagnostic> {
    a.extend(b);
    normalize(&mut a);
    a
}

pub fn run_validate(bytes: &[u8], opts: &JobOptions) -> JobResult {
    let loaded = match load_or_fail(JobKind::Validate, bytes, opts) {
        Ok(l) => l,
        Err(job) => return job,
    };
    let diagnostics = match &loaded.scenario {
        Some(s) => merged(loaded.diagnostics, validate(s, opts.limits).diagnostics),
        None => loaded.diagnostics,
    };
    JobResult::new(JobKind::Validate, diagnostics)
}

pub fn run_paths(bytes: &[u8], opts: &JobOptions) -> JobResult {
    let loaded = match load_or_fail(JobKind::Paths, bytes, opts) {
        Ok(l) => l,
        Err(job) => return job,
    };
    let Some(s) = &loaded.scenario else {
        return JobResult::refused(JobKind::Paths, loaded.diagnostics, "storyboard has no usable start scene");
    };
    let v = validate(s, opts.limits);
    let diagnostics = merged(loaded.diagnostics, v.diagnostics);
    let paths = match (v.paths, &v.graph) {
        (Some(p), _) => p,
        (None, Some(g)) => {
            let mut p = enumerate_paths(g, opts.limits);
            p.score(s);
            p
        }
        (None, None) => return JobResult::refused(JobKind::Paths, diagnostics, "scene graph is malformed; no paths enumerated"),
    };
    JobResult {
        paths: Some(paths),
        ..JobResult::new(JobKind::Paths, diagnostics)
    }
}

pub fn run_simulate(bytes: &[u8], cohort: &Cohort, opts: &JobOptions) -> JobResult {
    let loaded = match load_or_fail(JobKind::Simulate, bytes, opts) {
        Ok(l) => l,
        Err(job) => return job,
    };
    let Some(s) = loaded.scenario else {
        return JobResult::refused(JobKind::Simulate, loaded.diagnostics, "storyboard has no usable start scene");
    };
    let v = match ValidatedScenario::with_limits(s, opts.limits) {
        Ok(v) => v,
        Err(SimError::Invalid(d)) => {
            return JobResult::refused(
                JobKind::Simulate,
                merged(loaded.diagnostics, d),
                "scenario has errors; simulation refused",
            )
        }
        Err(e) => return JobResult::usage(JobKind::Simulate, e.to_string()),
    };
    let diagnostics = merged(loaded.diagnostics, v.warnings().to_vec());
    match simulate_cohort(&v, cohort) {
        Ok(report) => JobResult {
            report: Some(report),
            ..JobResult::new(JobKind::Simulate, diagnostics)
        },
        Err(e @ (SimError::Setting(_) | SimError::Profile(_))) => JobResult::usage(JobKind::Simulate, e.to_string()),
        Err(e) => JobResult::refused(JobKind::Simulate, diagnostics, e.to_string()),
    }
}

/// Converts between dialects. `from`, when given, must match the detected
/// dialect. Diagnostics of the source document are reported alongside the
/// converted text.
pub fn run_convert(bytes: &[u8], from: Option<SourceFormat>, to: SourceFormat, opts: &JobOptions) -> JobResult {
    let loaded = match load_or_fail(JobKind::Convert, bytes, opts) {
        Ok(l) => l,
        Err(job) => return job,
    };
    if let Some(expected) = from {
        if expected != loaded.format {
            return JobResult::usage(
                JobKind::Convert,
                format!("--from {} given but the document is {}", format_name(expected), format_name(loaded.format)),
            );
        }
    }
    let Some(s) = &loaded.scenario else {
        return JobResult::refused(JobKind::Convert, loaded.diagnostics, "storyboard has no usable start scene");
    };
    let document = match to {
        SourceFormat::Canonical => serialize_scenario(s),
        SourceFormat::Legacy => match export_legacy(s) {
            Ok(d) => d,
            Err(e @ ConversionError::NotRepresentable(_)) | Err(e @ ConversionError::InvalidStart(_)) => {
                return JobResult::refused(JobKind::Convert, loaded.diagnostics, e.to_string())
            }
        },
    };
    JobResult {
        document: Some(String::from_utf8(document).expect("writers emit UTF-8")),
        ..JobResult::new(JobKind::Convert, loaded.diagnostics)
    }
}

fn format_name(f: SourceFormat) -> &'static str {
    match f {
        SourceFormat::Legacy => "legacy",
        SourceFormat::Canonical => "canonical",
    }
}
