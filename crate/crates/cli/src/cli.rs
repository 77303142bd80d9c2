use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use sgforge_core::jobs::{self, JobKind, JobOptions, JobResult, EXIT_OK, EXIT_USAGE};
use sgforge_core::quality::PathLimits;
use sgforge_core::sim::parse_cohort;
use sgforge_core::storyboard::SourceFormat;

#[derive(Debug, Parser)]
#[command(name = "sgforge", version, about = "Storyboard toolchain for serious games")]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Text, global = true)]
    pub format: OutputFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Dialect {
    Legacy,
    Canonical,
}

impl From<Dialect> for SourceFormat {
    fn from(d: Dialect) -> Self {
        match d {
            Dialect::Legacy => SourceFormat::Legacy,
            Dialect::Canonical => SourceFormat::Canonical,
        }
    }
}

#[derive(Debug, Args)]
pub struct LimitArgs {
    /// Stop path enumeration after this many paths.
    #[arg(long, default_value_t = PathLimits::default().max_paths)]
    pub max_paths: usize,
    /// How often a path may re-enter a scene.
    #[arg(long, default_value_t = PathLimits::default().max_cycle_unrolls)]
    pub max_cycle_unrolls: usize,
}

impl LimitArgs {
    fn options(&self) -> JobOptions {
        JobOptions {
            limits: PathLimits {
                max_paths: self.max_paths,
                max_cycle_unrolls: self.max_cycle_unrolls,
            },
            ..JobOptions::default()
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a storyboard and report diagnostics.
    Validate {
        path: PathBuf,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// List the play paths of a storyboard with their score bounds.
    Paths {
        path: PathBuf,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Run a cohort of virtual players through a scenario.
    Simulate {
        path: PathBuf,
        /// Cohort description, one JSON object per line.
        #[arg(long)]
        cohort: PathBuf,
        /// Overrides the cohort seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the cohort step limit.
        #[arg(long)]
        max_steps: Option<usize>,
    },
    /// Convert between the legacy and canonical dialects.
    Convert {
        path: PathBuf,
        #[arg(long, value_enum)]
        to: Dialect,
        /// Expected source dialect; detected when omitted.
        #[arg(long, value_enum)]
        from: Option<Dialect>,
        /// Write the converted document here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Directory holding scenarios and the activity catalog.
        /// SGFORGE_STORE, when set, takes precedence.
        #[arg(long, default_value = "sgforge-store")]
        store: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Output {
    pub exit: u8,
    pub stdout: String,
    pub stderr: String,
}

/// Parses arguments; help and version requests come back as finished output.
pub fn parse<I, T>(args: I) -> Result<Cli, Output>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(args).map_err(|e| {
        let text = e.render().to_string();
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Output {
                exit: EXIT_OK,
                stdout: text,
                stderr: String::new(),
            },
            _ => Output {
                exit: EXIT_USAGE,
                stdout: String::new(),
                stderr: text,
            },
        }
    })
}

/// Runs everything except `serve`, which needs a runtime.
pub fn run<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse(args) {
        Ok(cli) => execute(&cli),
        Err(out) => out,
    }
}

/// The store directory for `serve`: `SGFORGE_STORE` overrides the flag.
pub fn store_dir(flag: &Path, env: Option<OsString>) -> PathBuf {
    env.filter(|v| !v.is_empty()).map(PathBuf::from).unwrap_or_else(|| flag.to_path_buf())
}

#[allow(clippy::result_large_err)]
fn read(kind: JobKind, path: &PathBuf) -> Result<Vec<u8>, JobResult> {
    std::fs::read(path).map_err(|e| JobResult::usage(kind, format!("cannot read {}: {e}", path.display())))
}

pub fn job(command: &Command) -> JobResult {
    match command {
        Command::Validate { path, limits } => match read(JobKind::Validate, path) {
            Ok(bytes) => jobs::run_validate(&bytes, &limits.options()),
            Err(j) => j,
        },
        Command::Paths { path, limits } => match read(JobKind::Paths, path) {
            Ok(bytes) => jobs::run_paths(&bytes, &limits.options()),
            Err(j) => j,
        },
        Command::Simulate {
            path,
            cohort,
            seed,
            max_steps,
        } => {
            let (bytes, cohort_bytes) = match (read(JobKind::Simulate, path), read(JobKind::Simulate, cohort)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(j), _) | (_, Err(j)) => return j,
            };
            let text = match String::from_utf8(cohort_bytes) {
                Ok(t) => t,
                Err(_) => return JobResult::usage(JobKind::Simulate, format!("{}: cohort file is not UTF-8", cohort.display())),
            };
            let mut c = match parse_cohort(&text) {
                Ok(c) => c,
                Err(e) => return JobResult::usage(JobKind::Simulate, format!("{}: {e}", cohort.display())),
            };
            if let Some(s) = seed {
                c.seed = *s;
            }
            if let Some(m) = max_steps {
                c.params.max_steps = *m;
            }
            jobs::run_simulate(&bytes, &c, &JobOptions::default())
        }
        Command::Convert { path, to, from, .. } => match read(JobKind::Convert, path) {
            Ok(bytes) => jobs::run_convert(&bytes, from.map(Into::into), (*to).into(), &JobOptions::default()),
            Err(j) => j,
        },
        Command::Serve { .. } => JobResult::usage(JobKind::Validate, "serve is only available from the sgforge binary"),
    }
}

pub fn execute(cli: &Cli) -> Output {
    let mut result = job(&cli.command);
    if let Command::Convert { output: Some(dest), .. } = &cli.command {
        if let Some(doc) = result.document.take() {
            if let Err(e) = std::fs::write(dest, doc) {
                let failed = JobResult::usage(JobKind::Convert, format!("cannot write {}: {e}", dest.display()));
                return render(cli.format, false, failed);
            }
        }
    }
    render(cli.format, matches!(cli.command, Command::Convert { .. }), result)
}

fn render(format: OutputFormat, is_convert: bool, result: JobResult) -> Output {
    let exit = result.exit_code;
    match format {
        OutputFormat::Json => Output {
            exit,
            stdout: result.json_lines(),
            stderr: String::new(),
        },
        OutputFormat::Text if exit == EXIT_USAGE => Output {
            exit,
            stdout: String::new(),
            stderr: format!("error: {}\n", result.message.as_deref().unwrap_or("invalid arguments")),
        },
        OutputFormat::Text if is_convert => {
            let document = result.document.clone().unwrap_or_default();
            let report = JobResult {
                document: None,
                ..result
            };
            Output {
                exit,
                stdout: document,
                stderr: report.text(),
            }
        }
        OutputFormat::Text => Output {
            exit,
            stdout: result.text(),
            stderr: String::new(),
        },
    }
}
