//! Scenario runner behind the `bundlelift` binary.

mod scenarios;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::tolerance::{Tolerances, DEFAULT_STEPS};

pub use scenarios::{scenario_names, SCENARIOS};

pub const SCHEMA_VERSION: &str = "1";
pub const THREADS_ENV: &str = "BUNDLELIFT_THREADS";

/// Validated inputs for one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub seed: u64,
    pub samples: usize,
    pub transport_steps: usize,
    pub mesh_level: usize,
    /// Restricts scenarios that sweep a size parameter (torus dimension,
    /// power `n` of the S¹×S² bundle).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub tolerances: Tolerances,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario: String::new(),
            seed: 42,
            samples: 200,
            transport_steps: DEFAULT_STEPS,
            mesh_level: 4,
            n: None,
            tolerances: Tolerances::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn new(scenario: impl Into<String>) -> Self {
        ScenarioConfig {
            scenario: scenario.into(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        if !SCENARIOS.iter().any(|s| s.name == self.scenario) {
            return Err(Error::UnknownScenario(self.scenario.clone()));
        }
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if self.transport_steps < 16 {
            return bad(format!("transport steps {} < 16", self.transport_steps));
        }
        if !(3..=7).contains(&self.mesh_level) {
            return bad(format!("mesh level {} outside 3..=7", self.mesh_level));
        }
        for (name, t) in [("exact", self.tolerances.exact), ("transport", self.tolerances.transport)] {
            if !(t.is_finite() && t > 0.0) {
                return bad(format!("{name} tolerance must be positive, got {t}"));
            }
        }
        if let Some(n) = self.n {
            let allowed: &[usize] = match self.scenario.as_str() {
                "torus_sweep" => &[1, 2, 3, 4],
                "s1xs2_generators" => &[1, 2, 3],
                _ => return bad(format!("`{}` takes no --n", self.scenario)),
            };
            if !allowed.contains(&n) {
                return bad(format!("--n {n} not in {allowed:?} for {}", self.scenario));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Pass when `residual ≤ tolerance`.
    AtMost,
    /// Pass when `residual ≥ tolerance` (lower bounds such as singular values).
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub verdict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub version: String,
    pub scenario: String,
    pub config: ScenarioConfig,
    pub checks: Vec<CheckRecord>,
    /// Scenario-specific values (integers, verdict tables, profiles).
    pub details: Map<String, Value>,
    pub overall: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

/// Rows for the `--csv` output.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)
            .map_err(|e| Error::Io(e.to_string()))?;
        w.write_record(&self.header).map_err(|e| Error::Io(e.to_string()))?;
        for r in &self.rows {
            w.write_record(r).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Collects checks, details and plot rows while a scenario runs.
#[derive(Debug, Default)]
pub struct Recorder {
    pub checks: Vec<CheckRecord>,
    pub details: Map<String, Value>,
    pub table: Option<Table>,
}

impl Recorder {
    fn push(&mut self, name: impl Into<String>, residual: f64, tolerance: f64, comparison: Comparison) {
        let verdict = match comparison {
            Comparison::AtMost => residual <= tolerance,
            Comparison::AtLeast => residual >= tolerance,
        };
        self.checks.push(CheckRecord {
            name: name.into(),
            residual,
            tolerance,
            comparison,
            verdict,
        });
    }

    pub fn at_most(&mut self, name: impl Into<String>, residual: f64, tolerance: f64) {
        self.push(name, residual, tolerance, Comparison::AtMost);
    }

    pub fn at_least(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.push(name, value, bound, Comparison::AtLeast);
    }

    /// Integer equality, recorded as `|got − expected| ≤ 0`.
    pub fn equal(&mut self, name: impl Into<String>, got: i64, expected: i64) {
        self.push(name, (got - expected).abs() as f64, 0.0, Comparison::AtMost);
    }

    /// A boolean fact, recorded as residual 0 (holds) or 1.
    pub fn holds(&mut self, name: impl Into<String>, ok: bool) {
        self.push(name, if ok { 0.0 } else { 1.0 }, 0.0, Comparison::AtMost);
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.details.insert(key.to_string(), v);
    }
}

/// Runs a validated scenario. Returns the report and the plot table.
pub fn run_scenario(config: &ScenarioConfig) -> Result<(RunReport, Table)> {
    config.validate()?;
    let start = Instant::now();
    let spec = SCENARIOS.iter().find(|s| s.name == config.scenario).expect("validated");
    let mut rec = Recorder::default();
    (spec.run)(config, &mut rec)?;
    let table = rec.table.take().unwrap_or_else(|| checks_table(&rec.checks));
    let overall = rec.checks.iter().all(|c| c.verdict);
    Ok((
        RunReport {
            schema: SCHEMA_VERSION.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            scenario: config.scenario.clone(),
            config: config.clone(),
            checks: rec.checks,
            details: rec.details,
            overall,
            wall_time_s: Some(start.elapsed().as_secs_f64()),
        },
        table,
    ))
}

fn checks_table(checks: &[CheckRecord]) -> Table {
    let mut t = Table::new(&["name", "residual", "tolerance", "comparison", "verdict"]);
    for c in checks {
        let cmp = match c.comparison {
            Comparison::AtMost => "at_most",
            Comparison::AtLeast => "at_least",
        };
        t.rows.push(vec![
            c.name.clone(),
            format!("{:e}", c.residual),
            format!("{:e}", c.tolerance),
            cmp.into(),
            c.verdict.to_string(),
        ]);
    }
    t
}

/// JSON Schema of [`RunReport`].
pub fn report_schema() -> Value {
    json!({
        "$schema": "http://json-schema.org/draft-07/schema#",
        "title": "bundlelift run report",
        "type": "object",
        "required": ["schema", "version", "scenario", "config", "checks", "details", "overall"],
        "properties": {
            "schema": {"const": SCHEMA_VERSION},
            "version": {"type": "string"},
            "scenario": {"type": "string", "enum": scenario_names()},
            "config": {
                "type": "object",
                "additionalProperties": false,
                "properties": {
                    "scenario": {"type": "string"},
                    "seed": {"type": "integer", "minimum": 0},
                    "samples": {"type": "integer", "minimum": 1},
                    "transport_steps": {"type": "integer", "minimum": 16},
                    "mesh_level": {"type": "integer", "minimum": 3, "maximum": 7},
                    "n": {"type": "integer", "minimum": 1},
                    "tolerances": {
                        "type": "object",
                        "properties": {
                            "exact": {"type": "number", "exclusiveMinimum": 0},
                            "transport": {"type": "number", "exclusiveMinimum": 0}
                        }
                    }
                }
            },
            "checks": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["name", "residual", "tolerance", "comparison", "verdict"],
                    "properties": {
                        "name": {"type": "string"},
                        "residual": {"type": ["number", "null"]},
                        "tolerance": {"type": "number"},
                        "comparison": {"enum": ["at_most", "at_least"]},
                        "verdict": {"type": "boolean"}
                    }
                }
            },
            "details": {"type": "object"},
            "overall": {"type": "boolean", "description": "conjunction of all check verdicts"},
            "wall_time_s": {"type": "number", "description": "omitted with --no-timestamp"}
        }
    })
}

#[derive(Debug, Parser)]
#[command(name = "bundlelift", version, about = "Lifts of diffeomorphisms to vector-bundle automorphisms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a named scenario and report its checks.
    Scenario(ScenarioArgs),
    /// List the available scenarios.
    List,
    /// Print the JSON Schema of run reports.
    ReportSchema,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    pub name: String,
    /// JSON file with ScenarioConfig fields; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub mesh: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub tol_exact: Option<f64>,
    #[arg(long)]
    pub tol_transport: Option<f64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Write plot data (or the check table) as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Leave the wall time out of the report.
    #[arg(long)]
    pub no_timestamp: bool,
}

impl ScenarioArgs {
    pub fn to_config(&self) -> Result<ScenarioConfig> {
        let mut c = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                serde_json::from_str::<ScenarioConfig>(&text).map_err(|e| Error::ConfigInvalid(e.to_string()))?
            }
            None => ScenarioConfig::default(),
        };
        if !c.scenario.is_empty() && c.scenario != self.name {
            return Err(Error::ConfigInvalid(format!(
                "config names scenario `{}` but `{}` was requested",
                c.scenario, self.name
            )));
        }
        c.scenario = self.name.clone();
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.samples {
            c.samples = v;
        }
        if let Some(v) = self.steps {
            c.transport_steps = v;
        }
        if let Some(v) = self.mesh {
            c.mesh_level = v;
        }
        if self.n.is_some() {
            c.n = self.n;
        }
        if let Some(v) = self.tol_exact {
            c.tolerances.exact = v;
        }
        if let Some(v) = self.tol_transport {
            c.tolerances.transport = v;
        }
        Ok(c)
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::ConfigInvalid(format!("{THREADS_ENV}={raw} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::ConfigInvalid(e.to_string()))
}

fn write_json(value: &impl Serialize, path: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run_command(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::List => {
            for s in SCENARIOS {
                println!("{:<22} {}", s.name, s.summary);
            }
            Ok(true)
        }
        Command::ReportSchema => {
            write_json(&report_schema(), None)?;
            Ok(true)
        }
        Command::Scenario(args) => {
            let config = args.to_config()?;
            config.validate()?;
            configure_threads()?;
            let (mut report, table) = run_scenario(&config)?;
            if args.no_timestamp {
                report.wall_time_s = None;
            }
            if let Some(p) = &args.csv {
                table.write(p)?;
            }
            write_json(&report, args.json.as_deref())?;
            if args.json.is_some() {
                for c in &report.checks {
                    println!("{} {} ({:e})", if c.verdict { "PASS" } else { "FAIL" }, c.name, c.residual);
                }
            }
            Ok(report.overall)
        }
    }
}

/// Exit code: 0 when every check passes, 1 on a failed verdict, 2 on errors.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_command(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
