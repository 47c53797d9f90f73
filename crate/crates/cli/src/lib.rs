//! Command-line front end: loads a pyramid bundle, runs the stages a command
//! needs and renders findings as text or stable JSON.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use procpyramid_core::bundle::{sort_findings, Bundle, Stage};
use procpyramid_core::conformance::{check_milestone_retention, check_vv_links, diff_all, Thresholds};
use procpyramid_core::dependency::{impact, to_dot, to_json_edges};
use procpyramid_core::ingest::{render_offset, Duration};
use procpyramid_core::timeline::{build_reference_timeline, TimelineReport};
use procpyramid_core::{Finding, Severity};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExitStatus {
    pub code: i32,
}

#[derive(Debug, Parser)]
#[command(name = "procpyramid", version, about = "Validate and analyze multi-level process pyramids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Pyramid manifest (JSON)
    manifest: PathBuf,
    /// Write the JSON report to this file
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print JSON instead of text
    #[arg(long)]
    json: bool,
    /// Treat warnings as errors for the exit code
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Well-formedness of every model and the pyramid structure
    Validate(Common),
    /// SOP offsets, golden questions and the reference grid
    Timeline {
        #[command(flatten)]
        common: Common,
        /// Grid step in days (defaults to the manifest value)
        #[arg(long)]
        step: Option<u64>,
    },
    /// Inferred milestone dependencies and their consistency
    Deps {
        #[command(flatten)]
        common: Common,
        /// Also write the graph as GraphViz DOT
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Upstream and downstream closure of a milestone or model
    Impact {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: String,
    },
    /// Comparison with the reference templates and V&V links
    Conform(Common),
    /// Milestones kept, dropped or added between two revisions
    Retention {
        #[command(flatten)]
        common: Common,
        /// Earlier revision (defaults to MANIFEST)
        #[arg(long)]
        before: Option<PathBuf>,
        /// Later revision (defaults to MANIFEST)
        #[arg(long)]
        after: Option<PathBuf>,
    },
    /// Dependency graph, edge list and pyramid coordinates
    Export {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Every finding of validate, timeline, deps and conform
    Report(Common),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Timeline { .. } => "timeline",
            Command::Deps { .. } => "deps",
            Command::Impact { .. } => "impact",
            Command::Conform(_) => "conform",
            Command::Retention { .. } => "retention",
            Command::Export { .. } => "export",
            Command::Report(_) => "report",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Validate(c) | Command::Conform(c) | Command::Report(c) => c,
            Command::Timeline { common, .. }
            | Command::Deps { common, .. }
            | Command::Impact { common, .. }
            | Command::Retention { common, .. }
            | Command::Export { common, .. } => common,
        }
    }
}

/// Stages whose findings each analysis command reports.
pub fn command_stages(command: &str) -> &'static [Stage] {
    match command {
        "validate" => &[Stage::Ingest, Stage::Pyramid],
        "timeline" => &[Stage::Timeline],
        "deps" => &[Stage::Dependency],
        "conform" => &[Stage::Conformance],
        "report" => &Stage::ALL,
        _ => &[],
    }
}

/// Findings plus everything a command emitted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportBundle {
    pub findings: Vec<Finding>,
    /// Artifact name to written file path.
    pub artifacts: BTreeMap<String, String>,
    /// Command-specific payload, merged into the JSON object.
    pub data: BTreeMap<String, Value>,
    /// Command-specific text printed before the findings.
    pub text: String,
}

impl ReportBundle {
    pub fn new(mut findings: Vec<Finding>) -> Self {
        sort_findings(&mut findings);
        ReportBundle { findings, ..Default::default() }
    }

    pub fn summary(&self) -> Value {
        let mut by_severity: BTreeMap<&str, usize> =
            [Severity::Error, Severity::Warning, Severity::Info].iter().map(|s| (s.as_str(), 0)).collect();
        let mut by_code: BTreeMap<&str, usize> = BTreeMap::new();
        for f in &self.findings {
            *by_severity.entry(f.severity.as_str()).or_default() += 1;
            *by_code.entry(f.code.as_str()).or_default() += 1;
        }
        json!({ "bySeverity": by_severity, "byCode": by_code })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

pub fn render_report(bundle: &ReportBundle, format: Format) -> String {
    match format {
        Format::Json => {
            let mut obj = Map::new();
            for (k, v) in &bundle.data {
                obj.insert(k.clone(), v.clone());
            }
            if !bundle.artifacts.is_empty() {
                obj.insert("artifacts".into(), json!(bundle.artifacts));
            }
            obj.insert("findings".into(), json!(bundle.findings));
            obj.insert("summary".into(), bundle.summary());
            let mut out = serde_json::to_string_pretty(&Value::Object(obj)).expect("report serializes");
            out.push('\n');
            out
        }
        Format::Text => render_text(bundle),
    }
}

fn render_text(bundle: &ReportBundle) -> String {
    let mut out = bundle.text.clone();
    if !out.is_empty() && !out.ends_with('\n') {
        out.push('\n');
    }
    let mut groups: BTreeMap<(Severity, &str), Vec<&Finding>> = BTreeMap::new();
    for f in &bundle.findings {
        groups.entry((f.severity, f.code.as_str())).or_default().push(f);
    }
    let mut current = None;
    for ((severity, code), findings) in &groups {
        if current != Some(*severity) {
            let _ = writeln!(out, "{severity}:");
            current = Some(*severity);
        }
        let _ = writeln!(out, "  {code} ({})", findings.len());
        for f in findings {
            let _ = writeln!(out, "    {}: {}", f.subject, f.message);
        }
    }
    for (name, path) in &bundle.artifacts {
        let _ = writeln!(out, "wrote {name}: {path}");
    }
    let count = |s: Severity| bundle.findings.iter().filter(|f| f.severity == s).count();
    let _ = writeln!(
        out,
        "{} errors, {} warnings, {} info",
        count(Severity::Error),
        count(Severity::Warning),
        count(Severity::Info)
    );
    out
}

/// 1 if any finding is an error (or a warning under `strict`), else 0.
pub fn exit_code(findings: &[Finding], strict: bool) -> i32 {
    let failing = |f: &Finding| f.severity == Severity::Error || (strict && f.severity == Severity::Warning);
    if findings.iter().any(failing) {
        EXIT_FINDINGS
    } else {
        EXIT_OK
    }
}

struct Failure {
    code: String,
    message: String,
}

impl Failure {
    fn new(code: &str, message: impl Into<String>) -> Self {
        Failure { code: code.to_string(), message: message.into() }
    }
}

fn load(path: &Path) -> Result<Bundle, Failure> {
    Bundle::load(path).map_err(|e| Failure::new(e.code(), e.to_string()))
}

fn write_file(path: &Path, content: &str) -> Result<String, Failure> {
    fs::write(path, content).map_err(|e| Failure::new("IO", format!("cannot write {}: {e}", path.display())))?;
    Ok(path.display().to_string())
}

fn to_value<T: serde::Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("core types serialize")
}

fn execute(command: &Command) -> Result<ReportBundle, Failure> {
    let common = command.common();
    let name = command.name();
    if let Command::Retention { before, after, .. } = command {
        if before.is_none() && after.is_none() {
            return Err(Failure::new("USAGE", "retention needs --before or --after"));
        }
        let old = load(before.as_deref().unwrap_or(&common.manifest))?;
        let new = load(after.as_deref().unwrap_or(&common.manifest))?;
        return Ok(ReportBundle::new(check_milestone_retention(&old.milestones, &new.milestones)));
    }

    let bundle = load(&common.manifest)?;
    let mut report = ReportBundle::new(bundle.findings(command_stages(name)));
    match command {
        Command::Timeline { step, .. } => {
            let step = match step {
                Some(0) => return Err(Failure::new("INVALID-STEP", "--step must be positive")),
                Some(days) => Duration::days(*days),
                None => bundle.pyramid.settings.reference_step,
            };
            let (table, _) = bundle.offsets();
            let grid = build_reference_timeline(&table, step).ok();
            let timeline = TimelineReport::new(&table, grid.as_ref());
            report.text = timeline.to_text(&bundle.milestones);
            report.data.insert("timeline".into(), to_value(&timeline));
        }
        Command::Deps { dot, .. } | Command::Export { dot, .. } => {
            let (table, _) = bundle.offsets();
            let graph = bundle.dependency_graph();
            let dot_text = to_dot(&graph, &bundle.milestones, &table);
            report.data.insert("edges".into(), to_value(&to_json_edges(&graph, &bundle.pyramid)));
            if matches!(command, Command::Export { .. }) {
                report.data.insert("coordinates".into(), to_value(&bundle.pyramid.assign_coordinates()));
            }
            match dot {
                Some(path) => {
                    report.artifacts.insert("dot".into(), write_file(path, &dot_text)?);
                }
                None if matches!(command, Command::Export { .. }) => report.text = dot_text,
                None => {}
            }
            if matches!(command, Command::Deps { .. }) && report.text.is_empty() {
                for e in &graph.edges {
                    let via: Vec<&str> = e.via.iter().map(String::as_str).collect();
                    let _ =
                        writeln!(report.text, "{} -> {} [{}] {:?}", e.producer, e.consumer, via.join(", "), e.status);
                }
            }
        }
        Command::Impact { seed, .. } => {
            let graph = bundle.dependency_graph();
            let set = impact(&graph, &bundle.pyramid, seed).map_err(|e| Failure::new("UNKNOWN-SEED", e.to_string()))?;
            let levels: Vec<String> = set.crossed_levels.iter().map(u32::to_string).collect();
            report.text = format!(
                "seed: {}\ndownstream: {}\nupstream: {}\ncrossed levels: {}\n",
                set.seed,
                set.downstream.join(", "),
                set.upstream.join(", "),
                levels.join(", ")
            );
            report.data.insert("impact".into(), to_value(&set));
        }
        Command::Conform(_) => {
            let reports = diff_all(&bundle.pyramid, &bundle.milestones, &bundle.references, Thresholds::default());
            let graph = bundle.dependency_graph();
            let (_, links) = check_vv_links(&bundle.pyramid, &graph, &bundle.milestones, &bundle.references);
            for r in &reports {
                let ratios: Vec<String> =
                    r.diffs.iter().map(|d| format!("{:?}={:.2}", d.aspect, d.match_ratio).to_lowercase()).collect();
                let _ = writeln!(report.text, "{} vs {}: {:?} ({})", r.model_id, r.ref_id, r.verdict, ratios.join(" "));
            }
            for l in &links {
                let _ = writeln!(report.text, "v&v {} -> {}: {} iterations", l.right_model, l.left_model, l.iterations);
            }
            report.data.insert("deviations".into(), to_value(&reports));
            report.data.insert("vvLinks".into(), to_value(&links));
        }
        Command::Report(_) => {
            let (table, _) = bundle.offsets();
            let sop = table.offsets.values().min().map(|&o| render_offset(o));
            let _ = writeln!(
                report.text,
                "{} models on {} levels, {} milestones, earliest {}",
                bundle.pyramid.model_count(),
                bundle.pyramid.levels.len(),
                bundle.milestones.len(),
                sop.unwrap_or_else(|| "-".into())
            );
        }
        Command::Validate(_) | Command::Retention { .. } => {}
    }
    Ok(report)
}

/// Parses `argv` (program name first), runs the command and writes its
/// output. Usage, parse and manifest failures exit with 2.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FAILURE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return ExitStatus { code };
        }
    };
    let common = cli.command.common();
    let mut report = match execute(&cli.command) {
        Ok(report) => report,
        Err(failure) => {
            let _ = writeln!(stderr, "error[{}]: {}", failure.code, failure.message);
            return ExitStatus { code: EXIT_FAILURE };
        }
    };
    if let Some(path) = &common.out {
        report.artifacts.insert("report".into(), path.display().to_string());
        if let Err(failure) = write_file(path, &render_report(&report, Format::Json)) {
            let _ = writeln!(stderr, "error[{}]: {}", failure.code, failure.message);
            return ExitStatus { code: EXIT_FAILURE };
        }
    }
    if !(common.json && common.out.is_some()) {
        let format = if common.json { Format::Json } else { Format::Text };
        let _ = stdout.write_all(render_report(&report, format).as_bytes());
    }
    ExitStatus { code: exit_code(&report.findings, common.strict) }
}

pub fn run<I, T>(argv: I) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
