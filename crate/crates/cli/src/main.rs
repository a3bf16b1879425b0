use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use fm_core::dsl;
use fm_core::pii::{self, Handling, Registry, SensitivityPolicy, TrivialityRules};
use fm_core::policy::{check_model, check_trace, PiiContext, Violation};
use fm_core::sim::{self, ConformanceReport, Trace};
use fm_core::{Diagnostic, Model};

#[derive(Parser)]
#[command(name = "fm", version, about = "Flowthing machine models, simulation and privacy checks")]
struct Cli {
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Only report problems.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and validate a model.
    Validate { model: PathBuf },
    /// Write the Graphviz DOT rendering of a model.
    Render {
        model: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario and print the trace as JSON lines.
    Simulate {
        model: PathBuf,
        scenario: PathBuf,
        #[arg(long, default_value_t = 1000)]
        max_steps: u64,
        /// Control graph to check the trace against.
        #[arg(long)]
        control_graph: Option<PathBuf>,
    },
    /// Classify an assertion corpus against a registry.
    Classify {
        corpus: PathBuf,
        registry: PathBuf,
        /// Also split compound PII into atomic parts.
        #[arg(long)]
        reduce: bool,
        /// Attach sensitivity levels for this handling.
        #[arg(long)]
        sensitivity: Option<Handling>,
    },
    /// Check policies against a model, or against a trace of it.
    Check {
        model: PathBuf,
        policy: PathBuf,
        registry: PathBuf,
        /// Scenario to simulate for trace policies.
        #[arg(long, conflicts_with = "trace")]
        scenario: Option<PathBuf>,
        /// Previously recorded JSON-lines trace.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        max_steps: u64,
    },
}

/// Problems found in the inputs (exit 1) as opposed to usage or I/O errors.
enum Status {
    Clean,
    Found,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn file_name(path: &Path) -> String {
    path.display().to_string()
}

fn print_diagnostics(diags: &[Diagnostic], json: bool) {
    if json {
        println!("{}", serde_json::to_string(diags).expect("diagnostics serialize"));
    } else {
        for d in diags {
            eprintln!("{d}");
        }
    }
}

fn load_model(path: &Path) -> Result<Result<Model, Vec<Diagnostic>>> {
    let text = read(path)?;
    Ok(dsl::parse_model_named(&text, &file_name(path)))
}

/// Model for commands where a broken input is an error rather than a finding.
fn require_model(path: &Path) -> Result<Model> {
    load_model(path)?.map_err(|d| diag_error(path, &d))
}

fn diag_error(path: &Path, diags: &[Diagnostic]) -> anyhow::Error {
    let lines: Vec<String> = diags.iter().map(ToString::to_string).collect();
    anyhow!("{} does not parse:\n{}", path.display(), lines.join("\n"))
}

fn load_registry(path: &Path) -> Result<Registry> {
    Registry::from_json(&read(path)?).with_context(|| format!("bad registry {}", path.display()))
}

fn validate(cli: &Cli, path: &Path) -> Result<Status> {
    let model = match load_model(path)? {
        Ok(m) => m,
        Err(diags) => {
            print_diagnostics(&diags, cli.json);
            return Ok(Status::Found);
        }
    };
    let report = fm_core::validate(&model);
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        for v in report.iter() {
            println!("{v}");
        }
        if report.is_empty() && !cli.quiet {
            println!("{}: ok", path.display());
        }
    }
    Ok(if report.is_empty() { Status::Clean } else { Status::Found })
}

fn render(cli: &Cli, path: &Path, out: Option<&Path>) -> Result<Status> {
    let model = match load_model(path)? {
        Ok(m) => m,
        Err(diags) => {
            print_diagnostics(&diags, cli.json);
            return Ok(Status::Found);
        }
    };
    let dot = match fm_core::dot::to_dot(&model) {
        Ok(d) => d,
        Err(fm_core::dot::DotError::InvalidModel(report)) => {
            for v in report.iter() {
                eprintln!("{v}");
            }
            return Ok(Status::Found);
        }
    };
    match out {
        Some(p) => fs::write(p, dot).with_context(|| format!("cannot write {}", p.display()))?,
        None => print!("{dot}"),
    }
    Ok(Status::Clean)
}

fn simulate_trace(
    model: &Model,
    scenario: &Path,
    max_steps: u64,
) -> Result<(Trace, Option<sim::ControlGraph>)> {
    let text = read(scenario)?;
    let sc = dsl::parse_scenario_named(&text, &file_name(scenario), model)
        .map_err(|d| diag_error(scenario, &d))?;
    let state = sc.init_state(model)?;
    Ok((sim::run(model, state, max_steps), sc.control))
}

fn simulate(
    cli: &Cli,
    model: &Path,
    scenario: &Path,
    max_steps: u64,
    graph: Option<&Path>,
) -> Result<Status> {
    let model = require_model(model)?;
    let (trace, embedded) = simulate_trace(&model, scenario, max_steps)?;
    let graph = match graph {
        Some(p) => Some(dsl::parse_control_graph(&read(p)?, &model).map_err(|d| diag_error(p, &d))?),
        None => embedded,
    };
    let trace = match &graph {
        Some(g) => g.label_trace(&trace),
        None => trace,
    };
    print!("{}", sim::trace_to_jsonl(&trace));
    let Some(graph) = graph else {
        return Ok(Status::Clean);
    };
    match sim::conforms(&trace, &graph) {
        ConformanceReport::Ok => {
            if !cli.quiet {
                eprintln!("trace conforms to the control graph");
            }
            Ok(Status::Clean)
        }
        report @ ConformanceReport::Violation { .. } => {
            if cli.json {
                eprintln!("{}", serde_json::to_string(&report)?);
            } else if let ConformanceReport::Violation { index, event, node, expected } = &report {
                eprintln!("event {event} (#{index}, {node}) occurred before {}", expected.join(", "));
            }
            Ok(Status::Found)
        }
    }
}

fn classify(
    cli: &Cli,
    corpus: &Path,
    registry: &Path,
    reduce: bool,
    handling: Option<Handling>,
) -> Result<Status> {
    let registry = load_registry(registry)?;
    let text = read(corpus)?;
    let assertions = match dsl::parse_corpus_named(&text, &file_name(corpus)) {
        Ok(a) => a,
        Err(diags) => {
            print_diagnostics(&diags, cli.json);
            return Ok(Status::Found);
        }
    };
    let rules = TrivialityRules::default();
    let table = SensitivityPolicy::default();
    for a in &assertions {
        let c = pii::assess(a, &registry, &rules, handling.map(|h| (h, &table)));
        for w in &c.warnings {
            if !cli.quiet || cli.json {
                eprintln!("warning[{}]: {}: {}", w.code, w.assertion, w.message);
            }
        }
        let reduction = match (&c.record.classification, reduce) {
            (pii::Classification::Cpii { .. }, true) => Some(pii::reduce(&c.record, a, &registry)?),
            _ => None,
        };
        if cli.json {
            let mut v = serde_json::to_value(&c.record)?;
            if let Some(r) = &reduction {
                v["reduction"] = serde_json::to_value(r)?;
            }
            println!("{}", serde_json::to_string(&v)?);
        } else {
            let refs: Vec<&str> = c.record.referents.iter().map(String::as_str).collect();
            let mut line = format!("{}\t{}\t{{{}}}", a.id, c.record.classification, refs.join(", "));
            if c.record.trivial {
                line.push_str("\ttrivial");
            }
            if let Some(l) = c.record.sensitivity {
                line.push_str(&format!("\tsensitivity={}", serde_json::to_value(l)?.as_str().unwrap_or("?")));
            }
            println!("{line}");
            if let Some(r) = &reduction {
                for p in &r.parts {
                    println!("  {}\t{}\t{:?}", p.assertion.id, p.projection, p.assertion.text);
                }
            }
        }
    }
    Ok(Status::Clean)
}

fn check(
    cli: &Cli,
    model: &Path,
    policy: &Path,
    registry: &Path,
    scenario: Option<&Path>,
    trace: Option<&Path>,
    max_steps: u64,
) -> Result<Status> {
    let model = require_model(model)?;
    let registry = load_registry(registry)?;
    let policies =
        dsl::parse_policies_named(&read(policy)?, &file_name(policy)).map_err(|d| diag_error(policy, &d))?;
    let trace: Option<Trace> = match (scenario, trace) {
        (Some(s), _) => Some(simulate_trace(&model, s, max_steps)?.0),
        (None, Some(t)) => {
            Some(sim::trace_from_jsonl(&read(t)?).with_context(|| format!("bad trace {}", t.display()))?)
        }
        (None, None) => None,
    };
    let ctx = PiiContext { model: &model, registry: &registry };
    let mut violations: Vec<Violation> = Vec::new();
    for p in &policies {
        let found = if p.kind.is_structural() {
            check_model(&model, p, &registry)?
        } else {
            let Some(trace) = &trace else {
                bail!("policy `{}` needs a trace: pass --scenario or --trace", p.id);
            };
            check_trace(trace, p, &ctx)?
        };
        violations.extend(found);
    }
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&violations)?);
    } else {
        for v in &violations {
            println!("{}: {}", v.policy, v.explanation);
        }
        if violations.is_empty() && !cli.quiet {
            println!("no violations");
        }
    }
    Ok(if violations.is_empty() { Status::Clean } else { Status::Found })
}

fn run(cli: &Cli) -> Result<Status> {
    match &cli.cmd {
        Cmd::Validate { model } => validate(cli, model),
        Cmd::Render { model, out } => render(cli, model, out.as_deref()),
        Cmd::Simulate { model, scenario, max_steps, control_graph } => {
            simulate(cli, model, scenario, *max_steps, control_graph.as_deref())
        }
        Cmd::Classify { corpus, registry, reduce, sensitivity } => {
            classify(cli, corpus, registry, *reduce, *sensitivity)
        }
        Cmd::Check { model, policy, registry, scenario, trace, max_steps } => {
            check(cli, model, policy, registry, scenario.as_deref(), trace.as_deref(), *max_steps)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // help and version requests are not errors
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(Status::Clean) => ExitCode::SUCCESS,
        Ok(Status::Found) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
