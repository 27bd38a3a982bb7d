//! `hdlab` — run, validate, and list the scenario registry.
//!
//! Exit codes: 0 when every assertion of a run passes, 1 when any assertion
//! fails (or a config fails validation), 2 on errors — unknown scenario,
//! unreadable config, or a crashed run. Reports are deterministic; wall
//! time goes to stderr only.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use hdlab_cli::config::{apply_set, merge};
use hdlab_cli::report::Report;
use hdlab_cli::scenarios::{find, registry};
use hdlab_cli::CliError;
use serde_json::Value;

#[derive(Parser)]
#[command(name = "hdlab", version, about = "density and dimension experiments over filtration chains")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario and print one line per assertion.
    Run {
        /// Scenario name; `hdlab list` shows the registry.
        scenario: String,
        /// JSON file whose fields override the scenario defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Targeted override, `path=value`; the path descends objects and
        /// arrays like a JSON pointer (`etas/0=1/5`).
        #[arg(long = "set", value_name = "PATH=VALUE")]
        set: Vec<String>,
        /// Directory for the report artifacts `<scenario>.json` / `.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Which artifacts to write under --out.
        #[arg(long, value_enum, default_value_t = Format::Both)]
        format: Format,
    },
    /// Check a config file against its scenario without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// List every scenario with its parameters and defaults.
    List,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Both,
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Run { scenario, config, set, out, format } => {
            run_cmd(&scenario, config.as_deref(), &set, out.as_deref(), format)
        }
        Cmd::Validate { config } => validate_cmd(&config),
        Cmd::List => {
            list_cmd();
            ExitCode::SUCCESS
        }
    }
}

fn load_config(path: &Path) -> Result<Value, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let doc: Value =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if doc.is_object() {
        Ok(doc)
    } else {
        Err(format!("{}: expected a JSON object", path.display()))
    }
}

fn run_cmd(
    name: &str,
    config: Option<&Path>,
    sets: &[String],
    out: Option<&Path>,
    format: Format,
) -> ExitCode {
    let Some(def) = find(name) else {
        eprintln!("error: unknown scenario {name:?}; `hdlab list` shows the registry");
        return ExitCode::from(2);
    };
    let mut doc = (def.defaults)();
    if let Some(path) = config {
        let over = match load_config(path) {
            Ok(v) => v,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        };
        if let Some(s) = over.get("scenario").and_then(Value::as_str) {
            if s != def.name {
                eprintln!("error: config names scenario {s:?}, not {:?}", def.name);
                return ExitCode::from(2);
            }
        }
        doc = merge(doc, &over);
    }
    for s in sets {
        if let Err(e) = apply_set(&mut doc, s) {
            eprintln!("error: --set {s:?}: {e}");
            return ExitCode::from(2);
        }
    }
    if doc.get("scenario").and_then(Value::as_str) != Some(def.name) {
        eprintln!("error: the scenario field cannot be overridden");
        return ExitCode::from(2);
    }
    let errors = (def.validate)(&doc);
    if !errors.is_empty() {
        for e in &errors {
            eprintln!("{e}");
        }
        return ExitCode::from(2);
    }

    let started = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(|| (def.run)(&doc)));
    eprintln!("# wall time: {:.3}s", started.elapsed().as_secs_f64());
    let report = match outcome {
        Ok(Ok(r)) => r,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(payload) => {
            eprintln!("error: scenario panicked: {}", panic_message(&payload));
            return ExitCode::from(2);
        }
    };

    for a in &report.assertions {
        println!("{} {}", if a.pass { "PASS" } else { "FAIL" }, a.name);
    }
    let passed = report.assertions.iter().filter(|a| a.pass).count();
    println!(
        "{}: {passed}/{} assertions passed",
        report.scenario,
        report.assertions.len()
    );

    if let Some(dir) = out {
        if let Err(e) = write_artifacts(&report, dir, format) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "opaque panic payload".into()
    }
}

fn write_artifacts(report: &Report, dir: &Path, format: Format) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    if matches!(format, Format::Json | Format::Both) {
        let path = dir.join(format!("{}.json", report.scenario));
        fs::write(&path, report.json_string())?;
        eprintln!("# wrote {}", path.display());
    }
    if matches!(format, Format::Csv | Format::Both) {
        let path = dir.join(format!("{}.csv", report.scenario));
        fs::write(&path, report.csv_string())?;
        eprintln!("# wrote {}", path.display());
    }
    Ok(())
}

fn validate_cmd(path: &Path) -> ExitCode {
    let over = match load_config(path) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let Some(name) = over.get("scenario").and_then(Value::as_str) else {
        println!("/scenario: missing; a config must name its scenario");
        return ExitCode::from(1);
    };
    let Some(def) = find(name) else {
        println!("/scenario: unknown scenario {name:?}");
        return ExitCode::from(1);
    };
    let doc = merge((def.defaults)(), &over);
    let errors = (def.validate)(&doc);
    if errors.is_empty() {
        println!("configuration is valid");
        ExitCode::SUCCESS
    } else {
        for e in &errors {
            println!("{e}");
        }
        ExitCode::from(1)
    }
}

fn list_cmd() {
    for def in registry() {
        println!("{:<18} {}", def.name, def.summary);
        for p in def.params {
            println!("    {:<16} {}  [default: {}]", p.name, p.doc, p.default);
        }
        println!();
    }
}
