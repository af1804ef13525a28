//! Command-line front end for T2Script: a script runner (`run`), an
//! interactive single-command console (`repl`), and one-shot evaluation
//! (`-e`).
//!
//! `run` loads every script file as a module and then triggers the
//! conventional `on_load` event, which is the entry point scripts bind
//! public functions to. Timers keep the process alive until they expire.
//!
//! Exit status: 0 on clean completion, 1 on an uncaught error, 2 on
//! compile, load, or usage errors.

use clap::{Parser, Subcommand};
use std::io::{BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;
use t2script::embed::{Host, HostConfig, OutputMode};
use t2script::{EventKind, StepDecision};

#[derive(Parser)]
#[command(
    name = "t2script",
    version,
    about = "T2Script 4.0 script runner and interactive console"
)]
struct Cli {
    /// Evaluate one single command (repeatable, runs after scripts load)
    #[arg(short = 'e', long = "evaluate", value_name = "COMMAND")]
    evaluate: Vec<String>,

    /// Disable commands before any script loads (comma separated)
    #[arg(long, value_delimiter = ',', value_name = "NAME")]
    disable: Vec<String>,

    /// Print every command to standard error before it executes
    #[arg(long)]
    trace: bool,

    /// Seed for single() event dispatch
    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Directory relative script paths resolve against
    #[arg(long, value_name = "DIR")]
    script_root: Option<PathBuf>,

    /// Interpreter paths envrs may spawn (comma separated; default: any)
    #[arg(long, value_delimiter = ',', value_name = "PATH")]
    envrs_allow: Vec<PathBuf>,

    /// Timeout for envrs subprocesses, in milliseconds
    #[arg(long, value_name = "MS", default_value_t = 30_000)]
    envrs_timeout_ms: u64,

    /// Format for the time constant (%H %M %S)
    #[arg(long, value_name = "FMT")]
    time_format: Option<String>,

    /// Format for the date constant (%Y %m %d)
    #[arg(long, value_name = "FMT")]
    date_format: Option<String>,

    /// Warn about skipped semicolons in loaded scripts
    #[arg(long)]
    lint: bool,

    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Load script files as modules, then trigger the on_load event
    Run {
        #[arg(required = true, value_name = "FILE.tsc")]
        files: Vec<PathBuf>,
    },
    /// Interactive single-command console
    Repl,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.command.is_none() && cli.evaluate.is_empty() {
        eprintln!("t2script: nothing to do; pass `run <file.tsc>`, `repl`, or -e \"<command>\"");
        return ExitCode::from(2);
    }

    let mut config = HostConfig::default();
    config.host_events.push(("on_load".to_string(), EventKind::Multi));
    config.output = OutputMode::Stdout;
    config.errors_to_stderr = true;
    config.disabled_commands = cli.disable.clone();
    config.seed = cli.seed;
    config.envrs = t2script::EnvrsPolicy {
        timeout: Duration::from_millis(cli.envrs_timeout_ms),
        allow: if cli.envrs_allow.is_empty() { None } else { Some(cli.envrs_allow.clone()) },
    };
    if let Some(root) = &cli.script_root {
        config.script_root = root.clone();
    }
    config.time_format = cli.time_format.clone();
    config.date_format = cli.date_format.clone();

    let host = match Host::spawn(config) {
        Ok(h) => h,
        Err(e) => {
            eprintln!("t2script: {e}");
            return ExitCode::from(2);
        }
    };

    if cli.trace {
        host.attach_debug_hook(Box::new(|event| {
            eprintln!(
                "trace: {} {} [{}]",
                event.command,
                event.raw_params.join(" "),
                event.span
            );
            StepDecision::Continue
        }));
    }

    let mut failed = false;

    if let Some(Cmd::Run { files }) = &cli.command {
        for file in files {
            match load_script(&host, file, cli.lint, cli.script_root.as_deref()) {
                Ok(()) => {}
                Err(message) => {
                    eprintln!("t2script: {message}");
                    return ExitCode::from(2);
                }
            }
        }
        let triggered = host.trigger_event("on_load", vec![]);
        if let Some(error) = triggered.outcome.error {
            eprintln!("error: {error}");
            failed = true;
        }
    }

    for command in &cli.evaluate {
        let result = host.submit(command);
        if let Some(error) = result.outcome.error {
            eprintln!("error: {error}");
            failed = true;
            break;
        }
    }

    if matches!(cli.command, Some(Cmd::Repl)) {
        repl_loop(&host);
    } else {
        // keep running until every timer has expired
        host.wait_timers_idle(None);
    }

    host.shutdown();
    if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn load_script(
    host: &Host,
    file: &Path,
    lint: bool,
    script_root: Option<&Path>,
) -> Result<(), String> {
    let resolved = if file.is_absolute() {
        file.to_path_buf()
    } else {
        script_root.unwrap_or(Path::new(".")).join(file)
    };
    let bytes = std::fs::read(&resolved)
        .map_err(|e| format!("cannot read {}: {e}", resolved.display()))?;
    let text = t2script::reader::decode_script_bytes(&bytes, &resolved)
        .map_err(|e| e.to_string())?;
    if lint {
        let unit = t2script::reader::read_source(
            &text,
            t2script::reader::SourceOrigin::ScriptFile,
            &resolved.to_string_lossy(),
        )
        .map_err(|e| e.to_string())?;
        for (line, message) in &unit.warnings {
            eprintln!("lint: {}:{line}: {message}", resolved.display());
        }
    }
    let module = file
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| file.to_string_lossy().into_owned());
    host.load_module_source(&module, &text).map_err(|e| e.to_string())
}

fn repl_loop(host: &Host) {
    let stdin = std::io::stdin();
    let interactive = stdin.is_terminal();
    let mut lines = stdin.lock().lines();
    loop {
        if interactive {
            print!("t2> ");
            let _ = std::io::stdout().flush();
        }
        let Some(Ok(line)) = lines.next() else { break };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line == ":quit" {
            break;
        }
        let result = host.submit(line);
        if let Some(error) = result.outcome.error {
            eprintln!("error: {error}");
        }
    }
}
