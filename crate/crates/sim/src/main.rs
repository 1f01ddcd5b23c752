use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use faulty_ris_sim::config::SimConfig;
use faulty_ris_sim::harness::{run_heatmap, run_pattern_study, run_sweep, ExperimentOutput};
use faulty_ris_sim::output;
use faulty_ris_sim::validate;

const EXIT_CONFIG: u8 = 2;
const EXIT_FAILURE_BUDGET: u8 = 3;
const EXIT_VALIDATE: u8 = 4;

/// Monte Carlo evaluation of RIS configuration strategies under element faults.
#[derive(Parser)]
#[command(name = "faulty-ris", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean SLNR and SNR versus the number of faulty elements.
    Sweep(Common),
    /// Received-power maps of every method on one realization.
    Heatmap(Common),
    /// Clustered, row, column and uniform fault patterns at a fixed fraction.
    Patterns(Common),
    /// Fast invariant checks on the configured scenario.
    Validate(Common),
    /// Print the resolved configuration as TOML.
    DumpConfig(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Comma-separated methods or `all`.
    #[arg(long)]
    method: Option<String>,
    /// Faulty-element count of the heatmap realization.
    #[arg(long)]
    faulty: Option<usize>,
    #[arg(long)]
    pattern: Option<String>,
    /// Heatmap grid, `NX` or `NXxNY`.
    #[arg(long)]
    grid: Option<String>,
    /// Channel draws averaged per heatmap cell.
    #[arg(long)]
    average: Option<usize>,
    /// `key=value` overrides applied after the file and the flags above.
    overrides: Vec<String>,
}

impl Common {
    fn resolve(&self) -> Result<SimConfig, String> {
        let mut cfg = match &self.config {
            Some(path) => SimConfig::from_file(path).map_err(|e| e.to_string())?,
            None => SimConfig::default(),
        };
        let mut flags = Vec::new();
        if let Some(x) = self.seed {
            flags.push(format!("seed={x}"));
        }
        if let Some(x) = self.trials {
            flags.push(format!("trials={x}"));
        }
        if let Some(x) = &self.method {
            flags.push(format!("methods=\"{x}\""));
        }
        if let Some(x) = self.faulty {
            flags.push(format!("heatmap_faulty={x}"));
        }
        if let Some(x) = &self.pattern {
            flags.push(format!("pattern=\"{x}\""));
        }
        if let Some(x) = &self.grid {
            flags.push(format!("grid=\"{x}\""));
        }
        if let Some(x) = self.average {
            flags.push(format!("heatmap_average={x}"));
        }
        for o in flags.iter().chain(&self.overrides) {
            cfg.apply_override(o).map_err(|e| e.to_string())?;
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    fn jobs(&self) -> usize {
        self.jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
    }
}

fn prepare(dir: &Path, name: &str, cfg: &SimConfig) -> Result<(), String> {
    output::ensure_dir(dir).map_err(|e| e.to_string())?;
    output::write_config(&dir.join("config.toml"), cfg).map_err(|e| e.to_string())?;
    output::write_metadata(&dir.join("metadata.csv"), name, cfg).map_err(|e| e.to_string())
}

fn budget(out: &ExperimentOutput, cfg: &SimConfig) -> ExitCode {
    for a in out.aggregates.iter().filter(|a| a.failures > 0) {
        eprintln!(
            "{} B={} {}: {} failed trials excluded",
            a.case.pattern.name(),
            a.case.fault_count,
            a.method.name(),
            a.failures
        );
    }
    let worst = out.worst_failure_rate();
    if worst > cfg.run.max_failure_rate {
        eprintln!("solver: failure rate {worst:.3} exceeds the budget {}", cfg.run.max_failure_rate);
        ExitCode::from(EXIT_FAILURE_BUDGET)
    } else {
        ExitCode::SUCCESS
    }
}

fn run(command: &Command) -> Result<ExitCode, (u8, String)> {
    let (common, name) = match command {
        Command::Sweep(c) => (c, "sweep"),
        Command::Heatmap(c) => (c, "heatmap"),
        Command::Patterns(c) => (c, "patterns"),
        Command::Validate(c) => (c, "validate"),
        Command::DumpConfig(c) => (c, "dump-config"),
    };
    let cfg = common.resolve().map_err(|e| (EXIT_CONFIG, format!("config: {e}")))?;
    let io = |e: String| (1, format!("io: {e}"));
    match command {
        Command::DumpConfig(_) => {
            print!("{}", cfg.to_toml());
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate(_) => {
            let checks = validate::run(&cfg.scenario);
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VALIDATE)
            })
        }
        Command::Sweep(_) | Command::Patterns(_) => {
            prepare(&common.out, name, &cfg).map_err(io)?;
            let result = if name == "sweep" {
                run_sweep(&cfg, common.jobs())
            } else {
                run_pattern_study(&cfg, common.jobs())
            };
            let out = result.map_err(|e| (EXIT_CONFIG, format!("config: {e}")))?;
            let path = common.out.join(format!("{name}.csv"));
            if name == "sweep" {
                output::write_sweep(&path, &out)
            } else {
                output::write_patterns(&path, &out)
            }
            .map_err(|e| io(e.to_string()))?;
            output::write_trials(&common.out.join("trials.csv"), &out.trials).map_err(|e| io(e.to_string()))?;
            Ok(budget(&out, &cfg))
        }
        Command::Heatmap(_) => {
            prepare(&common.out, name, &cfg).map_err(io)?;
            let out = run_heatmap(&cfg, common.jobs()).map_err(|e| (EXIT_CONFIG, format!("config: {e}")))?;
            for (method, err) in &out.errors {
                eprintln!("solver: {}: {err}", method.name());
            }
            output::write_heatmaps(&common.out, &out).map_err(|e| io(e.to_string()))?;
            Ok(if out.errors.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAILURE_BUDGET)
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(code) => code,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
