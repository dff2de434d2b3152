use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hydropseudo::verifier::{self, Mode, RunConfig, Verdict};

/// Runs the randomized verification suites and writes a JSON report.
#[derive(Parser, Debug)]
#[command(name = "verify", version)]
struct Cli {
    /// JSON run configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Write SVG log-log plots of the scaling suites next to the report.
    #[arg(long)]
    emit_plots: bool,
    /// Report path.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn load(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            RunConfig::from_json(&text).map_err(|e| e.to_string())?
        }
        None => RunConfig::default(),
    };
    if let Some(m) = cli.mode {
        cfg.mode = m;
    }
    if let Some(n) = cli.n {
        cfg.n = n;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    if let Some(o) = &cli.output {
        cfg.output_path = o.display().to_string();
    }
    cfg.emit_plots |= cli.emit_plots;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("verify: {e}");
            return ExitCode::from(2);
        }
    };
    let (report, curves) = match verifier::run_with_curves(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("verify: {e}");
            return ExitCode::from(2);
        }
    };
    let out = PathBuf::from(&cfg.output_path);
    if let Err(e) = std::fs::write(&out, report.to_json()) {
        eprintln!("verify: cannot write {}: {e}", out.display());
        return ExitCode::from(2);
    }
    if cfg.emit_plots {
        if let Err(e) = verifier::write_plots(&out, &curves) {
            eprintln!("verify: cannot write plots: {e}");
            return ExitCode::from(2);
        }
    }
    for s in report.suites.iter().filter(|s| s.passed < s.trials) {
        eprintln!("  {}: {}/{} passed, max residual {:?}", s.name, s.passed, s.trials, s.max_residual);
    }
    let passed = report.suites.iter().filter(|s| s.passed == s.trials).count();
    let word = if report.verdict == Verdict::Pass { "PASS" } else { "FAIL" };
    println!("{word}: {passed}/{} suites, report at {}", report.suites.len(), out.display());
    if report.verdict == Verdict::Pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
