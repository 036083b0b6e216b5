use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rigsim::harness::{
    emit_report, render_report, run_experiment, sample_text, tv_exact_record, ExperimentConfig,
    ExperimentKind, Format, SampleModel,
};
use rigsim::properties::PropertySpec;
use rigsim::thresholds::Mode;
use rigsim::{Error, Result};

#[derive(Parser)]
#[command(
    name = "rigsim",
    version,
    about = "Random intersection graph experiments"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    #[arg(long, global = true)]
    n: Option<u64>,
    #[arg(long, global = true)]
    m: Option<u64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    p: Option<f64>,
    #[arg(long, global = true)]
    q: Option<f64>,
    #[arg(long, global = true)]
    c: Option<f64>,
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    reps: Option<u64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true)]
    mode: Option<Mode>,
    #[arg(long, global = true)]
    property: Option<PropertySpec>,
    #[arg(long = "p-grid", global = true, value_delimiter = ',')]
    p_grid: Option<Vec<f64>>,
    #[arg(long = "m-grid", global = true, value_delimiter = ',')]
    m_grid: Option<Vec<u64>>,
    #[arg(long = "n-grid", global = true, value_delimiter = ',')]
    n_grid: Option<Vec<u64>>,
    #[arg(long = "q-grid", global = true, value_delimiter = ',')]
    q_grid: Option<Vec<f64>>,
    #[arg(long, global = true)]
    budget: Option<f64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    format: Option<Format>,
    /// TOML file whose keys override the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw graphs and print them in canonical text form.
    Sample {
        #[arg(long, default_value = "rig")]
        model: SampleModel,
        #[arg(long, default_value_t = 1)]
        count: u64,
    },
    /// Exact total variation against G(n, p̂) with derived thresholds.
    TvExact,
    Squeeze,
    Triangles,
    CouplingCheck,
    Counterexample,
    Lemma8,
    ChernoffAudit,
    /// Exact total-variation curve over an m-grid.
    TvConvergence,
}

fn config(g: &Global, kind: ExperimentKind) -> Result<ExperimentConfig> {
    let cfg = ExperimentConfig {
        n: g.n,
        m: g.m,
        alpha: g.alpha,
        p: g.p,
        p_grid: g.p_grid.clone(),
        m_grid: g.m_grid.clone(),
        n_grid: g.n_grid.clone(),
        q: g.q,
        q_grid: g.q_grid.clone(),
        c: g.c,
        k: g.k,
        reps: g.reps,
        seed: g.seed,
        mode: g.mode,
        property: g.property.clone(),
        budget: g.budget,
        threads: g.threads,
        format: g.format,
        out: g.out.clone(),
        ..ExperimentConfig::new(kind)
    };
    match &g.config {
        Some(path) => cfg.overlay_toml(&fs::read_to_string(path)?),
        None => Ok(cfg),
    }
}

fn need<T>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("tv-exact needs --{name}")))
}

fn write_out(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let kind = match cli.command {
        Command::Sample { model, count } => {
            let cfg = config(&cli.global, ExperimentKind::Squeeze)?;
            let mut text = String::new();
            for i in 0..count {
                text.push_str(&sample_text(model, &cfg, i)?);
            }
            write_out(&cfg.out, &text)?;
            return Ok(true);
        }
        Command::TvExact => {
            let cfg = config(&cli.global, ExperimentKind::TvConvergence)?;
            let rec = tv_exact_record(
                need(cfg.n, "n")?,
                need(cfg.m, "m")?,
                need(cfg.p, "p")?,
                cfg.mode.unwrap_or(Mode::Lemma9),
            )?;
            write_out(&cfg.out, &(serde_json::to_string_pretty(&rec)? + "\n"))?;
            return Ok(true);
        }
        Command::Squeeze => ExperimentKind::Squeeze,
        Command::Triangles => ExperimentKind::TrianglePoisson,
        Command::CouplingCheck => ExperimentKind::CouplingChain,
        Command::Counterexample => ExperimentKind::Counterexample,
        Command::Lemma8 => ExperimentKind::Lemma8,
        Command::ChernoffAudit => ExperimentKind::ChernoffAudit,
        Command::TvConvergence => ExperimentKind::TvConvergence,
    };
    let cfg = config(&cli.global, kind)?;
    let report = run_experiment(&cfg)?;
    let format = cfg.format.unwrap_or_default();
    match &cfg.out {
        Some(path) => emit_report(&report, format, path)?,
        None => write_out(&None, &render_report(&report, format)?)?,
    }
    for v in &report.verdicts {
        eprintln!(
            "{} {}: {}",
            if v.passed { "PASS" } else { "FAIL" },
            v.rule,
            v.detail
        );
    }
    eprintln!("wall clock: {:.3}s", report.wall_clock.as_secs_f64());
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
