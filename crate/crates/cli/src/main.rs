use std::path::PathBuf;

use anyhow::Result;
use clap::Parser;

use varsel_cli::config::{Mode, RunConfig, Schedule};

/// Runs the FSM planning or the incremental digit experiments.
#[derive(Debug, Parser)]
#[command(name = "varsel", version)]
struct Args {
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    schedule: Option<Schedule>,
    #[arg(long)]
    random_variant: bool,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    test_per_class: Option<usize>,
    #[arg(long)]
    cycles: Option<usize>,
    #[arg(long)]
    t_ref: Option<f64>,
    #[arg(long)]
    t_sign: Option<f64>,
    #[arg(long)]
    nce_cutoff: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Write the first trial's final model as DOT here.
    #[arg(long)]
    export_dot: Option<PathBuf>,
}

fn main() -> Result<()> {
    let a = Args::parse();
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($($flag:ident => $field:ident),*) => { $(if let Some(v) = a.$flag.clone() { cfg.$field = v; })* };
    }
    set!(mode => mode, seed => seed, out => out, trials => trial_count, workers => workers, schedule => schedule,
         classes => n_classes, cycles => cycles, t_ref => t_ref, t_sign => t_sign, nce_cutoff => nce_cutoff,
         epsilon => epsilon, population => population);
    if a.random_variant {
        cfg.random_variant = true;
    }
    if a.samples.is_some() {
        cfg.n_sample = a.samples;
    }
    if a.test_per_class.is_some() {
        cfg.test_per_class = a.test_per_class;
    }
    if a.data_dir.is_some() {
        cfg.data_dir = a.data_dir;
    }
    if a.export_dot.is_some() {
        cfg.export_dot = a.export_dot;
    }
    varsel_cli::run::run(&cfg)?;
    eprintln!("wrote {}", cfg.out.display());
    Ok(())
}
