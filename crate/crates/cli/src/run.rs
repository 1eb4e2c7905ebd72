use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use varsel::export::{mnr_to_dot, model_to_dot, DotOptions};
use varsel::fsm::{mean_se, run_trial, AgentConfig, AgentKind, ExperimentSchedule, TrialResult};
use varsel::mnist::{default_data_dir, load_dataset, max_in_cycle_drop, mean_accuracy, run_mnist, MnistConfig, MnistRun};
use varsel::mnr::{MnrConfig, MnrModel};
use varsel::Learner;

use crate::config::{Mode, RunConfig, Schedule};
use crate::metrics::{write_jsonl, MetricRecord};

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    trial_seeds: Vec<u64>,
}

fn trial_seeds(cfg: &RunConfig) -> Vec<u64> {
    (0..cfg.trial_count as u64).map(|t| cfg.seed.wrapping_add(t)).collect()
}

fn pool(cfg: &RunConfig) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build()?)
}

fn prepare_out(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        trial_seeds: trial_seeds(cfg),
    };
    fs::write(cfg.out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    prepare_out(cfg)?;
    match cfg.mode {
        Mode::Fsm => run_fsm(cfg),
        Mode::Mnist => run_mnist_mode(cfg),
    }
}

fn agent(cfg: &RunConfig, kind: AgentKind) -> AgentConfig {
    let mut a = AgentConfig { kind, random_variant: cfg.random_variant, ..AgentConfig::default() };
    if cfg.random_variant {
        a.learner.nce_cutoff = Some(cfg.nce_cutoff);
    }
    a
}

fn episode_records(tag: &str, trial: usize, r: &TrialResult, out: &mut Vec<MetricRecord>) {
    for (i, e) in r.episodes.iter().enumerate() {
        out.push(MetricRecord::new(format!("{tag}episode_duration"), e.duration as f64).trial(trial).phase(e.phase).iteration(i as u64));
        out.push(MetricRecord::new(format!("{tag}episode_end_step"), e.end_step as f64).trial(trial).phase(e.phase).iteration(i as u64));
    }
}

fn phase_summary(tag: &str, results: &[TrialResult], phases: usize, out: &mut Vec<MetricRecord>) -> Vec<serde_json::Value> {
    let mut rows = Vec::new();
    for p in 0..phases {
        let means: Vec<f64> = results.iter().filter_map(|r| r.phase_mean(p)).collect();
        let (m, se) = mean_se(&means);
        out.push(MetricRecord::new(format!("{tag}phase_mean"), m).phase(p));
        out.push(MetricRecord::new(format!("{tag}phase_se"), se).phase(p));
        rows.push(json!({ "phase": p, "mean": m, "se": se }));
    }
    rows
}

pub fn run_fsm(cfg: &RunConfig) -> Result<()> {
    let mut schedule = match cfg.schedule {
        Schedule::Vanilla => ExperimentSchedule::vanilla(),
        Schedule::Readaptation => ExperimentSchedule::readaptation(),
    };
    schedule.epsilon = cfg.epsilon;
    schedule.validate()?;
    let seeds = trial_seeds(cfg);
    let trained_agent = agent(cfg, AgentKind::Planner);
    let random_agent = agent(cfg, AgentKind::Random);
    let runs: Vec<(TrialResult, Learner, TrialResult)> = pool(cfg)?.install(|| {
        seeds
            .par_iter()
            .map(|&s| -> Result<_> {
                let (trained, learner) = run_trial(&schedule, &trained_agent, s, None)?;
                let (random, _) = run_trial(&schedule, &random_agent, s, None)?;
                Ok((trained, learner, random))
            })
            .collect::<Result<_>>()
    })?;
    let mut records = Vec::new();
    let mut start = 0u64;
    for (p, phase) in schedule.phases.iter().enumerate() {
        records.push(MetricRecord::new("phase_start_step", start as f64).phase(p));
        start += phase.duration_steps;
    }
    for (t, (trained, _, random)) in runs.iter().enumerate() {
        episode_records("", t, trained, &mut records);
        episode_records("random_", t, random, &mut records);
        records.push(MetricRecord::new("final_csv_count", trained.final_csv_count as f64).trial(t));
    }
    let trained: Vec<TrialResult> = runs.iter().map(|r| r.0.clone()).collect();
    let random: Vec<TrialResult> = runs.iter().map(|r| r.2.clone()).collect();
    let n = schedule.phases.len();
    let summary = json!({
        "phases": schedule.phases.iter().map(|p| json!({"subtype": p.subtype, "learning": p.learning, "steps": p.duration_steps})).collect::<Vec<_>>(),
        "trained": phase_summary("", &trained, n, &mut records),
        "random": phase_summary("random_", &random, n, &mut records),
    });
    write_jsonl(&cfg.out.join("metrics.jsonl"), &records)?;
    fs::write(cfg.out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    if let Some(path) = &cfg.export_dot {
        fs::write(path, model_to_dot(&runs[0].1.model, &DotOptions::default())?)?;
    }
    Ok(())
}

fn mnist_config(cfg: &RunConfig, seed: u64) -> MnistConfig {
    let mut m = MnistConfig::for_classes(cfg.n_classes, seed);
    if let Some(n) = cfg.n_sample {
        m.n_sample = n;
    }
    if let Some(n) = cfg.test_per_class {
        m.test_per_class = n;
    }
    m.cycles = cfg.cycles;
    m.mnr = MnrConfig { t_ref: cfg.t_ref, t_sign: cfg.t_sign, ..MnrConfig::default() };
    m.mnr.assign.population = cfg.population;
    m
}

pub fn run_mnist_mode(cfg: &RunConfig) -> Result<()> {
    let dir = cfg.data_dir.clone().unwrap_or_else(default_data_dir);
    let data = load_dataset(&dir)?;
    let seeds = trial_seeds(cfg);
    let runs: Vec<(MnistRun, MnrModel<f64>)> = pool(cfg)?.install(|| {
        seeds
            .par_iter()
            .map(|&s| run_mnist::<f64>(&data, &mnist_config(cfg, s), |_, _, _| {}).map_err(anyhow::Error::from))
            .collect::<Result<_>>()
    })?;
    let mut records = Vec::new();
    for (t, (run, _)) in runs.iter().enumerate() {
        for (c, cycle) in run.accuracy.iter().enumerate() {
            for (i, accs) in cycle.iter().enumerate() {
                for (k, a) in accs.iter().enumerate() {
                    records.push(
                        MetricRecord::new(format!("accuracy_class_{}", run.classes[k]), *a).trial(t).cycle(c).iteration(i as u64),
                    );
                }
                let mean = accs.iter().sum::<f64>() / accs.len() as f64;
                records.push(MetricRecord::new("accuracy_mean", mean).trial(t).cycle(c).iteration(i as u64));
                records.push(MetricRecord::new("csv_count", run.csv_count[c][i] as f64).trial(t).cycle(c).iteration(i as u64));
            }
        }
    }
    let only_runs: Vec<MnistRun> = runs.iter().map(|r| r.0.clone()).collect();
    // Class identities differ per trial, so averaging is by presentation slot.
    let mean = mean_accuracy(&only_runs);
    for (c, cycle) in mean.iter().enumerate() {
        for (i, accs) in cycle.iter().enumerate() {
            for (k, a) in accs.iter().enumerate() {
                records.push(MetricRecord::new(format!("mean_accuracy_slot_{k}"), *a).cycle(c).iteration(i as u64));
            }
        }
    }
    let finals: Vec<f64> = only_runs.iter().map(MnistRun::final_mean).collect();
    let (final_mean, final_se) = mean_se(&finals);
    let summary = json!({
        "classes": only_runs.iter().map(|r| r.classes.clone()).collect::<Vec<_>>(),
        "final_mean_accuracy": final_mean,
        "final_mean_accuracy_se": final_se,
        "max_in_cycle_drop_of_mean": max_in_cycle_drop(&mean),
    });
    write_jsonl(&cfg.out.join("metrics.jsonl"), &records)?;
    fs::write(cfg.out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    if let Some(path) = &cfg.export_dot {
        fs::write(path, mnr_to_dot(&runs[0].1, &DotOptions::default())?)?;
    }
    save_json(&cfg.out.join("model_trial0.json"), &runs[0].1)?;
    Ok(())
}

fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string(value)?)?;
    Ok(())
}
