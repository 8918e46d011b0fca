//! Command-line front end. Every subcommand is also callable as a library function so
//! the integration tests can drive it without spawning a process.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::agent::OBS_NAMES;
use crate::config::{EvaluationConfig, ExperimentConfig};
use crate::error::{Error, Result};
use crate::experiment::{
    calibration_grid, candidate_pipeline, cloud_settings, derive_seed, episode_bars,
    evaluation_driver, simulate_trials, social_welfare, train_config, AblationMode, AblationSpec,
    TraitName, STREAM_CLOUDS, STREAM_SIMULATE,
};
use crate::market::export::write_trades;
use crate::ot::{calibrate, read_bars_csv, read_score_table, write_bars_csv, write_score_table, DataClouds};
use crate::policy::{write_train_log, Checkpoint, FrozenPolicy};
use crate::sim::{run_episode, Episode, SimSettings};
use crate::stylized::{evaluate_series, write_report, StylizedCriteria};

#[derive(Debug, Parser)]
#[command(name = "lobmarl", version, about = "Order-book market simulation with learning agents")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the shared policy and write a checkpoint plus the training log.
    Train(Common),
    /// Run evaluation episodes with a frozen policy and export prices, trades and agents.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Stylized facts of a bar series and OT distances to a reference series.
    Evaluate {
        /// Bars CSV of the series under test.
        #[arg(long)]
        synthetic: PathBuf,
        /// Bars CSV of the reference data.
        #[arg(long)]
        real: PathBuf,
        /// Optional configuration for the evaluation settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Grid search over the trait prior spreads scored by OT distance.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        real: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        /// Keep candidates already scored in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Social welfare with one trait fixed or hidden, against the heterogeneous setting.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[arg(long = "trait", value_enum)]
        trait_name: TraitName,
        #[arg(long, value_enum)]
        mode: AblationMode,
        /// Evaluate this policy instead of training one per setting.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Export second-hidden-layer activations with the raw observations.
    Probe {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(c) => cmd_train(&c).map(|_| ()),
        Command::Simulate { common, checkpoint, trials } => cmd_simulate(&common, checkpoint.as_deref(), trials),
        Command::Evaluate { synthetic, real, config, seed, out } => {
            let eval = match &config {
                Some(p) => ExperimentConfig::load(p)?.evaluation,
                None => EvaluationConfig::default(),
            };
            let r = cmd_evaluate(&synthetic, &real, &eval, seed.unwrap_or(0), &out)?;
            println!(
                "kurtosis {} tail {} acorr {} vv {} | OT_r {} OT_t {} OT_as {}",
                r.0.kurtosis, r.0.tail_exponent, r.0.acorr_coef, r.0.vv_corr, r.1[0], r.1[1], r.1[2]
            );
            Ok(())
        }
        Command::Calibrate { common, real, trials, resume } => cmd_calibrate(&common, &real, trials, resume),
        Command::Ablate { common, trait_name, mode, checkpoint, trials } => {
            cmd_ablate(&common, AblationSpec { trait_name, mode }, checkpoint.as_deref(), trials).map(|_| ())
        }
        Command::Probe { common, checkpoint } => cmd_probe(&common, &checkpoint).map(|_| ()),
    }
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&c.config)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> csv::Result<()>,
{
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::io(path, e.into()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Ok(Checkpoint::load(path)?)
}

pub fn cmd_train(c: &Common) -> Result<Checkpoint> {
    let cfg = load_config(c)?;
    let outcome = train_config(&cfg, None)?;
    let ckpt = Checkpoint { params: outcome.params, normalizer: outcome.normalizer, config_hash: cfg.hash() };
    fs::create_dir_all(&c.out).map_err(|e| Error::io(&c.out, e))?;
    ckpt.save(&c.out.join("checkpoint.bin"))?;
    write_with(&c.out.join("train_log.csv"), |w| write_train_log(w, &outcome.log))?;
    println!(
        "trained {} iterations over {} episodes ({:?})",
        outcome.log.len(),
        outcome.episodes,
        outcome.stop_reason
    );
    Ok(ckpt)
}

fn write_prices(w: &mut impl Write, ep: &Episode) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["step", "mid", "fundamental"])?;
    for (t, (m, f)) in ep.mids.iter().zip(&ep.fundamentals).enumerate() {
        w.write_record([(t + 1).to_string(), m.to_string(), f.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-agent traits and outcome, valued at the final mid price.
fn write_agents(w: &mut impl Write, ep: &Episode) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record([
        "agent_id", "agent_type", "σ", "α", "γ", "initial_position", "initial_cash", "final_position", "final_cash",
        "pnl", "log_return",
    ])?;
    let p0 = ep.mids.first().copied().unwrap_or(f64::NAN);
    let p1 = ep.mids.last().copied().unwrap_or(f64::NAN);
    for (j, t) in ep.traits.iter().enumerate() {
        let (a, b) = (ep.initial_states[j], ep.final_states[j]);
        let w0 = a.wealth(p0);
        let w1 = b.wealth(p1);
        w.write_record([
            j.to_string(),
            ep.kinds[j].as_str().to_string(),
            t.sigma.to_string(),
            t.alpha.to_string(),
            t.gamma.to_string(),
            a.position.to_string(),
            a.cash.to_string(),
            b.position.to_string(),
            b.cash.to_string(),
            (w1 - w0).to_string(),
            if w0 > 0.0 && w1 > 0.0 { (w1 / w0).ln().to_string() } else { String::new() },
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_events(w: &mut impl Write, ep: &Episode) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["agent_id", "σ", "α", "γ", "step", "reward", "utility", "position", "cash"])?;
    for e in &ep.events {
        let t = ep.traits[e.agent];
        w.write_record([
            e.agent.to_string(),
            t.sigma.to_string(),
            t.alpha.to_string(),
            t.gamma.to_string(),
            e.step.to_string(),
            e.reward.to_string(),
            e.utility.to_string(),
            e.position.to_string(),
            e.cash.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `trial_NNN/{prices,trades,agents,events}.csv` per trial and a combined `bars.csv`
/// (one day per trial). Zero trials write nothing.
pub fn cmd_simulate(c: &Common, checkpoint: Option<&Path>, trials: Option<usize>) -> Result<()> {
    let cfg = load_config(c)?;
    let ckpt = checkpoint.map(load_checkpoint).transpose()?;
    let mut driver = evaluation_driver(&cfg, ckpt.as_ref())?;
    let trials = trials.unwrap_or(cfg.evaluation.trials);
    if trials == 0 {
        return Ok(());
    }
    let episodes = simulate_trials(&SimSettings::from_config(&cfg), driver.as_mut(), trials, cfg.seed)?;
    for (k, ep) in episodes.iter().enumerate() {
        let dir = c.out.join(format!("trial_{k:03}"));
        write_with(&dir.join("prices.csv"), |w| write_prices(w, ep))?;
        write_with(&dir.join("trades.csv"), |w| write_trades(w, &ep.trades))?;
        write_with(&dir.join("agents.csv"), |w| write_agents(w, ep))?;
        write_with(&dir.join("events.csv"), |w| write_events(w, ep))?;
    }
    let bars = episode_bars(&episodes, cfg.evaluation.steps_per_bar);
    write_with(&c.out.join("bars.csv"), |w| write_bars_csv(w, &bars))?;
    println!("simulated {trials} trials into {}", c.out.display());
    Ok(())
}

/// Writes `report.csv` (metric,value,pass) and `ot.csv` (metric,value).
pub fn cmd_evaluate(
    synthetic: &Path,
    real: &Path,
    eval: &EvaluationConfig,
    seed: u64,
    out: &Path,
) -> Result<(crate::stylized::StylizedReport, [f64; 4])> {
    let syn = read_bars_csv(synthetic)?;
    let reference = read_bars_csv(real)?;
    let report = evaluate_series(&syn, &StylizedCriteria::new(eval.tail_band, eval.tail_fraction, eval.max_lag));
    let cloud_seed = derive_seed(seed, STREAM_CLOUDS, 0);
    let a = DataClouds::build(&syn, eval.cloud_size, eval.tail_fraction, eval.tail_indexing, cloud_seed)?;
    let b = DataClouds::build(&reference, eval.cloud_size, eval.tail_fraction, eval.tail_indexing, cloud_seed)?;
    let d = a.distances(&b)?;
    let ot = [d[0], d[1], d[2], crate::ot::aggregate_ot(d, eval.ot_weights)];
    write_with(&out.join("report.csv"), |w| write_report(w, &report))?;
    write_with(&out.join("ot.csv"), |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["metric", "value"])?;
        for (name, v) in ["OT_r", "OT_t", "OT_as", "OT_bar"].iter().zip(ot) {
            w.write_record([name.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    Ok((report, ot))
}

/// Writes `scores.csv`, `failures.log` and, when any candidate succeeded, `best.toml`.
/// With `resume`, candidates scored in an existing `scores.csv` are not re-run.
pub fn cmd_calibrate(c: &Common, real: &Path, trials: Option<usize>, resume: bool) -> Result<()> {
    let mut cfg = load_config(c)?;
    if let Some(t) = trials {
        cfg.calibration.trials = t;
    }
    cfg.validate()?;
    let scores_path = c.out.join("scores.csv");
    let previous = if resume && scores_path.exists() {
        let f = File::open(&scores_path).map_err(|e| Error::io(&scores_path, e))?;
        read_score_table(f).map_err(|message| Error::Csv { path: scores_path.clone(), row: 0, message })?
    } else {
        Vec::new()
    };
    let settings = cloud_settings(&cfg);
    let reference = read_bars_csv(real)?;
    let real_clouds = DataClouds::build(
        &reference,
        settings.cloud_size,
        settings.tail_fraction,
        settings.indexing,
        derive_seed(cfg.seed, STREAM_CLOUDS, 0),
    )?;
    let result = calibrate(&calibration_grid(&cfg), &real_clouds, &settings, |cand| candidate_pipeline(&cfg, cand), &previous);
    write_with(&scores_path, |w| write_score_table(w, &result.rows))?;
    let mut log = create(&c.out.join("failures.log"))?;
    for r in &result.rows {
        if let Err(msg) = &r.scores {
            writeln!(log, "candidate {}: {msg}", r.candidate.id).map_err(|e| Error::io(c.out.join("failures.log"), e))?;
        }
    }
    log.flush().map_err(|e| Error::io(c.out.join("failures.log"), e))?;
    match result.best {
        Some(best) => {
            let best_cfg = crate::experiment::candidate_config(&cfg, &best);
            let path = c.out.join("best.toml");
            fs::write(&path, best_cfg.to_toml_string()).map_err(|e| Error::io(&path, e))?;
            println!(
                "best candidate {}: sigma_std {} alpha_std {} gamma_min {}",
                best.id, best.sigma_std, best.alpha_std, best.gamma_min
            );
        }
        None => println!("no candidate could be scored"),
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct AblationRunLog {
    spec: AblationSpec,
    trials: usize,
    trial_seeds: Vec<u64>,
    trained: bool,
    /// Trait sampling differs from the heterogeneous setting.
    trait_sampling_modified: bool,
    /// An observation component is hidden from the policy.
    observation_masked: bool,
    mask_index: Option<usize>,
    welfare_discounting: &'static str,
}

/// Welfare per trial for the heterogeneous and the ablated setting.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationOutcome {
    pub heterogeneous: Vec<f64>,
    pub ablated: Vec<f64>,
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Writes `ablation.csv` (setting,trial,seed,welfare), `summary.csv` (setting,mean,std)
/// and `run_log.json`.
pub fn cmd_ablate(c: &Common, spec: AblationSpec, checkpoint: Option<&Path>, trials: Option<usize>) -> Result<AblationOutcome> {
    let cfg = load_config(c)?;
    let trials = trials.unwrap_or(cfg.evaluation.trials);
    if trials == 0 {
        return Err(Error::validation("trials", "must be at least 1"));
    }
    let base = SimSettings::from_config(&cfg);
    let mut ablated = base.clone();
    ablated.priors = spec.priors(&base.priors);

    let (mut het_policy, mut abl_policy) = match checkpoint {
        Some(p) => {
            let ckpt = load_checkpoint(p)?;
            let d = evaluation_driver(&cfg, Some(&ckpt))?.expect("checkpoint given");
            (d.clone(), d)
        }
        None => {
            let h = train_config(&cfg, None)?;
            let a = train_config(&cfg, Some(&spec))?;
            (FrozenPolicy::new(h.params, h.normalizer), FrozenPolicy::new(a.params, a.normalizer))
        }
    };
    abl_policy.mask = spec.mask();
    het_policy.mask = None;

    let seeds: Vec<u64> = (0..trials as u64).map(|t| derive_seed(cfg.seed, STREAM_SIMULATE, t)).collect();
    let mut het = Vec::with_capacity(trials);
    let mut abl = Vec::with_capacity(trials);
    for &s in &seeds {
        het.push(social_welfare(&run_episode(&base, &mut het_policy, s)?));
        abl.push(social_welfare(&run_episode(&ablated, &mut abl_policy, s)?));
    }

    let label = format!("{}-{}", serde_plain(&spec.mode), serde_plain(&spec.trait_name));
    write_with(&c.out.join("ablation.csv"), |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["setting", "trial", "seed", "welfare"])?;
        for (name, xs) in [("heterogeneous", &het), (label.as_str(), &abl)] {
            for (k, v) in xs.iter().enumerate() {
                w.write_record([name.to_string(), k.to_string(), seeds[k].to_string(), v.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    })?;
    write_with(&c.out.join("summary.csv"), |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["setting", "mean", "std"])?;
        for (name, xs) in [("heterogeneous", &het), (label.as_str(), &abl)] {
            let (m, s) = mean_std(xs);
            w.write_record([name.to_string(), m.to_string(), s.to_string()])?;
            println!("{name}: {m:.4} ± {s:.4}");
        }
        w.flush()?;
        Ok(())
    })?;
    write_json(
        &c.out.join("run_log.json"),
        &AblationRunLog {
            spec,
            trials,
            trial_seeds: seeds,
            trained: checkpoint.is_none(),
            trait_sampling_modified: ablated.priors != base.priors,
            observation_masked: abl_policy.mask.is_some(),
            mask_index: abl_policy.mask,
            welfare_discounting: "true discount factor of each agent",
        },
    )?;
    Ok(AblationOutcome { heterogeneous: het, ablated: abl })
}

fn serde_plain<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
}

/// Runs one episode with the frozen policy and writes `activations.csv`; returns the row count.
pub fn cmd_probe(c: &Common, checkpoint: &Path) -> Result<usize> {
    let cfg = load_config(c)?;
    let ckpt = load_checkpoint(checkpoint)?;
    let mut policy = evaluation_driver(&cfg, Some(&ckpt))?.expect("checkpoint given");
    policy.record_activations = true;
    run_episode(&SimSettings::from_config(&cfg), &mut policy, derive_seed(cfg.seed, STREAM_SIMULATE, 0))?;
    let width = ckpt.params.hidden_width();
    write_with(&c.out.join("activations.csv"), |w| {
        let mut w = csv::Writer::from_writer(w);
        let header: Vec<String> = (0..width).map(|i| format!("h2_{i}")).chain(OBS_NAMES.iter().map(|s| s.to_string())).collect();
        w.write_record(&header)?;
        for (h, obs) in &policy.activations {
            w.write_record(h.iter().chain(obs.iter()).map(f64::to_string))?;
        }
        w.flush()?;
        Ok(())
    })?;
    Ok(policy.activations.len())
}
