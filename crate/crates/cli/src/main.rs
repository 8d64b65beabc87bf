//! `avatar`: playout, discovery, conformance, training, sampling, metrics
//! and the controlled experiment from the command line.
//!
//! Exit codes: 0 on success, 1 on a domain error, 2 on a usage error.

mod io;
mod pretty;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use avatar_core::conformance::{avatar_generalization, EtcPrecision, ReplayCounts, TokenReplay};
use avatar_core::eval::{
    compute_rates, run_experiment, ExperimentConfig, ExperimentSystem, GroundTruth, SamplerConfig, SamplerMode,
    SystemTruth, REPORT_SCHEMA_VERSION,
};
use avatar_core::genmodel::{train_model, TrainConfig, TrainedModel};
use avatar_core::log::{variants_to_tsv, UniqueVariantLog};
use avatar_core::petri::{dfg_discover, playout_with, PlayoutOptions, DEFAULT_BUDGET};
use avatar_core::sampling::{MhConfig, SampleResult};
use avatar_core::systems::{build_system, complexity_profile, select_systems, SelectionCriteria, SystemSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "avatar", version, about = "Estimate unobserved system behaviour and score process models against it")]
struct Cli {
    /// Human-readable tables on stdout instead of JSON, where available.
    #[arg(long, global = true)]
    pretty: bool,
    /// On a domain error, print `{"error": {"kind", "message"}}` to stderr.
    #[arg(long, global = true)]
    error_json: bool,
    /// Worker threads; defaults to the available parallelism. Results do
    /// not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the variants a net can play out (variant TSV).
    Playout(PlayoutArgs),
    /// Discover a directly-follows net from a log (PN JSON).
    DiscoverDfg(DiscoverArgs),
    /// Token-replay fitness, escaping-edge precision and generalization.
    Conformance(ConformanceArgs),
    /// Fit the n-gram generator and discriminators (model JSON).
    Train(TrainArgs),
    /// Estimate system variants with a trained model.
    Sample(SampleArgs),
    /// Recovery rates of an estimate against a known system.
    Metrics(MetricsArgs),
    /// Generate a block-structured ground-truth net (PN JSON).
    GenSystem(GenSystemArgs),
    /// Run the controlled experiment and write the report JSON.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct OutArg {
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlayoutArgs {
    /// Net in PN JSON.
    #[arg(long)]
    net: PathBuf,
    #[arg(long)]
    max_len: usize,
    #[arg(long, default_value_t = 3)]
    token_cap: u32,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    /// Ignore the net's final markings and record every dead end.
    #[arg(long)]
    permissive_playout: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct DiscoverArgs {
    /// Event log CSV (`case_id,activity,timestamp`) or variant TSV.
    #[arg(long)]
    log: PathBuf,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct ConformanceArgs {
    #[arg(long)]
    net: PathBuf,
    /// Event log CSV or variant TSV.
    #[arg(long)]
    log: PathBuf,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct TrainArgs {
    /// Observed variants: event log CSV or variant TSV, deduplicated.
    #[arg(long)]
    log: PathBuf,
    /// Training configuration JSON; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// n-gram order `m`.
    #[arg(long)]
    order: Option<usize>,
    /// Additive smoothing `λ`.
    #[arg(long)]
    smoothing: Option<f64>,
    /// Refine n-gram contexts by the set of activities already seen.
    #[arg(long)]
    seen_context: bool,
    /// Temperature used when selecting a snapshot.
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    refine_rounds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Naive,
    Mh,
}

#[derive(Args)]
struct SampleArgs {
    /// Model JSON written by `train`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value = "naive")]
    mode: ModeArg,
    /// Sampling temperature `τ`.
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
    /// Naive draws.
    #[arg(long, default_value_t = 10_000)]
    k: u64,
    /// MH chain length `κ`.
    #[arg(long, default_value_t = 500)]
    kappa: u32,
    /// Consecutive chains without a new variant before MH stops.
    #[arg(long, default_value_t = 1_000)]
    patience: u32,
    /// Upper bound on the number of MH chains.
    #[arg(long, default_value_t = 10_000)]
    max_chains: u64,
    /// Emit each chain's last proposal rather than its state.
    #[arg(long)]
    strict_pseudocode: bool,
    /// Add the observed variants to the estimate.
    #[arg(long)]
    union_observed: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the estimate as variant TSV.
    #[arg(long)]
    variants_out: Option<PathBuf>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct MetricsArgs {
    /// Estimated system variants (TSV).
    #[arg(long)]
    estimate: PathBuf,
    /// All system variants `V_S` (TSV).
    #[arg(long)]
    system: PathBuf,
    /// Observed variants `L+` (TSV); `V_u` is the rest of `V_S`.
    #[arg(long)]
    observed: PathBuf,
    /// Holdout `L+_e` (TSV) for `tp_e`.
    #[arg(long)]
    holdout: Option<PathBuf>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct GenSystemArgs {
    /// System spec JSON; flags below override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    alphabet_budget: Option<u32>,
    #[arg(long)]
    loop_unroll: Option<u32>,
    #[arg(long)]
    silent_skip: bool,
    #[arg(long)]
    duplicate_label: bool,
    /// Write `{spec, length_bound, profile}` JSON here.
    #[arg(long)]
    meta_out: Option<PathBuf>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Experiment configuration JSON; `--seed` overrides its seed.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ground-truth nets; when none are given, desk-scale systems are
    /// generated from the seed.
    #[arg(long = "net")]
    nets: Vec<PathBuf>,
    /// Playout bound for `--net` systems.
    #[arg(long, default_value_t = 10)]
    max_len: usize,
    /// Number of generated systems.
    #[arg(long, default_value_t = 5)]
    systems: usize,
    /// Extra nets evaluated on every system next to the baselines.
    #[arg(long = "model")]
    models: Vec<PathBuf>,
    #[command(flatten)]
    out: OutArg,
}

/// Template for generated experiment systems: candidates are tried from
/// seed `seed` upwards.
fn experiment_template(seed: u64) -> SystemSpec {
    SystemSpec {
        seed,
        alphabet_budget: 30,
        ..SystemSpec::default()
    }
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

#[derive(Serialize)]
struct ConformanceOutput {
    fitness: f64,
    precision: f64,
    generalization: f64,
    fitness_method: &'static str,
    precision_method: &'static str,
    replay: ReplayCounts,
    escaping_edges: u64,
    allowed_edges: u64,
}

#[derive(Serialize)]
struct SampleOutput<'a> {
    seed: u64,
    config: &'a SamplerConfig,
    result: &'a SampleResult,
}

#[derive(Serialize)]
struct SystemMeta<'a> {
    spec: &'a SystemSpec,
    length_bound: usize,
    profile: avatar_core::systems::ComplexityProfile,
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Playout(a) => {
            let mut net = io::read_net(&a.net)?;
            if a.permissive_playout {
                net = net.without_final_markings();
            }
            let opts = PlayoutOptions::new(a.max_len).token_cap(a.token_cap).budget(a.budget);
            let vs = playout_with(&net, &opts)?;
            io::emit(&a.out.out, &variants_to_tsv(&vs)?)
        }
        Command::DiscoverDfg(a) => {
            let lstar = io::read_log(&a.log)?;
            io::emit(&a.out.out, &(dfg_discover(&lstar)?.to_json() + "\n"))
        }
        Command::Conformance(a) => {
            let net = io::read_net(&a.net)?;
            let lstar = io::read_log(&a.log)?;
            let replay = TokenReplay::default();
            let etc = EtcPrecision::default();
            let counts = replay.replay_log(&net, &lstar);
            let (esc, allowed) = etc.escaping_edges(&net, &lstar);
            let precision = if allowed == 0 { 0.0 } else { 1.0 - esc as f64 / allowed as f64 };
            let out = ConformanceOutput {
                fitness: counts.fitness(),
                precision,
                generalization: avatar_generalization(counts.fitness(), precision),
                fitness_method: "token_replay",
                precision_method: "etc",
                replay: counts,
                escaping_edges: esc,
                allowed_edges: allowed,
            };
            if cli.pretty {
                io::emit(&a.out.out, &pretty::conformance(out.fitness, out.precision, out.generalization))
            } else {
                io::emit(&a.out.out, &json(&out)?)
            }
        }
        Command::Train(a) => {
            let lplus: UniqueVariantLog = io::read_log(&a.log)?.iter().cloned().collect();
            let mut cfg: TrainConfig = match &a.config {
                Some(p) => io::read_json(p)?,
                None => TrainConfig::default(),
            };
            if let Some(x) = a.order {
                cfg.order = x;
            }
            if let Some(x) = a.smoothing {
                cfg.smoothing = x;
            }
            if a.seen_context {
                cfg.seen_context = true;
            }
            if let Some(x) = a.temperature {
                cfg.temperature = x;
            }
            if let Some(x) = a.refine_rounds {
                cfg.refine_rounds = x;
            }
            if let Some(x) = a.seed {
                cfg.seed = x;
            }
            let model = train_model(&lplus, &cfg)?;
            io::emit(&a.out.out, &json(&model)?)
        }
        Command::Sample(a) => {
            let model: TrainedModel = io::read_json(&a.model)?;
            let cfg = sampler_config(a);
            let lplus = observed_of(&model);
            let result = cfg.sample(&model, &lplus, a.seed)?;
            if let Some(p) = &a.variants_out {
                io::emit(&Some(p.clone()), &variants_to_tsv(&result.v_hat_s)?)?;
            }
            io::emit(
                &a.out.out,
                &json(&SampleOutput {
                    seed: a.seed,
                    config: &cfg,
                    result: &result,
                })?,
            )
        }
        Command::Metrics(a) => {
            let estimate = io::read_variant_set(&a.estimate)?;
            let system = io::read_variant_set(&a.system)?.into_iter().collect();
            let observed: UniqueVariantLog = io::read_variants_file(&a.observed)?.into_iter().collect();
            let truth = SystemTruth::new(system, observed)?;
            let holdout = a.holdout.as_ref().map(|p| io::read_variant_set(p)).transpose()?;
            let report = compute_rates(&estimate, &truth, holdout.as_ref().map(|h| h as _))?;
            if cli.pretty {
                io::emit(&a.out.out, &pretty::metrics(&report))
            } else {
                io::emit(&a.out.out, &json(&report)?)
            }
        }
        Command::GenSystem(a) => {
            let mut spec: SystemSpec = match &a.spec {
                Some(p) => io::read_json(p)?,
                None => SystemSpec::default(),
            };
            if let Some(x) = a.seed {
                spec.seed = x;
            }
            if let Some(x) = a.depth {
                spec.depth = x;
            }
            if let Some(x) = a.alphabet_budget {
                spec.alphabet_budget = x;
            }
            if let Some(x) = a.loop_unroll {
                spec.loop_unroll = x;
            }
            spec.silent_skip |= a.silent_skip;
            spec.duplicate_label |= a.duplicate_label;
            let sys = build_system(&spec)?;
            if let Some(p) = &a.meta_out {
                let profile = complexity_profile(&sys.net, 3, sys.length_bound, DEFAULT_BUDGET)?;
                let meta = SystemMeta {
                    spec: &spec,
                    length_bound: sys.length_bound,
                    profile,
                };
                io::emit(&Some(p.clone()), &json(&meta)?)?;
            }
            io::emit(&a.out.out, &(sys.net.to_json() + "\n"))
        }
        Command::Experiment(a) => {
            let mut cfg: ExperimentConfig = match &a.config {
                Some(p) => io::read_json(p)?,
                None => ExperimentConfig::default(),
            };
            cfg.seed = a.seed;
            let extra = a
                .models
                .iter()
                .map(|p| Ok((io::stem(p), io::read_net(p)?)))
                .collect::<Result<Vec<_>>>()?;
            let systems: Vec<ExperimentSystem> = if a.nets.is_empty() {
                if a.systems == 0 {
                    bail!(avatar_core::Error::invalid("--systems must be at least 1"));
                }
                select_systems(&experiment_template(a.seed), a.systems, &SelectionCriteria::default())?
                    .into_iter()
                    .map(|(spec, sys, _)| ExperimentSystem {
                        name: format!("system_{}", spec.seed),
                        truth: GroundTruth::Net {
                            net: sys.net,
                            max_len: sys.length_bound,
                        },
                        models: extra.clone(),
                    })
                    .collect()
            } else {
                a.nets
                    .iter()
                    .map(|p| {
                        Ok(ExperimentSystem {
                            name: io::stem(p),
                            truth: GroundTruth::Net {
                                net: io::read_net(p)?,
                                max_len: a.max_len,
                            },
                            models: extra.clone(),
                        })
                    })
                    .collect::<Result<_>>()?
            };
            let started = Instant::now();
            let report = run_experiment(&systems, &cfg)?;
            eprintln!(
                "experiment: {} systems in {:.1}s (schema {REPORT_SCHEMA_VERSION})",
                report.systems.len(),
                started.elapsed().as_secs_f64()
            );
            if cli.pretty {
                io::emit(&a.out.out, &pretty::experiment(&report))
            } else {
                io::emit(&a.out.out, &json(&report)?)
            }
        }
    }
}

fn sampler_config(a: &SampleArgs) -> SamplerConfig {
    let mode = match a.mode {
        ModeArg::Naive => SamplerMode::Naive,
        ModeArg::Mh => SamplerMode::Mh,
    };
    SamplerConfig {
        name: match mode {
            SamplerMode::Naive => "naive".into(),
            SamplerMode::Mh => "mh".into(),
        },
        mode,
        temperature: a.temperature,
        k: a.k,
        union_observed: a.union_observed,
        mh: MhConfig {
            kappa: a.kappa,
            patience: a.patience,
            strict_pseudocode: a.strict_pseudocode,
            max_chains: a.max_chains,
            ..MhConfig::default()
        },
    }
}

/// `L+` of a trained model: its training part followed by its holdout.
fn observed_of(model: &TrainedModel) -> UniqueVariantLog {
    model.train.iter().chain(&model.holdout).cloned().collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.unwrap_or(0)).build();
    let result = match pool {
        Ok(pool) => pool.install(|| run(&cli)),
        Err(e) => Err(e).context("cannot start worker threads"),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e
                .downcast_ref::<avatar_core::Error>()
                .map(avatar_core::Error::kind)
                .or_else(|| e.downcast_ref::<std::io::Error>().map(|_| "io"))
                .or_else(|| e.downcast_ref::<serde_json::Error>().map(|_| "json"))
                .unwrap_or("error");
            if cli.error_json {
                let body = serde_json::json!({ "error": { "kind": kind, "message": format!("{e:#}") } });
                eprintln!("{body}");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(1)
        }
    }
}
