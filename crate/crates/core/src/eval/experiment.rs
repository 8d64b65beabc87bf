//! The controlled experiment: from a ground-truth system to recovery rates,
//! conformance scores and paired comparisons.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_rates, split_system, MetricsReport, SystemTruth};
use super::stats::{paired_comparison, PairedComparison};
use crate::conformance::{avatar_generalization, system_fitness, system_precision, EtcPrecision, TokenReplay};
use crate::error::{Error, Result};
use crate::genmodel::{train_model, TrainConfig, TrainedModel};
use crate::log::{build_variant_logs, synth_event_log, Variant, VariantLog};
use crate::petri::{dfg_discover, flower_model, playout_with, trace_model, PetriNet, PlayoutOptions, DEFAULT_BUDGET};
use crate::rng::{derive_seed, derive_seed_str};
use crate::sampling::{mh_sample, naive_sample, MhConfig, SampleResult, Tempered};

/// Version of the report layout.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMode {
    Naive,
    Mh,
}

/// One way of drawing `V̂_S` from the trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub name: String,
    pub mode: SamplerMode,
    pub temperature: f64,
    /// Draws for naive sampling.
    pub k: u64,
    pub union_observed: bool,
    pub mh: MhConfig,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            name: "naive".into(),
            mode: SamplerMode::Naive,
            temperature: 1.0,
            k: 10_000,
            union_observed: false,
            mh: MhConfig::default(),
        }
    }
}

impl SamplerConfig {
    pub fn naive(name: &str, temperature: f64) -> Self {
        SamplerConfig {
            name: name.into(),
            temperature,
            ..Default::default()
        }
    }

    pub fn mh(name: &str, temperature: f64) -> Self {
        SamplerConfig {
            name: name.into(),
            mode: SamplerMode::Mh,
            temperature,
            ..Default::default()
        }
    }

    /// Draws `V̂_S` with the given model.
    pub fn sample(&self, model: &TrainedModel, lplus: &crate::log::UniqueVariantLog, seed: u64) -> Result<SampleResult> {
        let g = Tempered {
            generator: &model.generator,
            tau: self.temperature,
        };
        match self.mode {
            SamplerMode::Naive => {
                naive_sample(&g, lplus, self.k, self.union_observed, &mut ChaCha8Rng::seed_from_u64(seed))
            }
            SamplerMode::Mh => {
                let mut r = mh_sample(&g, &model.d_p, lplus, &model.holdout_log(), &self.mh, seed)?;
                if self.union_observed {
                    r.v_hat_s.extend(lplus.iter().cloned());
                    r.v_hat_u.retain(|v| !lplus.contains(v));
                }
                Ok(r)
            }
        }
    }
}

/// Models compared against the samplers on every system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// Plays out exactly `L+`.
    Trace,
    /// Any sequence over the log alphabet.
    Flower,
    /// Directly-follows net discovered from `L*`.
    Dfg,
}

impl Baseline {
    pub fn name(self) -> &'static str {
        match self {
            Baseline::Trace => "trace",
            Baseline::Flower => "flower",
            Baseline::Dfg => "dfg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Share of `V_S` that is observed.
    pub split_ratio: f64,
    pub token_cap: u32,
    /// Expansion budget for every playout.
    pub playout_budget: u64,
    pub train: TrainConfig,
    pub samplers: Vec<SamplerConfig>,
    pub baselines: Vec<Baseline>,
    /// Compare samplers with models across systems.
    pub statistics: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            split_ratio: 0.7,
            token_cap: 3,
            playout_budget: DEFAULT_BUDGET,
            train: TrainConfig {
                order: 1,
                smoothing: 0.001,
                seen_context: true,
                ..TrainConfig::default()
            },
            samplers: vec![
                SamplerConfig::naive("naive_t0.8", 0.8),
                SamplerConfig::naive("naive_t1.2", 1.2),
                SamplerConfig::mh("mh_t0.8", 0.8),
                SamplerConfig::mh("mh_t1.2", 1.2),
            ],
            baselines: vec![Baseline::Trace, Baseline::Flower, Baseline::Dfg],
            statistics: true,
        }
    }
}

/// The ground truth of one system.
#[derive(Debug, Clone)]
pub enum GroundTruth {
    /// A net whose playout up to `max_len` is `V_S`.
    Net { net: PetriNet, max_len: usize },
    /// `V_S` given directly; it is split as usual.
    Variants(BTreeSet<Variant>),
    /// A ready-made split.
    Split(SystemTruth),
}

/// One system of an experiment, with any extra nets to evaluate on it.
#[derive(Debug, Clone)]
pub struct ExperimentSystem {
    pub name: String,
    pub truth: GroundTruth,
    pub models: Vec<(String, PetriNet)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerReport {
    pub name: String,
    pub mode: SamplerMode,
    pub temperature: f64,
    pub seed: u64,
    pub draw_count: u64,
    pub acceptance_rate: Option<f64>,
    pub metrics: MetricsReport,
}

/// Conformance of a net against one estimated system log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationEntry {
    pub sampler: String,
    pub fitness: f64,
    pub precision: f64,
    pub generalization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogConformance {
    pub fitness: f64,
    pub precision: f64,
    pub generalization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub name: String,
    /// `|V_PN|` at the log's maximal length, if the playout fit the budget.
    pub playout_count: Option<usize>,
    pub playout_error: Option<String>,
    pub metrics: Option<MetricsReport>,
    pub system_fitness: Option<f64>,
    pub system_precision: Option<f64>,
    /// Token-replay fitness and escaping-edge precision on the observed log.
    pub observed_log: LogConformance,
    /// The same against each sampler's estimate.
    pub generalization: Vec<GeneralizationEntry>,
    /// Arithmetic mean of `generalization`.
    pub mean_generalization: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub train_size: usize,
    pub holdout_size: usize,
    pub selected_round: usize,
    pub snapshot_tp_e: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemReport {
    pub name: String,
    pub seed: u64,
    pub alphabet_size: usize,
    pub system_variants: usize,
    pub observed_variants: usize,
    pub unobserved_variants: usize,
    /// Longest observed variant, the playout bound for every model.
    pub log_max_len: usize,
    pub training: TrainingSummary,
    pub samplers: Vec<SamplerReport>,
    pub models: Vec<ModelReport>,
}

/// Paired comparison of a sampler's `s` with a model's `s` over systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub sampler: String,
    pub model: String,
    pub comparison: PairedComparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub systems: Vec<SystemReport>,
    pub comparisons: Vec<ComparisonReport>,
    pub notes: Vec<String>,
}

fn stage<T>(r: Result<T>, system: &str, what: &str) -> Result<T> {
    r.map_err(|e| e.at(format!("{system}: {what}")))
}

fn conformance_on(net: &PetriNet, lstar: &VariantLog) -> (f64, f64) {
    let fit = TokenReplay::default().replay_log(net, lstar).fitness();
    let prec = EtcPrecision::default().escaping_edges(net, lstar);
    let prec = if prec.1 == 0 { 0.0 } else { 1.0 - prec.0 as f64 / prec.1 as f64 };
    (fit, prec)
}

fn run_system(sys: &ExperimentSystem, index: usize, cfg: &ExperimentConfig) -> Result<SystemReport> {
    let name = sys.name.as_str();
    let seed = derive_seed(cfg.seed, &[index as u64]);
    let playout = |net: &PetriNet, max_len: usize| {
        playout_with(
            net,
            &PlayoutOptions::new(max_len).token_cap(cfg.token_cap).budget(cfg.playout_budget),
        )
    };
    let truth = match &sys.truth {
        GroundTruth::Net { net, max_len } => {
            let v_s = stage(playout(net, *max_len), name, "system playout")?;
            stage(split_system(&v_s, cfg.split_ratio, derive_seed_str(seed, "split")), name, "split")?
        }
        GroundTruth::Variants(v_s) => {
            stage(split_system(v_s, cfg.split_ratio, derive_seed_str(seed, "split")), name, "split")?
        }
        GroundTruth::Split(t) => t.clone(),
    };
    let log = stage(synth_event_log(truth.lplus.iter(), derive_seed_str(seed, "log")), name, "event log")?;
    let (lstar, _) = stage(build_variant_logs(&log), name, "variant log")?;
    let mu = truth.lplus.max_len();

    let train_cfg = TrainConfig {
        seed: derive_seed_str(seed, "train"),
        ..cfg.train.clone()
    };
    let model = stage(train_model(&truth.lplus, &train_cfg), name, "training")?;
    let holdout = model.holdout_log();

    let mut samplers = Vec::with_capacity(cfg.samplers.len());
    let mut estimates = Vec::with_capacity(cfg.samplers.len());
    for sc in &cfg.samplers {
        let s_seed = derive_seed_str(seed, &format!("sampler/{}", sc.name));
        let res = stage(sc.sample(&model, &truth.lplus, s_seed), name, &format!("sampler {}", sc.name))?;
        let metrics = compute_rates(&res.v_hat_s, &truth, Some(&holdout))?;
        samplers.push(SamplerReport {
            name: sc.name.clone(),
            mode: sc.mode,
            temperature: sc.temperature,
            seed: s_seed,
            draw_count: res.draw_count,
            acceptance_rate: res.acceptance_rate,
            metrics,
        });
        estimates.push(VariantLog::new(res.v_hat_s.into_iter().collect()));
    }

    let mut nets: Vec<(String, PetriNet)> = Vec::new();
    for b in &cfg.baselines {
        let net = match b {
            Baseline::Trace => trace_model(&truth.lplus),
            Baseline::Flower => flower_model(&log.alphabet()),
            Baseline::Dfg => dfg_discover(&lstar),
        };
        nets.push((b.name().to_string(), stage(net, name, &format!("{} model", b.name()))?));
    }
    nets.extend(sys.models.iter().cloned());

    let mut models = Vec::with_capacity(nets.len());
    for (model_name, net) in &nets {
        let (playout_count, playout_error, metrics, sfit, sprec) = match playout(net, mu) {
            Ok(v_pn) => (
                Some(v_pn.len()),
                None,
                Some(compute_rates(&v_pn, &truth, Some(&holdout))?),
                Some(system_fitness(&v_pn, &truth.v_s)?),
                Some(system_precision(&v_pn, &truth.v_s)),
            ),
            Err(e @ Error::Budget { .. }) => (None, Some(e.to_string()), None, None, None),
            Err(e) => return Err(e.at(format!("{name}: playout of {model_name}"))),
        };
        let (fit, prec) = conformance_on(net, &lstar);
        let generalization: Vec<GeneralizationEntry> = cfg
            .samplers
            .iter()
            .zip(&estimates)
            .filter(|(_, est)| !est.is_empty())
            .map(|(sc, est)| {
                let (fitness, precision) = conformance_on(net, est);
                GeneralizationEntry {
                    sampler: sc.name.clone(),
                    fitness,
                    precision,
                    generalization: avatar_generalization(fitness, precision),
                }
            })
            .collect();
        let mean_generalization = (!generalization.is_empty())
            .then(|| generalization.iter().map(|g| g.generalization).sum::<f64>() / generalization.len() as f64);
        models.push(ModelReport {
            name: model_name.clone(),
            playout_count,
            playout_error,
            metrics,
            system_fitness: sfit,
            system_precision: sprec,
            observed_log: LogConformance {
                fitness: fit,
                precision: prec,
                generalization: avatar_generalization(fit, prec),
            },
            generalization,
            mean_generalization,
        });
    }

    Ok(SystemReport {
        name: name.to_string(),
        seed,
        alphabet_size: log.alphabet().len(),
        system_variants: truth.v_s.len(),
        observed_variants: truth.lplus.len(),
        unobserved_variants: truth.v_u.len(),
        log_max_len: mu,
        training: TrainingSummary {
            train_size: model.train.len(),
            holdout_size: model.holdout.len(),
            selected_round: model.snapshots[model.selected].round,
            snapshot_tp_e: model.snapshots.iter().map(|s| s.tp_e).collect(),
        },
        samplers,
        models,
    })
}

/// Upper-tailed comparisons of every sampler's `s` against every model's
/// `s`, over the systems where both are available.
fn compare(systems: &[SystemReport], cfg: &ExperimentConfig) -> Result<Vec<ComparisonReport>> {
    let mut out = Vec::new();
    let Some(first) = systems.first() else {
        return Ok(out);
    };
    for sc in &cfg.samplers {
        for m in &first.models {
            let mut a = Vec::new();
            let mut b = Vec::new();
            for sys in systems {
                let s = sys.samplers.iter().find(|x| x.name == sc.name).map(|x| x.metrics.s);
                let t = sys
                    .models
                    .iter()
                    .find(|x| x.name == m.name)
                    .and_then(|x| x.metrics.as_ref())
                    .map(|x| x.s);
                if let (Some(s), Some(t)) = (s, t) {
                    a.push(s);
                    b.push(t);
                }
            }
            if a.len() >= 2 {
                out.push(ComparisonReport {
                    sampler: sc.name.clone(),
                    model: m.name.clone(),
                    comparison: paired_comparison(&a, &b)?,
                });
            }
        }
    }
    Ok(out)
}

/// Runs the whole protocol on every system. Systems run in parallel on
/// the current rayon pool; the report depends only on the inputs and the
/// seed, never on the number of threads.
pub fn run_experiment(systems: &[ExperimentSystem], cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if systems.is_empty() {
        return Err(Error::invalid("an experiment needs at least one system"));
    }
    if cfg.samplers.is_empty() && cfg.baselines.is_empty() && systems.iter().all(|s| s.models.is_empty()) {
        return Err(Error::invalid("an experiment needs at least one model or sampler"));
    }
    let mut names = BTreeSet::new();
    for s in cfg.samplers.iter().map(|s| &s.name) {
        if !names.insert(s) {
            return Err(Error::invalid(format!("duplicate sampler name {s:?}")));
        }
    }
    cfg.train.validate()?;
    let reports = systems
        .par_iter()
        .enumerate()
        .map(|(i, s)| run_system(s, i, cfg))
        .collect::<Result<Vec<_>>>()?;
    let comparisons = if cfg.statistics { compare(&reports, cfg)? } else { Vec::new() };
    let mut notes = Vec::new();
    if cfg.statistics && reports.len() < 15 {
        notes.push(format!(
            "paired tests use {} systems; critical values differ from a 15-system study",
            reports.len()
        ));
    }
    Ok(ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        seed: cfg.seed,
        config: cfg.clone(),
        systems: reports,
        comparisons,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{build_system, SystemSpec};

    fn quick_cfg() -> ExperimentConfig {
        ExperimentConfig {
            train: TrainConfig {
                disc_epochs: 5,
                refine_rounds: 1,
                refine_samples: 300,
                selection_samples: 1_000,
                ..Default::default()
            },
            samplers: vec![
                SamplerConfig {
                    k: 1_000,
                    ..SamplerConfig::naive("naive", 0.8)
                },
                SamplerConfig {
                    mh: MhConfig {
                        kappa: 50,
                        patience: 100,
                        ..Default::default()
                    },
                    ..SamplerConfig::mh("mh", 1.0)
                },
            ],
            ..Default::default()
        }
    }

    fn system(seed: u64) -> ExperimentSystem {
        let spec = SystemSpec {
            seed,
            depth: 3,
            alphabet_budget: 30,
            ..Default::default()
        };
        let s = build_system(&spec).unwrap();
        ExperimentSystem {
            name: format!("sys{seed}"),
            truth: GroundTruth::Net {
                net: s.net,
                max_len: s.length_bound,
            },
            models: vec![],
        }
    }

    #[test]
    fn baselines_behave() {
        let vs: BTreeSet<Variant> = (0..20)
            .map(|i| Variant::from_labels([format!("a{}", i % 4), format!("b{}", i / 4), "c".to_string()]).unwrap())
            .collect();
        let sys = ExperimentSystem {
            name: "toy".into(),
            truth: GroundTruth::Variants(vs),
            models: vec![],
        };
        let r = run_experiment(&[sys], &quick_cfg()).unwrap();
        let s = &r.systems[0];
        assert_eq!((s.observed_variants, s.unobserved_variants), (14, 6));
        let trace = s.models.iter().find(|m| m.name == "trace").unwrap();
        let m = trace.metrics.as_ref().unwrap();
        assert_eq!((m.tp, m.tp_u, m.tp_o), (1.0, 0.0, 1.0));
        assert_eq!((trace.observed_log.fitness, trace.observed_log.precision), (1.0, 1.0));
        let flower = s.models.iter().find(|m| m.name == "flower").unwrap();
        let m = flower.metrics.as_ref().unwrap();
        assert_eq!((m.tp_o, m.tp_u), (1.0, 1.0));
        assert!(m.tp <= 20.0 / flower.playout_count.unwrap() as f64 + 1e-12);
        assert_eq!(flower.generalization.len(), 2);
    }

    #[test]
    fn reproducible_across_pools() {
        let systems: Vec<_> = (0..3).map(system).collect();
        let cfg = quick_cfg();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| run_experiment(&systems, &cfg)).unwrap();
        let b = four.install(|| run_experiment(&systems, &cfg)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.comparisons.len(), 2 * 3);
    }

    #[test]
    fn rejects_empty_inputs() {
        assert!(run_experiment(&[], &quick_cfg()).is_err());
        let cfg = ExperimentConfig {
            samplers: vec![],
            baselines: vec![],
            ..quick_cfg()
        };
        assert!(run_experiment(&[system(1)], &cfg).is_err());
    }
}
