use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{FeatureScorer, NGramGenerator, SparseFeatures};
use crate::error::{Error, Result};
use crate::log::{split_holdout, UniqueVariantLog, Variant};
use crate::losses::{gradient_on_features, loss_on_features, LossKind};
use crate::rng::{derive_seed_str, substream};

/// Hyperparameters of the built-in generator and discriminators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// n-gram order `m`.
    pub order: usize,
    /// Additive smoothing `λ`.
    pub smoothing: f64,
    /// Refine contexts by the set of activities already seen.
    pub seen_context: bool,
    /// Sampling temperature `τ` used during selection.
    pub temperature: f64,
    /// Share of `L+` used for training; the rest is the holdout `L+_e`.
    pub train_fraction: f64,
    /// Passes over the data per discriminator training run.
    pub disc_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Record the held-out loss every this many passes.
    pub eval_interval: usize,
    /// Refinement rounds `R`.
    pub refine_rounds: usize,
    /// Samples per refinement round `N`.
    pub refine_samples: usize,
    /// Samples scoring above `θ` are reinforced.
    pub refine_threshold: f64,
    /// Reinforcement weight `w`.
    pub refine_weight: f64,
    /// Draws per snapshot when computing `tp_e`.
    pub selection_samples: u64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            order: 3,
            smoothing: 0.1,
            seen_context: false,
            temperature: 1.0,
            train_fraction: 0.9,
            disc_epochs: 30,
            batch_size: 64,
            learning_rate: 0.2,
            eval_interval: 1,
            refine_rounds: 5,
            refine_samples: 2_000,
            refine_threshold: 0.5,
            refine_weight: 0.5,
            selection_samples: 10_000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("order", self.order as f64),
            ("temperature", self.temperature),
            ("train_fraction", self.train_fraction),
            ("disc_epochs", self.disc_epochs as f64),
            ("batch_size", self.batch_size as f64),
            ("learning_rate", self.learning_rate),
            ("eval_interval", self.eval_interval as f64),
            ("refine_samples", self.refine_samples as f64),
            ("selection_samples", self.selection_samples as f64),
        ];
        for (name, x) in positive {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {x}")));
            }
        }
        if self.train_fraction >= 1.0 {
            return Err(Error::invalid("train_fraction must be below 1"));
        }
        if self.smoothing.is_nan() || self.smoothing < 0.0 || self.refine_weight.is_nan() || self.refine_weight < 0.0 {
            return Err(Error::invalid("smoothing and refine_weight must be non-negative"));
        }
        Ok(())
    }
}

/// Which objective a discriminator is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscriminatorLoss {
    /// Logistic cross-entropy; yields `D_p`.
    Standard,
    /// Paired relativistic loss; yields `D_r`.
    Relativistic,
}

impl DiscriminatorLoss {
    fn kind(self) -> LossKind {
        match self {
            DiscriminatorLoss::Standard => LossKind::StandardDLogistic,
            DiscriminatorLoss::Relativistic => LossKind::RelativisticD,
        }
    }
}

/// Pairs every element of the longer list with a cyclically repeated
/// element of the shorter one.
fn pair_up<T: Clone>(a: &[T], b: &[T]) -> (Vec<T>, Vec<T>) {
    let n = a.len().max(b.len());
    (
        (0..n).map(|i| a[i % a.len()].clone()).collect(),
        (0..n).map(|i| b[i % b.len()].clone()).collect(),
    )
}

/// Minibatch gradient descent on `d`. A fifth of each class (when there
/// are at least five) is held out; the held-out loss is recorded every
/// `eval_interval` passes and returned alongside the trained scorer.
pub fn train_discriminator(
    d: &FeatureScorer,
    positives: &[Variant],
    negatives: &[Variant],
    cfg: &TrainConfig,
    loss: DiscriminatorLoss,
    rng: &mut dyn RngCore,
) -> Result<(FeatureScorer, Vec<f64>)> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::invalid("discriminator training needs both classes"));
    }
    let feats = |vs: &[Variant]| -> Vec<SparseFeatures> { vs.iter().map(|v| d.features(v)).collect() };
    let mut pos = feats(positives);
    let mut neg = feats(negatives);
    pos.shuffle(rng);
    neg.shuffle(rng);
    let split = |xs: &mut Vec<SparseFeatures>| -> Vec<SparseFeatures> {
        if xs.len() >= 5 {
            xs.split_off(xs.len() - xs.len() / 5)
        } else {
            xs.clone()
        }
    };
    let (held_pos, held_neg) = {
        let hp = split(&mut pos);
        let hn = split(&mut neg);
        pair_up(&hp, &hn)
    };
    let (pos, neg) = pair_up(&pos, &neg);

    let kind = loss.kind();
    let mut w = d.weights().to_vec();
    let mut b = d.bias();
    let mut history = vec![loss_on_features(kind, &w, b, &held_pos, &held_neg)?];
    let mut order: Vec<usize> = (0..pos.len()).collect();
    for epoch in 1..=cfg.disc_epochs {
        order.shuffle(rng);
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            let bp: Vec<SparseFeatures> = chunk.iter().map(|&i| pos[i].clone()).collect();
            let bn: Vec<SparseFeatures> = chunk.iter().map(|&i| neg[i].clone()).collect();
            let g = gradient_on_features(kind, &w, b, &bp, &bn)?;
            for (wi, gi) in w.iter_mut().zip(&g.weights) {
                *wi -= cfg.learning_rate * gi;
            }
            b -= cfg.learning_rate * g.bias;
        }
        if !(b.is_finite() && w.iter().all(|x| x.is_finite())) {
            return Err(Error::Training(format!(
                "non-finite scorer weights after pass {epoch} (lr {})",
                cfg.learning_rate
            )));
        }
        if epoch % cfg.eval_interval.max(1) == 0 || epoch == cfg.disc_epochs {
            let l = loss_on_features(kind, &w, b, &held_pos, &held_neg)?;
            if !l.is_finite() {
                return Err(Error::Training(format!(
                    "held-out {kind:?} loss became {l} after pass {epoch} (lr {})",
                    cfg.learning_rate
                )));
            }
            history.push(l);
        }
    }
    let mut out = d.clone();
    out.set_params(w, b)?;
    Ok((out, history))
}

/// Generated samples used as the negative class: exact copies of positive
/// variants carry no signal and are dropped, unless nothing else is left.
pub fn novel_negatives(samples: &[Variant], positives: &[Variant]) -> Vec<Variant> {
    let known: std::collections::HashSet<&Variant> = positives.iter().collect();
    let novel: Vec<Variant> = samples.iter().filter(|v| !known.contains(v)).cloned().collect();
    if novel.is_empty() {
        samples.to_vec()
    } else {
        novel
    }
}

/// Refines `gen` for `cfg.refine_rounds` rounds: draw samples, retrain the
/// discriminator against them, then add `w·score` counts for every sample
/// the discriminator scores above `θ`. Returns the refined generator and
/// the last discriminator.
pub fn refine_generator(
    gen: &NGramGenerator,
    d_p: &FeatureScorer,
    positives: &[Variant],
    cfg: &TrainConfig,
    rng: &mut dyn RngCore,
) -> Result<(NGramGenerator, FeatureScorer)> {
    let mut gen = gen.clone();
    let mut d = d_p.clone();
    for _ in 0..cfg.refine_rounds {
        let samples: Vec<Variant> = (0..cfg.refine_samples)
            .map(|_| gen.sample_variant(cfg.temperature, rng))
            .collect();
        let negatives = novel_negatives(&samples, positives);
        d = train_discriminator(&d, positives, &negatives, cfg, DiscriminatorLoss::Standard, rng)?.0;
        for v in &samples {
            let s = d.score(v);
            if s > cfg.refine_threshold {
                gen.add_counts(v, cfg.refine_weight * s);
            }
        }
    }
    Ok((gen, d))
}

/// One candidate for model selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub round: usize,
    pub tp_e: f64,
    pub sampled_count: usize,
    /// Relativistic generator loss of `D_r` against this snapshot's draws.
    pub relativistic_g_loss: f64,
}

/// Index of the best candidate: highest `tp_e`, then fewest sampled
/// variants, then earliest.
pub fn select_model(candidates: &[(f64, usize)]) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::invalid("model selection needs at least one candidate"));
    }
    let mut best = 0;
    for (i, &(tp_e, count)) in candidates.iter().enumerate().skip(1) {
        let (bt, bc) = candidates[best];
        if tp_e > bt || (tp_e == bt && count < bc) {
            best = i;
        }
    }
    Ok(best)
}

/// A trained generator with its discriminators and the data split that
/// produced it; serialized as the model checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub generator: NGramGenerator,
    pub d_p: FeatureScorer,
    pub d_r: FeatureScorer,
    pub train: Vec<Variant>,
    pub holdout: Vec<Variant>,
    pub snapshots: Vec<Snapshot>,
    pub selected: usize,
    pub config: TrainConfig,
}

impl TrainedModel {
    pub fn holdout_log(&self) -> UniqueVariantLog {
        self.holdout.iter().cloned().collect()
    }
}

fn tp_e_of(gen: &NGramGenerator, holdout: &UniqueVariantLog, cfg: &TrainConfig, rng: &mut dyn RngCore) -> (f64, usize, Vec<Variant>) {
    let mut seen = indexmap::IndexSet::new();
    let mut draws = Vec::with_capacity(cfg.selection_samples as usize);
    for _ in 0..cfg.selection_samples {
        let v = gen.sample_variant(cfg.temperature, rng);
        draws.push(v.clone());
        seen.insert(v);
    }
    let hit = holdout.iter().filter(|v| seen.contains(*v)).count();
    (hit as f64 / holdout.len() as f64, seen.len(), draws)
}

/// Full training run on `L+`: holdout split, maximum-likelihood fit,
/// discriminator training, refinement snapshots, and selection by `tp_e`.
pub fn train_model(lplus: &UniqueVariantLog, cfg: &TrainConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    let (train, holdout) = split_holdout(lplus, cfg.train_fraction, derive_seed_str(cfg.seed, "holdout"))?;
    let mut rng = substream(derive_seed_str(cfg.seed, "train"), 0);
    let positives = train.to_vec();
    let gen0 = if cfg.seen_context {
        NGramGenerator::fit_mle_seen(&train, cfg.order, cfg.smoothing)?
    } else {
        NGramGenerator::fit_mle(&train, cfg.order, cfg.smoothing)?
    };
    let blank = FeatureScorer::new(gen0.alphabet().to_vec(), gen0.max_len())?;

    let (tp_e, count, draws) = tp_e_of(&gen0, &holdout, cfg, &mut rng);
    let fakes: Vec<Variant> = draws.iter().take(cfg.refine_samples).cloned().collect();
    let negatives = novel_negatives(&fakes, &positives);
    let (mut d_p, _) = train_discriminator(&blank, &positives, &negatives, cfg, DiscriminatorLoss::Standard, &mut rng)?;
    let (d_r, _) = train_discriminator(&blank, &positives, &negatives, cfg, DiscriminatorLoss::Relativistic, &mut rng)?;

    let rel_g = |fakes: &[Variant]| -> Result<f64> {
        let n = positives.len().min(fakes.len());
        crate::losses::loss_value(LossKind::RelativisticG, &d_r, &positives[..n], &fakes[..n])
    };
    let mut gens = vec![gen0];
    let mut snapshots = vec![Snapshot {
        round: 0,
        tp_e,
        sampled_count: count,
        relativistic_g_loss: rel_g(&fakes)?,
    }];
    let one_round = TrainConfig {
        refine_rounds: 1,
        ..cfg.clone()
    };
    for round in 1..=cfg.refine_rounds {
        let (g, d) = refine_generator(gens.last().expect("non-empty"), &d_p, &positives, &one_round, &mut rng)?;
        d_p = d;
        let (tp_e, count, draws) = tp_e_of(&g, &holdout, cfg, &mut rng);
        snapshots.push(Snapshot {
            round,
            tp_e,
            sampled_count: count,
            relativistic_g_loss: rel_g(&draws)?,
        });
        gens.push(g);
    }

    let selected = select_model(&snapshots.iter().map(|s| (s.tp_e, s.sampled_count)).collect::<Vec<_>>())?;
    let generator = gens.swap_remove(selected);
    // final D_p is trained against the selected generator
    let fakes: Vec<Variant> = (0..cfg.refine_samples)
        .map(|_| generator.sample_variant(cfg.temperature, &mut rng))
        .collect();
    let negatives = novel_negatives(&fakes, &positives);
    let (d_p, _) = train_discriminator(&blank, &positives, &negatives, cfg, DiscriminatorLoss::Standard, &mut rng)?;
    Ok(TrainedModel {
        generator,
        d_p,
        d_r,
        train: positives,
        holdout: holdout.to_vec(),
        snapshots,
        selected,
        config: cfg.clone(),
    })
}
