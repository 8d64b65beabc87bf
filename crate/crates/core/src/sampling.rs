//! Estimating the system's variant set from a generator: naive draws, or
//! Metropolis-Hastings chains steered by a discriminator.

use indexmap::IndexSet;
use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genmodel::{FeatureScorer, NGramGenerator};
use crate::log::{UniqueVariantLog, Variant};
use crate::rng::substream;

/// Draws variants.
pub trait VariantGenerator: Sync {
    fn generate(&self, rng: &mut dyn RngCore) -> Variant;
}

/// Probability that a variant is real, strictly inside (0, 1).
pub trait ProbabilityScorer: Sync {
    fn probability(&self, v: &Variant) -> f64;
}

/// An n-gram generator sampled at a fixed temperature.
#[derive(Debug, Clone, Copy)]
pub struct Tempered<'a> {
    pub generator: &'a NGramGenerator,
    pub tau: f64,
}

impl VariantGenerator for Tempered<'_> {
    fn generate(&self, rng: &mut dyn RngCore) -> Variant {
        self.generator.sample_variant(self.tau, rng)
    }
}

impl ProbabilityScorer for FeatureScorer {
    fn probability(&self, v: &Variant) -> f64 {
        self.score(v)
    }
}

impl<F: Fn(&Variant) -> f64 + Sync> ProbabilityScorer for F {
    fn probability(&self, v: &Variant) -> f64 {
        self(v)
    }
}

/// Estimated system variants and the unobserved part of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    /// In the order first produced.
    pub v_hat_s: IndexSet<Variant>,
    pub v_hat_u: IndexSet<Variant>,
    /// Generator draws (naive) or chains run (MH).
    pub draw_count: u64,
    /// Fraction of accepted MH proposals; `None` for naive sampling.
    pub acceptance_rate: Option<f64>,
}

impl SampleResult {
    fn new(v_hat_s: IndexSet<Variant>, lplus: &UniqueVariantLog, draw_count: u64, acceptance_rate: Option<f64>) -> Self {
        let v_hat_u = v_hat_s.iter().filter(|v| !lplus.contains(v)).cloned().collect();
        SampleResult {
            v_hat_s,
            v_hat_u,
            draw_count,
            acceptance_rate,
        }
    }
}

/// `k` independent draws; the distinct ones form the estimate. With
/// `union_observed` the observed variants are added as well.
pub fn naive_sample<G: VariantGenerator + ?Sized>(
    g: &G,
    lplus: &UniqueVariantLog,
    k: u64,
    union_observed: bool,
    rng: &mut dyn RngCore,
) -> Result<SampleResult> {
    if k == 0 {
        return Err(Error::invalid("naive sampling needs k ≥ 1"));
    }
    let mut set = IndexSet::new();
    for _ in 0..k {
        set.insert(g.generate(rng));
    }
    if union_observed {
        set.extend(lplus.iter().cloned());
    }
    Ok(SampleResult::new(set, lplus, k, None))
}

/// `min(1, (1/p_current − 1)/(1/p_proposal − 1))`.
pub fn mh_acceptance(p_current: f64, p_proposal: f64) -> Result<f64> {
    for p in [p_current, p_proposal] {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid(format!(
                "discriminator output {p} must lie strictly inside (0,1)"
            )));
        }
    }
    Ok((((1.0 / p_current) - 1.0) / ((1.0 / p_proposal) - 1.0)).min(1.0))
}

/// Outcome of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutcome {
    /// The last accepted state.
    pub state: Variant,
    /// The proposal drawn after the last step (what a literal reading of
    /// the pseudocode emits).
    pub last_proposal: Variant,
    pub accepted: u32,
}

impl ChainOutcome {
    pub fn emitted(&self, strict_pseudocode: bool) -> &Variant {
        if strict_pseudocode {
            &self.last_proposal
        } else {
            &self.state
        }
    }
}

/// Runs `kappa` independent-proposal Metropolis-Hastings steps from `init`.
pub fn mh_chain<G, D>(g: &G, d: &D, init: Variant, kappa: u32, rng: &mut dyn RngCore) -> Result<ChainOutcome>
where
    G: VariantGenerator + ?Sized,
    D: ProbabilityScorer + ?Sized,
{
    let mut x = init;
    let mut px = d.probability(&x);
    let mut y = g.generate(rng);
    let mut accepted = 0;
    for _ in 0..kappa {
        let py = d.probability(&y);
        let alpha = mh_acceptance(px, py)?;
        if alpha > rng.gen::<f64>() {
            x = y;
            px = py;
            accepted += 1;
        }
        y = g.generate(rng);
    }
    Ok(ChainOutcome {
        state: x,
        last_proposal: y,
        accepted,
    })
}

/// Settings for [`mh_sample`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MhConfig {
    pub kappa: u32,
    pub patience: u32,
    /// Emit the fresh proposal instead of the chain state.
    pub strict_pseudocode: bool,
    /// Chains evaluated per parallel batch; does not affect results.
    pub batch: usize,
    /// Hard stop on the number of chains, by default the naive draw count `k`.
    pub max_chains: u64,
}

impl Default for MhConfig {
    fn default() -> Self {
        MhConfig {
            kappa: 500,
            patience: 1_000,
            strict_pseudocode: false,
            batch: 256,
            max_chains: 10_000,
        }
    }
}

/// Chains are run until `patience` consecutive chains produce nothing new.
///
/// Chain `i` starts from a uniformly drawn holdout variant and uses stream
/// `i` of `seed`, so the output depends only on the seed, never on how the
/// chains are scheduled. A chain's output is new when it differs from its
/// starting variant and has not been seen before.
pub fn mh_sample<G, D>(
    g: &G,
    d: &D,
    lplus: &UniqueVariantLog,
    lplus_e: &UniqueVariantLog,
    cfg: &MhConfig,
    seed: u64,
) -> Result<SampleResult>
where
    G: VariantGenerator + ?Sized,
    D: ProbabilityScorer + ?Sized,
{
    if lplus_e.is_empty() {
        return Err(Error::invalid("MH sampling needs a non-empty holdout log"));
    }
    if cfg.kappa == 0 || cfg.patience == 0 {
        return Err(Error::invalid("MH sampling needs κ ≥ 1 and π ≥ 1"));
    }
    let mut set: IndexSet<Variant> = IndexSet::new();
    let mut idle = 0u32;
    let mut chains = 0u64;
    let mut accepted = 0u64;
    let batch = cfg.batch.max(1) as u64;
    'outer: while chains < cfg.max_chains {
        let hi = (chains + batch).min(cfg.max_chains);
        let outcomes: Vec<(Variant, ChainOutcome)> = (chains..hi)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream(seed, i);
                let init = lplus_e
                    .get(rng.gen_range(0..lplus_e.len()))
                    .expect("index in range")
                    .clone();
                mh_chain(g, d, init.clone(), cfg.kappa, &mut rng).map(|o| (init, o))
            })
            .collect::<Result<_>>()?;
        for (init, o) in outcomes {
            chains += 1;
            accepted += o.accepted as u64;
            let v = o.emitted(cfg.strict_pseudocode);
            if *v != init && !set.contains(v) {
                set.insert(v.clone());
                idle = 0;
            } else {
                idle += 1;
                if idle >= cfg.patience {
                    break 'outer;
                }
            }
        }
    }
    let rate = accepted as f64 / (chains * cfg.kappa as u64) as f64;
    Ok(SampleResult::new(set, lplus, chains, Some(rate)))
}

/// Total-variation distance between two empirical distributions.
pub fn total_variation<T: std::hash::Hash + Eq>(a: &[T], b: &[T]) -> f64 {
    use std::collections::HashMap;
    let mut m: HashMap<&T, (f64, f64)> = HashMap::new();
    for x in a {
        m.entry(x).or_default().0 += 1.0 / a.len() as f64;
    }
    for x in b {
        m.entry(x).or_default().1 += 1.0 / b.len() as f64;
    }
    0.5 * m.values().map(|(p, q)| (p - q).abs()).sum::<f64>()
}
