use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::log::{Activity, Variant};

/// Probability outputs are clamped to `[PROB_EPS, 1 − PROB_EPS]`.
pub const PROB_EPS: f64 = 1e-6;

/// Trigram features are folded into at most this many buckets.
const MAX_TRIGRAM_BUCKETS: usize = 1 << 18;

/// Sparse feature vector: sorted `(index, value)` pairs with distinct
/// indices.
pub type SparseFeatures = Vec<(usize, f64)>;

/// Logistic function, evaluated without overflow for large `|x|`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + eˣ)`, stable for large `|x|`.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Linear scorer over k-gram counts (k = 1, 2, 3, with start and end
/// markers around the variant) plus the length normalized by `max_len`.
///
/// The raw score is the relativistic discriminator's output; its sigmoid,
/// clamped away from 0 and 1, is the probability that a variant is real.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScorerRepr", into = "ScorerRepr")]
pub struct FeatureScorer {
    vocabulary: Vec<Activity>,
    max_len: usize,
    weights: Vec<f64>,
    bias: f64,
    index: HashMap<Activity, u32>,
}

#[derive(Serialize, Deserialize)]
struct ScorerRepr {
    vocabulary: Vec<Activity>,
    max_len: usize,
    weights: Vec<f64>,
    bias: f64,
}

impl TryFrom<ScorerRepr> for FeatureScorer {
    type Error = Error;
    fn try_from(r: ScorerRepr) -> Result<Self> {
        let mut s = FeatureScorer::new(r.vocabulary, r.max_len)?;
        if r.weights.len() != s.weights.len() {
            return Err(Error::Format {
                what: "scorer",
                detail: format!("expected {} weights, found {}", s.weights.len(), r.weights.len()),
            });
        }
        s.weights = r.weights;
        s.bias = r.bias;
        Ok(s)
    }
}

impl From<FeatureScorer> for ScorerRepr {
    fn from(s: FeatureScorer) -> Self {
        ScorerRepr {
            vocabulary: s.vocabulary,
            max_len: s.max_len,
            weights: s.weights,
            bias: s.bias,
        }
    }
}

// symbol ids: 0 start marker, 1 end marker, 2 unknown label, 3.. vocabulary
const START: usize = 0;
const END: usize = 1;
const UNKNOWN: usize = 2;

impl FeatureScorer {
    /// A zero-weight scorer; every variant scores 0.5.
    pub fn new(vocabulary: Vec<Activity>, max_len: usize) -> Result<Self> {
        if max_len == 0 {
            return Err(Error::invalid("scorer max_len must be positive"));
        }
        let mut index = HashMap::new();
        for (i, a) in vocabulary.iter().enumerate() {
            if index.insert(a.clone(), i as u32).is_some() {
                return Err(Error::invalid(format!("duplicate vocabulary label {a}")));
            }
        }
        let mut s = FeatureScorer {
            vocabulary,
            max_len,
            weights: Vec::new(),
            bias: 0.0,
            index,
        };
        s.weights = vec![0.0; s.dim()];
        Ok(s)
    }

    fn symbols(&self) -> usize {
        self.vocabulary.len() + 3
    }

    fn trigram_buckets(&self) -> usize {
        self.symbols().pow(3).min(MAX_TRIGRAM_BUCKETS)
    }

    /// Number of weights.
    pub fn dim(&self) -> usize {
        let s = self.symbols();
        s + s * s + self.trigram_buckets() + 1
    }

    pub fn vocabulary(&self) -> &[Activity] {
        &self.vocabulary
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn set_params(&mut self, weights: Vec<f64>, bias: f64) -> Result<()> {
        if weights.len() != self.dim() {
            return Err(Error::invalid(format!(
                "expected {} weights, got {}",
                self.dim(),
                weights.len()
            )));
        }
        self.weights = weights;
        self.bias = bias;
        Ok(())
    }

    /// `θ ← θ − lr·g`.
    pub fn step(&mut self, grad_w: &[f64], grad_b: f64, lr: f64) {
        for (w, g) in self.weights.iter_mut().zip(grad_w) {
            *w -= lr * g;
        }
        self.bias -= lr * grad_b;
    }

    /// The feature vector of `v`.
    pub fn features(&self, v: &Variant) -> SparseFeatures {
        let s = self.symbols();
        let mut seq = Vec::with_capacity(v.len() + 2);
        seq.push(START);
        seq.extend(
            v.labels()
                .iter()
                .map(|a| self.index.get(a).map_or(UNKNOWN, |&i| i as usize + 3)),
        );
        seq.push(END);

        let tri = self.trigram_buckets();
        let mut idx: Vec<usize> = Vec::with_capacity(3 * seq.len());
        idx.extend(seq.iter().copied());
        idx.extend(seq.windows(2).map(|w| s + w[0] * s + w[1]));
        idx.extend(
            seq.windows(3)
                .map(|w| s + s * s + (w[0] * s * s + w[1] * s + w[2]) % tri),
        );
        idx.sort_unstable();
        let mut out: SparseFeatures = Vec::with_capacity(idx.len() + 1);
        for i in idx {
            match out.last_mut() {
                Some((j, c)) if *j == i => *c += 1.0,
                _ => out.push((i, 1.0)),
            }
        }
        out.push((self.dim() - 1, v.len() as f64 / self.max_len as f64));
        out
    }

    /// `w·φ + b` for a precomputed feature vector.
    pub fn raw_from_features(&self, f: &[(usize, f64)]) -> f64 {
        self.bias + f.iter().map(|&(i, x)| self.weights[i] * x).sum::<f64>()
    }

    /// Raw (pre-sigmoid) score.
    pub fn raw_score(&self, v: &Variant) -> f64 {
        self.raw_from_features(&self.features(v))
    }

    /// Clamped probability that `v` is real.
    pub fn score(&self, v: &Variant) -> f64 {
        clamp_prob(sigmoid(self.raw_score(v)))
    }
}

pub(crate) fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}
