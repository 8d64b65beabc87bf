//! Standard and relativistic adversarial losses, on score batches and on
//! the built-in linear scorer with analytic gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genmodel::{sigmoid, softplus, FeatureScorer, SparseFeatures};
use crate::log::Variant;

/// Discriminator outputs on real samples and on generated samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredBatch {
    pub real_scores: Vec<f64>,
    pub fake_scores: Vec<f64>,
}

impl ScoredBatch {
    pub fn new(real_scores: Vec<f64>, fake_scores: Vec<f64>) -> Self {
        ScoredBatch {
            real_scores,
            fake_scores,
        }
    }

    /// Real and fake swapped.
    pub fn swapped(&self) -> Self {
        ScoredBatch::new(self.fake_scores.clone(), self.real_scores.clone())
    }
}

/// How scores enter the standard discriminator loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossForm {
    /// Probabilities: `mean(1 − D(x_r)) + mean(D(x_g))`.
    Literal,
    /// Raw scores, binary cross-entropy.
    Logistic,
}

/// Sum with pairwise (cascade) splitting for lower rounding error.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

fn non_empty(xs: &[f64], what: &str) -> Result<()> {
    if xs.is_empty() {
        Err(Error::invalid(format!("{what} must not be empty")))
    } else {
        Ok(())
    }
}

fn check_probs(xs: &[f64], lo_open: bool) -> Result<()> {
    for &p in xs {
        let ok = if lo_open { p > 0.0 && p <= 1.0 } else { (0.0..=1.0).contains(&p) };
        if !ok {
            return Err(Error::invalid(format!("score {p} is not a probability")));
        }
    }
    Ok(())
}

/// Standard discriminator loss.
pub fn standard_d_loss(batch: &ScoredBatch, form: LossForm) -> Result<f64> {
    non_empty(&batch.real_scores, "real scores")?;
    non_empty(&batch.fake_scores, "fake scores")?;
    match form {
        LossForm::Literal => {
            check_probs(&batch.real_scores, false)?;
            check_probs(&batch.fake_scores, false)?;
            let real: Vec<f64> = batch.real_scores.iter().map(|d| 1.0 - d).collect();
            Ok(mean(&real) + mean(&batch.fake_scores))
        }
        LossForm::Logistic => {
            let real: Vec<f64> = batch.real_scores.iter().map(|&s| softplus(-s)).collect();
            let fake: Vec<f64> = batch.fake_scores.iter().map(|&s| softplus(s)).collect();
            Ok(mean(&real) + mean(&fake))
        }
    }
}

/// Standard generator loss `mean(1 − D(G(z)))` on probabilities.
pub fn standard_g_loss(fake_scores: &[f64]) -> Result<f64> {
    non_empty(fake_scores, "fake scores")?;
    check_probs(fake_scores, true)?;
    let xs: Vec<f64> = fake_scores.iter().map(|d| 1.0 - d).collect();
    Ok(mean(&xs))
}

fn paired(batch: &ScoredBatch) -> Result<()> {
    non_empty(&batch.real_scores, "real scores")?;
    if batch.real_scores.len() != batch.fake_scores.len() {
        return Err(Error::invalid(format!(
            "relativistic loss pairs {} real with {} fake scores",
            batch.real_scores.len(),
            batch.fake_scores.len()
        )));
    }
    Ok(())
}

/// `mean −ln σ(D_r(x_r) − D_r(x_g))` over paired raw scores.
pub fn relativistic_d_loss(batch: &ScoredBatch) -> Result<f64> {
    paired(batch)?;
    let xs: Vec<f64> = batch
        .real_scores
        .iter()
        .zip(&batch.fake_scores)
        .map(|(r, f)| softplus(-(r - f)))
        .collect();
    Ok(mean(&xs))
}

/// `mean −ln σ(D_r(x_g) − D_r(x_r))` over paired raw scores.
pub fn relativistic_g_loss(batch: &ScoredBatch) -> Result<f64> {
    relativistic_d_loss(&batch.swapped())
}

/// Losses differentiable through the linear scorer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    StandardDLiteral,
    StandardDLogistic,
    /// Uses only the negatives.
    StandardG,
    RelativisticD,
    RelativisticG,
}

/// Gradient with respect to the scorer's weights and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn raw(w: &[f64], b: f64, f: &[(usize, f64)]) -> f64 {
    b + f.iter().map(|&(i, x)| w[i] * x).sum::<f64>()
}

fn check_dims(dim: usize, batches: [&[SparseFeatures]; 2]) -> Result<()> {
    for f in batches.iter().flat_map(|b| b.iter()) {
        if let Some(&(i, _)) = f.iter().find(|(i, _)| *i >= dim) {
            return Err(Error::invalid(format!("feature index {i} exceeds dimension {dim}")));
        }
    }
    Ok(())
}

fn check_batches(kind: LossKind, pos: &[SparseFeatures], neg: &[SparseFeatures]) -> Result<()> {
    if neg.is_empty() || (kind != LossKind::StandardG && pos.is_empty()) {
        return Err(Error::invalid("loss batches must not be empty"));
    }
    if matches!(kind, LossKind::RelativisticD | LossKind::RelativisticG) && pos.len() != neg.len() {
        return Err(Error::invalid(format!(
            "relativistic loss pairs {} positives with {} negatives",
            pos.len(),
            neg.len()
        )));
    }
    Ok(())
}

/// Loss of a linear scorer `(w, b)` on feature batches.
pub fn loss_on_features(
    kind: LossKind,
    w: &[f64],
    b: f64,
    pos: &[SparseFeatures],
    neg: &[SparseFeatures],
) -> Result<f64> {
    check_batches(kind, pos, neg)?;
    check_dims(w.len(), [pos, neg])?;
    let rs: Vec<f64> = pos.iter().map(|f| raw(w, b, f)).collect();
    let fs: Vec<f64> = neg.iter().map(|f| raw(w, b, f)).collect();
    let sig = |xs: &[f64]| xs.iter().map(|&x| sigmoid(x)).collect::<Vec<_>>();
    match kind {
        LossKind::StandardDLiteral => standard_d_loss(&ScoredBatch::new(sig(&rs), sig(&fs)), LossForm::Literal),
        LossKind::StandardDLogistic => standard_d_loss(&ScoredBatch::new(rs, fs), LossForm::Logistic),
        LossKind::StandardG => {
            let xs: Vec<f64> = fs.iter().map(|&s| 1.0 - sigmoid(s)).collect();
            Ok(mean(&xs))
        }
        LossKind::RelativisticD => relativistic_d_loss(&ScoredBatch::new(rs, fs)),
        LossKind::RelativisticG => relativistic_g_loss(&ScoredBatch::new(rs, fs)),
    }
}

/// Analytic gradient of [`loss_on_features`] with respect to `(w, b)`.
pub fn gradient_on_features(
    kind: LossKind,
    w: &[f64],
    b: f64,
    pos: &[SparseFeatures],
    neg: &[SparseFeatures],
) -> Result<Gradient> {
    check_batches(kind, pos, neg)?;
    check_dims(w.len(), [pos, neg])?;
    let mut g = Gradient {
        weights: vec![0.0; w.len()],
        bias: 0.0,
    };
    let add = |f: &SparseFeatures, coef: f64, g: &mut Gradient| {
        for &(i, x) in f {
            g.weights[i] += coef * x;
        }
        g.bias += coef;
    };
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    match kind {
        LossKind::StandardDLiteral => {
            for f in pos {
                let s = sigmoid(raw(w, b, f));
                add(f, -s * (1.0 - s) / np, &mut g);
            }
            for f in neg {
                let s = sigmoid(raw(w, b, f));
                add(f, s * (1.0 - s) / nn, &mut g);
            }
        }
        LossKind::StandardDLogistic => {
            for f in pos {
                add(f, (sigmoid(raw(w, b, f)) - 1.0) / np, &mut g);
            }
            for f in neg {
                add(f, sigmoid(raw(w, b, f)) / nn, &mut g);
            }
        }
        LossKind::StandardG => {
            for f in neg {
                let s = sigmoid(raw(w, b, f));
                add(f, -s * (1.0 - s) / nn, &mut g);
            }
        }
        LossKind::RelativisticD | LossKind::RelativisticG => {
            let sign = if kind == LossKind::RelativisticD { 1.0 } else { -1.0 };
            for (fr, ff) in pos.iter().zip(neg) {
                let d = sign * (raw(w, b, fr) - raw(w, b, ff));
                // d/dd softplus(−d) = −(1 − σ(d))
                let c = -(1.0 - sigmoid(d)) * sign / np;
                add(fr, c, &mut g);
                add(ff, -c, &mut g);
            }
            // the bias cancels inside every difference
            g.bias = 0.0;
        }
    }
    Ok(g)
}

/// Gradient of `kind` for `scorer` on variant batches.
pub fn loss_gradient(
    kind: LossKind,
    scorer: &FeatureScorer,
    positives: &[Variant],
    negatives: &[Variant],
) -> Result<Gradient> {
    let pos: Vec<SparseFeatures> = positives.iter().map(|v| scorer.features(v)).collect();
    let neg: Vec<SparseFeatures> = negatives.iter().map(|v| scorer.features(v)).collect();
    gradient_on_features(kind, scorer.weights(), scorer.bias(), &pos, &neg)
}

/// Loss of `kind` for `scorer` on variant batches.
pub fn loss_value(kind: LossKind, scorer: &FeatureScorer, positives: &[Variant], negatives: &[Variant]) -> Result<f64> {
    let pos: Vec<SparseFeatures> = positives.iter().map(|v| scorer.features(v)).collect();
    let neg: Vec<SparseFeatures> = negatives.iter().map(|v| scorer.features(v)).collect();
    loss_on_features(kind, scorer.weights(), scorer.bias(), &pos, &neg)
}
