use std::collections::HashMap;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::log::{Activity, UniqueVariantLog, Variant};

/// Below this temperature sampling is greedy.
const GREEDY_TAU: f64 = 1e-3;

/// Order-`m` sequence model over the alphabet plus an end marker.
///
/// Counts are kept for every context of length `0..m` (the previous up to
/// `m − 1` symbols, padded with a start marker). A distribution is read
/// from the longest context with observations, smoothed additively:
/// `(c + λ)/(C + λK)` over the `K` admissible outcomes. The end marker is
/// not admissible before the first symbol, so variants are never empty.
///
/// With `seen_context` every context is first refined by the set of
/// activities already emitted (a set abstraction of the prefix) and only
/// then backs off to the plain history. This lets the model know which
/// parallel branches are still open and when ending is possible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NGramRepr", into = "NGramRepr")]
pub struct NGramGenerator {
    order: usize,
    smoothing: f64,
    alphabet: Vec<Activity>,
    max_len: usize,
    seen_context: bool,
    /// context → counts over `alphabet.len() + 1` outcomes (last = end)
    tables: HashMap<Vec<u32>, Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ContextRow {
    context: Vec<u32>,
    counts: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct NGramRepr {
    order: usize,
    smoothing: f64,
    alphabet: Vec<Activity>,
    max_len: usize,
    #[serde(default)]
    seen_context: bool,
    tables: Vec<ContextRow>,
}

impl TryFrom<NGramRepr> for NGramGenerator {
    type Error = Error;
    fn try_from(r: NGramRepr) -> Result<Self> {
        let bad = |detail: String| Error::Format { what: "generator", detail };
        if r.order == 0 || r.max_len == 0 || r.smoothing.is_nan() || r.smoothing < 0.0 {
            return Err(bad("order, max_len and smoothing out of range".into()));
        }
        let n = r.alphabet.len();
        let start = n as u32 + 1;
        let sep = n as u32 + 2;
        let mut tables = HashMap::new();
        for row in r.tables {
            let seps = row.context.iter().filter(|&&s| s == sep).count();
            let hist = row.context.iter().rev().take_while(|&&s| s != sep).count();
            if row.counts.len() != n + 1 || hist >= r.order || seps > usize::from(r.seen_context) {
                return Err(bad(format!("malformed context {:?}", row.context)));
            }
            if row.context.iter().any(|&s| s as usize >= n && s != start && s != sep) {
                return Err(bad(format!("unknown symbol in context {:?}", row.context)));
            }
            tables.insert(row.context, row.counts);
        }
        Ok(NGramGenerator {
            order: r.order,
            smoothing: r.smoothing,
            alphabet: r.alphabet,
            max_len: r.max_len,
            seen_context: r.seen_context,
            tables,
        })
    }
}

impl From<NGramGenerator> for NGramRepr {
    fn from(g: NGramGenerator) -> Self {
        let mut tables: Vec<ContextRow> = g
            .tables
            .into_iter()
            .map(|(context, counts)| ContextRow { context, counts })
            .collect();
        tables.sort_by(|a, b| (a.context.len(), &a.context).cmp(&(b.context.len(), &b.context)));
        NGramRepr {
            order: g.order,
            smoothing: g.smoothing,
            alphabet: g.alphabet,
            max_len: g.max_len,
            seen_context: g.seen_context,
            tables,
        }
    }
}

impl NGramGenerator {
    /// Maximum-likelihood counts from `train`, each variant weighted once.
    pub fn fit_mle(train: &UniqueVariantLog, order: usize, smoothing: f64) -> Result<Self> {
        Self::fit_weighted(train.iter().map(|v| (v, 1.0)), order, smoothing)
    }

    /// Counts from weighted variants. The alphabet is taken in
    /// first-occurrence order.
    pub fn fit_weighted<'a, I>(train: I, order: usize, smoothing: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a Variant, f64)>,
    {
        if order == 0 {
            return Err(Error::invalid("n-gram order must be at least 1"));
        }
        if !(smoothing >= 0.0 && smoothing.is_finite()) {
            return Err(Error::invalid("smoothing must be a non-negative number"));
        }
        let train: Vec<(&Variant, f64)> = train.into_iter().collect();
        if train.is_empty() {
            return Err(Error::invalid("cannot fit a generator on an empty log"));
        }
        let mut alphabet: indexmap::IndexSet<Activity> = indexmap::IndexSet::new();
        for (v, _) in &train {
            alphabet.extend(v.labels().iter().cloned());
        }
        let mut g = NGramGenerator {
            order,
            smoothing,
            max_len: train.iter().map(|(v, _)| v.len()).max().unwrap_or(1),
            alphabet: alphabet.into_iter().collect(),
            seen_context: false,
            tables: HashMap::new(),
        };
        for (v, w) in train {
            g.add_counts(v, w);
        }
        Ok(g)
    }

    /// The same counts re-collected with set-of-seen-activities contexts.
    pub fn fit_mle_seen(train: &UniqueVariantLog, order: usize, smoothing: f64) -> Result<Self> {
        let mut g = Self::fit_mle(train, order, smoothing)?;
        g.seen_context = true;
        g.tables.clear();
        for v in train.iter() {
            g.add_counts(v, 1.0);
        }
        Ok(g)
    }

    pub fn seen_context(&self) -> bool {
        self.seen_context
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn alphabet(&self) -> &[Activity] {
        &self.alphabet
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    fn end(&self) -> u32 {
        self.alphabet.len() as u32
    }

    fn start(&self) -> u32 {
        self.alphabet.len() as u32 + 1
    }

    fn encode(&self, v: &Variant) -> Option<Vec<u32>> {
        v.labels()
            .iter()
            .map(|a| self.alphabet.iter().position(|b| b == a).map(|i| i as u32))
            .collect()
    }

    /// The padded history of `m − 1` symbols before position `prefix.len()`.
    fn history(&self, prefix: &[u32]) -> Vec<u32> {
        let h = self.order - 1;
        let mut ctx = vec![self.start(); h.saturating_sub(prefix.len())];
        ctx.extend_from_slice(&prefix[prefix.len().saturating_sub(h)..]);
        ctx
    }

    /// Contexts of the position after `prefix`, most specific first.
    fn contexts(&self, prefix: &[u32]) -> Vec<Vec<u32>> {
        let hist = self.history(prefix);
        let plain = (0..=hist.len()).rev().map(|k| hist[hist.len() - k..].to_vec());
        if !self.seen_context {
            return plain.collect();
        }
        let mut seen: Vec<u32> = prefix.to_vec();
        seen.sort_unstable();
        seen.dedup();
        seen.push(self.alphabet.len() as u32 + 2);
        let refined = (0..=hist.len()).rev().map(|k| {
            let mut c = seen.clone();
            c.extend_from_slice(&hist[hist.len() - k..]);
            c
        });
        refined.chain(plain).collect()
    }

    /// Adds `weight` to every context/outcome pair along `v`, including the
    /// end marker. Labels outside the alphabet are ignored with the whole
    /// variant. An end at `max_len` is forced anyway and is not counted, so
    /// it cannot leak into a shorter prefix sharing the same context.
    pub fn add_counts(&mut self, v: &Variant, weight: f64) -> bool {
        let Some(seq) = self.encode(v) else { return false };
        let outcomes = self.alphabet.len() + 1;
        for pos in 0..=seq.len() {
            if pos == seq.len() && pos >= self.max_len {
                break;
            }
            let next = if pos == seq.len() { self.end() } else { seq[pos] };
            for ctx in self.contexts(&seq[..pos]) {
                self.tables.entry(ctx).or_insert_with(|| vec![0.0; outcomes])[next as usize] += weight;
            }
        }
        true
    }

    /// Next-symbol distribution after `prefix` (indices into the alphabet;
    /// the last entry is the end marker).
    pub fn next_distribution(&self, prefix: &[u32]) -> Vec<f64> {
        let n = self.alphabet.len();
        let counts = self
            .contexts(prefix)
            .into_iter()
            .find_map(|ctx| {
                self.tables
                    .get(&ctx)
                    .filter(|c| c.iter().enumerate().any(|(i, &x)| x > 0.0 && (i < n || !prefix.is_empty())))
            })
            .expect("the empty context holds every observation");
        let end_allowed = !prefix.is_empty();
        let admissible = if end_allowed { n + 1 } else { n };
        let total: f64 = counts[..admissible].iter().sum();
        let denom = total + self.smoothing * admissible as f64;
        let mut p: Vec<f64> = counts.iter().map(|&c| (c + self.smoothing) / denom).collect();
        if !end_allowed {
            p[n] = 0.0;
        }
        if prefix.len() >= self.max_len {
            p.iter_mut().for_each(|x| *x = 0.0);
            p[n] = 1.0;
        }
        p
    }

    /// Probability of generating exactly `v` at temperature 1.
    pub fn probability(&self, v: &Variant) -> f64 {
        let Some(seq) = self.encode(v) else { return 0.0 };
        if seq.len() > self.max_len {
            return 0.0;
        }
        let mut p = 1.0;
        for pos in 0..=seq.len() {
            let next = if pos == seq.len() { self.end() } else { seq[pos] };
            p *= self.next_distribution(&seq[..pos])[next as usize];
        }
        p
    }

    /// Draws one variant with temperature `tau`.
    pub fn sample_variant(&self, tau: f64, rng: &mut dyn RngCore) -> Variant {
        let mut seq: Vec<u32> = Vec::with_capacity(self.max_len);
        loop {
            let next = pick(&self.next_distribution(&seq), tau, rng);
            if next == self.alphabet.len() {
                break;
            }
            seq.push(next as u32);
        }
        Variant::new(seq.into_iter().map(|i| self.alphabet[i as usize].clone()).collect())
            .expect("the end marker is never drawn first")
    }
}

/// Index drawn from `p^(1/τ)` renormalized; argmax below the greedy
/// threshold.
fn pick(p: &[f64], tau: f64, rng: &mut dyn RngCore) -> usize {
    if tau < GREEDY_TAU {
        let mut best = 0;
        for (i, &x) in p.iter().enumerate() {
            if x > p[best] {
                best = i;
            }
        }
        return best;
    }
    let weights: Vec<f64> = if tau == 1.0 {
        p.to_vec()
    } else {
        // scale in log space so small probabilities do not underflow
        let logs: Vec<f64> = p.iter().map(|&x| if x > 0.0 { x.ln() / tau } else { f64::NEG_INFINITY }).collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        logs.iter().map(|&l| (l - top).exp()).collect()
    };
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if u < w {
                return i;
            }
            u -= w;
            last = i;
        }
    }
    last
}
