//! Independent reference implementations shared by integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use avatar_core::genmodel::SparseFeatures;
use avatar_core::log::{Activity, Variant};
use avatar_core::losses::{gradient_on_features, loss_on_features, LossKind};
use avatar_core::petri::{Marking, PetriNet};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Markings reachable from `set` through silent transitions alone.
fn silent_closure(net: &PetriNet, set: HashSet<Marking>, cap: u32) -> HashSet<Marking> {
    let mut out = set.clone();
    let mut todo: Vec<Marking> = set.into_iter().collect();
    while let Some(m) = todo.pop() {
        for t in net.enabled(&m) {
            if !net.transitions()[t].is_silent() {
                continue;
            }
            let next = net.fire(&m, t).expect("enabled");
            if next.max_tokens() <= cap && out.insert(next.clone()) {
                todo.push(next);
            }
        }
    }
    out
}

/// Playout by subset construction over the capped marking graph: for every
/// label prefix keep the set of markings it can reach, extend by one label
/// per round, and record prefixes whose set contains a final marking (or a
/// dead marking when the net has no final markings).
pub fn brute_force_playout(net: &PetriNet, max_len: usize, cap: u32) -> BTreeSet<Variant> {
    let permissive = net.final_markings().is_empty();
    let mut found = BTreeSet::new();
    if net.initial_marking().max_tokens() > cap {
        return found;
    }
    let init = silent_closure(net, HashSet::from([net.initial_marking().clone()]), cap);
    let mut layer: BTreeMap<Vec<Activity>, HashSet<Marking>> = BTreeMap::from([(Vec::new(), init)]);
    for len in 0..=max_len {
        let mut next: BTreeMap<Vec<Activity>, HashSet<Marking>> = BTreeMap::new();
        for (prefix, markings) in &layer {
            let accepts = markings
                .iter()
                .any(|m| net.is_final(m) || (permissive && net.enabled(m).is_empty()));
            if !prefix.is_empty() && accepts {
                found.insert(Variant::new(prefix.clone()).unwrap());
            }
            if len == max_len {
                continue;
            }
            for m in markings {
                for t in net.enabled(m) {
                    let Some(label) = &net.transitions()[t].label else { continue };
                    let m2 = net.fire(m, t).unwrap();
                    if m2.max_tokens() > cap {
                        continue;
                    }
                    let mut p = prefix.clone();
                    p.push(label.clone());
                    next.entry(p).or_default().insert(m2);
                }
            }
        }
        layer = next
            .into_iter()
            .map(|(p, ms)| (p, silent_closure(net, ms, cap)))
            .collect();
    }
    found
}

pub fn random_features(rng: &mut ChaCha8Rng, dim: usize) -> SparseFeatures {
    let mut idx: Vec<usize> = (0..dim).filter(|_| rng.gen_bool(0.4)).collect();
    if idx.is_empty() {
        idx.push(rng.gen_range(0..dim));
    }
    idx.into_iter().map(|i| (i, rng.gen_range(0.0..3.0))).collect()
}

/// Largest componentwise gap between the analytic gradient and central
/// differences, relative to the gradient's magnitude.
pub fn relative_error(kind: LossKind, w: &[f64], b: f64, pos: &[SparseFeatures], neg: &[SparseFeatures]) -> f64 {
    let h = 1e-5;
    let loss = |w: &[f64], b: f64| loss_on_features(kind, w, b, pos, neg).unwrap();
    let g = gradient_on_features(kind, w, b, pos, neg).unwrap();
    let mut analytic = g.weights.clone();
    analytic.push(g.bias);
    let mut numeric = Vec::with_capacity(analytic.len());
    for i in 0..w.len() {
        let (mut up, mut down) = (w.to_vec(), w.to_vec());
        up[i] += h;
        down[i] -= h;
        numeric.push((loss(&up, b) - loss(&down, b)) / (2.0 * h));
    }
    numeric.push((loss(w, b + h) - loss(w, b - h)) / (2.0 * h));
    let norm = |xs: &[f64]| xs.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, n)| a - n).collect();
    norm(&diff) / norm(&analytic).max(norm(&numeric)).max(1e-8)
}
