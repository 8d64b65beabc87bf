//! Log fitness, log precision, system-level set ratios, and the
//! harmonic-mean generalization score.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::log::{intersection_count, Activity, Variant, VariantLog, VariantSet};
use crate::petri::{Marking, PetriNet, DEFAULT_TOKEN_CAP};

/// Fitness, precision and the name of the method behind each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformanceScores {
    pub fitness: f64,
    pub precision: f64,
    pub fitness_method: String,
    pub precision_method: String,
}

impl ConformanceScores {
    pub fn generalization(&self) -> f64 {
        avatar_generalization(self.fitness, self.precision)
    }
}

/// A log fitness function `fit(net, L*) ∈ [0,1]`.
pub trait FitnessMeasure: Sync {
    fn name(&self) -> &'static str;
    fn fitness(&self, net: &PetriNet, lstar: &VariantLog) -> f64;
}

/// A log precision function `prec(net, L*) ∈ [0,1]`.
pub trait PrecisionMeasure: Sync {
    fn name(&self) -> &'static str;
    fn precision(&self, net: &PetriNet, lstar: &VariantLog) -> f64;
}

/// Harmonic mean of fitness and precision; 0 when both are 0.
pub fn avatar_generalization(fit: f64, prec: f64) -> f64 {
    if fit + prec <= 0.0 {
        0.0
    } else {
        2.0 * fit * prec / (fit + prec)
    }
}

/// Measures fitness and precision of `net` on `lstar` and combines them.
pub fn measure(
    net: &PetriNet,
    lstar: &VariantLog,
    fitness: &dyn FitnessMeasure,
    precision: &dyn PrecisionMeasure,
) -> ConformanceScores {
    ConformanceScores {
        fitness: fitness.fitness(net, lstar),
        precision: precision.precision(net, lstar),
        fitness_method: fitness.name().to_string(),
        precision_method: precision.name().to_string(),
    }
}

/// `|V_S ∩ V_PN| / |V_S|`.
pub fn system_fitness(v_pn: &dyn VariantSet, v_s: &dyn VariantSet) -> Result<f64> {
    if v_s.size() == 0 {
        return Err(Error::invalid("system fitness needs a non-empty system variant set"));
    }
    Ok(intersection_count(v_pn, v_s) as f64 / v_s.size() as f64)
}

/// `|V_PN ∩ V_S| / |V_PN|`. A net that models nothing scores 0; callers
/// that care should flag that case themselves.
pub fn system_precision(v_pn: &dyn VariantSet, v_s: &dyn VariantSet) -> f64 {
    if v_pn.size() == 0 {
        return 0.0;
    }
    intersection_count(v_pn, v_s) as f64 / v_pn.size() as f64
}

// ---------------------------------------------------------------------------
// Token replay

/// Token counts accumulated while replaying.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayCounts {
    pub missing: u64,
    pub remaining: u64,
    pub consumed: u64,
    pub produced: u64,
}

impl ReplayCounts {
    /// `½(1 − m/c) + ½(1 − r/p)`.
    pub fn fitness(&self) -> f64 {
        let miss = if self.consumed == 0 {
            1.0
        } else {
            1.0 - self.missing as f64 / self.consumed as f64
        };
        let rem = if self.produced == 0 {
            1.0
        } else {
            1.0 - self.remaining as f64 / self.produced as f64
        };
        0.5 * miss + 0.5 * rem
    }

    pub fn is_perfect(&self) -> bool {
        self.missing == 0 && self.remaining == 0
    }
}

impl std::ops::Add for ReplayCounts {
    type Output = ReplayCounts;
    fn add(self, o: ReplayCounts) -> ReplayCounts {
        ReplayCounts {
            missing: self.missing + o.missing,
            remaining: self.remaining + o.remaining,
            consumed: self.consumed + o.consumed,
            produced: self.produced + o.produced,
        }
    }
}

/// Token-based replay fitness, aggregated over the whole log before the
/// formula is applied.
#[derive(Debug, Clone, Copy)]
pub struct TokenReplay {
    /// Bound on markings explored when searching for silent firings that
    /// enable the next label or reach a final marking.
    pub silent_search_limit: usize,
}

impl Default for TokenReplay {
    fn default() -> Self {
        TokenReplay {
            silent_search_limit: 2_000,
        }
    }
}

impl FitnessMeasure for TokenReplay {
    fn name(&self) -> &'static str {
        "token_replay"
    }

    fn fitness(&self, net: &PetriNet, lstar: &VariantLog) -> f64 {
        self.replay_log(net, lstar).fitness()
    }
}

impl TokenReplay {
    pub fn replay_log(&self, net: &PetriNet, lstar: &VariantLog) -> ReplayCounts {
        lstar
            .variants()
            .par_iter()
            .map(|v| self.replay_variant(net, v))
            .reduce(ReplayCounts::default, |a, b| a + b)
    }

    /// Replays one variant from the initial marking.
    ///
    /// A label with no enabled transition first tries a short sequence of
    /// silent firings; failing that, the first transition carrying the label
    /// is fired anyway and its missing input tokens are counted. Labels the
    /// net does not know count as one missing and one consumed token. At the
    /// end the closest final marking (after optional silent firings) is
    /// consumed and whatever is left counts as remaining. Without final
    /// markings the end state is accepted as is when it is dead, otherwise
    /// all its tokens count as remaining.
    pub fn replay_variant(&self, net: &PetriNet, v: &Variant) -> ReplayCounts {
        let mut c = ReplayCounts {
            produced: net.initial_marking().total(),
            ..Default::default()
        };
        let mut m = net.initial_marking().clone();
        let by_label = transitions_by_label(net);
        for a in v.labels() {
            let Some(candidates) = by_label.get(a) else {
                c.missing += 1;
                c.consumed += 1;
                continue;
            };
            let t = match candidates.iter().copied().find(|&t| net.is_enabled(&m, t)) {
                Some(t) => t,
                None => match silent_path(net, &m, self.silent_search_limit, |x| {
                    candidates.iter().any(|&t| net.is_enabled(x, t))
                }) {
                    Some(path) => {
                        for s in path {
                            fire_counting(net, &mut m, s, &mut c);
                        }
                        candidates
                            .iter()
                            .copied()
                            .find(|&t| net.is_enabled(&m, t))
                            .expect("silent path ends in an enabling marking")
                    }
                    None => candidates[0],
                },
            };
            fire_counting(net, &mut m, t, &mut c);
        }

        if net.final_markings().is_empty() {
            if net.enabled(&m).is_empty() {
                c.consumed += m.total();
            } else {
                c.remaining += m.total();
            }
            return c;
        }

        // Best end state: fewest missing+remaining tokens against some final
        // marking, preferring fewer silent firings.
        let mut best: Option<(u64, usize, Vec<usize>, usize)> = None;
        for (path, reached) in silent_reachable(net, &m, self.silent_search_limit) {
            for (fi, f) in net.final_markings().iter().enumerate() {
                let (miss, rem) = marking_gap(&reached, f);
                let key = (miss + rem, path.len());
                if best.as_ref().is_none_or(|b| key < (b.0, b.1)) {
                    best = Some((miss + rem, path.len(), path.clone(), fi));
                }
            }
        }
        let (_, _, path, fi) = best.expect("the current marking is always a candidate");
        for s in path {
            fire_counting(net, &mut m, s, &mut c);
        }
        let f = &net.final_markings()[fi];
        let (miss, rem) = marking_gap(&m, f);
        c.missing += miss;
        c.remaining += rem;
        c.consumed += f.total();
        c
    }
}

/// Log-level token replay fitness with default settings.
pub fn token_replay_fitness(net: &PetriNet, lstar: &VariantLog) -> f64 {
    TokenReplay::default().fitness(net, lstar)
}

fn transitions_by_label(net: &PetriNet) -> BTreeMap<&Activity, Vec<usize>> {
    let mut out: BTreeMap<&Activity, Vec<usize>> = BTreeMap::new();
    for (i, t) in net.transitions().iter().enumerate() {
        if let Some(l) = &t.label {
            out.entry(l).or_default().push(i);
        }
    }
    out
}

/// Fires `t`, creating missing input tokens first.
fn fire_counting(net: &PetriNet, m: &mut Marking, t: usize, c: &mut ReplayCounts) {
    for &p in net.preset(t) {
        if m.get(p) == 0 {
            c.missing += 1;
            m.add(p, 1);
        }
    }
    c.consumed += net.preset(t).len() as u64;
    c.produced += net.postset(t).len() as u64;
    *m = net.fire_unchecked(m, t);
}

/// Tokens missing from and left over in `m` relative to `target`.
fn marking_gap(m: &Marking, target: &Marking) -> (u64, u64) {
    let mut miss = 0;
    let mut rem = 0;
    for (&have, &want) in m.tokens().iter().zip(target.tokens()) {
        if want > have {
            miss += (want - have) as u64;
        } else {
            rem += (have - want) as u64;
        }
    }
    (miss, rem)
}

/// Shortest sequence of silent firings leading from `m` to a marking that
/// satisfies `goal`. The empty path is never returned.
fn silent_path<F: Fn(&Marking) -> bool>(net: &PetriNet, m: &Marking, limit: usize, goal: F) -> Option<Vec<usize>> {
    silent_reachable(net, m, limit)
        .into_iter()
        .skip(1)
        .find(|(_, x)| goal(x))
        .map(|(p, _)| p)
}

/// Markings reachable from `m` by silent firings, breadth-first, each with
/// the path that reached it. The first entry is `m` itself.
fn silent_reachable(net: &PetriNet, m: &Marking, limit: usize) -> Vec<(Vec<usize>, Marking)> {
    let silent: Vec<usize> = (0..net.transitions().len())
        .filter(|&t| net.transitions()[t].is_silent())
        .collect();
    let mut out = vec![(Vec::new(), m.clone())];
    if silent.is_empty() {
        return out;
    }
    let mut seen: HashSet<Marking> = HashSet::from([m.clone()]);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for &t in &silent {
            if !net.is_enabled(&out[i].1, t) {
                continue;
            }
            let next = net.fire_unchecked(&out[i].1, t);
            if next.max_tokens() > DEFAULT_TOKEN_CAP || !seen.insert(next.clone()) {
                continue;
            }
            let mut path = out[i].0.clone();
            path.push(t);
            out.push((path, next));
            queue.push_back(out.len() - 1);
            if out.len() >= limit {
                return out;
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Escaping-edges precision

/// Escaping-edges precision over the prefix automaton of the log.
///
/// For every log prefix `s` with frequency `f(s)`, `A(s)` is the set of
/// labels enabled in any marking reachable by replaying `s` (closed under
/// silent firings) and `E(s) = A(s) \ O(s)` the enabled labels the log
/// never continues with. Precision is `1 − Σ f|E| / Σ f|A|`. A prefix that
/// cannot be replayed ends its branch: it and its extensions are not
/// counted.
#[derive(Debug, Clone, Copy)]
pub struct EtcPrecision {
    pub token_cap: u32,
    /// Bound on the reachable-marking set kept per prefix.
    pub marking_limit: usize,
}

impl Default for EtcPrecision {
    fn default() -> Self {
        EtcPrecision {
            token_cap: DEFAULT_TOKEN_CAP,
            marking_limit: 10_000,
        }
    }
}

#[derive(Default)]
struct PrefixNode {
    freq: u64,
    children: BTreeMap<Activity, usize>,
}

impl PrecisionMeasure for EtcPrecision {
    fn name(&self) -> &'static str {
        "etc"
    }

    fn precision(&self, net: &PetriNet, lstar: &VariantLog) -> f64 {
        let (escaping, allowed) = self.escaping_edges(net, lstar);
        if allowed == 0 {
            1.0
        } else {
            1.0 - escaping as f64 / allowed as f64
        }
    }
}

impl EtcPrecision {
    /// `(Σ f(s)|E(s)|, Σ f(s)|A(s)|)` over the prefix automaton.
    pub fn escaping_edges(&self, net: &PetriNet, lstar: &VariantLog) -> (u64, u64) {
        let mut nodes = vec![PrefixNode::default()];
        for v in lstar.iter() {
            let mut cur = 0;
            nodes[0].freq += 1;
            for a in v.labels() {
                cur = match nodes[cur].children.get(a) {
                    Some(&c) => c,
                    None => {
                        nodes.push(PrefixNode::default());
                        let id = nodes.len() - 1;
                        nodes[cur].children.insert(a.clone(), id);
                        id
                    }
                };
                nodes[cur].freq += 1;
            }
        }

        let root = net.silent_closure(vec![net.initial_marking().clone()], self.token_cap, self.marking_limit);
        let mut escaping = 0u64;
        let mut allowed = 0u64;
        let mut stack = vec![(0usize, root)];
        while let Some((node, markings)) = stack.pop() {
            let enabled = enabled_labels(net, &markings);
            let observed = &nodes[node].children;
            let escapes = enabled.keys().filter(|l| !observed.contains_key(*l)).count() as u64;
            escaping += nodes[node].freq * escapes;
            allowed += nodes[node].freq * enabled.len() as u64;
            for (label, &child) in observed {
                let Some(ts) = enabled.get(label) else { continue };
                let mut next: Vec<Marking> = Vec::new();
                let mut seen = HashSet::new();
                for m in &markings {
                    for &t in ts {
                        if net.is_enabled(m, t) {
                            let n = net.fire_unchecked(m, t);
                            if seen.insert(n.clone()) {
                                next.push(n);
                            }
                        }
                    }
                }
                let next = net.silent_closure(next, self.token_cap, self.marking_limit);
                if !next.is_empty() {
                    stack.push((child, next));
                }
            }
        }
        (escaping, allowed)
    }
}

fn enabled_labels<'a>(net: &'a PetriNet, markings: &[Marking]) -> BTreeMap<&'a Activity, BTreeSet<usize>> {
    let mut out: BTreeMap<&Activity, BTreeSet<usize>> = BTreeMap::new();
    for m in markings {
        for t in net.enabled(m) {
            if let Some(l) = &net.transitions()[t].label {
                out.entry(l).or_default().insert(t);
            }
        }
    }
    out
}

/// Escaping-edges precision with default settings.
pub fn etc_precision(net: &PetriNet, lstar: &VariantLog) -> f64 {
    EtcPrecision::default().precision(net, lstar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::log::UniqueVariantLog;
    use crate::petri::fixtures::*;
    use crate::petri::{flower_model, trace_model, NetBuilder};
    use crate::variant;

    fn acts(labels: &[&str]) -> Vec<Activity> {
        labels.iter().map(|l| Activity::new(l).unwrap()).collect()
    }

    #[test]
    fn harmonic_mean() {
        assert_eq!(avatar_generalization(1.0, 1.0), 1.0);
        assert_eq!(avatar_generalization(0.0, 0.7), 0.0);
        assert_eq!(avatar_generalization(0.0, 0.0), 0.0);
        assert!((avatar_generalization(0.5, 1.0) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn trace_model_replays_perfectly() {
        let lplus: UniqueVariantLog = [variant!["a", "b"], variant!["a", "c", "d"], variant!["a"]]
            .into_iter()
            .collect();
        let net = trace_model(&lplus).unwrap();
        let lstar = VariantLog::new(vec![
            variant!["a", "b"],
            variant!["a", "b"],
            variant!["a", "c", "d"],
            variant!["a"],
        ]);
        assert_eq!(token_replay_fitness(&net, &lstar), 1.0);
        assert_eq!(etc_precision(&net, &lstar), 1.0);
    }

    #[test]
    fn extra_event_costs_one_missing_one_remaining() {
        let net = sequence(&["a", "b"]);
        let lstar = VariantLog::new(vec![variant!["a", "b", "b"]]);
        let counts = TokenReplay::default().replay_log(&net, &lstar);
        assert_eq!(
            counts,
            ReplayCounts {
                missing: 1,
                remaining: 1,
                consumed: 4,
                produced: 4
            }
        );
        assert!((token_replay_fitness(&net, &lstar) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn unknown_label_is_missing() {
        let net = sequence(&["a"]);
        let counts = TokenReplay::default().replay_variant(&net, &variant!["a", "zzz"]);
        assert_eq!(counts.missing, 1);
        assert!(counts.fitness() < 1.0);
    }

    #[test]
    fn flower_fits_everything() {
        let net = flower_model(&acts(&["a", "b", "c"])).unwrap();
        let lstar = VariantLog::new(vec![variant!["a", "c", "c", "b"], variant!["b"], variant!["c", "a"]]);
        assert_eq!(token_replay_fitness(&net, &lstar), 1.0);
    }

    #[test]
    fn flower_precision_by_hand() {
        let net = flower_model(&acts(&["a", "b"])).unwrap();
        let lstar = VariantLog::new(vec![variant!["a", "b"]]);
        assert_eq!(EtcPrecision::default().escaping_edges(&net, &lstar), (4, 6));
        assert!((etc_precision(&net, &lstar) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn silent_transitions_replay() {
        let net = skip_net();
        let lstar = VariantLog::new(vec![variant!["a"], variant!["a", "b"]]);
        assert_eq!(token_replay_fitness(&net, &lstar), 1.0);
        assert_eq!(etc_precision(&net, &lstar), 1.0);
        // only ⟨a⟩ observed: b escapes after a
        let lstar = VariantLog::new(vec![variant!["a"]]);
        assert_eq!(EtcPrecision::default().escaping_edges(&net, &lstar), (1, 2));
    }

    #[test]
    fn silent_step_enables_next_label() {
        // p0 -τ-> p1 -a-> p2
        let mut b = NetBuilder::new();
        let p: Vec<usize> = (0..3).map(|i| b.add_place(format!("p{i}")).unwrap()).collect();
        let tau = b.add_transition("tau", None).unwrap();
        let a = b.add_transition("a", act("a")).unwrap();
        b.input_arc(p[0], tau);
        b.output_arc(tau, p[1]);
        b.input_arc(p[1], a);
        b.output_arc(a, p[2]);
        b.initial_tokens("p0", 1).unwrap();
        b.add_final_marking([("p2".into(), 1)].into()).unwrap();
        let net = b.build().unwrap();
        let counts = TokenReplay::default().replay_variant(&net, &variant!["a"]);
        assert!(counts.is_perfect());
        assert_eq!(counts.consumed, counts.produced);
    }

    #[test]
    fn non_replayable_prefix_truncates() {
        let net = sequence(&["a", "b"]);
        // after ⟨x⟩ nothing can be replayed; only the root counts
        let lstar = VariantLog::new(vec![variant!["x", "a"]]);
        assert_eq!(EtcPrecision::default().escaping_edges(&net, &lstar), (1, 1));
    }

    #[test]
    fn set_ratios() {
        let a: BTreeSet<Variant> = [variant!["a"], variant!["b"]].into();
        let b: BTreeSet<Variant> = [variant!["c"]].into();
        assert_eq!(system_fitness(&a, &a).unwrap(), 1.0);
        assert_eq!(system_fitness(&a, &b).unwrap(), 0.0);
        assert_eq!(system_precision(&a, &a), 1.0);
        assert_eq!(system_precision(&b, &a), 0.0);
        assert_eq!(system_precision(&BTreeSet::new(), &a), 0.0);
        assert!(system_fitness(&a, &BTreeSet::new()).is_err());
    }

    #[test]
    fn system_ratios_from_counts() {
        // 120 of 178 system variants modelled, 176 modelled in total
        let v_s: BTreeSet<Variant> = (0..178).map(|i| variant![format!("s{i}")]).collect();
        let v_pn: BTreeSet<Variant> = (0..120)
            .map(|i| variant![format!("s{i}")])
            .chain((0..56).map(|i| variant![format!("x{i}")]))
            .collect();
        assert!((system_fitness(&v_pn, &v_s).unwrap() - 0.6742).abs() < 5e-5);
        assert!((system_precision(&v_pn, &v_s) - 0.6818).abs() < 5e-5);
    }
}
