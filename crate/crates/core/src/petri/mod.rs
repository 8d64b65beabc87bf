//! Labeled place/transition nets with silent transitions.
//!
//! Nets are immutable once built. Places and transitions are addressed by
//! dense indices internally; the string ids only matter at the JSON boundary.

mod models;
mod playout;

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::log::Activity;

pub use models::{dfg_discover, flower_model, trace_model};
pub use playout::{playout_enumerate, playout_with, PlayoutOptions, DEFAULT_BUDGET, DEFAULT_TOKEN_CAP};

/// Token counts per place, indexed like [`PetriNet::places`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking(Vec<u32>);

impl Marking {
    pub fn empty(places: usize) -> Self {
        Marking(vec![0; places])
    }

    pub fn tokens(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, place: usize) -> u32 {
        self.0.get(place).copied().unwrap_or(0)
    }

    pub fn set(&mut self, place: usize, count: u32) {
        self.0[place] = count;
    }

    pub fn add(&mut self, place: usize, count: u32) {
        self.0[place] += count;
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| c as u64).sum()
    }

    pub fn max_tokens(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub id: String,
    /// `None` marks a silent transition.
    pub label: Option<Activity>,
}

impl Transition {
    pub fn is_silent(&self) -> bool {
        self.label.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct RawArc {
    from: String,
    to: String,
}

/// The PN JSON interchange format.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawNet {
    places: Vec<String>,
    transitions: Vec<Transition>,
    arcs: Vec<RawArc>,
    initial_marking: BTreeMap<String, u32>,
    #[serde(default)]
    final_markings: Vec<BTreeMap<String, u32>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PetriNet {
    places: Vec<String>,
    transitions: Vec<Transition>,
    /// (place, transition) input arcs and (transition, place) output arcs,
    /// in insertion order.
    arcs: Vec<ArcRef>,
    initial: Marking,
    finals: Vec<Marking>,
    preset: Vec<Vec<usize>>,
    postset: Vec<Vec<usize>>,
    labels: Vec<Activity>,
    label_of: Vec<Option<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum ArcRef {
    PlaceToTransition(usize, usize),
    TransitionToPlace(usize, usize),
}

impl PetriNet {
    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn initial_marking(&self) -> &Marking {
        &self.initial
    }

    pub fn final_markings(&self) -> &[Marking] {
        &self.finals
    }

    /// Input places of a transition.
    pub fn preset(&self, t: usize) -> &[usize] {
        &self.preset[t]
    }

    /// Output places of a transition.
    pub fn postset(&self, t: usize) -> &[usize] {
        &self.postset[t]
    }

    /// Distinct visible labels, in transition order.
    pub fn alphabet(&self) -> &[Activity] {
        &self.labels
    }

    /// Index into [`Self::alphabet`] for a visible transition.
    pub(crate) fn label_index(&self, t: usize) -> Option<usize> {
        self.label_of[t]
    }

    pub fn has_silent(&self) -> bool {
        self.transitions.iter().any(Transition::is_silent)
    }

    pub fn place_index(&self, id: &str) -> Option<usize> {
        self.places.iter().position(|p| p == id)
    }

    pub fn transition_index(&self, id: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.id == id)
    }

    pub fn is_final(&self, m: &Marking) -> bool {
        self.finals.iter().any(|f| f == m)
    }

    /// The same net with no final markings, so playout records every
    /// dead end and replay ends permissively.
    pub fn without_final_markings(&self) -> PetriNet {
        PetriNet {
            finals: Vec::new(),
            ..self.clone()
        }
    }

    /// Builds a dense marking from a place-id map. Unknown places are rejected.
    pub fn marking_from_map(&self, map: &BTreeMap<String, u32>) -> Result<Marking> {
        let mut m = Marking::empty(self.places.len());
        for (p, &c) in map {
            let i = self
                .place_index(p)
                .ok_or_else(|| Error::invalid(format!("marking references unknown place {p:?}")))?;
            m.set(i, c);
        }
        Ok(m)
    }

    /// Sparse map of the non-zero places.
    pub fn marking_to_map(&self, m: &Marking) -> BTreeMap<String, u32> {
        m.tokens()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (self.places[i].clone(), c))
            .collect()
    }

    pub fn is_enabled(&self, m: &Marking, t: usize) -> bool {
        self.preset[t].iter().all(|&p| m.get(p) >= 1)
    }

    /// Transitions whose every input place holds at least one token.
    pub fn enabled(&self, m: &Marking) -> Vec<usize> {
        (0..self.transitions.len()).filter(|&t| self.is_enabled(m, t)).collect()
    }

    /// Ids of [`Self::enabled`].
    pub fn enabled_ids(&self, m: &Marking) -> Vec<&str> {
        self.enabled(m).into_iter().map(|t| self.transitions[t].id.as_str()).collect()
    }

    pub fn fire(&self, m: &Marking, t: usize) -> Result<Marking> {
        if t >= self.transitions.len() {
            return Err(Error::invalid(format!("no transition with index {t}")));
        }
        if !self.is_enabled(m, t) {
            return Err(Error::Precondition(format!(
                "transition {:?} is not enabled",
                self.transitions[t].id
            )));
        }
        Ok(self.fire_unchecked(m, t))
    }

    pub(crate) fn fire_unchecked(&self, m: &Marking, t: usize) -> Marking {
        let mut next = m.clone();
        for &p in &self.preset[t] {
            next.0[p] -= 1;
        }
        for &p in &self.postset[t] {
            next.0[p] += 1;
        }
        next
    }

    /// Silent-transition closure of a set of markings, bounded by a token cap
    /// per place and a cap on the number of markings.
    pub(crate) fn silent_closure(&self, start: Vec<Marking>, token_cap: u32, limit: usize) -> Vec<Marking> {
        let mut seen: HashSet<Marking> = start.iter().cloned().collect();
        let mut out = start.clone();
        let mut queue: VecDeque<Marking> = start.into();
        while let Some(m) = queue.pop_front() {
            for t in 0..self.transitions.len() {
                if !self.transitions[t].is_silent() || !self.is_enabled(&m, t) {
                    continue;
                }
                let next = self.fire_unchecked(&m, t);
                if next.max_tokens() > token_cap || seen.contains(&next) {
                    continue;
                }
                if seen.len() >= limit {
                    return out;
                }
                seen.insert(next.clone());
                out.push(next.clone());
                queue.push_back(next);
            }
        }
        out
    }

    /// Diagnostic probe: can some final marking be reached from the initial
    /// marking while no place exceeds `token_cap`? `None` means the probe ran
    /// out of budget or the net declares no final marking.
    pub fn has_reachable_final_marking(&self, token_cap: u32, budget: usize) -> Option<bool> {
        if self.finals.is_empty() {
            return None;
        }
        let mut seen = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(self.initial.clone());
        queue.push_back(self.initial.clone());
        while let Some(m) = queue.pop_front() {
            if self.is_final(&m) {
                return Some(true);
            }
            for t in self.enabled(&m) {
                let next = self.fire_unchecked(&m, t);
                if next.max_tokens() <= token_cap && seen.insert(next.clone()) {
                    if seen.len() > budget {
                        return None;
                    }
                    queue.push_back(next);
                }
            }
        }
        Some(false)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: RawNet = serde_json::from_str(s)?;
        raw.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_raw()).expect("nets always serialize")
    }

    fn to_raw(&self) -> RawNet {
        let arcs = self
            .arcs
            .iter()
            .map(|a| match *a {
                ArcRef::PlaceToTransition(p, t) => RawArc {
                    from: self.places[p].clone(),
                    to: self.transitions[t].id.clone(),
                },
                ArcRef::TransitionToPlace(t, p) => RawArc {
                    from: self.transitions[t].id.clone(),
                    to: self.places[p].clone(),
                },
            })
            .collect();
        RawNet {
            places: self.places.clone(),
            transitions: self.transitions.clone(),
            arcs,
            initial_marking: self.marking_to_map(&self.initial),
            final_markings: self.finals.iter().map(|m| self.marking_to_map(m)).collect(),
        }
    }
}

impl Serialize for PetriNet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_raw().serialize(s)
    }
}

impl<'de> Deserialize<'de> for PetriNet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        RawNet::deserialize(d)?.try_into().map_err(serde::de::Error::custom)
    }
}

impl TryFrom<RawNet> for PetriNet {
    type Error = Error;

    fn try_from(raw: RawNet) -> Result<Self> {
        let mut b = NetBuilder::new();
        for p in raw.places {
            b.add_place(p)?;
        }
        for t in raw.transitions {
            b.add_transition(t.id, t.label)?;
        }
        for a in raw.arcs {
            b.add_arc(&a.from, &a.to)?;
        }
        for (p, c) in raw.initial_marking {
            b.initial_tokens(&p, c)?;
        }
        for f in raw.final_markings {
            b.add_final_marking(f)?;
        }
        b.build()
    }
}

/// Incremental construction of a [`PetriNet`]; `build` validates.
#[derive(Debug, Default)]
pub struct NetBuilder {
    places: Vec<String>,
    place_ids: HashMap<String, usize>,
    transitions: Vec<Transition>,
    transition_ids: HashMap<String, usize>,
    arcs: Vec<ArcRef>,
    arc_set: HashSet<ArcRef>,
    initial: BTreeMap<usize, u32>,
    finals: Vec<BTreeMap<String, u32>>,
}

impl NetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_place(&mut self, id: impl Into<String>) -> Result<usize> {
        let id = id.into();
        if self.place_ids.contains_key(&id) || self.transition_ids.contains_key(&id) {
            return Err(Error::invalid(format!("duplicate node id {id:?}")));
        }
        let idx = self.places.len();
        self.place_ids.insert(id.clone(), idx);
        self.places.push(id);
        Ok(idx)
    }

    pub fn add_transition(&mut self, id: impl Into<String>, label: Option<Activity>) -> Result<usize> {
        let id = id.into();
        if self.place_ids.contains_key(&id) || self.transition_ids.contains_key(&id) {
            return Err(Error::invalid(format!("duplicate node id {id:?}")));
        }
        let idx = self.transitions.len();
        self.transition_ids.insert(id.clone(), idx);
        self.transitions.push(Transition { id, label });
        Ok(idx)
    }

    /// Adds an arc between two existing nodes given by id. Duplicate arcs
    /// are ignored.
    pub fn add_arc(&mut self, from: &str, to: &str) -> Result<()> {
        let arc = match (
            self.place_ids.get(from),
            self.transition_ids.get(from),
            self.place_ids.get(to),
            self.transition_ids.get(to),
        ) {
            (Some(&p), _, _, Some(&t)) => ArcRef::PlaceToTransition(p, t),
            (_, Some(&t), Some(&p), _) => ArcRef::TransitionToPlace(t, p),
            (None, None, _, _) => return Err(Error::invalid(format!("arc source {from:?} does not exist"))),
            (_, _, None, None) => return Err(Error::invalid(format!("arc target {to:?} does not exist"))),
            _ => {
                return Err(Error::invalid(format!(
                    "arc {from:?} -> {to:?} must connect a place and a transition"
                )))
            }
        };
        if self.arc_set.insert(arc) {
            self.arcs.push(arc);
        }
        Ok(())
    }

    pub fn input_arc(&mut self, place: usize, transition: usize) {
        let arc = ArcRef::PlaceToTransition(place, transition);
        if self.arc_set.insert(arc) {
            self.arcs.push(arc);
        }
    }

    pub fn output_arc(&mut self, transition: usize, place: usize) {
        let arc = ArcRef::TransitionToPlace(transition, place);
        if self.arc_set.insert(arc) {
            self.arcs.push(arc);
        }
    }

    pub fn initial_tokens(&mut self, place: &str, count: u32) -> Result<()> {
        let &p = self
            .place_ids
            .get(place)
            .ok_or_else(|| Error::invalid(format!("initial marking references unknown place {place:?}")))?;
        self.initial.insert(p, count);
        Ok(())
    }

    pub fn add_final_marking(&mut self, marking: BTreeMap<String, u32>) -> Result<()> {
        self.finals.push(marking);
        Ok(())
    }

    pub fn place_id(&self, idx: usize) -> &str {
        &self.places[idx]
    }

    pub fn build(self) -> Result<PetriNet> {
        if self.transitions.is_empty() {
            return Err(Error::invalid("net has no transitions"));
        }
        let n_places = self.places.len();
        let mut initial = Marking::empty(n_places);
        for (&p, &c) in &self.initial {
            initial.set(p, c);
        }
        if initial.total() == 0 {
            return Err(Error::invalid("initial marking holds no tokens"));
        }
        let mut finals = Vec::with_capacity(self.finals.len());
        for f in &self.finals {
            let mut m = Marking::empty(n_places);
            for (p, &c) in f {
                let &i = self
                    .place_ids
                    .get(p)
                    .ok_or_else(|| Error::invalid(format!("final marking references unknown place {p:?}")))?;
                m.set(i, c);
            }
            if !finals.contains(&m) {
                finals.push(m);
            }
        }
        let mut preset = vec![Vec::new(); self.transitions.len()];
        let mut postset = vec![Vec::new(); self.transitions.len()];
        for a in &self.arcs {
            match *a {
                ArcRef::PlaceToTransition(p, t) => preset[t].push(p),
                ArcRef::TransitionToPlace(t, p) => postset[t].push(p),
            }
        }
        let mut labels: Vec<Activity> = Vec::new();
        let mut label_of = Vec::with_capacity(self.transitions.len());
        for t in &self.transitions {
            label_of.push(t.label.as_ref().map(|l| match labels.iter().position(|x| x == l) {
                Some(i) => i,
                None => {
                    labels.push(l.clone());
                    labels.len() - 1
                }
            }));
        }
        Ok(PetriNet {
            places: self.places,
            transitions: self.transitions,
            arcs: self.arcs,
            initial,
            finals,
            preset,
            postset,
            labels,
            label_of,
        })
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn act(s: &str) -> Option<Activity> {
        Some(Activity::new(s).unwrap())
    }

    /// Chain of places p0 -t0-> p1 -t1-> ... labelled by `labels`.
    pub fn sequence(labels: &[&str]) -> PetriNet {
        let mut b = NetBuilder::new();
        let mut prev = b.add_place("p0").unwrap();
        for (i, l) in labels.iter().enumerate() {
            let t = b.add_transition(format!("t{i}"), act(l)).unwrap();
            let next = b.add_place(format!("p{}", i + 1)).unwrap();
            b.input_arc(prev, t);
            b.output_arc(t, next);
            prev = next;
        }
        b.initial_tokens("p0", 1).unwrap();
        b.add_final_marking([(format!("p{}", labels.len()), 1)].into()).unwrap();
        b.build().unwrap()
    }

    /// `a` followed by an exclusive choice between `b` and `c`.
    pub fn xor_net() -> PetriNet {
        let mut b = NetBuilder::new();
        let (p0, p1, p2) = (b.add_place("p0").unwrap(), b.add_place("p1").unwrap(), b.add_place("p2").unwrap());
        let ta = b.add_transition("ta", act("a")).unwrap();
        let tb = b.add_transition("tb", act("b")).unwrap();
        let tc = b.add_transition("tc", act("c")).unwrap();
        b.input_arc(p0, ta);
        b.output_arc(ta, p1);
        for t in [tb, tc] {
            b.input_arc(p1, t);
            b.output_arc(t, p2);
        }
        b.initial_tokens("p0", 1).unwrap();
        b.add_final_marking([("p2".into(), 1)].into()).unwrap();
        b.build().unwrap()
    }

    /// `a` followed by an optional `b` (silent skip).
    pub fn skip_net() -> PetriNet {
        let mut b = NetBuilder::new();
        let (p0, p1, p2) = (b.add_place("p0").unwrap(), b.add_place("p1").unwrap(), b.add_place("p2").unwrap());
        let ta = b.add_transition("ta", act("a")).unwrap();
        let tb = b.add_transition("tb", act("b")).unwrap();
        let tau = b.add_transition("skip", None).unwrap();
        b.input_arc(p0, ta);
        b.output_arc(ta, p1);
        for t in [tb, tau] {
            b.input_arc(p1, t);
            b.output_arc(t, p2);
        }
        b.initial_tokens("p0", 1).unwrap();
        b.add_final_marking([("p2".into(), 1)].into()).unwrap();
        b.build().unwrap()
    }

    /// split: p0 -s-> {p1, p2}; join: {p1, p2} -j-> p3.
    pub fn and_net() -> PetriNet {
        let mut b = NetBuilder::new();
        let p: Vec<usize> = (0..4).map(|i| b.add_place(format!("p{i}")).unwrap()).collect();
        let s = b.add_transition("split", act("s")).unwrap();
        let j = b.add_transition("join", act("j")).unwrap();
        b.input_arc(p[0], s);
        b.output_arc(s, p[1]);
        b.output_arc(s, p[2]);
        b.input_arc(p[1], j);
        b.input_arc(p[2], j);
        b.output_arc(j, p[3]);
        b.initial_tokens("p0", 1).unwrap();
        b.add_final_marking([("p3".into(), 1)].into()).unwrap();
        b.build().unwrap()
    }
}
