//! Baseline nets: the overfitting trace model, the underfitting flower
//! model, and a directly-follows miner.

use std::collections::BTreeMap;

use indexmap::{IndexMap, IndexSet};

use super::{NetBuilder, PetriNet};
use crate::error::{Error, Result};
use crate::log::{Activity, UniqueVariantLog, VariantLog};

/// A prefix-tree net that plays out exactly the given variants.
///
/// Each tree node is a place and each edge a labelled transition; every
/// node where a variant ends contributes a final marking.
pub fn trace_model(lplus: &UniqueVariantLog) -> Result<PetriNet> {
    if lplus.is_empty() {
        return Err(Error::invalid("trace model needs at least one variant"));
    }
    let mut b = NetBuilder::new();
    // (parent node, label) -> child node
    let mut children: IndexMap<(usize, Activity), usize> = IndexMap::new();
    let mut terminal: IndexSet<usize> = IndexSet::new();
    let root = b.add_place("n0")?;
    let mut n_nodes = 1;
    for v in lplus {
        let mut node = root;
        for a in v.labels() {
            node = match children.get(&(node, a.clone())) {
                Some(&c) => c,
                None => {
                    let child = b.add_place(format!("n{n_nodes}"))?;
                    n_nodes += 1;
                    let t = b.add_transition(format!("t{}", children.len()), Some(a.clone()))?;
                    b.input_arc(node, t);
                    b.output_arc(t, child);
                    children.insert((node, a.clone()), child);
                    child
                }
            };
        }
        terminal.insert(node);
    }
    b.initial_tokens("n0", 1)?;
    for node in terminal {
        b.add_final_marking(BTreeMap::from([(format!("n{node}"), 1)]))?;
    }
    b.build()
}

/// A single hub place with one self-loop transition per activity: any
/// sequence over the alphabet can be played out.
pub fn flower_model(alphabet: &[Activity]) -> Result<PetriNet> {
    let labels: IndexSet<&Activity> = alphabet.iter().collect();
    if labels.is_empty() {
        return Err(Error::invalid("flower model needs a non-empty alphabet"));
    }
    let mut b = NetBuilder::new();
    let hub = b.add_place("hub")?;
    for (i, a) in labels.into_iter().enumerate() {
        let t = b.add_transition(format!("t{i}"), Some(a.clone()))?;
        b.input_arc(hub, t);
        b.output_arc(t, hub);
    }
    b.initial_tokens("hub", 1)?;
    b.add_final_marking(BTreeMap::from([("hub".to_string(), 1)]))?;
    b.build()
}

/// Directly-follows discovery.
///
/// One place per activity holds the state "this activity just happened",
/// plus a start place. Every start activity gets a transition out of the
/// start place, every directly-follows pair `(a, b)` a transition labelled
/// `b` from the place of `a` to the place of `b`. Each end activity's place
/// is a final marking. Every variant of the log replays without missing or
/// remaining tokens.
pub fn dfg_discover(lstar: &VariantLog) -> Result<PetriNet> {
    if lstar.is_empty() {
        return Err(Error::invalid("directly-follows discovery needs a non-empty log"));
    }
    let mut activities: IndexSet<Activity> = IndexSet::new();
    let mut starts: IndexSet<usize> = IndexSet::new();
    let mut ends: IndexSet<usize> = IndexSet::new();
    let mut follows: IndexSet<(usize, usize)> = IndexSet::new();
    for v in lstar.iter() {
        let ids: Vec<usize> = v.labels().iter().map(|a| activities.insert_full(a.clone()).0).collect();
        starts.insert(ids[0]);
        ends.insert(ids[ids.len() - 1]);
        for w in ids.windows(2) {
            follows.insert((w[0], w[1]));
        }
    }

    let mut b = NetBuilder::new();
    let start = b.add_place("start")?;
    let after: Vec<usize> = (0..activities.len())
        .map(|i| b.add_place(format!("after_{i}")))
        .collect::<Result<_>>()?;
    for &s in &starts {
        let t = b.add_transition(format!("start_{s}"), Some(activities[s].clone()))?;
        b.input_arc(start, t);
        b.output_arc(t, after[s]);
    }
    for &(x, y) in &follows {
        let t = b.add_transition(format!("df_{x}_{y}"), Some(activities[y].clone()))?;
        b.input_arc(after[x], t);
        b.output_arc(t, after[y]);
    }
    b.initial_tokens("start", 1)?;
    for &e in &ends {
        b.add_final_marking(BTreeMap::from([(format!("after_{e}"), 1)]))?;
    }
    b.build()
}
