//! Seeded block-structured ground-truth nets for controlled experiments.

use std::collections::BTreeMap;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::log::Activity;
use crate::petri::{playout_with, NetBuilder, PetriNet, PlayoutOptions};
use crate::rng::substream;

/// Relative weights of the block operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorWeights {
    pub sequence: f64,
    pub xor: f64,
    pub and: f64,
    pub rloop: f64,
}

impl Default for OperatorWeights {
    fn default() -> Self {
        OperatorWeights {
            sequence: 0.45,
            xor: 0.3,
            and: 0.15,
            rloop: 0.1,
        }
    }
}

/// Parameters of a generated system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemSpec {
    pub seed: u64,
    /// Operator nesting depth, at most 6. Depth 0 is a single activity.
    pub depth: u32,
    pub weights: OperatorWeights,
    /// Children per sequence, XOR or AND block, inclusive range.
    pub fan_out: (u32, u32),
    /// Chance that a non-root block below the depth limit is a leaf.
    pub leaf_probability: f64,
    /// Maximum number of distinct activities.
    pub alphabet_budget: u32,
    /// Loop iterations counted into the playout length bound.
    pub loop_unroll: u32,
    /// Make one block skippable through a silent transition.
    pub silent_skip: bool,
    /// Give one leaf the label of another.
    pub duplicate_label: bool,
}

impl Default for SystemSpec {
    fn default() -> Self {
        SystemSpec {
            seed: 0,
            depth: 3,
            weights: OperatorWeights::default(),
            fan_out: (2, 3),
            leaf_probability: 0.3,
            alphabet_budget: 16,
            loop_unroll: 1,
            silent_skip: false,
            duplicate_label: false,
        }
    }
}

impl SystemSpec {
    pub fn validate(&self) -> Result<()> {
        let w = &self.weights;
        let ws = [w.sequence, w.xor, w.and, w.rloop];
        if ws.iter().any(|x| !(*x >= 0.0 && x.is_finite())) || ws.iter().all(|&x| x == 0.0) {
            return Err(Error::invalid("operator weights must be non-negative with one positive"));
        }
        if self.depth > 6 {
            return Err(Error::invalid(format!("depth {} exceeds 6", self.depth)));
        }
        if self.alphabet_budget == 0 {
            return Err(Error::invalid("alphabet budget must be at least 1"));
        }
        if self.fan_out.0 < 2 || self.fan_out.1 < self.fan_out.0 {
            return Err(Error::invalid("fan-out range must satisfy 2 ≤ min ≤ max"));
        }
        if !(0.0..=1.0).contains(&self.leaf_probability) {
            return Err(Error::invalid("leaf probability must lie in [0,1]"));
        }
        Ok(())
    }
}

/// A process tree; the net is compiled from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    Leaf(Activity),
    Sequence(Vec<Block>),
    Xor(Vec<Block>),
    And(Vec<Block>),
    /// `body (redo body)*`
    Loop(Box<Block>, Box<Block>),
    /// The inner block or nothing.
    Skip(Box<Block>),
}

impl Block {
    /// Longest variant with every loop taken `unroll` extra times.
    pub fn length_bound(&self, unroll: u32) -> usize {
        let u = unroll as usize;
        match self {
            Block::Leaf(_) => 1,
            Block::Sequence(cs) | Block::And(cs) => cs.iter().map(|c| c.length_bound(unroll)).sum(),
            Block::Xor(cs) => cs.iter().map(|c| c.length_bound(unroll)).max().unwrap_or(0),
            Block::Loop(body, redo) => (u + 1) * body.length_bound(unroll) + u * redo.length_bound(unroll),
            Block::Skip(c) => c.length_bound(unroll),
        }
    }
}

/// A generated system: its tree, net, and the playout length bound.
#[derive(Debug, Clone)]
pub struct BuiltSystem {
    pub tree: Block,
    pub net: PetriNet,
    pub length_bound: usize,
}

/// `a1, a2, …`
fn label(i: u32) -> Activity {
    Activity::new(format!("a{}", i + 1)).expect("non-empty")
}

struct TreeGen<'a> {
    spec: &'a SystemSpec,
    rng: &'a mut dyn RngCore,
    used: u32,
}

impl TreeGen<'_> {
    fn leaf(&mut self) -> Result<Block> {
        if self.used >= self.spec.alphabet_budget {
            return Err(Error::invalid(format!(
                "alphabet budget of {} activities exhausted",
                self.spec.alphabet_budget
            )));
        }
        self.used += 1;
        Ok(Block::Leaf(label(self.used - 1)))
    }

    fn block(&mut self, depth: u32, root: bool) -> Result<Block> {
        if depth == 0 || (!root && self.rng.gen::<f64>() < self.spec.leaf_probability) {
            return self.leaf();
        }
        let w = self.spec.weights;
        let total = w.sequence + w.xor + w.and + w.rloop;
        let mut u = self.rng.gen::<f64>() * total;
        let mut op = 3;
        for (i, x) in [w.sequence, w.xor, w.and, w.rloop].into_iter().enumerate() {
            if x > 0.0 && u < x {
                op = i;
                break;
            }
            u -= x;
        }
        if op == 3 && w.rloop == 0.0 {
            op = [w.sequence, w.xor, w.and].iter().rposition(|&x| x > 0.0).expect("validated");
        }
        if op == 3 {
            let body = self.block(depth - 1, false)?;
            let redo = self.block(depth - 1, false)?;
            return Ok(Block::Loop(Box::new(body), Box::new(redo)));
        }
        let n = self.rng.gen_range(self.spec.fan_out.0..=self.spec.fan_out.1);
        let children = (0..n).map(|_| self.block(depth - 1, false)).collect::<Result<Vec<_>>>()?;
        Ok(match op {
            0 => Block::Sequence(children),
            1 => Block::Xor(children),
            _ => Block::And(children),
        })
    }
}

/// Visits blocks in pre-order, allowing in-place edits.
fn visit_mut(b: &mut Block, f: &mut dyn FnMut(&mut Block)) {
    f(b);
    match b {
        Block::Leaf(_) => {}
        Block::Sequence(cs) | Block::Xor(cs) | Block::And(cs) => cs.iter_mut().for_each(|c| visit_mut(c, f)),
        Block::Loop(a, r) => {
            visit_mut(a, f);
            visit_mut(r, f);
        }
        Block::Skip(c) => visit_mut(c, f),
    }
}

/// Random process tree for `spec`.
pub fn generate_tree(spec: &SystemSpec) -> Result<Block> {
    spec.validate()?;
    let mut rng = substream(spec.seed, 0);
    let mut tree = TreeGen {
        spec,
        rng: &mut rng,
        used: 0,
    }
    .block(spec.depth, true)?;

    let mut leaves = Vec::new();
    visit_mut(&mut tree, &mut |b| {
        if let Block::Leaf(a) = b {
            leaves.push(a.clone());
        }
    });
    if spec.duplicate_label && leaves.len() >= 2 {
        let from = rng.gen_range(0..leaves.len());
        let mut to = rng.gen_range(0..leaves.len() - 1);
        if to >= from {
            to += 1;
        }
        let (src, mut k) = (leaves[from].clone(), 0);
        visit_mut(&mut tree, &mut |b| {
            if let Block::Leaf(a) = b {
                if k == to {
                    *a = src.clone();
                }
                k += 1;
            }
        });
    }
    if spec.silent_skip && leaves.len() >= 2 {
        // never the root, so at least one activity is always performed
        let target = rng.gen_range(0..leaves.len());
        let mut k = 0;
        visit_mut(&mut tree, &mut |b| {
            if let Block::Leaf(_) = b {
                if k == target {
                    *b = Block::Skip(Box::new(b.clone()));
                }
                k += 1;
            }
        });
    }
    Ok(tree)
}

/// Compiles a tree into a workflow net with places `source` and `sink`.
pub fn compile(tree: &Block) -> Result<PetriNet> {
    struct C {
        b: NetBuilder,
        places: u32,
        silent: u32,
        visible: u32,
    }
    impl C {
        fn place(&mut self) -> Result<usize> {
            self.places += 1;
            self.b.add_place(format!("p{}", self.places))
        }
        fn tau(&mut self) -> Result<usize> {
            self.silent += 1;
            self.b.add_transition(format!("tau{}", self.silent), None)
        }
        fn emit(&mut self, block: &Block, from: usize, to: usize) -> Result<()> {
            match block {
                Block::Leaf(a) => {
                    self.visible += 1;
                    let t = self.b.add_transition(format!("t{}", self.visible), Some(a.clone()))?;
                    self.b.input_arc(from, t);
                    self.b.output_arc(t, to);
                }
                Block::Sequence(cs) => {
                    let mut cur = from;
                    for (i, c) in cs.iter().enumerate() {
                        let next = if i + 1 == cs.len() { to } else { self.place()? };
                        self.emit(c, cur, next)?;
                        cur = next;
                    }
                }
                Block::Xor(cs) => {
                    for c in cs {
                        self.emit(c, from, to)?;
                    }
                }
                Block::And(cs) => {
                    let split = self.tau()?;
                    let join = self.tau()?;
                    self.b.input_arc(from, split);
                    self.b.output_arc(join, to);
                    for c in cs {
                        let (i, o) = (self.place()?, self.place()?);
                        self.b.output_arc(split, i);
                        self.b.input_arc(o, join);
                        self.emit(c, i, o)?;
                    }
                }
                Block::Loop(body, redo) => {
                    let (i, o) = (self.place()?, self.place()?);
                    let enter = self.tau()?;
                    let leave = self.tau()?;
                    self.b.input_arc(from, enter);
                    self.b.output_arc(enter, i);
                    self.b.input_arc(o, leave);
                    self.b.output_arc(leave, to);
                    self.emit(body, i, o)?;
                    self.emit(redo, o, i)?;
                }
                Block::Skip(c) => {
                    let skip = self.tau()?;
                    self.b.input_arc(from, skip);
                    self.b.output_arc(skip, to);
                    self.emit(c, from, to)?;
                }
            }
            Ok(())
        }
    }
    let mut c = C {
        b: NetBuilder::new(),
        places: 0,
        silent: 0,
        visible: 0,
    };
    let source = c.b.add_place("source")?;
    let sink = c.b.add_place("sink")?;
    c.emit(tree, source, sink)?;
    c.b.initial_tokens("source", 1)?;
    c.b.add_final_marking(BTreeMap::from([("sink".to_string(), 1)]))?;
    c.b.build()
}

/// Generates the tree for `spec` and compiles it.
pub fn build_system(spec: &SystemSpec) -> Result<BuiltSystem> {
    let tree = generate_tree(spec)?;
    let net = compile(&tree)?;
    Ok(BuiltSystem {
        length_bound: tree.length_bound(spec.loop_unroll),
        tree,
        net,
    })
}

/// Size summary of a system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityProfile {
    pub alphabet_size: usize,
    pub max_variant_len: usize,
    pub variant_count: usize,
}

/// `|A|`, the longest playable variant, and `|V_S|` under the given bounds.
pub fn complexity_profile(net: &PetriNet, token_cap: u32, max_len: usize, budget: u64) -> Result<ComplexityProfile> {
    let vs = playout_with(net, &PlayoutOptions::new(max_len).token_cap(token_cap).budget(budget))?;
    Ok(ComplexityProfile {
        alphabet_size: net.alphabet().len(),
        max_variant_len: vs.iter().map(|v| v.len()).max().unwrap_or(0),
        variant_count: vs.len(),
    })
}

/// Filter for [`select_systems`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionCriteria {
    /// Inclusive bounds on `|V_S|`.
    pub min_variants: usize,
    pub max_variants: usize,
    /// Upper bound on `Σ_{l=1..μ} |A|^l`, the size of a flower model's
    /// playout, so that every baseline can be enumerated.
    pub max_flower_playout: f64,
    pub token_cap: u32,
    pub budget: u64,
    /// Candidate seeds tried before giving up.
    pub max_attempts: u64,
}

impl Default for SelectionCriteria {
    fn default() -> Self {
        SelectionCriteria {
            min_variants: 50,
            max_variants: 300,
            max_flower_playout: 1e6,
            token_cap: 3,
            budget: 2_000_000,
            max_attempts: 10_000,
        }
    }
}

/// The first `count` systems, in seed order from `template.seed`, whose
/// profile meets `criteria`.
pub fn select_systems(
    template: &SystemSpec,
    count: usize,
    criteria: &SelectionCriteria,
) -> Result<Vec<(SystemSpec, BuiltSystem, ComplexityProfile)>> {
    template.validate()?;
    let mut out = Vec::with_capacity(count);
    for i in 0..criteria.max_attempts {
        if out.len() == count {
            break;
        }
        let spec = SystemSpec {
            seed: template.seed.wrapping_add(i),
            ..template.clone()
        };
        let Ok(sys) = build_system(&spec) else { continue };
        let profile = match complexity_profile(&sys.net, criteria.token_cap, sys.length_bound, criteria.budget) {
            Ok(p) => p,
            Err(Error::Budget { .. }) => continue,
            Err(e) => return Err(e),
        };
        let a = profile.alphabet_size as f64;
        let flower: f64 = (1..=profile.max_variant_len).map(|l| a.powi(l as i32)).sum();
        if (criteria.min_variants..=criteria.max_variants).contains(&profile.variant_count)
            && flower <= criteria.max_flower_playout
        {
            out.push((spec, sys, profile));
        }
    }
    if out.len() < count {
        return Err(Error::invalid(format!(
            "only {} of {count} systems met the selection criteria in {} attempts",
            out.len(),
            criteria.max_attempts
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::petri::playout_enumerate;
    use crate::variant;

    fn only(seq: f64, xor: f64, and: f64, rloop: f64) -> OperatorWeights {
        OperatorWeights { sequence: seq, xor, and, rloop }
    }

    #[test]
    fn depth_zero_is_one_activity() {
        let s = build_system(&SystemSpec { depth: 0, ..Default::default() }).unwrap();
        let vs = playout_enumerate(&s.net, s.length_bound, 3).unwrap();
        assert_eq!(vs.into_iter().collect::<Vec<_>>(), vec![variant!["a1"]]);
        let p = complexity_profile(&s.net, 3, 5, 1_000).unwrap();
        assert_eq!((p.alphabet_size, p.max_variant_len, p.variant_count), (1, 1, 1));
    }

    #[test]
    fn pure_sequence_has_one_variant() {
        let spec = SystemSpec {
            depth: 1,
            weights: only(1.0, 0.0, 0.0, 0.0),
            fan_out: (3, 3),
            ..Default::default()
        };
        let s = build_system(&spec).unwrap();
        let vs = playout_enumerate(&s.net, s.length_bound, 3).unwrap();
        assert_eq!(vs.len(), 1);
        assert_eq!(vs.iter().next().unwrap().len(), 3);
        for seed in 0..20 {
            let s = build_system(&SystemSpec { seed, depth: 2, ..spec.clone() }).unwrap();
            assert_eq!(playout_enumerate(&s.net, s.length_bound, 3).unwrap().len(), 1);
        }
    }

    #[test]
    fn xor_tree_counts() {
        let spec = SystemSpec {
            depth: 2,
            weights: only(0.0, 1.0, 0.0, 0.0),
            fan_out: (2, 2),
            leaf_probability: 0.0,
            ..Default::default()
        };
        let s = build_system(&spec).unwrap();
        assert_eq!(playout_enumerate(&s.net, s.length_bound, 3).unwrap().len(), 4);
    }

    #[test]
    fn xor_then_sequence() {
        let tree = Block::Sequence(vec![
            Block::Xor(vec![
                Block::Leaf(label(0)),
                Block::Leaf(label(1)),
                Block::Leaf(label(2)),
            ]),
            Block::Leaf(label(3)),
            Block::Leaf(label(4)),
        ]);
        let p = complexity_profile(&compile(&tree).unwrap(), 3, tree.length_bound(0), 10_000).unwrap();
        assert_eq!(p.variant_count, 3);
        assert_eq!(p.max_variant_len, 3);
    }

    #[test]
    fn and_and_loop_blocks() {
        let and = Block::And(vec![Block::Leaf(label(0)), Block::Leaf(label(1))]);
        let vs = playout_enumerate(&compile(&and).unwrap(), 2, 3).unwrap();
        assert_eq!(vs.len(), 2);
        let lp = Block::Loop(Box::new(Block::Leaf(label(0))), Box::new(Block::Leaf(label(1))));
        assert_eq!(lp.length_bound(2), 5);
        let vs = playout_enumerate(&compile(&lp).unwrap(), lp.length_bound(2), 3).unwrap();
        assert_eq!(vs.len(), 3); // a1, a1 a2 a1, a1 a2 a1 a2 a1
        let skip = Block::Sequence(vec![Block::Skip(Box::new(Block::Leaf(label(0)))), Block::Leaf(label(1))]);
        let vs = playout_enumerate(&compile(&skip).unwrap(), 2, 3).unwrap();
        assert_eq!(vs.len(), 2);
    }

    #[test]
    fn deterministic_and_sound() {
        for seed in 0..30 {
            let spec = SystemSpec {
                seed,
                silent_skip: seed % 2 == 0,
                duplicate_label: seed % 3 == 0,
                alphabet_budget: 40,
                ..Default::default()
            };
            let a = build_system(&spec).unwrap();
            let b = build_system(&spec).unwrap();
            assert_eq!(a.net, b.net);
            assert_eq!(a.net.has_reachable_final_marking(3, 100_000), Some(true));
            assert!(!playout_enumerate(&a.net, a.length_bound, 3).unwrap().is_empty());
        }
    }

    #[test]
    fn selection_meets_criteria() {
        let picked = select_systems(&SystemSpec { alphabet_budget: 30, ..Default::default() }, 3, &SelectionCriteria::default()).unwrap();
        assert_eq!(picked.len(), 3);
        for (spec, _, p) in &picked {
            assert!((50..=300).contains(&p.variant_count), "{spec:?} {p:?}");
        }
        assert!(picked.windows(2).all(|w| w[0].0.seed < w[1].0.seed));
        let none = SelectionCriteria { min_variants: 1_000_000, max_attempts: 5, ..Default::default() };
        assert!(select_systems(&SystemSpec::default(), 1, &none).is_err());
    }

    #[test]
    fn budget_and_validation() {
        let spec = SystemSpec {
            depth: 4,
            leaf_probability: 0.0,
            alphabet_budget: 3,
            ..Default::default()
        };
        assert!(build_system(&spec).is_err());
        assert!(build_system(&SystemSpec { depth: 7, ..Default::default() }).is_err());
        let none = SystemSpec {
            weights: only(0.0, 0.0, 0.0, 0.0),
            ..Default::default()
        };
        assert!(build_system(&none).is_err());
    }
}
