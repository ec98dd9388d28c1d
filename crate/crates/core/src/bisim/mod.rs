//! Bisimulation under intervention between pointed models, with
//! distinguishing formulas when two points differ.
//!
//! States are pairs of a model variant (the original model with some
//! sequence of declared interventions applied) and a configuration. A state
//! moves by a transition of its variant, or, for each declared intervention
//! `θ`, by switching to the variant with `θ` applied and then taking one
//! transition there; the second kind mirrors the `⟨θ⟩` modality. Two states
//! agree on atoms when they satisfy the same declared named atoms.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::Formula;
use crate::model::{Configuration, ModelError, SystemModel};

#[derive(Debug, Error)]
pub enum BisimError {
    #[error("the models declare different atoms: {0}")]
    AtomMismatch(String),
    #[error("the models declare different interventions: {0}")]
    InterventionMismatch(String),
    #[error("more than {0} model variants under the declared interventions")]
    TooManyVariants(usize),
    #[error("more than {0} reachable states")]
    TooManyStates(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointedModel {
    pub model: SystemModel,
    pub point: Configuration,
}

impl PointedModel {
    pub fn new(model: SystemModel, point: Configuration) -> Result<PointedModel, BisimError> {
        model.check_config(&point)?;
        Ok(PointedModel { model, point })
    }
}

/// Variants reachable by applying declared interventions in any order.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantGraph {
    /// Index 0 is the original model.
    pub variants: Vec<SystemModel>,
    /// `(from, intervention, to)`, one per variant and intervention.
    pub edges: Vec<(usize, String, usize)>,
}

impl VariantGraph {
    pub fn successor(&self, v: usize, theta: &str) -> Option<usize> {
        self.edges.iter().find(|(a, t, _)| *a == v && t == theta).map(|e| e.2)
    }
}

/// Most variants [`intervention_closure`] will build.
pub const VARIANT_CAP: usize = 4096;

/// Two variants are the same when their components (rules, contexts and open
/// inputs) are equal.
pub fn intervention_closure(model: &SystemModel) -> Result<VariantGraph, BisimError> {
    let mut variants = vec![model.clone()];
    let mut edges = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        for theta in model.interventions() {
            let next = variants[v].apply_intervention(theta)?;
            let to = match variants.iter().position(|w| w.components() == next.components()) {
                Some(i) => i,
                None => {
                    if variants.len() == VARIANT_CAP {
                        return Err(BisimError::TooManyVariants(VARIANT_CAP));
                    }
                    variants.push(next);
                    queue.push_back(variants.len() - 1);
                    variants.len() - 1
                }
            };
            edges.push((v, theta.name.clone(), to));
        }
    }
    Ok(VariantGraph { variants, edges })
}

/// A state of the product: which side, which variant, which configuration.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct State {
    pub variant: usize,
    pub configuration: Configuration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisimRelation {
    /// Related pairs reachable from the query pair, left state first.
    pub pairs: Vec<(State, State)>,
    /// Refinement rounds until the partition was stable.
    pub rounds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum BisimOutcome {
    Bisimilar(BisimRelation),
    /// Holds at the left point and fails at the right one; contains no `∗`.
    Distinguished {
        formula: Formula,
    },
}

impl BisimOutcome {
    pub fn is_bisimilar(&self) -> bool {
        matches!(self, BisimOutcome::Bisimilar(_))
    }
}

/// Move labels: `None` is a transition, `Some(k)` the `k`-th intervention.
type Label = Option<usize>;

struct Product {
    /// `(side, state)` per index.
    states: Vec<(usize, State)>,
    atoms: Vec<Vec<bool>>,
    /// Successors per label, per state.
    moves: Vec<Vec<Vec<usize>>>,
    labels: Vec<Label>,
}

fn check_vocabulary(a: &SystemModel, b: &SystemModel) -> Result<(Vec<String>, Vec<String>), BisimError> {
    let atoms = |m: &SystemModel| m.atoms().iter().map(|x| x.name.clone()).collect::<BTreeSet<_>>();
    let thetas = |m: &SystemModel| {
        m.interventions()
            .iter()
            .map(|x| x.name.clone())
            .collect::<BTreeSet<_>>()
    };
    let diff =
        |x: &BTreeSet<String>, y: &BTreeSet<String>| x.symmetric_difference(y).cloned().collect::<Vec<_>>().join(", ");
    let (pa, pb) = (atoms(a), atoms(b));
    if pa != pb {
        return Err(BisimError::AtomMismatch(diff(&pa, &pb)));
    }
    let (ta, tb) = (thetas(a), thetas(b));
    if ta != tb {
        return Err(BisimError::InterventionMismatch(diff(&ta, &tb)));
    }
    Ok((pa.into_iter().collect(), ta.into_iter().collect()))
}

fn build(
    a: &PointedModel,
    b: &PointedModel,
    atoms: &[String],
    thetas: &[String],
) -> Result<(Product, [usize; 2]), BisimError> {
    let graphs = [intervention_closure(&a.model)?, intervention_closure(&b.model)?];
    let cap = a.model.settings().max_states.min(b.model.settings().max_states);
    let labels: Vec<Label> = std::iter::once(None).chain((0..thetas.len()).map(Some)).collect();
    let mut index: HashMap<(usize, State), usize> = HashMap::new();
    let mut p = Product {
        states: Vec::new(),
        atoms: Vec::new(),
        moves: Vec::new(),
        labels: labels.clone(),
    };
    let mut queue = VecDeque::new();
    let mut intern = |key: (usize, State), p: &mut Product, queue: &mut VecDeque<usize>| -> Result<usize, BisimError> {
        if let Some(&i) = index.get(&key) {
            return Ok(i);
        }
        if p.states.len() >= cap {
            return Err(BisimError::TooManyStates(cap));
        }
        let m = &graphs[key.0].variants[key.1.variant];
        p.atoms.push(
            atoms
                .iter()
                .map(|n| m.atom(n).is_some_and(|x| m.atom_holds(x, &key.1.configuration)))
                .collect(),
        );
        p.moves.push(Vec::new());
        p.states.push(key.clone());
        let i = p.states.len() - 1;
        index.insert(key, i);
        queue.push_back(i);
        Ok(i)
    };
    let roots = [
        intern(
            (
                0,
                State {
                    variant: 0,
                    configuration: a.point.clone(),
                },
            ),
            &mut p,
            &mut queue,
        )?,
        intern(
            (
                1,
                State {
                    variant: 0,
                    configuration: b.point.clone(),
                },
            ),
            &mut p,
            &mut queue,
        )?,
    ];
    while let Some(i) = queue.pop_front() {
        let (side, st) = p.states[i].clone();
        let g = &graphs[side];
        let mut out = Vec::with_capacity(labels.len());
        for l in &labels {
            let v = match l {
                None => st.variant,
                Some(k) => g
                    .successor(st.variant, &thetas[*k])
                    .expect("closure covers every intervention"),
            };
            let mut succ = Vec::new();
            for h in g.variants[v].successors_unchecked(&st.configuration) {
                succ.push(intern(
                    (
                        side,
                        State {
                            variant: v,
                            configuration: h,
                        },
                    ),
                    &mut p,
                    &mut queue,
                )?);
            }
            succ.sort_unstable();
            succ.dedup();
            out.push(succ);
        }
        p.moves[i] = out;
    }
    Ok((p, roots))
}

/// Partition history: `history[r][s]` is the block of `s` after `r` rounds.
fn refine(p: &Product) -> Vec<Vec<usize>> {
    let mut ids: HashMap<Vec<bool>, usize> = HashMap::new();
    let first: Vec<usize> = p
        .atoms
        .iter()
        .map(|a| {
            let n = ids.len();
            *ids.entry(a.clone()).or_insert(n)
        })
        .collect();
    let mut history = vec![first];
    loop {
        let cur = history.last().unwrap();
        let mut ids: HashMap<(usize, Vec<Vec<usize>>), usize> = HashMap::new();
        let next: Vec<usize> = (0..p.states.len())
            .map(|s| {
                let sig: Vec<Vec<usize>> = p.moves[s]
                    .iter()
                    .map(|succ| {
                        let mut b: Vec<usize> = succ.iter().map(|&t| cur[t]).collect();
                        b.sort_unstable();
                        b.dedup();
                        b
                    })
                    .collect();
                let n = ids.len();
                *ids.entry((cur[s], sig)).or_insert(n)
            })
            .collect();
        let stable = ids.len() == count(cur);
        history.push(next);
        if stable {
            return history;
        }
    }
}

fn count(blocks: &[usize]) -> usize {
    blocks.iter().collect::<BTreeSet<_>>().len()
}

struct Distinguisher<'a> {
    p: &'a Product,
    history: &'a [Vec<usize>],
    atoms: &'a [String],
    thetas: &'a [String],
    memo: HashMap<(usize, usize), Formula>,
}

fn rank(f: &Formula) -> (usize, usize, &Formula) {
    (f.modal_depth(), f.size(), f)
}

impl Distinguisher<'_> {
    fn level(&self, s: usize, t: usize) -> usize {
        self.history
            .iter()
            .position(|h| h[s] != h[t])
            .expect("states are distinguished")
    }

    fn modality(&self, l: Label, body: Formula) -> Formula {
        match l {
            None => body.diamond(),
            Some(k) => Formula::intervene(&self.thetas[k], body),
        }
    }

    /// `⟨l⟩ ⋀ dist(s', t')` over every `l`-successor `t'` of the other state.
    fn witness(&mut self, l: usize, s2: usize, others: &[usize]) -> Formula {
        let parts: BTreeSet<Formula> = others.iter().map(|&t2| self.dist(s2, t2)).collect();
        self.modality(self.p.labels[l], Formula::all(parts))
    }

    /// A `∗`-free formula true at `s` and false at `t`.
    fn dist(&mut self, s: usize, t: usize) -> Formula {
        if let Some(f) = self.memo.get(&(s, t)) {
            return f.clone();
        }
        let r = self.level(s, t);
        let f = if r == 0 {
            let k = (0..self.atoms.len())
                .find(|&k| self.p.atoms[s][k] != self.p.atoms[t][k])
                .unwrap();
            let a = Formula::atom(&self.atoms[k]);
            if self.p.atoms[s][k] {
                a
            } else {
                a.not()
            }
        } else {
            let prev = &self.history[r - 1];
            let mut best: Option<Formula> = None;
            for l in 0..self.p.labels.len() {
                let (ss, ts) = (self.p.moves[s][l].clone(), self.p.moves[t][l].clone());
                let blocks = |xs: &[usize]| xs.iter().map(|&x| prev[x]).collect::<BTreeSet<_>>();
                let (bs, bt) = (blocks(&ss), blocks(&ts));
                let mut cands = Vec::new();
                for &s2 in ss.iter().filter(|&&x| !bt.contains(&prev[x])) {
                    cands.push(self.witness(l, s2, &ts));
                }
                for &t2 in ts.iter().filter(|&&x| !bs.contains(&prev[x])) {
                    cands.push(self.witness(l, t2, &ss).not());
                }
                for c in cands {
                    if best.as_ref().is_none_or(|b| rank(&c) < rank(b)) {
                        best = Some(c);
                    }
                }
            }
            best.expect("a split round has a distinguishing move")
        };
        self.memo.insert((s, t), f.clone());
        f
    }
}

/// Decide whether the two pointed models are bisimilar under intervention.
pub fn check_bisim(a: &PointedModel, b: &PointedModel) -> Result<BisimOutcome, BisimError> {
    let (atoms, thetas) = check_vocabulary(&a.model, &b.model)?;
    let (p, [ra, rb]) = build(a, b, &atoms, &thetas)?;
    let history = refine(&p);
    let last = history.last().unwrap();
    if last[ra] != last[rb] {
        let mut d = Distinguisher {
            p: &p,
            history: &history,
            atoms: &atoms,
            thetas: &thetas,
            memo: HashMap::new(),
        };
        return Ok(BisimOutcome::Distinguished {
            formula: d.dist(ra, rb),
        });
    }
    // Related pairs reachable from the roots by matching moves.
    let mut seen = BTreeSet::from([(ra, rb)]);
    let mut queue = VecDeque::from([(ra, rb)]);
    while let Some((s, t)) = queue.pop_front() {
        for l in 0..p.labels.len() {
            for &s2 in &p.moves[s][l] {
                for &t2 in &p.moves[t][l] {
                    if last[s2] == last[t2] && seen.insert((s2, t2)) {
                        queue.push_back((s2, t2));
                    }
                }
            }
        }
    }
    let pairs = seen
        .into_iter()
        .map(|(s, t)| (p.states[s].1.clone(), p.states[t].1.clone()))
        .collect();
    Ok(BisimOutcome::Bisimilar(BisimRelation {
        pairs,
        rounds: history.len() - 1,
    }))
}

/// Named atoms of the model, for building formula suites over the shared
/// vocabulary.
pub fn vocabulary(model: &SystemModel) -> (Vec<String>, Vec<String>) {
    (
        model.atoms().iter().map(|a| a.name.clone()).collect(),
        model.interventions().iter().map(|t| t.name.clone()).collect(),
    )
}
