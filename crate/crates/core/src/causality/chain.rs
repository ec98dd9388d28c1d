use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::cause::{successor_table, Search};
use super::{Ac1Mode, CausalityError, CauseCertificate, CauseQuery};
use crate::model::{CompId, Configuration, Intervention, SystemModel};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainQuery {
    pub start: Configuration,
    pub end: Configuration,
    /// Effect components used to certify every link.
    pub effect: BTreeSet<CompId>,
    /// Most configurations a chain may hold.
    pub max_len: usize,
    pub mode: Ac1Mode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainLink {
    pub from: Configuration,
    pub to: Configuration,
    /// Every minimal cause of `to` from `from`.
    pub causes: Vec<CauseCertificate>,
}

impl ChainLink {
    /// Union of the minimal cause sets.
    pub fn cause_components(&self) -> BTreeSet<CompId> {
        self.causes.iter().flat_map(|c| c.cause.iter().copied()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalChain {
    pub configurations: Vec<Configuration>,
    pub effect: BTreeSet<CompId>,
    pub mode: Ac1Mode,
    pub links: Vec<ChainLink>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalProjection {
    pub configurations: BTreeSet<Configuration>,
    /// One-step transitions between projected configurations, self-loops excluded.
    pub edges: BTreeSet<(Configuration, Configuration)>,
    /// Links of the chains the projection came from.
    pub links: BTreeSet<(Configuration, Configuration)>,
    /// Each atom's extension restricted to the projection.
    pub valuation: BTreeMap<String, BTreeSet<Configuration>>,
    pub acyclic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectClass {
    Preserved,
    Disrupted,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterventionEffect {
    pub class: EffectClass,
    /// Links whose causes share a component with the intervention's targets.
    pub overlapping: Vec<usize>,
    /// An overlapping link no longer realizable in the intervened model.
    pub invalidated: Option<usize>,
    /// Whether the chain is still a causal chain of the intervened model.
    pub recertified: bool,
    pub reason: String,
}

/// Link certification over one model, memoized by encoded endpoints.
struct Links<'a> {
    model: &'a SystemModel,
    effect: BTreeSet<CompId>,
    mode: Ac1Mode,
    succ: Vec<Vec<usize>>,
    memo: HashMap<(usize, usize), bool>,
}

impl<'a> Links<'a> {
    fn new(model: &'a SystemModel, effect: BTreeSet<CompId>, mode: Ac1Mode) -> Result<Self, CausalityError> {
        model.check_cap()?;
        Ok(Links {
            model,
            effect,
            mode,
            succ: successor_table(model),
            memo: HashMap::new(),
        })
    }

    fn query(&self, a: usize, b: usize) -> CauseQuery {
        CauseQuery {
            start: self.model.decode(a),
            end: self.model.decode(b),
            effect: self.effect.clone(),
        }
    }

    /// Some nonempty set passes actuality and counterfactual dependence;
    /// the smallest such set is then a minimal cause.
    fn certified(&mut self, a: usize, b: usize) -> Result<bool, CausalityError> {
        if let Some(&v) = self.memo.get(&(a, b)) {
            return Ok(v);
        }
        let q = self.query(a, b);
        let mut s = Search::with_table(self.model, &q, self.mode, Cow::Borrowed(&self.succ));
        let all: Vec<CompId> = (0..self.model.num_components()).collect();
        let mut v = false;
        for c in super::cause::subsets_by_size(&all, false) {
            if !c.is_empty() && s.passes(&c)? {
                v = true;
                break;
            }
        }
        self.memo.insert((a, b), v);
        Ok(v)
    }

    fn causes(&self, a: usize, b: usize) -> Result<Vec<CauseCertificate>, CausalityError> {
        let q = self.query(a, b);
        Search::with_table(self.model, &q, self.mode, Cow::Borrowed(&self.succ)).find_all()
    }

    fn reach_plus(&self, a: usize) -> Vec<bool> {
        let mut seen = vec![false; self.succ.len()];
        let mut stack: Vec<usize> = self.succ[a].clone();
        while let Some(u) = stack.pop() {
            if !seen[u] {
                seen[u] = true;
                stack.extend(self.succ[u].iter().copied());
            }
        }
        seen
    }

    /// States from which `b` is reachable in zero or more steps.
    fn coreach(&self, b: usize) -> Vec<bool> {
        let mut rev = vec![Vec::new(); self.succ.len()];
        for (u, vs) in self.succ.iter().enumerate() {
            for &v in vs {
                rev[v].push(u);
            }
        }
        let mut seen = vec![false; self.succ.len()];
        let mut stack = vec![b];
        while let Some(u) = stack.pop() {
            if !seen[u] {
                seen[u] = true;
                stack.extend(rev[u].iter().copied());
            }
        }
        seen
    }

    /// Whether the encoded sequence is a causal chain: every link certified
    /// and realizable, distinct elements, and no interior element removable.
    fn is_chain(&mut self, seq: &[usize]) -> Result<bool, CausalityError> {
        if seq.len() < 2 || seq.iter().collect::<BTreeSet<_>>().len() != seq.len() {
            return Ok(false);
        }
        for w in seq.windows(2) {
            if !self.reach_plus(w[0])[w[1]] || !self.certified(w[0], w[1])? {
                return Ok(false);
            }
        }
        for w in seq.windows(3) {
            if self.certified(w[0], w[2])? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn build(&self, seq: &[usize]) -> Result<CausalChain, CausalityError> {
        let links = seq
            .windows(2)
            .map(|w| {
                Ok(ChainLink {
                    from: self.model.decode(w[0]),
                    to: self.model.decode(w[1]),
                    causes: self.causes(w[0], w[1])?,
                })
            })
            .collect::<Result<Vec<_>, CausalityError>>()?;
        Ok(CausalChain {
            configurations: seq.iter().map(|&u| self.model.decode(u)).collect(),
            effect: self.effect.clone(),
            mode: self.mode,
            links,
        })
    }
}

/// Every causal chain from `start` to `end` with at most `max_len`
/// configurations, in lexicographic order of the encoded sequence.
pub fn find_causal_chains(model: &SystemModel, q: &ChainQuery) -> Result<Vec<CausalChain>, CausalityError> {
    model.check_config(&q.start)?;
    model.check_config(&q.end)?;
    if q.max_len < 2 {
        return Err(CausalityError::ZeroLength);
    }
    if q.start == q.end {
        return Ok(Vec::new());
    }
    let mut links = Links::new(model, q.effect.clone(), q.mode)?;
    let s = model.encode(&q.start);
    let t = model.encode(&q.end);
    let fwd = links.reach_plus(s);
    let back = links.coreach(t);
    let nodes: Vec<usize> = (0..fwd.len()).filter(|&u| fwd[u] && back[u] && u != s).collect();

    let mut found = Vec::new();
    let mut path = vec![s];
    dfs(&mut links, &nodes, t, q.max_len, &mut path, &mut found)?;
    found.into_iter().map(|seq| links.build(&seq)).collect()
}

fn dfs(
    links: &mut Links,
    nodes: &[usize],
    t: usize,
    max_len: usize,
    path: &mut Vec<usize>,
    found: &mut Vec<Vec<usize>>,
) -> Result<(), CausalityError> {
    let last = *path.last().unwrap();
    for &g in nodes {
        if path.contains(&g) || (g != t && path.len() + 1 >= max_len) {
            continue;
        }
        if !links.reach_plus(last)[g] || !links.certified(last, g)? {
            continue;
        }
        // The element before `g` must not be skippable.
        if path.len() >= 2 && links.certified(path[path.len() - 2], g)? {
            continue;
        }
        path.push(g);
        if g == t {
            found.push(path.clone());
        } else {
            dfs(links, nodes, t, max_len, path, found)?;
        }
        path.pop();
    }
    Ok(())
}

/// Configurations on some chain, with the transition relation and atom
/// valuation restricted to them.
pub fn causal_projection(model: &SystemModel, chains: &[CausalChain]) -> CausalProjection {
    let configurations: BTreeSet<Configuration> =
        chains.iter().flat_map(|c| c.configurations.iter().cloned()).collect();
    let mut edges = BTreeSet::new();
    for f in &configurations {
        for g in model.successors_unchecked(f) {
            if &g != f && configurations.contains(&g) {
                edges.insert((f.clone(), g));
            }
        }
    }
    let links = chains
        .iter()
        .flat_map(|c| c.links.iter().map(|l| (l.from.clone(), l.to.clone())))
        .collect();
    let valuation = model
        .atoms()
        .iter()
        .map(|a| {
            let ext = configurations
                .iter()
                .filter(|f| model.atom_holds(a, f))
                .cloned()
                .collect();
            (a.name.clone(), ext)
        })
        .collect();
    let acyclic = is_acyclic(&configurations, &edges);
    CausalProjection {
        configurations,
        edges,
        links,
        valuation,
        acyclic,
    }
}

fn is_acyclic(nodes: &BTreeSet<Configuration>, edges: &BTreeSet<(Configuration, Configuration)>) -> bool {
    // Kahn's algorithm: acyclic iff every node gets removed.
    let mut indeg: BTreeMap<&Configuration, usize> = nodes.iter().map(|f| (f, 0)).collect();
    for (_, g) in edges {
        *indeg.get_mut(g).unwrap() += 1;
    }
    let mut ready: Vec<&Configuration> = indeg.iter().filter(|(_, &d)| d == 0).map(|(f, _)| *f).collect();
    let mut removed = 0;
    while let Some(f) = ready.pop() {
        removed += 1;
        for (a, b) in edges.range((f.clone(), Configuration(Vec::new()))..) {
            if a != f {
                break;
            }
            let d = indeg.get_mut(b).unwrap();
            *d -= 1;
            if *d == 0 {
                ready.push(b);
            }
        }
    }
    removed == nodes.len()
}

/// Whether `theta` preserves or disrupts `chain`, judged by whether any link's
/// causes touch the intervention's targets.
pub fn classify_intervention_effect(
    model: &SystemModel,
    chain: &CausalChain,
    theta: &Intervention,
) -> Result<InterventionEffect, CausalityError> {
    let mut base = Links::new(model, chain.effect.clone(), chain.mode)?;
    let seq: Vec<usize> = chain.configurations.iter().map(|f| model.encode(f)).collect();
    if !base.is_chain(&seq)? {
        return Err(CausalityError::NotAChain);
    }
    let targets = theta.target_ids();
    let overlapping: Vec<usize> = chain
        .links
        .iter()
        .enumerate()
        .filter(|(_, l)| !l.cause_components().is_disjoint(&targets))
        .map(|(i, _)| i)
        .collect();
    let intervened = model.apply_intervention(theta)?;
    let mut after = Links::new(&intervened, chain.effect.clone(), chain.mode)?;
    let recertified = after.is_chain(&seq)?;
    let invalidated = overlapping
        .iter()
        .copied()
        .find(|&i| !after.reach_plus(seq[i])[seq[i + 1]]);
    let (class, reason) = match (overlapping.is_empty(), invalidated) {
        (true, _) if recertified => (
            EffectClass::Preserved,
            "no link's cause meets the targets; the chain re-certifies".to_string(),
        ),
        (true, _) => (
            EffectClass::Indeterminate,
            "no link's cause meets the targets, yet the chain fails to re-certify".to_string(),
        ),
        (false, Some(i)) => (
            EffectClass::Disrupted,
            format!("link {i} is caused by a target and is no longer realizable"),
        ),
        (false, None) => (
            EffectClass::Indeterminate,
            "a link's cause meets the targets but every such link is still realizable".to_string(),
        ),
    };
    Ok(InterventionEffect {
        class,
        overlapping,
        invalidated,
        recertified,
        reason,
    })
}
