use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::CausalityError;
use crate::logic::Formula;
use crate::model::{CompId, Configuration, Intervention, RuleTable, SystemModel, Target};

/// How the actuality clause reads the cause's values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ac1Mode {
    /// Cause components hold their end values from first attainment onward.
    #[default]
    Example,
    /// Additionally, cause components already hold those values at the start.
    Strict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CauseQuery {
    pub start: Configuration,
    pub end: Configuration,
    pub effect: BTreeSet<CompId>,
}

impl CauseQuery {
    pub fn new(
        model: &SystemModel,
        start: Configuration,
        end: Configuration,
        effect: BTreeSet<CompId>,
    ) -> Result<CauseQuery, CausalityError> {
        model.check_config(&start)?;
        model.check_config(&end)?;
        if let Some(&c) = effect.iter().find(|&&c| c >= model.num_components()) {
            return Err(CausalityError::UnknownComponent(c));
        }
        Ok(CauseQuery { start, end, effect })
    }

    /// `ψ_E`: the effect components at their end values.
    pub fn effect_formula(&self, model: &SystemModel) -> Formula {
        Formula::all(
            self.effect
                .iter()
                .map(|&c| Formula::is(&model.component(c).name, model.behaviour_name(c, self.end.get(c)))),
        )
    }

    /// The configuration `χ_C` pins cause components to.
    pub fn reference(&self, mode: Ac1Mode) -> &Configuration {
        match mode {
            Ac1Mode::Example => &self.end,
            Ac1Mode::Strict => &self.start,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ac1Evidence {
    pub holds: bool,
    /// A run from start to end; empty when none qualifies.
    pub path: Vec<Configuration>,
    /// Cause components whose start value differs from their end value
    /// (only a failure in strict mode).
    pub changed: Vec<CompId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviationCheck {
    pub start: Configuration,
    /// A reachable configuration showing the effect with the cause in place.
    pub hit: Option<Configuration>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ac2Evidence {
    pub holds: bool,
    pub witness: Option<BTreeSet<CompId>>,
    /// Every deviation checked under the recorded witness.
    pub deviations: Vec<DeviationCheck>,
    pub witnesses_tried: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ac3Evidence {
    pub holds: bool,
    /// Proper subsets shown to fail actuality or the counterfactual test.
    pub refuted: Vec<BTreeSet<CompId>>,
    /// A proper subset that passes both, when minimality fails.
    pub counterexample: Option<BTreeSet<CompId>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CauseCertificate {
    pub cause: BTreeSet<CompId>,
    pub mode: Ac1Mode,
    pub ac1: Ac1Evidence,
    pub ac2: Ac2Evidence,
    pub ac3: Ac3Evidence,
}

impl CauseCertificate {
    pub fn is_cause(&self) -> bool {
        self.ac1.holds && self.ac2.holds && self.ac3.holds
    }

    /// The intervention holding the witness set at its reference values.
    pub fn clamp(&self, model: &SystemModel, q: &CauseQuery) -> Option<Intervention> {
        self.ac2
            .witness
            .as_ref()
            .map(|w| clamp_intervention(model, w, q.reference(self.mode)))
    }
}

/// Hold every component of `w` at its value in `r`, immediately and for good.
pub fn clamp_intervention(model: &SystemModel, w: &BTreeSet<CompId>, r: &Configuration) -> Intervention {
    let _ = model;
    Intervention {
        name: "clamp".into(),
        targets: w
            .iter()
            .map(|&c| Target {
                component: c,
                reads: Vec::new(),
                rule: RuleTable::constant(r.get(c), 0),
                open: None,
            })
            .collect(),
        cost: None,
        penalty: None,
    }
}

/// All subsets of `0..n` in order of size, then lexicographically.
pub(crate) fn subsets_by_size(items: &[CompId], descending: bool) -> Vec<BTreeSet<CompId>> {
    let n = items.len();
    let mut out: Vec<BTreeSet<CompId>> = (0u64..(1u64 << n))
        .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).map(|i| items[i]).collect())
        .collect();
    out.sort_by(|a, b| {
        let by_size = if descending {
            b.len().cmp(&a.len())
        } else {
            a.len().cmp(&b.len())
        };
        by_size.then_with(|| a.iter().cmp(b.iter()))
    });
    out
}

/// Memoizing search state for one query.
pub(crate) struct Search<'a> {
    model: &'a SystemModel,
    q: &'a CauseQuery,
    mode: Ac1Mode,
    succ: Cow<'a, [Vec<usize>]>,
    passes: BTreeMap<BTreeSet<CompId>, bool>,
}

impl<'a> Search<'a> {
    pub(crate) fn new(model: &'a SystemModel, q: &'a CauseQuery, mode: Ac1Mode) -> Result<Self, CausalityError> {
        model.check_cap()?;
        Ok(Search::with_table(model, q, mode, Cow::Owned(successor_table(model))))
    }

    /// Reuse a successor table from [`successor_table`] on the same model.
    pub(crate) fn with_table(
        model: &'a SystemModel,
        q: &'a CauseQuery,
        mode: Ac1Mode,
        succ: Cow<'a, [Vec<usize>]>,
    ) -> Self {
        Search {
            model,
            q,
            mode,
            succ,
            passes: BTreeMap::new(),
        }
    }

    fn ac1(&self, cause: &BTreeSet<CompId>) -> Ac1Evidence {
        let (start, end) = (&self.q.start, &self.q.end);
        let changed: Vec<CompId> = cause.iter().copied().filter(|&c| start.get(c) != end.get(c)).collect();
        if self.mode == Ac1Mode::Strict && !changed.is_empty() {
            return Ac1Evidence {
                holds: false,
                path: Vec::new(),
                changed,
            };
        }
        let m = self.model;
        // An edge may not move a cause component off its end value.
        let allowed = |a: &Configuration, b: &Configuration| {
            cause.iter().all(|&c| a.get(c) != end.get(c) || b.get(c) == end.get(c))
        };
        let s = m.encode(start);
        let t = m.encode(end);
        let mut parent: Vec<Option<usize>> = vec![None; self.succ.len()];
        let mut seen = vec![false; self.succ.len()];
        let mut queue = VecDeque::new();
        let sc = m.decode(s);
        for &v in &self.succ[s] {
            if !seen[v] && allowed(&sc, &m.decode(v)) {
                seen[v] = true;
                parent[v] = Some(s);
                queue.push_back(v);
            }
        }
        while let Some(u) = queue.pop_front() {
            if u == t {
                break;
            }
            let uc = m.decode(u);
            for &v in &self.succ[u] {
                if !seen[v] && allowed(&uc, &m.decode(v)) {
                    seen[v] = true;
                    parent[v] = Some(u);
                    queue.push_back(v);
                }
            }
        }
        if !seen[t] {
            return Ac1Evidence {
                holds: false,
                path: Vec::new(),
                changed,
            };
        }
        let mut path = vec![end.clone()];
        let mut cur = parent[t].unwrap();
        while cur != s {
            path.push(m.decode(cur));
            cur = parent[cur].unwrap();
        }
        path.push(start.clone());
        path.reverse();
        Ac1Evidence {
            holds: true,
            path,
            changed,
        }
    }

    fn ac2(&self, cause: &BTreeSet<CompId>) -> Result<Ac2Evidence, CausalityError> {
        let m = self.model;
        let r = self.q.reference(self.mode);
        let all: Vec<CompId> = (0..m.num_components()).collect();
        let mut tried = 0;
        for w in subsets_by_size(&all, true) {
            let free: Vec<CompId> = cause.difference(&w).copied().collect();
            if free.is_empty() {
                continue;
            }
            tried += 1;
            let clamped = m.apply_intervention(&clamp_intervention(m, &w, r))?;
            let deviations = deviations(m, &free, r);
            if deviations
                .iter()
                .all(|g| self.effect_hit(&clamped, cause, r, g).is_none())
            {
                return Ok(Ac2Evidence {
                    holds: true,
                    witness: Some(w),
                    deviations: deviations
                        .into_iter()
                        .map(|start| DeviationCheck { start, hit: None })
                        .collect(),
                    witnesses_tried: tried,
                });
            }
        }
        Ok(Ac2Evidence {
            holds: false,
            witness: None,
            deviations: Vec::new(),
            witnesses_tried: tried,
        })
    }

    /// A configuration reachable from `g` in `clamped` (`g` included) that
    /// satisfies `ψ_E ∧ χ_C`.
    fn effect_hit(
        &self,
        clamped: &SystemModel,
        cause: &BTreeSet<CompId>,
        r: &Configuration,
        g: &Configuration,
    ) -> Option<Configuration> {
        let target = |f: &Configuration| {
            self.q.effect.iter().all(|&c| f.get(c) == self.q.end.get(c)) && cause.iter().all(|&c| f.get(c) == r.get(c))
        };
        let mut seen = BTreeSet::from([g.clone()]);
        let mut queue = VecDeque::from([g.clone()]);
        while let Some(f) = queue.pop_front() {
            if target(&f) {
                return Some(f);
            }
            for h in clamped.successors_unchecked(&f) {
                if seen.insert(h.clone()) {
                    queue.push_back(h);
                }
            }
        }
        None
    }

    /// AC1 and AC2 together, memoized.
    pub(crate) fn passes(&mut self, cause: &BTreeSet<CompId>) -> Result<bool, CausalityError> {
        if let Some(&v) = self.passes.get(cause) {
            return Ok(v);
        }
        let v = self.ac1(cause).holds && self.ac2(cause)?.holds;
        self.passes.insert(cause.clone(), v);
        Ok(v)
    }

    pub(crate) fn certify(&mut self, cause: &BTreeSet<CompId>) -> Result<CauseCertificate, CausalityError> {
        if cause.is_empty() {
            return Err(CausalityError::EmptyCause);
        }
        if let Some(&c) = cause.iter().find(|&&c| c >= self.model.num_components()) {
            return Err(CausalityError::UnknownComponent(c));
        }
        let ac1 = self.ac1(cause);
        let ac2 = self.ac2(cause)?;
        self.passes.insert(cause.clone(), ac1.holds && ac2.holds);
        let items: Vec<CompId> = cause.iter().copied().collect();
        let mut refuted = Vec::new();
        let mut counterexample = None;
        for s in subsets_by_size(&items, false) {
            if s.is_empty() || s.len() == cause.len() {
                continue;
            }
            if self.passes(&s)? {
                counterexample = Some(s);
                break;
            }
            refuted.push(s);
        }
        Ok(CauseCertificate {
            cause: cause.clone(),
            mode: self.mode,
            ac1,
            ac2,
            ac3: Ac3Evidence {
                holds: counterexample.is_none(),
                refuted,
                counterexample,
            },
        })
    }

    pub(crate) fn find_all(&mut self) -> Result<Vec<CauseCertificate>, CausalityError> {
        let all: Vec<CompId> = (0..self.model.num_components()).collect();
        let mut found: Vec<BTreeSet<CompId>> = Vec::new();
        let mut certs = Vec::new();
        for s in subsets_by_size(&all, false) {
            if s.is_empty() || found.iter().any(|t| t.is_subset(&s)) {
                continue;
            }
            if self.passes(&s)? {
                found.push(s.clone());
                certs.push(self.certify(&s)?);
            }
        }
        Ok(certs)
    }
}

/// Successor lists over encoded configurations.
pub(crate) fn successor_table(model: &SystemModel) -> Vec<Vec<usize>> {
    (0..model.state_count() as usize)
        .map(|u| {
            model
                .successors_unchecked(&model.decode(u))
                .iter()
                .map(|g| model.encode(g))
                .collect()
        })
        .collect()
}

/// Every assignment to `free` other than the one in `r`, applied to `r`.
fn deviations(model: &SystemModel, free: &[CompId], r: &Configuration) -> Vec<Configuration> {
    let mut out = vec![r.clone()];
    for &c in free {
        let n = model.component(c).domain.len() as u16;
        out = out
            .into_iter()
            .flat_map(|g| (0..n).map(move |b| g.with(c, b)))
            .collect();
    }
    out.retain(|g| free.iter().any(|&c| g.get(c) != r.get(c)));
    out
}

/// Check one candidate cause, reporting every clause with its evidence.
pub fn check_cause(
    model: &SystemModel,
    q: &CauseQuery,
    cause: &BTreeSet<CompId>,
    mode: Ac1Mode,
) -> Result<CauseCertificate, CausalityError> {
    Search::new(model, q, mode)?.certify(cause)
}

/// All minimal causes, smallest first, then in component order.
pub fn find_causes(
    model: &SystemModel,
    q: &CauseQuery,
    mode: Ac1Mode,
) -> Result<Vec<CauseCertificate>, CausalityError> {
    Search::new(model, q, mode)?.find_all()
}

/// Re-run each clause from the certificate's evidence.
pub fn replay_certificate(
    model: &SystemModel,
    q: &CauseQuery,
    cert: &CauseCertificate,
) -> Result<bool, CausalityError> {
    let path_ok = if cert.ac1.holds {
        let p = &cert.ac1.path;
        p.len() >= 2
            && p.first() == Some(&q.start)
            && p.last() == Some(&q.end)
            && p.windows(2).all(|w| {
                model.successors_unchecked(&w[0]).contains(&w[1])
                    && cert
                        .cause
                        .iter()
                        .all(|&c| w[0].get(c) != q.end.get(c) || w[1].get(c) == q.end.get(c))
            })
            && (cert.mode == Ac1Mode::Example || cert.cause.iter().all(|&c| q.start.get(c) == q.end.get(c)))
    } else {
        true
    };
    let ac2_ok = match (&cert.ac2.witness, cert.ac2.holds) {
        (Some(w), true) => {
            let r = q.reference(cert.mode);
            let clamped = model.apply_intervention(&clamp_intervention(model, w, r))?;
            let target = |f: &Configuration| {
                q.effect.iter().all(|&c| f.get(c) == q.end.get(c)) && cert.cause.iter().all(|&c| f.get(c) == r.get(c))
            };
            let mut ok = true;
            for d in &cert.ac2.deviations {
                let reach = clamped.reachable(&d.start)?;
                if reach.iter().any(target) {
                    ok = false;
                }
            }
            ok
        }
        _ => true,
    };
    let mut s = Search::new(model, q, cert.mode)?;
    let mut ac3_ok = true;
    for sub in &cert.ac3.refuted {
        if s.passes(sub)? {
            ac3_ok = false;
        }
    }
    if let Some(c) = &cert.ac3.counterexample {
        ac3_ok &= s.passes(c)?;
    }
    Ok(path_ok && ac2_ok && ac3_ok)
}
