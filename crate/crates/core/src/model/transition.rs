use std::collections::{BTreeSet, VecDeque};

use super::{BehId, CompId, Configuration, ModelError, SystemModel, TransitionMode};

impl SystemModel {
    /// `I_c(f)`: the behaviour `c` would move to from `f`.
    #[inline]
    pub fn update(&self, c: CompId, f: &Configuration) -> BehId {
        let comp = &self.components[c];
        comp.rule.apply(f.get(c), &comp.context, f)
    }

    /// One-step successors under the model's transition mode. Self-loops are
    /// included only when the settings ask for them.
    pub fn successors(&self, f: &Configuration) -> Result<BTreeSet<Configuration>, ModelError> {
        self.check_config(f)?;
        Ok(self.successors_unchecked(f))
    }

    /// Behaviours `c` may take next from `f`, other than its current one.
    fn moves(&self, c: CompId, f: &Configuration) -> Vec<BehId> {
        let comp = &self.components[c];
        match &comp.open {
            Some(open) => open[f.get(c) as usize].clone(),
            None => {
                let b = self.update(c, f);
                if b == f.get(c) {
                    Vec::new()
                } else {
                    vec![b]
                }
            }
        }
    }

    pub(crate) fn successors_unchecked(&self, f: &Configuration) -> BTreeSet<Configuration> {
        let mut out = BTreeSet::new();
        let n = self.components.len();
        match self.settings.mode {
            TransitionMode::Async => {
                let mut fixed = false;
                for c in 0..n {
                    let moves = self.moves(c, f);
                    if self.components[c].open.is_some() || moves.is_empty() {
                        fixed = true;
                    }
                    for b in moves {
                        out.insert(f.with(c, b));
                    }
                }
                if fixed && self.settings.self_loops {
                    out.insert(f.clone());
                }
            }
            TransitionMode::Sync => {
                let mut layer = vec![f.clone()];
                for c in 0..n {
                    let mut choices = self.moves(c, f);
                    if self.components[c].open.is_some() || choices.is_empty() {
                        choices.push(f.get(c));
                    }
                    layer = layer
                        .into_iter()
                        .flat_map(|g| choices.iter().map(move |&b| g.with(c, b)).collect::<Vec<_>>())
                        .collect();
                }
                out.extend(layer.into_iter().filter(|g| g != f || self.settings.self_loops));
            }
        }
        out
    }

    /// Configurations reachable from `f` in one or more steps.
    pub fn reachable_plus(&self, f: &Configuration) -> Result<BTreeSet<Configuration>, ModelError> {
        self.check_config(f)?;
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<Configuration> = self.successors_unchecked(f).into_iter().collect();
        while let Some(g) = queue.pop_front() {
            if seen.insert(g.clone()) {
                queue.extend(self.successors_unchecked(&g).into_iter().filter(|h| !seen.contains(h)));
            }
        }
        Ok(seen)
    }

    /// Configurations reachable from `f` in zero or more steps.
    pub fn reachable(&self, f: &Configuration) -> Result<BTreeSet<Configuration>, ModelError> {
        let mut r = self.reachable_plus(f)?;
        r.insert(f.clone());
        Ok(r)
    }

    /// Mixed-radix index of `f` in `0..state_count()`; the same order as
    /// [`SystemModel::configurations`].
    pub fn encode(&self, f: &Configuration) -> usize {
        f.0.iter()
            .zip(&self.components)
            .fold(0usize, |acc, (&b, c)| acc * c.domain.len() + b as usize)
    }

    pub fn decode(&self, mut idx: usize) -> Configuration {
        let mut v = vec![0; self.components.len()];
        for (i, c) in self.components.iter().enumerate().rev() {
            let n = c.domain.len();
            v[i] = (idx % n) as BehId;
            idx /= n;
        }
        Configuration(v)
    }

    /// Whether no component would change from `f`.
    pub fn is_fixpoint(&self, f: &Configuration) -> bool {
        (0..self.components.len()).all(|c| self.update(c, f) == f.get(c))
    }
}
