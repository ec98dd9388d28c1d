//! Shared test support: seeded random models and a brute-force cause
//! enumerator that shares nothing with the library's search.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use syscause::causality::Ac1Mode;
use syscause::model::{
    AtomSpec, AtomSpecDef, CompId, ComponentSpec, Configuration, InterventionSpec, ModelSpec, Pattern, RowSpec,
    Settings, SystemModel, TargetSpec, TransitionMode,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pattern(rng: &mut ChaCha8Rng, domain: &[String]) -> Pattern<String> {
    if rng.gen_bool(0.4) {
        Pattern::Any
    } else {
        Pattern::Is(domain.choose(rng).unwrap().clone())
    }
}

fn rows(rng: &mut ChaCha8Rng, own: &[String], ctx: &[Vec<String>], max: usize) -> Vec<RowSpec> {
    (0..rng.gen_range(0..=max))
        .map(|_| RowSpec {
            own: pattern(rng, own),
            context: ctx.iter().map(|d| pattern(rng, d)).collect(),
            output: own.choose(rng).unwrap().clone(),
        })
        .collect()
}

/// A random closed model with up to `max_comps` components of up to
/// `max_beh` behaviours, two atoms and two interventions.
pub fn random_spec(rng: &mut ChaCha8Rng, max_comps: usize, max_beh: usize) -> ModelSpec {
    let n = rng.gen_range(1..=max_comps);
    let names: Vec<String> = (0..n).map(|i| format!("C{i}")).collect();
    let domains: Vec<Vec<String>> = (0..n)
        .map(|i| (0..rng.gen_range(1..=max_beh)).map(|b| format!("b{i}{b}")).collect())
        .collect();
    let mut components = Vec::new();
    for i in 0..n {
        let context: Vec<usize> = (0..n).filter(|&j| j != i && rng.gen_bool(0.6)).collect();
        let ctx_domains: Vec<Vec<String>> = context.iter().map(|&j| domains[j].clone()).collect();
        components.push(ComponentSpec {
            name: names[i].clone(),
            domain: domains[i].clone(),
            context: context.iter().map(|&j| names[j].clone()).collect(),
            rules: rows(rng, &domains[i], &ctx_domains, 4),
        });
    }
    let atoms = (0..2)
        .map(|k| {
            let c = rng.gen_range(0..n);
            AtomSpec {
                name: format!("p{k}"),
                def: AtomSpecDef::Behaviour {
                    component: names[c].clone(),
                    behaviour: domains[c].choose(rng).unwrap().clone(),
                },
            }
        })
        .collect();
    let interventions = (0..2)
        .map(|k| {
            let c = rng.gen_range(0..n);
            let target = if rng.gen_bool(0.5) {
                TargetSpec::constant(&names[c], domains[c].choose(rng).unwrap())
            } else {
                let reads: Vec<String> = components[c]
                    .context
                    .iter()
                    .filter(|_| rng.gen_bool(0.5))
                    .cloned()
                    .collect();
                let rd: Vec<Vec<String>> = reads
                    .iter()
                    .map(|r| domains[names.iter().position(|x| x == r).unwrap()].clone())
                    .collect();
                TargetSpec {
                    component: names[c].clone(),
                    reads,
                    rules: rows(rng, &domains[c], &rd, 3),
                }
            };
            InterventionSpec {
                name: format!("t{k}"),
                targets: vec![target],
                cost: None,
                penalty: None,
            }
        })
        .collect();
    let settings = Settings {
        mode: if rng.gen_bool(0.8) {
            TransitionMode::Async
        } else {
            TransitionMode::Sync
        },
        self_loops: rng.gen_bool(0.3),
        ..Settings::default()
    };
    ModelSpec {
        name: None,
        settings,
        components,
        atoms,
        interventions,
    }
}

pub fn random_model(rng: &mut ChaCha8Rng, max_comps: usize, max_beh: usize) -> SystemModel {
    SystemModel::new(&random_spec(rng, max_comps, max_beh)).expect("generated model is valid")
}

pub fn all_configs(m: &SystemModel) -> Vec<Configuration> {
    m.configurations().collect()
}

/// One-step successors computed straight from the rule tables, with the
/// components in `frozen` never moving. A configuration steps to itself
/// only when self-loops are on and some component stays put.
pub fn step(m: &SystemModel, f: &Configuration, frozen: &BTreeSet<CompId>) -> Vec<Configuration> {
    let n = m.num_components();
    let next = |c: CompId| {
        let comp = m.component(c);
        let ctx: Vec<u16> = comp.context.iter().map(|&d| f.0[d]).collect();
        let own = f.0[c];
        for row in &comp.rule.rows {
            let ok_own = match row.own {
                Pattern::Any => true,
                Pattern::Is(b) => b == own,
            };
            let ok_ctx = row.context.iter().zip(&ctx).all(|(p, &v)| match p {
                Pattern::Any => true,
                Pattern::Is(b) => *b == v,
            });
            if ok_own && ok_ctx {
                return row.output;
            }
        }
        own
    };
    let mut out = Vec::new();
    match m.settings().mode {
        TransitionMode::Async => {
            let mut idle = false;
            for c in 0..n {
                let b = if frozen.contains(&c) { f.0[c] } else { next(c) };
                if b != f.0[c] {
                    let mut g = f.0.clone();
                    g[c] = b;
                    out.push(Configuration(g));
                } else {
                    idle = true;
                }
            }
            if idle && m.settings().self_loops {
                out.push(f.clone());
            }
        }
        TransitionMode::Sync => {
            let g: Vec<u16> = (0..n)
                .map(|c| if frozen.contains(&c) { f.0[c] } else { next(c) })
                .collect();
            if g != f.0 || m.settings().self_loops {
                out.push(Configuration(g));
            }
        }
    }
    out
}

fn reach_from(
    m: &SystemModel,
    starts: Vec<Configuration>,
    frozen: &BTreeSet<CompId>,
    edge_ok: &dyn Fn(&Configuration, &Configuration) -> bool,
) -> BTreeSet<Configuration> {
    let mut seen: BTreeSet<Configuration> = starts.iter().cloned().collect();
    let mut queue: VecDeque<Configuration> = starts.into();
    while let Some(f) = queue.pop_front() {
        for g in step(m, &f, frozen) {
            if edge_ok(&f, &g) && seen.insert(g.clone()) {
                queue.push_back(g);
            }
        }
    }
    seen
}

fn subsets(n: usize) -> Vec<BTreeSet<CompId>> {
    (0u32..1 << n)
        .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
        .collect()
}

/// Actuality and counterfactual dependence, straight from the definition.
pub fn oracle_passes(
    m: &SystemModel,
    f1: &Configuration,
    f2: &Configuration,
    effect: &BTreeSet<CompId>,
    cause: &BTreeSet<CompId>,
    mode: Ac1Mode,
) -> bool {
    let n = m.num_components();
    if mode == Ac1Mode::Strict && cause.iter().any(|&c| f1.0[c] != f2.0[c]) {
        return false;
    }
    let keeps = |a: &Configuration, b: &Configuration| cause.iter().all(|&c| a.0[c] != f2.0[c] || b.0[c] == f2.0[c]);
    let first: Vec<Configuration> = step(m, f1, &BTreeSet::new())
        .into_iter()
        .filter(|g| keeps(f1, g))
        .collect();
    if !reach_from(m, first, &BTreeSet::new(), &keeps).contains(f2) {
        return false;
    }
    let r = if mode == Ac1Mode::Strict { f1 } else { f2 };
    subsets(n).into_iter().any(|w| {
        let free: Vec<CompId> = cause.difference(&w).copied().collect();
        if free.is_empty() {
            return false;
        }
        let mut starts = vec![r.clone()];
        for &c in &free {
            let d = m.component(c).domain.len() as u16;
            starts = starts
                .into_iter()
                .flat_map(|g| (0..d).map(move |b| g.with(c, b)))
                .collect();
        }
        starts.retain(|g| g != r);
        starts.into_iter().all(|g| {
            let hit = |h: &Configuration| {
                effect.iter().all(|&c| h.0[c] == f2.0[c]) && cause.iter().all(|&c| h.0[c] == r.0[c])
            };
            !reach_from(m, vec![g], &w, &|_, _| true).iter().any(hit)
        })
    })
}

/// Every minimal cause, by enumerating all candidate sets.
pub fn oracle_causes(
    m: &SystemModel,
    f1: &Configuration,
    f2: &Configuration,
    effect: &BTreeSet<CompId>,
    mode: Ac1Mode,
) -> BTreeSet<BTreeSet<CompId>> {
    let n = m.num_components();
    let passing: Vec<BTreeSet<CompId>> = subsets(n)
        .into_iter()
        .filter(|c| !c.is_empty() && oracle_passes(m, f1, f2, effect, c, mode))
        .collect();
    passing
        .iter()
        .filter(|c| !passing.iter().any(|d| d.len() < c.len() && d.is_subset(c)))
        .cloned()
        .collect()
}

/// A random cause query whose end is usually reachable from its start.
pub fn random_query(rng: &mut ChaCha8Rng, m: &SystemModel) -> (Configuration, Configuration, BTreeSet<CompId>) {
    let configs = all_configs(m);
    let f1 = configs.choose(rng).unwrap().clone();
    let reach: Vec<Configuration> = m.reachable_plus(&f1).unwrap().into_iter().collect();
    let f2 = if !reach.is_empty() && rng.gen_bool(0.85) {
        reach.choose(rng).unwrap().clone()
    } else {
        configs.choose(rng).unwrap().clone()
    };
    let n = m.num_components();
    let mut effect: BTreeSet<CompId> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
    if effect.is_empty() {
        effect.insert(rng.gen_range(0..n));
    }
    (f1, f2, effect)
}

/// Rename every behaviour and shuffle each domain's order. Returns the new
/// spec and a map taking configurations of the old model to the new one.
pub fn rename(rng: &mut ChaCha8Rng, spec: &ModelSpec) -> (ModelSpec, impl Fn(&Configuration) -> Configuration) {
    let mut out = spec.clone();
    let fresh = |c: usize, b: &str| format!("r{c}_{b}");
    let mut perms: Vec<Vec<u16>> = Vec::new();
    for (i, comp) in out.components.iter_mut().enumerate() {
        let mut order: Vec<usize> = (0..comp.domain.len()).collect();
        order.shuffle(rng);
        let old = comp.domain.clone();
        comp.domain = order.iter().map(|&k| fresh(i, &old[k])).collect();
        let mut pos = vec![0u16; old.len()];
        for (new, &k) in order.iter().enumerate() {
            pos[k] = new as u16;
        }
        perms.push(pos);
    }
    let index: Vec<String> = spec.components.iter().map(|c| c.name.clone()).collect();
    let at = |name: &str| index.iter().position(|n| n == name).unwrap();
    let map_pat = |p: &Pattern<String>, c: usize| match p {
        Pattern::Any => Pattern::Any,
        Pattern::Is(b) => Pattern::Is(fresh(c, b)),
    };
    let map_rows = |rows: &[RowSpec], own: usize, ctx: &[usize]| -> Vec<RowSpec> {
        rows.iter()
            .map(|r| RowSpec {
                own: map_pat(&r.own, own),
                context: r.context.iter().zip(ctx).map(|(p, &d)| map_pat(p, d)).collect(),
                output: fresh(own, &r.output),
            })
            .collect()
    };
    for (i, comp) in out.components.iter_mut().enumerate() {
        let ctx: Vec<usize> = comp.context.iter().map(|n| at(n)).collect();
        comp.rules = map_rows(&comp.rules, i, &ctx);
    }
    for a in &mut out.atoms {
        if let AtomSpecDef::Behaviour { component, behaviour } = &mut a.def {
            *behaviour = fresh(at(component), behaviour);
        }
    }
    for t in &mut out.interventions {
        for tg in &mut t.targets {
            let c = at(&tg.component);
            let reads: Vec<usize> = tg.reads.iter().map(|n| at(n)).collect();
            tg.rules = map_rows(&tg.rules, c, &reads);
        }
    }
    let map =
        move |f: &Configuration| Configuration(f.0.iter().enumerate().map(|(c, &b)| perms[c][b as usize]).collect());
    (out, map)
}

use syscause::logic::Formula;

/// Every formula of modal depth at most `depth` whose modal operators are
/// stacked one above the other: a base of `⊤`, each atom and `(p) * (q)` for
/// the first two atoms, under any sequence of `◊`, `◊⁺`, `⟨θ⟩` and `⟨?⟩`,
/// each optionally negated inside. Boxes arise as negated diamonds.
pub fn formula_suite(atoms: &[String], thetas: &[String], depth: usize) -> Vec<Formula> {
    let mut base = vec![Formula::True];
    base.extend(atoms.iter().map(|a| Formula::atom(a)));
    if atoms.len() >= 2 {
        base.push(Formula::atom(&atoms[0]).star(Formula::atom(&atoms[1])));
    }
    let mut layer = base.clone();
    let mut all = base;
    for _ in 0..depth {
        let mut next = Vec::new();
        for phi in &layer {
            for inner in [phi.clone(), phi.clone().not()] {
                next.push(inner.clone().diamond());
                next.push(inner.clone().diamond_plus());
                next.push(Formula::InterveneExists(Box::new(inner.clone())));
                for t in thetas {
                    next.push(Formula::intervene(t, inner.clone()));
                }
            }
        }
        all.extend(next.iter().cloned());
        layer = next;
    }
    all
}

/// Every formula of the depth-3 suite has the same value at both points.
pub fn agree_on_suite(m1: &SystemModel, f: &Configuration, m2: &SystemModel, g: &Configuration) {
    let (atoms, thetas) = syscause::bisim::vocabulary(m1);
    for phi in formula_suite(&atoms, &thetas, 3) {
        let (a, b) = (
            syscause::logic::evaluate(m1, f, &phi).unwrap(),
            syscause::logic::evaluate(m2, g, &phi).unwrap(),
        );
        assert_eq!(a, b, "{phi}");
    }
}

/// Prepend a row forcing one component's output for one own behaviour.
pub fn mutate(rng: &mut impl Rng, spec: &ModelSpec) -> ModelSpec {
    let mut out = spec.clone();
    let comps: Vec<usize> = (0..out.components.len())
        .filter(|&i| out.components[i].domain.len() > 1)
        .collect();
    let Some(&i) = comps.choose(rng) else { return out };
    let c = &mut out.components[i];
    let own = c.domain.choose(rng).unwrap().clone();
    let output = c.domain.choose(rng).unwrap().clone();
    let row = RowSpec {
        own: Pattern::Is(own),
        context: vec![Pattern::Any; c.context.len()],
        output,
    };
    c.rules.insert(0, row);
    out
}
