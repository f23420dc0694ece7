//! Normal forms for total transducers: initialized, la-uniform, earliest
//! and canonical, plus the representative trees and the quantities
//! `sumfix` / `maxfix` built on them, and difference-bound transport across
//! the stages.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;

use crate::classify::{infer_la_map, rlabs, LaMapResult};
use crate::transducer::{Certified, Dtla, RuleKey};
use crate::trees::{name, Label, Name, Tree};
use crate::{Error, Result};

/// One minimal-size representative input tree per look-ahead state
/// (ties broken canonically by symbol declaration order).
#[derive(Debug, Clone)]
pub struct Representatives {
    pub by_state: HashMap<Name, Tree>,
}

impl Representatives {
    pub fn get(&self, p: &Name) -> Option<&Tree> {
        self.by_state.get(p)
    }
}

/// Minimal representatives via a fixpoint that keeps improving the best
/// known tree per look-ahead state; every update strictly shrinks under the
/// canonical order, so this terminates.
pub fn representatives(m: &Dtla) -> Representatives {
    let mut best: HashMap<Name, Tree> = HashMap::new();
    loop {
        let mut changed = false;
        for (a, k) in m.input.iter() {
            for v in m.la.vectors(k) {
                if !v.iter().all(|p| best.contains_key(p)) {
                    continue;
                }
                let Some(p) = m.la.step(a, &v) else { continue };
                let candidate = Tree::new(
                    Label::Sym(a.clone()),
                    v.iter().map(|pi| best[pi].clone()).collect(),
                );
                let better = match best.get(&p) {
                    None => true,
                    Some(cur) => {
                        m.input.cmp_canonical(&candidate, cur) == std::cmp::Ordering::Less
                    }
                };
                if better {
                    best.insert(p, candidate);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Representatives { by_state: best }
}

/// Sum over all states of the size of the state's translation of the
/// representative of its la-map value.
pub fn sumfix(m: &Dtla) -> Result<usize> {
    let (rho, fix) = uniform_context(m)?;
    let mut total = 0;
    for q in &m.states {
        let s = fix
            .get(&rho[q])
            .ok_or_else(|| Error::Precondition(format!("no representative for {}", rho[q])))?;
        let t = m
            .eval_state(q, s)
            .ok_or_else(|| Error::Precondition(format!("{q} undefined on its representative")))?;
        total += t.size();
    }
    Ok(total)
}

/// Maximal height of any state's translation of any representative it is
/// defined on.
pub fn maxfix(m: &Dtla) -> Result<usize> {
    let (rho, fix) = uniform_context(m)?;
    let mut best = 0;
    for q in &m.states {
        if let Some(s) = fix.get(&rho[q]) {
            if let Some(t) = m.eval_state(q, s) {
                best = best.max(t.height());
            }
        }
    }
    Ok(best)
}

fn uniform_context(m: &Dtla) -> Result<(HashMap<Name, Name>, HashMap<Name, Tree>)> {
    let (ok, res) = infer_la_map(m);
    if !ok {
        return Err(Error::Precondition("an la-uniform transducer is required".into()));
    }
    let LaMapResult::Map(rho) = res else {
        unreachable!()
    };
    Ok((rho, representatives(m).by_state))
}

/// Picks a name not already used for a state or symbol.
fn fresh_name(base: &str, m: &Dtla, extra: &HashSet<Name>) -> Name {
    let taken = |n: &str| {
        m.has_state(n)
            || m.input.contains(n)
            || m.output.contains(n)
            || m.la.contains(n)
            || extra.contains(&name(n))
    };
    let mut candidate = base.to_string();
    while taken(&candidate) {
        candidate.push('\'');
    }
    name(&candidate)
}

/// Adds a fresh initial state whose rules pre-apply the axioms one symbol
/// deep; all axioms become a bare call of that state.
pub fn make_initialized(m: &Dtla) -> Result<Dtla> {
    let q0 = fresh_name("__q0", m, &HashSet::new());
    let mut rules = m.rules.clone();
    for (a, k) in m.input.iter() {
        for v in m.la.vectors(k) {
            let Some(p) = m.la.step(a, &v) else { continue };
            let axiom = m
                .axioms
                .get(&p)
                .ok_or_else(|| Error::Precondition(format!("missing axiom for {p}")))?;
            let mut mapping: HashMap<Tree, Tree> = HashMap::new();
            for (q, _) in axiom.state_calls() {
                let rhs = m
                    .rules
                    .get(&RuleKey::new(q.clone(), a.clone(), v.clone()))
                    .ok_or(Error::NotTotal)?;
                mapping.insert(Tree::call_name(q.clone(), 0), rhs.clone());
            }
            let rhs = crate::trees::substitute_subtrees(axiom, &mapping);
            rules.insert(RuleKey::new(q0.clone(), a.clone(), v.clone()), rhs);
        }
    }
    let mut states = vec![q0.clone()];
    states.extend(m.states.iter().cloned());
    let axioms = m
        .la
        .states
        .iter()
        .map(|p| (p.clone(), Tree::call_name(q0.clone(), 0)))
        .collect();
    let initialized = m.la.states.iter().map(|p| (p.clone(), q0.clone())).collect();
    Ok(Dtla {
        input: m.input.clone(),
        output: m.output.clone(),
        states,
        la: m.la.clone(),
        axioms,
        rules,
        certified: Certified {
            initialized: Some(initialized),
            la_uniform: None,
        },
    })
}

/// Completes the rule set with dummy rules (right-hand side: the first
/// declared rank-0 output symbol), then splits every state per look-ahead
/// value; the result is la-uniform and trimmed.
pub fn make_la_uniform(m: &Dtla) -> Result<Dtla> {
    let dummy = Tree::new(Label::Sym(m.output.first_nullary()), vec![]);
    let mut completed = m.clone();
    for q in &m.states {
        for (a, k) in m.input.iter() {
            for v in m.la.vectors(k) {
                completed
                    .rules
                    .entry(RuleKey::new(q.clone(), a.clone(), v))
                    .or_insert_with(|| dummy.clone());
            }
        }
    }

    // product states <q,p>, named q@p
    let mut new_names: HashMap<(Name, Name), Name> = HashMap::new();
    let mut states: Vec<Name> = Vec::new();
    let mut used: HashSet<Name> = HashSet::new();
    for q in &m.states {
        for p in &m.la.states {
            let n = fresh_name(&format!("{q}@{p}"), m, &used);
            used.insert(n.clone());
            new_names.insert((q.clone(), p.clone()), n.clone());
            states.push(n);
        }
    }
    let rename_axiom = |t: &Tree, p: &Name| -> Tree {
        let mut mapping = HashMap::new();
        for (q, _) in t.state_calls() {
            mapping.insert(
                Tree::call_name(q.clone(), 0),
                Tree::call_name(new_names[&(q.clone(), p.clone())].clone(), 0),
            );
        }
        crate::trees::substitute_subtrees(t, &mapping)
    };
    let axioms: HashMap<Name, Tree> = m
        .la
        .states
        .iter()
        .filter_map(|p| m.axioms.get(p).map(|t| (p.clone(), rename_axiom(t, p))))
        .collect();

    let mut rules: HashMap<RuleKey, Tree> = HashMap::new();
    for (key, rhs) in &completed.rules {
        let Some(p) = m.la.step(&key.symbol, &key.la) else {
            continue;
        };
        let new_state = new_names[&(key.state.clone(), p)].clone();
        let mut mapping = HashMap::new();
        for (q2, i) in rhs.state_calls() {
            let target = new_names[&(q2.clone(), key.la[i as usize - 1].clone())].clone();
            mapping.insert(Tree::call_name(q2, i), Tree::call_name(target, i));
        }
        let new_rhs = crate::trees::substitute_subtrees(rhs, &mapping);
        rules.insert(
            RuleKey::new(new_state, key.symbol.clone(), key.la.clone()),
            new_rhs,
        );
    }

    let initialized = m.certified.initialized.as_ref().map(|init| {
        init.iter()
            .map(|(p, q0)| (p.clone(), new_names[&(q0.clone(), p.clone())].clone()))
            .collect()
    });
    let out = Dtla {
        input: m.input.clone(),
        output: m.output.clone(),
        states,
        la: m.la.clone(),
        axioms,
        rules,
        certified: Certified {
            initialized,
            la_uniform: Some(
                new_names
                    .iter()
                    .map(|((_, p), n)| (n.clone(), p.clone()))
                    .collect(),
            ),
        },
    }
    .trim();
    Ok(out)
}

/// The earliest transformation: repeatedly split every state whose
/// reachable root labels form a singleton, pushing that symbol up into the
/// callers. Returns the result and the number of transformation steps.
pub fn make_earliest_counted(m: &Dtla) -> Result<(Dtla, usize)> {
    let budget = sumfix(m)?;
    let mut cur = m.trim();
    let mut steps = 0usize;
    let mut last_sumfix = budget;
    loop {
        let (ok, res) = infer_la_map(&cur);
        if !ok {
            return Err(Error::Precondition("make_earliest needs an la-uniform input".into()));
        }
        let LaMapResult::Map(rho) = res else {
            unreachable!()
        };
        let rl = rlabs(&cur, &rho)?;
        let splitting: Vec<Name> = cur
            .states
            .iter()
            .filter(|q| rl.get(*q).map(|s| s.len() == 1).unwrap_or(false))
            .cloned()
            .collect();
        if splitting.is_empty() {
            return Ok((cur, steps));
        }
        if steps >= budget.max(1) {
            return Err(Error::NonTermination);
        }
        cur = earliest_step(&cur, &rho, &splitting)?;
        steps += 1;
        let now = sumfix(&cur)?;
        // each step must strictly lower sumfix
        if !splitting.is_empty() && now >= last_sumfix && last_sumfix > 0 {
            return Err(Error::NonTermination);
        }
        last_sumfix = now;
    }
}

pub fn make_earliest(m: &Dtla) -> Result<Dtla> {
    make_earliest_counted(m).map(|(d, _)| d)
}

fn earliest_step(m: &Dtla, rho: &HashMap<Name, Name>, splitting: &[Name]) -> Result<Dtla> {
    let rl = rlabs(m, rho)?;
    // forced root symbol and its rank, per splitting state
    let mut forced: HashMap<Name, (Name, usize)> = HashMap::new();
    for q in splitting {
        let d = rl[q].iter().next().expect("singleton").clone();
        let r = m
            .output
            .rank(&d)
            .ok_or_else(|| Error::Precondition(format!("unknown output symbol {d}")))?;
        forced.insert(q.clone(), (d, r));
    }
    let mut used: HashSet<Name> = HashSet::new();
    let mut part_names: HashMap<(Name, usize), Name> = HashMap::new();
    let mut states: Vec<Name> = Vec::new();
    for q in &m.states {
        match forced.get(q) {
            None => states.push(q.clone()),
            Some((_, r)) => {
                for i in 1..=*r {
                    let n = fresh_name(&format!("{q}.{i}"), m, &used);
                    used.insert(n.clone());
                    part_names.insert((q.clone(), i), n.clone());
                    states.push(n);
                }
            }
        }
    }

    // phi: q(w) -> d_q(<q,1>(w),...,<q,m>(w)) for splitting q
    let apply_phi = |t: &Tree| -> Tree {
        fn go(
            t: &Tree,
            forced: &HashMap<Name, (Name, usize)>,
            part_names: &HashMap<(Name, usize), Name>,
        ) -> Tree {
            if let Label::StateCall(q) = &t.label {
                if let Some((d, r)) = forced.get(q) {
                    let Label::Var(i) = t.children[0].label else {
                        return t.clone();
                    };
                    let parts = (1..=*r)
                        .map(|j| Tree::call_name(part_names[&(q.clone(), j)].clone(), i))
                        .collect();
                    return Tree::new(Label::Sym(d.clone()), parts);
                }
                return t.clone();
            }
            Tree::new(
                t.label.clone(),
                t.children
                    .iter()
                    .map(|c| go(c, forced, part_names))
                    .collect(),
            )
        }
        go(t, &forced, &part_names)
    };

    let axioms: HashMap<Name, Tree> = m
        .axioms
        .iter()
        .map(|(p, t)| (p.clone(), apply_phi(t)))
        .collect();
    let mut rules: HashMap<RuleKey, Tree> = HashMap::new();
    for (key, rhs) in &m.rules {
        let new_rhs = apply_phi(rhs);
        match forced.get(&key.state) {
            None => {
                rules.insert(key.clone(), new_rhs);
            }
            Some((_, r)) => {
                // the root of new_rhs is the forced symbol; hand out its
                // direct subtrees to the split states
                for i in 1..=*r {
                    rules.insert(
                        RuleKey::new(
                            part_names[&(key.state.clone(), i)].clone(),
                            key.symbol.clone(),
                            key.la.clone(),
                        ),
                        new_rhs.children[i - 1].clone(),
                    );
                }
            }
        }
    }
    let la_uniform = Some(
        states
            .iter()
            .map(|n| {
                // find origin: either an untouched state or a part name
                let p = part_names
                    .iter()
                    .find(|(_, v)| *v == n)
                    .map(|((q, _), _)| rho[q].clone())
                    .unwrap_or_else(|| rho[n].clone());
                (n.clone(), p)
            })
            .collect(),
    );
    Ok(Dtla {
        input: m.input.clone(),
        output: m.output.clone(),
        states,
        la: m.la.clone(),
        axioms,
        rules,
        certified: Certified {
            initialized: None,
            la_uniform,
        },
    }
    .trim())
}

/// The coarsest partition of the states such that equivalent states have
/// the same la-map value and, per rule key, right-hand sides equal up to
/// replacing called states by their classes. For earliest transducers the
/// classes are exactly semantic state equivalence.
pub fn equivalence_classes(m: &Dtla, rho: &HashMap<Name, Name>) -> Vec<Vec<Name>> {
    let mut class_of: HashMap<Name, usize> = HashMap::new();
    // start from rho-equality
    let mut next = 0usize;
    let mut by_rho: HashMap<Name, usize> = HashMap::new();
    for q in &m.states {
        let p = rho[q].clone();
        let id = *by_rho.entry(p).or_insert_with(|| {
            let i = next;
            next += 1;
            i
        });
        class_of.insert(q.clone(), id);
    }
    loop {
        // signature: for every (a, la-vector) with delta = rho(q), the rhs
        // with state calls abstracted to (class, var)
        let mut signatures: HashMap<Name, Vec<(RuleKey, Tree)>> = HashMap::new();
        for q in &m.states {
            let mut sig = Vec::new();
            for (a, k) in m.input.iter() {
                for v in m.la.vectors(k) {
                    if m.la.step(a, &v).as_ref() != Some(&rho[q]) {
                        continue;
                    }
                    let key = RuleKey::new(q.clone(), a.clone(), v.clone());
                    let abstracted = m.rules.get(&key).map(|rhs| abstract_rhs(rhs, &class_of));
                    sig.push((
                        RuleKey::new(name("_"), a.clone(), v),
                        abstracted.unwrap_or_else(|| Tree::leaf("#missing")),
                    ));
                }
            }
            signatures.insert(q.clone(), sig);
        }
        // regroup by (old class, signature)
        let mut regroup: HashMap<(usize, String), usize> = HashMap::new();
        let mut new_class: HashMap<Name, usize> = HashMap::new();
        let mut counter = 0usize;
        for q in &m.states {
            let sig_str = format!("{:?}", signatures[q]);
            let key = (class_of[q], sig_str);
            let id = *regroup.entry(key).or_insert_with(|| {
                let i = counter;
                counter += 1;
                i
            });
            new_class.insert(q.clone(), id);
        }
        if counter == next {
            break;
        }
        next = counter;
        class_of = new_class;
    }
    let mut out: BTreeMap<usize, Vec<Name>> = BTreeMap::new();
    for q in &m.states {
        out.entry(class_of[q]).or_default().push(q.clone());
    }
    out.into_values().collect()
}

fn abstract_rhs(rhs: &Tree, class_of: &HashMap<Name, usize>) -> Tree {
    match &rhs.label {
        Label::StateCall(q) => Tree::new(
            Label::StateCall(name(&format!("#class{}", class_of[q]))),
            rhs.children.clone(),
        ),
        _ => Tree::new(
            rhs.label.clone(),
            rhs.children
                .iter()
                .map(|c| abstract_rhs(c, class_of))
                .collect(),
        ),
    }
}

/// Merges equivalent states of an earliest la-uniform transducer, keeping
/// the first-declared representative per class.
pub fn canonicalize(m: &Dtla) -> Result<Dtla> {
    if !crate::classify::is_earliest(m)? {
        return Err(Error::Precondition(
            "canonicalize operates on earliest transducers".into(),
        ));
    }
    let (_, LaMapResult::Map(rho)) = infer_la_map(m) else {
        unreachable!("is_earliest verified la-uniformity")
    };
    let classes = equivalence_classes(m, &rho);
    let mut rep_of: HashMap<Name, Name> = HashMap::new();
    for cls in &classes {
        let rep = cls
            .iter()
            .min_by_key(|q| m.state_index(q).unwrap_or(usize::MAX))
            .unwrap()
            .clone();
        for q in cls {
            rep_of.insert(q.clone(), rep.clone());
        }
    }
    let rename = |t: &Tree| -> Tree {
        fn go(t: &Tree, rep_of: &HashMap<Name, Name>) -> Tree {
            match &t.label {
                Label::StateCall(q) => {
                    Tree::new(Label::StateCall(rep_of[q].clone()), t.children.clone())
                }
                _ => Tree::new(
                    t.label.clone(),
                    t.children.iter().map(|c| go(c, rep_of)).collect(),
                ),
            }
        }
        go(t, &rep_of)
    };
    let states: Vec<Name> = m
        .states
        .iter()
        .filter(|q| rep_of[*q] == **q)
        .cloned()
        .collect();
    let axioms = m
        .axioms
        .iter()
        .map(|(p, t)| (p.clone(), rename(t)))
        .collect();
    let rules = m
        .rules
        .iter()
        .filter(|(k, _)| rep_of[&k.state] == k.state)
        .map(|(k, rhs)| (k.clone(), rename(rhs)))
        .collect();
    let la_uniform = Some(
        states
            .iter()
            .map(|q| (q.clone(), rho[q].clone()))
            .collect(),
    );
    Ok(Dtla {
        input: m.input.clone(),
        output: m.output.clone(),
        states,
        la: m.la.clone(),
        axioms,
        rules,
        certified: Certified {
            initialized: None,
            la_uniform,
        },
    }
    .trim())
}

/// Stage names of the normalization pipeline, in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Initialized,
    Uniform,
    Earliest,
    Canonical,
}

/// Pipeline record: the transducers after each stage, the measured
/// quantities, and how a difference bound transports across the stages.
#[derive(Debug, Clone)]
pub struct NormalizationTrace {
    pub stages: Vec<(Stage, Dtla)>,
    /// Measured on the uniform stage, absent when that stage did not run.
    pub sumfix: Option<usize>,
    pub maxfix: Option<usize>,
    /// Number of earliest transformation steps actually performed.
    pub earliest_steps: usize,
}

/// Runs trim, then the pipeline ending at `upto`. The initialized stage
/// stands alone (it is only a stepping stone for the bound computations);
/// the canonical pipeline is uniform -> earliest -> canonical.
pub fn normalization_trace(m: &Dtla, upto: Stage) -> Result<NormalizationTrace> {
    let base = m.trim();
    if !base.is_total() {
        return Err(Error::NotTotal);
    }
    let plan: &[Stage] = match upto {
        Stage::Initialized => &[Stage::Initialized],
        Stage::Uniform => &[Stage::Uniform],
        Stage::Earliest => &[Stage::Uniform, Stage::Earliest],
        Stage::Canonical => &[Stage::Uniform, Stage::Earliest, Stage::Canonical],
    };
    let mut stages = Vec::new();
    let mut cur = base;
    let mut earliest_steps = 0;
    let mut sum = None;
    let mut max = None;
    for stage in plan {
        cur = match stage {
            Stage::Initialized => make_initialized(&cur)?,
            Stage::Uniform => {
                let u = make_la_uniform(&cur)?;
                sum = Some(sumfix(&u)?);
                max = Some(maxfix(&u)?);
                u
            }
            Stage::Earliest => {
                let (e, steps) = make_earliest_counted(&cur)?;
                earliest_steps = steps;
                e
            }
            Stage::Canonical => canonicalize(&cur)?,
        };
        stages.push((*stage, cur.clone()));
    }
    Ok(NormalizationTrace {
        stages,
        sumfix: sum,
        maxfix: max,
        earliest_steps,
    })
}

/// Transports a difference bound along the pipeline: uniformization leaves
/// it unchanged, canonicalization adds `sumfix` of the uniform stage, and
/// the initialization stage transports in the reverse direction as
/// `max(h, maxrhs)` of the original transducer.
pub fn transport_bound(h: usize, trace: &NormalizationTrace) -> usize {
    let mut bound = h;
    // only the earliest/canonical stage moves the bound, by sumfix
    if trace
        .stages
        .iter()
        .any(|(s, _)| matches!(s, Stage::Earliest | Stage::Canonical))
    {
        bound += trace.sumfix.unwrap_or(0);
    }
    bound
}

/// Reverse transport for the initialization stage: a bound for the
/// initialized transducer gives `max(h, maxrhs(original))` for the original.
pub fn transport_bound_uninitialize(h: usize, original: &Dtla) -> usize {
    h.max(original.maxrhs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax;

    fn load(text: &str) -> Dtla {
        syntax::parse(text).unwrap()
    }

    fn mex() -> Dtla {
        load(include_str!("../../../corpus/mex.dtla"))
    }

    #[test]
    fn representatives_examples() {
        let fix = representatives(&mex()).by_state;
        assert_eq!(fix[&name("pa")], Tree::leaf("a"));
        assert_eq!(fix[&name("pb")], Tree::leaf("b"));

        let dep = load(include_str!("../../../corpus/depgraph.dtla"));
        let fix = representatives(&dep).by_state;
        assert_eq!(fix[&name("pa")], Tree::leaf("a"));
        assert_eq!(fix[&name("pb")], Tree::leaf("b"));

        let counter = load(include_str!("../../../corpus/mcounter.dtla"));
        let fix = representatives(&counter).by_state;
        assert_eq!(fix[&name("po")], Tree::leaf("a"));
        assert_eq!(
            fix[&name("pe")],
            Tree::sym("sigma", vec![Tree::leaf("a"), Tree::leaf("a")])
        );
    }

    #[test]
    fn sumfix_and_maxfix_examples() {
        assert_eq!(sumfix(&mex()).unwrap(), 1);
        assert_eq!(maxfix(&mex()).unwrap(), 0); // q_M(b) = b

        let counter = load(include_str!("../../../corpus/mcounter.dtla"));
        assert_eq!(sumfix(&counter).unwrap(), 0);
        assert_eq!(maxfix(&counter).unwrap(), 0);

        let leaves_uniform =
            make_la_uniform(&load(include_str!("../../../corpus/mleaves.dtla"))).unwrap();
        assert_eq!(sumfix(&leaves_uniform).unwrap(), 4);

        let three = load(include_str!("../../../corpus/mthree.dtla"));
        // q0_M(a) = a, q1_M(a) = a, q2_M(a) = a
        assert_eq!(sumfix(&three).unwrap(), 3);
    }

    #[test]
    fn make_earliest_leaves_earliest_inputs_alone() {
        let m = mex();
        let (e, steps) = make_earliest_counted(&m).unwrap();
        assert_eq!(steps, 0);
        assert_eq!(e, m.trim());
    }

    #[test]
    fn make_initialized_examples() {
        let m = mex();
        let init = make_initialized(&m.trim()).unwrap();
        assert_eq!(init.states.len(), m.states.len() + 1);
        assert!(init.maxrhs() <= 2 * m.maxrhs().max(1));
        assert!(init.validate().valid());
        for s in crate::gen::all_trees(&m.input, 8) {
            assert_eq!(m.eval(&s), init.eval(&s));
        }

        // applying it to an initialized transducer still adds a state
        let again = make_initialized(&init).unwrap();
        assert_eq!(again.states.len(), init.states.len() + 1);

        // counter: no states, the new rules read off the axioms
        let counter = load(include_str!("../../../corpus/mcounter.dtla"));
        let ic = make_initialized(&counter).unwrap();
        assert_eq!(ic.states.len(), 1);
        let key = RuleKey::new(name("__q0"), name("a"), vec![]);
        assert_eq!(ic.rules[&key], Tree::leaf("o"));
        for s in crate::gen::all_trees(&counter.input, 7) {
            assert_eq!(counter.eval(&s), ic.eval(&s));
        }
    }

    #[test]
    fn make_initialized_preserves_classes() {
        let m = mex();
        let init = make_initialized(&m.trim()).unwrap();
        assert!(crate::classify::is_ultralinear(&init).0);
        assert!(crate::classify::is_b_erasing(&init).0);
    }

    #[test]
    fn make_la_uniform_mleaves_matches_expected() {
        let leaves = load(include_str!("../../../corpus/mleaves.dtla"));
        let u = make_la_uniform(&leaves).unwrap();
        assert_eq!(u.states.len(), 4);
        let (ok, res) = infer_la_map(&u);
        assert!(ok);
        let LaMapResult::Map(rho) = res else { panic!() };
        for p in ["paa", "pab", "pba", "pbb"] {
            let axiom = &u.axioms[&name(p)];
            let Label::StateCall(q) = &axiom.label else {
                panic!("axiom should be a state call")
            };
            assert_eq!(rho[q], name(p));
        }
        for s in crate::gen::all_trees(&leaves.input, 7) {
            assert_eq!(leaves.eval(&s), u.eval(&s));
        }
    }

    #[test]
    fn make_la_uniform_mex_is_isomorphic_to_mex() {
        let m = mex();
        let u = make_la_uniform(&m).unwrap();
        // only <q,pb> survives trimming
        assert_eq!(u.states.len(), 1);
        assert_eq!(u.rules.len(), 2);
        for s in crate::gen::all_trees(&m.input, 8) {
            assert_eq!(m.eval(&s), u.eval(&s));
        }
        // dummy rule symbol is the first declared rank-0 output symbol
        let counterexample = load(include_str!("../../../corpus/eqtest.dtla"));
        let u = make_la_uniform(&counterexample).unwrap();
        let dummy_rhs = u
            .rules
            .iter()
            .find(|(k, _)| k.symbol == name("a") && k.state.contains("@ps"));
        // q@ps(a) can only come from completion; its rhs is the dummy
        if let Some((_, rhs)) = dummy_rhs {
            assert_eq!(rhs, &Tree::leaf("e"));
        }
    }

    #[test]
    fn make_earliest_on_ysets_matches_the_expected_split() {
        let y = load(include_str!("../../../corpus/ysets.dtla"));
        let (e, steps) = make_earliest_counted(&y).unwrap();
        assert_eq!(steps, 1);
        assert!(crate::classify::is_earliest(&e).unwrap());
        // states qa, qb, qab.1, qab.2
        assert_eq!(e.states.len(), 4);
        assert!(e.has_state("qab.1") && e.has_state("qab.2"));
        // axiom for pab pushes the forced symbol up
        assert_eq!(
            e.axioms[&name("pab")],
            Tree::sym("sab", vec![Tree::call("qab.1", 0), Tree::call("qab.2", 0)])
        );
        for s in crate::gen::all_trees(&y.input, 7) {
            assert_eq!(y.eval(&s), e.eval(&s));
        }
        // canonicalize leaves it unchanged up to state identity
        let c = canonicalize(&e).unwrap();
        assert_eq!(c.states.len(), 4);
    }

    #[test]
    fn earliest_chain_case_produces_erasing_part_rules() {
        // state q with single rule forwarding to q' whose forced symbol
        // matches: parts forward too
        let text = r#"
input  { s:1 a:0 b:0 }
output { f:2 a:0 b:0 }
lookahead { states pa pb ; delta { a -> pa ; b -> pb ; s(pa) -> pa ; s(pb) -> pb ; } }
states q qq ;
axiom pa = q(x0) ;
axiom pb = b ;
rule q(s(x1:pa)) -> qq(x1) ;
rule q(a) -> f(a,b) ;
rule qq(s(x1:pa)) -> f(a,qq(x1)) ;
rule qq(a) -> f(b,a) ;
"#;
        let m = load(text);
        let (e, _) = make_earliest_counted(&m).unwrap();
        assert!(crate::classify::is_earliest(&e).unwrap());
        for s in crate::gen::all_trees(&m.input, 8) {
            assert_eq!(m.eval(&s), e.eval(&s));
        }
        // the erasing rule q(s(x1)) -> qq(x1) must have become
        // q.i(s(x1)) -> qq.i(x1)
        let has_forward = e.rules.iter().any(|(k, rhs)| {
            k.state.starts_with("q.") && matches!(&rhs.label, Label::StateCall(t) if t.starts_with("qq."))
        });
        assert!(has_forward);
    }

    #[test]
    fn canonicalize_merges_duplicate_states() {
        let text = r#"
input  { s:1 a:0 b:0 }
output { s:1 a:0 b:0 }
lookahead { states pa pb ; delta { a -> pa ; b -> pb ; s(pa) -> pa ; s(pb) -> pb ; } }
states q1 q2 ;
axiom pa = a ;
axiom pb = s(q1(x0)) ;
rule q1(s(x1:pb)) -> s(q2(x1)) ;
rule q1(b) -> b ;
rule q2(s(x1:pb)) -> s(q1(x1)) ;
rule q2(b) -> b ;
"#;
        let m = load(text);
        let c = canonicalize(&m).unwrap();
        assert_eq!(c.states.len(), 1);
        assert!(c.has_state("q1")); // first-declared representative kept
        for s in crate::gen::all_trees(&m.input, 8) {
            assert_eq!(m.eval(&s), c.eval(&s));
        }
        // already-canonical input comes back unchanged
        let again = canonicalize(&c).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn make_la_uniform_preserves_classes_on_random_dtlas() {
        let cfg = crate::gen::GenConfig::small();
        for seed in 700..730 {
            let m = crate::gen::random_total_dtla(&cfg, seed);
            let ultra = crate::classify::is_ultralinear(&m).0;
            let berasing = crate::classify::is_b_erasing(&m).0;
            let u = make_la_uniform(&m).unwrap();
            if ultra {
                assert!(crate::classify::is_ultralinear(&u).0, "seed {seed}");
            }
            if berasing {
                assert!(crate::classify::is_b_erasing(&u).0, "seed {seed}");
            }
            // splitting per look-ahead cannot grow right-hand sides
            assert!(u.maxrhs() <= m.maxrhs().max(1));
        }
    }

    #[test]
    fn transport_examples() {
        let m = mex();
        let trace = normalization_trace(&m, Stage::Canonical).unwrap();
        assert_eq!(trace.sumfix, Some(1));
        assert_eq!(transport_bound(289, &trace), 290);
        let trace_uniform = normalization_trace(&m, Stage::Uniform).unwrap();
        assert_eq!(transport_bound(289, &trace_uniform), 289);
        let trace_init = normalization_trace(&m, Stage::Initialized).unwrap();
        assert_eq!(trace_init.sumfix, None);

        let counter = load(include_str!("../../../corpus/mcounter.dtla"));
        let trace = normalization_trace(&counter, Stage::Canonical).unwrap();
        assert_eq!(trace.sumfix, Some(0));
        assert_eq!(transport_bound(17, &trace), 17);
    }

    #[test]
    fn pipeline_preserves_semantics_and_certifies() {
        for text in [
            include_str!("../../../corpus/mex.dtla"),
            include_str!("../../../corpus/mthree.dtla"),
            include_str!("../../../corpus/mcounter.dtla"),
            include_str!("../../../corpus/ysets.dtla"),
        ] {
            let m = load(text);
            let trace = normalization_trace(&m, Stage::Canonical).unwrap();
            for (stage, d) in &trace.stages {
                assert!(d.validate().valid(), "{stage:?}");
                for s in crate::gen::all_trees(&m.input, 6) {
                    assert_eq!(m.eval(&s), d.eval(&s), "{stage:?}");
                }
            }
            let (_, canonical) = trace.stages.last().unwrap();
            assert!(crate::classify::is_canonical(canonical).unwrap());
        }
    }
}
