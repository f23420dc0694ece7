//! Structural classes that gate the bound computations: linear, ultralinear,
//! bounded erasing, output-monadic, depth-uniform, la-uniform, earliest and
//! canonical.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::scc::tarjan_scc;
use crate::transducer::{Dtla, RuleKey};
use crate::trees::{Label, Name, Tree};
use crate::{Error, Result};

/// Everything the class checks can tell about a transducer, with witnesses.
#[derive(Debug, Clone, Serialize)]
pub struct ClassReport {
    pub linear: bool,
    pub ultralinear: bool,
    /// State ranking witnessing ultralinearity.
    pub ultralinear_witness: Option<BTreeMap<String, usize>>,
    /// Violating (rule, variable) pair otherwise.
    pub ultralinear_violation: Option<(String, u32)>,
    pub b_erasing: bool,
    /// An erasing cycle, as a state sequence, when not b-erasing.
    pub erasing_cycle: Option<Vec<String>>,
    pub output_monadic: bool,
    pub depth_uniform: bool,
    pub depth_profile: Option<BTreeMap<String, usize>>,
    pub depth_conflict: Option<String>,
    pub la_uniform: bool,
    pub la_map: Option<BTreeMap<String, String>>,
    pub la_violation: Option<String>,
    /// States whose reachable root-label set is a singleton (empty iff
    /// earliest); only meaningful for la-uniform transducers.
    pub singleton_rlabs: Vec<String>,
    pub earliest: Option<bool>,
    pub canonical: Option<bool>,
}

/// Full report over a trimmed transducer.
pub fn classify(m: &Dtla) -> ClassReport {
    let (ultra, wit) = is_ultralinear(m);
    let (berasing, cycle) = is_b_erasing(m);
    let (du, profile) = depth_profile(m);
    let (lau, rho) = infer_la_map(m);
    let (earliest, canonical, singleton) = match &rho {
        LaMapResult::Map(rho) => {
            let rl = rlabs(m, rho).expect("rho was just inferred");
            let singleton: Vec<String> = m
                .states
                .iter()
                .filter(|q| rl.get(*q).map(|s| s.len() == 1).unwrap_or(false))
                .map(|q| q.to_string())
                .collect();
            let e = singleton.is_empty();
            let c = if e {
                Some(
                    crate::normalize::equivalence_classes(m, rho)
                        .iter()
                        .all(|cls| cls.len() == 1),
                )
            } else {
                None
            };
            (Some(e), c, singleton)
        }
        LaMapResult::Violation(_) => (None, None, Vec::new()),
    };
    ClassReport {
        linear: is_linear(m),
        ultralinear: ultra,
        ultralinear_witness: match &wit {
            UltraResult::Witness(mu) => Some(
                mu.iter()
                    .map(|(q, r)| (q.to_string(), *r))
                    .collect(),
            ),
            _ => None,
        },
        ultralinear_violation: match &wit {
            UltraResult::Violation(key, v) => Some((key.to_string(), *v)),
            _ => None,
        },
        b_erasing: berasing,
        erasing_cycle: cycle.map(|c| c.iter().map(|q| q.to_string()).collect()),
        output_monadic: is_output_monadic(m),
        depth_uniform: du,
        depth_profile: profile.left().map(|m| {
            m.into_iter()
                .map(|((a, j), d)| (format!("{a},{j}"), d))
                .collect()
        }),
        depth_conflict: profile.right().map(|c| c.to_string()),
        la_uniform: lau,
        la_map: match &rho {
            LaMapResult::Map(r) => Some(
                r.iter()
                    .map(|(q, p)| (q.to_string(), p.to_string()))
                    .collect(),
            ),
            _ => None,
        },
        la_violation: match &rho {
            LaMapResult::Violation(v) => Some(v.clone()),
            _ => None,
        },
        singleton_rlabs: singleton,
        earliest,
        canonical,
    }
}

/// Each variable occurs at most once in every right-hand side.
pub fn is_linear(m: &Dtla) -> bool {
    m.rules.values().all(|rhs| {
        let vars = rhs.variables();
        let set: BTreeSet<u32> = vars.iter().copied().collect();
        set.len() == vars.len()
    })
}

#[derive(Debug, Clone)]
pub enum UltraResult {
    Witness(BTreeMap<Name, usize>),
    Violation(RuleKey, u32),
}

/// Decides ultralinearity via the call graph: condense into strongly
/// connected components and use distinct topological ranks as the state
/// ranking; any valid ranking is constant on cycles, so copying inside an
/// SCC is exactly what must be ruled out.
pub fn is_ultralinear(m: &Dtla) -> (bool, UltraResult) {
    let n = m.states.len();
    let idx: HashMap<&Name, usize> = m.states.iter().enumerate().map(|(i, q)| (q, i)).collect();
    let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (key, rhs) in &m.rules {
        let Some(&qi) = idx.get(&key.state) else {
            continue;
        };
        for (q2, _) in rhs.state_calls() {
            if let Some(&j) = idx.get(&q2) {
                succ[qi].insert(j);
            }
        }
    }
    let comps = tarjan_scc(n, &|v| succ[v].iter().copied().collect());
    // components come out in reverse topological order: callees first
    let mut comp_of = vec![0usize; n];
    for (ci, comp) in comps.iter().enumerate() {
        for &v in comp {
            comp_of[v] = ci;
        }
    }
    // mu increases along call edges: callee component index <= caller's in
    // reverse topological order, so rank = (#comps - 1) - component index.
    let ncomps = comps.len();
    let mu: BTreeMap<Name, usize> = m
        .states
        .iter()
        .enumerate()
        .map(|(i, q)| (q.clone(), ncomps - 1 - comp_of[i]))
        .collect();

    for key in m.rule_keys_sorted() {
        let rhs = &m.rules[&key];
        let Some(&qi) = idx.get(&key.state) else {
            continue;
        };
        for (q2, v) in rhs.state_calls() {
            let Some(&j) = idx.get(&q2) else { continue };
            if comp_of[j] == comp_of[qi] {
                let occurrences = rhs.variables().iter().filter(|&&x| x == v).count();
                if occurrences != 1 {
                    return (false, UltraResult::Violation(key.clone(), v));
                }
            }
        }
    }
    (true, UltraResult::Witness(mu))
}

/// Re-checks a ranking against both ultralinearity clauses.
pub fn check_ultralinear_witness(m: &Dtla, mu: &BTreeMap<Name, usize>) -> bool {
    m.rules.iter().all(|(key, rhs)| {
        let Some(&mq) = mu.get(&key.state) else {
            return false;
        };
        rhs.state_calls().iter().all(|(q2, v)| {
            let Some(&m2) = mu.get(q2) else { return false };
            m2 >= mq
                && (m2 != mq || rhs.variables().iter().filter(|&&x| x == *v).count() == 1)
        })
    })
}

/// No cycle of erasing rules. Returns a witnessing state cycle otherwise.
pub fn is_b_erasing(m: &Dtla) -> (bool, Option<Vec<Name>>) {
    let n = m.states.len();
    let idx: HashMap<&Name, usize> = m.states.iter().enumerate().map(|(i, q)| (q, i)).collect();
    let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (key, rhs) in &m.rules {
        if let Label::StateCall(q2) = &rhs.label {
            if let (Some(&a), Some(&b)) = (idx.get(&key.state), idx.get(q2)) {
                succ[a].insert(b);
            }
        }
    }
    for comp in tarjan_scc(n, &|v| succ[v].iter().copied().collect()) {
        let cyclic = comp.len() > 1 || succ[comp[0]].contains(&comp[0]);
        if cyclic {
            // follow first in-component successors until a node repeats;
            // the repeated segment is a genuine erasing cycle
            let mut walk = vec![comp[0]];
            let mut seen: HashMap<usize, usize> = HashMap::from([(comp[0], 0)]);
            let mut cur = comp[0];
            let cycle = loop {
                let next = *succ[cur]
                    .iter()
                    .find(|x| comp.contains(x))
                    .expect("every node of a cyclic component has an internal successor");
                if let Some(&start) = seen.get(&next) {
                    break walk[start..].to_vec();
                }
                seen.insert(next, walk.len());
                walk.push(next);
                cur = next;
            };
            let names = cycle.into_iter().map(|i| m.states[i].clone()).collect();
            return (false, Some(names));
        }
    }
    (true, None)
}

/// Re-checks a state sequence as a closed chain of erasing rules.
pub fn check_erasing_cycle(m: &Dtla, cycle: &[Name]) -> bool {
    if cycle.is_empty() {
        return false;
    }
    (0..cycle.len()).all(|i| {
        let from = &cycle[i];
        let to = &cycle[(i + 1) % cycle.len()];
        m.rules.iter().any(|(key, rhs)| {
            key.state == *from && matches!(&rhs.label, Label::StateCall(q2) if q2 == to)
        })
    })
}

/// Every output symbol has rank at most one.
pub fn is_output_monadic(m: &Dtla) -> bool {
    m.output.iter().all(|(_, r)| r <= 1)
}

/// Two rules translating the same input child at different depths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthConflict {
    pub symbol: Name,
    pub child: usize,
    pub rule1: RuleKey,
    pub depth1: usize,
    pub rule2: RuleKey,
    pub depth2: usize,
}

impl std::fmt::Display for DepthConflict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "child {} of {} translated at depth {} in {} but {} in {}",
            self.child, self.symbol, self.depth1, self.rule1, self.depth2, self.rule2
        )
    }
}

impl DepthConflict {
    /// Re-checks the witness against the rule set.
    pub fn verify(&self, m: &Dtla) -> bool {
        let at_depth = |key: &RuleKey, depth: usize| {
            m.rules.get(key).is_some_and(|rhs| {
                state_call_depths(rhs)
                    .iter()
                    .any(|(d, j)| *d == depth && *j as usize == self.child)
            })
        };
        self.depth1 != self.depth2
            && self.rule1.symbol == self.symbol
            && self.rule2.symbol == self.symbol
            && at_depth(&self.rule1, self.depth1)
            && at_depth(&self.rule2, self.depth2)
    }
}

/// Either the consistent depth table or a conflict witness.
pub enum Profile {
    Depths(BTreeMap<(Name, usize), usize>),
    Conflict(DepthConflict),
}

impl Profile {
    pub fn left(&self) -> Option<BTreeMap<(Name, usize), usize>> {
        match self {
            Profile::Depths(m) => Some(m.clone()),
            _ => None,
        }
    }
    pub fn right(&self) -> Option<DepthConflict> {
        match self {
            Profile::Conflict(c) => Some(c.clone()),
            _ => None,
        }
    }
}

/// Depth-uniformity: every translation of the j-th child of an a-node sits
/// at one fixed depth `d_{a,j}` across all rules.
pub fn depth_profile(m: &Dtla) -> (bool, Profile) {
    let mut depths: BTreeMap<(Name, usize), usize> = BTreeMap::new();
    let mut first: HashMap<(Name, usize), RuleKey> = HashMap::new();
    for key in m.rule_keys_sorted() {
        let rhs = &m.rules[&key];
        for (depth, child) in state_call_depths(rhs) {
            let slot = (key.symbol.clone(), child as usize);
            match depths.get(&slot) {
                None => {
                    depths.insert(slot.clone(), depth);
                    first.insert(slot, key.clone());
                }
                Some(&prev) if prev == depth => {}
                Some(&prev) => {
                    return (
                        false,
                        Profile::Conflict(DepthConflict {
                            symbol: key.symbol.clone(),
                            child: child as usize,
                            rule1: first[&slot].clone(),
                            depth1: prev,
                            rule2: key.clone(),
                            depth2: depth,
                        }),
                    );
                }
            }
        }
    }
    (true, Profile::Depths(depths))
}

/// `(depth, child index)` of every state call in a right-hand side.
fn state_call_depths(rhs: &Tree) -> Vec<(usize, u32)> {
    let mut out = Vec::new();
    fn walk(t: &Tree, depth: usize, out: &mut Vec<(usize, u32)>) {
        if let Label::StateCall(_) = &t.label {
            if let Label::Var(i) = t.children[0].label {
                out.push((depth, i));
            }
            return;
        }
        for c in &t.children {
            walk(c, depth + 1, out);
        }
    }
    walk(rhs, 0, &mut out);
    out
}

#[derive(Debug, Clone)]
pub enum LaMapResult {
    Map(HashMap<Name, Name>),
    Violation(String),
}

/// Attempts to construct the la-map by propagating from axioms and rule
/// keys, then verifies all three la-uniformity conditions including the
/// completeness condition.
pub fn infer_la_map(m: &Dtla) -> (bool, LaMapResult) {
    let mut rho: HashMap<Name, Name> = HashMap::new();
    let assign = |q: &Name, p: &Name, rho: &mut HashMap<Name, Name>| -> Option<String> {
        match rho.get(q) {
            None => {
                rho.insert(q.clone(), p.clone());
                None
            }
            Some(old) if old == p => None,
            Some(old) => Some(format!("state {q} would need la-map value {old} and {p}")),
        }
    };
    // (1) axioms
    for p in &m.la.states {
        if let Some(t) = m.axioms.get(p) {
            for (q, _) in t.state_calls() {
                if let Some(e) = assign(&q, p, &mut rho) {
                    return (false, LaMapResult::Violation(e));
                }
            }
        }
    }
    // (2a)/(2b) rules
    for key in m.rule_keys_sorted() {
        let rhs = &m.rules[&key];
        let Some(p) = m.la.step(&key.symbol, &key.la) else {
            continue;
        };
        if let Some(e) = assign(&key.state, &p, &mut rho) {
            return (false, LaMapResult::Violation(e));
        }
        for (q2, i) in rhs.state_calls() {
            if let Some(e) = assign(&q2, &key.la[i as usize - 1], &mut rho) {
                return (false, LaMapResult::Violation(e));
            }
        }
    }
    // unconstrained states: pick the first value satisfying completeness
    for q in &m.states {
        if rho.contains_key(q) {
            continue;
        }
        let choice = m.la.states.iter().find(|p| covers(m, q, p));
        match choice {
            Some(p) => {
                rho.insert(q.clone(), p.clone());
            }
            None => {
                return (
                    false,
                    LaMapResult::Violation(format!(
                        "state {q} has no rules covering any look-ahead state"
                    )),
                )
            }
        }
    }
    let problems = check_la_map(m, &rho);
    if let Some(e) = problems.into_iter().next() {
        return (false, LaMapResult::Violation(e));
    }
    (true, LaMapResult::Map(rho))
}

fn covers(m: &Dtla, q: &Name, p: &Name) -> bool {
    m.input.iter().all(|(a, k)| {
        m.la.vectors(k).into_iter().all(|v| {
            m.la.step(a, &v).as_ref() != Some(p)
                || m.rules
                    .contains_key(&RuleKey::new(q.clone(), a.clone(), v))
        })
    })
}

/// All la-uniformity violations of a given candidate map, as messages.
pub fn check_la_map(m: &Dtla, rho: &HashMap<Name, Name>) -> Vec<String> {
    let mut out = Vec::new();
    for q in &m.states {
        if !rho.contains_key(q) {
            out.push(format!("la-map is missing state {q}"));
        }
    }
    for p in &m.la.states {
        if let Some(t) = m.axioms.get(p) {
            for (q, _) in t.state_calls() {
                if rho.get(&q) != Some(p) {
                    out.push(format!("axiom for {p} calls {q} but la-map disagrees"));
                }
            }
        }
    }
    for key in m.rule_keys_sorted() {
        let rhs = &m.rules[&key];
        if let Some(p) = m.la.step(&key.symbol, &key.la) {
            if rho.get(&key.state) != Some(&p) {
                out.push(format!("rule {key} contradicts the la-map at its key"));
            }
        }
        for (q2, i) in rhs.state_calls() {
            if rho.get(&q2) != Some(&key.la[i as usize - 1]) {
                out.push(format!("rule {key} calls {q2} on a child with the wrong look-ahead"));
            }
        }
    }
    for q in &m.states {
        if let Some(p) = rho.get(q) {
            if !covers(m, q, p) {
                out.push(format!(
                    "state {q} is missing a rule for some key with look-ahead value {p}"
                ));
            }
        }
    }
    out
}

/// Root labels reachable from each state: edges `q -> d` for a rule whose
/// right-hand side starts with `d`, and `q -> q'` for erasing rules.
/// Requires an la-uniform trimmed transducer.
pub fn rlabs(m: &Dtla, rho: &HashMap<Name, Name>) -> Result<HashMap<Name, BTreeSet<Name>>> {
    if !check_la_map(m, rho).is_empty() {
        return Err(Error::Precondition("rlabs needs an la-uniform transducer".into()));
    }
    let mut direct: HashMap<Name, BTreeSet<Name>> = HashMap::new();
    let mut eps: HashMap<Name, BTreeSet<Name>> = HashMap::new();
    for (key, rhs) in &m.rules {
        match &rhs.label {
            Label::Sym(d) => {
                direct
                    .entry(key.state.clone())
                    .or_default()
                    .insert(d.clone());
            }
            Label::StateCall(q2) => {
                eps.entry(key.state.clone()).or_default().insert(q2.clone());
            }
            _ => {}
        }
    }
    let mut out: HashMap<Name, BTreeSet<Name>> = HashMap::new();
    for q in &m.states {
        // BFS over erasing edges collecting direct labels
        let mut seen: BTreeSet<Name> = BTreeSet::new();
        let mut labels: BTreeSet<Name> = BTreeSet::new();
        let mut work = vec![q.clone()];
        while let Some(cur) = work.pop() {
            if !seen.insert(cur.clone()) {
                continue;
            }
            if let Some(ds) = direct.get(&cur) {
                labels.extend(ds.iter().cloned());
            }
            if let Some(qs) = eps.get(&cur) {
                work.extend(qs.iter().cloned());
            }
        }
        out.insert(q.clone(), labels);
    }
    Ok(out)
}

/// No state's reachable root-label set is a singleton.
pub fn is_earliest(m: &Dtla) -> Result<bool> {
    let (ok, res) = infer_la_map(m);
    if !ok {
        return Err(Error::Precondition("earliest is defined for la-uniform transducers".into()));
    }
    let LaMapResult::Map(rho) = res else {
        unreachable!()
    };
    let rl = rlabs(m, &rho)?;
    Ok(m.states.iter().all(|q| rl[q].len() != 1))
}

/// Earliest with a discrete state-equivalence partition.
pub fn is_canonical(m: &Dtla) -> Result<bool> {
    if !is_earliest(m)? {
        return Err(Error::Precondition(
            "canonicity is only decided for earliest transducers".into(),
        ));
    }
    let (_, res) = infer_la_map(m);
    let LaMapResult::Map(rho) = res else {
        unreachable!()
    };
    Ok(crate::normalize::equivalence_classes(m, &rho)
        .iter()
        .all(|c| c.len() == 1))
}
