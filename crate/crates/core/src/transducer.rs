//! The dtla model: look-ahead automaton, rules and axioms, exact evaluation
//! semantics (including inputs with look-ahead-state leaves), validation,
//! trimming, and the totality and completeness checks.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::trees::{Label, Name, RankedAlphabet, Tree};

/// Total deterministic bottom-up automaton guiding rule choice. The state
/// declaration order is fixed and doubles as the component order of
/// difference tuples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LookaheadAutomaton {
    pub states: Vec<Name>,
    pub delta: HashMap<(Name, Vec<Name>), Name>,
}

impl LookaheadAutomaton {
    pub fn new(states: Vec<Name>, delta: HashMap<(Name, Vec<Name>), Name>) -> Self {
        LookaheadAutomaton { states, delta }
    }

    pub fn contains(&self, p: &str) -> bool {
        self.states.iter().any(|s| &**s == p)
    }

    pub fn state_index(&self, p: &str) -> Option<usize> {
        self.states.iter().position(|s| &**s == p)
    }

    pub fn step(&self, sym: &Name, children: &[Name]) -> Option<Name> {
        self.delta.get(&(sym.clone(), children.to_vec())).cloned()
    }

    /// All state vectors of the given length, lexicographically by
    /// declaration order (first position most significant).
    pub fn vectors(&self, k: usize) -> Vec<Vec<Name>> {
        let mut out = vec![Vec::new()];
        for _ in 0..k {
            let mut next = Vec::with_capacity(out.len() * self.states.len());
            for v in &out {
                for p in &self.states {
                    let mut w = v.clone();
                    w.push(p.clone());
                    next.push(w);
                }
            }
            out = next;
        }
        out
    }

    /// Checks that `delta` is defined for every symbol/state-vector
    /// combination over the given input alphabet.
    pub fn is_total(&self, input: &RankedAlphabet) -> bool {
        input.iter().all(|(a, k)| {
            self.vectors(k)
                .iter()
                .all(|v| self.delta.contains_key(&(a.clone(), v.clone())))
        })
    }

    /// States with nonempty language, via the usual least-fixpoint
    /// productivity computation.
    pub fn nonempty_states(&self, input: &RankedAlphabet) -> BTreeSet<Name> {
        let mut nonempty: BTreeSet<Name> = BTreeSet::new();
        loop {
            let mut changed = false;
            for (a, k) in input.iter() {
                for v in self.vectors(k) {
                    if v.iter().all(|p| nonempty.contains(p)) {
                        if let Some(p) = self.step(a, &v) {
                            if nonempty.insert(p) {
                                changed = true;
                            }
                        }
                    }
                }
            }
            if !changed {
                return nonempty;
            }
        }
    }
}

/// Rule key `(q, a, p_1..p_k)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RuleKey {
    pub state: Name,
    pub symbol: Name,
    pub la: Vec<Name>,
}

impl RuleKey {
    pub fn new(state: Name, symbol: Name, la: Vec<Name>) -> Self {
        RuleKey { state, symbol, la }
    }
}

impl fmt::Display for RuleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}", self.state, self.symbol)?;
        if !self.la.is_empty() {
            write!(f, "(")?;
            for (i, p) in self.la.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "x{}:{}", i + 1, p)?;
            }
            write!(f, ")")?;
        }
        write!(f, ")")
    }
}

/// Initial-state and la-map certificates attached by the normal-form
/// constructions; `validate` re-checks them when present.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Certified {
    /// `p -> q_{0,p}` when every axiom is a bare initial-state call.
    pub initialized: Option<HashMap<Name, Name>>,
    /// la-map `rho: Q -> P` when the transducer is la-uniform.
    pub la_uniform: Option<HashMap<Name, Name>>,
}

/// A deterministic top-down tree transducer with regular look-ahead.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dtla {
    pub input: RankedAlphabet,
    pub output: RankedAlphabet,
    pub states: Vec<Name>,
    pub la: LookaheadAutomaton,
    pub axioms: HashMap<Name, Tree>,
    pub rules: HashMap<RuleKey, Tree>,
    pub certified: Certified,
}

/// One finding of [`Dtla::validate`].
#[derive(Debug, Clone, Serialize)]
pub struct Finding {
    pub message: String,
}

/// Validation outcome; valid iff no findings.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn valid(&self) -> bool {
        self.findings.is_empty()
    }
}

impl Dtla {
    pub fn state_index(&self, q: &str) -> Option<usize> {
        self.states.iter().position(|s| &**s == q)
    }

    pub fn has_state(&self, q: &str) -> bool {
        self.state_index(q).is_some()
    }

    pub fn is_dtop(&self) -> bool {
        self.la.states.len() == 1
    }

    /// Rule keys in canonical order: state declaration index, then symbol
    /// declaration index, then the look-ahead vector by state declaration
    /// order.
    pub fn rule_keys_sorted(&self) -> Vec<RuleKey> {
        let mut keys: Vec<&RuleKey> = self.rules.keys().collect();
        keys.sort_by_key(|k| self.rule_key_ord(k));
        keys.into_iter().cloned().collect()
    }

    pub fn rule_key_ord(&self, k: &RuleKey) -> (usize, usize, Vec<usize>) {
        (
            self.state_index(&k.state).unwrap_or(usize::MAX),
            self.input.decl_index(&k.symbol).unwrap_or(usize::MAX),
            k.la
                .iter()
                .map(|p| self.la.state_index(p).unwrap_or(usize::MAX))
                .collect(),
        )
    }

    /// Maximal height over axioms and rule right-hand sides.
    pub fn maxrhs(&self) -> usize {
        self.axioms
            .values()
            .chain(self.rules.values())
            .map(Tree::height)
            .max()
            .unwrap_or(0)
    }

    /// Look-ahead state of an input tree; look-ahead leaves map to
    /// themselves. `None` only for malformed input.
    pub fn delta_star(&self, s: &Tree) -> Option<Name> {
        match &s.label {
            Label::LaLeaf(p) => Some(p.clone()),
            Label::Sym(a) => {
                let mut children = Vec::with_capacity(s.children.len());
                for c in &s.children {
                    children.push(self.delta_star(c)?);
                }
                self.la.step(a, &children)
            }
            _ => None,
        }
    }

    /// Pairs `(q,p)` for which the extension rule `q(p) -> <q,p>` exists,
    /// i.e. `q` translates some tree with look-ahead state `p`. Least
    /// fixpoint over the rules; a rule contributes only when every child
    /// look-ahead state in its key is realizable.
    pub fn productive_pairs(&self) -> HashSet<(Name, Name)> {
        let nonempty = self.la.nonempty_states(&self.input);
        let mut productive: HashSet<(Name, Name)> = HashSet::new();
        loop {
            let mut changed = false;
            for (key, rhs) in &self.rules {
                if !key.la.iter().all(|p| nonempty.contains(p)) {
                    continue;
                }
                let Some(p) = self.la.step(&key.symbol, &key.la) else {
                    continue;
                };
                let entry = (key.state.clone(), p);
                if productive.contains(&entry) {
                    continue;
                }
                let ok = rhs.state_calls().iter().all(|(q, i)| {
                    productive.contains(&(q.clone(), key.la[*i as usize - 1].clone()))
                });
                if ok && productive.insert(entry) {
                    changed = true;
                }
            }
            if !changed {
                return productive;
            }
        }
    }

    /// `q_M(s)` by the recursive semantics. `s` may contain look-ahead
    /// leaves; arriving at one in state `q` yields `<q,p>` exactly when the
    /// extension rule exists. `None` is the undefined value.
    pub fn eval_state(&self, q: &Name, s: &Tree) -> Option<Tree> {
        let productive = self.productive_pairs();
        self.eval_state_with(&productive, q, s)
    }

    pub fn eval_state_with(
        &self,
        productive: &HashSet<(Name, Name)>,
        q: &Name,
        s: &Tree,
    ) -> Option<Tree> {
        match &s.label {
            Label::LaLeaf(p) => {
                if productive.contains(&(q.clone(), p.clone())) {
                    Some(Tree::new(Label::PairLeaf(q.clone(), p.clone()), vec![]))
                } else {
                    None
                }
            }
            Label::Sym(a) => {
                let mut child_states = Vec::with_capacity(s.children.len());
                for c in &s.children {
                    child_states.push(self.delta_star(c)?);
                }
                let rhs = self
                    .rules
                    .get(&RuleKey::new(q.clone(), a.clone(), child_states))?;
                self.instantiate(productive, rhs, &s.children)
            }
            _ => None,
        }
    }

    /// Substitutes `q'(x_i) <- q'_M(s_i)` in a right-hand side.
    fn instantiate(
        &self,
        productive: &HashSet<(Name, Name)>,
        rhs: &Tree,
        children: &[Tree],
    ) -> Option<Tree> {
        match &rhs.label {
            Label::StateCall(q2) => {
                let Label::Var(i) = rhs.children[0].label else {
                    return None;
                };
                self.eval_state_with(productive, q2, &children[i as usize - 1])
            }
            _ => {
                let mut kids = Vec::with_capacity(rhs.children.len());
                for c in &rhs.children {
                    kids.push(self.instantiate(productive, c, children)?);
                }
                Some(Tree::new(rhs.label.clone(), kids))
            }
        }
    }

    /// `M(s)`: the axiom of the root look-ahead state with every `q(x0)`
    /// replaced by `q_M(s)`.
    pub fn eval(&self, s: &Tree) -> Option<Tree> {
        let productive = self.productive_pairs();
        self.eval_with(&productive, s)
    }

    pub fn eval_with(&self, productive: &HashSet<(Name, Name)>, s: &Tree) -> Option<Tree> {
        let p = self.delta_star(s)?;
        let axiom = self.axioms.get(&p)?;
        self.instantiate_axiom(productive, axiom, s)
    }

    fn instantiate_axiom(
        &self,
        productive: &HashSet<(Name, Name)>,
        axiom: &Tree,
        s: &Tree,
    ) -> Option<Tree> {
        match &axiom.label {
            Label::StateCall(q) => self.eval_state_with(productive, q, s),
            _ => {
                let mut kids = Vec::with_capacity(axiom.children.len());
                for c in &axiom.children {
                    kids.push(self.instantiate_axiom(productive, c, s)?);
                }
                Some(Tree::new(axiom.label.clone(), kids))
            }
        }
    }

    /// Removes look-ahead states with empty language and states unreachable
    /// from the axioms. The translation is unchanged.
    pub fn trim(&self) -> Dtla {
        let nonempty = self.la.nonempty_states(&self.input);
        let la_states: Vec<Name> = self
            .la
            .states
            .iter()
            .filter(|p| nonempty.contains(*p))
            .cloned()
            .collect();
        let delta: HashMap<(Name, Vec<Name>), Name> = self
            .la
            .delta
            .iter()
            .filter(|((_, v), p)| v.iter().all(|x| nonempty.contains(x)) && nonempty.contains(*p))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let axioms: HashMap<Name, Tree> = self
            .axioms
            .iter()
            .filter(|(p, _)| nonempty.contains(*p))
            .map(|(p, t)| (p.clone(), t.clone()))
            .collect();

        // Reachable states, through rules whose look-ahead keys survive.
        let live_rule = |key: &RuleKey| key.la.iter().all(|p| nonempty.contains(p));
        let mut reachable: HashSet<Name> = HashSet::new();
        let mut work: Vec<Name> = Vec::new();
        for t in axioms.values() {
            for (q, _) in t.state_calls() {
                if reachable.insert(q.clone()) {
                    work.push(q);
                }
            }
        }
        while let Some(q) = work.pop() {
            for (key, rhs) in &self.rules {
                if key.state == q && live_rule(key) {
                    for (q2, _) in rhs.state_calls() {
                        if reachable.insert(q2.clone()) {
                            work.push(q2);
                        }
                    }
                }
            }
        }
        let states: Vec<Name> = self
            .states
            .iter()
            .filter(|q| reachable.contains(*q))
            .cloned()
            .collect();
        let rules: HashMap<RuleKey, Tree> = self
            .rules
            .iter()
            .filter(|(k, _)| reachable.contains(&k.state) && live_rule(k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let certified = Certified {
            initialized: self.certified.initialized.clone().filter(|m| {
                m.iter()
                    .all(|(p, q)| nonempty.contains(p) && reachable.contains(q))
            }),
            la_uniform: self.certified.la_uniform.clone().map(|m| {
                m.into_iter()
                    .filter(|(q, _)| reachable.contains(q))
                    .collect()
            }),
        };
        Dtla {
            input: self.input.clone(),
            output: self.output.clone(),
            states,
            la: LookaheadAutomaton::new(la_states, delta),
            axioms,
            rules,
            certified,
        }
    }

    /// Decides totality by a deterministic bottom-up reachability over pairs
    /// `(p, U)` where `U` is the set of states undefined on the current
    /// subtree. Expects a trimmed transducer.
    pub fn is_total(&self) -> bool {
        assert!(
            self.states.len() <= 64,
            "totality check uses a 64-bit state mask"
        );
        let axiom_mask: HashMap<Name, u64> = self
            .la
            .states
            .iter()
            .map(|p| {
                let mut m = 0u64;
                if let Some(a) = self.axioms.get(p) {
                    for (q, _) in a.state_calls() {
                        if let Some(i) = self.state_index(&q) {
                            m |= 1 << i;
                        }
                    }
                }
                (p.clone(), m)
            })
            .collect();

        let mut reachable: BTreeSet<(Name, u64)> = BTreeSet::new();
        loop {
            let mut changed = false;
            for (a, k) in self.input.iter() {
                let pool: Vec<(Name, u64)> = reachable.iter().cloned().collect();
                let mut tuples: Vec<Vec<(Name, u64)>> = vec![Vec::new()];
                for _ in 0..k {
                    let mut next = Vec::new();
                    for t in &tuples {
                        for item in &pool {
                            let mut t2 = t.clone();
                            t2.push(item.clone());
                            next.push(t2);
                        }
                    }
                    tuples = next;
                }
                for t in tuples {
                    let la_vec: Vec<Name> = t.iter().map(|(p, _)| p.clone()).collect();
                    let Some(p) = self.la.step(a, &la_vec) else {
                        continue;
                    };
                    let mut undef = 0u64;
                    for (qi, q) in self.states.iter().enumerate() {
                        let key = RuleKey::new(q.clone(), a.clone(), la_vec.clone());
                        let bad = match self.rules.get(&key) {
                            None => true,
                            Some(rhs) => {
                                rhs.state_calls()
                                    .iter()
                                    .any(|(q2, i)| match (self.state_index(q2), *i as usize) {
                                        (Some(j), i) if i >= 1 && i <= t.len() => {
                                            t[i - 1].1 & (1 << j) != 0
                                        }
                                        _ => true,
                                    })
                            }
                        };
                        if bad {
                            undef |= 1 << qi;
                        }
                    }
                    if reachable.insert((p, undef)) {
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        reachable
            .iter()
            .all(|(p, undef)| axiom_mask.get(p).map(|m| m & undef == 0).unwrap_or(false))
    }

    /// True iff a rule exists for every `(q, a, p_1..p_k)` combination.
    pub fn is_complete(&self) -> bool {
        self.states.iter().all(|q| {
            self.input.iter().all(|(a, k)| {
                self.la.vectors(k).into_iter().all(|v| {
                    self.rules
                        .contains_key(&RuleKey::new(q.clone(), a.clone(), v))
                })
            })
        })
    }

    /// Checks every structural invariant and reports the violations.
    pub fn validate(&self) -> ValidationReport {
        let mut findings: Vec<String> = Vec::new();
        let mut push = |m: String| findings.push(m);

        // Name-space separation: look-ahead states act as input leaves and
        // states appear as heads in output terms.
        for p in &self.la.states {
            if self.input.contains(p) {
                push(format!(
                    "look-ahead state {p} collides with an input symbol"
                ));
            }
        }
        for q in &self.states {
            if self.output.contains(q) {
                push(format!("state {q} collides with an output symbol"));
            }
        }
        {
            let mut seen = HashSet::new();
            for q in &self.states {
                if !seen.insert(q.clone()) {
                    push(format!("duplicate state {q}"));
                }
            }
            let mut seen = HashSet::new();
            for p in &self.la.states {
                if !seen.insert(p.clone()) {
                    push(format!("duplicate look-ahead state {p}"));
                }
            }
        }
        if self.la.states.is_empty() {
            push("look-ahead automaton has no states".into());
        }

        // Transition function shape and totality.
        for ((a, v), p) in &self.la.delta {
            match self.input.rank(a) {
                None => push(format!("delta mentions unknown input symbol {a}")),
                Some(k) if k != v.len() => push(format!(
                    "delta key {a}/{} does not match rank {k}",
                    v.len()
                )),
                _ => {}
            }
            for x in v.iter().chain(std::iter::once(p)) {
                if !self.la.contains(x) {
                    push(format!("delta mentions unknown look-ahead state {x}"));
                }
            }
        }
        if !self.la.is_total(&self.input) {
            push("look-ahead transition function is not total".into());
        }

        // Axioms: one per look-ahead state, over the output alphabet plus
        // state calls on x0.
        for p in &self.la.states {
            match self.axioms.get(p) {
                None => push(format!("missing axiom for look-ahead state {p}")),
                Some(t) => self.check_output_tree(t, 0, &mut push),
            }
        }
        for p in self.axioms.keys() {
            if !self.la.contains(p) {
                push(format!("axiom for unknown look-ahead state {p}"));
            }
        }

        // Rules.
        for (key, rhs) in &self.rules {
            if !self.has_state(&key.state) {
                push(format!("rule {key} has unknown state"));
            }
            match self.input.rank(&key.symbol) {
                None => push(format!("rule {key} has unknown input symbol")),
                Some(k) if k != key.la.len() => push(format!(
                    "rule {key} annotates {} children, rank is {k}",
                    key.la.len()
                )),
                Some(k) => self.check_output_tree(rhs, k as u32, &mut push),
            }
            for p in &key.la {
                if !self.la.contains(p) {
                    push(format!("rule {key} mentions unknown look-ahead state {p}"));
                }
            }
        }

        // Certified flags.
        if let Some(init) = &self.certified.initialized {
            for p in &self.la.states {
                let ok = match (init.get(p), self.axioms.get(p)) {
                    (Some(q0), Some(t)) => {
                        t.label == Label::StateCall(q0.clone())
                            && t.children.len() == 1
                            && t.children[0].label == Label::Var(0)
                    }
                    _ => false,
                };
                if !ok {
                    push(format!(
                        "certified initialized, but the {p}-axiom is not a bare initial-state call"
                    ));
                }
            }
        }
        if let Some(rho) = &self.certified.la_uniform {
            for m in crate::classify::check_la_map(self, rho) {
                push(m);
            }
        }

        ValidationReport {
            findings: findings
                .into_iter()
                .map(|message| Finding { message })
                .collect(),
        }
    }

    /// Checks a tree over the output alphabet plus state calls; `max_var`
    /// bounds variable indices (0 means only `x0` is allowed, `k > 0`
    /// allows `x1..xk`).
    fn check_output_tree(&self, t: &Tree, max_var: u32, push: &mut dyn FnMut(String)) {
        match &t.label {
            Label::Sym(d) => match self.output.rank(d) {
                None => push(format!("unknown output symbol {d} in {t}")),
                Some(r) if r != t.children.len() => push(format!(
                    "output symbol {d} used with {} children, rank is {r}",
                    t.children.len()
                )),
                _ => {}
            },
            Label::StateCall(q) => {
                if !self.has_state(q) {
                    push(format!("unknown state {q} in {t}"));
                }
                if t.children.len() != 1 || !matches!(t.children[0].label, Label::Var(_)) {
                    push(format!("state call {t} must have a single variable child"));
                    return;
                }
                if let Label::Var(i) = t.children[0].label {
                    let ok = if max_var == 0 {
                        i == 0
                    } else {
                        i >= 1 && i <= max_var
                    };
                    if !ok {
                        push(format!("variable x{i} out of range in {t}"));
                    }
                }
                return;
            }
            Label::Var(i) => push(format!("variable x{i} outside a state call")),
            other => push(format!("label {other} not allowed in an output term")),
        }
        for c in &t.children {
            self.check_output_tree(c, max_var, push);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax;
    use crate::trees::name;

    fn mex() -> Dtla {
        syntax::parse(include_str!("../../../corpus/mex.dtla")).unwrap()
    }

    fn mcounter() -> Dtla {
        syntax::parse(include_str!("../../../corpus/mcounter.dtla")).unwrap()
    }

    fn chain(n: usize, leaf: &str) -> Tree {
        let mut t = Tree::leaf(leaf);
        for _ in 0..n {
            t = Tree::sym("sigma", vec![t]);
        }
        t
    }

    #[test]
    fn validate_flags_bad_transducers() {
        let m = mex();
        assert!(m.validate().valid());

        let mut bad = m.clone();
        bad.rules.insert(
            RuleKey::new(name("q"), name("sigma"), vec![name("pa")]),
            Tree::call("q", 3),
        );
        assert!(!bad.validate().valid());

        let mut bad = m.clone();
        bad.axioms.insert(name("pa"), Tree::call("nosuch", 0));
        assert!(!bad.validate().valid());
    }

    #[test]
    fn delta_star_examples() {
        let m = mex();
        assert_eq!(m.delta_star(&chain(2, "b")), Some(name("pb")));
        assert_eq!(m.delta_star(&Tree::la("pa")), Some(name("pa")));
        let c = mcounter();
        assert_eq!(
            c.delta_star(&Tree::sym("sigma", vec![Tree::leaf("a"), Tree::leaf("a")])),
            Some(name("pe"))
        );
    }

    #[test]
    fn eval_examples() {
        let m = mex();
        assert_eq!(m.eval(&chain(2, "b")), Some(chain(2, "b")));
        // M(C[pb]) = sigma^n <q,pb>
        let mut ext = Tree::la("pb");
        for _ in 0..2 {
            ext = Tree::sym("sigma", vec![ext]);
        }
        assert_eq!(
            m.eval(&ext),
            Some(Tree::sym(
                "sigma",
                vec![Tree::sym("sigma", vec![Tree::pair("q", "pb")])]
            ))
        );
        assert_eq!(m.eval(&chain(1, "a")), Some(Tree::leaf("a")));
    }

    #[test]
    fn eval_state_examples() {
        let m = mex();
        let q = name("q");
        assert_eq!(m.eval_state(&q, &Tree::leaf("b")), Some(Tree::leaf("b")));
        assert_eq!(m.eval_state(&q, &chain(1, "b")), Some(chain(1, "b")));
        // rho(q) = pb, so q is undefined on trees with look-ahead pa
        assert_eq!(m.eval_state(&q, &Tree::leaf("a")), None);
    }

    #[test]
    fn trim_removes_dead_parts() {
        let mut m = mex();
        m.states.push(name("junk"));
        m.rules.insert(
            RuleKey::new(name("junk"), name("b"), vec![]),
            Tree::leaf("b"),
        );
        let t = m.trim();
        assert!(!t.has_state("junk"));
        let again = t.trim();
        assert_eq!(t, again);
    }

    #[test]
    fn trim_removes_unproductive_la_states() {
        // pdead is never produced by delta on any real tree.
        let mut m = mex();
        m.la.states.push(name("pdead"));
        m.la
            .delta
            .insert((name("sigma"), vec![name("pdead")]), name("pdead"));
        m.axioms.insert(name("pdead"), Tree::leaf("a"));
        let t = m.trim();
        assert!(!t.la.contains("pdead"));
        assert!(t.validate().valid());
    }

    #[test]
    fn trim_preserves_eval_on_small_trees() {
        let mut m = mex();
        m.states.push(name("junk"));
        m.rules.insert(
            RuleKey::new(name("junk"), name("b"), vec![]),
            Tree::leaf("b"),
        );
        let t = m.trim();
        for s in crate::gen::all_trees(&m.input, 6) {
            assert_eq!(m.eval(&s), t.eval(&s));
        }
    }

    #[test]
    fn extended_tree_substitution_generalizes() {
        // M(sbar[p <- s_p]) = M(sbar)[<q,p> <- q_M(s_p)] for extended
        // trees with any number of look-ahead leaves.
        let m = mcounter();
        let productive = m.productive_pairs();
        let reps = crate::normalize::representatives(&m).by_state;
        let sbar = Tree::sym(
            "sigma",
            vec![
                Tree::sym("sigma", vec![Tree::la("pe"), Tree::leaf("a")]),
                Tree::la("po"),
            ],
        );
        let filled = {
            let mut map = std::collections::HashMap::new();
            for (p, s) in &reps {
                map.insert(Tree::new(Label::LaLeaf(p.clone()), vec![]), s.clone());
            }
            crate::trees::substitute_subtrees(&sbar, &map)
        };
        assert_eq!(m.delta_star(&filled), m.delta_star(&sbar));
        let lhs = m.eval_with(&productive, &filled).unwrap();
        let rhs = {
            let base = m.eval_with(&productive, &sbar).unwrap();
            let mut map = std::collections::HashMap::new();
            for q in &m.states {
                for (p, s) in &reps {
                    if let Some(v) = m.eval_state(q, s) {
                        map.insert(
                            Tree::new(Label::PairLeaf(q.clone(), p.clone()), vec![]),
                            v,
                        );
                    }
                }
            }
            crate::trees::substitute_subtrees(&base, &map)
        };
        assert_eq!(lhs, rhs);

        // and with states involved, on random extended trees over mex
        let m = mex();
        let productive = m.productive_pairs();
        let reps = crate::normalize::representatives(&m).by_state;
        for base in crate::gen::all_trees(&m.input, 5) {
            // turn every leaf into a look-ahead leaf of its own state
            fn leaves_to_la(m: &Dtla, t: &Tree) -> Tree {
                if t.children.is_empty() {
                    let p = m.delta_star(t).unwrap();
                    return Tree::new(Label::LaLeaf(p), vec![]);
                }
                Tree::new(
                    t.label.clone(),
                    t.children.iter().map(|c| leaves_to_la(m, c)).collect(),
                )
            }
            let sbar = leaves_to_la(&m, &base);
            let filled = {
                let mut map = std::collections::HashMap::new();
                for (p, s) in &reps {
                    map.insert(Tree::new(Label::LaLeaf(p.clone()), vec![]), s.clone());
                }
                crate::trees::substitute_subtrees(&sbar, &map)
            };
            let lhs = m.eval_with(&productive, &filled).unwrap();
            let rhs = {
                let out = m.eval_with(&productive, &sbar).unwrap();
                let mut map = std::collections::HashMap::new();
                for q in &m.states {
                    for (p, s) in &reps {
                        if let Some(v) = m.eval_state(q, s) {
                            map.insert(
                                Tree::new(Label::PairLeaf(q.clone(), p.clone()), vec![]),
                                v,
                            );
                        }
                    }
                }
                crate::trees::substitute_subtrees(&out, &map)
            };
            assert_eq!(lhs, rhs, "on {sbar}");
        }
    }

    #[test]
    fn la_uniform_state_domains_follow_the_map() {
        // for an la-uniform transducer, q_M(s) is defined iff
        // delta(s) = rho(q), and the transducer is total
        let m = mex();
        let (ok, crate::classify::LaMapResult::Map(rho)) = crate::classify::infer_la_map(&m)
        else {
            panic!("mex is la-uniform")
        };
        assert!(ok);
        assert!(m.is_total());
        for s in crate::gen::all_trees(&m.input, 7) {
            let p = m.delta_star(&s).unwrap();
            for q in &m.states {
                assert_eq!(m.eval_state(q, &s).is_some(), rho[q] == p);
            }
        }
    }

    #[test]
    fn totality_and_completeness() {
        let m = mex();
        assert!(m.is_total());
        assert!(!m.is_complete()); // rhs(q, sigma, pa) is missing

        let mut broken = m.clone();
        broken
            .rules
            .remove(&RuleKey::new(name("q"), name("b"), vec![]));
        assert!(!broken.is_total());

        assert!(mcounter().is_total());
        assert!(mcounter().is_complete()); // no states, vacuously
    }

    #[test]
    fn exhaustive_totality_cross_check() {
        // is_total agrees with exhaustive definedness on all trees up to
        // size 8.
        let m = mex();
        let mut broken = m.clone();
        broken
            .rules
            .remove(&RuleKey::new(name("q"), name("b"), vec![]));
        for d in [&m, &broken] {
            let exhaustive = crate::gen::all_trees(&d.input, 8)
                .iter()
                .all(|s| d.eval(s).is_some());
            assert_eq!(d.is_total(), exhaustive);
        }
    }

    #[test]
    fn maxrhs_examples() {
        assert_eq!(mex().maxrhs(), 2);
        assert_eq!(mcounter().maxrhs(), 0);
        let leaves = syntax::parse(include_str!("../../../corpus/mleaves.dtla")).unwrap();
        assert_eq!(leaves.maxrhs(), 2);
    }

    #[test]
    fn substitution_law_on_small_contexts() {
        // M(C[s]) = M(C[p])[<q,p> <- q_M(s)] with p = delta(s).
        let m = mex();
        for c in crate::gen::all_contexts(&m.input, 4) {
            for s in crate::gen::all_trees(&m.input, 4) {
                let p = m.delta_star(&s).unwrap();
                let lhs = m.eval(&c.fill(&s)).unwrap();
                let with_leaf = m
                    .eval(&c.fill(&Tree::new(Label::LaLeaf(p.clone()), vec![])))
                    .unwrap();
                let mut total = std::collections::HashMap::new();
                for q in &m.states {
                    if let Some(v) = m.eval_state(q, &s) {
                        total.insert(Tree::new(Label::PairLeaf(q.clone(), p.clone()), vec![]), v);
                    }
                }
                let rhs = crate::trees::substitute_subtrees(&with_leaf, &total);
                assert_eq!(lhs, rhs, "context {} input {}", c.tree(), s);
            }
        }
    }
}
