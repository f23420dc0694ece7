//! The look-ahead removal procedure: incremental synthesis of the unique
//! equivalent canonical dtop from a canonical transducer and a difference
//! bound, with the per-rule aheadness check replacing a final equivalence
//! test.

use std::collections::HashMap;

use serde::Serialize;

use crate::classify::{infer_la_map, LaMapResult};
use crate::normalize;
use crate::transducer::{Certified, Dtla, LookaheadAutomaton, RuleKey};
use crate::trees::{lcp, name, Label, Name, NodeAddress, Tree};
use crate::{Error, Result};

/// `t[q(x_i) <- <q, rho(q)>]`.
pub fn omega(t: &Tree, rho: &HashMap<Name, Name>) -> Result<Tree> {
    match &t.label {
        Label::StateCall(q) => {
            let p = rho
                .get(q)
                .ok_or_else(|| Error::MissingRho(q.to_string()))?;
            Ok(Tree::new(Label::PairLeaf(q.clone(), p.clone()), vec![]))
        }
        _ => Ok(Tree::new(
            t.label.clone(),
            t.children
                .iter()
                .map(|c| omega(c, rho))
                .collect::<Result<_>>()?,
        )),
    }
}

/// `t[<q,p> <- _]` and `t[q(x_i) <- _]`: forgets the pending parts.
pub fn phi(t: &Tree) -> Tree {
    match &t.label {
        Label::PairLeaf(_, _) | Label::StateCall(_) => Tree::hole(),
        _ => Tree::new(t.label.clone(), t.children.iter().map(phi).collect()),
    }
}

/// How the synthesis is bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMode {
    Given(usize),
    Auto,
    Unbounded,
}

/// Why the procedure answered "no".
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum Refusal {
    /// A constructed state tuple has a component taller than the bound.
    HeightExceeded {
        tuple: Vec<String>,
        heights: Vec<usize>,
        bound: usize,
    },
    /// No input child passes the membership test at this node.
    NoChildIndex {
        state: String,
        symbol: String,
        node: String,
    },
    /// Several input children pass it.
    AmbiguousChildIndex {
        state: String,
        symbol: String,
        node: String,
        candidates: Vec<usize>,
    },
    /// The synthesized dtop fails the per-rule aheadness condition.
    PropertyAViolation {
        state: String,
        symbol: String,
        node: String,
        la: Vec<String>,
        detail: String,
    },
}

/// A synthesized dtop: a transducer with a single look-ahead state plus the
/// table mapping its generated state names to difference tuples.
#[derive(Debug, Clone)]
pub struct Dtop {
    pub dtla: Dtla,
    pub tuple_table: Vec<(Name, Vec<Tree>)>,
}

#[derive(Debug, Clone)]
pub enum RemovalOutcome {
    /// Equivalent dtop found (or the input already was one).
    Dtop {
        dtop: Box<Dtop>,
        bypassed: bool,
        bound_used: Option<usize>,
    },
    /// Definite "no" with a re-checkable witness.
    No(Refusal),
    /// Unbounded synthesis hit the tuple cap; not an answer.
    CapExceeded { tuples_constructed: usize, cap: usize },
}

struct Synth<'a> {
    m: &'a Dtla,
    rho: HashMap<Name, Name>,
    fix: HashMap<Name, Tree>,
    bound: Option<usize>,
    cap: usize,
    tuples: Vec<Vec<Tree>>,
    names: Vec<Name>,
    by_tuple: HashMap<Vec<Tree>, usize>,
    rules: Vec<(usize, Name, Tree)>, // (state idx, symbol, rhs over generated states)
    axiom: Option<Tree>,
}

enum Step<T> {
    Ok(T),
    Refuse(Refusal),
    Cap,
}

impl<'a> Synth<'a> {
    fn new(m: &'a Dtla, bound: Option<usize>, cap: usize) -> Result<Self> {
        let (ok, res) = infer_la_map(m);
        if !ok {
            return Err(Error::Precondition("synthesis needs an la-uniform input".into()));
        }
        let LaMapResult::Map(rho) = res else {
            unreachable!()
        };
        Ok(Synth {
            m,
            rho,
            fix: normalize::representatives(m).by_state,
            bound,
            cap,
            tuples: Vec::new(),
            names: Vec::new(),
            by_tuple: HashMap::new(),
            rules: Vec::new(),
            axiom: None,
        })
    }

    fn state_name(&self, i: usize) -> Name {
        self.names[i].clone()
    }

    fn fresh_state_name(&self, i: usize) -> Name {
        let mut candidate = format!("s{i}");
        let taken = |n: &str| {
            self.m.input.contains(n) || self.m.output.contains(n) || n == "any"
        };
        while taken(&candidate) {
            candidate.push('_');
        }
        name(&candidate)
    }

    fn intern(&mut self, tuple: Vec<Tree>) -> Step<usize> {
        if let Some(&i) = self.by_tuple.get(&tuple) {
            return Step::Ok(i);
        }
        if let Some(h) = self.bound {
            let heights: Vec<usize> = tuple.iter().map(Tree::height).collect();
            if heights.iter().any(|&x| x > h) {
                return Step::Refuse(Refusal::HeightExceeded {
                    tuple: tuple.iter().map(|t| t.to_string()).collect(),
                    heights,
                    bound: h,
                });
            }
        }
        if self.tuples.len() >= self.cap {
            return Step::Cap;
        }
        let i = self.tuples.len();
        self.by_tuple.insert(tuple.clone(), i);
        self.names.push(self.fresh_state_name(i));
        self.tuples.push(tuple);
        Step::Ok(i)
    }

    /// `rhs_{M,phi}(q, a, p_1..p_k)`: the tuple component for
    /// `delta(a, p...)` with every `<q',p>` leaf replaced by the matching
    /// rule right-hand side of the source transducer.
    fn rhs_m_phi(&self, state: usize, a: &Name, la: &[Name]) -> Result<Tree> {
        let p = self
            .m
            .la
            .step(a, la)
            .ok_or_else(|| Error::Precondition("incomplete look-ahead automaton".into()))?;
        let pi = self.m.la.state_index(&p).unwrap();
        let component = &self.tuples[state][pi];
        fn subst(m: &Dtla, t: &Tree, a: &Name, la: &[Name], p: &Name) -> Result<Tree> {
            match &t.label {
                Label::PairLeaf(q, p2) => {
                    if p2 != p {
                        return Err(Error::Precondition(format!(
                            "tuple component mentions <{q},{p2}> under look-ahead {p}"
                        )));
                    }
                    m.rules
                        .get(&RuleKey::new(q.clone(), a.clone(), la.to_vec()))
                        .cloned()
                        .ok_or_else(|| {
                            Error::Precondition(format!("missing rule for {q} on {a}"))
                        })
                }
                _ => Ok(Tree::new(
                    t.label.clone(),
                    t.children
                        .iter()
                        .map(|c| subst(m, c, a, la, p))
                        .collect::<Result<_>>()?,
                )),
            }
        }
        subst(self.m, component, a, la, &p)
    }

    /// Applies the fixed-tree substitution for all children except `i`,
    /// then pending-pair abstraction: `q(x_j) <- q_M(s_j)` for `j != i`,
    /// remaining calls to `<q, rho(q)>`.
    fn psi_then_omega(&self, t: &Tree, keep: usize) -> Result<Tree> {
        match &t.label {
            Label::StateCall(q) => {
                let Label::Var(i) = t.children[0].label else {
                    return Err(Error::Precondition("malformed state call".into()));
                };
                if i as usize == keep {
                    let p = self
                        .rho
                        .get(q)
                        .ok_or_else(|| Error::MissingRho(q.to_string()))?;
                    Ok(Tree::new(Label::PairLeaf(q.clone(), p.clone()), vec![]))
                } else {
                    let p = &self.rho[q];
                    let s = self
                        .fix
                        .get(p)
                        .ok_or_else(|| Error::Precondition(format!("no representative for {p}")))?;
                    self.m
                        .eval_state(q, s)
                        .ok_or_else(|| Error::Precondition(format!("{q} undefined on fix({p})")))
                }
            }
            _ => Ok(Tree::new(
                t.label.clone(),
                t.children
                    .iter()
                    .map(|c| self.psi_then_omega(c, keep))
                    .collect::<Result<_>>()?,
            )),
        }
    }

    fn construct_axiom(&mut self) -> Result<Step<()>> {
        let omegas: Vec<Tree> = self
            .m
            .la
            .states
            .iter()
            .map(|p| omega(&self.m.axioms[p], &self.rho))
            .collect::<Result<_>>()?;
        let pat = lcp(omegas.iter())?;
        let mut axiom = pat.clone();
        for v in pat.hole_addresses() {
            let tuple: Vec<Tree> = omegas
                .iter()
                .map(|t| crate::trees::subtree(t, &v).unwrap().clone())
                .collect();
            let idx = match self.intern(tuple) {
                Step::Ok(i) => i,
                Step::Refuse(r) => return Ok(Step::Refuse(r)),
                Step::Cap => return Ok(Step::Cap),
            };
            axiom = crate::trees::replace_at(
                &axiom,
                &v,
                &Tree::call_name(self.state_name(idx), 0),
            )?;
        }
        self.axiom = Some(axiom);
        Ok(Step::Ok(()))
    }

    /// The fixed look-ahead vector used in the child-index test: every
    /// other position takes the first-declared look-ahead state (and its
    /// representative tree), matching the choose-arbitrarily-but-fixed
    /// license of the construction.
    fn base_vector(&self, k: usize, at: usize, p: &Name) -> Vec<Name> {
        let first = self.m.la.states[0].clone();
        (1..=k)
            .map(|j| if j == at { p.clone() } else { first.clone() })
            .collect()
    }

    fn construct_rule(&mut self, state: usize, a: &Name, k: usize) -> Result<Step<()>> {
        let vectors = self.m.la.vectors(k);
        let mut omegas = Vec::with_capacity(vectors.len());
        for v in &vectors {
            omegas.push(omega(&self.rhs_m_phi(state, a, v)?, &self.rho)?);
        }
        let pat = lcp(omegas.iter())?;
        debug_assert!(
            pat.addresses().iter().all(|v| matches!(
                crate::trees::subtree(&pat, v).unwrap().label,
                Label::Sym(_) | Label::Hole
            )),
            "the common prefix is a plain output pattern"
        );
        let mut rhs = pat.clone();
        for v in pat.hole_addresses() {
            // which input child continues here
            let chosen = if k == 1 {
                1
            } else {
                let mut passing = Vec::new();
                for i in 1..=k {
                    let mut tests = Vec::with_capacity(self.m.la.states.len());
                    for p in &self.m.la.states.clone() {
                        let vec = self.base_vector(k, i, p);
                        let t = self.rhs_m_phi(state, a, &vec)?;
                        tests.push(self.psi_then_omega(&t, i)?);
                    }
                    let g = lcp(tests.iter())?;
                    if g.hole_addresses().contains(&v) {
                        passing.push(i);
                    }
                }
                match passing.len() {
                    1 => passing[0],
                    0 => {
                        return Ok(Step::Refuse(Refusal::NoChildIndex {
                            state: self.state_name(state).to_string(),
                            symbol: a.to_string(),
                            node: v.to_string(),
                        }))
                    }
                    _ => {
                        return Ok(Step::Refuse(Refusal::AmbiguousChildIndex {
                            state: self.state_name(state).to_string(),
                            symbol: a.to_string(),
                            node: v.to_string(),
                            candidates: passing,
                        }))
                    }
                }
            };
            // the new tuple, one component per look-ahead state at `chosen`
            let mut tuple = Vec::with_capacity(self.m.la.states.len());
            for p in &self.m.la.states.clone() {
                let vec = self.base_vector(k, chosen, p);
                let t = self.rhs_m_phi(state, a, &vec)?;
                let full = self.psi_then_omega(&t, chosen)?;
                let sub = crate::trees::subtree(&full, &v).map_err(|_| {
                    Error::Precondition(format!(
                        "test node {v} vanished for look-ahead {p}; the child-index test lied"
                    ))
                })?;
                tuple.push(sub.clone());
            }
            let idx = match self.intern(tuple) {
                Step::Ok(i) => i,
                Step::Refuse(r) => return Ok(Step::Refuse(r)),
                Step::Cap => return Ok(Step::Cap),
            };
            rhs = crate::trees::replace_at(
                &rhs,
                &v,
                &Tree::call_name(self.state_name(idx), chosen as u32),
            )?;
        }
        self.rules.push((state, a.clone(), rhs));
        Ok(Step::Ok(()))
    }

    fn run(&mut self) -> Result<Step<()>> {
        match self.construct_axiom()? {
            Step::Ok(()) => {}
            other => return Ok(other),
        }
        let symbols: Vec<(Name, usize)> =
            self.m.input.iter().map(|(n, r)| (n.clone(), r)).collect();
        let mut next = 0usize;
        while next < self.tuples.len() {
            for (a, k) in &symbols {
                match self.construct_rule(next, a, *k)? {
                    Step::Ok(()) => {}
                    other => return Ok(other),
                }
            }
            next += 1;
        }
        Ok(Step::Ok(()))
    }

    /// The aheadness condition: for every dtop rule that forwards to a
    /// state on child `i`, and every look-ahead vector, the corresponding
    /// source tree at that node must live entirely on child `i` and project
    /// to exactly the target's tuple component.
    fn verify_property_a(&self) -> Result<Option<Refusal>> {
        for (state, a, rhs) in &self.rules {
            let k = self.m.input.rank(a).unwrap_or(0);
            for v in rhs.addresses() {
                let node = crate::trees::subtree(rhs, &v).unwrap();
                let Label::StateCall(target) = &node.label else {
                    continue;
                };
                let Label::Var(i) = node.children[0].label else {
                    continue;
                };
                let target_idx = self
                    .names
                    .iter()
                    .position(|n| n == target)
                    .expect("rules only call generated states");
                for vec in self.m.la.vectors(k) {
                    let t = self.rhs_m_phi(*state, a, &vec)?;
                    let sub = match crate::trees::subtree(&t, &v) {
                        Ok(s) => s,
                        Err(_) => {
                            return Ok(Some(self.prop_a_violation(
                                *state, a, &v, &vec,
                                format!("node missing in the source tree {t}"),
                            )))
                        }
                    };
                    if sub
                        .state_calls()
                        .iter()
                        .any(|(_, j)| *j != i)
                    {
                        return Ok(Some(self.prop_a_violation(
                            *state, a, &v, &vec,
                            format!("{sub} uses a child other than x{i}"),
                        )));
                    }
                    let projected = omega(sub, &self.rho)?;
                    let pi = self
                        .m
                        .la
                        .state_index(&vec[i as usize - 1])
                        .unwrap();
                    if projected != self.tuples[target_idx][pi] {
                        return Ok(Some(self.prop_a_violation(
                            *state, a, &v, &vec,
                            format!(
                                "component mismatch: {projected} vs {}",
                                self.tuples[target_idx][pi]
                            ),
                        )));
                    }
                }
            }
        }
        Ok(None)
    }

    fn prop_a_violation(
        &self,
        state: usize,
        a: &Name,
        v: &NodeAddress,
        vec: &[Name],
        detail: String,
    ) -> Refusal {
        Refusal::PropertyAViolation {
            state: self.state_name(state).to_string(),
            symbol: a.to_string(),
            node: v.to_string(),
            la: vec.iter().map(|p| p.to_string()).collect(),
            detail,
        }
    }

    fn into_dtop(self, bound_used: Option<usize>) -> Dtop {
        let any = name("any");
        let mut delta = HashMap::new();
        for (a, k) in self.m.input.iter() {
            delta.insert((a.clone(), vec![any.clone(); k]), any.clone());
        }
        let mut rules = HashMap::new();
        for (state, a, rhs) in &self.rules {
            let k = self.m.input.rank(a).unwrap_or(0);
            rules.insert(
                RuleKey::new(self.names[*state].clone(), a.clone(), vec![any.clone(); k]),
                rhs.clone(),
            );
        }
        let mut axioms = HashMap::new();
        axioms.insert(any.clone(), self.axiom.clone().expect("axiom built"));
        let dtla = Dtla {
            input: self.m.input.clone(),
            output: self.m.output.clone(),
            states: self.names.clone(),
            la: LookaheadAutomaton::new(vec![any], delta),
            axioms,
            rules,
            certified: Certified::default(),
        };
        let _ = bound_used;
        Dtop {
            dtla,
            tuple_table: self
                .names
                .iter()
                .cloned()
                .zip(self.tuples.iter().cloned())
                .collect(),
        }
    }
}

/// Synthesis over an already canonical transducer with at least two
/// look-ahead states. Exposed for the step-by-step operations; the full
/// pipeline lives in [`remove_lookahead`].
pub fn synthesize(
    m: &Dtla,
    bound: Option<usize>,
    cap: usize,
) -> Result<RemovalOutcome> {
    if m.la.states.len() < 2 {
        return Err(Error::Precondition(
            "synthesis expects at least two look-ahead states; a single-state input already is a dtop".into(),
        ));
    }
    let mut synth = Synth::new(m, bound, cap)?;
    match synth.run()? {
        Step::Refuse(r) => return Ok(RemovalOutcome::No(r)),
        Step::Cap => {
            return Ok(RemovalOutcome::CapExceeded {
                tuples_constructed: synth.tuples.len(),
                cap,
            })
        }
        Step::Ok(()) => {}
    }
    if let Some(r) = synth.verify_property_a()? {
        return Ok(RemovalOutcome::No(r));
    }
    Ok(RemovalOutcome::Dtop {
        dtop: Box::new(synth.into_dtop(bound)),
        bypassed: false,
        bound_used: bound,
    })
}

/// Everything the decision procedure reports.
#[derive(Debug, Clone)]
pub struct RemovalReport {
    pub outcome: RemovalOutcome,
    /// The canonical transducer the synthesis ran on.
    pub canonical: Option<Dtla>,
    /// Difference bound after transport to the canonical stage.
    pub transported_bound: Option<usize>,
}

pub const DEFAULT_TUPLE_CAP: usize = 100_000;

/// Decides whether the total transducer is equivalent to a dtop and
/// constructs it if so. The pipeline trims, uniformizes and canonicalizes,
/// transporting the given bound by the number of earliest-transformation
/// steps actually performed.
pub fn remove_lookahead(m: &Dtla, mode: BoundMode, cap: usize) -> Result<RemovalReport> {
    let base = m.trim();
    if !base.is_total() {
        return Err(Error::NotTotal);
    }
    let bound = match mode {
        BoundMode::Given(h) => Some(h),
        BoundMode::Unbounded => None,
        BoundMode::Auto => match crate::bounds::class_difference_bound(&base)? {
            Ok(v) => Some(v),
            Err(why) => {
                return Err(Error::NotApplicable(format!(
                    "no automatic difference bound: {why}"
                )))
            }
        },
    };
    if base.la.states.len() == 1 {
        let tuple_table = Vec::new();
        return Ok(RemovalReport {
            outcome: RemovalOutcome::Dtop {
                dtop: Box::new(Dtop {
                    dtla: base.clone(),
                    tuple_table,
                }),
                bypassed: true,
                bound_used: bound,
            },
            canonical: Some(base),
            transported_bound: bound,
        });
    }
    let uniform = normalize::make_la_uniform(&base)?;
    let (earliest, steps) = normalize::make_earliest_counted(&uniform)?;
    let canonical = normalize::canonicalize(&earliest)?;
    let transported = bound.map(|h| h + steps);
    let outcome = synthesize(&canonical, transported, cap)?;
    Ok(RemovalReport {
        outcome,
        canonical: Some(canonical),
        transported_bound: transported,
    })
}
