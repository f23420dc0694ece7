//! Brute-force ground truth for difference trees, difference nodes,
//! difference tuples and `pref`, by exhaustive context enumeration; plus
//! link and origin tracking from the output back into the input.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::classify::{infer_la_map, LaMapResult};
use crate::gen::all_contexts;
use crate::transducer::Dtla;
use crate::trees::{lcp, Context, Label, Name, NodeAddress, Tree};
use crate::{Error, Result};

/// `pref(M,C)`: the largest common prefix of the outputs on `C[p]` over all
/// look-ahead states `p`, with `<q,p>` leaves treated as ordinary labels.
pub fn pref(m: &Dtla, c: &Context) -> Result<Tree> {
    let productive = m.productive_pairs();
    let mut outs = Vec::with_capacity(m.la.states.len());
    for p in &m.la.states {
        let s = c.fill(&Tree::new(Label::LaLeaf(p.clone()), vec![]));
        let t = m.eval_with(&productive, &s).ok_or(Error::NotTotal)?;
        outs.push(t);
    }
    lcp(outs.iter())
}

/// Difference nodes of `M(C[p])` and `M(C[p'])`: the hole positions of
/// their largest common prefix. Empty when `p = p'`.
pub fn difference_nodes(m: &Dtla, c: &Context, p: &Name, p2: &Name) -> Result<Vec<NodeAddress>> {
    let productive = m.productive_pairs();
    let t1 = m
        .eval_with(&productive, &c.fill(&Tree::new(Label::LaLeaf(p.clone()), vec![])))
        .ok_or(Error::NotTotal)?;
    let t2 = m
        .eval_with(&productive, &c.fill(&Tree::new(Label::LaLeaf(p2.clone()), vec![])))
        .ok_or(Error::NotTotal)?;
    Ok(crate::trees::lcp2(&t1, &t2).hole_addresses())
}

/// What the exhaustive exploration found within its budget.
#[derive(Debug, Clone, Serialize)]
pub struct DiffReport {
    /// Maximal number of non-hole context nodes enumerated.
    pub budget: usize,
    /// Observed difference tuples, one entry per look-ahead state, in the
    /// fixed declaration order.
    pub tuples: Vec<Vec<String>>,
    /// Observed difference trees.
    pub trees: Vec<String>,
    /// Maximal height over the observed difference trees: a lower bound for
    /// the true maximum, never a claim of finiteness.
    #[serde(rename = "maxHeight")]
    pub max_height: usize,
    /// Whether every context within the budget was enumerated.
    pub exhausted: bool,
}

/// The same data in tree form, for programmatic use.
#[derive(Debug, Clone)]
pub struct DiffObservation {
    pub budget: usize,
    pub tuples: BTreeSet<Vec<Tree>>,
    pub trees: BTreeSet<Tree>,
    pub max_height: usize,
    pub exhausted: bool,
}

impl DiffObservation {
    pub fn report(&self) -> DiffReport {
        DiffReport {
            budget: self.budget,
            tuples: self
                .tuples
                .iter()
                .map(|t| t.iter().map(|x| x.to_string()).collect())
                .collect(),
            trees: self.trees.iter().map(|t| t.to_string()).collect(),
            max_height: self.max_height,
            exhausted: self.exhausted,
        }
    }
}

/// Enumerates all contexts with at most `max_context_nodes` non-hole nodes
/// (by size, then canonically) and collects every difference tree and
/// difference tuple they exhibit.
pub fn enumerate_diffs(m: &Dtla, max_context_nodes: usize) -> Result<DiffObservation> {
    enumerate_diffs_capped(m, max_context_nodes, usize::MAX)
}

/// Like [`enumerate_diffs`] with a cap on the number of contexts; when the
/// cap is hit the report is marked not exhausted.
pub fn enumerate_diffs_capped(
    m: &Dtla,
    max_context_nodes: usize,
    max_contexts: usize,
) -> Result<DiffObservation> {
    if max_context_nodes == 0 {
        return Err(Error::BudgetZero);
    }
    let productive = m.productive_pairs();
    let mut tuples: BTreeSet<Vec<Tree>> = BTreeSet::new();
    let mut trees: BTreeSet<Tree> = BTreeSet::new();
    let contexts = all_contexts(&m.input, max_context_nodes);
    let exhausted = contexts.len() <= max_contexts;
    for c in contexts.into_iter().take(max_contexts) {
        let mut outs = Vec::with_capacity(m.la.states.len());
        for p in &m.la.states {
            let s = c.fill(&Tree::new(Label::LaLeaf(p.clone()), vec![]));
            outs.push(m.eval_with(&productive, &s).ok_or(Error::NotTotal)?);
        }
        // tuples: hole positions of the n-ary prefix
        let g = lcp(outs.iter())?;
        for v in g.hole_addresses() {
            let tuple: Vec<Tree> = outs
                .iter()
                .map(|t| crate::trees::subtree(t, &v).expect("hole of prefix").clone())
                .collect();
            tuples.insert(tuple);
        }
        // difference trees: hole positions of every pairwise prefix
        for i in 0..outs.len() {
            for j in i + 1..outs.len() {
                let g2 = crate::trees::lcp2(&outs[i], &outs[j]);
                for v in g2.hole_addresses() {
                    trees.insert(crate::trees::subtree(&outs[i], &v).unwrap().clone());
                    trees.insert(crate::trees::subtree(&outs[j], &v).unwrap().clone());
                }
            }
        }
    }
    let max_height = trees.iter().map(Tree::height).max().unwrap_or(0);
    Ok(DiffObservation {
        budget: max_context_nodes,
        tuples,
        trees,
        max_height,
        exhausted,
    })
}

/// A link into the input: the state arrived in, the input node, and either
/// the pending marker `#` or the address inside the applied right-hand side
/// that produced the output node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Link {
    pub state: Name,
    pub input_node: NodeAddress,
    pub tag: LinkTag,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LinkTag {
    Pending, // written #
    At(NodeAddress),
}

impl std::fmt::Display for Link {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.tag {
            LinkTag::Pending => write!(f, "({},{},#)", self.state, self.input_node),
            LinkTag::At(z) => write!(f, "({},{},{})", self.state, self.input_node, z),
        }
    }
}

/// The unique rule-address-tagged link of an output node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Origin {
    pub state: String,
    pub input_node: String,
    pub rhs_node: String,
}

fn require_initialized_uniform(m: &Dtla) -> Result<HashMap<Name, Name>> {
    let initialized = m.la.states.iter().all(|p| {
        m.axioms
            .get(p)
            .map(|t| {
                matches!(&t.label, Label::StateCall(_))
                    && t.children.len() == 1
                    && t.children[0].label == Label::Var(0)
            })
            .unwrap_or(false)
    });
    if !initialized {
        return Err(Error::Precondition(
            "link tracking needs an initialized transducer (normalize --to initialized)".into(),
        ));
    }
    match infer_la_map(m) {
        (true, LaMapResult::Map(rho)) => Ok(rho),
        _ => Err(Error::Precondition(
            "link tracking needs an la-uniform transducer (normalize --to uniform)".into(),
        )),
    }
}

/// The least link sets closed under the three formation clauses, computed
/// by worklist descent over the applied right-hand sides.
pub fn links(m: &Dtla, s: &Tree) -> Result<BTreeMap<NodeAddress, BTreeSet<Link>>> {
    require_initialized_uniform(m)?;
    let p = m
        .delta_star(s)
        .ok_or_else(|| Error::Precondition("malformed input tree".into()))?;
    let axiom = &m.axioms[&p];
    let Label::StateCall(q0) = &axiom.label else {
        unreachable!("initialized was checked")
    };

    let mut out: BTreeMap<NodeAddress, BTreeSet<Link>> = BTreeMap::new();
    let mut work: Vec<(Name, NodeAddress, NodeAddress)> = Vec::new(); // (q, u, v)
    let add = |out: &mut BTreeMap<NodeAddress, BTreeSet<Link>>,
                   work: &mut Vec<(Name, NodeAddress, NodeAddress)>,
                   q: Name,
                   u: NodeAddress,
                   v: NodeAddress| {
        let link = Link {
            state: q.clone(),
            input_node: u.clone(),
            tag: LinkTag::Pending,
        };
        if out.entry(v.clone()).or_default().insert(link) {
            work.push((q, u, v));
        }
    };
    add(&mut out, &mut work, q0.clone(), NodeAddress::root(), NodeAddress::root());

    while let Some((q, u, v)) = work.pop() {
        // the rule applied at u in state q
        let su = crate::trees::subtree(s, &u).expect("worklist addresses are valid");
        let rhs: Tree = match &su.label {
            Label::LaLeaf(p) => Tree::new(Label::PairLeaf(q.clone(), p.clone()), vec![]),
            Label::Sym(a) => {
                let mut la = Vec::with_capacity(su.children.len());
                for c in &su.children {
                    la.push(
                        m.delta_star(c)
                            .ok_or_else(|| Error::Precondition("malformed input".into()))?,
                    );
                }
                match m
                    .rules
                    .get(&crate::transducer::RuleKey::new(q.clone(), a.clone(), la))
                {
                    Some(r) => r.clone(),
                    None => continue, // undefined here; no links below
                }
            }
            _ => continue,
        };
        for z in rhs.addresses() {
            let node = crate::trees::subtree(&rhs, &z).unwrap();
            match &node.label {
                Label::Sym(_) | Label::PairLeaf(_, _) => {
                    out.entry(v.concat(&z)).or_default().insert(Link {
                        state: q.clone(),
                        input_node: u.clone(),
                        tag: LinkTag::At(z.clone()),
                    });
                }
                Label::StateCall(q2) => {
                    if let Label::Var(i) = node.children[0].label {
                        add(
                            &mut out,
                            &mut work,
                            q2.clone(),
                            u.child(i as usize),
                            v.concat(&z),
                        );
                    }
                }
                _ => {}
            }
        }
    }
    Ok(out)
}

/// `orig_s(v)`: the unique rhs-address-tagged link at an output node.
pub fn origin(m: &Dtla, s: &Tree, v: &NodeAddress) -> Result<(Name, NodeAddress, NodeAddress)> {
    let lk = links(m, s)?;
    let at = lk
        .get(v)
        .ok_or_else(|| Error::NodeNotInOutput(v.to_string()))?;
    let mut numeric = at.iter().filter_map(|l| match &l.tag {
        LinkTag::At(z) => Some((l.state.clone(), l.input_node.clone(), z.clone())),
        LinkTag::Pending => None,
    });
    let first = numeric
        .next()
        .ok_or_else(|| Error::NodeNotInOutput(v.to_string()))?;
    debug_assert!(numeric.next().is_none(), "origin is unique per output node");
    Ok(first)
}
