//! Exhaustive enumeration of small trees and contexts, plus a seeded
//! generator of random total transducers. Test support, but also handy for
//! exploring a transducer from the CLI or Python.

use rand::prelude::IndexedRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

use crate::transducer::{Certified, Dtla, LookaheadAutomaton, RuleKey};
use crate::trees::{name, Context, Name, RankedAlphabet, Tree};

/// All trees over the alphabet with exactly `size` nodes, in canonical
/// order (symbols by declaration, children lexicographically).
pub fn trees_of_size(alphabet: &RankedAlphabet, size: usize) -> Vec<Tree> {
    let mut memo: Vec<Vec<Tree>> = vec![Vec::new(); size + 1];
    for n in 1..=size {
        let mut out = Vec::new();
        for (a, k) in alphabet.iter() {
            if k == 0 {
                if n == 1 {
                    out.push(Tree::sym(a, vec![]));
                }
                continue;
            }
            if n < 1 + k {
                continue;
            }
            for split in compositions(n - 1, k) {
                let mut combos: Vec<Vec<Tree>> = vec![Vec::new()];
                for &part in &split {
                    let mut next = Vec::new();
                    for c in &combos {
                        for t in &memo[part] {
                            let mut c2 = c.clone();
                            c2.push(t.clone());
                            next.push(c2);
                        }
                    }
                    combos = next;
                }
                for children in combos {
                    out.push(Tree::new(crate::trees::Label::Sym(a.clone()), children));
                }
            }
        }
        memo[n] = out;
    }
    memo.pop().unwrap_or_default()
}

/// All trees with at most `max_size` nodes, ordered by size.
pub fn all_trees(alphabet: &RankedAlphabet, max_size: usize) -> Vec<Tree> {
    (1..=max_size)
        .flat_map(|n| trees_of_size(alphabet, n))
        .collect()
}

/// All contexts with at most `max_nodes` nodes besides the hole, ordered by
/// that count and then canonically.
pub fn all_contexts(alphabet: &RankedAlphabet, max_nodes: usize) -> Vec<Context> {
    let mut out = vec![Context::hole_tree()];
    let mut by_size: Vec<Vec<Tree>> = vec![Vec::new(); max_nodes + 1];
    for (n, slot) in by_size.iter_mut().enumerate().skip(1) {
        *slot = trees_of_size(alphabet, n);
    }
    // contexts_with[m] = context trees with exactly m non-hole nodes
    let mut ctx_by: Vec<Vec<Tree>> = vec![vec![Tree::hole()]];
    for m in 1..=max_nodes {
        let mut layer = Vec::new();
        for (a, k) in alphabet.iter() {
            if k == 0 || m < k {
                continue;
            }
            for hole_pos in 0..k {
                // remaining m-1 non-hole nodes split over k children; the
                // hole child takes a context, the others take full trees.
                for split in compositions_zero(m - 1, k) {
                    if (0..k).any(|i| i != hole_pos && split[i] == 0) {
                        continue;
                    }
                    let mut combos: Vec<Vec<Tree>> = vec![Vec::new()];
                    for (i, &part) in split.iter().enumerate() {
                        let pool: &[Tree] = if i == hole_pos {
                            &ctx_by[part]
                        } else {
                            &by_size[part]
                        };
                        let mut next = Vec::new();
                        for c in &combos {
                            for t in pool {
                                let mut c2 = c.clone();
                                c2.push(t.clone());
                                next.push(c2);
                            }
                        }
                        combos = next;
                    }
                    for children in combos {
                        layer.push(Tree::new(crate::trees::Label::Sym(a.clone()), children));
                    }
                }
            }
        }
        for t in &layer {
            out.push(Context::new(t.clone()).expect("exactly one hole by construction"));
        }
        ctx_by.push(layer);
    }
    out
}

/// Compositions of `total` into `parts` strictly positive summands.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 1..=total.saturating_sub(parts - 1) {
        for rest in compositions(total - first, parts - 1) {
            let mut v = Vec::with_capacity(parts);
            v.push(first);
            v.extend(rest);
            out.push(v);
        }
    }
    out
}

/// Compositions of `total` into `parts` summands, zeros allowed.
fn compositions_zero(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for rest in compositions_zero(total - first, parts - 1) {
            let mut v = Vec::with_capacity(parts);
            v.push(first);
            v.extend(rest);
            out.push(v);
        }
    }
    out
}

/// A random tree over the alphabet, roughly `target` nodes.
pub fn random_tree(alphabet: &RankedAlphabet, target: usize, rng: &mut ChaCha8Rng) -> Tree {
    let syms: Vec<(Name, usize)> = alphabet.iter().map(|(n, r)| (n.clone(), r)).collect();
    let leaves: Vec<Name> = syms
        .iter()
        .filter(|(_, r)| *r == 0)
        .map(|(n, _)| n.clone())
        .collect();
    fn go(
        syms: &[(Name, usize)],
        leaves: &[Name],
        budget: usize,
        rng: &mut ChaCha8Rng,
    ) -> (Tree, usize) {
        if budget <= 1 {
            let l = leaves.choose(rng).unwrap().clone();
            return (Tree::new(crate::trees::Label::Sym(l), vec![]), 1);
        }
        let (a, k) = syms.choose(rng).unwrap().clone();
        if k == 0 {
            return (Tree::new(crate::trees::Label::Sym(a), vec![]), 1);
        }
        let mut used = 1;
        let mut children = Vec::with_capacity(k);
        for _ in 0..k {
            let (c, n) = go(syms, leaves, budget.saturating_sub(used) / k + 1, rng);
            used += n;
            children.push(c);
        }
        (Tree::new(crate::trees::Label::Sym(a), children), used)
    }
    go(&syms, &leaves, target, rng).0
}

/// Shape of the random transducers produced by [`random_total_dtla`].
#[derive(Debug, Clone)]
pub struct GenConfig {
    pub input: RankedAlphabet,
    pub output: RankedAlphabet,
    pub num_states: usize,
    pub num_la_states: usize,
    /// Maximal right-hand-side and axiom height.
    pub max_rhs_height: usize,
    /// Only produce linear nonerasing rules (hence ultralinear b-erasing).
    pub linear_nonerasing: bool,
    /// Probability of dropping a rule afterwards (kept only if still total).
    pub drop_rule_prob: f64,
}

impl GenConfig {
    pub fn small() -> Self {
        GenConfig {
            input: RankedAlphabet::from_strs(&[("sigma", 2), ("a", 0), ("b", 0)]),
            output: RankedAlphabet::from_strs(&[("f", 2), ("g", 1), ("c", 0), ("d", 0)]),
            num_states: 2,
            num_la_states: 2,
            max_rhs_height: 2,
            linear_nonerasing: false,
            drop_rule_prob: 0.15,
        }
    }
}

/// Generates a random trimmed total dtla. Rules are first generated
/// complete (hence total); a few are then dropped while totality holds.
pub fn random_total_dtla(cfg: &GenConfig, seed: u64) -> Dtla {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states: Vec<Name> = (0..cfg.num_states).map(|i| name(&format!("q{i}"))).collect();
    let la_states: Vec<Name> = (0..cfg.num_la_states)
        .map(|i| name(&format!("p{i}")))
        .collect();

    let mut delta = HashMap::new();
    let la = loop {
        delta.clear();
        for (a, k) in cfg.input.iter() {
            for v in vectors(&la_states, k) {
                let p = la_states.choose(&mut rng).unwrap().clone();
                delta.insert((a.clone(), v), p);
            }
        }
        let la = LookaheadAutomaton::new(la_states.clone(), delta.clone());
        // keep all la-states realizable so trimming does not shrink P
        if la.nonempty_states(&cfg.input).len() == la_states.len() {
            break la;
        }
    };

    let mut axioms = HashMap::new();
    for p in &la_states {
        axioms.insert(
            p.clone(),
            random_rhs(cfg, &states, 0, true, cfg.max_rhs_height, &mut rng),
        );
    }
    let mut rules = HashMap::new();
    for q in &states {
        for (a, k) in cfg.input.iter() {
            for v in vectors(&la_states, k) {
                let rhs = random_rhs(cfg, &states, k as u32, false, cfg.max_rhs_height, &mut rng);
                rules.insert(RuleKey::new(q.clone(), a.clone(), v), rhs);
            }
        }
    }
    let mut m = Dtla {
        input: cfg.input.clone(),
        output: cfg.output.clone(),
        states,
        la,
        axioms,
        rules,
        certified: Certified::default(),
    };
    if cfg.drop_rule_prob > 0.0 {
        let keys = m.rule_keys_sorted();
        for key in keys {
            if rng.random_bool(cfg.drop_rule_prob) {
                let saved = m.rules.remove(&key);
                let t = m.trim();
                if !t.is_total() {
                    m.rules.insert(key, saved.unwrap());
                }
            }
        }
    }
    let m = m.trim();
    debug_assert!(m.validate().valid());
    m
}

fn vectors(states: &[Name], k: usize) -> Vec<Vec<Name>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::new();
        for v in &out {
            for p in states {
                let mut w = v.clone();
                w.push(p.clone());
                next.push(w);
            }
        }
        out = next;
    }
    out
}

fn random_rhs(
    cfg: &GenConfig,
    states: &[Name],
    arity: u32,
    axiom: bool,
    height: usize,
    rng: &mut ChaCha8Rng,
) -> Tree {
    // most axioms should reach a state, or trimming leaves nothing behind
    if axiom && !states.is_empty() && rng.random_bool(0.6) {
        return Tree::call_name(states.choose(rng).unwrap().clone(), 0);
    }
    // variables permitted here: x0 in axioms, x1..xk in rules
    let vars: Vec<u32> = if axiom { vec![0] } else { (1..=arity).collect() };
    if cfg.linear_nonerasing {
        let mut vars = vars;
        return linear_body(cfg, states, &mut vars, height.max(1), rng, true);
    }
    random_body(cfg, states, &vars, height, rng)
}

fn random_body(
    cfg: &GenConfig,
    states: &[Name],
    vars: &[u32],
    height: usize,
    rng: &mut ChaCha8Rng,
) -> Tree {
    // a state call has height 1 (its variable is a node), so it needs budget
    let can_call = !states.is_empty() && !vars.is_empty() && height >= 1;
    let call_prob = if height == 1 { 0.4 } else { 0.25 };
    if can_call && rng.random_bool(call_prob) {
        let q = states.choose(rng).unwrap().clone();
        let i = *vars.choose(rng).unwrap();
        return Tree::call_name(q, i);
    }
    if height == 0 || rng.random_bool(0.2) {
        let leaves: Vec<Name> = cfg
            .output
            .iter()
            .filter(|(_, r)| *r == 0)
            .map(|(n, _)| n.clone())
            .collect();
        return Tree::new(
            crate::trees::Label::Sym(leaves.choose(rng).unwrap().clone()),
            vec![],
        );
    }
    let syms: Vec<(Name, usize)> = cfg.output.iter().map(|(n, r)| (n.clone(), r)).collect();
    let (d, r) = syms.choose(rng).unwrap().clone();
    let children = (0..r)
        .map(|_| random_body(cfg, states, vars, height - 1, rng))
        .collect();
    Tree::new(crate::trees::Label::Sym(d), children)
}

fn linear_body(
    cfg: &GenConfig,
    states: &[Name],
    vars: &mut Vec<u32>,
    height: usize,
    rng: &mut ChaCha8Rng,
    must_output: bool,
) -> Tree {
    if height == 0 || (!must_output && rng.random_bool(0.35)) {
        let can_call = !states.is_empty() && !vars.is_empty() && height >= 1;
        if !must_output && can_call && rng.random_bool(0.6) {
            let idx = rng.random_range(0..vars.len());
            let i = vars.remove(idx);
            let q = states.choose(rng).unwrap().clone();
            return Tree::call_name(q, i);
        }
        let leaves: Vec<Name> = cfg
            .output
            .iter()
            .filter(|(_, r)| *r == 0)
            .map(|(n, _)| n.clone())
            .collect();
        return Tree::new(
            crate::trees::Label::Sym(leaves.choose(rng).unwrap().clone()),
            vec![],
        );
    }
    let syms: Vec<(Name, usize)> = cfg.output.iter().map(|(n, r)| (n.clone(), r)).collect();
    let (d, r) = syms.choose(rng).unwrap().clone();
    let children = (0..r)
        .map(|_| linear_body(cfg, states, vars, height - 1, rng, false))
        .collect();
    Tree::new(crate::trees::Label::Sym(d), children)
}
