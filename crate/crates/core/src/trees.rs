//! Ranked alphabets, finite ordered ranked trees with Dewey addressing,
//! patterns over the reserved leaf `_`, the prefix lattice, contexts, and
//! the substitution operators everything else is built from.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::{Error, Result};

/// Interned-ish symbol or state name. Cloning is cheap.
pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

/// Node label of a [`Tree`]. Besides plain alphabet symbols, trees flowing
/// through the toolkit carry a few reserved leaf kinds: the pattern hole,
/// look-ahead states used as rank-0 input leaves, `<state,la>` output leaves
/// standing for an absent translation, and the `x_i` variables that occur
/// (only) under state calls in rule right-hand sides and axioms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    /// Alphabet symbol; rank is governed by the alphabet.
    Sym(Name),
    /// The reserved pattern leaf, written `_`.
    Hole,
    /// A look-ahead state used as a rank-0 input symbol.
    LaLeaf(Name),
    /// Output leaf `<q,p>`: the pending translation of an absent subtree.
    PairLeaf(Name, Name),
    /// State call `q(x_i)`; rank 1, the single child is a [`Label::Var`].
    StateCall(Name),
    /// Variable `x_i` (`x0` in axioms).
    Var(u32),
}

/// A finite ordered tree. The number of children of a `Sym` node must equal
/// the symbol's rank in the governing alphabet; this is checked by
/// validation, not by construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tree {
    pub label: Label,
    pub children: Vec<Tree>,
}

impl Tree {
    pub fn new(label: Label, children: Vec<Tree>) -> Self {
        Tree { label, children }
    }

    pub fn sym(n: &str, children: Vec<Tree>) -> Self {
        Tree::new(Label::Sym(name(n)), children)
    }

    pub fn leaf(n: &str) -> Self {
        Tree::sym(n, vec![])
    }

    pub fn hole() -> Self {
        Tree::new(Label::Hole, vec![])
    }

    pub fn la(p: &str) -> Self {
        Tree::new(Label::LaLeaf(name(p)), vec![])
    }

    pub fn pair(q: &str, p: &str) -> Self {
        Tree::new(Label::PairLeaf(name(q), name(p)), vec![])
    }

    pub fn call(q: &str, i: u32) -> Self {
        Tree::new(Label::StateCall(name(q)), vec![Tree::var(i)])
    }

    pub fn call_name(q: Name, i: u32) -> Self {
        Tree::new(Label::StateCall(q), vec![Tree::var(i)])
    }

    pub fn var(i: u32) -> Self {
        Tree::new(Label::Var(i), vec![])
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Tree::size).sum::<usize>()
    }

    /// Maximal length of a node address.
    pub fn height(&self) -> usize {
        self.children
            .iter()
            .map(|c| 1 + c.height())
            .max()
            .unwrap_or(0)
    }

    pub fn is_hole(&self) -> bool {
        self.label == Label::Hole
    }

    /// True when no `_` occurs.
    pub fn is_ground_pattern(&self) -> bool {
        !self.is_hole() && self.children.iter().all(Tree::is_ground_pattern)
    }

    /// All node addresses in pre-order (root first, children left to right).
    pub fn addresses(&self) -> Vec<NodeAddress> {
        let mut out = Vec::with_capacity(self.size());
        let mut stack = vec![(self, NodeAddress::root())];
        while let Some((t, addr)) = stack.pop() {
            out.push(addr.clone());
            for (i, c) in t.children.iter().enumerate().rev() {
                stack.push((c, addr.child(i + 1)));
            }
        }
        out
    }

    /// Addresses of nodes labeled `_`, in left-to-right order.
    pub fn hole_addresses(&self) -> Vec<NodeAddress> {
        fn walk(t: &Tree, cur: &mut Vec<usize>, out: &mut Vec<NodeAddress>) {
            if t.is_hole() {
                out.push(NodeAddress(cur.clone()));
            }
            for (i, c) in t.children.iter().enumerate() {
                cur.push(i + 1);
                walk(c, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        walk(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn count_holes(&self) -> usize {
        let mut n = usize::from(self.is_hole());
        for c in &self.children {
            n += c.count_holes();
        }
        n
    }

    /// Labels of all `Var` leaves, with multiplicity.
    pub fn variables(&self) -> Vec<u32> {
        let mut out = Vec::new();
        fn walk(t: &Tree, out: &mut Vec<u32>) {
            if let Label::Var(i) = t.label {
                out.push(i);
            }
            for c in &t.children {
                walk(c, out);
            }
        }
        walk(self, &mut out);
        out
    }

    /// `(state, variable)` pairs for every state call, in left-to-right order.
    pub fn state_calls(&self) -> Vec<(Name, u32)> {
        let mut out = Vec::new();
        fn walk(t: &Tree, out: &mut Vec<(Name, u32)>) {
            if let Label::StateCall(q) = &t.label {
                if let Label::Var(i) = t.children[0].label {
                    out.push((q.clone(), i));
                }
            }
            for c in &t.children {
                walk(c, out);
            }
        }
        walk(self, &mut out);
        out
    }

    pub fn contains_label(&self, l: &Label) -> bool {
        self.label == *l || self.children.iter().any(|c| c.contains_label(l))
    }
}

/// `t/v`.
pub fn subtree<'a>(t: &'a Tree, v: &NodeAddress) -> Result<&'a Tree> {
    let mut cur = t;
    for &i in &v.0 {
        if i == 0 || i > cur.children.len() {
            return Err(Error::InvalidAddress(v.to_string()));
        }
        cur = &cur.children[i - 1];
    }
    Ok(cur)
}

/// `t[v <- t2]`.
pub fn replace_at(t: &Tree, v: &NodeAddress, t2: &Tree) -> Result<Tree> {
    fn go(t: &Tree, path: &[usize], t2: &Tree, full: &NodeAddress) -> Result<Tree> {
        match path.split_first() {
            None => Ok(t2.clone()),
            Some((&i, rest)) => {
                if i == 0 || i > t.children.len() {
                    return Err(Error::InvalidAddress(full.to_string()));
                }
                let mut children = t.children.clone();
                children[i - 1] = go(&t.children[i - 1], rest, t2, full)?;
                Ok(Tree::new(t.label.clone(), children))
            }
        }
    }
    go(t, &v.0, t2, v)
}

/// `t0[t1,...,tk]`: replaces the i-th `_` (left to right) by `parts[i]`.
pub fn fill_pattern(t0: &Tree, parts: &[Tree]) -> Result<Tree> {
    let holes = t0.count_holes();
    if holes != parts.len() {
        return Err(Error::ArityMismatch {
            holes,
            parts: parts.len(),
        });
    }
    fn go(t: &Tree, parts: &[Tree], next: &mut usize) -> Tree {
        if t.is_hole() {
            let r = parts[*next].clone();
            *next += 1;
            r
        } else {
            Tree::new(
                t.label.clone(),
                t.children.iter().map(|c| go(c, parts, next)).collect(),
            )
        }
    }
    let mut next = 0;
    Ok(go(t0, parts, &mut next))
}

/// `t1 ⊑ t2`: `t2` is obtainable from `t1` by filling holes.
pub fn is_prefix(t1: &Tree, t2: &Tree) -> bool {
    if t1.is_hole() {
        return true;
    }
    t1.label == t2.label
        && t1.children.len() == t2.children.len()
        && t1
            .children
            .iter()
            .zip(&t2.children)
            .all(|(a, b)| is_prefix(a, b))
}

/// Binary largest common prefix.
pub fn lcp2(t1: &Tree, t2: &Tree) -> Tree {
    if t1.label == t2.label && t1.children.len() == t2.children.len() {
        Tree::new(
            t1.label.clone(),
            t1.children
                .iter()
                .zip(&t2.children)
                .map(|(a, b)| lcp2(a, b))
                .collect(),
        )
    } else {
        Tree::hole()
    }
}

/// Largest common prefix of a nonempty set, folded in input order (the
/// binary meet is associative and commutative, so the order is irrelevant
/// semantically).
pub fn lcp<'a, I: IntoIterator<Item = &'a Tree>>(trees: I) -> Result<Tree> {
    let mut it = trees.into_iter();
    let first = it.next().ok_or(Error::EmptyInput)?;
    let mut acc = first.clone();
    for t in it {
        acc = lcp2(&acc, t);
    }
    Ok(acc)
}

/// `t[s <- psi(s) | s in S]`: every maximal occurrence of a key replaced by
/// its image. A key mapped to `None` is in the domain of interest but has no
/// image; matching it is an error. No key may be a proper subtree of another.
pub fn replace_subtrees(t: &Tree, mapping: &HashMap<Tree, Option<Tree>>) -> Result<Tree> {
    for a in mapping.keys() {
        for b in mapping.keys() {
            if a != b && occurs_in(a, b) {
                return Err(Error::OverlappingKeys);
            }
        }
    }
    fn go(t: &Tree, mapping: &HashMap<Tree, Option<Tree>>) -> Result<Tree> {
        if let Some(img) = mapping.get(t) {
            return match img {
                Some(r) => Ok(r.clone()),
                None => Err(Error::UndefinedImage(t.to_string())),
            };
        }
        Ok(Tree::new(
            t.label.clone(),
            t.children
                .iter()
                .map(|c| go(c, mapping))
                .collect::<Result<_>>()?,
        ))
    }
    go(t, mapping)
}

/// Total-map variant of [`replace_subtrees`] used by the internal
/// substitution operators; keys are assumed non-nested.
pub fn substitute_subtrees(t: &Tree, mapping: &HashMap<Tree, Tree>) -> Tree {
    if let Some(r) = mapping.get(t) {
        return r.clone();
    }
    Tree::new(
        t.label.clone(),
        t.children
            .iter()
            .map(|c| substitute_subtrees(c, mapping))
            .collect(),
    )
}

/// True when `a` occurs as a (proper or improper) subtree of `b`.
pub fn occurs_in(a: &Tree, b: &Tree) -> bool {
    a == b || b.children.iter().any(|c| occurs_in(a, c))
}

/// A Dewey node address: a sequence of 1-based child indices, the empty
/// sequence being the root. The external form is dotted (`1.2.1`), with the
/// root spelled `eps`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct NodeAddress(pub Vec<usize>);

impl NodeAddress {
    pub fn root() -> Self {
        NodeAddress(Vec::new())
    }

    pub fn child(&self, i: usize) -> Self {
        let mut v = self.0.clone();
        v.push(i);
        NodeAddress(v)
    }

    pub fn concat(&self, other: &NodeAddress) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        NodeAddress(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_ancestor_of(&self, other: &NodeAddress) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    pub fn is_proper_ancestor_of(&self, other: &NodeAddress) -> bool {
        other.0.len() > self.0.len() && self.is_ancestor_of(other)
    }

    pub fn parse(s: &str) -> Option<Self> {
        if s == "eps" {
            return Some(NodeAddress::root());
        }
        let mut v = Vec::new();
        for part in s.split('.') {
            let n: usize = part.parse().ok()?;
            if n == 0 {
                return None;
            }
            v.push(n);
        }
        Some(NodeAddress(v))
    }
}

impl fmt::Display for NodeAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            write!(f, "eps")
        } else {
            let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
            write!(f, "{}", parts.join("."))
        }
    }
}

/// A pattern with exactly one occurrence of `_`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Context {
    tree: Tree,
    hole: NodeAddress,
}

impl Context {
    pub fn new(tree: Tree) -> Result<Self> {
        let holes = tree.hole_addresses();
        if holes.len() != 1 {
            return Err(Error::Precondition(format!(
                "a context must contain exactly one hole, found {}",
                holes.len()
            )));
        }
        Ok(Context {
            tree,
            hole: holes.into_iter().next().unwrap(),
        })
    }

    pub fn hole_tree() -> Self {
        Context {
            tree: Tree::hole(),
            hole: NodeAddress::root(),
        }
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn hole_address(&self) -> &NodeAddress {
        &self.hole
    }

    /// `C[t]`.
    pub fn fill(&self, t: &Tree) -> Tree {
        replace_at(&self.tree, &self.hole, t).expect("hole address is valid by construction")
    }

    /// Nodes `u` with `C/u` still a context (the path from the root to `_`).
    pub fn spine(&self) -> Vec<NodeAddress> {
        (0..=self.hole.0.len())
            .map(|k| NodeAddress(self.hole.0[..k].to_vec()))
            .collect()
    }

    /// Number of nodes not counting the hole itself.
    pub fn weight(&self) -> usize {
        self.tree.size() - 1
    }
}

/// A branch: the Dewey address of a node together with the labels of its
/// proper ancestors, as `(symbol, child index)` steps from the root.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Branch(pub Vec<(Label, usize)>);

impl Branch {
    pub fn root() -> Self {
        Branch(Vec::new())
    }

    pub fn step(&self, l: Label, i: usize) -> Self {
        let mut v = self.0.clone();
        v.push((l, i));
        Branch(v)
    }

    /// Forgets the labels: `nod`.
    pub fn nod(&self) -> NodeAddress {
        NodeAddress(self.0.iter().map(|(_, i)| *i).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Branch) -> Self {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        Branch(v)
    }

    pub fn is_prefix_of(&self, other: &Branch) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "eps");
        }
        for (l, i) in &self.0 {
            write!(f, "({},{})", l, i)?;
        }
        Ok(())
    }
}

/// Branches of `t`, one per node; `nod` restricted to this set is a
/// bijection onto the node addresses of `t`.
pub fn branches(t: &Tree) -> Vec<Branch> {
    fn walk(t: &Tree, cur: &Branch, out: &mut Vec<Branch>) {
        out.push(cur.clone());
        for (i, c) in t.children.iter().enumerate() {
            walk(c, &cur.step(t.label.clone(), i + 1), out);
        }
    }
    let mut out = Vec::new();
    walk(t, &Branch::root(), &mut out);
    out
}

/// A ranked alphabet. Symbol declaration order is significant: it is the
/// canonical order used for tie-breaking and reproducible output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedAlphabet {
    symbols: Vec<(Name, usize)>,
    index: HashMap<Name, usize>,
}

impl RankedAlphabet {
    pub fn new(symbols: Vec<(Name, usize)>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, (n, _)) in symbols.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::Precondition(format!("duplicate symbol {n}")));
            }
        }
        if !symbols.iter().any(|(_, r)| *r == 0) {
            return Err(Error::Precondition(
                "a ranked alphabet needs at least one rank-0 symbol".into(),
            ));
        }
        Ok(RankedAlphabet { symbols, index })
    }

    pub fn from_strs(symbols: &[(&str, usize)]) -> Self {
        RankedAlphabet::new(symbols.iter().map(|(n, r)| (name(n), *r)).collect())
            .expect("well-formed alphabet literal")
    }

    pub fn rank(&self, n: &str) -> Option<usize> {
        self.index.get(n).map(|&i| self.symbols[i].1)
    }

    pub fn contains(&self, n: &str) -> bool {
        self.index.contains_key(n)
    }

    pub fn decl_index(&self, n: &str) -> Option<usize> {
        self.index.get(n).copied()
    }

    /// Symbols in declaration order.
    pub fn iter(&self) -> impl Iterator<Item = (&Name, usize)> {
        self.symbols.iter().map(|(n, r)| (n, *r))
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// First-declared rank-0 symbol.
    pub fn first_nullary(&self) -> Name {
        self.symbols
            .iter()
            .find(|(_, r)| *r == 0)
            .map(|(n, _)| n.clone())
            .expect("alphabet invariant: some rank-0 symbol exists")
    }

    pub fn max_rank(&self) -> usize {
        self.symbols.iter().map(|(_, r)| *r).max().unwrap_or(0)
    }

    /// Canonical tree order: size first, then root symbols by declaration
    /// index, then children lexicographically.
    pub fn cmp_canonical(&self, a: &Tree, b: &Tree) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        match a.size().cmp(&b.size()) {
            Ordering::Equal => {}
            o => return o,
        }
        let ia = self.label_key(&a.label);
        let ib = self.label_key(&b.label);
        match ia.cmp(&ib) {
            Ordering::Equal => {}
            o => return o,
        }
        for (ca, cb) in a.children.iter().zip(&b.children) {
            match self.cmp_canonical(ca, cb) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        a.children.len().cmp(&b.children.len())
    }

    fn label_key(&self, l: &Label) -> (usize, String) {
        match l {
            Label::Sym(n) => match self.decl_index(n) {
                Some(i) => (i, String::new()),
                None => (usize::MAX, n.to_string()),
            },
            other => (usize::MAX, format!("{other:?}")),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Sym(n) => write!(f, "{n}"),
            Label::Hole => write!(f, "_"),
            Label::LaLeaf(p) => write!(f, "{p}"),
            Label::PairLeaf(q, p) => write!(f, "<{q},{p}>"),
            Label::StateCall(q) => write!(f, "{q}"),
            Label::Var(i) => write!(f, "x{i}"),
        }
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label)?;
        if !self.children.is_empty() {
            write!(f, "(")?;
            for (i, c) in self.children.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig_sab() -> Tree {
        // sigma(sigma(a,b),tau(b))
        Tree::sym(
            "sigma",
            vec![
                Tree::sym("sigma", vec![Tree::leaf("a"), Tree::leaf("b")]),
                Tree::sym("tau", vec![Tree::leaf("b")]),
            ],
        )
    }

    #[test]
    fn size_and_height_match_definitions() {
        let t = sig_sab();
        assert_eq!(t.size(), 6);
        assert_eq!(t.height(), 2);
    }

    #[test]
    fn subtree_examples() {
        let t = sig_sab();
        assert_eq!(
            subtree(&t, &NodeAddress(vec![1])).unwrap(),
            &Tree::sym("sigma", vec![Tree::leaf("a"), Tree::leaf("b")])
        );
        assert_eq!(subtree(&t, &NodeAddress::root()).unwrap(), &t);
        let small = Tree::sym("sigma", vec![Tree::leaf("a"), Tree::leaf("b")]);
        assert!(matches!(
            subtree(&small, &NodeAddress(vec![3])),
            Err(Error::InvalidAddress(_))
        ));
    }

    #[test]
    fn replace_at_examples() {
        let t = Tree::sym("sigma", vec![Tree::leaf("a"), Tree::leaf("b")]);
        assert_eq!(
            replace_at(&t, &NodeAddress(vec![2]), &Tree::leaf("a")).unwrap(),
            Tree::sym("sigma", vec![Tree::leaf("a"), Tree::leaf("a")])
        );
        assert_eq!(
            replace_at(&t, &NodeAddress::root(), &Tree::leaf("b")).unwrap(),
            Tree::leaf("b")
        );
        let nested = Tree::sym("sigma", vec![t.clone(), Tree::leaf("b")]);
        assert_eq!(
            replace_at(&nested, &NodeAddress(vec![1, 2]), &Tree::leaf("a")).unwrap(),
            Tree::sym(
                "sigma",
                vec![
                    Tree::sym("sigma", vec![Tree::leaf("a"), Tree::leaf("a")]),
                    Tree::leaf("b")
                ]
            )
        );
    }

    #[test]
    fn fill_pattern_examples() {
        let pat = Tree::sym("sigma", vec![Tree::hole(), Tree::leaf("b")]);
        assert_eq!(
            fill_pattern(&pat, &[Tree::sym("tau", vec![Tree::leaf("a")])]).unwrap(),
            Tree::sym(
                "sigma",
                vec![Tree::sym("tau", vec![Tree::leaf("a")]), Tree::leaf("b")]
            )
        );
        let t = sig_sab();
        assert_eq!(fill_pattern(&Tree::hole(), std::slice::from_ref(&t)).unwrap(), t);
        let two = Tree::sym("sigma", vec![Tree::hole(), Tree::hole()]);
        assert!(matches!(
            fill_pattern(&two, &[Tree::leaf("a")]),
            Err(Error::ArityMismatch { holes: 2, parts: 1 })
        ));
    }

    #[test]
    fn is_prefix_examples() {
        let t = sig_sab();
        assert!(is_prefix(&Tree::hole(), &t));
        assert!(is_prefix(
            &Tree::sym("sigma", vec![Tree::hole(), Tree::leaf("b")]),
            &Tree::sym(
                "sigma",
                vec![Tree::sym("tau", vec![Tree::leaf("a")]), Tree::leaf("b")]
            )
        ));
        assert!(!is_prefix(
            &Tree::sym("sigma", vec![Tree::leaf("a"), Tree::hole()]),
            &Tree::sym("sigma", vec![Tree::leaf("b"), Tree::hole()])
        ));
    }

    #[test]
    fn lcp_examples() {
        // sigma(tau(a),b) ⊓ sigma(b,b) = sigma(_,b)
        let t1 = Tree::sym(
            "sigma",
            vec![Tree::sym("tau", vec![Tree::leaf("a")]), Tree::leaf("b")],
        );
        let t2 = Tree::sym("sigma", vec![Tree::leaf("b"), Tree::leaf("b")]);
        assert_eq!(
            lcp([&t1, &t2]).unwrap(),
            Tree::sym("sigma", vec![Tree::hole(), Tree::leaf("b")])
        );
        assert_eq!(lcp([&t1]).unwrap(), t1);
        assert_eq!(
            lcp([&Tree::leaf("a"), &Tree::sym("sigma", vec![Tree::leaf("b")])]).unwrap(),
            Tree::hole()
        );
        assert!(matches!(lcp(std::iter::empty::<&Tree>()), Err(Error::EmptyInput)));
    }

    #[test]
    fn replace_subtrees_examples() {
        let t = Tree::sym("sigma", vec![Tree::leaf("a"), Tree::leaf("b")]);
        let mut m = HashMap::new();
        m.insert(Tree::leaf("a"), Some(Tree::leaf("b")));
        assert_eq!(
            replace_subtrees(&t, &m).unwrap(),
            Tree::sym("sigma", vec![Tree::leaf("b"), Tree::leaf("b")])
        );
        assert_eq!(replace_subtrees(&t, &HashMap::new()).unwrap(), t);
        let mut overlapping = HashMap::new();
        overlapping.insert(Tree::leaf("a"), Some(Tree::leaf("b")));
        overlapping.insert(t.clone(), Some(Tree::leaf("a")));
        assert!(matches!(
            replace_subtrees(&t, &overlapping),
            Err(Error::OverlappingKeys)
        ));
        let mut undef = HashMap::new();
        undef.insert(Tree::leaf("a"), None);
        assert!(matches!(
            replace_subtrees(&t, &undef),
            Err(Error::UndefinedImage(_))
        ));
    }

    #[test]
    fn branches_and_nod() {
        // nod((a,2)(b,1)(b,3)) = 2.1.3
        let b = Branch(vec![
            (Label::Sym(name("a")), 2),
            (Label::Sym(name("b")), 1),
            (Label::Sym(name("b")), 3),
        ]);
        assert_eq!(b.nod(), NodeAddress(vec![2, 1, 3]));
        assert_eq!(branches(&Tree::leaf("a")), vec![Branch::root()]);
        assert_eq!(Branch::root().nod(), NodeAddress::root());

        let t = sig_sab();
        let mut from_branches: Vec<NodeAddress> =
            branches(&t).iter().map(Branch::nod).collect();
        let mut addrs = t.addresses();
        from_branches.sort();
        addrs.sort();
        assert_eq!(from_branches, addrs);
    }

    #[test]
    fn context_basics() {
        let c = Context::new(Tree::sym("sigma", vec![Tree::hole(), Tree::leaf("b")])).unwrap();
        assert_eq!(c.hole_address(), &NodeAddress(vec![1]));
        assert_eq!(
            c.fill(&Tree::leaf("a")),
            Tree::sym("sigma", vec![Tree::leaf("a"), Tree::leaf("b")])
        );
        assert_eq!(c.spine().len(), 2);
        assert!(Context::new(Tree::leaf("a")).is_err());
        assert!(Context::new(Tree::sym("sigma", vec![Tree::hole(), Tree::hole()])).is_err());
    }

    #[test]
    fn address_display_roundtrip() {
        assert_eq!(NodeAddress::root().to_string(), "eps");
        assert_eq!(NodeAddress(vec![1, 2, 1]).to_string(), "1.2.1");
        assert_eq!(NodeAddress::parse("eps"), Some(NodeAddress::root()));
        assert_eq!(NodeAddress::parse("1.2.1"), Some(NodeAddress(vec![1, 2, 1])));
        assert_eq!(NodeAddress::parse("0"), None);
    }
}
