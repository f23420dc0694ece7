//! Small deterministic graph helpers: Tarjan SCCs over index graphs and
//! Bellman-Ford extraction of a nonzero-weight cycle. Kept in-tree so that
//! witnesses come out in a fixed order with integer weights.

/// Strongly connected components of the graph given by `succ`, in reverse
/// topological order (every edge leaves a component with a higher or equal
/// index in the returned list). Node ids are `0..n`.
pub fn tarjan_scc(n: usize, succ: &dyn Fn(usize) -> Vec<usize>) -> Vec<Vec<usize>> {
    struct St<'a> {
        succ: &'a dyn Fn(usize) -> Vec<usize>,
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        out: Vec<Vec<usize>>,
    }
    // Iterative, to survive deep call graphs.
    fn visit(st: &mut St, root: usize) {
        let mut work: Vec<(usize, usize, Vec<usize>)> = vec![(root, 0, (st.succ)(root))];
        st.index[root] = Some(st.next);
        st.low[root] = st.next;
        st.next += 1;
        st.stack.push(root);
        st.on_stack[root] = true;
        while let Some((v, i, succs)) = work.last_mut() {
            if *i < succs.len() {
                let w = succs[*i];
                *i += 1;
                let v = *v;
                if st.index[w].is_none() {
                    st.index[w] = Some(st.next);
                    st.low[w] = st.next;
                    st.next += 1;
                    st.stack.push(w);
                    st.on_stack[w] = true;
                    work.push((w, 0, (st.succ)(w)));
                } else if st.on_stack[w] {
                    st.low[v] = st.low[v].min(st.index[w].unwrap());
                }
            } else {
                let v = *v;
                work.pop();
                if st.low[v] == st.index[v].unwrap() {
                    let mut comp = Vec::new();
                    loop {
                        let w = st.stack.pop().unwrap();
                        st.on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    st.out.push(comp);
                }
                if let Some((p, _, _)) = work.last() {
                    let p = *p;
                    st.low[p] = st.low[p].min(st.low[v]);
                }
            }
        }
    }
    let mut st = St {
        succ,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for v in 0..n {
        if st.index[v].is_none() {
            visit(&mut st, v);
        }
    }
    st.out
}

/// Looks for a cycle whose total weight is nonzero among the edges
/// `(src, dst, weight)`. Returns the edge ids of one such cycle. Self-loops
/// are reported first, in edge order; otherwise Bellman-Ford negative-cycle
/// detection is run on the weights and on their negation.
pub fn find_nonzero_cycle(n: usize, edges: &[(usize, usize, i64)]) -> Option<Vec<usize>> {
    for (id, &(s, d, w)) in edges.iter().enumerate() {
        if s == d && w != 0 {
            return Some(vec![id]);
        }
    }
    find_negative_cycle(n, edges, 1).or_else(|| find_negative_cycle(n, edges, -1))
}

fn find_negative_cycle(n: usize, edges: &[(usize, usize, i64)], sign: i64) -> Option<Vec<usize>> {
    if n == 0 {
        return None;
    }
    let mut dist = vec![0i64; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut touched = None;
    for _ in 0..n {
        touched = None;
        for (id, &(s, d, w)) in edges.iter().enumerate() {
            let w = sign * w;
            if dist[s] + w < dist[d] {
                dist[d] = dist[s] + w;
                pred[d] = Some(id);
                touched = Some(d);
            }
        }
        touched?;
    }
    // A relaxation in round n means some node on the predecessor chain lies
    // on a negative cycle; walk back n steps to land inside it.
    let mut v = touched?;
    for _ in 0..n {
        v = edges[pred[v]?].0;
    }
    let start = v;
    let mut cycle = Vec::new();
    let mut cur = start;
    loop {
        let e = pred[cur]?;
        cycle.push(e);
        cur = edges[e].0;
        if cur == start {
            break;
        }
    }
    cycle.reverse();
    Some(cycle)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scc_groups_cycles() {
        // 0 -> 1 -> 2 -> 0, 2 -> 3
        let succ = |v: usize| -> Vec<usize> {
            match v {
                0 => vec![1],
                1 => vec![2],
                2 => vec![0, 3],
                _ => vec![],
            }
        };
        let comps = tarjan_scc(4, &succ);
        assert!(comps.contains(&vec![0, 1, 2]));
        assert!(comps.contains(&vec![3]));
        // reverse topological: {3} comes before {0,1,2}
        assert_eq!(comps[0], vec![3]);
    }

    #[test]
    fn nonzero_cycle_detection() {
        // zero-weight 2-cycle: none found
        let edges = vec![(0, 1, 2), (1, 0, -2)];
        assert_eq!(find_nonzero_cycle(2, &edges), None);
        // positive 2-cycle
        let edges = vec![(0, 1, 2), (1, 0, -1)];
        let c = find_nonzero_cycle(2, &edges).unwrap();
        let total: i64 = c.iter().map(|&e| edges[e].2).sum();
        assert_ne!(total, 0);
        // nonzero self-loop wins
        let edges = vec![(0, 1, 0), (1, 1, -1)];
        assert_eq!(find_nonzero_cycle(2, &edges), Some(vec![1]));
    }
}
