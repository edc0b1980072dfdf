//! Maximum bipartite matching (Hopcroft–Karp).
//!
//! Vertices are visited in index order and adjacency lists in stored order,
//! so the matching returned is a deterministic function of the input.

use std::collections::VecDeque;

const NIL: usize = usize::MAX;

/// Bipartite graph with `left` vertices `0..left` and `right` vertices
/// `0..right`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Bipartite {
    pub right: usize,
    pub adj: Vec<Vec<usize>>,
}

impl Bipartite {
    pub fn new(left: usize, right: usize) -> Self {
        Bipartite { right, adj: vec![Vec::new(); left] }
    }

    pub fn left(&self) -> usize {
        self.adj.len()
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        assert!(v < self.right, "right vertex {v} out of range");
        self.adj[u].push(v);
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }
}

/// A matching as partner arrays (`None` when unmatched).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    pub left_to_right: Vec<Option<usize>>,
    pub right_to_left: Vec<Option<usize>>,
}

impl Matching {
    pub fn size(&self) -> usize {
        self.left_to_right.iter().flatten().count()
    }

    pub fn unmatched_left(&self) -> Vec<usize> {
        (0..self.left_to_right.len()).filter(|&u| self.left_to_right[u].is_none()).collect()
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.left_to_right.iter().enumerate().filter_map(|(u, v)| v.map(|v| (u, v))).collect()
    }
}

pub fn hopcroft_karp(g: &Bipartite) -> Matching {
    let n = g.left();
    let mut pair_u = vec![NIL; n];
    let mut pair_v = vec![NIL; g.right];
    let mut dist = vec![0usize; n];
    let mut queue = VecDeque::new();

    loop {
        // BFS from free left vertices builds the layered graph.
        queue.clear();
        let mut found = false;
        for u in 0..n {
            if pair_u[u] == NIL {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        while let Some(u) = queue.pop_front() {
            for &v in &g.adj[u] {
                let w = pair_v[v];
                if w == NIL {
                    found = true;
                } else if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !found {
            break;
        }
        // Vertex-disjoint shortest augmenting paths, iterative DFS.
        let mut next = vec![0usize; n];
        for root in 0..n {
            if pair_u[root] != NIL {
                continue;
            }
            let mut stack = vec![root];
            while let Some(&u) = stack.last() {
                if next[u] == g.adj[u].len() {
                    dist[u] = usize::MAX;
                    stack.pop();
                    continue;
                }
                let v = g.adj[u][next[u]];
                next[u] += 1;
                let w = pair_v[v];
                if w == NIL {
                    // Augment along the stack.
                    let mut v = v;
                    while let Some(u) = stack.pop() {
                        let prev = pair_u[u];
                        pair_u[u] = v;
                        pair_v[v] = u;
                        v = prev;
                    }
                    break;
                } else if dist[w] != usize::MAX && dist[w] == dist[u] + 1 {
                    stack.push(w);
                }
            }
        }
    }

    let wrap = |x: usize| if x == NIL { None } else { Some(x) };
    Matching {
        left_to_right: pair_u.into_iter().map(wrap).collect(),
        right_to_left: pair_v.into_iter().map(wrap).collect(),
    }
}

/// Exhaustive maximum matching size by memoized search over subsets of used
/// right vertices (`right ≤ 20`). Reference for tests.
pub fn brute_force_maximum(g: &Bipartite) -> usize {
    assert!(g.right <= 20, "exhaustive search limited to 20 right vertices");
    fn go(g: &Bipartite, u: usize, used: u32, memo: &mut Vec<Vec<u8>>) -> usize {
        if u == g.left() {
            return 0;
        }
        let cached = memo[u][used as usize];
        if cached != u8::MAX {
            return cached as usize;
        }
        let mut best = go(g, u + 1, used, memo);
        for &v in &g.adj[u] {
            if used & (1 << v) == 0 {
                best = best.max(1 + go(g, u + 1, used | (1 << v), memo));
            }
        }
        memo[u][used as usize] = best as u8;
        best
    }
    let mut memo = vec![vec![u8::MAX; 1 << g.right]; g.left()];
    go(g, 0, 0, &mut memo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn check_valid(g: &Bipartite, m: &Matching) {
        for (u, v) in m.pairs() {
            assert!(g.adj[u].contains(&v));
            assert_eq!(m.right_to_left[v], Some(u));
        }
    }

    #[test]
    fn complete_two_by_two() {
        let mut g = Bipartite::new(2, 2);
        for u in 0..2 {
            for v in 0..2 {
                g.add_edge(u, v);
            }
        }
        let m = hopcroft_karp(&g);
        assert_eq!(m.size(), 2);
        check_valid(&g, &m);
    }

    #[test]
    fn star() {
        let mut g = Bipartite::new(3, 1);
        for u in 0..3 {
            g.add_edge(u, 0);
        }
        let m = hopcroft_karp(&g);
        assert_eq!(m.size(), 1);
        assert_eq!(m.unmatched_left(), vec![1, 2]);
    }

    #[test]
    fn needs_augmenting_path() {
        // Greedy takes 0–0 and strands 1; augmentation reroutes 0 to 1.
        let mut g = Bipartite::new(2, 2);
        g.add_edge(0, 0);
        g.add_edge(0, 1);
        g.add_edge(1, 0);
        let m = hopcroft_karp(&g);
        assert_eq!(m.size(), 2);
        check_valid(&g, &m);
    }

    #[test]
    fn empty_graphs() {
        assert_eq!(hopcroft_karp(&Bipartite::new(0, 0)).size(), 0);
        assert_eq!(hopcroft_karp(&Bipartite::new(3, 0)).size(), 0);
    }

    fn arb_graph() -> impl Strategy<Value = Bipartite> {
        (0usize..=12, 0usize..=12).prop_flat_map(|(l, r)| {
            proptest::collection::vec(proptest::collection::vec(any::<bool>(), r), l).prop_map(move |rows| {
                let mut g = Bipartite::new(l, r);
                for (u, row) in rows.iter().enumerate() {
                    for (v, &e) in row.iter().enumerate() {
                        if e {
                            g.add_edge(u, v);
                        }
                    }
                }
                g
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn matches_exhaustive(g in arb_graph()) {
            let m = hopcroft_karp(&g);
            check_valid(&g, &m);
            prop_assert_eq!(m.size(), brute_force_maximum(&g));
            prop_assert_eq!(hopcroft_karp(&g), m);
        }
    }
}
