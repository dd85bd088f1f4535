//! Subgraph monomorphism search: injective mappings of a pattern graph into
//! a target graph such that every pattern edge lands on a target edge.
//!
//! The search explores candidates depth-first in a fixed order (pattern
//! vertices by descending degree, target candidates ascending), spending one
//! unit of `call_limit` budget per candidate trial, so runs are reproducible
//! and boundable.

use super::Deadline;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStop {
    /// Search space exhausted.
    Exhausted,
    /// Node-expansion budget ran out.
    BudgetExhausted,
    /// Wall-clock deadline expired.
    TimedOut,
}

pub struct MonomorphismSearch<'a> {
    pattern_adj: &'a [Vec<usize>],
    target_adj: &'a [Vec<usize>],
    order: Vec<usize>,
}

impl<'a> MonomorphismSearch<'a> {
    pub fn new(pattern_adj: &'a [Vec<usize>], target_adj: &'a [Vec<usize>]) -> Self {
        let mut order: Vec<usize> = (0..pattern_adj.len()).collect();
        // Connected-first ordering: start from the highest-degree vertex and
        // grow through neighbors so partial mappings stay constrained.
        order.sort_by_key(|&v| (usize::MAX - pattern_adj[v].len(), v));
        let mut picked = vec![false; pattern_adj.len()];
        let mut result = Vec::with_capacity(order.len());
        for &seed in &order {
            if picked[seed] {
                continue;
            }
            picked[seed] = true;
            result.push(seed);
            let mut frontier_start = result.len() - 1;
            while frontier_start < result.len() {
                let v = result[frontier_start];
                frontier_start += 1;
                let mut nbrs: Vec<usize> = pattern_adj[v]
                    .iter()
                    .copied()
                    .filter(|&w| !picked[w])
                    .collect();
                nbrs.sort_by_key(|&w| (usize::MAX - pattern_adj[w].len(), w));
                for w in nbrs {
                    if !picked[w] {
                        picked[w] = true;
                        result.push(w);
                    }
                }
            }
        }
        Self {
            pattern_adj,
            target_adj,
            order: result,
        }
    }

    /// Enumerates complete mappings (pattern vertex -> target vertex) until
    /// the space, the budget, or the deadline runs out. `on_found` returns
    /// `false` to stop early.
    pub fn enumerate(
        &self,
        call_limit: usize,
        deadline: &Deadline,
        mut on_found: impl FnMut(&[usize]) -> bool,
    ) -> SearchStop {
        let pn = self.pattern_adj.len();
        let tn = self.target_adj.len();
        if pn == 0 {
            on_found(&[]);
            return SearchStop::Exhausted;
        }
        if pn > tn || call_limit == 0 {
            return if call_limit == 0 {
                SearchStop::BudgetExhausted
            } else {
                SearchStop::Exhausted
            };
        }
        let mut budget = call_limit;
        let mut map = vec![usize::MAX; pn];
        let mut used = vec![false; tn];
        // Per-depth iterator state: next target candidate to try.
        let mut cursor = vec![0usize; pn + 1];
        let mut depth = 0usize;
        loop {
            if deadline.expired() {
                return SearchStop::TimedOut;
            }
            if depth == pn {
                if !on_found(&map) {
                    return SearchStop::Exhausted;
                }
                // Backtrack to continue enumeration.
                depth -= 1;
                let v = self.order[depth];
                used[map[v]] = false;
                map[v] = usize::MAX;
                continue;
            }
            let v = self.order[depth];
            let mut advanced = false;
            while cursor[depth] < tn {
                let cand = cursor[depth];
                cursor[depth] += 1;
                if used[cand] {
                    continue;
                }
                if budget == 0 {
                    return SearchStop::BudgetExhausted;
                }
                budget -= 1;
                if self.feasible(v, cand, &map) {
                    map[v] = cand;
                    used[cand] = true;
                    depth += 1;
                    cursor[depth] = 0;
                    advanced = true;
                    break;
                }
            }
            if advanced {
                continue;
            }
            if depth == 0 {
                return SearchStop::Exhausted;
            }
            depth -= 1;
            let v = self.order[depth];
            used[map[v]] = false;
            map[v] = usize::MAX;
        }
    }

    fn feasible(&self, v: usize, cand: usize, map: &[usize]) -> bool {
        // Every already-mapped pattern neighbor must be adjacent in the
        // target; degree pruning rejects hopeless candidates early.
        if self.target_adj[cand].len() < self.pattern_adj[v].len() {
            return false;
        }
        for &w in &self.pattern_adj[v] {
            let mapped = map[w];
            if mapped != usize::MAX && !self.target_adj[cand].contains(&mapped) {
                return false;
            }
        }
        true
    }
}

/// Adjacency list from an edge list over `n` vertices.
pub fn adjacency_from_edges(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        if !adj[a].contains(&b) {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    for nbrs in adj.iter_mut() {
        nbrs.sort_unstable();
    }
    adj
}
