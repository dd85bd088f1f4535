//! Layout passes: mapping logical qubits onto physical qubits.

use crate::backend::BackendModel;
use crate::circuit::QuantumCircuit;
use crate::metrics::layout_quality;

use super::vf2::{adjacency_from_edges, MonomorphismSearch, SearchStop};
use super::{Deadline, FailureReason, Layout, PassOutcome};

/// Interaction edges (deduplicated) and per-pair gate counts of a logical
/// circuit. Three-qubit gates contribute all their pairs.
fn interaction_graph(c: &QuantumCircuit) -> Vec<((usize, usize), usize)> {
    let mut counts: std::collections::BTreeMap<(usize, usize), usize> = Default::default();
    for instr in c.instructions() {
        let qs = instr.qubits();
        for i in 0..qs.len() {
            for j in i + 1..qs.len() {
                let key = (qs[i].min(qs[j]), qs[i].max(qs[j]));
                *counts.entry(key).or_insert(0) += 1;
            }
        }
    }
    counts.into_iter().collect()
}

fn outcome_for_layout(
    circuit: &QuantumCircuit,
    prior: Option<&Layout>,
    layout: Layout,
) -> PassOutcome {
    let changed = prior != Some(&layout);
    PassOutcome {
        circuit: circuit.clone(),
        changed,
        layout: Some(layout),
        failed: false,
        failure_reason: None,
        elapsed: 0.0,
    }
}

/// Logical qubit i on physical qubit i; fails when the register is wider
/// than the device.
pub fn apply_trivial_layout(
    circuit: &QuantumCircuit,
    backend: &BackendModel,
    prior: Option<&Layout>,
) -> PassOutcome {
    if circuit.num_qubits > backend.num_physical {
        return PassOutcome::failed(circuit, prior, FailureReason::TooManyQubits);
    }
    let layout = Layout::identity(circuit.num_qubits, backend.num_physical);
    outcome_for_layout(circuit, prior, layout)
}

/// Greedy densest-connected-subregion placement, tie-broken by lowest mean
/// two-qubit error inside the region.
pub fn apply_dense_layout(
    circuit: &QuantumCircuit,
    backend: &BackendModel,
    prior: Option<&Layout>,
) -> PassOutcome {
    let k = circuit.num_qubits;
    if k > backend.num_physical {
        return PassOutcome::failed(circuit, prior, FailureReason::TooManyQubits);
    }
    if k == 0 {
        return outcome_for_layout(circuit, prior, Layout::new(vec![], backend.num_physical));
    }
    let mut best: Option<(usize, f64, Vec<usize>)> = None; // (edges, -mean eps negated later, region)
    for seed in 0..backend.num_physical {
        let mut region = vec![seed];
        let mut in_region = vec![false; backend.num_physical];
        in_region[seed] = true;
        while region.len() < k {
            // Frontier candidates with their internal-edge gain.
            let mut cand: Option<(usize, f64, usize)> = None; // (gain, mean eps, vertex)
            for &v in &region {
                for &w in backend.neighbors(v) {
                    if in_region[w] {
                        continue;
                    }
                    let gain = backend
                        .neighbors(w)
                        .iter()
                        .filter(|&&x| in_region[x])
                        .count();
                    let eps: f64 = backend
                        .neighbors(w)
                        .iter()
                        .filter(|&&x| in_region[x])
                        .map(|&x| backend.eps_2q(w, x))
                        .sum::<f64>()
                        / gain.max(1) as f64;
                    let better = match cand {
                        None => true,
                        Some((g, e, x)) => {
                            gain > g || (gain == g && (eps < e || (eps == e && w < x)))
                        }
                    };
                    if better {
                        cand = Some((gain, eps, w));
                    }
                }
            }
            match cand {
                Some((_, _, w)) => {
                    in_region[w] = true;
                    region.push(w);
                }
                None => break, // disconnected remainder; seed fails
            }
        }
        if region.len() < k {
            continue;
        }
        let mut edges = 0usize;
        let mut eps_sum = 0.0;
        for i in 0..region.len() {
            for j in i + 1..region.len() {
                if backend.has_edge(region[i], region[j]) {
                    edges += 1;
                    eps_sum += backend.eps_2q(region[i], region[j]);
                }
            }
        }
        let mean_eps = if edges == 0 { 0.0 } else { eps_sum / edges as f64 };
        let better = match &best {
            None => true,
            Some((e, m, _)) => edges > *e || (edges == *e && mean_eps < *m),
        };
        if better {
            let mut sorted = region.clone();
            sorted.sort_unstable();
            best = Some((edges, mean_eps, sorted));
        }
    }
    let Some((_, _, region)) = best else {
        return PassOutcome::failed(circuit, prior, FailureReason::NoMappingFound);
    };
    // Pair high-interaction logicals with high-degree physicals.
    let interactions = interaction_graph(circuit);
    let mut logical_weight = vec![0usize; k];
    for &((a, b), count) in &interactions {
        logical_weight[a] += count;
        logical_weight[b] += count;
    }
    let mut logical_order: Vec<usize> = (0..k).collect();
    logical_order.sort_by_key(|&l| (usize::MAX - logical_weight[l], l));
    let mut physical_order = region.clone();
    physical_order.sort_by_key(|&p| {
        let internal = backend
            .neighbors(p)
            .iter()
            .filter(|&&x| region.contains(&x))
            .count();
        (usize::MAX - internal, p)
    });
    let mut map = vec![0usize; k];
    for (l, p) in logical_order.into_iter().zip(physical_order) {
        map[l] = p;
    }
    outcome_for_layout(circuit, prior, Layout::new(map, backend.num_physical))
}

/// Interaction-graph to coupling-graph monomorphism search; among mappings
/// found within the node-expansion budget, keeps the one with the best
/// layout-quality estimate.
pub fn apply_vf2_layout(
    circuit: &QuantumCircuit,
    backend: &BackendModel,
    prior: Option<&Layout>,
    call_limit: usize,
    deadline: &Deadline,
) -> PassOutcome {
    let n = circuit.num_qubits;
    if n > backend.num_physical {
        return PassOutcome::failed(circuit, prior, FailureReason::TooManyQubits);
    }
    let interactions = interaction_graph(circuit);
    let edges: Vec<(usize, usize)> = interactions.iter().map(|&(e, _)| e).collect();
    let full_adj = adjacency_from_edges(n, &edges);

    // Isolated logicals are assigned greedily after the core is embedded;
    // enumerating their permutations would burn the budget on symmetry.
    let core: Vec<usize> = (0..n).filter(|&v| !full_adj[v].is_empty()).collect();
    let core_index: std::collections::HashMap<usize, usize> =
        core.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let core_edges: Vec<(usize, usize)> = edges
        .iter()
        .map(|&(a, b)| (core_index[&a], core_index[&b]))
        .collect();
    let pattern_adj = adjacency_from_edges(core.len(), &core_edges);
    let target_adj = adjacency_from_edges(backend.num_physical, backend.edges());

    let mut best: Option<(f64, Layout)> = None;
    let search = MonomorphismSearch::new(&pattern_adj, &target_adj);
    let stop = search.enumerate(call_limit, deadline, |core_map| {
        let layout = complete_layout(n, &core, core_map, backend);
        if let Ok(score) = layout_quality(circuit, backend, &layout) {
            let better = match &best {
                None => true,
                Some((s, l)) => {
                    score > *s || (score == *s && layout.as_slice() < l.as_slice())
                }
            };
            if better {
                best = Some((score, layout));
            }
        }
        true
    });
    match best {
        Some((_, layout)) => outcome_for_layout(circuit, prior, layout),
        None => {
            let reason = match stop {
                SearchStop::TimedOut => FailureReason::Timeout,
                _ => FailureReason::NoMappingFound,
            };
            PassOutcome::failed(circuit, prior, reason)
        }
    }
}

/// Fills a core embedding out to a full layout, assigning isolated logicals
/// to the quietest unused physical qubits.
fn complete_layout(
    n: usize,
    core: &[usize],
    core_map: &[usize],
    backend: &BackendModel,
) -> Layout {
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; backend.num_physical];
    for (i, &logical) in core.iter().enumerate() {
        map[logical] = core_map[i];
        used[core_map[i]] = true;
    }
    for l in 0..n {
        if map[l] != usize::MAX {
            continue;
        }
        let p = (0..backend.num_physical)
            .filter(|&p| !used[p])
            .min_by(|&a, &b| {
                let cost =
                    |q: usize| backend.eps_1q[q] + backend.eps_readout[q];
                cost(a).partial_cmp(&cost(b)).unwrap().then(a.cmp(&b))
            })
            .expect("device has room for every logical qubit");
        map[l] = p;
        used[p] = true;
    }
    Layout::new(map, backend.num_physical)
}

/// Greedy placement minimizing anticipated routed error: the sum over
/// interacting pairs of path distance times mean path error, weighted by
/// gate count.
pub fn apply_noise_aware_layout(
    circuit: &QuantumCircuit,
    backend: &BackendModel,
    prior: Option<&Layout>,
) -> PassOutcome {
    let n = circuit.num_qubits;
    if n > backend.num_physical {
        return PassOutcome::failed(circuit, prior, FailureReason::TooManyQubits);
    }
    let interactions = interaction_graph(circuit);
    let oracle = backend.path_oracle();
    let mut weight = vec![0usize; n];
    for &((a, b), count) in &interactions {
        weight[a] += count;
        weight[b] += count;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&l| (usize::MAX - weight[l], l));

    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; backend.num_physical];
    for &l in &order {
        let placed_neighbors: Vec<(usize, usize)> = interactions
            .iter()
            .filter_map(|&((a, b), count)| {
                let other = if a == l { b } else if b == l { a } else { return None };
                (map[other] != usize::MAX).then_some((map[other], count))
            })
            .collect();
        let candidate = (0..backend.num_physical).filter(|&p| !used[p]).min_by(|&p, &q| {
            let cost = |phys: usize| -> f64 {
                if placed_neighbors.is_empty() {
                    // Seed placement: prefer quiet, well-connected qubits.
                    let mean_eps: f64 = backend
                        .neighbors(phys)
                        .iter()
                        .map(|&x| backend.eps_2q(phys, x))
                        .sum::<f64>()
                        / backend.neighbors(phys).len().max(1) as f64;
                    mean_eps - 1e-3 * backend.neighbors(phys).len() as f64
                        + backend.eps_1q[phys]
                        + backend.eps_readout[phys]
                } else {
                    placed_neighbors
                        .iter()
                        .map(|&(other, count)| {
                            let d = oracle.dist(phys, other);
                            count as f64 * d as f64 * oracle.mean_path_eps(backend, phys, other)
                        })
                        .sum()
                }
            };
            cost(p).partial_cmp(&cost(q)).unwrap().then(p.cmp(&q))
        });
        let Some(p) = candidate else {
            return PassOutcome::failed(circuit, prior, FailureReason::NoMappingFound);
        };
        map[l] = p;
        used[p] = true;
    }
    outcome_for_layout(circuit, prior, Layout::new(map, backend.num_physical))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{synthetic_backend, NoiseProfile, TopologyKind};
    use crate::circuit::{GateKind, QubitSpace};

    fn line_interaction_circuit() -> QuantumCircuit {
        let mut c = QuantumCircuit::new(3, QubitSpace::Logical);
        c.push(GateKind::Cx, &[0, 1]);
        c.push(GateKind::Cx, &[1, 2]);
        c
    }

    fn ring5() -> BackendModel {
        synthetic_backend(TopologyKind::Ring, 5, NoiseProfile::default_uniform()).unwrap()
    }

    #[test]
    fn trivial_layout_identity_or_failure() {
        let c = line_interaction_circuit();
        let b = ring5();
        let out = apply_trivial_layout(&c, &b, None);
        assert!(!out.failed);
        assert_eq!(out.layout.unwrap().as_slice(), &[0, 1, 2]);

        let wide = QuantumCircuit::new(9, QubitSpace::Logical);
        let out = apply_trivial_layout(&wide, &b, None);
        assert!(out.failed);
        assert_eq!(out.failure_reason, Some(FailureReason::TooManyQubits));
    }

    #[test]
    fn second_identical_layout_is_noop() {
        let c = line_interaction_circuit();
        let b = ring5();
        let first = apply_trivial_layout(&c, &b, None);
        let second = apply_trivial_layout(&c, &b, first.layout.as_ref());
        assert!(first.changed);
        assert!(!second.changed);
    }

    #[test]
    fn vf2_maps_line_interactions_onto_ring() {
        let c = line_interaction_circuit();
        let b = ring5();
        let out = apply_vf2_layout(&c, &b, None, 10_000, &Deadline::none());
        assert!(!out.failed);
        let layout = out.layout.unwrap();
        for pair in [(0usize, 1usize), (1, 2)] {
            let pa = layout.physical_of(pair.0).unwrap();
            let pb = layout.physical_of(pair.1).unwrap();
            assert!(b.has_edge(pa, pb), "interacting pair must be adjacent");
        }
    }

    #[test]
    fn vf2_fails_on_k4_into_line() {
        let mut c = QuantumCircuit::new(4, QubitSpace::Logical);
        for i in 0..4 {
            for j in i + 1..4 {
                c.push(GateKind::Cz, &[i, j]);
            }
        }
        let b = synthetic_backend(TopologyKind::Line, 4, NoiseProfile::default_uniform()).unwrap();
        let out = apply_vf2_layout(&c, &b, None, 100_000, &Deadline::none());
        assert!(out.failed);
        assert_eq!(out.failure_reason, Some(FailureReason::NoMappingFound));
        assert_eq!(out.circuit, c);
    }

    #[test]
    fn vf2_zero_call_limit_fails() {
        let c = line_interaction_circuit();
        let b = ring5();
        let out = apply_vf2_layout(&c, &b, None, 0, &Deadline::none());
        assert!(out.failed);
    }

    #[test]
    fn vf2_expired_deadline_fails_with_timeout() {
        let c = line_interaction_circuit();
        let b = ring5();
        let out = apply_vf2_layout(&c, &b, None, 10_000, &Deadline::expired_now());
        assert!(out.failed);
        assert_eq!(out.failure_reason, Some(FailureReason::Timeout));
    }

    #[test]
    fn dense_layout_prefers_connected_low_error_region() {
        let c = line_interaction_circuit();
        let b = synthetic_backend(
            TopologyKind::HeavyHexFragment,
            12,
            NoiseProfile::Heterogeneous { seed: 4, spread: 0.5 },
        )
        .unwrap();
        let out = apply_dense_layout(&c, &b, None);
        assert!(!out.failed);
        let layout = out.layout.unwrap();
        // A 3-qubit placement on a connected subregion stays compact.
        let ps: Vec<usize> = (0..3).map(|l| layout.physical_of(l).unwrap()).collect();
        let oracle = b.path_oracle();
        for i in 0..3 {
            for j in i + 1..3 {
                assert!(oracle.dist(ps[i], ps[j]) <= 2, "region should be compact");
            }
        }
    }

    #[test]
    fn noise_aware_layout_places_interacting_pairs_adjacent_when_possible() {
        let c = line_interaction_circuit();
        let b = ring5();
        let out = apply_noise_aware_layout(&c, &b, None);
        assert!(!out.failed);
        let layout = out.layout.unwrap();
        let d01 = b.swap_distance(
            layout.physical_of(0).unwrap(),
            layout.physical_of(1).unwrap(),
        );
        let d12 = b.swap_distance(
            layout.physical_of(1).unwrap(),
            layout.physical_of(2).unwrap(),
        );
        assert_eq!(d01 + d12, 2, "line interactions embed exactly in a ring");
    }
}
