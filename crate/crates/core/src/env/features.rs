//! Observation construction: the dual circuit representation, global
//! features, and pass-history channels.
//!
//! Pre-layout stages see gate-count tensors over logical qubit pairs;
//! post-routing stages see edge/physical-qubit tensors with calibration
//! channels (T1/T2 normalized by 500 us and clipped to [0, 2], error rates
//! raw). The temporal bin of a gate is `floor(layer / depth * t_bins)`
//! clamped to the last bin, with 0-based DAG layers.

use crate::backend::BackendModel;
use crate::circuit::{GateKind, QuantumCircuit, QubitSpace};
use crate::metrics::esp;
use crate::passes::Stage;
use crate::scalar::Scalar;

use super::{EnvConfig, EpisodeState, GLOBAL_DIM, NUM_ACTIONS};

const T_NORM: f64 = 500e-6;

/// Stage one-hot, representation-dependent circuit tensor, global features,
/// and pass history, as consumed by the policy network.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub stage: Stage,
    /// True while the circuit is still over logical qubits; routing flips
    /// the circuit to physical wires mid-stage, which also switches the
    /// representation (the logical-pair tensor cannot index device wires).
    pub pre_encoder: bool,
    pub stage_onehot: Vec<f32>,
    pub circuit_tensor: Vec<f32>,
    pub global: Vec<f32>,
    pub history: Vec<f32>,
}

impl Observation {
    /// Which encoder this observation feeds.
    pub fn uses_pre_encoder(&self) -> bool {
        self.pre_encoder
    }

    /// Stage one-hot + global + history, in trunk order.
    pub fn aux_vector<S: Scalar>(&self) -> Vec<S> {
        self.stage_onehot
            .iter()
            .chain(&self.global)
            .chain(&self.history)
            .map(|&v| S::from_f64_lossy(v as f64))
            .collect()
    }

    pub fn policy_input<S: Scalar>(&self) -> crate::policy::PolicyInput<S> {
        crate::policy::PolicyInput {
            use_pre_encoder: self.uses_pre_encoder(),
            circuit_tensor: self
                .circuit_tensor
                .iter()
                .map(|&v| S::from_f64_lossy(v as f64))
                .collect(),
            aux: self.aux_vector(),
        }
    }
}

fn channel_1q(kind: GateKind, g_types: usize) -> usize {
    let ch = match kind {
        GateKind::I => 0,
        GateKind::X => 1,
        GateKind::Sx => 2,
        GateKind::Rz(_) => 3,
        GateKind::H => 4,
        GateKind::S => 5,
        GateKind::T => 6,
        GateKind::Measure => 7,
        _ => unreachable!("1q channel for 1q kinds only"),
    };
    ch.min(g_types - 1)
}

fn channel_2q(kind: GateKind, g_types: usize) -> usize {
    let ch = match kind {
        GateKind::Cx => 0,
        GateKind::Cz => 1,
        GateKind::Swap => 2,
        GateKind::Ccx => 3,
        _ => unreachable!("2q channel for multi-qubit kinds only"),
    };
    ch.min(g_types - 1)
}

fn temporal_bin(layer: usize, depth: usize, t_bins: usize) -> usize {
    if depth == 0 {
        return 0;
    }
    ((layer * t_bins) / depth).min(t_bins - 1)
}

/// Pre-layout tensors: F2q (q_max^2 * g * t, symmetrized) then F1q.
fn pre_layout_tensor(circuit: &QuantumCircuit, cfg: &EnvConfig) -> Vec<f32> {
    let (q, g, t) = (cfg.q_max, cfg.g_types, cfg.t_bins);
    let mut out = vec![0f32; cfg.pre_input_dim()];
    let f1_base = q * q * g * t;
    let dag = circuit.dag();
    let depth = dag.depth();
    for (idx, instr) in circuit.instructions().iter().enumerate() {
        let bin = temporal_bin(dag.layer_of(idx), depth, t);
        let qs = instr.qubits();
        if instr.kind.arity() == 1 {
            let ch = channel_1q(instr.kind, g);
            out[f1_base + (qs[0] * g + ch) * t + bin] += 1.0;
        } else {
            let ch = channel_2q(instr.kind, g);
            for i in 0..qs.len() {
                for j in i + 1..qs.len() {
                    let (a, b) = (qs[i].min(qs[j]), qs[i].max(qs[j]));
                    out[((a * q + b) * g + ch) * t + bin] += 1.0;
                    out[((b * q + a) * g + ch) * t + bin] += 1.0;
                }
            }
        }
    }
    out
}

/// Post-routing tensors: F2Q over edge slots with 4 channels (count, edge
/// error, mean T1, mean T2), then F1Q over physical slots with 5 channels
/// (count, 1q error, readout error, T1, T2). Calibration channels are
/// replicated across gate-kind and temporal indices.
fn post_routing_tensor(
    circuit: &QuantumCircuit,
    cfg: &EnvConfig,
    backend: &BackendModel,
) -> Vec<f32> {
    let (g, t) = (cfg.g_types, cfg.t_bins);
    let mut out = vec![0f32; cfg.post_input_dim()];
    let edge_slot: std::collections::BTreeMap<(usize, usize), usize> = backend
        .edges()
        .iter()
        .enumerate()
        .map(|(s, &e)| (e, s))
        .collect();
    let f2_stride = g * t * 4;
    let f1_base = cfg.e_max * f2_stride;
    let f1_stride = g * t * 5;

    let clip_t = |seconds: f64| ((seconds / T_NORM).clamp(0.0, 2.0)) as f32;

    // Calibration channels first.
    for (&(a, b), &slot) in &edge_slot {
        let eps = backend.eps_2q(a, b) as f32;
        let t1 = clip_t((backend.t1[a] + backend.t1[b]) / 2.0);
        let t2 = clip_t((backend.t2[a] + backend.t2[b]) / 2.0);
        for gi in 0..g {
            for ti in 0..t {
                let base = slot * f2_stride + (gi * t + ti) * 4;
                out[base + 1] = eps;
                out[base + 2] = t1;
                out[base + 3] = t2;
            }
        }
    }
    for p in 0..backend.num_physical.min(cfg.p_max) {
        let eps1 = backend.eps_1q[p] as f32;
        let epsr = backend.eps_readout[p] as f32;
        let t1 = clip_t(backend.t1[p]);
        let t2 = clip_t(backend.t2[p]);
        for gi in 0..g {
            for ti in 0..t {
                let base = f1_base + p * f1_stride + (gi * t + ti) * 5;
                out[base + 1] = eps1;
                out[base + 2] = epsr;
                out[base + 3] = t1;
                out[base + 4] = t2;
            }
        }
    }

    // Gate counts.
    let dag = circuit.dag();
    let depth = dag.depth();
    for (idx, instr) in circuit.instructions().iter().enumerate() {
        let bin = temporal_bin(dag.layer_of(idx), depth, t);
        let qs = instr.qubits();
        if instr.kind.arity() == 1 {
            let ch = channel_1q(instr.kind, g);
            if qs[0] < cfg.p_max {
                out[f1_base + qs[0] * f1_stride + (ch * t + bin) * 5] += 1.0;
            }
        } else if instr.kind.arity() == 2 {
            let key = (qs[0].min(qs[1]), qs[0].max(qs[1]));
            if let Some(&slot) = edge_slot.get(&key) {
                let ch = channel_2q(instr.kind, g);
                out[slot * f2_stride + (ch * t + bin) * 4] += 1.0;
            }
        }
    }
    out
}

/// Undirected-graph summary: diameter, max degree, mean degree, density,
/// component count, largest-component fraction.
fn graph_descriptors(n: usize, edges: &[(usize, usize)]) -> [f64; 6] {
    if n == 0 {
        return [0.0; 6];
    }
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut components = 0usize;
    let mut largest = 0usize;
    let mut diameter = 0usize;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        components += 1;
        let mut size = 0usize;
        let mut queue = std::collections::VecDeque::from([start]);
        seen[start] = true;
        let mut members = Vec::new();
        while let Some(v) = queue.pop_front() {
            size += 1;
            members.push(v);
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        largest = largest.max(size);
        // Eccentricities within the component.
        for &src in &members {
            let mut dist = vec![usize::MAX; n];
            dist[src] = 0;
            let mut q = std::collections::VecDeque::from([src]);
            while let Some(v) = q.pop_front() {
                for &w in &adj[v] {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[v] + 1;
                        diameter = diameter.max(dist[w]);
                        q.push_back(w);
                    }
                }
            }
        }
    }
    let max_degree = adj.iter().map(|a| a.len()).max().unwrap_or(0);
    let mean_degree = 2.0 * edges.len() as f64 / n as f64;
    let density = if n > 1 {
        2.0 * edges.len() as f64 / (n as f64 * (n as f64 - 1.0))
    } else {
        0.0
    };
    [
        diameter as f64,
        max_degree as f64,
        mean_degree,
        density,
        components as f64,
        largest as f64 / n as f64,
    ]
}

fn interaction_edges(circuit: &QuantumCircuit) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for instr in circuit.instructions() {
        let qs = instr.qubits();
        for i in 0..qs.len() {
            for j in i + 1..qs.len() {
                let e = (qs[i].min(qs[j]), qs[i].max(qs[j]));
                if !edges.contains(&e) {
                    edges.push(e);
                }
            }
        }
    }
    edges
}

fn global_features(state: &EpisodeState, backend: &BackendModel) -> Vec<f32> {
    let c = &state.circuit;
    let counts = c.gate_counts();
    let depth = c.depth();
    let dag = c.dag();
    let layer_sizes: Vec<usize> = {
        let mut sizes = vec![0usize; dag.depth()];
        for &l in dag.layers() {
            sizes[l] += 1;
        }
        sizes
    };
    let max_parallel = layer_sizes.iter().copied().max().unwrap_or(0);
    let avg_per_layer = if dag.depth() == 0 {
        0.0
    } else {
        c.instructions().len() as f64 / dag.depth() as f64
    };
    let total = counts.total().max(1);
    let in_basis = c
        .instructions()
        .iter()
        .filter(|i| i.kind.in_basis())
        .count();
    let esp_now = if c.qubit_space == QubitSpace::Physical && c.all_in_basis() {
        esp(c, backend).unwrap_or(0.0)
    } else {
        0.0
    };

    let circ = graph_descriptors(c.num_qubits, &interaction_edges(c));
    let back = graph_descriptors(backend.num_physical, backend.edges());
    let ratio = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };

    let mut g = vec![
        (counts.total() as f64 / 1000.0) as f32,
        (counts.one_qubit as f64 / 1000.0) as f32,
        (counts.two_qubit as f64 / 1000.0) as f32,
        (counts.measurements as f64 / 100.0) as f32,
        (depth as f64 / 100.0) as f32,
        (c.num_qubits as f64 / backend.num_physical.max(1) as f64) as f32,
        (depth as f64 / total as f64) as f32,
        (counts.two_qubit as f64 / total as f64) as f32,
        (avg_per_layer / 10.0) as f32,
        (max_parallel as f64 / 10.0) as f32,
        esp_now as f32,
        f32::from(c.qubit_space == QubitSpace::Logical),
        f32::from(c.qubit_space == QubitSpace::Physical),
        f32::from(c.all_in_basis()),
        f32::from(state.layout.is_some()),
        (in_basis as f64 / total as f64) as f32,
    ];
    let norms = [30.0, 10.0, 5.0, 1.0, 10.0, 1.0];
    for (v, n) in circ.iter().zip(norms) {
        g.push((v / n) as f32);
    }
    for (v, n) in back.iter().zip(norms) {
        g.push((v / n) as f32);
    }
    for i in [0usize, 1, 3, 2] {
        g.push(ratio(circ[i], back[i]) as f32);
    }
    debug_assert_eq!(g.len(), GLOBAL_DIM);
    g
}

pub(crate) fn build_observation(
    state: &EpisodeState,
    cfg: &EnvConfig,
    backend: &BackendModel,
) -> Observation {
    let mut stage_onehot = vec![0f32; 6];
    stage_onehot[state.stage.index()] = 1.0;

    let pre_encoder = state.circuit.qubit_space == QubitSpace::Logical;
    let circuit_tensor = if pre_encoder {
        pre_layout_tensor(&state.circuit, cfg)
    } else {
        post_routing_tensor(&state.circuit, cfg, backend)
    };

    let mut history = vec![0f32; cfg.history_dim()];
    for (slot, &action) in state.history.iter().take(cfg.history_len).enumerate() {
        history[slot] = (action as f32 + 1.0) / NUM_ACTIONS as f32;
    }
    for (i, &count) in state.noop_counts.iter().enumerate() {
        history[cfg.history_len + i] = (count as f32 / 5.0).min(1.0);
    }

    Observation {
        stage: state.stage,
        pre_encoder,
        stage_onehot,
        circuit_tensor,
        global: global_features(state, backend),
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn temporal_bins_cover_range() {
        assert_eq!(temporal_bin(0, 4, 4), 0);
        assert_eq!(temporal_bin(3, 4, 4), 3);
        assert_eq!(temporal_bin(9, 10, 4), 3);
        assert_eq!(temporal_bin(0, 1, 4), 0);
        assert_eq!(temporal_bin(0, 0, 4), 0);
    }

    #[test]
    fn graph_descriptors_on_path() {
        let d = graph_descriptors(4, &[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(d[0], 3.0); // diameter
        assert_eq!(d[1], 2.0); // max degree
        assert_eq!(d[4], 1.0); // one component
        assert_eq!(d[5], 1.0);
    }

    #[test]
    fn graph_descriptors_counts_components() {
        let d = graph_descriptors(5, &[(0, 1), (2, 3)]);
        assert_eq!(d[4], 3.0, "two pairs plus an isolated vertex");
        assert!((d[5] - 0.4).abs() < 1e-12);
    }
}
