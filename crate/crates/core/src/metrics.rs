//! Fidelity proxies and evaluation metrics: ESP, stage quality estimates,
//! total variation distance, and the terminal reward.
//!
//! The proxy chain is consistent by construction: on a routed, translated
//! circuit `routing_quality` and `esp` share one code path, so they agree
//! exactly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::BackendModel;
use crate::circuit::{GateCounts, GateKind, QuantumCircuit, QubitSpace};
use crate::passes::Layout;
use crate::scalar::soft_normalize;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("circuit is not routed onto physical qubits")]
    NotRouted,
    #[error("two-qubit gate on ({0}, {1}) does not sit on a coupling edge")]
    NotCoupled(usize, usize),
    #[error("gate `{0}` is outside the hardware basis")]
    Untranslated(&'static str),
    #[error("gate `{0}` is not supported by this metric")]
    UnsupportedGate(&'static str),
    #[error("layout does not cover qubit {0}")]
    LayoutMissing(usize),
    #[error("distributions have different bit widths ({0} vs {1})")]
    WidthMismatch(usize, usize),
    #[error("reference ESP must be positive")]
    NonPositiveReference,
}

/// Compact quality summary of a compiled circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub esp: f64,
    pub gate_counts: GateCounts,
    pub depth: usize,
    /// Estimated execution time: sum over layers of the slowest gate.
    pub duration_estimate: f64,
}

/// Probability distribution over fixed-width measurement bitstrings.
///
/// Keys are bitstrings with classical bit 0 leftmost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    bit_width: usize,
    probs: BTreeMap<String, f64>,
}

impl Distribution {
    pub fn from_probs(bit_width: usize, probs: BTreeMap<String, f64>) -> Self {
        let total: f64 = probs.values().sum();
        debug_assert!(
            probs.is_empty() || (total - 1.0).abs() < 1e-9,
            "probabilities sum to {total}"
        );
        debug_assert!(probs.keys().all(|k| k.len() == bit_width));
        Self { bit_width, probs }
    }

    pub fn from_counts(bit_width: usize, counts: &BTreeMap<String, usize>, shots: usize) -> Self {
        let probs = counts
            .iter()
            .map(|(k, &c)| (k.clone(), c as f64 / shots as f64))
            .collect();
        Self::from_probs(bit_width, probs)
    }

    /// Point mass on a single outcome.
    pub fn point(bits: &str) -> Self {
        let mut probs = BTreeMap::new();
        probs.insert(bits.to_string(), 1.0);
        Self::from_probs(bits.len(), probs)
    }

    pub fn bit_width(&self) -> usize {
        self.bit_width
    }

    pub fn prob(&self, bits: &str) -> f64 {
        self.probs.get(bits).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.probs.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn support_len(&self) -> usize {
        self.probs.len()
    }
}

/// Total variation distance: half the L1 distance over the union support.
pub fn tvd(p: &Distribution, q: &Distribution) -> f64 {
    assert_eq!(
        p.bit_width, q.bit_width,
        "distributions must share a bit width"
    );
    let mut keys: Vec<&str> = p.probs.keys().map(|s| s.as_str()).collect();
    keys.extend(q.probs.keys().map(|s| s.as_str()));
    keys.sort_unstable();
    keys.dedup();
    0.5 * keys
        .iter()
        .map(|k| (p.prob(k) - q.prob(k)).abs())
        .sum::<f64>()
}

/// Terminal reward weights. `clip` bounds the ESP log-ratio symmetrically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardWeights {
    pub esp_weight: f64,
    pub clip: f64,
    pub gates_weight: f64,
    pub depth_weight: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            esp_weight: 1.0,
            clip: 2.0,
            gates_weight: 0.3,
            depth_weight: 0.3,
        }
    }
}

/// Terminal reward: clipped ESP log-ratio plus soft-normalized gate/depth
/// improvement relative to the reference compilation.
pub fn final_reward(
    esp_rl: f64,
    esp_ref: f64,
    gates_rl: usize,
    gates_ref: usize,
    depth_rl: usize,
    depth_ref: usize,
    weights: &RewardWeights,
) -> Result<f64, MetricsError> {
    if esp_ref <= 0.0 {
        return Err(MetricsError::NonPositiveReference);
    }
    let log_ratio = if esp_rl <= 0.0 {
        -weights.clip
    } else {
        (esp_rl / esp_ref).ln().clamp(-weights.clip, weights.clip)
    };
    let r_gates = (gates_ref as f64 - gates_rl as f64) / (gates_ref.max(1) as f64);
    let r_depth = (depth_ref as f64 - depth_rl as f64) / (depth_ref.max(1) as f64);
    let aux = soft_normalize(weights.gates_weight * r_gates + weights.depth_weight * r_depth);
    Ok(weights.esp_weight * log_ratio + aux)
}

/// Mean duration over non-measurement gate instances; 0 for gate-free
/// circuits. Measurements are excluded so the long readout pulse does not
/// dominate the decoherence exponent.
fn mean_gate_duration(c: &QuantumCircuit, b: &BackendModel) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for instr in c.instructions() {
        if instr.kind.is_measure() {
            continue;
        }
        total += match instr.kind.arity() {
            1 => b.durations.one_qubit,
            _ => b.durations.two_qubit,
        };
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

fn instr_duration(kind: GateKind, b: &BackendModel) -> f64 {
    if kind.is_measure() {
        b.durations.measure
    } else if kind.arity() == 1 {
        b.durations.one_qubit
    } else {
        b.durations.two_qubit
    }
}

/// Sum over depth layers of the slowest instruction in each layer.
pub fn estimated_duration(c: &QuantumCircuit, b: &BackendModel) -> f64 {
    let dag = c.dag();
    let mut layer_max = vec![0.0f64; dag.depth()];
    for (idx, instr) in c.instructions().iter().enumerate() {
        let layer = dag.layer_of(idx);
        layer_max[layer] = layer_max[layer].max(instr_duration(instr.kind, b));
    }
    layer_max.iter().sum()
}

/// exp(-d t_g / T1bar - d t_g / T2bar) over the given physical wires.
fn decoherence_factor(
    depth: usize,
    t_g: f64,
    wires: &[usize],
    b: &BackendModel,
) -> f64 {
    if wires.is_empty() || depth == 0 || t_g == 0.0 {
        return 1.0;
    }
    let t1_bar = wires.iter().map(|&q| b.t1[q]).sum::<f64>() / wires.len() as f64;
    let t2_bar = wires.iter().map(|&q| b.t2[q]).sum::<f64>() / wires.len() as f64;
    let exposure = depth as f64 * t_g;
    (-exposure / t1_bar - exposure / t2_bar).exp()
}

/// Estimated success probability of a routed, translated physical circuit:
/// per-gate success factors times the decoherence decay.
pub fn esp(c: &QuantumCircuit, b: &BackendModel) -> Result<f64, MetricsError> {
    for instr in c.instructions() {
        if !instr.kind.in_basis() {
            return Err(MetricsError::Untranslated(instr.kind.name()));
        }
    }
    routing_quality(c, b)
}

/// ESP proxy for routed (possibly untranslated) physical circuits. Each
/// two-qubit gate contributes `(1 - eps)^k` where `k` is the number of basis
/// two-qubit gates it expands to (CZ, CX -> 1; SWAP -> 3).
pub fn routing_quality(c: &QuantumCircuit, b: &BackendModel) -> Result<f64, MetricsError> {
    if c.qubit_space != QubitSpace::Physical {
        return Err(MetricsError::NotRouted);
    }
    let mut product = 1.0f64;
    for instr in c.instructions() {
        let qs = instr.qubits();
        match instr.kind {
            GateKind::Measure => product *= 1.0 - b.eps_readout[qs[0]],
            GateKind::Ccx => return Err(MetricsError::UnsupportedGate("ccx")),
            kind if kind.arity() == 1 => product *= 1.0 - b.eps_1q[qs[0]],
            kind => {
                if !b.has_edge(qs[0], qs[1]) {
                    return Err(MetricsError::NotCoupled(qs[0], qs[1]));
                }
                let eps = b.eps_2q(qs[0], qs[1]);
                let k = match kind {
                    GateKind::Swap => 3,
                    _ => 1,
                };
                product *= (1.0 - eps).powi(k);
            }
        }
    }
    let t_g = mean_gate_duration(c, b);
    let wires = c.decoherence_wires();
    Ok((product * decoherence_factor(c.depth(), t_g, &wires, b)).clamp(0.0, 1.0))
}

/// ESP proxy from layout decisions alone. A two-qubit gate whose operands sit
/// at path distance d contributes success factor (1 - eps_eff) with
/// `eps_eff = (d - 1) * 3 * mean_path_eps + mean_path_eps`; predicted depth
/// grows by three serial layers per anticipated SWAP.
pub fn layout_quality(
    c: &QuantumCircuit,
    b: &BackendModel,
    layout: &Layout,
) -> Result<f64, MetricsError> {
    if c.qubit_space != QubitSpace::Logical {
        // A routed circuit already binds error rates; LQ is a pre-routing
        // estimate, so fall back to the routed metric.
        return routing_quality(c, b);
    }
    let oracle = b.path_oracle();
    let map = |q: usize| -> Result<usize, MetricsError> {
        layout.physical_of(q).ok_or(MetricsError::LayoutMissing(q))
    };
    let mut product = 1.0f64;
    let mut extra_layers = 0usize;
    for instr in c.instructions() {
        let qs = instr.qubits();
        match instr.kind {
            GateKind::Measure => product *= 1.0 - b.eps_readout[map(qs[0])?],
            GateKind::Ccx => return Err(MetricsError::UnsupportedGate("ccx")),
            kind if kind.arity() == 1 => product *= 1.0 - b.eps_1q[map(qs[0])?],
            _ => {
                let (pa, pb) = (map(qs[0])?, map(qs[1])?);
                let d_path = oracle.dist(pa, pb);
                let eps_bar = oracle.mean_path_eps(b, pa, pb);
                let eps_eff = (d_path.saturating_sub(1)) as f64 * 3.0 * eps_bar + eps_bar;
                product *= (1.0 - eps_eff).max(0.0);
                extra_layers += 3 * d_path.saturating_sub(1);
            }
        }
    }
    let predicted_depth = c.depth() + extra_layers;
    let t_g = mean_gate_duration(c, b);
    let wires: Vec<usize> = (0..c.num_qubits).map(map).collect::<Result<_, _>>()?;
    Ok((product * decoherence_factor(predicted_depth, t_g, &wires, b)).clamp(0.0, 1.0))
}

/// Builds a [`QualityReport`] for a routed, translated circuit.
pub fn quality_report(c: &QuantumCircuit, b: &BackendModel) -> Result<QualityReport, MetricsError> {
    Ok(QualityReport {
        esp: esp(c, b)?,
        gate_counts: c.gate_counts(),
        depth: c.depth(),
        duration_estimate: estimated_duration(c, b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{synthetic_backend, NoiseProfile, TopologyKind};
    use crate::circuit::QubitSpace;

    fn uniform_backend(n: usize, eps_1q: f64, eps_2q: f64, eps_r: f64) -> BackendModel {
        synthetic_backend(
            TopologyKind::Line,
            n,
            NoiseProfile::Uniform {
                eps_1q,
                eps_2q,
                eps_readout: eps_r,
                t1: 100e-6,
                t2: 100e-6,
            },
        )
        .unwrap()
    }

    #[test]
    fn esp_empty_circuit_is_one() {
        let b = uniform_backend(2, 0.01, 0.01, 0.01);
        let c = QuantumCircuit::new(2, QubitSpace::Physical);
        assert_eq!(esp(&c, &b).unwrap(), 1.0);
    }

    #[test]
    fn esp_single_x_matches_hand_evaluation() {
        let b = uniform_backend(2, 0.01, 0.01, 0.01);
        let mut c = QuantumCircuit::new(2, QubitSpace::Physical);
        c.active_wires = Some(vec![true, false]);
        c.push(GateKind::X, &[0]);
        let got = esp(&c, &b).unwrap();
        let want = 0.99 * (-2.0 * 35e-9 / 100e-6_f64).exp();
        assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
        assert!((got - 0.98931).abs() < 1e-5);
    }

    #[test]
    fn esp_monotone_in_error_rates() {
        let mut c = QuantumCircuit::new(2, QubitSpace::Physical);
        c.push(GateKind::X, &[0]);
        c.push(GateKind::Cz, &[0, 1]);
        c.push_measure(0);
        let lo = esp(&c, &uniform_backend(2, 0.001, 0.01, 0.01)).unwrap();
        let hi = esp(&c, &uniform_backend(2, 0.01, 0.01, 0.01)).unwrap();
        assert!(hi < lo);
    }

    #[test]
    fn esp_rejects_untranslated_and_unrouted() {
        let b = uniform_backend(2, 0.01, 0.01, 0.01);
        let mut logical = QuantumCircuit::new(2, QubitSpace::Logical);
        logical.push(GateKind::X, &[0]);
        assert_eq!(esp(&logical, &b), Err(MetricsError::NotRouted));
        let mut physical = QuantumCircuit::new(2, QubitSpace::Physical);
        physical.push(GateKind::H, &[0]);
        assert_eq!(esp(&physical, &b), Err(MetricsError::Untranslated("h")));
    }

    #[test]
    fn layout_quality_adjacent_pairs_collapse_to_edge_eps() {
        let b = uniform_backend(2, 0.0, 0.01, 0.0);
        let mut c = QuantumCircuit::new(2, QubitSpace::Logical);
        c.push(GateKind::Cz, &[0, 1]);
        let layout = Layout::new(vec![0, 1], 2);
        let lq = layout_quality(&c, &b, &layout).unwrap();
        // d_path = 1 so eps_eff = edge eps; decoherence over 1 layer.
        let want = 0.99 * decoherence_factor(1, 300e-9, &[0, 1], &b);
        assert!((lq - want).abs() < 1e-12);
    }

    #[test]
    fn layout_quality_distance_three_gate_factor() {
        let b = uniform_backend(4, 0.0, 0.01, 0.0);
        let mut c = QuantumCircuit::new(2, QubitSpace::Logical);
        c.push(GateKind::Cz, &[0, 1]);
        let layout = Layout::new(vec![0, 3], 4);
        let lq = layout_quality(&c, &b, &layout).unwrap();
        // eps_eff = 2*3*0.01 + 0.01 = 0.07; predicted depth 1 + 6 layers.
        let wires = [0, 1, 2, 3];
        let want = (1.0 - 0.07) * decoherence_factor(7, 300e-9, &wires, &b);
        assert!((lq - want).abs() < 1e-12, "lq {lq} want {want}");
    }

    #[test]
    fn layout_quality_decreases_with_distance() {
        let b = uniform_backend(4, 0.0, 0.01, 0.0);
        let mut c = QuantumCircuit::new(2, QubitSpace::Logical);
        c.push(GateKind::Cz, &[0, 1]);
        let near = layout_quality(&c, &b, &Layout::new(vec![0, 1], 4)).unwrap();
        let mid = layout_quality(&c, &b, &Layout::new(vec![0, 2], 4)).unwrap();
        let far = layout_quality(&c, &b, &Layout::new(vec![0, 3], 4)).unwrap();
        assert!(near > mid && mid > far);
    }

    #[test]
    fn proxy_chain_consistency() {
        // On a routed and translated circuit RQ equals ESP exactly.
        let b = uniform_backend(3, 0.002, 0.015, 0.02);
        let mut c = QuantumCircuit::new(3, QubitSpace::Physical);
        c.push(GateKind::Sx, &[0]);
        c.push(GateKind::Cz, &[0, 1]);
        c.push(GateKind::Rz(0.3), &[1]);
        c.push(GateKind::Cz, &[1, 2]);
        c.push_measure(2);
        assert_eq!(esp(&c, &b).unwrap(), routing_quality(&c, &b).unwrap());
    }

    #[test]
    fn routing_quality_swap_cubed() {
        let b = uniform_backend(2, 0.0, 0.1, 0.0);
        let mut with_swap = QuantumCircuit::new(2, QubitSpace::Physical);
        with_swap.push(GateKind::Swap, &[0, 1]);
        let mut with_cz = QuantumCircuit::new(2, QubitSpace::Physical);
        with_cz.push(GateKind::Cz, &[0, 1]);
        let rq_swap = routing_quality(&with_swap, &b).unwrap();
        let rq_cz = routing_quality(&with_cz, &b).unwrap();
        let deco = decoherence_factor(1, 300e-9, &[0, 1], &b);
        assert!((rq_swap - 0.9f64.powi(3) * deco).abs() < 1e-12);
        assert!((rq_cz - 0.9 * deco).abs() < 1e-12);
    }

    #[test]
    fn tvd_basics() {
        let p = Distribution::point("0");
        assert_eq!(tvd(&p, &p), 0.0);
        let q = Distribution::point("1");
        assert_eq!(tvd(&p, &q), 1.0);
        let mut m1 = BTreeMap::new();
        m1.insert("0".to_string(), 0.75);
        m1.insert("1".to_string(), 0.25);
        let mut m2 = BTreeMap::new();
        m2.insert("0".to_string(), 0.5);
        m2.insert("1".to_string(), 0.5);
        let d1 = Distribution::from_probs(1, m1);
        let d2 = Distribution::from_probs(1, m2);
        assert!((tvd(&d1, &d2) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn final_reward_zero_at_parity() {
        let w = RewardWeights::default();
        let r = final_reward(0.8, 0.8, 50, 50, 20, 20, &w).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn final_reward_log_ratio() {
        let w = RewardWeights::default();
        let r = final_reward(0.8, 0.4, 50, 50, 20, 20, &w).unwrap();
        assert!((r - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn final_reward_zero_esp_hits_clip_floor() {
        let w = RewardWeights::default();
        let r = final_reward(0.0, 0.5, 50, 50, 20, 20, &w).unwrap();
        assert_eq!(r, -w.clip * w.esp_weight);
    }

    #[test]
    fn final_reward_increasing_in_esp_within_band() {
        let w = RewardWeights::default();
        let mut prev = f64::NEG_INFINITY;
        for esp_rl in [0.2, 0.4, 0.6, 0.8, 1.0] {
            let r = final_reward(esp_rl, 0.5, 10, 10, 5, 5, &w).unwrap();
            assert!(r > prev);
            prev = r;
        }
    }
}
