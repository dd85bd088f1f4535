//! Dense statevector simulator with stochastic Pauli noise injection and
//! shot sampling.
//!
//! Noise is modeled per Monte-Carlo trajectory: after each gate a random
//! Pauli may be inserted on the gate's operands (depolarizing), each depth
//! layer charges amplitude/phase damping as stochastic X/Z insertions, and
//! measured bits flip with the readout error probability. Trajectories are
//! independent and carry derived seeds, so a parallel run produces exactly
//! the sequential result.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::BackendModel;
use crate::circuit::{GateKind, QuantumCircuit, QubitSpace};
use crate::metrics::Distribution;

/// Dense statevector bound.
pub const MAX_SIM_QUBITS: usize = 14;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("{0} qubits exceed the {MAX_SIM_QUBITS}-qubit statevector bound")]
    TooManyQubits(usize),
    #[error("noisy simulation requires a physical circuit")]
    NotPhysical,
    #[error("noisy simulation requires basis gates, found `{0}`")]
    OutOfBasis(&'static str),
    #[error("two-qubit gate on ({0}, {1}) is not on a coupling edge")]
    NotCoupled(usize, usize),
    #[error("shots must be >= 1")]
    ZeroShots,
}

/// Stochastic noise-injection configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub enabled: bool,
    /// Multiplier applied to every error probability (gate, damping, readout).
    pub noise_scale: f64,
    /// Multiplier >= 1 applied to T1/T2 (longer coherence).
    pub t1_t2_scale: f64,
    pub seed: u64,
    pub shots: usize,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            noise_scale: 1.0,
            t1_t2_scale: 1.0,
            seed: 0,
            shots: 8192,
        }
    }
}

/// Statevector over `num_qubits` wires; index bit q holds qubit q.
#[derive(Debug, Clone)]
pub struct Statevector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    pub fn zero_state(num_qubits: usize) -> Result<Self, SimError> {
        if num_qubits > MAX_SIM_QUBITS {
            return Err(SimError::TooManyQubits(num_qubits));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amps })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn apply_1q_matrix(&mut self, q: usize, m: [[Complex64; 2]; 2]) {
        let bit = 1usize << q;
        for base in 0..self.amps.len() {
            if base & bit != 0 {
                continue;
            }
            let i0 = base;
            let i1 = base | bit;
            let a0 = self.amps[i0];
            let a1 = self.amps[i1];
            self.amps[i0] = m[0][0] * a0 + m[0][1] * a1;
            self.amps[i1] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    fn apply_phase_if(&mut self, predicate: impl Fn(usize) -> bool, phase: Complex64) {
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            if predicate(idx) {
                *amp *= phase;
            }
        }
    }

    /// Applies a gate; measurements are identity during evolution.
    pub fn apply(&mut self, kind: GateKind, qubits: &[usize]) {
        let half = std::f64::consts::FRAC_1_SQRT_2;
        match kind {
            GateKind::I | GateKind::Measure => {}
            GateKind::X => {
                let bit = 1usize << qubits[0];
                for base in 0..self.amps.len() {
                    if base & bit == 0 {
                        self.amps.swap(base, base | bit);
                    }
                }
            }
            GateKind::Sx => {
                let p = Complex64::new(0.5, 0.5);
                let m = Complex64::new(0.5, -0.5);
                self.apply_1q_matrix(qubits[0], [[p, m], [m, p]]);
            }
            GateKind::Rz(theta) => {
                let bit = 1usize << qubits[0];
                let neg = Complex64::from_polar(1.0, -theta / 2.0);
                let pos = Complex64::from_polar(1.0, theta / 2.0);
                for (idx, amp) in self.amps.iter_mut().enumerate() {
                    *amp *= if idx & bit == 0 { neg } else { pos };
                }
            }
            GateKind::H => {
                let h = Complex64::new(half, 0.0);
                self.apply_1q_matrix(qubits[0], [[h, h], [h, -h]]);
            }
            GateKind::S => {
                let bit = 1usize << qubits[0];
                self.apply_phase_if(|idx| idx & bit != 0, Complex64::new(0.0, 1.0));
            }
            GateKind::T => {
                let bit = 1usize << qubits[0];
                let phase = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
                self.apply_phase_if(|idx| idx & bit != 0, phase);
            }
            GateKind::Cx => {
                let (c, t) = (1usize << qubits[0], 1usize << qubits[1]);
                for base in 0..self.amps.len() {
                    if base & c != 0 && base & t == 0 {
                        self.amps.swap(base, base | t);
                    }
                }
            }
            GateKind::Cz => {
                let (a, b) = (1usize << qubits[0], 1usize << qubits[1]);
                self.apply_phase_if(
                    |idx| idx & a != 0 && idx & b != 0,
                    Complex64::new(-1.0, 0.0),
                );
            }
            GateKind::Swap => {
                let (a, b) = (1usize << qubits[0], 1usize << qubits[1]);
                for base in 0..self.amps.len() {
                    if base & a != 0 && base & b == 0 {
                        self.amps.swap(base, (base & !a) | b);
                    }
                }
            }
            GateKind::Ccx => {
                let (c0, c1, t) = (
                    1usize << qubits[0],
                    1usize << qubits[1],
                    1usize << qubits[2],
                );
                for base in 0..self.amps.len() {
                    if base & c0 != 0 && base & c1 != 0 && base & t == 0 {
                        self.amps.swap(base, base | t);
                    }
                }
            }
        }
    }

    fn apply_pauli(&mut self, q: usize, pauli: u8) {
        match pauli {
            1 => self.apply(GateKind::X, &[q]),
            2 => {
                // Y = i X Z as a single 2x2 application.
                let zero = Complex64::new(0.0, 0.0);
                let mi = Complex64::new(0.0, -1.0);
                let pi = Complex64::new(0.0, 1.0);
                self.apply_1q_matrix(q, [[zero, mi], [pi, zero]]);
            }
            3 => {
                let bit = 1usize << q;
                self.apply_phase_if(|idx| idx & bit != 0, Complex64::new(-1.0, 0.0));
            }
            _ => {}
        }
    }

    /// Probability of each measured-bit outcome, marginalizing unmeasured
    /// wires. Classical bit 0 is the leftmost character of the key.
    fn measured_distribution(&self, measured: &[usize]) -> BTreeMap<String, f64> {
        let mut probs: BTreeMap<String, f64> = BTreeMap::new();
        for (idx, amp) in self.amps.iter().enumerate() {
            let p = amp.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let key = bits_of(idx, measured);
            *probs.entry(key).or_insert(0.0) += p;
        }
        probs
    }

    /// Samples one basis state index from the amplitude distribution.
    fn sample_index(&self, rng: &mut ChaCha8Rng) -> usize {
        let draw: f64 = rng.gen();
        let mut acc = 0.0;
        for (idx, amp) in self.amps.iter().enumerate() {
            acc += amp.norm_sqr();
            if draw < acc {
                return idx;
            }
        }
        self.amps.len() - 1
    }
}

fn bits_of(index: usize, measured: &[usize]) -> String {
    measured
        .iter()
        .map(|&q| if index & (1 << q) != 0 { '1' } else { '0' })
        .collect()
}

/// Simulation view restricted to touched wires. Untouched wires stay |0>,
/// couple to nothing, and are never measured, so dropping them is exact;
/// `origin[w]` maps a compact wire back to its original index for
/// calibration lookups.
struct CompactCircuit {
    circuit: QuantumCircuit,
    origin: Vec<usize>,
}

fn compact_for_sim(c: &QuantumCircuit) -> CompactCircuit {
    let touched = c.touched_wires();
    let origin: Vec<usize> = (0..c.num_qubits).filter(|&q| touched[q]).collect();
    if origin.len() == c.num_qubits {
        return CompactCircuit {
            circuit: c.clone(),
            origin,
        };
    }
    let mut to_compact = vec![usize::MAX; c.num_qubits];
    for (new, &old) in origin.iter().enumerate() {
        to_compact[old] = new;
    }
    let mut compact = QuantumCircuit::new(origin.len(), c.qubit_space);
    // Keep the active-wire mask restricted to surviving wires.
    if let Some(mask) = &c.active_wires {
        compact.active_wires = Some(origin.iter().map(|&old| mask[old]).collect());
    }
    for instr in c.instructions() {
        if instr.kind.is_measure() {
            compact.push_measure(to_compact[instr.qubits()[0]]);
        } else {
            let qs: Vec<usize> = instr.qubits().iter().map(|&q| to_compact[q]).collect();
            compact.push(instr.kind, &qs);
        }
    }
    // Measurement map must preserve classical-bit order.
    debug_assert_eq!(compact.measured_qubits().len(), c.measured_qubits().len());
    let reordered: Vec<usize> = c.measured_qubits().iter().map(|&q| to_compact[q]).collect();
    let compact = QuantumCircuit::from_parts(
        compact.num_qubits,
        compact.instructions().to_vec(),
        reordered,
        compact.qubit_space,
    )
    .expect("compacted circuit is valid");
    CompactCircuit {
        circuit: compact,
        origin,
    }
}

/// Exact measurement distribution from statevector amplitudes.
pub fn ideal_distribution(c: &QuantumCircuit) -> Result<Distribution, SimError> {
    let compact = compact_for_sim(c);
    let c = &compact.circuit;
    let mut state = Statevector::zero_state(c.num_qubits)?;
    for instr in c.instructions() {
        state.apply(instr.kind, instr.qubits());
    }
    debug_assert!((state.norm_sq() - 1.0).abs() < 1e-10);
    let probs = state.measured_distribution(c.measured_qubits());
    Ok(Distribution::from_probs(c.measured_qubits().len(), probs))
}

struct LayerPlan {
    /// Instruction indices per depth layer.
    layers: Vec<Vec<usize>>,
    /// Slowest instruction duration per layer, seconds.
    durations: Vec<f64>,
}

fn plan_layers(c: &QuantumCircuit, b: &BackendModel) -> LayerPlan {
    let dag = c.dag();
    let mut layers = vec![Vec::new(); dag.depth()];
    let mut durations = vec![0.0f64; dag.depth()];
    for (idx, instr) in c.instructions().iter().enumerate() {
        let layer = dag.layer_of(idx);
        layers[layer].push(idx);
        let dur = if instr.kind.is_measure() {
            b.durations.measure
        } else if instr.kind.arity() == 1 {
            b.durations.one_qubit
        } else {
            b.durations.two_qubit
        };
        durations[layer] = durations[layer].max(dur);
    }
    LayerPlan { layers, durations }
}

/// Empirical distribution over `cfg.shots` noisy trajectories.
///
/// With noise disabled (or `noise_scale == 0`) this samples from the ideal
/// distribution; with noise enabled the circuit must be physical, in basis,
/// and connectivity-satisfying.
pub fn noisy_distribution(
    c: &QuantumCircuit,
    b: &BackendModel,
    cfg: &NoiseConfig,
) -> Result<Distribution, SimError> {
    if cfg.shots == 0 {
        return Err(SimError::ZeroShots);
    }
    let noisy = cfg.enabled && cfg.noise_scale > 0.0;
    if noisy {
        if c.qubit_space != QubitSpace::Physical {
            return Err(SimError::NotPhysical);
        }
        for instr in c.instructions() {
            if !instr.kind.in_basis() {
                return Err(SimError::OutOfBasis(instr.kind.name()));
            }
            if instr.kind.arity() == 2 {
                let qs = instr.qubits();
                if !b.has_edge(qs[0], qs[1]) {
                    return Err(SimError::NotCoupled(qs[0], qs[1]));
                }
            }
        }
    }

    let compact = compact_for_sim(c);
    let c = &compact.circuit;
    let origin = &compact.origin;
    if c.num_qubits > MAX_SIM_QUBITS {
        return Err(SimError::TooManyQubits(c.num_qubits));
    }

    let plan = plan_layers(c, b);
    let active = c.decoherence_wires();
    let scale = cfg.noise_scale;
    let t1_scale = cfg.t1_t2_scale.max(1.0);

    let outcomes: Vec<String> = (0..cfg.shots)
        .into_par_iter()
        .map(|shot| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, shot as u64));
            let mut state =
                Statevector::zero_state(c.num_qubits).expect("width checked above");
            for (layer_idx, layer) in plan.layers.iter().enumerate() {
                for &idx in layer {
                    let instr = c.instructions()[idx];
                    state.apply(instr.kind, instr.qubits());
                    if noisy && !instr.kind.is_measure() {
                        let qs = instr.qubits();
                        let eps = match instr.kind.arity() {
                            1 => b.eps_1q[origin[qs[0]]],
                            _ => b.eps_2q(origin[qs[0]], origin[qs[1]]),
                        };
                        let p = (scale * eps).clamp(0.0, 1.0);
                        if rng.gen_bool(p) {
                            // Uniform non-identity Pauli over the operands.
                            let combos = 4usize.pow(qs.len() as u32);
                            let pick = rng.gen_range(1..combos);
                            for (i, &q) in qs.iter().enumerate() {
                                let pauli = ((pick >> (2 * i)) & 3) as u8;
                                state.apply_pauli(q, pauli);
                            }
                        }
                    }
                }
                if noisy {
                    let t_layer = plan.durations[layer_idx];
                    for &q in &active {
                        let t1 = b.t1[origin[q]] * t1_scale;
                        let t2 = b.t2[origin[q]] * t1_scale;
                        // Pure dephasing rate: 1/T2 - 1/(2 T1), floored at 0.
                        let dephase_rate = (1.0 / t2 - 1.0 / (2.0 * t1)).max(0.0);
                        let p_x = (scale * (1.0 - (-t_layer / t1).exp())).clamp(0.0, 1.0);
                        let p_z =
                            (scale * (1.0 - (-t_layer * dephase_rate).exp())).clamp(0.0, 1.0);
                        if rng.gen_bool(p_x) {
                            state.apply_pauli(q, 1);
                        }
                        if rng.gen_bool(p_z) {
                            state.apply_pauli(q, 3);
                        }
                    }
                }
            }
            debug_assert!((state.norm_sq() - 1.0).abs() < 1e-10);
            let index = state.sample_index(&mut rng);
            let mut bits: Vec<u8> = bits_of(index, c.measured_qubits()).into_bytes();
            if noisy {
                for (pos, &q) in c.measured_qubits().iter().enumerate() {
                    let p = (scale * b.eps_readout[origin[q]]).clamp(0.0, 1.0);
                    if rng.gen_bool(p) {
                        bits[pos] = if bits[pos] == b'0' { b'1' } else { b'0' };
                    }
                }
            }
            String::from_utf8(bits).expect("bitstring is ascii")
        })
        .collect();

    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for key in outcomes {
        *counts.entry(key).or_insert(0) += 1;
    }
    Ok(Distribution::from_counts(
        c.measured_qubits().len(),
        &counts,
        cfg.shots,
    ))
}

/// Trajectory seed derivation (splitmix64 over the shot index).
fn derive_seed(seed: u64, shot: u64) -> u64 {
    let mut z = seed ^ shot.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{synthetic_backend, NoiseProfile, TopologyKind};
    use crate::circuit::generate::{benchmark_circuit, BenchmarkKind};
    use crate::metrics::tvd;

    #[test]
    fn ghz3_ideal_distribution() {
        let c = benchmark_circuit(BenchmarkKind::Ghz, 3).unwrap();
        let d = ideal_distribution(&c).unwrap();
        assert!((d.prob("000") - 0.5).abs() < 1e-12);
        assert!((d.prob("111") - 0.5).abs() < 1e-12);
        assert_eq!(d.support_len(), 2);
    }

    #[test]
    fn empty_circuit_all_zeros() {
        let mut c = QuantumCircuit::new(3, QubitSpace::Logical);
        for q in 0..3 {
            c.push_measure(q);
        }
        let d = ideal_distribution(&c).unwrap();
        assert_eq!(d.prob("000"), 1.0);
    }

    #[test]
    fn qft4_uniform_from_zero_state() {
        let c = benchmark_circuit(BenchmarkKind::Qft, 4).unwrap();
        let d = ideal_distribution(&c).unwrap();
        assert_eq!(d.support_len(), 16);
        for (_, p) in d.iter() {
            assert!((p - 1.0 / 16.0).abs() < 1e-12);
        }
    }

    #[test]
    fn deutsch_jozsa_constant_oracle_all_zeros() {
        let c = benchmark_circuit(BenchmarkKind::DeutschJozsa, 4).unwrap();
        let d = ideal_distribution(&c).unwrap();
        assert!((d.prob("000") - 1.0).abs() < 1e-9);
    }

    #[test]
    fn qpe_deterministic_peak() {
        let c = benchmark_circuit(BenchmarkKind::Qpe, 4).unwrap();
        let d = ideal_distribution(&c).unwrap();
        let peak = d.iter().map(|(_, p)| p).fold(0.0, f64::max);
        assert!(peak > 1.0 - 1e-9, "counting register should collapse, peak {peak}");
    }

    #[test]
    fn grover_matches_analytic_success_probability() {
        for n in [2usize, 3] {
            let c = benchmark_circuit(BenchmarkKind::Grover, n).unwrap();
            let d = ideal_distribution(&c).unwrap();
            let marked = "1".repeat(n);
            let want = crate::circuit::generate::grover_success_probability(n);
            assert!(
                (d.prob(&marked) - want).abs() < 1e-9,
                "n={n}: got {}, want {want}",
                d.prob(&marked)
            );
        }
    }

    #[test]
    fn noise_off_matches_ideal_sampling() {
        let c = benchmark_circuit(BenchmarkKind::Ghz, 3).unwrap();
        let b = synthetic_backend(TopologyKind::Line, 3, NoiseProfile::default_uniform()).unwrap();
        let cfg = NoiseConfig {
            enabled: false,
            shots: 8192,
            seed: 5,
            ..NoiseConfig::default()
        };
        let noisy = noisy_distribution(&c, &b, &cfg).unwrap();
        let ideal = ideal_distribution(&c).unwrap();
        let gap = tvd(&ideal, &noisy);
        assert!(gap <= 0.05, "sampling-only TVD {gap} too large at 8192 shots");
    }

    #[test]
    fn zero_scale_equals_disabled() {
        let c = benchmark_circuit(BenchmarkKind::Ghz, 3).unwrap();
        let b = synthetic_backend(TopologyKind::Line, 3, NoiseProfile::default_uniform()).unwrap();
        let off = NoiseConfig {
            enabled: false,
            shots: 512,
            seed: 9,
            ..NoiseConfig::default()
        };
        let zero = NoiseConfig {
            enabled: true,
            noise_scale: 0.0,
            shots: 512,
            seed: 9,
            t1_t2_scale: 1.0,
        };
        assert_eq!(
            noisy_distribution(&c, &b, &off).unwrap(),
            noisy_distribution(&c, &b, &zero).unwrap()
        );
    }

    #[test]
    fn fixed_seed_bit_identical() {
        let c = benchmark_circuit(BenchmarkKind::Ghz, 3).unwrap();
        // Physical relabeling so noise can be enabled.
        let c = c.relabeled(&[0, 1, 2], 3, QubitSpace::Physical);
        let mut basis = QuantumCircuit::new(3, QubitSpace::Physical);
        // Hand-translated GHZ-3: H = RZ(pi/2) SX RZ(pi/2), CX = H-conjugated CZ.
        let h = |c: &mut QuantumCircuit, q: usize| {
            c.push(GateKind::Rz(std::f64::consts::FRAC_PI_2), &[q]);
            c.push(GateKind::Sx, &[q]);
            c.push(GateKind::Rz(std::f64::consts::FRAC_PI_2), &[q]);
        };
        h(&mut basis, 0);
        h(&mut basis, 1);
        basis.push(GateKind::Cz, &[0, 1]);
        h(&mut basis, 1);
        h(&mut basis, 2);
        basis.push(GateKind::Cz, &[1, 2]);
        h(&mut basis, 2);
        for q in 0..3 {
            basis.push_measure(q);
        }
        let _ = c;
        let b = synthetic_backend(TopologyKind::Line, 3, NoiseProfile::default_uniform()).unwrap();
        let cfg = NoiseConfig {
            shots: 2048,
            seed: 1234,
            ..NoiseConfig::default()
        };
        let d1 = noisy_distribution(&basis, &b, &cfg).unwrap();
        let d2 = noisy_distribution(&basis, &b, &cfg).unwrap();
        assert_eq!(d1, d2);
    }

    #[test]
    fn statevector_norm_preserved() {
        let c = benchmark_circuit(BenchmarkKind::Qft, 5).unwrap();
        let mut state = Statevector::zero_state(5).unwrap();
        for instr in c.instructions() {
            state.apply(instr.kind, instr.qubits());
            assert!((state.norm_sq() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_oversized_register() {
        let mut c = QuantumCircuit::new(15, QubitSpace::Logical);
        for q in 0..15 {
            c.push(GateKind::X, &[q]);
        }
        assert_eq!(
            ideal_distribution(&c).unwrap_err(),
            SimError::TooManyQubits(15)
        );
        // Wide register, narrow footprint: compaction keeps it simulable.
        let mut sparse = QuantumCircuit::new(15, QubitSpace::Logical);
        sparse.push(GateKind::X, &[14]);
        sparse.push_measure(14);
        let d = ideal_distribution(&sparse).unwrap();
        assert_eq!(d.prob("1"), 1.0);
    }
}
