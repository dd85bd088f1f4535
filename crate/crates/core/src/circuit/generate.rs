//! Random-circuit and benchmark-circuit generators.
//!
//! All generators are pure functions of their arguments and seed.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CircuitError, GateKind, QuantumCircuit, QubitSpace};

/// Standard algorithm benchmarks with analytically known ideal outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BenchmarkKind {
    Ghz,
    Qft,
    Qpe,
    DeutschJozsa,
    Grover,
}

impl BenchmarkKind {
    pub fn name(self) -> &'static str {
        match self {
            BenchmarkKind::Ghz => "ghz",
            BenchmarkKind::Qft => "qft",
            BenchmarkKind::Qpe => "qpe",
            BenchmarkKind::DeutschJozsa => "deutsch_jozsa",
            BenchmarkKind::Grover => "grover",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "ghz" => Some(BenchmarkKind::Ghz),
            "qft" => Some(BenchmarkKind::Qft),
            "qpe" => Some(BenchmarkKind::Qpe),
            "deutsch_jozsa" | "dj" => Some(BenchmarkKind::DeutschJozsa),
            "grover" => Some(BenchmarkKind::Grover),
            _ => None,
        }
    }
}

/// Random logical circuit mixing 1q and 2q gates with terminal measurements
/// on all qubits. Realized depth is `depth_target + 1` (the measure layer),
/// always within the rounded +-20% window of the target.
pub fn random_circuit(n: usize, depth_target: usize, seed: u64) -> QuantumCircuit {
    assert!(n >= 2, "random_circuit requires n >= 2");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = QuantumCircuit::new(n, QubitSpace::Logical);
    let mut wire_depth = vec![0usize; n];

    for _ in 0..depth_target {
        let max_depth = wire_depth.iter().copied().max().unwrap_or(0);
        let mut used = vec![false; n];
        let mut layer: Vec<(GateKind, Vec<usize>)> = Vec::new();
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        for &q in &order {
            if used[q] {
                continue;
            }
            let roll: f64 = rng.gen();
            if roll < 0.35 {
                let partners: Vec<usize> = (0..n).filter(|&p| p != q && !used[p]).collect();
                if partners.is_empty() {
                    used[q] = true;
                    layer.push((random_1q_gate(&mut rng), vec![q]));
                } else {
                    let p = partners[rng.gen_range(0..partners.len())];
                    let kind = if rng.gen_bool(0.5) { GateKind::Cx } else { GateKind::Cz };
                    used[q] = true;
                    used[p] = true;
                    layer.push((kind, vec![q, p]));
                }
            } else if roll < 0.80 {
                used[q] = true;
                layer.push((random_1q_gate(&mut rng), vec![q]));
            }
        }
        // Keep the critical path growing: some gate must touch a max-depth
        // wire so realized depth tracks the target exactly.
        let touches_frontier = layer
            .iter()
            .any(|(_, qs)| qs.iter().any(|&q| wire_depth[q] == max_depth));
        if !touches_frontier {
            let q = (0..n).find(|&q| wire_depth[q] == max_depth).unwrap();
            layer.push((random_1q_gate(&mut rng), vec![q]));
        }
        for (kind, qs) in layer {
            let new_depth = qs.iter().map(|&q| wire_depth[q]).max().unwrap() + 1;
            for &q in &qs {
                wire_depth[q] = new_depth;
            }
            c.push(kind, &qs);
        }
    }
    for q in 0..n {
        c.push_measure(q);
    }
    c
}

fn random_1q_gate(rng: &mut ChaCha8Rng) -> GateKind {
    match rng.gen_range(0..6) {
        0 => GateKind::X,
        1 => GateKind::Sx,
        2 => GateKind::H,
        3 => GateKind::S,
        4 => GateKind::T,
        _ => GateKind::Rz(rng.gen_range(-PI..PI)),
    }
}

/// Builds a textbook benchmark circuit.
///
/// Per-kind bounds: GHZ/QFT/DJ require n >= 2, QPE requires n >= 2 (one
/// eigenstate qubit plus n-1 counting qubits), Grover supports n in {2, 3}.
pub fn benchmark_circuit(kind: BenchmarkKind, n: usize) -> Result<QuantumCircuit, CircuitError> {
    match kind {
        BenchmarkKind::Ghz => ghz(n),
        BenchmarkKind::Qft => qft(n),
        BenchmarkKind::Qpe => qpe(n),
        BenchmarkKind::DeutschJozsa => deutsch_jozsa(n),
        BenchmarkKind::Grover => grover(n),
    }
}

fn bounds_err(kind: &'static str, requirement: &'static str, n: usize) -> CircuitError {
    CircuitError::WidthBounds {
        kind,
        requirement,
        n,
    }
}

fn ghz(n: usize) -> Result<QuantumCircuit, CircuitError> {
    if n < 2 {
        return Err(bounds_err("ghz", "n >= 2", n));
    }
    let mut c = QuantumCircuit::new(n, QubitSpace::Logical);
    c.push(GateKind::H, &[0]);
    for q in 1..n {
        c.push(GateKind::Cx, &[q - 1, q]);
    }
    for q in 0..n {
        c.push_measure(q);
    }
    Ok(c)
}

/// Controlled phase via the standard five-gate RZ/CX pattern (equivalent to
/// the textbook construction up to global phase).
fn push_cp(c: &mut QuantumCircuit, theta: f64, control: usize, target: usize) {
    c.push(GateKind::Rz(theta / 2.0), &[control]);
    c.push(GateKind::Cx, &[control, target]);
    c.push(GateKind::Rz(-theta / 2.0), &[target]);
    c.push(GateKind::Cx, &[control, target]);
    c.push(GateKind::Rz(theta / 2.0), &[target]);
}

fn push_qft_body(c: &mut QuantumCircuit, qubits: &[usize], inverse: bool) {
    let n = qubits.len();
    let mut ops: Vec<(usize, Option<(usize, f64)>)> = Vec::new();
    for j in 0..n {
        ops.push((qubits[j], None));
        for k in j + 1..n {
            let theta = PI / (1 << (k - j)) as f64;
            ops.push((qubits[j], Some((qubits[k], theta))));
        }
    }
    let swaps: Vec<(usize, usize)> = (0..n / 2).map(|i| (qubits[i], qubits[n - 1 - i])).collect();
    if inverse {
        for &(a, b) in swaps.iter().rev() {
            c.push(GateKind::Swap, &[a, b]);
        }
        for &(target, op) in ops.iter().rev() {
            match op {
                None => c.push(GateKind::H, &[target]),
                Some((control, theta)) => push_cp(c, -theta, control, target),
            }
        }
    } else {
        for &(target, op) in &ops {
            match op {
                None => c.push(GateKind::H, &[target]),
                Some((control, theta)) => push_cp(c, theta, control, target),
            }
        }
        for &(a, b) in &swaps {
            c.push(GateKind::Swap, &[a, b]);
        }
    }
}

fn qft(n: usize) -> Result<QuantumCircuit, CircuitError> {
    if n < 2 {
        return Err(bounds_err("qft", "n >= 2", n));
    }
    let mut c = QuantumCircuit::new(n, QubitSpace::Logical);
    let qubits: Vec<usize> = (0..n).collect();
    push_qft_body(&mut c, &qubits, false);
    for q in 0..n {
        c.push_measure(q);
    }
    Ok(c)
}

/// Phase estimation of a diagonal phase gate with an exactly representable
/// phase (1/2 for one counting qubit, 1/4 otherwise), so the counting
/// register collapses deterministically.
fn qpe(n: usize) -> Result<QuantumCircuit, CircuitError> {
    if n < 2 {
        return Err(bounds_err("qpe", "n >= 2 (one eigenstate qubit)", n));
    }
    let m = n - 1;
    let eigen = n - 1;
    let phase = if m == 1 { 0.5 } else { 0.25 };
    let mut c = QuantumCircuit::new(n, QubitSpace::Logical);
    c.push(GateKind::X, &[eigen]);
    for j in 0..m {
        c.push(GateKind::H, &[j]);
    }
    // Counting qubit 0 carries the most significant phase bit, matching the
    // QFT body's bit convention.
    for j in 0..m {
        let theta = 2.0 * PI * phase * (1u64 << (m - 1 - j)) as f64;
        let theta = theta.rem_euclid(2.0 * PI);
        if theta.abs() > 1e-12 {
            push_cp(&mut c, theta, j, eigen);
        }
    }
    let counting: Vec<usize> = (0..m).collect();
    push_qft_body(&mut c, &counting, true);
    for q in 0..m {
        c.push_measure(q);
    }
    Ok(c)
}

/// Constant-zero oracle; measuring the query register yields all zeros with
/// probability one under ideal execution.
fn deutsch_jozsa(n: usize) -> Result<QuantumCircuit, CircuitError> {
    if n < 2 {
        return Err(bounds_err("deutsch_jozsa", "n >= 2 (one ancilla)", n));
    }
    let ancilla = n - 1;
    let mut c = QuantumCircuit::new(n, QubitSpace::Logical);
    c.push(GateKind::X, &[ancilla]);
    for q in 0..n {
        c.push(GateKind::H, &[q]);
    }
    // Constant-zero oracle: identity.
    for q in 0..n - 1 {
        c.push(GateKind::H, &[q]);
    }
    for q in 0..n - 1 {
        c.push_measure(q);
    }
    Ok(c)
}

/// Search for the all-ones item with the textbook iteration count.
fn grover(n: usize) -> Result<QuantumCircuit, CircuitError> {
    if !(2..=3).contains(&n) {
        return Err(bounds_err("grover", "n in {2, 3}", n));
    }
    let iterations = ((PI / 4.0) * ((1u64 << n) as f64).sqrt()).round().max(1.0) as usize;
    let mut c = QuantumCircuit::new(n, QubitSpace::Logical);
    let push_marked_phase = |c: &mut QuantumCircuit| {
        // Phase flip on |1..1>.
        if n == 2 {
            c.push(GateKind::Cz, &[0, 1]);
        } else {
            c.push(GateKind::H, &[2]);
            c.push(GateKind::Ccx, &[0, 1, 2]);
            c.push(GateKind::H, &[2]);
        }
    };
    for q in 0..n {
        c.push(GateKind::H, &[q]);
    }
    for _ in 0..iterations {
        push_marked_phase(&mut c);
        for q in 0..n {
            c.push(GateKind::H, &[q]);
        }
        for q in 0..n {
            c.push(GateKind::X, &[q]);
        }
        push_marked_phase(&mut c);
        for q in 0..n {
            c.push(GateKind::X, &[q]);
        }
        for q in 0..n {
            c.push(GateKind::H, &[q]);
        }
    }
    for q in 0..n {
        c.push_measure(q);
    }
    Ok(c)
}

/// GHZ ideal distribution: half |0..0>, half |1..1>.
pub fn ghz_ideal_probability(n: usize, bits: &str) -> f64 {
    let all0 = "0".repeat(n);
    let all1 = "1".repeat(n);
    if bits == all0 || bits == all1 {
        0.5
    } else {
        0.0
    }
}

/// Grover success probability sin^2((2k+1) asin(2^{-n/2})) for k iterations.
pub fn grover_success_probability(n: usize) -> f64 {
    let k = ((PI / 4.0) * ((1u64 << n) as f64).sqrt()).round().max(1.0);
    let theta = (1.0 / ((1u64 << n) as f64).sqrt()).asin();
    ((2.0 * k + 1.0) * theta).sin().powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_circuit_is_deterministic() {
        let a = random_circuit(5, 10, 7);
        let b = random_circuit(5, 10, 7);
        assert_eq!(a, b);
    }

    #[test]
    fn random_circuit_indices_in_range() {
        for seed in 0..100u64 {
            let n = 5 + (seed as usize % 11); // 5..=15
            let depth = 2 * n + (seed as usize % (3 * n + 1)); // 2n..=5n
            let c = random_circuit(n, depth, seed);
            assert!(c
                .instructions()
                .iter()
                .all(|i| i.qubits().iter().all(|&q| q < n)));
            c.validate().unwrap();
        }
    }

    #[test]
    fn random_circuit_depth_window() {
        let c = random_circuit(2, 4, 0);
        let d = c.depth();
        assert!((3..=5).contains(&d), "depth {d} outside [3, 5]");
        for seed in 0..50u64 {
            let n = 4 + (seed as usize % 8);
            let target = 2 * n;
            let d = random_circuit(n, target, seed).depth();
            let lo = (0.8 * target as f64).floor() as usize;
            let hi = (1.2 * target as f64).ceil() as usize;
            assert!(
                (lo..=hi).contains(&d),
                "depth {d} outside [{lo}, {hi}] for target {target}"
            );
        }
    }

    #[test]
    fn ghz4_gate_counts() {
        let c = benchmark_circuit(BenchmarkKind::Ghz, 4).unwrap();
        let counts = c.gate_counts();
        assert_eq!(counts.one_qubit, 1);
        assert_eq!(counts.two_qubit, 3);
        assert_eq!(counts.three_qubit, 0);
        assert_eq!(counts.measurements, 4);
    }

    #[test]
    fn benchmark_bounds_checked() {
        assert!(benchmark_circuit(BenchmarkKind::Ghz, 1).is_err());
        assert!(benchmark_circuit(BenchmarkKind::Grover, 4).is_err());
        assert!(benchmark_circuit(BenchmarkKind::Qpe, 1).is_err());
    }

    #[test]
    fn grover_has_ccx_only_at_three_qubits() {
        let g2 = benchmark_circuit(BenchmarkKind::Grover, 2).unwrap();
        assert!(g2.free_of_three_qubit_gates());
        let g3 = benchmark_circuit(BenchmarkKind::Grover, 3).unwrap();
        assert!(!g3.free_of_three_qubit_gates());
    }
}
