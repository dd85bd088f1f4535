//! Corpus-level properties: serialization round-trips, depth-oracle
//! agreement, and the metric axioms of total variation distance.

use std::collections::BTreeMap;

use proptest::prelude::*;

use passforge_core::circuit::generate::{benchmark_circuit, random_circuit, BenchmarkKind};
use passforge_core::circuit::qasm::{parse_qasm_subset, serialize_qasm_subset};
use passforge_core::circuit::QuantumCircuit;
use passforge_core::metrics::{tvd, Distribution};

fn corpus() -> Vec<QuantumCircuit> {
    let mut out = Vec::new();
    for seed in 0..60u64 {
        let n = 2 + (seed as usize % 7);
        out.push(random_circuit(n, n * 2 + 3, seed));
    }
    for (kind, n) in [
        (BenchmarkKind::Ghz, 5),
        (BenchmarkKind::Qft, 5),
        (BenchmarkKind::Qpe, 5),
        (BenchmarkKind::DeutschJozsa, 5),
        (BenchmarkKind::Grover, 3),
    ] {
        out.push(benchmark_circuit(kind, n).unwrap());
    }
    out
}

/// parse . serialize is the identity on the instruction list for every
/// generator output.
#[test]
fn qasm_round_trip_over_generated_corpus() {
    for (i, circuit) in corpus().iter().enumerate() {
        let text = serialize_qasm_subset(circuit);
        let back = parse_qasm_subset(&text).unwrap_or_else(|e| panic!("circuit {i}: {e}"));
        assert_eq!(circuit, &back, "circuit {i} did not round-trip");
    }
}

/// DAG layering agrees with the naive per-qubit frontier scan everywhere.
#[test]
fn dag_depth_matches_frontier_scan_over_corpus() {
    for circuit in corpus() {
        let dag = circuit.dag();
        assert_eq!(dag.depth(), circuit.depth());
        // Layer consistency: layer_of = 1 + max over predecessors.
        for node in 0..dag.num_nodes() {
            let expected = dag
                .predecessors(node)
                .iter()
                .map(|&p| dag.layer_of(p) + 1)
                .max()
                .unwrap_or(0);
            assert_eq!(dag.layer_of(node), expected);
        }
    }
}

/// JSON mirrors round-trip exactly as well.
#[test]
fn json_round_trip_over_generated_corpus() {
    for circuit in corpus() {
        let back = QuantumCircuit::from_json(&circuit.to_json()).unwrap();
        assert_eq!(circuit, back);
    }
}

fn arbitrary_distribution(width: usize) -> impl Strategy<Value = Distribution> {
    prop::collection::vec(0.0f64..1.0, 1usize << width).prop_map(move |weights| {
        let total: f64 = weights.iter().sum::<f64>().max(1e-12);
        let probs: BTreeMap<String, f64> = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, &w)| {
                let bits: String = (0..width)
                    .map(|b| if i & (1 << b) != 0 { '1' } else { '0' })
                    .collect();
                (bits, w / total)
            })
            .collect();
        Distribution::from_probs(width, probs)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// TVD is a metric: nonnegative, zero iff equal supports-and-masses,
    /// symmetric, and satisfies the triangle inequality.
    #[test]
    fn tvd_is_a_metric(
        p in arbitrary_distribution(3),
        q in arbitrary_distribution(3),
        r in arbitrary_distribution(3),
    ) {
        let pq = tvd(&p, &q);
        prop_assert!(pq >= 0.0);
        prop_assert!(pq <= 1.0 + 1e-12);
        prop_assert!((pq - tvd(&q, &p)).abs() < 1e-12);
        prop_assert!(tvd(&p, &p) == 0.0);
        prop_assert!(pq <= tvd(&p, &r) + tvd(&r, &q) + 1e-12);
    }

    /// Disjoint supports sit at distance one.
    #[test]
    fn tvd_disjoint_supports_is_one(mass in 0.1f64..1.0) {
        let mut a = BTreeMap::new();
        a.insert("00".to_string(), mass);
        a.insert("01".to_string(), 1.0 - mass);
        let mut b = BTreeMap::new();
        b.insert("10".to_string(), 0.5);
        b.insert("11".to_string(), 0.5);
        let pa = Distribution::from_probs(2, a);
        let pb = Distribution::from_probs(2, b);
        prop_assert!((tvd(&pa, &pb) - 1.0).abs() < 1e-12);
    }
}
