//! Qubit-wise dependency DAG and depth layering.

use super::QuantumCircuit;

/// Dependency DAG over instruction indices with 0-based depth layers.
///
/// `layer_of[n]` is 0 for instructions with no predecessors, otherwise
/// `1 + max` over predecessor layers; `max layer + 1` equals circuit depth.
#[derive(Debug, Clone)]
pub struct CircuitDag {
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
    layer_of: Vec<usize>,
    depth: usize,
}

impl CircuitDag {
    pub fn build(circuit: &QuantumCircuit) -> Self {
        let n = circuit.instructions().len();
        let mut preds = vec![Vec::new(); n];
        let mut succs = vec![Vec::new(); n];
        let mut layer_of = vec![0usize; n];
        let mut last_on_wire: Vec<Option<usize>> = vec![None; circuit.num_qubits];
        let mut depth = 0;
        for (idx, instr) in circuit.instructions().iter().enumerate() {
            let mut layer = 0;
            for &q in instr.qubits() {
                if let Some(prev) = last_on_wire[q] {
                    if !preds[idx].contains(&prev) {
                        preds[idx].push(prev);
                        succs[prev].push(idx);
                    }
                    layer = layer.max(layer_of[prev] + 1);
                }
                last_on_wire[q] = Some(idx);
            }
            layer_of[idx] = layer;
            depth = depth.max(layer + 1);
        }
        Self {
            preds,
            succs,
            layer_of,
            depth,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.layer_of.len()
    }

    pub fn predecessors(&self, node: usize) -> &[usize] {
        &self.preds[node]
    }

    pub fn successors(&self, node: usize) -> &[usize] {
        &self.succs[node]
    }

    /// 0-based depth layer of an instruction.
    pub fn layer_of(&self, node: usize) -> usize {
        self.layer_of[node]
    }

    pub fn layers(&self) -> &[usize] {
        &self.layer_of
    }

    /// Circuit depth (max layer + 1; 0 for an empty circuit).
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Instruction indices grouped by layer, in instruction order.
    pub fn nodes_by_layer(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.depth];
        for (idx, &layer) in self.layer_of.iter().enumerate() {
            out[layer].push(idx);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{GateKind, QubitSpace};

    /// Independent layering: recompute layers by exhaustively relaxing
    /// predecessor constraints until a fixpoint.
    fn brute_force_layers(circuit: &QuantumCircuit) -> Vec<usize> {
        let instrs = circuit.instructions();
        let n = instrs.len();
        let mut layers = vec![0usize; n];
        loop {
            let mut changed = false;
            for i in 0..n {
                for j in 0..i {
                    let depends = instrs[i]
                        .qubits()
                        .iter()
                        .any(|q| instrs[j].qubits().contains(q));
                    if depends && layers[i] < layers[j] + 1 {
                        layers[i] = layers[j] + 1;
                        changed = true;
                    }
                }
            }
            if !changed {
                return layers;
            }
        }
    }

    #[test]
    fn layering_matches_brute_force_on_small_dag() {
        let mut c = QuantumCircuit::new(2, QubitSpace::Logical);
        c.push(GateKind::H, &[0]);
        c.push(GateKind::H, &[1]);
        c.push(GateKind::Cx, &[0, 1]);
        let dag = c.dag();
        assert_eq!(dag.layers(), brute_force_layers(&c).as_slice());
        assert_eq!(dag.depth(), 2);
        assert_eq!(dag.depth(), c.depth());
    }

    #[test]
    fn empty_circuit_has_depth_zero() {
        let c = QuantumCircuit::new(3, QubitSpace::Logical);
        assert_eq!(c.dag().depth(), 0);
    }

    #[test]
    fn edges_follow_wires() {
        let mut c = QuantumCircuit::new(3, QubitSpace::Logical);
        c.push(GateKind::H, &[0]);
        c.push(GateKind::Cx, &[0, 1]);
        c.push(GateKind::Cx, &[1, 2]);
        let dag = c.dag();
        assert_eq!(dag.predecessors(0), &[] as &[usize]);
        assert_eq!(dag.predecessors(1), &[0]);
        assert_eq!(dag.predecessors(2), &[1]);
        assert_eq!(dag.successors(0), &[1]);
    }
}
