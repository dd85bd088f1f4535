//! Gate-level simplification passes: 3q decomposition, identity removal,
//! commutation-aware cancellation, and strict inverse cancellation.

use std::f64::consts::FRAC_PI_4;

use crate::circuit::{GateKind, Instruction, QuantumCircuit};

use super::{Layout, PassOutcome};

/// Decomposes every CCX into the standard 6-CX network (equivalent up to
/// global phase). Mandatory before leaving the init stage.
pub fn apply_unroll_3q(circuit: &QuantumCircuit, layout: Option<&Layout>) -> PassOutcome {
    if circuit.free_of_three_qubit_gates() {
        return PassOutcome::unchanged(circuit, layout);
    }
    let mut out = Vec::with_capacity(circuit.instructions().len() + 14);
    for instr in circuit.instructions() {
        if let GateKind::Ccx = instr.kind {
            let qs = instr.qubits();
            let (a, b, t) = (qs[0], qs[1], qs[2]);
            push_toffoli(&mut out, a, b, t);
        } else {
            out.push(*instr);
        }
    }
    let mut outcome = PassOutcome::changed(circuit.with_instructions(out), layout.cloned());
    outcome.layout = layout.cloned();
    outcome
}

/// Emits the decomposition of a single CCX instruction.
pub(super) fn apply_unroll_3q_instructions(out: &mut Vec<Instruction>, instr: &Instruction) {
    debug_assert_eq!(instr.kind, GateKind::Ccx);
    let qs = instr.qubits();
    push_toffoli(out, qs[0], qs[1], qs[2]);
}

fn push_toffoli(out: &mut Vec<Instruction>, a: usize, b: usize, t: usize) {
    let tdg = GateKind::Rz(-FRAC_PI_4);
    let seq: [(GateKind, &[usize]); 15] = [
        (GateKind::H, &[t]),
        (GateKind::Cx, &[b, t]),
        (tdg, &[t]),
        (GateKind::Cx, &[a, t]),
        (GateKind::T, &[t]),
        (GateKind::Cx, &[b, t]),
        (tdg, &[t]),
        (GateKind::Cx, &[a, t]),
        (GateKind::T, &[b]),
        (GateKind::T, &[t]),
        (GateKind::H, &[t]),
        (GateKind::Cx, &[a, b]),
        (GateKind::T, &[a]),
        (tdg, &[b]),
        (GateKind::Cx, &[a, b]),
    ];
    for (kind, qs) in seq {
        out.push(Instruction::new(kind, qs));
    }
}

/// Removes identity gates and RZ rotations below the identity tolerance.
/// Idempotent.
pub fn apply_remove_identity_equivalent(
    circuit: &QuantumCircuit,
    layout: Option<&Layout>,
) -> PassOutcome {
    let kept: Vec<Instruction> = circuit
        .instructions()
        .iter()
        .filter(|i| !i.kind.is_identity_equivalent())
        .copied()
        .collect();
    if kept.len() == circuit.instructions().len() {
        return PassOutcome::unchanged(circuit, layout);
    }
    PassOutcome::changed(circuit.with_instructions(kept), layout.cloned())
}

/// Can an RZ on wire `w` slide past gate `kind` acting on `qubits`?
/// Restricted to control wires of CX and either wire of CZ (plus RZ itself).
fn rz_transparent(kind: GateKind, qubits: &[usize], w: usize) -> bool {
    match kind {
        GateKind::Rz(_) => true,
        GateKind::Cz => qubits.contains(&w),
        GateKind::Cx => qubits[0] == w,
        _ => false,
    }
}

/// Whether the intervening instruction `mid` is transparent for moving the
/// partner of `pair` along wire `w`: only RZ gates move, and only across
/// positions where `pair` acts diagonally on `w`.
fn transparent_for_pair(mid: &Instruction, pair: &Instruction, w: usize) -> bool {
    if !matches!(mid.kind, GateKind::Rz(_)) {
        return false;
    }
    rz_transparent(pair.kind, pair.qubits(), w)
}

/// Index of the next live instruction after `i` on wire `w` that is not
/// transparent for `pair`.
fn next_blocking(
    instrs: &[Option<Instruction>],
    i: usize,
    w: usize,
    pair: &Instruction,
) -> Option<usize> {
    for (j, slot) in instrs.iter().enumerate().skip(i + 1) {
        let Some(mid) = slot else { continue };
        if !mid.qubits().contains(&w) {
            continue;
        }
        if transparent_for_pair(mid, pair, w) {
            continue;
        }
        return Some(j);
    }
    None
}

fn same_pair_gate(a: &Instruction, b: &Instruction) -> bool {
    match (a.kind, b.kind) {
        (GateKind::X, GateKind::X) | (GateKind::H, GateKind::H) => a.qubits() == b.qubits(),
        (GateKind::Cx, GateKind::Cx) => a.qubits() == b.qubits(),
        (GateKind::Cz, GateKind::Cz) | (GateKind::Swap, GateKind::Swap) => {
            let (x, y) = (a.qubits(), b.qubits());
            x == y || (x[0] == y[1] && x[1] == y[0])
        }
        _ => false,
    }
}

/// Cancels self-inverse pairs (X.X, H.H, CX.CX, CZ.CZ) and merges adjacent
/// RZ.RZ, letting RZ commute through CX controls and CZ wires. Never
/// increases the gate count.
pub fn apply_commutative_cancellation(
    circuit: &QuantumCircuit,
    layout: Option<&Layout>,
) -> PassOutcome {
    let mut instrs: Vec<Option<Instruction>> =
        circuit.instructions().iter().copied().map(Some).collect();
    let n = instrs.len();
    let mut any_change = false;
    loop {
        let mut round_change = false;
        for i in 0..n {
            let Some(a) = instrs[i] else { continue };
            match a.kind {
                GateKind::Rz(theta_a) => {
                    let w = a.qubits()[0];
                    // Partner search skips gates transparent to RZ motion.
                    let mut j = i;
                    let partner = loop {
                        let Some(k) = next_on_wire(&instrs, j, w) else { break None };
                        let mid = instrs[k].unwrap();
                        if let GateKind::Rz(theta_b) = mid.kind {
                            break Some((k, theta_b));
                        }
                        if rz_transparent(mid.kind, mid.qubits(), w) {
                            j = k;
                            continue;
                        }
                        break None;
                    };
                    if let Some((k, theta_b)) = partner {
                        instrs[i] = Some(Instruction::new(GateKind::Rz(theta_a + theta_b), &[w]));
                        instrs[k] = None;
                        round_change = true;
                    }
                }
                GateKind::X | GateKind::H | GateKind::Cx | GateKind::Cz => {
                    let candidates: Vec<Option<usize>> = a
                        .qubits()
                        .iter()
                        .map(|&w| next_blocking(&instrs, i, w, &a))
                        .collect();
                    let Some(j) = candidates[0] else { continue };
                    if candidates.iter().any(|&c| c != Some(j)) {
                        continue;
                    }
                    let b = instrs[j].unwrap();
                    if same_pair_gate(&a, &b) {
                        instrs[i] = None;
                        instrs[j] = None;
                        round_change = true;
                    }
                }
                _ => {}
            }
        }
        if !round_change {
            break;
        }
        any_change = true;
    }
    if !any_change {
        return PassOutcome::unchanged(circuit, layout);
    }
    let kept: Vec<Instruction> = instrs.into_iter().flatten().collect();
    PassOutcome::changed(circuit.with_instructions(kept), layout.cloned())
}

fn next_on_wire(instrs: &[Option<Instruction>], i: usize, w: usize) -> Option<usize> {
    instrs
        .iter()
        .enumerate()
        .skip(i + 1)
        .find(|(_, slot)| slot.map(|m| m.qubits().contains(&w)).unwrap_or(false))
        .map(|(j, _)| j)
}

/// Cancels strictly adjacent self-inverse pairs (no commutation window).
pub fn apply_inverse_cancellation(
    circuit: &QuantumCircuit,
    layout: Option<&Layout>,
) -> PassOutcome {
    let mut instrs: Vec<Option<Instruction>> =
        circuit.instructions().iter().copied().map(Some).collect();
    let n = instrs.len();
    let mut any_change = false;
    loop {
        let mut round_change = false;
        for i in 0..n {
            let Some(a) = instrs[i] else { continue };
            if !a.kind.is_self_inverse() {
                continue;
            }
            // Strict adjacency: the very next live instruction on every wire
            // of `a` must be the same instruction `j`.
            let nexts: Vec<Option<usize>> = a
                .qubits()
                .iter()
                .map(|&w| next_on_wire(&instrs, i, w))
                .collect();
            let Some(j) = nexts[0] else { continue };
            if nexts.iter().any(|&c| c != Some(j)) {
                continue;
            }
            let b = instrs[j].unwrap();
            if b.qubits().len() == a.qubits().len() && same_pair_gate(&a, &b) {
                instrs[i] = None;
                instrs[j] = None;
                round_change = true;
            }
        }
        if !round_change {
            break;
        }
        any_change = true;
    }
    if !any_change {
        return PassOutcome::unchanged(circuit, layout);
    }
    let kept: Vec<Instruction> = instrs.into_iter().flatten().collect();
    PassOutcome::changed(circuit.with_instructions(kept), layout.cloned())
}
