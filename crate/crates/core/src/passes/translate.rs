//! Basis translation into the hardware-native set {RZ, SX, X, CZ}.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use crate::circuit::{GateKind, Instruction, QuantumCircuit};

use super::{Layout, PassOutcome};

fn push_h(out: &mut Vec<Instruction>, q: usize) {
    // H = RZ(pi/2) SX RZ(pi/2) up to global phase.
    out.push(Instruction::new(GateKind::Rz(FRAC_PI_2), &[q]));
    out.push(Instruction::new(GateKind::Sx, &[q]));
    out.push(Instruction::new(GateKind::Rz(FRAC_PI_2), &[q]));
}

fn push_cx(out: &mut Vec<Instruction>, control: usize, target: usize) {
    // CX = (I (x) H) CZ (I (x) H).
    push_h(out, target);
    out.push(Instruction::new(GateKind::Cz, &[control, target]));
    push_h(out, target);
}

fn translate_instruction(out: &mut Vec<Instruction>, instr: &Instruction) {
    let qs = instr.qubits();
    match instr.kind {
        GateKind::I => {}
        GateKind::X | GateKind::Sx | GateKind::Rz(_) | GateKind::Cz | GateKind::Measure => {
            out.push(*instr)
        }
        GateKind::H => push_h(out, qs[0]),
        GateKind::S => out.push(Instruction::new(GateKind::Rz(FRAC_PI_2), &[qs[0]])),
        GateKind::T => out.push(Instruction::new(GateKind::Rz(FRAC_PI_4), &[qs[0]])),
        GateKind::Cx => push_cx(out, qs[0], qs[1]),
        GateKind::Swap => {
            push_cx(out, qs[0], qs[1]);
            push_cx(out, qs[1], qs[0]);
            push_cx(out, qs[0], qs[1]);
        }
        GateKind::Ccx => {
            // Unroll first, then translate the pieces.
            let mut unrolled = Vec::new();
            super::init::apply_unroll_3q_instructions(&mut unrolled, instr);
            for piece in &unrolled {
                translate_instruction(out, piece);
            }
        }
    }
}

/// Rewrites every instruction into {RZ, SX, X, CZ, MEASURE} using the fixed
/// decomposition table. Idempotent: basis gates map to themselves.
pub fn apply_basis_translation(circuit: &QuantumCircuit, layout: Option<&Layout>) -> PassOutcome {
    if circuit.all_in_basis() {
        return PassOutcome::unchanged(circuit, layout);
    }
    let mut out = Vec::with_capacity(circuit.instructions().len() * 2);
    for instr in circuit.instructions() {
        translate_instruction(&mut out, instr);
    }
    PassOutcome::changed(circuit.with_instructions(out), layout.cloned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::QubitSpace;

    #[test]
    fn translated_circuit_is_in_basis() {
        let mut c = QuantumCircuit::new(3, QubitSpace::Logical);
        c.push(GateKind::H, &[0]);
        c.push(GateKind::S, &[1]);
        c.push(GateKind::T, &[2]);
        c.push(GateKind::Cx, &[0, 1]);
        c.push(GateKind::Swap, &[1, 2]);
        c.push(GateKind::I, &[0]);
        c.push_measure(0);
        let out = apply_basis_translation(&c, None);
        assert!(out.changed);
        assert!(out.circuit.all_in_basis());
    }

    #[test]
    fn translation_is_idempotent() {
        let mut c = QuantumCircuit::new(2, QubitSpace::Logical);
        c.push(GateKind::H, &[0]);
        c.push(GateKind::Cx, &[0, 1]);
        let once = apply_basis_translation(&c, None);
        let twice = apply_basis_translation(&once.circuit, None);
        assert!(!twice.changed);
        assert_eq!(once.circuit, twice.circuit);
    }

    #[test]
    fn already_in_basis_is_noop() {
        let mut c = QuantumCircuit::new(2, QubitSpace::Logical);
        c.push(GateKind::Rz(0.5), &[0]);
        c.push(GateKind::Cz, &[0, 1]);
        let out = apply_basis_translation(&c, None);
        assert!(!out.changed);
    }

    #[test]
    fn corpus_translates_clean() {
        for seed in 0..20u64 {
            let c = crate::circuit::generate::random_circuit(5, 12, seed);
            let out = apply_basis_translation(&c, None);
            assert!(out.circuit.all_in_basis());
            out.circuit.validate().unwrap();
        }
    }
}
