//! Post-translation optimization: 1q-chain resynthesis, idle-wire
//! contraction, and the round-robin convergence loop.

use num_complex::Complex64;

use crate::backend::BackendModel;
use crate::circuit::{GateKind, Instruction, QuantumCircuit};

use super::{apply_pass, Layout, PassContext, PassId, PassOutcome, Stage};

type Mat2 = [[Complex64; 2]; 2];

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn gate_matrix(kind: GateKind) -> Mat2 {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    match kind {
        GateKind::X => [[zero, one], [one, zero]],
        GateKind::Sx => {
            let p = Complex64::new(0.5, 0.5);
            let m = Complex64::new(0.5, -0.5);
            [[p, m], [m, p]]
        }
        GateKind::Rz(theta) => [
            [Complex64::from_polar(1.0, -theta / 2.0), zero],
            [zero, Complex64::from_polar(1.0, theta / 2.0)],
        ],
        _ => unreachable!("only basis 1q gates are resynthesized"),
    }
}

/// Wraps an angle into (-pi, pi].
fn normalize_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut t = theta.rem_euclid(two_pi);
    if t > std::f64::consts::PI {
        t -= two_pi;
    }
    t
}

fn push_rz_if_nontrivial(out: &mut Vec<Instruction>, theta: f64, q: usize) {
    let t = normalize_angle(theta);
    if t.abs() >= crate::circuit::RZ_IDENTITY_TOL {
        out.push(Instruction::new(GateKind::Rz(t), &[q]));
    }
}

/// Canonical RZ.SX.RZ.SX.RZ synthesis of a 2x2 unitary, up to global phase.
fn synthesize_1q(u: &Mat2, q: usize) -> Vec<Instruction> {
    let mut out = Vec::with_capacity(5);
    let (u00, u01, u10, u11) = (u[0][0], u[0][1], u[1][0], u[1][1]);
    if u10.norm() < 1e-12 {
        // Diagonal: a single RZ.
        push_rz_if_nontrivial(&mut out, (u11 * u00.conj()).arg(), q);
        return out;
    }
    let (theta, phi, lam) = if u00.norm() < 1e-12 {
        // Anti-diagonal: theta = pi.
        let gamma = u10.arg();
        (std::f64::consts::PI, 0.0, (-u01).arg() - gamma)
    } else {
        let gamma = u00.arg();
        let theta = 2.0 * u10.norm().atan2(u00.norm());
        let phi = u10.arg() - gamma;
        let lam = (-u01).arg() - gamma;
        (theta, phi, lam)
    };
    push_rz_if_nontrivial(&mut out, lam, q);
    out.push(Instruction::new(GateKind::Sx, &[q]));
    push_rz_if_nontrivial(&mut out, theta + std::f64::consts::PI, q);
    out.push(Instruction::new(GateKind::Sx, &[q]));
    push_rz_if_nontrivial(&mut out, phi + std::f64::consts::PI, q);
    out
}

/// Resynthesizes every maximal run of one-qubit basis gates on a wire into
/// the canonical form when strictly shorter; unitary preserved up to global
/// phase.
pub fn apply_optimize_1q_chains(circuit: &QuantumCircuit, layout: Option<&Layout>) -> PassOutcome {
    let instrs = circuit.instructions();
    let n = instrs.len();
    // replacement[i] = Some(gates) marks the start of a rewritten run;
    // removed[i] marks members of a rewritten run.
    let mut replacement: Vec<Option<Vec<Instruction>>> = vec![None; n];
    let mut removed = vec![false; n];
    let mut changed = false;

    for wire in 0..circuit.num_qubits {
        let on_wire: Vec<usize> = (0..n)
            .filter(|&i| instrs[i].qubits().contains(&wire))
            .collect();
        let mut run: Vec<usize> = Vec::new();
        let flush = |run: &mut Vec<usize>,
                         replacement: &mut Vec<Option<Vec<Instruction>>>,
                         removed: &mut Vec<bool>,
                         changed: &mut bool| {
            if run.len() >= 2 {
                let mut u = [[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
                    [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]];
                for &i in run.iter() {
                    u = mat_mul(&gate_matrix(instrs[i].kind), &u);
                }
                let synth = synthesize_1q(&u, wire);
                if synth.len() < run.len() {
                    for &i in run.iter() {
                        removed[i] = true;
                    }
                    replacement[run[0]] = Some(synth);
                    *changed = true;
                }
            }
            run.clear();
        };
        for &i in &on_wire {
            let kind = instrs[i].kind;
            let is_1q_basis = matches!(kind, GateKind::X | GateKind::Sx | GateKind::Rz(_));
            if is_1q_basis {
                run.push(i);
            } else {
                flush(&mut run, &mut replacement, &mut removed, &mut changed);
            }
        }
        flush(&mut run, &mut replacement, &mut removed, &mut changed);
    }

    if !changed {
        return PassOutcome::unchanged(circuit, layout);
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if let Some(gates) = replacement[i].take() {
            out.extend(gates);
        } else if !removed[i] {
            out.push(instrs[i]);
        }
    }
    PassOutcome::changed(circuit.with_instructions(out), layout.cloned())
}

/// Shrinks the decoherence-averaging wire set to the wires the circuit
/// actually touches.
pub fn apply_contract_idle_wires(circuit: &QuantumCircuit, layout: Option<&Layout>) -> PassOutcome {
    let touched = circuit.touched_wires();
    let effective_old = circuit
        .active_wires
        .clone()
        .unwrap_or_else(|| vec![true; circuit.num_qubits]);
    if effective_old == touched {
        return PassOutcome::unchanged(circuit, layout);
    }
    let mut next = circuit.clone();
    next.active_wires = Some(touched);
    PassOutcome::changed(next, layout.cloned())
}

/// Applies the selected optimize-stage passes round-robin until an iteration
/// leaves (gate count, depth) unchanged, capped at 10 iterations.
pub fn run_optimize_loop(
    circuit: &QuantumCircuit,
    selected: &[PassId],
    backend: &BackendModel,
    layout: Option<&Layout>,
    ctx: &PassContext,
) -> PassOutcome {
    let (outcome, _) = run_optimize_loop_counting(circuit, selected, backend, layout, ctx);
    outcome
}

pub(crate) const OPTIMIZE_LOOP_MAX_ITERATIONS: usize = 10;

/// Like [`run_optimize_loop`] but reports how many iterations ran.
pub fn run_optimize_loop_counting(
    circuit: &QuantumCircuit,
    selected: &[PassId],
    backend: &BackendModel,
    layout: Option<&Layout>,
    ctx: &PassContext,
) -> (PassOutcome, usize) {
    debug_assert!(selected
        .iter()
        .all(|p| p.stage() == Stage::Optimize || p.stage() == Stage::Cleanup));
    let mut ordered: Vec<PassId> = selected.to_vec();
    ordered.sort_by_key(|p| p.index());
    ordered.dedup();
    let mut current = circuit.clone();
    let mut current_layout = layout.cloned();
    let mut any_change = false;
    let mut iterations = 0;
    for _ in 0..OPTIMIZE_LOOP_MAX_ITERATIONS {
        iterations += 1;
        let before = (current.gate_counts(), current.depth());
        for &pass in &ordered {
            let outcome = apply_pass(pass, &current, backend, current_layout.as_ref(), ctx);
            if !outcome.failed {
                if outcome.changed {
                    any_change = true;
                }
                current = outcome.circuit;
                current_layout = outcome.layout;
            }
        }
        if (current.gate_counts(), current.depth()) == before {
            break;
        }
    }
    let outcome = if any_change {
        PassOutcome::changed(current, current_layout)
    } else {
        PassOutcome::unchanged(circuit, layout)
    };
    (outcome, iterations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{synthetic_backend, NoiseProfile, TopologyKind};
    use crate::circuit::QubitSpace;

    #[test]
    fn long_rz_chain_collapses_to_one_gate() {
        let mut c = QuantumCircuit::new(1, QubitSpace::Physical);
        for k in 1..=4 {
            c.push(GateKind::Rz(0.1 * k as f64), &[0]);
        }
        let out = apply_optimize_1q_chains(&c, None);
        assert!(out.changed);
        assert_eq!(out.circuit.instructions().len(), 1);
        match out.circuit.instructions()[0].kind {
            GateKind::Rz(t) => assert!((t - 1.0).abs() < 1e-12),
            other => panic!("expected rz, got {other:?}"),
        }
    }

    #[test]
    fn x_x_run_vanishes() {
        let mut c = QuantumCircuit::new(1, QubitSpace::Physical);
        c.push(GateKind::X, &[0]);
        c.push(GateKind::X, &[0]);
        let out = apply_optimize_1q_chains(&c, None);
        assert!(out.changed);
        assert!(out.circuit.instructions().is_empty());
    }

    #[test]
    fn short_runs_left_alone() {
        let mut c = QuantumCircuit::new(1, QubitSpace::Physical);
        c.push(GateKind::Sx, &[0]);
        c.push(GateKind::Sx, &[0]);
        // Canonical form of X is not shorter than two gates; unchanged.
        let out = apply_optimize_1q_chains(&c, None);
        assert!(!out.changed);
    }

    #[test]
    fn runs_do_not_cross_two_qubit_gates() {
        let mut c = QuantumCircuit::new(2, QubitSpace::Physical);
        c.push(GateKind::Rz(0.5), &[0]);
        c.push(GateKind::Cz, &[0, 1]);
        c.push(GateKind::Rz(-0.5), &[0]);
        let out = apply_optimize_1q_chains(&c, None);
        assert!(!out.changed);
    }

    #[test]
    fn contract_idle_wires_tracks_touched_set() {
        let mut c = QuantumCircuit::new(4, QubitSpace::Physical);
        c.push(GateKind::X, &[1]);
        c.push_measure(1);
        let out = apply_contract_idle_wires(&c, None);
        assert!(out.changed);
        assert_eq!(
            out.circuit.active_wires.as_deref(),
            Some(&[false, true, false, false][..])
        );
        let again = apply_contract_idle_wires(&out.circuit, None);
        assert!(!again.changed);
    }

    #[test]
    fn optimize_loop_empty_selection_is_noop() {
        let b = synthetic_backend(TopologyKind::Line, 2, NoiseProfile::default_uniform()).unwrap();
        let mut c = QuantumCircuit::new(2, QubitSpace::Physical);
        c.push(GateKind::X, &[0]);
        let out = run_optimize_loop(&c, &[], &b, None, &PassContext::default());
        assert!(!out.changed);
        assert_eq!(out.circuit, c);
    }

    #[test]
    fn optimize_loop_converges_in_two_iterations_on_xx() {
        let b = synthetic_backend(TopologyKind::Line, 2, NoiseProfile::default_uniform()).unwrap();
        let mut c = QuantumCircuit::new(2, QubitSpace::Physical);
        c.push(GateKind::X, &[0]);
        c.push(GateKind::X, &[0]);
        let (out, iterations) = run_optimize_loop_counting(
            &c,
            &[PassId::CommutativeCancellationOptimize],
            &b,
            None,
            &PassContext::default(),
        );
        assert!(out.changed);
        assert!(out.circuit.instructions().is_empty());
        assert_eq!(iterations, 2, "one changing pass + one confirming pass");
    }

    #[test]
    fn optimize_loop_bounded_on_corpus() {
        let b = synthetic_backend(TopologyKind::Line, 6, NoiseProfile::default_uniform()).unwrap();
        let all = [
            PassId::RemoveIdentityOptimize,
            PassId::CommutativeCancellationOptimize,
            PassId::Optimize1qChains,
            PassId::ContractIdleWires,
        ];
        for seed in 0..20u64 {
            let c = crate::circuit::generate::random_circuit(5, 15, seed);
            let routed = crate::passes::apply_basic_swap(
                &c,
                &b,
                Some(&Layout::identity(5, 6)),
            );
            let translated = crate::passes::apply_basis_translation(&routed.circuit, None);
            let (_, iterations) = run_optimize_loop_counting(
                &translated.circuit,
                &all,
                &b,
                None,
                &PassContext::default(),
            );
            assert!(iterations <= OPTIMIZE_LOOP_MAX_ITERATIONS);
        }
    }
}
