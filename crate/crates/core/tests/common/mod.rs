//! Shared test oracles, independent of the library's simulation path.

use num_complex::Complex64;
use passforge_core::circuit::{GateKind, QuantumCircuit};

/// Dense 2^n x 2^n unitary of a circuit, built by explicit full-matrix
/// products (measurements act as identity).
pub fn dense_unitary(c: &QuantumCircuit) -> Vec<Vec<Complex64>> {
    let n = c.num_qubits;
    let dim = 1usize << n;
    let mut u = identity(dim);
    for instr in c.instructions() {
        if instr.kind.is_measure() {
            continue;
        }
        let g = full_gate_matrix(n, instr.kind, instr.qubits());
        u = mat_mul(&g, &u);
    }
    u
}

fn identity(dim: usize) -> Vec<Vec<Complex64>> {
    let mut m = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex64::new(1.0, 0.0);
    }
    m
}

fn mat_mul(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let dim = a.len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i][k];
            if aik.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..dim {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

/// Small dense matrix of a single gate kind.
fn local_matrix(kind: GateKind) -> Vec<Vec<Complex64>> {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let half = std::f64::consts::FRAC_1_SQRT_2;
    match kind {
        GateKind::I => identity(2),
        GateKind::X => vec![vec![zero, one], vec![one, zero]],
        GateKind::Sx => vec![
            vec![Complex64::new(0.5, 0.5), Complex64::new(0.5, -0.5)],
            vec![Complex64::new(0.5, -0.5), Complex64::new(0.5, 0.5)],
        ],
        GateKind::Rz(t) => vec![
            vec![Complex64::from_polar(1.0, -t / 2.0), zero],
            vec![zero, Complex64::from_polar(1.0, t / 2.0)],
        ],
        GateKind::H => vec![
            vec![Complex64::new(half, 0.0), Complex64::new(half, 0.0)],
            vec![Complex64::new(half, 0.0), Complex64::new(-half, 0.0)],
        ],
        GateKind::S => vec![vec![one, zero], vec![zero, Complex64::new(0.0, 1.0)]],
        GateKind::T => vec![
            vec![one, zero],
            vec![zero, Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)],
        ],
        GateKind::Cx => {
            // basis order |q1 q0> with qubits()[0] = control, [1] = target:
            // handled positionally in full_gate_matrix; local form is the
            // 4x4 with control = low bit index 0.
            unreachable!("multi-qubit gates are expanded positionally")
        }
        _ => unreachable!("multi-qubit gates are expanded positionally"),
    }
}

/// Embeds a gate into the full 2^n-dimensional space. Basis index bit q
/// holds qubit q.
fn full_gate_matrix(n: usize, kind: GateKind, qubits: &[usize]) -> Vec<Vec<Complex64>> {
    let dim = 1usize << n;
    let mut m = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    match kind {
        GateKind::Cx => {
            let (c, t) = (1usize << qubits[0], 1usize << qubits[1]);
            for col in 0..dim {
                let row = if col & c != 0 { col ^ t } else { col };
                m[row][col] = Complex64::new(1.0, 0.0);
            }
        }
        GateKind::Cz => {
            let (a, b) = (1usize << qubits[0], 1usize << qubits[1]);
            for col in 0..dim {
                let phase = if col & a != 0 && col & b != 0 { -1.0 } else { 1.0 };
                m[col][col] = Complex64::new(phase, 0.0);
            }
        }
        GateKind::Swap => {
            let (a, b) = (1usize << qubits[0], 1usize << qubits[1]);
            for col in 0..dim {
                let bit_a = col & a != 0;
                let bit_b = col & b != 0;
                let mut row = col & !(a | b);
                if bit_a {
                    row |= b;
                }
                if bit_b {
                    row |= a;
                }
                m[row][col] = Complex64::new(1.0, 0.0);
            }
        }
        GateKind::Ccx => {
            let (c0, c1, t) = (
                1usize << qubits[0],
                1usize << qubits[1],
                1usize << qubits[2],
            );
            for col in 0..dim {
                let row = if col & c0 != 0 && col & c1 != 0 {
                    col ^ t
                } else {
                    col
                };
                m[row][col] = Complex64::new(1.0, 0.0);
            }
        }
        one_qubit => {
            let local = local_matrix(one_qubit);
            let q = 1usize << qubits[0];
            for col in 0..dim {
                let cb = usize::from(col & q != 0);
                for rb in 0..2 {
                    let entry = local[rb][cb];
                    if entry.norm_sqr() == 0.0 {
                        continue;
                    }
                    let row = if rb == 1 { col | q } else { col & !q };
                    m[row][col] = entry;
                }
            }
        }
    }
    m
}

/// Max-norm distance between two unitaries after aligning global phase.
pub fn unitary_distance_up_to_phase(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    let dim = a.len();
    let mut anchor = (0usize, 0usize, 0.0f64);
    for i in 0..dim {
        for j in 0..dim {
            if a[i][j].norm() > anchor.2 {
                anchor = (i, j, a[i][j].norm());
            }
        }
    }
    let (ai, aj, _) = anchor;
    if b[ai][aj].norm() < 1e-12 {
        return f64::INFINITY;
    }
    let phase = b[ai][aj] / a[ai][aj];
    let phase = phase / Complex64::new(phase.norm(), 0.0);
    let mut worst = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            worst = worst.max((b[i][j] - phase * a[i][j]).norm());
        }
    }
    worst
}

/// Asserts two circuits over the same register implement the same unitary
/// up to global phase.
pub fn assert_unitary_equivalent(a: &QuantumCircuit, b: &QuantumCircuit, tol: f64) {
    let ua = dense_unitary(a);
    let ub = dense_unitary(b);
    let d = unitary_distance_up_to_phase(&ua, &ub);
    assert!(d < tol, "unitary distance {d} exceeds tolerance {tol}");
}
