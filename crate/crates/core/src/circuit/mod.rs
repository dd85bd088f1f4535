//! Circuit intermediate representation.
//!
//! A [`QuantumCircuit`] is an ordered gate list over logical or physical
//! qubits plus a measurement map from classical bits to qubits. Instruction
//! order induces the qubit-wise dependency DAG used for depth analysis.

mod dag;
pub mod generate;
pub mod qasm;

pub use dag::CircuitDag;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard cap on register sizes accepted by parsers and generators.
pub const MAX_QUBITS: usize = 4096;

/// Angle tolerance below which an RZ is identity-equivalent.
pub const RZ_IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum CircuitError {
    #[error("qubit index {index} out of range for {num_qubits}-qubit circuit")]
    QubitOutOfRange { index: usize, num_qubits: usize },
    #[error("instruction uses the same qubit {0} twice")]
    DuplicateOperand(usize),
    #[error("qubit {0} measured more than once")]
    DuplicateMeasurement(usize),
    #[error("qubit {0} has an instruction after its measurement")]
    MeasurementNotTerminal(usize),
    #[error("measurement map does not match the measure instructions")]
    InconsistentMeasureMap,
    #[error("active-wire mask length {got} does not match {want} qubits")]
    ActiveWiresLength { got: usize, want: usize },
    #[error("{kind} requires {requirement}, got n = {n}")]
    WidthBounds {
        kind: &'static str,
        requirement: &'static str,
        n: usize,
    },
    #[error("register size {0} exceeds the supported maximum {MAX_QUBITS}")]
    RegisterTooLarge(usize),
}

/// Gate vocabulary. The hardware basis is {RZ, SX, X, CZ} plus MEASURE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GateKind {
    I,
    X,
    Sx,
    Rz(f64),
    H,
    S,
    T,
    Cx,
    Cz,
    Swap,
    Ccx,
    Measure,
}

impl GateKind {
    /// Number of qubit operands.
    pub fn arity(self) -> usize {
        match self {
            GateKind::I
            | GateKind::X
            | GateKind::Sx
            | GateKind::Rz(_)
            | GateKind::H
            | GateKind::S
            | GateKind::T
            | GateKind::Measure => 1,
            GateKind::Cx | GateKind::Cz | GateKind::Swap => 2,
            GateKind::Ccx => 3,
        }
    }

    /// Lower-case mnemonic used by the QASM subset and JSON format.
    pub fn name(self) -> &'static str {
        match self {
            GateKind::I => "id",
            GateKind::X => "x",
            GateKind::Sx => "sx",
            GateKind::Rz(_) => "rz",
            GateKind::H => "h",
            GateKind::S => "s",
            GateKind::T => "t",
            GateKind::Cx => "cx",
            GateKind::Cz => "cz",
            GateKind::Swap => "swap",
            GateKind::Ccx => "ccx",
            GateKind::Measure => "measure",
        }
    }

    /// True for gates in the hardware-native set (and measurements).
    pub fn in_basis(self) -> bool {
        matches!(
            self,
            GateKind::Rz(_) | GateKind::Sx | GateKind::X | GateKind::Cz | GateKind::Measure
        )
    }

    pub fn is_measure(self) -> bool {
        matches!(self, GateKind::Measure)
    }

    /// Gates that are their own inverse.
    pub fn is_self_inverse(self) -> bool {
        matches!(
            self,
            GateKind::X | GateKind::H | GateKind::Cx | GateKind::Cz | GateKind::Swap
        )
    }

    /// True when the gate acts as the identity within tolerance.
    pub fn is_identity_equivalent(self) -> bool {
        match self {
            GateKind::I => true,
            GateKind::Rz(theta) => theta.abs() < RZ_IDENTITY_TOL,
            _ => false,
        }
    }
}

/// Whether qubit indices refer to logical program qubits or device qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QubitSpace {
    Logical,
    Physical,
}

/// One gate or measurement applied to specific qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Instruction {
    pub kind: GateKind,
    operands: [usize; 3],
}

impl Instruction {
    pub fn new(kind: GateKind, qubits: &[usize]) -> Self {
        assert_eq!(kind.arity(), qubits.len(), "operand count must match arity");
        let mut operands = [0usize; 3];
        operands[..qubits.len()].copy_from_slice(qubits);
        Self { kind, operands }
    }

    pub fn qubits(&self) -> &[usize] {
        &self.operands[..self.kind.arity()]
    }

    /// Rewrites operand indices through `map` (old index -> new index).
    pub fn relabeled(&self, map: impl Fn(usize) -> usize) -> Self {
        let mut out = *self;
        for q in out.operands[..self.kind.arity()].iter_mut() {
            *q = map(*q);
        }
        out
    }
}

impl Serialize for Instruction {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let params: Vec<f64> = match self.kind {
            GateKind::Rz(theta) => vec![theta],
            _ => vec![],
        };
        let mut s = serializer.serialize_struct("Instruction", 3)?;
        s.serialize_field("gate", self.kind.name())?;
        s.serialize_field("qubits", self.qubits())?;
        s.serialize_field("params", &params)?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for Instruction {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            gate: String,
            qubits: Vec<usize>,
            #[serde(default)]
            params: Vec<f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let kind = gate_from_name(&raw.gate, &raw.params)
            .ok_or_else(|| serde::de::Error::custom(format!("unsupported gate `{}`", raw.gate)))?;
        if kind.arity() != raw.qubits.len() {
            return Err(serde::de::Error::custom(format!(
                "gate `{}` expects {} qubits, got {}",
                raw.gate,
                kind.arity(),
                raw.qubits.len()
            )));
        }
        Ok(Instruction::new(kind, &raw.qubits))
    }
}

/// Builds a [`GateKind`] from its mnemonic and parameter list.
pub fn gate_from_name(name: &str, params: &[f64]) -> Option<GateKind> {
    match (name, params) {
        ("id", []) => Some(GateKind::I),
        ("x", []) => Some(GateKind::X),
        ("sx", []) => Some(GateKind::Sx),
        ("rz", [theta]) => Some(GateKind::Rz(*theta)),
        ("h", []) => Some(GateKind::H),
        ("s", []) => Some(GateKind::S),
        ("t", []) => Some(GateKind::T),
        ("cx", []) => Some(GateKind::Cx),
        ("cz", []) => Some(GateKind::Cz),
        ("swap", []) => Some(GateKind::Swap),
        ("ccx", []) => Some(GateKind::Ccx),
        ("measure", []) => Some(GateKind::Measure),
        _ => None,
    }
}

/// Instruction counts partitioned by arity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GateCounts {
    pub one_qubit: usize,
    pub two_qubit: usize,
    pub three_qubit: usize,
    pub measurements: usize,
}

impl GateCounts {
    pub fn total(&self) -> usize {
        self.one_qubit + self.two_qubit + self.three_qubit + self.measurements
    }

    /// Non-measurement gate count.
    pub fn gates(&self) -> usize {
        self.one_qubit + self.two_qubit + self.three_qubit
    }
}

/// Gate list over logical or physical qubits with a measurement map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumCircuit {
    pub num_qubits: usize,
    instructions: Vec<Instruction>,
    /// Classical bit k reads out `measured_qubits[k]`.
    measured_qubits: Vec<usize>,
    pub qubit_space: QubitSpace,
    /// Wires counted by decoherence averaging; `None` means all wires.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_wires: Option<Vec<bool>>,
}

impl QuantumCircuit {
    pub fn new(num_qubits: usize, qubit_space: QubitSpace) -> Self {
        Self {
            num_qubits,
            instructions: Vec::new(),
            measured_qubits: Vec::new(),
            qubit_space,
            active_wires: None,
        }
    }

    /// Assembles a circuit from raw parts and validates every invariant.
    pub fn from_parts(
        num_qubits: usize,
        instructions: Vec<Instruction>,
        measured_qubits: Vec<usize>,
        qubit_space: QubitSpace,
    ) -> Result<Self, CircuitError> {
        let c = Self {
            num_qubits,
            instructions,
            measured_qubits,
            qubit_space,
            active_wires: None,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn measured_qubits(&self) -> &[usize] {
        &self.measured_qubits
    }

    /// Appends a gate. Panics on operand errors; these are programming bugs.
    pub fn push(&mut self, kind: GateKind, qubits: &[usize]) {
        assert!(
            !kind.is_measure(),
            "use push_measure for measurement instructions"
        );
        let instr = Instruction::new(kind, qubits);
        for (i, &q) in qubits.iter().enumerate() {
            assert!(q < self.num_qubits, "qubit {q} out of range");
            assert!(!qubits[..i].contains(&q), "duplicate operand {q}");
        }
        self.instructions.push(instr);
    }

    /// Appends a terminal measurement of `qubit` onto the next classical bit.
    pub fn push_measure(&mut self, qubit: usize) {
        assert!(qubit < self.num_qubits, "qubit {qubit} out of range");
        assert!(
            !self.measured_qubits.contains(&qubit),
            "qubit {qubit} measured twice"
        );
        self.instructions
            .push(Instruction::new(GateKind::Measure, &[qubit]));
        self.measured_qubits.push(qubit);
    }

    /// Replaces the instruction list, keeping the measurement map.
    ///
    /// Callers are expected to preserve the measure instructions; `validate`
    /// in debug builds catches violations.
    pub fn with_instructions(&self, instructions: Vec<Instruction>) -> Self {
        let c = Self {
            num_qubits: self.num_qubits,
            instructions,
            measured_qubits: self.measured_qubits.clone(),
            qubit_space: self.qubit_space,
            active_wires: self.active_wires.clone(),
        };
        debug_assert_eq!(c.validate(), Ok(()));
        c
    }

    /// Rewrites all qubit indices (instructions, measurement map, active
    /// wires) through an injective map into a register of `new_num_qubits`.
    pub fn relabeled(&self, map: &[usize], new_num_qubits: usize, space: QubitSpace) -> Self {
        assert_eq!(map.len(), self.num_qubits);
        let instructions = self
            .instructions
            .iter()
            .map(|i| i.relabeled(|q| map[q]))
            .collect();
        let measured_qubits = self.measured_qubits.iter().map(|&q| map[q]).collect();
        let active_wires = self.active_wires.as_ref().map(|mask| {
            let mut out = vec![false; new_num_qubits];
            for (q, &on) in mask.iter().enumerate() {
                if on {
                    out[map[q]] = true;
                }
            }
            out
        });
        let c = Self {
            num_qubits: new_num_qubits,
            instructions,
            measured_qubits,
            qubit_space: space,
            active_wires,
        };
        debug_assert_eq!(c.validate(), Ok(()));
        c
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<(), CircuitError> {
        let mut measured_order = Vec::new();
        let mut done = vec![false; self.num_qubits];
        for instr in &self.instructions {
            let qs = instr.qubits();
            for (i, &q) in qs.iter().enumerate() {
                if q >= self.num_qubits {
                    return Err(CircuitError::QubitOutOfRange {
                        index: q,
                        num_qubits: self.num_qubits,
                    });
                }
                if qs[..i].contains(&q) {
                    return Err(CircuitError::DuplicateOperand(q));
                }
                if done[q] {
                    return Err(CircuitError::MeasurementNotTerminal(q));
                }
            }
            if instr.kind.is_measure() {
                let q = qs[0];
                done[q] = true;
                measured_order.push(q);
            }
        }
        for (i, &q) in self.measured_qubits.iter().enumerate() {
            if q >= self.num_qubits {
                return Err(CircuitError::QubitOutOfRange {
                    index: q,
                    num_qubits: self.num_qubits,
                });
            }
            if self.measured_qubits[..i].contains(&q) {
                return Err(CircuitError::DuplicateMeasurement(q));
            }
        }
        let mut map_sorted = self.measured_qubits.clone();
        map_sorted.sort_unstable();
        measured_order.sort_unstable();
        if map_sorted != measured_order {
            return Err(CircuitError::InconsistentMeasureMap);
        }
        if let Some(mask) = &self.active_wires {
            if mask.len() != self.num_qubits {
                return Err(CircuitError::ActiveWiresLength {
                    got: mask.len(),
                    want: self.num_qubits,
                });
            }
        }
        Ok(())
    }

    /// Longest qubit-wise dependency chain; measurements contribute.
    pub fn depth(&self) -> usize {
        let mut frontier = vec![0usize; self.num_qubits];
        let mut depth = 0;
        for instr in &self.instructions {
            let layer = instr.qubits().iter().map(|&q| frontier[q]).max().unwrap_or(0) + 1;
            for &q in instr.qubits() {
                frontier[q] = layer;
            }
            depth = depth.max(layer);
        }
        depth
    }

    /// Partitions instructions by arity.
    pub fn gate_counts(&self) -> GateCounts {
        let mut counts = GateCounts::default();
        for instr in &self.instructions {
            if instr.kind.is_measure() {
                counts.measurements += 1;
            } else {
                match instr.kind.arity() {
                    1 => counts.one_qubit += 1,
                    2 => counts.two_qubit += 1,
                    _ => counts.three_qubit += 1,
                }
            }
        }
        counts
    }

    /// True when every instruction is in the hardware basis.
    pub fn all_in_basis(&self) -> bool {
        self.instructions.iter().all(|i| i.kind.in_basis())
    }

    /// True when no arity-3 instruction remains.
    pub fn free_of_three_qubit_gates(&self) -> bool {
        self.instructions.iter().all(|i| i.kind.arity() < 3)
    }

    /// Mask of wires touched by at least one instruction.
    pub fn touched_wires(&self) -> Vec<bool> {
        let mut mask = vec![false; self.num_qubits];
        for instr in &self.instructions {
            for &q in instr.qubits() {
                mask[q] = true;
            }
        }
        mask
    }

    /// Wires counted for decoherence averaging (active mask or all wires).
    pub fn decoherence_wires(&self) -> Vec<usize> {
        match &self.active_wires {
            Some(mask) => mask
                .iter()
                .enumerate()
                .filter_map(|(q, &on)| on.then_some(q))
                .collect(),
            None => (0..self.num_qubits).collect(),
        }
    }

    /// Parses the 1:1 JSON mirror of this type, then validates.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()
            .map_err(|e| serde::de::Error::custom(e.to_string()))?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serializes")
    }

    /// Builds the dependency DAG with depth layers.
    pub fn dag(&self) -> CircuitDag {
        CircuitDag::build(self)
    }

    /// Stable 64-bit fingerprint used for caching reference compilations.
    pub fn fingerprint(&self) -> u64 {
        let mut h = 0xcbf29ce484222325u64;
        let mut mix = |v: u64| {
            h ^= v;
            h = h.wrapping_mul(0x100000001b3);
        };
        mix(self.num_qubits as u64);
        for instr in &self.instructions {
            mix(instr.kind.name().as_bytes().iter().fold(0u64, |a, &b| a.wrapping_mul(31).wrapping_add(b as u64)));
            if let GateKind::Rz(theta) = instr.kind {
                mix(theta.to_bits());
            }
            for &q in instr.qubits() {
                mix(q as u64 + 1);
            }
        }
        for &q in &self.measured_qubits {
            mix(q as u64 ^ 0xabcd);
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ghz3() -> QuantumCircuit {
        let mut c = QuantumCircuit::new(3, QubitSpace::Logical);
        c.push(GateKind::H, &[0]);
        c.push(GateKind::Cx, &[0, 1]);
        c.push(GateKind::Cx, &[1, 2]);
        for q in 0..3 {
            c.push_measure(q);
        }
        c
    }

    #[test]
    fn depth_empty_circuit_is_zero() {
        let c = QuantumCircuit::new(3, QubitSpace::Logical);
        assert_eq!(c.depth(), 0);
    }

    #[test]
    fn depth_sequential_chain() {
        let mut c = QuantumCircuit::new(1, QubitSpace::Logical);
        for _ in 0..3 {
            c.push(GateKind::X, &[0]);
        }
        assert_eq!(c.depth(), 3);
    }

    #[test]
    fn depth_parallel_h_then_cx() {
        // H(0); H(1); CX(0,1) layers as {H,H} then {CX}.
        let mut c = QuantumCircuit::new(2, QubitSpace::Logical);
        c.push(GateKind::H, &[0]);
        c.push(GateKind::H, &[1]);
        c.push(GateKind::Cx, &[0, 1]);
        assert_eq!(c.depth(), 2);
    }

    #[test]
    fn gate_counts_empty() {
        let c = QuantumCircuit::new(2, QubitSpace::Logical);
        assert_eq!(c.gate_counts(), GateCounts::default());
    }

    #[test]
    fn gate_counts_mixed() {
        let mut c = QuantumCircuit::new(2, QubitSpace::Logical);
        c.push(GateKind::H, &[0]);
        c.push(GateKind::Cx, &[0, 1]);
        c.push_measure(0);
        let counts = c.gate_counts();
        assert_eq!(
            counts,
            GateCounts {
                one_qubit: 1,
                two_qubit: 1,
                three_qubit: 0,
                measurements: 1
            }
        );
        assert_eq!(counts.total(), c.instructions().len());
    }

    #[test]
    fn validate_rejects_gate_after_measure() {
        let mut instrs = vec![
            Instruction::new(GateKind::Measure, &[0]),
            Instruction::new(GateKind::X, &[0]),
        ];
        let err = QuantumCircuit::from_parts(1, instrs.clone(), vec![0], QubitSpace::Logical)
            .unwrap_err();
        assert_eq!(err, CircuitError::MeasurementNotTerminal(0));
        instrs.swap(0, 1);
        assert!(QuantumCircuit::from_parts(1, instrs, vec![0], QubitSpace::Logical).is_ok());
    }

    #[test]
    fn validate_rejects_duplicate_operand() {
        let instrs = vec![Instruction::new(GateKind::Cx, &[1, 1])];
        let err =
            QuantumCircuit::from_parts(2, instrs, vec![], QubitSpace::Logical).unwrap_err();
        assert_eq!(err, CircuitError::DuplicateOperand(1));
    }

    #[test]
    fn validate_rejects_inconsistent_measure_map() {
        let instrs = vec![Instruction::new(GateKind::Measure, &[0])];
        let err =
            QuantumCircuit::from_parts(2, instrs, vec![1], QubitSpace::Logical).unwrap_err();
        assert_eq!(err, CircuitError::InconsistentMeasureMap);
    }

    #[test]
    fn json_round_trip() {
        let c = ghz3();
        let text = c.to_json();
        let back = QuantumCircuit::from_json(&text).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn json_rejects_unknown_gate() {
        let text = r#"{
          "num_qubits": 1,
          "instructions": [{"gate": "cnot", "qubits": [0], "params": []}],
          "measured_qubits": [],
          "qubit_space": "Logical"
        }"#;
        assert!(QuantumCircuit::from_json(text).is_err());
    }

    #[test]
    fn relabel_tracks_measure_map() {
        let c = ghz3();
        let mapped = c.relabeled(&[2, 0, 1], 4, QubitSpace::Physical);
        assert_eq!(mapped.measured_qubits(), &[2, 0, 1]);
        assert_eq!(mapped.num_qubits, 4);
        assert_eq!(mapped.depth(), c.depth());
    }

    #[test]
    fn fingerprint_distinguishes_angles() {
        let mut a = QuantumCircuit::new(1, QubitSpace::Logical);
        a.push(GateKind::Rz(0.5), &[0]);
        let mut b = QuantumCircuit::new(1, QubitSpace::Logical);
        b.push(GateKind::Rz(0.25), &[0]);
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
