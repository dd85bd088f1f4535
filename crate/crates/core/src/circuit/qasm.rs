//! OpenQASM 2 subset parser and serializer.
//!
//! Supported grammar (one statement per `;`, `//` comments):
//!
//! ```text
//! OPENQASM 2.0;                 (optional)
//! include "qelib1.inc";         (optional)
//! qreg <name>[<n>];             (exactly one)
//! creg <name>[<m>];             (at most one)
//! id|x|sx|h|s|t <q>;            rz(<angle>) <q>;
//! cx|cz|swap <q>,<q>;           ccx <q>,<q>,<q>;
//! measure <q> -> <c>;
//! ```
//!
//! where `<q>` is `name[index]` and `<angle>` is a float literal or a
//! `pi`-expression of the form `[-][k*]pi[/d]`.

use std::f64::consts::PI;

use thiserror::Error;

use super::{GateKind, Instruction, QuantumCircuit, QubitSpace, MAX_QUBITS};

#[derive(Debug, Error, PartialEq)]
#[error("line {line}, column {col}: {kind}")]
pub struct QasmError {
    pub line: usize,
    pub col: usize,
    pub kind: QasmErrorKind,
}

#[derive(Debug, Error, PartialEq)]
pub enum QasmErrorKind {
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("expected {expected}, found `{found}`")]
    Expected { expected: &'static str, found: String },
    #[error("unsupported gate `{0}`")]
    UnsupportedGate(String),
    #[error("register size {0} exceeds the supported maximum {MAX_QUBITS}")]
    RegisterTooLarge(u64),
    #[error("duplicate register declaration `{0}`")]
    DuplicateRegister(String),
    #[error("unknown register `{0}`")]
    UnknownRegister(String),
    #[error("index {index} out of range for register of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("missing qreg declaration before first statement using qubits")]
    MissingQreg,
    #[error("classical bit {0} is already written")]
    ClassicalBitReused(usize),
    #[error("invalid angle expression")]
    BadAngle,
    #[error("{0}")]
    Circuit(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Int(u64),
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Semi,
    Arrow,
    Star,
    Slash,
    Minus,
    Str(String),
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

type Spanned = (Tok, usize, usize);

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn err(&self, kind: QasmErrorKind) -> QasmError {
        QasmError {
            line: self.line,
            col: self.col,
            kind,
        }
    }

    fn bump(&mut self) -> Option<u8> {
        let b = *self.src.get(self.pos)?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn tokenize(mut self) -> Result<Vec<Spanned>, QasmError> {
        let mut toks = Vec::new();
        while let Some(b) = self.peek() {
            let (line, col) = (self.line, self.col);
            match b {
                b' ' | b'\t' | b'\r' | b'\n' => {
                    self.bump();
                }
                b'/' if self.src.get(self.pos + 1) == Some(&b'/') => {
                    while let Some(c) = self.bump() {
                        if c == b'\n' {
                            break;
                        }
                    }
                }
                b'/' => {
                    self.bump();
                    toks.push((Tok::Slash, line, col));
                }
                b'[' => {
                    self.bump();
                    toks.push((Tok::LBracket, line, col));
                }
                b']' => {
                    self.bump();
                    toks.push((Tok::RBracket, line, col));
                }
                b'(' => {
                    self.bump();
                    toks.push((Tok::LParen, line, col));
                }
                b')' => {
                    self.bump();
                    toks.push((Tok::RParen, line, col));
                }
                b',' => {
                    self.bump();
                    toks.push((Tok::Comma, line, col));
                }
                b';' => {
                    self.bump();
                    toks.push((Tok::Semi, line, col));
                }
                b'*' => {
                    self.bump();
                    toks.push((Tok::Star, line, col));
                }
                b'-' if self.src.get(self.pos + 1) == Some(&b'>') => {
                    self.bump();
                    self.bump();
                    toks.push((Tok::Arrow, line, col));
                }
                b'-' => {
                    self.bump();
                    toks.push((Tok::Minus, line, col));
                }
                b'"' => {
                    self.bump();
                    let mut s = String::new();
                    loop {
                        match self.bump() {
                            Some(b'"') => break,
                            Some(c) => s.push(c as char),
                            None => return Err(self.err(QasmErrorKind::UnexpectedChar('"'))),
                        }
                    }
                    toks.push((Tok::Str(s), line, col));
                }
                b'0'..=b'9' | b'.' => {
                    let start = self.pos;
                    let mut is_float = false;
                    while let Some(c) = self.peek() {
                        match c {
                            b'0'..=b'9' => {
                                self.bump();
                            }
                            b'.' | b'e' | b'E' => {
                                is_float = true;
                                self.bump();
                                if matches!(self.peek(), Some(b'+') | Some(b'-'))
                                    && matches!(c, b'e' | b'E')
                                {
                                    self.bump();
                                }
                            }
                            _ => break,
                        }
                    }
                    let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                    if is_float {
                        let v: f64 = text.parse().map_err(|_| {
                            self.err(QasmErrorKind::Expected {
                                expected: "number",
                                found: text.to_string(),
                            })
                        })?;
                        toks.push((Tok::Number(v), line, col));
                    } else {
                        let v: u64 = text.parse().map_err(|_| {
                            self.err(QasmErrorKind::RegisterTooLarge(u64::MAX))
                        })?;
                        toks.push((Tok::Int(v), line, col));
                    }
                }
                b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                    let start = self.pos;
                    while let Some(c) = self.peek() {
                        if c.is_ascii_alphanumeric() || c == b'_' || c == b'.' {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                    toks.push((Tok::Ident(text.to_string()), line, col));
                }
                other => return Err(self.err(QasmErrorKind::UnexpectedChar(other as char))),
            }
        }
        Ok(toks)
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    qreg: Option<(String, usize)>,
    creg: Option<(String, usize)>,
}

impl Parser {
    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|(_, l, c)| (*l, *c))
            .unwrap_or_else(|| {
                self.toks
                    .last()
                    .map(|(_, l, c)| (*l, *c + 1))
                    .unwrap_or((1, 1))
            })
    }

    fn err(&self, kind: QasmErrorKind) -> QasmError {
        let (line, col) = self.here();
        QasmError { line, col, kind }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, expected: &'static str) -> Result<(), QasmError> {
        match self.bump() {
            Some(t) if t == want => Ok(()),
            other => Err(QasmError {
                line: self.here().0,
                col: self.here().1,
                kind: QasmErrorKind::Expected {
                    expected,
                    found: format!("{other:?}"),
                },
            }),
        }
    }

    fn expect_ident(&mut self) -> Result<String, QasmError> {
        match self.bump() {
            Some(Tok::Ident(s)) => Ok(s),
            other => Err(self.err(QasmErrorKind::Expected {
                expected: "identifier",
                found: format!("{other:?}"),
            })),
        }
    }

    fn expect_index(&mut self) -> Result<u64, QasmError> {
        self.expect(Tok::LBracket, "`[`")?;
        let v = match self.bump() {
            Some(Tok::Int(v)) => v,
            other => {
                return Err(self.err(QasmErrorKind::Expected {
                    expected: "integer index",
                    found: format!("{other:?}"),
                }))
            }
        };
        self.expect(Tok::RBracket, "`]`")?;
        Ok(v)
    }

    fn qubit_operand(&mut self) -> Result<usize, QasmError> {
        let name = self.expect_ident()?;
        let (qname, size) = self
            .qreg
            .clone()
            .ok_or_else(|| self.err(QasmErrorKind::MissingQreg))?;
        if name != qname {
            return Err(self.err(QasmErrorKind::UnknownRegister(name)));
        }
        let index = self.expect_index()? as usize;
        if index >= size {
            return Err(self.err(QasmErrorKind::IndexOutOfRange { index, size }));
        }
        Ok(index)
    }

    /// `[-] (number | [k*] pi [/d] | k [*pi] [/d])`
    fn angle(&mut self) -> Result<f64, QasmError> {
        let mut sign = 1.0;
        if self.peek() == Some(&Tok::Minus) {
            self.bump();
            sign = -1.0;
        }
        let mut value = match self.bump() {
            Some(Tok::Number(v)) => v,
            Some(Tok::Int(v)) => {
                let mut v = v as f64;
                if self.peek() == Some(&Tok::Star) {
                    self.bump();
                    match self.bump() {
                        Some(Tok::Ident(p)) if p == "pi" => v *= PI,
                        _ => return Err(self.err(QasmErrorKind::BadAngle)),
                    }
                }
                v
            }
            Some(Tok::Ident(p)) if p == "pi" => PI,
            _ => return Err(self.err(QasmErrorKind::BadAngle)),
        };
        if self.peek() == Some(&Tok::Slash) {
            self.bump();
            match self.bump() {
                Some(Tok::Int(d)) if d > 0 => value /= d as f64,
                Some(Tok::Number(d)) if d != 0.0 => value /= d,
                _ => return Err(self.err(QasmErrorKind::BadAngle)),
            }
        }
        Ok(sign * value)
    }
}

/// Parses the documented OpenQASM-2 subset into a logical circuit.
pub fn parse_qasm_subset(text: &str) -> Result<QuantumCircuit, QasmError> {
    let toks = Lexer::new(text).tokenize()?;
    let mut p = Parser {
        toks,
        pos: 0,
        qreg: None,
        creg: None,
    };
    let mut instructions: Vec<Instruction> = Vec::new();
    // clbit -> qubit, filled by measure statements.
    let mut clbit_map: Vec<Option<usize>> = Vec::new();

    while let Some(tok) = p.peek().cloned() {
        match tok {
            Tok::Ident(word) => match word.as_str() {
                "OPENQASM" => {
                    p.bump();
                    match p.bump() {
                        Some(Tok::Number(_)) | Some(Tok::Int(_)) => {}
                        other => {
                            return Err(p.err(QasmErrorKind::Expected {
                                expected: "version number",
                                found: format!("{other:?}"),
                            }))
                        }
                    }
                    p.expect(Tok::Semi, "`;`")?;
                }
                "include" => {
                    p.bump();
                    match p.bump() {
                        Some(Tok::Str(_)) => {}
                        other => {
                            return Err(p.err(QasmErrorKind::Expected {
                                expected: "include path string",
                                found: format!("{other:?}"),
                            }))
                        }
                    }
                    p.expect(Tok::Semi, "`;`")?;
                }
                "qreg" | "creg" => {
                    p.bump();
                    let name = p.expect_ident()?;
                    let size = p.expect_index()?;
                    if size > MAX_QUBITS as u64 {
                        return Err(p.err(QasmErrorKind::RegisterTooLarge(size)));
                    }
                    p.expect(Tok::Semi, "`;`")?;
                    let slot = if word == "qreg" { &mut p.qreg } else { &mut p.creg };
                    if slot.is_some() {
                        return Err(p.err(QasmErrorKind::DuplicateRegister(name)));
                    }
                    *slot = Some((name, size as usize));
                    if word == "creg" {
                        clbit_map = vec![None; size as usize];
                    }
                }
                "measure" => {
                    p.bump();
                    let q = p.qubit_operand()?;
                    p.expect(Tok::Arrow, "`->`")?;
                    let name = p.expect_ident()?;
                    let (cname, csize) = p
                        .creg
                        .clone()
                        .ok_or_else(|| p.err(QasmErrorKind::UnknownRegister(name.clone())))?;
                    if name != cname {
                        return Err(p.err(QasmErrorKind::UnknownRegister(name)));
                    }
                    let c = p.expect_index()? as usize;
                    if c >= csize {
                        return Err(p.err(QasmErrorKind::IndexOutOfRange {
                            index: c,
                            size: csize,
                        }));
                    }
                    p.expect(Tok::Semi, "`;`")?;
                    if clbit_map[c].is_some() {
                        return Err(p.err(QasmErrorKind::ClassicalBitReused(c)));
                    }
                    clbit_map[c] = Some(q);
                    instructions.push(Instruction::new(GateKind::Measure, &[q]));
                }
                gate => {
                    p.bump();
                    let params: Vec<f64> = if p.peek() == Some(&Tok::LParen) {
                        p.bump();
                        let a = p.angle()?;
                        p.expect(Tok::RParen, "`)`")?;
                        vec![a]
                    } else {
                        vec![]
                    };
                    let kind = super::gate_from_name(gate, &params)
                        .ok_or_else(|| p.err(QasmErrorKind::UnsupportedGate(gate.to_string())))?;
                    let mut qubits = vec![p.qubit_operand()?];
                    while p.peek() == Some(&Tok::Comma) {
                        p.bump();
                        qubits.push(p.qubit_operand()?);
                    }
                    p.expect(Tok::Semi, "`;`")?;
                    if qubits.len() != kind.arity() {
                        return Err(p.err(QasmErrorKind::Expected {
                            expected: "operand count matching gate arity",
                            found: format!("{} operands", qubits.len()),
                        }));
                    }
                    instructions.push(Instruction::new(kind, &qubits));
                }
            },
            other => {
                return Err(p.err(QasmErrorKind::Expected {
                    expected: "statement",
                    found: format!("{other:?}"),
                }))
            }
        }
    }

    let num_qubits = p.qreg.map(|(_, n)| n).unwrap_or(0);
    // Compact the clbit map: the circuit keeps only written classical bits,
    // in clbit order.
    let measured_qubits: Vec<usize> = clbit_map.into_iter().flatten().collect();
    QuantumCircuit::from_parts(num_qubits, instructions, measured_qubits, QubitSpace::Logical)
        .map_err(|e| QasmError {
            line: 1,
            col: 1,
            kind: QasmErrorKind::Circuit(e.to_string()),
        })
}

/// Serializes a circuit in the subset grammar; `parse_qasm_subset` inverts it.
pub fn serialize_qasm_subset(circuit: &QuantumCircuit) -> String {
    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    out.push_str(&format!("qreg q[{}];\n", circuit.num_qubits));
    if !circuit.measured_qubits().is_empty() {
        out.push_str(&format!("creg c[{}];\n", circuit.measured_qubits().len()));
    }
    for instr in circuit.instructions() {
        match instr.kind {
            GateKind::Measure => {
                let q = instr.qubits()[0];
                let c = circuit
                    .measured_qubits()
                    .iter()
                    .position(|&m| m == q)
                    .expect("measured qubit present in map");
                out.push_str(&format!("measure q[{q}] -> c[{c}];\n"));
            }
            GateKind::Rz(theta) => {
                out.push_str(&format!("rz({theta}) q[{}];\n", instr.qubits()[0]));
            }
            kind => {
                let args: Vec<String> =
                    instr.qubits().iter().map(|q| format!("q[{q}]")).collect();
                out.push_str(&format!("{} {};\n", kind.name(), args.join(",")));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_program() {
        let c = parse_qasm_subset("qreg q[1]; x q[0];").unwrap();
        assert_eq!(c.num_qubits, 1);
        assert_eq!(c.instructions().len(), 1);
        assert_eq!(c.instructions()[0].kind, GateKind::X);
    }

    #[test]
    fn rejects_unsupported_gate() {
        let err = parse_qasm_subset("qreg q[2]; cnot q[0],q[1];").unwrap_err();
        assert_eq!(err.kind, QasmErrorKind::UnsupportedGate("cnot".into()));
    }

    #[test]
    fn rejects_oversized_register() {
        let err = parse_qasm_subset("qreg q[99999999999];").unwrap_err();
        assert!(matches!(err.kind, QasmErrorKind::RegisterTooLarge(_)));
    }

    #[test]
    fn reports_line_and_column() {
        let err = parse_qasm_subset("qreg q[2];\nx q[5];").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(matches!(err.kind, QasmErrorKind::IndexOutOfRange { .. }));
    }

    #[test]
    fn angle_expressions() {
        let c =
            parse_qasm_subset("qreg q[1]; rz(pi/2) q[0]; rz(-pi) q[0]; rz(3*pi/4) q[0]; rz(0.25) q[0];")
                .unwrap();
        let angles: Vec<f64> = c
            .instructions()
            .iter()
            .map(|i| match i.kind {
                GateKind::Rz(t) => t,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(
            angles,
            vec![
                std::f64::consts::FRAC_PI_2,
                -std::f64::consts::PI,
                3.0 * std::f64::consts::FRAC_PI_4,
                0.25
            ]
        );
    }

    #[test]
    fn round_trip_with_measures_out_of_order() {
        let text = "qreg q[3]; creg c[2];\nh q[0]; cx q[0],q[1];\nmeasure q[1] -> c[1];\nmeasure q[0] -> c[0];";
        let c = parse_qasm_subset(text).unwrap();
        assert_eq!(c.measured_qubits(), &[0, 1]);
        let again = parse_qasm_subset(&serialize_qasm_subset(&c)).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn rejects_reused_classical_bit() {
        let err = parse_qasm_subset(
            "qreg q[2]; creg c[1]; measure q[0] -> c[0]; measure q[1] -> c[0];",
        )
        .unwrap_err();
        assert_eq!(err.kind, QasmErrorKind::ClassicalBitReused(0));
    }
}
