//! Gate-list circuits over a small work register.
//!
//! The text format is line oriented: a `qubits <n>` header, then one gate
//! per line (`H|X|Y|Z|S|T|I <q>`, `CNOT <control> <target>`, or
//! `U <q> <8 floats>` giving a row-major 2x2 matrix as re/im pairs).
//! `#` starts a comment. Qubit 0 is the most significant bit of a basis
//! index, so `X 0` maps |00> to |10>.

use num_complex::Complex64 as C64;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    S,
    T,
    I,
    /// Custom single-qubit unitary from a `U` line.
    U,
    Cnot,
}

impl GateKind {
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::S => "S",
            GateKind::T => "T",
            GateKind::I => "I",
            GateKind::U => "U",
            GateKind::Cnot => "CNOT",
        }
    }
}

/// One gate application. CNOT stores control and target; single-qubit
/// gates store their 2x2 matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub target: usize,
    pub control: Option<usize>,
    matrix: Option<[[C64; 2]; 2]>,
}

fn named_matrix(kind: GateKind) -> [[C64; 2]; 2] {
    let r = |x: f64| C64::new(x, 0.0);
    let i = |x: f64| C64::new(0.0, x);
    match kind {
        GateKind::H => [[r(FRAC_1_SQRT_2), r(FRAC_1_SQRT_2)], [r(FRAC_1_SQRT_2), r(-FRAC_1_SQRT_2)]],
        GateKind::X => [[r(0.0), r(1.0)], [r(1.0), r(0.0)]],
        GateKind::Y => [[r(0.0), i(-1.0)], [i(1.0), r(0.0)]],
        GateKind::Z => [[r(1.0), r(0.0)], [r(0.0), r(-1.0)]],
        GateKind::S => [[r(1.0), r(0.0)], [r(0.0), i(1.0)]],
        GateKind::T => [[r(1.0), r(0.0)], [r(0.0), C64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2)]],
        GateKind::I => [[r(1.0), r(0.0)], [r(0.0), r(1.0)]],
        GateKind::U | GateKind::Cnot => unreachable!("no fixed matrix"),
    }
}

/// Max-norm deviation of M from unitarity, ||M^dag M - I||_max.
fn unitarity_deviation(m: &[[C64; 2]; 2]) -> f64 {
    let mut worst = 0.0f64;
    for a in 0..2 {
        for b in 0..2 {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..2 {
                s += m[k][a].conj() * m[k][b];
            }
            let target = if a == b { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            worst = worst.max((s - target).norm());
        }
    }
    worst
}

impl Gate {
    pub fn single(kind: GateKind, target: usize) -> Gate {
        assert!(!matches!(kind, GateKind::U | GateKind::Cnot));
        Gate { kind, target, control: None, matrix: Some(named_matrix(kind)) }
    }

    pub fn custom(target: usize, matrix: [[C64; 2]; 2]) -> Result<Gate> {
        let dev = unitarity_deviation(&matrix);
        if dev > 1e-9 {
            return Err(Error::NonUnitary { line: 0, deviation: dev });
        }
        Ok(Gate { kind: GateKind::U, target, control: None, matrix: Some(matrix) })
    }

    pub fn cnot(control: usize, target: usize) -> Gate {
        Gate { kind: GateKind::Cnot, target, control: Some(control), matrix: None }
    }

    pub fn is_cnot(&self) -> bool {
        self.kind == GateKind::Cnot
    }

    pub fn is_identity(&self) -> bool {
        self.kind == GateKind::I
    }

    /// 2x2 matrix of a single-qubit gate; panics on CNOT.
    pub fn matrix(&self) -> &[[C64; 2]; 2] {
        self.matrix.as_ref().expect("CNOT has no 2x2 matrix")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumCircuit {
    pub n: usize,
    pub gates: Vec<Gate>,
}

impl QuantumCircuit {
    pub fn new(n: usize, gates: Vec<Gate>) -> Result<QuantumCircuit> {
        if n == 0 {
            return Err(Error::InvalidCircuit("work register needs at least one qubit".into()));
        }
        for g in &gates {
            if g.target >= n {
                return Err(Error::InvalidCircuit(format!(
                    "qubit index {} out of range for n = {n}",
                    g.target
                )));
            }
            if let Some(c) = g.control {
                if c >= n {
                    return Err(Error::InvalidCircuit(format!(
                        "qubit index {c} out of range for n = {n}"
                    )));
                }
                if c == g.target {
                    return Err(Error::InvalidCircuit("CNOT control equals target".into()));
                }
            }
        }
        Ok(QuantumCircuit { n, gates })
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn single_count(&self) -> usize {
        self.gates.iter().filter(|g| !g.is_cnot()).count()
    }

    pub fn cnot_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_cnot()).count()
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }
}

/// Work-register state vector; index bit of qubit q is (n-1-q).
#[derive(Debug, Clone, PartialEq)]
pub struct WorkState {
    pub n: usize,
    pub amps: Vec<C64>,
}

impl WorkState {
    /// |0...0> on n qubits.
    pub fn zero(n: usize) -> WorkState {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[0] = C64::new(1.0, 0.0);
        WorkState { n, amps }
    }

    /// Computational basis state |b> with qubit 0 as the most significant bit.
    pub fn basis(n: usize, b: usize) -> WorkState {
        assert!(b < (1 << n));
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[b] = C64::new(1.0, 0.0);
        WorkState { n, amps }
    }

    pub fn from_amps(n: usize, amps: Vec<C64>) -> Result<WorkState> {
        if amps.len() != (1 << n) {
            return Err(Error::DimensionMismatch { expected: 1 << n, got: amps.len() });
        }
        let norm2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm2.sqrt() - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!("state norm {} != 1", norm2.sqrt())));
        }
        Ok(WorkState { n, amps })
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &WorkState) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }
}

/// Applies a single gate to a state vector of n qubits, in place.
pub(crate) fn apply_gate(amps: &mut [C64], n: usize, gate: &Gate) {
    match gate.kind {
        GateKind::Cnot => {
            let cb = n - 1 - gate.control.unwrap();
            let tb = n - 1 - gate.target;
            let cmask = 1usize << cb;
            let tmask = 1usize << tb;
            for idx in 0..amps.len() {
                if idx & cmask != 0 && idx & tmask == 0 {
                    amps.swap(idx, idx | tmask);
                }
            }
        }
        _ => {
            let m = gate.matrix();
            let tb = n - 1 - gate.target;
            let tmask = 1usize << tb;
            for idx in 0..amps.len() {
                if idx & tmask == 0 {
                    let a0 = amps[idx];
                    let a1 = amps[idx | tmask];
                    amps[idx] = m[0][0] * a0 + m[0][1] * a1;
                    amps[idx | tmask] = m[1][0] * a0 + m[1][1] * a1;
                }
            }
        }
    }
}

/// Applies the first t gates of the circuit to `state`.
pub fn apply_circuit_prefix(circuit: &QuantumCircuit, t: usize, state: &WorkState) -> Result<WorkState> {
    if t > circuit.len() {
        return Err(Error::Domain(format!(
            "prefix length {t} exceeds circuit length {}",
            circuit.len()
        )));
    }
    if state.n != circuit.n {
        return Err(Error::DimensionMismatch { expected: 1 << circuit.n, got: 1 << state.n });
    }
    let mut out = state.clone();
    for g in &circuit.gates[..t] {
        apply_gate(&mut out.amps, circuit.n, g);
    }
    Ok(out)
}

/// Appends 2L identity gates on qubit 0, tripling the gate count.
pub fn pad_with_identities(circuit: &QuantumCircuit) -> QuantumCircuit {
    let l = circuit.len();
    let mut gates = circuit.gates.clone();
    gates.extend((0..2 * l).map(|_| Gate::single(GateKind::I, 0)));
    QuantumCircuit { n: circuit.n, gates }
}

/// Parses the circuit text format.
pub fn parse_circuit(text: &str) -> Result<QuantumCircuit> {
    let mut n: Option<usize> = None;
    let mut gates: Vec<Gate> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }

        if n.is_none() {
            if tokens[0] != "qubits" || tokens.len() != 2 {
                return Err(Error::Parse { line, msg: "expected `qubits <n>` header".into() });
            }
            let v: usize = tokens[1]
                .parse()
                .map_err(|_| Error::Parse { line, msg: format!("bad qubit count `{}`", tokens[1]) })?;
            if v == 0 {
                return Err(Error::Parse { line, msg: "qubit count must be positive".into() });
            }
            n = Some(v);
            continue;
        }
        let n = n.unwrap();

        let parse_qubit = |tok: &str| -> Result<usize> {
            let q: usize = tok
                .parse()
                .map_err(|_| Error::Parse { line, msg: format!("bad qubit index `{tok}`") })?;
            if q >= n {
                return Err(Error::Parse { line, msg: format!("qubit index {q} out of range (n = {n})") });
            }
            Ok(q)
        };

        match tokens[0] {
            "H" | "X" | "Y" | "Z" | "S" | "T" | "I" => {
                if tokens.len() != 2 {
                    return Err(Error::Parse { line, msg: format!("`{}` takes one qubit", tokens[0]) });
                }
                let kind = match tokens[0] {
                    "H" => GateKind::H,
                    "X" => GateKind::X,
                    "Y" => GateKind::Y,
                    "Z" => GateKind::Z,
                    "S" => GateKind::S,
                    "T" => GateKind::T,
                    _ => GateKind::I,
                };
                gates.push(Gate::single(kind, parse_qubit(tokens[1])?));
            }
            "CNOT" => {
                if tokens.len() != 3 {
                    return Err(Error::Parse { line, msg: "`CNOT` takes control and target".into() });
                }
                let c = parse_qubit(tokens[1])?;
                let t = parse_qubit(tokens[2])?;
                if c == t {
                    return Err(Error::Parse { line, msg: "CNOT control equals target".into() });
                }
                gates.push(Gate::cnot(c, t));
            }
            "U" => {
                if tokens.len() != 10 {
                    return Err(Error::Parse {
                        line,
                        msg: "`U` takes a qubit and 8 floats (row-major re/im pairs)".into(),
                    });
                }
                let q = parse_qubit(tokens[1])?;
                let mut vals = [0.0f64; 8];
                for (k, tok) in tokens[2..].iter().enumerate() {
                    vals[k] = tok
                        .parse()
                        .map_err(|_| Error::Parse { line, msg: format!("bad float `{tok}`") })?;
                }
                let m = [
                    [C64::new(vals[0], vals[1]), C64::new(vals[2], vals[3])],
                    [C64::new(vals[4], vals[5]), C64::new(vals[6], vals[7])],
                ];
                let gate = Gate::custom(q, m).map_err(|e| match e {
                    Error::NonUnitary { deviation, .. } => Error::NonUnitary { line, deviation },
                    other => other,
                })?;
                gates.push(gate);
            }
            other => {
                return Err(Error::Parse { line, msg: format!("unknown gate `{other}`") });
            }
        }
    }

    let n = n.ok_or(Error::Parse { line: 0, msg: "missing `qubits <n>` header".into() })?;
    QuantumCircuit::new(n, gates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn parses_bell_circuit() {
        let circ = parse_circuit("qubits 2\nH 0\nCNOT 0 1\n").unwrap();
        assert_eq!(circ.n, 2);
        assert_eq!(circ.len(), 2);
        assert_eq!(circ.single_count(), 1);
        assert_eq!(circ.cnot_count(), 1);
    }

    #[test]
    fn parses_custom_gate_equal_to_x() {
        let circ = parse_circuit("qubits 1\nU 0 0.0 0.0 1.0 0.0 1.0 0.0 0.0 0.0\n").unwrap();
        assert_eq!(circ.gates[0].kind, GateKind::U);
        assert_eq!(circ.gates[0].matrix(), Gate::single(GateKind::X, 0).matrix());
    }

    #[test]
    fn skips_comments_and_blank_lines() {
        let circ = parse_circuit("# a circuit\nqubits 1\n\nX 0 # flip\n# done\n").unwrap();
        assert_eq!(circ.len(), 1);
        assert_eq!(circ.gates[0].kind, GateKind::X);
    }

    #[test]
    fn rejects_bad_header() {
        assert!(matches!(parse_circuit("H 0\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_circuit(""), Err(Error::Parse { line: 0, .. })));
    }

    #[test]
    fn rejects_out_of_range_index() {
        let err = parse_circuit("qubits 2\nH 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn rejects_cnot_on_same_qubit() {
        let err = parse_circuit("qubits 2\nCNOT 1 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn rejects_non_unitary_custom_gate() {
        let err = parse_circuit("qubits 1\nU 0 1.0 0.0 0.0 0.0 0.0 0.0 0.5 0.0\n").unwrap_err();
        assert!(matches!(err, Error::NonUnitary { line: 2, .. }));
    }

    #[test]
    fn named_gates_are_unitary_to_machine_precision() {
        for kind in [GateKind::H, GateKind::X, GateKind::Y, GateKind::Z, GateKind::S, GateKind::T, GateKind::I] {
            let g = Gate::single(kind, 0);
            assert!(unitarity_deviation(g.matrix()) <= 1e-12, "{:?}", kind);
        }
    }

    #[test]
    fn qubit_zero_is_most_significant() {
        let circ = parse_circuit("qubits 2\nX 0\n").unwrap();
        let out = apply_circuit_prefix(&circ, 1, &WorkState::zero(2)).unwrap();
        // |00> -> |10>, index 0b10 = 2
        assert_eq!(out.amps[2], c(1.0, 0.0));
    }

    #[test]
    fn bell_prefix_application() {
        let circ = parse_circuit("qubits 2\nH 0\nCNOT 0 1\n").unwrap();
        let out = apply_circuit_prefix(&circ, 2, &WorkState::zero(2)).unwrap();
        let s = FRAC_1_SQRT_2;
        assert!((out.amps[0] - c(s, 0.0)).norm() < 1e-15);
        assert!((out.amps[3] - c(s, 0.0)).norm() < 1e-15);
        assert!(out.amps[1].norm() < 1e-15 && out.amps[2].norm() < 1e-15);
    }

    #[test]
    fn zero_prefix_is_identity() {
        let circ = parse_circuit("qubits 2\nH 0\nCNOT 0 1\n").unwrap();
        let st = WorkState::zero(2);
        assert_eq!(apply_circuit_prefix(&circ, 0, &st).unwrap(), st);
    }

    #[test]
    fn prefix_beyond_length_errors() {
        let circ = parse_circuit("qubits 1\nX 0\n").unwrap();
        assert!(apply_circuit_prefix(&circ, 2, &WorkState::zero(1)).is_err());
    }

    #[test]
    fn padding_triples_length_and_preserves_prefixes() {
        let circ = parse_circuit("qubits 2\nH 0\nCNOT 0 1\n").unwrap();
        let padded = pad_with_identities(&circ);
        assert_eq!(padded.len(), 6);
        assert!(padded.gates[2..].iter().all(|g| g.is_identity() && g.target == 0));
        // identity padding leaves every reachable work state fixed past t = L
        let full = apply_circuit_prefix(&circ, 2, &WorkState::zero(2)).unwrap();
        for t in 2..=6 {
            let w = apply_circuit_prefix(&padded, t, &WorkState::zero(2)).unwrap();
            assert!((w.inner(&full).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn padding_empty_circuit_is_empty() {
        let circ = QuantumCircuit::new(1, vec![]).unwrap();
        assert_eq!(pad_with_identities(&circ).len(), 0);
    }

    fn arb_gate(n: usize) -> impl Strategy<Value = Gate> {
        prop_oneof![
            (0..n).prop_map(|q| Gate::single(GateKind::H, q)),
            (0..n).prop_map(|q| Gate::single(GateKind::T, q)),
            (0..n).prop_map(|q| Gate::single(GateKind::Y, q)),
            (0..n, 0..n - 1).prop_map(move |(c, t0)| {
                let t = if t0 >= c { t0 + 1 } else { t0 };
                Gate::cnot(c, t)
            }),
        ]
    }

    proptest! {
        #[test]
        fn prefixes_compose_and_preserve_norm(
            gates in proptest::collection::vec(arb_gate(3), 1..8),
            split in 0usize..8,
        ) {
            let circ = QuantumCircuit::new(3, gates).unwrap();
            let t1 = split.min(circ.len());
            let st = WorkState::zero(3);
            let full = apply_circuit_prefix(&circ, circ.len(), &st).unwrap();
            prop_assert!((full.norm() - 1.0).abs() < 1e-12);

            let mid = apply_circuit_prefix(&circ, t1, &st).unwrap();
            let tail = QuantumCircuit::new(3, circ.gates[t1..].to_vec()).unwrap();
            let glued = apply_circuit_prefix(&tail, tail.len(), &mid).unwrap();
            for (a, b) in glued.amps.iter().zip(&full.amps) {
                prop_assert!((a - b).norm() < 1e-12);
            }
        }
    }
}
