//! Gate-level lowering of QAOA rounds and entangling-gate accounting.
//!
//! Entangling-equivalent weights: ZZ and CNOT count 1, TOFFOLI and
//! CCZ_PHASE count 5. Qubit `q < n` holds variable `q`; ancillas follow.
//!
//! Gate conventions: `RZ(θ) = e^{-iθZ/2}`, `ZZ(θ) = e^{-iθ Z⊗Z/2}`,
//! `CCZ_PHASE(θ)` multiplies `|111⟩` by `e^{iθ}`.

use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cnf::{Clause, CnfFormula};
use crate::error::{Error, Result};

pub const ZZ_WEIGHT: u64 = 1;
pub const CNOT_WEIGHT: u64 = 1;
pub const TOFFOLI_WEIGHT: u64 = 5;
pub const CCZ_PHASE_WEIGHT: u64 = 5;

/// Grover-oracle cost per iteration, in entangling gates per clause.
pub const GROVER_ENTANGLING_PER_CLAUSE: u64 = 50;
pub const GROVER_ANCILLAS_PER_CLAUSE: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    H,
    X,
    Rz(f64),
    Zz(f64),
    Cnot,
    Toffoli,
    CczPhase(f64),
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::X => "X",
            GateKind::Rz(_) => "RZ",
            GateKind::Zz(_) => "ZZ",
            GateKind::Cnot => "CNOT",
            GateKind::Toffoli => "TOFFOLI",
            GateKind::CczPhase(_) => "CCZ_PHASE",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::H | GateKind::X | GateKind::Rz(_) => 1,
            GateKind::Zz(_) | GateKind::Cnot => 2,
            GateKind::Toffoli | GateKind::CczPhase(_) => 3,
        }
    }

    pub fn angle(self) -> Option<f64> {
        match self {
            GateKind::Rz(a) | GateKind::Zz(a) | GateKind::CczPhase(a) => Some(a),
            _ => None,
        }
    }

    pub fn entangling_weight(self) -> u64 {
        match self {
            GateKind::H | GateKind::X | GateKind::Rz(_) => 0,
            GateKind::Zz(_) => ZZ_WEIGHT,
            GateKind::Cnot => CNOT_WEIGHT,
            GateKind::Toffoli => TOFFOLI_WEIGHT,
            GateKind::CczPhase(_) => CCZ_PHASE_WEIGHT,
        }
    }
}

/// A gate and its operands. `CNOT` is `[control, target]`, `TOFFOLI` is
/// `[control, control, target]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
}

impl Gate {
    fn new(kind: GateKind, qubits: &[usize]) -> Self {
        debug_assert_eq!(kind.arity(), qubits.len());
        Gate {
            kind,
            qubits: qubits.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GateList {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl GateList {
    pub fn new(num_qubits: usize) -> Self {
        GateList {
            num_qubits,
            gates: Vec::new(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, kind: GateKind, qubits: &[usize]) -> Result<()> {
        if qubits.len() != kind.arity() {
            return Err(Error::InvalidArgument(format!(
                "{} takes {} qubits, got {}",
                kind.name(),
                kind.arity(),
                qubits.len()
            )));
        }
        if let Some(&q) = qubits.iter().find(|&&q| q >= self.num_qubits) {
            return Err(Error::InvalidArgument(format!(
                "qubit {q} out of range for {} qubits",
                self.num_qubits
            )));
        }
        for (i, a) in qubits.iter().enumerate() {
            if qubits[i + 1..].contains(a) {
                return Err(Error::InvalidArgument(format!("qubit {a} repeated in {}", kind.name())));
            }
        }
        self.gates.push(Gate::new(kind, qubits));
        Ok(())
    }

    /// Appends `other`, widening the register if needed.
    pub fn extend(&mut self, other: &GateList) {
        self.num_qubits = self.num_qubits.max(other.num_qubits);
        self.gates.extend(other.gates.iter().cloned());
    }

    pub fn entangling_count(&self) -> u64 {
        self.gates.iter().map(|g| g.kind.entangling_weight()).sum()
    }

    /// Applies the circuit to a `2^num_qubits` state; qubit `q` is bit `q`
    /// of the index.
    pub fn apply(&self, state: &mut [Complex64]) {
        assert_eq!(state.len(), 1usize << self.num_qubits, "state size mismatch");
        let bit = |q: usize| 1usize << q;
        for g in &self.gates {
            let q = &g.qubits;
            match g.kind {
                GateKind::H => {
                    let s = std::f64::consts::FRAC_1_SQRT_2;
                    for i in 0..state.len() {
                        if i & bit(q[0]) == 0 {
                            let j = i | bit(q[0]);
                            let (a, b) = (state[i], state[j]);
                            state[i] = (a + b) * s;
                            state[j] = (a - b) * s;
                        }
                    }
                }
                GateKind::X => {
                    for i in 0..state.len() {
                        if i & bit(q[0]) == 0 {
                            state.swap(i, i | bit(q[0]));
                        }
                    }
                }
                GateKind::Rz(t) => {
                    let (p0, p1) = (Complex64::cis(-t / 2.0), Complex64::cis(t / 2.0));
                    for (i, a) in state.iter_mut().enumerate() {
                        *a *= if i & bit(q[0]) == 0 { p0 } else { p1 };
                    }
                }
                GateKind::Zz(t) => {
                    let (even, odd) = (Complex64::cis(-t / 2.0), Complex64::cis(t / 2.0));
                    for (i, a) in state.iter_mut().enumerate() {
                        let parity = ((i >> q[0]) ^ (i >> q[1])) & 1;
                        *a *= if parity == 0 { even } else { odd };
                    }
                }
                GateKind::Cnot => {
                    for i in 0..state.len() {
                        if i & bit(q[0]) != 0 && i & bit(q[1]) == 0 {
                            state.swap(i, i | bit(q[1]));
                        }
                    }
                }
                GateKind::Toffoli => {
                    let controls = bit(q[0]) | bit(q[1]);
                    for i in 0..state.len() {
                        if i & controls == controls && i & bit(q[2]) == 0 {
                            state.swap(i, i | bit(q[2]));
                        }
                    }
                }
                GateKind::CczPhase(t) => {
                    let all = bit(q[0]) | bit(q[1]) | bit(q[2]);
                    let ph = Complex64::cis(t);
                    for (i, a) in state.iter_mut().enumerate() {
                        if i & all == all {
                            *a *= ph;
                        }
                    }
                }
            }
        }
    }
}

/// `e^{-iγ H_C}` for each clause, up to the global phase `e^{-iγ/8}` per
/// clause: one RZ per literal, three ZZ, and a CNOT-conjugated ZZ for the
/// three-body term (6 entangling-equivalents per clause).
pub fn lower_clauses(clauses: &[Clause], num_qubits: usize, gamma: f64) -> Result<GateList> {
    let mut g = GateList::new(num_qubits);
    for clause in clauses {
        let lits = clause.literals();
        let q: Vec<usize> = lits.iter().map(|l| l.var() as usize).collect();
        // literal j is false on (1 + s_j Z_j) / 2, with s_j = +1 for a positive literal
        let s: Vec<f64> = lits.iter().map(|l| l.sign() as f64).collect();
        for j in 0..3 {
            g.push(GateKind::Rz(gamma * s[j] / 4.0), &[q[j]])?;
        }
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            g.push(GateKind::Zz(gamma * s[a] * s[b] / 4.0), &[q[a], q[b]])?;
        }
        g.push(GateKind::Cnot, &[q[0], q[2]])?;
        g.push(GateKind::Zz(gamma * s[0] * s[1] * s[2] / 4.0), &[q[1], q[2]])?;
        g.push(GateKind::Cnot, &[q[0], q[2]])?;
    }
    Ok(g)
}

pub fn lower_problem_unitary(formula: &CnfFormula, gamma: f64) -> Result<GateList> {
    lower_clauses(formula.clauses(), formula.num_variables() as usize, gamma)
}

pub fn grover_mixer_ancillas(n: usize) -> usize {
    n.saturating_sub(3)
}

/// `e^{-iβ|+⟩⟨+|}` as `H^n X^n · C^{n-1}Phase(−β) · X^n H^n`, with the
/// multi-controlled phase built from a Toffoli AND-ladder on `n − 3`
/// ancillas and one CCZ_PHASE. Ancillas sit at indices `n..2n−3`.
pub fn lower_grover_mixer(n: usize, beta: f64) -> Result<GateList> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("the Grover mixer needs n ≥ 3, got {n}")));
    }
    let anc = grover_mixer_ancillas(n);
    let mut g = GateList::new(n + anc);
    for kind in [GateKind::H, GateKind::X] {
        for q in 0..n {
            g.push(kind, &[q])?;
        }
    }
    // ancilla i holds x_0 ∧ ... ∧ x_{i+1}
    let mut ladder = Vec::with_capacity(anc);
    for i in 0..anc {
        let prev = if i == 0 { 0 } else { n + i - 1 };
        ladder.push([prev, i + 1, n + i]);
    }
    for c in &ladder {
        g.push(GateKind::Toffoli, c)?;
    }
    let head = if anc == 0 { 0 } else { n + anc - 1 };
    g.push(GateKind::CczPhase(-beta), &[head, n - 2, n - 1])?;
    for c in ladder.iter().rev() {
        g.push(GateKind::Toffoli, c)?;
    }
    for kind in [GateKind::X, GateKind::H] {
        for q in 0..n {
            g.push(kind, &[q])?;
        }
    }
    Ok(g)
}

/// `e^{-iβ Σ X_i}` as `H · RZ(2β) · H` on every qubit.
pub fn lower_x_mixer(n: usize, beta: f64) -> GateList {
    let mut g = GateList::new(n);
    for q in 0..n {
        g.gates.push(Gate::new(GateKind::H, &[q]));
        g.gates.push(Gate::new(GateKind::Rz(2.0 * beta), &[q]));
        g.gates.push(Gate::new(GateKind::H, &[q]));
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    XQaoa,
    GQaoa,
    GroverBaseline,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::XQaoa => "x_qaoa",
            Algorithm::GQaoa => "g_qaoa",
            Algorithm::GroverBaseline => "grover_baseline",
        })
    }
}

/// One QAOA round (problem unitary then mixer) for the given mixer.
pub fn lower_round(formula: &CnfFormula, beta: f64, gamma: f64, algorithm: Algorithm) -> Result<GateList> {
    let n = formula.num_variables() as usize;
    let mut g = lower_problem_unitary(formula, gamma)?;
    match algorithm {
        Algorithm::XQaoa => g.extend(&lower_x_mixer(n, beta)),
        Algorithm::GQaoa => g.extend(&lower_grover_mixer(n, beta)?),
        Algorithm::GroverBaseline => {
            return Err(Error::InvalidArgument("the Grover baseline has no QAOA round".into()))
        }
    }
    Ok(g)
}

/// Round count for QAOA, satisfying probability for the Grover baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Rounds(u64),
    SatisfyingProbability(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateCostReport {
    pub algorithm: Algorithm,
    pub n: u64,
    pub m: u64,
    /// QAOA rounds or Grover iterations.
    pub rounds: u64,
    pub entangling_per_round: u64,
    pub entangling_total: u64,
    pub ancillas: u64,
    /// The Grover oracle cost is an approximate mapping, not a compiled count.
    pub estimate: bool,
}

/// `⌈π / (8√P)⌉` Grover iterations.
pub fn grover_iterations(p: f64) -> Result<u64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidArgument(format!("satisfying probability {p} outside (0, 1]")));
    }
    Ok((PI / (8.0 * p.sqrt())).ceil() as u64)
}

pub fn entangling_per_round(algorithm: Algorithm, n: u64, m: u64) -> Result<u64> {
    match algorithm {
        Algorithm::XQaoa => Ok(6 * m),
        Algorithm::GQaoa if n >= 3 => Ok(6 * m + 5 * (2 * n - 5)),
        Algorithm::GQaoa => Err(Error::InvalidArgument(format!("the Grover mixer needs n ≥ 3, got {n}"))),
        Algorithm::GroverBaseline => Ok(GROVER_ENTANGLING_PER_CLAUSE * m),
    }
}

pub fn cost_report(algorithm: Algorithm, n: u64, m: u64, budget: Budget) -> Result<GateCostReport> {
    let per = entangling_per_round(algorithm, n, m)?;
    let (rounds, ancillas) = match (algorithm, budget) {
        (Algorithm::XQaoa, Budget::Rounds(p)) => (p, 0),
        (Algorithm::GQaoa, Budget::Rounds(p)) => (p, n - 3),
        (Algorithm::GroverBaseline, Budget::SatisfyingProbability(p)) => {
            (grover_iterations(p)?, GROVER_ANCILLAS_PER_CLAUSE * m)
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "{algorithm} takes {}",
                if algorithm == Algorithm::GroverBaseline {
                    "a satisfying probability"
                } else {
                    "a round count"
                }
            )))
        }
    };
    Ok(GateCostReport {
        algorithm,
        n,
        m,
        rounds,
        entangling_per_round: per,
        entangling_total: per * rounds,
        ancillas,
        estimate: algorithm == Algorithm::GroverBaseline,
    })
}

/// One gate per line after a `qubits N` header; angles in radians.
pub fn emit_circuit_text(gates: &GateList) -> String {
    let mut out = format!("qubits {}\n", gates.num_qubits);
    for g in &gates.gates {
        out.push_str(g.kind.name());
        if let Some(a) = g.kind.angle() {
            write!(out, " {a:?}").unwrap();
        }
        for q in &g.qubits {
            write!(out, " {q}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_circuit_text(text: &str) -> Result<GateList> {
    let mut list: Option<GateList> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tok = line.split_whitespace();
        let head = tok.next().unwrap_or_default();
        let Some(list) = list.as_mut() else {
            let count = match (head, tok.next(), tok.next()) {
                ("qubits", Some(v), None) => v.parse::<usize>().ok(),
                _ => None,
            };
            list = Some(GateList::new(count.ok_or_else(|| {
                Error::parse(line_no, "expected header `qubits N`")
            })?));
            continue;
        };
        let mut angle = || -> Result<f64> {
            tok.next()
                .and_then(|t| f64::from_str(t).ok())
                .ok_or_else(|| Error::parse(line_no, format!("{head} needs an angle")))
        };
        let kind = match head {
            "H" => GateKind::H,
            "X" => GateKind::X,
            "RZ" => GateKind::Rz(angle()?),
            "ZZ" => GateKind::Zz(angle()?),
            "CNOT" => GateKind::Cnot,
            "TOFFOLI" => GateKind::Toffoli,
            "CCZ_PHASE" => GateKind::CczPhase(angle()?),
            other => return Err(Error::parse(line_no, format!("unknown gate {other:?}"))),
        };
        let qubits = tok
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
        list.push(kind, &qubits)
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
    }
    list.ok_or_else(|| Error::parse(1, "empty circuit file"))
}

/// Largest deviation between two states after removing the global phase
/// that best aligns them.
pub fn distance_up_to_phase(a: &[Complex64], b: &[Complex64]) -> f64 {
    let overlap: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    a.iter()
        .zip(b)
        .map(|(x, y)| (x * phase - y).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::{InstanceFormat, Literal};

    fn four_qubit() -> CnfFormula {
        CnfFormula::parse(
            "[[-0,+2,+3],[+0,+2,-3],[-1,+2,-3],[-1,-2,-3],[-1,-2,+3],[+1,+2,-3],[+0,+2,+3],[-0,+1,-3]]",
            InstanceFormat::Json,
        )
        .unwrap()
    }

    #[test]
    fn empty_and_single_clause() {
        assert!(lower_problem_unitary(&CnfFormula::new(3, []).unwrap(), 0.4).unwrap().is_empty());
        let c = Clause::new([Literal::positive(0), Literal::negative(1), Literal::positive(2)]).unwrap();
        let g = lower_clauses(&[c], 3, 0.4).unwrap();
        assert_eq!(g.entangling_count(), 6);
    }

    #[test]
    fn problem_diagonal_matches_energies() {
        let f = four_qubit();
        let gamma = 0.731;
        let g = lower_problem_unitary(&f, gamma).unwrap();
        let mut state = vec![Complex64::new(0.25, 0.0); 16];
        g.apply(&mut state);
        let expected: Vec<Complex64> = (0..16u64)
            .map(|b| Complex64::cis(-gamma * f.energy(crate::cnf::Assignment(b)) as f64) * 0.25)
            .collect();
        assert!(distance_up_to_phase(&state, &expected) < 1e-12);
    }

    #[test]
    fn mixer_structure() {
        let g = lower_grover_mixer(3, 0.2).unwrap();
        assert_eq!(g.num_qubits(), 3);
        assert_eq!(g.entangling_count(), 5);
        let kinds: Vec<&str> = g.gates().iter().map(|g| g.kind.name()).collect();
        assert_eq!(kinds[..6], ["H", "H", "H", "X", "X", "X"]);
        assert_eq!(kinds[6], "CCZ_PHASE");
        assert_eq!(kinds[7..], ["X", "X", "X", "H", "H", "H"]);
        let g5 = lower_grover_mixer(5, 0.2).unwrap();
        assert_eq!(g5.num_qubits(), 7);
        assert_eq!(g5.entangling_count(), 25);
        assert!(lower_grover_mixer(2, 0.1).is_err());
    }

    #[test]
    fn report_formulas() {
        let r = cost_report(Algorithm::XQaoa, 4, 8, Budget::Rounds(2)).unwrap();
        assert_eq!(r.entangling_total, 96);
        let r = cost_report(Algorithm::GQaoa, 5, 8, Budget::Rounds(1)).unwrap();
        assert_eq!((r.entangling_per_round, r.ancillas), (73, 2));
        let r = cost_report(Algorithm::GroverBaseline, 10, 10, Budget::SatisfyingProbability(0.25)).unwrap();
        assert_eq!((r.entangling_per_round, r.ancillas, r.rounds), (500, 20, 1));
        assert!(cost_report(Algorithm::GroverBaseline, 10, 10, Budget::SatisfyingProbability(0.0)).is_err());
        assert!(cost_report(Algorithm::GroverBaseline, 10, 10, Budget::Rounds(3)).is_err());
        assert!(cost_report(Algorithm::XQaoa, 10, 10, Budget::SatisfyingProbability(0.5)).is_err());
    }

    #[test]
    fn text_round_trip() {
        assert_eq!(emit_circuit_text(&GateList::new(4)), "qubits 4\n");
        let g = lower_round(&four_qubit(), 1.234, 0.1 + 0.2, Algorithm::GQaoa).unwrap();
        let text = emit_circuit_text(&g);
        assert_eq!(parse_circuit_text(&text).unwrap(), g);
        assert!(parse_circuit_text("qubits 2\nCNOT 0 2\n").is_err());
        assert!(parse_circuit_text("qubits 2\nRZ 0\n").is_err());
        assert!(parse_circuit_text("H 0\n").is_err());
    }
}
