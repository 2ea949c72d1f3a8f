//! 3-CNF formulas, instance parsing and generation, and the brute-force
//! evaluation routines (energies, spectra, solution sets) that every other
//! module treats as ground truth.
//!
//! Bit conventions: an [`Assignment`] stores variable `i` in bit `i`. Text
//! exports (bitstrings, state indices) put variable 0 in the leftmost / most
//! significant position.

use std::collections::HashSet;
use std::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper bound on `n` for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: u32 = 30;

/// Largest variable count representable by an [`Assignment`].
pub const MAX_VARIABLES: u32 = 63;

/// A possibly negated variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    var: u32,
    negated: bool,
}

impl Literal {
    pub const fn positive(var: u32) -> Self {
        Literal {
            var,
            negated: false,
        }
    }

    pub const fn negative(var: u32) -> Self {
        Literal { var, negated: true }
    }

    /// Builds a literal from a variable index and a sign of `+1` or `-1`.
    pub fn with_sign(var: u32, sign: i8) -> Result<Self> {
        match sign {
            1 => Ok(Literal::positive(var)),
            -1 => Ok(Literal::negative(var)),
            other => Err(Error::InvalidArgument(format!(
                "literal sign must be +1 or -1, got {other}"
            ))),
        }
    }

    pub fn var(self) -> u32 {
        self.var
    }

    pub fn is_negated(self) -> bool {
        self.negated
    }

    /// `+1` for a plain variable, `-1` for a negated one.
    pub fn sign(self) -> i8 {
        if self.negated {
            -1
        } else {
            1
        }
    }

    /// Whether `assignment` makes this literal true.
    pub fn is_satisfied_by(self, assignment: Assignment) -> bool {
        assignment.value(self.var) != self.negated
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.negated { '-' } else { '+' };
        write!(f, "{sign}{}", self.var)
    }
}

/// A disjunction of exactly three literals over distinct variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Clause {
    literals: [Literal; 3],
}

impl Clause {
    pub fn new(literals: [Literal; 3]) -> Result<Self> {
        let [a, b, c] = literals;
        if a.var == b.var || a.var == c.var {
            return Err(Error::RepeatedVariable(a.var));
        }
        if b.var == c.var {
            return Err(Error::RepeatedVariable(b.var));
        }
        Ok(Clause { literals })
    }

    pub fn from_slice(literals: &[Literal]) -> Result<Self> {
        let arr: [Literal; 3] = literals
            .try_into()
            .map_err(|_| Error::ClauseLength(literals.len()))?;
        Clause::new(arr)
    }

    pub fn literals(&self) -> &[Literal; 3] {
        &self.literals
    }

    /// Literals sorted by variable; equal keys mean equal clauses as sets.
    pub fn key(&self) -> [Literal; 3] {
        let mut key = self.literals;
        key.sort();
        key
    }

    /// `(mask, pattern)` such that the clause is falsified by `τ` exactly when
    /// `τ & mask == pattern`.
    pub fn falsifying_pattern(&self) -> (u64, u64) {
        self.literals.iter().fold((0, 0), |(mask, pattern), lit| {
            let bit = 1u64 << lit.var;
            // a negated literal is false when its variable is 1
            (mask | bit, if lit.negated { pattern | bit } else { pattern })
        })
    }

    pub fn is_satisfied_by(&self, assignment: Assignment) -> bool {
        self.literals.iter().any(|l| l.is_satisfied_by(assignment))
    }

    fn max_var(&self) -> u32 {
        self.literals.iter().map(|l| l.var).max().unwrap_or(0)
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.literals;
        write!(f, "[{a}, {b}, {c}]")
    }
}

/// Serialization format for instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceFormat {
    Dimacs,
    Json,
}

impl InstanceFormat {
    /// Guesses the format from a file extension, defaulting to DIMACS.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => InstanceFormat::Json,
            _ => InstanceFormat::Dimacs,
        }
    }
}

/// A 3-CNF formula over `n` variables with no repeated clauses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    n: u32,
    clauses: Vec<Clause>,
}

impl CnfFormula {
    /// Validates variable ranges and drops repeated clauses, keeping the first
    /// occurrence of each.
    pub fn new(n: u32, clauses: impl IntoIterator<Item = Clause>) -> Result<Self> {
        if n > MAX_VARIABLES {
            return Err(Error::InvalidArgument(format!(
                "at most {MAX_VARIABLES} variables are supported, got {n}"
            )));
        }
        let mut seen = HashSet::new();
        let mut kept = Vec::new();
        for clause in clauses {
            let max = clause.max_var();
            if max >= n {
                return Err(Error::VariableOutOfRange { index: max, n });
            }
            if seen.insert(clause.key()) {
                kept.push(clause);
            }
        }
        Ok(CnfFormula { n, clauses: kept })
    }

    pub fn num_variables(&self) -> u32 {
        self.n
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Clause density `m / n`.
    pub fn density(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.clauses.len() as f64 / self.n as f64
        }
    }

    /// Number of clauses falsified by `assignment`.
    pub fn energy(&self, assignment: Assignment) -> u32 {
        self.clauses
            .iter()
            .filter(|c| !c.is_satisfied_by(assignment))
            .count() as u32
    }

    /// Same formula with literals sorted inside each clause and clauses sorted.
    pub fn canonical(&self) -> CnfFormula {
        let mut keys: Vec<[Literal; 3]> = self.clauses.iter().map(Clause::key).collect();
        keys.sort();
        CnfFormula {
            n: self.n,
            clauses: keys.into_iter().map(|literals| Clause { literals }).collect(),
        }
    }

    pub fn parse(text: &str, format: InstanceFormat) -> Result<Self> {
        match format {
            InstanceFormat::Dimacs => parse_dimacs(text),
            InstanceFormat::Json => parse_json(text),
        }
    }

    pub fn to_text(&self, format: InstanceFormat) -> String {
        match format {
            InstanceFormat::Dimacs => self.to_dimacs(),
            InstanceFormat::Json => self.to_json(),
        }
    }

    /// DIMACS text with 1-based variables, clauses in stored order.
    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.n, self.clauses.len());
        for clause in &self.clauses {
            for lit in clause.literals() {
                let v = lit.var as i64 + 1;
                out.push_str(&format!("{} ", if lit.negated { -v } else { v }));
            }
            out.push_str("0\n");
        }
        out
    }

    /// JSON object `{"n": .., "clauses": [["-0","+2","+3"], ..]}`.
    pub fn to_json(&self) -> String {
        let clauses: Vec<Vec<String>> = self
            .clauses
            .iter()
            .map(|c| c.literals().iter().map(|l| l.to_string()).collect())
            .collect();
        serde_json::json!({ "n": self.n, "clauses": clauses }).to_string()
    }
}

impl fmt::Display for CnfFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}}")
    }
}

fn parse_dimacs(text: &str) -> Result<CnfFormula> {
    let mut header: Option<(u32, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<(i64, usize)> = Vec::new();

    'lines: for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(Error::parse(lineno, "duplicate header"));
            }
            if !clauses.is_empty() || !current.is_empty() {
                return Err(Error::parse(lineno, "header after clauses"));
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 || fields[0] != "p" || fields[1] != "cnf" {
                return Err(Error::parse(lineno, "expected `p cnf <vars> <clauses>`"));
            }
            let n = fields[2]
                .parse::<u32>()
                .map_err(|_| Error::parse(lineno, "bad variable count"))?;
            let m = fields[3]
                .parse::<usize>()
                .map_err(|_| Error::parse(lineno, "bad clause count"))?;
            header = Some((n, m));
            continue;
        }
        for token in line.split_whitespace() {
            if token.starts_with('%') {
                break 'lines;
            }
            let value: i64 = token
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad literal {token:?}")))?;
            if value == 0 {
                clauses.push(finish_dimacs_clause(&current)?);
                current.clear();
            } else {
                current.push((value, lineno));
            }
        }
    }
    if let Some(&(_, lineno)) = current.first() {
        return Err(Error::parse(lineno, "clause not terminated by 0"));
    }

    let n = match header {
        Some((n, m)) => {
            if m != clauses.len() {
                return Err(Error::parse(
                    1,
                    format!("header declares {m} clauses, found {}", clauses.len()),
                ));
            }
            n
        }
        None => clauses
            .iter()
            .map(|c: &Clause| c.max_var() + 1)
            .max()
            .unwrap_or(0),
    };
    CnfFormula::new(n, clauses)
}

fn finish_dimacs_clause(values: &[(i64, usize)]) -> Result<Clause> {
    let literals = values
        .iter()
        .map(|&(v, lineno)| {
            let var = u32::try_from(v.unsigned_abs() - 1)
                .map_err(|_| Error::parse(lineno, "variable index too large"))?;
            Ok(if v < 0 {
                Literal::negative(var)
            } else {
                Literal::positive(var)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Clause::from_slice(&literals)
}

/// Parses the JSON instance format. Accepted shapes:
///
/// * an array of clauses, `[[-0, +2, +3], ...]`, with `n` inferred as one more
///   than the largest index;
/// * an object `{"n": 5, "clauses": [...]}`.
///
/// Literals may be bare signed integers (a leading `+` is tolerated even though
/// strict JSON forbids it) or strings such as `"-0"`; the sign of zero is kept.
/// Braces around the clause list are read as brackets so the set notation
/// `{[-0, +2, +3], ...}` also parses.
fn parse_json(text: &str) -> Result<CnfFormula> {
    let mut parser = LooseJson::new(text);
    let value = parser.value()?;
    parser.skip_ws();
    if parser.pos < parser.bytes.len() {
        return Err(parser.error("trailing characters"));
    }
    let (n, clause_values) = match value {
        LooseValue::Object(fields) => {
            let mut n = None;
            let mut clauses = None;
            for (key, value) in fields {
                match (key.as_str(), value) {
                    ("n", LooseValue::Token(t)) => {
                        n = Some(t.parse::<u32>().map_err(|_| {
                            Error::parse(1, format!("bad variable count {t:?}"))
                        })?)
                    }
                    ("clauses", LooseValue::List(items)) => clauses = Some(items),
                    ("n" | "clauses", _) => {
                        return Err(Error::parse(1, format!("field {key:?} has the wrong type")))
                    }
                    _ => {}
                }
            }
            let clauses = clauses.ok_or_else(|| Error::parse(1, "missing \"clauses\""))?;
            (n, clauses)
        }
        LooseValue::List(items) => (None, items),
        LooseValue::Token(_) => return Err(Error::parse(1, "expected a list of clauses")),
    };

    let mut clauses = Vec::with_capacity(clause_values.len());
    for (i, item) in clause_values.into_iter().enumerate() {
        let LooseValue::List(lits) = item else {
            return Err(Error::parse(1, format!("clause {i} is not a list")));
        };
        let literals = lits
            .into_iter()
            .map(|lit| match lit {
                LooseValue::Token(t) => parse_signed_literal(&t),
                _ => Err(Error::parse(1, format!("clause {i} holds a non-literal"))),
            })
            .collect::<Result<Vec<_>>>()?;
        clauses.push(Clause::from_slice(&literals)?);
    }
    let n = n.unwrap_or_else(|| clauses.iter().map(|c| c.max_var() + 1).max().unwrap_or(0));
    CnfFormula::new(n, clauses)
}

fn parse_signed_literal(token: &str) -> Result<Literal> {
    let (negated, digits) = match token.as_bytes().first() {
        Some(b'-') => (true, &token[1..]),
        Some(b'+') => (false, &token[1..]),
        _ => (false, token),
    };
    let var = digits
        .parse::<u32>()
        .map_err(|_| Error::parse(1, format!("bad literal {token:?}")))?;
    Ok(Literal { var, negated })
}

enum LooseValue {
    List(Vec<LooseValue>),
    Object(Vec<(String, LooseValue)>),
    /// Scalar kept as raw text so `-0` survives.
    Token(String),
}

/// Minimal reader for the JSON-like instance notation; strict JSON parsers
/// reject `+2` and collapse `-0`.
struct LooseJson<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> LooseJson<'a> {
    fn new(text: &'a str) -> Self {
        LooseJson {
            bytes: text.as_bytes(),
            pos: 0,
        }
    }

    fn line(&self) -> usize {
        1 + self.bytes[..self.pos].iter().filter(|&&b| b == b'\n').count()
    }

    fn error(&self, message: &str) -> Error {
        Error::parse(self.line(), message.to_string())
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn value(&mut self) -> Result<LooseValue> {
        match self.peek() {
            Some(b'[') => self.list(b']'),
            Some(b'{') => {
                // either a JSON object or the `{[..], [..]}` set notation
                let save = self.pos;
                self.pos += 1;
                if self.peek() == Some(b'"') {
                    self.pos = save;
                    self.object()
                } else {
                    self.pos = save;
                    self.list(b'}')
                }
            }
            Some(b'"') => Ok(LooseValue::Token(self.string()?)),
            Some(_) => self.token(),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn list(&mut self, close: u8) -> Result<LooseValue> {
        self.pos += 1;
        let mut items = Vec::new();
        loop {
            match self.peek() {
                Some(b) if b == close => {
                    self.pos += 1;
                    return Ok(LooseValue::List(items));
                }
                Some(b',') if !items.is_empty() => {
                    self.pos += 1;
                    items.push(self.value()?);
                }
                Some(_) if items.is_empty() => items.push(self.value()?),
                Some(_) => return Err(self.error("expected ',' or closing bracket")),
                None => return Err(self.error("unterminated list")),
            }
        }
    }

    fn object(&mut self) -> Result<LooseValue> {
        self.pos += 1;
        let mut fields = Vec::new();
        loop {
            match self.peek() {
                Some(b'}') => {
                    self.pos += 1;
                    return Ok(LooseValue::Object(fields));
                }
                Some(b',') if !fields.is_empty() => self.pos += 1,
                Some(b'"') if fields.is_empty() => {}
                Some(_) if fields.is_empty() => return Err(self.error("expected a key")),
                Some(_) => return Err(self.error("expected ',' or '}'")),
                None => return Err(self.error("unterminated object")),
            }
            if self.peek() != Some(b'"') {
                return Err(self.error("expected a key"));
            }
            let key = self.string()?;
            if self.peek() != Some(b':') {
                return Err(self.error("expected ':'"));
            }
            self.pos += 1;
            let value = self.value()?;
            fields.push((key, value));
        }
    }

    fn string(&mut self) -> Result<String> {
        self.pos += 1;
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos] != b'"' {
            if self.bytes[self.pos] == b'\\' {
                return Err(self.error("escapes are not supported"));
            }
            self.pos += 1;
        }
        if self.pos >= self.bytes.len() {
            return Err(self.error("unterminated string"));
        }
        let s = String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned();
        self.pos += 1;
        Ok(s)
    }

    fn token(&mut self) -> Result<LooseValue> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && matches!(self.bytes[self.pos], b'0'..=b'9' | b'+' | b'-' | b'.' | b'e' | b'E')
        {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error("unexpected character"));
        }
        Ok(LooseValue::Token(
            String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned(),
        ))
    }
}

/// Truth values for up to [`MAX_VARIABLES`] variables; bit `i` is variable `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Assignment(pub u64);

impl Assignment {
    pub fn new(bits: u64, n: u32) -> Result<Self> {
        if n < 64 && bits >> n != 0 {
            return Err(Error::InvalidArgument(format!(
                "assignment {bits:#b} has bits set above {n} variables"
            )));
        }
        Ok(Assignment(bits))
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn value(self, var: u32) -> bool {
        (self.0 >> var) & 1 == 1
    }

    /// Bitstring with variable 0 first.
    pub fn to_bitstring(self, n: u32) -> String {
        (0..n)
            .map(|v| if self.value(v) { '1' } else { '0' })
            .collect()
    }

    pub fn from_bitstring(s: &str) -> Result<Self> {
        if s.len() > MAX_VARIABLES as usize {
            return Err(Error::InvalidArgument(format!("bitstring {s:?} is too long")));
        }
        s.bytes().enumerate().try_fold(Assignment(0), |acc, (i, b)| match b {
            b'0' => Ok(acc),
            b'1' => Ok(Assignment(acc.0 | 1 << i)),
            _ => Err(Error::InvalidArgument(format!("bad bitstring {s:?}"))),
        })
    }

    /// Decimal value of the bitstring read with variable 0 as the most
    /// significant bit.
    pub fn state_index(self, n: u32) -> u64 {
        if n == 0 {
            0
        } else {
            self.0.reverse_bits() >> (64 - n)
        }
    }

    pub fn from_state_index(index: u64, n: u32) -> Self {
        if n == 0 {
            Assignment(0)
        } else {
            Assignment(index.reverse_bits() >> (64 - n))
        }
    }
}

/// Number of clauses falsified by `assignment`.
pub fn evaluate_energy(formula: &CnfFormula, assignment: Assignment) -> u32 {
    formula.energy(assignment)
}

/// Precomputed `(mask, pattern)` tests for fast energy scans.
#[derive(Debug, Clone)]
pub struct EnergyEvaluator {
    patterns: Vec<(u64, u64)>,
}

impl EnergyEvaluator {
    pub fn new(formula: &CnfFormula) -> Self {
        EnergyEvaluator {
            patterns: formula
                .clauses()
                .iter()
                .map(Clause::falsifying_pattern)
                .collect(),
        }
    }

    #[inline]
    pub fn energy(&self, bits: u64) -> u32 {
        self.patterns
            .iter()
            .filter(|&&(mask, pattern)| bits & mask == pattern)
            .count() as u32
    }
}

const SCAN_CHUNK: u64 = 1 << 14;

fn check_cap(n: u32, cap: u32) -> Result<()> {
    if n > cap || n > MAX_VARIABLES {
        Err(Error::EnumerationCap { n, cap })
    } else {
        Ok(())
    }
}

/// Energy of every assignment, indexed by assignment bits.
pub fn energy_table(formula: &CnfFormula, cap: u32) -> Result<Vec<u32>> {
    let n = formula.num_variables();
    check_cap(n, cap)?;
    let eval = EnergyEvaluator::new(formula);
    let mut table = vec![0u32; 1usize << n];
    table
        .par_chunks_mut(SCAN_CHUNK as usize)
        .enumerate()
        .for_each(|(chunk, out)| {
            let base = chunk as u64 * SCAN_CHUNK;
            for (offset, slot) in out.iter_mut().enumerate() {
                *slot = eval.energy(base + offset as u64);
            }
        });
    Ok(table)
}

/// Number of assignments in each energy manifold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergySpectrum {
    n: u32,
    /// `counts[e]` assignments falsify exactly `e` clauses, for `e = 0..=m`.
    counts: Vec<u64>,
}

impl EnergySpectrum {
    /// Builds a spectrum from explicit counts; they must sum to `2^n`.
    pub fn from_counts(n: u32, counts: Vec<u64>) -> Result<Self> {
        let total: u128 = counts.iter().map(|&c| c as u128).sum();
        if n > MAX_VARIABLES || total != 1u128 << n {
            return Err(Error::InvalidArgument(format!(
                "spectrum counts sum to {total}, expected 2^{n}"
            )));
        }
        if counts.is_empty() {
            return Err(Error::InvalidArgument("spectrum needs at least one level".into()));
        }
        Ok(EnergySpectrum { n, counts })
    }

    pub fn num_variables(&self) -> u32 {
        self.n
    }

    /// Number of clauses `m` of the formula (highest representable energy).
    pub fn num_clauses(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, energy: usize) -> u64 {
        self.counts.get(energy).copied().unwrap_or(0)
    }

    pub fn solution_count(&self) -> u64 {
        self.counts[0]
    }

    pub fn is_satisfiable(&self) -> bool {
        self.counts[0] > 0
    }

    /// Smallest occupied energy.
    pub fn min_energy(&self) -> usize {
        self.counts
            .iter()
            .position(|&c| c > 0)
            .expect("counts sum to 2^n > 0")
    }

    /// `(energy, count)` for every occupied level, ascending in energy.
    pub fn occupied(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(e, &c)| (e, c))
    }

    pub fn num_occupied(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn dimension(&self) -> f64 {
        (self.n as f64).exp2()
    }

    /// `P = c_0 / 2^n`, the chance that a uniformly random assignment is a
    /// solution.
    pub fn satisfying_probability(&self) -> f64 {
        self.counts[0] as f64 / self.dimension()
    }

    /// `D = c_{E*} / 2^n` for the lowest occupied energy `E*`.
    pub fn min_energy_probability(&self) -> f64 {
        self.counts[self.min_energy()] as f64 / self.dimension()
    }

    /// `Σ_E c_E · E`, which equals `m · 2^(n-3)` for any 3-CNF formula.
    pub fn energy_moment(&self) -> u128 {
        self.counts
            .iter()
            .enumerate()
            .map(|(e, &c)| e as u128 * c as u128)
            .sum()
    }
}

/// Exhaustive spectrum with the default enumeration cap.
pub fn compute_spectrum(formula: &CnfFormula) -> Result<EnergySpectrum> {
    compute_spectrum_with_cap(formula, DEFAULT_ENUMERATION_CAP)
}

pub fn compute_spectrum_with_cap(formula: &CnfFormula, cap: u32) -> Result<EnergySpectrum> {
    let n = formula.num_variables();
    check_cap(n, cap)?;
    let m = formula.num_clauses();
    let eval = EnergyEvaluator::new(formula);
    let total = 1u64 << n;
    let chunks = total.div_ceil(SCAN_CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .fold(
            || vec![0u64; m + 1],
            |mut acc, chunk| {
                let start = chunk * SCAN_CHUNK;
                let end = (start + SCAN_CHUNK).min(total);
                for bits in start..end {
                    acc[eval.energy(bits) as usize] += 1;
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; m + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(EnergySpectrum { n, counts })
}

/// All satisfying assignments in ascending order.
pub fn enumerate_solutions(formula: &CnfFormula) -> Result<Vec<Assignment>> {
    enumerate_solutions_with_cap(formula, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_solutions_with_cap(formula: &CnfFormula, cap: u32) -> Result<Vec<Assignment>> {
    enumerate_level(formula, 0, cap)
}

/// All assignments with exactly `energy` falsified clauses, ascending.
pub fn enumerate_level(formula: &CnfFormula, energy: u32, cap: u32) -> Result<Vec<Assignment>> {
    let n = formula.num_variables();
    check_cap(n, cap)?;
    let eval = EnergyEvaluator::new(formula);
    let total = 1u64 << n;
    let chunks = total.div_ceil(SCAN_CHUNK);
    let found: Vec<Vec<Assignment>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * SCAN_CHUNK;
            let end = (start + SCAN_CHUNK).min(total);
            (start..end)
                .filter(|&bits| eval.energy(bits) == energy)
                .map(Assignment)
                .collect()
        })
        .collect();
    Ok(found.into_iter().flatten().collect())
}

/// Half-open interval of clause densities; `min == max` fixes the density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityRange {
    pub min: f64,
    pub max: f64,
}

impl DensityRange {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min > 0.0 && max >= min && max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "density range ({min}, {max}) must be positive and ordered"
            )));
        }
        Ok(DensityRange { min, max })
    }

    pub fn fixed(d: f64) -> Result<Self> {
        DensityRange::new(d, d)
    }

    fn draw(&self, rng: &mut impl Rng) -> f64 {
        if self.max > self.min {
            rng.random_range(self.min..self.max)
        } else {
            self.min
        }
    }
}

/// Which instances the generator keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Satisfiable,
    Unsatisfiable,
    Any,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Satisfiable => "satisfiable",
            Regime::Unsatisfiable => "unsatisfiable",
            Regime::Any => "any",
        })
    }
}

/// Clause count for `n` variables at density `d`, rounding half away from zero.
pub fn clauses_for_density(n: u32, d: f64) -> usize {
    (n as f64 * d).round() as usize
}

/// Output of [`generate_random_instance`].
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub formula: CnfFormula,
    /// Density drawn for the accepted instance (before deduplication).
    pub target_density: f64,
    /// Clauses generated before duplicates were collapsed.
    pub generated_clauses: usize,
    /// Instances drawn, including the accepted one.
    pub attempts: u32,
}

/// Knobs for [`generate_random_instance_with`].
#[derive(Debug, Clone, Copy)]
pub struct GeneratorLimits {
    pub max_attempts: u32,
    pub enumeration_cap: u32,
}

impl Default for GeneratorLimits {
    fn default() -> Self {
        GeneratorLimits {
            max_attempts: 10_000,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

/// Draws a random 3-SAT instance: density uniform in `range`, `round(n·d)`
/// clauses over 3 distinct variables with independent uniform signs, repeats
/// collapsed. Whole instances are redrawn from the same stream until the
/// requested regime is met.
pub fn generate_random_instance(
    n: u32,
    range: DensityRange,
    regime: Regime,
    seed: u64,
) -> Result<RandomInstance> {
    generate_random_instance_with(n, range, regime, seed, GeneratorLimits::default())
}

pub fn generate_random_instance_with(
    n: u32,
    range: DensityRange,
    regime: Regime,
    seed: u64,
    limits: GeneratorLimits,
) -> Result<RandomInstance> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "3-SAT instances need at least 3 variables, got {n}"
        )));
    }
    if regime != Regime::Any {
        check_cap(n, limits.enumeration_cap)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=limits.max_attempts {
        let d = range.draw(&mut rng);
        let m = clauses_for_density(n, d);
        let clauses = (0..m).map(|_| {
            let vars = index::sample(&mut rng, n as usize, 3);
            let mut lits = [Literal::positive(0); 3];
            for (slot, v) in lits.iter_mut().zip(vars.iter()) {
                *slot = Literal {
                    var: v as u32,
                    negated: rng.random::<bool>(),
                };
            }
            Clause { literals: lits }
        });
        let formula = CnfFormula::new(n, clauses.collect::<Vec<_>>())?;
        let accept = match regime {
            Regime::Any => true,
            Regime::Satisfiable => {
                compute_spectrum_with_cap(&formula, limits.enumeration_cap)?.is_satisfiable()
            }
            Regime::Unsatisfiable => {
                !compute_spectrum_with_cap(&formula, limits.enumeration_cap)?.is_satisfiable()
            }
        };
        if accept {
            return Ok(RandomInstance {
                formula,
                target_density: d,
                generated_clauses: m,
                attempts: attempt,
            });
        }
    }
    Err(Error::RegimeUnattainable {
        regime: regime.to_string(),
        attempts: limits.max_attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const FOUR_QUBIT: &str = "[[-0, +2, +3], [+0, +2, -3], [-1, +2, -3], [-1, -2, -3], \
         [-1, -2, +3], [+1, +2, -3], [+0, +2, +3], [-0, +1, -3]]";
    pub(crate) const FIVE_QUBIT: &str = "{[+1, -2, -3], [-1, -3, +4], [+0, -2, -4], [-0, -2, +3], \
         [+2, +3, +4], [-0, +1, +2], [+0, -2, 4], [-1, +2, -4]}";

    fn brute_spectrum(f: &CnfFormula) -> Vec<u64> {
        let mut counts = vec![0u64; f.num_clauses() + 1];
        for bits in 0..1u64 << f.num_variables() {
            counts[f.energy(Assignment(bits)) as usize] += 1;
        }
        counts
    }

    #[test]
    fn minimal_dimacs() {
        let f = CnfFormula::parse("p cnf 3 1\n1 2 3 0", InstanceFormat::Dimacs).unwrap();
        assert_eq!(f.num_variables(), 3);
        assert_eq!(f.num_clauses(), 1);
        let lits = f.clauses()[0].literals();
        assert!(lits.iter().all(|l| !l.is_negated()));
        assert_eq!(lits.map(|l| l.var()), [0, 1, 2]);
    }

    #[test]
    fn dimacs_deduplicates() {
        let f = CnfFormula::parse("1 2 3 0\n1 2 3 0", InstanceFormat::Dimacs).unwrap();
        assert_eq!(f.num_clauses(), 1);
        let f = CnfFormula::parse("p cnf 4 2\n1 -2 3 0\n3 1 -2 0\n", InstanceFormat::Dimacs)
            .unwrap();
        assert_eq!(f.num_clauses(), 1);
        assert_eq!(f.num_variables(), 4);
    }

    #[test]
    fn dimacs_comments_and_multiline_clauses() {
        let text = "c a comment\np cnf 5 2\n1 -2\n 3 0 -4 5 1 0\n%\n0\n";
        let f = CnfFormula::parse(text, InstanceFormat::Dimacs).unwrap();
        assert_eq!(f.num_clauses(), 2);
        assert_eq!(f.clauses()[1].to_string(), "[-3, +4, +0]");
    }

    #[test]
    fn dimacs_errors() {
        let cases = [
            ("p cnf 3\n1 2 3 0", "header"),
            ("p cnf 3 1\n1 2 0", "length"),
            ("p cnf 3 1\n1 1 2 0", "repeat"),
            ("p cnf 3 1\n1 2 4 0", "range"),
            ("p cnf 3 2\n1 2 3 0", "count"),
            ("p cnf 3 1\n1 2 x 0", "token"),
            ("p cnf 3 1\n1 2 3", "unterminated"),
        ];
        for (text, what) in cases {
            assert!(
                CnfFormula::parse(text, InstanceFormat::Dimacs).is_err(),
                "{what} should fail"
            );
        }
        assert!(matches!(
            CnfFormula::parse("p cnf 3 1\n1 2 0", InstanceFormat::Dimacs),
            Err(Error::ClauseLength(2))
        ));
        assert!(matches!(
            CnfFormula::parse("p cnf 3 1\n1 -1 2 0", InstanceFormat::Dimacs),
            Err(Error::RepeatedVariable(0))
        ));
        assert!(matches!(
            CnfFormula::parse("p cnf 3 1\n1 2 4 0", InstanceFormat::Dimacs),
            Err(Error::VariableOutOfRange { index: 3, n: 3 })
        ));
    }

    #[test]
    fn footnote_instances_parse() {
        let f4 = CnfFormula::parse(FOUR_QUBIT, InstanceFormat::Json).unwrap();
        assert_eq!((f4.num_variables(), f4.num_clauses()), (4, 8));
        assert!(f4.clauses()[0].literals()[0].is_negated());
        assert_eq!(f4.clauses()[0].to_string(), "[-0, +2, +3]");

        // unsigned `4` reads as a positive literal
        let f5 = CnfFormula::parse(FIVE_QUBIT, InstanceFormat::Json).unwrap();
        assert_eq!((f5.num_variables(), f5.num_clauses()), (5, 8));
        assert_eq!(f5.clauses()[6].to_string(), "[+0, -2, +4]");
    }

    #[test]
    fn json_string_literals_and_object_form() {
        let f = CnfFormula::parse(r#"[["-0", "+1", "2"]]"#, InstanceFormat::Json).unwrap();
        assert_eq!(f.clauses()[0].to_string(), "[-0, +1, +2]");
        let f = CnfFormula::parse(r#"{"n": 6, "clauses": [["-0","+1","+2"]]}"#, InstanceFormat::Json)
            .unwrap();
        assert_eq!(f.num_variables(), 6);
        assert!(CnfFormula::parse(r#"{"n": 2, "clauses": [[0,1,2]]}"#, InstanceFormat::Json).is_err());
        assert!(CnfFormula::parse("[[0, 1]]", InstanceFormat::Json).is_err());
        assert!(CnfFormula::parse("[[0, 1, 1]]", InstanceFormat::Json).is_err());
        assert!(CnfFormula::parse("[[0, 1, 2]", InstanceFormat::Json).is_err());
    }

    #[test]
    fn serialization_round_trips() {
        let f = CnfFormula::parse(FOUR_QUBIT, InstanceFormat::Json).unwrap();
        for format in [InstanceFormat::Json, InstanceFormat::Dimacs] {
            let back = CnfFormula::parse(&f.to_text(format), format).unwrap();
            assert_eq!(back, f);
        }
        let canon = f.canonical();
        assert_eq!(canon.canonical(), canon);
        assert_eq!(compute_spectrum(&canon).unwrap(), compute_spectrum(&f).unwrap());
    }

    #[test]
    fn single_clause_energies() {
        let f = CnfFormula::parse("p cnf 3 1\n1 2 3 0", InstanceFormat::Dimacs).unwrap();
        assert_eq!(evaluate_energy(&f, Assignment::from_bitstring("000").unwrap()), 1);
        assert_eq!(evaluate_energy(&f, Assignment::from_bitstring("100").unwrap()), 0);
        let s = compute_spectrum(&f).unwrap();
        assert_eq!(s.counts(), &[7, 1]);
        assert_eq!(enumerate_solutions(&f).unwrap().len(), 7);
    }

    #[test]
    fn empty_formula() {
        let f = CnfFormula::new(3, []).unwrap();
        let s = compute_spectrum(&f).unwrap();
        assert_eq!(s.counts(), &[8]);
        assert_eq!(s.min_energy(), 0);
        let sols = enumerate_solutions(&f).unwrap();
        assert_eq!(sols, (0..8).map(Assignment).collect::<Vec<_>>());
    }

    #[test]
    fn footnote_solutions_match_brute_force() {
        for text in [FOUR_QUBIT, FIVE_QUBIT] {
            let f = CnfFormula::parse(text, InstanceFormat::Json).unwrap();
            let s = compute_spectrum(&f).unwrap();
            assert_eq!(s.counts(), brute_spectrum(&f).as_slice());
            let sols = enumerate_solutions(&f).unwrap();
            assert_eq!(sols.len() as u64, s.solution_count());
            for a in &sols {
                assert_eq!(evaluate_energy(&f, *a), 0);
                // independent check straight from the clause definition
                assert!(f.clauses().iter().all(|c| c
                    .literals()
                    .iter()
                    .any(|l| a.value(l.var()) == (l.sign() == 1))));
            }
        }
        let f4 = CnfFormula::parse(FOUR_QUBIT, InstanceFormat::Json).unwrap();
        let s4 = compute_spectrum(&f4).unwrap();
        assert_eq!(s4.counts()[..3], [3, 10, 3]);
        let bits: Vec<String> = enumerate_solutions(&f4)
            .unwrap()
            .iter()
            .map(|a| a.to_bitstring(4))
            .collect();
        assert_eq!(bits.len(), 3);
        let f5 = CnfFormula::parse(FIVE_QUBIT, InstanceFormat::Json).unwrap();
        let s5 = compute_spectrum(&f5).unwrap();
        assert_eq!(s5.counts()[..3], [4, 24, 4]);
        assert_eq!(s5.counts().iter().sum::<u64>(), 32);
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let f = CnfFormula::new(12, []).unwrap();
        assert!(matches!(
            compute_spectrum_with_cap(&f, 10),
            Err(Error::EnumerationCap { n: 12, cap: 10 })
        ));
        assert!(enumerate_solutions_with_cap(&f, 11).is_err());
        assert!(energy_table(&f, 11).is_err());
    }

    #[test]
    fn bit_conventions() {
        let a = Assignment::from_bitstring("1000").unwrap();
        assert_eq!(a.bits(), 1);
        assert_eq!(a.state_index(4), 8);
        assert_eq!(Assignment::from_state_index(8, 4), a);
        assert_eq!(a.to_bitstring(4), "1000");
        assert!(Assignment::new(16, 4).is_err());
        assert!(Assignment::from_bitstring("10a").is_err());
    }

    #[test]
    fn density_rounding() {
        assert_eq!(clauses_for_density(10, 4.0), 40);
        assert_eq!(clauses_for_density(10, 4.26), 43);
        assert_eq!(clauses_for_density(10, 4.25), 43);
        assert_eq!(clauses_for_density(10, 4.24), 42);
    }

    #[test]
    fn generator_fixed_density() {
        let inst =
            generate_random_instance(10, DensityRange::fixed(4.0).unwrap(), Regime::Any, 3).unwrap();
        assert_eq!(inst.generated_clauses, 40);
        assert!(inst.formula.num_clauses() <= 40);
        let inst = generate_random_instance(10, DensityRange::fixed(4.26).unwrap(), Regime::Any, 3)
            .unwrap();
        assert_eq!(inst.generated_clauses, 43);
    }

    #[test]
    fn generator_regimes() {
        let range = DensityRange::new(2.0, 4.5).unwrap();
        let inst = generate_random_instance(8, range, Regime::Satisfiable, 7).unwrap();
        assert!(brute_spectrum(&inst.formula)[0] >= 1);

        let range = DensityRange::new(6.0, 8.0).unwrap();
        let inst = generate_random_instance(8, range, Regime::Unsatisfiable, 7).unwrap();
        assert_eq!(brute_spectrum(&inst.formula)[0], 0);
    }

    #[test]
    fn generator_gives_up() {
        // three variables with 24 clause slots cannot be unsatisfiable at
        // density 0.4 (one clause)
        let limits = GeneratorLimits {
            max_attempts: 5,
            ..GeneratorLimits::default()
        };
        let err = generate_random_instance_with(
            3,
            DensityRange::fixed(0.4).unwrap(),
            Regime::Unsatisfiable,
            1,
            limits,
        )
        .unwrap_err();
        assert!(matches!(err, Error::RegimeUnattainable { attempts: 5, .. }));
        assert!(generate_random_instance(2, DensityRange::fixed(1.0).unwrap(), Regime::Any, 0).is_err());
    }
}
