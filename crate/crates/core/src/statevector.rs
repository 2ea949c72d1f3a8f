//! Full `2^n` statevector simulation of QAOA with either the Grover mixer or
//! the transverse-field (X) mixer, plus output distributions, sampling and
//! the count-file format.
//!
//! Amplitudes are indexed by [`Assignment`] bits (variable `i` in bit `i`).
//! Count files and CSV exports use bitstrings / state indices with variable 0
//! leftmost.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cnf::{energy_table, Assignment, CnfFormula};
use crate::error::{Error, Result};
use crate::manifold::Objective;
use crate::schedule::AngleSchedule;

pub const DEFAULT_STATEVECTOR_CAP: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mixer {
    /// `H_M = |+⟩⟨+|`
    Grover,
    /// `H_X = Σ_i X_i`
    TransverseX,
}

impl Mixer {
    pub fn label(self) -> &'static str {
        match self {
            Mixer::Grover => "G",
            Mixer::TransverseX => "X",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: u32,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn uniform(n: u32) -> Self {
        let dim = 1usize << n;
        let amp = Complex64::new((-(n as f64) / 2.0).exp2(), 0.0);
        StateVector {
            n,
            amplitudes: vec![amp; dim],
        }
    }

    pub fn from_amplitudes(n: u32, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1usize << n {
            return Err(Error::InvalidArgument(format!(
                "{} amplitudes do not describe {n} qubits",
                amplitudes.len()
            )));
        }
        Ok(StateVector { n, amplitudes })
    }

    pub fn num_variables(&self) -> u32 {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Multiplies amplitude `τ` by `phases[energy(τ)]`.
    pub fn apply_phases(&mut self, energies: &[u32], phases: &[Complex64]) {
        for (a, &e) in self.amplitudes.iter_mut().zip(energies) {
            *a *= phases[e as usize];
        }
    }

    /// `e^{-iβ|+⟩⟨+|}`: a rank-one update along `|+⟩`.
    pub fn apply_grover_mixer(&mut self, beta: f64) {
        let mean = self.amplitudes.iter().sum::<Complex64>() / self.amplitudes.len() as f64;
        let shift = (Complex64::cis(-beta) - 1.0) * mean;
        for a in &mut self.amplitudes {
            *a += shift;
        }
    }

    /// `e^{-iβ Σ X_i}` as `n` single-qubit rotations.
    pub fn apply_x_mixer(&mut self, beta: f64) {
        let c = Complex64::new(beta.cos(), 0.0);
        let s = Complex64::new(0.0, -beta.sin());
        for q in 0..self.n {
            let bit = 1usize << q;
            for i in 0..self.amplitudes.len() {
                if i & bit == 0 {
                    let j = i | bit;
                    let (a0, a1) = (self.amplitudes[i], self.amplitudes[j]);
                    self.amplitudes[i] = c * a0 + s * a1;
                    self.amplitudes[j] = s * a0 + c * a1;
                }
            }
        }
    }
}

/// Statevector simulator bound to one formula; the energy of every
/// assignment is computed once.
#[derive(Debug, Clone)]
pub struct Simulator {
    n: u32,
    num_clauses: usize,
    energies: Vec<u32>,
    min_energy: u32,
}

impl Simulator {
    pub fn new(formula: &CnfFormula) -> Result<Self> {
        Simulator::with_cap(formula, DEFAULT_STATEVECTOR_CAP)
    }

    pub fn with_cap(formula: &CnfFormula, cap: u32) -> Result<Self> {
        let n = formula.num_variables();
        if n > cap {
            return Err(Error::StatevectorCap { n, cap });
        }
        let energies = energy_table(formula, cap)?;
        let min_energy = energies.iter().copied().min().unwrap_or(0);
        Ok(Simulator {
            n,
            num_clauses: formula.num_clauses(),
            energies,
            min_energy,
        })
    }

    pub fn num_variables(&self) -> u32 {
        self.n
    }

    pub fn energies(&self) -> &[u32] {
        &self.energies
    }

    pub fn simulate(&self, schedule: &AngleSchedule, mixer: Mixer) -> StateVector {
        let mut state = StateVector::uniform(self.n);
        let mut phases = vec![Complex64::new(1.0, 0.0); self.num_clauses + 1];
        for (beta, gamma) in schedule.iter() {
            for (e, ph) in phases.iter_mut().enumerate() {
                *ph = Complex64::cis(-gamma * e as f64);
            }
            state.apply_phases(&self.energies, &phases);
            match mixer {
                Mixer::Grover => state.apply_grover_mixer(beta),
                Mixer::TransverseX => state.apply_x_mixer(beta),
            }
        }
        state
    }

    pub fn expected_energy(&self, state: &StateVector) -> f64 {
        state
            .amplitudes
            .iter()
            .zip(&self.energies)
            .map(|(a, &e)| a.norm_sqr() * e as f64)
            .sum()
    }

    pub fn success_probability(&self, state: &StateVector, objective: Objective) -> f64 {
        let target = match objective {
            Objective::Solutions => 0,
            Objective::MinEnergy => self.min_energy,
        };
        state
            .amplitudes
            .iter()
            .zip(&self.energies)
            .filter(|(_, &e)| e == target)
            .map(|(a, _)| a.norm_sqr())
            .sum()
    }
}

/// Simulates `schedule` on the full state space (default cap of 20 variables).
pub fn simulate(formula: &CnfFormula, schedule: &AngleSchedule, mixer: Mixer) -> Result<StateVector> {
    Ok(Simulator::new(formula)?.simulate(schedule, mixer))
}

/// Measurement statistics over all `2^n` assignments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDistribution {
    n: u32,
    /// Exact or empirical probability per assignment (indexed by bits).
    probabilities: Vec<f64>,
    /// Shot counts per assignment; empty for exact distributions.
    counts: Vec<u64>,
    shots: u64,
}

impl OutputDistribution {
    pub fn from_probabilities(n: u32, probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.len() != 1usize << n {
            return Err(Error::InvalidArgument(format!(
                "{} probabilities do not describe {n} variables",
                probabilities.len()
            )));
        }
        if probabilities.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidArgument("probabilities must be non-negative".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(OutputDistribution {
            n,
            probabilities,
            counts: Vec::new(),
            shots: 0,
        })
    }

    pub fn from_counts(n: u32, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != 1usize << n {
            return Err(Error::InvalidArgument(format!(
                "{} counts do not describe {n} variables",
                counts.len()
            )));
        }
        let shots: u64 = counts.iter().sum();
        if shots == 0 {
            return Err(Error::EmptyCounts);
        }
        let probabilities = counts.iter().map(|&c| c as f64 / shots as f64).collect();
        Ok(OutputDistribution {
            n,
            probabilities,
            counts,
            shots,
        })
    }

    pub fn num_variables(&self) -> u32 {
        self.n
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, assignment: Assignment) -> f64 {
        self.probabilities[assignment.bits() as usize]
    }

    /// Per-assignment counts; empty when the distribution is exact.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Number of shots behind the counts, 0 for an exact distribution.
    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn is_exact(&self) -> bool {
        self.shots == 0
    }

    /// Total probability on the given assignments.
    pub fn mass(&self, assignments: &[Assignment]) -> f64 {
        assignments.iter().map(|&a| self.probability(a)).sum()
    }

    /// Count file: JSON object from bitstring (variable 0 first) to count,
    /// listing only observed outcomes.
    pub fn to_count_json(&self) -> Result<String> {
        if self.is_exact() {
            return Err(Error::InvalidArgument(
                "an exact distribution has no counts".into(),
            ));
        }
        let map: BTreeMap<String, u64> = self
            .counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(bits, &c)| (Assignment(bits as u64).to_bitstring(self.n), c))
            .collect();
        Ok(serde_json::to_string_pretty(&map)?)
    }

    /// Reads a count file for `n` variables.
    pub fn from_count_json(text: &str, n: u32) -> Result<Self> {
        let map: BTreeMap<String, u64> = serde_json::from_str(text)?;
        if map.is_empty() {
            return Err(Error::EmptyCounts);
        }
        let mut counts = vec![0u64; 1usize << n];
        for (bitstring, count) in map {
            if bitstring.len() != n as usize {
                return Err(Error::CountWidth {
                    found: bitstring.len(),
                    expected: n,
                    bitstring,
                });
            }
            let a = Assignment::from_bitstring(&bitstring)?;
            counts[a.bits() as usize] += count;
        }
        OutputDistribution::from_counts(n, counts)
    }

    /// CSV `state_index,probability` ordered by state index (variable 0 is
    /// the most significant bit).
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<(u64, f64)> = self
            .probabilities
            .iter()
            .enumerate()
            .map(|(bits, &p)| (Assignment(bits as u64).state_index(self.n), p))
            .collect();
        rows.sort_by_key(|r| r.0);
        let mut out = String::from("state_index,probability\n");
        for (idx, p) in rows {
            writeln!(out, "{idx},{p}").unwrap();
        }
        out
    }
}

pub fn exact_distribution(state: &StateVector) -> OutputDistribution {
    OutputDistribution {
        n: state.n,
        probabilities: state.probabilities(),
        counts: Vec::new(),
        shots: 0,
    }
}

/// Cumulative-sum table for inverse-CDF sampling.
#[derive(Debug, Clone)]
pub struct CdfSampler {
    cumulative: Vec<f64>,
}

impl CdfSampler {
    pub fn new(weights: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        CdfSampler { cumulative }
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Index drawn with probability proportional to its weight.
    pub fn draw(&self, rng: &mut impl Rng) -> usize {
        let u = rng.random::<f64>() * self.total();
        let idx = self.cumulative.partition_point(|&c| c <= u);
        // guard against u landing on the final cumulative value after rounding
        idx.min(self.cumulative.len() - 1)
    }
}

/// Draws `shots` measurements; deterministic for a given seed.
pub fn sample(dist: &OutputDistribution, shots: u64, seed: u64) -> Result<OutputDistribution> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let sampler = CdfSampler::new(&dist.probabilities);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; dist.probabilities.len()];
    for _ in 0..shots {
        counts[sampler.draw(&mut rng)] += 1;
    }
    OutputDistribution::from_counts(dist.n, counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::{enumerate_solutions, InstanceFormat};
    use std::f64::consts::PI;

    fn four_qubit() -> CnfFormula {
        CnfFormula::parse(
            "[[-0,+2,+3],[+0,+2,-3],[-1,+2,-3],[-1,-2,-3],[-1,-2,+3],[+1,+2,-3],[+0,+2,+3],[-0,+1,-3]]",
            InstanceFormat::Json,
        )
        .unwrap()
    }

    #[test]
    fn zero_rounds_is_uniform() {
        let f = four_qubit();
        for mixer in [Mixer::Grover, Mixer::TransverseX] {
            let s = simulate(&f, &AngleSchedule::empty(), mixer).unwrap();
            assert!(s.amplitudes().iter().all(|a| (a.re - 0.25).abs() < 1e-15 && a.im == 0.0));
            let d = exact_distribution(&s);
            assert!(d.probabilities().iter().all(|&p| (p - 1.0 / 16.0).abs() < 1e-15));
        }
    }

    #[test]
    fn norm_is_preserved() {
        let sim = Simulator::new(&four_qubit()).unwrap();
        let sched = AngleSchedule::per_round(vec![(0.3, 1.2), (2.5, 0.7), (4.0, 5.0)]);
        for mixer in [Mixer::Grover, Mixer::TransverseX] {
            let s = sim.simulate(&sched, mixer);
            assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn x_mixer_limits() {
        let sim = Simulator::new(&four_qubit()).unwrap();
        // β = 0: identity mixer, only phases
        let s = sim.simulate(&AngleSchedule::single_pair(3, 0.0, 1.1), Mixer::TransverseX);
        assert!(s.probabilities().iter().all(|&p| (p - 1.0 / 16.0).abs() < 1e-14));
        // γ = 0: |+⟩ is an eigenstate of every X_i
        let s = sim.simulate(&AngleSchedule::single_pair(3, 0.9, 0.0), Mixer::TransverseX);
        let p = sim.success_probability(&s, Objective::Solutions);
        assert!((p - 3.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn grover_output_is_fair_x_output_is_not() {
        let f = four_qubit();
        let sols = enumerate_solutions(&f).unwrap();
        let sim = Simulator::new(&f).unwrap();
        let sched = AngleSchedule::single_pair(1, 2.0, 0.8);
        let g = exact_distribution(&sim.simulate(&sched, Mixer::Grover));
        let first = g.probability(sols[0]);
        assert!(sols.iter().all(|&a| (g.probability(a) - first).abs() < 1e-10));

        let x = exact_distribution(&sim.simulate(&sched, Mixer::TransverseX));
        let spread = sols
            .iter()
            .map(|&a| x.probability(a))
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), p| (lo.min(p), hi.max(p)));
        assert!(spread.1 - spread.0 > 1e-3, "{spread:?}");
    }

    #[test]
    fn statevector_cap() {
        let f = CnfFormula::new(22, []).unwrap();
        assert!(matches!(
            Simulator::new(&f),
            Err(Error::StatevectorCap { n: 22, cap: 20 })
        ));
        assert!(Simulator::with_cap(&CnfFormula::new(4, []).unwrap(), 3).is_err());
    }

    #[test]
    fn deterministic_sampling() {
        let mut probs = vec![0.0; 16];
        probs[5] = 1.0;
        let d = OutputDistribution::from_probabilities(4, probs).unwrap();
        let c = sample(&d, 5, 1).unwrap();
        assert_eq!(c.counts()[5], 5);
        assert_eq!(c.shots(), 5);
        assert_eq!(sample(&d, 0, 1).unwrap_err().to_string(), "invalid argument: shots must be at least 1");
    }

    #[test]
    fn binomial_sampling_bound() {
        let mut probs = vec![0.0; 2];
        probs[0] = 0.5;
        probs[1] = 0.5;
        let d = OutputDistribution::from_probabilities(1, probs).unwrap();
        let shots = 1_000_000u64;
        let c = sample(&d, shots, 42).unwrap();
        let sigma = (shots as f64 * 0.25).sqrt();
        assert!((c.counts()[0] as f64 - 5e5).abs() < 5.0 * sigma);
        assert_eq!(c.counts().iter().sum::<u64>(), shots);
        assert_eq!(sample(&d, 1000, 9).unwrap(), sample(&d, 1000, 9).unwrap());
    }

    #[test]
    fn count_file_round_trip() {
        let mut counts = vec![0u64; 8];
        counts[1] = 3; // variable 0 set -> "100"
        counts[6] = 2;
        let d = OutputDistribution::from_counts(3, counts).unwrap();
        let text = d.to_count_json().unwrap();
        assert!(text.contains("\"100\": 3"));
        assert!(text.contains("\"011\": 2"));
        assert_eq!(OutputDistribution::from_count_json(&text, 3).unwrap(), d);
        assert!(matches!(
            OutputDistribution::from_count_json(&text, 4),
            Err(Error::CountWidth { .. })
        ));
        assert!(matches!(
            OutputDistribution::from_count_json("{}", 3),
            Err(Error::EmptyCounts)
        ));
    }

    #[test]
    fn csv_uses_msb_first_indices() {
        let mut probs = vec![0.0; 4];
        probs[1] = 1.0; // variable 0 true -> bitstring "10" -> index 2
        let d = OutputDistribution::from_probabilities(2, probs).unwrap();
        let csv = d.to_csv();
        assert_eq!(csv, "state_index,probability\n0,0\n1,0\n2,1\n3,0\n");
    }

    #[test]
    fn grover_mixer_at_pi_reflects_about_plus() {
        let f = four_qubit();
        let sim = Simulator::new(&f).unwrap();
        let s = sim.simulate(&AngleSchedule::single_pair(1, PI, 0.0), Mixer::Grover);
        // |+⟩ picks up e^{-iπ} = -1
        assert!(s.amplitudes().iter().all(|a| (a.re + 0.25).abs() < 1e-15));
    }
}
