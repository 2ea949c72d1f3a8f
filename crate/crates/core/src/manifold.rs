//! Grover-mixer QAOA simulated in the space of energy manifolds.
//!
//! The Grover mixer `|+⟩⟨+|` and the diagonal problem Hamiltonian both act
//! identically on all assignments of equal energy, so starting from `|+⟩`
//! every basis state of a manifold keeps the same amplitude. One complex
//! number per occupied energy level therefore describes the full state, and a
//! round costs `O(L)` with `L ≤ m + 1` levels.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cnf::EnergySpectrum;
use crate::error::{Error, Result};
use crate::schedule::AngleSchedule;

/// Largest tolerated deviation of `Σ c_E |a_E|²` from 1.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Which basis states count as success.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Zero-energy assignments (All-SAT).
    Solutions,
    /// Assignments at the lowest occupied energy (Max-All-SAT).
    MinEnergy,
}

/// One occupied energy manifold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub energy: usize,
    pub count: u64,
    /// Amplitude shared by every assignment in the manifold.
    pub amplitude: Complex64,
}

/// Manifold-reduced QAOA state.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveState {
    n: u32,
    levels: Vec<Level>,
}

impl EffectiveState {
    /// The uniform superposition `|+⟩`.
    pub fn uniform(spectrum: &EnergySpectrum) -> Self {
        let n = spectrum.num_variables();
        let amp = Complex64::new((-(n as f64) / 2.0).exp2(), 0.0);
        EffectiveState {
            n,
            levels: spectrum
                .occupied()
                .map(|(energy, count)| Level {
                    energy,
                    count,
                    amplitude: amp,
                })
                .collect(),
        }
    }

    pub fn num_variables(&self) -> u32 {
        self.n
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// Applies `e^{-iγ H_P}` followed by `e^{-iβ H_M}` in place.
    pub fn apply_round_mut(&mut self, beta: f64, gamma: f64) {
        let mut overlap = Complex64::new(0.0, 0.0);
        for level in &mut self.levels {
            level.amplitude *= Complex64::cis(-gamma * level.energy as f64);
            overlap += level.amplitude * level.count as f64;
        }
        let shift =
            (Complex64::cis(-beta) - 1.0) * overlap * (-(self.n as f64)).exp2();
        for level in &mut self.levels {
            level.amplitude += shift;
        }
    }

    pub fn apply_round(&self, beta: f64, gamma: f64) -> Self {
        let mut next = self.clone();
        next.apply_round_mut(beta, gamma);
        next
    }

    /// `Σ_E c_E |a_E|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.levels
            .iter()
            .map(|l| l.count as f64 * l.amplitude.norm_sqr())
            .sum()
    }

    pub fn check_norm(&self) -> Result<()> {
        let norm = self.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            Err(Error::NormDrift(norm))
        } else {
            Ok(())
        }
    }

    /// Expectation of `H_P`: the mean number of unsatisfied clauses.
    pub fn expected_energy(&self) -> f64 {
        self.levels
            .iter()
            .map(|l| l.count as f64 * l.amplitude.norm_sqr() * l.energy as f64)
            .sum()
    }

    /// Total probability of the manifold at `energy` (0 if unoccupied).
    pub fn manifold_probability(&self, energy: usize) -> f64 {
        self.level(energy)
            .map_or(0.0, |l| l.count as f64 * l.amplitude.norm_sqr())
    }

    /// Probability of one particular assignment of the given energy.
    pub fn assignment_probability(&self, energy: usize) -> f64 {
        self.level(energy).map_or(0.0, |l| l.amplitude.norm_sqr())
    }

    pub fn success_probability(&self, objective: Objective) -> f64 {
        match objective {
            Objective::Solutions => self.manifold_probability(0),
            Objective::MinEnergy => self
                .levels
                .first()
                .map_or(0.0, |l| l.count as f64 * l.amplitude.norm_sqr()),
        }
    }

    fn level(&self, energy: usize) -> Option<&Level> {
        self.levels
            .binary_search_by_key(&energy, |l| l.energy)
            .ok()
            .map(|i| &self.levels[i])
    }

    /// JSON list of `[E, c_E, Re a, Im a]`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.levels
                .iter()
                .map(|l| {
                    serde_json::json!([l.energy, l.count, l.amplitude.re, l.amplitude.im])
                })
                .collect(),
        )
    }
}

pub fn init_uniform(spectrum: &EnergySpectrum) -> EffectiveState {
    EffectiveState::uniform(spectrum)
}

pub fn apply_round(state: &EffectiveState, beta: f64, gamma: f64) -> EffectiveState {
    state.apply_round(beta, gamma)
}

/// Runs the schedule from `|+⟩`, failing if the norm drifts beyond
/// [`NORM_TOLERANCE`].
pub fn run_schedule(spectrum: &EnergySpectrum, schedule: &AngleSchedule) -> Result<EffectiveState> {
    let mut state = EffectiveState::uniform(spectrum);
    for (beta, gamma) in schedule.iter() {
        state.apply_round_mut(beta, gamma);
    }
    state.check_norm()?;
    Ok(state)
}

pub fn expected_energy(state: &EffectiveState) -> f64 {
    state.expected_energy()
}

pub fn success_probability(state: &EffectiveState, objective: Objective) -> f64 {
    state.success_probability(objective)
}

/// Figures of merit of one simulated schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub energy: f64,
    pub solution_probability: f64,
    pub min_energy_probability: f64,
}

impl Evaluation {
    pub fn success(&self, objective: Objective) -> f64 {
        match objective {
            Objective::Solutions => self.solution_probability,
            Objective::MinEnergy => self.min_energy_probability,
        }
    }
}

/// Allocation-light evaluator for repeated cost evaluations on one spectrum.
///
/// Amplitudes are kept rescaled by `2^{n/2}` (so `|+⟩` is all ones) and each
/// level carries its weight `c_E / 2^n`.
#[derive(Debug, Clone)]
pub struct ManifoldKernel {
    energies: Vec<f64>,
    weights: Vec<f64>,
    has_solutions: bool,
}

impl ManifoldKernel {
    pub fn new(spectrum: &EnergySpectrum) -> Self {
        let dim = spectrum.dimension();
        let (energies, weights) = spectrum
            .occupied()
            .map(|(e, c)| (e as f64, c as f64 / dim))
            .unzip();
        ManifoldKernel {
            energies,
            weights,
            has_solutions: spectrum.is_satisfiable(),
        }
    }

    pub fn num_levels(&self) -> usize {
        self.energies.len()
    }

    /// `e^{-iγE}` for every level.
    pub fn phases(&self, gamma: f64, out: &mut Vec<Complex64>) {
        out.clear();
        out.extend(self.energies.iter().map(|&e| Complex64::cis(-gamma * e)));
    }

    /// Single-pair schedule with precomputed phases.
    pub fn evaluate_pair(
        &self,
        rounds: usize,
        beta: f64,
        phases: &[Complex64],
        amps: &mut Vec<Complex64>,
    ) -> Evaluation {
        amps.clear();
        amps.resize(self.energies.len(), Complex64::new(1.0, 0.0));
        let mix = Complex64::cis(-beta) - 1.0;
        for _ in 0..rounds {
            self.round(amps, phases, mix);
        }
        self.summarize(amps)
    }

    /// Any schedule.
    pub fn evaluate(&self, schedule: &AngleSchedule) -> Evaluation {
        let mut amps = vec![Complex64::new(1.0, 0.0); self.energies.len()];
        let mut phases = Vec::with_capacity(self.energies.len());
        if let Some((beta, gamma)) = schedule.pair() {
            self.phases(gamma, &mut phases);
            return self.evaluate_pair(schedule.rounds(), beta, &phases, &mut amps);
        }
        for (beta, gamma) in schedule.iter() {
            self.phases(gamma, &mut phases);
            self.round(&mut amps, &phases, Complex64::cis(-beta) - 1.0);
        }
        self.summarize(&amps)
    }

    #[inline]
    fn round(&self, amps: &mut [Complex64], phases: &[Complex64], mix: Complex64) {
        let mut overlap = Complex64::new(0.0, 0.0);
        for ((a, &ph), &w) in amps.iter_mut().zip(phases).zip(&self.weights) {
            *a *= ph;
            overlap += *a * w;
        }
        let shift = mix * overlap;
        for a in amps.iter_mut() {
            *a += shift;
        }
    }

    fn summarize(&self, amps: &[Complex64]) -> Evaluation {
        let mut energy = 0.0;
        for ((a, &w), &e) in amps.iter().zip(&self.weights).zip(&self.energies) {
            energy += w * a.norm_sqr() * e;
        }
        let first = amps.first().map_or(0.0, |a| self.weights[0] * a.norm_sqr());
        Evaluation {
            energy,
            solution_probability: if self.has_solutions { first } else { 0.0 },
            min_energy_probability: first,
        }
    }
}

/// Expected energy of single-pair schedules over a `β × γ` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub rounds: usize,
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
    /// Row-major: `values[i * gammas.len() + j]` is at `(betas[i], gammas[j])`.
    pub values: Vec<f64>,
}

impl Landscape {
    pub fn get(&self, beta_index: usize, gamma_index: usize) -> f64 {
        self.values[beta_index * self.gammas.len() + gamma_index]
    }

    pub fn row(&self, beta_index: usize) -> &[f64] {
        let w = self.gammas.len();
        &self.values[beta_index * w..(beta_index + 1) * w]
    }

    pub fn column(&self, gamma_index: usize) -> Vec<f64> {
        (0..self.betas.len()).map(|i| self.get(i, gamma_index)).collect()
    }

    /// Grid point of lowest value as `(β, γ, value)`, restricted to `γ ≤ π`.
    ///
    /// The landscape is symmetric under `(β, γ) → (2π−β, 2π−γ)` (complex
    /// conjugation of the state), so each minimum appears twice; the half
    /// plane `γ ≤ π` picks the same representative as the optimizer.
    pub fn argmin(&self) -> (f64, f64, f64) {
        let mut best = (f64::NAN, f64::NAN, f64::INFINITY);
        for (j, &g) in self.gammas.iter().enumerate() {
            if g > std::f64::consts::PI + 1e-12 {
                continue;
            }
            for (i, &b) in self.betas.iter().enumerate() {
                let v = self.get(i, j);
                if v < best.2 {
                    best = (b, g, v);
                }
            }
        }
        best
    }

    /// Element-wise mean of landscapes sharing one grid.
    pub fn average(landscapes: &[Landscape]) -> Result<Landscape> {
        let first = landscapes
            .first()
            .ok_or_else(|| Error::InvalidArgument("no landscapes to average".into()))?;
        let mut values = vec![0.0; first.values.len()];
        for l in landscapes {
            if l.betas != first.betas || l.gammas != first.gammas {
                return Err(Error::InvalidArgument("landscape grids differ".into()));
            }
            values.iter_mut().zip(&l.values).for_each(|(v, x)| *v += x);
        }
        let k = landscapes.len() as f64;
        values.iter_mut().for_each(|v| *v /= k);
        Ok(Landscape {
            rounds: first.rounds,
            betas: first.betas.clone(),
            gammas: first.gammas.clone(),
            values,
        })
    }

    /// CSV with a `beta\gamma` header row of γ values and one row per β.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("beta\\gamma");
        for g in &self.gammas {
            write!(out, ",{g}").unwrap();
        }
        out.push('\n');
        for (i, b) in self.betas.iter().enumerate() {
            write!(out, "{b}").unwrap();
            for v in self.row(i) {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Expected energy of the `rounds`-round single-pair schedule at each grid
/// point.
pub fn landscape_grid(
    spectrum: &EnergySpectrum,
    rounds: usize,
    betas: &[f64],
    gammas: &[f64],
) -> Landscape {
    let kernel = ManifoldKernel::new(spectrum);
    let columns: Vec<Vec<f64>> = gammas
        .par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(phases, amps), &g| {
                kernel.phases(g, phases);
                betas
                    .iter()
                    .map(|&b| kernel.evaluate_pair(rounds, b, phases, amps).energy)
                    .collect()
            },
        )
        .collect();
    let mut values = vec![0.0; betas.len() * gammas.len()];
    for (j, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            values[i * gammas.len() + j] = *v;
        }
    }
    Landscape {
        rounds,
        betas: betas.to_vec(),
        gammas: gammas.to_vec(),
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::{compute_spectrum, CnfFormula, InstanceFormat};
    use std::f64::consts::PI;

    fn single_clause() -> EnergySpectrum {
        EnergySpectrum::from_counts(3, vec![7, 1]).unwrap()
    }

    #[test]
    fn uniform_state() {
        let s = EffectiveState::uniform(&EnergySpectrum::from_counts(3, vec![8]).unwrap());
        assert_eq!(s.levels().len(), 1);
        assert_eq!(s.levels()[0].count, 8);
        assert!((s.levels()[0].amplitude.re - 1.0 / 8f64.sqrt()).abs() < 1e-15);

        let s = EffectiveState::uniform(&single_clause());
        assert_eq!(s.levels()[0].amplitude, s.levels()[1].amplitude);
        assert!((s.success_probability(Objective::Solutions) - 7.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn footnote_uniform_norm() {
        let f = CnfFormula::parse(
            "[[+1,-2,-3],[-1,-3,+4],[+0,-2,-4],[-0,-2,+3],[+2,+3,+4],[-0,+1,+2],[+0,-2,4],[-1,+2,-4]]",
            InstanceFormat::Json,
        )
        .unwrap();
        let s = EffectiveState::uniform(&compute_spectrum(&f).unwrap());
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        assert!((s.expected_energy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_beta_keeps_probabilities() {
        let spec = EnergySpectrum::from_counts(4, vec![3, 10, 3]).unwrap();
        let s0 = EffectiveState::uniform(&spec).apply_round(0.3, 1.1);
        let s1 = s0.apply_round(0.0, 2.7);
        for e in 0..3 {
            assert!((s0.manifold_probability(e) - s1.manifold_probability(e)).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_gamma_from_uniform_is_global_phase() {
        let s = EffectiveState::uniform(&single_clause()).apply_round(1.3, 0.0);
        assert!((s.success_probability(Objective::Solutions) - 7.0 / 8.0).abs() < 1e-14);
    }

    #[test]
    fn pi_pi_round_on_single_clause() {
        // closed form: overlap Σ c_E a_E = 6/√8 after the phase step, so
        // a_0 = (1 - 3/2)/√8 and a_1 = (-1 - 3/2)/√8
        let s = EffectiveState::uniform(&single_clause()).apply_round(PI, PI);
        let p = s.success_probability(Objective::Solutions);
        assert!((p - 7.0 / 32.0).abs() < 1e-14, "{p}");
        assert!((s.manifold_probability(1) - 25.0 / 32.0).abs() < 1e-14);
    }

    #[test]
    fn schedule_modes_agree() {
        let spec = EnergySpectrum::from_counts(4, vec![3, 10, 3]).unwrap();
        let a = run_schedule(&spec, &AngleSchedule::single_pair(2, 0.7, 2.1)).unwrap();
        let b = run_schedule(&spec, &AngleSchedule::per_round(vec![(0.7, 2.1); 2])).unwrap();
        for (x, y) in a.levels().iter().zip(b.levels()) {
            assert!((x.amplitude - y.amplitude).norm() < 1e-12);
        }
        let empty = run_schedule(&spec, &AngleSchedule::empty()).unwrap();
        assert!((empty.success_probability(Objective::Solutions) - 3.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn objectives() {
        let spec = EnergySpectrum::from_counts(4, vec![0, 6, 10]).unwrap();
        let s = EffectiveState::uniform(&spec);
        assert_eq!(s.success_probability(Objective::Solutions), 0.0);
        assert!((s.success_probability(Objective::MinEnergy) - 6.0 / 16.0).abs() < 1e-15);
        let spec = EnergySpectrum::from_counts(4, vec![3, 10, 3]).unwrap();
        let s = run_schedule(&spec, &AngleSchedule::single_pair(3, 2.0, 0.4)).unwrap();
        assert_eq!(
            s.success_probability(Objective::Solutions),
            s.success_probability(Objective::MinEnergy)
        );
    }

    #[test]
    fn kernel_matches_state() {
        let spec = EnergySpectrum::from_counts(5, vec![4, 9, 12, 0, 7]).unwrap();
        let kernel = ManifoldKernel::new(&spec);
        for sched in [
            AngleSchedule::single_pair(7, 2.2, 0.4),
            AngleSchedule::per_round(vec![(0.1, 0.2), (3.0, 1.0), (5.5, 6.0)]),
        ] {
            let s = run_schedule(&spec, &sched).unwrap();
            let ev = kernel.evaluate(&sched);
            assert!((ev.energy - s.expected_energy()).abs() < 1e-12);
            assert!((ev.solution_probability - s.success_probability(Objective::Solutions)).abs() < 1e-12);
        }
    }

    #[test]
    fn norm_drift_is_reported() {
        let spec = single_clause();
        let mut s = EffectiveState::uniform(&spec);
        s.levels[0].amplitude *= 1.01;
        assert!(matches!(s.check_norm(), Err(Error::NormDrift(_))));
    }

    #[test]
    fn landscape_axes_are_flat() {
        let spec = EnergySpectrum::from_counts(4, vec![3, 10, 3]).unwrap();
        let grid = crate::seeds::uniform_angles(PI / 18.0);
        let l = landscape_grid(&spec, 3, &grid, &grid);
        assert_eq!((l.betas.len(), l.gammas.len()), (36, 36));
        // m/8 with m = 8 clauses
        for v in l.row(0) {
            assert!((v - 1.0).abs() < 1e-12);
        }
        for v in l.column(0) {
            assert!((v - 1.0).abs() < 1e-12);
        }
        let csv = l.to_csv();
        assert_eq!(csv.lines().count(), 37);
        assert!(csv.starts_with("beta\\gamma,0,"));
    }

    #[test]
    fn state_dump_shape() {
        let s = EffectiveState::uniform(&single_clause());
        let v = s.to_json();
        assert_eq!(v.as_array().unwrap().len(), 2);
        assert_eq!(v[1][0], 1);
        assert_eq!(v[1][1], 1);
    }
}
