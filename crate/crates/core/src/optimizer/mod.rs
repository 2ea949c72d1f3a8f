//! Variational angle optimization and minimal-round search.
//!
//! The cost is the expected energy. Seeds come from a uniform `(β, γ)` grid
//! (or random points for large `n`), the best `K` seeds are refined by BFGS,
//! and the lowest refined cost wins. [`RoundSearcher`] then looks for the
//! smallest round count whose optimized state reaches a success target.

mod bfgs;

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bfgs::{minimize, BfgsOptions, Minimum};

use crate::cnf::{CnfFormula, EnergySpectrum};
use crate::error::{Error, Result};
use crate::manifold::{Evaluation, ManifoldKernel, Objective};
use crate::schedule::{wrap_angle, AngleSchedule, ScheduleMode};
use crate::seeds::uniform_angles;
use crate::statevector::{Mixer, Simulator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Seed grid spacing in radians.
    pub grid_spacing: f64,
    /// Random seeds drawn when `n > grid_max_n`.
    pub random_samples: usize,
    pub grid_max_n: u32,
    /// Number of best seeds refined locally.
    pub top_k: usize,
    pub gradient_step: f64,
    pub rel_tol: f64,
    pub max_iterations: usize,
    pub p_cap: usize,
    /// Probe every `p = 1, 2, ...` instead of bracketing and bisecting.
    pub linear_scan: bool,
    /// Search only `γ ≤ π`; the other half plane holds the complex-conjugate
    /// states with identical statistics.
    pub use_conjugation_symmetry: bool,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            grid_spacing: PI / 180.0,
            random_samples: 4000,
            grid_max_n: 20,
            top_k: 20,
            gradient_step: 1e-6,
            rel_tol: 1e-6,
            max_iterations: 200,
            p_cap: 4096,
            linear_scan: false,
            use_conjugation_symmetry: true,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            OptimizerConfig::from_json_str(&text)
        } else {
            OptimizerConfig::from_toml_str(&text)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(self.grid_spacing > 0.0 && self.grid_spacing <= PI) {
            return bad("grid_spacing must lie in (0, π]");
        }
        if self.top_k == 0 {
            return bad("top_k must be at least 1");
        }
        if self.random_samples == 0 {
            return bad("random_samples must be at least 1");
        }
        if !(self.gradient_step > 0.0) || !(self.rel_tol > 0.0) {
            return bad("gradient_step and rel_tol must be positive");
        }
        if self.p_cap == 0 {
            return bad("p_cap must be at least 1");
        }
        Ok(())
    }

    fn bfgs(&self) -> BfgsOptions {
        BfgsOptions {
            gradient_step: self.gradient_step,
            rel_tol: self.rel_tol,
            max_iterations: self.max_iterations,
            ..BfgsOptions::default()
        }
    }
}

/// Anything that maps a schedule to energy and success statistics.
pub trait CostModel: Sync {
    fn num_variables(&self) -> u32;

    /// Number of clauses; the uniform state has cost `m / 8`.
    fn num_clauses(&self) -> usize;

    fn is_satisfiable(&self) -> bool;

    fn evaluate(&self, schedule: &AngleSchedule) -> Evaluation;

    /// Expected energy of single-pair schedules at each `(β, γ)`.
    fn energies_at(&self, rounds: usize, points: &[(f64, f64)]) -> Vec<f64> {
        points
            .par_iter()
            .map(|&(b, g)| self.evaluate(&AngleSchedule::single_pair(rounds, b, g)).energy)
            .collect()
    }
}

/// Grover-mixer cost on the energy-manifold representation.
#[derive(Debug, Clone)]
pub struct ManifoldModel {
    kernel: ManifoldKernel,
    n: u32,
    m: usize,
    satisfiable: bool,
}

impl ManifoldModel {
    pub fn new(spectrum: &EnergySpectrum) -> Self {
        ManifoldModel {
            kernel: ManifoldKernel::new(spectrum),
            n: spectrum.num_variables(),
            m: spectrum.num_clauses(),
            satisfiable: spectrum.is_satisfiable(),
        }
    }
}

impl CostModel for ManifoldModel {
    fn num_variables(&self) -> u32 {
        self.n
    }

    fn num_clauses(&self) -> usize {
        self.m
    }

    fn is_satisfiable(&self) -> bool {
        self.satisfiable
    }

    fn evaluate(&self, schedule: &AngleSchedule) -> Evaluation {
        self.kernel.evaluate(schedule)
    }

    fn energies_at(&self, rounds: usize, points: &[(f64, f64)]) -> Vec<f64> {
        // points sharing γ reuse one phase table
        points
            .par_chunks(2048)
            .flat_map_iter(|chunk| {
                let mut phases = Vec::new();
                let mut amps = Vec::new();
                let mut last = f64::NAN;
                chunk
                    .iter()
                    .map(|&(b, g)| {
                        if g != last {
                            self.kernel.phases(g, &mut phases);
                            last = g;
                        }
                        self.kernel.evaluate_pair(rounds, b, &phases, &mut amps).energy
                    })
                    .collect::<Vec<_>>()
            })
            .collect()
    }
}

/// Full-statevector cost for either mixer.
#[derive(Debug, Clone)]
pub struct StatevectorModel {
    sim: Simulator,
    mixer: Mixer,
    m: usize,
    satisfiable: bool,
}

impl StatevectorModel {
    pub fn new(formula: &CnfFormula, mixer: Mixer) -> Result<Self> {
        let sim = Simulator::new(formula)?;
        let satisfiable = sim.energies().contains(&0);
        Ok(StatevectorModel {
            sim,
            mixer,
            m: formula.num_clauses(),
            satisfiable,
        })
    }

    pub fn simulator(&self) -> &Simulator {
        &self.sim
    }

    pub fn mixer(&self) -> Mixer {
        self.mixer
    }
}

impl CostModel for StatevectorModel {
    fn num_variables(&self) -> u32 {
        self.sim.num_variables()
    }

    fn num_clauses(&self) -> usize {
        self.m
    }

    fn is_satisfiable(&self) -> bool {
        self.satisfiable
    }

    fn evaluate(&self, schedule: &AngleSchedule) -> Evaluation {
        let state = self.sim.simulate(schedule, self.mixer);
        let solution_probability = if self.satisfiable {
            self.sim.success_probability(&state, Objective::Solutions)
        } else {
            0.0
        };
        Evaluation {
            energy: self.sim.expected_energy(&state),
            solution_probability,
            min_energy_probability: self.sim.success_probability(&state, Objective::MinEnergy),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub schedule: AngleSchedule,
    /// Expected energy at the returned schedule.
    pub cost: f64,
    pub solution_probability: f64,
    pub min_energy_probability: f64,
    /// Grid or random seed that led to the optimum.
    pub seed_point: (f64, f64),
    pub iterations: usize,
    pub converged: bool,
}

impl OptimizationResult {
    pub fn success(&self, objective: Objective) -> f64 {
        match objective {
            Objective::Solutions => self.solution_probability,
            Objective::MinEnergy => self.min_energy_probability,
        }
    }

    fn from_evaluation(
        schedule: AngleSchedule,
        eval: Evaluation,
        seed_point: (f64, f64),
        iterations: usize,
        converged: bool,
    ) -> Self {
        OptimizationResult {
            schedule,
            cost: eval.energy,
            solution_probability: eval.solution_probability,
            min_energy_probability: eval.min_energy_probability,
            seed_point,
            iterations,
            converged,
        }
    }
}

/// Seed points for `n` variables: the full grid for `n ≤ grid_max_n`,
/// otherwise `random_samples` uniform points. Ordered by `γ`, then `β`.
pub fn seed_candidates(n: u32, config: &OptimizerConfig) -> Vec<(f64, f64)> {
    let mut points: Vec<(f64, f64)> = if n <= config.grid_max_n {
        let axis = uniform_angles(config.grid_spacing);
        axis.iter()
            .flat_map(|&g| axis.iter().map(move |&b| (b, g)))
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        (0..config.random_samples)
            .map(|_| (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)))
            .collect()
    };
    points.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    points
}

/// Maps `(β, γ)` with `γ > π` to its conjugate partner `(2π − β, 2π − γ)`.
fn fold(beta: f64, gamma: f64) -> (f64, f64) {
    let (b, g) = (wrap_angle(beta), wrap_angle(gamma));
    if g > PI {
        (wrap_angle(TAU - b), wrap_angle(TAU - g))
    } else {
        (b, g)
    }
}

fn costs_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Orders candidates by cost, breaking near-ties by smallest `γ` then `β`.
fn better(a: &Candidate, b: &Candidate) -> std::cmp::Ordering {
    if costs_tie(a.cost, b.cost) {
        let (ka, kb) = (a.tie_key(), b.tie_key());
        ka.0.total_cmp(&kb.0)
            .then(ka.1.total_cmp(&kb.1))
            .then(a.cost.total_cmp(&b.cost))
    } else {
        a.cost.total_cmp(&b.cost)
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    params: Vec<f64>,
    cost: f64,
    seed_point: (f64, f64),
    iterations: usize,
    converged: bool,
}

impl Candidate {
    /// `(γ, β)` of the first round.
    fn tie_key(&self) -> (f64, f64) {
        (self.params[1], self.params[0])
    }
}

/// Wraps all angles; with `symmetric`, conjugates the whole schedule when
/// the first `γ` lies above `π`.
fn normalize(params: &mut [f64], symmetric: bool) {
    let conj = symmetric && wrap_angle(params[1]) > PI;
    for v in params.iter_mut() {
        *v = if conj { wrap_angle(TAU - *v) } else { wrap_angle(*v) };
    }
}

/// Grid search plus BFGS refinement of single-pair angles; all refined
/// candidates, best first.
fn refine_single_pair<M: CostModel>(model: &M, rounds: usize, config: &OptimizerConfig) -> Vec<Candidate> {
    let mut seeds = seed_candidates(model.num_variables(), config);
    if config.use_conjugation_symmetry {
        seeds = seeds.into_iter().map(|(b, g)| fold(b, g)).collect();
        seeds.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
        seeds.dedup();
    }
    let costs = model.energies_at(rounds, &seeds);
    let mut order: Vec<usize> = (0..seeds.len()).collect();
    let key = |i: &usize, j: &usize| {
        costs[*i]
            .total_cmp(&costs[*j])
            .then(seeds[*i].1.total_cmp(&seeds[*j].1))
            .then(seeds[*i].0.total_cmp(&seeds[*j].0))
    };
    let k = config.top_k.min(order.len());
    if k < order.len() {
        order.select_nth_unstable_by(k - 1, key);
        order.truncate(k);
    }
    order.sort_by(key);

    let opts = config.bfgs();
    let mut candidates: Vec<Candidate> = order
        .par_iter()
        .map(|&i| {
            let (b0, g0) = seeds[i];
            let f = |x: &[f64]| model.evaluate(&AngleSchedule::single_pair(rounds, x[0], x[1])).energy;
            let min = minimize(f, &[b0, g0], &opts);
            let mut params = min.x;
            normalize(&mut params, config.use_conjugation_symmetry);
            Candidate {
                params,
                cost: min.value,
                seed_point: (b0, g0),
                iterations: min.iterations,
                converged: min.converged,
            }
        })
        .collect();
    candidates.sort_by(better);
    candidates
}

fn finish<M: CostModel>(model: &M, mode: ScheduleMode, rounds: usize, best: &Candidate) -> Result<OptimizationResult> {
    let schedule = AngleSchedule::from_flat(mode, rounds, &best.params)?;
    let eval = model.evaluate(&schedule);
    Ok(OptimizationResult::from_evaluation(
        schedule,
        eval,
        best.seed_point,
        best.iterations,
        best.converged,
    ))
}

fn check_rounds(rounds: usize) -> Result<()> {
    if rounds == 0 {
        return Err(Error::InvalidArgument("optimization needs at least one round".into()));
    }
    Ok(())
}

/// Best single `(β, γ)` pair repeated over `rounds` rounds.
pub fn optimize_single_pair_with<M: CostModel>(
    model: &M,
    rounds: usize,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    check_rounds(rounds)?;
    let candidates = refine_single_pair(model, rounds, config);
    finish(model, ScheduleMode::SinglePair, rounds, &candidates[0])
}

/// Best per-round schedule, started from the refined single-pair optima
/// replicated across rounds.
pub fn optimize_full_schedule_with<M: CostModel>(
    model: &M,
    rounds: usize,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    check_rounds(rounds)?;
    let starts = refine_single_pair(model, rounds, config);
    if rounds == 1 {
        return finish(model, ScheduleMode::PerRound, 1, &starts[0]);
    }
    let opts = config.bfgs();
    let mut candidates: Vec<Candidate> = starts
        .par_iter()
        .map(|start| {
            let x0: Vec<f64> = (0..rounds).flat_map(|_| start.params.iter().copied()).collect();
            let f = |x: &[f64]| {
                let sched = AngleSchedule::per_round(x.chunks_exact(2).map(|c| (c[0], c[1])).collect());
                model.evaluate(&sched).energy
            };
            let min = minimize(f, &x0, &opts);
            let mut params = min.x;
            normalize(&mut params, config.use_conjugation_symmetry);
            Candidate {
                params,
                cost: min.value,
                seed_point: start.seed_point,
                iterations: start.iterations + min.iterations,
                converged: min.converged,
            }
        })
        .collect();
    candidates.sort_by(better);
    finish(model, ScheduleMode::PerRound, rounds, &candidates[0])
}

pub fn optimize_single_pair(
    spectrum: &EnergySpectrum,
    rounds: usize,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    optimize_single_pair_with(&ManifoldModel::new(spectrum), rounds, config)
}

pub fn optimize_full_schedule(
    spectrum: &EnergySpectrum,
    rounds: usize,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    optimize_full_schedule_with(&ManifoldModel::new(spectrum), rounds, config)
}

pub fn optimize_with<M: CostModel>(
    model: &M,
    mode: ScheduleMode,
    rounds: usize,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    match mode {
        ScheduleMode::SinglePair => optimize_single_pair_with(model, rounds, config),
        ScheduleMode::PerRound => optimize_full_schedule_with(model, rounds, config),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub rounds: usize,
    pub success: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSearchResult {
    pub p_min: usize,
    pub result: OptimizationResult,
    pub target: f64,
    pub objective: Objective,
    pub mode: ScheduleMode,
    /// Probed round counts in probe order.
    pub probes: Vec<Probe>,
}

/// Minimal-round search that caches the optimization of every probed `p`,
/// so several targets and objectives share the work.
pub struct RoundSearcher<M> {
    model: M,
    mode: ScheduleMode,
    config: OptimizerConfig,
    cache: BTreeMap<usize, OptimizationResult>,
}

impl<M: CostModel> RoundSearcher<M> {
    pub fn new(model: M, mode: ScheduleMode, config: OptimizerConfig) -> Self {
        RoundSearcher {
            model,
            mode,
            config,
            cache: BTreeMap::new(),
        }
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    /// Optimized result at `rounds` (the uniform state for `rounds = 0`).
    pub fn result(&mut self, rounds: usize) -> Result<&OptimizationResult> {
        if !self.cache.contains_key(&rounds) {
            let res = if rounds == 0 {
                let schedule = match self.mode {
                    ScheduleMode::SinglePair => AngleSchedule::single_pair(0, 0.0, 0.0),
                    ScheduleMode::PerRound => AngleSchedule::empty(),
                };
                let eval = self.model.evaluate(&schedule);
                OptimizationResult::from_evaluation(schedule, eval, (0.0, 0.0), 0, true)
            } else {
                optimize_with(&self.model, self.mode, rounds, &self.config)?
            };
            self.cache.insert(rounds, res);
        }
        Ok(&self.cache[&rounds])
    }

    pub fn find(&mut self, target: f64, objective: Objective) -> Result<RoundSearchResult> {
        if !(target > 0.0 && target < 1.0) {
            return Err(Error::InvalidArgument(format!("target {target} outside (0, 1)")));
        }
        if objective == Objective::Solutions && !self.model.is_satisfiable() {
            return Err(Error::Unsatisfiable);
        }
        let cap = self.config.p_cap;
        let mut probes = Vec::new();
        let mut probe = |this: &mut Self, p: usize| -> Result<bool> {
            let s = this.result(p)?.success(objective);
            probes.push(Probe { rounds: p, success: s });
            Ok(s >= target)
        };

        let p_min = if probe(self, 0)? {
            0
        } else if self.config.linear_scan {
            let mut p = 1;
            loop {
                if p > cap {
                    return Err(Error::RoundCapExceeded { target, cap });
                }
                if probe(self, p)? {
                    break p;
                }
                p += 1;
            }
        } else {
            // lo always fails, hi always succeeds
            let mut lo = 0;
            let mut hi = 1;
            loop {
                if probe(self, hi)? {
                    break;
                }
                if hi == cap {
                    return Err(Error::RoundCapExceeded { target, cap });
                }
                lo = hi;
                hi = (hi * 2).min(cap);
            }
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if probe(self, mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        };
        Ok(RoundSearchResult {
            p_min,
            result: self.cache[&p_min].clone(),
            target,
            objective,
            mode: self.mode,
            probes,
        })
    }
}

/// Smallest `p` whose energy-optimized state reaches success probability
/// `target`, searched on the manifold simulator.
pub fn find_min_rounds(
    spectrum: &EnergySpectrum,
    target: f64,
    objective: Objective,
    mode: ScheduleMode,
    config: &OptimizerConfig,
) -> Result<RoundSearchResult> {
    RoundSearcher::new(ManifoldModel::new(spectrum), mode, config.clone()).find(target, objective)
}
