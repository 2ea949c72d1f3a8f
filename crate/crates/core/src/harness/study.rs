use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Manifest;
use crate::cnf::{compute_spectrum_with_cap, generate_random_instance_with, DensityRange, GeneratorLimits, Regime};
use crate::compiler::{cost_report, Algorithm, Budget};
use crate::error::{Error, Result};
use crate::manifold::Objective;
use crate::optimizer::{ManifoldModel, OptimizerConfig, RoundSearcher};
use crate::schedule::ScheduleMode;
use crate::seeds::derive_seed;
use crate::stats::{linear_fit, median, LinearFit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub n_values: Vec<u32>,
    pub density: DensityRange,
    pub regime: Regime,
    pub instances_per_n: usize,
    pub targets: Vec<f64>,
    pub mode: ScheduleMode,
    pub objective: Objective,
    pub master_seed: u64,
    pub enumeration_cap: u32,
    pub max_generation_attempts: u32,
    /// `1/P` (or `1/D`) above which `p_min·√P` enters the constant estimate.
    pub constant_min_inverse_probability: f64,
    /// Width of the density bins in the `p_min` vs `d` table.
    pub density_bin_width: f64,
    pub optimizer: OptimizerConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            n_values: vec![10, 11, 12, 13, 14],
            density: DensityRange { min: 2.0, max: 4.5 },
            regime: Regime::Satisfiable,
            instances_per_n: 20,
            targets: vec![0.5],
            mode: ScheduleMode::SinglePair,
            objective: Objective::Solutions,
            master_seed: 0,
            enumeration_cap: crate::cnf::DEFAULT_ENUMERATION_CAP,
            max_generation_attempts: 10_000,
            constant_min_inverse_probability: 100.0,
            density_bin_width: 0.5,
            optimizer: OptimizerConfig::default(),
        }
    }
}

impl StudyConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            StudyConfig::from_json_str(&text)
        } else {
            StudyConfig::from_toml_str(&text)
        }
    }

    pub fn validate(&self) -> Result<()> {
        DensityRange::new(self.density.min, self.density.max).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(t) = self.targets.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(Error::Config(format!("target {t} outside (0, 1)")));
        }
        if self.n_values.iter().any(|&n| n < 3) {
            return Err(Error::Config("every n must be at least 3".into()));
        }
        if self.objective == Objective::Solutions && self.regime == Regime::Unsatisfiable {
            return Err(Error::Config("the solutions objective needs satisfiable instances".into()));
        }
        if !(self.density_bin_width > 0.0) {
            return Err(Error::Config("density_bin_width must be positive".into()));
        }
        self.optimizer.validate()
    }

    /// `(index, n)` for every instance, in output order.
    fn instances(&self) -> Vec<(usize, u32)> {
        self.n_values
            .iter()
            .flat_map(|&n| std::iter::repeat_n(n, self.instances_per_n))
            .enumerate()
            .collect()
    }
}

/// One instance at one success target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub instance: usize,
    pub seed: u64,
    pub n: u32,
    pub m: usize,
    pub density: f64,
    pub regime: Regime,
    pub solution_count: u64,
    /// Fraction of assignments that satisfy the formula.
    pub p: f64,
    pub min_energy: usize,
    /// Fraction of assignments at the minimum energy.
    pub d: f64,
    pub target: f64,
    pub objective: Objective,
    pub mode: ScheduleMode,
    pub p_min: usize,
    /// `(β, γ)` per round; a single pair in single-pair mode.
    pub angles: Vec<(f64, f64)>,
    pub success_probability: f64,
    pub cost: f64,
    /// G-QAOA entangling gates over `p_min` rounds.
    pub q: u64,
    pub q_per_round: u64,
    pub ancillas: u64,
    pub grover_iterations: u64,
    pub grover_q: u64,
    pub grover_ancillas: u64,
    pub wall_time_ms: f64,
}

impl ExperimentRecord {
    /// `P` for the solutions objective, `D` for min-energy.
    pub fn baseline_probability(&self) -> f64 {
        match self.objective {
            Objective::Solutions => self.p,
            Objective::MinEnergy => self.d,
        }
    }

    /// The single-pair angles, if any.
    pub fn pair(&self) -> Option<(f64, f64)> {
        (self.mode == ScheduleMode::SinglePair).then(|| self.angles.first().copied()).flatten()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyFailure {
    pub instance: usize,
    pub seed: u64,
    pub n: u32,
    /// The success target that failed; `None` when the instance itself failed.
    pub target: Option<f64>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub target: f64,
    /// Fit of `ln p_min` on `ln(1/P)` (or `ln(1/D)`) over records with `p_min ≥ 1`.
    pub fit: Option<LinearFit>,
    pub excluded_zero_rounds: usize,
    /// Median of `p_min·√P` over records with `1/P` above the threshold.
    pub median_scaled_rounds: Option<f64>,
    pub scaled_rounds_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub target: f64,
    pub density_lo: f64,
    pub density_hi: f64,
    pub count: usize,
    pub median_p_min: f64,
    pub mean_p_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyOutcome {
    pub records: Vec<ExperimentRecord>,
    pub failures: Vec<StudyFailure>,
    pub fits: Vec<FitSummary>,
    pub density_table: Vec<DensityRow>,
}

impl StudyOutcome {
    pub fn fit_for(&self, target: f64) -> Option<&FitSummary> {
        self.fits.iter().find(|f| f.target == target)
    }

    pub fn records_for(&self, target: f64) -> impl Iterator<Item = &ExperimentRecord> {
        self.records.iter().filter(move |r| r.target == target)
    }

    pub fn records_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn density_csv(&self) -> String {
        let mut out = String::from("target,density_lo,density_hi,count,median_p_min,mean_p_min\n");
        for r in &self.density_table {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.target, r.density_lo, r.density_hi, r.count, r.median_p_min, r.mean_p_min
            ));
        }
        out
    }
}

type InstanceOutcome = std::result::Result<(Vec<ExperimentRecord>, Vec<StudyFailure>), StudyFailure>;

/// Records for every reachable target; a target that cannot be reached is
/// reported as a failure without discarding the others.
fn run_instance(config: &StudyConfig, index: usize, n: u32) -> InstanceOutcome {
    let seed = derive_seed(config.master_seed, index as u64);
    let fail_at = |target: Option<f64>, e: Error| StudyFailure {
        instance: index,
        seed,
        n,
        target,
        error: e.to_string(),
    };
    let fail = |e: Error| fail_at(None, e);
    let started = Instant::now();
    let limits = GeneratorLimits {
        max_attempts: config.max_generation_attempts,
        enumeration_cap: config.enumeration_cap,
    };
    let inst = generate_random_instance_with(n, config.density, config.regime, seed, limits).map_err(fail)?;
    let formula = inst.formula;
    let spectrum = compute_spectrum_with_cap(&formula, config.enumeration_cap).map_err(fail)?;
    let mut optimizer = config.optimizer.clone();
    optimizer.seed = derive_seed(seed, u64::MAX);
    let mut searcher = RoundSearcher::new(ManifoldModel::new(&spectrum), config.mode, optimizer);
    let m = formula.num_clauses();
    let p = spectrum.satisfying_probability();
    let (grover_iterations, grover) = if p > 0.0 {
        let r = cost_report(Algorithm::GroverBaseline, n as u64, m as u64, Budget::SatisfyingProbability(p))
            .map_err(fail)?;
        (r.rounds, Some(r))
    } else {
        (0, None)
    };

    let mut records = Vec::with_capacity(config.targets.len());
    let mut failures = Vec::new();
    for &target in &config.targets {
        let t0 = Instant::now();
        let found = match searcher.find(target, config.objective) {
            Ok(found) => found,
            Err(e @ Error::RoundCapExceeded { .. }) => {
                failures.push(fail_at(Some(target), e));
                continue;
            }
            Err(e) => return Err(fail(e)),
        };
        let report = cost_report(Algorithm::GQaoa, n as u64, m as u64, Budget::Rounds(found.p_min as u64))
            .map_err(fail)?;
        records.push(ExperimentRecord {
            instance: index,
            seed,
            n,
            m,
            density: formula.density(),
            regime: config.regime,
            solution_count: spectrum.solution_count(),
            p,
            min_energy: spectrum.min_energy(),
            d: spectrum.min_energy_probability(),
            target,
            objective: config.objective,
            mode: config.mode,
            p_min: found.p_min,
            angles: found.result.schedule.angles().to_vec(),
            success_probability: found.result.success(config.objective),
            cost: found.result.cost,
            q: report.entangling_total,
            q_per_round: report.entangling_per_round,
            ancillas: report.ancillas,
            grover_iterations,
            grover_q: grover.as_ref().map_or(0, |g| g.entangling_total),
            grover_ancillas: grover.as_ref().map_or(0, |g| g.ancillas),
            wall_time_ms: if records.is_empty() && failures.is_empty() {
                started.elapsed().as_secs_f64() * 1e3
            } else {
                t0.elapsed().as_secs_f64() * 1e3
            },
        });
    }
    Ok((records, failures))
}

fn fit_summaries(config: &StudyConfig, records: &[ExperimentRecord]) -> Vec<FitSummary> {
    config
        .targets
        .iter()
        .map(|&target| {
            let rows: Vec<&ExperimentRecord> = records.iter().filter(|r| r.target == target).collect();
            let usable: Vec<&&ExperimentRecord> = rows.iter().filter(|r| r.p_min >= 1).collect();
            let xs: Vec<f64> = usable.iter().map(|r| (1.0 / r.baseline_probability()).ln()).collect();
            let ys: Vec<f64> = usable.iter().map(|r| (r.p_min as f64).ln()).collect();
            let scaled: Vec<f64> = rows
                .iter()
                .filter(|r| 1.0 / r.baseline_probability() > config.constant_min_inverse_probability)
                .map(|r| r.p_min as f64 * r.baseline_probability().sqrt())
                .collect();
            FitSummary {
                target,
                fit: linear_fit(&xs, &ys),
                excluded_zero_rounds: rows.len() - usable.len(),
                median_scaled_rounds: median(&scaled),
                scaled_rounds_samples: scaled.len(),
            }
        })
        .collect()
}

fn density_table(config: &StudyConfig, records: &[ExperimentRecord]) -> Vec<DensityRow> {
    let w = config.density_bin_width;
    let mut rows = Vec::new();
    for &target in &config.targets {
        let mut bins: std::collections::BTreeMap<i64, Vec<f64>> = Default::default();
        for r in records.iter().filter(|r| r.target == target) {
            bins.entry((r.density / w).floor() as i64).or_default().push(r.p_min as f64);
        }
        for (bin, values) in bins {
            rows.push(DensityRow {
                target,
                density_lo: bin as f64 * w,
                density_hi: (bin + 1) as f64 * w,
                count: values.len(),
                median_p_min: median(&values).unwrap_or(f64::NAN),
                mean_p_min: values.iter().sum::<f64>() / values.len() as f64,
            });
        }
    }
    rows
}

/// Generates every instance, searches minimal rounds for each target and
/// fits the scaling. Instances run in parallel; records come back in
/// instance order, so output does not depend on the worker count.
pub fn run_speedup_study(config: &StudyConfig) -> Result<StudyOutcome> {
    config.validate()?;
    let results: Vec<_> = config
        .instances()
        .into_par_iter()
        .map(|(index, n)| run_instance(config, index, n))
        .collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok((rs, fs)) => {
                records.extend(rs);
                failures.extend(fs);
            }
            Err(f) => failures.push(f),
        }
    }
    Ok(StudyOutcome {
        fits: fit_summaries(config, &records),
        density_table: density_table(config, &records),
        records,
        failures,
    })
}

/// Writes `records.jsonl`, `failures.jsonl`, `fit.json`, `density.csv` and
/// `manifest.json` into `dir`.
pub fn write_study_outputs(dir: &Path, config: &StudyConfig, outcome: &StudyOutcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("records.jsonl"), outcome.records_jsonl()?)?;
    let mut failures = fs::File::create(dir.join("failures.jsonl"))?;
    for f in &outcome.failures {
        writeln!(failures, "{}", serde_json::to_string(f)?)?;
    }
    fs::write(dir.join("fit.json"), serde_json::to_string_pretty(&outcome.fits)?)?;
    fs::write(dir.join("density.csv"), outcome.density_csv())?;
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&Manifest::new(config.master_seed, config))?,
    )?;
    Ok(())
}
