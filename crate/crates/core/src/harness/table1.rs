use serde::Serialize;

use crate::cnf::{enumerate_solutions, CnfFormula};
use crate::error::{Error, Result};
use crate::fairness::{fairness_report, FairnessConfig, FairnessReport};
use crate::optimizer::{optimize_full_schedule_with, OptimizerConfig, StatevectorModel};
use crate::schedule::AngleSchedule;
use crate::seeds::derive_seed;
use crate::statevector::{exact_distribution, Mixer, OutputDistribution};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Row {
    pub mixer: Mixer,
    pub rounds: usize,
    pub schedule: AngleSchedule,
    /// Noiseless probability of measuring a solution, in percent.
    pub solution_percent: f64,
    pub fairness: FairnessReport,
}

/// Noiseless performance of X- and G-QAOA per `(mixer, p)`: angles optimized
/// on the exact expected energy over all `2p` parameters, then solution
/// percentage and both fairness metrics on the exact output distribution.
pub fn reproduce_table1(
    formula: &CnfFormula,
    rounds: &[usize],
    mixers: &[Mixer],
    optimizer: &OptimizerConfig,
    fairness: &FairnessConfig,
) -> Result<Vec<Table1Row>> {
    let solutions = enumerate_solutions(formula)?;
    if solutions.is_empty() {
        return Err(Error::Unsatisfiable);
    }
    let mut rows = Vec::new();
    for (mi, &mixer) in mixers.iter().enumerate() {
        let model = StatevectorModel::new(formula, mixer)?;
        for &p in rounds {
            let opt = optimize_full_schedule_with(&model, p, optimizer)?;
            let state = model.simulator().simulate(&opt.schedule, mixer);
            let dist = exact_distribution(&state);
            let cfg = FairnessConfig {
                seed: derive_seed(fairness.seed, (mi * 1000 + p) as u64),
                ..*fairness
            };
            rows.push(Table1Row {
                mixer,
                rounds: p,
                schedule: opt.schedule,
                solution_percent: 100.0 * dist.mass(&solutions),
                fairness: fairness_report(&dist, &solutions, &cfg)?,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountsEvaluation {
    pub shots: u64,
    pub solution_percent: f64,
    pub fairness: FairnessReport,
}

/// Solution percentage and fairness metrics of measured counts (count-file
/// JSON) for `formula`.
pub fn evaluate_counts(counts_json: &str, formula: &CnfFormula, fairness: &FairnessConfig) -> Result<CountsEvaluation> {
    let dist = OutputDistribution::from_count_json(counts_json, formula.num_variables())?;
    let solutions = enumerate_solutions(formula)?;
    Ok(CountsEvaluation {
        shots: dist.shots(),
        solution_percent: 100.0 * dist.mass(&solutions),
        fairness: fairness_report(&dist, &solutions, fairness)?,
    })
}
