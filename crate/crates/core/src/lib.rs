//! Exact classical laboratory for Grover-mixer QAOA on random 3-SAT and
//! Max-SAT.
//!
//! * [`cnf`]: formulas, parsing, random instances, brute-force spectra.
//! * [`manifold`]: Grover-mixer QAOA simulated on energy manifolds.
//! * [`statevector`]: full `2^n` simulation for the Grover and X mixers.
//! * [`optimizer`]: grid-seeded quasi-Newton angle search and minimal-round
//!   search.
//! * [`fairness`]: shots-to-all-solutions and χ² shots-to-reject metrics.
//! * [`compiler`]: gate-level lowering and entangling-gate accounting.
//! * [`harness`]: studies, exports and reproduction tables.

pub mod cnf;
pub mod compiler;
pub mod error;
pub mod fairness;
pub mod harness;
pub mod instances;
pub mod manifold;
pub mod optimizer;
pub mod schedule;
pub mod seeds;
pub mod stats;
pub mod statevector;

pub use cnf::{
    compute_spectrum, enumerate_solutions, evaluate_energy, generate_random_instance,
    Assignment, Clause, CnfFormula, DensityRange, EnergySpectrum, InstanceFormat, Literal, Regime,
};
pub use error::{Error, Result};
pub use manifold::{EffectiveState, Objective};
pub use optimizer::{OptimizationResult, OptimizerConfig, RoundSearchResult};
pub use schedule::{AngleSchedule, ScheduleMode};
pub use statevector::{Mixer, OutputDistribution, StateVector};
