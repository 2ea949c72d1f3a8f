//! Fixed instances shared by the benchmarks.

use gqaoa_core::cnf::{compute_spectrum, generate_random_instance, DensityRange, Regime};
use gqaoa_core::{CnfFormula, EnergySpectrum};

/// Satisfiable instance near the critical density, reproducible by `seed`.
pub fn instance(n: u32, seed: u64) -> CnfFormula {
    let range = DensityRange::fixed(4.0).expect("valid density");
    generate_random_instance(n, range, Regime::Satisfiable, seed)
        .expect("satisfiable instance")
        .formula
}

pub fn spectrum(n: u32, seed: u64) -> EnergySpectrum {
    compute_spectrum(&instance(n, seed)).expect("below the enumeration cap")
}
