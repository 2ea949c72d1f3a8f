use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the per-round angles are parameterized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    /// One `(β, γ)` pair repeated for every round.
    SinglePair,
    /// An independent `(β, γ)` pair per round.
    PerRound,
}

/// Round count plus mixer/phase angles in radians, reduced into `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleSchedule {
    rounds: usize,
    mode: ScheduleMode,
    /// `(β, γ)` pairs: one for `SinglePair`, `rounds` for `PerRound`.
    angles: Vec<(f64, f64)>,
}

/// Reduces an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    // rem_euclid can return TAU itself for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl AngleSchedule {
    pub fn single_pair(rounds: usize, beta: f64, gamma: f64) -> Self {
        AngleSchedule {
            rounds,
            mode: ScheduleMode::SinglePair,
            angles: vec![(wrap_angle(beta), wrap_angle(gamma))],
        }
    }

    pub fn per_round(angles: Vec<(f64, f64)>) -> Self {
        AngleSchedule {
            rounds: angles.len(),
            mode: ScheduleMode::PerRound,
            angles: angles
                .into_iter()
                .map(|(b, g)| (wrap_angle(b), wrap_angle(g)))
                .collect(),
        }
    }

    /// Schedule with zero rounds (the uniform superposition).
    pub fn empty() -> Self {
        AngleSchedule::per_round(Vec::new())
    }

    /// Interleaved `[β1, γ1, β2, γ2, ...]` parameters.
    pub fn from_flat(mode: ScheduleMode, rounds: usize, params: &[f64]) -> Result<Self> {
        match mode {
            ScheduleMode::SinglePair if params.len() == 2 => {
                Ok(AngleSchedule::single_pair(rounds, params[0], params[1]))
            }
            ScheduleMode::PerRound if params.len() == 2 * rounds => Ok(AngleSchedule::per_round(
                params.chunks_exact(2).map(|c| (c[0], c[1])).collect(),
            )),
            _ => Err(Error::InvalidArgument(format!(
                "{} parameters do not fit a {mode:?} schedule of {rounds} rounds",
                params.len()
            ))),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.angles.iter().flat_map(|&(b, g)| [b, g]).collect()
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn mode(&self) -> ScheduleMode {
        self.mode
    }

    pub fn angles(&self) -> &[(f64, f64)] {
        &self.angles
    }

    /// `(β, γ)` applied in round `k` (0-based).
    pub fn round(&self, k: usize) -> (f64, f64) {
        match self.mode {
            ScheduleMode::SinglePair => self.angles[0],
            ScheduleMode::PerRound => self.angles[k],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.rounds).map(|k| self.round(k))
    }

    /// The same angles expanded into an explicit per-round schedule.
    pub fn to_per_round(&self) -> AngleSchedule {
        AngleSchedule::per_round(self.iter().collect())
    }

    /// The single pair, if this is a single-pair schedule.
    pub fn pair(&self) -> Option<(f64, f64)> {
        match self.mode {
            ScheduleMode::SinglePair => Some(self.angles[0]),
            ScheduleMode::PerRound => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles_are_wrapped() {
        let s = AngleSchedule::single_pair(3, -0.5, TAU + 1.0);
        let (b, g) = s.pair().unwrap();
        assert!((b - (TAU - 0.5)).abs() < 1e-15);
        assert!((g - 1.0).abs() < 1e-12);
        assert_eq!(wrap_angle(-1e-300), 0.0);
        assert_eq!(s.iter().count(), 3);
    }

    #[test]
    fn flat_round_trip() {
        let s = AngleSchedule::per_round(vec![(0.1, 0.2), (0.3, 0.4)]);
        let back = AngleSchedule::from_flat(ScheduleMode::PerRound, 2, &s.to_flat()).unwrap();
        assert_eq!(back, s);
        assert!(AngleSchedule::from_flat(ScheduleMode::PerRound, 3, &s.to_flat()).is_err());
        assert_eq!(s.round(1), (0.3, 0.4));
        assert_eq!(
            AngleSchedule::single_pair(2, 0.1, 0.2).to_per_round(),
            AngleSchedule::per_round(vec![(0.1, 0.2), (0.1, 0.2)])
        );
    }
}
