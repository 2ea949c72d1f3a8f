use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ExperimentRecord;
use crate::cnf::EnergySpectrum;
use crate::error::Result;
use crate::manifold::{landscape_grid, Landscape};
use crate::seeds::uniform_angles;
use crate::stats::{iqr, median};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSummary {
    pub label: String,
    pub count: usize,
    pub gamma_iqr: Option<f64>,
    pub beta_iqr: Option<f64>,
}

/// γ spread below and at-or-above the median clause count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianSplit {
    pub median_m: f64,
    pub lower_count: usize,
    pub upper_count: usize,
    pub lower_gamma_iqr: Option<f64>,
    pub upper_gamma_iqr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringExport {
    /// `n,m,objective,beta,gamma` rows, one per single-pair record.
    pub csv: String,
    pub rows: usize,
    /// Bands `m < 60`, `60 ≤ m < 90`, `m ≥ 90`; empty for a single record.
    pub bands: Vec<BandSummary>,
    pub median_split: Option<MedianSplit>,
}

fn gamma_beta(records: &[&ExperimentRecord]) -> (Vec<f64>, Vec<f64>) {
    records
        .iter()
        .filter_map(|r| r.pair())
        .map(|(b, g)| (g, b))
        .unzip()
}

/// Optimized single-pair angles against problem size. Records without a
/// single-pair schedule are skipped.
pub fn export_clustering(records: &[ExperimentRecord]) -> ClusteringExport {
    let usable: Vec<&ExperimentRecord> = records.iter().filter(|r| r.pair().is_some()).collect();
    let mut csv = String::from("n,m,objective,beta,gamma\n");
    for r in &usable {
        let (b, g) = r.pair().expect("filtered");
        let objective = serde_json::to_value(r.objective).expect("serializable");
        writeln!(csv, "{},{},{},{b},{g}", r.n, r.m, objective.as_str().unwrap_or_default()).unwrap();
    }
    if usable.len() < 2 {
        return ClusteringExport {
            csv,
            rows: usable.len(),
            bands: Vec::new(),
            median_split: None,
        };
    }

    let bands = [("m<60", 0, 60), ("60<=m<90", 60, 90), ("m>=90", 90, usize::MAX)]
        .into_iter()
        .map(|(label, lo, hi)| {
            let members: Vec<&ExperimentRecord> =
                usable.iter().copied().filter(|r| r.m >= lo && r.m < hi).collect();
            let (gammas, betas) = gamma_beta(&members);
            BandSummary {
                label: label.to_string(),
                count: members.len(),
                gamma_iqr: iqr(&gammas),
                beta_iqr: iqr(&betas),
            }
        })
        .collect();

    let ms: Vec<f64> = usable.iter().map(|r| r.m as f64).collect();
    let median_m = median(&ms).expect("non-empty");
    let (upper, lower): (Vec<&ExperimentRecord>, Vec<&ExperimentRecord>) =
        usable.iter().copied().partition(|r| r.m as f64 >= median_m);
    let median_split = MedianSplit {
        median_m,
        lower_count: lower.len(),
        upper_count: upper.len(),
        lower_gamma_iqr: iqr(&gamma_beta(&lower).0),
        upper_gamma_iqr: iqr(&gamma_beta(&upper).0),
    };

    ClusteringExport {
        csv,
        rows: usable.len(),
        bands,
        median_split: Some(median_split),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeExport {
    pub landscapes: Vec<Landscape>,
    pub average: Landscape,
}

impl LandscapeExport {
    pub fn average_csv(&self) -> String {
        self.average.to_csv()
    }
}

/// Energy landscapes of every instance at `rounds` on a square grid of the
/// given spacing, plus their element-wise average.
pub fn export_landscape(spectra: &[EnergySpectrum], rounds: usize, spacing: f64) -> Result<LandscapeExport> {
    let axis = uniform_angles(spacing);
    let landscapes: Vec<Landscape> = spectra
        .par_iter()
        .map(|s| landscape_grid(s, rounds, &axis, &axis))
        .collect();
    let average = Landscape::average(&landscapes)?;
    Ok(LandscapeExport { landscapes, average })
}
