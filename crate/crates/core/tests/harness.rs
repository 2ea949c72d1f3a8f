use std::f64::consts::PI;
use std::fs;

use gqaoa_core::harness::{
    export_clustering, export_landscape, run_speedup_study, write_study_outputs, ExperimentRecord, StudyConfig,
};
use gqaoa_core::{compute_spectrum, generate_random_instance, DensityRange, OptimizerConfig, Regime};

fn small_study() -> StudyConfig {
    StudyConfig {
        n_values: vec![6, 7],
        instances_per_n: 4,
        targets: vec![0.25, 0.5],
        master_seed: 3,
        optimizer: OptimizerConfig {
            grid_spacing: PI / 36.0,
            top_k: 4,
            ..OptimizerConfig::default()
        },
        ..StudyConfig::default()
    }
}

#[test]
fn study_outputs_land_on_disk() {
    let cfg = small_study();
    let outcome = run_speedup_study(&cfg).unwrap();
    assert_eq!(outcome.records.len() + outcome.failures.len(), 16);
    let dir = tempfile::tempdir().unwrap();
    write_study_outputs(dir.path(), &cfg, &outcome).unwrap();

    let lines = fs::read_to_string(dir.path().join("records.jsonl")).unwrap();
    let parsed: Vec<ExperimentRecord> = lines.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(parsed, outcome.records);
    for r in &parsed {
        assert!(r.success_probability >= r.target);
        assert!((r.d - r.p).abs() < 1e-15, "satisfiable instances have D = P");
        assert!(r.grover_iterations >= 1);
    }
    let fit: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit.as_array().unwrap().len(), 2);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 3);
    assert!(fs::read_to_string(dir.path().join("density.csv"))
        .unwrap()
        .starts_with("target,density_lo"));
}

#[test]
fn p_min_is_monotone_in_the_target_when_searched_together() {
    let outcome = run_speedup_study(&small_study()).unwrap();
    for inst in 0..8 {
        let ps: Vec<usize> = outcome.records.iter().filter(|r| r.instance == inst).map(|r| r.p_min).collect();
        if ps.len() == 2 {
            assert!(ps[0] <= ps[1], "instance {inst}: {ps:?}");
        }
    }
}

#[test]
fn clustering_export_from_study() {
    let outcome = run_speedup_study(&StudyConfig {
        targets: vec![0.5],
        ..small_study()
    })
    .unwrap();
    let e = export_clustering(&outcome.records);
    assert_eq!(e.rows, outcome.records.len());
    assert_eq!(e.csv.lines().count(), e.rows + 1);
    let split = e.median_split.unwrap();
    assert_eq!(split.lower_count + split.upper_count, e.rows);
}

#[test]
fn landscape_export_boundaries() {
    let spectra: Vec<_> = (0..3)
        .map(|s| {
            let f = generate_random_instance(8, DensityRange::new(2.0, 4.5).unwrap(), Regime::Satisfiable, s)
                .unwrap()
                .formula;
            compute_spectrum(&f).unwrap()
        })
        .collect();
    let e = export_landscape(&spectra, 4, PI / 18.0).unwrap();
    for (l, s) in e.landscapes.iter().zip(&spectra) {
        let m8 = s.num_clauses() as f64 / 8.0;
        assert!(l.row(0).iter().all(|v| (v - m8).abs() < 1e-12));
        assert!(l.column(0).iter().all(|v| (v - m8).abs() < 1e-12));
    }
    let csv = e.average_csv();
    assert_eq!(csv.lines().count(), 37);
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 37);
}
