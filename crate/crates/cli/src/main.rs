use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gqaoa_core::compiler::{cost_report, emit_circuit_text, lower_round, Algorithm, Budget};
use gqaoa_core::fairness::FairnessConfig;
use gqaoa_core::harness::{
    evaluate_counts, export_clustering, export_landscape, load_config, reproduce_table1, run_speedup_study,
    write_study_outputs, ExperimentRecord, StudyConfig,
};
use gqaoa_core::instances::{five_variable_example, four_variable_example};
use gqaoa_core::optimizer::{optimize_with, ManifoldModel, RoundSearcher, StatevectorModel};
use gqaoa_core::seeds::derive_seed;
use gqaoa_core::{
    compute_spectrum, generate_random_instance, CnfFormula, DensityRange, Error, InstanceFormat, Mixer, Objective,
    OptimizerConfig, Regime, ScheduleMode,
};

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_CHECK: u8 = 3;

/// Grover-mixer QAOA laboratory for random 3-SAT and Max-SAT.
#[derive(Parser)]
#[command(name = "gqaoa", version)]
struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for output files; results go to stdout without it.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// TOML or JSON config for the subcommand (study, optimizer or fairness settings).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw random 3-SAT instances.
    Generate(GenerateArgs),
    /// Energy spectrum of an instance.
    Spectrum { instance: PathBuf },
    /// Optimize QAOA angles for a fixed round count.
    Optimize(OptimizeArgs),
    /// Minimal rounds reaching a success target.
    Rounds(RoundsArgs),
    /// Speedup study over random instances (settings from --config).
    Speedup(SpeedupArgs),
    /// Angle-clustering export from study records.
    Clustering { records: PathBuf },
    /// Energy landscapes and their average.
    Landscape(LandscapeArgs),
    /// Noiseless X- vs G-QAOA solution percentages and fairness.
    Table1(Table1Args),
    /// Fairness metrics of measured counts.
    Fairness { counts: PathBuf, instance: PathBuf },
    /// Entangling-gate cost report.
    Compile(CompileArgs),
    /// Gate list of one QAOA round as circuit text.
    Emit(EmitArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    Any,
    Satisfiable,
    Unsatisfiable,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Any => Regime::Any,
            RegimeArg::Satisfiable => Regime::Satisfiable,
            RegimeArg::Unsatisfiable => Regime::Unsatisfiable,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Dimacs,
    Json,
}

impl From<FormatArg> for InstanceFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Dimacs => InstanceFormat::Dimacs,
            FormatArg::Json => InstanceFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MixerArg {
    Grover,
    X,
}

impl From<MixerArg> for Mixer {
    fn from(m: MixerArg) -> Self {
        match m {
            MixerArg::Grover => Mixer::Grover,
            MixerArg::X => Mixer::TransverseX,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    SinglePair,
    PerRound,
}

impl From<ModeArg> for ScheduleMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::SinglePair => ScheduleMode::SinglePair,
            ModeArg::PerRound => ScheduleMode::PerRound,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Solutions,
    MinEnergy,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Solutions => Objective::Solutions,
            ObjectiveArg::MinEnergy => Objective::MinEnergy,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    XQaoa,
    GQaoa,
    GroverBaseline,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::XQaoa => Algorithm::XQaoa,
            AlgorithmArg::GQaoa => Algorithm::GQaoa,
            AlgorithmArg::GroverBaseline => Algorithm::GroverBaseline,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: u32,
    #[arg(long, default_value_t = 2.0)]
    density_min: f64,
    #[arg(long, default_value_t = 4.5)]
    density_max: f64,
    #[arg(long, value_enum, default_value = "satisfiable")]
    regime: RegimeArg,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, value_enum, default_value = "dimacs")]
    format: FormatArg,
}

#[derive(Args)]
struct OptimizeArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = 1)]
    rounds: usize,
    #[arg(long, value_enum, default_value = "single-pair")]
    mode: ModeArg,
    /// Simulate the full state vector with this mixer instead of energy manifolds.
    #[arg(long, value_enum)]
    mixer: Option<MixerArg>,
}

#[derive(Args)]
struct RoundsArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    target: f64,
    #[arg(long, value_enum, default_value = "solutions")]
    objective: ObjectiveArg,
    #[arg(long, value_enum, default_value = "single-pair")]
    mode: ModeArg,
}

#[derive(Args)]
struct SpeedupArgs {
    /// Exit with status 3 unless every fitted slope lies in `LO,HI`.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    expect_slope: Option<Vec<f64>>,
}

#[derive(Args)]
struct LandscapeArgs {
    /// Instance files; all must share one grid.
    #[arg(required = true)]
    instances: Vec<PathBuf>,
    #[arg(long, default_value_t = 1)]
    rounds: usize,
    /// Grid spacing in degrees.
    #[arg(long, default_value_t = 2.0)]
    spacing_deg: f64,
}

#[derive(Args)]
struct Table1Args {
    /// Instance file; the built-in 4- and 5-variable examples without it.
    instance: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    rounds: Vec<usize>,
    /// Exit with status 3 unless the p = max-round G-QAOA row reaches this percentage.
    #[arg(long)]
    expect_g_percent: Option<f64>,
}

#[derive(Args)]
struct CompileArgs {
    #[arg(long, value_enum)]
    algorithm: AlgorithmArg,
    /// Instance supplying n and m.
    #[arg(long, conflicts_with_all = ["n", "m"])]
    instance: Option<PathBuf>,
    #[arg(long, requires = "m")]
    n: Option<u64>,
    #[arg(long, requires = "n")]
    m: Option<u64>,
    /// QAOA rounds.
    #[arg(long)]
    rounds: Option<u64>,
    /// Satisfying probability for the Grover baseline; computed from the instance if omitted.
    #[arg(long)]
    probability: Option<f64>,
}

#[derive(Args)]
struct EmitArgs {
    instance: PathBuf,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    gamma: f64,
    #[arg(long, value_enum, default_value = "grover")]
    mixer: MixerArg,
}

enum Failure {
    Runtime(String),
    Config(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Config(e.to_string()),
            e => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CliResult = Result<(), Failure>;

fn read_instance(path: &Path) -> Result<CnfFormula, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    CnfFormula::parse(&text, InstanceFormat::from_path(path))
        .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn config_or_default<T: serde::de::DeserializeOwned + Default>(cli: &Cli) -> Result<T, Failure> {
    match &cli.config {
        Some(p) => Ok(load_config(p)?),
        None => Ok(T::default()),
    }
}

fn optimizer_config(cli: &Cli) -> Result<OptimizerConfig, Failure> {
    let mut cfg: OptimizerConfig = config_or_default(cli)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fairness_config(cli: &Cli) -> Result<FairnessConfig, Failure> {
    let mut cfg: FairnessConfig = config_or_default(cli)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// Writes `name` under `--out-dir`, or prints it when no directory is set.
fn emit(cli: &Cli, name: &str, contents: &str) -> CliResult {
    match &cli.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(name), contents)?;
            eprintln!("wrote {}", dir.join(name).display());
        }
        None => print!("{contents}"),
    }
    Ok(())
}

fn json_line<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn generate(cli: &Cli, a: &GenerateArgs) -> CliResult {
    let range = DensityRange::new(a.density_min, a.density_max).map_err(|e| Failure::Config(e.to_string()))?;
    let format: InstanceFormat = a.format.into();
    let ext = match format {
        InstanceFormat::Dimacs => "cnf",
        InstanceFormat::Json => "json",
    };
    let master = cli.seed.unwrap_or(0);
    for i in 0..a.count {
        let inst = generate_random_instance(a.n, range, a.regime.into(), derive_seed(master, i as u64))?;
        emit(cli, &format!("instance_{i:04}.{ext}"), &inst.formula.to_text(format))?;
        if cli.out_dir.is_none() && format == InstanceFormat::Json {
            println!();
        }
    }
    Ok(())
}

fn spectrum(cli: &Cli, path: &Path) -> CliResult {
    let f = read_instance(path)?;
    let s = compute_spectrum(&f)?;
    let out = serde_json::json!({
        "n": f.num_variables(),
        "m": f.num_clauses(),
        "counts": s.counts(),
        "solutions": s.solution_count(),
        "p": s.satisfying_probability(),
        "min_energy": s.min_energy(),
        "d": s.min_energy_probability(),
    });
    emit(cli, "spectrum.json", &json_line(&out)?)
}

fn optimize(cli: &Cli, a: &OptimizeArgs) -> CliResult {
    let f = read_instance(&a.instance)?;
    let cfg = optimizer_config(cli)?;
    let result = match a.mixer {
        Some(m) => optimize_with(&StatevectorModel::new(&f, m.into())?, a.mode.into(), a.rounds, &cfg)?,
        None => optimize_with(&ManifoldModel::new(&compute_spectrum(&f)?), a.mode.into(), a.rounds, &cfg)?,
    };
    emit(cli, "optimize.json", &json_line(&result)?)
}

fn rounds(cli: &Cli, a: &RoundsArgs) -> CliResult {
    let f = read_instance(&a.instance)?;
    let cfg = optimizer_config(cli)?;
    let mut searcher = RoundSearcher::new(ManifoldModel::new(&compute_spectrum(&f)?), a.mode.into(), cfg);
    let found = searcher.find(a.target, a.objective.into())?;
    emit(cli, "rounds.json", &json_line(&found)?)
}

fn speedup(cli: &Cli, a: &SpeedupArgs) -> CliResult {
    let mut cfg: StudyConfig = config_or_default(cli)?;
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    cfg.validate()?;
    let outcome = run_speedup_study(&cfg)?;
    match &cli.out_dir {
        Some(dir) => write_study_outputs(dir, &cfg, &outcome)?,
        None => print!("{}", outcome.records_jsonl()?),
    }
    for fit in &outcome.fits {
        let slope = fit.fit.as_ref().map_or("n/a".to_string(), |f| {
            format!("{:.3} (95% CI {:.3}..{:.3}, R² {:.3})", f.slope, f.slope_ci95.0, f.slope_ci95.1, f.r_squared)
        });
        eprintln!(
            "target {}: slope {slope}; median p_min·√P {}",
            fit.target,
            fit.median_scaled_rounds.map_or("n/a".to_string(), |c| format!("{c:.3}"))
        );
    }
    eprintln!("{} records, {} failures", outcome.records.len(), outcome.failures.len());
    if let Some(band) = &a.expect_slope {
        let &[lo, hi] = band.as_slice() else {
            return Err(Failure::Config("--expect-slope takes LO,HI".into()));
        };
        for fit in &outcome.fits {
            match &fit.fit {
                Some(f) if f.slope >= lo && f.slope <= hi => {}
                Some(f) => return Err(Failure::Check(format!("target {}: slope {:.3} outside [{lo}, {hi}]", fit.target, f.slope))),
                None => return Err(Failure::Check(format!("target {}: no fit", fit.target))),
            }
        }
    }
    Ok(())
}

fn clustering(cli: &Cli, path: &Path) -> CliResult {
    let text = fs::read_to_string(path)?;
    let records = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str::<ExperimentRecord>)
        .collect::<Result<Vec<_>, _>>()?;
    let e = export_clustering(&records);
    emit(cli, "clustering.csv", &e.csv)?;
    let summary = serde_json::json!({ "rows": e.rows, "bands": e.bands, "median_split": e.median_split });
    match &cli.out_dir {
        Some(_) => emit(cli, "clustering_summary.json", &json_line(&summary)?),
        None => {
            eprint!("{}", json_line(&summary)?);
            Ok(())
        }
    }
}

fn landscape(cli: &Cli, a: &LandscapeArgs) -> CliResult {
    if !(a.spacing_deg > 0.0 && a.spacing_deg <= 180.0) {
        return Err(Failure::Config(format!("spacing {} outside (0, 180] degrees", a.spacing_deg)));
    }
    let spectra = a
        .instances
        .iter()
        .map(|p| Ok(compute_spectrum(&read_instance(p)?)?))
        .collect::<Result<Vec<_>, Failure>>()?;
    let e = export_landscape(&spectra, a.rounds, a.spacing_deg * PI / 180.0)?;
    if cli.out_dir.is_some() {
        for (i, l) in e.landscapes.iter().enumerate() {
            emit(cli, &format!("landscape_{i:04}.csv"), &l.to_csv())?;
        }
    }
    emit(cli, "landscape_average.csv", &e.average_csv())?;
    let (b, g, v) = e.average.argmin();
    eprintln!("average minimum {v:.6} at beta {b:.6}, gamma {g:.6}");
    Ok(())
}

fn table1(cli: &Cli, a: &Table1Args) -> CliResult {
    let instances = match &a.instance {
        Some(p) => vec![read_instance(p)?],
        None => vec![four_variable_example(), five_variable_example()],
    };
    if a.rounds.is_empty() || a.rounds.contains(&0) {
        return Err(Failure::Config("rounds must be positive".into()));
    }
    // --config carries the fairness settings here; angles use the default optimizer
    let opt = OptimizerConfig {
        seed: cli.seed.unwrap_or(0),
        ..OptimizerConfig::default()
    };
    let fair = fairness_config(cli)?;
    let mut all = Vec::new();
    let mut table = String::from("n,mixer,p,solution_percent,shots_to_all,shots_to_reject\n");
    let mut check_failed = None;
    let max_p = *a.rounds.iter().max().expect("non-empty");
    for f in &instances {
        let rows = reproduce_table1(f, &a.rounds, &[Mixer::TransverseX, Mixer::Grover], &opt, &fair)?;
        for r in &rows {
            let all_shots = match r.fairness.shots_to_all {
                gqaoa_core::fairness::ShotsToAllOutcome::Estimated(s) => format!("{:.3}", s.mean),
                gqaoa_core::fairness::ShotsToAllOutcome::NotObserved { .. } => "inf".into(),
            };
            let reject = r.fairness.shots_to_reject.map_or("n/a".into(), |s| s.to_string());
            table += &format!(
                "{},{},{},{:.2},{all_shots},{reject}\n",
                f.num_variables(),
                r.mixer.label(),
                r.rounds,
                r.solution_percent
            );
            if let Some(want) = a.expect_g_percent {
                if r.mixer == Mixer::Grover && r.rounds == max_p && r.solution_percent < want {
                    check_failed = Some(format!(
                        "n={}: G-QAOA p={max_p} reached {:.2}% < {want}%",
                        f.num_variables(),
                        r.solution_percent
                    ));
                }
            }
        }
        all.push(serde_json::json!({ "n": f.num_variables(), "m": f.num_clauses(), "rows": rows }));
    }
    emit(cli, "table1.csv", &table)?;
    if cli.out_dir.is_some() {
        emit(cli, "table1.json", &json_line(&all)?)?;
    }
    match check_failed {
        Some(msg) => Err(Failure::Check(msg)),
        None => Ok(()),
    }
}

fn fairness(cli: &Cli, counts: &Path, instance: &Path) -> CliResult {
    let f = read_instance(instance)?;
    let text = fs::read_to_string(counts)?;
    let e = evaluate_counts(&text, &f, &fairness_config(cli)?)?;
    emit(cli, "fairness.json", &json_line(&e)?)
}

fn compile(cli: &Cli, a: &CompileArgs) -> CliResult {
    let algorithm: Algorithm = a.algorithm.into();
    let (n, m, p) = match (&a.instance, a.n, a.m) {
        (Some(path), _, _) => {
            let f = read_instance(path)?;
            let p = match (algorithm, a.probability) {
                (Algorithm::GroverBaseline, None) => Some(compute_spectrum(&f)?.satisfying_probability()),
                (_, p) => p,
            };
            (f.num_variables() as u64, f.num_clauses() as u64, p)
        }
        (None, Some(n), Some(m)) => (n, m, a.probability),
        _ => return Err(Failure::Config("give --instance or both --n and --m".into())),
    };
    let budget = match algorithm {
        Algorithm::GroverBaseline => Budget::SatisfyingProbability(
            p.ok_or_else(|| Failure::Config("the Grover baseline needs --probability".into()))?,
        ),
        _ => Budget::Rounds(a.rounds.ok_or_else(|| Failure::Config("QAOA cost needs --rounds".into()))?),
    };
    let report = cost_report(algorithm, n, m, budget)?;
    emit(cli, "cost.json", &json_line(&report)?)
}

fn emit_round(cli: &Cli, a: &EmitArgs) -> CliResult {
    let f = read_instance(&a.instance)?;
    let algorithm = match a.mixer {
        MixerArg::Grover => Algorithm::GQaoa,
        MixerArg::X => Algorithm::XQaoa,
    };
    let gates = lower_round(&f, a.beta, a.gamma, algorithm)?;
    emit(cli, "circuit.txt", &emit_circuit_text(&gates))
}

fn run(cli: &Cli) -> CliResult {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Config(e.to_string()))?;
    }
    match &cli.command {
        Command::Generate(a) => generate(cli, a),
        Command::Spectrum { instance } => spectrum(cli, instance),
        Command::Optimize(a) => optimize(cli, a),
        Command::Rounds(a) => rounds(cli, a),
        Command::Speedup(a) => speedup(cli, a),
        Command::Clustering { records } => clustering(cli, records),
        Command::Landscape(a) => landscape(cli, a),
        Command::Table1(a) => table1(cli, a),
        Command::Fairness { counts, instance } => fairness(cli, counts, instance),
        Command::Compile(a) => compile(cli, a),
        Command::Emit(a) => emit_round(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(EXIT_CHECK)
        }
    }
}
