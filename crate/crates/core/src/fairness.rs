//! Fair-sampling metrics: shots needed to see every solution, and shots
//! needed for a χ² test to reject uniform sampling of the solutions.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::cnf::Assignment;
use crate::error::{Error, Result};
use crate::seeds::derive_seed;
use crate::statevector::{CdfSampler, OutputDistribution};

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_REJECT_CAP: u64 = 100_000;
pub const DEFAULT_REJECT_TRIALS: usize = 10_000;
pub const DEFAULT_ALL_TRIALS: usize = 100_000;

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + 7.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "gamma_q needs a > 0, x >= 0");
    if x == 0.0 {
        return 1.0;
    }
    let prefix = (a * x.ln() - x - ln_gamma(a)).exp();
    if x < a + 1.0 {
        // series for P(a, x)
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..1000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        (1.0 - sum * prefix).max(0.0)
    } else {
        // modified Lentz continued fraction for Q(a, x)
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        prefix * h
    }
}

/// Upper-tail probability of the χ² distribution with `dof` degrees of freedom.
pub fn chi_square_pvalue(statistic: f64, dof: u32) -> f64 {
    assert!(dof >= 1, "χ² needs at least one degree of freedom");
    gamma_q(dof as f64 / 2.0, statistic.max(0.0) / 2.0)
}

/// Smallest statistic whose p-value is below `alpha`, to bisection precision.
fn chi_square_critical(alpha: f64, dof: u32) -> f64 {
    let mut hi = 1.0;
    while chi_square_pvalue(hi, dof) >= alpha {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi_square_pvalue(mid, dof) >= alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Pearson statistic of `counts` against the uniform distribution.
pub fn chi_square_uniform(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let k = counts.len() as f64;
    let sumsq: f64 = counts.iter().map(|&c| (c as f64) * (c as f64)).sum();
    (k * sumsq / total as f64 - total as f64).max(0.0)
}

fn solution_weights(dist: &OutputDistribution, solutions: &[Assignment]) -> Vec<f64> {
    solutions.iter().map(|&a| dist.probability(a)).collect()
}

/// Solution probabilities renormalized to sum to one.
pub fn conditional_solution_distribution(dist: &OutputDistribution, solutions: &[Assignment]) -> Vec<f64> {
    let w = solution_weights(dist, solutions);
    let total: f64 = w.iter().sum();
    if total == 0.0 {
        return vec![0.0; w.len()];
    }
    w.into_iter().map(|p| p / total).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotsToAll {
    pub mean: f64,
    /// 95% normal-approximation confidence interval of the mean.
    pub ci95: (f64, f64),
    pub trials: usize,
}

/// Monte Carlo estimate of the expected number of shots until every
/// solution has been observed at least once.
pub fn shots_to_all_solutions(
    dist: &OutputDistribution,
    solutions: &[Assignment],
    trials: usize,
    seed: u64,
) -> Result<ShotsToAll> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if solutions.is_empty() {
        return Err(Error::InvalidArgument("no solutions to collect".into()));
    }
    let weights = solution_weights(dist, solutions);
    if let Some(i) = weights.iter().position(|&p| p <= 0.0) {
        return Err(Error::ZeroProbabilitySolution(
            solutions[i].to_bitstring(dist.num_variables()),
        ));
    }
    let mass: f64 = weights.iter().sum::<f64>().min(1.0);
    let which = CdfSampler::new(&weights);
    // draws until the next solution; with all mass on solutions every draw hits
    let gap = (mass < 1.0).then(|| Geometric::new(mass).expect("mass in (0, 1)"));
    let k = solutions.len();

    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
            let mut seen = vec![false; k];
            let mut missing = k;
            let mut shots = 0u64;
            while missing > 0 {
                shots += 1 + gap.as_ref().map_or(0, |g| g.sample(&mut rng));
                let j = which.draw(&mut rng);
                if !seen[j] {
                    seen[j] = true;
                    missing -= 1;
                }
            }
            shots as f64
        })
        .collect();
    let (mean, sd) = crate::stats::mean_sd(&samples);
    let half = 1.96 * sd / (trials as f64).sqrt();
    Ok(ShotsToAll {
        mean,
        ci95: (mean - half, mean + half),
        trials,
    })
}

/// How rejection trials consume samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionProtocol {
    /// Each sample size `N` gets fresh independent samples; the result is
    /// the smallest `N` whose median p-value over trials falls below alpha.
    FreshSamples,
    /// One growing sample per trial, tested after every draw; the result is
    /// the median over trials of the first rejecting draw count.
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShotsToReject {
    Draws(u64),
    /// Not rejected within the cap.
    Cap,
}

impl ShotsToReject {
    pub fn draws(self) -> Option<u64> {
        match self {
            ShotsToReject::Draws(n) => Some(n),
            ShotsToReject::Cap => None,
        }
    }
}

impl fmt::Display for ShotsToReject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShotsToReject::Draws(n) => write!(f, "{n}"),
            ShotsToReject::Cap => f.write_str("cap"),
        }
    }
}

impl Serialize for ShotsToReject {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ShotsToReject::Draws(n) => s.serialize_u64(*n),
            ShotsToReject::Cap => s.serialize_str("cap"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FairnessConfig {
    pub alpha: f64,
    pub cap: u64,
    pub reject_trials: usize,
    pub all_trials: usize,
    pub protocol: RejectionProtocol,
    pub seed: u64,
}

impl Default for FairnessConfig {
    fn default() -> Self {
        FairnessConfig {
            alpha: DEFAULT_ALPHA,
            cap: DEFAULT_REJECT_CAP,
            reject_trials: DEFAULT_REJECT_TRIALS,
            all_trials: DEFAULT_ALL_TRIALS,
            protocol: RejectionProtocol::FreshSamples,
            seed: 0,
        }
    }
}

/// Draws one multinomial sample of size `n` over `probs`.
fn multinomial(rng: &mut ChaCha8Rng, n: u64, probs: &[f64], out: &mut [u64]) {
    let mut left = n;
    let mut mass = 1.0;
    let last = probs.len() - 1;
    for (j, &p) in probs.iter().enumerate() {
        if j == last || left == 0 {
            out[j] = if j == last { left } else { 0 };
            left -= out[j];
            continue;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let c = Binomial::new(left, q).expect("valid binomial").sample(rng);
        out[j] = c;
        left -= c;
        mass -= p;
    }
}

/// Median number of draws from the solution-conditioned distribution needed
/// before a Pearson χ² test (k − 1 degrees of freedom) rejects uniformity.
pub fn shots_to_reject_fairness(
    dist: &OutputDistribution,
    solutions: &[Assignment],
    config: &FairnessConfig,
) -> Result<ShotsToReject> {
    let k = solutions.len();
    if k < 2 {
        return Err(Error::TooFewSolutions(k));
    }
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {} outside (0, 1)", config.alpha)));
    }
    if config.reject_trials == 0 || config.cap == 0 {
        return Err(Error::InvalidArgument("trials and cap must be at least 1".into()));
    }
    let probs = conditional_solution_distribution(dist, solutions);
    if probs.iter().all(|&p| p == 0.0) {
        return Err(Error::InvalidArgument("solutions carry no probability".into()));
    }
    Ok(match config.protocol {
        RejectionProtocol::FreshSamples => fresh_samples(&probs, config),
        RejectionProtocol::Sequential => sequential(&probs, config),
    })
}

/// `true` when the χ² test on `counts` rejects at level `alpha`.
fn rejects(counts: &[u64], alpha: f64, critical: f64) -> bool {
    let stat = chi_square_uniform(counts);
    // the critical value only screens; the p-value decides near the boundary
    stat > critical * (1.0 - 1e-9) && chi_square_pvalue(stat, counts.len() as u32 - 1) < alpha
}

fn fresh_samples(probs: &[f64], config: &FairnessConfig) -> ShotsToReject {
    let dof = probs.len() as u32 - 1;
    let critical = chi_square_critical(config.alpha, dof);
    let rejected_at = |n: u64| -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, n));
        let mut counts = vec![0u64; probs.len()];
        let mut hits = 0usize;
        for _ in 0..config.reject_trials {
            multinomial(&mut rng, n, probs, &mut counts);
            if rejects(&counts, config.alpha, critical) {
                hits += 1;
            }
        }
        // median p-value below alpha ⇔ more than half the trials reject
        2 * hits > config.reject_trials
    };

    let mut lo = 0;
    let mut hi = 1;
    loop {
        if rejected_at(hi) {
            break;
        }
        if hi >= config.cap {
            return ShotsToReject::Cap;
        }
        lo = hi;
        hi = (hi * 2).min(config.cap);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if rejected_at(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    ShotsToReject::Draws(hi)
}

fn sequential(probs: &[f64], config: &FairnessConfig) -> ShotsToReject {
    let k = probs.len();
    let critical = chi_square_critical(config.alpha, k as u32 - 1);
    let sampler = CdfSampler::new(probs);
    let mut firsts: Vec<u64> = (0..config.reject_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, t as u64));
            let mut counts = vec![0u64; k];
            let mut sumsq = 0u64;
            for n in 1..=config.cap {
                let j = sampler.draw(&mut rng);
                sumsq += 2 * counts[j] + 1;
                counts[j] += 1;
                let stat = k as f64 * sumsq as f64 / n as f64 - n as f64;
                if stat > critical * (1.0 - 1e-9) && rejects(&counts, config.alpha, critical) {
                    return n;
                }
            }
            u64::MAX
        })
        .collect();
    firsts.sort_unstable();
    match firsts[(firsts.len() - 1) / 2] {
        u64::MAX => ShotsToReject::Cap,
        n => ShotsToReject::Draws(n),
    }
}

/// Fraction of sequential trials that reject within `cap` draws.
pub fn sequential_rejection_rate(probs: &[f64], config: &FairnessConfig) -> f64 {
    let k = probs.len();
    let critical = chi_square_critical(config.alpha, k as u32 - 1);
    let sampler = CdfSampler::new(probs);
    let hits = (0..config.reject_trials)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, t as u64));
            let mut counts = vec![0u64; k];
            (1..=config.cap).any(|_| {
                counts[sampler.draw(&mut rng)] += 1;
                rejects(&counts, config.alpha, critical)
            })
        })
        .count();
    hits as f64 / config.reject_trials as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ShotsToAllOutcome {
    Estimated(ShotsToAll),
    /// Some solutions never appear in the counts, so the metric is infinite.
    NotObserved { missing: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FairnessReport {
    pub solutions: usize,
    /// Total probability on solutions.
    pub solution_probability: f64,
    pub shots_to_all: ShotsToAllOutcome,
    /// `None` with fewer than two solutions.
    pub shots_to_reject: Option<ShotsToReject>,
    pub alpha: f64,
    pub cap: u64,
    pub reject_trials: usize,
    pub all_trials: usize,
    pub protocol: RejectionProtocol,
}

/// Both metrics for one distribution (exact or empirical).
pub fn fairness_report(
    dist: &OutputDistribution,
    solutions: &[Assignment],
    config: &FairnessConfig,
) -> Result<FairnessReport> {
    let weights = solution_weights(dist, solutions);
    let missing = weights.iter().filter(|&&p| p <= 0.0).count();
    let shots_to_all = if solutions.is_empty() || missing > 0 {
        ShotsToAllOutcome::NotObserved { missing }
    } else {
        ShotsToAllOutcome::Estimated(shots_to_all_solutions(
            dist,
            solutions,
            config.all_trials,
            derive_seed(config.seed, 1),
        )?)
    };
    let shots_to_reject = if solutions.len() >= 2 && missing < solutions.len() {
        let cfg = FairnessConfig {
            seed: derive_seed(config.seed, 2),
            ..*config
        };
        Some(shots_to_reject_fairness(dist, solutions, &cfg)?)
    } else {
        None
    };
    Ok(FairnessReport {
        solutions: solutions.len(),
        solution_probability: weights.iter().sum(),
        shots_to_all,
        shots_to_reject,
        alpha: config.alpha,
        cap: config.cap,
        reject_trials: config.reject_trials,
        all_trials: config.all_trials,
        protocol: config.protocol,
    })
}
