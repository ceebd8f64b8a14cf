//! Chunked Monte Carlo sampling of shuffle statistics.
//!
//! # Reproducibility contract
//!
//! Sample `j` of a run with `(seed, chunk_size)` belongs to chunk
//! `c = j / chunk_size`. Chunk `c` draws from [`substream`]`(seed, c)`:
//! ChaCha8 seeded with `seed_from_u64(seed)` and switched to stream `c`.
//! Within a chunk, words are drawn back to back, one 64-bit output per
//! letter (see [`ShuffleSpec::letter_from_draw`]). Accumulators are exact
//! integers merged in chunk order, so a report depends only on the config
//! and never on how many workers ran it.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::normal::normal_cdf;
use crate::ratio::{self, to_f64};
use crate::shuffle::{fill_word, RandomWord, ShuffleSpec};
use crate::stats::{Evaluator, Statistic};
use crate::theory::{self, Standardizer};

pub const SCHEMA_VERSION: u32 = 1;

pub const DEFAULT_CHUNK_SIZE: u64 = 10_000;

/// Independent random stream for chunk `chunk` of a run seeded with `seed`.
pub fn substream(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Words `0, 1, 2, ...` of a run, in sample order.
pub fn sample_stream(spec: &ShuffleSpec, seed: u64, chunk_size: u64) -> impl Iterator<Item = RandomWord> + '_ {
    let chunk_size = chunk_size.max(1);
    (0u64..).flat_map(move |chunk| {
        let mut rng = substream(seed, chunk);
        (0..chunk_size).map(move |_| {
            let mut letters = Vec::with_capacity(spec.n());
            fill_word(spec, &mut rng, &mut letters);
            RandomWord::new(letters, spec.m()).expect("sampled letters are in range")
        })
    })
}

mod wide {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &u128, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&value.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<u128, D::Error> {
        String::deserialize(de)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Exact running sums of an integer statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MomentSummary {
    pub count: u64,
    #[serde(with = "wide")]
    pub sum: u128,
    #[serde(with = "wide")]
    pub sum_sq: u128,
    pub min: Option<u64>,
    pub max: Option<u64>,
}

impl MomentSummary {
    pub fn empty() -> Self {
        MomentSummary::default()
    }

    #[inline]
    pub fn push(&mut self, value: u64) {
        self.count += 1;
        self.sum += value as u128;
        self.sum_sq += (value as u128) * (value as u128);
        self.min = Some(self.min.map_or(value, |m| m.min(value)));
        self.max = Some(self.max.map_or(value, |m| m.max(value)));
    }

    pub fn merge(&self, other: &MomentSummary) -> MomentSummary {
        let pick = |a: Option<u64>, b: Option<u64>, f: fn(u64, u64) -> u64| match (a, b) {
            (Some(x), Some(y)) => Some(f(x, y)),
            (x, None) => x,
            (None, y) => y,
        };
        MomentSummary {
            count: self.count + other.count,
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
            min: pick(self.min, other.min, u64::min),
            max: pick(self.max, other.max, u64::max),
        }
    }

    pub fn mean_exact(&self) -> Option<BigRational> {
        (self.count > 0).then(|| BigRational::new(self.sum.into(), self.count.into()))
    }

    /// Population variance `(sum_sq - sum^2/count)/count`, exactly.
    pub fn variance_exact(&self) -> Option<BigRational> {
        if self.count == 0 {
            return None;
        }
        let count = BigUint::from(self.count);
        let sum = BigUint::from(self.sum);
        let numer = &count * BigUint::from(self.sum_sq) - &sum * &sum;
        Some(BigRational::new(numer.into(), (&count * &count).into()))
    }

    pub fn mean(&self) -> f64 {
        self.mean_exact().map_or(f64::NAN, |v| to_f64(&v))
    }

    pub fn variance(&self) -> f64 {
        self.variance_exact().map_or(f64::NAN, |v| to_f64(&v))
    }
}

/// `sup_z |F_emp(z) - Phi(z)|` for the empirical distribution in
/// `histogram`, mapped through `standardizer`. Both one-sided limits are
/// checked at every support point, which covers the supremum because the
/// empirical CDF is flat between support points.
pub fn empirical_kd(histogram: &BTreeMap<u64, u64>, standardizer: &Standardizer) -> f64 {
    let total: u64 = histogram.values().sum();
    if total == 0 {
        return f64::NAN;
    }
    let total = total as f64;
    let mut below = 0u64;
    let mut sup = 0.0f64;
    for (&value, &count) in histogram {
        let phi = normal_cdf(standardizer.apply(value as f64));
        let left = below as f64 / total;
        below += count;
        let right = below as f64 / total;
        sup = sup.max((left - phi).abs()).max((right - phi).abs());
    }
    sup
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub spec: ShuffleSpec,
    pub statistic: Statistic,
    pub sample_count: u64,
    pub seed: u64,
    pub chunk_size: u64,
    /// Worker hint: 0 = rayon default, 1 = sequential. Never affects results.
    pub threads: usize,
}

impl ExperimentConfig {
    pub fn new(spec: ShuffleSpec, statistic: Statistic, sample_count: u64, seed: u64) -> Self {
        ExperimentConfig {
            spec,
            statistic,
            sample_count,
            seed,
            chunk_size: DEFAULT_CHUNK_SIZE,
            threads: 0,
        }
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    pub fn with_chunk_size(mut self, chunk_size: u64) -> Self {
        self.chunk_size = chunk_size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(Error::InvalidConfig("sample_count must be at least 1".into()));
        }
        if self.chunk_size == 0 {
            return Err(Error::InvalidConfig("chunk_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// The result-determining part of the config, echoed into the report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub spec: ShuffleSpec,
    pub statistic: Statistic,
    pub sample_count: u64,
    pub seed: u64,
    pub chunk_size: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StandardizationKind {
    /// Centering and scale from closed-form theory.
    Theory,
    /// No closed form applies (biased inversions); sample mean and standard
    /// deviation are used.
    Sample,
    /// Zero-variance statistic; unit scale around the observed value.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub kind: StandardizationKind,
    pub center: f64,
    pub scale: f64,
}

/// Theory values at this `(n, m)` reported next to the sample.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundValues {
    /// `C / sqrt(n)` with the uniform constant (inversion-type statistics).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniform_kd_bound: Option<f64>,
    /// The two-term U-statistic bound at this `(n, m)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_statistic_kd_bound: Option<f64>,
    /// `(4m - 1)/sqrt(n)` (descents).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slutsky_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theory_mean: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theory_variance: Option<String>,
}

/// Standardized descent variance against both candidate limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentLimitResiduals {
    pub coupling_limit: String,
    pub claimed_limit: String,
    /// `standardized_variance - 1`.
    pub residual_vs_coupling: f64,
    /// `standardized_variance - (m^2+2)/(3m^2)`.
    pub residual_vs_claimed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ConfigEcho,
    pub summary: MomentSummary,
    /// Statistic value to sample count.
    pub histogram: BTreeMap<u64, u64>,
    pub standardization: Standardization,
    pub empirical_kd: f64,
    pub standardized_mean: f64,
    pub standardized_variance: f64,
    /// Standard error of the sample mean, from the closed-form variance when
    /// one is validated for this statistic, else from the sample.
    pub mean_standard_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling_max_abs_dev: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling_bound: Option<u64>,
    pub bound_values: BoundValues,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub descent_limit_residuals: Option<DescentLimitResiduals>,
}

impl ExperimentReport {
    /// Histogram as `value,count` CSV rows sorted by value.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("value,count\n");
        for (value, count) in &self.histogram {
            out.push_str(&format!("{value},{count}\n"));
        }
        out
    }
}

#[derive(Debug, Default)]
struct ChunkTally {
    summary: MomentSummary,
    histogram: BTreeMap<u64, u64>,
    max_deviation: Option<u64>,
}

impl ChunkTally {
    fn absorb(&mut self, other: ChunkTally) {
        self.summary = self.summary.merge(&other.summary);
        for (value, count) in other.histogram {
            *self.histogram.entry(value).or_default() += count;
        }
        self.max_deviation = match (self.max_deviation, other.max_deviation) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, None) => a,
            (None, b) => b,
        };
    }
}

fn run_chunk(config: &ExperimentConfig, chunk: u64) -> ChunkTally {
    let spec = &config.spec;
    let start = chunk * config.chunk_size;
    let end = (start + config.chunk_size).min(config.sample_count);
    let mut rng = substream(config.seed, chunk);
    let mut evaluator = Evaluator::new();
    let mut letters = Vec::with_capacity(spec.n());
    let mut tally = ChunkTally::default();
    for _ in start..end {
        fill_word(spec, &mut rng, &mut letters);
        let eval = evaluator.evaluate(config.statistic, &letters, spec.m());
        tally.summary.push(eval.value);
        *tally.histogram.entry(eval.value).or_default() += 1;
        if let Some(dev) = eval.coupling_deviation {
            tally.max_deviation = Some(tally.max_deviation.map_or(dev, |m| m.max(dev)));
        }
    }
    tally
}

fn theory_moments(spec: &ShuffleSpec, statistic: Statistic) -> Option<(BigRational, BigRational)> {
    if !spec.is_uniform() {
        return None;
    }
    let n = spec.n() as u64;
    let m = spec.m();
    match statistic {
        Statistic::Inversions | Statistic::PairSum => {
            let r = theory::inversion_moments(n, m);
            Some((r.mean, r.var_total_from_components))
        }
        Statistic::PairOrder => {
            let mean = BigRational::new((n * n.saturating_sub(1) * (2 * m as u64 - 1)).into(), (8 * m as u64).into());
            Some((mean, theory::var_pair_order(n, m)))
        }
        Statistic::EqualEven => {
            let mean = BigRational::new((n * n.saturating_sub(1)).into(), (8 * m as u64).into());
            Some((mean, theory::var_equal_even(n, m)))
        }
        Statistic::EvenCards => Some((ratio::ratio(n as i64, 2), ratio::ratio(n as i64, 4))),
        Statistic::Descents => None,
    }
}

fn choose_standardizer(config: &ExperimentConfig, summary: &MomentSummary) -> Standardization {
    let spec = &config.spec;
    let n = spec.n() as u64;
    let theory = match config.statistic {
        Statistic::Inversions | Statistic::PairSum if spec.is_uniform() => {
            theory::inversion_standardizer(n, spec.m()).ok()
        }
        Statistic::Descents | Statistic::EvenCards => {
            if spec.is_uniform() {
                theory::descent_standardizer(n).ok()
            } else {
                let q = to_f64(&theory::even_pile_probability(spec));
                let nf = n as f64;
                Standardizer::new(nf * q, (nf * q * (1.0 - q)).sqrt()).ok()
            }
        }
        Statistic::PairOrder | Statistic::EqualEven => theory_moments(spec, config.statistic)
            .and_then(|(mean, var)| Standardizer::new(to_f64(&mean), to_f64(&var).sqrt()).ok()),
        _ => None,
    };
    if let Some(s) = theory {
        return Standardization {
            kind: StandardizationKind::Theory,
            center: s.center,
            scale: s.scale,
        };
    }
    let sd = summary.variance().sqrt();
    if sd > 0.0 {
        Standardization {
            kind: StandardizationKind::Sample,
            center: summary.mean(),
            scale: sd,
        }
    } else {
        Standardization {
            kind: StandardizationKind::Degenerate,
            center: summary.mean(),
            scale: 1.0,
        }
    }
}

/// Draws `sample_count` shuffles and summarizes the selected statistic.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let chunks = config.sample_count.div_ceil(config.chunk_size);
    let chunks = usize::try_from(chunks)
        .map_err(|_| Error::InvalidConfig("too many chunks for this platform".into()))?;
    let partials = exec::map_chunks(chunks, config.threads, |c| run_chunk(config, c as u64));
    let mut tally = ChunkTally::default();
    for part in partials {
        tally.absorb(part);
    }
    Ok(build_report(config, tally))
}

/// [`run_experiment`] plus wall-clock time. Timing is kept out of the report
/// so that reports stay byte-identical across runs.
pub fn run_experiment_timed(config: &ExperimentConfig) -> Result<(ExperimentReport, Duration)> {
    let started = Instant::now();
    let report = run_experiment(config)?;
    Ok((report, started.elapsed()))
}

fn build_report(config: &ExperimentConfig, tally: ChunkTally) -> ExperimentReport {
    let spec = &config.spec;
    let n = spec.n() as u64;
    let m = spec.m();
    let summary = tally.summary;
    let standardization = choose_standardizer(config, &summary);
    let standardizer = Standardizer {
        center: standardization.center,
        scale: standardization.scale,
    };
    let empirical_kd = empirical_kd(&tally.histogram, &standardizer);
    let standardized_mean = standardizer.apply(summary.mean());
    let standardized_variance = summary.variance() / (standardizer.scale * standardizer.scale);

    let theory = theory_moments(spec, config.statistic);
    let variance_for_se = theory
        .as_ref()
        .map_or_else(|| summary.variance(), |(_, var)| to_f64(var));
    let mean_standard_error = (variance_for_se / summary.count as f64).sqrt();

    let mut bound_values = BoundValues::default();
    if let Some((mean, var)) = &theory {
        bound_values.theory_mean = Some(ratio::format_ratio(mean));
        bound_values.theory_variance = Some(ratio::format_ratio(var));
    }
    let is_descent = config.statistic == Statistic::Descents;
    if matches!(config.statistic, Statistic::Inversions | Statistic::PairSum) && n >= 2 {
        bound_values.uniform_kd_bound = Some(theory::uniform_kd_bound(n));
        if n > 2 {
            bound_values.u_statistic_kd_bound =
                theory::inversion_kd_bound(n, m, theory::ThirdMoment::Bound).ok();
        }
    }
    let mut descent_limit_residuals = None;
    if is_descent {
        bound_values.slutsky_error = Some(theory::slutsky_error(n, m));
        if spec.is_uniform() {
            let dm = theory::descent_moments(n, m);
            bound_values.theory_mean = Some(ratio::format_ratio(&dm.mean));
            bound_values.theory_variance = Some(ratio::format_ratio(&dm.var_fdh));
            let claimed = theory::limit_var_descents_claimed(m);
            let coupling = theory::limit_var_descents_coupling();
            descent_limit_residuals = Some(DescentLimitResiduals {
                residual_vs_coupling: standardized_variance - to_f64(&coupling),
                residual_vs_claimed: standardized_variance - to_f64(&claimed),
                coupling_limit: ratio::format_ratio(&coupling),
                claimed_limit: ratio::format_ratio(&claimed),
            });
        }
    }
    let coupling_bound = is_descent.then(|| 4 * m as u64 - 1);
    if let (Some(dev), Some(bound)) = (tally.max_deviation, coupling_bound) {
        assert!(dev <= bound, "coupling bound violated: {dev} > {bound}");
    }

    ExperimentReport {
        schema_version: SCHEMA_VERSION,
        config: ConfigEcho {
            spec: spec.clone(),
            statistic: config.statistic,
            sample_count: config.sample_count,
            seed: config.seed,
            chunk_size: config.chunk_size,
        },
        summary,
        histogram: tally.histogram,
        standardization,
        empirical_kd,
        standardized_mean,
        standardized_variance,
        mean_standard_error,
        coupling_max_abs_dev: tally.max_deviation,
        coupling_bound,
        bound_values,
        descent_limit_residuals,
    }
}

/// One row of a CLT sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltRow {
    pub n: usize,
    pub empirical_kd: f64,
    /// `C / sqrt(n)` for inversion-type statistics, `(4m-1)/sqrt(n)` for
    /// descents.
    pub bound: f64,
}

/// Runs one experiment per deck size in `ns` (all other settings from
/// `base`).
pub fn clt_sweep(base: &ExperimentConfig, ns: &[usize]) -> Result<Vec<ExperimentReport>> {
    ns.iter()
        .map(|&n| {
            let config = ExperimentConfig {
                spec: base.spec.with_n(n)?,
                ..base.clone()
            };
            run_experiment(&config)
        })
        .collect()
}

pub fn clt_rows(reports: &[ExperimentReport]) -> Vec<CltRow> {
    reports
        .iter()
        .map(|r| CltRow {
            n: r.config.spec.n(),
            empirical_kd: r.empirical_kd,
            bound: r
                .bound_values
                .uniform_kd_bound
                .or(r.bound_values.slutsky_error)
                .unwrap_or(f64::NAN),
        })
        .collect()
}

pub fn clt_csv(rows: &[CltRow]) -> String {
    let mut out = String::from("n,empirical_kd,bound\n");
    for row in rows {
        out.push_str(&format!("{},{},{}\n", row.n, row.empirical_kd, row.bound));
    }
    out
}
