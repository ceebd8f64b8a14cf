//! Exhaustive enumeration of all `(2m)^n` words.
//!
//! Words are visited in lexicographic (odometer) order, the first letter
//! being the most significant digit. The index range is split into fixed
//! chunks; each chunk decodes its starting word, runs the odometer, and
//! keeps a private tally. Tallies are merged by exact integer addition in
//! chunk order, so results do not depend on the worker count.
//!
//! Biased shuffles use integer weights: with `D` the least common
//! denominator of the pile probabilities, pile `k` gets weight `p_k D` and a
//! word gets the product of its letters' weights. Counts then sum to `D^n`
//! and every mass is `count / total` exactly, as in the uniform case where
//! all weights are one and `D = 2m`.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::normal::normal_cdf;
use crate::ratio::{self, format_ratio};
use crate::shuffle::ShuffleSpec;
use crate::stats::{Evaluator, Statistic};
use crate::theory::{self, Standardizer};

pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Environment variable overriding [`DEFAULT_BUDGET`].
pub const BUDGET_ENV: &str = "SHELF_LAB_BUDGET";

pub const SCHEMA_VERSION: u32 = 1;

const CHUNK_WORDS: u64 = 1 << 14;

/// Budget from `SHELF_LAB_BUDGET` if set and valid, else the default.
pub fn budget_from_env() -> u64 {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_BUDGET)
}

/// `(2m)^n`.
pub fn state_count(n: usize, m: u32) -> BigUint {
    BigUint::from(2 * m).pow(n as u32)
}

fn check_budget(spec: &ShuffleSpec, budget: u64) -> Result<u64> {
    let states = state_count(spec.n(), spec.m());
    match states.to_u64() {
        Some(s) if s <= budget => Ok(s),
        _ => Err(Error::BudgetExceeded { states, budget }),
    }
}

/// Integer letter weights and the common denominator.
fn letter_weights(spec: &ShuffleSpec) -> Option<(Vec<BigUint>, BigUint)> {
    let probs = spec.pile_probs()?;
    let denom = probs
        .iter()
        .fold(BigInt::one(), |acc, p| acc.lcm(p.denom()));
    let weights = probs
        .iter()
        .map(|p| {
            (p.numer() * (&denom / p.denom()))
                .to_biguint()
                .expect("probabilities are nonnegative")
        })
        .collect();
    Some((weights, denom.to_biguint().expect("positive denominator")))
}

/// Runs `visit` on every word, with per-chunk accumulators merged in order.
fn enumerate<A, V>(spec: &ShuffleSpec, budget: u64, threads: usize, visit: V) -> Result<A>
where
    A: Accumulator,
    V: Fn(&mut A, &mut Evaluator, &[u32], Weight<'_>) + Sync + Send,
{
    let words = check_budget(spec, budget)?;
    let n = spec.n();
    let piles = spec.piles();
    let weights = letter_weights(spec);
    let chunks = words.div_ceil(CHUNK_WORDS) as usize;
    let partials = exec::map_chunks(chunks, threads, |chunk| {
        let start = chunk as u64 * CHUNK_WORDS;
        let end = (start + CHUNK_WORDS).min(words);
        let mut letters = decode_word(start, n, piles);
        let mut acc = A::default();
        let mut evaluator = Evaluator::new();
        let mut product = BigUint::one();
        for index in start..end {
            let weight = match &weights {
                None => Weight::Unit,
                Some((w, _)) => {
                    product.set_one();
                    for &x in &letters {
                        product *= &w[x as usize - 1];
                    }
                    Weight::Big(&product)
                }
            };
            if !weight.is_zero() {
                visit(&mut acc, &mut evaluator, &letters, weight);
            }
            if index + 1 < end {
                advance(&mut letters, piles);
            }
        }
        acc
    });
    let mut total = A::default();
    for part in partials {
        total.merge(part);
    }
    Ok(total)
}

/// Letters of the word with lexicographic index `index`.
fn decode_word(mut index: u64, n: usize, piles: u32) -> Vec<u32> {
    let mut letters = vec![1u32; n];
    for slot in letters.iter_mut().rev() {
        *slot = (index % piles as u64) as u32 + 1;
        index /= piles as u64;
    }
    letters
}

fn advance(letters: &mut [u32], piles: u32) {
    for slot in letters.iter_mut().rev() {
        if *slot < piles {
            *slot += 1;
            return;
        }
        *slot = 1;
    }
}

#[derive(Clone, Copy)]
enum Weight<'a> {
    Unit,
    Big(&'a BigUint),
}

impl Weight<'_> {
    fn is_zero(&self) -> bool {
        matches!(self, Weight::Big(w) if w.is_zero())
    }

    fn times(&self, value: u64) -> BigUint {
        match self {
            Weight::Unit => BigUint::from(value),
            Weight::Big(w) => *w * value,
        }
    }

    fn add_to(&self, target: &mut BigUint) {
        match self {
            Weight::Unit => *target += 1u32,
            Weight::Big(w) => *target += *w,
        }
    }
}

trait Accumulator: Default + Send {
    fn merge(&mut self, other: Self);
}

#[derive(Default)]
struct CountTally(BTreeMap<u64, BigUint>);

impl Accumulator for CountTally {
    fn merge(&mut self, other: Self) {
        for (value, count) in other.0 {
            *self.0.entry(value).or_default() += count;
        }
    }
}

/// Asserts the pair-sum and descent identities for one word.
fn assert_pathwise(evaluator: &mut Evaluator, letters: &[u32], m: u32) {
    evaluator.checked_inversions(letters, m);
    evaluator.evaluate(Statistic::Descents, letters, m);
}

/// Exact distribution of an integer statistic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactDistribution {
    spec: ShuffleSpec,
    statistic: Statistic,
    counts: BTreeMap<u64, BigUint>,
    total: BigUint,
}

impl ExactDistribution {
    pub fn spec(&self) -> &ShuffleSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n()
    }

    pub fn m(&self) -> u32 {
        self.spec.m()
    }

    pub fn statistic(&self) -> Statistic {
        self.statistic
    }

    /// Value to (weighted) word count; zero-count values are omitted.
    pub fn counts(&self) -> &BTreeMap<u64, BigUint> {
        &self.counts
    }

    /// `(2m)^n` when uniform, `D^n` when biased.
    pub fn total(&self) -> &BigUint {
        &self.total
    }

    pub fn probability(&self, value: u64) -> BigRational {
        let count = self.counts.get(&value).cloned().unwrap_or_default();
        BigRational::new(count.into(), self.total.clone().into())
    }

    pub fn to_json(&self) -> DistributionJson {
        let moments = exact_moments(self);
        DistributionJson {
            schema_version: SCHEMA_VERSION,
            n: self.n(),
            m: self.m(),
            statistic: self.statistic,
            pile_probs: self
                .spec
                .pile_probs()
                .map(|p| p.iter().map(format_ratio).collect()),
            counts: self
                .counts
                .iter()
                .map(|(v, c)| (*v, c.to_string()))
                .collect(),
            total: self.total.to_string(),
            mean: format_ratio(&moments.mean),
            variance: format_ratio(&moments.variance),
        }
    }
}

/// JSON form of an [`ExactDistribution`]. Big integers and rationals are
/// strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionJson {
    pub schema_version: u32,
    pub n: usize,
    pub m: u32,
    pub statistic: Statistic,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pile_probs: Option<Vec<String>>,
    pub counts: BTreeMap<u64, String>,
    pub total: String,
    pub mean: String,
    pub variance: String,
}

pub fn enumerate_distribution(
    spec: &ShuffleSpec,
    statistic: Statistic,
    budget: u64,
) -> Result<ExactDistribution> {
    enumerate_distribution_with_threads(spec, statistic, budget, 0)
}

pub fn enumerate_distribution_with_threads(
    spec: &ShuffleSpec,
    statistic: Statistic,
    budget: u64,
    threads: usize,
) -> Result<ExactDistribution> {
    let m = spec.m();
    let max = statistic.max_value(spec.n());
    let tally: CountTally = enumerate(spec, budget, threads, |acc: &mut CountTally, ev, letters, weight| {
        assert_pathwise(ev, letters, m);
        let value = ev.evaluate(statistic, letters, m).value;
        assert!(value <= max, "{statistic} = {value} exceeds its range bound {max}");
        weight.add_to(acc.0.entry(value).or_default());
    })?;
    let total = match letter_weights(spec) {
        None => state_count(spec.n(), m),
        Some((_, denom)) => denom.pow(spec.n() as u32),
    };
    let counted: BigUint = tally.0.values().sum();
    assert_eq!(counted, total, "enumeration did not cover every word");
    Ok(ExactDistribution {
        spec: spec.clone(),
        statistic,
        counts: tally.0,
        total,
    })
}

/// Exact mean and (population) variance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactMoments {
    #[serde(with = "ratio::as_string")]
    pub mean: BigRational,
    #[serde(with = "ratio::as_string")]
    pub variance: BigRational,
}

pub fn exact_moments(dist: &ExactDistribution) -> ExactMoments {
    let mut first = BigUint::zero();
    let mut second = BigUint::zero();
    for (&value, count) in &dist.counts {
        first += count * value;
        second += count * value * value;
    }
    let total = BigInt::from(dist.total.clone());
    let mean = BigRational::new(first.into(), total.clone());
    let raw_second = BigRational::new(second.into(), total);
    let variance = raw_second - &mean * &mean;
    ExactMoments { mean, variance }
}

/// `sup_z |F(z) - Phi((z - mu)/sigma)|` for the step CDF `F` of `dist`,
/// checking both one-sided limits at each support point.
pub fn exact_kd_to_normal(dist: &ExactDistribution, mu: f64, sigma: f64) -> Result<f64> {
    let standardizer = Standardizer::new(mu, sigma)?;
    Ok(exact_kd_standardized(dist, &standardizer))
}

pub fn exact_kd_standardized(dist: &ExactDistribution, standardizer: &Standardizer) -> f64 {
    let total = BigInt::from(dist.total.clone());
    let mut below = BigUint::zero();
    let mut sup = 0.0f64;
    for (&value, count) in &dist.counts {
        let phi = normal_cdf(standardizer.apply(value as f64));
        let left = ratio::to_f64(&BigRational::new(below.clone().into(), total.clone()));
        below += count;
        let right = ratio::to_f64(&BigRational::new(below.clone().into(), total.clone()));
        sup = sup.max((left - phi).abs()).max((right - phi).abs());
    }
    sup
}

/// Exact moments of the inversion count and of its two pair-sum parts
/// `A` (pair order) and `C` (equal even), plus descents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentMoments {
    pub n: usize,
    pub m: u32,
    pub inversions: ExactMoments,
    pub pair_order: ExactMoments,
    pub equal_even: ExactMoments,
    /// `E[AC] - E[A]E[C]`.
    #[serde(with = "ratio::as_string")]
    pub cov_pair_order_equal_even: BigRational,
    pub descents: ExactMoments,
}

#[derive(Default)]
struct MomentTally {
    weight: BigUint,
    // inversions, A, C, descents: first and second raw sums; then A*C.
    sums: [BigUint; 9],
}

impl Accumulator for MomentTally {
    fn merge(&mut self, other: Self) {
        self.weight += other.weight;
        for (mine, theirs) in self.sums.iter_mut().zip(other.sums) {
            *mine += theirs;
        }
    }
}

/// One pass computing [`ComponentMoments`]. Inversions are counted on the
/// built permutation, independently of the pair-sum parts.
pub fn enumerate_component_moments(
    spec: &ShuffleSpec,
    budget: u64,
    threads: usize,
) -> Result<ComponentMoments> {
    let m = spec.m();
    let tally: MomentTally = enumerate(spec, budget, threads, |acc: &mut MomentTally, ev, letters, weight| {
        let inversions = ev.checked_inversions(letters, m);
        let a = ev.evaluate(Statistic::PairOrder, letters, m).value;
        let c = ev.evaluate(Statistic::EqualEven, letters, m).value;
        let d = ev.evaluate(Statistic::Descents, letters, m).value;
        weight.add_to(&mut acc.weight);
        let values = [
            inversions,
            inversions * inversions,
            a,
            a * a,
            c,
            c * c,
            d,
            d * d,
            a * c,
        ];
        for (sum, v) in acc.sums.iter_mut().zip(values) {
            if v != 0 {
                *sum += weight.times(v);
            }
        }
    })?;
    let total = BigInt::from(tally.weight);
    let mean = |s: &BigUint| BigRational::new(s.clone().into(), total.clone());
    let moments = |i: usize| {
        let first = mean(&tally.sums[i]);
        let variance = mean(&tally.sums[i + 1]) - &first * &first;
        ExactMoments {
            mean: first,
            variance,
        }
    };
    let pair_order = moments(2);
    let equal_even = moments(4);
    let cov = mean(&tally.sums[8]) - &pair_order.mean * &equal_even.mean;
    Ok(ComponentMoments {
        n: spec.n(),
        m,
        inversions: moments(0),
        pair_order,
        equal_even,
        cov_pair_order_equal_even: cov,
        descents: moments(6),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AuditStatus {
    Match,
    Finding,
}

/// One closed form compared against its enumerated value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub quantity: String,
    /// True for expressions quoted from the literature; false for values
    /// this crate derives (sign-corrected covariance, component sum).
    pub published: bool,
    #[serde(with = "ratio::as_string")]
    pub claimed: BigRational,
    #[serde(with = "ratio::as_string")]
    pub oracle: BigRational,
    /// `claimed - oracle`.
    #[serde(with = "ratio::as_string")]
    pub difference: BigRational,
    pub status: AuditStatus,
}

impl Comparison {
    fn new(quantity: &str, published: bool, claimed: BigRational, oracle: &BigRational) -> Self {
        let difference = &claimed - oracle;
        let status = if difference.is_zero() {
            AuditStatus::Match
        } else {
            AuditStatus::Finding
        };
        Comparison {
            quantity: quantity.into(),
            published,
            claimed,
            oracle: oracle.clone(),
            difference,
            status,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditPoint {
    pub n: usize,
    pub m: u32,
    pub comparisons: Vec<Comparison>,
}

impl AuditPoint {
    pub fn comparison(&self, quantity: &str) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| c.quantity == quantity)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedPoint {
    pub n: usize,
    pub m: u32,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema_version: u32,
    pub budget: u64,
    pub points: Vec<AuditPoint>,
    pub skipped: Vec<SkippedPoint>,
}

impl AuditReport {
    pub fn findings(&self) -> impl Iterator<Item = (&AuditPoint, &Comparison)> {
        self.points.iter().flat_map(|p| {
            p.comparisons
                .iter()
                .filter(|c| c.status == AuditStatus::Finding)
                .map(move |c| (p, c))
        })
    }

    pub fn has_published_findings(&self) -> bool {
        self.findings().any(|(_, c)| c.published)
    }
}

/// Compares every closed form against the enumeration at `(n, m)`.
/// Any nonzero difference is recorded as a finding.
pub fn audit_point(n: usize, m: u32, budget: u64, threads: usize) -> Result<AuditPoint> {
    let spec = ShuffleSpec::new(n, m)?;
    let oracle = enumerate_component_moments(&spec, budget, threads)?;
    let theory = theory::inversion_moments(n as u64, m);
    let descent = theory::descent_moments(n as u64, m);
    let var_i = &oracle.inversions.variance;
    let cov = &oracle.cov_pair_order_equal_even;
    let mut comparisons = vec![
        Comparison::new("inversion_mean", true, theory.mean, &oracle.inversions.mean),
        Comparison::new("var_a", true, theory.var_a, &oracle.pair_order.variance),
        Comparison::new("var_c", true, theory.var_c, &oracle.equal_even.variance),
        Comparison::new("cov_printed", true, theory.cov_printed, cov),
        Comparison::new("cov_corrected", false, theory.cov_corrected, cov),
        Comparison::new("var_total_printed", true, theory.var_total_printed, var_i),
        Comparison::new(
            "var_total_from_components",
            false,
            theory.var_total_from_components,
            var_i,
        ),
    ];
    if m == 1 {
        comparisons.push(Comparison::new(
            "unimodal_variance_claimed",
            true,
            theory::unimodal_variance_claimed(n as u64),
            var_i,
        ));
    }
    comparisons.push(Comparison::new(
        "descent_mean",
        true,
        descent.mean,
        &oracle.descents.mean,
    ));
    comparisons.push(Comparison::new(
        "descent_var_fdh",
        true,
        descent.var_fdh,
        &oracle.descents.variance,
    ));
    Ok(AuditPoint { n, m, comparisons })
}

/// Audits every grid point; points over budget are recorded as skipped.
pub fn audit_formulas(grid: &[(usize, u32)], budget: u64, threads: usize) -> AuditReport {
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for &(n, m) in grid {
        match audit_point(n, m, budget, threads) {
            Ok(point) => points.push(point),
            Err(err) => skipped.push(SkippedPoint {
                n,
                m,
                reason: err.to_string(),
            }),
        }
    }
    AuditReport {
        schema_version: SCHEMA_VERSION,
        budget,
        points,
        skipped,
    }
}

/// Every `(n, m)` with `n` in `2..=n_max` and `m` in `1..=m_max`.
pub fn default_grid(n_max: usize, m_max: u32) -> Vec<(usize, u32)> {
    (1..=m_max)
        .flat_map(|m| (2..=n_max).map(move |n| (n, m)))
        .collect()
}

/// Every `(n, m)` with `n >= 1`, `m <= m_max` and `(2m)^n <= budget`.
pub fn enumerable_grid(m_max: u32, budget: u64) -> Vec<(usize, u32)> {
    let mut grid = Vec::new();
    for m in 1..=m_max {
        let mut n = 1usize;
        while state_count(n, m) <= BigUint::from(budget) {
            grid.push((n, m));
            n += 1;
        }
    }
    grid
}
