//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any fails.

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_rational::BigRational;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shelf_lab::montecarlo::{self, ExperimentConfig};
use shelf_lab::oracle::{self, AuditStatus};
use shelf_lab::ratio::{format_ratio, int, ratio, to_f64};
use shelf_lab::stats::{pair_sum_parts, Statistic};
use shelf_lab::theory;
use shelf_lab::{
    descent_decomposition, descents, inversions_naive, normal_cdf, pair_sum_inversions,
    pile_counts, sample_word, word_to_permutation, RandomWord, ShuffleSpec,
};

const EXHAUSTIVE_BUDGET: u64 = 1_000_000;
const MAX_EXHAUSTIVE_M: u32 = 4;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

/// Reference shuffle: sort cards by pile, ascending in odd piles and
/// descending in even ones.
fn reference_shuffle(letters: &[u32]) -> Vec<u32> {
    let mut cards: Vec<(u32, i64)> = letters
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let label = i as i64 + 1;
            (x, if x % 2 == 1 { label } else { -label })
        })
        .collect();
    cards.sort_unstable();
    cards.iter().map(|&(_, key)| key.unsigned_abs() as u32).collect()
}

fn reference_inversions(one_line: &[u32]) -> u64 {
    let mut count = 0;
    for i in 0..one_line.len() {
        for j in i + 1..one_line.len() {
            count += u64::from(one_line[i] > one_line[j]);
        }
    }
    count
}

/// Calls `visit` on every word in `[2m]^n`.
fn for_each_word(n: usize, m: u32, mut visit: impl FnMut(&[u32])) {
    let piles = 2 * m;
    let mut letters = vec![1u32; n];
    loop {
        visit(&letters);
        let mut i = n;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if letters[i] < piles {
                letters[i] += 1;
                break;
            }
            letters[i] = 1;
        }
    }
}

fn exhaustive_grid() -> Vec<(usize, u32)> {
    oracle::enumerable_grid(MAX_EXHAUSTIVE_M, EXHAUSTIVE_BUDGET)
}

fn check_descent_word(word: &RandomWord) -> Result<(), String> {
    let m = word.m();
    let perm = word_to_permutation(word);
    let d = descents(&perm);
    let dec = descent_decomposition(word);
    let b = word.letters().iter().filter(|&&x| x % 2 == 0).count() as u64;
    ensure!(
        dec.total_descents == d && dec.even_run_descents + dec.boundary_descents == d,
        "d = E + C fails for {:?}: d={d}, E={}, C={}",
        word.letters(),
        dec.even_run_descents,
        dec.boundary_descents
    );
    ensure!(dec.even_card_count == b, "even card count mismatch");
    ensure!(
        d.abs_diff(b) < 4 * m as u64,
        "|d - B| = {} exceeds {} (n={}, m={m})",
        d.abs_diff(b),
        4 * m - 1,
        word.len()
    );
    Ok(())
}

fn criterion_1() -> Outcome {
    let grid = exhaustive_grid();
    let mut words = 0u64;
    for &(n, m) in &grid {
        let mut failure = None;
        for_each_word(n, m, |letters| {
            if failure.is_some() {
                return;
            }
            let word = RandomWord::new(letters.to_vec(), m).unwrap();
            let perm = word_to_permutation(&word);
            let reference = reference_shuffle(letters);
            let expected = reference_inversions(&reference);
            if perm.one_line() != reference.as_slice()
                || pair_sum_inversions(&word) != expected
                || inversions_naive(&perm) != expected
            {
                failure = Some(letters.to_vec());
            }
            words += 1;
        });
        if let Some(letters) = failure {
            return Err(format!("identity fails at m={m}, word {letters:?}"));
        }
    }
    Ok(format!("{words} words over {} (n, m) points, zero mismatches", grid.len()))
}

fn criterion_2() -> Outcome {
    let grid = exhaustive_grid();
    let mut exhaustive = 0u64;
    for &(n, m) in &grid {
        let mut failure = None;
        for_each_word(n, m, |letters| {
            if failure.is_none() {
                let word = RandomWord::new(letters.to_vec(), m).unwrap();
                failure = check_descent_word(&word).err();
                exhaustive += 1;
            }
        });
        if let Some(msg) = failure {
            return Err(msg);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_517);
    let random = 100_000u64;
    let mut worst = (0u64, 0u32);
    for i in 0..random {
        let (n, m) = if i == 0 {
            (5000, 64)
        } else {
            (1 + (rng.next_u64() % 5000) as usize, 1 + (rng.next_u64() % 64) as u32)
        };
        let spec = ShuffleSpec::new(n, m).unwrap();
        let word = sample_word(&spec, &mut rng);
        check_descent_word(&word)?;
        let dev = descent_decomposition(&word).coupling_deviation();
        if dev > worst.0 {
            worst = (dev, m);
        }
    }
    Ok(format!(
        "{exhaustive} exhaustive + {random} random words, zero violations (largest |d-B| = {} at m = {})",
        worst.0, worst.1
    ))
}

fn criterion_3() -> Outcome {
    let grid = exhaustive_grid();
    for &(n, m) in &grid {
        let spec = ShuffleSpec::new(n, m).unwrap();
        let moments = oracle::enumerate_component_moments(&spec, EXHAUSTIVE_BUDGET, 0)
            .map_err(|e| e.to_string())?;
        let nn = n as u64;
        ensure!(
            moments.inversions.mean == ratio((n * n.saturating_sub(1)) as i64, 4),
            "inversion mean at ({n},{m})"
        );
        ensure!(moments.inversions.mean == theory::mean_inversions(nn), "mean_inversions at ({n},{m})");
        ensure!(
            moments.descents.mean == ratio(n as i64 - 1, 2),
            "descent mean at ({n},{m}): {}",
            format_ratio(&moments.descents.mean)
        );
        ensure!(
            moments.pair_order.variance == theory::var_pair_order(nn, m),
            "var_A at ({n},{m}): oracle {} vs {}",
            format_ratio(&moments.pair_order.variance),
            format_ratio(&theory::var_pair_order(nn, m))
        );
        ensure!(
            moments.equal_even.variance == theory::var_equal_even(nn, m),
            "var_C at ({n},{m}): oracle {} vs {}",
            format_ratio(&moments.equal_even.variance),
            format_ratio(&theory::var_equal_even(nn, m))
        );
        if m == 1 {
            ensure!(
                moments.descents.variance == ratio(n as i64 - 1, 4),
                "m=1 descent variance at n={n}: {}",
                format_ratio(&moments.descents.variance)
            );
            ensure!(
                theory::descent_moments(nn, 1).var_fdh == ratio(n as i64 - 1, 4),
                "quoted m=1 descent variance at n={n}"
            );
        }
    }
    Ok(format!("exact equality at {} (n, m) points", grid.len()))
}

fn criterion_4() -> Outcome {
    let report = oracle::audit_formulas(&[(2, 1), (3, 1)], EXHAUSTIVE_BUDGET, 0);
    let expect = |n: usize, quantity: &str, claimed: BigRational, oracle_value: BigRational| {
        let point = report.points.iter().find(|p| p.n == n).ok_or("missing point")?;
        let c = point.comparison(quantity).ok_or("missing comparison")?;
        ensure!(
            c.status == AuditStatus::Finding && c.claimed == claimed && c.oracle == oracle_value,
            "({n},1) {quantity}: claimed {} oracle {} status {:?}",
            format_ratio(&c.claimed),
            format_ratio(&c.oracle),
            c.status
        );
        Ok(())
    };
    expect(2, "var_total_printed", ratio(1, 2), ratio(1, 4))?;
    expect(3, "unimodal_variance_claimed", int(2), ratio(5, 4))?;
    ensure!(report.has_published_findings(), "strict audit would pass");

    let grid = exhaustive_grid();
    for &(n, m) in &grid {
        let spec = ShuffleSpec::new(n, m).unwrap();
        let dist = oracle::enumerate_distribution(&spec, Statistic::Inversions, EXHAUSTIVE_BUDGET)
            .map_err(|e| e.to_string())?;
        let exact = oracle::exact_moments(&dist);
        let from_components = theory::inversion_moments(n as u64, m).var_total_from_components;
        ensure!(
            exact.variance == from_components,
            "component variance at ({n},{m}): {} vs oracle {}",
            format_ratio(&from_components),
            format_ratio(&exact.variance)
        );
    }
    Ok(format!(
        "(2,1) 1/2 vs 1/4 and (3,1) 2 vs 5/4 flagged; corrected total exact at {} points",
        grid.len()
    ))
}

fn criterion_5() -> Outcome {
    let letters = vec![2, 1, 3, 2, 2, 4, 4, 1, 2, 1, 3, 3];
    let word = RandomWord::new(letters.clone(), 2).map_err(|e| e.to_string())?;
    let perm = word_to_permutation(&word);
    ensure!(
        perm.one_line() == [2, 8, 10, 9, 5, 4, 1, 3, 11, 12, 7, 6],
        "permutation {:?}",
        perm.one_line()
    );
    ensure!(pile_counts(&word) == [3, 4, 3, 2], "pile counts {:?}", pile_counts(&word));
    let dec = descent_decomposition(&word);
    ensure!(
        dec.total_descents == 6 && dec.even_run_descents == 4 && dec.boundary_descents == 2,
        "d={} E={} C={}",
        dec.total_descents,
        dec.even_run_descents,
        dec.boundary_descents
    );
    ensure!(dec.even_card_count == 6, "B = {}", dec.even_card_count);
    let inv = reference_inversions(perm.one_line());
    ensure!(inv == 30, "naive inversions {inv}");
    ensure!(pair_sum_inversions(&word) == 30, "pair sum {}", pair_sum_inversions(&word));
    let parts = pair_sum_parts(&word);
    Ok(format!(
        "{{2,8,10,9,5,4,1,3,11,12,7,6}}, d=6 E=4 C=2 B=6, 30 inversions (A={}, C={})",
        parts.pair_order, parts.equal_even
    ))
}

fn criterion_6() -> Outcome {
    let spec = ShuffleSpec::new(52, 10).unwrap();
    let config = ExperimentConfig::new(spec, Statistic::Inversions, 1_000_000, 5210);
    let (report, elapsed) = montecarlo::run_experiment_timed(&config).map_err(|e| e.to_string())?;
    let variance = theory::inversion_moments(52, 10).var_total_from_components;
    let se = (to_f64(&variance) / 1e6).sqrt();
    let z = (report.summary.mean() - 663.0) / se;
    ensure!(z.abs() <= 5.0, "mean {} is {z:.2} SE from 663", report.summary.mean());
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!(
        "mean {:.4}, SE {se:.4} (variance {}), z = {z:+.2}, {:.1} s",
        report.summary.mean(),
        format_ratio(&variance),
        elapsed.as_secs_f64()
    ))
}

fn criterion_7() -> Outcome {
    let spec = ShuffleSpec::new(10, 2).unwrap();
    let base = ExperimentConfig::new(spec, Statistic::Inversions, 1_000_000, 7);
    let reports = montecarlo::clt_sweep(&base, &[10, 100, 1000]).map_err(|e| e.to_string())?;
    let kd: Vec<f64> = reports.iter().map(|r| r.empirical_kd).collect();
    for (r, &d) in reports.iter().zip(&kd) {
        let n = r.config.spec.n() as f64;
        ensure!(d <= 20594.75 / n.sqrt(), "d_K {d} above the bound at n = {n}");
    }
    ensure!(kd[2] < 0.05, "d_K at n=1000 is {}", kd[2]);
    ensure!(kd[2] < kd[0], "d_K at n=1000 ({}) not below n=10 ({})", kd[2], kd[0]);
    Ok(format!(
        "d_K at n=10,100,1000: {:.5}, {:.5}, {:.5}",
        kd[0], kd[1], kd[2]
    ))
}

fn criterion_8() -> Outcome {
    let run = |m: u32| {
        let spec = ShuffleSpec::new(1000, m).unwrap();
        montecarlo::run_experiment(&ExperimentConfig::new(spec, Statistic::Descents, 1_000_000, 8))
            .map_err(|e| e.to_string())
    };
    let one = run(1)?;
    ensure!(one.empirical_kd < 0.05, "d_K {}", one.empirical_kd);
    ensure!(
        (one.standardized_variance - 1.0).abs() <= 0.05,
        "standardized variance {}",
        one.standardized_variance
    );
    let two = run(2)?;
    let res = two
        .descent_limit_residuals
        .as_ref()
        .ok_or("m=2 report lacks limit residuals")?;
    ensure!(
        res.coupling_limit == "1/1" && res.claimed_limit == "1/2",
        "limits {} and {}",
        res.coupling_limit,
        res.claimed_limit
    );
    Ok(format!(
        "m=1: d_K {:.5}, variance {:.5}; m=2: variance {:.5}, residual vs 1 {:+.5}, vs 1/2 {:+.5}",
        one.empirical_kd,
        one.standardized_variance,
        two.standardized_variance,
        res.residual_vs_coupling,
        res.residual_vs_claimed
    ))
}

fn criterion_9() -> Outcome {
    let spec = ShuffleSpec::new(52, 10).unwrap();
    let base = ExperimentConfig::new(spec, Statistic::Inversions, 1_000_000, 99);
    let render = |threads: usize| {
        let report = montecarlo::run_experiment(&base.clone().with_threads(threads)).unwrap();
        serde_json::to_string(&report).unwrap()
    };
    let reference = render(1);
    for threads in [4, 8] {
        ensure!(render(threads) == reference, "{threads} workers differ from 1");
    }
    Ok(format!("1, 4, 8 workers: {} identical bytes", reference.len()))
}

/// `Phi(x)` by composite Simpson on `[0, |x|]`.
fn phi_quadrature(x: f64) -> f64 {
    const PANELS: usize = 4000;
    let a = x.abs();
    if a == 0.0 {
        return 0.5;
    }
    let h = a / PANELS as f64;
    let f = |t: f64| (-0.5 * t * t).exp();
    let mut sum = f(0.0) + f(a);
    for i in 1..PANELS {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += weight * f(i as f64 * h);
    }
    let half = sum * h / 3.0 / (2.0 * std::f64::consts::PI).sqrt();
    if x > 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

fn criterion_10() -> Outcome {
    let points = 10_000;
    let mut worst = (0.0f64, 0.0f64);
    for i in 0..points {
        let x = -8.0 + 16.0 * i as f64 / (points - 1) as f64;
        let err = (normal_cdf(x) - phi_quadrature(x)).abs();
        if err > worst.0 {
            worst = (err, x);
        }
    }
    ensure!(worst.0 <= 1e-10, "error {:.3e} at x = {}", worst.0, worst.1);
    Ok(format!("max error {:.2e} at x = {:.4}", worst.0, worst.1))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("pair-sum identity, exhaustive", criterion_1),
        ("descent identity and coupling", criterion_2),
        ("enumeration vs closed forms", criterion_3),
        ("formula audit findings", criterion_4),
        ("worked example end to end", criterion_5),
        ("Monte Carlo mean, n=52 m=10", criterion_6),
        ("inversion CLT trend, m=2", criterion_7),
        ("descent CLT, n=1000", criterion_8),
        ("determinism across workers", criterion_9),
        ("normal CDF accuracy", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
