//! Simulation and exact verification of shelf-shuffle statistics.
//!
//! A shelf shuffle with `m` shelves deals `n` cards into `2m` piles, keeps
//! odd piles in order, reverses even piles, and stacks the piles. This crate
//! builds those shuffles from random words, computes inversion and descent
//! statistics together with their word-level decompositions, evaluates the
//! known closed forms exactly, and checks them against exhaustive
//! enumeration and large Monte Carlo runs.
//!
//! Modules:
//!
//! * [`shuffle`]: specs, words, permutations, the shuffle map itself.
//! * [`stats`] and [`kernel`]: statistics, decompositions, the U-statistic kernel.
//! * [`theory`]: exact closed forms and convergence bounds.
//! * [`oracle`]: exhaustive enumeration and formula audits.
//! * [`montecarlo`]: deterministic chunk-parallel sampling.
//!
//! The `parallel` feature (on by default) runs chunks on rayon; without it
//! every engine runs sequentially and produces identical output.

pub mod error;
pub mod exec;
pub mod kernel;
pub mod montecarlo;
pub mod normal;
pub mod oracle;
pub mod ratio;
pub mod shuffle;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
pub use montecarlo::{run_experiment, ExperimentConfig, ExperimentReport, MomentSummary};
pub use normal::normal_cdf;
pub use oracle::{enumerate_distribution, exact_moments, ExactDistribution};
pub use shuffle::{
    invert, is_unimodal, pile_counts, sample_word, word_to_permutation, Permutation, RandomWord,
    ShuffleSpec,
};
pub use stats::{
    descent_decomposition, descents, inversions_fast, inversions_naive, pair_sum_inversions,
    DescentDecomposition, Statistic,
};
