//! Permutation statistics and their word-level decompositions.

use serde::{Deserialize, Serialize};

use crate::shuffle::{Permutation, RandomWord, ShuffleBuilder};

/// Counts pairs `i < j` with `p(i) > p(j)` by direct pair enumeration.
pub fn inversions_naive(p: &Permutation) -> u64 {
    count_inversions_naive(p.one_line())
}

pub(crate) fn count_inversions_naive(one_line: &[u32]) -> u64 {
    let mut total = 0u64;
    for (i, &a) in one_line.iter().enumerate() {
        total += one_line[i + 1..].iter().filter(|&&b| a > b).count() as u64;
    }
    total
}

/// Inversion count in `O(n log n)` via a Fenwick tree over card labels.
pub fn inversions_fast(p: &Permutation) -> u64 {
    InversionCounter::new().count(p.one_line())
}

/// Fenwick-tree inversion counter with a reusable buffer.
#[derive(Debug, Default, Clone)]
pub struct InversionCounter {
    tree: Vec<u32>,
}

impl InversionCounter {
    pub fn new() -> Self {
        InversionCounter::default()
    }

    /// `one_line` must be a permutation of `1..=len`.
    pub fn count(&mut self, one_line: &[u32]) -> u64 {
        let n = one_line.len();
        self.tree.clear();
        self.tree.resize(n + 1, 0);
        let mut inversions = 0u64;
        for (seen, &value) in one_line.iter().enumerate() {
            // Earlier entries not exceeding `value`.
            let mut smaller = 0u64;
            let mut i = value as usize;
            while i > 0 {
                smaller += self.tree[i] as u64;
                i &= i - 1;
            }
            inversions += seen as u64 - smaller;
            let mut i = value as usize;
            while i <= n {
                self.tree[i] += 1;
                i += i & i.wrapping_neg();
            }
        }
        inversions
    }
}

/// Counts positions `i` in `[1, n-1]` with `p(i) > p(i+1)`.
pub fn descents(p: &Permutation) -> u64 {
    count_descents(p.one_line())
}

#[inline]
pub(crate) fn count_descents(one_line: &[u32]) -> u64 {
    one_line.windows(2).filter(|w| w[0] > w[1]).count() as u64
}

/// The two pieces of the pair-sum statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSumParts {
    /// Pairs `i < k` with `X_i > X_k`.
    pub pair_order: u64,
    /// Pairs `i < k` with `X_i = X_k` and the shared letter even.
    pub equal_even: u64,
}

impl PairSumParts {
    pub fn total(&self) -> u64 {
        self.pair_order + self.equal_even
    }
}

/// `sum_{i<k} [X_i > X_k] + [X_i = X_k, both even]`, which equals the
/// inversion count of the shuffle the word produces.
pub fn pair_sum_inversions(word: &RandomWord) -> u64 {
    pair_sum_parts(word).total()
}

pub fn pair_sum_parts(word: &RandomWord) -> PairSumParts {
    let mut seen = Vec::new();
    pair_sum_parts_with(word.letters(), word.m(), &mut seen)
}

pub(crate) fn pair_sum_parts_with(letters: &[u32], m: u32, seen: &mut Vec<u64>) -> PairSumParts {
    let piles = 2 * m as usize;
    seen.clear();
    seen.resize(piles + 1, 0);
    let mut pair_order = 0u64;
    let mut equal_even = 0u64;
    let mut so_far = 0u64;
    if piles <= 64 {
        // Running prefix sums are cheap for small alphabets.
        for &x in letters {
            let x = x as usize;
            let at_most: u64 = seen[1..=x].iter().sum();
            pair_order += so_far - at_most;
            if x.is_multiple_of(2) {
                equal_even += seen[x];
            }
            seen[x] += 1;
            so_far += 1;
        }
    } else {
        // Fenwick tree over letters.
        let mut tree = vec![0u64; piles + 1];
        for &x in letters {
            let x = x as usize;
            let mut at_most = 0u64;
            let mut i = x;
            while i > 0 {
                at_most += tree[i];
                i &= i - 1;
            }
            pair_order += so_far - at_most;
            if x.is_multiple_of(2) {
                equal_even += seen[x];
            }
            seen[x] += 1;
            let mut i = x;
            while i <= piles {
                tree[i] += 1;
                i += i & i.wrapping_neg();
            }
            so_far += 1;
        }
    }
    PairSumParts {
        pair_order,
        equal_even,
    }
}

/// Descents split into within-even-pile runs and pile-boundary checks,
/// together with the binomial coupling count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescentDecomposition {
    /// `sum_k (X^{2k} - [X^{2k} >= 1])`: descending steps inside even piles.
    pub even_run_descents: u64,
    /// Descents where two consecutive nonempty pile blocks meet.
    pub boundary_descents: u64,
    /// Cards in even piles.
    pub even_card_count: u64,
    pub nonempty_even_piles: u64,
    pub total_descents: u64,
}

impl DescentDecomposition {
    /// `|d - B|`.
    pub fn coupling_deviation(&self) -> u64 {
        self.total_descents.abs_diff(self.even_card_count)
    }
}

pub fn descent_decomposition(word: &RandomWord) -> DescentDecomposition {
    let mut builder = ShuffleBuilder::new();
    decompose_with(&mut builder, word.letters(), word.m())
}

/// Builds the shuffle into `builder` and reads the decomposition from the
/// recorded pile blocks.
pub(crate) fn decompose_with(
    builder: &mut ShuffleBuilder,
    letters: &[u32],
    m: u32,
) -> DescentDecomposition {
    builder.build(letters, m);
    let one_line = builder.one_line();
    let blocks = builder.blocks();
    let mut even_run_descents = 0u64;
    let mut even_card_count = 0u64;
    let mut nonempty_even_piles = 0u64;
    for block in blocks.iter().filter(|b| b.pile % 2 == 0) {
        even_run_descents += block.len as u64 - 1;
        even_card_count += block.len as u64;
        nonempty_even_piles += 1;
    }
    let boundary_descents = blocks
        .windows(2)
        .filter(|pair| {
            let last_of_left = one_line[pair[1].start - 1];
            last_of_left > one_line[pair[1].start]
        })
        .count() as u64;
    DescentDecomposition {
        even_run_descents,
        boundary_descents,
        even_card_count,
        nonempty_even_piles,
        total_descents: count_descents(one_line),
    }
}

/// Integer statistics that can be enumerated exactly or sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// Inversions of the shuffled permutation.
    Inversions,
    Descents,
    /// The word-level pair sum (equal in value to `Inversions`).
    PairSum,
    /// Cards in even piles, the binomial coupling variable.
    EvenCards,
    /// The `X_i > X_k` part of the pair sum.
    PairOrder,
    /// The equal-even part of the pair sum.
    EqualEven,
}

impl Statistic {
    pub const ALL: [Statistic; 6] = [
        Statistic::Inversions,
        Statistic::Descents,
        Statistic::PairSum,
        Statistic::EvenCards,
        Statistic::PairOrder,
        Statistic::EqualEven,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::Inversions => "inversions",
            Statistic::Descents => "descents",
            Statistic::PairSum => "pair_sum",
            Statistic::EvenCards => "even_cards",
            Statistic::PairOrder => "pair_order",
            Statistic::EqualEven => "equal_even",
        }
    }

    /// Largest value the statistic can take for a deck of `n` cards.
    pub fn max_value(self, n: usize) -> u64 {
        let n = n as u64;
        match self {
            Statistic::Descents => n.saturating_sub(1),
            Statistic::EvenCards => n,
            _ => n * n.saturating_sub(1) / 2,
        }
    }
}

impl std::fmt::Display for Statistic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Statistic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Statistic::ALL
            .into_iter()
            .find(|stat| stat.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Statistic::ALL.iter().map(|s| s.name()).collect();
                format!("unknown statistic {s:?}; expected one of {}", names.join(", "))
            })
    }
}

/// Output of evaluating a statistic on one word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Evaluation {
    pub value: u64,
    /// `|d - B|`, filled for descent evaluations.
    pub coupling_deviation: Option<u64>,
}

/// Evaluates statistics on words with reusable scratch buffers.
///
/// Inversions go through the Fenwick counter on the built permutation;
/// descents go through [`descent_decomposition`] and assert the pathwise
/// identity `d = E + C` and the coupling bound `|d - B| <= 4m - 1` on every
/// call.
#[derive(Debug, Default, Clone)]
pub struct Evaluator {
    builder: ShuffleBuilder,
    counter: InversionCounter,
    seen: Vec<u64>,
}

impl Evaluator {
    pub fn new() -> Self {
        Evaluator::default()
    }

    pub fn evaluate(&mut self, statistic: Statistic, letters: &[u32], m: u32) -> Evaluation {
        let plain = |value| Evaluation {
            value,
            coupling_deviation: None,
        };
        match statistic {
            Statistic::Inversions => {
                let one_line = self.builder.build(letters, m);
                plain(self.counter.count(one_line))
            }
            Statistic::Descents => {
                let dec = decompose_with(&mut self.builder, letters, m);
                assert_eq!(
                    dec.total_descents,
                    dec.even_run_descents + dec.boundary_descents,
                    "descent identity d = E + C violated"
                );
                let deviation = dec.coupling_deviation();
                assert!(
                    deviation < 4 * m as u64,
                    "coupling bound violated: |d - B| = {deviation} > 4m - 1"
                );
                Evaluation {
                    value: dec.total_descents,
                    coupling_deviation: Some(deviation),
                }
            }
            Statistic::PairSum => plain(pair_sum_parts_with(letters, m, &mut self.seen).total()),
            Statistic::PairOrder => plain(pair_sum_parts_with(letters, m, &mut self.seen).pair_order),
            Statistic::EqualEven => plain(pair_sum_parts_with(letters, m, &mut self.seen).equal_even),
            Statistic::EvenCards => plain(letters.iter().filter(|&&x| x % 2 == 0).count() as u64),
        }
    }

    /// Inversions computed by both routes (pair sum on the word and direct
    /// pair count on the permutation), asserted equal.
    pub fn checked_inversions(&mut self, letters: &[u32], m: u32) -> u64 {
        let parts = pair_sum_parts_with(letters, m, &mut self.seen);
        let direct = count_inversions_naive(self.builder.build(letters, m));
        assert_eq!(
            parts.total(),
            direct,
            "pair-sum identity violated for word {letters:?}"
        );
        direct
    }
}
