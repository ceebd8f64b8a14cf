//! Shelf shuffles built from random words.
//!
//! An `m`-shelf shuffle of `n` cards drops every card into one of `2m`
//! labeled piles. Odd piles keep their cards in increasing label order,
//! even piles are reversed, and the deck is the concatenation of piles
//! `1, 2, ..., 2m`. The pile assignment `X_1, ..., X_n` is the
//! [`RandomWord`] that drives one shuffle.
//!
//! Card labels, letters and positions are 1-based everywhere they cross the
//! public API.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ratio;

/// Largest supported deck; keeps `n(n-1)/2` inside 64 bits.
pub const MAX_CARDS: usize = 1 << 32;

/// Deck size, shelf count and optional pile distribution for one family of
/// shuffles.
///
/// When `pile_probs` is present the shuffle is *biased*: each card picks pile
/// `k` with probability `pile_probs[k-1]`. Probabilities are exact rationals
/// and must sum to exactly one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr", into = "SpecRepr")]
pub struct ShuffleSpec {
    n: usize,
    m: u32,
    pile_probs: Option<Vec<BigRational>>,
    // Inverse-CDF cut points on the 64-bit draw, in units of 2^-64.
    thresholds: Option<Vec<u128>>,
}

impl ShuffleSpec {
    /// Uniform shuffle: each card lands in each pile with probability `1/(2m)`.
    pub fn new(n: usize, m: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpec("deck size n must be at least 1".into()));
        }
        if n > MAX_CARDS {
            return Err(Error::InvalidSpec(format!(
                "deck size n = {n} exceeds the supported maximum {MAX_CARDS}"
            )));
        }
        if m == 0 {
            return Err(Error::InvalidSpec("shelf count m must be at least 1".into()));
        }
        if m > u32::MAX / 2 {
            return Err(Error::InvalidSpec(format!("shelf count m = {m} is too large")));
        }
        Ok(ShuffleSpec {
            n,
            m,
            pile_probs: None,
            thresholds: None,
        })
    }

    /// Biased shuffle with an explicit pile distribution of length `2m`.
    pub fn biased(n: usize, m: u32, pile_probs: Vec<BigRational>) -> Result<Self> {
        let base = ShuffleSpec::new(n, m)?;
        let piles = 2 * m as usize;
        if pile_probs.len() != piles {
            return Err(Error::InvalidSpec(format!(
                "expected {piles} pile probabilities for m = {m}, got {}",
                pile_probs.len()
            )));
        }
        for (index, p) in pile_probs.iter().enumerate() {
            if p.is_negative() {
                return Err(Error::InvalidPileProbability {
                    index: index + 1,
                    reason: format!("{} is negative", ratio::format_ratio(p)),
                });
            }
            if p > &BigRational::one() {
                return Err(Error::InvalidPileProbability {
                    index: index + 1,
                    reason: format!("{} exceeds 1", ratio::format_ratio(p)),
                });
            }
        }
        let total: BigRational = pile_probs.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidSpec(format!(
                "pile probabilities sum to {}, not 1",
                ratio::format_ratio(&total)
            )));
        }
        let thresholds = inverse_cdf_thresholds(&pile_probs);
        Ok(ShuffleSpec {
            pile_probs: Some(pile_probs),
            thresholds: Some(thresholds),
            ..base
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn piles(&self) -> u32 {
        2 * self.m
    }

    pub fn pile_probs(&self) -> Option<&[BigRational]> {
        self.pile_probs.as_deref()
    }

    pub fn is_uniform(&self) -> bool {
        self.pile_probs.is_none()
    }

    /// Probability of pile `k` (1-based).
    pub fn pile_probability(&self, pile: u32) -> BigRational {
        match &self.pile_probs {
            Some(probs) => probs[pile as usize - 1].clone(),
            None => ratio::ratio(1, self.piles() as i64),
        }
    }

    /// Same distribution with a different deck size.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        match &self.pile_probs {
            Some(probs) => ShuffleSpec::biased(n, self.m, probs.clone()),
            None => ShuffleSpec::new(n, self.m),
        }
    }

    /// Maps one 64-bit draw to a letter in `[1, 2m]`.
    ///
    /// Uniform: `floor(u * 2m / 2^64) + 1`. Biased: the first pile `k` with
    /// `u < floor(F(k) * 2^64)` where `F` is the cumulative pile
    /// distribution. Either way exactly one draw is consumed per letter.
    #[inline]
    pub fn letter_from_draw(&self, u: u64) -> u32 {
        match &self.thresholds {
            None => (((u as u128) * (self.piles() as u128)) >> 64) as u32 + 1,
            Some(cuts) => {
                let u = u as u128;
                cuts.partition_point(|&cut| cut <= u) as u32 + 1
            }
        }
    }
}

fn inverse_cdf_thresholds(probs: &[BigRational]) -> Vec<u128> {
    let scale = BigInt::one() << 64;
    let mut cumulative = BigRational::zero();
    let mut cuts: Vec<u128> = probs
        .iter()
        .map(|p| {
            cumulative += p;
            let scaled: BigInt = (cumulative.numer() * &scale) / cumulative.denom();
            scaled.to_u128().expect("cumulative probability is at most 1")
        })
        .collect();
    // The last cut must cover every draw even if rounding left a gap.
    if let Some(last) = cuts.last_mut() {
        *last = 1u128 << 64;
    }
    cuts
}

#[derive(Serialize, Deserialize)]
struct SpecRepr {
    n: usize,
    m: u32,
    #[serde(default)]
    pile_probs: Option<Vec<String>>,
}

impl From<ShuffleSpec> for SpecRepr {
    fn from(spec: ShuffleSpec) -> Self {
        SpecRepr {
            n: spec.n,
            m: spec.m,
            pile_probs: spec
                .pile_probs
                .map(|probs| probs.iter().map(ratio::format_ratio).collect()),
        }
    }
}

impl TryFrom<SpecRepr> for ShuffleSpec {
    type Error = Error;

    fn try_from(repr: SpecRepr) -> Result<Self> {
        match repr.pile_probs {
            None => ShuffleSpec::new(repr.n, repr.m),
            Some(texts) => {
                let probs = parse_pile_probs(&texts)?;
                ShuffleSpec::biased(repr.n, repr.m, probs)
            }
        }
    }
}

/// Parses `"p/q"` strings into pile probabilities, naming the first bad
/// entry (1-based) on failure.
pub fn parse_pile_probs<S: AsRef<str>>(texts: &[S]) -> Result<Vec<BigRational>> {
    texts
        .iter()
        .enumerate()
        .map(|(index, text)| {
            ratio::parse_ratio(text.as_ref()).map_err(|reason| Error::InvalidPileProbability {
                index: index + 1,
                reason,
            })
        })
        .collect()
}

/// The pile letters `X_1, ..., X_n` of one shuffle.
///
/// Serializes as a JSON array of 1-based pile labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct RandomWord {
    letters: Vec<u32>,
    #[serde(skip)]
    m: u32,
}

impl RandomWord {
    pub fn new(letters: Vec<u32>, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidWord("shelf count m must be at least 1".into()));
        }
        if letters.is_empty() {
            return Err(Error::InvalidWord("word must have at least one letter".into()));
        }
        if let Some((pos, &bad)) = letters
            .iter()
            .enumerate()
            .find(|(_, &x)| x == 0 || x > 2 * m)
        {
            return Err(Error::InvalidWord(format!(
                "letter {bad} at position {} is outside [1, {}]",
                pos + 1,
                2 * m
            )));
        }
        Ok(RandomWord { letters, m })
    }

    /// Builds a word that has already been range-checked.
    pub(crate) fn from_trusted(letters: Vec<u32>, m: u32) -> Self {
        debug_assert!(letters.iter().all(|&x| x >= 1 && x <= 2 * m));
        RandomWord { letters, m }
    }

    pub fn letters(&self) -> &[u32] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn into_letters(self) -> Vec<u32> {
        self.letters
    }
}

/// A permutation of `{1, ..., n}` in one-line notation: `one_line[i-1]` is
/// the card at position `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Permutation {
    one_line: Vec<u32>,
}

impl Permutation {
    pub fn new(one_line: Vec<u32>) -> Result<Self> {
        let n = one_line.len();
        if n == 0 {
            return Err(Error::InvalidPermutation("empty permutation".into()));
        }
        let mut seen = vec![false; n];
        for (pos, &label) in one_line.iter().enumerate() {
            let idx = label as usize;
            if idx == 0 || idx > n {
                return Err(Error::InvalidPermutation(format!(
                    "label {label} at position {} is outside [1, {n}]",
                    pos + 1
                )));
            }
            if std::mem::replace(&mut seen[idx - 1], true) {
                return Err(Error::InvalidPermutation(format!(
                    "label {label} appears more than once"
                )));
            }
        }
        Ok(Permutation { one_line })
    }

    pub(crate) fn from_trusted(one_line: Vec<u32>) -> Self {
        Permutation { one_line }
    }

    pub fn identity(n: usize) -> Self {
        Permutation::from_trusted((1..=n as u32).collect())
    }

    pub fn reversal(n: usize) -> Self {
        Permutation::from_trusted((1..=n as u32).rev().collect())
    }

    pub fn one_line(&self) -> &[u32] {
        &self.one_line
    }

    pub fn len(&self) -> usize {
        self.one_line.len()
    }

    pub fn is_empty(&self) -> bool {
        self.one_line.is_empty()
    }

    /// Value at 1-based position `i`.
    pub fn at(&self, position: usize) -> u32 {
        self.one_line[position - 1]
    }
}

impl TryFrom<Vec<u32>> for Permutation {
    type Error = Error;
    fn try_from(one_line: Vec<u32>) -> Result<Self> {
        Permutation::new(one_line)
    }
}

impl From<Permutation> for Vec<u32> {
    fn from(p: Permutation) -> Self {
        p.one_line
    }
}

/// Draws `n` letters, one 64-bit draw per letter, in card order.
pub fn sample_word<R: RngCore + ?Sized>(spec: &ShuffleSpec, rng: &mut R) -> RandomWord {
    let mut letters = Vec::with_capacity(spec.n());
    fill_word(spec, rng, &mut letters);
    RandomWord::from_trusted(letters, spec.m())
}

/// Allocation-free variant of [`sample_word`] for hot loops.
#[inline]
pub fn fill_word<R: RngCore + ?Sized>(spec: &ShuffleSpec, rng: &mut R, letters: &mut Vec<u32>) {
    letters.clear();
    letters.extend((0..spec.n()).map(|_| spec.letter_from_draw(rng.next_u64())));
}

/// Reusable buffers for turning words into permutations.
///
/// Besides the one-line output it records where each nonempty pile block
/// starts, which the descent decomposition needs to locate concatenation
/// boundaries.
#[derive(Debug, Default, Clone)]
pub struct ShuffleBuilder {
    counts: Vec<usize>,
    cursor: Vec<usize>,
    one_line: Vec<u32>,
    blocks: Vec<Block>,
}

/// A maximal run of cards from one nonempty pile in the output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub pile: u32,
    /// 0-based start offset in the one-line output.
    pub start: usize,
    pub len: usize,
}

impl ShuffleBuilder {
    pub fn new() -> Self {
        ShuffleBuilder::default()
    }

    /// Builds the shuffle for `letters` (each in `[1, 2m]`).
    pub fn build(&mut self, letters: &[u32], m: u32) -> &[u32] {
        let piles = 2 * m as usize;
        let n = letters.len();
        self.counts.clear();
        self.counts.resize(piles + 1, 0);
        for &x in letters {
            self.counts[x as usize] += 1;
        }
        // cursor[k]: next write slot for pile k. Odd piles fill forward
        // from the block start, even piles fill backward from the block end.
        self.cursor.clear();
        self.cursor.resize(piles + 1, 0);
        self.blocks.clear();
        let mut offset = 0usize;
        for pile in 1..=piles {
            let len = self.counts[pile];
            self.cursor[pile] = if pile % 2 == 1 { offset } else { offset + len };
            if len > 0 {
                self.blocks.push(Block {
                    pile: pile as u32,
                    start: offset,
                    len,
                });
            }
            offset += len;
        }
        self.one_line.clear();
        self.one_line.resize(n, 0);
        for (idx, &x) in letters.iter().enumerate() {
            let pile = x as usize;
            let card = idx as u32 + 1;
            if pile % 2 == 1 {
                self.one_line[self.cursor[pile]] = card;
                self.cursor[pile] += 1;
            } else {
                self.cursor[pile] -= 1;
                self.one_line[self.cursor[pile]] = card;
            }
        }
        &self.one_line
    }

    pub fn one_line(&self) -> &[u32] {
        &self.one_line
    }

    /// Nonempty pile blocks of the last build, in output order.
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Pile sizes of the last build; index 0 is pile 1.
    pub fn pile_sizes(&self) -> &[usize] {
        self.counts.get(1..).unwrap_or(&[])
    }
}

pub fn word_to_permutation(word: &RandomWord) -> Permutation {
    let mut builder = ShuffleBuilder::new();
    builder.build(word.letters(), word.m());
    Permutation::from_trusted(std::mem::take(&mut builder.one_line))
}

/// Number of cards in each pile; entry `k-1` counts letter `k`.
pub fn pile_counts(word: &RandomWord) -> Vec<u64> {
    let mut counts = vec![0u64; 2 * word.m() as usize];
    for &x in word.letters() {
        counts[x as usize - 1] += 1;
    }
    counts
}

pub fn invert(p: &Permutation) -> Permutation {
    let mut inverse = vec![0u32; p.len()];
    for (pos, &label) in p.one_line().iter().enumerate() {
        inverse[label as usize - 1] = pos as u32 + 1;
    }
    Permutation::from_trusted(inverse)
}

/// True when `p` has no valley, i.e. no interior position lower than both
/// neighbours.
pub fn is_unimodal(p: &Permutation) -> bool {
    !p
        .one_line()
        .windows(3)
        .any(|w| w[0] > w[1] && w[2] > w[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::{int, ratio};
    use rand_chacha::ChaCha8Rng;
    use rand_core::SeedableRng;

    pub(crate) const EXAMPLE_WORD: [u32; 12] = [2, 1, 3, 2, 2, 4, 4, 1, 2, 1, 3, 3];
    pub(crate) const EXAMPLE_PERM: [u32; 12] = [2, 8, 10, 9, 5, 4, 1, 3, 11, 12, 7, 6];

    /// Yields a fixed list of 64-bit draws.
    struct Replay(std::vec::IntoIter<u64>);

    impl RngCore for Replay {
        fn next_u32(&mut self) -> u32 {
            self.next_u64() as u32
        }
        fn next_u64(&mut self) -> u64 {
            self.0.next().expect("replay stream exhausted")
        }
        fn fill_bytes(&mut self, _dst: &mut [u8]) {
            unimplemented!()
        }
    }

    #[test]
    fn spec_rejects_degenerate_parameters() {
        assert!(ShuffleSpec::new(0, 1).is_err());
        assert!(ShuffleSpec::new(3, 0).is_err());
        assert!(ShuffleSpec::new(1, 1).is_ok());
    }

    #[test]
    fn biased_spec_validates_entries() {
        assert!(ShuffleSpec::biased(3, 1, vec![int(1), int(0)]).is_ok());
        assert!(matches!(
            ShuffleSpec::biased(3, 1, vec![ratio(1, 2), ratio(1, 3)]),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            ShuffleSpec::biased(3, 1, vec![ratio(3, 2), ratio(-1, 2)]),
            Err(Error::InvalidPileProbability { index: 1, .. })
        ));
        assert!(ShuffleSpec::biased(3, 2, vec![int(1), int(0)]).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = ShuffleSpec::biased(7, 1, vec![ratio(1, 4), ratio(3, 4)]).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"n":7,"m":1,"pile_probs":["1/4","3/4"]}"#);
        let back: ShuffleSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<ShuffleSpec>(r#"{"n":7,"m":1,"pile_probs":["0.5","0.5"]}"#).is_err());
    }

    #[test]
    fn sampled_letters_stay_in_range() {
        let spec = ShuffleSpec::new(5, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let word = sample_word(&spec, &mut rng);
            assert!(word.letters().iter().all(|&x| x == 1 || x == 2));
        }
    }

    #[test]
    fn replayed_stream_reproduces_worked_example() {
        let spec = ShuffleSpec::new(12, 2).unwrap();
        let draws: Vec<u64> = EXAMPLE_WORD
            .iter()
            .map(|&k| ((k as u64 - 1) << 62) | 12345)
            .collect();
        let word = sample_word(&spec, &mut Replay(draws.into_iter()));
        assert_eq!(word.letters(), EXAMPLE_WORD);
    }

    #[test]
    fn degenerate_bias_always_picks_first_pile() {
        let spec = ShuffleSpec::biased(3, 1, vec![int(1), int(0)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            assert_eq!(sample_word(&spec, &mut rng).letters(), [1, 1, 1]);
        }
        let extremes = Replay(vec![0, u64::MAX, 1 << 63].into_iter());
        let mut extremes = extremes;
        assert_eq!(sample_word(&spec, &mut extremes).letters(), [1, 1, 1]);
    }

    #[test]
    fn biased_thresholds_split_the_draw_space() {
        let spec = ShuffleSpec::biased(1, 1, vec![ratio(1, 4), ratio(3, 4)]).unwrap();
        assert_eq!(spec.letter_from_draw(0), 1);
        assert_eq!(spec.letter_from_draw((1 << 62) - 1), 1);
        assert_eq!(spec.letter_from_draw(1 << 62), 2);
        assert_eq!(spec.letter_from_draw(u64::MAX), 2);
        // A zero-probability middle pile is never selected.
        let spec = ShuffleSpec::biased(
            1,
            2,
            vec![ratio(1, 2), int(0), ratio(1, 2), int(0)],
        )
        .unwrap();
        assert_eq!(spec.letter_from_draw((1 << 63) - 1), 1);
        assert_eq!(spec.letter_from_draw(1 << 63), 3);
        assert_eq!(spec.letter_from_draw(u64::MAX), 3);
    }

    #[test]
    fn uniform_draw_mapping_is_monotone_multiply_shift() {
        let spec = ShuffleSpec::new(1, 3).unwrap();
        assert_eq!(spec.letter_from_draw(0), 1);
        assert_eq!(spec.letter_from_draw(u64::MAX), 6);
        let sixth = u64::MAX / 6 + 1;
        assert_eq!(spec.letter_from_draw(sixth - 1), 1);
        assert_eq!(spec.letter_from_draw(sixth), 2);
    }

    #[test]
    fn worked_example_permutation() {
        let word = RandomWord::new(EXAMPLE_WORD.to_vec(), 2).unwrap();
        assert_eq!(word_to_permutation(&word).one_line(), EXAMPLE_PERM);
        assert_eq!(pile_counts(&word), vec![3, 4, 3, 2]);
    }

    #[test]
    fn single_pile_words() {
        let ascending = RandomWord::new(vec![1; 6], 3).unwrap();
        assert_eq!(word_to_permutation(&ascending), Permutation::identity(6));
        assert_eq!(pile_counts(&ascending), vec![6, 0, 0, 0, 0, 0]);
        let descending = RandomWord::new(vec![2; 6], 1).unwrap();
        assert_eq!(word_to_permutation(&descending), Permutation::reversal(6));
    }

    #[test]
    fn word_validation() {
        assert!(RandomWord::new(vec![1, 5], 2).is_err());
        assert!(RandomWord::new(vec![0], 2).is_err());
        assert!(RandomWord::new(vec![], 2).is_err());
    }

    #[test]
    fn permutation_validation_and_json() {
        assert!(Permutation::new(vec![1, 1]).is_err());
        assert!(Permutation::new(vec![0, 1]).is_err());
        assert!(serde_json::from_str::<Permutation>("[2,3,1]").is_ok());
        assert!(serde_json::from_str::<Permutation>("[2,2,1]").is_err());
        let word = RandomWord::new(vec![2, 1, 2], 1).unwrap();
        assert_eq!(serde_json::to_string(&word).unwrap(), "[2,1,2]");
    }

    #[test]
    fn inverse_of_three_cycle() {
        let p = Permutation::new(vec![2, 3, 1]).unwrap();
        assert_eq!(invert(&p).one_line(), [3, 1, 2]);
        assert_eq!(invert(&Permutation::identity(5)), Permutation::identity(5));
    }

    #[test]
    fn unimodal_examples() {
        assert!(is_unimodal(&Permutation::new(vec![1, 3, 2]).unwrap()));
        assert!(!is_unimodal(&Permutation::new(vec![2, 1, 3]).unwrap()));
    }

    #[test]
    fn one_shelf_outputs_are_unimodal_exhaustively() {
        for n in 1..=10usize {
            for bits in 0u32..(1 << n) {
                let letters = (0..n).map(|i| 1 + ((bits >> i) & 1)).collect();
                let word = RandomWord::new(letters, 1).unwrap();
                assert!(is_unimodal(&word_to_permutation(&word)), "n={n} bits={bits:b}");
            }
        }
    }

    #[test]
    fn builder_records_nonempty_blocks() {
        let mut builder = ShuffleBuilder::new();
        builder.build(&EXAMPLE_WORD, 2);
        let blocks: Vec<(u32, usize, usize)> =
            builder.blocks().iter().map(|b| (b.pile, b.start, b.len)).collect();
        assert_eq!(blocks, vec![(1, 0, 3), (2, 3, 4), (3, 7, 3), (4, 10, 2)]);
        builder.build(&[3, 3, 1], 2);
        assert_eq!(builder.blocks().len(), 2);
        assert_eq!(builder.one_line(), [3, 1, 2]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn word_strategy() -> impl Strategy<Value = RandomWord> {
            (1u32..6).prop_flat_map(|m| {
                prop::collection::vec(1..=2 * m, 1..60)
                    .prop_map(move |letters| RandomWord::new(letters, m).unwrap())
            })
        }

        proptest! {
            #[test]
            fn outputs_are_bijections(word in word_strategy()) {
                let p = word_to_permutation(&word);
                prop_assert!(Permutation::new(p.one_line().to_vec()).is_ok());
                prop_assert_eq!(&p, &word_to_permutation(&word));
            }

            #[test]
            fn invert_is_an_involution(word in word_strategy()) {
                let p = word_to_permutation(&word);
                prop_assert_eq!(invert(&invert(&p)), p);
            }

            #[test]
            fn pile_counts_sum_to_n(word in word_strategy()) {
                prop_assert_eq!(pile_counts(&word).iter().sum::<u64>(), word.len() as u64);
            }
        }
    }
}
