//! Monotone phoneme alignment of parallel English/Hindi entity pairs.
//!
//! Alignments are paths through the `|e| x |h|` grid built from three moves:
//! match `(1,1)`, skip-e `(1,0)` and skip-h `(0,1)`. A match of `e` with `h`
//! is weighted by `P(h|e)` from an [`AlignmentCostTable`], every skip by the
//! fixed [`SKIP_PROB`]. The table is estimated with expectation
//! maximization over all monotone paths (forward-backward soft counts).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::category::Category;
use crate::phonology::{phonify_devanagari, phonify_latin, PhonemeSequence};

/// Weight of a single skip move.
pub const SKIP_PROB: f64 = 1e-4;

pub const DEFAULT_EM_ITERATIONS: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlignmentError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("at least one EM iteration is required")]
    ZeroIterations,
    #[error("no corpus entry could be phonified")]
    NoUsableEntries,
    #[error("entry has an empty side")]
    EmptySide,
    #[error("cost row for {0:?} sums to {1}")]
    Unnormalized(String, f64),
}

/// One English/Hindi named-entity pair from a parallel corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelEntry {
    english: String,
    hindi: String,
    category: Option<Category>,
}

impl ParallelEntry {
    pub fn new(
        english: &str,
        hindi: &str,
        category: Option<Category>,
    ) -> Result<Self, AlignmentError> {
        let (english, hindi) = (english.trim(), hindi.trim());
        if english.is_empty() || hindi.is_empty() {
            return Err(AlignmentError::EmptySide);
        }
        Ok(ParallelEntry {
            english: english.to_string(),
            hindi: hindi.to_string(),
            category,
        })
    }

    pub fn english(&self) -> &str {
        &self.english
    }

    pub fn hindi(&self) -> &str {
        &self.hindi
    }

    pub fn category(&self) -> Option<Category> {
        self.category
    }
}

/// A corpus line that could not be used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusWarning {
    /// 1-based line number in the corpus file, or entry index + 1 when the
    /// entry did not come from a file.
    pub line: usize,
    pub message: String,
}

/// Parses the `english<TAB>hindi[<TAB>category]` corpus format.
///
/// Blank lines and `#` comments are ignored; malformed lines become
/// warnings and are skipped.
pub fn parse_corpus(text: &str) -> (Vec<(usize, ParallelEntry)>, Vec<CorpusWarning>) {
    let mut entries = Vec::new();
    let mut warnings = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let warn = |message: String| CorpusWarning {
            line: line_no,
            message,
        };
        if !(2..=3).contains(&cols.len()) {
            warnings.push(warn(format!(
                "expected 2 or 3 tab-separated columns, found {}",
                cols.len()
            )));
            continue;
        }
        let category = match cols.get(2).map(|c| c.parse::<Category>()).transpose() {
            Ok(c) => c,
            Err(e) => {
                warnings.push(warn(e.to_string()));
                continue;
            }
        };
        match ParallelEntry::new(cols[0], cols[1], category) {
            Ok(entry) => entries.push((line_no, entry)),
            Err(e) => warnings.push(warn(e.to_string())),
        }
    }
    (entries, warnings)
}

/// One aligned (English phoneme, Hindi phoneme) correspondence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AlignedPair {
    /// Case-folded English phoneme.
    pub e: String,
    pub h: String,
}

impl AlignedPair {
    pub fn new(e: impl Into<String>, h: impl Into<String>) -> Self {
        AlignedPair {
            e: e.into(),
            h: h.into(),
        }
    }
}

/// Match probabilities `P(h|e)`, normalized per English phoneme.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AlignmentCostTable {
    rows: BTreeMap<String, BTreeMap<String, f64>>,
}

impl AlignmentCostTable {
    /// Every English phoneme pairs with every Hindi phoneme at `1/|h_vocab|`.
    pub fn uniform<'a>(
        e_vocab: impl IntoIterator<Item = &'a str>,
        h_vocab: impl IntoIterator<Item = &'a str>,
    ) -> Self {
        let h_vocab: BTreeSet<&str> = h_vocab.into_iter().collect();
        let p = 1.0 / h_vocab.len() as f64;
        let rows = e_vocab
            .into_iter()
            .map(|e| {
                let row = h_vocab.iter().map(|h| (h.to_string(), p)).collect();
                (e.to_string(), row)
            })
            .collect();
        AlignmentCostTable { rows }
    }

    /// Builds a table from raw rows, rejecting rows that do not sum to one.
    pub fn from_rows(
        rows: BTreeMap<String, BTreeMap<String, f64>>,
    ) -> Result<Self, AlignmentError> {
        let table = AlignmentCostTable { rows };
        table.check_normalized()?;
        Ok(table)
    }

    pub fn prob(&self, e: &str, h: &str) -> f64 {
        self.rows
            .get(e)
            .and_then(|row| row.get(h))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn rows(&self) -> &BTreeMap<String, BTreeMap<String, f64>> {
        &self.rows
    }

    pub fn check_normalized(&self) -> Result<(), AlignmentError> {
        for (e, row) in &self.rows {
            let sum: f64 = row.values().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(AlignmentError::Unnormalized(e.clone(), sum));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Move {
    Start,
    Match,
    SkipE,
    SkipH,
}

/// Result of a best-path monotone alignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// `(english index, hindi index)` of every match move, in order.
    pub matches: Vec<(usize, usize)>,
    pub pairs: Vec<AlignedPair>,
    /// Natural log of the path weight.
    pub log_prob: f64,
}

/// Highest-weight monotone alignment of two phoneme sequences.
pub fn align_monotone(
    e_seq: &PhonemeSequence,
    h_seq: &PhonemeSequence,
    costs: &AlignmentCostTable,
) -> Alignment {
    align_keys(&e_seq.keys(), &h_seq.keys(), costs)
}

/// [`align_monotone`] over already-folded phoneme keys.
///
/// At equal scores a match is preferred over skip-e, and skip-e over skip-h.
pub fn align_keys(e: &[String], h: &[String], costs: &AlignmentCostTable) -> Alignment {
    let (n, m) = (e.len(), h.len());
    let skip = SKIP_PROB.ln();
    let mut score = vec![vec![f64::NEG_INFINITY; m + 1]; n + 1];
    let mut back = vec![vec![Move::Start; m + 1]; n + 1];
    score[0][0] = 0.0;
    for i in 0..=n {
        for j in 0..=m {
            if i == 0 && j == 0 {
                continue;
            }
            let mut best = (f64::NEG_INFINITY, Move::Start);
            let mut offer = |s: f64, mv: Move| {
                if s > best.0 {
                    best = (s, mv);
                }
            };
            if i > 0 && j > 0 {
                offer(
                    score[i - 1][j - 1] + costs.prob(&e[i - 1], &h[j - 1]).ln(),
                    Move::Match,
                );
            }
            if i > 0 {
                offer(score[i - 1][j] + skip, Move::SkipE);
            }
            if j > 0 {
                offer(score[i][j - 1] + skip, Move::SkipH);
            }
            score[i][j] = best.0;
            back[i][j] = best.1;
        }
    }

    let mut matches = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        match back[i][j] {
            Move::Match => {
                matches.push((i - 1, j - 1));
                i -= 1;
                j -= 1;
            }
            Move::SkipE => i -= 1,
            Move::SkipH => j -= 1,
            Move::Start => unreachable!("skip moves always reach the origin"),
        }
    }
    matches.reverse();
    let pairs = matches
        .iter()
        .map(|&(a, b)| AlignedPair::new(e[a].clone(), h[b].clone()))
        .collect();
    Alignment {
        matches,
        pairs,
        log_prob: score[n][m],
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Accumulates expected match counts for one sequence pair into `counts`
/// and returns the log of the total path weight.
fn accumulate_soft_counts(
    e: &[String],
    h: &[String],
    costs: &AlignmentCostTable,
    counts: &mut BTreeMap<(String, String), f64>,
) -> f64 {
    let (n, m) = (e.len(), h.len());
    let skip = SKIP_PROB.ln();
    let match_lp: Vec<Vec<f64>> = e
        .iter()
        .map(|ei| h.iter().map(|hj| costs.prob(ei, hj).ln()).collect())
        .collect();

    let mut fwd = vec![vec![f64::NEG_INFINITY; m + 1]; n + 1];
    fwd[0][0] = 0.0;
    for i in 0..=n {
        for j in 0..=m {
            if i == 0 && j == 0 {
                continue;
            }
            let mut acc = f64::NEG_INFINITY;
            if i > 0 && j > 0 {
                acc = log_add(acc, fwd[i - 1][j - 1] + match_lp[i - 1][j - 1]);
            }
            if i > 0 {
                acc = log_add(acc, fwd[i - 1][j] + skip);
            }
            if j > 0 {
                acc = log_add(acc, fwd[i][j - 1] + skip);
            }
            fwd[i][j] = acc;
        }
    }

    let mut bwd = vec![vec![f64::NEG_INFINITY; m + 1]; n + 1];
    bwd[n][m] = 0.0;
    for i in (0..=n).rev() {
        for j in (0..=m).rev() {
            if i == n && j == m {
                continue;
            }
            let mut acc = f64::NEG_INFINITY;
            if i < n && j < m {
                acc = log_add(acc, match_lp[i][j] + bwd[i + 1][j + 1]);
            }
            if i < n {
                acc = log_add(acc, skip + bwd[i + 1][j]);
            }
            if j < m {
                acc = log_add(acc, skip + bwd[i][j + 1]);
            }
            bwd[i][j] = acc;
        }
    }

    let total = fwd[n][m];
    for i in 0..n {
        for j in 0..m {
            let lp = fwd[i][j] + match_lp[i][j] + bwd[i + 1][j + 1] - total;
            if lp > f64::NEG_INFINITY {
                *counts.entry((e[i].clone(), h[j].clone())).or_insert(0.0) += lp.exp();
            }
        }
    }
    total
}

/// Phoneme keys of one usable training pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingPair {
    pub english: Vec<String>,
    pub hindi: Vec<String>,
}

/// Phonifies a corpus into token-level training pairs.
///
/// Multi-word entries are split on whitespace and paired token by token;
/// entries whose sides have different token counts, or that fail
/// phonification, are reported and skipped.
pub fn prepare_corpus(corpus: &[ParallelEntry]) -> (Vec<TrainingPair>, Vec<CorpusWarning>) {
    let mut pairs = Vec::new();
    let mut warnings = Vec::new();
    for (idx, entry) in corpus.iter().enumerate() {
        let warn = |message: String| CorpusWarning {
            line: idx + 1,
            message: format!("{}\t{}: {}", entry.english, entry.hindi, message),
        };
        let en_tokens: Vec<&str> = entry.english.split_whitespace().collect();
        let hi_tokens: Vec<&str> = entry.hindi.split_whitespace().collect();
        if en_tokens.len() != hi_tokens.len() {
            warnings.push(warn(format!(
                "token count mismatch ({} vs {})",
                en_tokens.len(),
                hi_tokens.len()
            )));
            continue;
        }
        let phonified: Result<Vec<TrainingPair>, String> = en_tokens
            .iter()
            .zip(&hi_tokens)
            .map(|(en, hi)| {
                let e = phonify_latin(en).map_err(|err| err.to_string())?;
                let h = phonify_devanagari(hi).map_err(|err| err.to_string())?;
                Ok(TrainingPair {
                    english: e.keys(),
                    hindi: h.keys(),
                })
            })
            .collect();
        match phonified {
            Ok(p) => pairs.extend(p),
            Err(message) => warnings.push(warn(message)),
        }
    }
    (pairs, warnings)
}

/// Output of EM training.
#[derive(Debug, Clone)]
pub struct EmTraining {
    pub table: AlignmentCostTable,
    /// Corpus log-likelihood under the initial table and after every
    /// iteration (`iterations + 1` values).
    pub log_likelihood: Vec<f64>,
    pub pairs: Vec<TrainingPair>,
    pub skipped: Vec<CorpusWarning>,
}

impl EmTraining {
    /// Best-path alignment of every training pair under the trained table.
    pub fn align_all(&self) -> Vec<Vec<AlignedPair>> {
        self.pairs
            .iter()
            .map(|p| align_keys(&p.english, &p.hindi, &self.table).pairs)
            .collect()
    }
}

fn cooccurrence_uniform(pairs: &[TrainingPair]) -> AlignmentCostTable {
    let mut partners: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for p in pairs {
        for e in &p.english {
            partners
                .entry(e.as_str())
                .or_default()
                .extend(p.hindi.iter().map(String::as_str));
        }
    }
    let rows = partners
        .into_iter()
        .map(|(e, hs)| {
            let prob = 1.0 / hs.len() as f64;
            let row = hs.into_iter().map(|h| (h.to_string(), prob)).collect();
            (e.to_string(), row)
        })
        .collect();
    AlignmentCostTable { rows }
}

fn e_step(
    pairs: &[TrainingPair],
    table: &AlignmentCostTable,
) -> (BTreeMap<(String, String), f64>, f64) {
    let mut counts = BTreeMap::new();
    let ll = pairs
        .iter()
        .map(|p| accumulate_soft_counts(&p.english, &p.hindi, table, &mut counts))
        .sum();
    (counts, ll)
}

fn m_step(
    counts: BTreeMap<(String, String), f64>,
    previous: &AlignmentCostTable,
) -> AlignmentCostTable {
    let mut rows: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for ((e, h), c) in counts {
        if c > 0.0 {
            rows.entry(e).or_default().insert(h, c);
        }
    }
    for row in rows.values_mut() {
        let total: f64 = row.values().sum();
        row.values_mut().for_each(|c| *c /= total);
    }
    // rows that received no mass keep their previous estimate
    for (e, row) in &previous.rows {
        rows.entry(e.clone()).or_insert_with(|| row.clone());
    }
    AlignmentCostTable { rows }
}

/// Estimates `P(h|e)` match probabilities from a parallel corpus.
///
/// Starts from a table that is uniform over each English phoneme's
/// co-occurring Hindi phonemes and runs a fixed number of EM iterations.
pub fn em_train_alignment(
    corpus: &[ParallelEntry],
    iterations: usize,
) -> Result<EmTraining, AlignmentError> {
    if corpus.is_empty() {
        return Err(AlignmentError::EmptyCorpus);
    }
    if iterations == 0 {
        return Err(AlignmentError::ZeroIterations);
    }
    let (pairs, skipped) = prepare_corpus(corpus);
    if pairs.is_empty() {
        return Err(AlignmentError::NoUsableEntries);
    }
    let mut table = cooccurrence_uniform(&pairs);
    let mut log_likelihood = Vec::with_capacity(iterations + 1);
    for _ in 0..iterations {
        let (counts, ll) = e_step(&pairs, &table);
        log_likelihood.push(ll);
        table = m_step(counts, &table);
    }
    log_likelihood.push(e_step(&pairs, &table).1);
    Ok(EmTraining {
        table,
        log_likelihood,
        pairs,
        skipped,
    })
}

/// Counts how often each `(e, h)` pair was aligned.
pub fn pair_counts(aligned: &[Vec<AlignedPair>]) -> BTreeMap<AlignedPair, usize> {
    let mut counts = BTreeMap::new();
    for pair in aligned.iter().flatten() {
        *counts.entry(pair.clone()).or_insert(0) += 1;
    }
    counts
}

/// Renders pair counts as `e<TAB>h<TAB>count` lines.
pub fn render_pair_counts(counts: &BTreeMap<AlignedPair, usize>) -> String {
    let mut out = String::new();
    for (pair, count) in counts {
        let _ = writeln!(out, "{}\t{}\t{}", pair.e, pair.h, count);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn keys(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn entry(en: &str, hi: &str) -> ParallelEntry {
        ParallelEntry::new(en, hi, None).unwrap()
    }

    #[test]
    fn uniform_equal_lengths_pair_positionally() {
        let e = phonify_latin("Radhika").unwrap();
        let h = phonify_devanagari("राधिका").unwrap();
        let costs = AlignmentCostTable::uniform(
            e.keys().iter().map(String::as_str),
            h.keys().iter().map(String::as_str),
        );
        let a = align_monotone(&e, &h, &costs);
        assert_eq!(
            a.pairs,
            vec![
                AlignedPair::new("ra", "रा"),
                AlignedPair::new("dhi", "धि"),
                AlignedPair::new("ka", "का"),
            ]
        );

        let e = phonify_latin("Amar").unwrap();
        let h = phonify_devanagari("अमर").unwrap();
        let costs = AlignmentCostTable::uniform(["a", "ma", "r"], ["अ", "म", "र"]);
        let a = align_monotone(&e, &h, &costs);
        assert_eq!(a.matches, vec![(0, 0), (1, 1), (2, 2)]);
        assert_eq!(a.pairs[0], AlignedPair::new("a", "अ"));
    }

    #[test]
    fn length_mismatch_skips_the_unmatched_phoneme() {
        let rows: BTreeMap<String, BTreeMap<String, f64>> = [
            ("a", vec![("x", 1.0)]),
            ("b", vec![("y", 0.5), ("z", 0.5)]),
            ("c", vec![("y", 1.0)]),
            ("d", vec![("z", 1.0)]),
        ]
        .into_iter()
        .map(|(e, row)| {
            (
                e.to_string(),
                row.into_iter().map(|(h, p)| (h.to_string(), p)).collect(),
            )
        })
        .collect();
        let costs = AlignmentCostTable::from_rows(rows).unwrap();
        let a = align_keys(
            &keys(&["a", "b", "c", "d"]),
            &keys(&["x", "y", "z"]),
            &costs,
        );
        // b is skipped: (a,x)(c,y)(d,z) = 1 * 1e-4 beats any path through b
        assert_eq!(a.matches, vec![(0, 0), (2, 1), (3, 2)]);
        assert!((a.log_prob - SKIP_PROB.ln()).abs() < 1e-12);
    }

    #[test]
    fn tie_prefers_match_then_skip_e() {
        let costs = AlignmentCostTable::default();
        // nothing can match: only skips, and skip-e is taken before skip-h
        let a = align_keys(&keys(&["a"]), &keys(&["x"]), &costs);
        assert!(a.matches.is_empty());
        assert!((a.log_prob - 2.0 * SKIP_PROB.ln()).abs() < 1e-12);
    }

    #[test]
    fn single_entry_em_is_certain() {
        let training = em_train_alignment(&[entry("ra", "रा")], 1).unwrap();
        assert_eq!(training.table.prob("ra", "रा"), 1.0);
    }

    #[test]
    fn length_one_em_matches_direct_counts() {
        let corpus = [entry("ra", "रा"), entry("ra", "रा"), entry("ra", "र")];
        let training = em_train_alignment(&corpus, DEFAULT_EM_ITERATIONS).unwrap();
        let p = training.table.prob("ra", "रा");
        assert!((p - 2.0 / 3.0).abs() < 1e-6, "{p}");
        training.table.check_normalized().unwrap();
    }

    /// Syllable inventory used to synthesize a corpus from a known table.
    const GENERATOR: &[(&str, &[(&str, usize)])] = &[
        ("ka", &[("का", 4), ("क", 1)]),
        ("ra", &[("रा", 5)]),
        ("mi", &[("मि", 3), ("मी", 2)]),
        ("tu", &[("तु", 4), ("तू", 1)]),
    ];

    #[test]
    fn em_recovers_generating_table() {
        // Each English syllable is realized with exactly the generating
        // proportions; the order of realizations is shuffled.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut pools: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (e, dist) in GENERATOR {
            let mut pool = Vec::new();
            for (h, weight) in dist.iter() {
                pool.extend(std::iter::repeat_n(*h, weight * 3));
            }
            pool.shuffle(&mut rng);
            pools.insert(e, pool);
        }
        // 20 entries x 3 syllables = 60 slots, 15 per syllable (4 syllables)
        let mut slots: Vec<&str> = GENERATOR
            .iter()
            .flat_map(|(e, _)| std::iter::repeat_n(*e, 15))
            .collect();
        slots.shuffle(&mut rng);
        let mut used: BTreeMap<&str, usize> = BTreeMap::new();
        let mut corpus = Vec::new();
        for chunk in slots.chunks(3) {
            let mut en = String::new();
            let mut hi = String::new();
            for e in chunk {
                let k = used.entry(e).or_insert(0);
                hi.push_str(pools[e][*k]);
                *k += 1;
                en.push_str(e);
            }
            corpus.push(entry(&en, &hi));
        }
        assert_eq!(corpus.len(), 20);

        let training = em_train_alignment(&corpus, DEFAULT_EM_ITERATIONS).unwrap();
        for (e, dist) in GENERATOR {
            let total: usize = dist.iter().map(|(_, w)| w).sum();
            for (h, w) in dist.iter() {
                let truth = *w as f64 / total as f64;
                let got = training.table.prob(e, h);
                assert!(
                    (got - truth).abs() < 0.05,
                    "P({h}|{e}) = {got}, truth {truth}"
                );
            }
        }
    }

    #[test]
    fn em_rejects_bad_input_and_skips_unphonifiable_entries() {
        assert_eq!(
            em_train_alignment(&[], 3).unwrap_err(),
            AlignmentError::EmptyCorpus
        );
        assert_eq!(
            em_train_alignment(&[entry("ra", "रा")], 0).unwrap_err(),
            AlignmentError::ZeroIterations
        );
        let corpus = [
            entry("ra", "रा"),
            entry("r2d2", "आर"),
            entry("New Delhi", "दिल्ली"),
        ];
        let training = em_train_alignment(&corpus, 2).unwrap();
        assert_eq!(training.skipped.len(), 2);
        assert_eq!(training.skipped[0].line, 2);
        assert_eq!(training.pairs.len(), 1);
        assert_eq!(
            em_train_alignment(&[entry("x1", "आर")], 2).unwrap_err(),
            AlignmentError::NoUsableEntries
        );
    }

    #[test]
    fn corpus_format() {
        let text = "# comment\nAmar\tअमर\tPER\n\nbroken line\nIndia\tइंडिया\nDelhi\tदिल्ली\tCITY\n";
        let (entries, warnings) = parse_corpus(text);
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].0, 2);
        assert_eq!(entries[0].1.category(), Some(Category::Person));
        assert_eq!(entries[1].1.category(), None);
        assert_eq!(
            warnings.iter().map(|w| w.line).collect::<Vec<_>>(),
            vec![4, 6]
        );
    }

    #[test]
    fn pair_count_dump() {
        let aligned = vec![
            vec![AlignedPair::new("ra", "रा"), AlignedPair::new("ma", "म")],
            vec![AlignedPair::new("ra", "रा")],
        ];
        let dump = render_pair_counts(&pair_counts(&aligned));
        assert_eq!(dump, "ma\tम\t1\nra\tरा\t2\n");
    }

    fn brute_force_best(e: &[String], h: &[String], costs: &AlignmentCostTable) -> f64 {
        fn go(i: usize, j: usize, e: &[String], h: &[String], c: &AlignmentCostTable) -> f64 {
            if i == e.len() && j == h.len() {
                return 1.0;
            }
            let mut best: f64 = 0.0;
            if i < e.len() && j < h.len() {
                best = best.max(c.prob(&e[i], &h[j]) * go(i + 1, j + 1, e, h, c));
            }
            if i < e.len() {
                best = best.max(SKIP_PROB * go(i + 1, j, e, h, c));
            }
            if j < h.len() {
                best = best.max(SKIP_PROB * go(i, j + 1, e, h, c));
            }
            best
        }
        go(0, 0, e, h, costs)
    }

    fn random_case() -> impl Strategy<Value = (Vec<String>, Vec<String>, AlignmentCostTable)> {
        let alphabet_e = ["a", "b", "c"];
        let alphabet_h = ["x", "y", "z"];
        (
            proptest::collection::vec(0..3usize, 1..=5),
            proptest::collection::vec(0..3usize, 1..=5),
            proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, 3), 3),
        )
            .prop_map(move |(ei, hi, weights)| {
                let rows = alphabet_e
                    .iter()
                    .zip(&weights)
                    .map(|(e, w)| {
                        let total: f64 = w.iter().sum();
                        let row = alphabet_h
                            .iter()
                            .zip(w)
                            .map(|(h, x)| (h.to_string(), x / total))
                            .collect();
                        (e.to_string(), row)
                    })
                    .collect();
                (
                    ei.iter().map(|&i| alphabet_e[i].to_string()).collect(),
                    hi.iter().map(|&i| alphabet_h[i].to_string()).collect(),
                    AlignmentCostTable { rows },
                )
            })
    }

    proptest! {
        #[test]
        fn dp_matches_exhaustive_search((e, h, costs) in random_case()) {
            let a = align_keys(&e, &h, &costs);
            let best = brute_force_best(&e, &h, &costs).ln();
            prop_assert!((a.log_prob - best).abs() < 1e-9, "{} vs {}", a.log_prob, best);
            // the returned matches reproduce the reported weight
            let skips = (e.len() - a.matches.len()) + (h.len() - a.matches.len());
            let recomputed: f64 = a.matches.iter().map(|&(i, j)| costs.prob(&e[i], &h[j]).ln()).sum::<f64>()
                + skips as f64 * SKIP_PROB.ln();
            prop_assert!((recomputed - a.log_prob).abs() < 1e-9);
            for w in a.matches.windows(2) {
                prop_assert!(w[0].0 < w[1].0 && w[0].1 < w[1].1);
            }
        }

        #[test]
        fn em_likelihood_never_decreases(
            words in proptest::collection::vec(
                (proptest::collection::vec(0..4usize, 1..4), proptest::collection::vec(0..4usize, 1..4)),
                1..8,
            )
        ) {
            let en = ["ka", "ra", "mi", "tu"];
            let hi = ["का", "रा", "मि", "तु"];
            let corpus: Vec<ParallelEntry> = words
                .iter()
                .map(|(a, b)| {
                    let e: String = a.iter().map(|&i| en[i]).collect();
                    let h: String = b.iter().map(|&i| hi[i]).collect();
                    entry(&e, &h)
                })
                .collect();
            let training = em_train_alignment(&corpus, 6).unwrap();
            for w in training.log_likelihood.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0), "{:?}", training.log_likelihood);
            }
            training.table.check_normalized().unwrap();
        }
    }
}
