//! HMM probability tables for English-to-Hindi phoneme transliteration.
//!
//! * emission `P(e|h) = (Freq(h,e) + k) / (Freq(h) + k·|E|)`
//! * transition `P(h'|h) = (Freq(h→h') + k) / (Freq(h) + k·(|H|+1))`
//!
//! where every training entry's Hindi phoneme sequence is wrapped in
//! [`BOS`]/[`EOS`]. With `k = 0` these are plain relative frequencies.
//!
//! Rows are stored sparsely: observed targets carry their smoothed value and
//! every other target of the row shares the row's `floor` (`k / denominator`).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::alignment::AlignedPair;

/// Start-of-word state, only ever a transition source.
pub const BOS: &str = "<s>";
/// End-of-word state, only ever a transition target.
pub const EOS: &str = "</s>";

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_SMOOTHING_K: f64 = 0.1;

const ROW_SUM_TOLERANCE: f64 = 1e-9;
/// Target column marking a row's floor in the model file.
const FLOOR_TARGET: &str = "*";

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("smoothing constant must be a finite value >= 0, got {0}")]
    BadSmoothing(f64),
    #[error("aligned corpus has no aligned pairs")]
    EmptyCorpus,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported model format version {found:?} (expected {FORMAT_VERSION})")]
    Version { found: String },
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One conditional distribution, stored sparsely.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProbRow {
    probs: BTreeMap<String, f64>,
    floor: f64,
}

impl ProbRow {
    pub fn new(probs: BTreeMap<String, f64>, floor: f64) -> Self {
        ProbRow { probs, floor }
    }

    pub fn get(&self, target: &str) -> f64 {
        self.probs.get(target).copied().unwrap_or(self.floor)
    }

    pub fn probs(&self) -> &BTreeMap<String, f64> {
        &self.probs
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Total mass over a target vocabulary of `vocab_size` symbols.
    pub fn total(&self, vocab_size: usize) -> f64 {
        let unseen = vocab_size.saturating_sub(self.probs.len());
        self.probs.values().sum::<f64>() + self.floor * unseen as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransliterationModel {
    /// h -> e
    emission: BTreeMap<String, ProbRow>,
    /// h (or BOS) -> h (or EOS)
    transition: BTreeMap<String, ProbRow>,
    h_vocab: BTreeSet<String>,
    e_vocab: BTreeSet<String>,
    smoothing_k: f64,
    version: u32,
    /// e -> observed (h, P(e|h)), by descending probability then h.
    by_english: BTreeMap<String, Vec<(String, f64)>>,
}

fn check_k(k: f64) -> Result<(), ModelError> {
    if k.is_finite() && k >= 0.0 {
        Ok(())
    } else {
        Err(ModelError::BadSmoothing(k))
    }
}

fn smoothed_row(counts: &BTreeMap<String, usize>, k: f64, vocab_size: usize) -> ProbRow {
    let freq: usize = counts.values().sum();
    let denom = freq as f64 + k * vocab_size as f64;
    let probs = counts
        .iter()
        .map(|(t, &c)| (t.clone(), (c as f64 + k) / denom))
        .collect();
    ProbRow::new(probs, k / denom)
}

/// Estimates emission and transition tables from aligned entries.
pub fn estimate(
    aligned_corpus: &[Vec<AlignedPair>],
    smoothing_k: f64,
) -> Result<TransliterationModel, ModelError> {
    check_k(smoothing_k)?;
    let mut emission_counts: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let mut transition_counts: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let mut e_vocab = BTreeSet::new();

    for entry in aligned_corpus.iter().filter(|pairs| !pairs.is_empty()) {
        let mut prev = BOS;
        for pair in entry {
            *emission_counts
                .entry(pair.h.clone())
                .or_default()
                .entry(pair.e.clone())
                .or_default() += 1;
            *transition_counts
                .entry(prev.to_string())
                .or_default()
                .entry(pair.h.clone())
                .or_default() += 1;
            e_vocab.insert(pair.e.clone());
            prev = &pair.h;
        }
        *transition_counts
            .entry(prev.to_string())
            .or_default()
            .entry(EOS.to_string())
            .or_default() += 1;
    }
    if emission_counts.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }

    let h_size = emission_counts.len();
    let emission = emission_counts
        .iter()
        .map(|(h, row)| (h.clone(), smoothed_row(row, smoothing_k, e_vocab.len())))
        .collect();
    let transition = transition_counts
        .iter()
        .map(|(h, row)| (h.clone(), smoothed_row(row, smoothing_k, h_size + 1)))
        .collect();
    TransliterationModel::from_tables(emission, transition, smoothing_k)
}

impl TransliterationModel {
    /// Assembles a model from explicit rows and validates it.
    ///
    /// The Hindi vocabulary is the set of emission sources and the English
    /// vocabulary the union of emission targets.
    pub fn from_tables(
        emission: BTreeMap<String, ProbRow>,
        transition: BTreeMap<String, ProbRow>,
        smoothing_k: f64,
    ) -> Result<Self, ModelError> {
        check_k(smoothing_k)?;
        let h_vocab: BTreeSet<String> = emission.keys().cloned().collect();
        let e_vocab: BTreeSet<String> = emission
            .values()
            .flat_map(|row| row.probs.keys().cloned())
            .collect();
        let mut by_english: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
        for (h, row) in &emission {
            for (e, &p) in &row.probs {
                if p > row.floor {
                    by_english
                        .entry(e.clone())
                        .or_default()
                        .push((h.clone(), p));
                }
            }
        }
        for cands in by_english.values_mut() {
            cands.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        }
        let model = TransliterationModel {
            emission,
            transition,
            h_vocab,
            e_vocab,
            smoothing_k,
            version: FORMAT_VERSION,
            by_english,
        };
        model.validate()?;
        Ok(model)
    }

    /// Checks structural invariants and that every row sums to one.
    pub fn validate(&self) -> Result<(), ModelError> {
        let invalid = |msg: String| Err(ModelError::Invalid(msg));
        if self.h_vocab.contains(BOS) || self.h_vocab.contains(EOS) {
            return invalid("boundary symbol used as a Hindi phoneme".into());
        }
        if self.e_vocab.contains(FLOOR_TARGET) || self.h_vocab.contains(FLOOR_TARGET) {
            return invalid(format!("{FLOOR_TARGET:?} is reserved"));
        }
        let check_row = |name: &str, src: &str, row: &ProbRow, size: usize| {
            for (t, &p) in &row.probs {
                if !(p > 0.0 && p <= 1.0) {
                    return invalid(format!("{name} {src} -> {t} has probability {p}"));
                }
            }
            if !(0.0..1.0).contains(&row.floor) {
                return invalid(format!("{name} row {src} has floor {}", row.floor));
            }
            let total = row.total(size);
            if (total - 1.0).abs() > ROW_SUM_TOLERANCE {
                return invalid(format!("{name} row {src} sums to {total}"));
            }
            Ok(())
        };
        for (h, row) in &self.emission {
            check_row("emission", h, row, self.e_vocab.len())?;
        }
        if !self.transition.contains_key(BOS) {
            return invalid("transition table has no start row".into());
        }
        for h in &self.h_vocab {
            if !self.transition.contains_key(h) {
                return invalid(format!("transition table has no row for {h}"));
            }
        }
        for (src, row) in &self.transition {
            if src == EOS {
                return invalid("end symbol used as a transition source".into());
            }
            if src != BOS && !self.h_vocab.contains(src) {
                return invalid(format!("transition source {src} is not a Hindi phoneme"));
            }
            for t in row.probs.keys() {
                if t == BOS {
                    return invalid("start symbol used as a transition target".into());
                }
                if t != EOS && !self.h_vocab.contains(t) {
                    return invalid(format!("transition target {t} is not a Hindi phoneme"));
                }
            }
            check_row("transition", src, row, self.h_vocab.len() + 1)?;
        }
        Ok(())
    }

    /// `P(e|h)`; unseen pairs get the row floor, unknown `h` a uniform value.
    pub fn emission_prob(&self, h: &str, e: &str) -> f64 {
        match self.emission.get(h) {
            Some(row) => row.get(e),
            None if self.e_vocab.is_empty() => 0.0,
            None => 1.0 / self.e_vocab.len() as f64,
        }
    }

    /// `P(next|prev)`, with `prev` possibly [`BOS`] and `next` possibly [`EOS`].
    pub fn transition_prob(&self, prev: &str, next: &str) -> f64 {
        match self.transition.get(prev) {
            Some(row) => row.get(next),
            None => 1.0 / (self.h_vocab.len() + 1) as f64,
        }
    }

    /// Composite score of `h` at one position: emission times incoming and
    /// outgoing transition. Not normalized over `h`.
    pub fn position_score(&self, h_prev: &str, h: &str, h_next: &str, e: &str) -> f64 {
        self.emission_prob(h, e) * self.transition_prob(h_prev, h) * self.transition_prob(h, h_next)
    }

    /// Hindi phonemes observed with `e`, best first.
    pub fn observed_sources(&self, e: &str) -> &[(String, f64)] {
        self.by_english.get(e).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn emission(&self) -> &BTreeMap<String, ProbRow> {
        &self.emission
    }

    pub fn transition(&self) -> &BTreeMap<String, ProbRow> {
        &self.transition
    }

    pub fn h_vocabulary(&self) -> &BTreeSet<String> {
        &self.h_vocab
    }

    pub fn e_vocabulary(&self) -> &BTreeSet<String> {
        &self.e_vocab
    }

    pub fn smoothing_k(&self) -> f64 {
        self.smoothing_k
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    /// Serializes the model; identical models give byte-identical text.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "[meta]");
        let _ = writeln!(out, "version\t{}", self.version);
        let _ = writeln!(out, "smoothing_k\t{}", fmt_prob(self.smoothing_k));
        let _ = writeln!(out, "e_vocab_size\t{}", self.e_vocab.len());
        let _ = writeln!(out, "h_vocab_size\t{}", self.h_vocab.len());
        for (name, table) in [
            ("emission", &self.emission),
            ("transition", &self.transition),
        ] {
            let _ = writeln!(out, "[{name}]");
            for (src, row) in table {
                if row.floor > 0.0 {
                    let _ = writeln!(out, "{src}\t{FLOOR_TARGET}\t{}", fmt_prob(row.floor));
                }
                for (t, &p) in &row.probs {
                    let _ = writeln!(out, "{src}\t{t}\t{}", fmt_prob(p));
                }
            }
        }
        out.push_str("[end]\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ModelError> {
        parse_model(text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
fn fmt_prob(p: f64) -> String {
    format!("{p:.16e}")
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Start,
    Meta,
    Emission,
    Transition,
    End,
}

fn parse_model(text: &str) -> Result<TransliterationModel, ModelError> {
    let parse_err = |line: usize, message: String| ModelError::Parse { line, message };
    let mut section = Section::Start;
    let mut meta: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut tables: [BTreeMap<String, ProbRow>; 2] = Default::default();
    let mut last_line = 0;

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        if section == Section::End {
            return Err(parse_err(line_no, "content after [end]".into()));
        }
        let next = match line {
            "[meta]" => Some((Section::Start, Section::Meta)),
            "[emission]" => Some((Section::Meta, Section::Emission)),
            "[transition]" => Some((Section::Emission, Section::Transition)),
            "[end]" => Some((Section::Transition, Section::End)),
            _ => None,
        };
        if let Some((expected, target)) = next {
            if section != expected {
                return Err(parse_err(
                    line_no,
                    format!("unexpected section header {line}"),
                ));
            }
            if target == Section::Emission {
                check_version(&meta)?;
            }
            section = target;
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        match section {
            Section::Start | Section::End => {
                return Err(parse_err(line_no, "expected [meta] header".into()))
            }
            Section::Meta => {
                let [key, value] = cols[..] else {
                    return Err(parse_err(line_no, "expected key<TAB>value".into()));
                };
                if meta
                    .insert(key.to_string(), (line_no, value.to_string()))
                    .is_some()
                {
                    return Err(parse_err(line_no, format!("duplicate meta key {key}")));
                }
            }
            Section::Emission | Section::Transition => {
                let [src, target, prob] = cols[..] else {
                    return Err(parse_err(
                        line_no,
                        "expected source<TAB>target<TAB>probability".into(),
                    ));
                };
                let p: f64 = prob
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad probability {prob:?}")))?;
                let table = &mut tables[usize::from(section == Section::Transition)];
                let row = table.entry(src.to_string()).or_default();
                if target == FLOOR_TARGET {
                    row.floor = p;
                } else if row.probs.insert(target.to_string(), p).is_some() {
                    return Err(parse_err(
                        line_no,
                        format!("duplicate entry {src} -> {target}"),
                    ));
                }
            }
        }
    }
    if section != Section::End {
        return Err(parse_err(
            last_line + 1,
            "truncated model file (missing [end])".into(),
        ));
    }

    let meta_value = |key: &str| -> Result<(usize, &str), ModelError> {
        meta.get(key)
            .map(|(line, v)| (*line, v.as_str()))
            .ok_or_else(|| ModelError::Invalid(format!("missing meta key {key}")))
    };
    for key in meta.keys() {
        if !["version", "smoothing_k", "e_vocab_size", "h_vocab_size"].contains(&key.as_str()) {
            return Err(ModelError::Invalid(format!("unknown meta key {key}")));
        }
    }
    let (line, k) = meta_value("smoothing_k")?;
    let k: f64 = k
        .parse()
        .map_err(|_| parse_err(line, format!("bad smoothing constant {k:?}")))?;
    let size = |key: &str| -> Result<usize, ModelError> {
        let (line, v) = meta_value(key)?;
        v.parse()
            .map_err(|_| parse_err(line, format!("bad {key} {v:?}")))
    };
    let (e_size, h_size) = (size("e_vocab_size")?, size("h_vocab_size")?);

    let [emission, transition] = tables;
    let model = TransliterationModel::from_tables(emission, transition, k)?;
    if model.e_vocab.len() != e_size || model.h_vocab.len() != h_size {
        return Err(ModelError::Invalid(format!(
            "vocabulary sizes {}/{} disagree with header {e_size}/{h_size}",
            model.e_vocab.len(),
            model.h_vocab.len()
        )));
    }
    Ok(model)
}

fn check_version(meta: &BTreeMap<String, (usize, String)>) -> Result<(), ModelError> {
    match meta.get("version") {
        Some((_, v)) if v.parse::<u32>() == Ok(FORMAT_VERSION) => Ok(()),
        Some((_, v)) => Err(ModelError::Version { found: v.clone() }),
        None => Err(ModelError::Invalid("missing meta key version".into())),
    }
}
