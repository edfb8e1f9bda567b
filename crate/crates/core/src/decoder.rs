//! Viterbi decoding of English phoneme sequences into Hindi phonemes.
//!
//! The decoder maximizes, over the per-position candidate sets,
//!
//! ```text
//! P(h1|BOS) · Π P(ei|hi) · Π P(hi+1|hi) · P(EOS|hn)
//! ```
//!
//! in the log domain. Every composite position score
//! `P(ei|hi) · P(hi|hi-1) · P(hi+1|hi)` is a factor of this product, with the
//! interior transitions shared between neighbours. Among equal-scoring paths
//! the lexicographically smallest Hindi sequence wins.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{TransliterationModel, BOS, EOS};
use crate::phonology::{phonify_latin, PhonemeSequence, PhonifyError};

pub const DEFAULT_TOP_K: usize = 10;
pub const UNK_MARKER: &str = "<unk>";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error("nothing to decode")]
    EmptyInput,
    #[error("unseen English phoneme {phoneme:?} at position {position}")]
    UnseenPhoneme { phoneme: String, position: usize },
    #[error("every candidate path has zero probability")]
    NoViablePath,
    #[error("no transliteration model loaded")]
    NoModel,
    #[error(transparent)]
    Phonify(#[from] PhonifyError),
}

/// What to emit when a word cannot be decoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FallbackPolicy {
    #[default]
    Error,
    CopySource,
    UnkMarker,
}

impl FromStr for FallbackPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "error" => Ok(FallbackPolicy::Error),
            "copy" => Ok(FallbackPolicy::CopySource),
            "unk" => Ok(FallbackPolicy::UnkMarker),
            other => Err(format!(
                "unknown fallback policy {other:?} (expected error|copy|unk)"
            )),
        }
    }
}

impl fmt::Display for FallbackPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FallbackPolicy::Error => "error",
            FallbackPolicy::CopySource => "copy",
            FallbackPolicy::UnkMarker => "unk",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub h: String,
    pub emission: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoding {
    pub hindi_sequence: Vec<String>,
    /// Natural-log score of the whole path.
    pub score: f64,
    /// Composite emission × incoming × outgoing transition score per position.
    pub per_position: Vec<f64>,
}

impl Decoding {
    pub fn text(&self) -> String {
        self.hindi_sequence.concat()
    }
}

/// Hindi phonemes seen with `e`, by descending emission then code point,
/// truncated to `top_k`. Empty when `e` was never observed.
pub fn candidates(m: &TransliterationModel, e: &str, top_k: usize) -> Vec<Candidate> {
    m.observed_sources(e)
        .iter()
        .take(top_k)
        .map(|(h, p)| Candidate {
            h: h.clone(),
            emission: *p,
        })
        .collect()
}

pub fn viterbi(
    m: &TransliterationModel,
    e_seq: &PhonemeSequence,
    top_k: usize,
) -> Result<Decoding, DecodeError> {
    viterbi_keys(m, &e_seq.keys(), top_k)
}

/// [`viterbi`] over case-folded English phoneme keys.
pub fn viterbi_keys(
    m: &TransliterationModel,
    e_keys: &[String],
    top_k: usize,
) -> Result<Decoding, DecodeError> {
    if e_keys.is_empty() {
        return Err(DecodeError::EmptyInput);
    }
    let lattice: Vec<Vec<Candidate>> = e_keys
        .iter()
        .enumerate()
        .map(|(position, e)| {
            let c = candidates(m, e, top_k.max(1));
            if c.is_empty() {
                Err(DecodeError::UnseenPhoneme {
                    phoneme: e.clone(),
                    position,
                })
            } else {
                Ok(c)
            }
        })
        .collect::<Result<_, _>>()?;

    let n = lattice.len();
    let mut delta: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(n);
    // rank[t][j]: position of the best prefix ending in candidate j among all
    // best prefixes at step t, in lexicographic order.
    let mut rank: Vec<Vec<usize>> = Vec::with_capacity(n);

    delta.push(
        lattice[0]
            .iter()
            .map(|c| m.transition_prob(BOS, &c.h).ln() + c.emission.ln())
            .collect(),
    );
    back.push(vec![0; lattice[0].len()]);
    rank.push(rank_states(&lattice[0], |_| 0));

    for t in 1..n {
        let (prev_cells, prev_rank) = (&delta[t - 1], &rank[t - 1]);
        let mut cells = Vec::with_capacity(lattice[t].len());
        let mut ptrs = Vec::with_capacity(lattice[t].len());
        for cand in &lattice[t] {
            let mut best = (
                prev_cells[0] + m.transition_prob(&lattice[t - 1][0].h, &cand.h).ln(),
                0,
            );
            for (i, prev) in lattice[t - 1].iter().enumerate().skip(1) {
                let v = prev_cells[i] + m.transition_prob(&prev.h, &cand.h).ln();
                if v > best.0 || (v == best.0 && prev_rank[i] < prev_rank[best.1]) {
                    best = (v, i);
                }
            }
            cells.push(best.0 + cand.emission.ln());
            ptrs.push(best.1);
        }
        rank.push(rank_states(&lattice[t], |j| prev_rank[ptrs[j]]));
        delta.push(cells);
        back.push(ptrs);
    }

    let last = &lattice[n - 1];
    let mut best = (f64::NEG_INFINITY, None::<usize>);
    for (j, cand) in last.iter().enumerate() {
        let v = delta[n - 1][j] + m.transition_prob(&cand.h, EOS).ln();
        let better = match best.1 {
            None => true,
            Some(b) => v > best.0 || (v == best.0 && rank[n - 1][j] < rank[n - 1][b]),
        };
        if better {
            best = (v, Some(j));
        }
    }
    let (score, Some(mut j)) = best else {
        unreachable!("lattice columns are non-empty")
    };
    if score == f64::NEG_INFINITY {
        return Err(DecodeError::NoViablePath);
    }

    let mut path = vec![0; n];
    for t in (0..n).rev() {
        path[t] = j;
        j = back[t][j];
    }
    let hindi_sequence: Vec<String> = path
        .iter()
        .enumerate()
        .map(|(t, &j)| lattice[t][j].h.clone())
        .collect();
    let per_position = (0..n)
        .map(|t| {
            let prev = if t == 0 { BOS } else { &hindi_sequence[t - 1] };
            let next = hindi_sequence.get(t + 1).map_or(EOS, String::as_str);
            m.position_score(prev, &hindi_sequence[t], next, &e_keys[t])
        })
        .collect();
    Ok(Decoding {
        hindi_sequence,
        score,
        per_position,
    })
}

/// Orders the candidates of one step by (rank of their best prefix, own
/// phoneme) and returns each candidate's position in that order.
fn rank_states(column: &[Candidate], prefix_rank: impl Fn(usize) -> usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..column.len()).collect();
    order.sort_by(|&a, &b| {
        prefix_rank(a)
            .cmp(&prefix_rank(b))
            .then_with(|| column[a].h.cmp(&column[b].h))
    });
    let mut ranks = vec![0; column.len()];
    for (r, j) in order.into_iter().enumerate() {
        ranks[j] = r;
    }
    ranks
}

/// Result of transliterating one word.
#[derive(Debug, Clone, PartialEq)]
pub struct Transliteration {
    pub output: String,
    /// Present when decoding succeeded.
    pub decoding: Option<Decoding>,
    /// The error that triggered the fallback, if one was applied.
    pub fallback: Option<DecodeError>,
}

/// Phonifies `word`, decodes it and joins the Hindi phonemes.
///
/// Any decoding failure (including a word that is not Latin-script) is
/// handled by `fallback`; with [`FallbackPolicy::Error`] it is returned.
pub fn transliterate(
    m: &TransliterationModel,
    word: &str,
    fallback: FallbackPolicy,
    top_k: usize,
) -> Result<Transliteration, DecodeError> {
    let decoded = phonify_latin(word)
        .map_err(DecodeError::from)
        .and_then(|seq| viterbi(m, &seq, top_k));
    match decoded {
        Ok(decoding) => Ok(Transliteration {
            output: decoding.text(),
            decoding: Some(decoding),
            fallback: None,
        }),
        Err(err) => apply_fallback(word, fallback, err),
    }
}

pub(crate) fn apply_fallback(
    word: &str,
    policy: FallbackPolicy,
    err: DecodeError,
) -> Result<Transliteration, DecodeError> {
    let output = match policy {
        FallbackPolicy::Error => return Err(err),
        FallbackPolicy::CopySource => word.to_string(),
        FallbackPolicy::UnkMarker => UNK_MARKER.to_string(),
    };
    Ok(Transliteration {
        output,
        decoding: None,
        fallback: Some(err),
    })
}
