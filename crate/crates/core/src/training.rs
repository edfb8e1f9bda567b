//! Corpus text to trained model: parse, align with EM, estimate.

use thiserror::Error;

use crate::alignment::{
    em_train_alignment, parse_corpus, AlignedPair, AlignmentError, CorpusWarning, EmTraining,
};
use crate::model::{estimate, ModelError, TransliterationModel};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: TransliterationModel,
    /// Corpus entries that parsed.
    pub entries: usize,
    /// Token-level pairs that reached the aligner.
    pub training_pairs: usize,
    /// Skipped lines, numbered as in the corpus file.
    pub warnings: Vec<CorpusWarning>,
    pub aligned: Vec<Vec<AlignedPair>>,
    pub log_likelihood: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct AlignedCorpus {
    pub em: EmTraining,
    pub entries: usize,
    /// Parse and phonification warnings, numbered by corpus line.
    pub warnings: Vec<CorpusWarning>,
}

/// Parses corpus text and runs EM alignment.
pub fn align_corpus(corpus_text: &str, iterations: usize) -> Result<AlignedCorpus, AlignmentError> {
    let (numbered, mut warnings) = parse_corpus(corpus_text);
    let (lines, entries): (Vec<usize>, Vec<_>) = numbered.into_iter().unzip();
    let em = em_train_alignment(&entries, iterations)?;
    warnings.extend(em.skipped.iter().map(|w| CorpusWarning {
        line: lines[w.line - 1],
        message: w.message.clone(),
    }));
    warnings.sort_by_key(|w| w.line);
    Ok(AlignedCorpus {
        em,
        entries: entries.len(),
        warnings,
    })
}

/// Trains from `english<TAB>hindi[<TAB>category]` corpus text.
pub fn train(
    corpus_text: &str,
    smoothing_k: f64,
    iterations: usize,
) -> Result<Trained, TrainError> {
    let AlignedCorpus {
        em,
        entries,
        warnings,
    } = align_corpus(corpus_text, iterations)?;
    let aligned = em.align_all();
    let model = estimate(&aligned, smoothing_k)?;
    Ok(Trained {
        model,
        entries,
        training_pairs: em.pairs.len(),
        warnings,
        aligned,
        log_likelihood: em.log_likelihood,
    })
}
