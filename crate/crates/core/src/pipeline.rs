//! Sentence-level entity substitution.
//!
//! Input sentences carry pre-annotated entity spans. Organization and
//! location spans are looked up in the knowledge base first; anything not
//! found there (and every person name) is transliterated token by token.
//! The result is the source sentence with the entities replaced by Hindi,
//! ready to be handed to a downstream MT system.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::category::Category;
use crate::decoder::{apply_fallback, transliterate, DecodeError, FallbackPolicy, DEFAULT_TOP_K};
use crate::knowledge_base::KnowledgeBase;
use crate::model::TransliterationModel;

const OPEN: &str = "[[";
const CLOSE: &str = "]]";

/// Entity mention; offsets are in characters (Unicode scalar values).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub category: Category,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnnotationError {
    #[error("offset {offset}: unbalanced entity marker")]
    Unbalanced { offset: usize },
    #[error("offset {offset}: {message}")]
    BadCategory { offset: usize, message: String },
    #[error("offset {offset}: empty entity")]
    EmptyEntity { offset: usize },
    #[error("offset {offset}: malformed span record {record:?}")]
    BadRecord { offset: usize, record: String },
    #[error("offset {offset}: span {start}..{end} is outside the sentence or overlaps another")]
    BadSpan {
        offset: usize,
        start: usize,
        end: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AnnotationFormat {
    /// `[[surface|CAT]]` markers inside the sentence.
    #[default]
    Inline,
    /// `sentence<TAB>start,end,CAT<TAB>...` with character offsets.
    Columnar,
}

impl FromStr for AnnotationFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inline" => Ok(AnnotationFormat::Inline),
            "columnar" => Ok(AnnotationFormat::Columnar),
            other => Err(format!(
                "unknown annotation format {other:?} (expected inline|columnar)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedSentence {
    pub text: String,
    pub spans: Vec<EntitySpan>,
}

impl AnnotatedSentence {
    /// Builds a sentence from `(start, end, category)` records, sorting them
    /// and filling in surfaces.
    pub fn from_offsets(
        text: &str,
        mut records: Vec<(usize, usize, Category)>,
    ) -> Result<Self, AnnotationError> {
        records.sort_by_key(|r| (r.0, r.1));
        let chars: Vec<char> = text.chars().collect();
        let mut spans: Vec<EntitySpan> = Vec::with_capacity(records.len());
        for (start, end, category) in records {
            let prev_end = spans.last().map_or(0, |s| s.end);
            if start >= end || end > chars.len() || start < prev_end {
                return Err(AnnotationError::BadSpan {
                    offset: start,
                    start,
                    end,
                });
            }
            spans.push(EntitySpan {
                start,
                end,
                surface: chars[start..end].iter().collect(),
                category,
            });
        }
        Ok(AnnotatedSentence {
            text: text.to_string(),
            spans,
        })
    }

    /// Re-serializes the sentence with inline markers.
    pub fn to_inline(&self) -> String {
        let mut out = String::new();
        let mut chars = self.text.chars();
        let mut pos = 0;
        for span in &self.spans {
            out.extend(chars.by_ref().take(span.start - pos));
            let _ = write!(
                out,
                "{OPEN}{}|{}{CLOSE}",
                span.surface,
                span.category.code()
            );
            chars.by_ref().take(span.end - span.start).for_each(drop);
            pos = span.end;
        }
        out.extend(chars);
        out
    }
}

pub fn parse_annotations(
    line: &str,
    format: AnnotationFormat,
) -> Result<AnnotatedSentence, AnnotationError> {
    match format {
        AnnotationFormat::Inline => parse_inline(line),
        AnnotationFormat::Columnar => parse_columnar(line),
    }
}

fn parse_category(code: &str, offset: usize) -> Result<Category, AnnotationError> {
    code.parse().map_err(
        |e: crate::category::UnknownCategory| AnnotationError::BadCategory {
            offset,
            message: e.to_string(),
        },
    )
}

fn parse_inline(line: &str) -> Result<AnnotatedSentence, AnnotationError> {
    let char_offset = |byte: usize| line[..byte].chars().count();
    let mut text = String::new();
    let mut text_len = 0;
    let mut spans = Vec::new();
    let mut rest = line;
    let mut consumed = 0;
    loop {
        let open = rest.find(OPEN);
        let close = rest.find(CLOSE);
        let Some(open) = open else {
            if let Some(close) = close {
                return Err(AnnotationError::Unbalanced {
                    offset: char_offset(consumed + close),
                });
            }
            text.push_str(rest);
            break;
        };
        if let Some(close) = close.filter(|&c| c < open) {
            return Err(AnnotationError::Unbalanced {
                offset: char_offset(consumed + close),
            });
        }
        let marker_at = consumed + open;
        let before = &rest[..open];
        text.push_str(before);
        text_len += before.chars().count();

        let inner_start = open + OPEN.len();
        let Some(inner_len) = rest[inner_start..].find(CLOSE) else {
            return Err(AnnotationError::Unbalanced {
                offset: char_offset(marker_at),
            });
        };
        let inner = &rest[inner_start..inner_start + inner_len];
        if inner.contains(OPEN) {
            return Err(AnnotationError::Unbalanced {
                offset: char_offset(marker_at),
            });
        }
        let Some((surface, code)) = inner.rsplit_once('|') else {
            return Err(AnnotationError::BadCategory {
                offset: char_offset(marker_at),
                message: "missing |CATEGORY".into(),
            });
        };
        let category = parse_category(code, char_offset(marker_at))?;
        if surface.is_empty() {
            return Err(AnnotationError::EmptyEntity {
                offset: char_offset(marker_at),
            });
        }
        let len = surface.chars().count();
        spans.push(EntitySpan {
            start: text_len,
            end: text_len + len,
            surface: surface.to_string(),
            category,
        });
        text.push_str(surface);
        text_len += len;

        let next = inner_start + inner_len + CLOSE.len();
        consumed += next;
        rest = &rest[next..];
    }
    Ok(AnnotatedSentence { text, spans })
}

fn parse_columnar(line: &str) -> Result<AnnotatedSentence, AnnotationError> {
    let mut cols = line.split('\t');
    let text = cols.next().unwrap_or_default();
    let mut offset = text.chars().count();
    let mut records = Vec::new();
    for record in cols {
        offset += 1;
        let bad = || AnnotationError::BadRecord {
            offset,
            record: record.to_string(),
        };
        let parts: Vec<&str> = record.split(',').collect();
        let [start, end, code] = parts[..] else {
            return Err(bad());
        };
        let start: usize = start.trim().parse().map_err(|_| bad())?;
        let end: usize = end.trim().parse().map_err(|_| bad())?;
        records.push((start, end, parse_category(code, offset)?));
        offset += record.chars().count();
    }
    AnnotatedSentence::from_offsets(text, records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    KbHit,
    Transliterated,
    Fallback,
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Route::KbHit => "KB_HIT",
            Route::Transliterated => "TRANSLITERATED",
            Route::Fallback => "FALLBACK",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityDecision {
    pub span: EntitySpan,
    pub route: Route,
    pub output: String,
    /// Summed decoder log score; only for transliterated entities.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedSentence {
    pub original: String,
    pub substituted: String,
    pub decisions: Vec<EntityDecision>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub fallback: FallbackPolicy,
    pub top_k: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            fallback: FallbackPolicy::CopySource,
            top_k: DEFAULT_TOP_K,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("entity {surface:?} at {start}..{end}: {source}")]
pub struct PipelineError {
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub source: DecodeError,
}

fn decide(
    span: &EntitySpan,
    kb: &KnowledgeBase,
    model: Option<&TransliterationModel>,
    config: &PipelineConfig,
) -> Result<EntityDecision, DecodeError> {
    if span.category != Category::Person || kb.allows_person() {
        if let Some(hindi) = kb.lookup(&span.surface, span.category) {
            return Ok(EntityDecision {
                span: span.clone(),
                route: Route::KbHit,
                output: hindi.to_string(),
                score: None,
            });
        }
    }
    let mut outputs = Vec::new();
    let mut score = 0.0;
    let mut fell_back = false;
    for token in span.surface.split_whitespace() {
        let result = match model {
            Some(m) => transliterate(m, token, config.fallback, config.top_k)?,
            None => apply_fallback(token, config.fallback, DecodeError::NoModel)?,
        };
        match &result.decoding {
            Some(d) => score += d.score,
            None => fell_back = true,
        }
        outputs.push(result.output);
    }
    Ok(EntityDecision {
        span: span.clone(),
        route: if fell_back {
            Route::Fallback
        } else {
            Route::Transliterated
        },
        output: outputs.join(" "),
        score: (!fell_back).then_some(score),
    })
}

/// Translates or transliterates every span and substitutes the results.
pub fn process_sentence(
    sentence: &AnnotatedSentence,
    kb: &KnowledgeBase,
    model: Option<&TransliterationModel>,
    config: &PipelineConfig,
) -> Result<ProcessedSentence, PipelineError> {
    let decisions = sentence
        .spans
        .iter()
        .map(|span| {
            decide(span, kb, model, config).map_err(|source| PipelineError {
                surface: span.surface.clone(),
                start: span.start,
                end: span.end,
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut substituted = String::with_capacity(sentence.text.len());
    let mut chars = sentence.text.chars();
    let mut pos = 0;
    for d in &decisions {
        substituted.extend(chars.by_ref().take(d.span.start - pos));
        substituted.push_str(&d.output);
        chars
            .by_ref()
            .take(d.span.end - d.span.start)
            .for_each(drop);
        pos = d.span.end;
    }
    substituted.extend(chars);
    Ok(ProcessedSentence {
        original: sentence.text.clone(),
        substituted,
        decisions,
    })
}

/// One `line_no<TAB>start<TAB>end<TAB>surface<TAB>category<TAB>route<TAB>output[<TAB>score]`
/// record per decision.
pub fn render_decisions(line_no: usize, processed: &ProcessedSentence) -> String {
    let mut out = String::new();
    for d in &processed.decisions {
        let _ = write!(
            out,
            "{line_no}\t{}\t{}\t{}\t{}\t{}\t{}",
            d.span.start,
            d.span.end,
            d.span.surface,
            d.span.category.code(),
            d.route,
            d.output
        );
        if let Some(score) = d.score {
            let _ = write!(out, "\t{score:.6}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::AlignedPair;
    use crate::model::estimate;
    use proptest::prelude::*;

    fn span(start: usize, end: usize, surface: &str, category: Category) -> EntitySpan {
        EntitySpan {
            start,
            end,
            surface: surface.into(),
            category,
        }
    }

    fn india_model() -> TransliterationModel {
        let pairs = vec![vec![
            AlignedPair::new("in", "इं"),
            AlignedPair::new("di", "डि"),
            AlignedPair::new("a", "या"),
        ]];
        estimate(&pairs, 0.0).unwrap()
    }

    #[test]
    fn inline_example_sentence() {
        let s = parse_annotations(
            "[[India|LOC]] is a great country.",
            AnnotationFormat::Inline,
        )
        .unwrap();
        assert_eq!(s.text, "India is a great country.");
        assert_eq!(s.spans, vec![span(0, 5, "India", Category::Location)]);
    }

    #[test]
    fn inline_without_markers() {
        let s = parse_annotations("Nothing to see here.", AnnotationFormat::Inline).unwrap();
        assert!(s.spans.is_empty());
        assert_eq!(s.text, "Nothing to see here.");
    }

    #[test]
    fn inline_two_spans() {
        let s = parse_annotations("[[A|PER]] met [[B|PER]]", AnnotationFormat::Inline).unwrap();
        assert_eq!(s.text, "A met B");
        assert_eq!(
            s.spans,
            vec![
                span(0, 1, "A", Category::Person),
                span(6, 7, "B", Category::Person)
            ]
        );
    }

    #[test]
    fn inline_offsets_count_characters() {
        let s =
            parse_annotations("भारत में [[Radhika|PER]] रहती है", AnnotationFormat::Inline).unwrap();
        assert_eq!(s.spans[0].start, 9);
        assert_eq!(s.spans[0].end, 16);
    }

    #[test]
    fn inline_errors() {
        use AnnotationFormat::Inline;
        assert_eq!(
            parse_annotations("[[India|LOC is big", Inline),
            Err(AnnotationError::Unbalanced { offset: 0 })
        );
        assert_eq!(
            parse_annotations("India]] is big", Inline),
            Err(AnnotationError::Unbalanced { offset: 5 })
        );
        assert_eq!(
            parse_annotations("x [[a [[b|PER]]", Inline),
            Err(AnnotationError::Unbalanced { offset: 2 })
        );
        assert!(matches!(
            parse_annotations("[[India|CITY]]", Inline),
            Err(AnnotationError::BadCategory { offset: 0, .. })
        ));
        assert!(matches!(
            parse_annotations("go [[India]]", Inline),
            Err(AnnotationError::BadCategory { offset: 3, .. })
        ));
        assert_eq!(
            parse_annotations("[[|PER]]", Inline),
            Err(AnnotationError::EmptyEntity { offset: 0 })
        );
    }

    #[test]
    fn columnar_records() {
        let s = parse_annotations("A met B\t6,7,PER\t0,1,PER", AnnotationFormat::Columnar).unwrap();
        assert_eq!(s.text, "A met B");
        assert_eq!(
            s.spans,
            vec![
                span(0, 1, "A", Category::Person),
                span(6, 7, "B", Category::Person)
            ]
        );
        assert!(matches!(
            parse_annotations("A met B\t0,3,PER\t2,4,PER", AnnotationFormat::Columnar),
            Err(AnnotationError::BadSpan {
                start: 2,
                end: 4,
                ..
            })
        ));
        assert!(matches!(
            parse_annotations("A met B\t0,9,PER", AnnotationFormat::Columnar),
            Err(AnnotationError::BadSpan { .. })
        ));
        assert!(matches!(
            parse_annotations("A met B\t0;1;PER", AnnotationFormat::Columnar),
            Err(AnnotationError::BadRecord { offset: 8, .. })
        ));
        assert!(matches!(
            parse_annotations("A met B\t0,1,XYZ", AnnotationFormat::Columnar),
            Err(AnnotationError::BadCategory { .. })
        ));
    }

    #[test]
    fn kb_hit_substitutes_translation() {
        let s = parse_annotations(
            "[[India|LOC]] is a great country.",
            AnnotationFormat::Inline,
        )
        .unwrap();
        let out =
            process_sentence(&s, &KnowledgeBase::seed(), None, &PipelineConfig::default()).unwrap();
        assert_eq!(out.substituted, "भारत is a great country.");
        assert_eq!(out.decisions[0].route, Route::KbHit);
        assert_eq!(out.decisions[0].score, None);
    }

    #[test]
    fn kb_miss_falls_through_to_transliteration() {
        let s = parse_annotations(
            "[[India|LOC]] is a great country.",
            AnnotationFormat::Inline,
        )
        .unwrap();
        let model = india_model();
        let out = process_sentence(
            &s,
            &KnowledgeBase::default(),
            Some(&model),
            &PipelineConfig::default(),
        )
        .unwrap();
        assert_eq!(out.substituted, "इंडिया is a great country.");
        assert_eq!(out.decisions[0].route, Route::Transliterated);
        assert_eq!(out.decisions[0].score, Some(0.0));
    }

    #[test]
    fn persons_skip_the_kb_by_default() {
        let kb = KnowledgeBase::parse("India\tभारत\tLOC\n", false).unwrap();
        let s = parse_annotations("[[India|PER]] smiled.", AnnotationFormat::Inline).unwrap();
        let model = india_model();
        let out = process_sentence(&s, &kb, Some(&model), &PipelineConfig::default()).unwrap();
        assert_eq!(out.decisions[0].route, Route::Transliterated);
        assert_eq!(out.substituted, "इंडिया smiled.");

        let kb = KnowledgeBase::parse("India\tभारत\tPER\n", true).unwrap();
        let out = process_sentence(&s, &kb, Some(&model), &PipelineConfig::default()).unwrap();
        assert_eq!(out.decisions[0].route, Route::KbHit);
    }

    #[test]
    fn multi_token_entities_and_fallbacks() {
        let s = parse_annotations("Visit [[India Atlantis|LOC]] now", AnnotationFormat::Inline)
            .unwrap();
        let model = india_model();
        let config = PipelineConfig {
            fallback: FallbackPolicy::UnkMarker,
            top_k: 5,
        };
        let out = process_sentence(&s, &KnowledgeBase::seed(), Some(&model), &config).unwrap();
        assert_eq!(out.substituted, "Visit इंडिया <unk> now");
        assert_eq!(out.decisions[0].route, Route::Fallback);
        assert_eq!(out.decisions[0].score, None);

        let strict = PipelineConfig {
            fallback: FallbackPolicy::Error,
            top_k: 5,
        };
        let err = process_sentence(&s, &KnowledgeBase::seed(), Some(&model), &strict).unwrap_err();
        assert_eq!(err.start, 6);
        assert!(matches!(err.source, DecodeError::UnseenPhoneme { .. }));

        let out =
            process_sentence(&s, &KnowledgeBase::seed(), None, &PipelineConfig::default()).unwrap();
        assert_eq!(out.substituted, s.text);
        assert_eq!(out.decisions[0].route, Route::Fallback);
    }

    #[test]
    fn zero_spans_leave_sentence_unchanged() {
        let s = parse_annotations("Plain text.", AnnotationFormat::Inline).unwrap();
        let out =
            process_sentence(&s, &KnowledgeBase::seed(), None, &PipelineConfig::default()).unwrap();
        assert_eq!(out.substituted, "Plain text.");
        assert!(out.decisions.is_empty());
    }

    #[test]
    fn decision_records() {
        let s =
            parse_annotations("[[India|LOC]] and [[India|PER]]", AnnotationFormat::Inline).unwrap();
        let model = india_model();
        let out = process_sentence(
            &s,
            &KnowledgeBase::seed(),
            Some(&model),
            &PipelineConfig::default(),
        )
        .unwrap();
        assert_eq!(
            render_decisions(3, &out),
            "3\t0\t5\tIndia\tLOC\tKB_HIT\tभारत\n3\t10\t15\tIndia\tPER\tTRANSLITERATED\tइंडिया\t0.000000\n"
        );
    }

    fn sentence_strategy() -> impl Strategy<Value = AnnotatedSentence> {
        let piece = prop_oneof![
            "[a-z ,.]{0,6}".prop_map(|t| (t, None)),
            ("[A-Z][a-z]{1,6}( [A-Z][a-z]{1,5})?", 0..3usize)
                .prop_map(|(t, c)| (t, Some(Category::ALL[c]))),
        ];
        proptest::collection::vec(piece, 0..6).prop_map(|pieces| {
            let mut text = String::new();
            let mut records = Vec::new();
            let mut pos = 0;
            let mut last_was_entity = false;
            for (t, cat) in pieces {
                if let Some(c) = cat {
                    if last_was_entity {
                        text.push(' ');
                        pos += 1;
                    }
                    records.push((pos, pos + t.chars().count(), c));
                }
                last_was_entity = cat.is_some();
                pos += t.chars().count();
                text.push_str(&t);
            }
            AnnotatedSentence::from_offsets(&text, records).unwrap()
        })
    }

    proptest! {
        #[test]
        fn inline_round_trip(s in sentence_strategy()) {
            let inline = s.to_inline();
            let parsed = parse_annotations(&inline, AnnotationFormat::Inline).unwrap();
            prop_assert_eq!(&parsed, &s);
            prop_assert_eq!(parsed.to_inline(), inline);
        }

        #[test]
        fn text_outside_spans_is_preserved(s in sentence_strategy()) {
            let config = PipelineConfig { fallback: FallbackPolicy::UnkMarker, top_k: 5 };
            let model = india_model();
            let out = process_sentence(&s, &KnowledgeBase::seed(), Some(&model), &config).unwrap();
            prop_assert_eq!(out.decisions.len(), s.spans.len());
            // strip every output back out and compare the remaining pieces
            let chars: Vec<char> = s.text.chars().collect();
            let mut rebuilt = String::new();
            let mut pos = 0;
            let mut expected = String::new();
            for d in &out.decisions {
                expected.extend(&chars[pos..d.span.start]);
                expected.push_str(&d.output);
                pos = d.span.end;
                rebuilt.push_str(&d.output);
            }
            expected.extend(&chars[pos..]);
            prop_assert_eq!(out.substituted, expected);
            for d in &out.decisions {
                let hit = s.spans.iter().any(|sp| sp == &d.span);
                prop_assert!(hit);
                let kb_found = KnowledgeBase::seed().lookup(&d.span.surface, d.span.category).is_some();
                prop_assert_eq!(d.route == Route::KbHit, kb_found && d.span.category != Category::Person);
            }
        }
    }
}
