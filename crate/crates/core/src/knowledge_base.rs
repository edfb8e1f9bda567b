//! Exact-match English→Hindi translations for organization and location names.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::category::Category;

/// The knowledge base shipped with the crate.
pub const SEED_KB: &str = include_str!("../data/seed_kb.tsv");

#[derive(Debug, Error)]
pub enum KbError {
    #[error("line {line}: expected english<TAB>hindi<TAB>category")]
    MissingColumn { line: usize },
    #[error("line {line}: {message}")]
    BadCategory { line: usize, message: String },
    #[error("line {line}: duplicate entry {key:?} ({category})")]
    Duplicate {
        line: usize,
        key: String,
        category: Category,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// NFC, lower case, single spaces, trimmed. Idempotent.
pub fn normalize(text: &str) -> String {
    let lowered: String = text.nfc().collect::<String>().to_lowercase();
    let recomposed: String = lowered.nfc().collect();
    recomposed.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KbEntry {
    pub english_normalized: String,
    pub hindi: String,
    pub category: Category,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeBase {
    entries: BTreeMap<(Category, String), String>,
    allow_person: bool,
}

impl KnowledgeBase {
    /// An empty knowledge base; `allow_person` enables `PER` entries and
    /// person lookups.
    pub fn new(allow_person: bool) -> Self {
        KnowledgeBase {
            entries: BTreeMap::new(),
            allow_person,
        }
    }

    pub fn seed() -> Self {
        Self::parse(SEED_KB, false).expect("bundled knowledge base is well-formed")
    }

    pub fn parse(text: &str, allow_person: bool) -> Result<Self, KbError> {
        let mut kb = KnowledgeBase::new(allow_person);
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let raw = raw.trim_end_matches('\r');
            if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').collect();
            let [english, hindi, category] = cols[..] else {
                return Err(KbError::MissingColumn { line });
            };
            let (english, hindi) = (english.trim(), hindi.trim());
            if english.is_empty() || hindi.is_empty() {
                return Err(KbError::MissingColumn { line });
            }
            let category: Category =
                category
                    .parse()
                    .map_err(|e: crate::category::UnknownCategory| KbError::BadCategory {
                        line,
                        message: e.to_string(),
                    })?;
            if category == Category::Person && !allow_person {
                return Err(KbError::BadCategory {
                    line,
                    message: "PER entries require person lookups to be enabled".into(),
                });
            }
            let key = normalize(english);
            if kb.entries.contains_key(&(category, key.clone())) {
                return Err(KbError::Duplicate {
                    line,
                    key,
                    category,
                });
            }
            kb.entries.insert((category, key), hindi.nfc().collect());
        }
        Ok(kb)
    }

    pub fn load(path: impl AsRef<Path>, allow_person: bool) -> Result<Self, KbError> {
        Self::parse(&fs::read_to_string(path)?, allow_person)
    }

    /// Exact match on the normalized entity within its category.
    pub fn lookup(&self, entity: &str, category: Category) -> Option<&str> {
        if category == Category::Person && !self.allow_person {
            return None;
        }
        self.entries
            .get(&(category, normalize(entity)))
            .map(String::as_str)
    }

    pub fn allows_person(&self) -> bool {
        self.allow_person
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = KbEntry> + '_ {
        self.entries.iter().map(|((category, key), hindi)| KbEntry {
            english_normalized: key.clone(),
            hindi: hindi.clone(),
            category: *category,
        })
    }
}

/// Loads a knowledge-base file with person entries disabled.
pub fn load_kb(path: impl AsRef<Path>) -> Result<KnowledgeBase, KbError> {
    KnowledgeBase::load(path, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_examples() {
        assert_eq!(
            normalize("  Indian   Institute of Technology "),
            "indian institute of technology"
        );
        assert_eq!(normalize("भारत"), "भारत");
        // tabs and newlines are whitespace runs; case folds
        assert_eq!(
            normalize("\tCentral\t\tSECRETARIATE\n"),
            "central secretariate"
        );
        assert_eq!(normalize(""), "");
    }

    #[test]
    fn seed_contents() {
        let kb = KnowledgeBase::seed();
        assert_eq!(kb.len(), 5);
        assert_eq!(
            kb.lookup("Indian Institute of Technology", Category::Organization),
            Some("भारतीय प्रौद्योगिकी संस्थान")
        );
        assert_eq!(
            kb.lookup("Finance Ministry", Category::Organization),
            Some("वित्त मंत्रालय")
        );
        assert_eq!(
            kb.lookup("Indian Railways", Category::Organization),
            Some("भारतीय रेल")
        );
        assert_eq!(
            kb.lookup("Central Secretariate", Category::Organization),
            Some("केन्द्रीय सचिवालय")
        );
        assert_eq!(kb.lookup("India", Category::Location), Some("भारत"));
        assert_eq!(kb.lookup("Atlantis", Category::Location), None);
        assert_eq!(
            kb.lookup("FINANCE  ministry", Category::Organization),
            Some("वित्त मंत्रालय")
        );
        // keys are scoped by category, no partial matches
        assert_eq!(kb.lookup("India", Category::Organization), None);
        assert_eq!(kb.lookup("Finance", Category::Organization), None);
        assert_eq!(kb.lookup("India", Category::Person), None);
    }

    #[test]
    fn empty_and_comment_only_files() {
        assert!(KnowledgeBase::parse("", false).unwrap().is_empty());
        assert!(KnowledgeBase::parse("# nothing\n\n", false)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn load_errors_name_the_line() {
        let dup = "Finance Ministry\tवित्त मंत्रालय\tORG\n# c\nfinance  MINISTRY\tवित्त मंत्रालय\tORG\n";
        match KnowledgeBase::parse(dup, false) {
            Err(KbError::Duplicate { line, key, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(key, "finance ministry");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            KnowledgeBase::parse("Delhi\tदिल्ली\n", false),
            Err(KbError::MissingColumn { line: 1 })
        ));
        assert!(matches!(
            KnowledgeBase::parse("Delhi\tदिल्ली\tCITY\n", false),
            Err(KbError::BadCategory { line: 1, .. })
        ));
        assert!(matches!(
            KnowledgeBase::parse("Amar\tअमर\tPER\n", false),
            Err(KbError::BadCategory { line: 1, .. })
        ));
    }

    #[test]
    fn same_name_in_two_categories() {
        let text = "Delhi\tदिल्ली\tLOC\nDelhi\tदिल्ली सरकार\tORG\n";
        let kb = KnowledgeBase::parse(text, false).unwrap();
        assert_eq!(kb.lookup("delhi", Category::Location), Some("दिल्ली"));
        assert_eq!(
            kb.lookup("delhi", Category::Organization),
            Some("दिल्ली सरकार")
        );
    }

    #[test]
    fn person_extension() {
        let kb = KnowledgeBase::parse("Gandhi\tगांधी\tPER\n", true).unwrap();
        assert_eq!(kb.lookup("Gandhi", Category::Person), Some("गांधी"));
    }

    #[test]
    fn generated_kb_lookup_is_exact() {
        let mut text = String::new();
        for i in 0..1000 {
            let cat = if i % 2 == 0 { "ORG" } else { "LOC" };
            text.push_str(&format!("Entity Number {i}\tसंस्था {i}\t{cat}\n"));
        }
        let kb = KnowledgeBase::parse(&text, false).unwrap();
        assert_eq!(kb.len(), 1000);
        for i in 0..1000 {
            let (hit, miss) = if i % 2 == 0 {
                (Category::Organization, Category::Location)
            } else {
                (Category::Location, Category::Organization)
            };
            let expected = format!("संस्था {i}");
            assert_eq!(
                kb.lookup(&format!("ENTITY number {i}"), hit),
                Some(expected.as_str())
            );
            assert_eq!(kb.lookup(&format!("Entity Number {i}"), miss), None);
            assert_eq!(kb.lookup(&format!("Entity Number {}", i + 1000), hit), None);
        }
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC*") {
            let once = normalize(&s);
            prop_assert_eq!(normalize(&once), once);
        }

        #[test]
        fn normalize_is_idempotent_on_mixed_scripts(s in "[ \\tA-Za-zÀ-ÿअ-हा-ौं्]{0,24}") {
            let once = normalize(&s);
            prop_assert_eq!(normalize(&once), once);
        }
    }
}
