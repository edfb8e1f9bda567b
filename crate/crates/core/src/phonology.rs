//! Rule-based phonification of Latin and Devanagari words.
//!
//! A word is split into orthographic phoneme clusters, each tagged with its
//! vowel/consonant structure (`V`, `CV`, `VC`, `CVC`, `CCV`, ...).
//!
//! Latin segmentation rules, applied greedily left to right:
//!
//! 1. a maximal consonant onset plus one vowel forms a phoneme;
//! 2. a nasal (`n`/`m`) directly after that vowel joins it when the next
//!    letter is a consonant;
//! 3. consonants with no following vowel (only possible word-finally) form
//!    one phoneme;
//! 4. adjacent vowels are separate phonemes.
//!
//! Devanagari is segmented into aksharas: an independent vowel, or a
//! consonant (with optional nukta and halant-joined conjunct consonants)
//! plus an optional vowel sign, either one followed by any nasalization
//! signs.

use std::fmt;

use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Script {
    Latin,
    Devanagari,
}

impl Script {
    /// Script of a single letter or sign, `None` for anything else.
    pub fn of_char(c: char) -> Option<Script> {
        if c.is_ascii_alphabetic() {
            Some(Script::Latin)
        } else if ('\u{0900}'..='\u{097F}').contains(&c) {
            Some(Script::Devanagari)
        } else {
            None
        }
    }
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Script::Latin => f.write_str("Latin"),
            Script::Devanagari => f.write_str("Devanagari"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CharClass {
    Vowel,
    Consonant,
    /// Dependent vowel sign (matra).
    VowelSign,
    /// Anusvara, chandrabindu or visarga.
    NasalizationSign,
    /// Halant, joins consonants into a conjunct.
    Virama,
    Nukta,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PhonifyError {
    #[error("{ch:?} at byte {offset} is not a {expected} letter")]
    ScriptMismatch {
        ch: char,
        offset: usize,
        expected: Script,
    },
    #[error("sign {ch:?} at byte {offset} has no base letter")]
    Malformed { ch: char, offset: usize },
    #[error("phoneme surface is empty")]
    EmptyPhoneme,
}

/// Classifies `c` under the character inventory of `script`.
pub fn classify_char(c: char, script: Script) -> CharClass {
    match script {
        Script::Latin => match c.to_ascii_lowercase() {
            'a' | 'e' | 'i' | 'o' | 'u' => CharClass::Vowel,
            l if l.is_ascii_lowercase() => CharClass::Consonant,
            _ => CharClass::Other,
        },
        Script::Devanagari => match c {
            '\u{0904}'..='\u{0914}' | '\u{0960}' | '\u{0961}' | '\u{0972}'..='\u{0977}' => {
                CharClass::Vowel
            }
            '\u{0915}'..='\u{0939}' | '\u{0958}'..='\u{095F}' | '\u{0978}'..='\u{097F}' => {
                CharClass::Consonant
            }
            '\u{093A}'
            | '\u{093B}'
            | '\u{093E}'..='\u{094C}'
            | '\u{094E}'
            | '\u{094F}'
            | '\u{0955}'..='\u{0957}'
            | '\u{0962}'
            | '\u{0963}' => CharClass::VowelSign,
            '\u{0900}'..='\u{0903}' => CharClass::NasalizationSign,
            '\u{094D}' => CharClass::Virama,
            '\u{093C}' => CharClass::Nukta,
            _ => CharClass::Other,
        },
    }
}

/// Consonant/vowel pattern of a phoneme, e.g. `CCV` for "Che".
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Structure(String);

impl Structure {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn structure_of_surface(surface: &str, script: Script) -> Structure {
    let tag = surface
        .chars()
        .filter_map(|c| match classify_char(c, script) {
            CharClass::Vowel | CharClass::VowelSign => Some('V'),
            CharClass::Consonant | CharClass::NasalizationSign => Some('C'),
            CharClass::Virama | CharClass::Nukta | CharClass::Other => None,
        })
        .collect();
    Structure(tag)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Phoneme {
    surface: String,
    script: Script,
    structure: Structure,
}

impl Phoneme {
    pub fn new(surface: &str, script: Script) -> Result<Self, PhonifyError> {
        if surface.is_empty() {
            return Err(PhonifyError::EmptyPhoneme);
        }
        for (offset, ch) in surface.char_indices() {
            if classify_char(ch, script) == CharClass::Other {
                return Err(PhonifyError::ScriptMismatch {
                    ch,
                    offset,
                    expected: script,
                });
            }
        }
        Ok(Self::from_parts(surface.to_string(), script))
    }

    fn from_parts(surface: String, script: Script) -> Self {
        let structure = structure_of_surface(&surface, script);
        Phoneme {
            surface,
            script,
            structure,
        }
    }

    /// Surface as it appeared in the input.
    pub fn surface(&self) -> &str {
        &self.surface
    }

    /// Case-folded surface used as the model key.
    pub fn key(&self) -> String {
        match self.script {
            Script::Latin => self.surface.to_ascii_lowercase(),
            Script::Devanagari => self.surface.clone(),
        }
    }

    pub fn script(&self) -> Script {
        self.script
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }
}

/// Recomputes the structure tag of `p` from its surface.
pub fn structure_of(p: &Phoneme) -> Structure {
    structure_of_surface(&p.surface, p.script)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PhonemeSequence {
    phonemes: Vec<Phoneme>,
    source_word: String,
}

impl PhonemeSequence {
    pub fn phonemes(&self) -> &[Phoneme] {
        &self.phonemes
    }

    /// The (NFC-normalized) word the sequence was built from.
    pub fn source_word(&self) -> &str {
        &self.source_word
    }

    pub fn len(&self) -> usize {
        self.phonemes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phonemes.is_empty()
    }

    pub fn keys(&self) -> Vec<String> {
        self.phonemes.iter().map(Phoneme::key).collect()
    }

    /// Byte offsets at which each phoneme ends.
    pub fn boundaries(&self) -> Vec<usize> {
        self.phonemes
            .iter()
            .scan(0, |end, p| {
                *end += p.surface.len();
                Some(*end)
            })
            .collect()
    }
}

impl fmt::Display for PhonemeSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.phonemes {
            write!(f, "[{}]", p.surface)?;
        }
        Ok(())
    }
}

fn split_at_ends(word: String, ends: &[usize], script: Script) -> PhonemeSequence {
    let mut start = 0;
    let phonemes = ends
        .iter()
        .map(|&end| {
            let p = Phoneme::from_parts(word[start..end].to_string(), script);
            start = end;
            p
        })
        .collect();
    PhonemeSequence {
        phonemes,
        source_word: word,
    }
}

fn is_nasal(c: char) -> bool {
    matches!(c, 'n' | 'm' | 'N' | 'M')
}

pub fn phonify_latin(word: &str) -> Result<PhonemeSequence, PhonifyError> {
    let word: String = word.nfc().collect();
    let chars: Vec<(usize, char, CharClass)> = word
        .char_indices()
        .map(|(i, c)| (i, c, classify_char(c, Script::Latin)))
        .collect();
    if let Some(&(offset, ch, _)) = chars
        .iter()
        .find(|(_, _, class)| *class == CharClass::Other)
    {
        return Err(PhonifyError::ScriptMismatch {
            ch,
            offset,
            expected: Script::Latin,
        });
    }
    // Every accepted character is one ASCII byte, so char index == byte offset.
    let class = |i: usize| chars[i].2;
    let n = chars.len();
    let mut ends = Vec::new();
    let mut i = 0;
    while i < n {
        while i < n && class(i) == CharClass::Consonant {
            i += 1;
        }
        if i < n {
            i += 1;
            if i + 1 < n && is_nasal(chars[i].1) && class(i + 1) == CharClass::Consonant {
                i += 1;
            }
        }
        ends.push(i);
    }
    Ok(split_at_ends(word, &ends, Script::Latin))
}

pub fn phonify_devanagari(word: &str) -> Result<PhonemeSequence, PhonifyError> {
    let word: String = word.nfc().collect();
    let chars: Vec<(usize, char, CharClass)> = word
        .char_indices()
        .map(|(i, c)| (i, c, classify_char(c, Script::Devanagari)))
        .collect();
    let n = chars.len();
    let class = |i: usize| if i < n { Some(chars[i].2) } else { None };
    let byte_end = |i: usize| if i < n { chars[i].0 } else { word.len() };

    let mut ends = Vec::new();
    let mut i = 0;
    while i < n {
        let (offset, ch, cls) = chars[i];
        match cls {
            CharClass::Vowel => i += 1,
            CharClass::Consonant => {
                i += 1;
                if class(i) == Some(CharClass::Nukta) {
                    i += 1;
                }
                while class(i) == Some(CharClass::Virama) {
                    i += 1;
                    if class(i) != Some(CharClass::Consonant) {
                        break;
                    }
                    i += 1;
                    if class(i) == Some(CharClass::Nukta) {
                        i += 1;
                    }
                }
                if class(i) == Some(CharClass::VowelSign) {
                    i += 1;
                }
            }
            CharClass::Other => {
                return Err(PhonifyError::ScriptMismatch {
                    ch,
                    offset,
                    expected: Script::Devanagari,
                })
            }
            _ => return Err(PhonifyError::Malformed { ch, offset }),
        }
        while class(i) == Some(CharClass::NasalizationSign) {
            i += 1;
        }
        ends.push(byte_end(i));
    }
    Ok(split_at_ends(word, &ends, Script::Devanagari))
}

/// Phonifies `word` in whichever script its first character belongs to.
pub fn phonify(word: &str) -> Result<PhonemeSequence, PhonifyError> {
    match word.chars().next().map(|c| (c, Script::of_char(c))) {
        Some((_, Some(Script::Devanagari))) => phonify_devanagari(word),
        Some((_, Some(Script::Latin))) | None => phonify_latin(word),
        Some((ch, None)) => Err(PhonifyError::ScriptMismatch {
            ch,
            offset: 0,
            expected: Script::Latin,
        }),
    }
}

/// Phonifies every whitespace-separated token of `text`.
pub fn phonify_tokens(text: &str) -> Result<Vec<PhonemeSequence>, PhonifyError> {
    text.split_whitespace().map(phonify).collect()
}
