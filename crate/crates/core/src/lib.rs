//! English to Hindi named-entity translation.
//!
//! Organization and location names are looked up in a knowledge base;
//! everything else is split into phonemes and transliterated with an HMM
//! trained on aligned English/Hindi phoneme pairs.

pub mod alignment;
pub mod category;
pub mod cli;
pub mod decoder;
pub mod evaluation;
pub mod knowledge_base;
pub mod model;
pub mod phonology;
pub mod pipeline;
pub mod training;

pub use category::Category;
pub use training::{train, Trained};
