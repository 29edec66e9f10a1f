//! Corpus preparation and evaluation toolkit for Arabic-English machine
//! translation: bitext I/O, normalization, quality filters, deduplication,
//! dev splits, BPE, corpus BLEU, truecasing and MSA/dialect identification.

pub mod bleu;
pub mod corpus;
pub mod dedup;
pub mod dialect;
mod error;
pub mod normalize;
pub mod pipeline;
pub mod qa;
pub mod registry;
pub mod split;
pub mod subword;
pub mod truecase;

pub use error::{Error, Result};
