//! Cross-lingual AMR annotation projection.
//!
//! English AMR graphs are aligned to their sentence tokens with a rule
//! cascade plus an IBM Model 1 aligner, and those alignments are carried to
//! a parallel foreign sentence through argmax-cosine word alignments over
//! contextual embeddings. Several combination strategies fill in concepts
//! that one route leaves unaligned. Graphs are compared with Smatch.
//!
//! Modules:
//! - [`graph`]: AMR graphs, PENMAN, alignment metadata, treebank files
//! - [`embedding`]: `CEMB` embedding files and subword pooling
//! - [`word_align`]: directional and intersected contextual word alignment
//! - [`concept_align`]: rule-based and EM token-to-concept alignment
//! - [`projector`]: annotation projection, combination strategies, coverage
//! - [`smatch`]: hill-climbing Smatch and an exhaustive oracle

pub mod concept_align;
pub mod embedding;
pub mod graph;
pub mod projector;
pub mod smatch;
pub mod word_align;

pub use graph::{AmrGraph, NodeAlignment, Span, TreebankEntry};
