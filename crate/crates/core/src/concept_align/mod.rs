//! Direct token-to-concept alignment: a rule cascade and an IBM Model 1
//! aligner, merged into the baseline aligner (rules first, EM fills gaps).

mod ibm1;
mod rules;

use std::collections::HashMap;

use thiserror::Error;

use crate::graph::{AlignmentError, NodeAlignment};

pub use ibm1::{
    em_align, token_form, train_ibm1, train_ibm1_with_history, training_pair, EmError,
    TranslationTable, NULL_TOKEN,
};
pub use rules::{rule_align, rule_align_traced, strip_sense, Rule, RuleConfig};

#[derive(Debug, Error)]
pub enum ConceptAlignError {
    #[error("prefix length must be at least 1")]
    PrefixLength,
    #[error("negation lexicon line {0} is malformed")]
    Lexicon(usize),
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
}

const BUILTIN_NEGATIONS: &str = include_str!("../../data/negation.tsv");

/// Negation words per language tag. File format: `lang \t word,word,...`
/// per line, `#` comments allowed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NegationLexicons {
    by_language: HashMap<String, Vec<String>>,
}

impl NegationLexicons {
    pub fn builtin() -> Self {
        NegationLexicons::parse(BUILTIN_NEGATIONS).expect("bundled lexicon is well formed")
    }

    pub fn parse(text: &str) -> Result<Self, ConceptAlignError> {
        let mut by_language = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (lang, words) = line
                .split_once('\t')
                .ok_or(ConceptAlignError::Lexicon(i + 1))?;
            let words: Vec<String> = words
                .split(',')
                .map(str::trim)
                .filter(|w| !w.is_empty())
                .map(str::to_string)
                .collect();
            by_language.insert(lang.trim().to_string(), words);
        }
        Ok(NegationLexicons { by_language })
    }

    pub fn get(&self, language: &str) -> &[String] {
        self.by_language
            .get(language)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

/// Counts of variables each aligner contributed to a merged alignment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BaseCounts {
    pub rule: usize,
    pub em: usize,
}

/// Baseline alignment: the rule alignment where present, otherwise EM.
pub fn merge_base(
    rule: &NodeAlignment,
    em: &NodeAlignment,
) -> Result<NodeAlignment, ConceptAlignError> {
    merge_base_counted(rule, em).map(|(a, _)| a)
}

pub fn merge_base_counted(
    rule: &NodeAlignment,
    em: &NodeAlignment,
) -> Result<(NodeAlignment, BaseCounts), ConceptAlignError> {
    em.ensure_len(rule.sentence_len())?;
    let mut merged = rule.clone();
    let mut counts = BaseCounts {
        rule: rule.len(),
        em: 0,
    };
    for (var, span) in em.iter() {
        if !merged.contains(var) {
            merged.insert(var, span)?;
            counts.em += 1;
        }
    }
    Ok((merged, counts))
}
