//! IBM Model 1 aligner between sentence tokens and graph concepts.
//!
//! Every concept occurrence picks one token position of its sentence, with
//! a `<NULL>` position prepended to absorb concepts that have no surface
//! token. The table holds `t(concept, token)`, a distribution over tokens
//! for each concept, estimated with EM from a uniform start.
//!
//! Expected counts for a concept only touch that concept's row, so the
//! E-step is partitioned by concept. Each row is accumulated in a fixed
//! order no matter how many threads run, which keeps training bit-for-bit
//! reproducible.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{AmrGraph, NodeAlignment, Span};

pub const NULL_TOKEN: &str = "<NULL>";
const NULL_ID: u32 = 0;

#[derive(Debug, Error)]
pub enum EmError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("sentence {0} has no tokens")]
    EmptySentence(usize),
    #[error("at least one EM iteration is required")]
    NoIterations,
    #[error("line {line}: {reason}")]
    Table { line: usize, reason: String },
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

/// Token form used by the EM aligner.
pub fn token_form(token: &str) -> String {
    token.to_lowercase()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationTable {
    concepts: Vec<String>,
    concept_ids: HashMap<String, u32>,
    tokens: Vec<String>,
    token_ids: HashMap<String, u32>,
    /// Per concept: (token id, probability), sorted by token id.
    rows: Vec<Vec<(u32, f64)>>,
}

impl TranslationTable {
    fn with_vocab(concepts: Vec<String>, tokens: Vec<String>, rows: Vec<Vec<(u32, f64)>>) -> Self {
        let concept_ids = concepts
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i as u32))
            .collect();
        let token_ids = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        TranslationTable {
            concepts,
            concept_ids,
            tokens,
            token_ids,
            rows,
        }
    }

    pub fn concept_vocab_size(&self) -> usize {
        self.concepts.len()
    }

    /// Token vocabulary size, `<NULL>` included.
    pub fn token_vocab_size(&self) -> usize {
        self.tokens.len()
    }

    pub fn contains_concept(&self, concept: &str) -> bool {
        self.concept_ids.contains_key(concept)
    }

    /// `t(concept, token)`; the token is looked up by its EM form. Unseen
    /// pairs have probability zero.
    pub fn prob(&self, concept: &str, token: &str) -> f64 {
        let form = if token == NULL_TOKEN {
            token.to_string()
        } else {
            token_form(token)
        };
        match (self.concept_ids.get(concept), self.token_ids.get(&form)) {
            (Some(&c), Some(&t)) => self.row_prob(c, t),
            _ => 0.0,
        }
    }

    pub fn null_prob(&self, concept: &str) -> f64 {
        self.concept_ids
            .get(concept)
            .map_or(0.0, |&c| self.row_prob(c, NULL_ID))
    }

    fn row_prob(&self, concept: u32, token: u32) -> f64 {
        let row = &self.rows[concept as usize];
        row.binary_search_by_key(&token, |&(t, _)| t)
            .map_or(0.0, |i| row[i].1)
    }

    /// Sum of `t(concept, ·)`.
    pub fn row_sum(&self, concept: &str) -> f64 {
        self.concept_ids
            .get(concept)
            .map_or(0.0, |&c| self.rows[c as usize].iter().map(|e| e.1).sum())
    }

    pub fn concepts(&self) -> impl Iterator<Item = &str> + '_ {
        self.concepts.iter().map(String::as_str)
    }

    /// TSV `concept \t token \t probability`, sorted by concept and then by
    /// descending probability. Zero entries are omitted.
    pub fn to_tsv(&self) -> String {
        let mut order: Vec<usize> = (0..self.concepts.len()).collect();
        order.sort_by(|&a, &b| self.concepts[a].cmp(&self.concepts[b]));
        let mut out = String::new();
        for c in order {
            let mut row: Vec<&(u32, f64)> = self.rows[c].iter().filter(|e| e.1 > 0.0).collect();
            row.sort_by(|a, b| {
                b.1.total_cmp(&a.1)
                    .then_with(|| self.tokens[a.0 as usize].cmp(&self.tokens[b.0 as usize]))
            });
            for (t, p) in row {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}",
                    self.concepts[c], self.tokens[*t as usize], p
                );
            }
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, EmError> {
        let mut concepts: Vec<String> = Vec::new();
        let mut concept_ids: HashMap<String, u32> = HashMap::new();
        let mut tokens = vec![NULL_TOKEN.to_string()];
        let mut token_ids: HashMap<String, u32> =
            HashMap::from([(NULL_TOKEN.to_string(), NULL_ID)]);
        let mut rows: Vec<Vec<(u32, f64)>> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let bad = |reason: &str| EmError::Table {
                line: i + 1,
                reason: reason.to_string(),
            };
            let mut fields = line.split('\t');
            let (Some(c), Some(t), Some(p), None) =
                (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(bad("expected three tab-separated fields"));
            };
            let p: f64 = p.parse().map_err(|_| bad("probability is not a number"))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(bad("probability outside [0, 1]"));
            }
            let c_id = *concept_ids.entry(c.to_string()).or_insert_with(|| {
                concepts.push(c.to_string());
                rows.push(Vec::new());
                (concepts.len() - 1) as u32
            });
            let t_id = *token_ids.entry(t.to_string()).or_insert_with(|| {
                tokens.push(t.to_string());
                (tokens.len() - 1) as u32
            });
            let row = &mut rows[c_id as usize];
            if row.iter().any(|e| e.0 == t_id) {
                return Err(bad("duplicate (concept, token) pair"));
            }
            row.push((t_id, p));
        }
        for (c, row) in rows.iter_mut().enumerate() {
            row.sort_by_key(|e| e.0);
            let sum: f64 = row.iter().map(|e| e.1).sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(EmError::Table {
                    line: 0,
                    reason: format!("probabilities for `{}` sum to {sum}", concepts[c]),
                });
            }
        }
        Ok(TranslationTable::with_vocab(concepts, tokens, rows))
    }

    pub fn read_tsv(path: impl AsRef<Path>) -> Result<Self, EmError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| EmError::Io {
            path: path.display().to_string(),
            source,
        })?;
        TranslationTable::from_tsv(&text)
    }

    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<(), EmError> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|source| EmError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Concept occurrences grouped by concept, each occurrence listing the
/// row-local index of every token position (NULL first) of its sentence.
struct Workspace {
    concepts: Vec<String>,
    tokens: Vec<String>,
    row_tokens: Vec<Vec<u32>>,
    occurrences: Vec<Vec<Vec<u32>>>,
}

fn build_workspace(corpus: &[(Vec<String>, Vec<String>)]) -> Result<Workspace, EmError> {
    if corpus.is_empty() {
        return Err(EmError::EmptyCorpus);
    }
    let mut tokens = vec![NULL_TOKEN.to_string()];
    let mut token_ids: HashMap<String, u32> = HashMap::from([(NULL_TOKEN.to_string(), NULL_ID)]);
    let mut concepts: Vec<String> = Vec::new();
    let mut concept_ids: HashMap<&str, u32> = HashMap::new();
    let mut row_local: Vec<HashMap<u32, u32>> = Vec::new();
    let mut row_tokens: Vec<Vec<u32>> = Vec::new();
    let mut occurrences: Vec<Vec<Vec<u32>>> = Vec::new();

    for (s, (sentence, sentence_concepts)) in corpus.iter().enumerate() {
        if sentence.is_empty() {
            return Err(EmError::EmptySentence(s));
        }
        let mut ids = Vec::with_capacity(sentence.len() + 1);
        ids.push(NULL_ID);
        for tok in sentence {
            let form = token_form(tok);
            let next = tokens.len() as u32;
            let id = *token_ids.entry(form.clone()).or_insert_with(|| {
                tokens.push(form);
                next
            });
            ids.push(id);
        }
        for concept in sentence_concepts {
            let c = *concept_ids.entry(concept.as_str()).or_insert_with(|| {
                concepts.push(concept.clone());
                row_local.push(HashMap::new());
                row_tokens.push(Vec::new());
                occurrences.push(Vec::new());
                (concepts.len() - 1) as u32
            }) as usize;
            let local = &mut row_local[c];
            let row = &mut row_tokens[c];
            let occ = ids
                .iter()
                .map(|&t| {
                    *local.entry(t).or_insert_with(|| {
                        row.push(t);
                        (row.len() - 1) as u32
                    })
                })
                .collect();
            occurrences[c].push(occ);
        }
    }
    Ok(Workspace {
        concepts,
        tokens,
        row_tokens,
        occurrences,
    })
}

/// Trains for `iterations` EM steps. See [`train_ibm1_with_history`].
pub fn train_ibm1(
    corpus: &[(Vec<String>, Vec<String>)],
    iterations: usize,
) -> Result<TranslationTable, EmError> {
    train_ibm1_with_history(corpus, iterations).map(|(t, _)| t)
}

/// Trains and also returns the corpus log-likelihood of the uniform start
/// and of the table after each iteration (`iterations + 1` values).
///
/// Each corpus item is (sentence tokens, concept labels of its graph).
pub fn train_ibm1_with_history(
    corpus: &[(Vec<String>, Vec<String>)],
    iterations: usize,
) -> Result<(TranslationTable, Vec<f64>), EmError> {
    if iterations == 0 {
        return Err(EmError::NoIterations);
    }
    let ws = build_workspace(corpus)?;
    let uniform = 1.0 / ws.tokens.len() as f64;
    let mut table: Vec<Vec<f64>> = ws
        .row_tokens
        .iter()
        .map(|r| vec![uniform; r.len()])
        .collect();
    let mut history = Vec::with_capacity(iterations + 1);

    for _ in 0..iterations {
        let stepped: Vec<(Vec<f64>, f64)> = table
            .par_iter()
            .zip(ws.occurrences.par_iter())
            .map(|(row, occs)| em_step(row, occs))
            .collect();
        history.push(stepped.iter().map(|s| s.1).sum());
        table = stepped.into_iter().map(|s| s.0).collect();
    }
    let final_ll: f64 = table
        .par_iter()
        .zip(ws.occurrences.par_iter())
        .map(|(row, occs)| {
            occs.iter()
                .map(|o| occurrence_log_likelihood(row, o))
                .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .sum();
    history.push(final_ll);

    let rows = ws
        .row_tokens
        .iter()
        .zip(table)
        .map(|(toks, probs)| {
            let mut row: Vec<(u32, f64)> = toks.iter().copied().zip(probs).collect();
            row.sort_by_key(|e| e.0);
            row
        })
        .collect();
    Ok((
        TranslationTable::with_vocab(ws.concepts, ws.tokens, rows),
        history,
    ))
}

fn occurrence_log_likelihood(row: &[f64], occ: &[u32]) -> f64 {
    let denom: f64 = occ.iter().map(|&i| row[i as usize]).sum();
    (denom / occ.len() as f64).ln()
}

/// One EM step for a single concept row; returns the new row and the
/// log-likelihood of the old one.
fn em_step(row: &[f64], occs: &[Vec<u32>]) -> (Vec<f64>, f64) {
    let mut counts = vec![0.0; row.len()];
    let mut ll = 0.0;
    for occ in occs {
        let denom: f64 = occ.iter().map(|&i| row[i as usize]).sum();
        ll += (denom / occ.len() as f64).ln();
        for &i in occ {
            counts[i as usize] += row[i as usize] / denom;
        }
    }
    let total: f64 = counts.iter().sum();
    counts.iter_mut().for_each(|c| *c /= total);
    (counts, ll)
}

/// Viterbi alignment under the table: each concept goes to its most
/// probable token in the sentence (leftmost on ties). Concepts stay
/// unaligned when unknown, when no token has positive probability, or when
/// `<NULL>` is strictly more probable than every token.
pub fn em_align(tokens: &[String], graph: &AmrGraph, table: &TranslationTable) -> NodeAlignment {
    let forms: Vec<String> = tokens.iter().map(|t| token_form(t)).collect();
    let mut alignment = NodeAlignment::new(tokens.len());
    for (var, concept) in graph.instances() {
        let Some(&c) = table.concept_ids.get(concept.as_str()) else {
            continue;
        };
        let mut best: Option<(usize, f64)> = None;
        for (j, form) in forms.iter().enumerate() {
            let p = table
                .token_ids
                .get(form)
                .map_or(0.0, |&t| table.row_prob(c, t));
            if p > best.map_or(0.0, |b| b.1) {
                best = Some((j, p));
            }
        }
        if let Some((j, p)) = best {
            if table.row_prob(c, NULL_ID) <= p {
                alignment
                    .insert(var.as_str(), Span::single(j))
                    .expect("index within sentence");
            }
        }
    }
    alignment
}

/// Training pairs from a graph corpus: tokens with one concept label per
/// variable.
pub fn training_pair(tokens: &[String], graph: &AmrGraph) -> (Vec<String>, Vec<String>) {
    (
        tokens.to_vec(),
        graph.instances().values().cloned().collect(),
    )
}
