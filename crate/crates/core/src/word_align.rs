//! Contextual word alignment between parallel sentences.
//!
//! Each source token links to the target token whose contextual embedding
//! has the highest cosine similarity with its own. Running this in both
//! directions and keeping the links both directions agree on gives a sparse
//! but precise symmetric alignment.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::embedding::SentenceEmbedding;

/// Slack allowed on cosine scores outside [-1, 1] from rounding.
pub const SCORE_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlignError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("zero vector at {side} row {row}")]
    ZeroVector { side: &'static str, row: usize },
    #[error("target sentence is empty")]
    EmptyTarget,
    #[error("link {source_index} -> {target} is outside a target of length {target_len}")]
    LinkOutOfRange {
        source_index: usize,
        target: usize,
        target_len: usize,
    },
    #[error("score {0} is not a cosine")]
    BadScore(f64),
    #[error("expected a {expected:?} alignment")]
    WrongDirection { expected: Direction },
    #[error("alignments disagree on sentence lengths ({0}x{1} vs {2}x{3})")]
    LengthMismatch(usize, usize, usize, usize),
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("malformed alignment line: {0}")]
    Malformed(String),
}

/// `FGivenE` links every English token to a foreign token, `EGivenF` the
/// reverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    FGivenE,
    EGivenF,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub target: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalAlignment {
    direction: Direction,
    links: Vec<Link>,
    target_len: usize,
}

impl DirectionalAlignment {
    pub fn new(
        direction: Direction,
        links: Vec<Link>,
        target_len: usize,
    ) -> Result<Self, AlignError> {
        if target_len == 0 && !links.is_empty() {
            return Err(AlignError::EmptyTarget);
        }
        for (i, l) in links.iter().enumerate() {
            if l.target >= target_len {
                return Err(AlignError::LinkOutOfRange {
                    source_index: i,
                    target: l.target,
                    target_len,
                });
            }
            if l.score.is_nan() || l.score.abs() > 1.0 + SCORE_EPSILON {
                return Err(AlignError::BadScore(l.score));
            }
        }
        Ok(DirectionalAlignment {
            direction,
            links,
            target_len,
        })
    }

    /// Alignment from bare target indices, every score set to 1.
    pub fn from_targets(
        direction: Direction,
        targets: &[usize],
        target_len: usize,
    ) -> Result<Self, AlignError> {
        let links = targets
            .iter()
            .map(|&target| Link { target, score: 1.0 })
            .collect();
        DirectionalAlignment::new(direction, links, target_len)
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, source: usize) -> Option<Link> {
        self.links.get(source).copied()
    }

    pub fn source_len(&self) -> usize {
        self.links.len()
    }

    pub fn target_len(&self) -> usize {
        self.target_len
    }

    fn expect(&self, direction: Direction) -> Result<(), AlignError> {
        if self.direction == direction {
            Ok(())
        } else {
            Err(AlignError::WrongDirection {
                expected: direction,
            })
        }
    }

    /// Pharaoh line with English indices first, pairs sorted.
    pub fn to_pharaoh(&self, with_scores: bool) -> PharaohLine {
        let mut pairs: Vec<((usize, usize), f64)> = self
            .links
            .iter()
            .enumerate()
            .map(|(s, l)| match self.direction {
                Direction::FGivenE => ((s, l.target), l.score),
                Direction::EGivenF => ((l.target, s), l.score),
            })
            .collect();
        pairs.sort_by_key(|p| p.0);
        PharaohLine {
            pairs: pairs.iter().map(|p| p.0).collect(),
            scores: with_scores.then(|| pairs.iter().map(|p| p.1).collect()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignedPair {
    pub english: usize,
    pub foreign: usize,
    pub score: Option<f64>,
}

/// Links both directional alignments agree on, as (english, foreign) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricAlignment {
    english_len: usize,
    foreign_len: usize,
    pairs: Vec<AlignedPair>,
}

impl SymmetricAlignment {
    pub fn english_len(&self) -> usize {
        self.english_len
    }

    pub fn foreign_len(&self) -> usize {
        self.foreign_len
    }

    /// Pairs sorted by (english, foreign).
    pub fn pairs(&self) -> &[AlignedPair] {
        &self.pairs
    }

    pub fn index_pairs(&self) -> Vec<(usize, usize)> {
        self.pairs.iter().map(|p| (p.english, p.foreign)).collect()
    }

    pub fn contains(&self, english: usize, foreign: usize) -> bool {
        self.pairs
            .binary_search_by(|p| (p.english, p.foreign).cmp(&(english, foreign)))
            .is_ok()
    }

    /// Foreign partner of an English token, if any.
    pub fn foreign_for(&self, english: usize) -> Option<usize> {
        self.pairs
            .iter()
            .find(|p| p.english == english)
            .map(|p| p.foreign)
    }

    pub fn to_pharaoh(&self, with_scores: bool) -> PharaohLine {
        PharaohLine {
            pairs: self.index_pairs(),
            scores: with_scores.then(|| {
                self.pairs
                    .iter()
                    .map(|p| p.score.unwrap_or(f64::NAN))
                    .collect()
            }),
        }
    }
}

pub fn cosine(u: &[f32], v: &[f32]) -> Result<f64, AlignError> {
    if u.len() != v.len() {
        return Err(AlignError::DimMismatch(u.len(), v.len()));
    }
    let nu = norm(u);
    if nu == 0.0 {
        return Err(AlignError::ZeroVector {
            side: "left",
            row: 0,
        });
    }
    let nv = norm(v);
    if nv == 0.0 {
        return Err(AlignError::ZeroVector {
            side: "right",
            row: 0,
        });
    }
    Ok(dot(u, v) / (nu * nv))
}

fn dot(u: &[f32], v: &[f32]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(&a, &b)| f64::from(a) * f64::from(b))
        .sum()
}

fn norm(u: &[f32]) -> f64 {
    dot(u, u).sqrt()
}

fn row_norms(e: &SentenceEmbedding, side: &'static str) -> Result<Vec<f64>, AlignError> {
    e.rows()
        .enumerate()
        .map(|(row, r)| match norm(r) {
            0.0 => Err(AlignError::ZeroVector { side, row }),
            n => Ok(n),
        })
        .collect()
}

/// Links each source row to its most cosine-similar target row; ties go to
/// the smallest target index.
pub fn align_directional(
    src: &SentenceEmbedding,
    tgt: &SentenceEmbedding,
    direction: Direction,
) -> Result<DirectionalAlignment, AlignError> {
    if src.dim() != tgt.dim() {
        return Err(AlignError::DimMismatch(src.dim(), tgt.dim()));
    }
    if tgt.is_empty() {
        return Err(AlignError::EmptyTarget);
    }
    let src_norms = row_norms(src, "source")?;
    let tgt_norms = row_norms(tgt, "target")?;
    let links = src
        .rows()
        .zip(&src_norms)
        .map(|(s, &ns)| {
            let mut best = Link {
                target: 0,
                score: f64::NEG_INFINITY,
            };
            for (j, (t, &nt)) in tgt.rows().zip(&tgt_norms).enumerate() {
                let score = dot(s, t) / (ns * nt);
                if score > best.score {
                    best = Link { target: j, score };
                }
            }
            best
        })
        .collect();
    DirectionalAlignment::new(direction, links, tgt.len())
}

/// Pairs (e, f) such that `chi_fe` links e to f and `chi_ef` links f to e.
/// Argument order does not matter as long as the directions differ.
pub fn intersect(
    chi_fe: &DirectionalAlignment,
    chi_ef: &DirectionalAlignment,
) -> Result<SymmetricAlignment, AlignError> {
    let (fe, ef) = match (chi_fe.direction, chi_ef.direction) {
        (Direction::FGivenE, Direction::EGivenF) => (chi_fe, chi_ef),
        (Direction::EGivenF, Direction::FGivenE) => (chi_ef, chi_fe),
        _ => {
            return Err(AlignError::WrongDirection {
                expected: Direction::EGivenF,
            })
        }
    };
    check_pair(fe, ef)?;
    let pairs = fe
        .links
        .iter()
        .enumerate()
        .filter(|(e, l)| ef.links[l.target].target == *e)
        .map(|(e, l)| AlignedPair {
            english: e,
            foreign: l.target,
            score: Some(l.score),
        })
        .collect();
    Ok(SymmetricAlignment {
        english_len: fe.source_len(),
        foreign_len: fe.target_len,
        pairs,
    })
}

fn check_pair(fe: &DirectionalAlignment, ef: &DirectionalAlignment) -> Result<(), AlignError> {
    if fe.source_len() != ef.target_len || fe.target_len != ef.source_len() {
        return Err(AlignError::LengthMismatch(
            fe.source_len(),
            fe.target_len,
            ef.target_len,
            ef.source_len(),
        ));
    }
    Ok(())
}

/// Higher-scoring of the forward link of `e_index` and the best reverse
/// link pointing at it. The forward link wins ties.
pub fn best_link(
    e_index: usize,
    chi_fe: &DirectionalAlignment,
    chi_ef: &DirectionalAlignment,
) -> Result<(usize, f64), AlignError> {
    chi_fe.expect(Direction::FGivenE)?;
    chi_ef.expect(Direction::EGivenF)?;
    check_pair(chi_fe, chi_ef)?;
    let forward = chi_fe.link(e_index).ok_or(AlignError::IndexOutOfRange {
        index: e_index,
        len: chi_fe.source_len(),
    })?;
    let mut best = (forward.target, forward.score);
    let mut reverse: Option<(usize, f64)> = None;
    for (f, l) in chi_ef.links.iter().enumerate() {
        if l.target == e_index && reverse.is_none_or(|(_, s)| l.score > s) {
            reverse = Some((f, l.score));
        }
    }
    if let Some(r) = reverse {
        if r.1 > best.1 {
            best = r;
        }
    }
    Ok(best)
}

/// One line of a Pharaoh alignment file: `i-j` pairs, English index first,
/// optionally followed by `#scores` and one score per pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PharaohLine {
    pub pairs: Vec<(usize, usize)>,
    pub scores: Option<Vec<f64>>,
}

impl PharaohLine {
    /// Foreign index for each English token. When a token has several
    /// links, the highest score wins, or the smallest foreign index when
    /// there are no scores.
    pub fn foreign_for(&self, english: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (k, &(e, f)) in self.pairs.iter().enumerate() {
            if e != english {
                continue;
            }
            let score = self.scores.as_ref().map_or(0.0, |s| s[k]);
            let better = match best {
                None => true,
                Some((bf, bs)) => score > bs || (score == bs && f < bf),
            };
            if better {
                best = Some((f, score));
            }
        }
        best.map(|(f, _)| f)
    }
}

impl fmt::Display for PharaohLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (e, g) in &self.pairs {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{e}-{g}")?;
        }
        if let Some(scores) = &self.scores {
            f.write_str(if first { "#scores" } else { " #scores" })?;
            for s in scores {
                write!(f, " {s}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for PharaohLine {
    type Err = AlignError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let (pairs_part, scores_part) = match line.split_once("#scores") {
            Some((p, s)) => (p, Some(s)),
            None => (line, None),
        };
        let malformed = |what: &str| AlignError::Malformed(what.to_string());
        let pairs = pairs_part
            .split_whitespace()
            .map(|item| {
                let (e, f) = item.split_once('-').ok_or_else(|| malformed(item))?;
                Ok((
                    e.parse().map_err(|_| malformed(item))?,
                    f.parse().map_err(|_| malformed(item))?,
                ))
            })
            .collect::<Result<Vec<_>, AlignError>>()?;
        let scores = scores_part
            .map(|s| {
                s.split_whitespace()
                    .map(|x| x.parse::<f64>().map_err(|_| malformed(x)))
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()?;
        if let Some(s) = &scores {
            if s.len() != pairs.len() {
                return Err(malformed("score count differs from pair count"));
            }
        }
        Ok(PharaohLine { pairs, scores })
    }
}
