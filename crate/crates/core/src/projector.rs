//! Annotation projection and alignment combination.
//!
//! An English alignment `BA(e_k | n_j)` is carried to the foreign sentence
//! by following a word link from the head token `e_k` of each concept's
//! span. The combination strategies fill the concepts one route leaves
//! unaligned from the next route in a fixed fallback order.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::graph::{AlignmentError, AmrGraph, NodeAlignment, Span, TreebankEntry};
use crate::word_align::{
    best_link, AlignError, Direction, DirectionalAlignment, PharaohLine, SymmetricAlignment,
};

#[derive(Debug, Error)]
pub enum ProjectionError {
    #[error("English alignment covers {english} tokens but the word alignment has {links}")]
    EnglishLength { english: usize, links: usize },
    #[error("foreign sentence has {foreign} tokens but the word alignment has {links}")]
    ForeignLength { foreign: usize, links: usize },
    #[error("word alignment must be F-given-E")]
    Direction,
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error(transparent)]
    Word(#[from] AlignError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Projection through the F-given-E contextual alignment.
    Ap,
    /// Direct rule + EM alignment of foreign tokens.
    Ba,
    /// BA first, projection for the rest.
    EaBaThenAp,
    /// Intersection projection, then BA, then max-score projection.
    EaIntersect,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Ap => "ap",
            Strategy::Ba => "ba",
            Strategy::EaBaThenAp => "ea",
            Strategy::EaIntersect => "intersect-ea",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ap" => Ok(Strategy::Ap),
            "ba" => Ok(Strategy::Ba),
            "ea" => Ok(Strategy::EaBaThenAp),
            "intersect-ea" => Ok(Strategy::EaIntersect),
            other => Err(format!(
                "unknown strategy `{other}` (expected ap, ba, ea or intersect-ea)"
            )),
        }
    }
}

/// Sub-aligner that supplied a variable's final alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    IntersectAp,
    Ba,
    Ap,
    MaxAp,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SourceCounts {
    pub intersect_ap: usize,
    pub ba: usize,
    pub ap: usize,
    pub max_ap: usize,
}

impl SourceCounts {
    fn add(&mut self, source: Source) {
        match source {
            Source::IntersectAp => self.intersect_ap += 1,
            Source::Ba => self.ba += 1,
            Source::Ap => self.ap += 1,
            Source::MaxAp => self.max_ap += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.intersect_ap + self.ba + self.ap + self.max_ap
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionReport {
    pub strategy: Strategy,
    pub coverage: f64,
    pub sources: SourceCounts,
    /// Foreign tokens claimed by more than one variable.
    pub collisions: usize,
}

impl ProjectionReport {
    /// Report for an alignment whose variables all came from one source.
    pub fn single(
        strategy: Strategy,
        source: Source,
        graph: &AmrGraph,
        alignment: &NodeAlignment,
    ) -> Self {
        let mut sources = SourceCounts::default();
        alignment.iter().for_each(|_| sources.add(source));
        ProjectionReport {
            strategy,
            coverage: coverage(alignment, graph),
            sources,
            collisions: collisions(alignment),
        }
    }

    /// `id \t strategy \t coverage \t n_iAP \t n_BA \t n_AP \t n_maxAP \t collisions`
    pub fn tsv_row(&self, id: &str) -> String {
        format!(
            "{id}\t{}\t{:.4}\t{}\t{}\t{}\t{}\t{}",
            self.strategy,
            self.coverage,
            self.sources.intersect_ap,
            self.sources.ba,
            self.sources.ap,
            self.sources.max_ap,
            self.collisions
        )
    }
}

pub const REPORT_HEADER: &str = "id\tstrategy\tcoverage\tn_iAP\tn_BA\tn_AP\tn_maxAP\tcollisions";

/// Fraction of graph variables with an alignment.
pub fn coverage(alignment: &NodeAlignment, graph: &AmrGraph) -> f64 {
    let n = graph.num_variables();
    if n == 0 {
        return 0.0;
    }
    let aligned = alignment.iter().filter(|(v, _)| graph.contains(v)).count();
    aligned as f64 / n as f64
}

/// Number of token positions covered by two or more variables' spans.
pub fn collisions(alignment: &NodeAlignment) -> usize {
    let mut claims: HashMap<usize, usize> = HashMap::new();
    for (_, span) in alignment.iter() {
        for t in span.tokens() {
            *claims.entry(t).or_default() += 1;
        }
    }
    claims.values().filter(|&&c| c > 1).count()
}

fn project_via(
    ba_en: &NodeAlignment,
    foreign_len: usize,
    link: impl Fn(usize) -> Option<usize>,
) -> Result<NodeAlignment, ProjectionError> {
    let mut out = NodeAlignment::new(foreign_len);
    for (var, span) in ba_en.iter() {
        if let Some(f) = link(span.head()) {
            out.insert(var, Span::single(f))?;
        }
    }
    Ok(out)
}

fn check_lengths(
    ba_en: &NodeAlignment,
    english: usize,
    foreign: usize,
    foreign_len: usize,
) -> Result<(), ProjectionError> {
    if ba_en.sentence_len() != english {
        return Err(ProjectionError::EnglishLength {
            english: ba_en.sentence_len(),
            links: english,
        });
    }
    if foreign != foreign_len {
        return Err(ProjectionError::ForeignLength {
            foreign: foreign_len,
            links: foreign,
        });
    }
    Ok(())
}

/// Projects each aligned variable through the F-given-E link of the last
/// token of its English span.
pub fn project(
    ba_en: &NodeAlignment,
    chi_fe: &DirectionalAlignment,
    foreign_len: usize,
) -> Result<NodeAlignment, ProjectionError> {
    if chi_fe.direction() != Direction::FGivenE {
        return Err(ProjectionError::Direction);
    }
    check_lengths(ba_en, chi_fe.source_len(), chi_fe.target_len(), foreign_len)?;
    project_via(ba_en, foreign_len, |e| chi_fe.link(e).map(|l| l.target))
}

/// Projection restricted to links present in the symmetric alignment.
pub fn project_intersection(
    ba_en: &NodeAlignment,
    sym: &SymmetricAlignment,
) -> Result<NodeAlignment, ProjectionError> {
    check_lengths(
        ba_en,
        sym.english_len(),
        sym.foreign_len(),
        sym.foreign_len(),
    )?;
    project_via(ba_en, sym.foreign_len(), |e| sym.foreign_for(e))
}

/// Projection through whichever direction scores higher for each head
/// token.
pub fn project_max(
    ba_en: &NodeAlignment,
    chi_fe: &DirectionalAlignment,
    chi_ef: &DirectionalAlignment,
) -> Result<NodeAlignment, ProjectionError> {
    check_lengths(
        ba_en,
        chi_fe.source_len(),
        chi_fe.target_len(),
        chi_ef.source_len(),
    )?;
    let mut out = NodeAlignment::new(chi_fe.target_len());
    for (var, span) in ba_en.iter() {
        let (f, _) = best_link(span.head(), chi_fe, chi_ef)?;
        out.insert(var, Span::single(f))?;
    }
    Ok(out)
}

/// Projection through a word alignment read from a Pharaoh file. English
/// tokens without a link leave their concepts unaligned.
pub fn project_pharaoh(
    ba_en: &NodeAlignment,
    links: &PharaohLine,
    foreign_len: usize,
) -> Result<NodeAlignment, ProjectionError> {
    for &(e, f) in &links.pairs {
        if e >= ba_en.sentence_len() {
            return Err(AlignError::IndexOutOfRange {
                index: e,
                len: ba_en.sentence_len(),
            }
            .into());
        }
        if f >= foreign_len {
            return Err(AlignError::IndexOutOfRange {
                index: f,
                len: foreign_len,
            }
            .into());
        }
    }
    project_via(ba_en, foreign_len, |e| links.foreign_for(e))
}

fn combine(
    strategy: Strategy,
    graph: &AmrGraph,
    stages: &[(&NodeAlignment, Source)],
) -> Result<(NodeAlignment, ProjectionReport), ProjectionError> {
    let len = stages[0].0.sentence_len();
    for (a, _) in stages {
        a.ensure_len(len)?;
    }
    let mut out = NodeAlignment::new(len);
    let mut sources = SourceCounts::default();
    let mut chosen: BTreeMap<&str, Source> = BTreeMap::new();
    for (alignment, source) in stages {
        for (var, span) in alignment.iter() {
            if !out.contains(var) {
                out.insert(var, span)?;
                chosen.insert(var, *source);
            }
        }
    }
    chosen.values().for_each(|&s| sources.add(s));
    let report = ProjectionReport {
        strategy,
        coverage: coverage(&out, graph),
        sources,
        collisions: collisions(&out),
    };
    Ok((out, report))
}

/// BA where it has an answer, projection for the remaining concepts.
pub fn combine_ba_then_ap(
    graph: &AmrGraph,
    ba_foreign: &NodeAlignment,
    ap: &NodeAlignment,
) -> Result<(NodeAlignment, ProjectionReport), ProjectionError> {
    combine(
        Strategy::EaBaThenAp,
        graph,
        &[(ba_foreign, Source::Ba), (ap, Source::Ap)],
    )
}

/// Intersection projection first, then BA, then max-score projection.
pub fn combine_intersect(
    graph: &AmrGraph,
    iap: &NodeAlignment,
    ba_foreign: &NodeAlignment,
    maxap: &NodeAlignment,
) -> Result<(NodeAlignment, ProjectionReport), ProjectionError> {
    combine(
        Strategy::EaIntersect,
        graph,
        &[
            (iap, Source::IntersectAp),
            (ba_foreign, Source::Ba),
            (maxap, Source::MaxAp),
        ],
    )
}

/// Concatenates treebanks in input order, tagging each entry with its
/// treebank's language. Ids that occur in more than one treebank are
/// prefixed with the language tag (`de:s1`); when the same tag is used by
/// several inputs the treebank's position is appended to it (`de1:s1`).
pub fn merge_treebanks(treebanks: Vec<(String, Vec<TreebankEntry>)>) -> Vec<TreebankEntry> {
    let mut owners: HashMap<String, Vec<usize>> = HashMap::new();
    for (k, (_, entries)) in treebanks.iter().enumerate() {
        for e in entries.iter().filter(|e| !e.id.is_empty()) {
            let list = owners.entry(e.id.clone()).or_default();
            if list.last() != Some(&k) {
                list.push(k);
            }
        }
    }
    let mut tag_uses: HashMap<&str, usize> = HashMap::new();
    for (lang, _) in &treebanks {
        *tag_uses.entry(lang.as_str()).or_default() += 1;
    }
    let prefixes: Vec<String> = treebanks
        .iter()
        .enumerate()
        .map(|(k, (lang, _))| {
            if tag_uses[lang.as_str()] > 1 {
                format!("{lang}{k}")
            } else {
                lang.clone()
            }
        })
        .collect();

    let mut merged = Vec::with_capacity(treebanks.iter().map(|t| t.1.len()).sum());
    for (k, (lang, entries)) in treebanks.into_iter().enumerate() {
        for mut entry in entries {
            if owners.get(&entry.id).is_some_and(|o| o.len() > 1) {
                entry.id = format!("{}:{}", prefixes[k], entry.id);
            }
            entry.language = lang.clone();
            merged.push(entry);
        }
    }
    merged
}
