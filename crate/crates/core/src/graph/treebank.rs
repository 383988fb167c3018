//! Treebank files: blank-line separated blocks of `# ::key value` metadata
//! followed by one PENMAN expression.
//!
//! ```text
//! # ::id s1
//! # ::lang en
//! # ::tok The boy wants to go
//! # ::alignments 1-1|b 2-2|w 4-4|g
//! (w / want-01
//!     :ARG0 (b / boy)
//!     :ARG1 (g / go-02
//!         :ARG0 b))
//! ```
//!
//! Unknown metadata keys are ignored on read and not written back.

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use super::{
    format_alignment_line, parse_alignment_line, parse_penman, serialize_penman, AlignmentError,
    AmrGraph, NodeAlignment, PenmanError,
};

#[derive(Debug, Clone, PartialEq)]
pub struct TreebankEntry {
    pub id: String,
    pub language: String,
    pub tokens: Vec<String>,
    pub graph: AmrGraph,
    pub alignment: Option<NodeAlignment>,
}

impl TreebankEntry {
    pub fn new(
        id: impl Into<String>,
        language: impl Into<String>,
        tokens: Vec<String>,
        graph: AmrGraph,
        alignment: Option<NodeAlignment>,
    ) -> Result<Self, TreebankErrorKind> {
        if tokens.is_empty() {
            return Err(TreebankErrorKind::EmptyTokens);
        }
        if let Some(a) = &alignment {
            a.ensure_len(tokens.len())?;
            if let Some((var, _)) = a.iter().find(|(v, _)| !graph.contains(v)) {
                return Err(AlignmentError::UnknownVariable(var.to_string()).into());
            }
        }
        Ok(TreebankEntry {
            id: id.into(),
            language: language.into(),
            tokens,
            graph,
            alignment,
        })
    }
}

#[derive(Debug, Error)]
pub enum TreebankErrorKind {
    #[error("block has no `# ::tok` line")]
    MissingTokens,
    #[error("`# ::tok` line has no tokens")]
    EmptyTokens,
    #[error("block has no graph")]
    MissingGraph,
    #[error("alignment: {0}")]
    Alignment(#[from] AlignmentError),
    #[error("graph: {0}")]
    Penman(#[from] PenmanError),
}

#[derive(Debug, Error)]
pub enum TreebankError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("block starting at line {line}: {kind}")]
    Block {
        line: usize,
        kind: TreebankErrorKind,
    },
}

pub fn read_treebank(path: impl AsRef<Path>) -> Result<Vec<TreebankEntry>, TreebankError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| TreebankError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_treebank(&text)
}

pub fn write_treebank(
    entries: &[TreebankEntry],
    path: impl AsRef<Path>,
) -> Result<(), TreebankError> {
    let path = path.as_ref();
    fs::write(path, format_treebank(entries)).map_err(|source| TreebankError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn parse_treebank(text: &str) -> Result<Vec<TreebankEntry>, TreebankError> {
    let mut entries = Vec::new();
    let mut block: Vec<&str> = Vec::new();
    let mut block_start = 0;
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            if !block.is_empty() {
                entries.push(parse_block(&block, block_start)?);
                block.clear();
            }
        } else {
            if block.is_empty() {
                block_start = idx + 1;
            }
            block.push(line);
        }
    }
    if !block.is_empty() {
        entries.push(parse_block(&block, block_start)?);
    }
    Ok(entries)
}

fn parse_block(lines: &[&str], line: usize) -> Result<TreebankEntry, TreebankError> {
    let fail = |kind: TreebankErrorKind| TreebankError::Block { line, kind };
    let mut id = String::new();
    let mut language = String::new();
    let mut tokens: Option<Vec<String>> = None;
    let mut alignment_line: Option<&str> = None;
    let mut graph_lines = Vec::new();
    for l in lines {
        let trimmed = l.trim_start();
        if let Some(meta) = trimmed.strip_prefix("# ::") {
            let (key, value) = meta.split_once(char::is_whitespace).unwrap_or((meta, ""));
            match key {
                "id" => id = value.trim().to_string(),
                "lang" => language = value.trim().to_string(),
                "tok" => tokens = Some(value.split_whitespace().map(str::to_string).collect()),
                "alignments" => alignment_line = Some(trimmed),
                _ => {}
            }
        } else if !trimmed.starts_with('#') {
            graph_lines.push(*l);
        }
    }
    let tokens = tokens.ok_or_else(|| fail(TreebankErrorKind::MissingTokens))?;
    if tokens.is_empty() {
        return Err(fail(TreebankErrorKind::EmptyTokens));
    }
    if graph_lines.is_empty() {
        return Err(fail(TreebankErrorKind::MissingGraph));
    }
    let graph = parse_penman(&graph_lines.join("\n")).map_err(|e| fail(e.into()))?;
    let alignment = alignment_line
        .map(|l| parse_alignment_line(l, &graph, tokens.len()))
        .transpose()
        .map_err(|e| fail(e.into()))?;
    TreebankEntry::new(id, language, tokens, graph, alignment).map_err(fail)
}

pub fn format_treebank(entries: &[TreebankEntry]) -> String {
    let mut out = String::new();
    for (i, entry) in entries.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        if !entry.id.is_empty() {
            out.push_str(&format!("# ::id {}\n", entry.id));
        }
        if !entry.language.is_empty() {
            out.push_str(&format!("# ::lang {}\n", entry.language));
        }
        out.push_str(&format!("# ::tok {}\n", entry.tokens.join(" ")));
        if let Some(a) = &entry.alignment {
            out.push_str(&format_alignment_line(a));
            out.push('\n');
        }
        out.push_str(&serialize_penman(&entry.graph));
        out.push('\n');
    }
    out
}
