//! Word-to-node alignments and their `# ::alignments` metadata line.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::AmrGraph;

const PREFIX: &str = "# ::alignments";

/// Inclusive, 0-based token span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn single(index: usize) -> Self {
        Span {
            start: index,
            end: index,
        }
    }

    /// Last token of the span.
    pub fn head(&self) -> usize {
        self.end
    }

    pub fn tokens(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignmentError {
    #[error("line does not start with `{PREFIX}`")]
    MissingPrefix,
    #[error("malformed alignment item `{0}` (expected start-end|var)")]
    Malformed(String),
    #[error("variable `{0}` is not in the graph")]
    UnknownVariable(String),
    #[error("span {start}-{end} for `{var}` is outside a sentence of {len} tokens")]
    OutOfRange {
        var: String,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("span {start}-{end} for `{var}` ends before it starts")]
    Reversed {
        var: String,
        start: usize,
        end: usize,
    },
    #[error("variable `{0}` is aligned more than once")]
    Duplicate(String),
    #[error("alignment covers {found} tokens but the sentence has {expected}")]
    LengthMismatch { expected: usize, found: usize },
}

/// Mapping from graph variables to token spans of one sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeAlignment {
    entries: BTreeMap<String, Span>,
    sentence_len: usize,
}

impl NodeAlignment {
    pub fn new(sentence_len: usize) -> Self {
        NodeAlignment {
            entries: BTreeMap::new(),
            sentence_len,
        }
    }

    pub fn sentence_len(&self) -> usize {
        self.sentence_len
    }

    pub fn insert(&mut self, var: impl Into<String>, span: Span) -> Result<(), AlignmentError> {
        let var = var.into();
        if span.end < span.start {
            return Err(AlignmentError::Reversed {
                var,
                start: span.start,
                end: span.end,
            });
        }
        if span.end >= self.sentence_len {
            return Err(AlignmentError::OutOfRange {
                var,
                start: span.start,
                end: span.end,
                len: self.sentence_len,
            });
        }
        if self.entries.contains_key(&var) {
            return Err(AlignmentError::Duplicate(var));
        }
        self.entries.insert(var, span);
        Ok(())
    }

    pub fn get(&self, var: &str) -> Option<Span> {
        self.entries.get(var).copied()
    }

    pub fn contains(&self, var: &str) -> bool {
        self.entries.contains_key(var)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in variable order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, Span)> + '_ {
        self.entries.iter().map(|(v, s)| (v.as_str(), *s))
    }

    pub fn ensure_len(&self, expected: usize) -> Result<(), AlignmentError> {
        if self.sentence_len == expected {
            Ok(())
        } else {
            Err(AlignmentError::LengthMismatch {
                expected,
                found: self.sentence_len,
            })
        }
    }
}

/// Parses `# ::alignments 1-1|b 2-2|w` against a graph and sentence length.
pub fn parse_alignment_line(
    line: &str,
    graph: &AmrGraph,
    n_tokens: usize,
) -> Result<NodeAlignment, AlignmentError> {
    let rest = line
        .trim()
        .strip_prefix(PREFIX)
        .ok_or(AlignmentError::MissingPrefix)?;
    if !rest.is_empty() && !rest.starts_with(char::is_whitespace) {
        return Err(AlignmentError::MissingPrefix);
    }
    let mut alignment = NodeAlignment::new(n_tokens);
    for item in rest.split_whitespace() {
        let malformed = || AlignmentError::Malformed(item.to_string());
        let (span, var) = item.split_once('|').ok_or_else(malformed)?;
        let (start, end) = span.split_once('-').ok_or_else(malformed)?;
        let start: usize = start.parse().map_err(|_| malformed())?;
        let end: usize = end.parse().map_err(|_| malformed())?;
        if var.is_empty() {
            return Err(malformed());
        }
        if !graph.contains(var) {
            return Err(AlignmentError::UnknownVariable(var.to_string()));
        }
        alignment.insert(var, Span::new(start, end))?;
    }
    Ok(alignment)
}

/// Writes the metadata line, items ordered by span and then variable.
pub fn format_alignment_line(alignment: &NodeAlignment) -> String {
    let mut items: Vec<(Span, &str)> = alignment.iter().map(|(v, s)| (s, v)).collect();
    items.sort();
    let mut line = String::from(PREFIX);
    for (span, var) in items {
        line.push(' ');
        line.push_str(&format!("{span}|{var}"));
    }
    line
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_penman;
    use proptest::prelude::*;

    fn fig1() -> AmrGraph {
        parse_penman("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))").unwrap()
    }

    #[test]
    fn parses_boy_wants_alignments() {
        let a = parse_alignment_line("# ::alignments 1-1|b 2-2|w 4-4|g", &fig1(), 5).unwrap();
        assert_eq!(a.get("b"), Some(Span::single(1)));
        assert_eq!(a.get("w"), Some(Span::single(2)));
        assert_eq!(a.get("g"), Some(Span::single(4)));
        assert_eq!(
            format_alignment_line(&a),
            "# ::alignments 1-1|b 2-2|w 4-4|g"
        );
    }

    #[test]
    fn empty_line_is_empty_alignment() {
        let a = parse_alignment_line("# ::alignments", &fig1(), 5).unwrap();
        assert!(a.is_empty());
        assert_eq!(format_alignment_line(&a), "# ::alignments");
    }

    #[test]
    fn multi_token_span() {
        let g = parse_penman("(p / person :name (n / name :op1 \"New\" :op2 \"York\"))").unwrap();
        let a = parse_alignment_line("# ::alignments 0-1|n", &g, 2).unwrap();
        assert_eq!(a.get("n"), Some(Span::new(0, 1)));
    }

    #[test]
    fn errors() {
        let g = fig1();
        assert_eq!(
            parse_alignment_line("# ::alignments 1-1|q", &g, 5),
            Err(AlignmentError::UnknownVariable("q".into()))
        );
        assert!(matches!(
            parse_alignment_line("# ::alignments 4-5|b", &g, 5),
            Err(AlignmentError::OutOfRange { .. })
        ));
        assert!(matches!(
            parse_alignment_line("# ::alignments 3-2|b", &g, 5),
            Err(AlignmentError::Reversed { .. })
        ));
        assert_eq!(
            parse_alignment_line("# ::alignments 1-1|b 2-2|b", &g, 5),
            Err(AlignmentError::Duplicate("b".into()))
        );
        assert!(matches!(
            parse_alignment_line("# ::alignments 1|b", &g, 5),
            Err(AlignmentError::Malformed(_))
        ));
        assert_eq!(
            parse_alignment_line("# ::tok x", &g, 5),
            Err(AlignmentError::MissingPrefix)
        );
        assert_eq!(
            parse_alignment_line("# ::alignmentsX", &g, 5),
            Err(AlignmentError::MissingPrefix)
        );
    }

    proptest! {
        #[test]
        fn format_then_parse_is_identity(spans in proptest::collection::vec((0usize..6, 0usize..3), 3)) {
            let g = fig1();
            let mut a = NodeAlignment::new(8);
            for (var, (start, width)) in ["b", "g", "w"].iter().zip(spans) {
                a.insert(*var, Span::new(start, start + width)).unwrap();
            }
            let line = format_alignment_line(&a);
            prop_assert_eq!(parse_alignment_line(&line, &g, 8).unwrap(), a);
        }
    }
}
