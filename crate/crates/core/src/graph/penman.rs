//! PENMAN reading and canonical writing.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use super::{looks_like_variable, AmrGraph, Attribute, Child, Edge, GraphError};

/// Errors carry the byte offset into the input where the problem was found.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PenmanError {
    #[error("empty input at offset {offset}")]
    Empty { offset: usize },
    #[error("unbalanced parentheses at offset {offset}")]
    Unbalanced { offset: usize },
    #[error("unterminated string starting at offset {offset}")]
    UnterminatedString { offset: usize },
    #[error("expected {expected} at offset {offset}, found `{found}`")]
    Unexpected {
        offset: usize,
        expected: &'static str,
        found: String,
    },
    #[error("variable `{var}` redefined at offset {offset} as `{second}` (was `{first}`)")]
    ConflictingConcept {
        var: String,
        offset: usize,
        first: String,
        second: String,
    },
    #[error("reference to undefined variable `{var}` at offset {offset}")]
    UndefinedVariable { var: String, offset: usize },
    #[error("trailing input at offset {offset}")]
    TrailingInput { offset: usize },
    #[error("invalid graph: {0}")]
    Invalid(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Slash,
    Role(String),
    Quoted(String),
    Symbol(String),
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, PenmanError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'(' => {
                out.push((Tok::Open, i));
                i += 1;
            }
            b')' => {
                out.push((Tok::Close, i));
                i += 1;
            }
            b'/' => {
                out.push((Tok::Slash, i));
                i += 1;
            }
            b'"' => {
                let start = i;
                i += 1;
                loop {
                    match bytes.get(i) {
                        None => return Err(PenmanError::UnterminatedString { offset: start }),
                        Some(b'\\') => i += 2,
                        Some(b'"') => {
                            i += 1;
                            break;
                        }
                        Some(_) => i += 1,
                    }
                }
                out.push((Tok::Quoted(text[start..i].to_string()), start));
            }
            _ if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len()
                    && !bytes[i].is_ascii_whitespace()
                    && !matches!(bytes[i], b'(' | b')' | b'/' | b'"')
                {
                    i += 1;
                }
                let word = text[start..i].to_string();
                let tok = if word.starts_with(':') {
                    Tok::Role(word)
                } else {
                    Tok::Symbol(word)
                };
                out.push((tok, start));
            }
        }
    }
    Ok(out)
}

enum Target {
    Node(String),
    Symbol(String, usize),
    Quoted(String),
}

struct Parser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    end: usize,
    concepts: BTreeMap<String, (String, usize)>,
    children: Vec<(String, String, Target)>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a (Tok, usize)> {
        self.toks.get(self.pos)
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Open => "(".into(),
            Tok::Close => ")".into(),
            Tok::Slash => "/".into(),
            Tok::Role(s) | Tok::Quoted(s) | Tok::Symbol(s) => s.clone(),
        }
    }

    fn next_or_unbalanced(&mut self, open_at: usize) -> Result<&'a (Tok, usize), PenmanError> {
        let t = self
            .toks
            .get(self.pos)
            .ok_or(PenmanError::Unbalanced { offset: open_at })?;
        self.pos += 1;
        Ok(t)
    }

    /// Parses `( var / concept (role target)* )` and returns the variable.
    fn node(&mut self) -> Result<String, PenmanError> {
        let open_at = match self.peek() {
            Some((Tok::Open, off)) => *off,
            Some((t, off)) => {
                return Err(PenmanError::Unexpected {
                    offset: *off,
                    expected: "`(`",
                    found: Self::describe(t),
                })
            }
            None => return Err(PenmanError::Empty { offset: self.end }),
        };
        self.pos += 1;

        let var = match self.next_or_unbalanced(open_at)? {
            (Tok::Symbol(s), _) => s.clone(),
            (t, off) => {
                return Err(PenmanError::Unexpected {
                    offset: *off,
                    expected: "variable",
                    found: Self::describe(t),
                })
            }
        };
        match self.next_or_unbalanced(open_at)? {
            (Tok::Slash, _) => {}
            (t, off) => {
                return Err(PenmanError::Unexpected {
                    offset: *off,
                    expected: "`/`",
                    found: Self::describe(t),
                })
            }
        }
        let (concept, concept_at) = match self.next_or_unbalanced(open_at)? {
            (Tok::Symbol(s), off) | (Tok::Quoted(s), off) => (s.clone(), *off),
            (t, off) => {
                return Err(PenmanError::Unexpected {
                    offset: *off,
                    expected: "concept",
                    found: Self::describe(t),
                })
            }
        };
        match self.concepts.get(&var) {
            Some((first, _)) if *first != concept => {
                return Err(PenmanError::ConflictingConcept {
                    var,
                    offset: concept_at,
                    first: first.clone(),
                    second: concept,
                })
            }
            Some(_) => {}
            None => {
                self.concepts.insert(var.clone(), (concept, concept_at));
            }
        }

        loop {
            match self.next_or_unbalanced(open_at)? {
                (Tok::Close, _) => return Ok(var),
                (Tok::Role(role), _) => {
                    let target = match self.peek() {
                        None => return Err(PenmanError::Unbalanced { offset: open_at }),
                        Some((Tok::Open, _)) => Target::Node(self.node()?),
                        Some((Tok::Symbol(s), off)) => {
                            self.pos += 1;
                            Target::Symbol(s.clone(), *off)
                        }
                        Some((Tok::Quoted(s), _)) => {
                            self.pos += 1;
                            Target::Quoted(s.clone())
                        }
                        Some((t, off)) => {
                            return Err(PenmanError::Unexpected {
                                offset: *off,
                                expected: "role target",
                                found: Self::describe(t),
                            })
                        }
                    };
                    self.children.push((var.clone(), role.clone(), target));
                }
                (t, off) => {
                    return Err(PenmanError::Unexpected {
                        offset: *off,
                        expected: "role or `)`",
                        found: Self::describe(t),
                    })
                }
            }
        }
    }
}

/// Parses a single PENMAN expression.
///
/// Bare symbols in target position that name a variable defined anywhere in
/// the expression become edges to that variable. Everything else is kept as
/// a constant, verbatim, quotes included.
pub fn parse_penman(text: &str) -> Result<AmrGraph, PenmanError> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(PenmanError::Empty { offset: 0 });
    }
    let mut parser = Parser {
        toks: &toks,
        pos: 0,
        end: text.len(),
        concepts: BTreeMap::new(),
        children: Vec::new(),
    };
    let root = parser.node()?;
    if let Some((t, off)) = parser.peek() {
        return Err(match t {
            Tok::Close => PenmanError::Unbalanced { offset: *off },
            _ => PenmanError::TrailingInput { offset: *off },
        });
    }

    let concepts = parser.concepts;
    let mut edges = Vec::new();
    let mut attributes = Vec::new();
    let mut seen = HashSet::new();
    for (source, role, target) in parser.children {
        let (text, is_edge) = match target {
            Target::Node(v) => (v, true),
            Target::Quoted(q) => (q, false),
            Target::Symbol(s, off) => {
                if concepts.contains_key(&s) {
                    (s, true)
                } else if looks_like_variable(&s) {
                    return Err(PenmanError::UndefinedVariable {
                        var: s,
                        offset: off,
                    });
                } else {
                    (s, false)
                }
            }
        };
        if !seen.insert((source.clone(), role.clone(), text.clone())) {
            continue;
        }
        if is_edge {
            edges.push(Edge {
                source,
                role,
                target: text,
            });
        } else {
            attributes.push(Attribute {
                source,
                role,
                value: text,
            });
        }
    }
    let instances = concepts.into_iter().map(|(v, (c, _))| (v, c)).collect();
    Ok(AmrGraph::new(root, instances, edges, attributes)?)
}

/// Canonical PENMAN text: children ordered by (role, target), four spaces of
/// indentation per nesting level, re-entrant variables written bare after
/// their first full mention.
pub fn serialize_penman(graph: &AmrGraph) -> String {
    let mut out = String::new();
    let mut written = HashSet::new();
    write_node(graph, graph.root(), 0, &mut written, &mut out);
    out
}

fn write_node<'a>(
    graph: &'a AmrGraph,
    var: &'a str,
    depth: usize,
    written: &mut HashSet<&'a str>,
    out: &mut String,
) {
    written.insert(var);
    out.push('(');
    out.push_str(var);
    out.push_str(" / ");
    out.push_str(graph.concept(var).unwrap_or_default());
    for (role, child) in graph.children(var) {
        out.push('\n');
        out.extend(std::iter::repeat_n(' ', 4 * (depth + 1)));
        out.push_str(role);
        out.push(' ');
        match child {
            Child::Node(t) if !written.contains(t) => write_node(graph, t, depth + 1, written, out),
            Child::Node(t) | Child::Constant(t) => out.push_str(t),
        }
    }
    out.push(')');
}
