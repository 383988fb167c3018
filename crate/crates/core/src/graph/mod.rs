//! AMR graph data model.
//!
//! An [`AmrGraph`] is a rooted, labeled, directed acyclic graph: every
//! variable carries a concept, role edges connect variables, and attribute
//! entries hang constants (numbers, `-`, quoted strings) off variables.
//! Graphs are validated on construction and immutable afterwards.

mod alignment;
mod penman;
mod treebank;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use thiserror::Error;

pub use alignment::{
    format_alignment_line, parse_alignment_line, AlignmentError, NodeAlignment, Span,
};
pub use penman::{parse_penman, serialize_penman, PenmanError};
pub use treebank::{
    format_treebank, parse_treebank, read_treebank, write_treebank, TreebankEntry, TreebankError,
    TreebankErrorKind,
};

/// Role of the synthetic triple marking the graph root.
pub const TOP_ROLE: &str = ":top";
/// Constant carried by the synthetic root triple.
pub const TOP_MARKER: &str = "<root>";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub source: String,
    pub role: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Attribute {
    pub source: String,
    pub role: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("root variable `{0}` has no instance")]
    MissingRoot(String),
    #[error("variable `{0}` is referenced but has no instance")]
    UnknownVariable(String),
    #[error("role `{0}` must start with ':' and contain no whitespace or parentheses")]
    InvalidRole(String),
    #[error("`{0}` is not a valid bare symbol")]
    InvalidSymbol(String),
    #[error("constant `{0}` would be read back as a variable reference")]
    AmbiguousConstant(String),
    #[error("duplicate triple ({source_var}, {role}, {target})")]
    DuplicateTriple {
        source_var: String,
        role: String,
        target: String,
    },
    #[error("edges form a cycle through `{0}`")]
    Cycle(String),
    #[error("variable `{0}` is not reachable from the root")]
    Unreachable(String),
}

/// A child slot of a node in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Child<'a> {
    Node(&'a str),
    Constant(&'a str),
}

impl<'a> Child<'a> {
    fn text(&self) -> &'a str {
        match *self {
            Child::Node(s) | Child::Constant(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmrGraph {
    root: String,
    instances: BTreeMap<String, String>,
    edges: Vec<Edge>,
    attributes: Vec<Attribute>,
}

impl AmrGraph {
    pub fn new(
        root: impl Into<String>,
        instances: BTreeMap<String, String>,
        edges: Vec<Edge>,
        attributes: Vec<Attribute>,
    ) -> Result<Self, GraphError> {
        let graph = AmrGraph {
            root: root.into(),
            instances,
            edges,
            attributes,
        };
        graph.validate()?;
        Ok(graph)
    }

    /// Single-node graph.
    pub fn leaf(var: impl Into<String>, concept: impl Into<String>) -> Result<Self, GraphError> {
        let var = var.into();
        let mut instances = BTreeMap::new();
        instances.insert(var.clone(), concept.into());
        AmrGraph::new(var, instances, Vec::new(), Vec::new())
    }

    fn validate(&self) -> Result<(), GraphError> {
        if !self.instances.contains_key(&self.root) {
            return Err(GraphError::MissingRoot(self.root.clone()));
        }
        for (var, concept) in &self.instances {
            if !is_bare_symbol(var) {
                return Err(GraphError::InvalidSymbol(var.clone()));
            }
            if !is_quoted(concept) && !is_bare_symbol(concept) {
                return Err(GraphError::InvalidSymbol(concept.clone()));
            }
        }

        let mut seen = HashSet::new();
        for e in &self.edges {
            check_role(&e.role)?;
            for v in [&e.source, &e.target] {
                if !self.instances.contains_key(v) {
                    return Err(GraphError::UnknownVariable(v.clone()));
                }
            }
            if !seen.insert((e.source.as_str(), e.role.as_str(), e.target.as_str())) {
                return Err(GraphError::DuplicateTriple {
                    source_var: e.source.clone(),
                    role: e.role.clone(),
                    target: e.target.clone(),
                });
            }
        }
        // Attributes share the key space with edges: an edge and an attribute
        // with the same (source, role, text) would serialize identically.
        for a in &self.attributes {
            check_role(&a.role)?;
            if !self.instances.contains_key(&a.source) {
                return Err(GraphError::UnknownVariable(a.source.clone()));
            }
            if !is_quoted(&a.value) {
                if !is_bare_symbol(&a.value) {
                    return Err(GraphError::InvalidSymbol(a.value.clone()));
                }
                if self.instances.contains_key(&a.value) || looks_like_variable(&a.value) {
                    return Err(GraphError::AmbiguousConstant(a.value.clone()));
                }
            }
            if !seen.insert((a.source.as_str(), a.role.as_str(), a.value.as_str())) {
                return Err(GraphError::DuplicateTriple {
                    source_var: a.source.clone(),
                    role: a.role.clone(),
                    target: a.value.clone(),
                });
            }
        }

        self.check_acyclic_and_reachable()
    }

    fn check_acyclic_and_reachable(&self) -> Result<(), GraphError> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Open,
            Done,
        }
        let adjacency = self.adjacency();
        let mut marks: HashMap<&str, Mark> = HashMap::new();
        // Iterative DFS with an explicit stack of (node, next child index).
        let mut stack: Vec<(&str, usize)> = vec![(self.root.as_str(), 0)];
        marks.insert(self.root.as_str(), Mark::Open);
        while let Some((node, idx)) = stack.pop() {
            let children = adjacency.get(node).map(Vec::as_slice).unwrap_or(&[]);
            if idx < children.len() {
                stack.push((node, idx + 1));
                let child = children[idx];
                match marks.get(child) {
                    Some(Mark::Open) => return Err(GraphError::Cycle(child.to_string())),
                    Some(Mark::Done) => {}
                    None => {
                        marks.insert(child, Mark::Open);
                        stack.push((child, 0));
                    }
                }
            } else {
                marks.insert(node, Mark::Done);
            }
        }
        match self
            .instances
            .keys()
            .find(|v| !marks.contains_key(v.as_str()))
        {
            Some(v) => Err(GraphError::Unreachable(v.clone())),
            None => Ok(()),
        }
    }

    fn adjacency(&self) -> HashMap<&str, Vec<&str>> {
        let mut adj: HashMap<&str, Vec<&str>> = HashMap::new();
        for e in &self.edges {
            adj.entry(e.source.as_str())
                .or_default()
                .push(e.target.as_str());
        }
        adj
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn instances(&self) -> &BTreeMap<String, String> {
        &self.instances
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn concept(&self, var: &str) -> Option<&str> {
        self.instances.get(var).map(String::as_str)
    }

    pub fn contains(&self, var: &str) -> bool {
        self.instances.contains_key(var)
    }

    pub fn num_variables(&self) -> usize {
        self.instances.len()
    }

    /// Children of `var` (edges and attributes together), ordered by role
    /// label and then by target variable or constant text.
    pub fn children(&self, var: &str) -> Vec<(&str, Child<'_>)> {
        let mut out: Vec<(&str, Child<'_>)> = self
            .edges
            .iter()
            .filter(|e| e.source == var)
            .map(|e| (e.role.as_str(), Child::Node(e.target.as_str())))
            .chain(
                self.attributes
                    .iter()
                    .filter(|a| a.source == var)
                    .map(|a| (a.role.as_str(), Child::Constant(a.value.as_str()))),
            )
            .collect();
        out.sort_by(|a, b| a.0.cmp(b.0).then_with(|| a.1.text().cmp(b.1.text())));
        out
    }

    /// Variables in canonical depth-first pre-order from the root.
    pub fn variables_in_order(&self) -> Vec<&str> {
        let mut order = Vec::with_capacity(self.instances.len());
        let mut seen = HashSet::new();
        self.preorder(self.root.as_str(), &mut seen, &mut order);
        order
    }

    fn preorder<'a>(&'a self, var: &'a str, seen: &mut HashSet<&'a str>, out: &mut Vec<&'a str>) {
        if !seen.insert(var) {
            return;
        }
        out.push(var);
        for (_, child) in self.children(var) {
            if let Child::Node(t) = child {
                self.preorder(t, seen, out);
            }
        }
    }
}

fn check_role(role: &str) -> Result<(), GraphError> {
    if role.len() > 1 && role.starts_with(':') && is_bare_symbol(&role[1..]) {
        Ok(())
    } else {
        Err(GraphError::InvalidRole(role.to_string()))
    }
}

pub(crate) fn is_quoted(s: &str) -> bool {
    s.len() >= 2 && s.starts_with('"') && s.ends_with('"')
}

/// A token that can be written unquoted in PENMAN.
pub(crate) fn is_bare_symbol(s: &str) -> bool {
    !s.is_empty()
        && !s.starts_with(':')
        && !s
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '(' | ')' | '/' | '"'))
}

/// Shape of an AMR variable name: one lowercase letter optionally followed
/// by digits (`b`, `b2`), or lowercase letters followed by at least one
/// digit (`vv1`). Bare symbols of this shape that are never defined are
/// reported as dangling references instead of being read as constants.
pub(crate) fn looks_like_variable(s: &str) -> bool {
    let letters = s.chars().take_while(|c| c.is_ascii_lowercase()).count();
    if letters == 0 {
        return false;
    }
    let rest = &s[letters..];
    if !rest.chars().all(|c| c.is_ascii_digit()) {
        return false;
    }
    letters == 1 || !rest.is_empty()
}

/// Constant with surrounding double quotes removed.
pub fn constant_text(value: &str) -> &str {
    if is_quoted(value) {
        &value[1..value.len() - 1]
    } else {
        value
    }
}

/// The triples a graph decomposes into for matching.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TripleSet {
    /// (variable, concept)
    pub instances: BTreeSet<(String, String)>,
    /// (role, source, target)
    pub relations: BTreeSet<(String, String, String)>,
    /// (role, source, constant), including the synthetic root marker
    pub attributes: BTreeSet<(String, String, String)>,
}

impl TripleSet {
    pub fn len(&self) -> usize {
        self.instances.len() + self.relations.len() + self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn graph_triples(graph: &AmrGraph) -> TripleSet {
    let mut triples = TripleSet::default();
    for (var, concept) in &graph.instances {
        triples.instances.insert((var.clone(), concept.clone()));
    }
    for e in &graph.edges {
        triples
            .relations
            .insert((e.role.clone(), e.source.clone(), e.target.clone()));
    }
    for a in &graph.attributes {
        triples
            .attributes
            .insert((a.role.clone(), a.source.clone(), a.value.clone()));
    }
    triples.attributes.insert((
        TOP_ROLE.to_string(),
        graph.root.clone(),
        TOP_MARKER.to_string(),
    ));
    triples
}
