#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;

use amrproj::graph::{Attribute, Edge};
use amrproj::{AmrGraph, NodeAlignment, Span};
use rand::seq::SliceRandom;
use rand::Rng;

pub const CONCEPTS: &[&str] = &[
    "want-01", "boy", "go-02", "girl", "see-01", "and", "city", "person", "run-01",
];
pub const ROLES: &[&str] = &[":ARG0", ":ARG1", ":ARG2", ":mod", ":location", ":op1"];
pub const ATTRS: &[(&str, &[&str])] = &[
    (":polarity", &["-"]),
    (":quant", &["5", "12"]),
    (":op1", &["\"John\"", "\"New York\""]),
    (":mode", &["imperative", "expressive"]),
];

pub struct Shape<'a> {
    pub concepts: &'a [&'a str],
    pub roles: &'a [&'a str],
    /// Probability of an extra (re-entrant) edge per node.
    pub reentrancy: f64,
    /// Probability of an attribute per node.
    pub attribute: f64,
}

pub const WIDE: Shape<'static> = Shape {
    concepts: CONCEPTS,
    roles: ROLES,
    reentrancy: 0.3,
    attribute: 0.3,
};

/// Small vocabularies so that many mappings tie or nearly tie.
pub const NARROW: Shape<'static> = Shape {
    concepts: &["a", "b", "c"],
    roles: &[":ARG0", ":ARG1"],
    reentrancy: 0.4,
    attribute: 0.3,
};

/// A random rooted DAG with a variable count drawn from `sizes`. Edges only run from lower to
/// higher variable index, and every variable after the first gets a tree
/// parent, so the result is always valid.
pub fn random_graph(rng: &mut impl Rng, sizes: RangeInclusive<usize>, shape: &Shape) -> AmrGraph {
    let n = rng.gen_range(sizes);
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let instances: BTreeMap<String, String> = names
        .iter()
        .map(|v| (v.clone(), shape.concepts.choose(rng).unwrap().to_string()))
        .collect();
    let mut keys = BTreeSet::new();
    let mut edges = Vec::new();
    let mut add = |s: usize, role: &str, t: usize, edges: &mut Vec<Edge>| {
        if keys.insert((s, role.to_string(), t)) {
            edges.push(Edge {
                source: names[s].clone(),
                role: role.to_string(),
                target: names[t].clone(),
            });
        }
    };
    for i in 1..n {
        let p = rng.gen_range(0..i);
        add(p, shape.roles.choose(rng).unwrap(), i, &mut edges);
        if i >= 2 && rng.gen_bool(shape.reentrancy) {
            let q = rng.gen_range(0..i);
            add(q, shape.roles.choose(rng).unwrap(), i, &mut edges);
        }
    }
    let mut attributes = Vec::new();
    let mut attr_keys = BTreeSet::new();
    for v in &names {
        if rng.gen_bool(shape.attribute) {
            let (role, values) = ATTRS.choose(rng).unwrap();
            let value = values.choose(rng).unwrap();
            if attr_keys.insert((v.clone(), *role, *value)) {
                attributes.push(Attribute {
                    source: v.clone(),
                    role: role.to_string(),
                    value: value.to_string(),
                });
            }
        }
    }
    AmrGraph::new(names[0].clone(), instances, edges, attributes)
        .expect("generator builds valid graphs")
}

/// Random spans for a random subset of the graph's variables.
pub fn random_alignment(
    rng: &mut impl Rng,
    graph: &AmrGraph,
    sentence_len: usize,
) -> NodeAlignment {
    let mut a = NodeAlignment::new(sentence_len);
    for var in graph.instances().keys() {
        if rng.gen_bool(0.7) {
            let start = rng.gen_range(0..sentence_len);
            let end = rng.gen_range(start..=(start + 2).min(sentence_len - 1));
            a.insert(var.as_str(), Span::new(start, end)).unwrap();
        }
    }
    a
}

pub fn random_rows(rng: &mut impl Rng, sizes: RangeInclusive<usize>, dim: usize) -> Vec<Vec<f32>> {
    let n = rng.gen_range(sizes);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect())
        .collect()
}

pub fn tokens(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}
