//! Rule cascade aligning AMR concepts directly to sentence tokens.

use std::collections::{BTreeMap, HashMap};

use crate::graph::{constant_text, AmrGraph, NodeAlignment, Span};

use super::{ConceptAlignError, NegationLexicons};

/// Which rule aligned a variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    Exact,
    SenseStrip,
    Prefix,
    NamedEntity,
    Negation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleConfig {
    pub exact: bool,
    pub lowercase: bool,
    pub sense_strip: bool,
    pub prefix: bool,
    prefix_len: usize,
    pub named_entity: bool,
    pub negation: bool,
    pub negation_lexicon: Vec<String>,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig::for_language(&NegationLexicons::builtin(), "en")
    }
}

impl RuleConfig {
    /// All rules on, prefix length 4, negation words for `language` (empty
    /// when the language is not listed).
    pub fn for_language(lexicons: &NegationLexicons, language: &str) -> Self {
        RuleConfig {
            exact: true,
            lowercase: true,
            sense_strip: true,
            prefix: true,
            prefix_len: 4,
            named_entity: true,
            negation: true,
            negation_lexicon: lexicons.get(language).to_vec(),
        }
    }

    pub fn prefix_len(&self) -> usize {
        self.prefix_len
    }

    pub fn with_prefix_len(mut self, len: usize) -> Result<Self, ConceptAlignError> {
        if len == 0 {
            return Err(ConceptAlignError::PrefixLength);
        }
        self.prefix_len = len;
        Ok(self)
    }
}

/// Removes a PropBank sense suffix: `-` followed by exactly two digits.
pub fn strip_sense(concept: &str) -> &str {
    let b = concept.as_bytes();
    let n = b.len();
    if n >= 4 && b[n - 3] == b'-' && b[n - 2].is_ascii_digit() && b[n - 1].is_ascii_digit() {
        &concept[..n - 3]
    } else {
        concept
    }
}

pub fn rule_align(tokens: &[String], graph: &AmrGraph, config: &RuleConfig) -> NodeAlignment {
    rule_align_traced(tokens, graph, config).0
}

/// Like [`rule_align`], also reporting the rule behind each alignment.
///
/// Variables are visited in canonical pre-order. For each one the rules
/// are tried in order (exact, sense-stripped, prefix, named entity,
/// negation) and the leftmost unused matching token wins. Both the `:name`
/// node and its owner align to the same name span.
pub fn rule_align_traced(
    tokens: &[String],
    graph: &AmrGraph,
    config: &RuleConfig,
) -> (NodeAlignment, BTreeMap<String, Rule>) {
    let norm = |s: &str| {
        if config.lowercase {
            s.to_lowercase()
        } else {
            s.to_string()
        }
    };
    let forms: Vec<String> = tokens.iter().map(|t| norm(t)).collect();
    let negations: Vec<String> = config.negation_lexicon.iter().map(|t| norm(t)).collect();
    let mut used = vec![false; tokens.len()];
    let mut alignment = NodeAlignment::new(tokens.len());
    let mut trace = BTreeMap::new();
    let mut entity_spans: HashMap<&str, Option<Span>> = HashMap::new();

    let first_unused = |used: &[bool], pred: &dyn Fn(&str) -> bool| {
        forms
            .iter()
            .enumerate()
            .find(|(j, f)| !used[*j] && pred(f))
            .map(|(j, _)| j)
    };

    for var in graph.variables_in_order() {
        let concept = norm(graph.concept(var).unwrap_or_default());
        let stripped = strip_sense(&concept);

        let mut hit: Option<(Span, Rule)> = None;
        if config.exact {
            hit = first_unused(&used, &|f| f == concept).map(|j| (Span::single(j), Rule::Exact));
        }
        if hit.is_none() && config.sense_strip && stripped.len() < concept.len() {
            hit = first_unused(&used, &|f| f == stripped)
                .map(|j| (Span::single(j), Rule::SenseStrip));
        }
        if hit.is_none() && config.prefix && !stripped.is_empty() {
            let k = config.prefix_len.min(stripped.chars().count());
            let head: String = stripped.chars().take(k).collect();
            hit = first_unused(&used, &|f| f.starts_with(head.as_str()))
                .map(|j| (Span::single(j), Rule::Prefix));
        }
        if hit.is_none() && config.named_entity {
            if let Some(name_var) = name_node(graph, var) {
                let span = *entity_spans
                    .entry(name_var)
                    .or_insert_with(|| find_entity(graph, name_var, &forms, &used, &norm));
                if let Some(span) = span {
                    span.tokens().for_each(|j| used[j] = true);
                    hit = Some((span, Rule::NamedEntity));
                }
            }
        }
        if hit.is_none() && config.negation && is_negated(graph, var) {
            hit = first_unused(&used, &|f| negations.iter().any(|n| n == f))
                .map(|j| (Span::single(j), Rule::Negation));
        }

        if let Some((span, rule)) = hit {
            span.tokens().for_each(|j| used[j] = true);
            alignment
                .insert(var, span)
                .expect("rule spans come from the token list");
            trace.insert(var.to_string(), rule);
        }
    }
    (alignment, trace)
}

/// The `name` node that carries the name strings for `var`: `var` itself
/// if it is one, otherwise its `:name` child.
fn name_node<'a>(graph: &'a AmrGraph, var: &'a str) -> Option<&'a str> {
    let is_name = |v: &str| graph.concept(v) == Some("name") && !name_ops(graph, v).is_empty();
    if is_name(var) {
        return Some(var);
    }
    graph
        .edges()
        .iter()
        .find(|e| e.source == var && e.role == ":name" && is_name(&e.target))
        .map(|e| e.target.as_str())
}

/// `:opN` strings in numeric order.
fn name_ops<'a>(graph: &'a AmrGraph, var: &str) -> Vec<&'a str> {
    let mut ops: Vec<(u32, &str)> = graph
        .attributes()
        .iter()
        .filter(|a| a.source == var)
        .filter_map(|a| {
            a.role
                .strip_prefix(":op")?
                .parse()
                .ok()
                .map(|n: u32| (n, constant_text(&a.value)))
        })
        .collect();
    ops.sort();
    ops.into_iter().map(|(_, s)| s).collect()
}

fn find_entity(
    graph: &AmrGraph,
    name_var: &str,
    forms: &[String],
    used: &[bool],
    norm: &dyn Fn(&str) -> String,
) -> Option<Span> {
    let ops: Vec<String> = name_ops(graph, name_var).into_iter().map(norm).collect();
    let k = ops.len();
    if k == 0 || k > forms.len() {
        return None;
    }
    (0..=forms.len() - k)
        .find(|&p| (0..k).all(|i| !used[p + i] && forms[p + i] == ops[i]))
        .map(|p| Span::new(p, p + k - 1))
}

fn is_negated(graph: &AmrGraph, var: &str) -> bool {
    graph
        .attributes()
        .iter()
        .any(|a| a.source == var && a.role == ":polarity" && a.value == "-")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_penman;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn boy_wants_cascade() {
        let g = parse_penman("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))").unwrap();
        let (a, trace) =
            rule_align_traced(&toks("The boy wants to go"), &g, &RuleConfig::default());
        assert_eq!(a.get("b"), Some(Span::single(1)));
        assert_eq!(a.get("w"), Some(Span::single(2)));
        assert_eq!(a.get("g"), Some(Span::single(4)));
        assert_eq!(trace["b"], Rule::Exact);
        assert_eq!(trace["w"], Rule::Prefix);
        assert_eq!(trace["g"], Rule::SenseStrip);
    }

    #[test]
    fn single_exact_match() {
        let g = parse_penman("(a / alpha)").unwrap();
        assert_eq!(
            rule_align(&toks("alpha"), &g, &RuleConfig::default()).get("a"),
            Some(Span::single(0))
        );
    }

    #[test]
    fn named_entity_owner_and_name_share_span() {
        let g =
            parse_penman("(r / run-01 :ARG0 (p / person :name (n / name :op1 \"John\")))").unwrap();
        let (a, trace) = rule_align_traced(&toks("John runs"), &g, &RuleConfig::default());
        assert_eq!(a.get("r"), Some(Span::single(1)));
        assert_eq!(a.get("p"), Some(Span::single(0)));
        assert_eq!(a.get("n"), Some(Span::single(0)));
        assert_eq!(trace["p"], Rule::NamedEntity);
        assert_eq!(trace["n"], Rule::NamedEntity);
    }

    #[test]
    fn multi_token_entity() {
        let g = parse_penman("(c / city :name (n / name :op1 \"New\" :op2 \"York\"))").unwrap();
        let a = rule_align(&toks("in New York today"), &g, &RuleConfig::default());
        assert_eq!(a.get("c"), Some(Span::new(1, 2)));
        assert_eq!(a.get("n"), Some(Span::new(1, 2)));
    }

    #[test]
    fn negation_lexicon() {
        let g = parse_penman("(p / possible-01 :polarity -)").unwrap();
        let a = rule_align(&toks("it is not feasible"), &g, &RuleConfig::default());
        assert_eq!(a.get("p"), Some(Span::single(2)));

        let de = RuleConfig::for_language(&NegationLexicons::builtin(), "de");
        let a = rule_align(&toks("es geht nicht"), &g, &de);
        assert_eq!(a.get("p"), Some(Span::single(2)));
    }

    #[test]
    fn tokens_are_used_once() {
        let g = parse_penman("(a / and :op1 (b / boy) :op2 (b2 / boy))").unwrap();
        let a = rule_align(&toks("boy and boy"), &g, &RuleConfig::default());
        assert_eq!(a.get("a"), Some(Span::single(1)));
        assert_eq!(a.get("b"), Some(Span::single(0)));
        assert_eq!(a.get("b2"), Some(Span::single(2)));
    }

    #[test]
    fn disabled_rules_do_not_fire() {
        let g = parse_penman("(g / go-02)").unwrap();
        let cfg = RuleConfig {
            sense_strip: false,
            prefix: false,
            ..RuleConfig::default()
        };
        assert!(rule_align(&toks("go"), &g, &cfg).is_empty());
        assert!(RuleConfig::default().with_prefix_len(0).is_err());
    }

    #[test]
    fn sense_suffix() {
        assert_eq!(strip_sense("want-01"), "want");
        assert_eq!(strip_sense("go-02"), "go");
        assert_eq!(strip_sense("boy"), "boy");
        assert_eq!(strip_sense("have-org-role-91"), "have-org-role");
        assert_eq!(strip_sense("x-1"), "x-1");
        assert_eq!(strip_sense("-01"), "-01");
    }

    #[test]
    fn deterministic() {
        let g = parse_penman("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))").unwrap();
        let t = toks("The boy wants to go");
        let cfg = RuleConfig::default();
        assert_eq!(rule_align(&t, &g, &cfg), rule_align(&t, &g, &cfg));
    }
}
