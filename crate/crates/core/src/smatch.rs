//! Smatch: triple-overlap F1 under the best variable mapping.
//!
//! The mapping search is restart hill-climbing. The first restart starts
//! from concept-identical pairs, the others from seeded random injective
//! mappings; each climbs by steepest ascent over two move types (move one
//! variable to an unused reference variable, or swap two images) until no
//! move improves the count. [`brute_force_smatch`] enumerates every
//! mapping and serves as the exact reference on small graphs.
//!
//! Comparison is case-insensitive for concepts, roles and constants, and
//! constants lose their surrounding quotes. Inverse roles (`:ARG0-of`) are
//! compared as written.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{constant_text, graph_triples, AmrGraph};

pub const DEFAULT_RESTARTS: usize = 4;
pub const DEFAULT_SEED: u64 = 0;

/// Largest variable count of the smaller graph the oracle accepts.
pub const BRUTE_FORCE_MAX_VARS: usize = 8;
const BRUTE_FORCE_MAX_MAPPINGS: u128 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmatchError {
    #[error("at least one restart is required")]
    NoRestarts,
    #[error("graphs too large for exhaustive search ({candidate} and {reference} variables)")]
    SizeLimit { candidate: usize, reference: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmatchResult {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: usize,
    pub candidate_triples: usize,
    pub reference_triples: usize,
    /// Candidate variable to reference variable.
    pub mapping: BTreeMap<String, String>,
    pub restarts_used: usize,
}

fn f_score(matched: usize, candidate: usize, reference: usize) -> (f64, f64, f64) {
    let p = if candidate == 0 {
        0.0
    } else {
        matched as f64 / candidate as f64
    };
    let r = if reference == 0 {
        0.0
    } else {
        matched as f64 / reference as f64
    };
    let f = if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    };
    (p, r, f)
}

/// Normalized triples of one graph.
#[derive(Debug, Clone, Default)]
struct NormTriples {
    instances: BTreeSet<(String, String)>,
    relations: BTreeSet<(String, String, String)>,
    attributes: BTreeSet<(String, String, String)>,
}

impl NormTriples {
    fn from_graph(graph: &AmrGraph) -> Self {
        let t = graph_triples(graph);
        NormTriples {
            instances: t
                .instances
                .into_iter()
                .map(|(v, c)| (v, c.to_lowercase()))
                .collect(),
            relations: t
                .relations
                .into_iter()
                .map(|(r, a, b)| (r.to_lowercase(), a, b))
                .collect(),
            attributes: t
                .attributes
                .into_iter()
                .map(|(r, v, c)| (r.to_lowercase(), v, constant_text(&c).to_lowercase()))
                .collect(),
        }
    }

    fn len(&self) -> usize {
        self.instances.len() + self.relations.len() + self.attributes.len()
    }

    fn variables(&self) -> Vec<String> {
        self.instances.iter().map(|(v, _)| v.clone()).collect()
    }
}

/// Index-based view used by the hill climber.
struct Indexed {
    vars: Vec<String>,
    concepts: Vec<String>,
    attrs: Vec<BTreeSet<(String, String)>>,
    /// (role id, source, target)
    relations: Vec<(u32, usize, usize)>,
    incident: Vec<Vec<usize>>,
}

fn index(triples: &NormTriples, roles: &mut HashMap<String, u32>) -> Indexed {
    let vars = triples.variables();
    let pos: HashMap<&str, usize> = vars
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_str(), i))
        .collect();
    let concepts = triples.instances.iter().map(|(_, c)| c.clone()).collect();
    let mut attrs = vec![BTreeSet::new(); vars.len()];
    for (r, v, c) in &triples.attributes {
        attrs[pos[v.as_str()]].insert((r.clone(), c.clone()));
    }
    let mut relations = Vec::new();
    let mut incident = vec![Vec::new(); vars.len()];
    for (r, a, b) in &triples.relations {
        let next = roles.len() as u32;
        let role = *roles.entry(r.clone()).or_insert(next);
        let (a, b) = (pos[a.as_str()], pos[b.as_str()]);
        let k = relations.len();
        relations.push((role, a, b));
        incident[a].push(k);
        if b != a {
            incident[b].push(k);
        }
    }
    Indexed {
        vars,
        concepts,
        attrs,
        relations,
        incident,
    }
}

struct Climber<'a> {
    cand: &'a Indexed,
    reference: &'a Indexed,
    unary: Vec<Vec<usize>>,
    ref_relations: HashSet<(u32, usize, usize)>,
}

impl<'a> Climber<'a> {
    fn new(cand: &'a Indexed, reference: &'a Indexed) -> Self {
        let unary = (0..cand.vars.len())
            .map(|i| {
                (0..reference.vars.len())
                    .map(|j| {
                        usize::from(cand.concepts[i] == reference.concepts[j])
                            + cand.attrs[i].intersection(&reference.attrs[j]).count()
                    })
                    .collect()
            })
            .collect();
        let ref_relations = reference.relations.iter().copied().collect();
        Climber {
            cand,
            reference,
            unary,
            ref_relations,
        }
    }

    fn relation_matched(&self, k: usize, map: &[Option<usize>]) -> bool {
        let (r, a, b) = self.cand.relations[k];
        match (map[a], map[b]) {
            (Some(x), Some(y)) => self.ref_relations.contains(&(r, x, y)),
            _ => false,
        }
    }

    fn score(&self, map: &[Option<usize>]) -> usize {
        let unary: usize = map
            .iter()
            .enumerate()
            .filter_map(|(i, m)| m.map(|j| self.unary[i][j]))
            .sum();
        let binary = (0..self.cand.relations.len())
            .filter(|&k| self.relation_matched(k, map))
            .count();
        unary + binary
    }

    fn unary_of(&self, i: usize, m: Option<usize>) -> isize {
        m.map_or(0, |j| self.unary[i][j] as isize)
    }

    fn relations_matched(&self, rels: &[usize], map: &[Option<usize>]) -> isize {
        rels.iter()
            .filter(|&&k| self.relation_matched(k, map))
            .count() as isize
    }

    fn delta_move(&self, map: &mut [Option<usize>], u: usize, j: usize) -> isize {
        let old = map[u];
        let rels = &self.cand.incident[u];
        let before = self.unary_of(u, old) + self.relations_matched(rels, map);
        map[u] = Some(j);
        let after = self.unary_of(u, Some(j)) + self.relations_matched(rels, map);
        map[u] = old;
        after - before
    }

    fn delta_swap(
        &self,
        map: &mut [Option<usize>],
        u: usize,
        v: usize,
        scratch: &mut Vec<usize>,
    ) -> isize {
        scratch.clear();
        scratch.extend_from_slice(&self.cand.incident[u]);
        scratch.extend(
            self.cand.incident[v]
                .iter()
                .filter(|k| !self.cand.incident[u].contains(k)),
        );
        let (mu, mv) = (map[u], map[v]);
        let before =
            self.unary_of(u, mu) + self.unary_of(v, mv) + self.relations_matched(scratch, map);
        map[u] = mv;
        map[v] = mu;
        let after =
            self.unary_of(u, mv) + self.unary_of(v, mu) + self.relations_matched(scratch, map);
        map[u] = mu;
        map[v] = mv;
        after - before
    }

    /// Steepest ascent from `map` to a local optimum; returns its score.
    fn climb(&self, map: &mut [Option<usize>]) -> usize {
        let n = self.cand.vars.len();
        let m = self.reference.vars.len();
        let mut used = vec![false; m];
        map.iter().flatten().for_each(|&j| used[j] = true);
        let mut score = self.score(map);
        let mut scratch = Vec::new();
        loop {
            enum Move {
                To(usize, usize),
                Swap(usize, usize),
            }
            let mut best: Option<(isize, Move)> = None;
            for u in 0..n {
                for j in (0..m).filter(|&j| !used[j]) {
                    let d = self.delta_move(map, u, j);
                    if d > 0 && best.as_ref().is_none_or(|b| d > b.0) {
                        best = Some((d, Move::To(u, j)));
                    }
                }
            }
            for u in 0..n {
                for v in u + 1..n {
                    if map[u] == map[v] {
                        continue;
                    }
                    let d = self.delta_swap(map, u, v, &mut scratch);
                    if d > 0 && best.as_ref().is_none_or(|b| d > b.0) {
                        best = Some((d, Move::Swap(u, v)));
                    }
                }
            }
            match best {
                None => return score,
                Some((d, mv)) => {
                    match mv {
                        Move::To(u, j) => {
                            if let Some(old) = map[u] {
                                used[old] = false;
                            }
                            used[j] = true;
                            map[u] = Some(j);
                        }
                        Move::Swap(u, v) => map.swap(u, v),
                    }
                    score = (score as isize + d) as usize;
                }
            }
        }
    }

    /// Concept-identical pairs first, remaining variables to the remaining
    /// reference variables in index order.
    fn smart_init(&self) -> Vec<Option<usize>> {
        let n = self.cand.vars.len();
        let m = self.reference.vars.len();
        let mut map = vec![None; n];
        let mut used = vec![false; m];
        for (slot, concept) in map.iter_mut().zip(&self.cand.concepts) {
            if let Some(j) = (0..m).find(|&j| !used[j] && *concept == self.reference.concepts[j]) {
                *slot = Some(j);
                used[j] = true;
            }
        }
        let mut free = (0..m).filter(|&j| !used[j]);
        for slot in map.iter_mut().filter(|s| s.is_none()) {
            *slot = free.next();
        }
        map
    }

    fn random_init(&self, rng: &mut ChaCha8Rng) -> Vec<Option<usize>> {
        let n = self.cand.vars.len();
        let mut targets: Vec<usize> = (0..self.reference.vars.len()).collect();
        targets.shuffle(rng);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut map = vec![None; n];
        for (&i, &j) in order.iter().zip(&targets) {
            map[i] = Some(j);
        }
        map
    }
}

fn result_from(
    matched: usize,
    candidate_triples: usize,
    reference_triples: usize,
    mapping: BTreeMap<String, String>,
    restarts_used: usize,
) -> SmatchResult {
    let (precision, recall, f1) = f_score(matched, candidate_triples, reference_triples);
    SmatchResult {
        precision,
        recall,
        f1,
        matched,
        candidate_triples,
        reference_triples,
        mapping,
        restarts_used,
    }
}

/// Smatch by restart hill-climbing. Restart `k` (k ≥ 1) draws its random
/// start from stream `k` of a ChaCha generator seeded with `seed`, so
/// adding restarts never changes the earlier ones. Stops early once a
/// restart reaches the largest possible match count.
pub fn smatch_score(
    candidate: &AmrGraph,
    reference: &AmrGraph,
    restarts: usize,
    seed: u64,
) -> Result<SmatchResult, SmatchError> {
    if restarts == 0 {
        return Err(SmatchError::NoRestarts);
    }
    let ct = NormTriples::from_graph(candidate);
    let rt = NormTriples::from_graph(reference);
    let mut roles = HashMap::new();
    let ci = index(&ct, &mut roles);
    let ri = index(&rt, &mut roles);
    let climber = Climber::new(&ci, &ri);
    let ceiling = ct.len().min(rt.len());

    let mut best: Option<(usize, Vec<Option<usize>>)> = None;
    let mut used = 0;
    for k in 0..restarts {
        let mut map = if k == 0 {
            climber.smart_init()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            climber.random_init(&mut rng)
        };
        let score = climber.climb(&mut map);
        used = k + 1;
        if best.as_ref().is_none_or(|b| score > b.0) {
            best = Some((score, map));
        }
        if score == ceiling {
            break;
        }
    }
    let (matched, map) = best.expect("at least one restart ran");
    let mapping = map
        .iter()
        .enumerate()
        .filter_map(|(i, m)| m.map(|j| (ci.vars[i].clone(), ri.vars[j].clone())))
        .collect();
    Ok(result_from(matched, ct.len(), rt.len(), mapping, used))
}

/// Matched triples under `mapping`, by renaming candidate triples and
/// looking them up in the reference set.
fn matched_by_renaming(
    cand: &NormTriples,
    reference: &NormTriples,
    mapping: &HashMap<&str, &str>,
) -> usize {
    let rename = |v: &String| mapping.get(v.as_str()).map(|s| s.to_string());
    let inst = cand
        .instances
        .iter()
        .filter(|(v, c)| rename(v).is_some_and(|w| reference.instances.contains(&(w, c.clone()))))
        .count();
    let attr = cand
        .attributes
        .iter()
        .filter(|(r, v, c)| {
            rename(v).is_some_and(|w| reference.attributes.contains(&(r.clone(), w, c.clone())))
        })
        .count();
    let rel = cand
        .relations
        .iter()
        .filter(|(r, a, b)| match (rename(a), rename(b)) {
            (Some(x), Some(y)) => reference.relations.contains(&(r.clone(), x, y)),
            _ => false,
        })
        .count();
    inst + attr + rel
}

/// Exact Smatch by enumerating every injective mapping of the smaller
/// variable set into the larger one.
pub fn brute_force_smatch(
    candidate: &AmrGraph,
    reference: &AmrGraph,
) -> Result<SmatchResult, SmatchError> {
    let ct = NormTriples::from_graph(candidate);
    let rt = NormTriples::from_graph(reference);
    let cv = ct.variables();
    let rv = rt.variables();
    let (small, large, flipped) = if cv.len() <= rv.len() {
        (&cv, &rv, false)
    } else {
        (&rv, &cv, true)
    };
    let too_big = SmatchError::SizeLimit {
        candidate: cv.len(),
        reference: rv.len(),
    };
    if small.len() > BRUTE_FORCE_MAX_VARS {
        return Err(too_big);
    }
    let count: u128 = (0..small.len())
        .map(|i| (large.len() - i) as u128)
        .product();
    if count > BRUTE_FORCE_MAX_MAPPINGS {
        return Err(too_big);
    }

    let mut best: Option<(usize, Vec<usize>)> = None;
    let mut chosen = Vec::with_capacity(small.len());
    let mut taken = vec![false; large.len()];
    let mut visit = |assignment: &[usize]| {
        let mapping: HashMap<&str, &str> = small
            .iter()
            .zip(assignment)
            .map(|(s, &l)| {
                if flipped {
                    (large[l].as_str(), s.as_str())
                } else {
                    (s.as_str(), large[l].as_str())
                }
            })
            .collect();
        let m = matched_by_renaming(&ct, &rt, &mapping);
        if best.as_ref().is_none_or(|b| m > b.0) {
            best = Some((m, assignment.to_vec()));
        }
    };
    enumerate(small.len(), &mut chosen, &mut taken, &mut visit);

    let (matched, assignment) = best.expect("at least the empty mapping is visited");
    let mapping = small
        .iter()
        .zip(&assignment)
        .map(|(s, &l)| {
            if flipped {
                (large[l].clone(), s.clone())
            } else {
                (s.clone(), large[l].clone())
            }
        })
        .collect();
    Ok(result_from(matched, ct.len(), rt.len(), mapping, 0))
}

fn enumerate(
    depth: usize,
    chosen: &mut Vec<usize>,
    taken: &mut [bool],
    visit: &mut dyn FnMut(&[usize]),
) {
    if chosen.len() == depth {
        visit(chosen);
        return;
    }
    for j in 0..taken.len() {
        if !taken[j] {
            taken[j] = true;
            chosen.push(j);
            enumerate(depth, chosen, taken, visit);
            chosen.pop();
            taken[j] = false;
        }
    }
}

/// Corpus totals; micro-averaged scores come from the summed counts.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SmatchTotals {
    pub matched: usize,
    pub candidate_triples: usize,
    pub reference_triples: usize,
    pub pairs: usize,
    f1_sum: f64,
}

impl SmatchTotals {
    pub fn add(&mut self, r: &SmatchResult) {
        self.matched += r.matched;
        self.candidate_triples += r.candidate_triples;
        self.reference_triples += r.reference_triples;
        self.pairs += 1;
        self.f1_sum += r.f1;
    }

    /// (precision, recall, F1) over summed counts.
    pub fn micro(&self) -> (f64, f64, f64) {
        f_score(self.matched, self.candidate_triples, self.reference_triples)
    }

    /// Mean of per-pair F1.
    pub fn macro_f1(&self) -> f64 {
        if self.pairs == 0 {
            0.0
        } else {
            self.f1_sum / self.pairs as f64
        }
    }
}
