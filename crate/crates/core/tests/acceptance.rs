//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Run with `cargo test -p amrproj-core --test acceptance`.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use amrproj::concept_align::{
    em_align, rule_align, train_ibm1, train_ibm1_with_history, RuleConfig,
};
use amrproj::embedding::{
    decode_embeddings, encode_embeddings, EmbeddingCorpus, SentenceEmbedding,
};
use amrproj::graph::{
    format_alignment_line, format_treebank, graph_triples, parse_penman, parse_treebank,
    serialize_penman, Edge,
};
use amrproj::projector::{coverage, project};
use amrproj::smatch::{brute_force_smatch, smatch_score, DEFAULT_SEED};
use amrproj::word_align::{align_directional, intersect, Direction, DirectionalAlignment};
use amrproj::{AmrGraph, Span, TreebankEntry};
use common::{random_alignment, random_graph, random_rows, tokens, NARROW, WIDE};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn worked_intersection() -> Outcome {
    let fe = DirectionalAlignment::from_targets(Direction::FGivenE, &[0, 2, 3, 5, 6], 7)
        .map_err(|e| e.to_string())?;
    let ef = DirectionalAlignment::from_targets(Direction::EGivenF, &[0, 1, 1, 2, 2, 1, 4], 5)
        .map_err(|e| e.to_string())?;
    let expected = vec![(0, 0), (1, 2), (2, 3), (4, 6)];
    let mut slowest = Duration::ZERO;
    for _ in 0..100 {
        let start = Instant::now();
        let sym = intersect(&fe, &ef).map_err(|e| e.to_string())?;
        slowest = slowest.max(start.elapsed());
        if sym.index_pairs() != expected {
            return Err(format!("got {:?}", sym.index_pairs()));
        }
    }
    if slowest >= Duration::from_millis(1) {
        return Err(format!("slowest of 100 calls took {slowest:?}"));
    }
    Ok(format!(
        "{expected:?}, slowest of 100 calls {slowest:?} (limit 1 ms)"
    ))
}

fn boy_wants_pipeline() -> Outcome {
    let g = parse_penman("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))")
        .map_err(|e| e.to_string())?;
    let ba = rule_align(&tokens("The boy wants to go"), &g, &RuleConfig::default());
    let got: BTreeMap<&str, Span> = ba.iter().collect();
    let want = BTreeMap::from([
        ("b", Span::single(1)),
        ("w", Span::single(2)),
        ("g", Span::single(4)),
    ]);
    if got != want {
        return Err(format!("rule alignment {got:?}"));
    }
    let chi = DirectionalAlignment::from_targets(Direction::FGivenE, &[0, 1, 2, 2, 3], 4)
        .map_err(|e| e.to_string())?;
    let de = tokens("Der Junge will gehen");
    let projected = project(&ba, &chi, de.len()).map_err(|e| e.to_string())?;
    let got: BTreeMap<&str, usize> = projected.iter().map(|(v, s)| (v, s.head())).collect();
    let want = BTreeMap::from([("b", 1), ("w", 2), ("g", 3)]);
    if got != want {
        return Err(format!("projection {got:?}"));
    }
    let words: Vec<String> = got
        .iter()
        .map(|(v, &i)| format!("{v}:{i} ({})", de[i]))
        .collect();
    Ok(words.join(", "))
}

fn coverage_conservation() -> Outcome {
    let mut r = rng(1);
    let trials = 1000;
    for t in 0..trials {
        let g = random_graph(&mut r, 1..=10, &WIDE);
        let en = r.gen_range(1..=12);
        let fl = r.gen_range(1..=12);
        let ba = random_alignment(&mut r, &g, en);
        let targets: Vec<usize> = (0..en).map(|_| r.gen_range(0..fl)).collect();
        let chi = DirectionalAlignment::from_targets(Direction::FGivenE, &targets, fl)
            .map_err(|e| e.to_string())?;
        let p = project(&ba, &chi, fl).map_err(|e| e.to_string())?;
        let (before, after) = (coverage(&ba, &g), coverage(&p, &g));
        if before != after {
            return Err(format!("trial {t}: coverage {before} became {after}"));
        }
    }
    Ok(format!("{trials} random triples, exact equality"))
}

fn random_pair(r: &mut ChaCha8Rng, max_vars: usize) -> (AmrGraph, AmrGraph) {
    let a = random_graph(r, 1..=max_vars, &NARROW);
    let b = random_graph(r, 1..=max_vars, &NARROW);
    (a, b)
}

fn smatch_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(2);
    let pairs = 500;
    let mut agree4 = 0;
    for k in 0..pairs {
        let (a, b) = random_pair(&mut r, 6);
        let hill = smatch_score(&a, &b, 4, DEFAULT_SEED).map_err(|e| e.to_string())?;
        let exact = brute_force_smatch(&a, &b).map_err(|e| e.to_string())?;
        if hill.matched > exact.matched {
            return Err(format!(
                "pair {k}: hill-climbing {} exceeds exhaustive {}",
                hill.matched, exact.matched
            ));
        }
        agree4 += usize::from(hill.matched == exact.matched);
    }
    let mut agree20 = 0;
    for _ in 0..pairs {
        let (a, b) = random_pair(&mut r, 4);
        let hill = smatch_score(&a, &b, 20, DEFAULT_SEED).map_err(|e| e.to_string())?;
        let exact = brute_force_smatch(&a, &b).map_err(|e| e.to_string())?;
        agree20 += usize::from(hill.matched == exact.matched);
    }
    let elapsed = start.elapsed();
    let rate4 = agree4 as f64 / pairs as f64;
    let msg = format!(
        "<=6 vars, 4 restarts: {agree4}/{pairs} ({:.1}%, need >=95%); <=4 vars, 20 restarts: {agree20}/{pairs} \
         (need 100%); {:.2?} (limit 30 s)",
        rate4 * 100.0,
        elapsed
    );
    if rate4 >= 0.95 && agree20 == pairs && elapsed < Duration::from_secs(30) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn smatch_boy_dog() -> Outcome {
    let a = parse_penman("(w / want-01 :ARG0 (b / boy))").map_err(|e| e.to_string())?;
    let b = parse_penman("(v / want-01 :ARG0 (d / dog))").map_err(|e| e.to_string())?;
    let hill = smatch_score(&a, &b, 4, DEFAULT_SEED).map_err(|e| e.to_string())?;
    let exact = brute_force_smatch(&a, &b).map_err(|e| e.to_string())?;
    let msg = format!(
        "scorer F1 {}, oracle F1 {} (expected 0.75 +/- 1e-12)",
        hill.f1, exact.f1
    );
    if (hill.f1 - 0.75).abs() <= 1e-12 && (exact.f1 - 0.75).abs() <= 1e-12 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn ibm1_likelihood() -> Outcome {
    let mut r = rng(3);
    let corpus: Vec<(Vec<String>, Vec<String>)> = (0..100)
        .map(|_| {
            let n = r.gen_range(1..=6);
            let concepts: Vec<String> = (0..n)
                .map(|_| format!("concept-{}", r.gen_range(0..15)))
                .collect();
            // Tokens partly echo the concepts so the likelihood has structure.
            let mut toks: Vec<String> = concepts
                .iter()
                .map(|c| {
                    if r.gen_bool(0.8) {
                        c.replace("concept", "w")
                    } else {
                        format!("x{}", r.gen_range(0..10))
                    }
                })
                .collect();
            toks.extend((0..r.gen_range(0..3)).map(|_| format!("x{}", r.gen_range(0..10))));
            toks.shuffle(&mut r);
            (toks, concepts)
        })
        .collect();
    let (_, history) = train_ibm1_with_history(&corpus, 20).map_err(|e| e.to_string())?;
    for (k, w) in history.windows(2).enumerate() {
        if w[1] < w[0] - 1e-9 * w[0].abs() {
            return Err(format!("iteration {}: {} -> {}", k + 1, w[0], w[1]));
        }
    }
    Ok(format!(
        "100 sentences, 20 iterations, {:.4} -> {:.4}, non-decreasing within 1e-9 relative",
        history[0],
        history[history.len() - 1]
    ))
}

fn star_graph(concepts: &[String]) -> AmrGraph {
    let names: Vec<String> = (0..concepts.len()).map(|i| format!("v{i}")).collect();
    let instances = names
        .iter()
        .cloned()
        .zip(concepts.iter().cloned())
        .collect();
    let edges = (1..names.len())
        .map(|i| Edge {
            source: names[0].clone(),
            role: format!(":ARG{i}"),
            target: names[i].clone(),
        })
        .collect();
    AmrGraph::new(names[0].clone(), instances, edges, Vec::new()).expect("star graph is valid")
}

fn ibm1_dictionary() -> Outcome {
    let mut r = rng(4);
    let dictionary: Vec<(String, String)> = (0..20)
        .map(|i| (format!("concept-{i}"), format!("word{i}")))
        .collect();
    let sentences: Vec<(Vec<String>, Vec<String>, Vec<usize>)> = (0..400)
        .map(|_| {
            let mut picks: Vec<usize> = (0..20).collect();
            picks.shuffle(&mut r);
            picks.truncate(r.gen_range(1..=4));
            let mut toks: Vec<(String, Option<usize>)> = picks
                .iter()
                .enumerate()
                .map(|(k, &d)| (dictionary[d].1.clone(), Some(k)))
                .collect();
            toks.extend((0..2).map(|_| (format!("filler{}", r.gen_range(0..20)), None)));
            toks.shuffle(&mut r);
            let mut gold = vec![0; picks.len()];
            for (pos, (_, k)) in toks.iter().enumerate() {
                if let Some(k) = k {
                    gold[*k] = pos;
                }
            }
            let concepts = picks.iter().map(|&d| dictionary[d].0.clone()).collect();
            (toks.into_iter().map(|t| t.0).collect(), concepts, gold)
        })
        .collect();
    let corpus: Vec<(Vec<String>, Vec<String>)> = sentences
        .iter()
        .map(|s| (s.0.clone(), s.1.clone()))
        .collect();
    let table = train_ibm1(&corpus, 10).map_err(|e| e.to_string())?;
    let (mut correct, mut total) = (0, 0);
    for (toks, concepts, gold) in &sentences {
        let g = star_graph(concepts);
        let al = em_align(toks, &g, &table);
        for (k, &pos) in gold.iter().enumerate() {
            total += 1;
            correct += usize::from(al.get(&format!("v{k}")) == Some(Span::single(pos)));
        }
    }
    let acc = correct as f64 / total as f64;
    let msg = format!(
        "{correct}/{total} concepts ({:.2}%, need >=90%)",
        acc * 100.0
    );
    if acc >= 0.9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn penman_round_trip() -> Outcome {
    let mut r = rng(5);
    let n = 1000;
    for k in 0..n {
        let g = random_graph(&mut r, 1..=12, &WIDE);
        let text = serialize_penman(&g);
        let back = parse_penman(&text).map_err(|e| format!("graph {k}: {e}\n{text}"))?;
        if graph_triples(&back) != graph_triples(&g) {
            return Err(format!("graph {k}: triples differ\n{text}"));
        }
    }
    Ok(format!("{n} random graphs, equal triple sets"))
}

fn cemb_round_trip() -> Outcome {
    let mut r = rng(6);
    let specials = [
        0.0f32,
        -0.0,
        f32::MIN_POSITIVE,
        1e-45,
        f32::MAX,
        f32::MIN,
        1.0 / 3.0,
    ];
    let n = 200;
    for k in 0..n {
        let dim = r.gen_range(1..=16);
        let mut corpus = EmbeddingCorpus::new(dim).map_err(|e| e.to_string())?;
        let mut values = Vec::new();
        for _ in 0..r.gen_range(0..6) {
            let rows = r.gen_range(0..5);
            let data: Vec<f32> = (0..rows * dim)
                .map(|_| {
                    if r.gen_bool(0.1) {
                        *specials.choose(&mut r).unwrap()
                    } else {
                        r.gen::<f32>() * 200.0 - 100.0
                    }
                })
                .collect();
            values.extend(data.iter().map(|x| x.to_bits()));
            corpus
                .push(SentenceEmbedding::new(dim, data).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
        }
        let mut bytes = Vec::new();
        encode_embeddings(&corpus, &mut bytes).map_err(|e| e.to_string())?;
        let back =
            decode_embeddings(&mut bytes.as_slice()).map_err(|e| format!("corpus {k}: {e}"))?;
        let back_bits: Vec<u32> = back
            .sentences()
            .iter()
            .flat_map(|s| s.as_slice())
            .map(|x| x.to_bits())
            .collect();
        let mut again = Vec::new();
        encode_embeddings(&back, &mut again).map_err(|e| e.to_string())?;
        if back_bits != values || again != bytes {
            return Err(format!("corpus {k} differs after round trip"));
        }
    }
    Ok(format!("{n} random corpora, bit-exact"))
}

/// Treebank text in a loose but legal layout: one-line graphs, an
/// unknown metadata key, extra blank lines.
fn loose_treebank(r: &mut ChaCha8Rng, entries: &[TreebankEntry]) -> String {
    let mut out = String::from("\n");
    for e in entries {
        out.push_str(&format!(
            "# ::id {}\n# ::date 2020-01-01\n# ::lang {}\n",
            e.id, e.language
        ));
        out.push_str(&format!("# ::tok {}\n", e.tokens.join(" ")));
        if let Some(a) = &e.alignment {
            out.push_str(&format_alignment_line(a));
            out.push('\n');
        }
        let one_line = serialize_penman(&e.graph)
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ");
        out.push_str(&one_line);
        out.push_str(if r.gen_bool(0.5) { "\n\n\n" } else { "\n\n" });
    }
    out
}

fn treebank_round_trip() -> Outcome {
    let mut r = rng(7);
    let n = 200;
    for k in 0..n {
        let entries: Vec<TreebankEntry> = (0..r.gen_range(1..=5))
            .map(|i| {
                let g = random_graph(&mut r, 1..=8, &WIDE);
                let len = r.gen_range(1..=10);
                let toks: Vec<String> = (0..len).map(|j| format!("t{j}")).collect();
                let al = r.gen_bool(0.7).then(|| random_alignment(&mut r, &g, len));
                TreebankEntry::new(format!("s{i}"), "en", toks, g, al).expect("valid entry")
            })
            .collect();
        let raw = loose_treebank(&mut r, &entries);
        let once =
            format_treebank(&parse_treebank(&raw).map_err(|e| format!("treebank {k}: {e}"))?);
        let twice =
            format_treebank(&parse_treebank(&once).map_err(|e| format!("treebank {k}: {e}"))?);
        if once != twice {
            return Err(format!("treebank {k} not byte-stable"));
        }
        let key = |e: &TreebankEntry| {
            (
                e.id.clone(),
                e.language.clone(),
                e.tokens.clone(),
                e.alignment.clone(),
                graph_triples(&e.graph),
            )
        };
        let reread = parse_treebank(&once).map_err(|e| e.to_string())?;
        if reread.iter().map(key).ne(entries.iter().map(key)) {
            return Err(format!("treebank {k} changed content"));
        }
    }
    Ok(format!("{n} random treebanks, byte-stable after one pass"))
}

fn scale_invariance() -> Outcome {
    let mut r = rng(8);
    let n = 100;
    let dim = 16;
    let targets = |d: &DirectionalAlignment| d.links().iter().map(|l| l.target).collect::<Vec<_>>();
    for k in 0..n {
        let e_rows = random_rows(&mut r, 1..=15, dim);
        let f_rows = random_rows(&mut r, 1..=15, dim);
        let mut scale = |rows: &[Vec<f32>]| -> Vec<Vec<f32>> {
            rows.iter()
                .map(|row| {
                    let s: f32 = r.gen_range(0.01..100.0);
                    row.iter().map(|x| x * s).collect()
                })
                .collect()
        };
        let (e2, f2) = (scale(&e_rows), scale(&f_rows));
        let emb =
            |rows: &[Vec<f32>]| SentenceEmbedding::from_rows(dim, rows).map_err(|e| e.to_string());
        let (e, f, e2, f2) = (emb(&e_rows)?, emb(&f_rows)?, emb(&e2)?, emb(&f2)?);
        for (src, tgt, src2, tgt2, dir) in [
            (&e, &f, &e2, &f2, Direction::FGivenE),
            (&f, &e, &f2, &e2, Direction::EGivenF),
        ] {
            let a = align_directional(src, tgt, dir).map_err(|e| e.to_string())?;
            let b = align_directional(src2, tgt2, dir).map_err(|e| e.to_string())?;
            if targets(&a) != targets(&b) {
                return Err(format!(
                    "pair {k} {dir:?}: {:?} vs {:?}",
                    targets(&a),
                    targets(&b)
                ));
            }
        }
    }
    Ok(format!("{n} random pairs, both directions unchanged"))
}

fn main() {
    let checks: [(&str, Check); 11] = [
        ("worked intersection example", worked_intersection),
        ("boy-wants-to-go pipeline", boy_wants_pipeline),
        ("coverage conservation", coverage_conservation),
        ("smatch oracle equivalence", smatch_oracle),
        ("smatch boy vs dog", smatch_boy_dog),
        ("ibm model 1 likelihood", ibm1_likelihood),
        ("ibm model 1 dictionary", ibm1_dictionary),
        ("penman round trip", penman_round_trip),
        ("cemb round trip", cemb_round_trip),
        ("treebank round trip", treebank_round_trip),
        ("embedding scale invariance", scale_invariance),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        checks.len() - failed,
        checks.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
