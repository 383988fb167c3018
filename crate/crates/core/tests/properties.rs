mod common;

use std::collections::BTreeSet;

use amrproj::embedding::SentenceEmbedding;
use amrproj::graph::{parse_penman, serialize_penman};
use amrproj::projector::{
    combine_ba_then_ap, combine_intersect, project, project_intersection, project_max,
};
use amrproj::smatch::{brute_force_smatch, smatch_score};
use amrproj::word_align::{align_directional, intersect, Direction};
use amrproj::NodeAlignment;
use common::{random_alignment, random_graph, random_rows, NARROW, WIDE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vars(a: &NodeAlignment) -> BTreeSet<String> {
    a.iter().map(|(v, _)| v.to_string()).collect()
}

#[test]
fn smatch_swap_preserves_f1() {
    let mut r = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..200 {
        let a = random_graph(&mut r, 1..=6, &NARROW);
        let b = random_graph(&mut r, 1..=6, &NARROW);
        let ab = brute_force_smatch(&a, &b).unwrap();
        let ba = brute_force_smatch(&b, &a).unwrap();
        assert_eq!(ab.matched, ba.matched);
        assert_eq!(ab.precision, ba.recall);
        assert_eq!(ab.recall, ba.precision);
        assert_eq!(ab.f1, ba.f1);
    }
}

#[test]
fn smatch_self_score_and_bounds() {
    let mut r = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let a = random_graph(&mut r, 1..=10, &WIDE);
        assert_eq!(smatch_score(&a, &a, 1, 0).unwrap().f1, 1.0);
        let b = random_graph(&mut r, 1..=10, &WIDE);
        let s = smatch_score(&a, &b, 4, 0).unwrap();
        assert!(s.matched <= s.candidate_triples.min(s.reference_triples));
        let expected = if s.precision + s.recall > 0.0 {
            2.0 * s.precision * s.recall / (s.precision + s.recall)
        } else {
            0.0
        };
        assert_eq!(s.f1, expected);
        let images: BTreeSet<&String> = s.mapping.values().collect();
        assert_eq!(images.len(), s.mapping.len(), "mapping is injective");
    }
}

#[test]
fn smatch_restarts_are_monotone_and_deterministic() {
    let mut r = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let a = random_graph(&mut r, 3..=7, &NARROW);
        let b = random_graph(&mut r, 3..=7, &NARROW);
        let mut last = 0;
        for restarts in 1..=8 {
            let s = smatch_score(&a, &b, restarts, 99).unwrap();
            assert!(s.matched >= last);
            last = s.matched;
        }
        assert_eq!(
            smatch_score(&a, &b, 5, 3).unwrap(),
            smatch_score(&a, &b, 5, 3).unwrap()
        );
    }
}

#[test]
fn serialization_is_a_fixed_point() {
    let mut r = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..300 {
        let g = random_graph(&mut r, 1..=10, &WIDE);
        let once = serialize_penman(&g);
        assert_eq!(serialize_penman(&parse_penman(&once).unwrap()), once);
    }
}

#[test]
fn projection_and_combination_invariants() {
    let mut r = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..300 {
        let g = random_graph(&mut r, 1..=8, &WIDE);
        let en_len = r.gen_range(1..=10);
        let fr_len = r.gen_range(1..=10);
        let e = SentenceEmbedding::from_rows(8, &random_rows(&mut r, en_len..=en_len, 8)).unwrap();
        let f = SentenceEmbedding::from_rows(8, &random_rows(&mut r, fr_len..=fr_len, 8)).unwrap();
        let fe = align_directional(&e, &f, Direction::FGivenE).unwrap();
        let ef = align_directional(&f, &e, Direction::EGivenF).unwrap();
        let sym = intersect(&fe, &ef).unwrap();
        for p in sym.index_pairs() {
            assert_eq!(fe.link(p.0).unwrap().target, p.1);
            assert_eq!(ef.link(p.1).unwrap().target, p.0);
        }

        let ba_en = random_alignment(&mut r, &g, en_len);
        let ap = project(&ba_en, &fe, fr_len).unwrap();
        let iap = project_intersection(&ba_en, &sym).unwrap();
        let maxap = project_max(&ba_en, &fe, &ef).unwrap();
        for (v, span) in iap.iter() {
            assert_eq!(
                ap.get(v),
                Some(span),
                "intersection projection agrees with AP"
            );
        }
        assert_eq!(vars(&maxap), vars(&ba_en));

        let ba_f = random_alignment(&mut r, &g, fr_len);
        let (ea, report) = combine_ba_then_ap(&g, &ba_f, &ap).unwrap();
        assert!(vars(&ea).is_superset(&vars(&ba_f)));
        assert!(vars(&ea).is_superset(&vars(&ap)));
        for (v, span) in ba_f.iter() {
            assert_eq!(ea.get(v), Some(span), "BA wins where present");
        }
        assert_eq!(report.sources.total(), ea.len());

        let (ie, report) = combine_intersect(&g, &iap, &ba_f, &maxap).unwrap();
        for (v, span) in iap.iter() {
            assert_eq!(ie.get(v), Some(span));
        }
        assert_eq!(report.sources.total(), ie.len());
        assert_eq!(report.sources.intersect_ap, iap.len());
    }
}
