mod common;

use proptest::prelude::*;
use segfree::evaluation::{
    average_lagging, average_lagging_from_delays, bleu, bootstrap_significance,
    bootstrap_with_indices, edit_distance, emit_curve, realign, write_curve, CurvePoint,
    LatencyReport,
};
use segfree::trace::{SessionTrace, TraceEvent};
use segfree::Error;

use common::{brute_force_realign, levenshtein};

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn segs(v: &[&str]) -> Vec<Vec<String>> {
    v.iter().map(|s| toks(s)).collect()
}

#[test]
fn perfect_hypothesis_realigns_at_reference_lengths() {
    let refs = segs(&["a b", "c d e", "f"]);
    let a = realign(&toks("a b c d e f"), &refs).unwrap();
    assert_eq!(a.total_edit_distance, 0);
    assert_eq!(a.boundaries(), vec![2, 5]);
    assert_eq!(a.segments, refs);
}

#[test]
fn one_substitution_keeps_the_middle_cut() {
    let a = realign(&toks("a b x d"), &segs(&["a b", "c d"])).unwrap();
    assert_eq!(a.boundaries(), vec![2]);
    assert_eq!(a.total_edit_distance, 1);
}

#[test]
fn empty_hypothesis_gives_empty_segments() {
    let a = realign(&[], &segs(&["a"])).unwrap();
    assert_eq!(a.segments, vec![Vec::<String>::new()]);
    assert_eq!(a.total_edit_distance, 1);
    let a = realign(&[], &segs(&["a b", "c"])).unwrap();
    assert_eq!(a.total_edit_distance, 3);
    assert!(realign(&toks("a"), &[]).is_err());
}

#[test]
fn edit_distance_examples() {
    assert_eq!(edit_distance(&toks("a b c"), &toks("a c")), 1);
    assert_eq!(edit_distance::<String>(&[], &toks("a b")), 2);
    assert_eq!(edit_distance(&toks("k i t"), &toks("s i t t")), 2);
}

#[test]
fn identical_corpus_scores_one_hundred() {
    let refs = segs(&["a b c d e", "f g h i"]);
    let q = bleu(&refs, &refs).unwrap();
    assert_eq!(q.bleu, 100.0);
    assert_eq!(q.brevity_penalty, 1.0);
}

#[test]
fn short_identical_corpus_still_scores_one_hundred() {
    let refs = segs(&["a", "b c"]);
    assert_eq!(bleu(&refs, &refs).unwrap().bleu, 100.0);
    // a hypothesis too short for bigrams is still penalised against a longer reference
    assert!(bleu(&segs(&["a"]), &segs(&["a b c"])).unwrap().bleu < 1e-3);
}

#[test]
fn brevity_penalty_example() {
    let q = bleu(&segs(&["a b c d"]), &segs(&["a b c d e"])).unwrap();
    assert_eq!(q.ngram_precisions, [1.0; 4]);
    assert!((q.brevity_penalty - (1.0f64 - 5.0 / 4.0).exp()).abs() < 1e-12);
    assert!((q.bleu - 77.880078).abs() < 1e-4);
}

#[test]
fn no_four_gram_matches_is_near_zero() {
    let refs = segs(&["a b c d e f g h i j k l"]);
    let hyp = segs(&["a x b y c z d w e v f u"]);
    let q = bleu(&hyp, &refs).unwrap();
    assert!(q.bleu < 1e-3, "{}", q.bleu);
    let lm: f64 = q.ngram_precisions.iter().map(|p| p.ln()).sum::<f64>() / 4.0;
    assert!((q.bleu - 100.0 * q.brevity_penalty * lm.exp()).abs() < 1e-6);
}

#[test]
fn empty_hypothesis_and_empty_references() {
    let q = bleu(&segs(&[""]), &segs(&["a b"])).unwrap();
    assert_eq!(q.bleu, 0.0);
    assert!(matches!(bleu(&segs(&[""]), &segs(&[""])), Err(Error::Configuration(_))));
    assert!(bleu(&segs(&["a"]), &segs(&["a", "b"])).is_err());
}

#[test]
fn latency_closed_forms() {
    let j = 12;
    for k in 1..=6 {
        let g: Vec<usize> = (1..=j).map(|i| (i + k - 1).min(j)).collect();
        let al = average_lagging_from_delays(&g, j).unwrap();
        assert!((al - k as f64).abs() < 1e-9, "k={k}: {al}");
    }
    assert_eq!(average_lagging_from_delays(&[7; 7], 7).unwrap(), 7.0);
    let ideal: Vec<usize> = (1..=9).collect();
    assert!((average_lagging_from_delays(&ideal, 9).unwrap() - 1.0).abs() < 1e-12);
    assert!(average_lagging_from_delays(&[], 3).is_err());
}

#[test]
fn latency_report_averages_videos() {
    let r = LatencyReport::new(vec![1.0, 2.0, 6.0]).unwrap();
    assert_eq!(r.mean_al, 3.0);
    assert!(LatencyReport::new(vec![]).is_err());
}

fn trace(reads: usize, writes: &[(usize, &str)]) -> SessionTrace {
    let mut t = SessionTrace::new();
    for i in 0..reads {
        t.push(TraceEvent::Read { index: i, token: format!("s{i}") });
    }
    for (d, w) in writes {
        t.push(TraceEvent::Write { token: w.to_string(), delay: *d });
    }
    t
}

#[test]
fn trace_shorter_than_hypothesis_is_a_mismatch() {
    let t = trace(2, &[(1, "A")]);
    let aligned = realign(&toks("A B"), &segs(&["A B"])).unwrap();
    assert!(matches!(average_lagging(&t, &aligned), Err(Error::TraceMismatch(_))));
    let bad = trace(2, &[(2, "A"), (1, "B")]);
    assert!(matches!(average_lagging(&bad, &aligned), Err(Error::TraceMismatch(_))));
    let good = trace(2, &[(1, "A"), (2, "B")]);
    assert_eq!(average_lagging(&good, &aligned).unwrap(), 1.0);
}

#[test]
fn bootstrap_conventions() {
    let refs = segs(&["a b c", "d e f", "g h"]);
    assert_eq!(bootstrap_significance(&refs, &refs, &refs, 100, 7).unwrap(), 1.0);
    assert!(matches!(
        bootstrap_significance(&refs[..1], &refs[..1], &refs[..1], 100, 7),
        Err(Error::InsufficientData(_))
    ));
    assert!(bootstrap_significance(&refs, &refs[..2], &refs, 100, 7).is_err());
}

#[test]
fn perfect_against_empty_is_significant() {
    let refs: Vec<Vec<String>> = (0..12).map(|i| toks(&format!("w{i} x{i} y{i} z{i}"))).collect();
    let empty = vec![Vec::new(); 12];
    let p = bootstrap_significance(&refs, &empty, &refs, 1000, 3).unwrap();
    assert!(p < 0.001, "{p}");
}

/// Ten segments; system a is right on six, system b on the other four.
fn sixty_forty() -> (Vec<Vec<String>>, Vec<Vec<String>>, Vec<Vec<String>>) {
    let refs: Vec<Vec<String>> = (0..10).map(|i| toks(&format!("a{i} b{i} c{i} d{i} e{i}"))).collect();
    let wrong = |r: &Vec<String>| -> Vec<String> { r.iter().map(|w| format!("{w}x")).collect() };
    let a = refs.iter().enumerate().map(|(i, r)| if i < 6 { r.clone() } else { wrong(r) }).collect();
    let b = refs.iter().enumerate().map(|(i, r)| if i >= 6 { r.clone() } else { wrong(r) }).collect();
    (a, b, refs)
}

#[test]
fn bootstrap_is_reproducible_for_a_fixed_seed() {
    let (a, b, refs) = sixty_forty();
    let p1 = bootstrap_significance(&a, &b, &refs, 1000, 42).unwrap();
    let p2 = bootstrap_significance(&a, &b, &refs, 1000, 42).unwrap();
    assert_eq!(p1.to_bits(), p2.to_bits());
    assert!(p1 > 0.0 && p1 < 1.0);
}

#[test]
fn bootstrap_ignores_segment_order_given_mapped_draws() {
    let (a, b, refs) = sixty_forty();
    let draws: Vec<Vec<usize>> = (0..200)
        .map(|r| (0..10).map(|i| (r * 7 + i * i * 3 + r * i) % 10).collect())
        .collect();
    let p = bootstrap_with_indices(&a, &b, &refs, &draws).unwrap();
    // reverse segment order and map every drawn index accordingly
    let rev = |v: &Vec<Vec<String>>| v.iter().rev().cloned().collect::<Vec<_>>();
    let mapped: Vec<Vec<usize>> = draws.iter().map(|d| d.iter().map(|i| 9 - i).collect()).collect();
    let q = bootstrap_with_indices(&rev(&a), &rev(&b), &rev(&refs), &mapped).unwrap();
    assert_eq!(p, q);
    assert!(bootstrap_with_indices(&a, &b, &refs, &[vec![10]]).is_err());
}

fn point(system: &str, k: usize, al: f64, bleu: f64) -> CurvePoint {
    CurvePoint { system: system.into(), k, al, bleu }
}

#[test]
fn curve_files() {
    let mut buf = Vec::new();
    write_curve(&[], &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "system,k,AL,BLEU\n");

    let mut buf = Vec::new();
    let pts = [point("segfree", 3, 4.5, 90.0), point("naive", 3, 2.25, 80.0), point("segfree", 1, 2.25, 70.5)];
    write_curve(&pts, &mut buf).unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap(),
        "system,k,AL,BLEU\nnaive,3,2.2500,80.0000\nsegfree,1,2.2500,70.5000\nsegfree,3,4.5000,90.0000\n"
    );

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    emit_curve(&pts, &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 4);
    assert!(matches!(emit_curve(&pts, &dir.path().join("missing/curve.csv")), Err(Error::Io(_))));
}

fn instance() -> impl Strategy<Value = (Vec<String>, Vec<Vec<String>>)> {
    let word = prop::sample::select(vec!["a", "b", "c", "d"]).prop_map(String::from);
    (
        prop::collection::vec(word.clone(), 0..=12),
        prop::collection::vec(prop::collection::vec(word, 0..=5), 1..=3),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(600))]

    #[test]
    fn realign_matches_exhaustive_search((hyp, refs) in instance()) {
        let a = realign(&hyp, &refs).unwrap();
        let (cost, cuts) = brute_force_realign(&hyp, &refs);
        prop_assert_eq!(a.total_edit_distance, cost);
        prop_assert_eq!(a.boundaries(), cuts);
        prop_assert_eq!(a.segments.concat(), hyp.clone());
        prop_assert_eq!(a.token_count(), hyp.len());
    }

    #[test]
    fn edit_distance_matches_the_full_matrix((hyp, refs) in instance()) {
        prop_assert_eq!(edit_distance(&hyp, &refs[0]), levenshtein(&hyp, &refs[0]));
    }

    #[test]
    fn bleu_ignores_segment_order((hyp, refs) in instance(), rot in 0usize..3) {
        let a = realign(&hyp, &refs).unwrap();
        prop_assume!(refs.iter().any(|r| !r.is_empty()));
        let q = bleu(&a.segments, &refs).unwrap();
        let r = rot % refs.len();
        let mut hs = a.segments.clone();
        let mut rs = refs.clone();
        hs.rotate_left(r);
        rs.rotate_left(r);
        prop_assert_eq!(bleu(&hs, &rs).unwrap().bleu, q.bleu);
        prop_assert!((0.0..=100.0).contains(&q.bleu));
        prop_assert_eq!(q.bleu == 100.0, a.segments == refs);
    }
}
