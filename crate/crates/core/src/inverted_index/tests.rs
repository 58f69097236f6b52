use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::corpus::{gen_synthetic, SyntheticConfig};

fn built(collection: &Collection) -> (tempfile::TempDir, InvertedIndex) {
    let dir = tempfile::tempdir().unwrap();
    build(collection, dir.path()).unwrap();
    let index = InvertedIndex::open(dir.path()).unwrap();
    (dir, index)
}

fn synthetic(n_docs: usize, seed: u64) -> Collection {
    let cfg = SyntheticConfig { n_docs, vocab_size: 300, seed, ..SyntheticConfig::default() };
    Collection::from_pairs(gen_synthetic(&cfg).unwrap().docs)
}

/// term → ascending (doc, freq) computed straight from the text.
fn text_oracle(c: &Collection) -> BTreeMap<String, Vec<(DocId, u32)>> {
    let mut out: BTreeMap<String, Vec<(DocId, u32)>> = BTreeMap::new();
    for d in &c.docs {
        let mut tf: BTreeMap<String, u32> = BTreeMap::new();
        for t in d.tokens() {
            *tf.entry(t).or_default() += 1;
        }
        for (t, f) in tf {
            out.entry(t).or_default().push((d.doc_id, f));
        }
    }
    out
}

fn conjunctive(oracle: &BTreeMap<String, Vec<(DocId, u32)>>, terms: &[String]) -> Vec<DocMatch> {
    let lists: Vec<BTreeMap<DocId, u32>> =
        terms.iter().map(|t| oracle.get(t).map(|l| l.iter().copied().collect()).unwrap_or_default()).collect();
    let Some(first) = lists.first() else { return Vec::new() };
    first
        .keys()
        .filter(|d| lists.iter().all(|l| l.contains_key(d)))
        .map(|&d| DocMatch { doc_id: d, freqs: lists.iter().map(|l| l[&d]).collect() })
        .collect()
}

fn terms(t: &[&str]) -> Vec<String> {
    t.iter().map(|s| s.to_string()).collect()
}

#[test]
fn two_doc_lexicon() {
    let c = Collection::from_pairs([("a", "apple banana apple"), ("b", "banana cherry")]);
    let (_dir, index) = built(&c);
    let lex: Vec<(&str, u32)> = index.lexicon().iter().map(|e| (e.term.as_str(), e.doc_freq)).collect();
    assert_eq!(lex, [("apple", 1), ("banana", 2), ("cherry", 1)]);
    assert_eq!(index.stats().n, 2);
    assert_eq!(index.stats().total_tokens, 5);
    assert_eq!(index.doc_lens(), [3, 2]);
    let apple = index.postings_of("apple").unwrap();
    assert_eq!((apple[0].doc_id, apple[0].freq), (0, 2));
    assert_eq!(apple[0].positions.as_deref(), Some(&[0, 2][..]));
    assert!(index.postings_of("durian").unwrap().is_empty());

    let mut meter = IoMeter::default();
    let hits: Vec<DocMatch> = index.daat_stream(&terms(&["banana", "apple"]), &mut meter).unwrap().map(Result::unwrap).collect();
    assert_eq!(hits, [DocMatch { doc_id: 0, freqs: vec![1, 2] }]);
    assert_eq!(meter.postings_seeks, 2);
}

#[test]
fn empty_inputs_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert!(build(&Collection::from_pairs(Vec::<(String, String)>::new()), dir.path()).is_err());
    assert!(build(&Collection::from_pairs([("s", "  ,, ")]), dir.path()).is_err());
}

#[test]
fn unknown_term_reads_nothing() {
    let c = Collection::from_pairs([("a", "x y"), ("b", "y z")]);
    let (_dir, index) = built(&c);
    let mut meter = IoMeter::default();
    assert_eq!(index.daat_stream(&terms(&["y", "nope"]), &mut meter).unwrap().count(), 0);
    assert_eq!(meter, IoMeter::default());
    assert!(index.filter_docids(&[0, 1], &terms(&["nope"]), 0, &mut meter).unwrap().is_empty());
    assert_eq!(meter, IoMeter::default());
}

#[test]
fn daat_matches_set_intersection() {
    let c = synthetic(3000, 21);
    let oracle = text_oracle(&c);
    let (_dir, index) = built(&c);
    let vocab: Vec<String> = oracle.keys().cloned().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..150 {
        let n = rng.gen_range(1..=3);
        // bias towards frequent terms so intersections are non-trivial
        let q: Vec<String> = (0..n)
            .map(|_| {
                let pool = vocab.len().min(rng.gen_range(5..200));
                vocab[rng.gen_range(0..pool)].clone()
            })
            .collect();
        let mut q_unique = Vec::new();
        for t in q {
            if !q_unique.contains(&t) {
                q_unique.push(t);
            }
        }
        let mut meter = IoMeter::default();
        let got: Vec<DocMatch> = index.daat_stream(&q_unique, &mut meter).unwrap().map(Result::unwrap).collect();
        assert_eq!(got, conjunctive(&oracle, &q_unique), "query {q_unique:?}");
        let expect_bytes: u64 = q_unique.iter().map(|t| u64::from(index.entry(t).unwrap().length)).sum();
        assert_eq!(meter.postings_bytes, expect_bytes);
    }
}

#[test]
fn daat_order_insensitive() {
    let c = synthetic(1500, 8);
    let (_dir, index) = built(&c);
    let freq: Vec<String> = {
        let mut lex: Vec<&LexiconEntry> = index.lexicon().iter().collect();
        lex.sort_by_key(|e| std::cmp::Reverse(e.doc_freq));
        lex.iter().take(3).map(|e| e.term.clone()).collect()
    };
    let run = |q: &[String]| -> Vec<(DocId, BTreeSet<(String, u32)>)> {
        let mut meter = IoMeter::default();
        index
            .daat_stream(q, &mut meter)
            .unwrap()
            .map(|m| {
                let m = m.unwrap();
                (m.doc_id, q.iter().cloned().zip(m.freqs).collect())
            })
            .collect()
    };
    let a = run(&freq);
    let rev: Vec<String> = freq.iter().rev().cloned().collect();
    assert_eq!(a, run(&rev));
    assert!(!a.is_empty());
}

#[test]
fn filter_matches_oracle() {
    let c = synthetic(4000, 13);
    let oracle = text_oracle(&c);
    let (_dir, index) = built(&c);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let vocab: Vec<String> = oracle.keys().cloned().collect();
    let all: Vec<DocId> = (0..c.len() as DocId).collect();
    for round in 0..40 {
        let n = rng.gen_range(1..=2);
        let q: Vec<String> = vocab.choose_multiple(&mut rng, n).cloned().collect();
        let cands: Vec<DocId> = match round {
            0 => Vec::new(),
            1 => all.clone(),
            _ => all.iter().copied().filter(|_| rng.gen_bool(0.05)).collect(),
        };
        let want: Vec<DocMatch> = conjunctive(&oracle, &q).into_iter().filter(|m| cands.binary_search(&m.doc_id).is_ok()).collect();
        for gap in [0, 4096, u64::MAX] {
            let mut meter = IoMeter::default();
            let got = index.filter_postings(&cands, &q, gap, &mut meter).unwrap();
            assert_eq!(got, want, "round {round} gap {gap}");
            let full: u64 = q.iter().filter_map(|t| index.entry(t)).map(|e| u64::from(e.length)).sum();
            assert!(meter.postings_bytes <= full);
        }
    }
    let mut meter = IoMeter::default();
    assert!(index.filter_postings(&[5, 3], &terms(&["w1"]), 0, &mut meter).is_err());
}

#[test]
fn filter_reads_few_blocks_for_few_candidates() {
    let c = synthetic(6000, 4);
    let (_dir, index) = built(&c);
    let top = index.lexicon().iter().max_by_key(|e| e.doc_freq).unwrap();
    assert!(top.skips.len() > 4, "need a multi-block list");
    let mut meter = IoMeter::default();
    let q = vec![top.term.clone()];
    index.filter_postings(&[17], &q, 0, &mut meter).unwrap();
    assert_eq!(meter.postings_seeks, 1);
    assert!(meter.postings_bytes < u64::from(top.length) / 2);
}

#[test]
fn frequencies_sum_to_total_tokens() {
    let c = synthetic(2000, 30);
    let (_dir, index) = built(&c);
    let mut sum = 0u64;
    for e in index.lexicon() {
        let list = index.postings_of(&e.term).unwrap();
        assert_eq!(list.len() as u32, e.doc_freq);
        sum += list.iter().map(|p| u64::from(p.freq)).sum::<u64>();
    }
    assert_eq!(sum, index.stats().total_tokens);
    assert_eq!(index.lexicon().len() as u32, index.stats().vocab_size);
}

#[test]
fn truncated_postings_detected() {
    let c = synthetic(300, 2);
    let dir = tempfile::tempdir().unwrap();
    build(&c, dir.path()).unwrap();
    let path = dir.path().join(POSTINGS_FILE);
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 10]).unwrap();
    let index = InvertedIndex::open(dir.path()).unwrap();
    let last = index.lexicon().iter().max_by_key(|e| e.offset).unwrap().term.clone();
    assert!(matches!(index.postings_of(&last), Err(Error::Corrupt { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn daat_equals_oracle_on_random_corpora(docs in prop::collection::vec(prop::collection::vec(0u8..6, 1..30), 1..300), q in prop::collection::vec(0u8..6, 1..3)) {
        let pairs: Vec<(String, String)> = docs
            .iter()
            .map(|d| ("s".to_string(), d.iter().map(|t| format!("t{t}")).collect::<Vec<_>>().join(" ")))
            .collect();
        let c = Collection::from_pairs(pairs);
        let (_dir, index) = built(&c);
        let mut q: Vec<String> = q.iter().map(|t| format!("t{t}")).collect();
        q.dedup();
        let mut meter = IoMeter::default();
        let got: Vec<DocMatch> = index.daat_stream(&q, &mut meter).unwrap().map(Result::unwrap).collect();
        prop_assert_eq!(got, conjunctive(&text_oracle(&c), &q));
    }
}
