#![allow(clippy::excessive_precision)]

use std::collections::HashMap;

use hypershelf_core::corpus::{build_corpus, CorpusBuilder, StopList, DEFAULT_MIN_FREQ};
use hypershelf_core::filter::filter_documents;
use hypershelf_core::filter::CleanDocument;
use hypershelf_core::segment::TokenSequence;
use hypershelf_core::simplify::Simplifier;
use proptest::prelude::*;

fn docs() -> impl Strategy<Value = Vec<Vec<String>>> {
    prop::collection::vec(prop::collection::vec("[a-h]", 0..60), 1..12)
}

fn sequences(docs: &[Vec<String>]) -> Vec<TokenSequence> {
    docs.iter().enumerate().map(|(i, t)| TokenSequence { doc_id: format!("d{i:02}"), tokens: t.clone() }).collect()
}

proptest! {
    #[test]
    fn filter_keeps_exactly_frequent_words(docs in docs(), min_freq in 0u64..8) {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for t in docs.iter().flatten() {
            *counts.entry(t).or_default() += 1;
        }
        match build_corpus(&sequences(&docs), min_freq) {
            Ok(c) => {
                let expect = counts.values().filter(|&&n| n > min_freq).count();
                prop_assert_eq!(c.vocabulary().len(), expect);
                let wc = c.word_counts();
                for (id, w) in c.vocabulary().words().iter().enumerate() {
                    prop_assert_eq!(wc[id], counts[w.as_str()]);
                    prop_assert!(wc[id] > min_freq);
                }
                prop_assert_eq!(c.num_documents(), docs.len());
                let report = c.frequency_report(usize::MAX);
                prop_assert_eq!(report.iter().map(|(_, n)| n).sum::<u64>(), c.total_tokens());
            }
            Err(_) => prop_assert!(counts.values().all(|&n| n <= min_freq)),
        }
    }

    #[test]
    fn default_cutoff_leaves_no_rare_words(docs in docs()) {
        if let Ok(c) = build_corpus(&sequences(&docs), DEFAULT_MIN_FREQ) {
            prop_assert!(c.word_counts().iter().all(|&n| n > 5));
        }
    }

    #[test]
    fn stoplist_is_idempotent(docs in docs(), stops in prop::collection::vec("[a-j]", 0..5)) {
        if let Ok(c) = build_corpus(&sequences(&docs), 0) {
            let s: StopList = stops.into_iter().collect();
            let once = c.apply_stoplist(&s);
            prop_assert_eq!(once.apply_stoplist(&s), once.clone());
            prop_assert!(once.vocabulary().len() <= c.vocabulary().len());
            prop_assert!(once.vocabulary().words().iter().all(|w| !s.contains(w)));
        }
    }

    #[test]
    fn thresholds_never_grow_vocabulary(docs in docs(), low in 0u64..10, span in 0u64..20) {
        if let Ok(c) = build_corpus(&sequences(&docs), 0) {
            let (t, report) = c.prep_thresholds(low, Some(low + span)).unwrap();
            prop_assert!(t.vocabulary().len() <= c.vocabulary().len());
            prop_assert_eq!(t.vocabulary().len() + report.low_types + report.high_types, c.vocabulary().len());
            prop_assert!(t.word_counts().iter().all(|&n| n >= low && n <= low + span));
            let removed = report.low_tokens + report.high_tokens;
            prop_assert_eq!(t.total_tokens() + removed, c.total_tokens());
        }
    }

    #[test]
    fn idf_zero_iff_everywhere(docs in docs()) {
        if let Ok(c) = build_corpus(&sequences(&docs), 0) {
            let df = c.document_frequencies();
            let d = c.num_documents() as u64;
            for (w, idf) in c.idf_report() {
                let id = c.vocabulary().id(&w).unwrap() as usize;
                prop_assert_eq!(idf == 0.0, df[id] == d);
                prop_assert!((idf - (d as f64 / df[id] as f64).ln()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn filter_partitions_input(texts in prop::collection::vec("(之|我们|现在|)[天下]{0,3}", 0..20)) {
        let docs: Vec<CleanDocument> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| CleanDocument { doc_id: format!("{i}.txt"), label: i.to_string(), text: t.clone() })
            .collect();
        let markers = vec!["我们".to_string(), "现在".to_string()];
        let out = filter_documents(docs.clone(), &markers);
        let (k, f, d) = out.counts();
        prop_assert_eq!(k + f + d, docs.len());
        let mut ids: Vec<String> = out.kept.iter().map(|d| d.doc_id.clone())
            .chain(out.flagged.iter().map(|f| f.document.doc_id.clone()))
            .chain(out.dropped.iter().cloned())
            .collect();
        ids.sort();
        let mut all: Vec<String> = docs.iter().map(|d| d.doc_id.clone()).collect();
        all.sort();
        prop_assert_eq!(ids, all);
    }
}

#[test]
fn idf_of_one_in_three() {
    let mut b = CorpusBuilder::new();
    b.add_document("1", "1", ["x", "y"]).unwrap();
    b.add_document("2", "2", ["x"]).unwrap();
    b.add_document("3", "3", ["x"]).unwrap();
    let c = b.finish(0).unwrap();
    let idf = c.idf_report();
    assert_eq!(idf[0], ("x".to_string(), 0.0));
    assert_eq!(idf[1].0, "y");
    assert!((idf[1].1 - 1.098_612_288_668_109_691_4).abs() < 1e-15);
}

#[test]
fn threshold_window() {
    let mut b = CorpusBuilder::new();
    let tokens: Vec<&str> = std::iter::repeat_n("a", 10).chain(std::iter::repeat_n("b", 4)).chain(["c", "c"]).collect();
    b.add_document("d", "d", tokens).unwrap();
    let c = b.finish(0).unwrap();
    let (t, _) = c.prep_thresholds(3, Some(5)).unwrap();
    assert_eq!(t.vocabulary().words(), ["b"]);
    let (id, _) = c.prep_thresholds(0, None).unwrap();
    assert_eq!(id.vocabulary(), c.vocabulary());
    assert_eq!(id.documents(), c.documents());
}

fn table() -> Simplifier {
    Simplifier::parse("漢\t汉\n學\t学\n說\t说\n國\t国\t囯\n").unwrap()
}

proptest! {
    #[test]
    fn simplification_idempotent_and_length_preserving(s in "[漢學說國天下a-z 。]{0,30}") {
        let t = table();
        let once = t.to_simplified(&s);
        prop_assert_eq!(t.to_simplified(&once), once.clone());
        prop_assert_eq!(once.chars().count(), s.chars().count());
    }
}
