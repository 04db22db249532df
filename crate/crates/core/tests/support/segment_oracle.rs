//! Exhaustive segmentation oracle.
//!
//! Enumerates every complete segmentation of the remaining text, scores each
//! one's three-word window with the four rules (average and variance computed
//! directly in floating point), and emits the first word of the best window.

use std::collections::{BTreeMap, BTreeSet};

use hypershelf_core::rng::SeededRng;
use hypershelf_core::segment::{Lexicon, Segmenter};

pub const ALPHABET: [char; 6] = ['甲', '乙', '丙', '丁', '戊', '己'];

pub struct OracleLexicon {
    pub words: BTreeSet<String>,
    pub freqs: BTreeMap<char, u64>,
}

fn full_segmentations(text: &[char], lex: &OracleLexicon) -> Vec<Vec<String>> {
    if text.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for len in 1..=text.len() {
        let word: String = text[..len].iter().collect();
        if len > 1 && !lex.words.contains(&word) {
            continue;
        }
        for mut rest in full_segmentations(&text[len..], lex) {
            rest.insert(0, word.clone());
            out.push(rest);
        }
    }
    out
}

struct Score {
    total: f64,
    avg: f64,
    variance: f64,
    freedom: i64,
}

fn score(window: &[String], lex: &OracleLexicon) -> Score {
    let lens: Vec<f64> = window.iter().map(|w| w.chars().count() as f64).collect();
    let total: f64 = lens.iter().sum();
    let avg = total / lens.len() as f64;
    let variance = lens.iter().map(|l| (l - avg).powi(2)).sum::<f64>() / lens.len() as f64;
    let freedom = window
        .iter()
        .filter(|w| w.chars().count() == 1)
        .map(|w| {
            let c = w.chars().next().unwrap();
            match lex.freqs.get(&c) {
                Some(&f) if f > 0 => ((f as f64).ln() * 1e6).round() as i64,
                _ => 0,
            }
        })
        .sum();
    Score { total, avg, variance, freedom }
}

const EPS: f64 = 1e-9;

/// True when `a` beats `b`.
fn better(a: &(Score, Vec<String>), b: &(Score, Vec<String>)) -> bool {
    let (sa, wa) = a;
    let (sb, wb) = b;
    if (sa.total - sb.total).abs() > EPS {
        return sa.total > sb.total;
    }
    if (sa.avg - sb.avg).abs() > EPS {
        return sa.avg > sb.avg;
    }
    if (sa.variance - sb.variance).abs() > EPS {
        return sa.variance < sb.variance;
    }
    if sa.freedom != sb.freedom {
        return sa.freedom > sb.freedom;
    }
    wa < wb
}

pub fn oracle_segment(text: &str, lex: &OracleLexicon) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < chars.len() {
        let mut best: Option<(Score, Vec<String>)> = None;
        for seg in full_segmentations(&chars[pos..], lex) {
            let window: Vec<String> = seg.into_iter().take(3).collect();
            let cand = (score(&window, lex), window);
            if best.as_ref().is_none_or(|b| better(&cand, b)) {
                best = Some(cand);
            }
        }
        let first = best.unwrap().1.remove(0);
        pos += first.chars().count();
        out.push(first);
    }
    out
}

pub fn random_word(rng: &mut SeededRng, min: usize, max: usize) -> String {
    let len = min + rng.below(max - min + 1);
    (0..len).map(|_| ALPHABET[rng.below(ALPHABET.len())]).collect()
}

pub fn random_lexicon(rng: &mut SeededRng) -> (Lexicon, OracleLexicon) {
    let mut lexicon = Lexicon::new();
    let mut oracle = OracleLexicon { words: BTreeSet::new(), freqs: BTreeMap::new() };
    for _ in 0..(2 + rng.below(14)) {
        let w = random_word(rng, 2, 4);
        lexicon.insert(&w);
        oracle.words.insert(w);
    }
    // half the lexicons carry character frequencies; small values make
    // coincident log sums (2*6 = 3*4) likely
    if rng.below(2) == 0 {
        for c in ALPHABET {
            if rng.below(4) != 0 {
                let f = rng.below(9) as u64;
                lexicon.set_char_freq(c, f);
                oracle.freqs.insert(c, f);
            }
        }
    }
    (lexicon, oracle)
}

/// Segments random texts of 1 to 12 characters under 100 random lexicons.
/// Returns (agreements, cases) and the first disagreement.
pub fn agreement(seed: u64, lexicons: usize, texts: usize) -> (usize, usize, Option<String>) {
    let mut rng = SeededRng::new(seed);
    let (mut agree, mut total, mut first) = (0, 0, None);
    for _ in 0..lexicons {
        let (lexicon, oracle) = random_lexicon(&mut rng);
        let seg = Segmenter::new(&lexicon);
        for _ in 0..texts {
            let text = random_word(&mut rng, 1, 12);
            let got = seg.segment(&text);
            let want = oracle_segment(&text, &oracle);
            total += 1;
            if got == want {
                agree += 1;
            } else if first.is_none() {
                first = Some(format!("{text}: {got:?} vs {want:?}"));
            }
        }
    }
    (agree, total, first)
}
