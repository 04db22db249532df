//! Dictionary-driven maximum-matching segmentation (complex mmseg).
//!
//! Text is split into runs of Han characters; everything else is a hard
//! boundary and is not emitted. Within a run, at each position every chunk
//! of up to three candidate words is scored, and the first word of the best
//! chunk is emitted. Candidates are the single character at a position plus
//! every lexicon word that matches there. Chunks are ranked by
//!
//! 1. largest total length,
//! 2. largest average word length,
//! 3. smallest variance of word lengths,
//! 4. largest sum of morphemic freedom (`ln freq`) of its one-character words,
//!
//! and finally by the lexicographically smallest word sequence. Since every
//! chunk starts at the same position, rules 2 and 3 reduce to "fewest words"
//! and "smallest sum of squared lengths", which are compared exactly. Rule 4
//! sums per-character freedom in fixed point (micro-nats) so equal sums
//! compare equal regardless of order.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use hashbrown::{HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexiconError {
    #[error("line {line}: expected `[length] word`, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: expected `frequency char`, got {text:?}")]
    MalformedFrequency { line: usize, text: String },
}

/// Multi-character word list plus optional single-character frequencies.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    words: HashSet<String>,
    max_word_chars: usize,
    char_freq: HashMap<char, u64>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses a word list: one entry per line, either bare (`天下`) or in the
    /// mmseg `<length> <word>` layout. Blank lines are skipped, duplicates
    /// collapse, single-character entries are ignored.
    pub fn parse_words(text: &str) -> Result<Self, LexiconError> {
        let mut lex = Self::new();
        lex.extend_words(text)?;
        Ok(lex)
    }

    pub fn extend_words(&mut self, text: &str) -> Result<(), LexiconError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim().trim_start_matches('\u{feff}');
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let first = fields.next().unwrap_or_default();
            let word = match (fields.next(), fields.next()) {
                (None, _) => first,
                (Some(w), None) if first.bytes().all(|b| b.is_ascii_digit()) => w,
                _ => return Err(LexiconError::Malformed { line: i + 1, text: line.to_string() }),
            };
            self.insert(word);
        }
        Ok(())
    }

    /// Parses `<frequency> <char>` lines into the character-frequency table.
    pub fn extend_char_freqs(&mut self, text: &str) -> Result<(), LexiconError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim().trim_start_matches('\u{feff}');
            if line.is_empty() {
                continue;
            }
            let bad = || LexiconError::MalformedFrequency { line: i + 1, text: line.to_string() };
            let mut fields = line.split_whitespace();
            let freq: u64 = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad)?;
            let word = fields.next().ok_or_else(bad)?;
            let mut chars = word.chars();
            let (Some(c), None, None) = (chars.next(), chars.next(), fields.next()) else {
                return Err(bad());
            };
            self.char_freq.insert(c, freq);
        }
        Ok(())
    }

    /// Adds `word` if it has at least two characters. Returns whether it was new.
    pub fn insert(&mut self, word: &str) -> bool {
        let n = word.chars().count();
        if n < 2 {
            return false;
        }
        self.max_word_chars = self.max_word_chars.max(n);
        self.words.insert(word.to_string())
    }

    pub fn set_char_freq(&mut self, c: char, freq: u64) {
        self.char_freq.insert(c, freq);
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn max_word_chars(&self) -> usize {
        self.max_word_chars
    }

    pub fn char_freq(&self, c: char) -> Option<u64> {
        self.char_freq.get(&c).copied()
    }

    pub fn has_char_freqs(&self) -> bool {
        !self.char_freq.is_empty()
    }

    /// `ln(freq)` for characters with a positive frequency, otherwise 0.
    pub fn morphemic_freedom(&self, c: char) -> f64 {
        match self.char_freq.get(&c) {
            Some(&f) if f > 0 => libm::log(f as f64),
            _ => 0.0,
        }
    }

    /// [`Self::morphemic_freedom`] rounded to micro-nats.
    pub fn freedom_units(&self, c: char) -> i64 {
        libm::round(self.morphemic_freedom(c) * 1e6) as i64
    }

    /// Entries in sorted order.
    pub fn words_sorted(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.words.iter().map(String::as_str).collect();
        v.sort_unstable();
        v
    }
}

/// Segmentation of one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub doc_id: String,
    pub tokens: Vec<String>,
}

/// Han ideographs and the CJK blocks the original tokenizer accepted.
pub fn is_han(c: char) -> bool {
    matches!(c as u32,
        0x3400..=0x4DBF
        | 0x4E00..=0x9FFF
        | 0xF900..=0xFAFF
        | 0x2E80..=0x2EFF
        | 0x2F00..=0x2FDF
        | 0x3007
        | 0x20000..=0x2EBEF
        | 0x2F800..=0x2FA1F
        | 0x30000..=0x3134F
        // GBK private-use components used for rare characters
        | 0xE400..=0xE5E8
        | 0xE600..=0xE6CF
        | 0xE815..=0xE86F)
}

/// Ranking key for one chunk; `Less` means better.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ChunkScore {
    total: usize,
    words: usize,
    sum_sq: usize,
    freedom: i64,
}

fn compare_chunks(a: (&ChunkScore, &[usize]), b: (&ChunkScore, &[usize])) -> Ordering {
    let (sa, la) = a;
    let (sb, lb) = b;
    sb.total
        .cmp(&sa.total)
        .then(sa.words.cmp(&sb.words))
        .then(sa.sum_sq.cmp(&sb.sum_sq))
        .then(sb.freedom.cmp(&sa.freedom))
        .then_with(|| la.cmp(lb))
}

#[derive(Debug, Clone, Copy)]
pub struct Segmenter<'a> {
    lexicon: &'a Lexicon,
}

impl<'a> Segmenter<'a> {
    pub fn new(lexicon: &'a Lexicon) -> Self {
        Self { lexicon }
    }

    pub fn segment(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        self.for_each_token(text, |t| out.push(t.to_string()));
        out
    }

    pub fn segment_document(&self, doc_id: &str, text: &str) -> TokenSequence {
        TokenSequence { doc_id: doc_id.to_string(), tokens: self.segment(text) }
    }

    /// Streams tokens as borrowed slices of `text`.
    pub fn for_each_token<'t, F: FnMut(&'t str)>(&self, text: &'t str, mut emit: F) {
        let mut scratch = Scratch::default();
        let mut run_start: Option<usize> = None;
        for (i, c) in text.char_indices() {
            match (is_han(c), run_start) {
                (true, None) => run_start = Some(i),
                (false, Some(s)) => {
                    self.segment_run(&text[s..i], &mut scratch, &mut emit);
                    run_start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = run_start {
            self.segment_run(&text[s..], &mut scratch, &mut emit);
        }
    }

    fn segment_run<'t, F: FnMut(&'t str)>(&self, run: &'t str, scratch: &mut Scratch, emit: &mut F) {
        scratch.load(run, self.lexicon);
        let n = scratch.chars.len();
        let mut pos = 0;
        while pos < n {
            let len = scratch.best_first_word(pos);
            emit(&run[scratch.offsets[pos]..scratch.offsets[pos + len]]);
            pos += len;
        }
    }
}

/// Per-run buffers reused across runs.
#[derive(Default)]
struct Scratch {
    chars: Vec<char>,
    /// Byte offset of each char, plus the run length at the end.
    offsets: Vec<usize>,
    /// Candidate word lengths per position, ascending; always contains 1.
    candidates: Vec<Vec<usize>>,
    freedom: Vec<i64>,
}

impl Scratch {
    fn load(&mut self, run: &str, lex: &Lexicon) {
        self.chars.clear();
        self.offsets.clear();
        for (i, c) in run.char_indices() {
            self.chars.push(c);
            self.offsets.push(i);
        }
        self.offsets.push(run.len());
        let n = self.chars.len();
        self.freedom.clear();
        self.freedom.extend(self.chars.iter().map(|&c| lex.freedom_units(c)));
        self.candidates.resize_with(n.max(self.candidates.len()), Vec::new);
        for i in 0..n {
            let cands = &mut self.candidates[i];
            cands.clear();
            cands.push(1);
            let longest = lex.max_word_chars().min(n - i);
            for len in 2..=longest {
                if lex.contains(&run[self.offsets[i]..self.offsets[i + len]]) {
                    cands.push(len);
                }
            }
        }
    }

    fn score(&self, pos: usize, lens: &[usize]) -> ChunkScore {
        let mut s = ChunkScore { total: 0, words: lens.len(), sum_sq: 0, freedom: 0 };
        let mut p = pos;
        for &l in lens {
            s.total += l;
            s.sum_sq += l * l;
            if l == 1 {
                s.freedom += self.freedom[p];
            }
            p += l;
        }
        s
    }

    fn best_first_word(&self, pos: usize) -> usize {
        let n = self.chars.len();
        if self.candidates[pos].len() == 1 {
            return 1;
        }
        let mut best: Option<(ChunkScore, [usize; 3], usize)> = None;
        let mut consider = |lens: &[usize]| {
            let s = self.score(pos, lens);
            let better = match &best {
                None => true,
                Some((bs, bl, bn)) => compare_chunks((&s, lens), (bs, &bl[..*bn])) == Ordering::Less,
            };
            if better {
                let mut arr = [0; 3];
                arr[..lens.len()].copy_from_slice(lens);
                best = Some((s, arr, lens.len()));
            }
        };
        for &l1 in &self.candidates[pos] {
            let p1 = pos + l1;
            if p1 == n {
                consider(&[l1]);
                continue;
            }
            for &l2 in &self.candidates[p1] {
                let p2 = p1 + l2;
                if p2 == n {
                    consider(&[l1, l2]);
                    continue;
                }
                for &l3 in &self.candidates[p2] {
                    consider(&[l1, l2, l3]);
                }
            }
        }
        best.map_or(1, |(_, lens, _)| lens[0])
    }
}

/// Whitespace tokenizer for already-spaced text: lowercases, strips
/// punctuation from both ends of each token, drops tokens left empty.
pub fn plain_tokens<'t>(text: &'t str) -> impl Iterator<Item = String> + 't {
    text.split_whitespace().filter_map(|w| {
        let w = w.trim_matches(|c: char| !c.is_alphanumeric());
        (!w.is_empty()).then(|| w.to_lowercase())
    })
}
