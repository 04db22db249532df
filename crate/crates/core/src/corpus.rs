//! Bag-of-words corpus: vocabulary, token-id streams, frequency filters,
//! stoplists and the frequency/IDF reports used to author stoplists.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::segment::TokenSequence;

/// Default `min_freq`: words occurring this many times or fewer are dropped.
pub const DEFAULT_MIN_FREQ: u64 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("corpus is empty after filtering")]
    EmptyCorpus,
    #[error("invalid bounds: low {low} > high {high}")]
    InvalidBounds { low: u64, high: u64 },
    #[error("duplicate vocabulary entry {0:?}")]
    DuplicateWord(String),
    #[error("duplicate document id {0:?}")]
    DuplicateDocument(String),
    #[error("token id {id} out of range for vocabulary of {len}")]
    TokenOutOfRange { id: u32, len: usize },
}

/// Bijection between word ids `0..len` and word strings.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn from_words(words: Vec<String>) -> Result<Self, CorpusError> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i as u32).is_some() {
                return Err(CorpusError::DuplicateWord(w.clone()));
            }
        }
        Ok(Self { words, index })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// SHA-256 over the words in id order, each terminated by `\n`. This is
    /// the digest of the on-disk vocabulary file.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for w in &self.words {
            h.update(w.as_bytes());
            h.update(b"\n");
        }
        h.finalize().into()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub label: String,
    pub tokens: Vec<u32>,
}

/// Ordered key/value record of how a corpus was produced.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Provenance {
    entries: Vec<(String, String)>,
}

impl Provenance {
    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopList {
    words: BTreeSet<String>,
}

impl StopList {
    /// One word per line; blank lines and surrounding whitespace ignored.
    pub fn parse(text: &str) -> Self {
        text.lines()
            .map(|l| l.trim().trim_start_matches('\u{feff}'))
            .filter(|l| !l.is_empty())
            .collect()
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

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

impl<S: Into<String>> FromIterator<S> for StopList {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self { words: iter.into_iter().map(Into::into).collect() }
    }
}

/// Types and tokens removed by each side of a threshold filter.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ThresholdReport {
    pub low_types: usize,
    pub low_tokens: u64,
    pub high_types: usize,
    pub high_tokens: u64,
}

/// Interns tokens document by document, then filters by frequency.
#[derive(Debug, Default)]
pub struct CorpusBuilder {
    interner: HashMap<String, u32>,
    words: Vec<String>,
    counts: Vec<u64>,
    docs: Vec<Document>,
    seen_ids: HashMap<String, ()>,
}

impl CorpusBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_document<'t, I>(&mut self, id: &str, label: &str, tokens: I) -> Result<(), CorpusError>
    where
        I: IntoIterator<Item = &'t str>,
    {
        if self.seen_ids.insert(id.to_string(), ()).is_some() {
            return Err(CorpusError::DuplicateDocument(id.to_string()));
        }
        let mut ids = Vec::new();
        for tok in tokens {
            let next = self.words.len() as u32;
            let id = *self.interner.entry_ref(tok).or_insert(next);
            if id == next {
                self.words.push(tok.to_string());
                self.counts.push(0);
            }
            self.counts[id as usize] += 1;
            ids.push(id);
        }
        self.docs.push(Document { id: id.to_string(), label: label.to_string(), tokens: ids });
        Ok(())
    }

    /// Keeps words whose corpus frequency is strictly greater than `min_freq`.
    pub fn finish(self, min_freq: u64) -> Result<Corpus, CorpusError> {
        let CorpusBuilder { words, counts, docs, .. } = self;
        if docs.is_empty() {
            return Err(CorpusError::EmptyCorpus);
        }
        let keep: Vec<bool> = counts.iter().map(|&c| c > min_freq).collect();
        let (vocabulary, remap) = remap_vocabulary(&words, &keep);
        let documents = remap_documents(docs, &remap);
        if documents.iter().all(|d| d.tokens.is_empty()) {
            return Err(CorpusError::EmptyCorpus);
        }
        let mut provenance = Provenance::default();
        provenance.set("min_freq", min_freq);
        Ok(Corpus::from_parts_unchecked(vocabulary, documents, provenance))
    }
}

fn remap_vocabulary(words: &[String], keep: &[bool]) -> (Vocabulary, Vec<Option<u32>>) {
    let mut remap = vec![None; words.len()];
    let mut kept = Vec::new();
    for (old, w) in words.iter().enumerate() {
        if keep[old] {
            remap[old] = Some(kept.len() as u32);
            kept.push(w.clone());
        }
    }
    let vocabulary = Vocabulary::from_words(kept).expect("source vocabulary has no duplicates");
    (vocabulary, remap)
}

fn remap_documents(docs: Vec<Document>, remap: &[Option<u32>]) -> Vec<Document> {
    docs.into_iter()
        .map(|d| Document {
            tokens: d.tokens.iter().filter_map(|&t| remap[t as usize]).collect(),
            id: d.id,
            label: d.label,
        })
        .collect()
}

/// Builds a corpus from segmented documents, using each doc id as its label.
pub fn build_corpus(docs: &[TokenSequence], min_freq: u64) -> Result<Corpus, CorpusError> {
    let mut b = CorpusBuilder::new();
    for d in docs {
        b.add_document(&d.doc_id, &d.doc_id, d.tokens.iter().map(String::as_str))?;
    }
    b.finish(min_freq)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    vocabulary: Vocabulary,
    documents: Vec<Document>,
    provenance: Provenance,
    doc_index: HashMap<String, usize>,
}

impl Corpus {
    /// Validates token ids and document-id uniqueness.
    pub fn from_parts(
        vocabulary: Vocabulary,
        documents: Vec<Document>,
        provenance: Provenance,
    ) -> Result<Self, CorpusError> {
        let len = vocabulary.len();
        for d in &documents {
            if let Some(&id) = d.tokens.iter().find(|&&t| t as usize >= len) {
                return Err(CorpusError::TokenOutOfRange { id, len });
            }
        }
        let mut seen = HashMap::with_capacity(documents.len());
        for (i, d) in documents.iter().enumerate() {
            if seen.insert(d.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateDocument(d.id.clone()));
            }
        }
        Ok(Self { vocabulary, documents, provenance, doc_index: seen })
    }

    fn from_parts_unchecked(vocabulary: Vocabulary, documents: Vec<Document>, provenance: Provenance) -> Self {
        let doc_index = documents.iter().enumerate().map(|(i, d)| (d.id.clone(), i)).collect();
        Self { vocabulary, documents, provenance, doc_index }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn provenance_mut(&mut self) -> &mut Provenance {
        &mut self.provenance
    }

    pub fn num_documents(&self) -> usize {
        self.documents.len()
    }

    pub fn document_position(&self, id: &str) -> Option<usize> {
        self.doc_index.get(id).copied()
    }

    pub fn total_tokens(&self) -> u64 {
        self.documents.iter().map(|d| d.tokens.len() as u64).sum()
    }

    /// Corpus frequency of each word id.
    pub fn word_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.vocabulary.len()];
        for d in &self.documents {
            for &t in &d.tokens {
                counts[t as usize] += 1;
            }
        }
        counts
    }

    /// Number of documents containing each word id.
    pub fn document_frequencies(&self) -> Vec<u64> {
        let mut df = vec![0u64; self.vocabulary.len()];
        let mut last_doc = vec![usize::MAX; self.vocabulary.len()];
        for (di, d) in self.documents.iter().enumerate() {
            for &t in &d.tokens {
                if last_doc[t as usize] != di {
                    last_doc[t as usize] = di;
                    df[t as usize] += 1;
                }
            }
        }
        df
    }

    pub fn empty_documents(&self) -> Vec<&str> {
        self.documents.iter().filter(|d| d.tokens.is_empty()).map(|d| d.id.as_str()).collect()
    }

    fn retain_words(&self, keep: &[bool]) -> Corpus {
        let (vocabulary, remap) = remap_vocabulary(self.vocabulary.words(), keep);
        let documents = remap_documents(self.documents.clone(), &remap);
        Corpus::from_parts_unchecked(vocabulary, documents, self.provenance.clone())
    }

    /// Removes stoplisted words. Stop words absent from the vocabulary are ignored.
    pub fn apply_stoplist(&self, stops: &StopList) -> Corpus {
        let keep: Vec<bool> = self.vocabulary.words().iter().map(|w| !stops.contains(w)).collect();
        let removed = keep.iter().filter(|k| !**k).count();
        let mut out = self.retain_words(&keep);
        let prior: usize = self.provenance.get("stoplist_removed").and_then(|v| v.parse().ok()).unwrap_or(0);
        out.provenance.set("stoplist_size", stops.len());
        out.provenance.set("stoplist_removed", prior + removed);
        out
    }

    /// Drops words with count below `low` or above `high` (`None` = unbounded).
    pub fn prep_thresholds(&self, low: u64, high: Option<u64>) -> Result<(Corpus, ThresholdReport), CorpusError> {
        if let Some(h) = high {
            if low > h {
                return Err(CorpusError::InvalidBounds { low, high: h });
            }
        }
        let counts = self.word_counts();
        let mut report = ThresholdReport::default();
        let keep: Vec<bool> = counts
            .iter()
            .map(|&c| {
                if c < low {
                    report.low_types += 1;
                    report.low_tokens += c;
                    false
                } else if high.is_some_and(|h| c > h) {
                    report.high_types += 1;
                    report.high_tokens += c;
                    false
                } else {
                    true
                }
            })
            .collect();
        let mut out = self.retain_words(&keep);
        out.provenance.set("low", low);
        out.provenance.set("high", high.map_or_else(|| "inf".to_string(), |h| format!("{h}")));
        Ok((out, report))
    }

    /// Top `n` words by corpus count, ties by word id.
    pub fn frequency_report(&self, n: usize) -> Vec<(String, u64)> {
        let counts = self.word_counts();
        let mut ids: Vec<u32> = (0..counts.len() as u32).collect();
        ids.sort_by(|&a, &b| counts[b as usize].cmp(&counts[a as usize]).then(a.cmp(&b)));
        ids.into_iter()
            .take(n)
            .map(|id| (self.vocabulary.word(id).to_string(), counts[id as usize]))
            .collect()
    }

    /// `ln(D / d_w)` for every word present in at least one document, most
    /// widely distributed first; ties by word id.
    pub fn idf_report(&self) -> Vec<(String, f64)> {
        let df = self.document_frequencies();
        let n_docs = self.documents.len() as f64;
        let mut rows: Vec<(u32, f64)> = df
            .iter()
            .enumerate()
            .filter(|(_, &d)| d > 0)
            .map(|(id, &d)| (id as u32, if d as f64 == n_docs { 0.0 } else { libm::log(n_docs / d as f64) }))
            .collect();
        rows.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        rows.into_iter().map(|(id, idf)| (self.vocabulary.word(id).to_string(), idf)).collect()
    }
}
