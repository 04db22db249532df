//! Latent Dirichlet allocation by collapsed Gibbs sampling.
//!
//! Topic assignments start uniformly at random. Each sweep visits tokens in
//! corpus order and redraws the topic of token `i` (word `w`, document `d`)
//! from
//!
//! ```text
//! p(z_i = k | z_-i) ∝ (n_dk + alpha) * (n_kw + beta) / (n_k + V * beta)
//! ```
//!
//! with token `i` removed from every count. After the last sweep, `phi` and
//! `theta` are point estimates from that single final state.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::corpus::{Corpus, Vocabulary};
use crate::matrix::Matrix;
use crate::rng::{mix_seed, SeededRng};

/// Topic indices are stored as `u16`.
pub const MAX_TOPICS: usize = u16::MAX as usize;
pub const DEFAULT_BETA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LdaError {
    #[error("corpus has no tokens")]
    EmptyCorpus,
    #[error("vocabulary has {0} word(s); at least 2 are required")]
    DegenerateVocabulary(usize),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("topic {topic} out of range for a {topics}-topic model")]
    TopicOutOfRange { topic: usize, topics: usize },
    #[error("topic count {0} requested more than once")]
    DuplicateTopicCount(usize),
    #[error("model vocabulary does not match")]
    VocabularyMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub topics: usize,
    pub iterations: u32,
    /// Symmetric document-topic prior.
    pub alpha: f64,
    /// Symmetric topic-word prior.
    pub beta: f64,
    pub seed: u64,
}

impl TrainConfig {
    /// `alpha = 50 / K`, `beta = 0.01`.
    pub fn new(topics: usize, iterations: u32, seed: u64) -> Self {
        Self { topics, iterations, alpha: 50.0 / topics.max(1) as f64, beta: DEFAULT_BETA, seed }
    }

    pub fn validate(&self) -> Result<(), LdaError> {
        let bad = |m: &str| Err(LdaError::InvalidConfig(m.to_string()));
        if self.topics == 0 || self.topics > MAX_TOPICS {
            return bad("topic count must be in 1..=65535");
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive");
        }
        Ok(())
    }
}

/// Count-matrix state of a collapsed Gibbs chain.
#[derive(Debug, Clone)]
pub struct GibbsSampler<'c> {
    corpus: &'c Corpus,
    config: TrainConfig,
    rng: SeededRng,
    assignments: Vec<Vec<u16>>,
    /// documents x topics
    doc_topic: Vec<u32>,
    /// words x topics (word-major for locality in the inner loop)
    word_topic: Vec<u32>,
    topic_totals: Vec<u32>,
    weights: Vec<f64>,
    sweeps: u32,
}

impl<'c> GibbsSampler<'c> {
    /// Validates inputs and draws the initial assignment.
    pub fn new(corpus: &'c Corpus, config: TrainConfig) -> Result<Self, LdaError> {
        config.validate()?;
        let vocab = corpus.vocabulary().len();
        if vocab < 2 {
            return Err(LdaError::DegenerateVocabulary(vocab));
        }
        if corpus.total_tokens() == 0 {
            return Err(LdaError::EmptyCorpus);
        }
        let k = config.topics;
        let mut rng = SeededRng::new(config.seed);
        let mut doc_topic = vec![0u32; corpus.num_documents() * k];
        let mut word_topic = vec![0u32; vocab * k];
        let mut topic_totals = vec![0u32; k];
        let mut assignments = Vec::with_capacity(corpus.num_documents());
        for (d, doc) in corpus.documents().iter().enumerate() {
            let mut z = Vec::with_capacity(doc.tokens.len());
            for &w in &doc.tokens {
                let t = rng.below(k);
                z.push(t as u16);
                doc_topic[d * k + t] += 1;
                word_topic[w as usize * k + t] += 1;
                topic_totals[t] += 1;
            }
            assignments.push(z);
        }
        Ok(Self {
            corpus,
            config,
            rng,
            assignments,
            doc_topic,
            word_topic,
            topic_totals,
            weights: vec![0.0; k],
            sweeps: 0,
        })
    }

    pub fn sweeps(&self) -> u32 {
        self.sweeps
    }

    pub fn assignments(&self) -> &[Vec<u16>] {
        &self.assignments
    }

    /// One pass over every token.
    pub fn sweep(&mut self) {
        let k = self.config.topics;
        let alpha = self.config.alpha;
        let beta = self.config.beta;
        let vbeta = self.corpus.vocabulary().len() as f64 * beta;
        for (d, doc) in self.corpus.documents().iter().enumerate() {
            let dt = &mut self.doc_topic[d * k..(d + 1) * k];
            let z = &mut self.assignments[d];
            for (i, &w) in doc.tokens.iter().enumerate() {
                let wt = &mut self.word_topic[w as usize * k..(w as usize + 1) * k];
                let old = z[i] as usize;
                dt[old] -= 1;
                wt[old] -= 1;
                self.topic_totals[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    total += (dt[t] as f64 + alpha) * (wt[t] as f64 + beta)
                        / (self.topic_totals[t] as f64 + vbeta);
                    self.weights[t] = total;
                }
                let u = self.rng.next_f64() * total;
                // first cumulative weight strictly above u; the last topic
                // absorbs rounding at the top end
                let new = self.weights[..k - 1].iter().position(|&c| u < c).unwrap_or(k - 1);

                z[i] = new as u16;
                dt[new] += 1;
                wt[new] += 1;
                self.topic_totals[new] += 1;
            }
        }
        self.sweeps += 1;
    }

    /// Recounts every matrix from the assignments and checks the marginal
    /// identities. Returns a description of the first violation.
    pub fn check_counts(&self) -> Result<(), String> {
        let k = self.config.topics;
        let v = self.corpus.vocabulary().len();
        let mut dt = vec![0u32; self.doc_topic.len()];
        let mut wt = vec![0u32; v * k];
        let mut tt = vec![0u32; k];
        for (d, doc) in self.corpus.documents().iter().enumerate() {
            let z = &self.assignments[d];
            if z.len() != doc.tokens.len() {
                return Err(alloc::format!("document {d}: {} assignments for {} tokens", z.len(), doc.tokens.len()));
            }
            for (&w, &t) in doc.tokens.iter().zip(z) {
                let t = t as usize;
                if t >= k {
                    return Err(alloc::format!("document {d}: topic {t} out of range"));
                }
                dt[d * k + t] += 1;
                wt[w as usize * k + t] += 1;
                tt[t] += 1;
            }
            let row: u64 = self.doc_topic[d * k..(d + 1) * k].iter().map(|&c| c as u64).sum();
            if row != doc.tokens.len() as u64 {
                return Err(alloc::format!("document {d}: topic counts sum to {row}, length {}", doc.tokens.len()));
            }
        }
        if dt != self.doc_topic {
            return Err("document-topic counts disagree with assignments".to_string());
        }
        if wt != self.word_topic {
            return Err("word-topic counts disagree with assignments".to_string());
        }
        if tt != self.topic_totals {
            return Err("topic totals disagree with assignments".to_string());
        }
        for t in 0..k {
            let by_word: u64 = (0..v).map(|w| self.word_topic[w * k + t] as u64).sum();
            let by_doc: u64 = (0..self.corpus.num_documents()).map(|d| self.doc_topic[d * k + t] as u64).sum();
            if by_word != by_doc || by_doc != self.topic_totals[t] as u64 {
                return Err(alloc::format!("topic {t}: word marginal {by_word}, document marginal {by_doc}"));
            }
        }
        Ok(())
    }

    /// Point estimates from the current state.
    pub fn to_model(&self) -> TopicModel {
        let k = self.config.topics;
        let v = self.corpus.vocabulary().len();
        let (alpha, beta) = (self.config.alpha, self.config.beta);
        let mut phi = Matrix::zeros(k, v);
        for t in 0..k {
            let denom = self.topic_totals[t] as f64 + v as f64 * beta;
            let row = phi.row_mut(t);
            for (w, p) in row.iter_mut().enumerate() {
                *p = (self.word_topic[w * k + t] as f64 + beta) / denom;
            }
        }
        let n_docs = self.corpus.num_documents();
        let mut theta = Matrix::zeros(n_docs, k);
        for (d, doc) in self.corpus.documents().iter().enumerate() {
            let denom = doc.tokens.len() as f64 + k as f64 * alpha;
            let row = theta.row_mut(d);
            for (t, p) in row.iter_mut().enumerate() {
                *p = (self.doc_topic[d * k + t] as f64 + alpha) / denom;
            }
        }
        TopicModel {
            config: self.config,
            vocabulary_fingerprint: self.corpus.vocabulary().fingerprint(),
            phi,
            theta,
            assignments: self.assignments.clone(),
        }
    }

    pub fn run(mut self) -> TopicModel {
        for _ in self.sweeps..self.config.iterations {
            self.sweep();
        }
        self.to_model()
    }
}

/// One trained model: `phi` is topics x words, `theta` documents x topics.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub config: TrainConfig,
    pub vocabulary_fingerprint: [u8; 32],
    pub phi: Matrix,
    pub theta: Matrix,
    pub assignments: Vec<Vec<u16>>,
}

impl TopicModel {
    pub fn topics(&self) -> usize {
        self.phi.rows()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.phi.cols()
    }

    pub fn num_documents(&self) -> usize {
        self.theta.rows()
    }

    pub fn check_topic(&self, topic: usize) -> Result<(), LdaError> {
        if topic >= self.topics() {
            return Err(LdaError::TopicOutOfRange { topic, topics: self.topics() });
        }
        Ok(())
    }

    /// Word ids of `topic` by descending probability, ties by id; at most `n`.
    pub fn top_word_ids(&self, topic: usize, n: usize) -> Result<Vec<(u32, f64)>, LdaError> {
        self.check_topic(topic)?;
        let row = self.phi.row(topic);
        let mut ids: Vec<u32> = (0..row.len() as u32).collect();
        let n = n.min(ids.len());
        let by_prob = |a: &u32, b: &u32| row[*b as usize].total_cmp(&row[*a as usize]).then(a.cmp(b));
        if n < ids.len() && n > 0 {
            ids.select_nth_unstable_by(n - 1, by_prob);
            ids.truncate(n);
        }
        ids.sort_by(by_prob);
        ids.truncate(n);
        Ok(ids.into_iter().map(|id| (id, row[id as usize])).collect())
    }

    pub fn top_words(&self, vocabulary: &Vocabulary, topic: usize, n: usize) -> Result<Vec<(String, f64)>, LdaError> {
        if vocabulary.fingerprint() != self.vocabulary_fingerprint {
            return Err(LdaError::VocabularyMismatch);
        }
        Ok(self
            .top_word_ids(topic, n)?
            .into_iter()
            .map(|(id, p)| (vocabulary.word(id).to_string(), p))
            .collect())
    }
}

/// Trains one model to completion.
pub fn train(corpus: &Corpus, config: TrainConfig) -> Result<TopicModel, LdaError> {
    Ok(GibbsSampler::new(corpus, config)?.run())
}

/// Per-K configurations for a suite; each K gets `mix_seed(seed, K)`.
pub fn suite_configs(topic_counts: &[usize], iterations: u32, seed: u64) -> Result<Vec<TrainConfig>, LdaError> {
    let mut seen = BTreeMap::new();
    let mut out = Vec::with_capacity(topic_counts.len());
    for &k in topic_counts {
        if seen.insert(k, ()).is_some() {
            return Err(LdaError::DuplicateTopicCount(k));
        }
        let c = TrainConfig::new(k, iterations, mix_seed(seed, k as u64));
        c.validate()?;
        out.push(c);
    }
    Ok(out)
}

pub fn train_suite(corpus: &Corpus, topic_counts: &[usize], iterations: u32, seed: u64) -> Result<ModelSuite, LdaError> {
    let mut suite = ModelSuite::new(corpus.vocabulary().fingerprint());
    for config in suite_configs(topic_counts, iterations, seed)? {
        suite.insert(train(corpus, config)?)?;
    }
    Ok(suite)
}

/// Models over one shared vocabulary, keyed by topic count.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSuite {
    vocabulary_fingerprint: [u8; 32],
    models: BTreeMap<usize, TopicModel>,
}

impl ModelSuite {
    pub fn new(vocabulary_fingerprint: [u8; 32]) -> Self {
        Self { vocabulary_fingerprint, models: BTreeMap::new() }
    }

    pub fn insert(&mut self, model: TopicModel) -> Result<(), LdaError> {
        if model.vocabulary_fingerprint != self.vocabulary_fingerprint {
            return Err(LdaError::VocabularyMismatch);
        }
        let k = model.topics();
        if self.models.contains_key(&k) {
            return Err(LdaError::DuplicateTopicCount(k));
        }
        self.models.insert(k, model);
        Ok(())
    }

    pub fn vocabulary_fingerprint(&self) -> &[u8; 32] {
        &self.vocabulary_fingerprint
    }

    pub fn get(&self, k: usize) -> Option<&TopicModel> {
        self.models.get(&k)
    }

    /// Topic counts, ascending.
    pub fn topic_counts(&self) -> Vec<usize> {
        self.models.keys().copied().collect()
    }

    pub fn models(&self) -> impl Iterator<Item = (usize, &TopicModel)> {
        self.models.iter().map(|(k, m)| (*k, m))
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_corpus;
    use crate::segment::TokenSequence;

    fn corpus(docs: &[&str]) -> Corpus {
        let seqs: Vec<TokenSequence> = docs
            .iter()
            .enumerate()
            .map(|(i, t)| TokenSequence {
                doc_id: alloc::format!("d{i}"),
                tokens: t.split_whitespace().map(String::from).collect(),
            })
            .collect();
        build_corpus(&seqs, 0).unwrap()
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = TrainConfig::new(20, 100, 1);
        assert_eq!(c.alpha, 2.5);
        assert_eq!(c.beta, 0.01);
        assert!(c.validate().is_ok());
        assert!(TrainConfig { topics: 0, ..c }.validate().is_err());
        assert!(TrainConfig { iterations: 0, ..c }.validate().is_err());
        assert!(TrainConfig { alpha: 0.0, ..c }.validate().is_err());
        assert!(TrainConfig { beta: -1.0, ..c }.validate().is_err());
        assert!(TrainConfig { topics: 70_000, ..c }.validate().is_err());
    }

    #[test]
    fn degenerate_inputs() {
        let one = corpus(&["a a a"]);
        assert_eq!(train(&one, TrainConfig::new(2, 1, 0)).unwrap_err(), LdaError::DegenerateVocabulary(1));
        let c = corpus(&["a b"]);
        let stopped = c.apply_stoplist(&["a", "b"].into_iter().collect());
        assert_eq!(train(&stopped, TrainConfig::new(2, 1, 0)).unwrap_err(), LdaError::DegenerateVocabulary(0));
    }

    #[test]
    fn single_topic_closed_form() {
        let c = corpus(&["a b a c", "b b d", "a"]);
        let cfg = TrainConfig { beta: 0.1, ..TrainConfig::new(1, 3, 9) };
        let m = train(&c, cfg).unwrap();
        for d in 0..m.num_documents() {
            assert_eq!(m.theta.row(d), &[1.0]);
        }
        let counts = c.word_counts();
        let n: u64 = counts.iter().sum();
        let v = counts.len() as f64;
        for (w, &nw) in counts.iter().enumerate() {
            let expect = (nw as f64 + 0.1) / (n as f64 + v * 0.1);
            assert!((m.phi[(0, w)] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn counts_stay_consistent() {
        let c = corpus(&["a b c a b", "c d e d", "e e a", "b c d e a b"]);
        let mut s = GibbsSampler::new(&c, TrainConfig::new(3, 10, 4)).unwrap();
        s.check_counts().unwrap();
        for _ in 0..10 {
            s.sweep();
            s.check_counts().unwrap();
        }
        assert_eq!(s.sweeps(), 10);
    }

    #[test]
    fn deterministic_given_seed() {
        let c = corpus(&["a b c a b", "c d e d", "e e a"]);
        let a = train(&c, TrainConfig::new(2, 20, 11)).unwrap();
        let b = train(&c, TrainConfig::new(2, 20, 11)).unwrap();
        assert_eq!(a, b);
        let other = train(&c, TrainConfig::new(2, 20, 12)).unwrap();
        assert_ne!(a.assignments, other.assignments);
    }

    #[test]
    fn top_words_ordering() {
        let c = corpus(&["a a a b b c", "a b"]);
        let m = train(&c, TrainConfig::new(1, 2, 0)).unwrap();
        let top = m.top_words(c.vocabulary(), 0, 15).unwrap();
        assert_eq!(top.len(), 3);
        assert_eq!(top.iter().map(|(w, _)| w.as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);
        assert!(top.windows(2).all(|w| w[0].1 >= w[1].1));
        assert_eq!(m.top_word_ids(0, 1).unwrap().len(), 1);
        assert_eq!(m.top_words(c.vocabulary(), 1, 5).unwrap_err(), LdaError::TopicOutOfRange { topic: 1, topics: 1 });
    }

    #[test]
    fn suite_rejects_duplicates_and_derives_seeds() {
        let c = corpus(&["a b c a b", "c d e d"]);
        assert_eq!(train_suite(&c, &[2, 2], 1, 0).unwrap_err(), LdaError::DuplicateTopicCount(2));
        let s = train_suite(&c, &[3, 2], 2, 5).unwrap();
        assert_eq!(s.topic_counts(), [2, 3]);
        assert_eq!(s.get(2).unwrap().config.seed, mix_seed(5, 2));
    }
}
