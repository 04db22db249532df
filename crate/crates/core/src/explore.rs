//! Read-only queries behind the document browser: similarity ranking,
//! topic re-sorting, top documents per topic, term search through a
//! pseudo-document, and label autocompletion.
//!
//! Every ranking is total: ties are broken by document id ascending.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use thiserror::Error;

use crate::corpus::Corpus;
use crate::lda::TopicModel;
use crate::metrics::similarity_unchecked;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExploreError {
    #[error("unknown document {0:?}")]
    UnknownDocument(String),
    #[error("topic {topic} out of range for a {topics}-topic model")]
    IndexOutOfRange { topic: usize, topics: usize },
    #[error("none of the query terms are in the vocabulary")]
    NoKnownTerms,
    #[error("model was trained on a different corpus")]
    CorpusMismatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedDocument {
    /// Position of the document in the corpus.
    pub index: usize,
    pub doc_id: String,
    /// `1 - JSD` for similarity rankings; the document's proportion of the
    /// topic for per-topic rankings.
    pub similarity: f64,
    pub topic_mix: Vec<f64>,
}

fn check_pair(corpus: &Corpus, model: &TopicModel) -> Result<(), ExploreError> {
    if model.num_documents() != corpus.num_documents() || model.vocabulary_size() != corpus.vocabulary().len() {
        return Err(ExploreError::CorpusMismatch);
    }
    Ok(())
}

fn check_topic(topic: usize, topics: usize) -> Result<(), ExploreError> {
    if topic >= topics {
        return Err(ExploreError::IndexOutOfRange { topic, topics });
    }
    Ok(())
}

fn ranked(corpus: &Corpus, model: &TopicModel, index: usize, score: f64) -> RankedDocument {
    RankedDocument {
        index,
        doc_id: corpus.documents()[index].id.clone(),
        similarity: score,
        topic_mix: model.theta.row(index).to_vec(),
    }
}

fn by_score_then_id(corpus: &Corpus) -> impl Fn(&(usize, f64), &(usize, f64)) -> Ordering + '_ {
    move |a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| corpus.documents()[a.0].id.cmp(&corpus.documents()[b.0].id))
    }
}

fn top_n<F>(scored: &mut Vec<(usize, f64)>, limit: usize, cmp: F)
where
    F: Fn(&(usize, f64), &(usize, f64)) -> Ordering,
{
    if limit < scored.len() && limit > 0 {
        scored.select_nth_unstable_by(limit - 1, &cmp);
    }
    scored.truncate(limit);
    scored.sort_by(cmp);
}

/// Documents ranked by similarity of their topic mix to the focal
/// document's. The focal document is always first, with similarity 1.
pub fn similar_documents(
    corpus: &Corpus,
    model: &TopicModel,
    focal: &str,
    limit: usize,
) -> Result<Vec<RankedDocument>, ExploreError> {
    check_pair(corpus, model)?;
    let f = corpus.document_position(focal).ok_or_else(|| ExploreError::UnknownDocument(focal.to_string()))?;
    let focal_mix = model.theta.row(f);
    let mut scored: Vec<(usize, f64)> = (0..corpus.num_documents())
        .filter(|&d| d != f)
        .map(|d| (d, similarity_unchecked(focal_mix, model.theta.row(d))))
        .collect();
    if limit == 0 {
        return Ok(Vec::new());
    }
    top_n(&mut scored, limit - 1, by_score_then_id(corpus));
    let mut out = Vec::with_capacity(scored.len() + 1);
    out.push(ranked(corpus, model, f, 1.0));
    out.extend(scored.into_iter().map(|(d, s)| ranked(corpus, model, d, s)));
    Ok(out)
}

/// Reorders `candidates` by their proportion of `topic`, descending.
pub fn sort_by_topic(mut candidates: Vec<RankedDocument>, topic: usize) -> Result<Vec<RankedDocument>, ExploreError> {
    for c in &candidates {
        check_topic(topic, c.topic_mix.len())?;
    }
    candidates.sort_by(|a, b| b.topic_mix[topic].total_cmp(&a.topic_mix[topic]).then_with(|| a.doc_id.cmp(&b.doc_id)));
    Ok(candidates)
}

/// All documents ranked by their proportion of `topic`, at most `limit`.
pub fn top_documents_for_topic(
    corpus: &Corpus,
    model: &TopicModel,
    topic: usize,
    limit: usize,
) -> Result<Vec<RankedDocument>, ExploreError> {
    check_pair(corpus, model)?;
    check_topic(topic, model.topics())?;
    let mut scored: Vec<(usize, f64)> =
        (0..corpus.num_documents()).map(|d| (d, model.theta[(d, topic)])).collect();
    top_n(&mut scored, limit, by_score_then_id(corpus));
    Ok(scored.into_iter().map(|(d, s)| ranked(corpus, model, d, s)).collect())
}

/// Topic-space query built from a list of terms.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoDocument {
    /// Distinct in-vocabulary terms, in query order.
    pub terms: Vec<String>,
    /// Query terms not in the vocabulary.
    pub dropped: Vec<String>,
    /// Similarity of the word-space query to each topic's word distribution.
    pub topic_similarity: Vec<f64>,
    /// `topic_similarity` normalized to sum to one.
    pub topic_mix: Vec<f64>,
}

/// Spreads probability uniformly over the distinct known terms, scores every
/// topic by `1 - JSD` against that word distribution, and normalizes the
/// scores into a topic mixture.
pub fn pseudo_document(corpus: &Corpus, model: &TopicModel, terms: &[&str]) -> Result<PseudoDocument, ExploreError> {
    check_pair(corpus, model)?;
    let vocab = corpus.vocabulary();
    let mut ids: Vec<u32> = Vec::new();
    let mut known = Vec::new();
    let mut dropped = Vec::new();
    for &t in terms {
        match vocab.id(t) {
            Some(id) if !ids.contains(&id) => {
                ids.push(id);
                known.push(t.to_string());
            }
            Some(_) => {}
            None if !dropped.iter().any(|d: &String| d == t) => dropped.push(t.to_string()),
            None => {}
        }
    }
    if ids.is_empty() {
        return Err(ExploreError::NoKnownTerms);
    }
    let mut query = vec![0.0; vocab.len()];
    let mass = 1.0 / ids.len() as f64;
    for &id in &ids {
        query[id as usize] = mass;
    }
    let topic_similarity: Vec<f64> = model.phi.iter_rows().map(|phi_k| similarity_unchecked(&query, phi_k)).collect();
    let total: f64 = topic_similarity.iter().sum();
    let topic_mix = if total > 0.0 {
        topic_similarity.iter().map(|s| s / total).collect()
    } else {
        vec![1.0 / model.topics() as f64; model.topics()]
    };
    Ok(PseudoDocument { terms: known, dropped, topic_similarity, topic_mix })
}

/// Documents ranked by similarity to the pseudo-document of `terms`.
pub fn term_search(
    corpus: &Corpus,
    model: &TopicModel,
    terms: &[&str],
    limit: usize,
) -> Result<(PseudoDocument, Vec<RankedDocument>), ExploreError> {
    let pseudo = pseudo_document(corpus, model, terms)?;
    let mut scored: Vec<(usize, f64)> = (0..corpus.num_documents())
        .map(|d| (d, similarity_unchecked(&pseudo.topic_mix, model.theta.row(d))))
        .collect();
    top_n(&mut scored, limit, by_score_then_id(corpus));
    let docs = scored.into_iter().map(|(d, s)| ranked(corpus, model, d, s)).collect();
    Ok((pseudo, docs))
}

/// Case-sensitive substring match over labels, sorted, at most `limit`.
/// An empty query matches every label.
pub fn autocomplete<'a, I>(labels: I, query: &str, limit: usize) -> Vec<&'a str>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut hits: Vec<&str> = labels.into_iter().filter(|l| l.contains(query)).collect();
    hits.sort_unstable();
    hits.dedup();
    hits.truncate(limit);
    hits
}
