//! Topic-map computation with a parallel distance matrix, and its JSON
//! cache file (one record per topic).

use std::fs;
use std::path::Path;

use hypershelf_core::corpus::Vocabulary;
use hypershelf_core::lda::ModelSuite;
use hypershelf_core::topicmap::{
    distance_upper_row, layout_from_distances, marker_sizes, pooled_topics, symmetric_from_upper, ClusterSpace,
    LayoutOptions, TopicMapError, TopicMapLayout,
};
use hypershelf_core::Matrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::formats::{write_atomic, FormatError};

pub const LAYOUT_VERSION: u32 = 1;
pub const LAYOUT_WORDS: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutPoint {
    pub k: usize,
    pub topic: usize,
    pub x: f64,
    pub y: f64,
    pub size: f64,
    pub cluster: usize,
    pub words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerSize {
    pub k: usize,
    pub size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutFile {
    pub v: u32,
    /// Hex SHA-256 of the vocabulary the layout was computed for.
    pub vocabulary: String,
    pub ks: Vec<usize>,
    pub n_neighbors: usize,
    pub clusters: usize,
    pub restarts: usize,
    pub seed: u64,
    /// `embedding` or `distribution`.
    pub space: String,
    pub marker_base: f64,
    pub eigenvalues: Vec<f64>,
    pub degenerate: bool,
    pub bridges: usize,
    pub sizes: Vec<MarkerSize>,
    pub points: Vec<LayoutPoint>,
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn space_name(space: ClusterSpace) -> &'static str {
    match space {
        ClusterSpace::Embedding => "embedding",
        ClusterSpace::Distribution => "distribution",
    }
}

pub fn parse_space(s: &str) -> Option<ClusterSpace> {
    match s {
        "embedding" => Some(ClusterSpace::Embedding),
        "distribution" => Some(ClusterSpace::Distribution),
        _ => None,
    }
}

/// Pooled topic distances, rows computed in parallel.
pub fn parallel_distance_matrix(suite: &ModelSuite) -> (Vec<hypershelf_core::topicmap::TopicRef>, Matrix) {
    let pooled = pooled_topics(suite);
    let rows: Vec<&[f64]> = pooled.iter().map(|(_, r)| *r).collect();
    let uppers: Vec<Vec<f64>> = (0..rows.len()).into_par_iter().map(|i| distance_upper_row(&rows, i)).collect();
    (pooled.iter().map(|(r, _)| *r).collect(), symmetric_from_upper(&uppers))
}

pub fn compute_layout(suite: &ModelSuite, options: LayoutOptions) -> Result<TopicMapLayout, TopicMapError> {
    let (refs, dist) = parallel_distance_matrix(suite);
    layout_from_distances(suite, &refs, &dist, options)
}

pub fn to_file(layout: &TopicMapLayout, suite: &ModelSuite, vocab: &Vocabulary) -> LayoutFile {
    let o = &layout.options;
    let points = layout
        .points
        .iter()
        .map(|p| {
            let model = suite.get(p.topic.k).expect("layout topics come from the suite");
            let words = model
                .top_words(vocab, p.topic.topic, LAYOUT_WORDS)
                .expect("layout topics are in range")
                .into_iter()
                .map(|(w, _)| w)
                .collect();
            LayoutPoint { k: p.topic.k, topic: p.topic.topic, x: p.x, y: p.y, size: p.marker_size, cluster: p.cluster, words }
        })
        .collect();
    LayoutFile {
        v: LAYOUT_VERSION,
        vocabulary: hex(suite.vocabulary_fingerprint()),
        ks: suite.topic_counts(),
        n_neighbors: o.n_neighbors,
        clusters: layout.clusters,
        restarts: o.restarts,
        seed: o.seed,
        space: space_name(o.space).to_string(),
        marker_base: o.marker_base,
        eigenvalues: layout.eigenvalues.clone(),
        degenerate: layout.degenerate,
        bridges: layout.bridges,
        sizes: marker_sizes(suite, o.marker_base).into_iter().map(|(k, size)| MarkerSize { k, size }).collect(),
        points,
    }
}

impl LayoutFile {
    /// Whether this cached layout was computed for `suite` with `options`.
    pub fn matches(&self, suite: &ModelSuite, options: &LayoutOptions) -> bool {
        self.v == LAYOUT_VERSION
            && self.vocabulary == hex(suite.vocabulary_fingerprint())
            && self.ks == suite.topic_counts()
            && self.n_neighbors == options.n_neighbors
            && self.restarts == options.restarts
            && self.seed == options.seed
            && self.space == space_name(options.space)
            && self.marker_base == options.marker_base
            && self.clusters == options.clusters.min(self.points.len()).max(1)
    }
}

pub fn save_layout(file: &LayoutFile, path: &Path) -> Result<(), FormatError> {
    let mut bytes = serde_json::to_vec_pretty(file).expect("layout serializes");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn load_layout(path: &Path) -> Option<LayoutFile> {
    serde_json::from_slice(&fs::read(path).ok()?).ok()
}

/// The cached layout when it matches, otherwise a freshly computed one
/// (written back to `path`).
pub fn cached_layout(
    path: &Path,
    suite: &ModelSuite,
    vocab: &Vocabulary,
    options: LayoutOptions,
) -> Result<LayoutFile, TopicMapError> {
    if let Some(f) = load_layout(path).filter(|f| f.matches(suite, &options)) {
        return Ok(f);
    }
    let file = to_file(&compute_layout(suite, options)?, suite, vocab);
    if let Err(e) = save_layout(&file, path) {
        log::warn!("could not cache layout: {e}");
    }
    Ok(file)
}
