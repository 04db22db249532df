//! Topic map: pooled topics from every model, pairwise JS distances between
//! their word distributions, an isomap embedding into the plane, k-means
//! clusters, marker sizes and per-term saturation.

use alloc::collections::BinaryHeap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use thiserror::Error;

use crate::corpus::Vocabulary;
use crate::eigen::symmetric_eigen;
use crate::lda::ModelSuite;
use crate::matrix::Matrix;
use crate::metrics::js_distance_unchecked;
use crate::rng::{mix_seed, SeededRng};

pub const DEFAULT_NEIGHBORS: usize = 12;
pub const DEFAULT_CLUSTERS: usize = 10;
pub const DEFAULT_RESTARTS: usize = 100;
/// Marker size of a K-topic model is `DEFAULT_MARKER_BASE / K`.
pub const DEFAULT_MARKER_BASE: f64 = 100.0;
const MAX_LLOYD_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopicMapError {
    #[error("models do not share one vocabulary")]
    VocabularyMismatch,
    #[error("model suite is empty")]
    EmptySuite,
    #[error("distance matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("distance matrix is not a valid symmetric non-negative matrix at ({0}, {1})")]
    InvalidDistance(usize, usize),
    #[error("n_neighbors must be at least 1")]
    InvalidNeighbors,
    #[error("cannot form {k} clusters from {points} points")]
    TooFewPoints { k: usize, points: usize },
    #[error("unknown term {0:?}")]
    UnknownTerm(String),
}

/// `k:topic`, the topic's index within the K-topic model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TopicRef {
    pub k: usize,
    pub topic: usize,
}

/// Every topic of every model, ordered by K then topic index.
pub fn pooled_topics(suite: &ModelSuite) -> Vec<(TopicRef, &[f64])> {
    suite
        .models()
        .flat_map(|(k, m)| (0..m.topics()).map(move |t| (TopicRef { k, topic: t }, m.phi.row(t))))
        .collect()
}

fn check_suite(suite: &ModelSuite) -> Result<(), TopicMapError> {
    let mut models = suite.models();
    let Some((_, first)) = models.next() else {
        return Err(TopicMapError::EmptySuite);
    };
    let v = first.vocabulary_size();
    for (_, m) in models {
        if m.vocabulary_size() != v || m.vocabulary_fingerprint != *suite.vocabulary_fingerprint() {
            return Err(TopicMapError::VocabularyMismatch);
        }
    }
    Ok(())
}

/// JS distances from row `i` to every row `j > i`.
pub fn distance_upper_row(rows: &[&[f64]], i: usize) -> Vec<f64> {
    rows[i + 1..].iter().map(|r| js_distance_unchecked(rows[i], r)).collect()
}

/// Mirrors the per-row upper triangles from [`distance_upper_row`] into a
/// full symmetric matrix with a zero diagonal.
pub fn symmetric_from_upper(uppers: &[Vec<f64>]) -> Matrix {
    let n = uppers.len();
    let mut m = Matrix::zeros(n, n);
    for (i, upper) in uppers.iter().enumerate() {
        debug_assert_eq!(upper.len(), n - i - 1);
        for (off, &d) in upper.iter().enumerate() {
            let j = i + 1 + off;
            m[(i, j)] = d;
            m[(j, i)] = d;
        }
    }
    m
}

/// Pairwise JS distances between all pooled topics.
pub fn topic_distance_matrix(suite: &ModelSuite) -> Result<(Vec<TopicRef>, Matrix), TopicMapError> {
    check_suite(suite)?;
    let pooled = pooled_topics(suite);
    let rows: Vec<&[f64]> = pooled.iter().map(|(_, r)| *r).collect();
    let uppers: Vec<Vec<f64>> = (0..rows.len()).map(|i| distance_upper_row(&rows, i)).collect();
    Ok((pooled.into_iter().map(|(r, _)| r).collect(), symmetric_from_upper(&uppers)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// One row per point.
    pub coords: Matrix,
    /// The eigenvalues behind each axis, descending.
    pub eigenvalues: Vec<f64>,
    /// Fewer positive eigenvalues than requested axes; missing axes are zero.
    pub degenerate: bool,
    /// Edges added to join disconnected neighbourhood-graph components.
    pub bridges: usize,
}

fn validate_distances(dist: &Matrix) -> Result<(), TopicMapError> {
    let n = dist.rows();
    if dist.cols() != n {
        return Err(TopicMapError::NotSquare { rows: n, cols: dist.cols() });
    }
    for i in 0..n {
        for j in 0..n {
            let d = dist[(i, j)];
            if !d.is_finite() || d < 0.0 || d != dist[(j, i)] || (i == j && d != 0.0) {
                return Err(TopicMapError::InvalidDistance(i, j));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry(f64, usize);

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Shortest-path distances over the symmetric k-nearest-neighbour graph.
/// Disconnected components are joined by repeatedly adding the globally
/// shortest edge between two different components. Returns the geodesic
/// matrix and the number of bridging edges added.
pub fn geodesic_distances(dist: &Matrix, n_neighbors: usize) -> Result<(Matrix, usize), TopicMapError> {
    validate_distances(dist)?;
    if n_neighbors == 0 {
        return Err(TopicMapError::InvalidNeighbors);
    }
    let n = dist.rows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut parent: Vec<usize> = (0..n).collect();
    let add_edge = |adj: &mut Vec<Vec<usize>>, parent: &mut Vec<usize>, i: usize, j: usize| {
        if !adj[i].contains(&j) {
            adj[i].push(j);
            adj[j].push(i);
        }
        let (a, b) = (find(parent, i), find(parent, j));
        if a != b {
            parent[a] = b;
        }
    };
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| dist[(i, a)].total_cmp(&dist[(i, b)]).then(a.cmp(&b)));
        for &j in others.iter().take(n_neighbors) {
            add_edge(&mut adj, &mut parent, i, j);
        }
    }
    let mut bridges = 0;
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            for j in i + 1..n {
                if find(&mut parent, i) != find(&mut parent, j) && best.is_none_or(|b| dist[(i, j)] < b.0) {
                    best = Some((dist[(i, j)], i, j));
                }
            }
        }
        match best {
            Some((_, i, j)) => {
                add_edge(&mut adj, &mut parent, i, j);
                bridges += 1;
            }
            None => break,
        }
    }

    let mut geo = Matrix::zeros(n, n);
    let mut best = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for src in 0..n {
        best.fill(f64::INFINITY);
        best[src] = 0.0;
        heap.push(HeapEntry(0.0, src));
        while let Some(HeapEntry(d, u)) = heap.pop() {
            if d > best[u] {
                continue;
            }
            for &v in &adj[u] {
                let nd = d + dist[(u, v)];
                if nd < best[v] {
                    best[v] = nd;
                    heap.push(HeapEntry(nd, v));
                }
            }
        }
        geo.row_mut(src).copy_from_slice(&best);
    }
    // symmetrize away rounding differences between the two directions
    for i in 0..n {
        for j in i + 1..n {
            let d = geo[(i, j)].min(geo[(j, i)]);
            geo[(i, j)] = d;
            geo[(j, i)] = d;
        }
    }
    Ok((geo, bridges))
}

/// Classical multidimensional scaling of a distance matrix.
///
/// Double-centres the squared distances, `B = -1/2 J D^2 J`, and returns
/// the top `dims` eigenvectors scaled by the square roots of their
/// eigenvalues. Each axis is oriented so that its largest-magnitude
/// coordinate is positive.
pub fn classical_mds(dist: &Matrix, dims: usize) -> Result<Embedding, TopicMapError> {
    let n = dist.rows();
    if dist.cols() != n {
        return Err(TopicMapError::NotSquare { rows: n, cols: dist.cols() });
    }
    let mut sq = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            sq[(i, j)] = dist[(i, j)] * dist[(i, j)];
        }
    }
    let row_means: Vec<f64> = sq.iter_rows().map(|r| r.iter().sum::<f64>() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let mut b = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            // row mean of column j equals row_means[j] by symmetry
            b[(i, j)] = -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand);
        }
    }
    let eig = symmetric_eigen(&b);
    let scale = eig.values.first().map_or(0.0, |v| v.abs()).max(1.0);
    let tol = 1e-12 * scale;
    let mut coords = Matrix::zeros(n, dims);
    let mut eigenvalues = Vec::with_capacity(dims);
    let mut degenerate = false;
    for axis in 0..dims {
        let lambda = eig.values.get(axis).copied().unwrap_or(0.0);
        eigenvalues.push(lambda);
        if lambda <= tol {
            degenerate = true;
            continue;
        }
        let root = libm::sqrt(lambda);
        for i in 0..n {
            coords[(i, axis)] = eig.vectors[(i, axis)] * root;
        }
        let mut pivot = 0;
        for i in 1..n {
            if coords[(i, axis)].abs() > coords[(pivot, axis)].abs() {
                pivot = i;
            }
        }
        if coords[(pivot, axis)] < 0.0 {
            for i in 0..n {
                coords[(i, axis)] = -coords[(i, axis)];
            }
        }
    }
    Ok(Embedding { coords, eigenvalues, degenerate, bridges: 0 })
}

/// Isomap: neighbourhood graph, geodesic distances, classical MDS.
pub fn isomap_embed(dist: &Matrix, n_neighbors: usize, dims: usize) -> Result<Embedding, TopicMapError> {
    let (geo, bridges) = geodesic_distances(dist, n_neighbors)?;
    let mut e = classical_mds(&geo, dims)?;
    e.bridges = bridges;
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Cluster of each point, numbered in order of first appearance.
    pub labels: Vec<usize>,
    pub centroids: Matrix,
    pub inertia: f64,
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kmeans_once(points: &Matrix, k: usize, rng: &mut SeededRng) -> Clustering {
    let n = points.rows();
    let dims = points.cols();
    // k-means++ seeding
    let mut centroids = Matrix::zeros(k, dims);
    let first = rng.below(n);
    centroids.row_mut(0).copy_from_slice(points.row(first));
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), centroids.row(0))).collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let u = rng.next_f64() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                acc += d;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.below(n)
        };
        centroids.row_mut(c).copy_from_slice(points.row(pick));
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), centroids.row(c)));
        }
    }

    let mut labels = vec![usize::MAX; n];
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let mut changed = false;
        for (i, label) in labels.iter_mut().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let d = sq_dist(points.row(i), centroids.row(c));
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if *label != best {
                *label = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = Matrix::zeros(k, dims);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for (s, x) in sums.row_mut(labels[i]).iter_mut().zip(points.row(i)) {
                *s += x;
            }
        }
        for (c, &count) in counts.iter().enumerate() {
            if count == 0 {
                // reseed an empty cluster at the point worst served by its centroid
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = sq_dist(points.row(a), centroids.row(labels[a]));
                        let db = sq_dist(points.row(b), centroids.row(labels[b]));
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .unwrap_or(0);
                centroids.row_mut(c).copy_from_slice(points.row(far));
            } else {
                let inv = 1.0 / count as f64;
                for (dst, s) in centroids.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s * inv;
                }
            }
        }
    }
    let inertia = (0..n).map(|i| sq_dist(points.row(i), centroids.row(labels[i]))).sum();
    Clustering { labels, centroids, inertia }
}

fn canonicalize(c: Clustering) -> Clustering {
    let k = c.centroids.rows();
    let mut map = vec![usize::MAX; k];
    let mut next = 0;
    for &l in &c.labels {
        if map[l] == usize::MAX {
            map[l] = next;
            next += 1;
        }
    }
    for m in map.iter_mut().filter(|m| **m == usize::MAX) {
        *m = next;
        next += 1;
    }
    let mut centroids = Matrix::zeros(k, c.centroids.cols());
    for (old, &new) in map.iter().enumerate() {
        centroids.row_mut(new).copy_from_slice(c.centroids.row(old));
    }
    Clustering { labels: c.labels.iter().map(|&l| map[l]).collect(), centroids, inertia: c.inertia }
}

/// Seeded k-means++ with `restarts` independent runs; the lowest inertia wins
/// (earliest run on ties).
pub fn kmeans(points: &Matrix, k: usize, seed: u64, restarts: usize) -> Result<Clustering, TopicMapError> {
    let n = points.rows();
    if k == 0 || k > n {
        return Err(TopicMapError::TooFewPoints { k, points: n });
    }
    let mut best: Option<Clustering> = None;
    for r in 0..restarts.max(1) {
        let mut rng = SeededRng::new(mix_seed(seed, r as u64));
        let c = kmeans_once(points, k, &mut rng);
        if best.as_ref().is_none_or(|b| c.inertia < b.inertia) {
            best = Some(c);
        }
    }
    Ok(canonicalize(best.expect("at least one restart")))
}

/// k-means on embedded coordinates with the default restart count.
pub fn cluster_topics(coords: &Matrix, k: usize, seed: u64) -> Result<Vec<usize>, TopicMapError> {
    Ok(kmeans(coords, k, seed, DEFAULT_RESTARTS)?.labels)
}

/// Probability of `term` under every pooled topic, divided by the largest.
pub fn term_saturation(
    suite: &ModelSuite,
    vocabulary: &Vocabulary,
    term: &str,
) -> Result<Vec<(TopicRef, f64)>, TopicMapError> {
    check_suite(suite)?;
    if vocabulary.fingerprint() != *suite.vocabulary_fingerprint() {
        return Err(TopicMapError::VocabularyMismatch);
    }
    let id = vocabulary.id(term).ok_or_else(|| TopicMapError::UnknownTerm(term.to_string()))? as usize;
    let raw: Vec<(TopicRef, f64)> = pooled_topics(suite).into_iter().map(|(r, phi)| (r, phi[id])).collect();
    let max = raw.iter().map(|(_, p)| *p).fold(0.0, f64::max);
    Ok(raw.into_iter().map(|(r, p)| (r, if max > 0.0 { p / max } else { 0.0 })).collect())
}

/// `base / K` for each model, ascending K.
pub fn marker_sizes(suite: &ModelSuite, base: f64) -> Vec<(usize, f64)> {
    suite.topic_counts().into_iter().map(|k| (k, base / k as f64)).collect()
}

/// Which space the topics are clustered in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClusterSpace {
    /// The 2-D isomap coordinates.
    #[default]
    Embedding,
    /// The full topic-word distributions.
    Distribution,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayoutOptions {
    pub n_neighbors: usize,
    pub clusters: usize,
    pub restarts: usize,
    pub seed: u64,
    pub space: ClusterSpace,
    pub marker_base: f64,
}

impl Default for LayoutOptions {
    fn default() -> Self {
        Self {
            n_neighbors: DEFAULT_NEIGHBORS,
            clusters: DEFAULT_CLUSTERS,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
            space: ClusterSpace::Embedding,
            marker_base: DEFAULT_MARKER_BASE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicPoint {
    pub topic: TopicRef,
    pub x: f64,
    pub y: f64,
    pub marker_size: f64,
    pub cluster: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicMapLayout {
    pub points: Vec<TopicPoint>,
    pub options: LayoutOptions,
    /// Cluster count actually used; capped at the number of topics.
    pub clusters: usize,
    pub eigenvalues: Vec<f64>,
    pub degenerate: bool,
    pub bridges: usize,
}

/// Lays out a suite from a precomputed pooled distance matrix (see
/// [`topic_distance_matrix`]).
pub fn layout_from_distances(
    suite: &ModelSuite,
    refs: &[TopicRef],
    dist: &Matrix,
    options: LayoutOptions,
) -> Result<TopicMapLayout, TopicMapError> {
    check_suite(suite)?;
    if refs.len() != dist.rows() {
        return Err(TopicMapError::NotSquare { rows: refs.len(), cols: dist.rows() });
    }
    let embedding = isomap_embed(dist, options.n_neighbors, 2)?;
    let clusters = options.clusters.min(refs.len()).max(1);
    let labels = match options.space {
        ClusterSpace::Embedding => kmeans(&embedding.coords, clusters, options.seed, options.restarts)?.labels,
        ClusterSpace::Distribution => {
            let rows: Vec<&[f64]> = pooled_topics(suite).into_iter().map(|(_, r)| r).collect();
            kmeans(&Matrix::from_rows(&rows), clusters, options.seed, options.restarts)?.labels
        }
    };
    let sizes = marker_sizes(suite, options.marker_base);
    let size_of = |k: usize| sizes.iter().find(|(kk, _)| *kk == k).map_or(0.0, |(_, s)| *s);
    let points = refs
        .iter()
        .enumerate()
        .map(|(i, &r)| TopicPoint {
            topic: r,
            x: embedding.coords[(i, 0)],
            y: embedding.coords[(i, 1)],
            marker_size: size_of(r.k),
            cluster: labels[i],
        })
        .collect();
    Ok(TopicMapLayout {
        points,
        options,
        clusters,
        eigenvalues: embedding.eigenvalues,
        degenerate: embedding.degenerate,
        bridges: embedding.bridges,
    })
}

pub fn build_layout(suite: &ModelSuite, options: LayoutOptions) -> Result<TopicMapLayout, TopicMapError> {
    let (refs, dist) = topic_distance_matrix(suite)?;
    layout_from_distances(suite, &refs, &dist, options)
}
