//! Synthetic corpora and independent oracles shared by integration tests.
#![allow(dead_code)]

pub mod segment_oracle;

use hypershelf_core::corpus::{Corpus, CorpusBuilder, Document, Provenance, Vocabulary};
use hypershelf_core::lda::{TopicModel, TrainConfig};
use hypershelf_core::rng::SeededRng;
use hypershelf_core::Matrix;

pub const PLANTED_TOPICS: usize = 4;
pub const PLANTED_VOCAB: usize = 40;
pub const PLANTED_DOCS: usize = 200;
pub const PLANTED_DOC_LEN: usize = 60;

/// Four topics with disjoint ten-word supports; document `d` is drawn
/// entirely from topic `d % 4`. Returns the corpus and each document's topic.
pub fn planted_corpus(seed: u64) -> (Corpus, Vec<usize>) {
    let support = PLANTED_VOCAB / PLANTED_TOPICS;
    let mut rng = SeededRng::new(seed);
    let mut builder = CorpusBuilder::new();
    let mut truth = Vec::new();
    // register every word once so vocabulary ids follow word index
    let all: Vec<String> = (0..PLANTED_VOCAB).map(word).collect();
    let mut docs: Vec<Vec<String>> = Vec::new();
    for d in 0..PLANTED_DOCS {
        let t = d % PLANTED_TOPICS;
        truth.push(t);
        let mut tokens: Vec<String> = if d < PLANTED_TOPICS {
            all[t * support..(t + 1) * support].to_vec()
        } else {
            Vec::new()
        };
        while tokens.len() < PLANTED_DOC_LEN {
            tokens.push(word(t * support + rng.below(support)));
        }
        docs.push(tokens);
    }
    let mut order: Vec<usize> = (0..PLANTED_DOCS).collect();
    order.sort_by_key(|&d| doc_name(d));
    // documents are added in id order; truth follows the same order
    let truth = order.iter().map(|&d| truth[d]).collect();
    for &d in &order {
        builder.add_document(&doc_name(d), &doc_name(d), docs[d].iter().map(String::as_str)).unwrap();
    }
    (builder.finish(0).unwrap(), truth)
}

pub fn word(i: usize) -> String {
    format!("w{i:02}")
}

pub fn doc_name(d: usize) -> String {
    format!("doc{d:03}")
}

/// The planted word distribution of `topic`, indexed by vocabulary id.
pub fn planted_phi(corpus: &Corpus, topic: usize) -> Vec<f64> {
    let support = PLANTED_VOCAB / PLANTED_TOPICS;
    let vocab = corpus.vocabulary();
    let mut p = vec![0.0; vocab.len()];
    for i in topic * support..(topic + 1) * support {
        p[vocab.id(&word(i)).unwrap() as usize] = 1.0 / support as f64;
    }
    p
}

fn kl_bits(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).filter(|(a, _)| **a > 0.0).map(|(a, b)| a * (a / b).ln()).sum::<f64>() / std::f64::consts::LN_2
}

/// Jensen-Shannon distance by direct evaluation.
pub fn oracle_js_distance(p: &[f64], q: &[f64]) -> f64 {
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| (a + b) / 2.0).collect();
    ((kl_bits(p, &m) + kl_bits(q, &m)) / 2.0).max(0.0).sqrt()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Best one-to-one matching of planted to trained topics (minimizing the
/// total distance). Returns `mapping[planted] = trained` and the distances.
pub fn best_matching(corpus: &Corpus, model: &TopicModel) -> (Vec<usize>, Vec<f64>) {
    let k = model.topics();
    let planted: Vec<Vec<f64>> = (0..k).map(|t| planted_phi(corpus, t)).collect();
    let cost: Vec<Vec<f64>> =
        planted.iter().map(|p| (0..k).map(|j| oracle_js_distance(p, model.phi.row(j))).collect()).collect();
    let best = permutations(k)
        .into_iter()
        .min_by(|a, b| {
            let ca: f64 = a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
            let cb: f64 = b.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
            ca.total_cmp(&cb)
        })
        .unwrap();
    let dists = best.iter().enumerate().map(|(i, &j)| cost[i][j]).collect();
    (best, dists)
}

/// Fraction of documents whose most probable trained topic is the match of
/// their planted topic.
pub fn argmax_accuracy(model: &TopicModel, truth: &[usize], mapping: &[usize]) -> f64 {
    let hits = truth
        .iter()
        .enumerate()
        .filter(|(d, t)| {
            let row = model.theta.row(*d);
            let arg = (0..row.len()).max_by(|&a, &b| row[a].total_cmp(&row[b]).then(b.cmp(&a))).unwrap();
            arg == mapping[**t]
        })
        .count();
    hits as f64 / truth.len() as f64
}

/// Three documents `c`, `a`, `b` over a hand-set 2-topic, 4-word model.
pub fn toy_model() -> (Corpus, TopicModel) {
    let vocab = Vocabulary::from_words(["w0", "w1", "w2", "w3"].map(String::from).to_vec()).unwrap();
    let docs = ["c", "a", "b"]
        .iter()
        .map(|id| Document { id: id.to_string(), label: id.to_string(), tokens: vec![0, 1, 2, 3] })
        .collect();
    let corpus = Corpus::from_parts(vocab, docs, Provenance::default()).unwrap();
    let model = TopicModel {
        config: TrainConfig::new(2, 1, 0),
        vocabulary_fingerprint: corpus.vocabulary().fingerprint(),
        phi: Matrix::from_rows(&[[0.7, 0.1, 0.1, 0.1], [0.1, 0.1, 0.4, 0.4]]),
        theta: Matrix::from_rows(&[[0.5, 0.5], [0.9, 0.1], [0.2, 0.8]]),
        assignments: vec![vec![0, 0, 1, 1]; 3],
    };
    (corpus, model)
}

pub struct PseudoCase {
    pub terms: Vec<String>,
    pub topic_similarity: [f64; 2],
    pub topic_mix: [f64; 2],
    pub ranking: Vec<(String, f64)>,
}

/// The hand-executed search table for [`toy_model`].
pub fn pseudo_cases() -> Vec<PseudoCase> {
    include_str!("../fixtures/pseudo_document.tsv")
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split('\t').collect();
            let num = |s: &str| s.parse::<f64>().unwrap();
            PseudoCase {
                terms: f[0].split(' ').map(String::from).collect(),
                topic_similarity: [num(f[1]), num(f[2])],
                topic_mix: [num(f[3]), num(f[4])],
                ranking: f[5]
                    .split(' ')
                    .map(|e| {
                        let (d, v) = e.split_once('=').unwrap();
                        (d.to_string(), num(v))
                    })
                    .collect(),
            }
        })
        .collect()
}

pub fn euclidean_distances(points: &[[f64; 2]]) -> Matrix {
    let n = points.len();
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            d[(i, j)] = ((points[i][0] - points[j][0]).powi(2) + (points[i][1] - points[j][1]).powi(2)).sqrt();
        }
    }
    d
}

/// Largest point displacement after optimal orthogonal (rotation or
/// reflection) alignment of the centered `coords` onto the centered `truth`.
pub fn procrustes_error(truth: &[[f64; 2]], coords: &Matrix) -> f64 {
    use nalgebra::DMatrix;
    let n = truth.len();
    let mut x = DMatrix::from_fn(n, 2, |i, j| truth[i][j]);
    let mut y = DMatrix::from_fn(n, 2, |i, j| coords[(i, j)]);
    for m in [&mut x, &mut y] {
        for j in 0..2 {
            let mean = m.column(j).mean();
            m.column_mut(j).add_scalar_mut(-mean);
        }
    }
    let svd = (y.transpose() * &x).svd(true, true);
    let r = svd.u.unwrap() * svd.v_t.unwrap();
    let aligned = &y * r;
    (0..n).map(|i| (aligned.row(i) - x.row(i)).norm()).fold(0.0, f64::max)
}

/// Classical MDS computed with a general-purpose eigensolver.
pub fn reference_mds(dist: &Matrix) -> (Vec<f64>, DMatrixAlias) {
    use nalgebra::DMatrix;
    let n = dist.rows();
    let d2 = DMatrix::from_fn(n, n, |i, j| dist[(i, j)] * dist[(i, j)]);
    let j = DMatrix::<f64>::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
    let b = -0.5 * &j * d2 * &j;
    let eig = b.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order[..2].iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut coords = DMatrix::zeros(n, 2);
    for (axis, &src) in order[..2].iter().enumerate() {
        let scale = values[axis].max(0.0).sqrt();
        let col = eig.eigenvectors.column(src);
        let pivot = (0..n).max_by(|&a, &c| col[a].abs().total_cmp(&col[c].abs()).then(c.cmp(&a))).unwrap();
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            coords[(i, axis)] = sign * scale * col[i];
        }
    }
    (values, coords)
}

pub type DMatrixAlias = nalgebra::DMatrix<f64>;

/// Points for the geometry checks.
pub fn planted_cloud(seed: u64, n: usize) -> Vec<[f64; 2]> {
    let mut rng = SeededRng::new(seed);
    (0..n).map(|_| [rng.next_f64() * 10.0 - 5.0, rng.next_f64() * 4.0 - 2.0]).collect()
}
