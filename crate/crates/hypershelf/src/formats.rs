//! On-disk formats: the vocabulary file, the corpus container and the model
//! file. All integers are little-endian; strings are a `u32` byte length
//! followed by UTF-8 bytes.
//!
//! Corpus container, version 1:
//!
//! ```text
//! "HSCORPUS"  u32 version  [u8; 32] vocabulary SHA-256  u32 V
//! u32 P, then P x (string key, string value)        provenance
//! u32 D, then D x (string id, string label, u32 n, n x u32 token id)
//! ```
//!
//! Model file, version 1:
//!
//! ```text
//! "HSMODEL\0"  u32 version  [u8; 32] vocabulary SHA-256
//! u32 K  u32 V  u32 D  u32 iterations  f64 alpha  f64 beta  u64 seed
//! string rng algorithm
//! K x V f64 phi (row-major)  D x K f64 theta
//! D x (u32 n, n x u16 topic)
//! ```
//!
//! The vocabulary file is one word per line, line number = word id; its
//! SHA-256 is the vocabulary fingerprint stored in the other two formats.

use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use hypershelf_core::corpus::{Corpus, CorpusError, Document, Provenance, Vocabulary};
use hypershelf_core::lda::{TopicModel, TrainConfig};
use hypershelf_core::rng;
use hypershelf_core::Matrix;
use thiserror::Error;

pub const CORPUS_MAGIC: &[u8; 8] = b"HSCORPUS";
pub const MODEL_MAGIC: &[u8; 8] = b"HSMODEL\0";
pub const CORPUS_VERSION: u32 = 1;
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("not a {0} file")]
    BadMagic(&'static str),
    #[error("unsupported {kind} version {version}")]
    UnsupportedVersion { kind: &'static str, version: u32 },
    #[error("corrupt file: {0}")]
    Corrupt(String),
    #[error("vocabulary hash mismatch: file was written for a different vocabulary")]
    VocabularyMismatch,
    #[error("invalid word {0:?} (words may not contain line breaks)")]
    InvalidWord(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

impl From<io::Error> for FormatError {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            FormatError::Corrupt("unexpected end of data".into())
        } else {
            FormatError::Io { path: PathBuf::new(), source: e }
        }
    }
}

fn at(path: &Path) -> impl FnOnce(io::Error) -> FormatError + '_ {
    move |source| FormatError::Io { path: path.to_path_buf(), source }
}

/// Writes via a temporary sibling and a rename so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(at(&tmp))?;
    fs::rename(&tmp, path).map_err(at(path))
}

pub fn encode_vocabulary(vocab: &Vocabulary) -> Result<Vec<u8>, FormatError> {
    let mut out = Vec::new();
    for w in vocab.words() {
        if w.contains(['\n', '\r']) {
            return Err(FormatError::InvalidWord(w.clone()));
        }
        out.extend_from_slice(w.as_bytes());
        out.push(b'\n');
    }
    Ok(out)
}

pub fn decode_vocabulary(bytes: &[u8]) -> Result<Vocabulary, FormatError> {
    let text = std::str::from_utf8(bytes).map_err(|e| FormatError::Corrupt(format!("vocabulary is not UTF-8: {e}")))?;
    let words = text.lines().map(str::to_string).collect();
    Ok(Vocabulary::from_words(words)?)
}

fn write_str(out: &mut Vec<u8>, s: &str) {
    out.write_u32::<LE>(s.len() as u32).unwrap();
    out.extend_from_slice(s.as_bytes());
}

fn read_str(r: &mut &[u8]) -> Result<String, FormatError> {
    let n = r.read_u32::<LE>()? as usize;
    if n > r.len() {
        return Err(FormatError::Corrupt("string runs past end of data".into()));
    }
    let (head, tail) = r.split_at(n);
    *r = tail;
    String::from_utf8(head.to_vec()).map_err(|_| FormatError::Corrupt("string is not UTF-8".into()))
}

/// Guards allocations driven by length fields.
fn check_len(r: &[u8], count: usize, width: usize) -> Result<(), FormatError> {
    if count.checked_mul(width).is_none_or(|n| n > r.len()) {
        return Err(FormatError::Corrupt("length field exceeds remaining data".into()));
    }
    Ok(())
}

fn read_header(r: &mut &[u8], magic: &[u8; 8], kind: &'static str, version: u32) -> Result<[u8; 32], FormatError> {
    let mut m = [0u8; 8];
    r.read_exact(&mut m).map_err(|_| FormatError::BadMagic(kind))?;
    if &m != magic {
        return Err(FormatError::BadMagic(kind));
    }
    let v = r.read_u32::<LE>()?;
    if v != version {
        return Err(FormatError::UnsupportedVersion { kind, version: v });
    }
    let mut hash = [0u8; 32];
    r.read_exact(&mut hash)?;
    Ok(hash)
}

pub fn encode_corpus(corpus: &Corpus) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CORPUS_MAGIC);
    out.write_u32::<LE>(CORPUS_VERSION).unwrap();
    out.extend_from_slice(&corpus.vocabulary().fingerprint());
    out.write_u32::<LE>(corpus.vocabulary().len() as u32).unwrap();
    let prov = corpus.provenance().entries();
    out.write_u32::<LE>(prov.len() as u32).unwrap();
    for (k, v) in prov {
        write_str(&mut out, k);
        write_str(&mut out, v);
    }
    out.write_u32::<LE>(corpus.num_documents() as u32).unwrap();
    for doc in corpus.documents() {
        write_str(&mut out, &doc.id);
        write_str(&mut out, &doc.label);
        out.write_u32::<LE>(doc.tokens.len() as u32).unwrap();
        for &t in &doc.tokens {
            out.write_u32::<LE>(t).unwrap();
        }
    }
    out
}

pub fn decode_corpus(mut r: &[u8], vocabulary: Vocabulary) -> Result<Corpus, FormatError> {
    let hash = read_header(&mut r, CORPUS_MAGIC, "corpus", CORPUS_VERSION)?;
    if hash != vocabulary.fingerprint() || r.read_u32::<LE>()? as usize != vocabulary.len() {
        return Err(FormatError::VocabularyMismatch);
    }
    let mut provenance = Provenance::default();
    for _ in 0..r.read_u32::<LE>()? {
        let k = read_str(&mut r)?;
        let v = read_str(&mut r)?;
        provenance.set(&k, v);
    }
    let n_docs = r.read_u32::<LE>()? as usize;
    check_len(r, n_docs, 12)?;
    let mut docs = Vec::with_capacity(n_docs);
    for _ in 0..n_docs {
        let id = read_str(&mut r)?;
        let label = read_str(&mut r)?;
        let n = r.read_u32::<LE>()? as usize;
        check_len(r, n, 4)?;
        let mut tokens = vec![0u32; n];
        r.read_u32_into::<LE>(&mut tokens)?;
        docs.push(Document { id, label, tokens });
    }
    if !r.is_empty() {
        return Err(FormatError::Corrupt(format!("{} trailing bytes", r.len())));
    }
    Ok(Corpus::from_parts(vocabulary, docs, provenance)?)
}

pub fn save_corpus(corpus: &Corpus, vocab_path: &Path, corpus_path: &Path) -> Result<(), FormatError> {
    write_atomic(vocab_path, &encode_vocabulary(corpus.vocabulary())?)?;
    write_atomic(corpus_path, &encode_corpus(corpus))
}

pub fn load_corpus(vocab_path: &Path, corpus_path: &Path) -> Result<Corpus, FormatError> {
    let vocab = decode_vocabulary(&fs::read(vocab_path).map_err(at(vocab_path))?)?;
    decode_corpus(&fs::read(corpus_path).map_err(at(corpus_path))?, vocab)
}

pub fn encode_model(model: &TopicModel) -> Vec<u8> {
    let c = &model.config;
    let mut out = Vec::with_capacity(128 + 8 * (model.phi.as_slice().len() + model.theta.as_slice().len()));
    out.extend_from_slice(MODEL_MAGIC);
    out.write_u32::<LE>(MODEL_VERSION).unwrap();
    out.extend_from_slice(&model.vocabulary_fingerprint);
    for n in [model.topics(), model.vocabulary_size(), model.num_documents()] {
        out.write_u32::<LE>(n as u32).unwrap();
    }
    out.write_u32::<LE>(c.iterations).unwrap();
    out.write_f64::<LE>(c.alpha).unwrap();
    out.write_f64::<LE>(c.beta).unwrap();
    out.write_u64::<LE>(c.seed).unwrap();
    write_str(&mut out, rng::ALGORITHM);
    for &x in model.phi.as_slice().iter().chain(model.theta.as_slice()) {
        out.write_f64::<LE>(x).unwrap();
    }
    for z in &model.assignments {
        out.write_u32::<LE>(z.len() as u32).unwrap();
        for &t in z {
            out.write_u16::<LE>(t).unwrap();
        }
    }
    out
}

/// Decodes a model, refusing one written against another vocabulary.
pub fn decode_model(mut r: &[u8], fingerprint: &[u8; 32]) -> Result<TopicModel, FormatError> {
    let hash = read_header(&mut r, MODEL_MAGIC, "model", MODEL_VERSION)?;
    if &hash != fingerprint {
        return Err(FormatError::VocabularyMismatch);
    }
    let k = r.read_u32::<LE>()? as usize;
    let v = r.read_u32::<LE>()? as usize;
    let d = r.read_u32::<LE>()? as usize;
    let config = TrainConfig {
        topics: k,
        iterations: r.read_u32::<LE>()?,
        alpha: r.read_f64::<LE>()?,
        beta: r.read_f64::<LE>()?,
        seed: r.read_u64::<LE>()?,
    };
    config.validate().map_err(|e| FormatError::Corrupt(e.to_string()))?;
    let algorithm = read_str(&mut r)?;
    if algorithm != rng::ALGORITHM {
        log::warn!("model was trained with generator {algorithm:?}, this build uses {:?}", rng::ALGORITHM);
    }
    let read_matrix = |r: &mut &[u8], rows: usize, cols: usize| -> Result<Matrix, FormatError> {
        let n = rows.checked_mul(cols).ok_or_else(|| FormatError::Corrupt("matrix too large".into()))?;
        check_len(r, n, 8)?;
        let mut data = vec![0.0; n];
        r.read_f64_into::<LE>(&mut data)?;
        Ok(Matrix::from_vec(rows, cols, data))
    };
    let phi = read_matrix(&mut r, k, v)?;
    let theta = read_matrix(&mut r, d, k)?;
    check_len(r, d, 4)?;
    let mut assignments = Vec::with_capacity(d);
    for _ in 0..d {
        let n = r.read_u32::<LE>()? as usize;
        check_len(r, n, 2)?;
        let mut z = vec![0u16; n];
        r.read_u16_into::<LE>(&mut z)?;
        if z.iter().any(|&t| t as usize >= k) {
            return Err(FormatError::Corrupt("topic assignment out of range".into()));
        }
        assignments.push(z);
    }
    if !r.is_empty() {
        return Err(FormatError::Corrupt(format!("{} trailing bytes", r.len())));
    }
    Ok(TopicModel { config, vocabulary_fingerprint: hash, phi, theta, assignments })
}

pub fn save_model(model: &TopicModel, path: &Path) -> Result<(), FormatError> {
    write_atomic(path, &encode_model(model))
}

/// Loads a model and checks it against `corpus` (vocabulary hash and
/// document count).
pub fn load_model(path: &Path, corpus: &Corpus) -> Result<TopicModel, FormatError> {
    let bytes = fs::read(path).map_err(at(path))?;
    let model = decode_model(&bytes, &corpus.vocabulary().fingerprint())?;
    if model.num_documents() != corpus.num_documents() {
        return Err(FormatError::VocabularyMismatch);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hypershelf_core::corpus::CorpusBuilder;
    use hypershelf_core::lda::{train, TrainConfig};

    fn corpus() -> Corpus {
        let mut b = CorpusBuilder::new();
        b.add_document("a.txt", "a", "天下 之 天下 之 民 民 之".split(' ')).unwrap();
        b.add_document("b.txt", "b", "民 之 天下".split(' ')).unwrap();
        b.add_document("c.txt", "c", std::iter::empty()).unwrap();
        let mut c = b.finish(0).unwrap();
        c.provenance_mut().set("tokenizer", "ltc");
        c
    }

    #[test]
    fn corpus_round_trip_is_bit_identical() {
        let c = corpus();
        let bytes = encode_corpus(&c);
        let vocab = decode_vocabulary(&encode_vocabulary(c.vocabulary()).unwrap()).unwrap();
        let back = decode_corpus(&bytes, vocab).unwrap();
        assert_eq!(back, c);
        assert_eq!(encode_corpus(&back), bytes);
    }

    #[test]
    fn vocabulary_file_hash_is_fingerprint() {
        use sha2::{Digest, Sha256};
        let c = corpus();
        let bytes = encode_vocabulary(c.vocabulary()).unwrap();
        let digest: [u8; 32] = Sha256::digest(&bytes).into();
        assert_eq!(digest, c.vocabulary().fingerprint());
    }

    #[test]
    fn model_round_trip_and_mismatch() {
        let c = corpus();
        let m = train(&c, TrainConfig::new(2, 5, 1)).unwrap();
        let bytes = encode_model(&m);
        let back = decode_model(&bytes, &c.vocabulary().fingerprint()).unwrap();
        assert_eq!(back, m);
        assert_eq!(encode_model(&back), bytes);
        assert!(matches!(decode_model(&bytes, &[0; 32]), Err(FormatError::VocabularyMismatch)));
    }

    #[test]
    fn rejects_garbage() {
        let c = corpus();
        let fp = c.vocabulary().fingerprint();
        assert!(matches!(decode_model(b"nonsense", &fp), Err(FormatError::BadMagic(_))));
        let mut bytes = encode_model(&train(&c, TrainConfig::new(2, 1, 1)).unwrap());
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(decode_model(&bytes, &fp), Err(FormatError::Corrupt(_))));
        let mut bytes = encode_corpus(&c);
        bytes[8] = 9;
        assert!(matches!(
            decode_corpus(&bytes, c.vocabulary().clone()),
            Err(FormatError::UnsupportedVersion { version: 9, .. })
        ));
    }
}
