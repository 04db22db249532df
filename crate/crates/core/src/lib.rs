//! Allocation-only core of the hypershelf topic explorer.
//!
//! Everything here is a pure function of its inputs: dictionary segmentation
//! of unspaced CJK text, bag-of-words corpus construction and filtering,
//! collapsed Gibbs sampling for LDA, Jensen-Shannon distances, similarity
//! search over document-topic mixtures, and the isomap/k-means topic map.
//! File formats, HTML extraction and serving live in the `hypershelf` crate.
#![no_std]

extern crate alloc;

pub mod corpus;
pub mod explore;
pub mod filter;
pub mod lda;
pub mod matrix;
pub mod metrics;
pub mod rng;
pub mod segment;
pub mod simplify;
pub mod topicmap;

mod eigen;

pub use corpus::{Corpus, Document, StopList, Vocabulary};
pub use lda::{ModelSuite, TopicModel, TrainConfig};
pub use matrix::Matrix;
pub use metrics::Distribution;
pub use segment::{Lexicon, Segmenter, TokenSequence};
