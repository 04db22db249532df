//! Std side of the topic-model explorer: ingestion, bundled dictionaries,
//! file formats, the project config, the init/prep/train pipeline, topic
//! map caching and the HTTP server. Algorithms live in `hypershelf-core`.

pub mod config;
pub mod data;
pub mod formats;
pub mod ingest;
pub mod layout;
pub mod pipeline;
pub mod server;

pub use hypershelf_core as core;
pub use pipeline::{PipelineError, Project, Tokenizer, TrainOptions};
