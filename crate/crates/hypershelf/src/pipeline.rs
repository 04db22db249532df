//! init, prep and train as library calls. Each step reads the project
//! config, checks that the previous step ran, and records what it did.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use hypershelf_core::corpus::{Corpus, CorpusBuilder, CorpusError, StopList, ThresholdReport};
use hypershelf_core::lda::{self, LdaError, ModelSuite};
use hypershelf_core::rng;
use hypershelf_core::segment::{plain_tokens, Segmenter};
use hypershelf_core::topicmap::TopicMapError;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, ProjectConfig};
use crate::formats::{self, FormatError};
use crate::ingest::{self, IngestError, RawDocument};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Lda(#[from] LdaError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    TopicMap(#[from] TopicMapError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("no text documents under {0}")]
    NoDocuments(PathBuf),
    #[error("{0}: corpus not initialized; run `hypershelf init` first")]
    NotInitialized(PathBuf),
    #[error("{0}: corpus not prepared; run `hypershelf prep` first")]
    NotPrepared(PathBuf),
    #[error("{0}")]
    ModelMissing(String),
    #[error("unknown tokenizer {0:?} (expected ltc or plain)")]
    UnknownTokenizer(String),
}

impl PipelineError {
    /// Stable name for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::Config(ConfigError::Missing(_)) => "ConfigMissing",
            PipelineError::Config(_) => "ConfigError",
            PipelineError::Format(FormatError::VocabularyMismatch) => "VocabularyMismatch",
            PipelineError::Format(FormatError::Io { .. }) | PipelineError::Io { .. } => "IoError",
            PipelineError::Format(_) => "FormatError",
            PipelineError::Corpus(CorpusError::EmptyCorpus) => "EmptyCorpus",
            PipelineError::Corpus(CorpusError::InvalidBounds { .. }) => "InvalidBounds",
            PipelineError::Corpus(_) => "CorpusError",
            PipelineError::Lda(LdaError::EmptyCorpus) => "EmptyCorpus",
            PipelineError::Lda(LdaError::DegenerateVocabulary(_)) => "DegenerateVocabulary",
            PipelineError::Lda(_) => "TrainError",
            PipelineError::Ingest(IngestError::NoDocuments(_)) | PipelineError::NoDocuments(_) => "NoDocuments",
            PipelineError::Ingest(IngestError::DecodeError(_)) => "DecodeError",
            PipelineError::Ingest(_) => "IngestError",
            PipelineError::TopicMap(_) => "TopicMapError",
            PipelineError::NotInitialized(_) => "NotInitialized",
            PipelineError::NotPrepared(_) => "NotPrepared",
            PipelineError::ModelMissing(_) => "ModelMissing",
            PipelineError::UnknownTokenizer(_) => "UnknownTokenizer",
        }
    }
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Tokenizer {
    /// Dictionary segmentation with the bundled ancient-word lexicon.
    #[default]
    Ltc,
    /// Whitespace splitting with punctuation trimmed and lowercasing.
    Plain,
}

impl FromStr for Tokenizer {
    type Err = PipelineError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ltc" => Ok(Tokenizer::Ltc),
            "plain" => Ok(Tokenizer::Plain),
            other => Err(PipelineError::UnknownTokenizer(other.to_string())),
        }
    }
}

impl fmt::Display for Tokenizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tokenizer::Ltc => "ltc",
            Tokenizer::Plain => "plain",
        })
    }
}

/// File locations of one project, derived from its config.
#[derive(Debug, Clone)]
pub struct Project {
    pub config: ProjectConfig,
}

impl Project {
    pub fn open(config_path: &Path) -> Result<Self, PipelineError> {
        Ok(Self { config: ProjectConfig::load(config_path)? })
    }

    pub fn name(&self) -> Result<&str, PipelineError> {
        Ok(self.config.require("main", "corpus_name")?)
    }

    pub fn models_dir(&self) -> Result<PathBuf, PipelineError> {
        Ok(self.config.path_value("main", "path")?)
    }

    fn file(&self, suffix: &str) -> Result<PathBuf, PipelineError> {
        Ok(self.models_dir()?.join(format!("{}{suffix}", self.name()?)))
    }

    pub fn raw_paths(&self) -> Result<(PathBuf, PathBuf), PipelineError> {
        Ok((self.file(".init.vocab")?, self.file(".init.corpus")?))
    }

    pub fn corpus_paths(&self) -> Result<(PathBuf, PathBuf), PipelineError> {
        Ok((self.file(".vocab")?, self.file(".corpus")?))
    }

    pub fn model_path(&self, k: usize) -> Result<PathBuf, PipelineError> {
        self.file(&format!(".k{k}.model"))
    }

    pub fn layout_path(&self) -> Result<PathBuf, PipelineError> {
        self.file(".layout.json")
    }

    /// Directory of the source texts, for full-text display.
    pub fn source_dir(&self) -> Result<PathBuf, PipelineError> {
        Ok(self.config.path_value("main", "corpus_path")?)
    }

    pub fn raw_corpus(&self) -> Result<Corpus, PipelineError> {
        let (v, c) = self.raw_paths()?;
        if !c.is_file() {
            return Err(PipelineError::NotInitialized(self.config.path().to_path_buf()));
        }
        Ok(formats::load_corpus(&v, &c)?)
    }

    /// The prepared corpus; fails if `prep` has not run.
    pub fn corpus(&self) -> Result<Corpus, PipelineError> {
        let (v, c) = self.corpus_paths()?;
        if !self.config.flag("prep", "done")? || !c.is_file() {
            return Err(PipelineError::NotPrepared(self.config.path().to_path_buf()));
        }
        Ok(formats::load_corpus(&v, &c)?)
    }

    /// Topic counts recorded by the last `train`.
    pub fn trained_ks(&self) -> Result<Vec<usize>, PipelineError> {
        Ok(self.config.list("train", "ks")?)
    }

    /// Prepared corpus plus every trained model, each checked against the
    /// corpus vocabulary.
    pub fn load_suite(&self) -> Result<(Corpus, ModelSuite), PipelineError> {
        let corpus = self.corpus()?;
        let ks = self.trained_ks()?;
        if ks.is_empty() {
            return Err(PipelineError::ModelMissing(format!(
                "{}: no trained models; run `hypershelf train {} -k K`",
                self.config.path().display(),
                self.config.path().display()
            )));
        }
        let mut suite = ModelSuite::new(corpus.vocabulary().fingerprint());
        for k in ks {
            let path = self.model_path(k)?;
            if !path.is_file() {
                return Err(PipelineError::ModelMissing(format!("model file {} is missing; rerun train", path.display())));
            }
            suite.insert(formats::load_model(&path, &corpus)?)?;
        }
        Ok((corpus, suite))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InitReport {
    pub config_path: PathBuf,
    pub documents: usize,
    pub types: usize,
    pub tokens: u64,
    pub empty_documents: Vec<String>,
}

fn read_text(root: &Path, rel: &Path) -> Result<String, PipelineError> {
    let path = root.join(rel);
    let payload = fs::read(&path).map_err(io_at(&path))?;
    let raw = RawDocument { source_path: rel.to_path_buf(), payload, encoding_hint: None };
    Ok(ingest::decode(&raw)?.0)
}

/// Segments every `.txt` file under `corpus_dir`, builds the corpus with the
/// frequency cutoff, and writes `<name>.ini` into `project_dir` with the
/// corpus files under `project_dir/models`.
pub fn init(corpus_dir: &Path, tokenizer: Tokenizer, min_freq: u64, project_dir: &Path) -> Result<InitReport, PipelineError> {
    let corpus_dir = fs::canonicalize(corpus_dir).map_err(io_at(corpus_dir))?;
    let files: Vec<PathBuf> = ingest::list_sources(&corpus_dir)?
        .into_iter()
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("txt")))
        .collect();
    if files.is_empty() {
        return Err(PipelineError::NoDocuments(corpus_dir));
    }
    let texts: Vec<String> = files.par_iter().map(|rel| read_text(&corpus_dir, rel)).collect::<Result<_, _>>()?;
    let ids: Vec<String> = files.iter().map(|p| ingest::doc_id_for(p)).collect();

    let mut builder = CorpusBuilder::new();
    match tokenizer {
        Tokenizer::Ltc => {
            let lexicon = crate::data::bundled_lexicon();
            let seg = Segmenter::new(&lexicon);
            let tokens: Vec<Vec<&str>> = texts
                .par_iter()
                .map(|t| {
                    let mut out = Vec::new();
                    seg.for_each_token(t, |w| out.push(w));
                    out
                })
                .collect();
            for (id, toks) in ids.iter().zip(&tokens) {
                builder.add_document(id, &ingest::label_for(id), toks.iter().copied())?;
            }
        }
        Tokenizer::Plain => {
            for (id, t) in ids.iter().zip(&texts) {
                let toks: Vec<String> = plain_tokens(t).collect();
                builder.add_document(id, &ingest::label_for(id), toks.iter().map(String::as_str))?;
            }
        }
    }
    let mut corpus = builder.finish(min_freq)?;
    let name = corpus_dir.file_name().map_or_else(|| "corpus".to_string(), |n| n.to_string_lossy().into_owned());
    corpus.provenance_mut().set("tokenizer", tokenizer);
    corpus.provenance_mut().set("min_freq", min_freq);
    corpus.provenance_mut().set("source", corpus_dir.display());

    let empty: Vec<String> = corpus.empty_documents().into_iter().map(String::from).collect();
    for id in &empty {
        log::warn!("{id}: no tokens left after filtering; kept as an empty document");
    }

    fs::create_dir_all(project_dir).map_err(io_at(project_dir))?;
    let config_path = project_dir.join(format!("{name}.ini"));
    let mut config = ProjectConfig::new(&config_path);
    config.set("main", "corpus_name", &name);
    config.set("main", "corpus_path", corpus_dir.display());
    config.set("main", "path", "models");
    config.set("main", "tokenizer", tokenizer);
    config.set("main", "min_freq", min_freq);
    config.set("init", "documents", corpus.num_documents());
    config.set("init", "types", corpus.vocabulary().len());
    config.set("init", "tokens", corpus.total_tokens());
    config.set("init", "empty_documents", empty.len());
    let project = Project { config };
    let models = project.models_dir()?;
    fs::create_dir_all(&models).map_err(io_at(&models))?;
    let (v, c) = project.raw_paths()?;
    formats::save_corpus(&corpus, &v, &c)?;
    project.config.save()?;
    Ok(InitReport {
        config_path,
        documents: corpus.num_documents(),
        types: corpus.vocabulary().len(),
        tokens: corpus.total_tokens(),
        empty_documents: empty,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrepReport {
    pub stoplist_size: usize,
    pub stoplist_types: usize,
    pub stoplist_tokens: u64,
    pub low: u64,
    pub high: Option<u64>,
    pub thresholds: ThresholdReport,
    pub types: usize,
    pub tokens: u64,
}

pub fn read_stoplist(path: &Path) -> Result<StopList, PipelineError> {
    let bytes = fs::read(path).map_err(io_at(path))?;
    let text = String::from_utf8(bytes)
        .map_err(|_| PipelineError::Ingest(IngestError::DecodeError(format!("{} is not UTF-8", path.display()))))?;
    Ok(StopList::parse(&text))
}

/// Applies the stoplist and then the count bounds to the corpus built by
/// `init`. `bounds` receives the post-stoplist corpus and returns
/// `(low, high)`; it is where an interactive prompt plugs in.
pub fn prep<F>(config_path: &Path, stopword_file: Option<&Path>, bounds: F) -> Result<PrepReport, PipelineError>
where
    F: FnOnce(&Corpus) -> Result<(u64, Option<u64>), PipelineError>,
{
    let mut project = Project::open(config_path)?;
    let raw = project.raw_corpus()?;
    let stops = match stopword_file {
        Some(p) => read_stoplist(p)?,
        None => StopList::default(),
    };
    let stopped = raw.apply_stoplist(&stops);
    let (low, high) = bounds(&stopped)?;
    let (mut corpus, thresholds) = stopped.prep_thresholds(low, high)?;
    corpus.provenance_mut().set("low", low);
    if let Some(h) = high {
        corpus.provenance_mut().set("high", h);
    }

    let (v, c) = project.corpus_paths()?;
    formats::save_corpus(&corpus, &v, &c)?;
    let report = PrepReport {
        stoplist_size: stops.len(),
        stoplist_types: raw.vocabulary().len() - stopped.vocabulary().len(),
        stoplist_tokens: raw.total_tokens() - stopped.total_tokens(),
        low,
        high,
        thresholds,
        types: corpus.vocabulary().len(),
        tokens: corpus.total_tokens(),
    };
    let cfg = &mut project.config;
    cfg.clear_section("prep");
    cfg.set("prep", "done", true);
    if let Some(p) = stopword_file {
        let abs = fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf());
        cfg.set("prep", "stopword_file", abs.display());
    }
    cfg.set("prep", "stoplist_size", report.stoplist_size);
    cfg.set("prep", "stoplist_types", report.stoplist_types);
    cfg.set("prep", "stoplist_tokens", report.stoplist_tokens);
    cfg.set("prep", "low", low);
    if let Some(h) = high {
        cfg.set("prep", "high", h);
    }
    cfg.set("prep", "low_types", thresholds.low_types);
    cfg.set("prep", "low_tokens", thresholds.low_tokens);
    cfg.set("prep", "high_types", thresholds.high_types);
    cfg.set("prep", "high_tokens", thresholds.high_tokens);
    cfg.set("prep", "types", report.types);
    cfg.set("prep", "tokens", report.tokens);
    // a new vocabulary invalidates earlier models
    cfg.clear_section("train");
    cfg.save()?;
    let _ = fs::remove_file(project.layout_path()?);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub topic_counts: Vec<usize>,
    pub iterations: u32,
    pub seed: u64,
    /// Overrides the per-K default of `50 / K`.
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

/// Trains one model per K in parallel and writes the model files.
/// Returns per-K wall time, in the order of `topic_counts`.
pub fn train(config_path: &Path, opts: &TrainOptions) -> Result<Vec<(usize, Duration)>, PipelineError> {
    let mut project = Project::open(config_path)?;
    let corpus = project.corpus()?;
    let mut configs = lda::suite_configs(&opts.topic_counts, opts.iterations, opts.seed)?;
    for c in &mut configs {
        if let Some(a) = opts.alpha {
            c.alpha = a;
        }
        if let Some(b) = opts.beta {
            c.beta = b;
        }
        c.validate()?;
    }
    let paths: Vec<PathBuf> = configs.iter().map(|c| project.model_path(c.topics)).collect::<Result<_, _>>()?;
    let timings: Vec<(usize, Duration)> = configs
        .par_iter()
        .zip(&paths)
        .map(|(c, path)| {
            let start = Instant::now();
            let model = lda::train(&corpus, *c)?;
            formats::save_model(&model, path)?;
            Ok((c.topics, start.elapsed()))
        })
        .collect::<Result<_, PipelineError>>()?;

    let cfg = &mut project.config;
    cfg.clear_section("train");
    let ks: Vec<String> = opts.topic_counts.iter().map(usize::to_string).collect();
    cfg.set("train", "ks", ks.join(" "));
    cfg.set("train", "iterations", opts.iterations);
    cfg.set("train", "seed", opts.seed);
    cfg.set("train", "alpha", opts.alpha.map_or_else(|| "50/K".to_string(), |a| a.to_string()));
    cfg.set("train", "beta", opts.beta.unwrap_or(lda::DEFAULT_BETA));
    cfg.set("train", "rng", rng::ALGORITHM);
    cfg.save()?;
    let _ = fs::remove_file(project.layout_path()?);
    Ok(timings)
}
