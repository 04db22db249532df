use std::io::{self, BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hypershelf::config::resolve_address;
use hypershelf::core::corpus::{Corpus, DEFAULT_MIN_FREQ};
use hypershelf::core::topicmap::{LayoutOptions, DEFAULT_CLUSTERS, DEFAULT_MARKER_BASE, DEFAULT_NEIGHBORS, DEFAULT_RESTARTS};
use hypershelf::ingest::{self, IngestOptions, DEFAULT_SELECTOR};
use hypershelf::layout::{cached_layout, parse_space, space_name};
use hypershelf::pipeline::{self, PipelineError, Project, Tokenizer, TrainOptions};
use hypershelf::server::{shutdown_signal, AppState, Server, ServerError, ServiceConfig};

#[derive(Parser)]
#[command(name = "hypershelf", version, about = "Train and explore LDA topic models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment a directory of .txt files and build the corpus
    Init {
        corpus_dir: PathBuf,
        #[arg(long, default_value = "ltc", value_parser = ["ltc", "plain"])]
        tokenizer: String,
        /// Drop words occurring this many times or fewer
        #[arg(long, default_value_t = DEFAULT_MIN_FREQ)]
        freq: u64,
    },
    /// Apply a stoplist and frequency bounds to the initial corpus
    Prep {
        config: PathBuf,
        #[arg(long = "stopword-file", alias = "stopword_file")]
        stopword_file: Option<PathBuf>,
        /// Remove words with count below this
        #[arg(long)]
        low: Option<u64>,
        /// Remove words with count above this
        #[arg(long)]
        high: Option<u64>,
    },
    /// Train one model per topic count
    Train {
        config: PathBuf,
        #[arg(short = 'k', num_args = 1.., required = true)]
        k: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        iter: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Document-topic prior (default 50/K)
        #[arg(long)]
        alpha: Option<f64>,
        /// Topic-word prior
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Start the HTTP server
    #[command(alias = "launch")]
    Serve {
        config: PathBuf,
        /// Serve document full texts
        #[arg(long)]
        fulltext: bool,
        #[arg(long)]
        port: Option<u16>,
    },
    /// Extract, decode and simplify raw HTML/text files into a text corpus
    Ingest {
        input: PathBuf,
        output: PathBuf,
        /// CSS selector of the text container
        #[arg(long, default_value = DEFAULT_SELECTOR)]
        selector: String,
        /// Encoding of every input file (default: detect)
        #[arg(long)]
        encoding: Option<String>,
        /// Modern-language marker words, one per line
        #[arg(long)]
        modern_words: Option<PathBuf>,
    },
    /// Most frequent words
    Freq {
        config: PathBuf,
        #[arg(short, default_value_t = 100)]
        n: usize,
        /// Report on the initial corpus rather than the prepared one
        #[arg(long)]
        raw: bool,
    },
    /// Inverse document frequencies, lowest first
    Idf {
        config: PathBuf,
        #[arg(short, default_value_t = 100)]
        n: usize,
        #[arg(long)]
        raw: bool,
    },
    /// Compute and cache the topic map
    Map {
        config: PathBuf,
        #[arg(long, default_value_t = DEFAULT_NEIGHBORS)]
        neighbors: usize,
        #[arg(long, default_value_t = DEFAULT_CLUSTERS)]
        clusters: usize,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "embedding", value_parser = ["embedding", "distribution"])]
        space: String,
    },
}

struct Failure {
    kind: &'static str,
    message: String,
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure { kind: e.kind(), message: e.to_string() }
    }
}

impl From<ServerError> for Failure {
    fn from(e: ServerError) -> Self {
        Failure { kind: e.kind(), message: e.to_string() }
    }
}

impl From<ingest::IngestError> for Failure {
    fn from(e: ingest::IngestError) -> Self {
        PipelineError::from(e).into()
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure { kind: "IoError", message: format!("{}: {e}", path.display()) }
}

fn layout_options(project: &Project) -> Result<LayoutOptions, Failure> {
    let c = &project.config;
    let mut o = LayoutOptions::default();
    o.n_neighbors = c.parse("map", "n_neighbors").map_err(PipelineError::from)?.unwrap_or(o.n_neighbors);
    o.clusters = c.parse("map", "clusters").map_err(PipelineError::from)?.unwrap_or(o.clusters);
    o.restarts = c.parse("map", "restarts").map_err(PipelineError::from)?.unwrap_or(o.restarts);
    o.seed = c.parse("map", "seed").map_err(PipelineError::from)?.unwrap_or(o.seed);
    o.marker_base = c.parse("map", "marker_base").map_err(PipelineError::from)?.unwrap_or(DEFAULT_MARKER_BASE);
    if let Some(s) = c.get("map", "space") {
        o.space = parse_space(s).ok_or(Failure { kind: "ConfigError", message: format!("unknown map space {s:?}") })?;
    }
    Ok(o)
}

fn prompt_bounds(corpus: &Corpus) -> Result<(u64, Option<u64>), PipelineError> {
    let counts = corpus.word_counts();
    let mut sorted = counts.clone();
    sorted.sort_unstable();
    let max = sorted.last().copied().unwrap_or(0);
    println!("{} types, {} tokens; counts range 1..={max}", counts.len(), corpus.total_tokens());
    let ask = |label: &str| -> Option<u64> {
        print!("{label}: ");
        io::stdout().flush().ok();
        let mut line = String::new();
        io::stdin().lock().read_line(&mut line).ok()?;
        line.trim().parse().ok()
    };
    let low = ask("low threshold (remove words rarer than this, blank for 0)").unwrap_or(0);
    let high = ask("high threshold (remove words more frequent than this, blank for none)");
    for (name, bound) in [("below low", Some(low)), ("above high", high)] {
        if let Some(b) = bound {
            let (types, tokens) = counts
                .iter()
                .filter(|&&c| if name == "below low" { c < b } else { c > b })
                .fold((0, 0u64), |(t, n), &c| (t + 1, n + c));
            println!("{name}: {types} types, {tokens} tokens removed");
        }
    }
    Ok((low, high))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Init { corpus_dir, tokenizer, freq } => {
            let tokenizer: Tokenizer = tokenizer.parse()?;
            let cwd = std::env::current_dir().map_err(|e| io_failure(Path::new("."), e))?;
            let r = pipeline::init(&corpus_dir, tokenizer, freq, &cwd)?;
            println!(
                "{} documents, {} types, {} tokens ({} empty)",
                r.documents,
                r.types,
                r.tokens,
                r.empty_documents.len()
            );
            println!("wrote {}", r.config_path.display());
        }
        Command::Prep { config, stopword_file, low, high } => {
            let interactive = low.is_none() && high.is_none() && io::stdin().is_terminal();
            let r = pipeline::prep(&config, stopword_file.as_deref(), |c| {
                if interactive {
                    prompt_bounds(c)
                } else {
                    Ok((low.unwrap_or(0), high))
                }
            })?;
            println!("stoplist: {} words, removed {} types / {} tokens", r.stoplist_size, r.stoplist_types, r.stoplist_tokens);
            println!("below {}: removed {} types / {} tokens", r.low, r.thresholds.low_types, r.thresholds.low_tokens);
            match r.high {
                Some(h) => println!("above {h}: removed {} types / {} tokens", r.thresholds.high_types, r.thresholds.high_tokens),
                None => println!("no high threshold"),
            }
            println!("{} types, {} tokens remain", r.types, r.tokens);
        }
        Command::Train { config, k, iter, seed, alpha, beta } => {
            let opts = TrainOptions { topic_counts: k, iterations: iter, seed, alpha, beta };
            for (k, t) in pipeline::train(&config, &opts)? {
                println!("k={k}: {:.2}s", t.as_secs_f64());
            }
        }
        Command::Serve { config, fulltext, port } => {
            let project = Project::open(&config)?;
            let (host, port) = resolve_address(&project.config, port).map_err(PipelineError::from)?;
            let static_dir = project.config.get("serve", "static_dir").map(|_| project.config.path_value("serve", "static_dir")).transpose().map_err(PipelineError::from)?;
            let service = ServiceConfig { host, port, fulltext, static_dir, layout: layout_options(&project)? };
            let state = AppState::load(&project, &service)?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| Failure { kind: "IoError", message: e.to_string() })?;
            rt.block_on(async {
                let server = Server::bind(state, &service).await?;
                let addr = server.local_addr()?;
                println!("serving http://{addr}/ (Ctrl-C to stop)");
                server.run(shutdown_signal()).await
            })?;
        }
        Command::Ingest { input, output, selector, encoding, modern_words } => {
            let mut opts = IngestOptions { selector, encoding_hint: encoding, ..IngestOptions::default() };
            if let Some(p) = modern_words {
                let text = std::fs::read_to_string(&p).map_err(|e| io_failure(&p, e))?;
                opts.modern_words = text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
            }
            let (s, _) = ingest::ingest_dir(&input, &output, &opts)?;
            println!(
                "{} files: {} kept, {} flagged for review, {} dropped, {} errors",
                s.files, s.kept, s.flagged, s.dropped, s.errors
            );
            println!("report: {}", output.join(ingest::REPORT_FILE).display());
        }
        Command::Freq { config, n, raw } => {
            let project = Project::open(&config)?;
            let corpus = if raw { project.raw_corpus()? } else { project.corpus()? };
            for (rank, (w, c)) in corpus.frequency_report(n).into_iter().enumerate() {
                println!("{}\t{w}\t{c}", rank + 1);
            }
        }
        Command::Idf { config, n, raw } => {
            let project = Project::open(&config)?;
            let corpus = if raw { project.raw_corpus()? } else { project.corpus()? };
            for (w, idf) in corpus.idf_report().into_iter().take(n) {
                println!("{w}\t{idf:.6}");
            }
        }
        Command::Map { config, neighbors, clusters, restarts, seed, space } => {
            let mut project = Project::open(&config)?;
            let c = &mut project.config;
            c.set("map", "n_neighbors", neighbors);
            c.set("map", "clusters", clusters);
            c.set("map", "restarts", restarts);
            c.set("map", "seed", seed);
            c.set("map", "space", &space);
            if c.get("map", "marker_base").is_none() {
                c.set("map", "marker_base", DEFAULT_MARKER_BASE);
            }
            let opts = layout_options(&project)?;
            let (corpus, suite) = project.load_suite()?;
            let path = project.layout_path()?;
            let file = cached_layout(&path, &suite, corpus.vocabulary(), opts).map_err(PipelineError::from)?;
            project.config.save().map_err(PipelineError::from)?;
            println!(
                "{} topics, {} clusters in {} space, {} bridging edges; wrote {}",
                file.points.len(),
                file.clusters,
                space_name(opts.space),
                file.bridges,
                path.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let message = f.message.replace(['\n', '\r'], " ");
            eprintln!("error: {}: {message}", f.kind);
            ExitCode::FAILURE
        }
    }
}
