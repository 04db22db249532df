//! Raw files to clean UTF-8 documents: decode, extract the text container,
//! simplify, and sort into kept / flagged / dropped with a per-file report.

use std::borrow::Cow;
use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use encoding_rs::{Encoding, BIG5, GB18030, UTF_8};
use hypershelf_core::filter::{filter_documents, CleanDocument};
use hypershelf_core::simplify::Simplifier;
use rayon::prelude::*;
use scraper::{ElementRef, Html, Selector};
use serde::Serialize;
use thiserror::Error;

/// The text container of the reference site's pages.
pub const DEFAULT_SELECTOR: &str = "div.snr2";
pub const REPORT_FILE: &str = "ingest_report.jsonl";
/// Share of container text inside links above which a page is flagged as an
/// index page.
pub const DEFAULT_INDEX_RATIO: f64 = 0.5;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("no element matches selector {0:?}")]
    NoContainer(String),
    #[error("cannot decode: {0}")]
    DecodeError(String),
    #[error("invalid selector {0:?}")]
    InvalidSelector(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("no .html, .htm or .txt files under {0}")]
    NoDocuments(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    /// Path relative to the ingestion root.
    pub source_path: PathBuf,
    pub payload: Vec<u8>,
    pub encoding_hint: Option<String>,
}

/// Charset named in a `<meta>` tag within the first kilobyte.
fn sniff_meta_charset(bytes: &[u8]) -> Option<&'static Encoding> {
    let head = &bytes[..bytes.len().min(1024)];
    let lower: Vec<u8> = head.iter().map(u8::to_ascii_lowercase).collect();
    let at = lower.windows(8).position(|w| w == b"charset=")? + 8;
    let rest = &lower[at..];
    let rest = rest.strip_prefix(b"\"").or_else(|| rest.strip_prefix(b"'")).unwrap_or(rest);
    let end = rest.iter().position(|b| !(b.is_ascii_alphanumeric() || *b == b'-' || *b == b'_')).unwrap_or(rest.len());
    Encoding::for_label(&rest[..end])
}

fn strict<'a>(enc: &'static Encoding, bytes: &'a [u8]) -> Option<Cow<'a, str>> {
    enc.decode_without_bom_handling_and_without_replacement(bytes)
}

/// Decodes with the hint, else the declared meta charset, else UTF-8, then
/// GB18030, then Big5. Never substitutes replacement characters.
pub fn decode(raw: &RawDocument) -> Result<(String, &'static Encoding), IngestError> {
    let bytes = raw.payload.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(&raw.payload);
    if let Some(hint) = &raw.encoding_hint {
        let enc = Encoding::for_label(hint.trim().as_bytes())
            .ok_or_else(|| IngestError::DecodeError(format!("unknown encoding {hint:?}")))?;
        return strict(enc, bytes)
            .map(|s| (s.into_owned(), enc))
            .ok_or_else(|| IngestError::DecodeError(format!("invalid {} data", enc.name())));
    }
    let declared = sniff_meta_charset(bytes);
    for enc in declared.into_iter().chain([UTF_8, GB18030, BIG5]) {
        if let Some(s) = strict(enc, bytes) {
            return Ok((s.into_owned(), enc));
        }
    }
    Err(IngestError::DecodeError("not UTF-8, GB18030 or Big5".into()))
}

const BLOCKS: &[&str] = &[
    "p", "div", "br", "li", "tr", "td", "h1", "h2", "h3", "h4", "h5", "h6", "table", "blockquote", "pre", "ul", "ol",
    "dd", "dt",
];
const SKIPPED: &[&str] = &["script", "style", "noscript", "template"];

fn walk(el: ElementRef, out: &mut String, link_chars: &mut usize, in_link: bool) {
    for child in el.children() {
        if let Some(t) = child.value().as_text() {
            out.push_str(t);
            if in_link {
                *link_chars += t.chars().filter(|c| !c.is_whitespace()).count();
            }
        } else if let Some(e) = ElementRef::wrap(child) {
            let name = e.value().name();
            if SKIPPED.contains(&name) {
                continue;
            }
            let block = BLOCKS.contains(&name);
            if block {
                out.push('\n');
            }
            walk(e, out, link_chars, in_link || name == "a");
            if block {
                out.push('\n');
            }
        }
    }
}

/// Trims every line (including full-width spaces), drops blank lines and
/// joins with LF.
pub fn normalize_lines(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for line in text.lines() {
        let line = line.trim_matches(|c: char| c.is_whitespace() || c == '\u{3000}');
        if !line.is_empty() {
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str(line);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extracted {
    pub text: String,
    pub encoding: &'static str,
    /// Fraction of non-whitespace characters that sit inside links.
    pub link_ratio: f64,
}

/// Text of the first element matching `selector`, tags stripped and
/// entities decoded.
pub fn extract_text(raw: &RawDocument, selector: &str) -> Result<String, IngestError> {
    extract(raw, selector).map(|e| e.text)
}

pub fn extract(raw: &RawDocument, selector: &str) -> Result<Extracted, IngestError> {
    let sel = Selector::parse(selector).map_err(|_| IngestError::InvalidSelector(selector.to_string()))?;
    let (html, enc) = decode(raw)?;
    let doc = Html::parse_document(&html);
    let container = doc.select(&sel).next().ok_or_else(|| IngestError::NoContainer(selector.to_string()))?;
    let mut buf = String::new();
    let mut link_chars = 0;
    walk(container, &mut buf, &mut link_chars, false);
    let text = normalize_lines(&buf);
    let total = text.chars().filter(|c| !c.is_whitespace()).count();
    let link_ratio = if total == 0 { 0.0 } else { link_chars as f64 / total as f64 };
    Ok(Extracted { text, encoding: enc.name(), link_ratio })
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub selector: String,
    pub encoding_hint: Option<String>,
    pub modern_words: Vec<String>,
    pub index_ratio: f64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            selector: DEFAULT_SELECTOR.to_string(),
            encoding_hint: None,
            modern_words: crate::data::default_modern_markers(),
            index_ratio: DEFAULT_INDEX_RATIO,
        }
    }
}

/// One line of the ingestion report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRecord {
    pub source: String,
    pub doc_id: String,
    /// `kept`, `flagged`, `dropped` or `error`.
    pub action: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub encoding: Option<&'static str>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub markers: Vec<String>,
    /// Traditional characters with more than one simplified candidate.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub ambiguous: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IngestSummary {
    pub files: usize,
    pub kept: usize,
    pub flagged: usize,
    pub dropped: usize,
    pub errors: usize,
}

fn slash_path(p: &Path) -> String {
    p.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
}

/// `dir/name.html` becomes `dir/name.txt`.
pub fn doc_id_for(relative: &Path) -> String {
    slash_path(&relative.with_extension("txt"))
}

/// `dir/name.txt` becomes `dir/name`.
pub fn label_for(doc_id: &str) -> String {
    doc_id.strip_suffix(".txt").unwrap_or(doc_id).to_string()
}

fn is_html(p: &Path) -> bool {
    p.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("html") || e.eq_ignore_ascii_case("htm"))
}

fn is_text(p: &Path) -> bool {
    p.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("txt"))
}

/// Input files below `root`, relative, sorted.
pub fn list_sources(root: &Path) -> Result<Vec<PathBuf>, IngestError> {
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| IngestError::Io {
            path: e.path().unwrap_or(root).to_path_buf(),
            source: e.into_io_error().unwrap_or_else(|| io::Error::other("walk failed")),
        })?;
        let p = entry.path();
        if entry.file_type().is_file() && (is_html(p) || is_text(p)) {
            out.push(p.strip_prefix(root).expect("walk stays under root").to_path_buf());
        }
    }
    Ok(out)
}

struct FileResult {
    record: ReportRecord,
    document: Option<CleanDocument>,
    index_page: bool,
}

fn process(root: &Path, rel: &Path, opts: &IngestOptions, simplifier: &Simplifier) -> FileResult {
    let doc_id = doc_id_for(rel);
    let mut record = ReportRecord {
        source: slash_path(rel),
        doc_id: doc_id.clone(),
        action: "error",
        reason: None,
        encoding: None,
        markers: Vec::new(),
        ambiguous: Vec::new(),
    };
    let path = root.join(rel);
    let payload = match fs::read(&path) {
        Ok(p) => p,
        Err(e) => {
            record.reason = Some(e.to_string());
            return FileResult { record, document: None, index_page: false };
        }
    };
    let raw = RawDocument { source_path: rel.to_path_buf(), payload, encoding_hint: opts.encoding_hint.clone() };
    let extracted = if is_html(rel) {
        extract(&raw, &opts.selector)
    } else {
        decode(&raw).map(|(t, enc)| Extracted { text: normalize_lines(&t), encoding: enc.name(), link_ratio: 0.0 })
    };
    match extracted {
        Err(e) => {
            record.reason = Some(e.to_string());
            FileResult { record, document: None, index_page: false }
        }
        Ok(ex) => {
            record.encoding = Some(ex.encoding);
            record.ambiguous = simplifier
                .ambiguities_in(&ex.text)
                .into_iter()
                .map(|a| a.traditional.to_string())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let text = simplifier.to_simplified(&ex.text);
            let label = label_for(&doc_id);
            FileResult {
                record,
                document: Some(CleanDocument { doc_id, label, text }),
                index_page: ex.link_ratio >= opts.index_ratio,
            }
        }
    }
}

/// Ingests every `.html`/`.htm`/`.txt` file under `input`, writing kept and
/// flagged documents as UTF-8 `.txt` files under `output` (mirroring the
/// tree) and the report to `output/ingest_report.jsonl`. Flagged documents
/// are written too; the report marks them for review.
pub fn ingest_dir(input: &Path, output: &Path, opts: &IngestOptions) -> Result<(IngestSummary, Vec<ReportRecord>), IngestError> {
    let sources = list_sources(input)?;
    if sources.is_empty() {
        return Err(IngestError::NoDocuments(input.to_path_buf()));
    }
    let simplifier = crate::data::bundled_simplifier();
    let mut results: Vec<FileResult> = sources.par_iter().map(|rel| process(input, rel, opts, &simplifier)).collect();
    results.sort_by(|a, b| a.record.doc_id.cmp(&b.record.doc_id).then_with(|| a.record.source.cmp(&b.record.source)));
    for i in 1..results.len() {
        if results[i].record.doc_id == results[i - 1].record.doc_id && results[i].document.is_some() {
            results[i].document = None;
            results[i].record.action = "error";
            results[i].record.reason = Some("duplicate document id".into());
        }
    }

    let docs: Vec<CleanDocument> = results.iter().filter_map(|r| r.document.clone()).collect();
    let outcome = filter_documents(docs, &opts.modern_words);
    let mut summary = IngestSummary { files: results.len(), ..IngestSummary::default() };
    let mut to_write: Vec<&CleanDocument> = Vec::new();
    for r in &mut results {
        if r.document.is_none() {
            summary.errors += 1;
            continue;
        }
        let id = &r.record.doc_id;
        if let Some(f) = outcome.flagged.iter().find(|f| &f.document.doc_id == id) {
            r.record.action = "flagged";
            r.record.markers = f.markers.clone();
            r.record.reason = Some("modern-language markers".into());
            summary.flagged += 1;
            to_write.push(&f.document);
        } else if outcome.dropped.contains(id) {
            r.record.action = "dropped";
            r.record.reason = Some("empty text".into());
            summary.dropped += 1;
        } else if r.index_page {
            r.record.action = "flagged";
            r.record.reason = Some("index page".into());
            summary.flagged += 1;
            to_write.push(r.document.as_ref().expect("document present"));
        } else {
            r.record.action = "kept";
            summary.kept += 1;
            to_write.push(r.document.as_ref().expect("document present"));
        }
    }

    for doc in to_write {
        let path = output.join(&doc.doc_id);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|source| IngestError::Io { path: dir.to_path_buf(), source })?;
        }
        let mut text = doc.text.clone();
        text.push('\n');
        fs::write(&path, text).map_err(|source| IngestError::Io { path: path.clone(), source })?;
    }
    let records: Vec<ReportRecord> = results.into_iter().map(|r| r.record).collect();
    let report = output.join(REPORT_FILE);
    let io_err = |source| IngestError::Io { path: report.clone(), source };
    fs::create_dir_all(output).map_err(|source| IngestError::Io { path: output.to_path_buf(), source })?;
    let mut w = io::BufWriter::new(fs::File::create(&report).map_err(io_err)?);
    for r in &records {
        serde_json::to_writer(&mut w, r).expect("report records serialize");
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok((summary, records))
}
