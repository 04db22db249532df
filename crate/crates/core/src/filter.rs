//! Post-extraction document screening: empty documents are dropped, documents
//! carrying modern-language markers are set aside for manual review.

use alloc::string::String;
use alloc::vec::Vec;

use aho_corasick::AhoCorasick;

/// A cleaned, simplified document ready for segmentation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanDocument {
    /// Relative path with a `.txt` extension.
    pub doc_id: String,
    /// Display label built from the path segments.
    pub label: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flagged {
    pub document: CleanDocument,
    /// Markers found in the text, deduplicated, in marker-list order.
    pub markers: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterOutcome {
    pub kept: Vec<CleanDocument>,
    pub flagged: Vec<Flagged>,
    /// Ids of documents dropped for having no text.
    pub dropped: Vec<String>,
}

impl FilterOutcome {
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.kept.len(), self.flagged.len(), self.dropped.len())
    }
}

/// Documents whose text is empty or whitespace-only are dropped.
pub fn filter_documents<I>(docs: I, modern_words: &[String]) -> FilterOutcome
where
    I: IntoIterator<Item = CleanDocument>,
{
    let markers: Vec<&String> = modern_words.iter().filter(|w| !w.is_empty()).collect();
    let matcher = if markers.is_empty() {
        None
    } else {
        Some(AhoCorasick::new(markers.iter().map(|s| s.as_str())).expect("marker automaton"))
    };
    let mut out = FilterOutcome::default();
    for doc in docs {
        if doc.text.trim().is_empty() {
            out.dropped.push(doc.doc_id);
            continue;
        }
        let mut hits: Vec<usize> = match &matcher {
            Some(m) => m.find_overlapping_iter(&doc.text).map(|h| h.pattern().as_usize()).collect(),
            None => Vec::new(),
        };
        if hits.is_empty() {
            out.kept.push(doc);
        } else {
            hits.sort_unstable();
            hits.dedup();
            let markers = hits.into_iter().map(|i| markers[i].clone()).collect();
            out.flagged.push(Flagged { document: doc, markers });
        }
    }
    out
}

/// Small default list of modern vernacular words that almost never occur in
/// classical prose.
pub const DEFAULT_MODERN_MARKERS: &[&str] = &[
    "我们", "你们", "他们", "她们", "什么", "怎么", "这个", "那个", "这些", "那些", "这样",
    "那样", "没有", "现在", "已经", "知道", "觉得", "因为", "所以", "但是", "可是", "就是",
    "还是", "的话", "一下", "东西", "喜欢", "电话", "学校", "工作", "时候", "吗",
];
