//! Resources compiled into the binary.

use hypershelf_core::filter::DEFAULT_MODERN_MARKERS;
use hypershelf_core::segment::Lexicon;
use hypershelf_core::simplify::Simplifier;

/// Multi-character ancient Chinese words, `"<len> <word>"` per line.
pub const ANCIENT_WORDS: &str = include_str!("../data/ancient_words.dic");
/// Single-character frequencies, `"<count> <char>"` per line.
pub const CHAR_FREQS: &str = include_str!("../data/chars.dic");
/// Traditional to simplified table, tab separated.
pub const T2S_TABLE: &str = include_str!("../data/t2s.tsv");

/// The ancient-word dictionary with character frequencies for rule 4.
pub fn bundled_lexicon() -> Lexicon {
    let mut lex = Lexicon::parse_words(ANCIENT_WORDS).expect("bundled dictionary parses");
    lex.extend_char_freqs(CHAR_FREQS).expect("bundled character table parses");
    lex
}

pub fn bundled_simplifier() -> Simplifier {
    Simplifier::parse(T2S_TABLE).expect("bundled conversion table parses")
}

pub fn default_modern_markers() -> Vec<String> {
    DEFAULT_MODERN_MARKERS.iter().map(|s| s.to_string()).collect()
}
