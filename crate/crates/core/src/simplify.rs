//! Traditional to simplified character normalization from a single-character table.

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("line {0}: expected `traditional<TAB>simplified[<TAB>alternates]`")]
    Malformed(usize),
    #[error("line {0}: duplicate source character {1}")]
    Duplicate(usize, char),
    #[error("mapping is not idempotent: {0} -> {1} -> {2}")]
    Chain(char, char, char),
}

/// A character that the source table maps to more than one simplified form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ambiguity {
    pub traditional: char,
    pub chosen: char,
    pub alternates: Vec<char>,
}

#[derive(Debug, Clone, Default)]
pub struct Simplifier {
    // sorted by source character
    map: Vec<(char, char)>,
    ambiguous: Vec<Ambiguity>,
}

impl Simplifier {
    /// Parses a table in the bundled TSV layout. `#` lines and blank lines
    /// are skipped. Rejects tables whose targets are themselves remapped,
    /// since those would make simplification non-idempotent.
    pub fn parse(table: &str) -> Result<Self, TableError> {
        let mut map = Vec::new();
        let mut ambiguous = Vec::new();
        for (lineno, line) in table.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let (Some(from), Some(to)) = (cols.next(), cols.next()) else {
                return Err(TableError::Malformed(lineno + 1));
            };
            let (from, to) = match (single_char(from), single_char(to)) {
                (Some(f), Some(t)) => (f, t),
                _ => return Err(TableError::Malformed(lineno + 1)),
            };
            if let Some(alts) = cols.next() {
                let alternates: Option<Vec<char>> = alts.split(',').map(single_char).collect();
                let alternates = alternates.ok_or(TableError::Malformed(lineno + 1))?;
                ambiguous.push(Ambiguity { traditional: from, chosen: to, alternates });
            }
            map.push((from, to, lineno + 1));
        }
        map.sort_by_key(|e| e.0);
        for w in map.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(TableError::Duplicate(w[1].2, w[1].0));
            }
        }
        let map: Vec<(char, char)> = map.into_iter().map(|(f, t, _)| (f, t)).collect();
        let s = Self { map, ambiguous };
        for &(f, t) in &s.map {
            let t2 = s.lookup(t);
            if t2 != t {
                return Err(TableError::Chain(f, t, t2));
            }
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Characters whose simplified form was chosen among several candidates.
    pub fn ambiguities(&self) -> &[Ambiguity] {
        &self.ambiguous
    }

    #[inline]
    pub fn lookup(&self, c: char) -> char {
        match self.map.binary_search_by_key(&c, |e| e.0) {
            Ok(i) => self.map[i].1,
            Err(_) => c,
        }
    }

    /// Replaces every mapped character; everything else passes through.
    pub fn to_simplified(&self, text: &str) -> String {
        text.chars().map(|c| self.lookup(c)).collect()
    }

    /// Ambiguous characters that occur in `text`, in first-occurrence order.
    pub fn ambiguities_in(&self, text: &str) -> Vec<&Ambiguity> {
        let mut out: Vec<&Ambiguity> = Vec::new();
        for c in text.chars() {
            if let Some(a) = self.ambiguous.iter().find(|a| a.traditional == c) {
                if !out.iter().any(|o| o.traditional == c) {
                    out.push(a);
                }
            }
        }
        out
    }
}

fn single_char(s: &str) -> Option<char> {
    let mut it = s.chars();
    let c = it.next()?;
    it.next().is_none().then_some(c)
}
