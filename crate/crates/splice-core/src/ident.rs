//! Identifier-to-word splitting: underscore, camel-case and digit boundaries,
//! plus greedy dictionary decomposition for glued-together words.

use std::collections::BTreeSet;

/// Word list backing the greedy splitter, bundled with the crate.
#[derive(Debug, Clone, Default)]
pub struct Dictionary {
    words: BTreeSet<String>,
    max_len: usize,
}

impl Dictionary {
    pub fn from_words<I: IntoIterator<Item = String>>(words: I) -> Self {
        let words: BTreeSet<String> = words
            .into_iter()
            .map(|w| w.trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        let max_len = words.iter().map(|w| w.len()).max().unwrap_or(0);
        Dictionary { words, max_len }
    }

    pub fn from_text(text: &str) -> Self {
        Self::from_words(text.lines().map(str::to_string))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(|s| s.as_str())
    }
}

/// Split on underscores, camel-case boundaries and digit boundaries, then
/// lowercase. `HTTPServer2go` -> `["http", "server", "2", "go"]`.
pub fn split_camel(token: &str) -> Vec<String> {
    let chars: Vec<char> = token.chars().collect();
    let mut words = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if !c.is_alphanumeric() {
            flush(&mut words, &mut current);
            continue;
        }
        if !current.is_empty() {
            let prev = chars[i - 1];
            let boundary = (prev.is_lowercase() && c.is_uppercase())
                || (prev.is_alphabetic() && c.is_ascii_digit())
                || (prev.is_ascii_digit() && c.is_alphabetic())
                // end of an upper-case run followed by a lower-case letter:
                // the last upper letter starts the new word (HTTPServer)
                || (prev.is_uppercase()
                    && c.is_lowercase()
                    && current.chars().count() > 1);
            if boundary {
                if prev.is_uppercase() && c.is_lowercase() {
                    let moved = current.pop().expect("non-empty");
                    flush(&mut words, &mut current);
                    current.push(moved);
                } else {
                    flush(&mut words, &mut current);
                }
            }
        }
        current.push(c);
    }
    flush(&mut words, &mut current);
    words
}

fn flush(words: &mut Vec<String>, current: &mut String) {
    if !current.is_empty() {
        words.push(current.to_lowercase());
        current.clear();
    }
}

/// Full splitting pipeline: camel/underscore/digit boundaries, then any chunk
/// missing from the dictionary is greedily re-split left-to-right into the
/// longest dictionary prefixes; an unsplittable residue is kept verbatim.
pub fn split_identifier(token: &str, dict: &Dictionary) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in split_camel(token) {
        if chunk.len() <= 1 || dict.contains(&chunk) {
            out.push(chunk);
            continue;
        }
        greedy_split(&chunk, dict, &mut out);
    }
    out
}

fn greedy_split(chunk: &str, dict: &Dictionary, out: &mut Vec<String>) {
    let mut pos = 0;
    let bytes = chunk.as_bytes();
    while pos < bytes.len() {
        let longest = (1..=(bytes.len() - pos).min(dict.max_len))
            .rev()
            .map(|len| &chunk[pos..pos + len])
            .find(|prefix| dict.contains(*prefix));
        match longest {
            Some(word) => {
                out.push(word.to_string());
                pos += word.len();
            }
            None => {
                // residue kept verbatim
                out.push(chunk[pos..].to_string());
                return;
            }
        }
    }
}
