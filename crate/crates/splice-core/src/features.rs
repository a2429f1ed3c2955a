//! Natural-language term and name extraction from functions.
//!
//! Terms come from the function name, attached comments, parameter names and
//! local variable names: identifiers are split, lowercased, stop-filtered,
//! and stemmed; function-name terms are tracked separately so the indexer
//! can boost them. Names skip stemming and stop filtering entirely and form
//! a plain set for Jaccard similarity.

use std::collections::{BTreeMap, BTreeSet};

use crate::ast::{Program, Stmt, StmtKind};
use crate::ident::{split_camel, split_identifier, Dictionary};
use crate::stem::stem;

const BUNDLED_DICTIONARY: &str = include_str!("../data/dictionary.txt");
const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// Word lists driving term extraction. Queries must use the same lists the
/// index was built with; [`fingerprint`](Self::fingerprint) guards that.
#[derive(Debug, Clone)]
pub struct FeatureConfig {
    pub dictionary: Dictionary,
    pub stop_words: BTreeSet<String>,
}

impl FeatureConfig {
    pub fn bundled() -> Self {
        FeatureConfig {
            dictionary: Dictionary::from_text(BUNDLED_DICTIONARY),
            stop_words: BUNDLED_STOPWORDS
                .lines()
                .map(|w| w.trim().to_string())
                .filter(|w| !w.is_empty())
                .collect(),
        }
    }

    pub fn from_lists(dictionary_text: &str, stopwords_text: &str) -> Self {
        FeatureConfig {
            dictionary: Dictionary::from_text(dictionary_text),
            stop_words: stopwords_text
                .lines()
                .map(|w| w.trim().to_string())
                .filter(|w| !w.is_empty())
                .collect(),
        }
    }

    /// Stable hash of both word lists, stored in index files.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv::new();
        h.update(b"dict");
        for w in self.dictionary.iter() {
            h.update(w.as_bytes());
            h.update(b"\0");
        }
        h.update(b"stop");
        for w in &self.stop_words {
            h.update(w.as_bytes());
            h.update(b"\0");
        }
        h.finish()
    }
}

/// FNV-1a, 64 bit.
pub struct Fnv(u64);

impl Fnv {
    pub fn new() -> Self {
        Fnv(0xcbf29ce484222325)
    }

    pub fn update(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= *b as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for Fnv {
    fn default() -> Self {
        Self::new()
    }
}

/// Bag of stemmed terms with function-name occurrences tracked separately.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NlTerms {
    pub name_counts: BTreeMap<String, u32>,
    pub other_counts: BTreeMap<String, u32>,
}

impl NlTerms {
    /// Raw counts, name and non-name occurrences merged.
    pub fn counts(&self) -> BTreeMap<String, u32> {
        let mut out = self.other_counts.clone();
        for (term, n) in &self.name_counts {
            *out.entry(term.clone()).or_insert(0) += n;
        }
        out
    }

    /// Term frequency with the function-name boost applied: name
    /// occurrences weigh five times as much as other occurrences.
    pub fn boosted_tf(&self, term: &str) -> f64 {
        let name = self.name_counts.get(term).copied().unwrap_or(0) as f64;
        let other = self.other_counts.get(term).copied().unwrap_or(0) as f64;
        5.0 * name + other
    }

    pub fn terms(&self) -> BTreeSet<String> {
        self.name_counts
            .keys()
            .chain(self.other_counts.keys())
            .cloned()
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.name_counts.is_empty() && self.other_counts.is_empty()
    }
}

/// Split, filter and stem one raw token into zero or more terms.
fn process_token(token: &str, cfg: &FeatureConfig, out: &mut BTreeMap<String, u32>) {
    for word in split_identifier(token, &cfg.dictionary) {
        if word.chars().count() <= 1 || cfg.stop_words.contains(&word) {
            continue;
        }
        *out.entry(stem(&word)).or_insert(0) += 1;
    }
}

fn process_text(text: &str, cfg: &FeatureConfig, out: &mut BTreeMap<String, u32>) {
    for token in text.split(|c: char| !c.is_alphanumeric()) {
        if !token.is_empty() {
            process_token(token, cfg, out);
        }
    }
}

/// Declared local variable names, in source order.
fn local_var_names(p: &Program) -> Vec<String> {
    let mut names = Vec::new();
    p.walk(
        &mut |s: &Stmt| {
            if let StmtKind::Let { name, .. } = &s.node {
                names.push(name.clone());
            }
        },
        &mut |_| {},
    );
    names
}

/// NL term bag for a function and its attached comment texts.
pub fn extract_nl_terms(p: &Program, comments: &[String], cfg: &FeatureConfig) -> NlTerms {
    let mut terms = NlTerms::default();
    process_token(&p.name, cfg, &mut terms.name_counts);
    for c in comments {
        process_text(c, cfg, &mut terms.other_counts);
    }
    for (param, _) in &p.params {
        process_token(param, cfg, &mut terms.other_counts);
    }
    for var in local_var_names(p) {
        process_token(&var, cfg, &mut terms.other_counts);
    }
    terms
}

/// Name set for Jaccard similarity: function name plus all variable names,
/// split on underscore/camel boundaries and lowercased. No stemming, no stop
/// filtering, single characters kept.
pub fn extract_names(p: &Program) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut add = |token: &str| {
        for w in split_camel(token) {
            out.insert(w);
        }
    };
    add(&p.name);
    for (param, _) in &p.params {
        add(param);
    }
    for var in local_var_names(p) {
        add(&var);
    }
    out
}
