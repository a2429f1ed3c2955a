//! Corpus feature index: tf-idf weighted NL terms with a function-name
//! boost, plus identifier-name sets, persisted in a line-oriented text file
//! and queried with weighted k-nearest-neighbor search.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::ast::Program;
use crate::draft::Draft;
use crate::features::{extract_names, extract_nl_terms, FeatureConfig, NlTerms};
use crate::parser::{parse_functions, parse_program_syntax};
use crate::typeck::{check_program, ApiSigs};

/// Stable ingestion-order id of a corpus function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SourceId(pub u32);

impl fmt::Display for SourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone)]
pub struct FeatureVector {
    /// tf-idf weight per stemmed term; name-term tf is boosted 5x.
    pub nl_weights: BTreeMap<String, f64>,
    /// Normalized identifier words for Jaccard similarity.
    pub names: BTreeSet<String>,
    pub source: SourceId,
}

#[derive(Debug, Clone)]
pub struct IndexEntry {
    pub source: SourceId,
    pub feature: FeatureVector,
    pub program: Program,
    /// Where the function came from: file path plus byte offsets.
    pub path: PathBuf,
    pub span: (u32, u32),
}

#[derive(Debug)]
pub struct CorpusIndex {
    pub entries: Vec<IndexEntry>,
    pub doc_freq: BTreeMap<String, u32>,
    pub config: FeatureConfig,
}

/// Relative importance of the NL-term and name features; must sum to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryWeights {
    w_nl: f64,
    w_names: f64,
}

impl QueryWeights {
    pub fn new(w_nl: f64, w_names: f64) -> Result<Self, IndexError> {
        if !(w_nl >= 0.0 && w_names >= 0.0 && (w_nl + w_names - 1.0).abs() < 1e-9) {
            return Err(IndexError::InvalidWeights);
        }
        Ok(QueryWeights { w_nl, w_names })
    }

    pub fn nl(&self) -> f64 {
        self.w_nl
    }

    pub fn names(&self) -> f64 {
        self.w_names
    }
}

impl Default for QueryWeights {
    fn default() -> Self {
        QueryWeights {
            w_nl: 0.8,
            w_names: 0.2,
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum IndexError {
    #[error("cannot access `{path}`: {reason}")]
    Io { path: String, reason: String },
    #[error("bad index file, line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("index was built with different dictionary or stop-word lists")]
    DictionaryMismatch,
    #[error("the corpus index is empty")]
    EmptyIndex,
    #[error("feature weights must be non-negative and sum to 1")]
    InvalidWeights,
}

/// A corpus function that failed ingestion and was skipped.
#[derive(Debug, Clone)]
pub struct IngestDiagnostic {
    pub file: PathBuf,
    pub reason: String,
}

const FORMAT_HEADER: &str = "spliceidx v1";

fn io_err(path: &Path, e: impl ToString) -> IndexError {
    IndexError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

/// Ingest every `.spl` file of `corpus_dir` (sorted by file name), skipping
/// functions that fail to parse or type check.
pub fn build_index(
    corpus_dir: &Path,
    sigs: &ApiSigs,
    config: FeatureConfig,
) -> Result<(CorpusIndex, Vec<IngestDiagnostic>), IndexError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(corpus_dir)
        .map_err(|e| io_err(corpus_dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "spl"))
        .collect();
    files.sort();

    let mut diagnostics = Vec::new();
    let mut ingested: Vec<(Program, Vec<String>, PathBuf, (u32, u32))> = Vec::new();
    for file in files {
        let file = file.canonicalize().map_err(|e| io_err(&file, e))?;
        let text = std::fs::read_to_string(&file).map_err(|e| io_err(&file, e))?;
        let (functions, errors) = match parse_functions(&text) {
            Ok(r) => r,
            Err(e) => {
                diagnostics.push(IngestDiagnostic {
                    file: file.clone(),
                    reason: e.to_string(),
                });
                continue;
            }
        };
        for e in errors {
            diagnostics.push(IngestDiagnostic {
                file: file.clone(),
                reason: e,
            });
        }
        for f in functions {
            if f.program.has_holes() {
                diagnostics.push(IngestDiagnostic {
                    file: file.clone(),
                    reason: format!("`{}` contains holes", f.program.name),
                });
                continue;
            }
            if let Err(e) = check_program(&f.program, sigs, &BTreeMap::new(), &text) {
                diagnostics.push(IngestDiagnostic {
                    file: file.clone(),
                    reason: format!("`{}`: {e}", f.program.name),
                });
                continue;
            }
            ingested.push((
                f.program,
                f.comments,
                file.clone(),
                (f.span.lo, f.span.hi),
            ));
        }
    }

    let terms: Vec<NlTerms> = ingested
        .iter()
        .map(|(p, comments, _, _)| extract_nl_terms(p, comments, &config))
        .collect();
    let doc_freq = document_frequencies(&terms);
    let ndocs = ingested.len();

    let entries = ingested
        .into_iter()
        .zip(terms)
        .enumerate()
        .map(|(i, ((program, _comments, path, span), t))| {
            let source = SourceId(i as u32);
            IndexEntry {
                source,
                feature: FeatureVector {
                    nl_weights: weigh(&t, &doc_freq, ndocs),
                    names: extract_names(&program),
                    source,
                },
                program,
                path,
                span,
            }
        })
        .collect();

    Ok((
        CorpusIndex {
            entries,
            doc_freq,
            config,
        },
        diagnostics,
    ))
}

fn document_frequencies(all_terms: &[NlTerms]) -> BTreeMap<String, u32> {
    let mut df = BTreeMap::new();
    for t in all_terms {
        for term in t.terms() {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    df
}

fn idf(df: u32, ndocs: usize) -> f64 {
    (ndocs as f64 / df as f64).ln()
}

fn weigh(terms: &NlTerms, doc_freq: &BTreeMap<String, u32>, ndocs: usize) -> BTreeMap<String, f64> {
    terms
        .terms()
        .into_iter()
        .map(|term| {
            let tf = terms.boosted_tf(&term);
            let df = doc_freq.get(&term).copied().unwrap_or(0);
            let w = if df == 0 { 0.0 } else { tf * idf(df, ndocs) };
            (term, w)
        })
        .collect()
}

impl CorpusIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: SourceId) -> Option<&IndexEntry> {
        self.entries.get(id.0 as usize)
    }

    /// Query features for a draft, weighted against this index's document
    /// frequencies. Terms unseen in the corpus carry no weight and are
    /// dropped; holes contribute nothing.
    pub fn draft_features(&self, draft: &Draft) -> (BTreeMap<String, f64>, BTreeSet<String>) {
        let mut comments = vec![draft.comment.clone()];
        comments.extend(draft.inline_comments.iter().cloned());
        let terms = extract_nl_terms(&draft.program, &comments, &self.config);
        let ndocs = self.len();
        let weights = terms
            .terms()
            .into_iter()
            .filter_map(|term| {
                let df = self.doc_freq.get(&term).copied()?;
                Some((term.clone(), terms.boosted_tf(&term) * idf(df, ndocs)))
            })
            .collect();
        (weights, extract_names(&draft.program))
    }

    pub fn save(&self, path: &Path) -> Result<(), IndexError> {
        let mut out = String::new();
        out.push_str(FORMAT_HEADER);
        out.push('\n');
        out.push_str(&format!("ndocs {}\n", self.entries.len()));
        out.push_str(&format!("dict {:016x}\n", self.config.fingerprint()));
        for (term, df) in &self.doc_freq {
            out.push_str(&format!("df {term} {df}\n"));
        }
        for e in &self.entries {
            out.push_str(&format!(
                "entry {} {} {} {}\n",
                e.source,
                e.span.0,
                e.span.1,
                e.path.display()
            ));
            for (term, w) in &e.feature.nl_weights {
                out.push_str(&format!("nl {term} {:016x}\n", w.to_bits()));
            }
            out.push_str("names");
            for n in &e.feature.names {
                out.push(' ');
                out.push_str(n);
            }
            out.push('\n');
            out.push_str("end\n");
        }
        std::fs::write(path, out).map_err(|e| io_err(path, e))
    }

    /// Load a saved index. Functions are re-read from their recorded source
    /// paths; feature weights come from the file bit-exactly.
    pub fn load(path: &Path, config: FeatureConfig) -> Result<CorpusIndex, IndexError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let fmt_err = |line: usize, message: String| IndexError::Format { line, message };
        let mut lines = text.lines().enumerate();

        let (_, header) = lines
            .next()
            .ok_or_else(|| fmt_err(1, "empty file".into()))?;
        if header != FORMAT_HEADER {
            return Err(fmt_err(1, format!("unknown header `{header}`")));
        }

        let mut doc_freq = BTreeMap::new();
        let mut entries: Vec<IndexEntry> = Vec::new();
        let mut current: Option<(IndexEntry, usize)> = None;
        let mut sources: BTreeMap<PathBuf, String> = BTreeMap::new();

        for (n, raw) in lines {
            let lineno = n + 1;
            let (key, rest) = raw.split_once(' ').unwrap_or((raw, ""));
            match key {
                "ndocs" => {}
                "dict" => {
                    let hash = u64::from_str_radix(rest.trim(), 16)
                        .map_err(|e| fmt_err(lineno, e.to_string()))?;
                    if hash != config.fingerprint() {
                        return Err(IndexError::DictionaryMismatch);
                    }
                }
                "df" => {
                    let (term, count) = rest
                        .split_once(' ')
                        .ok_or_else(|| fmt_err(lineno, "bad df line".into()))?;
                    let count: u32 = count
                        .trim()
                        .parse()
                        .map_err(|_| fmt_err(lineno, "bad df count".into()))?;
                    doc_freq.insert(term.to_string(), count);
                }
                "entry" => {
                    if current.is_some() {
                        return Err(fmt_err(lineno, "entry before previous end".into()));
                    }
                    let parts: Vec<&str> = rest.splitn(4, ' ').collect();
                    if parts.len() != 4 {
                        return Err(fmt_err(lineno, "bad entry line".into()));
                    }
                    let id: u32 = parts[0]
                        .parse()
                        .map_err(|_| fmt_err(lineno, "bad source id".into()))?;
                    let lo: u32 = parts[1]
                        .parse()
                        .map_err(|_| fmt_err(lineno, "bad offset".into()))?;
                    let hi: u32 = parts[2]
                        .parse()
                        .map_err(|_| fmt_err(lineno, "bad offset".into()))?;
                    let path = PathBuf::from(parts[3]);
                    let text = match sources.get(&path) {
                        Some(t) => t.clone(),
                        None => {
                            let t =
                                std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
                            sources.insert(path.clone(), t.clone());
                            t
                        }
                    };
                    let slice = text.get(lo as usize..hi as usize).ok_or_else(|| {
                        fmt_err(lineno, "source file shorter than recorded span".into())
                    })?;
                    let program = parse_program_syntax(slice)
                        .map_err(|e| fmt_err(lineno, format!("re-parse failed: {e}")))?;
                    let source = SourceId(id);
                    current = Some((
                        IndexEntry {
                            source,
                            feature: FeatureVector {
                                nl_weights: BTreeMap::new(),
                                names: BTreeSet::new(),
                                source,
                            },
                            program,
                            path,
                            span: (lo, hi),
                        },
                        lineno,
                    ));
                }
                "nl" => {
                    let (term, bits) = rest
                        .split_once(' ')
                        .ok_or_else(|| fmt_err(lineno, "bad nl line".into()))?;
                    let bits = u64::from_str_radix(bits.trim(), 16)
                        .map_err(|e| fmt_err(lineno, e.to_string()))?;
                    let (entry, _) = current
                        .as_mut()
                        .ok_or_else(|| fmt_err(lineno, "nl outside entry".into()))?;
                    entry
                        .feature
                        .nl_weights
                        .insert(term.to_string(), f64::from_bits(bits));
                }
                "names" => {
                    let (entry, _) = current
                        .as_mut()
                        .ok_or_else(|| fmt_err(lineno, "names outside entry".into()))?;
                    entry.feature.names =
                        rest.split_whitespace().map(str::to_string).collect();
                }
                "end" => {
                    let (entry, _) = current
                        .take()
                        .ok_or_else(|| fmt_err(lineno, "end outside entry".into()))?;
                    entries.push(entry);
                }
                other => return Err(fmt_err(lineno, format!("unknown record `{other}`"))),
            }
        }
        if current.is_some() {
            return Err(IndexError::Format {
                line: 0,
                message: "unterminated entry".into(),
            });
        }
        Ok(CorpusIndex {
            entries,
            doc_freq,
            config,
        })
    }
}

/// Cosine similarity of two weighted term vectors; 0 when either is zero.
pub fn cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let mut dot = 0.0;
    let mut norm_a = 0.0;
    for (term, wa) in a {
        norm_a += wa * wa;
        if let Some(wb) = b.get(term) {
            dot += wa * wb;
        }
    }
    let mut norm_b = 0.0;
    for wb in b.values() {
        norm_b += wb * wb;
    }
    if norm_a == 0.0 || norm_b == 0.0 {
        return 0.0;
    }
    dot / (norm_a.sqrt() * norm_b.sqrt())
}

/// Jaccard index of two name sets; 0 when both are empty.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let inter = a.intersection(b).count() as f64;
    let union = a.union(b).count() as f64;
    inter / union
}

/// Top-k corpus entries for a draft query: score = wNL*cosine + wNames*jaccard,
/// descending, ties broken by ascending source id.
pub fn knn_query(
    index: &CorpusIndex,
    draft: &Draft,
    k: usize,
    w: &QueryWeights,
) -> Result<Vec<(SourceId, f64)>, IndexError> {
    if index.is_empty() {
        return Err(IndexError::EmptyIndex);
    }
    let (q_nl, q_names) = index.draft_features(draft);
    let mut scored: Vec<(SourceId, f64)> = index
        .entries
        .iter()
        .map(|e| {
            let s = w.nl() * cosine(&q_nl, &e.feature.nl_weights)
                + w.names() * jaccard(&q_names, &e.feature.names);
            (e.source, s)
        })
        .collect();
    scored.sort_by(|(ida, sa), (idb, sb)| {
        sb.partial_cmp(sa)
            .expect("scores are finite")
            .then(ida.cmp(idb))
    });
    scored.truncate(k);
    Ok(scored)
}
