//! Draft-program completion by splicing corpus code.
//!
//! A draft is a function with `??` holes, a natural-language comment, and a
//! correctness requirement (an embedded test block or an API-call-sequence
//! automaton). The engine retrieves the k nearest corpus functions by tf-idf
//! cosine plus name Jaccard similarity, enumerates their expression and
//! statement codelets into the holes (pruned by type and syntactic role),
//! renames leftover references onto same-typed draft variables, and keeps
//! the completions that satisfy the requirement.

pub mod ast;
pub mod automaton;
pub mod codelet;
pub mod draft;
pub mod engine;
pub mod error;
pub mod features;
pub mod ident;
pub mod index;
pub mod interp;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod stem;
pub mod typeck;

pub use ast::{desugar, program_eq, ElemType, Expr, HoleId, NodeId, Program, Stmt, Type};
pub use draft::{parse_draft, Draft, Requirement, TestsReq};
pub use engine::{
    ablation_run, measure_precision, splice, SpliceConfig, SpliceOutcome, SpliceStats, Solution,
    ValidationCtx,
};
pub use error::{LangError, SyntaxError, TypeError};
pub use features::FeatureConfig;
pub use index::{build_index, knn_query, CorpusIndex, QueryWeights, SourceId};
pub use interp::{eval, run_tests, ApiTable, Limits, Value, VirtualFs};
pub use pretty::pretty_print;

use std::collections::BTreeMap;
use typeck::ApiSigs;

/// Parse one function and, when it is hole-free, type check it against the
/// signature table. Functions with holes defer hole typing to
/// [`parse_draft`].
pub fn parse_program(src: &str, sigs: &ApiSigs) -> Result<Program, LangError> {
    let program = parser::parse_program_syntax(src)?;
    if !program.has_holes() {
        typeck::check_program(&program, sigs, &BTreeMap::new(), src)?;
    }
    Ok(program)
}
