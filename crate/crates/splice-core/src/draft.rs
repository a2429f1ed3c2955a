//! Draft programs: a function with holes, a natural-language comment block,
//! and a correctness requirement (embedded tests or an API-call automaton).
//!
//! Draft file layout (`.spl`):
//!
//! ```text
//! /* COMMENT:
//!  * use sieve of eratosthenes to test primality
//!  * TEST:
//!  * __solution__
//!  * return sieve(1) == false && sieve(2) == true;
//!  */
//! boolean sieve(int num) { ... ??; ... }
//! ```
//!
//! The TEST section holds ordinary statements evaluating to a boolean via
//! `return`; `__solution__` on its own line marks where the draft function is
//! invoked implicitly. `API_cons("file.aut");` in place of TEST loads an
//! automaton constraint from a file next to the draft.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::ast::*;
use crate::automaton::{ApiAutomaton, AutomatonError};
use crate::codelet::Role;
use crate::error::{LangError, SyntaxError, TypeError};
use crate::parser::Parser;
use crate::typeck::{check_program, ApiSig, ApiSigs};

pub const SOLUTION_MARKER: &str = "__solution__";
pub const RESULT_VAR: &str = "__result__";

/// Embedded test block.
#[derive(Debug, Clone)]
pub struct TestsReq {
    /// Top-level statements of the TEST section, marker line excluded.
    pub stmts: Vec<Stmt>,
    /// Index in `stmts` where `__solution__` expands, when present.
    pub marker_index: Option<usize>,
}

impl TestsReq {
    pub fn marker_present(&self) -> bool {
        self.marker_index.is_some()
    }
}

#[derive(Debug, Clone)]
pub enum Requirement {
    Tests(TestsReq),
    Automaton(ApiAutomaton),
}

#[derive(Debug, Clone)]
pub struct Draft {
    /// Surface program, holes included.
    pub program: Program,
    /// COMMENT section verbatim.
    pub comment: String,
    /// `//` and `/* */` comments inside the draft function.
    pub inline_comments: Vec<String>,
    pub requirement: Requirement,
    pub expr_holes: Vec<HoleId>,
    pub stmt_holes: Vec<HoleId>,
    pub hole_types: BTreeMap<HoleId, Type>,
    pub hole_roles: BTreeMap<HoleId, Role>,
    /// Variables visible at each hole in declaration order (params first).
    pub hole_scopes: BTreeMap<HoleId, Vec<(String, Type)>>,
}

#[derive(Debug, Clone, Error)]
pub enum DraftError {
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error("draft has no TEST or API_cons section")]
    MissingRequirement,
    #[error("TEST block contains more than one __solution__ marker")]
    DuplicateSolutionMarker,
    #[error("draft declares both TEST and API_cons requirements")]
    ConflictingRequirement,
    #[error("drafts with an automaton requirement must be parameterless")]
    AutomatonDraftHasParams,
    #[error("cannot load automaton `{path}`: {reason}")]
    AutomatonFile { path: String, reason: String },
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

impl From<SyntaxError> for DraftError {
    fn from(e: SyntaxError) -> Self {
        DraftError::Lang(LangError::Syntax(e))
    }
}

impl From<TypeError> for DraftError {
    fn from(e: TypeError) -> Self {
        DraftError::Lang(LangError::Type(e))
    }
}

impl Draft {
    /// Desugared view of the draft program (hole ids preserved).
    pub fn desugared(&self) -> Program {
        desugar(&self.program)
    }

    /// Declared signature shared by the draft and all of its completions.
    pub fn signature(&self) -> ApiSig {
        ApiSig {
            params: self.program.params.iter().map(|(_, t)| t.clone()).collect(),
            ret: self.program.return_type.clone(),
        }
    }

    /// The unique type forced by an expression hole's context.
    pub fn infer_hole_type(&self, hole: HoleId) -> Result<&Type, NotAnExprHole> {
        if !self.expr_holes.contains(&hole) {
            return Err(NotAnExprHole(hole));
        }
        Ok(&self.hole_types[&hole])
    }
}

#[derive(Debug, Clone, Copy, Error, PartialEq)]
#[error("{0} is not an expression hole of this draft")]
pub struct NotAnExprHole(pub HoleId);

/// Parse a draft file. `base_dir` resolves `API_cons` file references.
pub fn parse_draft(text: &str, sigs: &ApiSigs, base_dir: &Path) -> Result<Draft, DraftError> {
    let (mut parser, comments) = Parser::from_source(text)?;
    let program = parser.parse_program()?;

    // Header: the block comment containing a COMMENT: section that precedes
    // the function.
    let header = comments
        .iter()
        .filter(|c| c.span.hi <= program.span.lo && c.text.contains("COMMENT:"))
        .next_back()
        .ok_or(DraftError::MissingRequirement)?;
    let header_span = header.span;
    let header_text = strip_comment_decoration(&header.text);

    let (comment, requirement) = parse_header(&header_text, base_dir)?;

    let inline_comments = comments
        .iter()
        .filter(|c| c.span != header_span)
        .map(|c| c.text.clone())
        .collect();

    // Elaborate on the desugared program: infer hole types, roles and scopes.
    let desugared = desugar(&program);
    let check = check_program(&desugared, sigs, &BTreeMap::new(), text)?;
    let (expr_holes, stmt_holes) = program.holes();

    if matches!(requirement, Requirement::Automaton(_)) && !program.params.is_empty() {
        return Err(DraftError::AutomatonDraftHasParams);
    }

    let draft = Draft {
        program,
        comment,
        inline_comments,
        requirement,
        expr_holes,
        stmt_holes,
        hole_types: check.hole_types,
        hole_roles: check.hole_roles,
        hole_scopes: check.hole_scopes,
    };

    // Tests must type check once the marker expands against the draft's own
    // signature; surface author mistakes here rather than at search time.
    if let Requirement::Tests(tests) = &draft.requirement {
        let harness = build_test_harness(&draft.program, tests);
        let mut extra = BTreeMap::new();
        extra.insert(draft.program.name.clone(), draft.signature());
        check_program(&harness, sigs, &extra, "").map_err(|e| {
            DraftError::Lang(LangError::Type(TypeError {
                message: format!("in TEST block: {}", e.message),
                line: e.line,
                col: e.col,
            }))
        })?;
    }

    Ok(draft)
}

/// Strip per-line `*` decorations used inside block-comment headers.
fn strip_comment_decoration(text: &str) -> String {
    text.lines()
        .map(|line| {
            let t = line.trim_start();
            let t = t.strip_prefix('*').unwrap_or(t);
            t.strip_prefix(' ').unwrap_or(t)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn parse_header(header: &str, base_dir: &Path) -> Result<(String, Requirement), DraftError> {
    let lines: Vec<&str> = header.lines().collect();
    let comment_at = lines
        .iter()
        .position(|l| l.trim_start().starts_with("COMMENT:"))
        .ok_or(DraftError::MissingRequirement)?;
    let test_at = lines.iter().position(|l| l.trim_start().starts_with("TEST:"));
    let cons_at = lines.iter().position(|l| l.contains("API_cons("));
    if test_at.is_some() && cons_at.is_some() {
        return Err(DraftError::ConflictingRequirement);
    }

    let boundary = test_at.or(cons_at).ok_or(DraftError::MissingRequirement)?;
    let mut comment_lines: Vec<&str> = Vec::new();
    let first = lines[comment_at].trim_start().trim_start_matches("COMMENT:");
    if !first.trim().is_empty() {
        comment_lines.push(first.trim());
    }
    for l in &lines[comment_at + 1..boundary] {
        comment_lines.push(l);
    }
    let comment = comment_lines.join("\n").trim().to_string();

    if let Some(at) = cons_at {
        let line = lines[at];
        let path = line
            .split('"')
            .nth(1)
            .ok_or_else(|| DraftError::AutomatonFile {
                path: line.trim().to_string(),
                reason: "expected API_cons(\"file.aut\");".into(),
            })?;
        let full = base_dir.join(path);
        let text = std::fs::read_to_string(&full).map_err(|e| DraftError::AutomatonFile {
            path: full.display().to_string(),
            reason: e.to_string(),
        })?;
        let automaton = ApiAutomaton::parse(&text)?;
        return Ok((comment, Requirement::Automaton(automaton)));
    }

    let test_at = test_at.expect("boundary was TEST");
    let mut test_lines: Vec<String> = Vec::new();
    let first = lines[test_at].trim_start().trim_start_matches("TEST:");
    if !first.trim().is_empty() {
        test_lines.push(first.to_string());
    }
    for l in &lines[test_at + 1..] {
        test_lines.push(l.to_string());
    }

    let mut before = String::new();
    let mut after = String::new();
    let mut markers = 0usize;
    for line in &test_lines {
        if line.trim() == SOLUTION_MARKER {
            markers += 1;
            continue;
        }
        if markers == 0 {
            before.push_str(line);
            before.push('\n');
        } else {
            after.push_str(line);
            after.push('\n');
        }
    }
    if markers > 1 {
        return Err(DraftError::DuplicateSolutionMarker);
    }

    let parse_stmts = |src: &str| -> Result<Vec<Stmt>, DraftError> {
        let (mut p, _) = Parser::from_source(src).map_err(|e| SyntaxError {
            message: format!("in TEST block: {}", e.message),
            line: e.line,
            col: e.col,
        })?;
        p.parse_stmt_list().map_err(|e| {
            DraftError::from(SyntaxError {
                message: format!("in TEST block: {}", e.message),
                line: e.line,
                col: e.col,
            })
        })
    };

    let before_stmts = parse_stmts(&before)?;
    let marker_index = (markers == 1).then_some(before_stmts.len());
    let mut stmts = before_stmts;
    stmts.extend(parse_stmts(&after)?);

    Ok((comment, Requirement::Tests(TestsReq { stmts, marker_index })))
}

/// Build the executable test program for a candidate completion.
///
/// At the marker, when every candidate parameter name is bound by a `let`
/// earlier in the test block, `__solution__` becomes an invocation by name;
/// a non-void result is bound to `__result__`. Otherwise the marker expands
/// to nothing and the tests must call the function explicitly.
pub fn build_test_harness(candidate: &Program, tests: &TestsReq) -> Program {
    let mut stmts = tests.stmts.clone();
    if let Some(at) = tests.marker_index {
        let mut bound: Vec<&str> = Vec::new();
        for s in &stmts[..at] {
            if let StmtKind::Let { name, .. } = &s.node {
                bound.push(name);
            }
        }
        let all_bound = candidate
            .params
            .iter()
            .all(|(name, _)| bound.contains(&name.as_str()));
        if all_bound {
            let synth = |node: ExprKind| Expr {
                node,
                span: Span::default(),
                id: NodeId(0),
            };
            let call = synth(ExprKind::Call(
                candidate.name.clone(),
                candidate
                    .params
                    .iter()
                    .map(|(name, _)| synth(ExprKind::Var(name.clone())))
                    .collect(),
            ));
            let stmt = if candidate.return_type == Type::Unit {
                StmtKind::Expr(call)
            } else {
                StmtKind::Let {
                    name: RESULT_VAR.to_string(),
                    ty: candidate.return_type.clone(),
                    init: call,
                }
            };
            stmts.insert(
                at,
                Stmt {
                    node: stmt,
                    span: Span::default(),
                    id: NodeId(0),
                },
            );
        }
    }
    let body = Stmt {
        node: StmtKind::Block(stmts),
        span: Span::default(),
        id: NodeId(0),
    };
    let mut harness = Program {
        name: "__tests__".to_string(),
        params: Vec::new(),
        return_type: Type::Bool,
        body,
        span: Span::default(),
    };
    harness.renumber();
    harness
}
