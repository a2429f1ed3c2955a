//! The synthesis core: enumerative hole filling over donor codelets with
//! type/role pruning, reference-renaming merge, requirement validation,
//! ranking, and per-donor parallel orchestration.

use std::collections::BTreeMap;
use std::ops::ControlFlow;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::ast::*;
use crate::automaton::ApiAutomaton;
use crate::codelet::{
    adapt_constants, extract_expr_codelets, extract_stmt_codelets, rename_free_expr,
    rename_free_stmts, Codelet, Origin,
};
use crate::draft::{Draft, Requirement};
use crate::error::TypeError;
use crate::index::{knn_query, CorpusIndex, IndexError, QueryWeights, SourceId};
use crate::interp::{eval, run_tests, ApiTable, Limits, VirtualFs};
use crate::pretty::{pretty_expr, pretty_stmt};
use crate::typeck::{check_program, ApiSigs};

#[derive(Debug, Clone)]
pub struct SpliceConfig {
    /// Donors retrieved per query.
    pub k: usize,
    pub weights: QueryWeights,
    pub max_solutions: usize,
    /// Budget for the whole search; partial results are returned on expiry.
    pub search_time_limit: Duration,
    /// Limits applied to each candidate execution.
    pub test_limits: Limits,
    pub type_matching: bool,
    pub role_matching: bool,
    pub constant_adaptation: bool,
    /// Cap on `adapt_constants` variants per codelet (base included).
    pub adapt_budget: usize,
    /// Longest statement window extracted from donors.
    pub max_window: usize,
    /// Worker threads for per-donor tasks; 0 means machine parallelism.
    pub workers: usize,
}

impl Default for SpliceConfig {
    fn default() -> Self {
        SpliceConfig {
            k: 5,
            weights: QueryWeights::default(),
            max_solutions: 3,
            search_time_limit: Duration::from_secs(300),
            test_limits: Limits::default(),
            type_matching: true,
            role_matching: true,
            constant_adaptation: false,
            adapt_budget: 16,
            max_window: 8,
            workers: 0,
        }
    }
}

/// A complete (hole-free) instantiation of the draft with one donor's
/// codelets, prior to reference renaming.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub program: Program,
    pub donor: SourceId,
    pub substitutions: BTreeMap<HoleId, Origin>,
    /// The codelet assigned to each hole; merge renames within these.
    pub assignment: BTreeMap<HoleId, Codelet>,
}

/// A validated completion.
#[derive(Debug, Clone)]
pub struct Solution {
    pub program: Program,
    pub donor: SourceId,
    pub donor_rank: usize,
    pub discovery_order: usize,
    pub renamings: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default)]
pub struct SpliceStats {
    /// Complete hole assignments handed to merge.
    pub candidates_evaluated: u64,
    /// Requirement validations actually executed.
    pub tests_run: u64,
    pub wall_time: Duration,
}

impl SpliceStats {
    fn absorb(&mut self, other: &SpliceStats) {
        self.candidates_evaluated += other.candidates_evaluated;
        self.tests_run += other.tests_run;
    }
}

#[derive(Debug)]
pub struct SpliceOutcome {
    pub solutions: Vec<Solution>,
    pub stats: SpliceStats,
    pub timed_out: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("codelet kind does not match hole kind")]
pub struct KindMismatch;

/// Why an enumeration stopped early.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stop {
    Timeout,
    Enough,
}

/// Pruning check for one codelet against one hole. Expression holes demand
/// matching type (and role, when enabled); statement holes accept any
/// window, deferring reference typing to merge.
pub fn valid(
    draft: &Draft,
    hole: HoleId,
    c: &Codelet,
    cfg: &SpliceConfig,
) -> Result<bool, KindMismatch> {
    match c {
        Codelet::Expr(ec) => {
            if !draft.expr_holes.contains(&hole) {
                return Err(KindMismatch);
            }
            if cfg.type_matching && ec.ty != draft.hole_types[&hole] {
                return Ok(false);
            }
            if cfg.role_matching && ec.role != draft.hole_roles[&hole] {
                return Ok(false);
            }
            Ok(true)
        }
        Codelet::Stmts(sc) => {
            if !draft.stmt_holes.contains(&hole) {
                return Err(KindMismatch);
            }
            Ok(!sc.stmts.is_empty())
        }
    }
}

/// Codelets mined from one donor, ready for filling.
#[derive(Debug, Clone)]
pub struct DonorCodelets {
    pub source: SourceId,
    pub donor_name: String,
    pub exprs: Vec<crate::codelet::ExprCodelet>,
    pub stmts: Vec<crate::codelet::StmtCodelet>,
}

pub fn donor_codelets(
    donor: &Program,
    source: SourceId,
    sigs: &ApiSigs,
    max_window: usize,
) -> Result<DonorCodelets, TypeError> {
    let desugared = desugar(donor);
    Ok(DonorCodelets {
        source,
        donor_name: donor.name.clone(),
        exprs: extract_expr_codelets(&desugared, source, sigs)?,
        stmts: extract_stmt_codelets(&desugared, source, sigs, max_window)?,
    })
}

fn dedup_key(c: &Codelet) -> String {
    match c {
        Codelet::Expr(ec) => format!(
            "E|{}|{}|{:?}|{:?}",
            pretty_expr(&ec.expr),
            ec.ty,
            ec.role,
            ec.free_vars
        ),
        Codelet::Stmts(sc) => {
            let body: String = sc.stmts.iter().map(pretty_stmt).collect();
            format!("S|{body}|{:?}", sc.free_vars)
        }
    }
}

/// Candidate codelets per hole, in enumeration order (ascending size), with
/// structural duplicates removed and constant-adaptation variants expanded.
fn hole_candidate_lists(
    draft: &Draft,
    donor: &DonorCodelets,
    cfg: &SpliceConfig,
) -> Vec<(HoleId, Vec<Codelet>)> {
    let mut holes: Vec<HoleId> = draft
        .expr_holes
        .iter()
        .chain(draft.stmt_holes.iter())
        .copied()
        .collect();
    holes.sort();

    let self_call_ok = donor.donor_name == draft.program.name;
    holes
        .into_iter()
        .map(|hole| {
            let mut list: Vec<Codelet> = Vec::new();
            let mut seen = std::collections::BTreeSet::new();
            let pool: Vec<Codelet> = if draft.expr_holes.contains(&hole) {
                donor.exprs.iter().cloned().map(Codelet::Expr).collect()
            } else {
                donor.stmts.iter().cloned().map(Codelet::Stmts).collect()
            };
            for c in pool {
                if c.calls_self() && !self_call_ok {
                    continue;
                }
                if !valid(draft, hole, &c, cfg).unwrap_or(false) {
                    continue;
                }
                if !seen.insert(dedup_key(&c)) {
                    continue;
                }
                if cfg.constant_adaptation {
                    list.extend(adapt_constants(&c, draft, hole, cfg.adapt_budget));
                } else {
                    list.push(c);
                }
            }
            (hole, list)
        })
        .collect()
}

/// Depth-first enumeration of complete hole assignments, holes in source
/// order, codelets smallest-first. Yields one candidate per assignment; a
/// hole-free draft yields exactly the draft itself.
fn fill_visit(
    draft: &Draft,
    desugared_draft: &Program,
    donor: &DonorCodelets,
    cfg: &SpliceConfig,
    visit: &mut dyn FnMut(Candidate) -> ControlFlow<Stop>,
) -> ControlFlow<Stop> {
    let lists = hole_candidate_lists(draft, donor, cfg);
    let mut assignment: BTreeMap<HoleId, Codelet> = BTreeMap::new();
    fill_dfs(0, &lists, desugared_draft, donor, &mut assignment, visit)
}

fn fill_dfs(
    depth: usize,
    lists: &[(HoleId, Vec<Codelet>)],
    base: &Program,
    donor: &DonorCodelets,
    assignment: &mut BTreeMap<HoleId, Codelet>,
    visit: &mut dyn FnMut(Candidate) -> ControlFlow<Stop>,
) -> ControlFlow<Stop> {
    if depth == lists.len() {
        let program = instantiate(base, assignment, &BTreeMap::new());
        let substitutions = assignment
            .iter()
            .map(|(h, c)| (*h, c.origin()))
            .collect();
        return visit(Candidate {
            program,
            donor: donor.source,
            substitutions,
            assignment: assignment.clone(),
        });
    }
    let (hole, list) = &lists[depth];
    for c in list {
        assignment.insert(*hole, c.clone());
        fill_dfs(depth + 1, lists, base, donor, assignment, visit)?;
    }
    assignment.remove(hole);
    ControlFlow::Continue(())
}

/// Collect every candidate for one donor (testing/inspection convenience).
pub fn fill(
    draft: &Draft,
    donor: &Program,
    source: SourceId,
    cfg: &SpliceConfig,
    sigs: &ApiSigs,
) -> Result<Vec<Candidate>, TypeError> {
    let codelets = donor_codelets(donor, source, sigs, cfg.max_window)?;
    let desugared = draft.desugared();
    let mut out = Vec::new();
    let flow = fill_visit(draft, &desugared, &codelets, cfg, &mut |c| {
        out.push(c);
        ControlFlow::Continue(())
    });
    debug_assert!(flow.is_continue());
    Ok(out)
}

/// Rebuild a (desugared) draft program with holes replaced by assigned
/// codelets; `renames` holds a per-hole substitution applied to each
/// codelet's free variables.
pub fn instantiate(
    base: &Program,
    assignment: &BTreeMap<HoleId, Codelet>,
    renames: &BTreeMap<HoleId, BTreeMap<String, String>>,
) -> Program {
    let mut program = base.clone();
    program.body = splice_stmt(&program.body, assignment, renames);
    program.renumber();
    program
}

fn splice_stmt(
    s: &Stmt,
    assignment: &BTreeMap<HoleId, Codelet>,
    renames: &BTreeMap<HoleId, BTreeMap<String, String>>,
) -> Stmt {
    let node = match &s.node {
        StmtKind::Block(stmts) => {
            let mut out = Vec::new();
            for st in stmts {
                if let StmtKind::Hole(h) = &st.node {
                    if let Some(Codelet::Stmts(sc)) = assignment.get(h) {
                        let mut window = sc.stmts.clone();
                        if let Some(map) = renames.get(h) {
                            rename_free_stmts(&mut window, map);
                        }
                        out.extend(window);
                        continue;
                    }
                }
                out.push(splice_stmt(st, assignment, renames));
            }
            StmtKind::Block(out)
        }
        StmtKind::Let { name, ty, init } => StmtKind::Let {
            name: name.clone(),
            ty: ty.clone(),
            init: splice_expr(init, assignment, renames),
        },
        StmtKind::Expr(e) => StmtKind::Expr(splice_expr(e, assignment, renames)),
        StmtKind::If { guard, then, els } => StmtKind::If {
            guard: splice_expr(guard, assignment, renames),
            then: Box::new(splice_stmt(then, assignment, renames)),
            els: els
                .as_ref()
                .map(|e| Box::new(splice_stmt(e, assignment, renames))),
        },
        StmtKind::While { guard, body } => StmtKind::While {
            guard: splice_expr(guard, assignment, renames),
            body: Box::new(splice_stmt(body, assignment, renames)),
        },
        StmtKind::For {
            init,
            guard,
            step,
            body,
        } => StmtKind::For {
            init: Box::new(splice_stmt(init, assignment, renames)),
            guard: splice_expr(guard, assignment, renames),
            step: splice_expr(step, assignment, renames),
            body: Box::new(splice_stmt(body, assignment, renames)),
        },
        StmtKind::Return(e) => {
            StmtKind::Return(e.as_ref().map(|x| splice_expr(x, assignment, renames)))
        }
        StmtKind::Hole(h) => StmtKind::Hole(*h), // statement hole without assignment
    };
    Stmt {
        node,
        span: s.span,
        id: s.id,
    }
}

fn splice_expr(
    e: &Expr,
    assignment: &BTreeMap<HoleId, Codelet>,
    renames: &BTreeMap<HoleId, BTreeMap<String, String>>,
) -> Expr {
    if let ExprKind::Hole(h) = &e.node {
        if let Some(Codelet::Expr(ec)) = assignment.get(h) {
            let mut expr = ec.expr.clone();
            if let Some(map) = renames.get(h) {
                rename_free_expr(&mut expr, map);
            }
            return expr;
        }
        return e.clone();
    }
    let node = match &e.node {
        ExprKind::Var(_)
        | ExprKind::ConstInt(_)
        | ExprKind::ConstBool(_)
        | ExprKind::ConstStr(_)
        | ExprKind::Hole(_) => e.node.clone(),
        ExprKind::Binop(op, a, b) => ExprKind::Binop(
            *op,
            Box::new(splice_expr(a, assignment, renames)),
            Box::new(splice_expr(b, assignment, renames)),
        ),
        ExprKind::Unop(op, x) => ExprKind::Unop(*op, Box::new(splice_expr(x, assignment, renames))),
        ExprKind::Length(x) => ExprKind::Length(Box::new(splice_expr(x, assignment, renames))),
        ExprKind::Call(f, args) => ExprKind::Call(
            f.clone(),
            args.iter()
                .map(|a| splice_expr(a, assignment, renames))
                .collect(),
        ),
        ExprKind::Assign(l, r) => ExprKind::Assign(
            Box::new(splice_expr(l, assignment, renames)),
            Box::new(splice_expr(r, assignment, renames)),
        ),
        ExprKind::Index(b, idxs) => ExprKind::Index(
            Box::new(splice_expr(b, assignment, renames)),
            idxs.iter()
                .map(|i| splice_expr(i, assignment, renames))
                .collect(),
        ),
        ExprKind::NewArray(t, dims) => ExprKind::NewArray(
            t.clone(),
            dims.iter()
                .map(|d| splice_expr(d, assignment, renames))
                .collect(),
        ),
        ExprKind::ArrayLit(xs) => ExprKind::ArrayLit(
            xs.iter()
                .map(|x| splice_expr(x, assignment, renames))
                .collect(),
        ),
    };
    Expr {
        node,
        span: e.span,
        id: e.id,
    }
}

/// An identifier used by spliced codelets but unbound in the draft scope at
/// one or more splice points.
#[derive(Debug, Clone)]
struct UndefRef {
    name: String,
    ty: Type,
    holes: Vec<HoleId>,
}

/// Undefined references in first-occurrence order. `None` when two
/// occurrences demand conflicting types (no renaming can fix that).
fn undefined_refs(cand: &Candidate, draft: &Draft) -> Option<Vec<UndefRef>> {
    let mut refs: Vec<UndefRef> = Vec::new();
    for (hole, codelet) in &cand.assignment {
        let scope = &draft.hole_scopes[hole];
        for (name, ty) in codelet.free_vars() {
            if scope.iter().any(|(n, _)| n == name) {
                continue; // bound in the draft at this splice point
            }
            match refs.iter_mut().find(|r| r.name == *name) {
                Some(r) => {
                    if r.ty != *ty {
                        return None;
                    }
                    if !r.holes.contains(hole) {
                        r.holes.push(*hole);
                    }
                }
                None => refs.push(UndefRef {
                    name: name.clone(),
                    ty: ty.clone(),
                    holes: vec![*hole],
                }),
            }
        }
    }
    Some(refs)
}

/// Rename targets for one undefined reference: draft bindings visible at
/// every splice point where it occurs, type-matched (unless type matching is
/// ablated), in declaration order.
fn rename_targets(r: &UndefRef, draft: &Draft, cfg: &SpliceConfig) -> Vec<String> {
    let first = &draft.hole_scopes[&r.holes[0]];
    first
        .iter()
        .filter(|(name, ty)| {
            (!cfg.type_matching || *ty == r.ty)
                && r.holes[1..].iter().all(|h| {
                    draft.hole_scopes[h]
                        .iter()
                        .any(|(n, t)| n == name && t == ty)
                })
        })
        .map(|(name, _)| name.clone())
        .collect()
}

/// Shared immutable state for validating candidates.
pub struct ValidationCtx<'a> {
    pub api: &'a ApiTable,
    pub fs: &'a VirtualFs,
}

fn passes_requirement(
    program: &Program,
    requirement: &Requirement,
    vc: &ValidationCtx,
    limits: &Limits,
) -> bool {
    match requirement {
        Requirement::Tests(tests) => run_tests(program, tests, vc.api, vc.fs, limits),
        Requirement::Automaton(a) => automaton_accepts(program, a, vc, limits),
    }
}

fn automaton_accepts(
    program: &Program,
    automaton: &ApiAutomaton,
    vc: &ValidationCtx,
    limits: &Limits,
) -> bool {
    let out = eval(program, Vec::new(), vc.api, vc.fs, limits);
    out.result.is_ok() && automaton.check(&out.trace)
}

/// Enumerate type-respecting renamings of a candidate's undefined refs
/// (backtracking, declaration-order targets, non-injective maps allowed) and
/// yield every renaming whose program type checks and satisfies the
/// requirement.
fn merge_enumerate(
    cand: &Candidate,
    draft: &Draft,
    desugared_draft: &Program,
    cfg: &SpliceConfig,
    vc: &ValidationCtx,
    stats: &mut SpliceStats,
    deadline: Option<Instant>,
    visit: &mut dyn FnMut(Program, BTreeMap<String, String>) -> ControlFlow<Stop>,
) -> ControlFlow<Stop> {
    let Some(refs) = undefined_refs(cand, draft) else {
        return ControlFlow::Continue(());
    };
    let targets: Vec<Vec<String>> = refs
        .iter()
        .map(|r| rename_targets(r, draft, cfg))
        .collect();
    let mut chosen: Vec<String> = Vec::with_capacity(refs.len());
    merge_dfs(
        0,
        &refs,
        &targets,
        &mut chosen,
        cand,
        draft,
        desugared_draft,
        cfg,
        vc,
        stats,
        deadline,
        visit,
    )
}

#[allow(clippy::too_many_arguments)]
fn merge_dfs(
    depth: usize,
    refs: &[UndefRef],
    targets: &[Vec<String>],
    chosen: &mut Vec<String>,
    cand: &Candidate,
    draft: &Draft,
    desugared_draft: &Program,
    cfg: &SpliceConfig,
    vc: &ValidationCtx,
    stats: &mut SpliceStats,
    deadline: Option<Instant>,
    visit: &mut dyn FnMut(Program, BTreeMap<String, String>) -> ControlFlow<Stop>,
) -> ControlFlow<Stop> {
    if depth == refs.len() {
        if let Some(d) = deadline {
            if Instant::now() >= d {
                return ControlFlow::Break(Stop::Timeout);
            }
        }
        let mut per_hole: BTreeMap<HoleId, BTreeMap<String, String>> = BTreeMap::new();
        let mut renamings = BTreeMap::new();
        for (r, target) in refs.iter().zip(chosen.iter()) {
            renamings.insert(r.name.clone(), target.clone());
            for h in &r.holes {
                per_hole
                    .entry(*h)
                    .or_default()
                    .insert(r.name.clone(), target.clone());
            }
        }
        let program = instantiate(desugared_draft, &cand.assignment, &per_hole);
        if check_program(&program, vc.api.sigs(), &BTreeMap::new(), "").is_err() {
            return ControlFlow::Continue(());
        }
        stats.tests_run += 1;
        if passes_requirement(&program, &draft.requirement, vc, &cfg.test_limits) {
            return visit(program, renamings);
        }
        return ControlFlow::Continue(());
    }
    for target in &targets[depth] {
        chosen.push(target.clone());
        merge_dfs(
            depth + 1,
            refs,
            targets,
            chosen,
            cand,
            draft,
            desugared_draft,
            cfg,
            vc,
            stats,
            deadline,
            visit,
        )?;
        chosen.pop();
    }
    ControlFlow::Continue(())
}

/// First passing renaming of a candidate, if any (Procedure 2 semantics).
/// Rank and discovery order are zeroed; `splice` assigns real ones.
pub fn merge(
    cand: &Candidate,
    draft: &Draft,
    cfg: &SpliceConfig,
    vc: &ValidationCtx,
) -> Option<Solution> {
    let desugared = draft.desugared();
    let mut stats = SpliceStats::default();
    let mut found = None;
    let _ = merge_enumerate(
        cand,
        draft,
        &desugared,
        cfg,
        vc,
        &mut stats,
        None,
        &mut |program, renamings| {
            found = Some(Solution {
                program,
                donor: cand.donor,
                donor_rank: 0,
                discovery_order: 0,
                renamings,
            });
            ControlFlow::Break(Stop::Enough)
        },
    );
    found
}

/// Drop solutions containing statements unreachable behind a `return` in the
/// same block (covers the consecutive-return pattern). Order preserved.
pub fn post_filter(solutions: Vec<Solution>) -> Vec<Solution> {
    solutions
        .into_iter()
        .filter(|s| !has_stmt_after_return(&s.program))
        .collect()
}

fn has_stmt_after_return(p: &Program) -> bool {
    let mut found = false;
    p.walk(
        &mut |s| {
            if let StmtKind::Block(stmts) = &s.node {
                if stmts
                    .iter()
                    .take(stmts.len().saturating_sub(1))
                    .any(|st| matches!(st.node, StmtKind::Return(_)))
                {
                    found = true;
                }
            }
        },
        &mut |_| {},
    );
    found
}

#[derive(Debug, Default)]
struct DonorRun {
    solutions: Vec<Solution>,
    stats: SpliceStats,
    timed_out: bool,
}

#[allow(clippy::too_many_arguments)]
fn run_donor(
    rank: usize,
    source: SourceId,
    draft: &Draft,
    desugared_draft: &Program,
    index: &CorpusIndex,
    cfg: &SpliceConfig,
    vc: &ValidationCtx,
    deadline: Option<Instant>,
    candidate_budget: u64,
) -> DonorRun {
    let mut run = DonorRun::default();
    let Some(entry) = index.get(source) else {
        return run;
    };
    let Ok(codelets) = donor_codelets(&entry.program, source, vc.api.sigs(), cfg.max_window)
    else {
        return run;
    };

    let DonorRun {
        solutions,
        stats,
        timed_out,
    } = &mut run;
    let max_solutions = cfg.max_solutions;
    let flow = fill_visit(draft, desugared_draft, &codelets, cfg, &mut |cand| {
        if let Some(d) = deadline {
            if Instant::now() >= d {
                return ControlFlow::Break(Stop::Timeout);
            }
        }
        if stats.candidates_evaluated >= candidate_budget {
            return ControlFlow::Break(Stop::Timeout);
        }
        stats.candidates_evaluated += 1;
        merge_enumerate(
            &cand,
            draft,
            desugared_draft,
            cfg,
            vc,
            stats,
            deadline,
            &mut |program, renamings| {
                solutions.push(Solution {
                    program,
                    donor: source,
                    donor_rank: rank,
                    discovery_order: solutions.len(),
                    renamings,
                });
                if solutions.len() >= max_solutions {
                    ControlFlow::Break(Stop::Enough)
                } else {
                    ControlFlow::Continue(())
                }
            },
        )
    });
    if matches!(flow, ControlFlow::Break(Stop::Timeout)) {
        *timed_out = true;
    }
    run
}

/// The full pipeline: retrieve `cfg.k` donors, run fill/merge per donor (in
/// parallel), order solutions by (donor rank, discovery order), truncate to
/// `cfg.max_solutions`, and post-filter. Output is independent of the
/// parallel schedule.
pub fn splice(
    draft: &Draft,
    index: &CorpusIndex,
    cfg: &SpliceConfig,
    vc: &ValidationCtx,
) -> Result<SpliceOutcome, IndexError> {
    let started = Instant::now();
    let ranked = knn_query(index, draft, cfg.k, &cfg.weights)?;
    let deadline = started + cfg.search_time_limit;
    let desugared_draft = draft.desugared();

    let workers = if cfg.workers == 0 {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    } else {
        cfg.workers
    }
    .min(ranked.len())
    .max(1);

    let results: Vec<Mutex<Option<DonorRun>>> =
        (0..ranked.len()).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            std::thread::Builder::new()
                .stack_size(16 * 1024 * 1024)
                .spawn_scoped(scope, || loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= ranked.len() {
                        break;
                    }
                    let (source, _) = ranked[i];
                    let run = run_donor(
                        i,
                        source,
                        draft,
                        &desugared_draft,
                        index,
                        cfg,
                        vc,
                        Some(deadline),
                        u64::MAX,
                    );
                    *results[i].lock().expect("donor slot") = Some(run);
                })
                .expect("spawn donor worker");
        }
    });

    let mut stats = SpliceStats::default();
    let mut solutions = Vec::new();
    let mut timed_out = false;
    for slot in results {
        let run = slot.into_inner().expect("donor slot").expect("donor ran");
        stats.absorb(&run.stats);
        timed_out |= run.timed_out;
        solutions.extend(run.solutions);
    }
    solutions.sort_by_key(|s| (s.donor_rank, s.discovery_order));
    solutions.truncate(cfg.max_solutions);
    let solutions = post_filter(solutions);
    stats.wall_time = started.elapsed();
    Ok(SpliceOutcome {
        solutions,
        stats,
        timed_out,
    })
}

/// Per-donor candidate cap standing in for "no time limit" so a runaway
/// donor search still terminates.
const PRECISION_SAFETY_BUDGET: u64 = 1_000_000_000;

/// Fraction of the top-k donors able to complete the draft at all: each
/// donor is searched without a time limit (large safety budget only) and
/// counts as high-quality when it yields at least one solution.
pub fn measure_precision(
    draft: &Draft,
    index: &CorpusIndex,
    k: usize,
    weights: &QueryWeights,
    vc: &ValidationCtx,
) -> Result<f64, IndexError> {
    let ranked = knn_query(index, draft, k, weights)?;
    let cfg = SpliceConfig {
        k,
        weights: *weights,
        max_solutions: 1,
        ..SpliceConfig::default()
    };
    let desugared_draft = draft.desugared();
    let mut high_quality = 0usize;
    for (rank, (source, _)) in ranked.iter().enumerate() {
        let run = run_donor(
            rank,
            *source,
            draft,
            &desugared_draft,
            index,
            &cfg,
            vc,
            None,
            PRECISION_SAFETY_BUDGET,
        );
        if !run.solutions.is_empty() {
            high_quality += 1;
        }
    }
    Ok(high_quality as f64 / ranked.len() as f64)
}

/// `splice` with the pruning heuristics switched per run, returning exact
/// work counters for ablation comparisons.
pub fn ablation_run(
    draft: &Draft,
    index: &CorpusIndex,
    cfg: &SpliceConfig,
    type_matching: bool,
    role_matching: bool,
    vc: &ValidationCtx,
) -> Result<(Vec<Solution>, SpliceStats), IndexError> {
    let cfg = SpliceConfig {
        type_matching,
        role_matching,
        ..cfg.clone()
    };
    let out = splice(draft, index, &cfg, vc)?;
    Ok((out.solutions, out.stats))
}
