//! Shared helpers for the integration suites: bundled-benchmark loading, a
//! seeded random program generator, and independent oracles for search,
//! automata and synthesis.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use splice_core::ast::{desugar, Expr, ExprKind, HoleId, NodeId, Program, Stmt, StmtKind, Type};
use splice_core::automaton::ApiAutomaton;
use splice_core::codelet::Codelet;
use splice_core::draft::{parse_draft, Draft, Requirement};
use splice_core::engine::instantiate;
use splice_core::index::{build_index, CorpusIndex, SourceId};
use splice_core::interp::{eval, run_tests, ApiEvent, ApiTable, Limits, VirtualFs};
use splice_core::pretty::pretty_print;
use splice_core::typeck::check_program;
use splice_core::FeatureConfig;

pub fn benchmarks_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../benchmarks")
        .canonicalize()
        .expect("benchmarks directory")
}

pub fn corpus_dir() -> PathBuf {
    benchmarks_dir().join("corpus")
}

pub fn draft_path(name: &str) -> PathBuf {
    benchmarks_dir().join("drafts").join(format!("{name}.spl"))
}

pub fn api() -> ApiTable {
    ApiTable::with_builtins()
}

/// Build the bundled benchmark index; every corpus function must ingest.
pub fn bundled_index() -> CorpusIndex {
    let api = api();
    let (index, diagnostics) =
        build_index(&corpus_dir(), api.sigs(), FeatureConfig::bundled()).expect("build index");
    assert!(
        diagnostics.is_empty(),
        "bundled corpus has ingest failures: {diagnostics:?}"
    );
    index
}

pub fn load_benchmark_draft(name: &str) -> Draft {
    let path = draft_path(name);
    let text = std::fs::read_to_string(&path).expect("draft file");
    let api = api();
    parse_draft(&text, api.sigs(), path.parent().unwrap()).expect("parse draft")
}

/// Virtual filesystem from a benchmark manifest (JSON object path -> text).
pub fn load_fs(name: &str) -> VirtualFs {
    let path = benchmarks_dir().join("fs").join(format!("{name}.json"));
    let text = std::fs::read_to_string(path).expect("fs manifest");
    let map: BTreeMap<String, String> = serde_json::from_str(&text).expect("manifest json");
    let mut fs = VirtualFs::new();
    for (k, v) in &map {
        fs.insert(k, v);
    }
    fs
}

pub fn benchmark_fs(draft: &str) -> VirtualFs {
    match draft {
        "csvread" => load_fs("csvread"),
        "facedetect" => load_fs("facedetect"),
        _ => VirtualFs::new(),
    }
}

pub fn is_prime(n: i64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

// ----- random program generation -----

pub struct Gen {
    pub rng: ChaCha8Rng,
    next_var: usize,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            next_var: 0,
        }
    }

    fn fresh(&mut self, prefix: &str) -> String {
        self.next_var += 1;
        format!("{prefix}{}", self.next_var)
    }

    fn pick<'a>(&mut self, items: &'a [String]) -> &'a str {
        &items[self.rng.gen_range(0..items.len())]
    }

    pub fn int_expr(&mut self, ints: &[String], depth: u32) -> String {
        let leaf = depth == 0 || self.rng.gen_bool(0.4);
        if leaf {
            if !ints.is_empty() && self.rng.gen_bool(0.6) {
                self.pick(ints).to_string()
            } else {
                self.rng.gen_range(0..7).to_string()
            }
        } else {
            let op = ["+", "-", "*"][self.rng.gen_range(0..3)];
            let a = self.int_expr(ints, depth - 1);
            let b = self.int_expr(ints, depth - 1);
            format!("({a} {op} {b})")
        }
    }

    pub fn bool_expr(&mut self, ints: &[String], bools: &[String], depth: u32) -> String {
        if depth == 0 || self.rng.gen_bool(0.35) {
            match self.rng.gen_range(0..3) {
                0 => "true".to_string(),
                1 => "false".to_string(),
                _ => {
                    if bools.is_empty() {
                        "true".to_string()
                    } else {
                        self.pick(bools).to_string()
                    }
                }
            }
        } else {
            match self.rng.gen_range(0..3) {
                0 => {
                    let op = ["<", "<=", "==", "!="][self.rng.gen_range(0..4)];
                    let a = self.int_expr(ints, depth - 1);
                    let b = self.int_expr(ints, depth - 1);
                    format!("({a} {op} {b})")
                }
                1 => {
                    let op = ["&&", "||"][self.rng.gen_range(0..2)];
                    let a = self.bool_expr(ints, bools, depth - 1);
                    let b = self.bool_expr(ints, bools, depth - 1);
                    format!("({a} {op} {b})")
                }
                _ => {
                    let a = self.bool_expr(ints, bools, depth - 1);
                    format!("(!{a})")
                }
            }
        }
    }

    /// A block of statements; loops are bounded by construction so every
    /// generated program terminates.
    pub fn stmts(
        &mut self,
        ints: &mut Vec<String>,
        bools: &mut Vec<String>,
        count: usize,
        depth: u32,
    ) -> String {
        let mut out = String::new();
        for _ in 0..count {
            match self.rng.gen_range(0..6) {
                0 => {
                    let v = self.fresh("v");
                    let e = self.int_expr(ints, 2);
                    out.push_str(&format!("int {v} = {e};\n"));
                    ints.push(v);
                }
                1 => {
                    let v = self.fresh("b");
                    let e = self.bool_expr(ints, bools, 2);
                    out.push_str(&format!("boolean {v} = {e};\n"));
                    bools.push(v);
                }
                2 if ints.iter().any(|v| !v.starts_with('i')) => {
                    // never reassign a loop counter; generated loops must
                    // stay bounded
                    let mutable: Vec<String> = ints
                        .iter()
                        .filter(|v| !v.starts_with('i'))
                        .cloned()
                        .collect();
                    let target = self.pick(&mutable).to_string();
                    let e = self.int_expr(ints, 2);
                    out.push_str(&format!("{target} = {e};\n"));
                }
                3 if depth > 0 => {
                    let g = self.bool_expr(ints, bools, 1);
                    let mut inner_ints = ints.clone();
                    let mut inner_bools = bools.clone();
                    let body = self.stmts(&mut inner_ints, &mut inner_bools, 2, depth - 1);
                    out.push_str(&format!("if ({g}) {{\n{body}}}\n"));
                }
                4 if depth > 0 => {
                    let i = self.fresh("i");
                    let bound = self.rng.gen_range(1..4);
                    let mut inner_ints = ints.clone();
                    inner_ints.push(i.clone());
                    let mut inner_bools = bools.clone();
                    let body = self.stmts(&mut inner_ints, &mut inner_bools, 2, depth - 1);
                    out.push_str(&format!("for (int {i} = 0; {i} < {bound}; {i}++) {{\n{body}}}\n"));
                }
                _ => {
                    let e = self.int_expr(ints, 2);
                    let v = self.fresh("v");
                    out.push_str(&format!("int {v} = {e};\n"));
                    ints.push(v);
                }
            }
        }
        out
    }

    /// A self-contained int function over int parameters.
    pub fn function(&mut self, name: &str) -> String {
        self.next_var = 0;
        let mut ints = vec!["x".to_string(), "y".to_string()];
        let mut bools = Vec::new();
        let count = self.rng.gen_range(2..5);
        let body = self.stmts(&mut ints, &mut bools, count, 1);
        let ret = self.int_expr(&ints, 2);
        format!("int {name}(int x, int y) {{\n{body}return {ret};\n}}\n")
    }

    /// A draft with 1-2 typed holes and a small test block.
    pub fn draft(&mut self, two_holes: bool, stmt_hole: bool) -> String {
        self.next_var = 0;
        let k0 = self.rng.gen_range(0..4);
        let k1 = self.rng.gen_range(0..9);
        let second = if two_holes {
            if stmt_hole {
                "  ??;\n"
            } else {
                "  if (??) {\n    out = out + 1;\n  }\n"
            }
        } else {
            ""
        };
        format!(
            "/* COMMENT:\n * generated draft\n * TEST:\n * __solution__\n * return f({k0}) == {k1};\n */\n\
             int f(int x) {{\n  int out = ??;\n{second}  return out;\n}}\n"
        )
    }
}

/// Parse a generated hole-free function.
pub fn parse_fn(src: &str) -> Program {
    splice_core::parse_program(src, api().sigs()).expect("generated function parses")
}

pub fn parse_draft_str(src: &str) -> Draft {
    parse_draft(src, api().sigs(), Path::new(".")).expect("generated draft parses")
}

// ----- independent oracles -----

/// Naive automaton simulation over the transition list, written separately
/// from `ApiAutomaton::check`.
pub fn oracle_automaton_accepts(a: &ApiAutomaton, trace: &[ApiEvent]) -> bool {
    let mut state = a.start;
    'events: for ev in trace {
        for (from, pat, to) in &a.transitions {
            if *from == state && pat.matches(ev) {
                state = *to;
                continue 'events;
            }
        }
        // no transition from the current state on this event
        let mut in_alphabet = false;
        for (_, pat, _) in &a.transitions {
            if pat.matches(ev) {
                in_alphabet = true;
            }
        }
        if in_alphabet || !a.wildcard_self_loop {
            return false;
        }
    }
    a.accepting.contains(&state)
}

/// Exhaustive synthesis: every subexpression / statement window of every
/// donor into every kind-matching hole, every type-respecting renaming of
/// the names left unbound at their splice points, filtered by type checking
/// and requirement validation. No pruning, no ordering, no deduplication.
pub fn oracle_solutions(
    draft: &Draft,
    donors: &[Program],
    api: &ApiTable,
    fs: &VirtualFs,
    limits: &Limits,
    max_window: usize,
) -> BTreeSet<String> {
    let desugared_draft = draft.desugared();
    let mut found = BTreeSet::new();
    for donor in donors {
        let donor = desugar(donor);
        let types = check_program(&donor, api.sigs(), &BTreeMap::new(), "")
            .expect("oracle donor type checks")
            .expr_types;

        // enumerate raw materials
        let mut exprs: Vec<Expr> = Vec::new();
        donor.walk(&mut |_| {}, &mut |e| exprs.push(e.clone()));
        let mut windows: Vec<Vec<Stmt>> = Vec::new();
        if let StmtKind::Block(stmts) = &donor.body.node {
            collect_windows(stmts, max_window, &mut windows);
        }

        let mut holes: Vec<HoleId> = draft
            .expr_holes
            .iter()
            .chain(draft.stmt_holes.iter())
            .copied()
            .collect();
        holes.sort();
        let options: Vec<Vec<Codelet>> = holes
            .iter()
            .map(|h| {
                if draft.expr_holes.contains(h) {
                    exprs
                        .iter()
                        .map(|e| mk_expr_codelet(e, &types))
                        .collect()
                } else {
                    windows
                        .iter()
                        .map(|w| mk_stmt_codelet(w, &types))
                        .collect()
                }
            })
            .collect();

        if holes.is_empty() {
            // hole-free draft: the draft itself is the only candidate
            try_assignment(
                draft,
                &desugared_draft,
                &BTreeMap::new(),
                api,
                fs,
                limits,
                &mut found,
            );
            continue;
        }
        let counts: Vec<usize> = options.iter().map(|o| o.len()).collect();
        if counts.iter().any(|&c| c == 0) {
            continue; // this donor cannot cover some hole at all
        }
        let total: usize = counts.iter().product();
        for combo in 0..total {
            let mut idx = combo;
            let mut assignment = BTreeMap::new();
            for (j, h) in holes.iter().enumerate() {
                assignment.insert(*h, options[j][idx % counts[j]].clone());
                idx /= counts[j];
            }
            try_assignment(
                draft,
                &desugared_draft,
                &assignment,
                api,
                fs,
                limits,
                &mut found,
            );
        }
    }
    found
}

fn mk_expr_codelet(e: &Expr, types: &std::collections::HashMap<NodeId, Type>) -> Codelet {
    use splice_core::codelet::{ExprCodelet, Origin, Role};
    let mut free = Vec::new();
    e.walk(&mut |x| {
        if let ExprKind::Var(name) = &x.node {
            if !free.iter().any(|(n, _): &(String, Type)| n == name) {
                free.push((name.clone(), types[&x.id].clone()));
            }
        }
    });
    Codelet::Expr(ExprCodelet {
        expr: e.clone(),
        ty: types[&e.id].clone(),
        role: Role::ExprStmt, // unused by the oracle
        size: e.node_count(),
        free_vars: free,
        calls_self: false,
        origin: Origin {
            source: SourceId(0),
            first: e.id,
            last: e.id,
        },
    })
}

fn mk_stmt_codelet(w: &[Stmt], types: &std::collections::HashMap<NodeId, Type>) -> Codelet {
    use splice_core::codelet::{Origin, StmtCodelet};
    let mut bound: Vec<Vec<String>> = vec![Vec::new()];
    let mut free: Vec<(String, Type)> = Vec::new();
    for s in w {
        window_free_vars(s, &mut bound, types, &mut free);
    }
    Codelet::Stmts(StmtCodelet {
        stmts: w.to_vec(),
        size: w.iter().map(|s| s.node_count()).sum(),
        depth: 0,
        free_vars: free,
        calls_self: false,
        origin: Origin {
            source: SourceId(0),
            first: w[0].id,
            last: w[w.len() - 1].id,
        },
    })
}

fn window_free_vars(
    s: &Stmt,
    bound: &mut Vec<Vec<String>>,
    types: &std::collections::HashMap<NodeId, Type>,
    out: &mut Vec<(String, Type)>,
) {
    let expr_vars = |e: &Expr, bound: &Vec<Vec<String>>, out: &mut Vec<(String, Type)>| {
        e.walk(&mut |x| {
            if let ExprKind::Var(name) = &x.node {
                let is_bound = bound.iter().any(|sc| sc.iter().any(|n| n == name));
                if !is_bound && !out.iter().any(|(n, _)| n == name) {
                    out.push((name.clone(), types[&x.id].clone()));
                }
            }
        });
    };
    match &s.node {
        StmtKind::Let { name, init, .. } => {
            expr_vars(init, bound, out);
            bound.last_mut().unwrap().push(name.clone());
        }
        StmtKind::Expr(e) => expr_vars(e, bound, out),
        StmtKind::If { guard, then, els } => {
            expr_vars(guard, bound, out);
            window_free_vars(then, bound, types, out);
            if let Some(e) = els {
                window_free_vars(e, bound, types, out);
            }
        }
        StmtKind::While { guard, body } => {
            expr_vars(guard, bound, out);
            window_free_vars(body, bound, types, out);
        }
        StmtKind::For {
            init,
            guard,
            step,
            body,
        } => {
            bound.push(Vec::new());
            window_free_vars(init, bound, types, out);
            expr_vars(guard, bound, out);
            expr_vars(step, bound, out);
            window_free_vars(body, bound, types, out);
            bound.pop();
        }
        StmtKind::Block(stmts) => {
            bound.push(Vec::new());
            for st in stmts {
                window_free_vars(st, bound, types, out);
            }
            bound.pop();
        }
        StmtKind::Return(Some(e)) => expr_vars(e, bound, out),
        StmtKind::Return(None) | StmtKind::Hole(_) => {}
    }
}

/// Try every type-respecting renaming of one assignment and record passing
/// programs.
fn try_assignment(
    draft: &Draft,
    desugared_draft: &Program,
    assignment: &BTreeMap<HoleId, Codelet>,
    api: &ApiTable,
    fs: &VirtualFs,
    limits: &Limits,
    found: &mut BTreeSet<String>,
) {
    // undefined names and the holes they occur at
    let mut names: Vec<(String, Type, Vec<HoleId>)> = Vec::new();
    let mut consistent = true;
    for (hole, codelet) in assignment {
        let scope = &draft.hole_scopes[hole];
        for (name, ty) in codelet.free_vars() {
            if scope.iter().any(|(n, _)| n == name) {
                continue;
            }
            match names.iter_mut().find(|(n, _, _)| n == name) {
                Some((_, t, holes)) => {
                    if t != ty {
                        consistent = false;
                    }
                    if !holes.contains(hole) {
                        holes.push(*hole);
                    }
                }
                None => names.push((name.clone(), ty.clone(), vec![*hole])),
            }
        }
    }
    if !consistent {
        return;
    }
    let target_sets: Vec<Vec<String>> = names
        .iter()
        .map(|(_, ty, holes)| {
            draft.hole_scopes[&holes[0]]
                .iter()
                .filter(|(n, t)| {
                    t == ty
                        && holes[1..]
                            .iter()
                            .all(|h| draft.hole_scopes[h].iter().any(|(n2, t2)| n2 == n && t2 == t))
                })
                .map(|(n, _)| n.clone())
                .collect()
        })
        .collect();
    let counts: Vec<usize> = target_sets.iter().map(|t| t.len()).collect();
    if counts.iter().any(|&c| c == 0) {
        return; // some name has no rename target: no completion exists
    }
    let total: usize = counts.iter().product();
    for combo in 0..total {
        let mut idx = combo;
        let mut per_hole: BTreeMap<HoleId, BTreeMap<String, String>> = BTreeMap::new();
        for (j, (name, _, holes)) in names.iter().enumerate() {
            let target = &target_sets[j][idx % counts[j]];
            idx /= counts[j];
            for h in holes {
                per_hole
                    .entry(*h)
                    .or_default()
                    .insert(name.clone(), target.clone());
            }
        }
        let program = instantiate(desugared_draft, assignment, &per_hole);
        if check_program(&program, api.sigs(), &BTreeMap::new(), "").is_ok()
            && oracle_validate(&program, draft, api, fs, limits)
        {
            found.insert(pretty_print(&program));
        }
    }
}

fn oracle_validate(
    program: &Program,
    draft: &Draft,
    api: &ApiTable,
    fs: &VirtualFs,
    limits: &Limits,
) -> bool {
    match &draft.requirement {
        Requirement::Tests(t) => run_tests(program, t, api, fs, limits),
        Requirement::Automaton(a) => {
            let out = eval(program, Vec::new(), api, fs, limits);
            out.result.is_ok() && oracle_automaton_accepts(a, &out.trace)
        }
    }
}

fn collect_windows(stmts: &[Stmt], max_len: usize, out: &mut Vec<Vec<Stmt>>) {
    let n = stmts.len();
    for len in 1..=max_len.min(n) {
        for start in 0..=(n - len) {
            out.push(stmts[start..start + len].to_vec());
        }
    }
    for s in stmts {
        match &s.node {
            StmtKind::Block(inner) => collect_windows(inner, max_len, out),
            StmtKind::If { then, els, .. } => {
                if let StmtKind::Block(inner) = &then.node {
                    collect_windows(inner, max_len, out);
                }
                if let Some(e) = els {
                    if let StmtKind::Block(inner) = &e.node {
                        collect_windows(inner, max_len, out);
                    }
                }
            }
            StmtKind::While { body, .. } => {
                if let StmtKind::Block(inner) = &body.node {
                    collect_windows(inner, max_len, out);
                }
            }
            StmtKind::For { init, body, .. } => {
                if let StmtKind::Block(inner) = &init.node {
                    collect_windows(inner, max_len, out);
                }
                if let StmtKind::Block(inner) = &body.node {
                    collect_windows(inner, max_len, out);
                }
            }
            _ => {}
        }
    }
}
