//! Codelet extraction: typed, role-annotated expressions and sliding-window
//! statement sequences mined from a donor function.

use std::collections::BTreeMap;

use crate::ast::*;
use crate::draft::Draft;
use crate::error::TypeError;
use crate::index::SourceId;
use crate::typeck::{check_program, ApiSigs, CheckOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// Syntactic role of an expression, derived from its parent node. Two
/// expressions "serve the same role" when these values are equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Role {
    AssignRhs,
    AssignLhs,
    LetInit,
    IfGuard,
    WhileGuard,
    CallArg(u8),
    IndexPos,
    IndexBase,
    BinopOperand(Side),
    UnopOperand,
    ReturnValue,
    ArrayDim,
    ArrayElem,
    LengthBase,
    /// Expression used directly as a statement.
    ExprStmt,
}

/// Where a codelet came from: a node range within one corpus function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Origin {
    pub source: SourceId,
    pub first: NodeId,
    pub last: NodeId,
}

#[derive(Debug, Clone)]
pub struct ExprCodelet {
    pub expr: Expr,
    pub ty: Type,
    pub role: Role,
    /// AST node count of the expression.
    pub size: usize,
    /// Free variables in first-occurrence order, typed in the donor's scope.
    pub free_vars: Vec<(String, Type)>,
    /// True when the codelet calls the donor function by name.
    pub calls_self: bool,
    pub origin: Origin,
}

#[derive(Debug, Clone)]
pub struct StmtCodelet {
    /// Contiguous statements from one block of the desugared donor.
    pub stmts: Vec<Stmt>,
    /// Total statement + expression node count.
    pub size: usize,
    /// Nesting depth of the block the window was cut from (body = 0).
    pub depth: u32,
    pub free_vars: Vec<(String, Type)>,
    pub calls_self: bool,
    pub origin: Origin,
}

#[derive(Debug, Clone)]
pub enum Codelet {
    Expr(ExprCodelet),
    Stmts(StmtCodelet),
}

impl Codelet {
    pub fn free_vars(&self) -> &[(String, Type)] {
        match self {
            Codelet::Expr(c) => &c.free_vars,
            Codelet::Stmts(c) => &c.free_vars,
        }
    }

    pub fn calls_self(&self) -> bool {
        match self {
            Codelet::Expr(c) => c.calls_self,
            Codelet::Stmts(c) => c.calls_self,
        }
    }

    pub fn origin(&self) -> Origin {
        match self {
            Codelet::Expr(c) => c.origin,
            Codelet::Stmts(c) => c.origin,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Codelet::Expr(c) => c.size,
            Codelet::Stmts(c) => c.size,
        }
    }
}

/// Every expression node of `p` (subexpressions included) as a codelet, in
/// ascending size order with source-position tie-break. `p` must be the
/// desugared, hole-free donor.
pub fn extract_expr_codelets(
    p: &Program,
    source: SourceId,
    sigs: &ApiSigs,
) -> Result<Vec<ExprCodelet>, TypeError> {
    let check = check_program(p, sigs, &BTreeMap::new(), "")?;
    let mut out = Vec::new();
    p.walk(&mut |_| {}, &mut |e| {
        if matches!(e.node, ExprKind::Hole(_)) {
            return;
        }
        let ty = check.expr_types[&e.id].clone();
        let role = check.expr_roles[&e.id].clone();
        let free_vars = expr_free_vars(e, &check);
        out.push(ExprCodelet {
            expr: e.clone(),
            ty,
            role,
            size: e.node_count(),
            free_vars,
            calls_self: calls_name_expr(e, &p.name),
            origin: Origin {
                source,
                first: e.id,
                last: e.id,
            },
        });
    });
    out.sort_by_key(|c| (c.size, c.expr.span.lo, c.expr.id));
    Ok(out)
}

/// All contiguous statement windows of length `1..=max_len` from every block
/// at every nesting depth, ascending by size with (depth, position)
/// tie-break. `p` must be the desugared, hole-free donor.
pub fn extract_stmt_codelets(
    p: &Program,
    source: SourceId,
    sigs: &ApiSigs,
    max_len: usize,
) -> Result<Vec<StmtCodelet>, TypeError> {
    let check = check_program(p, sigs, &BTreeMap::new(), "")?;
    let mut out = Vec::new();
    if let StmtKind::Block(stmts) = &p.body.node {
        visit_blocks(stmts, 0, &mut |block, depth| {
            let n = block.len();
            for len in 1..=max_len.min(n) {
                for start in 0..=(n - len) {
                    let window = &block[start..start + len];
                    let size = window.iter().map(|s| s.node_count()).sum();
                    let free_vars = stmt_window_free_vars(window, &check);
                    let calls_self = window.iter().any(|s| calls_name_stmt(s, &p.name));
                    out.push(StmtCodelet {
                        stmts: window.to_vec(),
                        size,
                        depth,
                        free_vars,
                        calls_self,
                        origin: Origin {
                            source,
                            first: window.first().unwrap().id,
                            last: window.last().unwrap().id,
                        },
                    });
                }
            }
        });
    }
    out.sort_by_key(|c| (c.size, c.depth, c.stmts[0].span.lo, c.stmts[0].id));
    Ok(out)
}

fn visit_blocks<'a>(stmts: &'a [Stmt], depth: u32, f: &mut impl FnMut(&'a [Stmt], u32)) {
    f(stmts, depth);
    for s in stmts {
        match &s.node {
            StmtKind::Block(inner) => visit_blocks(inner, depth + 1, f),
            StmtKind::If { then, els, .. } => {
                visit_stmt_block(then, depth, f);
                if let Some(e) = els {
                    visit_stmt_block(e, depth, f);
                }
            }
            StmtKind::While { body, .. } => visit_stmt_block(body, depth, f),
            StmtKind::For { init, body, .. } => {
                visit_stmt_block(init, depth, f);
                visit_stmt_block(body, depth, f);
            }
            _ => {}
        }
    }
}

fn visit_stmt_block<'a>(s: &'a Stmt, depth: u32, f: &mut impl FnMut(&'a [Stmt], u32)) {
    if let StmtKind::Block(inner) = &s.node {
        visit_blocks(inner, depth + 1, f);
    }
}

// ----- free variables -----

fn expr_free_vars(e: &Expr, check: &CheckOutcome) -> Vec<(String, Type)> {
    let mut out = Vec::new();
    e.walk(&mut |x| {
        if let ExprKind::Var(name) = &x.node {
            if !out.iter().any(|(n, _)| n == name) {
                out.push((name.clone(), check.expr_types[&x.id].clone()));
            }
        }
    });
    out
}

fn stmt_window_free_vars(window: &[Stmt], check: &CheckOutcome) -> Vec<(String, Type)> {
    let mut bound: Vec<Vec<String>> = vec![Vec::new()];
    let mut out = Vec::new();
    for s in window {
        free_vars_stmt(s, &mut bound, check, &mut out);
    }
    out
}

fn free_vars_stmt(
    s: &Stmt,
    bound: &mut Vec<Vec<String>>,
    check: &CheckOutcome,
    out: &mut Vec<(String, Type)>,
) {
    match &s.node {
        StmtKind::Let { name, init, .. } => {
            free_vars_expr(init, bound, check, out);
            bound.last_mut().unwrap().push(name.clone());
        }
        StmtKind::Expr(e) => free_vars_expr(e, bound, check, out),
        StmtKind::If { guard, then, els } => {
            free_vars_expr(guard, bound, check, out);
            free_vars_stmt(then, bound, check, out);
            if let Some(e) = els {
                free_vars_stmt(e, bound, check, out);
            }
        }
        StmtKind::While { guard, body } => {
            free_vars_expr(guard, bound, check, out);
            free_vars_stmt(body, bound, check, out);
        }
        StmtKind::For {
            init,
            guard,
            step,
            body,
        } => {
            bound.push(Vec::new());
            free_vars_stmt(init, bound, check, out);
            free_vars_expr(guard, bound, check, out);
            free_vars_expr(step, bound, check, out);
            free_vars_stmt(body, bound, check, out);
            bound.pop();
        }
        StmtKind::Block(stmts) => {
            bound.push(Vec::new());
            for st in stmts {
                free_vars_stmt(st, bound, check, out);
            }
            bound.pop();
        }
        StmtKind::Return(Some(e)) => free_vars_expr(e, bound, check, out),
        StmtKind::Return(None) | StmtKind::Hole(_) => {}
    }
}

fn free_vars_expr(
    e: &Expr,
    bound: &mut Vec<Vec<String>>,
    check: &CheckOutcome,
    out: &mut Vec<(String, Type)>,
) {
    e.walk(&mut |x| {
        if let ExprKind::Var(name) = &x.node {
            let is_bound = bound.iter().any(|scope| scope.iter().any(|n| n == name));
            if !is_bound && !out.iter().any(|(n, _)| n == name) {
                out.push((name.clone(), check.expr_types[&x.id].clone()));
            }
        }
    });
}

fn calls_name_expr(e: &Expr, name: &str) -> bool {
    let mut found = false;
    e.walk(&mut |x| {
        if let ExprKind::Call(f, _) = &x.node {
            if f == name {
                found = true;
            }
        }
    });
    found
}

fn calls_name_stmt(s: &Stmt, name: &str) -> bool {
    let mut found = false;
    s.walk(&mut |_| {}, &mut |x| {
        if let ExprKind::Call(f, _) = &x.node {
            if f == name {
                found = true;
            }
        }
    });
    found
}

// ----- renaming -----

/// Rename free occurrences of mapped names inside an expression. Expressions
/// bind nothing, so every occurrence is free.
pub fn rename_free_expr(e: &mut Expr, map: &BTreeMap<String, String>) {
    rename_expr_inner(e, map, &mut vec![Vec::new()]);
}

/// Rename free occurrences of mapped names inside a statement window,
/// respecting `let` bindings introduced within the window itself.
pub fn rename_free_stmts(stmts: &mut [Stmt], map: &BTreeMap<String, String>) {
    let mut bound: Vec<Vec<String>> = vec![Vec::new()];
    for s in stmts {
        rename_stmt_inner(s, map, &mut bound);
    }
}

fn rename_stmt_inner(s: &mut Stmt, map: &BTreeMap<String, String>, bound: &mut Vec<Vec<String>>) {
    match &mut s.node {
        StmtKind::Let { name, init, .. } => {
            rename_expr_inner(init, map, bound);
            bound.last_mut().unwrap().push(name.clone());
        }
        StmtKind::Expr(e) => rename_expr_inner(e, map, bound),
        StmtKind::If { guard, then, els } => {
            rename_expr_inner(guard, map, bound);
            rename_stmt_inner(then, map, bound);
            if let Some(e) = els {
                rename_stmt_inner(e, map, bound);
            }
        }
        StmtKind::While { guard, body } => {
            rename_expr_inner(guard, map, bound);
            rename_stmt_inner(body, map, bound);
        }
        StmtKind::For {
            init,
            guard,
            step,
            body,
        } => {
            bound.push(Vec::new());
            rename_stmt_inner(init, map, bound);
            rename_expr_inner(guard, map, bound);
            rename_expr_inner(step, map, bound);
            rename_stmt_inner(body, map, bound);
            bound.pop();
        }
        StmtKind::Block(stmts) => {
            bound.push(Vec::new());
            for st in stmts {
                rename_stmt_inner(st, map, bound);
            }
            bound.pop();
        }
        StmtKind::Return(Some(e)) => rename_expr_inner(e, map, bound),
        StmtKind::Return(None) | StmtKind::Hole(_) => {}
    }
}

fn rename_expr_inner(e: &mut Expr, map: &BTreeMap<String, String>, bound: &mut Vec<Vec<String>>) {
    match &mut e.node {
        ExprKind::Var(name) => {
            let is_bound = bound.iter().any(|scope| scope.iter().any(|n| n == name));
            if !is_bound {
                if let Some(new) = map.get(name) {
                    *name = new.clone();
                }
            }
        }
        ExprKind::ConstInt(_)
        | ExprKind::ConstBool(_)
        | ExprKind::ConstStr(_)
        | ExprKind::Hole(_) => {}
        ExprKind::Binop(_, a, b) => {
            rename_expr_inner(a, map, bound);
            rename_expr_inner(b, map, bound);
        }
        ExprKind::Unop(_, x) | ExprKind::Length(x) => rename_expr_inner(x, map, bound),
        ExprKind::Call(_, args) => {
            for a in args {
                rename_expr_inner(a, map, bound);
            }
        }
        ExprKind::Assign(l, r) => {
            rename_expr_inner(l, map, bound);
            rename_expr_inner(r, map, bound);
        }
        ExprKind::Index(base, idxs) => {
            rename_expr_inner(base, map, bound);
            for i in idxs {
                rename_expr_inner(i, map, bound);
            }
        }
        ExprKind::NewArray(_, dims) => {
            for d in dims {
                rename_expr_inner(d, map, bound);
            }
        }
        ExprKind::ArrayLit(elems) => {
            for x in elems {
                rename_expr_inner(x, map, bound);
            }
        }
    }
}

// ----- constant adaptation -----

/// `c` plus variants where each integer literal of `c` is replaced, one at a
/// time, by an integer literal occurring in the draft program or an in-scope
/// `int` variable at the target hole. The returned list (base included) is
/// clipped at `budget`.
pub fn adapt_constants(c: &Codelet, draft: &Draft, hole: HoleId, budget: usize) -> Vec<Codelet> {
    let mut out = vec![c.clone()];
    if budget <= 1 {
        out.truncate(budget.max(1));
        return out;
    }
    // Replacement candidates: draft literals in source order (deduplicated),
    // then in-scope int variables in declaration order.
    let mut literals: Vec<i64> = Vec::new();
    draft.program.walk(&mut |_| {}, &mut |e| {
        if let ExprKind::ConstInt(v) = e.node {
            if !literals.contains(&v) {
                literals.push(v);
            }
        }
    });
    let int_vars: Vec<String> = draft
        .hole_scopes
        .get(&hole)
        .map(|scope| {
            scope
                .iter()
                .filter(|(_, t)| *t == Type::Int)
                .map(|(n, _)| n.clone())
                .collect()
        })
        .unwrap_or_default();

    let literal_count = count_int_literals(c);
    'outer: for slot in 0..literal_count {
        for v in &literals {
            if !push_variant(&mut out, c, slot, Replacement::Literal(*v), budget) {
                break 'outer;
            }
        }
        for name in &int_vars {
            if !push_variant(&mut out, c, slot, Replacement::Var(name.clone()), budget) {
                break 'outer;
            }
        }
    }
    out
}

enum Replacement {
    Literal(i64),
    Var(String),
}

fn push_variant(
    out: &mut Vec<Codelet>,
    base: &Codelet,
    slot: usize,
    replacement: Replacement,
    budget: usize,
) -> bool {
    if out.len() >= budget {
        return false;
    }
    let mut variant = base.clone();
    let replaced = match &mut variant {
        Codelet::Expr(c) => replace_nth_literal_expr(&mut c.expr, slot, &replacement, &mut 0),
        Codelet::Stmts(c) => {
            let mut seen = 0;
            let mut done = false;
            for s in &mut c.stmts {
                if replace_nth_literal_stmt(s, slot, &replacement, &mut seen) {
                    done = true;
                    break;
                }
            }
            done
        }
    };
    if !replaced {
        return true;
    }
    if let Replacement::Var(name) = &replacement {
        // The inserted variable is free; drop the variant when its type
        // would conflict with an existing free variable of the same name.
        let free = match &mut variant {
            Codelet::Expr(c) => &mut c.free_vars,
            Codelet::Stmts(c) => &mut c.free_vars,
        };
        match free.iter().find(|(n, _)| n == name) {
            Some((_, t)) if *t != Type::Int => return true,
            Some(_) => {}
            None => free.push((name.clone(), Type::Int)),
        }
    }
    out.push(variant);
    true
}

fn count_int_literals(c: &Codelet) -> usize {
    let mut n = 0;
    let count = |e: &Expr| {
        let mut k = 0;
        e.walk(&mut |x| {
            if matches!(x.node, ExprKind::ConstInt(_)) {
                k += 1;
            }
        });
        k
    };
    match c {
        Codelet::Expr(cl) => n += count(&cl.expr),
        Codelet::Stmts(cl) => {
            for s in &cl.stmts {
                s.walk(&mut |_| {}, &mut |e| {
                    if matches!(e.node, ExprKind::ConstInt(_)) {
                        n += 1;
                    }
                });
            }
        }
    }
    n
}

fn replace_nth_literal_stmt(
    s: &mut Stmt,
    target: usize,
    replacement: &Replacement,
    seen: &mut usize,
) -> bool {
    match &mut s.node {
        StmtKind::Let { init, .. } => replace_nth_literal_expr(init, target, replacement, seen),
        StmtKind::Expr(e) => replace_nth_literal_expr(e, target, replacement, seen),
        StmtKind::If { guard, then, els } => {
            replace_nth_literal_expr(guard, target, replacement, seen)
                || replace_nth_literal_stmt(then, target, replacement, seen)
                || els
                    .as_mut()
                    .is_some_and(|e| replace_nth_literal_stmt(e, target, replacement, seen))
        }
        StmtKind::While { guard, body } => {
            replace_nth_literal_expr(guard, target, replacement, seen)
                || replace_nth_literal_stmt(body, target, replacement, seen)
        }
        StmtKind::For {
            init,
            guard,
            step,
            body,
        } => {
            replace_nth_literal_stmt(init, target, replacement, seen)
                || replace_nth_literal_expr(guard, target, replacement, seen)
                || replace_nth_literal_expr(step, target, replacement, seen)
                || replace_nth_literal_stmt(body, target, replacement, seen)
        }
        StmtKind::Block(stmts) => stmts
            .iter_mut()
            .any(|st| replace_nth_literal_stmt(st, target, replacement, seen)),
        StmtKind::Return(Some(e)) => replace_nth_literal_expr(e, target, replacement, seen),
        StmtKind::Return(None) | StmtKind::Hole(_) => false,
    }
}

fn replace_nth_literal_expr(
    e: &mut Expr,
    target: usize,
    replacement: &Replacement,
    seen: &mut usize,
) -> bool {
    if matches!(e.node, ExprKind::ConstInt(_)) {
        if *seen == target {
            e.node = match replacement {
                Replacement::Literal(v) => ExprKind::ConstInt(*v),
                Replacement::Var(name) => ExprKind::Var(name.clone()),
            };
            *seen += 1;
            return true;
        }
        *seen += 1;
        return false;
    }
    match &mut e.node {
        ExprKind::Binop(_, a, b) | ExprKind::Assign(a, b) => {
            replace_nth_literal_expr(a, target, replacement, seen)
                || replace_nth_literal_expr(b, target, replacement, seen)
        }
        ExprKind::Unop(_, x) | ExprKind::Length(x) => {
            replace_nth_literal_expr(x, target, replacement, seen)
        }
        ExprKind::Call(_, args) => args
            .iter_mut()
            .any(|a| replace_nth_literal_expr(a, target, replacement, seen)),
        ExprKind::Index(base, idxs) => {
            replace_nth_literal_expr(base, target, replacement, seen)
                || idxs
                    .iter_mut()
                    .any(|i| replace_nth_literal_expr(i, target, replacement, seen))
        }
        ExprKind::NewArray(_, dims) => dims
            .iter_mut()
            .any(|d| replace_nth_literal_expr(d, target, replacement, seen)),
        ExprKind::ArrayLit(elems) => elems
            .iter_mut()
            .any(|x| replace_nth_literal_expr(x, target, replacement, seen)),
        _ => false,
    }
}
