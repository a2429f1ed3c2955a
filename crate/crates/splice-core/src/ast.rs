//! Abstract syntax tree for the mini language.
//!
//! Programs are single functions over `int`, `boolean`, `String`, fixed-size
//! arrays (one or two dimensions) and opaque API handles. Draft programs may
//! additionally contain `??` holes in expression or statement position.

use std::fmt;

/// Byte range of a node in its source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub lo: u32,
    pub hi: u32,
}

impl Span {
    pub fn new(lo: u32, hi: u32) -> Self {
        Span { lo, hi }
    }

    pub fn join(self, other: Span) -> Span {
        Span {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }
}

/// Identity of an AST node, unique within one parsed program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct NodeId(pub u32);

/// Identity of a `??` hole, unique within one draft, assigned in source order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HoleId(pub u32);

impl fmt::Display for HoleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h{}", self.0)
    }
}

/// Scalar element type of an array.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ElemType {
    Int,
    Bool,
    Str,
    Opaque(String),
}

impl ElemType {
    pub fn to_type(&self) -> Type {
        match self {
            ElemType::Int => Type::Int,
            ElemType::Bool => Type::Bool,
            ElemType::Str => Type::Str,
            ElemType::Opaque(n) => Type::Opaque(n.clone()),
        }
    }
}

/// Types of the language.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Type {
    Int,
    Bool,
    Str,
    Unit,
    /// `dims` is 1 or 2; the element type is always scalar or opaque.
    Array { elem: ElemType, dims: u8 },
    /// Named API handle type; valid only when registered in the API table.
    Opaque(String),
}

impl Type {
    pub fn array(elem: ElemType, dims: u8) -> Type {
        debug_assert!(dims == 1 || dims == 2);
        Type::Array { elem, dims }
    }

    pub fn is_array(&self) -> bool {
        matches!(self, Type::Array { .. })
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => write!(f, "int"),
            Type::Bool => write!(f, "boolean"),
            Type::Str => write!(f, "String"),
            Type::Unit => write!(f, "void"),
            Type::Array { elem, dims } => {
                write!(f, "{}", elem.to_type())?;
                for _ in 0..*dims {
                    write!(f, "[]")?;
                }
                Ok(())
            }
            Type::Opaque(name) => write!(f, "{name}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub fn is_arith(self) -> bool {
        matches!(
            self,
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem
        )
    }

    pub fn is_compare(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }

    pub fn is_equality(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Ne)
    }

    pub fn is_logic(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
    /// `++x` / `x++`; the operand must be a variable or index lvalue.
    Inc,
    /// `--x` / `x--`; the operand must be a variable or index lvalue.
    Dec,
}

impl UnOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnOp::Neg => "-",
            UnOp::Not => "!",
            UnOp::Inc => "++",
            UnOp::Dec => "--",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub node: ExprKind,
    pub span: Span,
    pub id: NodeId,
}

#[derive(Debug, Clone)]
pub enum ExprKind {
    Var(String),
    ConstInt(i64),
    ConstBool(bool),
    ConstStr(String),
    Binop(BinOp, Box<Expr>, Box<Expr>),
    Unop(UnOp, Box<Expr>),
    Call(String, Vec<Expr>),
    /// `lvalue = rhs`; the lvalue is always a `Var` or `Index`.
    Assign(Box<Expr>, Box<Expr>),
    /// `base[i]` or `base[i][j]`, one node per postfix chain.
    Index(Box<Expr>, Vec<Expr>),
    /// `new int[n]` / `new boolean[r][c]` style allocation.
    NewArray(ElemType, Vec<Expr>),
    /// `{e, ...}` (1-d) or `{{...}, ...}` (2-d) literal.
    ArrayLit(Vec<Expr>),
    /// `e.length`, valid on one-dimensional arrays.
    Length(Box<Expr>),
    Hole(HoleId),
}

#[derive(Debug, Clone)]
pub struct Stmt {
    pub node: StmtKind,
    pub span: Span,
    pub id: NodeId,
}

#[derive(Debug, Clone)]
pub enum StmtKind {
    Let {
        name: String,
        ty: Type,
        init: Expr,
    },
    Expr(Expr),
    If {
        guard: Expr,
        then: Box<Stmt>,
        els: Option<Box<Stmt>>,
    },
    While {
        guard: Expr,
        body: Box<Stmt>,
    },
    /// Surface sugar; rewritten by [`desugar`] before synthesis or evaluation.
    For {
        init: Box<Stmt>,
        guard: Expr,
        step: Expr,
        body: Box<Stmt>,
    },
    Block(Vec<Stmt>),
    Return(Option<Expr>),
    Hole(HoleId),
}

/// A single function. Corpus programs are hole-free; a draft's program may
/// contain holes.
#[derive(Debug, Clone)]
pub struct Program {
    pub name: String,
    pub params: Vec<(String, Type)>,
    pub return_type: Type,
    pub body: Stmt,
    pub span: Span,
}

impl Expr {
    pub fn is_lvalue(&self) -> bool {
        matches!(self.node, ExprKind::Var(_) | ExprKind::Index(..))
    }

    /// Number of expression nodes in this subtree.
    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }

    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match &self.node {
            ExprKind::Var(_)
            | ExprKind::ConstInt(_)
            | ExprKind::ConstBool(_)
            | ExprKind::ConstStr(_)
            | ExprKind::Hole(_) => {}
            ExprKind::Binop(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            ExprKind::Unop(_, e) | ExprKind::Length(e) => e.walk(f),
            ExprKind::Call(_, args) => {
                for a in args {
                    a.walk(f);
                }
            }
            ExprKind::Assign(l, r) => {
                l.walk(f);
                r.walk(f);
            }
            ExprKind::Index(base, idxs) => {
                base.walk(f);
                for i in idxs {
                    i.walk(f);
                }
            }
            ExprKind::NewArray(_, dims) => {
                for d in dims {
                    d.walk(f);
                }
            }
            ExprKind::ArrayLit(elems) => {
                for e in elems {
                    e.walk(f);
                }
            }
        }
    }
}

impl Stmt {
    /// Number of statement plus expression nodes in this subtree.
    pub fn node_count(&self) -> usize {
        let mut stmts = 0;
        let mut exprs = 0;
        self.walk(&mut |_| stmts += 1, &mut |_| exprs += 1);
        stmts + exprs
    }

    pub fn walk<'a>(
        &'a self,
        on_stmt: &mut impl FnMut(&'a Stmt),
        on_expr: &mut impl FnMut(&'a Expr),
    ) {
        on_stmt(self);
        match &self.node {
            StmtKind::Let { init, .. } => init.walk(on_expr),
            StmtKind::Expr(e) => e.walk(on_expr),
            StmtKind::If { guard, then, els } => {
                guard.walk(on_expr);
                then.walk(on_stmt, on_expr);
                if let Some(e) = els {
                    e.walk(on_stmt, on_expr);
                }
            }
            StmtKind::While { guard, body } => {
                guard.walk(on_expr);
                body.walk(on_stmt, on_expr);
            }
            StmtKind::For {
                init,
                guard,
                step,
                body,
            } => {
                init.walk(on_stmt, on_expr);
                guard.walk(on_expr);
                step.walk(on_expr);
                body.walk(on_stmt, on_expr);
            }
            StmtKind::Block(stmts) => {
                for s in stmts {
                    s.walk(on_stmt, on_expr);
                }
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    e.walk(on_expr);
                }
            }
            StmtKind::Hole(_) => {}
        }
    }
}

impl Program {
    pub fn walk<'a>(
        &'a self,
        on_stmt: &mut impl FnMut(&'a Stmt),
        on_expr: &mut impl FnMut(&'a Expr),
    ) {
        self.body.walk(on_stmt, on_expr);
    }

    /// Hole ids in source order, split into (expression holes, statement holes).
    pub fn holes(&self) -> (Vec<HoleId>, Vec<HoleId>) {
        let mut stmts = Vec::new();
        let mut exprs = Vec::new();
        self.walk(
            &mut |s| {
                if let StmtKind::Hole(h) = &s.node {
                    stmts.push(*h);
                }
            },
            &mut |e| {
                if let ExprKind::Hole(h) = &e.node {
                    exprs.push(*h);
                }
            },
        );
        stmts.sort();
        exprs.sort();
        (exprs, stmts)
    }

    pub fn has_holes(&self) -> bool {
        let (e, s) = self.holes();
        !e.is_empty() || !s.is_empty()
    }

    /// Total count of expression nodes in the body.
    pub fn expr_node_count(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| {}, &mut |_| n += 1);
        n
    }

    /// Reassign fresh sequential node ids across the whole tree.
    pub fn renumber(&mut self) {
        let mut next = 0u32;
        renumber_stmt(&mut self.body, &mut next);
    }
}

fn renumber_stmt(s: &mut Stmt, next: &mut u32) {
    s.id = NodeId(*next);
    *next += 1;
    match &mut s.node {
        StmtKind::Let { init, .. } => renumber_expr(init, next),
        StmtKind::Expr(e) => renumber_expr(e, next),
        StmtKind::If { guard, then, els } => {
            renumber_expr(guard, next);
            renumber_stmt(then, next);
            if let Some(e) = els {
                renumber_stmt(e, next);
            }
        }
        StmtKind::While { guard, body } => {
            renumber_expr(guard, next);
            renumber_stmt(body, next);
        }
        StmtKind::For {
            init,
            guard,
            step,
            body,
        } => {
            renumber_stmt(init, next);
            renumber_expr(guard, next);
            renumber_expr(step, next);
            renumber_stmt(body, next);
        }
        StmtKind::Block(stmts) => {
            for s in stmts {
                renumber_stmt(s, next);
            }
        }
        StmtKind::Return(Some(e)) => renumber_expr(e, next),
        StmtKind::Return(None) | StmtKind::Hole(_) => {}
    }
}

fn renumber_expr(e: &mut Expr, next: &mut u32) {
    e.id = NodeId(*next);
    *next += 1;
    match &mut e.node {
        ExprKind::Var(_)
        | ExprKind::ConstInt(_)
        | ExprKind::ConstBool(_)
        | ExprKind::ConstStr(_)
        | ExprKind::Hole(_) => {}
        ExprKind::Binop(_, a, b) => {
            renumber_expr(a, next);
            renumber_expr(b, next);
        }
        ExprKind::Unop(_, e) | ExprKind::Length(e) => renumber_expr(e, next),
        ExprKind::Call(_, args) => {
            for a in args {
                renumber_expr(a, next);
            }
        }
        ExprKind::Assign(l, r) => {
            renumber_expr(l, next);
            renumber_expr(r, next);
        }
        ExprKind::Index(base, idxs) => {
            renumber_expr(base, next);
            for i in idxs {
                renumber_expr(i, next);
            }
        }
        ExprKind::NewArray(_, dims) => {
            for d in dims {
                renumber_expr(d, next);
            }
        }
        ExprKind::ArrayLit(elems) => {
            for e in elems {
                renumber_expr(e, next);
            }
        }
    }
}

/// Rewrite every `for` loop into `{ init; while (guard) { body; step; } }`.
/// Holes and all other nodes are preserved, so the rewrite is idempotent.
pub fn desugar(p: &Program) -> Program {
    let mut out = p.clone();
    out.body = desugar_stmt(&p.body);
    out
}

fn desugar_stmt(s: &Stmt) -> Stmt {
    let node = match &s.node {
        StmtKind::For {
            init,
            guard,
            step,
            body,
        } => {
            let step_stmt = Stmt {
                node: StmtKind::Expr(step.clone()),
                span: step.span,
                id: NodeId(u32::MAX),
            };
            let inner_body = Stmt {
                node: StmtKind::Block(vec![desugar_stmt(body), step_stmt]),
                span: body.span,
                id: NodeId(u32::MAX),
            };
            let while_stmt = Stmt {
                node: StmtKind::While {
                    guard: guard.clone(),
                    body: Box::new(inner_body),
                },
                span: s.span,
                id: NodeId(u32::MAX),
            };
            StmtKind::Block(vec![desugar_stmt(init), while_stmt])
        }
        StmtKind::If { guard, then, els } => StmtKind::If {
            guard: guard.clone(),
            then: Box::new(desugar_stmt(then)),
            els: els.as_ref().map(|e| Box::new(desugar_stmt(e))),
        },
        StmtKind::While { guard, body } => StmtKind::While {
            guard: guard.clone(),
            body: Box::new(desugar_stmt(body)),
        },
        StmtKind::Block(stmts) => StmtKind::Block(stmts.iter().map(desugar_stmt).collect()),
        other => other.clone(),
    };
    Stmt {
        node,
        span: s.span,
        id: s.id,
    }
}

/// Structural equality, ignoring spans and node ids.
pub fn program_eq(a: &Program, b: &Program) -> bool {
    a.name == b.name
        && a.params == b.params
        && a.return_type == b.return_type
        && stmt_eq(&a.body, &b.body)
}

pub fn stmt_eq(a: &Stmt, b: &Stmt) -> bool {
    match (&a.node, &b.node) {
        (
            StmtKind::Let {
                name: n1,
                ty: t1,
                init: e1,
            },
            StmtKind::Let {
                name: n2,
                ty: t2,
                init: e2,
            },
        ) => n1 == n2 && t1 == t2 && expr_eq(e1, e2),
        (StmtKind::Expr(e1), StmtKind::Expr(e2)) => expr_eq(e1, e2),
        (
            StmtKind::If {
                guard: g1,
                then: t1,
                els: e1,
            },
            StmtKind::If {
                guard: g2,
                then: t2,
                els: e2,
            },
        ) => {
            expr_eq(g1, g2)
                && stmt_eq(t1, t2)
                && match (e1, e2) {
                    (None, None) => true,
                    (Some(x), Some(y)) => stmt_eq(x, y),
                    _ => false,
                }
        }
        (
            StmtKind::While {
                guard: g1,
                body: b1,
            },
            StmtKind::While {
                guard: g2,
                body: b2,
            },
        ) => expr_eq(g1, g2) && stmt_eq(b1, b2),
        (
            StmtKind::For {
                init: i1,
                guard: g1,
                step: s1,
                body: b1,
            },
            StmtKind::For {
                init: i2,
                guard: g2,
                step: s2,
                body: b2,
            },
        ) => stmt_eq(i1, i2) && expr_eq(g1, g2) && expr_eq(s1, s2) && stmt_eq(b1, b2),
        (StmtKind::Block(x), StmtKind::Block(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(a, b)| stmt_eq(a, b))
        }
        (StmtKind::Return(None), StmtKind::Return(None)) => true,
        (StmtKind::Return(Some(x)), StmtKind::Return(Some(y))) => expr_eq(x, y),
        (StmtKind::Hole(h1), StmtKind::Hole(h2)) => h1 == h2,
        _ => false,
    }
}

pub fn expr_eq(a: &Expr, b: &Expr) -> bool {
    match (&a.node, &b.node) {
        (ExprKind::Var(x), ExprKind::Var(y)) => x == y,
        (ExprKind::ConstInt(x), ExprKind::ConstInt(y)) => x == y,
        (ExprKind::ConstBool(x), ExprKind::ConstBool(y)) => x == y,
        (ExprKind::ConstStr(x), ExprKind::ConstStr(y)) => x == y,
        (ExprKind::Binop(o1, a1, b1), ExprKind::Binop(o2, a2, b2)) => {
            o1 == o2 && expr_eq(a1, a2) && expr_eq(b1, b2)
        }
        (ExprKind::Unop(o1, e1), ExprKind::Unop(o2, e2)) => o1 == o2 && expr_eq(e1, e2),
        (ExprKind::Call(f1, a1), ExprKind::Call(f2, a2)) => {
            f1 == f2 && a1.len() == a2.len() && a1.iter().zip(a2).all(|(x, y)| expr_eq(x, y))
        }
        (ExprKind::Assign(l1, r1), ExprKind::Assign(l2, r2)) => {
            expr_eq(l1, l2) && expr_eq(r1, r2)
        }
        (ExprKind::Index(b1, i1), ExprKind::Index(b2, i2)) => {
            expr_eq(b1, b2) && i1.len() == i2.len() && i1.iter().zip(i2).all(|(x, y)| expr_eq(x, y))
        }
        (ExprKind::NewArray(e1, d1), ExprKind::NewArray(e2, d2)) => {
            e1 == e2 && d1.len() == d2.len() && d1.iter().zip(d2).all(|(x, y)| expr_eq(x, y))
        }
        (ExprKind::ArrayLit(x), ExprKind::ArrayLit(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(a, b)| expr_eq(a, b))
        }
        (ExprKind::Length(x), ExprKind::Length(y)) => expr_eq(x, y),
        (ExprKind::Hole(h1), ExprKind::Hole(h2)) => h1 == h2,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(node: ExprKind) -> Expr {
        Expr {
            node,
            span: Span::default(),
            id: NodeId(0),
        }
    }

    fn st(node: StmtKind) -> Stmt {
        Stmt {
            node,
            span: Span::default(),
            id: NodeId(0),
        }
    }

    #[test]
    fn desugar_rewrites_for_to_while_block() {
        // for (int i = 2; i <= n; i++) s;  =>  { int i = 2; while (i <= n) { s; i++; } }
        let body = st(StmtKind::Block(vec![st(StmtKind::Expr(e(
            ExprKind::Assign(
                Box::new(e(ExprKind::Var("x".into()))),
                Box::new(e(ExprKind::ConstInt(1))),
            ),
        )))]));
        let for_stmt = st(StmtKind::For {
            init: Box::new(st(StmtKind::Let {
                name: "i".into(),
                ty: Type::Int,
                init: e(ExprKind::ConstInt(2)),
            })),
            guard: e(ExprKind::Binop(
                BinOp::Le,
                Box::new(e(ExprKind::Var("i".into()))),
                Box::new(e(ExprKind::Var("n".into()))),
            )),
            step: e(ExprKind::Unop(
                UnOp::Inc,
                Box::new(e(ExprKind::Var("i".into()))),
            )),
            body: Box::new(body),
        });
        let p = Program {
            name: "f".into(),
            params: vec![("n".into(), Type::Int)],
            return_type: Type::Unit,
            body: st(StmtKind::Block(vec![for_stmt])),
            span: Span::default(),
        };
        let d = desugar(&p);
        // Outermost block with one element: the desugared block.
        let StmtKind::Block(top) = &d.body.node else {
            panic!("expected block")
        };
        let StmtKind::Block(parts) = &top[0].node else {
            panic!("expected desugared for to be a block")
        };
        assert!(matches!(parts[0].node, StmtKind::Let { .. }));
        assert!(matches!(parts[1].node, StmtKind::While { .. }));
        // Idempotence.
        assert!(program_eq(&desugar(&d), &d));
    }

    #[test]
    fn desugar_identity_without_for() {
        let p = Program {
            name: "f".into(),
            params: vec![],
            return_type: Type::Int,
            body: st(StmtKind::Block(vec![st(StmtKind::Return(Some(e(
                ExprKind::ConstInt(0),
            ))))])),
            span: Span::default(),
        };
        assert!(program_eq(&desugar(&p), &p));
    }

    #[test]
    fn structural_eq_ignores_ids_and_spans() {
        let mut a = e(ExprKind::ConstInt(7));
        let mut b = e(ExprKind::ConstInt(7));
        a.id = NodeId(1);
        b.id = NodeId(99);
        b.span = Span::new(10, 11);
        assert!(expr_eq(&a, &b));
    }
}
