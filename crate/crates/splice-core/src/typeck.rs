//! Type checker. Works on hole-free programs and on drafts: each hole must
//! sit in a context that forces a unique type (assignment target, guard,
//! index, call argument, ...). A hole in a non-forcing context is an error.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::ast::*;
use crate::codelet::{Role, Side};
use crate::error::TypeError;
use crate::lexer::line_col;

/// Signature of a registered API function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiSig {
    pub params: Vec<Type>,
    pub ret: Type,
}

/// The signature table. Opaque type names are exactly the names appearing in
/// registered signatures; any other opaque name is a type error.
#[derive(Debug, Clone, Default)]
pub struct ApiSigs {
    sigs: BTreeMap<String, ApiSig>,
    opaque_types: BTreeSet<String>,
}

impl ApiSigs {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a signature; returns false if the name is already taken.
    pub fn insert(&mut self, name: &str, sig: ApiSig) -> bool {
        if self.sigs.contains_key(name) {
            return false;
        }
        for ty in sig.params.iter().chain(std::iter::once(&sig.ret)) {
            match ty {
                Type::Opaque(n) => {
                    self.opaque_types.insert(n.clone());
                }
                Type::Array {
                    elem: ElemType::Opaque(n),
                    ..
                } => {
                    self.opaque_types.insert(n.clone());
                }
                _ => {}
            }
        }
        self.sigs.insert(name.to_string(), sig);
        true
    }

    pub fn get(&self, name: &str) -> Option<&ApiSig> {
        self.sigs.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.sigs.contains_key(name)
    }

    pub fn opaque_registered(&self, name: &str) -> bool {
        self.opaque_types.contains(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.sigs.keys().map(|s| s.as_str())
    }
}

/// Result of checking one program.
#[derive(Debug, Clone, Default)]
pub struct CheckOutcome {
    pub hole_types: BTreeMap<HoleId, Type>,
    pub hole_roles: BTreeMap<HoleId, Role>,
    /// Variables visible at each hole, in declaration order (params first).
    pub hole_scopes: BTreeMap<HoleId, Vec<(String, Type)>>,
    pub expr_types: HashMap<NodeId, Type>,
    pub expr_roles: HashMap<NodeId, Role>,
}

struct Checker<'a> {
    src: &'a str,
    sigs: &'a ApiSigs,
    fns: BTreeMap<String, ApiSig>,
    scopes: Vec<Vec<(String, Type)>>,
    ret: Type,
    out: CheckOutcome,
}

type TResult<T> = Result<T, TypeError>;

/// Check `p` against the signature table. `extra_fns` are user functions
/// callable by name (the draft function inside a test harness); `p` may
/// always call itself.
pub fn check_program(
    p: &Program,
    sigs: &ApiSigs,
    extra_fns: &BTreeMap<String, ApiSig>,
    src: &str,
) -> TResult<CheckOutcome> {
    let mut fns = extra_fns.clone();
    fns.insert(
        p.name.clone(),
        ApiSig {
            params: p.params.iter().map(|(_, t)| t.clone()).collect(),
            ret: p.return_type.clone(),
        },
    );
    let mut ck = Checker {
        src,
        sigs,
        fns,
        scopes: Vec::new(),
        ret: p.return_type.clone(),
        out: CheckOutcome::default(),
    };
    ck.check(p)?;
    Ok(ck.out)
}

impl<'a> Checker<'a> {
    fn error<T>(&self, span: Span, message: impl Into<String>) -> TResult<T> {
        let (line, col) = line_col(self.src, span.lo);
        Err(TypeError {
            message: message.into(),
            line,
            col,
        })
    }

    fn mismatch<T>(&self, span: Span, expected: &Type, actual: &Type) -> TResult<T> {
        self.error(
            span,
            format!("expected `{expected}`, found `{actual}`"),
        )
    }

    fn validate_type(&self, ty: &Type, span: Span, allow_unit: bool) -> TResult<()> {
        match ty {
            Type::Unit if !allow_unit => self.error(span, "`void` is not usable here"),
            Type::Opaque(n) => {
                if self.sigs.opaque_registered(n) {
                    Ok(())
                } else {
                    self.error(span, format!("unknown type `{n}`"))
                }
            }
            Type::Array { elem, dims } => {
                if !(*dims == 1 || *dims == 2) {
                    return self.error(span, "arrays have at most two dimensions");
                }
                if let ElemType::Opaque(n) = elem {
                    if !self.sigs.opaque_registered(n) {
                        return self.error(span, format!("unknown type `{n}`"));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn lookup(&self, name: &str) -> Option<&Type> {
        for scope in self.scopes.iter().rev() {
            if let Some((_, t)) = scope.iter().rev().find(|(n, _)| n == name) {
                return Some(t);
            }
        }
        None
    }

    /// Bindings visible here in declaration order; an inner declaration
    /// shadowing an outer name replaces it.
    fn visible(&self) -> Vec<(String, Type)> {
        let mut out: Vec<(String, Type)> = Vec::new();
        for (name, ty) in self.scopes.iter().flatten() {
            out.retain(|(n, _)| n != name);
            out.push((name.clone(), ty.clone()));
        }
        out
    }

    fn check(&mut self, p: &Program) -> TResult<()> {
        self.validate_type(&p.return_type, p.span, true)?;
        let mut params = Vec::new();
        for (name, ty) in &p.params {
            self.validate_type(ty, p.span, false)?;
            if params.iter().any(|(n, _): &(String, Type)| n == name) {
                return self.error(p.span, format!("duplicate parameter `{name}`"));
            }
            params.push((name.clone(), ty.clone()));
        }
        self.scopes.push(params);
        self.check_stmt(&p.body)?;
        self.scopes.pop();
        Ok(())
    }

    fn check_stmt(&mut self, s: &Stmt) -> TResult<()> {
        match &s.node {
            StmtKind::Let { name, ty, init } => {
                self.validate_type(ty, s.span, false)?;
                self.infer(init, Some(ty), Role::LetInit)?;
                let scope = self.scopes.last_mut().expect("scope");
                if scope.iter().any(|(n, _)| n == name) {
                    return self.error(s.span, format!("`{name}` already declared in this block"));
                }
                self.scopes
                    .last_mut()
                    .expect("scope")
                    .push((name.clone(), ty.clone()));
                Ok(())
            }
            StmtKind::Expr(e) => {
                self.infer(e, None, Role::ExprStmt)?;
                Ok(())
            }
            StmtKind::If { guard, then, els } => {
                self.infer(guard, Some(&Type::Bool), Role::IfGuard)?;
                self.check_stmt(then)?;
                if let Some(e) = els {
                    self.check_stmt(e)?;
                }
                Ok(())
            }
            StmtKind::While { guard, body } => {
                self.infer(guard, Some(&Type::Bool), Role::WhileGuard)?;
                self.check_stmt(body)
            }
            StmtKind::For {
                init,
                guard,
                step,
                body,
            } => {
                // Same scoping as the desugared `{ init; while ... }` form.
                self.scopes.push(Vec::new());
                self.check_stmt(init)?;
                self.infer(guard, Some(&Type::Bool), Role::WhileGuard)?;
                self.infer(step, None, Role::ExprStmt)?;
                self.check_stmt(body)?;
                self.scopes.pop();
                Ok(())
            }
            StmtKind::Block(stmts) => {
                self.scopes.push(Vec::new());
                for st in stmts {
                    self.check_stmt(st)?;
                }
                self.scopes.pop();
                Ok(())
            }
            StmtKind::Return(value) => match (value, self.ret.clone()) {
                (None, Type::Unit) => Ok(()),
                (None, other) => {
                    self.error(s.span, format!("function must return a value of type `{other}`"))
                }
                (Some(e), Type::Unit) => {
                    let _ = e;
                    self.error(s.span, "void function cannot return a value")
                }
                (Some(e), ret) => {
                    self.infer(e, Some(&ret), Role::ReturnValue)?;
                    Ok(())
                }
            },
            StmtKind::Hole(h) => {
                // statement holes have no forced type or role, but merge
                // needs the scope visible at the splice point
                self.out.hole_scopes.insert(*h, self.visible());
                Ok(())
            }
        }
    }

    fn infer(&mut self, e: &Expr, expected: Option<&Type>, role: Role) -> TResult<Type> {
        let ty = match &e.node {
            ExprKind::Hole(h) => match expected {
                Some(t) => {
                    self.out.hole_types.insert(*h, t.clone());
                    self.out.hole_roles.insert(*h, role.clone());
                    self.out.hole_scopes.insert(*h, self.visible());
                    t.clone()
                }
                None => {
                    return self.error(
                        e.span,
                        "ambiguous hole: context does not force a unique type",
                    )
                }
            },
            ExprKind::Var(name) => match self.lookup(name) {
                Some(t) => t.clone(),
                None => return self.error(e.span, format!("undefined variable `{name}`")),
            },
            ExprKind::ConstInt(_) => Type::Int,
            ExprKind::ConstBool(_) => Type::Bool,
            ExprKind::ConstStr(_) => Type::Str,
            ExprKind::Binop(op, lhs, rhs) => {
                if op.is_arith() || op.is_compare() {
                    self.infer(lhs, Some(&Type::Int), Role::BinopOperand(Side::Left))?;
                    self.infer(rhs, Some(&Type::Int), Role::BinopOperand(Side::Right))?;
                    if op.is_arith() {
                        Type::Int
                    } else {
                        Type::Bool
                    }
                } else if op.is_logic() {
                    self.infer(lhs, Some(&Type::Bool), Role::BinopOperand(Side::Left))?;
                    self.infer(rhs, Some(&Type::Bool), Role::BinopOperand(Side::Right))?;
                    Type::Bool
                } else {
                    // == and != : operand types must agree and be scalar; a
                    // hole on one side takes the other side's type.
                    let t = if matches!(lhs.node, ExprKind::Hole(_))
                        && !matches!(rhs.node, ExprKind::Hole(_))
                    {
                        let rt = self.infer(rhs, None, Role::BinopOperand(Side::Right))?;
                        self.infer(lhs, Some(&rt), Role::BinopOperand(Side::Left))?;
                        rt
                    } else {
                        let lt = self.infer(lhs, None, Role::BinopOperand(Side::Left))?;
                        self.infer(rhs, Some(&lt), Role::BinopOperand(Side::Right))?;
                        lt
                    };
                    if !matches!(t, Type::Int | Type::Bool | Type::Str) {
                        return self.error(
                            e.span,
                            format!("`{}` is not defined on `{t}`", op.symbol()),
                        );
                    }
                    Type::Bool
                }
            }
            ExprKind::Unop(op, operand) => match op {
                UnOp::Neg => {
                    self.infer(operand, Some(&Type::Int), Role::UnopOperand)?;
                    Type::Int
                }
                UnOp::Not => {
                    self.infer(operand, Some(&Type::Bool), Role::UnopOperand)?;
                    Type::Bool
                }
                UnOp::Inc | UnOp::Dec => {
                    if !operand.is_lvalue() {
                        return self.error(
                            e.span,
                            format!("`{}` requires a variable or array element", op.symbol()),
                        );
                    }
                    self.infer(operand, Some(&Type::Int), Role::UnopOperand)?;
                    Type::Int
                }
            },
            ExprKind::Call(fname, args) => {
                let sig = self
                    .fns
                    .get(fname)
                    .cloned()
                    .or_else(|| self.sigs.get(fname).cloned());
                let Some(sig) = sig else {
                    return self.error(e.span, format!("unknown function `{fname}`"));
                };
                if sig.params.len() != args.len() {
                    return self.error(
                        e.span,
                        format!(
                            "`{fname}` takes {} argument(s), got {}",
                            sig.params.len(),
                            args.len()
                        ),
                    );
                }
                for (i, (arg, pt)) in args.iter().zip(&sig.params).enumerate() {
                    self.infer(arg, Some(pt), Role::CallArg(i as u8))?;
                }
                sig.ret
            }
            ExprKind::Assign(lvalue, rhs) => {
                if !lvalue.is_lvalue() {
                    return self.error(e.span, "assignment target must be a variable or array element");
                }
                let lt = self.infer(lvalue, None, Role::AssignLhs)?;
                self.infer(rhs, Some(&lt), Role::AssignRhs)?;
                lt
            }
            ExprKind::Index(base, indices) => {
                let bt = self.infer(base, None, Role::IndexBase)?;
                let Type::Array { elem, dims } = bt else {
                    return self.error(e.span, format!("cannot index into `{bt}`"));
                };
                if indices.len() > dims as usize {
                    return self.error(
                        e.span,
                        format!("too many indices for {dims}-dimensional array"),
                    );
                }
                for idx in indices {
                    self.infer(idx, Some(&Type::Int), Role::IndexPos)?;
                }
                let remaining = dims - indices.len() as u8;
                if remaining == 0 {
                    elem.to_type()
                } else {
                    Type::array(elem, remaining)
                }
            }
            ExprKind::NewArray(elem, dims) => {
                let ty = Type::array(elem.clone(), dims.len() as u8);
                self.validate_type(&ty, e.span, false)?;
                for d in dims {
                    self.infer(d, Some(&Type::Int), Role::ArrayDim)?;
                }
                ty
            }
            ExprKind::ArrayLit(elems) => {
                if elems.is_empty() {
                    return self.error(e.span, "cannot infer the type of an empty array literal");
                }
                let pivot = elems
                    .iter()
                    .position(|x| !matches!(x.node, ExprKind::Hole(_)))
                    .unwrap_or(0);
                let et = self.infer(&elems[pivot], None, Role::ArrayElem)?;
                for (i, x) in elems.iter().enumerate() {
                    if i != pivot {
                        self.infer(x, Some(&et), Role::ArrayElem)?;
                    }
                }
                match et {
                    Type::Int => Type::array(ElemType::Int, 1),
                    Type::Bool => Type::array(ElemType::Bool, 1),
                    Type::Str => Type::array(ElemType::Str, 1),
                    Type::Opaque(n) => Type::array(ElemType::Opaque(n), 1),
                    Type::Array { elem, dims: 1 } => Type::array(elem, 2),
                    other => {
                        return self.error(
                            e.span,
                            format!("array literal elements cannot have type `{other}`"),
                        )
                    }
                }
            }
            ExprKind::Length(base) => {
                let bt = self.infer(base, None, Role::LengthBase)?;
                match bt {
                    Type::Array { dims: 1, .. } => Type::Int,
                    other => {
                        return self.error(
                            e.span,
                            format!("`.length` requires a one-dimensional array, found `{other}`"),
                        )
                    }
                }
            }
        };
        if let Some(exp) = expected {
            if *exp != ty {
                return self.mismatch(e.span, exp, &ty);
            }
        }
        self.out.expr_types.insert(e.id, ty.clone());
        self.out.expr_roles.insert(e.id, role);
        Ok(ty)
    }
}
