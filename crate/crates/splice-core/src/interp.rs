//! Deterministic tree-walking evaluator with step fuel and wall-clock limits,
//! API-call trace capture, and a read-only virtual filesystem backing the
//! file-reading built-ins.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::ast::*;
use crate::draft::{build_test_harness, TestsReq};
use crate::typeck::{check_program, ApiSig, ApiSigs};

/// Runtime values. Arrays have reference semantics, like the Java programs
/// the surface syntax mimics.
#[derive(Debug, Clone)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Str(String),
    Array(ArrayRef),
    Unit,
    Opaque(OpaqueVal),
    /// Uninitialized opaque array slot; any read errors with `NullRead`.
    Null,
}

#[derive(Debug, Clone)]
pub struct ArrayRef {
    pub elem: ElemType,
    pub dims: u8,
    pub cells: Rc<RefCell<Vec<Value>>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpaqueVal {
    pub type_name: String,
    pub handle: u64,
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::Unit, Value::Unit) => true,
            (Value::Null, Value::Null) => true,
            (Value::Opaque(a), Value::Opaque(b)) => a == b,
            (Value::Array(a), Value::Array(b)) => {
                a.elem == b.elem && a.dims == b.dims && *a.cells.borrow() == *b.cells.borrow()
            }
            _ => false,
        }
    }
}

impl Value {
    pub fn type_of(&self) -> Option<Type> {
        match self {
            Value::Int(_) => Some(Type::Int),
            Value::Bool(_) => Some(Type::Bool),
            Value::Str(_) => Some(Type::Str),
            Value::Unit => Some(Type::Unit),
            Value::Array(a) => Some(Type::array(a.elem.clone(), a.dims)),
            Value::Opaque(o) => Some(Type::Opaque(o.type_name.clone())),
            Value::Null => None,
        }
    }

    pub fn matches(&self, ty: &Type) -> bool {
        self.type_of().as_ref() == Some(ty)
    }

    pub fn int_array(values: &[i64]) -> Value {
        Value::Array(ArrayRef {
            elem: ElemType::Int,
            dims: 1,
            cells: Rc::new(RefCell::new(values.iter().map(|v| Value::Int(*v)).collect())),
        })
    }

    pub fn bool_array(len: usize) -> Value {
        Value::Array(ArrayRef {
            elem: ElemType::Bool,
            dims: 1,
            cells: Rc::new(RefCell::new(vec![Value::Bool(false); len])),
        })
    }
}

/// One captured API invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiEvent {
    pub fname: String,
    pub arg_types: Vec<Type>,
    /// Opaque type of the first argument, when there is one.
    pub receiver_type: Option<String>,
    /// Strictly increasing within one evaluation.
    pub seq: u32,
}

/// Execution limits; whichever trips first aborts the evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub step_fuel: u64,
    pub wall_clock: Duration,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            step_fuel: 10_000_000,
            wall_clock: Duration::from_secs(1),
        }
    }
}

impl Limits {
    pub fn new(step_fuel: u64, wall_clock: Duration) -> Self {
        Limits {
            step_fuel,
            wall_clock,
        }
    }
}

/// In-memory read-only file store for the file built-ins.
#[derive(Debug, Clone, Default)]
pub struct VirtualFs {
    files: BTreeMap<String, String>,
}

impl VirtualFs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_file(mut self, path: &str, content: &str) -> Self {
        self.files.insert(path.to_string(), content.to_string());
        self
    }

    pub fn insert(&mut self, path: &str, content: &str) {
        self.files.insert(path.to_string(), content.to_string());
    }

    pub fn read(&self, path: &str) -> Option<&str> {
        self.files.get(path).map(|s| s.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalErrorKind {
    /// Step fuel or wall clock exhausted.
    Timeout,
    DivByZero,
    IndexOutOfBounds,
    NullRead,
    BadParse,
    /// A non-void function fell off the end of its body.
    MissingReturn,
    RecursionLimit,
    /// A typing invariant was violated at runtime; unreachable for programs
    /// accepted by the checker.
    Internal,
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("{kind:?}: {message}")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub message: String,
}

impl EvalError {
    fn new(kind: EvalErrorKind, message: impl Into<String>) -> Self {
        EvalError {
            kind,
            message: message.into(),
        }
    }
}

/// Evaluation result plus the API trace; errors keep the partial trace.
#[derive(Debug)]
pub struct EvalOutcome {
    pub result: Result<Value, EvalError>,
    pub trace: Vec<ApiEvent>,
}

pub type ApiBehavior = Box<dyn Fn(&[Value], &VirtualFs) -> Result<Value, EvalError> + Send + Sync>;

#[derive(Debug, Clone, Error, PartialEq)]
#[error("API `{0}` is already registered")]
pub struct DuplicateApi(pub String);

/// Registered API functions: signatures for the type checker plus mock
/// behaviors for the evaluator. Every call through the table emits an
/// [`ApiEvent`].
pub struct ApiTable {
    sigs: ApiSigs,
    behaviors: BTreeMap<String, ApiBehavior>,
}

impl ApiTable {
    pub fn new() -> Self {
        ApiTable {
            sigs: ApiSigs::new(),
            behaviors: BTreeMap::new(),
        }
    }

    pub fn sigs(&self) -> &ApiSigs {
        &self.sigs
    }

    pub fn register(
        &mut self,
        name: &str,
        sig: ApiSig,
        behavior: ApiBehavior,
    ) -> Result<(), DuplicateApi> {
        if !self.sigs.insert(name, sig) {
            return Err(DuplicateApi(name.to_string()));
        }
        self.behaviors.insert(name.to_string(), behavior);
        Ok(())
    }

    /// The default table: string/file/math helpers plus the mock image
    /// pipeline used by the API-constraint benchmarks.
    pub fn with_builtins() -> Self {
        let mut t = ApiTable::new();
        let sig = |params: Vec<Type>, ret: Type| ApiSig { params, ret };
        let opaque = |n: &str| Type::Opaque(n.to_string());

        t.register(
            "readFile",
            sig(vec![Type::Str], Type::Str),
            Box::new(|args, fs| {
                let path = str_arg(args, 0)?;
                match fs.read(path) {
                    Some(content) => Ok(Value::Str(content.to_string())),
                    None => Err(EvalError::new(
                        EvalErrorKind::NullRead,
                        format!("no such file `{path}`"),
                    )),
                }
            }),
        )
        .unwrap();

        t.register(
            "split",
            sig(
                vec![Type::Str, Type::Str],
                Type::array(ElemType::Str, 1),
            ),
            Box::new(|args, _| {
                let s = str_arg(args, 0)?;
                let sep = str_arg(args, 1)?;
                if sep.is_empty() {
                    return Err(EvalError::new(
                        EvalErrorKind::BadParse,
                        "empty separator",
                    ));
                }
                let cells: Vec<Value> = s
                    .split(sep)
                    .map(|piece| Value::Str(piece.to_string()))
                    .collect();
                Ok(Value::Array(ArrayRef {
                    elem: ElemType::Str,
                    dims: 1,
                    cells: Rc::new(RefCell::new(cells)),
                }))
            }),
        )
        .unwrap();

        t.register(
            "parseInt",
            sig(vec![Type::Str], Type::Int),
            Box::new(|args, _| {
                let s = str_arg(args, 0)?;
                s.trim().parse::<i64>().map(Value::Int).map_err(|_| {
                    EvalError::new(EvalErrorKind::BadParse, format!("not an integer: `{s}`"))
                })
            }),
        )
        .unwrap();

        t.register(
            "strlen",
            sig(vec![Type::Str], Type::Int),
            Box::new(|args, _| Ok(Value::Int(str_arg(args, 0)?.chars().count() as i64))),
        )
        .unwrap();

        t.register(
            "abs",
            sig(vec![Type::Int], Type::Int),
            Box::new(|args, _| Ok(Value::Int(int_arg(args, 0)?.wrapping_abs()))),
        )
        .unwrap();

        t.register(
            "min",
            sig(vec![Type::Int, Type::Int], Type::Int),
            Box::new(|args, _| Ok(Value::Int(int_arg(args, 0)?.min(int_arg(args, 1)?)))),
        )
        .unwrap();

        t.register(
            "max",
            sig(vec![Type::Int, Type::Int], Type::Int),
            Box::new(|args, _| Ok(Value::Int(int_arg(args, 0)?.max(int_arg(args, 1)?)))),
        )
        .unwrap();

        // Mock image pipeline for the API-automaton tasks.
        t.register(
            "newClassifier",
            sig(vec![Type::Str], opaque("Classifier")),
            Box::new(|_, _| Ok(mock_opaque("Classifier"))),
        )
        .unwrap();
        t.register(
            "imread",
            sig(vec![Type::Str], opaque("Image")),
            Box::new(|args, fs| {
                let path = str_arg(args, 0)?;
                if fs.read(path).is_none() {
                    return Err(EvalError::new(
                        EvalErrorKind::NullRead,
                        format!("no such image `{path}`"),
                    ));
                }
                Ok(mock_opaque("Image"))
            }),
        )
        .unwrap();
        t.register(
            "detectMultiScale",
            sig(
                vec![opaque("Classifier"), opaque("Image")],
                opaque("Detections"),
            ),
            Box::new(|_, _| Ok(mock_opaque("Detections"))),
        )
        .unwrap();
        t.register(
            "rectangle",
            sig(vec![opaque("Image"), opaque("Detections")], Type::Unit),
            Box::new(|_, _| Ok(Value::Unit)),
        )
        .unwrap();
        t.register(
            "imwrite",
            sig(vec![Type::Str, opaque("Image")], Type::Unit),
            Box::new(|_, _| Ok(Value::Unit)),
        )
        .unwrap();

        t
    }
}

impl Default for ApiTable {
    fn default() -> Self {
        Self::new()
    }
}

impl std::fmt::Debug for ApiTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ApiTable")
            .field("functions", &self.behaviors.keys().collect::<Vec<_>>())
            .finish()
    }
}

fn mock_opaque(type_name: &str) -> Value {
    Value::Opaque(OpaqueVal {
        type_name: type_name.to_string(),
        handle: 0,
    })
}

fn str_arg(args: &[Value], i: usize) -> Result<&str, EvalError> {
    match args.get(i) {
        Some(Value::Str(s)) => Ok(s),
        other => Err(EvalError::new(
            EvalErrorKind::Internal,
            format!("expected string argument, got {other:?}"),
        )),
    }
}

fn int_arg(args: &[Value], i: usize) -> Result<i64, EvalError> {
    match args.get(i) {
        Some(Value::Int(v)) => Ok(*v),
        other => Err(EvalError::new(
            EvalErrorKind::Internal,
            format!("expected int argument, got {other:?}"),
        )),
    }
}

// Deep enough for every benchmark while keeping the evaluator's native
// recursion inside a 2 MB debug-build thread stack.
const MAX_CALL_DEPTH: u32 = 64;
const CLOCK_CHECK_INTERVAL: u64 = 1024;

/// Evaluate a hole-free program on `args`.
pub fn eval(
    p: &Program,
    args: Vec<Value>,
    api: &ApiTable,
    fs: &VirtualFs,
    limits: &Limits,
) -> EvalOutcome {
    eval_with_fns(p, args, api, fs, limits, &BTreeMap::new())
}

/// Evaluate with additional user functions callable by name (the candidate
/// under test inside a test harness). The entry program may always call
/// itself.
pub fn eval_with_fns(
    p: &Program,
    args: Vec<Value>,
    api: &ApiTable,
    fs: &VirtualFs,
    limits: &Limits,
    fns: &BTreeMap<String, &Program>,
) -> EvalOutcome {
    let mut programs: BTreeMap<String, Program> = BTreeMap::new();
    for (name, f) in fns {
        programs.insert(name.clone(), desugar(f));
    }
    programs.insert(p.name.clone(), desugar(p));
    let entry = programs[&p.name].clone();

    let mut ev = Eval {
        api,
        fs,
        fns: &programs,
        fuel: limits.step_fuel,
        deadline: Instant::now() + limits.wall_clock,
        until_clock_check: CLOCK_CHECK_INTERVAL,
        trace: Vec::new(),
        depth: 0,
    };
    let result = ev.call_program(&entry, args);
    EvalOutcome {
        result,
        trace: ev.trace,
    }
}

/// Run a candidate against an embedded test block. Every failure mode
/// (type error, runtime error, timeout, non-boolean result) maps to `false`.
pub fn run_tests(
    candidate: &Program,
    tests: &TestsReq,
    api: &ApiTable,
    fs: &VirtualFs,
    limits: &Limits,
) -> bool {
    let mut extra = BTreeMap::new();
    extra.insert(
        candidate.name.clone(),
        ApiSig {
            params: candidate.params.iter().map(|(_, t)| t.clone()).collect(),
            ret: candidate.return_type.clone(),
        },
    );
    if check_program(candidate, api.sigs(), &BTreeMap::new(), "").is_err() {
        return false;
    }
    let harness = build_test_harness(candidate, tests);
    if check_program(&harness, api.sigs(), &extra, "").is_err() {
        return false;
    }
    let mut fns = BTreeMap::new();
    fns.insert(candidate.name.clone(), candidate);
    matches!(
        eval_with_fns(&harness, Vec::new(), api, fs, limits, &fns).result,
        Ok(Value::Bool(true))
    )
}

enum Flow {
    Normal,
    Return(Value),
}

struct Eval<'a> {
    api: &'a ApiTable,
    fs: &'a VirtualFs,
    fns: &'a BTreeMap<String, Program>,
    fuel: u64,
    deadline: Instant,
    until_clock_check: u64,
    trace: Vec<ApiEvent>,
    depth: u32,
}

type EResult<T> = Result<T, EvalError>;

impl<'a> Eval<'a> {
    fn step(&mut self) -> EResult<()> {
        self.step_n(1)
    }

    fn step_n(&mut self, n: u64) -> EResult<()> {
        if self.fuel < n {
            return Err(EvalError::new(EvalErrorKind::Timeout, "step fuel exhausted"));
        }
        self.fuel -= n;
        if self.until_clock_check <= n {
            self.until_clock_check = CLOCK_CHECK_INTERVAL;
            if Instant::now() >= self.deadline {
                return Err(EvalError::new(EvalErrorKind::Timeout, "time limit exceeded"));
            }
        } else {
            self.until_clock_check -= n;
        }
        Ok(())
    }

    fn call_program(&mut self, p: &Program, args: Vec<Value>) -> EResult<Value> {
        if self.depth >= MAX_CALL_DEPTH {
            return Err(EvalError::new(
                EvalErrorKind::RecursionLimit,
                "call depth limit exceeded",
            ));
        }
        if args.len() != p.params.len() {
            return Err(EvalError::new(
                EvalErrorKind::Internal,
                format!(
                    "`{}` takes {} argument(s), got {}",
                    p.name,
                    p.params.len(),
                    args.len()
                ),
            ));
        }
        for (value, (name, ty)) in args.iter().zip(&p.params) {
            if !value.matches(ty) {
                return Err(EvalError::new(
                    EvalErrorKind::Internal,
                    format!("argument `{name}` does not have type `{ty}`"),
                ));
            }
        }
        self.depth += 1;
        let mut scopes: Vec<Vec<(String, Value)>> =
            vec![p.params.iter().map(|(n, _)| n.clone()).zip(args).map(|(n, v)| (n, v)).collect()];
        let flow = self.exec_stmt(&p.body, &mut scopes);
        self.depth -= 1;
        match flow? {
            Flow::Return(v) => Ok(v),
            Flow::Normal => {
                if p.return_type == Type::Unit {
                    Ok(Value::Unit)
                } else {
                    Err(EvalError::new(
                        EvalErrorKind::MissingReturn,
                        format!("`{}` finished without returning a value", p.name),
                    ))
                }
            }
        }
    }

    fn exec_stmt(&mut self, s: &Stmt, scopes: &mut Vec<Vec<(String, Value)>>) -> EResult<Flow> {
        self.step()?;
        match &s.node {
            StmtKind::Let { name, init, .. } => {
                let v = self.eval_expr(init, scopes)?;
                scopes.last_mut().unwrap().push((name.clone(), v));
                Ok(Flow::Normal)
            }
            StmtKind::Expr(e) => {
                self.eval_expr(e, scopes)?;
                Ok(Flow::Normal)
            }
            StmtKind::If { guard, then, els } => {
                if self.eval_bool(guard, scopes)? {
                    self.exec_stmt(then, scopes)
                } else if let Some(e) = els {
                    self.exec_stmt(e, scopes)
                } else {
                    Ok(Flow::Normal)
                }
            }
            StmtKind::While { guard, body } => {
                loop {
                    self.step()?;
                    if !self.eval_bool(guard, scopes)? {
                        break;
                    }
                    if let Flow::Return(v) = self.exec_stmt(body, scopes)? {
                        return Ok(Flow::Return(v));
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::Block(stmts) => {
                scopes.push(Vec::new());
                for st in stmts {
                    match self.exec_stmt(st, scopes)? {
                        Flow::Normal => {}
                        ret => {
                            scopes.pop();
                            return Ok(ret);
                        }
                    }
                }
                scopes.pop();
                Ok(Flow::Normal)
            }
            StmtKind::Return(value) => match value {
                Some(e) => {
                    let v = self.eval_expr(e, scopes)?;
                    Ok(Flow::Return(v))
                }
                None => Ok(Flow::Return(Value::Unit)),
            },
            StmtKind::For { .. } => Err(EvalError::new(
                EvalErrorKind::Internal,
                "for-loop reached the evaluator undesugared",
            )),
            StmtKind::Hole(_) => Err(EvalError::new(
                EvalErrorKind::Internal,
                "hole reached the evaluator",
            )),
        }
    }

    fn eval_bool(&mut self, e: &Expr, scopes: &mut Vec<Vec<(String, Value)>>) -> EResult<bool> {
        match self.eval_expr(e, scopes)? {
            Value::Bool(b) => Ok(b),
            other => Err(EvalError::new(
                EvalErrorKind::Internal,
                format!("guard evaluated to {other:?}"),
            )),
        }
    }

    fn lookup<'s>(
        scopes: &'s mut [Vec<(String, Value)>],
        name: &str,
    ) -> Option<&'s mut Value> {
        for scope in scopes.iter_mut().rev() {
            if let Some((_, v)) = scope.iter_mut().rev().find(|(n, _)| n == name) {
                return Some(v);
            }
        }
        None
    }

    fn eval_expr(&mut self, e: &Expr, scopes: &mut Vec<Vec<(String, Value)>>) -> EResult<Value> {
        self.step()?;
        match &e.node {
            ExprKind::Var(name) => match Self::lookup(scopes, name) {
                Some(v) => Ok(v.clone()),
                None => Err(EvalError::new(
                    EvalErrorKind::Internal,
                    format!("undefined variable `{name}`"),
                )),
            },
            ExprKind::ConstInt(v) => Ok(Value::Int(*v)),
            ExprKind::ConstBool(b) => Ok(Value::Bool(*b)),
            ExprKind::ConstStr(s) => Ok(Value::Str(s.clone())),
            ExprKind::Binop(op, lhs, rhs) => self.eval_binop(*op, lhs, rhs, scopes),
            ExprKind::Unop(op, operand) => match op {
                UnOp::Neg => match self.eval_expr(operand, scopes)? {
                    Value::Int(v) => Ok(Value::Int(v.wrapping_neg())),
                    other => Err(internal_type(other)),
                },
                UnOp::Not => match self.eval_expr(operand, scopes)? {
                    Value::Bool(b) => Ok(Value::Bool(!b)),
                    other => Err(internal_type(other)),
                },
                UnOp::Inc | UnOp::Dec => {
                    let delta = if matches!(op, UnOp::Inc) { 1 } else { -1 };
                    let old = match self.eval_expr(operand, scopes)? {
                        Value::Int(v) => v,
                        other => return Err(internal_type(other)),
                    };
                    let new = Value::Int(old.wrapping_add(delta));
                    self.write_lvalue(operand, new.clone(), scopes)?;
                    Ok(new)
                }
            },
            ExprKind::Call(fname, args) => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.eval_expr(a, scopes)?);
                }
                if let Some(callee) = self.fns.get(fname) {
                    let callee = callee.clone();
                    return self.call_program(&callee, values);
                }
                let Some(sig) = self.api.sigs.get(fname) else {
                    return Err(EvalError::new(
                        EvalErrorKind::Internal,
                        format!("unknown function `{fname}`"),
                    ));
                };
                let receiver_type = match values.first() {
                    Some(Value::Opaque(o)) => Some(o.type_name.clone()),
                    _ => None,
                };
                self.trace.push(ApiEvent {
                    fname: fname.clone(),
                    arg_types: sig.params.clone(),
                    receiver_type,
                    seq: self.trace.len() as u32,
                });
                for v in &values {
                    if matches!(v, Value::Null) {
                        return Err(EvalError::new(
                            EvalErrorKind::NullRead,
                            format!("null argument passed to `{fname}`"),
                        ));
                    }
                }
                (self.api.behaviors[fname])(&values, self.fs)
            }
            ExprKind::Assign(lvalue, rhs) => {
                let v = self.eval_expr(rhs, scopes)?;
                self.write_lvalue(lvalue, v.clone(), scopes)?;
                Ok(v)
            }
            ExprKind::Index(base, indices) => {
                let base = self.eval_expr(base, scopes)?;
                let Value::Array(arr) = base else {
                    return Err(internal_type(base));
                };
                let mut idxs = Vec::with_capacity(indices.len());
                for i in indices {
                    match self.eval_expr(i, scopes)? {
                        Value::Int(v) => idxs.push(v),
                        other => return Err(internal_type(other)),
                    }
                }
                array_read(&arr, &idxs)
            }
            ExprKind::NewArray(elem, dims) => {
                let mut sizes = Vec::with_capacity(dims.len());
                for d in dims {
                    match self.eval_expr(d, scopes)? {
                        Value::Int(v) if v >= 0 => sizes.push(v as usize),
                        Value::Int(v) => {
                            return Err(EvalError::new(
                                EvalErrorKind::IndexOutOfBounds,
                                format!("negative array size {v}"),
                            ))
                        }
                        other => return Err(internal_type(other)),
                    }
                }
                let total: usize = sizes.iter().product::<usize>().max(1);
                self.step_n(total as u64)?;
                Ok(alloc_array(elem, &sizes))
            }
            ExprKind::ArrayLit(elems) => {
                let mut values = Vec::with_capacity(elems.len());
                for x in elems {
                    values.push(self.eval_expr(x, scopes)?);
                }
                let (elem, dims) = match values.first() {
                    Some(Value::Array(a)) => (a.elem.clone(), 2),
                    Some(Value::Int(_)) => (ElemType::Int, 1),
                    Some(Value::Bool(_)) => (ElemType::Bool, 1),
                    Some(Value::Str(_)) => (ElemType::Str, 1),
                    Some(Value::Opaque(o)) => (ElemType::Opaque(o.type_name.clone()), 1),
                    _ => {
                        return Err(EvalError::new(
                            EvalErrorKind::Internal,
                            "untypeable array literal",
                        ))
                    }
                };
                Ok(Value::Array(ArrayRef {
                    elem,
                    dims,
                    cells: Rc::new(RefCell::new(values)),
                }))
            }
            ExprKind::Length(base) => match self.eval_expr(base, scopes)? {
                Value::Array(a) => Ok(Value::Int(a.cells.borrow().len() as i64)),
                Value::Null => Err(EvalError::new(EvalErrorKind::NullRead, ".length on null")),
                other => Err(internal_type(other)),
            },
            ExprKind::Hole(_) => Err(EvalError::new(
                EvalErrorKind::Internal,
                "hole reached the evaluator",
            )),
        }
    }

    fn eval_binop(
        &mut self,
        op: BinOp,
        lhs: &Expr,
        rhs: &Expr,
        scopes: &mut Vec<Vec<(String, Value)>>,
    ) -> EResult<Value> {
        // short-circuit forms first
        if matches!(op, BinOp::And | BinOp::Or) {
            let l = self.eval_bool(lhs, scopes)?;
            return match (op, l) {
                (BinOp::And, false) => Ok(Value::Bool(false)),
                (BinOp::Or, true) => Ok(Value::Bool(true)),
                _ => Ok(Value::Bool(self.eval_bool(rhs, scopes)?)),
            };
        }
        let l = self.eval_expr(lhs, scopes)?;
        let r = self.eval_expr(rhs, scopes)?;
        if op.is_equality() {
            let eq = match (&l, &r) {
                (Value::Int(a), Value::Int(b)) => a == b,
                (Value::Bool(a), Value::Bool(b)) => a == b,
                (Value::Str(a), Value::Str(b)) => a == b,
                _ => return Err(internal_type(l)),
            };
            return Ok(Value::Bool(if matches!(op, BinOp::Eq) { eq } else { !eq }));
        }
        let (Value::Int(a), Value::Int(b)) = (&l, &r) else {
            return Err(internal_type(l));
        };
        let (a, b) = (*a, *b);
        Ok(match op {
            BinOp::Add => Value::Int(a.wrapping_add(b)),
            BinOp::Sub => Value::Int(a.wrapping_sub(b)),
            BinOp::Mul => Value::Int(a.wrapping_mul(b)),
            BinOp::Div => {
                if b == 0 {
                    return Err(EvalError::new(EvalErrorKind::DivByZero, "division by zero"));
                }
                Value::Int(a.wrapping_div(b))
            }
            BinOp::Rem => {
                if b == 0 {
                    return Err(EvalError::new(EvalErrorKind::DivByZero, "remainder by zero"));
                }
                Value::Int(a.wrapping_rem(b))
            }
            BinOp::Lt => Value::Bool(a < b),
            BinOp::Le => Value::Bool(a <= b),
            BinOp::Gt => Value::Bool(a > b),
            BinOp::Ge => Value::Bool(a >= b),
            _ => unreachable!("handled above"),
        })
    }

    fn write_lvalue(
        &mut self,
        lvalue: &Expr,
        v: Value,
        scopes: &mut Vec<Vec<(String, Value)>>,
    ) -> EResult<()> {
        match &lvalue.node {
            ExprKind::Var(name) => match Self::lookup(scopes, name) {
                Some(slot) => {
                    *slot = v;
                    Ok(())
                }
                None => Err(EvalError::new(
                    EvalErrorKind::Internal,
                    format!("undefined variable `{name}`"),
                )),
            },
            ExprKind::Index(base, indices) => {
                let base = self.eval_expr(base, scopes)?;
                let Value::Array(arr) = base else {
                    return Err(internal_type(base));
                };
                let mut idxs = Vec::with_capacity(indices.len());
                for i in indices {
                    match self.eval_expr(i, scopes)? {
                        Value::Int(x) => idxs.push(x),
                        other => return Err(internal_type(other)),
                    }
                }
                array_write(&arr, &idxs, v)
            }
            _ => Err(EvalError::new(
                EvalErrorKind::Internal,
                "assignment to non-lvalue",
            )),
        }
    }
}

fn internal_type(v: Value) -> EvalError {
    EvalError::new(
        EvalErrorKind::Internal,
        format!("operand has unexpected runtime type: {v:?}"),
    )
}

fn alloc_array(elem: &ElemType, sizes: &[usize]) -> Value {
    let default = || match elem {
        ElemType::Int => Value::Int(0),
        ElemType::Bool => Value::Bool(false),
        ElemType::Str => Value::Str(String::new()),
        ElemType::Opaque(_) => Value::Null,
    };
    match sizes {
        [n] => Value::Array(ArrayRef {
            elem: elem.clone(),
            dims: 1,
            cells: Rc::new(RefCell::new((0..*n).map(|_| default()).collect())),
        }),
        [r, c] => {
            let rows: Vec<Value> = (0..*r).map(|_| alloc_array(elem, &[*c])).collect();
            Value::Array(ArrayRef {
                elem: elem.clone(),
                dims: 2,
                cells: Rc::new(RefCell::new(rows)),
            })
        }
        _ => unreachable!("dims checked by parser"),
    }
}

fn bounds_check(arr: &ArrayRef, idx: i64) -> EResult<usize> {
    let len = arr.cells.borrow().len();
    if idx < 0 || idx as usize >= len {
        return Err(EvalError::new(
            EvalErrorKind::IndexOutOfBounds,
            format!("index {idx} out of bounds for length {len}"),
        ));
    }
    Ok(idx as usize)
}

fn array_read(arr: &ArrayRef, idxs: &[i64]) -> EResult<Value> {
    let i = bounds_check(arr, idxs[0])?;
    let cell = arr.cells.borrow()[i].clone();
    match (idxs.len(), cell) {
        (1, Value::Null) => Err(EvalError::new(
            EvalErrorKind::NullRead,
            "read of uninitialized array slot",
        )),
        (1, v) => Ok(v),
        (_, Value::Array(row)) => array_read(&row, &idxs[1..]),
        (_, other) => Err(internal_type(other)),
    }
}

fn array_write(arr: &ArrayRef, idxs: &[i64], v: Value) -> EResult<()> {
    let i = bounds_check(arr, idxs[0])?;
    if idxs.len() == 1 {
        arr.cells.borrow_mut()[i] = v;
        return Ok(());
    }
    let row = arr.cells.borrow()[i].clone();
    match row {
        Value::Array(inner) => array_write(&inner, &idxs[1..], v),
        other => Err(internal_type(other)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::SIEVE_COMPLETED as FIG2_SIEVE;
    use crate::parser::parse_program_syntax;

    fn api() -> ApiTable {
        ApiTable::with_builtins()
    }

    fn run(src: &str, args: Vec<Value>) -> EvalOutcome {
        let p = parse_program_syntax(src).unwrap();
        let api = api();
        check_program(&p, api.sigs(), &BTreeMap::new(), src).unwrap();
        eval(&p, args, &api, &VirtualFs::new(), &Limits::default())
    }

    #[test]
    fn sieve_classifies_primes() {
        assert_eq!(
            run(FIG2_SIEVE, vec![Value::Int(29)]).result.unwrap(),
            Value::Bool(true)
        );
        assert_eq!(
            run(FIG2_SIEVE, vec![Value::Int(1)]).result.unwrap(),
            Value::Bool(false)
        );
        assert_eq!(
            run(FIG2_SIEVE, vec![Value::Int(2)]).result.unwrap(),
            Value::Bool(true)
        );
    }

    #[test]
    fn nontermination_hits_fuel() {
        let out = run("int f() { while (true) { } return 0; }", vec![]);
        assert_eq!(out.result.unwrap_err().kind, EvalErrorKind::Timeout);
    }

    #[test]
    fn division_by_zero() {
        let out = run("int f(int x) { return 1 / x; }", vec![Value::Int(0)]);
        assert_eq!(out.result.unwrap_err().kind, EvalErrorKind::DivByZero);
    }

    #[test]
    fn index_out_of_bounds_reports() {
        let out = run(
            "int f() { int[] a = new int[2]; return a[5]; }",
            vec![],
        );
        assert_eq!(
            out.result.unwrap_err().kind,
            EvalErrorKind::IndexOutOfBounds
        );
    }

    #[test]
    fn missing_return_in_non_void() {
        let out = run("int f(int x) { if (x > 0) { return 1; } }", vec![Value::Int(-4)]);
        assert_eq!(out.result.unwrap_err().kind, EvalErrorKind::MissingReturn);
    }

    #[test]
    fn arrays_are_passed_by_reference() {
        let arr = Value::int_array(&[3, 1, 2]);
        let out = run_with_arg(
            "void touch(int[] a) { a[0] = 99; }",
            arr.clone(),
        );
        out.result.unwrap();
        assert_eq!(arr, Value::int_array(&[99, 1, 2]));
    }

    fn run_with_arg(src: &str, arg: Value) -> EvalOutcome {
        run(src, vec![arg])
    }

    #[test]
    fn api_calls_emit_events_and_use_virtual_fs() {
        let p = parse_program_syntax(
            "String f() { String s = readFile(\"m.csv\"); return s; }",
        )
        .unwrap();
        let api = api();
        let fs = VirtualFs::new().with_file("m.csv", "1,2");
        let out = eval(&p, vec![], &api, &fs, &Limits::default());
        assert_eq!(out.result.unwrap(), Value::Str("1,2".into()));
        assert_eq!(out.trace.len(), 1);
        assert_eq!(out.trace[0].fname, "readFile");
        assert_eq!(out.trace[0].seq, 0);
    }

    #[test]
    fn split_and_parse_int() {
        let p = parse_program_syntax(
            "int f() { String[] parts = split(\"4,7\", \",\"); return parseInt(parts[1]); }",
        )
        .unwrap();
        let out = eval(
            &p,
            vec![],
            &api(),
            &VirtualFs::new(),
            &Limits::default(),
        );
        assert_eq!(out.result.unwrap(), Value::Int(7));
    }

    #[test]
    fn missing_file_maps_to_null_read_with_partial_trace() {
        let p = parse_program_syntax("String f() { return readFile(\"gone\"); }").unwrap();
        let out = eval(&p, vec![], &api(), &VirtualFs::new(), &Limits::default());
        assert_eq!(out.result.unwrap_err().kind, EvalErrorKind::NullRead);
        assert_eq!(out.trace.len(), 1);
    }

    #[test]
    fn trace_length_counts_api_calls() {
        let p = parse_program_syntax(
            "int f(int n) { int s = 0; for (int i = 0; i < n; i++) s = s + abs(i); return s; }",
        )
        .unwrap();
        let out = eval(
            &p,
            vec![Value::Int(5)],
            &api(),
            &VirtualFs::new(),
            &Limits::default(),
        );
        out.result.unwrap();
        assert_eq!(out.trace.len(), 5);
        assert!(out.trace.windows(2).all(|w| w[0].seq < w[1].seq));
    }

    #[test]
    fn fuel_monotonicity() {
        let src = "int f(int n) { int s = 0; for (int i = 0; i < n; i++) s = s + i; return s; }";
        let p = parse_program_syntax(src).unwrap();
        let api = api();
        let fs = VirtualFs::new();
        let mut succeeded_at = None;
        for fuel in [10u64, 50, 200, 1000, 10000] {
            let out = eval(
                &p,
                vec![Value::Int(10)],
                &api,
                &fs,
                &Limits::new(fuel, Duration::from_secs(5)),
            );
            match out.result {
                Ok(v) => {
                    assert_eq!(v, Value::Int(45));
                    succeeded_at.get_or_insert(fuel);
                }
                Err(e) => {
                    assert_eq!(e.kind, EvalErrorKind::Timeout);
                    assert!(succeeded_at.is_none(), "failed after succeeding at lower fuel");
                }
            }
        }
        assert!(succeeded_at.is_some());
    }

    #[test]
    fn duplicate_api_rejected() {
        let mut t = ApiTable::with_builtins();
        let err = t
            .register(
                "abs",
                ApiSig {
                    params: vec![Type::Int],
                    ret: Type::Int,
                },
                Box::new(|_, _| Ok(Value::Int(0))),
            )
            .unwrap_err();
        assert_eq!(err, DuplicateApi("abs".into()));
    }

    #[test]
    fn recursion_is_supported_and_depth_limited() {
        let out = run(
            "int fact(int n) { if (n <= 1) { return 1; } return n * fact(n - 1); }",
            vec![Value::Int(10)],
        );
        assert_eq!(out.result.unwrap(), Value::Int(3628800));
        let out = run(
            "int f(int n) { return f(n + 1); }",
            vec![Value::Int(0)],
        );
        assert_eq!(out.result.unwrap_err().kind, EvalErrorKind::RecursionLimit);
    }

    mod run_tests_behavior {
        use super::*;
        use crate::draft::{parse_draft, Requirement};
        use std::path::PathBuf;

        fn sieve_tests() -> TestsReq {
            let d = parse_draft(
                crate::fixtures::SIEVE_DRAFT,
                ApiTable::with_builtins().sigs(),
                &PathBuf::from("."),
            )
            .unwrap();
            match d.requirement {
                Requirement::Tests(t) => t,
                _ => panic!(),
            }
        }

        #[test]
        fn accepted_completion_passes() {
            let candidate = parse_program_syntax(FIG2_SIEVE).unwrap();
            assert!(run_tests(
                &candidate,
                &sieve_tests(),
                &ApiTable::with_builtins(),
                &VirtualFs::new(),
                &Limits::default()
            ));
        }

        #[test]
        fn trivially_false_candidate_fails() {
            let candidate =
                parse_program_syntax("boolean sieve(int n) { return false; }").unwrap();
            assert!(!run_tests(
                &candidate,
                &sieve_tests(),
                &ApiTable::with_builtins(),
                &VirtualFs::new(),
                &Limits::default()
            ));
        }

        #[test]
        fn erroring_candidate_maps_to_false() {
            let candidate =
                parse_program_syntax("boolean sieve(int n) { int x = 1 / (n - n); return true; }")
                    .unwrap();
            assert!(!run_tests(
                &candidate,
                &sieve_tests(),
                &ApiTable::with_builtins(),
                &VirtualFs::new(),
                &Limits::default()
            ));
        }
    }
}
