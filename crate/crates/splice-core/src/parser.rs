//! Recursive-descent parser for programs and corpus files.
//!
//! Grammar (concrete syntax is Java-flavored):
//!
//! ```text
//! program  ::= type ident '(' params ')' block
//! stmt     ::= block | 'if' '(' expr ')' stmt ('else' stmt)?
//!            | 'while' '(' expr ')' stmt
//!            | 'for' '(' forinit ';' expr ';' expr ')' stmt
//!            | 'return' expr? ';' | '??' ';'
//!            | type ident '=' expr ';' | expr ';'
//! ```
//!
//! `if`/`while`/`for` bodies are normalized to blocks during parsing, so the
//! AST has a single canonical shape and pretty-printing round-trips.

use crate::ast::*;
use crate::error::SyntaxError;
use crate::lexer::{lex, line_col, LexOutput, Tok, Token};

pub struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    pos: usize,
    next_node: u32,
    next_hole: u32,
}

/// Maximum statement/expression nesting accepted by the parser, to keep the
/// recursive walkers on a bounded native stack.
const MAX_DEPTH: u32 = 200;

type PResult<T> = Result<T, SyntaxError>;

impl<'a> Parser<'a> {
    pub fn new(src: &'a str, tokens: Vec<Token>) -> Self {
        Parser {
            src,
            tokens,
            pos: 0,
            next_node: 0,
            next_hole: 0,
        }
    }

    pub fn from_source(src: &'a str) -> PResult<(Self, Vec<crate::lexer::Comment>)> {
        let LexOutput { tokens, comments } = lex(src)?;
        Ok((Parser::new(src, tokens), comments))
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> PResult<T> {
        let (line, col) = line_col(self.src, self.span().lo);
        Err(SyntaxError {
            message: message.into(),
            line,
            col,
        })
    }

    fn expect(&mut self, tok: Tok) -> PResult<Span> {
        if *self.peek() == tok {
            Ok(self.bump().span)
        } else {
            self.err(format!(
                "expected {}, found {}",
                tok.describe(),
                self.peek().describe()
            ))
        }
    }

    fn expect_ident(&mut self) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.bump().span;
                Ok((name, span))
            }
            other => self.err(format!("expected identifier, found {}", other.describe())),
        }
    }

    fn node_id(&mut self) -> NodeId {
        let id = NodeId(self.next_node);
        self.next_node += 1;
        id
    }

    fn hole_id(&mut self) -> HoleId {
        let id = HoleId(self.next_hole);
        self.next_hole += 1;
        id
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    // ----- types -----

    fn at_type_start(&self) -> bool {
        match self.peek() {
            Tok::KwInt | Tok::KwBoolean | Tok::KwString | Tok::KwVoid => true,
            // `Classifier cls = ...` / `Mat[] ms = ...`: an identifier begins a
            // declaration only when followed by another identifier or `[]`.
            Tok::Ident(_) => match self.peek_at(1) {
                Tok::Ident(_) => true,
                Tok::LBracket => matches!(self.peek_at(2), Tok::RBracket),
                _ => false,
            },
            _ => false,
        }
    }

    fn parse_type(&mut self) -> PResult<Type> {
        let base = match self.peek().clone() {
            Tok::KwInt => {
                self.bump();
                Some(ElemType::Int)
            }
            Tok::KwBoolean => {
                self.bump();
                Some(ElemType::Bool)
            }
            Tok::KwString => {
                self.bump();
                Some(ElemType::Str)
            }
            Tok::KwVoid => {
                self.bump();
                None
            }
            Tok::Ident(name) => {
                self.bump();
                Some(ElemType::Opaque(name))
            }
            other => return self.err(format!("expected a type, found {}", other.describe())),
        };
        let mut dims = 0u8;
        while matches!(self.peek(), Tok::LBracket) && matches!(self.peek_at(1), Tok::RBracket) {
            self.bump();
            self.bump();
            dims += 1;
            if dims > 2 {
                return self.err("arrays have at most two dimensions");
            }
        }
        match (base, dims) {
            (None, 0) => Ok(Type::Unit),
            (None, _) => self.err("void cannot be an array element"),
            (Some(e), 0) => Ok(e.to_type()),
            (Some(e), d) => Ok(Type::array(e, d)),
        }
    }

    // ----- programs -----

    pub fn parse_program(&mut self) -> PResult<Program> {
        let start = self.span();
        let return_type = self.parse_type()?;
        let (name, _) = self.expect_ident()?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if !matches!(self.peek(), Tok::RParen) {
            loop {
                let ty = self.parse_type()?;
                let (pname, _) = self.expect_ident()?;
                params.push((pname, ty));
                if matches!(self.peek(), Tok::Comma) {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        if !matches!(self.peek(), Tok::LBrace) {
            return self.err("expected `{` to start function body");
        }
        let body = self.parse_block(0)?;
        let span = start.join(self.prev_span());
        Ok(Program {
            name,
            params,
            return_type,
            body,
            span,
        })
    }

    /// Parse a sequence of functions until end of input.
    pub fn parse_programs(&mut self) -> PResult<Vec<Program>> {
        let mut out = Vec::new();
        while !self.at_eof() {
            self.next_node = 0;
            self.next_hole = 0;
            out.push(self.parse_program()?);
        }
        Ok(out)
    }

    /// Like [`parse_programs`], but skips a function that fails to parse and
    /// resumes at the next plausible function start. Returns the parsed
    /// functions plus one message per skipped region.
    pub fn parse_programs_recovering(&mut self) -> (Vec<Program>, Vec<String>) {
        let mut out = Vec::new();
        let mut errors = Vec::new();
        while !self.at_eof() {
            self.next_node = 0;
            self.next_hole = 0;
            let checkpoint = self.pos;
            match self.parse_program() {
                Ok(p) => out.push(p),
                Err(e) => {
                    errors.push(e.to_string());
                    self.pos = checkpoint;
                    self.skip_to_next_function();
                }
            }
        }
        (out, errors)
    }

    fn skip_to_next_function(&mut self) {
        // Move past the current token, then scan for a balanced point where a
        // `type ident (` sequence begins.
        self.bump();
        let mut depth: i32 = 0;
        while !self.at_eof() {
            match self.peek() {
                Tok::LBrace => depth += 1,
                Tok::RBrace => depth -= 1,
                _ => {}
            }
            if depth <= 0 && self.at_type_start() && !matches!(self.peek(), Tok::Ident(_)) {
                // keyword-typed function start at top level
                if self.looks_like_function_start() {
                    return;
                }
            } else if depth <= 0 && matches!(self.peek(), Tok::Ident(_)) && self.looks_like_function_start() {
                return;
            }
            self.bump();
        }
    }

    fn looks_like_function_start(&self) -> bool {
        // type [()dims] ident (
        let mut i = 1;
        while matches!(self.peek_at(i), Tok::LBracket) && matches!(self.peek_at(i + 1), Tok::RBracket)
        {
            i += 2;
        }
        matches!(self.peek_at(i), Tok::Ident(_)) && matches!(self.peek_at(i + 1), Tok::LParen)
    }

    // ----- statements -----

    fn parse_block(&mut self, depth: u32) -> PResult<Stmt> {
        if depth > MAX_DEPTH {
            return self.err("nesting too deep");
        }
        let start = self.expect(Tok::LBrace)?;
        let mut stmts = Vec::new();
        while !matches!(self.peek(), Tok::RBrace) {
            if self.at_eof() {
                return self.err("unexpected end of input inside block");
            }
            stmts.push(self.parse_stmt(depth + 1)?);
        }
        let end = self.expect(Tok::RBrace)?;
        Ok(Stmt {
            node: StmtKind::Block(stmts),
            span: start.join(end),
            id: self.node_id(),
        })
    }

    /// Parse a statement; non-block bodies of `if`/`while`/`for` are wrapped
    /// in a block by the callers via [`parse_body`].
    pub fn parse_stmt(&mut self, depth: u32) -> PResult<Stmt> {
        if depth > MAX_DEPTH {
            return self.err("nesting too deep");
        }
        let start = self.span();
        match self.peek().clone() {
            Tok::LBrace => self.parse_block(depth),
            Tok::KwIf => {
                self.bump();
                self.expect(Tok::LParen)?;
                let guard = self.parse_expr(depth)?;
                self.expect(Tok::RParen)?;
                let then = self.parse_body(depth)?;
                let els = if matches!(self.peek(), Tok::KwElse) {
                    self.bump();
                    Some(Box::new(self.parse_body(depth)?))
                } else {
                    None
                };
                Ok(Stmt {
                    node: StmtKind::If {
                        guard,
                        then: Box::new(then),
                        els,
                    },
                    span: start.join(self.prev_span()),
                    id: self.node_id(),
                })
            }
            Tok::KwWhile => {
                self.bump();
                self.expect(Tok::LParen)?;
                let guard = self.parse_expr(depth)?;
                self.expect(Tok::RParen)?;
                let body = self.parse_body(depth)?;
                Ok(Stmt {
                    node: StmtKind::While {
                        guard,
                        body: Box::new(body),
                    },
                    span: start.join(self.prev_span()),
                    id: self.node_id(),
                })
            }
            Tok::KwFor => {
                self.bump();
                self.expect(Tok::LParen)?;
                let init = if self.at_type_start() {
                    self.parse_let(depth)?
                } else {
                    let e = self.parse_expr(depth)?;
                    self.expect(Tok::Semi)?;
                    Stmt {
                        span: e.span,
                        id: self.node_id(),
                        node: StmtKind::Expr(e),
                    }
                };
                let guard = self.parse_expr(depth)?;
                self.expect(Tok::Semi)?;
                let step = self.parse_expr(depth)?;
                self.expect(Tok::RParen)?;
                let body = self.parse_body(depth)?;
                Ok(Stmt {
                    node: StmtKind::For {
                        init: Box::new(init),
                        guard,
                        step,
                        body: Box::new(body),
                    },
                    span: start.join(self.prev_span()),
                    id: self.node_id(),
                })
            }
            Tok::KwReturn => {
                self.bump();
                let value = if matches!(self.peek(), Tok::Semi) {
                    None
                } else {
                    Some(self.parse_expr(depth)?)
                };
                let end = self.expect(Tok::Semi)?;
                Ok(Stmt {
                    node: StmtKind::Return(value),
                    span: start.join(end),
                    id: self.node_id(),
                })
            }
            Tok::Hole if matches!(self.peek_at(1), Tok::Semi) => {
                self.bump();
                let end = self.expect(Tok::Semi)?;
                Ok(Stmt {
                    node: StmtKind::Hole(self.hole_id()),
                    span: start.join(end),
                    id: self.node_id(),
                })
            }
            _ if self.at_type_start() => self.parse_let(depth),
            _ => {
                let e = self.parse_expr(depth)?;
                if matches!(e.node, ExprKind::Hole(_)) {
                    return self.err("an expression hole may not stand alone as a statement");
                }
                let end = self.expect(Tok::Semi)?;
                Ok(Stmt {
                    node: StmtKind::Expr(e),
                    span: start.join(end),
                    id: self.node_id(),
                })
            }
        }
    }

    fn parse_let(&mut self, depth: u32) -> PResult<Stmt> {
        let start = self.span();
        let ty = self.parse_type()?;
        let (name, _) = self.expect_ident()?;
        self.expect(Tok::Assign)?;
        let init = self.parse_expr(depth)?;
        let end = self.expect(Tok::Semi)?;
        Ok(Stmt {
            node: StmtKind::Let { name, ty, init },
            span: start.join(end),
            id: self.node_id(),
        })
    }

    fn parse_body(&mut self, depth: u32) -> PResult<Stmt> {
        if matches!(self.peek(), Tok::LBrace) {
            self.parse_block(depth + 1)
        } else {
            let s = self.parse_stmt(depth + 1)?;
            let span = s.span;
            Ok(Stmt {
                node: StmtKind::Block(vec![s]),
                span,
                id: self.node_id(),
            })
        }
    }

    /// Parse a `;`-separated statement list until end of input (used for the
    /// TEST section of draft headers).
    pub fn parse_stmt_list(&mut self) -> PResult<Vec<Stmt>> {
        let mut stmts = Vec::new();
        while !self.at_eof() {
            stmts.push(self.parse_stmt(0)?);
        }
        Ok(stmts)
    }

    // ----- expressions -----

    pub fn parse_expr(&mut self, depth: u32) -> PResult<Expr> {
        if depth > MAX_DEPTH {
            return self.err("nesting too deep");
        }
        self.parse_assign(depth + 1)
    }

    fn parse_assign(&mut self, depth: u32) -> PResult<Expr> {
        if depth > MAX_DEPTH {
            return self.err("nesting too deep");
        }
        let lhs = self.parse_or(depth + 1)?;
        if matches!(self.peek(), Tok::Assign) {
            if !lhs.is_lvalue() {
                return self.err("assignment target must be a variable or array element");
            }
            self.bump();
            let rhs = self.parse_assign(depth + 1)?;
            let span = lhs.span.join(rhs.span);
            return Ok(Expr {
                node: ExprKind::Assign(Box::new(lhs), Box::new(rhs)),
                span,
                id: self.node_id(),
            });
        }
        Ok(lhs)
    }

    fn parse_binary_level(
        &mut self,
        depth: u32,
        ops: &[(Tok, BinOp)],
        next: fn(&mut Self, u32) -> PResult<Expr>,
    ) -> PResult<Expr> {
        if depth > MAX_DEPTH {
            return self.err("nesting too deep");
        }
        let mut lhs = next(self, depth + 1)?;
        'outer: loop {
            for (tok, op) in ops {
                if self.peek() == tok {
                    self.bump();
                    let rhs = next(self, depth + 1)?;
                    let span = lhs.span.join(rhs.span);
                    lhs = Expr {
                        node: ExprKind::Binop(*op, Box::new(lhs), Box::new(rhs)),
                        span,
                        id: self.node_id(),
                    };
                    continue 'outer;
                }
            }
            return Ok(lhs);
        }
    }

    fn parse_or(&mut self, depth: u32) -> PResult<Expr> {
        self.parse_binary_level(depth, &[(Tok::OrOr, BinOp::Or)], Self::parse_and)
    }

    fn parse_and(&mut self, depth: u32) -> PResult<Expr> {
        self.parse_binary_level(depth, &[(Tok::AndAnd, BinOp::And)], Self::parse_equality)
    }

    fn parse_equality(&mut self, depth: u32) -> PResult<Expr> {
        self.parse_binary_level(
            depth,
            &[(Tok::EqEq, BinOp::Eq), (Tok::NotEq, BinOp::Ne)],
            Self::parse_relational,
        )
    }

    fn parse_relational(&mut self, depth: u32) -> PResult<Expr> {
        self.parse_binary_level(
            depth,
            &[
                (Tok::Le, BinOp::Le),
                (Tok::Lt, BinOp::Lt),
                (Tok::Ge, BinOp::Ge),
                (Tok::Gt, BinOp::Gt),
            ],
            Self::parse_additive,
        )
    }

    fn parse_additive(&mut self, depth: u32) -> PResult<Expr> {
        self.parse_binary_level(
            depth,
            &[(Tok::Plus, BinOp::Add), (Tok::Minus, BinOp::Sub)],
            Self::parse_multiplicative,
        )
    }

    fn parse_multiplicative(&mut self, depth: u32) -> PResult<Expr> {
        self.parse_binary_level(
            depth,
            &[
                (Tok::Star, BinOp::Mul),
                (Tok::Slash, BinOp::Div),
                (Tok::Percent, BinOp::Rem),
            ],
            Self::parse_unary,
        )
    }

    fn parse_unary(&mut self, depth: u32) -> PResult<Expr> {
        if depth > MAX_DEPTH {
            return self.err("nesting too deep");
        }
        let start = self.span();
        let op = match self.peek() {
            Tok::Minus => Some(UnOp::Neg),
            Tok::Bang => Some(UnOp::Not),
            Tok::PlusPlus => Some(UnOp::Inc),
            Tok::MinusMinus => Some(UnOp::Dec),
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let operand = self.parse_unary(depth + 1)?;
            if matches!(op, UnOp::Inc | UnOp::Dec) && !operand.is_lvalue() {
                return self.err(format!(
                    "`{}` requires a variable or array element",
                    op.symbol()
                ));
            }
            let span = start.join(operand.span);
            return Ok(Expr {
                node: ExprKind::Unop(op, Box::new(operand)),
                span,
                id: self.node_id(),
            });
        }
        self.parse_postfix(depth + 1)
    }

    fn parse_postfix(&mut self, depth: u32) -> PResult<Expr> {
        let mut e = self.parse_primary(depth)?;
        loop {
            match self.peek() {
                Tok::LBracket => {
                    let mut indices = Vec::new();
                    while matches!(self.peek(), Tok::LBracket) {
                        self.bump();
                        indices.push(self.parse_expr(depth + 1)?);
                        self.expect(Tok::RBracket)?;
                        if indices.len() > 2 {
                            return self.err("arrays have at most two dimensions");
                        }
                    }
                    let span = e.span.join(self.prev_span());
                    e = Expr {
                        node: ExprKind::Index(Box::new(e), indices),
                        span,
                        id: self.node_id(),
                    };
                }
                Tok::Dot => {
                    self.bump();
                    let (field, fspan) = self.expect_ident()?;
                    if field != "length" {
                        return self.err(format!("unknown field `.{field}` (only `.length`)"));
                    }
                    let span = e.span.join(fspan);
                    e = Expr {
                        node: ExprKind::Length(Box::new(e)),
                        span,
                        id: self.node_id(),
                    };
                }
                Tok::PlusPlus | Tok::MinusMinus => {
                    let op = if matches!(self.peek(), Tok::PlusPlus) {
                        UnOp::Inc
                    } else {
                        UnOp::Dec
                    };
                    if !e.is_lvalue() {
                        return self.err(format!(
                            "`{}` requires a variable or array element",
                            op.symbol()
                        ));
                    }
                    let end = self.bump().span;
                    let span = e.span.join(end);
                    e = Expr {
                        node: ExprKind::Unop(op, Box::new(e)),
                        span,
                        id: self.node_id(),
                    };
                }
                _ => break,
            }
        }
        Ok(e)
    }

    fn parse_primary(&mut self, depth: u32) -> PResult<Expr> {
        if depth > MAX_DEPTH {
            return self.err("nesting too deep");
        }
        let start = self.span();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr {
                    node: ExprKind::ConstInt(v),
                    span: start,
                    id: self.node_id(),
                })
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr {
                    node: ExprKind::ConstStr(s),
                    span: start,
                    id: self.node_id(),
                })
            }
            Tok::KwTrue => {
                self.bump();
                Ok(Expr {
                    node: ExprKind::ConstBool(true),
                    span: start,
                    id: self.node_id(),
                })
            }
            Tok::KwFalse => {
                self.bump();
                Ok(Expr {
                    node: ExprKind::ConstBool(false),
                    span: start,
                    id: self.node_id(),
                })
            }
            Tok::Hole => {
                self.bump();
                Ok(Expr {
                    node: ExprKind::Hole(self.hole_id()),
                    span: start,
                    id: self.node_id(),
                })
            }
            Tok::LParen => {
                self.bump();
                let e = self.parse_expr(depth + 1)?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::KwNew => {
                self.bump();
                let elem = match self.peek().clone() {
                    Tok::KwInt => {
                        self.bump();
                        ElemType::Int
                    }
                    Tok::KwBoolean => {
                        self.bump();
                        ElemType::Bool
                    }
                    Tok::KwString => {
                        self.bump();
                        ElemType::Str
                    }
                    Tok::Ident(name) => {
                        self.bump();
                        ElemType::Opaque(name)
                    }
                    other => {
                        return self
                            .err(format!("expected element type, found {}", other.describe()))
                    }
                };
                let mut dims = Vec::new();
                while matches!(self.peek(), Tok::LBracket) {
                    self.bump();
                    dims.push(self.parse_expr(depth + 1)?);
                    self.expect(Tok::RBracket)?;
                    if dims.len() > 2 {
                        return self.err("arrays have at most two dimensions");
                    }
                }
                if dims.is_empty() {
                    return self.err("`new` requires at least one dimension");
                }
                let span = start.join(self.prev_span());
                Ok(Expr {
                    node: ExprKind::NewArray(elem, dims),
                    span,
                    id: self.node_id(),
                })
            }
            Tok::LBrace => {
                self.bump();
                let mut elems = Vec::new();
                if !matches!(self.peek(), Tok::RBrace) {
                    loop {
                        elems.push(self.parse_expr(depth + 1)?);
                        if matches!(self.peek(), Tok::Comma) {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                let end = self.expect(Tok::RBrace)?;
                Ok(Expr {
                    node: ExprKind::ArrayLit(elems),
                    span: start.join(end),
                    id: self.node_id(),
                })
            }
            Tok::Ident(name) => {
                self.bump();
                if matches!(self.peek(), Tok::LParen) {
                    self.bump();
                    let mut args = Vec::new();
                    if !matches!(self.peek(), Tok::RParen) {
                        loop {
                            args.push(self.parse_expr(depth + 1)?);
                            if matches!(self.peek(), Tok::Comma) {
                                self.bump();
                            } else {
                                break;
                            }
                        }
                    }
                    let end = self.expect(Tok::RParen)?;
                    Ok(Expr {
                        node: ExprKind::Call(name, args),
                        span: start.join(end),
                        id: self.node_id(),
                    })
                } else {
                    Ok(Expr {
                        node: ExprKind::Var(name),
                        span: start,
                        id: self.node_id(),
                    })
                }
            }
            other => self.err(format!("expected expression, found {}", other.describe())),
        }
    }
}

/// Parse one function from `src` without type checking.
pub fn parse_program_syntax(src: &str) -> Result<Program, SyntaxError> {
    let (mut p, _) = Parser::from_source(src)?;
    let prog = p.parse_program()?;
    if !p.at_eof() {
        return p.err(format!(
            "unexpected {} after function",
            p.peek().describe()
        ));
    }
    Ok(prog)
}

/// A corpus function together with the comment text attached to it.
#[derive(Debug, Clone)]
pub struct ParsedFunction {
    pub program: Program,
    pub comments: Vec<String>,
    /// Byte range of the function in its source file.
    pub span: Span,
}

/// Parse every function in a corpus file, attaching each comment to the
/// function that contains it, or else to the nearest following function.
pub fn parse_functions(src: &str) -> Result<(Vec<ParsedFunction>, Vec<String>), SyntaxError> {
    let (mut p, comments) = Parser::from_source(src)?;
    let (programs, errors) = p.parse_programs_recovering();
    let mut out: Vec<ParsedFunction> = programs
        .into_iter()
        .map(|program| {
            let span = program.span;
            ParsedFunction {
                program,
                comments: Vec::new(),
                span,
            }
        })
        .collect();
    for c in &comments {
        let inside = out
            .iter()
            .position(|f| f.span.lo <= c.span.lo && c.span.hi <= f.span.hi);
        let target = inside.or_else(|| out.iter().position(|f| f.span.lo >= c.span.hi));
        if let Some(i) = target {
            out[i].comments.push(c.text.clone());
        }
    }
    Ok((out, errors))
}
