//! Canonical source rendering. `parse(pretty_print(p))` is structurally equal
//! to `p` (spans and node ids aside), which the round-trip tests rely on.

use crate::ast::*;
use std::fmt::Write;

// Precedence levels, loosest to tightest.
const PREC_ASSIGN: u8 = 1;
const PREC_OR: u8 = 2;
const PREC_AND: u8 = 3;
const PREC_EQ: u8 = 4;
const PREC_REL: u8 = 5;
const PREC_ADD: u8 = 6;
const PREC_MUL: u8 = 7;
const PREC_UNARY: u8 = 8;
const PREC_POSTFIX: u8 = 9;
const PREC_PRIMARY: u8 = 10;

fn binop_prec(op: BinOp) -> u8 {
    match op {
        BinOp::Or => PREC_OR,
        BinOp::And => PREC_AND,
        BinOp::Eq | BinOp::Ne => PREC_EQ,
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => PREC_REL,
        BinOp::Add | BinOp::Sub => PREC_ADD,
        BinOp::Mul | BinOp::Div | BinOp::Rem => PREC_MUL,
    }
}

pub fn pretty_print(p: &Program) -> String {
    let mut s = String::new();
    write!(s, "{} {}(", p.return_type, p.name).unwrap();
    for (i, (name, ty)) in p.params.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        write!(s, "{ty} {name}").unwrap();
    }
    s.push_str(") {\n");
    match &p.body.node {
        StmtKind::Block(stmts) => {
            for st in stmts {
                write_stmt(&mut s, st, 1);
            }
        }
        _ => write_stmt(&mut s, &p.body, 1),
    }
    s.push_str("}\n");
    s
}

pub fn pretty_expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

pub fn pretty_stmt(st: &Stmt) -> String {
    let mut s = String::new();
    write_stmt(&mut s, st, 0);
    s
}

fn indent(s: &mut String, level: usize) {
    for _ in 0..level {
        s.push_str("  ");
    }
}

fn write_stmt(s: &mut String, st: &Stmt, level: usize) {
    match &st.node {
        StmtKind::Let { name, ty, init } => {
            indent(s, level);
            write!(s, "{ty} {name} = ").unwrap();
            write_expr(s, init, 0);
            s.push_str(";\n");
        }
        StmtKind::Expr(e) => {
            indent(s, level);
            write_expr(s, e, 0);
            s.push_str(";\n");
        }
        StmtKind::If { guard, then, els } => {
            indent(s, level);
            s.push_str("if (");
            write_expr(s, guard, 0);
            s.push_str(") {\n");
            write_body(s, then, level + 1);
            indent(s, level);
            if let Some(e) = els {
                s.push_str("} else {\n");
                write_body(s, e, level + 1);
                indent(s, level);
            }
            s.push_str("}\n");
        }
        StmtKind::While { guard, body } => {
            indent(s, level);
            s.push_str("while (");
            write_expr(s, guard, 0);
            s.push_str(") {\n");
            write_body(s, body, level + 1);
            indent(s, level);
            s.push_str("}\n");
        }
        StmtKind::For {
            init,
            guard,
            step,
            body,
        } => {
            indent(s, level);
            s.push_str("for (");
            match &init.node {
                StmtKind::Let { name, ty, init } => {
                    write!(s, "{ty} {name} = ").unwrap();
                    write_expr(s, init, 0);
                }
                StmtKind::Expr(e) => write_expr(s, e, 0),
                _ => unreachable!("for-init is a let or expression statement"),
            }
            s.push_str("; ");
            write_expr(s, guard, 0);
            s.push_str("; ");
            write_expr(s, step, 0);
            s.push_str(") {\n");
            write_body(s, body, level + 1);
            indent(s, level);
            s.push_str("}\n");
        }
        StmtKind::Block(stmts) => {
            indent(s, level);
            s.push_str("{\n");
            for st in stmts {
                write_stmt(s, st, level + 1);
            }
            indent(s, level);
            s.push_str("}\n");
        }
        StmtKind::Return(value) => {
            indent(s, level);
            match value {
                Some(e) => {
                    s.push_str("return ");
                    write_expr(s, e, 0);
                    s.push_str(";\n");
                }
                None => s.push_str("return;\n"),
            }
        }
        StmtKind::Hole(_) => {
            indent(s, level);
            s.push_str("??;\n");
        }
    }
}

/// Print the statements of a loop/branch body. Bodies are always blocks in
/// the AST; the surrounding construct already printed the braces.
fn write_body(s: &mut String, body: &Stmt, level: usize) {
    match &body.node {
        StmtKind::Block(stmts) => {
            for st in stmts {
                write_stmt(s, st, level);
            }
        }
        _ => write_stmt(s, body, level),
    }
}

fn write_expr(s: &mut String, e: &Expr, min_prec: u8) {
    let prec = expr_prec(e);
    let parens = prec < min_prec;
    if parens {
        s.push('(');
    }
    match &e.node {
        ExprKind::Var(name) => s.push_str(name),
        ExprKind::ConstInt(v) => {
            write!(s, "{v}").unwrap();
        }
        ExprKind::ConstBool(b) => s.push_str(if *b { "true" } else { "false" }),
        ExprKind::ConstStr(text) => {
            s.push('"');
            for ch in text.chars() {
                match ch {
                    '\n' => s.push_str("\\n"),
                    '\t' => s.push_str("\\t"),
                    '\r' => s.push_str("\\r"),
                    '"' => s.push_str("\\\""),
                    '\\' => s.push_str("\\\\"),
                    other => s.push(other),
                }
            }
            s.push('"');
        }
        ExprKind::Binop(op, lhs, rhs) => {
            let p = binop_prec(*op);
            write_expr(s, lhs, p);
            write!(s, " {} ", op.symbol()).unwrap();
            write_expr(s, rhs, p + 1);
        }
        ExprKind::Unop(op, operand) => match op {
            UnOp::Inc | UnOp::Dec => {
                write_expr(s, operand, PREC_POSTFIX);
                s.push_str(op.symbol());
            }
            UnOp::Neg | UnOp::Not => {
                s.push_str(op.symbol());
                // parenthesize nested unaries so `-(-x)` never prints as `--x`
                if matches!(operand.node, ExprKind::Unop(..)) {
                    s.push('(');
                    write_expr(s, operand, 0);
                    s.push(')');
                } else {
                    write_expr(s, operand, PREC_UNARY);
                }
            }
        },
        ExprKind::Call(fname, args) => {
            s.push_str(fname);
            s.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    s.push_str(", ");
                }
                write_expr(s, a, 0);
            }
            s.push(')');
        }
        ExprKind::Assign(lvalue, rhs) => {
            write_expr(s, lvalue, PREC_POSTFIX);
            s.push_str(" = ");
            write_expr(s, rhs, PREC_ASSIGN);
        }
        ExprKind::Index(base, indices) => {
            write_expr(s, base, PREC_POSTFIX);
            for idx in indices {
                s.push('[');
                write_expr(s, idx, 0);
                s.push(']');
            }
        }
        ExprKind::NewArray(elem, dims) => {
            write!(s, "new {}", elem.to_type()).unwrap();
            for d in dims {
                s.push('[');
                write_expr(s, d, 0);
                s.push(']');
            }
        }
        ExprKind::ArrayLit(elems) => {
            s.push('{');
            for (i, x) in elems.iter().enumerate() {
                if i > 0 {
                    s.push_str(", ");
                }
                write_expr(s, x, 0);
            }
            s.push('}');
        }
        ExprKind::Length(base) => {
            write_expr(s, base, PREC_POSTFIX);
            s.push_str(".length");
        }
        ExprKind::Hole(_) => s.push_str("??"),
    }
    if parens {
        s.push(')');
    }
}

fn expr_prec(e: &Expr) -> u8 {
    match &e.node {
        ExprKind::Var(_)
        | ExprKind::ConstInt(_)
        | ExprKind::ConstBool(_)
        | ExprKind::ConstStr(_)
        | ExprKind::ArrayLit(_)
        | ExprKind::NewArray(..)
        | ExprKind::Call(..)
        | ExprKind::Hole(_) => PREC_PRIMARY,
        ExprKind::Index(..) | ExprKind::Length(_) => PREC_POSTFIX,
        ExprKind::Unop(op, _) => match op {
            UnOp::Inc | UnOp::Dec => PREC_POSTFIX,
            _ => PREC_UNARY,
        },
        ExprKind::Binop(op, ..) => binop_prec(*op),
        ExprKind::Assign(..) => PREC_ASSIGN,
    }
}
