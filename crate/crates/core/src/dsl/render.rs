//! Canonical source text for syntax trees. Parentheses are emitted only where
//! precedence or associativity needs them, so reparsing gives back the same
//! tree. Comments are not preserved.

use num_traits::Zero;

use super::ast::{Expr, ExprKind, StateLit, Stmt, StmtKind};
use crate::scalar::fmt_rational;

const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const PREFIX: u8 = 3;
const POSTFIX: u8 = 4;
const ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Sum(..) | ExprKind::Difference(..) => SUM,
        ExprKind::Product(..) => PRODUCT,
        ExprKind::Neg(_) => PREFIX,
        ExprKind::Adjoint(_) => POSTFIX,
        _ => ATOM,
    }
}

fn state(s: &StateLit) -> String {
    let star = if s.conj { "*" } else { "" };
    format!("{}:{}{}", s.observable.name, s.label.name, star)
}

fn write_expr(e: &Expr, min: u8, out: &mut String) {
    let wrap = precedence(e) < min;
    if wrap {
        out.push('(');
    }
    match &e.kind {
        ExprKind::Sum(a, b) | ExprKind::Difference(a, b) => {
            write_expr(a, SUM, out);
            out.push_str(if matches!(e.kind, ExprKind::Sum(..)) { " + " } else { " - " });
            write_expr(b, PRODUCT, out);
        }
        ExprKind::Product(a, b) => {
            write_expr(a, PRODUCT, out);
            out.push_str(" * ");
            write_expr(b, PREFIX, out);
        }
        ExprKind::Neg(a) => {
            out.push('-');
            write_expr(a, PREFIX, out);
        }
        ExprKind::Adjoint(a) => {
            write_expr(a, POSTFIX, out);
            out.push('†');
        }
        ExprKind::Symbol { out: o, inp: None } => out.push_str(&format!("M[{}]", state(o))),
        ExprKind::Symbol { out: o, inp: Some(i) } => {
            out.push_str(&format!("M[{}<-{}]", state(o), state(i)))
        }
        ExprKind::Identity => out.push('I'),
        ExprKind::Tf { bra, ket } => out.push_str(&format!("<{}|{}>", state(bra), state(ket))),
        ExprKind::Number(c) => {
            if c.im.is_zero() {
                out.push_str(&fmt_rational(&c.re));
            } else if c.re.is_zero() {
                out.push_str(&format!("{}i", fmt_rational(&c.im)));
            } else {
                out.push_str(&format!("({} + {}i)", fmt_rational(&c.re), fmt_rational(&c.im)));
            }
        }
        ExprKind::Var(v) => out.push_str(v),
        ExprKind::Conjugate(a) => {
            out.push_str("conj(");
            write_expr(a, SUM, out);
            out.push(')');
        }
        ExprKind::Transpose(a) => {
            out.push_str("transpose(");
            write_expr(a, SUM, out);
            out.push(')');
        }
    }
    if wrap {
        out.push(')');
    }
}

pub fn render_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, SUM, &mut out);
    out
}

pub fn render_stmt(s: &Stmt) -> String {
    match &s.kind {
        StmtKind::Observable { name, labels } => {
            let entries: Vec<String> = labels
                .iter()
                .map(|l| match &l.value {
                    Some((v, _)) => format!("{}: {}", l.label.name, fmt_rational(v)),
                    None => l.label.name.clone(),
                })
                .collect();
            format!("observable {} {{ {} }}", name.name, entries.join(", "))
        }
        StmtKind::Joint { name, components } => {
            let names: Vec<&str> = components.iter().map(|c| c.name.as_str()).collect();
            format!("joint {} = {}", name.name, names.join(" & "))
        }
        StmtKind::Let { name, value } => format!("let {} = {}", name.name, render_expr(value)),
        StmtKind::Normalize(e) => format!("normalize {}", render_expr(e)),
        StmtKind::Trace(e) => format!("trace {}", render_expr(e)),
        StmtKind::Verify(e) => format!("verify {}", render_expr(e)),
        StmtKind::Prob(a, b) => format!("prob({} | {})", state(a), state(b)),
        StmtKind::Expect(a, b) => format!("expect({} | {})", a.name, state(b)),
        StmtKind::Spectrum(a) => format!("spectrum {}", a.name),
    }
}

pub fn render_program(stmts: &[Stmt]) -> String {
    stmts.iter().map(|s| render_stmt(s) + "\n").collect()
}
