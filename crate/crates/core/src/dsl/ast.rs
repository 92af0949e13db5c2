use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::Span;
use crate::scalar::{fmt_rational, Coeff};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

/// `Obs:label`, with an optional `*` marking a conjugate-algebra ket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateLit {
    pub observable: Ident,
    pub label: Ident,
    pub conj: bool,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelEntry {
    pub label: Ident,
    pub value: Option<(BigRational, Span)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Sum(Box<Expr>, Box<Expr>),
    Difference(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Product(Box<Expr>, Box<Expr>),
    /// `M[out]` when `inp` is `None`, otherwise `M[out <- inp]`.
    Symbol { out: StateLit, inp: Option<StateLit> },
    Identity,
    Tf { bra: StateLit, ket: StateLit },
    /// Real or purely imaginary literal.
    Number(Coeff),
    Var(String),
    Adjoint(Box<Expr>),
    Conjugate(Box<Expr>),
    Transpose(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Observable { name: Ident, labels: Vec<LabelEntry> },
    Joint { name: Ident, components: Vec<Ident> },
    Let { name: Ident, value: Expr },
    Normalize(Expr),
    Trace(Expr),
    Verify(Expr),
    Prob(StateLit, StateLit),
    Expect(Ident, StateLit),
    Spectrum(Ident),
}

impl StateLit {
    fn tree(&self) -> String {
        let star = if self.conj { "*" } else { "" };
        format!("{}:{}{}", self.observable.name, self.label.name, star)
    }
}

fn number_tree(c: &Coeff) -> String {
    if c.im.is_zero() {
        fmt_rational(&c.re)
    } else if c.re.is_zero() {
        format!("{}i", fmt_rational(&c.im))
    } else {
        let sign = if c.im.is_negative() { "" } else { "+" };
        format!("{}{}{}i", fmt_rational(&c.re), sign, fmt_rational(&c.im))
    }
}

impl Expr {
    /// S-expression of the tree with spans dropped.
    pub fn tree(&self) -> String {
        match &self.kind {
            ExprKind::Sum(a, b) => format!("(+ {} {})", a.tree(), b.tree()),
            ExprKind::Difference(a, b) => format!("(- {} {})", a.tree(), b.tree()),
            ExprKind::Neg(a) => format!("(neg {})", a.tree()),
            ExprKind::Product(a, b) => format!("(* {} {})", a.tree(), b.tree()),
            ExprKind::Symbol { out, inp: None } => format!("(M {})", out.tree()),
            ExprKind::Symbol { out, inp: Some(inp) } => format!("(M {} {})", out.tree(), inp.tree()),
            ExprKind::Identity => "I".into(),
            ExprKind::Tf { bra, ket } => format!("(tf {} {})", bra.tree(), ket.tree()),
            ExprKind::Number(c) => format!("(num {})", number_tree(c)),
            ExprKind::Var(v) => format!("(var {v})"),
            ExprKind::Adjoint(a) => format!("(dagger {})", a.tree()),
            ExprKind::Conjugate(a) => format!("(conj {})", a.tree()),
            ExprKind::Transpose(a) => format!("(transpose {})", a.tree()),
        }
    }
}

impl Stmt {
    pub fn tree(&self) -> String {
        match &self.kind {
            StmtKind::Observable { name, labels } => {
                let mut out = format!("(observable {}", name.name);
                for l in labels {
                    match &l.value {
                        Some((v, _)) => out.push_str(&format!(" ({} {})", l.label.name, fmt_rational(v))),
                        None => out.push_str(&format!(" ({})", l.label.name)),
                    }
                }
                out.push(')');
                out
            }
            StmtKind::Joint { name, components } => {
                let parts: Vec<&str> = components.iter().map(|c| c.name.as_str()).collect();
                format!("(joint {} {})", name.name, parts.join(" "))
            }
            StmtKind::Let { name, value } => format!("(let {} {})", name.name, value.tree()),
            StmtKind::Normalize(e) => format!("(normalize {})", e.tree()),
            StmtKind::Trace(e) => format!("(trace {})", e.tree()),
            StmtKind::Verify(e) => format!("(verify {})", e.tree()),
            StmtKind::Prob(a, b) => format!("(prob {} {})", a.tree(), b.tree()),
            StmtKind::Expect(a, b) => format!("(expect {} {})", a.name, b.tree()),
            StmtKind::Spectrum(a) => format!("(spectrum {})", a.name),
        }
    }
}

/// One line per statement.
pub fn program_tree(stmts: &[Stmt]) -> String {
    stmts.iter().map(|s| s.tree() + "\n").collect()
}
