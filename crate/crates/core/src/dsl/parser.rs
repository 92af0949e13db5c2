//! Recursive descent with one token of lookahead.
//!
//! Precedence from loosest to tightest: `+`/`-`, `*`, prefix `-`, postfix
//! `†`. Binary operators associate to the left.

use num_complex::Complex;
use num_rational::BigRational;
use num_traits::Zero;

use super::ast::{Expr, ExprKind, Ident, LabelEntry, StateLit, Stmt, StmtKind};
use super::lexer::{tokenize, Tok, Token};
use super::{DslError, ErrorKind, Result, Span};

pub const KEYWORDS: &[&str] = &[
    "observable", "joint", "let", "normalize", "trace", "verify", "prob", "expect", "spectrum",
    "conj", "transpose", "I", "M",
];

pub const STATEMENT_KEYWORDS: &[&str] = &[
    "observable", "joint", "let", "normalize", "trace", "verify", "prob", "expect", "spectrum",
];

const STATEMENT_START: &[&str] = &[
    "`observable`", "`joint`", "`let`", "`normalize`", "`trace`", "`verify`", "`prob`",
    "`expect`", "`spectrum`",
];

const EXPR_START: &[&str] = &[
    "`I`", "`M`", "`<`", "number", "variable", "`(`", "`conj`", "`transpose`", "`-`",
];

pub fn parse(source: &str) -> Result<Vec<Stmt>> {
    let tokens = tokenize(source)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        last: Span::default(),
    };
    let mut out = Vec::new();
    while p.peek() != &Tok::Eof {
        out.push(p.statement()?);
    }
    Ok(out)
}

/// Parses a single expression and nothing else.
pub fn parse_expr(source: &str) -> Result<Expr> {
    let tokens = tokenize(source)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        last: Span::default(),
    };
    let e = p.expr()?;
    if p.peek() != &Tok::Eof {
        return Err(p.unexpected(&["`+`", "`-`", "`*`", "`†`", "end of input"]));
    }
    Ok(e)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    /// Span of the most recently consumed token.
    last: Span,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        self.last = t.span;
        t
    }

    fn unexpected(&self, expected: &[&str]) -> DslError {
        DslError::new(
            ErrorKind::Syntax {
                found: self.peek().to_string(),
                expected: expected.iter().map(|s| s.to_string()).collect(),
            },
            self.peek_span(),
        )
    }

    fn expect(&mut self, tok: Tok) -> Result<Span> {
        if *self.peek() == tok {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&[&tok.to_string()]))
        }
    }

    fn ident(&mut self, what: &str) -> Result<Ident> {
        match self.peek().clone() {
            Tok::Ident(name) => Ok(Ident {
                name,
                span: self.bump().span,
            }),
            _ => Err(self.unexpected(&[what])),
        }
    }

    /// Identifier that is not a keyword.
    fn binder(&mut self, what: &str) -> Result<Ident> {
        match self.peek() {
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => self.ident(what),
            _ => Err(self.unexpected(&[what])),
        }
    }

    fn statement(&mut self) -> Result<Stmt> {
        let start = self.peek_span();
        let word = match self.peek() {
            Tok::Ident(w) => w.clone(),
            _ => return Err(self.unexpected(STATEMENT_START)),
        };
        let kind = match word.as_str() {
            "observable" => {
                self.bump();
                self.observable_decl()?
            }
            "joint" => {
                self.bump();
                let name = self.ident("observable name")?;
                self.expect(Tok::Eq)?;
                let mut components = vec![self.ident("observable name")?];
                self.expect(Tok::Amp)?;
                components.push(self.ident("observable name")?);
                while *self.peek() == Tok::Amp {
                    self.bump();
                    components.push(self.ident("observable name")?);
                }
                StmtKind::Joint { name, components }
            }
            "let" => {
                self.bump();
                let name = self.binder("variable name")?;
                self.expect(Tok::Eq)?;
                StmtKind::Let {
                    name,
                    value: self.expr()?,
                }
            }
            "normalize" => {
                self.bump();
                StmtKind::Normalize(self.expr()?)
            }
            "trace" => {
                self.bump();
                StmtKind::Trace(self.expr()?)
            }
            "verify" => {
                self.bump();
                StmtKind::Verify(self.expr()?)
            }
            "prob" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let a = self.state(false)?;
                self.expect(Tok::Pipe)?;
                let b = self.state(false)?;
                self.expect(Tok::RParen)?;
                StmtKind::Prob(a, b)
            }
            "expect" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let a = self.ident("observable name")?;
                self.expect(Tok::Pipe)?;
                let b = self.state(false)?;
                self.expect(Tok::RParen)?;
                StmtKind::Expect(a, b)
            }
            "spectrum" => {
                self.bump();
                StmtKind::Spectrum(self.ident("observable name")?)
            }
            _ => return Err(self.unexpected(STATEMENT_START)),
        };
        Ok(Stmt {
            kind,
            span: start.to(self.last),
        })
    }

    fn observable_decl(&mut self) -> Result<StmtKind> {
        let name = self.ident("observable name")?;
        self.expect(Tok::LBrace)?;
        let mut labels = vec![self.label_entry()?];
        loop {
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                    labels.push(self.label_entry()?);
                }
                Tok::RBrace => {
                    self.bump();
                    break;
                }
                _ if labels.last().is_some_and(|l| l.value.is_some()) => {
                    return Err(self.unexpected(&["`,`", "`}`"]))
                }
                _ => return Err(self.unexpected(&["`,`", "`:`", "`}`"])),
            }
        }
        Ok(StmtKind::Observable { name, labels })
    }

    fn label_entry(&mut self) -> Result<LabelEntry> {
        let label = self.label_part()?;
        if *self.peek() != Tok::Colon {
            return Ok(LabelEntry { label, value: None });
        }
        self.bump();
        let start = self.peek_span();
        let negative = *self.peek() == Tok::Minus;
        if negative {
            self.bump();
        }
        match self.peek().clone() {
            Tok::Number {
                value,
                imaginary: false,
                ..
            } => {
                self.bump();
                let value = if negative { -value } else { value };
                Ok(LabelEntry {
                    label,
                    value: Some((value, start.to(self.last))),
                })
            }
            _ if negative => Err(self.unexpected(&["real number"])),
            _ => Err(self.unexpected(&["`-`", "real number"])),
        }
    }

    /// A label segment: identifier or unsigned integer-like literal.
    fn label_part(&mut self) -> Result<Ident> {
        match self.peek().clone() {
            Tok::Ident(name) => Ok(Ident {
                name,
                span: self.bump().span,
            }),
            Tok::Number { text, imaginary: false, .. } if !text.contains('/') => Ok(Ident {
                name: text,
                span: self.bump().span,
            }),
            _ => Err(self.unexpected(&["label"])),
        }
    }

    fn state(&mut self, allow_conj: bool) -> Result<StateLit> {
        let observable = self.ident("observable name")?;
        self.expect(Tok::Colon)?;
        let mut label = self.label_part()?;
        while *self.peek() == Tok::Dot {
            self.bump();
            let part = self.label_part()?;
            label.name.push('.');
            label.name.push_str(&part.name);
            label.span = label.span.to(part.span);
        }
        let conj = allow_conj && *self.peek() == Tok::Star;
        if conj {
            self.bump();
        }
        Ok(StateLit {
            span: observable.span.to(self.last),
            observable,
            label,
            conj,
        })
    }

    pub fn expr(&mut self) -> Result<Expr> {
        let mut left = self.term()?;
        loop {
            let make: fn(Box<Expr>, Box<Expr>) -> ExprKind = match self.peek() {
                Tok::Plus => ExprKind::Sum,
                Tok::Minus => ExprKind::Difference,
                _ => return Ok(left),
            };
            self.bump();
            let right = self.term()?;
            let span = left.span.to(right.span);
            left = Expr {
                kind: make(Box::new(left), Box::new(right)),
                span,
            };
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut left = self.unary()?;
        while *self.peek() == Tok::Star {
            self.bump();
            let right = self.unary()?;
            let span = left.span.to(right.span);
            left = Expr {
                kind: ExprKind::Product(Box::new(left), Box::new(right)),
                span,
            };
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Minus {
            let start = self.bump().span;
            let inner = self.unary()?;
            let span = start.to(inner.span);
            return Ok(Expr {
                kind: ExprKind::Neg(Box::new(inner)),
                span,
            });
        }
        let mut e = self.atom()?;
        while *self.peek() == Tok::Dagger {
            let end = self.bump().span;
            let span = e.span.to(end);
            e = Expr {
                kind: ExprKind::Adjoint(Box::new(e)),
                span,
            };
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Expr> {
        let start = self.peek_span();
        let kind = match self.peek().clone() {
            Tok::Ident(name) => match name.as_str() {
                "I" => {
                    self.bump();
                    ExprKind::Identity
                }
                "M" => {
                    self.bump();
                    self.expect(Tok::LBracket)?;
                    let out = self.state(true)?;
                    let inp = if *self.peek() == Tok::Arrow {
                        self.bump();
                        Some(self.state(true)?)
                    } else {
                        None
                    };
                    if *self.peek() != Tok::RBracket {
                        let last = inp.as_ref().unwrap_or(&out);
                        let mut expected = if last.conj { vec![] } else { vec!["`.`", "`*`"] };
                        if inp.is_none() {
                            expected.push("`<-`");
                        }
                        expected.push("`]`");
                        return Err(self.unexpected(&expected));
                    }
                    self.bump();
                    ExprKind::Symbol { out, inp }
                }
                "conj" | "transpose" => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let inner = Box::new(self.expr()?);
                    self.expect(Tok::RParen)?;
                    if name == "conj" {
                        ExprKind::Conjugate(inner)
                    } else {
                        ExprKind::Transpose(inner)
                    }
                }
                _ if KEYWORDS.contains(&name.as_str()) => return Err(self.unexpected(EXPR_START)),
                _ => {
                    self.bump();
                    ExprKind::Var(name)
                }
            },
            Tok::Lt => {
                self.bump();
                let bra = self.state(true)?;
                self.expect(Tok::Pipe)?;
                let ket = self.state(true)?;
                self.expect(Tok::Gt)?;
                ExprKind::Tf { bra, ket }
            }
            Tok::Number { value, imaginary, .. } => {
                self.bump();
                let zero = BigRational::zero();
                ExprKind::Number(if imaginary {
                    Complex::new(zero, value)
                } else {
                    Complex::new(value, zero)
                })
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                // parentheses leave no trace in the tree
                return Ok(Expr {
                    kind: inner.kind,
                    span: start.to(self.last),
                });
            }
            _ => return Err(self.unexpected(EXPR_START)),
        };
        Ok(Expr {
            kind,
            span: start.to(self.last),
        })
    }
}
