use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::{DslError, ErrorKind, Result, Span};
use crate::scalar::parse_decimal;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// `12`, `0.5`, `3/4`, `2i`, `3/4i`.
    Number {
        text: String,
        value: BigRational,
        imaginary: bool,
    },
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Dot,
    Eq,
    Amp,
    Pipe,
    Lt,
    Gt,
    Arrow,
    Plus,
    Minus,
    Star,
    Dagger,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(name) => return write!(f, "`{name}`"),
            Tok::Number { text, .. } => return write!(f, "`{text}`"),
            Tok::Eof => "end of input",
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBracket => "`[`",
            Tok::RBracket => "`]`",
            Tok::Comma => "`,`",
            Tok::Colon => "`:`",
            Tok::Dot => "`.`",
            Tok::Eq => "`=`",
            Tok::Amp => "`&`",
            Tok::Pipe => "`|`",
            Tok::Lt => "`<`",
            Tok::Gt => "`>`",
            Tok::Arrow => "`<-`",
            Tok::Plus => "`+`",
            Tok::Minus => "`-`",
            Tok::Star => "`*`",
            Tok::Dagger => "`†`",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    column: u32,
    offset: u32,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        self.offset += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn here(&self) -> Span {
        Span {
            line: self.line,
            column: self.column,
            length: 0,
            offset: self.offset,
        }
    }

    fn eat_digits(&mut self, out: &mut String) {
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            out.push(c);
            self.bump();
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub fn tokenize(source: &str) -> Result<Vec<Token>> {
    let mut cur = Cursor {
        chars: source.chars().peekable(),
        line: 1,
        column: 1,
        offset: 0,
    };
    let mut out = Vec::new();
    loop {
        while let Some(c) = cur.peek() {
            if c == '#' {
                while cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
            } else if c.is_whitespace() {
                cur.bump();
            } else {
                break;
            }
        }
        let start = cur.here();
        let Some(c) = cur.bump() else {
            // end of input sits right after the last token, not after trailing trivia
            let span = out.last().map_or(Span { line: 1, column: 1, length: 0, offset: 0 }, |t: &Token| t.span.after());
            out.push(Token { tok: Tok::Eof, span });
            return Ok(out);
        };
        let tok = match c {
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ',' => Tok::Comma,
            ':' => Tok::Colon,
            '.' => Tok::Dot,
            '=' => Tok::Eq,
            '&' => Tok::Amp,
            '|' => Tok::Pipe,
            '>' => Tok::Gt,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '†' => Tok::Dagger,
            '<' => {
                if cur.peek() == Some('-') {
                    cur.bump();
                    Tok::Arrow
                } else {
                    Tok::Lt
                }
            }
            '^' => {
                if cur.peek() == Some('+') {
                    cur.bump();
                    Tok::Dagger
                } else {
                    let span = Span { length: 1, ..start };
                    return Err(DslError::new(
                        ErrorKind::Syntax {
                            found: "`^`".into(),
                            expected: vec!["`^+`".into()],
                        },
                        span,
                    ));
                }
            }
            c if is_ident_start(c) => {
                let mut name = String::from(c);
                while let Some(c) = cur.peek().filter(|&c| is_ident_continue(c)) {
                    name.push(c);
                    cur.bump();
                }
                Tok::Ident(name)
            }
            c if c.is_ascii_digit() => number(&mut cur, c, start)?,
            other => {
                return Err(DslError::new(
                    ErrorKind::Syntax {
                        found: format!("character `{other}`"),
                        expected: vec![],
                    },
                    Span { length: 1, ..start },
                ))
            }
        };
        let span = Span {
            length: cur.offset - start.offset,
            ..start
        };
        out.push(Token { tok, span });
    }
}

fn number(cur: &mut Cursor<'_>, first: char, start: Span) -> Result<Tok> {
    let mut text = String::from(first);
    cur.eat_digits(&mut text);
    // `1.x` is left for the parser: the dot may separate joint label parts
    let mut lookahead = cur.chars.clone();
    lookahead.next();
    if cur.peek() == Some('.') && lookahead.next().is_some_and(|c| c.is_ascii_digit()) {
        text.push('.');
        cur.bump();
        cur.eat_digits(&mut text);
    }
    let mut value = parse_decimal(&text).expect("digits form a decimal");
    if cur.peek() == Some('/') {
        text.push('/');
        cur.bump();
        let mut denom = String::new();
        cur.eat_digits(&mut denom);
        let bad = |cur: &Cursor<'_>, what: &str| {
            DslError::new(
                ErrorKind::Literal(what.to_string()),
                Span {
                    length: cur.offset - start.offset,
                    ..start
                },
            )
        };
        if denom.is_empty() {
            return Err(bad(cur, "expected digits after `/`"));
        }
        let d: BigInt = denom.parse().expect("digits");
        if d.is_zero() {
            return Err(bad(cur, "zero denominator"));
        }
        text.push_str(&denom);
        value /= BigRational::from_integer(d);
    }
    let mut imaginary = false;
    if cur.peek() == Some('i') {
        let mut lookahead = cur.chars.clone();
        lookahead.next();
        if !lookahead.next().is_some_and(is_ident_continue) {
            cur.bump();
            text.push('i');
            imaginary = true;
        }
    }
    if let Some(c) = cur.peek().filter(|&c| is_ident_continue(c)) {
        cur.bump();
        return Err(DslError::new(
            ErrorKind::Literal(format!("unexpected `{c}` in number")),
            Span {
                length: cur.offset - start.offset,
                ..start
            },
        ));
    }
    Ok(Tok::Number {
        text,
        value,
        imaginary,
    })
}
