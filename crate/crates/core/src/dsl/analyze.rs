//! Name resolution.
//!
//! Declarations are hoisted: the registry is built from every `observable`
//! statement, then from the caller's hook (a basis file, say), then from
//! states whose observable is declared nowhere. Such observables are
//! declared implicitly with the labels in order of first use. Joint
//! declarations come last. Variables are resolved in statement order and
//! inlined, so every query carries a self-contained [`RawExpr`].

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_complex::Complex;

use super::ast::{Expr, ExprKind, Ident, StateLit, Stmt, StmtKind};
use super::render::render_stmt;
use super::{DslError, ErrorKind, Result, Span};
use crate::raw::RawExpr;
use crate::registry::{ObservableId, Registry, RegistryBuilder, StateRef};
use crate::scalar::Ket;

#[derive(Debug, Clone, PartialEq)]
pub enum QueryKind {
    Normalize(RawExpr),
    Trace(RawExpr),
    Verify(RawExpr),
    Prob(StateRef, StateRef),
    Expect(ObservableId, StateRef),
    Spectrum(ObservableId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    /// Canonical source text of the statement.
    pub text: String,
    pub span: Span,
    pub kind: QueryKind,
}

#[derive(Debug, Clone)]
pub struct Program {
    pub registry: Arc<Registry>,
    pub queries: Vec<Query>,
}

pub fn analyze(stmts: &[Stmt]) -> Result<Program> {
    analyze_with(stmts, |_| Ok(()))
}

pub fn analyze_with(
    stmts: &[Stmt],
    declare: impl FnOnce(&mut RegistryBuilder) -> Result<()>,
) -> Result<Program> {
    let registry = Arc::new(build_registry(stmts, declare)?);
    let mut env: HashMap<String, RawExpr> = HashMap::new();
    let mut queries = Vec::new();
    let lower = Lower { registry: &registry };
    for stmt in stmts {
        let kind = match &stmt.kind {
            StmtKind::Observable { .. } | StmtKind::Joint { .. } => continue,
            StmtKind::Let { name, value } => {
                let raw = lower.expr(value, &env)?;
                env.insert(name.name.clone(), raw);
                continue;
            }
            StmtKind::Normalize(e) => QueryKind::Normalize(lower.expr(e, &env)?),
            StmtKind::Trace(e) => QueryKind::Trace(lower.expr(e, &env)?),
            StmtKind::Verify(e) => QueryKind::Verify(lower.expr(e, &env)?),
            StmtKind::Prob(a, b) => QueryKind::Prob(lower.state(a)?, lower.state(b)?),
            StmtKind::Expect(a, b) => QueryKind::Expect(lower.observable(a)?, lower.state(b)?),
            StmtKind::Spectrum(a) => QueryKind::Spectrum(lower.observable(a)?),
        };
        queries.push(Query {
            text: render_stmt(stmt),
            span: stmt.span,
            kind,
        });
    }
    Ok(Program { registry, queries })
}

fn declaration(message: impl ToString, span: Span) -> DslError {
    DslError::new(ErrorKind::Declaration(message.to_string()), span)
}

fn build_registry(
    stmts: &[Stmt],
    declare: impl FnOnce(&mut RegistryBuilder) -> Result<()>,
) -> Result<Registry> {
    let mut b = RegistryBuilder::new();
    let mut joints = Vec::new();
    for stmt in stmts {
        match &stmt.kind {
            StmtKind::Observable { name, labels } => {
                let names: Vec<String> = labels.iter().map(|l| l.label.name.clone()).collect();
                for (k, l) in labels.iter().enumerate() {
                    if names[..k].contains(&l.label.name) {
                        return Err(declaration(
                            format!("observable `{}` declares label `{}` twice", name.name, l.label.name),
                            l.label.span,
                        ));
                    }
                }
                let given = labels.iter().filter(|l| l.value.is_some()).count();
                if given != 0 && given != labels.len() {
                    let missing = labels.iter().find(|l| l.value.is_none()).expect("some value is missing");
                    return Err(declaration(
                        format!("label `{}` needs a value: either every label of `{}` has one or none does", missing.label.name, name.name),
                        missing.label.span,
                    ));
                }
                let values = (given > 0)
                    .then(|| labels.iter().map(|l| l.value.clone().expect("checked").0).collect());
                b.define_observable(&name.name, names, values)
                    .map_err(|e| declaration(e, name.span))?;
            }
            StmtKind::Joint { name, components } => joints.push((name, components)),
            _ => {}
        }
    }
    declare(&mut b)?;

    let joint_names: Vec<&str> = joints.iter().map(|(n, _)| n.name.as_str()).collect();
    let mut implicit: BTreeMap<usize, (String, Vec<String>)> = BTreeMap::new();
    let mut order: HashMap<String, usize> = HashMap::new();
    for s in stmts.iter().flat_map(stmt_states) {
        let obs = &s.observable.name;
        if b.lookup(obs).is_some() || joint_names.contains(&obs.as_str()) {
            continue;
        }
        let next = order.len();
        let slot = *order.entry(obs.clone()).or_insert(next);
        let entry = implicit.entry(slot).or_insert_with(|| (obs.clone(), Vec::new()));
        if !entry.1.contains(&s.label.name) {
            entry.1.push(s.label.name.clone());
        }
    }
    for (name, labels) in implicit.into_values() {
        b.define_observable(&name, labels, None)
            .expect("implicit observables are fresh and their labels distinct");
    }

    for (name, components) in joints {
        let mut ids = Vec::new();
        for c in components {
            let id = b
                .lookup(&c.name)
                .ok_or_else(|| DslError::new(ErrorKind::UnknownObservable(c.name.clone()), c.span))?;
            ids.push(id);
        }
        b.joint_observable(&name.name, &ids)
            .map_err(|e| declaration(e, name.span))?;
    }
    Ok(b.freeze())
}

fn stmt_states(stmt: &Stmt) -> Vec<&StateLit> {
    let mut out = Vec::new();
    match &stmt.kind {
        StmtKind::Let { value: e, .. }
        | StmtKind::Normalize(e)
        | StmtKind::Trace(e)
        | StmtKind::Verify(e) => expr_states(e, &mut out),
        StmtKind::Prob(a, b) => out.extend([a, b]),
        StmtKind::Expect(_, b) => out.push(b),
        _ => {}
    }
    out
}

fn expr_states<'a>(e: &'a Expr, out: &mut Vec<&'a StateLit>) {
    match &e.kind {
        ExprKind::Sum(a, b) | ExprKind::Difference(a, b) | ExprKind::Product(a, b) => {
            expr_states(a, out);
            expr_states(b, out);
        }
        ExprKind::Neg(a) | ExprKind::Adjoint(a) | ExprKind::Conjugate(a) | ExprKind::Transpose(a) => {
            expr_states(a, out)
        }
        ExprKind::Symbol { out: o, inp } => {
            out.push(o);
            out.extend(inp);
        }
        ExprKind::Tf { bra, ket } => out.extend([bra, ket]),
        ExprKind::Identity | ExprKind::Number(_) | ExprKind::Var(_) => {}
    }
}

struct Lower<'r> {
    registry: &'r Registry,
}

impl Lower<'_> {
    fn observable(&self, id: &Ident) -> Result<ObservableId> {
        self.registry
            .lookup(&id.name)
            .ok_or_else(|| DslError::new(ErrorKind::UnknownObservable(id.name.clone()), id.span))
    }

    fn state(&self, s: &StateLit) -> Result<StateRef> {
        let id = self.observable(&s.observable)?;
        let def = self.registry.observable(id).expect("looked-up id is present");
        let index = def.label_index(&s.label.name).ok_or_else(|| {
            DslError::new(
                ErrorKind::UnknownLabel {
                    observable: def.name.clone(),
                    label: s.label.name.clone(),
                },
                s.label.span,
            )
        })?;
        Ok(StateRef::new(id, index))
    }

    fn ket(&self, s: &StateLit) -> Result<Ket> {
        let k = Ket::plain(self.state(s)?);
        Ok(if s.conj { k.conjugated() } else { k })
    }

    fn expr(&self, e: &Expr, env: &HashMap<String, RawExpr>) -> Result<RawExpr> {
        let bx = |x: &Expr| self.expr(x, env).map(Box::new);
        Ok(match &e.kind {
            ExprKind::Sum(a, b) => RawExpr::Sum(bx(a)?, bx(b)?),
            ExprKind::Difference(a, b) => RawExpr::Difference(bx(a)?, bx(b)?),
            ExprKind::Product(a, b) => RawExpr::Product(bx(a)?, bx(b)?),
            ExprKind::Neg(a) => RawExpr::Neg(bx(a)?),
            ExprKind::Adjoint(a) => RawExpr::Adjoint(bx(a)?),
            ExprKind::Conjugate(a) => RawExpr::Conjugate(bx(a)?),
            ExprKind::Transpose(a) => RawExpr::Transpose(bx(a)?),
            ExprKind::Symbol { out, inp } => {
                let o = self.ket(out)?;
                let i = match inp {
                    Some(i) => self.ket(i)?,
                    None => o,
                };
                RawExpr::Symbol { out: o, inp: i }
            }
            ExprKind::Tf { bra, ket } => RawExpr::Tf {
                bra: self.ket(bra)?,
                ket: self.ket(ket)?,
            },
            ExprKind::Identity => RawExpr::Identity,
            ExprKind::Number(c) => RawExpr::Number(Complex::new(c.re.clone(), c.im.clone())),
            ExprKind::Var(v) => env
                .get(v)
                .cloned()
                .ok_or_else(|| DslError::new(ErrorKind::UnboundVariable(v.clone()), e.span))?,
        })
    }
}
