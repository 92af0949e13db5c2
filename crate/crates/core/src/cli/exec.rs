//! Query execution.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Serialize;

use super::format::{fmt_complex, fmt_num};
use crate::dsl::{Program, Query, QueryKind, Span};
use crate::functional::{expectation_symbolic, probability_symbolic, trace};
use crate::raw::RawExpr;
use crate::realization::{random_realization, Realization};
use crate::registry::{ObservableId, Registry};
use crate::scalar::{fmt_rational, ScalarExpr};

/// Settings shared by every query of a run.
#[derive(Debug, Clone)]
pub struct Session {
    pub realization: Option<Realization>,
    /// Oracle tolerance for `verify`.
    pub tolerance: f64,
    /// Seed of the random realization used by `verify` without a basis.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryOutput {
    pub query: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub span: Span,
    #[serde(skip)]
    pub failed: bool,
}

impl QueryOutput {
    pub fn text(&self) -> String {
        match (&self.result, &self.error) {
            (_, Some(e)) => format!("error: {e}"),
            (Some(r), None) => r.clone(),
            (None, None) => String::new(),
        }
    }
}

pub fn run_program(program: &Program, session: &Session) -> Vec<QueryOutput> {
    program
        .queries
        .iter()
        .map(|q| run_query(&program.registry, q, session))
        .collect()
}

fn run_query(registry: &Arc<Registry>, q: &Query, session: &Session) -> QueryOutput {
    let mut out = QueryOutput {
        query: q.text.clone(),
        result: None,
        deviation: None,
        error: None,
        span: q.span,
        failed: false,
    };
    match evaluate(registry, &q.kind, session) {
        Ok(Answer::Text(t)) => out.result = Some(t),
        Ok(Answer::Check { passed, deviation, tolerance }) => {
            out.deviation = deviation;
            out.result = Some(match deviation {
                None => "skipped (joint observables have no realization)".into(),
                Some(d) if passed => format!("pass (deviation {})", fmt_num(d)),
                Some(d) => format!("fail (deviation {} > {})", fmt_num(d), fmt_num(tolerance)),
            });
            out.failed = !passed;
        }
        Err(e) => {
            out.error = Some(e);
            out.failed = true;
        }
    }
    out
}

enum Answer {
    Text(String),
    Check {
        passed: bool,
        deviation: Option<f64>,
        tolerance: f64,
    },
}

fn numeric(r: &Realization, s: &ScalarExpr) -> Result<String, String> {
    r.eval_scalar(s, None).map(fmt_complex).map_err(|e| e.to_string())
}

fn evaluate(registry: &Arc<Registry>, kind: &QueryKind, session: &Session) -> Result<Answer, String> {
    let r = session.realization.as_ref();
    let text = match kind {
        QueryKind::Normalize(raw) => raw.normalize().display(registry).to_string(),
        QueryKind::Trace(raw) => {
            let dim = r.map(Realization::dimension);
            let t = trace(&raw.normalize(), dim).map_err(|e| match e {
                crate::functional::FunctionalError::MissingDimension => {
                    format!("{e}; pass --basis to fix it")
                }
                e => e.to_string(),
            })?;
            match r {
                Some(r) => numeric(r, &t)?,
                None => t.display(registry).to_string(),
            }
        }
        QueryKind::Prob(a, b) => {
            let p = probability_symbolic(*a, *b);
            match r {
                Some(r) => numeric(r, &p)?,
                None => p.display(registry).to_string(),
            }
        }
        QueryKind::Expect(obs, b) => {
            let e = expectation_symbolic(registry, *obs, *b).map_err(|e| e.to_string())?;
            match r {
                Some(r) => numeric(r, &e)?,
                None => e.display(registry).to_string(),
            }
        }
        QueryKind::Spectrum(obs) => {
            let spectrum = registry.spectrum(*obs).map_err(|e| e.to_string())?;
            let entries: Vec<String> = spectrum
                .into_iter()
                .map(|(label, value)| match value {
                    Some(v) => format!("{label}: {}", fmt_rational(&v)),
                    None => label.to_string(),
                })
                .collect();
            format!("[{}]", entries.join(", "))
        }
        QueryKind::Verify(raw) => return verify(registry, raw, session),
    };
    Ok(Answer::Text(text))
}

fn verify(registry: &Arc<Registry>, raw: &RawExpr, session: &Session) -> Result<Answer, String> {
    let random;
    let r = match &session.realization {
        Some(r) => r,
        None => {
            random = verify_realization(registry, raw, session.seed)?;
            &random
        }
    };
    let report = r
        .verify_normal_form(raw, session.tolerance)
        .map_err(|e| e.to_string())?;
    Ok(Answer::Check {
        passed: report.passed(),
        deviation: report.deviation,
        tolerance: report.tolerance,
    })
}

/// Seeded Haar bases for the atomic observables of `raw`, which must share
/// one label count.
fn verify_realization(registry: &Arc<Registry>, raw: &RawExpr, seed: u64) -> Result<Realization, String> {
    let observables: BTreeSet<ObservableId> = raw.states().iter().map(|s| s.observable).collect();
    let mut atomic = Vec::new();
    let mut dims = BTreeSet::new();
    for id in observables {
        let def = registry.observable(id).map_err(|e| e.to_string())?;
        if !def.is_joint() {
            atomic.push(id);
            dims.insert(def.len());
        }
    }
    let dim = match dims.len() {
        0 => 2,
        1 => *dims.first().expect("one entry"),
        _ => {
            return Err(
                "observables have different label counts; pass --basis to verify this expression".into(),
            )
        }
    };
    random_realization(registry.clone(), dim, &atomic, seed).map_err(|e| e.to_string())
}
