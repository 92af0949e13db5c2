//! Unreduced expression trees.
//!
//! A [`RawExpr`] records exactly what was written: sums, products, adjoints
//! and so on, with no reduction applied. [`RawExpr::reduce`] runs the
//! symbolic rules; the realization module evaluates the same tree directly
//! with matrices, which is what makes it an independent oracle.

use crate::algebra::{AlgebraExpr, SymbolWord};
use crate::registry::{ObservableId, Registry, RegistryError, StateRef};
use crate::scalar::{Coeff, Ket, ScalarExpr};

#[derive(Debug, Clone, PartialEq)]
pub enum RawExpr {
    Identity,
    Symbol { out: Ket, inp: Ket },
    /// Transformation function `<bra|ket>` as a scalar leaf.
    Tf { bra: Ket, ket: Ket },
    Number(Coeff),
    Sum(Box<RawExpr>, Box<RawExpr>),
    Difference(Box<RawExpr>, Box<RawExpr>),
    Neg(Box<RawExpr>),
    Product(Box<RawExpr>, Box<RawExpr>),
    Adjoint(Box<RawExpr>),
    Conjugate(Box<RawExpr>),
    Transpose(Box<RawExpr>),
}

/// Result of symbolic reduction: scalars stay scalars until they meet an
/// algebra element, where they act as multiples of the identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Scalar(ScalarExpr),
    Algebra(AlgebraExpr),
}

impl Value {
    pub fn into_algebra(self) -> AlgebraExpr {
        match self {
            Value::Scalar(s) => AlgebraExpr::scalar(s),
            Value::Algebra(a) => a,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Value::Scalar(s) => s.is_zero(),
            Value::Algebra(a) => a.is_zero(),
        }
    }

    pub fn display(&self, registry: &Registry) -> String {
        match self {
            Value::Scalar(s) => s.display(registry).to_string(),
            Value::Algebra(a) => a.display(registry).to_string(),
        }
    }

    fn add(self, other: Value) -> Value {
        match (self, other) {
            (Value::Scalar(a), Value::Scalar(b)) => Value::Scalar(a.add(&b)),
            (a, b) => Value::Algebra(a.into_algebra().add(&b.into_algebra())),
        }
    }

    fn neg(self) -> Value {
        match self {
            Value::Scalar(a) => Value::Scalar(a.neg()),
            Value::Algebra(a) => Value::Algebra(a.neg()),
        }
    }

    fn mul(self, other: Value) -> Value {
        match (self, other) {
            (Value::Scalar(a), Value::Scalar(b)) => Value::Scalar(a.mul(&b)),
            (Value::Scalar(a), Value::Algebra(b)) => Value::Algebra(b.scale(&a)),
            (Value::Algebra(a), Value::Scalar(b)) => Value::Algebra(a.scale(&b)),
            (Value::Algebra(a), Value::Algebra(b)) => Value::Algebra(a.mul(&b)),
        }
    }
}

impl RawExpr {
    pub fn filter(s: StateRef) -> RawExpr {
        RawExpr::Symbol {
            out: Ket::plain(s),
            inp: Ket::plain(s),
        }
    }

    pub fn symbol(out: StateRef, inp: StateRef) -> RawExpr {
        RawExpr::Symbol {
            out: Ket::plain(out),
            inp: Ket::plain(inp),
        }
    }

    pub fn tf(bra: StateRef, ket: StateRef) -> RawExpr {
        RawExpr::Tf {
            bra: Ket::plain(bra),
            ket: Ket::plain(ket),
        }
    }

    pub fn sum(a: RawExpr, b: RawExpr) -> RawExpr {
        RawExpr::Sum(Box::new(a), Box::new(b))
    }

    pub fn product(a: RawExpr, b: RawExpr) -> RawExpr {
        RawExpr::Product(Box::new(a), Box::new(b))
    }

    pub fn adjoint(a: RawExpr) -> RawExpr {
        RawExpr::Adjoint(Box::new(a))
    }

    /// Symbolic reduction to normal form.
    pub fn reduce(&self) -> Value {
        match self {
            RawExpr::Identity => Value::Algebra(AlgebraExpr::identity()),
            RawExpr::Symbol { out, inp } => Value::Algebra(AlgebraExpr::word(SymbolWord::M {
                out: *out,
                inp: *inp,
            })),
            RawExpr::Tf { bra, ket } => Value::Scalar(ScalarExpr::tf(*bra, *ket)),
            RawExpr::Number(c) => Value::Scalar(ScalarExpr::constant(c.clone())),
            RawExpr::Sum(a, b) => a.reduce().add(b.reduce()),
            RawExpr::Difference(a, b) => a.reduce().add(b.reduce().neg()),
            RawExpr::Neg(a) => a.reduce().neg(),
            RawExpr::Product(a, b) => a.reduce().mul(b.reduce()),
            RawExpr::Adjoint(a) => match a.reduce() {
                Value::Scalar(s) => Value::Scalar(s.conj()),
                Value::Algebra(x) => Value::Algebra(x.adjoint()),
            },
            RawExpr::Conjugate(a) => match a.reduce() {
                Value::Scalar(s) => Value::Scalar(s.conj()),
                Value::Algebra(x) => Value::Algebra(x.conjugate()),
            },
            RawExpr::Transpose(a) => match a.reduce() {
                Value::Scalar(s) => Value::Scalar(s),
                Value::Algebra(x) => Value::Algebra(x.transpose()),
            },
        }
    }

    pub fn normalize(&self) -> AlgebraExpr {
        self.reduce().into_algebra()
    }

    /// Rewrites every identity leaf as the complete measurement over `via`,
    /// without reducing anything else.
    pub fn expand_identity(
        &self,
        registry: &Registry,
        via: ObservableId,
    ) -> Result<RawExpr, RegistryError> {
        let states = registry.states(via)?;
        Ok(self.map_identity(&|| {
            states
                .iter()
                .map(|&s| RawExpr::filter(s))
                .reduce(RawExpr::sum)
                .expect("spectra are nonempty")
        }))
    }

    fn map_identity(&self, f: &impl Fn() -> RawExpr) -> RawExpr {
        let bx = |e: &RawExpr| Box::new(e.map_identity(f));
        match self {
            RawExpr::Identity => f(),
            RawExpr::Symbol { .. } | RawExpr::Tf { .. } | RawExpr::Number(_) => self.clone(),
            RawExpr::Sum(a, b) => RawExpr::Sum(bx(a), bx(b)),
            RawExpr::Difference(a, b) => RawExpr::Difference(bx(a), bx(b)),
            RawExpr::Neg(a) => RawExpr::Neg(bx(a)),
            RawExpr::Product(a, b) => RawExpr::Product(bx(a), bx(b)),
            RawExpr::Adjoint(a) => RawExpr::Adjoint(bx(a)),
            RawExpr::Conjugate(a) => RawExpr::Conjugate(bx(a)),
            RawExpr::Transpose(a) => RawExpr::Transpose(bx(a)),
        }
    }

    /// Every state referenced by the tree.
    pub fn states(&self) -> Vec<StateRef> {
        let mut out = Vec::new();
        self.collect_states(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_states(&self, out: &mut Vec<StateRef>) {
        match self {
            RawExpr::Identity | RawExpr::Number(_) => {}
            RawExpr::Symbol { out: a, inp: b } | RawExpr::Tf { bra: a, ket: b } => {
                out.push(a.state);
                out.push(b.state);
            }
            RawExpr::Sum(a, b) | RawExpr::Difference(a, b) | RawExpr::Product(a, b) => {
                a.collect_states(out);
                b.collect_states(out);
            }
            RawExpr::Neg(a) | RawExpr::Adjoint(a) | RawExpr::Conjugate(a) | RawExpr::Transpose(a) => {
                a.collect_states(out)
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            RawExpr::Identity | RawExpr::Symbol { .. } | RawExpr::Tf { .. } | RawExpr::Number(_) => 1,
            RawExpr::Sum(a, b) | RawExpr::Difference(a, b) | RawExpr::Product(a, b) => {
                1 + a.depth().max(b.depth())
            }
            RawExpr::Neg(a) | RawExpr::Adjoint(a) | RawExpr::Conjugate(a) | RawExpr::Transpose(a) => {
                1 + a.depth()
            }
        }
    }
}
