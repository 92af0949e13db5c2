//! The measurement algebra in normal form.
//!
//! Every [`AlgebraExpr`] is a linear combination of single words (either the
//! identity or one symbol `M(out <- in)`) with [`ScalarExpr`] coefficients.
//! Products are reduced on construction with
//!
//! ```text
//! M(a <- b) M(c <- d) = <b|c> M(a <- d)
//! ```
//!
//! so no product words are ever stored.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use crate::registry::{ObservableId, Registry, RegistryError, StateRef};
use crate::scalar::{fmt_ket, join_signed, monomial_factors, split_coeff, Coeff, Ket, ScalarExpr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymbolWord {
    Identity,
    /// `|out><in|`: accepts `inp`, emits `out`.
    M { out: Ket, inp: Ket },
}

impl SymbolWord {
    pub fn filter(s: StateRef) -> Self {
        SymbolWord::M {
            out: Ket::plain(s),
            inp: Ket::plain(s),
        }
    }

    pub fn general(out: StateRef, inp: StateRef) -> Self {
        SymbolWord::M {
            out: Ket::plain(out),
            inp: Ket::plain(inp),
        }
    }

    /// Word product; `None` when the connecting delta vanishes.
    pub fn mul(&self, other: &SymbolWord) -> Option<(ScalarExpr, SymbolWord)> {
        match (self, other) {
            (SymbolWord::Identity, w) | (w, SymbolWord::Identity) => Some((ScalarExpr::one(), *w)),
            (SymbolWord::M { out: a, inp: b }, SymbolWord::M { out: c, inp: d }) => {
                let link = ScalarExpr::tf(*b, *c);
                (!link.is_zero()).then_some((link, SymbolWord::M { out: *a, inp: *d }))
            }
        }
    }

    pub fn adjoint(&self) -> SymbolWord {
        match *self {
            SymbolWord::Identity => SymbolWord::Identity,
            SymbolWord::M { out, inp } => SymbolWord::M { out: inp, inp: out },
        }
    }

    pub fn conjugate(&self) -> SymbolWord {
        match *self {
            SymbolWord::Identity => SymbolWord::Identity,
            SymbolWord::M { out, inp } => SymbolWord::M {
                out: out.conjugated(),
                inp: inp.conjugated(),
            },
        }
    }

    pub fn states(&self) -> impl Iterator<Item = StateRef> {
        let pair = match *self {
            SymbolWord::Identity => None,
            SymbolWord::M { out, inp } => Some([out.state, inp.state]),
        };
        pair.into_iter().flatten()
    }

    pub fn display<'a>(&'a self, registry: &'a Registry) -> WordDisplay<'a> {
        WordDisplay {
            word: self,
            registry,
        }
    }
}

/// Normal-form algebra element. The zero element is the empty map.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct AlgebraExpr {
    terms: BTreeMap<SymbolWord, ScalarExpr>,
}

impl AlgebraExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::word(SymbolWord::Identity)
    }

    pub fn word(w: SymbolWord) -> Self {
        Self::term(w, ScalarExpr::one())
    }

    pub fn term(w: SymbolWord, s: ScalarExpr) -> Self {
        let mut terms = BTreeMap::new();
        if !s.is_zero() {
            terms.insert(w, s);
        }
        AlgebraExpr { terms }
    }

    pub fn scalar(s: ScalarExpr) -> Self {
        Self::term(SymbolWord::Identity, s)
    }

    pub fn from_terms<I: IntoIterator<Item = (SymbolWord, ScalarExpr)>>(terms: I) -> Self {
        let mut acc = BTreeMap::new();
        for (w, s) in terms {
            accumulate(&mut acc, w, s);
        }
        AlgebraExpr { terms: acc }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&SymbolWord, &ScalarExpr)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, w: &SymbolWord) -> ScalarExpr {
        self.terms.get(w).cloned().unwrap_or_default()
    }

    pub fn contains_identity(&self) -> bool {
        self.terms.contains_key(&SymbolWord::Identity)
    }

    pub fn add(&self, other: &AlgebraExpr) -> AlgebraExpr {
        let mut terms = self.terms.clone();
        for (w, s) in &other.terms {
            accumulate(&mut terms, *w, s.clone());
        }
        AlgebraExpr { terms }
    }

    pub fn neg(&self) -> AlgebraExpr {
        self.map_scalars(ScalarExpr::neg)
    }

    pub fn sub(&self, other: &AlgebraExpr) -> AlgebraExpr {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: &ScalarExpr) -> AlgebraExpr {
        Self::from_terms(self.terms.iter().map(|(w, c)| (*w, s.mul(c))))
    }

    pub fn scale_coeff(&self, c: &Coeff) -> AlgebraExpr {
        Self::from_terms(self.terms.iter().map(|(w, s)| (*w, s.scale(c))))
    }

    /// Bilinear extension of the word product.
    pub fn mul(&self, other: &AlgebraExpr) -> AlgebraExpr {
        let mut terms = BTreeMap::new();
        for (wx, sx) in &self.terms {
            for (wy, sy) in &other.terms {
                if let Some((link, w)) = wx.mul(wy) {
                    accumulate(&mut terms, w, sx.mul(sy).mul(&link));
                }
            }
        }
        AlgebraExpr { terms }
    }

    /// `M(a <- b)^† = M(b <- a)`, scalars conjugated.
    pub fn adjoint(&self) -> AlgebraExpr {
        Self::from_terms(self.terms.iter().map(|(w, s)| (w.adjoint(), s.conj())))
    }

    /// Map into the conjugate algebra: scalars conjugated, kets flipped.
    pub fn conjugate(&self) -> AlgebraExpr {
        Self::from_terms(self.terms.iter().map(|(w, s)| (w.conjugate(), s.conj())))
    }

    /// Adjoint taken in the conjugate algebra; scalars are left alone.
    pub fn transpose(&self) -> AlgebraExpr {
        Self::from_terms(
            self.terms
                .iter()
                .map(|(w, s)| (w.adjoint().conjugate(), s.clone())),
        )
    }

    /// Re-canonicalizes the term map. Values built through this module are
    /// already normal, so this is idempotent.
    pub fn normalize(&self) -> AlgebraExpr {
        Self::from_terms(self.terms.iter().map(|(w, s)| {
            (*w, ScalarExpr::from_terms(s.terms().map(|(m, c)| (m.clone(), c.clone()))))
        }))
    }

    pub fn map_scalars(&self, f: impl Fn(&ScalarExpr) -> ScalarExpr) -> AlgebraExpr {
        Self::from_terms(self.terms.iter().map(|(w, s)| (*w, f(s))))
    }

    /// Replaces the identity by the complete measurement over `via`.
    pub fn expand_identity(
        &self,
        registry: &Registry,
        via: ObservableId,
    ) -> Result<AlgebraExpr, RegistryError> {
        let states = registry.states(via)?;
        let Some(s) = self.terms.get(&SymbolWord::Identity) else {
            return Ok(self.clone());
        };
        let mut rest = self.clone();
        rest.terms.remove(&SymbolWord::Identity);
        let expansion =
            AlgebraExpr::from_terms(states.into_iter().map(|a| (SymbolWord::filter(a), s.clone())));
        Ok(rest.add(&expansion))
    }

    pub fn display<'a>(&'a self, registry: &'a Registry) -> AlgebraDisplay<'a> {
        AlgebraDisplay {
            expr: self,
            registry,
        }
    }
}

fn accumulate(terms: &mut BTreeMap<SymbolWord, ScalarExpr>, w: SymbolWord, s: ScalarExpr) {
    match terms.entry(w) {
        Entry::Vacant(v) => {
            if !s.is_zero() {
                v.insert(s);
            }
        }
        Entry::Occupied(mut o) => {
            let sum = o.get().add(&s);
            if sum.is_zero() {
                o.remove();
            } else {
                *o.get_mut() = sum;
            }
        }
    }
}

// Free-function surface, one per algebra operation.

pub fn symbol(registry: &Registry, out: StateRef, inp: StateRef) -> Result<AlgebraExpr, RegistryError> {
    registry.check(out)?;
    registry.check(inp)?;
    Ok(AlgebraExpr::word(SymbolWord::general(out, inp)))
}

pub fn filter(registry: &Registry, a: StateRef) -> Result<AlgebraExpr, RegistryError> {
    symbol(registry, a, a)
}

/// `coeff * x + y`.
pub fn combine(coeff: &ScalarExpr, x: &AlgebraExpr, y: &AlgebraExpr) -> AlgebraExpr {
    x.scale(coeff).add(y)
}

pub fn mul(x: &AlgebraExpr, y: &AlgebraExpr) -> AlgebraExpr {
    x.mul(y)
}

pub fn normalize(x: &AlgebraExpr) -> AlgebraExpr {
    x.normalize()
}

pub fn adjoint(x: &AlgebraExpr) -> AlgebraExpr {
    x.adjoint()
}

pub fn conjugate(x: &AlgebraExpr) -> AlgebraExpr {
    x.conjugate()
}

pub fn transpose(x: &AlgebraExpr) -> AlgebraExpr {
    x.transpose()
}

pub fn expand_identity(
    registry: &Registry,
    x: &AlgebraExpr,
    via: ObservableId,
) -> Result<AlgebraExpr, RegistryError> {
    x.expand_identity(registry, via)
}

// ---------------------------------------------------------------------------
// Rendering.

pub struct WordDisplay<'a> {
    word: &'a SymbolWord,
    registry: &'a Registry,
}

impl fmt::Display for WordDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self.word {
            SymbolWord::Identity => f.write_str("I"),
            SymbolWord::M { out, inp } if out == inp => {
                write!(f, "M[{}]", fmt_ket(self.registry, out))
            }
            SymbolWord::M { out, inp } => write!(
                f,
                "M[{}<-{}]",
                fmt_ket(self.registry, out),
                fmt_ket(self.registry, inp)
            ),
        }
    }
}

pub struct AlgebraDisplay<'a> {
    expr: &'a AlgebraExpr,
    registry: &'a Registry,
}

impl fmt::Display for AlgebraDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut signed = Vec::with_capacity(self.expr.len());
        for (w, s) in &self.expr.terms {
            let word = w.display(self.registry).to_string();
            let mut single = s.terms();
            let (first, second) = (single.next(), single.next());
            match (first, second) {
                (Some((m, c)), None) => {
                    let (neg, mag) = split_coeff(c);
                    let mut parts = Vec::new();
                    if !mag.is_empty() {
                        parts.push(mag);
                    }
                    parts.extend(monomial_factors(self.registry, m));
                    parts.push(word);
                    signed.push((neg, parts.join("*")));
                }
                _ => signed.push((false, format!("({})*{}", s.display(self.registry), word))),
            }
        }
        f.write_str(&join_signed(&signed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::RegistryBuilder;
    use crate::scalar::{coeff, coeff_int, rational};

    struct Fx {
        r: Registry,
        z: ObservableId,
        x: ObservableId,
    }

    fn fx() -> Fx {
        let mut b = RegistryBuilder::new();
        let z = b
            .define_observable("Z", vec!["up".into(), "down".into()], None)
            .unwrap()
            .id;
        let x = b
            .define_observable("X", vec!["plus".into(), "minus".into()], None)
            .unwrap()
            .id;
        Fx { r: b.freeze(), z, x }
    }

    fn m(s: StateRef) -> AlgebraExpr {
        AlgebraExpr::word(SymbolWord::filter(s))
    }

    #[test]
    fn idempotent_and_orthogonal_filters() {
        let f = fx();
        let up = StateRef::new(f.z, 0);
        let down = StateRef::new(f.z, 1);
        assert_eq!(m(up).mul(&m(up)), m(up));
        assert!(m(up).mul(&m(down)).is_zero());
    }

    #[test]
    fn mixed_product_introduces_transformation_function() {
        let f = fx();
        let up = StateRef::new(f.z, 0);
        let plus = StateRef::new(f.x, 0);
        let prod = m(up).mul(&m(plus));
        assert_eq!(
            prod,
            AlgebraExpr::term(SymbolWord::general(up, plus), ScalarExpr::tf_states(up, plus))
        );
        assert_eq!(prod.display(&f.r).to_string(), "<Z:up|X:plus>*M[Z:up<-X:plus]");
        assert_ne!(prod, m(plus).mul(&m(up)));
    }

    #[test]
    fn identity_laws() {
        let f = fx();
        let up = StateRef::new(f.z, 0);
        let i = AlgebraExpr::identity();
        assert_eq!(i.mul(&m(up)), m(up));
        assert_eq!(m(up).mul(&i), m(up));
        assert!(AlgebraExpr::zero().mul(&m(up)).is_zero());
        assert_eq!(m(up).add(&AlgebraExpr::zero()), m(up));
    }

    #[test]
    fn combine_cancels() {
        let f = fx();
        let up = StateRef::new(f.z, 0);
        assert!(combine(&ScalarExpr::int(-1), &m(up), &m(up)).is_zero());
    }

    #[test]
    fn adjoint_rules() {
        let f = fx();
        let up = StateRef::new(f.z, 0);
        let plus = StateRef::new(f.x, 0);
        assert_eq!(m(up).adjoint(), m(up));
        assert_eq!(m(up).mul(&m(plus)).adjoint(), m(plus).mul(&m(up)));
        let lambda = ScalarExpr::constant(coeff(rational(1, 3), rational(2, 1)));
        let y = m(up).mul(&m(plus));
        assert_eq!(y.scale(&lambda).adjoint(), y.adjoint().scale(&lambda.conj()));
    }

    #[test]
    fn transpose_keeps_scalars() {
        let f = fx();
        let up = StateRef::new(f.z, 0);
        let plus = StateRef::new(f.x, 0);
        let lambda = ScalarExpr::constant(coeff(rational(0, 1), rational(5, 1)));
        let w = AlgebraExpr::term(SymbolWord::general(up, plus), lambda.clone());
        let t = w.transpose();
        let (word, s) = t.terms().next().unwrap();
        assert_eq!(s, &lambda);
        assert_eq!(word.display(&f.r).to_string(), "M[X:plus*<-Z:up*]");
        assert_eq!(t.transpose(), w);
        assert_eq!(t, w.adjoint().conjugate());
        assert_eq!(t, w.conjugate().adjoint());
    }

    #[test]
    fn expand_identity_over_spectrum() {
        let f = fx();
        let e = AlgebraExpr::identity().expand_identity(&f.r, f.z).unwrap();
        assert_eq!(e, m(StateRef::new(f.z, 0)).add(&m(StateRef::new(f.z, 1))));
        assert_eq!(e.display(&f.r).to_string(), "M[Z:up] + M[Z:down]");
        let no_id = m(StateRef::new(f.x, 1));
        assert_eq!(no_id.expand_identity(&f.r, f.z).unwrap(), no_id);
    }

    #[test]
    fn rendering_signs_and_compound_scalars() {
        let f = fx();
        let up = StateRef::new(f.z, 0);
        let plus = StateRef::new(f.x, 0);
        let e = m(up)
            .scale_coeff(&coeff_int(-2))
            .add(&AlgebraExpr::identity().scale(&ScalarExpr::tf_states(up, plus).add(&ScalarExpr::one())));
        assert_eq!(
            e.display(&f.r).to_string(),
            "(1 + <Z:up|X:plus>)*I - 2*M[Z:up]"
        );
        assert_eq!(AlgebraExpr::zero().display(&f.r).to_string(), "0");
    }
}
