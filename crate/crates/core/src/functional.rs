//! Trace, probability, expectation value and gauge transformations.

use std::collections::BTreeMap;

use num_traits::Zero;
use thiserror::Error;

use crate::algebra::{AlgebraExpr, SymbolWord};
use crate::registry::{ObservableId, Registry, RegistryError, StateRef};
use crate::scalar::{Coeff, Monomial, Phase, ScalarExpr};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FunctionalError {
    #[error("trace of an expression containing the identity needs the space dimension")]
    MissingDimension,
    #[error("observable `{0}` has no eigenvalues")]
    MissingEigenvalues(String),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

/// `Tr{M(out <- in)} = <in|out>`, `Tr{I} = N`.
pub fn trace(x: &AlgebraExpr, dim_hint: Option<usize>) -> Result<ScalarExpr, FunctionalError> {
    let mut total = ScalarExpr::zero();
    for (w, s) in x.terms() {
        let t = match *w {
            SymbolWord::Identity => {
                let n = dim_hint.ok_or(FunctionalError::MissingDimension)?;
                ScalarExpr::int(n as i64)
            }
            SymbolWord::M { out, inp } => ScalarExpr::tf(inp, out),
        };
        total = total.add(&s.mul(&t));
    }
    Ok(total)
}

/// `p(a|b) = <b|a><a|b>`.
pub fn probability_symbolic(a: StateRef, b: StateRef) -> ScalarExpr {
    ScalarExpr::tf_states(b, a).mul(&ScalarExpr::tf_states(a, b))
}

/// `<A>_b = sum_a value(a) p(a|b)`.
pub fn expectation_symbolic(
    registry: &Registry,
    observable: ObservableId,
    b: StateRef,
) -> Result<ScalarExpr, FunctionalError> {
    registry.check(b)?;
    let def = registry.observable(observable)?;
    let values = def
        .values
        .as_ref()
        .ok_or_else(|| FunctionalError::MissingEigenvalues(def.name.clone()))?;
    let mut total = ScalarExpr::zero();
    for (k, v) in values.iter().enumerate() {
        let c = Coeff::new(v.clone(), Zero::zero());
        total = total.add(&probability_symbolic(StateRef::new(observable, k), b).scale(&c));
    }
    Ok(total)
}

/// Per-state phase angles `phi(a)`; unassigned states have angle 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GaugeAssignment {
    phases: BTreeMap<StateRef, f64>,
}

impl GaugeAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, s: StateRef, phi: f64) -> &mut Self {
        self.phases.insert(s, phi);
        self
    }

    pub fn angle(&self, s: StateRef) -> f64 {
        self.phases.get(&s).copied().unwrap_or(0.0)
    }

    pub fn phases(&self) -> impl Iterator<Item = (StateRef, f64)> + '_ {
        self.phases.iter().map(|(s, p)| (*s, *p))
    }

    fn is_active(&self, s: StateRef) -> bool {
        self.angle(s) != 0.0
    }

    /// Keeps only the symbols whose assigned angle is nonzero.
    fn restrict(&self, p: Phase) -> Phase {
        Phase::from_terms(p.terms().iter().copied().filter(|&(s, _)| self.is_active(s)))
    }
}

/// Regauges `|a> -> e^{i phi(a)} |a>`: every word `M(a <- b)` picks up
/// `exp(i(phi(a) - phi(b)))` and every `<a|b>` picks up
/// `exp(i(phi(b) - phi(a)))`. Angles stay symbolic.
pub fn gauge_transform(x: &AlgebraExpr, g: &GaugeAssignment) -> AlgebraExpr {
    AlgebraExpr::from_terms(x.terms().map(|(w, s)| {
        let word_phase = match *w {
            SymbolWord::Identity => Phase::zero(),
            SymbolWord::M { out, inp } => Phase::from_terms([
                (out.state, out.phase_sign()),
                (inp.state, -inp.phase_sign()),
            ]),
        };
        let scalar = gauge_scalar(s, g);
        let extra = g.restrict(word_phase);
        let scalar = if extra.is_zero() {
            scalar
        } else {
            scalar.map_monomials(|m| m.with_phase(&extra))
        };
        (*w, scalar)
    }))
}

pub fn gauge_scalar(s: &ScalarExpr, g: &GaugeAssignment) -> ScalarExpr {
    s.map_monomials(|m| {
        let p = Phase::from_terms(m.tfs().iter().flat_map(|t| t.phase()));
        let p = g.restrict(p);
        if p.is_zero() {
            m.clone()
        } else {
            Monomial::new(m.tfs().to_vec(), m.phase().add(&p))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::RegistryBuilder;
    use crate::scalar::{rational, Ket};
    use num_rational::BigRational;

    struct Fx {
        r: Registry,
        z: ObservableId,
        x: ObservableId,
        n: ObservableId,
    }

    fn fx() -> Fx {
        let mut b = RegistryBuilder::new();
        let z = b
            .define_observable(
                "Z",
                vec!["up".into(), "down".into()],
                Some(vec![BigRational::from_integer(1.into()), BigRational::from_integer((-1).into())]),
            )
            .unwrap()
            .id;
        let x = b
            .define_observable("X", vec!["plus".into(), "minus".into()], None)
            .unwrap()
            .id;
        let n = b
            .define_observable("N", vec!["n0".into(), "n1".into()], None)
            .unwrap()
            .id;
        Fx { r: b.freeze(), z, x, n }
    }

    fn sym(out: StateRef, inp: StateRef) -> AlgebraExpr {
        AlgebraExpr::word(SymbolWord::general(out, inp))
    }

    #[test]
    fn trace_of_symbols() {
        let f = fx();
        let a = StateRef::new(f.x, 0);
        let b = StateRef::new(f.z, 1);
        assert_eq!(trace(&sym(b, a), None).unwrap(), ScalarExpr::tf_states(a, b));
        assert!(trace(&sym(b, b), None).unwrap().is_one());
        assert_eq!(
            trace(&AlgebraExpr::identity(), None),
            Err(FunctionalError::MissingDimension)
        );
        assert_eq!(trace(&AlgebraExpr::identity(), Some(3)).unwrap(), ScalarExpr::int(3));
    }

    #[test]
    fn trace_of_product_is_commutative() {
        let f = fx();
        let (a, b) = (StateRef::new(f.x, 0), StateRef::new(f.z, 0));
        let (c, d) = (StateRef::new(f.n, 1), StateRef::new(f.x, 1));
        // Tr{M_d^c M_b^a}: out d in c, then out b in a
        let lhs = trace(&sym(d, c).mul(&sym(b, a)), None).unwrap();
        let rhs = trace(&sym(b, a).mul(&sym(d, c)), None).unwrap();
        let expected = ScalarExpr::tf_states(c, b).mul(&ScalarExpr::tf_states(a, d));
        assert_eq!(lhs, expected);
        assert_eq!(rhs, expected);
    }

    #[test]
    fn probabilities() {
        let f = fx();
        let up = StateRef::new(f.z, 0);
        let down = StateRef::new(f.z, 1);
        let plus = StateRef::new(f.x, 0);
        assert!(probability_symbolic(up, up).is_one());
        assert!(probability_symbolic(up, down).is_zero());
        assert_eq!(probability_symbolic(up, plus), probability_symbolic(plus, up));
        assert_eq!(
            probability_symbolic(plus, up).display(&f.r).to_string(),
            "<Z:up|X:plus>*<X:plus|Z:up>"
        );
    }

    #[test]
    fn expectation() {
        let f = fx();
        let up = StateRef::new(f.z, 0);
        let plus = StateRef::new(f.x, 0);
        assert!(expectation_symbolic(&f.r, f.z, up).unwrap().is_one());
        assert_eq!(
            expectation_symbolic(&f.r, f.z, plus).unwrap().display(&f.r).to_string(),
            "<Z:up|X:plus>*<X:plus|Z:up> - <Z:down|X:plus>*<X:plus|Z:down>"
        );
        assert!(matches!(
            expectation_symbolic(&f.r, f.x, up),
            Err(FunctionalError::MissingEigenvalues(_))
        ));
    }

    #[test]
    fn gauge_fixes_filters_and_probabilities() {
        let f = fx();
        let up = StateRef::new(f.z, 0);
        let plus = StateRef::new(f.x, 0);
        let mut g = GaugeAssignment::new();
        g.set(up, 0.3).set(plus, -1.1);
        let filt = AlgebraExpr::word(SymbolWord::filter(up));
        assert_eq!(gauge_transform(&filt, &g), filt);
        let p = AlgebraExpr::scalar(probability_symbolic(up, plus));
        assert_eq!(gauge_transform(&p, &g), p);

        let x = sym(up, plus).scale(&ScalarExpr::constant(Coeff::new(rational(2, 1), rational(1, 1))));
        let zero = GaugeAssignment::new();
        assert_eq!(gauge_transform(&x, &zero), x);
        let gx = gauge_transform(&x, &g);
        assert_ne!(gx, x);
        assert_eq!(
            gx.display(&f.r).to_string(),
            "(2+1i)*exp(i*(φ[Z:up]-φ[X:plus]))*M[Z:up<-X:plus]"
        );
    }

    #[test]
    fn gauge_commutes_with_products() {
        let f = fx();
        let up = StateRef::new(f.z, 0);
        let plus = StateRef::new(f.x, 0);
        let n1 = StateRef::new(f.n, 1);
        let mut g = GaugeAssignment::new();
        g.set(up, 0.5).set(plus, 1.5).set(n1, -0.25);
        let x = sym(up, plus).add(&sym(n1, up).conjugate());
        let y = sym(plus, n1).add(&AlgebraExpr::word(SymbolWord::M {
            out: Ket::plain(up).conjugated(),
            inp: Ket::plain(n1),
        }));
        assert_eq!(
            gauge_transform(&x.mul(&y), &g),
            gauge_transform(&x, &g).mul(&gauge_transform(&y, &g))
        );
    }
}
