//! Scalar coefficients of the measurement algebra.
//!
//! A [`ScalarExpr`] is a polynomial in transformation-function indeterminates
//! `<x|y>` with exact complex-rational coefficients. Indeterminates commute
//! with each other and with the measurement symbols, so monomials are sorted
//! multisets.
//!
//! Kets carry a conjugation flag: `|a*>` is the state `|a>` as seen from the
//! conjugate algebra. Plain-plain pairs are ordinary transformation functions
//! and reduce to a Kronecker delta inside one observable. Pairs with exactly
//! one conjugated side are symmetric bilinear pairings and never reduce.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::registry::{Registry, StateRef};

/// Exact complex rational.
pub type Coeff = Complex<BigRational>;

pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn coeff(re: BigRational, im: BigRational) -> Coeff {
    Complex::new(re, im)
}

pub fn coeff_int(n: i64) -> Coeff {
    Complex::new(BigRational::from_integer(n.into()), BigRational::zero())
}

/// Parses an unsigned decimal such as `12`, `0.25` or `1.5` exactly.
pub fn parse_decimal(text: &str) -> Option<BigRational> {
    let (int_part, frac_part) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if !frac_part.bytes().all(|b| b.is_ascii_digit()) || (text.contains('.') && frac_part.is_empty()) {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
    Some(BigRational::new(digits, scale))
}

/// Exact rational with the shortest decimal expansion that round-trips `v`.
pub fn rational_from_f64(v: f64) -> Option<BigRational> {
    if !v.is_finite() {
        return None;
    }
    let text = format!("{}", v.abs());
    let r = parse_decimal(&text)?;
    Some(if v < 0.0 { -r } else { r })
}

pub fn coeff_to_c64(c: &Coeff) -> Complex64 {
    Complex64::new(
        c.re.to_f64().unwrap_or(f64::NAN),
        c.im.to_f64().unwrap_or(f64::NAN),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ket {
    pub state: StateRef,
    pub conj: bool,
}

impl Ket {
    pub fn plain(state: StateRef) -> Self {
        Ket { state, conj: false }
    }

    pub fn conjugated(self) -> Self {
        Ket {
            conj: !self.conj,
            ..self
        }
    }

    /// Sign of this ket's gauge phase: `|a> -> e^{i phi(a)} |a>`.
    pub fn phase_sign(self) -> i64 {
        if self.conj {
            -1
        } else {
            1
        }
    }
}

/// A canonical transformation-function indeterminate `<bra|ket>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tf {
    bra: Ket,
    ket: Ket,
}

/// Result of canonicalizing a pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    Delta(bool),
    Indeterminate(Tf),
}

impl Tf {
    pub fn bra(&self) -> Ket {
        self.bra
    }

    pub fn ket(&self) -> Ket {
        self.ket
    }

    /// Canonical form of `<bra|ket>`.
    pub fn pair(bra: Ket, ket: Ket) -> Pairing {
        match (bra.conj, ket.conj) {
            // <x*|y*> = <y|x>
            (true, true) => Tf::pair(ket.conjugated(), bra.conjugated()),
            (false, false) => {
                if bra.state.observable == ket.state.observable {
                    Pairing::Delta(bra.state.index == ket.state.index)
                } else {
                    Pairing::Indeterminate(Tf { bra, ket })
                }
            }
            // Symmetric: <x*|y> = <y*|x> and <x|y*> = <y|x*>.
            _ => {
                let (lo, hi) = if bra.state <= ket.state {
                    (bra.state, ket.state)
                } else {
                    (ket.state, bra.state)
                };
                Pairing::Indeterminate(Tf {
                    bra: Ket {
                        state: lo,
                        conj: bra.conj,
                    },
                    ket: Ket {
                        state: hi,
                        conj: ket.conj,
                    },
                })
            }
        }
    }

    /// Complex conjugate: `conj <x|y> = <y|x>`.
    pub fn conj(&self) -> Tf {
        match Tf::pair(self.ket, self.bra) {
            Pairing::Indeterminate(t) => t,
            Pairing::Delta(_) => unreachable!("canonical indeterminates never reduce"),
        }
    }

    /// Gauge-phase contribution: `<x|y> -> e^{-i phi(x)} e^{i phi(y)} <x|y>`.
    pub fn phase(&self) -> [(StateRef, i64); 2] {
        [
            (self.bra.state, -self.bra.phase_sign()),
            (self.ket.state, self.ket.phase_sign()),
        ]
    }
}

/// Exact gauge angle: an integer combination of per-state phase symbols.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Phase(Vec<(StateRef, i64)>);

impl Phase {
    pub fn zero() -> Self {
        Phase(Vec::new())
    }

    pub fn from_terms<I: IntoIterator<Item = (StateRef, i64)>>(terms: I) -> Self {
        let mut acc: BTreeMap<StateRef, i64> = BTreeMap::new();
        for (s, n) in terms {
            *acc.entry(s).or_default() += n;
        }
        Phase(acc.into_iter().filter(|&(_, n)| n != 0).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terms(&self) -> &[(StateRef, i64)] {
        &self.0
    }

    pub fn add(&self, other: &Phase) -> Phase {
        Phase::from_terms(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn neg(&self) -> Phase {
        Phase(self.0.iter().map(|&(s, n)| (s, -n)).collect())
    }
}

/// A product of indeterminates times an optional gauge phase factor.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    tfs: Vec<Tf>,
    phase: Phase,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn new(mut tfs: Vec<Tf>, phase: Phase) -> Self {
        tfs.sort();
        Monomial { tfs, phase }
    }

    pub fn tfs(&self) -> &[Tf] {
        &self.tfs
    }

    pub fn phase(&self) -> &Phase {
        &self.phase
    }

    pub fn is_one(&self) -> bool {
        self.tfs.is_empty() && self.phase.is_zero()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut tfs = Vec::with_capacity(self.tfs.len() + other.tfs.len());
        tfs.extend_from_slice(&self.tfs);
        tfs.extend_from_slice(&other.tfs);
        Monomial::new(tfs, self.phase.add(&other.phase))
    }

    pub fn conj(&self) -> Monomial {
        Monomial::new(self.tfs.iter().map(Tf::conj).collect(), self.phase.neg())
    }

    pub fn with_phase(&self, extra: &Phase) -> Monomial {
        Monomial {
            tfs: self.tfs.clone(),
            phase: self.phase.add(extra),
        }
    }
}

/// Polynomial in transformation functions with exact complex-rational
/// coefficients. Zero coefficients are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ScalarExpr {
    terms: BTreeMap<Monomial, Coeff>,
}

impl ScalarExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Coeff::one())
    }

    pub fn constant(c: Coeff) -> Self {
        Self::term(Monomial::one(), c)
    }

    pub fn int(n: i64) -> Self {
        Self::constant(coeff_int(n))
    }

    pub fn term(m: Monomial, c: Coeff) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        ScalarExpr { terms }
    }

    /// `<bra|ket>`, reduced to a delta where the pairing allows it.
    pub fn tf(bra: Ket, ket: Ket) -> Self {
        match Tf::pair(bra, ket) {
            Pairing::Delta(true) => Self::one(),
            Pairing::Delta(false) => Self::zero(),
            Pairing::Indeterminate(t) => Self::term(Monomial::new(vec![t], Phase::zero()), Coeff::one()),
        }
    }

    /// Plain transformation function `<x|y>` between two states.
    pub fn tf_states(x: StateRef, y: StateRef) -> Self {
        Self::tf(Ket::plain(x), Ket::plain(y))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    /// The value if this expression has no indeterminates or phases.
    pub fn as_constant(&self) -> Option<Coeff> {
        match self.terms.len() {
            0 => Some(Coeff::zero()),
            1 => {
                let (m, c) = self.terms.iter().next()?;
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    fn accumulate(terms: &mut BTreeMap<Monomial, Coeff>, m: Monomial, c: Coeff) {
        use std::collections::btree_map::Entry;
        match terms.entry(m) {
            Entry::Vacant(v) => {
                if !c.is_zero() {
                    v.insert(c);
                }
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() = o.get().clone() + c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, Coeff)>>(terms: I) -> Self {
        let mut acc = BTreeMap::new();
        for (m, c) in terms {
            Self::accumulate(&mut acc, m, c);
        }
        ScalarExpr { terms: acc }
    }

    pub fn add(&self, other: &ScalarExpr) -> ScalarExpr {
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            Self::accumulate(&mut terms, m.clone(), c.clone());
        }
        ScalarExpr { terms }
    }

    pub fn neg(&self) -> ScalarExpr {
        ScalarExpr {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    pub fn sub(&self, other: &ScalarExpr) -> ScalarExpr {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &ScalarExpr) -> ScalarExpr {
        if self.is_one() {
            return other.clone();
        }
        if other.is_one() {
            return self.clone();
        }
        let mut terms = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                Self::accumulate(&mut terms, ma.mul(mb), ca.clone() * cb.clone());
            }
        }
        ScalarExpr { terms }
    }

    pub fn scale(&self, c: &Coeff) -> ScalarExpr {
        Self::from_terms(self.terms.iter().map(|(m, k)| (m.clone(), k.clone() * c.clone())))
    }

    /// Complex conjugation: coefficients conjugated, `<x|y>` becomes `<y|x>`.
    pub fn conj(&self) -> ScalarExpr {
        Self::from_terms(self.terms.iter().map(|(m, c)| (m.conj(), c.conj())))
    }

    pub fn map_monomials(&self, f: impl Fn(&Monomial) -> Monomial) -> ScalarExpr {
        Self::from_terms(self.terms.iter().map(|(m, c)| (f(m), c.clone())))
    }

    /// Numeric value given values for the indeterminates and phase symbols.
    pub fn eval(
        &self,
        tf: &mut impl FnMut(&Tf) -> Complex64,
        phi: &impl Fn(StateRef) -> f64,
    ) -> Complex64 {
        let mut total = Complex64::zero();
        for (m, c) in &self.terms {
            let mut v = coeff_to_c64(c);
            for t in &m.tfs {
                v *= tf(t);
            }
            if !m.phase.is_zero() {
                let angle: f64 = m.phase.terms().iter().map(|&(s, n)| n as f64 * phi(s)).sum();
                v *= Complex64::from_polar(1.0, angle);
            }
            total += v;
        }
        total
    }

    pub fn display<'a>(&'a self, registry: &'a Registry) -> ScalarDisplay<'a> {
        ScalarDisplay {
            expr: self,
            registry,
        }
    }
}

// ---------------------------------------------------------------------------
// Canonical text rendering.

/// Writes a rational as `n` or `n/d`.
pub fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Sign-split rendering of a coefficient: `(negative, magnitude)`. The
/// magnitude is empty when it is exactly 1.
pub(crate) fn split_coeff(c: &Coeff) -> (bool, String) {
    if c.im.is_zero() {
        let neg = c.re.is_negative();
        let mag = c.re.abs();
        (neg, if mag.is_one() { String::new() } else { fmt_rational(&mag) })
    } else if c.re.is_zero() {
        let neg = c.im.is_negative();
        (neg, format!("{}i", fmt_rational(&c.im.abs())))
    } else {
        let sign = if c.im.is_negative() { '-' } else { '+' };
        (
            false,
            format!("({}{}{}i)", fmt_rational(&c.re), sign, fmt_rational(&c.im.abs())),
        )
    }
}

pub(crate) fn fmt_ket(registry: &Registry, k: Ket) -> String {
    let star = if k.conj { "*" } else { "" };
    format!("{}{}", registry.state_name(k.state), star)
}

pub(crate) fn fmt_tf(registry: &Registry, t: &Tf) -> String {
    format!("<{}|{}>", fmt_ket(registry, t.bra), fmt_ket(registry, t.ket))
}

pub(crate) fn fmt_phase(registry: &Registry, p: &Phase) -> String {
    let mut out = String::new();
    for (k, &(s, n)) in p.terms().iter().enumerate() {
        let sign = if n < 0 { "-" } else if k > 0 { "+" } else { "" };
        let mag = n.unsigned_abs();
        let factor = if mag == 1 { String::new() } else { format!("{mag}*") };
        out.push_str(&format!("{sign}{factor}φ[{}]", registry.state_name(s)));
    }
    format!("exp(i*({out}))")
}

/// Monomial factors without the coefficient, in canonical order.
pub(crate) fn monomial_factors(registry: &Registry, m: &Monomial) -> Vec<String> {
    let mut parts: Vec<String> = m.tfs.iter().map(|t| fmt_tf(registry, t)).collect();
    if !m.phase.is_zero() {
        parts.push(fmt_phase(registry, &m.phase));
    }
    parts
}

/// Signed terms `(negative, body)` of a scalar, each body nonempty.
pub(crate) fn scalar_terms(registry: &Registry, s: &ScalarExpr) -> Vec<(bool, String)> {
    s.terms
        .iter()
        .map(|(m, c)| {
            let (neg, mag) = split_coeff(c);
            let mut parts = Vec::new();
            if !mag.is_empty() {
                parts.push(mag);
            }
            parts.extend(monomial_factors(registry, m));
            if parts.is_empty() {
                parts.push("1".to_string());
            }
            (neg, parts.join("*"))
        })
        .collect()
}

pub(crate) fn join_signed(terms: &[(bool, String)]) -> String {
    if terms.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (k, (neg, body)) in terms.iter().enumerate() {
        match (k, neg) {
            (0, false) => {}
            (0, true) => out.push('-'),
            (_, false) => out.push_str(" + "),
            (_, true) => out.push_str(" - "),
        }
        out.push_str(body);
    }
    out
}

pub struct ScalarDisplay<'a> {
    expr: &'a ScalarExpr,
    registry: &'a Registry,
}

impl fmt::Display for ScalarDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&join_signed(&scalar_terms(self.registry, self.expr)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::{ObservableId, RegistryBuilder};

    fn reg() -> (Registry, ObservableId, ObservableId) {
        let mut b = RegistryBuilder::new();
        let a = b
            .define_observable("A", vec!["a1".into(), "a2".into()], None)
            .unwrap()
            .id;
        let bb = b
            .define_observable("B", vec!["b1".into(), "b2".into()], None)
            .unwrap()
            .id;
        (b.freeze(), a, bb)
    }

    #[test]
    fn same_observable_pairs_reduce_to_delta() {
        let (_, a, _) = reg();
        let x = StateRef::new(a, 0);
        let y = StateRef::new(a, 1);
        assert!(ScalarExpr::tf_states(x, x).is_one());
        assert!(ScalarExpr::tf_states(x, y).is_zero());
        // both conjugated: <x*|y*> = <y|x>
        assert!(ScalarExpr::tf(Ket::plain(x).conjugated(), Ket::plain(x).conjugated()).is_one());
        // mixed pairs stay symbolic
        assert!(!ScalarExpr::tf(Ket::plain(x).conjugated(), Ket::plain(y)).is_zero());
    }

    #[test]
    fn mixed_pairs_are_symmetric() {
        let (_, a, b) = reg();
        let x = Ket::plain(StateRef::new(a, 0));
        let y = Ket::plain(StateRef::new(b, 1));
        assert_eq!(
            ScalarExpr::tf(x.conjugated(), y),
            ScalarExpr::tf(y.conjugated(), x)
        );
        assert_eq!(
            ScalarExpr::tf(x, y.conjugated()),
            ScalarExpr::tf(y, x.conjugated())
        );
    }

    #[test]
    fn conjugation_is_an_involution() {
        let (_, a, b) = reg();
        let x = StateRef::new(a, 0);
        let y = StateRef::new(b, 1);
        let s = ScalarExpr::tf_states(x, y)
            .mul(&ScalarExpr::constant(coeff(rational(1, 2), rational(3, 4))))
            .add(&ScalarExpr::tf(Ket::plain(x).conjugated(), Ket::plain(y)));
        assert_eq!(s.conj().conj(), s);
        assert_eq!(ScalarExpr::tf_states(x, y).conj(), ScalarExpr::tf_states(y, x));
    }

    #[test]
    fn cancellation_removes_terms() {
        let (_, a, b) = reg();
        let t = ScalarExpr::tf_states(StateRef::new(a, 0), StateRef::new(b, 0));
        assert!(t.sub(&t).is_zero());
        assert!(t.mul(&ScalarExpr::zero()).is_zero());
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse_decimal("1.5"), Some(rational(3, 2)));
        assert_eq!(parse_decimal("0.25"), Some(rational(1, 4)));
        assert_eq!(parse_decimal("7"), Some(rational(7, 1)));
        assert_eq!(parse_decimal("1."), None);
        assert_eq!(parse_decimal(".5"), None);
        assert_eq!(rational_from_f64(0.1), Some(rational(1, 10)));
        assert_eq!(rational_from_f64(-2.0), Some(rational(-2, 1)));
        assert_eq!(rational_from_f64(f64::NAN), None);
    }

    #[test]
    fn rendering() {
        let (r, a, b) = reg();
        let x = StateRef::new(a, 0);
        let y = StateRef::new(b, 1);
        let s = ScalarExpr::tf_states(x, y)
            .mul(&ScalarExpr::tf_states(y, x))
            .sub(&ScalarExpr::constant(coeff(rational(3, 4), rational(0, 1))));
        assert_eq!(s.display(&r).to_string(), "-3/4 + <A:a1|B:b2>*<B:b2|A:a1>");
        let c = ScalarExpr::constant(coeff(rational(1, 2), rational(-2, 1)));
        assert_eq!(c.display(&r).to_string(), "(1/2-2i)");
        assert_eq!(ScalarExpr::zero().display(&r).to_string(), "0");
        assert_eq!(ScalarExpr::one().display(&r).to_string(), "1");
    }
}
