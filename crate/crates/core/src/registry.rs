//! Observables, their discrete spectra, and compatible (joint) families.
//!
//! A [`RegistryBuilder`] collects declarations and is frozen into an
//! immutable [`Registry`]. Every other module reads observables through a
//! frozen registry, so all downstream operations are pure functions.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use thiserror::Error;

/// Opaque observable identifier; assigned in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObservableId(pub(crate) u32);

impl ObservableId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A state of an observable: one position into its label list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateRef {
    pub observable: ObservableId,
    pub index: usize,
}

impl StateRef {
    pub fn new(observable: ObservableId, index: usize) -> Self {
        StateRef { observable, index }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObservableKind {
    Atomic,
    /// Components in declaration order; labels are their Cartesian product.
    Joint(Vec<ObservableId>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableDef {
    pub id: ObservableId,
    pub name: String,
    pub labels: Vec<String>,
    /// Exact eigenvalues, one per label. Values may repeat.
    pub values: Option<Vec<BigRational>>,
    pub kind: ObservableKind,
}

impl ObservableDef {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn is_joint(&self) -> bool {
        matches!(self.kind, ObservableKind::Joint(_))
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn values_f64(&self) -> Option<Vec<f64>> {
        self.values
            .as_ref()
            .map(|vs| vs.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("observable `{0}` is already declared")]
    DuplicateName(String),
    #[error("observable `{observable}` declares label `{label}` twice")]
    DuplicateLabel { observable: String, label: String },
    #[error("observable `{observable}` has {labels} labels but {values} values")]
    ValueCountMismatch {
        observable: String,
        labels: usize,
        values: usize,
    },
    #[error("observable `{0}` has an empty spectrum")]
    EmptySpectrum(String),
    #[error("joint observable `{0}` needs at least two components")]
    TooFewComponents(String),
    #[error("unknown component observable in joint `{0}`")]
    UnknownComponent(String),
    #[error("joint observable `{joint}` lists component `{component}` twice")]
    DuplicateComponent { joint: String, component: String },
    #[error("joint observable `{joint}`: component `{component}` is itself joint")]
    NonAtomicComponent { joint: String, component: String },
    #[error("unknown observable")]
    UnknownObservable,
    #[error("state index {index} out of range for observable `{observable}` ({len} labels)")]
    IndexOutOfRange {
        observable: String,
        index: usize,
        len: usize,
    },
}

/// Separator between component labels inside a joint label.
pub const JOINT_SEPARATOR: char = '.';

#[derive(Debug, Default, Clone)]
pub struct RegistryBuilder {
    observables: Vec<ObservableDef>,
    by_name: HashMap<String, ObservableId>,
}

impl RegistryBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn define_observable(
        &mut self,
        name: &str,
        labels: Vec<String>,
        values: Option<Vec<BigRational>>,
    ) -> Result<&ObservableDef, RegistryError> {
        if self.by_name.contains_key(name) {
            return Err(RegistryError::DuplicateName(name.to_string()));
        }
        if labels.is_empty() {
            return Err(RegistryError::EmptySpectrum(name.to_string()));
        }
        let mut seen = BTreeSet::new();
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(RegistryError::DuplicateLabel {
                    observable: name.to_string(),
                    label: label.clone(),
                });
            }
        }
        if let Some(vs) = &values {
            if vs.len() != labels.len() {
                return Err(RegistryError::ValueCountMismatch {
                    observable: name.to_string(),
                    labels: labels.len(),
                    values: vs.len(),
                });
            }
        }
        Ok(self.push(name, labels, values, ObservableKind::Atomic))
    }

    pub fn joint_observable(
        &mut self,
        name: &str,
        components: &[ObservableId],
    ) -> Result<&ObservableDef, RegistryError> {
        if self.by_name.contains_key(name) {
            return Err(RegistryError::DuplicateName(name.to_string()));
        }
        if components.len() < 2 {
            return Err(RegistryError::TooFewComponents(name.to_string()));
        }
        let mut seen = BTreeSet::new();
        for &c in components {
            let def = self
                .observables
                .get(c.index())
                .ok_or_else(|| RegistryError::UnknownComponent(name.to_string()))?;
            if def.is_joint() {
                return Err(RegistryError::NonAtomicComponent {
                    joint: name.to_string(),
                    component: def.name.clone(),
                });
            }
            if !seen.insert(c) {
                return Err(RegistryError::DuplicateComponent {
                    joint: name.to_string(),
                    component: def.name.clone(),
                });
            }
        }

        // Lexicographic product: the last component varies fastest.
        let mut labels = vec![String::new()];
        for (k, &c) in components.iter().enumerate() {
            let comp = &self.observables[c.index()].labels;
            labels = labels
                .iter()
                .flat_map(|prefix| {
                    comp.iter().map(move |l| {
                        if k == 0 {
                            l.clone()
                        } else {
                            format!("{prefix}{JOINT_SEPARATOR}{l}")
                        }
                    })
                })
                .collect();
        }
        Ok(self.push(name, labels, None, ObservableKind::Joint(components.to_vec())))
    }

    pub fn lookup(&self, name: &str) -> Option<ObservableId> {
        self.by_name.get(name).copied()
    }

    pub fn get(&self, id: ObservableId) -> Option<&ObservableDef> {
        self.observables.get(id.index())
    }

    pub fn freeze(self) -> Registry {
        Registry {
            observables: self.observables,
            by_name: self.by_name,
        }
    }

    fn push(
        &mut self,
        name: &str,
        labels: Vec<String>,
        values: Option<Vec<BigRational>>,
        kind: ObservableKind,
    ) -> &ObservableDef {
        let id = ObservableId(self.observables.len() as u32);
        self.by_name.insert(name.to_string(), id);
        self.observables.push(ObservableDef {
            id,
            name: name.to_string(),
            labels,
            values,
            kind,
        });
        &self.observables[id.index()]
    }
}

/// Frozen catalog of observables. Immutable; share it behind an `Arc`.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    observables: Vec<ObservableDef>,
    by_name: HashMap<String, ObservableId>,
}

impl Registry {
    pub fn observable(&self, id: ObservableId) -> Result<&ObservableDef, RegistryError> {
        self.observables
            .get(id.index())
            .ok_or(RegistryError::UnknownObservable)
    }

    pub fn lookup(&self, name: &str) -> Option<ObservableId> {
        self.by_name.get(name).copied()
    }

    pub fn observables(&self) -> impl Iterator<Item = &ObservableDef> {
        self.observables.iter()
    }

    pub fn len(&self) -> usize {
        self.observables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }

    pub fn spectrum(
        &self,
        id: ObservableId,
    ) -> Result<Vec<(String, Option<BigRational>)>, RegistryError> {
        let def = self.observable(id)?;
        Ok(def
            .labels
            .iter()
            .enumerate()
            .map(|(k, l)| (l.clone(), def.values.as_ref().map(|v| v[k].clone())))
            .collect())
    }

    /// Validated state reference.
    pub fn state(&self, id: ObservableId, index: usize) -> Result<StateRef, RegistryError> {
        let def = self.observable(id)?;
        if index >= def.len() {
            return Err(RegistryError::IndexOutOfRange {
                observable: def.name.clone(),
                index,
                len: def.len(),
            });
        }
        Ok(StateRef::new(id, index))
    }

    pub fn state_by_name(&self, observable: &str, label: &str) -> Option<StateRef> {
        let id = self.lookup(observable)?;
        let index = self.observables[id.index()].label_index(label)?;
        Some(StateRef::new(id, index))
    }

    pub fn states(&self, id: ObservableId) -> Result<Vec<StateRef>, RegistryError> {
        let def = self.observable(id)?;
        Ok((0..def.len()).map(|k| StateRef::new(id, k)).collect())
    }

    pub fn check(&self, s: StateRef) -> Result<StateRef, RegistryError> {
        self.state(s.observable, s.index)
    }

    /// Per-component indices of a joint state; `None` for atomic observables.
    pub fn joint_components(&self, s: StateRef) -> Option<Vec<StateRef>> {
        let def = self.observables.get(s.observable.index())?;
        let ObservableKind::Joint(components) = &def.kind else {
            return None;
        };
        let mut rest = s.index;
        let mut out = vec![StateRef::new(components[0], 0); components.len()];
        for (slot, &c) in components.iter().enumerate().rev() {
            let n = self.observables[c.index()].len();
            out[slot] = StateRef::new(c, rest % n);
            rest /= n;
        }
        Some(out)
    }

    pub fn state_name(&self, s: StateRef) -> StateName<'_> {
        StateName {
            registry: self,
            state: s,
        }
    }
}

/// Renders `A:a` for a state.
pub struct StateName<'r> {
    registry: &'r Registry,
    state: StateRef,
}

impl fmt::Display for StateName<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.registry.observables.get(self.state.observable.index()) {
            Some(def) => match def.labels.get(self.state.index) {
                Some(label) => write!(f, "{}:{}", def.name, label),
                None => write!(f, "{}:#{}", def.name, self.state.index),
            },
            None => write!(f, "?{}:#{}", self.state.observable.0, self.state.index),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(ls: &[&str]) -> Vec<String> {
        ls.iter().map(|s| s.to_string()).collect()
    }

    fn int(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn define_echoes_inputs() {
        let mut b = RegistryBuilder::new();
        let z = b
            .define_observable("Z", labels(&["up", "down"]), Some(vec![int(1), int(-1)]))
            .unwrap()
            .id;
        let a = b.define_observable("A", labels(&["a1"]), None).unwrap().id;
        let r = b.freeze();
        assert_eq!(
            r.spectrum(z).unwrap(),
            vec![("up".into(), Some(int(1))), ("down".into(), Some(int(-1)))]
        );
        assert_eq!(r.observable(a).unwrap().len(), 1);
        assert_eq!(r.observable(a).unwrap().values, None);
    }

    #[test]
    fn declaration_errors() {
        let mut b = RegistryBuilder::new();
        assert!(matches!(
            b.define_observable("B", labels(&["x", "x"]), None),
            Err(RegistryError::DuplicateLabel { .. })
        ));
        assert!(matches!(
            b.define_observable("B", labels(&["x", "y"]), Some(vec![int(1)])),
            Err(RegistryError::ValueCountMismatch { labels: 2, values: 1, .. })
        ));
        assert!(matches!(
            b.define_observable("B", vec![], None),
            Err(RegistryError::EmptySpectrum(_))
        ));
        b.define_observable("B", labels(&["x"]), None).unwrap();
        assert!(matches!(
            b.define_observable("B", labels(&["y"]), None),
            Err(RegistryError::DuplicateName(_))
        ));
    }

    #[test]
    fn degenerate_values_allowed() {
        let mut b = RegistryBuilder::new();
        b.define_observable("D", labels(&["p", "q"]), Some(vec![int(2), int(2)]))
            .unwrap();
    }

    #[test]
    fn joint_labels_are_lexicographic_product() {
        let mut b = RegistryBuilder::new();
        let a = b.define_observable("A", labels(&["a1", "a2"]), None).unwrap().id;
        let bb = b
            .define_observable("B", labels(&["b1", "b2", "b3"]), None)
            .unwrap()
            .id;
        let ab = b.joint_observable("AB", &[a, bb]).unwrap().id;
        assert!(matches!(
            b.joint_observable("AA", &[a, a]),
            Err(RegistryError::DuplicateComponent { .. })
        ));
        assert!(matches!(
            b.joint_observable("X", &[a, ObservableId(99)]),
            Err(RegistryError::UnknownComponent(_))
        ));
        assert!(matches!(
            b.joint_observable("Y", &[a]),
            Err(RegistryError::TooFewComponents(_))
        ));
        let r = b.freeze();
        let spec = r.spectrum(ab).unwrap();
        let names: Vec<_> = spec.iter().map(|(l, _)| l.as_str()).collect();
        assert_eq!(
            names,
            ["a1.b1", "a1.b2", "a1.b3", "a2.b1", "a2.b2", "a2.b3"]
        );
        let comps = r.joint_components(StateRef::new(ab, 4)).unwrap();
        assert_eq!(comps, vec![StateRef::new(a, 1), StateRef::new(bb, 1)]);
    }

    #[test]
    fn unknown_and_out_of_range() {
        let mut b = RegistryBuilder::new();
        let z = b.define_observable("Z", labels(&["up", "down"]), None).unwrap().id;
        let r = b.freeze();
        assert_eq!(r.spectrum(ObservableId(7)), Err(RegistryError::UnknownObservable));
        assert!(matches!(
            r.state(z, 2),
            Err(RegistryError::IndexOutOfRange { index: 2, len: 2, .. })
        ));
        assert_eq!(r.state_by_name("Z", "down"), Some(StateRef::new(z, 1)));
        assert_eq!(r.state_name(StateRef::new(z, 1)).to_string(), "Z:down");
    }

    #[test]
    fn frozen_reads_are_stable() {
        let mut b = RegistryBuilder::new();
        let z = b.define_observable("Z", labels(&["up", "down"]), None).unwrap().id;
        let r = b.freeze();
        let first = r.spectrum(z).unwrap();
        for _ in 0..5 {
            assert_eq!(r.spectrum(z).unwrap(), first);
        }
    }
}
