//! Finite-dimensional realization of the algebra.
//!
//! Each atomic observable is assigned an orthonormal basis of `C^N`, stored as
//! the columns of a unitary matrix (column `k` is the state of label `k`).
//! Transformation functions become inner products, words become rank-one
//! operators, and the whole algebra maps homomorphically into `N x N` complex
//! matrices. This is the numeric oracle for the symbolic layer.
//!
//! Inner products are conjugate-linear in the first slot:
//! `<x|y> = sum_k conj(x_k) y_k`.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{AlgebraExpr, SymbolWord};
use crate::functional::GaugeAssignment;
use crate::raw::RawExpr;
use crate::registry::{ObservableId, Registry, RegistryBuilder, RegistryError, StateRef};
use crate::scalar::{coeff_to_c64, rational_from_f64, Ket, ScalarExpr, Tf};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_ORACLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RealizationError {
    #[error("cannot parse basis file: {0}")]
    Parse(String),
    #[error("observable `{observable}`: expected dimension {expected}, found {found}")]
    DimensionMismatch {
        observable: String,
        expected: usize,
        found: usize,
    },
    #[error("basis of `{observable}` is not unitary (residual {residual:e})")]
    NotUnitary { observable: String, residual: f64 },
    #[error("observable `{0}` has no basis in this realization")]
    UnknownObservable(String),
    #[error("joint observable `{0}` cannot be realized")]
    JointNotRealizable(String),
    #[error("observable `{0}` has no eigenvalues")]
    MissingEigenvalues(String),
    #[error("observable `{observable}`: basis file labels {file:?} differ from declared {declared:?}")]
    LabelMismatch {
        observable: String,
        file: Vec<String>,
        declared: Vec<String>,
    },
    #[error("invalid eigenvalue for `{0}`")]
    InvalidValue(String),
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

type Result<T> = std::result::Result<T, RealizationError>;

// ---------------------------------------------------------------------------
// Basis file.

/// One observable entry of the JSON basis file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisEntry {
    pub labels: Vec<String>,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    /// Row-major `N x N` matrix of `[re, im]` pairs; column `k` belongs to label `k`.
    pub matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisFile {
    pub dimension: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    pub observables: BTreeMap<String, BasisEntry>,
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

impl BasisFile {
    pub fn parse(content: &str) -> Result<BasisFile> {
        serde_json::from_str(content).map_err(|e| RealizationError::Parse(e.to_string()))
    }

    /// Registers the file's observables that the builder does not know yet and
    /// checks that already-declared ones agree on their labels.
    pub fn declare_into(&self, builder: &mut RegistryBuilder) -> Result<()> {
        for (name, entry) in &self.observables {
            match builder.lookup(name) {
                Some(id) => {
                    let def = builder.get(id).expect("looked-up id is present");
                    if def.labels != entry.labels {
                        return Err(RealizationError::LabelMismatch {
                            observable: name.clone(),
                            file: entry.labels.clone(),
                            declared: def.labels.clone(),
                        });
                    }
                }
                None => {
                    let values = entry
                        .values
                        .as_ref()
                        .map(|vs| {
                            vs.iter()
                                .map(|&v| rational_from_f64(v))
                                .collect::<Option<Vec<_>>>()
                                .ok_or_else(|| RealizationError::InvalidValue(name.clone()))
                        })
                        .transpose()?;
                    builder.define_observable(name, entry.labels.clone(), values)?;
                }
            }
        }
        Ok(())
    }

    fn matrix(&self, name: &str, entry: &BasisEntry) -> Result<ComplexMatrix> {
        let n = self.dimension;
        let mismatch = |found| RealizationError::DimensionMismatch {
            observable: name.to_string(),
            expected: n,
            found,
        };
        if entry.labels.len() != n {
            return Err(mismatch(entry.labels.len()));
        }
        if entry.matrix.len() != n {
            return Err(mismatch(entry.matrix.len()));
        }
        if let Some(row) = entry.matrix.iter().find(|r| r.len() != n) {
            return Err(mismatch(row.len()));
        }
        Ok(ComplexMatrix::from_fn(n, n, |i, j| {
            let [re, im] = entry.matrix[i][j];
            Complex64::new(re, im)
        }))
    }
}

// ---------------------------------------------------------------------------
// Realization.

#[derive(Debug, Clone)]
pub struct Realization {
    registry: Arc<Registry>,
    dimension: usize,
    tolerance: f64,
    bases: BTreeMap<ObservableId, ComplexMatrix>,
}

/// State vector components in one observable's basis: `psi(b_k) = <b_k|psi>`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    pub basis: ObservableId,
    pub components: Vec<Complex64>,
}

impl WaveFunction {
    pub fn norm_sqr(&self) -> f64 {
        self.components.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Outcome of an oracle comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckReport {
    /// Max-entry deviation; `None` when the check was skipped.
    pub deviation: Option<f64>,
    pub tolerance: f64,
    pub skipped: bool,
}

impl CheckReport {
    fn measured(deviation: f64, tolerance: f64) -> Self {
        CheckReport {
            deviation: Some(deviation),
            tolerance,
            skipped: false,
        }
    }

    pub fn skipped(tolerance: f64) -> Self {
        CheckReport {
            deviation: None,
            tolerance,
            skipped: true,
        }
    }

    /// Skipped checks count as passing.
    pub fn passed(&self) -> bool {
        match self.deviation {
            Some(d) => d <= self.tolerance,
            None => true,
        }
    }
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

pub fn max_deviation(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    max_abs(&(a - b))
}

/// Max-entry norm of `U^† U - I`.
pub fn unitarity_residual(u: &ComplexMatrix) -> f64 {
    let n = u.ncols();
    max_deviation(&(u.adjoint() * u), &ComplexMatrix::identity(n, n))
}

/// Unitary factor of a QR decomposition of a complex Gaussian matrix, with
/// the phases of `R`'s diagonal moved into `Q` so the result is Haar
/// distributed.
pub fn haar_unitary(n: usize, rng: &mut impl rand::Rng) -> ComplexMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let g = ComplexMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re * scale, im * scale)
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / norm } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Parses a basis file against a frozen registry.
pub fn load_realization(content: &str, registry: Arc<Registry>) -> Result<Realization> {
    let file = BasisFile::parse(content)?;
    Realization::from_basis_file(&file, registry)
}

/// Seeded Haar-random bases for the given observables.
pub fn random_realization(
    registry: Arc<Registry>,
    dimension: usize,
    observables: &[ObservableId],
    seed: u64,
) -> Result<Realization> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bases = BTreeMap::new();
    for &id in observables {
        let def = registry.observable(id)?;
        if def.is_joint() {
            return Err(RealizationError::JointNotRealizable(def.name.clone()));
        }
        if def.len() != dimension {
            return Err(RealizationError::DimensionMismatch {
                observable: def.name.clone(),
                expected: dimension,
                found: def.len(),
            });
        }
        bases.insert(id, haar_unitary(dimension, &mut rng));
    }
    Ok(Realization {
        registry,
        dimension,
        tolerance: DEFAULT_TOLERANCE,
        bases,
    })
}

impl Realization {
    /// Validates and assembles a realization from explicit basis matrices.
    pub fn new(
        registry: Arc<Registry>,
        dimension: usize,
        tolerance: f64,
        bases: BTreeMap<ObservableId, ComplexMatrix>,
    ) -> Result<Realization> {
        for (&id, u) in &bases {
            let def = registry.observable(id)?;
            if def.is_joint() {
                return Err(RealizationError::JointNotRealizable(def.name.clone()));
            }
            for found in [def.len(), u.nrows(), u.ncols()] {
                if found != dimension {
                    return Err(RealizationError::DimensionMismatch {
                        observable: def.name.clone(),
                        expected: dimension,
                        found,
                    });
                }
            }
            let residual = unitarity_residual(u);
            if residual.is_nan() || residual > tolerance {
                return Err(RealizationError::NotUnitary {
                    observable: def.name.clone(),
                    residual,
                });
            }
        }
        Ok(Realization {
            registry,
            dimension,
            tolerance,
            bases,
        })
    }

    pub fn from_basis_file(file: &BasisFile, registry: Arc<Registry>) -> Result<Realization> {
        let mut bases = BTreeMap::new();
        for (name, entry) in &file.observables {
            let id = registry
                .lookup(name)
                .ok_or_else(|| RealizationError::UnknownObservable(name.clone()))?;
            let def = registry.observable(id)?;
            if def.labels != entry.labels {
                return Err(RealizationError::LabelMismatch {
                    observable: name.clone(),
                    file: entry.labels.clone(),
                    declared: def.labels.clone(),
                });
            }
            bases.insert(id, file.matrix(name, entry)?);
        }
        Realization::new(registry, file.dimension, file.tolerance, bases)
    }

    /// Inverse of [`Realization::from_basis_file`].
    pub fn to_basis_file(&self) -> BasisFile {
        let observables = self
            .bases
            .iter()
            .map(|(&id, u)| {
                let def = self.registry.observable(id).expect("mapped ids are registered");
                let matrix = (0..self.dimension)
                    .map(|i| (0..self.dimension).map(|j| [u[(i, j)].re, u[(i, j)].im]).collect())
                    .collect();
                (
                    def.name.clone(),
                    BasisEntry {
                        labels: def.labels.clone(),
                        values: def.values_f64(),
                        matrix,
                    },
                )
            })
            .collect();
        BasisFile {
            dimension: self.dimension,
            tolerance: self.tolerance,
            observables,
        }
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.registry
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn observables(&self) -> impl Iterator<Item = ObservableId> + '_ {
        self.bases.keys().copied()
    }

    pub fn is_mapped(&self, id: ObservableId) -> bool {
        self.bases.contains_key(&id)
    }

    pub fn basis(&self, id: ObservableId) -> Result<&ComplexMatrix> {
        self.bases.get(&id).ok_or_else(|| self.unknown(id))
    }

    fn unknown(&self, id: ObservableId) -> RealizationError {
        match self.registry.observable(id) {
            Ok(def) if def.is_joint() => RealizationError::JointNotRealizable(def.name.clone()),
            Ok(def) => RealizationError::UnknownObservable(def.name.clone()),
            Err(_) => RealizationError::UnknownObservable(format!("#{}", id.index())),
        }
    }

    pub fn column(&self, s: StateRef) -> Result<ComplexVector> {
        let u = self.basis(s.observable)?;
        if s.index >= self.dimension {
            return Err(self.registry.check(s).unwrap_err().into());
        }
        Ok(u.column(s.index).into_owned())
    }

    /// Vector of a possibly conjugated ket.
    pub fn ket_vector(&self, k: Ket) -> Result<ComplexVector> {
        let v = self.column(k.state)?;
        Ok(if k.conj { v.conjugate() } else { v })
    }

    /// `<x|y>`, conjugate-linear in `x`.
    pub fn eval_tf(&self, x: StateRef, y: StateRef) -> Result<Complex64> {
        self.eval_pair(Ket::plain(x), Ket::plain(y))
    }

    pub fn eval_pair(&self, bra: Ket, ket: Ket) -> Result<Complex64> {
        Ok(self.ket_vector(bra)?.dotc(&self.ket_vector(ket)?))
    }

    /// Transition probability `|<a|b>|^2`.
    pub fn probability(&self, a: StateRef, b: StateRef) -> Result<f64> {
        Ok(self.eval_tf(a, b)?.norm_sqr())
    }

    pub fn eval_scalar(&self, s: &ScalarExpr, gauge: Option<&GaugeAssignment>) -> Result<Complex64> {
        let mut failure = None;
        let value = s.eval(
            &mut |t: &Tf| match self.eval_pair(t.bra(), t.ket()) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    Complex64::new(f64::NAN, f64::NAN)
                }
            },
            &|st| gauge.map_or(0.0, |g| g.angle(st)),
        );
        match failure {
            Some(e) => Err(e),
            None => Ok(value),
        }
    }

    fn identity(&self) -> ComplexMatrix {
        ComplexMatrix::identity(self.dimension, self.dimension)
    }

    fn outer(&self, out: Ket, inp: Ket) -> Result<ComplexMatrix> {
        Ok(self.ket_vector(out)? * self.ket_vector(inp)?.adjoint())
    }

    pub fn word_matrix(&self, w: &SymbolWord) -> Result<ComplexMatrix> {
        match *w {
            SymbolWord::Identity => Ok(self.identity()),
            SymbolWord::M { out, inp } => self.outer(out, inp),
        }
    }

    /// Matrix of a normal-form expression.
    pub fn matrix_of(&self, x: &AlgebraExpr, gauge: Option<&GaugeAssignment>) -> Result<ComplexMatrix> {
        let mut total = ComplexMatrix::zeros(self.dimension, self.dimension);
        for (w, s) in x.terms() {
            total += self.word_matrix(w)? * self.eval_scalar(s, gauge)?;
        }
        Ok(total)
    }

    /// Evaluates an unreduced tree with plain matrix arithmetic, never
    /// touching the symbolic rules.
    pub fn direct_matrix(&self, raw: &RawExpr) -> Result<ComplexMatrix> {
        Ok(match raw {
            RawExpr::Identity => self.identity(),
            RawExpr::Symbol { out, inp } => self.outer(*out, *inp)?,
            RawExpr::Tf { bra, ket } => self.identity() * self.eval_pair(*bra, *ket)?,
            RawExpr::Number(c) => self.identity() * coeff_to_c64(c),
            RawExpr::Sum(a, b) => self.direct_matrix(a)? + self.direct_matrix(b)?,
            RawExpr::Difference(a, b) => self.direct_matrix(a)? - self.direct_matrix(b)?,
            RawExpr::Neg(a) => -self.direct_matrix(a)?,
            RawExpr::Product(a, b) => self.direct_matrix(a)? * self.direct_matrix(b)?,
            RawExpr::Adjoint(a) => self.direct_matrix(a)?.adjoint(),
            RawExpr::Conjugate(a) => self.direct_matrix(a)?.conjugate(),
            RawExpr::Transpose(a) => self.direct_matrix(a)?.transpose(),
        })
    }

    /// Compares the direct matrix of `raw` with the matrix of its symbolic
    /// normal form. Trees touching joint observables are skipped.
    pub fn verify_normal_form(&self, raw: &RawExpr, tol: f64) -> Result<CheckReport> {
        let states = raw.states();
        for s in &states {
            if self.registry.observable(s.observable)?.is_joint() {
                return Ok(CheckReport::skipped(tol));
            }
        }
        let direct = self.direct_matrix(raw)?;
        let symbolic = self.matrix_of(&raw.normalize(), None)?;
        Ok(CheckReport::measured(max_deviation(&direct, &symbolic), tol))
    }

    fn values(&self, id: ObservableId) -> Result<Vec<f64>> {
        let def = self.registry.observable(id)?;
        def.values_f64()
            .ok_or_else(|| RealizationError::MissingEigenvalues(def.name.clone()))
    }

    /// Spectral operator `sum_k f(value_k) |a_k><a_k|`.
    fn spectral_sum(&self, id: ObservableId, f: impl Fn(f64) -> Complex64) -> Result<ComplexMatrix> {
        let values = self.values(id)?;
        let u = self.basis(id)?;
        let mut total = ComplexMatrix::zeros(self.dimension, self.dimension);
        for (k, &v) in values.iter().enumerate() {
            let col = u.column(k);
            total += (col * col.adjoint()) * f(v);
        }
        Ok(total)
    }

    /// `A = sum_a a |a><a|`.
    pub fn operator_from_spectrum(&self, id: ObservableId) -> Result<ComplexMatrix> {
        self.spectral_sum(id, |v| Complex64::new(v, 0.0))
    }

    /// `f(A) = sum_a f(a) |a><a|` for the polynomial `f(t) = sum_j c_j t^j`.
    pub fn spectral_function(&self, id: ObservableId, poly_coeffs: &[Complex64]) -> Result<ComplexMatrix> {
        self.spectral_sum(id, |v| horner_scalar(poly_coeffs, Complex64::new(v, 0.0)))
    }

    /// Max-entry magnitude of `prod_k (A - a_k I)`.
    pub fn char_poly_check(&self, id: ObservableId, tol: f64) -> Result<CheckReport> {
        let a = self.operator_from_spectrum(id)?;
        let eye = self.identity();
        let product = self
            .values(id)?
            .iter()
            .fold(eye.clone(), |acc, &v| acc * (&a - &eye * Complex64::new(v, 0.0)));
        Ok(CheckReport::measured(max_abs(&product), tol))
    }

    /// Max over labels of `|A a_k - value_k a_k|`.
    pub fn eigen_residual(&self, id: ObservableId) -> Result<f64> {
        let a = self.operator_from_spectrum(id)?;
        let u = self.basis(id)?;
        let values = self.values(id)?;
        Ok(values
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let col = u.column(k);
                let lhs = &a * col;
                (lhs - col * Complex64::new(v, 0.0)).iter().map(|c| c.norm()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max))
    }

    /// `U_ab` with entries `<a_i|b_j>`.
    pub fn transformation_matrix(&self, to: ObservableId, from: ObservableId) -> Result<ComplexMatrix> {
        Ok(self.basis(to)?.adjoint() * self.basis(from)?)
    }

    pub fn basis_state(&self, s: StateRef) -> Result<WaveFunction> {
        self.basis(s.observable)?;
        self.registry.check(s)?;
        let mut components = vec![Complex64::new(0.0, 0.0); self.dimension];
        components[s.index] = Complex64::new(1.0, 0.0);
        Ok(WaveFunction {
            basis: s.observable,
            components,
        })
    }

    /// `psi(a) = sum_b <a|b> psi(b)`.
    pub fn change_basis(&self, psi: &WaveFunction, to: ObservableId) -> Result<WaveFunction> {
        if psi.components.len() != self.dimension {
            return Err(RealizationError::DimensionMismatch {
                observable: self.registry.observable(psi.basis)?.name.clone(),
                expected: self.dimension,
                found: psi.components.len(),
            });
        }
        let u = self.transformation_matrix(to, psi.basis)?;
        let v = &u * ComplexVector::from_column_slice(&psi.components);
        Ok(WaveFunction {
            basis: to,
            components: v.iter().copied().collect(),
        })
    }

    /// Born rule `p(a|psi) = |psi(a)|^2`.
    pub fn born_probability(&self, a: StateRef, psi: &WaveFunction) -> Result<f64> {
        self.registry.check(a)?;
        let in_basis = if psi.basis == a.observable {
            psi.clone()
        } else {
            self.change_basis(psi, a.observable)?
        };
        Ok(in_basis.components[a.index].norm_sqr())
    }

    fn check_square(&self, x: &ComplexMatrix) -> Result<()> {
        for found in [x.nrows(), x.ncols()] {
            if found != self.dimension {
                return Err(RealizationError::DimensionMismatch {
                    observable: "<matrix>".into(),
                    expected: self.dimension,
                    found,
                });
            }
        }
        Ok(())
    }

    /// `<a|X|b>`.
    pub fn matrix_element(&self, a: StateRef, x: &ComplexMatrix, b: StateRef) -> Result<Complex64> {
        self.check_square(x)?;
        let va = self.column(a)?;
        let vb = self.column(b)?;
        Ok(va.dotc(&(x * vb)))
    }

    /// `Tr{M(b <- a) X}`, the trace route to `<a|X|b>`.
    pub fn matrix_element_via_trace(&self, a: StateRef, x: &ComplexMatrix, b: StateRef) -> Result<Complex64> {
        self.check_square(x)?;
        let m = self.matrix_of(&AlgebraExpr::word(SymbolWord::general(b, a)), None)?;
        Ok((m * x).trace())
    }

    /// Same realization with every basis column multiplied by `e^{i phi(label)}`.
    pub fn regauged(&self, g: &GaugeAssignment) -> Realization {
        let mut bases = self.bases.clone();
        for (&id, u) in bases.iter_mut() {
            for k in 0..self.dimension {
                let phase = Complex64::from_polar(1.0, g.angle(StateRef::new(id, k)));
                for i in 0..self.dimension {
                    u[(i, k)] *= phase;
                }
            }
        }
        Realization {
            bases,
            ..self.clone()
        }
    }
}

pub fn horner_scalar(coeffs: &[Complex64], t: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * t + c)
}

/// Horner evaluation of `sum_j c_j A^j` with matrix products.
pub fn horner_matrix(a: &ComplexMatrix, coeffs: &[Complex64]) -> ComplexMatrix {
    let n = a.nrows();
    let eye = ComplexMatrix::identity(n, n);
    coeffs
        .iter()
        .rev()
        .fold(ComplexMatrix::zeros(n, n), |acc, &c| acc * a + &eye * c)
}
