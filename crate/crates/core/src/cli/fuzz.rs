//! Randomized oracle harness: seeded expression trees over seeded Haar
//! realizations, each compared against its symbolic normal form.

use std::sync::Arc;

use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::raw::RawExpr;
use crate::realization::random_realization;
use crate::registry::{RegistryBuilder, StateRef};
use crate::scalar::{rational, Ket};

pub const MAX_DEPTH: usize = 6;
const MAX_LEAVES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzConfig {
    pub seed: u64,
    pub dims: (usize, usize),
    pub cases: usize,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    pub index: usize,
    pub dimension: usize,
    pub observables: usize,
    pub depth: usize,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzSummary {
    pub cases: usize,
    pub dims: (usize, usize),
    pub seed: u64,
    pub tolerance: f64,
    pub max_deviation: f64,
    pub worst_case: usize,
    pub max_depth: usize,
    pub failures: Vec<usize>,
}

impl FuzzSummary {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Independent generator for case `index`.
pub fn case_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn random_ket(rng: &mut impl Rng, states: &[StateRef]) -> Ket {
    let k = Ket::plain(states[rng.random_range(0..states.len())]);
    if rng.random_bool(0.15) {
        k.conjugated()
    } else {
        k
    }
}

fn random_leaf(rng: &mut impl Rng, states: &[StateRef]) -> RawExpr {
    match rng.random_range(0..20) {
        0..=9 => {
            let out = random_ket(rng, states);
            let inp = if rng.random_bool(0.3) { out } else { random_ket(rng, states) };
            RawExpr::Symbol { out, inp }
        }
        10..=12 => RawExpr::Tf {
            bra: random_ket(rng, states),
            ket: random_ket(rng, states),
        },
        13..=16 => {
            let re = rational(rng.random_range(-3..=3), rng.random_range(1..=4));
            let im = if rng.random_bool(0.5) {
                rational(rng.random_range(-3..=3), rng.random_range(1..=4))
            } else {
                rational(0, 1)
            };
            RawExpr::Number(Complex::new(re, im))
        }
        _ => RawExpr::Identity,
    }
}

fn grow(rng: &mut impl Rng, states: &[StateRef], depth: usize, leaves: &mut usize) -> RawExpr {
    if depth <= 1 || *leaves <= 1 || rng.random_bool(0.25) {
        *leaves = leaves.saturating_sub(1);
        return random_leaf(rng, states);
    }
    let choice = rng.random_range(0..20);
    if choice < 13 {
        // keep one leaf in reserve for the right operand
        *leaves -= 1;
        let a = Box::new(grow(rng, states, depth - 1, leaves));
        *leaves += 1;
        let b = Box::new(grow(rng, states, depth - 1, leaves));
        match choice {
            0..=3 => RawExpr::Sum(a, b),
            4..=5 => RawExpr::Difference(a, b),
            _ => RawExpr::Product(a, b),
        }
    } else {
        let a = Box::new(grow(rng, states, depth - 1, leaves));
        match choice {
            13 => RawExpr::Neg(a),
            14..=15 => RawExpr::Adjoint(a),
            16..=17 => RawExpr::Conjugate(a),
            _ => RawExpr::Transpose(a),
        }
    }
}

/// Random tree of depth at most `max_depth` over the given states.
pub fn random_tree(rng: &mut impl Rng, states: &[StateRef], max_depth: usize) -> RawExpr {
    let mut leaves = MAX_LEAVES;
    grow(rng, states, max_depth, &mut leaves)
}

/// One case: 2 or 3 observables of `dimension` labels, a random realization
/// and a random tree.
pub fn run_case(seed: u64, index: usize, dims: (usize, usize), tolerance: f64) -> CaseReport {
    let mut rng = case_rng(seed, index);
    let dimension = rng.random_range(dims.0..=dims.1);
    let count = rng.random_range(2..=3);
    let mut b = RegistryBuilder::new();
    let labels: Vec<String> = (0..dimension).map(|k| k.to_string()).collect();
    let ids: Vec<_> = ["A", "B", "C"][..count]
        .iter()
        .map(|n| b.define_observable(n, labels.clone(), None).expect("fresh names").id)
        .collect();
    let registry = Arc::new(b.freeze());
    let states: Vec<StateRef> = ids
        .iter()
        .flat_map(|&id| (0..dimension).map(move |k| StateRef::new(id, k)))
        .collect();
    let realization =
        random_realization(registry, dimension, &ids, rng.random()).expect("dimensions agree");
    let tree = random_tree(&mut rng, &states, MAX_DEPTH);
    let report = realization
        .verify_normal_form(&tree, tolerance)
        .expect("all observables are mapped");
    CaseReport {
        index,
        dimension,
        observables: count,
        depth: tree.depth(),
        deviation: report.deviation.unwrap_or(0.0),
    }
}

/// Runs every case in parallel; the summary depends only on the config.
pub fn run_fuzz(cfg: &FuzzConfig) -> (FuzzSummary, Vec<CaseReport>) {
    let reports: Vec<CaseReport> = (0..cfg.cases)
        .into_par_iter()
        .map(|i| run_case(cfg.seed, i, cfg.dims, cfg.tolerance))
        .collect();
    let mut max_deviation = 0.0;
    let mut worst_case = 0;
    for r in &reports {
        if r.deviation > max_deviation || r.deviation.is_nan() {
            max_deviation = r.deviation;
            worst_case = r.index;
        }
    }
    let failures = reports
        .iter()
        .filter(|r| r.deviation.is_nan() || r.deviation > cfg.tolerance)
        .map(|r| r.index)
        .collect();
    let summary = FuzzSummary {
        cases: cfg.cases,
        dims: cfg.dims,
        seed: cfg.seed,
        tolerance: cfg.tolerance,
        max_deviation,
        worst_case,
        max_depth: reports.iter().map(|r| r.depth).max().unwrap_or(0),
        failures,
    };
    (summary, reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trees_respect_the_depth_bound() {
        let mut b = RegistryBuilder::new();
        let a = b.define_observable("A", vec!["0".into(), "1".into()], None).unwrap().id;
        let states = [StateRef::new(a, 0), StateRef::new(a, 1)];
        let mut rng = case_rng(3, 0);
        for _ in 0..500 {
            assert!(random_tree(&mut rng, &states, MAX_DEPTH).depth() <= MAX_DEPTH);
        }
    }

    #[test]
    fn cases_are_reproducible() {
        assert_eq!(run_case(11, 5, (2, 4), 1e-9), run_case(11, 5, (2, 4), 1e-9));
        let cfg = FuzzConfig {
            seed: 1,
            dims: (2, 3),
            cases: 40,
            tolerance: 1e-9,
        };
        let (s, _) = run_fuzz(&cfg);
        assert!(s.passed(), "{s:?}");
        assert_eq!(run_fuzz(&cfg).0, s);
    }
}
