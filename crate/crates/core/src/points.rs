//! Evaluation records, constrained dominance and the evaluation cache.
//!
//! Every blackbox call produces an [`EvaluatedPoint`] that is stored once in the
//! [`Cache`]. Points are referred to everywhere else by their [`PointId`], which
//! doubles as the birth index: a smaller id means an older point.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalStatus {
    Ok,
    HiddenFailure,
    OutsideDomain,
}

/// Squared-violation measure: `sum max(0, c_j)^2` for a point that could be
/// evaluated, `+inf` otherwise.
pub fn constraint_violation(constraints: &[f64], status: EvalStatus) -> f64 {
    if status != EvalStatus::Ok {
        return f64::INFINITY;
    }
    constraints
        .iter()
        .fold(0.0, |acc, &c| {
            let v = c.max(0.0);
            acc + v * v
        })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub objectives: Vec<f64>,
    pub constraints: Vec<f64>,
    pub violation: f64,
    pub status: EvalStatus,
}

impl EvaluationResult {
    /// Result of a successful blackbox call. NaN outputs are treated as a hidden
    /// failure.
    pub fn new(objectives: Vec<f64>, constraints: Vec<f64>) -> Self {
        if objectives.iter().chain(&constraints).any(|v| v.is_nan()) {
            return Self::failed(objectives.len(), constraints.len(), EvalStatus::HiddenFailure);
        }
        let violation = constraint_violation(&constraints, EvalStatus::Ok);
        Self {
            objectives,
            constraints,
            violation,
            status: EvalStatus::Ok,
        }
    }

    pub fn failed(m: usize, n_constraints: usize, status: EvalStatus) -> Self {
        debug_assert!(status != EvalStatus::Ok);
        Self {
            objectives: vec![f64::INFINITY; m],
            constraints: vec![f64::INFINITY; n_constraints],
            violation: f64::INFINITY,
            status,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.status == EvalStatus::Ok && self.violation == 0.0
    }

    /// Evaluated, finite in every output, but violating at least one constraint.
    pub fn is_finite_infeasible(&self) -> bool {
        self.status == EvalStatus::Ok
            && self.violation > 0.0
            && self.violation.is_finite()
            && self.is_finite()
    }

    pub fn is_finite(&self) -> bool {
        self.objectives.iter().chain(&self.constraints).all(|v| v.is_finite())
    }
}

/// Index of a point in the cache; also its birth order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PointId(pub usize);

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluatedPoint {
    pub x: Vec<f64>,
    pub result: EvaluationResult,
    pub birth: PointId,
}

impl EvaluatedPoint {
    pub fn f(&self) -> &[f64] {
        &self.result.objectives
    }

    pub fn h(&self) -> f64 {
        self.result.violation
    }

    pub fn is_feasible(&self) -> bool {
        self.result.is_feasible()
    }
}

/// Outcome of comparing two points (or two objective vectors).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dominance {
    ADominates,
    BDominates,
    Incomparable,
    /// One point is feasible and the other is not; such pairs are never compared.
    NotComparableMixed,
    Equal,
}

impl Dominance {
    pub fn mirrored(self) -> Self {
        match self {
            Dominance::ADominates => Dominance::BDominates,
            Dominance::BDominates => Dominance::ADominates,
            other => other,
        }
    }
}

fn compare_components<'a>(a: impl Iterator<Item = &'a f64>, b: impl Iterator<Item = &'a f64>) -> Dominance {
    let mut a_better = false;
    let mut b_better = false;
    for (x, y) in a.zip(b) {
        if x < y {
            a_better = true;
        } else if y < x {
            b_better = true;
        }
        if a_better && b_better {
            return Dominance::Incomparable;
        }
    }
    match (a_better, b_better) {
        (true, false) => Dominance::ADominates,
        (false, true) => Dominance::BDominates,
        (false, false) => Dominance::Equal,
        (true, true) => Dominance::Incomparable,
    }
}

/// Pareto comparison of two objective vectors: `a <= b` componentwise with one
/// strict inequality means `a` dominates.
pub fn pareto_compare(a: &[f64], b: &[f64]) -> Dominance {
    debug_assert_eq!(a.len(), b.len());
    compare_components(a.iter(), b.iter())
}

/// Constrained dominance: feasible pairs compare objectives, infeasible pairs
/// compare objectives and violation jointly, mixed pairs are not compared.
pub fn dominates(a: &EvaluatedPoint, b: &EvaluatedPoint) -> Dominance {
    match (a.is_feasible(), b.is_feasible()) {
        (true, true) => pareto_compare(a.f(), b.f()),
        (false, false) => {
            let (ha, hb) = (a.h(), b.h());
            compare_components(
                a.f().iter().chain(std::iter::once(&ha)),
                b.f().iter().chain(std::iter::once(&hb)),
            )
        }
        _ => Dominance::NotComparableMixed,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterMode {
    Feasible,
    Infeasible,
}

impl FilterMode {
    fn admits(self, p: &EvaluatedPoint) -> bool {
        match self {
            FilterMode::Feasible => p.is_feasible(),
            FilterMode::Infeasible => !p.is_feasible(),
        }
    }
}

/// Maximal mutually nondominated subset of the points admitted by `mode`.
///
/// Points with identical outputs collapse onto the oldest one. Input order is
/// preserved in the output.
pub fn filter_nondominated<'a>(points: &[&'a EvaluatedPoint], mode: FilterMode) -> Vec<&'a EvaluatedPoint> {
    let mut keep: Vec<(usize, &EvaluatedPoint)> = Vec::new();
    for (i, &p) in points.iter().enumerate().filter(|(_, p)| mode.admits(p)) {
        let mut rejected = false;
        keep.retain(|&(_, q)| {
            if rejected {
                return true;
            }
            match dominates(q, p) {
                Dominance::ADominates => {
                    rejected = true;
                    true
                }
                Dominance::Equal if q.birth < p.birth => {
                    rejected = true;
                    true
                }
                Dominance::Equal | Dominance::BDominates => false,
                Dominance::Incomparable | Dominance::NotComparableMixed => true,
            }
        });
        if !rejected {
            keep.push((i, p));
        }
    }
    keep.sort_by_key(|&(i, _)| i);
    keep.into_iter().map(|(_, p)| p).collect()
}

/// Nondominated subset of plain objective vectors, duplicates removed (first
/// occurrence kept).
pub fn nondominated_vectors(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut keep: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        if v.iter().any(|x| !x.is_finite()) {
            continue;
        }
        let mut dominated = false;
        keep.retain(|k| match pareto_compare(k, v) {
            Dominance::ADominates | Dominance::Equal => {
                dominated = true;
                true
            }
            Dominance::BDominates => false,
            _ => true,
        });
        if !dominated {
            keep.push(v.clone());
        }
    }
    keep
}

/// Result of a cache insertion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Insertion {
    New(PointId),
    AlreadyPresent(PointId),
}

impl Insertion {
    pub fn id(self) -> PointId {
        match self {
            Insertion::New(id) | Insertion::AlreadyPresent(id) => id,
        }
    }
}

/// Every point evaluated during one run, keyed by the exact bit pattern of its
/// coordinates.
#[derive(Clone, Debug, Default)]
pub struct Cache {
    points: Vec<EvaluatedPoint>,
    index: HashMap<Vec<u64>, PointId>,
}

fn key(x: &[f64]) -> Vec<u64> {
    // +0.0 and -0.0 are the same mesh point.
    x.iter().map(|&v| if v == 0.0 { 0 } else { v.to_bits() }).collect()
}

impl Cache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn lookup(&self, x: &[f64]) -> Option<&EvaluatedPoint> {
        self.index.get(&key(x)).map(|&id| &self.points[id.0])
    }

    pub fn id_of(&self, x: &[f64]) -> Option<PointId> {
        self.index.get(&key(x)).copied()
    }

    pub fn insert(&mut self, x: Vec<f64>, result: EvaluationResult) -> Insertion {
        let k = key(&x);
        if let Some(&id) = self.index.get(&k) {
            return Insertion::AlreadyPresent(id);
        }
        let id = PointId(self.points.len());
        self.points.push(EvaluatedPoint { x, result, birth: id });
        self.index.insert(k, id);
        Insertion::New(id)
    }

    pub fn get(&self, id: PointId) -> &EvaluatedPoint {
        &self.points[id.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = &EvaluatedPoint> {
        self.points.iter()
    }

    pub fn points(&self) -> &[EvaluatedPoint] {
        &self.points
    }
}
