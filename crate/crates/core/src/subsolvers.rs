//! Search backends: a poll-only MADS on quadratic models and the Nelder-Mead
//! subproblem procedure on true blackbox values.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::barrier::IterateEntry;
use crate::driver::{Evaluator, Probe};
use crate::mesh::{build_poll_set, generate_poll_directions, mesh_size_from_frame, project_to_mesh};
use crate::models::QuadraticModel;
use crate::points::{EvalStatus, EvaluatedPoint, PointId};

pub type Psi<'a> = dyn Fn(&EvaluatedPoint) -> f64 + 'a;

/// Minimization of a model objective under model constraints over a box.
#[derive(Clone, Debug)]
pub struct ModelSubproblem {
    pub objective: QuadraticModel,
    pub constraints: Vec<QuadraticModel>,
    /// Search box: the variable bounds intersected with the trust region.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub start: Vec<f64>,
    pub initial_frame: f64,
    /// Outer mesh every returned point is projected onto.
    pub mesh_anchor: Vec<f64>,
    pub mesh_size: f64,
    /// Variable bounds; projected points outside them are dropped.
    pub bounds_lower: Vec<f64>,
    pub bounds_upper: Vec<f64>,
}

impl ModelSubproblem {
    fn violation(&self, x: &[f64]) -> f64 {
        self.constraints.iter().map(|c| c.value(x).max(0.0).powi(2)).sum()
    }

    fn in_box(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.lower).zip(&self.upper).all(|((x, l), u)| x >= l && x <= u)
    }

    fn in_bounds(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.bounds_lower)
            .zip(&self.bounds_upper)
            .all(|((x, l), u)| x >= l && x <= u)
    }
}

#[derive(Clone, Debug)]
struct Incumbent {
    x: Vec<f64>,
    value: f64,
    h: f64,
}

/// Poll-only MADS on the model subproblem; model evaluations are free.
///
/// Returns the best feasible and the best infeasible model points, projected
/// onto the outer mesh. Falls back to the projected start.
pub fn mads_minimize<R: Rng + ?Sized>(sub: &ModelSubproblem, budget: usize, rng: &mut R) -> Vec<Vec<f64>> {
    assert!(budget >= 1);
    let n = sub.start.len();
    let mut best_feasible: Option<Incumbent> = None;
    let mut best_infeasible: Option<Incumbent> = None;

    // Returns whether the point improved an incumbent.
    let consider = |x: Vec<f64>, feas: &mut Option<Incumbent>, infeas: &mut Option<Incumbent>| -> bool {
        let value = sub.objective.value(&x);
        let h = sub.violation(&x);
        if !value.is_finite() || !h.is_finite() {
            return false;
        }
        if h == 0.0 {
            if feas.as_ref().is_none_or(|b| value < b.value) {
                *feas = Some(Incumbent { x, value, h });
                return true;
            }
        } else if infeas.as_ref().is_none_or(|b| h < b.h || (h == b.h && value < b.value)) {
            *infeas = Some(Incumbent { x, value, h });
            return feas.is_none();
        }
        false
    };

    consider(sub.start.clone(), &mut best_feasible, &mut best_infeasible);
    let mut evals = 1;
    let mut frame = sub.initial_frame;
    let max_frame = sub.initial_frame;
    while evals < budget && frame > 1e-13 {
        let center = match (&best_feasible, &best_infeasible) {
            (Some(f), _) => f.x.clone(),
            (None, Some(i)) => i.x.clone(),
            (None, None) => break,
        };
        let mesh = mesh_size_from_frame(frame);
        let dirs = generate_poll_directions(n, frame, mesh, rng);
        let mut improved = false;
        for p in build_poll_set(&center, &dirs, mesh) {
            if evals >= budget {
                break;
            }
            if !sub.in_box(&p) {
                continue;
            }
            evals += 1;
            if consider(p, &mut best_feasible, &mut best_infeasible) {
                improved = true;
                break;
            }
        }
        frame = if improved { (frame * 2.0).min(max_frame) } else { frame * 0.5 };
    }

    let mut out: Vec<Vec<f64>> = Vec::new();
    for inc in best_feasible.iter().chain(best_infeasible.iter()) {
        let p = project_to_mesh(&inc.x, &sub.mesh_anchor, sub.mesh_size);
        if sub.in_bounds(&p) && !out.contains(&p) {
            out.push(p);
        }
    }
    if out.is_empty() {
        out.push(project_to_mesh(&sub.start, &sub.mesh_anchor, sub.mesh_size));
    }
    out
}

/// Strict order behind [`best_psi`]: `Less` means `a` is better.
pub fn psi_order(a: &EvaluatedPoint, b: &EvaluatedPoint, psi: &Psi) -> Ordering {
    if a.birth == b.birth {
        return Ordering::Equal;
    }
    if std::ptr::eq(best_psi(a, b, psi), a) {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

/// The better of two points relative to `psi`: psi-dominance or a smaller
/// violation wins, remaining ties go to the older point.
pub fn best_psi<'a>(a: &'a EvaluatedPoint, b: &'a EvaluatedPoint, psi: &Psi) -> &'a EvaluatedPoint {
    let (pa, pb) = (psi(a), psi(b));
    let (ha, hb) = (a.h(), b.h());
    let psi_dominates = |p1: f64, h1: f64, f1: bool, p2: f64, h2: f64, f2: bool| {
        (f1 && f2 && p1 < p2) || (!f1 && !f2 && p1 <= p2 && h1 <= h2 && (p1 < p2 || h1 < h2))
    };
    let (fa, fb) = (a.is_feasible(), b.is_feasible());
    if psi_dominates(pa, ha, fa, pb, hb, fb) || ha < hb {
        a
    } else if psi_dominates(pb, hb, fb, pa, ha, fa) || hb < ha {
        b
    } else if a.birth <= b.birth {
        a
    } else {
        b
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NmCoefficients {
    pub expansion: f64,
    pub outside_contraction: f64,
    pub inside_contraction: f64,
    /// Zone radius in multiples of the frame size.
    pub radius: f64,
    /// True evaluations per search step: `base + per_variable * n`.
    pub budget_base: usize,
    pub budget_per_variable: usize,
}

impl Default for NmCoefficients {
    fn default() -> Self {
        Self {
            expansion: 2.0,
            outside_contraction: 0.5,
            inside_contraction: -0.5,
            radius: 2.0,
            budget_base: 80,
            budget_per_variable: 10,
        }
    }
}

impl NmCoefficients {
    pub fn eval_budget(&self, n: usize) -> usize {
        self.budget_base + self.budget_per_variable * n
    }

    pub fn is_valid(&self) -> bool {
        self.expansion > 1.0
            && self.outside_contraction > 0.0
            && self.outside_contraction < 1.0
            && self.inside_contraction > -1.0
            && self.inside_contraction < 0.0
            && self.radius >= 1.0
    }
}

/// Reflection, expansion, outside and inside contraction points.
#[derive(Clone, Debug, PartialEq)]
pub struct NmCandidates {
    pub centroid: Vec<f64>,
    pub reflection: Vec<f64>,
    pub expansion: Vec<f64>,
    pub outside_contraction: Vec<f64>,
    pub inside_contraction: Vec<f64>,
}

impl NmCandidates {
    pub fn projected(&self, anchor: &[f64], mesh: f64) -> Self {
        Self {
            centroid: self.centroid.clone(),
            reflection: project_to_mesh(&self.reflection, anchor, mesh),
            expansion: project_to_mesh(&self.expansion, anchor, mesh),
            outside_contraction: project_to_mesh(&self.outside_contraction, anchor, mesh),
            inside_contraction: project_to_mesh(&self.inside_contraction, anchor, mesh),
        }
    }
}

/// Candidates from ordered vertices (best first), before mesh projection.
pub fn nm_candidates(vertices: &[Vec<f64>], coeffs: &NmCoefficients) -> NmCandidates {
    let n = vertices.len() - 1;
    let dim = vertices[0].len();
    let centroid: Vec<f64> = (0..dim)
        .map(|i| vertices[..n].iter().map(|v| v[i]).sum::<f64>() / n as f64)
        .collect();
    let worst = &vertices[n];
    let along = |t: f64| -> Vec<f64> { centroid.iter().zip(worst).map(|(c, w)| c + t * (c - w)).collect() };
    NmCandidates {
        reflection: along(1.0),
        expansion: along(coeffs.expansion),
        outside_contraction: along(coeffs.outside_contraction),
        inside_contraction: along(coeffs.inside_contraction),
        centroid,
    }
}

/// `|det(edges)| / prod |edge|`, which is 1 for orthogonal edges and 0 for a
/// flat simplex.
pub fn simplex_volume_ratio(vertices: &[&[f64]]) -> f64 {
    let n = vertices.len() - 1;
    let base = vertices[0];
    let mut norms = 1.0;
    let m = DMatrix::from_fn(n, n, |i, j| vertices[j + 1][i] - base[i]);
    for j in 0..n {
        norms *= m.column(j).norm();
    }
    if norms == 0.0 {
        return 0.0;
    }
    (m.determinant().abs() / norms).min(1.0)
}

pub const DEGENERACY_TOLERANCE: f64 = 1e-10;

/// Whether consecutive vertices satisfy `v[j-1] = best_psi(v[j-1], v[j])`.
pub fn simplex_is_ordered(simplex: &[&EvaluatedPoint], psi: &Psi) -> bool {
    simplex
        .windows(2)
        .all(|w| std::ptr::eq(best_psi(w[0], w[1], psi), w[0]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NmStop {
    TooFewPoints,
    Degenerate,
    Shrink,
    AlreadyEvaluated,
    Budget,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NmReport {
    /// Points evaluated by this call, in order.
    pub evaluated: Vec<PointId>,
    pub replacements: usize,
    pub ordering_violations: usize,
    pub stop: NmStop,
}

fn affinely_independent(basis: &mut Vec<Vec<f64>>, base: &[f64], x: &[f64]) -> bool {
    let mut r: Vec<f64> = x.iter().zip(base).map(|(a, b)| a - b).collect();
    let norm0 = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm0 == 0.0 {
        return false;
    }
    for q in basis.iter() {
        let dot: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
        for (ri, qi) in r.iter_mut().zip(q) {
            *ri -= dot * qi;
        }
    }
    let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= 1e-8 * norm0 {
        return false;
    }
    basis.push(r.into_iter().map(|v| v / norm).collect());
    true
}

/// Evaluates an NM candidate, charging the search budget for fresh points.
/// `Ok(None)` means the candidate lies outside the bounds.
fn nm_probe(
    eval: &mut Evaluator,
    x: &[f64],
    anchor: &[f64],
    mesh: f64,
    budget: &mut usize,
    report: &mut NmReport,
) -> Result<Option<(PointId, bool)>, NmStop> {
    if eval.cache().id_of(x).is_none() && eval.scaling().in_bounds(x) && *budget == 0 {
        return Err(NmStop::Budget);
    }
    match eval.probe(x, anchor, mesh) {
        Probe::Fresh(id) => {
            *budget -= 1;
            report.evaluated.push(id);
            Ok(Some((id, true)))
        }
        Probe::Cached(id) => Ok(Some((id, false))),
        Probe::OutOfBounds => Ok(None),
        Probe::Exhausted => Err(NmStop::Budget),
    }
}

/// Nelder-Mead subproblem procedure around `center` on the mesh of size `mesh`.
///
/// `budget` is the number of true evaluations still allowed for the current
/// search step and is decremented as points are evaluated.
pub fn nm_subproblem(
    psi: &Psi,
    center: &IterateEntry,
    eval: &mut Evaluator,
    coeffs: &NmCoefficients,
    mesh: f64,
    budget: &mut usize,
) -> NmReport {
    let mut report = NmReport {
        evaluated: Vec::new(),
        replacements: 0,
        ordering_violations: 0,
        stop: NmStop::TooFewPoints,
    };
    let anchor = eval.get(center.point).x.clone();
    let n = anchor.len();
    let radius = coeffs.radius * center.frame_size;
    let memo: RefCell<HashMap<PointId, f64>> = RefCell::new(HashMap::new());
    let cached = |p: &EvaluatedPoint| -> f64 {
        if let Some(&v) = memo.borrow().get(&p.birth) {
            return v;
        }
        let v = psi(p);
        memo.borrow_mut().insert(p.birth, v);
        v
    };
    let psi: &Psi = &cached;

    let cache = eval.cache();
    let mut zone: Vec<&EvaluatedPoint> = cache
        .iter()
        .filter(|p| p.result.status == EvalStatus::Ok)
        .filter(|p| p.x.iter().zip(&anchor).all(|(a, b)| (a - b).abs() <= radius))
        .collect();
    let mut keyed: Vec<(f64, f64, &EvaluatedPoint)> = zone.drain(..).map(|p| (p.h(), psi(p), p)).collect();
    keyed.sort_by(|a, b| {
        let cmp = |x: f64, y: f64| x.partial_cmp(&y).unwrap_or(Ordering::Equal);
        cmp(a.0, b.0).then(cmp(a.1, b.1)).then(a.2.birth.cmp(&b.2.birth))
    });
    zone.extend(keyed.into_iter().map(|k| k.2));
    let mut simplex: Vec<PointId> = Vec::with_capacity(n + 1);
    let mut basis = Vec::new();
    for p in zone {
        if simplex.is_empty() || affinely_independent(&mut basis, &cache.get(simplex[0]).x, &p.x) {
            simplex.push(p.birth);
        }
        if simplex.len() == n + 1 {
            break;
        }
    }
    if simplex.len() < n + 1 {
        return report;
    }

    loop {
        simplex.sort_by(|&a, &b| psi_order(eval.get(a), eval.get(b), psi));
        let pts: Vec<&EvaluatedPoint> = simplex.iter().map(|&id| eval.get(id)).collect();
        if !simplex_is_ordered(&pts, psi) {
            report.ordering_violations += 1;
        }
        let coords: Vec<&[f64]> = pts.iter().map(|p| p.x.as_slice()).collect();
        if simplex_volume_ratio(&coords) < DEGENERACY_TOLERANCE {
            report.stop = NmStop::Degenerate;
            return report;
        }
        let vertices: Vec<Vec<f64>> = pts.iter().map(|p| p.x.clone()).collect();
        let cand = nm_candidates(&vertices, coeffs).projected(&anchor, mesh);
        let (best, second_worst, worst) = (simplex[0], simplex[n - 1], simplex[n]);

        let better = |a: Option<(PointId, bool)>, b: PointId, eval: &Evaluator| -> bool {
            a.is_some_and(|(a, _)| a != b && psi_order(eval.get(a), eval.get(b), psi) == Ordering::Less)
        };
        macro_rules! probe {
            ($x:expr) => {
                match nm_probe(eval, $x, &anchor, mesh, budget, &mut report) {
                    Ok(v) => v,
                    Err(stop) => {
                        report.stop = stop;
                        return report;
                    }
                }
            };
        }

        let r = probe!(&cand.reflection);
        let chosen = if better(r, best, eval) {
            let e = probe!(&cand.expansion);
            let (rid, _) = r.expect("reflection evaluated");
            if better(e, rid, eval) {
                e
            } else {
                r
            }
        } else if better(r, second_worst, eval) {
            r
        } else if better(r, worst, eval) {
            let oc = probe!(&cand.outside_contraction);
            let (rid, _) = r.expect("reflection evaluated");
            if better(oc, rid, eval) || oc.is_some_and(|(id, _)| id == rid) {
                oc
            } else {
                None
            }
        } else {
            let ic = probe!(&cand.inside_contraction);
            if better(ic, worst, eval) {
                ic
            } else {
                None
            }
        };

        match chosen {
            None => {
                report.stop = NmStop::Shrink;
                return report;
            }
            Some((_, false)) => {
                report.stop = NmStop::AlreadyEvaluated;
                return report;
            }
            Some((id, true)) => {
                simplex[n] = id;
                report.replacements += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::{EvaluationResult, PointId};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn point(f: f64, h: f64, birth: usize) -> EvaluatedPoint {
        let c = if h > 0.0 { vec![h.sqrt()] } else { vec![-1.0] };
        EvaluatedPoint {
            x: vec![birth as f64],
            result: EvaluationResult::new(vec![f], c),
            birth: PointId(birth),
        }
    }

    fn psi0(p: &EvaluatedPoint) -> f64 {
        p.f()[0]
    }

    #[test]
    fn best_psi_examples() {
        let (a, b) = (point(1.0, 0.0, 3), point(2.0, 0.0, 1));
        assert_eq!(best_psi(&a, &b, &psi0).birth, a.birth);
        let (a, b) = (point(1.0, 0.2, 3), point(1.0, 0.4, 1));
        assert_eq!(best_psi(&a, &b, &psi0).birth, a.birth);
        let (a, b) = (point(1.0, 0.2, 1), point(1.0, 0.2, 3));
        assert_eq!(best_psi(&a, &b, &psi0).birth, a.birth);
        assert_eq!(best_psi(&b, &a, &psi0).birth, a.birth);
        // feasible beats infeasible through the violation
        let (a, b) = (point(9.0, 0.0, 4), point(0.0, 0.1, 1));
        assert_eq!(best_psi(&b, &a, &psi0).birth, a.birth);
    }

    #[test]
    fn candidates_one_dimensional() {
        let c = nm_candidates(&[vec![0.0], vec![1.0]], &NmCoefficients::default());
        assert_eq!(c.centroid, vec![0.0]);
        assert_eq!(c.reflection, vec![-1.0]);
        assert_eq!(c.expansion, vec![-2.0]);
        assert_eq!(c.outside_contraction, vec![-0.5]);
        assert_eq!(c.inside_contraction, vec![0.5]);
    }

    #[test]
    fn centroid_of_identical_vertices() {
        let c = nm_candidates(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![0.0, 0.0]], &NmCoefficients::default());
        assert_eq!(c.centroid, vec![1.0, 2.0]);
    }

    #[test]
    fn projected_candidates_on_mesh() {
        let c = nm_candidates(&[vec![0.0], vec![0.3]], &NmCoefficients::default()).projected(&[0.0], 0.25);
        assert_eq!(c.reflection, vec![-0.25]);
        assert_eq!(c.outside_contraction, vec![-0.25]);
    }

    #[test]
    fn volume_ratio() {
        assert_eq!(simplex_volume_ratio(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]), 1.0);
        assert_eq!(simplex_volume_ratio(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0]]), 0.0);
        assert_eq!(simplex_volume_ratio(&[&[0.0], &[0.0]]), 0.0);
    }

    fn subproblem(objective: QuadraticModel, constraints: Vec<QuadraticModel>) -> ModelSubproblem {
        ModelSubproblem {
            objective,
            constraints,
            lower: vec![-2.0],
            upper: vec![2.0],
            start: vec![0.0],
            initial_frame: 1.0,
            mesh_anchor: vec![0.0],
            mesh_size: 1e-3,
            bounds_lower: vec![-2.0],
            bounds_upper: vec![2.0],
        }
    }

    fn shifted_square(shift: f64) -> QuadraticModel {
        QuadraticModel {
            origin: vec![shift],
            alpha0: 0.0,
            g: vec![0.0],
            h: vec![vec![2.0]],
        }
    }

    #[test]
    fn inner_mads_finds_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let out = mads_minimize(&subproblem(shifted_square(1.0), vec![]), 500, &mut rng);
        assert_eq!(out.len(), 1);
        assert!((out[0][0] - 1.0).abs() < 1e-2, "{out:?}");
    }

    #[test]
    fn inner_mads_keeps_optimal_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let out = mads_minimize(&subproblem(shifted_square(0.0), vec![]), 200, &mut rng);
        assert_eq!(out, vec![vec![0.0]]);
    }

    #[test]
    fn inner_mads_infeasible_box() {
        // c(x) = 10 + x^2 > 0 everywhere: the least violation sits at 0.
        let c = QuadraticModel {
            origin: vec![0.0],
            alpha0: 10.0,
            g: vec![0.0],
            h: vec![vec![2.0]],
        };
        let mut sub = subproblem(shifted_square(1.0), vec![c]);
        sub.start = vec![1.5];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let out = mads_minimize(&sub, 500, &mut rng);
        assert_eq!(out.len(), 1);
        assert!(out[0][0].abs() < 1e-2, "{out:?}");
    }
}
