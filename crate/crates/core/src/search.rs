//! Search strategies: MultiMADS, dominance move, quadratic DMS and speculative.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::barrier::{dominates_any_center, enters_target, BarrierState, IterateEntry, IterateList, NewPoint};
use crate::driver::{Evaluator, Probe};
use crate::error::Error;
use crate::formulations::{
    build_reference_set, compute_reference_point, extreme_objective_indices, psi_distance, psi_dominance_move,
    ReferenceSet,
};
use crate::mesh::project_to_mesh;
use crate::models::fit_model_suite;
use crate::points::{EvaluatedPoint, PointId};
use crate::subsolvers::{mads_minimize, nm_subproblem, ModelSubproblem, NmCoefficients};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "basic")]
    Basic,
    #[serde(rename = "NM-DoM")]
    NmDom,
    #[serde(rename = "NM-Multi")]
    NmMulti,
    #[serde(rename = "Quad-DMS")]
    QuadDms,
    #[serde(rename = "Quad-DoM")]
    QuadDom,
    #[serde(rename = "Quad-Multi")]
    QuadMulti,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Basic,
        Variant::NmDom,
        Variant::NmMulti,
        Variant::QuadDms,
        Variant::QuadDom,
        Variant::QuadMulti,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Basic => "basic",
            Variant::NmDom => "NM-DoM",
            Variant::NmMulti => "NM-Multi",
            Variant::QuadDms => "Quad-DMS",
            Variant::QuadDom => "Quad-DoM",
            Variant::QuadMulti => "Quad-Multi",
        }
    }

    pub fn has_search(self) -> bool {
        self != Variant::Basic
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    /// Case-insensitive; `-` and `_` are interchangeable.
    fn from_str(s: &str) -> Result<Self, Error> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        Variant::ALL
            .into_iter()
            .find(|v| v.name().to_ascii_lowercase() == key)
            .ok_or_else(|| Error::UnknownVariant {
                name: s.to_string(),
                expected: Variant::ALL.map(Variant::name).join(", "),
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantConfig {
    pub variant: Variant,
    pub opportunistic: bool,
}

impl Default for VariantConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Basic,
            opportunistic: true,
        }
    }
}

impl VariantConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            opportunistic: true,
        }
    }
}

/// Scalar function of the objective vector minimized by a search backend.
#[derive(Clone, Debug, PartialEq)]
pub enum Formulation {
    Objective(usize),
    Distance(Vec<f64>),
    DominanceMove(ReferenceSet),
    /// `max_{i in I} f_i`.
    MaxOf(Vec<usize>),
}

impl Formulation {
    pub fn value(&self, f: &[f64]) -> f64 {
        if f.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        match self {
            Formulation::Objective(i) => f[*i],
            Formulation::Distance(r) => psi_distance(f, r),
            Formulation::DominanceMove(y) => psi_dominance_move(f, y),
            Formulation::MaxOf(idx) => idx.iter().map(|&i| f[i]).fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn of_point(&self, p: &EvaluatedPoint) -> f64 {
        self.value(p.f())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Quadratic,
    NelderMead,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchParams {
    pub rho: f64,
    pub nm: NmCoefficients,
    pub inner_budget_per_variable: usize,
    pub speculative_factor: f64,
    pub opportunistic: bool,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            rho: 2.0,
            nm: NmCoefficients::default(),
            inner_budget_per_variable: 100,
            speculative_factor: 4.0,
            opportunistic: true,
        }
    }
}

/// Iteration state a search step may read.
#[derive(Clone, Copy, Debug)]
pub struct SearchContext<'a> {
    pub center: &'a IterateEntry,
    pub list: &'a IterateList,
    pub state: &'a BarrierState,
    /// Frame centers of the iteration, primary first.
    pub centers: &'a [PointId],
    pub frame: f64,
    pub mesh: f64,
    pub params: &'a SearchParams,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SearchOutcome {
    pub evaluated: Vec<NewPoint>,
    /// A new point dominated a frame center.
    pub success: bool,
    /// The poll should be skipped.
    pub skip_poll: bool,
    /// Backend invocations, one per formulation tried.
    pub subproblems: usize,
    /// True evaluations made by Nelder-Mead calls.
    pub nm_evaluations: usize,
}

/// Counters accumulated over all search steps of a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub searches: usize,
    pub search_evaluations: usize,
    pub nm_calls: usize,
    /// Largest number of true evaluations spent by one NM search step.
    pub nm_max_evaluations: usize,
    pub nm_budget_overruns: usize,
    pub nm_replacements: usize,
    pub nm_ordering_violations: usize,
    pub model_subproblems: usize,
    /// Largest number of subproblems solved by one search step.
    pub max_subproblems_per_search: usize,
    pub speculative_evaluations: usize,
}

fn direction(x: &[f64], anchor: &[f64], mesh: f64) -> Vec<f64> {
    x.iter().zip(anchor).map(|(a, b)| ((a - b) / mesh).round()).collect()
}

fn record(
    id: PointId,
    eval: &Evaluator,
    ctx: &SearchContext,
    anchor: &[f64],
    out: &mut SearchOutcome,
) -> bool {
    out.evaluated.push(NewPoint {
        id,
        direction: Some(direction(&eval.get(id).x, anchor, ctx.mesh)),
    });
    let dominating = dominates_any_center(eval.cache(), id, ctx.centers, ctx.list.is_feasible_mode());
    out.success |= dominating;
    dominating
}

/// Evaluates candidates in order; with opportunism, stops at the first
/// dominating point. Returns whether it stopped early.
fn evaluate_candidates(candidates: &[Vec<f64>], ctx: &SearchContext, eval: &mut Evaluator, out: &mut SearchOutcome) -> bool {
    let anchor = eval.get(ctx.center.point).x.clone();
    for c in candidates {
        match eval.probe(c, &anchor, ctx.mesh) {
            Probe::Fresh(id) => {
                if record(id, eval, ctx, &anchor, out) && ctx.params.opportunistic {
                    return true;
                }
            }
            Probe::Exhausted => return true,
            Probe::Cached(_) | Probe::OutOfBounds => {}
        }
    }
    false
}

/// Mesh candidates from the model subproblem of `formulation`, or nothing when
/// a model cannot be built.
pub fn quadratic_candidates<R: Rng + ?Sized>(
    formulation: &Formulation,
    ctx: &SearchContext,
    eval: &Evaluator,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let x = &eval.get(ctx.center.point).x;
    let rho = ctx.params.rho;
    let psi = |p: &EvaluatedPoint| formulation.of_point(p);
    let Some(suite) = fit_model_suite(eval.cache(), x, ctx.frame, rho, &psi, eval.problem().n_constraints) else {
        return Vec::new();
    };
    let bounds = eval.scaling();
    let radius = rho * ctx.frame;
    let lower: Vec<f64> = x.iter().zip(&bounds.lower).map(|(x, l)| (x - radius).max(*l)).collect();
    let upper: Vec<f64> = x.iter().zip(&bounds.upper).map(|(x, u)| (x + radius).min(*u)).collect();
    let sub = ModelSubproblem {
        objective: suite.objective,
        constraints: suite.constraints,
        lower,
        upper,
        start: x.clone(),
        initial_frame: radius / 2.0,
        mesh_anchor: x.clone(),
        mesh_size: ctx.mesh,
        bounds_lower: bounds.lower.clone(),
        bounds_upper: bounds.upper.clone(),
    };
    let n = x.len();
    mads_minimize(&sub, (ctx.params.inner_budget_per_variable * n).max(1), rng)
}

#[allow(clippy::too_many_arguments)]
fn run_backend<R: Rng + ?Sized>(
    backend: Backend,
    formulation: &Formulation,
    ctx: &SearchContext,
    eval: &mut Evaluator,
    rng: &mut R,
    nm_budget: &mut usize,
    stats: &mut SearchStats,
    out: &mut SearchOutcome,
) -> bool {
    out.subproblems += 1;
    match backend {
        Backend::Quadratic => {
            stats.model_subproblems += 1;
            let cands = quadratic_candidates(formulation, ctx, eval, rng);
            evaluate_candidates(&cands, ctx, eval, out)
        }
        Backend::NelderMead => {
            stats.nm_calls += 1;
            let psi = |p: &EvaluatedPoint| formulation.of_point(p);
            let report = nm_subproblem(&psi, ctx.center, eval, &ctx.params.nm, ctx.mesh, nm_budget);
            stats.nm_replacements += report.replacements;
            stats.nm_ordering_violations += report.ordering_violations;
            out.nm_evaluations += report.evaluated.len();
            let anchor = eval.get(ctx.center.point).x.clone();
            let mut dominating = false;
            for id in report.evaluated {
                dominating |= record(id, eval, ctx, &anchor, out);
            }
            dominating && ctx.params.opportunistic
        }
    }
}

/// Extreme-point exploration on each objective `x^k` minimizes over the list,
/// otherwise the distance formulation around the reference point.
pub fn multimads_search<R: Rng + ?Sized>(
    backend: Backend,
    ctx: &SearchContext,
    eval: &mut Evaluator,
    rng: &mut R,
    nm_budget: &mut usize,
    stats: &mut SearchStats,
) -> SearchOutcome {
    let mut out = SearchOutcome::default();
    for formulation in multimads_formulations(ctx.center.point, ctx.list, eval) {
        if run_backend(backend, &formulation, ctx, eval, rng, nm_budget, stats, &mut out) {
            break;
        }
    }
    out
}

/// Formulations the MultiMADS search optimizes for a given center.
pub fn multimads_formulations(center: PointId, list: &IterateList, eval: &Evaluator) -> Vec<Formulation> {
    let extremes = extreme_objective_indices(center, list, eval.cache());
    if extremes.is_empty() {
        vec![Formulation::Distance(compute_reference_point(center, list, eval.cache()))]
    } else {
        extremes.into_iter().map(Formulation::Objective).collect()
    }
}

/// Dominance-move formulation against the rest of the list.
pub fn dominance_move_search<R: Rng + ?Sized>(
    backend: Backend,
    ctx: &SearchContext,
    eval: &mut Evaluator,
    rng: &mut R,
    nm_budget: &mut usize,
    stats: &mut SearchStats,
) -> SearchOutcome {
    let mut out = SearchOutcome::default();
    let set = build_reference_set(ctx.center.point, ctx.list, eval.cache());
    run_backend(backend, &Formulation::DominanceMove(set), ctx, eval, rng, nm_budget, stats, &mut out);
    out
}

/// Index subsets of `0..m` with `size` elements, in lexicographic order.
pub fn combinations(m: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, m, size, &mut Vec::new(), &mut out);
    out
}

/// Models of `max_{i in I} f_i` for growing subsets `I`, level by level; stops
/// after the first level whose points change the iterate list.
pub fn quad_dms_search<R: Rng + ?Sized>(
    ctx: &SearchContext,
    eval: &mut Evaluator,
    rng: &mut R,
    stats: &mut SearchStats,
) -> SearchOutcome {
    let mut out = SearchOutcome::default();
    let m = eval.problem().m;
    let anchor = eval.get(ctx.center.point).x.clone();
    for level in 1..=m {
        let mut candidates: Vec<Vec<f64>> = Vec::new();
        for subset in combinations(m, level) {
            out.subproblems += 1;
            stats.model_subproblems += 1;
            for c in quadratic_candidates(&Formulation::MaxOf(subset), ctx, eval, rng) {
                if !candidates.contains(&c) {
                    candidates.push(c);
                }
            }
        }
        let mut changed = false;
        for c in &candidates {
            match eval.probe(c, &anchor, ctx.mesh) {
                Probe::Fresh(id) => {
                    record(id, eval, ctx, &anchor, &mut out);
                    changed |= enters_target(eval.cache(), id, ctx.list, ctx.state);
                }
                Probe::Exhausted => return out,
                Probe::Cached(_) | Probe::OutOfBounds => {}
            }
        }
        if changed {
            break;
        }
    }
    out
}

/// One step of `factor` mesh sizes along the center's last successful direction.
pub fn speculative_search(ctx: &SearchContext, eval: &mut Evaluator, stats: &mut SearchStats) -> SearchOutcome {
    let mut out = SearchOutcome::default();
    let Some(d) = &ctx.center.last_direction else {
        return out;
    };
    let x = eval.get(ctx.center.point).x.clone();
    let raw: Vec<f64> = x
        .iter()
        .zip(d)
        .map(|(x, d)| x + ctx.params.speculative_factor * ctx.mesh * d)
        .collect();
    let candidate = project_to_mesh(&raw, &x, ctx.mesh);
    if !eval.scaling().in_bounds(&candidate) {
        return out;
    }
    if let Probe::Fresh(id) = eval.probe(&candidate, &x, ctx.mesh) {
        stats.speculative_evaluations += 1;
        record(id, eval, ctx, &x, &mut out);
    }
    out
}

/// The designated search of `variant` followed by the speculative search.
///
/// A dominating success with opportunism ends the search step and skips the
/// poll, except after the quadratic DMS search.
pub fn run_search<R: Rng + ?Sized>(
    variant: Variant,
    ctx: &SearchContext,
    eval: &mut Evaluator,
    rng: &mut R,
    stats: &mut SearchStats,
) -> SearchOutcome {
    let before = eval.used();
    let n = eval.problem().n;
    let mut nm_budget = ctx.params.nm.eval_budget(n);
    let designated = match variant {
        Variant::Basic => SearchOutcome::default(),
        Variant::NmDom => dominance_move_search(Backend::NelderMead, ctx, eval, rng, &mut nm_budget, stats),
        Variant::NmMulti => multimads_search(Backend::NelderMead, ctx, eval, rng, &mut nm_budget, stats),
        Variant::QuadDms => quad_dms_search(ctx, eval, rng, stats),
        Variant::QuadDom => dominance_move_search(Backend::Quadratic, ctx, eval, rng, &mut nm_budget, stats),
        Variant::QuadMulti => multimads_search(Backend::Quadratic, ctx, eval, rng, &mut nm_budget, stats),
    };
    if variant.has_search() {
        stats.searches += 1;
        stats.max_subproblems_per_search = stats.max_subproblems_per_search.max(designated.subproblems);
    }
    if matches!(variant, Variant::NmDom | Variant::NmMulti) {
        let spent = designated.nm_evaluations;
        stats.nm_max_evaluations = stats.nm_max_evaluations.max(spent);
        if spent > ctx.params.nm.eval_budget(n) {
            stats.nm_budget_overruns += 1;
        }
    }

    let mut out = designated;
    let stop = out.success && ctx.params.opportunistic && variant != Variant::QuadDms;
    if stop {
        out.skip_poll = true;
    } else if !eval.exhausted() {
        let spec = speculative_search(ctx, eval, stats);
        out.success |= spec.success;
        out.skip_poll = spec.success && ctx.params.opportunistic;
        out.evaluated.extend(spec.evaluated);
    }
    stats.search_evaluations += eval.used() - before;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_names_roundtrip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert_eq!("quad_dms".parse::<Variant>().unwrap(), Variant::QuadDms);
        let err = "fancy".parse::<Variant>().unwrap_err().to_string();
        for v in Variant::ALL {
            assert!(err.contains(v.name()));
        }
    }

    #[test]
    fn combination_counts() {
        let total: usize = (1..=3).map(|l| combinations(3, l).len()).sum();
        assert_eq!(total, 7);
        assert_eq!(combinations(2, 1), vec![vec![0], vec![1]]);
        assert_eq!(combinations(4, 2).len(), 6);
    }

    #[test]
    fn formulation_values() {
        assert_eq!(Formulation::MaxOf(vec![0, 2]).value(&[1.0, 5.0, 3.0]), 3.0);
        assert_eq!(Formulation::Objective(1).value(&[1.0, 5.0]), 5.0);
        assert_eq!(Formulation::Distance(vec![1.0, 1.0]).value(&[0.0, 0.0]), -1.0);
        assert_eq!(Formulation::Objective(0).value(&[1.0, f64::INFINITY]), f64::INFINITY);
    }
}
