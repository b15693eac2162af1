//! The main loop: frame-center selection, search, poll and parameter update.
//!
//! The solver works in scaled coordinates. A variable with finite bounds `[l, u]`
//! is mapped to `[0, 1]`; any other variable is divided by 10. Frame and mesh
//! sizes, the cache and every search live in that space, while the blackbox and
//! the run history see original coordinates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::barrier::{
    dominates_any_center, rebuild_incumbents, select_frame_center, select_secondary_center, update_iteration,
    BarrierState, IterateEntry, IterateList, NewPoint, SuccessClass,
};
use crate::error::{Error, Result};
use crate::mesh::{build_poll_set, generate_pair_directions, generate_poll_directions, mesh_size_from_frame, DEFAULT_TAU, DEFAULT_W_PLUS};
use crate::points::{filter_nondominated, Cache, EvalStatus, EvaluatedPoint, EvaluationResult, FilterMode, Insertion, PointId};
use crate::problems::Problem;
use crate::search::{run_search, SearchContext, SearchParams, SearchStats, VariantConfig};
use crate::subsolvers::NmCoefficients;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Initial frame size in scaled coordinates.
    pub initial_frame: f64,
    pub tau: f64,
    pub w_plus: u32,
    pub budget: usize,
    pub variant: VariantConfig,
    pub seed: u64,
    /// Radius factor of the model sample ball and subproblem box.
    pub rho: f64,
    pub nm: NmCoefficients,
    /// Model evaluations per variable granted to the inner MADS.
    pub inner_budget_per_variable: usize,
    /// Speculative step length in mesh units along the last direction.
    pub speculative_factor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            initial_frame: 0.1,
            tau: DEFAULT_TAU,
            w_plus: DEFAULT_W_PLUS,
            budget: 1000,
            variant: VariantConfig::default(),
            seed: 0,
            rho: 2.0,
            nm: NmCoefficients::default(),
            inner_budget_per_variable: 100,
            speculative_factor: 4.0,
        }
    }
}

/// Affine map between original and scaled coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Scaling {
    offset: Vec<f64>,
    scale: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Scaling {
    pub fn for_problem(problem: &Problem) -> Self {
        let mut offset = Vec::with_capacity(problem.n);
        let mut scale = Vec::with_capacity(problem.n);
        for (l, u) in problem.lower.iter().zip(&problem.upper) {
            if l.is_finite() && u.is_finite() {
                offset.push(*l);
                scale.push(u - l);
            } else {
                offset.push(0.0);
                scale.push(10.0);
            }
        }
        let lower = problem.lower.iter().zip(&offset).zip(&scale).map(|((l, o), s)| (l - o) / s).collect();
        let upper = problem.upper.iter().zip(&offset).zip(&scale).map(|((u, o), s)| (u - o) / s).collect();
        Self {
            offset,
            scale,
            lower,
            upper,
        }
    }

    pub fn to_original(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.offset).zip(&self.scale).map(|((u, o), s)| o + s * u).collect()
    }

    pub fn to_scaled(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.offset).zip(&self.scale).map(|((x, o), s)| (x - o) / s).collect()
    }

    pub fn in_bounds(&self, u: &[f64]) -> bool {
        u.iter().zip(&self.lower).zip(&self.upper).all(|((u, l), h)| u >= l && u <= h)
    }
}

/// One blackbox evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    /// 1-based position in evaluation order.
    pub index: usize,
    pub x: Vec<f64>,
    pub objectives: Vec<f64>,
    pub constraints: Vec<f64>,
    pub h: f64,
    pub status: EvalStatus,
    /// Scaled coordinates, the mesh anchor and mesh size the point was generated on.
    pub scaled: Vec<f64>,
    pub anchor: Vec<f64>,
    pub mesh_size: f64,
}

impl EvalRecord {
    pub fn is_feasible(&self) -> bool {
        self.status == EvalStatus::Ok && self.h == 0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub center: usize,
    pub secondary: Option<usize>,
    pub frame_size: f64,
    pub success: SuccessClass,
    pub h_max: f64,
    pub list_len: usize,
    pub evaluations: usize,
    pub poll_skipped: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunHistory {
    pub problem: String,
    pub n: usize,
    pub m: usize,
    pub n_constraints: usize,
    pub evaluations: Vec<EvalRecord>,
    pub iterations: Vec<IterationRecord>,
}

impl RunHistory {
    /// Feasible nondominated objective vectors among the first `count` evaluations.
    pub fn front_prefix(&self, count: usize) -> Vec<Vec<f64>> {
        let feasible: Vec<Vec<f64>> = self.evaluations[..count.min(self.evaluations.len())]
            .iter()
            .filter(|r| r.is_feasible())
            .map(|r| r.objectives.clone())
            .collect();
        crate::points::nondominated_vectors(&feasible)
    }

    pub fn front(&self) -> Vec<Vec<f64>> {
        self.front_prefix(self.evaluations.len())
    }
}

/// What a request to evaluate a point produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Probe {
    Fresh(PointId),
    Cached(PointId),
    OutOfBounds,
    Exhausted,
}

impl Probe {
    pub fn id(self) -> Option<PointId> {
        match self {
            Probe::Fresh(id) | Probe::Cached(id) => Some(id),
            _ => None,
        }
    }
}

/// Cache-backed, budget-limited access to the blackbox in scaled coordinates.
pub struct Evaluator<'p> {
    problem: &'p Problem,
    scaling: Scaling,
    cache: Cache,
    records: Vec<EvalRecord>,
    budget: usize,
}

impl<'p> Evaluator<'p> {
    pub fn new(problem: &'p Problem, budget: usize) -> Self {
        Self {
            problem,
            scaling: Scaling::for_problem(problem),
            cache: Cache::new(),
            records: Vec::new(),
            budget,
        }
    }

    pub fn problem(&self) -> &Problem {
        self.problem
    }

    pub fn scaling(&self) -> &Scaling {
        &self.scaling
    }

    pub fn cache(&self) -> &Cache {
        &self.cache
    }

    pub fn records(&self) -> &[EvalRecord] {
        &self.records
    }

    pub fn used(&self) -> usize {
        self.records.len()
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn exhausted(&self) -> bool {
        self.records.len() >= self.budget
    }

    pub fn get(&self, id: PointId) -> &EvaluatedPoint {
        self.cache.get(id)
    }

    /// Looks `u` up in the cache and otherwise calls the blackbox, recording
    /// the mesh the point belongs to.
    pub fn probe(&mut self, u: &[f64], anchor: &[f64], mesh_size: f64) -> Probe {
        if let Some(id) = self.cache.id_of(u) {
            return Probe::Cached(id);
        }
        if !self.scaling.in_bounds(u) {
            return Probe::OutOfBounds;
        }
        if self.exhausted() {
            return Probe::Exhausted;
        }
        let x = self.scaling.to_original(u);
        let result = self.problem.evaluate(&x);
        let record = EvalRecord {
            index: self.records.len() + 1,
            x,
            objectives: result.objectives.clone(),
            constraints: result.constraints.clone(),
            h: result.violation,
            status: result.status,
            scaled: u.to_vec(),
            anchor: anchor.to_vec(),
            mesh_size,
        };
        match self.cache.insert(u.to_vec(), result) {
            Insertion::New(id) => {
                self.records.push(record);
                Probe::Fresh(id)
            }
            Insertion::AlreadyPresent(id) => Probe::Cached(id),
        }
    }
}

/// Final front and full history of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    /// Feasible nondominated decision vectors (original coordinates).
    pub front_points: Vec<Vec<f64>>,
    /// Their objective vectors.
    pub front: Vec<Vec<f64>>,
    pub history: RunHistory,
    pub stats: SearchStats,
}

pub struct Solver<'p> {
    config: SolverConfig,
    eval: Evaluator<'p>,
    list: IterateList,
    state: BarrierState,
    rng: ChaCha8Rng,
    iterations: Vec<IterationRecord>,
    stats: SearchStats,
    finished: bool,
}

impl<'p> Solver<'p> {
    /// Evaluates the starting points and builds the initial iterate list.
    pub fn new(problem: &'p Problem, starts: &[Vec<f64>], config: SolverConfig) -> Result<Self> {
        if config.budget == 0 {
            return Err(Error::Config("budget must be at least 1".into()));
        }
        let valid = config.initial_frame > 0.0 && config.tau > 0.0 && config.tau < 1.0 && config.rho > 1.0;
        if !valid {
            return Err(Error::Config("need initial frame > 0, 0 < tau < 1 and rho > 1".into()));
        }
        if starts.is_empty() {
            return Err(Error::NoStartingPoints);
        }
        for (index, s) in starts.iter().enumerate() {
            if s.len() != problem.n {
                return Err(Error::StartDimension {
                    index,
                    found: s.len(),
                    expected: problem.n,
                });
            }
            if !problem.in_bounds(s) {
                return Err(Error::StartOutOfBounds { index });
            }
        }
        let mut eval = Evaluator::new(problem, config.budget);
        let delta0 = config.initial_frame;
        let mut ids = Vec::new();
        for s in starts {
            let u = eval.scaling().to_scaled(s);
            if let Some(id) = eval.probe(&u, &u, mesh_size_from_frame(delta0)).id() {
                ids.push(id);
            }
        }
        let mut state = BarrierState::default();
        state.absorb(eval.cache(), &ids);
        let feasible_mode = !state.feasible().is_empty();
        let members: Vec<PointId> = if feasible_mode {
            state.feasible().to_vec()
        } else {
            state.infeasible_incumbents(eval.cache())
        };
        if members.is_empty() {
            return Err(Error::NoEvaluableStart);
        }
        let mut entries: Vec<IterateEntry> = members
            .into_iter()
            .map(|point| IterateEntry {
                point,
                frame_size: delta0,
                last_direction: None,
            })
            .collect();
        entries.sort_by_key(|e| e.point);
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Self {
            config,
            eval,
            list: IterateList::new(entries, feasible_mode),
            state,
            rng,
            iterations: Vec::new(),
            stats: SearchStats::default(),
            finished: false,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn list(&self) -> &IterateList {
        &self.list
    }

    pub fn state(&self) -> &BarrierState {
        &self.state
    }

    pub fn cache(&self) -> &Cache {
        self.eval.cache()
    }

    pub fn evaluator(&self) -> &Evaluator<'p> {
        &self.eval
    }

    pub fn records(&self) -> &[EvalRecord] {
        self.eval.records()
    }

    pub fn iterations(&self) -> &[IterationRecord] {
        &self.iterations
    }

    pub fn stats(&self) -> &SearchStats {
        &self.stats
    }

    pub fn is_finished(&self) -> bool {
        self.finished || self.eval.exhausted()
    }

    /// Runs one iteration. Returns `false` once the budget is spent or every
    /// frame size has fallen below the floor.
    pub fn iterate(&mut self) -> bool {
        if self.is_finished() {
            self.finished = true;
            return false;
        }
        let Some(index) = select_frame_center(&self.list, self.eval.cache(), self.config.tau, self.config.w_plus) else {
            self.finished = true;
            return false;
        };
        let entry = self.list.entries()[index].clone();
        let frame = entry.frame_size;
        let mesh = mesh_size_from_frame(frame);
        let primary = entry.point;
        let secondary = select_secondary_center(&self.state, self.eval.cache(), primary);
        let mut centers = vec![primary];
        centers.extend(secondary);

        let params = SearchParams {
            rho: self.config.rho,
            nm: self.config.nm,
            inner_budget_per_variable: self.config.inner_budget_per_variable,
            speculative_factor: self.config.speculative_factor,
            opportunistic: self.config.variant.opportunistic,
        };
        let ctx = SearchContext {
            center: &entry,
            list: &self.list,
            state: &self.state,
            centers: &centers,
            frame,
            mesh,
            params: &params,
        };
        let outcome = run_search(self.config.variant.variant, &ctx, &mut self.eval, &mut self.rng, &mut self.stats);
        let mut new_points = outcome.evaluated;
        let poll_skipped = outcome.skip_poll;
        if !poll_skipped {
            self.poll(&centers, frame, mesh, &mut new_points);
        }

        let success = update_iteration(
            &mut self.list,
            &mut self.state,
            self.eval.cache(),
            &new_points,
            &centers,
            frame,
            self.config.tau,
        );
        self.iterations.push(IterationRecord {
            iteration: self.iterations.len(),
            center: primary.0,
            secondary: secondary.map(|s| s.0),
            frame_size: frame,
            success,
            h_max: self.state.h_max,
            list_len: self.list.len(),
            evaluations: self.eval.used(),
            poll_skipped,
        });
        true
    }

    fn poll(&mut self, centers: &[PointId], frame: f64, mesh: f64, new_points: &mut Vec<NewPoint>) {
        let n = self.eval.problem().n;
        let feasible_mode = self.list.is_feasible_mode();
        for (k, &c) in centers.iter().enumerate() {
            let dirs = if k == 0 {
                generate_poll_directions(n, frame, mesh, &mut self.rng)
            } else {
                generate_pair_directions(n, frame, mesh, &mut self.rng)
            };
            let x = self.eval.get(c).x.clone();
            let points = build_poll_set(&x, &dirs, mesh);
            for (p, d) in points.iter().zip(&dirs.directions) {
                match self.eval.probe(p, &x, mesh) {
                    Probe::Fresh(id) => {
                        new_points.push(NewPoint {
                            id,
                            direction: Some(d.clone()),
                        });
                        if self.config.variant.opportunistic
                            && dominates_any_center(self.eval.cache(), id, centers, feasible_mode)
                        {
                            return;
                        }
                    }
                    Probe::Exhausted => return,
                    Probe::Cached(_) | Probe::OutOfBounds => {}
                }
            }
        }
    }

    /// Iterates until the budget is spent or no frame center remains.
    pub fn run(&mut self) {
        while self.iterate() {}
    }

    pub fn history(&self) -> RunHistory {
        let p = self.eval.problem();
        RunHistory {
            problem: p.name.clone(),
            n: p.n,
            m: p.m,
            n_constraints: p.n_constraints,
            evaluations: self.eval.records().to_vec(),
            iterations: self.iterations.clone(),
        }
    }

    pub fn into_result(self) -> SolveResult {
        let history = self.history();
        let all: Vec<&EvaluatedPoint> = self.eval.cache().iter().collect();
        let front_pts = filter_nondominated(&all, FilterMode::Feasible);
        SolveResult {
            front_points: front_pts.iter().map(|p| self.eval.scaling().to_original(&p.x)).collect(),
            front: front_pts.iter().map(|p| p.f().to_vec()).collect(),
            history,
            stats: self.stats,
        }
    }
}

/// Runs the solver from `starts` until the budget is spent.
pub fn solve(problem: &Problem, starts: &[Vec<f64>], config: SolverConfig) -> Result<SolveResult> {
    let mut solver = Solver::new(problem, starts, config)?;
    solver.run();
    Ok(solver.into_result())
}

/// Recomputes `F` and `U` from every cached point, for consistency checks.
pub fn incumbents_from_scratch(cache: &Cache, h_max: f64) -> BarrierState {
    rebuild_incumbents(cache, h_max)
}

/// Blackbox result of a single point in original coordinates.
pub fn evaluate_once(problem: &Problem, x: &[f64]) -> EvaluationResult {
    problem.evaluate(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{convex_toy, find_problem};

    fn config(budget: usize) -> SolverConfig {
        SolverConfig {
            budget,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn single_feasible_start() {
        let p = convex_toy();
        let s = Solver::new(&p, &[vec![0.5]], config(10)).unwrap();
        assert_eq!(s.list().len(), 1);
        assert_eq!(s.list().entries()[0].frame_size, 0.1);
        assert!(s.list().is_feasible_mode());
    }

    #[test]
    fn infeasible_starts_use_incumbents() {
        let p = find_problem("tnk").unwrap();
        // both starts lie inside the unit disc, which the first constraint excludes
        let s = Solver::new(&p, &[vec![0.1, 0.2], vec![0.2, 0.1]], config(10)).unwrap();
        assert!(!s.list().is_feasible_mode());
        assert_eq!(s.list().len(), 2);
        assert!(s.list().entries().iter().all(|e| s.cache().get(e.point).h() > 0.0));
    }

    #[test]
    fn mixed_starts_prefer_feasible() {
        let p = find_problem("zdt1-ball").unwrap();
        let s = Solver::new(&p, &[vec![0.5; 8], vec![0.0; 8]], config(10)).unwrap();
        assert!(s.list().is_feasible_mode());
        assert_eq!(s.list().len(), 1);
        assert!(s.cache().get(s.list().entries()[0].point).is_feasible());
    }

    #[test]
    fn start_validation() {
        let p = convex_toy();
        assert!(matches!(Solver::new(&p, &[], config(10)), Err(Error::NoStartingPoints)));
        assert!(matches!(Solver::new(&p, &[vec![0.0, 1.0]], config(10)), Err(Error::StartDimension { .. })));
        assert!(matches!(Solver::new(&p, &[vec![9.0]], config(10)), Err(Error::StartOutOfBounds { .. })));
    }

    #[test]
    fn budget_one() {
        let p = convex_toy();
        let r = solve(&p, &[vec![0.5], vec![1.0]], config(1)).unwrap();
        assert_eq!(r.history.evaluations.len(), 1);
        assert_eq!(r.front, vec![vec![0.25, 0.25]]);
    }

    #[test]
    fn scaling_roundtrip() {
        let p = find_problem("bk1").unwrap();
        let s = Scaling::for_problem(&p);
        assert_eq!(s.to_scaled(&[-5.0, 10.0]), vec![0.0, 1.0]);
        assert_eq!(s.to_original(&[0.0, 1.0]), vec![-5.0, 10.0]);
    }

    #[test]
    fn unsuccessful_iteration_shrinks_frame() {
        let p = convex_toy();
        let mut s = Solver::new(&p, &[vec![0.5]], config(200)).unwrap();
        let mut prev_max = s.list().frame_size_max();
        while s.iterate() {
            let last = s.iterations().last().unwrap();
            let now = s.list().frame_size_max();
            if last.success == SuccessClass::Unsuccessful {
                assert!(now <= prev_max);
                assert!(s.list().entries().iter().any(|e| e.frame_size == last.frame_size * 0.5));
            }
            prev_max = now;
        }
        assert!(s.records().len() <= 200);
    }

    #[test]
    fn deterministic_history() {
        let p = find_problem("fonseca").unwrap();
        let starts = p.default_starts().unwrap();
        let a = solve(&p, &starts, config(300)).unwrap();
        let b = solve(&p, &starts, config(300)).unwrap();
        assert_eq!(a.history, b.history);
    }
}
