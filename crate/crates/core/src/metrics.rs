//! Hypervolume, normalization, the convergence test and profiles.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::driver::RunHistory;
use crate::points::{nondominated_vectors, pareto_compare, Dominance};

/// Objective vectors of a front approximation.
pub type Front = Vec<Vec<f64>>;

fn strictly_below(front: &[Vec<f64>], u: &[f64]) -> Vec<Vec<f64>> {
    front
        .iter()
        .filter(|y| y.len() == u.len() && y.iter().zip(u).all(|(a, b)| a < b))
        .cloned()
        .collect()
}

/// Lebesgue measure of the region dominated by `front` and bounded by `u`.
/// Points not strictly below `u` in every objective contribute nothing.
pub fn hypervolume(front: &[Vec<f64>], u: &[f64]) -> f64 {
    let pts = strictly_below(front, u);
    if pts.is_empty() {
        return 0.0;
    }
    match u.len() {
        1 => u[0] - pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
        2 => hv2d(pts, u),
        3 => hv3d(pts, u),
        4 => hv4d(pts, u),
        _ => hypervolume_recursive(&pts, u),
    }
}

fn hv2d(mut pts: Vec<Vec<f64>>, u: &[f64]) -> f64 {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut level = u[1];
    for p in &pts {
        if p[1] < level {
            area += (u[0] - p[0]) * (level - p[1]);
            level = p[1];
        }
    }
    area
}

/// Nondominated 2D staircase keyed by the first coordinate, with its area
/// against a fixed reference point.
struct Staircase {
    steps: BTreeMap<OrderedKey, f64>,
    u: [f64; 2],
    area: f64,
}

#[derive(Clone, Copy, Debug)]
struct OrderedKey(f64);

impl PartialEq for OrderedKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}

impl Eq for OrderedKey {}

impl PartialOrd for OrderedKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrderedKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Staircase {
    fn new(u: [f64; 2]) -> Self {
        Self {
            steps: BTreeMap::new(),
            u,
            area: 0.0,
        }
    }

    /// Area covered by the step starting at `x` with height `y`, up to `next_x`.
    fn slab(&self, x: f64, y: f64, next_x: f64) -> f64 {
        (next_x - x) * (self.u[1] - y)
    }

    fn next_x(&self, x: f64) -> f64 {
        use std::ops::Bound::{Excluded, Unbounded};
        self.steps
            .range((Excluded(OrderedKey(x)), Unbounded))
            .next()
            .map_or(self.u[0], |(k, _)| k.0)
    }

    fn insert(&mut self, x: f64, y: f64) {
        // Dominated by the step at or left of x?
        if let Some((_, &py)) = self.steps.range(..=OrderedKey(x)).next_back() {
            if py <= y {
                return;
            }
        }
        // The step on the left is cut at x.
        if let Some((&k, &py)) = self.steps.range(..OrderedKey(x)).next_back() {
            let nx = self.next_x(k.0);
            self.area -= self.slab(k.0, py, nx);
            self.area += self.slab(k.0, py, x);
        }
        // Remove the steps that the new point dominates.
        let dominated: Vec<(f64, f64)> = self
            .steps
            .range(OrderedKey(x)..)
            .take_while(|(_, &py)| py >= y)
            .map(|(k, &py)| (k.0, py))
            .collect();
        for (kx, ky) in &dominated {
            let nx = self.next_x(*kx);
            self.area -= self.slab(*kx, *ky, nx);
            self.steps.remove(&OrderedKey(*kx));
        }
        let nx = self.next_x(x);
        self.area += self.slab(x, y, nx);
        self.steps.insert(OrderedKey(x), y);
    }
}

fn hv3d(mut pts: Vec<Vec<f64>>, u: &[f64]) -> f64 {
    pts.sort_by(|a, b| a[2].total_cmp(&b[2]));
    let mut stairs = Staircase::new([u[0], u[1]]);
    let mut volume = 0.0;
    for (i, p) in pts.iter().enumerate() {
        stairs.insert(p[0], p[1]);
        let next_z = pts.get(i + 1).map_or(u[2], |q| q[2]);
        volume += stairs.area * (next_z - p[2]);
    }
    volume
}

fn hv4d(mut pts: Vec<Vec<f64>>, u: &[f64]) -> f64 {
    pts.sort_by(|a, b| a[3].total_cmp(&b[3]));
    let mut volume = 0.0;
    for i in 0..pts.len() {
        let next_w = pts.get(i + 1).map_or(u[3], |q| q[3]);
        let width = next_w - pts[i][3];
        if width > 0.0 {
            let slice: Vec<Vec<f64>> = pts[..=i].iter().map(|p| p[..3].to_vec()).collect();
            volume += hv3d(slice, &u[..3]) * width;
        }
    }
    volume
}

/// Slicing along the last objective, recursing down to one dimension. Used as
/// an independent cross-check of the specialised routines.
pub fn hypervolume_recursive(front: &[Vec<f64>], u: &[f64]) -> f64 {
    let mut pts = strictly_below(front, u);
    if pts.is_empty() {
        return 0.0;
    }
    let m = u.len();
    if m == 1 {
        return u[0] - pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    }
    pts.sort_by(|a, b| a[m - 1].total_cmp(&b[m - 1]));
    let mut volume = 0.0;
    for i in 0..pts.len() {
        let next = pts.get(i + 1).map_or(u[m - 1], |q| q[m - 1]);
        let width = next - pts[i][m - 1];
        if width > 0.0 {
            let slice: Vec<Vec<f64>> = pts[..=i].iter().map(|p| p[..m - 1].to_vec()).collect();
            volume += hypervolume_recursive(&slice, &u[..m - 1]) * width;
        }
    }
    volume
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationFrame {
    pub ideal: Vec<f64>,
    pub nadir: Vec<f64>,
}

/// Componentwise min and max over a nonempty front.
pub fn normalization_frame(front: &[Vec<f64>]) -> NormalizationFrame {
    assert!(!front.is_empty(), "reference front must be nonempty");
    let m = front[0].len();
    let ideal = (0..m).map(|i| front.iter().map(|y| y[i]).fold(f64::INFINITY, f64::min)).collect();
    let nadir = (0..m).map(|i| front.iter().map(|y| y[i]).fold(f64::NEG_INFINITY, f64::max)).collect();
    NormalizationFrame { ideal, nadir }
}

/// `(y - ideal) / (nadir - ideal)`, without the division in degenerate components.
pub fn transform(y: &[f64], frame: &NormalizationFrame) -> Vec<f64> {
    y.iter()
        .zip(&frame.ideal)
        .zip(&frame.nadir)
        .map(|((y, lo), hi)| if hi != lo { (y - lo) / (hi - lo) } else { y - lo })
        .collect()
}

/// Normalized hypervolume of `ye` relative to the reference front `yp`.
///
/// When the reference front has zero hypervolume (it collapses onto its own
/// nadir in some objective), the ratio is 1 if some point of `ye` is no worse
/// than the nadir in every objective and 0 otherwise.
pub fn hv_ratio(ye: &[Vec<f64>], yp: &[Vec<f64>]) -> f64 {
    let frame = normalization_frame(yp);
    hv_ratio_in(ye, yp, &frame)
}

fn hv_ratio_in(ye: &[Vec<f64>], yp: &[Vec<f64>], frame: &NormalizationFrame) -> f64 {
    let u = transform(&frame.nadir, frame);
    let t: Front = ye.iter().map(|y| transform(y, frame)).collect();
    let reference: Front = yp.iter().map(|y| transform(y, frame)).collect();
    let denom = hypervolume(&reference, &u);
    if denom > 0.0 {
        (hypervolume(&t, &u) / denom).min(1.0)
    } else if ye.iter().any(|y| y.iter().zip(&frame.nadir).all(|(a, b)| a <= b)) {
        1.0
    } else {
        0.0
    }
}

/// Whether `ye` solves the problem to tolerance `eps` against `yp`.
pub fn convergence_test(ye: &[Vec<f64>], yp: &[Vec<f64>], eps: f64) -> bool {
    if ye.is_empty() {
        return false;
    }
    hv_ratio(ye, yp) >= 1.0 - eps
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFront {
    pub front: Front,
    /// No run found a feasible point.
    pub discarded: bool,
}

/// Union of the runs' feasible fronts, filtered to its nondominated part.
pub fn build_reference_front(runs: &[Front]) -> ReferenceFront {
    let all: Front = runs.iter().flatten().cloned().collect();
    let front = nondominated_vectors(&all);
    ReferenceFront {
        discarded: front.is_empty(),
        front,
    }
}

/// Incrementally maintained nondominated archive of objective vectors.
#[derive(Clone, Debug, Default)]
pub struct Archive {
    members: Front,
}

impl Archive {
    /// Returns whether `y` entered the archive.
    pub fn insert(&mut self, y: &[f64]) -> bool {
        if y.iter().any(|v| !v.is_finite()) {
            return false;
        }
        for q in &self.members {
            if matches!(pareto_compare(q, y), Dominance::ADominates | Dominance::Equal) {
                return false;
            }
        }
        self.members.retain(|q| pareto_compare(y, q) != Dominance::ADominates);
        self.members.push(y.to_vec());
        true
    }

    pub fn members(&self) -> &[Vec<f64>] {
        &self.members
    }
}

/// Hypervolume of a growing point set, updated by exclusive contributions.
#[derive(Clone, Debug)]
pub struct IncrementalHv {
    u: Vec<f64>,
    archive: Front,
    volume: f64,
}

impl IncrementalHv {
    pub fn new(u: Vec<f64>) -> Self {
        Self {
            u,
            archive: Vec::new(),
            volume: 0.0,
        }
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Adds `y`; returns whether the hypervolume changed.
    pub fn insert(&mut self, y: &[f64]) -> bool {
        if y.len() != self.u.len() || !y.iter().zip(&self.u).all(|(a, b)| a < b) {
            return false;
        }
        if self
            .archive
            .iter()
            .any(|a| matches!(pareto_compare(a, y), Dominance::ADominates | Dominance::Equal))
        {
            return false;
        }
        let clipped: Front = self
            .archive
            .iter()
            .map(|a| a.iter().zip(y).map(|(a, y)| a.max(*y)).collect())
            .collect();
        let own: f64 = self.u.iter().zip(y).map(|(u, y)| u - y).product();
        self.volume += own - hypervolume(&nondominated_vectors(&clipped), &self.u);
        self.archive.retain(|a| pareto_compare(y, a) != Dominance::ADominates);
        self.archive.push(y.to_vec());
        true
    }
}

/// Normalized hypervolume after each evaluation that changes the feasible
/// front, as `(eval_index, ratio)`; the last evaluation is always included.
pub fn convergence_profile(history: &RunHistory, yp: &[Vec<f64>]) -> Vec<(usize, f64)> {
    let frame = normalization_frame(yp);
    let u = transform(&frame.nadir, &frame);
    let reference: Front = yp.iter().map(|y| transform(y, &frame)).collect();
    let denom = hypervolume(&reference, &u);
    let mut archive = Archive::default();
    let mut hv = IncrementalHv::new(u);
    let mut series = Vec::new();
    let mut last = 0.0;
    for r in &history.evaluations {
        if r.is_feasible() && archive.insert(&r.objectives) {
            if denom > 0.0 {
                hv.insert(&transform(&r.objectives, &frame));
                last = (hv.volume() / denom).min(1.0);
            } else if r.objectives.iter().zip(&frame.nadir).all(|(a, b)| a <= b) {
                last = 1.0;
            }
            series.push((r.index, last));
        }
    }
    let end = history.evaluations.len();
    if end > 0 && series.last().is_none_or(|&(i, _)| i != end) {
        series.push((end, last));
    }
    series
}

/// Value of a convergence series after `evals` evaluations.
pub fn ratio_at(series: &[(usize, f64)], evals: usize) -> f64 {
    series
        .iter()
        .take_while(|(i, _)| *i <= evals)
        .last()
        .map_or(0.0, |&(_, r)| r)
}

/// First evaluation count at which the series reaches `1 - eps`.
pub fn solved_at(series: &[(usize, f64)], eps: f64) -> Option<usize> {
    series.iter().find(|(_, r)| *r >= 1.0 - eps).map(|&(i, _)| i)
}

/// One problem's runs and reference data for profiling.
#[derive(Clone, Debug)]
pub struct ProblemRuns {
    pub name: String,
    pub n: usize,
    pub reference: ReferenceFront,
    /// `(solver, history)` pairs.
    pub runs: Vec<(String, RunHistory)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileTable {
    pub epsilon: f64,
    pub solvers: Vec<String>,
    /// Budget in groups of `n + 1` evaluations.
    pub groups: Vec<usize>,
    /// `fractions[s][k]`: share of problems solver `s` solved within `groups[k]`.
    pub fractions: Vec<Vec<f64>>,
    pub problems: usize,
}

impl ProfileTable {
    pub fn fraction(&self, solver: &str, groups: usize) -> Option<f64> {
        let s = self.solvers.iter().position(|x| x == solver)?;
        let k = self.groups.iter().rposition(|&g| g <= groups)?;
        Some(self.fractions[s][k])
    }

    pub fn final_fraction(&self, solver: &str) -> Option<f64> {
        let s = self.solvers.iter().position(|x| x == solver)?;
        self.fractions[s].last().copied()
    }
}

/// Evaluation count at which each run solves its problem, per solver and
/// problem (`None`: never, or problem discarded).
pub fn solve_times(problems: &[ProblemRuns], solvers: &[String], eps: f64) -> Vec<Vec<Option<usize>>> {
    solvers
        .iter()
        .map(|s| {
            problems
                .iter()
                .map(|p| {
                    if p.reference.discarded {
                        return None;
                    }
                    let (_, h) = p.runs.iter().find(|(name, _)| name == s)?;
                    solved_at(&convergence_profile(h, &p.reference.front), eps)
                })
                .collect()
        })
        .collect()
}

/// Share of non-discarded problems solved within `k (n + 1)` evaluations, for
/// every group count `k` up to the longest run.
pub fn data_profile(problems: &[ProblemRuns], eps: f64) -> ProfileTable {
    let mut solvers: Vec<String> = Vec::new();
    for p in problems {
        for (s, _) in &p.runs {
            if !solvers.contains(s) {
                solvers.push(s.clone());
            }
        }
    }
    let times = solve_times(problems, &solvers, eps);
    data_profile_from_times(problems, &solvers, &times, eps)
}

pub fn data_profile_from_times(
    problems: &[ProblemRuns],
    solvers: &[String],
    times: &[Vec<Option<usize>>],
    eps: f64,
) -> ProfileTable {
    let kept: Vec<usize> = (0..problems.len()).filter(|&i| !problems[i].reference.discarded).collect();
    let max_groups = problems
        .iter()
        .flat_map(|p| p.runs.iter().map(move |(_, h)| h.evaluations.len().div_ceil(p.n + 1)))
        .max()
        .unwrap_or(0);
    let groups: Vec<usize> = (0..=max_groups).collect();
    let fractions = times
        .iter()
        .map(|row| {
            groups
                .iter()
                .map(|&k| {
                    if kept.is_empty() {
                        return 0.0;
                    }
                    let solved = kept
                        .iter()
                        .filter(|&&i| row[i].is_some_and(|e| e <= k * (problems[i].n + 1)))
                        .count();
                    solved as f64 / kept.len() as f64
                })
                .collect()
        })
        .collect();
    ProfileTable {
        epsilon: eps,
        solvers: solvers.to_vec(),
        groups,
        fractions,
        problems: kept.len(),
    }
}
