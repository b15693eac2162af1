//! Progressive-barrier bookkeeping and the iterate list.
//!
//! [`BarrierState`] tracks the feasible nondominated set `F`, the infeasible
//! nondominated set `U` (under the joint objective/violation relation) and the
//! threshold `h_max`. The [`IterateList`] mirrors `F` when it is nonempty and
//! the infeasible incumbents `I = {x in U : h(x) <= h_max}` otherwise, attaching
//! a frame size to every member.

use std::collections::HashMap;

use crate::points::{dominates, filter_nondominated, Cache, Dominance, EvaluatedPoint, FilterMode, PointId};

/// Entries whose frame size falls below this are frozen: never selected again.
pub const FRAME_SIZE_FLOOR: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq)]
pub struct IterateEntry {
    pub point: PointId,
    pub frame_size: f64,
    /// Mesh-unit direction of the dominating step that produced this point.
    pub last_direction: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuccessClass {
    Dominating,
    Improving,
    Unsuccessful,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterateList {
    entries: Vec<IterateEntry>,
    feasible_mode: bool,
}

impl IterateList {
    pub fn new(entries: Vec<IterateEntry>, feasible_mode: bool) -> Self {
        Self { entries, feasible_mode }
    }

    pub fn entries(&self) -> &[IterateEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when the list holds feasible points.
    pub fn is_feasible_mode(&self) -> bool {
        self.feasible_mode
    }

    pub fn frame_size_max(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.frame_size))
    }

    pub fn position(&self, id: PointId) -> Option<usize> {
        self.entries.iter().position(|e| e.point == id)
    }

    pub fn entry_mut(&mut self, id: PointId) -> Option<&mut IterateEntry> {
        self.entries.iter_mut().find(|e| e.point == id)
    }

    /// Whether the entries are pairwise nondominated (and pairwise distinct in
    /// their outputs).
    pub fn is_mutually_nondominated(&self, cache: &Cache) -> bool {
        for (i, a) in self.entries.iter().enumerate() {
            for b in &self.entries[i + 1..] {
                let rel = dominates(cache.get(a.point), cache.get(b.point));
                if matches!(rel, Dominance::ADominates | Dominance::BDominates | Dominance::Equal) {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BarrierState {
    feasible: Vec<PointId>,
    infeasible: Vec<PointId>,
    pub h_max: f64,
}

impl Default for BarrierState {
    fn default() -> Self {
        Self {
            feasible: Vec::new(),
            infeasible: Vec::new(),
            h_max: f64::INFINITY,
        }
    }
}

fn insert_nondominated(set: &mut Vec<PointId>, cache: &Cache, id: PointId) -> bool {
    let p = cache.get(id);
    for &q in set.iter() {
        match dominates(cache.get(q), p) {
            Dominance::ADominates | Dominance::Equal => return false,
            _ => {}
        }
    }
    set.retain(|&q| dominates(p, cache.get(q)) != Dominance::ADominates);
    set.push(id);
    true
}

impl BarrierState {
    /// Feasible nondominated points `F`.
    pub fn feasible(&self) -> &[PointId] {
        &self.feasible
    }

    /// Infeasible nondominated points `U` with finite violation.
    pub fn infeasible_nondominated(&self) -> &[PointId] {
        &self.infeasible
    }

    /// Infeasible incumbents `I`: members of `U` with `h <= h_max`.
    pub fn infeasible_incumbents(&self, cache: &Cache) -> Vec<PointId> {
        self.infeasible
            .iter()
            .copied()
            .filter(|&id| cache.get(id).h() <= self.h_max)
            .collect()
    }

    /// Merges freshly evaluated points into `F` and `U`.
    pub fn absorb(&mut self, cache: &Cache, new_points: &[PointId]) {
        for &id in new_points {
            let p = cache.get(id);
            if p.is_feasible() {
                insert_nondominated(&mut self.feasible, cache, id);
            } else if p.result.is_finite_infeasible() {
                insert_nondominated(&mut self.infeasible, cache, id);
            }
        }
    }
}

/// Incumbent sets recomputed from scratch over the whole cache.
pub fn rebuild_incumbents(cache: &Cache, h_max: f64) -> BarrierState {
    let all: Vec<&EvaluatedPoint> = cache.iter().collect();
    let feasible = filter_nondominated(&all, FilterMode::Feasible)
        .into_iter()
        .map(|p| p.birth)
        .collect();
    let finite_infeasible: Vec<&EvaluatedPoint> =
        all.iter().copied().filter(|p| p.result.is_finite_infeasible()).collect();
    let infeasible = filter_nondominated(&finite_infeasible, FilterMode::Infeasible)
        .into_iter()
        .map(|p| p.birth)
        .collect();
    BarrierState {
        feasible,
        infeasible,
        h_max,
    }
}

fn euclid(a: &[f64], b: &[f64], scale: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(scale)
        .map(|((x, y), s)| ((x - y) / s).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Picks the frame center among entries with `frame >= tau^w_plus * frame_max`.
///
/// Eligible entries are scored by how large a hole they border in the current
/// front (objectives normalized by the list's ranges): with two objectives the
/// larger gap to an adjacent neighbor along `f1`, otherwise the distance to the
/// nearest other entry. The largest score wins, ties going to the oldest point.
/// Returns the index of the chosen entry, or `None` when every entry is frozen.
pub fn select_frame_center(list: &IterateList, cache: &Cache, tau: f64, w_plus: u32) -> Option<usize> {
    let entries = list.entries();
    let threshold = tau.powi(w_plus as i32) * list.frame_size_max();
    let eligible: Vec<usize> = (0..entries.len())
        .filter(|&i| entries[i].frame_size >= threshold && entries[i].frame_size >= FRAME_SIZE_FLOOR)
        .collect();
    if eligible.is_empty() {
        return None;
    }
    if entries.len() == 1 {
        return Some(0);
    }
    let objectives: Vec<&[f64]> = entries.iter().map(|e| cache.get(e.point).f()).collect();
    let m = objectives[0].len();
    let scale: Vec<f64> = (0..m)
        .map(|i| {
            let (lo, hi) = objectives
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), f| (lo.min(f[i]), hi.max(f[i])));
            if hi > lo {
                hi - lo
            } else {
                1.0
            }
        })
        .collect();

    let mut scores = vec![0.0; entries.len()];
    if m == 2 {
        let mut order: Vec<usize> = (0..entries.len()).collect();
        order.sort_by(|&a, &b| {
            objectives[a][0]
                .total_cmp(&objectives[b][0])
                .then(objectives[a][1].total_cmp(&objectives[b][1]))
                .then(entries[a].point.cmp(&entries[b].point))
        });
        for (pos, &i) in order.iter().enumerate() {
            let mut s: f64 = 0.0;
            if pos > 0 {
                s = s.max(euclid(objectives[i], objectives[order[pos - 1]], &scale));
            }
            if pos + 1 < order.len() {
                s = s.max(euclid(objectives[i], objectives[order[pos + 1]], &scale));
            }
            scores[i] = s;
        }
    } else {
        let mut order: Vec<usize> = (0..entries.len()).collect();
        order.sort_by(|&a, &b| objectives[a][0].total_cmp(&objectives[b][0]));
        let mut rank = vec![0; entries.len()];
        for (pos, &i) in order.iter().enumerate() {
            rank[i] = pos;
        }
        let gap = |i: usize, j: usize| (objectives[i][0] - objectives[j][0]).abs() / scale[0];
        for &i in &eligible {
            let mut best = f64::INFINITY;
            for &j in order[..rank[i]].iter().rev() {
                if gap(i, j) >= best {
                    break;
                }
                best = best.min(euclid(objectives[i], objectives[j], &scale));
            }
            for &j in &order[rank[i] + 1..] {
                if gap(i, j) >= best {
                    break;
                }
                best = best.min(euclid(objectives[i], objectives[j], &scale));
            }
            scores[i] = best;
        }
    }

    eligible.into_iter().max_by(|&a, &b| {
        scores[a]
            .total_cmp(&scores[b])
            // older (smaller id) wins ties, so it must compare as greater
            .then(entries[b].point.cmp(&entries[a].point))
    })
}

/// Second frame center from the other feasibility class, when both classes
/// have incumbents.
pub fn select_secondary_center(state: &BarrierState, cache: &Cache, primary: PointId) -> Option<PointId> {
    let incumbents = state.infeasible_incumbents(cache);
    if state.feasible.is_empty() || incumbents.is_empty() {
        return None;
    }
    let p = cache.get(primary);
    if p.is_feasible() {
        incumbents
            .into_iter()
            .min_by(|&a, &b| cache.get(a).h().total_cmp(&cache.get(b).h()).then(a.cmp(&b)))
    } else {
        let ones = vec![1.0; p.f().len()];
        state.feasible.iter().copied().min_by(|&a, &b| {
            euclid(cache.get(a).f(), p.f(), &ones)
                .total_cmp(&euclid(cache.get(b).f(), p.f(), &ones))
                .then(a.cmp(&b))
        })
    }
}

/// New threshold: after an unsuccessful iteration, the largest violation in `U`
/// strictly below the current threshold; otherwise the largest violation among
/// the infeasible incumbents. Never increases.
pub fn update_h_max(state: &BarrierState, success: SuccessClass, cache: &Cache) -> f64 {
    let current = state.h_max;
    let candidate = if success == SuccessClass::Unsuccessful {
        state
            .infeasible
            .iter()
            .map(|&id| cache.get(id).h())
            .filter(|&h| h < current)
            .fold(None, |m: Option<f64>, h| Some(m.map_or(h, |m| m.max(h))))
    } else {
        state
            .infeasible_incumbents(cache)
            .iter()
            .map(|&id| cache.get(id).h())
            .fold(None, |m: Option<f64>, h| Some(m.map_or(h, |m| m.max(h))))
    };
    candidate.map_or(current, |c| c.min(current))
}

/// Whether a new point counts as a dominating success: it dominates one of the
/// frame centers, or it is the first feasible point while the list holds
/// infeasible ones.
pub fn dominates_any_center(cache: &Cache, id: PointId, centers: &[PointId], list_feasible: bool) -> bool {
    let p = cache.get(id);
    (!list_feasible && p.is_feasible())
        || centers
            .iter()
            .any(|&c| dominates(p, cache.get(c)) == Dominance::ADominates)
}

/// Whether a point would join the iterate list if the barrier absorbed it now.
pub fn enters_target(cache: &Cache, id: PointId, list: &IterateList, state: &BarrierState) -> bool {
    let p = cache.get(id);
    let beaten = |set: &[PointId]| {
        set.iter()
            .any(|&q| matches!(dominates(cache.get(q), p), Dominance::ADominates | Dominance::Equal))
    };
    if p.is_feasible() {
        !list.is_feasible_mode() || !beaten(&state.feasible)
    } else if p.result.is_finite_infeasible() {
        !list.is_feasible_mode() && p.h() <= state.h_max && !beaten(&state.infeasible)
    } else {
        false
    }
}

/// A point evaluated during the current iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct NewPoint {
    pub id: PointId,
    /// Mesh-unit step from the center that generated it, if known.
    pub direction: Option<Vec<f64>>,
}

/// End-of-iteration update of the barrier and the iterate list.
///
/// `centers` lists the frame centers of the iteration (primary first) and
/// `frame_size` is the primary center's frame size. Returns the success class.
pub fn update_iteration(
    list: &mut IterateList,
    state: &mut BarrierState,
    cache: &Cache,
    new_points: &[NewPoint],
    centers: &[PointId],
    frame_size: f64,
    tau: f64,
) -> SuccessClass {
    let was_feasible = list.is_feasible_mode();
    let ids: Vec<PointId> = new_points.iter().map(|p| p.id).collect();
    state.absorb(cache, &ids);

    let dominates_center = |id: PointId| dominates_any_center(cache, id, centers, was_feasible);

    let feasible_mode = !state.feasible.is_empty();
    let provisional_target: Vec<PointId> = if feasible_mode {
        state.feasible.clone()
    } else {
        state.infeasible_incumbents(cache)
    };
    let success = if ids.iter().any(|&id| dominates_center(id)) {
        SuccessClass::Dominating
    } else if ids.iter().any(|id| provisional_target.contains(id)) {
        SuccessClass::Improving
    } else {
        SuccessClass::Unsuccessful
    };

    state.h_max = update_h_max(state, success, cache);
    let target: Vec<PointId> = if feasible_mode {
        state.feasible.clone()
    } else {
        state.infeasible_incumbents(cache)
    };

    let mut previous: HashMap<PointId, IterateEntry> =
        list.entries.drain(..).map(|e| (e.point, e)).collect();
    let directions: HashMap<PointId, &Option<Vec<f64>>> =
        new_points.iter().map(|p| (p.id, &p.direction)).collect();
    let mut entries: Vec<IterateEntry> = target
        .iter()
        .map(|&id| {
            if let Some(e) = previous.remove(&id) {
                return e;
            }
            let dominating = dominates_center(id);
            IterateEntry {
                point: id,
                frame_size: if dominating { frame_size / tau } else { frame_size },
                last_direction: if dominating {
                    directions.get(&id).and_then(|d| (*d).clone())
                } else {
                    None
                },
            }
        })
        .collect();
    entries.sort_by_key(|e| e.point);
    list.entries = entries;
    list.feasible_mode = feasible_mode;

    if success == SuccessClass::Unsuccessful {
        if let Some(e) = list.entry_mut(centers[0]) {
            e.frame_size = frame_size * tau;
        }
    }
    success
}
