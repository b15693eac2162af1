//! Scalar formulations of the multiobjective problem and their reference data.

use crate::barrier::IterateList;
use crate::points::{pareto_compare, Cache, Dominance, PointId};

/// Finite set of pairwise incomparable objective vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceSet {
    members: Vec<Vec<f64>>,
    flat: Vec<f64>,
    blocks: Option<Blocks>,
}

const BLOCK: usize = 32;

/// Members sorted by the first objective and cut into runs of about
/// `sqrt(len)` (at least `BLOCK`), each with its componentwise bounding box.
#[derive(Clone, Debug, PartialEq)]
struct Blocks {
    m: usize,
    size: usize,
    sorted: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Blocks {
    fn build(members: &[Vec<f64>]) -> Self {
        let m = members[0].len();
        let mut order: Vec<&Vec<f64>> = members.iter().collect();
        order.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let sorted: Vec<f64> = order.into_iter().flatten().copied().collect();
        let size = BLOCK.max((members.len() as f64).sqrt() as usize);
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for chunk in sorted.chunks(size * m) {
            let mut l = vec![f64::INFINITY; m];
            let mut h = vec![f64::NEG_INFINITY; m];
            for r in chunk.chunks_exact(m) {
                for i in 0..m {
                    l[i] = l[i].min(r[i]);
                    h[i] = h[i].max(r[i]);
                }
            }
            lo.extend(l);
            hi.extend(h);
        }
        Self { m, size, sorted, lo, hi }
    }

    fn block(&self, b: usize) -> &[f64] {
        let start = b * self.size * self.m;
        &self.sorted[start..(start + self.size * self.m).min(self.sorted.len())]
    }

    /// Smallest `sum_i max(sign * (f_i - r_i), 0)` over all members, skipping
    /// blocks whose box bound cannot beat the running minimum.
    fn min_excess(&self, f: &[f64], toward_set: bool) -> f64 {
        let m = self.m;
        let excess = |r: &[f64]| -> f64 {
            let mut s = 0.0;
            for i in 0..m {
                let d = if toward_set { f[i] - r[i] } else { r[i] - f[i] };
                s += d.max(0.0);
            }
            s
        };
        let corner = if toward_set { &self.hi } else { &self.lo };
        let bounds: Vec<f64> = corner.chunks_exact(m).map(excess).collect();
        let first = (0..bounds.len())
            .min_by(|&a, &b| bounds[a].total_cmp(&bounds[b]))
            .expect("nonempty set");
        let mut best = self.block(first).chunks_exact(m).map(excess).fold(f64::INFINITY, f64::min);
        for (b, &bound) in bounds.iter().enumerate() {
            if best == 0.0 {
                break;
            }
            if b == first || bound >= best {
                continue;
            }
            best = self.block(b).chunks_exact(m).map(excess).fold(best, f64::min);
        }
        best
    }

    /// Whether some member dominates `f`. Candidates need `r_1 <= f_1`, so only
    /// a prefix of the blocks is scanned, nearest first.
    fn dominated(&self, f: &[f64]) -> bool {
        let m = self.m;
        let reach = self.lo.chunks_exact(m).take_while(|lo| lo[0] <= f[0]).count();
        (0..reach).rev().any(|b| {
            let lo = &self.lo[b * m..(b + 1) * m];
            lo.iter().zip(f).all(|(l, v)| l <= v)
                && self.block(b).chunks_exact(m).any(|r| {
                    r.iter().zip(f).all(|(r, v)| r <= v) && r.iter().zip(f).any(|(r, v)| r < v)
                })
        })
    }
}

impl ReferenceSet {
    /// Returns `None` when the set is empty or two members are comparable.
    pub fn new(members: Vec<Vec<f64>>) -> Option<Self> {
        if members.is_empty() {
            return None;
        }
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                if pareto_compare(a, b) != Dominance::Incomparable {
                    return None;
                }
            }
        }
        Some(Self::from_members(members))
    }

    fn from_members(members: Vec<Vec<f64>>) -> Self {
        let flat = members.iter().flatten().copied().collect();
        let blocks = (members.len() > 4 * BLOCK).then(|| Blocks::build(&members));
        Self { members, flat, blocks }
    }

    pub fn singleton(r: Vec<f64>) -> Self {
        Self::from_members(vec![r])
    }

    pub fn members(&self) -> &[Vec<f64>] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Signed squared distance from `fx` to the boundary of the region dominated by
/// `r`: negative inside, positive outside.
pub fn psi_distance(fx: &[f64], r: &[f64]) -> f64 {
    debug_assert_eq!(fx.len(), r.len());
    if fx.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let inside = fx.iter().zip(r).all(|(f, r)| f <= r);
    if inside {
        let slack = fx.iter().zip(r).map(|(f, r)| r - f).fold(f64::INFINITY, f64::min);
        -slack * slack
    } else {
        fx.iter().zip(r).map(|(f, r)| (f - r).max(0.0).powi(2)).sum()
    }
}

/// Dominance-move value of `fx` against `set`: minus the smallest total gain
/// over a member when no member dominates `fx`, otherwise the smallest total
/// excess over a member.
pub fn psi_dominance_move(fx: &[f64], set: &ReferenceSet) -> f64 {
    if fx.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    if let Some(blocks) = &set.blocks {
        return if blocks.dominated(fx) {
            blocks.min_excess(fx, true)
        } else {
            -blocks.min_excess(fx, false)
        };
    }
    let (to_reach, to_leave, dominated) = match fx.len() {
        2 => move_kernel::<2>(fx, &set.flat),
        3 => move_kernel::<3>(fx, &set.flat),
        4 => move_kernel::<4>(fx, &set.flat),
        _ => move_kernel_dyn(fx, &set.flat),
    };
    if dominated {
        to_reach
    } else {
        -to_leave
    }
}

/// `(min excess, min gain, some member dominates)` over a flattened set.
fn move_kernel<const M: usize>(fx: &[f64], flat: &[f64]) -> (f64, f64, bool) {
    let f: &[f64; M] = fx.try_into().expect("objective count");
    let mut dominated = false;
    let (mut to_reach, mut to_leave) = (f64::INFINITY, f64::INFINITY);
    for r in flat.chunks_exact(M) {
        let (mut up, mut down) = (0.0, 0.0);
        for i in 0..M {
            let d = f[i] - r[i];
            up += d.max(0.0);
            down += (-d).max(0.0);
        }
        dominated |= down == 0.0 && up > 0.0;
        to_reach = to_reach.min(up);
        to_leave = to_leave.min(down);
    }
    (to_reach, to_leave, dominated)
}

fn move_kernel_dyn(fx: &[f64], flat: &[f64]) -> (f64, f64, bool) {
    let mut dominated = false;
    let (mut to_reach, mut to_leave) = (f64::INFINITY, f64::INFINITY);
    for r in flat.chunks_exact(fx.len()) {
        let (mut up, mut down) = (0.0, 0.0);
        for (f, r) in fx.iter().zip(r) {
            let d = f - r;
            up += d.max(0.0);
            down += (-d).max(0.0);
        }
        dominated |= down == 0.0 && up > 0.0;
        to_reach = to_reach.min(up);
        to_leave = to_leave.min(down);
    }
    (to_reach, to_leave, dominated)
}

/// Reference vector for the distance formulation around `xk`: per objective,
/// the value of the next entry in increasing order (clamped at the last).
pub fn compute_reference_point(xk: PointId, list: &IterateList, cache: &Cache) -> Vec<f64> {
    let fk = cache.get(xk).f();
    let entries = list.entries();
    (0..fk.len())
        .map(|i| {
            let mut order: Vec<PointId> = entries.iter().map(|e| e.point).collect();
            order.sort_by(|&a, &b| cache.get(a).f()[i].total_cmp(&cache.get(b).f()[i]).then(a.cmp(&b)));
            let pos = order.iter().position(|&id| id == xk).expect("xk must belong to the list");
            let select = (pos + 1).min(order.len() - 1);
            cache.get(order[select]).f()[i]
        })
        .collect()
}

/// Objective vectors of the list other than `f(xk)`, or `{f(xk)}` for a
/// single-entry list.
pub fn build_reference_set(xk: PointId, list: &IterateList, cache: &Cache) -> ReferenceSet {
    let fk = cache.get(xk).f().to_vec();
    if list.len() <= 1 {
        return ReferenceSet::singleton(fk);
    }
    let members: Vec<Vec<f64>> = list
        .entries()
        .iter()
        .map(|e| cache.get(e.point).f())
        .filter(|f| *f != fk.as_slice())
        .map(<[f64]>::to_vec)
        .collect();
    if members.is_empty() {
        return ReferenceSet::singleton(fk);
    }
    ReferenceSet::from_members(members)
}

/// Objectives (0-based) for which `xk` attains the minimum over the list.
pub fn extreme_objective_indices(xk: PointId, list: &IterateList, cache: &Cache) -> Vec<usize> {
    let fk = cache.get(xk).f();
    (0..fk.len())
        .filter(|&i| {
            list.entries()
                .iter()
                .all(|e| fk[i] <= cache.get(e.point).f()[i])
        })
        .collect()
}
