//! Mesh and frame geometry.
//!
//! The mesh around a center `c` with size `delta` is the lattice
//! `{c + delta * z : z integer}` (the positive spanning matrix is `[-I I]`, so
//! the frame box bound `b` is 1). Poll directions are integer vectors built from
//! a scaled Householder matrix, which keeps them exactly orthogonal.

use rand::Rng;
use rand_distr::StandardNormal;

pub const DEFAULT_TAU: f64 = 0.5;
pub const DEFAULT_W_PLUS: u32 = 3;

/// `min(frame, frame^2)`.
pub fn mesh_size_from_frame(frame: f64) -> f64 {
    assert!(frame > 0.0, "frame size must be positive, got {frame}");
    frame.min(frame * frame)
}

pub fn refine(frame: f64, tau: f64) -> f64 {
    assert!(frame > 0.0);
    frame * tau
}

pub fn coarsen(frame: f64, tau: f64) -> f64 {
    assert!(frame > 0.0);
    frame / tau
}

/// Frame and mesh sizes of one incumbent, with the adjustment constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshParameters {
    pub frame_size: f64,
    pub mesh_size: f64,
    pub tau: f64,
    pub w_plus: u32,
}

impl MeshParameters {
    pub fn new(frame_size: f64, tau: f64, w_plus: u32) -> Self {
        assert!(tau > 0.0 && tau < 1.0, "tau must lie in (0, 1)");
        Self {
            frame_size,
            mesh_size: mesh_size_from_frame(frame_size),
            tau,
            w_plus,
        }
    }

    pub fn refined(self) -> Self {
        Self::new(refine(self.frame_size, self.tau), self.tau, self.w_plus)
    }

    pub fn coarsened(self) -> Self {
        Self::new(coarsen(self.frame_size, self.tau), self.tau, self.w_plus)
    }
}

/// Nearest mesh point to `y` on the lattice anchored at `center`, rounding half
/// away from zero.
pub fn project_to_mesh(y: &[f64], center: &[f64], mesh_size: f64) -> Vec<f64> {
    assert!(mesh_size > 0.0);
    y.iter()
        .zip(center)
        .map(|(&yi, &ci)| ci + mesh_size * ((yi - ci) / mesh_size).round())
        .collect()
}

/// Whether `y` is a fixed point of [`project_to_mesh`].
pub fn is_on_mesh(y: &[f64], center: &[f64], mesh_size: f64) -> bool {
    project_to_mesh(y, center, mesh_size)
        .iter()
        .zip(y)
        .all(|(a, b)| a.to_bits() == b.to_bits() || (*a == 0.0 && *b == 0.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PollDirections {
    /// Integer-valued directions in mesh units.
    pub directions: Vec<Vec<f64>>,
    pub box_bound: f64,
}


/// Columns of `|q|^2 I - 2 q q^T` for an integer vector `q`.
fn householder_columns(q: &[i64]) -> Vec<Vec<f64>> {
    let n = q.len();
    let norm2: i64 = q.iter().map(|v| v * v).sum();
    (0..n)
        .map(|j| {
            (0..n)
                .map(|i| {
                    let diag = if i == j { norm2 } else { 0 };
                    (diag - 2 * q[i] * q[j]) as f64
                })
                .collect()
        })
        .collect()
}

/// Whether every entry of `|q|^2 I - 2 q q^T` and of its negated column sum
/// is at most `ratio` in magnitude.
fn householder_fits(q: &[i64], ratio: f64) -> bool {
    let norm2: i64 = q.iter().map(|v| v * v).sum();
    let sum: i64 = q.iter().sum();
    let (mut top, mut second) = (0i64, 0i64);
    for &c in q {
        let a = c.abs();
        if a > top {
            second = top;
            top = a;
        } else if a > second {
            second = a;
        }
    }
    let off_diag = 2 * top * second;
    let entries = q.iter().map(|&c| (norm2 - 2 * c * c).abs()).max().unwrap_or(0).max(off_diag);
    let neg_sum = q.iter().map(|&c| (norm2 - 2 * c * sum).abs()).max().unwrap_or(0);
    entries as f64 <= ratio && neg_sum as f64 <= ratio
}

fn negative_sum(columns: &[Vec<f64>]) -> Vec<f64> {
    let n = columns.first().map_or(0, Vec::len);
    (0..n).map(|i| -columns.iter().map(|c| c[i]).sum::<f64>()).collect()
}

fn random_unit<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Largest integer Householder basis whose columns and negative sum all fit in
/// the frame, i.e. have infinity norm at most `frame / mesh`.
fn orthogonal_basis<R: Rng + ?Sized>(n: usize, ratio: f64, rng: &mut R) -> Vec<Vec<f64>> {
    let v = random_unit(n, rng);
    let mut q = vec![0i64; n];
    let mut alpha = ratio.sqrt();
    while alpha > 0.5 {
        for (qi, x) in q.iter_mut().zip(&v) {
            *qi = (alpha * x).round() as i64;
        }
        if q.iter().any(|&c| c != 0) && householder_fits(&q, ratio) {
            return householder_columns(&q);
        }
        alpha *= 0.97;
    }
    // Fallback: the signed unit vector along the dominant component.
    let (imax, _) = v
        .iter()
        .enumerate()
        .fold((0, 0.0), |(bi, bv), (i, x)| if x.abs() > bv { (i, x.abs()) } else { (bi, bv) });
    let mut q = vec![0i64; n];
    q[imax] = if v[imax] < 0.0 { -1 } else { 1 };
    householder_columns(&q)
}

/// `n` orthogonal integer directions plus their negative sum.
pub fn generate_poll_directions<R: Rng + ?Sized>(n: usize, frame: f64, mesh: f64, rng: &mut R) -> PollDirections {
    assert!(n >= 1);
    assert!(mesh > 0.0 && mesh <= frame, "need 0 < mesh <= frame");
    let ratio = (frame / mesh).max(1.0);
    let mut directions = orthogonal_basis(n, ratio, rng);
    directions.push(negative_sum(&directions));
    PollDirections {
        directions,
        box_bound: 1.0,
    }
}

/// Two opposite directions `+d, -d` for a reduced poll.
pub fn generate_pair_directions<R: Rng + ?Sized>(n: usize, frame: f64, mesh: f64, rng: &mut R) -> PollDirections {
    let ratio = (frame / mesh).max(1.0);
    let d = orthogonal_basis(n, ratio, rng).swap_remove(0);
    let neg = d.iter().map(|x| -x).collect();
    PollDirections {
        directions: vec![d, neg],
        box_bound: 1.0,
    }
}

pub fn build_poll_set(center: &[f64], dirs: &PollDirections, mesh: f64) -> Vec<Vec<f64>> {
    dirs.directions
        .iter()
        .map(|d| {
            let raw: Vec<f64> = center.iter().zip(d).map(|(c, di)| c + mesh * di).collect();
            project_to_mesh(&raw, center, mesh)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mesh_size_examples() {
        assert_eq!(mesh_size_from_frame(1.0), 1.0);
        assert_eq!(mesh_size_from_frame(0.5), 0.25);
        assert_eq!(mesh_size_from_frame(2.0), 2.0);
    }

    #[test]
    #[should_panic]
    fn nonpositive_frame_panics() {
        mesh_size_from_frame(0.0);
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_to_mesh(&[0.74, -0.26], &[0.0, 0.0], 0.5), vec![0.5, -0.5]);
        assert_eq!(project_to_mesh(&[3.0, -2.0], &[0.0, 0.0], 1.0), vec![3.0, -2.0]);
        let on = vec![0.75, -0.25];
        assert_eq!(project_to_mesh(&on, &[0.0, 0.0], 0.25), on);
        // half away from zero
        assert_eq!(project_to_mesh(&[0.25, -0.25], &[0.0, 0.0], 0.5), vec![0.5, -0.5]);
    }

    #[test]
    fn refine_coarsen_exact() {
        assert_eq!(refine(1.0, 0.5), 0.5);
        let d = 0.1;
        assert_eq!(coarsen(refine(d, 0.5), 0.5), d);
        let mut x = 0.3;
        for _ in 0..20 {
            x = refine(x, 0.5);
        }
        assert_eq!(x, 0.3 * 0.5f64.powi(20));
        let p = MeshParameters::new(0.5, 0.5, 3).refined();
        assert!(p.mesh_size <= p.frame_size);
    }

    #[test]
    fn one_dimensional_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dirs = generate_poll_directions(1, 1.0, 1.0, &mut rng);
        assert_eq!(dirs.directions.len(), 2);
        assert_eq!(dirs.directions[0][0], -dirs.directions[1][0]);
        assert!(dirs.directions[0][0] != 0.0);
    }

    #[test]
    fn poll_set_examples() {
        let dirs = PollDirections {
            directions: vec![vec![1.0], vec![-1.0]],
            box_bound: 1.0,
        };
        assert_eq!(build_poll_set(&[0.0], &dirs, 0.25), vec![vec![0.25], vec![-0.25]]);
        let empty = PollDirections {
            directions: vec![],
            box_bound: 1.0,
        };
        assert!(build_poll_set(&[0.0], &empty, 0.25).is_empty());
    }

    #[test]
    fn directions_orthogonal_and_in_frame() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=12 {
            for &frame in &[1.0, 0.5, 0.1, 0.0125, 3.0e-4] {
                let mesh = mesh_size_from_frame(frame);
                let dirs = generate_poll_directions(n, frame, mesh, &mut rng);
                assert_eq!(dirs.directions.len(), n + 1);
                for i in 0..n {
                    for j in 0..n {
                        let dot: f64 = dirs.directions[i].iter().zip(&dirs.directions[j]).map(|(a, b)| a * b).sum();
                        if i != j {
                            assert_eq!(dot, 0.0);
                        } else {
                            assert!(dot > 0.0);
                        }
                    }
                }
                let sum = negative_sum(&dirs.directions[..n]);
                assert_eq!(sum, dirs.directions[n]);
                let center = vec![0.3; n];
                for p in build_poll_set(&center, &dirs, mesh) {
                    assert!(is_on_mesh(&p, &center, mesh));
                    let dist = p.iter().zip(&center).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                    assert!(dist <= frame * dirs.box_bound * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn directions_positively_span() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2usize, 3, 5] {
            let dirs = generate_poll_directions(n, 0.25, mesh_size_from_frame(0.25), &mut rng);
            for _ in 0..1000 {
                let v = random_unit(n, &mut rng);
                assert!(dirs
                    .directions
                    .iter()
                    .any(|d| d.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() > 0.0));
            }
        }
    }

    #[test]
    fn directions_deterministic() {
        let a = generate_poll_directions(4, 0.5, 0.25, &mut ChaCha8Rng::seed_from_u64(3));
        let b = generate_poll_directions(4, 0.5, 0.25, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }
}
