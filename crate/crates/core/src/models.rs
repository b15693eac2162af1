//! Quadratic regression surrogates built from cached evaluations.

use nalgebra::{DMatrix, DVector};

use crate::points::{Cache, EvalStatus, EvaluatedPoint, PointId};

/// Relative singular-value tolerance below which a fit is rejected.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// `Q(x) = alpha0 + g^T (x - c) + 1/2 (x - c)^T H (x - c)` around an origin `c`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticModel {
    pub origin: Vec<f64>,
    pub alpha0: f64,
    pub g: Vec<f64>,
    /// Symmetric, row-major.
    pub h: Vec<Vec<f64>>,
}

impl QuadraticModel {
    pub fn zero(n: usize) -> Self {
        Self {
            origin: vec![0.0; n],
            alpha0: 0.0,
            g: vec![0.0; n],
            h: vec![vec![0.0; n]; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let d: Vec<f64> = x.iter().zip(&self.origin).map(|(a, b)| a - b).collect();
        let mut quad = 0.0;
        for (i, row) in self.h.iter().enumerate() {
            quad += d[i] * row.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>();
        }
        self.alpha0 + self.g.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() + 0.5 * quad
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let d: Vec<f64> = x.iter().zip(&self.origin).map(|(a, b)| a - b).collect();
        self.h
            .iter()
            .zip(&self.g)
            .map(|(row, gi)| gi + row.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    /// Coefficients `(alpha0, g, H)` of the same model written around the origin
    /// of coordinates.
    pub fn absolute(&self) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
        let c = &self.origin;
        let hc: Vec<f64> = self.h.iter().map(|row| row.iter().zip(c).map(|(a, b)| a * b).sum()).collect();
        let g: Vec<f64> = self.g.iter().zip(&hc).map(|(g, hc)| g - hc).collect();
        let gc: f64 = self.g.iter().zip(c).map(|(a, b)| a * b).sum();
        let chc: f64 = c.iter().zip(&hc).map(|(a, b)| a * b).sum();
        (self.alpha0 - gc + 0.5 * chc, g, self.h.clone())
    }
}

pub fn evaluate_model(model: &QuadraticModel, x: &[f64]) -> f64 {
    model.value(x)
}

/// Number of coefficients of a quadratic in `n` variables.
pub fn basis_size(n: usize) -> usize {
    (n + 1) * (n + 2) / 2
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    pub ids: Vec<PointId>,
    pub points: Vec<Vec<f64>>,
    pub center: Vec<f64>,
    pub radius: f64,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self, cache: &Cache, f: impl Fn(&EvaluatedPoint) -> f64) -> Vec<f64> {
        self.ids.iter().map(|&id| f(cache.get(id))).collect()
    }
}

/// Cached points with finite outputs inside `B_inf(center, rho * delta)`, at
/// most `2p` of them (nearest first, ties by age). `None` when fewer than `p`.
pub fn collect_sample_set(cache: &Cache, center: &[f64], delta: f64, rho: f64) -> Option<SampleSet> {
    assert!(rho > 1.0, "radius factor must exceed 1");
    let n = center.len();
    let p = basis_size(n);
    let radius = rho * delta;
    let mut found: Vec<(f64, PointId)> = cache
        .iter()
        .filter(|e| e.result.status == EvalStatus::Ok && e.result.is_finite())
        .filter(|e| e.x.iter().zip(center).all(|(a, b)| (a - b).abs() <= radius))
        .map(|e| {
            let d2 = e.x.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            (d2, e.birth)
        })
        .collect();
    if found.len() < p {
        return None;
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    found.truncate(2 * p);
    let ids: Vec<PointId> = found.into_iter().map(|(_, id)| id).collect();
    Some(SampleSet {
        points: ids.iter().map(|&id| cache.get(id).x.clone()).collect(),
        ids,
        center: center.to_vec(),
        radius,
    })
}

fn basis_row(z: &[f64]) -> Vec<f64> {
    let n = z.len();
    let mut row = Vec::with_capacity(basis_size(n));
    row.push(1.0);
    row.extend_from_slice(z);
    row.extend(z.iter().map(|v| 0.5 * v * v));
    for i in 0..n {
        for j in i + 1..n {
            row.push(z[i] * z[j]);
        }
    }
    row
}

/// Least-squares quadratic through `(points, values)`.
///
/// Coordinates are mapped to `[-1, 1]` over the bounding box of the points
/// before the fit. Returns `None` when there are fewer than `p` points, a value
/// is not finite, or the design matrix is numerically rank deficient.
pub fn fit_quadratic_regression(points: &[Vec<f64>], values: &[f64]) -> Option<QuadraticModel> {
    assert_eq!(points.len(), values.len());
    let n = points.first()?.len();
    let p = basis_size(n);
    if points.len() < p || values.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut mid = vec![0.0; n];
    let mut half = vec![1.0; n];
    for i in 0..n {
        let (lo, hi) = points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x[i]), hi.max(x[i])));
        mid[i] = 0.5 * (lo + hi);
        if hi > lo {
            half[i] = 0.5 * (hi - lo);
        }
    }
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|x| {
            let z: Vec<f64> = x.iter().zip(&mid).zip(&half).map(|((x, m), s)| (x - m) / s).collect();
            basis_row(&z)
        })
        .collect();
    let a = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
    let b = DVector::from_column_slice(values);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let full_rank = smax > 0.0 && smin / smax >= RANK_TOLERANCE;
    if !full_rank {
        return None;
    }
    let coef = svd.solve(&b, 0.0).ok()?;
    if coef.iter().any(|c| !c.is_finite()) {
        return None;
    }

    // Undo the scaling: z = D^{-1} (x - mid).
    let mut g = vec![0.0; n];
    let mut h = vec![vec![0.0; n]; n];
    for i in 0..n {
        g[i] = coef[1 + i] / half[i];
        h[i][i] = coef[1 + n + i] / (half[i] * half[i]);
    }
    let mut k = 1 + 2 * n;
    for i in 0..n {
        for j in i + 1..n {
            let v = coef[k] / (half[i] * half[j]);
            h[i][j] = v;
            h[j][i] = v;
            k += 1;
        }
    }
    Some(QuadraticModel {
        origin: mid,
        alpha0: coef[0],
        g,
        h,
    })
}

/// Models of one scalar function and of every constraint.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSuite {
    pub objective: QuadraticModel,
    pub constraints: Vec<QuadraticModel>,
}

/// Fits `psi` directly on the sample values, plus one model per constraint.
/// `None` as soon as one fit fails or the sample is too small.
pub fn fit_model_suite(
    cache: &Cache,
    center: &[f64],
    delta: f64,
    rho: f64,
    psi: &dyn Fn(&EvaluatedPoint) -> f64,
    n_constraints: usize,
) -> Option<ModelSuite> {
    let samples = collect_sample_set(cache, center, delta, rho)?;
    fit_suite_on(&samples, cache, psi, n_constraints)
}

pub fn fit_suite_on(
    samples: &SampleSet,
    cache: &Cache,
    psi: &dyn Fn(&EvaluatedPoint) -> f64,
    n_constraints: usize,
) -> Option<ModelSuite> {
    let objective = fit_quadratic_regression(&samples.points, &samples.values(cache, psi))?;
    let constraints = (0..n_constraints)
        .map(|j| fit_quadratic_regression(&samples.points, &samples.values(cache, |p| p.result.constraints[j])))
        .collect::<Option<Vec<_>>>()?;
    Some(ModelSuite { objective, constraints })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::EvaluationResult;

    fn fill(cache: &mut Cache, xs: &[Vec<f64>], f: impl Fn(&[f64]) -> (Vec<f64>, Vec<f64>)) {
        for x in xs {
            let (o, c) = f(x);
            cache.insert(x.clone(), EvaluationResult::new(o, c));
        }
    }

    #[test]
    fn exact_one_dimensional_square() {
        let pts: Vec<Vec<f64>> = [-1.0, 0.0, 1.0, 2.0].iter().map(|&x| vec![x]).collect();
        let vals: Vec<f64> = pts.iter().map(|x| x[0] * x[0]).collect();
        let m = fit_quadratic_regression(&pts, &vals).unwrap();
        let (a0, g, h) = m.absolute();
        assert!(a0.abs() < 1e-12);
        assert!(g[0].abs() < 1e-12);
        assert!((h[0][0] - 2.0).abs() < 1e-12);
        assert!((m.value(&[3.0]) - 9.0).abs() < 1e-10);
    }

    #[test]
    fn constant_values() {
        let pts: Vec<Vec<f64>> = [-1.0, 0.0, 1.0].iter().map(|&x| vec![x]).collect();
        let m = fit_quadratic_regression(&pts, &[4.0, 4.0, 4.0]).unwrap();
        let (a0, g, h) = m.absolute();
        assert!((a0 - 4.0).abs() < 1e-12 && g[0].abs() < 1e-12 && h[0][0].abs() < 1e-12);
    }

    #[test]
    fn zero_model_is_zero() {
        let m = QuadraticModel::zero(3);
        assert_eq!(evaluate_model(&m, &[1.0, -2.0, 5.0]), 0.0);
    }

    #[test]
    fn collinear_samples_rejected() {
        let pts: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let vals = vec![1.0; 8];
        assert!(fit_quadratic_regression(&pts, &vals).is_none());
    }

    #[test]
    fn sample_collection() {
        let cache = Cache::new();
        assert!(collect_sample_set(&cache, &[0.0], 1.0, 2.0).is_none());
        let mut cache = Cache::new();
        fill(&mut cache, &[vec![0.0], vec![0.5], vec![-0.5], vec![5.0]], |x| (vec![x[0]], vec![]));
        cache.insert(vec![0.25], EvaluationResult::new(vec![f64::INFINITY], vec![]));
        let s = collect_sample_set(&cache, &[0.0], 0.5, 2.0).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.points.iter().all(|x| x[0].abs() <= 1.0));
    }

    #[test]
    fn sample_cap_keeps_nearest() {
        let mut cache = Cache::new();
        let xs: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 * 0.01]).collect();
        fill(&mut cache, &xs, |x| (vec![x[0]], vec![]));
        let s = collect_sample_set(&cache, &[0.0], 1.0, 2.0).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(s.points.last().unwrap()[0], 0.05);
    }

    #[test]
    fn suite_fails_when_a_constraint_cannot_be_fitted() {
        let mut cache = Cache::new();
        let xs: Vec<Vec<f64>> = [-1.0, 0.0, 1.0].iter().map(|&x| vec![x]).collect();
        fill(&mut cache, &xs, |x| (vec![x[0] * x[0]], vec![x[0] - 1.0]));
        let psi = |p: &EvaluatedPoint| p.f()[0];
        let suite = fit_model_suite(&cache, &[0.0], 1.0, 2.0, &psi, 1).unwrap();
        assert!((suite.objective.value(&[0.5]) - 0.25).abs() < 1e-12);
        assert_eq!(suite.constraints.len(), 1);

        // a non-finite constraint value makes that point unusable, leaving too few samples
        let mut small = Cache::new();
        fill(&mut small, &xs[..2], |x| (vec![x[0]], vec![x[0]]));
        small.insert(vec![1.0], EvaluationResult::new(vec![1.0], vec![f64::INFINITY]));
        assert!(fit_model_suite(&small, &[0.0], 1.0, 2.0, &psi, 1).is_none());
    }

    #[test]
    fn psi_fit_reproduces_quadratic_objective() {
        let mut cache = Cache::new();
        let mut xs = Vec::new();
        for i in -2..=2 {
            for j in -2..=2 {
                xs.push(vec![i as f64 * 0.1, j as f64 * 0.1]);
            }
        }
        let f = |x: &[f64]| 1.0 + x[0] - 2.0 * x[1] + 3.0 * x[0] * x[1] + x[1] * x[1];
        fill(&mut cache, &xs, |x| (vec![f(x), 0.0], vec![]));
        let psi = |p: &EvaluatedPoint| p.f()[0];
        let suite = fit_model_suite(&cache, &[0.0, 0.0], 0.2, 2.0, &psi, 0).unwrap();
        for x in &xs {
            assert!((suite.objective.value(x) - f(x)).abs() < 1e-10);
        }
    }
}
