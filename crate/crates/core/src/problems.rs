//! Benchmark problems, line-sampling starts and the external blackbox adapter.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::process::{Command, Stdio};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::points::{EvalStatus, EvaluationResult};

pub type EvalFn = Arc<dyn Fn(&[f64]) -> EvaluationResult + Send + Sync>;
pub type FrontFn = Arc<dyn Fn(usize) -> Vec<Vec<f64>> + Send + Sync>;

#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub n_constraints: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    evaluator: EvalFn,
    /// Samples `k` points of the exact Pareto front, when known.
    pub front: Option<FrontFn>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m", &self.m)
            .field("n_constraints", &self.n_constraints)
            .finish_non_exhaustive()
    }
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        m: usize,
        n_constraints: usize,
        lower: Vec<f64>,
        upper: Vec<f64>,
        evaluator: EvalFn,
    ) -> Self {
        assert_eq!(lower.len(), upper.len());
        assert!(lower.iter().zip(&upper).all(|(l, u)| l < u), "lower must be below upper");
        Self {
            name: name.into(),
            n: lower.len(),
            m,
            n_constraints,
            lower,
            upper,
            evaluator,
            front: None,
        }
    }

    /// Wraps a plain function returning `(objectives, constraints)`.
    pub fn from_fn<F>(name: impl Into<String>, m: usize, n_constraints: usize, lower: Vec<f64>, upper: Vec<f64>, f: F) -> Self
    where
        F: Fn(&[f64]) -> (Vec<f64>, Vec<f64>) + Send + Sync + 'static,
    {
        let eval: EvalFn = Arc::new(move |x: &[f64]| {
            let (o, c) = f(x);
            EvaluationResult::new(o, c)
        });
        Self::new(name, m, n_constraints, lower, upper, eval)
    }

    pub fn with_front(mut self, front: FrontFn) -> Self {
        self.front = Some(front);
        self
    }

    pub fn is_constrained(&self) -> bool {
        self.n_constraints > 0
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|v| v.is_finite())
    }

    pub fn in_bounds(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.lower).zip(&self.upper).all(|((x, l), u)| x >= l && x <= u)
    }

    /// Calls the blackbox. Points outside the bounds are reported as such
    /// without calling it; wrong-sized outputs count as hidden failures.
    pub fn evaluate(&self, x: &[f64]) -> EvaluationResult {
        if x.len() != self.n || x.iter().any(|v| !v.is_finite()) {
            return EvaluationResult::failed(self.m, self.n_constraints, EvalStatus::HiddenFailure);
        }
        if !self.in_bounds(x) {
            return EvaluationResult::failed(self.m, self.n_constraints, EvalStatus::OutsideDomain);
        }
        let r = (self.evaluator)(x);
        if r.objectives.len() != self.m || r.constraints.len() != self.n_constraints {
            return EvaluationResult::failed(self.m, self.n_constraints, EvalStatus::HiddenFailure);
        }
        r
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    /// Default starting points: `n` points on the bounds diagonal.
    pub fn default_starts(&self) -> Result<Vec<Vec<f64>>> {
        if !self.is_bounded() {
            return Err(Error::Unbounded(self.name.clone()));
        }
        Ok(line_sample_initial_points(&self.lower, &self.upper, self.n))
    }
}

/// `lower + k/(n_p+1) (upper - lower)` for `k = 1..=n_p`.
pub fn line_sample_initial_points(lower: &[f64], upper: &[f64], n_p: usize) -> Vec<Vec<f64>> {
    (1..=n_p)
        .map(|k| {
            let t = k as f64 / (n_p + 1) as f64;
            lower.iter().zip(upper).map(|(l, u)| l + t * (u - l)).collect()
        })
        .collect()
}

/// Problem backed by an executable: one line of coordinates on stdin, `m`
/// objectives then the constraints on stdout.
pub fn external_problem(command: &str, m: usize, n_constraints: usize, lower: Vec<f64>, upper: Vec<f64>) -> Problem {
    let cmd = command.to_string();
    let eval: EvalFn = Arc::new(move |x: &[f64]| match run_external(&cmd, x, m + n_constraints) {
        Ok(values) => EvaluationResult::new(values[..m].to_vec(), values[m..].to_vec()),
        Err(_) => EvaluationResult::failed(m, n_constraints, EvalStatus::HiddenFailure),
    });
    Problem::new(format!("external:{command}"), m, n_constraints, lower, upper, eval)
}

/// Runs the external blackbox once and parses its output.
pub fn run_external(command: &str, x: &[f64], expected: usize) -> Result<Vec<f64>> {
    let mut child = Command::new(command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| Error::External(format!("cannot start `{command}`: {e}")))?;
    let line = x.iter().map(|v| format!("{v:.17e}")).collect::<Vec<_>>().join(" ");
    {
        let mut stdin = child.stdin.take().expect("piped stdin");
        // A blackbox may exit without reading its input; that is its business.
        let _ = writeln!(stdin, "{line}");
    }
    let out = child.wait_with_output()?;
    if !out.status.success() {
        return Err(Error::External(format!("`{command}` exited with {}", out.status)));
    }
    let text = String::from_utf8_lossy(&out.stdout);
    let values = text
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| Error::External(format!("non-numeric output `{t}`"))))
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != expected {
        return Err(Error::External(format!("expected {expected} values, got {}", values.len())));
    }
    Ok(values)
}

fn bounded(name: &str, m: usize, lower: Vec<f64>, upper: Vec<f64>, f: fn(&[f64]) -> Vec<f64>) -> Problem {
    Problem::from_fn(name, m, 0, lower, upper, move |x| (f(x), vec![]))
}

fn uniform(n: usize, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    (vec![lo; n], vec![hi; n])
}

fn zdt_g(x: &[f64]) -> f64 {
    1.0 + 9.0 * x[1..].iter().sum::<f64>() / (x.len() - 1) as f64
}

fn zdt1(x: &[f64]) -> Vec<f64> {
    let g = zdt_g(x);
    vec![x[0], g * (1.0 - (x[0] / g).sqrt())]
}

fn zdt2(x: &[f64]) -> Vec<f64> {
    let g = zdt_g(x);
    vec![x[0], g * (1.0 - (x[0] / g).powi(2))]
}

fn zdt3(x: &[f64]) -> Vec<f64> {
    let g = zdt_g(x);
    let r = x[0] / g;
    vec![x[0], g * (1.0 - r.sqrt() - r * (10.0 * PI * x[0]).sin())]
}

fn zdt4(x: &[f64]) -> Vec<f64> {
    let g = 1.0
        + 10.0 * (x.len() - 1) as f64
        + x[1..].iter().map(|v| v * v - 10.0 * (4.0 * PI * v).cos()).sum::<f64>();
    vec![x[0], g * (1.0 - (x[0] / g).sqrt())]
}

fn zdt6(x: &[f64]) -> Vec<f64> {
    let f1 = 1.0 - (-4.0 * x[0]).exp() * (6.0 * PI * x[0]).sin().powi(6);
    let g = 1.0 + 9.0 * (x[1..].iter().sum::<f64>() / (x.len() - 1) as f64).powf(0.25);
    vec![f1, g * (1.0 - (f1 / g).powi(2))]
}

fn fonseca(x: &[f64]) -> Vec<f64> {
    let s = 1.0 / (x.len() as f64).sqrt();
    vec![
        1.0 - (-x.iter().map(|v| (v - s).powi(2)).sum::<f64>()).exp(),
        1.0 - (-x.iter().map(|v| (v + s).powi(2)).sum::<f64>()).exp(),
    ]
}

fn kursawe(x: &[f64]) -> Vec<f64> {
    let f1 = x
        .windows(2)
        .map(|w| -10.0 * (-0.2 * (w[0] * w[0] + w[1] * w[1]).sqrt()).exp())
        .sum();
    let f2 = x.iter().map(|v| v.abs().powf(0.8) + 5.0 * (v.powi(3)).sin()).sum();
    vec![f1, f2]
}

fn bk1(x: &[f64]) -> Vec<f64> {
    vec![x[0].powi(2) + x[1].powi(2), (x[0] - 5.0).powi(2) + (x[1] - 5.0).powi(2)]
}

fn dtlz_rastrigin(tail: &[f64]) -> f64 {
    100.0
        * (tail.len() as f64
            + tail
                .iter()
                .map(|v| (v - 0.5).powi(2) - (20.0 * PI * (v - 0.5)).cos())
                .sum::<f64>())
}

fn dtlz_sphere(tail: &[f64]) -> f64 {
    tail.iter().map(|v| (v - 0.5).powi(2)).sum()
}

/// Spherical objectives from angles `theta` (in units of pi/2) and radius `1 + g`.
fn spherical(theta: &[f64], g: f64) -> Vec<f64> {
    let m = theta.len() + 1;
    (0..m)
        .map(|i| {
            let mut v = 1.0 + g;
            for t in &theta[..m - 1 - i] {
                v *= (t * PI / 2.0).cos();
            }
            if i > 0 {
                v *= (theta[m - 1 - i] * PI / 2.0).sin();
            }
            v
        })
        .collect()
}

fn dtlz1_m(x: &[f64], m: usize) -> Vec<f64> {
    let g = dtlz_rastrigin(&x[m - 1..]);
    (0..m)
        .map(|i| {
            let mut v = 0.5 * (1.0 + g);
            for xj in &x[..m - 1 - i] {
                v *= xj;
            }
            if i > 0 {
                v *= 1.0 - x[m - 1 - i];
            }
            v
        })
        .collect()
}

fn dtlz1(x: &[f64]) -> Vec<f64> {
    dtlz1_m(x, 3)
}

fn dtlz2(x: &[f64]) -> Vec<f64> {
    spherical(&x[..2], dtlz_sphere(&x[2..]))
}

fn dtlz2_biobjective(x: &[f64]) -> Vec<f64> {
    spherical(&x[..1], dtlz_sphere(&x[1..]))
}

fn dtlz3(x: &[f64]) -> Vec<f64> {
    spherical(&x[..2], dtlz_rastrigin(&x[2..]))
}

fn dtlz4(x: &[f64]) -> Vec<f64> {
    let theta: Vec<f64> = x[..2].iter().map(|v| v.powi(100)).collect();
    spherical(&theta, dtlz_sphere(&x[2..]))
}

fn dtlz5(x: &[f64]) -> Vec<f64> {
    let g = dtlz_sphere(&x[2..]);
    let t = 1.0 / (2.0 * (1.0 + g));
    let theta = [x[0], t * (1.0 + 2.0 * g * x[1])];
    spherical(&theta, g)
}

fn dtlz7(x: &[f64]) -> Vec<f64> {
    let tail = &x[2..];
    let g = 1.0 + 9.0 * tail.iter().sum::<f64>() / tail.len() as f64;
    let h = 3.0
        - x[..2]
            .iter()
            .map(|f| f / (1.0 + g) * (1.0 + (3.0 * PI * f).sin()))
            .sum::<f64>();
    vec![x[0], x[1], (1.0 + g) * h]
}

fn jin1(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    vec![
        x.iter().map(|v| v * v).sum::<f64>() / n,
        x.iter().map(|v| (v - 2.0).powi(2)).sum::<f64>() / n,
    ]
}

fn lovison1(x: &[f64]) -> Vec<f64> {
    vec![
        1.05 * x[0] * x[0] + 0.98 * x[1] * x[1],
        0.99 * (x[0] - 3.0).powi(2) + 1.03 * (x[1] - 2.5).powi(2),
    ]
}

fn vu1(x: &[f64]) -> Vec<f64> {
    vec![1.0 / (x[0] * x[0] + x[1] * x[1] + 1.0), x[0] * x[0] + 3.0 * x[1] * x[1] + 1.0]
}

fn poloni(x: &[f64]) -> Vec<f64> {
    let a1 = 0.5 * 1f64.sin() - 2.0 * 1f64.cos() + 2f64.sin() - 1.5 * 2f64.cos();
    let a2 = 1.5 * 1f64.sin() - 1f64.cos() + 2.0 * 2f64.sin() - 0.5 * 2f64.cos();
    let b1 = 0.5 * x[0].sin() - 2.0 * x[0].cos() + x[1].sin() - 1.5 * x[1].cos();
    let b2 = 1.5 * x[0].sin() - x[0].cos() + 2.0 * x[1].sin() - 0.5 * x[1].cos();
    vec![
        1.0 + (a1 - b1).powi(2) + (a2 - b2).powi(2),
        (x[0] + 3.0).powi(2) + (x[1] + 1.0).powi(2),
    ]
}

fn mop6(x: &[f64]) -> Vec<f64> {
    let q = 1.0 + 10.0 * x[1];
    let r = x[0] / q;
    vec![x[0], q * (1.0 - r * r - r * (8.0 * PI * x[0]).sin())]
}

fn sk2(x: &[f64]) -> Vec<f64> {
    let f1 = (x[0] - 2.0).powi(2) + (x[1] + 3.0).powi(2) + (x[2] - 5.0).powi(2) + (x[3] - 4.0).powi(2) - 5.0;
    let num: f64 = x.iter().map(|v| v.sin()).sum();
    let den = 1.0 + x.iter().map(|v| v * v).sum::<f64>() / 100.0;
    vec![f1, -num / den]
}

fn qv1(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let ras = |shift: f64| {
        (x.iter()
            .map(|v| (v - shift).powi(2) - 10.0 * (2.0 * PI * (v - shift)).cos() + 10.0)
            .sum::<f64>()
            / n)
            .powf(0.25)
    };
    vec![ras(0.0), ras(1.5)]
}

fn le1(x: &[f64]) -> Vec<f64> {
    vec![
        (x[0] * x[0] + x[1] * x[1]).powf(0.125),
        ((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2)).powf(0.25),
    ]
}

fn im1(x: &[f64]) -> Vec<f64> {
    vec![2.0 * x[0].sqrt(), x[0] * (1.0 - x[1]) + 5.0]
}

fn normalized(x: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    x.iter().zip(lower).zip(upper).map(|((x, l), u)| (x - l) / (u - l)).collect()
}

#[derive(Clone, Copy)]
enum Extra {
    /// `sum xhat - 0.6 n <= 0`
    Linear,
    /// `|xhat - 1/2|^2 / n - 0.06 <= 0`
    Ball,
}

/// Adds one constraint, expressed in bound-normalized coordinates, to a
/// bound-constrained problem.
fn with_extra(base: &Problem, kind: Extra) -> Problem {
    let suffix = match kind {
        Extra::Linear => "lin",
        Extra::Ball => "ball",
    };
    let inner = base.clone();
    let (lower, upper) = (base.lower.clone(), base.upper.clone());
    Problem::from_fn(
        format!("{}-{suffix}", base.name),
        base.m,
        1,
        base.lower.clone(),
        base.upper.clone(),
        move |x| {
            let r = inner.evaluate(x);
            let z = normalized(x, &lower, &upper);
            let n = z.len() as f64;
            let c = match kind {
                Extra::Linear => z.iter().sum::<f64>() - 0.6 * n,
                Extra::Ball => z.iter().map(|v| (v - 0.5).powi(2)).sum::<f64>() / n - 0.06,
            };
            (r.objectives, vec![c])
        },
    )
}

fn bnh(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (
        vec![4.0 * x[0] * x[0] + 4.0 * x[1] * x[1], (x[0] - 5.0).powi(2) + (x[1] - 5.0).powi(2)],
        vec![
            (x[0] - 5.0).powi(2) + x[1] * x[1] - 25.0,
            7.7 - (x[0] - 8.0).powi(2) - (x[1] + 3.0).powi(2),
        ],
    )
}

fn srn(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (
        vec![
            2.0 + (x[0] - 2.0).powi(2) + (x[1] - 1.0).powi(2),
            9.0 * x[0] - (x[1] - 1.0).powi(2),
        ],
        vec![x[0] * x[0] + x[1] * x[1] - 225.0, x[0] - 3.0 * x[1] + 10.0],
    )
}

fn tnk(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (
        vec![x[0], x[1]],
        vec![
            -x[0] * x[0] - x[1] * x[1] + 1.0 + 0.1 * (16.0 * x[0].atan2(x[1])).cos(),
            (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2) - 0.5,
        ],
    )
}

fn constr(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (
        vec![x[0], (1.0 + x[1]) / x[0]],
        vec![6.0 - (x[1] + 9.0 * x[0]), 1.0 - (9.0 * x[0] - x[1])],
    )
}

fn osy(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let f1 = -(25.0 * (x[0] - 2.0).powi(2)
        + (x[1] - 2.0).powi(2)
        + (x[2] - 1.0).powi(2)
        + (x[3] - 4.0).powi(2)
        + (x[4] - 1.0).powi(2));
    let f2 = x.iter().map(|v| v * v).sum();
    (
        vec![f1, f2],
        vec![
            2.0 - x[0] - x[1],
            x[0] + x[1] - 6.0,
            x[1] - x[0] - 2.0,
            x[0] - 3.0 * x[1] - 2.0,
            (x[2] - 3.0).powi(2) + x[3] - 4.0,
            4.0 - (x[4] - 3.0).powi(2) - x[5],
        ],
    )
}

type ConstrainedFn = fn(&[f64]) -> (Vec<f64>, Vec<f64>);

fn constrained(name: &str, n_constraints: usize, lower: Vec<f64>, upper: Vec<f64>, f: ConstrainedFn) -> Problem {
    Problem::from_fn(name, 2, n_constraints, lower, upper, f)
}

/// Convex biobjective toy `f = (x^2, (x-1)^2)` on `[-2, 3]`, front `f2 = (1 - sqrt f1)^2`.
pub fn convex_toy() -> Problem {
    bounded("toy", 2, vec![-2.0], vec![3.0], |x| vec![x[0] * x[0], (x[0] - 1.0).powi(2)]).with_front(Arc::new(|k| {
        (0..k)
            .map(|i| {
                let t = i as f64 / (k - 1).max(1) as f64;
                vec![t * t, (t - 1.0).powi(2)]
            })
            .collect()
    }))
}

fn zdt1_front(k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|i| {
            let t = i as f64 / (k - 1).max(1) as f64;
            vec![t, 1.0 - t.sqrt()]
        })
        .collect()
}

/// Bound-constrained benchmark problems.
pub fn bound_constrained() -> Vec<Problem> {
    let b = |n, lo, hi| uniform(n, lo, hi);
    let (l, u) = b(8, 0.0, 1.0);
    let mut zdt4_lo = vec![-5.0; 5];
    let mut zdt4_hi = vec![5.0; 5];
    zdt4_lo[0] = 0.0;
    zdt4_hi[0] = 1.0;
    vec![
        bounded("zdt1", 2, l.clone(), u.clone(), zdt1).with_front(Arc::new(zdt1_front)),
        bounded("zdt2", 2, l.clone(), u.clone(), zdt2),
        bounded("zdt3", 2, l, u, zdt3),
        bounded("zdt4", 2, zdt4_lo, zdt4_hi, zdt4),
        bounded("zdt6", 2, b(5, 0.0, 1.0).0, b(5, 0.0, 1.0).1, zdt6),
        bounded("fonseca", 2, b(3, -4.0, 4.0).0, b(3, -4.0, 4.0).1, fonseca),
        bounded("kursawe", 2, b(3, -5.0, 5.0).0, b(3, -5.0, 5.0).1, kursawe),
        bounded("bk1", 2, b(2, -5.0, 10.0).0, b(2, -5.0, 10.0).1, bk1),
        bounded("dtlz1", 3, b(7, 0.0, 1.0).0, b(7, 0.0, 1.0).1, dtlz1),
        bounded("dtlz2", 3, b(7, 0.0, 1.0).0, b(7, 0.0, 1.0).1, dtlz2),
        bounded("dtlz3", 3, b(7, 0.0, 1.0).0, b(7, 0.0, 1.0).1, dtlz3),
        bounded("dtlz4", 3, b(7, 0.0, 1.0).0, b(7, 0.0, 1.0).1, dtlz4),
        bounded("dtlz5", 3, b(7, 0.0, 1.0).0, b(7, 0.0, 1.0).1, dtlz5),
        bounded("dtlz7", 3, b(7, 0.0, 1.0).0, b(7, 0.0, 1.0).1, dtlz7),
        bounded("dtlz2-m2", 2, b(6, 0.0, 1.0).0, b(6, 0.0, 1.0).1, dtlz2_biobjective),
        bounded("jin1", 2, b(4, 0.0, 1.0).0, b(4, 0.0, 1.0).1, jin1),
        bounded("lovison1", 2, b(2, 0.0, 3.0).0, b(2, 0.0, 3.0).1, lovison1),
        bounded("vu1", 2, b(2, -3.0, 3.0).0, b(2, -3.0, 3.0).1, vu1),
        bounded("poloni", 2, b(2, -PI, PI).0, b(2, -PI, PI).1, poloni),
        bounded("mop6", 2, b(2, 0.0, 1.0).0, b(2, 0.0, 1.0).1, mop6),
        bounded("sk2", 2, b(4, -10.0, 10.0).0, b(4, -10.0, 10.0).1, sk2),
        bounded("qv1", 2, b(6, -5.12, 5.12).0, b(6, -5.12, 5.12).1, qv1),
        bounded("le1", 2, b(2, -5.0, 10.0).0, b(2, -5.0, 10.0).1, le1),
        bounded("im1", 2, vec![1.0, 1.0], vec![4.0, 2.0], im1),
    ]
}

/// Problems with inequality constraints.
pub fn constrained_problems() -> Vec<Problem> {
    let base = bound_constrained();
    let by_name = |name: &str| base.iter().find(|p| p.name == name).expect("registered base problem").clone();
    vec![
        constrained("bnh", 2, vec![0.0, 0.0], vec![5.0, 3.0], bnh),
        constrained("srn", 2, vec![-20.0; 2], vec![20.0; 2], srn),
        constrained("tnk", 2, vec![1e-12; 2], vec![PI; 2], tnk),
        constrained("constr", 2, vec![0.1, 0.0], vec![1.0, 5.0], constr),
        constrained("osy", 6, vec![0.0, 0.0, 1.0, 0.0, 1.0, 0.0], vec![10.0, 10.0, 5.0, 6.0, 5.0, 10.0], osy),
        with_extra(&by_name("zdt1"), Extra::Ball),
        with_extra(&by_name("zdt3"), Extra::Linear),
        with_extra(&by_name("fonseca"), Extra::Ball),
        with_extra(&by_name("kursawe"), Extra::Linear),
        with_extra(&by_name("bk1"), Extra::Ball),
        with_extra(&by_name("dtlz2"), Extra::Ball),
        with_extra(&by_name("jin1"), Extra::Linear),
        with_extra(&by_name("le1"), Extra::Ball),
    ]
}

/// Every registered problem, bound-constrained first.
pub fn registry() -> Vec<Problem> {
    let mut all = bound_constrained();
    all.extend(constrained_problems());
    all
}

/// Registry lookup; `toy` names the convex toy.
pub fn find_problem(name: &str) -> Result<Problem> {
    if name == "toy" {
        return Ok(convex_toy());
    }
    registry()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::UnknownProblem(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_sampling_examples() {
        assert_eq!(line_sample_initial_points(&[0.0], &[1.0], 1), vec![vec![0.5]]);
        assert_eq!(line_sample_initial_points(&[0.0], &[4.0], 3), vec![vec![1.0], vec![2.0], vec![3.0]]);
        for n_p in 1..20 {
            for p in line_sample_initial_points(&[-1.0, 2.0], &[1.0, 3.0], n_p) {
                assert!(p[0] > -1.0 && p[0] < 1.0 && p[1] > 2.0 && p[1] < 3.0);
            }
        }
    }

    #[test]
    fn registry_sizes_and_names() {
        assert!(bound_constrained().len() >= 20);
        assert!(constrained_problems().len() >= 10);
        let reg = registry();
        let mut names: Vec<&str> = reg.iter().map(|p| p.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), reg.len());
        for p in &reg {
            assert!((2..=3).contains(&p.m), "{}", p.name);
            assert!((2..=30).contains(&p.n), "{}", p.name);
        }
    }

    #[test]
    fn midpoints_evaluate() {
        for p in registry() {
            let r = p.evaluate(&p.midpoint());
            assert_eq!(r.status, EvalStatus::Ok, "{}", p.name);
            assert!(r.is_finite(), "{}", p.name);
        }
    }

    #[test]
    fn constrained_problems_have_both_classes() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for p in constrained_problems() {
            let mut feasible = false;
            let mut infeasible = false;
            for _ in 0..20_000 {
                let x: Vec<f64> = p.lower.iter().zip(&p.upper).map(|(l, u)| rng.random_range(*l..*u)).collect();
                let r = p.evaluate(&x);
                feasible |= r.is_feasible();
                infeasible |= r.violation > 0.0;
                if feasible && infeasible {
                    break;
                }
            }
            assert!(feasible && infeasible, "{}", p.name);
        }
    }

    #[test]
    fn zdt1_front_metadata() {
        let p = find_problem("zdt1").unwrap();
        let front = (p.front.as_ref().unwrap())(11);
        for y in &front {
            assert!((y[1] - (1.0 - y[0].sqrt())).abs() < 1e-15);
        }
        // points with a zero tail reach the front
        let mut x = vec![0.0; 8];
        x[0] = 0.36;
        let r = p.evaluate(&x);
        assert!((r.objectives[1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn out_of_bounds_not_evaluated() {
        let p = convex_toy();
        assert_eq!(p.evaluate(&[5.0]).status, EvalStatus::OutsideDomain);
        assert_eq!(p.evaluate(&[0.5]).objectives, vec![0.25, 0.25]);
    }

    #[test]
    fn unknown_problem() {
        assert!(matches!(find_problem("nope"), Err(Error::UnknownProblem(_))));
    }
}
