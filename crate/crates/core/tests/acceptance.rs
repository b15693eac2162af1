//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line per criterion and exits non-zero if any fails.
//!
//! `cargo test --test acceptance -- <name>...` runs a subset; names are
//! lemma, hypervolume, regression, invariants, toy, trend, nm.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use dmultimads::barrier::IterateList;
use dmultimads::cli::{cmd_bench, load_bench, profiles_for, BenchArgs, ConfigArgs, RunArtifact, Suite, DEFAULT_EPSILONS};
use dmultimads::driver::{Solver, SolverConfig};
use dmultimads::formulations::{psi_distance, psi_dominance_move, ReferenceSet};
use dmultimads::mesh::{is_on_mesh, mesh_size_from_frame};
use dmultimads::metrics::{convergence_profile, hv_ratio, hypervolume, hypervolume_recursive, solved_at};
use dmultimads::models::{basis_size, fit_quadratic_regression};
use dmultimads::points::{EvaluatedPoint, EvaluationResult, PointId};
use dmultimads::problems::{bound_constrained, constrained_problems, find_problem};
use dmultimads::search::{Variant, VariantConfig};
use dmultimads::subsolvers::{best_psi, NmCoefficients};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

type Criterion = (&'static str, &'static str, Duration, fn() -> Outcome);

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [Criterion; 7] = [
        ("lemma", "dominance-move lemma on 10^4 triples", Duration::from_secs(5), lemma),
        ("hypervolume", "hypervolume vs Monte Carlo and recursion", Duration::from_secs(60), hypervolume_oracle),
        ("regression", "quadratic regression exactness", Duration::from_secs(10), regression),
        ("invariants", "mesh and barrier invariants on full runs", Duration::from_secs(120), invariants),
        ("toy", "convex toy reaches HV ratio 0.95 in 2000 evaluations", Duration::from_secs(30), toy),
        ("trend", "search variants vs basic at budget 30000", Duration::from_secs(2 * 3600 + 900), trend),
        ("nm", "Nelder-Mead invariants", Duration::from_secs(2 * 3600), nm_invariants),
    ];
    let mut failed = 0;
    for (key, title, limit, run) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| key.contains(f.as_str())) {
            continue;
        }
        let t0 = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| outcome(false, "panicked"));
        let took = t0.elapsed();
        let pass = result.pass && took <= limit;
        if !pass {
            failed += 1;
        }
        println!(
            "[{}] {key}: {title} ({:.1}s, limit {}s) {}",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            limit.as_secs(),
            result.detail
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}

fn random_incomparable_set(rng: &mut ChaCha8Rng, m: usize, k: usize) -> ReferenceSet {
    loop {
        let members: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                // points near the simplex sum(y) = 1 are rarely comparable
                let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
                let s: f64 = raw.iter().sum();
                raw.iter().map(|v| v / s * 2.0 + rng.random_range(-0.01..0.01)).collect()
            })
            .collect();
        if let Some(set) = ReferenceSet::new(members) {
            return set;
        }
    }
}

fn lemma() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut strict_ok, mut weak_ok, mut dist_ok) = (0, 0, 0);
    let trials = 10_000;
    for t in 0..trials {
        let m = 2 + t % 3;
        let k = rng.random_range(1..=8);
        let set = random_incomparable_set(&mut rng, m, k);
        let f1: Vec<f64> = (0..m).map(|_| rng.random_range(-0.5..2.5)).collect();
        let f2: Vec<f64> = f1.iter().map(|v| v + rng.random_range(1e-3..0.5)).collect();
        if psi_dominance_move(&f1, &set) < psi_dominance_move(&f2, &set) {
            strict_ok += 1;
        }
        // nonstrict: some components equal, at least one larger
        let mut f3 = f1.clone();
        for (i, v) in f3.iter_mut().enumerate() {
            if i == 0 || rng.random_bool(0.5) {
                *v += rng.random_range(1e-3..0.5);
            }
        }
        if psi_dominance_move(&f1, &set) <= psi_dominance_move(&f3, &set) {
            weak_ok += 1;
        }
        let r = &set.members()[0];
        if psi_distance(&f1, r) < psi_distance(&f2, r) && psi_distance(&f1, r) <= psi_distance(&f3, r) {
            dist_ok += 1;
        }
    }
    outcome(
        strict_ok == trials && weak_ok == trials && dist_ok == trials,
        format!("strict {strict_ok}/{trials}, nonstrict {weak_ok}/{trials}, distance {dist_ok}/{trials}"),
    )
}

fn monte_carlo(front: &[Vec<f64>], m: usize, samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut hits = 0usize;
    let mut z = vec![0.0; m];
    for _ in 0..samples {
        for v in z.iter_mut() {
            *v = rng.random::<f64>();
        }
        if front.iter().any(|y| y.iter().zip(&z).all(|(a, b)| a <= b)) {
            hits += 1;
        }
    }
    hits as f64 / samples as f64
}

fn hypervolume_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst_mc: f64 = 0.0;
    let mut worst_rec: f64 = 0.0;
    for m in 2..=4 {
        for _ in 0..50 {
            let k = rng.random_range(1..=20);
            let front: Vec<Vec<f64>> = (0..k).map(|_| (0..m).map(|_| rng.random::<f64>()).collect()).collect();
            let u = vec![1.0; m];
            let exact = hypervolume(&front, &u);
            let mc = monte_carlo(&front, m, 1_000_000, &mut rng);
            worst_mc = worst_mc.max((exact - mc).abs());
            if m == 2 {
                worst_rec = worst_rec.max((exact - hypervolume_recursive(&front, &u)).abs());
            }
        }
    }
    outcome(
        worst_mc <= 5e-3 && worst_rec <= 1e-12,
        format!("max |exact - MC| = {worst_mc:.2e}, max |sweep - recursion| = {worst_rec:.2e}"),
    )
}

struct TrueQuadratic {
    c: f64,
    g: Vec<f64>,
    h: Vec<Vec<f64>>,
}

impl TrueQuadratic {
    #[allow(clippy::needless_range_loop)]
    fn random(n: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut h = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = rng.random_range(-5.0..5.0);
                h[i][j] = v;
                h[j][i] = v;
            }
        }
        Self {
            c: rng.random_range(-5.0..5.0),
            g: (0..n).map(|_| rng.random_range(-5.0..5.0)).collect(),
            h,
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut q = 0.0;
        for (i, row) in self.h.iter().enumerate() {
            for (j, hij) in row.iter().enumerate() {
                q += x[i] * hij * x[j];
            }
        }
        self.c + self.g.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + 0.5 * q
    }
}

#[allow(clippy::needless_range_loop)]
fn regression() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (mut worst_coef, mut worst_grad): (f64, f64) = (0.0, 0.0);
    let mut failures = 0;
    for t in 0..100 {
        let n = 1 + t % 6;
        let truth = TrueQuadratic::random(n, &mut rng);
        let center: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let radius = rng.random_range(0.1..2.0);
        let points: Vec<Vec<f64>> = (0..basis_size(n))
            .map(|_| center.iter().map(|c| c + rng.random_range(-radius..radius)).collect())
            .collect();
        let values: Vec<f64> = points.iter().map(|x| truth.value(x)).collect();
        let Some(model) = fit_quadratic_regression(&points, &values) else {
            failures += 1;
            continue;
        };
        let (c, g, h) = model.absolute();
        let rel = |est: f64, exact: f64| (est - exact).abs() / exact.abs().max(1.0);
        worst_coef = worst_coef.max(rel(c, truth.c));
        for i in 0..n {
            worst_coef = worst_coef.max(rel(g[i], truth.g[i]));
            for j in 0..n {
                worst_coef = worst_coef.max(rel(h[i][j], truth.h[i][j]));
            }
        }
        let x: Vec<f64> = center.iter().map(|c| c + rng.random_range(-radius..radius)).collect();
        let grad = model.gradient(&x);
        let step = 1e-5;
        for i in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += step;
            xm[i] -= step;
            let fd = (model.value(&xp) - model.value(&xm)) / (2.0 * step);
            worst_grad = worst_grad.max(rel(grad[i], fd));
        }
    }
    outcome(
        failures == 0 && worst_coef <= 1e-8 && worst_grad <= 1e-6,
        format!("rejected fits {failures}, max coefficient error {worst_coef:.2e}, max gradient error {worst_grad:.2e}"),
    )
}

fn history_fingerprint(solver: &Solver) -> String {
    format!("{:?}", solver.history())
}

fn checked_run(problem_name: &str, variant: Variant, budget: usize, seed: u64) -> Result<String, String> {
    let problem = find_problem(problem_name).map_err(|e| e.to_string())?;
    let starts = problem.default_starts().map_err(|e| e.to_string())?;
    let config = SolverConfig {
        budget,
        seed,
        variant: VariantConfig::new(variant),
        ..SolverConfig::default()
    };
    let mut solver = Solver::new(&problem, &starts, config).map_err(|e| e.to_string())?;
    let mut checked = 0;
    let mut h_max = f64::INFINITY;
    let mut had_feasible = !solver.state().feasible().is_empty();
    let tag = format!("{problem_name}/{}", variant.name());
    while solver.iterate() {
        let cache = solver.cache();
        let list: &IterateList = solver.list();
        if !list.is_mutually_nondominated(cache) {
            return Err(format!("{tag}: list not mutually nondominated"));
        }
        let it = solver.iterations().last().expect("iteration recorded");
        if it.h_max > h_max {
            return Err(format!("{tag}: h_max increased"));
        }
        h_max = it.h_max;
        let mesh = mesh_size_from_frame(it.frame_size);
        for r in &solver.records()[checked..] {
            if r.mesh_size != mesh || !is_on_mesh(&r.scaled, &r.anchor, r.mesh_size) {
                return Err(format!("{tag}: evaluation {} off the mesh", r.index));
            }
            if !problem.in_bounds(&r.x) {
                return Err(format!("{tag}: evaluation {} out of bounds", r.index));
            }
        }
        checked = solver.records().len();
        if solver.evaluator().used() > budget {
            return Err(format!("{tag}: budget exceeded"));
        }
        let has_feasible = !solver.state().feasible().is_empty();
        if had_feasible && !has_feasible {
            return Err(format!("{tag}: feasible incumbents lost"));
        }
        had_feasible |= has_feasible;
    }
    let xs: BTreeSet<Vec<u64>> = solver
        .records()
        .iter()
        .map(|r| r.scaled.iter().map(|v| v.to_bits()).collect())
        .collect();
    if xs.len() != solver.records().len() {
        return Err(format!("{tag}: duplicate blackbox call"));
    }
    Ok(history_fingerprint(&solver))
}

fn invariants() -> Outcome {
    let problems = ["fonseca", "tnk", "bnh", "zdt3-lin", "dtlz2"];
    let mut runs = 0;
    for p in problems {
        for v in Variant::ALL {
            let first = match checked_run(p, v, 1500, 3) {
                Ok(h) => h,
                Err(e) => return outcome(false, e),
            };
            let second = match checked_run(p, v, 1500, 3) {
                Ok(h) => h,
                Err(e) => return outcome(false, e),
            };
            if first != second {
                return outcome(false, format!("{p}/{}: rerun differs", v.name()));
            }
            runs += 2;
        }
    }
    outcome(true, format!("{runs} runs on {} problems, all checks held", problems.len()))
}

fn toy() -> Outcome {
    let problem = find_problem("toy").expect("toy problem");
    let starts = problem.default_starts().expect("bounded");
    let config = SolverConfig {
        budget: 2000,
        ..SolverConfig::default()
    };
    let result = dmultimads::solve(&problem, &starts, config).expect("solve");
    let analytic = (problem.front.as_ref().expect("analytic front"))(2001);
    let ratio = hv_ratio(&result.front, &analytic);
    outcome(
        ratio >= 0.95,
        format!(
            "HV ratio {ratio:.4} after {} evaluations, front size {}",
            result.history.evaluations.len(),
            result.front.len()
        ),
    )
}

fn trend_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-trend")
}

/// Runs the benchmark into `dir` and returns its wall time.
fn run_bench(dir: &Path, smoke: bool) -> Result<Duration, String> {
    let _ = std::fs::remove_dir_all(dir);
    let args = BenchArgs {
        problem: Vec::new(),
        suite: Suite::All,
        variant: Vec::new(),
        config: ConfigArgs {
            budget: (!smoke).then_some(30_000),
            seed: Some(0),
            config: None,
        },
        out: dir.to_path_buf(),
        workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        smoke,
    };
    let start = Instant::now();
    let manifest = cmd_bench(&args).map_err(|e| e.to_string())?;
    if !manifest.failures.is_empty() {
        return Err(format!("{} runs failed", manifest.failures.len()));
    }
    Ok(start.elapsed())
}

static TREND_RAN: std::sync::OnceLock<Result<Duration, String>> = std::sync::OnceLock::new();

fn ensure_trend_bench() -> Result<Duration, String> {
    TREND_RAN.get_or_init(|| run_bench(&trend_dir(), false)).clone()
}

fn trend() -> Outcome {
    let bound = bound_constrained().len();
    let constrained = constrained_problems().len();
    if bound < 20 || constrained < 10 {
        return outcome(false, format!("suite too small: {bound} bound, {constrained} constrained"));
    }
    let smoke = match run_bench(&trend_dir().with_file_name("acceptance-smoke"), true) {
        Ok(t) => t,
        Err(e) => return outcome(false, format!("smoke: {e}")),
    };
    let full = match ensure_trend_bench() {
        Ok(t) => t,
        Err(e) => return outcome(false, e),
    };
    let dir = trend_dir();
    let problems = match load_bench(&dir) {
        Ok(p) => p,
        Err(e) => return outcome(false, e.to_string()),
    };
    if let Err(e) = profiles_for(&dir, &problems, &DEFAULT_EPSILONS, &dir.join("profiles")) {
        return outcome(false, e.to_string());
    }
    let mut solved: HashMap<String, BTreeSet<String>> = HashMap::new();
    for p in problems.iter().filter(|p| !p.reference.discarded) {
        for (solver, history) in &p.runs {
            let series = convergence_profile(history, &p.reference.front);
            if solved_at(&series, 0.1).is_some() {
                solved.entry(solver.clone()).or_default().insert(p.name.clone());
            }
        }
    }
    let count = |v: Variant| solved.get(v.name()).map_or(0, BTreeSet::len);
    let basic = count(Variant::Basic);
    let search: Vec<Variant> = Variant::ALL.into_iter().filter(|v| v.has_search()).collect();
    let best = search.iter().map(|&v| count(v)).max().unwrap_or(0);
    let pooled: BTreeSet<&String> = search.iter().filter_map(|v| solved.get(v.name())).flatten().collect();
    let per_variant: Vec<String> = Variant::ALL.iter().map(|&v| format!("{} {}", v.name(), count(v))).collect();
    let kept = problems.iter().filter(|p| !p.reference.discarded).count();
    outcome(
        best >= basic && pooled.len() > basic && smoke.as_secs() <= 300 && full.as_secs() <= 7200,
        format!(
            "eps 0.1 over {kept} problems: {}; best search {best}, pooled {}, basic {basic}; \
             bench {:.0}s, smoke {:.0}s; tables in {}",
            per_variant.join(", "),
            pooled.len(),
            full.as_secs_f64(),
            smoke.as_secs_f64(),
            dir.join("profiles").display()
        ),
    )
}

fn random_point(rng: &mut ChaCha8Rng, birth: usize) -> (EvaluatedPoint, f64) {
    // small value pools so that ties in psi and h occur often
    let h_pool: [f64; 5] = [0.0, 0.0, 0.25, 1.0, 4.0];
    let c = h_pool[rng.random_range(0..h_pool.len())];
    let result = EvaluationResult::new(vec![0.0, 0.0], vec![c.sqrt()]);
    let psi = [-1.0, 0.0, 0.5, 2.0][rng.random_range(0..4)];
    (
        EvaluatedPoint {
            x: vec![birth as f64],
            result,
            birth: PointId(birth),
        },
        psi,
    )
}

fn nm_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut violations = 0;
    for t in 0..10_000 {
        let pts: Vec<(EvaluatedPoint, f64)> = (0..3).map(|i| random_point(&mut rng, 3 * t + i)).collect();
        let values: HashMap<PointId, f64> = pts.iter().map(|(p, v)| (p.birth, *v)).collect();
        let psi = |p: &EvaluatedPoint| values[&p.birth];
        let better = |a: &EvaluatedPoint, b: &EvaluatedPoint| std::ptr::eq(best_psi(a, b, &psi), a);
        for (i, j, k) in [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)] {
            let (a, b, c) = (&pts[i].0, &pts[j].0, &pts[k].0);
            if better(a, b) && better(b, c) && !better(a, c) {
                violations += 1;
            }
        }
    }
    if violations > 0 {
        return outcome(false, format!("{violations} transitivity violations"));
    }
    if let Err(e) = ensure_trend_bench() {
        return outcome(false, e);
    }
    let dir = trend_dir();
    let coeffs = NmCoefficients::default();
    let (mut runs, mut calls, mut ordering, mut overruns, mut over_cap) = (0, 0, 0, 0, 0);
    for entry in std::fs::read_dir(&dir).expect("bench dir") {
        let entry = entry.expect("dir entry");
        for v in [Variant::NmDom, Variant::NmMulti] {
            let run_dir = entry.path().join(v.name());
            if !run_dir.join("run.json").exists() {
                continue;
            }
            let a = RunArtifact::load(&run_dir).expect("run metadata");
            runs += 1;
            calls += a.stats.nm_calls;
            ordering += a.stats.nm_ordering_violations;
            overruns += a.stats.nm_budget_overruns;
            if a.stats.nm_max_evaluations > coeffs.eval_budget(a.n) {
                over_cap += 1;
            }
        }
    }
    outcome(
        runs > 0 && ordering == 0 && overruns == 0 && over_cap == 0,
        format!(
            "transitivity 10000 triples ok; {runs} NM runs, {calls} NM calls, ordering violations {ordering}, budget overruns {overruns}, runs over cap {over_cap}"
        ),
    )
}
