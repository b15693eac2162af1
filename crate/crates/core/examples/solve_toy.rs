//! Solves the convex biobjective toy problem and compares the result with its
//! analytic Pareto front.

use dmultimads::metrics::hv_ratio;
use dmultimads::problems::convex_toy;
use dmultimads::{solve, SolverConfig};

fn main() -> dmultimads::Result<()> {
    let problem = convex_toy();
    let config = SolverConfig {
        budget: 2000,
        ..SolverConfig::default()
    };
    let result = solve(&problem, &problem.default_starts()?, config)?;
    let exact = (problem.front.as_ref().expect("toy has an analytic front"))(500);
    println!("evaluations: {}", result.history.evaluations.len());
    println!("front size:  {}", result.front.len());
    println!("hv ratio:    {:.4}", hv_ratio(&result.front, &exact));
    for (x, f) in result.front_points.iter().zip(&result.front).step_by(result.front.len().div_ceil(8).max(1)) {
        println!("  x = {:+.4}  f = ({:.4}, {:.4})", x[0], f[0], f[1]);
    }
    Ok(())
}
