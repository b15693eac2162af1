//! Solves a constrained problem with the progressive barrier and reports how
//! the violation threshold and the feasible front evolve.

use dmultimads::{find_problem, Solver, SolverConfig, Variant, VariantConfig};

fn main() -> dmultimads::Result<()> {
    let problem = find_problem("tnk")?;
    let config = SolverConfig {
        budget: 3000,
        variant: VariantConfig::new(Variant::QuadMulti),
        ..SolverConfig::default()
    };
    let mut solver = Solver::new(&problem, &problem.default_starts()?, config)?;
    let mut next_report = 0;
    while solver.iterate() {
        let used = solver.evaluator().used();
        if used >= next_report {
            let it = solver.iterations().last().expect("an iteration ran");
            println!(
                "evals {used:>5}  feasible {:>4}  list {:>4}  h_max {:.3e}",
                solver.state().feasible().len(),
                it.list_len,
                it.h_max
            );
            next_report += 500;
        }
    }
    let result = solver.into_result();
    let feasible = result.history.evaluations.iter().filter(|r| r.is_feasible()).count();
    println!(
        "{} evaluations, {feasible} feasible, {} points on the final front",
        result.history.evaluations.len(),
        result.front.len()
    );
    Ok(())
}
