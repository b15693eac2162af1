//! Runs every solver variant on one registry problem and prints the search
//! statistics and final hypervolume ratio of each.
//!
//! Usage: `cargo run --release --example variants -- [problem] [budget]`

use dmultimads::metrics::{build_reference_front, hv_ratio};
use dmultimads::{find_problem, solve, SolverConfig, Variant, VariantConfig};

fn main() -> dmultimads::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "zdt1".into());
    let budget = args.next().map_or(3000, |b| b.parse().expect("budget must be an integer"));
    let problem = find_problem(&name)?;
    let starts = problem.default_starts()?;

    let mut runs = Vec::new();
    for variant in Variant::ALL {
        let config = SolverConfig {
            budget,
            variant: VariantConfig::new(variant),
            ..SolverConfig::default()
        };
        runs.push((variant, solve(&problem, &starts, config)?));
    }
    let fronts: Vec<_> = runs.iter().map(|(_, r)| r.front.clone()).collect();
    let reference = build_reference_front(&fronts);

    println!("{name}: n = {}, m = {}, budget {budget}", problem.n, problem.m);
    println!("{:<11} {:>6} {:>6} {:>9} {:>9} {:>8}", "variant", "evals", "front", "searches", "search ev", "hv ratio");
    for (variant, r) in &runs {
        let ratio = if reference.discarded { 0.0 } else { hv_ratio(&r.front, &reference.front) };
        println!(
            "{:<11} {:>6} {:>6} {:>9} {:>9} {:>8.4}",
            variant.name(),
            r.history.evaluations.len(),
            r.front.len(),
            r.stats.searches,
            r.stats.search_evaluations,
            ratio
        );
    }
    Ok(())
}
