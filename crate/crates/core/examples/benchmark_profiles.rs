//! Benchmarks two variants on a few problems, builds reference fronts and
//! prints the resulting data profiles.

use dmultimads::cli::{cmd_bench, load_bench, profiles_for, BenchArgs, ConfigArgs, Suite};

fn main() -> dmultimads::Result<()> {
    let dir = std::env::temp_dir().join(format!("dmultimads-bench-{}", std::process::id()));
    let args = BenchArgs {
        problem: vec!["zdt1".into(), "zdt3".into(), "srn".into(), "bnh".into()],
        suite: Suite::All,
        variant: vec!["basic".into(), "Quad-DoM".into()],
        config: ConfigArgs {
            budget: Some(1500),
            seed: Some(0),
            config: None,
        },
        out: dir.clone(),
        workers: 1,
        smoke: false,
    };
    cmd_bench(&args)?;
    let problems = load_bench(&dir)?;
    let tables = profiles_for(&dir, &problems, &[0.05, 0.1], &dir.join("profiles"))?;
    for table in &tables {
        println!("eps = {} over {} problems", table.epsilon, table.problems);
        for (solver, row) in table.solvers.iter().zip(&table.fractions) {
            let marks: Vec<String> = row
                .iter()
                .step_by(row.len().div_ceil(6).max(1))
                .map(|f| format!("{f:.2}"))
                .collect();
            println!("  {solver:<9} {}", marks.join(" "));
        }
    }
    println!("artifacts in {}", dir.display());
    Ok(())
}
