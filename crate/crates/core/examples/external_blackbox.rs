//! Wraps an executable as a problem: it reads the coordinates on one line of
//! standard input and prints the objectives and constraints.

use std::fs;
use std::os::unix::fs::PermissionsExt;

use dmultimads::problems::external_problem;
use dmultimads::{solve, SolverConfig};

const SCRIPT: &str = "#!/bin/sh
read a b
awk -v a=\"$a\" -v b=\"$b\" 'BEGIN { print a*a + b*b, (a-1)*(a-1) + (b-1)*(b-1), 0.25 - a*b }'
";

fn main() -> dmultimads::Result<()> {
    let dir = std::env::temp_dir().join(format!("dmultimads-external-{}", std::process::id()));
    fs::create_dir_all(&dir)?;
    let script = dir.join("blackbox.sh");
    fs::write(&script, SCRIPT)?;
    fs::set_permissions(&script, fs::Permissions::from_mode(0o755))?;

    let problem = external_problem(script.to_str().expect("utf-8 path"), 2, 1, vec![-1.0, -1.0], vec![2.0, 2.0]);
    let config = SolverConfig {
        budget: 200,
        ..SolverConfig::default()
    };
    let result = solve(&problem, &problem.default_starts()?, config)?;
    println!("{} evaluations, {} front points", result.history.evaluations.len(), result.front.len());
    for (x, f) in result.front_points.iter().zip(&result.front).take(5) {
        println!("  x = {x:.3?}  f = {f:.4?}");
    }
    fs::remove_dir_all(&dir)?;
    Ok(())
}
