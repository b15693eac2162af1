//! Nelder-Mead trial points of a simplex, before and after projection onto a
//! mesh, and the evaluation budget granted per search step.

use dmultimads::subsolvers::{nm_candidates, simplex_volume_ratio, NmCoefficients};

fn main() {
    let coeffs = NmCoefficients::default();
    let simplex = vec![vec![0.0, 0.0], vec![0.3, 0.0], vec![0.0, 0.7]];
    let refs: Vec<&[f64]> = simplex.iter().map(Vec::as_slice).collect();
    println!("volume ratio {:.4}", simplex_volume_ratio(&refs));

    let raw = nm_candidates(&simplex, &coeffs);
    let mesh = 1.0 / 8.0;
    let projected = raw.projected(&simplex[0], mesh);
    for (label, a, b) in [
        ("reflection", &raw.reflection, &projected.reflection),
        ("expansion", &raw.expansion, &projected.expansion),
        ("outside contraction", &raw.outside_contraction, &projected.outside_contraction),
        ("inside contraction", &raw.inside_contraction, &projected.inside_contraction),
    ] {
        println!("{label:<20} {a:.4?} -> {b:.4?}");
    }
    for n in [2, 10, 30] {
        println!("true evaluations per search with n = {n}: {}", coeffs.eval_budget(n));
    }
}
