//! Evaluates the distance and dominance-move formulations around a small
//! iterate list, the scalar targets of the search steps.

use dmultimads::formulations::{psi_distance, psi_dominance_move, ReferenceSet};

fn main() {
    let set = ReferenceSet::new(vec![vec![0.0, 2.0], vec![1.0, 1.0], vec![2.0, 0.0]]).expect("incomparable members");
    let r = [1.0, 1.0];
    println!("{:>12} {:>10} {:>10}", "f", "distance", "dom-move");
    for f in [[0.5, 0.5], [1.0, 1.0], [1.5, 1.5], [3.0, 3.0], [0.0, 3.0]] {
        println!(
            "{:>12} {:>10.4} {:>10.4}",
            format!("({}, {})", f[0], f[1]),
            psi_distance(&f, &r) + 0.0,
            psi_dominance_move(&f, &set) + 0.0
        );
    }
}
