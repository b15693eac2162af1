//! Exact hypervolume in two, three and four objectives, checked against the
//! generic slicing recursion.

use dmultimads::metrics::{hv_ratio, hypervolume, hypervolume_recursive};

fn main() {
    let square = vec![vec![0.0, 0.5], vec![0.5, 0.0]];
    println!("2d staircase: {}", hypervolume(&square, &[1.0, 1.0]));

    let simplex: Vec<Vec<f64>> = (0..=10)
        .flat_map(|i| (0..=10 - i).map(move |j| vec![i as f64 / 10.0, j as f64 / 10.0, (10 - i - j) as f64 / 10.0]))
        .collect();
    let u = [1.1, 1.1, 1.1];
    println!(
        "3d simplex grid: {:.6} (recursive {:.6})",
        hypervolume(&simplex, &u),
        hypervolume_recursive(&simplex, &u)
    );

    let corners: Vec<Vec<f64>> = (0..4)
        .map(|k| (0..4).map(|i| if i == k { 0.0 } else { 0.5 }).collect())
        .collect();
    let u = [1.0; 4];
    println!(
        "4d corners: {:.6} (recursive {:.6})",
        hypervolume(&corners, &u),
        hypervolume_recursive(&corners, &u)
    );

    let approx = vec![vec![0.0, 1.0], vec![0.6, 0.6], vec![1.0, 0.0]];
    let reference = vec![vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 0.0]];
    println!("normalized ratio: {:.4}", hv_ratio(&approx, &reference));
}
