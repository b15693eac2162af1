//! Fits a least-squares quadratic to samples of a known function and compares
//! value and gradient at a test point.

use dmultimads::models::{basis_size, fit_quadratic_regression};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn truth(x: &[f64]) -> f64 {
    1.5 - x[0] + 2.0 * x[1] + x[0] * x[0] + 0.5 * x[0] * x[1] + 3.0 * x[1] * x[1]
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 2;
    let points: Vec<Vec<f64>> = (0..2 * basis_size(n))
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let values: Vec<f64> = points.iter().map(|x| truth(x)).collect();
    let model = fit_quadratic_regression(&points, &values).expect("sample is poised");
    let (c, g, h) = model.absolute();
    println!("constant {c:.6}");
    println!("gradient at 0: {g:.6?}");
    println!("hessian {h:.6?}");
    let x = [0.3, -0.2];
    println!("value at {x:?}: model {:.9}, truth {:.9}", model.value(&x), truth(&x));
    println!("model gradient at {x:?}: {:.6?}", model.gradient(&x));
}
