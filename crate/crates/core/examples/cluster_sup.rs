//! Diagonal cluster sums over windows of width 1/log(lambda) on the torus.

use std::f64::consts::PI;

use weyl_lab::analysis::{cluster_sup_scan, lambda_grid, WidthRule};
use weyl_lab::lattice::Lattice;
use weyl_lab::manifolds::{DerivIndex, ModelManifold};

fn main() -> weyl_lab::Result<()> {
    let m = ModelManifold::flat_torus(Lattice::square(2, 2.0 * PI)?);
    let grid = lambda_grid(50.0, 800.0, 30, true)?;
    let r = cluster_sup_scan(&m, &grid, WidthRule::OneOverLog, DerivIndex::ZERO, &[vec![0.0, 0.0]])?;
    for (l, (v, n)) in r.lambda_grid.iter().zip(r.sup_values.iter().zip(r.normalized.as_ref().unwrap())) {
        println!("{l:>10.4} {v:>12.4} {n:>8.4}");
    }
    println!("exponent {:.3}, spread of value*log(lambda)/lambda {:.3}", r.fitted_exponent, r.normalized_spread().unwrap());
    Ok(())
}
