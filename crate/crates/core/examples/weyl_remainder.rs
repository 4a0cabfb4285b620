//! Growth of the diagonal remainder after the Bessel leading term on the torus.

use std::f64::consts::PI;

use weyl_lab::analysis::lambda_grid;
use weyl_lab::lattice::Lattice;
use weyl_lab::manifolds::{DerivIndex, ModelManifold};
use weyl_lab::projector::remainder_scan;

fn main() -> weyl_lab::Result<()> {
    let m = ModelManifold::flat_torus(Lattice::square(2, 2.0 * PI)?);
    let grid = lambda_grid(50.0, 400.0, 30, true)?;
    let pairs = vec![(vec![0.0, 0.0], vec![0.0, 0.0]), (vec![0.0, 0.0], vec![0.3, 0.1])];
    let plain = remainder_scan(&m, &grid, &pairs, DerivIndex::ZERO)?;
    let deriv = remainder_scan(&m, &grid, &pairs, DerivIndex::along_first_axis(1, 1)?)?;
    for (l, (a, b)) in plain.lambda_grid.iter().zip(plain.sup_values.iter().zip(&deriv.sup_values)) {
        println!("{l:>10.4} {a:>14.6e} {b:>14.6e}");
    }
    println!("fitted exponents: {:.3} and {:.3} with one derivative in each variable", plain.fitted_exponent, deriv.fitted_exponent);
    Ok(())
}
