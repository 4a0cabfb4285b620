//! Unit-width spectral clusters on the torus against their Bessel profile.

use std::f64::consts::PI;

use weyl_lab::lattice::Lattice;
use weyl_lab::manifolds::{DerivIndex, ModelManifold};
use weyl_lab::projector::cluster_vs_bessel;

fn main() -> weyl_lab::Result<()> {
    let m = ModelManifold::flat_torus(Lattice::square(2, 2.0 * PI)?);
    let lam = m.shift_off_spectrum(200.0)?;
    let dists: Vec<f64> = (0..=16).map(|i| 0.0025 * i as f64).collect();
    let t = cluster_vs_bessel(&m, lam, 1.0, &[0.0, 0.0], &[1.0, 0.0], &dists, DerivIndex::ZERO)?;
    println!("window ({lam}, {}], mean radius {:.4}", lam + 1.0, t.mean_radius);
    for r in &t.rows {
        println!("{:>8.4} {:>12.6} {:>12.6} {:>8.4}", r.dist, r.cluster, r.bessel_prediction, r.relative_error);
    }
    Ok(())
}
