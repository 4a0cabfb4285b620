//! Exact spectral function on the square torus and the round sphere.

use std::f64::consts::PI;

use weyl_lab::lattice::Lattice;
use weyl_lab::manifolds::{DerivIndex, ModelManifold};

fn main() -> weyl_lab::Result<()> {
    let torus = ModelManifold::flat_torus(Lattice::square(2, 2.0 * PI)?);
    let sphere = ModelManifold::round_sphere(1.0)?;
    let lam = 20.5;
    println!("torus, lambda = {lam}");
    for t in [0.0, 0.05, 0.1, 0.2, 0.4] {
        let v = torus.spectral_function(lam, &[0.0, 0.0], &[t, 0.0], DerivIndex::ZERO)?;
        println!("  d = {t:<5} E = {v:.10}");
    }
    println!("sphere, lambda = {lam}");
    for t in [0.0, 0.05, 0.1, 0.2, 0.4] {
        let v = sphere.spectral_function(lam, &[0.0, 0.0], &[t, 0.0], DerivIndex::ZERO)?;
        println!("  angle = {t:<5} E = {v:.10}");
    }
    Ok(())
}
