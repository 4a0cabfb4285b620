//! The frequency-mollified projector on the torus, as a mode sum and as a sum over lattice images.

use std::f64::consts::PI;

use weyl_lab::lattice::Lattice;
use weyl_lab::manifolds::ModelManifold;
use weyl_lab::smoothing::{MollifierSpec, SmoothedProjector};

fn main() -> weyl_lab::Result<()> {
    let m = ModelManifold::flat_torus(Lattice::square(2, 2.0 * PI)?);
    let spec = MollifierSpec::for_manifold(&m)?;
    let x = [0.4, 1.0];
    for (lam, a) in [(10.0, 1.0), (10.0, 0.5), (20.0, 0.5)] {
        let p = SmoothedProjector::new(&m, &spec, lam, a)?;
        let trunc = p.validate(&x, &x)?;
        println!("lambda {lam}, A {a}: modes up to {:.1}, images within {:.3}", trunc.spectral_radius, trunc.image_radius);
        for d in [0.0, 0.3, 1.2] {
            let y = [x[0] + d, x[1]];
            println!("  d = {d:<4} spectral {:>16.12} images {:>16.12}", p.spectral(&x, &y)?, p.images(&x, &y)?);
        }
    }
    Ok(())
}
