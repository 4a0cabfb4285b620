//! Monochromatic random waves on the torus: Monte Carlo covariance and the rescaled Bessel limit.

use std::f64::consts::PI;

use weyl_lab::lattice::Lattice;
use weyl_lab::manifolds::ModelManifold;
use weyl_lab::randomwaves::RandomWaveEnsemble;

fn main() -> weyl_lab::Result<()> {
    let m = ModelManifold::flat_torus(Lattice::square(2, 2.0 * PI)?);
    let ens = RandomWaveEnsemble::new(m, 200.0, 42, 2000)?;
    println!("{} modes in ({:.6}, {:.6}]", ens.mode_count(), ens.window().0, ens.window().1);
    let x = [1.0, 2.0];
    for d in [0.0, 0.005, 0.012, 0.03] {
        let y = [x[0] + d, x[1]];
        let (mean, se) = ens.empirical_covariance(&x, &y)?;
        println!("d = {d:<6} empirical {mean:>9.5} +- {se:.5}  exact {:>9.5}", ens.exact_covariance(&x, &y)?);
    }
    for s in [0.0, 1.0, 2.4048, 4.0] {
        let e = ens.rescaled_covariance_error(&x, &[s, 0.0], &[0.0, 0.0])?;
        println!("|u - v| = {s:<7} rescaled {:>9.5}  limit {:>9.5}", e.exact_rescaled, e.universal);
    }
    Ok(())
}
