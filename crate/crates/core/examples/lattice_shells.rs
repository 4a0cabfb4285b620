//! Dual-lattice counts against the area term of the Gauss circle problem.

use std::f64::consts::PI;

use weyl_lab::lattice::Lattice;

fn main() -> weyl_lab::Result<()> {
    for (name, lat) in [("square 2pi", Lattice::square(2, 2.0 * PI)?), ("hexagonal", Lattice::hexagonal(2.0 * PI)?)] {
        println!("{name}: covolume {:.6}, injectivity radius {:.6}", lat.covolume(), lat.injectivity_radius());
        for r in [10.5, 50.5, 200.5] {
            let count = lat.enumerate_dual(r)?.len() as f64;
            let area = PI * r * r * lat.covolume() / (2.0 * PI).powi(2);
            println!("  |k| <= {r:>6}: {count:>8} points, area term {area:>12.2}, excess {:>+9.2}", count - area);
        }
    }
    Ok(())
}
