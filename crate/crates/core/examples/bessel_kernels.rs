//! Bessel functions and the universal covariance of Euclidean monochromatic waves.

use weyl_lab::specfun::{bessel_j, ball_fourier, universal_covariance, BesselOrder};

fn main() -> weyl_lab::Result<()> {
    println!("{:>6} {:>14} {:>14} {:>14}", "r", "J_0(r)", "J_1/2(r)", "cov_2(r)");
    for i in 0..=12 {
        let r = 0.5 * i as f64;
        println!(
            "{r:>6.2} {:>14.10} {:>14.10} {:>14.10}",
            bessel_j(BesselOrder::integer(0)?, r)?,
            bessel_j(BesselOrder::new(1)?, r)?,
            universal_covariance(2, r)?
        );
    }
    // the Fourier transform of the unit disk at 0 is its area
    println!("disk transform at 0: {} (pi = {})", ball_fourier(2, 0.0)?, std::f64::consts::PI);
    Ok(())
}
