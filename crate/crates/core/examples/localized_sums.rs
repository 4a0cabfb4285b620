//! Sums and integrals of a polynomial weight against a localized kernel.

use weyl_lab::analysis::{localized_integral, localized_sum};

fn main() -> weyl_lab::Result<()> {
    println!("{:>6} {:>3} {:>14} {:>14} {:>8}", "lambda", "p", "sum/l^p", "integral/l^p", "ratio");
    for lam in [50.0f64, 100.0, 200.0, 400.0, 800.0] {
        for p in [0.0, 1.0, 2.0] {
            let s = localized_sum(lam, 4, p)?;
            let i = localized_integral(lam, 4, p)?;
            println!("{lam:>6} {p:>3} {:>14.8} {:>14.8} {:>8.4}", s / lam.powf(p), i / lam.powf(p), s / i);
        }
    }
    Ok(())
}
