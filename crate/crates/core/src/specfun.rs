//! Bessel functions of integer and half-integer order, Legendre polynomials,
//! and the radial Fourier transforms of the unit ball and unit sphere.
//!
//! The radial kernels are all expressed through the normalized ratio
//! `F_ν(r) = J_ν(r) / r^ν`, which is entire in `r` and equals
//! `1 / (2^ν Γ(ν + 1))` at the origin.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{domain, Result};

/// Below this argument the radial kernels switch to their Taylor expansion.
pub const SMALL_ARGUMENT: f64 = 1e-6;

const SERIES_LIMIT: f64 = 12.0;
const MILLER_LIMIT: f64 = 30.0;

/// Order ν of a Bessel function, stored as `2ν` so half-integers are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BesselOrder {
    twice_order: i32,
}

impl BesselOrder {
    pub fn new(twice_order: i32) -> Result<Self> {
        if twice_order < -2 {
            return domain(format!("Bessel order {} / 2 is below -1", twice_order));
        }
        Ok(Self { twice_order })
    }

    pub fn integer(n: i32) -> Result<Self> {
        Self::new(2 * n)
    }

    /// Order `(n - 2) / 2`, the sphere kernel order in dimension `n`.
    pub fn sphere(n: usize) -> Self {
        Self { twice_order: n as i32 - 2 }
    }

    /// Order `n / 2`, the ball kernel order in dimension `n`.
    pub fn ball(n: usize) -> Self {
        Self { twice_order: n as i32 }
    }

    pub fn twice_order(self) -> i32 {
        self.twice_order
    }

    pub fn value(self) -> f64 {
        self.twice_order as f64 / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.twice_order % 2 == 0
    }

    /// The order raised by `k`.
    pub fn shifted(self, k: i32) -> Self {
        Self { twice_order: self.twice_order + 2 * k }
    }
}

/// `Γ(m / 2)` for a positive integer `m`.
pub fn gamma_half_integer(m: i32) -> f64 {
    assert!(m > 0, "gamma_half_integer needs a positive argument");
    let (mut acc, mut k) = if m % 2 == 0 { (1.0, 2) } else { (PI.sqrt(), 1) };
    // Γ(x + 1) = x Γ(x), stepping x by one from Γ(1) or Γ(1/2)
    while k < m {
        acc *= k as f64 / 2.0;
        k += 2;
    }
    acc
}

/// `J_ν(x)` for `x ≥ 0`.
pub fn bessel_j(order: BesselOrder, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return domain(format!("Bessel argument must be finite and nonnegative, got {x}"));
    }
    let t = order.twice_order;
    if t % 2 == 0 {
        let n = t / 2;
        if n < 0 {
            // J_{-n} = (-1)^n J_n
            let v = bessel_integer(-n as u32, x);
            return Ok(if n % 2 == 0 { v } else { -v });
        }
        Ok(bessel_integer(n as u32, x))
    } else {
        bessel_half_integer(t, x)
    }
}

/// `J_ν(x) / x^ν`, continuous through `x = 0`.
pub fn bessel_ratio(order: BesselOrder, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return domain(format!("Bessel argument must be finite and nonnegative, got {x}"));
    }
    if x < SMALL_ARGUMENT {
        return Ok(ratio_taylor(order, x, 4));
    }
    if order.twice_order == -2 {
        // J_{-1}(x) x = -x J_1(x)
        return Ok(-x * bessel_integer(1, x));
    }
    let nu = order.value();
    Ok(bessel_j(order, x)? / x.powf(nu))
}

/// Leading `terms` terms of the Taylor series of `J_ν(x) / x^ν`.
fn ratio_taylor(order: BesselOrder, x: f64, terms: usize) -> f64 {
    if order.twice_order == -2 {
        return -x * x * ratio_taylor(BesselOrder { twice_order: 2 }, x, terms);
    }
    let nu = order.value();
    let q = -0.25 * x * x;
    let mut term = 1.0 / (2f64.powf(nu) * gamma_half_integer(order.twice_order + 2));
    let mut sum = term;
    for k in 1..terms {
        let kf = k as f64;
        term *= q / (kf * (kf + nu));
        sum += term;
    }
    sum
}

/// Power series for `J_ν(x)`, ν ≥ -1/2.
fn bessel_series(twice_order: i32, x: f64) -> f64 {
    let nu = twice_order as f64 / 2.0;
    if x == 0.0 {
        return if twice_order == 0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * x;
    let q = -half * half;
    let mut term = half.powf(nu) / gamma_half_integer(twice_order + 2);
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + nu));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() && k > half {
            break;
        }
        if k > 500.0 {
            break;
        }
        k += 1.0;
    }
    sum
}

fn bessel_integer(n: u32, x: f64) -> f64 {
    if x <= SERIES_LIMIT.max(2.0 * n as f64) {
        return bessel_series(2 * n as i32, x);
    }
    if x <= MILLER_LIMIT {
        return bessel_miller(n, x);
    }
    let (j0, j1) = hankel_j0_j1(x);
    if n == 0 {
        return j0;
    }
    // upward recurrence is stable here because x > 2n
    let (mut prev, mut cur) = (j0, j1);
    for k in 1..n {
        let next = 2.0 * k as f64 / x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Miller's backward recurrence normalized by `J_0 + 2 Σ J_{2k} = 1`.
fn bessel_miller(n: u32, x: f64) -> f64 {
    let top = (n as f64).max(x);
    let mut m = (top + 15.0 + (40.0 * top).sqrt()) as usize;
    m += m % 2;
    let mut values = vec![0.0; m + 2];
    values[m] = 1e-30;
    for j in (1..=m).rev() {
        values[j - 1] = 2.0 * j as f64 / x * values[j] - values[j + 1];
        if values[j - 1].abs() > 1e200 {
            for v in values.iter_mut() {
                *v *= 1e-200;
            }
        }
    }
    let norm = values[0] + 2.0 * values.iter().skip(2).step_by(2).sum::<f64>();
    values[n as usize] / norm
}

/// Hankel asymptotic expansion of `J_0` and `J_1` for large arguments.
fn hankel_j0_j1(x: f64) -> (f64, f64) {
    let (s, c) = x.sin_cos();
    let amp = (2.0 / (PI * x)).sqrt();
    let pq = |nu: f64| {
        let mu = 4.0 * nu * nu;
        let mut p = 1.0;
        let mut q = 0.0;
        let mut a = 1.0;
        let mut last = f64::INFINITY;
        for k in 1..200 {
            let kf = k as f64;
            a *= (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
            if a.abs() > last || a.abs() < 1e-18 {
                break;
            }
            last = a.abs();
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            if k % 2 == 0 {
                p += sign * a;
            } else {
                q += sign * a;
            }
        }
        (p, q)
    };
    let (p0, q0) = pq(0.0);
    let (p1, q1) = pq(1.0);
    // χ0 = x - π/4, χ1 = x - 3π/4, expanded to avoid rounding π/4 into x
    let cos0 = FRAC_1_SQRT_2 * (c + s);
    let sin0 = FRAC_1_SQRT_2 * (s - c);
    let cos1 = FRAC_1_SQRT_2 * (s - c);
    let sin1 = -FRAC_1_SQRT_2 * (s + c);
    (amp * (p0 * cos0 - q0 * sin0), amp * (p1 * cos1 - q1 * sin1))
}

fn bessel_half_integer(twice_order: i32, x: f64) -> Result<f64> {
    if twice_order == -1 {
        if x == 0.0 {
            return domain("J_{-1/2} is singular at x = 0");
        }
        return Ok((2.0 / (PI * x)).sqrt() * x.cos());
    }
    if twice_order == 1 {
        return Ok(if x == 0.0 { 0.0 } else { (2.0 / (PI * x)).sqrt() * x.sin() });
    }
    let nu = twice_order as f64 / 2.0;
    if x <= 4f64.max(2.0 * nu) {
        return Ok(bessel_series(twice_order, x));
    }
    let amp = (2.0 / (PI * x)).sqrt();
    let (s, c) = x.sin_cos();
    let mut prev = amp * c;
    let mut cur = amp * s;
    let mut mu = 0.5;
    while mu < nu {
        let next = 2.0 * mu / x * cur - prev;
        prev = cur;
        cur = next;
        mu += 1.0;
    }
    Ok(cur)
}

/// Legendre polynomial `P_l(x)` by the three-term recurrence.
pub fn legendre_p(l: usize, x: f64) -> Result<f64> {
    if !(x.abs() <= 1.0) {
        return domain(format!("Legendre argument must lie in [-1, 1], got {x}"));
    }
    if l == 0 {
        return Ok(1.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 1..l {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    Ok(p1)
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    PI.powf(n as f64 / 2.0) / gamma_half_integer(n as i32 + 2)
}

/// Surface area of the unit sphere `S^{n-1}` in `R^n`.
pub fn unit_sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half_integer(n as i32)
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        return domain(format!("dimension must be at least 2, got {n}"));
    }
    Ok(())
}

fn check_radius(r: f64) -> Result<()> {
    if !(r >= 0.0) || !r.is_finite() {
        return domain(format!("radius must be finite and nonnegative, got {r}"));
    }
    Ok(())
}

/// `∫_{|ξ|≤1} e^{i⟨w,ξ⟩} dξ` with `|w| = r`.
pub fn ball_fourier(n: usize, r: f64) -> Result<f64> {
    check_dim(n)?;
    check_radius(r)?;
    Ok((2.0 * PI).powf(n as f64 / 2.0) * bessel_ratio(BesselOrder::ball(n), r)?)
}

/// `∫_{S^{n-1}} e^{i⟨w,σ⟩} dσ` with `|w| = r`.
pub fn sphere_fourier(n: usize, r: f64) -> Result<f64> {
    check_dim(n)?;
    check_radius(r)?;
    Ok((2.0 * PI).powf(n as f64 / 2.0) * bessel_ratio(BesselOrder::sphere(n), r)?)
}

/// The Bessel covariance `(2π)^{-n/2} J_{(n-2)/2}(r) / r^{(n-2)/2}` of the
/// Euclidean monochromatic wave of unit frequency.
pub fn universal_covariance(n: usize, r: f64) -> Result<f64> {
    check_dim(n)?;
    check_radius(r)?;
    Ok((2.0 * PI).powf(-(n as f64) / 2.0) * bessel_ratio(BesselOrder::sphere(n), r)?)
}
