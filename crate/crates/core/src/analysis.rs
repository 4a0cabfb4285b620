//! Exponent fitting, localized sums and integrals, and cluster sup-scans.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::manifolds::{DerivIndex, ModelManifold};
use crate::quadrature::adaptive;
use crate::randomwaves::{gaussian, uniform};

/// Least-squares line through `(log x, log y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub max_abs_residual: f64,
    pub grid_size: usize,
}

/// Per-λ sup values of some experiment together with their fitted growth exponent.
///
/// `lambda_grid` holds the λ values actually evaluated, which may sit slightly
/// above the requested nodes when those lie on the spectrum. `normalized`
/// carries an experiment-specific rescaling of `sup_values` when one applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub lambda_grid: Vec<f64>,
    pub sup_values: Vec<f64>,
    pub fitted_exponent: f64,
    pub fit_residual: f64,
    pub normalized: Option<Vec<f64>>,
}

impl ScanReport {
    pub fn from_values(lambda_grid: Vec<f64>, sup_values: Vec<f64>) -> Result<Self> {
        let fit = loglog_fit(&lambda_grid, &sup_values)?;
        Ok(Self {
            lambda_grid,
            sup_values,
            fitted_exponent: fit.slope,
            fit_residual: fit.max_abs_residual,
            normalized: None,
        })
    }

    /// Ratio of the largest to the smallest normalized value.
    pub fn normalized_spread(&self) -> Option<f64> {
        let v = self.normalized.as_ref()?;
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        Some(max / min)
    }
}

pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return domain("loglog_fit needs equally many x and y values");
    }
    if xs.len() < 3 {
        return domain(format!("loglog_fit needs at least 3 points, got {}", xs.len()));
    }
    if let Some(bad) = xs.iter().chain(ys).find(|v| !(**v > 0.0) || !v.is_finite()) {
        return domain(format!("loglog_fit needs positive finite values, got {bad}"));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return domain("loglog_fit needs strictly increasing x values");
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_abs_residual = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    Ok(FitResult { slope, intercept, max_abs_residual, grid_size: xs.len() })
}

fn check_localized(lambda: f64, n: u32, p: f64) -> Result<()> {
    if !(lambda >= 1.0) || !lambda.is_finite() {
        return domain(format!("lambda must be at least 1, got {lambda}"));
    }
    if n < 2 {
        return domain(format!("decay order N must be at least 2, got {n}"));
    }
    if !(p >= 0.0) || !p.is_finite() {
        return domain(format!("power p must be nonnegative, got {p}"));
    }
    if n as f64 <= p + 1.0 {
        return domain(format!("the localized sum diverges for N = {n} ≤ p + 1 = {}", p + 1.0));
    }
    Ok(())
}

/// `Σ_{k≥0} (1+|λ−k|)^{−N} k^p`.
///
/// Terms up to `⌈λ⌉ + 100` are summed directly. The rest is the tail
/// integral plus the Euler–Maclaurin corrections through `f'''`.
pub fn localized_sum(lambda: f64, n: u32, p: f64) -> Result<f64> {
    check_localized(lambda, n, p)?;
    let nf = n as f64;
    let f = |k: f64| (1.0 + (lambda - k).abs()).powf(-nf) * k.powf(p);
    let cut = lambda.ceil() + 100.0;
    let head: f64 = (0..cut as u64).map(|k| f(k as f64)).sum();

    // beyond λ: f = a^{-N} k^p with a = 1 + k − λ, and g = (ln f)'
    let a = 1.0 + cut - lambda;
    let g = -nf / a + p / cut;
    let g1 = nf / (a * a) - p / (cut * cut);
    let g2 = -2.0 * nf / (a * a * a) + 2.0 * p / (cut * cut * cut);
    let fk = f(cut);
    let d1 = fk * g;
    let d3 = fk * (g * g * g + 3.0 * g * g1 + g2);
    let integral = adaptive(0.0, 1.0, 1e-16, 1e-13, |u| {
        if u == 0.0 {
            return 0.0;
        }
        let k = cut / u;
        f(k) * cut / (u * u)
    })?;
    Ok(head + integral + 0.5 * fk - d1 / 12.0 + d3 / 720.0)
}

/// `localized_sum / λ^p` over a grid; the ratios land in `normalized`.
pub fn localized_sum_ratio_scan(lambda_grid: &[f64], n: u32, p: f64) -> Result<ScanReport> {
    let sums: Vec<f64> = lambda_grid
        .par_iter()
        .map(|&l| localized_sum(l, n, p))
        .collect::<Result<_>>()?;
    let ratios = lambda_grid.iter().zip(&sums).map(|(l, s)| s / l.powf(p)).collect();
    let mut report = ScanReport::from_values(lambda_grid.to_vec(), sums)?;
    report.normalized = Some(ratios);
    Ok(report)
}

/// `∫_1^∞ (1+|λ−r|)^{−N} (1+r)^p dr`, split at `r = λ`.
pub fn localized_integral(lambda: f64, n: u32, p: f64) -> Result<f64> {
    check_localized(lambda, n, p)?;
    let nf = n as f64;
    let f = |r: f64| (1.0 + (lambda - r).abs()).powf(-nf) * (1.0 + r).powf(p);
    let inner = if lambda > 1.0 { adaptive(1.0, lambda, 1e-13, 1e-12, f)? } else { 0.0 };
    // r = λ + s/(1−s) maps [0, 1) onto [λ, ∞)
    let outer = adaptive(0.0, 1.0, 1e-13, 1e-12, |s| {
        if s >= 1.0 {
            return 0.0;
        }
        let r = lambda + s / (1.0 - s);
        f(r) / ((1.0 - s) * (1.0 - s))
    })?;
    Ok(inner + outer)
}

/// Window width rule for [`cluster_sup_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WidthRule {
    Fixed(f64),
    OneOverLog,
}

impl WidthRule {
    pub fn width(&self, lambda: f64) -> f64 {
        match self {
            WidthRule::Fixed(a) => *a,
            WidthRule::OneOverLog => 1.0 / lambda.ln(),
        }
    }
}

/// Smallest upward shift of `lambda` putting both ends of `(λ, λ+A(λ)]` off the spectrum.
pub(crate) fn off_spectrum_window(m: &ModelManifold, lambda: f64, rule: WidthRule) -> Result<(f64, f64)> {
    let mut lo = m.shift_off_spectrum(lambda)?;
    for _ in 0..100 {
        let a = rule.width(lo);
        if m.spectrum_hit(lo + a)?.is_none() {
            return Ok((lo, a));
        }
        lo = m.shift_off_spectrum(lo + 1e-7 * lo.max(1.0))?;
    }
    Err(crate::Error::Numeric(format!("no off-spectrum window near {lambda}")))
}

/// Sup over `x_grid` of `Σ_{λ_j ∈ (λ, λ+A]} |∂^α φ_j(x)|²`.
///
/// `d` must have `α = β`; the window sum is then the diagonal cluster kernel.
/// `normalized` holds `value / λ^{n−1+2|α|}`, times `log λ` for the
/// one-over-log rule.
pub fn cluster_sup_scan(
    m: &ModelManifold,
    lambda_grid: &[f64],
    rule: WidthRule,
    d: DerivIndex,
    x_grid: &[Vec<f64>],
) -> Result<ScanReport> {
    if d.alpha != d.beta {
        return domain("cluster_sup_scan takes a derivative index with alpha = beta");
    }
    if x_grid.is_empty() {
        return domain("cluster_sup_scan needs at least one point");
    }
    if let WidthRule::Fixed(a) = rule {
        if !(a > 0.0) {
            return domain(format!("window width must be positive, got {a}"));
        }
    }
    if rule == WidthRule::OneOverLog && lambda_grid.iter().any(|&l| l <= 1.0) {
        return domain("the one-over-log width rule needs lambda > 1");
    }
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = x_grid.iter().map(|x| (x.clone(), x.clone())).collect();
    let rows: Vec<(f64, f64)> = lambda_grid
        .par_iter()
        .map(|&l| {
            let (lo, a) = off_spectrum_window(m, l, rule)?;
            let vals = m.cluster_kernel_pairs(lo, a, &pairs, d)?;
            Ok((lo, vals.into_iter().fold(f64::NEG_INFINITY, f64::max)))
        })
        .collect::<Result<_>>()?;
    let (used, sups): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    let power = (m.dim() - 1) as f64 + 2.0 * d.alpha_order() as f64;
    let normalized = used
        .iter()
        .zip(&sups)
        .map(|(l, v)| {
            let base = v / l.powf(power);
            match rule {
                WidthRule::OneOverLog => base * l.ln(),
                WidthRule::Fixed(_) => base,
            }
        })
        .collect();
    let mut report = ScanReport::from_values(used, sups)?;
    report.normalized = Some(normalized);
    Ok(report)
}

/// `count` seeded point pairs with geodesic separation uniform in `[dist_lo, dist_hi]`.
///
/// The first point is uniform in a fundamental domain (torus) or on the
/// sphere; the second is reached along a uniformly random direction.
pub fn random_pairs(m: &ModelManifold, seed: u64, count: usize, dist_lo: f64, dist_hi: f64) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    if !(dist_lo >= 0.0 && dist_hi >= dist_lo && dist_hi.is_finite()) {
        return domain(format!("bad separation range [{dist_lo}, {dist_hi}]"));
    }
    let n = m.dim();
    (0..count as u64)
        .map(|i| {
            let u = |k: u64| uniform(seed, i, k);
            let x = match m {
                ModelManifold::FlatTorus(l) => {
                    let frac = nalgebra::DVector::from_iterator(n, (0..n as u64).map(u));
                    (l.basis() * frac).iter().copied().collect::<Vec<f64>>()
                }
                ModelManifold::RoundSphere2 { .. } => vec![(1.0 - 2.0 * u(0)).acos(), 2.0 * PI * u(1) - PI],
            };
            let mut dir: Vec<f64> = (0..n as u64).map(|k| gaussian(seed, i, 100 + k)).collect();
            let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            let t = dist_lo + (dist_hi - dist_lo) * u(200);
            dir.iter_mut().for_each(|v| *v *= t / len);
            let y = m.exp_map(&x, &dir)?;
            Ok((x, y))
        })
        .collect()
}

/// `count` points from `lo` to `hi`, equally spaced or log-spaced.
pub fn lambda_grid(lo: f64, hi: f64, count: usize, log: bool) -> Result<Vec<f64>> {
    if count == 0 || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return domain(format!("bad grid {lo}:{hi}:{count}"));
    }
    if log && !(lo > 0.0) {
        return domain("a log-spaced grid needs a positive lower end");
    }
    if count == 1 {
        return Ok(vec![hi]);
    }
    let step = |i: usize| i as f64 / (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == count - 1 {
                hi
            } else if log {
                (lo.ln() + (hi.ln() - lo.ln()) * step(i)).exp()
            } else {
                lo + (hi - lo) * step(i)
            }
        })
        .collect())
}
