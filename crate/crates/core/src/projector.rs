//! Bessel leading terms of the spectral function, remainders, scaling scans and
//! the cluster-versus-Bessel comparison.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::ScanReport;
use crate::error::{domain, Error, Result};
use crate::lattice::norm;
use crate::manifolds::{DerivIndex, LevelModes, ModelManifold};
use crate::specfun::{bessel_ratio, BesselOrder};

/// Exact value, leading term and their difference at one point pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderSample {
    pub lambda: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dist: f64,
    pub leading: f64,
    pub exact: f64,
    pub remainder: f64,
    pub deriv: DerivIndex,
}

/// `∂_w^γ [F_ν(s|w|)]` with `F_ν(r) = J_ν(r)/r^ν` and `|γ| ≤ 2`, using
/// `F_ν'(r) = −r F_{ν+1}(r)`.
pub(crate) fn radial_derivative(order: BesselOrder, s: f64, w: &[f64], gamma: [u8; 3]) -> Result<f64> {
    let r = s * norm(w);
    let axes: Vec<usize> = (0..w.len()).flat_map(|i| std::iter::repeat_n(i, gamma[i] as usize)).collect();
    let s2 = s * s;
    Ok(match axes.as_slice() {
        [] => bessel_ratio(order, r)?,
        [i] => -s2 * w[*i] * bessel_ratio(order.shifted(1), r)?,
        [i, j] => {
            let delta = if i == j { 1.0 } else { 0.0 };
            -s2 * delta * bessel_ratio(order.shifted(1), r)? + s2 * s2 * w[*i] * w[*j] * bessel_ratio(order.shifted(2), r)?
        }
        _ => return domain("derivative order above 2"),
    })
}

fn alpha_sign(d: DerivIndex) -> f64 {
    if d.alpha_order().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn torus_of(m: &ModelManifold) -> Result<&crate::lattice::Lattice> {
    m.lattice().ok_or_else(|| Error::Unsupported("the Bessel leading term is implemented for flat tori".into()))
}

/// `∂_x^α ∂_y^β` of `λ^n (2π)^{−n/2} J_{n/2}(λ|w|)/(λ|w|)^{n/2}` with `w = torus_log(x, y)`.
pub fn leading_term(m: &ModelManifold, lambda: f64, x: &[f64], y: &[f64], d: DerivIndex) -> Result<f64> {
    let lat = torus_of(m)?;
    if !(lambda > 0.0) {
        return domain(format!("lambda must be positive, got {lambda}"));
    }
    d.check_dim(lat.dim())?;
    let w = lat.torus_log(x, y)?;
    let n = lat.dim();
    let c = lambda.powi(n as i32) * (2.0 * PI).powf(-(n as f64) / 2.0);
    Ok(alpha_sign(d) * c * radial_derivative(BesselOrder::ball(n), lambda, &w, d.gamma())?)
}

pub fn remainder(m: &ModelManifold, lambda: f64, x: &[f64], y: &[f64], d: DerivIndex) -> Result<RemainderSample> {
    let leading = leading_term(m, lambda, x, y, d)?;
    let exact = m.spectral_function(lambda, x, y, d)?;
    Ok(RemainderSample {
        lambda,
        x: x.to_vec(),
        y: y.to_vec(),
        dist: m.distance(x, y)?,
        leading,
        exact,
        remainder: exact - leading,
        deriv: d,
    })
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return domain("lambda grid is empty");
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) || grid.iter().any(|l| !(*l > 0.0)) {
        return domain("lambda grid must be positive and strictly increasing");
    }
    Ok(())
}

/// Nudges every grid node off the spectrum, keeping the grid increasing.
pub(crate) fn off_spectrum_grid(m: &ModelManifold, grid: &[f64]) -> Result<Vec<f64>> {
    check_grid(grid)?;
    let used: Vec<f64> = grid.par_iter().map(|&l| m.shift_off_spectrum(l)).collect::<Result<_>>()?;
    check_grid(&used)?;
    Ok(used)
}

/// Sup over `pairs` of `|exact − leading|` per λ, with the fitted growth exponent.
pub fn remainder_scan(m: &ModelManifold, lambda_grid: &[f64], pairs: &[(Vec<f64>, Vec<f64>)], d: DerivIndex) -> Result<ScanReport> {
    let lat = torus_of(m)?;
    if pairs.is_empty() {
        return domain("remainder_scan needs at least one point pair");
    }
    let half_inj = 0.5 * lat.injectivity_radius();
    for (x, y) in pairs {
        let dist = m.distance(x, y)?;
        if dist > half_inj {
            return domain(format!("pair at distance {dist} exceeds half the injectivity radius {half_inj}"));
        }
    }
    let used = off_spectrum_grid(m, lambda_grid)?;
    let sups: Vec<f64> = used
        .par_iter()
        .map(|&l| {
            let exact = m.spectral_function_pairs(l, pairs, d)?;
            let mut sup: f64 = 0.0;
            for ((x, y), e) in pairs.iter().zip(exact) {
                sup = sup.max((e - leading_term(m, l, x, y, d)?).abs());
            }
            Ok(sup)
        })
        .collect::<Result<_>>()?;
    ScanReport::from_values(used, sups)
}

/// Sup over `pairs` (all at distance at least `eps`) of `|E_λ(x, y)|` per λ.
pub fn offdiagonal_scan(m: &ModelManifold, lambda_grid: &[f64], eps: f64, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<ScanReport> {
    if !(eps > 0.0) {
        return domain(format!("eps must be positive, got {eps}"));
    }
    if pairs.is_empty() {
        return domain("offdiagonal_scan needs at least one point pair");
    }
    for (x, y) in pairs {
        let dist = m.distance(x, y)?;
        if dist < eps {
            return domain(format!("pair at distance {dist} is closer than eps = {eps}"));
        }
    }
    let used = off_spectrum_grid(m, lambda_grid)?;
    let sups: Vec<f64> = used
        .par_iter()
        .map(|&l| {
            let vals = m.spectral_function_pairs(l, pairs, DerivIndex::ZERO)?;
            Ok(vals.into_iter().fold(0.0, |a: f64, v| a.max(v.abs())))
        })
        .collect::<Result<_>>()?;
    ScanReport::from_values(used, sups)
}

/// `E_{λ+δ}(x,x) − E_{λ−δ}(x,x)` for a small `δ`: the mass of the level at `λ`.
pub fn spectral_jump(m: &ModelManifold, level: f64, x: &[f64]) -> Result<f64> {
    let delta = 1e-6 * level.max(1.0);
    let above = m.spectral_function(level + delta, x, x, DerivIndex::ZERO)?;
    if level - delta <= 0.0 {
        return Ok(above);
    }
    Ok(above - m.spectral_function(level - delta, x, x, DerivIndex::ZERO)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterBesselRow {
    pub dist: f64,
    pub cluster: f64,
    pub bessel_prediction: f64,
    pub abs_error: f64,
    /// `abs_error` in units of the diagonal cluster value.
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterBesselTable {
    pub lambda: f64,
    pub width: f64,
    pub mean_radius: f64,
    pub diagonal: f64,
    pub rows: Vec<ClusterBesselRow>,
}

impl ClusterBesselTable {
    pub fn max_relative_error(&self) -> f64 {
        self.rows.iter().map(|r| r.relative_error).fold(0.0, f64::max)
    }
}

/// Multiplicity-weighted mean of the `λ_j` in `(lo, hi]`, or the midpoint for an empty window.
pub fn mean_shell_radius(m: &ModelManifold, lo: f64, hi: f64) -> Result<f64> {
    let levels = m.levels_in(lo, hi)?;
    let count: usize = levels.iter().map(|l| l.multiplicity).sum();
    if count == 0 {
        return Ok(0.5 * (lo + hi));
    }
    Ok(levels.iter().map(|l| l.sqrt_eigenvalue * l.multiplicity as f64).sum::<f64>() / count as f64)
}

/// Compares the cluster kernel along the geodesic from `x0` in `direction`
/// with `width · F'(r̄)`, where `F(τ)` is the Bessel leading term at frequency
/// `τ` and `r̄` the mean shell radius of the window.
pub fn cluster_vs_bessel(
    m: &ModelManifold,
    lambda: f64,
    width: f64,
    x0: &[f64],
    direction: &[f64],
    dist_grid: &[f64],
    d: DerivIndex,
) -> Result<ClusterBesselTable> {
    let n = m.dim();
    if direction.len() != n || !(norm(direction) > 0.0) {
        return domain("geodesic direction must be a nonzero tangent vector");
    }
    if !d.is_zero() && matches!(m, ModelManifold::RoundSphere2 { .. }) {
        return Err(Error::Unsupported("derivatives of sphere kernels".into()));
    }
    d.check_dim(n)?;
    let half_inj = 0.5 * m.injectivity_radius();
    if let Some(bad) = dist_grid.iter().find(|t| !(**t >= 0.0) || **t > half_inj) {
        return domain(format!("distance {bad} is outside [0, {half_inj}]"));
    }
    let unit: Vec<f64> = direction.iter().map(|v| v / norm(direction)).collect();
    let mut pairs = vec![(x0.to_vec(), x0.to_vec())];
    let mut offsets = Vec::with_capacity(dist_grid.len());
    for &t in dist_grid {
        let u: Vec<f64> = unit.iter().map(|v| v * t).collect();
        pairs.push((x0.to_vec(), m.exp_map(x0, &u)?));
        offsets.push(u);
    }
    let diag_d = DerivIndex { alpha: d.alpha, beta: d.alpha };
    let diagonal = m.cluster_kernel(lambda, width, x0, x0, diag_d)?;
    let values = m.cluster_kernel_pairs(lambda, width, &pairs[1..], d)?;
    let rbar = mean_shell_radius(m, lambda, lambda + width)?;
    let c = width * alpha_sign(d) * rbar.powi(n as i32 - 1) * (2.0 * PI).powf(-(n as f64) / 2.0);
    let rows = dist_grid
        .iter()
        .zip(offsets)
        .zip(values)
        .map(|((&dist, u), cluster)| {
            let prediction = c * radial_derivative(BesselOrder::sphere(n), rbar, &u, d.gamma())?;
            let abs_error = (cluster - prediction).abs();
            Ok(ClusterBesselRow {
                dist,
                cluster,
                bessel_prediction: prediction,
                abs_error,
                relative_error: abs_error / diagonal.abs(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(ClusterBesselTable { lambda, width, mean_radius: rbar, diagonal, rows })
}

/// Number of modes in `(lo, hi]`.
pub fn window_count(m: &ModelManifold, lo: f64, hi: f64) -> Result<usize> {
    Ok(m.levels_in(lo, hi)?
        .iter()
        .map(|l| match &l.modes {
            LevelModes::Torus(pts) => pts.len(),
            LevelModes::Sphere { degree } => 2 * degree + 1,
        })
        .sum())
}
