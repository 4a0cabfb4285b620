//! The Fourier-mollified spectral projector on flat tori.
//!
//! With a cutoff `ρ̂` supported in `[−S, S]` and equal to one on `[−P, P]`,
//! the smoothed projector at scale `A` has multiplier
//!
//! ```text
//! m(τ) = (1/π) ∫ ρ̂(At) sin(λt)/t cos(τt) dt = R((τ+λ)/A) − R((τ−λ)/A),
//! R(s) = (1/π) ∫_0^S ρ̂(u) sin(su)/u du,
//! ```
//!
//! where `R` is the primitive of `ρ = F⁻¹ρ̂`. It is evaluated two ways: as a
//! mode sum `covol⁻¹ Σ_k m(|k|) cos⟨k, y−x⟩` and as a sum over deck images of
//! radial Fourier integrals of `m`. The two agree by Poisson summation.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::lattice::{norm, Lattice};
use crate::manifolds::ModelManifold;
use crate::quadrature::GaussLegendre;
use crate::specfun::sphere_fourier;

/// Multiplier magnitude below which the spectral tail is dropped.
pub const TAIL_THRESHOLD: f64 = 1e-12;
/// Largest allowed change when every truncation is doubled.
pub const DOUBLING_TOLERANCE: f64 = 1e-8;
/// Relative tolerance of the direct multiplier quadrature.
pub const QUADRATURE_TOL: f64 = 1e-9;

/// The even cutoff `ρ̂`: one on `|t| ≤ plateau`, zero on `|t| ≥ support`,
/// joined by the bridge `f(1−s)/(f(1−s)+f(s))` with `f(u) = exp(−1/u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifierSpec {
    pub plateau: f64,
    pub support: f64,
}

impl MollifierSpec {
    pub fn new(plateau: f64, support: f64) -> Result<Self> {
        if !(plateau > 0.0 && support > plateau && support.is_finite()) {
            return domain(format!("mollifier needs 0 < plateau < support, got ({plateau}, {support})"));
        }
        Ok(Self { plateau, support })
    }

    /// Plateau `inj/2`, support `0.9 inj`.
    pub fn for_injectivity_radius(inj: f64) -> Result<Self> {
        Self::new(0.5 * inj, 0.9 * inj)
    }

    pub fn for_manifold(m: &ModelManifold) -> Result<Self> {
        Self::for_injectivity_radius(m.injectivity_radius())
    }

    fn key(&self) -> (u64, u64) {
        (self.plateau.to_bits(), self.support.to_bits())
    }
}

fn bridge(s: f64) -> f64 {
    let f = |u: f64| if u > 0.0 { (-1.0 / u).exp() } else { 0.0 };
    let a = f(1.0 - s);
    a / (a + f(s))
}

pub fn rho_hat(spec: &MollifierSpec, t: f64) -> f64 {
    let t = t.abs();
    if t <= spec.plateau {
        1.0
    } else if t >= spec.support {
        0.0
    } else {
        bridge((t - spec.plateau) / (spec.support - spec.plateau))
    }
}

/// Nodes `u_i` and weights `w_i ρ̂(u_i) / (π u_i)` so that `R(s) ≈ Σ g_i sin(s u_i)`,
/// resolving frequencies up to `s_max` with `density` panels per period.
fn primitive_rule(spec: &MollifierSpec, s_max: f64, density: usize) -> (Vec<f64>, Vec<f64>) {
    let gl = GaussLegendre::sixteen();
    let mut us = Vec::new();
    let mut ws = Vec::new();
    for (a, b, min_panels) in [(0.0, spec.plateau, 8usize), (spec.plateau, spec.support, 32)] {
        let periods = ((b - a) * s_max / (2.0 * PI)).ceil() as usize;
        let panels = periods.max(min_panels) * density;
        let h = (b - a) / panels as f64;
        for i in 0..panels {
            gl.push_panel(a + h * i as f64, a + h * (i + 1) as f64, &mut us, &mut ws);
        }
    }
    let gs = us.iter().zip(&ws).map(|(u, w)| w * rho_hat(spec, *u) / (PI * u)).collect();
    (us, gs)
}

fn apply_rule(rule: &(Vec<f64>, Vec<f64>), s: f64) -> f64 {
    rule.0.iter().zip(&rule.1).map(|(u, g)| g * (s * u).sin()).sum()
}

/// `R(s) = ∫_0^s ρ`, by direct quadrature checked against a rule of twice the density.
pub fn rho_primitive(spec: &MollifierSpec, s: f64) -> Result<f64> {
    if !s.is_finite() {
        return domain(format!("argument must be finite, got {s}"));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let mut density = 1;
    let mut coarse = apply_rule(&primitive_rule(spec, s.abs(), density), s);
    for _ in 0..4 {
        density *= 2;
        let fine = apply_rule(&primitive_rule(spec, s.abs(), density), s);
        if (fine - coarse).abs() <= QUADRATURE_TOL * fine.abs() + 1e-14 {
            return Ok(fine);
        }
        coarse = fine;
    }
    Err(Error::Numeric(format!(
        "quadrature for R({s}) did not settle at density {density}: last two values differ by {:e}",
        (coarse - apply_rule(&primitive_rule(spec, s.abs(), density / 2), s)).abs()
    )))
}

fn check_multiplier_args(lambda: f64, a: f64, tau: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return domain(format!("lambda must be positive, got {lambda}"));
    }
    if !(a > 0.0 && a <= 1.0) {
        return domain(format!("A must lie in (0, 1], got {a}"));
    }
    if !(tau >= 0.0) || !tau.is_finite() {
        return domain(format!("tau must be finite and nonnegative, got {tau}"));
    }
    Ok(())
}

/// `m_{λ,A}(τ)` by direct quadrature.
pub fn multiplier(spec: &MollifierSpec, lambda: f64, a: f64, tau: f64) -> Result<f64> {
    check_multiplier_args(lambda, a, tau)?;
    Ok(rho_primitive(spec, (tau + lambda) / a)? - rho_primitive(spec, (tau - lambda) / a)?)
}

/// `1_{[−λ,λ]}(τ) − m_{λ,A}(τ)`.
pub fn h_error(spec: &MollifierSpec, lambda: f64, a: f64, tau: f64) -> Result<f64> {
    let m = multiplier(spec, lambda, a, tau)?;
    Ok(if tau <= lambda { 1.0 - m } else { -m })
}

const CHEB_NODES: usize = 20;
const PANELS_PER_CHUNK: usize = 32;
const SETTLE_TOLERANCE: f64 = 5e-14;

/// Piecewise Chebyshev interpolant of `R` on `[0, end]`, with `R = ±1/2` beyond.
#[derive(Debug)]
pub struct PrimitiveTable {
    panel: f64,
    end: f64,
    nodes: [f64; CHEB_NODES],
    bary: [f64; CHEB_NODES],
    values: Vec<[f64; CHEB_NODES]>,
}

impl PrimitiveTable {
    fn build(spec: &MollifierSpec) -> Result<Self> {
        // panel × bandwidth ≤ 2.5 keeps 20 Chebyshev nodes at machine precision
        let panel = (2.5 / spec.support).min(1.0);
        let mut nodes = [0.0; CHEB_NODES];
        let mut bary = [0.0; CHEB_NODES];
        for j in 0..CHEB_NODES {
            let th = (2 * j + 1) as f64 * PI / (2 * CHEB_NODES) as f64;
            nodes[j] = th.cos();
            bary[j] = if j % 2 == 0 { th.sin() } else { -th.sin() };
        }
        let max_panels = (40_000.0 / (spec.support * panel)).ceil() as usize;
        let mut values: Vec<[f64; CHEB_NODES]> = Vec::new();
        loop {
            let first = values.len();
            let s_top = panel * (first + PANELS_PER_CHUNK) as f64;
            let rule = primitive_rule(spec, s_top, 2);
            let chunk: Vec<[f64; CHEB_NODES]> = (first..first + PANELS_PER_CHUNK)
                .into_par_iter()
                .map(|p| {
                    let mid = panel * (p as f64 + 0.5);
                    let mut v = [0.0; CHEB_NODES];
                    for (slot, x) in v.iter_mut().zip(&nodes) {
                        *slot = apply_rule(&rule, mid + 0.5 * panel * x);
                    }
                    v
                })
                .collect();
            // 5e-14 sits just above the rounding floor of the node sums
            let settled = chunk.iter().flatten().all(|v| (0.5 - v).abs() < SETTLE_TOLERANCE);
            values.extend(chunk);
            if settled {
                break;
            }
            if values.len() > max_panels {
                return Err(Error::Numeric(format!(
                    "the primitive of rho has not reached 1/2 by s = {s_top}; the cutoff is too rough"
                )));
            }
        }
        let end = panel * values.len() as f64;
        Ok(Self { panel, end, nodes, bary, values })
    }

    /// Argument beyond which `R` is taken as exactly `±1/2`.
    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn eval(&self, s: f64) -> f64 {
        let a = s.abs();
        if a >= self.end {
            return 0.5_f64.copysign(s);
        }
        let p = ((a / self.panel) as usize).min(self.values.len() - 1);
        let x = (a - self.panel * (p as f64 + 0.5)) / (0.5 * self.panel);
        let vals = &self.values[p];
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..CHEB_NODES {
            let dx = x - self.nodes[j];
            if dx == 0.0 {
                return vals[j].copysign(s);
            }
            let c = self.bary[j] / dx;
            num += c * vals[j];
            den += c;
        }
        (num / den).copysign(s)
    }
}

/// Shared interpolant of `R` for one mollifier, built on first use.
pub fn primitive_table(spec: &MollifierSpec) -> Result<Arc<PrimitiveTable>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u64), Arc<PrimitiveTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().expect("table cache poisoned").get(&spec.key()) {
        return Ok(t.clone());
    }
    let table = Arc::new(PrimitiveTable::build(spec)?);
    cache.lock().expect("table cache poisoned").insert(spec.key(), table.clone());
    Ok(table)
}

/// Tabulated values of `m_{λ,A}` on a τ grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierTable {
    pub lambda: f64,
    pub a: f64,
    pub tau_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub quadrature_tol: f64,
}

impl MultiplierTable {
    pub fn build(spec: &MollifierSpec, lambda: f64, a: f64, tau_grid: &[f64]) -> Result<Self> {
        for &t in tau_grid {
            check_multiplier_args(lambda, a, t)?;
        }
        if tau_grid.windows(2).any(|w| w[1] <= w[0]) {
            return domain("tau grid must be strictly increasing");
        }
        let r = primitive_table(spec)?;
        let values = tau_grid.iter().map(|t| r.eval((t + lambda) / a) - r.eval((t - lambda) / a)).collect();
        Ok(Self { lambda, a, tau_grid: tau_grid.to_vec(), values, quadrature_tol: QUADRATURE_TOL })
    }
}

/// Flat-space Hadamard data: `Θ ≡ 1`, `u_0 ≡ 1`, `u_ν ≡ 0` for `ν ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatHadamardData {
    pub theta: f64,
    pub u0: f64,
    pub u_higher: f64,
}

impl FlatHadamardData {
    pub const FLAT: FlatHadamardData = FlatHadamardData { theta: 1.0, u0: 1.0, u_higher: 0.0 };

    /// `u_0 = Θ^{−1/2}`.
    pub fn leading_coefficient_consistent(&self) -> bool {
        self.u0 == self.theta.powf(-0.5)
    }
}

/// The smoothed projector at fixed `(λ, A)` on a flat torus, with truncations
/// chosen and checked by doubling at construction.
#[derive(Debug, Clone)]
pub struct SmoothedProjector {
    lattice: Lattice,
    spec: MollifierSpec,
    lambda: f64,
    a: f64,
    table: Arc<PrimitiveTable>,
    tail: f64,
    image_radius: f64,
    radial: RadialRule,
}

#[derive(Debug, Clone)]
struct RadialRule {
    nodes: Vec<f64>,
    /// `w_i m(r_i) r_i^{n−1} (2π)^{−n}`
    weights: Vec<f64>,
}

/// Truncation data and doubling diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub spectral_radius: f64,
    pub image_radius: f64,
    pub radial_panel: f64,
    pub spectral_shift_on_doubling: f64,
    pub images_shift_on_doubling: f64,
}

impl SmoothedProjector {
    pub fn new(m: &ModelManifold, spec: &MollifierSpec, lambda: f64, a: f64) -> Result<Self> {
        let lattice = m
            .lattice()
            .ok_or_else(|| Error::Unsupported("the smoothed projector is implemented for flat tori".into()))?
            .clone();
        check_multiplier_args(lambda, a, 0.0)?;
        let table = primitive_table(spec)?;
        let mut proj = Self {
            lattice,
            spec: *spec,
            lambda,
            a,
            table,
            tail: 0.0,
            image_radius: spec.support / a + 1.0,
            radial: RadialRule { nodes: vec![], weights: vec![] },
        };
        proj.tail = 2.0 * proj.envelope_tail();
        proj.radial = proj.radial_rule(proj.radial_panel(), lambda + proj.tail);
        Ok(proj)
    }

    /// Smallest `T` with `|m(τ)| < TAIL_THRESHOLD` for all scanned `τ ≥ λ + T`.
    fn envelope_tail(&self) -> f64 {
        let step = 0.25;
        let top = self.table.end() + 2.0;
        let mut last = 0.0;
        let mut s = 0.0;
        while s <= top {
            if self.multiplier(self.lambda + s * self.a).abs() >= TAIL_THRESHOLD {
                last = s;
            }
            s += step;
        }
        (last + step) * self.a
    }

    fn radial_panel(&self) -> f64 {
        (0.25 * self.a).min(PI / (self.spec.support / self.a + 1.0))
    }

    fn radial_rule(&self, panel: f64, top: f64) -> RadialRule {
        let n = self.lattice.dim() as i32;
        let panels = (top / panel).ceil() as usize;
        let h = top / panels as f64;
        let mut nodes = Vec::with_capacity(panels * 16);
        let mut w = Vec::with_capacity(panels * 16);
        for i in 0..panels {
            GaussLegendre::sixteen().push_panel(h * i as f64, h * (i + 1) as f64, &mut nodes, &mut w);
        }
        let scale = (2.0 * PI).powi(-n);
        let weights = nodes
            .iter()
            .zip(&w)
            .map(|(r, wi)| wi * self.multiplier(*r) * r.powi(n - 1) * scale)
            .collect();
        RadialRule { nodes, weights }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// `m_{λ,A}(τ)` from the shared interpolant.
    pub fn multiplier(&self, tau: f64) -> f64 {
        self.table.eval((tau + self.lambda) / self.a) - self.table.eval((tau - self.lambda) / self.a)
    }

    pub fn spectral_radius(&self) -> f64 {
        self.lambda + self.tail
    }

    /// Largest covering-space distance summed over by [`images`](Self::images).
    pub fn image_radius(&self) -> f64 {
        self.image_radius
    }

    pub fn spectral(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(self.spectral_pairs(&[(x.to_vec(), y.to_vec())])?[0])
    }

    /// The mode sum for several pairs in one pass over the dual lattice.
    pub fn spectral_pairs(&self, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<Vec<f64>> {
        self.spectral_with(self.spectral_radius(), pairs)
    }

    fn spectral_with(&self, radius: f64, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<Vec<f64>> {
        let diffs: Vec<Vec<f64>> = pairs
            .iter()
            .map(|(x, y)| {
                if x.len() != self.lattice.dim() || y.len() != self.lattice.dim() {
                    return domain("point dimension does not match the torus");
                }
                Ok(y.iter().zip(x).map(|(a, b)| a - b).collect())
            })
            .collect::<Result<_>>()?;
        let mut sums = vec![0.0; pairs.len()];
        self.lattice.for_each_dual(-1.0, radius, |_, k| {
            let mk = self.multiplier(norm(k));
            for (s, w) in sums.iter_mut().zip(&diffs) {
                let theta: f64 = k.iter().zip(w).map(|(a, b)| a * b).sum();
                *s += mk * theta.cos();
            }
        })?;
        let cov = self.lattice.covolume();
        Ok(sums.into_iter().map(|s| s / cov).collect())
    }

    pub fn images(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.images_with(&self.radial, self.image_radius, x, y)
    }

    fn images_with(&self, rule: &RadialRule, image_radius: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        let n = self.lattice.dim();
        let images = self.lattice.deck_images(x, y, image_radius)?;
        let mut total = 0.0;
        for w in images {
            let d = norm(&w);
            let mut acc = 0.0;
            for (r, wt) in rule.nodes.iter().zip(&rule.weights) {
                if *wt != 0.0 {
                    acc += wt * sphere_fourier(n, r * d)?;
                }
            }
            total += acc;
        }
        Ok(total)
    }

    /// Doubles the spectral radius, the image radius and the radial resolution
    /// and range, and fails if either side moves by `DOUBLING_TOLERANCE` or more.
    pub fn validate(&self, x: &[f64], y: &[f64]) -> Result<Truncation> {
        let pair = [(x.to_vec(), y.to_vec())];
        let s1 = self.spectral_with(self.spectral_radius(), &pair)?[0];
        let s2 = self.spectral_with(self.lambda + 2.0 * self.tail, &pair)?[0];
        let fine = self.radial_rule(0.5 * self.radial_panel(), self.lambda + 2.0 * self.tail);
        let i1 = self.images(x, y)?;
        let i2 = self.images_with(&fine, 2.0 * self.image_radius, x, y)?;
        let t = Truncation {
            spectral_radius: self.spectral_radius(),
            image_radius: self.image_radius,
            radial_panel: self.radial_panel(),
            spectral_shift_on_doubling: (s2 - s1).abs(),
            images_shift_on_doubling: (i2 - i1).abs(),
        };
        if t.spectral_shift_on_doubling >= DOUBLING_TOLERANCE || t.images_shift_on_doubling >= DOUBLING_TOLERANCE {
            return Err(Error::Numeric(format!(
                "truncation not converged at lambda = {}, A = {}: {t:?}",
                self.lambda, self.a
            )));
        }
        Ok(t)
    }
}

pub fn smoothed_projector_spectral(m: &ModelManifold, spec: &MollifierSpec, lambda: f64, a: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    let p = SmoothedProjector::new(m, spec, lambda, a)?;
    p.validate(x, x)?;
    p.spectral(x, y)
}

pub fn smoothed_projector_images(m: &ModelManifold, spec: &MollifierSpec, lambda: f64, a: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    let p = SmoothedProjector::new(m, spec, lambda, a)?;
    p.validate(x, x)?;
    p.images(x, y)
}

/// Constant of the bound `|h(τ)| ≤ C_N (1 + |τ−λ|/A)^{−N}` fitted on one grid
/// and checked on another. Grids are in units of `s = (τ−λ)/A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub order: u32,
    pub constant: f64,
    pub check_max: f64,
}

impl DecayFit {
    /// Relative amount by which the check grid exceeds the fitted constant.
    pub fn violation(&self) -> f64 {
        (self.check_max / self.constant - 1.0).max(0.0)
    }
}

pub fn fit_h_decay(spec: &MollifierSpec, lambda: f64, a: f64, order: u32, fit_s: &[f64], check_s: &[f64]) -> Result<DecayFit> {
    let weighted = |s: f64| -> Result<f64> {
        let tau = lambda + s * a;
        Ok(h_error(spec, lambda, a, tau)?.abs() * (1.0 + s.abs()).powi(order as i32))
    };
    let max_over = |grid: &[f64]| -> Result<f64> {
        let vals: Vec<f64> = grid.par_iter().map(|&s| weighted(s)).collect::<Result<_>>()?;
        Ok(vals.into_iter().fold(0.0, f64::max))
    };
    if fit_s.is_empty() || check_s.is_empty() {
        return domain("decay fit needs nonempty grids");
    }
    Ok(DecayFit { order, constant: max_over(fit_s)?, check_max: max_over(check_s)? })
}
