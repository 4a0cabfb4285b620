//! Model manifolds with explicit spectra and their exact kernels.
//!
//! On a flat torus with dual lattice `Λ*` the spectral function is
//! `E_λ(x,y) = covol⁻¹ Σ_{|k|≤λ} e^{i⟨k,x−y⟩}`. On the round 2-sphere of
//! radius `R` the addition theorem gives
//! `E_λ(x,y) = Σ (2l+1)/(4πR²) P_l(cos γ)` over `√(l(l+1))/R ≤ λ`, where `γ`
//! is the angle between `x` and `y`. Sphere points are `[θ, φ]` (polar,
//! azimuthal).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::lattice::{DualPoint, Lattice};

/// Distance below which a spectral parameter counts as lying on the spectrum.
pub const SPECTRUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelManifold {
    FlatTorus(Lattice),
    RoundSphere2 { radius: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum LevelModes {
    Torus(Vec<DualPoint>),
    Sphere { degree: usize },
}

/// One eigenvalue `λ_j²` with its eigenspace.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenLevel {
    pub sqrt_eigenvalue: f64,
    pub multiplicity: usize,
    pub modes: LevelModes,
}

/// Derivative orders `∂_x^α ∂_y^β` with `|α| + |β| ≤ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
pub struct DerivIndex {
    pub alpha: [u8; 3],
    pub beta: [u8; 3],
}

impl DerivIndex {
    pub const ZERO: DerivIndex = DerivIndex { alpha: [0; 3], beta: [0; 3] };

    pub fn new(alpha: [u8; 3], beta: [u8; 3]) -> Result<Self> {
        let d = Self { alpha, beta };
        if d.order() > 2 {
            return domain(format!("total derivative order {} exceeds 2", d.order()));
        }
        Ok(d)
    }

    /// `ax` derivatives in `x` and `ay` in `y`, both along the first axis.
    pub fn along_first_axis(ax: u8, ay: u8) -> Result<Self> {
        Self::new([ax, 0, 0], [ay, 0, 0])
    }

    /// `∂_{x_i} ∂_{y_i}`.
    pub fn mixed_pair(axis: usize) -> Self {
        let mut e = [0u8; 3];
        e[axis] = 1;
        Self { alpha: e, beta: e }
    }

    pub fn alpha_order(&self) -> u32 {
        self.alpha.iter().map(|&a| a as u32).sum()
    }

    pub fn beta_order(&self) -> u32 {
        self.beta.iter().map(|&a| a as u32).sum()
    }

    pub fn order(&self) -> u32 {
        self.alpha_order() + self.beta_order()
    }

    pub fn is_zero(&self) -> bool {
        self.order() == 0
    }

    /// Combined multi-index `α + β`.
    pub fn gamma(&self) -> [u8; 3] {
        [self.alpha[0] + self.beta[0], self.alpha[1] + self.beta[1], self.alpha[2] + self.beta[2]]
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.gamma()[dim..].iter().any(|&g| g != 0) {
            return domain(format!("derivative index {self:?} has components beyond dimension {dim}"));
        }
        Ok(())
    }
}

impl ModelManifold {
    pub fn flat_torus(lattice: Lattice) -> Self {
        Self::FlatTorus(lattice)
    }

    pub fn round_sphere(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return domain(format!("sphere radius must be positive, got {radius}"));
        }
        Ok(Self::RoundSphere2 { radius })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::FlatTorus(l) => l.dim(),
            Self::RoundSphere2 { .. } => 2,
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Self::FlatTorus(l) => l.covolume(),
            Self::RoundSphere2 { radius } => 4.0 * PI * radius * radius,
        }
    }

    pub fn lattice(&self) -> Option<&Lattice> {
        match self {
            Self::FlatTorus(l) => Some(l),
            Self::RoundSphere2 { .. } => None,
        }
    }

    pub fn injectivity_radius(&self) -> f64 {
        match self {
            Self::FlatTorus(l) => l.injectivity_radius(),
            Self::RoundSphere2 { radius } => PI * radius,
        }
    }

    pub fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() || p.iter().any(|v| !v.is_finite()) {
            return domain(format!("point {p:?} is not a valid point of a {}-manifold", self.dim()));
        }
        Ok(())
    }

    /// Geodesic distance.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        match self {
            Self::FlatTorus(l) => l.distance(x, y),
            Self::RoundSphere2 { radius } => Ok(radius * sphere_angle(x, y)),
        }
    }

    /// Exponential map at `x0` applied to the tangent vector `u`.
    ///
    /// On the torus this is translation. On the sphere `u` is expressed in the
    /// orthonormal frame `(∂_θ, ∂_φ / sin θ)` at `x0`.
    pub fn exp_map(&self, x0: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x0)?;
        if u.len() != self.dim() {
            return domain("tangent vector has the wrong dimension");
        }
        match self {
            Self::FlatTorus(_) => Ok(x0.iter().zip(u).map(|(a, b)| a + b).collect()),
            Self::RoundSphere2 { radius } => {
                let (th, ph) = (x0[0], x0[1]);
                let p = unit_vector(x0);
                let e_th = [th.cos() * ph.cos(), th.cos() * ph.sin(), -th.sin()];
                let e_ph = [-ph.sin(), ph.cos(), 0.0];
                let len = (u[0] * u[0] + u[1] * u[1]).sqrt();
                if len == 0.0 {
                    return Ok(x0.to_vec());
                }
                let ang = len / radius;
                let mut q = [0.0; 3];
                for i in 0..3 {
                    let dir = (u[0] * e_th[i] + u[1] * e_ph[i]) / len;
                    q[i] = ang.cos() * p[i] + ang.sin() * dir;
                }
                let r_xy = (q[0] * q[0] + q[1] * q[1]).sqrt();
                Ok(vec![r_xy.atan2(q[2]), q[1].atan2(q[0])])
            }
        }
    }

    /// All eigenlevels with `λ_j ≤ lambda_max`, ascending.
    pub fn eigenlevels(&self, lambda_max: f64) -> Result<Vec<EigenLevel>> {
        if !(lambda_max > 0.0) {
            return domain(format!("lambda_max must be positive, got {lambda_max}"));
        }
        self.levels_in(-1.0, lambda_max)
    }

    /// Eigenlevels with `lo < λ_j ≤ hi` (a negative `lo` includes `λ_0 = 0`).
    pub fn levels_in(&self, lo: f64, hi: f64) -> Result<Vec<EigenLevel>> {
        match self {
            Self::FlatTorus(l) => {
                let pts = l.dual_shell(lo, hi)?;
                let mut levels: Vec<EigenLevel> = Vec::new();
                for p in pts {
                    match levels.last_mut() {
                        Some(last) if same_level(last.sqrt_eigenvalue, p.norm) => {
                            last.multiplicity += 1;
                            if let LevelModes::Torus(m) = &mut last.modes {
                                m.push(p);
                            }
                        }
                        _ => levels.push(EigenLevel {
                            sqrt_eigenvalue: p.norm,
                            multiplicity: 1,
                            modes: LevelModes::Torus(vec![p]),
                        }),
                    }
                }
                Ok(levels)
            }
            Self::RoundSphere2 { radius } => Ok(sphere_degrees(*radius, lo, hi)
                .map(|l| EigenLevel {
                    sqrt_eigenvalue: sphere_root(*radius, l),
                    multiplicity: 2 * l + 1,
                    modes: LevelModes::Sphere { degree: l },
                })
                .collect()),
        }
    }

    /// Nearest square-root eigenvalue within [`SPECTRUM_TOLERANCE`] of `lambda`.
    pub fn spectrum_hit(&self, lambda: f64) -> Result<Option<f64>> {
        let lo = (lambda - SPECTRUM_TOLERANCE).max(0.0);
        let hi = lambda + SPECTRUM_TOLERANCE;
        if lambda <= SPECTRUM_TOLERANCE {
            return Ok(Some(0.0));
        }
        match self {
            Self::FlatTorus(l) => {
                let mut hit = None;
                l.for_each_dual(lo, hi, |_, v| {
                    hit.get_or_insert(crate::lattice::norm(v));
                })?;
                Ok(hit)
            }
            Self::RoundSphere2 { radius } => Ok(sphere_degrees(*radius, lo, hi).next().map(|l| sphere_root(*radius, l))),
        }
    }

    pub fn check_off_spectrum(&self, lambda: f64) -> Result<()> {
        match self.spectrum_hit(lambda)? {
            Some(level) => Err(Error::OnSpectrum { lambda, level, tol: SPECTRUM_TOLERANCE }),
            None => Ok(()),
        }
    }

    /// Smallest `λ + j·10⁻⁷` (`j ≥ 0`) that is off the spectrum.
    pub fn shift_off_spectrum(&self, lambda: f64) -> Result<f64> {
        let mut mu = lambda;
        for _ in 0..1000 {
            if self.spectrum_hit(mu)?.is_none() {
                return Ok(mu);
            }
            mu += 1e-7 * lambda.max(1.0);
        }
        Err(Error::Numeric(format!("could not shift {lambda} off the spectrum")))
    }

    /// `∂_x^α ∂_y^β E_λ(x, y)`.
    pub fn spectral_function(&self, lambda: f64, x: &[f64], y: &[f64], d: DerivIndex) -> Result<f64> {
        if !(lambda > 0.0) {
            return domain(format!("lambda must be positive, got {lambda}"));
        }
        self.check_off_spectrum(lambda)?;
        Ok(self.window_sum(-1.0, lambda, &[(x.to_vec(), y.to_vec())], d)?[0])
    }

    /// `∂_x^α ∂_y^β E_{(λ, λ+width]}(x, y)`, summed directly over the window.
    pub fn cluster_kernel(&self, lambda: f64, width: f64, x: &[f64], y: &[f64], d: DerivIndex) -> Result<f64> {
        Ok(self.cluster_kernel_pairs(lambda, width, &[(x.to_vec(), y.to_vec())], d)?[0])
    }

    /// [`cluster_kernel`](Self::cluster_kernel) for several pairs in one pass.
    pub fn cluster_kernel_pairs(&self, lambda: f64, width: f64, pairs: &[(Vec<f64>, Vec<f64>)], d: DerivIndex) -> Result<Vec<f64>> {
        if !(lambda > 0.0) || !(width > 0.0) {
            return domain(format!("cluster window needs lambda > 0 and width > 0, got ({lambda}, {width})"));
        }
        self.check_off_spectrum(lambda)?;
        self.check_off_spectrum(lambda + width)?;
        self.window_sum(lambda, lambda + width, pairs, d)
    }

    /// `E_λ` for several pairs in one pass over the spectrum.
    pub fn spectral_function_pairs(&self, lambda: f64, pairs: &[(Vec<f64>, Vec<f64>)], d: DerivIndex) -> Result<Vec<f64>> {
        if !(lambda > 0.0) {
            return domain(format!("lambda must be positive, got {lambda}"));
        }
        self.check_off_spectrum(lambda)?;
        self.window_sum(-1.0, lambda, pairs, d)
    }

    /// Mode sum over `lo < λ_j ≤ hi` without spectrum checks.
    pub fn window_sum(&self, lo: f64, hi: f64, pairs: &[(Vec<f64>, Vec<f64>)], d: DerivIndex) -> Result<Vec<f64>> {
        for (x, y) in pairs {
            self.check_point(x)?;
            self.check_point(y)?;
        }
        match self {
            Self::FlatTorus(l) => {
                d.check_dim(l.dim())?;
                let diffs: Vec<Vec<f64>> = pairs
                    .iter()
                    .map(|(x, y)| x.iter().zip(y).map(|(a, b)| a - b).collect())
                    .collect();
                let gamma = d.gamma();
                let quarter_turns = d.order() % 4;
                let sign = if d.beta_order().is_multiple_of(2) { 1.0 } else { -1.0 };
                let mut sums = vec![0.0; pairs.len()];
                l.for_each_dual(lo, hi, |_, k| {
                    let mut mono = 1.0;
                    for (i, &g) in gamma.iter().enumerate().take(k.len()) {
                        for _ in 0..g {
                            mono *= k[i];
                        }
                    }
                    for (s, w) in sums.iter_mut().zip(&diffs) {
                        let theta: f64 = k.iter().zip(w).map(|(a, b)| a * b).sum();
                        let phase = match quarter_turns {
                            0 => theta.cos(),
                            1 => -theta.sin(),
                            2 => -theta.cos(),
                            _ => theta.sin(),
                        };
                        *s += mono * phase;
                    }
                })?;
                let scale = sign / l.covolume();
                Ok(sums.into_iter().map(|s| s * scale).collect())
            }
            Self::RoundSphere2 { radius } => {
                if !d.is_zero() {
                    return Err(Error::Unsupported("derivatives of sphere kernels".into()));
                }
                let degrees: Vec<usize> = sphere_degrees(*radius, lo, hi).collect();
                let norm = 1.0 / (4.0 * PI * radius * radius);
                Ok(pairs
                    .iter()
                    .map(|(x, y)| {
                        let c = sphere_angle(x, y).cos();
                        zonal_sum(&degrees, c) * norm
                    })
                    .collect())
            }
        }
    }
}

fn same_level(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.max(1.0)
}

pub(crate) fn sphere_root(radius: f64, l: usize) -> f64 {
    ((l * (l + 1)) as f64).sqrt() / radius
}

/// Degrees `l` with `lo < √(l(l+1))/R ≤ hi`.
pub(crate) fn sphere_degrees(radius: f64, lo: f64, hi: f64) -> impl Iterator<Item = usize> {
    let top = (hi * radius).max(0.0) as usize + 2;
    (0..=top).filter(move |&l| {
        let r = sphere_root(radius, l);
        r <= hi && r > lo
    })
}

/// `Σ_{l ∈ degrees} (2l+1) P_l(c)` for an ascending list of degrees.
fn zonal_sum(degrees: &[usize], c: f64) -> f64 {
    let Some(&top) = degrees.last() else {
        return 0.0;
    };
    let mut next = 0;
    let mut acc = 0.0;
    let (mut p0, mut p1) = (1.0, c);
    for l in 0..=top {
        let p = match l {
            0 => 1.0,
            1 => c,
            _ => {
                let lf = l as f64;
                let p2 = ((2.0 * lf - 1.0) * c * p1 - (lf - 1.0) * p0) / lf;
                p0 = p1;
                p1 = p2;
                p2
            }
        };
        if next < degrees.len() && degrees[next] == l {
            acc += (2 * l + 1) as f64 * p;
            next += 1;
        }
    }
    acc
}

pub(crate) fn unit_vector(p: &[f64]) -> [f64; 3] {
    let (th, ph) = (p[0], p[1]);
    [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]
}

/// Angle between two sphere points, accurate for nearby points.
pub fn sphere_angle(x: &[f64], y: &[f64]) -> f64 {
    let a = unit_vector(x);
    let b = unit_vector(y);
    let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    let s = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let c = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    s.atan2(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::legendre_p;
    use proptest::prelude::*;

    fn torus() -> ModelManifold {
        ModelManifold::flat_torus(Lattice::square(2, 2.0 * PI).unwrap())
    }

    fn sphere() -> ModelManifold {
        ModelManifold::round_sphere(1.0).unwrap()
    }

    const D0: DerivIndex = DerivIndex::ZERO;

    #[test]
    fn sphere_levels() {
        let lv = sphere().eigenlevels(1.5).unwrap();
        assert_eq!(lv.len(), 2);
        assert_eq!((lv[0].sqrt_eigenvalue, lv[0].multiplicity), (0.0, 1));
        assert!((lv[1].sqrt_eigenvalue - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(lv[1].multiplicity, 3);
    }

    #[test]
    fn torus_levels() {
        let lv = torus().eigenlevels(1.0).unwrap();
        assert_eq!(lv.len(), 2);
        assert_eq!((lv[0].sqrt_eigenvalue, lv[0].multiplicity), (0.0, 1));
        assert_eq!((lv[1].sqrt_eigenvalue, lv[1].multiplicity), (1.0, 4));
        let total: usize = torus().eigenlevels(10.0).unwrap().iter().map(|l| l.multiplicity).sum();
        assert_eq!(total, 317);
    }

    #[test]
    fn torus_spectral_function_examples() {
        let m = torus();
        let c = 1.0 / (4.0 * PI * PI);
        let v = m.spectral_function(0.5, &[0.1, 0.2], &[2.0, -1.0], D0).unwrap();
        assert!((v - c).abs() < 1e-16);
        // nine modes: 0, ±e1, ±e2 and the four diagonals of length √2
        let v = m.spectral_function(1.5, &[0.3, 0.3], &[0.3, 0.3], D0).unwrap();
        assert!((v - 9.0 * c).abs() < 1e-15);
        let v = m.spectral_function(1.2, &[0.3, 0.3], &[0.3, 0.3], D0).unwrap();
        assert!((v - 5.0 * c).abs() < 1e-15);
    }

    #[test]
    fn sphere_spectral_function_example() {
        let m = sphere();
        for th in [0.0, 0.4, 1.3, 2.9] {
            let v = m.spectral_function(1.5, &[0.0, 0.0], &[th, 0.7], D0).unwrap();
            let want = 1.0 / (4.0 * PI) + 3.0 / (4.0 * PI) * f64::cos(th);
            assert!((v - want).abs() < 1e-14);
        }
    }

    #[test]
    fn on_spectrum_is_rejected() {
        assert!(matches!(
            torus().spectral_function(1.0, &[0.0, 0.0], &[0.0, 0.0], D0),
            Err(Error::OnSpectrum { .. })
        ));
        assert!(sphere().spectral_function(2f64.sqrt(), &[0.0, 0.0], &[0.0, 0.0], D0).is_err());
        let mu = torus().shift_off_spectrum(5.0).unwrap();
        assert!(mu > 5.0 && mu < 5.0 + 1e-5);
    }

    #[test]
    fn sphere_derivatives_unsupported() {
        let d = DerivIndex::mixed_pair(0);
        assert!(matches!(
            sphere().spectral_function(3.3, &[0.0, 0.0], &[0.1, 0.0], d),
            Err(Error::Unsupported(_))
        ));
        assert!(DerivIndex::along_first_axis(2, 1).is_err());
    }

    #[test]
    fn cluster_examples() {
        let m = torus();
        let p = [0.4, 1.9];
        assert_eq!(m.cluster_kernel(0.5, 0.4, &p, &[2.0, 3.0], D0).unwrap(), 0.0);
        let v = m.cluster_kernel(0.5, 1.0, &p, &p, D0).unwrap();
        assert!((v - 2.0 / (PI * PI)).abs() < 1e-15);
        let v = m.cluster_kernel(0.5, 0.8, &p, &p, D0).unwrap();
        assert!((v - 1.0 / (PI * PI)).abs() < 1e-15);
        let s = sphere();
        for l in [3usize, 10, 25] {
            let root = sphere_root(1.0, l);
            let v = s.cluster_kernel(root - 0.3, 0.6, &[0.5, 0.5], &[0.5, 0.5], D0).unwrap();
            assert!((v - (2 * l + 1) as f64 / (4.0 * PI)).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_kernel_matches_direct_legendre() {
        let s = sphere();
        let x = [0.3, 0.1];
        let y = [1.2, 2.0];
        let c = sphere_angle(&x, &y).cos();
        let want: f64 = (0..=12).map(|l| (2 * l + 1) as f64 * legendre_p(l, c).unwrap()).sum::<f64>() / (4.0 * PI);
        let got = s.spectral_function(12.5, &x, &y, D0).unwrap();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn diagonal_trace_identity() {
        let t = torus();
        for lam in [3.3, 17.2, 40.1] {
            let count: usize = t.eigenlevels(lam).unwrap().iter().map(|l| l.multiplicity).sum();
            let e = t.spectral_function(lam, &[0.5, 0.6], &[0.5, 0.6], D0).unwrap();
            assert!((e * t.volume() - count as f64).abs() < 1e-10 * count as f64);
        }
        let s = sphere();
        for lam in [3.3, 17.2, 40.1] {
            let count: usize = s.eigenlevels(lam).unwrap().iter().map(|l| l.multiplicity).sum();
            let e = s.spectral_function(lam, &[1.0, 0.6], &[1.0, 0.6], D0).unwrap();
            assert!((e * s.volume() - count as f64).abs() < 1e-10 * count as f64);
        }
    }

    #[test]
    fn torus_mixed_derivative_on_diagonal_is_second_moment() {
        let t = torus();
        let lam = 6.5;
        let d = DerivIndex::mixed_pair(0);
        let want: f64 = t.lattice().unwrap().enumerate_dual(lam).unwrap().iter().map(|p| p.vector[0].powi(2)).sum::<f64>()
            / t.volume();
        let got = t.spectral_function(lam, &[0.2, 0.2], &[0.2, 0.2], d).unwrap();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn torus_first_derivative_matches_finite_difference() {
        let t = torus();
        let lam = 4.7;
        let x = [0.3, 0.8];
        let y = [1.1, -0.4];
        let h = 1e-6;
        let dx = DerivIndex::along_first_axis(1, 0).unwrap();
        let dy = DerivIndex::along_first_axis(0, 1).unwrap();
        let f = |a: [f64; 2], b: [f64; 2]| t.spectral_function(lam, &a, &b, D0).unwrap();
        let fd_x = (f([x[0] + h, x[1]], y) - f([x[0] - h, x[1]], y)) / (2.0 * h);
        let fd_y = (f(x, [y[0] + h, y[1]]) - f(x, [y[0] - h, y[1]])) / (2.0 * h);
        assert!((t.spectral_function(lam, &x, &y, dx).unwrap() - fd_x).abs() < 1e-7);
        assert!((t.spectral_function(lam, &x, &y, dy).unwrap() - fd_y).abs() < 1e-7);
    }

    #[test]
    fn sphere_exp_map_moves_by_geodesic_distance() {
        let s = ModelManifold::round_sphere(2.0).unwrap();
        for x0 in [[0.0, 0.0], [1.0, 0.5], [2.5, -1.0]] {
            let y = s.exp_map(&x0, &[0.3, -0.2]).unwrap();
            let d = s.distance(&x0, &y).unwrap();
            assert!((d - (0.13f64).sqrt()).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn kernel_is_symmetric(x0 in 0.0f64..3.0, x1 in 0.0f64..6.0, y0 in 0.0f64..3.0, y1 in 0.0f64..6.0, lam in 1.1f64..12.0) {
            for m in [torus(), sphere()] {
                let a = m.spectral_function(lam, &[x0, x1], &[y0, y1], D0);
                let b = m.spectral_function(lam, &[y0, y1], &[x0, x1], D0);
                if let (Ok(a), Ok(b)) = (a, b) {
                    prop_assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
                }
            }
        }

        #[test]
        fn cluster_is_positive_semidefinite(x0 in 0.0f64..3.0, x1 in 0.0f64..6.0, y0 in 0.0f64..3.0, y1 in 0.0f64..6.0, lam in 1.1f64..30.0) {
            for m in [torus(), sphere()] {
                let x = [x0, x1];
                let y = [y0, y1];
                if let (Ok(xy), Ok(xx), Ok(yy)) = (
                    m.cluster_kernel(lam, 1.0, &x, &y, D0),
                    m.cluster_kernel(lam, 1.0, &x, &x, D0),
                    m.cluster_kernel(lam, 1.0, &y, &y, D0),
                ) {
                    prop_assert!(xx >= 0.0);
                    prop_assert!(xy.abs() <= (xx * yy).sqrt() * (1.0 + 1e-12) + 1e-14);
                }
            }
        }

        #[test]
        fn torus_kernel_is_translation_invariant(x0 in -5.0f64..5.0, x1 in -5.0f64..5.0, s0 in -9.0f64..9.0, s1 in -9.0f64..9.0, lam in 1.1f64..15.0) {
            let t = torus();
            let x = [x0, x1];
            let y = [x0 + 0.7, x1 - 0.3];
            let xs = [x0 + s0, x1 + s1];
            let ys = [y[0] + s0 + 2.0 * PI, y[1] + s1];
            if let (Ok(a), Ok(b)) = (t.spectral_function(lam, &x, &y, D0), t.spectral_function(lam, &xs, &ys, D0)) {
                prop_assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
            }
        }
    }
}
