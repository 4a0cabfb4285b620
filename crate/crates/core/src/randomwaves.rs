//! Monochromatic random waves.
//!
//! A wave is `ψ_λ(x) = λ^{(1−n)/2} Σ_j a_j φ_j(x)` with independent standard
//! Gaussian `a_j` and `φ_j` a real orthonormal basis of the eigenfunctions in
//! the window `(λ, λ+width]`. Its covariance is `λ^{1−n} E_{(λ,λ+width]}(x,y)`.
//!
//! Coefficients come from a counter-based stream: `a_j` of sample `s` is a
//! pure function of `(seed, s, key(φ_j))`, so results do not depend on the
//! enumeration order of modes or on the thread schedule.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{off_spectrum_window, WidthRule};
use crate::error::{domain, Error, Result};
use crate::manifolds::{sphere_degrees, DerivIndex, ModelManifold};
use crate::specfun::universal_covariance;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn keyed(seed: u64, sample: u64, mode_key: u64) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ sample) ^ mode_key)
}

const UNIT: f64 = 1.0 / (1u64 << 53) as f64;

/// Uniform variate in `[0, 1)` for `(seed, sample, key)`.
pub fn uniform(seed: u64, sample: u64, key: u64) -> f64 {
    (splitmix(keyed(seed, sample, key) ^ 0x756e_6966) >> 11) as f64 * UNIT
}

/// Standard normal variate for `(seed, sample, mode_key)` via Box–Muller.
pub fn gaussian(seed: u64, sample: u64, mode_key: u64) -> f64 {
    let key = keyed(seed, sample, mode_key);
    let b1 = splitmix(key);
    let b2 = splitmix(key ^ GOLDEN);
    // u1 ∈ (0, 1], u2 ∈ [0, 1)
    let u1 = ((b1 >> 11) + 1) as f64 * UNIT;
    let u2 = (b2 >> 11) as f64 * UNIT;
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// One real basis function of the window.
#[derive(Debug, Clone, PartialEq)]
enum Mode {
    /// `√(2/covol) cos⟨k,x⟩` or `sin`, or the constant `1/√covol` when `k = 0`.
    Torus { k: Vec<f64>, sine: bool, constant: bool, key: u64 },
    /// Real spherical harmonic of degree `l`, order `m`.
    Sphere { l: usize, m: usize, sine: bool, key: u64 },
}

impl Mode {
    fn key(&self) -> u64 {
        match self {
            Mode::Torus { key, .. } | Mode::Sphere { key, .. } => *key,
        }
    }
}

fn torus_key(coeffs: &[i64], sine: bool) -> u64 {
    let mut h = 0x746f_7275_7300_0000;
    for &c in coeffs {
        h = splitmix(h ^ c as u64);
    }
    splitmix(h ^ sine as u64)
}

fn sphere_key(l: usize, m: usize, sine: bool) -> u64 {
    splitmix(splitmix(splitmix(0x7370_6865_7265_0000 ^ l as u64) ^ m as u64) ^ sine as u64)
}

/// Gaussian ensemble over the window `(lambda, lambda + width]`.
///
/// Built with [`new`](Self::new); the window ends are nudged upward off the
/// spectrum when needed, and the nudged `lambda` is the one stored.
#[derive(Debug, Clone)]
pub struct RandomWaveEnsemble {
    pub manifold: ModelManifold,
    pub lambda: f64,
    pub width: f64,
    pub seed: u64,
    pub num_samples: usize,
    /// Largest admissible `|u|`, `|v|` in rescaled comparisons. `None` means
    /// `√(λ / log λ)`.
    pub rescale_radius: Option<f64>,
    window: (f64, f64),
    norm: f64,
    modes: Vec<Mode>,
}

impl RandomWaveEnsemble {
    /// Unit-width ensemble at `lambda`.
    pub fn new(manifold: ModelManifold, lambda: f64, seed: u64, num_samples: usize) -> Result<Self> {
        Self::with_width(manifold, lambda, 1.0, seed, num_samples)
    }

    pub fn with_width(manifold: ModelManifold, lambda: f64, width: f64, seed: u64, num_samples: usize) -> Result<Self> {
        if !(lambda > 0.0) || !(width > 0.0) {
            return domain(format!("random waves need lambda > 0 and width > 0, got ({lambda}, {width})"));
        }
        let (lo, a) = off_spectrum_window(&manifold, lambda, WidthRule::Fixed(width))?;
        let norm = lo.powf((1.0 - manifold.dim() as f64) / 2.0);
        Self::build(manifold, lo, a, (lo, lo + a), norm, seed, num_samples)
    }

    /// Ensemble over an explicit window `(lo, hi]` with normalization factor
    /// `norm`. A negative `lo` admits the constant mode.
    pub fn from_window(manifold: ModelManifold, lo: f64, hi: f64, norm: f64, seed: u64, num_samples: usize) -> Result<Self> {
        if !(hi > lo) || !(hi > 0.0) || !(norm > 0.0) {
            return domain(format!("window ({lo}, {hi}] with normalization {norm} is not admissible"));
        }
        manifold.check_off_spectrum(hi)?;
        if lo > 0.0 {
            manifold.check_off_spectrum(lo)?;
        }
        Self::build(manifold, hi.max(lo), hi - lo, (lo, hi), norm, seed, num_samples)
    }

    fn build(
        manifold: ModelManifold,
        lambda: f64,
        width: f64,
        window: (f64, f64),
        norm: f64,
        seed: u64,
        num_samples: usize,
    ) -> Result<Self> {
        if num_samples == 0 {
            return domain("num_samples must be positive");
        }
        let modes = window_modes(&manifold, window.0, window.1)?;
        if modes.is_empty() {
            return domain(format!("spectral window ({}, {}] contains no eigenvalues", window.0, window.1));
        }
        Ok(Self { manifold, lambda, width, seed, num_samples, rescale_radius: None, window, norm, modes })
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    /// The factor `λ^{(1−n)/2}` multiplying the mode sum.
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    /// Basis values `φ_j(x)` in mode order.
    fn basis_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.manifold.check_point(x)?;
        match &self.manifold {
            ModelManifold::FlatTorus(l) => {
                let c = 1.0 / l.covolume().sqrt();
                Ok(self
                    .modes
                    .iter()
                    .map(|m| match m {
                        Mode::Torus { constant: true, .. } => c,
                        Mode::Torus { k, sine, .. } => {
                            let th: f64 = k.iter().zip(x).map(|(a, b)| a * b).sum();
                            std::f64::consts::SQRT_2 * c * if *sine { th.sin() } else { th.cos() }
                        }
                        Mode::Sphere { .. } => unreachable!(),
                    })
                    .collect())
            }
            ModelManifold::RoundSphere2 { radius } => {
                let ct = x[0].cos();
                let top = self.modes.iter().map(|m| if let Mode::Sphere { l, .. } = m { *l } else { 0 }).max().unwrap_or(0);
                let table = normalized_legendre_table(top, ct);
                Ok(self
                    .modes
                    .iter()
                    .map(|m| match m {
                        Mode::Sphere { l, m: 0, .. } => table[*l][0] / radius,
                        Mode::Sphere { l, m, sine, .. } => {
                            let ang = *m as f64 * x[1];
                            let trig = if *sine { ang.sin() } else { ang.cos() };
                            std::f64::consts::SQRT_2 * table[*l][*m] * trig / radius
                        }
                        Mode::Torus { .. } => unreachable!(),
                    })
                    .collect())
            }
        }
    }

    fn check_sample(&self, sample_index: usize) -> Result<()> {
        if sample_index >= self.num_samples {
            return Err(Error::Precondition(format!(
                "sample index {sample_index} out of range for {} samples",
                self.num_samples
            )));
        }
        Ok(())
    }

    fn coefficients(&self, sample_index: usize) -> Vec<f64> {
        self.modes.iter().map(|m| gaussian(self.seed, sample_index as u64, m.key())).collect()
    }

    /// `ψ_λ(x)` for sample `sample_index`.
    pub fn sample_wave(&self, sample_index: usize, x: &[f64]) -> Result<f64> {
        self.check_sample(sample_index)?;
        let phi = self.basis_at(x)?;
        let a = self.coefficients(sample_index);
        Ok(self.norm * dot(&a, &phi))
    }

    /// Values of sample `sample_index` at several points.
    pub fn sample_at(&self, sample_index: usize, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.check_sample(sample_index)?;
        let basis = points.iter().map(|p| self.basis_at(p)).collect::<Result<Vec<_>>>()?;
        let a = self.coefficients(sample_index);
        Ok(basis.iter().map(|phi| self.norm * dot(&a, phi)).collect())
    }

    /// `λ^{1−n} Σ_j φ_j(x) φ_j(y)` over the ensemble's own basis.
    pub fn basis_covariance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let px = self.basis_at(x)?;
        let py = self.basis_at(y)?;
        Ok(self.norm * self.norm * pairwise_sum(&px.iter().zip(&py).map(|(a, b)| a * b).collect::<Vec<_>>()))
    }

    /// `λ^{1−n} E_{window}(x, y)` from the manifold's kernel.
    pub fn exact_covariance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let (lo, hi) = self.window;
        let v = self.manifold.window_sum(lo, hi, &[(x.to_vec(), y.to_vec())], DerivIndex::ZERO)?[0];
        Ok(self.norm * self.norm * v)
    }

    /// Monte Carlo mean of `ψ(x)ψ(y)` and its standard error.
    pub fn empirical_covariance(&self, x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
        let r = self.empirical_pairs(&[(x.to_vec(), y.to_vec())])?;
        Ok(r[0])
    }

    /// [`empirical_covariance`](Self::empirical_covariance) for several pairs,
    /// sharing the per-sample mode sums.
    pub fn empirical_pairs(&self, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<Vec<(f64, f64)>> {
        if self.num_samples < 2 {
            return Err(Error::Precondition("empirical covariance needs at least 2 samples".into()));
        }
        let mut points: Vec<Vec<f64>> = Vec::new();
        let mut index = Vec::with_capacity(pairs.len());
        for (x, y) in pairs {
            let mut slot = |p: &Vec<f64>| match points.iter().position(|q| q == p) {
                Some(i) => i,
                None => {
                    points.push(p.clone());
                    points.len() - 1
                }
            };
            let i = slot(x);
            let j = slot(y);
            index.push((i, j));
        }
        let basis = points.iter().map(|p| self.basis_at(p)).collect::<Result<Vec<_>>>()?;
        let products: Vec<Vec<f64>> = (0..self.num_samples)
            .into_par_iter()
            .map(|s| {
                let a = self.coefficients(s);
                let vals: Vec<f64> = basis.iter().map(|phi| self.norm * dot(&a, phi)).collect();
                index.iter().map(|&(i, j)| vals[i] * vals[j]).collect()
            })
            .collect();
        let n = self.num_samples as f64;
        Ok((0..pairs.len())
            .map(|p| {
                let col: Vec<f64> = products.iter().map(|r| r[p]).collect();
                let mean = pairwise_sum(&col) / n;
                let dev: Vec<f64> = col.iter().map(|v| (v - mean) * (v - mean)).collect();
                let var = pairwise_sum(&dev) / (n - 1.0);
                (mean, (var / n).sqrt())
            })
            .collect())
    }

    /// Empirical against exact covariance on `pairs`.
    pub fn covariance_report(&self, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<CovarianceReport> {
        let emp = self.empirical_pairs(pairs)?;
        let exact = pairs.iter().map(|(x, y)| self.exact_covariance(x, y)).collect::<Result<Vec<_>>>()?;
        Ok(CovarianceReport {
            point_pairs: pairs.to_vec(),
            empirical: emp.iter().map(|e| e.0).collect(),
            exact,
            std_errors: emp.iter().map(|e| e.1).collect(),
            universal_limit: None,
        })
    }

    /// Rescaled version of [`covariance_report`](Self::covariance_report):
    /// each tangent pair `(u, v)` is mapped to `exp_{x0}(u/λ), exp_{x0}(v/λ)`,
    /// and the universal Bessel limit is attached.
    pub fn rescaled_covariance_report(&self, x0: &[f64], tangent_pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<CovarianceReport> {
        let mut pairs = Vec::with_capacity(tangent_pairs.len());
        let mut universal = Vec::with_capacity(tangent_pairs.len());
        for (u, v) in tangent_pairs {
            self.check_rescale_radius(u, v)?;
            pairs.push(self.rescaled_points(x0, u, v)?);
            universal.push(universal_covariance(self.manifold.dim(), dist(u, v))?);
        }
        let mut report = self.covariance_report(&pairs)?;
        report.universal_limit = Some(universal);
        Ok(report)
    }

    pub fn effective_rescale_radius(&self) -> f64 {
        self.rescale_radius.unwrap_or_else(|| (self.lambda / self.lambda.ln()).sqrt())
    }

    fn check_rescale_radius(&self, u: &[f64], v: &[f64]) -> Result<()> {
        let r = self.effective_rescale_radius();
        let big = dist(u, &vec![0.0; u.len()]).max(dist(v, &vec![0.0; v.len()]));
        if big > r {
            return Err(Error::Precondition(format!(
                "rescaled tangent vectors must satisfy |u|, |v| <= r_lambda = sqrt(lambda/log lambda) = {r:.6}; got {big:.6}"
            )));
        }
        Ok(())
    }

    fn rescaled_points(&self, x0: &[f64], u: &[f64], v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let su: Vec<f64> = u.iter().map(|c| c / self.lambda).collect();
        let sv: Vec<f64> = v.iter().map(|c| c / self.lambda).collect();
        Ok((self.manifold.exp_map(x0, &su)?, self.manifold.exp_map(x0, &sv)?))
    }

    /// Exact rescaled covariance against the universal limit at `|u − v|`.
    pub fn rescaled_covariance_error(&self, x0: &[f64], u: &[f64], v: &[f64]) -> Result<RescaledError> {
        self.check_rescale_radius(u, v)?;
        let (x, y) = self.rescaled_points(x0, u, v)?;
        let exact_rescaled = self.exact_covariance(&x, &y)?;
        let universal = universal_covariance(self.manifold.dim(), dist(u, v))?;
        Ok(RescaledError { exact_rescaled, universal, abs_error: (exact_rescaled - universal).abs() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaledError {
    pub exact_rescaled: f64,
    pub universal: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub point_pairs: Vec<(Vec<f64>, Vec<f64>)>,
    pub empirical: Vec<f64>,
    pub exact: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub universal_limit: Option<Vec<f64>>,
}

impl CovarianceReport {
    /// Largest `|empirical − exact| / std_error`.
    pub fn max_z_score(&self) -> f64 {
        self.empirical
            .iter()
            .zip(&self.exact)
            .zip(&self.std_errors)
            .map(|((e, x), s)| (e - x).abs() / s)
            .fold(0.0, f64::max)
    }
}

fn window_modes(m: &ModelManifold, lo: f64, hi: f64) -> Result<Vec<Mode>> {
    let mut modes = Vec::new();
    match m {
        ModelManifold::FlatTorus(l) => {
            for p in l.dual_shell(lo, hi)? {
                let first = p.coeffs.iter().find(|&&c| c != 0).copied();
                match first {
                    None => modes.push(Mode::Torus { k: p.vector, sine: false, constant: true, key: torus_key(&p.coeffs, false) }),
                    Some(c) if c > 0 => {
                        for sine in [false, true] {
                            modes.push(Mode::Torus { k: p.vector.clone(), sine, constant: false, key: torus_key(&p.coeffs, sine) });
                        }
                    }
                    Some(_) => {}
                }
            }
        }
        ModelManifold::RoundSphere2 { radius } => {
            for l in sphere_degrees(*radius, lo, hi) {
                modes.push(Mode::Sphere { l, m: 0, sine: false, key: sphere_key(l, 0, false) });
                for mm in 1..=l {
                    for sine in [false, true] {
                        modes.push(Mode::Sphere { l, m: mm, sine, key: sphere_key(l, mm, sine) });
                    }
                }
            }
        }
    }
    Ok(modes)
}

/// `table[l][m] = √((2l+1)/(4π) · (l−m)!/(l+m)!) · P_l^m(x)` for `m ≤ l ≤ top`,
/// by the fully normalized recurrences (no factorial overflow).
fn normalized_legendre_table(top: usize, x: f64) -> Vec<Vec<f64>> {
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut t: Vec<Vec<f64>> = (0..=top).map(|l| vec![0.0; l + 1]).collect();
    let mut diag = (1.0 / (4.0 * PI)).sqrt();
    for m in 0..=top {
        if m > 0 {
            let mf = m as f64;
            diag *= -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s;
        }
        t[m][m] = diag;
        if m < top {
            t[m + 1][m] = x * (2.0 * m as f64 + 3.0).sqrt() * diag;
        }
        for l in m + 2..=top {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let lp = lf - 1.0;
            let a_prev = ((4.0 * lp * lp - 1.0) / (lp * lp - mf * mf)).sqrt();
            t[l][m] = a * (x * t[l - 1][m] - t[l - 2][m] / a_prev);
        }
    }
    t
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Fixed-order pairwise summation.
fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;
    use crate::specfun::legendre_p;
    use proptest::prelude::*;

    /// 1% upper quantile of chi-square with 20 degrees of freedom.
    const CHI2_20_99: f64 = 37.56623478662507;

    fn torus() -> ModelManifold {
        ModelManifold::flat_torus(Lattice::square(2, 2.0 * PI).unwrap())
    }

    #[test]
    fn stream_is_standard_normal() {
        let n = 200_000u64;
        let z: Vec<f64> = (0..n).map(|i| gaussian(7, i, 3)).collect();
        let mean = z.iter().sum::<f64>() / n as f64;
        let var = z.iter().map(|v| v * v).sum::<f64>() / n as f64 - mean * mean;
        let kurt = z.iter().map(|v| v.powi(4)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 5.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 0.01);
        assert!((kurt - 3.0).abs() < 0.05);
        assert_ne!(gaussian(7, 0, 3), gaussian(8, 0, 3));
        assert_ne!(gaussian(7, 0, 3), gaussian(7, 0, 4));
    }

    #[test]
    fn golden_torus_sample() {
        let e = RandomWaveEnsemble::new(torus(), 200.0, 42, 1).unwrap();
        let v = e.sample_wave(0, &[0.0, 0.0]).unwrap();
        // recorded once the covariance and chi-square tests below passed;
        // a change here means the coefficient stream or mode keys changed
        assert_eq!(v, GOLDEN_TORUS_200);
    }

    const GOLDEN_TORUS_200: f64 = -0.4249755147462325;

    #[test]
    fn single_mode_window_is_constant_times_coefficient() {
        let e = RandomWaveEnsemble::from_window(torus(), -1.0, 0.5, 1.0, 9, 3).unwrap();
        assert_eq!(e.mode_count(), 1);
        for s in 0..3 {
            let want = gaussian(9, s as u64, torus_key(&[0, 0], false)) * (1.0 / (4.0 * PI * PI).sqrt());
            assert_eq!(e.sample_wave(s, &[0.3, 1.1]).unwrap(), want);
            assert_eq!(e.sample_wave(s, &[2.0, -4.0]).unwrap(), want);
        }
        assert!(e.sample_wave(3, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn empty_window_is_rejected() {
        assert!(RandomWaveEnsemble::from_window(torus(), 0.2, 0.7, 1.0, 1, 10).is_err());
        assert!(RandomWaveEnsemble::new(torus(), 200.0, 1, 0).is_err());
    }

    #[test]
    fn deterministic_across_calls_and_pools() {
        let e = RandomWaveEnsemble::new(torus(), 30.0, 5, 64).unwrap();
        let pairs = vec![(vec![0.1, 0.2], vec![0.4, -0.3]), (vec![1.0, 1.0], vec![1.0, 1.0])];
        let a = e.empirical_pairs(&pairs).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| e.empirical_pairs(&pairs).unwrap());
        assert_eq!(a, b);
        assert_eq!(e.sample_wave(17, &[0.5, 0.5]).unwrap(), e.sample_wave(17, &[0.5, 0.5]).unwrap());
        let more = RandomWaveEnsemble::new(torus(), 30.0, 5, 200).unwrap();
        assert_eq!(e.sample_wave(17, &[0.5, 0.5]).unwrap(), more.sample_wave(17, &[0.5, 0.5]).unwrap());
    }

    #[test]
    fn diagonal_covariance_within_four_standard_errors() {
        let e = RandomWaveEnsemble::new(torus(), 40.0, 11, 5000).unwrap();
        let x = [0.7, 2.1];
        let (mean, se) = e.empirical_covariance(&x, &x).unwrap();
        let exact = e.exact_covariance(&x, &x).unwrap();
        assert!(se > 0.0);
        assert!((mean - exact).abs() <= 4.0 * se, "{mean} {exact} {se}");
    }

    #[test]
    fn independent_seeds_agree_within_joint_error() {
        let x = [0.7, 2.1];
        let y = [0.75, 2.0];
        let a = RandomWaveEnsemble::new(torus(), 40.0, 1, 2000).unwrap().empirical_covariance(&x, &y).unwrap();
        let b = RandomWaveEnsemble::new(torus(), 40.0, 2, 2000).unwrap().empirical_covariance(&x, &y).unwrap();
        assert_ne!(a.0, b.0);
        assert!((a.0 - b.0).abs() <= 6.0 * (a.1 * a.1 + b.1 * b.1).sqrt());
    }

    #[test]
    fn many_samples_on_constant_mode() {
        let e = RandomWaveEnsemble::from_window(torus(), -1.0, 0.5, 1.0, 3, 20_000).unwrap();
        let (mean, se) = e.empirical_covariance(&[0.0, 0.0], &[1.0, 2.0]).unwrap();
        let want = 1.0 / (4.0 * PI * PI);
        assert!((mean - want).abs() <= 4.0 * se);
        assert!(se < 0.02 * want);
    }

    #[test]
    fn block_estimates_pass_chi_square() {
        // 20 independent seed blocks, z-scores against the exact kernel
        let x = vec![0.3, -0.2];
        let y = vec![0.5, 0.1];
        let mut chi2 = 0.0;
        for block in 0..20u64 {
            let e = RandomWaveEnsemble::new(torus(), 12.0, 1000 + block, 800).unwrap();
            let (mean, se) = e.empirical_covariance(&x, &y).unwrap();
            let exact = e.exact_covariance(&x, &y).unwrap();
            chi2 += ((mean - exact) / se).powi(2);
        }
        assert!(chi2 < CHI2_20_99, "chi2 = {chi2}");
    }

    #[test]
    fn basis_reproduces_kernel() {
        let e = RandomWaveEnsemble::new(torus(), 25.0, 0, 2).unwrap();
        let x = [0.1, 0.9];
        let y = [2.2, -0.4];
        assert!((e.basis_covariance(&x, &y).unwrap() - e.exact_covariance(&x, &y).unwrap()).abs() < 1e-12);

        let s = ModelManifold::round_sphere(1.0).unwrap();
        let e = RandomWaveEnsemble::new(s, 12.0, 0, 2).unwrap();
        let x = [0.4, 1.3];
        let y = [2.1, -0.7];
        let direct = e.basis_covariance(&x, &y).unwrap();
        let kernel = e.exact_covariance(&x, &y).unwrap();
        assert!((direct - kernel).abs() < 1e-12, "{direct} {kernel}");
    }

    #[test]
    fn addition_theorem_per_degree() {
        for l in [0usize, 1, 5, 20, 60] {
            let x = [0.9f64, 0.2];
            let y = [1.7f64, 2.8];
            let t = normalized_legendre_table(l, x[0].cos());
            let u = normalized_legendre_table(l, y[0].cos());
            let mut sum = t[l][0] * u[l][0];
            for m in 1..=l {
                sum += 2.0 * t[l][m] * u[l][m] * (m as f64 * (x[1] - y[1])).cos();
            }
            let c = crate::manifolds::sphere_angle(&x, &y).cos();
            let want = (2 * l + 1) as f64 / (4.0 * PI) * legendre_p(l, c).unwrap();
            assert!((sum - want).abs() < 1e-12 * (2 * l + 1) as f64, "l={l}");
        }
    }

    #[test]
    fn sphere_sampling_matches_exact_on_average() {
        let s = ModelManifold::round_sphere(1.0).unwrap();
        let e = RandomWaveEnsemble::new(s, 8.0, 21, 4000).unwrap();
        let x = vec![0.6, 0.3];
        let y = vec![0.8, 0.5];
        let r = e.covariance_report(&[(x.clone(), y.clone()), (x.clone(), x)]).unwrap();
        assert!(r.max_z_score() <= 4.0);
    }

    #[test]
    fn rescaled_limit_examples() {
        let e = RandomWaveEnsemble::new(torus(), 200.0, 0, 1).unwrap();
        let x0 = [0.3, 0.4];
        let same = e.rescaled_covariance_error(&x0, &[1.0, 0.5], &[1.0, 0.5]).unwrap();
        assert!((same.universal - 1.0 / (2.0 * PI)).abs() < 1e-14);
        let z = 2.404825557695773;
        let r = e.rescaled_covariance_error(&x0, &[z / 2.0, 0.0], &[-z / 2.0, 0.0]).unwrap();
        assert!(r.universal.abs() < 1e-15);
        assert!(r.exact_rescaled.abs() < 0.01);
        let too_far = 2.0 * e.effective_rescale_radius();
        match e.rescaled_covariance_error(&x0, &[too_far, 0.0], &[0.0, 0.0]) {
            Err(Error::Precondition(msg)) => assert!(msg.contains("r_lambda")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rescaled_error_shrinks_with_lambda() {
        let x0 = [0.0, 0.0];
        let grid: Vec<([f64; 2], [f64; 2])> =
            (0..6).map(|i| ([0.5 * i as f64, 0.0], [-0.25 * i as f64, 0.3 * i as f64])).collect();
        let worst = |lam: f64| {
            let e = RandomWaveEnsemble::new(torus(), lam, 0, 1).unwrap();
            grid.iter().map(|(u, v)| e.rescaled_covariance_error(&x0, u, v).unwrap().abs_error).fold(0.0, f64::max)
        };
        assert!(worst(400.0) < worst(50.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn exact_side_two_ways(u in prop::array::uniform2(-2.0f64..2.0), v in prop::array::uniform2(-2.0f64..2.0)) {
            let e = RandomWaveEnsemble::new(torus(), 60.0, 0, 1).unwrap();
            let x0 = [1.0, -0.5];
            let r = e.rescaled_covariance_error(&x0, &u, &v).unwrap();
            let (x, y) = e.rescaled_points(&x0, &u, &v).unwrap();
            let direct = e.basis_covariance(&x, &y).unwrap();
            prop_assert!((r.exact_rescaled - direct).abs() < 1e-12);
        }
    }
}
