//! Period lattices of flat tori.
//!
//! A torus `R^n / Λ` is described by the columns of `basis` (the periods).
//! The dual lattice uses the convention `⟨b_i, b*_j⟩ = 2π δ_ij`, so the
//! Laplace eigenfunctions are `e^{i⟨k,x⟩}` for dual points `k` with
//! eigenvalue `|k|²`. This is the only place the factor 2π enters.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{domain, Error, Result};

/// Default cap on the number of points a single enumeration may produce.
pub const DEFAULT_COUNT_CAP: u64 = 100_000_000;

const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    dim: usize,
    basis: DMatrix<f64>,
    basis_inv: DMatrix<f64>,
    dual_basis: DMatrix<f64>,
    dual_inv: DMatrix<f64>,
    covolume: f64,
    injectivity_radius: f64,
    count_cap: u64,
}

/// A point of the dual lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub coeffs: Vec<i64>,
    pub vector: Vec<f64>,
    pub norm: f64,
}

impl Lattice {
    /// Builds a lattice from a matrix whose columns are the periods.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let dim = basis.nrows();
        if basis.ncols() != dim || !(2..=3).contains(&dim) {
            return domain(format!(
                "lattice basis must be 2x2 or 3x3, got {}x{}",
                basis.nrows(),
                basis.ncols()
            ));
        }
        if basis.iter().any(|v| !v.is_finite()) {
            return domain("lattice basis has non-finite entries");
        }
        let covolume = basis.determinant().abs();
        let scale: f64 = basis.column_iter().map(|c| c.norm()).product();
        if !(covolume > 1e-12 * scale) {
            return domain("lattice basis is singular");
        }
        let basis_inv = basis
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Domain("lattice basis is singular".into()))?;
        let mut dual_basis = basis_inv.transpose() * (2.0 * PI);
        if is_diagonal(&basis) {
            // keep axis-aligned duals exact so integer norms stay integer
            for i in 0..dim {
                dual_basis[(i, i)] = 2.0 * PI / basis[(i, i)];
            }
        }
        let dual_inv = basis.transpose() / (2.0 * PI);
        let mut lattice = Self {
            dim,
            basis,
            basis_inv,
            dual_basis,
            dual_inv,
            covolume,
            injectivity_radius: 0.0,
            count_cap: DEFAULT_COUNT_CAP,
        };
        lattice.injectivity_radius = 0.5 * lattice.shortest_period()?;
        Ok(lattice)
    }

    /// Cubic lattice with all periods equal to `period`.
    pub fn square(dim: usize, period: f64) -> Result<Self> {
        Self::rectangular(&vec![period; dim])
    }

    /// Axis-aligned periods.
    pub fn rectangular(periods: &[f64]) -> Result<Self> {
        if periods.iter().any(|p| !(*p > 0.0)) {
            return domain("periods must be positive");
        }
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(periods)))
    }

    /// Planar hexagonal lattice whose shortest vectors have length `shortest`.
    pub fn hexagonal(shortest: f64) -> Result<Self> {
        if !(shortest > 0.0) {
            return domain("hexagonal period must be positive");
        }
        let h = shortest * 3f64.sqrt() / 2.0;
        Self::new(DMatrix::from_column_slice(2, 2, &[shortest, 0.0, 0.5 * shortest, h]))
    }

    pub fn with_count_cap(mut self, cap: u64) -> Self {
        self.count_cap = cap;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn dual_basis(&self) -> &DMatrix<f64> {
        &self.dual_basis
    }

    pub fn covolume(&self) -> f64 {
        self.covolume
    }

    pub fn count_cap(&self) -> u64 {
        self.count_cap
    }

    /// Half the length of the shortest nonzero period.
    pub fn injectivity_radius(&self) -> f64 {
        self.injectivity_radius
    }

    fn shortest_period(&self) -> Result<f64> {
        let bound = self
            .basis
            .column_iter()
            .map(|c| c.norm())
            .fold(f64::INFINITY, f64::min);
        let zero = vec![0.0; self.dim];
        let mut best = f64::INFINITY;
        let walker = Walker::new(&self.basis, &self.basis_inv, &zero, self.count_cap);
        walker.walk(-1.0, bound * (1.0 + 1e-12), |c, _, n2| {
            if c.iter().any(|&v| v != 0) {
                best = best.min(n2.sqrt());
            }
        })?;
        Ok(best)
    }

    /// Visits every dual point with `lo < |k| ≤ hi`, in no particular order.
    /// Pass a negative `lo` to include the origin.
    pub fn for_each_dual<F: FnMut(&[i64], &[f64])>(&self, lo: f64, hi: f64, mut f: F) -> Result<()> {
        let zero = vec![0.0; self.dim];
        let walker = Walker::new(&self.dual_basis, &self.dual_inv, &zero, self.count_cap);
        walker.check_estimate(hi, self.dual_covolume())?;
        walker.walk(lo, hi, |c, v, _| f(c, v))
    }

    fn dual_covolume(&self) -> f64 {
        (2.0 * PI).powi(self.dim as i32) / self.covolume
    }

    /// Dual points with `lo < |k| ≤ hi`, sorted by norm then coefficients.
    pub fn dual_shell(&self, lo: f64, hi: f64) -> Result<Vec<DualPoint>> {
        let mut out = Vec::new();
        self.for_each_dual(lo, hi, |c, v| {
            out.push(DualPoint {
                coeffs: c.to_vec(),
                vector: v.to_vec(),
                norm: v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            })
        })?;
        out.sort_by(|a, b| a.norm.total_cmp(&b.norm).then_with(|| a.coeffs.cmp(&b.coeffs)));
        Ok(out)
    }

    /// All dual points with `|k| ≤ radius`.
    pub fn enumerate_dual(&self, radius: f64) -> Result<Vec<DualPoint>> {
        if !(radius > 0.0) {
            return domain(format!("enumeration radius must be positive, got {radius}"));
        }
        self.dual_shell(-1.0, radius)
    }

    /// Number of dual points with `lo < |k| ≤ hi`.
    pub fn shell_count(&self, lo: f64, hi: f64) -> Result<u64> {
        if !(lo >= 0.0 && lo < hi) {
            return domain(format!("shell bounds need 0 <= lo < hi, got ({lo}, {hi}]"));
        }
        let mut count = 0u64;
        self.for_each_dual(lo, hi, |_, _| count += 1)?;
        Ok(count)
    }

    /// Shortest representative of `y - x` modulo the lattice, valid below the
    /// injectivity radius.
    pub fn torus_log(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        self.check_point(y)?;
        let diff: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
        // a rounded representative bounds the search radius
        let coeffs = &self.basis_inv * nalgebra::DVector::from_column_slice(&diff);
        let rounded = coeffs.map(|c| c.round());
        let start = nalgebra::DVector::from_column_slice(&diff) - &self.basis * rounded;
        let radius = start.norm() * (1.0 + 1e-9) + 1e-12;
        let mut reps: Vec<(f64, Vec<i64>, Vec<f64>)> = Vec::new();
        let walker = Walker::new(&self.basis, &self.basis_inv, &diff, self.count_cap);
        walker.walk(-1.0, radius, |c, v, n2| reps.push((n2.sqrt(), c.to_vec(), v.to_vec())))?;
        reps.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        let best = reps[0].0;
        let inj = self.injectivity_radius;
        if best >= inj * (1.0 - 1e-12) {
            let representatives = reps
                .into_iter()
                .filter(|r| r.0 <= best * (1.0 + TIE_TOLERANCE) + 1e-15)
                .map(|r| r.2)
                .collect();
            return Err(Error::CutLocus { distance: best, inj, representatives });
        }
        Ok(reps.swap_remove(0).2)
    }

    /// Flat distance `|torus_log(x, y)|`, without the injectivity restriction.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self.torus_log(x, y) {
            Ok(w) => Ok(norm(&w)),
            Err(Error::CutLocus { distance, .. }) => Ok(distance),
            Err(e) => Err(e),
        }
    }

    /// Vectors `y - x + γ` over lattice vectors `γ` with norm at most `radius`,
    /// sorted by norm then by the coefficients of `γ`.
    pub fn deck_images(&self, x: &[f64], y: &[f64], radius: f64) -> Result<Vec<Vec<f64>>> {
        self.check_point(x)?;
        self.check_point(y)?;
        if !(radius > 0.0) {
            return domain(format!("image radius must be positive, got {radius}"));
        }
        let diff: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
        let walker = Walker::new(&self.basis, &self.basis_inv, &diff, self.count_cap);
        walker.check_estimate(radius + norm(&diff), self.covolume)?;
        let mut images: Vec<(f64, Vec<i64>, Vec<f64>)> = Vec::new();
        walker.walk(-1.0, radius, |c, v, n2| images.push((n2.sqrt(), c.to_vec(), v.to_vec())))?;
        images.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        Ok(images.into_iter().map(|i| i.2).collect())
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return domain(format!("point has {} coordinates, lattice has dimension {}", p.len(), self.dim));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return domain("point has non-finite coordinates");
        }
        Ok(())
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn is_diagonal(m: &DMatrix<f64>) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == 0.0))
}

/// Enumerates integer vectors `c` with `lo < |offset + G c| ≤ hi`.
///
/// The outer coordinates range over the box `|c_i - c0_i| ≤ ‖row_i(G⁻¹)‖ hi`,
/// which contains every solution; the last coordinate is solved from the
/// quadratic in closed form and then filtered exactly.
struct Walker<'a> {
    gen: &'a DMatrix<f64>,
    gen_inv: &'a DMatrix<f64>,
    offset: &'a [f64],
    cap: u64,
}

impl<'a> Walker<'a> {
    fn new(gen: &'a DMatrix<f64>, gen_inv: &'a DMatrix<f64>, offset: &'a [f64], cap: u64) -> Self {
        Self { gen, gen_inv, offset, cap }
    }

    fn check_estimate(&self, hi: f64, covolume: f64) -> Result<()> {
        let n = self.gen.nrows();
        let vol = crate::specfun::unit_ball_volume(n) * hi.powi(n as i32);
        let estimate = vol / covolume;
        if estimate > self.cap as f64 {
            return Err(Error::Resource {
                what: format!("lattice enumeration to radius {hi}"),
                needed: estimate.min(u64::MAX as f64) as u64,
                cap: self.cap,
            });
        }
        Ok(())
    }

    fn walk<F: FnMut(&[i64], &[f64], f64)>(&self, lo: f64, hi: f64, mut f: F) -> Result<()> {
        let n = self.gen.nrows();
        let hi2 = hi * hi;
        let lo2 = if lo < 0.0 { -1.0 } else { lo * lo };
        let off = nalgebra::DVector::from_column_slice(self.offset);
        let center = -(self.gen_inv * &off);
        let mut ranges = Vec::with_capacity(n);
        for i in 0..n {
            let w = self.gen_inv.row(i).norm() * hi;
            ranges.push(((center[i] - w).floor() as i64 - 1, (center[i] + w).ceil() as i64 + 1));
        }
        let last: Vec<f64> = self.gen.column(n - 1).iter().copied().collect();
        let a = dot(&last, &last);
        let mut coeffs: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        let mut point = vec![0.0; n];
        let mut count = 0u64;
        let mut base = vec![0.0; n];
        loop {
            // base = offset + Σ_{i<n-1} g_i c_i
            for r in 0..n {
                let mut s = self.offset[r];
                for i in 0..n - 1 {
                    s += self.gen[(r, i)] * coeffs[i] as f64;
                }
                base[r] = s;
            }
            let b = dot(&base, &last);
            let u2 = dot(&base, &base);
            let disc = b * b - a * (u2 - hi2);
            if disc >= 0.0 {
                let sq = disc.sqrt();
                let c_lo = ((-b - sq) / a).floor() as i64 - 1;
                let c_hi = ((-b + sq) / a).ceil() as i64 + 1;
                // interior that fails |v| > lo
                let (skip_lo, skip_hi) = if lo2 > 0.0 {
                    let d_in = b * b - a * (u2 - lo2);
                    if d_in > 0.0 {
                        let s_in = d_in.sqrt();
                        (((-b - s_in) / a).ceil() as i64 + 1, ((-b + s_in) / a).floor() as i64 - 1)
                    } else {
                        (1, 0)
                    }
                } else {
                    (1, 0)
                };
                let mut c = c_lo;
                while c <= c_hi {
                    if skip_lo <= skip_hi && c >= skip_lo && c <= skip_hi {
                        c = skip_hi + 1;
                        continue;
                    }
                    coeffs[n - 1] = c;
                    for r in 0..n {
                        point[r] = base[r] + last[r] * c as f64;
                    }
                    let n2 = dot(&point, &point);
                    if n2 <= hi2 && n2 > lo2 {
                        count += 1;
                        if count > self.cap {
                            return Err(Error::Resource {
                                what: format!("lattice enumeration to radius {hi}"),
                                needed: count,
                                cap: self.cap,
                            });
                        }
                        f(&coeffs, &point, n2);
                    }
                    c += 1;
                }
            }
            // odometer over the outer coordinates
            let mut i = 0;
            loop {
                if i == n - 1 {
                    return Ok(());
                }
                coeffs[i] += 1;
                if coeffs[i] <= ranges[i].1 {
                    break;
                }
                coeffs[i] = ranges[i].0;
                i += 1;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> Lattice {
        Lattice::square(2, 2.0 * PI).unwrap()
    }

    fn brute_count(r: f64, box_half: i64) -> usize {
        let mut n = 0;
        for a in -box_half..=box_half {
            for b in -box_half..=box_half {
                if ((a * a + b * b) as f64) <= r * r {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn dual_of_two_pi_grid_is_integer_grid() {
        let l = grid();
        assert_eq!(l.dual_basis()[(0, 0)], 1.0);
        assert!((l.covolume() - 4.0 * PI * PI).abs() < 1e-12);
        let ones = l.enumerate_dual(1.0).unwrap();
        assert_eq!(ones.len(), 5);
        assert_eq!(ones[0].coeffs, vec![0, 0]);
        assert_eq!(l.enumerate_dual(0.5).unwrap().len(), 1);
    }

    #[test]
    fn dual_count_at_radius_ten_matches_brute_force() {
        let l = grid();
        let pts = l.enumerate_dual(10.0).unwrap();
        assert_eq!(pts.len(), brute_count(10.0, 10));
        assert_eq!(pts.len(), 317);
        for w in pts.windows(2) {
            assert!(w[0].norm <= w[1].norm);
            assert_ne!(w[0].coeffs, w[1].coeffs);
        }
    }

    #[test]
    fn skewed_enumeration_is_complete() {
        let basis = DMatrix::from_column_slice(2, 2, &[1.3, 0.2, 0.9, 1.7]);
        let l = Lattice::new(basis).unwrap();
        let r = 23.0;
        let pts = l.enumerate_dual(r).unwrap();
        let d = l.dual_basis();
        let mut brute = 0;
        for a in -200i64..=200 {
            for b in -200i64..=200 {
                let v0 = d[(0, 0)] * a as f64 + d[(0, 1)] * b as f64;
                let v1 = d[(1, 0)] * a as f64 + d[(1, 1)] * b as f64;
                if v0 * v0 + v1 * v1 <= r * r {
                    brute += 1;
                }
            }
        }
        assert_eq!(pts.len(), brute);
    }

    #[test]
    fn shell_counts() {
        let l = grid();
        assert_eq!(l.shell_count(0.5, 1.0).unwrap(), 4);
        assert_eq!(l.shell_count(0.0, 10.0).unwrap(), 316);
        assert_eq!(l.shell_count(1.0, 1.2).unwrap(), 0);
        assert!(l.shell_count(2.0, 1.0).is_err());
    }

    #[test]
    fn resource_cap_is_enforced() {
        let l = grid().with_count_cap(1000);
        assert!(matches!(l.enumerate_dual(100.0), Err(Error::Resource { .. })));
        assert!(matches!(l.shell_count(0.0, 100.0), Err(Error::Resource { .. })));
    }

    #[test]
    fn injectivity_radii() {
        assert!((grid().injectivity_radius() - PI).abs() < 1e-15);
        let rect = Lattice::rectangular(&[2.0 * PI, 4.0 * PI]).unwrap();
        assert!((rect.injectivity_radius() - PI).abs() < 1e-15);
        let hex = Lattice::hexagonal(1.0).unwrap();
        // candidates a e1 + b e2 with a, b in [-2, 2]
        let mut best = f64::INFINITY;
        let b = hex.basis();
        for i in -2i32..=2 {
            for j in -2i32..=2 {
                if i == 0 && j == 0 {
                    continue;
                }
                let x = b[(0, 0)] * i as f64 + b[(0, 1)] * j as f64;
                let y = b[(1, 0)] * i as f64 + b[(1, 1)] * j as f64;
                best = best.min((x * x + y * y).sqrt());
            }
        }
        assert!((hex.injectivity_radius() - 0.5 * best).abs() < 1e-15);
        assert!((hex.injectivity_radius() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn torus_log_examples() {
        let l = grid();
        assert_eq!(l.torus_log(&[0.3, 0.4], &[0.3, 0.4]).unwrap(), vec![0.0, 0.0]);
        let w = l.torus_log(&[0.0, 0.0], &[6.0, 0.0]).unwrap();
        assert!((w[0] - (6.0 - 2.0 * PI)).abs() < 1e-15);
        assert_eq!(w[1], 0.0);
        match l.torus_log(&[0.0, 0.0], &[PI, 0.0]) {
            Err(Error::CutLocus { representatives, .. }) => assert_eq!(representatives.len(), 2),
            other => panic!("expected a cut-locus error, got {other:?}"),
        }
    }

    #[test]
    fn deck_image_examples() {
        let l = grid();
        let p = [0.7, -1.1];
        assert_eq!(l.deck_images(&p, &p, 0.9 * 2.0 * PI).unwrap(), vec![vec![0.0, 0.0]]);
        assert_eq!(l.deck_images(&p, &p, 2.0 * PI).unwrap().len(), 5);
        let imgs = l.deck_images(&[0.0, 0.0], &[1.0, 0.0], 7.0).unwrap();
        let mut brute = Vec::new();
        for a in -3i32..=3 {
            for b in -3i32..=3 {
                let v = [1.0 + 2.0 * PI * a as f64, 2.0 * PI * b as f64];
                if norm(&v) <= 7.0 {
                    brute.push(v.to_vec());
                }
            }
        }
        brute.sort_by(|x, y| norm(x).total_cmp(&norm(y)));
        assert_eq!(imgs.len(), brute.len());
        for (a, b) in imgs.iter().zip(&brute) {
            assert!((norm(a) - norm(b)).abs() < 1e-12);
        }
    }

    #[test]
    fn weyl_count_at_two_hundred() {
        let l = grid();
        let n = l.enumerate_dual(200.0).unwrap().len() as f64;
        let continuum = PI * 200.0f64.powi(2) * l.covolume() / (4.0 * PI * PI);
        assert!((n / continuum - 1.0).abs() < 0.05);
    }

    #[test]
    fn three_dimensional_counts() {
        let l = Lattice::square(3, 2.0 * PI).unwrap();
        let mut brute = 0;
        for a in -5i64..=5 {
            for b in -5i64..=5 {
                for c in -5i64..=5 {
                    if a * a + b * b + c * c <= 25 {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(l.enumerate_dual(5.0).unwrap().len(), brute);
        assert!((l.injectivity_radius() - PI).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_bases() {
        assert!(Lattice::new(DMatrix::from_column_slice(2, 2, &[1.0, 2.0, 2.0, 4.0])).is_err());
        assert!(Lattice::new(DMatrix::identity(4, 4)).is_err());
        assert!(grid().torus_log(&[0.0], &[0.0, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn gauss_count_consistency(lam in 0.6f64..40.0) {
            let l = grid();
            let total = l.enumerate_dual(lam).unwrap().len() as u64;
            prop_assert_eq!(l.shell_count(0.0, lam).unwrap() + 1, total);
        }

        #[test]
        fn torus_log_is_antisymmetric(x0 in 0.0f64..std::f64::consts::TAU, x1 in 0.0f64..std::f64::consts::TAU, y0 in 0.0f64..std::f64::consts::TAU, y1 in 0.0f64..std::f64::consts::TAU) {
            let l = Lattice::hexagonal(2.0).unwrap();
            let x = [x0, x1];
            let y = [y0, y1];
            if let (Ok(a), Ok(b)) = (l.torus_log(&x, &y), l.torus_log(&y, &x)) {
                prop_assert!((a[0] + b[0]).abs() < 1e-9 && (a[1] + b[1]).abs() < 1e-9);
            }
        }

        #[test]
        fn image_norms_symmetric_under_swap(x0 in -3.0f64..3.0, x1 in -3.0f64..3.0, y0 in -3.0f64..3.0, y1 in -3.0f64..3.0) {
            let l = grid();
            let a = l.deck_images(&[x0, x1], &[y0, y1], 12.0).unwrap();
            let b = l.deck_images(&[y0, y1], &[x0, x1], 12.0).unwrap();
            prop_assert_eq!(a.len(), b.len());
            for (u, v) in a.iter().zip(&b) {
                prop_assert!((norm(u) - norm(v)).abs() < 1e-9);
            }
        }
    }
}
