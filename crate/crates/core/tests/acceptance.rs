//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use weyl_lab::analysis::{
    cluster_sup_scan, lambda_grid, localized_integral, localized_sum_ratio_scan, random_pairs, WidthRule,
};
use weyl_lab::lattice::Lattice;
use weyl_lab::manifolds::{DerivIndex, ModelManifold};
use weyl_lab::projector::{cluster_vs_bessel, offdiagonal_scan, remainder_scan, spectral_jump};
use weyl_lab::randomwaves::RandomWaveEnsemble;
use weyl_lab::smoothing::{fit_h_decay, multiplier, MollifierSpec, SmoothedProjector};
use weyl_lab::specfun::{bessel_j, legendre_p, BesselOrder};
use weyl_lab::Result;

type Outcome = Result<(bool, String)>;
type Criterion = (&'static str, fn() -> Outcome);

fn torus() -> ModelManifold {
    ModelManifold::flat_torus(Lattice::square(2, 2.0 * PI).unwrap())
}

fn scan_grid(lo: f64, hi: f64) -> Vec<f64> {
    lambda_grid(lo, hi, 30, true).unwrap()
}

fn diagonal_points() -> Vec<(Vec<f64>, Vec<f64>)> {
    [[0.0, 0.0], [0.9, 2.3], [4.1, 5.7]].iter().map(|p| (p.to_vec(), p.to_vec())).collect()
}

fn poisson_oracle() -> Outcome {
    let m = torus();
    let spec = MollifierSpec::for_manifold(&m)?;
    let pairs = random_pairs(&m, 20_240_601, 20, 0.0, 0.9 * m.injectivity_radius())?;
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for lam in [5.0, 10.0, 20.0] {
        for a in [1.0, 0.5] {
            let p = SmoothedProjector::new(&m, &spec, lam, a)?;
            p.validate(&pairs[0].0, &pairs[0].1)?;
            let spectral = p.spectral_pairs(&pairs)?;
            for ((x, y), s) in pairs.iter().zip(spectral) {
                worst = worst.max((s - p.images(x, y)?).abs() / (1.0 + s.abs()));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((worst <= 1e-6 && secs <= 120.0, format!("max |spectral - images|/(1+|spectral|) = {worst:.2e}, {secs:.1} s")))
}

fn weyl_leading_term() -> Outcome {
    let m = torus();
    let grid = scan_grid(50.0, 400.0);
    let plain = remainder_scan(&m, &grid, &diagonal_points(), DerivIndex::ZERO)?;
    let deriv = remainder_scan(&m, &grid, &diagonal_points(), DerivIndex::along_first_axis(1, 1)?)?;
    let shift = deriv.fitted_exponent - plain.fitted_exponent;
    let ok = plain.fitted_exponent <= 1.0 && (shift - 2.0).abs() <= 0.3;
    Ok((ok, format!("exponent {:.3}, shift with (1,1) derivatives {:.3}", plain.fitted_exponent, shift)))
}

fn zonal_sharpness() -> Outcome {
    let s = ModelManifold::round_sphere(1.0)?;
    let x = [0.7, 1.1];
    let (mut exact_err, mut ratio_lo, mut ratio_hi) = (0.0f64, f64::INFINITY, 0.0f64);
    for l in 1..=60usize {
        let level = ((l * (l + 1)) as f64).sqrt();
        let jump = spectral_jump(&s, level, &x)?;
        exact_err = exact_err.max((jump - (2 * l + 1) as f64 / (4.0 * PI)).abs());
        if l >= 20 {
            let r = jump / level * 2.0 * PI;
            ratio_lo = ratio_lo.min(r);
            ratio_hi = ratio_hi.max(r);
        }
    }
    let ok = exact_err <= 1e-10 && ratio_lo >= 0.9 && ratio_hi <= 1.1;
    Ok((ok, format!("max jump error {exact_err:.1e}, 2π·jump/λ_l in [{ratio_lo:.4}, {ratio_hi:.4}] for l in 20..=60")))
}

fn cluster_to_bessel() -> Outcome {
    let m = torus();
    let lam = 200.0;
    let dists: Vec<f64> = (0..=40).map(|i| 8.0 / lam * i as f64 / 40.0).collect();
    let x0 = [0.3, 1.2];
    let mut torus_worst: f64 = 0.0;
    for dir in [[1.0, 0.0], [1.0, 1.0], [0.3, -1.0]] {
        let mut mean = vec![0.0; dists.len()];
        for k in 0..5 {
            let lo = m.shift_off_spectrum(lam + k as f64)?;
            let hi_ok = m.spectrum_hit(lo + 1.0)?.is_none();
            let lo = if hi_ok { lo } else { m.shift_off_spectrum(lo + 1e-6)? };
            let t = cluster_vs_bessel(&m, lo, 1.0, &x0, &dir, &dists, DerivIndex::ZERO)?;
            for (acc, r) in mean.iter_mut().zip(&t.rows) {
                *acc += r.relative_error / 5.0;
            }
        }
        torus_worst = torus_worst.max(mean.iter().copied().fold(0.0, f64::max));
    }
    let l = 50usize;
    let ll = ((l * (l + 1)) as f64).sqrt();
    let mass = (2 * l + 1) as f64 / (4.0 * PI);
    let mut sphere_worst: f64 = 0.0;
    for i in 0..=400 {
        let th = 8.0 / ll * i as f64 / 400.0;
        let zonal = mass * legendre_p(l, th.cos())?;
        let bessel = ll / (2.0 * PI) * bessel_j(BesselOrder::integer(0)?, ll * th)?;
        sphere_worst = sphere_worst.max((zonal - bessel).abs() / mass);
    }
    let ok = torus_worst <= 0.1 && sphere_worst <= 0.05;
    Ok((ok, format!("torus window-averaged relative error {torus_worst:.4}, sphere l = 50 relative error {sphere_worst:.4}")))
}

fn offdiagonal_decay() -> Outcome {
    let m = torus();
    let pairs = random_pairs(&m, 77, 8, 1.0, 0.9 * m.injectivity_radius())?;
    let r = offdiagonal_scan(&m, &scan_grid(50.0, 400.0), 1.0, &pairs)?;
    Ok((r.fitted_exponent <= 0.75, format!("exponent {:.3} over {} pairs at distance >= 1", r.fitted_exponent, pairs.len())))
}

fn mollifier_bounds() -> Outcome {
    let spec = MollifierSpec::for_injectivity_radius(PI)?;
    let (mut worst_violation, mut worst_half) = (0.0f64, 0.0f64);
    for lam in [10.0f64, 40.0] {
        for a in [1.0, 0.5, 0.25] {
            let lo = (-lam / a).max(-40.0);
            let hi = 40.0;
            let fit: Vec<f64> = (0..).map(|k| lo + 0.1 * k as f64).take_while(|s| *s <= hi).collect();
            let check: Vec<f64> = (0..1000).map(|k| lo + (hi - lo) * (k as f64 + 0.381966) / 1000.0).collect();
            let gap = check.iter().map(|c| fit.iter().map(|f| (c - f).abs()).fold(f64::INFINITY, f64::min)).fold(f64::INFINITY, f64::min);
            assert!(gap > 1e-9, "fit and check grids overlap");
            for order in [2, 4] {
                worst_violation = worst_violation.max(fit_h_decay(&spec, lam, a, order, &fit, &check)?.violation());
            }
            worst_half = worst_half.max((multiplier(&spec, lam, a, lam)? - 0.5).abs());
        }
    }
    let ok = worst_violation < 0.05 && worst_half <= 0.01;
    Ok((ok, format!("max violation of fitted constants {:.2}%, max |m(λ) - 1/2| = {worst_half:.2e}", 100.0 * worst_violation)))
}

fn random_waves() -> Outcome {
    let m = torus();
    let ens = RandomWaveEnsemble::new(m.clone(), 200.0, 42, 5000)?;
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = [
        ([0.0, 0.0], [0.0, 0.0]),
        ([0.0, 0.0], [0.01, 0.0]),
        ([0.0, 0.0], [0.0, 0.02]),
        ([1.0, 2.0], [1.012, 2.009]),
        ([3.0, 1.5], [3.0, 1.5]),
        ([3.0, 1.5], [3.3, 1.1]),
        ([5.2, 0.4], [5.21, 0.41]),
        ([2.2, 4.4], [2.9, 5.0]),
        ([0.5, 6.0], [0.5, 5.985]),
        ([4.0, 4.0], [1.0, 1.0]),
    ]
    .iter()
    .map(|(x, y)| (x.to_vec(), y.to_vec()))
    .collect();
    let report = ens.covariance_report(&pairs)?;
    let z = report.max_z_score();

    let x0 = [0.4, 0.9];
    let tangent: Vec<([f64; 2], [f64; 2])> = (0..4)
        .flat_map(|j| {
            let ang = j as f64 * PI / 4.0 + 0.1;
            let e = [ang.cos(), ang.sin()];
            (0..=10).map(move |i| {
                let h = 0.25 * i as f64;
                ([h * e[0], h * e[1]], [-h * e[0], -h * e[1]])
            })
        })
        .collect();
    let worst = |lam: f64| -> Result<f64> {
        let e = RandomWaveEnsemble::new(m.clone(), lam, 42, 1)?;
        let mut w: f64 = 0.0;
        for (u, v) in &tangent {
            w = w.max(e.rescaled_covariance_error(&x0, u, v)?.abs_error);
        }
        Ok(w)
    };
    let (e50, e200, e400) = (worst(50.0)?, worst(200.0)?, worst(400.0)?);
    let ok = z <= 4.0 && e200 <= 0.05 && e400 < e50;
    Ok((ok, format!("max |z| = {z:.2} over 10 pairs; rescaled error {e200:.4} at λ=200, {e50:.4} at λ=50, {e400:.4} at λ=400")))
}

fn localized_sums() -> Outcome {
    // the sum over integers k depends on the fractional part of λ, so the nodes are integers
    let mut grid: Vec<f64> = scan_grid(50.0, 800.0).into_iter().map(f64::round).collect();
    grid.dedup();
    let (mut spread, mut ratio_lo, mut ratio_hi) = (0.0f64, f64::INFINITY, 0.0f64);
    for p in [0.0, 1.0, 2.0] {
        let r = localized_sum_ratio_scan(&grid, 4, p)?;
        spread = spread.max(r.normalized_spread().unwrap());
        for (lam, s) in grid.iter().zip(&r.sup_values) {
            let q = s / localized_integral(*lam, 4, p)?;
            ratio_lo = ratio_lo.min(q);
            ratio_hi = ratio_hi.max(q);
        }
    }
    let ok = spread <= 1.5 && ratio_lo >= 0.5 && ratio_hi <= 2.0;
    Ok((ok, format!("max/min of sum/λ^p {spread:.4}, sum/integral in [{ratio_lo:.3}, {ratio_hi:.3}]")))
}

fn cluster_sup() -> Outcome {
    let m = torus();
    let grid = scan_grid(50.0, 800.0);
    let xs = vec![vec![0.0, 0.0], vec![1.3, 4.4]];
    let plain = cluster_sup_scan(&m, &grid, WidthRule::OneOverLog, DerivIndex::ZERO, &xs)?;
    let deriv = cluster_sup_scan(&m, &grid, WidthRule::OneOverLog, DerivIndex::along_first_axis(1, 1)?, &xs)?;
    let spread = plain.normalized_spread().unwrap();
    let shift = deriv.fitted_exponent - plain.fitted_exponent;
    let ok = spread <= 2.0 && (shift - 2.0).abs() <= 0.3;
    Ok((ok, format!("max/min of value·log λ/λ {spread:.4}, derivative exponent shift {shift:.3}")))
}

fn reproducibility() -> Outcome {
    let runs: &[(&str, &[&str])] = &[
        ("eigens", &["eigens", "--lambda-grid", "0:10:1"]),
        ("kernel", &["kernel", "--manifold", "sphere2", "--lambda", "5.5"]),
        ("remainder-scan", &["remainder-scan", "--lambda-grid", "50:100:6:log"]),
        ("offdiag-scan", &["offdiag-scan", "--lambda-grid", "50:100:6:log"]),
        ("smooth-compare", &["smooth-compare", "--lambda-grid", "5:10:2", "--pairs", "3"]),
        ("cluster-bessel", &["cluster-bessel", "--lambda", "200"]),
        ("randomwave", &["randomwave", "--lambda", "60", "--samples", "200"]),
        ("appendix-a", &["appendix-a", "--lambda-grid", "50:800:8:log"]),
        ("cluster-sup", &["cluster-sup", "--lambda-grid", "50:800:8:log", "--width-rule", "one-over-log"]),
    ];
    let mut mismatched = Vec::new();
    for (name, args) in runs {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let mut argv: Vec<String> = std::iter::once("weyl-lab").chain(args.iter().copied()).map(String::from).collect();
        argv.extend(["--out".to_string(), a.path().display().to_string()]);
        let first = weyl_lab::cli::run_to(argv, &mut std::io::sink());
        let manifest = a.path().join(format!("{name}.manifest.json"));
        let replay = ["weyl-lab", "replay", manifest.to_str().unwrap(), "--out", b.path().to_str().unwrap()];
        let second = weyl_lab::cli::run_to(replay, &mut std::io::sink());
        let same = first == 0
            && second == 0
            && std::fs::read(a.path().join(format!("{name}.csv"))).ok() == std::fs::read(b.path().join(format!("{name}.csv"))).ok();
        if !same {
            mismatched.push(*name);
        }
    }
    Ok((mismatched.is_empty(), format!("{} subcommands replayed, mismatches: {mismatched:?}", runs.len())))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("smoothed projector: mode sum equals image sum", poisson_oracle),
        ("diagonal remainder growth", weyl_leading_term),
        ("zonal jumps on the sphere", zonal_sharpness),
        ("cluster kernel against Bessel prediction", cluster_to_bessel),
        ("off-diagonal growth", offdiagonal_decay),
        ("multiplier decay constants", mollifier_bounds),
        ("random-wave covariance and scaling limit", random_waves),
        ("localized sums and integrals", localized_sums),
        ("cluster sup with 1/log windows", cluster_sup),
        ("CLI replay", reproducibility),
    ];
    let mut failed = 0;
    for (i, (label, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        let verdict = if ok { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict}  {label}: {detail} [{:.1} s]", i + 1, start.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
