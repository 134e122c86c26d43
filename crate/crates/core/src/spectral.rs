//! Spectrum of `A_h` and the energy-norm resolvent along the imaginary axis.
//!
//! The resolvent is `R(λ) = (iλ - A_h)^{-1} = (iλB - C)^{-1} B`. Its norm in the
//! `M_h` geometry is the square root of the top eigenvalue of `R†R`, where
//! `R† = M_h^{-1} B (iλB - C)^{-H} M_h` is the `M_h`-adjoint; that eigenvalue
//! comes from Lanczos with full reorthogonalization in the `M_h` inner product.
//! Each sample costs one banded complex factorization.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
pub use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::generator::SemiDiscreteSystem;
use crate::linalg::{self, BandLu};
use crate::{Error, Result};

/// Largest state dimension accepted by the dense eigensolver.
pub const DENSE_LIMIT: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolventSample {
    pub lambda: f64,
    pub sigma_min: f64,
    /// `1/sigma_min`; infinite when `iλ` is an eigenvalue to working precision.
    pub res_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumResult {
    /// Sorted by imaginary part, then real part.
    pub eigenvalues: Vec<Complex64>,
    pub spectral_abscissa: f64,
    pub min_axis_distance: f64,
}

impl SpectrumResult {
    fn from_values(mut eigenvalues: Vec<Complex64>) -> Self {
        eigenvalues.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
        let spectral_abscissa = eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let min_axis_distance = eigenvalues.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min);
        Self {
            eigenvalues,
            spectral_abscissa,
            min_axis_distance,
        }
    }

    /// CSV with header `re,im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "re,im")?;
        for z in &self.eigenvalues {
            writeln!(w, "{:?},{:?}", z.re, z.im)?;
        }
        Ok(())
    }
}

/// All eigenvalues of `A_h` from a dense real Schur decomposition.
pub fn eigenvalues(sys: &SemiDiscreteSystem) -> Result<SpectrumResult> {
    let n = sys.dim();
    if n > DENSE_LIMIT {
        return Err(Error::Resolution(format!(
            "state dimension {n} exceeds the dense limit {DENSE_LIMIT}; use eigenvalues_near"
        )));
    }
    let a = sys.dense_generator();
    let schur = Schur::try_new(a, f64::EPSILON, 200 * n.max(10)).ok_or_else(|| Error::Convergence {
        iterations: 200 * n.max(10),
        residual: f64::NAN,
        detail: "real Schur iteration did not converge".into(),
    })?;
    Ok(SpectrumResult::from_values(
        schur.complex_eigenvalues().iter().copied().collect(),
    ))
}

const ARNOLDI_TOL: f64 = 1e-10;

/// The `count` eigenvalues of `A_h` closest to `shift`, by shift-invert Arnoldi on
/// `(C - σB)^{-1} B`: a Ritz value `θ` maps back to `μ = σ + 1/θ`.
pub fn eigenvalues_near(sys: &SemiDiscreteSystem, shift: Complex64, count: usize) -> Result<SpectrumResult> {
    let n = sys.dim();
    if count == 0 || count > n {
        return Err(Error::Parameter(format!("count must be in 1..={n}, got {count}")));
    }
    let lu = sys
        .band_combination(-shift, Complex64::new(1.0, 0.0))
        .factor()
        .map_err(|e| Error::Solver(format!("shift {shift} is an eigenvalue to working precision: {e}")))?;
    let ordering = sys.ordering();
    let op = |x: &[Complex64]| -> Vec<Complex64> {
        let mut w = ordering.permute(&sys.lhs.mul(x));
        lu.solve_in_place(&mut w);
        ordering.unpermute(&w)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(0xa4d1);
    let start: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), 0.0))
        .collect();

    let mut m = (2 * count + 20).max(40).min(n);
    loop {
        let (values, worst) = arnoldi(&op, &start, m, count)?;
        if worst <= ARNOLDI_TOL || m == n {
            if worst > ARNOLDI_TOL {
                return Err(Error::Convergence {
                    iterations: m,
                    residual: worst,
                    detail: format!("shift-invert Arnoldi around {shift}"),
                });
            }
            let mut mus: Vec<Complex64> = values.iter().map(|t| shift + 1.0 / t).collect();
            mus.sort_by(|a, b| (a - shift).norm().total_cmp(&(b - shift).norm()));
            return Ok(SpectrumResult::from_values(mus));
        }
        m = (2 * m).min(n);
    }
}

/// `m` Arnoldi steps; returns the `count` largest Ritz values and the worst
/// relative Ritz residual among them.
fn arnoldi(
    op: &impl Fn(&[Complex64]) -> Vec<Complex64>,
    start: &[Complex64],
    m: usize,
    count: usize,
) -> Result<(Vec<Complex64>, f64)> {
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
    let mut h = DMatrix::<Complex64>::zeros(m + 1, m);
    let nrm = linalg::norm2(start);
    basis.push(start.iter().map(|x| x / nrm).collect());
    let mut steps = m;
    for k in 0..m {
        let mut w = op(&basis[k]);
        for _ in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let c = linalg::dot(q, &w);
                h[(i, k)] += c;
                linalg::axpy(-c, q, &mut w);
            }
        }
        let beta = linalg::norm2(&w);
        h[(k + 1, k)] = Complex64::new(beta, 0.0);
        if beta <= 1e-14 * h.column(k).norm() {
            steps = k + 1;
            break;
        }
        basis.push(w.iter().map(|x| x / beta).collect());
    }
    let hm = h.view((0, 0), (steps, steps)).into_owned();
    let tail = h[(steps, steps - 1)].norm();
    let ritz = Schur::new(hm.clone()).eigenvalues().ok_or_else(|| Error::Convergence {
        iterations: steps,
        residual: f64::NAN,
        detail: "Hessenberg eigenvalue problem did not converge".into(),
    })?;
    let mut order: Vec<Complex64> = ritz.iter().copied().collect();
    order.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    order.truncate(count);
    if order.len() < count {
        return Ok((order, f64::INFINITY));
    }
    let mut worst = 0.0f64;
    for &theta in &order {
        let y = ritz_vector(&hm, theta);
        worst = worst.max(tail * y[steps - 1].norm() / theta.norm());
    }
    Ok((order, worst))
}

/// Unit eigenvector of a small dense matrix for a known eigenvalue, by inverse iteration.
fn ritz_vector(h: &DMatrix<Complex64>, theta: Complex64) -> DVector<Complex64> {
    let n = h.nrows();
    let perturbed = theta + Complex64::new(1e-12, 1e-12) * theta.norm().max(1.0);
    let lu = (h - DMatrix::<Complex64>::identity(n, n) * perturbed).lu();
    let mut y = DVector::from_element(n, Complex64::new(1.0, 0.0));
    for _ in 0..3 {
        if let Some(next) = lu.solve(&y) {
            let nrm = next.norm();
            if nrm.is_finite() && nrm > 0.0 {
                y = next / Complex64::new(nrm, 0.0);
            }
        }
    }
    y
}

const LANCZOS_TOL: f64 = 1e-8;

fn lanczos_start(n: usize) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), 0.0))
        .collect()
}

/// Energy-norm resolvent `||(iλ - A_h)^{-1}||_{M_h}` and `sigma_min = 1/res_norm`.
pub fn resolvent_norm(sys: &SemiDiscreteSystem, lambda: f64) -> Result<ResolventSample> {
    if !lambda.is_finite() {
        return Err(Error::Parameter(format!("lambda must be finite, got {lambda}")));
    }
    let lu = match sys
        .band_combination(Complex64::new(0.0, lambda), Complex64::new(-1.0, 0.0))
        .factor()
    {
        Ok(lu) => lu,
        Err(Error::Singular { .. }) => {
            return Ok(ResolventSample {
                lambda,
                sigma_min: 0.0,
                res_norm: f64::INFINITY,
            })
        }
        Err(e) => return Err(e),
    };
    let theta = top_eig_rstar_r(sys, &lu)?;
    if !(theta.is_finite() && theta > 0.0) {
        return Ok(ResolventSample {
            lambda,
            sigma_min: 0.0,
            res_norm: f64::INFINITY,
        });
    }
    let res_norm = theta.sqrt();
    Ok(ResolventSample {
        lambda,
        sigma_min: 1.0 / res_norm,
        res_norm,
    })
}

/// Largest eigenvalue of `R†R` for `R = T^{-1}B`, `T = iλB - C` factored in `lu`.
fn top_eig_rstar_r(sys: &SemiDiscreteSystem, lu: &BandLu<Complex64>) -> Result<f64> {
    let n = sys.dim();
    let ordering = sys.ordering();
    let apply = |x: &[Complex64]| -> Vec<Complex64> {
        let mut w = ordering.permute(&sys.lhs.mul(x));
        lu.solve_in_place(&mut w);
        let rx = ordering.unpermute(&w);
        let mut g = ordering.permute(&sys.gram_apply(&rx));
        lu.solve_adjoint_in_place(&mut g);
        let mut out = sys.lhs.mul(&ordering.unpermute(&g));
        sys.gram_solve_in_place(&mut out);
        out
    };

    let max_iter = n.min(300);
    let mut q: Vec<Vec<Complex64>> = Vec::with_capacity(max_iter);
    let mut mq: Vec<Vec<Complex64>> = Vec::with_capacity(max_iter);
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();

    let start = lanczos_start(n);
    let s0 = sys.norm_raw(&start);
    let q0: Vec<Complex64> = start.iter().map(|x| x / s0).collect();
    mq.push(sys.gram_apply(&q0));
    q.push(q0);

    let mut last = 0.0f64;
    let mut stagnant = 0;
    let mut residual = f64::INFINITY;
    for k in 0..max_iter {
        let mut w = apply(&q[k]);
        let a = linalg::dot(&mq[k], &w).re;
        alpha.push(a);
        for _ in 0..2 {
            for (qi, mqi) in q.iter().zip(&mq) {
                let c = linalg::dot(mqi, &w);
                linalg::axpy(-c, qi, &mut w);
            }
        }
        let mw = sys.gram_apply(&w);
        let b = linalg::dot(&w, &mw).re.max(0.0).sqrt();

        let t = tridiagonal(&alpha, &beta);
        let eig = SymmetricEigen::new(t);
        let (top_idx, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.total_cmp(y.1))
            .expect("nonempty tridiagonal");
        residual = b * eig.eigenvectors[(k, top_idx)].abs();

        if residual <= LANCZOS_TOL * theta || b <= 1e-300 || k + 1 == n {
            return Ok(theta);
        }
        if (theta - last).abs() <= 1e-14 * theta {
            stagnant += 1;
            if stagnant >= 3 {
                return Ok(theta);
            }
        } else {
            stagnant = 0;
        }
        last = theta;
        beta.push(b);
        let inv = 1.0 / b;
        q.push(w.iter().map(|x| x * inv).collect());
        mq.push(mw.iter().map(|x| x * inv).collect());
    }
    Err(Error::Convergence {
        iterations: max_iter,
        residual,
        detail: "Lanczos for the resolvent norm".into(),
    })
}

fn tridiagonal(alpha: &[f64], beta: &[f64]) -> DMatrix<f64> {
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    t
}

/// Evaluates every grid point independently (in parallel); output order follows the grid.
pub fn resolvent_sweep(sys: &SemiDiscreteSystem, grid: &[f64]) -> Result<Vec<ResolventSample>> {
    if grid.iter().any(|l| !l.is_finite()) {
        return Err(Error::Parameter("lambda grid must be finite".into()));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Parameter("lambda grid must be sorted".into()));
    }
    grid.par_iter().map(|&l| resolvent_norm(sys, l)).collect()
}

/// `count` points log-spaced on `[lo, hi]`, endpoints included.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo) || count == 0 {
        return Err(Error::Parameter(format!("invalid log grid [{lo}, {hi}] x {count}")));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let r = (hi / lo).ln();
    let mut g: Vec<f64> = (0..count)
        .map(|k| lo * (r * k as f64 / (count - 1) as f64).exp())
        .collect();
    g[count - 1] = hi;
    Ok(g)
}

/// `count` points evenly spaced on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![lo];
    }
    (0..count)
        .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthFit {
    pub slope: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub lambda_min: f64,
    pub samples_used: usize,
}

/// Least-squares slope of `log(envelope)` against `log λ` over samples with
/// `λ >= lambda_min`, where the envelope is the running maximum of `res_norm`.
pub fn fit_growth_exponent(samples: &[ResolventSample], lambda_min: f64) -> Result<GrowthFit> {
    if !(lambda_min > 0.0) {
        return Err(Error::Fit(format!("lambda_min must be positive, got {lambda_min}")));
    }
    let mut used: Vec<&ResolventSample> = samples.iter().filter(|s| s.lambda >= lambda_min).collect();
    if used.len() < 5 {
        return Err(Error::Fit(format!(
            "need at least 5 samples with lambda >= {lambda_min}, got {}",
            used.len()
        )));
    }
    used.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    if let Some(s) = used.iter().find(|s| !s.res_norm.is_finite()) {
        return Err(Error::Fit(format!("resolvent is singular at lambda = {}", s.lambda)));
    }
    let mut env = Vec::with_capacity(used.len());
    let mut running = 0.0f64;
    for s in &used {
        running = running.max(s.res_norm);
        env.push(running);
    }
    let xs: Vec<f64> = used.iter().map(|s| s.lambda).collect();
    let (c, slope) = crate::diagnostics::fit_log_log(&xs, &env)?;
    Ok(GrowthFit {
        slope,
        c,
        lambda_min,
        samples_used: used.len(),
    })
}

/// CSV with header `lambda,sigma_min,res_norm`.
pub fn write_resolvent_csv<W: Write>(mut w: W, samples: &[ResolventSample]) -> io::Result<()> {
    writeln!(w, "lambda,sigma_min,res_norm")?;
    for s in samples {
        writeln!(w, "{:?},{:?},{:?}", s.lambda, s.sigma_min, s.res_norm)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::build_mesh;
    use crate::generator::assemble_generator;
    use crate::model::ModelParams;
    use std::f64::consts::PI;

    fn system(p: &ModelParams, nx: usize, nrho: usize) -> SemiDiscreteSystem {
        let mesh = build_mesh(p, nx).unwrap();
        assemble_generator(p, &mesh, nrho).unwrap()
    }

    /// Dense `||R||_{M_h}` via a Cholesky-transformed SVD.
    fn dense_resolvent_norm(sys: &SemiDiscreteSystem, lambda: f64) -> f64 {
        let n = sys.dim();
        let a = sys.dense_generator().map(|x| Complex64::new(x, 0.0));
        let g = sys.dense_gram();
        let l = g.cholesky().unwrap().l().map(|x| Complex64::new(x, 0.0));
        let shifted = DMatrix::<Complex64>::identity(n, n) * Complex64::new(0.0, lambda) - a;
        let r = shifted.try_inverse().unwrap();
        let l_inv = l.clone().try_inverse().unwrap();
        let conj = l.adjoint() * r * l_inv.adjoint();
        conj.singular_values().max()
    }

    #[test]
    fn validation_spectrum_is_the_wave_spectrum() {
        let p = ModelParams::default().validation_mode();
        let sys = system(&p, 40, 2);
        let spec = eigenvalues(&sys).unwrap();
        let mut axis: Vec<f64> = spec
            .eigenvalues
            .iter()
            .filter(|z| z.re.abs() < 1e-8 && z.im > 0.0)
            .map(|z| z.im)
            .collect();
        axis.sort_by(f64::total_cmp);
        // u and y branches coincide for a = 1
        for k in 1..=3 {
            let exact = k as f64 * PI;
            for v in &axis[2 * (k - 1)..2 * k] {
                assert!((v - exact).abs() < 0.02 * k as f64 * k as f64, "mode {k}: {v}");
            }
        }
    }

    #[test]
    fn damped_spectrum_is_stable_and_conjugate_closed() {
        let sys = system(&ModelParams::default(), 20, 4);
        let spec = eigenvalues(&sys).unwrap();
        assert_eq!(spec.eigenvalues.len(), sys.dim());
        assert!(spec.spectral_abscissa < 0.0);
        assert!(spec.min_axis_distance > 0.0);
        for z in &spec.eigenvalues {
            let close = spec
                .eigenvalues
                .iter()
                .map(|w| (w - z.conj()).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(close < 1e-9 * z.norm().max(1.0));
        }
    }

    #[test]
    fn arnoldi_matches_dense() {
        let sys = system(&ModelParams::default(), 20, 4);
        let dense = eigenvalues(&sys).unwrap();
        let shift = Complex64::new(0.0, 10.0);
        let near = eigenvalues_near(&sys, shift, 4).unwrap();
        let mut expected = dense.eigenvalues.clone();
        expected.sort_by(|a, b| (a - shift).norm().total_cmp(&(b - shift).norm()));
        let mut got = near.eigenvalues.clone();
        got.sort_by(|a, b| (a - shift).norm().total_cmp(&(b - shift).norm()));
        for (g, e) in got.iter().zip(&expected[..4]) {
            assert!((g - e).norm() < 1e-8 * e.norm().max(1.0), "{g} vs {e}");
        }
    }

    #[test]
    fn resolvent_matches_dense_svd() {
        let sys = system(&ModelParams::default(), 12, 3);
        for lambda in [0.0, 1.5, 7.0, -7.0] {
            let s = resolvent_norm(&sys, lambda).unwrap();
            let d = dense_resolvent_norm(&sys, lambda);
            assert!((s.res_norm - d).abs() < 1e-6 * d, "λ={lambda}: {} vs {d}", s.res_norm);
            assert!((s.res_norm * s.sigma_min - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn resolvent_is_even_in_lambda_and_finite_at_zero() {
        let sys = system(&ModelParams::default(), 30, 4);
        let z = resolvent_norm(&sys, 0.0).unwrap();
        assert!(z.res_norm.is_finite() && z.sigma_min > 0.0);
        for l in [0.7, 4.0, 20.0] {
            let a = resolvent_norm(&sys, l).unwrap().res_norm;
            let b = resolvent_norm(&sys, -l).unwrap().res_norm;
            assert!((a - b).abs() < 1e-6 * a);
        }
    }

    #[test]
    fn resolvent_dominates_eigenvalue_distance() {
        let sys = system(&ModelParams::default(), 20, 4);
        let spec = eigenvalues(&sys).unwrap();
        for lambda in [0.0, 2.0, 9.0, 25.0] {
            let s = resolvent_norm(&sys, lambda).unwrap();
            let shift = Complex64::new(0.0, lambda);
            for mu in &spec.eigenvalues {
                assert!(s.res_norm >= (1.0 - 1e-6) / (shift - mu).norm());
            }
        }
    }

    #[test]
    fn undamped_axis_eigenvalue_closes_the_gap() {
        let p = ModelParams::default().validation_mode();
        let sigma: Vec<f64> = [20, 40, 80]
            .iter()
            .map(|&nx| resolvent_norm(&system(&p, nx, 2), PI).unwrap().sigma_min)
            .collect();
        assert!(sigma[1] < sigma[0] / 3.0 && sigma[2] < sigma[1] / 3.0, "{sigma:?}");
    }

    #[test]
    fn sigma_min_is_mesh_stable_inside_the_band() {
        let p = ModelParams::default();
        let coarse = system(&p, 50, 8);
        let fine = system(&p, 100, 8);
        for lambda in [0.5, 2.0, 5.0] {
            let a = resolvent_norm(&coarse, lambda).unwrap().sigma_min;
            let b = resolvent_norm(&fine, lambda).unwrap().sigma_min;
            assert!((a - b).abs() < 0.1 * b, "λ={lambda}: {a} vs {b}");
        }
    }

    #[test]
    fn sweep_is_ordered_and_bit_identical() {
        let sys = system(&ModelParams::default(), 20, 4);
        let grid = linear_grid(0.0, 30.0, 16);
        let sweep = resolvent_sweep(&sys, &grid).unwrap();
        for (s, &l) in sweep.iter().zip(&grid) {
            let single = resolvent_norm(&sys, l).unwrap();
            assert_eq!(s.lambda, l);
            assert_eq!(s.res_norm.to_bits(), single.res_norm.to_bits());
        }
        assert_eq!(resolvent_sweep(&sys, &[0.0]).unwrap().len(), 1);
        assert!(resolvent_sweep(&sys, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn axis_distance_shrinks_with_weaker_coupling() {
        let mut p = ModelParams::default();
        let mut dist = Vec::new();
        for c0 in [1.0, 0.5, 0.25, 0.125] {
            p.c0 = c0;
            dist.push(eigenvalues(&system(&p, 20, 4)).unwrap().min_axis_distance);
        }
        assert!(dist.windows(2).all(|w| w[1] < w[0]), "{dist:?}");
    }

    fn synthetic(f: impl Fn(f64) -> f64) -> Vec<ResolventSample> {
        log_grid(1.0, 100.0, 30)
            .unwrap()
            .into_iter()
            .map(|l| ResolventSample {
                lambda: l,
                sigma_min: 1.0 / f(l),
                res_norm: f(l),
            })
            .collect()
    }

    #[test]
    fn growth_fit_on_power_laws() {
        let s = fit_growth_exponent(&synthetic(|l| l * l), 1.0).unwrap();
        assert!((s.slope - 2.0).abs() < 1e-12);
        let s = fit_growth_exponent(&synthetic(|_| 3.0), 1.0).unwrap();
        assert!(s.slope.abs() < 1e-12);
        // oscillation below the envelope is ignored
        let s = fit_growth_exponent(&synthetic(|l| l * (1.5 + (3.0 * l).sin())), 1.0).unwrap();
        assert!(s.slope > 0.8 && s.slope < 1.2);
        assert!(matches!(
            fit_growth_exponent(&synthetic(|l| l)[..4], 1.0),
            Err(Error::Fit(_))
        ));
    }

    #[test]
    fn csv_headers() {
        let mut buf = Vec::new();
        write_resolvent_csv(&mut buf, &synthetic(|l| l)[..1]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "lambda,sigma_min,res_norm\n1.0,1.0,1.0\n"
        );
        let spec = SpectrumResult::from_values(vec![Complex64::new(-1.0, 2.0), Complex64::new(-1.0, -2.0)]);
        let mut buf = Vec::new();
        spec.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "re,im\n-1.0,-2.0\n-1.0,2.0\n");
    }
}
