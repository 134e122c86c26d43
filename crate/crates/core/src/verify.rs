//! The end-to-end property suite: one runner per acceptance criterion.
//!
//! Every runner returns a [`CriterionReport`]; errors raised inside a runner
//! become a failing report instead of aborting the suite.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::diagnostics::{check_dissipation, fit_decay_exponent, graph_norm_sq, EnergyTrace, DISSIPATION_TOL};
use crate::discretize::build_mesh;
use crate::evolve::{simulate, MethodOfSteps, Scheme, Stepper};
use crate::generator::{assemble_generator, SemiDiscreteSystem, StateVector};
use crate::linalg;
use crate::model::{build_initial_state, InitialPreset, ModelParams};
use crate::spectral::{self, eigenvalues, fit_growth_exponent, log_grid, resolvent_norm, resolvent_sweep};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub name: String,
    pub pass: bool,
    pub summary: String,
    pub metrics: Value,
}

impl CriterionReport {
    /// `[PASS] criterion N (name): summary`.
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {} ({}): {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.summary
        )
    }
}

fn report(id: u8, name: &str, run: impl FnOnce() -> Result<(bool, String, Value)>) -> CriterionReport {
    match run() {
        Ok((pass, summary, metrics)) => CriterionReport {
            id,
            name: name.into(),
            pass,
            summary,
            metrics,
        },
        Err(e) => CriterionReport {
            id,
            name: name.into(),
            pass: false,
            summary: format!("error: {e}"),
            metrics: json!({ "error": e.to_string() }),
        },
    }
}

fn system(p: &ModelParams, nx: usize, nrho: usize) -> Result<SemiDiscreteSystem> {
    assemble_generator(p, &build_mesh(p, nx)?, nrho)
}

pub const MESHES: [usize; 3] = [50, 100, 200];
pub const NRHOS: [usize; 2] = [8, 16];

/// Criterion 1: for random states `Re<A_h U, U> + (k1 - |k2|)|v_x|^2 <= 1e-10 |U|^2`,
/// together with `Re<A_h U, U> <= 1e-10 |U|^2` on those states and on the
/// maximizer of the symmetric part (small mesh, dense).
pub fn criterion_dissipativity(p: &ModelParams, states: usize) -> CriterionReport {
    report(1, "matrix dissipativity", || {
        let tol = 1e-10;
        let mut worst_bound = f64::NEG_INFINITY;
        let mut worst_form = f64::NEG_INFINITY;
        let mut seed = 0u64;
        for &nx in &MESHES {
            for &nrho in &NRHOS {
                let sys = system(p, nx, nrho)?;
                for _ in 0..states {
                    let u = StateVector::random(sys.layout, seed);
                    seed += 1;
                    let norm_sq = sys.energy_norm(&u).powi(2);
                    let form = sys.dissipation_form(&u)?;
                    worst_bound = worst_bound.max((form + sys.dissipation_rate(&u)) / norm_sq);
                    worst_form = worst_form.max(form / norm_sq);
                }
            }
        }
        let (top_ratio, _) = system(p, 20, 4)?.max_dissipation_ratio()?;
        let pass = worst_bound <= tol && worst_form <= tol && top_ratio <= tol;
        Ok((
            pass,
            format!(
                "max bound ratio {worst_bound:.3e}, max Re<AU,U>/|U|^2 {worst_form:.3e} over {seed} random states; \
                 top eigenvalue of the symmetric part (N=20) {top_ratio:.3e}; tolerance {tol:e}"
            ),
            json!({
                "random_states": seed,
                "max_bound_ratio": worst_bound,
                "max_form_ratio": worst_form,
                "symmetric_part_top_eigenvalue": top_ratio,
                "tolerance": tol,
            }),
        ))
    })
}

/// Reference run used by criteria 2 and 6: BE, smooth data, `N = 200`, `Nρ = 16`,
/// `dt = 1e-2`, `T = 50`.
pub fn reference_trace(p: &ModelParams) -> Result<EnergyTrace> {
    let sys = system(p, 200, 16)?;
    let u0 = build_initial_state(p, &sys.mesh, &InitialPreset::smooth_default(), 16)?;
    Ok(simulate(&sys, &u0, 1e-2, 50.0, Scheme::BackwardEuler, None)?.trace)
}

/// Criterion 2: `E_{n+1} - E_n <= 1e-8 E_0` at every step of the reference run.
pub fn criterion_energy_monotone(trace: &Result<EnergyTrace>) -> CriterionReport {
    report(2, "energy monotonicity", || {
        let trace = trace.as_ref().map_err(Clone::clone)?;
        let e0 = trace.rows[0].e;
        let (step, increase) = trace.max_energy_increase().unwrap_or((0, 0.0));
        let dissipation = check_dissipation(trace, DISSIPATION_TOL)?;
        let pass = increase <= DISSIPATION_TOL * e0 && dissipation.pass;
        Ok((
            pass,
            format!(
                "max step increase {:.3e} (step {step}) vs bound {:.3e}; energy-law margin {:.3e} vs {:.3e}",
                increase,
                DISSIPATION_TOL * e0,
                dissipation.margin,
                dissipation.tolerance
            ),
            json!({
                "steps": trace.rows.len() - 1,
                "e0": e0,
                "e_final": trace.rows.last().map(|r| r.e),
                "max_increase": increase,
                "max_increase_step": step,
                "dissipation": dissipation,
            }),
        ))
    })
}

/// Criterion 3: `sigma_min(A_h) > 0` and the stationary solve residual is at most 1e-10.
pub fn criterion_trivial_kernel(p: &ModelParams) -> CriterionReport {
    report(3, "trivial kernel", || {
        let mut rows = Vec::new();
        let mut pass = true;
        let mut min_sigma = f64::INFINITY;
        let mut max_residual = 0.0f64;
        for &nx in &MESHES {
            for &nrho in &NRHOS {
                let sys = system(p, nx, nrho)?;
                let sigma = resolvent_norm(&sys, 0.0)?.sigma_min;
                let f = StateVector::random(sys.layout, 7 + nx as u64 + nrho as u64);
                let residual = match sys.solve_stationary(&f) {
                    Ok(u) => {
                        let au = sys.apply_raw(&u.data);
                        let r: Vec<f64> = au.iter().zip(&f.data).map(|(a, b)| a + b).collect();
                        linalg::norm2(&r) / linalg::norm2(&f.data)
                    }
                    Err(_) => f64::INFINITY,
                };
                pass &= sigma > 0.0 && residual <= 1e-10;
                min_sigma = min_sigma.min(sigma);
                max_residual = max_residual.max(residual);
                rows.push(json!({ "nx": nx, "nrho": nrho, "sigma_min": sigma, "residual": residual }));
            }
        }
        Ok((
            pass,
            format!("min sigma_min(A_h) {min_sigma:.3e}, max stationary residual {max_residual:.3e}"),
            json!({ "meshes": rows }),
        ))
    })
}

pub const GAP_SAMPLES: usize = 200;
pub const GAP_THRESHOLD: f64 = 1e-6;

/// Criterion 4: under (H) no eigenvalue reaches the axis and `sigma_min(iλ - A_h)`
/// stays positive on `[0, λ_max]` (a uniform grid plus the imaginary parts of
/// the eigenvalues in that band); with damping and coupling switched off the
/// same quantity at `λ = π sqrt(a)/L` collapses under refinement.
pub fn criterion_axis_gap(p: &ModelParams) -> CriterionReport {
    report(4, "imaginary-axis gap", || {
        let sys = system(p, 50, 8)?;
        let spec = eigenvalues(&sys)?;
        let lmax = sys.mesh.lambda_max();
        // near-resonances sit at the imaginary parts of the eigenvalues
        let mut grid = spectral::linear_grid(0.0, lmax, GAP_SAMPLES);
        grid.extend(
            spec.eigenvalues
                .iter()
                .map(|z| z.im)
                .filter(|im| (0.0..=lmax).contains(im)),
        );
        grid.sort_by(f64::total_cmp);
        let sweep = resolvent_sweep(&sys, &grid)?;
        let worst = sweep
            .iter()
            .min_by(|a, b| a.sigma_min.total_cmp(&b.sigma_min))
            .copied()
            .expect("nonempty grid");
        let damped_ok = spec.spectral_abscissa < 0.0 && worst.sigma_min > GAP_THRESHOLD;

        let undamped = p.validation_mode();
        let probe = PI * undamped.a.sqrt() / undamped.length;
        let mut sigmas = Vec::new();
        for &nx in &MESHES {
            sigmas.push(resolvent_norm(&system(&undamped, nx, 2)?, probe)?.sigma_min);
        }
        let ratios: Vec<f64> = sigmas.windows(2).map(|w| w[0] / w[1]).collect();
        let undamped_fails = ratios.iter().all(|r| *r >= 3.0) && sigmas[sigmas.len() - 1] < 1e-3;
        Ok((
            damped_ok && undamped_fails,
            format!(
                "damped: abscissa {:.3e}, min sigma_min {:.3e} at λ={:.3} on [0, {lmax:.1}]; \
                 undamped at λ={probe:.4}: sigma_min {:?} (refinement ratios {:?})",
                spec.spectral_abscissa,
                worst.sigma_min,
                worst.lambda,
                sigmas.iter().map(|s| format!("{s:.2e}")).collect::<Vec<_>>(),
                ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>(),
            ),
            json!({
                "damped": {
                    "nx": 50, "nrho": 8,
                    "spectral_abscissa": spec.spectral_abscissa,
                    "min_axis_distance": spec.min_axis_distance,
                    "lambda_max": lmax,
                    "grid_points": grid.len(),
                    "min_sigma": worst.sigma_min,
                    "argmin_lambda": worst.lambda,
                    "pass": damped_ok,
                },
                "undamped": {
                    "lambda": probe,
                    "nx": MESHES,
                    "sigma_min": sigmas,
                    "ratios": ratios,
                    "gap_closes": undamped_fails,
                },
            }),
        ))
    })
}

pub const GROWTH_SAMPLES: usize = 200;

/// Criterion 5: envelope slope of `log||R(iλ)||` against `log λ` on `[1, λ_max]`
/// is at most 2.3 for `N = 100, 200` and grows by at most 0.2 under refinement.
pub fn criterion_resolvent_growth(p: &ModelParams) -> CriterionReport {
    report(5, "resolvent growth", || {
        let mut slopes = Vec::new();
        let mut rows = Vec::new();
        for nx in [100, 200] {
            let sys = system(p, nx, 16)?;
            let lmax = sys.mesh.lambda_max();
            let samples = resolvent_sweep(&sys, &log_grid(1.0, lmax, GROWTH_SAMPLES)?)?;
            let fit = fit_growth_exponent(&samples, 1.0)?;
            let peak = samples.iter().map(|s| s.res_norm).fold(0.0, f64::max);
            slopes.push(fit.slope);
            rows.push(json!({ "nx": nx, "lambda_max": lmax, "slope": fit.slope, "C": fit.c, "peak_res_norm": peak }));
        }
        let drift = slopes[1] - slopes[0];
        let pass = slopes.iter().all(|s| *s <= 2.3) && drift <= 0.2;
        Ok((
            pass,
            format!(
                "envelope slopes {:.3} (N=100), {:.3} (N=200); drift {drift:.3}",
                slopes[0], slopes[1]
            ),
            json!({ "fits": rows, "drift": drift }),
        ))
    })
}

/// Criterion 6: fitted decay exponent `p >= 0.9` on the auto-windowed part of `[5, 50]`.
pub fn criterion_polynomial_decay(p: &ModelParams, trace: &Result<EnergyTrace>) -> CriterionReport {
    report(6, "polynomial decay", || {
        let trace = trace.as_ref().map_err(Clone::clone)?;
        let fit = fit_decay_exponent(trace, (5.0, 50.0))?;
        let sys = system(p, 200, 16)?;
        let u0 = build_initial_state(p, &sys.mesh, &InitialPreset::smooth_default(), 16)?;
        let graph = graph_norm_sq(&sys, &u0)?;
        Ok((
            fit.p >= 0.9,
            format!(
                "p = {:.3} on [{:.2}, {:.2}] (floor {}), C = {:.3e}, |U0|^2_D(A) = {graph:.3e}",
                fit.p,
                fit.fit_window.0,
                fit.fit_window.1,
                fit.floor_time.map_or("none".to_string(), |t| format!("{t:.2}")),
                fit.c
            ),
            json!({ "fit": fit, "graph_norm_sq": graph }),
        ))
    })
}

pub const EQUIV_DT: [f64; 2] = [1e-2, 5e-3];
pub const EQUIV_NRHO: [usize; 2] = [16, 32];

/// Max over `t in [0, t_end]` of the `M_h` distance on `(u, v, y, z)` between
/// the transport formulation and the method-of-steps oracle.
pub fn reformulation_error(p: &ModelParams, nx: usize, dt: f64, nrho: usize, t_end: f64) -> Result<(f64, f64)> {
    let preset = InitialPreset::smooth_default();
    let sys = system(p, nx, nrho)?;
    let mut u = build_initial_state(p, &sys.mesh, &preset, nrho)?;
    let u0_norm = sys.energy_norm(&u);
    let mut oracle = MethodOfSteps::new(p, &sys.mesh, &preset, dt)?;
    let stepper = Stepper::new(&sys, Scheme::BackwardEuler, dt)?;
    let steps = (t_end / dt).round() as usize;
    let waves = sys.layout.waves();
    let mut diff = StateVector::zeros(sys.layout);
    let mut worst = 0.0f64;
    for _ in 0..steps {
        u = stepper.advance(&sys, &u)?;
        oracle.step();
        for ((d, a), b) in diff.data[waves.clone()]
            .iter_mut()
            .zip(&u.data[waves.clone()])
            .zip(oracle.waves())
        {
            *d = a - b;
        }
        worst = worst.max(sys.energy_norm(&diff));
    }
    Ok((worst, u0_norm))
}

/// Criterion 7: transport formulation vs method of steps within
/// `5 (dt + Δρ) |U0|` on `[0, 5τ]`, with the error halving under joint refinement.
pub fn criterion_reformulation(p: &ModelParams) -> CriterionReport {
    report(7, "reformulation equivalence", || {
        let t_end = 5.0 * p.tau;
        let mut rows = Vec::new();
        let mut pass = true;
        let mut errors = [[0.0; 2]; 2];
        for (i, &dt) in EQUIV_DT.iter().enumerate() {
            for (j, &nrho) in EQUIV_NRHO.iter().enumerate() {
                let (err, u0) = reformulation_error(p, 100, dt, nrho, t_end)?;
                let bound = 5.0 * (dt + 1.0 / nrho as f64) * u0;
                pass &= err <= bound;
                errors[i][j] = err;
                rows.push(json!({ "dt": dt, "nrho": nrho, "error": err, "bound": bound, "u0_norm": u0 }));
            }
        }
        let ratio = errors[1][1] / errors[0][0];
        let proportional = (0.3..=0.7).contains(&ratio);
        Ok((
            pass && proportional,
            format!(
                "errors {:.3e} (dt=1e-2, Δρ=1/16) .. {:.3e} (dt=5e-3, Δρ=1/32); refinement ratio {ratio:.3}",
                errors[0][0], errors[1][1]
            ),
            json!({ "runs": rows, "refinement_ratio": ratio, "ratio_range": [0.3, 0.7] }),
        ))
    })
}

pub const CONVERGENCE_MODES: usize = 10;

/// Lowest `count` positive axis frequencies of the undamped system.
pub fn undamped_frequencies(sys: &SemiDiscreteSystem, count: usize) -> Result<Vec<f64>> {
    let spec = eigenvalues(sys)?;
    let mut freqs: Vec<f64> = spec
        .eigenvalues
        .iter()
        .filter(|z: &&Complex64| z.re.abs() < 1e-6 && z.im > 0.0)
        .map(|z| z.im)
        .collect();
    freqs.sort_by(f64::total_cmp);
    freqs.truncate(count);
    Ok(freqs)
}

/// `{kπ sqrt(a)/L} ∪ {kπ/L}`, sorted, first `count`.
pub fn analytic_frequencies(p: &ModelParams, count: usize) -> Vec<f64> {
    let mut f: Vec<f64> = (1..=count)
        .flat_map(|k| {
            let k = k as f64;
            [k * PI * p.a.sqrt() / p.length, k * PI / p.length]
        })
        .collect();
    f.sort_by(f64::total_cmp);
    f.truncate(count);
    f
}

/// Criterion 8: the 10 lowest undamped frequencies converge at second order,
/// the error ratio between `N = 50` and `N = 100` lying in `[3.5, 4.5]`.
pub fn criterion_convergence(p: &ModelParams) -> CriterionReport {
    report(8, "discretization convergence", || {
        let undamped = p.validation_mode();
        let exact = analytic_frequencies(&undamped, CONVERGENCE_MODES);
        let mut errs = Vec::new();
        for nx in [50, 100] {
            let f = undamped_frequencies(&system(&undamped, nx, 2)?, CONVERGENCE_MODES)?;
            if f.len() < CONVERGENCE_MODES {
                return Err(crate::Error::Solver(format!(
                    "only {} axis eigenvalues found on N = {nx}",
                    f.len()
                )));
            }
            errs.push(f.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
        let ratio = errs[0] / errs[1];
        Ok((
            (3.5..=4.5).contains(&ratio),
            format!(
                "max frequency error {:.3e} (N=50), {:.3e} (N=100); ratio {ratio:.3}",
                errs[0], errs[1]
            ),
            json!({ "modes": CONVERGENCE_MODES, "errors": errs, "ratio": ratio, "exact": exact }),
        ))
    })
}

/// Runs all criteria in order.
pub fn run_all(p: &ModelParams) -> Vec<CriterionReport> {
    let trace = reference_trace(p);
    vec![
        criterion_dissipativity(p, 200),
        criterion_energy_monotone(&trace),
        criterion_trivial_kernel(p),
        criterion_axis_gap(p),
        criterion_resolvent_growth(p),
        criterion_polynomial_decay(p, &trace),
        criterion_reformulation(p),
        criterion_convergence(p),
    ]
}
