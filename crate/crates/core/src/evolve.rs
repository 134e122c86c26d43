//! Implicit time integration of `U' = A_h U` and the method-of-steps oracle.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{energy_components, EnergyRow, EnergyTrace, TraceMeta};
use crate::discretize::{assemble_fem, FemMatrices, Mesh};
use crate::generator::{wave_triplets, BandOrdering, SemiDiscreteSystem, StateLayout, StateVector};
use crate::linalg::{self, BandLu, CsrMatrix};
use crate::model::{validate_params, InitialPreset, ModelParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    BackwardEuler,
    CrankNicolson,
}

impl Scheme {
    /// Implicitness weight: 1 for backward Euler, 1/2 for Crank-Nicolson.
    fn theta(self) -> f64 {
        match self {
            Scheme::BackwardEuler => 1.0,
            Scheme::CrankNicolson => 0.5,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::BackwardEuler => "backward_euler",
            Scheme::CrankNicolson => "crank_nicolson",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "backward_euler" | "be" => Ok(Scheme::BackwardEuler),
            "crank_nicolson" | "cn" => Ok(Scheme::CrankNicolson),
            _ => Err(Error::Parameter(format!("unknown scheme `{s}`"))),
        }
    }
}

/// One factored theta-step `(B - theta dt C) U+ = (B + (1 - theta) dt C) U`.
#[derive(Debug)]
pub struct Stepper {
    pub scheme: Scheme,
    pub dt: f64,
    lu: BandLu<f64>,
}

impl Stepper {
    pub fn new(sys: &SemiDiscreteSystem, scheme: Scheme, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
        }
        let lu = sys
            .band_combination(1.0, -scheme.theta() * dt)
            .factor()
            .map_err(|e| Error::Solver(format!("{scheme} factorization failed (dt = {dt}): {e}")))?;
        Ok(Self { scheme, dt, lu })
    }

    pub fn advance(&self, sys: &SemiDiscreteSystem, u: &StateVector) -> Result<StateVector> {
        if u.len() != sys.dim() {
            return Err(Error::Shape {
                expected: sys.dim(),
                actual: u.len(),
            });
        }
        let theta = self.scheme.theta();
        let mut rhs = sys.lhs.mul(&u.data);
        if theta < 1.0 {
            linalg::axpy((1.0 - theta) * self.dt, &sys.rhs.mul(&u.data), &mut rhs);
        }
        let solve = |b: &[f64]| -> Vec<f64> {
            let mut x = sys.ordering().permute(b);
            self.lu.solve_in_place(&mut x);
            sys.ordering().unpermute(&x)
        };
        let residual = |x: &[f64]| -> Vec<f64> {
            let mut r = sys.lhs.mul(x);
            linalg::axpy(-theta * self.dt, &sys.rhs.mul(x), &mut r);
            r.iter_mut().zip(&rhs).for_each(|(a, b)| *a = b - *a);
            r
        };
        let mut next = solve(&rhs);
        // residual measured in the A-form (I - theta dt A) U+ = ..., i.e. after B^{-1}
        let scaled = |r: &mut Vec<f64>| {
            sys.solve_lhs_in_place(r);
            linalg::norm2(r)
        };
        let tol = 1e-10 * linalg::norm2(&u.data);
        let mut r = residual(&next);
        if scaled(&mut r.clone()) > tol {
            let d = solve(&r);
            next.iter_mut().zip(&d).for_each(|(a, b)| *a += b);
            r = residual(&next);
            let res = scaled(&mut r);
            if res > tol {
                return Err(Error::Solver(format!(
                    "{} step residual {res:e} above {tol:e}",
                    self.scheme
                )));
            }
        }
        StateVector::from_vec(sys.layout, next)
    }
}

/// One implicit step without caching.
pub fn step(sys: &SemiDiscreteSystem, u: &StateVector, dt: f64, scheme: Scheme) -> Result<StateVector> {
    Stepper::new(sys, scheme, dt)?.advance(sys, u)
}

/// Steps a system, reusing one factorization per `(scheme, dt)`.
#[derive(Debug)]
pub struct Integrator<'a> {
    sys: &'a SemiDiscreteSystem,
    cache: HashMap<(Scheme, u64), Stepper>,
}

impl<'a> Integrator<'a> {
    pub fn new(sys: &'a SemiDiscreteSystem) -> Self {
        Self {
            sys,
            cache: HashMap::new(),
        }
    }

    pub fn step(&mut self, u: &StateVector, dt: f64, scheme: Scheme) -> Result<StateVector> {
        let key = (scheme, dt.to_bits());
        if !self.cache.contains_key(&key) {
            self.cache.insert(key, Stepper::new(self.sys, scheme, dt)?);
        }
        self.cache[&key].advance(self.sys, u)
    }

    pub fn cached_factorizations(&self) -> usize {
        self.cache.len()
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub state: StateVector,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub trace: EnergyTrace,
    pub snapshots: Vec<Snapshot>,
    pub final_state: StateVector,
}

pub(crate) fn step_count(dt: f64, t_end: f64) -> Result<usize> {
    if !(t_end > 0.0) || !(dt > 0.0) || !t_end.is_finite() {
        return Err(Error::Parameter(format!(
            "need T > 0 and dt > 0, got T = {t_end}, dt = {dt}"
        )));
    }
    Ok((t_end / dt).round().max(1.0) as usize)
}

/// Steps from 0 to `t_end`, recording `(t, E1, E2, E3, E, D)` after every step.
///
/// `snapshot_every = Some(k)` also keeps the state at step 0 and every k-th step.
pub fn simulate(
    sys: &SemiDiscreteSystem,
    u0: &StateVector,
    dt: f64,
    t_end: f64,
    scheme: Scheme,
    snapshot_every: Option<usize>,
) -> Result<Simulation> {
    let steps = step_count(dt, t_end)?;
    let stepper = Stepper::new(sys, scheme, dt)?;
    let mut trace = EnergyTrace::new(TraceMeta {
        params: sys.params,
        n_cells: sys.mesh.n_cells(),
        nrho: sys.nrho(),
        dt,
        scheme: scheme.to_string(),
    });
    let mut snapshots = Vec::new();
    let mut u = u0.clone();
    let record = |u: &StateVector, t: f64, trace: &mut EnergyTrace| -> Result<()> {
        let e = energy_components(sys, u)?;
        trace.rows.push(EnergyRow {
            t,
            e1: e.e1,
            e2: e.e2,
            e3: e.e3,
            e: e.e,
            d: sys.dissipation_rate(u),
        });
        Ok(())
    };
    record(&u, 0.0, &mut trace)?;
    if snapshot_every.is_some() {
        snapshots.push(Snapshot {
            t: 0.0,
            state: u.clone(),
        });
    }
    for n in 1..=steps {
        u = stepper.advance(sys, &u)?;
        let t = n as f64 * dt;
        record(&u, t, &mut trace)?;
        if let Some(k) = snapshot_every {
            if k > 0 && n % k == 0 {
                snapshots.push(Snapshot { t, state: u.clone() });
            }
        }
    }
    Ok(Simulation {
        trace,
        snapshots,
        final_state: u,
    })
}

/// Backward-Euler integration of the original delayed system, keeping a
/// ring buffer of past velocities instead of the transport variable.
///
/// The delayed flux at `t_{n+1}` uses `v(t_{n+1} - tau)` from the buffer, so
/// `tau / dt` must be an integer.
#[derive(Debug)]
pub struct MethodOfSteps {
    params: ModelParams,
    fem: FemMatrices,
    dt: f64,
    delay_steps: usize,
    ordering: BandOrdering,
    lhs: CsrMatrix,
    lu: BandLu<f64>,
    n: usize,
    m: usize,
    /// `(u, v, y, z)` at the current time.
    waves: Vec<f64>,
    /// `v` on the delay nodes at `t_n, t_{n-1}, ..., t_{n-s}`.
    history: VecDeque<Vec<f64>>,
    steps_taken: usize,
}

impl MethodOfSteps {
    pub fn new(p: &ModelParams, mesh: &Mesh, preset: &InitialPreset, dt: f64) -> Result<Self> {
        validate_params(*p)?;
        if !(dt > 0.0) {
            return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
        }
        let ratio = p.tau / dt;
        let s = ratio.round();
        if s < 1.0 || (ratio - s).abs() > 1e-9 * ratio {
            return Err(Error::Alignment { ratio });
        }
        let delay_steps = s as usize;
        let fem = assemble_fem(p, mesh)?;
        let n = mesh.n_int;
        let m = mesh.m_eta;
        let layout = StateLayout::new(n, 0, 0);
        let (c, b) = wave_triplets(p, &fem, n);
        let ordering = BandOrdering::new(&layout, &[&c, &b]);
        let rhs = CsrMatrix::from_triplets(4 * n, 4 * n, &c);
        let lhs = CsrMatrix::from_triplets(4 * n, 4 * n, &b);
        let lu = ordering
            .band(&[(1.0, &lhs), (-dt, &rhs)])
            .factor()
            .map_err(|e| Error::Solver(format!("method-of-steps factorization failed: {e}")))?;

        let [u, v, y, z] = preset.nodal_fields(p, mesh)?;
        let mut waves = Vec::with_capacity(4 * n);
        for f in [&u, &v, &y, &z] {
            waves.extend_from_slice(f);
        }
        let mut history = VecDeque::with_capacity(delay_steps + 1);
        history.push_back(v[..m].to_vec());
        for k in 1..=delay_steps {
            let g = preset.history.factor(-(k as f64) * dt);
            history.push_back(v[..m].iter().map(|x| x * g).collect());
        }
        Ok(Self {
            params: *p,
            fem,
            dt,
            delay_steps,
            ordering,
            lhs,
            lu,
            n,
            m,
            waves,
            history,
            steps_taken: 0,
        })
    }

    pub fn delay_steps(&self) -> usize {
        self.delay_steps
    }

    pub fn time(&self) -> f64 {
        self.steps_taken as f64 * self.dt
    }

    /// Current `(u, v, y, z)`, packed like the prefix of a [`StateVector`].
    pub fn waves(&self) -> &[f64] {
        &self.waves
    }

    pub fn step(&mut self) {
        let n = self.n;
        let mut rhs = self.lhs.mul(&self.waves);
        // v(t_{n+1} - tau) = v(t_{n+1-s}), stored at position s - 1
        let delayed = &self.history[self.delay_steps - 1];
        let mut flux = vec![0.0; self.m];
        self.fem
            .stiffness_beta
            .mul_acc(-self.params.kappa2 * self.dt, delayed, &mut flux);
        for (r, f) in rhs[n..n + self.m].iter_mut().zip(&flux) {
            *r += f;
        }
        let mut x = self.ordering.permute(&rhs);
        self.lu.solve_in_place(&mut x);
        self.waves = self.ordering.unpermute(&x);
        self.history.pop_back();
        self.history.push_front(self.waves[n..n + self.m].to_vec());
        self.steps_taken += 1;
    }

    /// Energies at the current time; `E3` is rebuilt from the velocity buffer with
    /// the right-endpoint rule over `rho_j = j / s`.
    pub fn energy_row(&self) -> EnergyRow {
        let n = self.n;
        let f = &self.fem;
        let w = &self.waves;
        let (u, v, y, z) = (&w[..n], &w[n..2 * n], &w[2 * n..3 * n], &w[3 * n..]);
        let e1 = 0.5 * (f.mass.form(v, v) + self.params.a * f.stiffness.form(u, u));
        let e2 = 0.5 * (f.mass.form(z, z) + f.stiffness.form(y, y));
        let drho = 1.0 / self.delay_steps as f64;
        let e3 = 0.5
            * self.params.eta_weight()
            * drho
            * self
                .history
                .iter()
                .skip(1)
                .map(|h| f.stiffness_beta.form(h, h))
                .sum::<f64>();
        let vb = &v[..self.m];
        EnergyRow {
            t: self.time(),
            e1,
            e2,
            e3,
            e: e1 + e2 + e3,
            d: self.params.damping_margin() * f.stiffness_beta.form(vb, vb),
        }
    }
}

pub fn simulate_method_of_steps(
    p: &ModelParams,
    mesh: &Mesh,
    preset: &InitialPreset,
    dt: f64,
    t_end: f64,
) -> Result<EnergyTrace> {
    let steps = step_count(dt, t_end)?;
    let mut mos = MethodOfSteps::new(p, mesh, preset, dt)?;
    let mut trace = EnergyTrace::new(TraceMeta {
        params: *p,
        n_cells: mesh.n_cells(),
        nrho: mos.delay_steps(),
        dt,
        scheme: "method_of_steps".into(),
    });
    trace.rows.push(mos.energy_row());
    for _ in 0..steps {
        mos.step();
        trace.rows.push(mos.energy_row());
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::build_mesh;
    use crate::generator::assemble_generator;
    use crate::model::{build_initial_state, History, InitialKind, SineTarget};

    fn setup(nx: usize, nrho: usize) -> SemiDiscreteSystem {
        let p = ModelParams::default();
        let mesh = build_mesh(&p, nx).unwrap();
        assemble_generator(&p, &mesh, nrho).unwrap()
    }

    fn smooth_state(sys: &SemiDiscreteSystem) -> StateVector {
        let preset = InitialPreset {
            kind: InitialKind::SineMode {
                k_u: 1,
                k_y: 2,
                target: SineTarget::Velocity,
            },
            history: History::FrozenVelocity,
        };
        build_initial_state(&sys.params, &sys.mesh, &preset, sys.nrho()).unwrap()
    }

    #[test]
    fn zero_stays_zero() {
        let sys = setup(20, 4);
        let z = StateVector::zeros(sys.layout);
        for scheme in [Scheme::BackwardEuler, Scheme::CrankNicolson] {
            assert!(step(&sys, &z, 0.01, scheme).unwrap().data.iter().all(|&x| x == 0.0));
        }
        assert!(step(&sys, &z, 0.0, Scheme::BackwardEuler).is_err());
    }

    #[test]
    fn backward_euler_never_gains_energy() {
        let sys = setup(20, 4);
        let mut integ = Integrator::new(&sys);
        for seed in 0..10 {
            let u = StateVector::random(sys.layout, seed);
            let next = integ.step(&u, 0.05, Scheme::BackwardEuler).unwrap();
            assert!(sys.energy_norm(&next) <= sys.energy_norm(&u) * (1.0 + 1e-14));
        }
        assert_eq!(integ.cached_factorizations(), 1);
        integ
            .step(&StateVector::random(sys.layout, 0), 0.01, Scheme::CrankNicolson)
            .unwrap();
        assert_eq!(integ.cached_factorizations(), 2);
    }

    #[test]
    fn difference_quotient_tends_to_generator() {
        let sys = setup(16, 3);
        let u0 = smooth_state(&sys);
        let au = sys.apply_generator(&u0).unwrap();
        for scheme in [Scheme::BackwardEuler, Scheme::CrankNicolson] {
            let gap = |dt: f64| -> f64 {
                let next = step(&sys, &u0, dt, scheme).unwrap();
                let d: Vec<f64> = next
                    .data
                    .iter()
                    .zip(&u0.data)
                    .zip(&au.data)
                    .map(|((a, b), c)| (a - b) / dt - c)
                    .collect();
                sys.norm_raw(&d)
            };
            // dt small against the stiffest rate, so the O(dt) term dominates
            let ratio = gap(1e-5) / gap(5e-6);
            assert!((ratio - 2.0).abs() < 0.2, "{scheme}: ratio {ratio}");
        }
    }

    #[test]
    fn global_error_orders() {
        let sys = setup(16, 3);
        let u0 = smooth_state(&sys);
        let reference = {
            let mut u = u0.clone();
            let mut integ = Integrator::new(&sys);
            for _ in 0..256 {
                u = integ.step(&u, 0.02 / 256.0, Scheme::CrankNicolson).unwrap();
            }
            u
        };
        for (scheme, order) in [(Scheme::BackwardEuler, 1.0), (Scheme::CrankNicolson, 2.0)] {
            let err = |k: usize| -> f64 {
                let dt = 0.02 / k as f64;
                let mut u = u0.clone();
                let mut integ = Integrator::new(&sys);
                for _ in 0..k {
                    u = integ.step(&u, dt, scheme).unwrap();
                }
                let d: Vec<f64> = u.data.iter().zip(&reference.data).map(|(a, b)| a - b).collect();
                sys.norm_raw(&d)
            };
            let (e1, e2) = (err(4), err(8));
            let observed = (e1 / e2).log2();
            assert!((observed - order).abs() < 0.3, "{scheme}: observed order {observed}");
        }
    }

    #[test]
    fn simulate_records_every_step() {
        let sys = setup(20, 4);
        let u0 = smooth_state(&sys);
        let sim = simulate(&sys, &u0, 0.01, 0.1, Scheme::BackwardEuler, Some(5)).unwrap();
        assert_eq!(sim.trace.rows.len(), 11);
        assert_eq!(sim.snapshots.len(), 3);
        assert!(sim.trace.rows.windows(2).all(|w| w[1].e <= w[0].e));
        let zero = simulate(
            &sys,
            &StateVector::zeros(sys.layout),
            0.01,
            0.1,
            Scheme::BackwardEuler,
            None,
        )
        .unwrap();
        assert!(zero.trace.rows.iter().all(|r| r.e == 0.0 && r.d == 0.0));
    }

    #[test]
    fn method_of_steps_alignment_and_zero_data() {
        let p = ModelParams::default();
        let mesh = build_mesh(&p, 20).unwrap();
        assert!(matches!(
            MethodOfSteps::new(&p, &mesh, &InitialPreset::zero(), 0.03),
            Err(Error::Alignment { .. })
        ));
        let trace = simulate_method_of_steps(&p, &mesh, &InitialPreset::zero(), 0.01, 0.2).unwrap();
        assert_eq!(trace.rows.len(), 21);
        assert!(trace.rows.iter().all(|r| r.e == 0.0));
    }

    #[test]
    fn method_of_steps_delay_sign_matters() {
        let mesh = build_mesh(&ModelParams::default(), 20).unwrap();
        let preset = InitialPreset {
            kind: InitialKind::SineMode {
                k_u: 1,
                k_y: 1,
                target: SineTarget::Velocity,
            },
            history: History::SineInTime { omega: 10.0 },
        };
        let run = |k2: f64| {
            let p = ModelParams {
                kappa2: k2,
                ..ModelParams::default()
            };
            simulate_method_of_steps(&p, &mesh, &preset, 0.01, 0.5).unwrap()
        };
        let (plus, minus) = (run(0.5), run(-0.5));
        let last = |t: &EnergyTrace| t.rows.last().unwrap().e;
        assert!((last(&plus) - last(&minus)).abs() > 1e-6 * last(&plus));
    }
}
