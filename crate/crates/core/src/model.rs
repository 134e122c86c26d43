//! Continuous-model parameters, piecewise coefficients and initial/history data.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::discretize::Mesh;
use crate::generator::{StateLayout, StateVector};
use crate::{Error, Result};

/// Physical constants and interface geometry of the coupled system.
///
/// Damping `b = 1` acts on `(0, beta)`, coupling `c = c0` on `(alpha, gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    #[serde(rename = "L")]
    pub length: f64,
    pub a: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub tau: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c0: f64,
    #[serde(rename = "enforce_H")]
    pub enforce_h: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            length: 1.0,
            a: 1.0,
            kappa1: 1.0,
            kappa2: 0.5,
            tau: 0.1,
            alpha: 0.2,
            beta: 0.5,
            gamma: 0.7,
            c0: 1.0,
            enforce_h: true,
        }
    }
}

/// Parameters that passed [`validate_params`], plus whether the damping
/// hypothesis `0 < |kappa2| < kappa1` fails (only possible with `enforce_h = false`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedParams {
    pub params: ModelParams,
    pub hypothesis_warning: bool,
}

impl std::ops::Deref for ValidatedParams {
    type Target = ModelParams;
    fn deref(&self) -> &ModelParams {
        &self.params
    }
}

impl ModelParams {
    /// `kappa1 > 0`, `kappa2 != 0` and `|kappa2| < kappa1`.
    pub fn satisfies_hypothesis(&self) -> bool {
        self.kappa1 > 0.0 && self.kappa2 != 0.0 && self.kappa2.abs() < self.kappa1
    }

    /// Damping undone by the delayed feedback: `kappa1 - |kappa2|`.
    pub fn damping_margin(&self) -> f64 {
        self.kappa1 - self.kappa2.abs()
    }

    /// Weight of the `eta` block in the energy, `tau |kappa2|`.
    ///
    /// When `kappa2 == 0` the delay variable is decoupled from the dynamics and
    /// the weight falls back to `tau`, so the energy Gram matrix stays definite.
    pub fn eta_weight(&self) -> f64 {
        if self.kappa2 != 0.0 {
            self.tau * self.kappa2.abs()
        } else {
            self.tau
        }
    }

    /// Damping off, coupling off: two decoupled undamped Dirichlet waves.
    pub fn validation_mode(self) -> Self {
        Self {
            kappa1: 0.0,
            kappa2: 0.0,
            c0: 0.0,
            enforce_h: false,
            ..self
        }
    }

    /// Parses the plain-text `key = value` format (one key per line, `#` comments).
    ///
    /// Keys missing from the text keep their [`Default`] value.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut p = Self::default();
        let mut seen: Vec<&str> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if seen.contains(&key) {
                return Err(Error::Config {
                    line,
                    message: format!("duplicate key `{key}`"),
                });
            }
            let num = || -> Result<f64> {
                value.parse::<f64>().map_err(|_| Error::Config {
                    line,
                    message: format!("`{key}`: cannot parse `{value}` as a number"),
                })
            };
            match key {
                "L" => p.length = num()?,
                "a" => p.a = num()?,
                "kappa1" => p.kappa1 = num()?,
                "kappa2" => p.kappa2 = num()?,
                "tau" => p.tau = num()?,
                "alpha" => p.alpha = num()?,
                "beta" => p.beta = num()?,
                "gamma" => p.gamma = num()?,
                "c0" => p.c0 = num()?,
                "enforce_H" => {
                    p.enforce_h = match value {
                        "true" | "1" => true,
                        "false" | "0" => false,
                        _ => {
                            return Err(Error::Config {
                                line,
                                message: format!("`enforce_H`: expected true/false, got `{value}`"),
                            })
                        }
                    }
                }
                _ => {
                    return Err(Error::Config {
                        line,
                        message: format!("unknown key `{key}`"),
                    })
                }
            }
            seen.push(key);
        }
        Ok(p)
    }

    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        for (k, v) in [
            ("L", self.length),
            ("a", self.a),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("tau", self.tau),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("c0", self.c0),
        ] {
            let _ = writeln!(s, "{k} = {v}");
        }
        let _ = writeln!(s, "enforce_H = {}", self.enforce_h);
        s
    }
}

/// Checks the parameter invariants.
///
/// With `enforce_h = false` the damping hypothesis is only reported, and the
/// coupling and damping constants may be zero (validation and instability
/// exploration modes).
pub fn validate_params(p: ModelParams) -> Result<ValidatedParams> {
    for (name, v) in [("L", p.length), ("a", p.a), ("tau", p.tau)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Parameter(format!("{name} must be positive and finite, got {v}")));
        }
    }
    let c0_ok = if p.enforce_h { p.c0 > 0.0 } else { p.c0 >= 0.0 };
    if !c0_ok || !p.c0.is_finite() {
        return Err(Error::Parameter(format!("c0 must be positive, got {}", p.c0)));
    }
    if !p.kappa1.is_finite() || !p.kappa2.is_finite() {
        return Err(Error::Parameter("kappa1 and kappa2 must be finite".into()));
    }
    if !(0.0 < p.alpha && p.alpha < p.beta && p.beta < p.gamma && p.gamma < p.length) {
        return Err(Error::Geometry(format!(
            "need 0 < alpha < beta < gamma < L, got alpha={} beta={} gamma={} L={}",
            p.alpha, p.beta, p.gamma, p.length
        )));
    }
    let ok_h = p.satisfies_hypothesis();
    if p.enforce_h && !ok_h {
        return Err(Error::Hypothesis {
            kappa1: p.kappa1,
            kappa2_abs: p.kappa2.abs(),
        });
    }
    Ok(ValidatedParams {
        params: p,
        hypothesis_warning: !ok_h,
    })
}

fn check_domain(p: &ModelParams, x: f64) -> Result<()> {
    if (0.0..=p.length).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain { x, length: p.length })
    }
}

/// Damping indicator `b(x)`: 1 on `[0, beta)`, 0 on `[beta, L]`.
pub fn eval_b(p: &ModelParams, x: f64) -> Result<f64> {
    check_domain(p, x)?;
    Ok(if x < p.beta { 1.0 } else { 0.0 })
}

/// Coupling coefficient `c(x)`: `c0` on `[alpha, gamma)`, else 0.
///
/// Right-limit convention at the breakpoints, except at `alpha` itself where
/// the right limit would be `c0`; the breakpoint values are never sampled by
/// the assembly, which uses cell midpoints.
pub fn eval_c(p: &ModelParams, x: f64) -> Result<f64> {
    check_domain(p, x)?;
    Ok(if x > p.alpha && x < p.gamma { p.c0 } else { 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    U,
    V,
    Y,
    Z,
}

/// Whether a sine preset sets displacements `(u, y)` or velocities `(v, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SineTarget {
    Displacement,
    Velocity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Zero,
    /// `sin(k_u pi x / L)` in the first wave, `sin(k_y pi x / L)` in the second.
    SineMode {
        k_u: u32,
        k_y: u32,
        target: SineTarget,
    },
    /// Smooth compactly supported bump of unit height.
    Bump {
        center: f64,
        width: f64,
        field: Field,
    },
    /// Interior nodal values, one array per field.
    CustomNodal {
        u: Vec<f64>,
        v: Vec<f64>,
        y: Vec<f64>,
        z: Vec<f64>,
    },
}

/// Past velocity `f0(x, s) = v0(x) g(s)` on `s in (-tau, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum History {
    Zero,
    FrozenVelocity,
    SineInTime { omega: f64 },
}

impl History {
    /// Temporal profile `g(s)` for `s <= 0`.
    pub fn factor(&self, s: f64) -> f64 {
        match *self {
            History::Zero => 0.0,
            History::FrozenVelocity => 1.0,
            History::SineInTime { omega } => (omega * s).cos(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialPreset {
    pub kind: InitialKind,
    pub history: History,
}

impl InitialPreset {
    pub fn zero() -> Self {
        Self {
            kind: InitialKind::Zero,
            history: History::Zero,
        }
    }

    /// Smooth data compatible with the generator domain: first sine modes
    /// as displacements, zero velocity and zero history.
    pub fn smooth_default() -> Self {
        Self {
            kind: InitialKind::SineMode {
                k_u: 1,
                k_y: 1,
                target: SineTarget::Displacement,
            },
            history: History::FrozenVelocity,
        }
    }

    /// Looks up a named preset (`zero`, `smooth`, `sine_velocity`, `bump`).
    pub fn named(name: &str, p: &ModelParams) -> Option<Self> {
        let preset = match name {
            "zero" => Self::zero(),
            "smooth" => Self::smooth_default(),
            "sine_velocity" => Self {
                kind: InitialKind::SineMode {
                    k_u: 1,
                    k_y: 1,
                    target: SineTarget::Velocity,
                },
                history: History::FrozenVelocity,
            },
            "bump" => Self {
                kind: InitialKind::Bump {
                    center: 0.5 * (p.gamma + p.length),
                    width: 0.8 * (p.length - p.gamma),
                    field: Field::Y,
                },
                history: History::Zero,
            },
            _ => return None,
        };
        Some(preset)
    }

    fn validate(&self, p: &ModelParams) -> Result<()> {
        match &self.kind {
            InitialKind::SineMode { k_u, k_y, .. } if *k_u < 1 || *k_y < 1 => {
                Err(Error::Parameter("sine mode indices must be >= 1".into()))
            }
            InitialKind::Bump { center, width, .. }
                if !(*width > 0.0 && center - width / 2.0 > 0.0 && center + width / 2.0 < p.length) =>
            {
                Err(Error::Parameter(format!(
                    "bump support ({}, {}) must lie inside (0, L)",
                    center - width / 2.0,
                    center + width / 2.0
                )))
            }
            _ => Ok(()),
        }
    }

    /// Interior nodal `(u, v, y, z)` at `t = 0`.
    pub fn nodal_fields(&self, p: &ModelParams, mesh: &Mesh) -> Result<[Vec<f64>; 4]> {
        self.validate(p)?;
        let xs = mesh.interior_nodes();
        let n = xs.len();
        let zeros = || vec![0.0; n];
        let sine = |k: u32| -> Vec<f64> {
            xs.iter()
                .map(|x| (k as f64 * std::f64::consts::PI * x / p.length).sin())
                .collect()
        };
        Ok(match &self.kind {
            InitialKind::Zero => [zeros(), zeros(), zeros(), zeros()],
            InitialKind::SineMode { k_u, k_y, target } => match target {
                SineTarget::Displacement => [sine(*k_u), zeros(), sine(*k_y), zeros()],
                SineTarget::Velocity => [zeros(), sine(*k_u), zeros(), sine(*k_y)],
            },
            InitialKind::Bump { center, width, field } => {
                let half = width / 2.0;
                let bump: Vec<f64> = xs
                    .iter()
                    .map(|x| {
                        let r = (x - center) / half;
                        if r.abs() < 1.0 {
                            (1.0 - 1.0 / (1.0 - r * r)).exp()
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let mut out = [zeros(), zeros(), zeros(), zeros()];
                let slot = match field {
                    Field::U => 0,
                    Field::V => 1,
                    Field::Y => 2,
                    Field::Z => 3,
                };
                out[slot] = bump;
                out
            }
            InitialKind::CustomNodal { u, v, y, z } => {
                for f in [u, v, y, z] {
                    if f.len() != n {
                        return Err(Error::Shape {
                            expected: n,
                            actual: f.len(),
                        });
                    }
                }
                [u.clone(), v.clone(), y.clone(), z.clone()]
            }
        })
    }
}

/// Packs the preset into a state with `nrho` delay levels.
///
/// Level `j` sits at `rho_j = j / nrho` and holds `f0(x, -rho_j tau)` on the
/// delay nodes `(0, beta]`.
pub fn build_initial_state(p: &ModelParams, mesh: &Mesh, preset: &InitialPreset, nrho: usize) -> Result<StateVector> {
    let [u, v, y, z] = preset.nodal_fields(p, mesh)?;
    let layout = StateLayout::new(mesh.n_int, mesh.m_eta, nrho);
    let mut s = StateVector::zeros(layout);
    s.u_mut().copy_from_slice(&u);
    s.v_mut().copy_from_slice(&v);
    s.y_mut().copy_from_slice(&y);
    s.z_mut().copy_from_slice(&z);
    let m = mesh.m_eta;
    for j in 1..=nrho {
        let rho = j as f64 / nrho as f64;
        let g = preset.history.factor(-rho * p.tau);
        for (e, vi) in s.eta_mut(j).iter_mut().zip(&v[..m]) {
            *e = vi * g;
        }
    }
    Ok(s)
}
