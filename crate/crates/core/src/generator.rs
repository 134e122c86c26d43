//! Semi-discrete generator `A_h` and energy Gram matrix `M_h`.
//!
//! The semi-discrete system is kept in mass-matrix form `B U' = C U` with
//! `B = diag(I, M, I, M, I)` and a sparse `C`, so that `A_h = B^{-1} C`:
//!
//! ```text
//! u'      = v
//! M v'    = -a K u - K_b (k1 v + k2 E eta_N) - M_c z
//! y'      = z
//! M z'    = -K y + M_c v
//! eta_j'  = -(eta_j - eta_{j-1}) / (tau drho),   eta_0 := E^T v
//! ```
//!
//! `E` extends delay-node values by zero. The energy Gram matrix is
//! `M_h = diag(a K, M, K, M, w drho (I (x) K_beta))` with `w = tau |k2|`.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretize::{assemble_fem, FemMatrices, Mesh};
use crate::linalg::{self, BandLu, BandMatrix, CsrMatrix, Scalar, TridiagCholesky, Triplet};
use crate::model::{validate_params, ModelParams};
use crate::{Error, Result};

/// Sizes and offsets of the packed state `[u; v; y; z; eta_1; ...; eta_Nrho]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLayout {
    pub n_int: usize,
    pub m_eta: usize,
    pub nrho: usize,
}

impl StateLayout {
    pub fn new(n_int: usize, m_eta: usize, nrho: usize) -> Self {
        Self { n_int, m_eta, nrho }
    }

    pub fn len(&self) -> usize {
        4 * self.n_int + self.m_eta * self.nrho
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn u(&self) -> std::ops::Range<usize> {
        0..self.n_int
    }
    pub fn v(&self) -> std::ops::Range<usize> {
        self.n_int..2 * self.n_int
    }
    pub fn y(&self) -> std::ops::Range<usize> {
        2 * self.n_int..3 * self.n_int
    }
    pub fn z(&self) -> std::ops::Range<usize> {
        3 * self.n_int..4 * self.n_int
    }

    /// Delay level `j` in `1..=nrho`.
    pub fn eta(&self, j: usize) -> std::ops::Range<usize> {
        assert!((1..=self.nrho).contains(&j), "eta level {j} out of 1..={}", self.nrho);
        let start = 4 * self.n_int + (j - 1) * self.m_eta;
        start..start + self.m_eta
    }

    /// The `(u, v, y, z)` prefix.
    pub fn waves(&self) -> std::ops::Range<usize> {
        0..4 * self.n_int
    }
}

/// Packed discrete state. Level 0 of `eta` is not stored: it is `v` restricted to `(0, beta]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub layout: StateLayout,
    pub data: Vec<f64>,
}

macro_rules! block_access {
    ($get:ident, $get_mut:ident) => {
        pub fn $get(&self) -> &[f64] {
            &self.data[self.layout.$get()]
        }
        pub fn $get_mut(&mut self) -> &mut [f64] {
            let r = self.layout.$get();
            &mut self.data[r]
        }
    };
}

impl StateVector {
    pub fn zeros(layout: StateLayout) -> Self {
        Self {
            layout,
            data: vec![0.0; layout.len()],
        }
    }

    pub fn from_vec(layout: StateLayout, data: Vec<f64>) -> Result<Self> {
        if data.len() != layout.len() {
            return Err(Error::Shape {
                expected: layout.len(),
                actual: data.len(),
            });
        }
        Ok(Self { layout, data })
    }

    /// Deterministic pseudo-random state with entries in `[-1, 1)`.
    pub fn random(layout: StateLayout, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..layout.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        Self { layout, data }
    }

    block_access!(u, u_mut);
    block_access!(v, v_mut);
    block_access!(y, y_mut);
    block_access!(z, z_mut);

    pub fn eta(&self, j: usize) -> &[f64] {
        &self.data[self.layout.eta(j)]
    }

    pub fn eta_mut(&mut self, j: usize) -> &mut [f64] {
        let r = self.layout.eta(j);
        &mut self.data[r]
    }

    /// `v` on the delay nodes, i.e. the implicit level `eta_0`.
    pub fn v_beta(&self) -> &[f64] {
        &self.v()[..self.layout.m_eta]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Node-interleaved permutation making every system matrix banded.
#[derive(Debug, Clone)]
pub(crate) struct BandOrdering {
    /// `to_band[packed] = band index`.
    to_band: Vec<usize>,
    kl: usize,
    ku: usize,
}

impl BandOrdering {
    /// Orders unknowns node by node: `(u_k, v_k, y_k, z_k, eta_{1..nrho, k})`.
    pub(crate) fn new(layout: &StateLayout, pattern: &[&[Triplet]]) -> Self {
        let mut to_band = vec![0usize; layout.len()];
        let mut next = 0;
        for k in 0..layout.n_int {
            for r in [layout.u(), layout.v(), layout.y(), layout.z()] {
                to_band[r.start + k] = next;
                next += 1;
            }
            if k < layout.m_eta {
                for j in 1..=layout.nrho {
                    to_band[layout.eta(j).start + k] = next;
                    next += 1;
                }
            }
        }
        debug_assert_eq!(next, layout.len());
        let (mut kl, mut ku) = (0, 0);
        for t in pattern.iter().flat_map(|p| p.iter()) {
            let (i, j) = (to_band[t.row], to_band[t.col]);
            if i > j {
                kl = kl.max(i - j);
            } else {
                ku = ku.max(j - i);
            }
        }
        Self { to_band, kl, ku }
    }

    pub(crate) fn band<T: Scalar>(&self, parts: &[(T, &CsrMatrix)]) -> BandMatrix<T> {
        let mut b = BandMatrix::zeros(self.to_band.len(), self.kl, self.ku);
        for &(s, mat) in parts {
            for i in 0..mat.nrows() {
                for (j, v) in mat.row(i) {
                    b.add(self.to_band[i], self.to_band[j], s * T::from_real(v));
                }
            }
        }
        b
    }

    pub(crate) fn permute<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); x.len()];
        for (p, &b) in self.to_band.iter().enumerate() {
            out[b] = x[p];
        }
        out
    }

    pub(crate) fn unpermute<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        self.to_band.iter().map(|&b| x[b]).collect()
    }
}

/// `(u, v, y, z)` rows of `C` and `B` without any delay terms, on packed indices `0..4n`.
pub(crate) fn wave_triplets(p: &ModelParams, fem: &FemMatrices, n: usize) -> (Vec<Triplet>, Vec<Triplet>) {
    let (u0, v0, y0, z0) = (0, n, 2 * n, 3 * n);
    let mut c = Vec::new();
    let mut b = Vec::new();
    for i in 0..n {
        c.push(Triplet::new(u0 + i, v0 + i, 1.0));
        c.push(Triplet::new(y0 + i, z0 + i, 1.0));
        b.push(Triplet::new(u0 + i, u0 + i, 1.0));
        b.push(Triplet::new(y0 + i, y0 + i, 1.0));
    }
    let put = |mat: &crate::linalg::SymTridiag, s: f64, row0: usize, col0: usize, out: &mut Vec<Triplet>| {
        if s == 0.0 {
            return;
        }
        for t in mat.triplets() {
            out.push(Triplet::new(row0 + t.row, col0 + t.col, s * t.value));
        }
    };
    put(&fem.stiffness, -p.a, v0, u0, &mut c);
    put(&fem.stiffness_b, -p.kappa1, v0, v0, &mut c);
    put(&fem.mass_c, -1.0, v0, z0, &mut c);
    put(&fem.stiffness, -1.0, z0, y0, &mut c);
    put(&fem.mass_c, 1.0, z0, v0, &mut c);
    put(&fem.mass, 1.0, v0, v0, &mut b);
    put(&fem.mass, 1.0, z0, z0, &mut b);
    (c, b)
}

/// Assembled semi-discrete system; immutable once built.
#[derive(Debug)]
pub struct SemiDiscreteSystem {
    pub params: ModelParams,
    pub mesh: Mesh,
    pub fem: FemMatrices,
    pub layout: StateLayout,
    pub delta_rho: f64,
    /// Right-hand side operator `C` of `B U' = C U`.
    pub rhs: CsrMatrix,
    /// Left-hand side `B = diag(I, M, I, M, I)`.
    pub lhs: CsrMatrix,
    ordering: BandOrdering,
    mass_chol: TridiagCholesky,
    stiffness_chol: TridiagCholesky,
    beta_chol: TridiagCholesky,
    stationary_lu: OnceLock<std::result::Result<BandLu<f64>, Error>>,
}

pub fn assemble_generator(p: &ModelParams, mesh: &Mesh, nrho: usize) -> Result<SemiDiscreteSystem> {
    validate_params(*p)?;
    if nrho < 2 {
        return Err(Error::Resolution(format!("nrho = {nrho} < 2")));
    }
    let fem = assemble_fem(p, mesh)?;
    let n = mesh.n_int;
    let m = mesh.m_eta;
    let layout = StateLayout::new(n, m, nrho);
    let delta_rho = 1.0 / nrho as f64;

    let (mut c, b_wave) = wave_triplets(p, &fem, n);
    let mut b = b_wave;
    // delayed flux -k2 K_b E eta_N; K_b lives on the first m interior nodes
    let top = layout.eta(nrho).start;
    if p.kappa2 != 0.0 {
        for t in fem.stiffness_beta.triplets() {
            c.push(Triplet::new(layout.v().start + t.row, top + t.col, -p.kappa2 * t.value));
        }
    }
    // upwind transport in rho with inflow eta_0 = v
    let rate = 1.0 / (p.tau * delta_rho);
    for j in 1..=nrho {
        let r = layout.eta(j);
        for k in 0..m {
            let row = r.start + k;
            let inflow = if j == 1 {
                layout.v().start + k
            } else {
                layout.eta(j - 1).start + k
            };
            c.push(Triplet::new(row, row, -rate));
            c.push(Triplet::new(row, inflow, rate));
            b.push(Triplet::new(row, row, 1.0));
        }
    }

    let dim = layout.len();
    let ordering = BandOrdering::new(&layout, &[&c, &b]);
    let rhs = CsrMatrix::from_triplets(dim, dim, &c);
    let lhs = CsrMatrix::from_triplets(dim, dim, &b);
    Ok(SemiDiscreteSystem {
        params: *p,
        mesh: mesh.clone(),
        layout,
        delta_rho,
        rhs,
        lhs,
        ordering,
        mass_chol: fem.mass.cholesky()?,
        stiffness_chol: fem.stiffness.cholesky()?,
        beta_chol: fem.stiffness_beta.cholesky()?,
        fem,
        stationary_lu: OnceLock::new(),
    })
}

impl SemiDiscreteSystem {
    pub fn dim(&self) -> usize {
        self.layout.len()
    }

    pub fn nrho(&self) -> usize {
        self.layout.nrho
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::Shape {
                expected: self.dim(),
                actual: len,
            });
        }
        Ok(())
    }

    /// `x <- B^{-1} x`.
    pub(crate) fn solve_lhs_in_place<T: Scalar>(&self, x: &mut [T]) {
        self.mass_chol.solve_in_place(&mut x[self.layout.v()]);
        self.mass_chol.solve_in_place(&mut x[self.layout.z()]);
    }

    /// `A_h x` for real or complex `x`.
    pub fn apply_raw<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let mut w = self.rhs.mul(x);
        self.solve_lhs_in_place(&mut w);
        w
    }

    pub fn apply_generator(&self, u: &StateVector) -> Result<StateVector> {
        self.check(u.len())?;
        Ok(StateVector {
            layout: self.layout,
            data: self.apply_raw(&u.data),
        })
    }

    /// `M_h x`.
    pub fn gram_apply<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let l = &self.layout;
        let f = &self.fem;
        let mut out = vec![T::zero(); x.len()];
        let a = T::from_real(self.params.a);
        f.stiffness.mul_acc(a, &x[l.u()], &mut out[l.u()]);
        f.mass.mul_acc(T::one(), &x[l.v()], &mut out[l.v()]);
        f.stiffness.mul_acc(T::one(), &x[l.y()], &mut out[l.y()]);
        f.mass.mul_acc(T::one(), &x[l.z()], &mut out[l.z()]);
        let w = T::from_real(self.params.eta_weight() * self.delta_rho);
        for j in 1..=l.nrho {
            f.stiffness_beta.mul_acc(w, &x[l.eta(j)], &mut out[l.eta(j)]);
        }
        out
    }

    /// `x <- M_h^{-1} x`.
    pub fn gram_solve_in_place<T: Scalar>(&self, x: &mut [T]) {
        let l = &self.layout;
        self.stiffness_chol.solve_in_place(&mut x[l.u()]);
        let inv_a = T::from_real(1.0 / self.params.a);
        x[l.u()].iter_mut().for_each(|e| *e *= inv_a);
        self.mass_chol.solve_in_place(&mut x[l.v()]);
        self.stiffness_chol.solve_in_place(&mut x[l.y()]);
        self.mass_chol.solve_in_place(&mut x[l.z()]);
        let inv_w = T::from_real(1.0 / (self.params.eta_weight() * self.delta_rho));
        for j in 1..=l.nrho {
            let r = l.eta(j);
            self.beta_chol.solve_in_place(&mut x[r.clone()]);
            x[r].iter_mut().for_each(|e| *e *= inv_w);
        }
    }

    /// `<x, y>_{M_h}`, conjugate-linear in `x`.
    pub fn inner_raw<T: Scalar>(&self, x: &[T], y: &[T]) -> T {
        linalg::dot(x, &self.gram_apply(y))
    }

    pub fn norm_raw<T: Scalar>(&self, x: &[T]) -> f64 {
        self.inner_raw(x, x).real().max(0.0).sqrt()
    }

    pub fn energy_inner(&self, u: &StateVector, v: &StateVector) -> Result<f64> {
        self.check(u.len())?;
        self.check(v.len())?;
        Ok(self.inner_raw(&u.data, &v.data))
    }

    pub fn energy_norm(&self, u: &StateVector) -> f64 {
        self.norm_raw(&u.data)
    }

    /// `Re <A_h U, U>_{M_h}`.
    ///
    /// Uses `M_h B^{-1} = diag(aK, I, K, I, w drho K_beta)`, so no mass solve is needed.
    pub fn dissipation_form(&self, u: &StateVector) -> Result<f64> {
        self.check(u.len())?;
        let l = &self.layout;
        let f = &self.fem;
        let cu = self.rhs.mul(&u.data);
        let x = &u.data;
        let mut s = self.params.a * f.stiffness.form(&x[l.u()], &cu[l.u()]);
        s += linalg::dot(&x[l.v()], &cu[l.v()]);
        s += f.stiffness.form(&x[l.y()], &cu[l.y()]);
        s += linalg::dot(&x[l.z()], &cu[l.z()]);
        let w = self.params.eta_weight() * self.delta_rho;
        for j in 1..=l.nrho {
            s += w * f.stiffness_beta.form(&x[l.eta(j)], &cu[l.eta(j)]);
        }
        Ok(s)
    }

    /// `||v_x||^2` over `(0, beta)`: `v_beta^T K_beta v_beta`.
    pub fn damped_seminorm(&self, u: &StateVector) -> f64 {
        self.fem.stiffness_beta.form(u.v_beta(), u.v_beta())
    }

    /// Dissipation rate bound `D = (k1 - |k2|) ||v_x||^2_(0, beta)`.
    pub fn dissipation_rate(&self, u: &StateVector) -> f64 {
        self.params.damping_margin() * self.damped_seminorm(u)
    }

    /// Real band matrix `s_b B + s_c C` in the internal ordering.
    pub(crate) fn band_combination<T: Scalar>(&self, s_lhs: T, s_rhs: T) -> BandMatrix<T> {
        let mut parts = Vec::with_capacity(2);
        if s_lhs != T::zero() {
            parts.push((s_lhs, &self.lhs));
        }
        if s_rhs != T::zero() {
            parts.push((s_rhs, &self.rhs));
        }
        self.ordering.band(&parts)
    }

    pub(crate) fn ordering(&self) -> &BandOrdering {
        &self.ordering
    }

    /// Solves `-A_h U = F`, i.e. `-C U = B F`.
    pub fn solve_stationary(&self, f: &StateVector) -> Result<StateVector> {
        self.check(f.len())?;
        if f.data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Solver("right-hand side is not finite".into()));
        }
        let lu = self
            .stationary_lu
            .get_or_init(|| self.band_combination(0.0, -1.0).factor())
            .as_ref()
            .map_err(|e| Error::Solver(format!("stationary operator factorization failed: {e}")))?;
        let solve = |rhs: &[f64]| -> Vec<f64> {
            let mut b = self.lhs.mul(rhs);
            b = self.ordering.permute(&b);
            lu.solve_in_place(&mut b);
            self.ordering.unpermute(&b)
        };
        let mut u = solve(&f.data);
        let f_norm = linalg::norm2(&f.data);
        let residual = |u: &[f64]| -> Vec<f64> {
            let au = self.apply_raw(u);
            au.iter().zip(&f.data).map(|(a, b)| a + b).collect()
        };
        let mut r = residual(&u);
        if linalg::norm2(&r) > 1e-10 * f_norm {
            // one step of iterative refinement: -A du = r  =>  u <- u - du
            let neg: Vec<f64> = r.iter().map(|x| -x).collect();
            let du = solve(&neg);
            u.iter_mut().zip(&du).for_each(|(a, b)| *a -= b);
            r = residual(&u);
        }
        let rel = linalg::norm2(&r) / f_norm.max(f64::MIN_POSITIVE);
        if f_norm > 0.0 && rel > 1e-10 {
            return Err(Error::Solver(format!(
                "stationary solve residual {rel:e} exceeds 1e-10 (dim {})",
                self.dim()
            )));
        }
        StateVector::from_vec(self.layout, u)
    }

    /// Dense `A_h = B^{-1} C`.
    pub fn dense_generator(&self) -> DMatrix<f64> {
        let mut a = self.rhs.to_dense();
        for col in 0..a.ncols() {
            let mut c: Vec<f64> = a.column(col).iter().copied().collect();
            self.solve_lhs_in_place(&mut c);
            a.set_column(col, &nalgebra::DVector::from_vec(c));
        }
        a
    }

    /// Dense `M_h`.
    pub fn dense_gram(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut g = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for col in 0..n {
            e[col] = 1.0;
            let c = self.gram_apply(&e);
            e[col] = 0.0;
            g.set_column(col, &nalgebra::DVector::from_vec(c));
        }
        g
    }

    /// Largest value of `Re <A_h U, U>_{M_h} / ||U||^2_{M_h}` and a maximizing state,
    /// from a dense generalized symmetric eigensolve (small systems only).
    pub fn max_dissipation_ratio(&self) -> Result<(f64, StateVector)> {
        let g = self.dense_gram();
        let ga = &g * self.dense_generator();
        let sym = (&ga + ga.transpose()) * 0.5;
        let chol = g
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Solver("energy Gram matrix not positive definite".into()))?;
        let l = chol.l();
        let l_inv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Solver("Cholesky factor not invertible".into()))?;
        let reduced = &l_inv * sym * l_inv.transpose();
        let reduced = (&reduced + reduced.transpose()) * 0.5;
        let eig = reduced.symmetric_eigen();
        let (k, &best) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .ok_or_else(|| Error::Solver("empty system".into()))?;
        let w = eig.eigenvectors.column(k).into_owned();
        let x = l_inv.transpose() * w;
        Ok((best, StateVector::from_vec(self.layout, x.iter().copied().collect())?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::build_mesh;

    fn system(p: &ModelParams, nx: usize, nrho: usize) -> SemiDiscreteSystem {
        let mesh = build_mesh(p, nx).unwrap();
        assemble_generator(p, &mesh, nrho).unwrap()
    }

    #[test]
    fn layout_sizes() {
        let s = system(&ModelParams::default(), 20, 4);
        assert_eq!(s.dim(), 4 * 19 + 10 * 4);
        assert_eq!(s.layout.eta(4).end, s.dim());
        assert!(matches!(
            assemble_generator(&ModelParams::default(), &s.mesh, 1),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn displacement_only_state_moves_only_velocity() {
        let p = ModelParams::default();
        let s = system(&p, 20, 4);
        let mut u = StateVector::zeros(s.layout);
        for (i, x) in s.mesh.interior_nodes().iter().enumerate() {
            u.u_mut()[i] = (std::f64::consts::PI * x).sin();
        }
        let au = s.apply_generator(&u).unwrap();
        // v' = -a M^{-1} K u
        let mut expected = s.fem.stiffness.mul(u.u());
        expected.iter_mut().for_each(|e| *e *= -p.a);
        s.mass_chol.solve_in_place(&mut expected);
        for (i, e) in expected.iter().enumerate() {
            assert!((au.v()[i] - e).abs() < 1e-10 * e.abs().max(1.0));
        }
        for r in [s.layout.u(), s.layout.y(), s.layout.z()] {
            assert!(au.data[r].iter().all(|&x| x == 0.0));
        }
        for j in 1..=4 {
            assert!(au.eta(j).iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn zero_coupling_decouples_blocks() {
        let p = ModelParams {
            c0: 0.0,
            enforce_h: false,
            ..ModelParams::default()
        };
        let s = system(&p, 20, 4);
        let l = s.layout;
        let first: Vec<usize> = l.u().chain(l.v()).chain(l.eta(1).start..l.len()).collect();
        let second: Vec<usize> = l.y().chain(l.z()).collect();
        let a = s.dense_generator();
        for &i in &first {
            for &j in &second {
                assert_eq!(a[(i, j)], 0.0);
                assert_eq!(a[(j, i)], 0.0);
            }
        }
    }

    #[test]
    fn apply_matches_dense_and_is_linear() {
        let s = system(&ModelParams::default(), 20, 5);
        let a = s.dense_generator();
        let x = StateVector::random(s.layout, 3);
        let y = StateVector::random(s.layout, 4);
        let ax = s.apply_generator(&x).unwrap();
        let dense = &a * nalgebra::DVector::from_vec(x.data.clone());
        let scale = dense.amax();
        for i in 0..s.dim() {
            assert!((ax.data[i] - dense[i]).abs() <= 1e-12 * scale);
        }
        let combo: Vec<f64> = x.data.iter().zip(&y.data).map(|(p, q)| 2.0 * p - 3.0 * q).collect();
        let lhs = s.apply_raw(&combo);
        let ay = s.apply_generator(&y).unwrap();
        for i in 0..s.dim() {
            let rhs = 2.0 * ax.data[i] - 3.0 * ay.data[i];
            assert!((lhs[i] - rhs).abs() <= 1e-11 * scale);
        }
        assert!(s
            .apply_generator(&StateVector::zeros(s.layout))
            .unwrap()
            .data
            .iter()
            .all(|&x| x == 0.0));
        let short = StateVector::zeros(StateLayout::new(3, 1, 2));
        assert!(matches!(s.apply_generator(&short), Err(Error::Shape { .. })));
    }

    #[test]
    fn gram_is_spd_and_solve_inverts() {
        let s = system(&ModelParams::default(), 16, 3);
        let g = s.dense_gram();
        assert_eq!(&g, &g.transpose());
        assert!(g.clone().symmetric_eigenvalues().min() > 0.0);
        let x = StateVector::random(s.layout, 9);
        let mut y = s.gram_apply(&x.data);
        s.gram_solve_in_place(&mut y);
        for (a, b) in y.iter().zip(&x.data) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn dissipation_form_matches_dense_and_vanishes_without_velocity() {
        let s = system(&ModelParams::default(), 20, 4);
        let x = StateVector::random(s.layout, 11);
        let g = s.dense_gram();
        let a = s.dense_generator();
        let xv = nalgebra::DVector::from_vec(x.data.clone());
        let dense = (xv.transpose() * &g * &a * &xv)[(0, 0)];
        let fast = s.dissipation_form(&x).unwrap();
        assert!((dense - fast).abs() < 1e-9 * dense.abs().max(1.0));

        let mut w = x.clone();
        w.v_mut().fill(0.0);
        for j in 1..=4 {
            w.eta_mut(j).fill(0.0);
        }
        assert!(s.dissipation_form(&w).unwrap().abs() < 1e-9);
    }

    #[test]
    fn stationary_solve_basics() {
        let s = system(&ModelParams::default(), 20, 4);
        let zero = StateVector::zeros(s.layout);
        assert!(s.solve_stationary(&zero).unwrap().data.iter().all(|&x| x == 0.0));

        let mut f = StateVector::zeros(s.layout);
        for (i, x) in s.mesh.interior_nodes().iter().enumerate() {
            f.u_mut()[i] = (3.0 * x).sin() * x;
        }
        let u = s.solve_stationary(&f).unwrap();
        for j in 1..=4 {
            for (e, f1) in u.eta(j).iter().zip(f.u()) {
                assert!((e + f1).abs() < 1e-12);
            }
        }
        let f = StateVector::random(s.layout, 5);
        let u = s.solve_stationary(&f).unwrap();
        let au = s.apply_generator(&u).unwrap();
        let r: Vec<f64> = au.data.iter().zip(&f.data).map(|(a, b)| a + b).collect();
        assert!(linalg::norm2(&r) <= 1e-10 * linalg::norm2(&f.data));
    }

    #[test]
    fn violated_hypothesis_admits_positive_dissipation() {
        let p = ModelParams {
            kappa1: 0.5,
            kappa2: 1.5,
            enforce_h: false,
            ..ModelParams::default()
        };
        let s = system(&p, 10, 4);
        let (ratio, state) = s.max_dissipation_ratio().unwrap();
        assert!(ratio > 0.0);
        assert!(s.dissipation_form(&state).unwrap() > 0.0);
    }
}
