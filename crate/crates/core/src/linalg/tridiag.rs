use super::{Scalar, Triplet};
use crate::{Error, Result};

/// Symmetric tridiagonal matrix: `diag[i]` on the diagonal, `off[i]` at `(i, i+1)` and `(i+1, i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn zeros(n: usize) -> Self {
        Self {
            diag: vec![0.0; n],
            off: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i as isize) - (j as isize) {
            0 => self.diag[i],
            1 => self.off[j],
            -1 => self.off[i],
            _ => 0.0,
        }
    }

    /// Leading `m x m` principal block.
    pub fn leading(&self, m: usize) -> Self {
        Self {
            diag: self.diag[..m].to_vec(),
            off: self.off[..m.saturating_sub(1)].to_vec(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            diag: self.diag.iter().map(|d| d * s).collect(),
            off: self.off.iter().map(|d| d * s).collect(),
        }
    }

    /// `y = A x` on a prefix-compatible vector.
    pub fn mul<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.dim()];
        self.mul_acc(T::one(), x, &mut y);
        y
    }

    /// `y += s * A x`.
    pub fn mul_acc<T: Scalar>(&self, s: T, x: &[T], y: &mut [T]) {
        let n = self.dim();
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(y.len(), n);
        for i in 0..n {
            let mut acc = T::from_real(self.diag[i]) * x[i];
            if i > 0 {
                acc += T::from_real(self.off[i - 1]) * x[i - 1];
            }
            if i + 1 < n {
                acc += T::from_real(self.off[i]) * x[i + 1];
            }
            y[i] += s * acc;
        }
    }

    /// `x^H A y`.
    pub fn form<T: Scalar>(&self, x: &[T], y: &[T]) -> T {
        let ay = self.mul(y);
        super::dot(x, &ay)
    }

    pub fn triplets(&self) -> Vec<Triplet> {
        let n = self.dim();
        let mut t = Vec::with_capacity(3 * n);
        for i in 0..n {
            if i > 0 {
                t.push(Triplet::new(i, i - 1, self.off[i - 1]));
            }
            t.push(Triplet::new(i, i, self.diag[i]));
            if i + 1 < n {
                t.push(Triplet::new(i, i + 1, self.off[i]));
            }
        }
        t
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        nalgebra::DMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }

    pub fn cholesky(&self) -> Result<TridiagCholesky> {
        TridiagCholesky::new(self)
    }
}

/// `A = L D L^T` factor of an SPD tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct TridiagCholesky {
    d: Vec<f64>,
    l: Vec<f64>,
}

impl TridiagCholesky {
    pub fn new(a: &SymTridiag) -> Result<Self> {
        let n = a.dim();
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            d[i] = a.diag[i];
            if i > 0 {
                d[i] -= l[i - 1] * l[i - 1] * d[i - 1];
            }
            if !(d[i] > 0.0) {
                return Err(Error::Solver(format!(
                    "tridiagonal matrix not positive definite (pivot {i} = {})",
                    d[i]
                )));
            }
            if i + 1 < n {
                l[i] = a.off[i] / d[i];
            }
        }
        Ok(Self { d, l })
    }

    pub fn solve_in_place<T: Scalar>(&self, x: &mut [T]) {
        let n = self.d.len();
        for i in 1..n {
            let li = T::from_real(self.l[i - 1]);
            let prev = x[i - 1];
            x[i] -= li * prev;
        }
        for i in 0..n {
            x[i] /= T::from_real(self.d[i]);
        }
        for i in (0..n.saturating_sub(1)).rev() {
            let li = T::from_real(self.l[i]);
            let next = x[i + 1];
            x[i] -= li * next;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_stencil() {
        let n = 7;
        let a = SymTridiag {
            diag: vec![2.0; n],
            off: vec![-1.0; n - 1],
        };
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.3).collect();
        let mut b = a.mul(&x);
        a.cholesky().unwrap().solve_in_place(&mut b);
        for (p, q) in b.iter().zip(&x) {
            assert!((p - q).abs() < 1e-13);
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let a = SymTridiag {
            diag: vec![1.0, 1.0],
            off: vec![2.0],
        };
        assert!(a.cholesky().is_err());
    }
}
