//! Small linear-algebra kernels specialised to the 1-D structure of the model:
//! every P1 matrix is symmetric tridiagonal and, after a node-interleaved
//! reordering, every system matrix is banded.

mod banded;
mod sparse;
mod tridiag;

pub use banded::{BandLu, BandMatrix};
pub use sparse::{CsrMatrix, Triplet};
pub use tridiag::{SymTridiag, TridiagCholesky};

use nalgebra::ComplexField;

/// Scalar type accepted by the generic kernels (`f64` and `Complex<f64>`).
pub trait Scalar: ComplexField<RealField = f64> + Copy {}
impl<T: ComplexField<RealField = f64> + Copy> Scalar for T {}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x.conjugate() * y)
}

pub fn norm2<T: Scalar>(a: &[T]) -> f64 {
    a.iter().map(|x| x.modulus_squared()).sum::<f64>().sqrt()
}

pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
