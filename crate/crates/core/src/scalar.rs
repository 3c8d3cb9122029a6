use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use nalgebra::DMatrix;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;

/// Floating point scalar used throughout the crate: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + FftNum
    + NumAssign
    + Sum
    + Default
    + Display
    + LowerExp
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal.
    fn c(x: f64) -> Self;

    fn to_f64_lossy(self) -> f64;

    /// Converts an integer count.
    fn from_count(n: usize) -> Self {
        Self::c(n as f64)
    }

    /// Eigendecomposition of a real symmetric matrix: ascending eigenvalues and
    /// the matching orthonormal eigenvectors as columns.
    fn symmetric_eigen(m: &DMatrix<Self>) -> (Vec<Self>, DMatrix<Self>);
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn c(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn to_f64_lossy(self) -> f64 {
                self as f64
            }

            fn symmetric_eigen(m: &DMatrix<Self>) -> (Vec<Self>, DMatrix<Self>) {
                let n = m.nrows();
                if n == 0 {
                    return (Vec::new(), DMatrix::zeros(0, 0));
                }
                let eig = nalgebra::SymmetricEigen::new(m.clone());
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
                let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
                let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
                (values, vectors)
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);
