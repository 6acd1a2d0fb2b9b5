use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar the discretization is generic over: `f32` or `f64`.
///
/// The `faer` bound lets the sparse direct solver run in the same precision
/// as the assembly.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
    + faer::traits::RealField
{
    /// Converts an `f64` literal. Never fails for the supported types.
    #[inline(always)]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline(always)]
    fn from_index(i: usize) -> Self {
        Self::from_usize(i).expect("index representable")
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// 2-vector in (v, x) coordinates.
pub type Vec2<T> = [T; 2];

/// Symmetric 2×2 matrix stored row-major.
pub type Mat2<T> = [[T; 2]; 2];

#[inline]
pub(crate) fn dot<T: Real>(a: Vec2<T>, b: Vec2<T>) -> T {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub(crate) fn mat_vec<T: Real>(m: &Mat2<T>, a: Vec2<T>) -> Vec2<T> {
    [
        m[0][0] * a[0] + m[0][1] * a[1],
        m[1][0] * a[0] + m[1][1] * a[1],
    ]
}

/// Eigenvalues `(min, max)` of a symmetric 2×2 matrix.
pub fn sym_eigenvalues<T: Real>(m: &Mat2<T>) -> (T, T) {
    let half = T::lit(0.5);
    let mean = half * (m[0][0] + m[1][1]);
    let diff = half * (m[0][0] - m[1][1]);
    let off = half * (m[0][1] + m[1][0]);
    let rad = diff.hypot(off);
    (mean - rad, mean + rad)
}
