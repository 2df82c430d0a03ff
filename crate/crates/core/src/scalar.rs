//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the solvers and estimators are generic over.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + crate::linsolve::SparseLu
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline(always)]
pub fn c<T: Real>(x: f64) -> T {
    T::from_f64(x).unwrap()
}

/// Converts `T` to `f64` for reporting.
#[inline(always)]
pub fn f<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap()
}

/// Relative machine tolerance used by iterative scalar solves.
pub fn rel_tol<T: Real>() -> T {
    if T::epsilon() < c(1e-10) {
        c(1e-12)
    } else {
        c(1e-5)
    }
}
