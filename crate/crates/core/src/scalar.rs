//! Scalar abstraction.
//!
//! Every numeric routine in the crate is written against [`Real`], so the
//! same code runs in `f64` (the default, used by the CLI and the acceptance
//! suite) and in `f32`. Operator entries are always `Complex<T>`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point scalar underlying all complex operators.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal or tolerance.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Widening conversion used when comparing against `f64` tolerances.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex entry type.
pub type Cx<T> = Complex<T>;

/// Shorthand constructor for a complex scalar.
pub fn cx<T: Real>(re: T, im: T) -> Cx<T> {
    Complex::new(re, im)
}

/// Complex scalar from `f64` parts.
pub fn cxf<T: Real>(re: f64, im: f64) -> Cx<T> {
    Complex::new(T::lit(re), T::lit(im))
}

/// Embeds a real scalar.
pub fn real<T: Real>(re: T) -> Cx<T> {
    Complex::new(re, T::zero())
}

/// The imaginary unit.
pub fn imag_unit<T: Real>() -> Cx<T> {
    Complex::new(T::zero(), T::one())
}

/// Converts a complex value of any precision to `f64` parts.
pub fn to_c64<T: Real>(z: Cx<T>) -> Complex<f64> {
    Complex::new(z.re.as_f64(), z.im.as_f64())
}

/// Converts an `f64` complex value into the working precision.
pub fn from_c64<T: Real>(z: Complex<f64>) -> Cx<T> {
    cxf(z.re, z.im)
}
