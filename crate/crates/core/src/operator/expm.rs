//! Matrix exponential by scaling and squaring with the degree-13 Padé
//! approximant (Higham 2005).

use super::{Lu, OperatorMatrix};
use crate::error::{Error, Result};
use crate::scalar::{real, Real};

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371_920_351_148_152;

// Beyond this many squarings the result over- or underflows in f64 anyway.
const MAX_SQUARINGS: i32 = 1000;

/// `exp(M)`.
///
/// Non-finite input and results that overflow are reported as errors
/// rather than returned as infinities.
pub fn mat_exp<T: Real>(m: &OperatorMatrix<T>) -> Result<OperatorMatrix<T>> {
    if !m.is_finite() {
        return Err(Error::NonFinite { context: "mat_exp input" });
    }
    let n = m.dim();
    let norm = m.one_norm().as_f64();
    if norm == 0.0 {
        return Ok(OperatorMatrix::identity(n));
    }
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    if s > MAX_SQUARINGS {
        return Err(Error::Overflow { norm });
    }
    let a = m.scale_real(T::lit(2f64.powi(-s)));

    let b = |k: usize| real(T::lit(PADE13[k]));
    let id = OperatorMatrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let mut inner_u = a6.scale(b(13));
    inner_u += &a4.scale(b(11));
    inner_u += &a2.scale(b(9));
    let mut u = &a6 * &inner_u;
    u += &a6.scale(b(7));
    u += &a4.scale(b(5));
    u += &a2.scale(b(3));
    u += &id.scale(b(1));
    let u = &a * &u;

    let mut inner_v = a6.scale(b(12));
    inner_v += &a4.scale(b(10));
    inner_v += &a2.scale(b(8));
    let mut v = &a6 * &inner_v;
    v += &a6.scale(b(6));
    v += &a4.scale(b(4));
    v += &a2.scale(b(2));
    v += &id.scale(b(0));

    let denom = &v - &u;
    let numer = &v + &u;
    let mut r = Lu::factor(&denom)?.solve_matrix(&numer);
    for _ in 0..s {
        r = &r * &r;
        if !r.is_finite() {
            return Err(Error::Overflow { norm });
        }
    }
    if !r.is_finite() {
        return Err(Error::Overflow { norm });
    }
    Ok(r)
}
