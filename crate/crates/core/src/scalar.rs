use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point type the model and estimators are written against.
///
/// Implemented for `f32` and `f64`. Special functions (the Gaussian cdf and
/// its inverse) are evaluated in `f64` and rounded back, which is exact for
/// `f32` and within an ulp or two for `f64`.
pub trait Scalar:
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
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal. Panics only if the target type cannot
    /// represent finite `f64` values, which never happens for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Standard normal cdf.
pub fn normal_cdf<T: Scalar>(x: T) -> T {
    let v = 0.5 * libm::erfc(-x.as_f64() / std::f64::consts::SQRT_2);
    T::lit(v)
}

/// Standard normal survival function `1 - Φ(x)`, accurate in the upper tail.
pub fn normal_sf<T: Scalar>(x: T) -> T {
    let v = 0.5 * libm::erfc(x.as_f64() / std::f64::consts::SQRT_2);
    T::lit(v)
}

pub fn normal_pdf<T: Scalar>(x: T) -> T {
    let two = T::lit(2.0);
    (-(x * x) / two).exp() / (two * T::PI()).sqrt()
}

/// Standard normal quantile for `prob` in (0, 1): Acklam's rational
/// approximation followed by Halley refinement against the exact cdf.
pub fn normal_quantile(prob: f64) -> f64 {
    if prob.is_nan() {
        return f64::NAN;
    }
    if prob <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if prob >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969683028665376e1, 2.209460984245205e2, -2.759285104469687e2,
        1.383_577_518_672_69e2, -3.066479806614716e1, 2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1, 1.615858368580409e2, -1.556989798598866e2,
        6.680131188771972e1, -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3, -3.223964580411365e-1, -2.400758277161838,
        -2.549732539343734, 4.374664141464968, 2.938163982698783,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996, 3.754408661907416,
    ];
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let mut x = if prob < 0.02425 {
        tail((-2.0 * prob.ln()).sqrt())
    } else if prob > 1.0 - 0.02425 {
        -tail((-2.0 * (1.0 - prob).ln()).sqrt())
    } else {
        let q = prob - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    for _ in 0..2 {
        // Work with the smaller tail probability to keep relative accuracy.
        let e = if x < 0.0 {
            0.5 * libm::erfc(-x / std::f64::consts::SQRT_2) - prob
        } else {
            (1.0 - prob) - 0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
        };
        let u = e * (2.0 * std::f64::consts::PI).sqrt() * (x * x / 2.0).exp();
        x -= u / (1.0 + x * u / 2.0);
    }
    x
}
