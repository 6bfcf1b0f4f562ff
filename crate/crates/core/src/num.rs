//! Scalar abstraction and small numeric helpers.
//!
//! All of the simulator math is generic over [`Real`] so the same code runs
//! in `f32` or `f64`. The crate root exports `f64` aliases for the common
//! case.

use std::fmt;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar the simulator is generic over.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64` (panics only if the type cannot represent
    /// any finite value, which neither `f32` nor `f64` will).
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 convertible to scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// dBm to linear milliwatts.
pub fn dbm_to_mw<R: Real>(dbm: R) -> R {
    R::of(10.0).powf(dbm / R::of(10.0))
}

/// dB to linear power gain.
pub fn db_to_linear<R: Real>(db: R) -> R {
    R::of(10.0).powf(db / R::of(10.0))
}

/// Bessel function of the first kind, order zero.
///
/// Rational approximation (Abramowitz & Stegun 9.4.1/9.4.3), accurate to
/// about 1e-8 which is far below the tolerances used on fading
/// autocorrelation checks.
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 8.0 {
        let y = x * x;
        let p1 = 57568490574.0
            + y * (-13362590354.0
                + y * (651619640.7 + y * (-11214424.18 + y * (77392.33017 + y * (-184.9052456)))));
        let p2 = 57568490411.0
            + y * (1029532985.0 + y * (9494680.718 + y * (59272.64853 + y * (267.8532712 + y))));
        p1 / p2
    } else {
        let z = 8.0 / ax;
        let y = z * z;
        let xx = ax - 0.785398164;
        let p1 = 1.0
            + y * (-0.1098628627e-2
                + y * (0.2734510407e-4 + y * (-0.2073370639e-5 + y * 0.2093887211e-6)));
        let p2 = -0.1562499995e-1
            + y * (0.1430488765e-3
                + y * (-0.6911147651e-5 + y * (0.7621095161e-6 + y * (-0.934935152e-7))));
        (0.636619772 / ax).sqrt() * (xx.cos() * p1 - z * xx.sin() * p2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j0_reference_values() {
        assert!((bessel_j0(0.0) - 1.0).abs() < 1e-7);
        assert!((bessel_j0(1.0) - 0.7651976865579666).abs() < 1e-7);
        assert!((bessel_j0(2.404825557695773)).abs() < 1e-7); // first zero
        assert!((bessel_j0(10.0) + 0.2459357644513483).abs() < 1e-7);
    }

    #[test]
    fn dbm_conversion() {
        assert!((dbm_to_mw(46.0f64) - 39810.717055349734).abs() < 1e-6);
        assert!((dbm_to_mw(0.0f32) - 1.0).abs() < 1e-6);
    }
}
