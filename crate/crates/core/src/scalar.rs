//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating point scalar the field algebra and solvers are generic over.
///
/// Implemented for `f32` and `f64`. Tolerances quoted throughout the crate
/// (1e-10 and below) are only meaningful in `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// `self^e` for `self >= 0`, using `powi` and `sqrt` when `e` is a
    /// small integer or half integer.
    #[inline]
    fn pow_nonneg(self, e: Self) -> Self {
        let twice = e + e;
        if twice == twice.round() && twice.abs() <= Self::lit(64.0) {
            let k = twice.to_i32().unwrap_or(0);
            if k % 2 == 0 {
                self.powi(k / 2)
            } else {
                self.sqrt().powi(k)
            }
        } else {
            self.powf(e)
        }
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    comp: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self { sum: T::zero(), comp: T::zero() }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<T: Real>(it: impl IntoIterator<Item = T>) -> T {
    let mut acc = CompensatedSum::new();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancelled_terms() {
        let xs = [1.0e16_f64, 1.0, -1.0e16, 1.0];
        assert_eq!(compensated_sum(xs), 2.0);
        assert_ne!(xs.iter().sum::<f64>(), 2.0);
    }

    #[test]
    fn pow_nonneg_matches_powf() {
        for &x in &[0.0, 0.3, 1.0, 2.5, 17.0f64] {
            for &e in &[-1.5, -1.0, 0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 0.7, 2.3] {
                let (a, b) = (x.pow_nonneg(e), x.powf(e));
                assert!(a == b || (a - b).abs() <= 1e-14 * b.abs(), "{x}^{e}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn literals_round_trip() {
        assert_eq!(f64::lit(0.25), 0.25);
        assert_eq!(f32::lit(0.5), 0.5f32);
    }
}
