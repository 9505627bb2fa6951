//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Floating point type the models and estimators are generic over (f32 or f64).
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal; infallible for the implemented types.
    fn lit(x: f64) -> Self;

    fn from_usize_lossy(n: usize) -> Self {
        Self::lit(n as f64)
    }

    fn as_f64(self) -> f64;

    /// One draw from the standard normal distribution.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Scalar for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

/// Unit conversions. All formulas work in one unit system; conversions
/// happen at module boundaries only.
pub mod units {
    use super::Scalar;

    #[inline]
    pub fn uk_to_k<T: Scalar>(x: T) -> T {
        x * T::lit(1e-6)
    }

    #[inline]
    pub fn k_to_uk<T: Scalar>(x: T) -> T {
        x * T::lit(1e6)
    }

    #[inline]
    pub fn mk_to_k<T: Scalar>(x: T) -> T {
        x * T::lit(1e-3)
    }

    pub const SECONDS_PER_HOUR: f64 = 3600.0;
}

pub(crate) fn mean<T: Scalar>(xs: &[T]) -> T {
    xs.iter().copied().sum::<T>() / T::from_usize_lossy(xs.len())
}

/// Sample standard deviation (n − 1 denominator). Zero for fewer than two values.
pub(crate) fn sample_std<T: Scalar>(xs: &[T]) -> T {
    if xs.len() < 2 {
        return T::zero();
    }
    let m = mean(xs);
    let ss: T = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    (ss / T::from_usize_lossy(xs.len() - 1)).sqrt()
}

/// Piecewise-linear interpolation on strictly increasing abscissae.
/// Returns `None` outside `[xs[0], xs[last]]`.
pub(crate) fn interp_linear<T: Scalar>(xs: &[T], ys: &[T], x: T) -> Option<T> {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n == 0 || x < xs[0] || x > xs[n - 1] {
        return None;
    }
    if n == 1 {
        return Some(ys[0]);
    }
    // first index with xs[j] >= x
    let j = xs.partition_point(|&v| v < x);
    if j == 0 {
        return Some(ys[0]);
    }
    let (x0, x1) = (xs[j - 1], xs[j]);
    let (y0, y1) = (ys[j - 1], ys[j]);
    if x == x1 {
        return Some(y1);
    }
    let f = (x - x0) / (x1 - x0);
    Some(y0 + f * (y1 - y0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interp_hits_nodes_and_midpoints() {
        let xs = [0.0, 1.0, 3.0];
        let ys = [0.0, 2.0, 4.0];
        assert_eq!(interp_linear(&xs, &ys, 0.0), Some(0.0));
        assert_eq!(interp_linear(&xs, &ys, 1.0), Some(2.0));
        assert_eq!(interp_linear(&xs, &ys, 2.0), Some(3.0));
        assert_eq!(interp_linear(&xs, &ys, 3.0), Some(4.0));
        assert_eq!(interp_linear(&xs, &ys, 3.5), None);
        assert_eq!(interp_linear(&xs, &ys, -0.1), None);
    }

    #[test]
    fn std_of_constant_is_zero() {
        assert_eq!(sample_std(&[2.0f64; 5]), 0.0);
        assert_eq!(sample_std(&[1.0f32]), 0.0);
        let s = sample_std(&[1.0f64, 2.0, 3.0]);
        assert!((s - 1.0).abs() < 1e-15);
    }
}
