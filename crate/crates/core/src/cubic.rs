//! Positive real root of the depressed-quadratic cubic `t^3 - b t^2 - c = 0`.
//!
//! For `b > 0` and `c >= 0` the cubic has exactly one nonnegative root with
//! `t >= b` (strictly greater when `c > 0`): substituting `t = s + b/3` gives
//! the depressed form `s^3 + p s + q` whose discriminant
//! `(q/2)^2 + (p/3)^3 = b^3 c / 27 + c^2 / 4` is nonnegative on the whole
//! input range, so the real-radical Cardano expression applies. A Newton
//! polish drives the residual to machine level, with bisection on
//! `[b, b + c^(1/3) + 1]` as a fallback.

use crate::error::{Error, Result};
use crate::vecops::{abs, cbrt, fmax, lit, sqrt};
use crate::Real;

/// Relative residual target: `|t^3 - b t^2 - c| <= RESIDUAL_TOL * max(1, c)`.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Returns the unique positive root of `t^3 - b t^2 - c = 0`.
pub fn cubic_positive_root<T: Real>(b: T, c: T) -> Result<T> {
    if !b.is_finite() || !c.is_finite() {
        return Err(Error::Numeric("cubic: non-finite coefficient".into()));
    }
    if b <= T::zero() {
        return Err(Error::Config(
            "cubic: quadratic coefficient must be positive".into(),
        ));
    }
    if c < T::zero() {
        return Err(Error::Config(
            "cubic: constant term must be nonnegative".into(),
        ));
    }
    if c == T::zero() {
        // t^2 (t - b) = 0: the positive root is b itself.
        return Ok(b);
    }

    let three = lit::<T>(3.0);
    let residual = |t: T| t * t * t - b * t * t - c;

    // Cardano on the depressed cubic s^3 + p s + q, t = s + b/3.
    let p = -(b * b) / three;
    let q = -(lit::<T>(2.0) * b * b * b / lit::<T>(27.0) + c);
    let half_q = q / lit::<T>(2.0);
    let disc = half_q * half_q + (p / three) * (p / three) * (p / three);
    let sqrt_disc = sqrt(fmax(disc, T::zero()));
    let s = cbrt(-half_q + sqrt_disc) + cbrt(-half_q - sqrt_disc);
    let mut t = s + b / three;

    // The root lies at or above b, where the cubic is strictly increasing.
    t = fmax(t, b);
    for _ in 0..4 {
        let slope = three * t * t - lit::<T>(2.0) * b * t;
        if slope <= T::zero() {
            break;
        }
        let next = t - residual(t) / slope;
        if !next.is_finite() {
            break;
        }
        t = fmax(next, b);
    }

    let tol = lit::<T>(RESIDUAL_TOL) * fmax(T::one(), c);
    if abs(residual(t)) <= tol {
        return Ok(t);
    }

    // Fallback bracket: residual(b) = -c < 0 and the upper end is positive.
    let mut lo = b;
    let mut hi = b + cbrt(c) + T::one();
    for _ in 0..200 {
        let mid = (lo + hi) / lit::<T>(2.0);
        if residual(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if abs(residual(lo)) <= tol {
            return Ok(lo);
        }
        if abs(residual(hi)) <= tol {
            return Ok(hi);
        }
    }
    Err(Error::Numeric(format!(
        "cubic: root residual did not reach tolerance for b={b:?}, c={c:?}"
    )))
}
