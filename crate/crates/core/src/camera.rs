//! Pinhole camera intrinsics and projection.

use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::scalar::Scalar;

/// Calibrated pinhole intrinsics. Pixel `(u, v)` of a `width x height` image
/// corresponds to the continuous image point `(u, v)` exactly (integer pixel
/// centers).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Intrinsics<T> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub width: usize,
    pub height: usize,
}

impl<T: Scalar> Intrinsics<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T, width: usize, height: usize) -> Result<Self> {
        if !(fx > T::zero() && fy > T::zero()) {
            return Err(Error::contract("focal lengths must be positive"));
        }
        let w = T::from_count(width);
        let h = T::from_count(height);
        if !(cx >= T::zero() && cx < w && cy >= T::zero() && cy < h) {
            return Err(Error::contract("principal point must lie inside the image"));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        })
    }

    /// The viewing ray of pixel `(u, v)` at unit depth:
    /// `((u - cx)/fx, (v - cy)/fy, 1)`.
    #[inline]
    pub fn pixel_ray(&self, u: usize, v: usize) -> Vec3<T> {
        Vec3::new(
            (T::from_count(u) - self.cx) / self.fx,
            (T::from_count(v) - self.cy) / self.fy,
            T::one(),
        )
    }
}

/// Projects a camera-space point to subpixel image coordinates.
///
/// Fails with a domain error when `point.z <= 0`.
pub fn project<T: Scalar>(point: Vec3<T>, intr: &Intrinsics<T>) -> Result<(T, T)> {
    // Negated comparison so NaN depths are rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(point.z > T::zero()) {
        return Err(Error::domain("cannot project a point with non-positive z"));
    }
    Ok((
        intr.fx * point.x / point.z + intr.cx,
        intr.fy * point.y / point.z + intr.cy,
    ))
}
