//! Depth-to-point-cloud conversion and camera-facing normal orientation.

use rayon::prelude::*;

use crate::camera::Intrinsics;
use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::raster::{DepthMap, PointMap};
use crate::scalar::Scalar;

/// Converts a depth map into camera-space points:
/// `P = D(u,v) * ((u - cx)/fx, (v - cy)/fy, 1)`.
///
/// The validity mask is copied through; the z component of every valid point
/// equals the input depth exactly.
pub fn backproject<T: Scalar>(depth: &DepthMap<T>, intr: &Intrinsics<T>) -> Result<PointMap<T>> {
    if depth.width() != intr.width || depth.height() != intr.height {
        return Err(Error::contract(format!(
            "backproject: depth is {}x{} but intrinsics describe {}x{}",
            depth.width(),
            depth.height(),
            intr.width,
            intr.height
        )));
    }
    let width = depth.width();
    let points: Vec<Vec3<T>> = (0..width * depth.height())
        .into_par_iter()
        .map(|i| {
            let (u, v) = (i % width, i / width);
            let ray = intr.pixel_ray(u, v);
            if depth.is_valid(u, v) {
                ray * depth.value(u, v)
            } else {
                Vec3::zero()
            }
        })
        .collect();
    PointMap::new(width, depth.height(), points, depth.mask().to_vec())
}

/// Orients a normal toward the camera: returns `n/|n|` when `dot(n, p) < 0`,
/// the flipped unit normal when `dot(n, p) > 0`, and the unflipped unit normal
/// in the tie case `dot(n, p) = 0`.
pub fn view_align<T: Scalar>(n: Vec3<T>, p: Vec3<T>) -> Result<Vec3<T>> {
    let unit = n
        .try_normalized()
        .ok_or_else(|| Error::domain("view_align: zero-norm normal"))?;
    if unit.dot(p) > T::zero() {
        Ok(-unit)
    } else {
        Ok(unit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn intr() -> Intrinsics<f64> {
        Intrinsics::new(100.0, 100.0, 2.0, 2.0, 5, 5).unwrap()
    }

    #[test]
    fn backproject_principal_point() {
        let k = intr();
        let d = DepthMap::from_values(5, 5, vec![1.0; 25]).unwrap();
        let pm = backproject(&d, &k).unwrap();
        assert_eq!(pm.point(2, 2), Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn backproject_hand_evaluated() {
        // Pixel one focal length right of the principal point at depth 2.
        let k = Intrinsics::new(2.0, 2.0, 0.0, 0.0, 5, 5).unwrap();
        let d = DepthMap::from_values(5, 5, vec![2.0; 25]).unwrap();
        let pm = backproject(&d, &k).unwrap();
        assert_eq!(pm.point(2, 0), Vec3::new(2.0, 0.0, 2.0));
    }

    #[test]
    fn backproject_propagates_mask() {
        let k = intr();
        let mut valid = vec![true; 25];
        valid[7] = false;
        let d = DepthMap::new(5, 5, vec![1.0; 25], valid).unwrap();
        let pm = backproject(&d, &k).unwrap();
        assert!(!pm.is_valid(2, 1));
        assert!(pm.is_valid(0, 0));
    }

    #[test]
    fn backproject_depth_readback_is_exact() {
        let k = intr();
        let values: Vec<f64> = (0..25).map(|i| 0.3 + 0.17 * i as f64).collect();
        let d = DepthMap::from_values(5, 5, values.clone()).unwrap();
        let pm = backproject(&d, &k).unwrap();
        for v in 0..5 {
            for u in 0..5 {
                assert_eq!(pm.point(u, v).z, d.value(u, v));
            }
        }
    }

    #[test]
    fn backproject_rejects_dimension_mismatch() {
        let k = intr();
        let d = DepthMap::from_values(4, 4, vec![1.0; 16]).unwrap();
        assert!(matches!(backproject(&d, &k), Err(Error::Contract(_))));
    }

    #[test]
    fn view_align_flips_toward_camera() {
        let p = Vec3::new(0.0, 0.0, 1.0);
        assert_eq!(
            view_align(Vec3::new(0.0, 0.0, 1.0), p).unwrap(),
            Vec3::new(0.0, 0.0, -1.0)
        );
        assert_eq!(
            view_align(Vec3::new(0.0, 0.0, -1.0), p).unwrap(),
            Vec3::new(0.0, 0.0, -1.0)
        );
    }

    #[test]
    fn view_align_normalizes_then_tests_sign() {
        let out = view_align(Vec3::new(0.0, 0.0, 2.0), Vec3::new(1.0, 1.0, 1.0)).unwrap();
        assert_eq!(out, Vec3::new(0.0, 0.0, -1.0));
    }

    #[test]
    fn view_align_keeps_orthogonal_normal() {
        let out = view_align(Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(out, Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn view_align_rejects_zero_norm() {
        assert!(view_align(Vec3::<f64>::zero(), Vec3::new(0.0, 0.0, 1.0)).is_err());
    }
}
