//! Raster data model: per-pixel grids with validity masks.
//!
//! All grids are row-major. Invalid pixels are excluded from every downstream
//! computation and metric. Types are immutable after construction and safe to
//! share across threads.

use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::scalar::Scalar;

fn check_grid(len: usize, width: usize, height: usize, what: &str) -> Result<()> {
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| Error::contract(format!("{what}: width*height overflows")))?;
    if len != expected {
        return Err(Error::contract(format!(
            "{what}: grid length {len} disagrees with {width}x{height}"
        )));
    }
    Ok(())
}

/// Per-pixel metric depth in meters with a validity mask.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap<T> {
    width: usize,
    height: usize,
    values: Vec<T>,
    valid: Vec<bool>,
}

impl<T: Scalar> DepthMap<T> {
    /// Builds a depth map, checking that every valid pixel holds a finite,
    /// strictly positive depth.
    pub fn new(width: usize, height: usize, values: Vec<T>, valid: Vec<bool>) -> Result<Self> {
        check_grid(values.len(), width, height, "DepthMap values")?;
        check_grid(valid.len(), width, height, "DepthMap mask")?;
        for (i, (&d, &ok)) in values.iter().zip(&valid).enumerate() {
            if ok && !(d > T::zero() && d.is_finite()) {
                return Err(Error::contract(format!(
                    "DepthMap: valid pixel {i} has non-positive or non-finite depth"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            values,
            valid,
        })
    }

    /// Builds a fully valid depth map.
    pub fn from_values(width: usize, height: usize, values: Vec<T>) -> Result<Self> {
        let valid = vec![true; values.len()];
        Self::new(width, height, values, valid)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn index(&self, u: usize, v: usize) -> usize {
        v * self.width + u
    }

    #[inline]
    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        self.valid[self.index(u, v)]
    }

    #[inline]
    pub fn value(&self, u: usize, v: usize) -> T {
        self.values[self.index(u, v)]
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn all_valid(&self) -> bool {
        self.valid.iter().all(|&b| b)
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&b| b).count()
    }
}

/// Per-pixel camera-space 3D points obtained by back-projection.
#[derive(Clone, Debug, PartialEq)]
pub struct PointMap<T> {
    width: usize,
    height: usize,
    points: Vec<Vec3<T>>,
    valid: Vec<bool>,
}

impl<T: Scalar> PointMap<T> {
    /// Builds a point map, checking that every valid point has `z > 0`.
    pub fn new(
        width: usize,
        height: usize,
        points: Vec<Vec3<T>>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        check_grid(points.len(), width, height, "PointMap points")?;
        check_grid(valid.len(), width, height, "PointMap mask")?;
        for (i, (&p, &ok)) in points.iter().zip(&valid).enumerate() {
            if ok && !(p.z > T::zero() && p.is_finite()) {
                return Err(Error::contract(format!(
                    "PointMap: valid pixel {i} has z <= 0 or a non-finite coordinate"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            points,
            valid,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn index(&self, u: usize, v: usize) -> usize {
        v * self.width + u
    }

    #[inline]
    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        self.valid[self.index(u, v)]
    }

    #[inline]
    pub fn point(&self, u: usize, v: usize) -> Vec3<T> {
        self.points[self.index(u, v)]
    }

    #[inline]
    pub fn points(&self) -> &[Vec3<T>] {
        &self.points
    }

    #[inline]
    pub fn mask(&self) -> &[bool] {
        &self.valid
    }
}

/// Per-pixel unit normals with a validity mask.
///
/// Producers orient every valid normal toward the camera; construction checks
/// the unit-norm invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalMap<T> {
    width: usize,
    height: usize,
    normals: Vec<Vec3<T>>,
    valid: Vec<bool>,
}

impl<T: Scalar> NormalMap<T> {
    pub fn new(
        width: usize,
        height: usize,
        normals: Vec<Vec3<T>>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        check_grid(normals.len(), width, height, "NormalMap normals")?;
        check_grid(valid.len(), width, height, "NormalMap mask")?;
        let tol = T::cast(1e-6);
        #[allow(clippy::neg_cmp_op_on_partial_ord)] // negation rejects NaN norms
        for (i, (&n, &ok)) in normals.iter().zip(&valid).enumerate() {
            if ok && !((n.norm() - T::one()).abs() <= tol) {
                return Err(Error::contract(format!(
                    "NormalMap: valid pixel {i} is not unit length"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            normals,
            valid,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn index(&self, u: usize, v: usize) -> usize {
        v * self.width + u
    }

    #[inline]
    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        self.valid[self.index(u, v)]
    }

    #[inline]
    pub fn normal(&self, u: usize, v: usize) -> Vec3<T> {
        self.normals[self.index(u, v)]
    }

    #[inline]
    pub fn normals(&self) -> &[Vec3<T>] {
        &self.normals
    }

    #[inline]
    pub fn mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&b| b).count()
    }
}

/// Per-pixel feature vectors consumed by the similarity kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct GuidanceFeatureMap<T> {
    width: usize,
    height: usize,
    channels: usize,
    features: Vec<T>,
}

impl<T: Scalar> GuidanceFeatureMap<T> {
    pub fn new(width: usize, height: usize, channels: usize, features: Vec<T>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::contract("GuidanceFeatureMap: channels must be >= 1"));
        }
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| Error::contract("GuidanceFeatureMap: size overflows"))?;
        if features.len() != expected {
            return Err(Error::contract(format!(
                "GuidanceFeatureMap: feature length {} disagrees with {width}x{height}x{channels}",
                features.len()
            )));
        }
        if features.iter().any(|f| !f.is_finite()) {
            return Err(Error::contract(
                "GuidanceFeatureMap: all entries must be finite",
            ));
        }
        Ok(Self {
            width,
            height,
            channels,
            features,
        })
    }

    /// A single-channel map holding the same value everywhere. With such a map
    /// the similarity kernel is uniform, so geometric context adaption has no
    /// effect.
    pub fn constant(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            channels: 1,
            features: vec![value; width * height],
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn feature(&self, u: usize, v: usize) -> &[T] {
        let base = (v * self.width + u) * self.channels;
        &self.features[base..base + self.channels]
    }

    #[inline]
    pub fn features(&self) -> &[T] {
        &self.features
    }

    /// True when every pixel carries bit-identical features.
    pub fn is_constant(&self) -> bool {
        let Some(first) = self.features.get(..self.channels) else {
            return true;
        };
        self.features
            .chunks_exact(self.channels)
            .all(|f| f == first)
    }

    /// Euclidean distance between the feature vectors of two pixels.
    #[inline]
    pub fn feature_distance(&self, a: (usize, usize), b: (usize, usize)) -> T {
        let fa = self.feature(a.0, a.1);
        let fb = self.feature(b.0, b.1);
        let mut acc = T::zero();
        for (&x, &y) in fa.iter().zip(fb) {
            let d = x - y;
            acc += d * d;
        }
        acc.sqrt()
    }
}

/// Per-pixel integer segment identifiers for synthetic scenes.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentMap {
    width: usize,
    height: usize,
    ids: Vec<i32>,
}

impl SegmentMap {
    pub fn new(width: usize, height: usize, ids: Vec<i32>) -> Result<Self> {
        check_grid(ids.len(), width, height, "SegmentMap ids")?;
        Ok(Self { width, height, ids })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn id(&self, u: usize, v: usize) -> i32 {
        self.ids[v * self.width + u]
    }

    #[inline]
    pub fn ids(&self) -> &[i32] {
        &self.ids
    }

    pub fn max_id(&self) -> i32 {
        self.ids.iter().copied().max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_map_rejects_bad_grid_length() {
        assert!(DepthMap::<f64>::new(2, 2, vec![1.0; 3], vec![true; 4]).is_err());
        assert!(DepthMap::<f64>::new(2, 2, vec![1.0; 4], vec![true; 3]).is_err());
    }

    #[test]
    fn depth_map_rejects_invalid_valid_pixels() {
        assert!(DepthMap::new(2, 1, vec![1.0, 0.0], vec![true, true]).is_err());
        assert!(DepthMap::new(2, 1, vec![1.0, f64::NAN], vec![true, true]).is_err());
        // Same values are fine when masked out.
        assert!(DepthMap::new(2, 1, vec![1.0, 0.0], vec![true, false]).is_ok());
    }

    #[test]
    fn point_map_rejects_nonpositive_z_and_bad_lengths() {
        let behind = Vec3::new(0.0, 0.0, -1.0);
        assert!(PointMap::new(1, 1, vec![behind], vec![true]).is_err());
        assert!(PointMap::new(1, 1, vec![behind], vec![false]).is_ok());
        assert!(PointMap::<f64>::new(2, 2, vec![Vec3::zero(); 3], vec![false; 4]).is_err());
    }

    #[test]
    fn normal_map_requires_unit_norm() {
        let ok = Vec3::new(0.0, 0.0, -1.0);
        let bad = Vec3::new(0.0, 0.0, -1.5);
        assert!(NormalMap::new(1, 1, vec![ok], vec![true]).is_ok());
        assert!(NormalMap::new(1, 1, vec![bad], vec![true]).is_err());
        assert!(NormalMap::new(1, 1, vec![bad], vec![false]).is_ok());
    }

    #[test]
    fn guidance_map_rejects_non_finite() {
        assert!(GuidanceFeatureMap::new(1, 1, 2, vec![0.0, f64::INFINITY]).is_err());
        assert!(GuidanceFeatureMap::new(1, 1, 2, vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn guidance_constant_detection() {
        let c = GuidanceFeatureMap::constant(3, 2, 0.5f64);
        assert!(c.is_constant());
        let nc = GuidanceFeatureMap::new(2, 1, 1, vec![0.0, 1.0]).unwrap();
        assert!(!nc.is_constant());
    }
}
