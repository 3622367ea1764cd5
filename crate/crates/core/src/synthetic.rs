//! Analytic synthetic scenes with ground-truth depth, normals, and segment
//! identifiers, plus Gaussian depth-noise injection.

use crate::backproject::view_align;
use crate::camera::Intrinsics;
use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::raster::{DepthMap, GuidanceFeatureMap, NormalMap, SegmentMap};
use crate::rng::Stream;
use crate::scalar::Scalar;

/// Domain tag separating the depth-noise streams from the sampler streams.
const NOISE_TAG: u64 = 0x6e6f_6973_655f_7461; // "noise_ta"

/// A rendered analytic scene.
#[derive(Clone, Debug)]
pub struct Scene<T> {
    pub depth: DepthMap<T>,
    pub normals_gt: NormalMap<T>,
    pub segments: SegmentMap,
    pub intr: Intrinsics<T>,
}

struct SceneBuilder<T> {
    depth: Vec<T>,
    valid: Vec<bool>,
    normals: Vec<Vec3<T>>,
    segments: Vec<i32>,
}

impl<T: Scalar> SceneBuilder<T> {
    fn new(n: usize) -> Self {
        Self {
            depth: vec![T::one(); n],
            valid: vec![false; n],
            normals: vec![Vec3::zero(); n],
            segments: vec![0; n],
        }
    }

    fn set(&mut self, i: usize, depth: T, normal: Vec3<T>, segment: i32) {
        self.depth[i] = depth;
        self.valid[i] = true;
        self.normals[i] = normal;
        self.segments[i] = segment;
    }

    fn finish(self, intr: &Intrinsics<T>) -> Result<Scene<T>> {
        let (w, h) = (intr.width, intr.height);
        Ok(Scene {
            depth: DepthMap::new(w, h, self.depth, self.valid.clone())?,
            normals_gt: NormalMap::new(w, h, self.normals, self.valid)?,
            segments: SegmentMap::new(w, h, self.segments)?,
            intr: *intr,
        })
    }
}

/// Renders the plane `normal . P = offset`. Depth comes from ray-plane
/// intersection; pixels whose ray is parallel to the plane (or hits it behind
/// the camera) are invalid. One segment.
pub fn gen_plane<T: Scalar>(intr: &Intrinsics<T>, normal: Vec3<T>, offset: T) -> Result<Scene<T>> {
    let unit = normal
        .try_normalized()
        .ok_or_else(|| Error::domain("gen_plane: zero-norm plane normal"))?;
    let d = offset / normal.norm();
    let mut b = SceneBuilder::new(intr.width * intr.height);
    for v in 0..intr.height {
        for u in 0..intr.width {
            let ray = intr.pixel_ray(u, v);
            let denom = unit.dot(ray);
            if denom.abs() <= T::cast(1e-15) {
                continue;
            }
            let t = d / denom;
            if !(t > T::zero() && t.is_finite()) {
                continue;
            }
            let p = ray * t;
            let n = view_align(unit, p)?;
            b.set(v * intr.width + u, t, n, 0);
        }
    }
    b.finish(intr)
}

/// Renders a sphere of the given center and radius backed by the
/// fronto-parallel plane through the sphere center. The sphere is segment 0,
/// the backing plane segment 1. With `with_background` false, plane pixels are
/// invalid instead (the standalone-surface setup), but keep segment 1.
pub fn gen_hemisphere<T: Scalar>(
    intr: &Intrinsics<T>,
    center: Vec3<T>,
    radius: T,
    with_background: bool,
) -> Result<Scene<T>> {
    if !(center.z > radius && radius > T::zero()) {
        return Err(Error::domain(
            "gen_hemisphere: sphere must lie fully in front of the camera",
        ));
    }
    let mut b = SceneBuilder::new(intr.width * intr.height);
    for v in 0..intr.height {
        for u in 0..intr.width {
            let i = v * intr.width + u;
            let ray = intr.pixel_ray(u, v);
            // |t*ray - center|^2 = radius^2, nearest positive root.
            let a = ray.dot(ray);
            let half_b = -ray.dot(center);
            let c = center.dot(center) - radius * radius;
            let disc = half_b * half_b - a * c;
            let mut hit = false;
            if disc >= T::zero() {
                let t = (-half_b - disc.sqrt()) / a;
                if t > T::zero() {
                    let p = ray * t;
                    let outward = (p - center) / radius;
                    b.set(i, t, view_align(outward, p)?, 0);
                    hit = true;
                }
            }
            if !hit {
                b.segments[i] = 1;
                if with_background {
                    let t = center.z;
                    let p = ray * t;
                    b.set(
                        i,
                        t,
                        view_align(Vec3::new(T::zero(), T::zero(), T::one()), p)?,
                        1,
                    );
                }
            }
        }
    }
    b.finish(intr)
}

/// Two fronto-parallel planes split at a pixel column: `u < edge_column` uses
/// `near`, the rest `far`. Segments 0 (near side) and 1 (far side); the normal
/// is `(0, 0, -1)` on both sides.
pub fn gen_step<T: Scalar>(
    intr: &Intrinsics<T>,
    near: T,
    far: T,
    edge_column: usize,
) -> Result<Scene<T>> {
    if !(near > T::zero() && far > T::zero()) {
        return Err(Error::domain("gen_step: depths must be positive"));
    }
    let n = Vec3::new(T::zero(), T::zero(), -T::one());
    let mut b = SceneBuilder::new(intr.width * intr.height);
    for v in 0..intr.height {
        for u in 0..intr.width {
            let (depth, seg) = if u < edge_column { (near, 0) } else { (far, 1) };
            b.set(v * intr.width + u, depth, n, seg);
        }
    }
    b.finish(intr)
}

/// Two planes meeting along an image-vertical crease; per pixel the nearer
/// plane wins. Returns the scene and the crease column: the first column of
/// the middle row whose segment differs from column zero's.
pub fn gen_wedge<T: Scalar>(
    intr: &Intrinsics<T>,
    plane_a: (Vec3<T>, T),
    plane_b: (Vec3<T>, T),
) -> Result<(Scene<T>, usize)> {
    let unit_a = plane_a
        .0
        .try_normalized()
        .ok_or_else(|| Error::domain("gen_wedge: plane A normal"))?;
    let unit_b = plane_b
        .0
        .try_normalized()
        .ok_or_else(|| Error::domain("gen_wedge: plane B normal"))?;
    let da = plane_a.1 / plane_a.0.norm();
    let db = plane_b.1 / plane_b.0.norm();

    let intersect = |unit: Vec3<T>, d: T, ray: Vec3<T>| -> Option<T> {
        let denom = unit.dot(ray);
        if denom.abs() <= T::cast(1e-15) {
            return None;
        }
        let t = d / denom;
        (t > T::zero() && t.is_finite()).then_some(t)
    };

    let mut b = SceneBuilder::new(intr.width * intr.height);
    for v in 0..intr.height {
        for u in 0..intr.width {
            let ray = intr.pixel_ray(u, v);
            let ta = intersect(unit_a, da, ray);
            let tb = intersect(unit_b, db, ray);
            let (t, unit, seg) = match (ta, tb) {
                (Some(ta), Some(tb)) if ta <= tb => (ta, unit_a, 0),
                (Some(_), Some(tb)) => (tb, unit_b, 1),
                (Some(ta), None) => (ta, unit_a, 0),
                (None, Some(tb)) => (tb, unit_b, 1),
                (None, None) => continue,
            };
            let p = ray * t;
            b.set(v * intr.width + u, t, view_align(unit, p)?, seg);
        }
    }
    let scene = b.finish(intr)?;
    let mid = intr.height / 2;
    let first_seg = scene.segments.id(0, mid);
    let crease = (1..intr.width)
        .find(|&u| scene.segments.id(u, mid) != first_seg)
        .unwrap_or(intr.width);
    Ok((scene, crease))
}

/// Adds i.i.d. Gaussian depth noise per valid pixel, deterministic from
/// `seed`. Ground-truth normals and segments are unchanged (ground truth
/// remains the ideal surface). Pixels whose noisy depth would be non-positive
/// become invalid.
pub fn add_noise<T: Scalar>(scene: &Scene<T>, sigma: f64, seed: u64) -> Result<Scene<T>> {
    let (w, h) = (scene.depth.width(), scene.depth.height());
    let mut depth = scene.depth.values().to_vec();
    let mut valid = scene.depth.mask().to_vec();
    if sigma != 0.0 {
        for v in 0..h {
            for u in 0..w {
                let i = v * w + u;
                if !valid[i] {
                    continue;
                }
                let mut rng = Stream::for_pixel_tagged(seed, NOISE_TAG, u, v);
                let noisy = depth[i] + T::cast(sigma * rng.standard_normal());
                if noisy > T::zero() && noisy.is_finite() {
                    depth[i] = noisy;
                } else {
                    valid[i] = false;
                }
            }
        }
    }
    Ok(Scene {
        depth: DepthMap::new(w, h, depth, valid)?,
        normals_gt: scene.normals_gt.clone(),
        segments: scene.segments.clone(),
        intr: scene.intr,
    })
}

/// Per-pixel one-hot segment features scaled by `separation`, emulating a
/// perfectly boundary-aware guidance map: cross-segment kernel weights are
/// `exp(-0.5 * separation * sqrt(2))`, effectively zero at the default
/// separation of 10.
pub fn oracle_guidance<T: Scalar>(
    scene: &Scene<T>,
    separation: f64,
) -> Result<GuidanceFeatureMap<T>> {
    guidance_from_segments(&scene.segments, separation)
}

/// [`oracle_guidance`] for a bare segment raster.
pub fn guidance_from_segments<T: Scalar>(
    segments: &SegmentMap,
    separation: f64,
) -> Result<GuidanceFeatureMap<T>> {
    let (w, h) = (segments.width(), segments.height());
    let max_id = segments.max_id();
    if segments.ids().iter().any(|&id| id < 0) {
        return Err(Error::contract(
            "guidance_from_segments: negative segment id",
        ));
    }
    let channels = max_id.max(0) as usize + 1;
    let mut features = vec![T::zero(); w * h * channels];
    let sep = T::cast(separation);
    for (i, &id) in segments.ids().iter().enumerate() {
        features[i * channels + id as usize] = sep;
    }
    GuidanceFeatureMap::new(w, h, channels, features)
}
