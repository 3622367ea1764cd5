//! Local patch extraction and deterministic random triplet sampling.

use crate::error::{Error, Result};
use crate::math::cross2;
use crate::raster::PointMap;
use crate::rng::Stream;
use crate::scalar::Scalar;

/// Sampler parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerConfig {
    /// Side length of the square local patch; odd, >= 3.
    pub patch_size: usize,
    /// Number of triplets drawn per pixel.
    pub triplet_count: usize,
    /// Seed of the per-pixel deterministic streams.
    pub seed: u64,
    /// Minimum projected triangle area in px^2; smaller draws are re-drawn.
    pub collinearity_eps: f64,
    /// Redraw budget per triplet before the slot is dropped.
    pub max_resample: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            patch_size: 5,
            triplet_count: 40,
            seed: 0,
            collinearity_eps: 0.25,
            max_resample: 16,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch_size < 3 || self.patch_size.is_multiple_of(2) {
            return Err(Error::contract("patch_size must be odd and >= 3"));
        }
        if self.triplet_count == 0 {
            return Err(Error::contract("triplet_count must be >= 1"));
        }
        Ok(())
    }
}

/// One patch entry: a pixel offset from the center and whether the pixel is
/// usable (inside the image and carrying a valid point).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PatchEntry {
    pub du: i32,
    pub dv: i32,
    pub valid: bool,
}

/// The r*r neighborhood of a center pixel, row-major over offsets.
#[derive(Clone, Debug)]
pub struct Patch {
    pub center: (usize, usize),
    pub entries: Vec<PatchEntry>,
}

impl Patch {
    /// Absolute pixel coordinates of entry `idx`. Only meaningful for valid
    /// entries (invalid ones may fall outside the image).
    #[inline]
    pub fn absolute(&self, idx: usize) -> (usize, usize) {
        let e = self.entries[idx];
        (
            (self.center.0 as i64 + e.du as i64) as usize,
            (self.center.1 as i64 + e.dv as i64) as usize,
        )
    }

    pub fn valid_count(&self) -> usize {
        self.entries.iter().filter(|e| e.valid).count()
    }
}

/// Extracts the `patch_size x patch_size` neighborhood of `center`.
///
/// All r^2 offsets are returned; entries outside the image or with invalid
/// points are flagged invalid. The center offset (0, 0) is always present.
pub fn extract_patch<T: Scalar>(
    pm: &PointMap<T>,
    center: (usize, usize),
    patch_size: usize,
) -> Patch {
    let mut entries = Vec::with_capacity(patch_size * patch_size);
    extract_patch_into(pm, center, patch_size, &mut entries);
    Patch { center, entries }
}

pub(crate) fn extract_patch_into<T: Scalar>(
    pm: &PointMap<T>,
    center: (usize, usize),
    patch_size: usize,
    entries: &mut Vec<PatchEntry>,
) {
    debug_assert!(!patch_size.is_multiple_of(2) && patch_size >= 3);
    entries.clear();
    let half = (patch_size / 2) as i32;
    let (cu, cv) = (center.0 as i64, center.1 as i64);
    for dv in -half..=half {
        for du in -half..=half {
            let u = cu + du as i64;
            let v = cv + dv as i64;
            let in_bounds =
                u >= 0 && v >= 0 && (u as usize) < pm.width() && (v as usize) < pm.height();
            let valid = in_bounds && pm.is_valid(u as usize, v as usize);
            entries.push(PatchEntry { du, dv, valid });
        }
    }
}

/// The sampled triplets of one pixel. `indices` address entries of the patch
/// the set was drawn from; `areas` holds each triplet's projected 2D area.
/// The sampler leaves `confidences` and `normals` empty; the adaptive-normal
/// module fills them (see `asn::annotate_triplet_set`).
#[derive(Clone, Debug, PartialEq)]
pub struct TripletSet<T> {
    pub center: (usize, usize),
    pub indices: Vec<[usize; 3]>,
    pub areas: Vec<T>,
    /// Per-triplet confidence `g_k` in [0, 1].
    pub confidences: Vec<T>,
    /// Per-triplet unit candidate normal, camera-facing.
    pub normals: Vec<crate::math::Vec3<T>>,
}

impl<T> TripletSet<T> {
    pub fn empty(center: (usize, usize)) -> Self {
        Self {
            center,
            indices: Vec::new(),
            areas: Vec::new(),
            confidences: Vec::new(),
            normals: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }
}

/// Draws the configured number of point triplets from the valid entries of a
/// patch, deterministically from `(cfg.seed, pixel)`.
///
/// Each triplet holds three distinct valid pixels whose projected triangle
/// area is at least `collinearity_eps`; a draw failing the area test is
/// re-drawn up to `max_resample` times and then dropped. The center pixel is
/// part of its own patch and may be drawn. A patch with fewer than three
/// valid entries yields an empty set (the pixel becomes invalid downstream).
pub fn sample_triplets<T: Scalar>(
    patch: &Patch,
    cfg: &SamplerConfig,
    pixel: (usize, usize),
) -> TripletSet<T> {
    let mut set = TripletSet::empty(pixel);
    sample_triplets_into(patch, cfg, pixel, &mut Vec::new(), &mut set);
    set
}

pub(crate) fn sample_triplets_into<T: Scalar>(
    patch: &Patch,
    cfg: &SamplerConfig,
    pixel: (usize, usize),
    valid_scratch: &mut Vec<usize>,
    out: &mut TripletSet<T>,
) {
    out.center = pixel;
    out.indices.clear();
    out.areas.clear();
    out.confidences.clear();
    out.normals.clear();

    valid_scratch.clear();
    valid_scratch.extend(
        patch
            .entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.valid)
            .map(|(i, _)| i),
    );
    let n = valid_scratch.len();
    if n < 3 {
        return;
    }

    let eps = T::cast(cfg.collinearity_eps);
    let half = T::cast(0.5);
    let mut rng = Stream::for_pixel(cfg.seed, pixel.0, pixel.1);
    out.indices.reserve(cfg.triplet_count);
    out.areas.reserve(cfg.triplet_count);

    for _slot in 0..cfg.triplet_count {
        let mut accepted = None;
        for _attempt in 0..=cfg.max_resample {
            let a = valid_scratch[rng.below(n)];
            let b = loop {
                let b = valid_scratch[rng.below(n)];
                if b != a {
                    break b;
                }
            };
            let c = loop {
                let c = valid_scratch[rng.below(n)];
                if c != a && c != b {
                    break c;
                }
            };
            let pa = patch.entries[a];
            let pb = patch.entries[b];
            let pc = patch.entries[c];
            let area = half
                * cross2(
                    (T::cast(pa.du as f64), T::cast(pa.dv as f64)),
                    (T::cast(pb.du as f64), T::cast(pb.dv as f64)),
                    (T::cast(pc.du as f64), T::cast(pc.dv as f64)),
                )
                .abs();
            if area >= eps {
                accepted = Some(([a, b, c], area));
                break;
            }
        }
        if let Some((tri, area)) = accepted {
            out.indices.push(tri);
            out.areas.push(area);
        }
    }
}
