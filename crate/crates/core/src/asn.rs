//! Adaptive surface normals: confidence-weighted combination of candidate
//! normals from randomly sampled local triplets.
//!
//! Per pixel, candidate normals come from cross products over sampled point
//! triplets. Each candidate is weighted by its projected 2D triangle area
//! (area adaption) and by the product of similarity-kernel scores of its three
//! members against the center pixel (geometric context adaption). The output
//! normal is the normalized, camera-facing weighted mean.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::math::{cross2, Vec3};
use crate::raster::{GuidanceFeatureMap, NormalMap, PointMap};
use crate::sampling::{extract_patch_into, sample_triplets_into, Patch, SamplerConfig, TripletSet};
use crate::scalar::Scalar;

/// Candidates whose raw cross product is shorter than this are dropped as
/// 3D-degenerate.
const DEGENERATE_CROSS: f64 = 1e-12;
/// Cross norms below this margin are close enough to the drop threshold that
/// the pixel is flagged non-differentiable.
const CROSS_FLAG_MARGIN: f64 = 1e-9;
/// |dot(normal, point)| below this flags a pixel as sitting near a flip
/// boundary of the view alignment.
const FLIP_FLAG_MARGIN: f64 = 1e-4;
/// Weighted means shorter than this flag the pixel; shorter than
/// `DEGENERATE_CROSS` invalidates it.
const MEAN_FLAG_MARGIN: f64 = 1e-6;

/// Configuration of the adaptive surface normal operator.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct AsnConfig {
    pub sampler: SamplerConfig,
    /// Weight candidates by projected triangle area.
    pub use_area: bool,
    /// Weight candidates by guidance-feature similarity.
    pub use_context: bool,
}

impl AsnConfig {
    /// Both adaptions enabled (the full operator).
    pub fn full(sampler: SamplerConfig) -> Self {
        Self {
            sampler,
            use_area: true,
            use_context: true,
        }
    }
}

/// The unit, camera-facing normal of the local plane through `pa`, `pb`, `pc`:
/// `normalize((pb - pa) x (pc - pa))`, flipped against `center`.
///
/// Returns `None` when the three points are 3D-degenerate (cross norm below
/// `1e-12`); such candidates carry zero weight downstream.
pub fn candidate_normal<T: Scalar>(
    pa: Vec3<T>,
    pb: Vec3<T>,
    pc: Vec3<T>,
    center: Vec3<T>,
) -> Option<Vec3<T>> {
    let c = (pb - pa).cross(pc - pa);
    let n = c.norm();
    if n <= T::cast(DEGENERATE_CROSS) {
        return None;
    }
    let unit = c / n;
    if unit.dot(center) > T::zero() {
        Some(-unit)
    } else {
        Some(unit)
    }
}

/// Projected area of the 2D triangle `(a, b, c)` in px^2.
pub fn projected_area<T: Scalar>(a: (T, T), b: (T, T), c: (T, T)) -> T {
    T::cast(0.5) * cross2(a, b, c).abs()
}

/// Normalized similarity-kernel weights of every patch entry against the
/// center pixel: `L(i,j) = exp(-0.5 * ||f(i) - f(j)||_2)`, normalized to sum
/// to one over the valid entries. Invalid entries get weight zero.
pub fn similarity_weights<T: Scalar>(
    features: &GuidanceFeatureMap<T>,
    center: (usize, usize),
    patch: &Patch,
) -> Vec<T> {
    let mut weights = vec![T::zero(); patch.entries.len()];
    similarity_weights_into(features, center, patch, &mut weights);
    weights
}

fn similarity_weights_into<T: Scalar>(
    features: &GuidanceFeatureMap<T>,
    center: (usize, usize),
    patch: &Patch,
    weights: &mut Vec<T>,
) {
    weights.clear();
    weights.resize(patch.entries.len(), T::zero());
    let half = T::cast(0.5);
    let mut total = T::zero();
    for (i, e) in patch.entries.iter().enumerate() {
        if !e.valid {
            continue;
        }
        let d = features.feature_distance(center, patch.absolute(i));
        let l = (-half * d).exp();
        weights[i] = l;
        total += l;
    }
    if total > T::zero() {
        for w in weights.iter_mut() {
            *w = *w / total;
        }
    }
}

/// Confidence of one triplet: the product of its members' normalized kernel
/// weights.
pub fn triplet_confidence<T: Scalar>(weights: &[T], triplet: [usize; 3]) -> T {
    weights[triplet[0]] * weights[triplet[1]] * weights[triplet[2]]
}

/// Fills a sampled triplet set with its confidences `g_k` and camera-facing
/// candidate normals `n_k`. 3D-degenerate triplets (dropped with zero weight
/// by the operator) are removed so the set's invariants stay intact. With
/// `use_context` off (or a constant guidance map) every confidence is one.
pub fn annotate_triplet_set<T: Scalar>(
    pm: &PointMap<T>,
    features: &GuidanceFeatureMap<T>,
    cfg: &AsnConfig,
    patch: &Patch,
    set: &mut TripletSet<T>,
) {
    let weights =
        effective_features(features, cfg).map(|f| similarity_weights(f, set.center, patch));
    let center_pt = pm.point(set.center.0, set.center.1);
    set.confidences.clear();
    set.normals.clear();
    let mut keep = Vec::with_capacity(set.indices.len());
    for (slot, tri) in set.indices.iter().enumerate() {
        let [a, b, c] = tri.map(|i| patch.absolute(i));
        let Some(n) = candidate_normal(
            pm.point(a.0, a.1),
            pm.point(b.0, b.1),
            pm.point(c.0, c.1),
            center_pt,
        ) else {
            continue;
        };
        keep.push(slot);
        set.normals.push(n);
        set.confidences.push(match &weights {
            Some(w) => triplet_confidence(w, *tri),
            None => T::one(),
        });
    }
    if keep.len() != set.indices.len() {
        set.indices = keep.iter().map(|&s| set.indices[s]).collect();
        set.areas = keep.iter().map(|&s| set.areas[s]).collect();
    }
}

/// Per-candidate state captured for gradient propagation.
#[derive(Clone, Debug)]
pub(crate) struct CandidateState<T> {
    /// Absolute pixel coordinates of the triplet members.
    pub pixels: [(usize, usize); 3],
    /// Combined weight `s_k * g_k` as used in the weighted mean.
    pub weight: T,
    /// Raw cross product and its norm.
    pub cross: Vec3<T>,
    pub cross_norm: T,
    /// Sign applied by candidate view alignment (+1 kept, -1 flipped).
    pub flip_sign: T,
}

/// Per-pixel forward state of the operator.
#[derive(Clone, Debug)]
pub(crate) struct PixelState<T> {
    /// Output normal; `None` marks the pixel invalid.
    pub normal: Option<Vec3<T>>,
    /// Weighted mean before normalization and its norm.
    pub mean: Vec3<T>,
    pub mean_norm: T,
    /// Total candidate weight (denominator of the weighted mean).
    pub weight_sum: T,
    /// Sign applied by the final view alignment.
    pub flip_sign: T,
    /// The pixel sits near a non-differentiable point (flip boundary,
    /// degenerate candidate, or zero-denominator fallback).
    pub dubious: bool,
    pub used_fallback: bool,
    /// Members of every accepted triplet (used to flag gradient receivers).
    pub members: Vec<(usize, usize)>,
    pub candidates: Vec<CandidateState<T>>,
}

impl<T: Scalar> PixelState<T> {
    fn invalid(dubious: bool) -> Self {
        Self {
            normal: None,
            mean: Vec3::zero(),
            mean_norm: T::zero(),
            weight_sum: T::zero(),
            flip_sign: T::one(),
            dubious,
            used_fallback: false,
            members: Vec::new(),
            candidates: Vec::new(),
        }
    }
}

/// Reusable per-pixel scratch buffers.
pub(crate) struct Scratch<T> {
    patch: Patch,
    valid_idx: Vec<usize>,
    triplets: TripletSet<T>,
    weights: Vec<T>,
}

impl<T: Scalar> Scratch<T> {
    pub(crate) fn new() -> Self {
        Self {
            patch: Patch {
                center: (0, 0),
                entries: Vec::new(),
            },
            valid_idx: Vec::new(),
            triplets: TripletSet::empty((0, 0)),
            weights: Vec::new(),
        }
    }
}

/// Runs the operator at one pixel. `features` is `None` when context adaption
/// is off (or the guidance map is constant, in which case the kernel is
/// uniform and cancels exactly in the weighted mean).
pub(crate) fn asn_pixel<T: Scalar>(
    pm: &PointMap<T>,
    features: Option<&GuidanceFeatureMap<T>>,
    cfg: &AsnConfig,
    pixel: (usize, usize),
    scratch: &mut Scratch<T>,
    capture: bool,
) -> PixelState<T> {
    if !pm.is_valid(pixel.0, pixel.1) {
        return PixelState::invalid(false);
    }
    scratch.patch.center = pixel;
    extract_patch_into(
        pm,
        pixel,
        cfg.sampler.patch_size,
        &mut scratch.patch.entries,
    );
    sample_triplets_into(
        &scratch.patch,
        &cfg.sampler,
        pixel,
        &mut scratch.valid_idx,
        &mut scratch.triplets,
    );
    if scratch.triplets.is_empty() {
        return PixelState::invalid(false);
    }
    if let Some(f) = features {
        similarity_weights_into(f, pixel, &scratch.patch, &mut scratch.weights);
    }

    let center_pt = pm.point(pixel.0, pixel.1);
    let degenerate = T::cast(DEGENERATE_CROSS);
    let cross_margin = T::cast(CROSS_FLAG_MARGIN);
    let flip_margin = T::cast(FLIP_FLAG_MARGIN);

    let mut state = PixelState::invalid(false);
    let mut weighted = Vec3::zero();
    let mut weight_sum = T::zero();
    let mut unweighted = Vec3::zero();
    let mut kept = 0usize;

    for (tri, &area) in scratch.triplets.indices.iter().zip(&scratch.triplets.areas) {
        let qa = scratch.patch.absolute(tri[0]);
        let qb = scratch.patch.absolute(tri[1]);
        let qc = scratch.patch.absolute(tri[2]);
        if capture {
            state.members.extend_from_slice(&[qa, qb, qc]);
        }
        let pa = pm.point(qa.0, qa.1);
        let pb = pm.point(qb.0, qb.1);
        let pc = pm.point(qc.0, qc.1);
        let cross = (pb - pa).cross(pc - pa);
        let cross_norm = cross.norm();
        if cross_norm <= degenerate {
            state.dubious = true;
            continue;
        }
        if cross_norm < cross_margin {
            state.dubious = true;
        }
        let unit = cross / cross_norm;
        let facing = unit.dot(center_pt);
        if facing.abs() < flip_margin {
            state.dubious = true;
        }
        let flip_sign = if facing > T::zero() {
            -T::one()
        } else {
            T::one()
        };
        let candidate = unit * flip_sign;

        let s = if cfg.use_area { area } else { T::one() };
        let g = match features {
            Some(_) => triplet_confidence(&scratch.weights, *tri),
            None => T::one(),
        };
        let w = s * g;
        weighted += candidate * w;
        weight_sum += w;
        unweighted += candidate;
        kept += 1;

        if capture {
            state.candidates.push(CandidateState {
                pixels: [qa, qb, qc],
                weight: w,
                cross,
                cross_norm,
                flip_sign,
            });
        }
    }

    if kept == 0 {
        let dubious = state.dubious;
        let members = std::mem::take(&mut state.members);
        let mut out = PixelState::invalid(dubious);
        out.members = members;
        return out;
    }

    let mean = if weight_sum > T::zero() {
        weighted / weight_sum
    } else {
        state.used_fallback = true;
        state.dubious = true;
        unweighted / T::from_count(kept)
    };
    let mean_norm = mean.norm();
    if mean_norm <= degenerate || !mean_norm.is_finite() {
        state.dubious = true;
        state.normal = None;
        return state;
    }
    if mean_norm < T::cast(MEAN_FLAG_MARGIN) {
        state.dubious = true;
    }
    let unit = mean / mean_norm;
    let facing = unit.dot(center_pt);
    if facing.abs() < flip_margin {
        state.dubious = true;
    }
    let flip_sign = if facing > T::zero() {
        -T::one()
    } else {
        T::one()
    };

    state.mean = mean;
    state.mean_norm = mean_norm;
    state.weight_sum = weight_sum;
    state.flip_sign = flip_sign;
    state.normal = Some(unit * flip_sign);
    state
}

pub(crate) fn effective_features<'a, T: Scalar>(
    features: &'a GuidanceFeatureMap<T>,
    cfg: &AsnConfig,
) -> Option<&'a GuidanceFeatureMap<T>> {
    if cfg.use_context && !features.is_constant() {
        Some(features)
    } else {
        None
    }
}

/// Computes the adaptive surface normal map of a point map.
///
/// Weighting follows the configured adaptions: with `use_area` off every
/// `s_k` is one, with `use_context` off every `g_k` is one. A pixel whose
/// total weight vanishes falls back to the unweighted mean of its surviving
/// candidates; a pixel with no survivors (or fewer than three valid patch
/// neighbors) is invalid.
pub fn asn_normals<T: Scalar>(
    pm: &PointMap<T>,
    features: &GuidanceFeatureMap<T>,
    cfg: &AsnConfig,
) -> Result<NormalMap<T>> {
    if pm.width() != features.width() || pm.height() != features.height() {
        return Err(Error::contract(format!(
            "asn_normals: point map is {}x{} but guidance is {}x{}",
            pm.width(),
            pm.height(),
            features.width(),
            features.height()
        )));
    }
    cfg.sampler.validate()?;
    let feats = effective_features(features, cfg);
    let width = pm.width();
    let height = pm.height();

    let rows: Vec<(Vec<Vec3<T>>, Vec<bool>)> = (0..height)
        .into_par_iter()
        .map(|v| {
            let mut scratch = Scratch::new();
            let mut normals = Vec::with_capacity(width);
            let mut valid = Vec::with_capacity(width);
            for u in 0..width {
                let st = asn_pixel(pm, feats, cfg, (u, v), &mut scratch, false);
                match st.normal {
                    Some(n) => {
                        normals.push(n);
                        valid.push(true);
                    }
                    None => {
                        normals.push(Vec3::zero());
                        valid.push(false);
                    }
                }
            }
            (normals, valid)
        })
        .collect();

    let mut normals = Vec::with_capacity(width * height);
    let mut valid = Vec::with_capacity(width * height);
    for (n, m) in rows {
        normals.extend(n);
        valid.extend(m);
    }
    NormalMap::new(width, height, normals, valid)
}
