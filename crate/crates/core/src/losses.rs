//! Training losses and the analytic gradient of the total loss with respect
//! to the finest-scale depth values.
//!
//! The total loss is a multi-scale L1 depth term plus a cosine surface-normal
//! term computed on adaptive normals of the back-projected finest depth map.
//! The gradient chains through back-projection, candidate cross products, and
//! the weighted combination; triplet indices, projected areas, and guidance
//! weights do not depend on depth and are treated as constants. Discrete
//! decisions (candidate view flips, drops, zero-denominator fallbacks) make
//! pixels near their boundaries non-differentiable: those pixels receive zero
//! gradient and are flagged.

use rayon::prelude::*;

use crate::asn::{asn_pixel, effective_features, AsnConfig, PixelState, Scratch};
use crate::backproject::backproject;
use crate::camera::Intrinsics;
use crate::error::{Error, Result};
use crate::math::pairwise_mean;
use crate::raster::{DepthMap, GuidanceFeatureMap, NormalMap};
use crate::scalar::Scalar;

/// Loss weighting parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossConfig {
    /// Scale-balance factor of the depth pyramid, in (0, 1].
    pub lambda: f64,
    /// Weight of the normal term.
    pub alpha: f64,
    /// Number of depth pyramid levels (1 to 4; the finest is full resolution).
    pub scales: usize,
    /// Scale weighting variant. `true` uses the printed exponent
    /// `lambda^(s-3)`, which up-weights coarse scales for lambda < 1; `false`
    /// uses `lambda^(3-s)`.
    pub legacy_exponent: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda: 0.8,
            alpha: 5.0,
            scales: 4,
            legacy_exponent: true,
        }
    }
}

impl LossConfig {
    fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::contract("lambda must be in (0, 1]"));
        }
        if self.alpha < 0.0 {
            return Err(Error::contract("alpha must be non-negative"));
        }
        if self.scales == 0 || self.scales > 4 {
            return Err(Error::contract("scales must be between 1 and 4"));
        }
        Ok(())
    }

    /// Weight of pyramid index `i` (0 = coarsest) among `count` levels. The
    /// finest level always has weight 1.
    fn scale_weight(&self, i: usize, count: usize) -> f64 {
        let exponent = i as i32 + 1 - count as i32; // = s - 3
        if self.legacy_exponent {
            self.lambda.powi(exponent)
        } else {
            self.lambda.powi(-exponent)
        }
    }
}

/// Halves a depth map with valid-aware 2x2 block averaging (ceiled dimensions;
/// a block is valid when it contains at least one valid pixel).
pub fn downsample_half<T: Scalar>(depth: &DepthMap<T>) -> Result<DepthMap<T>> {
    let (w, h) = (depth.width(), depth.height());
    let (ow, oh) = (w.div_ceil(2), h.div_ceil(2));
    let mut values = vec![T::one(); ow * oh];
    let mut valid = vec![false; ow * oh];
    for ov in 0..oh {
        for ou in 0..ow {
            let mut acc = T::zero();
            let mut count = 0usize;
            for dv in 0..2 {
                for du in 0..2 {
                    let (u, v) = (2 * ou + du, 2 * ov + dv);
                    if u < w && v < h && depth.is_valid(u, v) {
                        acc += depth.value(u, v);
                        count += 1;
                    }
                }
            }
            if count > 0 {
                values[ov * ow + ou] = acc / T::from_count(count);
                valid[ov * ow + ou] = true;
            }
        }
    }
    DepthMap::new(ow, oh, values, valid)
}

/// Builds the ground-truth pyramid for `count` levels, coarsest first; the
/// last level is the input itself.
pub fn gt_pyramid<T: Scalar>(gt: &DepthMap<T>, count: usize) -> Result<Vec<DepthMap<T>>> {
    let mut levels = vec![gt.clone()];
    for _ in 1..count {
        let next = downsample_half(levels.last().unwrap())?;
        levels.push(next);
    }
    levels.reverse();
    Ok(levels)
}

fn mean_abs_diff<T: Scalar>(pred: &DepthMap<T>, gt: &DepthMap<T>) -> Result<T> {
    let diffs: Vec<T> = (0..pred.values().len())
        .filter(|&i| pred.mask()[i] && gt.mask()[i])
        .map(|i| (pred.values()[i] - gt.values()[i]).abs())
        .collect();
    pairwise_mean(&diffs)
        .ok_or_else(|| Error::numerical("depth_loss: empty joint validity mask at a scale"))
}

/// Multi-scale L1 depth loss. `preds` is ordered coarsest to finest; each
/// level must match the valid-aware downsampled ground truth in size, and the
/// finest level matches the ground truth itself.
pub fn depth_loss<T: Scalar>(
    preds: &[DepthMap<T>],
    gt: &DepthMap<T>,
    cfg: &LossConfig,
) -> Result<T> {
    cfg.validate()?;
    if preds.len() != cfg.scales {
        return Err(Error::contract(format!(
            "depth_loss: {} predictions but {} configured scales",
            preds.len(),
            cfg.scales
        )));
    }
    let pyramid = gt_pyramid(gt, preds.len())?;
    let mut total = T::zero();
    for (i, (pred, level)) in preds.iter().zip(&pyramid).enumerate() {
        if pred.width() != level.width() || pred.height() != level.height() {
            return Err(Error::contract(format!(
                "depth_loss: scale {i} is {}x{} but expected {}x{}",
                pred.width(),
                pred.height(),
                level.width(),
                level.height()
            )));
        }
        let mean = mean_abs_diff(pred, level)?;
        total += T::cast(cfg.scale_weight(i, preds.len())) * mean;
    }
    Ok(total)
}

/// Cosine normal loss: mean of `1 - dot(n_pred, n_gt)` over jointly valid
/// pixels. Bounded by [0, 2] for unit inputs.
pub fn normal_loss<T: Scalar>(pred: &NormalMap<T>, gt: &NormalMap<T>) -> Result<T> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(Error::contract("normal_loss: dimension mismatch"));
    }
    let terms: Vec<T> = (0..pred.normals().len())
        .filter(|&i| pred.mask()[i] && gt.mask()[i])
        .map(|i| T::one() - pred.normals()[i].dot(gt.normals()[i]))
        .collect();
    pairwise_mean(&terms).ok_or_else(|| Error::numerical("normal_loss: empty joint validity mask"))
}

/// Total loss: depth term plus `alpha` times the normal term, where the
/// predicted normals are adaptive surface normals of the back-projected
/// finest-scale depth prediction.
#[allow(clippy::too_many_arguments)]
pub fn total_loss<T: Scalar>(
    preds: &[DepthMap<T>],
    gt_depth: &DepthMap<T>,
    guidance: &GuidanceFeatureMap<T>,
    normals_gt: &NormalMap<T>,
    intr: &Intrinsics<T>,
    asn_cfg: &AsnConfig,
    loss_cfg: &LossConfig,
) -> Result<T> {
    let l_d = depth_loss(preds, gt_depth, loss_cfg)?;
    let finest = preds
        .last()
        .ok_or_else(|| Error::contract("total_loss: no predictions"))?;
    let pm = backproject(finest, intr)?;
    let n_pred = crate::asn::asn_normals(&pm, guidance, asn_cfg)?;
    let l_n = normal_loss(&n_pred, normals_gt)?;
    Ok(l_d + T::cast(loss_cfg.alpha) * l_n)
}

/// Gradient of the total loss with respect to the finest-scale depth values,
/// plus the non-differentiability flags.
#[derive(Clone, Debug)]
pub struct LossGradient<T> {
    pub width: usize,
    pub height: usize,
    /// Row-major gradient; zero at invalid and flagged pixels.
    pub grad: Vec<T>,
    /// Pixels whose gradient is unreliable because a normal they feed sits
    /// near a discrete decision boundary.
    pub flagged: Vec<bool>,
    pub flagged_count: usize,
}

#[inline]
fn sign<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// Analytic `d(total_loss) / d(finest depth)`.
///
/// Coarser pyramid levels are independent inputs and contribute nothing to
/// this derivative; the depth term contributes the L1 subgradient (sign with
/// `sign(0) = 0`) at the finest scale, and the normal term chains through the
/// adaptive normal computation.
#[allow(clippy::too_many_arguments)]
pub fn total_loss_grad<T: Scalar>(
    preds: &[DepthMap<T>],
    gt_depth: &DepthMap<T>,
    guidance: &GuidanceFeatureMap<T>,
    normals_gt: &NormalMap<T>,
    intr: &Intrinsics<T>,
    asn_cfg: &AsnConfig,
    loss_cfg: &LossConfig,
) -> Result<LossGradient<T>> {
    loss_cfg.validate()?;
    let finest = preds
        .last()
        .ok_or_else(|| Error::contract("total_loss_grad: no predictions"))?;
    if finest.width() != gt_depth.width() || finest.height() != gt_depth.height() {
        return Err(Error::contract(
            "total_loss_grad: finest scale must match ground truth",
        ));
    }
    if finest.width() != normals_gt.width() || finest.height() != normals_gt.height() {
        return Err(Error::contract(
            "total_loss_grad: normal map dimension mismatch",
        ));
    }
    asn_cfg.sampler.validate()?;
    let (w, h) = (finest.width(), finest.height());
    let pm = backproject(finest, intr)?;
    let feats = effective_features(guidance, asn_cfg);

    // Forward pass with captured per-candidate state.
    let states: Vec<PixelState<T>> = (0..h)
        .into_par_iter()
        .flat_map_iter(|v| {
            let mut scratch = Scratch::new();
            let pm = &pm;
            (0..w)
                .map(move |u| asn_pixel(pm, feats, asn_cfg, (u, v), &mut scratch, true))
                .collect::<Vec<_>>()
        })
        .collect();

    let joint_normals: Vec<usize> = (0..w * h)
        .filter(|&i| states[i].normal.is_some() && normals_gt.mask()[i])
        .collect();
    if joint_normals.is_empty() {
        return Err(Error::numerical(
            "total_loss_grad: empty joint normal validity mask",
        ));
    }

    let mut grad = vec![T::zero(); w * h];
    let mut flagged = vec![false; w * h];

    // Depth term: L1 subgradient at the finest scale (weight 1 under either
    // exponent variant).
    let joint_depth: Vec<usize> = (0..w * h)
        .filter(|&i| finest.mask()[i] && gt_depth.mask()[i])
        .collect();
    if joint_depth.is_empty() {
        return Err(Error::numerical(
            "total_loss_grad: empty joint depth validity mask",
        ));
    }
    let inv_n = T::one() / T::from_count(joint_depth.len());
    for &i in &joint_depth {
        grad[i] += sign(finest.values()[i] - gt_depth.values()[i]) * inv_n;
    }

    // Normal term.
    let coeff = -T::cast(loss_cfg.alpha) / T::from_count(joint_normals.len());
    for &i in &joint_normals {
        let st = &states[i];
        if st.dubious {
            flagged[i] = true;
            for &(qu, qv) in &st.members {
                flagged[qv * w + qu] = true;
            }
            continue;
        }
        let b = normals_gt.normals()[i] * coeff;
        let m = st.mean / st.mean_norm;
        let t = (b - m * m.dot(b)) * (st.flip_sign / st.mean_norm);
        for cand in &st.candidates {
            let unit = cand.cross / cand.cross_norm;
            let hk = (t - unit * unit.dot(t))
                * (cand.flip_sign * cand.weight / (st.weight_sum * cand.cross_norm));
            let [qa, qb, qc] = cand.pixels;
            let pa = pm.point(qa.0, qa.1);
            let pb = pm.point(qb.0, qb.1);
            let pc = pm.point(qc.0, qc.1);
            let e1 = pb - pa;
            let e2 = pc - pa;
            let gb = e2.cross(hk);
            let gc = hk.cross(e1);
            let ga = -(gb + gc);
            for (q, gp) in [(qa, ga), (qb, gb), (qc, gc)] {
                grad[q.1 * w + q.0] += gp.dot(intr.pixel_ray(q.0, q.1));
            }
        }
    }

    // Also flag around dubious pixels that did not make it into the joint
    // set (e.g. invalid normals from near-threshold candidate drops).
    for i in 0..w * h {
        let st = &states[i];
        if st.dubious && st.normal.is_none() {
            flagged[i] = true;
            for &(qu, qv) in &st.members {
                flagged[qv * w + qu] = true;
            }
        }
    }

    let mut flagged_count = 0;
    for (g, &f) in grad.iter_mut().zip(&flagged) {
        if f {
            *g = T::zero();
            flagged_count += 1;
        }
    }

    Ok(LossGradient {
        width: w,
        height: h,
        grad,
        flagged,
        flagged_count,
    })
}

/// Central-difference gradient of the total loss with respect to the finest
/// depth values. Independent of the analytic path: evaluates [`total_loss`]
/// at `D(q) +/- h`. Invalid pixels get zero.
#[allow(clippy::too_many_arguments)]
pub fn fd_total_loss_grad<T: Scalar>(
    preds: &[DepthMap<T>],
    gt_depth: &DepthMap<T>,
    guidance: &GuidanceFeatureMap<T>,
    normals_gt: &NormalMap<T>,
    intr: &Intrinsics<T>,
    asn_cfg: &AsnConfig,
    loss_cfg: &LossConfig,
    h: f64,
) -> Result<Vec<T>> {
    let finest = preds
        .last()
        .ok_or_else(|| Error::contract("fd_total_loss_grad: no predictions"))?;
    let (w, ht) = (finest.width(), finest.height());
    let step = T::cast(h);
    let two_h = T::cast(2.0 * h);
    let coarse: Vec<DepthMap<T>> = preds[..preds.len() - 1].to_vec();

    let eval = |values: Vec<T>| -> Result<T> {
        let perturbed = DepthMap::new(w, ht, values, finest.mask().to_vec())?;
        let mut all = coarse.clone();
        all.push(perturbed);
        total_loss(
            &all, gt_depth, guidance, normals_gt, intr, asn_cfg, loss_cfg,
        )
    };

    let mut grad = vec![T::zero(); w * ht];
    for i in 0..w * ht {
        if !finest.mask()[i] {
            continue;
        }
        let mut plus = finest.values().to_vec();
        plus[i] += step;
        let mut minus = finest.values().to_vec();
        minus[i] -= step;
        grad[i] = (eval(plus)? - eval(minus)?) / two_h;
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec3;
    use crate::raster::DepthMap;

    fn flat(w: usize, h: usize, d: f64) -> DepthMap<f64> {
        DepthMap::from_values(w, h, vec![d; w * h]).unwrap()
    }

    #[test]
    fn downsample_averages_blocks() {
        let d = DepthMap::from_values(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let half = downsample_half(&d).unwrap();
        assert_eq!(half.width(), 1);
        assert_eq!(half.value(0, 0), 2.5);
    }

    #[test]
    fn downsample_is_valid_aware() {
        let d = DepthMap::new(
            2,
            2,
            vec![1.0, 2.0, 3.0, 4.0],
            vec![true, false, true, false],
        )
        .unwrap();
        let half = downsample_half(&d).unwrap();
        assert_eq!(half.value(0, 0), 2.0);
        let all_masked = DepthMap::new(2, 2, vec![1.0; 4], vec![false; 4]).unwrap();
        assert!(!downsample_half(&all_masked).unwrap().is_valid(0, 0));
    }

    #[test]
    fn depth_loss_zero_for_matching_pyramid() {
        let gt = flat(16, 16, 2.0);
        let cfg = LossConfig::default();
        let preds = gt_pyramid(&gt, 4).unwrap();
        let l = depth_loss(&preds, &gt, &cfg).unwrap();
        assert_eq!(l, 0.0);
    }

    #[test]
    fn depth_loss_single_scale_constant_offset() {
        let gt = flat(8, 8, 2.0);
        let pred = flat(8, 8, 2.1);
        let cfg = LossConfig {
            scales: 1,
            ..Default::default()
        };
        let l = depth_loss(&[pred], &gt, &cfg).unwrap();
        assert!((l - 0.1).abs() < 1e-12);
    }

    #[test]
    fn depth_loss_two_scale_printed_exponent() {
        // Means 0.1 at the finest scale and 0.2 at the coarser; the printed
        // exponent weighs the coarse scale by 1/lambda: 0.1 + 0.2/0.8 = 0.35.
        let gt = flat(8, 8, 2.0);
        let coarse = flat(4, 4, 2.2);
        let fine = flat(8, 8, 2.1);
        let cfg = LossConfig {
            scales: 2,
            ..Default::default()
        };
        let l = depth_loss(&[coarse, fine], &gt, &cfg).unwrap();
        assert!((l - 0.35).abs() < 1e-12, "loss {l}");
    }

    #[test]
    fn depth_loss_two_scale_reversed_exponent() {
        let gt = flat(8, 8, 2.0);
        let coarse = flat(4, 4, 2.2);
        let fine = flat(8, 8, 2.1);
        let cfg = LossConfig {
            scales: 2,
            legacy_exponent: false,
            ..Default::default()
        };
        let l = depth_loss(&[coarse, fine], &gt, &cfg).unwrap();
        assert!((l - (0.1 + 0.2 * 0.8)).abs() < 1e-12, "loss {l}");
    }

    #[test]
    fn depth_loss_rejects_wrong_dims() {
        let gt = flat(8, 8, 2.0);
        let cfg = LossConfig {
            scales: 2,
            ..Default::default()
        };
        let bad = vec![flat(8, 8, 2.0), flat(8, 8, 2.0)];
        assert!(matches!(
            depth_loss(&bad, &gt, &cfg),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn depth_loss_empty_joint_mask_errors() {
        let gt = DepthMap::new(2, 1, vec![1.0, 1.0], vec![false, false]).unwrap();
        let pred = flat(2, 1, 1.0);
        let cfg = LossConfig {
            scales: 1,
            ..Default::default()
        };
        assert!(matches!(
            depth_loss(&[pred], &gt, &cfg),
            Err(Error::Numerical(_))
        ));
    }

    fn normal_map(ns: Vec<Vec3<f64>>) -> NormalMap<f64> {
        let n = ns.len();
        NormalMap::new(n, 1, ns, vec![true; n]).unwrap()
    }

    #[test]
    fn normal_loss_trivial_values() {
        let down = normal_map(vec![Vec3::new(0.0, 0.0, -1.0); 4]);
        assert_eq!(normal_loss(&down, &down).unwrap(), 0.0);
        let side = normal_map(vec![Vec3::new(1.0, 0.0, 0.0); 4]);
        assert_eq!(normal_loss(&side, &down).unwrap(), 1.0);
        let up = normal_map(vec![Vec3::new(0.0, 0.0, 1.0); 4]);
        assert_eq!(normal_loss(&up, &down).unwrap(), 2.0);
    }
}
