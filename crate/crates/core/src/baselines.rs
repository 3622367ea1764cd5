//! Comparator normal estimators: Sobel-like tangents, least-squares plane
//! fits, and the globally sampled virtual-normal loss.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::math::{pairwise_mean, sym_eigen3, Vec3};
use crate::raster::{NormalMap, PointMap};
use crate::rng::Stream;
use crate::scalar::Scalar;

const SOBEL_X: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
const SOBEL_Y: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];

/// Normals from fixed derivative kernels: tangents along the left-right and
/// up-down directions from the 3x3 Sobel pair applied channel-wise to the
/// point map, crossed and view-aligned. A pixel whose 3x3 support touches the
/// image border or any invalid pixel is invalid.
pub fn sobel_normal<T: Scalar>(pm: &PointMap<T>) -> Result<NormalMap<T>> {
    let (w, h) = (pm.width(), pm.height());
    if w < 3 || h < 3 {
        return Err(Error::contract("sobel_normal: image must be at least 3x3"));
    }
    let rows: Vec<(Vec<Vec3<T>>, Vec<bool>)> = (0..h)
        .into_par_iter()
        .map(|v| {
            let mut normals = vec![Vec3::zero(); w];
            let mut valid = vec![false; w];
            if v == 0 || v == h - 1 {
                return (normals, valid);
            }
            'pixel: for u in 1..w - 1 {
                let mut tx = Vec3::zero();
                let mut ty = Vec3::zero();
                for dv in 0..3 {
                    for du in 0..3 {
                        let (uu, vv) = (u + du - 1, v + dv - 1);
                        if !pm.is_valid(uu, vv) {
                            continue 'pixel;
                        }
                        let p = pm.point(uu, vv);
                        tx += p * T::cast(SOBEL_X[dv][du]);
                        ty += p * T::cast(SOBEL_Y[dv][du]);
                    }
                }
                let n = tx.cross(ty);
                if n.norm() <= T::cast(1e-12) {
                    continue;
                }
                let center = pm.point(u, v);
                let unit = n / n.norm();
                normals[u] = if unit.dot(center) > T::zero() {
                    -unit
                } else {
                    unit
                };
                valid[u] = true;
            }
            (normals, valid)
        })
        .collect();

    let mut normals = Vec::with_capacity(w * h);
    let mut valid = Vec::with_capacity(w * h);
    for (n, m) in rows {
        normals.extend(n);
        valid.extend(m);
    }
    NormalMap::new(w, h, normals, valid)
}

/// Least-squares plane-fit normals: per pixel, the valid points of the r x r
/// patch are centered, their 3x3 covariance formed, and the eigenvector of
/// the smallest eigenvalue returned, view-aligned.
///
/// A pixel is invalid when its own point is invalid, fewer than three valid
/// neighbors exist, or the neighborhood is rank-deficient (two smallest
/// eigenvalues within 1e-12).
pub fn lsq_normal<T: Scalar>(pm: &PointMap<T>, patch_size: usize) -> Result<NormalMap<T>> {
    if patch_size < 3 || patch_size.is_multiple_of(2) {
        return Err(Error::contract(
            "lsq_normal: patch size must be odd and >= 3",
        ));
    }
    let (w, h) = (pm.width(), pm.height());
    let half = (patch_size / 2) as i64;
    let rows: Vec<(Vec<Vec3<T>>, Vec<bool>)> = (0..h)
        .into_par_iter()
        .map(|v| {
            let mut normals = vec![Vec3::zero(); w];
            let mut valid = vec![false; w];
            let mut pts: Vec<Vec3<T>> = Vec::with_capacity(patch_size * patch_size);
            for u in 0..w {
                if !pm.is_valid(u, v) {
                    continue;
                }
                pts.clear();
                for dv in -half..=half {
                    for du in -half..=half {
                        let uu = u as i64 + du;
                        let vv = v as i64 + dv;
                        if uu < 0 || vv < 0 || uu >= w as i64 || vv >= h as i64 {
                            continue;
                        }
                        if pm.is_valid(uu as usize, vv as usize) {
                            pts.push(pm.point(uu as usize, vv as usize));
                        }
                    }
                }
                if pts.len() < 3 {
                    continue;
                }
                let count = T::from_count(pts.len());
                let mut centroid = Vec3::zero();
                for &p in &pts {
                    centroid += p;
                }
                let centroid = centroid / count;
                let mut cov = [[T::zero(); 3]; 3];
                for &p in &pts {
                    let d = p - centroid;
                    cov[0][0] += d.x * d.x;
                    cov[0][1] += d.x * d.y;
                    cov[0][2] += d.x * d.z;
                    cov[1][1] += d.y * d.y;
                    cov[1][2] += d.y * d.z;
                    cov[2][2] += d.z * d.z;
                }
                cov[1][0] = cov[0][1];
                cov[2][0] = cov[0][2];
                cov[2][1] = cov[1][2];
                let (vals, vecs) = sym_eigen3(cov);
                if vals[1] - vals[0] <= T::cast(1e-12) {
                    continue;
                }
                let Some(unit) = vecs[0].try_normalized() else {
                    continue;
                };
                let center = pm.point(u, v);
                normals[u] = if unit.dot(center) > T::zero() {
                    -unit
                } else {
                    unit
                };
                valid[u] = true;
            }
            (normals, valid)
        })
        .collect();

    let mut normals = Vec::with_capacity(w * h);
    let mut valid = Vec::with_capacity(w * h);
    for (n, m) in rows {
        normals.extend(n);
        valid.extend(m);
    }
    NormalMap::new(w, h, normals, valid)
}

/// Virtual-normal comparator parameters.
#[derive(Clone, Copy, Debug)]
pub struct VnConfig {
    /// Number of admissible global triplets to collect.
    pub sample_count: usize,
    pub seed: u64,
    /// Minimum pairwise ground-truth 3D distance in meters.
    pub min_dist: f64,
    /// Minimum angle between triplet edges in ground truth, degrees.
    pub min_angle_deg: f64,
}

impl Default for VnConfig {
    fn default() -> Self {
        Self {
            sample_count: 100,
            seed: 0,
            min_dist: 0.1,
            min_angle_deg: 5.0,
        }
    }
}

/// Mean Euclidean difference between plane normals of globally sampled point
/// triplets in the predicted and ground-truth point maps.
///
/// Triplets are drawn deterministically from `cfg.seed` over jointly valid
/// pixels and admitted when their ground-truth points are pairwise at least
/// `min_dist` apart and non-collinear. When fewer than `sample_count`
/// admissible triplets emerge from `10 * sample_count` draws, the loss is
/// computed over those found; zero admissible triplets is an error.
pub fn virtual_normal_loss<T: Scalar>(
    pred: &PointMap<T>,
    gt: &PointMap<T>,
    cfg: &VnConfig,
) -> Result<T> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(Error::contract("virtual_normal_loss: dimension mismatch"));
    }
    if cfg.sample_count == 0 {
        return Err(Error::contract(
            "virtual_normal_loss: sample_count must be >= 1",
        ));
    }
    let joint: Vec<usize> = (0..pred.width() * pred.height())
        .filter(|&i| pred.mask()[i] && gt.mask()[i])
        .collect();
    if joint.len() < 3 {
        return Err(Error::numerical(
            "virtual_normal_loss: fewer than 3 jointly valid pixels",
        ));
    }

    let min_dist = T::cast(cfg.min_dist);
    let sin_min = T::cast(cfg.min_angle_deg.to_radians().sin());
    let mut rng = Stream::from_seed(cfg.seed);
    let mut diffs: Vec<T> = Vec::with_capacity(cfg.sample_count);

    let plane_normal = |a: Vec3<T>, b: Vec3<T>, c: Vec3<T>| -> Option<Vec3<T>> {
        let n = (b - a).cross(c - a).try_normalized()?;
        let centroid = (a + b + c) / T::cast(3.0);
        Some(if n.dot(centroid) > T::zero() { -n } else { n })
    };

    let n = joint.len();
    for _ in 0..10 * cfg.sample_count {
        if diffs.len() == cfg.sample_count {
            break;
        }
        let ia = joint[rng.below(n)];
        let ib = joint[rng.below(n)];
        let ic = joint[rng.below(n)];
        if ia == ib || ib == ic || ia == ic {
            continue;
        }
        let ga = gt.points()[ia];
        let gb = gt.points()[ib];
        let gc = gt.points()[ic];
        let e1 = gb - ga;
        let e2 = gc - ga;
        let e3 = gc - gb;
        if e1.norm() < min_dist || e2.norm() < min_dist || e3.norm() < min_dist {
            continue;
        }
        // Non-collinearity: the sine of the angle between the edges.
        if e1.cross(e2).norm() < sin_min * e1.norm() * e2.norm() {
            continue;
        }
        let Some(ng) = plane_normal(ga, gb, gc) else {
            continue;
        };
        let Some(np) = plane_normal(pred.points()[ia], pred.points()[ib], pred.points()[ic]) else {
            continue;
        };
        diffs.push((np - ng).norm());
    }

    if diffs.is_empty() {
        return Err(Error::numerical(
            "virtual_normal_loss: no admissible triplets found",
        ));
    }
    Ok(pairwise_mean(&diffs).expect("non-empty"))
}
