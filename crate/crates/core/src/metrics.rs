//! Evaluation metrics for depth maps, normal maps, and point clouds.
//!
//! All metrics reduce over the jointly valid pixel set with fixed-order
//! pairwise summation; threshold accuracies use strict inequalities.

use crate::error::{Error, Result};
use crate::math::{pairwise_mean, pairwise_sum};
use crate::raster::{DepthMap, NormalMap, PointMap};
use crate::scalar::Scalar;

/// Depth accuracy bundle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DepthMetrics {
    /// Mean absolute relative error.
    pub rel: f64,
    /// Mean absolute log10 error.
    pub log10: f64,
    /// Root mean squared error (meters).
    pub rms: f64,
    /// Fraction of pixels with max(d/g, g/d) < 1.25^i.
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
}

impl DepthMetrics {
    pub fn rows(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("rel", self.rel),
            ("log10", self.log10),
            ("rms", self.rms),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("delta3", self.delta3),
        ]
    }
}

pub fn depth_metrics<T: Scalar>(pred: &DepthMap<T>, gt: &DepthMap<T>) -> Result<DepthMetrics> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(Error::contract("depth_metrics: dimension mismatch"));
    }
    let mut abs_rel = Vec::new();
    let mut log_abs = Vec::new();
    let mut sq = Vec::new();
    let mut within = [0usize; 3];
    for i in 0..pred.values().len() {
        if !(pred.mask()[i] && gt.mask()[i]) {
            continue;
        }
        let d = pred.values()[i].to_f64_lossy();
        let g = gt.values()[i].to_f64_lossy();
        abs_rel.push((d - g).abs() / g);
        log_abs.push((d.log10() - g.log10()).abs());
        sq.push((d - g) * (d - g));
        let ratio = (d / g).max(g / d);
        let mut bound = 1.25;
        for slot in &mut within {
            if ratio < bound {
                *slot += 1;
            }
            bound *= 1.25;
        }
    }
    let n = abs_rel.len();
    if n == 0 {
        return Err(Error::numerical("depth_metrics: empty joint validity mask"));
    }
    Ok(DepthMetrics {
        rel: pairwise_mean(&abs_rel).unwrap(),
        log10: pairwise_mean(&log_abs).unwrap(),
        rms: pairwise_mean(&sq).unwrap().sqrt(),
        delta1: within[0] as f64 / n as f64,
        delta2: within[1] as f64 / n as f64,
        delta3: within[2] as f64 / n as f64,
    })
}

/// Surface-normal accuracy bundle, angles in degrees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalMetrics {
    pub mean_deg: f64,
    /// Lower median (for even counts the smaller of the two middle values).
    pub median_deg: f64,
    /// Fractions of pixels with angle error strictly below the threshold.
    pub within_11_25: f64,
    pub within_22_5: f64,
    pub within_30: f64,
}

impl NormalMetrics {
    pub fn rows(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("mean_deg", self.mean_deg),
            ("median_deg", self.median_deg),
            ("within_11.25", self.within_11_25),
            ("within_22.5", self.within_22_5),
            ("within_30", self.within_30),
        ]
    }
}

pub fn normal_metrics<T: Scalar>(pred: &NormalMap<T>, gt: &NormalMap<T>) -> Result<NormalMetrics> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(Error::contract("normal_metrics: dimension mismatch"));
    }
    let mut angles: Vec<f64> = Vec::new();
    for i in 0..pred.normals().len() {
        if pred.mask()[i] && gt.mask()[i] {
            let (a, b) = (pred.normals()[i], gt.normals()[i]);
            // Inputs are unit to construction tolerance; dividing by the norms
            // keeps acos from inflating tiny angles on slightly short vectors
            // (e.g. after an f32 round trip).
            let dot = (a.dot(b) / (a.norm() * b.norm())).to_f64_lossy();
            angles.push(dot.clamp(-1.0, 1.0).acos().to_degrees());
        }
    }
    if angles.is_empty() {
        return Err(Error::numerical(
            "normal_metrics: empty joint validity mask",
        ));
    }
    let n = angles.len();
    let mean = pairwise_mean(&angles).unwrap();
    let mut sorted = angles.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite angles"));
    let median = sorted[(n - 1) / 2];
    let frac = |threshold: f64| sorted.iter().filter(|&&a| a < threshold).count() as f64 / n as f64;
    Ok(NormalMetrics {
        mean_deg: mean,
        median_deg: median,
        within_11_25: frac(11.25),
        within_22_5: frac(22.5),
        within_30: frac(30.0),
    })
}

/// Point-cloud accuracy bundle (pixel-wise correspondence).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointCloudMetrics {
    /// Mean Euclidean distance (meters).
    pub dist: f64,
    /// Root mean squared Euclidean distance.
    pub rms: f64,
    /// Fractions of pixels with distance strictly below the threshold.
    pub within_0_1: f64,
    pub within_0_3: f64,
    pub within_0_5: f64,
}

impl PointCloudMetrics {
    pub fn rows(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("dist", self.dist),
            ("rms", self.rms),
            ("within_0.1m", self.within_0_1),
            ("within_0.3m", self.within_0_3),
            ("within_0.5m", self.within_0_5),
        ]
    }
}

pub fn pointcloud_metrics<T: Scalar>(
    pred: &PointMap<T>,
    gt: &PointMap<T>,
) -> Result<PointCloudMetrics> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(Error::contract("pointcloud_metrics: dimension mismatch"));
    }
    let mut dists: Vec<f64> = Vec::new();
    for i in 0..pred.points().len() {
        if pred.mask()[i] && gt.mask()[i] {
            let d = pred.points()[i] - gt.points()[i];
            dists.push(d.norm().to_f64_lossy());
        }
    }
    if dists.is_empty() {
        return Err(Error::numerical(
            "pointcloud_metrics: empty joint validity mask",
        ));
    }
    let n = dists.len() as f64;
    let sq: Vec<f64> = dists.iter().map(|d| d * d).collect();
    let frac = |threshold: f64| dists.iter().filter(|&&d| d < threshold).count() as f64 / n;
    Ok(PointCloudMetrics {
        dist: pairwise_sum(&dists) / n,
        rms: (pairwise_sum(&sq) / n).sqrt(),
        within_0_1: frac(0.1),
        within_0_3: frac(0.3),
        within_0_5: frac(0.5),
    })
}
