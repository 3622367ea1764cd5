//! Depth-map geometry toolkit.
//!
//! Implements an adaptive surface normal operator over back-projected depth
//! maps, baseline normal estimators (Sobel-like tangents, least-squares plane
//! fits, virtual normals), the associated loss functions with analytic
//! gradients, evaluation metrics for depth / normal / point-cloud accuracy,
//! analytic synthetic scenes, and bit-exact file formats.
//!
//! Everything numeric is generic over the [`Scalar`] type (`f32` or `f64`);
//! concrete aliases are exported below.

pub mod asn;
pub mod backproject;
pub mod baselines;
pub mod camera;
pub mod error;
pub mod io;
pub mod losses;
pub mod math;
pub mod metrics;
pub mod raster;
pub mod rng;
pub mod sampling;
pub mod scalar;
pub mod synthetic;

pub use asn::{
    annotate_triplet_set, asn_normals, candidate_normal, projected_area, similarity_weights,
    triplet_confidence, AsnConfig,
};
pub use backproject::{backproject, view_align};
pub use baselines::{lsq_normal, sobel_normal, virtual_normal_loss, VnConfig};
pub use camera::{project, Intrinsics};
pub use error::{Error, Result};
pub use losses::{
    depth_loss, downsample_half, fd_total_loss_grad, gt_pyramid, normal_loss, total_loss,
    total_loss_grad, LossConfig, LossGradient,
};
pub use math::Vec3;
pub use metrics::{
    depth_metrics, normal_metrics, pointcloud_metrics, DepthMetrics, NormalMetrics,
    PointCloudMetrics,
};
pub use raster::{DepthMap, GuidanceFeatureMap, NormalMap, PointMap, SegmentMap};
pub use sampling::{extract_patch, sample_triplets, Patch, PatchEntry, SamplerConfig, TripletSet};
pub use scalar::Scalar;
pub use synthetic::{
    add_noise, gen_hemisphere, gen_plane, gen_step, gen_wedge, guidance_from_segments,
    oracle_guidance, Scene,
};

/// Single-precision aliases.
pub type Vec3F32 = Vec3<f32>;
pub type IntrinsicsF32 = Intrinsics<f32>;
pub type DepthMapF32 = DepthMap<f32>;
pub type PointMapF32 = PointMap<f32>;
pub type NormalMapF32 = NormalMap<f32>;
pub type GuidanceFeatureMapF32 = GuidanceFeatureMap<f32>;
pub type SceneF32 = Scene<f32>;

/// Double-precision aliases (the precision used by the CLI and the gradient
/// checks).
pub type Vec3F64 = Vec3<f64>;
pub type IntrinsicsF64 = Intrinsics<f64>;
pub type DepthMapF64 = DepthMap<f64>;
pub type PointMapF64 = PointMap<f64>;
pub type NormalMapF64 = NormalMap<f64>;
pub type GuidanceFeatureMapF64 = GuidanceFeatureMap<f64>;
pub type SceneF64 = Scene<f64>;
