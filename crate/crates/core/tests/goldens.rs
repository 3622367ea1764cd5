//! Frozen reference values. Generated once with examples/gen_goldens.rs and
//! pinned here; any drift in the sampler stream, the virtual-normal draw
//! order, or the loss arithmetic shows up as a diff against these constants.

use depthgeom::{
    backproject, extract_patch, gen_hemisphere, gt_pyramid, oracle_guidance, sample_triplets,
    total_loss, virtual_normal_loss, AsnConfig, DepthMap, Intrinsics, LossConfig, PointMap,
    SamplerConfig, TripletSet, Vec3, VnConfig,
};

#[rustfmt::skip]
const GOLDEN_TRIPLETS: [[usize; 3]; 40] = [
    [21, 19, 11], [13, 9, 10], [3, 23, 21], [0, 17, 21], [16, 24, 3], [11, 3, 13], [18, 12, 20], [3, 5, 15],
    [24, 16, 22], [9, 12, 6], [17, 16, 4], [4, 3, 20], [15, 3, 4], [14, 13, 21], [5, 22, 13], [12, 2, 20],
    [6, 14, 9], [9, 14, 6], [3, 11, 18], [6, 2, 7], [19, 5, 15], [23, 9, 13], [17, 23, 16], [16, 4, 18],
    [21, 9, 0], [8, 13, 1], [3, 15, 9], [24, 0, 19], [5, 15, 11], [8, 16, 1], [14, 18, 1], [1, 3, 22],
    [4, 14, 16], [22, 16, 4], [1, 20, 5], [21, 17, 22], [19, 6, 24], [6, 9, 20], [18, 17, 2], [10, 11, 5],
];

#[rustfmt::skip]
const GOLDEN_AREAS: [f64; 40] = [
    3.0, 1.5, 4.0, 2.5, 5.5, 2.0, 2.0, 3.0, 1.0, 1.5, 1.5, 2.0, 1.5, 1.0, 3.5, 2.0, 1.5, 1.5, 3.0, 0.5,
    4.0, 1.0, 0.5, 3.0, 7.5, 1.0, 3.0, 2.0, 1.0, 3.0, 2.5, 4.0, 3.0, 3.0, 1.5, 0.5, 1.5, 4.5, 1.5, 0.5,
];

const GOLDEN_VN_LOSS: f64 = 0.03647982467752608;
const GOLDEN_TOTAL_LOSS: f64 = 0.1317056355530821;

fn intr(res: usize) -> Intrinsics<f64> {
    Intrinsics::new(
        res as f64,
        res as f64,
        (res as f64 - 1.0) / 2.0,
        (res as f64 - 1.0) / 2.0,
        res,
        res,
    )
    .unwrap()
}

#[test]
fn sampler_reference_stream_is_frozen() {
    let w = 21;
    let k = intr(w);
    let points: Vec<Vec3<f64>> = (0..w * w)
        .map(|i| k.pixel_ray(i % w, i / w) * 2.0)
        .collect();
    let pm = PointMap::new(w, w, points, vec![true; w * w]).unwrap();
    let patch = extract_patch(&pm, (10, 10), 5);
    let set: TripletSet<f64> = sample_triplets(&patch, &SamplerConfig::default(), (10, 10));
    assert_eq!(set.indices.len(), 40);
    assert_eq!(set.indices.as_slice(), &GOLDEN_TRIPLETS);
    assert_eq!(set.areas.as_slice(), &GOLDEN_AREAS);
}

#[test]
fn virtual_normal_loss_reference_value() {
    let res = 32;
    let k = intr(res);
    let scene = gen_hemisphere(&k, Vec3::new(0.0, 0.0, 3.0), 1.0, true).unwrap();
    let gt_pm = backproject(&scene.depth, &k).unwrap();
    let rippled: Vec<f64> = scene
        .depth
        .values()
        .iter()
        .enumerate()
        .map(|(i, d)| d + 0.05 * ((i % res) as f64 * 0.7).sin() * ((i / res) as f64 * 0.4).cos())
        .collect();
    let pred_pm = backproject(&DepthMap::from_values(res, res, rippled).unwrap(), &k).unwrap();
    let vn = virtual_normal_loss(&pred_pm, &gt_pm, &VnConfig::default()).unwrap();
    assert_eq!(vn, GOLDEN_VN_LOSS);
}

#[test]
fn total_loss_reference_value() {
    let res = 32;
    let k = intr(res);
    let scene = gen_hemisphere(&k, Vec3::new(0.0, 0.0, 3.0), 1.0, true).unwrap();
    let guidance = oracle_guidance(&scene, 10.0).unwrap();
    let loss_cfg = LossConfig::default();
    let biased = DepthMap::from_values(
        res,
        res,
        scene.depth.values().iter().map(|d| d + 0.02).collect(),
    )
    .unwrap();
    let preds = gt_pyramid(&biased, loss_cfg.scales).unwrap();
    let asn_cfg = AsnConfig::full(SamplerConfig {
        triplet_count: 16,
        seed: 7,
        ..Default::default()
    });
    let l = total_loss(
        &preds,
        &scene.depth,
        &guidance,
        &scene.normals_gt,
        &k,
        &asn_cfg,
        &loss_cfg,
    )
    .unwrap();
    assert_eq!(l, GOLDEN_TOTAL_LOSS);
}
