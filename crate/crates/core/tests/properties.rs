//! Property-based invariants across modules.

use depthgeom::math::angle_between;
use depthgeom::{
    backproject, extract_patch, normal_loss, project, sample_triplets, view_align, DepthMap,
    Intrinsics, NormalMap, PointMap, SamplerConfig, Vec3,
};
use proptest::prelude::*;

fn finite_depth() -> impl Strategy<Value = f64> {
    0.1f64..50.0
}

proptest! {
    /// Back-projecting a depth map and projecting the points again recovers
    /// every valid pixel center to within 1e-6 px.
    #[test]
    fn project_backproject_identity(
        fx in 20.0f64..500.0,
        fy in 20.0f64..500.0,
        depths in prop::collection::vec(finite_depth(), 49),
    ) {
        let intr = Intrinsics::new(fx, fy, 3.0, 3.0, 7, 7).unwrap();
        let depth = DepthMap::from_values(7, 7, depths).unwrap();
        let pm = backproject(&depth, &intr).unwrap();
        for v in 0..7usize {
            for u in 0..7usize {
                let (pu, pv) = project(pm.point(u, v), &intr).unwrap();
                prop_assert!((pu - u as f64).abs() < 1e-6);
                prop_assert!((pv - v as f64).abs() < 1e-6);
            }
        }
    }

    /// view_align is idempotent and its output faces the camera.
    #[test]
    fn view_align_idempotent_and_facing(
        nx in -5.0f64..5.0,
        ny in -5.0f64..5.0,
        nz in -5.0f64..5.0,
        px in -3.0f64..3.0,
        py in -3.0f64..3.0,
        pz in 0.1f64..10.0,
    ) {
        let n = Vec3::new(nx, ny, nz);
        prop_assume!(n.norm() > 1e-6);
        let p = Vec3::new(px, py, pz);
        let aligned = view_align(n, p).unwrap();
        prop_assert!(aligned.dot(p) <= 0.0);
        let again = view_align(aligned, p).unwrap();
        prop_assert!((again - aligned).norm() < 1e-12);
    }

    /// Triplet sampling is deterministic, draws only valid pixels, keeps the
    /// three members distinct, and respects the collinearity threshold.
    #[test]
    fn sampler_contract(
        seed in any::<u64>(),
        mask_bits in prop::collection::vec(any::<bool>(), 81),
        u in 0usize..9,
        v in 0usize..9,
    ) {
        let intr = Intrinsics::new(9.0, 9.0, 4.0, 4.0, 9, 9).unwrap();
        let points: Vec<Vec3<f64>> = (0..81).map(|i| intr.pixel_ray(i % 9, i / 9) * 2.0).collect();
        let pm = PointMap::new(9, 9, points, mask_bits).unwrap();
        let patch = extract_patch(&pm, (u, v), 5);
        let cfg = SamplerConfig { seed, ..Default::default() };
        let a: depthgeom::TripletSet<f64> = sample_triplets(&patch, &cfg, (u, v));
        let b: depthgeom::TripletSet<f64> = sample_triplets(&patch, &cfg, (u, v));
        prop_assert_eq!(&a, &b);
        if patch.valid_count() < 3 {
            prop_assert!(a.is_empty());
        }
        for (tri, &area) in a.indices.iter().zip(&a.areas) {
            prop_assert!(tri[0] != tri[1] && tri[1] != tri[2] && tri[0] != tri[2]);
            prop_assert!(tri.iter().all(|&i| patch.entries[i].valid));
            prop_assert!(area >= cfg.collinearity_eps);
        }
    }

    /// The cosine normal loss stays within [0, 2] for arbitrary unit normals.
    #[test]
    fn normal_loss_bounds(
        angles_a in prop::collection::vec((0.0f64..std::f64::consts::PI, 0.0f64..std::f64::consts::TAU), 16),
        angles_b in prop::collection::vec((0.0f64..std::f64::consts::PI, 0.0f64..std::f64::consts::TAU), 16),
    ) {
        let to_map = |angles: &[(f64, f64)]| {
            let ns: Vec<Vec3<f64>> = angles
                .iter()
                .map(|&(theta, phi)| {
                    Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
                })
                .collect();
            NormalMap::new(4, 4, ns, vec![true; 16]).unwrap()
        };
        let a = to_map(&angles_a);
        let b = to_map(&angles_b);
        let l = normal_loss(&a, &b).unwrap();
        prop_assert!((-1e-12..=2.0 + 1e-12).contains(&l));
    }

    /// Raster files round-trip bit-exactly for every dtype.
    #[test]
    fn raster_round_trip(
        w in 1u32..6,
        h in 1u32..6,
        c in 1u32..4,
        seed in any::<u64>(),
        dtype in 0usize..3,
    ) {
        use depthgeom::io::{read_raster, write_raster, RasterData, RawRaster};
        let n = (w * h * c) as usize;
        let mut stream = depthgeom::rng::Stream::from_seed(seed);
        let data = match dtype {
            0 => RasterData::F32((0..n).map(|_| f32::from_bits(stream.next_u64() as u32)).map(|f| if f.is_nan() { 0.5 } else { f }).collect()),
            1 => RasterData::MaskU8((0..n).map(|_| (stream.next_u64() & 1) as u8).collect()),
            _ => RasterData::I32((0..n).map(|_| stream.next_u64() as i32).collect()),
        };
        let raster = RawRaster { width: w, height: h, channels: c, data };
        let dir = std::env::temp_dir().join(format!("depthgeom-prop-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("r{seed}.asnr"));
        write_raster(&raster, &path).unwrap();
        let back = read_raster(&path).unwrap();
        std::fs::remove_file(&path).ok();
        prop_assert_eq!(back, raster);
    }

    /// atan2- and acos-based angles agree away from the acos precision floor.
    #[test]
    fn angle_formulations_agree(
        ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in -1.0f64..1.0,
        bx in -1.0f64..1.0, by in -1.0f64..1.0, bz in -1.0f64..1.0,
    ) {
        let a = Vec3::new(ax, ay, az);
        let b = Vec3::new(bx, by, bz);
        prop_assume!(a.norm() > 1e-3 && b.norm() > 1e-3);
        let ua = a / a.norm();
        let ub = b / b.norm();
        let via_atan = angle_between(ua, ub);
        let via_acos = ua.dot(ub).clamp(-1.0, 1.0).acos();
        prop_assert!((via_atan - via_acos).abs() < 1e-6);
    }
}
