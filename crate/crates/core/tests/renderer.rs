mod common;

use std::sync::Arc;

use airforge::environment::{EnvMap, EnvSampler};
use airforge::materials::{BsdfKind, MaterialSpec};
use airforge::math::Vec3;
use airforge::renderer::{build_bvh, render, RenderConfig, Scene, SceneObject, BACKGROUND};
use airforge::rng::Stream;
use airforge::scene::{look_at, Camera, Mesh, RigidTransform};
use common::{library_scene, oracle_scene, oracle_z_scores};

#[test]
fn matches_brute_force_tracer() {
    let z = oracle_z_scores(200, 8000, 2);
    assert_eq!(z.len(), 64);
    let beyond3 = z.iter().filter(|v| v.abs() > 3.0).count();
    let worst = z.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    eprintln!("beyond 3 sigma: {beyond3}, worst |z| {worst:.2}");
    assert!(beyond3 <= 2 && worst < 5.0, "z = {z:?}");
}

#[test]
fn oracle_detects_missing_bounce() {
    let z = oracle_z_scores(50, 2000, 1);
    assert!(z.iter().filter(|v| v.abs() > 3.0).count() > 10);
}

#[test]
fn white_furnace_small() {
    let env = Arc::new(EnvMap::uniform(32, Vec3::ONE, "white").unwrap());
    let cam = Camera::new(look_at(Vec3::new(0.0, 0.0, 3.0), Vec3::ZERO, Vec3::Y).unwrap(), 45.0, 24, 24).unwrap();
    let obj = SceneObject { mesh: Mesh::uv_sphere(1.0, 48, 24), material: MaterialSpec::diffuse(0, [1.0; 3]), instance_id: 0 };
    let scene = library_scene(cam, &env, vec![obj]);
    let out = render(&scene, &RenderConfig { spp: 64, width: 24, height: 24, ..RenderConfig::default() }).unwrap();
    let inside: Vec<f64> =
        out.color.iter().zip(&out.instance_ids).filter(|(_, &id)| id == 0).map(|(c, _)| c.luminance()).collect();
    let mean = inside.iter().sum::<f64>() / inside.len() as f64;
    assert!((mean - 1.0).abs() < 0.03, "mean {mean}");
}

/// With albedo ≤ 1 everywhere, a uniform unit sky can never be exceeded.
#[test]
fn energy_is_conserved() {
    let env = Arc::new(EnvMap::uniform(32, Vec3::ONE, "white").unwrap());
    let cam = Camera::new(look_at(Vec3::new(0.0, 1.0, 3.0), Vec3::ZERO, Vec3::Y).unwrap(), 50.0, 16, 16).unwrap();
    let mats = [
        MaterialSpec::diffuse(0, [0.8, 0.5, 0.2]),
        common::glossy(1, [0.9, 0.9, 0.9], 0.3),
        MaterialSpec { bsdf: BsdfKind::Glass, ior: Some(1.5), ..MaterialSpec::diffuse(2, [1.0; 3]) },
        MaterialSpec { bsdf: BsdfKind::Translucent, ..MaterialSpec::diffuse(3, [0.7; 3]) },
    ];
    for m in mats {
        let objects = vec![
            SceneObject { mesh: Mesh::uv_sphere(0.7, 24, 12), material: m.clone(), instance_id: 0 },
            SceneObject { mesh: common::ground_quad(2.0, -0.7), material: MaterialSpec::diffuse(9, [0.5; 3]), instance_id: 1 },
        ];
        let scene = library_scene(cam, &env, objects);
        let out = render(&scene, &RenderConfig { spp: 256, max_depth: 6, width: 16, height: 16, ..RenderConfig::default() }).unwrap();
        let mean = out.color.iter().map(|c| c.luminance()).sum::<f64>() / out.color.len() as f64;
        assert!(mean <= 1.0 + 0.02, "{:?}: mean {mean}", m.bsdf);
        assert!(out.color.iter().all(|c| c.is_finite()));
    }
}

#[test]
fn output_independent_of_thread_count() {
    let (camera, env, objects) = oracle_scene(16);
    let scene = library_scene(camera, &env, objects);
    let cfg = RenderConfig { spp: 4, width: 16, height: 16, seed: 3, ..RenderConfig::default() };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| render(&scene, &cfg).unwrap())
    };
    let a = run(1);
    assert_eq!(a, run(4));
    assert_eq!(a, run(7));
}

#[test]
fn instance_buffer_marks_background() {
    let env = Arc::new(EnvMap::uniform(32, Vec3::ONE, "w").unwrap());
    let cam = Camera::new(look_at(Vec3::new(0.0, 0.0, 5.0), Vec3::ZERO, Vec3::Y).unwrap(), 60.0, 20, 20).unwrap();
    let obj = SceneObject { mesh: Mesh::uv_sphere(0.5, 16, 8), material: MaterialSpec::diffuse(0, [0.5; 3]), instance_id: 7 };
    let scene = library_scene(cam, &env, vec![obj]);
    let out = render(&scene, &RenderConfig { spp: 1, width: 20, height: 20, ..RenderConfig::default() }).unwrap();
    assert_eq!(out.instance_ids[0], BACKGROUND);
    assert_eq!(out.instance_ids[10 * 20 + 10], 7);
    // Background pixels see the unit sky exactly.
    assert!(out.color.iter().zip(&out.instance_ids).filter(|(_, &i)| i == BACKGROUND).all(|(c, _)| (*c - Vec3::ONE).length() < 1e-12));
}

#[test]
fn bvh_matches_brute_force() {
    let mut rng = Stream::new(11);
    let mut meshes = Vec::new();
    // 10 000 triangles in 40 randomly placed spheres.
    for _ in 0..40 {
        let c = Vec3::new(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0));
        let mut m = Mesh::uv_sphere(rng.uniform(0.2, 1.2), 25, 6).transformed(&RigidTransform::translation(c));
        m.triangles.truncate(250);
        meshes.push(m);
    }
    let bvh = build_bvh(&meshes).unwrap();
    assert_eq!(bvh.triangles().len(), 10_000);
    for _ in 0..1000 {
        let o = Vec3::new(rng.uniform(-8.0, 8.0), rng.uniform(-8.0, 8.0), rng.uniform(-8.0, 8.0));
        let d = Vec3::new(rng.normal(), rng.normal(), rng.normal()).normalized();
        let brute = bvh
            .triangles()
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.intersect(o, d, 0.0, f64::INFINITY).map(|h| (h.0, i)))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        let fast = bvh.intersect(o, d, 0.0, f64::INFINITY);
        match (brute, fast) {
            (None, None) => {}
            (Some((t, _)), Some(h)) => assert!((t - h.t).abs() <= 1e-12 * t.max(1.0)),
            other => panic!("mismatch {other:?}"),
        }
        assert_eq!(bvh.occluded(o, d, 0.0, f64::INFINITY), brute.is_some());
    }
}

#[test]
fn empty_scene_renders_environment() {
    let env = Arc::new(EnvMap::uniform(32, Vec3::splat(0.25), "g").unwrap());
    let cam = Camera::new(look_at(Vec3::new(0.0, 0.0, 5.0), Vec3::ZERO, Vec3::Y).unwrap(), 60.0, 16, 16).unwrap();
    let scene = Scene::new(cam, Arc::new(EnvSampler::new(env).unwrap()), vec![]).unwrap();
    let out = render(&scene, &RenderConfig { spp: 2, width: 16, height: 16, ..RenderConfig::default() }).unwrap();
    assert!(out.color.iter().all(|c| (*c - Vec3::splat(0.25)).length() < 1e-12));
    assert!(out.instance_ids.iter().all(|&i| i == BACKGROUND));
}

