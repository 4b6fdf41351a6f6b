//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use airforge::environment::{decode_hdr, encode_hdr, synthesize_sky, EnvMap, SkyCondition};
use airforge::evalkit::{
    average_precision, cluster_anchors, perturb_illumination, AnchorDistance, DetectionRecord, ExposureMode, GroundTruth,
};
use airforge::image::RgbImage;
use airforge::labeler::{parse_coco, parse_yolo, write_coco, write_yolo, Annotation, CocoImage};
use airforge::materials::MaterialSpec;
use airforge::math::Vec3;
use airforge::pipeline::{run, validate, Config, Manifest, RunOptions};
use airforge::renderer::{render, RenderConfig, SceneObject};
use airforge::rng::Stream;
use airforge::sampler::{draw_samples, make_plan, ParamRanges, PlacementGeometry};
use airforge::scene::{generate_uav_mesh, look_at, BBox2D, Camera, Mesh, UavParams};
use common::{
    brute_force_ap, chi_square, chi_square_critical_99, label_and_silhouette, library_scene, oracle_z_scores,
    random_instance,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn dataset_arithmetic() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut config = Config::default();
    config.render.width = 64;
    config.render.height = 64;
    config.render.spp = 8;
    ensure!(
        (config.models.len(), config.environments.len(), config.dataset.textures, config.dataset.target_images)
            == (1, 10, 32, 32_000),
        "default config is not 1 model x 10 environments x 32 textures"
    );
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let opts = RunOptions { output_dir: dir.path().to_path_buf(), workers, max_images: None };
    let start = Instant::now();
    let report = run(&config, Path::new("."), &opts).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let m = &report.manifest;
    ensure!(m.complete && m.records.len() == 32_000, "{} records, complete={}", m.records.len(), m.complete);
    let mut per: BTreeMap<(String, String, u32), u64> = BTreeMap::new();
    for r in &m.records {
        *per.entry((r.sample.model.clone(), r.sample.environment.clone(), r.sample.material)).or_default() += 1;
    }
    ensure!(per.len() == 320 && per.values().all(|&c| c == 100), "per-combination counts {:?}", per.values().collect::<Vec<_>>());
    let pngs = fs::read_dir(dir.path().join("images")).map_err(|e| e.to_string())?.count();
    ensure!(pngs == 32_000, "{pngs} PNG files");
    ensure!(elapsed < Duration::from_secs(600), "took {elapsed:.1?}");
    Ok(format!("32000 images, 320 combinations x 100, {elapsed:.1?} on {workers} worker(s)"))
}

fn parameter_ranges() -> Outcome {
    let r = ParamRanges::default();
    let names = |p: &str| vec![format!("{p}0")];
    let plan = make_plan(&names("m"), &names("e"), 1, 10_000, &r, 3).map_err(|e| e.to_string())?;
    let bounds = generate_uav_mesh(&UavParams::default(), 7).map_err(|e| e.to_string())?.centered().aabb();
    let geometry = PlacementGeometry { horizontal_fov: 60.0, width: 64, height: 64, model_bounds: vec![bounds] };
    let samples = draw_samples(&plan, &geometry).map_err(|e| e.to_string())?;
    ensure!(samples.len() == 10_000, "{} samples", samples.len());
    let inside = |v: f64, b: [f64; 2]| v >= b[0] && v <= b[1];
    let out = samples
        .iter()
        .filter(|s| {
            !(inside(s.pitch, [-45.0, 45.0])
                && inside(s.roll, [-45.0, 45.0])
                && s.yaw >= 0.0
                && s.yaw < 360.0
                && inside(s.distance, [2.0, 20.0]))
        })
        .count();
    ensure!(out == 0, "{out} samples out of range");
    // Pose parameters are drawn once per pose and shared across its yaw sweep.
    let poses: Vec<_> = samples.iter().step_by(plan.yaw_steps as usize).collect();
    let crit = chi_square_critical_99(9);
    let mut parts = Vec::new();
    for (name, values, b) in [
        ("pitch", poses.iter().map(|s| s.pitch).collect::<Vec<_>>(), r.pitch),
        ("roll", poses.iter().map(|s| s.roll).collect(), r.roll),
        ("distance", poses.iter().map(|s| s.distance).collect(), r.distance),
    ] {
        let x2 = chi_square(&values, b[0], b[1], 10);
        ensure!(x2 < crit, "{name}: chi-square {x2:.2} >= {crit:.2}");
        parts.push(format!("{name} {x2:.2}"));
    }
    let yaws: Vec<f64> = samples.iter().map(|s| s.yaw).collect();
    let steps = plan.yaw_steps as usize;
    let x2 = chi_square(&yaws, r.yaw[0], r.yaw[1], steps);
    ensure!(x2 < chi_square_critical_99(steps - 1), "yaw: chi-square {x2:.2}");
    parts.push(format!("yaw {x2:.2}"));
    Ok(format!("10000 samples in range; chi-square ({}) below {crit:.2}", parts.join(", ")))
}

fn white_furnace() -> Outcome {
    let env = Arc::new(EnvMap::uniform(64, Vec3::ONE, "white").map_err(|e| e.to_string())?);
    let cam = Camera::new(look_at(Vec3::new(0.0, 0.0, 3.0), Vec3::ZERO, Vec3::Y).unwrap(), 45.0, 128, 128).unwrap();
    let sphere = SceneObject { mesh: Mesh::uv_sphere(1.0, 64, 32), material: MaterialSpec::diffuse(0, [1.0; 3]), instance_id: 0 };
    let scene = library_scene(cam, &env, vec![sphere]);
    let cfg = RenderConfig { spp: 256, width: 128, height: 128, ..RenderConfig::default() };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let out = pool.install(|| render(&scene, &cfg)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let inside: Vec<f64> =
        out.color.iter().zip(&out.instance_ids).filter(|(_, &id)| id == 0).map(|(c, _)| c.luminance()).collect();
    ensure!(!inside.is_empty(), "sphere not visible");
    let mean = inside.iter().sum::<f64>() / inside.len() as f64;
    let rms = (inside.iter().map(|v| (v - 1.0).powi(2)).sum::<f64>() / inside.len() as f64).sqrt();
    ensure!((mean - 1.0).abs() <= 0.02, "mean {mean:.4}");
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:.1?}");
    Ok(format!("{} sphere pixels, mean {mean:.4} (per-pixel noise rms {rms:.4}), {elapsed:.1?} single-threaded", inside.len()))
}

fn renderer_oracle() -> Outcome {
    let z = oracle_z_scores(200, 8000, 2);
    let beyond3 = z.iter().filter(|v| v.abs() > 3.0).count();
    let worst = z.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    ensure!(z.len() == 64, "{} pixels compared", z.len());
    // 64 simultaneous 3-sigma tests: allow the binomial tail, never 5 sigma.
    ensure!(beyond3 <= 2 && worst < 5.0, "{beyond3} pixels beyond 3 sigma, worst |z| {worst:.2}");
    Ok(format!("8x8 block, {beyond3} of 64 beyond 3 sigma, worst |z| {worst:.2}"))
}

fn label_oracle() -> Outcome {
    let (mut checked, mut truncated, mut worst) = (0, 0, 0.0f64);
    for seed in 0..150 {
        let Some((a, s)) = label_and_silhouette(seed, 96, 4) else { continue };
        let b = a.bbox;
        for d in [(b.x_min - s.x_min).abs(), (b.y_min - s.y_min).abs(), (b.x_max - s.x_max).abs(), (b.y_max - s.y_max).abs()] {
            ensure!(d <= 1.0, "scene {seed}: label {b:?} vs silhouette {s:?}");
            worst = worst.max(d);
        }
        checked += 1;
        truncated += a.truncated as usize;
        if checked == 50 {
            break;
        }
    }
    ensure!(checked == 50, "only {checked} scenes had a visible object");
    Ok(format!("50 scenes ({truncated} truncated), worst side error {worst:.3} px"))
}

fn metric_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut compared = 0;
    for seed in 0..100 {
        let (dets, gts) = random_instance(seed, 20);
        for class in 0..2 {
            let d: Vec<DetectionRecord> = dets.iter().filter(|r| r.class_id == class).cloned().collect();
            let g: Vec<GroundTruth> = gts.iter().filter(|r| r.class_id == class).cloned().collect();
            if g.is_empty() {
                continue;
            }
            let got = average_precision(&d, &g, 0.5).map_err(|e| e.to_string())?.ap;
            let diff = (got - brute_force_ap(&d, &g, 0.5)).abs();
            ensure!(diff <= 1e-9, "instance {seed} class {class}: difference {diff:e}");
            worst = worst.max(diff);
            compared += 1;
        }
    }
    let b = |x0, y0, x1, y1| BBox2D::new(x0, y0, x1, y1).unwrap();
    let gts = [
        GroundTruth { image_id: 0, class_id: 0, bbox: b(0.0, 0.0, 10.0, 10.0) },
        GroundTruth { image_id: 0, class_id: 0, bbox: b(20.0, 20.0, 30.0, 30.0) },
    ];
    let dets = [
        DetectionRecord { image_id: 0, class_id: 0, bbox: b(0.0, 0.0, 10.0, 10.0), confidence: 0.9 },
        DetectionRecord { image_id: 0, class_id: 0, bbox: b(50.0, 50.0, 60.0, 60.0), confidence: 0.8 },
    ];
    let hand = average_precision(&dets, &gts, 0.5).map_err(|e| e.to_string())?.ap;
    ensure!(hand == 0.5, "hand case AP {hand}");
    Ok(format!("{compared} class curves over 100 instances, worst difference {worst:e}; hand case AP = 0.5"))
}

fn anchor_clustering() -> Outcome {
    let mut rng = Stream::new(1);
    let boxes: Vec<(f64, f64)> = (0..500).map(|_| (rng.uniform(4.0, 300.0), rng.uniform(4.0, 300.0))).collect();
    let one = cluster_anchors(&boxes, 1, AnchorDistance::Euclidean, 0).map_err(|e| e.to_string())?;
    let n = boxes.len() as f64;
    let mean = (boxes.iter().map(|b| b.0).sum::<f64>() / n, boxes.iter().map(|b| b.1).sum::<f64>() / n);
    ensure!(one.centroids[0] == mean, "k=1 centroid {:?} vs mean {mean:?}", one.centroids[0]);

    let mut runs = 0;
    for seed in 0..20 {
        for d in [AnchorDistance::Euclidean, AnchorDistance::Iou] {
            let a = cluster_anchors(&boxes, 9, d, seed).map_err(|e| e.to_string())?;
            ensure!(a.history.windows(2).all(|w| w[1] <= w[0]), "objective rose in run {seed} {d:?}");
            runs += 1;
        }
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for (i, (w, h)) in boxes.iter().enumerate() {
        fs::write(dir.path().join(format!("{i:06}.txt")), format!("0 0.5 0.5 {:.6} {:.6}\n", w / 608.0, h / 608.0))
            .map_err(|e| e.to_string())?;
    }
    let out = Command::new(env!("CARGO_BIN_EXE_airforge")).arg("anchors").arg(dir.path()).output().map_err(|e| e.to_string())?;
    let stdout = String::from_utf8_lossy(&out.stdout);
    ensure!(out.status.success() && stdout.starts_with("9 anchors"), "default anchors run: {stdout}");

    let truth = [(12.0, 18.0), (60.0, 45.0), (180.0, 150.0)];
    let three: Vec<(f64, f64)> = (0..600)
        .map(|i| {
            let (w, h) = truth[i % 3];
            (w * (1.0 + 0.05 * rng.normal()), h * (1.0 + 0.05 * rng.normal()))
        })
        .collect();
    let mut objectives = Vec::new();
    for seed in 0..20 {
        objectives.push(cluster_anchors(&three, 3, AnchorDistance::Iou, seed).map_err(|e| e.to_string())?.objective);
    }
    let lo = objectives.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = objectives.iter().cloned().fold(0.0, f64::max);
    let spread = hi / lo - 1.0;
    ensure!(spread <= 0.05, "3-cluster objective spread {:.2}%", spread * 100.0);
    Ok(format!("k=1 mean exact; {runs} runs non-increasing; default k=9; 3-cluster spread {:.3}%", spread * 100.0))
}

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("config.json");
    fs::write(
        &cfg,
        r#"{"dataset": {"target_images": 24, "textures": 3},
            "environments": [
              {"kind": "sky", "name": "a", "condition": "clear_day", "sun_azimuth": 135, "sun_elevation": 55, "width": 64},
              {"kind": "sky", "name": "b", "condition": "twilight", "sun_azimuth": 90, "sun_elevation": -4, "width": 64}],
            "render": {"spp": 4, "width": 48, "height": 48}}"#,
    )
    .map_err(|e| e.to_string())?;
    let generate = |name: &str, workers: &str| -> Result<Vec<(PathBuf, Vec<u8>)>, String> {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_airforge"))
            .args(["--seed", "42", "generate", "-c"])
            .arg(&cfg)
            .arg("-o")
            .arg(&out)
            .args(["-w", workers])
            .env_remove("AIRFORGE_THREADS")
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(status.status.success(), "generate failed: {}", String::from_utf8_lossy(&status.stderr));
        Ok(tree(&out))
    };
    let a = generate("run1", "1")?;
    let b = generate("run2", "1")?;
    let c = generate("run8", "8")?;
    ensure!(a.iter().any(|(p, _)| p == Path::new("manifest.json")), "no manifest written");
    ensure!(a == b, "two runs with 1 worker differ");
    ensure!(a == c, "1 and 8 workers differ");
    let manifest = Manifest::load(&dir.path().join("run1/manifest.json")).map_err(|e| e.to_string())?;
    ensure!(validate(&dir.path().join("run1")).map_err(|e| e.to_string())?.is_valid(), "dataset fails validation");
    Ok(format!("{} files identical across 2 runs and 1 vs 8 workers ({} images)", a.len(), manifest.records.len()))
}

fn format_round_trips() -> Outcome {
    let mut rng = Stream::new(21);
    let (w, h) = (608u32, 480u32);
    let anns: Vec<Annotation> = (0..1000)
        .map(|i| {
            let (x, y) = (rng.uniform(0.0, 560.0), rng.uniform(0.0, 440.0));
            let bbox = BBox2D::new(x, y, x + rng.uniform(0.5, 48.0), y + rng.uniform(0.5, 40.0)).unwrap();
            Annotation { image_id: i / 10, instance_id: (i % 10) as u32, class_id: 0, bbox, truncated: false }
        })
        .collect();
    let parsed = parse_yolo(&write_yolo(&anns, w, h).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (a, p) in anns.iter().zip(&parsed) {
        let (cx, cy) = a.bbox.center();
        for d in [p.cx - cx / w as f64, p.cy - cy / h as f64, p.w - a.bbox.width() / w as f64, p.h - a.bbox.height() / h as f64] {
            worst = worst.max(d.abs());
        }
    }
    ensure!(parsed.len() == anns.len() && worst <= 1e-5, "YOLO worst error {worst:e}");

    let images: Vec<CocoImage> =
        (0..100).map(|id| CocoImage { id, file_name: format!("images/{id:06}.png"), width: w, height: h }).collect();
    let doc = write_coco(&anns, &images).map_err(|e| e.to_string())?;
    ensure!(parse_coco(&doc.to_json()).map_err(|e| e.to_string())? == doc, "COCO round trip differs");

    let mut hdr_worst = 0.0f64;
    for (i, cond) in SkyCondition::ALL.into_iter().enumerate() {
        let map = synthesize_sky(cond, 70.0 * i as f64, 30.0, 128, i as u64).map_err(|e| e.to_string())?;
        let back = decode_hdr(&encode_hdr(&map), "back").map_err(|e| e.to_string())?;
        for (a, b) in map.radiance.iter().zip(&back.radiance) {
            let m = a.max_component();
            if m > 0.0 {
                hdr_worst = hdr_worst.max((*a - *b).to_array().iter().fold(0.0f64, |acc, d| acc.max(d.abs())) / m);
            }
        }
    }
    ensure!(hdr_worst <= 0.01, "HDR worst relative error {hdr_worst:.4}");
    Ok(format!("YOLO worst {worst:.1e}; COCO identical; HDR worst {:.3}% of texel peak", hdr_worst * 100.0))
}

fn illumination_perturbation() -> Outcome {
    let mut rng = Stream::new(8);
    for i in 0..10 {
        let (width, height) = (8 + rng.below(56) as u32, 8 + rng.below(56) as u32);
        let img = RgbImage { width, height, data: (0..width * height * 3).map(|_| rng.below(256) as u8).collect() };
        for mode in [ExposureMode::Overexposed, ExposureMode::Underexposed] {
            let same = perturb_illumination(&img, mode, 1.0).map_err(|e| e.to_string())?;
            ensure!(same == img, "image {i}: strength 1.0 changed bytes ({mode})");
            let out = perturb_illumination(&img, mode, mode.default_strength()).map_err(|e| e.to_string())?;
            let mut pairs: Vec<(u8, u8)> = img.data.iter().cloned().zip(out.data.iter().cloned()).collect();
            pairs.sort();
            ensure!(pairs.windows(2).all(|p| p[0].1 <= p[1].1), "image {i}: mapping not monotone ({mode})");
        }
    }
    Ok("10 images: identity at 1.0, monotone in both modes".to_string())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("dataset arithmetic", dataset_arithmetic),
        ("parameter ranges", parameter_ranges),
        ("white furnace", white_furnace),
        ("renderer oracle", renderer_oracle),
        ("label oracle", label_oracle),
        ("metric oracle", metric_oracle),
        ("anchor clustering", anchor_clustering),
        ("determinism", determinism),
        ("format round-trips", format_round_trips),
        ("illumination perturbation", illumination_perturbation),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !only.is_empty() && !only.iter().any(|o| name.contains(o.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
