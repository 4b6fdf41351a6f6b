use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use airforge::image::RgbImage;
use airforge::labeler::{write_coco, Annotation, CocoImage};
use airforge::scene::BBox2D;

fn airforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_airforge"))
        .args(args)
        .env_remove("AIRFORGE_THREADS")
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = airforge(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Compares against `tests/golden/<name>.txt`; `UPDATE_GOLDEN=1` rewrites it.
fn check_golden(name: &str, actual: &str) {
    let path = golden_dir().join(format!("{name}.txt"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(golden_dir()).unwrap();
        fs::write(&path, actual).unwrap();
        return;
    }
    let want = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
    assert_eq!(actual, want, "help for `{name}` changed; rerun with UPDATE_GOLDEN=1 if intended");
}

#[test]
fn help_matches_golden_files() {
    check_golden("help", &ok(&["--help"]));
    for sub in ["generate", "assets", "validate", "eval", "anchors", "perturb"] {
        check_golden(sub, &ok(&[sub, "--help"]));
    }
}

const MINIMAL: &str = r#"{
  "dataset": {"target_images": 1, "textures": 1},
  "environments": [{"kind": "sky", "name": "sky", "condition": "clear_day",
                    "sun_azimuth": 120, "sun_elevation": 40, "width": 64}],
  "render": {"spp": 2, "max_depth": 2, "width": 32, "height": 32}
}"#;

fn minimal_config(dir: &Path) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, MINIMAL).unwrap();
    p
}

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
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

#[test]
fn generate_minimal_config_writes_one_image() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = minimal_config(dir.path());
    let out = dir.path().join("out");
    let stdout = ok(&["generate", "-c", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert!(stdout.contains("1 images"), "{stdout}");
    assert!(out.join("images/000000.png").is_file());
    assert!(out.join("labels/000000.txt").is_file());
    assert!(out.join("manifest.json").is_file() && out.join("annotations.json").is_file());
    let png = RgbImage::read_png(out.join("images/000000.png")).unwrap();
    assert_eq!((png.width, png.height), (32, 32));
    assert!(ok(&["validate", out.to_str().unwrap()]).contains("0 violation(s)"));
}

#[test]
fn dry_run_prints_plan_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let stdout = ok(&["generate", "--dry-run", "-o", out.to_str().unwrap()]);
    assert!(stdout.contains("320 combinations") && stdout.contains("32000 images"), "{stdout}");
    assert!(!out.join("images").exists());
}

#[test]
fn fixed_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = minimal_config(dir.path());
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        ok(&["--seed", "42", "generate", "-c", cfg.to_str().unwrap(), "-o", out.to_str().unwrap(), "-w", workers, "--target-images", "4", "--textures", "2"]);
        files(&out)
    };
    let a = run("a", "1");
    assert_eq!(a.len(), 2 * 4 + 2);
    assert_eq!(a, run("b", "3"));
    let cfg_seed = ok(&["generate", "-c", cfg.to_str().unwrap(), "-o", dir.path().join("c").to_str().unwrap(), "--target-images", "4", "--textures", "2"]);
    assert!(!cfg_seed.is_empty());
    assert_ne!(a, files(&dir.path().join("c")));
}

#[test]
fn missing_config_names_path() {
    let out = airforge(&["generate", "-c", "/nonexistent/airforge.json", "-o", "/tmp/unused"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/airforge.json"));
}

#[test]
fn validate_fails_on_corrupt_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = minimal_config(dir.path());
    let out = dir.path().join("out");
    ok(&["generate", "-c", cfg.to_str().unwrap(), "-o", out.to_str().unwrap(), "--target-images", "2", "--textures", "2"]);
    fs::remove_file(out.join("images/000001.png")).unwrap();
    let v = airforge(&["validate", out.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&v.stdout).contains("000001.png"));
    assert!(!airforge(&["validate", dir.path().join("nothing").to_str().unwrap()]).status.success());
}

fn ground_truth(dir: &Path) -> (PathBuf, Vec<Annotation>) {
    let images: Vec<CocoImage> =
        (0..3).map(|id| CocoImage { id, file_name: format!("images/{id:06}.png"), width: 100, height: 100 }).collect();
    let anns: Vec<Annotation> = [(0, [10.0, 10.0, 30.0, 40.0]), (1, [50.0, 20.0, 90.0, 60.0]), (2, [5.0, 60.0, 25.0, 95.0])]
        .iter()
        .map(|&(image_id, b)| Annotation {
            image_id,
            instance_id: 0,
            class_id: 0,
            bbox: BBox2D::new(b[0], b[1], b[2], b[3]).unwrap(),
            truncated: false,
        })
        .collect();
    let p = dir.join("gt.json");
    fs::write(&p, write_coco(&anns, &images).unwrap().to_json()).unwrap();
    (p, anns)
}

fn eval(dir: &Path, gt: &Path, dets: &str) -> (String, serde_json::Value) {
    let dp = dir.join("dets.txt");
    fs::write(&dp, dets).unwrap();
    let rp = dir.join("report.json");
    let stdout = ok(&["eval", "--gt", gt.to_str().unwrap(), "--detections", dp.to_str().unwrap(), "--report", rp.to_str().unwrap()]);
    (stdout, serde_json::from_str(&fs::read_to_string(rp).unwrap()).unwrap())
}

#[test]
fn eval_perfect_empty_and_unknown() {
    let dir = tempfile::tempdir().unwrap();
    let (gt, anns) = ground_truth(dir.path());
    let perfect: String = anns
        .iter()
        .map(|a| format!("{} 0 0.9 {} {} {} {}\n", a.image_id, a.bbox.x_min, a.bbox.y_min, a.bbox.x_max, a.bbox.y_max))
        .collect();
    let (stdout, _) = eval(dir.path(), &gt, &perfect);
    assert!(stdout.contains("mAP@0.50 = 1.000"), "{stdout}");

    let (stdout, report) = eval(dir.path(), &gt, "# nothing detected\n");
    assert!(stdout.contains("mAP@0.50 = 0.000"), "{stdout}");
    let class = &report["result"]["classes"][0];
    assert_eq!((class["fn"].as_u64(), class["num_gt"].as_u64()), (Some(3), Some(3)));

    let with_unknown = format!("{perfect}7 0 0.95 10 10 30 40\n");
    let (_, report) = eval(dir.path(), &gt, &with_unknown);
    assert_eq!(report["unknown_image_detections"], 1);
    assert_eq!(report["result"]["classes"][0]["fp"], 1);
    assert!(report["result"]["map"].as_f64().unwrap() < 1.0);
}

fn write_labels(dir: &Path, sizes: &[(f64, f64)]) -> PathBuf {
    let labels = dir.join("labels");
    fs::create_dir_all(&labels).unwrap();
    for (i, (w, h)) in sizes.iter().enumerate() {
        fs::write(labels.join(format!("{i:06}.txt")), format!("0 0.5 0.5 {w:.6} {h:.6}\n")).unwrap();
    }
    labels
}

#[test]
fn anchors_cli() {
    let dir = tempfile::tempdir().unwrap();
    let same = write_labels(&dir.path().join("same"), &[(0.125, 0.25); 6]);
    let stdout = ok(&["anchors", same.to_str().unwrap(), "-k", "1"]);
    assert!(stdout.contains("0.125000,0.250000  76.0,152.0"), "{stdout}");

    let five = write_labels(&dir.path().join("five"), &[(0.1, 0.1), (0.2, 0.1), (0.3, 0.2), (0.4, 0.5), (0.6, 0.3)]);
    let out = airforge(&["anchors", five.to_str().unwrap(), "-k", "10"]);
    assert!(!out.status.success());

    let sizes: Vec<(f64, f64)> = (0..40).map(|i| (0.02 + 0.01 * i as f64, 0.03 + 0.007 * (i % 13) as f64)).collect();
    let many = write_labels(&dir.path().join("many"), &sizes);
    let stdout = ok(&["anchors", many.to_str().unwrap()]);
    assert!(stdout.starts_with("9 anchors"), "{stdout}");
    assert_eq!(stdout.lines().count(), 10);
}

#[test]
fn perturb_cli() {
    let dir = tempfile::tempdir().unwrap();
    let img = RgbImage { width: 8, height: 8, data: (0..192).map(|i| (i % 128) as u8).collect() };
    let src = dir.path().join("dark.png");
    img.write_png(&src).unwrap();

    ok(&["perturb", src.to_str().unwrap(), "--strength", "1.0"]);
    assert_eq!(RgbImage::read_png(dir.path().join("dark.overexposed.png")).unwrap(), img);

    let out = dir.path().join("out");
    ok(&["perturb", dir.path().to_str().unwrap(), "-o", out.to_str().unwrap()]);
    let bright = RgbImage::read_png(out.join("dark.overexposed.png")).unwrap();
    assert!(bright.data.iter().zip(&img.data).all(|(b, a)| b >= a));
    assert!(bright.data.iter().map(|&b| b as u64).sum::<u64>() > img.data.iter().map(|&b| b as u64).sum::<u64>());
    // Already perturbed copies are not perturbed again.
    assert_eq!(fs::read_dir(&out).unwrap().count(), 1);

    assert!(!airforge(&["perturb", dir.path().join("missing").to_str().unwrap()]).status.success());
}
