//! Synthetic COCO fixtures and helpers shared by the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::{json, Value};

pub const WIDTH: u32 = 640;
pub const HEIGHT: u32 = 480;
pub const CAR: u64 = 1;
pub const PEDESTRIAN: u64 = 2;
pub const BUS: u64 = 3;
/// Image of the clustered fixture that holds the bus.
pub const BUS_IMAGE: u64 = 3;
/// Larger than one cell of a 3 x 4 grid over 480 x 640 (160 x 160).
pub const BUS_BOX: [f64; 4] = [400.0, 260.0, 220.0, 180.0];

pub fn categories() -> Value {
    json!([
        { "id": CAR, "name": "car" },
        { "id": PEDESTRIAN, "name": "pedestrian" },
        { "id": BUS, "name": "bus" }
    ])
}

fn image(id: u64, width: u32, height: u32) -> Value {
    json!({ "id": id, "file_name": format!("img_{id:02}.jpg"), "width": width, "height": height })
}

/// `n_images` aerial-style scenes: tight clusters of cars and pedestrians plus a
/// few isolated objects. Image `BUS_IMAGE` also holds one bus, larger than a
/// uniform grid cell, away from the clusters.
pub fn clustered(n_images: u64, seed: u64) -> Value {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spread = Normal::new(0.0, 10.0).unwrap();
    let mut images = Vec::new();
    let mut annotations = Vec::new();
    let mut placed: Vec<[f64; 4]> = Vec::new();
    // Seen from above, objects never overlap; overlapping candidates are skipped.
    let push = |annotations: &mut Vec<Value>, placed: &mut Vec<[f64; 4]>, image_id: u64, cat: u64, b: [f64; 4]| {
        if placed.iter().any(|p| overlaps(p, &b)) {
            return;
        }
        placed.push(b);
        let id = annotations.len() as u64 + 1;
        annotations.push(json!({ "id": id, "image_id": image_id, "category_id": cat, "bbox": b }));
    };
    for image_id in 1..=n_images {
        images.push(image(image_id, WIDTH, HEIGHT));
        placed.clear();
        if image_id == BUS_IMAGE {
            push(&mut annotations, &mut placed, image_id, BUS, BUS_BOX);
        }
        let has_bus = image_id == BUS_IMAGE;
        let x_max = if has_bus { 300.0 } else { WIDTH as f64 - 100.0 };
        for _ in 0..3 {
            let (cx, cy) = (rng.gen_range(100.0..x_max), rng.gen_range(100.0..HEIGHT as f64 - 100.0));
            for _ in 0..rng.gen_range(12..=18) {
                let cat = if rng.gen_bool(0.5) { CAR } else { PEDESTRIAN };
                let (w, h) = if cat == CAR { (24.0, 12.0) } else { (8.0, 16.0) };
                let (w, h) = (w * rng.gen_range(0.8..1.2), h * rng.gen_range(0.8..1.2));
                let x = (cx + spread.sample(&mut rng) - w / 2.0).clamp(0.0, WIDTH as f64 - w);
                let y = (cy + spread.sample(&mut rng) - h / 2.0).clamp(0.0, HEIGHT as f64 - h);
                push(&mut annotations, &mut placed, image_id, cat, [x, y, w, h]);
            }
        }
        for _ in 0..3 {
            let (w, h) = (rng.gen_range(8.0..30.0), rng.gen_range(8.0..30.0));
            let (x, y) = (rng.gen_range(0.0..x_max - w), rng.gen_range(0.0..HEIGHT as f64 - h));
            push(&mut annotations, &mut placed, image_id, CAR, [x, y, w, h]);
        }
    }
    json!({ "images": images, "annotations": annotations, "categories": categories() })
}

fn overlaps(a: &[f64; 4], b: &[f64; 4]) -> bool {
    a[0] < b[0] + b[2] && b[0] < a[0] + a[2] && a[1] < b[1] + b[3] && b[1] < a[1] + a[3]
}

/// One bus on an empty road.
pub fn lone_bus(width: u32, height: u32, bbox: [f64; 4]) -> Value {
    json!({
        "images": [image(1, width, height)],
        "annotations": [{ "id": 1, "image_id": 1, "category_id": BUS, "bbox": bbox }],
        "categories": categories()
    })
}

pub fn write_json(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_vec(v).unwrap()).unwrap();
    p
}

pub fn dmcrop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dmcrop")).args(args).env_remove("DMNET_PROFILE").output().unwrap()
}

/// Runs the binary, panicking with its stderr on failure; returns stdout.
pub fn dmcrop_ok(args: &[&str]) -> String {
    let out = dmcrop(args);
    assert!(out.status.success(), "dmcrop {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

pub fn report(stdout: &str) -> Value {
    serde_json::from_str(stdout.trim()).unwrap()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
