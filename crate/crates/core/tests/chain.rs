use dmcrop::dataset::{dataset_stats, parse_coco, parse_coco_results, write_coco_dataset, write_coco_detections};
use dmcrop::density::render_density;
use dmcrop::eval::{evaluate, EvalParams};
use dmcrop::fusion::fuse;
use dmcrop::mask::{crops_from_mask, density_mask, read_manifest, write_manifest};
use dmcrop::oracle::{oracle_detect, MissPolicy, Region};
use dmcrop::raster::{read_density, write_density};
use dmcrop::remap::{backproject_detections, crop_dataset};
use dmcrop::{CocoDataset, DensityMap, Detection, FusionParams, KernelSpec, MaskParams};

const COCO: &str = r#"{
  "images": [{"id": 1, "file_name": "street.jpg", "width": 320, "height": 240}],
  "categories": [{"id": 1, "name": "car"}, {"id": 2, "name": "pedestrian"}],
  "annotations": [
    {"id": 1, "image_id": 1, "category_id": 1, "bbox": [60, 60, 24, 12]},
    {"id": 2, "image_id": 1, "category_id": 1, "bbox": [90, 64, 24, 12]},
    {"id": 3, "image_id": 1, "category_id": 2, "bbox": [70, 80, 8, 16]},
    {"id": 4, "image_id": 1, "category_id": 2, "bbox": [84, 84, 8, 16]},
    {"id": 5, "image_id": 1, "category_id": 1, "bbox": [100, 84, 24, 12]},
    {"id": 6, "image_id": 1, "category_id": 1, "bbox": [62, 104, 24, 12]},
    {"id": 7, "image_id": 1, "category_id": 2, "bbox": [96, 102, 8, 16]},
    {"id": 8, "image_id": 1, "category_id": 1, "bbox": [270, 200, 20, 10]}
  ]
}"#;

fn dataset() -> CocoDataset {
    parse_coco(COCO.as_bytes()).unwrap().0
}

#[test]
fn cluster_becomes_one_crop_and_fusion_is_lossless() {
    let ds = dataset();
    let stats = dataset_stats(&ds).unwrap();
    let d64 = render_density(240, 320, ds.annotations(), &KernelSpec::class_wise(stats.clone())).unwrap();
    assert!((d64.sum() - 8.0).abs() < 0.05, "mass {}", d64.sum());

    let d: DensityMap = read_density(&write_density(&d64.cast())).unwrap();
    let (wh, ww) = stats.window_size();
    let mask = density_mask(&d, &MaskParams::new(wh, ww, 0.08).unwrap()).unwrap();
    let crops = crops_from_mask(&mask, 70, 1, 0.08);
    let listed = |cs: &[dmcrop::mask::CropRegion]| cs.iter().map(|c| (c.image_id, c.crop_index, c.rect, c.source_threshold)).collect::<Vec<_>>();
    assert_eq!(listed(&read_manifest(&write_manifest(&crops)).unwrap()), listed(&crops));
    assert!(!crops.is_empty());
    let cluster = crops.iter().find(|c| c.rect.to_box::<f64>().contains(&ds.annotations()[0].bbox)).expect("cluster crop");
    for a in &ds.annotations()[..7] {
        assert!(cluster.rect.to_box::<f64>().contains(&a.bbox), "{:?} outside {:?}", a.bbox, cluster.rect);
    }

    let crop_ds = crop_dataset(&ds, &crops, 0.5).unwrap();
    assert_eq!(crop_ds.images().len(), crops.len());
    let reparsed: CocoDataset = parse_coco(&write_coco_dataset(&crop_ds)).unwrap().0;
    assert_eq!(reparsed.annotations().len(), crop_ds.annotations().len());

    let none = MissPolicy::none();
    let global = oracle_detect(Region::FullImage(1), &ds, &none);
    let mut back: Vec<Detection> = Vec::new();
    for c in &crops {
        let local = oracle_detect(Region::Crop(c), &ds, &none);
        back.extend(backproject_detections(c, &local, 1.0, 320, 240).detections);
    }
    let fused = fuse(&global, &back, &FusionParams::default()).unwrap();
    let fused: Vec<Detection> = parse_coco_results(&write_coco_detections(&fused).unwrap()).unwrap();
    assert_eq!(fused.len(), 8);
    let r = evaluate(&fused, &ds, &EvalParams::default()).unwrap();
    assert_eq!(r.ap, Some(1.0));
}

#[test]
fn missed_global_objects_are_recovered_by_crops() {
    let ds = dataset();
    // every small object missed on the full image, none inside crops
    let global = oracle_detect(Region::FullImage(1), &ds, &MissPolicy { small: 1.0, ..MissPolicy::none() });
    let before = evaluate(&global, &ds, &EvalParams::default()).unwrap();

    let stats = dataset_stats(&ds).unwrap();
    let d: DensityMap = render_density(240, 320, ds.annotations(), &KernelSpec::class_wise(stats.clone())).unwrap().cast();
    let (wh, ww) = stats.window_size();
    let crops = crops_from_mask(&density_mask(&d, &MaskParams::new(wh, ww, 0.08).unwrap()).unwrap(), 70, 1, 0.08);
    let back: Vec<Detection> = crops
        .iter()
        .flat_map(|c| backproject_detections(c, &oracle_detect(Region::Crop(c), &ds, &MissPolicy::none()), 1.0, 320, 240).detections)
        .collect();
    let after = evaluate(&fuse(&global, &back, &FusionParams::default()).unwrap(), &ds, &EvalParams::default()).unwrap();
    assert!(after.ap.unwrap() > before.ap.unwrap_or(0.0), "{:?} vs {:?}", after.ap, before.ap);
}
