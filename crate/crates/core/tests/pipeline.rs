mod common;

use mriclass::dataset::{build_dataset, load_image, preprocess_image};
use mriclass::{Algorithm, Error, PipelineModel};

#[test]
fn blob_model_separates_blob_from_blank() {
    let dir = tempfile::tempdir().unwrap();
    let side = 40;
    let (yes, no) = common::write_blob_dataset(dir.path(), 15, side, 11);
    let ds = build_dataset(&yes, &no, side).unwrap();
    assert_eq!(ds.label_counts(), (15, 15));
    assert_eq!(&ds.labels()[..15], &[1; 15]);

    let blob = dir.path().join("blob.png");
    common::write_blob_image(&blob, side, 77);
    let blank = dir.path().join("blank.png");
    common::write_png(&blank, side, vec![77; (side * side) as usize]);

    for alg in Algorithm::defaults() {
        let model = PipelineModel::fit(&ds, side, &alg, 8, 3).unwrap();
        let path = dir.path().join(format!("{}.model", alg.name()));
        model.save(&path).unwrap();
        let loaded = PipelineModel::load(&path).unwrap();
        assert_eq!(loaded.predict_image(&blob).unwrap(), 1, "{alg}");
        assert_eq!(loaded.predict_image(&blank).unwrap(), 0, "{alg}");
    }
}

#[test]
fn images_are_resized_and_converted() {
    let dir = tempfile::tempdir().unwrap();
    let rgb = dir.path().join("rgb.png");
    image::RgbImage::from_pixel(64, 48, image::Rgb([200, 100, 50])).save(&rgb).unwrap();
    let gray = load_image(&rgb).unwrap();
    assert_eq!((gray.width(), gray.height()), (64, 48));
    // round(0.299·200 + 0.587·100 + 0.114·50) = 124
    assert!(gray.pixels().iter().all(|&p| p == 124));

    let features = preprocess_image(&rgb, 30).unwrap();
    assert_eq!(features.len(), 900);
    assert!(features.iter().all(|&v| (v - 124.0 / 255.0).abs() < 1e-15));

    let bogus = dir.path().join("bogus.png");
    std::fs::write(&bogus, b"not an image").unwrap();
    assert!(matches!(load_image(&bogus), Err(Error::Format { .. })));
    assert!(matches!(load_image(dir.path().join("absent.png")), Err(Error::Io { .. })));
}
