//! Image ingestion and the flat feature-matrix dataset.
//!
//! Each image becomes one row: gray conversion, bilinear resize to
//! `side × side`, row-major flatten, then division by 255. Rows are stacked
//! into a [`Dataset`] whose text form carries the label in the last column.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView1, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Row-major 8-bit grayscale image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::arg(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Image where every pixel is computed from its `(row, col)` position.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Intensity at `(row, col)`.
    pub fn get(&self, row: u32, col: u32) -> u8 {
        self.pixels[row as usize * self.width as usize + col as usize]
    }
}

/// Gray level from an RGB triple using the ITU-R 601 luma weights.
pub fn luminance(r: u8, g: u8, b: u8) -> u8 {
    let y = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
    y.round().clamp(0.0, 255.0) as u8
}

/// Decode a raster image (PNG, JPEG, BMP, GIF, TIFF) into gray.
///
/// Color images go through [`luminance`]; alpha is ignored. 16-bit gray
/// inputs are scaled down to 8 bits.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let decoded = image::load_from_memory(&bytes).map_err(|source| Error::Format {
        path: path.to_path_buf(),
        source,
    })?;
    let (width, height) = (decoded.width(), decoded.height());
    let pixels = if decoded.color().has_color() {
        decoded
            .to_rgb8()
            .pixels()
            .map(|p| luminance(p[0], p[1], p[2]))
            .collect()
    } else {
        decoded.to_luma8().into_raw()
    };
    GrayImage::new(width, height, pixels)
}

/// Bilinear resampling with pixel-center alignment.
///
/// Output pixel `(x, y)` samples the source at
/// `((x + 0.5) · sw / tw − 0.5, (y + 0.5) · sh / th − 0.5)`, clamped to the
/// source grid, so a same-size resize is the identity.
pub fn resize_image(img: &GrayImage, target_w: u32, target_h: u32) -> Result<GrayImage> {
    if target_w == 0 || target_h == 0 {
        return Err(Error::arg(format!(
            "resize target must be positive, got {target_w}x{target_h}"
        )));
    }
    if img.width == target_w && img.height == target_h {
        return Ok(img.clone());
    }

    let axis = |src: u32, dst: u32| -> Vec<(usize, usize, f64)> {
        let scale = f64::from(src) / f64::from(dst);
        let max = f64::from(src - 1);
        (0..dst)
            .map(|t| {
                let s = ((f64::from(t) + 0.5) * scale - 0.5).clamp(0.0, max);
                let lo = s.floor() as usize;
                let hi = (lo + 1).min(src as usize - 1);
                (lo, hi, s - lo as f64)
            })
            .collect()
    };
    let xs = axis(img.width, target_w);
    let ys = axis(img.height, target_h);

    let w = img.width as usize;
    let px = |r: usize, c: usize| f64::from(img.pixels[r * w + c]);
    let mut out = Vec::with_capacity(target_w as usize * target_h as usize);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let top = px(y0, x0) * (1.0 - fx) + px(y0, x1) * fx;
            let bottom = px(y1, x0) * (1.0 - fx) + px(y1, x1) * fx;
            let v = top * (1.0 - fy) + bottom * fy;
            out.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    GrayImage::new(target_w, target_h, out)
}

/// Row-major flatten: element `r · width + c` is pixel `(r, c)`.
pub fn flatten(img: &GrayImage) -> Vec<u8> {
    img.pixels.clone()
}

/// Inverse of [`flatten`].
pub fn unflatten(raw: &[u8], width: u32, height: u32) -> Result<GrayImage> {
    GrayImage::new(width, height, raw.to_vec())
}

/// Scale intensities to `[0, 1]` by dividing by 255.
pub fn normalize(raw: &[u8]) -> Vec<f64> {
    raw.iter().map(|&v| f64::from(v) / 255.0).collect()
}

/// Map `[0, 1]` features back to the nearest intensity.
pub fn denormalize(features: &[f64]) -> Result<Vec<u8>> {
    features
        .iter()
        .map(|&v| {
            if (0.0..=1.0).contains(&v) {
                Ok((v * 255.0).round() as u8)
            } else {
                Err(Error::arg(format!("feature {v} outside [0, 1]")))
            }
        })
        .collect()
}

/// Full per-image preprocessing: load, resize to `side × side`, flatten,
/// normalize.
pub fn preprocess_image(path: impl AsRef<Path>, side: u32) -> Result<Vec<f64>> {
    let img = load_image(path)?;
    let resized = resize_image(&img, side, side)?;
    Ok(normalize(&flatten(&resized)))
}

/// `n × d` feature matrix with one binary label per row.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Vec<u8>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::arg(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::arg(format!("label {bad} is not 0 or 1")));
        }
        Ok(Self { features, labels })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    /// `(healthy, tumor)` row counts.
    pub fn label_counts(&self) -> (usize, usize) {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        (self.labels.len() - ones, ones)
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn into_parts(self) -> (Array2<f64>, Vec<u8>) {
        (self.features, self.labels)
    }
}

/// Image files in `dir`, sorted by file name. Hidden files are skipped.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let hidden = entry.file_name().to_string_lossy().starts_with('.');
        if !hidden && path.is_file() {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

/// Build a dataset from a directory of tumor images (label 1) and one of
/// healthy images (label 0). Tumor rows come first; within a directory rows
/// follow file-name order.
pub fn build_dataset(tumor_dir: impl AsRef<Path>, healthy_dir: impl AsRef<Path>, side: u32) -> Result<Dataset> {
    if side == 0 {
        return Err(Error::arg("side must be positive"));
    }
    let tumor = list_images(tumor_dir.as_ref())?;
    let healthy = list_images(healthy_dir.as_ref())?;
    let labelled: Vec<(PathBuf, u8)> = tumor
        .into_iter()
        .map(|p| (p, 1))
        .chain(healthy.into_iter().map(|p| (p, 0)))
        .collect();
    if labelled.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let d = side as usize * side as usize;
    let rows = labelled
        .par_iter()
        .map(|(path, _)| preprocess_image(path, side))
        .collect::<Result<Vec<_>>>()?;

    let mut features = Array2::<f64>::zeros((rows.len(), d));
    for (mut dst, src) in features.axis_iter_mut(Axis(0)).zip(&rows) {
        dst.assign(&ArrayView1::from(src.as_slice()));
    }
    Dataset::new(features, labelled.into_iter().map(|(_, l)| l).collect())
}

/// Write `ds` as text: one line per row, `d` features with six decimals,
/// then the integer label, comma separated.
pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut line = String::with_capacity(ds.d() * 9 + 4);
    for (row, label) in ds.features.axis_iter(Axis(0)).zip(&ds.labels) {
        line.clear();
        for v in row {
            // writing to a String cannot fail
            let _ = write!(line, "{v:.6},");
        }
        let _ = writeln!(line, "{label}");
        out.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Read a file written by [`save_dataset`].
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text)
}

/// Parse the dataset text format. Blank lines are ignored; every other line
/// must have the same number of fields (at least two).
pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut columns = None;

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let cols = *columns.get_or_insert(fields.len());
        if cols < 2 {
            return Err(Error::parse(lineno, "need at least one feature and a label"));
        }
        if fields.len() != cols {
            return Err(Error::parse(
                lineno,
                format!("expected {cols} fields, found {}", fields.len()),
            ));
        }
        let (label, feats) = fields.split_last().expect("cols >= 2");
        for tok in feats {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(lineno, format!("non-numeric feature {tok:?}")))?;
            if !v.is_finite() {
                return Err(Error::parse(lineno, format!("non-finite feature {tok:?}")));
            }
            values.push(v);
        }
        labels.push(parse_label(label).ok_or_else(|| {
            Error::parse(lineno, format!("label {label:?} is not 0 or 1"))
        })?);
    }

    let Some(cols) = columns else {
        return Err(Error::EmptyDataset);
    };
    let features = Array2::from_shape_vec((labels.len(), cols - 1), values)
        .expect("row lengths checked while parsing");
    Dataset::new(features, labels)
}

fn parse_label(tok: &str) -> Option<u8> {
    match tok {
        "0" => Some(0),
        "1" => Some(1),
        _ => match tok.parse::<f64>() {
            Ok(0.0) => Some(0),
            Ok(1.0) => Some(1),
            _ => None,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn luminance_of_primaries() {
        assert_eq!(luminance(255, 255, 255), 255);
        assert_eq!(luminance(0, 0, 0), 0);
        assert_eq!(luminance(255, 0, 0), 76);
    }

    #[test]
    fn flatten_is_row_major() {
        let img = GrayImage::new(2, 2, vec![1, 2, 3, 4]).unwrap();
        assert_eq!(flatten(&img), vec![1, 2, 3, 4]);
        let img = GrayImage::from_fn(3, 2, |r, c| (10 * r + c) as u8).unwrap();
        let flat = flatten(&img);
        for r in 0..2 {
            for c in 0..3 {
                assert_eq!(flat[(r * 3 + c) as usize], img.get(r, c));
            }
        }
        let strip = GrayImage::new(5, 1, vec![9, 8, 7, 6, 5]).unwrap();
        assert_eq!(flatten(&strip), vec![9, 8, 7, 6, 5]);
    }

    #[test]
    fn canonical_row_length() {
        let img = GrayImage::new(300, 300, vec![0; 90_000]).unwrap();
        assert_eq!(flatten(&img).len(), 90_000);
    }

    #[test]
    fn normalize_endpoints() {
        let v = normalize(&[0, 255, 128]);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[1], 1.0);
        assert!((v[2] - 0.501_960_784_313_725_5).abs() < 1e-15);
        assert!(normalize(&[17; 6]).windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn denormalize_rejects_out_of_range() {
        assert!(matches!(denormalize(&[1.5]), Err(Error::InvalidArgument(_))));
        assert!(matches!(denormalize(&[-0.1]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn invalid_images_rejected() {
        assert!(GrayImage::new(0, 3, vec![]).is_err());
        assert!(matches!(
            GrayImage::new(2, 2, vec![1, 2, 3]),
            Err(Error::DimensionMismatch { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn resize_identity_and_constant() {
        let img = GrayImage::from_fn(300, 300, |r, c| ((r * 7 + c * 13) % 256) as u8).unwrap();
        assert_eq!(resize_image(&img, 300, 300).unwrap(), img);

        let flat = GrayImage::new(37, 23, vec![7; 37 * 23]).unwrap();
        for (w, h) in [(1, 1), (10, 90), (300, 300), (74, 11)] {
            let out = resize_image(&flat, w, h).unwrap();
            assert_eq!((out.width(), out.height()), (w, h));
            assert!(out.pixels().iter().all(|&p| p == 7));
        }
    }

    #[test]
    fn resize_rejects_zero_target() {
        let img = GrayImage::new(2, 2, vec![0; 4]).unwrap();
        assert!(matches!(resize_image(&img, 0, 5), Err(Error::InvalidArgument(_))));
        assert!(matches!(resize_image(&img, 5, 0), Err(Error::InvalidArgument(_))));
    }

    /// Independent bilinear reference: for every output pixel, accumulate the
    /// four neighbouring source pixels with explicit area weights.
    fn reference_bilinear(src: &GrayImage, tw: u32, th: u32) -> Vec<f64> {
        let (sw, sh) = (src.width() as i64, src.height() as i64);
        let mut out = vec![0.0; (tw * th) as usize];
        for ty in 0..th as i64 {
            for tx in 0..tw as i64 {
                let cx = ((tx as f64 + 0.5) * sw as f64 / tw as f64 - 0.5).max(0.0).min((sw - 1) as f64);
                let cy = ((ty as f64 + 0.5) * sh as f64 / th as f64 - 0.5).max(0.0).min((sh - 1) as f64);
                let mut acc = 0.0;
                for sy in 0..sh {
                    let wy = (1.0 - (cy - sy as f64).abs()).max(0.0);
                    if wy == 0.0 {
                        continue;
                    }
                    for sx in (cx.floor() as i64)..=(cx.ceil() as i64).min(sw - 1) {
                        let wx = (1.0 - (cx - sx as f64).abs()).max(0.0);
                        acc += wx * wy * f64::from(src.get(sy as u32, sx as u32));
                    }
                }
                out[(ty * tw as i64 + tx) as usize] = acc;
            }
        }
        out
    }

    #[test]
    fn checkerboard_downscale_matches_reference() {
        let board = GrayImage::from_fn(600, 600, |r, c| if (r + c) % 2 == 0 { 255 } else { 0 }).unwrap();
        let out = resize_image(&board, 300, 300).unwrap();
        let reference = reference_bilinear(&board, 300, 300);
        for (got, want) in out.pixels().iter().zip(&reference) {
            assert!((f64::from(*got) - want).abs() <= 1.0, "{got} vs {want}");
        }
    }

    #[test]
    fn upscale_matches_reference() {
        let img = GrayImage::from_fn(13, 9, |r, c| ((r * 31 + c * 17) % 256) as u8).unwrap();
        let out = resize_image(&img, 40, 27).unwrap();
        let reference = reference_bilinear(&img, 40, 27);
        for (got, want) in out.pixels().iter().zip(&reference) {
            assert!((f64::from(*got) - want).abs() <= 1.0, "{got} vs {want}");
        }
    }

    #[test]
    fn parse_rejects_bad_label_and_width() {
        let err = parse_dataset("0.1,0.2,1\n0.3,0.4,2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_dataset("0.1,0.2,1\n0.3,0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_dataset("0.1,abc,1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        assert!(matches!(parse_dataset("\n\n"), Err(Error::EmptyDataset)));
    }

    #[test]
    fn dataset_rejects_non_binary_labels() {
        assert!(Dataset::new(Array2::zeros((2, 3)), vec![0, 3]).is_err());
        assert!(Dataset::new(Array2::zeros((2, 3)), vec![0]).is_err());
    }

    proptest! {
        #[test]
        fn flatten_roundtrip(w in 1u32..20, h in 1u32..20, seed in any::<u64>()) {
            let img = GrayImage::from_fn(w, h, |r, c| (seed.wrapping_mul(u64::from(r * 31 + c + 1)) >> 13) as u8).unwrap();
            prop_assert_eq!(unflatten(&flatten(&img), w, h).unwrap(), img);
        }

        #[test]
        fn normalize_monotone_and_invertible(raw in proptest::collection::vec(any::<u8>(), 1..64)) {
            let norm = normalize(&raw);
            prop_assert!(norm.iter().all(|v| (0.0..=1.0).contains(v)));
            for (a, b) in raw.iter().zip(raw.iter().skip(1)) {
                let (na, nb) = (f64::from(*a) / 255.0, f64::from(*b) / 255.0);
                prop_assert_eq!(a.cmp(b), na.partial_cmp(&nb).unwrap());
            }
            prop_assert_eq!(denormalize(&norm).unwrap(), raw);
        }

        #[test]
        fn resize_constant_stays_constant(v in any::<u8>(), sw in 1u32..30, sh in 1u32..30, tw in 1u32..30, th in 1u32..30) {
            let img = GrayImage::new(sw, sh, vec![v; (sw * sh) as usize]).unwrap();
            let out = resize_image(&img, tw, th).unwrap();
            prop_assert!(out.pixels().iter().all(|&p| p == v));
        }
    }
}
