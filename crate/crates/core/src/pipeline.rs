//! End-to-end model: image preprocessing, PCA projection and a classifier.

use std::fs;
use std::path::Path;

use crate::classifiers::{Algorithm, ClassifierModel, LineReader};
use crate::dataset::{preprocess_image, Dataset};
use crate::error::{check_dim, Error, Result};
use crate::pca::PcaModel;

const MAGIC: &str = "mriclass-pipeline 1";

#[derive(Clone, Debug)]
pub struct PipelineModel {
    side: u32,
    pca: PcaModel,
    classifier: ClassifierModel,
}

impl PipelineModel {
    /// Fit PCA and the classifier on every row of `ds`.
    pub fn fit(ds: &Dataset, side: u32, algorithm: &Algorithm, components: usize, seed: u64) -> Result<Self> {
        check_dim((side as usize) * (side as usize), ds.d())?;
        let pca = PcaModel::fit(ds.features().view(), components)?;
        let reduced = pca.transform(ds.features().view())?;
        let classifier = algorithm.fit(reduced.view(), ds.labels(), seed)?;
        Ok(Self { side, pca, classifier })
    }

    pub fn from_parts(side: u32, pca: PcaModel, classifier: ClassifierModel) -> Result<Self> {
        check_dim((side as usize) * (side as usize), pca.dim())?;
        check_dim(pca.n_components(), classifier.n_features())?;
        Ok(Self { side, pca, classifier })
    }

    pub fn side(&self) -> u32 {
        self.side
    }

    pub fn pca(&self) -> &PcaModel {
        &self.pca
    }

    pub fn classifier(&self) -> &ClassifierModel {
        &self.classifier
    }

    /// Predict from a normalized, flattened image of length `side²`.
    pub fn predict_features(&self, features: &[f64]) -> Result<u8> {
        let z = self.pca.transform_one(ndarray::ArrayView1::from(features))?;
        self.classifier.predict(z.view())
    }

    pub fn predict_image(&self, path: impl AsRef<Path>) -> Result<u8> {
        let features = preprocess_image(path, self.side)?;
        self.predict_features(&features)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC}\nside {}\n", self.side);
        self.pca.write_text(&mut out, true);
        out.push_str(&self.classifier.to_text());
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(MAGIC) {
            return Err(Error::parse(1, format!("expected {MAGIC:?}")));
        }
        let side = lines
            .next()
            .and_then(|l| l.trim().strip_prefix("side "))
            .and_then(|s| s.trim().parse::<u32>().ok())
            .ok_or_else(|| Error::parse(2, "expected \"side <pixels>\""))?;
        let (pca, used) = PcaModel::read_text(&mut lines, 3)?;
        let mut reader = LineReader::new(lines, 3 + used);
        let classifier = ClassifierModel::read(&mut reader)?;
        Self::from_parts(side, pca, classifier)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::TreeParams;
    use ndarray::Array2;

    fn tiny() -> Dataset {
        // 4×4 images: bright top half for label 1
        let n = 12;
        let x = Array2::from_shape_fn((n, 16), |(i, j)| {
            let bright = i % 2 == 1 && j < 8;
            let base = if bright { 0.8 } else { 0.2 };
            base + 0.01 * ((i * 7 + j * 3) % 5) as f64
        });
        let y = (0..n).map(|i| (i % 2) as u8).collect();
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn text_roundtrip() {
        let ds = tiny();
        for alg in Algorithm::defaults() {
            let alg = match alg {
                Algorithm::Svm(mut p) => {
                    p.kernel.gamma = crate::classifiers::GammaMode::Auto;
                    Algorithm::Svm(p)
                }
                other => other,
            };
            let model = PipelineModel::fit(&ds, 4, &alg, 3, 7).unwrap();
            let back = PipelineModel::from_text(&model.to_text()).unwrap();
            assert_eq!(back.side(), 4);
            for i in 0..ds.n() {
                let row = ds.row(i).to_vec();
                assert_eq!(model.predict_features(&row).unwrap(), back.predict_features(&row).unwrap());
            }
        }
    }

    #[test]
    fn rejects_wrong_side_and_garbage() {
        let ds = tiny();
        let alg = Algorithm::DecisionTree(TreeParams::default());
        assert!(matches!(PipelineModel::fit(&ds, 5, &alg, 2, 0), Err(Error::DimensionMismatch { .. })));
        let model = PipelineModel::fit(&ds, 4, &alg, 2, 0).unwrap();
        assert!(model.predict_features(&[0.0; 9]).is_err());
        assert!(matches!(PipelineModel::from_text("nope"), Err(Error::Parse { line: 1, .. })));
        let text = model.to_text().replace("classifier", "classifer");
        assert!(matches!(PipelineModel::from_text(&text), Err(Error::Parse { .. })));
    }
}
