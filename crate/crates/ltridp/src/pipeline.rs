//! End-to-end plumbing: dataset manifests, the on-disk feature store, the
//! model file format and the extract/train/evaluate pipeline steps shared
//! by the CLI.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::descriptor::{extract_feature, extract_lbp_feature, Bins};
use crate::error::{Error, Result};
use crate::eval::{cross_validate, evaluate_model, CvReport, EvalReport};
use crate::imaging::{load_image, resize_bilinear, GrayImage};
use crate::preprocess::{equalize, minmax_normalize};
use crate::svm::{train_model, SvmModel, TrainConfig};

pub const CANONICAL_SIZE: usize = 256;
pub const DESCRIPTOR_VERSION: u32 = 1;
pub const MODEL_FORMAT_VERSION: u32 = 1;

pub const LABEL_POS: &str = "bag";
pub const LABEL_NEG: &str = "nobag";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Descriptor {
    Ltridp,
    Lbp,
}

/// Preprocessing and descriptor settings that must travel with features
/// and models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractConfig {
    pub bins: Bins,
    pub resize: bool,
    pub equalize: bool,
    pub normalize: bool,
    pub descriptor: Descriptor,
}

impl ExtractConfig {
    pub fn new(bins: Bins) -> Self {
        Self {
            bins,
            resize: true,
            equalize: true,
            normalize: false,
            descriptor: Descriptor::Ltridp,
        }
    }

    pub fn feature_dim(&self) -> usize {
        match self.descriptor {
            Descriptor::Ltridp => 3 * self.bins.count(),
            Descriptor::Lbp => self.bins.count(),
        }
    }
}

pub fn parse_label(s: &str) -> Result<i8> {
    match s.trim() {
        LABEL_POS => Ok(1),
        LABEL_NEG => Ok(-1),
        other => Err(Error::Manifest(format!(
            "unknown label {other:?}, expected {LABEL_POS:?} or {LABEL_NEG:?}"
        ))),
    }
}

pub fn label_name(label: i8) -> &'static str {
    if label > 0 {
        LABEL_POS
    } else {
        LABEL_NEG
    }
}

/// CSV manifest `path,label` with labels `bag` / `nobag`. Paths must be
/// unique.
pub fn load_manifest(path: &Path) -> Result<Vec<(PathBuf, i8)>> {
    let file = File::open(path).map_err(|source| Error::Io { path: path.into(), source })?;
    let mut entries = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| Error::Io { path: path.into(), source })?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (entry_path, label) = line.rsplit_once(',').ok_or_else(|| {
            Error::Manifest(format!("line {}: expected `path,label`", lineno + 1))
        })?;
        let entry_path = entry_path.trim();
        if !seen.insert(entry_path.to_string()) {
            return Err(Error::Manifest(format!("duplicate path {entry_path:?}")));
        }
        entries.push((PathBuf::from(entry_path), parse_label(label)?));
    }
    if entries.is_empty() {
        return Err(Error::Manifest(format!("{}: empty manifest", path.display())));
    }
    Ok(entries)
}

/// Applies the configured preprocessing and descriptor to one image.
pub fn feature_for_image(img: &GrayImage, cfg: &ExtractConfig) -> Result<Vec<f64>> {
    let mut img = img.clone();
    if cfg.resize {
        img = resize_bilinear(&img, CANONICAL_SIZE, CANONICAL_SIZE)?;
    }
    if cfg.normalize {
        img = minmax_normalize(&img);
    }
    if cfg.equalize {
        img = equalize(&img);
    }
    match cfg.descriptor {
        Descriptor::Ltridp => extract_feature(&img, cfg.bins),
        Descriptor::Lbp => extract_lbp_feature(&img, cfg.bins),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreHeader {
    pub dim: usize,
    pub bins: Bins,
    pub descriptor: Descriptor,
    pub descriptor_version: u32,
    pub resize: bool,
    pub equalize: bool,
    pub normalize: bool,
}

impl StoreHeader {
    pub fn from_config(cfg: &ExtractConfig) -> Self {
        Self {
            dim: cfg.feature_dim(),
            bins: cfg.bins,
            descriptor: cfg.descriptor,
            descriptor_version: DESCRIPTOR_VERSION,
            resize: cfg.resize,
            equalize: cfg.equalize,
            normalize: cfg.normalize,
        }
    }

    pub fn to_config(&self) -> ExtractConfig {
        ExtractConfig {
            bins: self.bins,
            resize: self.resize,
            equalize: self.equalize,
            normalize: self.normalize,
            descriptor: self.descriptor,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoreRow {
    pub path: String,
    pub label: i8,
    pub values: Vec<f64>,
}

/// Persisted feature table: a `#`-prefixed JSON header line followed by
/// CSV rows `path,label,v0,...`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStore {
    pub header: StoreHeader,
    pub rows: Vec<StoreRow>,
}

impl FeatureStore {
    pub fn features(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.values.clone()).collect()
    }

    pub fn labels(&self) -> Vec<i8> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let io_err = |source| Error::Io { path: path.into(), source };
        let file = File::create(path).map_err(io_err)?;
        let mut out = BufWriter::new(file);
        let header = serde_json::to_string(&self.header).expect("header serializes");
        writeln!(out, "#{header}").map_err(io_err)?;
        for row in &self.rows {
            write!(out, "{},{}", row.path, row.label).map_err(io_err)?;
            for v in &row.values {
                write!(out, ",{v}").map_err(io_err)?;
            }
            writeln!(out).map_err(io_err)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|source| Error::Io { path: path.into(), source })?;
        let mut lines = BufReader::new(file).lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::Store("missing header line".into()))?
            .map_err(|source| Error::Io { path: path.into(), source })?;
        let header_json = header_line
            .strip_prefix('#')
            .ok_or_else(|| Error::Store("header line must start with '#'".into()))?;
        let header: StoreHeader = serde_json::from_str(header_json)
            .map_err(|e| Error::Store(format!("bad header: {e}")))?;
        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line.map_err(|source| Error::Io { path: path.into(), source })?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let row_path = fields
                .next()
                .ok_or_else(|| Error::Store(format!("line {}: missing path", lineno + 2)))?;
            let label: i8 = fields
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| Error::Store(format!("line {}: bad label", lineno + 2)))?;
            let values: Vec<f64> = fields
                .map(|f| f.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Store(format!("line {}: bad value: {e}", lineno + 2)))?;
            if values.len() != header.dim {
                return Err(Error::Store(format!(
                    "line {}: {} values, header says {}",
                    lineno + 2,
                    values.len(),
                    header.dim
                )));
            }
            rows.push(StoreRow { path: row_path.to_string(), label, values });
        }
        Ok(Self { header, rows })
    }
}

/// Extracts features for every manifest entry. Rows keep manifest order
/// regardless of the worker count; unreadable images are skipped with a
/// warning on stderr. Errors out only when every row fails.
pub fn extract_store(
    entries: &[(PathBuf, i8)],
    cfg: &ExtractConfig,
    jobs: usize,
) -> Result<FeatureStore> {
    use rayon::prelude::*;

    if entries.is_empty() {
        return Err(Error::Manifest("empty manifest".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Store(format!("thread pool: {e}")))?;
    let results: Vec<Result<Vec<f64>>> = pool.install(|| {
        entries
            .par_iter()
            .map(|(path, _)| feature_for_image(&load_image(path)?, cfg))
            .collect()
    });

    let mut rows = Vec::with_capacity(entries.len());
    for ((path, label), result) in entries.iter().zip(results) {
        match result {
            Ok(values) => rows.push(StoreRow {
                path: path.display().to_string(),
                label: *label,
                values,
            }),
            Err(e) => eprintln!("warning: skipping {}: {e}", path.display()),
        }
    }
    if rows.is_empty() {
        return Err(Error::Store("no manifest entry could be extracted".into()));
    }
    Ok(FeatureStore { header: StoreHeader::from_config(cfg), rows })
}

/// On-disk model document. Feature configuration travels with the model
/// and overrides CLI flags at predict time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    #[serde(flatten)]
    pub model: SvmModel,
    pub hyperparameters: TrainConfig,
    pub label_names: Vec<String>,
    pub feature_dim: usize,
    pub extract: StoreHeader,
}

impl ModelFile {
    pub fn new(model: SvmModel, cfg: &TrainConfig, header: &StoreHeader) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            feature_dim: model.feature_dim(),
            model,
            hyperparameters: cfg.clone(),
            label_names: vec![LABEL_NEG.to_string(), LABEL_POS.to_string()],
            extract: header.clone(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("model serializes");
        std::fs::write(path, json).map_err(|source| Error::Io { path: path.into(), source })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path)
            .map_err(|source| Error::Io { path: path.into(), source })?;
        let doc: Self =
            serde_json::from_str(&json).map_err(|e| Error::Model(format!("{e}")))?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported format_version {}",
                doc.format_version
            )));
        }
        Ok(doc)
    }
}

/// Validation scheme for `train_and_report`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validation {
    Split70,
    Cv10,
    None,
}

/// Training outcome: the final model plus whichever report the validation
/// scheme produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrainReport {
    Holdout(EvalReport),
    CrossValidation(CvReport),
    Training(EvalReport),
}

/// Runs the selected validation scheme over a feature store and returns
/// the final model with its report. Split70 reports on the held-out 30%
/// and keeps the model trained on the 70%; Cv10 reports fold means and
/// retrains the final model on all rows.
pub fn train_and_report(
    store: &FeatureStore,
    cfg: &TrainConfig,
    validation: Validation,
    seed: u64,
) -> Result<(ModelFile, TrainReport)> {
    let features = store.features();
    let labels = store.labels();
    match validation {
        Validation::Split70 => {
            let (train_idx, test_idx) = crate::eval::split_70_30(&labels, seed)?;
            let train_x: Vec<Vec<f64>> = train_idx.iter().map(|&i| features[i].clone()).collect();
            let train_y: Vec<i8> = train_idx.iter().map(|&i| labels[i]).collect();
            let test_x: Vec<Vec<f64>> = test_idx.iter().map(|&i| features[i].clone()).collect();
            let test_y: Vec<i8> = test_idx.iter().map(|&i| labels[i]).collect();
            let model = train_model(&train_x, &train_y, cfg)?;
            let report = evaluate_model(&model, &test_x, &test_y)?;
            Ok((ModelFile::new(model, cfg, &store.header), TrainReport::Holdout(report)))
        }
        Validation::Cv10 => {
            let report = cross_validate(&features, &labels, 10, cfg, seed)?;
            let model = train_model(&features, &labels, cfg)?;
            Ok((
                ModelFile::new(model, cfg, &store.header),
                TrainReport::CrossValidation(report),
            ))
        }
        Validation::None => {
            let model = train_model(&features, &labels, cfg)?;
            let report = evaluate_model(&model, &features, &labels)?;
            Ok((ModelFile::new(model, cfg, &store.header), TrainReport::Training(report)))
        }
    }
}

/// Evaluates a model file against a feature store, enforcing the header
/// contract.
pub fn evaluate_store(doc: &ModelFile, store: &FeatureStore) -> Result<EvalReport> {
    if store.header.dim != doc.feature_dim {
        return Err(Error::DimMismatch { expected: doc.feature_dim, got: store.header.dim });
    }
    evaluate_model(&doc.model, &store.features(), &store.labels())
}

/// Classifies one image using the preprocessing recorded in the model.
pub fn predict_image(doc: &ModelFile, path: &Path) -> Result<(i8, f64)> {
    let feature = feature_for_image(&load_image(path)?, &doc.extract.to_config())?;
    let value = doc.model.decision_value(&feature)?;
    Ok((if value >= 0.0 { 1 } else { -1 }, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::KernelSpec;

    fn write_pgm(dir: &Path, name: &str, img: &GrayImage) -> PathBuf {
        let path = dir.join(name);
        crate::imaging::save_pgm(img, &path).unwrap();
        path
    }

    fn gradient_image(seed: u8) -> GrayImage {
        let data = (0..64)
            .map(|i| ((i * 4) as u8).wrapping_add(seed))
            .collect();
        GrayImage::new(8, 8, data).unwrap()
    }

    fn noise_image(seed: u64) -> GrayImage {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        GrayImage::new(8, 8, (0..64).map(|_| rng.random()).collect()).unwrap()
    }

    fn tiny_dataset(dir: &Path) -> Vec<(PathBuf, i8)> {
        let mut entries = Vec::new();
        for i in 0..6u64 {
            entries.push((write_pgm(dir, &format!("g{i}.pgm"), &gradient_image(i as u8 * 7)), 1));
            entries.push((write_pgm(dir, &format!("n{i}.pgm"), &noise_image(i)), -1));
        }
        entries
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("m.csv");
        std::fs::write(&manifest, "a.pgm,bag\nb.pgm,nobag\n").unwrap();
        let entries = load_manifest(&manifest).unwrap();
        assert_eq!(entries, vec![(PathBuf::from("a.pgm"), 1), (PathBuf::from("b.pgm"), -1)]);
    }

    #[test]
    fn manifest_rejects_duplicates_and_bad_labels() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("m.csv");
        std::fs::write(&manifest, "a.pgm,bag\na.pgm,nobag\n").unwrap();
        assert!(load_manifest(&manifest).is_err());
        std::fs::write(&manifest, "a.pgm,positive\n").unwrap();
        assert!(load_manifest(&manifest).is_err());
        std::fs::write(&manifest, "").unwrap();
        assert!(load_manifest(&manifest).is_err());
    }

    #[test]
    fn store_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let entries = tiny_dataset(dir.path());
        let mut cfg = ExtractConfig::new(Bins::Compat150);
        cfg.resize = false;
        let store = extract_store(&entries, &cfg, 2).unwrap();
        assert_eq!(store.rows.len(), 12);
        assert_eq!(store.header.dim, 150);
        let path = dir.path().join("features.csv");
        store.save(&path).unwrap();
        assert_eq!(FeatureStore::load(&path).unwrap(), store);
    }

    #[test]
    fn store_rows_independent_of_jobs() {
        let dir = tempfile::tempdir().unwrap();
        let entries = tiny_dataset(dir.path());
        let mut cfg = ExtractConfig::new(Bins::Full);
        cfg.resize = false;
        let a = extract_store(&entries, &cfg, 1).unwrap();
        let b = extract_store(&entries, &cfg, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn extract_skips_unreadable_rows() {
        let dir = tempfile::tempdir().unwrap();
        let mut entries = tiny_dataset(dir.path());
        entries.push((dir.path().join("missing.pgm"), 1));
        let mut cfg = ExtractConfig::new(Bins::Compat150);
        cfg.resize = false;
        let store = extract_store(&entries, &cfg, 1).unwrap();
        assert_eq!(store.rows.len(), 12);

        let all_missing = vec![(dir.path().join("nope.pgm"), 1)];
        assert!(extract_store(&all_missing, &cfg, 1).is_err());
    }

    #[test]
    fn model_file_round_trip_preserves_decisions() {
        let dir = tempfile::tempdir().unwrap();
        let entries = tiny_dataset(dir.path());
        let mut cfg = ExtractConfig::new(Bins::Compat150);
        cfg.resize = false;
        let store = extract_store(&entries, &cfg, 1).unwrap();
        let tc = TrainConfig::new(KernelSpec::gaussian(1.0 / 150.0), 42);
        let (doc, _) = train_and_report(&store, &tc, Validation::None, 42).unwrap();
        let path = dir.path().join("model.json");
        doc.save(&path).unwrap();
        let loaded = ModelFile::load(&path).unwrap();
        for row in &store.rows {
            let a = doc.model.decision_value(&row.values).unwrap();
            let b = loaded.model.decision_value(&row.values).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn predict_uses_model_config() {
        let dir = tempfile::tempdir().unwrap();
        let entries = tiny_dataset(dir.path());
        let mut cfg = ExtractConfig::new(Bins::Compat150);
        cfg.resize = false;
        let store = extract_store(&entries, &cfg, 1).unwrap();
        let tc = TrainConfig::new(KernelSpec::gaussian(1.0 / 150.0), 42);
        let (doc, _) = train_and_report(&store, &tc, Validation::None, 42).unwrap();
        // bins=50 must be read from the model, producing a 150-dim feature
        let (label, value) = predict_image(&doc, &entries[0].0).unwrap();
        assert_eq!(label, if value >= 0.0 { 1 } else { -1 });
        let again = predict_image(&doc, &entries[0].0).unwrap();
        assert_eq!((label, value), again);
    }

    #[test]
    fn evaluate_rejects_dim_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let entries = tiny_dataset(dir.path());
        let mut cfg = ExtractConfig::new(Bins::Compat150);
        cfg.resize = false;
        let store50 = extract_store(&entries, &cfg, 1).unwrap();
        let mut cfg256 = ExtractConfig::new(Bins::Full);
        cfg256.resize = false;
        let store256 = extract_store(&entries, &cfg256, 1).unwrap();
        let tc = TrainConfig::new(KernelSpec::linear(), 1);
        let (doc, _) = train_and_report(&store50, &tc, Validation::None, 1).unwrap();
        assert!(matches!(
            evaluate_store(&doc, &store256),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn cv10_guard_on_small_store() {
        let dir = tempfile::tempdir().unwrap();
        let entries: Vec<(PathBuf, i8)> = tiny_dataset(dir.path()).into_iter().take(9).collect();
        let mut cfg = ExtractConfig::new(Bins::Compat150);
        cfg.resize = false;
        let store = extract_store(&entries, &cfg, 1).unwrap();
        let tc = TrainConfig::new(KernelSpec::linear(), 1);
        assert!(matches!(
            train_and_report(&store, &tc, Validation::Cv10, 1),
            Err(Error::FoldCount { .. })
        ));
    }
}
