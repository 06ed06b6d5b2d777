//! Command implementations. Each function is a pure mapping from
//! (input files, flags, seed) to output artifacts, so repeated runs
//! produce byte-identical files.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use skyirr::clustering::{self, Centroids, FitConfig};
use skyirr::features::{extract_pcnp, fit_scaler, StandardScaler};
use skyirr::imaging::{load_ppm, store_ppm, SkyMask};
use skyirr::manifest::{read_manifest, ManifestRecord};
use skyirr::models::{
    self, accuracy, classify_batch, estimate_batch, ClassifierConfig, FoldMetrics, RegressorConfig,
    SkyClass,
};
use skyirr::persist::{load_model, store_model, ModelArtifact};
use skyirr::synthsky::{generate_dataset, DatasetConfig};
use skyirr::{Error, Matrix64, Network64, Result};

use crate::features_csv::{read_features, write_features, FeatureTable};

pub fn load_centroids(path: &Path) -> Result<Centroids<f64>> {
    match load_model(path)? {
        ModelArtifact::Centroids(c) => Ok(c),
        _ => Err(Error::CorruptSection(format!("{} is not a centroids model", path.display()))),
    }
}

pub fn load_scaler(path: &Path) -> Result<StandardScaler<f64>> {
    match load_model(path)? {
        ModelArtifact::Scaler(s) => Ok(s),
        _ => Err(Error::CorruptSection(format!("{} is not a scaler model", path.display()))),
    }
}

pub fn load_classifier(path: &Path) -> Result<Network64> {
    match load_model(path)? {
        ModelArtifact::Classifier(m) => Ok(m),
        _ => Err(Error::CorruptSection(format!("{} is not a classifier model", path.display()))),
    }
}

pub fn load_regressor(path: &Path) -> Result<Network64> {
    match load_model(path)? {
        ModelArtifact::Regressor(m) => Ok(m),
        _ => Err(Error::CorruptSection(format!("{} is not a regressor model", path.display()))),
    }
}

pub fn cmd_synth(count: usize, out: &Path, seed: u64, mix: f64) -> Result<()> {
    let config = DatasetConfig { cloudy_fraction: mix, ..DatasetConfig::default() };
    let manifest = generate_dataset(count, &config, seed, out)?;
    println!("wrote {count} scenes, manifest {}", manifest.display());
    Ok(())
}

/// Paths in a manifest are relative to the manifest file itself.
fn resolve(manifest_path: &Path, record: &ManifestRecord) -> PathBuf {
    manifest_path.parent().unwrap_or_else(|| Path::new(".")).join(&record.image_path)
}

pub fn cmd_train_kmeans(
    manifest_path: &Path,
    k: usize,
    batch_size: usize,
    epochs: usize,
    seed: u64,
    max_pixels: usize,
    out: &Path,
) -> Result<()> {
    let records = read_manifest(manifest_path)?;
    if records.is_empty() {
        return Err(Error::InsufficientData("manifest has no rows".into()));
    }
    let per_image: Vec<Vec<[f64; 3]>> = records
        .par_iter()
        .map(|rec| {
            let image = load_ppm(resolve(manifest_path, rec))?;
            let mask = SkyMask::default_circular(image.width, image.height);
            let set = skyirr::imaging::apply_mask(&image, &mask)?;
            Ok(set.colors.iter().map(|&c| clustering::promote::<f64>(c)).collect())
        })
        .collect::<Result<_>>()?;
    let mut pixels: Vec<[f64; 3]> = per_image.into_iter().flatten().collect();
    if pixels.len() > max_pixels {
        // deterministic stride subsample keeps memory and runtime bounded
        let stride = pixels.len().div_ceil(max_pixels);
        pixels = pixels.into_iter().step_by(stride).collect();
    }
    let config = FitConfig { batch_size, epochs, ..FitConfig::default() };
    let centroids = clustering::fit(&pixels, k, seed, &config)?;
    store_model(&ModelArtifact::Centroids(centroids), out)?;
    println!("trained k={k} palette on {} pixels, wrote {}", pixels.len(), out.display());
    Ok(())
}

pub fn cmd_segment(model: &Path, image_path: &Path, out: &Path) -> Result<()> {
    let centroids = load_centroids(model)?;
    let image = load_ppm(image_path)?;
    let mask = SkyMask::default_circular(image.width, image.height);
    let segmented = clustering::quantize(&image, &mask, &centroids)?;
    store_ppm(&clustering::render_segmented(&segmented), out)?;
    println!("wrote {}", out.display());
    Ok(())
}

pub fn extract_table(model: &Path, manifest_path: &Path) -> Result<FeatureTable> {
    let centroids = load_centroids(model)?;
    let records = read_manifest(manifest_path)?;
    let rows: Vec<Vec<f64>> = records
        .par_iter()
        .map(|rec| {
            let image = load_ppm(resolve(manifest_path, rec))?;
            let mask = SkyMask::default_circular(image.width, image.height);
            let segmented = clustering::quantize(&image, &mask, &centroids)?;
            Ok(extract_pcnp(&segmented).to_reals::<f64>())
        })
        .collect::<Result<_>>()?;
    Ok(FeatureTable {
        k: centroids.k(),
        rows,
        ghi: records.iter().map(|r| r.ghi).collect(),
        labels: records.iter().map(|r| r.label).collect(),
    })
}

pub fn cmd_extract(model: &Path, manifest_path: &Path, out: &Path) -> Result<()> {
    let table = extract_table(model, manifest_path)?;
    write_features(&table, out)?;
    println!("extracted {} feature rows, wrote {}", table.len(), out.display());
    Ok(())
}

pub fn cmd_train_classifier(
    features_path: &Path,
    split: f64,
    seed: u64,
    out: &Path,
    scaler_out: &Path,
) -> Result<()> {
    let table = read_features(features_path)?;
    let (raw, labels) = table.labeled()?;
    let (train_idx, test_idx) = models::train_test_split(raw.rows(), split, seed);
    let (train_raw, train_y) = gather(&raw, &labels, &train_idx);
    let (test_raw, test_y) = gather(&raw, &labels, &test_idx);
    let scaler = fit_scaler(&train_raw)?;
    let train_x = scaler.transform(&train_raw)?;
    let config = ClassifierConfig { input_dim: table.k, ..ClassifierConfig::default() };
    let model = models::train_classifier(&train_x, &train_y, &config, seed)?;
    if !test_idx.is_empty() {
        let test_x = scaler.transform(&test_raw)?;
        let pred: Vec<SkyClass> =
            classify_batch(&model, &test_x)?.into_iter().map(|(l, _)| l).collect();
        println!("held-out accuracy: {}", accuracy(&pred, &test_y)?);
    }
    store_model(&ModelArtifact::Classifier(model), out)?;
    store_model(&ModelArtifact::Scaler(scaler), scaler_out)?;
    println!("wrote {} and {}", out.display(), scaler_out.display());
    Ok(())
}

fn gather<Tgt: Clone>(m: &Matrix64, t: &[Tgt], idx: &[usize]) -> (Matrix64, Vec<Tgt>) {
    let mut out = Matrix64::zeros(idx.len(), m.cols());
    let mut targets = Vec::with_capacity(idx.len());
    for (bi, &i) in idx.iter().enumerate() {
        out.row_mut(bi).copy_from_slice(m.row(i));
        targets.push(t[i].clone());
    }
    (out, targets)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_train_regressor(
    features_path: &Path,
    epochs: usize,
    batch_size: usize,
    split: Option<f64>,
    seed: u64,
    out: &Path,
    scaler_out: &Path,
) -> Result<()> {
    let table = read_features(features_path)?;
    let (raw, targets) = table.with_ghi()?;
    let (train_idx, test_idx) = match split {
        Some(f) => models::train_test_split(raw.rows(), f, seed),
        None => ((0..raw.rows()).collect(), Vec::new()),
    };
    let (train_raw, train_y) = gather(&raw, &targets, &train_idx);
    let scaler = fit_scaler(&train_raw)?;
    let train_x = scaler.transform(&train_raw)?;
    let config = RegressorConfig {
        input_dim: table.k,
        epochs,
        batch_size,
        ..RegressorConfig::default()
    };
    let model = models::train_regressor(&train_x, &train_y, &config, seed)?;
    if !test_idx.is_empty() {
        let (test_raw, test_y) = gather(&raw, &targets, &test_idx);
        let pred = models::scaled_estimates(&model, &scaler, &test_raw)?;
        println!(
            "held-out r2: {}  mae: {}",
            models::r2_score(&pred, &test_y)?,
            models::mae(&pred, &test_y)?
        );
    }
    store_model(&ModelArtifact::Regressor(model), out)?;
    store_model(&ModelArtifact::Scaler(scaler), scaler_out)?;
    println!("wrote {} and {}", out.display(), scaler_out.display());
    Ok(())
}

/// Standardized feature rows from either a features CSV or a single
/// image put through a palette model.
fn input_rows(
    scaler: &StandardScaler<f64>,
    image: Option<(&Path, &Path)>,
    features: Option<&Path>,
) -> Result<Matrix64> {
    let raw = match (image, features) {
        (Some((kmeans, image_path)), None) => {
            let centroids = load_centroids(kmeans)?;
            let img = load_ppm(image_path)?;
            let mask = SkyMask::default_circular(img.width, img.height);
            let segmented = clustering::quantize(&img, &mask, &centroids)?;
            Matrix64::from_rows(&[extract_pcnp(&segmented).to_reals::<f64>()])
        }
        (None, Some(path)) => read_features(path)?.matrix(),
        _ => unreachable!("argument validation happens in main"),
    };
    scaler.transform(&raw)
}

pub fn cmd_classify(
    model: &Path,
    scaler: &Path,
    image: Option<(&Path, &Path)>,
    features: Option<&Path>,
) -> Result<()> {
    let net = load_classifier(model)?;
    let scaler = load_scaler(scaler)?;
    let rows = input_rows(&scaler, image, features)?;
    for (label, probs) in classify_batch(&net, &rows)? {
        println!("{} {} {}", label.as_str(), probs[0], probs[1]);
    }
    Ok(())
}

pub fn cmd_estimate(
    model: &Path,
    scaler: &Path,
    image: Option<(&Path, &Path)>,
    features: Option<&Path>,
) -> Result<()> {
    let net = load_regressor(model)?;
    let scaler = load_scaler(scaler)?;
    let rows = input_rows(&scaler, image, features)?;
    for ghi in estimate_batch(&net, &rows)? {
        println!("{ghi}");
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalTask {
    Classifier,
    Regressor,
}

pub fn cmd_evaluate(
    features_path: &Path,
    task: EvalTask,
    folds: usize,
    seed: u64,
    epochs: usize,
    batch_size: usize,
    out: &Path,
) -> Result<()> {
    let table = read_features(features_path)?;
    let report = match task {
        EvalTask::Classifier => {
            let (raw, labels) = table.labeled()?;
            let config = ClassifierConfig { input_dim: table.k, ..ClassifierConfig::default() };
            models::kfold_cv(
                &raw,
                &labels,
                folds,
                seed,
                |x, y, fold_seed| models::train_classifier(x, y, &config, fold_seed),
                |model, x, y| {
                    let pred: Vec<SkyClass> =
                        classify_batch(model, x)?.into_iter().map(|(l, _)| l).collect();
                    Ok(FoldMetrics { accuracy: Some(accuracy(&pred, y)?), r2: None, mae: None })
                },
            )?
        }
        EvalTask::Regressor => {
            let (raw, targets) = table.with_ghi()?;
            let config = RegressorConfig {
                input_dim: table.k,
                epochs,
                batch_size,
                ..RegressorConfig::default()
            };
            models::kfold_cv(
                &raw,
                &targets,
                folds,
                seed,
                |x, y, fold_seed| models::train_regressor(x, y, &config, fold_seed),
                |model, x, y| {
                    let pred = estimate_batch(model, x)?;
                    Ok(FoldMetrics {
                        accuracy: None,
                        r2: Some(models::r2_score(&pred, y)?),
                        mae: Some(models::mae(&pred, y)?),
                    })
                },
            )?
        }
    };
    std::fs::write(out, report.to_csv())?;
    println!("wrote {}", out.display());
    Ok(())
}
