//! Class-incremental digit experiment: cycles of per-class sample blocks,
//! with held-out accuracy measured after every block.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mnr::{MnrConfig, MnrModel};
use crate::scalar::Scalar;
use crate::spn::StatePolynetwork;
use crate::vision::{image_to_spn, load_mnist, Dataset, VisionConfig};

pub const IMAGES_FILE: &str = "train-images-idx3-ubyte";
pub const LABELS_FILE: &str = "train-labels-idx1-ubyte";
pub const DATA_DIR_ENV: &str = "VARSEL_DATA_DIR";

/// Directory named by `VARSEL_DATA_DIR`, else `data/mnist`.
pub fn default_data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("data/mnist"))
}

/// Loads the idx pair from `dir`, naming both expected files when absent.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let images = dir.join(IMAGES_FILE);
    let labels = dir.join(LABELS_FILE);
    if !images.is_file() || !labels.is_file() {
        return Err(Error::Io(format!(
            "MNIST files not found: expected {} and {} (set {DATA_DIR_ENV} or run scripts/mnist_subset_to_idx.py)",
            images.display(),
            labels.display()
        )));
    }
    load_mnist(&images, &labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MnistConfig {
    pub n_classes: usize,
    pub n_sample: usize,
    pub test_per_class: usize,
    pub cycles: usize,
    pub seed: u64,
    pub mnr: MnrConfig,
    pub vision: VisionConfig,
}

impl MnistConfig {
    /// Block and test sizes used for 3, 5 and 10 classes; other counts use the 5-class sizes.
    pub fn for_classes(n_classes: usize, seed: u64) -> Self {
        let (n_sample, test_per_class) = match n_classes {
            0..=3 => (20, 50),
            10.. => (5, 10),
            _ => (10, 20),
        };
        MnistConfig {
            n_classes,
            n_sample,
            test_per_class,
            cycles: 10,
            seed,
            mnr: MnrConfig::default(),
            vision: VisionConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnistRun {
    pub classes: Vec<u8>,
    /// `accuracy[cycle][iteration][k]` is the held-out accuracy on `classes[k]`
    /// after the block of `classes[iteration]` in `cycle`.
    pub accuracy: Vec<Vec<Vec<f64>>>,
    pub csv_count: Vec<Vec<usize>>,
}

impl MnistRun {
    pub fn final_mean(&self) -> f64 {
        match self.accuracy.last().and_then(|c| c.last()) {
            Some(a) if !a.is_empty() => a.iter().sum::<f64>() / a.len() as f64,
            _ => 0.0,
        }
    }
}

fn spn_of<T: Scalar>(data: &Dataset, i: usize, cfg: &VisionConfig) -> Result<StatePolynetwork<T>> {
    Ok(image_to_spn(&data.images[i], cfg)?.0)
}

/// Runs one experiment and returns its accuracies with the final model.
/// `on_iteration` sees each finished block.
pub fn run_mnist<T: Scalar>(
    data: &Dataset,
    cfg: &MnistConfig,
    mut on_iteration: impl FnMut(usize, usize, &[f64]),
) -> Result<(MnistRun, MnrModel<T>)> {
    if cfg.n_classes == 0 || cfg.cycles == 0 || cfg.n_sample == 0 {
        return Err(Error::Contract("n_classes, cycles and n_sample must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let by_class = data.by_class();
    let mut available: Vec<u8> = by_class.keys().copied().collect();
    if available.len() < cfg.n_classes {
        return Err(Error::Contract(format!("dataset has {} classes, {} requested", available.len(), cfg.n_classes)));
    }
    available.shuffle(&mut rng);
    let classes: Vec<u8> = available[..cfg.n_classes].to_vec();
    let need = cfg.test_per_class + cfg.n_sample * cfg.cycles;
    let mut train: Vec<Vec<StatePolynetwork<T>>> = Vec::new();
    let mut test: Vec<Vec<StatePolynetwork<T>>> = Vec::new();
    for c in &classes {
        let mut idx = by_class[c].clone();
        if idx.len() < need {
            return Err(Error::Contract(format!("class {c} has {} images, {need} needed", idx.len())));
        }
        idx.shuffle(&mut rng);
        test.push(idx[..cfg.test_per_class].iter().map(|&i| spn_of(data, i, &cfg.vision)).collect::<Result<_>>()?);
        train.push(idx[cfg.test_per_class..need].iter().map(|&i| spn_of(data, i, &cfg.vision)).collect::<Result<_>>()?);
    }
    let mut model = MnrModel::<T>::new(cfg.mnr)?;
    for c in &classes {
        model.add_class(*c);
    }
    let mut accuracy = Vec::new();
    let mut csv_count = Vec::new();
    for cycle in 0..cfg.cycles {
        let mut per_iter = Vec::new();
        let mut counts = Vec::new();
        for (it, c) in classes.iter().enumerate() {
            for s in &train[it][cycle * cfg.n_sample..(cycle + 1) * cfg.n_sample] {
                model.learn_sample(s, *c, &mut rng)?;
            }
            let mut accs = Vec::new();
            for (k, truth) in classes.iter().enumerate() {
                let mut correct = 0;
                for (j, s) in test[k].iter().enumerate() {
                    let mut prng = ChaCha8Rng::seed_from_u64(cfg.seed ^ ((k as u64) << 32 | j as u64));
                    if model.predict(s, &mut prng)?.class == Some(*truth) {
                        correct += 1;
                    }
                }
                accs.push(correct as f64 / test[k].len().max(1) as f64);
            }
            on_iteration(cycle, it, &accs);
            per_iter.push(accs);
            counts.push(model.csvs.len());
        }
        accuracy.push(per_iter);
        csv_count.push(counts);
    }
    Ok((MnistRun { classes, accuracy, csv_count }, model))
}

/// Largest drop, over classes and cycles, from a class's in-cycle peak to a
/// later iteration of the same cycle. Only iterations at or after the
/// class's own block count.
pub fn max_in_cycle_drop(accuracy: &[Vec<Vec<f64>>]) -> f64 {
    let mut worst: f64 = 0.0;
    for cycle in accuracy {
        let n = cycle.first().map_or(0, Vec::len);
        for k in 0..n {
            let mut peak = f64::NEG_INFINITY;
            for row in cycle.iter().skip(k) {
                peak = peak.max(row[k]);
                worst = worst.max(peak - row[k]);
            }
        }
    }
    worst
}

/// Element-wise mean of equally shaped accuracy tensors.
pub fn mean_accuracy(runs: &[MnistRun]) -> Vec<Vec<Vec<f64>>> {
    let Some(first) = runs.first() else { return Vec::new() };
    let mut out = first.accuracy.clone();
    for r in &runs[1..] {
        for (oc, rc) in out.iter_mut().zip(&r.accuracy) {
            for (oi, ri) in oc.iter_mut().zip(rc) {
                for (o, v) in oi.iter_mut().zip(ri) {
                    *o += v;
                }
            }
        }
    }
    let n = runs.len() as f64;
    out.iter_mut().flatten().flatten().for_each(|v| *v /= n);
    out
}
