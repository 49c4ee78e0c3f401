//! Class-per-directory image datasets and stratified train/val/test splits.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classify::{FeatureExtractor, FeatureSet};
use crate::error::{Error, Result};
use crate::raster::Image;

pub const DEFAULT_EXTENSIONS: &[&str] = &["png", "pgm", "ppm", "pnm", "pbm", "pam"];

/// Train : val : test proportions.
pub const SPLIT_RATIO: [usize; 3] = [10, 2, 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub path: PathBuf,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub classes: Vec<String>,
    pub seed: u64,
    /// `(channels, height, width)` of the first image.
    pub image_shape: (usize, usize, usize),
    pub train: Vec<Sample>,
    pub val: Vec<Sample>,
    pub test: Vec<Sample>,
}

impl DatasetManifest {
    pub fn split(&self, split: Split) -> &[Sample] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    /// CSV `split,class,path` with paths relative to the root.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "split,class,path")?;
        for split in Split::ALL {
            for s in self.split(split) {
                let rel = s.path.strip_prefix(&self.root).unwrap_or(&s.path);
                writeln!(w, "{split},{},{}", self.classes[s.label], rel.display())?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn has_extension(path: &Path, extensions: &[&str]) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| extensions.iter().any(|x| x.eq_ignore_ascii_case(e)))
}

/// Per-class split sizes for `n` images per class.
pub fn split_sizes(n: usize) -> [usize; 3] {
    let total: usize = SPLIT_RATIO.iter().sum();
    let train = n * SPLIT_RATIO[0] / total;
    let val = n * SPLIT_RATIO[1] / total;
    [train, val, n - train - val]
}

/// Class names and image files, both sorted lexicographically.
pub fn list_classes(root: &Path, extensions: &[&str]) -> Result<Vec<(String, Vec<PathBuf>)>> {
    let mut class_dirs: Vec<PathBuf> = fs::read_dir(root)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.is_dir())
        .collect();
    class_dirs.sort();
    if class_dirs.is_empty() {
        return Err(Error::Empty(format!("no class directories under {}", root.display())));
    }
    class_dirs
        .into_iter()
        .map(|dir| {
            let list = list_images(&dir, extensions)?;
            if list.is_empty() {
                return Err(Error::Empty(format!("class directory {} has no images", dir.display())));
            }
            let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((name, list))
        })
        .collect()
}

/// Image files directly inside `dir`, sorted.
pub fn list_images(dir: &Path, extensions: &[&str]) -> Result<Vec<PathBuf>> {
    let mut list: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.is_file() && has_extension(p, extensions))
        .collect();
    list.sort();
    Ok(list)
}

/// One subdirectory per class (sorted by name), files sorted by name, then
/// shuffled per class with one seeded generator and split 10:2:3. Classes
/// are truncated to the smallest class size.
pub fn scan_dataset(root: &Path, extensions: &[&str], seed: u64) -> Result<DatasetManifest> {
    let (classes, files): (Vec<String>, Vec<Vec<PathBuf>>) = list_classes(root, extensions)?.into_iter().unzip();
    let min = files.iter().map(Vec::len).min().expect("at least one class");
    if files.iter().any(|f| f.len() != min) {
        warn!(
            "unbalanced classes ({}); truncating each to {min}",
            classes
                .iter()
                .zip(&files)
                .map(|(c, f)| format!("{c}: {}", f.len()))
                .collect::<Vec<_>>()
                .join(", ")
        );
    }
    let [n_train, n_val, _] = split_sizes(min);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for (label, mut list) in files.into_iter().enumerate() {
        list.shuffle(&mut rng);
        list.truncate(min);
        for (i, path) in list.into_iter().enumerate() {
            let s = Sample { path, label };
            if i < n_train {
                train.push(s);
            } else if i < n_train + n_val {
                val.push(s);
            } else {
                test.push(s);
            }
        }
    }
    let first = load_image(&train.first().or(test.first()).expect("non-empty class").path)?;
    Ok(DatasetManifest {
        root: root.to_path_buf(),
        classes,
        seed,
        image_shape: (first.channels, first.height, first.width),
        train,
        val,
        test,
    })
}

/// Decode a PNG or NetPBM file into `[0, 1]` doubles. Gray images give one
/// channel, color images three; alpha is dropped.
pub fn load_image(path: &Path) -> Result<Image> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let color = img.color().has_color();
    let sixteen = img.color().bytes_per_pixel() / img.color().channel_count() as u8 > 1;
    let channels = if color { 3 } else { 1 };
    let interleaved: Vec<f64> = match (color, sixteen) {
        (true, false) => img.to_rgb8().into_raw().into_iter().map(|v| v as f64 / 255.0).collect(),
        (true, true) => img.to_rgb16().into_raw().into_iter().map(|v| v as f64 / 65535.0).collect(),
        (false, false) => img.to_luma8().into_raw().into_iter().map(|v| v as f64 / 255.0).collect(),
        (false, true) => img.to_luma16().into_raw().into_iter().map(|v| v as f64 / 65535.0).collect(),
    };
    let mut data = vec![0.0; channels * h * w];
    for (k, &v) in interleaved.iter().enumerate() {
        let (pixel, c) = (k / channels, k % channels);
        data[c * h * w + pixel] = v;
    }
    Image::new(channels, h, w, data)
}

/// Write an image as an 8-bit PNG (values clamped to `[0, 1]`).
pub fn save_png(image: &Image, path: &Path) -> Result<()> {
    let (h, w) = (image.height, image.width);
    let q = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    let result = match image.channels {
        1 => image::GrayImage::from_raw(w as u32, h as u32, image.data.iter().map(|&v| q(v)).collect())
            .expect("buffer sized from the image")
            .save(path),
        3 => {
            let mut buf = Vec::with_capacity(3 * h * w);
            for p in 0..h * w {
                for c in 0..3 {
                    buf.push(q(image.data[c * h * w + p]));
                }
            }
            image::RgbImage::from_raw(w as u32, h as u32, buf)
                .expect("buffer sized from the image")
                .save(path)
        }
        c => {
            return Err(Error::ShapeMismatch(format!("cannot write a {c}-channel image as PNG")));
        }
    };
    result.map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Decode and featurize a split on the rayon pool; output order follows the
/// manifest.
pub fn load_features(samples: &[Sample], classes: usize, extractor: &FeatureExtractor) -> Result<FeatureSet> {
    let rows: Vec<Vec<f64>> = samples
        .par_iter()
        .map(|s| extractor.extract(&load_image(&s.path)?))
        .collect::<Result<_>>()?;
    let dim = extractor.layout().dim();
    FeatureSet::new(dim, classes, rows.concat(), samples.iter().map(|s| s.label).collect())
}
