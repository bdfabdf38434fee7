use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{LabeledSample, MultiDomainCorpus};
use crate::error::{config, FactError, Result};
use crate::tensor::{load_image, resize_bilinear, save_image, ImageTensor};

/// Corpus manifest, stored as TOML:
///
/// ```toml
/// [corpus]
/// domains = ["photo", "sketch"]
/// classes = ["dog", "horse"]
/// height = 32
/// width = 32
/// channels = 3
/// train_fraction = 0.9
/// seed = 0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub corpus: ManifestCorpus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestCorpus {
    pub domains: Vec<String>,
    pub classes: Vec<String>,
    pub height: usize,
    pub width: usize,
    #[serde(default = "default_channels")]
    pub channels: usize,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_channels() -> usize {
    3
}

fn default_train_fraction() -> f64 {
    0.9
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        let m: Manifest = toml::from_str(text).map_err(|e| config(format!("manifest: {e}")))?;
        m.validate()?;
        Ok(m)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| FactError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.corpus;
        if c.domains.is_empty() || c.classes.is_empty() {
            return Err(config("manifest: domains and classes must be non-empty"));
        }
        if c.height == 0 || c.width == 0 {
            return Err(config("manifest: height and width must be positive"));
        }
        if c.channels != 1 && c.channels != 3 {
            return Err(config("manifest: channels must be 1 or 3"));
        }
        if !(c.train_fraction > 0.0 && c.train_fraction <= 1.0) {
            return Err(config("manifest: train_fraction must be in (0,1]"));
        }
        Ok(())
    }
}

fn to_channels(img: ImageTensor, channels: usize) -> Result<ImageTensor> {
    match (img.channels(), channels) {
        (a, b) if a == b => Ok(img),
        (3, 1) => ImageTensor::from_channels(&[img.luminance()]),
        (1, 3) => {
            let p = img.channel(0);
            ImageTensor::from_channels(&[p.clone(), p.clone(), p])
        }
        (a, b) => Err(config(format!("cannot convert {a} channels to {b}"))),
    }
}

fn sorted_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        if entry.file_type()?.is_file() {
            files.push(entry.path());
        }
    }
    files.sort();
    Ok(files)
}

/// Loads `root/<domain>/<class>/<files>` in lexicographic path order,
/// converting to the manifest's channel count and resizing bilinearly.
/// Unreadable files are collected and reported together.
pub fn load_corpus(root: &Path, manifest: &Manifest) -> Result<MultiDomainCorpus> {
    manifest.validate()?;
    let m = &manifest.corpus;
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for (d, domain) in m.domains.iter().enumerate() {
        for (c, class) in m.classes.iter().enumerate() {
            let dir = root.join(domain).join(class);
            let files = sorted_files(&dir).map_err(|e| FactError::io(&dir, e))?;
            if files.is_empty() {
                return Err(FactError::Corpus(format!("directory {} is empty", dir.display())));
            }
            for path in files {
                let loaded = load_image(&path)
                    .and_then(|img| to_channels(img, m.channels))
                    .and_then(|img| resize_bilinear(&img, m.height, m.width));
                match loaded {
                    Ok(image) => samples.push(LabeledSample {
                        image,
                        class_id: c,
                        domain_id: d,
                    }),
                    Err(e) => failures.push(format!("  {}: {e}", path.display())),
                }
            }
        }
    }
    if !failures.is_empty() {
        return Err(FactError::Image {
            path: root.to_path_buf(),
            message: format!("{} unreadable file(s):\n{}", failures.len(), failures.join("\n")),
        });
    }
    MultiDomainCorpus::new(samples, m.domains.clone(), m.classes.clone())?.with_split(m.train_fraction, m.seed)
}

/// Writes every sample as `root/<domain>/<class>/<index>.png` plus
/// `root/manifest.toml`, so [`load_corpus`] can read the tree back. The split
/// is redrawn from `train_fraction` and `seed` on load.
pub fn write_corpus(corpus: &MultiDomainCorpus, root: &Path, train_fraction: f64, seed: u64) -> Result<Manifest> {
    let (height, width, channels) = corpus
        .image_shape()
        .ok_or_else(|| FactError::Corpus("corpus is empty".into()))?;
    let manifest = Manifest {
        corpus: ManifestCorpus {
            domains: corpus.domain_names().to_vec(),
            classes: corpus.class_names().to_vec(),
            height,
            width,
            channels,
            train_fraction,
            seed,
        },
    };
    manifest.validate()?;
    for (i, s) in corpus.samples().iter().enumerate() {
        let dir = root
            .join(&corpus.domain_names()[s.domain_id])
            .join(&corpus.class_names()[s.class_id]);
        fs::create_dir_all(&dir).map_err(|e| FactError::io(&dir, e))?;
        save_image(&s.image, &dir.join(format!("{i:06}.png")))?;
    }
    let path = root.join("manifest.toml");
    let text = toml::to_string(&manifest).map_err(|e| config(format!("manifest: {e}")))?;
    fs::write(&path, text).map_err(|e| FactError::io(&path, e))?;
    Ok(manifest)
}
