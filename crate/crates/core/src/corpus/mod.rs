//! Multi-domain labelled corpora: splitting, partner sampling, synthetic
//! generation and training batches.

mod batch;
mod manifest;
mod synth;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, FactError, Result};
use crate::rng::{self, purpose};
use crate::tensor::ImageTensor;

pub use batch::{BatchConfig, BatchPlan, EpochBatches, TrainingBatch};
pub use manifest::{load_corpus, write_corpus, Manifest, ManifestCorpus};
pub(crate) use synth::radial_frequency;
pub use synth::{synth_generate, DomainStyle, SynthConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub image: ImageTensor,
    pub class_id: usize,
    pub domain_id: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingStrategy {
    Random,
    IntraDomain,
    InterDomain,
}

impl fmt::Display for PairingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairingStrategy::Random => "random",
            PairingStrategy::IntraDomain => "intra_domain",
            PairingStrategy::InterDomain => "inter_domain",
        })
    }
}

impl FromStr for PairingStrategy {
    type Err = FactError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Self::Random),
            "intra_domain" | "intra" => Ok(Self::IntraDomain),
            "inter_domain" | "inter" => Ok(Self::InterDomain),
            other => Err(config(format!("unknown pairing strategy '{other}'"))),
        }
    }
}

/// Immutable after construction; splits are assigned once.
#[derive(Debug, Clone)]
pub struct MultiDomainCorpus {
    samples: Vec<LabeledSample>,
    splits: Vec<Split>,
    num_classes: usize,
    domain_names: Vec<String>,
    class_names: Vec<String>,
}

impl MultiDomainCorpus {
    /// Builds a corpus with every sample in the train split.
    pub fn new(samples: Vec<LabeledSample>, domain_names: Vec<String>, class_names: Vec<String>) -> Result<Self> {
        let num_classes = class_names.len();
        let num_domains = domain_names.len();
        if num_classes == 0 || num_domains == 0 {
            return Err(FactError::Corpus(
                "corpus needs at least one domain and one class".into(),
            ));
        }
        if let Some(first) = samples.first() {
            let shape = first.image.shape();
            for (i, s) in samples.iter().enumerate() {
                if s.class_id >= num_classes || s.domain_id >= num_domains {
                    return Err(FactError::Corpus(format!(
                        "sample {i} has class {} / domain {} outside {num_classes} classes / {num_domains} domains",
                        s.class_id, s.domain_id
                    )));
                }
                if s.image.shape() != shape {
                    return Err(FactError::Corpus(format!(
                        "sample {i} has shape {:?}, expected {:?}",
                        s.image.shape(),
                        shape
                    )));
                }
            }
        }
        let splits = vec![Split::Train; samples.len()];
        let corpus = Self {
            samples,
            splits,
            num_classes,
            domain_names,
            class_names,
        };
        corpus.check_cells()?;
        Ok(corpus)
    }

    fn check_cells(&self) -> Result<()> {
        let mut seen = vec![false; self.num_domains() * self.num_classes];
        for (s, split) in self.samples.iter().zip(&self.splits) {
            if *split == Split::Train {
                seen[s.domain_id * self.num_classes + s.class_id] = true;
            }
        }
        if let Some(i) = seen.iter().position(|&v| !v) {
            return Err(FactError::Corpus(format!(
                "domain '{}' has no training samples of class '{}'",
                self.domain_names[i / self.num_classes],
                self.class_names[i % self.num_classes]
            )));
        }
        Ok(())
    }

    /// Stratified split: within each domain the number of validation samples
    /// is `round(N_d · (1 − train_fraction))`, apportioned over classes by
    /// largest remainder so every (domain, class) cell is within one sample
    /// of the global fraction. Each cell keeps at least one train sample.
    pub fn with_split(mut self, train_fraction: f64, seed: u64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction <= 1.0) {
            return Err(config(format!("train_fraction must be in (0,1], got {train_fraction}")));
        }
        let val_fraction = 1.0 - train_fraction;
        let mut cells: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (i, s) in self.samples.iter().enumerate() {
            cells.entry((s.domain_id, s.class_id)).or_default().push(i);
        }
        self.splits = vec![Split::Train; self.samples.len()];
        for d in 0..self.num_domains() {
            let domain_cells: Vec<_> = cells.iter().filter(|((dd, _), _)| *dd == d).collect();
            let total: usize = domain_cells.iter().map(|(_, v)| v.len()).sum();
            let target = (total as f64 * val_fraction).round() as usize;
            let mut quotas: Vec<(usize, f64, usize)> = domain_cells
                .iter()
                .map(|(_, v)| {
                    let exact = v.len() as f64 * val_fraction;
                    let q = (exact.floor() as usize).min(v.len().saturating_sub(1));
                    (q, exact - q as f64, v.len())
                })
                .collect();
            let mut assigned: usize = quotas.iter().map(|q| q.0).sum();
            let mut order: Vec<usize> = (0..quotas.len()).collect();
            order.sort_by(|&a, &b| quotas[b].1.partial_cmp(&quotas[a].1).unwrap().then(a.cmp(&b)));
            for &k in order.iter().cycle().take(order.len() * 2) {
                if assigned >= target {
                    break;
                }
                let (q, _, n) = quotas[k];
                if q + 1 < n && (q + 1) as f64 <= n as f64 * val_fraction + 1.0 {
                    quotas[k].0 += 1;
                    assigned += 1;
                }
            }
            for (((dd, c), members), (q, _, _)) in domain_cells.iter().zip(&quotas) {
                let mut members = (*members).clone();
                let mut rng = rng::stream(seed, purpose::SPLIT, (*dd * 1_000_003 + *c) as u64);
                members.shuffle(&mut rng);
                for &i in members.iter().take(*q) {
                    self.splits[i] = Split::Val;
                }
            }
        }
        self.check_cells()?;
        Ok(self)
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn sample(&self, i: usize) -> &LabeledSample {
        &self.samples[i]
    }

    pub fn split_of(&self, i: usize) -> Split {
        self.splits[i]
    }

    pub fn splits(&self) -> &[Split] {
        &self.splits
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_domains(&self) -> usize {
        self.domain_names.len()
    }

    pub fn domain_names(&self) -> &[String] {
        &self.domain_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn image_shape(&self) -> Option<(usize, usize, usize)> {
        self.samples.first().map(|s| s.image.shape())
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.splits[i] == split).collect()
    }

    pub fn domain_indices(&self, domain: usize, split: Option<Split>) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.samples[i].domain_id == domain && split.is_none_or(|s| self.splits[i] == s))
            .collect()
    }

    /// Keep only the listed domains (renumbered in the given order), with
    /// their split assignment.
    pub fn subset_domains(&self, domains: &[usize]) -> Result<Self> {
        if domains.is_empty() {
            return Err(config("domain subset is empty"));
        }
        for &d in domains {
            if d >= self.num_domains() {
                return Err(config(format!("domain {d} out of range")));
            }
        }
        let mut samples = Vec::new();
        let mut splits = Vec::new();
        for (new_id, &d) in domains.iter().enumerate() {
            for i in self.domain_indices(d, None) {
                let mut s = self.samples[i].clone();
                s.domain_id = new_id;
                samples.push(s);
                splits.push(self.splits[i]);
            }
        }
        let corpus = Self {
            samples,
            splits,
            num_classes: self.num_classes,
            domain_names: domains.iter().map(|&d| self.domain_names[d].clone()).collect(),
            class_names: self.class_names.clone(),
        };
        corpus.check_cells()?;
        Ok(corpus)
    }

    /// Same labels and splits, every image passed through `f`.
    pub fn map_images(&self, mut f: impl FnMut(&ImageTensor) -> Result<ImageTensor>) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .map(|s| {
                Ok(LabeledSample {
                    image: f(&s.image)?,
                    class_id: s.class_id,
                    domain_id: s.domain_id,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            samples,
            splits: self.splits.clone(),
            num_classes: self.num_classes,
            domain_names: self.domain_names.clone(),
            class_names: self.class_names.clone(),
        })
    }
}

/// Partner sampling over the train split.
#[derive(Debug, Clone)]
pub struct PairSampler {
    by_domain: Vec<Vec<usize>>,
    all: Vec<usize>,
    domain_of: Vec<usize>,
}

impl PairSampler {
    pub fn new(corpus: &MultiDomainCorpus) -> Self {
        let by_domain = (0..corpus.num_domains())
            .map(|d| corpus.domain_indices(d, Some(Split::Train)))
            .collect();
        Self {
            by_domain,
            all: corpus.indices(Split::Train),
            domain_of: corpus.samples.iter().map(|s| s.domain_id).collect(),
        }
    }

    pub fn check(&self, strategy: PairingStrategy) -> Result<()> {
        if strategy == PairingStrategy::InterDomain {
            let populated = self.by_domain.iter().filter(|v| !v.is_empty()).count();
            if populated < 2 {
                return Err(config(
                    "inter_domain pairing needs at least two domains with training data",
                ));
            }
        }
        Ok(())
    }

    /// Uniform draw from `pool` excluding `anchor` when any alternative exists.
    fn draw_excluding<R: Rng + ?Sized>(pool: &[usize], anchor: usize, rng: &mut R) -> usize {
        match pool.iter().position(|&i| i == anchor) {
            Some(pos) if pool.len() > 1 => {
                let mut k = rng.random_range(0..pool.len() - 1);
                if k >= pos {
                    k += 1;
                }
                pool[k]
            }
            Some(_) => anchor,
            None => pool[rng.random_range(0..pool.len())],
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, anchor: usize, strategy: PairingStrategy, rng: &mut R) -> Result<usize> {
        let domain = self.domain_of[anchor];
        match strategy {
            PairingStrategy::Random => {
                if self.all.is_empty() {
                    return Err(config("no training samples to pair with"));
                }
                Ok(Self::draw_excluding(&self.all, anchor, rng))
            }
            PairingStrategy::IntraDomain => {
                let pool = &self.by_domain[domain];
                if pool.is_empty() {
                    return Err(config("anchor's domain has no training samples"));
                }
                Ok(Self::draw_excluding(pool, anchor, rng))
            }
            PairingStrategy::InterDomain => {
                self.check(strategy)?;
                let others: usize = self
                    .by_domain
                    .iter()
                    .enumerate()
                    .filter(|(d, _)| *d != domain)
                    .map(|(_, v)| v.len())
                    .sum();
                let mut k = rng.random_range(0..others);
                for (d, pool) in self.by_domain.iter().enumerate() {
                    if d == domain {
                        continue;
                    }
                    if k < pool.len() {
                        return Ok(pool[k]);
                    }
                    k -= pool.len();
                }
                unreachable!("index within pooled size")
            }
        }
    }
}

/// Convenience wrapper around [`PairSampler`] for a single draw.
pub fn sample_pair<'a, R: Rng + ?Sized>(
    corpus: &'a MultiDomainCorpus,
    anchor: usize,
    strategy: PairingStrategy,
    rng: &mut R,
) -> Result<&'a LabeledSample> {
    let idx = PairSampler::new(corpus).sample(anchor, strategy, rng)?;
    Ok(corpus.sample(idx))
}
