use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{MultiDomainCorpus, PairSampler, PairingStrategy, Split};
use crate::augment::{AugmentConfig, AugmentRecord, Augmenter};
use crate::error::{config, Result};
use crate::rng::{self, purpose};
use crate::tensor::ImageTensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub batch_size: usize,
    /// `None` disables Fourier augmentation: augmented views are exact copies.
    pub augment: Option<AugmentConfig>,
    pub pairing: PairingStrategy,
    /// Random horizontal flips, drawn independently for the original and the
    /// augmented view.
    pub hflip: bool,
    pub seed: u64,
}

/// One training iteration: B anchors, B partners and their 2B augmented
/// counterparts. `originals[i]` and `augmented[i]` are two views of the same
/// sample; the first B entries are anchors, the next B their partners.
#[derive(Debug, Clone)]
pub struct TrainingBatch {
    pub sample_indices: Vec<usize>,
    pub originals: Vec<ImageTensor>,
    pub augmented: Vec<ImageTensor>,
    pub labels: Vec<usize>,
    pub domains: Vec<usize>,
    pub records: Vec<AugmentRecord>,
}

impl TrainingBatch {
    /// Number of anchors B.
    pub fn anchors(&self) -> usize {
        self.originals.len() / 2
    }

    /// Images fed to the model in one iteration (4B).
    pub fn image_count(&self) -> usize {
        self.originals.len() + self.augmented.len()
    }
}

/// Seeded batch schedule over a corpus' train split.
#[derive(Debug, Clone)]
pub struct BatchPlan<'a> {
    corpus: &'a MultiDomainCorpus,
    config: BatchConfig,
    sampler: PairSampler,
    augmenter: Option<Augmenter>,
    train: Vec<usize>,
}

impl<'a> BatchPlan<'a> {
    pub fn new(corpus: &'a MultiDomainCorpus, config: BatchConfig) -> Result<Self> {
        if config.batch_size == 0 {
            return Err(config_err("batch_size must be >= 1"));
        }
        let sampler = PairSampler::new(corpus);
        sampler.check(config.pairing)?;
        let train = corpus.indices(Split::Train);
        if train.is_empty() {
            return Err(config_err("corpus has no training samples"));
        }
        let augmenter = match &config.augment {
            Some(a) if !a.is_identity() => Some(Augmenter::new(a.clone())?),
            Some(a) => {
                a.validate()?;
                None
            }
            None => None,
        };
        Ok(Self {
            corpus,
            config,
            sampler,
            augmenter,
            train,
        })
    }

    pub fn config(&self) -> &BatchConfig {
        &self.config
    }

    pub fn batches_per_epoch(&self) -> usize {
        self.train.len().div_ceil(self.config.batch_size)
    }

    pub fn epoch(&self, epoch: usize) -> EpochBatches<'_, 'a> {
        let mut order = self.train.clone();
        let mut shuffle = rng::stream(self.config.seed, purpose::SHUFFLE, epoch as u64);
        order.shuffle(&mut shuffle);
        EpochBatches {
            plan: self,
            order,
            pos: 0,
            pairing_rng: rng::stream(self.config.seed, purpose::PAIRING, epoch as u64),
            augment_rng: rng::stream(self.config.seed, purpose::AUGMENT, epoch as u64),
            flip_rng: rng::stream(self.config.seed, purpose::FLIP, epoch as u64),
        }
    }
}

fn config_err(msg: &str) -> crate::error::FactError {
    config(msg.to_string())
}

pub struct EpochBatches<'p, 'a> {
    plan: &'p BatchPlan<'a>,
    order: Vec<usize>,
    pos: usize,
    pairing_rng: rng::FactRng,
    augment_rng: rng::FactRng,
    flip_rng: rng::FactRng,
}

impl EpochBatches<'_, '_> {
    fn maybe_flip(&mut self, img: &ImageTensor) -> ImageTensor {
        if self.plan.config.hflip && self.flip_rng.random::<bool>() {
            img.hflip()
        } else {
            img.clone()
        }
    }

    fn build(&mut self, anchors: Vec<usize>) -> Result<TrainingBatch> {
        let corpus = self.plan.corpus;
        let partners = anchors
            .iter()
            .map(|&a| {
                self.plan
                    .sampler
                    .sample(a, self.plan.config.pairing, &mut self.pairing_rng)
            })
            .collect::<Result<Vec<_>>>()?;
        let b = anchors.len();
        let indices: Vec<usize> = anchors.iter().chain(&partners).copied().collect();
        let mut originals = Vec::with_capacity(2 * b);
        let mut sources = Vec::with_capacity(2 * b);
        for &i in &indices {
            let img = &corpus.sample(i).image;
            originals.push(self.maybe_flip(img));
            sources.push(self.maybe_flip(img));
        }
        let mut augmented = sources.clone();
        let mut records = vec![AugmentRecord::default(); 2 * b];
        if let Some(aug) = &self.plan.augmenter {
            for k in 0..b {
                let (pair, record) = aug.augment_pair(&sources[k], &sources[b + k], &mut self.augment_rng)?;
                augmented[k] = pair.first;
                augmented[b + k] = pair.second;
                records[k] = record.clone();
                records[b + k] = record;
            }
        }
        Ok(TrainingBatch {
            labels: indices.iter().map(|&i| corpus.sample(i).class_id).collect(),
            domains: indices.iter().map(|&i| corpus.sample(i).domain_id).collect(),
            sample_indices: indices,
            originals,
            augmented,
            records,
        })
    }
}

impl Iterator for EpochBatches<'_, '_> {
    type Item = Result<TrainingBatch>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.pos >= self.order.len() {
            return None;
        }
        let end = (self.pos + self.plan.config.batch_size).min(self.order.len());
        let anchors = self.order[self.pos..end].to_vec();
        self.pos = end;
        Some(self.build(anchors))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::Strategy;
    use crate::corpus::{synth_generate, SynthConfig};

    fn corpus() -> MultiDomainCorpus {
        synth_generate(&SynthConfig {
            num_domains: 2,
            num_classes: 2,
            n_per_cell: 10,
            height: 8,
            width: 8,
            ..Default::default()
        })
        .unwrap()
    }

    fn plan_config(augment: Option<AugmentConfig>) -> BatchConfig {
        BatchConfig {
            batch_size: 16,
            augment,
            pairing: PairingStrategy::Random,
            hflip: false,
            seed: 5,
        }
    }

    #[test]
    fn four_b_images_per_iteration() {
        let c = corpus();
        let plan = BatchPlan::new(&c, plan_config(Some(AugmentConfig::default()))).unwrap();
        let first = plan.epoch(0).next().unwrap().unwrap();
        assert_eq!(first.anchors(), 16);
        assert_eq!(first.image_count(), 64);
        assert_eq!(first.labels.len(), 32);
    }

    #[test]
    fn disabled_augmentation_copies() {
        let c = corpus();
        let am0 = AugmentConfig {
            strategy: Strategy::Am,
            eta: 0.0,
            ..Default::default()
        };
        let plan = BatchPlan::new(&c, plan_config(Some(am0))).unwrap();
        for batch in plan.epoch(0) {
            let batch = batch.unwrap();
            for (o, a) in batch.originals.iter().zip(&batch.augmented) {
                assert!(o.max_abs_diff(a) < 1e-6);
            }
        }
    }

    #[test]
    fn same_seed_same_batches() {
        let c = corpus();
        let plan = BatchPlan::new(&c, plan_config(Some(AugmentConfig::default()))).unwrap();
        let a: Vec<_> = plan.epoch(1).map(|b| b.unwrap()).collect();
        let b: Vec<_> = plan.epoch(1).map(|b| b.unwrap()).collect();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.sample_indices, y.sample_indices);
            for (p, q) in x.augmented.iter().zip(&y.augmented) {
                assert_eq!(p.data(), q.data());
            }
        }
    }

    #[test]
    fn epoch_covers_train_split_once() {
        let c = corpus();
        let plan = BatchPlan::new(&c, plan_config(None)).unwrap();
        let mut seen: Vec<usize> = plan
            .epoch(0)
            .flat_map(|b| {
                let b = b.unwrap();
                let n = b.anchors();
                b.sample_indices[..n].to_vec()
            })
            .collect();
        seen.sort();
        assert_eq!(seen, c.indices(Split::Train));
        assert_eq!(plan.batches_per_epoch(), c.indices(Split::Train).len().div_ceil(16));
    }

    #[test]
    fn zero_batch_rejected() {
        let c = corpus();
        let mut cfg = plan_config(None);
        cfg.batch_size = 0;
        assert!(BatchPlan::new(&c, cfg).is_err());
    }
}
