use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{fit, FactConfig, FitOutcome};
use crate::corpus::{MultiDomainCorpus, Split};
use crate::error::{config, FactError, Result};
use crate::nn::{argmax, Model};

/// Top-1 counts per domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainAccuracy {
    pub correct: Vec<usize>,
    pub total: Vec<usize>,
}

impl DomainAccuracy {
    pub fn accuracy(&self, domain: usize) -> Option<f64> {
        (self.total[domain] > 0).then(|| self.correct[domain] as f64 / self.total[domain] as f64)
    }

    /// Unweighted mean over domains that have samples.
    pub fn mean(&self) -> Option<f64> {
        let accs: Vec<f64> = (0..self.total.len()).filter_map(|d| self.accuracy(d)).collect();
        (!accs.is_empty()).then(|| accs.iter().sum::<f64>() / accs.len() as f64)
    }

    pub fn overall(&self) -> Option<f64> {
        let t: usize = self.total.iter().sum();
        (t > 0).then(|| self.correct.iter().sum::<usize>() as f64 / t as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub index: usize,
    pub domain: usize,
    pub label: usize,
    pub predicted: usize,
}

pub fn predict(model: &Model, corpus: &MultiDomainCorpus, indices: &[usize]) -> Result<Vec<Prediction>> {
    indices
        .iter()
        .map(|&i| {
            let s = corpus.sample(i);
            Ok(Prediction {
                index: i,
                domain: s.domain_id,
                label: s.class_id,
                predicted: argmax(&model.logits(&s.image)?),
            })
        })
        .collect()
}

pub fn accuracy_from_predictions(predictions: &[Prediction], num_domains: usize) -> Result<DomainAccuracy> {
    let mut acc = DomainAccuracy {
        correct: vec![0; num_domains],
        total: vec![0; num_domains],
    };
    for p in predictions {
        if p.domain >= num_domains {
            return Err(config(format!("prediction for domain {} of {num_domains}", p.domain)));
        }
        acc.total[p.domain] += 1;
        if p.predicted == p.label {
            acc.correct[p.domain] += 1;
        }
    }
    Ok(acc)
}

/// Top-1 accuracy per domain on one split, or on every sample when `split`
/// is `None`.
pub fn evaluate(model: &Model, corpus: &MultiDomainCorpus, split: Option<Split>) -> Result<DomainAccuracy> {
    let indices: Vec<usize> = match split {
        Some(s) => corpus.indices(s),
        None => (0..corpus.len()).collect(),
    };
    accuracy_from_predictions(&predict(model, corpus, &indices)?, corpus.num_domains())
}

pub fn write_predictions(path: &Path, predictions: &[Prediction]) -> Result<()> {
    let io = |e: csv::Error| FactError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for p in predictions {
        w.serialize(p).map_err(io)?;
    }
    w.flush().map_err(|e| FactError::io(path, e))
}

pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| FactError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    })?;
    r.deserialize()
        .map(|row| row.map_err(|e| config(format!("{}: {e}", path.display()))))
        .collect()
}

#[derive(Debug, Clone)]
pub struct LodoResult {
    pub held_out: usize,
    pub source_domains: Vec<usize>,
    /// Accuracy of the selected student on every image of the held-out domain.
    pub target_accuracy: f64,
    pub outcome: FitOutcome,
}

/// Trains on every domain except `held_out` and evaluates on all of its
/// images.
pub fn leave_one_domain_out(corpus: &MultiDomainCorpus, cfg: &FactConfig, held_out: usize) -> Result<LodoResult> {
    if held_out >= corpus.num_domains() {
        return Err(config(format!("held-out domain {held_out} out of range")));
    }
    if corpus.num_domains() < 2 {
        return Err(config("leave-one-domain-out needs at least two domains"));
    }
    let source_domains: Vec<usize> = (0..corpus.num_domains()).filter(|&d| d != held_out).collect();
    let sources = corpus.subset_domains(&source_domains)?;
    let target = corpus.subset_domains(&[held_out])?;
    let outcome = fit(&sources, cfg)?;
    let target_accuracy = evaluate(&outcome.student, &target, None)?
        .overall()
        .ok_or_else(|| FactError::Corpus("held-out domain is empty".into()))?;
    Ok(LodoResult {
        held_out,
        source_domains,
        target_accuracy,
        outcome,
    })
}
