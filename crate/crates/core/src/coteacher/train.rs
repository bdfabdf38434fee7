use std::path::Path;

use serde::Serialize;

use super::{evaluate, total_loss, FactConfig, LossBreakdown, TeacherState};
use crate::corpus::{BatchPlan, MultiDomainCorpus, Split};
use crate::error::{FactError, Result};
use crate::nn::{Architecture, Model, Sgd};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Step-averaged batch losses.
    pub losses: LossBreakdown,
    pub lr: f64,
    pub train_accuracy: f64,
    /// Per source domain; `None` when a domain has no validation samples.
    pub val_accuracy: Vec<Option<f64>>,
    pub mean_val_accuracy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub architecture: Architecture,
    /// Student at the selected epoch.
    pub student: Model,
    /// Teacher at the selected epoch (a copy of the student when no teacher
    /// is configured).
    pub teacher: Model,
    pub final_student: Model,
    pub best_epoch: usize,
    pub history: Vec<EpochMetrics>,
}

impl FitOutcome {
    pub fn selected(&self) -> &EpochMetrics {
        &self.history[self.best_epoch]
    }
}

pub fn architecture_for(corpus: &MultiDomainCorpus, cfg: &FactConfig) -> Result<Architecture> {
    let (height, width, channels) = corpus
        .image_shape()
        .ok_or_else(|| FactError::Corpus("corpus is empty".into()))?;
    Ok(Architecture {
        height,
        width,
        channels,
        conv_channels: cfg.model.conv_channels.clone(),
        hidden: cfg.model.hidden.clone(),
        classes: corpus.num_classes(),
    })
}

/// Trains a student (and EMA teacher) on the corpus' train split.
/// The returned student is the one with the best mean validation accuracy
/// over source domains; the earliest epoch wins ties.
pub fn fit(corpus: &MultiDomainCorpus, cfg: &FactConfig) -> Result<FitOutcome> {
    cfg.validate()?;
    let architecture = architecture_for(corpus, cfg)?;
    let mut student = Model::new(&architecture, cfg.seed)?;
    let mut teacher = TeacherState::new(&student, cfg.ema_momentum)?;
    let sgd_cfg = cfg.sgd();
    let mut sgd = Sgd::new(sgd_cfg.clone(), &student)?;
    let plan = BatchPlan::new(corpus, cfg.batch_config())?;

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, Model, Model)> = None;
    for epoch in 0..cfg.epochs {
        let mut sums = LossBreakdown::default();
        let mut steps = 0usize;
        let (mut correct, mut seen) = (0usize, 0usize);
        for (step, batch) in plan.epoch(epoch).enumerate() {
            let batch = batch?;
            // Inputs are finite, so non-finite logits mean the weights blew up.
            let res = match total_loss(&batch, &student, Some(teacher.params()), cfg, epoch) {
                Err(FactError::InvalidInput(m)) if m == "non-finite logits" => {
                    return Err(FactError::Divergence { epoch, step, detail: m })
                }
                r => r?,
            };
            if !res.losses.total.is_finite() || !res.grads.is_finite() {
                return Err(FactError::Divergence {
                    epoch,
                    step,
                    detail: format!("{:?}", res.losses),
                });
            }
            sgd.step(&mut student, &res.grads, epoch)?;
            if cfg.components.teacher {
                teacher.ema_update(&student)?;
            }
            let l = res.losses;
            sums.cls_ori += l.cls_ori;
            sums.cls_aug += l.cls_aug;
            sums.cot_a2o += l.cot_a2o;
            sums.cot_o2a += l.cot_o2a;
            sums.beta_eff = l.beta_eff;
            sums.total += l.total;
            steps += 1;
            correct += res.correct;
            seen += res.count;
        }
        let s = steps as f64;
        let losses = LossBreakdown {
            cls_ori: sums.cls_ori / s,
            cls_aug: sums.cls_aug / s,
            cot_a2o: sums.cot_a2o / s,
            cot_o2a: sums.cot_o2a / s,
            beta_eff: sums.beta_eff,
            total: sums.total / s,
        };
        let val = evaluate(&student, corpus, Some(Split::Val))?;
        let val_accuracy: Vec<Option<f64>> = (0..corpus.num_domains()).map(|d| val.accuracy(d)).collect();
        let mean_val_accuracy = val.mean();
        let score = mean_val_accuracy.unwrap_or(f64::NEG_INFINITY);
        if best.as_ref().is_none_or(|b| score > b.1) {
            best = Some((epoch, score, student.clone(), teacher.params().clone()));
        }
        history.push(EpochMetrics {
            epoch,
            losses,
            lr: sgd_cfg.schedule.lr_at(epoch),
            train_accuracy: correct as f64 / seen as f64,
            val_accuracy,
            mean_val_accuracy,
        });
    }
    let (best_epoch, _, best_student, best_teacher) = best.expect("at least one epoch");
    Ok(FitOutcome {
        architecture,
        student: best_student,
        teacher: best_teacher,
        final_student: student,
        best_epoch,
        history,
    })
}

/// One row per epoch: losses, lr, train accuracy, per-domain and mean
/// validation accuracy (empty cell when undefined).
pub fn write_metrics_csv(path: &Path, history: &[EpochMetrics], domain_names: &[String]) -> Result<()> {
    let io = |e: csv::Error| FactError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let mut header: Vec<String> = [
        "epoch",
        "cls_ori",
        "cls_aug",
        "cot_a2o",
        "cot_o2a",
        "beta_eff",
        "total",
        "lr",
        "train_acc",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(domain_names.iter().map(|d| format!("val_acc_{d}")));
    header.push("val_acc_mean".into());
    w.write_record(&header).map_err(io)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for m in history {
        let l = &m.losses;
        let mut row = vec![
            m.epoch.to_string(),
            l.cls_ori.to_string(),
            l.cls_aug.to_string(),
            l.cot_a2o.to_string(),
            l.cot_o2a.to_string(),
            l.beta_eff.to_string(),
            l.total.to_string(),
            m.lr.to_string(),
            m.train_accuracy.to_string(),
        ];
        row.extend(m.val_accuracy.iter().map(|v| opt(*v)));
        row.push(opt(m.mean_val_accuracy));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| FactError::io(path, e))
}
