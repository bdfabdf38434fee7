//! Co-teacher consistency training: an EMA teacher, dual KL consistency
//! between original and augmented views, and the training loop.

mod eval;
mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::augment::AugmentConfig;
use crate::corpus::{BatchConfig, PairingStrategy, TrainingBatch};
use crate::error::{config, invalid, FactError, Result};
use crate::nn::{cross_entropy, log_softmax_t, softmax_t, Gradients, LrSchedule, Model, SgdConfig};

pub use eval::{
    accuracy_from_predictions, evaluate, leave_one_domain_out, predict, read_predictions, write_predictions,
    DomainAccuracy, LodoResult, Prediction,
};
pub use train::{architecture_for, fit, write_metrics_csv, EpochMetrics, FitOutcome};

const Q_FLOOR: f64 = 1e-12;

/// Which parts of the method are switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Components {
    pub augmentation: bool,
    pub a2o: bool,
    pub o2a: bool,
    /// When off, consistency targets are the student's own (detached) outputs.
    pub teacher: bool,
}

impl Components {
    pub const FULL: Self = Self {
        augmentation: true,
        a2o: true,
        o2a: true,
        teacher: true,
    };
}

/// Ablation presets, lettered like the usual component study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ablation {
    #[serde(rename = "baseline")]
    Baseline,
    A,
    B,
    C,
    D,
    E,
    #[serde(rename = "full")]
    Full,
}

impl Ablation {
    pub const ALL: [Ablation; 7] = [
        Ablation::Baseline,
        Ablation::A,
        Ablation::B,
        Ablation::C,
        Ablation::D,
        Ablation::E,
        Ablation::Full,
    ];

    pub fn components(self) -> Components {
        let c = |augmentation, a2o, o2a, teacher| Components {
            augmentation,
            a2o,
            o2a,
            teacher,
        };
        match self {
            Ablation::Baseline => c(false, false, false, false),
            Ablation::A => c(true, false, false, false),
            Ablation::B => c(true, true, true, false),
            Ablation::C => c(false, true, true, true),
            Ablation::D => c(true, true, false, true),
            Ablation::E => c(true, false, true, true),
            Ablation::Full => Components::FULL,
        }
    }

    /// Sets the component switches. The baseline additionally zeroes β and
    /// η so the resolved config reads as plain ERM.
    pub fn apply(self, cfg: &mut FactConfig) {
        cfg.components = self.components();
        if self == Ablation::Baseline {
            cfg.beta = 0.0;
            cfg.augment.eta = 0.0;
        }
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ablation::Baseline => "baseline",
            Ablation::A => "A",
            Ablation::B => "B",
            Ablation::C => "C",
            Ablation::D => "D",
            Ablation::E => "E",
            Ablation::Full => "full",
        })
    }
}

impl FromStr for Ablation {
    type Err = FactError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Ablation::Baseline),
            "A" | "a" => Ok(Ablation::A),
            "B" | "b" => Ok(Ablation::B),
            "C" | "c" => Ok(Ablation::C),
            "D" | "d" => Ok(Ablation::D),
            "E" | "e" => Ok(Ablation::E),
            "full" => Ok(Ablation::Full),
            other => Err(config(format!(
                "unknown ablation '{other}' (expected baseline, A, B, C, D, E or full)"
            ))),
        }
    }
}

/// Feature extractor widths; input shape and class count come from the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub conv_channels: Vec<usize>,
    pub hidden: Vec<usize>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            conv_channels: Vec::new(),
            hidden: vec![256, 128],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FactConfig {
    pub augment: AugmentConfig,
    pub beta: f64,
    pub temperature: f64,
    pub ema_momentum: f64,
    pub ramp_up_epochs: usize,
    pub epochs: usize,
    /// Anchors per step; each step sees 4× this many images.
    pub batch_size: usize,
    pub lr: f64,
    /// Epochs at which the learning rate is multiplied by 0.1. Empty means
    /// one decay at 80% of the run.
    pub lr_milestones: Vec<usize>,
    pub momentum: f64,
    pub weight_decay: f64,
    pub pairing: PairingStrategy,
    pub hflip: bool,
    pub seed: u64,
    pub model: ModelSpec,
    pub components: Components,
}

impl Default for FactConfig {
    fn default() -> Self {
        Self {
            augment: AugmentConfig::default(),
            beta: 2.0,
            temperature: 10.0,
            ema_momentum: 0.9995,
            ramp_up_epochs: 5,
            epochs: 30,
            batch_size: 16,
            lr: 0.01,
            lr_milestones: Vec::new(),
            momentum: 0.9,
            weight_decay: 5e-4,
            pairing: PairingStrategy::Random,
            hflip: false,
            seed: 0,
            model: ModelSpec::default(),
            components: Components::FULL,
        }
    }
}

impl FactConfig {
    pub fn validate(&self) -> Result<()> {
        self.augment.validate()?;
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(config(format!("beta must be >= 0, got {}", self.beta)));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(config(format!("temperature must be > 0, got {}", self.temperature)));
        }
        if !(0.0..1.0).contains(&self.ema_momentum) {
            return Err(config(format!(
                "ema_momentum must be in [0,1), got {}",
                self.ema_momentum
            )));
        }
        if self.epochs == 0 {
            return Err(config("epochs must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(config("batch_size must be >= 1"));
        }
        self.sgd().validate()
    }

    pub fn sgd(&self) -> SgdConfig {
        let schedule = if self.lr_milestones.is_empty() {
            LrSchedule::step_at_80_percent(self.lr, self.epochs)
        } else {
            LrSchedule {
                initial: self.lr,
                decay: 0.1,
                milestones: self.lr_milestones.clone(),
            }
        };
        SgdConfig {
            schedule,
            momentum: self.momentum,
            nesterov: true,
            weight_decay: self.weight_decay,
        }
    }

    pub fn batch_config(&self) -> BatchConfig {
        BatchConfig {
            batch_size: self.batch_size,
            augment: self.components.augmentation.then(|| self.augment.clone()),
            pairing: self.pairing,
            hflip: self.hflip,
            seed: self.seed,
        }
    }

    /// Consistency weight at `epoch`: β scaled by the ramp-up.
    pub fn effective_beta(&self, epoch: usize) -> f64 {
        if !(self.components.a2o || self.components.o2a) {
            return 0.0;
        }
        self.beta * ramp_up(epoch, self.ramp_up_epochs)
    }
}

/// EMA copy of the student that never receives gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct TeacherState {
    params: Model,
    momentum: f64,
}

impl TeacherState {
    /// Starts as an exact copy of the student.
    pub fn new(student: &Model, momentum: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&momentum) {
            return Err(config(format!("ema momentum must be in [0,1), got {momentum}")));
        }
        Ok(Self {
            params: student.clone(),
            momentum,
        })
    }

    pub fn params(&self) -> &Model {
        &self.params
    }

    pub fn momentum(&self) -> f64 {
        self.momentum
    }

    /// `θ_tea ← m·θ_tea + (1 − m)·θ_stu`.
    pub fn ema_update(&mut self, student: &Model) -> Result<()> {
        if !self.params.congruent(student) {
            return Err(invalid("teacher and student architectures differ"));
        }
        let m = self.momentum;
        for (t, s) in self.params.layers_mut().iter_mut().zip(student.layers()) {
            for (a, b) in t
                .weights
                .iter_mut()
                .zip(&s.weights)
                .chain(t.biases.iter_mut().zip(&s.biases))
            {
                *a = m * *a + (1.0 - m) * b;
            }
        }
        Ok(())
    }
}

/// `Σ p ln(p/q)` over two probability vectors, with `0·ln(0/q) = 0` and `q`
/// floored at 1e-12.
pub fn kl_div(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() || p.is_empty() {
        return Err(invalid("distributions must have equal, non-zero length"));
    }
    for (name, d) in [("p", p), ("q", q)] {
        let sum: f64 = d.iter().sum();
        if d.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) || (sum - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("{name} is not a probability vector")));
        }
    }
    Ok(p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi.ln() - qi.max(Q_FLOOR).ln()))
        .sum())
}

/// KL between the softened student distribution and a fixed target, plus the
/// gradient with respect to the student logits:
/// `∂L/∂z_k = p_k (ln p_k − ln q_k − L) / T`.
pub fn kl_to_target(student_logits: &[f64], target: &[f64], t: f64) -> Result<(f64, Vec<f64>)> {
    if student_logits.len() != target.len() {
        return Err(invalid("logit and target lengths differ"));
    }
    let logp = log_softmax_t(student_logits, t)?;
    let lq: Vec<f64> = target.iter().map(|&q| q.max(Q_FLOOR).ln()).collect();
    let p: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
    let loss: f64 = p
        .iter()
        .zip(logp.iter().zip(&lq))
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(pi, (lp, lq))| pi * (lp - lq))
        .sum();
    let grad = p
        .iter()
        .zip(logp.iter().zip(&lq))
        .map(|(pi, (lp, lq))| pi * (lp - lq - loss) / t)
        .collect();
    Ok((loss, grad))
}

/// `exp(−5(1 − t)²)` with `t = clamp(epoch / length, 0, 1)`; 1 when `length = 0`.
pub fn ramp_up(epoch: usize, length: usize) -> f64 {
    if length == 0 || epoch >= length {
        return 1.0;
    }
    let t = epoch as f64 / length as f64;
    (-5.0 * (1.0 - t) * (1.0 - t)).exp()
}

/// `(L_a2o, L_o2a)` for one sample: augmented student vs original teacher,
/// original student vs augmented teacher.
pub fn consistency_losses(
    student: &Model,
    teacher: &Model,
    x: &crate::ImageTensor,
    x_hat: &crate::ImageTensor,
    t: f64,
) -> Result<(f64, f64)> {
    let q_ori = softmax_t(&teacher.logits(x)?, t)?;
    let q_aug = softmax_t(&teacher.logits(x_hat)?, t)?;
    let (a2o, _) = kl_to_target(&student.logits(x_hat)?, &q_ori, t)?;
    let (o2a, _) = kl_to_target(&student.logits(x)?, &q_aug, t)?;
    Ok((a2o, o2a))
}

/// Batch means of the four objective terms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub cls_ori: f64,
    pub cls_aug: f64,
    pub cot_a2o: f64,
    pub cot_o2a: f64,
    /// Consistency weight actually applied (β times ramp-up).
    pub beta_eff: f64,
    pub total: f64,
}

/// Result of one objective evaluation.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub losses: LossBreakdown,
    pub grads: Gradients,
    /// Correct top-1 predictions on the original views.
    pub correct: usize,
    pub count: usize,
}

/// Evaluates `L_cls^ori + L_cls^aug + β_eff (L_a2o + L_o2a)` on a batch and
/// its exact gradient with respect to the student. Teacher outputs enter only
/// as constants. Without a teacher, targets are the student's own outputs.
pub fn total_loss(
    batch: &TrainingBatch,
    student: &Model,
    teacher: Option<&Model>,
    cfg: &FactConfig,
    epoch: usize,
) -> Result<StepResult> {
    let n = batch.originals.len();
    if n == 0 || batch.augmented.len() != n || batch.labels.len() != n {
        return Err(invalid("malformed batch"));
    }
    let nf = n as f64;
    let beta_eff = cfg.effective_beta(epoch);
    let use_a2o = cfg.components.a2o && beta_eff > 0.0;
    let use_o2a = cfg.components.o2a && beta_eff > 0.0;
    let t = cfg.temperature;

    let mut fwd_ori = Vec::with_capacity(n);
    let mut fwd_aug = Vec::with_capacity(n);
    for i in 0..n {
        fwd_ori.push(student.forward(&batch.originals[i])?);
        fwd_aug.push(student.forward(&batch.augmented[i])?);
    }
    if cfg.components.teacher && teacher.is_none() && (use_a2o || use_o2a) {
        return Err(invalid("teacher enabled but no teacher model supplied"));
    }
    let targets = |views: &[crate::ImageTensor], own: &[(Vec<f64>, crate::nn::Cache)]| -> Result<Vec<Vec<f64>>> {
        match teacher.filter(|_| cfg.components.teacher) {
            Some(tm) => views.iter().map(|x| softmax_t(&tm.logits(x)?, t)).collect(),
            None => own.iter().map(|(z, _)| softmax_t(z, t)).collect(),
        }
    };
    let q_ori = if use_a2o {
        targets(&batch.originals, &fwd_ori)?
    } else {
        Vec::new()
    };
    let q_aug = if use_o2a {
        targets(&batch.augmented, &fwd_aug)?
    } else {
        Vec::new()
    };

    let mut grads = Gradients::zeros_like(student);
    let mut losses = LossBreakdown {
        beta_eff,
        ..Default::default()
    };
    let mut correct = 0;
    for (i, (z, cache)) in fwd_ori.iter().enumerate() {
        let (l, g) = cross_entropy(z, batch.labels[i])?;
        losses.cls_ori += l;
        if crate::nn::argmax(z) == batch.labels[i] {
            correct += 1;
        }
        let mut dz: Vec<f64> = g.iter().map(|v| v / nf).collect();
        if use_o2a {
            let (k, gk) = kl_to_target(z, &q_aug[i], t)?;
            losses.cot_o2a += k;
            for (d, v) in dz.iter_mut().zip(&gk) {
                *d += beta_eff * v / nf;
            }
        }
        student.backward(cache, &dz, &mut grads)?;
    }
    for (i, (z, cache)) in fwd_aug.iter().enumerate() {
        let (l, g) = cross_entropy(z, batch.labels[i])?;
        losses.cls_aug += l;
        let mut dz: Vec<f64> = g.iter().map(|v| v / nf).collect();
        if use_a2o {
            let (k, gk) = kl_to_target(z, &q_ori[i], t)?;
            losses.cot_a2o += k;
            for (d, v) in dz.iter_mut().zip(&gk) {
                *d += beta_eff * v / nf;
            }
        }
        student.backward(cache, &dz, &mut grads)?;
    }
    losses.cls_ori /= nf;
    losses.cls_aug /= nf;
    losses.cot_a2o /= nf;
    losses.cot_o2a /= nf;
    losses.total = losses.cls_ori + losses.cls_aug;
    if use_a2o || use_o2a {
        losses.total += beta_eff * (losses.cot_a2o + losses.cot_o2a);
    }
    Ok(StepResult {
        losses,
        grads,
        correct,
        count: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, Architecture, Layer, LayerKind};

    fn scalar_model(v: f64) -> Model {
        let mut l = Layer::zeros(LayerKind::Dense { fan_in: 1, fan_out: 1 }, Activation::Identity);
        l.weights[0] = v;
        l.biases[0] = v;
        Model::from_layers((1, 1, 1), vec![l]).unwrap()
    }

    #[test]
    fn ema_arithmetic() {
        let mut t = TeacherState::new(&scalar_model(0.0), 0.9995).unwrap();
        t.ema_update(&scalar_model(1.0)).unwrap();
        assert!((t.params().layers()[0].weights[0] - 0.0005).abs() < 1e-15);
        let mut t = TeacherState::new(&scalar_model(3.0), 0.0).unwrap();
        t.ema_update(&scalar_model(-2.0)).unwrap();
        assert_eq!(t.params(), &scalar_model(-2.0));
        assert!(TeacherState::new(&scalar_model(0.0), 1.0).is_err());
        let other = Model::new(&Architecture::mlp(1, 1, 1, 2), 0).unwrap();
        assert!(t.ema_update(&other).is_err());
    }

    #[test]
    fn kl_closed_forms() {
        assert!(kl_div(&[0.3, 0.7], &[0.3, 0.7]).unwrap().abs() < 1e-12);
        assert!((kl_div(&[1.0, 0.0], &[0.5, 0.5]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(kl_div(&[0.5, 0.4], &[0.5, 0.5]).is_err());
        assert!(kl_div(&[1.0], &[0.5, 0.5]).is_err());
        // floor keeps the value finite
        assert!(kl_div(&[0.5, 0.5], &[1.0, 0.0]).unwrap().is_finite());
    }

    #[test]
    fn kl_gradient_matches_finite_differences() {
        use rand::Rng;
        let mut r = crate::rng::stream(9, 0, 0);
        for _ in 0..30 {
            let z: Vec<f64> = (0..4).map(|_| r.random_range(-4.0..4.0)).collect();
            let tz: Vec<f64> = (0..4).map(|_| r.random_range(-4.0..4.0)).collect();
            let t = r.random_range(0.5..12.0);
            let q = softmax_t(&tz, t).unwrap();
            let (l, g) = kl_to_target(&z, &q, t).unwrap();
            let direct = kl_div(&softmax_t(&z, t).unwrap(), &q).unwrap();
            assert!((l - direct).abs() < 1e-12);
            for j in 0..4 {
                let mut zp = z.clone();
                zp[j] += 1e-5;
                let mut zm = z.clone();
                zm[j] -= 1e-5;
                let fd = (kl_to_target(&zp, &q, t).unwrap().0 - kl_to_target(&zm, &q, t).unwrap().0) / 2e-5;
                assert!(
                    (fd - g[j]).abs() <= 1e-4 * fd.abs().max(g[j].abs()).max(1e-6),
                    "{fd} vs {}",
                    g[j]
                );
            }
        }
    }

    #[test]
    fn ramp_values() {
        assert_eq!(ramp_up(5, 5), 1.0);
        assert_eq!(ramp_up(9, 5), 1.0);
        assert!((ramp_up(0, 5) - 0.006738).abs() < 1e-6);
        assert_eq!(ramp_up(0, 0), 1.0);
        let mut prev = 0.0;
        for e in 0..10 {
            let w = ramp_up(e, 7);
            assert!(w >= prev);
            prev = w;
        }
    }

    #[test]
    fn ablation_table() {
        let d = Ablation::D.components();
        assert!(d.augmentation && d.a2o && !d.o2a && d.teacher);
        let e = Ablation::E.components();
        assert!(e.augmentation && !e.a2o && e.o2a && e.teacher);
        let mut cfg = FactConfig::default();
        Ablation::Baseline.apply(&mut cfg);
        assert_eq!(cfg.beta, 0.0);
        assert_eq!(cfg.augment.eta, 0.0);
        assert!(cfg.batch_config().augment.is_none());
        for a in Ablation::ALL {
            assert_eq!(a.to_string().parse::<Ablation>().unwrap(), a);
        }
        assert!("F".parse::<Ablation>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(FactConfig::default().validate().is_ok());
        for f in [
            |c: &mut FactConfig| c.beta = -1.0,
            |c: &mut FactConfig| c.temperature = 0.0,
            |c: &mut FactConfig| c.ema_momentum = 1.0,
            |c: &mut FactConfig| c.epochs = 0,
            |c: &mut FactConfig| c.lr = 0.0,
        ] {
            let mut c = FactConfig::default();
            f(&mut c);
            assert!(matches!(c.validate(), Err(FactError::Config(_))));
        }
    }
}
