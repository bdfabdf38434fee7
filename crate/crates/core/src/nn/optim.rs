use serde::{Deserialize, Serialize};

use super::{Gradients, Model};
use crate::error::{config, invalid, Result};

/// Step decay: `initial · decay^k` where `k` counts milestones ≤ epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrSchedule {
    pub initial: f64,
    #[serde(default = "default_decay")]
    pub decay: f64,
    #[serde(default)]
    pub milestones: Vec<usize>,
}

fn default_decay() -> f64 {
    0.1
}

impl LrSchedule {
    pub fn constant(lr: f64) -> Self {
        Self {
            initial: lr,
            decay: 0.1,
            milestones: Vec::new(),
        }
    }

    /// One decay by 0.1 at 80% of the run.
    pub fn step_at_80_percent(lr: f64, epochs: usize) -> Self {
        Self {
            initial: lr,
            decay: 0.1,
            milestones: vec![(epochs * 4).div_ceil(5)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.initial > 0.0 && self.initial.is_finite()) {
            return Err(config(format!("learning rate must be > 0, got {}", self.initial)));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(config(format!("lr decay must be in (0,1], got {}", self.decay)));
        }
        Ok(())
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        let k = self.milestones.iter().filter(|&&m| m <= epoch).count();
        self.initial * self.decay.powi(k as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgdConfig {
    pub schedule: LrSchedule,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    #[serde(default = "default_nesterov")]
    pub nesterov: bool,
    /// L2 coefficient added to weight gradients; biases are exempt.
    #[serde(default = "default_weight_decay")]
    pub weight_decay: f64,
}

fn default_momentum() -> f64 {
    0.9
}

fn default_nesterov() -> bool {
    true
}

fn default_weight_decay() -> f64 {
    5e-4
}

impl SgdConfig {
    pub fn new(schedule: LrSchedule) -> Self {
        Self {
            schedule,
            momentum: default_momentum(),
            nesterov: default_nesterov(),
            weight_decay: default_weight_decay(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(config(format!("momentum must be in [0,1), got {}", self.momentum)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(config(format!("weight_decay must be >= 0, got {}", self.weight_decay)));
        }
        Ok(())
    }
}

/// SGD with (Nesterov) momentum:
/// `g ← g + wd·θ`, `v ← μv + g`, `θ ← θ − lr·(g + μv)` (or `θ − lr·v`
/// without Nesterov).
#[derive(Debug, Clone)]
pub struct Sgd {
    config: SgdConfig,
    velocity: Gradients,
}

impl Sgd {
    pub fn new(config: SgdConfig, model: &Model) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            velocity: Gradients::zeros_like(model),
        })
    }

    pub fn config(&self) -> &SgdConfig {
        &self.config
    }

    pub fn velocity(&self) -> &Gradients {
        &self.velocity
    }

    pub fn step(&mut self, model: &mut Model, grads: &Gradients, epoch: usize) -> Result<()> {
        if grads.weights.len() != model.layers.len()
            || model
                .layers
                .iter()
                .zip(grads.weights.iter().zip(&grads.biases))
                .any(|(l, (w, b))| l.weights.len() != w.len() || l.biases.len() != b.len())
        {
            return Err(invalid("gradient shapes do not match the model"));
        }
        let lr = self.config.schedule.lr_at(epoch);
        let mu = self.config.momentum;
        let nesterov = self.config.nesterov;
        let wd = self.config.weight_decay;
        let update = |theta: &mut [f64], g: &[f64], v: &mut [f64], decay: f64| {
            for ((t, &gi), vi) in theta.iter_mut().zip(g).zip(v.iter_mut()) {
                let g = gi + decay * *t;
                *vi = mu * *vi + g;
                let step = if nesterov { g + mu * *vi } else { *vi };
                *t -= lr * step;
            }
        };
        for (k, layer) in model.layers.iter_mut().enumerate() {
            update(&mut layer.weights, &grads.weights[k], &mut self.velocity.weights[k], wd);
            update(&mut layer.biases, &grads.biases[k], &mut self.velocity.biases[k], 0.0);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::{Activation, Layer, LayerKind};
    use super::*;

    fn scalar_model(theta: f64) -> Model {
        let mut l = Layer::zeros(LayerKind::Dense { fan_in: 1, fan_out: 1 }, Activation::Identity);
        l.weights[0] = theta;
        Model::from_layers((1, 1, 1), vec![l]).unwrap()
    }

    fn grad(g: f64) -> Gradients {
        Gradients {
            weights: vec![vec![g]],
            biases: vec![vec![0.0]],
        }
    }

    #[test]
    fn plain_sgd_without_momentum() {
        let mut m = scalar_model(1.0);
        let mut cfg = SgdConfig::new(LrSchedule::constant(0.1));
        cfg.momentum = 0.0;
        cfg.weight_decay = 0.0;
        let mut opt = Sgd::new(cfg, &m).unwrap();
        opt.step(&mut m, &grad(2.0), 0).unwrap();
        assert!((m.layers()[0].weights[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn velocity_decays_geometrically() {
        let mut m = scalar_model(0.0);
        let mut cfg = SgdConfig::new(LrSchedule::constant(0.1));
        cfg.weight_decay = 0.0;
        let mut opt = Sgd::new(cfg, &m).unwrap();
        opt.step(&mut m, &grad(1.0), 0).unwrap();
        let mut prev = opt.velocity().weights[0][0];
        for _ in 0..10 {
            opt.step(&mut m, &grad(0.0), 0).unwrap();
            let v = opt.velocity().weights[0][0];
            assert!((v - 0.9 * prev).abs() < 1e-15);
            prev = v;
        }
    }

    #[test]
    fn quadratic_bowl_converges() {
        let mut m = scalar_model(1.0);
        let mut cfg = SgdConfig::new(LrSchedule::constant(0.1));
        cfg.weight_decay = 0.0;
        let mut opt = Sgd::new(cfg, &m).unwrap();
        let mut steps = 0;
        while m.layers()[0].weights[0].abs() > 1e-6 {
            let theta = m.layers()[0].weights[0];
            opt.step(&mut m, &grad(theta), 0).unwrap();
            steps += 1;
            assert!(steps <= 500);
        }
    }

    #[test]
    fn weight_decay_skips_biases() {
        let mut m = scalar_model(1.0);
        m.layers_mut()[0].biases[0] = 1.0;
        let mut cfg = SgdConfig::new(LrSchedule::constant(0.1));
        cfg.momentum = 0.0;
        cfg.weight_decay = 0.5;
        let mut opt = Sgd::new(cfg, &m).unwrap();
        opt.step(&mut m, &grad(0.0), 0).unwrap();
        assert!((m.layers()[0].weights[0] - 0.95).abs() < 1e-15);
        assert_eq!(m.layers()[0].biases[0], 1.0);
    }

    #[test]
    fn schedule_decays_at_milestones() {
        let s = LrSchedule::step_at_80_percent(0.01, 10);
        assert_eq!(s.milestones, vec![8]);
        assert_eq!(s.lr_at(7), 0.01);
        assert!((s.lr_at(8) - 0.001).abs() < 1e-18);
        assert!(LrSchedule::constant(0.0).validate().is_err());
    }
}
