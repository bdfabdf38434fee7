use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{amplitude_features, phase_features, LinearProbe, ProbeConfig, Standardizer};
use crate::augment::{mix_spectra, sample_lambda};
use crate::corpus::{MultiDomainCorpus, PairSampler, PairingStrategy, Split};
use crate::error::{config, FactError, Result};
use crate::rng::{self, purpose};
use crate::spectral::PolarImage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShrinkageConfig {
    /// Amplitude-mix strength for the augmented run; 0 reproduces the
    /// baseline run exactly.
    pub eta: f64,
    /// Pool size of the phase features.
    pub pool: usize,
    /// Radial bins of the amplitude features.
    pub bins: usize,
    pub probe: ProbeConfig,
}

impl Default for ShrinkageConfig {
    fn default() -> Self {
        Self {
            eta: 1.0,
            pool: 2,
            bins: 8,
            probe: ProbeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShrinkageReport {
    pub phase_dims: usize,
    pub amplitude_dims: usize,
    /// ‖w_amplitude‖ / ‖w_phase‖ without augmentation.
    pub baseline_ratio: f64,
    /// The same ratio when trained with amplitude-mixed views.
    pub augmented_ratio: f64,
    pub baseline_val_accuracy: f64,
    pub augmented_val_accuracy: f64,
    /// Largest absolute change of any phase feature under one augmentation draw.
    pub phase_shift_max: f64,
    /// Mean absolute change of the amplitude features under the same draw.
    pub amplitude_shift_mean: f64,
    pub phase_shift_mean_sq: f64,
    pub amplitude_shift_mean_sq: f64,
    /// Indices of features with zero variance on the training split.
    pub degenerate_features: Vec<usize>,
}

impl ShrinkageReport {
    pub fn summary(&self) -> String {
        format!(
            "features: {} phase, {} amplitude (degenerate: {:?})\n\
             |w_a|/|w_p|: baseline {:.4}, amplitude-mixed {:.4}\n\
             val accuracy: baseline {:.3}, amplitude-mixed {:.3}\n\
             phase shift max {:.3e}, amplitude shift mean {:.4}\n",
            self.phase_dims,
            self.amplitude_dims,
            self.degenerate_features,
            self.baseline_ratio,
            self.augmented_ratio,
            self.baseline_val_accuracy,
            self.augmented_val_accuracy,
            self.phase_shift_max,
            self.amplitude_shift_mean,
        )
    }

    pub fn write_toml(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| config(format!("cannot serialize report: {e}")))?;
        std::fs::write(path, text).map_err(|e| FactError::io(path, e))
    }
}

fn features(p: &PolarImage, cfg: &ShrinkageConfig) -> Result<Vec<f64>> {
    let mut v = phase_features(p, cfg.pool)?;
    v.extend(amplitude_features(p, cfg.bins)?);
    Ok(v)
}

/// One amplitude-mix draw for every training sample, keyed by `draw`.
fn augmented_features(
    polar: &[PolarImage],
    train: &[usize],
    sampler: &PairSampler,
    cfg: &ShrinkageConfig,
    draw: u64,
) -> Result<Vec<Vec<f64>>> {
    let mut rng = rng::stream(cfg.probe.seed, purpose::AUGMENT, draw);
    train
        .iter()
        .map(|&i| {
            let j = sampler.sample(i, PairingStrategy::Random, &mut rng)?;
            let lambda = sample_lambda(cfg.eta, &mut rng);
            let (mixed, _) = mix_spectra(&polar[i], &polar[j], lambda, 0.0)?;
            features(&mixed, cfg)
        })
        .collect()
}

/// Trains a linear probe on concatenated phase and amplitude features, once
/// with identity views and once with amplitude-mixed views, and compares the
/// weight mass each run puts on the amplitude group.
pub fn shrinkage_experiment(corpus: &MultiDomainCorpus, cfg: &ShrinkageConfig) -> Result<ShrinkageReport> {
    if !(0.0..=1.0).contains(&cfg.eta) {
        return Err(config(format!("eta must lie in [0,1], got {}", cfg.eta)));
    }
    let polar: Vec<PolarImage> = corpus
        .samples()
        .iter()
        .map(|s| PolarImage::from_image(&s.image))
        .collect::<Result<_>>()?;
    let base: Vec<Vec<f64>> = polar.iter().map(|p| features(p, cfg)).collect::<Result<_>>()?;
    let (h, w, _) = polar
        .first()
        .ok_or_else(|| FactError::Corpus("corpus is empty".into()))?
        .shape();
    let phase_dims = (h / cfg.pool) * (w / cfg.pool);
    let amplitude_dims = base[0].len() - phase_dims;

    let train = corpus.indices(Split::Train);
    let val = corpus.indices(Split::Val);
    let label = |i: &usize| corpus.sample(*i).class_id;
    let x_train: Vec<Vec<f64>> = train.iter().map(|&i| base[i].clone()).collect();
    let y_train: Vec<usize> = train.iter().map(label).collect();
    let x_val: Vec<Vec<f64>> = val.iter().map(|&i| base[i].clone()).collect();
    let y_val: Vec<usize> = val.iter().map(label).collect();
    let standardizer = Standardizer::fit(&x_train)?;
    let sampler = PairSampler::new(corpus);
    let classes = corpus.num_classes();

    let doubled = |views: Vec<Vec<f64>>| {
        let mut x = x_train.clone();
        x.extend(views);
        let mut y = y_train.clone();
        y.extend(y_train.iter().copied());
        (x, y)
    };
    let baseline = LinearProbe::fit_epochs(standardizer.clone(), classes, &cfg.probe, |_| {
        Ok(doubled(x_train.clone()))
    })?;
    let augmented = LinearProbe::fit_epochs(standardizer.clone(), classes, &cfg.probe, |epoch| {
        if cfg.eta == 0.0 {
            return Ok(doubled(x_train.clone()));
        }
        Ok(doubled(augmented_features(
            &polar,
            &train,
            &sampler,
            cfg,
            epoch as u64,
        )?))
    })?;

    let shifted = augmented_features(&polar, &train, &sampler, cfg, 0)?;
    let (mut p_max, mut p_sq, mut a_abs, mut a_sq) = (0.0f64, 0.0, 0.0, 0.0);
    for (orig, aug) in x_train.iter().zip(&shifted) {
        for (j, (o, a)) in orig.iter().zip(aug).enumerate() {
            let d = a - o;
            if j < phase_dims {
                p_max = p_max.max(d.abs());
                p_sq += d * d;
            } else {
                a_abs += d.abs();
                a_sq += d * d;
            }
        }
    }
    let n = x_train.len() as f64;
    let ratio = |p: &LinearProbe| {
        let total = phase_dims + amplitude_dims;
        p.weight_norm(phase_dims..total) / p.weight_norm(0..phase_dims)
    };
    let val_acc = |p: &LinearProbe| {
        if x_val.is_empty() {
            p.accuracy(&x_train, &y_train)
        } else {
            p.accuracy(&x_val, &y_val)
        }
    };
    Ok(ShrinkageReport {
        phase_dims,
        amplitude_dims,
        baseline_ratio: ratio(&baseline),
        augmented_ratio: ratio(&augmented),
        baseline_val_accuracy: val_acc(&baseline)?,
        augmented_val_accuracy: val_acc(&augmented)?,
        phase_shift_max: p_max,
        amplitude_shift_mean: a_abs / (n * amplitude_dims as f64),
        phase_shift_mean_sq: p_sq / (n * phase_dims as f64),
        amplitude_shift_mean_sq: a_sq / (n * amplitude_dims as f64),
        degenerate_features: standardizer.degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{synth_generate, SynthConfig};

    fn corpus() -> MultiDomainCorpus {
        synth_generate(&SynthConfig {
            n_per_cell: 10,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn zero_eta_reproduces_baseline() {
        let cfg = ShrinkageConfig {
            eta: 0.0,
            probe: ProbeConfig {
                epochs: 3,
                ..Default::default()
            },
            ..Default::default()
        };
        let r = shrinkage_experiment(&corpus(), &cfg).unwrap();
        assert_eq!(r.baseline_ratio, r.augmented_ratio);
        assert_eq!(r.baseline_val_accuracy, r.augmented_val_accuracy);
        assert_eq!(r.amplitude_shift_mean, 0.0);
    }

    #[test]
    fn mixing_moves_only_amplitude_features() {
        let cfg = ShrinkageConfig {
            probe: ProbeConfig {
                epochs: 2,
                ..Default::default()
            },
            ..Default::default()
        };
        let r = shrinkage_experiment(&corpus(), &cfg).unwrap();
        assert_eq!(r.phase_shift_max, 0.0);
        assert!(r.amplitude_shift_mean > 1e-3);
        assert_eq!((r.phase_dims, r.amplitude_dims), (64, 9));
    }

    #[test]
    fn eta_out_of_range() {
        let cfg = ShrinkageConfig {
            eta: 1.5,
            ..Default::default()
        };
        assert!(shrinkage_experiment(&corpus(), &cfg).is_err());
    }
}
