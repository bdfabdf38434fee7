use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::edges::rectify;
use crate::augment::eliminate_spectrum;
use crate::corpus::radial_frequency;
use crate::error::{config, invalid, Result};
use crate::nn::{argmax, cross_entropy, Activation, Gradients, Layer, LayerKind, LrSchedule, Model, Sgd, SgdConfig};
use crate::rng::{self, purpose};
use crate::spectral::{compose, decompose, dft2, idft2, PhaseSpec, PolarImage};
use crate::tensor::{ImageTensor, Plane};

/// Rectified phase-only reconstruction (unit amplitude), channel-averaged and
/// average-pooled over `pool × pool` blocks. Depends on the phase only.
pub fn phase_features(p: &PolarImage, pool: usize) -> Result<Vec<f64>> {
    let (h, w, c) = p.shape();
    if pool == 0 || pool > h || pool > w {
        return Err(invalid(format!("pool size {pool} does not fit {h}x{w}")));
    }
    let rec = eliminate_spectrum(p, 1.0)?.reconstruct()?;
    let mean = Plane::from_fn(h, w, |y, x| (0..c).map(|k| rec.get(y, x, k)).sum::<f64>() / c as f64);
    let r = rectify(&mean);
    let (ph, pw) = (h / pool, w / pool);
    let norm = (pool * pool) as f64;
    Ok((0..ph * pw)
        .map(|i| {
            let (by, bx) = (i / pw, i % pw);
            let mut s = 0.0;
            for y in by * pool..(by + 1) * pool {
                for x in bx * pool..(bx + 1) * pool {
                    s += r.get(y, x);
                }
            }
            s / norm
        })
        .collect())
}

/// `ln(1 + A)` at DC followed by `ln(1 + mean A)` over `bins` equal-width
/// radial annuli, averaged over channels. Depends on the amplitude only.
pub fn amplitude_features(p: &PolarImage, bins: usize) -> Result<Vec<f64>> {
    if bins == 0 {
        return Err(invalid("need at least one radial bin"));
    }
    let (h, w, c) = p.shape();
    let rmax = radial_frequency(h / 2, w / 2, h, w).max(f64::MIN_POSITIVE);
    let mut sums = vec![0.0; bins];
    let mut counts = vec![0usize; bins];
    let mut dc = 0.0;
    for k in 0..c {
        let a = p.amplitude(k).plane();
        dc += a.get(0, 0);
        for u in 0..h {
            for v in 0..w {
                if u == 0 && v == 0 {
                    continue;
                }
                let b = ((radial_frequency(u, v, h, w) / rmax * bins as f64).ceil() as usize).clamp(1, bins) - 1;
                sums[b] += a.get(u, v);
                counts[b] += 1;
            }
        }
    }
    let mut out = vec![(dc / c as f64).ln_1p()];
    out.extend(
        sums.iter()
            .zip(&counts)
            .map(|(s, &n)| if n == 0 { 0.0 } else { (s / n as f64).ln_1p() }),
    );
    Ok(out)
}

/// Keeps every channel's amplitude and replaces its phase with the phase of
/// white noise. Self-conjugate bins keep their original phase so the result
/// stays real.
pub fn phase_randomized<R: Rng + ?Sized>(image: &ImageTensor, rng: &mut R) -> Result<ImageTensor> {
    let (h, w, _) = image.shape();
    let polar = PolarImage::from_image(image)?;
    let channels = polar
        .channels
        .iter()
        .map(|(a, p)| {
            let noise = Plane::from_fn(h, w, |_, _| rng.sample(StandardNormal));
            let (_, np) = decompose(&dft2(&noise)?)?;
            let phase = Plane::from_fn(h, w, |u, v| {
                if (h - u) % h == u && (w - v) % w == v {
                    p.plane().get(u, v)
                } else {
                    np.plane().get(u, v)
                }
            });
            let spec = compose(a, &PhaseSpec::new(phase)?)?;
            Ok(idft2(&spec)?.real)
        })
        .collect::<Result<Vec<_>>>()?;
    ImageTensor::from_channels(&channels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            lr: 0.05,
            batch_size: 32,
            weight_decay: 5e-4,
            seed: 0,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(config("probe epochs and batch_size must be >= 1"));
        }
        LrSchedule::constant(self.lr).validate()
    }
}

/// Per-feature z-scoring fitted on training features.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// Features with zero variance; they are centred but not rescaled.
    pub degenerate: Vec<usize>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Result<Self> {
        let dim = x.first().map(Vec::len).ok_or_else(|| invalid("no feature vectors"))?;
        if x.iter().any(|v| v.len() != dim) {
            return Err(invalid("feature vectors differ in length"));
        }
        let n = x.len() as f64;
        let mut mean = vec![0.0; dim];
        for v in x {
            for (m, a) in mean.iter_mut().zip(v) {
                *m += a / n;
            }
        }
        let mut var = vec![0.0; dim];
        for v in x {
            for ((s, a), m) in var.iter_mut().zip(v).zip(&mean) {
                *s += (a - m) * (a - m) / n;
            }
        }
        let degenerate: Vec<usize> = (0..dim).filter(|&j| var[j] <= 1e-24).collect();
        let scale = var
            .iter()
            .map(|&s| if s <= 1e-24 { 1.0 } else { 1.0 / s.sqrt() })
            .collect();
        Ok(Self {
            mean,
            scale,
            degenerate,
        })
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((a, m), s)| (a - m) * s)
            .collect()
    }
}

/// Linear softmax classifier on standardized features.
#[derive(Debug, Clone)]
pub struct LinearProbe {
    pub standardizer: Standardizer,
    pub model: Model,
}

impl LinearProbe {
    pub fn fit(x: &[Vec<f64>], y: &[usize], classes: usize, cfg: &ProbeConfig) -> Result<Self> {
        let standardizer = Standardizer::fit(x)?;
        Self::fit_epochs(standardizer, classes, cfg, |_| Ok((x.to_vec(), y.to_vec())))
    }

    /// Trains on a per-epoch training set supplied by `data(epoch)`, which
    /// lets callers redraw augmentations every epoch.
    pub fn fit_epochs(
        standardizer: Standardizer,
        classes: usize,
        cfg: &ProbeConfig,
        mut data: impl FnMut(usize) -> Result<(Vec<Vec<f64>>, Vec<usize>)>,
    ) -> Result<Self> {
        cfg.validate()?;
        if classes < 2 {
            return Err(config("probe needs at least two classes"));
        }
        let dim = standardizer.mean.len();
        let layer = Layer::zeros(
            LayerKind::Dense {
                fan_in: dim,
                fan_out: classes,
            },
            Activation::Identity,
        );
        let mut model = Model::from_layers((1, dim, 1), vec![layer])?;
        let mut sgd_cfg = SgdConfig::new(LrSchedule::constant(cfg.lr));
        sgd_cfg.weight_decay = cfg.weight_decay;
        let mut sgd = Sgd::new(sgd_cfg, &model)?;
        for epoch in 0..cfg.epochs {
            let (x, y) = data(epoch)?;
            if x.len() != y.len() || x.is_empty() {
                return Err(invalid("probe training set is empty or mislabeled"));
            }
            let z: Vec<Vec<f64>> = x.iter().map(|v| standardizer.apply(v)).collect();
            let mut order: Vec<usize> = (0..z.len()).collect();
            order.shuffle(&mut rng::stream(cfg.seed, purpose::PROBE, epoch as u64));
            for chunk in order.chunks(cfg.batch_size) {
                let mut g = Gradients::zeros_like(&model);
                let n = chunk.len() as f64;
                for &i in chunk {
                    let (logits, cache) = model.forward_flat(&z[i])?;
                    let (_, dz) = cross_entropy(&logits, y[i])?;
                    let dz: Vec<f64> = dz.iter().map(|v| v / n).collect();
                    model.backward(&cache, &dz, &mut g)?;
                }
                sgd.step(&mut model, &g, epoch)?;
            }
        }
        Ok(Self { standardizer, model })
    }

    pub fn predict(&self, v: &[f64]) -> Result<usize> {
        Ok(argmax(&self.model.forward_flat(&self.standardizer.apply(v))?.0))
    }

    pub fn accuracy(&self, x: &[Vec<f64>], y: &[usize]) -> Result<f64> {
        if x.is_empty() || x.len() != y.len() {
            return Err(invalid("evaluation set is empty or mislabeled"));
        }
        let mut correct = 0;
        for (v, &t) in x.iter().zip(y) {
            if self.predict(v)? == t {
                correct += 1;
            }
        }
        Ok(correct as f64 / x.len() as f64)
    }

    /// Frobenius norm of the weight rows for features in `rows`.
    pub fn weight_norm(&self, rows: std::ops::Range<usize>) -> f64 {
        let layer = &self.model.layers()[0];
        let k = layer.kind.fan_out();
        layer.weights[rows.start * k..rows.end * k]
            .iter()
            .map(|w| w * w)
            .sum::<f64>()
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::mix_spectra;
    use crate::spectral::AmplitudeSpec;

    fn polar_with_amplitude(p: &PolarImage, amps: Vec<AmplitudeSpec>) -> PolarImage {
        PolarImage {
            channels: amps
                .into_iter()
                .zip(p.channels.iter().map(|(_, ph)| ph.clone()))
                .collect(),
        }
    }

    fn img(seed: u64) -> ImageTensor {
        let mut r = rng::stream(seed, 0, 0);
        ImageTensor::new(8, 8, 1, (0..64).map(|_| r.random()).collect()).unwrap()
    }

    #[test]
    fn phase_features_ignore_amplitude() {
        let (a, b) = (
            PolarImage::from_image(&img(1)).unwrap(),
            PolarImage::from_image(&img(2)).unwrap(),
        );
        let (mixed, _) = mix_spectra(&a, &b, 0.7, 0.3).unwrap();
        assert_eq!(phase_features(&a, 2).unwrap(), phase_features(&mixed, 2).unwrap());
        assert_ne!(
            amplitude_features(&a, 4).unwrap(),
            amplitude_features(&mixed, 4).unwrap()
        );
        let swapped = polar_with_amplitude(&a, b.channels.iter().map(|(amp, _)| amp.clone()).collect());
        assert_eq!(phase_features(&swapped, 4).unwrap(), phase_features(&a, 4).unwrap());
    }

    #[test]
    fn phase_randomization_keeps_amplitude() {
        let x = img(3);
        let y = phase_randomized(&x, &mut rng::stream(0, 0, 9)).unwrap();
        let (a, b) = (PolarImage::from_image(&x).unwrap(), PolarImage::from_image(&y).unwrap());
        for (p, q) in a.amplitude(0).plane().data().iter().zip(b.amplitude(0).plane().data()) {
            assert!((p - q).abs() < 1e-9);
        }
        assert!(x.max_abs_diff(&y) > 0.05);
    }

    #[test]
    fn probe_learns_separable_data() {
        let mut r = rng::stream(1, 0, 0);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..200 {
            let c = i % 2;
            x.push(vec![c as f64 * 2.0 - 1.0 + 0.3 * r.random::<f64>(), r.random()]);
            y.push(c);
        }
        let probe = LinearProbe::fit(&x, &y, 2, &ProbeConfig::default()).unwrap();
        assert_eq!(probe.accuracy(&x, &y).unwrap(), 1.0);
        assert!(probe.weight_norm(0..1) > probe.weight_norm(1..2));
    }

    #[test]
    fn degenerate_features_flagged() {
        let s = Standardizer::fit(&[vec![1.0, 2.0], vec![1.0, 4.0]]).unwrap();
        assert_eq!(s.degenerate, vec![0]);
        assert_eq!(s.apply(&[1.0, 3.0]), vec![0.0, 0.0]);
    }
}
