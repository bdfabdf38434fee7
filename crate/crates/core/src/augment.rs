//! Fourier-domain augmentations that perturb amplitude spectra and keep the
//! phase of the source image.
//!
//! Every strategy has two layers: a `*_spectra` function working on
//! [`PolarImage`]s (the composed spectrum before the inverse transform), and
//! an image-level wrapper that inverts and post-processes. Mix/swap/cutmix/
//! jitter clip to [0,1]; elimination and amplitude-only reconstructions are
//! min-max rescaled per image since their dynamic range is arbitrary.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{config, invalid, Result};
use crate::spectral::{unshift_plane, AmplitudeSpec, PhaseSpec, PolarImage};
use crate::tensor::{ImageTensor, Plane};

/// Default constant amplitude for phase-only reconstructions.
pub const DEFAULT_CONST_AMPLITUDE: f64 = 20000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Amplitude mix.
    Am,
    /// Amplitude swap of a centred low-frequency rectangle.
    As,
    /// Amplitude cutmix with a Bernoulli mask.
    Ac,
    /// Multiplicative amplitude jitter.
    Aj,
    /// Amplitude elimination (phase-only reconstruction).
    Ae,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [Strategy::Am, Strategy::As, Strategy::Ac, Strategy::Aj, Strategy::Ae];

    pub fn needs_partner(self) -> bool {
        matches!(self, Strategy::Am | Strategy::As | Strategy::Ac)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Strategy::Am => "am",
            Strategy::As => "as",
            Strategy::Ac => "ac",
            Strategy::Aj => "aj",
            Strategy::Ae => "ae",
        };
        f.write_str(s)
    }
}

impl FromStr for Strategy {
    type Err = crate::error::FactError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "am" => Ok(Strategy::Am),
            "as" => Ok(Strategy::As),
            "ac" => Ok(Strategy::Ac),
            "aj" => Ok(Strategy::Aj),
            "ae" => Ok(Strategy::Ae),
            other => Err(config(format!("unknown augmentation strategy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub strategy: Strategy,
    /// Mix strength; λ ∼ U(0, eta).
    pub eta: f64,
    /// Swap rectangle side fraction.
    pub r: f64,
    /// Cutmix mask density.
    pub bernoulli_p: f64,
    /// Jitter noise scale.
    pub sigma: f64,
    pub const_amplitude: f64,
    pub seed: u64,
    /// Draw one λ for both counterparts instead of two independent ones.
    pub shared_lambda: bool,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Am,
            eta: 1.0,
            r: 0.09,
            bernoulli_p: 0.5,
            sigma: 0.5,
            const_amplitude: DEFAULT_CONST_AMPLITUDE,
            seed: 0,
            shared_lambda: false,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(config(format!("augment.eta must be in [0,1], got {}", self.eta)));
        }
        if !(0.0..=1.0).contains(&self.r) {
            return Err(config(format!("augment.r must be in [0,1], got {}", self.r)));
        }
        if !(0.0..=1.0).contains(&self.bernoulli_p) {
            return Err(config(format!(
                "augment.bernoulli_p must be in [0,1], got {}",
                self.bernoulli_p
            )));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(config(format!("augment.sigma must be >= 0, got {}", self.sigma)));
        }
        if !(self.const_amplitude > 0.0) || !self.const_amplitude.is_finite() {
            return Err(config(format!(
                "augment.const_amplitude must be > 0, got {}",
                self.const_amplitude
            )));
        }
        Ok(())
    }

    /// True when the configured strategy cannot change an image.
    pub fn is_identity(&self) -> bool {
        match self.strategy {
            Strategy::Am => self.eta == 0.0,
            Strategy::As => self.r == 0.0,
            Strategy::Ac => self.bernoulli_p == 0.0,
            Strategy::Aj => self.sigma == 0.0,
            Strategy::Ae => false,
        }
    }
}

/// The two augmented counterparts of a sampled image pair.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedPair {
    pub first: ImageTensor,
    pub second: ImageTensor,
}

/// Random parameters actually used for one augmentation call.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AugmentRecord {
    pub strategy: Option<Strategy>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub r: Option<f64>,
    pub mask_density: Option<f64>,
    pub sigma: Option<f64>,
    pub const_amplitude: Option<f64>,
}

fn check_same_shape(a: &PolarImage, b: &PolarImage) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(invalid(format!(
            "image shapes differ: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(invalid(format!("{name} must be in [0,1], got {v}")));
    }
    Ok(())
}

fn with_amplitudes(src: &PolarImage, amps: Vec<Plane>) -> Result<PolarImage> {
    let channels = src
        .channels
        .iter()
        .zip(amps)
        .map(|((_, phase), a)| Ok((AmplitudeSpec::new(a)?, phase.clone())))
        .collect::<Result<Vec<_>>>()?;
    Ok(PolarImage { channels })
}

fn blend(a: &Plane, b: &Plane, weight: impl Fn(usize) -> f64) -> Plane {
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .enumerate()
        .map(|(i, (&x, &y))| {
            let s = weight(i);
            (1.0 - s) * x + s * y
        })
        .collect();
    Plane::new(a.height(), a.width(), data).expect("shape preserved")
}

/// `(1−λ)·A(src) + λ·A(other)` with the phase of `src`.
fn mix_one(src: &PolarImage, other: &PolarImage, lambda: f64) -> Result<PolarImage> {
    let amps = src
        .channels
        .iter()
        .zip(&other.channels)
        .map(|((a, _), (b, _))| blend(a.plane(), b.plane(), |_| lambda))
        .collect();
    with_amplitudes(src, amps)
}

pub fn mix_spectra(p1: &PolarImage, p2: &PolarImage, lambda1: f64, lambda2: f64) -> Result<(PolarImage, PolarImage)> {
    check_same_shape(p1, p2)?;
    check_unit("lambda1", lambda1)?;
    check_unit("lambda2", lambda2)?;
    Ok((mix_one(p1, p2, lambda1)?, mix_one(p2, p1, lambda2)?))
}

/// Binary-mask blend; the mask is H×W in unshifted coordinates and shared by
/// all channels.
pub fn cutmix_spectra(p1: &PolarImage, p2: &PolarImage, mask: &Plane) -> Result<(PolarImage, PolarImage)> {
    check_same_shape(p1, p2)?;
    let (h, w, _) = p1.shape();
    if mask.shape() != (h, w) {
        return Err(invalid("mask shape does not match spectrum"));
    }
    if mask.data().iter().any(|&s| s != 0.0 && s != 1.0) {
        return Err(invalid("mask entries must be 0 or 1"));
    }
    let m = mask.data();
    let mix = |src: &PolarImage, other: &PolarImage| {
        let amps = src
            .channels
            .iter()
            .zip(&other.channels)
            .map(|((a, _), (b, _))| blend(a.plane(), b.plane(), |i| m[i]))
            .collect();
        with_amplitudes(src, amps)
    };
    Ok((mix(p1, p2)?, mix(p2, p1)?))
}

/// Side length of the swapped rectangle along an axis of length `n`.
fn swap_extent(r: f64, n: usize) -> usize {
    ((r * n as f64 + 1e-9).floor() as usize).min(n)
}

/// Rows and columns (in centre-shifted coordinates) of the swapped rectangle:
/// `⌊rH⌋ × ⌊rW⌋` centred on `(⌊H/2⌋, ⌊W/2⌋)`.
pub fn swap_region(height: usize, width: usize, r: f64) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
    let (eh, ew) = (swap_extent(r, height), swap_extent(r, width));
    let top = height / 2 - eh / 2;
    let left = width / 2 - ew / 2;
    (top..top + eh, left..left + ew)
}

/// The swap rectangle as a binary mask in unshifted coordinates.
pub fn swap_mask(height: usize, width: usize, r: f64) -> Plane {
    let (rows, cols) = swap_region(height, width, r);
    let shifted = Plane::from_fn(height, width, |u, v| {
        if rows.contains(&u) && cols.contains(&v) {
            1.0
        } else {
            0.0
        }
    });
    unshift_plane(&shifted)
}

pub fn swap_spectra(p1: &PolarImage, p2: &PolarImage, r: f64) -> Result<(PolarImage, PolarImage)> {
    check_same_shape(p1, p2)?;
    check_unit("r", r)?;
    let (h, w, _) = p1.shape();
    cutmix_spectra(p1, p2, &swap_mask(h, w, r))
}

/// `max(0, (1 + n)·A)` per bin with one noise plane per channel.
pub fn jitter_spectrum(p: &PolarImage, noise: &[Plane]) -> Result<PolarImage> {
    if noise.len() != p.channels.len() {
        return Err(invalid("jitter noise needs one plane per channel"));
    }
    let amps = p
        .channels
        .iter()
        .zip(noise)
        .map(|((a, _), n)| {
            if n.shape() != a.plane().shape() {
                return Err(invalid("jitter noise shape does not match spectrum"));
            }
            let data = a
                .plane()
                .data()
                .iter()
                .zip(n.data())
                .map(|(&amp, &z)| ((1.0 + z) * amp).max(0.0))
                .collect();
            Plane::new(a.plane().height(), a.plane().width(), data)
        })
        .collect::<Result<Vec<_>>>()?;
    with_amplitudes(p, amps)
}

pub fn eliminate_spectrum(p: &PolarImage, const_amplitude: f64) -> Result<PolarImage> {
    if !(const_amplitude > 0.0) || !const_amplitude.is_finite() {
        return Err(invalid(format!("const_amplitude must be > 0, got {const_amplitude}")));
    }
    let (h, w, _) = p.shape();
    let amps = p
        .channels
        .iter()
        .map(|_| Plane::from_fn(h, w, |_, _| const_amplitude))
        .collect();
    with_amplitudes(p, amps)
}

pub fn amplitude_only_spectrum(p: &PolarImage, const_phase: f64) -> Result<PolarImage> {
    let (h, w, _) = p.shape();
    let channels = p
        .channels
        .iter()
        .map(|(a, _)| Ok((a.clone(), PhaseSpec::constant(h, w, const_phase)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PolarImage { channels })
}

/// λ ∼ U(0, eta).
pub fn sample_lambda<R: Rng + ?Sized>(eta: f64, rng: &mut R) -> f64 {
    rng.random::<f64>() * eta
}

/// i.i.d. Bernoulli(p) mask over H×W bins.
pub fn sample_mask<R: Rng + ?Sized>(height: usize, width: usize, p: f64, rng: &mut R) -> Plane {
    Plane::from_fn(height, width, |_, _| if rng.random::<f64>() < p { 1.0 } else { 0.0 })
}

/// One N(0, σ) plane per channel.
pub fn sample_jitter_noise<R: Rng + ?Sized>(
    height: usize,
    width: usize,
    channels: usize,
    sigma: f64,
    rng: &mut R,
) -> Vec<Plane> {
    (0..channels)
        .map(|_| {
            Plane::from_fn(height, width, |_, _| {
                let z: f64 = StandardNormal.sample(rng);
                sigma * z
            })
        })
        .collect()
}

fn pair_from(spectra: (PolarImage, PolarImage)) -> Result<AugmentedPair> {
    Ok(AugmentedPair {
        first: spectra.0.reconstruct()?.clipped(),
        second: spectra.1.reconstruct()?.clipped(),
    })
}

fn polar_pair(x1: &ImageTensor, x2: &ImageTensor) -> Result<(PolarImage, PolarImage)> {
    if x1.shape() != x2.shape() {
        return Err(invalid(format!(
            "image shapes differ: {:?} vs {:?}",
            x1.shape(),
            x2.shape()
        )));
    }
    Ok((PolarImage::from_image(x1)?, PolarImage::from_image(x2)?))
}

pub fn amplitude_mix(x1: &ImageTensor, x2: &ImageTensor, lambda1: f64, lambda2: f64) -> Result<AugmentedPair> {
    let (p1, p2) = polar_pair(x1, x2)?;
    pair_from(mix_spectra(&p1, &p2, lambda1, lambda2)?)
}

pub fn amplitude_swap(x1: &ImageTensor, x2: &ImageTensor, r: f64) -> Result<AugmentedPair> {
    let (p1, p2) = polar_pair(x1, x2)?;
    pair_from(swap_spectra(&p1, &p2, r)?)
}

/// Returns the pair and the realised mask density.
pub fn amplitude_cutmix<R: Rng + ?Sized>(
    x1: &ImageTensor,
    x2: &ImageTensor,
    p: f64,
    rng: &mut R,
) -> Result<(AugmentedPair, f64)> {
    check_unit("bernoulli p", p)?;
    let (p1, p2) = polar_pair(x1, x2)?;
    let mask = sample_mask(x1.height(), x1.width(), p, rng);
    let density = mask.data().iter().sum::<f64>() / mask.data().len() as f64;
    Ok((pair_from(cutmix_spectra(&p1, &p2, &mask)?)?, density))
}

pub fn amplitude_jitter<R: Rng + ?Sized>(x: &ImageTensor, sigma: f64, rng: &mut R) -> Result<ImageTensor> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(invalid(format!("sigma must be >= 0, got {sigma}")));
    }
    let p = PolarImage::from_image(x)?;
    let noise = sample_jitter_noise(x.height(), x.width(), x.channels(), sigma, rng);
    Ok(jitter_spectrum(&p, &noise)?.reconstruct()?.clipped())
}

/// Phase-only reconstruction: constant amplitude, original phase, min-max
/// rescaled.
pub fn amplitude_eliminate(x: &ImageTensor, const_amplitude: f64) -> Result<ImageTensor> {
    let p = PolarImage::from_image(x)?;
    Ok(eliminate_spectrum(&p, const_amplitude)?
        .reconstruct()?
        .min_max_rescaled())
}

/// Amplitude-only reconstruction: constant phase, original amplitude, min-max
/// rescaled.
pub fn amplitude_only(x: &ImageTensor, const_phase: f64) -> Result<ImageTensor> {
    let p = PolarImage::from_image(x)?;
    Ok(amplitude_only_spectrum(&p, const_phase)?
        .reconstruct()?
        .min_max_rescaled())
}

/// Applies a configured strategy to image pairs with caller-owned RNG.
#[derive(Debug, Clone)]
pub struct Augmenter {
    config: AugmentConfig,
}

impl Augmenter {
    pub fn new(config: AugmentConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &AugmentConfig {
        &self.config
    }

    /// Produce the two augmented counterparts of `(x1, x2)`. Single-image
    /// strategies (AJ, AE) are applied to each image independently.
    pub fn augment_pair<R: Rng + ?Sized>(
        &self,
        x1: &ImageTensor,
        x2: &ImageTensor,
        rng: &mut R,
    ) -> Result<(AugmentedPair, AugmentRecord)> {
        let c = &self.config;
        let mut record = AugmentRecord {
            strategy: Some(c.strategy),
            ..Default::default()
        };
        let pair = match c.strategy {
            Strategy::Am => {
                let l1 = sample_lambda(c.eta, rng);
                let l2 = if c.shared_lambda { l1 } else { sample_lambda(c.eta, rng) };
                record.lambda1 = Some(l1);
                record.lambda2 = Some(l2);
                amplitude_mix(x1, x2, l1, l2)?
            }
            Strategy::As => {
                record.r = Some(c.r);
                amplitude_swap(x1, x2, c.r)?
            }
            Strategy::Ac => {
                let (pair, density) = amplitude_cutmix(x1, x2, c.bernoulli_p, rng)?;
                record.mask_density = Some(density);
                pair
            }
            Strategy::Aj => {
                record.sigma = Some(c.sigma);
                if x1.shape() != x2.shape() {
                    return Err(invalid("image shapes differ"));
                }
                AugmentedPair {
                    first: amplitude_jitter(x1, c.sigma, rng)?,
                    second: amplitude_jitter(x2, c.sigma, rng)?,
                }
            }
            Strategy::Ae => {
                record.const_amplitude = Some(c.const_amplitude);
                AugmentedPair {
                    first: amplitude_eliminate(x1, c.const_amplitude)?,
                    second: amplitude_eliminate(x2, c.const_amplitude)?,
                }
            }
        };
        Ok((pair, record))
    }

    /// Single-image augmentation for AJ and AE.
    pub fn augment_single<R: Rng + ?Sized>(
        &self,
        x: &ImageTensor,
        rng: &mut R,
    ) -> Result<(ImageTensor, AugmentRecord)> {
        let c = &self.config;
        let mut record = AugmentRecord {
            strategy: Some(c.strategy),
            ..Default::default()
        };
        let out = match c.strategy {
            Strategy::Aj => {
                record.sigma = Some(c.sigma);
                amplitude_jitter(x, c.sigma, rng)?
            }
            Strategy::Ae => {
                record.const_amplitude = Some(c.const_amplitude);
                amplitude_eliminate(x, c.const_amplitude)?
            }
            s => return Err(config(format!("strategy {s} needs a partner image"))),
        };
        Ok((out, record))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn image(seed: u64, h: usize, w: usize, c: usize) -> ImageTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImageTensor::new(h, w, c, (0..h * w * c).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    #[test]
    fn lambda_zero_eta() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..100).all(|_| sample_lambda(0.0, &mut rng) == 0.0));
    }

    #[test]
    fn lambda_range_and_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!((0..10_000).all(|_| sample_lambda(0.2, &mut rng) < 0.2));
        let n = 100_000;
        let mean = (0..n).map(|_| sample_lambda(1.0, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn mix_identity_cases() {
        let (a, b) = (image(3, 8, 8, 3), image(4, 8, 8, 3));
        let pair = amplitude_mix(&a, &b, 0.0, 0.0).unwrap();
        assert!(pair.first.max_abs_diff(&a) < 1e-6);
        assert!(pair.second.max_abs_diff(&b) < 1e-6);
        let pair = amplitude_mix(&a, &a, 0.7, 0.3).unwrap();
        assert!(pair.first.max_abs_diff(&a) < 1e-6);
        assert!(pair.second.max_abs_diff(&a) < 1e-6);
    }

    #[test]
    fn full_mix_equals_full_swap() {
        let (a, b) = (image(5, 6, 7, 1), image(6, 6, 7, 1));
        let (pa, pb) = (PolarImage::from_image(&a).unwrap(), PolarImage::from_image(&b).unwrap());
        let mixed = mix_spectra(&pa, &pb, 1.0, 1.0).unwrap();
        let swapped = swap_spectra(&pa, &pb, 1.0).unwrap();
        let d = mixed
            .0
            .reconstruct()
            .unwrap()
            .max_abs_diff(&swapped.0.reconstruct().unwrap());
        assert!(d < 1e-9);
        assert_eq!(swapped.0.amplitude(0), pb.amplitude(0));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let (a, b) = (image(1, 4, 4, 1), image(2, 4, 5, 1));
        assert!(amplitude_mix(&a, &b, 0.1, 0.1).is_err());
        assert!(amplitude_swap(&a, &b, 0.5).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(amplitude_cutmix(&a, &b, 0.5, &mut rng).is_err());
    }

    #[test]
    fn lambda_out_of_range_rejected() {
        let a = image(1, 4, 4, 1);
        assert!(amplitude_mix(&a, &a, 1.5, 0.0).is_err());
    }

    #[test]
    fn swap_region_paper_partial_ratio() {
        let (rows, cols) = swap_region(224, 224, 0.09);
        assert_eq!(rows, 102..122);
        assert_eq!(cols, 102..122);
        assert_eq!(swap_region(5, 5, 0.0).0.len(), 0);
        assert_eq!(swap_region(5, 4, 1.0), (0..5, 0..4));
    }

    #[test]
    fn swap_zero_is_identity() {
        let (a, b) = (image(7, 9, 9, 3), image(8, 9, 9, 3));
        let pair = amplitude_swap(&a, &b, 0.0).unwrap();
        assert!(pair.first.max_abs_diff(&a) < 1e-6);
        assert!(pair.second.max_abs_diff(&b) < 1e-6);
    }

    #[test]
    fn cutmix_density_concentrates() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = sample_mask(64, 64, 0.5, &mut rng);
        let density = m.data().iter().sum::<f64>() / 4096.0;
        assert!((density - 0.5).abs() < 0.05, "{density}");
        let zero = sample_mask(8, 8, 0.0, &mut rng);
        assert!(zero.data().iter().all(|&v| v == 0.0));
        let one = sample_mask(8, 8, 1.0, &mut rng);
        assert!(one.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn jitter_zero_sigma_identity_and_floor() {
        let a = image(9, 8, 8, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = amplitude_jitter(&a, 0.0, &mut rng).unwrap();
        assert!(out.max_abs_diff(&a) < 1e-6);
        let p = PolarImage::from_image(&a).unwrap();
        let noise = sample_jitter_noise(8, 8, 3, 0.3, &mut rng);
        let j = jitter_spectrum(&p, &noise).unwrap();
        for c in 0..3 {
            assert!(j.amplitude(c).plane().data().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn jitter_deterministic() {
        let a = image(10, 8, 8, 1);
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            amplitude_jitter(&a, 0.5, &mut rng).unwrap()
        };
        assert_eq!(run().data(), run().data());
    }

    #[test]
    fn eliminate_keeps_phase_and_handles_constant() {
        let a = image(12, 8, 8, 3);
        let p = PolarImage::from_image(&a).unwrap();
        let e = eliminate_spectrum(&p, 20000.0).unwrap();
        for c in 0..3 {
            assert_eq!(e.phase(c), p.phase(c));
        }
        let flat = ImageTensor::new(8, 8, 1, vec![0.4; 64]).unwrap();
        let out = amplitude_eliminate(&flat, 20000.0).unwrap();
        assert!(out.data().iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
        assert!(eliminate_spectrum(&p, 0.0).is_err());
    }

    #[test]
    fn amplitude_only_is_centrosymmetric() {
        let a = image(13, 7, 6, 1);
        let p = PolarImage::from_image(&a).unwrap();
        let ao = amplitude_only_spectrum(&p, 0.0).unwrap();
        assert_eq!(ao.amplitude(0), p.amplitude(0));
        let out = amplitude_only(&a, 0.0).unwrap();
        let (h, w, _) = out.shape();
        for y in 0..h {
            for x in 0..w {
                let d = out.get(y, x, 0) - out.get((h - y) % h, (w - x) % w, 0);
                assert!(d.abs() < 1e-6);
            }
        }
        let zero = ImageTensor::zeros(5, 5, 1).unwrap();
        assert!(amplitude_only(&zero, 0.0).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn config_validation() {
        let mut c = AugmentConfig::default();
        assert!(c.validate().is_ok());
        c.eta = 1.2;
        assert!(c.validate().is_err());
        c = AugmentConfig {
            const_amplitude: 0.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        assert_eq!("AJ".parse::<Strategy>().unwrap(), Strategy::Aj);
        assert!("xx".parse::<Strategy>().is_err());
    }

    #[test]
    fn augmenter_records_lambdas() {
        let aug = Augmenter::new(AugmentConfig {
            shared_lambda: true,
            ..Default::default()
        })
        .unwrap();
        let (a, b) = (image(1, 8, 8, 1), image(2, 8, 8, 1));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (_, rec) = aug.augment_pair(&a, &b, &mut rng).unwrap();
        assert_eq!(rec.lambda1, rec.lambda2);
        assert!(rec.lambda1.unwrap() < 1.0);
    }
}
