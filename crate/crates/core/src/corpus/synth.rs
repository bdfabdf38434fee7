//! Synthetic multi-domain corpus.
//!
//! Each image takes its Fourier phase from a shape template (bar, cross,
//! ring, ...) rendered at a random position, rotation and scale, and its
//! amplitude from a class-independent random 1/ρ spectrum. A domain then
//! multiplies the amplitude by its own radial envelope and maps pixels through
//! a per-domain contrast/brightness window. Before that window the class
//! lives only in the phase. The per-image min-max rescale depends on the
//! phase, so the final amplitude keeps a weak class trace (its overall scale).

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{LabeledSample, MultiDomainCorpus};
use crate::error::{config, Result};
use crate::rng::{self, purpose};
use crate::spectral::{compose, decompose, dft2, idft2, AmplitudeSpec};
use crate::tensor::{ImageTensor, Plane};

const SHAPE_NAMES: [&str; 8] = ["bar", "cross", "ring", "corner", "triangle", "tee", "dots", "square"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub num_domains: usize,
    pub num_classes: usize,
    pub n_per_cell: usize,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub seed: u64,
    pub train_fraction: f64,
    /// Std-dev of the per-bin log-amplitude noise.
    pub amplitude_noise: f64,
    /// Per-domain styles; domains without an entry use [`DomainStyle::preset`].
    pub styles: Vec<DomainStyle>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_domains: 3,
            num_classes: 4,
            n_per_cell: 50,
            height: 16,
            width: 16,
            channels: 1,
            seed: 0,
            train_fraction: 0.9,
            amplitude_noise: 0.6,
            styles: Vec::new(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_domains < 2 {
            return Err(config("synth.num_domains must be >= 2"));
        }
        if self.num_classes < 2 {
            return Err(config("synth.num_classes must be >= 2"));
        }
        if self.n_per_cell == 0 {
            return Err(config("synth.n_per_cell must be >= 1"));
        }
        if self.height < 4 || self.width < 4 {
            return Err(config("synth.height and synth.width must be >= 4"));
        }
        if self.channels != 1 && self.channels != 3 {
            return Err(config("synth.channels must be 1 or 3"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(config("synth.train_fraction must be in (0,1]"));
        }
        if !(self.amplitude_noise >= 0.0) {
            return Err(config("synth.amplitude_noise must be >= 0"));
        }
        for (d, s) in self.styles.iter().enumerate() {
            if !(0.0..=1.0).contains(&s.low) || !(0.0..=1.0).contains(&s.high) || s.low > s.high {
                return Err(config(format!("synth.styles[{d}]: need 0 <= low <= high <= 1")));
            }
            if !(s.band_width > 0.0) || !(s.band_gain >= 0.0) || !s.tilt.is_finite() {
                return Err(config(format!("synth.styles[{d}]: invalid envelope parameters")));
            }
        }
        Ok(())
    }
}

/// Amplitude envelope `(ρ+ρ₀)^tilt · (1 + gain·exp(−(ρ−centre)²/2width²))`
/// followed by the pixel window `[low, high]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainStyle {
    pub tilt: f64,
    pub band_center: f64,
    pub band_gain: f64,
    pub band_width: f64,
    pub low: f64,
    pub high: f64,
    pub tint: [f64; 3],
}

impl DomainStyle {
    pub fn preset(domain: usize) -> Self {
        let base = match domain % 6 {
            0 => (-1.0, 0.0, 0.0, 0.25, 0.75, [1.0, 0.85, 0.7]),
            1 => (0.0, 0.25, 8.0, 0.0, 1.0, [0.7, 1.0, 0.85]),
            2 => (1.0, 0.0, 0.0, 0.1, 0.9, [0.85, 0.7, 1.0]),
            3 => (-0.5, 0.4, 6.0, 0.15, 0.85, [1.0, 1.0, 0.6]),
            4 => (0.5, 0.12, 6.0, 0.05, 0.95, [0.6, 1.0, 1.0]),
            _ => (-1.5, 0.0, 0.0, 0.3, 0.7, [1.0, 0.6, 1.0]),
        };
        Self {
            tilt: base.0 + 0.25 * (domain / 6) as f64,
            band_center: base.1,
            band_gain: base.2,
            band_width: 0.06,
            low: base.3,
            high: base.4,
            tint: base.5,
        }
    }

    pub fn envelope(&self, rho: f64, rho0: f64) -> f64 {
        let band = if self.band_gain > 0.0 {
            let z = (rho - self.band_center) / self.band_width;
            1.0 + self.band_gain * (-0.5 * z * z).exp()
        } else {
            1.0
        };
        (rho + rho0).powf(self.tilt) * band
    }
}

/// Normalized radial frequency of bin (u,v), using signed frequencies.
pub(crate) fn radial_frequency(u: usize, v: usize, h: usize, w: usize) -> f64 {
    let fu = u.min(h - u) as f64 / h as f64;
    let fv = v.min(w - v) as f64 / w as f64;
    fu.hypot(fv)
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

enum Primitive {
    Segments(Vec<((f64, f64), (f64, f64))>),
    Ring(f64),
    Disks(Vec<((f64, f64), f64)>),
}

fn primitive(shape: usize) -> Primitive {
    match shape {
        0 => Primitive::Segments(vec![((-1.0, 0.0), (1.0, 0.0))]),
        1 => Primitive::Segments(vec![((-1.0, 0.0), (1.0, 0.0)), ((0.0, -1.0), (0.0, 1.0))]),
        2 => Primitive::Ring(0.7),
        3 => Primitive::Segments(vec![((-0.6, -0.6), (0.8, -0.6)), ((-0.6, -0.6), (-0.6, 0.8))]),
        4 => {
            let v: Vec<(f64, f64)> = [90.0f64, 210.0, 330.0]
                .iter()
                .map(|a| (0.9 * a.to_radians().cos(), 0.9 * a.to_radians().sin()))
                .collect();
            Primitive::Segments(vec![(v[0], v[1]), (v[1], v[2]), (v[2], v[0])])
        }
        5 => Primitive::Segments(vec![((-0.9, -0.6), (0.9, -0.6)), ((0.0, -0.6), (0.0, 0.9))]),
        6 => Primitive::Disks(vec![((-0.7, 0.0), 0.3), ((0.7, 0.0), 0.3)]),
        _ => Primitive::Segments(vec![
            ((-0.7, -0.7), (0.7, -0.7)),
            ((0.7, -0.7), (0.7, 0.7)),
            ((0.7, 0.7), (-0.7, 0.7)),
            ((-0.7, 0.7), (-0.7, -0.7)),
        ]),
    }
}

/// Render class `class_id`'s template at a random pose; values in [0,1].
pub(crate) fn render_template<R: Rng + ?Sized>(class_id: usize, h: usize, w: usize, rng: &mut R) -> Plane {
    let m = h.min(w) as f64;
    let jitter = 0.15 * m;
    let cy = h as f64 / 2.0 + rng.random_range(-jitter..=jitter);
    let cx = w as f64 / 2.0 + rng.random_range(-jitter..=jitter);
    let theta: f64 = rng.random_range(-0.3..=0.3);
    let variant = if class_id >= SHAPE_NAMES.len() { 0.6 } else { 1.0 };
    let scale = 0.28 * m * rng.random_range(0.85..1.15) * variant;
    let thickness = (0.09 * m).max(1.2);
    let (s, c) = theta.sin_cos();
    let to_px = |q: (f64, f64)| (cy + scale * (c * q.1 + s * q.0), cx + scale * (c * q.0 - s * q.1));
    let prim = primitive(class_id % SHAPE_NAMES.len());
    Plane::from_fn(h, w, |y, x| {
        let p = (y as f64 + 0.5, x as f64 + 0.5);
        let coverage = match &prim {
            Primitive::Segments(segs) => {
                let d = segs
                    .iter()
                    .map(|&(a, b)| segment_distance(p, to_px(a), to_px(b)))
                    .fold(f64::INFINITY, f64::min);
                thickness / 2.0 + 0.5 - d
            }
            Primitive::Ring(r) => {
                let d = ((p.0 - cy).hypot(p.1 - cx) - r * scale).abs();
                thickness / 2.0 + 0.5 - d
            }
            Primitive::Disks(disks) => disks
                .iter()
                .map(|&(ctr, r)| {
                    let q = to_px(ctr);
                    r * scale + 0.5 - (p.0 - q.0).hypot(p.1 - q.1)
                })
                .fold(f64::NEG_INFINITY, f64::max),
        };
        coverage.clamp(0.0, 1.0)
    })
}

fn generate_sample<R: Rng + ?Sized>(
    class_id: usize,
    style: &DomainStyle,
    cfg: &SynthConfig,
    rng: &mut R,
) -> Result<ImageTensor> {
    let (h, w) = (cfg.height, cfg.width);
    let template = render_template(class_id, h, w, rng);
    let mean = template.data().iter().sum::<f64>() / (h * w) as f64;
    let (_, phase) = decompose(&dft2(&template.map(|v| v - mean))?)?;

    let noise: Vec<f64> = (0..h * w).map(|_| StandardNormal.sample(rng)).collect();
    let rho0 = 1.0 / h.max(w) as f64;
    let amp = Plane::from_fn(h, w, |u, v| {
        if u == 0 && v == 0 {
            return 0.0;
        }
        let mirror = ((h - u) % h) * w + (w - v) % w;
        let xi = 0.5 * (noise[u * w + v] + noise[mirror]);
        let rho = radial_frequency(u, v, h, w);
        (rho + rho0).recip() * (cfg.amplitude_noise * xi).exp() * style.envelope(rho, rho0)
    });
    let spectrum = compose(&AmplitudeSpec::new(amp)?, &phase)?;
    let z = idft2(&spectrum)?.real.min_max_normalized();
    let span = style.high - style.low;
    let planes: Vec<Plane> = (0..cfg.channels)
        .map(|c| {
            let tint = if cfg.channels == 1 { 1.0 } else { style.tint[c] };
            z.map(|v| (style.low + span * v) * tint)
        })
        .collect();
    ImageTensor::from_channels(&planes)
}

/// Deterministic in `config.seed`: each sample draws from its own stream.
pub fn synth_generate(config: &SynthConfig) -> Result<MultiDomainCorpus> {
    config.validate()?;
    let mut samples = Vec::with_capacity(config.num_domains * config.num_classes * config.n_per_cell);
    for d in 0..config.num_domains {
        let style = config.styles.get(d).copied().unwrap_or_else(|| DomainStyle::preset(d));
        for c in 0..config.num_classes {
            for k in 0..config.n_per_cell {
                let index = ((d * config.num_classes + c) * config.n_per_cell + k) as u64;
                let mut rng = rng::stream(config.seed, purpose::SYNTH, index);
                samples.push(LabeledSample {
                    image: generate_sample(c, &style, config, &mut rng)?,
                    class_id: c,
                    domain_id: d,
                });
            }
        }
    }
    let domain_names = (0..config.num_domains).map(|d| format!("domain{d}")).collect();
    let class_names = (0..config.num_classes)
        .map(|c| {
            let base = SHAPE_NAMES[c % SHAPE_NAMES.len()];
            if c >= SHAPE_NAMES.len() {
                format!("{base}_small{}", c / SHAPE_NAMES.len())
            } else {
                base.to_string()
            }
        })
        .collect();
    MultiDomainCorpus::new(samples, domain_names, class_names)?.with_split(config.train_fraction, config.seed)
}
