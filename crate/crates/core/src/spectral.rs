//! 2D discrete Fourier transforms of image channels and their polar
//! (amplitude/phase) form.
//!
//! The forward transform is unnormalized with kernel
//! `exp(-j2π(hu/H + wv/W))`; the inverse carries the `1/(HW)` factor.
//! Arbitrary sizes are supported through `rustfft`'s mixed-radix and
//! Bluestein plans.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};
use crate::tensor::{ImageTensor, Plane};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// Complex frequency plane of one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    height: usize,
    width: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Spectrum {
    pub fn new(height: usize, width: usize, re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(invalid("spectrum dimensions must be positive"));
        }
        if re.len() != height * width || im.len() != height * width {
            return Err(invalid(format!(
                "spectrum planes must have {} entries, got {} and {}",
                height * width,
                re.len(),
                im.len()
            )));
        }
        Ok(Self { height, width, re, im })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            re: vec![0.0; height * width],
            im: vec![0.0; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn real_plane(&self) -> &[f64] {
        &self.re
    }

    pub fn imag_plane(&self) -> &[f64] {
        &self.im
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Complex64 {
        let i = u * self.width + v;
        Complex64::new(self.re[i], self.im[i])
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, z: Complex64) {
        let i = u * self.width + v;
        self.re[i] = z.re;
        self.im[i] = z.im;
    }

    pub fn is_finite(&self) -> bool {
        self.re.iter().chain(&self.im).all(|v| v.is_finite())
    }

    /// Largest relative violation of `F(u,v) = conj(F(-u,-v))`, scaled by the
    /// largest bin magnitude.
    pub fn conjugate_symmetry_error(&self) -> f64 {
        let (h, w) = self.shape();
        let scale = (0..h * w)
            .map(|i| self.re[i].hypot(self.im[i]))
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for u in 0..h {
            for v in 0..w {
                let a = self.get(u, v);
                let b = self.get((h - u) % h, (w - v) % w).conj();
                worst = worst.max((a - b).norm());
            }
        }
        worst / scale
    }

    fn to_complex(&self) -> Vec<Complex64> {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect()
    }

    fn from_complex(height: usize, width: usize, buf: &[Complex64]) -> Self {
        Self {
            height,
            width,
            re: buf.iter().map(|z| z.re).collect(),
            im: buf.iter().map(|z| z.im).collect(),
        }
    }
}

/// `|F|` per bin.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSpec(Plane);

/// `arg F` per bin, in (−π, π].
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpec(Plane);

impl AmplitudeSpec {
    pub fn new(plane: Plane) -> Result<Self> {
        if plane.data().iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(invalid("amplitude entries must be finite and non-negative"));
        }
        Ok(Self(plane))
    }

    pub fn constant(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(Plane::from_fn(height, width, |_, _| value))
    }

    pub fn plane(&self) -> &Plane {
        &self.0
    }

    pub fn into_plane(self) -> Plane {
        self.0
    }
}

impl PhaseSpec {
    pub fn new(plane: Plane) -> Result<Self> {
        if plane.data().iter().any(|v| !v.is_finite()) {
            return Err(invalid("phase entries must be finite"));
        }
        Ok(Self(plane.map(wrap_phase)))
    }

    pub fn constant(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(Plane::from_fn(height, width, |_, _| value))
    }

    pub fn plane(&self) -> &Plane {
        &self.0
    }
}

/// Map an angle into (−π, π].
fn wrap_phase(p: f64) -> f64 {
    if p > -PI && p <= PI {
        return p;
    }
    let mut q = p.rem_euclid(2.0 * PI);
    if q > PI {
        q -= 2.0 * PI;
    }
    if q <= -PI {
        q += 2.0 * PI;
    }
    q
}

fn transform_rows(buf: &mut [Complex64], height: usize, width: usize, inverse: bool) {
    let fft = plan(width, inverse);
    for row in buf.chunks_exact_mut(width).take(height) {
        fft.process(row);
    }
}

fn transform_cols(buf: &mut [Complex64], height: usize, width: usize, inverse: bool) {
    let fft = plan(height, inverse);
    let mut col = vec![Complex64::new(0.0, 0.0); height];
    for w in 0..width {
        for h in 0..height {
            col[h] = buf[h * width + w];
        }
        fft.process(&mut col);
        for h in 0..height {
            buf[h * width + w] = col[h];
        }
    }
}

/// Unnormalized forward 2D DFT of a real channel.
pub fn dft2(channel: &Plane) -> Result<Spectrum> {
    if !channel.is_finite() {
        return Err(invalid("dft2 input contains non-finite values"));
    }
    let (h, w) = channel.shape();
    let mut buf: Vec<Complex64> = channel.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_rows(&mut buf, h, w, false);
    transform_cols(&mut buf, h, w, false);
    Ok(Spectrum::from_complex(h, w, &buf))
}

/// Output of [`idft2`]: the real part plus the largest imaginary magnitude
/// that was discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseOutput {
    pub real: Plane,
    pub imag_residue: f64,
}

/// `1/(HW)`-normalized inverse 2D DFT.
pub fn idft2(spectrum: &Spectrum) -> Result<InverseOutput> {
    if !spectrum.is_finite() {
        return Err(invalid("idft2 input contains non-finite values"));
    }
    let (h, w) = spectrum.shape();
    let mut buf = spectrum.to_complex();
    transform_rows(&mut buf, h, w, true);
    transform_cols(&mut buf, h, w, true);
    let scale = 1.0 / (h * w) as f64;
    let mut imag_residue: f64 = 0.0;
    let real = buf
        .iter()
        .map(|z| {
            imag_residue = imag_residue.max((z.im * scale).abs());
            z.re * scale
        })
        .collect();
    Ok(InverseOutput {
        real: Plane::new(h, w, real)?,
        imag_residue,
    })
}

/// Amplitude `sqrt(R²+I²)` and four-quadrant phase `atan2(I, R)`; a zero bin
/// has phase 0.
pub fn decompose(spectrum: &Spectrum) -> Result<(AmplitudeSpec, PhaseSpec)> {
    if !spectrum.is_finite() {
        return Err(invalid("decompose input contains non-finite values"));
    }
    let (h, w) = spectrum.shape();
    let n = h * w;
    let mut amp = Vec::with_capacity(n);
    let mut phase = Vec::with_capacity(n);
    for i in 0..n {
        let (r, im) = (spectrum.re[i], spectrum.im[i]);
        amp.push(r.hypot(im));
        let p = if r == 0.0 && im == 0.0 {
            0.0
        } else {
            let p = im.atan2(r);
            // atan2 yields -π for (-0.0, negative); fold onto +π
            if p <= -PI {
                PI
            } else {
                p
            }
        };
        phase.push(p);
    }
    Ok((
        AmplitudeSpec(Plane::new(h, w, amp)?),
        PhaseSpec(Plane::new(h, w, phase)?),
    ))
}

/// `R = A cos P`, `I = A sin P`.
pub fn compose(amplitude: &AmplitudeSpec, phase: &PhaseSpec) -> Result<Spectrum> {
    let (a, p) = (amplitude.plane(), phase.plane());
    if a.shape() != p.shape() {
        return Err(invalid(format!(
            "amplitude {:?} and phase {:?} shapes differ",
            a.shape(),
            p.shape()
        )));
    }
    if a.data().iter().any(|v| !(*v >= 0.0)) {
        return Err(invalid("negative amplitude entry"));
    }
    let (h, w) = a.shape();
    let mut re = Vec::with_capacity(h * w);
    let mut im = Vec::with_capacity(h * w);
    for (&amp, &ph) in a.data().iter().zip(p.data()) {
        let (s, c) = ph.sin_cos();
        re.push(amp * c);
        im.push(amp * s);
    }
    Spectrum::new(h, w, re, im)
}

/// Channel-wise forward transform.
pub fn forward(image: &ImageTensor) -> Result<Vec<Spectrum>> {
    image.channel_planes().iter().map(dft2).collect()
}

/// Channel-wise inverse transform without clipping.
pub fn inverse_unclipped(spectra: &[Spectrum]) -> Result<ImageTensor> {
    let planes = spectra
        .iter()
        .map(|s| idft2(s).map(|o| o.real))
        .collect::<Result<Vec<_>>>()?;
    ImageTensor::from_channels(&planes)
}

/// Channel-wise inverse transform, clipped to [0,1].
pub fn inverse(spectra: &[Spectrum]) -> Result<ImageTensor> {
    Ok(inverse_unclipped(spectra)?.clipped())
}

fn cyclic_shift(s: &Spectrum, dh: usize, dw: usize) -> Spectrum {
    let (h, w) = s.shape();
    let mut out = Spectrum::zeros(h, w);
    for u in 0..h {
        for v in 0..w {
            out.set((u + dh) % h, (v + dw) % w, s.get(u, v));
        }
    }
    out
}

/// Moves bin (0,0) to (⌊H/2⌋, ⌊W/2⌋).
pub fn shift_center(spectrum: &Spectrum) -> Spectrum {
    let (h, w) = spectrum.shape();
    cyclic_shift(spectrum, h / 2, w / 2)
}

/// Exact inverse of [`shift_center`] for every size.
pub fn unshift(spectrum: &Spectrum) -> Spectrum {
    let (h, w) = spectrum.shape();
    cyclic_shift(spectrum, h - h / 2, w - w / 2)
}

/// Index-level versions of the shifts, used on real planes (amplitudes, masks).
pub fn shift_center_plane(plane: &Plane) -> Plane {
    let (h, w) = plane.shape();
    let mut out = Plane::zeros(h, w);
    for u in 0..h {
        for v in 0..w {
            out.set((u + h / 2) % h, (v + w / 2) % w, plane.get(u, v));
        }
    }
    out
}

pub fn unshift_plane(plane: &Plane) -> Plane {
    let (h, w) = plane.shape();
    let mut out = Plane::zeros(h, w);
    for u in 0..h {
        for v in 0..w {
            out.set((u + h - h / 2) % h, (v + w - w / 2) % w, plane.get(u, v));
        }
    }
    out
}

/// Amplitude and phase of every channel of an image.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarImage {
    pub channels: Vec<(AmplitudeSpec, PhaseSpec)>,
}

impl PolarImage {
    pub fn from_image(image: &ImageTensor) -> Result<Self> {
        let channels = forward(image)?.iter().map(decompose).collect::<Result<Vec<_>>>()?;
        Ok(Self { channels })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        let (h, w) = self.channels[0].0.plane().shape();
        (h, w, self.channels.len())
    }

    pub fn amplitude(&self, c: usize) -> &AmplitudeSpec {
        &self.channels[c].0
    }

    pub fn phase(&self, c: usize) -> &PhaseSpec {
        &self.channels[c].1
    }

    /// Recompose each channel and invert, without clipping.
    pub fn reconstruct(&self) -> Result<ImageTensor> {
        let spectra = self
            .channels
            .iter()
            .map(|(a, p)| compose(a, p))
            .collect::<Result<Vec<_>>>()?;
        inverse_unclipped(&spectra)
    }
}
