//! Real-valued image containers and 8-bit file I/O.

use std::path::Path;

use crate::error::{invalid, FactError, Result};

/// A single H×W real plane, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(invalid(format!(
                "plane dimensions must be positive, got {height}x{width}"
            )));
        }
        if data.len() != height * width {
            return Err(invalid(format!(
                "plane data length {} does not match {height}x{width}",
                data.len()
            )));
        }
        Ok(Self { height, width, data })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        assert!(height > 0 && width > 0, "plane dimensions must be positive");
        Self {
            height,
            width,
            data: vec![0.0; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(height > 0 && width > 0, "plane dimensions must be positive");
        let mut data = Vec::with_capacity(height * width);
        for h in 0..height {
            for w in 0..width {
                data.push(f(h, w));
            }
        }
        Self { height, width, data }
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, h: usize, w: usize) -> f64 {
        self.data[h * self.width + w]
    }

    #[inline]
    pub fn set(&mut self, h: usize, w: usize, v: f64) {
        self.data[h * self.width + w] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Plane {
        Plane {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Affine rescale to [0,1]. A plane with zero range maps to all zeros.
    pub fn min_max_normalized(&self) -> Plane {
        let (lo, hi) = self
            .data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let range = hi - lo;
        if !(range > 0.0) || !range.is_finite() {
            return Plane::zeros(self.height, self.width);
        }
        self.map(|v| (v - lo) / range)
    }
}

/// H×W×C image, values stored row-major with channels interleaved
/// (`index = (h * W + w) * C + c`).
///
/// Values are only required to be finite; pipelines that produce displayable
/// images call [`ImageTensor::clipped`] to land in [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageTensor {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(invalid(format!(
                "image dimensions must be positive, got {height}x{width}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(invalid(format!("image must have 1 or 3 channels, got {channels}")));
        }
        if data.len() != height * width * channels {
            return Err(invalid(format!(
                "image data length {} does not match {height}x{width}x{channels}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("image contains non-finite values"));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Result<Self> {
        Self::new(height, width, channels, vec![0.0; height * width * channels])
    }

    pub fn from_channels(planes: &[Plane]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| invalid("cannot build an image from zero channels"))?;
        let (height, width) = first.shape();
        if planes.iter().any(|p| p.shape() != (height, width)) {
            return Err(invalid("channel planes have mismatched shapes"));
        }
        let channels = planes.len();
        if channels != 1 && channels != 3 {
            return Err(invalid(format!(
                "channel count mismatch: expected 1 or 3 planes, got {channels}"
            )));
        }
        let mut data = vec![0.0; height * width * channels];
        for (c, plane) in planes.iter().enumerate() {
            for (i, &v) in plane.data().iter().enumerate() {
                data[i * channels + c] = v;
            }
        }
        Self::new(height, width, channels, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, h: usize, w: usize, c: usize) -> f64 {
        self.data[(h * self.width + w) * self.channels + c]
    }

    pub fn channel(&self, c: usize) -> Plane {
        assert!(c < self.channels, "channel {c} out of range");
        let data = self.data.iter().skip(c).step_by(self.channels).copied().collect();
        Plane {
            height: self.height,
            width: self.width,
            data,
        }
    }

    pub fn channel_planes(&self) -> Vec<Plane> {
        (0..self.channels).map(|c| self.channel(c)).collect()
    }

    pub fn clipped(&self) -> ImageTensor {
        ImageTensor {
            data: self.data.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
            ..*self
        }
    }

    /// Per-image min-max rescale to [0,1] across all channels jointly.
    /// A constant image maps to all zeros.
    pub fn min_max_rescaled(&self) -> ImageTensor {
        let (lo, hi) = self
            .data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let range = hi - lo;
        let data = if range > 0.0 && range.is_finite() {
            self.data.iter().map(|v| (v - lo) / range).collect()
        } else {
            vec![0.0; self.data.len()]
        };
        ImageTensor { data, ..*self }
    }

    pub fn hflip(&self) -> ImageTensor {
        let mut data = Vec::with_capacity(self.data.len());
        for h in 0..self.height {
            for w in (0..self.width).rev() {
                let base = (h * self.width + w) * self.channels;
                data.extend_from_slice(&self.data[base..base + self.channels]);
            }
        }
        ImageTensor { data, ..*self }
    }

    /// Luminance plane (0.299/0.587/0.114); grayscale images pass through.
    pub fn luminance(&self) -> Plane {
        if self.channels == 1 {
            return self.channel(0);
        }
        let data = self
            .data
            .chunks_exact(3)
            .map(|px| 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2])
            .collect();
        Plane {
            height: self.height,
            width: self.width,
            data,
        }
    }

    pub fn max_abs_diff(&self, other: &ImageTensor) -> f64 {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// 8-bit quantization, round half away from zero after clipping to [0,1].
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize_u8(v)).collect()
    }

    pub fn from_u8(height: usize, width: usize, channels: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(
            height,
            width,
            channels,
            bytes.iter().map(|&b| f64::from(b) / 255.0).collect(),
        )
    }
}

pub fn quantize_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Bilinear resize of a float image, sampling at pixel centres.
pub fn resize_bilinear(image: &ImageTensor, height: usize, width: usize) -> Result<ImageTensor> {
    if height == 0 || width == 0 {
        return Err(invalid("resize target must be positive"));
    }
    if image.shape().0 == height && image.shape().1 == width {
        return Ok(image.clone());
    }
    let (sh, sw, c) = image.shape();
    let scale_y = sh as f64 / height as f64;
    let scale_x = sw as f64 / width as f64;
    let mut data = Vec::with_capacity(height * width * c);
    for y in 0..height {
        let fy = ((y as f64 + 0.5) * scale_y - 0.5).clamp(0.0, (sh - 1) as f64);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(sh - 1);
        let ty = fy - y0 as f64;
        for x in 0..width {
            let fx = ((x as f64 + 0.5) * scale_x - 0.5).clamp(0.0, (sw - 1) as f64);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(sw - 1);
            let tx = fx - x0 as f64;
            for ch in 0..c {
                let top = image.get(y0, x0, ch) * (1.0 - tx) + image.get(y0, x1, ch) * tx;
                let bottom = image.get(y1, x0, ch) * (1.0 - tx) + image.get(y1, x1, ch) * tx;
                data.push(top * (1.0 - ty) + bottom * ty);
            }
        }
    }
    ImageTensor::new(height, width, c, data)
}

/// Decode an 8-bit grayscale or RGB raster. Images carrying an alpha channel
/// drop it; other grayscale-like formats decode to one channel.
pub fn load_image(path: &Path) -> Result<ImageTensor> {
    let img = image::open(path).map_err(|e| FactError::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let color = img.color();
    if color.has_color() {
        let rgb = img.to_rgb8();
        ImageTensor::from_u8(rgb.height() as usize, rgb.width() as usize, 3, rgb.as_raw())
    } else {
        let luma = img.to_luma8();
        ImageTensor::from_u8(luma.height() as usize, luma.width() as usize, 1, luma.as_raw())
    }
}

pub fn save_image(image: &ImageTensor, path: &Path) -> Result<()> {
    let bytes = image.to_u8();
    let (h, w, c) = image.shape();
    let color = if c == 1 {
        image::ExtendedColorType::L8
    } else {
        image::ExtendedColorType::Rgb8
    };
    image::save_buffer_with_format(path, &bytes, w as u32, h as u32, color, image::ImageFormat::Png).map_err(
        |e| match e {
            image::ImageError::IoError(io) => FactError::io(path, io),
            other => FactError::Image {
                path: path.to_path_buf(),
                message: other.to_string(),
            },
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantize_rounds_half_away_from_zero() {
        assert_eq!(quantize_u8(0.5 / 255.0), 1);
        assert_eq!(quantize_u8(1.5 / 255.0), 2);
        assert_eq!(quantize_u8(-3.0), 0);
        assert_eq!(quantize_u8(7.0), 255);
    }

    #[test]
    fn channel_round_trip() {
        let img = ImageTensor::new(2, 3, 3, (0..18).map(|v| v as f64 / 18.0).collect()).unwrap();
        let back = ImageTensor::from_channels(&img.channel_planes()).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn rejects_bad_channel_count() {
        assert!(ImageTensor::new(2, 2, 2, vec![0.0; 8]).is_err());
        let p = Plane::zeros(2, 2);
        assert!(ImageTensor::from_channels(&[p.clone(), p]).is_err());
    }

    #[test]
    fn hflip_twice_is_identity() {
        let img = ImageTensor::new(3, 4, 1, (0..12).map(|v| v as f64 / 12.0).collect()).unwrap();
        assert_eq!(img.hflip().hflip(), img);
        assert_eq!(img.hflip().get(0, 0, 0), img.get(0, 3, 0));
    }

    #[test]
    fn constant_min_max_is_zero() {
        let img = ImageTensor::new(2, 2, 1, vec![0.3; 4]).unwrap();
        assert!(img.min_max_rescaled().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn resize_identity_and_constant() {
        let img = ImageTensor::new(4, 4, 1, vec![0.25; 16]).unwrap();
        let r = resize_bilinear(&img, 7, 3).unwrap();
        assert!(r.data().iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.png");
        let bytes: Vec<u8> = (0..48).map(|v| (v * 5) as u8).collect();
        let img = ImageTensor::from_u8(4, 4, 3, &bytes).unwrap();
        save_image(&img, &path).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!(back.to_u8(), bytes);
    }
}
