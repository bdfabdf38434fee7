use std::path::Path;

use serde::Serialize;

use crate::augment::{amplitude_eliminate, amplitude_only, DEFAULT_CONST_AMPLITUDE};
use crate::error::{invalid, FactError, Result};
use crate::tensor::{ImageTensor, Plane};

/// An edge response min-max normalized to [0,1]; all zeros when the response
/// is constant.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap(Plane);

impl EdgeMap {
    pub fn plane(&self) -> &Plane {
        &self.0
    }

    pub fn into_plane(self) -> Plane {
        self.0
    }
}

fn gray(image: &ImageTensor) -> Plane {
    if image.channels() == 1 {
        image.channel(0)
    } else {
        image.luminance()
    }
}

/// 3×3 correlation with replicate padding.
fn correlate3(p: &Plane, k: &[[f64; 3]; 3]) -> Plane {
    let (h, w) = p.shape();
    Plane::from_fn(h, w, |y, x| {
        let mut acc = 0.0;
        for (dy, row) in k.iter().enumerate() {
            let sy = (y + dy).saturating_sub(1).min(h - 1);
            for (dx, &kv) in row.iter().enumerate() {
                let sx = (x + dx).saturating_sub(1).min(w - 1);
                acc += kv * p.get(sy, sx);
            }
        }
        acc
    })
}

const SOBEL_X: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
const SOBEL_Y: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
const LAPLACE4: [[f64; 3]; 3] = [[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]];

/// Gradient magnitude of the 3×3 Sobel pair (RGB reduced to luminance).
pub fn edge_sobel(image: &ImageTensor) -> EdgeMap {
    let g = gray(image);
    let gx = correlate3(&g, &SOBEL_X);
    let gy = correlate3(&g, &SOBEL_Y);
    let (h, w) = g.shape();
    let mag = Plane::from_fn(h, w, |y, x| gx.get(y, x).hypot(gy.get(y, x)));
    EdgeMap(mag.min_max_normalized())
}

/// Absolute 4-neighbour Laplacian response.
pub fn edge_laplacian(image: &ImageTensor) -> EdgeMap {
    let g = gray(image);
    EdgeMap(correlate3(&g, &LAPLACE4).map(f64::abs).min_max_normalized())
}

/// Cosine of the angle between the mean-centred inputs.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(invalid(format!("length mismatch: {} vs {}", a.len(), b.len())));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x - ma, y - mb);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(FactError::UndefinedSimilarity(
            "an input is constant after centring".into(),
        ));
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Distance from the median level, min-max normalized. Turns a signed
/// reconstruction into a contour map comparable with edge magnitudes.
pub fn rectify(p: &Plane) -> Plane {
    let m = median(p.data());
    p.map(|v| (v - m).abs()).min_max_normalized()
}

/// Grayscale phase-only and amplitude-only reconstructions of one image.
pub fn reconstructions(image: &ImageTensor) -> Result<(Plane, Plane)> {
    let g = ImageTensor::from_channels(&[gray(image)])?;
    Ok((
        amplitude_eliminate(&g, DEFAULT_CONST_AMPLITUDE)?.channel(0),
        amplitude_only(&g, 0.0)?.channel(0),
    ))
}

/// Similarities of one image's reconstructions to its edge maps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeRow {
    pub name: String,
    pub sobel_phase: f64,
    pub laplacian_phase: f64,
    pub sobel_amplitude: f64,
    pub laplacian_amplitude: f64,
    /// Same four comparisons against the signed (unrectified) reconstructions.
    pub signed_sobel_phase: f64,
    pub signed_laplacian_phase: f64,
    pub signed_sobel_amplitude: f64,
    pub signed_laplacian_amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeStudy {
    pub rows: Vec<EdgeRow>,
}

impl EdgeStudy {
    fn mean(&self, f: impl Fn(&EdgeRow) -> f64) -> f64 {
        self.rows.iter().map(f).sum::<f64>() / self.rows.len() as f64
    }

    /// Per-image averages in the order sobel/phase, laplacian/phase,
    /// sobel/amplitude, laplacian/amplitude.
    pub fn means(&self) -> [f64; 4] {
        [
            self.mean(|r| r.sobel_phase),
            self.mean(|r| r.laplacian_phase),
            self.mean(|r| r.sobel_amplitude),
            self.mean(|r| r.laplacian_amplitude),
        ]
    }

    pub fn signed_means(&self) -> [f64; 4] {
        [
            self.mean(|r| r.signed_sobel_phase),
            self.mean(|r| r.signed_laplacian_phase),
            self.mean(|r| r.signed_sobel_amplitude),
            self.mean(|r| r.signed_laplacian_amplitude),
        ]
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e: csv::Error| FactError::Io {
            path: path.to_path_buf(),
            source: e.into(),
        };
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        for r in &self.rows {
            w.serialize(r).map_err(io)?;
        }
        w.flush().map_err(|e| FactError::io(path, e))
    }

    pub fn summary(&self) -> String {
        let [sp, lp, sa, la] = self.means();
        let [ssp, slp, ssa, sla] = self.signed_means();
        format!(
            "images: {}\n\
             mean cosine similarity (rectified reconstructions)\n  \
             sobel/phase-only {sp:.4}  laplacian/phase-only {lp:.4}\n  \
             sobel/amplitude-only {sa:.4}  laplacian/amplitude-only {la:.4}\n\
             mean cosine similarity (signed reconstructions)\n  \
             sobel/phase-only {ssp:.4}  laplacian/phase-only {slp:.4}\n  \
             sobel/amplitude-only {ssa:.4}  laplacian/amplitude-only {sla:.4}\n",
            self.rows.len()
        )
    }
}

/// Per-image similarity of phase-only and amplitude-only reconstructions to
/// Sobel and Laplacian edge maps. Constant inputs make a similarity
/// undefined and are reported as errors.
pub fn edge_similarity_study(images: &[(String, ImageTensor)]) -> Result<EdgeStudy> {
    if images.is_empty() {
        return Err(invalid("edge study needs at least one image"));
    }
    let rows = images
        .iter()
        .map(|(name, img)| {
            let sobel = edge_sobel(img);
            let lap = edge_laplacian(img);
            let (po, ao) = reconstructions(img)?;
            let (rpo, rao) = (rectify(&po), rectify(&ao));
            let s = |a: &Plane, b: &EdgeMap| cosine_similarity(a.data(), b.plane().data());
            Ok(EdgeRow {
                name: name.clone(),
                sobel_phase: s(&rpo, &sobel)?,
                laplacian_phase: s(&rpo, &lap)?,
                sobel_amplitude: s(&rao, &sobel)?,
                laplacian_amplitude: s(&rao, &lap)?,
                signed_sobel_phase: s(&po, &sobel)?,
                signed_laplacian_phase: s(&po, &lap)?,
                signed_sobel_amplitude: s(&ao, &sobel)?,
                signed_laplacian_amplitude: s(&ao, &lap)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EdgeStudy { rows })
}

const BUNDLED: [(&str, &[u8]); 10] = [
    ("astronaut", include_bytes!("../../assets/edge_images/astronaut.png")),
    ("brick", include_bytes!("../../assets/edge_images/brick.png")),
    ("camera", include_bytes!("../../assets/edge_images/camera.png")),
    ("chelsea", include_bytes!("../../assets/edge_images/chelsea.png")),
    ("coffee", include_bytes!("../../assets/edge_images/coffee.png")),
    ("coins", include_bytes!("../../assets/edge_images/coins.png")),
    ("grass", include_bytes!("../../assets/edge_images/grass.png")),
    ("horse", include_bytes!("../../assets/edge_images/horse.png")),
    ("rocket", include_bytes!("../../assets/edge_images/rocket.png")),
    ("text", include_bytes!("../../assets/edge_images/text.png")),
];

/// Ten 64×64 public-domain photographs shipped with the crate.
pub fn bundled_edge_images() -> Result<Vec<(String, ImageTensor)>> {
    BUNDLED
        .iter()
        .map(|(name, bytes)| {
            let img = image::load_from_memory(bytes).map_err(|e| FactError::Image {
                path: format!("<bundled>/{name}.png").into(),
                message: e.to_string(),
            })?;
            let rgb = img.to_rgb8();
            let t = ImageTensor::from_u8(rgb.height() as usize, rgb.width() as usize, 3, rgb.as_raw())?;
            Ok((name.to_string(), t))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn naive_laplacian(p: &Plane) -> Plane {
        let (h, w) = p.shape();
        let at = |y: isize, x: isize| p.get(y.clamp(0, h as isize - 1) as usize, x.clamp(0, w as isize - 1) as usize);
        Plane::from_fn(h, w, |y, x| {
            let (y, x) = (y as isize, x as isize);
            (at(y - 1, x) + at(y + 1, x) + at(y, x - 1) + at(y, x + 1) - 4.0 * at(y, x)).abs()
        })
        .min_max_normalized()
    }

    #[test]
    fn constant_image_gives_zero_map() {
        let img = ImageTensor::new(5, 6, 1, vec![0.4; 30]).unwrap();
        assert!(edge_sobel(&img).plane().data().iter().all(|&v| v == 0.0));
        assert!(edge_laplacian(&img).plane().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn vertical_step_peaks_on_step() {
        let img = ImageTensor::new(8, 10, 1, (0..80).map(|i| if i % 10 >= 5 { 1.0 } else { 0.0 }).collect()).unwrap();
        let s = edge_sobel(&img);
        for y in 0..8 {
            assert_eq!(s.plane().get(y, 4), 1.0);
            assert_eq!(s.plane().get(y, 5), 1.0);
            assert_eq!(s.plane().get(y, 0), 0.0);
            assert_eq!(s.plane().get(y, 9), 0.0);
        }
    }

    #[test]
    fn laplacian_matches_direct_convolution() {
        let mut r = crate::rng::stream(3, 0, 0);
        let data: Vec<f64> = (0..7 * 9).map(|_| r.random()).collect();
        let img = ImageTensor::new(7, 9, 1, data).unwrap();
        let fast = edge_laplacian(&img);
        let slow = naive_laplacian(&img.channel(0));
        for (a, b) in fast.plane().data().iter().zip(slow.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cosine_basics() {
        let a = [1.0, 3.0, -2.0, 0.5];
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        let scaled: Vec<f64> = a.iter().map(|v| 4.0 * v).collect();
        assert!((cosine_similarity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!((cosine_similarity(&a, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert!((cosine_similarity(&a, &scaled).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            cosine_similarity(&[2.0; 4], &a),
            Err(FactError::UndefinedSimilarity(_))
        ));
    }

    #[test]
    fn interior_translation_equivariance() {
        let mut r = crate::rng::stream(5, 0, 0);
        let (h, w) = (12, 12);
        let base: Vec<f64> = (0..h * w).map(|_| r.random()).collect();
        let img = ImageTensor::new(h, w, 1, base.clone()).unwrap();
        let shifted = ImageTensor::new(
            h,
            w,
            1,
            (0..h * w)
                .map(|i| {
                    let (y, x) = (i / w, i % w);
                    base[((y + h - 2) % h) * w + (x + w - 1) % w]
                })
                .collect(),
        )
        .unwrap();
        // compare raw (unnormalized) responses on the interior
        let raw = |im: &ImageTensor| correlate3(&im.channel(0), &LAPLACE4);
        let (a, b) = (raw(&img), raw(&shifted));
        for y in 1..h - 3 {
            for x in 1..w - 2 {
                assert!((a.get(y, x) - b.get(y + 2, x + 1)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bundled_images_decode() {
        let imgs = bundled_edge_images().unwrap();
        assert_eq!(imgs.len(), 10);
        assert!(imgs.iter().all(|(_, i)| i.shape() == (64, 64, 3)));
    }
}
