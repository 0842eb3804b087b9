//! Chromaticity/brightness decomposition of RGB images and the bridge
//! between pixel grids and nodal fields.

pub mod ppm;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::field::{norm, NodalField};
use crate::mesh::{build_rect_mesh, TriMesh};
use crate::sphere::{project_to_sphere, DEGENERATE_MODULUS};

/// Blue pole, used for pixels with no defined chromaticity.
pub const DEFAULT_FALLBACK: [f64; 3] = [0.0, 0.0, 1.0];

/// Linear RGB image, channels in `[0, 1]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[f64; 3]>,
}

impl RgbImage {
    /// Channels are clamped to `[0, 1]`.
    pub fn new(width: usize, height: usize, mut pixels: Vec<[f64; 3]>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::SizeMismatch(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        for px in &mut pixels {
            for c in px.iter_mut() {
                *c = if c.is_nan() { 0.0 } else { c.clamp(0.0, 1.0) };
            }
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChromaImage {
    pub width: usize,
    pub height: usize,
    pub brightness: Vec<f64>,
    pub chroma: Vec<[f64; 3]>,
    /// Pixels whose chromaticity came from the fallback direction.
    pub fallback_count: usize,
}

fn normalize_or(v: [f64; 3], fallback: [f64; 3]) -> ([f64; 3], bool) {
    let r = norm(&v);
    if r < DEGENERATE_MODULUS {
        (fallback, true)
    } else {
        (v.map(|x| x / r), false)
    }
}

pub fn decompose(img: &RgbImage, fallback: [f64; 3]) -> ChromaImage {
    let mut fallback_count = 0;
    let (brightness, chroma) = img
        .pixels
        .iter()
        .map(|&px| {
            let (c, used) = normalize_or(px, fallback);
            fallback_count += used as usize;
            (if used { 0.0 } else { norm(&px) }, c)
        })
        .unzip();
    ChromaImage {
        width: img.width,
        height: img.height,
        brightness,
        chroma,
        fallback_count,
    }
}

/// `brightness * chroma`, clamped; returns the image and the number of
/// pixels that needed clamping.
pub fn recompose(c: &ChromaImage) -> (RgbImage, usize) {
    let mut clamped = 0;
    let pixels = c
        .brightness
        .iter()
        .zip(&c.chroma)
        .map(|(&eta, ch)| {
            let raw = ch.map(|x| eta * x);
            if raw.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                clamped += 1;
            }
            raw.map(|x| x.clamp(0.0, 1.0))
        })
        .collect();
    let img = RgbImage {
        width: c.width,
        height: c.height,
        pixels,
    };
    (img, clamped)
}

/// Adds i.i.d. centered Gaussian perturbations of standard deviation `sigma`
/// to every chroma component and re-projects onto the sphere.
pub fn chroma_noise(c: &ChromaImage, sigma: f64, seed: u64) -> Result<ChromaImage> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "noise sigma must be >= 0 (got {sigma})"
        )));
    }
    if sigma == 0.0 {
        return Ok(c.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = c.clone();
    let mut extra = 0;
    for ch in &mut out.chroma {
        let noisy = ch.map(|x| {
            let z: f64 = StandardNormal.sample(&mut rng);
            x + sigma * z
        });
        let (unit, used) = normalize_or(noisy, DEFAULT_FALLBACK);
        extra += used as usize;
        *ch = unit;
    }
    out.fallback_count += extra;
    Ok(out)
}

/// Mesh with one node per pixel center (unit spacing, domain
/// `[0, W-1] x [0, H-1]`), the datum `g` and the initial field `u0 = g`.
pub fn image_to_field(c: &ChromaImage) -> Result<(TriMesh, NodalField, NodalField)> {
    if c.width < 2 || c.height < 2 {
        return Err(Error::ImageTooSmall {
            width: c.width,
            height: c.height,
        });
    }
    let mesh = build_rect_mesh(
        c.width - 1,
        c.height - 1,
        (c.width - 1) as f64,
        (c.height - 1) as f64,
    )?;
    let values = c.chroma.iter().flat_map(|ch| ch.iter().copied()).collect();
    let g = NodalField::new(3, values)?;
    Ok((mesh, g.clone(), g))
}

pub fn field_to_chroma(
    u: &NodalField,
    mesh: &TriMesh,
    width: usize,
    height: usize,
    brightness: &[f64],
) -> Result<ChromaImage> {
    u.check_on(mesh)?;
    if mesh.n_nodes() != width * height || brightness.len() != width * height {
        return Err(Error::SizeMismatch(format!(
            "{width}x{height} image vs {} nodes and {} brightness values",
            mesh.n_nodes(),
            brightness.len()
        )));
    }
    if u.n_components() != 3 {
        return Err(Error::UnsupportedDimension(u.n_components()));
    }
    let (unit, fallback_count) = project_to_sphere(u, &DEFAULT_FALLBACK)?;
    let chroma = unit.iter_nodes().map(|v| [v[0], v[1], v[2]]).collect();
    Ok(ChromaImage {
        width,
        height,
        brightness: brightness.to_vec(),
        chroma,
        fallback_count,
    })
}

/// Disk of color `inside` centered in a field of color `outside`.
pub fn two_color_disk(
    width: usize,
    height: usize,
    radius: f64,
    inside: [f64; 3],
    outside: [f64; 3],
) -> RgbImage {
    let (cx, cy) = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);
    let pixels = (0..height)
        .flat_map(|j| (0..width).map(move |i| (i, j)))
        .map(|(i, j)| {
            let (dx, dy) = (i as f64 - cx, j as f64 - cy);
            if dx * dx + dy * dy <= radius * radius {
                inside
            } else {
                outside
            }
        })
        .collect();
    RgbImage {
        width,
        height,
        pixels,
    }
}

/// Mean angle between corresponding chroma vectors.
pub fn mean_angular_deviation(a: &ChromaImage, b: &ChromaImage) -> f64 {
    let total: f64 = a
        .chroma
        .iter()
        .zip(&b.chroma)
        .map(|(x, y)| {
            let d: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
            d.clamp(-1.0, 1.0).acos()
        })
        .sum();
    total / a.chroma.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(pixels: Vec<[f64; 3]>, w: usize, h: usize) -> RgbImage {
        RgbImage::new(w, h, pixels).unwrap()
    }

    #[test]
    fn decompose_examples() {
        let c = decompose(
            &img(vec![[1.0, 0.0, 0.0], [0.3, 0.4, 0.0], [0.0; 3]], 3, 1),
            DEFAULT_FALLBACK,
        );
        assert_eq!(c.brightness[0], 1.0);
        assert_eq!(c.chroma[0], [1.0, 0.0, 0.0]);
        assert!((c.brightness[1] - 0.5).abs() < 1e-16);
        assert!((c.chroma[1][0] - 0.6).abs() < 1e-15 && (c.chroma[1][1] - 0.8).abs() < 1e-15);
        assert_eq!(c.brightness[2], 0.0);
        assert_eq!(c.chroma[2], [0.0, 0.0, 1.0]);
        assert_eq!(c.fallback_count, 1);
        for ch in &c.chroma {
            assert!((norm(ch) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn recompose_inverts_decompose() {
        let pixels: Vec<[f64; 3]> = (0..30)
            .map(|i| {
                let t = i as f64 / 30.0;
                [0.1 + 0.8 * t, (3.0 * t).sin().abs() + 0.01, 1.0 - 0.5 * t]
            })
            .collect();
        let src = img(pixels, 6, 5);
        let (back, clamped) = recompose(&decompose(&src, DEFAULT_FALLBACK));
        assert_eq!(clamped, 0);
        for (a, b) in back.pixels.iter().zip(&src.pixels) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn recompose_clamps_and_blacks_out() {
        let c = ChromaImage {
            width: 2,
            height: 1,
            brightness: vec![2.0, 0.0],
            chroma: vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            fallback_count: 0,
        };
        let (out, clamped) = recompose(&c);
        assert_eq!(out.pixels, vec![[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        assert_eq!(clamped, 1);
    }

    #[test]
    fn noise_contract() {
        let base = decompose(
            &two_color_disk(8, 8, 2.5, [0.9, 0.1, 0.1], [0.1, 0.2, 0.9]),
            DEFAULT_FALLBACK,
        );
        assert_eq!(chroma_noise(&base, 0.0, 1).unwrap(), base);
        let a = chroma_noise(&base, 0.1, 42).unwrap();
        let b = chroma_noise(&base, 0.1, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, chroma_noise(&base, 0.1, 43).unwrap());
        for ch in &a.chroma {
            assert!((norm(ch) - 1.0).abs() < 1e-12);
        }
        assert!(chroma_noise(&base, -1.0, 0).is_err());
    }

    #[test]
    fn noise_on_constant_image_has_moderate_angle() {
        let flat = decompose(&img(vec![[0.2, 0.5, 0.7]; 400], 20, 20), DEFAULT_FALLBACK);
        let noisy = chroma_noise(&flat, 0.1, 7).unwrap();
        let dev = mean_angular_deviation(&flat, &noisy);
        // Rayleigh-like: mean of the 2-D tangential noise magnitude ~ sigma * sqrt(pi/2)
        assert!(dev > 0.0 && dev < std::f64::consts::FRAC_PI_2);
        assert!(
            (dev - 0.1 * (std::f64::consts::PI / 2.0).sqrt()).abs() < 0.03,
            "{dev}"
        );
    }

    #[test]
    fn field_bridge() {
        let tiny = decompose(&img(vec![[0.5, 0.5, 0.0]; 4], 2, 2), DEFAULT_FALLBACK);
        let (mesh, g, u0) = image_to_field(&tiny).unwrap();
        assert_eq!((mesh.n_nodes(), mesh.n_elements()), (4, 2));
        assert_eq!(g.values().len(), 12);
        assert_eq!(g, u0);

        let c = decompose(
            &two_color_disk(16, 16, 5.0, [1.0, 0.2, 0.0], [0.0, 0.3, 0.6]),
            DEFAULT_FALLBACK,
        );
        let (mesh, _, u0) = image_to_field(&c).unwrap();
        for j in 0..16 {
            for i in 0..16 {
                assert_eq!(mesh.nodes()[j * 16 + i], [i as f64, j as f64]);
            }
        }
        let back = field_to_chroma(&u0, &mesh, 16, 16, &c.brightness).unwrap();
        assert_eq!(back.brightness, c.brightness);
        for (a, b) in back.chroma.iter().zip(&c.chroma) {
            assert!((0..3).all(|k| (a[k] - b[k]).abs() <= 1e-15));
        }

        let shrunk = NodalField::new(3, u0.values().iter().map(|x| 0.98 * x).collect()).unwrap();
        let out = field_to_chroma(&shrunk, &mesh, 16, 16, &c.brightness).unwrap();
        for ch in &out.chroma {
            assert!((norm(ch) - 1.0).abs() < 1e-15);
        }
        assert!(field_to_chroma(&u0, &mesh, 15, 16, &c.brightness).is_err());
    }

    #[test]
    fn too_small_images_are_rejected() {
        let c = decompose(&img(vec![[0.5; 3]; 2], 2, 1), DEFAULT_FALLBACK);
        assert!(matches!(
            image_to_field(&c),
            Err(Error::ImageTooSmall {
                width: 2,
                height: 1
            })
        ));
    }
}
