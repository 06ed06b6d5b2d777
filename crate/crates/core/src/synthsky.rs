//! Synthetic sky scenes with an analytically known GHI.
//!
//! The renderer produces a hemispheric-style disk: a blue gradient whose
//! brightness follows the sun elevation, a white-yellow solar disk with
//! radial glare, and gray elliptical cloud blobs that brighten toward the
//! sun. Ground-truth GHI is a fixed closed-form function of the scene
//! parameters, which makes every generated record its own oracle.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imaging::{store_ppm, ImageRgb, SkyMask};
use crate::models::SkyClass;

/// Cloud attenuation coefficient in the GHI transfer function.
pub const CLOUD_ATTENUATION: f64 = 0.6;
/// Solar-disk occlusion attenuation coefficient.
pub const OCCLUSION_ATTENUATION: f64 = 0.75;
/// Scenes with cloud_fraction above this are labeled cloudy.
pub const CLOUDY_LABEL_THRESHOLD: f64 = 0.02;
/// Absolute tolerance on the rendered cloud coverage.
pub const COVERAGE_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneParams {
    pub sun_azimuth: f64,
    pub sun_elevation: f64,
    pub cloud_count: usize,
    /// Fraction of the visible sky area (outside the solar disk) covered
    /// by cloud, in [0, 1].
    pub cloud_fraction: f64,
    /// Fraction of solar-disk pixels covered, in [0, 1].
    pub sun_occlusion: f64,
    pub clear_sky_peak: f64,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            sun_azimuth: 0.0,
            sun_elevation: std::f64::consts::FRAC_PI_2,
            cloud_count: 6,
            cloud_fraction: 0.0,
            sun_occlusion: 0.0,
            clear_sky_peak: 931.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SceneTruth {
    pub image: ImageRgb,
    pub ghi: f64,
    pub label: SkyClass,
    pub params: SceneParams,
}

/// Ground-truth transfer function from scene parameters to GHI.
pub fn ghi_from_params(params: &SceneParams) -> f64 {
    params.clear_sky_peak
        * params.sun_elevation.max(0.0).sin()
        * (1.0 - CLOUD_ATTENUATION * params.cloud_fraction)
        * (1.0 - OCCLUSION_ATTENUATION * params.sun_occlusion)
}

pub fn label_from_params(params: &SceneParams) -> SkyClass {
    if params.cloud_fraction > CLOUDY_LABEL_THRESHOLD {
        SkyClass::Cloudy
    } else {
        SkyClass::Clear
    }
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

#[inline]
fn to_channel(v: f64) -> u8 {
    v.clamp(0.0, 255.0).round() as u8
}

struct Geometry {
    center_x: f64,
    center_y: f64,
    radius: f64,
    sun_x: f64,
    sun_y: f64,
    sun_radius: f64,
}

fn geometry(params: &SceneParams, mask: &SkyMask) -> Geometry {
    let (cx, cy, radius) = (mask.center_x as f64, mask.center_y as f64, mask.radius.max(1) as f64);
    // elevation pi/2 projects to the disk center, elevation 0 to the rim
    let r_frac = 1.0 - params.sun_elevation.clamp(0.0, std::f64::consts::FRAC_PI_2)
        / std::f64::consts::FRAC_PI_2;
    let sun_x = cx + params.sun_azimuth.cos() * r_frac * radius * 0.85;
    let sun_y = cy + params.sun_azimuth.sin() * r_frac * radius * 0.85;
    // the disk must span enough pixels that occlusion fractions resolve
    // in a pixel-count feature
    let sun_radius = (radius * 0.12).max(2.0);
    Geometry { center_x: cx, center_y: cy, radius, sun_x, sun_y, sun_radius }
}

/// Background plus solar disk and glare; no clouds and no occlusion.
fn render_clear(params: &SceneParams, width: u32, height: u32, mask: &SkyMask, geo: &Geometry) -> ImageRgb {
    let brightness = 0.25 + 0.75 * params.sun_elevation.max(0.0).sin();
    let mut image = ImageRgb::new(width, height);
    for y in 0..height {
        for x in 0..width {
            if !mask.is_visible(x, y) {
                continue;
            }
            let dx = x as f64 - geo.center_x;
            let dy = y as f64 - geo.center_y;
            let t = ((dx * dx + dy * dy).sqrt() / geo.radius).min(1.0);
            // zenith blue at the center shading to horizon blue at the rim
            let mut r = lerp(40.0, 120.0, t) * brightness;
            let mut g = lerp(90.0, 170.0, t) * brightness;
            let mut b = lerp(200.0, 235.0, t) * brightness;
            let sx = x as f64 - geo.sun_x;
            let sy = y as f64 - geo.sun_y;
            let sd = (sx * sx + sy * sy).sqrt();
            if sd <= geo.sun_radius {
                r = 255.0;
                g = 246.0;
                b = 200.0;
            } else {
                let glare = geo.sun_radius * 2.5;
                if sd < glare {
                    let w = (1.0 - (sd - geo.sun_radius) / (glare - geo.sun_radius)).powi(2)
                        * 0.8
                        * brightness;
                    r = lerp(r, 255.0, w);
                    g = lerp(g, 250.0, w);
                    b = lerp(b, 220.0, w);
                }
            }
            image.set(x, y, [to_channel(r), to_channel(g), to_channel(b)]);
        }
    }
    image
}

fn sun_disk_pixels(geo: &Geometry, mask: &SkyMask, width: u32, height: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for y in 0..height {
        for x in 0..width {
            if !mask.is_visible(x, y) {
                continue;
            }
            let sx = x as f64 - geo.sun_x;
            let sy = y as f64 - geo.sun_y;
            if (sx * sx + sy * sy).sqrt() <= geo.sun_radius {
                out.push((x, y));
            }
        }
    }
    out
}

fn cloud_color(x: f64, y: f64, geo: &Geometry, jitter: f64) -> [u8; 3] {
    // white near the solar disk fading to dark gray far away
    let dx = x - geo.sun_x;
    let dy = y - geo.sun_y;
    let d = ((dx * dx + dy * dy).sqrt() / (2.0 * geo.radius)).min(1.0);
    let level = lerp(225.0, 130.0, d) + jitter;
    [to_channel(level), to_channel(level), to_channel(level + 6.0)]
}

pub fn render_scene(
    params: &SceneParams,
    width: u32,
    height: u32,
    mask: &SkyMask,
    seed: u64,
) -> Result<SceneTruth> {
    let geo = geometry(params, mask);
    let mut image = render_clear(params, width, height, mask, &geo);
    let sun_pixels = sun_disk_pixels(&geo, mask, width, height);

    // candidate cloud region: visible pixels outside the solar disk
    let in_sun = |x: u32, y: u32| -> bool {
        let sx = x as f64 - geo.sun_x;
        let sy = y as f64 - geo.sun_y;
        (sx * sx + sy * sy).sqrt() <= geo.sun_radius
    };
    let mut region = Vec::new();
    for y in 0..height {
        for x in 0..width {
            if mask.is_visible(x, y) && !in_sun(x, y) {
                region.push((x, y));
            }
        }
    }
    if region.is_empty() && params.cloud_fraction > 0.0 {
        return Err(Error::UnreachableCoverage { requested: params.cloud_fraction });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if params.cloud_fraction > 0.0 {
        let target = params.cloud_fraction.min(1.0);
        let region_area = region.len() as f64;
        let mut covered = vec![false; (width * height) as usize];
        let mut covered_count = 0usize;
        let blob_budget = params.cloud_count.max(3) as f64;
        let mut attempts = 0usize;
        loop {
            let fraction = covered_count as f64 / region_area;
            if fraction + COVERAGE_TOLERANCE / 2.0 >= target {
                break;
            }
            attempts += 1;
            if attempts > 20_000 {
                return Err(Error::UnreachableCoverage { requested: params.cloud_fraction });
            }
            let deficit = (target - fraction) * region_area;
            // typical blob sized to the remaining deficit, capped so a
            // single blob cannot overshoot the tolerance band
            let area = (target * region_area / blob_budget).min(deficit).max(4.0);
            let ecc = 1.0 + rng.gen::<f64>() * 1.5;
            let a = (area / std::f64::consts::PI * ecc).sqrt();
            let b = (area / std::f64::consts::PI / ecc).sqrt();
            let theta = rng.gen::<f64>() * std::f64::consts::PI;
            let (ct, st) = (theta.cos(), theta.sin());
            let &(cx, cy) = &region[rng.gen_range(0..region.len())];
            let jitter = (rng.gen::<f64>() - 0.5) * 16.0;
            let x_lo = (cx as f64 - a - 1.0).floor().max(0.0) as u32;
            let x_hi = ((cx as f64 + a + 1.0).ceil() as u32).min(width - 1);
            let y_lo = (cy as f64 - a - 1.0).floor().max(0.0) as u32;
            let y_hi = ((cy as f64 + a + 1.0).ceil() as u32).min(height - 1);
            for y in y_lo..=y_hi {
                for x in x_lo..=x_hi {
                    if !mask.is_visible(x, y) || in_sun(x, y) {
                        continue;
                    }
                    let dx = x as f64 - cx as f64;
                    let dy = y as f64 - cy as f64;
                    let u = (dx * ct + dy * st) / a;
                    let v = (-dx * st + dy * ct) / b;
                    if u * u + v * v <= 1.0 {
                        let idx = (y * width + x) as usize;
                        if !covered[idx] {
                            covered[idx] = true;
                            covered_count += 1;
                            image.set(x, y, cloud_color(x as f64, y as f64, &geo, jitter));
                        }
                    }
                }
            }
        }
    }

    // occlude a deterministic fraction of solar-disk pixels (row-major
    // sweep) with near-sun cloud gray
    if params.sun_occlusion > 0.0 && !sun_pixels.is_empty() {
        let n_occluded =
            ((params.sun_occlusion.min(1.0)) * sun_pixels.len() as f64).round() as usize;
        for &(x, y) in sun_pixels.iter().take(n_occluded) {
            // a warm gray outside the cloud (neutral gray) and sky (blue)
            // color families, so occlusion stays visible after clustering
            image.set(x, y, [190, 165, 135]);
        }
    }

    Ok(SceneTruth {
        image,
        ghi: ghi_from_params(params),
        label: label_from_params(params),
        params: *params,
    })
}

/// Sampling distribution for generated datasets.
#[derive(Debug, Clone)]
pub struct DatasetConfig {
    pub width: u32,
    pub height: u32,
    /// Probability that a scene is drawn from the cloudy mixture.
    pub cloudy_fraction: f64,
    pub elevation_range: (f64, f64),
    pub cloud_fraction_range: (f64, f64),
    pub occlusion_range: (f64, f64),
    pub clear_sky_peak: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            cloudy_fraction: 0.5,
            elevation_range: (0.08, std::f64::consts::FRAC_PI_2),
            // the floor keeps a clear margin above the 0.02 label
            // threshold so the two classes stay visually distinct
            cloud_fraction_range: (0.2, 0.85),
            occlusion_range: (0.0, 1.0),
            clear_sky_peak: 931.0,
        }
    }
}

/// Scene parameters for index `i` under `seed`; pure, so datasets can be
/// rendered in parallel with deterministic content.
pub fn sample_params(config: &DatasetConfig, seed: u64, index: u64) -> SceneParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(index));
    let cloudy = rng.gen::<f64>() < config.cloudy_fraction;
    let (elo, ehi) = config.elevation_range;
    let sun_elevation = elo + rng.gen::<f64>() * (ehi - elo);
    let sun_azimuth = rng.gen::<f64>() * std::f64::consts::TAU;
    let (cloud_fraction, sun_occlusion) = if cloudy {
        let (clo, chi) = config.cloud_fraction_range;
        let (olo, ohi) = config.occlusion_range;
        (clo + rng.gen::<f64>() * (chi - clo), olo + rng.gen::<f64>() * (ohi - olo))
    } else {
        (0.0, 0.0)
    };
    SceneParams {
        sun_azimuth,
        sun_elevation,
        cloud_count: 3 + (rng.gen::<u32>() % 6) as usize,
        cloud_fraction,
        sun_occlusion,
        clear_sky_peak: config.clear_sky_peak,
    }
}

pub fn render_index(config: &DatasetConfig, seed: u64, index: u64) -> Result<SceneTruth> {
    let params = sample_params(config, seed, index);
    let mask = SkyMask::default_circular(config.width, config.height);
    render_scene(&params, config.width, config.height, &mask, seed.wrapping_add(index) ^ 0x5c3a)
}

/// Renders `n` scenes to PPM files and writes a `manifest.csv` next to
/// them. Rows with a GHI of exactly 0 are excluded. Returns the manifest
/// path.
pub fn generate_dataset(
    n: usize,
    config: &DatasetConfig,
    seed: u64,
    out_dir: impl AsRef<Path>,
) -> Result<PathBuf> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir)?;
    let scenes: Vec<(String, SceneTruth)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let truth = render_index(config, seed, i)?;
            Ok((format!("scene_{i:05}.ppm"), truth))
        })
        .collect::<Result<_>>()?;
    let manifest_path = out_dir.join("manifest.csv");
    let mut manifest = String::from("path,ghi,label\n");
    for (name, truth) in &scenes {
        store_ppm(&truth.image, out_dir.join(name))?;
        if truth.ghi == 0.0 {
            continue;
        }
        manifest.push_str(&format!("{name},{},{}\n", truth.ghi, truth.label.as_str()));
    }
    let mut f = fs::File::create(&manifest_path)?;
    f.write_all(manifest.as_bytes())?;
    Ok(manifest_path)
}
