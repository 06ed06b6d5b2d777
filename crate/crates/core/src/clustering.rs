//! Mini-batch k-means over RGB pixel space.
//!
//! Centers are updated with the per-center learning rate 1/count scheme:
//! each batch is first assigned against the frozen centers, then every
//! point pulls its cached center toward itself by eta = 1/count.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imaging::{ImageRgb, SkyMask};
use crate::num::{real, Real};

pub const MASKED_LABEL: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMethod {
    RandomSample,
    KMeansPlusPlus,
}

/// Learned color palette: k centers in RGB space plus accumulated
/// assignment counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Centroids<T> {
    pub points: Vec<[T; 3]>,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub reseed_empty: bool,
    pub init: InitMethod,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { batch_size: 1024, epochs: 10, reseed_empty: true, init: InitMethod::KMeansPlusPlus }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedImage<T> {
    pub width: u32,
    pub height: u32,
    /// Cluster index per pixel; `MASKED_LABEL` marks masked-out pixels.
    pub labels: Vec<u32>,
    pub palette: Centroids<T>,
}

#[inline]
pub fn promote<T: Real>(rgb: [u8; 3]) -> [T; 3] {
    [real(rgb[0] as f64), real(rgb[1] as f64), real(rgb[2] as f64)]
}

#[inline]
fn dist2<T: Real>(a: &[T; 3], b: &[T; 3]) -> T {
    let dr = a[0] - b[0];
    let dg = a[1] - b[1];
    let db = a[2] - b[2];
    dr * dr + dg * dg + db * db
}

impl<T: Real> Centroids<T> {
    pub fn k(&self) -> usize {
        self.points.len()
    }

    /// Nearest center by squared Euclidean distance; ties break to the
    /// lowest index.
    pub fn assign(&self, color: &[T; 3]) -> usize {
        debug_assert!(!self.points.is_empty());
        let mut best = 0usize;
        let mut best_d = dist2(&self.points[0], color);
        for (i, p) in self.points.iter().enumerate().skip(1) {
            let d = dist2(p, color);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    pub fn assign_rgb(&self, rgb: [u8; 3]) -> usize {
        self.assign(&promote(rgb))
    }

    /// One Sculley mini-batch update. Assignments are cached against the
    /// incoming centers before any center moves.
    pub fn partial_fit(&mut self, batch: &[[T; 3]]) {
        debug_assert!(!batch.is_empty());
        let cached: Vec<usize> = batch.iter().map(|x| self.assign(x)).collect();
        for (x, &c) in batch.iter().zip(&cached) {
            self.counts[c] += 1;
            let eta = T::one() / real::<T>(self.counts[c] as f64);
            let p = &mut self.points[c];
            // (1-eta)*p + eta*x, written so x == p leaves p exactly fixed
            for d in 0..3 {
                p[d] = p[d] + eta * (x[d] - p[d]);
            }
        }
    }

    /// Mean squared distance from each point to its nearest center.
    pub fn inertia(&self, points: &[[T; 3]]) -> Result<T> {
        if points.is_empty() {
            return Err(Error::EmptySet);
        }
        let sum: T = points
            .iter()
            .map(|x| dist2(&self.points[self.assign(x)], x))
            .sum();
        Ok(sum / real(points.len() as f64))
    }
}

pub fn init_centroids<T: Real>(
    sample: &[[T; 3]],
    k: usize,
    seed: u64,
    method: InitMethod,
) -> Result<Centroids<T>> {
    if k == 0 {
        return Err(Error::InsufficientData("k must be at least 1".into()));
    }
    if sample.len() < k {
        return Err(Error::InsufficientData(format!(
            "sample of {} points cannot seed k = {k}",
            sample.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = match method {
        InitMethod::RandomSample => {
            let mut idx: Vec<usize> = (0..sample.len()).collect();
            idx.shuffle(&mut rng);
            idx.truncate(k);
            idx.sort_unstable();
            idx.into_iter().map(|i| sample[i]).collect()
        }
        InitMethod::KMeansPlusPlus => kmeans_plus_plus(sample, k, &mut rng),
    };
    Ok(Centroids { points, counts: vec![0; k] })
}

/// D² sampling: each subsequent seed is drawn with probability
/// proportional to its squared distance to the nearest chosen seed.
fn kmeans_plus_plus<T: Real>(sample: &[[T; 3]], k: usize, rng: &mut ChaCha8Rng) -> Vec<[T; 3]> {
    let mut points: Vec<[T; 3]> = Vec::with_capacity(k);
    points.push(sample[rng.gen_range(0..sample.len())]);
    let mut d2: Vec<T> = sample.iter().map(|x| dist2(x, &points[0])).collect();
    while points.len() < k {
        let total: T = d2.iter().copied().sum();
        let next = if total <= T::zero() {
            // all mass at chosen seeds; fall back to uniform
            rng.gen_range(0..sample.len())
        } else {
            let mut target = real::<T>(rng.gen::<f64>()) * total;
            let mut chosen = sample.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        };
        let p = sample[next];
        for (slot, x) in d2.iter_mut().zip(sample) {
            let d = dist2(x, &p);
            if d < *slot {
                *slot = d;
            }
        }
        points.push(p);
    }
    points
}

pub fn fit<T: Real>(
    points: &[[T; 3]],
    k: usize,
    seed: u64,
    config: &FitConfig,
) -> Result<Centroids<T>> {
    let mut centroids = init_centroids(points, k, seed, config.init)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..points.len()).collect();
    let batch_size = config.batch_size.max(1);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch_size) {
            let batch: Vec<[T; 3]> = chunk.iter().map(|&i| points[i]).collect();
            centroids.partial_fit(&batch);
        }
        if config.reseed_empty {
            reseed_empty(&mut centroids, points);
        }
    }
    Ok(centroids)
}

/// Move each never-updated center onto the point currently farthest from
/// its assigned center, so starved centers get a populated region.
fn reseed_empty<T: Real>(centroids: &mut Centroids<T>, points: &[[T; 3]]) {
    let empties: Vec<usize> = centroids
        .counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == 0)
        .map(|(i, _)| i)
        .collect();
    if empties.is_empty() {
        return;
    }
    let mut dists: Vec<(T, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, x)| (dist2(&centroids.points[centroids.assign(x)], x), i))
        .collect();
    dists.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    for (slot, &(_, pi)) in empties.iter().zip(&dists) {
        centroids.points[*slot] = points[pi];
    }
}

pub fn quantize<T: Real>(
    image: &ImageRgb,
    mask: &SkyMask,
    centroids: &Centroids<T>,
) -> Result<SegmentedImage<T>> {
    if mask.width != image.width || mask.height != image.height {
        return Err(Error::DimensionMismatch(format!(
            "mask {}x{} vs image {}x{}",
            mask.width, mask.height, image.width, image.height
        )));
    }
    let mut labels = vec![MASKED_LABEL; image.pixels.len()];
    for y in 0..image.height {
        for x in 0..image.width {
            if mask.is_visible(x, y) {
                let i = (y * image.width + x) as usize;
                labels[i] = centroids.assign(&promote(image.pixels[i])) as u32;
            }
        }
    }
    Ok(SegmentedImage { width: image.width, height: image.height, labels, palette: centroids.clone() })
}

/// Paint labels with rounded centroid colors; masked pixels become black.
pub fn render_segmented<T: Real>(segmented: &SegmentedImage<T>) -> ImageRgb {
    let palette_rgb: Vec<[u8; 3]> = segmented
        .palette
        .points
        .iter()
        .map(|p| {
            let ch = |v: T| -> u8 {
                let r = v.round().to_f64().unwrap_or(0.0);
                r.clamp(0.0, 255.0) as u8
            };
            [ch(p[0]), ch(p[1]), ch(p[2])]
        })
        .collect();
    let pixels = segmented
        .labels
        .iter()
        .map(|&l| if l == MASKED_LABEL { [0, 0, 0] } else { palette_rgb[l as usize] })
        .collect();
    ImageRgb { width: segmented.width, height: segmented.height, pixels }
}
