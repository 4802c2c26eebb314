use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ImageryError;

const MAX_ITERATIONS: usize = 50;
const CONVERGENCE_SHIFT: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct KMeans {
    pub centroids: Vec<[f64; 3]>,
    pub assignments: Vec<usize>,
    /// Within-cluster sum of squares after each assignment step.
    pub wcss_history: Vec<f64>,
}

impl KMeans {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centroids.len()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }

    pub fn wcss(&self) -> f64 {
        *self.wcss_history.last().unwrap_or(&0.0)
    }
}

#[inline]
fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

fn nearest(p: &[f64; 3], centroids: &[[f64; 3]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = dist2(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn plus_plus_init(samples: &[[f64; 3]], k: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 3]> {
    let mut centroids = vec![samples[rng.random_range(0..samples.len())]];
    let mut d2: Vec<f64> = samples.iter().map(|s| dist2(s, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = samples.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..samples.len())
        };
        let c = samples[pick];
        for (d, s) in d2.iter_mut().zip(samples) {
            *d = d.min(dist2(s, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Lloyd's k-means over color triples with k-means++ seeding.
///
/// Deterministic for a fixed `seed`. Iterates until no centroid moves by
/// 0.5 or more, capped at 50 iterations. Empty clusters keep their centroid.
pub fn kmeans(samples: &[[f64; 3]], k: usize, seed: u64) -> Result<KMeans, ImageryError> {
    if k == 0 || samples.len() < k {
        return Err(ImageryError::TooFewSamples {
            samples: samples.len(),
            k,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(samples, k, &mut rng);
    let mut assignments = vec![0usize; samples.len()];
    let mut wcss_history = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        let mut wcss = 0.0;
        for (a, s) in assignments.iter_mut().zip(samples) {
            let (i, d) = nearest(s, &centroids);
            *a = i;
            wcss += d;
        }
        wcss_history.push(wcss);

        let mut sums = vec![[0.0f64; 3]; k];
        let mut counts = vec![0usize; k];
        for (&a, s) in assignments.iter().zip(samples) {
            counts[a] += 1;
            for c in 0..3 {
                sums[a][c] += s[c];
            }
        }
        let mut max_shift: f64 = 0.0;
        for i in 0..k {
            if counts[i] == 0 {
                continue;
            }
            let n = counts[i] as f64;
            let next = [sums[i][0] / n, sums[i][1] / n, sums[i][2] / n];
            max_shift = max_shift.max(dist2(&next, &centroids[i]).sqrt());
            centroids[i] = next;
        }
        if max_shift < CONVERGENCE_SHIFT {
            break;
        }
    }
    // Final assignment against the settled centroids.
    let mut wcss = 0.0;
    for (a, s) in assignments.iter_mut().zip(samples) {
        let (i, d) = nearest(s, &centroids);
        *a = i;
        wcss += d;
    }
    wcss_history.push(wcss);
    Ok(KMeans {
        centroids,
        assignments,
        wcss_history,
    })
}
