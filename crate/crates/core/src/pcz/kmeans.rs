use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after every assignment step, starting with the seeding.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: first centroid uniform, then D^2 sampling.
pub fn kmeans_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![points[first].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[first])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 {
                    pick = Some(i);
                    if r < d {
                        break;
                    }
                    r -= d;
                }
            }
            pick.expect("positive total implies a positive weight")
        } else {
            // duplicates only: take the first unchosen point
            chosen.iter().position(|c| !c).expect("k <= n")
        };
        chosen[pick] = true;
        let c = points[pick].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>], out: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (p, a) in points.iter().zip(out.iter_mut()) {
        let mut best = (0, f64::INFINITY);
        for (j, c) in centroids.iter().enumerate() {
            let d = sq_dist(p, c);
            if d < best.1 {
                best = (j, d);
            }
        }
        *a = best.0;
        inertia += best.1;
    }
    inertia
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// Stops when no centroid moves by `tol` or more, or after `max_iter`
/// update steps. A cluster that empties is reseeded at the point farthest
/// from its own centroid (lowest index on ties).
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<KMeansResult> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::Parameter(format!("k = {k} must be in 1..={n}")));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Parameter("all points must share one dimension".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_plus_plus(points, k, &mut rng);
    let mut assignments = vec![0; n];
    let mut inertia = assign(points, &centroids, &mut assignments);
    let mut history = vec![inertia];
    let mut iterations = 0;

    for _ in 0..max_iter {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut next: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .zip(&centroids)
            .map(|((s, &c), old)| {
                if c == 0 {
                    old.clone()
                } else {
                    s.into_iter().map(|v| v / c as f64).collect()
                }
            })
            .collect();
        for j in 0..k {
            if counts[j] > 0 {
                continue;
            }
            let far = (0..n)
                .filter(|&i| counts[assignments[i]] > 1)
                .map(|i| (i, sq_dist(&points[i], &next[assignments[i]])))
                .fold(None::<(usize, f64)>, |best, cur| match best {
                    Some(b) if b.1 >= cur.1 => Some(b),
                    _ => Some(cur),
                });
            if let Some((i, _)) = far {
                counts[assignments[i]] -= 1;
                counts[j] = 1;
                assignments[i] = j;
                next[j] = points[i].clone();
            }
        }
        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        inertia = assign(points, &centroids, &mut assignments);
        history.push(inertia);
        if shift < tol {
            break;
        }
    }
    Ok(KMeansResult {
        assignments,
        centroids,
        inertia,
        inertia_history: history,
        iterations,
    })
}

/// Best of `n_init` runs of [`kmeans`] with seeds `seed, seed + 1, ...`,
/// by final inertia (earliest run on ties).
pub fn kmeans_restarts(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    n_init: usize,
    max_iter: usize,
    tol: f64,
) -> Result<KMeansResult> {
    let mut best = kmeans(points, k, seed, max_iter, tol)?;
    for r in 1..n_init.max(1) as u64 {
        let run = kmeans(points, k, seed.wrapping_add(r), max_iter, tol)?;
        if run.inertia < best.inertia {
            best = run;
        }
    }
    Ok(best)
}
