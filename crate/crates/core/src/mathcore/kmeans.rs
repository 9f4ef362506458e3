use super::RngStream;
use crate::error::{ensure, Result};

/// Outcome of [`kmeans`].
#[derive(Debug, Clone, PartialEq)]
pub struct KmeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances from each point to its assigned centroid.
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after every assignment pass, seeding pass first.
    pub inertia_history: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn seed_plus_plus(points: &[Vec<f64>], g: usize, rng: &mut RngStream) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![rng.below(n)];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[chosen[0]])).collect();
    while chosen.len() < g {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.uniform() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, d) in d2.iter().enumerate() {
                acc += d;
                if target < acc && *d > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // all remaining mass is zero: any unused index will do
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.below(free.len())]
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

fn assign_all(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut inertia = 0.0;
    let assignments = points
        .iter()
        .map(|p| {
            let (c, d) = nearest(p, centroids);
            inertia += d;
            c
        })
        .collect();
    (assignments, inertia)
}

fn recompute_means(
    points: &[Vec<f64>],
    assignments: &mut [usize],
    centroids: &mut [Vec<f64>],
) {
    let g = centroids.len();
    let dim = points[0].len();
    loop {
        let mut sums = vec![vec![0.0; dim]; g];
        let mut counts = vec![0usize; g];
        for (p, &c) in points.iter().zip(assignments.iter()) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..g {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let Some(empty) = counts.iter().position(|&n| n == 0) else {
            return;
        };
        // repair: move the point farthest from its centroid (taken from a
        // cluster that can spare it) into the empty cluster
        let mut far = None;
        let mut far_d = -1.0;
        for (i, p) in points.iter().enumerate() {
            let c = assignments[i];
            if counts[c] < 2 {
                continue;
            }
            let d = sq_dist(p, &centroids[c]);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let i = far.expect("g <= n guarantees a donor cluster");
        assignments[i] = empty;
        centroids[empty] = points[i].clone();
    }
}

/// Lloyd's algorithm from k-means++ seeding.
///
/// Stops when assignments no longer change or after `max_iter` update
/// passes. Ties between equidistant centroids go to the lowest index.
pub fn kmeans(
    points: &[Vec<f64>],
    g: usize,
    max_iter: usize,
    rng: &mut RngStream,
) -> Result<KmeansResult> {
    ensure!(!points.is_empty(), "kmeans needs at least one point");
    ensure!(g >= 1, "kmeans needs at least one cluster");
    ensure!(
        g <= points.len(),
        "{g} clusters requested for {} points",
        points.len()
    );
    let dim = points[0].len();
    ensure!(
        points.iter().all(|p| p.len() == dim && p.iter().all(|v| v.is_finite())),
        "kmeans points must share one dimension and be finite"
    );

    let mut centroids = seed_plus_plus(points, g, rng);
    let (mut assignments, mut inertia) = assign_all(points, &centroids);
    let mut history = vec![inertia];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        recompute_means(points, &mut assignments, &mut centroids);
        let (next, next_inertia) = assign_all(points, &centroids);
        history.push(next_inertia);
        inertia = next_inertia;
        let stable = next == assignments;
        assignments = next;
        if stable {
            break;
        }
    }
    // the last assignment may have emptied a cluster; keep the repaired view
    let mut counts = vec![0usize; g];
    assignments.iter().for_each(|&c| counts[c] += 1);
    if counts.contains(&0) {
        recompute_means(points, &mut assignments, &mut centroids);
        inertia = points
            .iter()
            .zip(&assignments)
            .map(|(p, &c)| sq_dist(p, &centroids[c]))
            .sum();
        history.push(inertia);
    }
    Ok(KmeansResult {
        assignments,
        centroids,
        inertia,
        iterations,
        inertia_history: history,
    })
}
