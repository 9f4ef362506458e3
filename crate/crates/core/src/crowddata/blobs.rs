use crate::error::{ensure, Result};
use crate::mathcore::{Matrix, RngStream};

/// Class-balanced Gaussian clumps.
///
/// Class means sit at the scaled unit vectors `e_0, ..., e_{C-1}` when
/// `C <= D` (pairwise distance `sqrt(2)`), otherwise evenly on the unit
/// circle in the first two coordinates. Instance `i` has class `i mod C`;
/// every coordinate gets independent `N(0, spread^2)` noise.
pub fn make_blobs(
    n: usize,
    c: usize,
    d: usize,
    spread: f64,
    rng: &mut RngStream,
) -> Result<(Matrix, Vec<usize>)> {
    ensure!(n >= 1 && c >= 1 && d >= 1, "blobs need n, c, d >= 1");
    ensure!(
        c <= d || d >= 2,
        "{c} classes need at least 2 feature dimensions"
    );
    ensure!(spread >= 0.0 && spread.is_finite(), "spread must be non-negative");
    let means = class_means(c, d);
    let labels: Vec<usize> = (0..n).map(|i| i % c).collect();
    let mut data = Vec::with_capacity(n * d);
    for &y in &labels {
        for k in 0..d {
            data.push(means[y][k] + spread * rng.normal());
        }
    }
    Ok((Matrix::from_vec(n, d, data)?, labels))
}

pub(crate) fn class_means(c: usize, d: usize) -> Vec<Vec<f64>> {
    (0..c)
        .map(|y| {
            let mut m = vec![0.0; d];
            if c <= d {
                m[y] = 1.0;
            } else {
                let angle = 2.0 * std::f64::consts::PI * y as f64 / c as f64;
                m[0] = angle.cos();
                m[1] = angle.sin();
            }
            m
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_spread_collapses_to_means() {
        let (x, y) = make_blobs(20, 4, 3, 0.0, &mut RngStream::new(1)).unwrap();
        let means = class_means(4, 3);
        for i in 0..20 {
            assert_eq!(x.row(i), &means[y[i]][..]);
        }
    }

    #[test]
    fn balanced_within_one() {
        let (_, y) = make_blobs(23, 5, 8, 0.3, &mut RngStream::new(2)).unwrap();
        let mut counts = [0usize; 5];
        y.iter().for_each(|&c| counts[c] += 1);
        let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
        assert!(hi - lo <= 1);
    }

    #[test]
    fn deterministic_under_seed() {
        let a = make_blobs(10, 2, 2, 0.5, &mut RngStream::new(3)).unwrap();
        let b = make_blobs(10, 2, 2, 0.5, &mut RngStream::new(3)).unwrap();
        assert_eq!(a, b);
        assert!(make_blobs(0, 2, 2, 0.5, &mut RngStream::new(3)).is_err());
    }
}
