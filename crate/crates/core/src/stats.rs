//! Running moments with order-independent, deterministic merging.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Realizations per work unit of [`ensemble_moments`]. Fixed so the
/// reduction tree does not depend on the thread count.
pub const BLOCK: u64 = 64;

/// Count, mean and sum of squared deviations of a sample.
///
/// Merging follows Chan et al.; combined with [`pairwise_merge`] the result
/// depends only on the order of the inputs, never on thread scheduling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn single(x: f64) -> Self {
        Self {
            count: 1,
            mean: x,
            m2: 0.0,
        }
    }

    pub fn merge(&self, other: &Moments) -> Moments {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let n_a = self.count as f64;
        let n_b = other.count as f64;
        let n = n_a + n_b;
        let delta = other.mean - self.mean;
        Moments {
            count: self.count + other.count,
            mean: self.mean + delta * n_b / n,
            m2: self.m2 + other.m2 + delta * delta * n_a * n_b / n,
        }
    }

    /// Unbiased sample variance; zero for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Pairwise (tree) reduction of a slice of moments.
pub fn pairwise_merge(items: &[Moments]) -> Moments {
    match items.len() {
        0 => Moments::default(),
        1 => items[0],
        n => {
            let (lo, hi) = items.split_at(n / 2);
            pairwise_merge(lo).merge(&pairwise_merge(hi))
        }
    }
}

/// Pairwise summation of plain values.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (lo, hi) = xs.split_at(xs.len() / 2);
    pairwise_sum(lo) + pairwise_sum(hi)
}

/// Moments of a slice of samples, built with a pairwise tree.
pub fn moments_of(xs: &[f64]) -> Moments {
    if xs.len() <= 1 {
        return xs.first().map(|&x| Moments::single(x)).unwrap_or_default();
    }
    let (lo, hi) = xs.split_at(xs.len() / 2);
    moments_of(lo).merge(&moments_of(hi))
}

/// Elementwise pairwise merge of equally long rows of moments.
pub fn pairwise_merge_rows(rows: &[Vec<Moments>]) -> Vec<Moments> {
    match rows.len() {
        0 => Vec::new(),
        1 => rows[0].clone(),
        n => {
            let (lo, hi) = rows.split_at(n / 2);
            let a = pairwise_merge_rows(lo);
            let b = pairwise_merge_rows(hi);
            a.iter().zip(&b).map(|(x, y)| x.merge(y)).collect()
        }
    }
}

/// Per-column moments of `n` sample rows, `sample(i)` producing row `i`.
/// Rows are grouped in fixed blocks processed in parallel and merged
/// pairwise, so the result is identical for any number of threads.
pub fn ensemble_moments<F>(n: u64, width: usize, sample: F) -> Result<Vec<Moments>>
where
    F: Fn(u64) -> Result<Vec<f64>> + Sync,
{
    let blocks = n.div_ceil(BLOCK);
    let rows = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![Moments::default(); width];
            for i in b * BLOCK..((b + 1) * BLOCK).min(n) {
                let row = sample(i)?;
                for (m, x) in acc.iter_mut().zip(row) {
                    *m = m.merge(&Moments::single(x));
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(if rows.is_empty() {
        vec![Moments::default(); width]
    } else {
        pairwise_merge_rows(&rows)
    })
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_matches_direct_formula() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let m = moments_of(&xs);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert_eq!(m.count, 1000);
        assert!((m.mean - mean).abs() < 1e-12);
        assert!((m.variance() - var).abs() < 1e-10);
    }

    #[test]
    fn empty_and_single() {
        assert_eq!(pairwise_merge(&[]).count, 0);
        let one = Moments::single(2.5);
        assert_eq!(one.std_error(), 0.0);
        assert_eq!(one.merge(&Moments::default()), one);
    }

    #[test]
    fn ensemble_is_thread_count_independent() {
        let f = |i: u64| Ok(vec![(i as f64 * 0.37).sin(), (i as f64).sqrt()]);
        let a = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let ma = a.install(|| ensemble_moments(1000, 2, f)).unwrap();
        let mb = b.install(|| ensemble_moments(1000, 2, f)).unwrap();
        assert_eq!(ma, mb);
        assert_eq!(ma[0].count, 1000);
    }

    #[test]
    fn fit_recovers_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 2.0).collect();
        let (s, c) = linear_fit(&x, &y);
        assert!((s - 3.0).abs() < 1e-12 && (c + 2.0).abs() < 1e-12);
    }
}
