//! Deterministic, splittable random streams.
//!
//! A stream is addressed by `(master_seed, stream_id)` and backed by ChaCha12
//! with the id mapped onto ChaCha's native 64-bit stream selector, so replicate
//! `b` of a bootstrap always draws from stream `b` no matter which thread runs
//! it. Nested experiments derive fresh master seeds with [`derive_seed`].
//!
//! Gaussian draws use the ziggurat sampler from `rand_distr`; Laplace draws use
//! inversion of the CDF.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Address of one random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl StreamSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        StreamSpec {
            master_seed,
            stream_id,
        }
    }

    pub fn stream(&self) -> Stream {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        Stream { rng }
    }
}

/// Mixes a label into a seed (splitmix64 finalizer applied twice).
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(mix(seed) ^ label.rotate_left(17))
}

/// A live random stream.
#[derive(Debug, Clone)]
pub struct Stream {
    rng: ChaCha12Rng,
}

impl Stream {
    /// `count` i.i.d. `N(mean, sd²)` draws.
    pub fn normal(&mut self, mean: f64, sd: f64, count: usize) -> Result<Vec<f64>> {
        if !(sd >= 0.0 && sd.is_finite()) {
            return Err(Error::invalid(format!(
                "standard deviation must be finite and nonnegative, got {sd}"
            )));
        }
        Ok((0..count).map(|_| mean + sd * self.standard_normal()).collect())
    }

    /// `count` i.i.d. mean-zero Laplace draws with the given scale (variance `2·scale²`).
    pub fn laplace(&mut self, scale: f64, count: usize) -> Result<Vec<f64>> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid(format!(
                "Laplace scale must be positive, got {scale}"
            )));
        }
        Ok((0..count)
            .map(|_| {
                // Uniform on the open interval (0, 1).
                let u = loop {
                    let u: f64 = self.rng.random();
                    if u > 0.0 {
                        break u;
                    }
                };
                laplace_quantile(u, scale)
            })
            .collect())
    }

    /// `count` i.i.d. indices drawn uniformly from `0..n`.
    pub fn resample_indices(&mut self, n: usize, count: usize) -> Result<Vec<usize>> {
        if n == 0 {
            return Err(Error::Empty("cannot resample from zero items".into()));
        }
        Ok((0..count).map(|_| self.rng.random_range(0..n)).collect())
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random()
    }

    pub(crate) fn rng_mut(&mut self) -> &mut ChaCha12Rng {
        &mut self.rng
    }
}

/// Inverse CDF of the mean-zero Laplace law.
pub fn laplace_quantile(u: f64, scale: f64) -> f64 {
    let c = u - 0.5;
    -scale * c.signum() * (1.0 - 2.0 * c.abs()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn zero_sd_gives_constant() {
        let mut s = StreamSpec::new(1, 0).stream();
        assert_eq!(s.normal(3.0, 0.0, 2).unwrap(), vec![3.0, 3.0]);
    }

    #[test]
    fn negative_sd_rejected() {
        let mut s = StreamSpec::new(1, 0).stream();
        assert!(s.normal(0.0, -1.0, 1).is_err());
    }

    #[test]
    fn normal_moments() {
        let mut s = StreamSpec::new(11, 3).stream();
        let v = s.normal(0.0, 2.0, 1_000_000).unwrap();
        let (mean, var) = moments(&v);
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 4.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn laplace_moments() {
        let mut s = StreamSpec::new(12, 0).stream();
        let v = s.laplace(2f64.sqrt(), 1_000_000).unwrap();
        let (mean, var) = moments(&v);
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 4.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn laplace_median_is_zero() {
        assert_eq!(laplace_quantile(0.5, 1.7), 0.0);
        assert!(laplace_quantile(0.25, 1.0) < 0.0);
        assert!((laplace_quantile(0.25, 1.0) + laplace_quantile(0.75, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn laplace_rejects_bad_scale() {
        let mut s = StreamSpec::new(1, 0).stream();
        assert!(s.laplace(0.0, 1).is_err());
        assert!(s.laplace(-1.0, 1).is_err());
    }

    #[test]
    fn resample_single_item() {
        let mut s = StreamSpec::new(5, 9).stream();
        assert!(s.resample_indices(1, 100).unwrap().iter().all(|&i| i == 0));
        assert!(s.resample_indices(0, 1).is_err());
    }

    #[test]
    fn resample_frequencies_uniform() {
        let mut s = StreamSpec::new(21, 1).stream();
        let draws = s.resample_indices(4, 1_000_000).unwrap();
        let mut counts = [0usize; 4];
        for d in draws {
            counts[d] += 1;
        }
        for c in counts {
            let f = c as f64 / 1e6;
            assert!((f - 0.25).abs() < 0.005, "frequency {f}");
        }
    }

    #[test]
    fn same_spec_same_sequence() {
        let a = StreamSpec::new(77, 4).stream().resample_indices(10, 50).unwrap();
        let b = StreamSpec::new(77, 4).stream().resample_indices(10, 50).unwrap();
        assert_eq!(a, b);
        let x = StreamSpec::new(77, 4).stream().normal(0.0, 1.0, 8).unwrap();
        let y = StreamSpec::new(77, 4).stream().normal(0.0, 1.0, 8).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn distinct_streams_uncorrelated() {
        let n = 100_000;
        let a = StreamSpec::new(3, 0).stream().normal(0.0, 1.0, n).unwrap();
        let b = StreamSpec::new(3, 1).stream().normal(0.0, 1.0, n).unwrap();
        let (ma, va) = moments(&a);
        let (mb, vb) = moments(&b);
        let cov = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - ma) * (y - mb))
            .sum::<f64>()
            / (n as f64 - 1.0);
        let corr = cov / (va * vb).sqrt();
        assert!(corr.abs() < 0.01, "corr {corr}");
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
        assert_eq!(derive_seed(9, 9), derive_seed(9, 9));
    }
}
