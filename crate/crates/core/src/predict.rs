//! Hybrid bootstrap prediction regions for future responses `y_f = X_f β + ε_f`.
//!
//! The estimation error is replicated with the Gaussian wild bootstrap and the
//! future noise by resampling centered residuals, so the region adapts to
//! non-Gaussian errors. Regions are symmetric sup-norm boxes around
//! `ŷ_f = X_f θ̂`.
//!
//! `p1` (rows of `X_f`) is expected to stay small; the max over many rows of
//! resampled residuals makes the region grow with `p1`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{improved_fit, ImprovedFit};
use crate::infer::{check_fit, BootstrapConfig, BootstrapDraws, WildEngine};
use crate::model::{check_finite, DesignMatrix, Hyperparams, ModelFrame};
use crate::rng::Stream;

/// Sorted centered residuals and their empirical CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    /// Centers `residuals` and sorts them.
    pub fn from_residuals(residuals: &[f64]) -> Result<Self> {
        if residuals.is_empty() {
            return Err(Error::Empty("no residuals".into()));
        }
        let mean = residuals.iter().sum::<f64>() / residuals.len() as f64;
        let mut sorted: Vec<f64> = residuals.iter().map(|e| e - mean).collect();
        sorted.sort_by(f64::total_cmp);
        Ok(EmpiricalCdf { sorted })
    }

    /// `F̂(x) = #{ε̂_i ≤ x} / n`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// `count` i.i.d. draws from `F̂`.
    pub fn sample(&self, stream: &mut Stream, count: usize) -> Result<Vec<f64>> {
        Ok(stream
            .resample_indices(self.sorted.len(), count)?
            .into_iter()
            .map(|i| self.sorted[i])
            .collect())
    }
}

/// Empirical CDF of the fit's centered residuals.
pub fn ecdf(fit: &ImprovedFit) -> Result<EmpiricalCdf> {
    EmpiricalCdf::from_residuals(fit.residuals_raw.as_slice())
}

/// Which residuals feed the future-noise resampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResidualSource {
    /// In-sample residuals `y − X θ̂`.
    #[default]
    Fitted,
    /// Leave-one-out predictive residuals (one refit per sample).
    LeaveOneOut,
}

/// Leave-one-out predictive residuals `y_i − x_iᵀ θ̂_(−i)`, uncentered.
pub fn loo_residuals(frame: &ModelFrame, hyper: Hyperparams) -> Result<DVector<f64>> {
    let (n, p) = (frame.n(), frame.p());
    if n < 2 {
        return Err(Error::invalid("leave-one-out residuals need at least two samples"));
    }
    let x = frame.x();
    let y = frame.response();
    let tol = frame.svd().rank_tolerance();
    let res = (0..n)
        .into_par_iter()
        .map(|i| {
            let keep: Vec<usize> = (0..n).filter(|&k| k != i).collect();
            let xs = DesignMatrix::new(x.select_rows(&keep))?;
            let ys = DVector::from_iterator(n - 1, keep.iter().map(|&k| y[k]));
            let sub = ModelFrame::with_rank_tolerance(xs, ys, Some(DMatrix::identity(p, p)), tol)?;
            let fit = improved_fit(&sub, hyper)?;
            Ok(y[i] - x.row(i).dot(&fit.theta_hat.transpose()))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(DVector::from_vec(res))
}

/// Point prediction `X_f θ̂`.
pub fn predict_point(fit: &ImprovedFit, xf: &DMatrix<f64>) -> Result<DVector<f64>> {
    if xf.ncols() != fit.theta_hat.len() {
        return Err(Error::dimension("prediction design columns", fit.theta_hat.len(), xf.ncols()));
    }
    Ok(xf * &fit.theta_hat)
}

/// Sup-norm prediction box `{y_f : max_i |y_f,i − ŷ_f,i| ≤ radius}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRegion {
    pub center: DVector<f64>,
    pub radius: f64,
    pub level: f64,
}

impl PredictionRegion {
    pub fn contains(&self, y_future: &DVector<f64>) -> Result<bool> {
        if y_future.len() != self.center.len() {
            return Err(Error::dimension("future response", self.center.len(), y_future.len()));
        }
        Ok((y_future - &self.center).amax() <= self.radius)
    }

    pub fn intervals(&self) -> Vec<(f64, f64)> {
        self.center
            .iter()
            .map(|c| (c - self.radius, c + self.radius))
            .collect()
    }
}

struct HybridEngine<'a> {
    wild: WildEngine<'a>,
    xf: &'a DMatrix<f64>,
    center: DVector<f64>,
    cdf: &'a EmpiricalCdf,
}

impl<'a> HybridEngine<'a> {
    fn new(frame: &'a ModelFrame, fit: &'a ImprovedFit, xf: &'a DMatrix<f64>, cdf: &'a EmpiricalCdf) -> Result<Self> {
        check_fit(frame, fit)?;
        check_finite("prediction design", xf)?;
        let center = predict_point(fit, xf)?;
        Ok(HybridEngine {
            wild: WildEngine::new(frame, fit)?,
            xf,
            center,
            cdf,
        })
    }

    fn replicate(&self, stream: &mut Stream) -> Result<f64> {
        // Gaussian errors for y* are drawn first, then the future noise.
        let (theta_hat_star, _) = self.wild.resample_estimate(stream)?;
        let eps_f = self.cdf.sample(stream, self.xf.nrows())?;
        let predicted = self.xf * theta_hat_star;
        Ok(self
            .center
            .iter()
            .zip(eps_f.iter())
            .zip(predicted.iter())
            .map(|((c, e), yhat)| (c + e - yhat).abs())
            .fold(0.0, f64::max))
    }
}

/// One hybrid replicate `E*_b = max_i |y*_f,i − ŷ*_f,i|`.
pub fn hybrid_replicate(
    frame: &ModelFrame,
    fit: &ImprovedFit,
    xf: &DMatrix<f64>,
    cdf: &EmpiricalCdf,
    stream: &mut Stream,
) -> Result<f64> {
    HybridEngine::new(frame, fit, xf, cdf)?.replicate(stream)
}

/// `B` hybrid replicates resampling the given residual distribution.
pub fn hybrid_draws(
    frame: &ModelFrame,
    fit: &ImprovedFit,
    xf: &DMatrix<f64>,
    cdf: &EmpiricalCdf,
    cfg: &BootstrapConfig,
) -> Result<BootstrapDraws> {
    cfg.validate()?;
    let engine = HybridEngine::new(frame, fit, xf, cdf)?;
    let stats = (0..cfg.replicates)
        .into_par_iter()
        .map(|b| engine.replicate(&mut cfg.stream_for(b).stream()))
        .collect::<Result<Vec<f64>>>()?;
    BootstrapDraws::new(stats, 1.0 - cfg.alpha)
}

/// `1 − α` prediction region for `y_f` resampling fitted residuals.
pub fn prediction_region(
    frame: &ModelFrame,
    fit: &ImprovedFit,
    xf: &DMatrix<f64>,
    cfg: &BootstrapConfig,
) -> Result<(PredictionRegion, BootstrapDraws)> {
    prediction_region_with(frame, fit, xf, cfg, ResidualSource::Fitted)
}

pub fn prediction_region_with(
    frame: &ModelFrame,
    fit: &ImprovedFit,
    xf: &DMatrix<f64>,
    cfg: &BootstrapConfig,
    source: ResidualSource,
) -> Result<(PredictionRegion, BootstrapDraws)> {
    let cdf = match source {
        ResidualSource::Fitted => ecdf(fit)?,
        ResidualSource::LeaveOneOut => {
            EmpiricalCdf::from_residuals(loo_residuals(frame, fit.hyper)?.as_slice())?
        }
    };
    let draws = hybrid_draws(frame, fit, xf, &cdf, cfg)?;
    let region = PredictionRegion {
        center: predict_point(fit, xf)?,
        radius: draws.quantile,
        level: draws.level,
    };
    Ok((region, draws))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DesignMatrix;
    use crate::rng::StreamSpec;

    fn frame_with(y: &[f64]) -> ModelFrame {
        let x = DesignMatrix::from_row_slice(2, 1, &[1.0, 1.0]).unwrap();
        ModelFrame::new(x, DVector::from_row_slice(y), None).unwrap()
    }

    #[test]
    fn ecdf_examples() {
        let cdf = EmpiricalCdf::from_residuals(&[4.0, 3.0, 5.0]).unwrap();
        assert_eq!(cdf.values(), &[-1.0, 0.0, 1.0]);
        assert!((cdf.eval(0.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(cdf.eval(1.0), 1.0);
        assert_eq!(cdf.eval(-1.0001), 0.0);
        assert!(EmpiricalCdf::from_residuals(&[]).is_err());
    }

    #[test]
    fn point_prediction() {
        let frame = frame_with(&[2.0, 2.0]);
        let fit = improved_fit(&frame, Hyperparams::new(0.0, 0.0).unwrap()).unwrap();
        assert_eq!(predict_point(&fit, &DMatrix::zeros(3, 1)).unwrap(), DVector::zeros(3));
        let id = DMatrix::identity(1, 1);
        assert!((predict_point(&fit, &id).unwrap()[0] - fit.theta_hat[0]).abs() < 1e-15);
        assert!(predict_point(&fit, &DMatrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn noiseless_hybrid_is_zero() {
        let frame = frame_with(&[2.0, 2.0]);
        let fit = improved_fit(&frame, Hyperparams::new(0.0, 0.0).unwrap()).unwrap();
        assert!(fit.sigma2_hat < 1e-30);
        let cdf = ecdf(&fit).unwrap();
        let xf = DMatrix::from_element(1, 1, 1.0);
        let e = hybrid_replicate(&frame, &fit, &xf, &cdf, &mut StreamSpec::new(0, 0).stream()).unwrap();
        assert!(e < 1e-12);
        let cfg = BootstrapConfig::new(20, 0.1, 1).unwrap();
        let (region, _) = prediction_region(&frame, &fit, &xf, &cfg).unwrap();
        assert!(region.radius < 1e-12);
    }

    #[test]
    fn two_point_residuals_give_unit_statistic() {
        // y = (1, 3) on a constant design: θ̂ = 2, residuals (−1, 1).
        let frame = frame_with(&[1.0, 3.0]);
        let fit = improved_fit(&frame, Hyperparams::new(0.0, 0.0).unwrap())
            .unwrap()
            .with_sigma2(0.0)
            .unwrap();
        let cdf = ecdf(&fit).unwrap();
        let xf = DMatrix::from_element(1, 1, 1.0);
        for b in 0..20 {
            let e = hybrid_replicate(&frame, &fit, &xf, &cdf, &mut StreamSpec::new(7, b).stream()).unwrap();
            assert!((e - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn region_membership() {
        let region = PredictionRegion {
            center: DVector::from_vec(vec![0.0, 1.0]),
            radius: 0.5,
            level: 0.9,
        };
        assert!(region.contains(&DVector::from_vec(vec![0.5, 0.5])).unwrap());
        assert!(!region.contains(&DVector::from_vec(vec![0.51, 1.0])).unwrap());
        assert_eq!(region.intervals(), vec![(-0.5, 0.5), (0.5, 1.5)]);
    }
}
