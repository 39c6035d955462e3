//! k-fold cross-validation of the ridge parameter and threshold.
//!
//! Folds are contiguous blocks of a seeded permutation of the samples. Every
//! `(ρ, b)` pair refits the full debiased/thresholded estimator on the training
//! folds and is scored by held-out mean squared prediction error.

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{debias, restrict, ridge_estimate, threshold_select};
use crate::model::{DesignMatrix, Hyperparams, ModelFrame};
use crate::rng::StreamSpec;

/// Candidate grid and fold settings.
#[derive(Debug, Clone, PartialEq)]
pub struct CvGrid {
    pub rho: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
}

impl CvGrid {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.rho.is_empty() || self.thresholds.is_empty() {
            return Err(Error::Empty("cross-validation grid".into()));
        }
        if let Some(r) = self.rho.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::invalid(format!("ridge candidates must be positive, got {r}")));
        }
        if let Some(b) = self.thresholds.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return Err(Error::invalid(format!("threshold candidates must be nonnegative, got {b}")));
        }
        if self.folds < 2 {
            return Err(Error::invalid(format!("need at least 2 folds, got {}", self.folds)));
        }
        if self.folds > n {
            return Err(Error::invalid(format!(
                "{} folds requested but only {n} samples",
                self.folds
            )));
        }
        Ok(())
    }
}

/// Default grid: 20 log-spaced ridge values in `[1e-3, n]` and 20 thresholds
/// evenly spaced in `[0, 2·median|θ̃|]`, with `θ̃` the debiased estimate at the
/// geometric middle of the ridge range.
pub fn default_grid(frame: &ModelFrame, folds: usize, seed: u64) -> Result<CvGrid> {
    let n = frame.n() as f64;
    let (lo, hi) = (1e-3f64.ln(), n.max(1e-2).ln());
    let rho: Vec<f64> = (0..20).map(|i| (lo + (hi - lo) * i as f64 / 19.0).exp()).collect();
    let mid = ((lo + hi) / 2.0).exp();
    let tilde = debias(frame, &ridge_estimate(frame, mid)?, mid)?;
    let mut abs: Vec<f64> = tilde.iter().map(|t| t.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let m = abs.len();
    let median = if m % 2 == 1 {
        abs[m / 2]
    } else {
        0.5 * (abs[m / 2 - 1] + abs[m / 2])
    };
    let top = 2.0 * median;
    let thresholds = (0..20).map(|i| top * i as f64 / 19.0).collect();
    Ok(CvGrid {
        rho,
        thresholds,
        folds,
        seed,
    })
}

/// Mean held-out error for one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvEntry {
    pub rho: f64,
    pub threshold: f64,
    pub mean_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    /// One entry per `(ρ, b)` pair, ρ-major in grid order.
    pub entries: Vec<CvEntry>,
    pub chosen: Hyperparams,
    pub chosen_error: f64,
    pub folds: usize,
    pub seed: u64,
}

/// Held-out fold membership: `assignment[i]` is the fold of sample `i`.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(StreamSpec::new(seed, 0).stream().rng_mut());
    let mut assignment = vec![0; n];
    let base = n / folds;
    let extra = n % folds;
    let mut pos = 0;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        for &i in &perm[pos..pos + size] {
            assignment[i] = f;
        }
        pos += size;
    }
    assignment
}

pub fn cross_validate(frame: &ModelFrame, grid: &CvGrid) -> Result<CvReport> {
    let n = frame.n();
    grid.validate(n)?;
    let assignment = fold_assignment(n, grid.folds, grid.seed);
    let x = frame.x();
    let y = frame.response();

    let fold_frames = (0..grid.folds)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..n).filter(|&i| assignment[i] != f).collect();
            let test: Vec<usize> = (0..n).filter(|&i| assignment[i] == f).collect();
            if train.is_empty() || test.is_empty() {
                return Err(Error::invalid(format!("fold {} is degenerate", f + 1)));
            }
            let design = DesignMatrix::new(x.select_rows(&train))?;
            let y_train = DVector::from_iterator(train.len(), train.iter().map(|&i| y[i]));
            let sub = ModelFrame::with_rank_tolerance(
                design,
                y_train,
                None,
                frame.svd().rank_tolerance(),
            )?;
            Ok((sub, test))
        })
        .collect::<Result<Vec<_>>>()?;

    // errors[f * n_rho + r][t] = held-out MSE
    let n_rho = grid.rho.len();
    let errors = (0..grid.folds * n_rho)
        .into_par_iter()
        .map(|idx| {
            let (sub, test) = &fold_frames[idx / n_rho];
            let rho = grid.rho[idx % n_rho];
            let tilde = debias(sub, &ridge_estimate(sub, rho)?, rho)?;
            let x_test = x.select_rows(test);
            let y_test = DVector::from_iterator(test.len(), test.iter().map(|&i| y[i]));
            Ok(grid
                .thresholds
                .iter()
                .map(|&b| {
                    let theta_hat = restrict(&tilde, &threshold_select(&tilde, b));
                    (&y_test - &x_test * theta_hat).norm_squared() / test.len() as f64
                })
                .collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;

    let mut entries = Vec::with_capacity(n_rho * grid.thresholds.len());
    for (r, &rho) in grid.rho.iter().enumerate() {
        for (t, &threshold) in grid.thresholds.iter().enumerate() {
            let total: f64 = (0..grid.folds).map(|f| errors[f * n_rho + r][t]).sum();
            entries.push(CvEntry {
                rho,
                threshold,
                mean_error: total / grid.folds as f64,
            });
        }
    }

    let best = entries
        .iter()
        .min_by(|a, b| {
            a.mean_error
                .total_cmp(&b.mean_error)
                .then(a.rho.total_cmp(&b.rho))
                .then(a.threshold.total_cmp(&b.threshold))
        })
        .copied()
        .ok_or_else(|| Error::Empty("cross-validation grid".into()))?;
    Ok(CvReport {
        entries,
        chosen: Hyperparams::new(best.rho, best.threshold)?,
        chosen_error: best.mean_error,
        folds: grid.folds,
        seed: grid.seed,
    })
}
