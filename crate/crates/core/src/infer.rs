//! Wild bootstrap confidence regions and tests for `γ = Mβ`.
//!
//! Each replicate regenerates `y* = X θ̂ + ε*` with `ε* ~ N(0, σ̂²)`, reruns the
//! debiased/thresholded pipeline (plus the null-space part `θ̂⊥` of the fit)
//! and records `E*_b = max_i |γ̂*_i − γ̂_i| / τ̂*_i`. Replicate `b` draws from
//! stream `b` of the configured seed, so draws are identical for any thread
//! count.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{debiased_from_response, restrict, scales_from_loadings, threshold_select, ImprovedFit};
use crate::model::{ModelFrame, ThinSvd};
use crate::rng::{Stream, StreamSpec};

/// Replicate count, level and seed of a bootstrap run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl BootstrapConfig {
    pub fn new(replicates: usize, alpha: f64, seed: u64) -> Result<Self> {
        let cfg = BootstrapConfig {
            replicates,
            alpha,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::invalid("number of bootstrap replicates must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }

    /// Stream used by replicate `b`.
    pub fn stream_for(&self, b: usize) -> StreamSpec {
        StreamSpec::new(self.seed, b as u64)
    }
}

/// Replicate statistics and their `1 − α` sample quantile.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapDraws {
    pub stats: Vec<f64>,
    pub level: f64,
    pub quantile: f64,
}

impl BootstrapDraws {
    pub fn new(stats: Vec<f64>, level: f64) -> Result<Self> {
        let quantile = sample_quantile(&stats, level)?;
        Ok(BootstrapDraws {
            stats,
            level,
            quantile,
        })
    }

    /// Quantile of the same draws at another level.
    pub fn quantile_at(&self, level: f64) -> Result<f64> {
        sample_quantile(&self.stats, level)
    }
}

/// Smallest order statistic whose empirical CDF reaches `level`.
pub fn sample_quantile(values: &[f64], level: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("sample quantile of an empty sample".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("quantile level must lie in (0, 1), got {level}")));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("sample contains NaN"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let b = sorted.len() as f64;
    let mut i = 0;
    while i < sorted.len() {
        // Count of values ≤ sorted[i] includes the whole tie block.
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        if j as f64 / b >= level {
            return Ok(sorted[i]);
        }
        i = j;
    }
    Ok(sorted[sorted.len() - 1])
}

/// Simultaneous region `{γ : max_i |γ̂_i − γ_i| / τ̂_i ≤ radius}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceRegion {
    pub center: DVector<f64>,
    pub scale: DVector<f64>,
    pub radius: f64,
    pub level: f64,
}

impl ConfidenceRegion {
    pub fn statistic(&self, gamma: &DVector<f64>) -> Result<f64> {
        max_normalized_gap(&self.center, gamma, &self.scale)
    }

    pub fn contains(&self, gamma: &DVector<f64>) -> Result<bool> {
        Ok(self.statistic(gamma)? <= self.radius)
    }

    /// Per-coordinate endpoints `γ̂_i ± radius · τ̂_i`.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        self.center
            .iter()
            .zip(self.scale.iter())
            .map(|(c, s)| (c - self.radius * s, c + self.radius * s))
            .collect()
    }
}

/// Outcome of testing `γ = γ₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub critical: f64,
    pub reject: bool,
    pub level: f64,
}

fn max_normalized_gap(center: &DVector<f64>, other: &DVector<f64>, scale: &DVector<f64>) -> Result<f64> {
    if other.len() != center.len() {
        return Err(Error::dimension("gamma", center.len(), other.len()));
    }
    Ok(center
        .iter()
        .zip(other.iter())
        .zip(scale.iter())
        .map(|((c, g), s)| (c - g).abs() / s)
        .fold(0.0, f64::max))
}

/// Shared per-fit state for wild replicates.
pub(crate) struct WildEngine<'a> {
    frame: &'a ModelFrame,
    fit: &'a ImprovedFit,
    gains: DVector<f64>,
}

impl<'a> WildEngine<'a> {
    pub(crate) fn new(frame: &'a ModelFrame, fit: &'a ImprovedFit) -> Result<Self> {
        check_fit(frame, fit)?;
        Ok(WildEngine {
            frame,
            fit,
            gains: frame.svd().debiased_gains(fit.hyper.rho),
        })
    }

    /// Regenerates the data around `θ̂` and returns the thresholded estimate
    /// together with its selection.
    pub(crate) fn resample_estimate(&self, stream: &mut Stream) -> Result<(DVector<f64>, Vec<usize>)> {
        let n = self.frame.n();
        let eps = stream.normal(0.0, self.fit.sigma_hat(), n)?;
        let y_star = &self.fit.fitted + DVector::from_vec(eps);
        let tilde = debiased_from_response(self.frame.svd(), &y_star, &self.gains) + &self.fit.theta_perp_hat;
        let selected = threshold_select(&tilde, self.fit.hyper.threshold);
        Ok((restrict(&tilde, &selected), selected))
    }

    fn replicate(&self, stream: &mut Stream) -> Result<f64> {
        let (theta_hat_star, selected) = self.resample_estimate(stream)?;
        let gamma_star = self.frame.combination() * theta_hat_star;
        let tau_star = if selected == self.fit.selected {
            self.fit.tau_hat.clone()
        } else {
            let loadings = if selected.is_empty() {
                DMatrix::zeros(self.frame.p1(), self.frame.svd().rank())
            } else {
                self.frame.combination().select_columns(&selected)
                    * self.frame.svd().right().select_rows(&selected)
            };
            scales_from_loadings(&loadings, &self.gains, self.frame.n())
        };
        max_normalized_gap(&gamma_star, &self.fit.gamma_hat, &tau_star)
    }
}

pub(crate) fn check_fit(frame: &ModelFrame, fit: &ImprovedFit) -> Result<()> {
    if fit.theta_hat.len() != frame.p() {
        return Err(Error::dimension("fit parameters", frame.p(), fit.theta_hat.len()));
    }
    if fit.fitted.len() != frame.n() {
        return Err(Error::dimension("fit residuals", frame.n(), fit.fitted.len()));
    }
    if fit.gamma_hat.len() != frame.p1() {
        return Err(Error::dimension("fit combinations", frame.p1(), fit.gamma_hat.len()));
    }
    Ok(())
}

/// One wild bootstrap replicate `E*_b`.
pub fn wild_replicate(frame: &ModelFrame, fit: &ImprovedFit, stream: &mut Stream) -> Result<f64> {
    WildEngine::new(frame, fit)?.replicate(stream)
}

/// All `B` wild replicates (stream `b` for replicate `b`), run in parallel.
pub fn wild_draws(frame: &ModelFrame, fit: &ImprovedFit, cfg: &BootstrapConfig) -> Result<BootstrapDraws> {
    cfg.validate()?;
    let engine = WildEngine::new(frame, fit)?;
    let stats = (0..cfg.replicates)
        .into_par_iter()
        .map(|b| engine.replicate(&mut cfg.stream_for(b).stream()))
        .collect::<Result<Vec<f64>>>()?;
    BootstrapDraws::new(stats, 1.0 - cfg.alpha)
}

/// Simultaneous `1 − α` confidence region for `γ = Mβ`.
pub fn confidence_region(
    frame: &ModelFrame,
    fit: &ImprovedFit,
    cfg: &BootstrapConfig,
) -> Result<(ConfidenceRegion, BootstrapDraws)> {
    let draws = wild_draws(frame, fit, cfg)?;
    Ok((region_from_draws(fit, &draws), draws))
}

pub fn region_from_draws(fit: &ImprovedFit, draws: &BootstrapDraws) -> ConfidenceRegion {
    ConfidenceRegion {
        center: fit.gamma_hat.clone(),
        scale: fit.tau_hat.clone(),
        radius: draws.quantile,
        level: draws.level,
    }
}

/// Tests `γ = γ₀` against the quantile of existing draws.
pub fn test_with_draws(fit: &ImprovedFit, gamma0: &DVector<f64>, draws: &BootstrapDraws) -> Result<TestResult> {
    let statistic = max_normalized_gap(&fit.gamma_hat, gamma0, &fit.tau_hat)?;
    Ok(TestResult {
        statistic,
        critical: draws.quantile,
        reject: statistic > draws.quantile,
        level: draws.level,
    })
}

/// Wild bootstrap test of `γ = γ₀` at level `α`.
pub fn hypothesis_test(
    frame: &ModelFrame,
    fit: &ImprovedFit,
    gamma0: &DVector<f64>,
    cfg: &BootstrapConfig,
) -> Result<TestResult> {
    if gamma0.len() != frame.p1() {
        return Err(Error::dimension("gamma0", frame.p1(), gamma0.len()));
    }
    let draws = wild_draws(frame, fit, cfg)?;
    test_with_draws(fit, gamma0, &draws)
}

/// Empirical distribution of a sample, kept sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("empirical CDF of an empty sample".into()));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("sample contains NaN"));
        }
        values.sort_by(f64::total_cmp);
        Ok(Ecdf { sorted: values })
    }

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

    /// Two-sample Kolmogorov–Smirnov distance `sup_x |F(x) − G(x)|`.
    pub fn ks_distance(&self, other: &Ecdf) -> f64 {
        let (a, b) = (&self.sorted, &other.sorted);
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let (mut i, mut j) = (0, 0);
        let mut d: f64 = 0.0;
        while i < a.len() && j < b.len() {
            let x = a[i].min(b[j]);
            while i < a.len() && a[i] <= x {
                i += 1;
            }
            while j < b.len() && b[j] <= x {
                j += 1;
            }
            d = d.max((i as f64 / na - j as f64 / nb).abs());
        }
        d
    }
}

/// Monte-Carlo approximation of the Gaussian limit law `H` of the max statistic:
/// `max_i (1/τ_i) |Σ_k c_ik g_k ξ_k|` with `ξ_k ~ N(0, σ²)` and `g_k` the
/// debiased gains of `svd` at `rho`. Rows of `loadings` range over the active
/// combinations.
pub fn h_oracle(
    svd: &ThinSvd,
    loadings: &DMatrix<f64>,
    tau: &DVector<f64>,
    rho: f64,
    sigma: f64,
    draws: usize,
    stream: &mut Stream,
) -> Result<Ecdf> {
    if draws == 0 {
        return Err(Error::invalid("h_oracle needs at least one draw"));
    }
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    let r = svd.rank();
    if loadings.ncols() != r {
        return Err(Error::dimension("loading columns", r, loadings.ncols()));
    }
    if tau.len() != loadings.nrows() {
        return Err(Error::dimension("tau", loadings.nrows(), tau.len()));
    }
    let gains = svd.debiased_gains(rho);
    let mut weighted = loadings.clone();
    for (k, mut col) in weighted.column_iter_mut().enumerate() {
        col *= gains[k];
    }
    for (i, mut row) in weighted.row_iter_mut().enumerate() {
        row /= tau[i];
    }
    let mut out = Vec::with_capacity(draws);
    for _ in 0..draws {
        let xi = DVector::from_vec(stream.normal(0.0, sigma, r)?);
        out.push((&weighted * xi).amax());
    }
    Ecdf::new(out)
}
