//! Monte-Carlo harness for the simulation study: data generators, the six
//! preset cases at desk or full scale, coverage/misspecification metrics and
//! power curves.
//!
//! One design `X` and combination matrix `M` are drawn per case and held fixed;
//! each replication draws fresh errors, refits, and runs both bootstraps.
//! Replication `r` uses seeds derived from `(seed, r)` only, so reports are
//! identical for any thread count.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{
    debias, improved_fit, k_diagnostics, restrict, ridge_estimate, threshold_select, KDiagnostics,
};
use crate::infer::{region_from_draws, test_with_draws, wild_draws, BootstrapConfig};
use crate::model::{row_space_params, DesignMatrix, Hyperparams, ModelFrame};
use crate::predict::{ecdf, hybrid_draws, predict_point};
use crate::rng::{derive_seed, Stream, StreamSpec};
use crate::select::{cross_validate, default_grid};

const DESIGN_DIAG: f64 = 2.0;
const DESIGN_OFF_DIAG: f64 = 0.5;

/// Distribution of the regression errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorLaw {
    Normal { sd: f64 },
    Laplace { scale: f64 },
}

impl ErrorLaw {
    /// Normal with variance 4.
    pub fn normal4() -> Self {
        ErrorLaw::Normal { sd: 2.0 }
    }

    /// Laplace with scale √2, hence variance 4.
    pub fn laplace4() -> Self {
        ErrorLaw::Laplace {
            scale: std::f64::consts::SQRT_2,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            ErrorLaw::Normal { sd } => sd * sd,
            ErrorLaw::Laplace { scale } => 2.0 * scale * scale,
        }
    }

    pub fn draw(&self, stream: &mut Stream, count: usize) -> Result<Vec<f64>> {
        match *self {
            ErrorLaw::Normal { sd } => stream.normal(0.0, sd, count),
            ErrorLaw::Laplace { scale } => stream.laplace(scale, count),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ErrorLaw::Normal { .. } => "normal",
            ErrorLaw::Laplace { .. } => "laplace",
        }
    }
}

/// Which generator recipes apply: fewer parameters than samples or more.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `p < n`: `M` blocks normalized to 2/4/6, β with 16 nonzero entries.
    Tall,
    /// `p > n`: `M` blocks normalized to 2/1, β with 6 nonzero entries.
    Wide,
}

impl Regime {
    pub fn default_tau_split(&self) -> usize {
        match self {
            Regime::Tall => 50,
            Regime::Wide => 6,
        }
    }
}

/// Rows i.i.d. `N(0, Σ)` with `Σ = 1.5 I + 0.5 11ᵀ` (diagonal 2, off-diagonal 0.5).
///
/// Uses `Σ^{1/2} = √1.5 I + c 11ᵀ` with `c = (√(1.5 + 0.5p) − √1.5)/p`.
pub fn gen_design(stream: &mut Stream, n: usize, p: usize) -> Result<DesignMatrix> {
    if n == 0 || p == 0 {
        return Err(Error::invalid(format!("design must be nonempty, got {n}x{p}")));
    }
    let a = DESIGN_DIAG - DESIGN_OFF_DIAG;
    let top = a + DESIGN_OFF_DIAG * p as f64;
    let c = (top.sqrt() - a.sqrt()) / p as f64;
    let mut data = Vec::with_capacity(n * p);
    for _ in 0..n {
        let z = stream.normal(0.0, 1.0, p)?;
        let shift = c * z.iter().sum::<f64>();
        data.extend(z.iter().map(|v| a.sqrt() * v + shift));
    }
    DesignMatrix::from_row_slice(n, p, &data)
}

/// Block-structured combination matrix: rows `< m_count` load on the first
/// `tau_split` columns, all rows load on the remaining columns, and each block
/// of each row is rescaled to a fixed Euclidean norm.
pub fn gen_combination(
    stream: &mut Stream,
    p: usize,
    p1: usize,
    m_count: usize,
    tau_split: usize,
    regime: Regime,
) -> Result<DMatrix<f64>> {
    if p1 == 0 || m_count > p1 || tau_split == 0 || tau_split >= p {
        return Err(Error::invalid(format!(
            "invalid combination shape: p = {p}, p1 = {p1}, |M| = {m_count}, tau = {tau_split}"
        )));
    }
    let (lead_norm, tail_active, tail_rest) = match regime {
        Regime::Tall => (2.0, 4.0, 6.0),
        Regime::Wide => (2.0, 1.0, 1.0),
    };
    let mut m = DMatrix::zeros(p1, p);
    let mut fill = |row: usize, cols: std::ops::Range<usize>, mean: f64, sd: f64, norm: f64, s: &mut Stream| -> Result<()> {
        let raw = s.normal(mean, sd, cols.len())?;
        let len = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (j, v) in cols.zip(raw) {
            m[(row, j)] = norm * v / len;
        }
        Ok(())
    };
    for i in 0..p1 {
        if i < m_count {
            fill(i, 0..tau_split, 0.5, 1.0, lead_norm, stream)?;
            fill(i, tau_split..p, 1.0, 2.0, tail_active, stream)?;
        } else {
            fill(i, tau_split..p, 1.0, 2.0, tail_rest, stream)?;
        }
    }
    Ok(m)
}

/// Sparse coefficient patterns of the two regimes.
pub fn gen_beta(regime: Regime, p: usize) -> Result<DVector<f64>> {
    let pattern: Vec<f64> = match regime {
        Regime::Tall => [2.0, 2.0, 2.0, -2.0, -2.0, -2.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0]
            .into_iter()
            .chain([0.01; 4])
            .collect(),
        Regime::Wide => vec![1.0, 1.0, 1.0, -1.0, -1.0, -1.0],
    };
    if p < pattern.len() {
        return Err(Error::invalid(format!(
            "coefficient pattern needs p >= {}, got {p}",
            pattern.len()
        )));
    }
    let mut beta = DVector::zeros(p);
    beta.rows_mut(0, pattern.len()).copy_from_slice(&pattern);
    Ok(beta)
}

/// Parameter against which estimates and regions are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Beta,
    Theta,
}

impl Target {
    pub fn name(&self) -> &'static str {
        match self {
            Target::Beta => "beta",
            Target::Theta => "theta",
        }
    }
}

/// Fixed hyperparameters or cross-validation on a pilot sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HyperChoice {
    Fixed(Hyperparams),
    CrossValidated { folds: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Full,
}

/// Parameters of one simulation case.
#[derive(Debug, Clone, PartialEq)]
pub struct SimCase {
    pub label: String,
    pub n: usize,
    pub p: usize,
    pub p1: usize,
    pub m_count: usize,
    pub tau_split: usize,
    pub regime: Regime,
    pub law: ErrorLaw,
    pub hyper: HyperChoice,
    pub reps: usize,
    pub replicates: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Leading rows of `M` used as the prediction design `X_f`.
    pub xf_rows: usize,
    pub targets: Vec<Target>,
    /// Shifts `δ` for the power curve `γ₀ = γ + δ·1`; empty to skip.
    pub deltas: Vec<f64>,
}

/// Hyperparameters used for the desk-scale presets.
pub const DESK_TALL_HYPER: (f64, f64) = (10.0, 0.5);
pub const DESK_WIDE_HYPER: (f64, f64) = (100.0, 0.3);

impl SimCase {
    /// One of the six preset cases (1..=6).
    pub fn preset(case: u8, scale: Scale) -> Result<SimCase> {
        let (law, regime) = match case {
            1 => (ErrorLaw::normal4(), Regime::Tall),
            2..=4 => (ErrorLaw::laplace4(), Regime::Tall),
            5 => (ErrorLaw::normal4(), Regime::Wide),
            6 => (ErrorLaw::laplace4(), Regime::Wide),
            _ => return Err(Error::invalid(format!("case must be 1..=6, got {case}"))),
        };
        let (n, p, p1, m_count, reps, replicates, xf_rows) = match (scale, case) {
            (Scale::Full, 3) => (1000, 650, 800, 300, 1000, 500, 100),
            (Scale::Full, 4) => (1000, 500, 800, 700, 1000, 500, 100),
            (Scale::Full, 5 | 6) => (1000, 1500, 800, 300, 1000, 500, 100),
            (Scale::Full, _) => (1000, 500, 800, 300, 1000, 500, 100),
            (Scale::Desk, 3) => (300, 195, 80, 30, 300, 200, 10),
            (Scale::Desk, 4) => (300, 100, 80, 70, 300, 200, 10),
            (Scale::Desk, 5 | 6) => (200, 300, 80, 30, 300, 200, 10),
            (Scale::Desk, _) => (300, 100, 80, 30, 300, 200, 10),
        };
        let hyper = match (scale, regime) {
            (Scale::Full, _) => HyperChoice::CrossValidated { folds: 5 },
            (Scale::Desk, Regime::Tall) => {
                HyperChoice::Fixed(Hyperparams::new(DESK_TALL_HYPER.0, DESK_TALL_HYPER.1)?)
            }
            (Scale::Desk, Regime::Wide) => {
                HyperChoice::Fixed(Hyperparams::new(DESK_WIDE_HYPER.0, DESK_WIDE_HYPER.1)?)
            }
        };
        let targets = match regime {
            Regime::Tall => vec![Target::Theta],
            Regime::Wide => vec![Target::Beta, Target::Theta],
        };
        Ok(SimCase {
            label: format!("case{case}"),
            n,
            p,
            p1,
            m_count,
            tau_split: regime.default_tau_split(),
            regime,
            law,
            hyper,
            reps,
            replicates,
            alpha: 0.05,
            seed: 0,
            xf_rows,
            targets,
            deltas: Vec::new(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 || self.p1 == 0 || self.reps == 0 {
            return Err(Error::invalid("case dimensions and replication count must be positive"));
        }
        if self.xf_rows == 0 || self.xf_rows > self.p1 {
            return Err(Error::invalid(format!(
                "prediction rows must lie in 1..={}, got {}",
                self.p1, self.xf_rows
            )));
        }
        if self.targets.is_empty() {
            return Err(Error::invalid("at least one target is required"));
        }
        if self.deltas.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::invalid("power shifts must be finite and nonnegative"));
        }
        BootstrapConfig::new(self.replicates, self.alpha, 0)?;
        Ok(())
    }
}

/// Fraction of replications in which a test rejected at shift `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPoint {
    pub delta: f64,
    pub rejection_rate: f64,
}

/// Per-target summary of one case.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSummary {
    pub target: Target,
    /// Mean over replications of `max_i |γ̂_i − γ_i|`.
    pub mean_max_gamma_error: f64,
    pub coverage: f64,
    pub coverage_se: f64,
    pub prediction_coverage: f64,
    pub prediction_coverage_se: f64,
    pub k: KDiagnostics,
    pub power: Vec<PowerPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub case: SimCase,
    pub hyper: Hyperparams,
    pub lambda_r: f64,
    pub rank: usize,
    /// Frequency of `N̂ ≠ N`.
    pub misspecification: f64,
    /// Mean of `|σ̂² − σ²|`.
    pub mean_sigma2_error: f64,
    pub mean_confidence_radius: f64,
    pub mean_prediction_radius: f64,
    pub targets: Vec<TargetSummary>,
}

/// Binomial standard error `sqrt(c(1−c)/R)`.
pub fn binomial_se(rate: f64, reps: usize) -> f64 {
    (rate * (1.0 - rate) / reps as f64).sqrt()
}

/// Fixed per-case data shared by all replications.
pub struct CaseData {
    pub frame: ModelFrame,
    pub beta: DVector<f64>,
    pub theta: DVector<f64>,
    pub mean_response: DVector<f64>,
    pub xf: DMatrix<f64>,
    pub hyper: Hyperparams,
    pub true_support: Vec<usize>,
}

impl CaseData {
    pub fn truth(&self, target: Target) -> &DVector<f64> {
        match target {
            Target::Beta => &self.beta,
            Target::Theta => &self.theta,
        }
    }
}

/// Draws `X`, `M`, `β`, and resolves the hyperparameters of a case.
pub fn prepare_case(case: &SimCase) -> Result<CaseData> {
    case.validate()?;
    let design = gen_design(&mut StreamSpec::new(derive_seed(case.seed, 1), 0).stream(), case.n, case.p)?;
    let m = gen_combination(
        &mut StreamSpec::new(derive_seed(case.seed, 2), 0).stream(),
        case.p,
        case.p1,
        case.m_count,
        case.tau_split,
        case.regime,
    )?;
    let beta = gen_beta(case.regime, case.p)?;
    let mean_response = design.as_matrix() * &beta;
    let xf = m.rows(0, case.xf_rows).into_owned();
    let frame = ModelFrame::new(design, mean_response.clone(), Some(m))?;
    let (_, theta) = row_space_params(frame.svd(), &beta)?;

    let hyper = match case.hyper {
        HyperChoice::Fixed(h) => h,
        HyperChoice::CrossValidated { folds } => {
            let pilot = pilot_frame(case, &frame, &mean_response)?;
            let grid = default_grid(&pilot, folds, derive_seed(case.seed, 5))?;
            cross_validate(&pilot, &grid)?.chosen
        }
    };
    let true_support = threshold_select(&theta, hyper.threshold);
    Ok(CaseData {
        frame,
        beta,
        theta,
        mean_response,
        xf,
        hyper,
        true_support,
    })
}

fn pilot_frame(case: &SimCase, frame: &ModelFrame, mean: &DVector<f64>) -> Result<ModelFrame> {
    let eps = case
        .law
        .draw(&mut StreamSpec::new(derive_seed(case.seed, 3), 0).stream(), case.n)?;
    frame.with_response(mean + DVector::from_vec(eps))
}

struct TargetOutcome {
    max_gamma_error: f64,
    covered: bool,
    prediction_covered: bool,
    rejections: Vec<bool>,
}

struct RepOutcome {
    misspecified: bool,
    sigma2_error: f64,
    confidence_radius: f64,
    prediction_radius: f64,
    targets: Vec<TargetOutcome>,
}

fn run_replication(case: &SimCase, data: &CaseData, rep: usize) -> Result<RepOutcome> {
    let rep_seed = derive_seed(derive_seed(case.seed, 4), rep as u64);
    let eps = case.law.draw(&mut StreamSpec::new(rep_seed, 0).stream(), case.n)?;
    let eps_f = DVector::from_vec(case.law.draw(&mut StreamSpec::new(rep_seed, 1).stream(), case.xf_rows)?);
    let frame = data.frame.with_response(&data.mean_response + DVector::from_vec(eps))?;
    let fit = improved_fit(&frame, data.hyper)?;

    let conf_cfg = BootstrapConfig::new(case.replicates, case.alpha, derive_seed(rep_seed, 2))?;
    let draws = wild_draws(&frame, &fit, &conf_cfg)?;
    let region = region_from_draws(&fit, &draws);

    let pred_cfg = BootstrapConfig::new(case.replicates, case.alpha, derive_seed(rep_seed, 3))?;
    let pred_draws = hybrid_draws(&frame, &fit, &data.xf, &ecdf(&fit)?, &pred_cfg)?;
    let y_f_hat = predict_point(&fit, &data.xf)?;

    let targets = case
        .targets
        .iter()
        .map(|&t| {
            let truth = data.truth(t);
            let gamma = frame.combination() * truth;
            let y_f = &data.xf * truth + &eps_f;
            let rejections = case
                .deltas
                .iter()
                .map(|&d| Ok(test_with_draws(&fit, &gamma.add_scalar(d), &draws)?.reject))
                .collect::<Result<Vec<bool>>>()?;
            Ok(TargetOutcome {
                max_gamma_error: (&fit.gamma_hat - &gamma).amax(),
                covered: region.contains(&gamma)?,
                prediction_covered: (y_f - &y_f_hat).amax() <= pred_draws.quantile,
                rejections,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(RepOutcome {
        misspecified: fit.selected != data.true_support,
        sigma2_error: (fit.sigma2_hat - case.law.variance()).abs(),
        confidence_radius: draws.quantile,
        prediction_radius: pred_draws.quantile,
        targets,
    })
}

/// Runs all replications of a case and aggregates the report.
pub fn run_case(case: &SimCase) -> Result<SimReport> {
    let data = prepare_case(case)?;
    let outcomes = (0..case.reps)
        .into_par_iter()
        .map(|r| run_replication(case, &data, r))
        .collect::<Result<Vec<_>>>()?;
    let reps = case.reps as f64;
    let mean = |f: &dyn Fn(&RepOutcome) -> f64| outcomes.iter().map(f).sum::<f64>() / reps;

    let targets = case
        .targets
        .iter()
        .enumerate()
        .map(|(ti, &target)| {
            let coverage = mean(&|o| f64::from(u8::from(o.targets[ti].covered)));
            let prediction_coverage = mean(&|o| f64::from(u8::from(o.targets[ti].prediction_covered)));
            let power = case
                .deltas
                .iter()
                .enumerate()
                .map(|(di, &delta)| PowerPoint {
                    delta,
                    rejection_rate: mean(&|o| f64::from(u8::from(o.targets[ti].rejections[di]))),
                })
                .collect();
            Ok(TargetSummary {
                target,
                mean_max_gamma_error: mean(&|o| o.targets[ti].max_gamma_error),
                coverage,
                coverage_se: binomial_se(coverage, case.reps),
                prediction_coverage,
                prediction_coverage_se: binomial_se(prediction_coverage, case.reps),
                k: k_diagnostics(&data.frame, data.truth(target), data.hyper, &data.true_support)?,
                power,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SimReport {
        case: case.clone(),
        hyper: data.hyper,
        lambda_r: data.frame.svd().smallest_singular(),
        rank: data.frame.svd().rank(),
        misspecification: mean(&|o| f64::from(u8::from(o.misspecified))),
        mean_sigma2_error: mean(&|o| o.sigma2_error),
        mean_confidence_radius: mean(&|o| o.confidence_radius),
        mean_prediction_radius: mean(&|o| o.prediction_radius),
        targets,
    })
}

/// Rejection rate of the wild bootstrap test of `γ = γ_true + δ·1` for each
/// shift, with `γ = Mθ`.
pub fn power_sweep(case: &SimCase, deltas: &[f64]) -> Result<Vec<PowerPoint>> {
    let mut c = case.clone();
    c.deltas = deltas.to_vec();
    c.targets = vec![Target::Theta];
    let report = run_case(&c)?;
    Ok(report.targets.into_iter().next().map(|t| t.power).unwrap_or_default())
}

/// `‖γ̂ − γ‖₂` of the ridge variants at one ridge parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoCurvePoint {
    pub rho: f64,
    pub ridge: f64,
    pub threshold_ridge: f64,
    pub debiased: f64,
    pub debiased_threshold: f64,
}

/// Estimation error of plain, thresholded, debiased and debiased+thresholded
/// ridge along a grid of ridge parameters, on the pilot sample of the case.
pub fn ridge_variant_curve(case: &SimCase, rho_grid: &[f64]) -> Result<Vec<RhoCurvePoint>> {
    let data = prepare_case(case)?;
    let pilot = pilot_frame(case, &data.frame, &data.mean_response)?;
    let gamma = pilot.combination() * data.truth(case.targets[0]);
    let b = data.hyper.threshold;
    let err = |theta: &DVector<f64>| (pilot.combination() * theta - &gamma).norm();
    rho_grid
        .iter()
        .map(|&rho| {
            let star = ridge_estimate(&pilot, rho)?;
            let tilde = debias(&pilot, &star, rho)?;
            Ok(RhoCurvePoint {
                rho,
                ridge: err(&star),
                threshold_ridge: err(&restrict(&star, &threshold_select(&star, b))),
                debiased: err(&tilde),
                debiased_threshold: err(&restrict(&tilde, &threshold_select(&tilde, b))),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_patterns() {
        let tall = gen_beta(Regime::Tall, 20).unwrap();
        assert_eq!(tall[12], 0.01);
        assert_eq!(tall[16], 0.0);
        assert_eq!(tall[0], 2.0);
        assert_eq!(tall[9], -1.0);
        let wide = gen_beta(Regime::Wide, 10).unwrap();
        assert_eq!(wide[3], -1.0);
        assert_eq!(wide[6], 0.0);
        assert!(gen_beta(Regime::Tall, 15).is_err());
        assert!(gen_beta(Regime::Wide, 5).is_err());
    }

    #[test]
    fn combination_structure_tall() {
        let mut s = StreamSpec::new(1, 0).stream();
        let m = gen_combination(&mut s, 80, 12, 5, 50, Regime::Tall).unwrap();
        for i in 0..12 {
            let lead = m.view((i, 0), (1, 50)).norm();
            let tail = m.view((i, 50), (1, 30)).norm();
            if i < 5 {
                assert!((lead - 2.0).abs() < 1e-12);
                assert!((tail - 4.0).abs() < 1e-12);
            } else {
                assert_eq!(lead, 0.0);
                assert!((tail - 6.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn combination_structure_wide() {
        let mut s = StreamSpec::new(2, 0).stream();
        let m = gen_combination(&mut s, 40, 6, 2, 6, Regime::Wide).unwrap();
        for i in 0..6 {
            let lead = m.view((i, 0), (1, 6)).norm();
            let tail = m.view((i, 6), (1, 34)).norm();
            assert!((lead - if i < 2 { 2.0 } else { 0.0 }).abs() < 1e-12);
            assert!((tail - 1.0).abs() < 1e-12);
        }
        assert!(gen_combination(&mut s, 10, 3, 4, 2, Regime::Wide).is_err());
        assert!(gen_combination(&mut s, 10, 3, 1, 10, Regime::Wide).is_err());
    }

    #[test]
    fn design_is_reproducible() {
        let a = gen_design(&mut StreamSpec::new(5, 0).stream(), 7, 3).unwrap();
        let b = gen_design(&mut StreamSpec::new(5, 0).stream(), 7, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn presets_are_valid() {
        for case in 1..=6 {
            for scale in [Scale::Desk, Scale::Full] {
                SimCase::preset(case, scale).unwrap().validate().unwrap();
            }
        }
        assert!(SimCase::preset(7, Scale::Desk).is_err());
        let full = SimCase::preset(1, Scale::Full).unwrap();
        assert_eq!((full.n, full.p, full.p1, full.m_count), (1000, 500, 800, 300));
    }

    #[test]
    fn noiseless_case_is_exact() {
        let mut case = SimCase::preset(1, Scale::Desk).unwrap();
        case.n = 60;
        case.p = 20;
        case.p1 = 6;
        case.m_count = 3;
        case.tau_split = 16;
        case.xf_rows = 2;
        case.reps = 4;
        case.replicates = 20;
        case.law = ErrorLaw::Normal { sd: 0.0 };
        case.hyper = HyperChoice::Fixed(Hyperparams::new(1e-6, 0.5).unwrap());
        let report = run_case(&case).unwrap();
        assert_eq!(report.misspecification, 0.0);
        assert_eq!(report.targets[0].coverage, 1.0);
        assert_eq!(report.targets[0].prediction_coverage, 1.0);
    }

    #[test]
    fn binomial_se_formula() {
        assert!((binomial_se(0.95, 100) - (0.95f64 * 0.05 / 100.0).sqrt()).abs() < 1e-15);
        assert_eq!(binomial_se(1.0, 10), 0.0);
    }
}
