//! Ridge, debiased and thresholded estimators and their companions.
//!
//! All quantities route through the thin SVD of the design. With gains
//! `g_k = λ_k/(λ_k²+ρ) + ρλ_k/(λ_k²+ρ)²` the debiased estimator collapses to
//! `Q diag(g) Pᵀ y`, and the normalizing scale of combination `i` is
//! `τ_i = sqrt(Σ_k c_ik² g_k² + 1/n)` with loadings `c_ik = Σ_{j∈S} m_ij q_jk`
//! over the selected support `S`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{complement_project, row_space_params, Hyperparams, ModelFrame, ThinSvd};

/// The improved (debiased and thresholded) ridge fit and everything derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct ImprovedFit {
    /// Classical ridge estimate.
    pub theta_star: DVector<f64>,
    /// Debiased ridge estimate.
    pub theta_tilde: DVector<f64>,
    /// Zero-based indices `i` with `|theta_tilde[i]| > b`, ascending.
    pub selected: Vec<usize>,
    /// `theta_tilde` restricted to `selected`, zero elsewhere.
    pub theta_hat: DVector<f64>,
    /// `M theta_hat`.
    pub gamma_hat: DVector<f64>,
    /// Mean squared residual (divisor `n`).
    pub sigma2_hat: f64,
    /// Normalizing scale per combination; at least `1/sqrt(n)`.
    pub tau_hat: DVector<f64>,
    /// Null-space component of `theta_hat`.
    pub theta_perp_hat: DVector<f64>,
    /// `X theta_hat`.
    pub fitted: DVector<f64>,
    /// `y - X theta_hat`.
    pub residuals_raw: DVector<f64>,
    /// Raw residuals minus their mean.
    pub residuals_centered: DVector<f64>,
    pub hyper: Hyperparams,
}

impl ImprovedFit {
    /// Replaces the variance estimate, e.g. to pin it to a known value in
    /// simulation studies.
    pub fn with_sigma2(mut self, sigma2: f64) -> Result<Self> {
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::invalid(format!(
                "error variance must be finite and nonnegative, got {sigma2}"
            )));
        }
        self.sigma2_hat = sigma2;
        Ok(self)
    }

    pub fn sigma_hat(&self) -> f64 {
        self.sigma2_hat.sqrt()
    }
}

fn check_rho(svd: &ThinSvd, rho: f64) -> Result<()> {
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(Error::invalid(format!(
            "ridge parameter must be finite and nonnegative, got {rho}"
        )));
    }
    if rho == 0.0 && !svd.is_full_column_rank() {
        return Err(Error::Singular {
            rank: svd.rank(),
            p: svd.ncols(),
        });
    }
    Ok(())
}

/// `(XᵀX + ρI)⁻¹Xᵀy` computed as `Q (Λ²+ρ)⁻¹ Λ Pᵀ y`.
pub fn ridge_estimate(frame: &ModelFrame, rho: f64) -> Result<DVector<f64>> {
    let svd = frame.svd();
    check_rho(svd, rho)?;
    let coords = svd.left().tr_mul(frame.response()).component_mul(&svd.ridge_gains(rho));
    Ok(svd.right() * coords)
}

/// Adds the first-order shrinkage correction `ρ Q (Λ²+ρ)⁻¹ Qᵀ θ*`.
pub fn debias(frame: &ModelFrame, theta_star: &DVector<f64>, rho: f64) -> Result<DVector<f64>> {
    let svd = frame.svd();
    svd.check_p("theta_star", theta_star.len())?;
    if rho == 0.0 {
        return Ok(theta_star.clone());
    }
    let scale = svd.singular().map(|l| rho / (l * l + rho));
    let coords = svd.right().tr_mul(theta_star).component_mul(&scale);
    Ok(theta_star + svd.right() * coords)
}

/// Debiased estimate for an arbitrary response, `Q diag(g) Pᵀ y`.
pub(crate) fn debiased_from_response(svd: &ThinSvd, y: &DVector<f64>, gains: &DVector<f64>) -> DVector<f64> {
    svd.right() * svd.left().tr_mul(y).component_mul(gains)
}

/// Sup-norm gap between `θ̃ − θ` computed directly and via its bias plus
/// linear-noise expansion, for data `y = Xβ + ε`.
pub fn expansion_check(
    frame: &ModelFrame,
    beta: &DVector<f64>,
    eps: &DVector<f64>,
    rho: f64,
) -> Result<f64> {
    let svd = frame.svd();
    svd.check_p("beta", beta.len())?;
    svd.check_n("eps", eps.len())?;
    let y = frame.x() * beta + eps;
    let local = frame.with_response(y)?;
    let theta_star = ridge_estimate(&local, rho)?;
    let theta_tilde = debias(&local, &theta_star, rho)?;
    let (zeta, theta) = row_space_params(svd, beta)?;

    let bias_coords = svd.singular().zip_map(&zeta, |l, z| {
        let d = l * l + rho;
        -rho * rho * z / (d * d)
    });
    let noise_coords = svd
        .left()
        .tr_mul(eps)
        .component_mul(&svd.debiased_gains(rho));
    let expansion = svd.right() * (bias_coords + noise_coords);
    Ok((theta_tilde - theta - expansion).amax())
}

/// Zero-based indices with `|v_i| > b` (strict).
pub fn threshold_select(values: &DVector<f64>, b: f64) -> Vec<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > b)
        .map(|(i, _)| i)
        .collect()
}

/// Loadings `c_ik = Σ_{j∈support} m_ij q_jk`, a `p1 × r` matrix.
pub fn combination_loadings(frame: &ModelFrame, support: &[usize]) -> Result<DMatrix<f64>> {
    let p = frame.p();
    if let Some(&bad) = support.iter().find(|&&j| j >= p) {
        return Err(Error::invalid(format!("support index {bad} out of range for p = {p}")));
    }
    let r = frame.svd().rank();
    if support.is_empty() {
        return Ok(DMatrix::zeros(frame.p1(), r));
    }
    let m_sub = frame.combination().select_columns(support);
    let q_sub = frame.svd().right().select_rows(support);
    Ok(m_sub * q_sub)
}

/// Normalizing scales `τ_i` for the given support and ridge parameter.
pub fn normalizing_scales(frame: &ModelFrame, support: &[usize], rho: f64) -> Result<DVector<f64>> {
    let gains = frame.svd().debiased_gains(rho);
    let loadings = combination_loadings(frame, support)?;
    Ok(scales_from_loadings(&loadings, &gains, frame.n()))
}

pub(crate) fn scales_from_loadings(loadings: &DMatrix<f64>, gains: &DVector<f64>, n: usize) -> DVector<f64> {
    let floor = 1.0 / n as f64;
    DVector::from_iterator(
        loadings.nrows(),
        loadings.row_iter().map(|row| {
            let s: f64 = row.iter().zip(gains.iter()).map(|(c, g)| (c * g).powi(2)).sum();
            (s + floor).sqrt()
        }),
    )
}

/// Keeps `values` on `support`, zero elsewhere.
pub(crate) fn restrict(values: &DVector<f64>, support: &[usize]) -> DVector<f64> {
    let mut out = DVector::zeros(values.len());
    for &j in support {
        out[j] = values[j];
    }
    out
}

/// Runs ridge → debias → threshold and derives `γ̂`, `σ̂²`, `τ̂` and residuals.
pub fn improved_fit(frame: &ModelFrame, hyper: Hyperparams) -> Result<ImprovedFit> {
    let Hyperparams { rho, threshold } = hyper;
    let theta_star = ridge_estimate(frame, rho)?;
    let theta_tilde = debias(frame, &theta_star, rho)?;
    let selected = threshold_select(&theta_tilde, threshold);
    let theta_hat = restrict(&theta_tilde, &selected);
    let gamma_hat = frame.combination() * &theta_hat;
    let fitted = frame.x() * &theta_hat;
    let residuals_raw = frame.response() - &fitted;
    let n = frame.n() as f64;
    let sigma2_hat = residuals_raw.norm_squared() / n;
    let mean = residuals_raw.sum() / n;
    let residuals_centered = residuals_raw.add_scalar(-mean);
    let tau_hat = normalizing_scales(frame, &selected, rho)?;
    let theta_perp_hat = complement_project(frame.svd(), &theta_hat)?;
    Ok(ImprovedFit {
        theta_star,
        theta_tilde,
        selected,
        theta_hat,
        gamma_hat,
        sigma2_hat,
        tau_hat,
        theta_perp_hat,
        fitted,
        residuals_raw,
        residuals_centered,
        hyper,
    })
}

/// Finite-sample sizes of the bias terms that vanish asymptotically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KDiagnostics {
    /// `k_n · max_i |Σ_{j∉N} m_ij θ_j|`: thresholding bias.
    pub k1: f64,
    /// `k_n · max_i |Σ_j m_ij θ⊥_j|`: null-space bias.
    pub k2: f64,
    /// `b_n · Σ_{j∉N} |θ_j|`.
    pub k3: f64,
    /// `sqrt(|N|) / λ_r`.
    pub k4: f64,
}

/// Diagnostics for a known coefficient vector; `k_n = sqrt(n log n)`.
pub fn k_diagnostics(
    frame: &ModelFrame,
    beta_true: &DVector<f64>,
    hyper: Hyperparams,
    true_support: &[usize],
) -> Result<KDiagnostics> {
    let svd = frame.svd();
    let (_, theta) = row_space_params(svd, beta_true)?;
    let theta_perp = complement_project(svd, beta_true)?;
    let n = frame.n() as f64;
    let kn = (n * n.ln()).sqrt();
    let mut in_support = vec![false; frame.p()];
    for &j in true_support {
        if j >= frame.p() {
            return Err(Error::invalid(format!("support index {j} out of range")));
        }
        in_support[j] = true;
    }
    let off: DVector<f64> =
        DVector::from_iterator(theta.len(), theta.iter().enumerate().map(|(j, &t)| if in_support[j] { 0.0 } else { t }));
    let m = frame.combination();
    let k1 = kn * (m * &off).amax();
    let k2 = kn * (m * &theta_perp).amax();
    let k3 = hyper.threshold * off.iter().map(|t| t.abs()).sum::<f64>();
    let k4 = (true_support.len() as f64).sqrt() / svd.smallest_singular();
    Ok(KDiagnostics { k1, k2, k3, k4 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DesignMatrix;

    fn frame(n: usize, p: usize, x: &[f64], y: &[f64]) -> ModelFrame {
        ModelFrame::new(
            DesignMatrix::from_row_slice(n, p, x).unwrap(),
            DVector::from_row_slice(y),
            None,
        )
        .unwrap()
    }

    fn close(a: &DVector<f64>, b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn ridge_identity_design() {
        let f = frame(2, 2, &[1.0, 0.0, 0.0, 1.0], &[1.0, 2.0]);
        assert!(close(&ridge_estimate(&f, 1.0).unwrap(), &[0.5, 1.0], 1e-10));
        assert!(close(&ridge_estimate(&f, 0.0).unwrap(), &[1.0, 2.0], 1e-10));
    }

    #[test]
    fn ridge_scalar_design() {
        let f = frame(2, 1, &[2.0, 0.0], &[2.0, 0.0]);
        let ts = ridge_estimate(&f, 4.0).unwrap();
        assert!(close(&ts, &[0.5], 1e-10));
        assert!(close(&debias(&f, &ts, 4.0).unwrap(), &[0.75], 1e-10));
    }

    #[test]
    fn ridge_zero_rho_rank_deficient_is_singular() {
        let f = frame(1, 2, &[1.0, 0.0], &[1.0]);
        assert_eq!(
            ridge_estimate(&f, 0.0).unwrap_err(),
            Error::Singular { rank: 1, p: 2 }
        );
        assert!(ridge_estimate(&f, -1.0).is_err());
    }

    #[test]
    fn debias_identity_design() {
        let f = frame(2, 2, &[1.0, 0.0, 0.0, 1.0], &[1.0, 2.0]);
        let ts = ridge_estimate(&f, 1.0).unwrap();
        assert!(close(&debias(&f, &ts, 1.0).unwrap(), &[0.75, 1.5], 1e-10));
        assert_eq!(debias(&f, &ts, 0.0).unwrap(), ts);
    }

    #[test]
    fn threshold_is_strict() {
        let v = DVector::from_vec(vec![0.75, 1.5]);
        assert_eq!(threshold_select(&v, 1.0), vec![1]);
        assert!(threshold_select(&DVector::from_vec(vec![1.0]), 1.0).is_empty());
        let w = DVector::from_vec(vec![0.1, -0.2, 3.0]);
        assert_eq!(threshold_select(&w, 0.0), vec![0, 1, 2]);
    }

    #[test]
    fn improved_fit_hand_example() {
        let f = frame(2, 2, &[1.0, 0.0, 0.0, 1.0], &[1.0, 2.0]);
        let fit = improved_fit(&f, Hyperparams::new(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(fit.selected, vec![1]);
        assert!(close(&fit.theta_hat, &[0.0, 1.5], 1e-10));
        assert!(close(&fit.gamma_hat, &[0.0, 1.5], 1e-10));
        assert!((fit.sigma2_hat - 0.625).abs() < 1e-10);
        assert!(fit.residuals_centered.sum().abs() < 1e-12);
        // τ̂ for the selected coordinate: g = 1/2 + 1/4 = 3/4.
        let expected = (0.75f64.powi(2) + 0.5).sqrt();
        assert!(close(&fit.tau_hat, &[0.5f64.sqrt(), expected], 1e-12));
    }

    #[test]
    fn empty_selection_scales_are_floor() {
        let f = frame(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0], &[0.1, -0.1, 0.0]);
        let fit = improved_fit(&f, Hyperparams::new(1.0, 10.0).unwrap()).unwrap();
        assert!(fit.selected.is_empty());
        for t in fit.tau_hat.iter() {
            assert!((t - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        }
        assert_eq!(fit.gamma_hat, DVector::zeros(2));
    }

    #[test]
    fn exact_fit_has_zero_variance() {
        let x = [1.0, 2.0, 0.0, 1.0, 3.0, -1.0, 0.5, 0.5];
        let base = frame(4, 2, &x, &[0.0; 4]);
        let beta = DVector::from_vec(vec![1.5, -0.5]);
        let y = base.x() * &beta;
        let f = base.with_response(y).unwrap();
        let fit = improved_fit(&f, Hyperparams::new(0.0, 0.0).unwrap()).unwrap();
        assert!(fit.sigma2_hat < 1e-24);
    }

    #[test]
    fn expansion_identity_full_rank_noiseless() {
        let x: Vec<f64> = (0..40).map(|i| ((i * 7 % 11) as f64 - 5.0) / 3.0).collect();
        let f = frame(10, 4, &x, &[0.0; 10]);
        let beta = DVector::from_vec(vec![1.0, -2.0, 0.5, 0.0]);
        assert!(expansion_check(&f, &beta, &DVector::zeros(10), 0.0).unwrap() < 1e-12);
        let eps = DVector::from_fn(10, |i, _| (i as f64).sin());
        assert!(expansion_check(&f, &beta, &eps, 2.5).unwrap() < 1e-9);
    }

    #[test]
    fn k_diagnostics_degenerate_cases() {
        let f = frame(2, 2, &[2.0, 0.0, 0.0, 2.0], &[0.0, 0.0]);
        let beta = DVector::from_vec(vec![1.0, 0.0]);
        let h = Hyperparams::new(1.0, 0.5).unwrap();
        let k = k_diagnostics(&f, &beta, h, &[0]).unwrap();
        assert_eq!(k.k1, 0.0);
        assert_eq!(k.k2, 0.0);
        assert_eq!(k.k3, 0.0);
        assert!((k.k4 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn k4_four_selected_lambda_two() {
        let x: Vec<f64> = (0..16).map(|i| if i % 5 == 0 { 2.0 } else { 0.0 }).collect();
        let f = frame(4, 4, &x, &[0.0; 4]);
        let beta = DVector::from_vec(vec![1.0; 4]);
        let k = k_diagnostics(&f, &beta, Hyperparams::new(1.0, 0.5).unwrap(), &[0, 1, 2, 3]).unwrap();
        assert!((k.k4 - 1.0).abs() < 1e-14);
    }
}
