//! Fixed-design linear model data and its cached thin SVD.
//!
//! Every estimator in the crate works in the coordinates of the thin
//! decomposition `X = P Λ Qᵀ`: the row space of `X` is spanned by the columns
//! of `Q`, and the part of a coefficient vector orthogonal to it is not
//! identifiable from the data. A [`ModelFrame`] computes the decomposition
//! once and shares it (via `Arc`) with every frame derived from it, so
//! swapping the response for a new draw costs nothing.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};

/// Relative cutoff applied to `λ_k / λ_1` when counting the numerical rank.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-10;

/// An `n × p` design matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix(DMatrix<f64>);

impl DesignMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        check_finite("design matrix", &entries)?;
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::Empty(format!(
                "design matrix is {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(DesignMatrix(entries))
    }

    /// Builds a design from row-major data.
    pub fn from_row_slice(n: usize, p: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * p {
            return Err(Error::dimension("design entries", n * p, data.len()));
        }
        Self::new(DMatrix::from_row_slice(n, p, data))
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

pub(crate) fn check_finite(what: &str, m: &DMatrix<f64>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(Error::NonFinite {
                    what: what.to_string(),
                    row: i + 1,
                    col: j + 1,
                });
            }
        }
    }
    Ok(())
}

/// Thin singular value decomposition `X = P Λ Qᵀ` truncated to the numerical rank.
#[derive(Debug, Clone, PartialEq)]
pub struct ThinSvd {
    left: DMatrix<f64>,
    singular: DVector<f64>,
    right: DMatrix<f64>,
    rank_tolerance: f64,
}

impl ThinSvd {
    /// `P`, an `n × r` matrix with orthonormal columns.
    pub fn left(&self) -> &DMatrix<f64> {
        &self.left
    }

    /// `λ_1 ≥ … ≥ λ_r > 0`.
    pub fn singular(&self) -> &DVector<f64> {
        &self.singular
    }

    /// `Q`, a `p × r` matrix with orthonormal columns.
    pub fn right(&self) -> &DMatrix<f64> {
        &self.right
    }

    pub fn rank(&self) -> usize {
        self.singular.len()
    }

    pub fn rank_tolerance(&self) -> f64 {
        self.rank_tolerance
    }

    /// Number of samples `n`.
    pub fn nrows(&self) -> usize {
        self.left.nrows()
    }

    /// Number of parameters `p`.
    pub fn ncols(&self) -> usize {
        self.right.nrows()
    }

    pub fn largest_singular(&self) -> f64 {
        self.singular[0]
    }

    /// `λ_r`, the smallest retained singular value.
    pub fn smallest_singular(&self) -> f64 {
        self.singular[self.rank() - 1]
    }

    /// True when `r = p`, i.e. the null space of `X` is trivial.
    pub fn is_full_column_rank(&self) -> bool {
        self.rank() == self.ncols()
    }

    /// `Q Qᵀ v`.
    pub fn row_space_project(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_p("vector", v.len())?;
        Ok(&self.right * (self.right.tr_mul(v)))
    }

    /// Per-direction ridge gain `λ_k / (λ_k² + ρ)`.
    pub fn ridge_gains(&self, rho: f64) -> DVector<f64> {
        self.singular.map(|l| l / (l * l + rho))
    }

    /// Per-direction gain of the debiased estimator,
    /// `λ_k/(λ_k²+ρ) + ρλ_k/(λ_k²+ρ)²`.
    ///
    /// The debiased estimate is `Q diag(gain) Pᵀ y`, and the same gains weight
    /// the loadings in the normalizing scales `τ_i`.
    pub fn debiased_gains(&self, rho: f64) -> DVector<f64> {
        self.singular.map(|l| {
            let d = l * l + rho;
            l / d + rho * l / (d * d)
        })
    }

    pub(crate) fn check_p(&self, what: &str, len: usize) -> Result<()> {
        if len != self.ncols() {
            return Err(Error::dimension(what, self.ncols(), len));
        }
        Ok(())
    }

    pub(crate) fn check_n(&self, what: &str, len: usize) -> Result<()> {
        if len != self.nrows() {
            return Err(Error::dimension(what, self.nrows(), len));
        }
        Ok(())
    }
}

/// Computes the thin SVD of `design`, keeping singular values above
/// `rank_tolerance · λ_1`.
pub fn thin_svd(design: &DesignMatrix, rank_tolerance: f64) -> Result<ThinSvd> {
    if !(rank_tolerance > 0.0 && rank_tolerance < 1.0) {
        return Err(Error::invalid(format!(
            "rank tolerance must lie in (0, 1), got {rank_tolerance}"
        )));
    }
    let x = design.as_matrix();
    let (n, p) = (x.nrows(), x.ncols());
    let max_iter = 200 * n.max(p).max(10);
    let svd = SVD::try_new(x.clone(), true, true, f64::EPSILON, max_iter)
        .ok_or(Error::Decomposition)?;
    let u = svd.u.ok_or(Error::Decomposition)?;
    let v_t = svd.v_t.ok_or(Error::Decomposition)?;
    let values = svd.singular_values;

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let top = values[order[0]];
    if top.is_nan() || top <= 0.0 {
        return Err(Error::RankZero);
    }
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&k| values[k] > rank_tolerance * top)
        .collect();
    let r = kept.len();

    let mut left = DMatrix::zeros(n, r);
    let mut right = DMatrix::zeros(p, r);
    let mut singular = DVector::zeros(r);
    for (dst, &src) in kept.iter().enumerate() {
        singular[dst] = values[src];
        left.set_column(dst, &u.column(src));
        for j in 0..p {
            right[(j, dst)] = v_t[(src, j)];
        }
    }
    Ok(ThinSvd {
        left,
        singular,
        right,
        rank_tolerance,
    })
}

/// `θ⊥ = (I − Q Qᵀ) v`; exactly zero when `X` has full column rank.
pub fn complement_project(svd: &ThinSvd, v: &DVector<f64>) -> Result<DVector<f64>> {
    svd.check_p("vector", v.len())?;
    if svd.is_full_column_rank() {
        return Ok(DVector::zeros(v.len()));
    }
    Ok(v - svd.row_space_project(v)?)
}

/// Returns `(ζ, θ) = (Qᵀβ, Q Qᵀβ)`, the identifiable part of `β`.
pub fn row_space_params(
    svd: &ThinSvd,
    beta: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    svd.check_p("beta", beta.len())?;
    let zeta = svd.right().tr_mul(beta);
    let theta = svd.right() * &zeta;
    Ok((zeta, theta))
}

/// Worst-case bias and standard deviation of the plain ridge estimate of `aᵀβ`:
/// `ρ‖a‖‖β‖/(λ_r² + ρ)` and `σ‖a‖/λ_r`.
pub fn ridge_bias_sd_bound(
    svd: &ThinSvd,
    rho: f64,
    a: &DVector<f64>,
    beta_norm: f64,
    err_var: f64,
) -> Result<(f64, f64)> {
    svd.check_p("a", a.len())?;
    if [rho, err_var, beta_norm].iter().any(|v| v.is_nan() || *v < 0.0) {
        return Err(Error::invalid(
            "rho, beta_norm and err_var must be nonnegative",
        ));
    }
    let lr = svd.smallest_singular();
    let a_norm = a.norm();
    let bias = rho * a_norm * beta_norm / (lr * lr + rho);
    let sd = err_var.sqrt() * a_norm / lr;
    Ok((bias, sd))
}

/// Ridge parameter `ρ_n` and hard threshold `b_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub rho: f64,
    pub threshold: f64,
}

impl Hyperparams {
    pub fn new(rho: f64, threshold: f64) -> Result<Self> {
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::invalid(format!(
                "ridge parameter must be finite and nonnegative, got {rho}"
            )));
        }
        if !(threshold.is_finite() && threshold >= 0.0) {
            return Err(Error::invalid(format!(
                "threshold must be finite and nonnegative, got {threshold}"
            )));
        }
        Ok(Hyperparams { rho, threshold })
    }
}

/// Design, response, combination matrix `M` and the cached SVD of the design.
#[derive(Debug, Clone)]
pub struct ModelFrame {
    design: Arc<DesignMatrix>,
    response: DVector<f64>,
    combination: Arc<DMatrix<f64>>,
    svd: Arc<ThinSvd>,
}

impl ModelFrame {
    /// Builds a frame with the default rank tolerance. `combination` defaults
    /// to `I_p`.
    pub fn new(
        design: DesignMatrix,
        response: DVector<f64>,
        combination: Option<DMatrix<f64>>,
    ) -> Result<Self> {
        Self::with_rank_tolerance(design, response, combination, DEFAULT_RANK_TOLERANCE)
    }

    pub fn with_rank_tolerance(
        design: DesignMatrix,
        response: DVector<f64>,
        combination: Option<DMatrix<f64>>,
        rank_tolerance: f64,
    ) -> Result<Self> {
        let (n, p) = (design.nrows(), design.ncols());
        if response.len() != n {
            return Err(Error::dimension("response length", n, response.len()));
        }
        check_finite("response", &DMatrix::from_column_slice(n, 1, response.as_slice()))?;
        let combination = match combination {
            Some(m) => {
                check_combination(&m, p)?;
                m
            }
            None => DMatrix::identity(p, p),
        };
        let svd = thin_svd(&design, rank_tolerance)?;
        Ok(ModelFrame {
            design: Arc::new(design),
            response,
            combination: Arc::new(combination),
            svd: Arc::new(svd),
        })
    }

    /// Same design, combination and decomposition with a new response.
    pub fn with_response(&self, response: DVector<f64>) -> Result<Self> {
        self.svd.check_n("response length", response.len())?;
        Ok(ModelFrame {
            design: Arc::clone(&self.design),
            response,
            combination: Arc::clone(&self.combination),
            svd: Arc::clone(&self.svd),
        })
    }

    /// Same design, response and decomposition with a new combination matrix.
    pub fn with_combination(&self, combination: DMatrix<f64>) -> Result<Self> {
        check_combination(&combination, self.p())?;
        Ok(ModelFrame {
            design: Arc::clone(&self.design),
            response: self.response.clone(),
            combination: Arc::new(combination),
            svd: Arc::clone(&self.svd),
        })
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    pub fn x(&self) -> &DMatrix<f64> {
        self.design.as_matrix()
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.response
    }

    pub fn combination(&self) -> &DMatrix<f64> {
        &self.combination
    }

    pub fn svd(&self) -> &ThinSvd {
        &self.svd
    }

    pub fn n(&self) -> usize {
        self.design.nrows()
    }

    pub fn p(&self) -> usize {
        self.design.ncols()
    }

    /// Number of linear combinations (rows of `M`).
    pub fn p1(&self) -> usize {
        self.combination.nrows()
    }
}

fn check_combination(m: &DMatrix<f64>, p: usize) -> Result<()> {
    if m.ncols() != p {
        return Err(Error::dimension("combination matrix columns", p, m.ncols()));
    }
    if m.nrows() == 0 {
        return Err(Error::Empty("combination matrix has no rows".into()));
    }
    check_finite("combination matrix", m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    fn design(n: usize, p: usize, data: &[f64]) -> DesignMatrix {
        DesignMatrix::from_row_slice(n, p, data).unwrap()
    }

    #[test]
    fn identity_decomposition() {
        let svd = thin_svd(&design(2, 2, &[1.0, 0.0, 0.0, 1.0]), 1e-12).unwrap();
        assert_eq!(svd.rank(), 2);
        assert_eq!(svd.singular().as_slice(), &[1.0, 1.0]);
        // Orthonormal factors of the identity are signed permutations; their
        // product must be the identity.
        let recon = svd.left() * DMatrix::from_diagonal(svd.singular()) * svd.right().transpose();
        assert!(max_abs(&(recon - DMatrix::identity(2, 2))) < 1e-14);
        assert!(max_abs(&(svd.right().abs() - DMatrix::identity(2, 2))) < 1e-14);
    }

    #[test]
    fn single_column() {
        let svd = thin_svd(&design(2, 1, &[2.0, 0.0]), 1e-10).unwrap();
        assert_eq!(svd.rank(), 1);
        assert!((svd.largest_singular() - 2.0).abs() < 1e-14);
        assert!((svd.right()[(0, 0)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rank_deficient_symmetric() {
        let svd = thin_svd(&design(2, 2, &[1.0, 1.0, 1.0, 1.0]), 1e-10).unwrap();
        assert_eq!(svd.rank(), 1);
        assert!((svd.largest_singular() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_is_rank_zero() {
        let err = thin_svd(&design(2, 2, &[0.0; 4]), 1e-10).unwrap_err();
        assert_eq!(err, Error::RankZero);
    }

    #[test]
    fn tolerance_outside_unit_interval_rejected() {
        let d = design(1, 1, &[1.0]);
        assert!(thin_svd(&d, 0.0).is_err());
        assert!(thin_svd(&d, 1.0).is_err());
    }

    #[test]
    fn non_finite_design_rejected() {
        let err = DesignMatrix::from_row_slice(1, 2, &[1.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 1, col: 2, .. }));
    }

    #[test]
    fn complement_of_full_rank_is_zero() {
        let svd = thin_svd(&design(2, 2, &[1.0, 0.0, 0.0, 1.0]), 1e-12).unwrap();
        let v = DVector::from_vec(vec![3.0, 4.0]);
        assert_eq!(complement_project(&svd, &v).unwrap(), DVector::zeros(2));
    }

    #[test]
    fn complement_axis_projector() {
        let svd = thin_svd(&design(1, 2, &[1.0, 0.0]), 1e-10).unwrap();
        let v = DVector::from_vec(vec![3.0, 4.0]);
        let c = complement_project(&svd, &v).unwrap();
        assert!((c[0]).abs() < 1e-14);
        assert!((c[1] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn row_space_params_axis_case() {
        let svd = thin_svd(&design(1, 2, &[1.0, 0.0]), 1e-10).unwrap();
        let beta = DVector::from_vec(vec![3.0, 4.0]);
        let (zeta, theta) = row_space_params(&svd, &beta).unwrap();
        assert_eq!(zeta.len(), 1);
        assert!((zeta[0].abs() - 3.0).abs() < 1e-14);
        assert!((theta[0] - 3.0).abs() < 1e-14 && theta[1].abs() < 1e-14);
    }

    #[test]
    fn row_space_params_full_rank_is_identity() {
        let svd = thin_svd(&design(3, 2, &[1.0, 2.0, 0.5, -1.0, 3.0, 1.0]), 1e-10).unwrap();
        let beta = DVector::from_vec(vec![0.7, -1.3]);
        let (_, theta) = row_space_params(&svd, &beta).unwrap();
        assert!((theta - beta).amax() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_reported() {
        let svd = thin_svd(&design(1, 2, &[1.0, 0.0]), 1e-10).unwrap();
        let err = complement_project(&svd, &DVector::zeros(3)).unwrap_err();
        assert_eq!(err, Error::dimension("vector", 2, 3));
    }

    #[test]
    fn bias_sd_bound_formula() {
        // X = [[2],[0]] has λ_r = 2.
        let svd = thin_svd(&design(2, 1, &[2.0, 0.0]), 1e-10).unwrap();
        let a = DVector::from_vec(vec![1.0]);
        let (bias, sd) = ridge_bias_sd_bound(&svd, 4.0, &a, 1.0, 4.0).unwrap();
        assert!((bias - 0.5).abs() < 1e-15);
        assert!((sd - 1.0).abs() < 1e-15);
        let (bias0, _) = ridge_bias_sd_bound(&svd, 0.0, &a, 1.0, 4.0).unwrap();
        assert_eq!(bias0, 0.0);
    }

    #[test]
    fn frame_rejects_short_response() {
        let err = ModelFrame::new(
            design(2, 1, &[1.0, 2.0]),
            DVector::from_vec(vec![1.0, 2.0, 3.0]),
            None,
        )
        .unwrap_err();
        assert_eq!(err, Error::dimension("response length", 2, 3));
    }

    #[test]
    fn frame_rejects_wrong_combination_width() {
        let err = ModelFrame::new(
            design(2, 2, &[1.0, 0.0, 0.0, 1.0]),
            DVector::from_vec(vec![1.0, 2.0]),
            Some(DMatrix::zeros(1, 3)),
        )
        .unwrap_err();
        assert_eq!(err, Error::dimension("combination matrix columns", 2, 3));
    }

    #[test]
    fn hyperparams_validation() {
        assert!(Hyperparams::new(-1.0, 0.0).is_err());
        assert!(Hyperparams::new(1.0, f64::INFINITY).is_err());
        assert!(Hyperparams::new(0.0, 0.0).is_ok());
    }
}
