//! Classical and cluster-robust coefficient covariance.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::ols::OlsFit;
use super::{EstimationError, Result};

/// Residual degrees of freedom after `absorbed` fixed effects.
pub fn residual_dof(fit: &OlsFit, absorbed: usize) -> Result<usize> {
    let used = fit.n_params() + absorbed;
    if fit.n_obs() <= used {
        return Err(EstimationError::ZeroDof {
            n_obs: fit.n_obs(),
            n_params: used,
        });
    }
    Ok(fit.n_obs() - used)
}

/// `s^2 (X'X)^-1` with `s^2 = SSR / (n - k - absorbed)`.
pub fn classical_cov(fit: &OlsFit, absorbed: usize) -> Result<DMatrix<f64>> {
    let dof = residual_dof(fit, absorbed)?;
    Ok(&fit.xtx_inv * (fit.ssr / dof as f64))
}

/// Small-sample factor `G/(G-1) * (N-1)/(N-K)` applied to the sandwich.
pub fn cluster_scale(n_obs: usize, n_params: usize, n_clusters: usize) -> f64 {
    let (n, k, g) = (n_obs as f64, n_params as f64, n_clusters as f64);
    g / (g - 1.0) * (n - 1.0) / (n - k)
}

/// Sandwich `(X'X)^-1 (sum_g X_g' u_g u_g' X_g) (X'X)^-1` with clusters given
/// per row, scaled by [`cluster_scale`] with `K` = columns of `x`.
pub fn cluster_robust_cov(fit: &OlsFit, x: &DMatrix<f64>, clusters: &[usize]) -> Result<DMatrix<f64>> {
    let (n, k) = x.shape();
    if clusters.len() != n || fit.residuals.len() != n {
        return Err(EstimationError::DimensionMismatch(format!(
            "{} cluster labels / {} residuals for {n} rows",
            clusters.len(),
            fit.residuals.len()
        )));
    }
    // per-cluster score X_g' u_g
    let mut scores: BTreeMap<usize, DVector<f64>> = BTreeMap::new();
    for (i, &g) in clusters.iter().enumerate() {
        let s = scores.entry(g).or_insert_with(|| DVector::zeros(k));
        s.axpy(fit.residuals[i], &x.row(i).transpose(), 1.0);
    }
    let g = scores.len();
    if g < 2 {
        return Err(EstimationError::SingleCluster);
    }
    if n <= k {
        return Err(EstimationError::ZeroDof { n_obs: n, n_params: k });
    }
    let mut meat = DMatrix::zeros(k, k);
    for s in scores.values() {
        meat.ger(1.0, s, s, 1.0);
    }
    let bread = &fit.xtx_inv;
    let v = bread * meat * bread;
    // symmetrize away rounding asymmetry
    let v = (&v + v.transpose()) * (0.5 * cluster_scale(n, k, g));
    Ok(v)
}

/// White's heteroskedasticity-robust covariance without small-sample
/// correction.
pub fn hc0_cov(fit: &OlsFit, x: &DMatrix<f64>) -> DMatrix<f64> {
    let k = x.ncols();
    let mut meat = DMatrix::zeros(k, k);
    for (i, row) in x.row_iter().enumerate() {
        let r = row.transpose();
        meat.ger(fit.residuals[i] * fit.residuals[i], &r, &r, 1.0);
    }
    &fit.xtx_inv * meat * &fit.xtx_inv
}

#[cfg(test)]
mod tests {
    use super::super::ols::ols_fit;
    use super::*;
    use approx::assert_relative_eq;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn zero_residuals_give_zero_covariance() {
        let x = DMatrix::from_row_slice(4, 2, &[1., 0., 1., 1., 1., 2., 1., 3.]);
        let y = &x * DVector::from_column_slice(&[1.0, 2.0]);
        let fit = ols_fit(&x, &y, &names(2)).unwrap();
        assert!(classical_cov(&fit, 0).unwrap().amax() < 1e-25);
        assert!(cluster_robust_cov(&fit, &x, &[0, 0, 1, 1]).unwrap().amax() < 1e-25);
    }

    #[test]
    fn scalar_variance_oracle() {
        // single demeaned regressor: var(b) = s^2 / sum(x^2)
        let xs = [-1.5, -0.5, 0.5, 1.5];
        let ys = [-2.0, -1.5, 1.0, 2.5];
        let sxx: f64 = xs.iter().map(|v| v * v).sum();
        let b: f64 = xs.iter().zip(&ys).map(|(a, c)| a * c).sum::<f64>() / sxx;
        let ssr: f64 = xs.iter().zip(&ys).map(|(a, c)| (c - b * a).powi(2)).sum();
        let var = ssr / 3.0 / sxx;

        let x = DMatrix::from_column_slice(4, 1, &xs);
        let y = DVector::from_column_slice(&ys);
        let fit = ols_fit(&x, &y, &names(1)).unwrap();
        assert_relative_eq!(classical_cov(&fit, 0).unwrap()[(0, 0)], var, max_relative = 1e-12);
    }

    #[test]
    fn doubling_y_doubles_se() {
        let x = DMatrix::from_row_slice(5, 2, &[1., 0.3, 1., 1.1, 1., 2.4, 1., 2.9, 1., 4.2]);
        let y = DVector::from_column_slice(&[0.2, 1.4, 2.1, 3.5, 3.9]);
        let f1 = ols_fit(&x, &y, &names(2)).unwrap();
        let f2 = ols_fit(&x, &(&y * 2.0), &names(2)).unwrap();
        let v1 = classical_cov(&f1, 0).unwrap();
        let v2 = classical_cov(&f2, 0).unwrap();
        for j in 0..2 {
            assert_relative_eq!(f2.coefficients[j], 2.0 * f1.coefficients[j], max_relative = 1e-12);
            assert_relative_eq!(v2[(j, j)].sqrt(), 2.0 * v1[(j, j)].sqrt(), max_relative = 1e-12);
        }
    }

    #[test]
    fn zero_dof() {
        let x = DMatrix::from_row_slice(2, 2, &[1., 0., 1., 1.]);
        let y = DVector::from_column_slice(&[1., 2.]);
        let fit = ols_fit(&x, &y, &names(2)).unwrap();
        assert!(matches!(classical_cov(&fit, 0), Err(EstimationError::ZeroDof { .. })));
    }

    #[test]
    fn single_cluster_rejected() {
        let x = DMatrix::from_row_slice(3, 1, &[1., 2., 3.]);
        let y = DVector::from_column_slice(&[1., 2.5, 2.9]);
        let fit = ols_fit(&x, &y, &names(1)).unwrap();
        assert!(matches!(
            cluster_robust_cov(&fit, &x, &[4, 4, 4]),
            Err(EstimationError::SingleCluster)
        ));
    }

    #[test]
    fn singleton_clusters_reduce_to_hc0_times_scale() {
        let x = DMatrix::from_row_slice(6, 2, &[1., 0.1, 1., 0.9, 1., 2.2, 1., 2.8, 1., 4.1, 1., 5.3]);
        let y = DVector::from_column_slice(&[0.0, 1.3, 1.9, 3.4, 3.8, 5.9]);
        let fit = ols_fit(&x, &y, &names(2)).unwrap();
        let cr = cluster_robust_cov(&fit, &x, &[0, 1, 2, 3, 4, 5]).unwrap();
        let hc0 = hc0_cov(&fit, &x);
        let scale = 6.0 / 5.0 * 5.0 / 4.0;
        assert!((cr - hc0 * scale).amax() < 1e-14);
    }
}
