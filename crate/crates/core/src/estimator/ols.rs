use nalgebra::{DMatrix, DVector};

use super::{EstimationError, Result};

/// Relative size below which a column's component orthogonal to the
/// preceding columns counts as zero.
const RANK_TOL: f64 = 1e-10;

/// Least-squares solution of `y ~ X b`.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coefficients: DVector<f64>,
    pub residuals: DVector<f64>,
    pub ssr: f64,
    /// `(X'X)^-1`, assembled from the triangular factor.
    pub xtx_inv: DMatrix<f64>,
}

impl OlsFit {
    pub fn n_obs(&self) -> usize {
        self.residuals.len()
    }

    pub fn n_params(&self) -> usize {
        self.coefficients.len()
    }
}

/// Solves least squares by Householder QR. Fails with `RankDeficient` naming
/// the first column that is (numerically) a combination of earlier ones.
pub fn ols_fit(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<OlsFit> {
    let norms: Vec<f64> = x.column_iter().map(|c| c.norm()).collect();
    ols_fit_with_reference(x, y, names, &norms)
}

/// As [`ols_fit`], but judges rank against `reference_norms`, e.g. the norms
/// of the columns before a within transform shrank them.
pub(crate) fn ols_fit_with_reference(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    names: &[String],
    reference_norms: &[f64],
) -> Result<OlsFit> {
    let (n, k) = x.shape();
    let name = |j: usize| names.get(j).cloned().unwrap_or_else(|| format!("column {j}"));
    if y.len() != n {
        return Err(EstimationError::DimensionMismatch(format!(
            "{} responses for {n} rows",
            y.len()
        )));
    }
    if k == 0 {
        return Err(EstimationError::InvalidSpec("no columns to estimate".into()));
    }
    if n < k {
        return Err(EstimationError::RankDeficient(name(n)));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    for j in 0..k {
        let scale = reference_norms.get(j).copied().unwrap_or(0.0).max(x.column(j).norm());
        if r[(j, j)].abs() <= RANK_TOL * scale || scale == 0.0 {
            return Err(EstimationError::RankDeficient(name(j)));
        }
    }
    let q = qr.q();
    let qty = q.transpose() * y;
    let coefficients = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| EstimationError::RankDeficient(name(k - 1)))?;
    let residuals = y - x * &coefficients;
    let ssr = residuals.norm_squared();
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| EstimationError::RankDeficient(name(k - 1)))?;
    let xtx_inv = &r_inv * r_inv.transpose();
    Ok(OlsFit {
        coefficients,
        residuals,
        ssr,
        xtx_inv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn exact_fit() {
        let x = DMatrix::from_column_slice(4, 1, &[1., 2., 3., 4.]);
        let y = DVector::from_column_slice(&[2., 4., 6., 8.]);
        let fit = ols_fit(&x, &y, &names(1)).unwrap();
        assert_relative_eq!(fit.coefficients[0], 2.0, epsilon = 1e-14);
        assert!(fit.ssr < 1e-25);
    }

    #[test]
    fn three_point_line() {
        // closed form: slope = Sxy / Sxx = 1.5 / 1.0 ... over x = 0,1,2
        let xs = [0., 1., 2.];
        let ys = [1., 3., 4.];
        let xbar = 1.0;
        let ybar = 8.0 / 3.0;
        let sxy: f64 = xs.iter().zip(&ys).map(|(a, b)| (a - xbar) * (b - ybar)).sum();
        let sxx: f64 = xs.iter().map(|a| (a - xbar) * (a - xbar)).sum();
        let slope = sxy / sxx;
        let intercept = ybar - slope * xbar;
        assert_relative_eq!(slope, 1.5, epsilon = 1e-15);
        assert_relative_eq!(intercept, 1.166_666_666_666_666_7, epsilon = 1e-15);

        let x = DMatrix::from_row_slice(3, 2, &[0., 1., 1., 1., 2., 1.]);
        let y = DVector::from_column_slice(&ys);
        let fit = ols_fit(&x, &y, &names(2)).unwrap();
        assert_relative_eq!(fit.coefficients[0], slope, epsilon = 1e-12);
        assert_relative_eq!(fit.coefficients[1], intercept, epsilon = 1e-12);
    }

    #[test]
    fn duplicated_column_is_rank_deficient() {
        let x = DMatrix::from_row_slice(3, 2, &[1., 1., 2., 2., 3., 3.]);
        let y = DVector::from_column_slice(&[1., 2., 3.]);
        match ols_fit(&x, &y, &["a".into(), "b".into()]) {
            Err(EstimationError::RankDeficient(c)) => assert_eq!(c, "b"),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn zero_column_is_rank_deficient() {
        let x = DMatrix::from_row_slice(3, 2, &[1., 0., 2., 0., 3., 0.]);
        let y = DVector::from_column_slice(&[1., 2., 3.]);
        assert!(matches!(
            ols_fit(&x, &y, &names(2)),
            Err(EstimationError::RankDeficient(_))
        ));
    }

    #[test]
    fn residuals_are_orthogonal() {
        let x = DMatrix::from_fn(20, 3, |i, j| ((i * 7 + j * 3) % 11) as f64 + (j as f64) * 0.5);
        let y = DVector::from_fn(20, |i, _| (i as f64).sin() * 3.0);
        let fit = ols_fit(&x, &y, &names(3)).unwrap();
        let xe = x.transpose() * &fit.residuals;
        assert!(xe.amax() < 1e-8);
        let xtx = x.transpose() * &x;
        assert!((xtx * &fit.xtx_inv - DMatrix::<f64>::identity(3, 3)).amax() < 1e-10);
    }
}
