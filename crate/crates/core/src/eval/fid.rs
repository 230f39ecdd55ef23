use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{EvalError, FeatureMatrix, Result};

/// Diagonal ridge added to each covariance estimate.
pub const FID_RIDGE: f64 = 1e-6;

fn moments(m: &FeatureMatrix) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = m.rows();
    if n < 2 {
        return Err(EvalError::TooFewSamples(n));
    }
    let mean = m.data.row_mean().transpose();
    let mut centered = m.data.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let mut cov = centered.transpose() * &centered / (n as f64 - 1.0);
    for i in 0..cov.nrows() {
        cov[(i, i)] += FID_RIDGE;
    }
    Ok((mean, cov))
}

fn symmetric(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// `V diag(√max(λ,0)) Vᵀ` for symmetric `m`.
fn psd_sqrt(m: DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetric(m));
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// Fréchet distance between Gaussians fitted to the two feature sets:
/// `‖μr − μg‖² + Tr(Cr + Cg − 2 (Cr Cg)^½)`.
///
/// The trace of `(Cr Cg)^½` equals that of `(S Cg S)^½` with `S = Cr^½`,
/// which keeps every decomposition symmetric.
pub fn fid(real: &FeatureMatrix, generated: &FeatureMatrix) -> Result<f64> {
    if real.dim() != generated.dim() {
        return Err(EvalError::DimensionMismatch(real.dim(), generated.dim()));
    }
    let (mr, cr) = moments(real)?;
    let (mg, cg) = moments(generated)?;
    let s = psd_sqrt(cr.clone());
    let inner = SymmetricEigen::new(symmetric(&s * &cg * &s)).eigenvalues;
    let cross: f64 = inner.iter().map(|l| l.max(0.0).sqrt()).sum();
    let d = (mr - mg).norm_squared() + cr.trace() + cg.trace() - 2.0 * cross;
    Ok(d.max(0.0))
}
