use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SYMMETRY_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-8;

/// Gaussian belief over the weight vector at one date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BeliefFile", into = "BeliefFile")]
pub struct WeightBelief {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl WeightBelief {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let k = mean.len();
        if k == 0 {
            return Err(Error::InvalidInput("belief over zero assets".into()));
        }
        if cov.shape() != (k, k) {
            return Err(Error::InvalidInput(format!(
                "covariance is {:?}, expected {k}x{k}",
                cov.shape()
            )));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite belief entry".into()));
        }
        if (&cov - cov.transpose()).amax() > SYMMETRY_TOL {
            return Err(Error::InvalidInput("covariance is not symmetric".into()));
        }
        if min_eigenvalue(&cov) < -PSD_TOL {
            return Err(Error::InvalidInput("covariance is not positive semidefinite".into()));
        }
        Ok(WeightBelief { mean, cov })
    }

    /// Mean `1/k` on every asset, covariance `0.25 I`.
    pub fn equal_weight(k: usize) -> Self {
        WeightBelief {
            mean: DVector::from_element(k, 1.0 / k as f64),
            cov: DMatrix::identity(k, k) * 0.25,
        }
    }

    /// Skips validation; callers guarantee symmetric PSD `cov`.
    pub(crate) fn from_parts(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        WeightBelief { mean, cov }
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn n_assets(&self) -> usize {
        self.mean.len()
    }

    pub fn permuted(&self, order: &[usize]) -> Self {
        let k = order.len();
        WeightBelief {
            mean: DVector::from_fn(k, |i, _| self.mean[order[i]]),
            cov: DMatrix::from_fn(k, k, |i, j| self.cov[(order[i], order[j])]),
        }
    }
}

pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Symmetrizes and floors negative eigenvalues at zero. Matrices that are
/// already positive definite come back symmetrized but otherwise untouched.
pub fn repair_psd(mut m: DMatrix<f64>) -> DMatrix<f64> {
    symmetrize(&mut m);
    if m.clone().cholesky().is_some() {
        return m;
    }
    let eig = m.clone().symmetric_eigen();
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return m;
    }
    let floored = eig.eigenvalues.map(|l| l.max(0.0));
    let mut out = &eig.eigenvectors * DMatrix::from_diagonal(&floored) * eig.eigenvectors.transpose();
    symmetrize(&mut out);
    out
}

#[derive(Serialize, Deserialize)]
struct BeliefFile {
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Config(format!("{what}: ragged matrix rows")));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

pub(crate) fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

impl TryFrom<BeliefFile> for WeightBelief {
    type Error = Error;
    fn try_from(f: BeliefFile) -> Result<Self> {
        WeightBelief::new(DVector::from_vec(f.mean), matrix_from_rows(&f.cov, "cov")?)
            .map_err(|e| Error::Config(e.to_string()))
    }
}

impl From<WeightBelief> for BeliefFile {
    fn from(b: WeightBelief) -> Self {
        BeliefFile {
            mean: b.mean.iter().copied().collect(),
            cov: matrix_to_rows(&b.cov),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn validation() {
        let ok = WeightBelief::new(DVector::from_vec(vec![0.5, 0.5]), DMatrix::identity(2, 2));
        assert!(ok.is_ok());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(WeightBelief::new(DVector::zeros(2), asym).is_err());
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(WeightBelief::new(DVector::zeros(2), indefinite).is_err());
        assert!(WeightBelief::new(DVector::zeros(3), DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn repair_leaves_pd_matrix_alone() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        assert_eq!(repair_psd(m.clone()), m);
    }

    #[test]
    fn repair_floors_negative_eigenvalues() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let r = repair_psd(m);
        // eigenvalues 3 and -1; the -1 direction is removed
        assert!((r[(0, 0)] - 1.5).abs() < 1e-12);
        assert!((r[(0, 1)] - 1.5).abs() < 1e-12);
        assert!(min_eigenvalue(&r) > -1e-12);
    }

    #[test]
    fn json_is_row_major() {
        let b = WeightBelief::new(
            DVector::from_vec(vec![0.1, 0.2]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.25, 0.25, 2.0]),
        )
        .unwrap();
        let json = serde_json::to_string(&b).unwrap();
        assert_eq!(json, r#"{"mean":[0.1,0.2],"cov":[[1.0,0.25],[0.25,2.0]]}"#);
        assert_eq!(serde_json::from_str::<WeightBelief>(&json).unwrap(), b);
    }

    proptest! {
        #[test]
        fn repair_output_is_symmetric_psd(entries in prop::collection::vec(-5.0f64..5.0, 9)) {
            let m = DMatrix::from_row_slice(3, 3, &entries);
            let r = repair_psd(m);
            prop_assert!((&r - r.transpose()).amax() <= SYMMETRY_TOL);
            prop_assert!(min_eigenvalue(&r) >= -PSD_TOL);
        }
    }
}
