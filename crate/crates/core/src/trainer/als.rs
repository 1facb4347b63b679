use nalgebra::{DMatrix, DVector};

use crate::dataset::VisitCountRow;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// State held on one simulated device.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivateProfile {
    pub u: Vec<f64>,
    visits: VisitCountRow,
    normalized: Vec<f64>,
}

impl PrivateProfile {
    pub fn new(u: Vec<f64>, visits: VisitCountRow, n: usize) -> Self {
        let normalized = visits.normalized(n);
        Self { u, visits, normalized }
    }

    /// Profile with an explicit preference row, bypassing visit counts.
    pub fn from_row(u: Vec<f64>, row: Vec<f64>) -> Self {
        Self { u, visits: VisitCountRow::default(), normalized: row }
    }

    pub fn visits(&self) -> &VisitCountRow {
        &self.visits
    }

    /// Visit counts divided by this user's maximum count.
    pub fn row(&self) -> &[f64] {
        &self.normalized
    }

    pub fn has_feedback(&self) -> bool {
        self.normalized.iter().any(|&r| r != 0.0)
    }
}

/// Factorized `VᵀV + λI` for a fixed public `V`, shared by every client
/// solve within one iteration.
#[derive(Debug, Clone)]
pub struct AlsSolver<'a> {
    v: &'a DenseMatrix,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl<'a> AlsSolver<'a> {
    pub fn new(v: &'a DenseMatrix, lambda: f64) -> Result<Self> {
        let d = v.cols();
        let mut a = DMatrix::<f64>::zeros(d, d);
        for j in 0..v.rows() {
            let row = v.row(j);
            for p in 0..d {
                for q in p..d {
                    a[(p, q)] += row[p] * row[q];
                }
            }
        }
        let scale = (0..d).map(|p| a[(p, p)]).fold(0.0, f64::max);
        for p in 0..d {
            a[(p, p)] += lambda;
            for q in 0..p {
                a[(p, q)] = a[(q, p)];
            }
        }
        let chol = a
            .cholesky()
            .ok_or_else(|| Error::Numerical("VᵀV + λI is not positive definite".into()))?;
        let l = chol.l_dirty();
        let min_pivot = (0..d).map(|p| l[(p, p)] * l[(p, p)]).fold(f64::INFINITY, f64::min);
        if !(min_pivot > 1e-13 * scale.max(lambda)) {
            return Err(Error::Numerical("VᵀV + λI is numerically singular".into()));
        }
        Ok(Self { v, chol })
    }

    /// `u = (VᵀV + λI)⁻¹ Vᵀ r`, the minimizer of `‖r − Vu‖² + λ‖u‖²`.
    pub fn solve(&self, row: &[f64]) -> Vec<f64> {
        let d = self.v.cols();
        let mut b = DVector::<f64>::zeros(d);
        for (j, &r) in row.iter().enumerate().filter(|(_, &r)| r != 0.0) {
            for (bt, &vt) in b.iter_mut().zip(self.v.row(j)) {
                *bt += r * vt;
            }
        }
        self.chol.solve(&b).iter().copied().collect()
    }
}

/// Client-side closed-form update of the user vector against public `V`.
pub fn als_update_user(profile: &PrivateProfile, v: &DenseMatrix, lambda: f64) -> Result<Vec<f64>> {
    Ok(AlsSolver::new(v, lambda)?.solve(profile.row()))
}
