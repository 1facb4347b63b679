//! Gradients of the joint objective
//! `‖P − UVᵀ‖² + ‖Q − VVᵀ‖² + λ(‖U‖² + ‖V‖²)` with respect to `V`, and
//! the perturbed per-client reports that stand in for its user term.

use rand::Rng;

use super::als::PrivateProfile;
use crate::error::{Error, Result};
use crate::ldp::PmParams;
use crate::matrix::{dot, DenseMatrix};

/// Components of a user vector beyond this magnitude are treated as
/// divergence.
pub const MAX_USER_FACTOR: f64 = 1e3;

/// One client's perturbed contribution for a single sampled dimension:
/// `d · ê_ij · u_i[t]` for every POI `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientReport {
    pub dim: usize,
    pub contributions: Vec<f64>,
}

/// Prediction error `r_ij − uᵀv_j` for every POI.
pub fn prediction_errors(row: &[f64], u: &[f64], v: &DenseMatrix) -> Vec<f64> {
    (0..v.rows()).map(|j| row[j] - dot(u, v.row(j))).collect()
}

/// Samples a dimension, clamps each prediction error into `[-1, 1]`,
/// perturbs it with the Piecewise Mechanism and scales by `d · u[t]`.
pub fn client_gradient_report<R: Rng + ?Sized>(
    profile: &PrivateProfile,
    v: &DenseMatrix,
    pm: &PmParams,
    rng: &mut R,
) -> Result<GradientReport> {
    let u = &profile.u;
    let d = v.cols();
    if u.len() != d {
        return Err(Error::InvalidInput(format!("user vector has {} dims, V has {d}", u.len())));
    }
    if u.iter().any(|x| !x.is_finite() || x.abs() > MAX_USER_FACTOR) {
        return Err(Error::Numerical("user factors diverged".into()));
    }
    let dim = rng.gen_range(0..d);
    let scale = d as f64 * u[dim];
    let contributions = prediction_errors(profile.row(), u, v)
        .into_iter()
        .map(|e| Ok(scale * pm.perturb(e.clamp(-1.0, 1.0), rng)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(GradientReport { dim, contributions })
}

/// Unbiased estimate of `Σ_i e_ij u_i` (an `n x d` matrix) from one batch
/// of reports: each report adds its contributions to its sampled column.
pub fn sum_reports(reports: &[GradientReport], n: usize, d: usize) -> Result<DenseMatrix> {
    let mut acc = DenseMatrix::zeros(n, d);
    for r in reports {
        if r.dim >= d || r.contributions.len() != n {
            return Err(Error::Protocol(format!(
                "report with dim {} and {} contributions does not fit {n}x{d}",
                r.dim,
                r.contributions.len()
            )));
        }
        for (j, &c) in r.contributions.iter().enumerate() {
            *acc.get_mut(j, r.dim) += c;
        }
    }
    Ok(acc)
}

/// Exact `Σ_i e_ij u_i` over the given profiles.
pub fn exact_user_sum(profiles: &[PrivateProfile], v: &DenseMatrix) -> DenseMatrix {
    let mut acc = DenseMatrix::zeros(v.rows(), v.cols());
    for p in profiles {
        for (j, e) in prediction_errors(p.row(), &p.u, v).into_iter().enumerate() {
            for (a, &ut) in acc.row_mut(j).iter_mut().zip(&p.u) {
                *a += e * ut;
            }
        }
    }
    acc
}

/// Gradient of `‖Q − VVᵀ‖² + λ‖V‖²` with respect to every `v_j`:
/// `−2 Σ_k [(s_kj − v_kᵀv_j) + (s_jk − v_jᵀv_k)] v_k + 2λ v_j`.
pub fn transition_gradient(q: &DenseMatrix, v: &DenseMatrix, lambda: f64) -> DenseMatrix {
    let n = v.rows();
    let gram = v.gram_rows();
    let mut grad = DenseMatrix::zeros(n, v.cols());
    for j in 0..n {
        let g = grad.row_mut(j);
        for k in 0..n {
            let resid = (q.get(k, j) - gram.get(k, j)) + (q.get(j, k) - gram.get(j, k));
            for (gt, &vt) in g.iter_mut().zip(v.row(k)) {
                *gt -= 2.0 * resid * vt;
            }
        }
        for (gt, &vt) in g.iter_mut().zip(v.row(j)) {
            *gt += 2.0 * lambda * vt;
        }
    }
    grad
}

/// Adds the user term `−2 · scale · user_sum` into `grad`.
pub fn add_user_term(grad: &mut DenseMatrix, user_sum: &DenseMatrix, scale: f64) {
    for (g, s) in grad.as_mut_slice().iter_mut().zip(user_sum.as_slice()) {
        *g -= 2.0 * scale * s;
    }
}

/// Full gradient of the joint objective with respect to `V`.
pub fn joint_gradient(
    profiles: &[PrivateProfile],
    q: &DenseMatrix,
    v: &DenseMatrix,
    lambda: f64,
) -> DenseMatrix {
    let mut g = transition_gradient(q, v, lambda);
    add_user_term(&mut g, &exact_user_sum(profiles, v), 1.0);
    g
}

/// Value of the joint objective.
pub fn joint_objective(profiles: &[PrivateProfile], q: &DenseMatrix, v: &DenseMatrix, lambda: f64) -> f64 {
    let p_term: f64 = profiles
        .iter()
        .map(|p| prediction_errors(p.row(), &p.u, v).iter().map(|e| e * e).sum::<f64>())
        .sum();
    let gram = v.gram_rows();
    let q_term: f64 = q.as_slice().iter().zip(gram.as_slice()).map(|(s, g)| (s - g) * (s - g)).sum();
    let reg: f64 = profiles.iter().map(|p| dot(&p.u, &p.u)).sum::<f64>() + v.frobenius_sq();
    p_term + q_term + lambda * reg
}

/// Root mean squared error of `P ≈ UVᵀ` over every user–POI cell.
pub fn p_rmse(profiles: &[PrivateProfile], v: &DenseMatrix) -> f64 {
    let cells = (profiles.len() * v.rows()).max(1) as f64;
    let sse: f64 = profiles
        .iter()
        .map(|p| prediction_errors(p.row(), &p.u, v).iter().map(|e| e * e).sum::<f64>())
        .sum();
    (sse / cells).sqrt()
}

/// Root mean squared error of `Q ≈ VVᵀ`.
pub fn q_rmse(q: &DenseMatrix, v: &DenseMatrix) -> f64 {
    let gram = v.gram_rows();
    let sse: f64 = q.as_slice().iter().zip(gram.as_slice()).map(|(s, g)| (s - g) * (s - g)).sum();
    (sse / q.as_slice().len().max(1) as f64).sqrt()
}
