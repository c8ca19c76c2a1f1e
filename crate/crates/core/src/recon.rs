//! Least-squares recovery of the core from Kronecker-structured samples.
//!
//! All routines take the *sampled* model (factors `Ψ_i = Φ_i U_i`, see
//! [`subselect`](crate::multilinear::subselect)) and a sample vector ordered row-major over
//! the grid `L_1 × … × L_R`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::multilinear::{
    frame_potential, grammian, hadamard_all, mode_products, multilinear_apply, zero_column,
    CoreKind, CoreVector, Matrix, MultilinearModel, C64, FULL_RANK_RTOL, PINV_RCOND,
};

/// Eigenvalue ratio below which a Hadamard Grammian counts as singular.
pub const GRAM_RTOL: f64 = 1e-12;

/// `ĝ = (Ψ_1^† ⊗ … ⊗ Ψ_R^†) y`, one mode at a time.
pub fn ls_estimate_dense(sampled: &MultilinearModel, y: &[C64]) -> Result<CoreVector> {
    if sampled.core_kind() != CoreKind::Dense {
        return Err(Error::InvalidModel("expected a dense-core model".into()));
    }
    LsEstimator::new(sampled)?.estimate(y)
}

/// `(Ψ_1 ⊙ … ⊙ Ψ_R)^H y`, contracting the last mode first.
pub fn khatri_rao_adjoint_apply(sampled: &MultilinearModel, y: &[C64]) -> Result<Vec<C64>> {
    let dims = sampled.dims();
    let kc = sampled.core_dims()[0];
    if y.len() != dims.iter().product::<usize>() {
        return Err(Error::Shape(format!(
            "{} samples for a grid of {} entries",
            y.len(),
            dims.iter().product::<usize>()
        )));
    }
    let factors = sampled.factors();
    let (last, head) = factors.split_last().expect("model has at least one factor");
    let n = last.rows();
    let mut outer = y.len() / n;
    let mut z = vec![C64::new(0.0, 0.0); outer * kc];
    for p in 0..outer {
        for s in 0..n {
            let v = y[p * n + s];
            for k in 0..kc {
                z[p * kc + k] += last[(s, k)].conj() * v;
            }
        }
    }
    for u in head.iter().rev() {
        let n = u.rows();
        outer /= n;
        let mut next = vec![C64::new(0.0, 0.0); outer * kc];
        for p in 0..outer {
            for s in 0..n {
                let src = &z[(p * n + s) * kc..(p * n + s + 1) * kc];
                for k in 0..kc {
                    next[p * kc + k] += u[(s, k)].conj() * src[k];
                }
            }
        }
        z = next;
    }
    Ok(z)
}

/// `T = Ψ_1^HΨ_1 ∘ … ∘ Ψ_R^HΨ_R`
pub fn hadamard_grammian(sampled: &MultilinearModel) -> Matrix {
    let grams: Vec<Matrix> = sampled.factors().iter().map(grammian).collect();
    hadamard_all(&grams).expect("diagonal-core factors share their column count")
}

/// Full column rank of the sampled Khatri-Rao factor: the zero-column/privileged-rank
/// sufficient condition for some domain, or else a well-conditioned Hadamard Grammian.
fn diag_identifiable(sampled: &MultilinearModel, t_eigs: &[f64]) -> bool {
    let kc = sampled.core_dims()[0];
    let no_zero_cols = sampled.factors().iter().all(|p| zero_column(p).is_none());
    if no_zero_cols
        && sampled
            .factors()
            .iter()
            .any(|p| p.numerical_rank(FULL_RANK_RTOL) == kc)
    {
        return true;
    }
    let (lo, hi) = (t_eigs[0], t_eigs[t_eigs.len() - 1]);
    hi > 0.0 && lo > GRAM_RTOL * hi
}

/// `ĝ = T^† (Ψ_1 ⊙ … ⊙ Ψ_R)^H y` with `T` the Hadamard Grammian.
pub fn ls_estimate_diag(sampled: &MultilinearModel, y: &[C64]) -> Result<CoreVector> {
    if !sampled.is_diagonal() {
        return Err(Error::InvalidModel("expected a diagonal-core model".into()));
    }
    LsEstimator::new(sampled)?.estimate(y)
}

pub fn ls_estimate(sampled: &MultilinearModel, y: &[C64]) -> Result<CoreVector> {
    LsEstimator::new(sampled)?.estimate(y)
}

/// Least-squares operator of a sampled model, prepared once for repeated estimates.
#[derive(Clone, Debug)]
pub struct LsEstimator {
    sampled: MultilinearModel,
    /// Per-domain pseudoinverses (dense) or the single `T^†` (diagonal).
    ops: Vec<Matrix>,
}

impl LsEstimator {
    pub fn new(sampled: &MultilinearModel) -> Result<Self> {
        let ops = match sampled.core_kind() {
            CoreKind::Dense => {
                for (i, psi) in sampled.factors().iter().enumerate() {
                    if !psi.has_full_column_rank() {
                        return Err(Error::unidentifiable(
                            i,
                            format!("sampled {}x{} factor is rank deficient", psi.rows(), psi.cols()),
                        ));
                    }
                }
                sampled.factors().iter().map(|p| p.pinv(PINV_RCOND)).collect()
            }
            CoreKind::Diagonal(_) => {
                let t = hadamard_grammian(sampled);
                if !diag_identifiable(sampled, &t.hermitian_eigenvalues()?) {
                    return Err(Error::unidentifiable(
                        None,
                        "sampled Khatri-Rao factor is rank deficient",
                    ));
                }
                vec![t.pinv(PINV_RCOND)]
            }
        };
        Ok(LsEstimator {
            sampled: sampled.clone(),
            ops,
        })
    }

    pub fn estimate(&self, y: &[C64]) -> Result<CoreVector> {
        match self.sampled.core_kind() {
            CoreKind::Dense => {
                let refs: Vec<&Matrix> = self.ops.iter().collect();
                Ok(CoreVector(mode_products(y, &self.sampled.dims(), &refs)?))
            }
            CoreKind::Diagonal(_) => {
                let b = khatri_rao_adjoint_apply(&self.sampled, y)?;
                Ok(CoreVector(self.ops[0].mul_vec(&b)?))
            }
        }
    }
}

/// `x̂` from the unsampled model.
pub fn reconstruct_x(model: &MultilinearModel, g_hat: &CoreVector) -> Result<Vec<C64>> {
    multilinear_apply(model, g_hat)
}

/// Quality of the least-squares estimate for a sampled model under unit-variance noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationMetrics {
    /// `tr(T⁻¹)`; `+∞` (JSON `null`) when unidentifiable.
    #[serde(with = "finite_or_null")]
    pub mse: f64,
    pub unidentifiable: bool,
    pub fp: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `FP / λ_max²`
    pub bound_proxy_lower: f64,
    /// `FP / λ_min²`
    #[serde(with = "finite_or_null")]
    pub bound_proxy_upper: f64,
    /// Sensors `L = Σ|L_i|`.
    pub sensors: usize,
    /// Samples `L̃ = ∏|L_i|`.
    pub samples: u64,
}

pub fn metrics(sampled: &MultilinearModel) -> Result<EstimationMetrics> {
    let dims = sampled.dims();
    let (fp, lambda_min, lambda_max, mse, unidentifiable) = match sampled.core_kind() {
        CoreKind::Dense => {
            let mut fp = 1.0;
            let (mut lo, mut hi, mut mse) = (1.0, 1.0, 1.0);
            let mut singular = false;
            for psi in sampled.factors() {
                let t = grammian(psi);
                let eigs = t.hermitian_eigenvalues()?;
                fp *= t.frobenius_norm_sq();
                lo *= eigs[0].max(0.0);
                hi *= eigs[eigs.len() - 1];
                singular |= !psi.has_full_column_rank();
                mse *= eigs.iter().map(|l| 1.0 / l).sum::<f64>();
            }
            (fp, lo, hi, mse, singular)
        }
        CoreKind::Diagonal(_) => {
            let t = hadamard_grammian(sampled);
            let eigs = t.hermitian_eigenvalues()?;
            let singular = !diag_identifiable(sampled, &eigs) || eigs[0] <= 0.0;
            let mse = eigs.iter().map(|l| 1.0 / l).sum::<f64>();
            (t.frobenius_norm_sq(), eigs[0].max(0.0), eigs[eigs.len() - 1], mse, singular)
        }
    };
    let mse = if unidentifiable || !mse.is_finite() { f64::INFINITY } else { mse };
    Ok(EstimationMetrics {
        mse,
        unidentifiable: mse.is_infinite(),
        fp,
        lambda_min,
        lambda_max,
        bound_proxy_lower: fp / (lambda_max * lambda_max),
        bound_proxy_upper: if lambda_min > 0.0 {
            fp / (lambda_min * lambda_min)
        } else {
            f64::INFINITY
        },
        sensors: dims.iter().sum(),
        samples: dims.iter().map(|&n| n as u64).product(),
    })
}

/// Frame potential of the sampled factor, `∏ FP(Ψ_i)` or `‖∘T_i‖²_F`.
pub fn sampled_frame_potential(sampled: &MultilinearModel) -> f64 {
    match sampled.core_kind() {
        CoreKind::Dense => sampled.factors().iter().map(frame_potential).product(),
        CoreKind::Diagonal(_) => hadamard_grammian(sampled).frobenius_norm_sq(),
    }
}

mod finite_or_null {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multilinear::{khatri_rao_all, kron_all};

    fn dense_sampled() -> MultilinearModel {
        let p1 = Matrix::from_rows(&[[1.0, 0.5], [0.2, -1.0], [0.7, 0.3]]).unwrap();
        let p2 = Matrix::from_rows(&[[0.4, 1.0, 0.0], [1.0, 0.1, 0.3], [-0.5, 0.8, 1.0], [0.2, 0.2, 0.9]])
            .unwrap();
        MultilinearModel::dense(vec![p1, p2]).unwrap()
    }

    #[test]
    fn dense_noiseless_round_trip() {
        let m = dense_sampled();
        let g = CoreVector::from_real(&[1.0, -2.0, 0.5, 3.0, 0.0, 1.5]);
        let y = multilinear_apply(&m, &g).unwrap();
        let g_hat = ls_estimate_dense(&m, &y).unwrap();
        for (a, b) in g_hat.as_slice().iter().zip(g.as_slice()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn dense_mse_matches_materialized_trace() {
        let m = dense_sampled();
        let psi = kron_all(m.factors()).unwrap();
        let t = grammian(&psi);
        let want: f64 = t.hermitian_eigenvalues().unwrap().iter().map(|l| 1.0 / l).sum();
        let got = metrics(&m).unwrap();
        assert!((got.mse - want).abs() <= 1e-8 * want);
        assert!(got.bound_proxy_lower <= got.bound_proxy_upper);
        assert_eq!((got.sensors, got.samples), (7, 12));
    }

    #[test]
    fn orthonormal_dense_mse_is_product_of_ranks() {
        let m = MultilinearModel::sampled(
            vec![Matrix::identity(2), Matrix::identity(3)],
            CoreKind::Dense,
        );
        assert!((metrics(&m).unwrap().mse - 6.0).abs() < 1e-12);
    }

    #[test]
    fn diag_adjoint_matches_materialized() {
        let p1 = Matrix::from_rows(&[[1.0, 0.5], [0.2, -1.0], [0.7, 0.3]]).unwrap();
        let p2 = Matrix::from_complex_rows(&[
            vec![C64::new(0.4, 1.0), C64::new(1.0, 0.0)],
            vec![C64::new(0.0, -1.0), C64::new(0.3, 0.3)],
        ])
        .unwrap();
        let m = MultilinearModel::sampled(vec![p1, p2], CoreKind::Diagonal(2));
        let y: Vec<C64> = (0..6).map(|i| C64::new(i as f64, 1.0 - i as f64)).collect();
        let want = khatri_rao_all(m.factors()).unwrap().adjoint().mul_vec(&y).unwrap();
        let got = khatri_rao_adjoint_apply(&m, &y).unwrap();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).norm() < 1e-12);
        }
        let g = CoreVector(vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.0)]);
        let y = multilinear_apply(&m, &g).unwrap();
        let g_hat = ls_estimate_diag(&m, &y).unwrap();
        for (a, b) in g_hat.as_slice().iter().zip(g.as_slice()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn singular_selection_reports_infinite_mse() {
        let p = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        let m = MultilinearModel::sampled(vec![p.clone()], CoreKind::Dense);
        let got = metrics(&m).unwrap();
        assert!(got.unidentifiable && got.mse.is_infinite());
        let json = serde_json::to_value(&got).unwrap();
        assert!(json["mse"].is_null());
        assert!(ls_estimate_dense(&m, &[C64::new(1.0, 0.0); 2]).is_err());

        let m = MultilinearModel::sampled(vec![p, Matrix::ones(1, 2)], CoreKind::Diagonal(2));
        assert!(metrics(&m).unwrap().mse.is_infinite());
    }
}
