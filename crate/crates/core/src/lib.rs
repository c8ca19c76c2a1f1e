//! Kronecker-structured sparse sampling of multidomain signals.
//!
//! A tensor signal `x = (U_1 ⊗ … ⊗ U_R) g` (dense core) or `x = (U_1 ⊙ … ⊙ U_R) g`
//! (diagonal core) is observed on a grid `L_1 × … × L_R` of per-domain row selections.
//! The samplers choose those grids greedily by minimizing the frame potential of the
//! sampled factor; [`recon`] recovers `g` by factorized least squares and [`bench`] runs the
//! comparison experiments behind the `kronsample` binary.

pub mod bench;
pub mod dense;
pub mod diag;
pub mod error;
pub mod greedy;
pub mod io;
pub mod multilinear;
pub mod recon;

pub use dense::{greedy_dense, greedy_dense_path, DenseConstraints};
pub use diag::{greedy_diag, greedy_diag_path, kr_rank_check, DiagConstraints, RankReport};
pub use error::{Error, Result};
pub use greedy::{GreedyStep, GreedyTrace};
pub use multilinear::{
    Complement, CoreKind, CoreVector, Matrix, MultilinearModel, Selection, C64,
};
pub use recon::{ls_estimate, metrics, reconstruct_x, EstimationMetrics};
