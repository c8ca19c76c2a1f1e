//! Multilinear algebra substrate: complex matrices, structured products, factor models and
//! per-domain selections.

mod matrix;
mod model;
mod products;

pub use matrix::{Matrix, C64, FULL_RANK_RTOL, PINV_RCOND, ZERO_TOL};
pub use model::{
    mode_products, multilinear_apply, sample_indices, sample_tensor, subselect, Complement,
    CoreKind, CoreVector, MultilinearModel, Selection,
};
pub use products::{
    complement_grammian, elementwise_abs_sq, frame_potential, frobenius_inner, grammian,
    grammian_of_rows, hadamard, hadamard_all, khatri_rao, khatri_rao_all, kron, kron_all,
    row_inner_products, RowTable,
};

pub(crate) use model::zero_column;
pub(crate) use products::add_row_outer;
