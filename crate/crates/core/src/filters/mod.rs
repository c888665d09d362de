//! Linear time-invariant filters in the QFT domain.
//!
//! Any frequency response `M(ν)` acting on `[X1, X2]ᵀ` factors as a unitary
//! part (birefringence) times a Hermitian part (diattenuation). Both parts
//! have compact quaternion forms:
//!
//! * unitary: `Y = exp(μ α/2) X exp(j φ)`
//! * Hermitian: `Y = K [X − η μ X j]`
//!
//! Filter parameters are given on the `N/2 + 1` nonnegative-frequency bins;
//! negative frequencies are filled in so that filtered spectra of real
//! bivariate signals stay i-Hermitian symmetric.

mod hermitian;
mod matrix;
mod unitary;

pub use hermitian::{
    apply_hermitian, gain, hermitian_density_map, identify_from_gain_extrema,
    identify_from_unpolarized_noise, identify_from_unpolarized_state, HermitianBin,
    HermitianFilterParams,
};
pub use matrix::{
    hermitian_from_matrix, matrix_apply, polar_decompose, polar_decompose_filter,
    unitary_from_matrix, Mat2, MatrixFilter, MatrixPolar, ToMatrix,
};
pub use unitary::{apply_unitary, unitary_density_map, UnitaryBin, UnitaryFilterParams};

use crate::error::{Error, Result};
use crate::qft::half_len;

pub(crate) fn check_half_grid(params: usize, n: usize) -> Result<()> {
    if params != half_len(n) {
        return Err(Error::GridMismatch(format!(
            "{params} filter bins do not cover the {} nonnegative frequencies of a {n}-point grid",
            half_len(n)
        )));
    }
    Ok(())
}

/// Parameter for bin `k` of an `n`-point grid from half-grid parameters.
pub(crate) fn full_grid_bin<T: Copy>(half: &[T], k: usize, n: usize, mirror: impl Fn(&T) -> T) -> T {
    if k < half.len() {
        half[k]
    } else {
        mirror(&half[n - k])
    }
}
