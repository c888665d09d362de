//! Slow reference implementations used to cross-check the fast paths in
//! tests: direct DFT summation, 2×2 complex matrix algebra on `[X1, X2]ᵀ`
//! and explicit fully polarized spectra.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::filters::Mat2;
use crate::qft::BivariateSignal;
use crate::quat::{exp_pure, ComplexPair, PureUnitQuaternion, Quaternion};
use crate::spectral::PolarizationState;

/// `X[k] = Σ x[n] exp(−j 2π k n / N)` by direct summation.
pub fn direct_qft(x: &BivariateSignal) -> Vec<Quaternion> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let mut acc = Quaternion::ZERO;
            for t in 0..n {
                let angle = -2.0 * PI * ((k * t) % n) as f64 / n as f64;
                acc += x.quaternion(t) * exp_pure(PureUnitQuaternion::J, angle);
            }
            acc
        })
        .collect()
}

/// Unit quaternion `r` with `r j r̄ = μ`.
pub fn rotation_from_j(mu: PureUnitQuaternion) -> Quaternion {
    let r = Quaternion::ONE - mu.to_quaternion() * Quaternion::J;
    let n = r.norm();
    if n < 1e-9 {
        Quaternion::I
    } else {
        r.scale(1.0 / n)
    }
}

/// Spectral value `Z` of modulus `scale` whose density `|Z|² + Z j Z̄` is
/// fully polarized along `axis`; `psi` is the free phase.
pub fn fully_polarized(axis: PureUnitQuaternion, scale: f64, psi: f64) -> Quaternion {
    rotation_from_j(axis) * exp_pure(PureUnitQuaternion::J, psi).scale(scale)
}

/// `M [X1, X2]ᵀ` as a plain complex matrix-vector product.
pub fn matrix_apply_pair(m: &Mat2, x: Quaternion) -> Quaternion {
    m.apply(ComplexPair::from(x)).to_quaternion()
}

/// Spectral density matrix `E{[X1, X2]ᵀ[X1, X2]*}` of a polarization state.
pub fn density_matrix(d: &PolarizationState) -> Mat2 {
    let [vi, vj, vk] = d.polarization_vector().map(|c| c * d.s0);
    let p12 = Complex64::new(vk, vi) * 0.5;
    Mat2::new(
        (0.5 * (d.s0 + vj)).into(),
        p12,
        p12.conj(),
        (0.5 * (d.s0 - vj)).into(),
    )
}

pub fn inverse(m: &Mat2) -> Option<Mat2> {
    let det = m.det();
    if det.norm() == 0.0 {
        return None;
    }
    let [[a, b], [c, d]] = m.0;
    Some(Mat2::new(d / det, -b / det, -c / det, a / det))
}

/// Wiener gain `Pxx (Pyy + ε I)⁻¹` for uncorrelated signal and noise.
pub fn wiener_matrix(signal: &PolarizationState, observation: &PolarizationState, ridge: f64) -> Option<Mat2> {
    let pyy = density_matrix(observation);
    let reg = Mat2::new(pyy.0[0][0] + ridge, pyy.0[0][1], pyy.0[1][0], pyy.0[1][1] + ridge);
    inverse(&reg).map(|inv| density_matrix(signal) * inv)
}

/// Minimum mean squared error `tr(Pxx − Pxx Pyy⁻¹ Pxx)` of the matrix Wiener
/// estimate.
pub fn wiener_matrix_mse(signal: &PolarizationState, observation: &PolarizationState, ridge: f64) -> Option<f64> {
    let w = wiener_matrix(signal, observation, ridge)?;
    let pxx = density_matrix(signal);
    let e = w * pxx;
    Some((pxx.0[0][0] + pxx.0[1][1] - e.0[0][0] - e.0[1][1]).re)
}
