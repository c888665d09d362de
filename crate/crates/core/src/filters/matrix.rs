//! 2×2 complex frequency responses acting on `[X1, X2]ᵀ`, their quaternion
//! form and the polar factorization `M = U H`.

use num_complex::Complex64;
use std::ops::Mul;

use crate::error::{Error, Result};
use crate::qft::{half_len, QSpectrum};
use crate::quat::{ComplexPair, PureUnitQuaternion, Quaternion};

use super::{check_half_grid, full_grid_bin, HermitianBin, HermitianFilterParams, UnitaryBin, UnitaryFilterParams};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Tolerance on `UᴴU = I` and `H = Hᴴ ⪰ 0` when reading filter parameters
/// from a matrix, relative to its largest entry.
const STRUCTURE_TOL: f64 = 1e-9;

/// Row-major 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Self = Self([[ONE, ZERO], [ZERO, ONE]]);
    pub const ZERO: Self = Self([[ZERO, ZERO], [ZERO, ZERO]]);

    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Self([[a, b], [c, d]])
    }

    pub fn diag(a: f64, d: f64) -> Self {
        Self::new(a.into(), ZERO, ZERO, d.into())
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Self::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    /// Elementwise conjugate: the response at `−ν` of a filter with real
    /// impulse response.
    pub fn conj(&self) -> Self {
        Self(self.0.map(|row| row.map(|z| z.conj())))
    }

    pub fn det(&self) -> Complex64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self(self.0.map(|row| row.map(|z| z * s)))
    }

    pub fn apply(&self, x: ComplexPair) -> ComplexPair {
        let m = &self.0;
        ComplexPair::new(m[0][0] * x.q1 + m[0][1] * x.q2, m[1][0] * x.q1 + m[1][1] * x.q2)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut d = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                d = d.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        d
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.is_finite())
    }

    fn from_columns(u: [Complex64; 2], v: [Complex64; 2]) -> Self {
        Self::new(u[0], v[0], u[1], v[1])
    }

    /// `(p, q)` such that `Y = p X + q X j` reproduces `M [X1, X2]ᵀ`.
    pub fn quaternion_form(&self) -> (Quaternion, Quaternion) {
        let [[a, b], [c, d]] = self.0.map(|row| row.map(Quaternion::from_cj));
        let col0 = a + Quaternion::I * c;
        let col1 = b + Quaternion::I * d;
        let col1_i = col1 * Quaternion::I;
        let p = (col0 - col1_i).scale(0.5);
        let q = (col0 + col1_i).scale(0.5) * (-Quaternion::J);
        (p, q)
    }
}

impl Mul for Mat2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (a, b) = (&self.0, &o.0);
        let e = |r: usize, c: usize| a[r][0] * b[0][c] + a[r][1] * b[1][c];
        Self::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }
}

/// `M [X1, X2]ᵀ` evaluated in quaternion arithmetic.
pub fn matrix_apply(m: &Mat2, x: Quaternion) -> Quaternion {
    let (p, q) = m.quaternion_form();
    p * x + q * x * Quaternion::J
}

/// Conversion of a quaternion filter bin to its matrix response.
pub trait ToMatrix {
    fn to_matrix(&self) -> Mat2;
}

impl ToMatrix for HermitianBin {
    fn to_matrix(&self) -> Mat2 {
        let [m1, m2, m3] = self.mu.map(|m| m.components()).unwrap_or([0.0; 3]);
        let k = self.gain;
        let b = Complex64::new(m3, m1) * (k * self.eta);
        Mat2::new(
            (k * (1.0 + self.eta * m2)).into(),
            b,
            b.conj(),
            (k * (1.0 - self.eta * m2)).into(),
        )
    }
}

impl ToMatrix for UnitaryBin {
    fn to_matrix(&self) -> Mat2 {
        let q = self.left();
        let q1 = Complex64::new(q.a, q.c);
        let q2 = Complex64::new(q.b, q.d);
        Mat2::new(q1, -q2.conj(), q2, q1.conj()).scale(Complex64::from_polar(1.0, self.phi))
    }
}

/// `M = U H` with `U` unitary and `H = (MᴴM)^{1/2}` Hermitian PSD.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixPolar {
    pub unitary: Mat2,
    pub hermitian: Mat2,
}

fn norm2(v: [Complex64; 2]) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

fn normalized(v: [Complex64; 2]) -> [Complex64; 2] {
    let n = norm2(v);
    [v[0] / n, v[1] / n]
}

/// `v1ᴴ v2`
fn dot(u: [Complex64; 2], v: [Complex64; 2]) -> Complex64 {
    u[0].conj() * v[0] + u[1].conj() * v[1]
}

/// Unit vector orthogonal to `v` (assumed unit).
fn complement(v: [Complex64; 2]) -> [Complex64; 2] {
    [-v[1].conj(), v[0].conj()]
}

pub fn polar_decompose(m: &Mat2) -> Result<MatrixPolar> {
    if !m.is_finite() {
        return Err(Error::invalid("matrix response has non-finite entries"));
    }
    let scale = m.max_abs();
    if scale == 0.0 {
        return Ok(MatrixPolar {
            unitary: Mat2::IDENTITY,
            hermitian: Mat2::ZERO,
        });
    }
    let a = m.adjoint() * *m;
    let p = a.0[0][0].re;
    let r = a.0[1][1].re;
    let q = a.0[0][1];
    let mean = 0.5 * (p + r);
    let rad = (0.25 * (p - r) * (p - r) + q.norm_sqr()).sqrt();
    let l1 = mean + rad;
    let l2 = (mean - rad).max(0.0);

    // eigenvector of the larger eigenvalue from whichever row is better conditioned
    let c1 = [q, Complex64::from(l1 - p)];
    let c2 = [Complex64::from(l1 - r), q.conj()];
    let v1 = if norm2(c1) >= norm2(c2) { c1 } else { c2 };
    let v1 = if norm2(v1) <= f64::EPSILON * l1 {
        [ONE, ZERO]
    } else {
        normalized(v1)
    };
    let v2 = complement(v1);
    let (s1, s2) = (l1.sqrt(), l2.sqrt());
    let v = Mat2::from_columns(v1, v2);
    let hermitian = v * Mat2::diag(s1, s2) * v.adjoint();

    let mv1 = m.apply(ComplexPair::new(v1[0], v1[1]));
    let w1 = normalized([mv1.q1, mv1.q2]);
    let w2 = if s2 < 1e-12 * s1 {
        complement(w1)
    } else {
        let mv2 = m.apply(ComplexPair::new(v2[0], v2[1]));
        let mut w2 = [mv2.q1, mv2.q2];
        let overlap = dot(w1, w2);
        w2 = [w2[0] - overlap * w1[0], w2[1] - overlap * w1[1]];
        if norm2(w2) < 1e-12 * s1 {
            complement(w1)
        } else {
            normalized(w2)
        }
    };
    let unitary = Mat2::from_columns(w1, w2) * v.adjoint();
    Ok(MatrixPolar { unitary, hermitian })
}

/// `(K, η, μ)` of a Hermitian PSD matrix.
pub fn hermitian_from_matrix(h: &Mat2) -> Result<HermitianBin> {
    let scale = h.max_abs();
    let tol = STRUCTURE_TOL * scale.max(f64::MIN_POSITIVE);
    if !h.is_finite() || h.max_abs_diff(&h.adjoint()) > tol {
        return Err(Error::invalid("matrix is not Hermitian"));
    }
    let a = h.0[0][0].re;
    let d = h.0[1][1].re;
    let b = 0.5 * (h.0[0][1] + h.0[1][0].conj());
    let trace = a + d;
    let r = ((a - d) * (a - d) + 4.0 * b.norm_sqr()).sqrt();
    if trace < -tol || r > trace + tol {
        return Err(Error::invalid("matrix is not positive semidefinite"));
    }
    let gain = 0.5 * trace.max(0.0);
    if r <= 1e-12 * scale || gain == 0.0 {
        return Ok(HermitianBin::scalar(gain));
    }
    let eta = (r / trace).min(1.0);
    let mu = PureUnitQuaternion::new([2.0 * b.im, a - d, 2.0 * b.re])?;
    HermitianBin::new(gain, eta, Some(mu))
}

/// `(μ, α, φ)` of a unitary matrix, with `α ∈ [0, π]` and `φ ∈ [0, 2π)`.
pub fn unitary_from_matrix(u: &Mat2) -> Result<UnitaryBin> {
    if !u.is_finite() || (u.adjoint() * *u).max_abs_diff(&Mat2::IDENTITY) > STRUCTURE_TOL {
        return Err(Error::invalid("matrix is not unitary"));
    }
    let mut phi = 0.5 * u.det().arg();
    let su = u.scale(Complex64::from_polar(1.0, -phi));
    let mut q = Quaternion::from_cj(su.0[0][0]) - Quaternion::from_cj(su.0[0][1]) * Quaternion::I;
    if q.a < 0.0 {
        q = -q;
        phi += std::f64::consts::PI;
    }
    let q = q.scale(1.0 / q.norm());
    let alpha = 2.0 * q.a.clamp(-1.0, 1.0).acos();
    let mu = if q.vector_norm() < 1e-12 {
        PureUnitQuaternion::J
    } else {
        PureUnitQuaternion::from_vector_part(q)?
    };
    let alpha = if q.vector_norm() < 1e-12 { 0.0 } else { alpha };
    UnitaryBin::new(mu, alpha, phi.rem_euclid(std::f64::consts::TAU))
}

/// Matrix response on the nonnegative-frequency half grid; negative
/// frequencies use `M(−ν) = conj M(ν)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFilter {
    bins: Vec<Mat2>,
}

impl MatrixFilter {
    pub fn new(bins: Vec<Mat2>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(k) = bins.iter().position(|m| !m.is_finite()) {
            return Err(Error::invalid(format!("matrix response at bin {k} is not finite")));
        }
        Ok(Self { bins })
    }

    pub fn constant(m: Mat2, n: usize) -> Self {
        Self { bins: vec![m; half_len(n)] }
    }

    pub fn bins(&self) -> &[Mat2] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn at(&self, k: usize, n: usize) -> Mat2 {
        full_grid_bin(&self.bins, k, n, Mat2::conj)
    }

    pub fn apply(&self, x: &QSpectrum) -> Result<QSpectrum> {
        let n = x.len();
        check_half_grid(self.len(), n)?;
        Ok(x.map(|k, q| matrix_apply(&self.at(k, n), q)))
    }

    /// Builds the response `U(ν) H(ν)` of a unitary filter following a
    /// Hermitian one.
    pub fn from_parts(unitary: &UnitaryFilterParams, hermitian: &HermitianFilterParams) -> Result<Self> {
        if unitary.len() != hermitian.len() {
            return Err(Error::LengthMismatch {
                expected: unitary.len(),
                found: hermitian.len(),
            });
        }
        let bins = unitary
            .bins()
            .iter()
            .zip(hermitian.bins())
            .map(|(u, h)| u.to_matrix() * h.to_matrix())
            .collect();
        Self::new(bins)
    }
}

/// Splits a matrix filter into a Hermitian stage followed by a unitary one.
pub fn polar_decompose_filter(m: &MatrixFilter) -> Result<(UnitaryFilterParams, HermitianFilterParams)> {
    let mut us = Vec::with_capacity(m.len());
    let mut hs = Vec::with_capacity(m.len());
    for (k, mat) in m.bins().iter().enumerate() {
        let polar = polar_decompose(mat)?;
        us.push(unitary_from_matrix(&polar.unitary)?);
        hs.push(hermitian_from_matrix(&polar.hermitian).map_err(|e| match e {
            Error::MissingAxis { eta, .. } => Error::MissingAxis { bin: k, eta },
            other => other,
        })?);
    }
    Ok((UnitaryFilterParams::new(us)?, HermitianFilterParams::new(hs)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::qft::{qft_forward, qft_inverse, BivariateSignal};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c() -> impl Strategy<Value = Complex64> {
        (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(re, im)| Complex64::new(re, im))
    }

    fn mat() -> impl Strategy<Value = Mat2> {
        (c(), c(), c(), c()).prop_map(|(a, b, c, d)| Mat2::new(a, b, c, d))
    }

    fn quat() -> impl Strategy<Value = Quaternion> {
        prop::array::uniform4(-2.0f64..2.0).prop_map(|v| Quaternion::new(v[0], v[1], v[2], v[3]))
    }

    fn axis() -> impl Strategy<Value = PureUnitQuaternion> {
        prop::array::uniform3(-1.0f64..1.0)
            .prop_filter("nondegenerate", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
            .prop_map(|v| PureUnitQuaternion::new(v).unwrap())
    }

    #[test]
    fn zero_matrix_polar() {
        let p = polar_decompose(&Mat2::ZERO).unwrap();
        assert_eq!(p.unitary, Mat2::IDENTITY);
        assert_eq!(p.hermitian, Mat2::ZERO);
        assert_eq!(hermitian_from_matrix(&p.hermitian).unwrap().gain, 0.0);
    }

    #[test]
    fn rank_one_matrix_polar() {
        let m = Mat2::new(ONE, ONE, ZERO, ZERO);
        let p = polar_decompose(&m).unwrap();
        assert!((p.unitary * p.hermitian).max_abs_diff(&m) < 1e-14);
        let h = hermitian_from_matrix(&p.hermitian).unwrap();
        assert!((h.eta - 1.0).abs() < 1e-12);
        assert!(unitary_from_matrix(&p.unitary).is_ok());
    }

    #[test]
    fn structure_checks() {
        assert!(hermitian_from_matrix(&Mat2::new(ONE, ONE, ZERO, ONE)).is_err());
        assert!(hermitian_from_matrix(&Mat2::diag(1.0, -1.0)).is_err());
        assert!(unitary_from_matrix(&Mat2::diag(2.0, 1.0)).is_err());
    }

    #[test]
    fn j_phase_matrix() {
        let u = Mat2::IDENTITY.scale(Complex64::from_polar(1.0, 0.7));
        let b = unitary_from_matrix(&u).unwrap();
        assert!((b.phi - 0.7).abs() < 1e-15 && b.alpha == 0.0);
        let minus = unitary_from_matrix(&Mat2::IDENTITY.scale((-1.0).into())).unwrap();
        assert!((minus.phi - std::f64::consts::PI).abs() < 1e-15 && minus.alpha == 0.0);
    }

    #[test]
    fn matrix_filter_keeps_signals_real() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 33;
        let samples = (0..n).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let x = BivariateSignal::new(samples, 1.0).unwrap();
        let bins = (0..half_len(n))
            .map(|_| {
                let mut z = || Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                Mat2::new(z(), z(), z(), z())
            })
            .collect();
        let mut f = MatrixFilter::new(bins).unwrap();
        for m in &mut f.bins[..1] {
            *m = Mat2(m.0.map(|row| row.map(|z| Complex64::from(z.re))));
        }
        let y = f.apply(&qft_forward(&x).unwrap()).unwrap();
        assert!(qft_inverse(&y).unwrap().is_bivariate());

        let (u, h) = polar_decompose_filter(&f).unwrap();
        let rebuilt = MatrixFilter::from_parts(&u, &h).unwrap();
        for k in 0..n {
            assert!(rebuilt.at(k, n).max_abs_diff(&f.at(k, n)) < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn quaternion_form_matches_pair_product(m in mat(), x in quat()) {
            let direct = oracle::matrix_apply_pair(&m, x);
            prop_assert!(matrix_apply(&m, x).max_abs_diff(direct) < 1e-13);
        }

        #[test]
        fn hermitian_matrix_round_trip(k in 0.1f64..3.0, eta in 0.0f64..=1.0, mu in axis(), x in quat()) {
            let f = HermitianBin::new(k, eta, Some(mu)).unwrap();
            let m = f.to_matrix();
            prop_assert!(matrix_apply(&m, x).max_abs_diff(f.apply(x)) < 1e-12);
            let back = hermitian_from_matrix(&m).unwrap();
            prop_assert!((back.gain - k).abs() < 1e-12);
            prop_assert!((back.eta - eta).abs() < 1e-12);
            if eta > 1e-6 {
                prop_assert!((crate::quat::inner3(back.mu.unwrap(), mu) - 1.0).abs() < 1e-10);
            }
        }

        #[test]
        fn unitary_matrix_round_trip(mu in axis(), alpha in 0.0f64..std::f64::consts::TAU, phi in -6.0f64..6.0, x in quat()) {
            let f = UnitaryBin::new(mu, alpha, phi).unwrap();
            let m = f.to_matrix();
            prop_assert!(matrix_apply(&m, x).max_abs_diff(f.apply(x)) < 1e-12);
            let back = unitary_from_matrix(&m).unwrap();
            prop_assert!((0.0..=std::f64::consts::PI + 1e-12).contains(&back.alpha));
            prop_assert!((0.0..std::f64::consts::TAU).contains(&back.phi));
            prop_assert!(back.to_matrix().max_abs_diff(&m) < 1e-10);
        }

        #[test]
        fn polar_factors(m in mat()) {
            let p = polar_decompose(&m).unwrap();
            let scale = m.max_abs().max(1.0);
            prop_assert!((p.unitary * p.hermitian).max_abs_diff(&m) < 1e-10 * scale);
            prop_assert!((p.unitary.adjoint() * p.unitary).max_abs_diff(&Mat2::IDENTITY) < 1e-10);
            prop_assert!(p.hermitian.max_abs_diff(&p.hermitian.adjoint()) < 1e-12 * scale);
            let u = unitary_from_matrix(&p.unitary).unwrap();
            let h = hermitian_from_matrix(&p.hermitian).unwrap();
            prop_assert!((u.to_matrix() * h.to_matrix()).max_abs_diff(&m) < 1e-9 * scale);
        }

        #[test]
        fn mirrored_bins_match_conjugate_matrix(k in 0.1f64..3.0, eta in 0.0f64..=1.0, mu in axis(),
                                                 alpha in 0.0f64..std::f64::consts::TAU, phi in -3.0f64..3.0) {
            let h = HermitianBin::new(k, eta, Some(mu)).unwrap();
            prop_assert!(h.mirrored().to_matrix().max_abs_diff(&h.to_matrix().conj()) < 1e-12);
            let u = UnitaryBin::new(mu, alpha, phi).unwrap();
            prop_assert!(u.mirrored().to_matrix().max_abs_diff(&u.to_matrix().conj()) < 1e-12);
        }
    }
}
