//! Quaternion values with the involutions and the complex-pair view used by
//! the quaternion Fourier transform.
//!
//! Components are stored on the canonical basis `{1, i, j, k}` as
//! `q = a + b i + c j + d k`. The complex subfield `C_j = span{1, j}` plays
//! the role of the usual complex numbers: a [`Complex64`] is read as
//! `re + im j`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Smallest vector norm accepted when building a [`PureUnitQuaternion`].
pub const MIN_AXIS_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quaternion {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Imaginary unit selecting an involution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    I,
    J,
    K,
}

impl Quaternion {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Self = Self::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Self = Self::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Self = Self::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Self = Self::new(0.0, 0.0, 0.0, 1.0);

    #[inline]
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    #[inline]
    pub const fn scalar(a: f64) -> Self {
        Self::new(a, 0.0, 0.0, 0.0)
    }

    /// Pure quaternion from its `(i, j, k)` components.
    #[inline]
    pub const fn pure(v: [f64; 3]) -> Self {
        Self::new(0.0, v[0], v[1], v[2])
    }

    /// Embeds `re + im j` of the subfield `C_j`.
    #[inline]
    pub fn from_cj(z: Complex64) -> Self {
        Self::new(z.re, 0.0, z.im, 0.0)
    }

    /// Scalar part `S(q)`.
    #[inline]
    pub fn scalar_part(self) -> f64 {
        self.a
    }

    /// Vector part `V(q)` as `(i, j, k)` components.
    #[inline]
    pub fn vector_part(self) -> [f64; 3] {
        [self.b, self.c, self.d]
    }

    #[inline]
    pub fn conj(self) -> Self {
        Self::new(self.a, -self.b, -self.c, -self.d)
    }

    #[inline]
    pub fn norm_sqr(self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    #[inline]
    pub fn vector_norm(self) -> f64 {
        (self.b * self.b + self.c * self.c + self.d * self.d).sqrt()
    }

    #[inline]
    pub fn scale(self, s: f64) -> Self {
        Self::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    /// Involution `q̄^μ = −μ q μ` for a basis unit: keeps the scalar part and
    /// the chosen axis, reflects the two orthogonal components.
    #[inline]
    pub fn involution(self, axis: Axis) -> Self {
        match axis {
            Axis::I => Self::new(self.a, self.b, -self.c, -self.d),
            Axis::J => Self::new(self.a, -self.b, self.c, -self.d),
            Axis::K => Self::new(self.a, -self.b, -self.c, self.d),
        }
    }

    /// Splits `q = q1 + i q2` with `q1, q2 ∈ C_j`.
    #[inline]
    pub fn to_pair(self) -> ComplexPair {
        ComplexPair {
            q1: Complex64::new(self.a, self.c),
            q2: Complex64::new(self.b, self.d),
        }
    }

    pub fn is_finite(self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }

    /// Largest componentwise distance.
    pub fn max_abs_diff(self, other: Self) -> f64 {
        let d = self - other;
        d.a.abs().max(d.b.abs()).max(d.c.abs()).max(d.d.abs())
    }
}

impl Add for Quaternion {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }
}

impl AddAssign for Quaternion {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for Quaternion {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }
}

impl Neg for Quaternion {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.a, -self.b, -self.c, -self.d)
    }
}

/// Hamilton product: `i² = j² = k² = ijk = −1`, `ij = k = −ji`.
impl Mul for Quaternion {
    type Output = Self;
    #[inline]
    fn mul(self, q: Self) -> Self {
        let p = self;
        Self::new(
            p.a * q.a - p.b * q.b - p.c * q.c - p.d * q.d,
            p.a * q.b + p.b * q.a + p.c * q.d - p.d * q.c,
            p.a * q.c - p.b * q.d + p.c * q.a + p.d * q.b,
            p.a * q.d + p.b * q.c - p.c * q.b + p.d * q.a,
        )
    }
}

impl Mul<f64> for Quaternion {
    type Output = Self;
    #[inline]
    fn mul(self, s: f64) -> Self {
        self.scale(s)
    }
}

impl Mul<Quaternion> for f64 {
    type Output = Quaternion;
    #[inline]
    fn mul(self, q: Quaternion) -> Quaternion {
        q.scale(self)
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:+}i {:+}j {:+}k", self.a, self.b, self.c, self.d)
    }
}

/// Unit-norm pure quaternion, `μ² = −1`. Used for polarization,
/// birefringence and diattenuation axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureUnitQuaternion([f64; 3]);

impl PureUnitQuaternion {
    pub const I: Self = Self([1.0, 0.0, 0.0]);
    pub const J: Self = Self([0.0, 1.0, 0.0]);
    pub const K: Self = Self([0.0, 0.0, 1.0]);

    /// Normalizes `(i, j, k)` components; rejects near-zero vectors.
    pub fn new(v: [f64; 3]) -> Result<Self> {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !n.is_finite() || n < MIN_AXIS_NORM {
            return Err(Error::DegenerateAxis { norm: n });
        }
        Ok(Self([v[0] / n, v[1] / n, v[2] / n]))
    }

    /// Axis from the vector part of `q`.
    pub fn from_vector_part(q: Quaternion) -> Result<Self> {
        Self::new(q.vector_part())
    }

    /// Point on the unit Poincaré sphere with orientation `theta` and
    /// ellipticity `chi` (spherical coordinates `2θ, 2χ`).
    pub fn from_ellipse(theta: f64, chi: f64) -> Self {
        let (s2c, c2c) = (2.0 * chi).sin_cos();
        let (s2t, c2t) = (2.0 * theta).sin_cos();
        Self([s2c, c2c * c2t, c2c * s2t])
    }

    #[inline]
    pub fn components(self) -> [f64; 3] {
        self.0
    }

    #[inline]
    pub fn to_quaternion(self) -> Quaternion {
        Quaternion::pure(self.0)
    }

    /// Axis carried by the mirrored frequency `−ν` in a quaternion spectral
    /// density: `−q̄^i`, which flips only the `i` (circular) component.
    #[inline]
    pub fn negative_frequency(self) -> Self {
        Self([-self.0[0], self.0[1], self.0[2]])
    }

    /// `q̄^i` applied to the axis.
    #[inline]
    pub fn involution_i(self) -> Self {
        Self([self.0[0], -self.0[1], -self.0[2]])
    }

    /// Orientation `θ` and ellipticity `χ` of the polarization ellipse.
    pub fn ellipse(self) -> (f64, f64) {
        let [s3, s1, s2] = self.0;
        (0.5 * s2.atan2(s1), 0.5 * s3.clamp(-1.0, 1.0).asin())
    }
}

impl Neg for PureUnitQuaternion {
    type Output = Self;
    fn neg(self) -> Self {
        Self([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl From<PureUnitQuaternion> for Quaternion {
    fn from(m: PureUnitQuaternion) -> Self {
        m.to_quaternion()
    }
}

/// `exp(μθ) = cos θ + μ sin θ`.
#[inline]
pub fn exp_pure(axis: PureUnitQuaternion, theta: f64) -> Quaternion {
    let (s, c) = theta.sin_cos();
    let [x, y, z] = axis.0;
    Quaternion::new(c, s * x, s * y, s * z)
}

/// `⟨u, v⟩ = S(u v̄)`, the Euclidean inner product of the two axes.
#[inline]
pub fn inner3(u: PureUnitQuaternion, v: PureUnitQuaternion) -> f64 {
    let (u, v) = (u.0, v.0);
    (u[0] * v[0] + u[1] * v[1] + u[2] * v[2]).clamp(-1.0, 1.0)
}

/// Pair `(q1, q2)` of `C_j` scalars representing `q = q1 + i q2`, i.e. the
/// column vector `[q1, q2]ᵀ`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplexPair {
    pub q1: Complex64,
    pub q2: Complex64,
}

impl ComplexPair {
    pub fn new(q1: Complex64, q2: Complex64) -> Self {
        Self { q1, q2 }
    }

    #[inline]
    pub fn to_quaternion(self) -> Quaternion {
        Quaternion::new(self.q1.re, self.q2.re, self.q1.im, self.q2.im)
    }
}

impl From<ComplexPair> for Quaternion {
    fn from(p: ComplexPair) -> Self {
        p.to_quaternion()
    }
}

impl From<Quaternion> for ComplexPair {
    fn from(q: Quaternion) -> Self {
        q.to_pair()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn close(p: Quaternion, q: Quaternion, tol: f64) -> bool {
        p.max_abs_diff(q) <= tol
    }

    fn quat() -> impl Strategy<Value = Quaternion> {
        prop::array::uniform4(-10.0f64..10.0).prop_map(|v| Quaternion::new(v[0], v[1], v[2], v[3]))
    }

    fn axis() -> impl Strategy<Value = PureUnitQuaternion> {
        prop::array::uniform3(-1.0f64..1.0)
            .prop_filter("nondegenerate", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
            .prop_map(|v| PureUnitQuaternion::new(v).unwrap())
    }

    #[test]
    fn basis_table() {
        use Quaternion as Q;
        assert_eq!(Q::I * Q::J, Q::K);
        assert_eq!(Q::J * Q::I, -Q::K);
        assert_eq!(Q::J * Q::K, Q::I);
        assert_eq!(Q::K * Q::I, Q::J);
        assert_eq!(Q::I * Q::J * Q::K, -Q::ONE);
        for u in [Q::I, Q::J, Q::K] {
            assert_eq!(u * u, -Q::ONE);
        }
    }

    #[test]
    fn expansion_of_one_plus_i_times_one_plus_j() {
        let p = Quaternion::ONE + Quaternion::I;
        let q = Quaternion::ONE + Quaternion::J;
        assert_eq!(p * q, Quaternion::new(1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn involution_i_reflects_j_and_k() {
        let q = Quaternion::new(1.0, 2.0, 3.0, 4.0);
        assert_eq!(q.involution(Axis::I), Quaternion::new(1.0, 2.0, -3.0, -4.0));
    }

    #[test]
    fn exp_pure_values() {
        assert!(close(exp_pure(PureUnitQuaternion::J, PI / 2.0), Quaternion::J, 1e-15));
        assert!(close(exp_pure(PureUnitQuaternion::I, PI), -Quaternion::ONE, 1e-15));
        assert_eq!(exp_pure(PureUnitQuaternion::K, 0.0), Quaternion::ONE);
    }

    #[test]
    fn inner_products() {
        use PureUnitQuaternion as P;
        assert_eq!(inner3(P::I, P::I), 1.0);
        assert_eq!(inner3(P::J, -P::J), -1.0);
        assert_eq!(inner3(P::I, P::J), 0.0);
    }

    #[test]
    fn degenerate_axis_rejected() {
        assert!(PureUnitQuaternion::new([0.0, 1e-13, 0.0]).is_err());
        assert!(PureUnitQuaternion::new([f64::NAN, 1.0, 0.0]).is_err());
        let m = PureUnitQuaternion::new([0.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.components(), [0.0, 0.6, 0.8]);
    }

    #[test]
    fn ellipse_round_trip() {
        let m = PureUnitQuaternion::from_ellipse(0.3, -0.2);
        let (t, c) = m.ellipse();
        assert!((t - 0.3).abs() < 1e-14 && (c + 0.2).abs() < 1e-14);
        // vertical linear polarization sits at −j
        let v = PureUnitQuaternion::from_ellipse(PI / 2.0, 0.0);
        assert!((inner3(v, -PureUnitQuaternion::J) - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn multiplicative_norm(p in quat(), q in quat()) {
            let lhs = (p * q).norm();
            prop_assert!((lhs - p.norm() * q.norm()).abs() <= 1e-12 * lhs.max(1.0));
        }

        #[test]
        fn associativity(p in quat(), q in quat(), r in quat()) {
            let l = (p * q) * r;
            prop_assert!(close(l, p * (q * r), 1e-11 * l.norm().max(1.0)));
        }

        #[test]
        fn modulus_is_q_times_conj(q in quat()) {
            let m = q * q.conj();
            prop_assert!((m.a - q.norm_sqr()).abs() <= 1e-14 * q.norm_sqr().max(1.0));
            prop_assert!(m.vector_norm() <= 1e-14 * q.norm_sqr().max(1.0));
        }

        #[test]
        fn conjugate_reverses_products(p in quat(), q in quat()) {
            let l = (p * q).conj();
            prop_assert!(close(l, q.conj() * p.conj(), 1e-12 * l.norm().max(1.0)));
        }

        #[test]
        fn identity_element(q in quat()) {
            prop_assert_eq!(q * Quaternion::ONE, q);
            prop_assert_eq!(Quaternion::ONE * q, q);
        }

        #[test]
        fn involution_matches_sandwich(q in quat()) {
            use Quaternion as Q;
            for (axis, u) in [(Axis::I, Q::I), (Axis::J, Q::J), (Axis::K, Q::K)] {
                let sandwich = -(u * q * u);
                prop_assert!(close(q.involution(axis), sandwich, 1e-13 * q.norm().max(1.0)));
                prop_assert_eq!(q.involution(axis).involution(axis), q);
            }
        }

        #[test]
        fn pure_unit_squares_to_minus_one(m in axis()) {
            let q = m.to_quaternion();
            prop_assert!(close(q * q, -Quaternion::ONE, 1e-12));
            prop_assert!(close(q * q * q, -q, 1e-12));
        }

        #[test]
        fn exp_has_unit_modulus(m in axis(), t in -20.0f64..20.0) {
            prop_assert!((exp_pure(m, t).norm() - 1.0).abs() < 1e-14);
        }

        #[test]
        fn complex_pair_round_trip(q in quat()) {
            prop_assert_eq!(q.to_pair().to_quaternion(), q);
            let p = q.to_pair();
            let rebuilt = Quaternion::from_cj(p.q1) + Quaternion::I * Quaternion::from_cj(p.q2);
            prop_assert!(close(rebuilt, q, 1e-14 * q.norm().max(1.0)));
        }
    }
}
