//! Quaternion spectral densities `Γ = S0 + Φ S0 μ`, their polarization
//! attributes, Stokes parameters and the periodogram estimator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::qft::{self, bin_frequency, half_len, mirror_bin, BivariateSignal, QSpectrum};
use crate::quat::{PureUnitQuaternion, Quaternion};

/// Degree of polarization below which no axis is reported.
pub const EPS_POL: f64 = 1e-12;

/// Relative slack allowed on `|V(Γ)| ≤ S(Γ)` before a density is rejected.
pub const PHYSICAL_TOL: f64 = 1e-9;

/// Polarization attributes `(S0, Φ, μ)` of one frequency bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState {
    pub s0: f64,
    pub phi: f64,
    /// Absent when `Φ < EPS_POL`.
    pub mu: Option<PureUnitQuaternion>,
}

impl PolarizationState {
    pub const ZERO: Self = Self {
        s0: 0.0,
        phi: 0.0,
        mu: None,
    };

    pub fn unpolarized(s0: f64) -> Self {
        Self { s0, phi: 0.0, mu: None }
    }

    /// Validated constructor. An axis is needed whenever `phi ≥ EPS_POL`;
    /// it is dropped below that.
    pub fn new(s0: f64, phi: f64, mu: Option<PureUnitQuaternion>) -> Result<Self> {
        if !(s0.is_finite() && s0 >= 0.0) {
            return Err(Error::invalid(format!("S0 must be nonnegative, got {s0}")));
        }
        if !(phi.is_finite() && (0.0..=1.0).contains(&phi)) {
            return Err(Error::invalid(format!("Phi must lie in [0, 1], got {phi}")));
        }
        if phi < EPS_POL {
            return Ok(Self::unpolarized(s0));
        }
        match mu {
            Some(mu) => Ok(Self { s0, phi, mu: Some(mu) }),
            None => Err(Error::invalid(format!("Phi = {phi} requires a polarization axis"))),
        }
    }

    /// `Φ μ` as `(i, j, k)` components, zero when unpolarized.
    pub fn polarization_vector(&self) -> [f64; 3] {
        match self.mu {
            Some(mu) => mu.components().map(|c| c * self.phi),
            None => [0.0; 3],
        }
    }

    /// `Φ μ` as a pure quaternion.
    pub fn polarization_quaternion(&self) -> Quaternion {
        Quaternion::pure(self.polarization_vector())
    }

    pub fn to_quaternion(&self) -> Quaternion {
        Quaternion::scalar(self.s0) + self.polarization_quaternion().scale(self.s0)
    }

    /// Attributes at `−ν` for the density of a real bivariate signal.
    pub fn negative_frequency(&self) -> Self {
        Self {
            mu: self.mu.map(PureUnitQuaternion::negative_frequency),
            ..*self
        }
    }

    /// Mean of the state and its `−ν` image: the `i` component of `Φ μ` is
    /// dropped. Bins that are their own mirror (DC, even-length Nyquist)
    /// can only carry such states.
    pub fn symmetrized(&self) -> Self {
        let [_, vj, vk] = self.polarization_vector();
        let phi = (vj * vj + vk * vk).sqrt();
        match PureUnitQuaternion::new([0.0, vj, vk]) {
            Ok(mu) if phi >= EPS_POL => Self {
                s0: self.s0,
                phi: phi.min(1.0),
                mu: Some(mu),
            },
            _ => Self::unpolarized(self.s0),
        }
    }

    /// `⟨μ_self, μ_other⟩`, taken as 0 if either axis is absent.
    pub fn alignment(&self, other: &Self) -> f64 {
        match (self.mu, other.mu) {
            (Some(a), Some(b)) => crate::quat::inner3(a, b),
            _ => 0.0,
        }
    }
}

/// Splits `Γ` into `(S0, Φ, μ)`.
pub fn decompose_density(g: Quaternion) -> Result<PolarizationState> {
    decompose_at(0, g)
}

pub(crate) fn decompose_at(bin: usize, g: Quaternion) -> Result<PolarizationState> {
    let s0 = g.scalar_part();
    if !g.is_finite() {
        return Err(Error::NonPhysicalDensity {
            bin,
            reason: "non-finite value".into(),
        });
    }
    if s0 < 0.0 {
        return Err(Error::NonPhysicalDensity {
            bin,
            reason: format!("negative total power {s0:e}"),
        });
    }
    let v = g.vector_norm();
    if v > s0 * (1.0 + PHYSICAL_TOL) {
        return Err(Error::NonPhysicalDensity {
            bin,
            reason: format!("|V| = {v:e} exceeds S0 = {s0:e}"),
        });
    }
    if s0 == 0.0 {
        return Ok(PolarizationState::ZERO);
    }
    let phi = (v / s0).min(1.0);
    if phi < EPS_POL {
        return Ok(PolarizationState::unpolarized(s0));
    }
    let mu = PureUnitQuaternion::from_vector_part(g)?;
    Ok(PolarizationState { s0, phi, mu: Some(mu) })
}

/// Like [`decompose_density`] for densities computed in closed form, where
/// cancellations leave absolute rounding of order `floor` in both parts.
pub(crate) fn decompose_rounded(bin: usize, g: Quaternion, floor: f64) -> Result<PolarizationState> {
    let mut g = g;
    if g.a < 0.0 && g.a >= -floor {
        g.a = 0.0;
    }
    let v = g.vector_norm();
    if v > g.a * (1.0 + PHYSICAL_TOL) && v <= g.a + floor {
        if g.a <= floor {
            return Ok(PolarizationState::unpolarized(g.a));
        }
        g = Quaternion::scalar(g.a) + Quaternion::pure(g.vector_part()).scale(g.a / v);
    }
    decompose_at(bin, g)
}

/// Per-bin Stokes parameters, related to the density by
/// `S0 Φ μ = i S3 + j S1 + k S2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesParams {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesParams {
    pub fn from_state(d: &PolarizationState) -> Self {
        let [vi, vj, vk] = d.polarization_vector();
        Self {
            s0: d.s0,
            s1: d.s0 * vj,
            s2: d.s0 * vk,
            s3: d.s0 * vi,
        }
    }

    pub fn to_state(&self) -> Result<PolarizationState> {
        decompose_density(self.to_quaternion())
    }

    pub fn to_quaternion(&self) -> Quaternion {
        Quaternion::new(self.s0, self.s3, self.s1, self.s2)
    }

    /// `(s1, s2, s3) / S0`, the Cartesian point inside the Poincaré ball.
    pub fn normalized(&self) -> [f64; 3] {
        if self.s0 == 0.0 {
            [0.0; 3]
        } else {
            [self.s1 / self.s0, self.s2 / self.s0, self.s3 / self.s0]
        }
    }
}

/// Spherical Poincaré coordinates: radius `Φ` and angles `2θ`, `2χ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareCoords {
    pub phi: f64,
    pub two_theta: f64,
    pub two_chi: f64,
}

impl PoincareCoords {
    pub fn from_state(d: &PolarizationState) -> Self {
        match d.mu {
            Some(mu) => {
                let (theta, chi) = mu.ellipse();
                Self {
                    phi: d.phi,
                    two_theta: 2.0 * theta,
                    two_chi: 2.0 * chi,
                }
            }
            None => Self {
                phi: 0.0,
                two_theta: 0.0,
                two_chi: 0.0,
            },
        }
    }
}

/// Polarization attributes over the full `N`-point DFT grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationDensity {
    bins: Vec<PolarizationState>,
    dt: f64,
}

impl PolarizationDensity {
    pub fn new(bins: Vec<PolarizationState>, dt: f64) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("sample period must be positive, got {dt}")));
        }
        Ok(Self { bins, dt })
    }

    pub fn from_quaternions(g: &[Quaternion], dt: f64) -> Result<Self> {
        let bins = g
            .iter()
            .enumerate()
            .map(|(k, &q)| decompose_at(k, q))
            .collect::<Result<Vec<_>>>()?;
        Self::new(bins, dt)
    }

    /// Full grid from the `N/2 + 1` bins with `ν ≥ 0`, filling `−ν` with
    /// [`PolarizationState::negative_frequency`].
    pub fn from_half(half: &[PolarizationState], n: usize, dt: f64) -> Result<Self> {
        if half.len() != half_len(n) {
            return Err(Error::GridMismatch(format!(
                "{} nonnegative-frequency bins do not describe a {n}-point grid",
                half.len()
            )));
        }
        let bins = (0..n)
            .map(|k| {
                if k < half.len() {
                    half[k]
                } else {
                    half[mirror_bin(k, n)].negative_frequency()
                }
            })
            .collect();
        Self::new(bins, dt)
    }

    /// Constant density on an `n`-point grid.
    pub fn flat(state: PolarizationState, n: usize, dt: f64) -> Result<Self> {
        Self::from_half(&vec![state; half_len(n)], n, dt)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.dt
    }

    #[inline]
    pub fn bins(&self) -> &[PolarizationState] {
        &self.bins
    }

    /// Bins with `ν ≥ 0`.
    pub fn half(&self) -> &[PolarizationState] {
        &self.bins[..half_len(self.len())]
    }

    pub fn frequency(&self, k: usize) -> f64 {
        bin_frequency(k, self.len(), self.dt)
    }

    /// Frequency spacing `1/(N dt)`.
    pub fn resolution(&self) -> f64 {
        1.0 / (self.len() as f64 * self.dt)
    }

    pub fn to_quaternions(&self) -> Vec<Quaternion> {
        self.bins.iter().map(PolarizationState::to_quaternion).collect()
    }

    pub fn stokes(&self) -> Vec<StokesParams> {
        self.bins.iter().map(StokesParams::from_state).collect()
    }

    pub fn poincare(&self) -> Vec<PoincareCoords> {
        self.bins.iter().map(PoincareCoords::from_state).collect()
    }

    /// `Σ S0 Δν`, the average power.
    pub fn total_power(&self) -> f64 {
        self.bins.iter().map(|b| b.s0).sum::<f64>() * self.resolution()
    }

    pub(crate) fn check_len(&self, n: usize, what: &str) -> Result<()> {
        if self.len() != n {
            return Err(Error::GridMismatch(format!(
                "{what} has {} bins, expected {n}",
                self.len()
            )));
        }
        Ok(())
    }
}

/// Bin-wise quaternion sum of two densities on the same grid.
pub fn add_densities(a: &PolarizationDensity, b: &PolarizationDensity) -> Result<PolarizationDensity> {
    b.check_len(a.len(), "second density")?;
    let g: Vec<Quaternion> = a
        .bins()
        .iter()
        .zip(b.bins())
        .map(|(x, y)| x.to_quaternion() + y.to_quaternion())
        .collect();
    PolarizationDensity::from_quaternions(&g, a.dt())
}

/// Periodogram `(|X[k]|² + X[k] j X̄[k]) dt / N`.
pub fn density_from_spectrum(x: &QSpectrum) -> Vec<Quaternion> {
    let s = x.dt() / x.len() as f64;
    x.bins()
        .iter()
        .map(|&q| (Quaternion::scalar(q.norm_sqr()) + q * Quaternion::J * q.conj()).scale(s))
        .collect()
}

/// Unpolarized part `(1 − Φ) S0` and fully polarized part `Φ S0 (1 + μ)`.
pub fn up_split(d: &PolarizationState) -> (PolarizationState, PolarizationState) {
    let unpolarized = PolarizationState::unpolarized((1.0 - d.phi) * d.s0);
    let polarized = match d.mu {
        Some(mu) if d.s0 * d.phi > 0.0 => PolarizationState {
            s0: d.phi * d.s0,
            phi: 1.0,
            mu: Some(mu),
        },
        _ => PolarizationState::ZERO,
    };
    (unpolarized, polarized)
}

/// [`up_split`] over a whole grid.
pub fn up_split_density(d: &PolarizationDensity) -> (PolarizationDensity, PolarizationDensity) {
    let (u, p): (Vec<_>, Vec<_>) = d.bins().iter().map(up_split).unzip();
    (
        PolarizationDensity { bins: u, dt: d.dt },
        PolarizationDensity { bins: p, dt: d.dt },
    )
}

/// Averaged raw periodogram over realizations.
pub fn estimate_density(realizations: &[BivariateSignal]) -> Result<PolarizationDensity> {
    estimate_density_with(realizations, Execution::default())
}

pub fn estimate_density_with(
    realizations: &[BivariateSignal],
    exec: Execution,
) -> Result<PolarizationDensity> {
    let mean = mean_periodogram(realizations, exec)?;
    PolarizationDensity::from_quaternions(&mean, realizations[0].dt())
}

/// Realization average of [`density_from_spectrum`], before decomposition.
pub fn mean_periodogram(realizations: &[BivariateSignal], exec: Execution) -> Result<Vec<Quaternion>> {
    let first = realizations.first().ok_or(Error::EmptyInput)?;
    let n = first.len();
    if let Some(bad) = realizations.iter().find(|x| x.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            found: bad.len(),
        });
    }
    let rows = par::map_slice(realizations, exec, |x| {
        qft::qft_forward(x).map(|spec| density_from_spectrum(&spec))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let r = rows.len() as f64;
    let sum = par::pairwise_sum(rows).ok_or(Error::EmptyInput)?;
    Ok(sum.into_iter().map(|q| q.scale(1.0 / r)).collect())
}
