use crate::error::{Error, Result};
use crate::qft::QSpectrum;
use crate::quat::{exp_pure, PureUnitQuaternion, Quaternion};
use crate::spectral::{decompose_density, PolarizationDensity, PolarizationState};

use super::{check_half_grid, full_grid_bin};

/// Birefringence axis `μ`, birefringence angle `α` and phase `φ` of one bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitaryBin {
    pub mu: PureUnitQuaternion,
    pub alpha: f64,
    pub phi: f64,
}

impl UnitaryBin {
    pub fn new(mu: PureUnitQuaternion, alpha: f64, phi: f64) -> Result<Self> {
        if !(alpha.is_finite() && phi.is_finite()) {
            return Err(Error::invalid("unitary filter angles must be finite"));
        }
        Ok(Self { mu, alpha, phi })
    }

    pub fn identity() -> Self {
        Self {
            mu: PureUnitQuaternion::J,
            alpha: 0.0,
            phi: 0.0,
        }
    }

    /// `exp(μ α/2)`
    #[inline]
    pub fn left(&self) -> Quaternion {
        exp_pure(self.mu, 0.5 * self.alpha)
    }

    /// `exp(j φ)`
    #[inline]
    pub fn right(&self) -> Quaternion {
        exp_pure(PureUnitQuaternion::J, self.phi)
    }

    #[inline]
    pub fn apply(&self, x: Quaternion) -> Quaternion {
        self.left() * x * self.right()
    }

    /// Parameters at `−ν`: `μ → μ̄^i`, `α → α`, `φ → −φ`.
    pub fn mirrored(&self) -> Self {
        Self {
            mu: self.mu.involution_i(),
            alpha: self.alpha,
            phi: -self.phi,
        }
    }

    /// Rotation of the density by angle `α` about `μ` on the Poincaré sphere.
    pub fn map_state(&self, d: &PolarizationState) -> Result<PolarizationState> {
        let r = self.left();
        let mu = match d.mu {
            Some(mu) => {
                let rotated = r * mu.to_quaternion() * r.conj();
                Some(PureUnitQuaternion::from_vector_part(rotated)?)
            }
            None => None,
        };
        Ok(PolarizationState { mu, ..*d })
    }

    /// Same map as [`UnitaryBin::map_state`], on the quaternion density.
    pub fn map_density(&self, g: Quaternion) -> Result<PolarizationState> {
        let r = self.left();
        decompose_density(r * g * r.conj())
    }
}

/// Unitary filter on the nonnegative-frequency half grid.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryFilterParams {
    bins: Vec<UnitaryBin>,
}

impl UnitaryFilterParams {
    pub fn new(bins: Vec<UnitaryBin>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(Self { bins })
    }

    /// Same parameters at every nonnegative frequency of an `n`-point grid.
    pub fn constant(bin: UnitaryBin, n: usize) -> Self {
        Self {
            bins: vec![bin; crate::qft::half_len(n)],
        }
    }

    pub fn bins(&self) -> &[UnitaryBin] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Parameters for bin `k` of an `n`-point grid, after symmetry extension.
    pub fn at(&self, k: usize, n: usize) -> UnitaryBin {
        full_grid_bin(&self.bins, k, n, UnitaryBin::mirrored)
    }

    /// All `n` bins after symmetry extension.
    pub fn full_grid(&self, n: usize) -> Result<Vec<UnitaryBin>> {
        check_half_grid(self.len(), n)?;
        Ok((0..n).map(|k| self.at(k, n)).collect())
    }
}

pub fn apply_unitary(x: &QSpectrum, p: &UnitaryFilterParams) -> Result<QSpectrum> {
    let n = x.len();
    check_half_grid(p.len(), n)?;
    Ok(x.map(|k, q| p.at(k, n).apply(q)))
}

/// `Γ_yy = exp(μα/2) Γ_xx exp(−μα/2)`; total power and degree of
/// polarization are unchanged.
pub fn unitary_density_map(d: &PolarizationDensity, p: &UnitaryFilterParams) -> Result<PolarizationDensity> {
    let n = d.len();
    check_half_grid(p.len(), n)?;
    let bins = d
        .bins()
        .iter()
        .enumerate()
        .map(|(k, s)| p.at(k, n).map_state(s))
        .collect::<Result<Vec<_>>>()?;
    PolarizationDensity::new(bins, d.dt())
}
