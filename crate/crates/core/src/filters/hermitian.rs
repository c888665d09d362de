use crate::error::{Error, Result};
use crate::qft::{half_len, QSpectrum};
use crate::quat::{inner3, PureUnitQuaternion, Quaternion};
use crate::spectral::{decompose_rounded, PolarizationDensity, PolarizationState};

use super::{check_half_grid, full_grid_bin};

/// Relative rounding floor used when closed-form output densities cancel.
const CANCEL_FLOOR: f64 = 1e-12;

/// Homogeneous gain `K`, polarizing power `η` and diattenuation axis `μ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermitianBin {
    pub gain: f64,
    pub eta: f64,
    /// May be absent only when `η = 0`.
    pub mu: Option<PureUnitQuaternion>,
}

impl HermitianBin {
    pub fn new(gain: f64, eta: f64, mu: Option<PureUnitQuaternion>) -> Result<Self> {
        if !(gain.is_finite() && gain >= 0.0) {
            return Err(Error::invalid(format!("homogeneous gain must be nonnegative, got {gain}")));
        }
        if !(eta.is_finite() && (0.0..=1.0).contains(&eta)) {
            return Err(Error::invalid(format!("polarizing power must lie in [0, 1], got {eta}")));
        }
        if eta > 0.0 && mu.is_none() {
            return Err(Error::MissingAxis { bin: 0, eta });
        }
        Ok(Self { gain, eta, mu })
    }

    /// `Y = K X`
    pub fn scalar(gain: f64) -> Self {
        Self { gain, eta: 0.0, mu: None }
    }

    /// `η = 1`: projects every component onto the axis `μ`.
    pub fn polarizer(gain: f64, mu: PureUnitQuaternion) -> Self {
        Self {
            gain,
            eta: 1.0,
            mu: Some(mu),
        }
    }

    /// `η μ` as a pure quaternion.
    fn eta_mu(&self) -> Quaternion {
        match self.mu {
            Some(mu) => mu.to_quaternion().scale(self.eta),
            None => Quaternion::ZERO,
        }
    }

    /// `K [X − η μ X j]`
    #[inline]
    pub fn apply(&self, x: Quaternion) -> Quaternion {
        (x - self.eta_mu() * x * Quaternion::J).scale(self.gain)
    }

    /// Parameters at `−ν`, chosen so that outputs stay i-Hermitian:
    /// `K`, `η` unchanged, `μ → −μ̄^i`.
    pub fn mirrored(&self) -> Self {
        Self {
            mu: self.mu.map(PureUnitQuaternion::negative_frequency),
            ..*self
        }
    }

    /// Power gain `K² [1 + η² + 2 η Φx ⟨μ, μx⟩]`.
    pub fn power_gain(&self, input: &PolarizationState) -> f64 {
        let align = match (self.mu, input.mu) {
            (Some(a), Some(b)) => inner3(a, b),
            _ => 0.0,
        };
        self.gain * self.gain * (1.0 + self.eta * self.eta + 2.0 * self.eta * input.phi * align)
    }

    /// Output density as a quaternion:
    /// `S = S0 K² [1 + η² + 2ηΦx⟨μ, μx⟩]`,
    /// `V = S0 K² [2ημ + Φx (μx − η² μ μx μ)]`.
    pub fn output_quaternion(&self, input: &PolarizationState) -> Quaternion {
        let k2s0 = self.gain * self.gain * input.s0;
        let scalar = k2s0 * (1.0 + self.eta * self.eta);
        let mut out = Quaternion::scalar(scalar);
        if let Some(mu) = self.mu {
            out += mu.to_quaternion().scale(2.0 * self.eta * k2s0);
        }
        if let Some(mux) = input.mu {
            let m = mux.to_quaternion();
            let sandwiched = match self.mu {
                Some(mu) => {
                    let mq = mu.to_quaternion();
                    mq * m * mq
                }
                None => Quaternion::ZERO,
            };
            let v = m - sandwiched.scale(self.eta * self.eta);
            out += Quaternion::pure(v.vector_part()).scale(input.phi * k2s0);
            if let Some(mu) = self.mu {
                out.a += 2.0 * self.eta * input.phi * inner3(mu, mux) * k2s0;
            }
        }
        out
    }

    pub fn map_state(&self, input: &PolarizationState) -> Result<PolarizationState> {
        let floor = CANCEL_FLOOR * self.gain * self.gain * input.s0 * (1.0 + self.eta).powi(2);
        decompose_rounded(0, self.output_quaternion(input), floor)
    }
}

/// Hermitian filter on the nonnegative-frequency half grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianFilterParams {
    bins: Vec<HermitianBin>,
}

impl HermitianFilterParams {
    pub fn new(bins: Vec<HermitianBin>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::EmptyInput);
        }
        for (bin, b) in bins.iter().enumerate() {
            if b.eta > 0.0 && b.mu.is_none() {
                return Err(Error::MissingAxis { bin, eta: b.eta });
            }
        }
        Ok(Self { bins })
    }

    pub fn constant(bin: HermitianBin, n: usize) -> Self {
        Self {
            bins: vec![bin; half_len(n)],
        }
    }

    pub fn bins(&self) -> &[HermitianBin] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn at(&self, k: usize, n: usize) -> HermitianBin {
        full_grid_bin(&self.bins, k, n, HermitianBin::mirrored)
    }

    pub fn full_grid(&self, n: usize) -> Result<Vec<HermitianBin>> {
        check_half_grid(self.len(), n)?;
        Ok((0..n).map(|k| self.at(k, n)).collect())
    }
}

pub fn apply_hermitian(x: &QSpectrum, p: &HermitianFilterParams) -> Result<QSpectrum> {
    let n = x.len();
    check_half_grid(p.len(), n)?;
    Ok(x.map(|k, q| p.at(k, n).apply(q)))
}

/// Output density of the Hermitian filter for input density `d`.
pub fn hermitian_density_map(d: &PolarizationDensity, p: &HermitianFilterParams) -> Result<PolarizationDensity> {
    let n = d.len();
    check_half_grid(p.len(), n)?;
    let bins = d
        .bins()
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let f = p.at(k, n);
            let floor = CANCEL_FLOOR * f.gain * f.gain * s.s0 * (1.0 + f.eta).powi(2);
            decompose_rounded(k, f.output_quaternion(s), floor)
        })
        .collect::<Result<Vec<_>>>()?;
    PolarizationDensity::new(bins, d.dt())
}

/// Per-bin power gain `S0,y / S0,x`; `None` where the input has no power.
pub fn gain(d: &PolarizationDensity, p: &HermitianFilterParams) -> Result<Vec<Option<f64>>> {
    let n = d.len();
    check_half_grid(p.len(), n)?;
    Ok(d.bins()
        .iter()
        .enumerate()
        .map(|(k, s)| (s.s0 > 0.0).then(|| p.at(k, n).power_gain(s)))
        .collect())
}

/// `(K, η)` from the maximal and minimal power gains over input
/// polarizations: `2η/(1+η²) = (Gmax − Gmin)/(Gmax + Gmin)`,
/// `K² = (Gmax − Gmin)/(4η)`.
pub fn identify_from_gain_extrema(g_max: f64, g_min: f64) -> Result<(f64, f64)> {
    if !(g_max.is_finite() && g_min.is_finite()) || g_min < 0.0 || g_max <= 0.0 {
        return Err(Error::invalid(format!(
            "gain extrema must satisfy Gmax > 0 and Gmin >= 0, got ({g_max}, {g_min})"
        )));
    }
    if g_min > g_max {
        return Err(Error::invalid(format!("Gmin = {g_min} exceeds Gmax = {g_max}")));
    }
    let ratio = (g_max - g_min) / (g_max + g_min);
    let eta = polarizing_power(ratio);
    let k2 = if eta > 0.0 { (g_max - g_min) / (4.0 * eta) } else { g_max };
    Ok((k2.sqrt(), eta))
}

/// Root in `[0, 1]` of `2η/(1+η²) = r`, written as `r / (1 + √(1 − r²))`
/// (equal to `(1 − √(1 − r²))/r` without the cancellation).
fn polarizing_power(r: f64) -> f64 {
    let r = r.clamp(0.0, 1.0);
    r / (1.0 + (1.0 - r * r).sqrt())
}

/// Parameters of the Hermitian filter that turns unpolarized white noise of
/// density `σ0²` into a signal with attributes `target`.
pub fn identify_from_unpolarized_state(target: &PolarizationState, sigma0_sq: f64) -> Result<HermitianBin> {
    if !(sigma0_sq.is_finite() && sigma0_sq > 0.0) {
        return Err(Error::invalid(format!("noise density must be positive, got {sigma0_sq}")));
    }
    if target.phi > 1.0 {
        return Err(Error::invalid(format!("degree of polarization {} exceeds 1", target.phi)));
    }
    let eta = if target.mu.is_some() { polarizing_power(target.phi) } else { 0.0 };
    let k2 = target.s0 / (sigma0_sq * (1.0 + eta * eta));
    Ok(HermitianBin {
        gain: k2.sqrt(),
        eta,
        mu: if eta > 0.0 { target.mu } else { None },
    })
}

/// Identification from the output density `Γyy` of unpolarized white noise
/// with density `σ0²`; returns the nonnegative-frequency half grid.
pub fn identify_from_unpolarized_noise(gyy: &PolarizationDensity, sigma0_sq: f64) -> Result<HermitianFilterParams> {
    let bins = gyy
        .half()
        .iter()
        .map(|s| identify_from_unpolarized_state(s, sigma0_sq))
        .collect::<Result<Vec<_>>>()?;
    HermitianFilterParams::new(bins)
}
