//! Wiener denoising of `y = x + w` in the QFT domain and its minimum mean
//! squared error.

use crate::error::{Error, Result};
use crate::qft::{qft_forward, qft_inverse, BivariateSignal, QSpectrum};
use crate::quat::Quaternion;
use crate::spectral::{add_densities, PolarizationDensity, PolarizationState};

/// Smallest `1 − Φy²` used before regularizing.
pub const MIN_DEPOLARIZATION: f64 = 1e-12;
/// Value `Φy` is clamped to when `1 − Φy² < MIN_DEPOLARIZATION`.
pub const PHI_CLAMP: f64 = 1.0 - 1e-9;

/// Known signal and noise densities of `y = x + w` with `x`, `w`
/// independent.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoisingProblem {
    signal: PolarizationDensity,
    noise: PolarizationDensity,
    observation: PolarizationDensity,
}

impl DenoisingProblem {
    pub fn new(signal: PolarizationDensity, noise: PolarizationDensity) -> Result<Self> {
        if (signal.dt() - noise.dt()).abs() > 1e-12 * signal.dt() {
            return Err(Error::GridMismatch(format!(
                "signal density has dt = {}, noise density has dt = {}",
                signal.dt(),
                noise.dt()
            )));
        }
        let observation = add_densities(&signal, &noise)?;
        Ok(Self {
            signal,
            noise,
            observation,
        })
    }

    pub fn signal(&self) -> &PolarizationDensity {
        &self.signal
    }

    pub fn noise(&self) -> &PolarizationDensity {
        &self.noise
    }

    pub fn observation(&self) -> &PolarizationDensity {
        &self.observation
    }

    pub fn len(&self) -> usize {
        self.signal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signal.is_empty()
    }
}

/// Wiener filter at one bin, `X̂ = left · Y − axis · Y j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WienerBin {
    /// `g (1 + Φx Φy μx μy)` with `g = S0,x / (S0,y (1 − Φy²))`.
    pub left: Quaternion,
    /// `g (Φx μx − Φy μy)`, a pure quaternion.
    pub axis: Quaternion,
    /// `Φy` was clamped to [`PHI_CLAMP`].
    pub regularized: bool,
}

impl WienerBin {
    /// Composition of the two Hermitian stages `Pyy⁻¹` and `Pxx`. Its
    /// Hermitian part has the scalar left factor `g (1 − Φx Φy ⟨μx, μy⟩)`;
    /// the remaining `g Φx Φy (μx × μy)` term vanishes when the signal and
    /// observation axes are parallel.
    pub fn new(x: &PolarizationState, y: &PolarizationState) -> Self {
        if y.s0 <= 0.0 {
            return Self {
                left: Quaternion::ZERO,
                axis: Quaternion::ZERO,
                regularized: false,
            };
        }
        let (phi_y, regularized) = clamp_phi(y.phi);
        let py = y.polarization_quaternion().scale(if y.phi > 0.0 { phi_y / y.phi } else { 0.0 });
        let px = x.polarization_quaternion();
        let g = x.s0 / (y.s0 * (1.0 - phi_y * phi_y));
        Self {
            left: (Quaternion::ONE + px * py).scale(g),
            axis: (px - py).scale(g),
            regularized,
        }
    }

    #[inline]
    pub fn apply(&self, y: Quaternion) -> Quaternion {
        self.left * y - self.axis * y * Quaternion::J
    }

    /// Hermitian part of the filter: `left` replaced by its scalar part.
    pub fn hermitian_part(&self) -> Self {
        Self {
            left: Quaternion::scalar(self.left.a),
            ..*self
        }
    }
}

fn clamp_phi(phi: f64) -> (f64, bool) {
    if 1.0 - phi * phi < MIN_DEPOLARIZATION {
        (phi.min(PHI_CLAMP), true)
    } else {
        (phi, false)
    }
}

/// Filtered spectrum and the bins where `Φy` had to be regularized.
#[derive(Debug, Clone)]
pub struct WienerOutput {
    pub spectrum: QSpectrum,
    pub regularized_bins: Vec<usize>,
}

pub fn wiener_apply(y: &QSpectrum, prob: &DenoisingProblem) -> Result<WienerOutput> {
    prob.signal.check_len(y.len(), "signal density")?;
    let mut regularized_bins = Vec::new();
    let bins = y
        .bins()
        .iter()
        .enumerate()
        .map(|(k, &yk)| {
            let w = WienerBin::new(&prob.signal.bins()[k], &prob.observation.bins()[k]);
            if w.regularized {
                regularized_bins.push(k);
            }
            w.apply(yk)
        })
        .collect();
    Ok(WienerOutput {
        spectrum: QSpectrum::new(bins, y.dt())?,
        regularized_bins,
    })
}

/// Wiener filter for unpolarized noise of density `sigma2[k]`, written with
/// the per-bin SNR `α = S0,x/σ²`.
pub fn wiener_unpolarized_noise(y: &QSpectrum, signal: &PolarizationDensity, sigma2: &[f64]) -> Result<QSpectrum> {
    signal.check_len(y.len(), "signal density")?;
    if sigma2.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            found: sigma2.len(),
        });
    }
    if let Some(k) = sigma2.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::invalid(format!("noise density must be positive, got {} at bin {k}", sigma2[k])));
    }
    let bins = y
        .bins()
        .iter()
        .zip(signal.bins())
        .zip(sigma2)
        .map(|((&yk, x), &s2)| {
            let alpha = x.s0 / s2;
            let depol = 1.0 - x.phi * x.phi;
            let scale = (alpha + alpha * alpha * depol) / (1.0 + 2.0 * alpha + alpha * alpha * depol);
            let axis = x.polarization_quaternion().scale(1.0 / (1.0 + alpha * depol));
            (yk - axis * yk * Quaternion::J).scale(scale)
        })
        .collect();
    QSpectrum::new(bins, y.dt())
}

/// Per-bin optimal error and its frequency integral, from the
/// signal/observation form and from the signal/noise form.
#[derive(Debug, Clone, PartialEq)]
pub struct MmseReport {
    pub per_bin: Vec<f64>,
    pub per_bin_noise_form: Vec<f64>,
    /// `Σ ε(ν_k) Δν`
    pub total: f64,
    pub total_noise_form: f64,
}

/// `S0,x (1 − (S0,x/S0,y)(1 + Φx² − 2ΦxΦy⟨μx, μy⟩)/(1 − Φy²))`
pub fn mmse_bin(x: &PolarizationState, y: &PolarizationState) -> f64 {
    if y.s0 <= 0.0 || x.s0 <= 0.0 {
        return 0.0;
    }
    let (phi_y, _) = clamp_phi(y.phi);
    let num = 1.0 + x.phi * x.phi - 2.0 * x.phi * phi_y * x.alignment(y);
    let e = x.s0 * (1.0 - (x.s0 / y.s0) * num / (1.0 - phi_y * phi_y));
    e.clamp(0.0, x.s0)
}

/// `S0,x (1 − Φw² + α(1 − Φx²)) / (1 − Φw² + α²(1 − Φx²) + 2α(1 − ΦxΦw⟨μx, μw⟩))`
/// with `α = S0,x / S0,w`.
pub fn mmse_bin_noise_form(x: &PolarizationState, w: &PolarizationState) -> f64 {
    if x.s0 <= 0.0 || w.s0 <= 0.0 {
        return 0.0;
    }
    let alpha = x.s0 / w.s0;
    let depol_x = 1.0 - x.phi * x.phi;
    let depol_w = 1.0 - w.phi * w.phi;
    let cross = 1.0 - x.phi * w.phi * x.alignment(w);
    let den = depol_w + alpha * alpha * depol_x + 2.0 * alpha * cross;
    if den <= 0.0 {
        return 0.0;
    }
    x.s0 * (depol_w + alpha * depol_x) / den
}

pub fn mmse(prob: &DenoisingProblem) -> MmseReport {
    let per_bin: Vec<f64> = prob
        .signal
        .bins()
        .iter()
        .zip(prob.observation.bins())
        .map(|(x, y)| mmse_bin(x, y))
        .collect();
    let per_bin_noise_form: Vec<f64> = prob
        .signal
        .bins()
        .iter()
        .zip(prob.noise.bins())
        .map(|(x, w)| mmse_bin_noise_form(x, w))
        .collect();
    let df = prob.signal.resolution();
    MmseReport {
        total: per_bin.iter().sum::<f64>() * df,
        total_noise_form: per_bin_noise_form.iter().sum::<f64>() * df,
        per_bin,
        per_bin_noise_form,
    }
}

/// Time-domain estimate of `x` from `y`.
#[derive(Debug, Clone)]
pub struct Denoised {
    pub signal: BivariateSignal,
    pub regularized_bins: Vec<usize>,
    /// j/k energy fraction dropped by the inverse transform.
    pub residual_fraction: f64,
}

pub fn denoise(y: &BivariateSignal, prob: &DenoisingProblem) -> Result<Denoised> {
    prob.signal.check_len(y.len(), "signal density")?;
    let out = wiener_apply(&qft_forward(y)?, prob)?;
    let inv = qft_inverse(&out.spectrum)?;
    Ok(Denoised {
        signal: inv.signal,
        regularized_bins: out.regularized_bins,
        residual_fraction: inv.residual_fraction,
    })
}

/// `10 log10(‖x‖² / ‖x̂ − x‖²)`; infinite for a perfect estimate.
pub fn reconstruction_snr_db(x: &BivariateSignal, estimate: &BivariateSignal) -> Result<f64> {
    let err = estimate.sub(x)?.energy();
    Ok(10.0 * (x.energy() / err).log10())
}

/// `10 log10(P_x / P_w)`
pub fn snr_db(signal_power: f64, noise_power: f64) -> f64 {
    10.0 * (signal_power / noise_power).log10()
}
