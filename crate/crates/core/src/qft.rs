//! Discrete quaternion Fourier transform with right-sided kernel on axis `j`.
//!
//! For `x[n] = x1[n] + i x2[n]` the forward transform is
//! `X[k] = Σ_n x[n] exp(−j 2π k n / N) = X1[k] + i X2[k]` where `X1`, `X2`
//! are ordinary DFTs of the real channels read in `C_j`. The forward
//! transform is unnormalized, the inverse carries `1/N`. Bins are stored in
//! natural DFT order; bin `N − k` holds frequency `−ν_k`.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::quat::{Axis, ComplexPair, Quaternion};

/// Residual (j/k energy fraction) above which an inverse transform is not
/// considered a bivariate signal.
pub const BIVARIATE_RESIDUAL_TOL: f64 = 1e-8;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Uniformly sampled bivariate signal `x1 + i x2`.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateSignal {
    samples: Vec<[f64; 2]>,
    dt: f64,
}

impl BivariateSignal {
    pub fn new(samples: Vec<[f64; 2]>, dt: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("sample period must be positive, got {dt}")));
        }
        if let Some(index) = samples.iter().position(|s| !(s[0].is_finite() && s[1].is_finite())) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { samples, dt })
    }

    pub fn from_channels(x1: &[f64], x2: &[f64], dt: f64) -> Result<Self> {
        if x1.len() != x2.len() {
            return Err(Error::LengthMismatch {
                expected: x1.len(),
                found: x2.len(),
            });
        }
        Self::new(x1.iter().zip(x2).map(|(&a, &b)| [a, b]).collect(), dt)
    }

    pub fn zeros(n: usize, dt: f64) -> Result<Self> {
        Self::new(vec![[0.0; 2]; n], dt)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.dt
    }

    #[inline]
    pub fn samples(&self) -> &[[f64; 2]] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<[f64; 2]> {
        self.samples
    }

    pub fn with_dt(mut self, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("sample period must be positive, got {dt}")));
        }
        self.dt = dt;
        Ok(self)
    }

    /// Sample `n` as the quaternion `x1 + i x2`.
    #[inline]
    pub fn quaternion(&self, n: usize) -> Quaternion {
        let [x1, x2] = self.samples[n];
        Quaternion::new(x1, x2, 0.0, 0.0)
    }

    /// Keeps the first `n` samples.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        Self::new(self.samples[..n.min(self.len())].to_vec(), self.dt)
    }

    /// Sum of squared moduli (no `dt` factor).
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s[0] * s[0] + s[1] * s[1]).sum()
    }

    /// Mean squared modulus per sample.
    pub fn mean_power(&self) -> f64 {
        self.energy() / self.len() as f64
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| [f(a[0], b[0]), f(a[1], b[1])])
            .collect();
        Self::new(samples, self.dt)
    }
}

/// Quaternion-valued spectrum on the `N`-point DFT grid.
#[derive(Debug, Clone, PartialEq)]
pub struct QSpectrum {
    bins: Vec<Quaternion>,
    dt: f64,
}

impl QSpectrum {
    pub fn new(bins: Vec<Quaternion>, dt: f64) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("sample period must be positive, got {dt}")));
        }
        Ok(Self { bins, dt })
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
    pub fn bins(&self) -> &[Quaternion] {
        &self.bins
    }

    #[inline]
    pub fn bins_mut(&mut self) -> &mut [Quaternion] {
        &mut self.bins
    }

    pub fn into_bins(self) -> Vec<Quaternion> {
        self.bins
    }

    /// Signed frequency of bin `k`.
    pub fn frequency(&self, k: usize) -> f64 {
        bin_frequency(k, self.len(), self.dt)
    }

    /// Largest violation of `X[N−k] = X̄[k]^i`, relative to the largest bin.
    pub fn symmetry_violation(&self) -> f64 {
        let n = self.len();
        let scale = self.bins.iter().map(|q| q.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        (0..n)
            .map(|k| self.bins[(n - k) % n].max_abs_diff(self.bins[k].involution(Axis::I)))
            .fold(0.0, f64::max)
            / scale
    }

    /// Bin-wise map producing a new spectrum on the same grid.
    pub fn map(&self, mut f: impl FnMut(usize, Quaternion) -> Quaternion) -> Self {
        Self {
            bins: self.bins.iter().enumerate().map(|(k, &q)| f(k, q)).collect(),
            dt: self.dt,
        }
    }
}

/// Signed DFT frequency `k/(N dt)`, upper half mapped to negative values.
pub fn bin_frequency(k: usize, n: usize, dt: f64) -> f64 {
    let k = k as f64;
    let nf = n as f64;
    if 2.0 * k <= nf {
        k / (nf * dt)
    } else {
        (k - nf) / (nf * dt)
    }
}

/// Index of the mirrored frequency `−ν_k`.
#[inline]
pub fn mirror_bin(k: usize, n: usize) -> usize {
    (n - k) % n
}

/// Number of bins with `ν ≥ 0`: `N/2 + 1`.
#[inline]
pub fn half_len(n: usize) -> usize {
    n / 2 + 1
}

pub fn qft_forward(x: &BivariateSignal) -> Result<QSpectrum> {
    let n = x.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    // Both real channels packed into one complex sequence z = x1 + ι x2 and
    // separated using the conjugate symmetry of real-input DFTs.
    let mut z: Vec<Complex64> = x.samples().iter().map(|s| Complex64::new(s[0], s[1])).collect();
    plan(n, false).process(&mut z);
    let bins = (0..n)
        .map(|k| {
            let zk = z[k];
            let zm = z[mirror_bin(k, n)].conj();
            let x1 = (zk + zm) * 0.5;
            // (zk − zm) / (2ι)
            let d = (zk - zm) * 0.5;
            let x2 = Complex64::new(d.im, -d.re);
            ComplexPair::new(x1, x2).to_quaternion()
        })
        .collect();
    QSpectrum::new(bins, x.dt())
}

/// Result of an inverse transform.
#[derive(Debug, Clone)]
pub struct InverseQft {
    /// Scalar and `i` components of the inverse, i.e. `(x1, x2)`.
    pub signal: BivariateSignal,
    /// Energy in the `j`/`k` components relative to the total.
    pub residual_fraction: f64,
}

impl InverseQft {
    /// False when the spectrum was not i-Hermitian symmetric ("non-bivariate
    /// output"); the caller decides whether to keep the projected signal.
    pub fn is_bivariate(&self) -> bool {
        self.residual_fraction <= BIVARIATE_RESIDUAL_TOL
    }
}

pub fn qft_inverse(spectrum: &QSpectrum) -> Result<InverseQft> {
    let n = spectrum.len();
    let mut c1: Vec<Complex64> = Vec::with_capacity(n);
    let mut c2: Vec<Complex64> = Vec::with_capacity(n);
    for q in spectrum.bins() {
        let p = q.to_pair();
        c1.push(p.q1);
        c2.push(p.q2);
    }
    let ifft = plan(n, true);
    ifft.process(&mut c1);
    ifft.process(&mut c2);
    let scale = 1.0 / n as f64;
    let mut kept = 0.0;
    let mut dropped = 0.0;
    let samples = c1
        .iter()
        .zip(&c2)
        .map(|(a, b)| {
            let (a, b) = (a * scale, b * scale);
            kept += a.re * a.re + b.re * b.re;
            dropped += a.im * a.im + b.im * b.im;
            [a.re, b.re]
        })
        .collect();
    let total = kept + dropped;
    let residual_fraction = if total > 0.0 { dropped / total } else { 0.0 };
    Ok(InverseQft {
        signal: BivariateSignal::new(samples, spectrum.dt())?,
        residual_fraction,
    })
}

/// Energy and polarization invariants of a bivariate signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParsevalInvariants {
    /// `Σ |x[n]|² dt`
    pub energy: f64,
    /// `Σ x[n] j x̄[n] dt`, a pure quaternion given as `(i, j, k)`.
    pub polar: [f64; 3],
}

pub fn parseval_invariants(x: &BivariateSignal) -> ParsevalInvariants {
    let mut energy = 0.0;
    let mut polar = Quaternion::ZERO;
    for n in 0..x.len() {
        let q = x.quaternion(n);
        energy += q.norm_sqr();
        polar += q * Quaternion::J * q.conj();
    }
    ParsevalInvariants {
        energy: energy * x.dt(),
        polar: polar.scale(x.dt()).vector_part(),
    }
}

/// Frequency-domain counterparts `Σ |X[k]|² dt/N` and `Σ X[k] j X̄[k] dt/N`.
pub fn spectral_invariants(spectrum: &QSpectrum) -> ParsevalInvariants {
    let mut energy = 0.0;
    let mut polar = Quaternion::ZERO;
    for &q in spectrum.bins() {
        energy += q.norm_sqr();
        polar += q * Quaternion::J * q.conj();
    }
    let s = spectrum.dt() / spectrum.len() as f64;
    ParsevalInvariants {
        energy: energy * s,
        polar: polar.scale(s).vector_part(),
    }
}
