//! Bivariate white noise and spectral synthesis of Gaussian stationary
//! bivariate signals with a prescribed quaternion spectral density.
//!
//! Synthesis filters `M ≥ N` samples of unpolarized white noise with the
//! Hermitian filter identified from the target density, then keeps the
//! first `N` samples of the inverse transform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::filters::{identify_from_unpolarized_state, HermitianBin};
use crate::par::{self, Execution};
use crate::qft::{half_len, mirror_bin, qft_forward, qft_inverse, BivariateSignal, QSpectrum};
use crate::quat::Quaternion;
use crate::spectral::{decompose_density, PolarizationDensity, PolarizationState};

/// Largest j/k energy fraction tolerated in a synthesized realization.
pub const SYNTHESIS_RESIDUAL_TOL: f64 = 1e-10;

/// Second-order description of i.i.d. Gaussian bivariate noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WhiteNoiseSpec {
    /// Channel standard deviations and their correlation coefficient.
    Channels { sigma_u: f64, sigma_v: f64, rho: f64 },
    /// Total variance `s0`, degree of polarization `phi` and orientation
    /// `theta` of the linearly polarized part.
    Polarized { s0: f64, phi: f64, theta: f64 },
}

impl WhiteNoiseSpec {
    /// Proper noise with total variance `variance` split evenly over the two
    /// channels.
    pub fn unpolarized(variance: f64) -> Self {
        let s = (0.5 * variance).sqrt();
        WhiteNoiseSpec::Channels {
            sigma_u: s,
            sigma_v: s,
            rho: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            WhiteNoiseSpec::Channels { sigma_u, sigma_v, rho } => {
                if !(sigma_u.is_finite() && sigma_u >= 0.0 && sigma_v.is_finite() && sigma_v >= 0.0) {
                    return Err(Error::invalid(format!(
                        "channel standard deviations must be nonnegative, got ({sigma_u}, {sigma_v})"
                    )));
                }
                if !(rho.is_finite() && rho.abs() <= 1.0) {
                    return Err(Error::invalid(format!("channel correlation must lie in [-1, 1], got {rho}")));
                }
            }
            WhiteNoiseSpec::Polarized { s0, phi, theta } => {
                if !(s0.is_finite() && s0 > 0.0) {
                    return Err(Error::invalid(format!("noise power must be positive, got {s0}")));
                }
                if !(phi.is_finite() && (0.0..=1.0).contains(&phi)) {
                    return Err(Error::invalid(format!("Phi must lie in [0, 1], got {phi}")));
                }
                if !(theta.is_finite() && theta.abs() <= 0.5 * PI + 1e-12) {
                    return Err(Error::invalid(format!("orientation must lie in [-pi/2, pi/2], got {theta}")));
                }
            }
        }
        Ok(())
    }

    /// Per-sample moments `E|w|² + E[w j w̄]`.
    pub fn moments(&self) -> Quaternion {
        match *self {
            WhiteNoiseSpec::Channels { sigma_u, sigma_v, rho } => Quaternion::new(
                sigma_u * sigma_u + sigma_v * sigma_v,
                0.0,
                sigma_u * sigma_u - sigma_v * sigma_v,
                2.0 * rho * sigma_u * sigma_v,
            ),
            WhiteNoiseSpec::Polarized { s0, phi, theta } => {
                let (s, c) = (2.0 * theta).sin_cos();
                Quaternion::new(s0, 0.0, phi * s0 * c, phi * s0 * s)
            }
        }
    }

    /// Flat spectral density of the noise sampled every `dt`.
    pub fn expected_density(&self, dt: f64) -> Result<PolarizationState> {
        decompose_density(self.moments().scale(dt))
    }
}

/// Generator for realization `stream` of the run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `n` samples of white noise with unit sample period.
pub fn white_noise(spec: &WhiteNoiseSpec, n: usize, seed: u64) -> Result<BivariateSignal> {
    white_noise_stream(spec, n, 1.0, seed, 0)
}

pub fn white_noise_stream(spec: &WhiteNoiseSpec, n: usize, dt: f64, seed: u64, stream: u64) -> Result<BivariateSignal> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let mut rng = stream_rng(seed, stream);
    let mut g = || -> f64 { StandardNormal.sample(&mut rng) };
    let samples = match *spec {
        WhiteNoiseSpec::Channels { sigma_u, sigma_v, rho } => {
            let rest = (1.0 - rho * rho).max(0.0).sqrt();
            (0..n)
                .map(|_| {
                    let (g1, g2) = (g(), g());
                    [sigma_u * g1, sigma_v * (rho * g1 + rest * g2)]
                })
                .collect()
        }
        WhiteNoiseSpec::Polarized { s0, phi, theta } => {
            let unpol = ((1.0 - phi) * s0).sqrt() * std::f64::consts::FRAC_1_SQRT_2;
            let pol = (phi * s0).sqrt();
            let (st, ct) = theta.sin_cos();
            (0..n)
                .map(|_| {
                    let (u1, u2, p) = (g(), g(), g());
                    [unpol * u1 + pol * ct * p, unpol * u2 + pol * st * p]
                })
                .collect()
        }
    };
    BivariateSignal::new(samples, dt)
}

/// Target density on a set of nonnegative frequencies, looked up by
/// nearest frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisTarget {
    nu: Vec<f64>,
    states: Vec<PolarizationState>,
}

impl SynthesisTarget {
    pub fn new(nu: Vec<f64>, states: Vec<PolarizationState>) -> Result<Self> {
        if nu.is_empty() {
            return Err(Error::EmptyInput);
        }
        if nu.len() != states.len() {
            return Err(Error::LengthMismatch {
                expected: nu.len(),
                found: states.len(),
            });
        }
        if nu.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
            return Err(Error::invalid("target frequencies must be finite and nonnegative"));
        }
        if nu.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("target frequencies must be strictly increasing"));
        }
        for s in &states {
            if !(s.s0.is_finite() && s.s0 >= 0.0) || !(0.0..=1.0).contains(&s.phi) {
                return Err(Error::invalid(format!(
                    "target state (S0 = {}, Phi = {}) is not a valid density",
                    s.s0, s.phi
                )));
            }
        }
        Ok(Self { nu, states })
    }

    /// The `ν ≥ 0` half of a density on its own grid.
    pub fn from_density(d: &PolarizationDensity) -> Self {
        let half = d.half();
        Self {
            nu: (0..half.len()).map(|k| k as f64 * d.resolution()).collect(),
            states: half.to_vec(),
        }
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn states(&self) -> &[PolarizationState] {
        &self.states
    }

    /// State at the listed frequency closest to `nu` (ties go low).
    pub fn at(&self, nu: f64) -> PolarizationState {
        let i = self.nu.partition_point(|&f| f < nu);
        let k = if i == 0 {
            0
        } else if i == self.nu.len() || nu - self.nu[i - 1] <= self.nu[i] - nu {
            i - 1
        } else {
            i
        };
        self.states[k]
    }

    /// Target resampled onto the full `n`-point grid with sample period
    /// `dt`; self-mirrored bins are symmetrized.
    pub fn on_grid(&self, n: usize, dt: f64) -> Result<PolarizationDensity> {
        let df = 1.0 / (n as f64 * dt);
        let half: Vec<_> = (0..half_len(n))
            .map(|k| {
                let s = self.at(k as f64 * df);
                if mirror_bin(k, n) == k {
                    s.symmetrized()
                } else {
                    s
                }
            })
            .collect();
        PolarizationDensity::from_half(&half, n, dt)
    }
}

/// Spectral-synthesis simulator for one target, realization length and
/// oversampling factor.
#[derive(Debug, Clone)]
pub struct Synthesizer {
    n: usize,
    m: usize,
    dt: f64,
    /// Hermitian filter on the full `M`-point grid.
    filter: Vec<HermitianBin>,
}

impl Synthesizer {
    pub fn new(target: &SynthesisTarget, n: usize, oversample: usize, dt: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        if oversample == 0 {
            return Err(Error::invalid("oversampling factor must be at least 1"));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("sample period must be positive, got {dt}")));
        }
        let m = n.checked_mul(oversample).ok_or_else(|| Error::invalid("synthesis grid too large"))?;
        let grid = target.on_grid(m, dt)?;
        let half = grid
            .half()
            .iter()
            .map(|s| identify_from_unpolarized_state(s, dt))
            .collect::<Result<Vec<_>>>()?;
        let filter = (0..m)
            .map(|k| if k < half.len() { half[k] } else { half[mirror_bin(k, m)].mirrored() })
            .collect();
        Ok(Self { n, m, dt, filter })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn grid_len(&self) -> usize {
        self.m
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Realization `index` of the run seeded with `seed`.
    pub fn realization(&self, seed: u64, index: u64) -> Result<BivariateSignal> {
        let noise = white_noise_stream(&WhiteNoiseSpec::unpolarized(1.0), self.m, self.dt, seed, index)?;
        let spec = qft_forward(&noise)?;
        let filtered: Vec<Quaternion> = spec
            .bins()
            .iter()
            .zip(&self.filter)
            .map(|(&x, f)| f.apply(x))
            .collect();
        let inv = qft_inverse(&QSpectrum::new(filtered, self.dt)?)?;
        if inv.residual_fraction > SYNTHESIS_RESIDUAL_TOL {
            return Err(Error::Numerical(format!(
                "synthesized realization is not bivariate (residual fraction {:e})",
                inv.residual_fraction
            )));
        }
        inv.signal.truncated(self.n)
    }

    /// Realizations `0..count`, in order.
    pub fn batch(&self, seed: u64, count: usize, exec: Execution) -> Result<Vec<BivariateSignal>> {
        par::map_indexed(count, exec, |r| self.realization(seed, r as u64))
            .into_iter()
            .collect()
    }

    /// Density of the underlying circular process on the `M`-point grid.
    pub fn grid_density(&self) -> Vec<Quaternion> {
        let noise = PolarizationState::unpolarized(self.dt);
        self.filter.iter().map(|f| f.output_quaternion(&noise)).collect()
    }

    /// Exact expectation of the `N`-point periodogram of a realization:
    /// the grid density smoothed by the Fejér kernel of the truncation.
    pub fn expected_periodogram(&self) -> Vec<Quaternion> {
        let g = self.grid_density();
        let (n, m) = (self.n as f64, self.m as f64);
        (0..self.n)
            .map(|k| {
                let mut acc = Quaternion::ZERO;
                for (kp, &gk) in g.iter().enumerate() {
                    let f = kp as f64 / m - k as f64 / n;
                    acc += gk.scale(fejer(f, self.n));
                }
                acc.scale(1.0 / (n * m))
            })
            .collect()
    }
}

/// `|Σ_{t<n} e^{j2πft}|²`
fn fejer(f: f64, n: usize) -> f64 {
    let s = (PI * f).sin();
    if s.abs() < 1e-12 {
        return (n * n) as f64;
    }
    let num = (PI * f * n as f64).sin();
    (num * num) / (s * s)
}

/// One `n`-sample realization with target density `target`, synthesized on
/// an `oversample · n` grid.
pub fn spectral_synthesis(
    target: &SynthesisTarget,
    n: usize,
    oversample: usize,
    dt: f64,
    seed: u64,
) -> Result<BivariateSignal> {
    Synthesizer::new(target, n, oversample, dt)?.realization(seed, 0)
}

/// Realizations `0..count` of [`spectral_synthesis`], each from its own
/// stream of `seed`.
pub fn spectral_synthesis_batch(
    target: &SynthesisTarget,
    n: usize,
    oversample: usize,
    dt: f64,
    seed: u64,
    count: usize,
    exec: Execution,
) -> Result<Vec<BivariateSignal>> {
    Synthesizer::new(target, n, oversample, dt)?.batch(seed, count, exec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quat::{inner3, PureUnitQuaternion};
    use crate::spectral::{density_from_spectrum, estimate_density, mean_periodogram};

    fn bump_target(nu0: f64, width: f64, phi: f64, mu: PureUnitQuaternion) -> SynthesisTarget {
        let nu: Vec<f64> = (0..=2000).map(|k| k as f64 * 0.5 / 2000.0).collect();
        let states = nu
            .iter()
            .map(|&f| {
                let s0 = (-0.5 * ((f - nu0) / width).powi(2)).exp();
                PolarizationState::new(s0, phi, Some(mu)).unwrap()
            })
            .collect();
        SynthesisTarget::new(nu, states).unwrap()
    }

    #[test]
    fn spec_validation() {
        let bad = WhiteNoiseSpec::Channels {
            sigma_u: 1.0,
            sigma_v: 1.0,
            rho: 1.5,
        };
        assert!(white_noise(&bad, 8, 0).is_err());
        let bad = WhiteNoiseSpec::Polarized {
            s0: 1.0,
            phi: 1.2,
            theta: 0.0,
        };
        assert!(bad.validate().is_err());
        assert!(white_noise(&WhiteNoiseSpec::unpolarized(1.0), 0, 0).is_err());
    }

    #[test]
    fn polarized_noise_densities() {
        let d = WhiteNoiseSpec::Polarized {
            s0: 2.0,
            phi: 0.4,
            theta: 0.5 * PI,
        }
        .moments();
        assert!(d.max_abs_diff(Quaternion::new(2.0, 0.0, -0.8, 0.0)) < 1e-15);
        let d = WhiteNoiseSpec::Polarized {
            s0: 3.0,
            phi: 1.0,
            theta: 0.0,
        }
        .moments();
        assert_eq!(d, Quaternion::new(3.0, 0.0, 3.0, 0.0));
        let s = WhiteNoiseSpec::unpolarized(1.0).expected_density(0.5).unwrap();
        assert!((s.s0 - 0.5).abs() < 1e-15 && s.phi == 0.0);
    }

    #[test]
    fn seeded_determinism() {
        let spec = WhiteNoiseSpec::Polarized {
            s0: 1.0,
            phi: 0.5,
            theta: 0.3,
        };
        let a = white_noise(&spec, 64, 42).unwrap();
        let b = white_noise(&spec, 64, 42).unwrap();
        let c = white_noise(&spec, 64, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let t = bump_target(0.1, 0.02, 0.5, PureUnitQuaternion::K);
        let s = Synthesizer::new(&t, 128, 2, 1.0).unwrap();
        assert_eq!(s.realization(7, 3).unwrap(), s.realization(7, 3).unwrap());
        assert_ne!(s.realization(7, 3).unwrap(), s.realization(7, 4).unwrap());
        let seq = s.batch(7, 6, Execution::Sequential).unwrap();
        let par = s.batch(7, 6, Execution::Parallel).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn white_noise_converges_to_closed_form() {
        // Sample moments per realization; compare the mean over R = 400 to the
        // closed form within 3 standard errors per component.
        let specs = [
            WhiteNoiseSpec::Channels {
                sigma_u: 1.2,
                sigma_v: 0.5,
                rho: -0.6,
            },
            WhiteNoiseSpec::unpolarized(2.0),
            WhiteNoiseSpec::Polarized {
                s0: 1.5,
                phi: 0.4,
                theta: 0.5 * PI,
            },
        ];
        let r = 400;
        for (si, spec) in specs.iter().enumerate() {
            let rows: Vec<[f64; 4]> = (0..r)
                .map(|i| {
                    let x = white_noise_stream(spec, 256, 1.0, si as u64, i).unwrap();
                    let g = density_from_spectrum(&qft_forward(&x).unwrap());
                    let m = g.iter().fold(Quaternion::ZERO, |a, &q| a + q).scale(1.0 / g.len() as f64);
                    [m.a, m.b, m.c, m.d]
                })
                .collect();
            let expected = spec.moments();
            let expected = [expected.a, expected.b, expected.c, expected.d];
            for c in 0..4 {
                let mean = rows.iter().map(|v| v[c]).sum::<f64>() / r as f64;
                let var = rows.iter().map(|v| (v[c] - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
                let se = (var / r as f64).sqrt();
                assert!((mean - expected[c]).abs() < 3.0 * se.max(1e-12), "spec {si} comp {c}: {mean} vs {}", expected[c]);
            }
        }
    }

    #[test]
    fn unpolarized_noise_has_small_estimated_phi() {
        let xs: Vec<_> = (0..200)
            .map(|i| white_noise_stream(&WhiteNoiseSpec::unpolarized(1.0), 64, 1.0, 1, i).unwrap())
            .collect();
        let d = estimate_density(&xs).unwrap();
        let mean_phi = d.bins().iter().map(|b| b.phi).sum::<f64>() / 64.0;
        assert!(mean_phi < 0.12, "{mean_phi}");
    }

    #[test]
    fn nearest_lookup() {
        let t = SynthesisTarget::new(
            vec![0.0, 0.1, 0.3],
            vec![
                PolarizationState::unpolarized(1.0),
                PolarizationState::unpolarized(2.0),
                PolarizationState::unpolarized(3.0),
            ],
        )
        .unwrap();
        assert_eq!(t.at(0.04).s0, 1.0);
        assert_eq!(t.at(0.05).s0, 1.0);
        assert_eq!(t.at(0.06).s0, 2.0);
        assert_eq!(t.at(0.25).s0, 3.0);
        assert_eq!(t.at(7.0).s0, 3.0);
        assert!(SynthesisTarget::new(vec![0.1, 0.0], vec![PolarizationState::ZERO; 2]).is_err());
    }

    #[test]
    fn flat_unpolarized_target_gives_white_output() {
        let t = SynthesisTarget::new(vec![0.0], vec![PolarizationState::unpolarized(2.0)]).unwrap();
        let s = Synthesizer::new(&t, 64, 1, 1.0).unwrap();
        assert!(s.filter.iter().all(|f| f.eta == 0.0 && (f.gain - 2f64.sqrt()).abs() < 1e-15));
        let xs = s.batch(3, 400, Execution::default()).unwrap();
        let g = mean_periodogram(&xs, Execution::default()).unwrap();
        let mean = g.iter().map(|q| q.a).sum::<f64>() / 64.0;
        assert!((mean - 2.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn fully_polarized_linear_target() {
        let mu = PureUnitQuaternion::from_ellipse(0.3, 0.0);
        let t = bump_target(0.12, 0.03, 1.0, mu);
        let s = Synthesizer::new(&t, 256, 4, 1.0).unwrap();
        for r in 0..5 {
            let x = s.realization(11, r).unwrap();
            let g = density_from_spectrum(&qft_forward(&x).unwrap());
            let peak = g.iter().map(|q| q.a).fold(0.0, f64::max);
            for q in g.iter().filter(|q| q.a > 1e-6 * peak) {
                let st = decompose_density(*q).unwrap();
                assert!((st.phi - 1.0).abs() < 1e-9);
                assert!(inner3(st.mu.unwrap(), mu).abs() > 1.0 - 1e-9);
            }
        }
    }

    #[test]
    fn fully_polarized_elliptical_target_in_band() {
        let mu = PureUnitQuaternion::from_ellipse(PI / 4.0, PI / 8.0);
        let t = bump_target(0.2, 0.02, 1.0, mu);
        let s = Synthesizer::new(&t, 512, 4, 1.0).unwrap();
        let x = s.realization(5, 0).unwrap();
        let d = PolarizationDensity::from_quaternions(&density_from_spectrum(&qft_forward(&x).unwrap()), 1.0).unwrap();
        for (k, b) in d.half().iter().enumerate() {
            let nu = k as f64 / 512.0;
            if (nu - 0.2).abs() < 0.02 {
                assert!(b.phi > 0.999 && inner3(b.mu.unwrap(), mu) > 0.999, "bin {k}: {b:?}");
            }
        }
    }

    #[test]
    fn monte_carlo_matches_expected_periodogram() {
        let mu = PureUnitQuaternion::from_ellipse(0.2, 0.3);
        let t = bump_target(0.15, 0.03, 0.6, mu);
        let s = Synthesizer::new(&t, 128, 3, 1.0).unwrap();
        let expected = s.expected_periodogram();
        let xs = s.batch(9, 400, Execution::default()).unwrap();
        let got = mean_periodogram(&xs, Execution::default()).unwrap();
        // Relative per-bin error of the scalar part after 400 averages is
        // about 1/√400·√((1+Φ²)/2); aggregate over the band.
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..128 {
            num += (got[k] - expected[k]).norm_sqr();
            den += expected[k].norm_sqr();
        }
        assert!((num / den).sqrt() < 0.1, "{}", (num / den).sqrt());
        let total_expected: f64 = expected.iter().map(|q| q.a).sum();
        let total_grid: f64 = s.grid_density().iter().map(|q| q.a).sum::<f64>() * 128.0 / 384.0;
        assert!((total_expected - total_grid).abs() < 1e-9 * total_grid);
    }

    #[test]
    fn self_mirrored_bins_are_symmetrized() {
        let mu = PureUnitQuaternion::from_ellipse(0.0, 0.3);
        let t = SynthesisTarget::new(vec![0.0], vec![PolarizationState::new(1.0, 0.8, Some(mu)).unwrap()]).unwrap();
        let g = t.on_grid(8, 1.0).unwrap();
        for k in [0, 4] {
            assert_eq!(g.bins()[k].polarization_vector()[0], 0.0);
        }
        assert!(spectral_synthesis(&t, 8, 1, 1.0, 0).is_ok());
    }
}
