//! Splitting a bivariate signal into `x_a + x_b`, where `x_a` is a scaled
//! polarizer output along the signal's own polarization axis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::HermitianBin;
use crate::par::{self, Execution};
use crate::qft::{mirror_bin, qft_forward, qft_inverse, BivariateSignal, QSpectrum};
use crate::quat::Quaternion;
use crate::spectral::{PolarizationDensity, PolarizationState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecompositionMode {
    /// `x_a` carries the polarized part of the power spectrum.
    PolarizedPartPower,
    /// `x_b` is unpolarized at every frequency.
    UnpolarizedRemainder,
    /// `x_a`, `x_b` uncorrelated with orthogonal polarizations.
    Uncorrelated,
}

impl DecompositionMode {
    /// Gain `K` as a function of the degree of polarization.
    pub fn gain(self, phi: f64) -> f64 {
        let phi = phi.clamp(0.0, 1.0);
        match self {
            DecompositionMode::PolarizedPartPower => (phi / (2.0 * (1.0 + phi))).sqrt(),
            DecompositionMode::UnpolarizedRemainder => {
                if phi == 0.0 {
                    return 0.0;
                }
                // Φ + 1 − √(1 − Φ²), rewritten to avoid cancellation near 0
                let den = phi + phi * phi / (1.0 + (1.0 - phi * phi).sqrt());
                1.0 - phi / den
            }
            DecompositionMode::Uncorrelated => 0.5,
        }
    }
}

/// Gain at every bin of `d`.
pub fn decomposition_gain(d: &PolarizationDensity, mode: DecompositionMode) -> Vec<f64> {
    d.bins().iter().map(|b| mode.gain(b.phi)).collect()
}

/// Polarizer stage `X_a = K (X − μ X j)` of one bin, or a zero filter where
/// the density has no axis. Axes at self-mirrored bins lose their `i`
/// component so that `x_a` stays real.
fn component_filter(d: &PolarizationDensity, k: usize, mode: DecompositionMode) -> HermitianBin {
    let s = d.bins()[k];
    let s = if mirror_bin(k, d.len()) == k { s.symmetrized() } else { s };
    match s.mu {
        Some(mu) => HermitianBin::polarizer(mode.gain(s.phi), mu),
        None => HermitianBin::scalar(0.0),
    }
}

/// `(x_a, x_b)` with `x_a + x_b = x`.
pub fn decompose_signal(
    x: &BivariateSignal,
    d: &PolarizationDensity,
    mode: DecompositionMode,
) -> Result<(BivariateSignal, BivariateSignal)> {
    d.check_len(x.len(), "density")?;
    let spec = qft_forward(x)?;
    let bins = spec
        .bins()
        .iter()
        .enumerate()
        .map(|(k, &q)| component_filter(d, k, mode).apply(q))
        .collect();
    let inv = qft_inverse(&QSpectrum::new(bins, x.dt())?)?;
    if !inv.is_bivariate() {
        return Err(Error::Numerical(format!(
            "polarized component is not bivariate (residual fraction {:e})",
            inv.residual_fraction
        )));
    }
    let xa = inv.signal;
    let xb = x.sub(&xa)?;
    Ok((xa, xb))
}

/// Densities of `x_a` and `x_b`: the first is the polarizer output, the
/// second that of `K' = 1 − K`, `η' = K/(1 − K)` along `−μx`.
pub fn component_densities(
    d: &PolarizationDensity,
    mode: DecompositionMode,
) -> Result<(PolarizationDensity, PolarizationDensity)> {
    let mut a = Vec::with_capacity(d.len());
    let mut b = Vec::with_capacity(d.len());
    for (k, s) in d.bins().iter().enumerate() {
        let f = component_filter(d, k, mode);
        let (da, db) = match f.mu {
            Some(mu) if f.gain > 0.0 => {
                let rest = HermitianBin::new(1.0 - f.gain, f.gain / (1.0 - f.gain), Some(-mu))?;
                (f.map_state(s)?, rest.map_state(s)?)
            }
            _ => (PolarizationState::ZERO, *s),
        };
        a.push(da);
        b.push(db);
    }
    Ok((PolarizationDensity::new(a, d.dt())?, PolarizationDensity::new(b, d.dt())?))
}

/// Normalized cross moments `E[X_a X̄_b]` and `E[X_a j X̄_b]` at one bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossCorrelation {
    pub plain: f64,
    pub j_weighted: f64,
}

impl CrossCorrelation {
    pub fn statistic(&self) -> f64 {
        self.plain.max(self.j_weighted)
    }
}

/// Monte-Carlo uncorrelatedness test over paired realizations. Bins where
/// either component has no power give `None`.
pub fn test_uncorrelated(a: &[BivariateSignal], b: &[BivariateSignal]) -> Result<Vec<Option<CrossCorrelation>>> {
    test_uncorrelated_with(a, b, Execution::default())
}

pub fn test_uncorrelated_with(
    a: &[BivariateSignal],
    b: &[BivariateSignal],
    exec: Execution,
) -> Result<Vec<Option<CrossCorrelation>>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let first = a.first().ok_or(Error::EmptyInput)?;
    let n = first.len();
    if let Some(bad) = a.iter().chain(b).find(|x| x.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            found: bad.len(),
        });
    }
    // per realization: [|A|², |B|², A B̄, A j B̄] for every bin
    let rows = par::map_indexed(a.len(), exec, |r| -> Result<Vec<Quaternion>> {
        let xa = qft_forward(&a[r])?;
        let xb = qft_forward(&b[r])?;
        let mut row = Vec::with_capacity(4 * n);
        for (&p, &q) in xa.bins().iter().zip(xb.bins()) {
            row.push(Quaternion::scalar(p.norm_sqr()));
            row.push(Quaternion::scalar(q.norm_sqr()));
            row.push(p * q.conj());
            row.push(p * Quaternion::J * q.conj());
        }
        Ok(row)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let sum = par::pairwise_sum(rows).ok_or(Error::EmptyInput)?;
    let r = a.len() as f64;
    Ok(sum
        .chunks_exact(4)
        .map(|c| {
            let norm = (c[0].a / r * c[1].a / r).sqrt();
            (norm > 0.0).then(|| CrossCorrelation {
                plain: c[2].norm() / r / norm,
                j_weighted: c[3].norm() / r / norm,
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quat::{inner3, PureUnitQuaternion};
    use crate::spectral::{up_split, PHYSICAL_TOL};
    use crate::synthesis::{white_noise_stream, WhiteNoiseSpec};
    use proptest::prelude::*;

    const MODES: [DecompositionMode; 3] = [
        DecompositionMode::PolarizedPartPower,
        DecompositionMode::UnpolarizedRemainder,
        DecompositionMode::Uncorrelated,
    ];

    fn axis() -> impl Strategy<Value = PureUnitQuaternion> {
        prop::array::uniform3(-1.0f64..1.0)
            .prop_filter("nondegenerate", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
            .prop_map(|v| PureUnitQuaternion::new(v).unwrap())
    }

    fn state() -> impl Strategy<Value = PolarizationState> {
        (0.01f64..10.0, 0.0f64..=1.0, axis())
            .prop_map(|(s0, phi, mu)| PolarizationState::new(s0, phi, Some(mu)).unwrap())
    }

    fn one_bin(s: PolarizationState) -> PolarizationDensity {
        // bin 1 of a 3-point grid is not self-mirrored
        PolarizationDensity::from_half(&[PolarizationState::ZERO, s], 3, 1.0).unwrap()
    }

    #[test]
    fn gain_values() {
        assert_eq!(DecompositionMode::Uncorrelated.gain(0.3), 0.5);
        assert_eq!(DecompositionMode::PolarizedPartPower.gain(0.0), 0.0);
        assert_eq!(DecompositionMode::UnpolarizedRemainder.gain(0.0), 0.0);
        assert!((DecompositionMode::UnpolarizedRemainder.gain(1.0) - 0.5).abs() < 1e-15);
        assert!((DecompositionMode::PolarizedPartPower.gain(1.0) - 0.5).abs() < 1e-15);
        // the rewritten denominator matches the direct expression
        for phi in [0.1f64, 0.5, 0.9] {
            let direct = 1.0 - phi / (phi + 1.0 - (1.0 - phi * phi).sqrt());
            assert!((DecompositionMode::UnpolarizedRemainder.gain(phi) - direct).abs() < 1e-14);
        }
        for phi in [1e-9, 1e-5, 0.3, 0.999] {
            for m in MODES {
                assert!((0.0..=0.5 + 1e-15).contains(&m.gain(phi)));
            }
        }
    }

    #[test]
    fn fully_polarized_input_leaves_nothing_for_b_in_mode_iii() {
        let mu = PureUnitQuaternion::from_ellipse(0.3, 0.2);
        let d = one_bin(PolarizationState::new(2.0, 1.0, Some(mu)).unwrap());
        let (_, db) = component_densities(&d, DecompositionMode::Uncorrelated).unwrap();
        assert!(db.bins()[1].s0.abs() < 1e-12);
    }

    #[test]
    fn additivity_on_random_signals() {
        let x = white_noise_stream(&WhiteNoiseSpec::unpolarized(1.0), 65, 1.0, 2, 0).unwrap();
        let mu = PureUnitQuaternion::from_ellipse(0.5, -0.2);
        let d = PolarizationDensity::flat(PolarizationState::new(1.0, 0.6, Some(mu)).unwrap(), 65, 1.0).unwrap();
        for m in MODES {
            let (xa, xb) = decompose_signal(&x, &d, m).unwrap();
            let err = xa.add(&xb).unwrap().sub(&x).unwrap().energy().sqrt();
            assert!(err <= 1e-12 * x.energy().sqrt());
        }
    }

    #[test]
    fn unpolarized_bins_pass_to_b() {
        let x = white_noise_stream(&WhiteNoiseSpec::unpolarized(1.0), 16, 1.0, 0, 0).unwrap();
        let d = PolarizationDensity::flat(PolarizationState::unpolarized(1.0), 16, 1.0).unwrap();
        let (xa, xb) = decompose_signal(&x, &d, DecompositionMode::Uncorrelated).unwrap();
        assert_eq!(xa.energy(), 0.0);
        assert_eq!(xb, x);
    }

    #[test]
    fn mismatched_inputs() {
        let x = BivariateSignal::zeros(8, 1.0).unwrap();
        let d = PolarizationDensity::flat(PolarizationState::unpolarized(1.0), 9, 1.0).unwrap();
        assert!(decompose_signal(&x, &d, DecompositionMode::Uncorrelated).is_err());
        assert!(test_uncorrelated(std::slice::from_ref(&x), &[]).is_err());
    }

    #[test]
    fn correlation_statistic_limits() {
        let spec = WhiteNoiseSpec::unpolarized(1.0);
        let r = 400;
        let a: Vec<_> = (0..r).map(|i| white_noise_stream(&spec, 32, 1.0, 1, i).unwrap()).collect();
        let b: Vec<_> = (0..r).map(|i| white_noise_stream(&spec, 32, 1.0, 2, i).unwrap()).collect();
        let threshold = 3.0 / (r as f64).sqrt();
        for c in test_uncorrelated(&a, &b).unwrap() {
            assert!(c.unwrap().statistic() < threshold);
        }
        for c in test_uncorrelated(&a, &a).unwrap() {
            assert!((c.unwrap().plain - 1.0).abs() < 1e-12);
        }
        let zero = vec![BivariateSignal::zeros(32, 1.0).unwrap(); r as usize];
        assert!(test_uncorrelated(&a, &zero).unwrap().iter().all(Option::is_none));
    }

    proptest! {
        #[test]
        fn table_closed_forms(s in state()) {
            let d = one_bin(s);
            let (s0, phi, mu) = (s.s0, s.phi, s.mu.unwrap().to_quaternion());
            let tol = 1e-12 * s0 * 10.0;
            let one = Quaternion::ONE;

            // (i): d_a = S0 Φ (1 + μ); d_b = S0 [κ + (2Φ − 2K(1 + Φ)) μ]
            let (da, db) = component_densities(&d, DecompositionMode::PolarizedPartPower).unwrap();
            let k = DecompositionMode::PolarizedPartPower.gain(phi);
            let kappa = 1.0 + phi - 2.0 * k * (1.0 + phi);
            prop_assert!(da.bins()[1].to_quaternion().max_abs_diff((one + mu).scale(s0 * phi)) <= tol);
            let expected_b = (Quaternion::scalar(kappa) + mu.scale(2.0 * phi - 2.0 * k * (1.0 + phi))).scale(s0);
            prop_assert!(db.bins()[1].to_quaternion().max_abs_diff(expected_b) <= tol);
            let (_, polarized) = up_split(&s);
            prop_assert!(da.bins()[1].to_quaternion().max_abs_diff(polarized.to_quaternion()) <= tol);

            // (ii): d_a = 2 S0 K² (1 + Φ)(1 + μ); d_b = S0 (1 − Φ)
            let (da, db) = component_densities(&d, DecompositionMode::UnpolarizedRemainder).unwrap();
            let k = DecompositionMode::UnpolarizedRemainder.gain(phi);
            prop_assert!(da.bins()[1].to_quaternion().max_abs_diff((one + mu).scale(2.0 * s0 * k * k * (1.0 + phi))) <= tol);
            let (unpolarized, _) = up_split(&s);
            prop_assert!(db.bins()[1].to_quaternion().max_abs_diff(unpolarized.to_quaternion()) <= tol * 100.0);

            // (iii): (S0/2)(1 ± Φ)(1 ± μ)
            let (da, db) = component_densities(&d, DecompositionMode::Uncorrelated).unwrap();
            prop_assert!(da.bins()[1].to_quaternion().max_abs_diff((one + mu).scale(0.5 * s0 * (1.0 + phi))) <= tol);
            prop_assert!(db.bins()[1].to_quaternion().max_abs_diff((one - mu).scale(0.5 * s0 * (1.0 - phi))) <= tol);
            prop_assert!((da.bins()[1].s0 + db.bins()[1].s0 - s0).abs() <= tol);
            if phi < 1.0 - 1e-6 {
                prop_assert!((inner3(da.bins()[1].mu.unwrap(), s.mu.unwrap()) - 1.0).abs() < 1e-9);
                prop_assert!((inner3(db.bins()[1].mu.unwrap(), s.mu.unwrap()) + 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn component_a_fully_polarized(s in state()) {
            prop_assume!(s.phi > 1e-6);
            for m in MODES {
                let (da, _) = component_densities(&one_bin(s), m).unwrap();
                let a = da.bins()[1];
                prop_assert!((a.phi - 1.0).abs() < PHYSICAL_TOL * 10.0);
                prop_assert!((inner3(a.mu.unwrap(), s.mu.unwrap()) - 1.0).abs() < 1e-9);
            }
        }
    }
}
