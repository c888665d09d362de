//! Truncated synthesis approaches the stationary process as the synthesis
//! grid grows.

use std::f64::consts::PI;

use bispec::synthesis::{SynthesisTarget, Synthesizer};
use bispec::{PolarizationState, PureUnitQuaternion, Quaternion};

const N: usize = 256;
const FINE: usize = 200;
const NU0: f64 = 0.08;
const WIDTH: f64 = 0.0168;
const PHI: f64 = 0.7;

fn axis() -> PureUnitQuaternion {
    PureUnitQuaternion::from_ellipse(PI / 4.0, PI / 8.0)
}

fn s0(nu: f64) -> f64 {
    (-0.5 * ((nu.abs() - NU0) / WIDTH).powi(2)).exp()
}

/// Continuous target density at `nu ∈ (−½, ½]`.
fn density(nu: f64) -> Quaternion {
    let mu = if nu < 0.0 { axis().negative_frequency() } else { axis() };
    Quaternion::scalar(s0(nu)) + mu.to_quaternion().scale(PHI * s0(nu))
}

fn target() -> SynthesisTarget {
    let m = N * FINE;
    let nu: Vec<f64> = (0..=m / 2).map(|k| k as f64 / m as f64).collect();
    let states = nu.iter().map(|&f| PolarizationState::new(s0(f), PHI, Some(axis())).unwrap()).collect();
    SynthesisTarget::new(nu, states).unwrap()
}

/// `E|X_k|²`-type expectation for a length-`N` window of the stationary
/// process, by Riemann sum of the Fejér-weighted continuous density.
fn stationary_expectation() -> Vec<Quaternion> {
    let l = N * FINE;
    (0..N)
        .map(|k| {
            let mut acc = Quaternion::ZERO;
            for i in 0..l {
                let nu = (i as f64 - (l / 2) as f64) / l as f64;
                let f = nu - k as f64 / N as f64;
                let (s, w) = ((PI * f).sin(), (PI * f * N as f64).sin());
                let fejer = if s.abs() < 1e-12 { (N * N) as f64 } else { w * w / (s * s) };
                acc += density(nu).scale(fejer);
            }
            acc.scale(1.0 / (N as f64 * l as f64))
        })
        .collect()
}

fn l2(a: &[Quaternion], b: &[Quaternion]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (*x - *y).norm_sqr()).sum::<f64>().sqrt()
}

#[test]
fn expected_periodogram_error_decreases_with_oversampling() {
    let reference = stationary_expectation();
    let scale = reference.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt();
    let target = target();
    let errors: Vec<f64> = [1, 2, 10]
        .iter()
        .map(|&m| {
            let synth = Synthesizer::new(&target, N, m, 1.0).unwrap();
            l2(&synth.expected_periodogram(), &reference) / scale
        })
        .collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    let fine = Synthesizer::new(&target, N, FINE, 1.0).unwrap();
    let err = l2(&fine.expected_periodogram(), &reference) / scale;
    // floor set by the symmetrized DC bin
    assert!(err < 1e-8, "{err:e} {errors:?}");
}
