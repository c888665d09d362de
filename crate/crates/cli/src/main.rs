//! `bispec` command-line pipelines over CSV signals and densities.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bispec::decompose::{
    component_densities, decompose_signal, decomposition_gain, test_uncorrelated, DecompositionMode,
};
use bispec::filters::{apply_hermitian, apply_unitary};
use bispec::formats::{self, FilterTable};
use bispec::spectral::{estimate_density, PolarizationDensity};
use bispec::synthesis::{white_noise_stream, Synthesizer, WhiteNoiseSpec};
use bispec::wiener::{denoise, mmse, reconstruction_snr_db, snr_db, DenoisingProblem};
use bispec::{qft_forward, qft_inverse, BivariateSignal, Error, Execution};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "bispec", version, about = "Bivariate signal synthesis, polarization analysis, filtering and denoising")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize Gaussian realizations with a prescribed density.
    Synth(SynthArgs),
    /// Estimate the density of one or more realizations.
    Analyze(AnalyzeArgs),
    /// Apply a unitary or Hermitian filter read from CSV.
    Filter(FilterArgs),
    /// Wiener-denoise a signal, optionally adding polarized white noise first.
    Wiener(WienerArgs),
    /// Split a signal into two components along its polarization.
    Decompose(DecomposeArgs),
}

#[derive(Debug, clap::Args)]
struct SynthArgs {
    /// Target density CSV (`nu,S0,Phi,s1,s2,s3`, nu ≥ 0).
    #[arg(long)]
    density: PathBuf,
    /// Samples per realization.
    #[arg(short, long, default_value_t = 1024, value_parser = clap::value_parser!(u64).range(2..))]
    n: u64,
    /// Synthesis grid length as a multiple of N.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    oversample: u64,
    /// Number of realizations.
    #[arg(short, long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    realizations: u64,
    /// Sample period.
    #[arg(long, default_value_t = 1.0)]
    dt: f64,
    #[arg(long, env = "BISPEC_SEED", default_value_t = 0)]
    seed: u64,
    /// Output file, or directory with `--split`.
    #[arg(short, long)]
    out: PathBuf,
    /// Write one `realization_NNNN.csv` per realization instead of a stacked file.
    #[arg(long)]
    split: bool,
}

#[derive(Debug, clap::Args)]
struct AnalyzeArgs {
    /// Signal CSVs (single or stacked); all realizations are averaged.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Density CSV output.
    #[arg(long)]
    density_out: PathBuf,
    /// Poincaré coordinates CSV output (`nu,Phi,two_theta,two_chi`).
    #[arg(long)]
    poincare_out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct FilterArgs {
    input: PathBuf,
    /// Filter CSV, unitary (`nu,mu1,mu2,mu3,alpha,phi`) or Hermitian (`nu,K,eta,mu1,mu2,mu3`).
    #[arg(long)]
    params: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    /// JSON report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct WienerArgs {
    /// Observed signal, or the clean signal when `--add-noise-snr-db` is given.
    input: PathBuf,
    /// Density CSV of the clean signal.
    #[arg(long)]
    signal_density: PathBuf,
    /// Density CSV of the noise. Required unless noise is added.
    #[arg(long, required_unless_present = "add_noise_snr_db", conflicts_with = "add_noise_snr_db")]
    noise_density: Option<PathBuf>,
    /// Add white noise at this SNR (dB) against the measured signal power.
    #[arg(long, allow_negative_numbers = true)]
    add_noise_snr_db: Option<f64>,
    /// Degree of polarization of the added noise.
    #[arg(long, default_value_t = 0.0, requires = "add_noise_snr_db")]
    noise_phi: f64,
    /// Orientation (rad) of the polarized part of the added noise.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true, requires = "add_noise_snr_db")]
    noise_theta: f64,
    /// Clean reference for the report when the input is already noisy.
    #[arg(long, conflicts_with = "add_noise_snr_db")]
    clean: Option<PathBuf>,
    #[arg(long, env = "BISPEC_SEED", default_value_t = 0)]
    seed: u64,
    /// Denoised signal CSV.
    #[arg(short, long)]
    out: PathBuf,
    /// Noisy signal CSV, when noise is added.
    #[arg(long, requires = "add_noise_snr_db")]
    noisy_out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    /// x_a carries the polarized part of the power.
    Polarized,
    /// x_b is unpolarized.
    Unpolarized,
    /// x_a and x_b are uncorrelated with orthogonal polarizations.
    Uncorrelated,
}

impl From<ModeArg> for DecompositionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Polarized => DecompositionMode::PolarizedPartPower,
            ModeArg::Unpolarized => DecompositionMode::UnpolarizedRemainder,
            ModeArg::Uncorrelated => DecompositionMode::Uncorrelated,
        }
    }
}

#[derive(Debug, clap::Args)]
struct DecomposeArgs {
    input: PathBuf,
    /// Density CSV of the input process.
    #[arg(long)]
    density: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Uncorrelated)]
    mode: ModeArg,
    #[arg(long)]
    out_a: PathBuf,
    #[arg(long)]
    out_b: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Analyze(a) => analyze(a),
        Command::Filter(a) => filter(a),
        Command::Wiener(a) => wiener(a),
        Command::Decompose(a) => decompose(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bispec: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Numerical(_) => 3,
        _ => 2,
    }
}

fn write_signals(path: &Path, xs: &[BivariateSignal]) -> bispec::Result<()> {
    match xs {
        [x] => formats::write_signal(path, x),
        _ => formats::write_stacked_signals(path, xs),
    }
}

fn write_report(path: Option<&Path>, report: &impl Serialize) -> bispec::Result<()> {
    if let Some(path) = path {
        std::fs::write(path, serde_json::to_string_pretty(report)? + "\n")?;
    }
    Ok(())
}

fn density_on_grid(path: &Path, x: &BivariateSignal) -> bispec::Result<PolarizationDensity> {
    formats::read_density(path)?.on_grid(x.len(), x.dt())
}

fn synth(a: SynthArgs) -> bispec::Result<()> {
    let target = formats::read_density(&a.density)?;
    let synth = Synthesizer::new(&target, a.n as usize, a.oversample as usize, a.dt)?;
    let xs = synth.batch(a.seed, a.realizations as usize, Execution::default())?;
    if a.split {
        std::fs::create_dir_all(&a.out)?;
        for (i, x) in xs.iter().enumerate() {
            formats::write_signal(&a.out.join(format!("realization_{i:04}.csv")), x)?;
        }
        Ok(())
    } else {
        write_signals(&a.out, &xs)
    }
}

fn analyze(a: AnalyzeArgs) -> bispec::Result<()> {
    let mut xs = Vec::new();
    for path in &a.inputs {
        xs.extend(formats::read_signals(path)?);
    }
    let d = estimate_density(&xs)?;
    formats::write_density(&a.density_out, &d)?;
    if let Some(p) = &a.poincare_out {
        formats::write_poincare(p, &d)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct FilterReport {
    schema_version: u32,
    kind: &'static str,
    realizations: usize,
    samples: usize,
    input_energy: f64,
    output_energy: f64,
    /// Largest j/k energy fraction dropped by the inverse transform.
    max_residual_fraction: f64,
}

fn filter(a: FilterArgs) -> bispec::Result<()> {
    let xs = formats::read_signals(&a.input)?;
    let table = formats::read_filter(&a.params)?;
    let (n, dt) = (xs[0].len(), xs[0].dt());
    let kind = match table {
        FilterTable::Unitary { .. } => "unitary",
        FilterTable::Hermitian { .. } => "hermitian",
    };
    let unitary = table.unitary_on_grid(n, dt).transpose()?;
    let hermitian = table.hermitian_on_grid(n, dt).transpose()?;
    let mut out = Vec::with_capacity(xs.len());
    let mut max_residual = 0.0f64;
    for x in &xs {
        let spec = qft_forward(x)?;
        let filtered = match (&unitary, &hermitian) {
            (Some(u), _) => apply_unitary(&spec, u)?,
            (_, Some(h)) => apply_hermitian(&spec, h)?,
            _ => unreachable!("filter table is either unitary or Hermitian"),
        };
        let inv = qft_inverse(&filtered)?;
        if !inv.is_bivariate() {
            return Err(Error::Numerical(format!(
                "filtered signal is not bivariate (residual fraction {:e})",
                inv.residual_fraction
            )));
        }
        max_residual = max_residual.max(inv.residual_fraction);
        out.push(inv.signal);
    }
    write_signals(&a.out, &out)?;
    write_report(
        a.report.as_deref(),
        &FilterReport {
            schema_version: SCHEMA_VERSION,
            kind,
            realizations: xs.len(),
            samples: n,
            input_energy: xs.iter().map(BivariateSignal::energy).sum(),
            output_energy: out.iter().map(BivariateSignal::energy).sum(),
            max_residual_fraction: max_residual,
        },
    )
}

#[derive(Serialize)]
struct WienerReport {
    schema_version: u32,
    samples: usize,
    snr_in_db: Option<f64>,
    snr_rec_db: Option<f64>,
    /// Integrated closed-form MMSE, per sample.
    mmse_formula: f64,
    mmse_formula_noise_form: f64,
    /// `|x̂ − x|²` per sample, when the clean signal is known.
    mmse_empirical: Option<f64>,
    regularized_bins: usize,
}

fn wiener(a: WienerArgs) -> bispec::Result<()> {
    let input = formats::read_signal(&a.input)?;
    let (n, dt) = (input.len(), input.dt());
    let signal_density = density_on_grid(&a.signal_density, &input)?;

    let (observed, clean, noise_density, snr_in_db) = match a.add_noise_snr_db {
        Some(snr) => {
            let px = input.mean_power();
            let spec = WhiteNoiseSpec::Polarized {
                s0: px / 10f64.powf(snr / 10.0),
                phi: a.noise_phi,
                theta: a.noise_theta,
            };
            spec.validate()?;
            let w = white_noise_stream(&spec, n, dt, a.seed, 0)?;
            let noise_density = PolarizationDensity::flat(spec.expected_density(dt)?, n, dt)?;
            let snr_in = snr_db(px, w.mean_power());
            (input.add(&w)?, Some(input), noise_density, Some(snr_in))
        }
        None => {
            let path = a.noise_density.as_deref().expect("clap requires a noise density");
            let noise_density = density_on_grid(path, &input)?;
            let clean = a.clean.as_deref().map(formats::read_signal).transpose()?;
            if let Some(c) = &clean {
                if c.len() != n {
                    return Err(Error::LengthMismatch {
                        expected: n,
                        found: c.len(),
                    });
                }
            }
            let snr_in = clean
                .as_ref()
                .map(|c| -> bispec::Result<f64> { Ok(snr_db(c.mean_power(), input.sub(c)?.mean_power())) })
                .transpose()?;
            (input, clean, noise_density, snr_in)
        }
    };

    let prob = DenoisingProblem::new(signal_density, noise_density)?;
    let est = denoise(&observed, &prob)?;
    if !est.residual_fraction.is_finite() || est.residual_fraction > bispec::qft::BIVARIATE_RESIDUAL_TOL {
        return Err(Error::Numerical(format!(
            "denoised signal is not bivariate (residual fraction {:e})",
            est.residual_fraction
        )));
    }
    formats::write_signal(&a.out, &est.signal)?;
    if let Some(p) = &a.noisy_out {
        formats::write_signal(p, &observed)?;
    }
    let report = mmse(&prob);
    let (snr_rec_db, mmse_empirical) = match &clean {
        Some(c) => (
            Some(reconstruction_snr_db(c, &est.signal)?),
            Some(est.signal.sub(c)?.mean_power()),
        ),
        None => (None, None),
    };
    write_report(
        a.report.as_deref(),
        &WienerReport {
            schema_version: SCHEMA_VERSION,
            samples: n,
            snr_in_db,
            snr_rec_db,
            mmse_formula: report.total,
            mmse_formula_noise_form: report.total_noise_form,
            mmse_empirical,
            regularized_bins: est.regularized_bins.len(),
        },
    )
}

#[derive(Serialize)]
struct DecomposeReport {
    schema_version: u32,
    mode: DecompositionMode,
    realizations: usize,
    samples: usize,
    /// Largest `|x_a + x_b − x|` over all samples.
    additivity_error: f64,
    /// Per-bin gain on the half grid.
    gain: Vec<f64>,
    /// Expected power of each component, per sample.
    power_a: f64,
    power_b: f64,
    /// Cross-correlation statistic per half-grid bin, when there are at
    /// least two realizations.
    cross_correlation: Option<Vec<Option<f64>>>,
}

fn decompose(a: DecomposeArgs) -> bispec::Result<()> {
    let xs = formats::read_signals(&a.input)?;
    let d = density_on_grid(&a.density, &xs[0])?;
    let mode = DecompositionMode::from(a.mode);
    let mut xa = Vec::with_capacity(xs.len());
    let mut xb = Vec::with_capacity(xs.len());
    let mut additivity_error = 0.0f64;
    for x in &xs {
        let (pa, pb) = decompose_signal(x, &d, mode)?;
        let sum = pa.add(&pb)?;
        for (s, t) in sum.samples().iter().zip(x.samples()) {
            additivity_error = additivity_error.max((s[0] - t[0]).abs()).max((s[1] - t[1]).abs());
        }
        xa.push(pa);
        xb.push(pb);
    }
    write_signals(&a.out_a, &xa)?;
    write_signals(&a.out_b, &xb)?;

    let (da, db) = component_densities(&d, mode)?;
    let half = d.half().len();
    let cross_correlation = if xs.len() >= 2 {
        let c = test_uncorrelated(&xa, &xb)?;
        Some(c[..half].iter().map(|c| c.map(|c| c.statistic())).collect())
    } else {
        None
    };
    let mut gain = decomposition_gain(&d, mode);
    gain.truncate(half);
    write_report(
        a.report.as_deref(),
        &DecomposeReport {
            schema_version: SCHEMA_VERSION,
            mode,
            realizations: xs.len(),
            samples: xs[0].len(),
            additivity_error,
            gain,
            power_a: da.total_power(),
            power_b: db.total_power(),
            cross_correlation,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Numerical("x".into())), 3);
        assert_eq!(exit_code(&Error::EmptyInput), 2);
        let fmt = Error::Format {
            path: "a.csv".into(),
            line: 3,
            message: "bad".into(),
        };
        assert_eq!(exit_code(&fmt), 2);
    }

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
