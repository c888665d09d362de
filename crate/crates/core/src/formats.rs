//! Text formats for signals, densities and filter parameters.
//!
//! | file      | header                                  |
//! |-----------|-----------------------------------------|
//! | signal    | `t,x1,x2` or `realization,t,x1,x2`      |
//! | density   | `nu,S0,Phi,s1,s2,s3`                    |
//! | Poincaré  | `nu,Phi,two_theta,two_chi`              |
//! | unitary   | `nu,mu1,mu2,mu3,alpha,phi`              |
//! | Hermitian | `nu,K,eta,mu1,mu2,mu3`                  |
//!
//! Densities and filters are listed for `ν ≥ 0`; `(s1, s2, s3)` are the
//! normalized Stokes parameters `Φ μ` and `(mu1, mu2, mu3)` are axis
//! components on `(i, j, k)`. Values are written with the shortest decimal
//! representation that round-trips.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::filters::{HermitianBin, HermitianFilterParams, UnitaryBin, UnitaryFilterParams};
use crate::qft::{half_len, BivariateSignal};
use crate::quat::PureUnitQuaternion;
use crate::spectral::{PolarizationDensity, PolarizationState, StokesParams, EPS_POL};
use crate::synthesis::SynthesisTarget;

pub const SIGNAL_HEADER: [&str; 3] = ["t", "x1", "x2"];
pub const STACKED_SIGNAL_HEADER: [&str; 4] = ["realization", "t", "x1", "x2"];
pub const DENSITY_HEADER: [&str; 6] = ["nu", "S0", "Phi", "s1", "s2", "s3"];
pub const POINCARE_HEADER: [&str; 4] = ["nu", "Phi", "two_theta", "two_chi"];
pub const UNITARY_HEADER: [&str; 6] = ["nu", "mu1", "mu2", "mu3", "alpha", "phi"];
pub const HERMITIAN_HEADER: [&str; 6] = ["nu", "K", "eta", "mu1", "mu2", "mu3"];

/// Relative mismatch allowed between `Phi` and `|(s1, s2, s3)|`.
const STOKES_TOL: f64 = 1e-6;
/// Relative jitter allowed in sample times.
const TIME_TOL: f64 = 1e-9;

struct Table {
    path: String,
    header: Vec<String>,
    /// `(line, values)`
    rows: Vec<(usize, Vec<f64>)>,
}

impl Table {
    fn error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Format {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    fn expect_header(&self, expected: &[&str]) -> Result<()> {
        if self.header.iter().map(String::as_str).ne(expected.iter().copied()) {
            return Err(self.error(
                1,
                format!("expected header `{}`, found `{}`", expected.join(","), self.header.join(",")),
            ));
        }
        Ok(())
    }
}

fn read_table(reader: impl Read, path: &str) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let fmt = |line: usize, message: String| Error::Format {
        path: path.to_string(),
        line,
        message,
    };
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| fmt(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(fmt(1, "missing header".into()));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            fmt(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != header.len() {
            return Err(fmt(line, format!("expected {} fields, found {}", header.len(), record.len())));
        }
        let values = record
            .iter()
            .enumerate()
            .map(|(c, field)| match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(fmt(line, format!("column `{}`: `{field}` is not a finite number", header[c]))),
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((line, values));
    }
    if rows.is_empty() {
        return Err(fmt(2, "no data rows".into()));
    }
    Ok(Table {
        path: path.to_string(),
        header,
        rows,
    })
}

fn open_table(path: &Path) -> Result<Table> {
    read_table(File::open(path)?, &path.display().to_string())
}

fn write_rows<W: Write>(out: W, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<File> {
    Ok(File::create(path)?)
}

/// Sample period from a time column: the mean step, which must be uniform.
fn sample_period(table: &Table, times: &[(usize, f64)]) -> Result<f64> {
    if times.len() < 2 {
        return Ok(1.0);
    }
    let (t0, tn) = (times[0].1, times[times.len() - 1].1);
    let step = times[1].1 - t0;
    if step <= 0.0 || step.is_nan() {
        return Err(table.error(times[1].0, "time column must be strictly increasing"));
    }
    for (i, &(line, t)) in times.iter().enumerate() {
        if (t - (t0 + i as f64 * step)).abs() > TIME_TOL * step.max(t.abs()) {
            return Err(table.error(line, format!("time {t} breaks the uniform step {step}")));
        }
    }
    Ok((tn - t0) / (times.len() - 1) as f64)
}

fn signal_from_rows(table: &Table, rows: &[&(usize, Vec<f64>)], t_col: usize) -> Result<BivariateSignal> {
    let times: Vec<(usize, f64)> = rows.iter().map(|(l, v)| (*l, v[t_col])).collect();
    let dt = sample_period(table, &times)?;
    let samples = rows.iter().map(|(_, v)| [v[t_col + 1], v[t_col + 2]]).collect();
    BivariateSignal::new(samples, dt)
}

/// Reads one signal, or every realization of a stacked file in order.
pub fn read_signals(path: &Path) -> Result<Vec<BivariateSignal>> {
    parse_signals(open_table(path)?)
}

pub fn read_signals_from(reader: impl Read, name: &str) -> Result<Vec<BivariateSignal>> {
    parse_signals(read_table(reader, name)?)
}

fn parse_signals(table: Table) -> Result<Vec<BivariateSignal>> {
    if table.header.len() == SIGNAL_HEADER.len() {
        table.expect_header(&SIGNAL_HEADER)?;
        let rows: Vec<_> = table.rows.iter().collect();
        return Ok(vec![signal_from_rows(&table, &rows, 0)?]);
    }
    table.expect_header(&STACKED_SIGNAL_HEADER)?;
    let mut out = Vec::new();
    let mut start = 0;
    while start < table.rows.len() {
        let line = table.rows[start].0;
        let id = table.rows[start].1[0];
        if id != out.len() as f64 {
            return Err(table.error(line, format!("expected realization {}, found {id}", out.len())));
        }
        let end = start + table.rows[start..].iter().take_while(|(_, v)| v[0] == id).count();
        let rows: Vec<_> = table.rows[start..end].iter().collect();
        out.push(signal_from_rows(&table, &rows, 1)?);
        start = end;
    }
    let n = out[0].len();
    if let Some(bad) = out.iter().find(|x| x.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            found: bad.len(),
        });
    }
    Ok(out)
}

/// Single-signal convenience over [`read_signals`].
pub fn read_signal(path: &Path) -> Result<BivariateSignal> {
    let mut all = read_signals(path)?;
    if all.len() != 1 {
        return Err(Error::Format {
            path: path.display().to_string(),
            line: 1,
            message: format!("expected one signal, found {} realizations", all.len()),
        });
    }
    Ok(all.remove(0))
}

fn signal_rows(x: &BivariateSignal) -> impl Iterator<Item = [f64; 3]> + '_ {
    x.samples().iter().enumerate().map(|(n, s)| [n as f64 * x.dt(), s[0], s[1]])
}

pub fn write_signal_to(out: impl Write, x: &BivariateSignal) -> Result<()> {
    write_rows(out, &SIGNAL_HEADER, signal_rows(x).map(|r| r.to_vec()))
}

pub fn write_signal(path: &Path, x: &BivariateSignal) -> Result<()> {
    write_signal_to(create(path)?, x)
}

pub fn write_stacked_signals_to(out: impl Write, xs: &[BivariateSignal]) -> Result<()> {
    let rows = xs
        .iter()
        .enumerate()
        .flat_map(|(r, x)| signal_rows(x).map(move |s| vec![r as f64, s[0], s[1], s[2]]));
    write_rows(out, &STACKED_SIGNAL_HEADER, rows)
}

pub fn write_stacked_signals(path: &Path, xs: &[BivariateSignal]) -> Result<()> {
    write_stacked_signals_to(create(path)?, xs)
}

/// Density listed at nonnegative frequencies.
pub fn read_density(path: &Path) -> Result<SynthesisTarget> {
    parse_density(open_table(path)?)
}

pub fn read_density_from(reader: impl Read, name: &str) -> Result<SynthesisTarget> {
    parse_density(read_table(reader, name)?)
}

fn parse_density(table: Table) -> Result<SynthesisTarget> {
    table.expect_header(&DENSITY_HEADER)?;
    let mut nu = Vec::with_capacity(table.rows.len());
    let mut states = Vec::with_capacity(table.rows.len());
    for (line, v) in &table.rows {
        let (f, s0, phi, s) = (v[0], v[1], v[2], [v[3], v[4], v[5]]);
        if f < 0.0 {
            return Err(table.error(*line, format!("negative frequency {f}")));
        }
        if let Some(&last) = nu.last() {
            if f <= last {
                return Err(table.error(*line, "frequencies must be strictly increasing"));
            }
        }
        if s0 < 0.0 {
            return Err(table.error(*line, format!("S0 = {s0} is negative")));
        }
        if !(0.0..=1.0).contains(&phi) {
            return Err(table.error(*line, format!("Phi = {phi} outside [0, 1]")));
        }
        let norm = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
        if (norm - phi).abs() > STOKES_TOL * phi.max(1e-3) {
            return Err(table.error(
                *line,
                format!("|(s1, s2, s3)| = {norm} does not match Phi = {phi}"),
            ));
        }
        let state = if phi < EPS_POL || s0 == 0.0 {
            PolarizationState::unpolarized(s0)
        } else {
            // (s1, s2, s3) sit on the (j, k, i) axes
            let mu = PureUnitQuaternion::new([s[2], s[0], s[1]]).map_err(|e| table.error(*line, e.to_string()))?;
            PolarizationState::new(s0, phi, Some(mu)).map_err(|e| table.error(*line, e.to_string()))?
        };
        nu.push(f);
        states.push(state);
    }
    SynthesisTarget::new(nu, states)
}

fn density_rows(d: &PolarizationDensity) -> impl Iterator<Item = Vec<f64>> + '_ {
    let df = d.resolution();
    d.half().iter().enumerate().map(move |(k, s)| {
        let [s1, s2, s3] = StokesParams::from_state(s).normalized();
        vec![k as f64 * df, s.s0, s.phi, s1, s2, s3]
    })
}

pub fn write_density_to(out: impl Write, d: &PolarizationDensity) -> Result<()> {
    write_rows(out, &DENSITY_HEADER, density_rows(d))
}

pub fn write_density(path: &Path, d: &PolarizationDensity) -> Result<()> {
    write_density_to(create(path)?, d)
}

pub fn write_poincare_to(out: impl Write, d: &PolarizationDensity) -> Result<()> {
    let df = d.resolution();
    let rows = d
        .poincare()
        .into_iter()
        .take(half_len(d.len()))
        .enumerate()
        .map(|(k, p)| vec![k as f64 * df, p.phi, p.two_theta, p.two_chi]);
    write_rows(out, &POINCARE_HEADER, rows)
}

pub fn write_poincare(path: &Path, d: &PolarizationDensity) -> Result<()> {
    write_poincare_to(create(path)?, d)
}

/// Filter parameters listed at nonnegative frequencies.
#[derive(Debug, Clone, PartialEq)]
pub enum FilterTable {
    Unitary { nu: Vec<f64>, bins: Vec<UnitaryBin> },
    Hermitian { nu: Vec<f64>, bins: Vec<HermitianBin> },
}

fn nearest(nu: &[f64], f: f64) -> usize {
    let i = nu.partition_point(|&x| x < f);
    if i == 0 {
        0
    } else if i == nu.len() || f - nu[i - 1] <= nu[i] - f {
        i - 1
    } else {
        i
    }
}

impl FilterTable {
    fn nu(&self) -> &[f64] {
        match self {
            FilterTable::Unitary { nu, .. } | FilterTable::Hermitian { nu, .. } => nu,
        }
    }

    /// Parameters on the half grid of an `n`-point signal with sample
    /// period `dt`, by nearest listed frequency.
    pub fn unitary_on_grid(&self, n: usize, dt: f64) -> Option<Result<UnitaryFilterParams>> {
        match self {
            FilterTable::Unitary { nu, bins } => Some(UnitaryFilterParams::new(
                (0..half_len(n)).map(|k| bins[nearest(nu, k as f64 / (n as f64 * dt))]).collect(),
            )),
            FilterTable::Hermitian { .. } => None,
        }
    }

    pub fn hermitian_on_grid(&self, n: usize, dt: f64) -> Option<Result<HermitianFilterParams>> {
        match self {
            FilterTable::Hermitian { nu, bins } => Some(HermitianFilterParams::new(
                (0..half_len(n)).map(|k| bins[nearest(nu, k as f64 / (n as f64 * dt))]).collect(),
            )),
            FilterTable::Unitary { .. } => None,
        }
    }

    pub fn len(&self) -> usize {
        self.nu().len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu().is_empty()
    }
}

pub fn read_filter(path: &Path) -> Result<FilterTable> {
    parse_filter(open_table(path)?)
}

pub fn read_filter_from(reader: impl Read, name: &str) -> Result<FilterTable> {
    parse_filter(read_table(reader, name)?)
}

fn parse_frequencies(table: &Table) -> Result<Vec<f64>> {
    let mut nu: Vec<f64> = Vec::with_capacity(table.rows.len());
    for (line, v) in &table.rows {
        if v[0] < 0.0 || nu.last().is_some_and(|&last| v[0] <= last) {
            return Err(table.error(*line, "frequencies must be nonnegative and strictly increasing"));
        }
        nu.push(v[0]);
    }
    Ok(nu)
}

fn parse_filter(table: Table) -> Result<FilterTable> {
    if table.header.get(1).map(String::as_str) == Some("K") {
        table.expect_header(&HERMITIAN_HEADER)?;
        let nu = parse_frequencies(&table)?;
        let bins = table
            .rows
            .iter()
            .map(|(line, v)| {
                let (k, eta, axis) = (v[1], v[2], [v[3], v[4], v[5]]);
                let mu = if axis == [0.0; 3] {
                    None
                } else {
                    Some(PureUnitQuaternion::new(axis).map_err(|e| table.error(*line, e.to_string()))?)
                };
                HermitianBin::new(k, eta, mu).map_err(|e| table.error(*line, e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(FilterTable::Hermitian { nu, bins });
    }
    table.expect_header(&UNITARY_HEADER)?;
    let nu = parse_frequencies(&table)?;
    let bins = table
        .rows
        .iter()
        .map(|(line, v)| {
            let mu = PureUnitQuaternion::new([v[1], v[2], v[3]]).map_err(|e| table.error(*line, e.to_string()))?;
            UnitaryBin::new(mu, v[4], v[5]).map_err(|e| table.error(*line, e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FilterTable::Unitary { nu, bins })
}

pub fn write_filter_to(out: impl Write, table: &FilterTable) -> Result<()> {
    match table {
        FilterTable::Unitary { nu, bins } => write_rows(
            out,
            &UNITARY_HEADER,
            nu.iter().zip(bins).map(|(&f, b)| {
                let [m1, m2, m3] = b.mu.components();
                vec![f, m1, m2, m3, b.alpha, b.phi]
            }),
        ),
        FilterTable::Hermitian { nu, bins } => write_rows(
            out,
            &HERMITIAN_HEADER,
            nu.iter().zip(bins).map(|(&f, b)| {
                let [m1, m2, m3] = b.mu.map_or([0.0; 3], |m| m.components());
                vec![f, b.gain, b.eta, m1, m2, m3]
            }),
        ),
    }
}

pub fn write_filter(path: &Path, table: &FilterTable) -> Result<()> {
    write_filter_to(create(path)?, table)
}
