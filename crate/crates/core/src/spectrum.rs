//! Detuning sweeps and the on-disk spectrum format.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{DriveParams, SystemParams};
use crate::response::harmonic_balance_solve;
use crate::steady::{steady_state, BranchPolicy, SteadyState};

/// Column header of the spectrum CSV.
pub const CSV_HEADER: &str = "delta,delta_over_omega_m,re_eout,im_eout";

/// Uniform grid in units of ω_m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl NormalizedGrid {
    pub fn new(start: f64, stop: f64, count: usize) -> Result<Self> {
        let g = Self { start, stop, count };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::InvalidGrid("grid bounds must be finite".into()));
        }
        if self.count < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 points, got {}",
                self.count
            )));
        }
        if !(self.start < self.stop) {
            return Err(Error::InvalidGrid(format!(
                "start {} must be below stop {}",
                self.start, self.stop
            )));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.stop - self.start) / (self.count - 1) as f64
    }

    /// Grid points in units of ω_m.
    pub fn points(&self) -> Vec<f64> {
        let span = self.stop - self.start;
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i == self.count - 1 {
                    self.stop
                } else {
                    self.start + span * (i as f64 / last)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Solver,
    ClosedForm,
    Oracle,
    ExternalFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Probe detunings Δ in rad/s, ascending.
    pub grid: Vec<f64>,
    /// The same points in units of ω_m.
    pub normalized: Vec<f64>,
    pub absorption: Vec<f64>,
    pub dispersion: Vec<f64>,
    pub provenance: Provenance,
}

/// Rounds to the nine significant digits kept by the CSV format.
pub fn quantize(x: f64) -> f64 {
    format!("{x:.8e}").parse().unwrap_or(x)
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Checks column lengths, ordering and grid uniformity. The uniformity
    /// tolerance is `1e-7 · max|Δ|`, loose enough for grids that went through
    /// the nine-digit CSV format.
    pub fn validate(&self) -> Result<()> {
        let n = self.grid.len();
        if n == 0 {
            return Err(Error::EmptySpectrum);
        }
        if self.normalized.len() != n || self.absorption.len() != n || self.dispersion.len() != n {
            return Err(Error::InvalidGrid(
                "spectrum columns differ in length".into(),
            ));
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 points, got {n}"
            )));
        }
        if self
            .grid
            .iter()
            .chain(&self.absorption)
            .chain(&self.dispersion)
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidGrid(
                "spectrum contains non-finite values".into(),
            ));
        }
        if let Some(i) = (1..n).find(|&i| self.grid[i] <= self.grid[i - 1]) {
            return Err(Error::InvalidGrid(format!(
                "grid not strictly ascending at index {i}"
            )));
        }
        let first = self.grid[0];
        let h = (self.grid[n - 1] - first) / (n - 1) as f64;
        let tol = 1e-7 * self.grid.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if let Some(i) = (0..n).find(|&i| (self.grid[i] - (first + h * i as f64)).abs() > tol) {
            return Err(Error::InvalidGrid(format!("grid not uniform at index {i}")));
        }
        Ok(())
    }

    /// Every column rounded to nine significant digits, exactly as a CSV
    /// round trip would return it.
    pub fn quantized(&self) -> Spectrum {
        let q = |v: &[f64]| v.iter().map(|&x| quantize(x)).collect();
        Spectrum {
            grid: q(&self.grid),
            normalized: q(&self.normalized),
            absorption: q(&self.absorption),
            dispersion: q(&self.dispersion),
            provenance: self.provenance,
        }
    }

    /// Multiplies the absorption column by `factor`.
    pub fn scaled_absorption(&self, factor: f64) -> Spectrum {
        Spectrum {
            absorption: self.absorption.iter().map(|a| a * factor).collect(),
            ..self.clone()
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut out = String::with_capacity(64 * (self.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for i in 0..self.len() {
            out.push_str(&format!(
                "{:.8e},{:.8e},{:.8e},{:.8e}\n",
                self.grid[i], self.normalized[i], self.absorption[i], self.dispersion[i]
            ));
        }
        w.write_all(out.as_bytes())?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }

    /// Reads a spectrum in the format written by [`Spectrum::write_csv`].
    /// Line numbers in errors are 1-based and count the header.
    pub fn read_csv<R: Read>(r: R) -> Result<Spectrum> {
        let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
        let mut records = reader.records();
        let malformed = |line: u64, message: String| Error::MalformedCsv {
            line: line as usize,
            message,
        };

        let header = match records.next() {
            None => return Err(malformed(1, "file is empty".into())),
            Some(h) => h.map_err(|e| malformed(1, e.to_string()))?,
        };
        let header: Vec<&str> = header.iter().map(str::trim).collect();
        if header.join(",") != CSV_HEADER {
            return Err(malformed(
                1,
                format!("expected header `{CSV_HEADER}`, got `{}`", header.join(",")),
            ));
        }

        let mut s = Spectrum {
            grid: Vec::new(),
            normalized: Vec::new(),
            absorption: Vec::new(),
            dispersion: Vec::new(),
            provenance: Provenance::ExternalFile,
        };
        for rec in records {
            let rec = rec.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                malformed(line, e.to_string())
            })?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            if rec.len() != 4 {
                return Err(malformed(
                    line,
                    format!("expected 4 fields, got {}", rec.len()),
                ));
            }
            let mut vals = [0.0; 4];
            for (k, field) in rec.iter().enumerate() {
                vals[k] = field.trim().parse().map_err(|_| {
                    malformed(line, format!("field {} is not a number: `{field}`", k + 1))
                })?;
            }
            s.grid.push(vals[0]);
            s.normalized.push(vals[1]);
            s.absorption.push(vals[2]);
            s.dispersion.push(vals[3]);
        }
        if s.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        s.validate()?;
        Ok(s)
    }
}

/// Harmonic-balance spectrum at the given detunings (rad/s). Points are
/// evaluated in parallel and assembled in input order.
pub fn sweep_detunings(
    params: &SystemParams,
    ss: &SteadyState,
    eps_p: f64,
    deltas: &[f64],
) -> Result<Spectrum> {
    let responses: Vec<_> = deltas
        .par_iter()
        .enumerate()
        .map(|(index, &d)| {
            harmonic_balance_solve(params, ss, d, eps_p).map_err(|e| Error::AtGridPoint {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    Ok(Spectrum {
        grid: deltas.to_vec(),
        normalized: deltas.iter().map(|d| d / params.omega_m).collect(),
        absorption: responses.iter().map(|r| r.absorption).collect(),
        dispersion: responses.iter().map(|r| r.dispersion).collect(),
        provenance: Provenance::Solver,
    })
}

/// Sweeps the probe over `grid` (units of ω_m) around an already computed
/// steady state.
pub fn sweep_from(
    params: &SystemParams,
    ss: &SteadyState,
    eps_p: f64,
    grid: &NormalizedGrid,
) -> Result<Spectrum> {
    grid.validate()?;
    let normalized = grid.points();
    let deltas: Vec<f64> = normalized.iter().map(|x| x * params.omega_m).collect();
    let mut s = sweep_detunings(params, ss, eps_p, &deltas)?;
    s.normalized = normalized;
    Ok(s)
}

/// Computes the steady state for `policy` and sweeps the probe over `grid`.
pub fn sweep(
    params: &SystemParams,
    drive: &DriveParams,
    grid: &NormalizedGrid,
    policy: BranchPolicy,
) -> Result<(SteadyState, Spectrum)> {
    params.validate()?;
    drive.validate()?;
    let ss = steady_state(params, drive, policy)?;
    let spectrum = sweep_from(params, &ss, drive.eps_p, grid)?;
    Ok((ss, spectrum))
}
