//! Peaks, dips, transparency windows and Fano zeros of an absorption trace.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// A dip is a transparency window if its value is below this fraction of
    /// the mean flanking peak height.
    pub dip_fraction: f64,
    /// Absorption below which a minimum counts as a zero (bare-cavity peak = 2).
    pub zero_threshold: f64,
    /// Minimum ratio of the higher to the lower flank for a Fano zero.
    pub asym_ratio: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            dip_fraction: 0.10,
            zero_threshold: 0.02,
            asym_ratio: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Refined fractional grid index.
    pub index: f64,
    /// Δ in the spectrum's detuning units.
    pub location: f64,
    /// Δ/ω_m.
    pub location_norm: f64,
    pub height: f64,
    /// Half width at half maximum (detuning units), when a half-maximum
    /// crossing exists on at least one side before the neighbouring minimum.
    pub half_width: Option<f64>,
    /// Peak sits on the first or last grid point.
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dip {
    pub index: f64,
    pub location: f64,
    pub location_norm: f64,
    /// Absorption at the refined minimum.
    pub depth: f64,
    /// Indices into `SpectralFeatures::peaks`.
    pub left_peak: usize,
    pub right_peak: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub left_peak: usize,
    pub dip: usize,
    pub right_peak: usize,
    /// Peak separation in detuning units.
    pub width: f64,
    pub width_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanoZero {
    pub dip: usize,
    pub location: f64,
    pub location_norm: f64,
    pub value: f64,
    /// Higher over lower flank maximum, each flank spanning the distance from
    /// the zero to the nearer neighbouring peak.
    pub flank_ratio: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectralFeatures {
    pub peaks: Vec<Peak>,
    pub dips: Vec<Dip>,
    pub windows: Vec<Window>,
    pub fano_zeros: Vec<FanoZero>,
}

impl SpectralFeatures {
    pub fn interior_peaks(&self) -> impl Iterator<Item = &Peak> {
        self.peaks.iter().filter(|p| !p.boundary)
    }

    pub fn interior_peak_count(&self) -> usize {
        self.interior_peaks().count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Max,
    Min,
}

struct Extremum {
    kind: Kind,
    pos: f64,
    value: f64,
    boundary: bool,
}

/// Vertex of the parabola through `(-1, y0), (0, y1), (1, y2)`.
fn parabola_vertex(y0: f64, y1: f64, y2: f64) -> (f64, f64) {
    let denom = y0 - 2.0 * y1 + y2;
    if denom == 0.0 {
        return (0.0, y1);
    }
    let offset = (0.5 * (y0 - y2) / denom).clamp(-0.5, 0.5);
    (offset, y1 - 0.25 * (y0 - y2) * offset)
}

/// Local extrema by a 3-point stencil, treating runs of equal samples as one
/// point. Grid-end maxima are kept and flagged; grid-end minima are dropped.
fn extrema(y: &[f64]) -> Vec<Extremum> {
    let n = y.len();
    let mut out = Vec::new();
    let mut s = 0;
    while s < n {
        let mut e = s;
        while e + 1 < n && y[e + 1] == y[s] {
            e += 1;
        }
        let v = y[s];
        let left = (s > 0).then(|| y[s - 1]);
        let right = (e + 1 < n).then(|| y[e + 1]);
        let boundary = left.is_none() || right.is_none();
        let is_max = left.is_none_or(|l| l < v) && right.is_none_or(|r| r < v);
        let is_min = left.is_none_or(|l| l > v) && right.is_none_or(|r| r > v);
        let kind = match (is_max, is_min) {
            (true, false) => Some(Kind::Max),
            (false, true) if !boundary => Some(Kind::Min),
            _ => None,
        };
        if let Some(kind) = kind {
            let (pos, value) = if boundary {
                (if s == 0 { s as f64 } else { e as f64 }, v)
            } else if e - s <= 1 {
                let (off, val) = parabola_vertex(y[s - 1], y[s], y[s + 1]);
                (s as f64 + off, val)
            } else {
                (0.5 * (s + e) as f64, v)
            };
            out.push(Extremum {
                kind,
                pos,
                value,
                boundary,
            });
        }
        s = e + 1;
    }
    out
}

/// Linear interpolation of a column at a fractional index.
fn at_fraction(col: &[f64], f: f64) -> f64 {
    let last = col.len() - 1;
    let f = f.clamp(0.0, last as f64);
    let i = (f.floor() as usize).min(last.saturating_sub(1));
    let t = f - i as f64;
    if t == 0.0 {
        col[i]
    } else {
        col[i] + t * (col[i + 1] - col[i])
    }
}

/// Fractional index where `y` first falls below `level` walking from `start`
/// in direction `dir`, stopping at a rise (the next minimum) or the grid end.
fn half_crossing(y: &[f64], start: usize, dir: isize, level: f64) -> Option<f64> {
    let mut i = start as isize;
    loop {
        let j = i + dir;
        if j < 0 || j as usize >= y.len() {
            return None;
        }
        let (a, b) = (y[i as usize], y[j as usize]);
        if b < level {
            let t = (a - level) / (a - b);
            return Some(i as f64 + dir as f64 * t);
        }
        if b > a {
            return None;
        }
        i = j;
    }
}

fn half_width(s: &Spectrum, pos: f64, height: f64) -> Option<f64> {
    let y = &s.absorption;
    let level = 0.5 * height;
    let start = pos.round() as usize;
    let centre = at_fraction(&s.grid, pos);
    let sides: Vec<f64> = [-1isize, 1]
        .iter()
        .filter_map(|&dir| half_crossing(y, start, dir, level))
        .map(|f| (at_fraction(&s.grid, f) - centre).abs())
        .collect();
    if sides.is_empty() {
        None
    } else {
        Some(sides.iter().sum::<f64>() / sides.len() as f64)
    }
}

/// Compares the two sides of a minimum over the same distance: the nearer
/// neighbouring peak on one side against the largest value reached within
/// that distance on the other.
fn flank_ratio(y: &[f64], pos: f64, left: &Peak, right: &Peak) -> f64 {
    let (near, dir, d) = if pos - left.index <= right.index - pos {
        (left.height, 1.0, pos - left.index)
    } else {
        (right.height, -1.0, right.index - pos)
    };
    let edge = pos + dir * d;
    let (lo, hi) = if dir > 0.0 { (pos, edge) } else { (edge, pos) };
    let far = (lo.ceil() as usize..=hi.floor() as usize)
        .map(|i| y[i])
        .fold(at_fraction(y, edge), f64::max);
    let (big, small) = if near >= far {
        (near, far)
    } else {
        (far, near)
    };
    if small > 0.0 {
        big / small
    } else {
        f64::INFINITY
    }
}

/// Extracts features from the absorption column of `spectrum`.
pub fn extract_features(spectrum: &Spectrum, thresholds: &Thresholds) -> Result<SpectralFeatures> {
    if spectrum.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    spectrum.validate()?;
    let y = &spectrum.absorption;

    let mut features = SpectralFeatures::default();
    let mut pending_dips = Vec::new();
    for ex in extrema(y) {
        let location = at_fraction(&spectrum.grid, ex.pos);
        let location_norm = at_fraction(&spectrum.normalized, ex.pos);
        match ex.kind {
            Kind::Max => features.peaks.push(Peak {
                index: ex.pos,
                location,
                location_norm,
                height: ex.value,
                half_width: half_width(spectrum, ex.pos, ex.value),
                boundary: ex.boundary,
            }),
            Kind::Min => pending_dips.push((ex, location, location_norm)),
        }
    }

    for (ex, location, location_norm) in pending_dips {
        // An interior minimum always has a maximum on each side.
        let right_peak = features
            .peaks
            .iter()
            .position(|p| p.index > ex.pos)
            .expect("maximum right of a minimum");
        let left_peak = right_peak - 1;
        debug_assert!(features.peaks[left_peak].index < ex.pos);
        let d = features.dips.len();
        features.dips.push(Dip {
            index: ex.pos,
            location,
            location_norm,
            depth: ex.value,
            left_peak,
            right_peak,
        });

        let (l, r) = (&features.peaks[left_peak], &features.peaks[right_peak]);
        let mean_flank = 0.5 * (l.height + r.height);
        if !l.boundary && !r.boundary && ex.value < thresholds.dip_fraction * mean_flank {
            features.windows.push(Window {
                left_peak,
                dip: d,
                right_peak,
                width: r.location - l.location,
                width_norm: r.location_norm - l.location_norm,
            });
        }
        let flank_ratio = flank_ratio(y, ex.pos, l, r);
        if ex.value < thresholds.zero_threshold && flank_ratio > thresholds.asym_ratio {
            features.fano_zeros.push(FanoZero {
                dip: d,
                location,
                location_norm,
                value: ex.value,
                flank_ratio,
            });
        }
    }
    Ok(features)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::Provenance;
    use proptest::prelude::*;

    fn synthetic(f: impl Fn(f64) -> f64, n: usize, a: f64, b: f64) -> Spectrum {
        let grid: Vec<f64> = (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect();
        Spectrum {
            normalized: grid.clone(),
            absorption: grid.iter().map(|&x| f(x)).collect(),
            dispersion: vec![0.0; n],
            grid,
            provenance: Provenance::ExternalFile,
        }
    }

    fn double_lorentzian(s: f64) -> impl Fn(f64) -> f64 {
        move |x: f64| {
            1.0 / (1.0 + ((x - 1.0 - s) / 0.02).powi(2))
                + 1.0 / (1.0 + ((x - 1.0 + s) / 0.02).powi(2))
        }
    }

    #[test]
    fn double_lorentzian_peaks_recovered() {
        let s = 0.1;
        let spec = synthetic(double_lorentzian(s), 2001, 0.5, 1.5);
        let f = extract_features(&spec, &Thresholds::default()).unwrap();
        let step = 1.0 / 2000.0;
        assert_eq!(f.peaks.len(), 2);
        assert!((f.peaks[0].location - (1.0 - s)).abs() < 0.1 * step);
        assert!((f.peaks[1].location - (1.0 + s)).abs() < 0.1 * step);
        assert_eq!(f.dips.len(), 1);
        assert!((f.dips[0].location - 1.0).abs() < 1e-9);
        assert_eq!(f.windows.len(), 1);
        assert!((f.windows[0].width - 2.0 * s).abs() < 0.2 * step);
        // Symmetric flanks: not a Fano zero.
        assert!(f.fano_zeros.is_empty());
        let hw = f.peaks[0].half_width.unwrap();
        assert!((hw - 0.02).abs() < 2e-3, "{hw}");
    }

    #[test]
    fn boundary_peaks_are_flagged_not_flanks() {
        let spec = synthetic(|x| (x - 1.0).powi(2) + 0.001, 101, 0.0, 2.0);
        let f = extract_features(&spec, &Thresholds::default()).unwrap();
        assert_eq!(f.peaks.len(), 2);
        assert!(f.peaks.iter().all(|p| p.boundary));
        assert_eq!(f.dips.len(), 1);
        assert!(f.windows.is_empty());
        assert_eq!(f.interior_peak_count(), 0);
    }

    #[test]
    fn asymmetric_zero_is_a_fano_zero() {
        let fano = |x: f64| {
            let q = 3.0;
            let e = (x - 1.0) / 0.01 - q;
            2.0 / (1.0 + q * q) * (e + q).powi(2) / (1.0 + e * e)
                + 0.5 / (1.0 + ((x - 0.7) / 0.05).powi(2))
        };
        let spec = synthetic(fano, 4001, 0.5, 1.5);
        let f = extract_features(&spec, &Thresholds::default()).unwrap();
        assert_eq!(f.fano_zeros.len(), 1, "{f:?}");
        assert!((f.fano_zeros[0].location - 1.0).abs() < 1e-3);
        assert!(f.fano_zeros[0].flank_ratio > 2.0);
    }

    #[test]
    fn plateau_is_one_extremum() {
        let mut spec = synthetic(|x| 1.0 - (x - 0.5).abs(), 11, 0.0, 1.0);
        spec.absorption[4] = spec.absorption[5];
        spec.absorption[6] = spec.absorption[5];
        let f = extract_features(&spec, &Thresholds::default()).unwrap();
        assert_eq!(f.peaks.len(), 1);
        assert_eq!(f.peaks[0].index, 5.0);
    }

    #[test]
    fn empty_spectrum_errors() {
        let spec = Spectrum {
            grid: vec![],
            normalized: vec![],
            absorption: vec![],
            dispersion: vec![],
            provenance: Provenance::ExternalFile,
        };
        assert!(matches!(
            extract_features(&spec, &Thresholds::default()),
            Err(Error::EmptySpectrum)
        ));
    }

    proptest! {
        #[test]
        fn rescaling_keeps_locations(factor in 0.01f64..100.0, s in 0.03f64..0.3) {
            let spec = synthetic(double_lorentzian(s), 1001, 0.5, 1.5);
            let a = extract_features(&spec, &Thresholds::default()).unwrap();
            let b = extract_features(&spec.scaled_absorption(factor), &Thresholds::default()).unwrap();
            prop_assert_eq!(a.peaks.len(), b.peaks.len());
            prop_assert_eq!(a.dips.len(), b.dips.len());
            for (p, q) in a.peaks.iter().zip(&b.peaks) {
                prop_assert!((p.location - q.location).abs() < 1e-9);
                prop_assert!((q.height - factor * p.height).abs() < 1e-9 * factor * p.height);
            }
            for (p, q) in a.dips.iter().zip(&b.dips) {
                prop_assert!((p.location - q.location).abs() < 1e-9);
            }
        }
    }
}
