//! Finite-size analysis of slice peaks.

use serde::Serialize;

use crate::table::Table;
use crate::{CliError, Result};

/// One slice: grid values and the observable along it, at chain length `l`.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceSeries {
    pub l: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl SliceSeries {
    /// Reads the slice variable and `column` from a slice table; failed
    /// rows are dropped.
    pub fn from_table(t: &Table, column: &str) -> Result<Self> {
        let xcol = t
            .columns
            .iter()
            .find(|c| c.starts_with("x_"))
            .ok_or_else(|| CliError::Analysis("not a slice table".into()))?
            .clone();
        let xs = t.numeric(&xcol)?;
        let ys = t.numeric(column)?;
        let ls = t.numeric("L")?;
        let l = ls.first().copied().filter(|v| v.is_finite()).ok_or_else(|| CliError::Analysis("empty slice table".into()))?;
        let (x, y) = xs.into_iter().zip(ys).filter(|(a, b)| a.is_finite() && b.is_finite()).unzip();
        Ok(Self { l: l as usize, x, y })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Peak {
    pub l: usize,
    pub location: f64,
    pub height: f64,
    /// Grid index of the largest sample.
    pub grid_index: usize,
}

/// Vertex of the parabola through the grid maximum and its two neighbours.
/// Fails when the maximum sits on either end of the grid.
pub fn locate_peak(x: &[f64], y: &[f64]) -> Result<(f64, f64, usize)> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(CliError::Analysis("need at least three points".into()));
    }
    let k = (0..y.len()).max_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap();
    if k == 0 || k + 1 == y.len() {
        return Err(CliError::Analysis(format!("no interior peak (maximum at grid end x = {})", x[k])));
    }
    let (d0, d2) = (x[k - 1] - x[k], x[k + 1] - x[k]);
    let (e0, e2) = (y[k - 1] - y[k], y[k + 1] - y[k]);
    let det = d0 * d2 * (d2 - d0);
    let b = (e0 * d2 * d2 - e2 * d0 * d0) / det;
    let c = (e2 * d0 - e0 * d2) / det;
    if !(c < 0.0) {
        return Ok((x[k], y[k], k));
    }
    Ok((x[k] - b / (2.0 * c), y[k] - b * b / (4.0 * c), k))
}

/// `y = A x^p` fitted by least squares in log-log space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub exponent_se: f64,
    pub prefactor: f64,
    pub points: usize,
}

pub fn power_law_fit(x: &[f64], y: &[f64]) -> Result<PowerFit> {
    let pts: Vec<(f64, f64)> =
        x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    let n = pts.len();
    if n < 3 {
        return Err(CliError::Analysis(format!("power-law fit needs >= 3 positive points, got {n}")));
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(CliError::Analysis("all sizes identical".into()));
    }
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum();
    Ok(PowerFit { exponent: slope, exponent_se: (ssr / (nf - 2.0) / sxx).sqrt(), prefactor: icpt.exp(), points: n })
}

#[derive(Clone, Debug, Serialize)]
pub struct PeakScaling {
    /// Per input slice, the peak or why none was found.
    pub peaks: Vec<std::result::Result<Peak, String>>,
    /// Peak height against `L`.
    pub height: Option<PowerFit>,
    /// `|x_peak − x_c|` against `L`.
    pub location: Option<PowerFit>,
}

/// Peak height and location per size, then power-law exponents for the
/// height and for the distance of the peak from `x_c`.
pub fn peak_scaling_analysis(series: &[SliceSeries], x_c: f64) -> Result<PeakScaling> {
    if series.len() < 3 {
        return Err(CliError::Analysis(format!("need slices at >= 3 sizes, got {}", series.len())));
    }
    let peaks: Vec<_> = series
        .iter()
        .map(|s| {
            locate_peak(&s.x, &s.y)
                .map(|(location, height, grid_index)| Peak { l: s.l, location, height, grid_index })
                .map_err(|e| format!("L = {}: {e}", s.l))
        })
        .collect();
    let ok: Vec<&Peak> = peaks.iter().filter_map(|p| p.as_ref().ok()).collect();
    let ls: Vec<f64> = ok.iter().map(|p| p.l as f64).collect();
    let heights: Vec<f64> = ok.iter().map(|p| p.height).collect();
    let dist: Vec<f64> = ok.iter().map(|p| (p.location - x_c).abs()).collect();
    Ok(PeakScaling { height: power_law_fit(&ls, &heights).ok(), location: power_law_fit(&ls, &dist).ok(), peaks })
}
