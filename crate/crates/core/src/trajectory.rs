//! Trajectory records, their line-oriented file format, and ensemble
//! statistics.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::observables::{von_neumann_entropy, OscillatorState};

pub const TRAJECTORY_FORMAT_VERSION: u32 = 1;
pub const TRAJECTORY_COLUMNS: [&str; 7] = ["t", "dy", "q", "n", "S", "P", "norm_drift"];

/// Observables of one conditioned trajectory at the recorded times.
///
/// `dy` at a recorded time is the summed homodyne signal since the previous
/// record; `norm_drift` is the largest `|‖Ωψ‖ − 1|` over the same steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub params: ModelParams,
    pub kappa: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub dy: Vec<f64>,
    pub q_mean: Vec<f64>,
    pub n_mean: Vec<f64>,
    pub entropy_osc: Vec<f64>,
    pub parity: Vec<f64>,
    pub norm_drift: Vec<f64>,
    /// Oscillator states at the recorded times, kept only on request.
    #[serde(skip)]
    pub osc_states: Option<Vec<OscillatorState>>,
    /// Set when the run stopped early; the series hold the points reached.
    pub aborted: Option<String>,
}

/// Snapshot pushed at each record point.
#[derive(Clone, Debug)]
pub struct RecordPoint {
    pub t: f64,
    pub dy: f64,
    pub osc: OscillatorState,
    pub parity: f64,
    pub norm_drift: f64,
}

impl TrajectoryRecord {
    pub fn new(seed: u64, params: ModelParams, kappa: f64, dt: f64, keep_states: bool) -> Self {
        Self {
            seed,
            params,
            kappa,
            dt,
            times: Vec::new(),
            dy: Vec::new(),
            q_mean: Vec::new(),
            n_mean: Vec::new(),
            entropy_osc: Vec::new(),
            parity: Vec::new(),
            norm_drift: Vec::new(),
            osc_states: keep_states.then(Vec::new),
            aborted: None,
        }
    }

    pub fn push(&mut self, p: RecordPoint) {
        self.times.push(p.t);
        self.dy.push(p.dy);
        self.q_mean.push(p.osc.quadrature());
        self.n_mean.push(p.osc.photon_stats().0);
        self.entropy_osc.push(von_neumann_entropy(&p.osc));
        self.parity.push(p.parity);
        self.norm_drift.push(p.norm_drift);
        if let Some(v) = self.osc_states.as_mut() {
            v.push(p.osc);
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn columns(&self) -> [&[f64]; 7] {
        [&self.times, &self.dy, &self.q_mean, &self.n_mean, &self.entropy_osc, &self.parity, &self.norm_drift]
    }

    /// Writes the header block and one tab-separated line per time point.
    /// Floats use the shortest round-trip representation, so equal records
    /// produce identical bytes.
    pub fn write_to<W: Write>(&self, mut w: W, config_json: &str) -> Result<()> {
        let mut head = String::new();
        writeln!(head, "# format: dicke-trajectory").ok();
        writeln!(head, "# format_version: {TRAJECTORY_FORMAT_VERSION}").ok();
        writeln!(head, "# seed: {}", self.seed).ok();
        writeln!(head, "# kappa: {}", self.kappa).ok();
        writeln!(head, "# dt: {}", self.dt).ok();
        writeln!(head, "# params: {}", serde_json::to_string(&self.params).map_err(|e| Error::Format(e.to_string()))?).ok();
        writeln!(head, "# config: {config_json}").ok();
        if let Some(cause) = &self.aborted {
            writeln!(head, "# aborted: {}", cause.replace('\n', " ")).ok();
        }
        writeln!(head, "# columns: {}", TRAJECTORY_COLUMNS.join("\t")).ok();
        w.write_all(head.as_bytes())?;
        let cols = self.columns();
        for i in 0..self.len() {
            let line: Vec<String> = cols.iter().map(|c| format!("{}", c[i])).collect();
            writeln!(w, "{}", line.join("\t"))?;
        }
        Ok(())
    }

    pub fn read_from<Rd: BufRead>(r: Rd) -> Result<Self> {
        let mut seed = None;
        let mut kappa = None;
        let mut dt = None;
        let mut params = None;
        let mut aborted = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for line in r.lines() {
            let line = line?;
            if let Some(h) = line.strip_prefix("# ") {
                let (key, value) = h.split_once(": ").unwrap_or((h, ""));
                match key {
                    "format_version" => {
                        let v: u32 = value.parse().map_err(|_| Error::Format(format!("bad version {value:?}")))?;
                        if v != TRAJECTORY_FORMAT_VERSION {
                            return Err(Error::Format(format!("unsupported trajectory format version {v}")));
                        }
                    }
                    "seed" => seed = value.parse().ok(),
                    "kappa" => kappa = value.parse().ok(),
                    "dt" => dt = value.parse().ok(),
                    "params" => params = serde_json::from_str(value).ok(),
                    "aborted" => aborted = Some(value.to_string()),
                    _ => {}
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split('\t')
                .map(|x| x.parse().map_err(|_| Error::Format(format!("bad number {x:?}"))))
                .collect::<Result<_>>()?;
            if row.len() != TRAJECTORY_COLUMNS.len() {
                return Err(Error::Format(format!("expected {} columns, got {}", TRAJECTORY_COLUMNS.len(), row.len())));
            }
            rows.push(row);
        }
        let missing = |k: &str| Error::Format(format!("missing header field {k}"));
        let mut rec = TrajectoryRecord::new(
            seed.ok_or_else(|| missing("seed"))?,
            params.ok_or_else(|| missing("params"))?,
            kappa.ok_or_else(|| missing("kappa"))?,
            dt.ok_or_else(|| missing("dt"))?,
            false,
        );
        rec.aborted = aborted;
        for row in rows {
            rec.times.push(row[0]);
            rec.dy.push(row[1]);
            rec.q_mean.push(row[2]);
            rec.n_mean.push(row[3]);
            rec.entropy_osc.push(row[4]);
            rec.parity.push(row[5]);
            rec.norm_drift.push(row[6]);
        }
        Ok(rec)
    }
}

/// Pointwise mean and (population) variance of one observable.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl SeriesStats {
    fn from_series(series: &[&[f64]]) -> Self {
        let n = series.len() as f64;
        let len = series[0].len();
        let mut mean = vec![0.0; len];
        let mut variance = vec![0.0; len];
        for t in 0..len {
            let m = series.iter().map(|s| s[t]).sum::<f64>() / n;
            mean[t] = m;
            variance[t] = series.iter().map(|s| (s[t] - m).powi(2)).sum::<f64>() / n;
        }
        Self { mean, variance }
    }

    /// Standard error of the mean, `√(var / (count − 1))`.
    pub fn standard_error(&self, count: usize) -> Vec<f64> {
        let denom = (count.max(2) - 1) as f64;
        self.variance.iter().map(|v| (v / denom).sqrt()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub count: usize,
    pub times: Vec<f64>,
    pub q: SeriesStats,
    pub n: SeriesStats,
    pub entropy: SeriesStats,
    pub parity: SeriesStats,
    /// Entropy of the ensemble-averaged oscillator state, when every record
    /// kept its oscillator states.
    pub averaged_state_entropy: Option<Vec<f64>>,
}

/// Pointwise statistics over records sharing one time grid.
pub fn ensemble_statistics(records: &[TrajectoryRecord]) -> Result<EnsembleStats> {
    let first = records.first().ok_or_else(|| Error::InvalidArgument("no trajectories".into()))?;
    for r in records {
        let same = r.times.len() == first.times.len()
            && r.times.iter().zip(&first.times).all(|(a, b)| (a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        if !same {
            return Err(Error::Dimension(format!("trajectory {} has a different time grid", r.seed)));
        }
    }
    let col = |f: fn(&TrajectoryRecord) -> &[f64]| -> SeriesStats {
        let s: Vec<&[f64]> = records.iter().map(f).collect();
        SeriesStats::from_series(&s)
    };
    let averaged_state_entropy = if records.iter().all(|r| r.osc_states.is_some()) {
        let mut out = Vec::with_capacity(first.times.len());
        for t in 0..first.times.len() {
            let snap: Vec<OscillatorState> = records.iter().map(|r| r.osc_states.as_ref().unwrap()[t].clone()).collect();
            out.push(von_neumann_entropy(&OscillatorState::average(&snap)?));
        }
        Some(out)
    } else {
        None
    };
    Ok(EnsembleStats {
        count: records.len(),
        times: first.times.clone(),
        q: col(|r| &r.q_mean),
        n: col(|r| &r.n_mean),
        entropy: col(|r| &r.entropy_osc),
        parity: col(|r| &r.parity),
        averaged_state_entropy,
    })
}
