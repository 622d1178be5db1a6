//! Ground-state scans: the `h + J + g = 1` simplex and one-parameter slices.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use dicke_mps::checkpoint::{load_checkpoint, save_checkpoint};
use dicke_mps::groundstate::{excited_states, ground_state, thermal_average, EigenstateSet, GroundState, SolveStatus};
use dicke_mps::mpo::{build_dicke_ising_mpo, MpOperator};
use dicke_mps::observables::{bond_entropy, magnetization, parity_expectation, photon_stats, sigma_y_correlations, Axis};
use dicke_mps::{ModelParams, Mps};

use crate::config::{simplex_points, Extra, Mode, ScanConfig};
use crate::pool::run_ordered;
use crate::table::{cell, num, opt_num, Table};
use crate::{CliError, Result};

const STATUS_COLUMNS: [&str; 7] = ["converged", "status", "rel_variance", "top_fock", "max_bond", "sweeps", "error"];

/// A finished (or resumed) scan.
#[derive(Clone, Debug)]
pub struct ScanOutcome {
    pub table: Table,
    pub path: PathBuf,
    /// Rows computed in this run; the rest were taken from the file.
    pub computed: usize,
}

/// Ground state of one grid point plus, when `levels > 1`, the low-lying set.
pub struct PointSolution {
    pub ground: GroundState<f64>,
    pub levels: Option<EigenstateSet<f64>>,
}

impl PointSolution {
    pub fn converged(&self) -> bool {
        self.ground.report.converged() && self.levels.as_ref().is_none_or(|s| s.reports.iter().all(|r| r.converged()))
    }

    /// `(E₁ − E₀, E₂ − E₀)` when enough levels were computed.
    pub fn gaps(&self) -> (Option<f64>, Option<f64>) {
        let g = self.levels.as_ref().map(|s| s.gaps()).unwrap_or_default();
        (g.first().copied(), g.get(1).copied())
    }
}

pub fn solve_point(cfg: &ScanConfig, p: &ModelParams, seed: u64, warm: Option<&Mps>) -> Result<PointSolution> {
    let h = build_dicke_ising_mpo::<f64>(p)?;
    let dmrg = cfg.solver.dmrg(seed)?;
    let ground = ground_state(&h, warm, &dmrg)?;
    let levels = if cfg.solver.levels > 1 {
        Some(excited_states(&h, cfg.solver.levels, &dmrg, p.energy_scale())?)
    } else {
        None
    };
    Ok(PointSolution { ground, levels })
}

fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Converged => "converged",
        SolveStatus::SweepCapReached => "sweep_cap",
        SolveStatus::Stalled => "stalled",
    }
}

fn extra_columns(cfg: &ScanConfig) -> Vec<String> {
    let mut out = Vec::new();
    for e in &cfg.observables {
        let name = match e {
            Extra::Xi if cfg.mode == Mode::Simplex => continue,
            Extra::Xi => "xi",
            Extra::Sz => "sz",
            Extra::Entropy => "bond_entropy",
        };
        if !out.iter().any(|c| c == name) {
            out.push(name.to_string());
        }
    }
    out
}

fn xi_of(psi: &Mps) -> Result<Option<f64>> {
    Ok(sigma_y_correlations(psi, None)?.fitted_xi)
}

fn extra_values(cfg: &ScanConfig, psi: &Mps) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for name in extra_columns(cfg) {
        out.push(match name.as_str() {
            "xi" => opt_num(xi_of(psi)?),
            "sz" => {
                let m = magnetization(psi, Axis::Z)?;
                num(m.iter().sum::<f64>() / m.len() as f64)
            }
            _ => num(bond_entropy(psi, psi.len() / 2 - 1)?),
        });
    }
    Ok(out)
}

fn status_values(sol: &PointSolution) -> Vec<String> {
    let r = &sol.ground.report;
    vec![
        if sol.converged() { "1" } else { "0" }.into(),
        status_name(r.status).into(),
        num(r.relative_variance()),
        num(r.top_fock_population),
        r.max_bond.to_string(),
        r.sweeps_used.to_string(),
        "-".into(),
    ]
}

fn failed_row(prefix: Vec<String>, width: usize, err: &CliError) -> Vec<String> {
    let mut row = prefix;
    while row.len() + STATUS_COLUMNS.len() < width {
        row.push("nan".into());
    }
    row.extend(["0", "failed", "nan", "nan", "0", "0"].map(String::from));
    row.push(cell(&err.to_string()));
    row
}

pub fn simplex_columns(cfg: &ScanConfig) -> Vec<String> {
    let mut c: Vec<String> =
        ["index", "h", "J", "g", "L", "n_max", "E0", "n_per_L", "gap1", "gap2", "xi", "parity"].map(String::from).to_vec();
    c.extend(extra_columns(cfg));
    c.extend(STATUS_COLUMNS.map(String::from));
    c
}

pub fn slice_columns(cfg: &ScanConfig) -> Vec<String> {
    let var = cfg.slice.as_ref().map_or("h", |s| s.variable.name());
    let mut c: Vec<String> = vec!["index".into(), format!("x_{var}")];
    c.extend(
        ["h", "J", "g", "omega", "L", "n_max", "E0", "n", "var_n", "var_over_n", "gap1", "gap2", "parity"].map(String::from),
    );
    if cfg.slice.as_ref().is_some_and(|s| s.temperature.is_some()) {
        c.extend(["n_thermal", "thermal_tail"].map(String::from));
    }
    c.extend(extra_columns(cfg));
    c.extend(STATUS_COLUMNS.map(String::from));
    c
}

fn simplex_row(cfg: &ScanConfig, index: usize, p: &ModelParams, sol: &Result<PointSolution>) -> Vec<String> {
    let prefix = vec![index.to_string(), num(p.h), num(p.j), num(p.g), p.l.to_string(), p.n_max.to_string()];
    let width = simplex_columns(cfg).len();
    let body = |sol: &PointSolution| -> Result<Vec<String>> {
        let psi = &sol.ground.state;
        let (n, _) = photon_stats(psi)?;
        let (g1, g2) = sol.gaps();
        let mut row = prefix.clone();
        row.extend([
            num(sol.ground.report.energy),
            num(n / p.l as f64),
            opt_num(g1),
            opt_num(g2),
            opt_num(xi_of(psi)?),
            num(parity_expectation(psi)?),
        ]);
        row.extend(extra_values(cfg, psi)?);
        row.extend(status_values(sol));
        Ok(row)
    };
    match sol.as_ref().map_err(clone_err).and_then(body) {
        Ok(r) => r,
        Err(e) => failed_row(prefix, width, &e),
    }
}

fn slice_row(cfg: &ScanConfig, index: usize, x: f64, p: &ModelParams, sol: &Result<PointSolution>) -> Vec<String> {
    let prefix = vec![
        index.to_string(),
        num(x),
        num(p.h),
        num(p.j),
        num(p.g),
        num(p.omega),
        p.l.to_string(),
        p.n_max.to_string(),
    ];
    let width = slice_columns(cfg).len();
    let temperature = cfg.slice.as_ref().and_then(|s| s.temperature);
    let body = |sol: &PointSolution| -> Result<Vec<String>> {
        let psi = &sol.ground.state;
        let (n, var) = photon_stats(psi)?;
        let (g1, g2) = sol.gaps();
        let mut row = prefix.clone();
        row.extend([
            num(sol.ground.report.energy),
            num(n),
            num(var),
            num(if n > 0.0 { var / n } else { f64::NAN }),
            opt_num(g1),
            opt_num(g2),
            num(parity_expectation(psi)?),
        ]);
        if let Some(t) = temperature {
            let set = sol.levels.as_ref().ok_or_else(|| CliError::Config("thermal column needs levels".into()))?;
            let n_op = MpOperator::<f64>::number(&p.site_specs())?;
            let th = thermal_average(set, t, &n_op)?;
            row.extend([num(th.value), num(th.truncation_weight)]);
        }
        row.extend(extra_values(cfg, psi)?);
        row.extend(status_values(sol));
        Ok(row)
    };
    match sol.as_ref().map_err(clone_err).and_then(body) {
        Ok(r) => r,
        Err(e) => failed_row(prefix, width, &e),
    }
}

fn clone_err(e: &CliError) -> CliError {
    CliError::Table(e.to_string())
}

const XI_METHOD: &str = "connected sigma_y correlations, |C(r)| averaged over pairs at least L/8 from both ends, \
     least-squares fit of log|C| against r for 2 <= r <= L/2";

/// Incremental table file. On resume the completed prefix of an existing
/// file with the same config hash is kept and the file is rewritten
/// without any partially written line.
struct TableWriter {
    table: Table,
    path: PathBuf,
    file: std::fs::File,
}

impl TableWriter {
    fn open(cfg: &ScanConfig, kind: &str, columns: Vec<String>) -> Result<Self> {
        std::fs::create_dir_all(&cfg.output)?;
        let path = cfg.output.join(format!("{kind}.tsv"));
        let mut table = Table::new(kind, &cfg.hash(), &cfg.physics_json(), columns);
        if table.columns.iter().any(|c| c == "xi") {
            table.meta.push(("xi_method".into(), XI_METHOD.into()));
        }
        if cfg.resume && path.exists() {
            let old = Table::read(&path)?;
            if old.config_hash != table.config_hash || old.columns != table.columns || old.kind != table.kind {
                return Err(CliError::Table(format!("{} was written by a different configuration", path.display())));
            }
            table.rows = old.rows.into_iter().enumerate().take_while(|(i, r)| r[0] == i.to_string()).map(|(_, r)| r).collect();
        }
        table.write(&path)?;
        let file = OpenOptions::new().append(true).open(&path)?;
        Ok(Self { table, path, file })
    }

    fn done(&self) -> usize {
        self.table.rows.len()
    }

    fn push(&mut self, row: Vec<String>) -> Result<()> {
        writeln!(self.file, "{}", row.join("\t"))?;
        self.file.flush()?;
        self.table.rows.push(row);
        Ok(())
    }

    fn finish(self, computed: usize) -> ScanOutcome {
        ScanOutcome { table: self.table, path: self.path, computed }
    }
}

/// Scans the barycentric grid of resolution `R` at `ω = 1`: per point the
/// ground energy, `⟨n⟩/L`, the first two gaps, `ξ`, `⟨P⟩` and the solver
/// certificate. Points are solved in parallel and written in grid order;
/// a failing point is recorded in its row and the scan goes on.
pub fn run_simplex_scan(cfg: &ScanConfig) -> Result<ScanOutcome> {
    cfg.validate()?;
    let res = cfg.simplex.as_ref().ok_or_else(|| CliError::Config("missing [simplex]".into()))?.resolution;
    let points = simplex_points(res);
    let mut w = TableWriter::open(cfg, "simplex", simplex_columns(cfg))?;
    let todo: Vec<usize> = (w.done()..points.len()).collect();
    let job = |i: usize| -> Vec<String> {
        let (h, j, g) = points[i];
        match cfg.model.params(h, j, g, 1.0) {
            Ok(p) => simplex_row(cfg, i, &p, &solve_point(cfg, &p, cfg.seed_base + i as u64, None)),
            Err(e) => failed_row(vec![i.to_string(), num(h), num(j), num(g)], simplex_columns(cfg).len(), &e),
        }
    };
    run_ordered(&todo, cfg.workers, job, |_, row| w.push(row))?;
    Ok(w.finish(todo.len()))
}

fn checkpoint_path(dir: &Path, i: usize) -> PathBuf {
    dir.join("checkpoints").join(format!("slice_{i:04}.mps"))
}

/// One-parameter slice. With `warm_start` each point starts from the
/// previous point's state (kept on disk, so a resumed slice continues the
/// same chain); otherwise points are independent and run in parallel.
pub fn run_slice(cfg: &ScanConfig) -> Result<ScanOutcome> {
    cfg.validate()?;
    let slice = cfg.slice.as_ref().ok_or_else(|| CliError::Config("missing [slice]".into()))?;
    let xs = slice.values();
    let mut w = TableWriter::open(cfg, "slice", slice_columns(cfg))?;
    let start = w.done();
    let todo: Vec<usize> = (start..xs.len()).collect();
    let row_for = |i: usize, sol: &Result<PointSolution>| match cfg.slice_params(xs[i]) {
        Ok(p) => slice_row(cfg, i, xs[i], &p, sol),
        Err(e) => failed_row(vec![i.to_string(), num(xs[i])], slice_columns(cfg).len(), &e),
    };
    if !slice.warm_start {
        let job = |i: usize| {
            let sol = cfg.slice_params(xs[i]).and_then(|p| solve_point(cfg, &p, cfg.seed_base + i as u64, None));
            row_for(i, &sol)
        };
        run_ordered(&todo, cfg.workers, job, |_, row| w.push(row))?;
        return Ok(w.finish(todo.len()));
    }
    std::fs::create_dir_all(cfg.output.join("checkpoints"))?;
    let hash = cfg.hash();
    let mut warm: Option<Mps> = None;
    if start > 0 {
        let path = checkpoint_path(&cfg.output, start - 1);
        if let Ok((psi, meta)) = load_checkpoint::<f64>(&path) {
            if meta.get("config_hash").and_then(|v| v.as_str()) == Some(hash.as_str()) {
                warm = Some(psi);
            }
        }
    }
    for &i in &todo {
        let sol = cfg.slice_params(xs[i]).and_then(|p| solve_point(cfg, &p, cfg.seed_base + i as u64, warm.as_ref()));
        w.push(row_for(i, &sol))?;
        match sol {
            Ok(s) if s.ground.report.converged() => {
                let meta = serde_json::json!({ "config_hash": hash, "index": i, "x": xs[i], "energy": s.ground.report.energy });
                save_checkpoint(&checkpoint_path(&cfg.output, i), &s.ground.state, &meta)?;
                warm = Some(s.ground.state);
            }
            _ => warm = None,
        }
    }
    Ok(w.finish(todo.len()))
}
