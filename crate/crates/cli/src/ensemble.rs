//! Homodyne trajectory ensembles started from one ground state.

use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use dicke_mps::checkpoint::{load_checkpoint, save_checkpoint};
use dicke_mps::dynamics::{run_trajectory, KrylovConfig};
use dicke_mps::ed::TrajectorySettings;
use dicke_mps::groundstate::{ground_state, parity_eigenstate, ConvergenceReport};
use dicke_mps::linalg::TruncationSpec;
use dicke_mps::mpo::build_dicke_ising_mpo;
use dicke_mps::observables::OscillatorState;
use dicke_mps::trajectory::{ensemble_statistics, EnsembleStats, TrajectoryRecord};
use dicke_mps::Mps;
use num_complex::Complex64;

use crate::config::{ScanConfig, TrajectorySection};
use crate::pool::run_ordered;
use crate::table::{cell, num, Table};
use crate::{CliError, Result};

const RHO_MAGIC: &[u8; 8] = b"DICKERHO";

pub const ENSEMBLE_COLUMNS: [&str; 10] =
    ["t", "q_mean", "q_se", "n_mean", "n_se", "S_mean", "S_se", "P_mean", "P_se", "S_of_mean_state"];

#[derive(Clone, Debug)]
pub struct EnsembleOutcome {
    pub ground: ConvergenceReport,
    /// Trajectories that ran to `t_final`, in seed order.
    pub records: Vec<TrajectoryRecord>,
    pub failed: Vec<(u64, String)>,
    pub stats: Option<EnsembleStats>,
    pub table: Table,
    pub dir: PathBuf,
}

pub fn krylov_config(cfg: &ScanConfig, t: &TrajectorySection) -> Result<KrylovConfig> {
    Ok(KrylovConfig {
        subspace_dim: t.krylov_dim,
        fit_spec: TruncationSpec::new(t.fit_bond, cfg.solver.rel_tol, 0.0)?,
        fit_sweeps: t.fit_sweeps,
        coefficient_tol: t.krylov_tol,
        step_dt: t.dt,
        ..KrylovConfig::default()
    })
}

pub fn settings(t: &TrajectorySection, seed: u64) -> TrajectorySettings {
    TrajectorySettings {
        kappa: t.kappa,
        dt: t.dt,
        t_final: t.t_final,
        seed,
        observables_every: t.observables_every,
        noise_substeps: t.noise_substeps,
        keep_states: t.keep_states,
    }
}

fn record_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("traj_{seed}.tsv"))
}

fn states_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("traj_{seed}.rho"))
}

fn write_states(path: &Path, states: &[OscillatorState]) -> Result<()> {
    let dim = states.first().map_or(0, |s| s.dim);
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(RHO_MAGIC)?;
    w.write_all(&(states.len() as u64).to_le_bytes())?;
    w.write_all(&(dim as u64).to_le_bytes())?;
    for s in states {
        for z in &s.rho {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_states(path: &Path) -> Result<Vec<OscillatorState>> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    if &b8 != RHO_MAGIC {
        return Err(CliError::Table(format!("{} is not a state file", path.display())));
    }
    r.read_exact(&mut b8)?;
    let count = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let dim = u64::from_le_bytes(b8) as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut rho = Vec::with_capacity(dim * dim);
        for _ in 0..dim * dim {
            r.read_exact(&mut b8)?;
            let re = f64::from_le_bytes(b8);
            r.read_exact(&mut b8)?;
            rho.push(Complex64::new(re, f64::from_le_bytes(b8)));
        }
        out.push(OscillatorState { dim, rho, trace: 1.0 });
    }
    Ok(out)
}

/// A record written by an earlier run with the same configuration.
fn load_record(dir: &Path, seed: u64, config_json: &str, keep_states: bool) -> Option<TrajectoryRecord> {
    let text = std::fs::read_to_string(record_path(dir, seed)).ok()?;
    if !text.lines().any(|l| l.strip_prefix("# config: ") == Some(config_json)) || !text.ends_with('\n') {
        return None;
    }
    let mut rec = TrajectoryRecord::read_from(text.as_bytes()).ok()?;
    if keep_states && rec.aborted.is_none() {
        let states = read_states(&states_path(dir, seed)).ok()?;
        if states.len() != rec.len() {
            return None;
        }
        rec.osc_states = Some(states);
    }
    Some(rec)
}

fn ground(cfg: &ScanConfig, h: &dicke_mps::Mpo, dir: &Path) -> Result<(Mps, ConvergenceReport)> {
    let path = dir.join("ground.mps");
    let hash = cfg.hash();
    if cfg.resume {
        if let Ok((psi, meta)) = load_checkpoint::<f64>(&path) {
            if meta.get("config_hash").and_then(|v| v.as_str()) == Some(hash.as_str()) {
                if let Some(rep) = meta.get("report").and_then(|r| serde_json::from_value(r.clone()).ok()) {
                    return Ok((psi, rep));
                }
            }
        }
    }
    let gs = ground_state(h, None, &cfg.solver.dmrg(cfg.seed_base)?)?;
    let gs = parity_eigenstate(gs, h, &cfg.solver.truncation()?, cfg.solver.variance_tol)?;
    let meta = serde_json::json!({ "config_hash": hash, "report": gs.report });
    save_checkpoint(&path, &gs.state, &meta)?;
    Ok((gs.state, gs.report))
}

/// Solves the ground state once (projected onto a parity sector when the
/// solver returns a symmetry-broken mixture), then runs seeds `seed_base ..
/// seed_base + seeds` in parallel. Each trajectory goes to its own file
/// (plus a binary file of oscillator states when `keep_states`), and
/// `ensemble.tsv` holds the pointwise statistics over the trajectories
/// that reached `t_final`.
pub fn run_trajectory_ensemble(cfg: &ScanConfig) -> Result<EnsembleOutcome> {
    cfg.validate()?;
    let t = cfg.trajectory.as_ref().ok_or_else(|| CliError::Config("missing [trajectory]".into()))?;
    let dir = cfg.output.clone();
    std::fs::create_dir_all(&dir)?;
    let params = cfg.model.base_params()?;
    let h = build_dicke_ising_mpo::<f64>(&params)?;
    let (psi0, report) = ground(cfg, &h, &dir)?;
    let kcfg = krylov_config(cfg, t)?;
    let config_json = cfg.physics_json();

    let seeds: Vec<u64> = (0..t.seeds as u64).map(|i| cfg.seed_base + i).collect();
    let mut slots: Vec<Option<std::result::Result<TrajectoryRecord, String>>> = vec![None; seeds.len()];
    if cfg.resume {
        for (slot, &seed) in slots.iter_mut().zip(&seeds) {
            *slot = load_record(&dir, seed, &config_json, t.keep_states).map(Ok);
        }
    }
    let todo: Vec<usize> = (0..seeds.len()).filter(|&i| slots[i].is_none()).collect();
    let job = |i: usize| run_trajectory(&psi0, &h, &params, &kcfg, &settings(t, seeds[i])).map_err(|e| e.to_string());
    run_ordered(&todo, cfg.workers, job, |i, res| {
        if let Ok(rec) = &res {
            let mut f = std::io::BufWriter::new(std::fs::File::create(record_path(&dir, seeds[i]))?);
            rec.write_to(&mut f, &config_json)?;
            f.flush()?;
            if let Some(states) = &rec.osc_states {
                write_states(&states_path(&dir, seeds[i]), states)?;
            }
        }
        slots[i] = Some(res);
        Ok(())
    })?;

    let mut records = Vec::new();
    let mut failed = Vec::new();
    for (slot, &seed) in slots.into_iter().zip(&seeds) {
        match slot {
            Some(Ok(rec)) if rec.aborted.is_none() => records.push(rec),
            Some(Ok(rec)) => failed.push((seed, rec.aborted.unwrap_or_default())),
            Some(Err(e)) => failed.push((seed, e)),
            None => failed.push((seed, "not run".into())),
        }
    }
    let stats = if records.is_empty() { None } else { Some(ensemble_statistics(&records)?) };

    let mut table = Table::new("ensemble", &cfg.hash(), &config_json, ENSEMBLE_COLUMNS.map(String::from).to_vec());
    table.meta = vec![
        ("ground_energy".into(), num(report.energy)),
        ("ground_rel_variance".into(), num(report.relative_variance())),
        ("ground_converged".into(), if report.converged() { "1" } else { "0" }.into()),
        ("survivors".into(), format!("{} of {}", records.len(), seeds.len())),
        ("failed".into(), cell(&failed.iter().map(|(s, e)| format!("{s}: {e}")).collect::<Vec<_>>().join("; "))),
    ];
    if let Some(st) = &stats {
        let se = |s: &dicke_mps::trajectory::SeriesStats| s.standard_error(st.count);
        let (q, n, s, p) = (se(&st.q), se(&st.n), se(&st.entropy), se(&st.parity));
        for k in 0..st.times.len() {
            let avg = st.averaged_state_entropy.as_ref().map_or(f64::NAN, |v| v[k]);
            table.rows.push(
                [st.times[k], st.q.mean[k], q[k], st.n.mean[k], n[k], st.entropy.mean[k], s[k], st.parity.mean[k], p[k], avg]
                    .map(num)
                    .to_vec(),
            );
        }
    }
    table.write(&dir.join("ensemble.tsv"))?;
    Ok(EnsembleOutcome { ground: report, records, failed, stats, table, dir })
}
