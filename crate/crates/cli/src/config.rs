//! Run configuration, read from TOML.
//!
//! ```toml
//! mode = "slice"            # simplex | slice | trajectory
//! output = "runs/fig2_L16"  # directory for tables, checkpoints, records
//! workers = 4
//! resume = false
//! seed_base = 1
//! observables = ["xi"]      # optional extra columns: xi, sz, entropy
//!
//! [model]                   # all energies in units of omega
//! omega = 1.0
//! h = 0.3
//! J = 0.1
//! g = 0.4
//! L = 16
//! # n_max = 30              # default ceil(4 g² L / ω²) + 10
//! # osc_site = 0
//!
//! [solver]
//! max_bond = 64
//! rel_tol = 1e-13
//! keep_weight = 0.0
//! variance_tol = 1e-10
//! sweep_cap = 40
//! min_sweeps = 2
//! levels = 3                # eigenstates per point; gaps need >= 3
//!
//! [simplex]
//! resolution = 10           # h, J, g are multiples of 1/resolution
//!
//! [slice]
//! variable = "h"            # h | J | g | omega
//! start = 0.2
//! stop = 0.4
//! steps = 21
//! warm_start = true
//! # temperature = 0.05      # adds a thermal <n> column, needs levels >= 2
//!
//! [trajectory]
//! kappa = 0.5
//! dt = 0.01
//! t_final = 3.0
//! seeds = 20
//! observables_every = 10
//! krylov_dim = 8
//! fit_bond = 64
//! fit_sweeps = 2
//! krylov_tol = 1e-6        # stop growing once the last coefficient is below this
//! noise_substeps = 1
//! keep_states = true
//! ```

use std::path::{Path, PathBuf};

use dicke_mps::groundstate::DmrgConfig;
use dicke_mps::linalg::TruncationSpec;
use dicke_mps::model::default_n_max;
use dicke_mps::ModelParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simplex,
    Slice,
    Trajectory,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variable {
    #[serde(rename = "h")]
    H,
    #[serde(rename = "J")]
    J,
    #[serde(rename = "g")]
    G,
    #[serde(rename = "omega")]
    Omega,
}

impl Variable {
    pub fn name(self) -> &'static str {
        match self {
            Variable::H => "h",
            Variable::J => "J",
            Variable::G => "g",
            Variable::Omega => "omega",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extra {
    /// Fitted `σ_y` correlation length.
    Xi,
    /// Chain-averaged `⟨σ_z⟩`.
    Sz,
    /// Entanglement entropy of the central bond.
    Entropy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default = "one")]
    pub omega: f64,
    #[serde(default)]
    pub h: f64,
    #[serde(rename = "J", default)]
    pub j: f64,
    #[serde(default)]
    pub g: f64,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub osc_site: usize,
}

fn one() -> f64 {
    1.0
}

impl ModelSection {
    /// Parameters at `(h, J, g, ω)`, with the configured or default cutoff.
    pub fn params(&self, h: f64, j: f64, g: f64, omega: f64) -> Result<ModelParams> {
        let p = ModelParams::new(omega, h, j, g, self.l)?;
        let n_max = self.n_max.unwrap_or_else(|| default_n_max(omega, g, self.l));
        let p = p.with_n_max(n_max).with_osc_site(self.osc_site);
        p.validate()?;
        Ok(p)
    }

    pub fn base_params(&self) -> Result<ModelParams> {
        self.params(self.h, self.j, self.g, self.omega)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "SolverSection::default_bond")]
    pub max_bond: usize,
    #[serde(default = "SolverSection::default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default)]
    pub keep_weight: f64,
    #[serde(default = "SolverSection::default_variance_tol")]
    pub variance_tol: f64,
    #[serde(default = "SolverSection::default_sweep_cap")]
    pub sweep_cap: usize,
    #[serde(default = "SolverSection::default_min_sweeps")]
    pub min_sweeps: usize,
    #[serde(default = "SolverSection::default_levels")]
    pub levels: usize,
}

impl SolverSection {
    fn default_bond() -> usize {
        64
    }
    fn default_rel_tol() -> f64 {
        1e-13
    }
    fn default_variance_tol() -> f64 {
        1e-10
    }
    fn default_sweep_cap() -> usize {
        40
    }
    fn default_min_sweeps() -> usize {
        2
    }
    fn default_levels() -> usize {
        3
    }

    pub fn truncation(&self) -> Result<TruncationSpec> {
        Ok(TruncationSpec::new(self.max_bond, self.rel_tol, self.keep_weight)?)
    }

    /// DMRG settings for one point; `seed` makes the random start
    /// reproducible per grid index.
    pub fn dmrg(&self, seed: u64) -> Result<DmrgConfig> {
        Ok(DmrgConfig {
            spec: self.truncation()?,
            variance_tol: self.variance_tol,
            sweep_cap: self.sweep_cap,
            min_sweeps: self.min_sweeps,
            seed,
            ..DmrgConfig::default()
        })
    }
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            max_bond: Self::default_bond(),
            rel_tol: Self::default_rel_tol(),
            keep_weight: 0.0,
            variance_tol: Self::default_variance_tol(),
            sweep_cap: Self::default_sweep_cap(),
            min_sweeps: Self::default_min_sweeps(),
            levels: Self::default_levels(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimplexSection {
    pub resolution: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceSection {
    pub variable: Variable,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    #[serde(default = "yes")]
    pub warm_start: bool,
    #[serde(default)]
    pub temperature: Option<f64>,
}

fn yes() -> bool {
    true
}

impl SliceSection {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let d = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.start + d * i as f64).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    pub kappa: f64,
    pub dt: f64,
    pub t_final: f64,
    pub seeds: usize,
    #[serde(default = "TrajectorySection::default_every")]
    pub observables_every: usize,
    #[serde(default = "TrajectorySection::default_krylov_dim")]
    pub krylov_dim: usize,
    #[serde(default = "SolverSection::default_bond")]
    pub fit_bond: usize,
    #[serde(default = "TrajectorySection::default_fit_sweeps")]
    pub fit_sweeps: usize,
    #[serde(default = "TrajectorySection::default_krylov_tol")]
    pub krylov_tol: f64,
    #[serde(default = "TrajectorySection::default_substeps")]
    pub noise_substeps: usize,
    #[serde(default = "yes")]
    pub keep_states: bool,
}

impl TrajectorySection {
    fn default_every() -> usize {
        10
    }
    fn default_krylov_dim() -> usize {
        8
    }
    fn default_substeps() -> usize {
        1
    }
    fn default_fit_sweeps() -> usize {
        2
    }
    fn default_krylov_tol() -> f64 {
        1e-6
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub mode: Mode,
    #[serde(default = "ScanConfig::default_output")]
    pub output: PathBuf,
    #[serde(default = "ScanConfig::default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub resume: bool,
    #[serde(default = "ScanConfig::default_seed_base")]
    pub seed_base: u64,
    #[serde(default)]
    pub observables: Vec<Extra>,
    pub model: ModelSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub simplex: Option<SimplexSection>,
    #[serde(default)]
    pub slice: Option<SliceSection>,
    #[serde(default)]
    pub trajectory: Option<TrajectorySection>,
}

impl ScanConfig {
    fn default_output() -> PathBuf {
        PathBuf::from("out")
    }
    fn default_workers() -> usize {
        1
    }
    fn default_seed_base() -> u64 {
        1
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if self.workers == 0 {
            return bad("workers must be >= 1");
        }
        self.model.base_params()?;
        self.solver.truncation()?;
        if self.solver.levels == 0 {
            return bad("solver.levels must be >= 1");
        }
        match self.mode {
            Mode::Simplex => match &self.simplex {
                Some(s) if s.resolution >= 1 => {}
                Some(_) => return bad("simplex.resolution must be >= 1"),
                None => return bad("mode = simplex needs a [simplex] section"),
            },
            Mode::Slice => {
                let Some(s) = &self.slice else { return bad("mode = slice needs a [slice] section") };
                if s.steps == 0 {
                    return bad("slice.steps must be >= 1");
                }
                if !(s.start.is_finite() && s.stop.is_finite()) {
                    return bad("slice range must be finite");
                }
                if let Some(t) = s.temperature {
                    if !(t > 0.0) {
                        return bad("slice.temperature must be > 0");
                    }
                    if self.solver.levels < 2 {
                        return bad("a thermal column needs solver.levels >= 2");
                    }
                }
                for v in s.values() {
                    self.slice_params(v)?;
                }
            }
            Mode::Trajectory => {
                let Some(t) = &self.trajectory else { return bad("mode = trajectory needs a [trajectory] section") };
                if t.seeds == 0 || t.observables_every == 0 || t.noise_substeps == 0 {
                    return bad("trajectory.seeds, observables_every and noise_substeps must be >= 1");
                }
                if !(t.kappa >= 0.0 && t.dt > 0.0 && t.t_final >= 0.0) {
                    return bad("need kappa >= 0, dt > 0, t_final >= 0");
                }
                if t.krylov_dim < 2 || t.fit_bond == 0 || t.fit_sweeps == 0 || !(t.krylov_tol > 0.0) {
                    return bad("need krylov_dim >= 2, fit_bond >= 1, fit_sweeps >= 1 and krylov_tol > 0");
                }
            }
        }
        Ok(())
    }

    /// Model parameters with the slice variable set to `v`.
    pub fn slice_params(&self, v: f64) -> Result<ModelParams> {
        let m = &self.model;
        let var = self.slice.as_ref().map(|s| s.variable).unwrap_or(Variable::H);
        let (mut h, mut j, mut g, mut w) = (m.h, m.j, m.g, m.omega);
        match var {
            Variable::H => h = v,
            Variable::J => j = v,
            Variable::G => g = v,
            Variable::Omega => w = v,
        }
        m.params(h, j, g, w)
    }

    /// Canonical JSON of everything that determines the results. Run
    /// controls (output, workers, resume) are left out, so a resumed or
    /// re-parallelized run keeps its hash.
    pub fn physics_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(o) = v.as_object_mut() {
            for k in ["output", "workers", "resume"] {
                o.remove(k);
            }
        }
        v.to_string()
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.physics_json().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Barycentric grid with `h + J + g = 1`: every `(a, b, c)` with
/// `a + b + c = R`, ordered by `a` then `b`.
pub fn simplex_points(resolution: usize) -> Vec<(f64, f64, f64)> {
    let r = resolution as f64;
    let mut out = Vec::new();
    for a in 0..=resolution {
        for b in 0..=resolution - a {
            let c = resolution - a - b;
            out.push((a as f64 / r, b as f64 / r, c as f64 / r));
        }
    }
    out
}
