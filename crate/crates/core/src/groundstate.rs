//! Variational ground and low-lying states by single-site sweeps with
//! subspace expansion, certified by the energy variance.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::env::{left_step, left_step_overlap, open_left, project_site, right_step, right_step_overlap, Env, LocalOperator};
use crate::error::{Error, Result};
use crate::fit::{fit_sum, FitOptions};
use crate::linalg::{hermitian_eig, lowest_eigenpairs_with, svd_truncate_matrix, EigOptions, TruncationSpec};
use crate::model::ModelParams;
use crate::mpo::{mpo_expectation, parity_mpo, MpOperator};
use crate::mps::{labels, overlap, MpsState};
use crate::observables::oscillator_density_matrix;
use crate::ops::LocalOp;
use crate::scalar::{cabs, cfrom, cre, czero, Real};
use crate::tensor::{dotc, matmul, DenseTensor};

/// Sweep controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DmrgConfig {
    pub spec: TruncationSpec,
    /// Converged once `Var H < variance_tol · max(|E|, 1)²`.
    pub variance_tol: f64,
    pub sweep_cap: usize,
    pub min_sweeps: usize,
    /// Relative residual requested from the local eigensolver.
    pub eig_tol: f64,
    /// Initial subspace-expansion weight; halves every sweep.
    pub expansion: f64,
    /// Bond dimension of the random starting state.
    pub init_bond: usize,
    pub seed: u64,
}

impl Default for DmrgConfig {
    fn default() -> Self {
        Self {
            spec: TruncationSpec::default(),
            variance_tol: 1e-10,
            sweep_cap: 40,
            min_sweeps: 2,
            eig_tol: 1e-10,
            expansion: 1e-3,
            init_bond: 4,
            seed: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    /// Sweep cap hit before the variance target.
    SweepCapReached,
    /// Energy and bonds stopped changing above the variance target
    /// (usually the bond cap is too small).
    Stalled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub energy: f64,
    pub energy_variance: f64,
    pub sweeps_used: usize,
    pub max_discarded_weight: f64,
    pub top_fock_population: f64,
    pub parity: f64,
    pub max_bond: usize,
    pub status: SolveStatus,
    pub seed: u64,
    /// Energy at the end of every sweep.
    pub sweep_energies: Vec<f64>,
}

impl ConvergenceReport {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    /// Variance relative to `max(|E|, 1)²`.
    pub fn relative_variance(&self) -> f64 {
        self.energy_variance / energy_scale(self.energy).powi(2)
    }

    /// `Err(NotConverged)` unless the run met its variance target.
    pub fn require_converged(&self) -> Result<()> {
        if self.converged() {
            Ok(())
        } else {
            Err(Error::NotConverged { iterations: self.sweeps_used, residual: self.energy_variance })
        }
    }
}

fn energy_scale(e: f64) -> f64 {
    e.abs().max(1.0)
}

/// `⟨H²⟩ − ⟨H⟩²` of a normalized copy of `psi`, using the exact MPO square.
pub fn energy_variance<R: Real>(psi: &MpsState<R>, h: &MpOperator<R>) -> Result<(f64, f64)> {
    let h2 = h.compose(h)?;
    let nrm = psi.norm_sqr().as_f64();
    let e = mpo_expectation(psi, h, psi)?.re.as_f64() / nrm;
    let e2 = mpo_expectation(psi, &h2, psi)?.re.as_f64() / nrm;
    Ok((e, e2 - e * e))
}

/// Ground state and its certificate.
#[derive(Clone, Debug)]
pub struct GroundState<R: Real> {
    pub state: MpsState<R>,
    pub report: ConvergenceReport,
}

struct Penalty<'a, R: Real> {
    weight: R,
    state: &'a MpsState<R>,
    left: Vec<Env<R>>,
    right: Vec<Env<R>>,
}

struct Sweeper<'a, R: Real> {
    h: &'a MpOperator<R>,
    psi: MpsState<R>,
    left: Vec<Env<R>>,
    right: Vec<Env<R>>,
    penalties: Vec<Penalty<'a, R>>,
    spec: TruncationSpec,
    eig_tol: R,
    max_discarded: f64,
}

impl<'a, R: Real> Sweeper<'a, R> {
    fn new(h: &'a MpOperator<R>, init: MpsState<R>, others: &'a [MpsState<R>], weight: R, cfg: &DmrgConfig) -> Result<Self> {
        let n = init.len();
        let psi = init.canonicalize(0)?;
        let mut s = Self {
            h,
            psi,
            left: vec![Env::boundary(); n + 1],
            right: vec![Env::boundary(); n + 1],
            penalties: others
                .iter()
                .map(|st| Penalty { weight, state: st, left: vec![Env::overlap_boundary(); n + 1], right: vec![Env::overlap_boundary(); n + 1] })
                .collect(),
            spec: cfg.spec,
            eig_tol: R::lit(cfg.eig_tol),
            max_discarded: 0.0,
        };
        for i in (1..n).rev() {
            s.update_right(i);
        }
        Ok(s)
    }

    fn update_left(&mut self, i: usize) {
        let (a, d) = (self.psi.site(i).data(), self.psi.dims(i));
        self.left[i + 1] = left_step(&self.left[i], a, d, self.h.data(i), self.h.dims(i), a, d);
        for p in &mut self.penalties {
            p.left[i + 1] = left_step_overlap(&p.left[i], a, d, p.state.site(i).data(), p.state.dims(i));
        }
    }

    fn update_right(&mut self, i: usize) {
        let (a, d) = (self.psi.site(i).data(), self.psi.dims(i));
        self.right[i] = right_step(&self.right[i + 1], a, d, self.h.data(i), self.h.dims(i), a, d);
        for p in &mut self.penalties {
            p.right[i] = right_step_overlap(&p.right[i + 1], a, d, p.state.site(i).data(), p.state.dims(i));
        }
    }

    /// Lowest eigenpair of the (penalized) effective operator at site `i`.
    fn solve(&mut self, i: usize) -> Result<(R, Vec<Complex<R>>)> {
        let op = LocalOperator::new(&self.left[i], self.h.data(i), self.h.dims(i), &self.right[i + 1]);
        let kd = op.ket_dims();
        let proj: Vec<(R, Vec<Complex<R>>)> = self
            .penalties
            .iter()
            .map(|p| (p.weight, project_site(&p.left[i], p.state.site(i).data(), p.state.dims(i), &p.right[i + 1])))
            .collect();
        let n = kd.l * kd.d * kd.r;
        let guess = self.psi.site(i).data().to_vec();
        let apply = |x: &[Complex<R>], y: &mut [Complex<R>]| {
            let hx = op.apply(x);
            y.copy_from_slice(&hx);
            for (w, v) in &proj {
                let c = dotc(v, x) * cre(*w);
                y.iter_mut().zip(v).for_each(|(a, b)| *a += c * *b);
            }
        };
        let mut opts = EigOptions::new(self.eig_tol);
        opts.guess = Some(&guess);
        opts.max_restarts = 60;
        let res = match lowest_eigenpairs_with(apply, n, 1, &opts) {
            Ok(r) => r,
            Err(Error::NotConverged { .. }) => {
                let mut loose = EigOptions::new(self.eig_tol * R::lit(1e3));
                loose.guess = Some(&guess);
                lowest_eigenpairs_with(apply, n, 1, &loose)?
            }
            Err(e) => return Err(e),
        };
        let v = res.vectors.into_iter().next().expect("one eigenpair");
        Ok((res.values[0], v))
    }

    /// Stores `x` at `i` and moves the center to `i + 1`, optionally
    /// enlarging the bond with the expansion term.
    fn split_right(&mut self, i: usize, x: Vec<Complex<R>>, alpha: R) -> Result<()> {
        let d = self.psi.dims(i);
        let nx = self.psi.dims(i + 1);
        let (mat, cols, next) = if alpha > R::zero() {
            let op = LocalOperator::new(&self.left[i], self.h.data(i), self.h.dims(i), &self.right[i + 1]);
            let p = op.open_right(&x);
            let extra = p.len() / (d.l * d.d);
            let cols = d.r + extra;
            let mut mat = vec![czero(); d.l * d.d * cols];
            for row in 0..d.l * d.d {
                mat[row * cols..row * cols + d.r].copy_from_slice(&x[row * d.r..(row + 1) * d.r]);
                for c in 0..extra {
                    mat[row * cols + d.r + c] = p[row * extra + c] * cre(alpha);
                }
            }
            let mut next = vec![czero(); cols * nx.d * nx.r];
            next[..nx.l * nx.d * nx.r].copy_from_slice(self.psi.site(i + 1).data());
            (mat, cols, next)
        } else {
            (x, d.r, self.psi.site(i + 1).data().to_vec())
        };
        let (u, s, vh, disc) = svd_truncate_matrix(&mat, d.l * d.d, cols, &self.spec)?;
        self.note_discard(disc, &s);
        let k = s.len();
        let mut sv = vh;
        for (r, row) in sv.chunks_mut(cols).enumerate() {
            row.iter_mut().for_each(|z| *z *= cre(s[r]));
        }
        let b = matmul(&sv, &next, k, cols, nx.d * nx.r);
        self.psi.set_site(i, DenseTensor::from_raw(vec![d.l, d.d, k], labels(), u));
        self.psi.set_site(i + 1, DenseTensor::from_raw(vec![k, nx.d, nx.r], labels(), b));
        self.psi.set_center(Some(i + 1));
        self.update_left(i);
        Ok(())
    }

    /// Stores `x` at `i` and moves the center to `i − 1`.
    fn split_left(&mut self, i: usize, x: Vec<Complex<R>>, alpha: R) -> Result<()> {
        let d = self.psi.dims(i);
        let pv = self.psi.dims(i - 1);
        let row_len = d.d * d.r;
        let (mat, rows, prev) = if alpha > R::zero() {
            let p = open_left(&x, d, self.h.data(i), self.h.dims(i), &self.right[i + 1]);
            let extra = p.len() / row_len;
            let rows = d.l + extra;
            let mut mat = x.clone();
            mat.extend(p.iter().map(|z| *z * cre(alpha)));
            // previous tensor padded with zero columns
            let src = self.psi.site(i - 1).data();
            let mut prev = vec![czero(); pv.l * pv.d * rows];
            for r in 0..pv.l * pv.d {
                prev[r * rows..r * rows + d.l].copy_from_slice(&src[r * d.l..(r + 1) * d.l]);
            }
            (mat, rows, prev)
        } else {
            (x, d.l, self.psi.site(i - 1).data().to_vec())
        };
        let (u, s, vh, disc) = svd_truncate_matrix(&mat, rows, row_len, &self.spec)?;
        self.note_discard(disc, &s);
        let k = s.len();
        let mut us = u;
        for row in us.chunks_mut(k) {
            row.iter_mut().zip(&s).for_each(|(z, sv)| *z *= cre(*sv));
        }
        let a = matmul(&prev, &us, pv.l * pv.d, rows, k);
        self.psi.set_site(i, DenseTensor::from_raw(vec![k, d.d, d.r], labels(), vh));
        self.psi.set_site(i - 1, DenseTensor::from_raw(vec![pv.l, pv.d, k], labels(), a));
        self.psi.set_center(Some(i - 1));
        self.update_right(i);
        Ok(())
    }

    fn note_discard(&mut self, disc: R, s: &[R]) {
        let kept: f64 = s.iter().map(|x| x.as_f64().powi(2)).sum();
        let total = kept + disc.as_f64();
        if total > 0.0 {
            self.max_discarded = self.max_discarded.max(disc.as_f64() / total);
        }
    }

    /// One left-to-right plus right-to-left sweep; returns the last local
    /// eigenvalue.
    fn sweep(&mut self, alpha: R) -> Result<R> {
        let n = self.psi.len();
        if n == 1 {
            let (val, x) = self.solve(0)?;
            let d = self.psi.dims(0);
            self.psi.set_site(0, DenseTensor::from_raw(vec![d.l, d.d, d.r], labels(), x));
            return Ok(val);
        }
        for i in 0..n - 1 {
            let (_, x) = self.solve(i)?;
            self.split_right(i, x, alpha)?;
        }
        for i in (1..n).rev() {
            let (_, x) = self.solve(i)?;
            self.split_left(i, x, alpha)?;
        }
        let (val, x) = self.solve(0)?;
        let d = self.psi.dims(0);
        self.psi.set_site(0, DenseTensor::from_raw(vec![d.l, d.d, d.r], labels(), x));
        self.psi.set_center(Some(0));
        Ok(val)
    }
}

fn top_fock<R: Real>(psi: &MpsState<R>) -> Result<f64> {
    Ok(oscillator_density_matrix(psi)?.top_population())
}

fn parity_of<R: Real>(psi: &MpsState<R>) -> Result<f64> {
    let p = parity_mpo::<R>(psi.site_specs())?;
    Ok(mpo_expectation(psi, &p, psi)?.re.as_f64() / psi.norm_sqr().as_f64())
}

fn run<R: Real>(
    h: &MpOperator<R>,
    init: Option<&MpsState<R>>,
    others: &[MpsState<R>],
    weight: R,
    cfg: &DmrgConfig,
) -> Result<GroundState<R>> {
    cfg.spec.validate()?;
    let start = match init {
        Some(s) => {
            if s.site_specs() != h.site_specs() {
                return Err(Error::Dimension("initial state and Hamiltonian live on different lattices".into()));
            }
            s.normalized()?
        }
        None => MpsState::random(h.site_specs(), cfg.init_bond.max(1), cfg.seed)?.normalized()?,
    };
    let mut sw = Sweeper::new(h, start, others, weight, cfg)?;
    let mut sweep_energies = Vec::new();
    let mut status = SolveStatus::SweepCapReached;
    let mut alpha = cfg.expansion;
    let (mut energy, mut variance) = (f64::NAN, f64::NAN);
    let mut prev_bonds = Vec::new();
    let mut quiet = 0;
    let mut used = 0;
    for s in 0..cfg.sweep_cap {
        used = s + 1;
        let a = if alpha < 1e-12 { R::zero() } else { R::lit(alpha) };
        sw.sweep(a)?;
        alpha *= 0.5;
        let (e, var) = energy_variance(&sw.psi, h)?;
        let de = (e - energy).abs();
        energy = e;
        variance = var;
        sweep_energies.push(e);
        let bonds = sw.psi.bond_dims();
        if used >= cfg.min_sweeps && var < cfg.variance_tol * energy_scale(e).powi(2) {
            status = SolveStatus::Converged;
            break;
        }
        if de < 1e-13 * energy_scale(e) && bonds == prev_bonds {
            quiet += 1;
            if quiet >= 3 {
                status = SolveStatus::Stalled;
                break;
            }
        } else {
            quiet = 0;
        }
        prev_bonds = bonds;
    }
    let state = sw.psi.normalized()?;
    let report = ConvergenceReport {
        energy,
        energy_variance: variance,
        sweeps_used: used,
        max_discarded_weight: sw.max_discarded,
        top_fock_population: top_fock(&state)?,
        parity: parity_of(&state)?,
        max_bond: state.max_bond(),
        status,
        seed: cfg.seed,
        sweep_energies,
    };
    Ok(GroundState { state, report })
}

/// Lowest-energy state of `h`. Hitting the sweep cap is reported in the
/// status rather than raised; use [`ConvergenceReport::require_converged`]
/// to turn it into an error.
pub fn ground_state<R: Real>(h: &MpOperator<R>, init: Option<&MpsState<R>>, cfg: &DmrgConfig) -> Result<GroundState<R>> {
    run(h, init, &[], R::zero(), cfg)
}

/// The `k` lowest states with energies, reports and mutual overlaps.
#[derive(Clone, Debug)]
pub struct EigenstateSet<R: Real> {
    pub states: Vec<MpsState<R>>,
    pub energies: Vec<f64>,
    pub reports: Vec<ConvergenceReport>,
    pub parities: Vec<f64>,
    /// `|⟨ψ_i|ψ_j⟩|`, row-major `k × k`.
    pub pairwise_overlaps: Vec<f64>,
}

impl<R: Real> EigenstateSet<R> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `E_i − E_0` for `i ≥ 1`.
    pub fn gaps(&self) -> Vec<f64> {
        self.energies.iter().skip(1).map(|e| e - self.energies[0]).collect()
    }

    pub fn max_overlap(&self) -> f64 {
        let k = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    worst = worst.max(self.pairwise_overlaps[i * k + j]);
                }
            }
        }
        worst
    }
}

/// Penalty weight for the excited-state sweeps.
fn penalty_weight(scale: f64) -> f64 {
    10.0 * scale.max(1.0)
}

/// `k` lowest eigenstates by penalized sweeps, a Rayleigh-Ritz rotation
/// within the found subspace, and a parity rotation inside clusters with
/// `E_{i+1} − E_i < 1e-6 |E_0|`.
pub fn excited_states<R: Real>(h: &MpOperator<R>, k: usize, cfg: &DmrgConfig, scale: f64) -> Result<EigenstateSet<R>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let weight = R::lit(penalty_weight(scale));
    let mut states: Vec<MpsState<R>> = Vec::with_capacity(k);
    let mut reports = Vec::with_capacity(k);
    for j in 0..k {
        let mut c = *cfg;
        c.seed = cfg.seed.wrapping_add(j as u64 * 7919);
        let mut gs = run(h, None, &states, weight, &c)?;
        if let Some(prev) = states.last() {
            // With a decoupled cavity the photon number is conserved and the
            // sweeps cannot leave the sector of their start; a† on the last
            // found state reaches the one-photon sector directly.
            let osc = prev.osc_site();
            let up = prev.apply_local(osc, &LocalOp::creation(prev.site_specs()[osc].phys_dim))?;
            if up.norm().as_f64() > 1e-8 {
                if let Ok(alt) = run(h, Some(&up), &states, weight, &c) {
                    if penalized_energy(&alt, &states, weight)? < penalized_energy(&gs, &states, weight)? - 1e-12 * scale.max(1.0) {
                        gs = alt;
                    }
                }
            }
        }
        states.push(gs.state);
        reports.push(gs.report);
    }
    let (states, reports) = rotate_subspace(h, states, reports, cfg)?;
    finish_set(states, reports)
}

fn penalized_energy<R: Real>(gs: &GroundState<R>, others: &[MpsState<R>], weight: R) -> Result<f64> {
    let nrm = gs.state.norm_sqr().as_f64();
    let mut e = gs.report.energy;
    for o in others {
        e += weight.as_f64() * overlap(o, &gs.state)?.norm_sqr().as_f64() / (nrm * o.norm_sqr().as_f64());
    }
    Ok(e)
}

/// Combines `Σ_j c_j ψ_j` by a variational fit at the configured bond cap.
fn combine<R: Real>(states: &[MpsState<R>], coeffs: &[Complex<R>], spec: &TruncationSpec) -> Result<MpsState<R>> {
    let refs: Vec<&MpsState<R>> = states.iter().collect();
    let opts = FitOptions { spec: *spec, sweeps: 4, tol: 1e-14 };
    fit_sum(coeffs, &refs, &opts)?.state.normalized()
}

/// Replaces a ground state that mixes the two parity sectors by the
/// lower-energy of its projections `(1 ± P)|ψ⟩`. States already sharp to
/// `1e-8` are returned unchanged. The report is recomputed, and the status
/// becomes `Stalled` if the projection pushes the relative variance above
/// `variance_tol`.
pub fn parity_eigenstate<R: Real>(
    gs: GroundState<R>,
    h: &MpOperator<R>,
    spec: &TruncationSpec,
    variance_tol: f64,
) -> Result<GroundState<R>> {
    if gs.report.parity.abs() > 1.0 - 1e-8 {
        return Ok(gs);
    }
    let p = parity_mpo::<R>(h.site_specs())?;
    let flipped = p.apply(&gs.state)?;
    let both = [gs.state.clone(), flipped];
    let one = Complex::new(R::one(), R::zero());
    let mut best: Option<(f64, f64, MpsState<R>)> = None;
    for sign in [R::one(), -R::one()] {
        let weight = (1.0 + sign.as_f64() * gs.report.parity) / 2.0;
        if weight < 1e-8 {
            continue;
        }
        let cand = combine(&both, &[one, Complex::new(sign, R::zero())], spec)?;
        let (e, var) = energy_variance(&cand, h)?;
        if best.as_ref().map_or(true, |b| e < b.0) {
            best = Some((e, var, cand));
        }
    }
    let Some((e, var, state)) = best else { return Ok(gs) };
    let mut report = gs.report;
    report.energy = e;
    report.energy_variance = var;
    report.parity = parity_of(&state)?;
    report.top_fock_population = top_fock(&state)?;
    report.max_bond = state.max_bond();
    if report.relative_variance() >= variance_tol {
        report.status = SolveStatus::Stalled;
    }
    Ok(GroundState { state, report })
}

fn rotate_subspace<R: Real>(
    h: &MpOperator<R>,
    states: Vec<MpsState<R>>,
    mut reports: Vec<ConvergenceReport>,
    cfg: &DmrgConfig,
) -> Result<(Vec<MpsState<R>>, Vec<ConvergenceReport>)> {
    let k = states.len();
    if k == 1 {
        return Ok((states, reports));
    }
    // Rayleigh-Ritz in the span, orthonormalized by S^{-1/2}
    let mut hm = vec![Complex::new(0.0, 0.0); k * k];
    let mut sm = vec![Complex::new(0.0, 0.0); k * k];
    for i in 0..k {
        for j in 0..k {
            hm[i * k + j] = crate::scalar::cto64(mpo_expectation(&states[i], h, &states[j])?);
            sm[i * k + j] = crate::scalar::cto64(overlap(&states[i], &states[j])?);
        }
    }
    let off: f64 = (0..k * k).filter(|x| x / k != x % k).map(|x| sm[x].norm() + hm[x].norm() / energy_scale(hm[0].re)).fold(0.0, f64::max);
    let mut states = states;
    if off > 1e-12 {
        let (sv, su) = hermitian_eig(&sm, k);
        // S^{-1/2}
        let mut sinv = vec![Complex::new(0.0, 0.0); k * k];
        for a in 0..k {
            for b in 0..k {
                let mut acc = Complex::new(0.0, 0.0);
                for c in 0..k {
                    acc += su[a * k + c] * su[b * k + c].conj() / sv[c].max(1e-300).sqrt();
                }
                sinv[a * k + b] = acc;
            }
        }
        let ht = matmul(&matmul(&sinv, &hm, k, k, k), &sinv, k, k, k);
        let (_, hu) = hermitian_eig(&ht, k);
        let coeff = matmul(&sinv, &hu, k, k, k);
        let mut rotated = Vec::with_capacity(k);
        for c in 0..k {
            let cs: Vec<Complex<R>> = (0..k).map(|a| cfrom(coeff[a * k + c])).collect();
            rotated.push(combine(&states, &cs, &cfg.spec)?);
        }
        states = rotated;
    }
    // parity rotation inside near-degenerate clusters
    let energies: Vec<f64> = states
        .iter()
        .map(|s| Ok(mpo_expectation(s, h, s)?.re.as_f64() / s.norm_sqr().as_f64()))
        .collect::<Result<_>>()?;
    let tol = 1e-6 * energies[0].abs().max(1e-300);
    let p = parity_mpo::<R>(h.site_specs())?;
    let mut start = 0;
    while start < k {
        let mut stop = start + 1;
        while stop < k && (energies[stop] - energies[stop - 1]).abs() < tol {
            stop += 1;
        }
        if stop - start > 1 {
            let m = stop - start;
            let mut pm = vec![Complex::new(0.0, 0.0); m * m];
            for a in 0..m {
                for b in 0..m {
                    pm[a * m + b] = crate::scalar::cto64(mpo_expectation(&states[start + a], &p, &states[start + b])?);
                }
            }
            let (_, pu) = hermitian_eig(&pm, m);
            let cluster: Vec<MpsState<R>> = states[start..stop].to_vec();
            for c in 0..m {
                let cs: Vec<Complex<R>> = (0..m).map(|a| cfrom(pu[a * m + c])).collect();
                states[start + c] = combine(&cluster, &cs, &cfg.spec)?;
            }
        }
        start = stop;
    }
    for (i, s) in states.iter().enumerate() {
        let (e, var) = energy_variance(s, h)?;
        reports[i].energy = e;
        reports[i].energy_variance = var;
        reports[i].parity = parity_of(s)?;
        reports[i].top_fock_population = top_fock(s)?;
        reports[i].max_bond = s.max_bond();
    }
    Ok((states, reports))
}

fn finish_set<R: Real>(states: Vec<MpsState<R>>, reports: Vec<ConvergenceReport>) -> Result<EigenstateSet<R>> {
    let k = states.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| reports[a].energy.total_cmp(&reports[b].energy));
    let states: Vec<MpsState<R>> = order.iter().map(|&i| states[i].clone()).collect();
    let reports: Vec<ConvergenceReport> = order.iter().map(|&i| reports[i].clone()).collect();
    let mut ov = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let o = overlap(&states[i], &states[j])?;
            ov[i * k + j] = cabs(o).as_f64() / (states[i].norm() * states[j].norm()).as_f64();
        }
    }
    Ok(EigenstateSet {
        energies: reports.iter().map(|r| r.energy).collect(),
        parities: reports.iter().map(|r| r.parity).collect(),
        states,
        reports,
        pairwise_overlaps: ov,
    })
}

/// Boltzmann average over a computed low-lying window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalAverage {
    pub value: f64,
    pub weights: Vec<f64>,
    /// Weight of the highest included state; small values mean the window
    /// is wide enough for this temperature.
    pub truncation_weight: f64,
}

pub fn thermal_average<R: Real>(set: &EigenstateSet<R>, temperature: f64, obs: &MpOperator<R>) -> Result<ThermalAverage> {
    if set.is_empty() {
        return Err(Error::InvalidArgument("empty eigenstate set".into()));
    }
    if !(temperature > 0.0) {
        return Err(Error::InvalidArgument("temperature must be > 0".into()));
    }
    let values: Vec<f64> = set
        .states
        .iter()
        .map(|s| Ok(mpo_expectation(s, obs, s)?.re.as_f64() / s.norm_sqr().as_f64()))
        .collect::<Result<_>>()?;
    Ok(boltzmann(&set.energies, &values, temperature))
}

/// `Σ w_i x_i` with `w_i ∝ exp(−(E_i − E_0)/T)`.
pub fn boltzmann(energies: &[f64], values: &[f64], temperature: f64) -> ThermalAverage {
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = energies.iter().map(|e| (-(e - e0) / temperature).exp()).collect();
    let z: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / z).collect();
    let value = weights.iter().zip(values).map(|(w, x)| w * x).sum();
    ThermalAverage { value, truncation_weight: *weights.last().unwrap(), weights }
}

/// Structured result of one solve, as written by the drivers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub schema_version: u32,
    pub params: ModelParams,
    pub energies: Vec<f64>,
    pub reports: Vec<ConvergenceReport>,
    pub n_mean: f64,
    pub n_variance: f64,
    pub parity: f64,
}

pub const SOLVE_RECORD_VERSION: u32 = 1;

