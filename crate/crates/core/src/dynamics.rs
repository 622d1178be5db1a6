//! Krylov propagation of MPS and conditioned homodyne trajectories.

use num_complex::{Complex, Complex64};
use serde::{Deserialize, Serialize};

use crate::ed::TrajectorySettings;
use crate::error::{Error, Result};
use crate::fit::{fit_sum, variational_fit, FitOptions, FitTarget};
use crate::linalg::{hermitian_eig, hermitian_function, TruncationSpec};
use crate::model::ModelParams;
use crate::mpo::{mpo_expectation, MpOperator};
use crate::mps::{overlap, MpsState};
use crate::noise::{homodyne_signal, NoiseStream};
use crate::observables::{oscillator_density_matrix, parity_expectation, quadrature_mean};
use crate::ops::LocalOp;
use crate::scalar::{cfrom, cre, cto64, Real};
use crate::trajectory::{RecordPoint, TrajectoryRecord};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrylovConfig {
    /// Maximum basis size `N`.
    pub subspace_dim: usize,
    pub fit_spec: TruncationSpec,
    pub fit_sweeps: usize,
    /// A new vector is orthogonalized a second time when its largest
    /// overlap with the basis exceeds this.
    pub orthogonality_tol: f64,
    /// Basis growth stops when the new direction's norm falls below
    /// `breakdown_tol · max(|⟨H⟩|, 1)`.
    pub breakdown_tol: f64,
    /// Stop adding vectors once `|c_{N−1}|` is below this.
    pub coefficient_tol: f64,
    pub step_dt: f64,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            subspace_dim: 8,
            fit_spec: TruncationSpec::default(),
            fit_sweeps: 4,
            orthogonality_tol: 1e-10,
            breakdown_tol: 1e-10,
            coefficient_tol: 1e-10,
            step_dt: 0.01,
        }
    }
}

impl KrylovConfig {
    pub fn validate(&self) -> Result<()> {
        if self.subspace_dim < 2 {
            return Err(Error::InvalidArgument("Krylov subspace_dim must be >= 2".into()));
        }
        if !(self.step_dt > 0.0) {
            return Err(Error::InvalidArgument("step_dt must be > 0".into()));
        }
        self.fit_spec.validate()
    }

    fn fit_options(&self) -> FitOptions {
        FitOptions { spec: self.fit_spec, sweeps: self.fit_sweeps, tol: 1e-13 }
    }
}

/// Normalized Krylov vectors with their projected Hamiltonian.
#[derive(Clone, Debug)]
pub struct KrylovBasis<R: Real> {
    pub basis: Vec<MpsState<R>>,
    /// `⟨v_i|H|v_j⟩`, row-major.
    pub h_small: Vec<Complex64>,
    /// `⟨v_i|v_j⟩`, row-major; the identity up to fit errors.
    pub gram: Vec<Complex64>,
    /// Relative residual of each fit that produced a basis vector.
    pub fit_residuals: Vec<f64>,
}

impl<R: Real> KrylovBasis<R> {
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Largest `|⟨v_i|v_j⟩|` with `i ≠ j`.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.len();
        (0..n * n).filter(|k| k / n != k % n).map(|k| self.gram[k].norm()).fold(0.0, f64::max)
    }
}

struct Builder<'a, R: Real> {
    h: &'a MpOperator<R>,
    cfg: &'a KrylovConfig,
    basis: Vec<MpsState<R>>,
    /// `hv[i][j] = ⟨v_i|H|v_j⟩` and `gv[i][j] = ⟨v_i|v_j⟩`, filled as
    /// vectors arrive.
    hv: Vec<Vec<Complex64>>,
    gv: Vec<Vec<Complex64>>,
    residuals: Vec<f64>,
    scale: f64,
}

impl<'a, R: Real> Builder<'a, R> {
    fn new(psi: &MpsState<R>, h: &'a MpOperator<R>, cfg: &'a KrylovConfig) -> Result<Self> {
        cfg.validate()?;
        if psi.site_specs() != h.site_specs() {
            return Err(Error::Dimension("state and Hamiltonian live on different lattices".into()));
        }
        let v0 = psi.normalized()?;
        let e = cto64(mpo_expectation(&v0, h, &v0)?);
        Ok(Self { h, cfg, basis: vec![v0], hv: vec![vec![e]], gv: vec![vec![Complex64::new(1.0, 0.0)]], residuals: vec![0.0], scale: e.re.abs().max(1.0) })
    }

    /// Adds the next vector; `false` on an invariant subspace.
    fn grow(&mut self) -> Result<bool> {
        let j = self.basis.len() - 1;
        let last = &self.basis[j];
        let mut targets = vec![FitTarget::applied(cre(R::one()), self.h, last)];
        for (i, v) in self.basis.iter().enumerate() {
            targets.push(FitTarget::state(-cfrom::<R>(self.hv[i][j]), v));
        }
        let fit = match variational_fit(&targets, &self.cfg.fit_options()) {
            Ok(f) => f,
            Err(Error::ZeroNorm { .. }) => return Ok(false),
            Err(e) => return Err(e),
        };
        let mut w = fit.state;
        let mut res = fit.report.relative_residual();
        if w.norm().as_f64() < self.cfg.breakdown_tol * self.scale {
            return Ok(false);
        }
        w = w.normalized()?;
        let ov: Vec<Complex<R>> = self.basis.iter().map(|v| overlap(v, &w)).collect::<Result<_>>()?;
        if ov.iter().map(|c| cto64(*c).norm()).fold(0.0, f64::max) > self.cfg.orthogonality_tol {
            let mut coeffs = vec![cre(R::one())];
            coeffs.extend(ov.iter().map(|c| -*c));
            let mut states: Vec<&MpsState<R>> = vec![&w];
            states.extend(self.basis.iter());
            let again = match fit_sum(&coeffs, &states, &self.cfg.fit_options()) {
                Ok(f) => f,
                Err(Error::ZeroNorm { .. }) => return Ok(false),
                Err(e) => return Err(e),
            };
            res = res.max(again.report.relative_residual());
            if again.state.norm().as_f64() < self.cfg.breakdown_tol {
                return Ok(false);
            }
            w = again.state.normalized()?;
        }
        let mut col = Vec::with_capacity(self.basis.len() + 1);
        let mut gcol = Vec::with_capacity(self.basis.len() + 1);
        for (i, v) in self.basis.iter().enumerate() {
            let hij = cto64(mpo_expectation(v, self.h, &w)?);
            let gij = cto64(overlap(v, &w)?);
            self.hv[i].push(hij);
            self.gv[i].push(gij);
            col.push(hij.conj());
            gcol.push(gij.conj());
        }
        col.push(cto64(mpo_expectation(&w, self.h, &w)?));
        gcol.push(Complex64::new(1.0, 0.0));
        self.hv.push(col);
        self.gv.push(gcol);
        self.basis.push(w);
        self.residuals.push(res);
        Ok(true)
    }

    fn matrices(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        let flat = |m: &Vec<Vec<Complex64>>| m.iter().flatten().copied().collect::<Vec<_>>();
        (flat(&self.hv), flat(&self.gv))
    }

    fn finish(self) -> KrylovBasis<R> {
        let (h_small, gram) = self.matrices();
        KrylovBasis { basis: self.basis, h_small, gram, fit_residuals: self.residuals }
    }
}

/// Krylov basis of up to `cfg.subspace_dim` vectors built by fitted
/// Gram-Schmidt steps `|j⟩ ∝ H|j−1⟩ − Σ_i ⟨i|H|j−1⟩|i⟩`.
pub fn krylov_basis<R: Real>(psi: &MpsState<R>, h: &MpOperator<R>, cfg: &KrylovConfig) -> Result<KrylovBasis<R>> {
    let mut b = Builder::new(psi, h, cfg)?;
    while b.basis.len() < cfg.subspace_dim && b.grow()? {}
    Ok(b.finish())
}

/// Coefficients of `e^{−iHt}|v_0⟩` in a (nearly) orthonormal basis, using
/// the Löwdin-orthogonalized projection.
fn small_propagator(h: &[Complex64], gram: &[Complex64], n: usize, t: f64) -> Vec<Complex64> {
    let s_inv_half = hermitian_function(gram, n, |x: f64| Complex64::new(x.max(1e-300).powf(-0.5), 0.0));
    let s_half = hermitian_function(gram, n, |x: f64| Complex64::new(x.max(0.0).sqrt(), 0.0));
    let ht = mat(&mat(&s_inv_half, h, n), &s_inv_half, n);
    let (vals, vecs) = hermitian_eig(&ht, n);
    // x0 = S^{1/2} e_0
    let x0: Vec<Complex64> = (0..n).map(|i| s_half[i * n]).collect();
    let mut xt = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let mut proj = Complex64::new(0.0, 0.0);
        for i in 0..n {
            proj += vecs[i * n + k].conj() * x0[i];
        }
        let ph = Complex64::new(0.0, -vals[k] * t).exp() * proj;
        for i in 0..n {
            xt[i] += vecs[i * n + k] * ph;
        }
    }
    (0..n).map(|i| (0..n).map(|k| s_inv_half[i * n + k] * xt[k]).sum()).collect()
}

fn mat(a: &[Complex64], b: &[Complex64], n: usize) -> Vec<Complex64> {
    crate::tensor::matmul(a, b, n, n, n)
}

/// Result of one Krylov step.
#[derive(Clone, Debug)]
pub struct KrylovStep<R: Real> {
    pub state: MpsState<R>,
    /// `|c_{N−1}|` plus the square roots of all fit residuals.
    pub error_estimate: f64,
    pub basis_size: usize,
    /// `‖ψ(dt)‖` of the result before normalization.
    pub norm: f64,
}

/// `e^{−iH·dt}|ψ⟩` for `dt = cfg.step_dt`.
pub fn krylov_step<R: Real>(psi: &MpsState<R>, h: &MpOperator<R>, cfg: &KrylovConfig) -> Result<KrylovStep<R>> {
    krylov_step_dt(psi, h, cfg, cfg.step_dt)
}

/// `e^{−iH·dt}|ψ⟩` for an explicit `dt`; `dt = 0` returns the input.
pub fn krylov_step_dt<R: Real>(psi: &MpsState<R>, h: &MpOperator<R>, cfg: &KrylovConfig, dt: f64) -> Result<KrylovStep<R>> {
    if dt == 0.0 {
        let state = psi.normalized()?;
        return Ok(KrylovStep { norm: 1.0, state, error_estimate: 0.0, basis_size: 1 });
    }
    let mut b = Builder::new(psi, h, cfg)?;
    let mut tail = 0.0;
    while b.basis.len() < cfg.subspace_dim {
        if !b.grow()? {
            tail = 0.0;
            break;
        }
        let n = b.basis.len();
        let (hm, gm) = b.matrices();
        tail = small_propagator(&hm, &gm, n, dt)[n - 1].norm();
        if tail < cfg.coefficient_tol {
            break;
        }
    }
    let kb = b.finish();
    let n = kb.len();
    let c = small_propagator(&kb.h_small, &kb.gram, n, dt);
    let coeffs: Vec<Complex<R>> = c.iter().map(|z| cfrom(*z)).collect();
    let refs: Vec<&MpsState<R>> = kb.basis.iter().collect();
    let fit = fit_sum(&coeffs, &refs, &cfg.fit_options())?;
    let fit_err: f64 = kb.fit_residuals.iter().chain([&fit.report.relative_residual()]).map(|r| r.max(0.0).sqrt()).sum();
    let norm = fit.state.norm().as_f64();
    Ok(KrylovStep { state: fit.state.normalized()?, error_estimate: tail + fit_err, basis_size: n, norm })
}

/// Plain unitary evolution over `t` in steps of `cfg.step_dt` (the last step
/// is shortened to land on `t`).
pub fn evolve<R: Real>(psi: &MpsState<R>, h: &MpOperator<R>, cfg: &KrylovConfig, t: f64) -> Result<(MpsState<R>, f64)> {
    cfg.validate()?;
    let mut state = psi.normalized()?;
    let mut err = 0.0;
    let mut done = 0.0;
    while done < t - 1e-12 * t.abs().max(1.0) {
        let dt = cfg.step_dt.min(t - done);
        let step = krylov_step_dt(&state, h, cfg, dt)?;
        err += step.error_estimate;
        state = step.state;
        done += dt;
    }
    Ok((state, err))
}

/// Homodyne signal `dy = √κ⟨a + a†⟩dt + ΔW` for the current state.
pub fn homodyne_increment<R: Real>(psi: &MpsState<R>, kappa: f64, dt: f64, noise: &mut NoiseStream) -> Result<f64> {
    let field = std::f64::consts::SQRT_2 * quadrature_mean(psi)?;
    Ok(homodyne_signal(field, kappa, dt, noise))
}

/// `Ω(dy) = 1 − (κ/2)a†a·dt + √κ·a·dy` on the oscillator site.
pub fn measurement_operator<R: Real>(dim: usize, kappa: f64, dt: f64, dy: f64) -> LocalOp<R> {
    let id = LocalOp::<R>::identity(dim);
    let n = LocalOp::<R>::number(dim).scale(cre(R::lit(-0.5 * kappa * dt)));
    let a = LocalOp::<R>::annihilation(dim).scale(cre(R::lit(kappa.sqrt() * dy)));
    id + n + a
}

/// Applies `Ω(dy)` and renormalizes; returns the state and the norm before
/// renormalization.
pub fn measurement_update<R: Real>(psi: &MpsState<R>, kappa: f64, dt: f64, dy: f64) -> Result<(MpsState<R>, f64)> {
    let site = psi.osc_site();
    let dim = psi.site_specs()[site].phys_dim;
    let omega = measurement_operator::<R>(dim, kappa, dt, dy);
    let next = psi.apply_local(site, &omega)?;
    let n = next.norm().as_f64();
    if !(n > 1e-300) || !n.is_finite() {
        return Err(Error::DegenerateUpdate { norm: n });
    }
    Ok((next.scale(cre(R::lit(1.0 / n))), n))
}

fn record_point<R: Real>(psi: &MpsState<R>, t: f64, dy: f64, drift: f64) -> Result<RecordPoint> {
    Ok(RecordPoint { t, dy, osc: oscillator_density_matrix(psi)?, parity: parity_expectation(psi)?, norm_drift: drift })
}

/// Conditioned evolution: a Krylov step of `settings.dt`, then the homodyne
/// signal and `Ω(dy)` with renormalization. Errors inside the loop end the
/// run early with `record.aborted` set.
pub fn run_trajectory<R: Real>(
    psi0: &MpsState<R>,
    h: &MpOperator<R>,
    params: &ModelParams,
    cfg: &KrylovConfig,
    settings: &TrajectorySettings,
) -> Result<TrajectoryRecord> {
    settings.validate()?;
    cfg.validate()?;
    let mut rec = TrajectoryRecord::new(settings.seed, *params, settings.kappa, settings.dt, settings.keep_states);
    let mut psi = psi0.normalized()?;
    let mut noise = NoiseStream::with_substeps(settings.seed, settings.noise_substeps);
    rec.push(record_point(&psi, 0.0, 0.0, 0.0)?);
    let (mut dy_acc, mut drift) = (0.0, 0.0f64);
    for step in 1..=settings.steps() {
        let outcome = (|| -> Result<(MpsState<R>, f64, f64)> {
            let unitary = krylov_step_dt(&psi, h, cfg, settings.dt)?;
            let dy = homodyne_increment(&unitary.state, settings.kappa, settings.dt, &mut noise)?;
            let (next, n) = measurement_update(&unitary.state, settings.kappa, settings.dt, dy)?;
            Ok((next, dy, n))
        })();
        let (next, dy, n) = match outcome {
            Ok(v) => v,
            Err(e) => {
                rec.aborted = Some(format!("step {step}: {e}"));
                return Ok(rec);
            }
        };
        psi = next;
        dy_acc += dy;
        drift = drift.max((n - 1.0).abs());
        if step % settings.observables_every == 0 {
            rec.push(record_point(&psi, step as f64 * settings.dt, dy_acc, drift)?);
            dy_acc = 0.0;
            drift = 0.0;
        }
    }
    Ok(rec)
}
