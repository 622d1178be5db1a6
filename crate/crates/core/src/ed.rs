//! Dense reference implementation for small chains: exact spectrum,
//! propagation, conditioned trajectories, the Lindblad equation, and the
//! free-fermion solution of the decoupled spin chain.
//!
//! Everything here runs in `f64` and builds the Hamiltonian directly in the
//! occupation basis, independently of the MPO machinery.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::hermitian_eig;
use crate::model::{ModelParams, SiteSpec};
use crate::noise::{homodyne_signal, NoiseStream};
use crate::observables::OscillatorState;
use crate::trajectory::{RecordPoint, TrajectoryRecord};

pub const ED_MAX_SPINS: usize = 8;
pub const ED_MAX_NMAX: usize = 16;

/// Dense Hamiltonian in the basis `|i_0 i_1 …⟩` (site 0 most significant,
/// spin digit 0 = `|↑⟩`), matching [`MpsState::to_dense`](crate::mps::MpsState::to_dense).
pub struct DenseSystem {
    params: ModelParams,
    specs: Vec<SiteSpec>,
    dim: usize,
    h: DMatrix<f64>,
    /// Fock number of each basis state.
    photons: Vec<usize>,
    /// Index of the remaining (spin) digits of each basis state.
    rest: Vec<usize>,
    /// `σ_z` eigenvalue per spin per basis state.
    sz: Vec<Vec<f64>>,
    parity: Vec<f64>,
    eig: OnceLock<(Vec<f64>, DMatrix<f64>)>,
}

fn digits(mut idx: usize, specs: &[SiteSpec]) -> Vec<usize> {
    let mut out = vec![0; specs.len()];
    for i in (0..specs.len()).rev() {
        out[i] = idx % specs[i].phys_dim;
        idx /= specs[i].phys_dim;
    }
    out
}

fn index(d: &[usize], specs: &[SiteSpec]) -> usize {
    d.iter().zip(specs).fold(0, |acc, (x, s)| acc * s.phys_dim + x)
}

impl DenseSystem {
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        if params.l > ED_MAX_SPINS || params.n_max > ED_MAX_NMAX {
            return Err(Error::InvalidArgument(format!(
                "dense oracle limited to L <= {ED_MAX_SPINS}, n_max <= {ED_MAX_NMAX} (got L = {}, n_max = {})",
                params.l, params.n_max
            )));
        }
        let specs = params.site_specs();
        let dim: usize = specs.iter().map(|s| s.phys_dim).product();
        let osc = params.osc_site;
        let spins = params.spin_sites();
        let lam = params.g / (params.l as f64).sqrt();
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        let mut photons = vec![0; dim];
        let mut rest = vec![0; dim];
        let mut sz = vec![vec![0.0; params.l]; dim];
        let mut parity = vec![0.0; dim];
        for col in 0..dim {
            let d = digits(col, &specs);
            let n = d[osc];
            photons[col] = n;
            rest[col] = spins.iter().fold(0, |acc, &s| acc * 2 + d[s]);
            let z: Vec<f64> = spins.iter().map(|&s| if d[s] == 0 { 1.0 } else { -1.0 }).collect();
            parity[col] = if n % 2 == 0 { 1.0 } else { -1.0 } * z.iter().product::<f64>();
            h[(col, col)] += params.omega * n as f64 - params.h * z.iter().sum::<f64>();
            sz[col] = z.clone();
            // −J σ_y σ_y on neighbouring spins: σ_y|↑⟩ = i|↓⟩, σ_y|↓⟩ = −i|↑⟩
            for k in 0..spins.len().saturating_sub(1) {
                let (a, b) = (spins[k], spins[k + 1]);
                let amp = if d[a] == d[b] { -1.0 } else { 1.0 };
                let mut e = d.clone();
                e[a] ^= 1;
                e[b] ^= 1;
                h[(index(&e, &specs), col)] += -params.j * amp;
            }
            // (g/√L) σ_x (a + a†)
            for &s in &spins {
                let mut e = d.clone();
                e[s] ^= 1;
                if n > 0 {
                    e[osc] = n - 1;
                    h[(index(&e, &specs), col)] += lam * (n as f64).sqrt();
                }
                if n < params.n_max {
                    e[osc] = n + 1;
                    h[(index(&e, &specs), col)] += lam * ((n + 1) as f64).sqrt();
                }
            }
        }
        Ok(Self { params: *params, specs, dim, h, photons, rest, sz, parity, eig: OnceLock::new() })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn site_specs(&self) -> &[SiteSpec] {
        &self.specs
    }

    pub fn hamiltonian(&self) -> &DMatrix<f64> {
        &self.h
    }

    /// `max |H − Hᵀ|`.
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.h - self.h.transpose()).amax()
    }

    /// Full eigendecomposition, computed once.
    pub fn eigen(&self) -> &(Vec<f64>, DMatrix<f64>) {
        self.eig.get_or_init(|| {
            let e = SymmetricEigen::new(self.h.clone());
            let mut order: Vec<usize> = (0..self.dim).collect();
            order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
            let vals = order.iter().map(|&i| e.eigenvalues[i]).collect();
            let vecs = DMatrix::from_fn(self.dim, self.dim, |r, c| e.eigenvectors[(r, order[c])]);
            (vals, vecs)
        })
    }

    /// Diagonal of `P`.
    pub fn parity_diagonal(&self) -> &[f64] {
        &self.parity
    }

    pub fn apply_parity(&self, psi: &[Complex64]) -> Vec<Complex64> {
        psi.iter().zip(&self.parity).map(|(z, p)| z * p).collect()
    }

    pub fn apply_h(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let re = DVector::from_iterator(self.dim, psi.iter().map(|z| z.re));
        let im = DVector::from_iterator(self.dim, psi.iter().map(|z| z.im));
        let (hr, hi) = (&self.h * re, &self.h * im);
        hr.iter().zip(hi.iter()).map(|(a, b)| Complex64::new(*a, *b)).collect()
    }

    /// `a` lifted to the full space.
    pub fn apply_a(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        let stride = self.osc_stride();
        for (i, z) in psi.iter().enumerate() {
            let n = self.photons[i];
            if n > 0 {
                out[i - stride] += z * (n as f64).sqrt();
            }
        }
        out
    }

    pub fn apply_number(&self, psi: &[Complex64]) -> Vec<Complex64> {
        psi.iter().zip(&self.photons).map(|(z, n)| z * *n as f64).collect()
    }

    fn osc_stride(&self) -> usize {
        self.specs[self.params.osc_site + 1..].iter().map(|s| s.phys_dim).product()
    }

    pub fn expect_h(&self, psi: &[Complex64]) -> f64 {
        dotc(psi, &self.apply_h(psi)).re / norm_sqr(psi)
    }

    pub fn parity_expectation(&self, psi: &[Complex64]) -> f64 {
        psi.iter().zip(&self.parity).map(|(z, p)| z.norm_sqr() * p).sum::<f64>() / norm_sqr(psi)
    }

    pub fn sigma_z(&self, psi: &[Complex64]) -> Vec<f64> {
        let nrm = norm_sqr(psi);
        (0..self.params.l)
            .map(|k| psi.iter().zip(&self.sz).map(|(z, s)| z.norm_sqr() * s[k]).sum::<f64>() / nrm)
            .collect()
    }

    /// Reduced oscillator state of a pure state.
    pub fn oscillator_state(&self, psi: &[Complex64]) -> Result<OscillatorState> {
        let d = self.params.n_max + 1;
        let nrest = 1usize << self.params.l;
        let mut m = DMatrix::<Complex64>::zeros(d, nrest);
        for (i, z) in psi.iter().enumerate() {
            m[(self.photons[i], self.rest[i])] = *z;
        }
        let rho = &m * m.adjoint();
        OscillatorState::from_matrix(d, row_major(&rho))
    }

    /// Reduced oscillator state of a density matrix on the full space.
    pub fn oscillator_state_of(&self, rho: &DMatrix<Complex64>) -> Result<OscillatorState> {
        let d = self.params.n_max + 1;
        let mut r = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..self.dim {
            for j in 0..self.dim {
                if self.rest[i] == self.rest[j] {
                    r[self.photons[i] * d + self.photons[j]] += rho[(i, j)];
                }
            }
        }
        OscillatorState::from_matrix(d, r)
    }

    /// `e^{−iHt}ψ` via the spectral decomposition.
    pub fn propagate(&self, psi: &[Complex64], t: f64) -> Vec<Complex64> {
        let (vals, vecs) = self.eigen();
        let re = DVector::from_iterator(self.dim, psi.iter().map(|z| z.re));
        let im = DVector::from_iterator(self.dim, psi.iter().map(|z| z.im));
        let (cr, ci) = (vecs.tr_mul(&re), vecs.tr_mul(&im));
        let mut rot_re = DVector::zeros(self.dim);
        let mut rot_im = DVector::zeros(self.dim);
        for k in 0..self.dim {
            let ph = Complex64::new(0.0, -vals[k] * t).exp();
            let c = Complex64::new(cr[k], ci[k]) * ph;
            rot_re[k] = c.re;
            rot_im[k] = c.im;
        }
        let (out_re, out_im) = (vecs * rot_re, vecs * rot_im);
        out_re.iter().zip(out_im.iter()).map(|(a, b)| Complex64::new(*a, *b)).collect()
    }

    /// Measurement back-action `Ω(dy) = 1 − (κ/2)a†a dt + √κ a dy`, returning
    /// the unnormalized image.
    pub fn measurement_operator(&self, psi: &[Complex64], kappa: f64, dt: f64, dy: f64) -> Vec<Complex64> {
        let a = self.apply_a(psi);
        let n = self.apply_number(psi);
        psi.iter()
            .zip(n.iter().zip(&a))
            .map(|(z, (nz, az))| z - nz * (0.5 * kappa * dt) + az * (kappa.sqrt() * dy))
            .collect()
    }

    /// `⟨a + a†⟩`.
    pub fn field_mean(&self, psi: &[Complex64]) -> f64 {
        2.0 * dotc(psi, &self.apply_a(psi)).re / norm_sqr(psi)
    }
}

/// Lowest `k` eigenpairs with parity labels.
#[derive(Clone, Debug)]
pub struct DenseSpectrum {
    pub energies: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
    pub parities: Vec<f64>,
}

/// Lowest `k` eigenpairs. Within exactly or nearly degenerate clusters the
/// states are rotated to diagonalize the parity, so every returned state
/// carries a sharp parity label.
pub fn ed_spectrum(sys: &DenseSystem, k: usize) -> Result<DenseSpectrum> {
    if k == 0 || k > sys.dim {
        return Err(Error::InvalidArgument(format!("requested {k} states of a {}-dim space", sys.dim)));
    }
    let (vals, vecs) = sys.eigen();
    let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-9 * scale;
    let mut states: Vec<Vec<Complex64>> = Vec::with_capacity(k);
    let mut energies = Vec::with_capacity(k);
    // extend the window to the end of a degenerate cluster so rotations
    // stay inside eigenspaces
    let mut end = k;
    while end < sys.dim && (vals[end] - vals[end - 1]).abs() < tol {
        end += 1;
    }
    let mut start = 0;
    while start < end {
        let mut stop = start + 1;
        while stop < end && (vals[stop] - vals[stop - 1]).abs() < tol {
            stop += 1;
        }
        let cluster: Vec<Vec<Complex64>> =
            (start..stop).map(|c| vecs.column(c).iter().map(|x| Complex64::new(*x, 0.0)).collect()).collect();
        let m = cluster.len();
        if m == 1 {
            states.push(cluster.into_iter().next().unwrap());
        } else {
            let mut pm = vec![Complex64::new(0.0, 0.0); m * m];
            for a in 0..m {
                let pa = sys.apply_parity(&cluster[a]);
                for b in 0..m {
                    pm[b * m + a] = dotc(&cluster[b], &pa);
                }
            }
            let (_, rot) = hermitian_eig(&pm, m);
            for c in 0..m {
                let mut v = vec![Complex64::new(0.0, 0.0); sys.dim];
                for a in 0..m {
                    let coef = rot[a * m + c];
                    v.iter_mut().zip(&cluster[a]).for_each(|(x, y)| *x += coef * y);
                }
                states.push(v);
            }
        }
        energies.extend_from_slice(&vals[start..stop]);
        start = stop;
    }
    states.truncate(k);
    energies.truncate(k);
    let parities = states.iter().map(|s| sys.parity_expectation(s)).collect();
    Ok(DenseSpectrum { energies, states, parities })
}

pub fn ed_propagate(sys: &DenseSystem, psi0: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    if psi0.len() != sys.dim {
        return Err(Error::Dimension(format!("{} amplitudes for a {}-dim space", psi0.len(), sys.dim)));
    }
    Ok(sys.propagate(psi0, t))
}

/// Settings shared by the dense and MPS trajectory drivers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectorySettings {
    pub kappa: f64,
    pub dt: f64,
    pub t_final: f64,
    pub seed: u64,
    pub observables_every: usize,
    /// Wiener sub-steps per time step.
    pub noise_substeps: usize,
    pub keep_states: bool,
}

impl TrajectorySettings {
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0) || !(self.dt > 0.0) || !(self.t_final >= 0.0) || self.observables_every == 0 {
            return Err(Error::InvalidArgument("need kappa >= 0, dt > 0, t_final >= 0, observables_every >= 1".into()));
        }
        Ok(())
    }
}

/// Split-step conditioned evolution on dense vectors: exact `e^{−iHdt}`,
/// then the homodyne signal from the propagated state and `Ω(dy)` with
/// renormalization.
pub fn ed_trajectory(sys: &DenseSystem, psi0: &[Complex64], s: &TrajectorySettings) -> Result<TrajectoryRecord> {
    s.validate()?;
    if psi0.len() != sys.dim {
        return Err(Error::Dimension(format!("{} amplitudes for a {}-dim space", psi0.len(), sys.dim)));
    }
    let nrm = norm_sqr(psi0).sqrt();
    let mut psi: Vec<Complex64> = psi0.iter().map(|z| z / nrm).collect();
    let mut noise = NoiseStream::with_substeps(s.seed, s.noise_substeps);
    let mut rec = TrajectoryRecord::new(s.seed, sys.params, s.kappa, s.dt, s.keep_states);
    rec.push(RecordPoint {
        t: 0.0,
        dy: 0.0,
        osc: sys.oscillator_state(&psi)?,
        parity: sys.parity_expectation(&psi),
        norm_drift: 0.0,
    });
    let (mut dy_acc, mut drift) = (0.0, 0.0f64);
    for step in 1..=s.steps() {
        psi = sys.propagate(&psi, s.dt);
        let dy = homodyne_signal(sys.field_mean(&psi), s.kappa, s.dt, &mut noise);
        let next = sys.measurement_operator(&psi, s.kappa, s.dt, dy);
        let n = norm_sqr(&next).sqrt();
        if !(n > 1e-300) {
            rec.aborted = Some(format!("zero norm after measurement at step {step}"));
            return Ok(rec);
        }
        psi = next.into_iter().map(|z| z / n).collect();
        dy_acc += dy;
        drift = drift.max((n - 1.0).abs());
        if step % s.observables_every == 0 {
            rec.push(RecordPoint {
                t: step as f64 * s.dt,
                dy: dy_acc,
                osc: sys.oscillator_state(&psi)?,
                parity: sys.parity_expectation(&psi),
                norm_drift: drift,
            });
            dy_acc = 0.0;
            drift = 0.0;
        }
    }
    Ok(rec)
}

/// Unconditioned density-matrix evolution.
#[derive(Clone, Debug)]
pub struct LindbladSeries {
    pub times: Vec<f64>,
    pub n_mean: Vec<f64>,
    pub q_mean: Vec<f64>,
    pub trace: Vec<f64>,
    pub states: Vec<DMatrix<Complex64>>,
}

/// RK4 integration of `ρ̇ = −i[H, ρ] + κ(aρa† − ½{a†a, ρ})`, recording every
/// `every` steps.
pub fn ed_lindblad(sys: &DenseSystem, rho0: &DMatrix<Complex64>, kappa: f64, dt: f64, t_final: f64, every: usize) -> Result<LindbladSeries> {
    if rho0.nrows() != sys.dim || rho0.ncols() != sys.dim {
        return Err(Error::Dimension("density matrix of the wrong size".into()));
    }
    if !(dt > 0.0) || every == 0 || !(kappa >= 0.0) {
        return Err(Error::InvalidArgument("need dt > 0, kappa >= 0, every >= 1".into()));
    }
    let dim = sys.dim;
    let h: DMatrix<Complex64> = sys.h.map(|x| Complex64::new(x, 0.0));
    let mut a = DMatrix::<Complex64>::zeros(dim, dim);
    let stride = sys.osc_stride();
    for i in 0..dim {
        let n = sys.photons[i];
        if n > 0 {
            a[(i - stride, i)] = Complex64::new((n as f64).sqrt(), 0.0);
        }
    }
    let ad = a.adjoint();
    let num = &ad * &a;
    let i_ = Complex64::new(0.0, 1.0);
    let k = Complex64::new(kappa, 0.0);
    let rhs = |r: &DMatrix<Complex64>| -> DMatrix<Complex64> {
        let comm = &h * r - r * &h;
        let jump = &a * r * &ad;
        let anti = &num * r + r * &num;
        comm * (-i_) + (jump - anti * Complex64::new(0.5, 0.0)) * k
    };
    let mut out = LindbladSeries { times: vec![], n_mean: vec![], q_mean: vec![], trace: vec![], states: vec![] };
    let record = |t: f64, r: &DMatrix<Complex64>, out: &mut LindbladSeries| {
        let tr = r.trace().re;
        let n = (&num * r).trace().re / tr;
        let x = ((&a + &ad) * r).trace().re / tr;
        out.times.push(t);
        out.n_mean.push(n);
        out.q_mean.push(x / std::f64::consts::SQRT_2);
        out.trace.push(tr);
        out.states.push(r.clone());
    };
    let mut rho = rho0.clone();
    record(0.0, &rho, &mut out);
    let steps = (t_final / dt).round() as usize;
    let half = Complex64::new(0.5 * dt, 0.0);
    let full = Complex64::new(dt, 0.0);
    let sixth = Complex64::new(dt / 6.0, 0.0);
    let two = Complex64::new(2.0, 0.0);
    for step in 1..=steps {
        let k1 = rhs(&rho);
        let k2 = rhs(&(&rho + &k1 * half));
        let k3 = rhs(&(&rho + &k2 * half));
        let k4 = rhs(&(&rho + &k3 * full));
        rho += (k1 + k2 * two + k3 * two + k4) * sixth;
        if step % every == 0 {
            record(step as f64 * dt, &rho, &mut out);
        }
    }
    Ok(out)
}

/// Ground state of the decoupled chain `−h Σσ_z − J Σσ_yσ_y` (open ends)
/// from its Majorana quadratic form.
#[derive(Clone, Debug)]
pub struct FreeFermionSolution {
    pub energy: f64,
    /// `⟨σ_z^i⟩`.
    pub sigma_z: Vec<f64>,
    /// `⟨σ_y^i σ_y^j⟩`, row-major `L × L`.
    pub yy: Vec<f64>,
}

/// With `a_i = S_i σ^x_i`, `b_i = S_i σ^y_i` (string `S_i = Π_{j<i} σ^z_j`):
/// `σ^z_i = −i a_i b_i` and `σ^y_i σ^y_{i+1} = i a_i b_{i+1}`, so
/// `H = (i/4) γᵀ A γ` with a real antisymmetric `A`.
pub fn free_fermion_ising(h: f64, j: f64, l: usize) -> Result<FreeFermionSolution> {
    if l == 0 || !h.is_finite() || !j.is_finite() {
        return Err(Error::InvalidArgument("need L >= 1 and finite couplings".into()));
    }
    let n = 2 * l;
    let mut a = vec![0.0; n * n];
    let mut set = |p: usize, q: usize, v: f64| {
        a[p * n + q] += v;
        a[q * n + p] -= v;
    };
    for i in 0..l {
        set(2 * i, 2 * i + 1, 2.0 * h);
        if i + 1 < l {
            set(2 * i, 2 * (i + 1) + 1, -2.0 * j);
        }
    }
    let ia: Vec<Complex64> = a.iter().map(|x| Complex64::new(0.0, *x)).collect();
    let (vals, vecs) = hermitian_eig(&ia, n);
    let energy = -0.25 * vals.iter().map(|v| v.abs()).sum::<f64>();
    // G = −i sign(iA), real antisymmetric; ⟨γ_k γ_l⟩ = i G_kl for k ≠ l
    let mut g = vec![0.0; n * n];
    for p in 0..n {
        for q in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, v) in vals.iter().enumerate() {
                let s = if *v > 1e-12 {
                    1.0
                } else if *v < -1e-12 {
                    -1.0
                } else {
                    0.0
                };
                acc += vecs[p * n + k] * vecs[q * n + k].conj() * s;
            }
            g[p * n + q] = (Complex64::new(0.0, -1.0) * acc).re;
        }
    }
    let sigma_z = (0..l).map(|i| g[(2 * i) * n + 2 * i + 1]).collect();
    let mut yy = vec![0.0; l * l];
    for i in 0..l {
        yy[i * l + i] = 1.0;
        for jj in i + 1..l {
            // a_i b_{i+1} a_{i+1} b_{i+2} … a_{j−1} b_j
            let mut idx = Vec::with_capacity(2 * (jj - i));
            for k in i..jj {
                idx.push(2 * k);
                idx.push(2 * (k + 1) + 1);
            }
            let m = idx.len();
            let mut sub = vec![0.0; m * m];
            for (x, &p) in idx.iter().enumerate() {
                for (y, &q) in idx.iter().enumerate() {
                    sub[x * m + y] = g[p * n + q];
                }
            }
            let sign = if (jj - i) % 2 == 0 { 1.0 } else { -1.0 };
            let v = sign * pfaffian(&mut sub, m);
            yy[i * l + jj] = v;
            yy[jj * l + i] = v;
        }
    }
    Ok(FreeFermionSolution { energy, sigma_z, yy })
}

/// Pfaffian of a real antisymmetric `n × n` matrix (destroys `a`), by
/// pivoted skew-symmetric elimination.
pub fn pfaffian(a: &mut [f64], n: usize) -> f64 {
    if n % 2 == 1 {
        return 0.0;
    }
    let mut pf = 1.0;
    let mut k = 0;
    while k + 1 < n {
        let mut kp = k + 1;
        for r in k + 2..n {
            if a[r * n + k].abs() > a[kp * n + k].abs() {
                kp = r;
            }
        }
        if kp != k + 1 {
            for c in 0..n {
                a.swap((k + 1) * n + c, kp * n + c);
            }
            for r in 0..n {
                a.swap(r * n + k + 1, r * n + kp);
            }
            pf = -pf;
        }
        let piv = a[k * n + k + 1];
        if piv == 0.0 {
            return 0.0;
        }
        pf *= piv;
        if k + 2 < n {
            let tau: Vec<f64> = (k + 2..n).map(|c| a[k * n + c] / piv).collect();
            let col: Vec<f64> = (k + 2..n).map(|r| a[r * n + k + 1]).collect();
            for (x, r) in (k + 2..n).enumerate() {
                for (y, c) in (k + 2..n).enumerate() {
                    a[r * n + c] += tau[x] * col[y] - col[x] * tau[y];
                }
            }
        }
        k += 2;
    }
    pf
}

/// Dense `kron` of per-site operators in chain order (site 0 most
/// significant).
pub fn kron_all(mats: &[DMatrix<Complex64>]) -> DMatrix<Complex64> {
    mats.iter().skip(1).fold(mats[0].clone(), |acc, m| acc.kronecker(m))
}

fn row_major(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub fn dotc(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Oscillator-site helper for building product states: coherent amplitudes
/// `e^{−|α|²/2} αⁿ/√n!` truncated at `n_max` and renormalized.
pub fn coherent_amplitudes(alpha: Complex64, n_max: usize) -> Vec<Complex64> {
    let mut v = Vec::with_capacity(n_max + 1);
    let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..=n_max {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        v.push(c);
    }
    let nrm = norm_sqr(&v).sqrt();
    v.into_iter().map(|z| z / nrm).collect()
}
