//! Measured quantities: oscillator reduced state, photon statistics,
//! quadrature, parity, magnetization and `σ_y` correlations.
//!
//! Results are reported in `f64` whatever the working precision.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::env::{left_step_overlap, right_step_overlap, Env};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, svd_matrix};
use crate::model::SiteKind;
use crate::mpo::{parity_mpo, mpo_expectation};
use crate::mps::MpsState;
use crate::ops::LocalOp;
use crate::scalar::{cto64, Real};
use crate::tensor::{matmul, matmul_ah};

/// Reduced density matrix of the oscillator, row-major `dim × dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillatorState {
    pub dim: usize,
    pub rho: Vec<Complex<f64>>,
    pub trace: f64,
}

impl OscillatorState {
    /// Builds a normalized state from an arbitrary positive matrix.
    pub fn from_matrix(dim: usize, rho: Vec<Complex<f64>>) -> Result<Self> {
        if rho.len() != dim * dim || dim == 0 {
            return Err(Error::Dimension(format!("{} entries for a {dim}x{dim} density matrix", rho.len())));
        }
        let tr: f64 = (0..dim).map(|i| rho[i * dim + i].re).sum();
        if !(tr > 0.0) {
            return Err(Error::ZeroNorm { norm: tr });
        }
        let rho = rho.into_iter().map(|z| z / tr).collect();
        Ok(Self { dim, rho, trace: 1.0 })
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex<f64> {
        self.rho[i * self.dim + j]
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eig(&self.rho, self.dim).0
    }

    /// `Tr(ρ O)`.
    pub fn expect(&self, op: &LocalOp<f64>) -> Complex<f64> {
        let mut acc = Complex::new(0.0, 0.0);
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += self.at(i, j) * op.at(j, i);
            }
        }
        acc
    }

    /// Photon number mean and variance from the diagonal.
    pub fn photon_stats(&self) -> (f64, f64) {
        let (mut m1, mut m2) = (0.0, 0.0);
        for n in 0..self.dim {
            let p = self.at(n, n).re;
            m1 += n as f64 * p;
            m2 += (n * n) as f64 * p;
        }
        (m1, m2 - m1 * m1)
    }

    /// `⟨q⟩` with `q = (a + a†)/√2`.
    pub fn quadrature(&self) -> f64 {
        let mut acc = 0.0;
        for n in 1..self.dim {
            acc += 2.0 * (n as f64).sqrt() * self.at(n, n - 1).re;
        }
        acc / std::f64::consts::SQRT_2
    }

    /// Population of the highest Fock state kept.
    pub fn top_population(&self) -> f64 {
        self.at(self.dim - 1, self.dim - 1).re
    }

    /// Entrywise mean of several states (for ensemble averages).
    pub fn average(states: &[OscillatorState]) -> Result<Self> {
        let first = states.first().ok_or_else(|| Error::InvalidArgument("empty ensemble".into()))?;
        let mut acc = vec![Complex::new(0.0, 0.0); first.rho.len()];
        for s in states {
            if s.dim != first.dim {
                return Err(Error::Dimension("density matrices of different size".into()));
            }
            acc.iter_mut().zip(&s.rho).for_each(|(a, b)| *a += *b);
        }
        Self::from_matrix(first.dim, acc)
    }
}

/// Partial trace over every spin.
pub fn oscillator_density_matrix<R: Real>(psi: &MpsState<R>) -> Result<OscillatorState> {
    let osc = psi.osc_site();
    let c = psi.canonicalize(osc)?;
    let dims = c.dims(osc);
    // ρ[s,t] = Σ_{l,r} A[l,s,r] conj(A[l,t,r]); reorder to [(l,r), s]
    let a = c.site(osc).data();
    let mut m = Vec::with_capacity(a.len());
    for l in 0..dims.l {
        for r in 0..dims.r {
            for s in 0..dims.d {
                m.push(cto64(a[(l * dims.d + s) * dims.r + r]));
            }
        }
    }
    // ρ^T = M^H M, so ρ = (M^H M)^T
    let g = matmul_ah(&m, &m, dims.l * dims.r, dims.d, dims.d);
    let d = dims.d;
    let rho: Vec<Complex<f64>> = (0..d * d).map(|k| g[(k % d) * d + k / d]).collect();
    OscillatorState::from_matrix(d, rho)
}

/// Base-2 von Neumann entropy; eigenvalues below `1e-14` contribute zero.
pub fn von_neumann_entropy(rho: &OscillatorState) -> f64 {
    entropy_of(&rho.eigenvalues())
}

pub fn entropy_of(probs: &[f64]) -> f64 {
    probs.iter().filter(|&&p| p > 1e-14).map(|&p| -p * p.log2()).sum()
}

/// Bipartite entropy across bond `bond` (between sites `bond` and `bond + 1`).
pub fn bond_entropy<R: Real>(psi: &MpsState<R>, bond: usize) -> Result<f64> {
    if bond + 1 >= psi.len() {
        return Err(Error::InvalidArgument(format!("bond {bond} outside chain")));
    }
    let c = psi.canonicalize(bond)?;
    let d = c.dims(bond);
    let (_, s, _) = svd_matrix(c.site(bond).data(), d.l * d.d, d.r)?;
    let total: f64 = s.iter().map(|x| x.as_f64().powi(2)).sum();
    let p: Vec<f64> = s.iter().map(|x| x.as_f64().powi(2) / total).collect();
    Ok(entropy_of(&p))
}

pub fn photon_stats<R: Real>(psi: &MpsState<R>) -> Result<(f64, f64)> {
    Ok(oscillator_density_matrix(psi)?.photon_stats())
}

pub fn quadrature_mean<R: Real>(psi: &MpsState<R>) -> Result<f64> {
    Ok(oscillator_density_matrix(psi)?.quadrature())
}

/// `⟨P⟩` for `P = (−1)^n ⊗ Πσ_z`, normalized by `⟨ψ|ψ⟩`.
pub fn parity_expectation<R: Real>(psi: &MpsState<R>) -> Result<f64> {
    let p = parity_mpo::<R>(psi.site_specs())?;
    let num = mpo_expectation(psi, &p, psi)?;
    Ok(num.re.as_f64() / psi.norm_sqr().as_f64())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn pauli<R: Real>(self) -> LocalOp<R> {
        match self {
            Axis::X => LocalOp::pauli_x(),
            Axis::Y => LocalOp::pauli_y(),
            Axis::Z => LocalOp::pauli_z(),
        }
    }
}

/// Local expectation values `⟨ψ|O_i|ψ⟩/⟨ψ|ψ⟩` of one operator on every spin.
pub fn magnetization<R: Real>(psi: &MpsState<R>, axis: Axis) -> Result<Vec<f64>> {
    let op = axis.pauli::<R>();
    let mut c = psi.canonicalize(0)?;
    let norm = c.norm_sqr().as_f64();
    let mut out = Vec::new();
    for i in 0..c.len() {
        c.canonicalize_mut(i)?;
        if c.site_specs()[i].kind != SiteKind::Spin {
            continue;
        }
        let d = c.dims(i);
        let a = c.site(i).data();
        let mut acc = Complex::new(0.0, 0.0);
        for l in 0..d.l {
            for r in 0..d.r {
                for s in 0..2 {
                    for t in 0..2 {
                        let o = op.at(s, t);
                        acc += cto64(a[(l * 2 + s) * d.r + r].conj() * o * a[(l * 2 + t) * d.r + r]);
                    }
                }
            }
        }
        out.push(acc.re / norm);
    }
    Ok(out)
}

/// Connected `σ_y` correlations and the fitted correlation length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationProfile {
    /// `(i, j, ⟨σ_y^i σ_y^j⟩ − ⟨σ_y^i⟩⟨σ_y^j⟩)` with spin indices `0..L`.
    pub pairs: Vec<(usize, usize, f64)>,
    /// `None` when the correlations do not decay.
    pub fitted_xi: Option<f64>,
    /// Distances `(r_min, r_max)` used in the fit.
    pub fit_window: (usize, usize),
    pub fit_residual: f64,
    /// Spins closer than this to either end were excluded.
    pub edge_exclusion: usize,
}

/// Connected `⟨σ_y^i σ_y^j⟩` for `i = ref_spin` (or all pairs when `None`),
/// with the default fit window `2 ≤ r ≤ L/2` and edge exclusion `L/8`.
pub fn sigma_y_correlations<R: Real>(psi: &MpsState<R>, ref_spin: Option<usize>) -> Result<CorrelationProfile> {
    let spins: Vec<usize> = (0..psi.len()).filter(|&i| psi.site_specs()[i].kind == SiteKind::Spin).collect();
    let l = spins.len();
    if matches!(ref_spin, Some(r) if r >= l) {
        return Err(Error::InvalidArgument("reference spin beyond chain".into()));
    }
    let c = psi.canonicalize(0)?;
    let n = c.len();
    let norm = c.norm_sqr().as_f64();
    let y = LocalOp::<R>::pauli_y();
    let my = magnetization(psi, Axis::Y)?;

    let mut lenv = vec![Env::overlap_boundary(); n + 1];
    for i in 0..n {
        lenv[i + 1] = left_step_overlap(&lenv[i], c.site(i).data(), c.dims(i), c.site(i).data(), c.dims(i));
    }
    let mut renv = vec![Env::overlap_boundary(); n + 1];
    for i in (0..n).rev() {
        renv[i] = right_step_overlap(&renv[i + 1], c.site(i).data(), c.dims(i), c.site(i).data(), c.dims(i));
    }
    let with_y: Vec<Vec<Complex<R>>> = spins
        .iter()
        .map(|&i| c.apply_local(i, &y).map(|s| s.site(i).data().to_vec()))
        .collect::<Result<_>>()?;

    // ⟨σ_y^si σ_y^sj⟩ for every sj > si by one transfer sweep
    let row = |si: usize| -> Vec<f64> {
        let i = spins[si];
        let mut vals = vec![0.0; l];
        let mut t = left_step_overlap(&lenv[i], c.site(i).data(), c.dims(i), &with_y[si], c.dims(i));
        let mut sj = si + 1;
        for k in i + 1..n {
            if sj < l && spins[sj] == k {
                let closed = left_step_overlap(&t, c.site(k).data(), c.dims(k), &with_y[sj], c.dims(k));
                vals[sj] = contract_lr(&closed, &renv[k + 1]).re / norm;
                sj += 1;
            }
            t = left_step_overlap(&t, c.site(k).data(), c.dims(k), c.site(k).data(), c.dims(k));
        }
        vals
    };

    let mut pairs = Vec::new();
    match ref_spin {
        Some(r) => {
            let forward = row(r);
            for sj in 0..l {
                if sj < r {
                    pairs.push((sj, r, row(sj)[r] - my[sj] * my[r]));
                } else if sj > r {
                    pairs.push((r, sj, forward[sj] - my[r] * my[sj]));
                }
            }
        }
        None => {
            for si in 0..l {
                let vals = row(si);
                for sj in si + 1..l {
                    pairs.push((si, sj, vals[sj] - my[si] * my[sj]));
                }
            }
        }
    }
    let edge = l / 8;
    let window = (2, (l / 2).max(2));
    let (xi, residual) = fit_from_pairs(&pairs, l, edge, window);
    Ok(CorrelationProfile { pairs, fitted_xi: xi, fit_window: window, fit_residual: residual, edge_exclusion: edge })
}

fn contract_lr<R: Real>(l: &Env<R>, r: &Env<R>) -> Complex<f64> {
    debug_assert_eq!(l.data.len(), r.data.len());
    let mut acc = Complex::new(0.0, 0.0);
    for (a, b) in l.data.iter().zip(&r.data) {
        acc += cto64(*a * *b);
    }
    acc
}

/// Averages `|C|` over pairs at each distance (both ends at least `edge`
/// away from the chain ends) and fits within `window`.
pub fn fit_from_pairs(pairs: &[(usize, usize, f64)], l: usize, edge: usize, window: (usize, usize)) -> (Option<f64>, f64) {
    let mut sums = vec![(0.0, 0usize); l.max(1)];
    for &(i, j, v) in pairs {
        if i < edge || j < edge || i + edge >= l || j + edge >= l {
            continue;
        }
        let r = i.abs_diff(j);
        sums[r].0 += v.abs();
        sums[r].1 += 1;
    }
    let profile: Vec<(usize, f64)> = sums
        .iter()
        .enumerate()
        .filter(|(_, (_, c))| *c > 0)
        .map(|(r, (s, c))| (r, s / *c as f64))
        .collect();
    fit_correlation_length(&profile, window)
}

/// Least-squares fit of `log|C(r)|` against `r` over `window` (inclusive).
/// Returns `(ξ, rms residual)`; `ξ = None` when the slope is `≥ −1e-6` or
/// fewer than two usable points remain.
pub fn fit_correlation_length(profile: &[(usize, f64)], window: (usize, usize)) -> (Option<f64>, f64) {
    let pts: Vec<(f64, f64)> = profile
        .iter()
        .filter(|(r, c)| *r >= window.0 && *r <= window.1 && c.abs() > 1e-300)
        .map(|(r, c)| (*r as f64, c.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return (None, 0.0);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rms = (pts.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    if slope >= -1e-6 {
        (None, rms)
    } else {
        (Some(-1.0 / slope), rms)
    }
}

/// Dense `⟨ψ|O|ψ⟩` helper for a single-site operator on an arbitrary site.
pub fn local_expectation<R: Real>(psi: &MpsState<R>, site: usize, op: &LocalOp<R>) -> Result<Complex<f64>> {
    let c = psi.canonicalize(site)?;
    let d = c.dims(site);
    if op.dim() != d.d {
        return Err(Error::Dimension(format!("dim-{} operator on a dim-{} site", op.dim(), d.d)));
    }
    let a = c.site(site).data();
    let mut acc = Complex::new(0.0, 0.0);
    for l in 0..d.l {
        let block = &a[l * d.d * d.r..(l + 1) * d.d * d.r];
        let ob = matmul(op.data(), block, d.d, d.d, d.r);
        for (x, y) in block.iter().zip(&ob) {
            acc += cto64(x.conj() * *y);
        }
    }
    Ok(acc / c.norm_sqr().as_f64())
}
