//! Matrix product operators: a channel-graph builder with dead-channel
//! pruning, the model Hamiltonian, and a few observable MPOs.

use num_complex::Complex;

use crate::env::{left_step, Env, OpDims};
use crate::error::{Error, Result};
use crate::model::{validate_specs, ModelParams, SiteKind, SiteSpec};
use crate::mps::{labels as mps_labels, MpsState};
use crate::ops::LocalOp;
use crate::scalar::{cone, czero, Real};
use crate::tensor::{matmul, DenseTensor};

const MPO_LABELS: [&str; 4] = ["left", "out", "in", "right"];

/// Matrix product operator with site tensors `(left, out, in, right)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MpOperator<R: Real> {
    sites: Vec<DenseTensor<R>>,
    specs: Vec<SiteSpec>,
}

impl<R: Real> MpOperator<R> {
    pub fn new(sites: Vec<DenseTensor<R>>, specs: Vec<SiteSpec>) -> Result<Self> {
        validate_specs(&specs)?;
        if sites.len() != specs.len() {
            return Err(Error::Dimension(format!("{} tensors for {} sites", sites.len(), specs.len())));
        }
        let mut left = 1;
        for (i, (t, s)) in sites.iter().zip(&specs).enumerate() {
            let sh = t.shape();
            if sh.len() != 4 || sh[0] != left || sh[1] != s.phys_dim || sh[2] != s.phys_dim {
                return Err(Error::Dimension(format!("site {i}: MPO shape {sh:?}")));
            }
            left = sh[3];
        }
        if left != 1 {
            return Err(Error::Dimension("right boundary bond must be 1".into()));
        }
        let sites = sites
            .into_iter()
            .map(|t| t.with_labels(&MPO_LABELS))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { sites, specs })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn site_specs(&self) -> &[SiteSpec] {
        &self.specs
    }

    pub fn sites(&self) -> &[DenseTensor<R>] {
        &self.sites
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.len() - 1].iter().map(|t| t.shape()[3]).collect()
    }

    pub(crate) fn dims(&self, i: usize) -> OpDims {
        let sh = self.sites[i].shape();
        OpDims { l: sh[0], d: sh[1], r: sh[3] }
    }

    pub(crate) fn data(&self, i: usize) -> &[Complex<R>] {
        self.sites[i].data()
    }

    /// Identity on every site.
    pub fn identity(specs: &[SiteSpec]) -> Result<Self> {
        let ops: Vec<LocalOp<R>> = specs.iter().map(|s| LocalOp::identity(s.phys_dim)).collect();
        Self::product(specs, &ops)
    }

    /// Tensor product of one operator per site (bond dimension 1).
    pub fn product(specs: &[SiteSpec], ops: &[LocalOp<R>]) -> Result<Self> {
        validate_specs(specs)?;
        if ops.len() != specs.len() {
            return Err(Error::Dimension(format!("{} operators for {} sites", ops.len(), specs.len())));
        }
        let mut b = ChannelBuilder::new(specs, vec![1; specs.len() + 1])?;
        for (i, op) in ops.iter().enumerate() {
            b.set(i, 0, 0, op.clone())?;
        }
        Ok(b.build(0, 0))
    }

    /// `op` on `site`, identity elsewhere.
    pub fn local(specs: &[SiteSpec], site: usize, op: &LocalOp<R>) -> Result<Self> {
        if site >= specs.len() {
            return Err(Error::InvalidArgument(format!("site {site} beyond chain of {}", specs.len())));
        }
        let ops: Vec<LocalOp<R>> = specs
            .iter()
            .enumerate()
            .map(|(i, s)| if i == site { op.clone() } else { LocalOp::identity(s.phys_dim) })
            .collect();
        Self::product(specs, &ops)
    }

    /// Photon number `a†a` on the oscillator site.
    pub fn number(specs: &[SiteSpec]) -> Result<Self> {
        let osc = validate_specs(specs)?;
        Self::local(specs, osc, &LocalOp::number(specs[osc].phys_dim))
    }

    /// Sum of single-site terms `Σ_i ops[i]` (entries may be `None`).
    pub fn sum_of_locals(specs: &[SiteSpec], ops: &[Option<LocalOp<R>>]) -> Result<Self> {
        validate_specs(specs)?;
        if ops.len() != specs.len() {
            return Err(Error::Dimension(format!("{} operators for {} sites", ops.len(), specs.len())));
        }
        // channels: 0 = nothing yet, 1 = done
        let mut b = ChannelBuilder::new(specs, vec![2; specs.len() + 1])?;
        for (i, s) in specs.iter().enumerate() {
            let id = LocalOp::identity(s.phys_dim);
            b.set(i, 0, 0, id.clone())?;
            b.set(i, 1, 1, id)?;
            if let Some(op) = &ops[i] {
                b.set(i, 0, 1, op.clone())?;
            }
        }
        Ok(b.build(0, 1))
    }

    /// Scales the operator by `s` (applied to site 0).
    pub fn scale(&self, s: Complex<R>) -> Self {
        let mut out = self.clone();
        out.sites[0] = out.sites[0].scale(s);
        out
    }

    /// Operator product `self · other`; bond dimensions multiply.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.specs != other.specs {
            return Err(Error::Dimension("operators live on different lattices".into()));
        }
        let mut sites = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            let (a, b) = (self.dims(i), other.dims(i));
            let d = a.d;
            let (la, lb, ra, rb) = (a.l, b.l, a.r, b.r);
            let (ad, bd) = (self.data(i), other.data(i));
            let mut out = vec![czero(); la * lb * d * d * ra * rb];
            for wa in 0..la {
                for wb in 0..lb {
                    for va in 0..ra {
                        for vb in 0..rb {
                            // C[s,t] = Σ_k A[wa,s,k,va] B[wb,k,t,vb]
                            for s in 0..d {
                                for k in 0..d {
                                    let x = ad[((wa * d + s) * d + k) * ra + va];
                                    if x == czero() {
                                        continue;
                                    }
                                    for t in 0..d {
                                        let y = bd[((wb * d + k) * d + t) * rb + vb];
                                        let idx = ((((wa * lb + wb) * d + s) * d + t) * ra + va) * rb + vb;
                                        out[idx] += x * y;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            sites.push(DenseTensor::from_raw(vec![la * lb, d, d, ra * rb], mpo_labels(), out));
        }
        Ok(Self { sites, specs: self.specs.clone() })
    }

    /// Exact `O|ψ⟩`; bond dimensions multiply and no gauge is kept.
    pub fn apply(&self, psi: &MpsState<R>) -> Result<MpsState<R>> {
        if self.specs != psi.site_specs() {
            return Err(Error::Dimension("operator and state live on different lattices".into()));
        }
        let mut sites = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            let w = self.dims(i);
            let x = psi.dims(i);
            let (wd, xd) = (self.data(i), psi.site(i).data());
            let d = w.d;
            let mut out = vec![czero(); w.l * x.l * d * w.r * x.r];
            for wl in 0..w.l {
                for xl in 0..x.l {
                    for s in 0..d {
                        for t in 0..d {
                            for wr in 0..w.r {
                                let o = wd[((wl * d + s) * d + t) * w.r + wr];
                                if o == czero() {
                                    continue;
                                }
                                for xr in 0..x.r {
                                    let idx = (((wl * x.l + xl) * d + s) * w.r + wr) * x.r + xr;
                                    out[idx] += o * xd[(xl * d + t) * x.r + xr];
                                }
                            }
                        }
                    }
                }
            }
            sites.push(DenseTensor::from_raw(vec![w.l * x.l, d, w.r * x.r], mps_labels(), out));
        }
        Ok(MpsState::from_parts(sites, self.specs.clone(), None))
    }

    /// Dense matrix (row-major, site 0 most significant). Small systems only.
    pub fn to_dense(&self) -> Vec<Complex<R>> {
        // M[(row prefix, col prefix), bond]
        let mut m = vec![cone::<R>()];
        let (mut rows, mut bond) = (1usize, 1usize);
        for i in 0..self.len() {
            let w = self.dims(i);
            let d = w.d;
            // T[(r, c), (s, t, w')] = Σ_w M[(r,c), w] W[w, s, t, w']
            let t = matmul(&m, self.data(i), rows * rows, bond, d * d * w.r);
            let nr = rows * d;
            let mut next = vec![czero(); nr * nr * w.r];
            for r in 0..rows {
                for c in 0..rows {
                    for s in 0..d {
                        for tt in 0..d {
                            let src = (((r * rows + c) * d + s) * d + tt) * w.r;
                            let dst = (((r * d + s) * nr) + c * d + tt) * w.r;
                            next[dst..dst + w.r].copy_from_slice(&t[src..src + w.r]);
                        }
                    }
                }
            }
            m = next;
            rows = nr;
            bond = w.r;
        }
        m
    }
}

pub(crate) fn mpo_labels() -> Vec<String> {
    MPO_LABELS.iter().map(|s| s.to_string()).collect()
}

/// Finite-state-machine MPO assembly. Channel `c` on bond `i` is the state
/// between sites `i − 1` and `i`; `entries[i][(a, b)]` is the operator moving
/// channel `a` to channel `b` across site `i`.
struct ChannelBuilder<R: Real> {
    specs: Vec<SiteSpec>,
    channels: Vec<usize>,
    entries: Vec<Vec<(usize, usize, LocalOp<R>)>>,
}

impl<R: Real> ChannelBuilder<R> {
    fn new(specs: &[SiteSpec], channels: Vec<usize>) -> Result<Self> {
        validate_specs(specs)?;
        Ok(Self { specs: specs.to_vec(), channels, entries: vec![Vec::new(); specs.len()] })
    }

    fn set(&mut self, site: usize, from: usize, to: usize, op: LocalOp<R>) -> Result<()> {
        if op.dim() != self.specs[site].phys_dim {
            return Err(Error::Dimension(format!(
                "dim-{} operator on a dim-{} site {site}",
                op.dim(),
                self.specs[site].phys_dim
            )));
        }
        if !op.is_zero() {
            self.entries[site].push((from, to, op));
        }
        Ok(())
    }

    /// Keeps only channels on a path from `start` (left boundary) to `end`
    /// (right boundary), then lays out the tensors. An operator with no
    /// surviving path comes out as the zero MPO with unit bonds.
    fn build(self, start: usize, end: usize) -> MpOperator<R> {
        let n = self.specs.len();
        let mut alive_fwd: Vec<Vec<bool>> = self.channels.iter().map(|&c| vec![false; c]).collect();
        alive_fwd[0][start] = true;
        for i in 0..n {
            for (a, b, _) in &self.entries[i] {
                if alive_fwd[i][*a] {
                    alive_fwd[i + 1][*b] = true;
                }
            }
            if i + 1 == n {
                for (c, v) in alive_fwd[n].iter_mut().enumerate() {
                    *v = *v && c == end;
                }
            }
        }
        let mut alive: Vec<Vec<bool>> = self.channels.iter().map(|&c| vec![false; c]).collect();
        alive[n][end] = alive_fwd[n][end];
        for i in (0..n).rev() {
            for (a, b, _) in &self.entries[i] {
                if alive[i + 1][*b] && alive_fwd[i][*a] {
                    alive[i][*a] = true;
                }
            }
        }
        let maps: Vec<Vec<Option<usize>>> = alive
            .iter()
            .map(|flags| {
                let mut k = 0;
                flags
                    .iter()
                    .map(|&f| {
                        f.then(|| {
                            k += 1;
                            k - 1
                        })
                    })
                    .collect()
            })
            .collect();
        let dead = !alive[0][start];
        let bond = |i: usize| if dead { 1 } else { maps[i].iter().flatten().count() };
        let mut sites = Vec::with_capacity(n);
        for i in 0..n {
            let d = self.specs[i].phys_dim;
            let (wl, wr) = (bond(i), bond(i + 1));
            let mut data = vec![czero(); wl * d * d * wr];
            if !dead {
                for (a, b, op) in &self.entries[i] {
                    if let (Some(x), Some(y)) = (maps[i][*a], maps[i + 1][*b]) {
                        for s in 0..d {
                            for t in 0..d {
                                data[((x * d + s) * d + t) * wr + y] += op.at(s, t);
                            }
                        }
                    }
                }
            }
            sites.push(DenseTensor::from_raw(vec![wl, d, d, wr], mpo_labels(), data));
        }
        MpOperator { sites, specs: self.specs }
    }
}

/// `ω a†a − h Σσ_z − J Σ σ_y^i σ_y^{i+1} + (g/√L) Σσ_x (a + a†)`.
///
/// Bond dimensions after pruning: at most 4 between spins and 3 across the
/// oscillator.
pub fn build_dicke_ising_mpo<R: Real>(p: &ModelParams) -> Result<MpOperator<R>> {
    p.validate()?;
    let specs = p.site_specs();
    let osc = p.osc_site;
    const START: usize = 0;
    const SY: usize = 1;
    const XACC: usize = 2;
    const APEND: usize = 3;
    const DONE: usize = 4;
    let mut b = ChannelBuilder::new(&specs, vec![5; specs.len() + 1])?;
    let lam = R::lit(p.g / (p.l as f64).sqrt());
    let (h, j, omega) = (R::lit(p.h), R::lit(p.j), R::lit(p.omega));
    for (i, s) in specs.iter().enumerate() {
        let id = LocalOp::<R>::identity(s.phys_dim);
        b.set(i, START, START, id.clone())?;
        b.set(i, DONE, DONE, id.clone())?;
        match s.kind {
            SiteKind::Oscillator => {
                let field = LocalOp::field(s.phys_dim);
                b.set(i, SY, SY, id)?;
                b.set(i, START, DONE, LocalOp::number(s.phys_dim) * omega)?;
                b.set(i, START, APEND, field.clone() * lam)?;
                b.set(i, XACC, DONE, field)?;
            }
            SiteKind::Spin => {
                let (x, y, z) = (LocalOp::pauli_x(), LocalOp::pauli_y(), LocalOp::pauli_z());
                b.set(i, START, SY, y.clone() * (-j))?;
                b.set(i, SY, DONE, y)?;
                b.set(i, START, DONE, z * (-h))?;
                if i < osc {
                    b.set(i, START, XACC, x * lam)?;
                    b.set(i, XACC, XACC, id)?;
                } else {
                    b.set(i, APEND, APEND, id)?;
                    b.set(i, APEND, DONE, x)?;
                }
            }
        }
    }
    Ok(b.build(START, DONE))
}

/// `A ⊗ Σ_i X_i`: `a_op` on the oscillator and one operator per spin, in
/// spin order.
pub fn build_sum_local_mpo<R: Real>(specs: &[SiteSpec], a_op: &LocalOp<R>, x_ops: &[LocalOp<R>]) -> Result<MpOperator<R>> {
    let osc = validate_specs(specs)?;
    if x_ops.len() + 1 != specs.len() {
        return Err(Error::Dimension(format!("{} spin operators for {} spins", x_ops.len(), specs.len() - 1)));
    }
    const START: usize = 0;
    const XACC: usize = 1;
    const APEND: usize = 2;
    const DONE: usize = 3;
    let mut b = ChannelBuilder::new(specs, vec![4; specs.len() + 1])?;
    let mut spin = 0;
    for (i, s) in specs.iter().enumerate() {
        let id = LocalOp::<R>::identity(s.phys_dim);
        if i == osc {
            b.set(i, START, APEND, a_op.clone())?;
            b.set(i, XACC, DONE, a_op.clone())?;
            continue;
        }
        let x = x_ops[spin].clone();
        spin += 1;
        if i < osc {
            b.set(i, START, START, id.clone())?;
            b.set(i, START, XACC, x)?;
            b.set(i, XACC, XACC, id)?;
        } else {
            b.set(i, APEND, APEND, id.clone())?;
            b.set(i, APEND, DONE, x)?;
            b.set(i, DONE, DONE, id)?;
        }
    }
    Ok(b.build(START, DONE))
}

/// `P = (−1)^n ⊗ Π σ_z`.
pub fn build_parity_mpo<R: Real>(p: &ModelParams) -> Result<MpOperator<R>> {
    p.validate()?;
    parity_mpo(&p.site_specs())
}

pub fn parity_mpo<R: Real>(specs: &[SiteSpec]) -> Result<MpOperator<R>> {
    let ops: Vec<LocalOp<R>> = specs
        .iter()
        .map(|s| match s.kind {
            SiteKind::Oscillator => LocalOp::fock_parity(s.phys_dim),
            SiteKind::Spin => LocalOp::pauli_z(),
        })
        .collect();
    MpOperator::product(specs, &ops)
}

/// `⟨ψ|O|φ⟩`, linear in the chain length.
pub fn mpo_expectation<R: Real>(psi: &MpsState<R>, op: &MpOperator<R>, phi: &MpsState<R>) -> Result<Complex<R>> {
    psi.check_compatible(phi)?;
    if op.site_specs() != psi.site_specs() {
        return Err(Error::Dimension("operator and state live on different lattices".into()));
    }
    let mut e = Env::boundary();
    for i in 0..psi.len() {
        e = left_step(&e, psi.site(i).data(), psi.dims(i), op.data(i), op.dims(i), phi.site(i).data(), phi.dims(i));
    }
    Ok(e.scalar())
}

/// `⟨ψ|O|ψ⟩ / ⟨ψ|ψ⟩`, real part.
pub fn expectation_real<R: Real>(psi: &MpsState<R>, op: &MpOperator<R>) -> Result<R> {
    let num = mpo_expectation(psi, op, psi)?;
    let den = psi.norm_sqr();
    if !(den > R::zero()) {
        return Err(Error::ZeroNorm { norm: 0.0 });
    }
    Ok(num.re / den)
}
