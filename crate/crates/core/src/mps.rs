//! Open-boundary matrix product states with the oscillator as an ordinary
//! chain site.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::env::{left_step_overlap, Env, SiteDims};
use crate::error::{Error, Result};
use crate::linalg::{qr_matrix, svd_truncate_matrix, TruncationSpec};
use crate::model::{validate_specs, SiteKind, SiteSpec};
use crate::ops::LocalOp;
use crate::scalar::{cabs, cone, cre, czero, Real};
use crate::tensor::{dotc, matmul, DenseTensor};

const SITE_LABELS: [&str; 3] = ["left", "phys", "right"];

/// Matrix product state. Site tensors carry axes `(left, phys, right)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MpsState<R: Real> {
    sites: Vec<DenseTensor<R>>,
    specs: Vec<SiteSpec>,
    center: Option<usize>,
}

impl<R: Real> MpsState<R> {
    /// Assembles a state from site tensors. `center` is trusted; pass `None`
    /// when the gauge is unknown.
    pub fn new(sites: Vec<DenseTensor<R>>, specs: Vec<SiteSpec>, center: Option<usize>) -> Result<Self> {
        validate_specs(&specs)?;
        if sites.len() != specs.len() {
            return Err(Error::Dimension(format!("{} tensors for {} sites", sites.len(), specs.len())));
        }
        let mut left = 1;
        for (i, (t, s)) in sites.iter().zip(&specs).enumerate() {
            let sh = t.shape();
            if sh.len() != 3 || sh[0] != left || sh[1] != s.phys_dim {
                return Err(Error::Dimension(format!("site {i}: shape {sh:?}, expected [{left}, {}, _]", s.phys_dim)));
            }
            left = sh[2];
        }
        if left != 1 {
            return Err(Error::Dimension("right boundary bond must be 1".into()));
        }
        if matches!(center, Some(c) if c >= sites.len()) {
            return Err(Error::InvalidArgument("center beyond chain".into()));
        }
        let sites = sites
            .into_iter()
            .map(|t| t.with_labels(&SITE_LABELS))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { sites, specs, center })
    }

    pub(crate) fn from_parts(sites: Vec<DenseTensor<R>>, specs: Vec<SiteSpec>, center: Option<usize>) -> Self {
        Self { sites, specs, center }
    }

    /// Product state from one local amplitude vector per site.
    pub fn product(specs: &[SiteSpec], locals: &[Vec<Complex<R>>]) -> Result<Self> {
        validate_specs(specs)?;
        if locals.len() != specs.len() {
            return Err(Error::Dimension(format!("{} local vectors for {} sites", locals.len(), specs.len())));
        }
        let mut sites = Vec::with_capacity(specs.len());
        for (v, s) in locals.iter().zip(specs) {
            if v.len() != s.phys_dim {
                return Err(Error::Dimension(format!("local vector of length {} on a dim-{} site", v.len(), s.phys_dim)));
            }
            sites.push(DenseTensor::new(&[1, s.phys_dim, 1], &SITE_LABELS, v.clone())?);
        }
        Ok(Self { sites, specs: specs.to_vec(), center: None })
    }

    /// Computational basis state `|i_0 i_1 …⟩`. Spin index 0 is `|↑⟩`.
    pub fn basis(specs: &[SiteSpec], indices: &[usize]) -> Result<Self> {
        if indices.len() != specs.len() {
            return Err(Error::Dimension(format!("{} indices for {} sites", indices.len(), specs.len())));
        }
        let locals = indices
            .iter()
            .zip(specs)
            .map(|(&k, s)| {
                if k >= s.phys_dim {
                    return Err(Error::InvalidArgument(format!("basis index {k} on a dim-{} site", s.phys_dim)));
                }
                let mut v = vec![czero(); s.phys_dim];
                v[k] = cone();
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut psi = Self::product(specs, &locals)?;
        psi.center = Some(0);
        Ok(psi)
    }

    /// Random state with Gaussian entries and bonds capped at `bond`
    /// (and by the local Hilbert-space dimensions). Not normalized.
    pub fn random(specs: &[SiteSpec], bond: usize, seed: u64) -> Result<Self> {
        validate_specs(specs)?;
        if bond == 0 {
            return Err(Error::InvalidArgument("bond must be >= 1".into()));
        }
        let n = specs.len();
        let mut dims = vec![1usize; n + 1];
        for i in 1..n {
            let left: usize = specs[..i].iter().fold(1usize, |a, s| a.saturating_mul(s.phys_dim));
            let right: usize = specs[i..].iter().fold(1usize, |a, s| a.saturating_mul(s.phys_dim));
            dims[i] = bond.min(left).min(right);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sites = Vec::with_capacity(n);
        for (i, s) in specs.iter().enumerate() {
            let len = dims[i] * s.phys_dim * dims[i + 1];
            let data = (0..len)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex::new(R::lit(re), R::lit(im))
                })
                .collect();
            sites.push(DenseTensor::from_raw(vec![dims[i], s.phys_dim, dims[i + 1]], labels(), data));
        }
        Ok(Self { sites, specs: specs.to_vec(), center: None })
    }

    /// MPS of a dense state vector (site 0 most significant) by successive SVDs.
    pub fn from_dense(specs: &[SiteSpec], amplitudes: &[Complex<R>], spec: &TruncationSpec) -> Result<Self> {
        validate_specs(specs)?;
        let total: usize = specs.iter().map(|s| s.phys_dim).product();
        if amplitudes.len() != total {
            return Err(Error::Dimension(format!("{} amplitudes for a {total}-dim space", amplitudes.len())));
        }
        let n = specs.len();
        let mut rest = amplitudes.to_vec();
        let mut left = 1;
        let mut remaining = total;
        let mut sites = Vec::with_capacity(n);
        for s in &specs[..n - 1] {
            let d = s.phys_dim;
            remaining /= d;
            let (u, sv, vh, _) = svd_truncate_matrix(&rest, left * d, remaining, spec)?;
            let k = sv.len();
            sites.push(DenseTensor::from_raw(vec![left, d, k], labels(), u));
            rest = vh;
            for (r, row) in rest.chunks_mut(remaining).enumerate() {
                let sr = cre(sv[r]);
                row.iter_mut().for_each(|z| *z *= sr);
            }
            left = k;
        }
        sites.push(DenseTensor::from_raw(vec![left, specs[n - 1].phys_dim, 1], labels(), rest));
        Ok(Self { sites, specs: specs.to_vec(), center: Some(n - 1) })
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

    pub fn site(&self, i: usize) -> &DenseTensor<R> {
        &self.sites[i]
    }

    pub(crate) fn set_site(&mut self, i: usize, t: DenseTensor<R>) {
        self.sites[i] = t;
    }

    pub(crate) fn set_center(&mut self, c: Option<usize>) {
        self.center = c;
    }

    pub fn center(&self) -> Option<usize> {
        self.center
    }

    /// Position of the oscillator site.
    pub fn osc_site(&self) -> usize {
        self.specs.iter().position(|s| s.kind == SiteKind::Oscillator).expect("validated layout")
    }

    /// Bond extents between neighbouring sites (length `len − 1`).
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.len() - 1].iter().map(|t| t.shape()[2]).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub(crate) fn dims(&self, i: usize) -> SiteDims {
        let sh = self.sites[i].shape();
        SiteDims { l: sh[0], d: sh[1], r: sh[2] }
    }

    /// Left-isometry defect `‖A†A − 1‖_max` of site `i`.
    pub fn left_isometry_error(&self, i: usize) -> R {
        let d = self.dims(i);
        let g = crate::tensor::matmul_ah(self.sites[i].data(), self.sites[i].data(), d.l * d.d, d.r, d.r);
        identity_defect(&g, d.r)
    }

    /// Right-isometry defect `‖B B† − 1‖_max` of site `i`.
    pub fn right_isometry_error(&self, i: usize) -> R {
        let d = self.dims(i);
        let data = self.sites[i].data();
        let cols = d.d * d.r;
        let mut g = vec![czero(); d.l * d.l];
        for a in 0..d.l {
            for b in 0..d.l {
                g[a * d.l + b] = dotc(&data[b * cols..(b + 1) * cols], &data[a * cols..(a + 1) * cols]);
            }
        }
        identity_defect(&g, d.l)
    }

    /// Moves the orthogonality center to `center` by QR sweeps.
    pub fn canonicalize(&self, center: usize) -> Result<Self> {
        let mut out = self.clone();
        out.canonicalize_mut(center)?;
        Ok(out)
    }

    pub(crate) fn canonicalize_mut(&mut self, center: usize) -> Result<()> {
        if center >= self.len() {
            return Err(Error::InvalidArgument(format!("center {center} beyond chain of {}", self.len())));
        }
        let (from_left, from_right) = match self.center {
            Some(c) => (c, c),
            None => (0, self.len() - 1),
        };
        for i in from_left..center {
            self.left_orthonormalize(i);
        }
        for i in (center + 1..=from_right).rev() {
            self.right_orthonormalize(i);
        }
        self.center = Some(center);
        Ok(())
    }

    /// QR of site `i`; the triangular factor moves into site `i + 1`.
    pub(crate) fn left_orthonormalize(&mut self, i: usize) {
        let d = self.dims(i);
        let (q, r) = qr_matrix(self.sites[i].data(), d.l * d.d, d.r);
        let k = q.len() / (d.l * d.d);
        self.sites[i] = DenseTensor::from_raw(vec![d.l, d.d, k], labels(), q);
        let dn = self.dims(i + 1);
        let next = matmul(&r, self.sites[i + 1].data(), k, dn.l, dn.d * dn.r);
        self.sites[i + 1] = DenseTensor::from_raw(vec![k, dn.d, dn.r], labels(), next);
    }

    /// LQ of site `i`; the triangular factor moves into site `i − 1`.
    pub(crate) fn right_orthonormalize(&mut self, i: usize) {
        let d = self.dims(i);
        let cols = d.d * d.r;
        let mh = adjoint(self.sites[i].data(), d.l, cols);
        let (q, r) = qr_matrix(&mh, cols, d.l);
        let k = q.len() / cols;
        // M = R† Q†
        let qh = adjoint(&q, cols, k);
        let l = adjoint(&r, k, d.l);
        self.sites[i] = DenseTensor::from_raw(vec![k, d.d, d.r], labels(), qh);
        let dp = self.dims(i - 1);
        let prev = matmul(self.sites[i - 1].data(), &l, dp.l * dp.d, dp.r, k);
        self.sites[i - 1] = DenseTensor::from_raw(vec![dp.l, dp.d, k], labels(), prev);
    }

    pub fn norm_sqr(&self) -> R {
        match self.center {
            Some(c) => self.sites[c].norm_sqr(),
            None => overlap(self, self).map(|z| z.re).unwrap_or_else(|_| R::zero()),
        }
    }

    pub fn norm(&self) -> R {
        self.norm_sqr().sqrt()
    }

    /// Multiplies the state by `s` (applied at the center, or site 0).
    pub fn scale(&self, s: Complex<R>) -> Self {
        let mut out = self.clone();
        out.scale_mut(s);
        out
    }

    pub(crate) fn scale_mut(&mut self, s: Complex<R>) {
        let i = self.center.unwrap_or(0);
        self.sites[i] = self.sites[i].scale(s);
    }

    /// Unit-norm copy; fails on a zero state.
    pub fn normalized(&self) -> Result<Self> {
        let mut out = self.canonicalize(self.center.unwrap_or(0))?;
        let n = out.norm();
        if !(n > R::eps()) {
            return Err(Error::ZeroNorm { norm: n.as_f64() });
        }
        out.scale_mut(cre(R::one() / n));
        Ok(out)
    }

    /// Applies a single-site operator. Only the addressed tensor changes.
    pub fn apply_local(&self, site: usize, op: &LocalOp<R>) -> Result<Self> {
        let mut out = self.clone();
        out.apply_local_mut(site, op)?;
        Ok(out)
    }

    pub(crate) fn apply_local_mut(&mut self, site: usize, op: &LocalOp<R>) -> Result<()> {
        if site >= self.len() {
            return Err(Error::InvalidArgument(format!("site {site} beyond chain of {}", self.len())));
        }
        let d = self.dims(site);
        if op.dim() != d.d {
            return Err(Error::Dimension(format!("dim-{} operator on a dim-{} site", op.dim(), d.d)));
        }
        let src = self.sites[site].data();
        let mut out = vec![czero(); src.len()];
        for l in 0..d.l {
            // out[l, s, r] = Σ_t O[s, t] src[l, t, r]
            let block = matmul(op.data(), &src[l * d.d * d.r..(l + 1) * d.d * d.r], d.d, d.d, d.r);
            out[l * d.d * d.r..(l + 1) * d.d * d.r].copy_from_slice(&block);
        }
        self.sites[site] = DenseTensor::from_raw(vec![d.l, d.d, d.r], labels(), out);
        if self.center != Some(site) {
            self.center = None;
        }
        Ok(())
    }

    /// SVD truncation sweep. Returns the compressed state (center at site 0)
    /// and the summed discarded weight relative to `‖ψ‖²`.
    pub fn compress(&self, spec: &TruncationSpec) -> Result<(Self, R)> {
        spec.validate()?;
        let n = self.len();
        let mut out = self.canonicalize(n - 1)?;
        let norm2 = out.norm_sqr();
        if n == 1 {
            return Ok((out, R::zero()));
        }
        let mut discarded = R::zero();
        for i in (1..n).rev() {
            let d = out.dims(i);
            let (u, s, vh, disc) = svd_truncate_matrix(out.sites[i].data(), d.l, d.d * d.r, spec)?;
            discarded += disc;
            let k = s.len();
            out.sites[i] = DenseTensor::from_raw(vec![k, d.d, d.r], labels(), vh);
            // U S into the left neighbour
            let mut us = u;
            for row in us.chunks_mut(k) {
                row.iter_mut().zip(&s).for_each(|(z, sv)| *z *= cre(*sv));
            }
            let dp = out.dims(i - 1);
            let prev = matmul(out.sites[i - 1].data(), &us, dp.l * dp.d, dp.r, k);
            out.sites[i - 1] = DenseTensor::from_raw(vec![dp.l, dp.d, k], labels(), prev);
        }
        out.center = Some(0);
        let rel = if norm2 > R::zero() { discarded / norm2 } else { R::zero() };
        Ok((out, rel))
    }

    /// Dense state vector with site 0 as the most significant index.
    /// Intended for small systems and tests.
    pub fn to_dense(&self) -> Vec<Complex<R>> {
        let mut v = vec![cone::<R>()];
        let mut prefix = 1;
        for (i, t) in self.sites.iter().enumerate() {
            let d = self.dims(i);
            v = matmul(&v, t.data(), prefix, d.l, d.d * d.r);
            prefix *= d.d;
        }
        v
    }

    pub(crate) fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.specs != other.specs {
            return Err(Error::Dimension("states live on different lattices".into()));
        }
        Ok(())
    }
}

pub(crate) fn labels() -> Vec<String> {
    SITE_LABELS.iter().map(|s| s.to_string()).collect()
}

fn adjoint<R: Real>(m: &[Complex<R>], rows: usize, cols: usize) -> Vec<Complex<R>> {
    let mut out = vec![czero(); m.len()];
    for i in 0..rows {
        for j in 0..cols {
            out[j * rows + i] = m[i * cols + j].conj();
        }
    }
    out
}

fn identity_defect<R: Real>(g: &[Complex<R>], n: usize) -> R {
    let mut worst = R::zero();
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { cone() } else { czero() };
            let e = cabs(g[i * n + j] - target);
            if e > worst {
                worst = e;
            }
        }
    }
    worst
}

/// `⟨ψ|φ⟩` by a left-to-right transfer contraction.
pub fn overlap<R: Real>(psi: &MpsState<R>, phi: &MpsState<R>) -> Result<Complex<R>> {
    psi.check_compatible(phi)?;
    let mut e = Env::overlap_boundary();
    for i in 0..psi.len() {
        e = left_step_overlap(&e, psi.sites[i].data(), psi.dims(i), phi.sites[i].data(), phi.dims(i));
    }
    Ok(e.scalar())
}
