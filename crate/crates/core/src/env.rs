//! Transfer-matrix kernels shared by expectation values, fitting and the
//! ground-state sweeps.
//!
//! Conventions (row-major):
//! - MPS site `[left, phys, right]`
//! - MPO site `[left, out, in, right]`
//! - Environment with an operator layer `[bra, mpo, ket]`, without `[bra, ket]`.

use num_complex::Complex;

use crate::scalar::{cone, Real};
use crate::tensor::{matmul, matmul_ah, permute_data};

/// Environment block `[bra, mpo, ket]`.
#[derive(Clone, Debug)]
pub(crate) struct Env<R: Real> {
    pub a: usize,
    pub w: usize,
    pub b: usize,
    pub data: Vec<Complex<R>>,
}

impl<R: Real> Env<R> {
    /// Trivial boundary `[1,1,1]` holding one.
    pub fn boundary() -> Self {
        Self { a: 1, w: 1, b: 1, data: vec![cone()] }
    }

    pub fn overlap_boundary() -> Self {
        Self { a: 1, w: 1, b: 1, data: vec![cone()] }
    }

    pub fn scalar(&self) -> Complex<R> {
        debug_assert_eq!(self.data.len(), 1);
        self.data[0]
    }
}

/// Shape helper for an MPS site slice.
#[derive(Clone, Copy, Debug)]
pub(crate) struct SiteDims {
    pub l: usize,
    pub d: usize,
    pub r: usize,
}

/// Shape helper for an MPO site slice.
#[derive(Clone, Copy, Debug)]
pub(crate) struct OpDims {
    pub l: usize,
    pub d: usize,
    pub r: usize,
}

/// `E'[a',w',b'] = Σ conj(A[a,s,a']) E[a,w,b] W[w,s,t,w'] B[b,t,b']`.
pub(crate) fn left_step<R: Real>(
    e: &Env<R>,
    bra: &[Complex<R>],
    bd: SiteDims,
    w: &[Complex<R>],
    wd: OpDims,
    ket: &[Complex<R>],
    kd: SiteDims,
) -> Env<R> {
    debug_assert_eq!(e.a, bd.l);
    debug_assert_eq!(e.w, wd.l);
    debug_assert_eq!(e.b, kd.l);
    let d = kd.d;
    // [a,w,t,b']
    let t1 = matmul(&e.data, ket, e.a * e.w, e.b, d * kd.r);
    // [a,b',w,t]
    let t1p = permute_data(&t1, &[e.a, e.w, d, kd.r], &[0, 3, 1, 2]);
    // W [w,s,t,w'] -> [w,t,s,w']
    let wp = permute_data(w, &[wd.l, wd.d, wd.d, wd.r], &[0, 2, 1, 3]);
    // [a,b',s,w']
    let t2 = matmul(&t1p, &wp, e.a * kd.r, wd.l * d, bd.d * wd.r);
    // [a,s,w',b']
    let t2p = permute_data(&t2, &[e.a, kd.r, bd.d, wd.r], &[0, 2, 3, 1]);
    let data = matmul_ah(bra, &t2p, bd.l * bd.d, bd.r, wd.r * kd.r);
    Env { a: bd.r, w: wd.r, b: kd.r, data }
}

/// `F[a,w,b] = Σ conj(A[a,s,a']) W[w,s,t,w'] B[b,t,b'] F'[a',w',b']`.
pub(crate) fn right_step<R: Real>(
    f: &Env<R>,
    bra: &[Complex<R>],
    bd: SiteDims,
    w: &[Complex<R>],
    wd: OpDims,
    ket: &[Complex<R>],
    kd: SiteDims,
) -> Env<R> {
    debug_assert_eq!(f.a, bd.r);
    debug_assert_eq!(f.w, wd.r);
    debug_assert_eq!(f.b, kd.r);
    let d = kd.d;
    // F -> [b', a', w']
    let fp = permute_data(&f.data, &[f.a, f.w, f.b], &[2, 0, 1]);
    // [b,t,a',w']
    let t1 = matmul(ket, &fp, kd.l * d, kd.r, f.a * f.w);
    // [b,a',t,w']
    let t1p = permute_data(&t1, &[kd.l, d, f.a, f.w], &[0, 2, 1, 3]);
    // W [w,s,t,w'] -> [t,w',w,s]
    let wp = permute_data(w, &[wd.l, wd.d, wd.d, wd.r], &[2, 3, 0, 1]);
    // [b,a',w,s]
    let t2 = matmul(&t1p, &wp, kd.l * f.a, d * wd.r, wd.l * bd.d);
    // -> [s,a',w,b]
    let t2p = permute_data(&t2, &[kd.l, f.a, wd.l, bd.d], &[3, 1, 2, 0]);
    let bra_c: Vec<Complex<R>> = bra.iter().map(|z| z.conj()).collect();
    let data = matmul(&bra_c, &t2p, bd.l, bd.d * bd.r, wd.l * kd.l);
    Env { a: bd.l, w: wd.l, b: kd.l, data }
}

/// `E'[a',b'] = Σ conj(A[a,s,a']) E[a,b] B[b,s,b']`; `w` is always 1.
pub(crate) fn left_step_overlap<R: Real>(e: &Env<R>, bra: &[Complex<R>], bd: SiteDims, ket: &[Complex<R>], kd: SiteDims) -> Env<R> {
    debug_assert_eq!(e.a, bd.l);
    debug_assert_eq!(e.b, kd.l);
    let t = matmul(&e.data, ket, e.a, e.b, kd.d * kd.r);
    let data = matmul_ah(bra, &t, bd.l * bd.d, bd.r, kd.r);
    Env { a: bd.r, w: 1, b: kd.r, data }
}

/// `F[a,b] = Σ conj(A[a,s,a']) B[b,s,b'] F'[a',b']`.
pub(crate) fn right_step_overlap<R: Real>(f: &Env<R>, bra: &[Complex<R>], bd: SiteDims, ket: &[Complex<R>], kd: SiteDims) -> Env<R> {
    debug_assert_eq!(f.a, bd.r);
    debug_assert_eq!(f.b, kd.r);
    // F -> [b', a']
    let fp = permute_data(&f.data, &[f.a, f.b], &[1, 0]);
    // [b,t,a']
    let t = matmul(ket, &fp, kd.l * kd.d, kd.r, f.a);
    // -> [(t,a'), b]
    let tp = permute_data(&t, &[kd.l, kd.d, f.a], &[1, 2, 0]);
    let bra_c: Vec<Complex<R>> = bra.iter().map(|z| z.conj()).collect();
    let data = matmul(&bra_c, &tp, bd.l, bd.d * bd.r, kd.l);
    Env { a: bd.l, w: 1, b: kd.l, data }
}

/// `v[a,s,a'] = Σ L[a,b] B[b,s,b'] R[a',b']`: the local image of another
/// state in the current bra gauge.
pub(crate) fn project_site<R: Real>(l: &Env<R>, ket: &[Complex<R>], kd: SiteDims, r: &Env<R>) -> Vec<Complex<R>> {
    let t = matmul(&l.data, ket, l.a, l.b, kd.d * kd.r);
    let rp = permute_data(&r.data, &[r.a, r.b], &[1, 0]);
    matmul(&t, &rp, l.a * kd.d, kd.r, r.a)
}

/// Precomputed pieces for repeated effective-operator products at one site.
pub(crate) struct LocalOperator<'a, R: Real> {
    e: &'a Env<R>,
    /// W as `[w,t,s,w']`.
    wp: Vec<Complex<R>>,
    wd: OpDims,
    /// F as `[w',b',a']`.
    fp: Vec<Complex<R>>,
    f_a: usize,
    f_b: usize,
}

impl<'a, R: Real> LocalOperator<'a, R> {
    pub fn new(e: &'a Env<R>, w: &[Complex<R>], wd: OpDims, f: &Env<R>) -> Self {
        let wp = permute_data(w, &[wd.l, wd.d, wd.d, wd.r], &[0, 2, 1, 3]);
        let fp = permute_data(&f.data, &[f.a, f.w, f.b], &[1, 2, 0]);
        Self { e, wp, wd, fp, f_a: f.a, f_b: f.b }
    }

    /// Ket-side site dims expected by [`apply`](Self::apply).
    pub fn ket_dims(&self) -> SiteDims {
        SiteDims { l: self.e.b, d: self.wd.d, r: self.f_b }
    }

    /// `[a, s, w', b']`: operator applied with the right environment still open.
    pub fn open_right(&self, x: &[Complex<R>]) -> Vec<Complex<R>> {
        let e = self.e;
        let d = self.wd.d;
        let t1 = matmul(&e.data, x, e.a * e.w, e.b, d * self.f_b);
        let t1p = permute_data(&t1, &[e.a, e.w, d, self.f_b], &[0, 3, 1, 2]);
        let t2 = matmul(&t1p, &self.wp, e.a * self.f_b, self.wd.l * d, d * self.wd.r);
        permute_data(&t2, &[e.a, self.f_b, d, self.wd.r], &[0, 2, 3, 1])
    }

    pub fn apply(&self, x: &[Complex<R>]) -> Vec<Complex<R>> {
        let t2p = self.open_right(x);
        matmul(&t2p, &self.fp, self.e.a * self.wd.d, self.wd.r * self.f_b, self.f_a)
    }
}

/// `[a, w, b]` environment for the left-open operator: `[w, t, s, w']`
/// contracted from the right; used by subspace expansion when sweeping left.
pub(crate) fn open_left<R: Real>(
    x: &[Complex<R>],
    xd: SiteDims,
    w: &[Complex<R>],
    wd: OpDims,
    f: &Env<R>,
) -> Vec<Complex<R>> {
    // result P[(w, a), s, a'] : Σ W[w,s,t,w'] X[b,t,b'] F[a',w',b'], with
    // the left bond fused as (w, b).
    let fp = permute_data(&f.data, &[f.a, f.w, f.b], &[2, 0, 1]); // [b',a',w']
    let t1 = matmul(x, &fp, xd.l * xd.d, xd.r, f.a * f.w); // [b,t,a',w']
    let t1p = permute_data(&t1, &[xd.l, xd.d, f.a, f.w], &[0, 2, 1, 3]); // [b,a',t,w']
    let wp = permute_data(w, &[wd.l, wd.d, wd.d, wd.r], &[2, 3, 0, 1]); // [t,w',w,s]
    let t2 = matmul(&t1p, &wp, xd.l * f.a, xd.d * wd.r, wd.l * wd.d); // [b,a',w,s]
    permute_data(&t2, &[xd.l, f.a, wd.l, wd.d], &[2, 0, 3, 1]) // [w,b,s,a']
}
