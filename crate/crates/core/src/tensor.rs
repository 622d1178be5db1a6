//! Dense complex tensors with labelled axes.
//!
//! Data is stored row-major (last axis fastest). Labels are free-form strings
//! used to pair axes in [`contract`]; they never affect the memory layout.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{czero, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor<R: Real> {
    shape: Vec<usize>,
    labels: Vec<String>,
    data: Vec<Complex<R>>,
}

fn default_labels(rank: usize) -> Vec<String> {
    (0..rank).map(|i| format!("ax{i}")).collect()
}

fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

impl<R: Real> DenseTensor<R> {
    pub fn new<S: AsRef<str>>(shape: &[usize], labels: &[S], data: Vec<Complex<R>>) -> Result<Self> {
        if shape.iter().any(|&e| e == 0) {
            return Err(Error::Dimension(format!("zero extent in shape {shape:?}")));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Dimension(format!(
                "shape {shape:?} needs {n} values, got {}",
                data.len()
            )));
        }
        if labels.len() != shape.len() {
            return Err(Error::Dimension(format!(
                "{} labels for rank-{} tensor",
                labels.len(),
                shape.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            labels: labels.iter().map(|s| s.as_ref().to_string()).collect(),
            data,
        })
    }

    /// Tensor with default labels `ax0, ax1, ...`.
    pub fn from_data(shape: &[usize], data: Vec<Complex<R>>) -> Result<Self> {
        Self::new(shape, &default_labels(shape.len()), data)
    }

    pub fn zeros<S: AsRef<str>>(shape: &[usize], labels: &[S]) -> Self {
        let n = shape.iter().product();
        Self::new(shape, labels, vec![czero(); n]).expect("valid zero tensor")
    }

    pub fn from_fn<S: AsRef<str>>(
        shape: &[usize],
        labels: &[S],
        mut f: impl FnMut(&[usize]) -> Complex<R>,
    ) -> Self {
        let n: usize = shape.iter().product();
        let mut idx = vec![0usize; shape.len()];
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f(&idx));
            for ax in (0..shape.len()).rev() {
                idx[ax] += 1;
                if idx[ax] < shape[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
        Self::new(shape, labels, data).expect("valid tensor")
    }

    /// Rank-0 tensor holding one value.
    pub fn scalar(z: Complex<R>) -> Self {
        Self { shape: vec![], labels: vec![], data: vec![z] }
    }

    pub(crate) fn from_raw(shape: Vec<usize>, labels: Vec<String>, data: Vec<Complex<R>>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        debug_assert_eq!(shape.len(), labels.len());
        Self { shape, labels, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn data(&self) -> &[Complex<R>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex<R>] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex<R>> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn axis(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &e)| {
            debug_assert!(i < e);
            acc * e + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> Complex<R> {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], z: Complex<R>) {
        let o = self.offset(idx);
        self.data[o] = z;
    }

    pub fn with_labels<S: AsRef<str>>(mut self, labels: &[S]) -> Result<Self> {
        if labels.len() != self.rank() {
            return Err(Error::Dimension(format!(
                "{} labels for rank-{} tensor",
                labels.len(),
                self.rank()
            )));
        }
        self.labels = labels.iter().map(|s| s.as_ref().to_string()).collect();
        Ok(self)
    }

    pub fn relabel(&mut self, from: &str, to: &str) -> Result<()> {
        let ax = self
            .axis(from)
            .ok_or_else(|| Error::Dimension(format!("no axis labelled {from:?}")))?;
        self.labels[ax] = to.to_string();
        Ok(())
    }

    /// Reorders axes; `order[k]` is the old axis that becomes axis `k`.
    pub fn permute(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.rank(), "permutation length");
        let new_shape: Vec<usize> = order.iter().map(|&o| self.shape[o]).collect();
        let new_labels: Vec<String> = order.iter().map(|&o| self.labels[o].clone()).collect();
        if order.iter().enumerate().all(|(i, &o)| i == o) {
            return Self::from_raw(new_shape, new_labels, self.data.clone());
        }
        let data = permute_data(&self.data, &self.shape, order);
        Self::from_raw(new_shape, new_labels, data)
    }

    pub fn permute_labels(&self, labels: &[&str]) -> Result<Self> {
        let order = labels
            .iter()
            .map(|l| self.axis(l).ok_or_else(|| Error::Dimension(format!("no axis labelled {l:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.permute(&order))
    }

    /// Row-major reshape; the linearized data is untouched.
    pub fn reshape<S: AsRef<str>>(&self, shape: &[usize], labels: &[S]) -> Result<Self> {
        Self::new(shape, labels, self.data.clone())
    }

    pub fn conj(&self) -> Self {
        Self::from_raw(
            self.shape.clone(),
            self.labels.clone(),
            self.data.iter().map(|z| z.conj()).collect(),
        )
    }

    pub fn scale(&self, s: Complex<R>) -> Self {
        Self::from_raw(
            self.shape.clone(),
            self.labels.clone(),
            self.data.iter().map(|z| *z * s).collect(),
        )
    }

    /// `self + s * other`; shapes must agree.
    pub fn axpy(&self, s: Complex<R>, other: &Self) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::Dimension(format!("{:?} vs {:?}", self.shape, other.shape)));
        }
        Ok(Self::from_raw(
            self.shape.clone(),
            self.labels.clone(),
            self.data.iter().zip(&other.data).map(|(a, b)| *a + *b * s).collect(),
        ))
    }

    pub fn norm_sqr(&self) -> R {
        self.data.iter().fold(R::zero(), |acc, z| acc + z.norm_sqr())
    }

    pub fn norm(&self) -> R {
        self.norm_sqr().sqrt()
    }

    /// `Σ conj(self) * other` over the flat data.
    pub fn inner(&self, other: &Self) -> Result<Complex<R>> {
        if self.shape != other.shape {
            return Err(Error::Dimension(format!("{:?} vs {:?}", self.shape, other.shape)));
        }
        Ok(dotc(&self.data, &other.data))
    }

    /// Permutes `row_axes` to the front and flattens into a row-major
    /// `(rows, cols)` matrix.
    pub fn to_matrix(&self, row_axes: &[usize]) -> (usize, usize, Vec<Complex<R>>) {
        let mut order: Vec<usize> = row_axes.to_vec();
        order.extend((0..self.rank()).filter(|a| !row_axes.contains(a)));
        let p = self.permute(&order);
        let rows: usize = row_axes.iter().map(|&a| self.shape[a]).product();
        let cols = p.len() / rows.max(1);
        (rows, cols, p.data)
    }
}

pub(crate) fn permute_data<R: Real>(data: &[Complex<R>], shape: &[usize], order: &[usize]) -> Vec<Complex<R>> {
    let rank = shape.len();
    let old_strides = strides(shape);
    let new_shape: Vec<usize> = order.iter().map(|&o| shape[o]).collect();
    let src_strides: Vec<usize> = order.iter().map(|&o| old_strides[o]).collect();
    let n = data.len();
    let mut out = Vec::with_capacity(n);
    if rank == 0 {
        out.extend_from_slice(data);
        return out;
    }
    // innermost axis handled in a tight loop
    let last = rank - 1;
    let inner = new_shape[last];
    let inner_stride = src_strides[last];
    let mut idx = vec![0usize; rank];
    let outer: usize = n / inner;
    for _ in 0..outer {
        let base: usize = (0..last).map(|a| idx[a] * src_strides[a]).sum();
        for i in 0..inner {
            out.push(data[base + i * inner_stride]);
        }
        for ax in (0..last).rev() {
            idx[ax] += 1;
            if idx[ax] < new_shape[ax] {
                break;
            }
            idx[ax] = 0;
        }
    }
    out
}

#[inline]
pub(crate) fn dotc<R: Real>(a: &[Complex<R>], b: &[Complex<R>]) -> Complex<R> {
    a.iter().zip(b).fold(czero(), |acc, (x, y)| acc + x.conj() * *y)
}

/// Row-major `C = A (m×k) · B (k×n)`.
pub(crate) fn matmul<R: Real>(a: &[Complex<R>], b: &[Complex<R>], m: usize, k: usize, n: usize) -> Vec<Complex<R>> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    let mut c = vec![czero::<R>(); m * n];
    let zero = R::zero();
    for i in 0..m {
        let crow = &mut c[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip.re == zero && aip.im == zero {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (cv, bv) in crow.iter_mut().zip(brow) {
                *cv += aip * *bv;
            }
        }
    }
    c
}

/// Row-major `C = A^H · B` where `A` is stored `k×m`.
pub(crate) fn matmul_ah<R: Real>(a: &[Complex<R>], b: &[Complex<R>], k: usize, m: usize, n: usize) -> Vec<Complex<R>> {
    debug_assert_eq!(a.len(), k * m);
    debug_assert_eq!(b.len(), k * n);
    let mut c = vec![czero::<R>(); m * n];
    for p in 0..k {
        let brow = &b[p * n..(p + 1) * n];
        for i in 0..m {
            let aip = a[p * m + i].conj();
            if aip.re == R::zero() && aip.im == R::zero() {
                continue;
            }
            let crow = &mut c[i * n..(i + 1) * n];
            for (cv, bv) in crow.iter_mut().zip(brow) {
                *cv += aip * *bv;
            }
        }
    }
    c
}

/// Sums over paired axes of `a` and `b`. Each pair is `(label in a, label in b)`.
/// Remaining axes are ordered: free axes of `a` then free axes of `b`.
pub fn contract<R: Real>(a: &DenseTensor<R>, b: &DenseTensor<R>, pairs: &[(&str, &str)]) -> Result<DenseTensor<R>> {
    let mut a_ax = Vec::with_capacity(pairs.len());
    let mut b_ax = Vec::with_capacity(pairs.len());
    for (la, lb) in pairs {
        let ia = a.axis(la).ok_or_else(|| Error::Dimension(format!("left tensor has no axis {la:?}")))?;
        let ib = b.axis(lb).ok_or_else(|| Error::Dimension(format!("right tensor has no axis {lb:?}")))?;
        if a.shape[ia] != b.shape[ib] {
            return Err(Error::Dimension(format!(
                "extent mismatch on pair ({la}, {lb}): {} vs {}",
                a.shape[ia], b.shape[ib]
            )));
        }
        if a_ax.contains(&ia) || b_ax.contains(&ib) {
            return Err(Error::Dimension(format!("axis paired twice in ({la}, {lb})")));
        }
        a_ax.push(ia);
        b_ax.push(ib);
    }
    let a_free: Vec<usize> = (0..a.rank()).filter(|x| !a_ax.contains(x)).collect();
    let b_free: Vec<usize> = (0..b.rank()).filter(|x| !b_ax.contains(x)).collect();

    let mut a_order = a_free.clone();
    a_order.extend(&a_ax);
    let mut b_order = b_ax.clone();
    b_order.extend(&b_free);
    let ap = a.permute(&a_order);
    let bp = b.permute(&b_order);

    let m: usize = a_free.iter().map(|&x| a.shape[x]).product();
    let k: usize = a_ax.iter().map(|&x| a.shape[x]).product();
    let n: usize = b_free.iter().map(|&x| b.shape[x]).product();
    let data = matmul(&ap.data, &bp.data, m, k, n);

    let mut shape: Vec<usize> = a_free.iter().map(|&x| a.shape[x]).collect();
    shape.extend(b_free.iter().map(|&x| b.shape[x]));
    let mut labels: Vec<String> = a_free.iter().map(|&x| a.labels[x].clone()).collect();
    labels.extend(b_free.iter().map(|&x| b.labels[x].clone()));
    Ok(DenseTensor::from_raw(shape, labels, data))
}
