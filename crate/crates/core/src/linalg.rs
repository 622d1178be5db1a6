//! Matrix decompositions on row-major complex buffers and labelled tensors:
//! truncated SVD, thin QR, Hermitian eigensolvers.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cabs, cone, cre, czero, Real};
use crate::tensor::{dotc, DenseTensor};

/// Bond truncation policy. All three criteria are applied and the one
/// keeping the fewest singular values wins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationSpec {
    /// Hard cap on the number of kept singular values.
    pub max_rank: usize,
    /// Singular values below `rel_tol * s_max` are dropped.
    pub rel_tol: f64,
    /// Discarded squared-singular-value mass allowed, relative to the total.
    pub keep_weight: f64,
}

impl TruncationSpec {
    pub fn new(max_rank: usize, rel_tol: f64, keep_weight: f64) -> Result<Self> {
        let spec = Self { max_rank, rel_tol, keep_weight };
        spec.validate()?;
        Ok(spec)
    }

    /// Only the rank cap; nothing else is discarded.
    pub fn rank(max_rank: usize) -> Self {
        Self { max_rank, rel_tol: 0.0, keep_weight: 0.0 }
    }

    /// No truncation at all beyond exact zeros.
    pub fn exact() -> Self {
        Self::rank(usize::MAX)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_rank < 1 {
            return Err(Error::InvalidArgument("max_rank must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.rel_tol) {
            return Err(Error::InvalidArgument(format!("rel_tol {} outside [0,1)", self.rel_tol)));
        }
        if !(self.keep_weight >= 0.0) {
            return Err(Error::InvalidArgument(format!("keep_weight {} negative", self.keep_weight)));
        }
        Ok(())
    }

    /// Number of values to keep from a nonincreasing spectrum.
    pub fn kept<R: Real>(&self, s: &[R]) -> usize {
        if s.is_empty() {
            return 0;
        }
        let smax = s[0].as_f64();
        let mut k = s.len().min(self.max_rank);
        if smax > 0.0 {
            let k_rel = s.iter().take_while(|x| x.as_f64() > self.rel_tol * smax).count();
            k = k.min(k_rel);
        }
        if self.keep_weight > 0.0 {
            let total: f64 = s.iter().map(|x| x.as_f64().powi(2)).sum();
            let mut tail = 0.0;
            let mut k_w = s.len();
            for i in (0..s.len()).rev() {
                tail += s[i].as_f64().powi(2);
                if tail > self.keep_weight * total {
                    break;
                }
                k_w = i;
            }
            k = k.min(k_w);
        }
        k.max(1)
    }
}

impl Default for TruncationSpec {
    fn default() -> Self {
        Self { max_rank: 128, rel_tol: 1e-13, keep_weight: 0.0 }
    }
}

pub(crate) fn to_dmatrix<R: Real>(data: &[Complex<R>], rows: usize, cols: usize) -> DMatrix<Complex<R>> {
    DMatrix::from_row_slice(rows, cols, data)
}

pub(crate) fn from_dmatrix<R: Real>(m: &DMatrix<Complex<R>>) -> Vec<Complex<R>> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Full SVD of a row-major matrix with singular values sorted descending.
/// Returns `(U: rows×r, s, Vh: r×cols)`, `r = min(rows, cols)`.
pub fn svd_matrix<R: Real>(data: &[Complex<R>], rows: usize, cols: usize) -> Result<(Vec<Complex<R>>, Vec<R>, Vec<Complex<R>>)> {
    let m = to_dmatrix(data, rows, cols);
    let svd = m
        .try_svd(true, true, R::eps() * R::lit(4.0), 0)
        .ok_or_else(|| Error::Backend(format!("svd failed on {rows}x{cols} matrix")))?;
    let u = svd.u.ok_or_else(|| Error::Backend("svd returned no U".into()))?;
    let vt = svd.v_t.ok_or_else(|| Error::Backend("svd returned no V^H".into()))?;
    let r = svd.singular_values.len();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let s: Vec<R> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut uo = Vec::with_capacity(rows * r);
    for i in 0..rows {
        for &j in &order {
            uo.push(u[(i, j)]);
        }
    }
    let mut vo = Vec::with_capacity(r * cols);
    for &i in &order {
        for j in 0..cols {
            vo.push(vt[(i, j)]);
        }
    }
    Ok((uo, s, vo))
}

/// Truncated SVD on a row-major matrix. Returns `(U, s, Vh, discarded_weight)`.
#[allow(clippy::type_complexity)]
pub fn svd_truncate_matrix<R: Real>(
    data: &[Complex<R>],
    rows: usize,
    cols: usize,
    spec: &TruncationSpec,
) -> Result<(Vec<Complex<R>>, Vec<R>, Vec<Complex<R>>, R)> {
    let (u, s, vh) = svd_matrix(data, rows, cols)?;
    let r = s.len();
    let k = spec.kept(&s);
    let discarded = s[k..].iter().fold(R::zero(), |acc, x| acc + *x * *x);
    let mut uk = Vec::with_capacity(rows * k);
    for i in 0..rows {
        uk.extend_from_slice(&u[i * r..i * r + k]);
    }
    let vk = vh[..k * cols].to_vec();
    Ok((uk, s[..k].to_vec(), vk, discarded))
}

/// Result of [`svd_truncate`].
#[derive(Clone, Debug)]
pub struct SvdParts<R: Real> {
    /// Left axes followed by a `"bond"` axis.
    pub u: DenseTensor<R>,
    pub s: Vec<R>,
    /// A `"bond"` axis followed by the remaining axes.
    pub v: DenseTensor<R>,
    pub discarded_weight: R,
}

/// Splits `t` between `left_axes` and the remaining axes.
pub fn svd_truncate<R: Real>(t: &DenseTensor<R>, left_axes: &[&str], spec: &TruncationSpec) -> Result<SvdParts<R>> {
    spec.validate()?;
    if left_axes.is_empty() || left_axes.len() >= t.rank() {
        return Err(Error::InvalidArgument("left_axes must be a nonempty proper subset".into()));
    }
    let left: Vec<usize> = left_axes
        .iter()
        .map(|l| t.axis(l).ok_or_else(|| Error::Dimension(format!("no axis {l:?}"))))
        .collect::<Result<_>>()?;
    let right: Vec<usize> = (0..t.rank()).filter(|a| !left.contains(a)).collect();
    let (rows, cols, mat) = t.to_matrix(&left);
    let (u, s, vh, disc) = svd_truncate_matrix(&mat, rows, cols, spec)?;
    let k = s.len();

    let mut ushape: Vec<usize> = left.iter().map(|&a| t.shape()[a]).collect();
    ushape.push(k);
    let mut ulabels: Vec<String> = left.iter().map(|&a| t.labels()[a].clone()).collect();
    ulabels.push("bond".into());
    let mut vshape = vec![k];
    vshape.extend(right.iter().map(|&a| t.shape()[a]));
    let mut vlabels = vec!["bond".to_string()];
    vlabels.extend(right.iter().map(|&a| t.labels()[a].clone()));

    Ok(SvdParts {
        u: DenseTensor::new(&ushape, &ulabels, u)?,
        s,
        v: DenseTensor::new(&vshape, &vlabels, vh)?,
        discarded_weight: disc,
    })
}

/// Thin QR of a row-major `rows×cols` matrix, with `R` having a real
/// nonnegative diagonal. Returns `(Q: rows×r, R: r×cols)`.
pub fn qr_matrix<R: Real>(data: &[Complex<R>], rows: usize, cols: usize) -> (Vec<Complex<R>>, Vec<Complex<R>>) {
    let m = to_dmatrix(data, rows, cols);
    let qr = m.qr();
    let mut q = qr.q();
    let mut r = qr.r();
    let k = rows.min(cols);
    for i in 0..k {
        let d = r[(i, i)];
        let mag = cabs(d);
        if mag > R::zero() {
            let ph = d / cre(mag);
            // Q_i *= ph, R_i /= ph keeps Q R unchanged.
            for row in 0..rows {
                q[(row, i)] *= ph;
            }
            let phc = ph.conj();
            for col in 0..cols {
                r[(i, col)] *= phc;
            }
        }
    }
    (from_dmatrix(&q), from_dmatrix(&r))
}

/// Eigen-decomposition of a dense Hermitian row-major matrix.
/// Eigenvalues ascending; eigenvectors are the columns of the returned
/// row-major `n×n` matrix.
pub fn hermitian_eig<R: Real>(data: &[Complex<R>], n: usize) -> (Vec<R>, Vec<Complex<R>>) {
    let mut m = to_dmatrix(data, n, n);
    // symmetrize against rounding
    for i in 0..n {
        for j in 0..i {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * cre(R::lit(0.5));
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
        m[(i, i)] = cre(m[(i, i)].re);
    }
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = Vec::with_capacity(n * n);
    for i in 0..n {
        for &j in &order {
            vecs.push(eig.eigenvectors[(i, j)]);
        }
    }
    (vals, vecs)
}

/// `f(H)` for Hermitian `H` via its spectral decomposition.
pub fn hermitian_function<R: Real>(data: &[Complex<R>], n: usize, f: impl Fn(R) -> Complex<R>) -> Vec<Complex<R>> {
    let (vals, vecs) = hermitian_eig(data, n);
    let fv: Vec<Complex<R>> = vals.iter().map(|&x| f(x)).collect();
    let mut out = vec![czero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = czero();
            for k in 0..n {
                s += vecs[i * n + k] * fv[k] * vecs[j * n + k].conj();
            }
            out[i * n + j] = s;
        }
    }
    out
}

/// Options for [`lowest_eigenpairs_with`].
#[derive(Clone, Debug)]
pub struct EigOptions<'a, R: Real> {
    pub tol: R,
    /// Starting vector; random if absent.
    pub guess: Option<&'a [Complex<R>]>,
    pub max_restarts: usize,
    /// Krylov space size before a restart (0 picks a default).
    pub krylov_dim: usize,
    /// Problems of this dimension or below are diagonalized densely.
    pub dense_cutoff: usize,
    pub seed: u64,
}

impl<R: Real> EigOptions<'_, R> {
    pub fn new(tol: R) -> Self {
        Self { tol, guess: None, max_restarts: 300, krylov_dim: 0, dense_cutoff: 128, seed: 0x5eed }
    }
}

/// Eigenpairs returned by the iterative solver.
#[derive(Clone, Debug)]
pub struct EigenPairs<R: Real> {
    pub values: Vec<R>,
    pub vectors: Vec<Vec<Complex<R>>>,
    /// Largest `‖Hv − λv‖` over the returned pairs.
    pub residual: R,
}

/// The `k` lowest eigenpairs of a Hermitian map given as a callback
/// `apply(x, y)` computing `y = H x`.
pub fn lowest_eigenpairs<R: Real>(
    apply: impl FnMut(&[Complex<R>], &mut [Complex<R>]),
    n: usize,
    k: usize,
    tol: R,
) -> Result<EigenPairs<R>> {
    lowest_eigenpairs_with(apply, n, k, &EigOptions::new(tol))
}

fn normalize<R: Real>(v: &mut [Complex<R>]) -> R {
    let nrm = dotc(v, v).re.sqrt();
    if nrm > R::zero() {
        let inv = cre(R::one() / nrm);
        v.iter_mut().for_each(|x| *x *= inv);
    }
    nrm
}

/// Orthogonalizes `w` against `basis` twice (classical Gram-Schmidt).
fn orthogonalize<R: Real>(w: &mut [Complex<R>], basis: &[Vec<Complex<R>>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dotc(b, w);
            w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * *y);
        }
    }
}

pub fn lowest_eigenpairs_with<R: Real>(
    mut apply: impl FnMut(&[Complex<R>], &mut [Complex<R>]),
    n: usize,
    k: usize,
    opts: &EigOptions<'_, R>,
) -> Result<EigenPairs<R>> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("requested {k} eigenpairs of a dimension-{n} map")));
    }
    if n <= opts.dense_cutoff {
        return dense_lowest(&mut apply, n, k);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let random_vec = |rng: &mut ChaCha8Rng| -> Vec<Complex<R>> {
        (0..n)
            .map(|_| Complex::new(R::lit(rng.random::<f64>() - 0.5), R::lit(rng.random::<f64>() - 0.5)))
            .collect()
    };
    let m_max = if opts.krylov_dim > 0 { opts.krylov_dim } else { (2 * k + 30).max(40) }.min(n);
    let keep = (k + 4).min(m_max - 1).max(k);

    let mut basis: Vec<Vec<Complex<R>>> = Vec::with_capacity(m_max);
    let mut images: Vec<Vec<Complex<R>>> = Vec::with_capacity(m_max);
    let mut next: Vec<Complex<R>> = match opts.guess {
        Some(g) if g.len() == n && dotc(g, g).re > R::zero() => g.to_vec(),
        _ => random_vec(&mut rng),
    };
    normalize(&mut next);

    let mut best_residual = R::max_value().unwrap_or(R::lit(f64::MAX));
    for restart in 0..=opts.max_restarts {
        // extend the basis to m_max vectors
        let mut pending = Some(next.clone());
        while basis.len() < m_max {
            let mut v = match pending.take() {
                Some(v) => v,
                None => {
                    let last = images.last().expect("nonempty basis").clone();
                    last
                }
            };
            orthogonalize(&mut v, &basis);
            let mut nrm = normalize(&mut v);
            let mut tries = 0;
            while nrm < R::lit(1e-10) && tries < 5 {
                v = random_vec(&mut rng);
                orthogonalize(&mut v, &basis);
                nrm = normalize(&mut v);
                tries += 1;
            }
            if nrm < R::lit(1e-10) {
                break;
            }
            let mut hv = vec![czero(); n];
            apply(&v, &mut hv);
            basis.push(v);
            images.push(hv);
        }
        let m = basis.len();
        // projected matrix
        let mut t = vec![czero::<R>(); m * m];
        for i in 0..m {
            for j in i..m {
                let x = dotc(&basis[i], &images[j]);
                t[i * m + j] = x;
                t[j * m + i] = x.conj();
            }
        }
        let (theta, s) = hermitian_eig(&t, m);
        let scale = theta
            .iter()
            .fold(R::lit(1e-300), |acc, x| if x.abs() > acc { x.abs() } else { acc });
        let p = keep.min(m);
        let mut ritz = Vec::with_capacity(p);
        let mut ritz_img = Vec::with_capacity(p);
        let mut worst = R::zero();
        let mut first_unconverged: Option<Vec<Complex<R>>> = None;
        for c in 0..p {
            let mut y = vec![czero::<R>(); n];
            let mut hy = vec![czero::<R>(); n];
            for (j, (b, hb)) in basis.iter().zip(&images).enumerate() {
                let coef = s[j * m + c];
                y.iter_mut().zip(b).for_each(|(a, x)| *a += coef * *x);
                hy.iter_mut().zip(hb).for_each(|(a, x)| *a += coef * *x);
            }
            if c < k {
                let r: Vec<Complex<R>> = hy.iter().zip(&y).map(|(a, b)| *a - *b * cre(theta[c])).collect();
                let rn = dotc(&r, &r).re.sqrt();
                if rn > worst {
                    worst = rn;
                }
                if rn > opts.tol * scale && first_unconverged.is_none() {
                    first_unconverged = Some(r);
                }
            }
            ritz.push(y);
            ritz_img.push(hy);
        }
        if worst < best_residual {
            best_residual = worst;
        }
        if first_unconverged.is_none() || m == n {
            let mut vectors = ritz;
            vectors.truncate(k);
            for v in vectors.iter_mut() {
                normalize(v);
            }
            return Ok(EigenPairs { values: theta[..k].to_vec(), vectors, residual: worst });
        }
        if restart == opts.max_restarts {
            break;
        }
        basis = ritz;
        images = ritz_img;
        next = first_unconverged.expect("checked above");
    }
    Err(Error::NotConverged { iterations: opts.max_restarts, residual: best_residual.as_f64() })
}

fn dense_lowest<R: Real>(
    apply: &mut impl FnMut(&[Complex<R>], &mut [Complex<R>]),
    n: usize,
    k: usize,
) -> Result<EigenPairs<R>> {
    let mut mat = vec![czero::<R>(); n * n];
    let mut e = vec![czero::<R>(); n];
    let mut col = vec![czero::<R>(); n];
    for j in 0..n {
        e.iter_mut().for_each(|x| *x = czero());
        e[j] = cone();
        col.iter_mut().for_each(|x| *x = czero());
        apply(&e, &mut col);
        for i in 0..n {
            mat[i * n + j] = col[i];
        }
    }
    let (vals, vecs) = hermitian_eig(&mat, n);
    let vectors: Vec<Vec<Complex<R>>> = (0..k).map(|c| (0..n).map(|i| vecs[i * n + c]).collect()).collect();
    let mut residual = R::zero();
    for (c, v) in vectors.iter().enumerate() {
        apply(v, &mut col);
        let r = col
            .iter()
            .zip(v)
            .fold(R::zero(), |acc, (a, b)| acc + (*a - *b * cre(vals[c])).norm_sqr())
            .sqrt();
        if r > residual {
            residual = r;
        }
    }
    Ok(EigenPairs { values: vals[..k].to_vec(), vectors, residual })
}
