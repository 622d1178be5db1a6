//! Variational approximation of a linear combination `Σ_k c_k T_k |ψ_k⟩` by
//! a single MPS of bounded bond dimension.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::env::{left_step_overlap, project_site, right_step_overlap, Env};
use crate::error::{Error, Result};
use crate::linalg::TruncationSpec;
use crate::mpo::MpOperator;
use crate::mps::{labels, overlap, MpsState};
use crate::scalar::{czero, Real};
use crate::tensor::DenseTensor;

/// One term `coeff · op |state⟩`; `op = None` is the identity.
#[derive(Clone, Copy, Debug)]
pub struct FitTarget<'a, R: Real> {
    pub coeff: Complex<R>,
    pub op: Option<&'a MpOperator<R>>,
    pub state: &'a MpsState<R>,
}

impl<'a, R: Real> FitTarget<'a, R> {
    pub fn state(coeff: Complex<R>, state: &'a MpsState<R>) -> Self {
        Self { coeff, op: None, state }
    }

    pub fn applied(coeff: Complex<R>, op: &'a MpOperator<R>, state: &'a MpsState<R>) -> Self {
        Self { coeff, op: Some(op), state }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub spec: TruncationSpec,
    /// Maximum number of left-right sweep pairs after the initial compression.
    pub sweeps: usize,
    /// Stop once the residual changes by less than `tol · ‖target‖²` in a sweep.
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { spec: TruncationSpec::default(), sweeps: 4, tol: 1e-12 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// `‖target‖²`.
    pub target_norm_sqr: f64,
    /// `‖target − χ‖²` after the initial compression and after each sweep.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

impl FitReport {
    pub fn residual(&self) -> f64 {
        *self.residuals.last().unwrap_or(&0.0)
    }

    /// Residual relative to the target norm squared.
    pub fn relative_residual(&self) -> f64 {
        if self.target_norm_sqr > 0.0 {
            self.residual() / self.target_norm_sqr
        } else {
            0.0
        }
    }

    /// Turns a sweep-cap exit into a convergence error.
    pub fn require_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NotConverged { iterations: self.residuals.len().saturating_sub(1), residual: self.residual() })
        }
    }
}

/// Fitted state plus diagnostics.
#[derive(Clone, Debug)]
pub struct FitResult<R: Real> {
    pub state: MpsState<R>,
    pub report: FitReport,
}

/// Exact direct sum `Σ_k φ_k` of states on one lattice.
pub fn direct_sum<R: Real>(states: &[MpsState<R>]) -> Result<MpsState<R>> {
    let first = states.first().ok_or_else(|| Error::InvalidArgument("empty sum".into()))?;
    for s in states {
        first.check_compatible(s)?;
    }
    let n = first.len();
    let specs = first.site_specs().to_vec();
    let mut sites = Vec::with_capacity(n);
    for i in 0..n {
        let d = specs[i].phys_dim;
        let lefts: Vec<usize> = states.iter().map(|s| if i == 0 { 1 } else { s.dims(i).l }).collect();
        let rights: Vec<usize> = states.iter().map(|s| if i + 1 == n { 1 } else { s.dims(i).r }).collect();
        let tl: usize = if i == 0 { 1 } else { lefts.iter().sum() };
        let tr: usize = if i + 1 == n { 1 } else { rights.iter().sum() };
        let mut data = vec![czero(); tl * d * tr];
        let (mut ol, mut or) = (0, 0);
        for (k, s) in states.iter().enumerate() {
            let src = s.site(i).data();
            let (sl, sr) = (lefts[k], rights[k]);
            for a in 0..sl {
                for p in 0..d {
                    for b in 0..sr {
                        data[((ol + a) * d + p) * tr + or + b] += src[(a * d + p) * sr + b];
                    }
                }
            }
            if i > 0 {
                ol += sl;
            }
            if i + 1 < n {
                or += sr;
            }
        }
        sites.push(DenseTensor::from_raw(vec![tl, d, tr], labels(), data));
    }
    Ok(MpsState::from_parts(sites, specs, None))
}

/// Minimizes `‖χ − Σ_k c_k T_k|ψ_k⟩‖²` over MPS `χ` with bonds set by
/// `opts.spec`.
///
/// The target terms are summed and compressed one at a time, and the result
/// refined with fixed-bond single-site sweeps; each refinement step solves
/// its local problem exactly, so the recorded residuals never increase.
/// A target whose norm vanishes relative to its terms is a `ZeroNorm` error.
pub fn variational_fit<R: Real>(targets: &[FitTarget<'_, R>], opts: &FitOptions) -> Result<FitResult<R>> {
    opts.spec.validate()?;
    if targets.is_empty() {
        return Err(Error::InvalidArgument("no fit targets".into()));
    }
    let mut images = Vec::with_capacity(targets.len());
    for t in targets {
        let img = match t.op {
            Some(op) => op.apply(t.state)?,
            None => t.state.clone(),
        };
        images.push(img.scale(t.coeff));
    }
    let specs = images[0].site_specs().to_vec();
    for img in &images {
        if img.site_specs() != specs.as_slice() {
            return Err(Error::Dimension("fit targets live on different lattices".into()));
        }
    }

    let mut tnorm = 0.0f64;
    let mut scale = 0.0f64;
    for (k, a) in images.iter().enumerate() {
        let akk = overlap(a, a)?.re.as_f64();
        tnorm += akk;
        scale += akk.sqrt();
        for b in &images[k + 1..] {
            tnorm += 2.0 * overlap(a, b)?.re.as_f64();
        }
    }
    let floor = (R::eps().as_f64() * 1e3) * scale * scale;
    if !(tnorm > floor) {
        return Err(Error::ZeroNorm { norm: tnorm.max(0.0).sqrt() });
    }

    // Running sum, compressed after every term: exact when the bond cap
    // allows, and far cheaper than compressing the full direct sum.
    let (mut chi, _) = images[0].compress(&opts.spec)?;
    for img in &images[1..] {
        chi = direct_sum(&[chi, img.clone()])?.compress(&opts.spec)?.0;
    }
    let n = chi.len();

    // Environments against every image. left[k][i] covers sites < i,
    // right[k][i] covers sites >= i.
    let kk = images.len();
    let mut left: Vec<Vec<Env<R>>> = vec![vec![Env::overlap_boundary(); n + 1]; kk];
    let mut right: Vec<Vec<Env<R>>> = vec![vec![Env::overlap_boundary(); n + 1]; kk];
    for k in 0..kk {
        for i in (1..n).rev() {
            right[k][i] = right_step_overlap(&right[k][i + 1], chi.site(i).data(), chi.dims(i), images[k].site(i).data(), images[k].dims(i));
        }
    }
    let local = |chi: &MpsState<R>, left: &[Vec<Env<R>>], right: &[Vec<Env<R>>], i: usize| -> Vec<Complex<R>> {
        let mut acc: Option<Vec<Complex<R>>> = None;
        for k in 0..kk {
            let v = project_site(&left[k][i], images[k].site(i).data(), images[k].dims(i), &right[k][i + 1]);
            match acc.as_mut() {
                None => acc = Some(v),
                Some(a) => a.iter_mut().zip(&v).for_each(|(x, y)| *x += *y),
            }
        }
        debug_assert_eq!(acc.as_ref().map(|a| a.len()), Some(chi.site(i).len()));
        acc.unwrap()
    };
    let norm_of = |v: &[Complex<R>]| v.iter().map(|z| z.norm_sqr().as_f64()).sum::<f64>();

    let mut cross = 0.0;
    for img in &images {
        cross += overlap(&chi, img)?.re.as_f64();
    }
    let mut residuals = vec![(tnorm - 2.0 * cross + chi.norm_sqr().as_f64()).max(0.0)];
    let mut converged = false;
    for _ in 0..opts.sweeps {
        let mut last = 0.0;
        for i in 0..n {
            let v = local(&chi, &left, &right, i);
            last = norm_of(&v);
            let dims = chi.dims(i);
            chi.set_site(i, DenseTensor::from_raw(vec![dims.l, dims.d, dims.r], labels(), v));
            chi.set_center(Some(i));
            if i + 1 < n {
                chi.left_orthonormalize(i);
                chi.set_center(Some(i + 1));
                for k in 0..kk {
                    left[k][i + 1] = left_step_overlap(&left[k][i], chi.site(i).data(), chi.dims(i), images[k].site(i).data(), images[k].dims(i));
                }
            }
        }
        for i in (0..n).rev() {
            let v = local(&chi, &left, &right, i);
            last = norm_of(&v);
            let dims = chi.dims(i);
            chi.set_site(i, DenseTensor::from_raw(vec![dims.l, dims.d, dims.r], labels(), v));
            chi.set_center(Some(i));
            if i > 0 {
                chi.right_orthonormalize(i);
                chi.set_center(Some(i - 1));
                for k in 0..kk {
                    right[k][i] = right_step_overlap(&right[k][i + 1], chi.site(i).data(), chi.dims(i), images[k].site(i).data(), images[k].dims(i));
                }
            }
        }
        let res = (tnorm - last).max(0.0);
        let prev = *residuals.last().unwrap();
        residuals.push(res);
        if (prev - res).abs() <= opts.tol * tnorm {
            converged = true;
            break;
        }
    }
    if opts.sweeps == 0 {
        converged = true;
    }
    Ok(FitResult { state: chi, report: FitReport { target_norm_sqr: tnorm, residuals, converged } })
}

/// Convenience: fitted `Σ_k coeffs[k] · states[k]`.
pub fn fit_sum<R: Real>(coeffs: &[Complex<R>], states: &[&MpsState<R>], opts: &FitOptions) -> Result<FitResult<R>> {
    let targets: Vec<FitTarget<'_, R>> = coeffs.iter().zip(states).map(|(c, s)| FitTarget::state(*c, s)).collect();
    variational_fit(&targets, opts)
}
