//! Dense reference matrices built from Kronecker products, independent of
//! the library's MPO and ED code paths.
#![allow(dead_code)]

use dicke_mps::model::ModelParams;
use dicke_mps::mps::MpsState;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type M = DMatrix<Complex64>;

pub fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn eye(n: usize) -> M {
    M::identity(n, n)
}

pub fn sx() -> M {
    M::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
}

pub fn sy() -> M {
    M::from_row_slice(2, 2, &[c(0.0), Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), c(0.0)])
}

pub fn sz() -> M {
    M::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)])
}

pub fn annihilation(d: usize) -> M {
    let mut a = M::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = c((n as f64).sqrt());
    }
    a
}

pub fn number(d: usize) -> M {
    let mut a = M::zeros(d, d);
    for n in 0..d {
        a[(n, n)] = c(n as f64);
    }
    a
}

pub fn kron(a: &M, b: &M) -> M {
    a.kronecker(b)
}

/// `ops[k]` placed on site `k`, identities elsewhere, site 0 most significant.
pub fn embed(dims: &[usize], placed: &[(usize, M)]) -> M {
    let mut out = M::identity(1, 1);
    for (k, &d) in dims.iter().enumerate() {
        let f = placed.iter().find(|(s, _)| *s == k).map(|(_, m)| m.clone()).unwrap_or_else(|| eye(d));
        out = kron(&out, &f);
    }
    out
}

pub fn dims(p: &ModelParams) -> Vec<usize> {
    p.site_specs().iter().map(|s| s.phys_dim).collect()
}

pub fn spin_sites(p: &ModelParams) -> Vec<usize> {
    p.spin_sites()
}

/// `ω a†a − h Σσ_z − J Σσ_yσ_y + (g/√L) Σσ_x (a + a†)`.
pub fn hamiltonian(p: &ModelParams) -> M {
    let d = dims(p);
    let o = p.osc_site;
    let a = annihilation(p.n_max + 1);
    let field = &a + a.adjoint();
    let spins = spin_sites(p);
    let mut h = embed(&d, &[(o, number(p.n_max + 1) * c(p.omega))]);
    for &s in &spins {
        h -= embed(&d, &[(s, sz() * c(p.h))]);
        h += embed(&d, &[(o, field.clone()), (s, sx())]) * c(p.g / (p.l as f64).sqrt());
    }
    for w in spins.windows(2) {
        h -= embed(&d, &[(w[0], sy()), (w[1], sy())]) * c(p.j);
    }
    h
}

pub fn parity(p: &ModelParams) -> M {
    let d = dims(p);
    let mut pi = M::zeros(p.n_max + 1, p.n_max + 1);
    for n in 0..=p.n_max {
        pi[(n, n)] = c(if n % 2 == 0 { 1.0 } else { -1.0 });
    }
    let mut placed = vec![(p.osc_site, pi)];
    for s in spin_sites(p) {
        placed.push((s, sz()));
    }
    embed(&d, &placed)
}

pub fn vec_of(psi: &MpsState<f64>) -> nalgebra::DVector<Complex64> {
    nalgebra::DVector::from_vec(psi.to_dense())
}

pub fn expect(m: &M, v: &nalgebra::DVector<Complex64>) -> Complex64 {
    (v.adjoint() * m * v)[(0, 0)] / v.norm_squared()
}

/// Lowest eigenpairs of a Hermitian dense matrix, ascending.
pub fn lowest(m: &M, k: usize) -> (Vec<f64>, Vec<nalgebra::DVector<Complex64>>) {
    let eig = m.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..m.nrows()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().take(k).map(|&i| eig.eigenvalues[i]).collect();
    let vecs = idx.iter().take(k).map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    (vals, vecs)
}

/// Reduced state of site `site` from a dense pure state.
pub fn reduced(dims: &[usize], v: &[Complex64], site: usize) -> M {
    let d = dims[site];
    let left: usize = dims[..site].iter().product();
    let right: usize = dims[site + 1..].iter().product();
    let mut rho = M::zeros(d, d);
    for l in 0..left {
        for r in 0..right {
            for s in 0..d {
                for t in 0..d {
                    rho[(s, t)] += v[(l * d + s) * right + r] * v[(l * d + t) * right + r].conj();
                }
            }
        }
    }
    let tr = rho.trace();
    rho / tr
}

pub fn random_state(p: &ModelParams, bond: usize, seed: u64) -> MpsState<f64> {
    MpsState::random(&p.site_specs(), bond, seed).unwrap().normalized().unwrap()
}

pub fn random_params(rng: &mut ChaCha8Rng) -> (f64, f64, f64, f64) {
    (rng.random_range(0.5..1.5), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
