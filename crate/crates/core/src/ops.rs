//! Single-site operators: bosonic ladder operators in a truncated Fock space
//! and Pauli matrices in the `σ_z` eigenbasis with `|↑⟩` first.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cone, cre, czero, Real};
use crate::tensor::matmul;

/// Square operator on one site, row-major `dim × dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOp<R: Real> {
    dim: usize,
    data: Vec<Complex<R>>,
}

impl<R: Real> LocalOp<R> {
    pub fn new(dim: usize, data: Vec<Complex<R>>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::Dimension(format!("{} values for a {dim}x{dim} operator", data.len())));
        }
        Ok(Self { dim, data })
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> Complex<R>) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[Complex<R>] {
        &self.data
    }

    #[inline]
    pub fn at(&self, out: usize, inp: usize) -> Complex<R> {
        self.data[out * self.dim + inp]
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { cone() } else { czero() })
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_fn(dim, |_, _| czero())
    }

    /// Bosonic `a` on Fock states `0..dim`.
    pub fn annihilation(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if j == i + 1 { cre(R::lit((j as f64).sqrt())) } else { czero() })
    }

    pub fn creation(dim: usize) -> Self {
        Self::annihilation(dim).dagger()
    }

    pub fn number(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { cre(R::lit(i as f64)) } else { czero() })
    }

    /// `a + a†`.
    pub fn field(dim: usize) -> Self {
        Self::annihilation(dim) + Self::creation(dim)
    }

    /// Photon parity `(-1)^n`.
    pub fn fock_parity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| {
            if i == j {
                cre(if i % 2 == 0 { R::one() } else { -R::one() })
            } else {
                czero()
            }
        })
    }

    pub fn pauli_x() -> Self {
        Self::from_fn(2, |i, j| if i != j { cone() } else { czero() })
    }

    pub fn pauli_y() -> Self {
        let i_ = Complex::new(R::zero(), R::one());
        Self { dim: 2, data: vec![czero(), -i_, i_, czero()] }
    }

    pub fn pauli_z() -> Self {
        Self { dim: 2, data: vec![cone(), czero(), czero(), -cone()] }
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.at(j, i).conj())
    }

    pub fn scale(&self, s: Complex<R>) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| *z * s).collect() }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Dimension(format!("{} vs {}", self.dim, other.dim)));
        }
        Ok(Self { dim: self.dim, data: matmul(&self.data, &other.data, self.dim, self.dim, self.dim) })
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == R::zero() && z.im == R::zero())
    }

    /// `y = O x` for a vector of length `dim`.
    pub fn apply(&self, x: &[Complex<R>]) -> Vec<Complex<R>> {
        matmul(&self.data, x, self.dim, self.dim, 1)
    }
}

impl<R: Real> Add for LocalOp<R> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "operator dims");
        Self { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a + *b).collect() }
    }
}

impl<R: Real> Sub for LocalOp<R> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "operator dims");
        Self { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a - *b).collect() }
    }
}

impl<R: Real> Mul<R> for LocalOp<R> {
    type Output = Self;
    fn mul(self, rhs: R) -> Self {
        self.scale(cre(rhs))
    }
}
