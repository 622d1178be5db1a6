//! Physical configuration of the Dicke-Ising chain and the site layout
//! derived from it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiteKind {
    Oscillator,
    Spin,
}

/// One site of the chain: its kind and local Hilbert-space dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SiteSpec {
    pub kind: SiteKind,
    pub phys_dim: usize,
}

impl SiteSpec {
    pub fn oscillator(n_max: usize) -> Self {
        Self { kind: SiteKind::Oscillator, phys_dim: n_max + 1 }
    }

    pub fn spin() -> Self {
        Self { kind: SiteKind::Spin, phys_dim: 2 }
    }
}

/// Checks the lattice invariants: exactly one oscillator, every `phys_dim >= 2`.
pub fn validate_specs(specs: &[SiteSpec]) -> Result<usize> {
    if specs.iter().any(|s| s.phys_dim < 2) {
        return Err(Error::InvalidArgument("phys_dim must be >= 2".into()));
    }
    let osc: Vec<usize> = specs
        .iter()
        .enumerate()
        .filter(|(_, s)| s.kind == SiteKind::Oscillator)
        .map(|(i, _)| i)
        .collect();
    match osc.as_slice() {
        [p] => Ok(*p),
        _ => Err(Error::InvalidArgument(format!("expected exactly one oscillator site, found {}", osc.len()))),
    }
}

/// `H = ω a†a − h Σσ_z − J Σσ_yσ_y + (g/√L) Σσ_x (a + a†)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega: f64,
    pub h: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub g: f64,
    #[serde(rename = "L")]
    pub l: usize,
    pub n_max: usize,
    /// Chain position of the oscillator (0 = before the first spin).
    #[serde(default)]
    pub osc_site: usize,
}

impl ModelParams {
    /// Parameters with the default Fock cutoff and the oscillator first.
    pub fn new(omega: f64, h: f64, j: f64, g: f64, l: usize) -> Result<Self> {
        let mut p = Self { omega, h, j, g, l, n_max: 1, osc_site: 0 };
        p.validate()?;
        p.n_max = default_n_max(omega, g, l);
        Ok(p)
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn with_osc_site(mut self, site: usize) -> Self {
        self.osc_site = site;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.omega, self.h, self.j, self.g].iter().all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("couplings must be finite".into()));
        }
        if self.omega <= 0.0 {
            return Err(Error::InvalidArgument(format!("omega = {} must be > 0", self.omega)));
        }
        if self.h < 0.0 || self.j < 0.0 || self.g < 0.0 {
            return Err(Error::InvalidArgument("h, J, g must be >= 0".into()));
        }
        if self.l < 1 || self.n_max < 1 {
            return Err(Error::InvalidArgument("L and n_max must be >= 1".into()));
        }
        if self.osc_site > self.l {
            return Err(Error::InvalidArgument(format!("oscillator site {} beyond chain of {}", self.osc_site, self.l + 1)));
        }
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.l + 1
    }

    pub fn site_specs(&self) -> Vec<SiteSpec> {
        (0..self.n_sites())
            .map(|i| if i == self.osc_site { SiteSpec::oscillator(self.n_max) } else { SiteSpec::spin() })
            .collect()
    }

    /// Chain positions of the spins in order `1..=L`.
    pub fn spin_sites(&self) -> Vec<usize> {
        (0..self.n_sites()).filter(|&i| i != self.osc_site).collect()
    }

    /// Rough energy scale used for relative tolerances.
    pub fn energy_scale(&self) -> f64 {
        self.omega + (self.h + self.j + self.g) * self.l as f64
    }
}

/// `ceil(4 g² L / ω²) + 10`.
pub fn default_n_max(omega: f64, g: f64, l: usize) -> usize {
    ((4.0 * g * g * l as f64 / (omega * omega)).ceil() as usize).saturating_add(10)
}
