//! Binary MPS checkpoints.
//!
//! Layout: the 8-byte magic `DICKEMPS`, a little-endian `u32` format
//! version, a `u64` header length, a JSON header (site specs, shapes,
//! center, free-form metadata), then every amplitude as little-endian `f64`
//! real/imaginary pairs, site by site in row-major order.

use std::io::{Read, Write};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SiteSpec;
use crate::mps::MpsState;
use crate::scalar::{cfrom, cto64, Real};
use crate::tensor::DenseTensor;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"DICKEMPS";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    specs: Vec<SiteSpec>,
    shapes: Vec<[usize; 3]>,
    center: Option<usize>,
    precision: String,
    metadata: serde_json::Value,
}

/// Writes `psi` with an arbitrary JSON `metadata` block.
pub fn write_checkpoint<R: Real, W: Write>(mut w: W, psi: &MpsState<R>, metadata: &serde_json::Value) -> Result<()> {
    let header = Header {
        specs: psi.site_specs().to_vec(),
        shapes: psi.sites().iter().map(|t| [t.shape()[0], t.shape()[1], t.shape()[2]]).collect(),
        center: psi.center(),
        precision: R::precision_name().to_string(),
        metadata: metadata.clone(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for t in psi.sites() {
        for z in t.data() {
            let z = cto64(*z);
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a checkpoint back as a state of precision `R` plus its metadata.
pub fn read_checkpoint<R: Real, Rd: Read>(mut r: Rd) -> Result<(MpsState<R>, serde_json::Value)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Format("not an MPS checkpoint".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let len = u64::from_le_bytes(b8) as usize;
    if len > 1 << 30 {
        return Err(Error::Format("checkpoint header too large".into()));
    }
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let header: Header = serde_json::from_slice(&json).map_err(|e| Error::Format(e.to_string()))?;
    if header.shapes.len() != header.specs.len() {
        return Err(Error::Format("shape list does not match site list".into()));
    }
    let mut sites = Vec::with_capacity(header.shapes.len());
    for sh in &header.shapes {
        let n = sh.iter().product::<usize>();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut b8)?;
            let re = f64::from_le_bytes(b8);
            r.read_exact(&mut b8)?;
            let im = f64::from_le_bytes(b8);
            data.push(cfrom::<R>(Complex::new(re, im)));
        }
        sites.push(DenseTensor::new(sh, &["left", "phys", "right"], data)?);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after checkpoint data".into()));
    }
    Ok((MpsState::new(sites, header.specs, header.center)?, header.metadata))
}

/// Writes to `path` through a temporary file and a rename, so an
/// interrupted write never leaves a truncated checkpoint behind.
pub fn save_checkpoint<R: Real>(path: &std::path::Path, psi: &MpsState<R>, metadata: &serde_json::Value) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let f = std::fs::File::create(&tmp)?;
        write_checkpoint(std::io::BufWriter::new(f), psi, metadata)?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint<R: Real>(path: &std::path::Path) -> Result<(MpsState<R>, serde_json::Value)> {
    let f = std::fs::File::open(path)?;
    read_checkpoint(std::io::BufReader::new(f))
}
