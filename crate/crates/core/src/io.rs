//! JSON file formats shared by the library and the CLI.
//!
//! A matrix is stored as `{"dim": D, "re": [[...]], "im": [[...]]}` with
//! row-major `D×D` arrays. Readers reject input whose anti-Hermitian part
//! exceeds [`READ_HERMITIAN_TOL`].

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix, HermitianOperator};

pub const READ_HERMITIAN_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MatrixDoc {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixDoc {
    pub fn to_operator(&self) -> Result<HermitianOperator> {
        if self.re.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: self.re.len(),
            });
        }
        HermitianOperator::from_parts(&self.re, &self.im, READ_HERMITIAN_TOL)
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(self.to_operator()?)
    }
}

impl From<&HermitianOperator> for MatrixDoc {
    fn from(op: &HermitianOperator) -> Self {
        let d = op.dim();
        let re = (0..d)
            .map(|j| (0..d).map(|k| op.get(j, k).re).collect())
            .collect();
        let im = (0..d)
            .map(|j| (0..d).map(|k| op.get(j, k).im).collect())
            .collect();
        Self { dim: d, re, im }
    }
}

impl From<&DensityMatrix> for MatrixDoc {
    fn from(rho: &DensityMatrix) -> Self {
        MatrixDoc::from(rho.op())
    }
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    if let Some(parent) = path.as_ref().parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text)?;
    Ok(())
}
