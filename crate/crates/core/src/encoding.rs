//! JSON encodings. Complex numbers are `[re, im]` pairs and matrices are
//! arrays of rows.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, ComplexMatrix, FiniteCStarAlgebra};
use crate::error::{Error, Result};

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &ComplexMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<ComplexMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(Error::Shape("matrix must be non-empty".into()));
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Shape("ragged matrix rows".into()));
    }
    let m = ComplexMatrix::from_fn(nrows, ncols, |i, j| {
        let [re, im] = rows[i][j];
        Complex64::new(re, im)
    });
    crate::algebra::ensure_finite(&m, "matrix")?;
    Ok(m)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgebraElementJson {
    pub block_dims: Vec<usize>,
    pub blocks: Vec<MatrixJson>,
}

impl TryFrom<AlgebraElementJson> for AlgebraElement {
    type Error = Error;

    fn try_from(json: AlgebraElementJson) -> Result<Self> {
        let alg = FiniteCStarAlgebra::new(json.block_dims)?;
        let blocks = json
            .blocks
            .iter()
            .map(matrix_from_json)
            .collect::<Result<Vec<_>>>()?;
        alg.element(blocks)
    }
}

impl From<AlgebraElement> for AlgebraElementJson {
    fn from(a: AlgebraElement) -> Self {
        Self {
            block_dims: a.block_dims(),
            blocks: a.blocks().iter().map(matrix_to_json).collect(),
        }
    }
}

/// Serde adapter for `ComplexMatrix` fields.
pub mod matrix_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &ComplexMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_json(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ComplexMatrix, D::Error> {
        let rows = MatrixJson::deserialize(d)?;
        matrix_from_json(&rows).map_err(serde::de::Error::custom)
    }
}
