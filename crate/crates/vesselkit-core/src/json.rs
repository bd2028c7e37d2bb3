//! JSON encodings shared by the data types: complex numbers as `[re, im]`,
//! matrices as row-major nested arrays of `[re, im]`.

use crate::error::{Error, Result};
use crate::matcore::{CMatrix, C64};

pub type ComplexJson = [f64; 2];
pub type MatrixJson = Vec<Vec<ComplexJson>>;

pub fn complex_to_json(z: C64) -> ComplexJson {
    [z.re, z.im]
}

pub fn complex_from_json(z: ComplexJson) -> C64 {
    C64::new(z[0], z[1])
}

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| complex_to_json(m[(i, j)])).collect())
        .collect()
}

/// Decodes a row-major matrix; `cols_if_empty` fixes the column count of a matrix with no rows.
pub fn matrix_from_json(rows: &MatrixJson, cols_if_empty: usize) -> Result<CMatrix> {
    if rows.is_empty() {
        return Ok(CMatrix::zeros(0, cols_if_empty));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse("ragged matrix rows".into()));
    }
    let entries: Vec<C64> = rows.iter().flatten().map(|&z| complex_from_json(z)).collect();
    if entries.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Parse("non-finite matrix entry".into()));
    }
    Ok(CMatrix::from_row_slice(rows.len(), cols, &entries))
}

/// Decodes a row vector given as a flat array of `[re, im]`.
pub fn row_from_json(entries: &[ComplexJson]) -> CMatrix {
    let v: Vec<C64> = entries.iter().map(|&z| complex_from_json(z)).collect();
    CMatrix::from_row_slice(1, v.len(), &v)
}

pub fn row_to_json(r: &CMatrix) -> Vec<ComplexJson> {
    r.iter().map(|&z| complex_to_json(z)).collect()
}
