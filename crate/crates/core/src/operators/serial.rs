//! JSON form: `{"dim": n, "entries": [[[re, im], ...], ...]}`, row-major.
//! A bare nested array of `[re, im]` pairs is also accepted on input.

use num_complex::Complex;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{CMatrix, HermitianOperator};
use crate::scalar::Scalar;

#[derive(Serialize)]
struct MatrixOut<T> {
    dim: usize,
    entries: Vec<Vec<[T; 2]>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MatrixIn<T> {
    Tagged { dim: usize, entries: Vec<Vec<[T; 2]>> },
    Bare(Vec<Vec<[T; 2]>>),
}

impl<T: Scalar> Serialize for HermitianOperator<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let n = self.dim();
        let entries = (0..n)
            .map(|i| (0..n).map(|j| [self.m[(i, j)].re, self.m[(i, j)].im]).collect())
            .collect();
        MatrixOut { dim: n, entries }.serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for HermitianOperator<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (dim, entries) = match MatrixIn::<T>::deserialize(d)? {
            MatrixIn::Tagged { dim, entries } => (dim, entries),
            MatrixIn::Bare(entries) => (entries.len(), entries),
        };
        if entries.len() != dim || entries.iter().any(|row| row.len() != dim) {
            return Err(D::Error::custom(format!(
                "matrix entries must be {dim}x{dim} [re, im] pairs"
            )));
        }
        let m = CMatrix::from_fn(dim, dim, |i, j| Complex::new(entries[i][j][0], entries[i][j][1]));
        HermitianOperator::from_matrix(m).map_err(D::Error::custom)
    }
}
