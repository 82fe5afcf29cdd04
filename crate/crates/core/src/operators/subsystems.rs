//! Tensor-factor bookkeeping: Kronecker products, reordering, partial trace
//! and partial transpose. Multi-indices are row-major (first factor most
//! significant), matching `kron` ordering.

use super::{check_limit, HermitianOperator, DEFAULT_MAX_DIM};
use crate::error::{validation, Result};
use crate::scalar::Scalar;

/// Kronecker product under the default dimension limit.
pub fn tensor<T: Scalar>(a: &HermitianOperator<T>, b: &HermitianOperator<T>) -> Result<HermitianOperator<T>> {
    tensor_with_limit(a, b, DEFAULT_MAX_DIM)
}

pub fn tensor_with_limit<T: Scalar>(
    a: &HermitianOperator<T>,
    b: &HermitianOperator<T>,
    max_dim: usize,
) -> Result<HermitianOperator<T>> {
    let dim = a.dim().saturating_mul(b.dim());
    check_limit(dim, max_dim)?;
    Ok(HermitianOperator {
        m: a.matrix().kronecker(b.matrix()),
    })
}

fn check_dims(total: usize, dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(validation(format!("subsystem dims must be positive, got {dims:?}")));
    }
    let prod: usize = dims.iter().product();
    if prod != total {
        return Err(validation(format!(
            "subsystem dims {dims:?} multiply to {prod}, operator dimension is {total}"
        )));
    }
    Ok(())
}

fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
    out
}

fn compose(digits: impl IntoIterator<Item = (usize, usize)>) -> usize {
    digits.into_iter().fold(0, |acc, (d, radix)| acc * radix + d)
}

/// Reorders tensor factors: new factor `k` is old factor `perm[k]`.
pub fn permute_subsystems<T: Scalar>(
    a: &HermitianOperator<T>,
    dims: &[usize],
    perm: &[usize],
) -> Result<HermitianOperator<T>> {
    check_dims(a.dim(), dims)?;
    let mut seen = vec![false; dims.len()];
    if perm.len() != dims.len() || perm.iter().any(|&p| p >= dims.len() || std::mem::replace(&mut seen[p], true)) {
        return Err(validation(format!("{perm:?} is not a permutation of {} factors", dims.len())));
    }
    let n = a.dim();
    let map: Vec<usize> = (0..n)
        .map(|i| {
            let d = digits(i, dims);
            compose(perm.iter().map(|&p| (d[p], dims[p])))
        })
        .collect();
    let src = a.matrix();
    let mut m = src.clone();
    for j in 0..n {
        for i in 0..n {
            m[(map[i], map[j])] = src[(i, j)];
        }
    }
    Ok(HermitianOperator { m })
}

/// Traces out every factor not listed in `keep`; kept factors retain their order.
pub fn partial_trace<T: Scalar>(
    a: &HermitianOperator<T>,
    dims: &[usize],
    keep: &[usize],
) -> Result<HermitianOperator<T>> {
    check_dims(a.dim(), dims)?;
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&k| k >= dims.len()) {
        return Err(validation(format!("keep set {keep:?} out of range for {} factors", dims.len())));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let out_dim: usize = keep.iter().map(|&k| dims[k]).product();
    let n = a.dim();
    let (kept_idx, traced_idx): (Vec<usize>, Vec<usize>) = (0..n)
        .map(|i| {
            let d = digits(i, dims);
            (
                compose(keep.iter().map(|&k| (d[k], dims[k]))),
                compose(traced.iter().map(|&k| (d[k], dims[k]))),
            )
        })
        .unzip();
    let src = a.matrix();
    let mut m = super::CMatrix::zeros(out_dim, out_dim);
    for j in 0..n {
        for i in 0..n {
            if traced_idx[i] == traced_idx[j] {
                m[(kept_idx[i], kept_idx[j])] += src[(i, j)];
            }
        }
    }
    Ok(HermitianOperator::symmetrized(m))
}

/// Transposes the second factor of a bipartite `dims = [dA, dB]` operator.
pub fn partial_transpose<T: Scalar>(a: &HermitianOperator<T>, dims: [usize; 2]) -> Result<HermitianOperator<T>> {
    check_dims(a.dim(), &dims)?;
    let [da, db] = dims;
    let src = a.matrix();
    let mut m = src.clone();
    for a1 in 0..da {
        for b1 in 0..db {
            for a2 in 0..da {
                for b2 in 0..db {
                    m[(a1 * db + b1, a2 * db + b2)] = src[(a1 * db + b2, a2 * db + b1)];
                }
            }
        }
    }
    Ok(HermitianOperator { m })
}

/// PPT test for a state: `(min eigenvalue of the partial transpose ≥ −tol, that eigenvalue)`.
pub fn is_ppt<T: Scalar>(a: &HermitianOperator<T>, dims: [usize; 2]) -> Result<(bool, T)> {
    let tr = a.trace();
    if (tr - T::one()).abs() > T::tolerance() {
        return Err(validation(format!("PPT test expects a unit-trace state, trace is {tr}")));
    }
    let min = partial_transpose(a, dims)?.min_eigenvalue();
    Ok((min >= -T::tolerance(), min))
}
