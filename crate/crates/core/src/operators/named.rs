use super::{c, CMatrix, HermitianOperator, KetVector};
use crate::error::{validation, Result};
use crate::scalar::Scalar;

/// Bell basis in the order φ₁ = (|00⟩+|11⟩)/√2, φ₂ = (|00⟩−|11⟩)/√2,
/// φ₃ = (|01⟩+|10⟩)/√2, φ₄ = (|01⟩−|10⟩)/√2.
pub fn bell_basis<T: Scalar>() -> [KetVector<T>; 4] {
    let h = T::lit(0.5).sqrt();
    let z = T::zero();
    let ket = |a: [T; 4]| KetVector::from_dvector(nalgebra::DVector::from_iterator(4, a.into_iter().map(c)));
    [
        ket([h, z, z, h]),
        ket([h, z, z, -h]),
        ket([z, h, h, z]),
        ket([z, h, -h, z]),
    ]
}

/// Normalized projectors `(ρ_s, ρ_a)` onto the symmetric and antisymmetric
/// subspaces of `C^d ⊗ C^d`, divided by their ranks `d(d±1)/2`.
pub fn sym_antisym_projectors<T: Scalar>(d: usize) -> Result<(HermitianOperator<T>, HermitianOperator<T>)> {
    if d < 2 {
        return Err(validation(format!("projector dimension d must be at least 2, got {d}")));
    }
    let n = d * d;
    let half = T::lit(0.5);
    // (I ± F)/2 with F the swap |ij⟩ ↦ |ji⟩.
    let proj = |sign: T| {
        CMatrix::from_fn(n, n, |r, col| {
            let (i, j) = (r / d, r % d);
            let mut v = if r == col { half } else { T::zero() };
            if col == j * d + i {
                v += sign * half;
            }
            c(v)
        })
    };
    let rank_s = T::from_usize(d * (d + 1) / 2).unwrap();
    let rank_a = T::from_usize(d * (d - 1) / 2).unwrap();
    let rs = HermitianOperator::symmetrized(proj(T::one())).scale(T::one() / rank_s);
    let ra = HermitianOperator::symmetrized(proj(-T::one())).scale(T::one() / rank_a);
    Ok((rs, ra))
}
