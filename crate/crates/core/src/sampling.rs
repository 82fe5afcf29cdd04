//! Seeded random generators for property tests and sweeps.
//!
//! Shield operators are `G G†` for complex Ginibre `G` (standard normal real
//! and imaginary parts), rescaled so the four traces sum to one. In the
//! orthogonal mode σ₁ and σ₂ are confined to complementary halves of a
//! Haar-rotated basis, which populates the recurrence-distillable class.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::ccq::TwistingSpec;
use crate::operators::{CMatrix, HermitianOperator};
use crate::scalar::Scalar;
use crate::shielded::ShieldedState;

fn normal<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.sample::<f64, _>(StandardNormal))
}

pub fn ginibre<T: Scalar, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix<T> {
    DMatrix::from_fn(rows, cols, |_, _| Complex::new(normal(rng), normal(rng)))
}

/// Haar-distributed unitary (QR of a Ginibre matrix with the phase of R's diagonal removed).
pub fn haar_unitary<T: Scalar, R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix<T> {
    let qr = ginibre::<T, R>(rng, n, n).qr();
    let (mut q, r) = qr.unpack();
    for k in 0..n {
        let d = r[(k, k)];
        let mag = (d.re * d.re + d.im * d.im).sqrt();
        let phase = if mag > T::zero() { d / Complex::new(mag, T::zero()) } else { Complex::new(T::one(), T::zero()) };
        for x in q.column_mut(k).iter_mut() {
            *x *= phase;
        }
    }
    q
}

/// Random positive operator `G G†` with full rank (almost surely).
pub fn random_psd<T: Scalar, R: Rng + ?Sized>(rng: &mut R, n: usize) -> HermitianOperator<T> {
    let g = ginibre::<T, R>(rng, n, n);
    HermitianOperator::symmetrized(&g * g.adjoint())
}

/// Random valid shielded state; with `orthogonal` σ₁ and σ₂ have orthogonal supports.
///
/// Panics if `orthogonal` is requested on a one-dimensional shield.
pub fn random_shielded_state<T: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    shield_dims: [usize; 2],
    orthogonal: bool,
) -> ShieldedState<T> {
    let n = shield_dims[0] * shield_dims[1];
    let mut sigma: [HermitianOperator<T>; 4] = std::array::from_fn(|_| random_psd(rng, n));
    if orthogonal {
        assert!(n >= 2, "orthogonal supports need a shield of dimension >= 2");
        let u = haar_unitary::<T, R>(rng, n);
        let split = 1 + rng.random_range(0..n - 1);
        for (k, range) in [(0usize, 0..split), (1, split..n)] {
            let mut g = ginibre::<T, R>(rng, n, n);
            for i in 0..n {
                if !range.contains(&i) {
                    g.row_mut(i).fill(Complex::new(T::zero(), T::zero()));
                }
            }
            let local = HermitianOperator::symmetrized(&g * g.adjoint());
            sigma[k] = local.conjugate_by(&u);
        }
    }
    // Random relative weights so every region of the criteria gets sampled.
    let weights: [T; 4] = std::array::from_fn(|_| T::lit(rng.random_range(0.02..1.0)));
    let total: T = (0..4).fold(T::zero(), |acc, i| acc + weights[i]);
    for i in 0..4 {
        let tr = sigma[i].trace();
        sigma[i] = sigma[i].scale(weights[i] / (total * tr));
    }
    ShieldedState::new(sigma, shield_dims).expect("sampled state satisfies invariants")
}

/// Independent Haar unitaries on the shield, one per key basis state `|ij⟩`.
pub fn random_twisting<T: Scalar, R: Rng + ?Sized>(rng: &mut R, shield_dim: usize) -> TwistingSpec<T> {
    TwistingSpec::new(std::array::from_fn(|_| haar_unitary(rng, shield_dim))).expect("Haar unitaries are unitary")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = haar_unitary::<f64, _>(&mut rng, 5);
        let id = &u * u.adjoint();
        assert!((id - CMatrix::<f64>::identity(5, 5)).norm() < 1e-12);
    }

    #[test]
    fn orthogonal_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let s = random_shielded_state::<f64, _>(&mut rng, [2, 2], true);
            assert!(s.sigma(0).trace_product(s.sigma(1)).abs() < 1e-14);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = random_shielded_state::<f64, _>(&mut ChaCha8Rng::seed_from_u64(9), [2, 2], false);
        let b = random_shielded_state::<f64, _>(&mut ChaCha8Rng::seed_from_u64(9), [2, 2], false);
        assert_eq!(a, b);
    }
}
