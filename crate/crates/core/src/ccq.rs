//! Classical-classical-quantum correlations after Alice and Bob measure the
//! key qubits in the computational basis, and the advantage-distillation
//! protocol run on them.
//!
//! Outcome pairs `(i, j)` are indexed `2i + j` throughout.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::criteria::Condition;
use crate::error::{validation, Error, Result};
use crate::operators::{bell_basis, c, schatten_one, CMatrix, HermitianOperator, KetVector};
use crate::scalar::Scalar;
use crate::shielded::KeySpectrum;

/// Eve's conditional states, `None` for outcomes of probability zero.
#[derive(Clone, Debug, PartialEq)]
pub enum EveStates<T: Scalar> {
    Pure([Option<KetVector<T>>; 4]),
    Mixed([Option<HermitianOperator<T>>; 4]),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct CcqDescriptor<T: Scalar> {
    /// `p[i][j] = P(Alice = i, Bob = j)`.
    pub p: [[T; 2]; 2],
    /// `|⟨e₀₀|e₁₁⟩|`, or the root fidelity of the two conditional states when mixed.
    pub eve_overlap: T,
    #[serde(skip)]
    pub eve_states: Option<EveStates<T>>,
}

impl<T: Scalar> CcqDescriptor<T> {
    /// Validates probabilities (nonnegative, unit sum) and the overlap range.
    pub fn new(p: [[T; 2]; 2], eve_overlap: T) -> Result<Self> {
        let tol = T::lit(1e-12).max(T::default_epsilon() * T::lit(16.0));
        if p.iter().flatten().any(|&x| x < -tol) {
            return Err(validation(format!("probabilities must be nonnegative, got {p:?}")));
        }
        let sum = p[0][0] + p[0][1] + p[1][0] + p[1][1];
        if (sum - T::one()).abs() > tol {
            return Err(validation(format!("probabilities must sum to 1, got {sum}")));
        }
        if !(eve_overlap >= -tol && eve_overlap <= T::one() + tol) {
            return Err(validation(format!("eve_overlap must lie in [0, 1], got {eve_overlap}")));
        }
        Ok(Self {
            p,
            eve_overlap,
            eve_states: None,
        })
    }

    /// Probability that Alice's and Bob's bits agree.
    pub fn agreement(&self) -> T {
        self.p[0][0] + self.p[1][1]
    }

    pub fn disagreement(&self) -> T {
        self.p[0][1] + self.p[1][0]
    }
}

/// `|ψ⟩ = Σᵢ √λᵢ |φᵢ⟩|Eᵢ⟩` on `AB ⊗ E` with `E = C⁴`.
pub fn purify<T: Scalar>(k: &KeySpectrum<T>) -> KetVector<T> {
    let bell = bell_basis::<T>();
    let mut amps = DVector::zeros(16);
    for (i, phi) in bell.iter().enumerate() {
        let w = k.lambda[i].max(T::zero()).sqrt();
        for ab in 0..4 {
            amps[ab * 4 + i] = phi.amplitude(ab) * c(w);
        }
    }
    KetVector::from_dvector(amps)
}

pub fn ccq_from_spectrum<T: Scalar>(k: &KeySpectrum<T>) -> Result<CcqDescriptor<T>> {
    let [l1, l2, l3, l4] = k.lambda;
    let same = l1 + l2;
    if same <= T::zero() {
        return Err(Error::Degenerate("lambda1 + lambda2 = 0: no correlated outcomes".into()));
    }
    let psi = purify(k);
    let half = T::lit(0.5);
    let probs = [same * half, (l3 + l4) * half, (l3 + l4) * half, same * half];
    let states = std::array::from_fn(|ij| {
        (probs[ij] > T::zero()).then(|| {
            let norm = c(probs[ij].sqrt());
            KetVector::from_dvector(DVector::from_fn(4, |e, _| psi.amplitude(ij * 4 + e) / norm))
        })
    });
    let mut d = CcqDescriptor::new([[probs[0], probs[1]], [probs[2], probs[3]]], (l1 - l2) / same)?;
    d.eve_states = Some(EveStates::Pure(states));
    Ok(d)
}

/// Root fidelity `‖√ρ √σ‖₁`; equals `|⟨a|b⟩|` for pure states.
pub fn root_fidelity<T: Scalar>(a: &HermitianOperator<T>, b: &HermitianOperator<T>) -> T {
    schatten_one(&(a.sqrt_psd().matrix() * b.sqrt_psd().matrix()))
}

/// ccq data of a full `A B A' B'` state with Eve holding its purification.
///
/// Eve's system is a copy of `ABA'B'` carrying the canonical purification
/// `Σₙ √ρ|n⟩ ⊗ |n⟩`; the honest shields are traced out. Eve's unnormalized
/// state for outcome `ij` is `(√ρ Πᵢⱼ √ρ)ᵀ`. Any other purification differs
/// from this one by an isometry on Eve's side only.
pub fn ccq_from_full_state<T: Scalar>(rho: &HermitianOperator<T>, shield_dims: [usize; 2]) -> Result<CcqDescriptor<T>> {
    let sd = shield_dims[0] * shield_dims[1];
    if sd == 0 || rho.dim() != 4 * sd {
        return Err(validation(format!(
            "state of dimension {} does not match key (4) times shield {shield_dims:?}",
            rho.dim()
        )));
    }
    let tr = rho.trace();
    if (tr - T::one()).abs() > T::tolerance() {
        return Err(validation(format!("ccq input must have unit trace, got {tr}")));
    }
    let (vals, _) = rho.eigh();
    if let Some(min) = vals.iter().copied().reduce(|a, b| a.min(b)) {
        if min < -T::tolerance() {
            return Err(validation(format!("ccq input is not positive semidefinite (min eigenvalue {min})")));
        }
    }
    let root = rho.sqrt_psd();
    let floor = T::default_epsilon() * T::lit(64.0);
    let mut probs = [T::zero(); 4];
    let states: [Option<HermitianOperator<T>>; 4] = std::array::from_fn(|ij| {
        let b: CMatrix<T> = root.matrix().columns(ij * sd, sd).into_owned();
        let x = HermitianOperator::symmetrized((&b * b.adjoint()).transpose());
        probs[ij] = x.trace();
        (probs[ij] > floor).then(|| x.scale(T::one() / probs[ij]))
    });
    let overlap = match (&states[0], &states[3]) {
        (Some(e00), Some(e11)) => root_fidelity(e00, e11).min(T::one()),
        _ => T::zero(),
    };
    let mut d = CcqDescriptor::new([[probs[0], probs[1]], [probs[2], probs[3]]], overlap)?;
    d.eve_states = Some(EveStates::Mixed(states));
    Ok(d)
}

/// Controlled unitary `Σᵢⱼ |ij⟩⟨ij| ⊗ Uᵢⱼ` on key ⊗ shield.
#[derive(Clone, Debug, PartialEq)]
pub struct TwistingSpec<T: Scalar> {
    blocks: [CMatrix<T>; 4],
}

impl<T: Scalar> TwistingSpec<T> {
    pub fn new(blocks: [CMatrix<T>; 4]) -> Result<Self> {
        let n = blocks[0].nrows();
        for (k, u) in blocks.iter().enumerate() {
            if u.nrows() != n || u.ncols() != n {
                return Err(validation(format!("twisting block {k} must be {n}x{n}")));
            }
            let defect = (u * u.adjoint() - CMatrix::identity(n, n)).norm();
            if defect > T::tolerance() {
                return Err(validation(format!("twisting block {k} is not unitary (defect {defect})")));
            }
        }
        Ok(Self { blocks })
    }

    pub fn identity(shield_dim: usize) -> Self {
        Self {
            blocks: std::array::from_fn(|_| CMatrix::identity(shield_dim, shield_dim)),
        }
    }

    pub fn shield_dim(&self) -> usize {
        self.blocks[0].nrows()
    }

    pub fn block(&self, ij: usize) -> &CMatrix<T> {
        &self.blocks[ij]
    }

    /// The full block-diagonal unitary on `ABA'B'`.
    pub fn unitary(&self) -> CMatrix<T> {
        let n = self.shield_dim();
        let mut u = CMatrix::zeros(4 * n, 4 * n);
        for (k, b) in self.blocks.iter().enumerate() {
            u.view_mut((k * n, k * n), (n, n)).copy_from(b);
        }
        u
    }
}

pub fn apply_twisting<T: Scalar>(
    rho: &HermitianOperator<T>,
    t: &TwistingSpec<T>,
    shield_dims: [usize; 2],
) -> Result<HermitianOperator<T>> {
    let n = shield_dims[0] * shield_dims[1];
    if t.shield_dim() != n || rho.dim() != 4 * n {
        return Err(validation(format!(
            "twisting on shield dimension {} does not fit state of dimension {} with shield {shield_dims:?}",
            t.shield_dim(),
            rho.dim()
        )));
    }
    let src = rho.matrix();
    let mut out = CMatrix::zeros(4 * n, 4 * n);
    for k in 0..4 {
        for l in 0..4 {
            let block = &t.blocks[k] * src.view((k * n, l * n), (n, n)) * t.blocks[l].adjoint();
            out.view_mut((k * n, l * n), (n, n)).copy_from(&block);
        }
    }
    Ok(HermitianOperator::symmetrized(out))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AdBlockStats<T> {
    pub block_size: usize,
    /// Probability that Bob accepts a block.
    pub accept_prob: T,
    /// Probability that an accepted bit differs between Alice and Bob.
    pub post_error: T,
    /// `eve_overlap^N`, descriptive only.
    pub eve_overlap_effective: T,
}

/// Closed-form statistics of one `N`-bit advantage-distillation block.
pub fn ad_block_stats<T: Scalar>(c: &CcqDescriptor<T>, n: usize) -> Result<AdBlockStats<T>> {
    if n < 1 {
        return Err(validation("block size N must be at least 1"));
    }
    let e = i32::try_from(n).map_err(|_| validation("block size N too large"))?;
    let a = c.agreement().powi(e);
    let d = c.disagreement().powi(e);
    let accept = a + d;
    Ok(AdBlockStats {
        block_size: n,
        accept_prob: accept,
        post_error: if accept > T::zero() { d / accept } else { T::zero() },
        eve_overlap_effective: c.eve_overlap.powi(e),
    })
}

/// Empirical block statistics with binomial standard errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AdMonteCarlo<T> {
    pub trials: u64,
    pub accepted: u64,
    pub errors: u64,
    pub stats: AdBlockStats<T>,
    pub accept_stderr: T,
    pub post_error_stderr: T,
}

/// Trials per independently seeded chunk. Chunk `k` draws from ChaCha8
/// seeded with `seed` on stream `k`, so results do not depend on how many
/// threads run the chunks.
pub const MC_CHUNK: u64 = 4096;

/// Simulates the protocol bit by bit: Alice draws a secret bit `s`, announces
/// `xᵢ = s ⊕ aᵢ`, Bob computes `yᵢ = bᵢ ⊕ xᵢ` and accepts iff all `yᵢ` agree;
/// an accepted block is in error when Bob's common `y` differs from `s`.
pub fn ad_monte_carlo<T: Scalar>(c: &CcqDescriptor<T>, n: usize, trials: u64, seed: u64) -> Result<AdMonteCarlo<T>> {
    if n < 1 {
        return Err(validation("block size N must be at least 1"));
    }
    if trials < 1 {
        return Err(validation("trials must be at least 1"));
    }
    let p = [c.p[0][0], c.p[0][1], c.p[1][0], c.p[1][1]].map(|x| x.to_f64_lossy().max(0.0));
    let cumulative = [p[0], p[0] + p[1], p[0] + p[1] + p[2]];
    let sample = |rng: &mut ChaCha8Rng| -> (bool, bool) {
        let u: f64 = rng.random();
        let k = cumulative.iter().position(|&cdf| u < cdf).unwrap_or(3);
        (k >= 2, k % 2 == 1)
    };
    let chunks = trials.div_ceil(MC_CHUNK);
    let counts: Vec<(u64, u64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let count = MC_CHUNK.min(trials - chunk * MC_CHUNK);
            let (mut accepted, mut errors) = (0u64, 0u64);
            for _ in 0..count {
                let secret: bool = rng.random();
                let mut first = None;
                let mut all_same = true;
                for _ in 0..n {
                    let (a, b) = sample(&mut rng);
                    let x = secret ^ a;
                    let y = b ^ x;
                    match first {
                        None => first = Some(y),
                        Some(f) if f != y => all_same = false,
                        Some(_) => {}
                    }
                }
                if all_same {
                    accepted += 1;
                    if first != Some(secret) {
                        errors += 1;
                    }
                }
            }
            (accepted, errors)
        })
        .collect();
    let (accepted, errors) = counts.iter().fold((0, 0), |(a, e), &(x, y)| (a + x, e + y));

    let acc = accepted as f64 / trials as f64;
    let err = if accepted > 0 { errors as f64 / accepted as f64 } else { 0.0 };
    let acc_se = (acc * (1.0 - acc) / trials as f64).sqrt();
    let err_se = if accepted > 0 { (err * (1.0 - err) / accepted as f64).sqrt() } else { 0.0 };
    let e = i32::try_from(n).map_err(|_| validation("block size N too large"))?;
    Ok(AdMonteCarlo {
        trials,
        accepted,
        errors,
        stats: AdBlockStats {
            block_size: n,
            accept_prob: T::lit(acc),
            post_error: T::lit(err),
            eve_overlap_effective: c.eve_overlap.powi(e),
        },
        accept_stderr: T::lit(acc_se),
        post_error_stderr: T::lit(err_se),
    })
}

/// `|⟨e₀₀|e₁₁⟩|² > (p₀₁ + p₁₀)/(p₀₀ + p₁₁)`.
pub fn ad_security_check<T: Scalar>(c: &CcqDescriptor<T>) -> Result<Condition<T>> {
    let a = c.agreement();
    if a <= T::zero() {
        return Err(Error::Degenerate("p(0,0) + p(1,1) = 0: no agreeing outcomes".into()));
    }
    let margin = c.eve_overlap * c.eve_overlap - c.disagreement() / a;
    Ok(Condition {
        holds: margin > T::tolerance(),
        margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::partial_trace;
    use crate::sampling::{random_shielded_state, random_twisting};
    use crate::shielded::{assemble_density, key_spectrum};
    use rand_chacha::ChaCha8Rng;

    fn ks(l: [f64; 4]) -> KeySpectrum<f64> {
        KeySpectrum::new(l).unwrap()
    }

    #[test]
    fn purification_traces_back_to_bell_diagonal() {
        let k = ks([0.45, 0.15, 0.2, 0.2]);
        let psi = purify(&k);
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-15);
        let red = partial_trace(&HermitianOperator::projector(&psi), &[4, 4], &[0]).unwrap();
        let bell = bell_basis::<f64>();
        let expected = (0..4).fold(HermitianOperator::zeros(4), |acc, i| {
            &acc + &HermitianOperator::projector(&bell[i]).scale(k.lambda[i])
        });
        assert!(red.max_abs_diff(&expected) < 1e-15);

        let pure = purify(&ks([1.0, 0.0, 0.0, 0.0]));
        let expected = bell[0].tensor(&KetVector::basis(4, 0));
        assert!((pure.inner(&expected).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spectrum_ccq_examples() {
        let d = ccq_from_spectrum(&ks([0.45, 0.15, 0.2, 0.2])).unwrap();
        assert!((d.p[0][0] - 0.3).abs() < 1e-15 && (d.p[0][1] - 0.2).abs() < 1e-15);
        assert!((d.eve_overlap - 0.5).abs() < 1e-15);
        if let Some(EveStates::Pure(states)) = &d.eve_states {
            let ov = states[0].as_ref().unwrap().inner(states[3].as_ref().unwrap());
            assert!((ov.norm() - 0.5).abs() < 1e-15);
        } else {
            panic!("expected pure Eve states");
        }
        let d = ccq_from_spectrum(&ks([1.0, 0.0, 0.0, 0.0])).unwrap();
        assert!((d.p[0][0] - 0.5).abs() < 1e-15 && d.p[0][1] == 0.0);
        assert!((d.eve_overlap - 1.0).abs() < 1e-15);
        let d = ccq_from_spectrum(&ks([0.5, 0.5, 0.0, 0.0])).unwrap();
        assert!(d.eve_overlap.abs() < 1e-15);
        assert!(matches!(
            ccq_from_spectrum(&ks([0.0, 0.0, 0.6, 0.4])),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn full_state_matches_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let s = random_shielded_state::<f64, _>(&mut rng, [2, 2], false);
            let full = ccq_from_full_state(&assemble_density(&s), [2, 2]).unwrap();
            let spec = ccq_from_spectrum(&key_spectrum(&s)).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert!((full.p[i][j] - spec.p[i][j]).abs() < 1e-12);
                }
            }
            assert!((full.eve_overlap - spec.eve_overlap).abs() < 1e-9);
        }
    }

    #[test]
    fn product_key_leaves_eve_uncorrelated() {
        let key = HermitianOperator::projector(&bell_basis::<f64>()[0]);
        let shield = HermitianOperator::<f64>::diagonal(&[0.6, 0.4]);
        let rho = crate::operators::tensor(&key, &shield).unwrap();
        let d = ccq_from_full_state(&rho, [2, 1]).unwrap();
        assert!((d.eve_overlap - 1.0).abs() < 1e-12);
        assert!(d.disagreement().abs() < 1e-15);
        assert!(ccq_from_full_state(&HermitianOperator::<f64>::identity(8), [2, 1]).is_err());
    }

    #[test]
    fn twisting_preserves_spectrum_and_ccq() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s = random_shielded_state::<f64, _>(&mut rng, [2, 2], false);
        let rho = assemble_density(&s);
        assert_eq!(apply_twisting(&rho, &TwistingSpec::identity(4), [2, 2]).unwrap(), rho);
        let t = random_twisting::<f64, _>(&mut rng, 4);
        let twisted = apply_twisting(&rho, &t, [2, 2]).unwrap();
        for (a, b) in rho.eigenvalues().iter().zip(twisted.eigenvalues()) {
            assert!((a - b).abs() < 1e-12);
        }
        // The key marginal changes, the ccq data does not.
        let key_before = partial_trace(&rho, &[4, 4], &[0]).unwrap();
        let key_after = partial_trace(&twisted, &[4, 4], &[0]).unwrap();
        assert!(key_before.max_abs_diff(&key_after) > 1e-3);
        let c0 = ccq_from_full_state(&rho, [2, 2]).unwrap();
        let c1 = ccq_from_full_state(&twisted, [2, 2]).unwrap();
        assert!((c0.eve_overlap - c1.eve_overlap).abs() < 1e-9);
    }

    #[test]
    fn twisting_validation() {
        let mut bad = TwistingSpec::<f64>::identity(2).blocks;
        bad[1][(0, 0)] = c(2.0);
        assert!(TwistingSpec::new(bad).is_err());
        let rho = HermitianOperator::<f64>::identity(8).scale(0.125);
        assert!(apply_twisting(&rho, &TwistingSpec::identity(3), [2, 1]).is_err());
    }

    fn ccq(a: f64) -> CcqDescriptor<f64> {
        CcqDescriptor::new([[a / 2.0, (1.0 - a) / 2.0], [(1.0 - a) / 2.0, a / 2.0]], 0.5).unwrap()
    }

    #[test]
    fn block_stats_formula() {
        let s = ad_block_stats(&ccq(0.6), 2).unwrap();
        assert!((s.accept_prob - 0.52).abs() < 1e-15);
        assert!((s.post_error - 0.16 / 0.52).abs() < 1e-15);
        assert!((s.eve_overlap_effective - 0.25).abs() < 1e-15);
        let s = ad_block_stats(&ccq(0.6), 1).unwrap();
        assert!((s.accept_prob - 1.0).abs() < 1e-15 && (s.post_error - 0.4).abs() < 1e-15);
        let s = ad_block_stats(&ccq(1.0), 5).unwrap();
        assert!((s.accept_prob - 1.0).abs() < 1e-15 && s.post_error == 0.0);
        assert!(ad_block_stats(&ccq(0.6), 0).is_err());
    }

    #[test]
    fn monte_carlo_determinism_and_perfect_correlation() {
        let a = ad_monte_carlo(&ccq(0.6), 3, 20_000, 7).unwrap();
        let b = ad_monte_carlo(&ccq(0.6), 3, 20_000, 7).unwrap();
        assert_eq!(a, b);
        let c = ad_monte_carlo(&ccq(0.6), 3, 20_000, 8).unwrap();
        assert_ne!(a.accepted, c.accepted);
        let perfect = ad_monte_carlo(&ccq(1.0), 4, 10_000, 1).unwrap();
        assert_eq!(perfect.errors, 0);
        assert_eq!(perfect.accepted, 10_000);
        let one = ad_monte_carlo(&ccq(0.6), 1, 1000, 1).unwrap();
        assert_eq!(one.accepted, 1000);
        assert!(ad_monte_carlo(&ccq(0.6), 1, 0, 1).is_err());
    }

    #[test]
    fn security_check_examples() {
        let c = ad_security_check(&ccq_from_spectrum(&ks([0.6, 0.0, 0.2, 0.2])).unwrap()).unwrap();
        assert!(c.holds && (c.margin - (1.0 - 0.4 / 0.6)).abs() < 1e-12);
        let c = ad_security_check(&ccq_from_spectrum(&ks([0.45, 0.15, 0.2, 0.2])).unwrap()).unwrap();
        assert!(!c.holds && (c.margin - (0.25 - 2.0 / 3.0)).abs() < 1e-12);
        let perfect = CcqDescriptor::new([[0.5, 0.0], [0.0, 0.5]], 0.01).unwrap();
        assert!(ad_security_check(&perfect).unwrap().holds);
        let anti = CcqDescriptor::new([[0.0, 0.5], [0.5, 0.0]], 0.0).unwrap();
        assert!(matches!(ad_security_check(&anti), Err(Error::Degenerate(_))));
    }

    #[test]
    fn descriptor_validation() {
        assert!(CcqDescriptor::new([[0.5, 0.5], [0.5, 0.0]], 0.5).is_err());
        assert!(CcqDescriptor::new([[1.1, -0.1], [0.0, 0.0]], 0.5).is_err());
        assert!(CcqDescriptor::new([[0.5, 0.0], [0.0, 0.5]], 1.5).is_err());
    }
}
