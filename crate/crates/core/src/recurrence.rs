//! Recurrence protocol on the key qubits.
//!
//! One round takes two copies of the current state, applies CNOT on
//! `A₁→A₂` and `B₁→B₂`, measures `A₂B₂` in the computational basis and keeps
//! the pair when both outcomes agree. Both shield pairs are kept, so the
//! shield dimension squares every round. After `k` rounds the key block
//! matches the closed-form sequence at `m = 2^k`.

use serde::Serialize;

use crate::error::{validation, Error, Result};
use crate::operators::{c, check_limit, trace_norm, CMatrix, HermitianOperator, DEFAULT_MAX_DIM};
use crate::scalar::Scalar;
use crate::shielded::{assemble_density, ShieldNorms, ShieldedState};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecurrenceTrace<T> {
    /// Copy-count exponent of each entry (`m` in the closed form).
    pub effective_m: Vec<u64>,
    /// `‖⟨00|σ_m|11⟩‖`.
    pub r: Vec<T>,
    /// Post-selection probability per round; empty for closed-form traces.
    pub success_prob: Vec<T>,
    /// Set when iteration stopped early at this round because of the dimension limit.
    pub truncated_at: Option<usize>,
}

/// `r_m = b^m / (2a^m + 2c^m)` evaluated without overflow.
pub fn closed_form_r<T: Scalar>(n: &ShieldNorms<T>, m: u64) -> T {
    let scale = n.sum12.max(n.sum34);
    if scale <= T::zero() {
        return T::zero();
    }
    let pow = |x: T| -> T {
        let ratio = x / scale;
        match i32::try_from(m) {
            Ok(e) => ratio.powi(e),
            Err(_) => ratio.powf(T::from_u64(m).unwrap()),
        }
    };
    pow(n.diff12) / (T::lit(2.0) * (pow(n.sum12) + pow(n.sum34)))
}

pub fn closed_form_sequence<T: Scalar>(s: &ShieldedState<T>, m_max: u64) -> Result<RecurrenceTrace<T>> {
    if m_max < 1 {
        return Err(validation("m_max must be at least 1"));
    }
    let n = s.norms();
    Ok(RecurrenceTrace {
        effective_m: (1..=m_max).collect(),
        r: (1..=m_max).map(|m| closed_form_r(&n, m)).collect(),
        success_prob: Vec::new(),
        truncated_at: None,
    })
}

/// `r` of a state: trace norm of its `⟨00|·|11⟩` key block, `‖σ₁−σ₂‖/2`.
pub fn key_block_norm<T: Scalar>(s: &ShieldedState<T>) -> T {
    trace_norm(&(s.sigma(0) - s.sigma(1))) * T::lit(0.5)
}

/// One two-copy round; returns the normalized post-selected state and the
/// probability that the two measured outcomes agree.
pub fn explicit_round<T: Scalar>(s: &ShieldedState<T>) -> Result<(ShieldedState<T>, T)> {
    explicit_round_with_limit(s, DEFAULT_MAX_DIM)
}

pub fn explicit_round_with_limit<T: Scalar>(s: &ShieldedState<T>, max_dim: usize) -> Result<(ShieldedState<T>, T)> {
    let [da, db] = s.shield_dims();
    let sd = s.shield_dim();
    let out_shield = [da * da, db * db];
    let out_sd = sd * sd;
    check_limit(4usize.saturating_mul(out_sd), max_dim)?;

    let rho = assemble_density(s);
    let src = rho.matrix();
    // Entry of one copy at key (a, b) and shield (α, β), rows and columns alike.
    let idx = |a: usize, b: usize, alpha: usize, beta: usize| (2 * a + b) * sd + alpha * db + beta;
    let out_idx = |a: usize, b: usize, a1: usize, a2: usize, b1: usize, b2: usize| {
        (2 * a + b) * out_sd + (a1 * da + a2) * (db * db) + b1 * db + b2
    };

    // After the CNOTs, outcome x on both targets means target bits a⊕x, b⊕x
    // before the gates; summing x ∈ {0, 1} keeps both agreeing branches.
    let mut out = CMatrix::zeros(4 * out_sd, 4 * out_sd);
    for (a, b, ap, bp) in key_quads() {
        if (a ^ b) != (ap ^ bp) {
            // Cross-parity blocks vanish for Bell-diagonal inputs.
            continue;
        }
        for x in 0..2 {
            for al1 in 0..da {
                for al2 in 0..da {
                    for be1 in 0..db {
                        for be2 in 0..db {
                            let row = out_idx(a, b, al1, al2, be1, be2);
                            for al1p in 0..da {
                                for be1p in 0..db {
                                    let first = src[(idx(a, b, al1, be1), idx(ap, bp, al1p, be1p))];
                                    if first == c(T::zero()) {
                                        continue;
                                    }
                                    for al2p in 0..da {
                                        for be2p in 0..db {
                                            let second = src[(
                                                idx(a ^ x, b ^ x, al2, be2),
                                                idx(ap ^ x, bp ^ x, al2p, be2p),
                                            )];
                                            out[(row, out_idx(ap, bp, al1p, al2p, be1p, be2p))] += first * second;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let unnormalized = HermitianOperator::symmetrized(out);
    let success = unnormalized.trace();
    if success <= T::zero() {
        return Err(Error::Degenerate("post-selection succeeds with probability zero".into()));
    }
    let next = ShieldedState::from_density(&unnormalized.scale(T::one() / success), out_shield)?;
    Ok((next, success))
}

fn key_quads() -> impl Iterator<Item = (usize, usize, usize, usize)> {
    (0..16).map(|i| ((i >> 3) & 1, (i >> 2) & 1, (i >> 1) & 1, i & 1))
}

/// Applies `k` rounds, pairing the output with itself each time.
///
/// Every recorded `r` is cross-checked against the closed form at `m = 2^round`.
/// When a round would exceed `max_dim` the trace stops there with
/// `truncated_at` set.
pub fn iterate<T: Scalar>(s: &ShieldedState<T>, k: usize, max_dim: usize) -> Result<RecurrenceTrace<T>> {
    if k < 1 {
        return Err(validation("number of rounds k must be at least 1"));
    }
    let norms = s.norms();
    let mut trace = RecurrenceTrace {
        effective_m: Vec::new(),
        r: Vec::new(),
        success_prob: Vec::new(),
        truncated_at: None,
    };
    let mut current = s.clone();
    for round in 1..=k {
        let (next, p) = match explicit_round_with_limit(&current, max_dim) {
            Ok(v) => v,
            Err(Error::Resource { .. }) => {
                trace.truncated_at = Some(round);
                break;
            }
            Err(e) => return Err(e),
        };
        let m = 1u64.checked_shl(round as u32).unwrap_or(u64::MAX);
        let r = key_block_norm(&next);
        let expected = closed_form_r(&norms, m);
        if (r - expected).abs() > T::tolerance() {
            return Err(Error::Consistency(format!(
                "round {round}: simulated r = {r} but closed form gives {expected}"
            )));
        }
        trace.effective_m.push(m);
        trace.r.push(r);
        trace.success_prob.push(p);
        current = next;
    }
    Ok(trace)
}

/// True iff some `r_m` with `m ≤ m_max` comes within `tol` of 1/2.
pub fn converges_to_private<T: Scalar>(s: &ShieldedState<T>, tol: T, m_max: u64) -> Result<bool> {
    if tol <= T::zero() {
        return Err(validation("tol must be positive"));
    }
    let n = s.norms();
    let target = T::lit(0.5) - tol;
    Ok((1..=m_max).any(|m| closed_form_r(&n, m) >= target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shielded::{example_4x4, horodecki_family};

    #[test]
    fn closed_form_examples() {
        let s = example_4x4::<f64>(0.6, 0.4).unwrap();
        let t = closed_form_sequence(&s, 60).unwrap();
        assert!((t.r[0] - 0.3).abs() < 1e-12);
        assert!((t.r[1] - 0.36 / (2.0 * 0.36 + 2.0 * 0.16)).abs() < 1e-12);
        assert!((t.r[59] - 0.5).abs() < 1e-9);

        let s = horodecki_family::<f64>(0.4, 2, 1).unwrap();
        let t = closed_form_sequence(&s, 40).unwrap();
        assert!(t.r.windows(2).all(|w| w[1] < w[0]));
        assert!(t.r[39] < 1e-10);
        assert!(closed_form_sequence(&s, 0).is_err());
    }

    #[test]
    fn closed_form_survives_huge_exponents() {
        let s = example_4x4::<f64>(0.6, 0.4).unwrap();
        let r = closed_form_r(&s.norms(), 1 << 40);
        assert!((r - 0.5).abs() < 1e-15);
        let s = horodecki_family::<f64>(0.4, 2, 1).unwrap();
        assert_eq!(closed_form_r(&s.norms(), 100_000), 0.0);
    }

    #[test]
    fn one_round_matches_closed_form() {
        let s = example_4x4::<f64>(0.6, 0.4).unwrap();
        let (next, p) = explicit_round(&s).unwrap();
        assert_eq!(next.shield_dims(), [4, 4]);
        assert!((key_block_norm(&next) - 0.36 / 1.04).abs() < 1e-12);
        // Agreement probability (tr σ₁+σ₂)² + (tr σ₃+σ₄)².
        assert!((p - 0.52).abs() < 1e-12);
    }

    #[test]
    fn error_free_key_stays_error_free() {
        let mut s = example_4x4::<f64>(1.0, 0.0).unwrap();
        for _ in 0..2 {
            let (next, p) = explicit_round(&s).unwrap();
            assert!((p - 1.0).abs() < 1e-12);
            assert!(next.sigma(2).trace().abs() < 1e-15 && next.sigma(3).trace().abs() < 1e-15);
            s = next;
        }
    }

    #[test]
    fn fully_mixed_key_gives_zero() {
        let q = HermitianOperator::<f64>::identity(2).scale(0.125);
        let s = ShieldedState::new([q.clone(), q.clone(), q.clone(), q], [2, 1]).unwrap();
        let (next, _) = explicit_round(&s).unwrap();
        assert!(key_block_norm(&next) < 1e-15);
    }

    #[test]
    fn iterate_rounds() {
        let s = example_4x4::<f64>(0.6, 0.4).unwrap();
        let t = iterate(&s, 2, DEFAULT_MAX_DIM).unwrap();
        assert_eq!(t.effective_m, vec![2, 4]);
        assert!(t.truncated_at.is_none());
        let n = s.norms();
        assert!((t.r[1] - closed_form_r(&n, 4)).abs() < 1e-9);
        assert!(t.r[1] > t.r[0]);

        let t = iterate(&s, 3, DEFAULT_MAX_DIM).unwrap();
        assert_eq!(t.truncated_at, Some(3));
        assert_eq!(t.r.len(), 2);
        assert!(iterate(&s, 0, DEFAULT_MAX_DIM).is_err());
    }

    #[test]
    fn iterate_decreasing_for_family() {
        let s = horodecki_family::<f64>(0.4, 2, 1).unwrap();
        let t = iterate(&s, 2, DEFAULT_MAX_DIM).unwrap();
        let r1 = key_block_norm(&s);
        assert!(r1 > t.r[0] && t.r[0] > t.r[1]);
    }

    #[test]
    fn convergence_detection() {
        let s = example_4x4::<f64>(0.6, 0.4).unwrap();
        assert!(converges_to_private(&s, 1e-3, 1000).unwrap());
        let s = horodecki_family::<f64>(0.28, 2, 5).unwrap();
        assert!(!converges_to_private(&s, 1e-3, 10_000).unwrap());
        // Orthogonal shields without entanglement.
        let s = example_4x4::<f64>(0.45, 0.55).unwrap();
        assert!(!converges_to_private(&s, 1e-3, 10_000).unwrap());
        assert!(converges_to_private(&s, 0.0, 10).is_err());
    }
}
