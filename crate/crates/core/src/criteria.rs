//! Distillability predicates built from the shield norms
//! `a = ‖σ₁+σ₂‖`, `b = ‖σ₁−σ₂‖`, `c = ‖σ₃+σ₄‖`.
//!
//! Every predicate reports a margin; "greater than" conditions hold only when
//! the margin exceeds the tolerance, so boundary states come out false with a
//! near-zero margin.

use num_traits::Num;
use serde::Serialize;

use crate::error::{validation, Error, Result};
use crate::operators::DEFAULT_MAX_DIM;
use crate::scalar::Scalar;
use crate::shielded::{add_white_noise, state_ppt, KeySpectrum, ShieldNorms, ShieldedState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Condition<T> {
    pub holds: bool,
    pub margin: T,
}

impl<T: Scalar> Condition<T> {
    fn strict(margin: T, tol: T) -> Self {
        Self {
            holds: margin > tol,
            margin,
        }
    }
}

/// Entanglement of the twisted key part: `‖σ₁−σ₂‖ > ‖σ₃+σ₄‖`.
pub fn entanglement_condition<T: Scalar>(s: &ShieldedState<T>) -> Condition<T> {
    entanglement_from_norms(&s.norms(), T::tolerance())
}

pub fn entanglement_from_norms<T: Scalar>(n: &ShieldNorms<T>, tol: T) -> Condition<T> {
    Condition::strict(n.diff12 - n.sum34, tol)
}

/// Recurrence-protocol distillability: `σ₁ ⊥ σ₂` (relative to their traces)
/// together with entanglement. The margin is `tr(σ₁σ₂)`; smaller is better.
pub fn recurrence_condition<T: Scalar>(s: &ShieldedState<T>) -> Condition<T> {
    recurrence_with(s, &s.norms(), T::tolerance())
}

fn recurrence_with<T: Scalar>(s: &ShieldedState<T>, n: &ShieldNorms<T>, tol: T) -> Condition<T> {
    let overlap = s.sigma(0).trace_product(s.sigma(1));
    let scale = s.sigma(0).trace() * s.sigma(1).trace();
    Condition {
        holds: overlap <= tol * scale && entanglement_from_norms(n, tol).holds,
        margin: overlap,
    }
}

/// Advantage-distillation condition `‖σ₁−σ₂‖² > ‖σ₃+σ₄‖·‖σ₁+σ₂‖`.
pub fn ad_condition<T: Scalar>(s: &ShieldedState<T>) -> Condition<T> {
    ad_from_norms(&s.norms(), T::tolerance())
}

pub fn ad_from_norms<T: Scalar>(n: &ShieldNorms<T>, tol: T) -> Condition<T> {
    Condition::strict(n.diff12 * n.diff12 - n.sum34 * n.sum12, tol)
}

/// The same condition on a key spectrum: `(λ₁−λ₂)² > (λ₃+λ₄)(λ₁+λ₂)`.
pub fn ad_condition_lambda<T: Scalar>(k: &KeySpectrum<T>) -> Condition<T> {
    let [l1, l2, l3, l4] = k.lambda;
    let d = l1 - l2;
    Condition::strict(d * d - (l3 + l4) * (l1 + l2), T::tolerance())
}

/// Entanglement and AD thresholds `p_j = ½[(1 − 2^{-l})^j + 1]^{-1}` of the
/// projector family, for `j = 1, 2`.
///
/// Pure field arithmetic, so an exact rational type gives exact thresholds.
pub fn thresholds_horodecki<R: Num + Clone>(l: u32) -> (R, R) {
    let one = R::one();
    let two = one.clone() + one.clone();
    let pow2 = (0..l).fold(R::one(), |acc, _| acc * two.clone());
    let k = one.clone() - one.clone() / pow2;
    let p = |kj: R| one.clone() / (two.clone() * (kj + one.clone()));
    (p(k.clone()), p(k.clone() * k))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseCondition<T> {
    /// AD condition evaluated on the noisy state itself.
    pub exact: Condition<T>,
    /// `‖σ₁−σ₂‖² > ‖σ₃+σ₄‖‖σ₁+σ₂‖ + ε/(1−ε)²` on the noiseless norms.
    pub sufficient: Condition<T>,
}

fn check_eps<T: Scalar>(eps: T) -> Result<()> {
    if eps >= T::zero() && eps < T::one() {
        Ok(())
    } else {
        Err(validation(format!("noise eps must lie in [0, 1), got {eps}")))
    }
}

fn noise_penalty<T: Scalar>(eps: T) -> T {
    let keep = T::one() - eps;
    eps / (keep * keep)
}

pub fn noise_condition<T: Scalar>(s: &ShieldedState<T>, eps: T) -> Result<NoiseCondition<T>> {
    check_eps(eps)?;
    let exact = ad_condition(&add_white_noise(s, eps)?);
    let n = s.norms();
    let margin = n.diff12 * n.diff12 - n.sum34 * n.sum12 - noise_penalty(eps);
    Ok(NoiseCondition {
        exact,
        sufficient: Condition::strict(margin, T::tolerance()),
    })
}

/// Smallest AD-distillable `p` of the projector family under white noise,
/// using the closed form `(p₂/2)[1 + (1 − (2/p₂)·ε/(1−ε)²)^{1/2}]`.
///
/// `None` when the discriminant is negative.
pub fn noise_threshold_horodecki<T: Scalar>(l: u32, eps: T) -> Result<Option<T>> {
    if l < 1 {
        return Err(validation("l must be at least 1"));
    }
    check_eps(eps)?;
    let (_, p2): (T, T) = thresholds_horodecki(l);
    let disc = T::one() - T::lit(2.0) / p2 * noise_penalty(eps);
    Ok((disc >= T::zero()).then(|| p2 * T::lit(0.5) * (T::one() + disc.sqrt())))
}

/// Noise level beyond which [`noise_threshold_horodecki`] returns `None`:
/// the root of `ε/(1−ε)² = p₂/2` in `[0, 1)`.
pub fn noise_threshold_eps_star<T: Scalar>(l: u32) -> T {
    let (_, p2): (T, T) = thresholds_horodecki(l);
    (T::one() + p2 - (T::one() + T::lit(2.0) * p2).sqrt()) / p2
}

/// Thresholds in `p` for the projector family under noise `ε`, from the
/// quadratic `p² − p₂p − p₂δ/2 > 0` with the given penalty `δ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseThresholds<T> {
    /// [`noise_threshold_horodecki`].
    pub closed_form: Option<T>,
    /// Root of the sufficient condition with penalty `ε/(1−ε)²`.
    pub sufficient: Option<T>,
    /// Root of the exact noisy AD condition, penalty `ε(2−ε)/(4(1−ε)²)`.
    pub exact: Option<T>,
}

pub fn noise_thresholds_horodecki<T: Scalar>(l: u32, eps: T) -> Result<NoiseThresholds<T>> {
    let closed_form = noise_threshold_horodecki(l, eps)?;
    let (_, p2): (T, T) = thresholds_horodecki(l);
    let root = |delta: T| {
        let p = p2 * T::lit(0.5) * (T::one() + (T::one() + T::lit(2.0) * delta / p2).sqrt());
        (p < T::lit(0.5)).then_some(p)
    };
    let keep = T::one() - eps;
    Ok(NoiseThresholds {
        closed_form,
        sufficient: root(noise_penalty(eps)),
        exact: root(eps * (T::lit(2.0) - eps) / (T::lit(4.0) * keep * keep)),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Verdict<T> {
    pub entangled: bool,
    /// ‖σ₁−σ₂‖ − ‖σ₃+σ₄‖
    pub entangled_margin: T,
    pub recurrence_ok: bool,
    /// tr(σ₁σ₂)
    pub recurrence_margin: T,
    pub ad_ok: bool,
    /// ‖σ₁−σ₂‖² − ‖σ₃+σ₄‖‖σ₁+σ₂‖
    pub ad_margin: T,
    /// `None` when the assembled state exceeds the dimension limit.
    pub ppt: Option<bool>,
    /// Minimum eigenvalue of the partial transpose across AA'|BB'.
    pub ppt_margin: Option<T>,
}

#[derive(Clone, Copy, Debug)]
pub struct VerdictOptions<T> {
    pub tolerance: T,
    pub max_dim: usize,
}

impl<T: Scalar> Default for VerdictOptions<T> {
    fn default() -> Self {
        Self {
            tolerance: T::tolerance(),
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

pub fn full_verdict<T: Scalar>(s: &ShieldedState<T>) -> Verdict<T> {
    full_verdict_with(s, &VerdictOptions::default()).expect("default options do not fail")
}

pub fn full_verdict_with<T: Scalar>(s: &ShieldedState<T>, opts: &VerdictOptions<T>) -> Result<Verdict<T>> {
    let n = s.norms();
    let ent = entanglement_from_norms(&n, opts.tolerance);
    let rec = recurrence_with(s, &n, opts.tolerance);
    let ad = ad_from_norms(&n, opts.tolerance);
    let (ppt, ppt_margin) = if s.dim() > opts.max_dim {
        (None, None)
    } else {
        match state_ppt(s) {
            Ok((_, min)) => (Some(min >= -opts.tolerance), Some(min)),
            Err(Error::Resource { .. }) => (None, None),
            Err(e) => return Err(e),
        }
    };
    Ok(Verdict {
        entangled: ent.holds,
        entangled_margin: ent.margin,
        recurrence_ok: rec.holds,
        recurrence_margin: rec.margin,
        ad_ok: ad.holds,
        ad_margin: ad.margin,
        ppt,
        ppt_margin,
    })
}
