//! Shielded two-qubit states `Σᵢ |φᵢ⟩⟨φᵢ| ⊗ σᵢ`, the named families, and the
//! key spectrum derived from shield-operator trace norms.
//!
//! Full density matrices are ordered `A ⊗ B ⊗ A' ⊗ B'`: the two key qubits
//! first, then the shield with Alice's part most significant.

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::operators::{
    bell_basis, c, check_limit, partial_transpose, permute_subsystems, sym_antisym_projectors, tensor_with_limit,
    trace_norm, CMatrix, HermitianOperator, KetVector, DEFAULT_MAX_DIM,
};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct ShieldedState<T: Scalar> {
    sigma: [HermitianOperator<T>; 4],
    shield_dims: [usize; 2],
}

/// The four trace norms every criterion is built from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShieldNorms<T> {
    /// ‖σ₁ + σ₂‖
    pub sum12: T,
    /// ‖σ₁ − σ₂‖
    pub diff12: T,
    /// ‖σ₃ + σ₄‖
    pub sum34: T,
    /// ‖σ₃ − σ₄‖
    pub diff34: T,
}

impl<T: Scalar> ShieldedState<T> {
    /// Validates dimensions, positivity of every `σᵢ` and unit total trace.
    pub fn new(sigma: [HermitianOperator<T>; 4], shield_dims: [usize; 2]) -> Result<Self> {
        for (i, s) in sigma.iter().enumerate() {
            let min = s.min_eigenvalue();
            if min < -T::tolerance() {
                return Err(validation(format!("sigma[{i}] is not positive semidefinite (min eigenvalue {min})")));
            }
        }
        Self::from_psd_parts(sigma, shield_dims)
    }

    /// Same checks as [`Self::new`] minus positivity, for constructions that
    /// are positive by construction.
    pub(crate) fn from_psd_parts(sigma: [HermitianOperator<T>; 4], shield_dims: [usize; 2]) -> Result<Self> {
        if shield_dims.contains(&0) {
            return Err(validation("shield_dims must be positive"));
        }
        let sd = shield_dims[0] * shield_dims[1];
        if let Some(i) = sigma.iter().position(|s| s.dim() != sd) {
            return Err(validation(format!(
                "sigma[{i}] has dimension {}, shield_dims {:?} require {sd}",
                sigma[i].dim(),
                shield_dims
            )));
        }
        let total = sigma.iter().fold(T::zero(), |acc, s| acc + s.trace());
        if (total - T::one()).abs() > T::tolerance() {
            return Err(validation(format!("shield traces must sum to 1, got {total}")));
        }
        Ok(Self { sigma, shield_dims })
    }

    /// Splits a Bell-block-diagonal density matrix back into shield operators.
    ///
    /// Fails with a consistency error if any cross block `⟨φᵢ|ρ|φⱼ⟩` (i ≠ j)
    /// has Frobenius norm above tolerance.
    pub fn from_density(rho: &HermitianOperator<T>, shield_dims: [usize; 2]) -> Result<Self> {
        let sd = shield_dims[0] * shield_dims[1];
        if rho.dim() != 4 * sd {
            return Err(validation(format!(
                "density of dimension {} does not match key (4) times shield {:?}",
                rho.dim(),
                shield_dims
            )));
        }
        let m = rho.matrix();
        let bell = bell_basis::<T>();
        let block = |i: usize, j: usize| {
            let mut out = CMatrix::zeros(sd, sd);
            for k in 0..4 {
                let bk = bell[i].amplitude(k).conj();
                if bk == c(T::zero()) {
                    continue;
                }
                for l in 0..4 {
                    let coef = bk * bell[j].amplitude(l);
                    if coef == c(T::zero()) {
                        continue;
                    }
                    out += m.view((k * sd, l * sd), (sd, sd)) * coef;
                }
            }
            out
        };
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    let off = block(i, j).norm();
                    if off > T::tolerance() {
                        return Err(Error::Consistency(format!(
                            "state is not Bell-block-diagonal: block ({i},{j}) has norm {off}"
                        )));
                    }
                }
            }
        }
        let sigma = [0, 1, 2, 3].map(|i| HermitianOperator::symmetrized(block(i, i)));
        Self::new(sigma, shield_dims)
    }

    pub fn sigma(&self, i: usize) -> &HermitianOperator<T> {
        &self.sigma[i]
    }

    pub fn sigmas(&self) -> &[HermitianOperator<T>; 4] {
        &self.sigma
    }

    pub fn shield_dims(&self) -> [usize; 2] {
        self.shield_dims
    }

    pub fn shield_dim(&self) -> usize {
        self.shield_dims[0] * self.shield_dims[1]
    }

    /// Dimension of the assembled density matrix.
    pub fn dim(&self) -> usize {
        4 * self.shield_dim()
    }

    /// Sums of positive blocks use the trace, which equals their trace norm.
    pub fn norms(&self) -> ShieldNorms<T> {
        let [s1, s2, s3, s4] = &self.sigma;
        ShieldNorms {
            sum12: s1.trace() + s2.trace(),
            diff12: trace_norm(&(s1 - s2)),
            sum34: s3.trace() + s4.trace(),
            diff34: trace_norm(&(s3 - s4)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct KeySpectrum<T: Scalar> {
    pub lambda: [T; 4],
}

impl<T: Scalar> KeySpectrum<T> {
    /// Requires `λ₁ ≥ λ₂ ≥ 0`, `λ₃ ≥ λ₄ ≥ 0` and unit sum, all within tolerance.
    pub fn new(lambda: [T; 4]) -> Result<Self> {
        let tol = T::tolerance();
        let [l1, l2, l3, l4] = lambda;
        if l2 < -tol || l4 < -tol || l1 < l2 - tol || l3 < l4 - tol {
            return Err(validation(format!(
                "key spectrum must satisfy l1 >= l2 >= 0 and l3 >= l4 >= 0, got {lambda:?}"
            )));
        }
        let sum = l1 + l2 + l3 + l4;
        if (sum - T::one()).abs() > tol {
            return Err(validation(format!("key spectrum must sum to 1, got {sum}")));
        }
        Ok(Self { lambda })
    }

    pub fn from_norms(n: &ShieldNorms<T>) -> Self {
        let half = T::lit(0.5);
        Self {
            lambda: [
                (n.sum12 + n.diff12) * half,
                (n.sum12 - n.diff12) * half,
                (n.sum34 + n.diff34) * half,
                (n.sum34 - n.diff34) * half,
            ],
        }
    }
}

/// `λ₁,₂ = (‖σ₁+σ₂‖ ± ‖σ₁−σ₂‖)/2`, `λ₃,₄ = (‖σ₃+σ₄‖ ± ‖σ₃−σ₄‖)/2`.
pub fn key_spectrum<T: Scalar>(s: &ShieldedState<T>) -> KeySpectrum<T> {
    KeySpectrum::from_norms(&s.norms())
}

/// `Σᵢ |φᵢ⟩⟨φᵢ| ⊗ σᵢ`.
pub fn assemble_density<T: Scalar>(s: &ShieldedState<T>) -> HermitianOperator<T> {
    let sd = s.shield_dim();
    let mut m = CMatrix::zeros(4 * sd, 4 * sd);
    for (phi, sigma) in bell_basis::<T>().iter().zip(&s.sigma) {
        let p = HermitianOperator::projector(phi);
        m += p.matrix().kronecker(sigma.matrix());
    }
    HermitianOperator::symmetrized(m)
}

/// The `⟨00|·|11⟩` key block of an `A B A' B'`-ordered operator.
pub fn key_block<T: Scalar>(rho: &HermitianOperator<T>, shield_dim: usize) -> CMatrix<T> {
    rho.matrix().view((0, 3 * shield_dim), (shield_dim, shield_dim)).into_owned()
}

/// Reorders `A B A' B'` to `(A A') ⊗ (B B')` and transposes Bob's side.
pub fn ppt_cut<T: Scalar>(rho: &HermitianOperator<T>, shield_dims: [usize; 2]) -> Result<HermitianOperator<T>> {
    let [da, db] = shield_dims;
    let reordered = permute_subsystems(rho, &[2, 2, da, db], &[0, 2, 1, 3])?;
    partial_transpose(&reordered, [2 * da, 2 * db])
}

/// PPT verdict across the `AA'|BB'` cut: `(ppt, min eigenvalue of the partial transpose)`.
pub fn state_ppt<T: Scalar>(s: &ShieldedState<T>) -> Result<(bool, T)> {
    let min = ppt_cut(&assemble_density(s), s.shield_dims)?.min_eigenvalue();
    Ok((min >= -T::tolerance(), min))
}

/// The two-parameter family built from symmetric/antisymmetric projectors:
/// `σ₁ = p((ρ_s+ρ_a)/2)^{⊗l}`, `σ₂ = p ρ_s^{⊗l}`, `σ₃ = σ₄ = (1/2 − p)((ρ_s+ρ_a)/2)^{⊗l}`.
///
/// Each of the `l` factors is a `d ⊗ d` operator split between A' and B', so
/// `shield_dims = [d^l, d^l]`.
pub fn horodecki_family<T: Scalar>(p: T, d: usize, l: usize) -> Result<ShieldedState<T>> {
    horodecki_family_with_limit(p, d, l, DEFAULT_MAX_DIM)
}

pub fn horodecki_family_with_limit<T: Scalar>(p: T, d: usize, l: usize, max_dim: usize) -> Result<ShieldedState<T>> {
    if !(p > T::zero() && p < T::lit(0.5)) {
        return Err(validation(format!("p must lie in (0, 1/2), got {p}")));
    }
    if d < 2 {
        return Err(validation(format!("d must be at least 2, got {d}")));
    }
    if l < 1 {
        return Err(validation("l must be at least 1"));
    }
    let side = u32::try_from(l)
        .ok()
        .and_then(|l| d.checked_pow(l))
        .ok_or(Error::Resource { required: usize::MAX, limit: max_dim })?;
    let total = side
        .checked_mul(side)
        .and_then(|x| x.checked_mul(4))
        .ok_or(Error::Resource { required: usize::MAX, limit: max_dim })?;
    check_limit(total, max_dim)?;

    let (rs, ra) = sym_antisym_projectors::<T>(d)?;
    let mixed = (&rs + &ra).scale(T::lit(0.5));
    let power = |base: &HermitianOperator<T>| -> Result<HermitianOperator<T>> {
        let mut acc = base.clone();
        for _ in 1..l {
            acc = tensor_with_limit(&acc, base, max_dim)?;
        }
        // (A'₁B'₁)(A'₂B'₂)… → A'₁…A'ₗ B'₁…B'ₗ
        let perm: Vec<usize> = (0..l).map(|k| 2 * k).chain((0..l).map(|k| 2 * k + 1)).collect();
        permute_subsystems(&acc, &vec![d; 2 * l], &perm)
    };
    let mixed_l = power(&mixed)?;
    let sym_l = power(&rs)?;
    let rest = T::lit(0.5) - p;
    let sigma = [mixed_l.scale(p), sym_l.scale(p), mixed_l.scale(rest), mixed_l.scale(rest)];
    ShieldedState::from_psd_parts(sigma, [side, side])
}

fn chi<T: Scalar>(sign: T) -> KetVector<T> {
    let r2 = T::lit(2.0).sqrt();
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let a = (two + sign * r2).sqrt() * half;
    let b = sign * (two - sign * r2).sqrt() * half;
    KetVector::from_dvector(nalgebra::DVector::from_vec(vec![c(a), c(T::zero()), c(T::zero()), c(b)]))
}

/// The 4 ⊗ 4 example with two-qubit shields:
/// `σ₁ = (q₁/4)(|00⟩⟨00| + |φ₃⟩⟨φ₃|)`, `σ₂ = (q₁/4)(|11⟩⟨11| + |φ₄⟩⟨φ₄|)`,
/// `σ₃ = (q₂/2)|χ₊⟩⟨χ₊|`, `σ₄ = (q₂/2)|χ₋⟩⟨χ₋|`.
pub fn example_4x4<T: Scalar>(q1: T, q2: T) -> Result<ShieldedState<T>> {
    if q1 < T::zero() || q2 < T::zero() {
        return Err(validation(format!("q1 and q2 must be nonnegative, got q1={q1}, q2={q2}")));
    }
    let tol = T::lit(1e-12).max(T::default_epsilon() * T::lit(8.0));
    if (q1 + q2 - T::one()).abs() > tol {
        return Err(validation(format!("q1 + q2 must equal 1, got q1={q1}, q2={q2}")));
    }
    let bell = bell_basis::<T>();
    let proj = |k: &KetVector<T>| HermitianOperator::projector(k);
    let e00 = proj(&KetVector::basis(4, 0));
    let e11 = proj(&KetVector::basis(4, 3));
    let quarter = q1 * T::lit(0.25);
    let half = q2 * T::lit(0.5);
    let sigma = [
        (&e00 + &proj(&bell[2])).scale(quarter),
        (&e11 + &proj(&bell[3])).scale(quarter),
        proj(&chi(T::one())).scale(half),
        proj(&chi(-T::one())).scale(half),
    ];
    ShieldedState::from_psd_parts(sigma, [2, 2])
}

/// `σᵢ^ε = (1−ε)σᵢ + ε·I/(4·dim_shield)`, i.e. white noise on the whole state.
pub fn add_white_noise<T: Scalar>(s: &ShieldedState<T>, eps: T) -> Result<ShieldedState<T>> {
    if !(eps >= T::zero() && eps <= T::one()) {
        return Err(validation(format!("noise eps must lie in [0, 1], got {eps}")));
    }
    let sd = s.shield_dim();
    let noise = HermitianOperator::identity(sd).scale(eps / T::from_usize(4 * sd).unwrap());
    let keep = T::one() - eps;
    let sigma = s.sigma.clone().map(|x| &x.scale(keep) + &noise);
    ShieldedState::from_psd_parts(sigma, s.shield_dims)
}

/// Numeric and closed-form PPT verdicts for the projector family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PptCheck<T> {
    pub numeric: bool,
    pub analytic: bool,
    /// Minimum eigenvalue of the partial transpose.
    pub min_eigenvalue: T,
    /// `min(1/3, (1 + (d/(d−1))^l)^{-1})`.
    pub bound: T,
}

impl<T> PptCheck<T> {
    pub fn agree(&self) -> bool {
        self.numeric == self.analytic
    }
}

/// `(1 + (d/(d−1))^l)^{-1}` capped at 1/3. Generic so it can be evaluated
/// exactly over rationals.
pub fn horodecki_ppt_bound<R>(d: u32, l: u32) -> R
where
    R: num_traits::Num + Clone + PartialOrd + num_traits::FromPrimitive,
{
    let one = R::one();
    let ratio = R::from_u32(d).unwrap() / R::from_u32(d - 1).unwrap();
    let pow = (0..l).fold(R::one(), |acc, _| acc * ratio.clone());
    let bound = one.clone() / (one.clone() + pow);
    let third = one / R::from_u32(3).unwrap();
    if bound < third {
        bound
    } else {
        third
    }
}

pub fn ppt_analytic_check<T: Scalar>(p: T, d: usize, l: usize) -> Result<PptCheck<T>> {
    ppt_analytic_check_with_limit(p, d, l, DEFAULT_MAX_DIM)
}

pub fn ppt_analytic_check_with_limit<T: Scalar>(p: T, d: usize, l: usize, max_dim: usize) -> Result<PptCheck<T>> {
    let s = horodecki_family_with_limit(p, d, l, max_dim)?;
    let (numeric, min) = state_ppt(&s)?;
    let bound: T = horodecki_ppt_bound(d as u32, l as u32);
    Ok(PptCheck {
        numeric,
        analytic: p <= bound,
        min_eigenvalue: min,
        bound,
    })
}

/// State description accepted by the CLI and by [`StateSpec::build`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct StateSpec<T: Scalar> {
    #[serde(flatten)]
    pub family: FamilySpec<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_eps: Option<T>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", bound = "T: Scalar")]
pub enum FamilySpec<T: Scalar> {
    Horodecki { p: T, d: usize, l: usize },
    #[serde(rename = "example4x4")]
    Example4x4 { q1: T, q2: T },
    Explicit {
        sigma: Vec<HermitianOperator<T>>,
        shield_dims: [usize; 2],
    },
}

impl<T: Scalar> StateSpec<T> {
    pub fn build(&self, max_dim: usize) -> Result<ShieldedState<T>> {
        let s = match &self.family {
            FamilySpec::Horodecki { p, d, l } => horodecki_family_with_limit(*p, *d, *l, max_dim)?,
            FamilySpec::Example4x4 { q1, q2 } => example_4x4(*q1, *q2)?,
            FamilySpec::Explicit { sigma, shield_dims } => {
                let sigma: [HermitianOperator<T>; 4] = sigma
                    .clone()
                    .try_into()
                    .map_err(|v: Vec<_>| validation(format!("sigma must hold 4 matrices, got {}", v.len())))?;
                check_limit(4 * shield_dims[0] * shield_dims[1], max_dim)?;
                ShieldedState::new(sigma, *shield_dims)?
            }
        };
        match self.noise_eps {
            Some(eps) => add_white_noise(&s, eps),
            None => Ok(s),
        }
    }
}
