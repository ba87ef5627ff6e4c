//! Damping polynomials in three equivalent coefficient bases.
//!
//! A damping law of nonlinearity order `n` is a degree-`2n` even polynomial
//! multiplying the velocity. It can be written in the physical basis `a`
//! (coefficients of `x^{2j}`), the canonical microscopic basis `m`, or the
//! velocity-family basis `β` (coefficients of `ẋ^{2j}`). The bases are related
//! by exact integer factors:
//!
//! ```text
//! a_j = m_j · j / C(2j, j+1)            (a_0 = m_0)
//! β_j = m_j · j / (C(2j, j+1) · (2j+1)) (β_0 = m_0)
//! ```
//!
//! where `C(2j, j+1)/j = C(2j, j)/(j+1)` is the j-th Catalan number. The
//! toolkit always normalizes to the `m` basis internally; the radial amplitude
//! polynomial `P(u) = Σ m_j u^j` with `u = |α|²` then governs the limit-cycle
//! structure.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported nonlinearity order. The basis transforms use exact
/// integer binomial coefficients, which stay well inside `i64`/`f64` exact
/// range up to this order.
pub const MAX_ORDER: usize = 15;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("coefficient vector must have length n+1 with n >= 1 (got length {0})")]
    InvalidOrder(usize),
    #[error("nonlinearity order {0} exceeds the supported maximum {MAX_ORDER}")]
    OrderTooLarge(usize),
    #[error("leading coefficient is zero: polynomial degree would be degenerate")]
    DegenerateDegree,
    #[error("coefficient {index} is not finite")]
    NonFinite { index: usize },
    #[error("invalid system parameter {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("damping spec has n = {spec_n} but system parameters have n = {params_n}")]
    OrderMismatch { spec_n: usize, params_n: usize },
}

/// Which variable the damping polynomial depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Damping polynomial in the position `x` (Liénard form).
    Position,
    /// Damping polynomial in the velocity `ẋ` (Rayleigh form).
    Velocity,
}

fn validate_coeffs(coeffs: &[f64]) -> Result<usize, ModelError> {
    if coeffs.len() < 2 {
        return Err(ModelError::InvalidOrder(coeffs.len()));
    }
    let n = coeffs.len() - 1;
    if n > MAX_ORDER {
        return Err(ModelError::OrderTooLarge(n));
    }
    for (index, c) in coeffs.iter().enumerate() {
        if !c.is_finite() {
            return Err(ModelError::NonFinite { index });
        }
    }
    if coeffs[n] == 0.0 {
        return Err(ModelError::DegenerateDegree);
    }
    Ok(n)
}

/// `C(n, k)` in exact integer arithmetic.
fn binomial(n: u64, k: u64) -> i64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: i64 = 1;
    for i in 0..k {
        // Multiply before divide keeps every intermediate an exact integer.
        acc = acc * (n - i) as i64 / (i + 1) as i64;
    }
    acc
}

/// `C(2j, j+1)/j = C(2j, j)/(j+1)`, the j-th Catalan number.
fn catalan(j: u64) -> f64 {
    (binomial(2 * j, j) / (j as i64 + 1)) as f64
}

/// Map physical coefficients `a` to microscopic coefficients `m`:
/// `m_j = a_j · C(2j, j+1)/j` for `j ≥ 1`, `m_0 = a_0`.
pub fn m_from_a(a: &[f64]) -> Result<Vec<f64>, ModelError> {
    let n = validate_coeffs(a)?;
    Ok((0..=n)
        .map(|j| if j == 0 { a[0] } else { a[j] * catalan(j as u64) })
        .collect())
}

/// Inverse of [`m_from_a`]: `a_j = m_j · j / C(2j, j+1)`, `a_0 = m_0`.
pub fn a_from_m(m: &[f64]) -> Result<Vec<f64>, ModelError> {
    let n = validate_coeffs(m)?;
    Ok((0..=n)
        .map(|j| if j == 0 { m[0] } else { m[j] / catalan(j as u64) })
        .collect())
}

/// Map velocity-family coefficients `β` to microscopic coefficients:
/// `m_j = β_j · C(2j, j+1) · (2j+1) / j`, `m_0 = β_0`.
pub fn m_from_beta(beta: &[f64]) -> Result<Vec<f64>, ModelError> {
    let n = validate_coeffs(beta)?;
    Ok((0..=n)
        .map(|j| {
            if j == 0 {
                beta[0]
            } else {
                beta[j] * catalan(j as u64) * (2 * j + 1) as f64
            }
        })
        .collect())
}

/// Inverse of [`m_from_beta`]: `β_j = m_j · j / (C(2j, j+1) · (2j+1))`.
pub fn beta_from_m(m: &[f64]) -> Result<Vec<f64>, ModelError> {
    let n = validate_coeffs(m)?;
    Ok((0..=n)
        .map(|j| {
            if j == 0 {
                m[0]
            } else {
                m[j] / (catalan(j as u64) * (2 * j + 1) as f64)
            }
        })
        .collect())
}

/// A damping law, normalized to the microscopic `m` basis.
///
/// Immutable after construction; the constructors are the only way to build
/// one, so `m_n ≠ 0` and `n ≥ 1` always hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DampingSpec {
    family: Family,
    n: usize,
    m: Vec<f64>,
}

impl DampingSpec {
    /// Build from microscopic coefficients `[m_0, …, m_n]`, lowest degree
    /// first.
    pub fn from_m(family: Family, m: Vec<f64>) -> Result<Self, ModelError> {
        let n = validate_coeffs(&m)?;
        Ok(Self { family, n, m })
    }

    /// Build from physical coefficients `[a_0, …, a_n]`.
    pub fn from_a(family: Family, a: &[f64]) -> Result<Self, ModelError> {
        Self::from_m(family, m_from_a(a)?)
    }

    /// Build from velocity-family coefficients `[β_0, …, β_n]`.
    pub fn from_beta(family: Family, beta: &[f64]) -> Result<Self, ModelError> {
        Self::from_m(family, m_from_beta(beta)?)
    }

    /// Build a spec whose radial polynomial is
    /// `leading·Π_i (u − roots[i])`, i.e. with prescribed cycle radii
    /// `√roots[i]`.
    pub fn from_radial_roots(
        family: Family,
        roots: &[f64],
        leading: f64,
    ) -> Result<Self, ModelError> {
        let mut m = vec![0.0; roots.len() + 1];
        m[0] = leading;
        let mut degree = 0;
        for &root in roots {
            degree += 1;
            m[degree] = m[degree - 1];
            for j in (1..degree).rev() {
                m[j] = m[j - 1] - root * m[j];
            }
            m[0] *= -root;
        }
        Self::from_m(family, m)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Highest nonlinearity order; the damping polynomial has degree `2n`.
    pub fn order(&self) -> usize {
        self.n
    }

    /// Microscopic coefficients `[m_0, …, m_n]`.
    pub fn m(&self) -> &[f64] {
        &self.m
    }

    /// Leading microscopic coefficient `m_n` (nonzero by construction).
    pub fn leading(&self) -> f64 {
        self.m[self.n]
    }

    /// Physical coefficients `[a_0, …, a_n]`.
    pub fn a(&self) -> Vec<f64> {
        a_from_m(&self.m).expect("validated at construction")
    }

    /// Velocity-family coefficients `[β_0, …, β_n]`.
    pub fn beta(&self) -> Vec<f64> {
        beta_from_m(&self.m).expect("validated at construction")
    }

    /// Coefficients of the polynomial multiplying the velocity in the
    /// second-order equation: `a` for the Position family, `β` for Velocity.
    pub fn phase_coeffs(&self) -> Vec<f64> {
        match self.family {
            Family::Position => self.a(),
            Family::Velocity => self.beta(),
        }
    }
}

/// Physical constants of a run. `θ = K·T` with `ħ = K = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega0: f64,
    /// Damping rate `γ_{n+1}`.
    pub gamma: f64,
    pub n: usize,
    pub theta: f64,
}

impl SystemParams {
    pub fn new(omega0: f64, gamma: f64, n: usize, theta: f64) -> Result<Self, ModelError> {
        if !omega0.is_finite() || omega0 <= 0.0 {
            return Err(ModelError::InvalidParameter {
                name: "omega0",
                value: omega0,
            });
        }
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(ModelError::InvalidParameter {
                name: "gamma",
                value: gamma,
            });
        }
        if !theta.is_finite() || theta < 0.0 {
            return Err(ModelError::InvalidParameter {
                name: "theta",
                value: theta,
            });
        }
        if n < 1 {
            return Err(ModelError::InvalidOrder(n + 1));
        }
        Ok(Self {
            omega0,
            gamma,
            n,
            theta,
        })
    }

    /// Error unless `spec.n == self.n`.
    pub fn check_spec(&self, spec: &DampingSpec) -> Result<(), ModelError> {
        if spec.order() != self.n {
            return Err(ModelError::OrderMismatch {
                spec_n: spec.order(),
                params_n: self.n,
            });
        }
        Ok(())
    }

    /// Oscillation period `2π/ω₀`.
    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.omega0
    }
}

/// Radial amplitude polynomial `P(u) = Σ_j p_j u^j`, `u = |α|²`, with
/// `p_j = m_j` for the generating spec.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialPolynomial {
    coeffs: Vec<f64>,
}

impl RadialPolynomial {
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    /// `P'(u)`.
    pub fn eval_derivative(&self, u: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (j, &c)| acc * u + j as f64 * c)
    }
}

/// The radial polynomial of a damping spec (identity embedding of `m`).
pub fn radial_polynomial(spec: &DampingSpec) -> RadialPolynomial {
    RadialPolynomial {
        coeffs: spec.m().to_vec(),
    }
}

/// `ε = γ_{n+1}/m_n`, the conventional damping prefactor. Derived, never
/// stored.
pub fn epsilon_of(params: &SystemParams, spec: &DampingSpec) -> f64 {
    params.gamma / spec.leading()
}

/// `γ_{n+1} = ε·m_n`, for building configurations from quoted `ε` values.
pub fn gamma_for_epsilon(epsilon: f64, spec: &DampingSpec) -> f64 {
    epsilon * spec.leading()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn m_from_a_van_der_pol_is_identity() {
        assert_eq!(m_from_a(&[-1.0, 1.0]).unwrap(), vec![-1.0, 1.0]);
    }

    #[test]
    fn m_from_a_table_row() {
        // f(x)/ε = x⁴ + x² − 1 maps to m = (−1, 1, 2).
        assert_eq!(m_from_a(&[-1.0, 1.0, 1.0]).unwrap(), vec![-1.0, 1.0, 2.0]);
    }

    #[test]
    fn m_from_a_cubic_factor() {
        // j = 3 factor: C(6,4)/3 = 5.
        assert_eq!(
            m_from_a(&[0.0, 0.0, 0.0, 1.0]).unwrap(),
            vec![0.0, 0.0, 0.0, 5.0]
        );
    }

    #[test]
    fn a_from_m_examples() {
        assert_eq!(a_from_m(&[-1.0, 1.0]).unwrap(), vec![-1.0, 1.0]);
        assert_eq!(a_from_m(&[-1.0, 0.0, 2.0]).unwrap(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(a_from_m(&[0.0, 0.0, -4.0]).unwrap(), vec![0.0, 0.0, -2.0]);
    }

    #[test]
    fn m_from_beta_examples() {
        assert_eq!(
            m_from_beta(&[-1.0, -1.0, 1.0, 1.0]).unwrap(),
            vec![-1.0, -3.0, 10.0, 35.0]
        );
        assert_eq!(m_from_beta(&[-1.0, 1.0]).unwrap(), vec![-1.0, 3.0]);
        assert_eq!(m_from_beta(&[0.0, 1.0]).unwrap(), vec![0.0, 3.0]);
    }

    #[test]
    fn table_rows_reproduce_exactly() {
        // (m_2, m_1, m_0) rows and their f(x)/ε coefficients.
        let rows = [
            ([2.0, 1.0, -1.0], [1.0, 1.0, -1.0]),
            ([2.0, -1.0, 0.0], [1.0, -1.0, 0.0]),
            ([2.0, 0.0, -1.0], [1.0, 0.0, -1.0]),
        ];
        for ([m2, m1, m0], [a2, a1, a0]) in rows {
            assert_eq!(a_from_m(&[m0, m1, m2]).unwrap(), vec![a0, a1, a2]);
        }
    }

    #[test]
    fn radial_polynomial_examples() {
        let vdp = DampingSpec::from_m(Family::Position, vec![-1.0, 1.0]).unwrap();
        let p = radial_polynomial(&vdp);
        assert_eq!(p.coeffs(), &[-1.0, 1.0]);
        assert_eq!(p.eval(1.0), 0.0);
        assert_eq!(p.degree(), vdp.order());

        let rayleigh = DampingSpec::from_beta(Family::Velocity, &[-1.0, 1.0]).unwrap();
        let p = radial_polynomial(&rayleigh);
        assert_eq!(p.coeffs(), &[-1.0, 3.0]);
        assert_relative_eq!(p.eval(1.0 / 3.0), 0.0, epsilon = 1e-15);

        // Degree-3 polynomial built from physical coefficients.
        let spec = DampingSpec::from_a(Family::Position, &[-1.0, 1.0, -0.144, 0.005]).unwrap();
        assert_relative_eq!(
            radial_polynomial(&spec).coeffs()[2],
            -0.288,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            radial_polynomial(&spec).coeffs()[3],
            0.025,
            epsilon = 1e-15
        );
    }

    #[test]
    fn epsilon_examples() {
        let vdp = DampingSpec::from_m(Family::Position, vec![-1.0, 1.0]).unwrap();
        let params = SystemParams::new(1.0, 2.0, 1, 0.0).unwrap();
        assert_eq!(epsilon_of(&params, &vdp), 2.0);

        let spec = DampingSpec::from_m(Family::Position, vec![0.0, 0.5]).unwrap();
        let params = SystemParams::new(1.0, 0.5, 1, 0.0).unwrap();
        assert_eq!(epsilon_of(&params, &spec), 1.0);

        let spec = DampingSpec::from_a(Family::Position, &[-1.0, 1.0, -0.144, 0.005]).unwrap();
        assert_relative_eq!(gamma_for_epsilon(0.01, &spec), 2.5e-4, epsilon = 1e-18);
    }

    #[test]
    fn degenerate_leading_coefficient_is_rejected() {
        assert_eq!(
            m_from_a(&[1.0, 0.0]).unwrap_err(),
            ModelError::DegenerateDegree
        );
        assert_eq!(
            DampingSpec::from_m(Family::Position, vec![1.0, 2.0, 0.0]).unwrap_err(),
            ModelError::DegenerateDegree
        );
    }

    #[test]
    fn order_bounds_are_enforced() {
        assert_eq!(m_from_a(&[1.0]).unwrap_err(), ModelError::InvalidOrder(1));
        let too_long = vec![1.0; MAX_ORDER + 2];
        assert_eq!(
            m_from_a(&too_long).unwrap_err(),
            ModelError::OrderTooLarge(MAX_ORDER + 1)
        );
    }

    #[test]
    fn params_validation() {
        assert!(SystemParams::new(0.0, 1.0, 1, 0.0).is_err());
        assert!(SystemParams::new(1.0, 0.0, 1, 0.0).is_err());
        assert!(SystemParams::new(1.0, 1.0, 1, -0.5).is_err());
        let params = SystemParams::new(1.0, 1.0, 2, 0.0).unwrap();
        let vdp = DampingSpec::from_m(Family::Position, vec![-1.0, 1.0]).unwrap();
        assert!(params.check_spec(&vdp).is_err());
    }

    fn coeff_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0f64..10.0, n + 1).prop_map(|mut v| {
            let last = v.len() - 1;
            if v[last].abs() < 0.1 {
                v[last] = 1.0;
            }
            v
        })
    }

    proptest! {
        #[test]
        fn a_map_round_trips(n in 1usize..=8, a in coeff_vec(8)) {
            let a = &a[..=n.min(a.len() - 1).max(1)];
            if a[a.len() - 1] == 0.0 { return Ok(()); }
            let back = a_from_m(&m_from_a(a).unwrap()).unwrap();
            for (x, y) in a.iter().zip(back.iter()) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
        }

        #[test]
        fn beta_map_round_trips(n in 1usize..=8, beta in coeff_vec(8)) {
            let beta = &beta[..=n.min(beta.len() - 1).max(1)];
            if beta[beta.len() - 1] == 0.0 { return Ok(()); }
            let back = beta_from_m(&m_from_beta(beta).unwrap()).unwrap();
            for (x, y) in beta.iter().zip(back.iter()) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
        }

        #[test]
        fn order_one_maps_are_identity(a0 in -5.0f64..5.0, a1 in 0.1f64..5.0) {
            prop_assert_eq!(m_from_a(&[a0, a1]).unwrap(), vec![a0, a1]);
            prop_assert_eq!(a_from_m(&[a0, a1]).unwrap(), vec![a0, a1]);
        }
    }
}
