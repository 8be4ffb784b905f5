//! Utility functions and their convex conjugates.
//!
//! Four families, all concave, increasing, differentiable, with marginal
//! utility diverging at the left end of the domain and vanishing at +inf:
//!
//! * `exponential(gamma)`:          u(x) = -(1/g) e^{-g x}
//! * `truncated_quadratic(gamma)`:  u(x) = -g x^2 for x <= 0, 0 for x > 0
//! * `logarithmic(shift)`:          u(x) = ln(x + b) on (-b, inf)
//! * `power(p, shift)`:             u(x) = (x + b)^p / p on (-b, inf), 0<p<1
//!
//! The conjugate is `phi(y) = sup_x (u(x) - x y)`, finite on (0, inf),
//! bounded below, strictly convex there, with `phi'(y) = -argmax`.

use crate::error::{Error, Result};
use crate::rational::Rat;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UtilityFunction {
    Exponential { gamma: Rat },
    TruncatedQuadratic { gamma: Rat },
    Logarithmic { shift: Rat },
    Power { exponent: Rat, shift: Rat },
}

impl UtilityFunction {
    pub fn exponential(gamma: Rat) -> Result<Self> {
        if !gamma.is_positive() {
            return Err(Error::Parameter("exponential utility needs gamma > 0".into()));
        }
        Ok(UtilityFunction::Exponential { gamma })
    }

    pub fn truncated_quadratic(gamma: Rat) -> Result<Self> {
        if !gamma.is_positive() {
            return Err(Error::Parameter(
                "truncated quadratic utility needs gamma > 0".into(),
            ));
        }
        Ok(UtilityFunction::TruncatedQuadratic { gamma })
    }

    pub fn logarithmic(shift: Rat) -> Result<Self> {
        Ok(UtilityFunction::Logarithmic { shift })
    }

    pub fn power(exponent: Rat, shift: Rat) -> Result<Self> {
        if !exponent.is_positive() || exponent >= Rat::one() {
            return Err(Error::Parameter(
                "power utility needs exponent in (0, 1); outside that range it is not concave-increasing with the required marginal limits".into(),
            ));
        }
        Ok(UtilityFunction::Power { exponent, shift })
    }

    /// Re-run the constructor checks (deserialized values bypass them).
    pub fn check_params(&self) -> Result<()> {
        match self {
            UtilityFunction::Exponential { gamma } => {
                Self::exponential(gamma.clone()).map(|_| ())
            }
            UtilityFunction::TruncatedQuadratic { gamma } => {
                Self::truncated_quadratic(gamma.clone()).map(|_| ())
            }
            UtilityFunction::Logarithmic { shift } => Self::logarithmic(shift.clone()).map(|_| ()),
            UtilityFunction::Power { exponent, shift } => {
                Self::power(exponent.clone(), shift.clone()).map(|_| ())
            }
        }
    }

    /// Left end of the domain: arguments must stay strictly above it.
    pub fn domain_left(&self) -> f64 {
        match self {
            UtilityFunction::Exponential { .. } | UtilityFunction::TruncatedQuadratic { .. } => {
                f64::NEG_INFINITY
            }
            UtilityFunction::Logarithmic { shift } | UtilityFunction::Power { shift, .. } => {
                -shift.to_f64()
            }
        }
    }

    pub fn in_domain(&self, x: f64) -> bool {
        x > self.domain_left()
    }

    /// The supremum u(+inf); finite for the bounded-above kinds.
    pub fn u_inf(&self) -> f64 {
        match self {
            UtilityFunction::Exponential { .. } | UtilityFunction::TruncatedQuadratic { .. } => 0.0,
            UtilityFunction::Logarithmic { .. } | UtilityFunction::Power { .. } => f64::INFINITY,
        }
    }

    pub fn u(&self, x: f64) -> f64 {
        match self {
            UtilityFunction::Exponential { gamma } => {
                let g = gamma.to_f64();
                -(-g * x).exp() / g
            }
            UtilityFunction::TruncatedQuadratic { gamma } => {
                if x <= 0.0 {
                    -gamma.to_f64() * x * x
                } else {
                    0.0
                }
            }
            UtilityFunction::Logarithmic { shift } => {
                let z = x + shift.to_f64();
                if z <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    z.ln()
                }
            }
            UtilityFunction::Power { exponent, shift } => {
                let p = exponent.to_f64();
                let z = x + shift.to_f64();
                if z <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    z.powf(p) / p
                }
            }
        }
    }

    pub fn du(&self, x: f64) -> f64 {
        match self {
            UtilityFunction::Exponential { gamma } => (-gamma.to_f64() * x).exp(),
            UtilityFunction::TruncatedQuadratic { gamma } => {
                if x <= 0.0 {
                    -2.0 * gamma.to_f64() * x
                } else {
                    0.0
                }
            }
            UtilityFunction::Logarithmic { shift } => {
                let z = x + shift.to_f64();
                if z <= 0.0 {
                    f64::INFINITY
                } else {
                    1.0 / z
                }
            }
            UtilityFunction::Power { exponent, shift } => {
                let p = exponent.to_f64();
                let z = x + shift.to_f64();
                if z <= 0.0 {
                    f64::INFINITY
                } else {
                    z.powf(p - 1.0)
                }
            }
        }
    }

    /// Second derivative where it exists (the quadratic kind has a kink in
    /// u'' at zero; the left value is returned there).
    pub fn d2u(&self, x: f64) -> f64 {
        match self {
            UtilityFunction::Exponential { gamma } => {
                let g = gamma.to_f64();
                -g * (-g * x).exp()
            }
            UtilityFunction::TruncatedQuadratic { gamma } => {
                if x <= 0.0 {
                    -2.0 * gamma.to_f64()
                } else {
                    0.0
                }
            }
            UtilityFunction::Logarithmic { shift } => {
                let z = x + shift.to_f64();
                -1.0 / (z * z)
            }
            UtilityFunction::Power { exponent, shift } => {
                let p = exponent.to_f64();
                let z = x + shift.to_f64();
                (p - 1.0) * z.powf(p - 2.0)
            }
        }
    }

    /// Convex conjugate `phi(y) = sup_x (u(x) - x y)`, domain `[0, inf)`
    /// (the log and power kinds diverge at y = 0).
    pub fn phi(&self, y: f64) -> Result<f64> {
        if y < 0.0 {
            return Err(Error::Domain(format!("conjugate evaluated at y = {y} < 0")));
        }
        Ok(match self {
            UtilityFunction::Exponential { gamma } => {
                let g = gamma.to_f64();
                if y == 0.0 {
                    0.0
                } else {
                    (y / g) * (y.ln() - 1.0)
                }
            }
            UtilityFunction::TruncatedQuadratic { gamma } => y * y / (4.0 * gamma.to_f64()),
            UtilityFunction::Logarithmic { shift } => {
                if y == 0.0 {
                    f64::INFINITY
                } else {
                    shift.to_f64() * y - y.ln() - 1.0
                }
            }
            UtilityFunction::Power { exponent, shift } => {
                let p = exponent.to_f64();
                if y == 0.0 {
                    f64::INFINITY
                } else {
                    (1.0 - p) / p * y.powf(-p / (1.0 - p)) + shift.to_f64() * y
                }
            }
        })
    }

    /// `phi'(y) = -x*(y)` where `x*` attains the sup.
    pub fn dphi(&self, y: f64) -> Result<f64> {
        if y < 0.0 {
            return Err(Error::Domain(format!("conjugate evaluated at y = {y} < 0")));
        }
        Ok(match self {
            UtilityFunction::Exponential { gamma } => {
                let g = gamma.to_f64();
                if y == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    y.ln() / g
                }
            }
            UtilityFunction::TruncatedQuadratic { gamma } => y / (2.0 * gamma.to_f64()),
            UtilityFunction::Logarithmic { shift } => {
                if y == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    shift.to_f64() - 1.0 / y
                }
            }
            UtilityFunction::Power { exponent, shift } => {
                let p = exponent.to_f64();
                if y == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    shift.to_f64() - y.powf(-1.0 / (1.0 - p))
                }
            }
        })
    }

    /// `phi''(y)` on (0, inf); used for Newton steps in the dual solves.
    pub fn d2phi(&self, y: f64) -> Result<f64> {
        if y <= 0.0 {
            return Err(Error::Domain(format!(
                "conjugate second derivative evaluated at y = {y} <= 0"
            )));
        }
        Ok(match self {
            UtilityFunction::Exponential { gamma } => 1.0 / (gamma.to_f64() * y),
            UtilityFunction::TruncatedQuadratic { gamma } => 1.0 / (2.0 * gamma.to_f64()),
            UtilityFunction::Logarithmic { .. } => 1.0 / (y * y),
            UtilityFunction::Power { exponent, .. } => {
                let p = exponent.to_f64();
                let q = 1.0 / (1.0 - p);
                q * y.powf(-q - 1.0)
            }
        })
    }

    /// Numeric spot-checks of concavity, monotonicity, and the marginal
    /// limits; violations are returned as data, not errors.
    pub fn validate_numeric(&self) -> UtilityReport {
        let mut violations = Vec::new();
        let left = self.domain_left();
        let (lo, hi) = if left.is_finite() {
            (left + 1e-6, left + 50.0)
        } else {
            (-50.0, 50.0)
        };
        let grid: Vec<f64> = (0..=100).map(|i| lo + (hi - lo) * (i as f64) / 100.0).collect();
        for w in grid.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            let chord = 0.5 * (self.u(a) + self.u(b));
            if self.u(mid) < chord - 1e-9 * (1.0 + chord.abs()) {
                violations.push(format!("concavity fails on [{a}, {b}]"));
            }
            if self.u(b) < self.u(a) - 1e-12 {
                violations.push(format!("monotonicity fails on [{a}, {b}]"));
            }
        }
        let left_probe = if left.is_finite() { left + 1e-9 } else { -1e8 };
        if self.du(left_probe) < 1e4 {
            violations.push("marginal utility does not diverge at the left end".into());
        }
        if self.du(1e8) > 1e-4 {
            violations.push("marginal utility does not vanish at +inf".into());
        }
        UtilityReport { violations }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UtilityReport {
    pub violations: Vec<String>,
}

impl UtilityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds() -> Vec<UtilityFunction> {
        vec![
            UtilityFunction::exponential(Rat::from_int(1)).unwrap(),
            UtilityFunction::exponential(Rat::from_int(2)).unwrap(),
            UtilityFunction::truncated_quadratic(Rat::from_int(3)).unwrap(),
            UtilityFunction::logarithmic(Rat::from_int(5)).unwrap(),
            UtilityFunction::power(Rat::frac(1, 2), Rat::from_int(4)).unwrap(),
        ]
    }

    #[test]
    fn quadratic_conjugate_closed_form() {
        for gamma in [Rat::from_int(1), Rat::frac(3, 2), Rat::from_int(4)] {
            let u = UtilityFunction::truncated_quadratic(gamma.clone()).unwrap();
            let g = gamma.to_f64();
            for y in [0.0, 0.5, 1.0, 3.25] {
                assert!((u.phi(y).unwrap() - y * y / (4.0 * g)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn fenchel_gap_nonpositive_and_tight_at_tangent() {
        for u in kinds() {
            let left = u.domain_left();
            let lo = if left.is_finite() { left + 0.01 } else { -10.0 };
            for i in 0..100 {
                let x = lo + 0.2 * i as f64;
                let y = 0.05 + 0.11 * i as f64;
                // u(x) - x y - phi(y) <= 0 for every pair in the domain
                let gap = u.u(x) - x * y - u.phi(y).unwrap();
                assert!(gap <= 1e-9, "{u:?} x={x} y={y} gap={gap}");
                // equality at y = u'(x)
                let yt = u.du(x);
                if yt > 0.0 && yt.is_finite() {
                    let phi = u.phi(yt).unwrap();
                    let at = u.u(x) - x * yt - phi;
                    let scale = 1.0 + u.u(x).abs() + (x * yt).abs() + phi.abs();
                    assert!(at.abs() < 1e-9 * scale, "{u:?} x={x} tangent gap={at}");
                }
            }
        }
    }

    #[test]
    fn dphi_matches_central_difference() {
        for u in kinds() {
            for y in [0.25, 0.5, 1.0, 2.0, 7.5] {
                let h = 1e-6;
                let fd = (u.phi(y + h).unwrap() - u.phi(y - h).unwrap()) / (2.0 * h);
                let an = u.dphi(y).unwrap();
                assert!((fd - an).abs() < 1e-6 * (1.0 + an.abs()), "{u:?} y={y}");
            }
        }
    }

    #[test]
    fn exponential_dphi_finite_difference_tight() {
        let u = UtilityFunction::exponential(Rat::from_int(1)).unwrap();
        for y in [0.3, 1.0, 2.7] {
            let h = 1e-5;
            let fd = (u.phi(y + h).unwrap() - u.phi(y - h).unwrap()) / (2.0 * h);
            assert!((fd - u.dphi(y).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn phi_strictly_convex_on_positive_half_line() {
        for u in kinds() {
            for i in 1..40 {
                let a = 0.1 * i as f64;
                let b = a + 0.7;
                let mid = 0.5 * (a + b);
                let strict =
                    0.5 * (u.phi(a).unwrap() + u.phi(b).unwrap()) - u.phi(mid).unwrap();
                assert!(strict > 1e-12, "{u:?} midpoint convexity at [{a},{b}]");
            }
        }
    }

    #[test]
    fn conjugate_domain_errors() {
        let u = UtilityFunction::exponential(Rat::from_int(1)).unwrap();
        assert!(u.phi(-0.5).is_err());
        assert!(u.dphi(-0.5).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(UtilityFunction::power(Rat::frac(3, 2), Rat::zero()).is_err());
        assert!(UtilityFunction::power(Rat::one(), Rat::zero()).is_err());
        assert!(UtilityFunction::exponential(Rat::zero()).is_err());
        assert!(UtilityFunction::truncated_quadratic(Rat::from_int(-1)).is_err());
    }

    #[test]
    fn numeric_spot_checks_pass_for_valid_kinds() {
        for u in kinds() {
            let report = u.validate_numeric();
            assert!(report.is_valid(), "{u:?}: {:?}", report.violations);
        }
    }

    #[test]
    fn quadratic_marginal_diverges_left() {
        let u = UtilityFunction::truncated_quadratic(Rat::from_int(3)).unwrap();
        assert!(u.du(-1e6) > 1e6);
        assert!(u.validate_numeric().is_valid());
    }
}
