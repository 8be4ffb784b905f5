//! Closed-form feasible-trade region for two CARA agents whose pricing
//! measures put different masses on one event.
//!
//! Agent 1 pays a fixed fee `beta` for the indicator payout `alpha 1_A`;
//! agent 2 takes the other side. With `q1 > q2` the masses of `A` under
//! the two agents' pricing measures and `gamma1, gamma2` the risk
//! aversions, the trades improving both certainty equivalents are exactly
//!
//! `{ (alpha, beta) : 0 < alpha < alpha_star, L(alpha) < beta < U(alpha) }`
//!
//! where `U(a) = -(1/g1) ln(q1 e^{-g1 a} + 1 - q1)`,
//! `L(a) = (1/g2) ln(q2 e^{g2 a} + 1 - q2)`, and `alpha_star` is the unique
//! positive root of `U = L`.

use crate::error::{Error, Result};
use crate::model::{
    AdaptedProcess, AgentSpec, ExchangeKind, ExchangeSpace, ExchangeVector, Filtration,
    MarketModel, Partition, SampleSpace,
};
use crate::preferences::UtilityFunction;
use crate::rational::Rat;

#[derive(Clone, Debug)]
pub struct CaraRegionSpec {
    pub q1: Rat,
    pub q2: Rat,
    pub gamma1: Rat,
    pub gamma2: Rat,
}

impl CaraRegionSpec {
    pub fn new(q1: Rat, q2: Rat, gamma1: Rat, gamma2: Rat) -> Result<Self> {
        let one = Rat::one();
        if !q1.is_positive() || q1 >= one || !q2.is_positive() || q2 >= one {
            return Err(Error::Parameter(
                "event masses must lie strictly inside (0, 1)".into(),
            ));
        }
        if q1 <= q2 {
            return Err(Error::Parameter(
                "the first agent must assign the larger mass (q1 > q2)".into(),
            ));
        }
        if !gamma1.is_positive() || !gamma2.is_positive() {
            return Err(Error::Parameter("risk aversions must be positive".into()));
        }
        Ok(CaraRegionSpec {
            q1,
            q2,
            gamma1,
            gamma2,
        })
    }

    /// Upper curve: largest fee agent 1 accepts at size `alpha`.
    pub fn curve_upper(&self, alpha: f64) -> f64 {
        let g1 = self.gamma1.to_f64();
        let q1 = self.q1.to_f64();
        -(q1 * (-g1 * alpha).exp() + 1.0 - q1).ln() / g1
    }

    /// Lower curve: smallest fee agent 2 demands at size `alpha`.
    pub fn curve_lower(&self, alpha: f64) -> f64 {
        let g2 = self.gamma2.to_f64();
        let q2 = self.q2.to_f64();
        (q2 * (g2 * alpha).exp() + 1.0 - q2).ln() / g2
    }

    fn gap(&self, alpha: f64) -> f64 {
        self.curve_upper(alpha) - self.curve_lower(alpha)
    }

    /// Unique positive root of `U = L`, by bisection on a bracket grown
    /// from the positive initial slope `q1 - q2`.
    pub fn alpha_star(&self, tol: f64) -> Result<f64> {
        let mut lo = 1e-9;
        // The gap opens with slope q1 - q2 > 0; shrink if the probe is
        // already past the root.
        let mut shrink = 0;
        while self.gap(lo) <= 0.0 {
            lo *= 0.5;
            shrink += 1;
            if shrink > 60 {
                return Err(Error::NumericFailure(
                    "no positive gap found near zero; masses too close".into(),
                ));
            }
        }
        let mut hi = f64::max(1.0, 2.0 * lo);
        let mut grow = 0;
        while self.gap(hi) > 0.0 {
            hi *= 2.0;
            grow += 1;
            if grow > 60 {
                return Err(Error::NumericFailure(
                    "gap did not change sign within 60 doublings".into(),
                ));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.gap(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if self.gap(0.5 * (lo + hi)).abs() <= tol {
                break;
            }
        }
        let root = 0.5 * (lo + hi);
        if self.gap(root).abs() > tol {
            return Err(Error::NumericFailure(format!(
                "bisection stalled: |U - L| = {:.3e} at alpha = {root}",
                self.gap(root)
            )));
        }
        Ok(root)
    }

    pub fn region(&self, tol: f64) -> Result<CaraRegion> {
        Ok(CaraRegion {
            spec: self.clone(),
            alpha_star: self.alpha_star(tol)?,
        })
    }
}

#[derive(Clone, Debug)]
pub struct CaraRegion {
    pub spec: CaraRegionSpec,
    pub alpha_star: f64,
}

/// Membership answer with the two certainty-equivalent inequalities
/// evaluated directly.
#[derive(Clone, Debug)]
pub struct Membership {
    pub inside: bool,
    /// `E_{Q1}[exp(-g1 (alpha 1_A - beta))]`, must be < 1 inside.
    pub first_expectation: f64,
    /// `E_{Q2}[exp(-g2 (beta - alpha 1_A))]`, must be < 1 inside.
    pub second_expectation: f64,
}

impl CaraRegion {
    /// Strict membership of `(alpha, beta)`; when inside, both defining
    /// expectation inequalities are re-verified numerically.
    pub fn membership(&self, alpha: f64, beta: f64) -> Membership {
        let spec = &self.spec;
        let inside = alpha > 0.0
            && alpha < self.alpha_star
            && beta > spec.curve_lower(alpha)
            && beta < spec.curve_upper(alpha);
        let (q1, q2) = (spec.q1.to_f64(), spec.q2.to_f64());
        let (g1, g2) = (spec.gamma1.to_f64(), spec.gamma2.to_f64());
        let first = q1 * (-g1 * (alpha - beta)).exp() + (1.0 - q1) * (g1 * beta).exp();
        let second = q2 * (-g2 * (beta - alpha)).exp() + (1.0 - q2) * (-g2 * beta).exp();
        Membership {
            inside,
            first_expectation: first,
            second_expectation: second,
        }
    }

    /// The zero-sum exchange `(alpha 1_A - beta, beta - alpha 1_A)` as
    /// exact rationals on the two-outcome space `{A, not A}`; inputs are
    /// snapped to nearby rationals and membership is re-verified there.
    pub fn emit_exchange(&self, alpha: f64, beta: f64) -> Result<ExchangeVector> {
        let a = Rat::approximate_f64(alpha, 1_000_000_000_000)
            .ok_or_else(|| Error::Parameter("alpha not finite".into()))?;
        let b = Rat::approximate_f64(beta, 1_000_000_000_000)
            .ok_or_else(|| Error::Parameter("beta not finite".into()))?;
        let check = self.membership(a.to_f64(), b.to_f64());
        if !check.inside {
            return Err(Error::Precondition(format!(
                "({alpha}, {beta}) is not strictly inside the trade region"
            )));
        }
        let leg1 = vec![&a - &b, -b.clone()];
        let leg2 = vec![&b - &a, b];
        Ok(ExchangeVector {
            legs: vec![leg1, leg2],
        })
    }

    /// Certainty-equivalent gain of each agent from the exchange, under
    /// its own Bernoulli pricing measure; both are positive inside.
    pub fn certainty_equivalent_gains(&self, y: &ExchangeVector) -> (f64, f64) {
        let spec = &self.spec;
        let gain = |q: f64, gamma: f64, leg: &[Rat]| {
            let e = q * (-gamma * leg[0].to_f64()).exp()
                + (1.0 - q) * (-gamma * leg[1].to_f64()).exp();
            -e.ln() / gamma
        };
        (
            gain(spec.q1.to_f64(), spec.gamma1.to_f64(), &y.legs[0]),
            gain(spec.q2.to_f64(), spec.gamma2.to_f64(), &y.legs[1]),
        )
    }

    /// Embed an emitted exchange into a two-outcome market with no traded
    /// assets where each agent's subjective measure is its pricing measure;
    /// the full pipeline then re-derives the benefit from first principles.
    pub fn bridge_model(&self, y: &ExchangeVector) -> MarketModel {
        let spec = &self.spec;
        let outcomes = vec!["hit".to_string(), "miss".to_string()];
        let filtration = Filtration {
            partitions: vec![Partition::trivial(2), Partition::points(2)],
        };
        let agent = |q: &Rat, gamma: &Rat| AgentSpec {
            name: None,
            subjective_measure: vec![q.clone(), Rat::one() - q.clone()],
            filtration: filtration.clone(),
            assets: Vec::<AdaptedProcess>::new(),
            utility: UtilityFunction::exponential(gamma.clone()).expect("gamma > 0"),
            endowment: vec![Rat::zero(); 2],
        };
        let deterministic = ExchangeVector::deterministic(&[Rat::one(), -Rat::one()], 2);
        MarketModel {
            space: SampleSpace {
                outcomes,
                reference_measure: vec![Rat::frac(1, 2); 2],
            },
            horizon: 1,
            agents: vec![
                agent(&spec.q1, &spec.gamma1),
                agent(&spec.q2, &spec.gamma2),
            ],
            exchange: ExchangeSpace {
                kind: ExchangeKind::VectorSpace,
                zero_sum: true,
                includes_deterministic: true,
                measurability: None,
                basis: vec![y.clone(), deterministic],
            },
        }
    }
}
