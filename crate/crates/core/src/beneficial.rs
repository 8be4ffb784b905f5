//! Constructive search for exchanges that strictly improve every agent's
//! indirect utility: the aggregate-price (polarity) check of the minimax
//! vector, the rebalanced candidate exchange, the line search for a scale
//! at which all agents strictly gain, and the certificate tying it all
//! together. When the polarity condition holds instead, the zero-violation
//! report is itself the absence witness.

use crate::error::{Error, Result};
use crate::minimax::{indirect_utility_with, solve_minimax, MinimaxSolution};
use crate::model::{ExchangeSpace, ExchangeVector, MarketModel};
use crate::arbitrage::payoff_space;
use crate::rational::{dot, sum, Rat};

/// Violations below this threshold are treated as zero on the float track;
/// exact-rational values are compared against literal zero.
pub const POLARITY_TOL: f64 = 1e-9;

/// Aggregate minimax prices of the exchange generators.
#[derive(Clone, Debug)]
pub struct PolarityReport {
    /// `sum_i E_{Q^i}[Y^i]` per basis element.
    pub values: Vec<f64>,
    /// Exact values when every minimax measure certified rational.
    pub values_exact: Option<Vec<Rat>>,
    /// Largest violation over admissible directions (sign flips allowed on
    /// vector-space families), zero when none.
    pub max_violation: f64,
    /// Index and flip of the best violating generator.
    pub violating: Option<(usize, bool)>,
}

impl PolarityReport {
    pub fn violated(&self) -> bool {
        self.violating.is_some()
    }

    /// Materialize the best violating exchange, sign included.
    pub fn violating_exchange(&self, exchange: &ExchangeSpace) -> Option<ExchangeVector> {
        self.violating.map(|(k, flipped)| {
            let y = &exchange.basis[k];
            if flipped {
                y.negate()
            } else {
                y.clone()
            }
        })
    }
}

/// Evaluate the polarity condition of the minimax vector on each generator.
pub fn polarity_check(
    exchange: &ExchangeSpace,
    solutions: &[MinimaxSolution],
) -> PolarityReport {
    let all_exact = solutions.iter().all(|s| s.measure_exact.is_some());
    let flips_allowed = exchange.kind == crate::model::ExchangeKind::VectorSpace;

    let mut values = Vec::with_capacity(exchange.basis.len());
    let mut values_exact = if all_exact { Some(Vec::new()) } else { None };
    let mut best: Option<(usize, bool, f64)> = None;

    for (k, y) in exchange.basis.iter().enumerate() {
        let (value, exact) = if all_exact {
            let mut acc = Rat::zero();
            for (sol, leg) in solutions.iter().zip(&y.legs) {
                acc += dot(sol.measure_exact.as_ref().unwrap(), leg);
            }
            (acc.to_f64(), Some(acc))
        } else {
            let mut acc = 0.0;
            for (sol, leg) in solutions.iter().zip(&y.legs) {
                acc += sol.expectation(leg);
            }
            (acc, None)
        };

        let violates_positive = match &exact {
            Some(v) => v.is_positive(),
            None => value > POLARITY_TOL,
        };
        let violates_negative = flips_allowed
            && match &exact {
                Some(v) => v.is_negative(),
                None => value < -POLARITY_TOL,
            };
        let magnitude = if violates_positive {
            value
        } else if violates_negative {
            -value
        } else {
            0.0
        };
        if magnitude > 0.0 && best.is_none_or(|(_, _, m)| magnitude > m) {
            best = Some((k, violates_negative, magnitude));
        }

        values.push(value);
        if let (Some(list), Some(v)) = (&mut values_exact, exact) {
            list.push(v);
        }
    }

    PolarityReport {
        values,
        values_exact,
        max_violation: best.map_or(0.0, |(_, _, m)| m),
        violating: best.map(|(k, f, _)| (k, f)),
    }
}

/// The rebalanced candidate built from a seed exchange with positive
/// aggregate price: each leg is shifted by a deterministic amount so all
/// agents price their leg at the same positive value.
#[derive(Clone, Debug)]
pub struct CandidateExchange {
    pub y_hat: ExchangeVector,
    /// Common per-agent expectation `(1/N) sum_j E_{Q^j}[Y^j]`.
    pub common_expectation: f64,
    pub common_expectation_exact: Option<Rat>,
    pub per_agent_expectation: Vec<f64>,
}

/// Shift the seed by deterministic transfers so every agent's minimax
/// expectation of its leg equals the common positive mean.
pub fn construct_candidate(
    exchange: &ExchangeSpace,
    solutions: &[MinimaxSolution],
    seed: &ExchangeVector,
) -> Result<CandidateExchange> {
    let n_agents = seed.legs.len();
    let all_exact = solutions.iter().all(|s| s.measure_exact.is_some());

    let shifts: Vec<Rat>;
    let common_exact: Option<Rat>;
    if all_exact {
        let e: Vec<Rat> = solutions
            .iter()
            .zip(&seed.legs)
            .map(|(s, leg)| dot(s.measure_exact.as_ref().unwrap(), leg))
            .collect();
        let total = sum(&e);
        if !total.is_positive() {
            return Err(Error::Precondition(format!(
                "seed exchange has aggregate minimax price {total} <= 0"
            )));
        }
        let mean = &total / &Rat::from_int(n_agents as i64);
        shifts = e.iter().map(|ei| &mean - ei).collect();
        common_exact = Some(mean);
    } else {
        let e: Vec<f64> = solutions
            .iter()
            .zip(&seed.legs)
            .map(|(s, leg)| s.expectation(leg))
            .collect();
        let total: f64 = e.iter().sum();
        if total <= 0.0 {
            return Err(Error::Precondition(format!(
                "seed exchange has aggregate minimax price {total} <= 0"
            )));
        }
        let mean = total / n_agents as f64;
        // Snap the deterministic shifts; force the exact zero-sum identity
        // through the last agent so the rebalancing stays inside the family.
        let mut snapped: Vec<Rat> = e
            .iter()
            .take(n_agents - 1)
            .map(|&ei| {
                Rat::approximate_f64(mean - ei, 1_000_000_000_000).unwrap_or_else(Rat::zero)
            })
            .collect();
        let head = sum(&snapped);
        snapped.push(-head);
        shifts = snapped;
        common_exact = None;
    }
    debug_assert!(sum(&shifts).is_zero());

    let n = seed.legs[0].len();
    let shift_vector = ExchangeVector::deterministic(&shifts, n);
    let y_hat = seed.add(&shift_vector);

    if !exchange.includes_deterministic {
        return Err(Error::HypothesisViolation(
            "deterministic rebalancing requires the constant zero-sum vectors inside the family"
                .into(),
        ));
    }
    if !exchange.contains(&y_hat) {
        return Err(Error::HypothesisViolation(
            "rebalanced exchange fell outside the declared family".into(),
        ));
    }

    let per_agent: Vec<f64> = solutions
        .iter()
        .zip(&y_hat.legs)
        .map(|(s, leg)| s.expectation(leg))
        .collect();
    let common = common_exact
        .as_ref()
        .map_or_else(|| per_agent.iter().sum::<f64>() / n_agents as f64, Rat::to_f64);
    Ok(CandidateExchange {
        y_hat,
        common_expectation: common,
        common_expectation_exact: common_exact,
        per_agent_expectation: per_agent,
    })
}

#[derive(Clone, Debug)]
pub struct LineSearchOutcome {
    /// Accepted scale (a power of one half, exact).
    pub alpha: Rat,
    pub utilities_before: Vec<f64>,
    pub utilities_after: Vec<f64>,
}

/// Geometric backtracking from scale one: halve until every agent strictly
/// improves past its margin. A positive directional derivative for every
/// agent is required up front; hitting the floor then indicates broken
/// tolerances rather than absence.
pub fn line_search_alpha(
    model: &MarketModel,
    solutions: &[MinimaxSolution],
    y_hat: &ExchangeVector,
) -> Result<LineSearchOutcome> {
    for (i, sol) in solutions.iter().enumerate() {
        let d = sol.directional_derivative(&y_hat.legs[i]);
        if d <= 0.0 {
            return Err(Error::Precondition(format!(
                "agent {i}: directional derivative {d} along the candidate is not positive"
            )));
        }
    }
    let spaces = (0..model.num_agents())
        .map(|i| payoff_space(model, i))
        .collect::<Result<Vec<_>>>()?;
    let before: Vec<f64> = solutions.iter().map(|s| s.primal_value).collect();
    let margins: Vec<f64> = before.iter().map(|u| 1e-10 * (1.0 + u.abs())).collect();

    let mut alpha = Rat::one();
    let floor = Rat::frac(1, 1_000_000_000_000);
    loop {
        let mut after = Vec::with_capacity(solutions.len());
        let mut all_improve = true;
        for i in 0..solutions.len() {
            let leg: Vec<Rat> = y_hat.legs[i].iter().map(|v| v * &alpha).collect();
            match indirect_utility_with(model, i, &spaces[i], Some(&leg)) {
                Ok(iu) => {
                    if iu.value <= before[i] + margins[i] {
                        all_improve = false;
                    }
                    after.push(iu.value);
                }
                Err(Error::Domain(_)) | Err(Error::UnboundedUtility { .. }) => {
                    // Scale back until the leg fits the utility domain.
                    all_improve = false;
                    after.push(f64::NEG_INFINITY);
                }
                Err(e) => return Err(e),
            }
            if !all_improve {
                break;
            }
        }
        if all_improve {
            return Ok(LineSearchOutcome {
                alpha,
                utilities_before: before,
                utilities_after: after,
            });
        }
        alpha = alpha * Rat::frac(1, 2);
        if alpha < floor {
            return Err(Error::NumericFailure(
                "line search hit the scale floor despite positive directional derivatives; \
                 solver tolerances are inconsistent"
                    .into(),
            ));
        }
    }
}

/// A verified strictly-beneficial exchange.
#[derive(Clone, Debug)]
pub struct BeneficialCertificate {
    /// Seed generator (sign included) that violates polarity.
    pub seed: ExchangeVector,
    pub seed_index: usize,
    pub seed_flipped: bool,
    /// Rebalanced exchange with equal positive minimax prices.
    pub y_hat: ExchangeVector,
    /// Scale at which all agents strictly improve.
    pub alpha: Rat,
    pub common_expectation: f64,
    pub common_expectation_exact: Option<Rat>,
    pub utilities_before: Vec<f64>,
    pub utilities_after: Vec<f64>,
    /// All improvements strict (certified by the line-search margins).
    pub strict: bool,
}

#[derive(Clone, Debug)]
pub enum PipelineOutcome {
    Certificate(Box<BeneficialCertificate>),
    /// No generator violates polarity: the minimax vector prices every
    /// allowed exchange at most zero, so no beneficial exchange exists.
    Absent(PolarityReport),
}

impl PipelineOutcome {
    pub fn has_certificate(&self) -> bool {
        matches!(self, PipelineOutcome::Certificate(_))
    }
}

/// Full decision pipeline: minimax solves, polarity check, and on
/// violation the constructive candidate plus line search.
pub fn beneficial_pipeline(
    model: &MarketModel,
    exchange: &ExchangeSpace,
) -> Result<PipelineOutcome> {
    model.ensure_valid()?;
    if !exchange.includes_deterministic {
        return Err(Error::HypothesisViolation(
            "the pipeline requires the deterministic zero-sum vectors inside the family".into(),
        ));
    }
    let solutions = (0..model.num_agents())
        .map(|i| solve_minimax(model, i))
        .collect::<Result<Vec<_>>>()?;
    beneficial_pipeline_with(model, exchange, &solutions)
}

/// Pipeline stage after the minimax solves (reused by sweeps).
pub fn beneficial_pipeline_with(
    model: &MarketModel,
    exchange: &ExchangeSpace,
    solutions: &[MinimaxSolution],
) -> Result<PipelineOutcome> {
    let report = polarity_check(exchange, solutions);
    let Some(seed) = report.violating_exchange(exchange) else {
        return Ok(PipelineOutcome::Absent(report));
    };
    let (seed_index, seed_flipped) = report.violating.expect("violating index");
    let candidate = construct_candidate(exchange, solutions, &seed)?;
    let search = line_search_alpha(model, solutions, &candidate.y_hat)?;
    let strict = search
        .utilities_after
        .iter()
        .zip(&search.utilities_before)
        .all(|(a, b)| a > b);
    if !strict {
        return Err(Error::NumericFailure(
            "line search accepted a scale without strict improvement".into(),
        ));
    }
    Ok(PipelineOutcome::Certificate(Box::new(BeneficialCertificate {
        seed,
        seed_index,
        seed_flipped,
        y_hat: candidate.y_hat,
        alpha: search.alpha,
        common_expectation: candidate.common_expectation,
        common_expectation_exact: candidate.common_expectation_exact,
        utilities_before: search.utilities_before,
        utilities_after: search.utilities_after,
        strict: true,
    })))
}

#[derive(Clone, Debug)]
pub struct ZeroMarketReport {
    /// Direct criterion: some generator (sign-adjusted for vector spaces)
    /// has positive aggregate subjective expectation.
    pub criterion: bool,
    pub best_value: Rat,
    pub pipeline_certificate: bool,
}

/// In markets with no trading and deterministic endowments the minimax
/// measures are the subjective ones, so beneficial exchanges exist exactly
/// when some allowed exchange has positive aggregate subjective
/// expectation. Runs both routes and insists they agree.
pub fn check_corollary_zero_market(
    model: &MarketModel,
    exchange: &ExchangeSpace,
) -> Result<ZeroMarketReport> {
    model.ensure_valid()?;
    for i in 0..model.num_agents() {
        if payoff_space(model, i)?.dim() != 0 {
            return Err(Error::Precondition(format!(
                "agent {i}: trading space is nontrivial; the reduction needs empty markets"
            )));
        }
        let endowment = &model.agents[i].endowment;
        if endowment.iter().any(|v| v != &endowment[0]) {
            return Err(Error::Precondition(format!(
                "agent {i}: endowment must be deterministic for the reduction"
            )));
        }
    }
    let flips = exchange.kind == crate::model::ExchangeKind::VectorSpace;
    let mut best = Rat::zero();
    for y in &exchange.basis {
        let mut acc = Rat::zero();
        for (agent, leg) in model.agents.iter().zip(&y.legs) {
            acc += dot(&agent.subjective_measure, leg);
        }
        if flips && acc.is_negative() {
            acc = -acc;
        }
        if acc > best {
            best = acc;
        }
    }
    let criterion = best.is_positive();
    let outcome = beneficial_pipeline(model, exchange)?;
    if outcome.has_certificate() != criterion {
        return Err(Error::InternalInconsistency(format!(
            "zero-market reduction disagrees with the pipeline (criterion={criterion}, certificate={})",
            outcome.has_certificate()
        )));
    }
    Ok(ZeroMarketReport {
        criterion,
        best_value: best,
        pipeline_certificate: outcome.has_certificate(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::ExchangeKind;

    fn fr(a: i64, b: i64) -> Rat {
        Rat::frac(a, b)
    }

    fn tree_solutions(model: &MarketModel) -> Vec<MinimaxSolution> {
        (0..model.num_agents())
            .map(|i| solve_minimax(model, i).unwrap())
            .collect()
    }

    #[test]
    fn tree_polarity_values_exact() {
        let model = fixtures::fig1();
        let sols = tree_solutions(&model);
        let report = polarity_check(&model.exchange, &sols);
        let exact = report.values_exact.as_ref().unwrap();
        // First generator (indicator of the first time-1 atom against the
        // second agent): 1/2 - 44/125 = 37/250.
        assert_eq!(exact[0], fr(37, 250));
        // Remaining generators: 1/6 - 34/125, 1/6 - 1/50, 1/6 - 89/250.
        assert_eq!(exact[1], fr(1, 6) - fr(34, 125));
        assert_eq!(exact[2], fr(1, 6) - fr(1, 50));
        assert_eq!(exact[3], fr(1, 6) - fr(89, 250));
        assert!(report.violated());
    }

    #[test]
    fn deterministic_exchanges_never_violate() {
        // The constant zero-sum vectors price to zero under any measures.
        let model = fixtures::zero_market();
        let sols = tree_solutions(&model);
        let mut exchange = model.exchange.clone();
        exchange.basis = vec![crate::model::ExchangeVector::deterministic(
            &[Rat::one(), -Rat::one()],
            2,
        )];
        let report = polarity_check(&exchange, &sols);
        assert!(!report.violated());
        assert_eq!(report.values_exact.as_ref().unwrap()[0], Rat::zero());
    }

    #[test]
    fn twin_complete_minimax_vector_prices_everything_nonpositive() {
        let model = fixtures::twin_complete();
        let sols = tree_solutions(&model);
        let report = polarity_check(&model.exchange, &sols);
        assert!(!report.violated());
        for v in report.values_exact.as_ref().unwrap() {
            assert!(v.is_zero());
        }
    }

    #[test]
    fn tree_candidate_from_first_atom_seed() {
        let model = fixtures::fig1();
        let sols = tree_solutions(&model);
        let seed = model.exchange.basis[0].clone();
        let cand = construct_candidate(&model.exchange, &sols, &seed).unwrap();
        // Common expectation (1/2) * (37/250) = 37/500 for both agents.
        assert_eq!(cand.common_expectation_exact.as_ref().unwrap(), &fr(37, 500));
        for (sol, leg) in sols.iter().zip(&cand.y_hat.legs) {
            assert_eq!(sol.expectation_exact(leg).unwrap(), fr(37, 500));
        }
        assert!(cand.y_hat.is_zero_sum());
    }

    #[test]
    fn candidate_arithmetic_on_synthetic_expectations() {
        // Two agents, expectations 2 and 0 for the seed: the rebalanced
        // exchange shifts one unit from the first agent to the second.
        let model = fixtures::zero_market();
        let mut sols = tree_solutions(&model);
        // Fake measures so the seed prices at (2, 0): use point masses.
        sols[0].measure_exact = Some(vec![Rat::one(), Rat::zero()]);
        sols[1].measure_exact = Some(vec![Rat::one(), Rat::zero()]);
        let seed = crate::model::ExchangeVector {
            legs: vec![
                vec![Rat::from_int(2), Rat::from_int(2)],
                vec![Rat::zero(), Rat::zero()],
            ],
        };
        let mut exchange = model.exchange.clone();
        exchange.basis.push(seed.clone());
        let cand = construct_candidate(&exchange, &sols, &seed).unwrap();
        assert_eq!(cand.common_expectation_exact.as_ref().unwrap(), &Rat::one());
        assert_eq!(
            cand.y_hat.legs[0],
            vec![Rat::one(), Rat::one()],
        );
        assert_eq!(cand.y_hat.legs[1], vec![Rat::one(), Rat::one()]);
    }

    #[test]
    fn tree_pipeline_emits_strict_certificate() {
        let model = fixtures::fig1();
        match beneficial_pipeline(&model, &model.exchange).unwrap() {
            PipelineOutcome::Certificate(cert) => {
                assert!(cert.strict);
                assert!(cert.alpha.is_positive());
                for (a, b) in cert.utilities_after.iter().zip(&cert.utilities_before) {
                    assert!(a > b);
                }
                // Fenchel bound: the gain is at most lambda * alpha * common.
                let sols = tree_solutions(&model);
                for (i, sol) in sols.iter().enumerate() {
                    let gain = cert.utilities_after[i] - cert.utilities_before[i];
                    let bound = sol.lambda
                        * cert.alpha.to_f64()
                        * sol.expectation(&cert.y_hat.legs[i]);
                    assert!(gain <= bound + 1e-9, "agent {i}: gain {gain} bound {bound}");
                }
            }
            PipelineOutcome::Absent(_) => panic!("tree fixture admits beneficial exchanges"),
        }
    }

    #[test]
    fn twin_complete_pipeline_absent() {
        let model = fixtures::twin_complete();
        match beneficial_pipeline(&model, &model.exchange).unwrap() {
            PipelineOutcome::Absent(report) => {
                assert_eq!(report.max_violation, 0.0);
            }
            PipelineOutcome::Certificate(_) => {
                panic!("complete twin markets admit no beneficial exchange")
            }
        }
    }

    #[test]
    fn ca_pair_pipeline_certificate() {
        let model = fixtures::ca_pair();
        let outcome = beneficial_pipeline(&model, &model.exchange).unwrap();
        assert!(outcome.has_certificate());
    }

    #[test]
    fn zero_market_corollary_routes_agree() {
        let model = fixtures::zero_market();
        let report = check_corollary_zero_market(&model, &model.exchange).unwrap();
        assert!(report.criterion);
        assert!(report.pipeline_certificate);
        // Best generator: indicator of the first outcome, 3/4 - 1/4 = 1/2.
        assert_eq!(report.best_value, fr(1, 2));
    }

    #[test]
    fn zero_market_equal_views_absent() {
        let mut model = fixtures::zero_market();
        model.agents[1].subjective_measure = model.agents[0].subjective_measure.clone();
        let report = check_corollary_zero_market(&model, &model.exchange).unwrap();
        assert!(!report.criterion);
        assert!(!report.pipeline_certificate);
    }

    #[test]
    fn zero_market_precondition_rejects_markets() {
        let model = fixtures::fig1();
        assert!(matches!(
            check_corollary_zero_market(&model, &model.exchange),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn pipeline_requires_deterministic_vectors() {
        let mut model = fixtures::zero_market();
        model.exchange.includes_deterministic = false;
        assert!(matches!(
            beneficial_pipeline(&model, &model.exchange),
            Err(Error::HypothesisViolation(_))
        ));
    }

    #[test]
    fn line_search_needs_positive_derivative() {
        let model = fixtures::zero_market();
        let sols = tree_solutions(&model);
        let zero = crate::model::ExchangeVector::zero(2, 2);
        assert!(matches!(
            line_search_alpha(&model, &sols, &zero),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn certificates_survive_basis_rescaling() {
        let mut model = fixtures::fig1();
        for (k, y) in model.exchange.basis.iter_mut().enumerate() {
            let c = Rat::frac(2 * k as i64 + 1, 3);
            *y = y.scale(&c);
        }
        let outcome = beneficial_pipeline(&model, &model.exchange).unwrap();
        assert!(outcome.has_certificate());
    }

    #[test]
    fn cone_exchange_ignores_sign_flips() {
        // With a cone family, a generator whose aggregate price is negative
        // is not a violation.
        let model = fixtures::zero_market();
        let sols = tree_solutions(&model);
        let mut exchange = model.exchange.clone();
        exchange.kind = ExchangeKind::ConvexCone;
        // Keep only the generator priced at 1/4 - 3/4 < 0.
        exchange.basis = vec![exchange.basis[1].clone()];
        let report = polarity_check(&exchange, &sols);
        assert!(!report.violated());
        let mut flipped = model.exchange.clone();
        flipped.kind = ExchangeKind::ConvexCone;
        flipped.basis = vec![flipped.basis[0].clone()];
        let report = polarity_check(&flipped, &sols);
        assert!(report.violated());
    }
}
