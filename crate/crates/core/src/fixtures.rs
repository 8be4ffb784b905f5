//! Named example models used by the test suites and the CLI's
//! `fixtures emit` verb.

use crate::model::{
    AdaptedProcess, AgentSpec, ExchangeKind, ExchangeSpace, ExchangeVector, Filtration,
    MarketModel, Partition, SampleSpace,
};
use crate::preferences::UtilityFunction;
use crate::rational::Rat;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixtureName {
    /// Two agents on an eight-outcome two-period tree with a shared
    /// four-atom time-1 partition. Each agent trades one stock; the allowed
    /// exchanges are the time-1-measurable zero-sum pairs. No collective
    /// arbitrage, yet the markets are collectively incomplete and the
    /// agents' variance-minimal pricing measures disagree across time-1
    /// atoms, so strictly improving exchanges exist.
    ///
    /// The exchange family is all time-1-measurable zero-sum pairs. This
    /// family is sometimes quoted as three-dimensional; the stored basis
    /// follows the definition itself — four indicator-pair generators, one
    /// per time-1 atom — whose span has dimension four.
    Fig1,
    /// Two agents holding the same complete one-period binomial market with
    /// different subjective measures. Individual completeness pins both
    /// pricing measures to the same risk-neutral one, so no beneficial
    /// exchange exists.
    TwinComplete,
    /// Two agents with disjoint risk-neutral measures on a common binomial
    /// sample space; a collective arbitrage exists and with it a strictly
    /// beneficial exchange.
    CaPair,
    /// Two agents with no traded assets and opposite subjective views;
    /// beneficial exchanges reduce to the sign of aggregate subjective
    /// expectations.
    ZeroMarket,
}

impl FixtureName {
    pub const ALL: [FixtureName; 4] = [
        FixtureName::Fig1,
        FixtureName::TwinComplete,
        FixtureName::CaPair,
        FixtureName::ZeroMarket,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FixtureName::Fig1 => "fig1",
            FixtureName::TwinComplete => "twin-complete",
            FixtureName::CaPair => "ca-pair",
            FixtureName::ZeroMarket => "zero-market",
        }
    }
}

impl FromStr for FixtureName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fig1" => Ok(FixtureName::Fig1),
            "twin-complete" => Ok(FixtureName::TwinComplete),
            "ca-pair" => Ok(FixtureName::CaPair),
            "zero-market" => Ok(FixtureName::ZeroMarket),
            other => Err(format!(
                "unknown fixture '{other}' (expected fig1, twin-complete, ca-pair, zero-market)"
            )),
        }
    }
}

pub fn fixture(name: FixtureName) -> MarketModel {
    match name {
        FixtureName::Fig1 => fig1(),
        FixtureName::TwinComplete => twin_complete(),
        FixtureName::CaPair => ca_pair(),
        FixtureName::ZeroMarket => zero_market(),
    }
}

fn ints(values: &[i64]) -> Vec<Rat> {
    values.iter().map(|&v| Rat::from_int(v)).collect()
}

fn indicator_pair(atom: &[usize], n: usize) -> ExchangeVector {
    let mut leg = vec![Rat::zero(); n];
    for &w in atom {
        leg[w] = Rat::one();
    }
    let neg = leg.iter().map(|v| -v).collect();
    ExchangeVector {
        legs: vec![leg, neg],
    }
}

/// Eight-outcome two-period two-agent model; see [`FixtureName::Fig1`].
pub fn fig1() -> MarketModel {
    let n = 8;
    let outcomes: Vec<String> = (1..=n).map(|i| format!("w{i}")).collect();
    let uniform = vec![Rat::frac(1, 8); n];
    let time1 = Partition {
        atoms: vec![vec![0, 1], vec![2, 3], vec![4, 5], vec![6, 7]],
    };
    let filtration = Filtration {
        partitions: vec![Partition::trivial(n), time1.clone(), Partition::points(n)],
    };

    let agent = |name: &str, per_time: Vec<Vec<Rat>>| AgentSpec {
        name: Some(name.to_string()),
        subjective_measure: uniform.clone(),
        filtration: filtration.clone(),
        assets: vec![
            AdaptedProcess::from_atom_values(&filtration, &per_time, n)
                .expect("fixture asset shape"),
        ],
        utility: UtilityFunction::truncated_quadratic(Rat::one()).expect("gamma > 0"),
        endowment: vec![-Rat::one(); n],
    };

    let stock1 = vec![ints(&[8]), ints(&[12, 4, 4, 4]), ints(&[24, 8, 6, 2, 5, 3, 6, 2])];
    let stock2 = vec![
        ints(&[20]),
        ints(&[24, 16, 4, 20]),
        ints(&[16, 48, 20, 12, 6, 2, 24, 16]),
    ];

    let basis = time1
        .atoms
        .iter()
        .map(|atom| indicator_pair(atom, n))
        .collect();

    MarketModel {
        space: SampleSpace {
            outcomes,
            reference_measure: uniform.clone(),
        },
        horizon: 2,
        agents: vec![agent("agent1", stock1), agent("agent2", stock2)],
        exchange: ExchangeSpace {
            kind: ExchangeKind::VectorSpace,
            zero_sum: true,
            includes_deterministic: true,
            measurability: Some(vec![time1.clone(), time1]),
            basis,
        },
    }
}

fn two_outcome_space() -> (Vec<String>, Filtration) {
    let outcomes = vec!["up".to_string(), "down".to_string()];
    let filtration = Filtration {
        partitions: vec![Partition::trivial(2), Partition::points(2)],
    };
    (outcomes, filtration)
}

fn all_zero_sum_pairs(n: usize) -> Vec<ExchangeVector> {
    (0..n).map(|w| indicator_pair(&[w], n)).collect()
}

/// Two agents on the same complete binomial market; see
/// [`FixtureName::TwinComplete`].
pub fn twin_complete() -> MarketModel {
    let (outcomes, filtration) = two_outcome_space();
    let stock = vec![ints(&[1]), vec![Rat::from_int(2), Rat::frac(1, 2)]];
    let agent = |measure: Vec<Rat>, gamma: Rat| AgentSpec {
        name: None,
        subjective_measure: measure,
        filtration: filtration.clone(),
        assets: vec![AdaptedProcess::from_atom_values(&filtration, &stock, 2).unwrap()],
        utility: UtilityFunction::truncated_quadratic(gamma).unwrap(),
        endowment: vec![-Rat::one(); 2],
    };
    MarketModel {
        space: SampleSpace {
            outcomes,
            reference_measure: vec![Rat::frac(1, 2); 2],
        },
        horizon: 1,
        agents: vec![
            agent(vec![Rat::frac(1, 2), Rat::frac(1, 2)], Rat::one()),
            agent(vec![Rat::frac(2, 3), Rat::frac(1, 3)], Rat::from_int(2)),
        ],
        exchange: ExchangeSpace {
            kind: ExchangeKind::VectorSpace,
            zero_sum: true,
            includes_deterministic: true,
            measurability: None,
            basis: all_zero_sum_pairs(2),
        },
    }
}

/// Two binomial agents with disjoint risk-neutral measures; see
/// [`FixtureName::CaPair`].
pub fn ca_pair() -> MarketModel {
    let (outcomes, filtration) = two_outcome_space();
    let agent = |terminal: Vec<Rat>| AgentSpec {
        name: None,
        subjective_measure: vec![Rat::frac(1, 2); 2],
        filtration: filtration.clone(),
        assets: vec![
            AdaptedProcess::from_atom_values(&filtration, &[ints(&[1]), terminal], 2).unwrap(),
        ],
        utility: UtilityFunction::truncated_quadratic(Rat::one()).unwrap(),
        endowment: vec![-Rat::one(); 2],
    };
    MarketModel {
        space: SampleSpace {
            outcomes,
            reference_measure: vec![Rat::frac(1, 2); 2],
        },
        horizon: 1,
        agents: vec![
            agent(vec![Rat::from_int(2), Rat::frac(1, 2)]),
            agent(vec![Rat::from_int(3), Rat::frac(1, 2)]),
        ],
        exchange: ExchangeSpace {
            kind: ExchangeKind::VectorSpace,
            zero_sum: true,
            includes_deterministic: true,
            measurability: None,
            basis: all_zero_sum_pairs(2),
        },
    }
}

/// Two agents, no assets, opposite views; see [`FixtureName::ZeroMarket`].
pub fn zero_market() -> MarketModel {
    let (outcomes, filtration) = two_outcome_space();
    let agent = |measure: Vec<Rat>| AgentSpec {
        name: None,
        subjective_measure: measure,
        filtration: filtration.clone(),
        assets: Vec::new(),
        utility: UtilityFunction::exponential(Rat::one()).unwrap(),
        endowment: vec![Rat::zero(); 2],
    };
    MarketModel {
        space: SampleSpace {
            outcomes,
            reference_measure: vec![Rat::frac(1, 2); 2],
        },
        horizon: 1,
        agents: vec![
            agent(vec![Rat::frac(3, 4), Rat::frac(1, 4)]),
            agent(vec![Rat::frac(1, 4), Rat::frac(3, 4)]),
        ],
        exchange: ExchangeSpace {
            kind: ExchangeKind::VectorSpace,
            zero_sum: true,
            includes_deterministic: true,
            measurability: None,
            basis: all_zero_sum_pairs(2),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_fixtures_validate() {
        for name in FixtureName::ALL {
            let model = fixture(name);
            let report = model.validate();
            assert!(report.is_valid(), "{name:?}: {}", report.summary());
        }
    }

    #[test]
    fn fig1_tree_arithmetic() {
        let model = fig1();
        // Root identity for the first stock: any time-1 masses summing to
        // one with 1/2 on the first atom price the root at 8.
        let s1 = &model.agents[0].assets[0];
        assert_eq!(s1.at(0)[0], Rat::from_int(8));
        // Second stock at the first atom: (3/4) 16 + (1/4) 48 = 24.
        let s2 = &model.agents[1].assets[0];
        let price = Rat::frac(3, 4) * s2.at(2)[0].clone() + Rat::frac(1, 4) * s2.at(2)[1].clone();
        assert_eq!(price, s2.at(1)[0]);
        assert_eq!(s2.at(1)[0], Rat::from_int(24));
    }

    #[test]
    fn fig1_root_price_holds_for_any_family_member() {
        // The first stock's root identity: time-1 masses (1/2, q, q',
        // 1/2 - q - q') price the root at 8 for every choice of q, q'.
        let model = fig1();
        let s1 = &model.agents[0].assets[0];
        let time1 = model.agents[0].filtration.at(1);
        for (q, qp) in [(1i64, 1i64), (2, 3), (5, 1)] {
            let (q, qp) = (Rat::frac(q, 12), Rat::frac(qp, 12));
            let masses = [
                Rat::frac(1, 2),
                q.clone(),
                qp.clone(),
                Rat::frac(1, 2) - q - qp,
            ];
            let mut price = Rat::zero();
            for (atom, mass) in time1.atoms.iter().zip(&masses) {
                price += &(mass * &s1.at(1)[atom[0]]);
            }
            assert_eq!(price, Rat::from_int(8));
        }
    }

    #[test]
    fn fixture_names_round_trip() {
        for name in FixtureName::ALL {
            let parsed: FixtureName = name.as_str().parse().unwrap();
            assert_eq!(parsed, name);
        }
        assert!("bogus".parse::<FixtureName>().is_err());
    }

    #[test]
    fn zero_market_has_empty_payoffs() {
        let model = zero_market();
        assert!(model.agents.iter().all(|a| a.assets.is_empty()));
    }
}
