//! Seeded random market models for the property suites: small trees with
//! rational data, heterogeneous filtrations, a tunable mix of
//! arbitrage-free and arbitrage-prone assets, and exchange families that
//! always contain the deterministic zero-sum vectors.

use crate::minimax::MinimaxSolution;
use crate::model::{
    AdaptedProcess, AgentSpec, ExchangeKind, ExchangeSpace, ExchangeVector, Filtration,
    MarketModel, Partition, SampleSpace,
};
use crate::preferences::UtilityFunction;
use crate::rational::Rat;
use rand::Rng;

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub max_outcomes: usize,
    pub max_periods: usize,
    pub max_agents: usize,
    /// Probability that an inner tree node prices strictly inside its
    /// children (martingale-friendly); lower values breed arbitrage.
    pub fair_node_bias: f64,
    /// Include exponential-utility agents (their minimax measures stay on
    /// the float track).
    pub allow_exponential: bool,
    /// Extra random zero-sum generators beyond the deterministic ones.
    pub max_extra_exchanges: usize,
    /// Probability of a cone-shaped (rather than vector-space) family.
    pub cone_probability: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            max_outcomes: 8,
            max_periods: 2,
            max_agents: 3,
            fair_node_bias: 0.7,
            allow_exponential: true,
            max_extra_exchanges: 2,
            cone_probability: 0.25,
        }
    }
}

fn random_measure(rng: &mut impl Rng, n: usize) -> Vec<Rat> {
    let weights: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=6)).collect();
    let total: i64 = weights.iter().sum();
    weights
        .iter()
        .map(|&w| Rat::frac(w, total))
        .collect()
}

/// Split the range `[lo, hi)` into `k` nonempty contiguous blocks.
fn split_range(rng: &mut impl Rng, lo: usize, hi: usize, k: usize) -> Vec<Vec<usize>> {
    let len = hi - lo;
    debug_assert!(k >= 1 && k <= len);
    let mut cuts: Vec<usize> = (1..len).collect();
    // Choose k-1 interior cut points.
    for i in (1..cuts.len()).rev() {
        cuts.swap(i, rng.gen_range(0..=i));
    }
    let mut chosen: Vec<usize> = cuts.into_iter().take(k - 1).collect();
    chosen.sort_unstable();
    chosen.push(len);
    let mut atoms = Vec::with_capacity(k);
    let mut start = 0;
    for c in chosen {
        atoms.push((lo + start..lo + c).collect());
        start = c;
    }
    atoms
}

fn random_filtration(rng: &mut impl Rng, n: usize, horizon: usize) -> Filtration {
    let mut partitions = vec![Partition::trivial(n)];
    for _ in 1..=horizon {
        let prev = partitions.last().unwrap().clone();
        let mut atoms = Vec::new();
        for atom in &prev.atoms {
            let len = atom.len();
            let k = if len == 1 {
                1
            } else {
                rng.gen_range(1..=len.min(3))
            };
            let lo = atom[0];
            let hi = atom[len - 1] + 1;
            atoms.extend(split_range(rng, lo, hi, k));
        }
        partitions.push(Partition { atoms });
    }
    partitions.pop();
    // Terminal partition: refine the last intermediate one, sometimes all
    // the way to points, sometimes not.
    let prev = partitions.last().unwrap().clone();
    let mut atoms = Vec::new();
    for atom in &prev.atoms {
        let len = atom.len();
        let k = if len == 1 || rng.gen_bool(0.25) {
            1
        } else {
            rng.gen_range(2..=len)
        };
        atoms.extend(split_range(rng, atom[0], atom[len - 1] + 1, k));
    }
    partitions.push(Partition { atoms });
    Filtration { partitions }
}

/// Backward-built scalar asset: terminal values per atom, inner nodes
/// either strictly inside their children's range or deliberately off.
fn random_asset(
    rng: &mut impl Rng,
    filtration: &Filtration,
    n: usize,
    fair_bias: f64,
) -> AdaptedProcess {
    let horizon = filtration.partitions.len() - 1;
    let mut values: Vec<Vec<Rat>> = vec![vec![Rat::zero(); n]; horizon + 1];
    let terminal = filtration.at(horizon);
    for atom in &terminal.atoms {
        let v = Rat::from_int(rng.gen_range(1..=12));
        for &w in atom {
            values[horizon][w] = v.clone();
        }
    }
    let mixes = [
        Rat::frac(1, 4),
        Rat::frac(1, 3),
        Rat::frac(1, 2),
        Rat::frac(2, 3),
        Rat::frac(3, 4),
    ];
    for t in (0..horizon).rev() {
        for atom in &filtration.at(t).atoms {
            let lo = atom.iter().map(|&w| values[t + 1][w].clone()).min().unwrap();
            let hi = atom.iter().map(|&w| values[t + 1][w].clone()).max().unwrap();
            let v = if rng.gen_bool(fair_bias) {
                let mix = mixes[rng.gen_range(0..mixes.len())].clone();
                &lo + &(&mix * &(&hi - &lo))
            } else {
                Rat::from_int(rng.gen_range(1..=12))
            };
            for &w in atom {
                values[t][w] = v.clone();
            }
        }
    }
    AdaptedProcess { values }
}

fn random_utility(rng: &mut impl Rng, allow_exponential: bool) -> UtilityFunction {
    let gammas = [Rat::frac(1, 2), Rat::one(), Rat::from_int(2)];
    let gamma = gammas[rng.gen_range(0..gammas.len())].clone();
    if allow_exponential && rng.gen_bool(0.4) {
        UtilityFunction::exponential(gamma).unwrap()
    } else {
        UtilityFunction::truncated_quadratic(gamma).unwrap()
    }
}

fn random_endowment(rng: &mut impl Rng, terminal: &Partition, n: usize) -> Vec<Rat> {
    let levels = [
        Rat::from_int(-2),
        Rat::from_int(-1),
        Rat::frac(-1, 2),
        Rat::frac(-1, 4),
    ];
    if rng.gen_bool(0.7) {
        vec![levels[rng.gen_range(0..levels.len())].clone(); n]
    } else {
        let mut x = vec![Rat::zero(); n];
        for atom in &terminal.atoms {
            let v = levels[rng.gen_range(0..levels.len())].clone();
            for &w in atom {
                x[w] = v.clone();
            }
        }
        x
    }
}

/// Random zero-sum exchange measurable for every agent: legs piecewise
/// constant on the meet of the terminal partitions, last leg balancing.
fn random_exchange_vector(
    rng: &mut impl Rng,
    meet: &Partition,
    agents: usize,
    n: usize,
) -> ExchangeVector {
    let mut legs: Vec<Vec<Rat>> = Vec::with_capacity(agents);
    for _ in 0..agents - 1 {
        let mut leg = vec![Rat::zero(); n];
        for atom in &meet.atoms {
            let v = Rat::frac(rng.gen_range(-4..=4), 2);
            for &w in atom {
                leg[w] = v.clone();
            }
        }
        legs.push(leg);
    }
    let mut last = vec![Rat::zero(); n];
    for w in 0..n {
        let mut acc = Rat::zero();
        for leg in &legs {
            acc += &leg[w];
        }
        last[w] = -acc;
    }
    legs.push(last);
    ExchangeVector { legs }
}

pub fn random_model(rng: &mut impl Rng, cfg: &SweepConfig) -> MarketModel {
    let n = rng.gen_range(2..=cfg.max_outcomes);
    let horizon = rng.gen_range(1..=cfg.max_periods);
    let agents_count = rng.gen_range(1..=cfg.max_agents);
    let outcomes: Vec<String> = (1..=n).map(|i| format!("w{i}")).collect();
    let reference = random_measure(rng, n);

    let shared_filtration = random_filtration(rng, n, horizon);
    let share = rng.gen_bool(0.5);

    let mut agents = Vec::with_capacity(agents_count);
    for _ in 0..agents_count {
        let filtration = if share {
            shared_filtration.clone()
        } else {
            random_filtration(rng, n, horizon)
        };
        let num_assets = rng.gen_range(1..=2);
        let assets = (0..num_assets)
            .map(|_| random_asset(rng, &filtration, n, cfg.fair_node_bias))
            .collect();
        let endowment = random_endowment(rng, filtration.terminal(), n);
        agents.push(AgentSpec {
            name: None,
            subjective_measure: random_measure(rng, n),
            utility: random_utility(rng, cfg.allow_exponential),
            endowment,
            assets,
            filtration,
        });
    }

    let meet = agents
        .iter()
        .map(|a| a.filtration.terminal().clone())
        .reduce(|a, b| a.meet(&b))
        .unwrap();

    let mut basis: Vec<ExchangeVector> = Vec::new();
    if agents_count >= 2 {
        for j in 0..agents_count - 1 {
            let mut x = vec![Rat::zero(); agents_count];
            x[j] = Rat::one();
            x[agents_count - 1] = -Rat::one();
            basis.push(ExchangeVector::deterministic(&x, n));
        }
        for _ in 0..rng.gen_range(0..=cfg.max_extra_exchanges) {
            basis.push(random_exchange_vector(rng, &meet, agents_count, n));
        }
    }
    let kind = if rng.gen_bool(cfg.cone_probability) {
        ExchangeKind::ConvexCone
    } else {
        ExchangeKind::VectorSpace
    };
    // A cone family keeps the deterministic vectors two-sided.
    if kind == ExchangeKind::ConvexCone {
        let negs: Vec<ExchangeVector> = basis.iter().map(ExchangeVector::negate).collect();
        basis.extend(negs);
    }

    let model = MarketModel {
        space: SampleSpace {
            outcomes,
            reference_measure: reference,
        },
        horizon,
        agents,
        exchange: ExchangeSpace {
            kind,
            zero_sum: true,
            includes_deterministic: true,
            measurability: Some(vec![meet; agents_count]),
            basis,
        },
    };
    debug_assert!(model.validate().is_valid(), "{}", model.validate().summary());
    model
}

/// Best simultaneous improvement found by sampling random exchanges from
/// the family at several scales: the maximum over samples of the minimum
/// per-agent utility gain. Used as the falsification side of the
/// beneficial-exchange equivalence.
pub fn randomized_improvement_search(
    model: &MarketModel,
    exchange: &ExchangeSpace,
    solutions: &[MinimaxSolution],
    samples: usize,
    rng: &mut impl Rng,
) -> f64 {
    let k = exchange.basis.len();
    if k == 0 {
        return f64::NEG_INFINITY;
    }
    let spaces: Vec<_> = (0..model.num_agents())
        .map(|i| crate::arbitrage::payoff_space(model, i).expect("valid model"))
        .collect();
    let before: Vec<f64> = solutions.iter().map(|s| s.primal_value).collect();
    let scales = [Rat::one(), Rat::frac(1, 4), Rat::frac(1, 32), Rat::frac(1, 256)];
    let mut best = f64::NEG_INFINITY;
    for _ in 0..samples {
        // Random direction on the basis sphere, snapped to rationals; cone
        // families only take nonnegative combinations.
        let mut coeffs: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if exchange.kind == ExchangeKind::ConvexCone {
            for c in coeffs.iter_mut() {
                *c = c.abs();
            }
        }
        let norm: f64 = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm < 1e-9 {
            continue;
        }
        let coeffs: Vec<Rat> = coeffs
            .iter()
            .map(|c| Rat::approximate_f64(c / norm, 1_000_000).unwrap_or_else(Rat::zero))
            .collect();
        let mut y = ExchangeVector::zero(model.num_agents(), model.num_outcomes());
        for (c, b) in coeffs.iter().zip(&exchange.basis) {
            if !c.is_zero() {
                y = y.add(&b.scale(c));
            }
        }
        for scale in &scales {
            let mut min_gain = f64::INFINITY;
            for i in 0..model.num_agents() {
                let leg: Vec<Rat> = y.legs[i].iter().map(|v| v * scale).collect();
                let gain = match crate::minimax::indirect_utility_with(
                    model,
                    i,
                    &spaces[i],
                    Some(&leg),
                ) {
                    Ok(iu) => iu.value - before[i],
                    Err(_) => f64::NEG_INFINITY,
                };
                min_gain = min_gain.min(gain);
                if min_gain == f64::NEG_INFINITY {
                    break;
                }
            }
            best = best.max(min_gain);
        }
    }
    best
}
