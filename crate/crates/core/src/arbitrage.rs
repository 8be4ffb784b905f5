//! Individual and collective arbitrage detection with explicit witnesses,
//! martingale-measure polytopes, the fundamental-theorem cross-checks, and
//! market completeness classification.
//!
//! On a finite sample space every local martingale (and sigma martingale)
//! in discrete time with bounded-below stochastic integrals is a true
//! martingale, so a single polytope per agent serves both the martingale
//! and local-martingale formulations.

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{ExchangeSpace, ExchangeVector, MarketModel};
use crate::optim::{
    interior_point, AffineSimplexSet, InteriorAnswer, LinearProgram, LpOutcome, RowOp, Sense,
};
use crate::rational::{dot, sum, Rat};

/// Span of terminal payoffs reachable at zero cost by predictable trading.
#[derive(Clone, Debug)]
pub struct PayoffSpace {
    pub agent: usize,
    /// Linearly independent per-outcome payoff vectors: one-step asset
    /// increments localized to the atoms where the trade is decided.
    pub basis: Vec<Vec<Rat>>,
}

impl PayoffSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Payoff of the strategy with the given basis coefficients.
    pub fn combine(&self, coeffs: &[Rat], n: usize) -> Vec<Rat> {
        let mut out = vec![Rat::zero(); n];
        for (c, k) in coeffs.iter().zip(&self.basis) {
            for (o, v) in out.iter_mut().zip(k) {
                *o += &(c * v);
            }
        }
        out
    }
}

/// Build the payoff space of agent `i` from one-step increments.
pub fn payoff_space(model: &MarketModel, agent: usize) -> Result<PayoffSpace> {
    model.ensure_valid()?;
    let n = model.num_outcomes();
    let spec = &model.agents[agent];
    let mut raw: Vec<Vec<Rat>> = Vec::new();
    for t in 1..=model.horizon {
        let prev = spec.filtration.at(t - 1);
        for atom in &prev.atoms {
            for asset in &spec.assets {
                let mut v = vec![Rat::zero(); n];
                for &w in atom {
                    v[w] = &asset.at(t)[w] - &asset.at(t - 1)[w];
                }
                if v.iter().any(|x| !x.is_zero()) {
                    raw.push(v);
                }
            }
        }
    }
    let keep = linalg::independent_rows(&raw, n);
    Ok(PayoffSpace {
        agent,
        basis: keep.into_iter().map(|i| raw[i].clone()).collect(),
    })
}

/// A collective (or individual, when the exchange is zero) arbitrage:
/// payoffs plus transfer are nonnegative everywhere and positive somewhere.
#[derive(Clone, Debug)]
pub struct ArbitrageWitness {
    /// Strategy coefficients per agent over that agent's payoff basis.
    pub coefficients: Vec<Vec<Rat>>,
    /// Realized strategy payoff per agent and outcome.
    pub payoffs: Vec<Vec<Rat>>,
    pub exchange: ExchangeVector,
    /// `payoffs[i] + exchange.legs[i]`.
    pub totals: Vec<Vec<Rat>>,
}

impl ArbitrageWitness {
    /// Exact check of the defining sign pattern.
    pub fn verify(&self) -> bool {
        let mut some_positive = false;
        for total in &self.totals {
            for v in total {
                if v.is_negative() {
                    return false;
                }
                if v.is_positive() {
                    some_positive = true;
                }
            }
        }
        some_positive
    }
}

#[derive(Clone, Debug)]
pub enum NoArbitrage {
    Holds,
    Fails(Box<ArbitrageWitness>),
}

impl NoArbitrage {
    pub fn holds(&self) -> bool {
        matches!(self, NoArbitrage::Holds)
    }
}

/// Classical no-arbitrage for one agent: no nonnegative nonzero payoff in
/// the span of the trading basis. Decided by exact LP with the
/// normalization `sum of payoff entries = 1`.
pub fn check_no_arbitrage(model: &MarketModel, agent: usize) -> Result<NoArbitrage> {
    model.ensure_valid()?;
    let space = payoff_space(model, agent)?;
    let n = model.num_outcomes();
    let m = space.dim();
    if m == 0 {
        return Ok(NoArbitrage::Holds);
    }
    let mut lp = LinearProgram::new(Sense::Min, vec![Rat::zero(); m]);
    for j in 0..m {
        lp.set_free(j);
    }
    for w in 0..n {
        let row: Vec<Rat> = space.basis.iter().map(|k| k[w].clone()).collect();
        lp.push_row(row, RowOp::Ge, Rat::zero());
    }
    let total: Vec<Rat> = (0..m)
        .map(|j| sum(&space.basis[j]))
        .collect();
    lp.push_row(total, RowOp::Eq, Rat::one());
    match lp.solve() {
        LpOutcome::Optimal { point, .. } => {
            let payoff = space.combine(&point, n);
            let num_agents = model.num_agents();
            let mut coefficients = vec![Vec::new(); num_agents];
            coefficients[agent] = point;
            let mut payoffs = vec![vec![Rat::zero(); n]; num_agents];
            payoffs[agent] = payoff.clone();
            let witness = ArbitrageWitness {
                coefficients,
                totals: payoffs.clone(),
                payoffs,
                exchange: ExchangeVector::zero(num_agents, n),
            };
            debug_assert!(witness.verify());
            Ok(NoArbitrage::Fails(Box::new(witness)))
        }
        LpOutcome::Infeasible { .. } => Ok(NoArbitrage::Holds),
        LpOutcome::Unbounded { .. } => unreachable!("feasibility objective is constant"),
    }
}

/// Which family of measures a polytope describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolytopeKind {
    /// Martingale measures of one agent's assets in that agent's filtration
    /// (equal to the local-martingale family at finite scale).
    Individual { agent: usize },
    /// Vectors of per-agent martingale measures jointly pricing every
    /// allowed exchange at most zero.
    Collective,
}

/// Affine-plus-positivity description of a measure family. Coordinates are
/// stacked per agent; cone-kind exchange rows carry trailing slack
/// variables that are allowed to sit on the boundary.
#[derive(Clone, Debug)]
pub struct MeasurePolytope {
    pub kind: PolytopeKind,
    pub set: AffineSimplexSet,
    /// Agents owning each block of `block` coordinates, in order.
    pub agents: Vec<usize>,
    /// Number of outcomes per block.
    pub block: usize,
    /// Trailing slack coordinates (cone exchange rows only).
    pub slacks: usize,
}

impl MeasurePolytope {
    /// Extract agent `i`'s measure block from a stacked point.
    pub fn measure_of(&self, point: &[Rat], position: usize) -> Vec<Rat> {
        point[position * self.block..(position + 1) * self.block].to_vec()
    }

    pub fn interior(&self) -> InteriorAnswer {
        interior_point(&self.set)
    }
}

/// Martingale rows for one agent: for each decision atom and asset, the
/// expected one-step increment over the atom vanishes.
pub(crate) fn martingale_rows(model: &MarketModel, agent: usize) -> Vec<Vec<Rat>> {
    let n = model.num_outcomes();
    let spec = &model.agents[agent];
    let mut rows = Vec::new();
    for t in 1..=model.horizon {
        let prev = spec.filtration.at(t - 1);
        for atom in &prev.atoms {
            for asset in &spec.assets {
                let mut row = vec![Rat::zero(); n];
                for &w in atom {
                    row[w] = &asset.at(t)[w] - &asset.at(t - 1)[w];
                }
                if row.iter().any(|x| !x.is_zero()) {
                    rows.push(row);
                }
            }
        }
    }
    rows
}

/// The polytope of martingale measures for agent `i`'s assets.
pub fn martingale_polytope(model: &MarketModel, agent: usize) -> Result<MeasurePolytope> {
    model.ensure_valid()?;
    let n = model.num_outcomes();
    let mut set = AffineSimplexSet::new(n);
    set.push_row(vec![Rat::one(); n], Rat::one());
    for row in martingale_rows(model, agent) {
        set.push_row(row, Rat::zero());
    }
    Ok(MeasurePolytope {
        kind: PolytopeKind::Individual { agent },
        set,
        agents: vec![agent],
        block: n,
        slacks: 0,
    })
}

/// Fundamental-theorem cross-check for one agent: the arbitrage LP and the
/// interior query of the martingale polytope must agree.
#[derive(Clone, Debug)]
pub struct FtapReport {
    pub agent: usize,
    pub no_arbitrage: bool,
    pub equivalent_measure: Option<Vec<Rat>>,
    pub witness: Option<Box<ArbitrageWitness>>,
}

pub fn check_ftap(model: &MarketModel, agent: usize) -> Result<FtapReport> {
    let na = check_no_arbitrage(model, agent)?;
    let polytope = martingale_polytope(model, agent)?;
    let interior = polytope.interior();
    match (&na, &interior) {
        (NoArbitrage::Holds, InteriorAnswer::Yes { point, .. }) => Ok(FtapReport {
            agent,
            no_arbitrage: true,
            equivalent_measure: Some(point.clone()),
            witness: None,
        }),
        (NoArbitrage::Fails(w), InteriorAnswer::BoundaryOnly { .. })
        | (NoArbitrage::Fails(w), InteriorAnswer::Infeasible { .. }) => Ok(FtapReport {
            agent,
            no_arbitrage: false,
            equivalent_measure: None,
            witness: Some(w.clone()),
        }),
        _ => Err(Error::InternalInconsistency(format!(
            "agent {agent}: arbitrage LP and martingale polytope disagree (no_arbitrage={}, interior={})",
            na.holds(),
            interior.exists(),
        ))),
    }
}

/// No collective arbitrage: no choice of per-agent strategies and an
/// allowed exchange yields nonnegative totals for everyone and a positive
/// total somewhere. Exact LP with the normalization `sum of all totals = 1`
/// (the feasible set is a cone, so any witness scales).
pub fn check_no_collective_arbitrage(
    model: &MarketModel,
    exchange: &ExchangeSpace,
) -> Result<NoArbitrage> {
    model.ensure_valid()?;
    let n = model.num_outcomes();
    let num_agents = model.num_agents();
    let spaces: Vec<PayoffSpace> = (0..num_agents)
        .map(|i| payoff_space(model, i))
        .collect::<Result<Vec<_>>>()?;
    let dims: Vec<usize> = spaces.iter().map(PayoffSpace::dim).collect();
    let k = exchange.basis.len();
    let total_vars: usize = dims.iter().sum::<usize>() + k;
    if total_vars == 0 {
        return Ok(NoArbitrage::Holds);
    }

    let mut lp = LinearProgram::new(Sense::Min, vec![Rat::zero(); total_vars]);
    let strategy_offset: Vec<usize> = dims
        .iter()
        .scan(0usize, |acc, d| {
            let here = *acc;
            *acc += d;
            Some(here)
        })
        .collect();
    let exchange_offset = total_vars - k;
    for (i, space) in spaces.iter().enumerate() {
        for j in 0..space.dim() {
            lp.set_free(strategy_offset[i] + j);
        }
    }
    if exchange.kind == crate::model::ExchangeKind::VectorSpace {
        for j in 0..k {
            lp.set_free(exchange_offset + j);
        }
    }

    // Total payoff of agent i at outcome w, as a row over all variables.
    let entry_row = |i: usize, w: usize| -> Vec<Rat> {
        let mut row = vec![Rat::zero(); total_vars];
        for (j, basis_vec) in spaces[i].basis.iter().enumerate() {
            row[strategy_offset[i] + j] = basis_vec[w].clone();
        }
        for (j, y) in exchange.basis.iter().enumerate() {
            row[exchange_offset + j] = y.legs[i][w].clone();
        }
        row
    };

    let mut normalization = vec![Rat::zero(); total_vars];
    for i in 0..num_agents {
        for w in 0..n {
            let row = entry_row(i, w);
            for (acc, v) in normalization.iter_mut().zip(&row) {
                *acc += v;
            }
            lp.push_row(row, RowOp::Ge, Rat::zero());
        }
    }
    lp.push_row(normalization, RowOp::Eq, Rat::one());

    match lp.solve() {
        LpOutcome::Optimal { point, .. } => {
            let coefficients: Vec<Vec<Rat>> = (0..num_agents)
                .map(|i| point[strategy_offset[i]..strategy_offset[i] + dims[i]].to_vec())
                .collect();
            let payoffs: Vec<Vec<Rat>> = (0..num_agents)
                .map(|i| spaces[i].combine(&coefficients[i], n))
                .collect();
            let mut legs = vec![vec![Rat::zero(); n]; num_agents];
            for (j, y) in exchange.basis.iter().enumerate() {
                let c = &point[exchange_offset + j];
                if c.is_zero() {
                    continue;
                }
                for (leg, src) in legs.iter_mut().zip(&y.legs) {
                    for (acc, v) in leg.iter_mut().zip(src) {
                        *acc += &(c * v);
                    }
                }
            }
            let totals: Vec<Vec<Rat>> = payoffs
                .iter()
                .zip(&legs)
                .map(|(p, l)| p.iter().zip(l).map(|(a, b)| a + b).collect())
                .collect();
            let witness = ArbitrageWitness {
                coefficients,
                payoffs,
                exchange: ExchangeVector { legs },
                totals,
            };
            debug_assert!(witness.verify());
            Ok(NoArbitrage::Fails(Box::new(witness)))
        }
        LpOutcome::Infeasible { .. } => Ok(NoArbitrage::Holds),
        LpOutcome::Unbounded { .. } => unreachable!("feasibility objective is constant"),
    }
}

/// Stacked polytope of collective martingale measures: per-agent martingale
/// rows plus, for every exchange generator, an aggregate-price row. Vector
/// space generators force equality (a linear functional that is nonpositive
/// on a subspace vanishes); cone generators keep the inequality through a
/// slack variable.
pub fn collective_martingale_polytope(
    model: &MarketModel,
    exchange: &ExchangeSpace,
) -> Result<MeasurePolytope> {
    model.ensure_valid()?;
    let n = model.num_outcomes();
    let num_agents = model.num_agents();
    let is_cone = exchange.kind == crate::model::ExchangeKind::ConvexCone;
    let k = exchange.basis.len();
    let slacks = if is_cone { k } else { 0 };
    let dim = num_agents * n + slacks;

    let mut set = AffineSimplexSet::new(dim);
    for s in 0..slacks {
        set.relax_positivity(num_agents * n + s);
    }
    for i in 0..num_agents {
        let mut row = vec![Rat::zero(); dim];
        row[i * n..(i + 1) * n].fill(Rat::one());
        set.push_row(row, Rat::one());
        for mrow in martingale_rows(model, i) {
            let mut row = vec![Rat::zero(); dim];
            row[i * n..i * n + n].clone_from_slice(&mrow);
            set.push_row(row, Rat::zero());
        }
    }
    for (j, y) in exchange.basis.iter().enumerate() {
        let mut row = vec![Rat::zero(); dim];
        for (i, leg) in y.legs.iter().enumerate() {
            row[i * n..(i + 1) * n].clone_from_slice(leg);
        }
        if is_cone {
            row[num_agents * n + j] = Rat::one();
        }
        set.push_row(row, Rat::zero());
    }

    Ok(MeasurePolytope {
        kind: PolytopeKind::Collective,
        set,
        agents: (0..num_agents).collect(),
        block: n,
        slacks,
    })
}

#[derive(Clone, Debug)]
pub struct CollectiveFtapReport {
    pub no_collective_arbitrage: bool,
    /// Per-agent equivalent measures jointly pricing the exchange family.
    pub measures: Option<Vec<Vec<Rat>>>,
    pub witness: Option<Box<ArbitrageWitness>>,
}

/// Collective fundamental theorem: the collective-arbitrage LP and the
/// interior query of the stacked polytope must agree. Requires the
/// deterministic zero-sum vectors inside the family.
pub fn check_collective_ftap(
    model: &MarketModel,
    exchange: &ExchangeSpace,
) -> Result<CollectiveFtapReport> {
    if !exchange.includes_deterministic {
        return Err(Error::HypothesisViolation(
            "collective FTAP needs the deterministic zero-sum vectors inside the exchange family"
                .into(),
        ));
    }
    let nca = check_no_collective_arbitrage(model, exchange)?;
    let polytope = collective_martingale_polytope(model, exchange)?;
    let interior = polytope.interior();
    match (&nca, &interior) {
        (NoArbitrage::Holds, InteriorAnswer::Yes { point, .. }) => Ok(CollectiveFtapReport {
            no_collective_arbitrage: true,
            measures: Some(
                (0..model.num_agents())
                    .map(|i| polytope.measure_of(point, i))
                    .collect(),
            ),
            witness: None,
        }),
        (NoArbitrage::Fails(w), InteriorAnswer::BoundaryOnly { .. })
        | (NoArbitrage::Fails(w), InteriorAnswer::Infeasible { .. }) => Ok(CollectiveFtapReport {
            no_collective_arbitrage: false,
            measures: None,
            witness: Some(w.clone()),
        }),
        _ => Err(Error::InternalInconsistency(format!(
            "collective arbitrage LP and collective polytope disagree (nca={}, interior={})",
            nca.holds(),
            interior.exists(),
        ))),
    }
}

/// Classical completeness of one agent's market: the zero-cost payoff span
/// covers every terminal-measurable direction up to the pricing constraint.
pub fn check_completeness(model: &MarketModel, agent: usize) -> Result<bool> {
    if !check_no_arbitrage(model, agent)?.holds() {
        return Err(Error::Precondition(format!(
            "agent {agent}: completeness is classified under no-arbitrage, which fails here"
        )));
    }
    let space = payoff_space(model, agent)?;
    let atoms = model.agents[agent].filtration.terminal().num_atoms();
    Ok(space.dim() == atoms - 1)
}

/// Aggregate value of an exchange vector under a vector of measures.
pub fn aggregate_price(measures: &[Vec<Rat>], y: &ExchangeVector) -> Rat {
    let mut acc = Rat::zero();
    for (q, leg) in measures.iter().zip(&y.legs) {
        acc += dot(q, leg);
    }
    acc
}
