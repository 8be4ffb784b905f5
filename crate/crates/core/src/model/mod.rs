//! Segmented-market models on a finite sample space: per-agent subjective
//! measures, filtrations as explicit partition chains, adapted price
//! processes, endowments, and the space of allowed risk exchanges.
//!
//! All data is exact rational and every value is immutable after
//! construction, so models are freely shared across threads.

mod file;
mod validate;

pub use file::ModelFile;
pub use validate::{ValidationReport, Violation};

use crate::error::{Error, Result};
use crate::rational::Rat;
use serde::Serialize;

/// Finite sample space with the reference probability (every outcome has
/// strictly positive mass, so "almost surely" means "everywhere").
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSpace {
    pub outcomes: Vec<String>,
    pub reference_measure: Vec<Rat>,
}

impl SampleSpace {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }
}

/// Partition of the outcome set into disjoint atoms (outcome indices).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub atoms: Vec<Vec<usize>>,
}

impl Partition {
    pub fn trivial(n: usize) -> Self {
        Partition {
            atoms: vec![(0..n).collect()],
        }
    }

    pub fn points(n: usize) -> Self {
        Partition {
            atoms: (0..n).map(|i| vec![i]).collect(),
        }
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    /// Checks coverage and disjointness over `n` outcomes.
    pub fn is_valid(&self, n: usize) -> bool {
        let mut seen = vec![false; n];
        for atom in &self.atoms {
            if atom.is_empty() {
                return false;
            }
            for &w in atom {
                if w >= n || seen[w] {
                    return false;
                }
                seen[w] = true;
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Atom index containing outcome `w`.
    pub fn atom_of(&self, w: usize) -> usize {
        self.atoms
            .iter()
            .position(|a| a.contains(&w))
            .expect("outcome not covered by partition")
    }

    /// True when every atom of `self` is contained in an atom of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.atoms.iter().all(|atom| {
            coarser
                .atoms
                .iter()
                .any(|big| atom.iter().all(|w| big.contains(w)))
        })
    }

    /// A random variable is measurable iff constant on every atom.
    pub fn is_measurable(&self, x: &[Rat]) -> bool {
        self.atoms.iter().all(|atom| {
            let first = &x[atom[0]];
            atom.iter().all(|&w| &x[w] == first)
        })
    }

    /// Finest partition coarser than both inputs (outcomes connected through
    /// overlapping atoms end up together).
    pub fn meet(&self, other: &Partition) -> Partition {
        let n: usize = self.atoms.iter().map(Vec::len).sum();
        let mut group: Vec<usize> = (0..n).collect();
        fn root(group: &mut [usize], mut i: usize) -> usize {
            while group[i] != i {
                group[i] = group[group[i]];
                i = group[i];
            }
            i
        }
        for part in [self, other] {
            for atom in &part.atoms {
                for w in &atom[1..] {
                    let (a, b) = (root(&mut group, atom[0]), root(&mut group, *w));
                    group[a.max(b)] = a.min(b);
                }
            }
        }
        let mut atoms: Vec<Vec<usize>> = Vec::new();
        let mut index = vec![usize::MAX; n];
        for w in 0..n {
            let r = root(&mut group, w);
            if index[r] == usize::MAX {
                index[r] = atoms.len();
                atoms.push(Vec::new());
            }
            atoms[index[r]].push(w);
        }
        Partition { atoms }
    }
}

/// Filtration as a refinement chain of partitions, one per trading time
/// `t = 0..=T`; time zero is the trivial partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Filtration {
    pub partitions: Vec<Partition>,
}

impl Filtration {
    pub fn horizon(&self) -> usize {
        self.partitions.len().saturating_sub(1)
    }

    pub fn at(&self, t: usize) -> &Partition {
        &self.partitions[t]
    }

    pub fn terminal(&self) -> &Partition {
        self.partitions.last().expect("empty filtration")
    }
}

/// Scalar adapted process stored per time and outcome; adaptedness means
/// constancy on each atom of the filtration at that time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdaptedProcess {
    /// `values[t][outcome]`
    pub values: Vec<Vec<Rat>>,
}

impl AdaptedProcess {
    /// Expand per-atom values into per-outcome form.
    pub fn from_atom_values(filtration: &Filtration, per_time: &[Vec<Rat>], n: usize) -> Result<Self> {
        if per_time.len() != filtration.partitions.len() {
            return Err(Error::InvalidModel(format!(
                "asset has {} time slices, filtration has {}",
                per_time.len(),
                filtration.partitions.len()
            )));
        }
        let mut values = Vec::with_capacity(per_time.len());
        for (t, slice) in per_time.iter().enumerate() {
            let part = filtration.at(t);
            let mut row = vec![Rat::zero(); n];
            if slice.len() == part.num_atoms() {
                for (atom, v) in part.atoms.iter().zip(slice) {
                    for &w in atom {
                        row[w] = v.clone();
                    }
                }
            } else if slice.len() == n {
                row = slice.clone();
            } else {
                return Err(Error::InvalidModel(format!(
                    "asset slice at t={t} has {} values; expected {} atoms or {} outcomes",
                    slice.len(),
                    part.num_atoms(),
                    n
                )));
            }
            values.push(row);
        }
        Ok(AdaptedProcess { values })
    }

    pub fn at(&self, t: usize) -> &[Rat] {
        &self.values[t]
    }
}

#[derive(Clone, Debug)]
pub struct AgentSpec {
    pub name: Option<String>,
    /// Subjective probability, equivalent to the reference measure.
    pub subjective_measure: Vec<Rat>,
    pub filtration: Filtration,
    pub assets: Vec<AdaptedProcess>,
    pub utility: crate::preferences::UtilityFunction,
    /// Endowment per outcome, measurable w.r.t. the terminal partition.
    pub endowment: Vec<Rat>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExchangeKind {
    VectorSpace,
    ConvexCone,
}

/// One allowed exchange: a transfer per agent and outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExchangeVector {
    /// `legs[agent][outcome]`
    pub legs: Vec<Vec<Rat>>,
}

impl ExchangeVector {
    pub fn zero(agents: usize, outcomes: usize) -> Self {
        ExchangeVector {
            legs: vec![vec![Rat::zero(); outcomes]; agents],
        }
    }

    /// Deterministic exchange with constant legs `x`.
    pub fn deterministic(x: &[Rat], outcomes: usize) -> Self {
        ExchangeVector {
            legs: x.iter().map(|v| vec![v.clone(); outcomes]).collect(),
        }
    }

    pub fn is_zero_sum(&self) -> bool {
        let outcomes = self.legs.first().map_or(0, Vec::len);
        (0..outcomes).all(|w| {
            let mut s = Rat::zero();
            for leg in &self.legs {
                s += &leg[w];
            }
            s.is_zero()
        })
    }

    /// Flatten into a single vector, agent-major.
    pub fn stacked(&self) -> Vec<Rat> {
        self.legs.iter().flatten().cloned().collect()
    }

    pub fn scale(&self, c: &Rat) -> ExchangeVector {
        ExchangeVector {
            legs: self
                .legs
                .iter()
                .map(|leg| leg.iter().map(|v| v * c).collect())
                .collect(),
        }
    }

    pub fn add(&self, other: &ExchangeVector) -> ExchangeVector {
        ExchangeVector {
            legs: self
                .legs
                .iter()
                .zip(&other.legs)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        }
    }

    pub fn negate(&self) -> ExchangeVector {
        self.scale(&-Rat::one())
    }
}

/// Family of allowed exchanges: the span (or conic hull) of the basis.
#[derive(Clone, Debug)]
pub struct ExchangeSpace {
    pub kind: ExchangeKind,
    pub zero_sum: bool,
    /// Whether the deterministic zero-sum vectors are asserted to lie in
    /// the family (hypothesis of the rebalancing construction).
    pub includes_deterministic: bool,
    /// Declared measurability partition per agent (defaults to no
    /// constraint beyond the agent's terminal sigma-algebra).
    pub measurability: Option<Vec<Partition>>,
    pub basis: Vec<ExchangeVector>,
}

impl ExchangeSpace {
    /// Membership test: exact linear solve for vector spaces, exact LP with
    /// nonnegative coefficients for cones.
    pub fn contains(&self, y: &ExchangeVector) -> bool {
        use crate::optim::{LinearProgram, RowOp, Sense};
        let target = y.stacked();
        let dim = target.len();
        if self.basis.is_empty() {
            return target.iter().all(Rat::is_zero);
        }
        match self.kind {
            ExchangeKind::VectorSpace => {
                let cols: Vec<Vec<Rat>> = self.basis.iter().map(|b| b.stacked()).collect();
                let a = crate::linalg::RatMatrix::new(
                    (0..dim)
                        .map(|r| cols.iter().map(|c| c[r].clone()).collect())
                        .collect(),
                    cols.len(),
                );
                crate::linalg::solve(&a, &target).is_some()
            }
            ExchangeKind::ConvexCone => {
                let k = self.basis.len();
                let mut lp = LinearProgram::new(Sense::Min, vec![Rat::zero(); k]);
                let cols: Vec<Vec<Rat>> = self.basis.iter().map(|b| b.stacked()).collect();
                for r in 0..dim {
                    let row: Vec<Rat> = cols.iter().map(|c| c[r].clone()).collect();
                    lp.push_row(row, RowOp::Eq, target[r].clone());
                }
                lp.solve().is_feasible()
            }
        }
    }

    pub fn num_agents(&self) -> usize {
        self.basis
            .first()
            .map(|b| b.legs.len())
            .unwrap_or_default()
    }
}

/// The full N-agent segmented market.
#[derive(Clone, Debug)]
pub struct MarketModel {
    pub space: SampleSpace,
    pub horizon: usize,
    pub agents: Vec<AgentSpec>,
    pub exchange: ExchangeSpace,
}

impl MarketModel {
    pub fn num_outcomes(&self) -> usize {
        self.space.len()
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn validate(&self) -> ValidationReport {
        validate::validate_model(self)
    }

    /// Errors unless the model passes every structural check.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidModel(report.summary()))
        }
    }
}

/// Conditional expectation of `x` given the partition, under `q`: constant
/// on each atom, equal to the q-weighted average there. Errors on an atom
/// of zero q-mass.
pub fn conditional_expectation(x: &[Rat], partition: &Partition, q: &[Rat]) -> Result<Vec<Rat>> {
    let mut out = vec![Rat::zero(); x.len()];
    for (idx, atom) in partition.atoms.iter().enumerate() {
        let mut mass = Rat::zero();
        let mut acc = Rat::zero();
        for &w in atom {
            mass += &q[w];
            acc += &(&q[w] * &x[w]);
        }
        if mass.is_zero() {
            return Err(Error::DegenerateConditioning { atom: idx });
        }
        let avg = &acc / &mass;
        for &w in atom {
            out[w] = avg.clone();
        }
    }
    Ok(out)
}

/// Per-atom total masses of `q`, in atom order.
pub fn restrict_measure(q: &[Rat], partition: &Partition) -> Vec<Rat> {
    partition
        .atoms
        .iter()
        .map(|atom| {
            let mut s = Rat::zero();
            for &w in atom {
                s += &q[w];
            }
            s
        })
        .collect()
}

/// Expectation of a per-outcome variable under `q`.
pub fn expectation(x: &[Rat], q: &[Rat]) -> Rat {
    crate::rational::dot(x, q)
}
