//! Numerical engines: exact-rational linear programming, vertex enumeration
//! of affine slices of the nonnegative orthant, and a verified convex
//! minimizer with KKT-residual and duality-gap certificates.

mod convex;
mod lp;
mod vertex;

pub use convex::{
    convex_minimize, rationalize_feasible, ConvexObjective, ConvexOptions, ConvexSolution,
};
pub use lp::{FarkasCertificate, LinearProgram, LpOutcome, LpRow, RowOp, Sense, VarBounds};
pub use vertex::{vertex_enumerate, DEFAULT_VERTEX_CAP};

use crate::error::{Error, Result};
use crate::rational::{dot, Rat};

/// Feasible set `{ x : A x = b, x >= 0 }`, with a per-variable flag marking
/// which coordinates must be strictly positive in interior queries (slack
/// variables attached to cone constraints may sit on the boundary).
#[derive(Clone, Debug)]
pub struct AffineSimplexSet {
    pub dim: usize,
    /// Equality rows as (coefficients, rhs).
    pub rows: Vec<(Vec<Rat>, Rat)>,
    /// Coordinates required to be strictly positive by `interior_point`.
    pub strict: Vec<bool>,
}

impl AffineSimplexSet {
    pub fn new(dim: usize) -> Self {
        AffineSimplexSet {
            dim,
            rows: Vec::new(),
            strict: vec![true; dim],
        }
    }

    pub fn push_row(&mut self, coeffs: Vec<Rat>, rhs: Rat) {
        assert_eq!(coeffs.len(), self.dim, "row dimension mismatch");
        self.rows.push((coeffs, rhs));
    }

    /// Mark a coordinate as merely nonnegative for interior queries.
    pub fn relax_positivity(&mut self, var: usize) {
        self.strict[var] = false;
    }

    /// Exact residuals `A x - b` at a point.
    pub fn residuals(&self, x: &[Rat]) -> Vec<Rat> {
        self.rows
            .iter()
            .map(|(coeffs, rhs)| &dot(coeffs, x) - rhs)
            .collect()
    }

    pub fn contains(&self, x: &[Rat]) -> bool {
        x.iter().all(|v| !v.is_negative()) && self.residuals(x).iter().all(Rat::is_zero)
    }

    /// Drop linearly dependent rows (keeping the first of each dependent
    /// group); inconsistent dependent rows are kept so infeasibility
    /// surfaces in the LP.
    pub fn independent_rows(&self) -> Vec<(Vec<Rat>, Rat)> {
        let augmented: Vec<Vec<Rat>> = self
            .rows
            .iter()
            .map(|(c, r)| {
                let mut row = c.clone();
                row.push(r.clone());
                row
            })
            .collect();
        let keep = crate::linalg::independent_rows(&augmented, self.dim + 1);
        keep.into_iter().map(|i| self.rows[i].clone()).collect()
    }
}

/// Outcome of the strict-interior query.
#[derive(Clone, Debug)]
pub enum InteriorAnswer {
    /// A feasible point with every strict-flagged coordinate positive; the
    /// witness maximizes the smallest strict coordinate.
    Yes { point: Vec<Rat>, margin: Rat },
    /// Feasible, but every point has some strict coordinate at zero; the
    /// optimal margin (zero) certifies this via the LP dual.
    BoundaryOnly { point: Vec<Rat> },
    /// The affine-nonnegative system itself is empty.
    Infeasible { certificate: FarkasCertificate },
}

impl InteriorAnswer {
    pub fn exists(&self) -> bool {
        matches!(self, InteriorAnswer::Yes { .. })
    }
}

/// Decide whether `set` contains a point with all strict coordinates > 0,
/// by maximizing the minimum strict coordinate: `max t` subject to
/// `A x = b`, `x_j >= t` for strict `j`, `x >= 0`, `t <= 1`.
pub fn interior_point(set: &AffineSimplexSet) -> InteriorAnswer {
    let n = set.dim;
    // Variables: x_0..x_{n-1}, then t.
    let mut objective = vec![Rat::zero(); n + 1];
    objective[n] = Rat::one();
    let mut lp = LinearProgram::new(Sense::Max, objective);
    for (coeffs, rhs) in &set.rows {
        let mut row = coeffs.clone();
        row.push(Rat::zero());
        lp.push_row(row, RowOp::Eq, rhs.clone());
    }
    for j in 0..n {
        if set.strict[j] {
            let mut row = vec![Rat::zero(); n + 1];
            row[j] = Rat::one();
            row[n] = -Rat::one();
            lp.push_row(row, RowOp::Ge, Rat::zero());
        }
    }
    // Cap t so the LP stays bounded even without normalization rows.
    lp.bounds[n] = VarBounds {
        lower: Some(Rat::zero()),
        upper: Some(Rat::one()),
    };
    match lp.solve() {
        LpOutcome::Optimal { point, value } => {
            let x = point[..n].to_vec();
            if value.is_positive() {
                InteriorAnswer::Yes { point: x, margin: value }
            } else {
                InteriorAnswer::BoundaryOnly { point: x }
            }
        }
        LpOutcome::Infeasible { certificate } => InteriorAnswer::Infeasible { certificate },
        LpOutcome::Unbounded { .. } => unreachable!("t is capped"),
    }
}

/// Minimize (or maximize) a linear functional over the set, exactly.
pub fn linear_optimum(set: &AffineSimplexSet, objective: &[Rat], sense: Sense) -> LpOutcome {
    let mut lp = LinearProgram::new(sense, objective.to_vec());
    for (coeffs, rhs) in &set.rows {
        lp.push_row(coeffs.clone(), RowOp::Eq, rhs.clone());
    }
    lp.solve()
}

/// Strictly positive feasible point, or an error naming the failure.
pub fn strictly_feasible_point(set: &AffineSimplexSet) -> Result<Vec<Rat>> {
    match interior_point(set) {
        InteriorAnswer::Yes { point, .. } => Ok(point),
        InteriorAnswer::BoundaryOnly { .. } | InteriorAnswer::Infeasible { .. } => {
            Err(Error::NoInteriorPoint)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_found_on_the_simplex() {
        let mut set = AffineSimplexSet::new(3);
        set.push_row(vec![Rat::one(); 3], Rat::one());
        match interior_point(&set) {
            InteriorAnswer::Yes { point, margin } => {
                assert!(margin.is_positive());
                assert!(point.iter().all(Rat::is_positive));
                assert!(set.contains(&point));
            }
            other => panic!("expected interior, got {other:?}"),
        }
    }

    #[test]
    fn pinned_coordinate_leaves_boundary_only() {
        // sum q = 1 with q_1 forced to zero: feasible, never strictly
        // positive.
        let mut set = AffineSimplexSet::new(3);
        set.push_row(vec![Rat::one(); 3], Rat::one());
        set.push_row(vec![Rat::one(), Rat::zero(), Rat::zero()], Rat::zero());
        match interior_point(&set) {
            InteriorAnswer::BoundaryOnly { point } => {
                assert!(point[0].is_zero());
                assert!(set.contains(&point));
            }
            other => panic!("expected boundary-only, got {other:?}"),
        }
    }

    #[test]
    fn empty_set_reports_infeasible_with_certificate() {
        let mut set = AffineSimplexSet::new(2);
        set.push_row(vec![Rat::one(), Rat::one()], -Rat::one());
        match interior_point(&set) {
            InteriorAnswer::Infeasible { certificate } => assert!(certificate.verify()),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn relaxed_coordinates_do_not_block_the_interior() {
        // A slack pinned to zero is fine when flagged nonneg-only.
        let mut set = AffineSimplexSet::new(3);
        set.push_row(vec![Rat::one(), Rat::one(), Rat::zero()], Rat::one());
        set.push_row(vec![Rat::zero(), Rat::zero(), Rat::one()], Rat::zero());
        assert!(!interior_point(&set).exists());
        set.relax_positivity(2);
        assert!(interior_point(&set).exists());
    }
}
