//! Vertex enumeration for `{ x : A x = b, x >= 0 }` by inspecting basic
//! feasible solutions. Combinatorial, so guarded by a dimension cap.

use super::AffineSimplexSet;
use crate::error::{Error, Result};
use crate::linalg::{solve, RatMatrix};
use crate::rational::Rat;
use itertools::Itertools;
use std::collections::BTreeSet;

pub const DEFAULT_VERTEX_CAP: usize = 24;

/// All vertices (basic feasible solutions), deduplicated, exact.
///
/// Returns an empty list when the set is empty. Errors if `dim` exceeds the
/// cap: the method solves one square system per support candidate.
pub fn vertex_enumerate(set: &AffineSimplexSet, cap: usize) -> Result<Vec<Vec<Rat>>> {
    let n = set.dim;
    if n > cap {
        return Err(Error::DimensionCap { dim: n, cap });
    }
    let rows = set.independent_rows();
    let rank = rows.len();
    let mut seen: BTreeSet<Vec<Rat>> = BTreeSet::new();

    if rank == 0 {
        // Only the origin can be a vertex of the orthant itself.
        seen.insert(vec![Rat::zero(); n]);
        return Ok(seen.into_iter().collect());
    }
    if rank > n {
        // More independent augmented rows than variables: consistent systems
        // with rank == n are handled below; rank > n means inconsistency.
        return Ok(Vec::new());
    }

    let b: Vec<Rat> = rows.iter().map(|(_, rhs)| rhs.clone()).collect();
    for support in (0..n).combinations(rank) {
        let a = RatMatrix::new(
            rows.iter()
                .map(|(coeffs, _)| support.iter().map(|&j| coeffs[j].clone()).collect())
                .collect(),
            rank,
        );
        if a.rank() < rank {
            continue;
        }
        let Some(xs) = solve(&a, &b) else { continue };
        if xs.iter().any(Rat::is_negative) {
            continue;
        }
        let mut x = vec![Rat::zero(); n];
        for (k, &j) in support.iter().enumerate() {
            x[j] = xs[k].clone();
        }
        seen.insert(x);
    }
    Ok(seen.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::sum;

    fn simplex_set(n: usize) -> AffineSimplexSet {
        let mut s = AffineSimplexSet::new(n);
        s.push_row(vec![Rat::one(); n], Rat::one());
        s
    }

    #[test]
    fn standard_simplex_has_unit_vertices() {
        let vs = vertex_enumerate(&simplex_set(3), DEFAULT_VERTEX_CAP).unwrap();
        assert_eq!(vs.len(), 3);
        for v in &vs {
            assert_eq!(sum(v), Rat::one());
            assert_eq!(v.iter().filter(|x| x.is_positive()).count(), 1);
        }
    }

    #[test]
    fn restricted_tree_family_vertices() {
        // Time-1 restrictions of the first golden agent: masses
        // (1/2, q, q', 1/2 - q - q'); the closure has three vertices.
        let mut s = AffineSimplexSet::new(4);
        s.push_row(vec![Rat::one(); 4], Rat::one());
        s.push_row(
            vec![Rat::one(), Rat::zero(), Rat::zero(), Rat::zero()],
            Rat::frac(1, 2),
        );
        let vs = vertex_enumerate(&s, DEFAULT_VERTEX_CAP).unwrap();
        let want: Vec<Vec<Rat>> = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
            .iter()
            .map(|mask| {
                let mut v = vec![Rat::frac(1, 2)];
                v.extend(mask.iter().map(|&m| {
                    if m == 1 {
                        Rat::frac(1, 2)
                    } else {
                        Rat::zero()
                    }
                }));
                v
            })
            .collect();
        assert_eq!(vs.len(), 3);
        for w in &want {
            assert!(vs.contains(w), "missing vertex {w:?}");
        }
    }

    #[test]
    fn infeasible_set_is_empty() {
        let mut s = AffineSimplexSet::new(2);
        s.push_row(vec![Rat::one(), Rat::one()], -Rat::one());
        assert!(vertex_enumerate(&s, DEFAULT_VERTEX_CAP).unwrap().is_empty());
    }

    #[test]
    fn cap_is_enforced() {
        let s = simplex_set(30);
        assert!(matches!(
            vertex_enumerate(&s, DEFAULT_VERTEX_CAP),
            Err(Error::DimensionCap { .. })
        ));
    }
}
