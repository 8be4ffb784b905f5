//! Dense exact-rational linear algebra: row reduction, rank, general solves,
//! and null-space bases. Sized for desk-scale systems (tens of rows), where
//! exactness matters more than speed.

use crate::rational::Rat;

/// Dense matrix of rationals, row major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatMatrix {
    pub rows: Vec<Vec<Rat>>,
    pub ncols: usize,
}

impl RatMatrix {
    pub fn new(rows: Vec<Vec<Rat>>, ncols: usize) -> Self {
        for r in &rows {
            assert_eq!(r.len(), ncols, "ragged matrix");
        }
        RatMatrix { rows, ncols }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        RatMatrix {
            rows: vec![vec![Rat::zero(); ncols]; nrows],
            ncols,
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    /// Reduce in place to reduced row echelon form; returns the pivot column
    /// of each pivot row, in order.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.ncols {
            if row == self.nrows() {
                break;
            }
            // Partial pivoting by first nonzero entry.
            let Some(pr) = (row..self.nrows()).find(|&r| !self.rows[r][col].is_zero()) else {
                continue;
            };
            self.rows.swap(row, pr);
            let inv = self.rows[row][col].recip();
            for c in col..self.ncols {
                let v = &self.rows[row][c] * &inv;
                self.rows[row][c] = v;
            }
            for r in 0..self.nrows() {
                if r != row && !self.rows[r][col].is_zero() {
                    let factor = self.rows[r][col].clone();
                    for c in col..self.ncols {
                        let v = &self.rows[r][c] - &(&factor * &self.rows[row][c]);
                        self.rows[r][c] = v;
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref().len()
    }
}

/// Solve `A x = b` exactly. Returns any solution, or `None` if inconsistent.
pub fn solve(a: &RatMatrix, b: &[Rat]) -> Option<Vec<Rat>> {
    assert_eq!(a.nrows(), b.len());
    let n = a.ncols;
    let mut aug = RatMatrix::new(
        a.rows
            .iter()
            .zip(b)
            .map(|(row, rhs)| {
                let mut r = row.clone();
                r.push(rhs.clone());
                r
            })
            .collect(),
        n + 1,
    );
    let pivots = aug.rref();
    // Inconsistent iff a pivot lands in the augmented column.
    if pivots.contains(&n) {
        return None;
    }
    let mut x = vec![Rat::zero(); n];
    for (row, &col) in pivots.iter().enumerate() {
        x[col] = aug.rows[row][n].clone();
    }
    Some(x)
}

/// Basis of the null space of `A`, exact.
pub fn null_space(a: &RatMatrix) -> Vec<Vec<Rat>> {
    let n = a.ncols;
    let mut m = a.clone();
    let pivots = m.rref();
    let pivot_set: Vec<bool> = {
        let mut s = vec![false; n];
        for &c in &pivots {
            s[c] = true;
        }
        s
    };
    let mut basis = Vec::new();
    for free in 0..n {
        if pivot_set[free] {
            continue;
        }
        let mut v = vec![Rat::zero(); n];
        v[free] = Rat::one();
        for (row, &col) in pivots.iter().enumerate() {
            v[col] = -&m.rows[row][free];
        }
        basis.push(v);
    }
    basis
}

/// Indices of a maximal linearly independent subset of `rows`, greedy in
/// input order.
pub fn independent_rows(rows: &[Vec<Rat>], ncols: usize) -> Vec<usize> {
    let mut kept: Vec<Vec<Rat>> = Vec::new();
    let mut idx = Vec::new();
    let mut rank = 0;
    for (i, row) in rows.iter().enumerate() {
        kept.push(row.clone());
        let m = RatMatrix::new(kept.clone(), ncols);
        let r = m.rank();
        if r > rank {
            rank = r;
            idx.push(i);
        } else {
            kept.pop();
        }
    }
    idx
}

/// Rank of a set of vectors.
pub fn rank_of(rows: &[Vec<Rat>], ncols: usize) -> usize {
    if rows.is_empty() {
        return 0;
    }
    RatMatrix::new(rows.to_vec(), ncols).rank()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Rat {
        Rat::from_int(n)
    }

    #[test]
    fn solve_square() {
        // 2x + y = 5, x - y = 1 -> x = 2, y = 1
        let a = RatMatrix::new(vec![vec![r(2), r(1)], vec![r(1), r(-1)]], 2);
        let x = solve(&a, &[r(5), r(1)]).unwrap();
        assert_eq!(x, vec![r(2), r(1)]);
    }

    #[test]
    fn solve_inconsistent() {
        let a = RatMatrix::new(vec![vec![r(1), r(1)], vec![r(2), r(2)]], 2);
        assert!(solve(&a, &[r(1), r(3)]).is_none());
    }

    #[test]
    fn solve_underdetermined_returns_some_solution() {
        let a = RatMatrix::new(vec![vec![r(1), r(1), r(1)]], 3);
        let x = solve(&a, &[r(1)]).unwrap();
        assert_eq!(&x[0] + &x[1] + &x[2], r(1));
    }

    #[test]
    fn null_space_of_sum_row() {
        let a = RatMatrix::new(vec![vec![r(1), r(1), r(1)]], 3);
        let ns = null_space(&a);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!(crate::rational::sum(v).is_zero());
        }
    }

    #[test]
    fn independent_rows_greedy() {
        let rows = vec![
            vec![r(1), r(0)],
            vec![r(2), r(0)], // dependent on first
            vec![r(0), r(1)],
        ];
        assert_eq!(independent_rows(&rows, 2), vec![0, 2]);
        assert_eq!(rank_of(&rows, 2), 2);
    }
}
