//! Exact-rational linear programming by two-phase primal simplex with
//! Bland's rule. Answers are exact: optima as rationals, infeasibility with
//! a Farkas certificate, unboundedness with an improving ray.

use crate::rational::{dot, Rat};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sense {
    Max,
    Min,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowOp {
    Eq,
    Le,
    Ge,
}

#[derive(Clone, Debug)]
pub struct LpRow {
    pub coeffs: Vec<Rat>,
    pub op: RowOp,
    pub rhs: Rat,
}

/// Per-variable bounds; `None` means unbounded on that side.
#[derive(Clone, Debug, Default)]
pub struct VarBounds {
    pub lower: Option<Rat>,
    pub upper: Option<Rat>,
}

impl VarBounds {
    pub fn nonneg() -> Self {
        VarBounds {
            lower: Some(Rat::zero()),
            upper: None,
        }
    }

    pub fn free() -> Self {
        VarBounds::default()
    }
}

#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<Rat>,
    pub rows: Vec<LpRow>,
    pub bounds: Vec<VarBounds>,
}

impl LinearProgram {
    /// New program over `n` nonnegative variables.
    pub fn new(sense: Sense, objective: Vec<Rat>) -> Self {
        let n = objective.len();
        LinearProgram {
            sense,
            objective,
            rows: Vec::new(),
            bounds: vec![VarBounds::nonneg(); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn push_row(&mut self, coeffs: Vec<Rat>, op: RowOp, rhs: Rat) {
        assert_eq!(coeffs.len(), self.num_vars(), "row dimension mismatch");
        self.rows.push(LpRow { coeffs, op, rhs });
    }

    pub fn set_free(&mut self, var: usize) {
        self.bounds[var] = VarBounds::free();
    }

    pub fn solve(&self) -> LpOutcome {
        Simplex::run(self)
    }
}

/// Infeasibility witness: a multiplier vector `y` on the standardized
/// equality system `A x = b, x >= 0` with `yᵀA <= 0` componentwise and
/// `yᵀb > 0`, which no nonnegative `x` can satisfy.
#[derive(Clone, Debug)]
pub struct FarkasCertificate {
    pub y: Vec<Rat>,
    /// Standardized equality rows the certificate refers to.
    pub rows: Vec<Vec<Rat>>,
    pub rhs: Vec<Rat>,
}

impl FarkasCertificate {
    /// Exact check of the sign contradiction.
    pub fn verify(&self) -> bool {
        let m = self.rows.len();
        if self.y.len() != m || self.rhs.len() != m {
            return false;
        }
        let ncols = self.rows.first().map_or(0, Vec::len);
        for j in 0..ncols {
            let mut s = Rat::zero();
            for r in 0..m {
                s += &(&self.y[r] * &self.rows[r][j]);
            }
            if s.is_positive() {
                return false;
            }
        }
        dot(&self.y, &self.rhs).is_positive()
    }
}

#[derive(Clone, Debug)]
pub enum LpOutcome {
    Optimal { point: Vec<Rat>, value: Rat },
    Infeasible { certificate: FarkasCertificate },
    Unbounded { point: Vec<Rat>, ray: Vec<Rat> },
}

impl LpOutcome {
    pub fn optimal(&self) -> Option<(&[Rat], &Rat)> {
        match self {
            LpOutcome::Optimal { point, value } => Some((point, value)),
            _ => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        !matches!(self, LpOutcome::Infeasible { .. })
    }
}

/// How each original variable maps into standardized columns.
#[derive(Clone, Debug)]
enum VarMap {
    /// x = shift + x_col
    Shifted { col: usize, shift: Rat },
    /// x = shift - x_col
    Flipped { col: usize, shift: Rat },
    /// x = x_pos - x_neg
    Split { pos: usize, neg: usize },
}

struct Standardized {
    /// Equality rows over standardized columns (slacks included).
    a: Vec<Vec<Rat>>,
    b: Vec<Rat>,
    /// Objective over standardized columns, always minimization.
    cost: Vec<Rat>,
    ncols: usize,
    var_map: Vec<VarMap>,
}

impl Standardized {
    fn build(lp: &LinearProgram) -> Standardized {
        let n = lp.num_vars();
        let mut var_map = Vec::with_capacity(n);
        let mut ncols = 0;
        // Extra rows induced by two-sided bounds: (col, upper-lower).
        let mut range_rows: Vec<(usize, Rat)> = Vec::new();
        for j in 0..n {
            let bnd = &lp.bounds[j];
            match (&bnd.lower, &bnd.upper) {
                (Some(l), None) => {
                    var_map.push(VarMap::Shifted {
                        col: ncols,
                        shift: l.clone(),
                    });
                    ncols += 1;
                }
                (Some(l), Some(u)) => {
                    var_map.push(VarMap::Shifted {
                        col: ncols,
                        shift: l.clone(),
                    });
                    range_rows.push((ncols, u - l));
                    ncols += 1;
                }
                (None, Some(u)) => {
                    var_map.push(VarMap::Flipped {
                        col: ncols,
                        shift: u.clone(),
                    });
                    ncols += 1;
                }
                (None, None) => {
                    var_map.push(VarMap::Split {
                        pos: ncols,
                        neg: ncols + 1,
                    });
                    ncols += 2;
                }
            }
        }

        // Row coefficients over standardized columns; rhs adjusted by shifts.
        let expand = |coeffs: &[Rat], rhs: &Rat| -> (Vec<Rat>, Rat) {
            let mut row = vec![Rat::zero(); ncols];
            let mut b = rhs.clone();
            for (j, c) in coeffs.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                match &var_map[j] {
                    VarMap::Shifted { col, shift } => {
                        row[*col] = &row[*col] + c;
                        b -= &(c * shift);
                    }
                    VarMap::Flipped { col, shift } => {
                        row[*col] = &row[*col] - c;
                        b -= &(c * shift);
                    }
                    VarMap::Split { pos, neg } => {
                        row[*pos] = &row[*pos] + c;
                        row[*neg] = &row[*neg] - c;
                    }
                }
            }
            (row, b)
        };

        let mut pending: Vec<(Vec<Rat>, RowOp, Rat)> = Vec::new();
        for lp_row in &lp.rows {
            let (row, b) = expand(&lp_row.coeffs, &lp_row.rhs);
            pending.push((row, lp_row.op, b));
        }
        for (col, width) in range_rows {
            let mut row = vec![Rat::zero(); ncols];
            row[col] = Rat::one();
            pending.push((row, RowOp::Le, width));
        }

        // Attach slack columns.
        let num_slacks = pending
            .iter()
            .filter(|(_, op, _)| *op != RowOp::Eq)
            .count();
        let total = ncols + num_slacks;
        let mut a = Vec::with_capacity(pending.len());
        let mut b_vec = Vec::with_capacity(pending.len());
        let mut slack = ncols;
        for (mut row, op, rhs) in pending {
            row.resize(total, Rat::zero());
            match op {
                RowOp::Eq => {}
                RowOp::Le => {
                    row[slack] = Rat::one();
                    slack += 1;
                }
                RowOp::Ge => {
                    row[slack] = -Rat::one();
                    slack += 1;
                }
            }
            a.push(row);
            b_vec.push(rhs);
        }
        // Normalize rhs >= 0 so phase I can start from the artificial basis.
        for (row, rhs) in a.iter_mut().zip(b_vec.iter_mut()) {
            if rhs.is_negative() {
                for v in row.iter_mut() {
                    *v = -&*v;
                }
                *rhs = -&*rhs;
            }
        }

        // Objective as minimization over standardized columns.
        let sign = match lp.sense {
            Sense::Min => Rat::one(),
            Sense::Max => -Rat::one(),
        };
        let mut cost = vec![Rat::zero(); total];
        for (j, c) in lp.objective.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let c = &sign * c;
            match &var_map[j] {
                VarMap::Shifted { col, .. } => cost[*col] = &cost[*col] + &c,
                VarMap::Flipped { col, .. } => cost[*col] = &cost[*col] - &c,
                VarMap::Split { pos, neg } => {
                    cost[*pos] = &cost[*pos] + &c;
                    cost[*neg] = &cost[*neg] - &c;
                }
            }
        }

        Standardized {
            a,
            b: b_vec,
            cost,
            ncols: total,
            var_map,
        }
    }

    /// Map a standardized point back to original variables.
    fn restore(&self, x: &[Rat]) -> Vec<Rat> {
        self.var_map
            .iter()
            .map(|vm| match vm {
                VarMap::Shifted { col, shift } => shift + &x[*col],
                VarMap::Flipped { col, shift } => shift - &x[*col],
                VarMap::Split { pos, neg } => &x[*pos] - &x[*neg],
            })
            .collect()
    }

    /// Map a standardized direction back to original variables (shifts drop).
    fn restore_direction(&self, d: &[Rat]) -> Vec<Rat> {
        self.var_map
            .iter()
            .map(|vm| match vm {
                VarMap::Shifted { col, .. } => d[*col].clone(),
                VarMap::Flipped { col, .. } => -&d[*col],
                VarMap::Split { pos, neg } => &d[*pos] - &d[*neg],
            })
            .collect()
    }
}

struct Simplex {
    /// Current tableau body, `B^{-1} A`, including artificial columns.
    a: Vec<Vec<Rat>>,
    b: Vec<Rat>,
    /// Reduced-cost row for the active objective.
    obj: Vec<Rat>,
    obj_val: Rat,
    basis: Vec<usize>,
    /// Columns that may never enter the basis (dropped artificials).
    banned: Vec<bool>,
    ncols: usize,
    first_artificial: usize,
}

const MAX_PIVOTS: usize = 2_000_000;

impl Simplex {
    fn run(lp: &LinearProgram) -> LpOutcome {
        let std_form = Standardized::build(lp);
        let m = std_form.a.len();
        let n = std_form.ncols;
        let total = n + m;

        // Tableau with artificial columns appended; artificial basis.
        let mut a: Vec<Vec<Rat>> = std_form
            .a
            .iter()
            .enumerate()
            .map(|(r, row)| {
                let mut full = row.clone();
                full.resize(total, Rat::zero());
                full[n + r] = Rat::one();
                full
            })
            .collect();
        let b = std_form.b.clone();

        // Phase-I reduced costs: cost 1 on artificials, basis = artificials.
        let mut obj = vec![Rat::zero(); total];
        #[allow(clippy::needless_range_loop)]
        for j in 0..n {
            let mut s = Rat::zero();
            for row in a.iter() {
                s += &row[j];
            }
            obj[j] = -s;
        }
        let mut obj_val = crate::rational::sum(&b);

        let mut sx = Simplex {
            a: std::mem::take(&mut a),
            b,
            obj: std::mem::take(&mut obj),
            obj_val: std::mem::take(&mut obj_val),
            basis: (n..total).collect(),
            banned: vec![false; total],
            ncols: total,
            first_artificial: n,
        };

        // The phase-I objective is bounded below by zero, so this always
        // terminates at an optimum.
        let end = sx.iterate();
        debug_assert!(matches!(end, IterEnd::Optimal));

        if sx.obj_val.is_positive() {
            // Phase-I optimum > 0: infeasible; multipliers from the
            // artificial reduced costs give the Farkas vector.
            let y: Vec<Rat> = (0..m)
                .map(|r| Rat::one() - &sx.obj[n + r])
                .collect();
            let certificate = FarkasCertificate {
                y,
                rows: std_form.a.clone(),
                rhs: std_form.b.clone(),
            };
            debug_assert!(certificate.verify(), "invalid Farkas certificate");
            return LpOutcome::Infeasible { certificate };
        }

        // Drive artificials out of the basis; drop redundant rows.
        let mut r = 0;
        while r < sx.basis.len() {
            if sx.basis[r] >= sx.first_artificial {
                let pivot_col = (0..n).find(|&j| !sx.banned[j] && !sx.a[r][j].is_zero());
                match pivot_col {
                    Some(j) => sx.pivot(r, j),
                    None => {
                        sx.a.remove(r);
                        sx.b.remove(r);
                        sx.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
        for j in sx.first_artificial..sx.ncols {
            sx.banned[j] = true;
        }

        // Phase II objective.
        sx.obj = {
            let mut red = std_form.cost.clone();
            red.resize(total, Rat::zero());
            let mut val = Rat::zero();
            for (r, &bv) in sx.basis.iter().enumerate() {
                let cb = if bv < std_form.cost.len() {
                    std_form.cost[bv].clone()
                } else {
                    Rat::zero()
                };
                if cb.is_zero() {
                    continue;
                }
                val += &(&cb * &sx.b[r]);
                for (rj, av) in red.iter_mut().zip(&sx.a[r]) {
                    *rj = &*rj - &(&cb * av);
                }
            }
            sx.obj_val = val;
            red
        };

        match sx.iterate() {
            IterEnd::Optimal => {
                let x_std = sx.extract_point();
                let point = std_form.restore(&x_std);
                let value = dot(&lp.objective, &point);
                LpOutcome::Optimal { point, value }
            }
            IterEnd::Unbounded { entering } => {
                let mut d = vec![Rat::zero(); sx.ncols];
                d[entering] = Rat::one();
                for (r, &bv) in sx.basis.iter().enumerate() {
                    d[bv] = -&sx.a[r][entering];
                }
                let x_std = sx.extract_point();
                LpOutcome::Unbounded {
                    point: std_form.restore(&x_std),
                    ray: std_form.restore_direction(&d),
                }
            }
        }
    }

    fn extract_point(&self) -> Vec<Rat> {
        let mut x = vec![Rat::zero(); self.ncols];
        for (r, &bv) in self.basis.iter().enumerate() {
            x[bv] = self.b[r].clone();
        }
        x
    }

    /// Bland's rule simplex loop on the current objective row.
    fn iterate(&mut self) -> IterEnd {
        for _ in 0..MAX_PIVOTS {
            // Entering: lowest-index column with negative reduced cost.
            let entering = (0..self.ncols)
                .find(|&j| !self.banned[j] && self.obj[j].is_negative());
            let Some(j) = entering else {
                return IterEnd::Optimal;
            };
            // Leaving: min ratio; ties by lowest basic variable index.
            let mut best: Option<(usize, Rat)> = None;
            for r in 0..self.a.len() {
                if !self.a[r][j].is_positive() {
                    continue;
                }
                let ratio = &self.b[r] / &self.a[r][j];
                best = match best {
                    None => Some((r, ratio)),
                    Some((br, bratio)) => {
                        if ratio < bratio
                            || (ratio == bratio && self.basis[r] < self.basis[br])
                        {
                            Some((r, ratio))
                        } else {
                            Some((br, bratio))
                        }
                    }
                };
            }
            match best {
                Some((r, _)) => self.pivot(r, j),
                None => return IterEnd::Unbounded { entering: j },
            }
        }
        unreachable!("simplex exceeded pivot cap; Bland's rule precludes cycling")
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let inv = self.a[row][col].recip();
        for v in self.a[row].iter_mut() {
            *v = &*v * &inv;
        }
        self.b[row] = &self.b[row] * &inv;
        for r in 0..self.a.len() {
            if r == row || self.a[r][col].is_zero() {
                continue;
            }
            let f = self.a[r][col].clone();
            for j in 0..self.ncols {
                let v = &self.a[r][j] - &(&f * &self.a[row][j]);
                self.a[r][j] = v;
            }
            self.b[r] = &self.b[r] - &(&f * &self.b[row]);
        }
        if !self.obj[col].is_zero() {
            let f = self.obj[col].clone();
            for j in 0..self.ncols {
                let v = &self.obj[j] - &(&f * &self.a[row][j]);
                self.obj[j] = v;
            }
            // Objective value moves by reduced cost times the pivot ratio.
            self.obj_val = &self.obj_val + &(&f * &self.b[row]);
        }
        self.basis[row] = col;
    }
}

enum IterEnd {
    Optimal,
    Unbounded { entering: usize },
}
