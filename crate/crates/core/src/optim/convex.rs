//! Verified convex minimization over `{ x : A x = b, x >= 0 }`.
//!
//! Log-barrier with reduced Newton steps in the exact null space of the
//! equality rows, followed by an active-set polish that re-solves the
//! stationarity system on the inactive face. The returned solution carries
//! a KKT residual and a Frank-Wolfe duality gap (certified through the
//! exact LP), both of which must come in under the requested tolerance.

use super::{linear_optimum, AffineSimplexSet, LpOutcome, Sense};
use crate::error::{Error, Result};
use crate::linalg::{null_space, RatMatrix};
use crate::rational::{to_f64_vec, Rat};
use nalgebra::{DMatrix, DVector};

/// Smooth convex function on the positive orthant, with gradient oracle.
/// The diagonal-Hessian hook is optional; separable objectives should
/// provide it so Newton steps are exact.
pub trait ConvexObjective {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    fn hessian_diag(&self, _x: &[f64], _out: &mut [f64]) -> bool {
        false
    }
}

#[derive(Clone, Debug)]
pub struct ConvexOptions {
    pub tol: f64,
    pub max_iters: usize,
    /// Optional strictly feasible starting point (defaults to the analytic
    /// max-margin point from the interior LP).
    pub start: Option<Vec<f64>>,
}

impl Default for ConvexOptions {
    fn default() -> Self {
        ConvexOptions {
            tol: 1e-10,
            max_iters: 100_000,
            start: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConvexSolution {
    pub point: Vec<f64>,
    pub value: f64,
    pub kkt_residual: f64,
    pub duality_gap: f64,
    /// True when some strict coordinate sits at (numerical) zero, i.e. the
    /// minimizer is on the boundary of the orthant.
    pub boundary: bool,
}

struct Reduced {
    /// Null-space basis columns of the equality rows, as floats.
    z: DMatrix<f64>,
}

fn reduced_basis(rows: &[(Vec<Rat>, Rat)], cols: &[usize]) -> Reduced {
    let z_rat: Vec<Vec<Rat>> = if rows.is_empty() {
        cols.iter()
            .map(|&j| {
                let mut v = vec![Rat::zero(); cols.len()];
                v[cols.iter().position(|&c| c == j).unwrap()] = Rat::one();
                v
            })
            .collect()
    } else {
        let coeff = RatMatrix::new(
            rows.iter()
                .map(|(c, _)| cols.iter().map(|&j| c[j].clone()).collect())
                .collect(),
            cols.len(),
        );
        null_space(&coeff)
    };
    let k = z_rat.len();
    Reduced {
        z: DMatrix::from_fn(cols.len(), k, |i, j| z_rat[j][i].to_f64()),
    }
}

pub fn convex_minimize(
    set: &AffineSimplexSet,
    f: &dyn ConvexObjective,
    opts: &ConvexOptions,
) -> Result<ConvexSolution> {
    let n = set.dim;
    let rows = set.independent_rows();

    let start = match &opts.start {
        Some(s) => {
            assert_eq!(s.len(), n);
            s.clone()
        }
        None => to_f64_vec(&super::strictly_feasible_point(set)?),
    };
    if start.iter().any(|&v| v <= 0.0) {
        return Err(Error::NoInteriorPoint);
    }

    let all: Vec<usize> = (0..n).collect();
    let reduced = reduced_basis(&rows, &all);
    let k = reduced.z.ncols();

    let mut q = DVector::from_vec(start);

    if k == 0 {
        // Equality rows pin the point; only feasibility can be certified.
        let point = q.as_slice().to_vec();
        return Ok(certify(set, &rows, f, point, true));
    }

    let tau_min = (opts.tol * 1e-3).min(1e-12);
    let mut tau = f.value(q.as_slice()).abs().max(1.0) * 0.1;
    let mut total_iters = 0usize;

    loop {
        newton_phase(f, &reduced.z, &mut q, tau, 200, &mut total_iters, opts)?;
        if tau <= tau_min {
            break;
        }
        tau = (tau * 0.1).max(tau_min);
    }

    // Polish: freeze coordinates pinned to the boundary by the barrier and
    // take pure Newton steps on the inactive face so stationarity residuals
    // drop to machine precision.
    let scale = q.amax().max(1.0);
    let inactive: Vec<usize> = (0..n).filter(|&i| q[i] >= 1e-6 * scale).collect();
    if inactive.len() < n && !inactive.is_empty() {
        let sub = reduced_basis(&rows, &inactive);
        if sub.z.ncols() > 0 {
            let mut q_sub = DVector::from_fn(inactive.len(), |i, _| q[inactive[i]]);
            let frozen: Vec<f64> = q.as_slice().to_vec();
            let lifted = LiftedObjective {
                inner: f,
                frozen,
                inactive: inactive.clone(),
            };
            newton_phase(&lifted, &sub.z, &mut q_sub, 0.0, 40, &mut total_iters, opts)?;
            for (ii, &i) in inactive.iter().enumerate() {
                q[i] = q_sub[ii];
            }
        }
    } else {
        newton_phase(f, &reduced.z, &mut q, 0.0, 40, &mut total_iters, opts)?;
    }

    let sol = certify(set, &rows, f, q.as_slice().to_vec(), false);
    if sol.kkt_residual > opts.tol || sol.duality_gap > opts.tol {
        return Err(Error::NonConvergence {
            what: format!(
                "kkt residual {:.3e} / duality gap {:.3e} above tolerance {:.1e}",
                sol.kkt_residual, sol.duality_gap, opts.tol
            ),
        });
    }
    Ok(sol)
}

/// Objective restricted to a coordinate subset, other coordinates frozen.
struct LiftedObjective<'a> {
    inner: &'a dyn ConvexObjective,
    frozen: Vec<f64>,
    inactive: Vec<usize>,
}

impl LiftedObjective<'_> {
    fn lift(&self, x: &[f64]) -> Vec<f64> {
        let mut full = self.frozen.clone();
        for (ii, &i) in self.inactive.iter().enumerate() {
            full[i] = x[ii];
        }
        full
    }
}

impl ConvexObjective for LiftedObjective<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(&self.lift(x))
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let full = self.lift(x);
        let mut g = vec![0.0; full.len()];
        self.inner.gradient(&full, &mut g);
        for (ii, &i) in self.inactive.iter().enumerate() {
            out[ii] = g[i];
        }
    }
    fn hessian_diag(&self, x: &[f64], out: &mut [f64]) -> bool {
        let full = self.lift(x);
        let mut h = vec![0.0; full.len()];
        if !self.inner.hessian_diag(&full, &mut h) {
            return false;
        }
        for (ii, &i) in self.inactive.iter().enumerate() {
            out[ii] = h[i];
        }
        true
    }
}

/// Damped Newton on `u -> f(q + Z u) - tau * sum(log q_i)`; `tau = 0` gives
/// the pure polish phase (positivity still guarded by the line search).
fn newton_phase(
    f: &dyn ConvexObjective,
    z: &DMatrix<f64>,
    q: &mut DVector<f64>,
    tau: f64,
    max_steps: usize,
    total_iters: &mut usize,
    opts: &ConvexOptions,
) -> Result<()> {
    let n = q.len();
    let k = z.ncols();
    if k == 0 {
        return Ok(());
    }
    let mut grad = vec![0.0; n];
    let mut hdiag = vec![0.0; n];
    for _ in 0..max_steps {
        *total_iters += 1;
        if *total_iters > opts.max_iters {
            return Err(Error::NonConvergence {
                what: "newton iteration cap".into(),
            });
        }
        f.gradient(q.as_slice(), &mut grad);
        let have_h = f.hessian_diag(q.as_slice(), &mut hdiag);
        let mut g_q = DVector::zeros(n);
        let mut h_q = DVector::zeros(n);
        for i in 0..n {
            g_q[i] = grad[i] - if tau > 0.0 { tau / q[i] } else { 0.0 };
            let fh = if have_h { hdiag[i].max(0.0) } else { 1.0 };
            let bh = if tau > 0.0 { tau / (q[i] * q[i]) } else { 0.0 };
            h_q[i] = (fh + bh).max(1e-12);
        }
        let g_u = z.transpose() * &g_q;
        let stop = if tau > 0.0 { (tau * 1e-3).max(1e-15) } else { 1e-14 };
        if g_u.amax() <= stop {
            return Ok(());
        }
        let mut hz = z.clone();
        for i in 0..n {
            for j in 0..k {
                hz[(i, j)] *= h_q[i];
            }
        }
        let h_u = z.transpose() * hz;
        let du = match h_u.clone().cholesky() {
            Some(ch) => ch.solve(&(-&g_u)),
            None => match (h_u + DMatrix::identity(k, k) * 1e-10).cholesky() {
                Some(ch) => ch.solve(&(-&g_u)),
                None => -&g_u,
            },
        };
        let d_q = z * &du;
        let mut alpha: f64 = 1.0;
        for i in 0..n {
            if d_q[i] < 0.0 {
                alpha = alpha.min(-0.99 * q[i] / d_q[i]);
            }
        }
        if alpha <= 0.0 || !alpha.is_finite() {
            return Ok(());
        }
        let phi = |p: &DVector<f64>| -> f64 {
            let mut s = f.value(p.as_slice());
            if tau > 0.0 {
                for i in 0..n {
                    s -= tau * p[i].ln();
                }
            }
            s
        };
        let phi0 = phi(q);
        let slope: f64 = g_q.dot(&d_q);
        let reduced_grad_at = |cand: &DVector<f64>| -> f64 {
            let mut g_new = vec![0.0; n];
            f.gradient(cand.as_slice(), &mut g_new);
            let mut gn_q = DVector::zeros(n);
            for i in 0..n {
                gn_q[i] = g_new[i] - if tau > 0.0 { tau / cand[i] } else { 0.0 };
            }
            (z.transpose() * &gn_q).amax()
        };

        // Endgame: once the predicted decrease falls under the float
        // resolution of the objective, Armijo tests only measure rounding
        // noise. Decide on gradient-norm progress instead.
        let predicted = -0.5 * slope;
        let noise = 1e-13 * (1.0 + phi0.abs());
        if predicted <= noise {
            let cand = &*q + &d_q * alpha;
            if cand.iter().all(|&v| v > 0.0) && reduced_grad_at(&cand) < g_u.amax() {
                *q = cand;
                continue;
            }
            return Ok(());
        }

        let mut step = alpha;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = &*q + &d_q * step;
            if cand.iter().all(|&v| v > 0.0) {
                let val = phi(&cand);
                if val <= phi0 + 1e-4 * step * slope || val < phi0 {
                    *q = cand;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            // Objective refuses to certify a decrease; fall back to the
            // gradient-progress criterion before giving up on this stage.
            let cand = &*q + &d_q * alpha;
            if cand.iter().all(|&v| v > 0.0) && reduced_grad_at(&cand) < 0.9 * g_u.amax() {
                *q = cand;
                continue;
            }
            return Ok(()); // no further float progress at this tau
        }
    }
    Ok(())
}

/// Compute KKT and duality-gap certificates at the final point.
fn certify(
    set: &AffineSimplexSet,
    rows: &[(Vec<Rat>, Rat)],
    f: &dyn ConvexObjective,
    point: Vec<f64>,
    pinned: bool,
) -> ConvexSolution {
    let n = set.dim;
    let m = rows.len();
    let value = f.value(&point);
    let mut grad = vec![0.0; n];
    f.gradient(&point, &mut grad);

    let scale = point.iter().fold(0.0f64, |a, &b| a.max(b)).max(1.0);
    let active_eps = 1e-6 * scale;
    let active: Vec<bool> = point.iter().map(|&v| v < active_eps).collect();

    let mut kkt: f64 = 0.0;
    for (coeffs, rhs) in rows {
        let lhs: f64 = coeffs
            .iter()
            .zip(&point)
            .map(|(c, &x)| c.to_f64() * x)
            .sum();
        kkt = kkt.max((lhs - rhs.to_f64()).abs());
    }

    let mut duality_gap = 0.0;
    if !pinned {
        // Multipliers for the equality rows: pick nu minimizing the worst
        // stationarity defect, by exact LP over (nu, s):
        //   |g_i - (A^T nu)_i| <= s   on inactive coordinates,
        //    g_i - (A^T nu)_i >= -s   on active ones (the orthant
        //                             multiplier must be nonnegative).
        // A least-squares nu is not enough: with degenerate boundary
        // coordinates the certifying nu lies in a row-space direction the
        // inactive coordinates cannot see.
        let g_rat: Vec<Rat> = grad
            .iter()
            .map(|&v| Rat::from_f64_exact(v).unwrap_or_else(Rat::zero))
            .collect();
        let r = {
            let mut objective = vec![Rat::zero(); m + 1];
            objective[m] = Rat::one();
            let mut lp = super::LinearProgram::new(super::Sense::Min, objective);
            for j in 0..m {
                lp.set_free(j);
            }
            for i in 0..n {
                // Every coordinate: (A^T nu)_i - s <= g_i  (so r_i >= -s).
                // Inactive ones also: (A^T nu)_i + s >= g_i (so r_i <= s).
                let mut le: Vec<Rat> = (0..m).map(|rr| rows[rr].0[i].clone()).collect();
                le.push(-Rat::one());
                lp.push_row(le, super::RowOp::Le, g_rat[i].clone());
                if !active[i] {
                    let mut ge: Vec<Rat> = (0..m).map(|rr| rows[rr].0[i].clone()).collect();
                    ge.push(Rat::one());
                    lp.push_row(ge, super::RowOp::Ge, g_rat[i].clone());
                }
            }
            match lp.solve() {
                super::LpOutcome::Optimal { point: nu_s, .. } => {
                    let mut r = grad.clone();
                    for (i, ri) in r.iter_mut().enumerate() {
                        for (rr, row) in rows.iter().enumerate() {
                            *ri -= row.0[i].to_f64() * nu_s[rr].to_f64();
                        }
                    }
                    r
                }
                _ => grad.clone(),
            }
        };
        for i in 0..n {
            if active[i] {
                kkt = kkt.max((-r[i]).max(0.0));
                kkt = kkt.max((point[i] * r[i]).abs());
            } else {
                kkt = kkt.max(r[i].abs());
            }
        }

        // Frank-Wolfe gap through the exact LP:
        // f(q) - f* <= g.q - min_{p in set} g.p.
        let g_rat: Vec<Rat> = grad
            .iter()
            .map(|&v| Rat::from_f64_exact(v).unwrap_or_else(Rat::zero))
            .collect();
        let gq: f64 = grad.iter().zip(&point).map(|(g, &x)| g * x).sum();
        duality_gap = match linear_optimum(set, &g_rat, Sense::Min) {
            LpOutcome::Optimal { value: lo, .. } => (gq - lo.to_f64()).max(0.0),
            // Unbounded linear subproblem (cone-shaped sets): at a
            // stationary point the gradient prices the cone at zero, so the
            // complementarity product is the gap.
            LpOutcome::Unbounded { .. } => gq.abs(),
            LpOutcome::Infeasible { .. } => f64::INFINITY,
        };
    }

    let boundary = (0..n).any(|i| set.strict[i] && point[i] < active_eps);
    ConvexSolution {
        point,
        value,
        kkt_residual: kkt,
        duality_gap,
        boundary,
    }
}

/// Snap a float point to rationals (denominator-capped continued fractions)
/// and keep the result only when it is exactly feasible for `set`.
pub fn rationalize_feasible(
    set: &AffineSimplexSet,
    point: &[f64],
    max_den: u64,
) -> Option<Vec<Rat>> {
    let snapped: Option<Vec<Rat>> = point
        .iter()
        .map(|&v| {
            if v.abs() < 1e-12 {
                Some(Rat::zero())
            } else {
                Rat::approximate_f64(v, max_den)
            }
        })
        .collect();
    let snapped = snapped?;
    if snapped
        .iter()
        .zip(point)
        .any(|(r, &v)| (r.to_f64() - v).abs() > 1e-6 * (1.0 + v.abs()))
    {
        return None;
    }
    if set.contains(&snapped) {
        Some(snapped)
    } else {
        None
    }
}
