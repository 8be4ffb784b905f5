//! Per-agent utility maximization with random endowment: primal indirect
//! utility, the dual minimax problem, duality-gap certification, and
//! directional derivatives of the indirect utility in exchange directions.
//!
//! The dual joint minimization over the multiplier and the measure is
//! solved in the scaled-measure cone `xi = lambda * q`: the objective
//! `sum_w xi_w X_w + sum_w p_w phi(xi_w / p_w)` is convex there and the
//! normalization row disappears, which eliminates the multiplier exactly.
//! For quadratic utilities the first-order system on the detected support
//! is linear with rational data, so the float solution is re-derived and
//! verified in exact arithmetic.

use crate::arbitrage::{martingale_rows, martingale_polytope, payoff_space, PayoffSpace};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{expectation, MarketModel};
use crate::optim::{
    convex_minimize, AffineSimplexSet, ConvexObjective, ConvexOptions, InteriorAnswer,
};
use crate::preferences::UtilityFunction;
use crate::rational::{dot, sum, to_f64_vec, Rat};

const LAMBDA_FLOOR: f64 = 1e-8;

/// Dual optimum of one agent's utility maximization.
#[derive(Clone, Debug)]
pub struct MinimaxSolution {
    pub agent: usize,
    /// Positive multiplier pairing the primal and dual problems.
    pub lambda: f64,
    pub lambda_exact: Option<Rat>,
    /// The minimax measure.
    pub measure: Vec<f64>,
    /// Exact form, present when the float answer certifies in rationals.
    pub measure_exact: Option<Vec<Rat>>,
    /// All outcomes carry positive mass. Guaranteed for kinds whose
    /// conjugate slope diverges at zero (exponential, logarithmic, power)
    /// whenever an equivalent martingale measure exists; the quadratic
    /// kind has a finite slope at zero and can pin outcomes to zero mass.
    pub equivalent: bool,
    /// The optimizer touches the boundary of the simplex.
    pub boundary: bool,
    pub dual_value: f64,
    pub primal_value: f64,
    pub gap: f64,
}

impl MinimaxSolution {
    /// Derivative of the indirect utility at zero in the direction of an
    /// exchange leg: `lambda * E_Q[y]`.
    pub fn directional_derivative(&self, leg: &[Rat]) -> f64 {
        match (&self.lambda_exact, &self.measure_exact) {
            (Some(l), Some(q)) => (l * &dot(q, leg)).to_f64(),
            _ => {
                self.lambda
                    * self
                        .measure
                        .iter()
                        .zip(leg)
                        .map(|(&q, v)| q * v.to_f64())
                        .sum::<f64>()
            }
        }
    }

    /// Exact expectation of a leg under the minimax measure, when available.
    pub fn expectation_exact(&self, leg: &[Rat]) -> Option<Rat> {
        self.measure_exact.as_ref().map(|q| dot(q, leg))
    }

    pub fn expectation(&self, leg: &[Rat]) -> f64 {
        match &self.measure_exact {
            Some(q) => dot(q, leg).to_f64(),
            None => self
                .measure
                .iter()
                .zip(leg)
                .map(|(&q, v)| q * v.to_f64())
                .sum(),
        }
    }
}

/// Primal solve outcome: the optimum value with a gradient-norm certificate.
#[derive(Clone, Debug)]
pub struct IndirectUtility {
    pub value: f64,
    pub grad_norm: f64,
    /// Optimal strategy coefficients over the agent's payoff basis.
    pub coefficients: Vec<f64>,
}

/// Indirect utility `sup over strategies of E_P[u(X + k + Y)]`; the leg `y`
/// defaults to zero. Errors with `UnboundedUtility` when the supremum
/// reaches `u(+inf)`.
pub fn indirect_utility(
    model: &MarketModel,
    agent: usize,
    y: Option<&[Rat]>,
) -> Result<IndirectUtility> {
    let space = payoff_space(model, agent)?;
    indirect_utility_with(model, agent, &space, y)
}

/// Same as [`indirect_utility`] but reusing a prebuilt payoff space (the
/// pipeline calls this in inner loops).
pub fn indirect_utility_with(
    model: &MarketModel,
    agent: usize,
    space: &PayoffSpace,
    y: Option<&[Rat]>,
) -> Result<IndirectUtility> {
    let spec = &model.agents[agent];
    let n = model.num_outcomes();
    let p = to_f64_vec(&spec.subjective_measure);
    let mut w = to_f64_vec(&spec.endowment);
    if let Some(leg) = y {
        assert_eq!(leg.len(), n, "exchange leg width mismatch");
        for (acc, v) in w.iter_mut().zip(leg) {
            *acc += v.to_f64();
        }
    }
    let u = &spec.utility;
    if w.iter().any(|&x| !u.in_domain(x)) {
        return Err(Error::Domain(format!(
            "agent {agent}: endowment plus exchange leaves the utility domain"
        )));
    }

    let m = space.dim();
    let basis: Vec<Vec<f64>> = space.basis.iter().map(|k| to_f64_vec(k)).collect();
    let wealth = |c: &[f64], out: &mut Vec<f64>| {
        out.clone_from(&w);
        for (cj, k) in c.iter().zip(&basis) {
            for (o, kv) in out.iter_mut().zip(k) {
                *o += cj * kv;
            }
        }
    };
    let mut buf = vec![0.0; n];
    let value_at = |c: &[f64], buf: &mut Vec<f64>| -> f64 {
        wealth(c, buf);
        let mut acc = 0.0;
        for (x, &pw) in buf.iter().zip(&p) {
            if !u.in_domain(*x) {
                return f64::NEG_INFINITY;
            }
            acc += pw * u.u(*x);
        }
        acc
    };

    if m == 0 {
        let value = value_at(&[], &mut buf);
        if !value.is_finite() {
            return Err(Error::Domain(format!(
                "agent {agent}: expected utility diverges at the endowment"
            )));
        }
        check_bounded(u, value, agent)?;
        return Ok(IndirectUtility {
            value,
            grad_norm: 0.0,
            coefficients: Vec::new(),
        });
    }

    let objective = |c: &[f64]| -> f64 {
        let mut local = vec![0.0; n];
        -value_at(c, &mut local)
    };
    let gradient = |c: &[f64], out: &mut [f64]| {
        let mut local = vec![0.0; n];
        wealth(c, &mut local);
        for (j, k) in basis.iter().enumerate() {
            let mut acc = 0.0;
            for ((x, &pw), kv) in local.iter().zip(&p).zip(k) {
                acc += pw * u.du(*x) * kv;
            }
            out[j] = -acc;
        }
    };

    let start = vec![0.0; m];
    if !objective(&start).is_finite() {
        return Err(Error::Domain(format!(
            "agent {agent}: endowment leaves the utility domain"
        )));
    }
    let (c, neg_value, grad_norm) = bfgs_minimize(&objective, &gradient, start, 1e-12, 4000)?;
    let value = -neg_value;
    check_bounded(u, value, agent)?;
    Ok(IndirectUtility {
        value,
        grad_norm,
        coefficients: c,
    })
}

fn check_bounded(u: &UtilityFunction, value: f64, agent: usize) -> Result<()> {
    let sup = u.u_inf();
    if sup.is_finite() && value >= sup - 1e-12 {
        return Err(Error::UnboundedUtility { agent });
    }
    Ok(())
}

/// Dual objective over the scaled-measure cone.
struct DualObjective {
    /// Endowment per outcome.
    x: Vec<f64>,
    /// Subjective probabilities.
    p: Vec<f64>,
    utility: UtilityFunction,
}

impl ConvexObjective for DualObjective {
    fn value(&self, xi: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, &v) in xi.iter().enumerate() {
            let y = v / self.p[i];
            acc += v * self.x[i] + self.p[i] * self.utility.phi(y).unwrap_or(f64::INFINITY);
        }
        acc
    }
    fn gradient(&self, xi: &[f64], out: &mut [f64]) {
        for i in 0..xi.len() {
            let y = xi[i] / self.p[i];
            out[i] = self.x[i] + self.utility.dphi(y).unwrap_or(f64::NEG_INFINITY);
        }
    }
    fn hessian_diag(&self, xi: &[f64], out: &mut [f64]) -> bool {
        for i in 0..xi.len() {
            let y = xi[i] / self.p[i];
            out[i] = match self.utility.d2phi(y) {
                Ok(v) => v / self.p[i],
                Err(_) => return false,
            };
        }
        true
    }
}

/// Solve the dual minimax problem of one agent at the default tolerance.
pub fn solve_minimax(model: &MarketModel, agent: usize) -> Result<MinimaxSolution> {
    solve_minimax_tol(model, agent, 1e-10)
}

/// Solve the dual minimax problem of one agent; `tol` bounds the KKT
/// residual and duality gap of the float stage.
pub fn solve_minimax_tol(model: &MarketModel, agent: usize, tol: f64) -> Result<MinimaxSolution> {
    model.ensure_valid()?;
    let n = model.num_outcomes();
    let spec = &model.agents[agent];
    let polytope = martingale_polytope(model, agent)?;
    let start = match polytope.interior() {
        InteriorAnswer::Yes { point, .. } => point,
        _ => return Err(Error::EmptyPolytope { agent }),
    };
    let rows = martingale_rows(model, agent);
    let space = payoff_space(model, agent)?;

    // No trading and a deterministic endowment: the minimax measure is the
    // subjective one and the multiplier is the marginal utility there.
    let deterministic = spec.endowment.iter().all(|v| v == &spec.endowment[0]);
    if space.dim() == 0 && deterministic {
        let x = spec.endowment[0].to_f64();
        let u = &spec.utility;
        if !u.in_domain(x) {
            return Err(Error::Domain(format!(
                "agent {agent}: deterministic endowment outside the utility domain"
            )));
        }
        let lambda = u.du(x);
        if lambda <= LAMBDA_FLOOR {
            return Err(Error::UnboundedUtility { agent });
        }
        let lambda_exact = match u {
            UtilityFunction::TruncatedQuadratic { gamma } => {
                Some(-Rat::from_int(2) * gamma.clone() * spec.endowment[0].clone())
            }
            _ => None,
        };
        let value = u.u(x);
        return Ok(MinimaxSolution {
            agent,
            lambda,
            lambda_exact,
            measure: to_f64_vec(&spec.subjective_measure),
            measure_exact: Some(spec.subjective_measure.clone()),
            equivalent: true,
            boundary: false,
            dual_value: value,
            primal_value: value,
            gap: 0.0,
        });
    }

    // Scaled-measure cone: martingale rows only, no normalization.
    let mut cone = AffineSimplexSet::new(n);
    for row in &rows {
        cone.push_row(row.clone(), Rat::zero());
    }
    let objective = DualObjective {
        x: to_f64_vec(&spec.endowment),
        p: to_f64_vec(&spec.subjective_measure),
        utility: spec.utility.clone(),
    };
    let opts = ConvexOptions {
        tol,
        max_iters: 100_000,
        start: Some(to_f64_vec(&start)),
    };
    let sol = convex_minimize(&cone, &objective, &opts)?;
    let lambda: f64 = sol.point.iter().sum();
    if lambda <= LAMBDA_FLOOR {
        return Err(Error::UnboundedUtility { agent });
    }
    let measure: Vec<f64> = sol.point.iter().map(|v| v / lambda).collect();

    // Exact re-derivation for the quadratic kind.
    let exact = match &spec.utility {
        UtilityFunction::TruncatedQuadratic { gamma } => {
            certify_quadratic(&sol.point, &rows, spec, gamma, n)
        }
        _ => None,
    };

    let (lambda_exact, measure_exact, dual_value) = match exact {
        Some(cert) => {
            let lam = cert.lambda.clone();
            let q: Vec<Rat> = cert.xi.iter().map(|v| v / &lam).collect();
            (Some(lam), Some(q), cert.dual_value.to_f64())
        }
        None => (None, None, sol.value),
    };
    let measure = match &measure_exact {
        Some(q) => to_f64_vec(q),
        None => measure,
    };
    let lambda = lambda_exact.as_ref().map_or(lambda, Rat::to_f64);

    let scale = measure.iter().cloned().fold(0.0f64, f64::max).max(1e-30);
    let equivalent = match &measure_exact {
        Some(q) => q.iter().all(Rat::is_positive),
        None => measure.iter().all(|&v| v > 1e-9 * scale),
    };

    let primal = indirect_utility_with(model, agent, &space, None)?;
    Ok(MinimaxSolution {
        agent,
        lambda,
        lambda_exact,
        measure,
        measure_exact,
        equivalent,
        boundary: !equivalent,
        dual_value,
        primal_value: primal.value,
        gap: (primal.value - dual_value).abs(),
    })
}

struct QuadraticCertificate {
    xi: Vec<Rat>,
    lambda: Rat,
    dual_value: Rat,
}

/// Re-derive the scaled-measure optimum exactly. On a candidate support
/// taken from the float solve, the first-order system is linear with
/// rational data; posed as an exact LP over the support masses and the
/// row multipliers it also searches the multiplier directions invisible
/// to the support (degenerate boundary optima need them). A feasible
/// point certifies global optimality of the convex problem, and its mass
/// part is unique by strict convexity.
fn certify_quadratic(
    xi_float: &[f64],
    rows: &[Vec<Rat>],
    spec: &crate::model::AgentSpec,
    gamma: &Rat,
    n: usize,
) -> Option<QuadraticCertificate> {
    use crate::optim::{LinearProgram, LpOutcome, RowOp, Sense};
    let scale = xi_float.iter().cloned().fold(0.0f64, f64::max);
    if scale <= 0.0 {
        return None;
    }
    let keep = linalg::independent_rows(rows, n);
    let r: Vec<&Vec<Rat>> = keep.iter().map(|&i| &rows[i]).collect();
    let m = r.len();
    let two_gamma = Rat::from_int(2) * gamma.clone();

    let mut tried: Vec<Vec<usize>> = Vec::new();
    for rel in [1e-7, 2e-6, 1e-4] {
        let support: Vec<usize> = (0..n).filter(|&w| xi_float[w] > rel * scale).collect();
        if support.is_empty() || tried.contains(&support) {
            continue;
        }
        tried.push(support.clone());
        let s = support.len();

        // Variables: xi on the support (nonnegative), then multipliers.
        let mut lp = LinearProgram::new(Sense::Min, vec![Rat::zero(); s + m]);
        for j in 0..m {
            lp.set_free(s + j);
        }
        // Stationarity on the support: xi_w/(2 g p_w) - (R^T nu)_w = -X_w.
        for (si, &w) in support.iter().enumerate() {
            let mut row = vec![Rat::zero(); s + m];
            row[si] = (&two_gamma * &spec.subjective_measure[w]).recip();
            for (rj, rrow) in r.iter().enumerate() {
                row[s + rj] = -rrow[w].clone();
            }
            lp.push_row(row, RowOp::Eq, -&spec.endowment[w]);
        }
        // Feasibility of the kept rows on the support.
        for rrow in &r {
            let mut row = vec![Rat::zero(); s + m];
            for (si, &w) in support.iter().enumerate() {
                row[si] = rrow[w].clone();
            }
            lp.push_row(row, RowOp::Eq, Rat::zero());
        }
        // Off-support dual feasibility: (R^T nu)_w <= X_w.
        for w in 0..n {
            if support.contains(&w) {
                continue;
            }
            let mut row = vec![Rat::zero(); s + m];
            for (rj, rrow) in r.iter().enumerate() {
                row[s + rj] = rrow[w].clone();
            }
            lp.push_row(row, RowOp::Le, spec.endowment[w].clone());
        }

        let point = match lp.solve() {
            LpOutcome::Optimal { point, .. } => point,
            _ => continue,
        };
        let mut xi = vec![Rat::zero(); n];
        for (si, &w) in support.iter().enumerate() {
            xi[w] = point[si].clone();
        }
        // Cross-check every original row, dependent ones included.
        if rows.iter().any(|rrow| !dot(rrow, &xi).is_zero()) {
            continue;
        }
        let lambda = sum(&xi);
        if !lambda.is_positive() {
            continue;
        }
        let mut dual_value = Rat::zero();
        let four_gamma = Rat::from_int(4) * gamma.clone();
        for (w, v) in xi.iter().enumerate() {
            dual_value += &(v * &spec.endowment[w]);
            dual_value += &(&(v * v) / &(&four_gamma * &spec.subjective_measure[w]));
        }
        return Some(QuadraticCertificate {
            xi,
            lambda,
            dual_value,
        });
    }
    None
}

/// `|primal - dual|` for one agent; both solves must succeed.
pub fn duality_gap(model: &MarketModel, agent: usize) -> Result<f64> {
    Ok(solve_minimax(model, agent)?.gap)
}

/// Expectation of an exchange leg under an exact measure.
pub fn leg_expectation(q: &[Rat], leg: &[Rat]) -> Rat {
    expectation(leg, q)
}

/// Plain BFGS with Armijo backtracking; objective may return infinities
/// outside its domain, the line search backs away from them.
fn bfgs_minimize(
    f: &dyn Fn(&[f64]) -> f64,
    grad: &dyn Fn(&[f64], &mut [f64]),
    x0: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, f64, f64)> {
    let n = x0.len();
    let mut x = x0;
    let mut fx = f(&x);
    let mut g = vec![0.0; n];
    grad(&x, &mut g);
    // Inverse Hessian approximation.
    let mut h = vec![vec![0.0; n]; n];
    for (i, row) in h.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let mut gnorm = g.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    for _ in 0..max_iter {
        if gnorm <= tol * (1.0 + fx.abs()) {
            break;
        }
        let mut d = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                d[i] -= h[i][j] * g[j];
            }
        }
        let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            // Reset a broken metric to steepest descent.
            for (i, row) in h.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = if i == j { 1.0 } else { 0.0 };
                }
            }
            for (di, &gi) in d.iter_mut().zip(&g) {
                *di = -gi;
            }
        }
        let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        let mut step = 1.0;
        let mut xn;
        let mut fn_;
        let mut ok = false;
        loop {
            xn = x.iter().zip(&d).map(|(a, b)| a + step * b).collect::<Vec<_>>();
            fn_ = f(&xn);
            if fn_.is_finite() && fn_ <= fx + 1e-4 * step * slope {
                ok = true;
                break;
            }
            step *= 0.5;
            if step < 1e-18 {
                break;
            }
        }
        if !ok {
            break;
        }
        let mut gn = vec![0.0; n];
        grad(&xn, &mut gn);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();
        if sy > 1e-14 {
            // Standard BFGS inverse update.
            let rho = 1.0 / sy;
            let mut hy = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    hy[i] += h[i][j] * yv[j];
                }
            }
            let yhy: f64 = yv.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += rho * rho * (sy + yhy) * s[i] * s[j]
                        - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
        x = xn;
        fx = fn_;
        g = gn;
        gnorm = g.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    }
    Ok((x, fx, gnorm))
}
