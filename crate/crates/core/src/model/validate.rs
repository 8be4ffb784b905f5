//! Structural validation of market models. Violations are data in the
//! report, not errors: a broken model is a legitimate input to `validate`.

use super::{ExchangeVector, MarketModel, Partition};
use crate::rational::{sum, Rat};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub code: String,
    pub message: String,
}

#[derive(Clone, Debug, Serialize, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn summary(&self) -> String {
        self.violations
            .iter()
            .map(|v| format!("[{}] {}", v.code, v.message))
            .collect::<Vec<_>>()
            .join("; ")
    }

    fn push(&mut self, code: &str, message: String) {
        self.violations.push(Violation {
            code: code.to_string(),
            message,
        });
    }
}

fn check_probability(report: &mut ValidationReport, what: &str, v: &[Rat], n: usize) {
    if v.len() != n {
        report.push(
            "measure_length",
            format!("{what}: {} entries for {n} outcomes", v.len()),
        );
        return;
    }
    if sum(v) != Rat::one() {
        report.push("measure_sum", format!("{what}: entries sum to {}", sum(v)));
    }
    if v.iter().any(|p| !p.is_positive()) {
        report.push(
            "measure_not_equivalent",
            format!("{what}: measure not equivalent (zero or negative mass)"),
        );
    }
}

pub fn validate_model(model: &MarketModel) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = model.num_outcomes();

    if n == 0 {
        report.push("empty_sample_space", "no outcomes".into());
        return report;
    }
    if model.agents.is_empty() {
        report.push("no_agents", "at least one agent is required".into());
    }
    check_probability(&mut report, "reference measure", &model.space.reference_measure, n);

    for (i, agent) in model.agents.iter().enumerate() {
        let tag = format!("agent {i}");
        check_probability(&mut report, &format!("{tag} measure"), &agent.subjective_measure, n);

        // Filtration: horizon+1 partitions, trivial start, refinement chain.
        let parts = &agent.filtration.partitions;
        if parts.len() != model.horizon + 1 {
            report.push(
                "filtration_length",
                format!("{tag}: {} partitions for horizon {}", parts.len(), model.horizon),
            );
        }
        for (t, p) in parts.iter().enumerate() {
            if !p.is_valid(n) {
                report.push("partition_invalid", format!("{tag}: partition at t={t} malformed"));
            }
        }
        if let Some(p0) = parts.first() {
            if p0.num_atoms() != 1 {
                report.push(
                    "initial_not_trivial",
                    format!("{tag}: time-0 partition has {} atoms", p0.num_atoms()),
                );
            }
        }
        for t in 1..parts.len() {
            if !parts[t].refines(&parts[t - 1]) {
                report.push(
                    "not_refining",
                    format!("{tag}: partition at t={t} does not refine t={}", t - 1),
                );
            }
        }

        for (d, asset) in agent.assets.iter().enumerate() {
            if asset.values.len() != parts.len() {
                report.push(
                    "asset_length",
                    format!("{tag} asset {d}: {} time slices", asset.values.len()),
                );
                continue;
            }
            for (t, slice) in asset.values.iter().enumerate() {
                if slice.len() != n {
                    report.push(
                        "asset_width",
                        format!("{tag} asset {d}: slice t={t} has {} values", slice.len()),
                    );
                } else if t < parts.len() && !parts[t].is_measurable(slice) {
                    report.push(
                        "not_adapted",
                        format!("{tag} asset {d}: not adapted at t={t}"),
                    );
                }
            }
        }

        if agent.endowment.len() != n {
            report.push(
                "endowment_width",
                format!("{tag}: endowment has {} values", agent.endowment.len()),
            );
        } else if let Some(last) = parts.last() {
            if last.is_valid(n) && !last.is_measurable(&agent.endowment) {
                report.push(
                    "endowment_not_measurable",
                    format!("{tag}: endowment not measurable w.r.t. the terminal partition"),
                );
            }
        }

        if let Err(e) = agent.utility.check_params() {
            report.push("utility_parameters", format!("{tag}: {e}"));
        }
    }

    validate_exchange(&mut report, model);
    report
}

fn validate_exchange(report: &mut ValidationReport, model: &MarketModel) {
    let n = model.num_outcomes();
    let agents = model.num_agents();
    let ex = &model.exchange;

    if let Some(parts) = &ex.measurability {
        if parts.len() != agents {
            report.push(
                "exchange_measurability_length",
                format!("{} declared partitions for {agents} agents", parts.len()),
            );
        }
        for (i, p) in parts.iter().enumerate() {
            if !p.is_valid(n) {
                report.push(
                    "exchange_partition_invalid",
                    format!("declared partition for agent {i} malformed"),
                );
            }
        }
    }

    for (k, y) in ex.basis.iter().enumerate() {
        if y.legs.len() != agents {
            report.push(
                "exchange_legs",
                format!("basis element {k} has {} legs for {agents} agents", y.legs.len()),
            );
            continue;
        }
        if y.legs.iter().any(|leg| leg.len() != n) {
            report.push("exchange_width", format!("basis element {k} leg width mismatch"));
            continue;
        }
        if ex.zero_sum && !y.is_zero_sum() {
            report.push(
                "exchange_not_zero_sum",
                format!("basis element {k} violates the zero-sum constraint"),
            );
        }
        for (i, leg) in y.legs.iter().enumerate() {
            let declared: Option<&Partition> = ex
                .measurability
                .as_ref()
                .and_then(|parts| parts.get(i));
            if let Some(p) = declared {
                if p.is_valid(n) && !p.is_measurable(leg) {
                    report.push(
                        "exchange_not_measurable",
                        format!("basis element {k}, agent {i}: leg not measurable as declared"),
                    );
                }
            }
            if let Some(agent) = model.agents.get(i) {
                let terminal = agent.filtration.terminal();
                if terminal.is_valid(n) && !terminal.is_measurable(leg) {
                    report.push(
                        "exchange_not_measurable",
                        format!(
                            "basis element {k}, agent {i}: leg not measurable w.r.t. the agent's terminal partition"
                        ),
                    );
                }
            }
        }
    }

    if ex.includes_deterministic && agents >= 2 && ex.basis.iter().all(|y| y.legs.len() == agents) {
        // The canonical deterministic zero-sum vectors e_j - e_N must lie in
        // the span or cone; cones need both signs.
        for j in 0..agents - 1 {
            let mut x = vec![Rat::zero(); agents];
            x[j] = Rat::one();
            x[agents - 1] = -Rat::one();
            let y = ExchangeVector::deterministic(&x, n);
            let ok = match ex.kind {
                super::ExchangeKind::VectorSpace => ex.contains(&y),
                super::ExchangeKind::ConvexCone => ex.contains(&y) && ex.contains(&y.negate()),
            };
            if !ok {
                report.push(
                    "deterministic_not_included",
                    format!("deterministic vector e_{j} - e_{} missing from the family", agents - 1),
                );
            }
        }
    }
}
