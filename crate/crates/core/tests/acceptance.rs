//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line with its timing (run with `-- --nocapture` to see them
//! on success).

use colarb_core::arbitrage::{
    check_collective_ftap, check_ftap, check_no_collective_arbitrage,
    collective_martingale_polytope, martingale_polytope,
};
use colarb_core::beneficial::{
    beneficial_pipeline, beneficial_pipeline_with, construct_candidate, polarity_check,
    PipelineOutcome,
};
use colarb_core::cara::CaraRegionSpec;
use colarb_core::error::Error;
use colarb_core::fixtures;
use colarb_core::minimax::{indirect_utility, solve_minimax};
use colarb_core::model::restrict_measure;
use colarb_core::optim::{interior_point, AffineSimplexSet, InteriorAnswer};
use colarb_core::rational::Rat;
use colarb_core::sweep::{random_model, randomized_improvement_search, SweepConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn fr(a: i64, b: i64) -> Rat {
    Rat::frac(a, b)
}

/// Run a criterion body, print its PASS line, and enforce the budget.
fn criterion<F: FnOnce()>(name: &str, budget_secs: f64, body: F) {
    let start = Instant::now();
    body();
    let elapsed = start.elapsed().as_secs_f64();
    println!("[PASS] {name} ({elapsed:.2}s, budget {budget_secs}s)");
    assert!(
        elapsed < budget_secs,
        "{name}: took {elapsed:.2}s, budget {budget_secs}s"
    );
}

#[test]
fn golden_tree_reproduction_exact() {
    criterion("golden tree reproduction (exact rationals)", 5.0, || {
        let model = fixtures::fig1();
        let sols: Vec<_> = (0..2).map(|i| solve_minimax(&model, i).unwrap()).collect();

        let q1_want: Vec<Rat> = [(1, 8), (3, 8), (1, 12), (1, 12), (1, 12), (1, 12), (1, 12), (1, 12)]
            .iter()
            .map(|&(a, b)| fr(a, b))
            .collect();
        let q2_want: Vec<Rat> = [
            (33, 125),
            (11, 125),
            (17, 125),
            (17, 125),
            (1, 100),
            (1, 100),
            (89, 500),
            (89, 500),
        ]
        .iter()
        .map(|&(a, b)| fr(a, b))
        .collect();
        assert_eq!(sols[0].measure_exact.as_ref().unwrap(), &q1_want);
        assert_eq!(sols[1].measure_exact.as_ref().unwrap(), &q2_want);

        let time1 = model.agents[0].filtration.at(1);
        let r1 = restrict_measure(&q1_want, time1);
        let r2 = restrict_measure(&q2_want, time1);
        assert_eq!(r1, vec![fr(1, 2), fr(1, 6), fr(1, 6), fr(1, 6)]);
        assert_eq!(r2, vec![fr(44, 125), fr(34, 125), fr(1, 50), fr(89, 250)]);

        // Polarity of the indicator exchange on the first time-1 atom.
        let report = polarity_check(&model.exchange, &sols);
        let exact = report.values_exact.as_ref().unwrap();
        assert_eq!(exact[0], fr(37, 250));

        // Rebalanced candidate from that seed prices at 37/500 per agent.
        let seed = model.exchange.basis[0].clone();
        let cand = construct_candidate(&model.exchange, &sols, &seed).unwrap();
        assert_eq!(cand.common_expectation_exact.as_ref().unwrap(), &fr(37, 500));
        for (sol, leg) in sols.iter().zip(&cand.y_hat.legs) {
            assert_eq!(sol.expectation_exact(leg).unwrap(), fr(37, 500));
        }

        // Full pipeline: strict certificate at a positive scale.
        match beneficial_pipeline_with(&model, &model.exchange, &sols).unwrap() {
            PipelineOutcome::Certificate(cert) => {
                assert!(cert.strict);
                assert!(cert.alpha.is_positive());
                for (a, b) in cert.utilities_after.iter().zip(&cert.utilities_before) {
                    assert!(a > b);
                }
            }
            PipelineOutcome::Absent(_) => panic!("golden tree must admit a certificate"),
        }
    });
}

#[test]
fn golden_tree_structural_checks() {
    criterion("golden tree structural checks (exact)", 5.0, || {
        let model = fixtures::fig1();

        // No collective arbitrage, cross-checked against the polytope.
        assert!(check_no_collective_arbitrage(&model, &model.exchange)
            .unwrap()
            .holds());
        let report = check_collective_ftap(&model, &model.exchange).unwrap();
        assert!(report.no_collective_arbitrage);

        // Any collective measure restricts to the one-parameter family:
        // both agents equal on time-1 atoms with masses
        // (1/2, q, 1/8 - q/4, 3/8 - 3q/4).
        let polytope = collective_martingale_polytope(&model, &model.exchange).unwrap();
        let time1 = model.agents[0].filtration.at(1);
        let measures = report.measures.unwrap();
        let r1 = restrict_measure(&measures[0], time1);
        let r2 = restrict_measure(&measures[1], time1);
        assert_eq!(r1, r2);
        assert_eq!(r1[0], fr(1, 2));
        assert_eq!(r1[2], fr(1, 8) - fr(1, 4) * r1[1].clone());
        assert_eq!(r1[3], fr(3, 8) - fr(3, 4) * r1[1].clone());

        // Ten sampled family members are all attained by equivalent
        // collective measures (add restriction rows, ask for an interior).
        let n = model.num_outcomes();
        for k in 1..=10 {
            let q = fr(k, 22);
            let target = vec![
                fr(1, 2),
                q.clone(),
                fr(1, 8) - fr(1, 4) * q.clone(),
                fr(3, 8) - fr(3, 4) * q.clone(),
            ];
            let mut set = polytope.set.clone();
            for agent in 0..2 {
                for (atom, want) in time1.atoms.iter().zip(&target) {
                    let mut row = vec![Rat::zero(); set.dim];
                    for &w in atom {
                        row[agent * n + w] = Rat::one();
                    }
                    set.push_row(row, want.clone());
                }
            }
            assert!(
                interior_point(&set).exists(),
                "family member q = {q} unreachable"
            );
        }

        // No single measure prices both stocks: the individual polytopes
        // have no common equivalent point.
        let p1 = martingale_polytope(&model, 0).unwrap();
        let p2 = martingale_polytope(&model, 1).unwrap();
        let mut combined = AffineSimplexSet::new(n);
        for (c, r) in p1.set.rows.iter().chain(&p2.set.rows) {
            combined.push_row(c.clone(), r.clone());
        }
        match interior_point(&combined) {
            InteriorAnswer::Yes { .. } => panic!("global market must admit arbitrage"),
            InteriorAnswer::BoundaryOnly { .. } | InteriorAnswer::Infeasible { .. } => {}
        }
    });
}

#[test]
fn ftap_agreement_sweep() {
    criterion("fundamental-theorem agreement on 200 random models", 60.0, || {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let cfg = SweepConfig {
            fair_node_bias: 0.6,
            ..SweepConfig::default()
        };
        for run in 0..200 {
            let model = random_model(&mut rng, &cfg);
            for agent in 0..model.num_agents() {
                // Errors here mean the two routes disagreed.
                check_ftap(&model, agent)
                    .unwrap_or_else(|e| panic!("run {run}, agent {agent}: {e}"));
            }
            check_collective_ftap(&model, &model.exchange)
                .unwrap_or_else(|e| panic!("run {run} collective: {e}"));
        }
    });
}

#[test]
fn beneficial_equivalence_sweep() {
    criterion(
        "beneficial-exchange equivalence on 100 random models",
        300.0,
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(4096);
            let cfg = SweepConfig {
                fair_node_bias: 0.95,
                max_extra_exchanges: 2,
                ..SweepConfig::default()
            };
            let mut used = 0;
            let mut certificates = 0;
            let mut absences = 0;
            while used < 100 {
                let model = random_model(&mut rng, &cfg);
                // Keep only models satisfying the standing assumptions:
                // every agent arbitrage-free with finite indirect utility.
                let sols: Result<Vec<_>, _> = (0..model.num_agents())
                    .map(|i| solve_minimax(&model, i))
                    .collect();
                let sols = match sols {
                    Ok(s) => s,
                    Err(Error::EmptyPolytope { .. })
                    | Err(Error::UnboundedUtility { .. })
                    | Err(Error::Domain(_)) => continue,
                    Err(e) => panic!("unexpected solver failure: {e}"),
                };
                used += 1;
                let report = polarity_check(&model.exchange, &sols);
                let outcome =
                    beneficial_pipeline_with(&model, &model.exchange, &sols).unwrap();
                match outcome {
                    PipelineOutcome::Certificate(cert) => {
                        assert!(report.violated(), "certificate without violation");
                        assert!(cert.strict);
                        certificates += 1;
                    }
                    PipelineOutcome::Absent(_) => {
                        assert!(!report.violated(), "violation without certificate");
                        // Falsification: 200 sampled exchanges never improve
                        // all agents simultaneously beyond the threshold.
                        let best = randomized_improvement_search(
                            &model,
                            &model.exchange,
                            &sols,
                            200,
                            &mut rng,
                        );
                        assert!(
                            best <= 1e-9,
                            "polarity satisfied but sampled improvement {best}"
                        );
                        absences += 1;
                    }
                }
            }
            println!(
                "  beneficial sweep: {certificates} certificates, {absences} absences"
            );
            assert!(certificates > 0, "sweep never produced a certificate");
            assert!(absences > 0, "sweep never produced an absence");
        },
    );
}

#[test]
fn duality_and_derivative_checks() {
    criterion("duality gaps and directional derivatives", 120.0, || {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let cfg = SweepConfig {
            fair_node_bias: 0.95,
            ..SweepConfig::default()
        };
        // Duality gap <= 1e-8 on every sweep model that admits a solve.
        let mut solved = 0;
        let mut models_with_solutions = Vec::new();
        while solved < 60 {
            let model = random_model(&mut rng, &cfg);
            let sols: Result<Vec<_>, _> = (0..model.num_agents())
                .map(|i| solve_minimax(&model, i))
                .collect();
            let sols = match sols {
                Ok(s) => s,
                Err(_) => continue,
            };
            for sol in &sols {
                assert!(
                    sol.gap <= 1e-8,
                    "agent {}: duality gap {}",
                    sol.agent,
                    sol.gap
                );
            }
            solved += 1;
            models_with_solutions.push((model, sols));
        }

        // Directional derivative vs central finite difference (step 1e-5,
        // tolerance 1e-4) on 50 (model, exchange) pairs.
        let step = fr(1, 100_000);
        let mut checked = 0;
        'outer: for (model, sols) in &models_with_solutions {
            if model.exchange.basis.is_empty() {
                continue;
            }
            for _ in 0..2 {
                let k = rng.gen_range(0..model.exchange.basis.len());
                let y = &model.exchange.basis[k];
                for (i, sol) in sols.iter().enumerate() {
                    let leg = &y.legs[i];
                    let analytic = sol.directional_derivative(leg);
                    let up: Vec<Rat> = leg.iter().map(|v| v * &step).collect();
                    let dn: Vec<Rat> = leg.iter().map(|v| -&(v * &step)).collect();
                    let f_up = match indirect_utility(model, i, Some(&up)) {
                        Ok(v) => v.value,
                        Err(_) => continue,
                    };
                    let f_dn = match indirect_utility(model, i, Some(&dn)) {
                        Ok(v) => v.value,
                        Err(_) => continue,
                    };
                    let fd = (f_up - f_dn) / (2.0 * step.to_f64());
                    assert!(
                        (fd - analytic).abs() <= 1e-4,
                        "derivative mismatch: fd {fd}, analytic {analytic}"
                    );
                    checked += 1;
                    if checked >= 50 {
                        break 'outer;
                    }
                }
            }
        }
        assert!(checked >= 50, "only {checked} derivative checks ran");
    });
}

#[test]
fn implication_matrix_fixtures() {
    criterion("implication-matrix fixtures", 30.0, || {
        // Collective arbitrage forces a certificate.
        let ca = fixtures::ca_pair();
        assert!(!check_no_collective_arbitrage(&ca, &ca.exchange)
            .unwrap()
            .holds());
        assert!(beneficial_pipeline(&ca, &ca.exchange)
            .unwrap()
            .has_certificate());

        // Complete individual markets under no collective arbitrage: none.
        let twin = fixtures::twin_complete();
        assert!(check_no_collective_arbitrage(&twin, &twin.exchange)
            .unwrap()
            .holds());
        for agent in 0..2 {
            assert!(colarb_core::arbitrage::check_completeness(&twin, agent).unwrap());
        }
        assert!(!beneficial_pipeline(&twin, &twin.exchange)
            .unwrap()
            .has_certificate());

        // No collective arbitrage alone decides nothing: one fixture with a
        // certificate, one without.
        let tree = fixtures::fig1();
        assert!(check_no_collective_arbitrage(&tree, &tree.exchange)
            .unwrap()
            .holds());
        assert!(beneficial_pipeline(&tree, &tree.exchange)
            .unwrap()
            .has_certificate());
        // (twin-complete above is the no-certificate row)
    });
}

#[test]
fn cara_region_checks() {
    criterion("cara trade region", 10.0, || {
        let specs = [
            CaraRegionSpec::new(fr(3, 5), fr(3, 10), Rat::one(), Rat::one()).unwrap(),
            CaraRegionSpec::new(fr(11, 20), fr(1, 5), Rat::from_int(2), fr(1, 2)).unwrap(),
            CaraRegionSpec::new(fr(3, 4), fr(1, 4), Rat::one(), Rat::from_int(3)).unwrap(),
        ];
        for spec in &specs {
            let region = spec.region(1e-12).unwrap();
            let a = region.alpha_star;
            assert!(a > 0.0);
            assert!(
                (spec.curve_upper(a) - spec.curve_lower(a)).abs() <= 1e-12,
                "root residual too large"
            );

            // Initial slope of the gap matches the mass difference.
            let eps = 1e-7;
            let slope = (spec.curve_upper(eps) - spec.curve_lower(eps)) / eps;
            let want = (spec.q1.clone() - spec.q2.clone()).to_f64();
            assert!((slope - want).abs() <= 1e-6, "slope {slope} want {want}");

            // 100 sampled interior points all satisfy both strict
            // expectation inequalities.
            for iu in 1..=10 {
                let alpha = a * iu as f64 / 11.0;
                let (lo, hi) = (spec.curve_lower(alpha), spec.curve_upper(alpha));
                assert!(hi > lo);
                for iv in 1..=10 {
                    let beta = lo + (hi - lo) * iv as f64 / 11.0;
                    let m = region.membership(alpha, beta);
                    assert!(m.inside);
                    assert!(m.first_expectation < 1.0);
                    assert!(m.second_expectation < 1.0);
                }
            }

            // Emitted exchanges, embedded in trivial markets, always
            // produce strict certificates through the general pipeline.
            for iu in [2, 5, 8] {
                let alpha = a * iu as f64 / 11.0;
                let beta = 0.5 * (spec.curve_lower(alpha) + spec.curve_upper(alpha));
                let y = region.emit_exchange(alpha, beta).unwrap();
                let model = region.bridge_model(&y);
                match beneficial_pipeline(&model, &model.exchange).unwrap() {
                    PipelineOutcome::Certificate(cert) => assert!(cert.strict),
                    PipelineOutcome::Absent(_) => {
                        panic!("emitted exchange must certify as beneficial")
                    }
                }
            }
        }
    });
}
