//! Seeded Monte Carlo checks of level, coverage and bias.

use rayon::prelude::*;

use tailci::adaptive::{successive_tests, CprimeMode, GridSpec};
use tailci::baselines::{kstar, ktilde, wald_ci};
use tailci::empirics::{estimate_c, hill_inverse_tail_index, sample_fraction, TailSample};
use tailci::experiments::{run_power_study, PowerStudyConfig};
use tailci::rng::derive_seed;
use tailci::soptest::{test_plugin, two_point_ci, TestConfig};
use tailci::DistributionSpec;

fn draws(spec: &DistributionSpec, n: usize, reps: u64, master: u64) -> impl ParallelIterator<Item = TailSample> + '_ {
    (0..reps)
        .into_par_iter()
        .map(move |r| spec.sample(n, derive_seed(master, r)).unwrap())
}

fn frequency(hits: usize, reps: u64) -> f64 {
    hits as f64 / reps as f64
}

#[test]
fn estimated_scale_is_unbiased_on_pareto() {
    let spec = DistributionSpec::pareto(1.0).unwrap();
    let n = 100_000;
    let total: f64 = draws(&spec, n, 100, 11)
        .map(|s| {
            let inv = hill_inverse_tail_index(&s, sample_fraction(n, 1.0)).unwrap();
            estimate_c(&s, 1.0 / inv, 1.0, 0.0).unwrap().c_hat
        })
        .sum();
    let mean = total / 100.0;
    assert!((mean - 1.0).abs() <= 0.1, "mean C hat {mean}");
}

#[test]
fn plugin_test_holds_level_without_second_order_term() {
    let spec = DistributionSpec::pareto(2.0).unwrap();
    let config = TestConfig::new(0.05, f64::INFINITY, 1.0, 1.0).unwrap();
    let rejections = draws(&spec, 10_000, 200, 12)
        .filter(|s| test_plugin(s, &config).unwrap().reject)
        .count();
    let rate = frequency(rejections, 200);
    assert!(rate <= 0.05 + 0.05, "rejection rate {rate}");
}

#[test]
fn two_point_interval_covers_tau() {
    let spec = DistributionSpec::pareto(1.0).unwrap();
    let config = TestConfig::new(0.05, 2.0, 0.5, 1.0).unwrap();
    let covered = draws(&spec, 10_000, 100, 13)
        .filter(|s| two_point_ci(s, &config).unwrap().contains(1.0))
        .count();
    let cov = frequency(covered, 100);
    assert!(cov >= 0.90, "coverage {cov}");
}

#[test]
fn discretized_pareto_triggers_rejections() {
    let spec = DistributionSpec::discretized_pareto(2.0).unwrap();
    let n = 10_000;
    let grid = GridSpec::default_for(n).unwrap();
    let any_reject = draws(&spec, n, 100, 14)
        .filter(|s| {
            successive_tests(s, &grid, 0.05, CprimeMode::Heuristic)
                .unwrap()
                .iter()
                .any(|o| o.reject)
        })
        .count();
    let rate = frequency(any_reject, 100);
    assert!(rate >= 0.5, "frequency of some rejection {rate}");
}

#[test]
fn undersmoothed_wald_reaches_nominal_coverage() {
    let spec = DistributionSpec::pareto(1.0).unwrap();
    let n = 10_000;
    let k = ktilde(n, 10.0);
    let covered = draws(&spec, n, 200, 15)
        .filter(|s| wald_ci(s, k, 0.05).unwrap().contains(1.0))
        .count();
    let cov = frequency(covered, 200);
    assert!((cov - 0.95).abs() <= 0.07, "coverage {cov} at k={k}");
}

#[test]
fn oracle_wald_on_pareto_two() {
    let spec = DistributionSpec::pareto(2.0).unwrap();
    let n = 10_000;
    let k = kstar(n, 1.0);
    let intervals: Vec<_> = draws(&spec, n, 100, 16).map(|s| wald_ci(&s, k, 0.05).unwrap()).collect();
    let cov = intervals.iter().filter(|ci| ci.contains(0.5)).count() as f64 / 100.0;
    let size = intervals.iter().map(|ci| ci.size()).sum::<f64>() / 100.0;
    assert!(cov >= 0.85, "coverage {cov}");
    assert!((0.03..=0.12).contains(&size), "mean size {size}");
}

fn null_rates(null: DistributionSpec, test: TestConfig, seed: u64) -> Vec<(String, f64)> {
    let config = PowerStudyConfig {
        null,
        n: 10_000,
        replications: 200,
        test,
        upsilons: vec![0.5, 1.0],
        anchor_n: None,
        master_seed: seed,
    };
    run_power_study(&config, None)
        .unwrap()
        .into_iter()
        .filter(|c| c.upsilon.is_none())
        .map(|c| (c.test, c.rejection_rate))
        .collect()
}

fn binomial_band(reps: usize) -> f64 {
    0.05 + 3.0 * (0.05f64 * 0.95 / reps as f64).sqrt()
}

#[test]
fn power_study_known_null_cell_stays_in_binomial_band() {
    let rates = null_rates(DistributionSpec::pareto(1.0).unwrap(), TestConfig::new(0.05, 2.0, 0.5, 1.0).unwrap(), 17);
    let (_, known) = rates.iter().find(|(t, _)| t == "known").unwrap();
    assert!(*known <= binomial_band(200), "known null rate {known}");
}

#[test]
fn power_study_null_cells_stay_in_binomial_band() {
    let rates = null_rates(
        DistributionSpec::pareto(2.0).unwrap(),
        TestConfig::new(0.05, f64::INFINITY, 1.0, 1.0).unwrap(),
        18,
    );
    assert_eq!(rates.len(), 2);
    for (test, rate) in rates {
        assert!(rate <= binomial_band(200), "{test} null rate {rate}");
    }
}
