use gpcert::certification::{audit_misclassification, run_certification, run_certification_from, wilson_interval, WorkflowConfig};
use gpcert::grid::{Scenario, Zone};
use gpcert::report::{report_json, trace_csv, RunManifest};
use gpcert::uq::{AruSchedule, CounterMode, Verdict};
use gpcert::Exec;

const JALANCOURT: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../zones/jalancourt.json");

fn toy_prior() -> Vec<Scenario> {
    [0.2, 0.5, 0.8].iter().map(|&x| Scenario { production: vec![x] }).collect()
}

fn check_bookkeeping(r: &gpcert::report::CertReport) {
    assert_eq!(r.log.len(), r.n_scenarios);
    assert_eq!(r.verdicts.total(), r.n_scenarios);
    assert_eq!(r.sims_performed, r.verdicts.simulate);
    assert_eq!(r.sims_performed, r.log.iter().filter(|e| e.simulated).count());
    assert_eq!(r.kept_predictions, r.n_scenarios - r.sims_performed);
    assert_eq!(r.sim_fraction, r.sims_performed as f64 / r.n_scenarios as f64);
    assert!(r.ci_lo <= r.p_failure_hat && r.p_failure_hat <= r.ci_hi);
    for (i, e) in r.log.iter().enumerate() {
        assert_eq!(e.iter, i + 1);
        assert_eq!(e.simulated, e.verdict == Verdict::Simulate);
        assert_eq!(e.simulated, e.y_true.is_some());
    }
}

#[test]
fn jalancourt_run_bookkeeping() {
    let zone = Zone::load(JALANCOURT).unwrap();
    let cfg = WorkflowConfig {
        n_scenarios: 300,
        seed: 4,
        ..WorkflowConfig::default()
    };
    let r = run_certification(&zone, &cfg).unwrap();
    check_bookkeeping(&r);
    // The residual term alone forces every early scenario to be simulated.
    assert!(r.log[..3].iter().all(|e| e.simulated));
}

#[test]
fn equal_seeds_give_identical_outputs() {
    let zone = Zone::load(JALANCOURT).unwrap();
    let cfg = WorkflowConfig {
        n_scenarios: 200,
        seed: 21,
        ..WorkflowConfig::default()
    };
    let manifest = RunManifest::new("certify", 21);
    let a = run_certification_from(&zone, &cfg, &[], Exec::Sequential).unwrap();
    let b = run_certification_from(&zone, &cfg, &[], Exec::default()).unwrap();
    assert_eq!(report_json(&a, &manifest), report_json(&b, &manifest));
    assert_eq!(trace_csv(&a, &manifest), trace_csv(&b, &manifest));
    let other = run_certification(&zone, &WorkflowConfig { seed: 22, ..cfg }).unwrap();
    assert_ne!(trace_csv(&a, &manifest), trace_csv(&other, &manifest));
}

#[test]
fn simulating_everything_is_exact() {
    let zone = Zone::load(JALANCOURT).unwrap();
    let cfg = WorkflowConfig {
        n_scenarios: 120,
        aru: AruSchedule::new(1e3, 1.0 + 1e-9, CounterMode::WorkflowIteration).unwrap(),
        seed: 2,
        ..WorkflowConfig::default()
    };
    let r = run_certification(&zone, &cfg).unwrap();
    assert_eq!(r.sims_performed, 120);
    assert_eq!(r.misclassified_fraction, 0.0);
    assert_eq!(r.failures, 0);
}

#[test]
fn lax_rule_trusts_the_surrogate() {
    let zone = Zone::univariate_toy();
    let cfg = WorkflowConfig {
        n_scenarios: 500,
        beta: 0.49,
        aru: AruSchedule::vanilla(),
        seed: 8,
        ..WorkflowConfig::default()
    };
    let r = run_certification(&zone, &cfg).unwrap();
    check_bookkeeping(&r);
    assert!(r.sims_performed <= cfg.initial_simulations + 5, "{}", r.sims_performed);
}

#[test]
fn counter_modes() {
    let zone = Zone::univariate_toy();
    let run = |mode| {
        let cfg = WorkflowConfig {
            n_scenarios: 50,
            seed: 1,
            aru: AruSchedule::new(0.1, 1.2, mode).unwrap(),
            ..WorkflowConfig::default()
        };
        run_certification_from(&zone, &cfg, &toy_prior(), Exec::Sequential).unwrap()
    };
    let by_iter = run(CounterMode::WorkflowIteration);
    let by_sims = run(CounterMode::SimulationsPerformed);
    assert!((by_iter.log[0].sigma_ru - 0.1 / 1.2).abs() < 1e-15);
    assert!((by_sims.log[0].sigma_ru - 0.1).abs() < 1e-15);
    let mut sims = 0;
    for e in &by_sims.log {
        assert!((e.sigma_ru - 0.1 / 1.2f64.powi(sims)).abs() < 1e-15);
        sims += i32::from(e.simulated);
    }
}

#[test]
fn univariate_aru_from_sparse_prior_is_reliable() {
    let zone = Zone::univariate_toy();
    for seed in 0..5 {
        let cfg = WorkflowConfig {
            n_scenarios: 1000,
            seed,
            ..WorkflowConfig::default()
        };
        let r = run_certification_from(&zone, &cfg, &toy_prior(), Exec::default()).unwrap();
        assert_eq!(r.prior_simulations, 3);
        // Forced simulations must have reached the plateau.
        assert!(r.log.iter().any(|e| e.y_true.is_some_and(|y| (y - 0.99).abs() < 1e-12)));
        let frac = audit_misclassification(&r.log, &zone).unwrap();
        assert!(frac < 0.01, "seed {seed}: {frac}");
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let zone = Zone::univariate_toy();
    for cfg in [
        WorkflowConfig {
            n_scenarios: 0,
            ..WorkflowConfig::default()
        },
        WorkflowConfig {
            beta: 0.0,
            ..WorkflowConfig::default()
        },
        WorkflowConfig {
            aru: AruSchedule {
                sigma0: 0.1,
                alpha: 0.9,
                counter_mode: CounterMode::WorkflowIteration,
            },
            ..WorkflowConfig::default()
        },
    ] {
        assert!(run_certification(&zone, &cfg).is_err());
    }
}

#[test]
fn wilson_interval_brackets_estimate() {
    for n in [1usize, 7, 100, 2000] {
        for k in [0, n / 3, n] {
            let (lo, hi) = wilson_interval(k, n, 0.95);
            let p = k as f64 / n as f64;
            assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
        }
    }
}
