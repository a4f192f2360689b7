//! Sequential certification workflow.
//!
//! Scenarios are streamed one at a time. Once a few warm-start simulations
//! exist, the GP posterior plus the residual-uncertainty schedule decides
//! whether the surrogate's verdict is kept or the simulator is run; every
//! simulation extends the dataset the GP is conditioned on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::gp::{fit, Dataset, FitConfig, GpModel, KernelParams, RefitPolicy};
use crate::grid::{sample_scenario, simulate, Scenario, Zone};
use crate::report::{CertReport, LogEntry, Method, VerdictCounts};
use crate::seeds::{rng_for, Stream};
use crate::stats::normal_quantile;
use crate::uq::{decide_raw, residual_sigma, AruSchedule, CounterMode, DecisionConfig, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkflowConfig {
    pub n_scenarios: usize,
    pub beta: f64,
    /// Congestion threshold on the maximum relative charge.
    pub threshold: f64,
    pub aru: AruSchedule,
    pub seed: u64,
    pub refit_policy: RefitPolicy,
    /// Scenarios simulated unconditionally before the GP is consulted.
    pub initial_simulations: usize,
}

impl Default for WorkflowConfig {
    fn default() -> Self {
        WorkflowConfig {
            n_scenarios: 2000,
            beta: 0.01,
            threshold: 1.0,
            aru: AruSchedule {
                sigma0: 0.1,
                alpha: 1.2,
                counter_mode: CounterMode::SimulationsPerformed,
            },
            seed: 0,
            refit_policy: RefitPolicy::default(),
            initial_simulations: 3,
        }
    }
}

impl WorkflowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_scenarios == 0 {
            return Err(Error::InvalidParameter("n_scenarios must be >= 1".into()));
        }
        DecisionConfig::new(self.beta, self.threshold)?;
        self.aru.validate()
    }
}

/// Starting hyperparameters in the normalized input cube.
pub(crate) fn default_init(dim: usize) -> KernelParams {
    KernelParams {
        signal_variance: 0.25,
        lengthscales: vec![0.5; dim],
        noise_variance: 1e-8,
    }
}

pub(crate) fn unit_cube_fit(dim: usize, starts: usize) -> FitConfig {
    FitConfig {
        starts,
        input_range: Some(vec![1.0; dim]),
        ..FitConfig::default()
    }
}

/// Dataset and GP kept in sync under a refit policy.
pub(crate) struct Surrogate {
    pub data: Dataset,
    pub model: Option<GpModel>,
    pub params: KernelParams,
    pub policy: RefitPolicy,
    pub min_points: usize,
    fitted: bool,
}

impl Surrogate {
    pub fn new(dim: usize, policy: RefitPolicy, min_points: usize) -> Self {
        Surrogate {
            data: Dataset::new(dim),
            model: None,
            params: default_init(dim),
            policy,
            min_points: min_points.max(1),
            fitted: false,
        }
    }

    /// Adds a simulated point. Exact repeats are ignored.
    pub fn insert(&mut self, x: &[f64], y: f64) -> Result<()> {
        if self.data.find(x).is_some() {
            return Ok(());
        }
        self.data.push(x, y)?;
        let n = self.data.len();
        if n < self.min_points {
            return Ok(());
        }
        let model = if n < self.policy.fit_threshold(self.data.dim()) {
            GpModel::condition(&self.data, self.params.clone())?
        } else if !self.fitted {
            self.fitted = true;
            fit(&self.data, &self.params, &unit_cube_fit(self.data.dim(), 5))?
        } else if self.policy.should_refit(n) {
            let starts = self.policy.starts_for(n, 5);
            fit(&self.data, &self.params, &unit_cube_fit(self.data.dim(), starts))?
        } else {
            GpModel::condition(&self.data, self.params.clone())?
        };
        self.params = model.params().clone();
        self.model = Some(model);
        Ok(())
    }
}

fn sim_y(zone: &Zone, s: &Scenario, index: usize) -> Result<f64> {
    simulate(zone, s).map(|r| r.max_rel_charge).map_err(|e| Error::Scenario {
        index,
        source: Box::new(e),
    })
}

pub fn run_certification(zone: &Zone, cfg: &WorkflowConfig) -> Result<CertReport> {
    run_certification_from(zone, cfg, &[], Exec::default())
}

/// Runs the workflow after simulating `prior` scenarios outside the stream.
pub fn run_certification_from(zone: &Zone, cfg: &WorkflowConfig, prior: &[Scenario], exec: Exec) -> Result<CertReport> {
    cfg.validate()?;
    let dcfg = DecisionConfig::new(cfg.beta, cfg.threshold)?;
    let mut rng = rng_for(cfg.seed, Stream::Scenarios);
    let mut sur = Surrogate::new(zone.dim(), cfg.refit_policy, cfg.initial_simulations);
    for (i, s) in prior.iter().enumerate() {
        let y = sim_y(zone, s, i)?;
        sur.insert(&zone.normalize(&s.production), y)?;
    }

    let mut log = Vec::with_capacity(cfg.n_scenarios);
    let mut sims = 0usize;
    for iter in 1..=cfg.n_scenarios {
        let s = sample_scenario(zone, &mut rng);
        let u = zone.normalize(&s.production);
        let counter = match cfg.aru.counter_mode {
            CounterMode::WorkflowIteration => iter as u64,
            CounterMode::SimulationsPerformed => sims as u64,
        };
        let sigma_ru = residual_sigma(&cfg.aru, counter);
        let mut entry = LogEntry {
            iter,
            scenario: s.production.clone(),
            verdict: Verdict::Simulate,
            p_congestion: None,
            mu: None,
            sigma: None,
            sigma_ru,
            simulated: false,
            y_true: None,
        };
        let warm = sur.data.len() < cfg.initial_simulations;
        if let (false, Some(model)) = (warm, &sur.model) {
            let (mu, var) = model.predict(&u)?;
            let std = var.sqrt();
            let d = decide_raw(mu, std, sigma_ru, &dcfg);
            entry.verdict = d.verdict;
            entry.p_congestion = Some(d.p_congestion);
            entry.mu = Some(mu);
            entry.sigma = Some(std);
        }
        if entry.verdict == Verdict::Simulate {
            let y = sim_y(zone, &s, iter)?;
            sims += 1;
            entry.simulated = true;
            entry.y_true = Some(y);
            sur.insert(&u, y)?;
        }
        log.push(entry);
    }

    let failures = log
        .iter()
        .filter(|e| match e.y_true {
            Some(y) => y > cfg.threshold,
            None => e.verdict == Verdict::PredictCongestion,
        })
        .count();
    let audit = audit_log(&log, zone, cfg.threshold, exec)?;
    Ok(assemble(
        Method::Aru,
        log,
        failures,
        sims,
        prior.len(),
        audit,
        sur.model.map(|m| m.params().clone()),
    ))
}

pub(crate) fn assemble(
    method: Method,
    log: Vec<LogEntry>,
    failures: usize,
    sims: usize,
    prior_simulations: usize,
    audit: Audit,
    final_params: Option<KernelParams>,
) -> CertReport {
    let n = log.len();
    let (ci_lo, ci_hi) = wilson_interval(failures, n, 0.95);
    CertReport {
        method,
        n_scenarios: n,
        failures,
        p_failure_hat: failures as f64 / n as f64,
        ci_lo,
        ci_hi,
        sims_performed: sims,
        sim_fraction: sims as f64 / n as f64,
        prior_simulations,
        verdicts: VerdictCounts::tally(&log),
        kept_predictions: audit.kept,
        misclassified: audit.misclassified,
        misclassified_fraction: audit.fraction(),
        final_params,
        log,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Audit {
    pub kept: usize,
    pub misclassified: usize,
}

impl Audit {
    pub fn fraction(&self) -> f64 {
        if self.kept == 0 {
            0.0
        } else {
            self.misclassified as f64 / self.kept as f64
        }
    }
}

/// Re-simulates every kept prediction and counts class disagreements.
pub fn audit_log(log: &[LogEntry], zone: &Zone, threshold: f64, exec: Exec) -> Result<Audit> {
    let kept: Vec<&LogEntry> = log.iter().filter(|e| e.verdict.is_kept()).collect();
    let wrong = exec.map(&kept, |e| -> Result<bool> {
        let y = sim_y(
            zone,
            &Scenario {
                production: e.scenario.clone(),
            },
            e.iter,
        )?;
        Ok((y > threshold) != (e.verdict == Verdict::PredictCongestion))
    });
    let mut misclassified = 0;
    for w in wrong {
        misclassified += usize::from(w?);
    }
    Ok(Audit {
        kept: kept.len(),
        misclassified,
    })
}

/// Fraction of kept predictions whose congestion class disagrees with the
/// simulator (threshold 1); 0 when nothing was kept.
pub fn audit_misclassification(log: &[LogEntry], zone: &Zone) -> Result<f64> {
    audit_log(log, zone, 1.0, Exec::default()).map(|a| a.fraction())
}

/// Wilson score interval for a binomial proportion at confidence `level`.
pub fn wilson_interval(successes: usize, trials: usize, level: f64) -> (f64, f64) {
    assert!(trials >= 1 && successes <= trials, "need 0 <= successes <= trials, trials >= 1");
    let z = normal_quantile(0.5 + level / 2.0);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo.min(p), hi.max(p))
}
