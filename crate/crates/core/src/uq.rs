//! Adaptive residual uncertainty and the keep/simulate decision rule.
//!
//! The GP posterior standard deviation is inflated by a residual term that
//! decays geometrically with workflow progress. A prediction replaces the
//! simulator only when the inflated distribution puts less than `beta` mass
//! on the wrong side of the congestion threshold.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::Posterior;
use crate::stats::{erf_inv, erfc};

/// What the residual-uncertainty counter `n` tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CounterMode {
    /// Scenarios processed so far (1-based iteration index).
    WorkflowIteration,
    /// Stream simulations run so far.
    SimulationsPerformed,
}

/// `sigma_ru(n) = sigma0 / alpha^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AruSchedule {
    pub sigma0: f64,
    pub alpha: f64,
    pub counter_mode: CounterMode,
}

impl AruSchedule {
    pub fn new(sigma0: f64, alpha: f64, counter_mode: CounterMode) -> Result<Self> {
        let s = AruSchedule {
            sigma0,
            alpha,
            counter_mode,
        };
        s.validate()?;
        Ok(s)
    }

    /// No residual term: the plain GP decision rule.
    pub fn vanilla() -> Self {
        AruSchedule {
            sigma0: 0.0,
            alpha: 2.0,
            counter_mode: CounterMode::WorkflowIteration,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0 >= 0.0 && self.sigma0.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma0 must be >= 0, got {}", self.sigma0)));
        }
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be > 1, got {}", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionConfig {
    pub beta: f64,
    pub threshold: f64,
}

impl DecisionConfig {
    pub fn new(beta: f64, threshold: f64) -> Result<Self> {
        let c = DecisionConfig { beta, threshold };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 0.5) {
            return Err(Error::InvalidParameter(format!("beta must lie in (0, 0.5), got {}", self.beta)));
        }
        if !self.threshold.is_finite() {
            return Err(Error::InvalidParameter("threshold must be finite".into()));
        }
        Ok(())
    }
}

impl Default for DecisionConfig {
    fn default() -> Self {
        DecisionConfig {
            beta: 0.01,
            threshold: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    PredictSafe,
    PredictCongestion,
    Simulate,
}

impl Verdict {
    pub fn is_kept(self) -> bool {
        self != Verdict::Simulate
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::PredictSafe => "predict_safe",
            Verdict::PredictCongestion => "predict_congestion",
            Verdict::Simulate => "simulate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub verdict: Verdict,
    pub p_congestion: f64,
    pub sigma_total: f64,
}

pub fn residual_sigma(schedule: &AruSchedule, n: u64) -> f64 {
    if schedule.sigma0 == 0.0 {
        return 0.0;
    }
    // powi keeps s(n+1) = s(n) / alpha to within one rounding for moderate n.
    match i32::try_from(n) {
        Ok(k) => schedule.sigma0 / schedule.alpha.powi(k),
        Err(_) => (schedule.sigma0.ln() - n as f64 * schedule.alpha.ln()).exp(),
    }
}

/// Probability that a draw from `N(mu, sigma_total^2)` exceeds `threshold`.
pub fn congestion_probability(mu: f64, sigma_total: f64, threshold: f64) -> f64 {
    if sigma_total == 0.0 {
        return if mu < threshold {
            0.0
        } else if mu > threshold {
            1.0
        } else {
            0.5
        };
    }
    0.5 * erfc((threshold - mu) / (SQRT_2 * sigma_total))
}

/// Standardized margin `sqrt(2) erf^-1(1 - 2 beta)` a prediction must clear.
pub fn confidence_margin(beta: f64) -> f64 {
    SQRT_2 * erf_inv(1.0 - 2.0 * beta)
}

pub fn decide(post: &Posterior, schedule: &AruSchedule, n: u64, cfg: &DecisionConfig) -> Decision {
    decide_raw(post.mean, post.std, residual_sigma(schedule, n), cfg)
}

/// [`decide`] on raw moments; `sigma_ru` is the residual term already evaluated.
pub fn decide_raw(mean: f64, std: f64, sigma_ru: f64, cfg: &DecisionConfig) -> Decision {
    let sigma_total = std + sigma_ru;
    let p = congestion_probability(mean, sigma_total, cfg.threshold);
    let verdict = if p < cfg.beta {
        Verdict::PredictSafe
    } else if p > 1.0 - cfg.beta {
        Verdict::PredictCongestion
    } else {
        Verdict::Simulate
    };
    Decision {
        verdict,
        p_congestion: p,
        sigma_total,
    }
}

/// Half-width around the threshold inside which a zero-variance posterior is
/// still forced to simulate.
pub fn no_confidence_halfwidth(schedule: &AruSchedule, n: u64, beta: f64) -> f64 {
    confidence_margin(beta) * residual_sigma(schedule, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(mean: f64, std: f64) -> Posterior {
        Posterior {
            mean,
            std,
            weights: vec![],
            prior_var: 1.0,
            var_reduction: 1.0 - std * std,
        }
    }

    fn sched(sigma0: f64, alpha: f64) -> AruSchedule {
        AruSchedule::new(sigma0, alpha, CounterMode::WorkflowIteration).unwrap()
    }

    #[test]
    fn residual_values() {
        let s = sched(0.1, 1.2);
        assert_eq!(residual_sigma(&s, 0), 0.1);
        assert!((residual_sigma(&s, 1) - 0.083_333_333_333_333_33).abs() < 1e-15);
        for n in [0, 5, 1000] {
            assert_eq!(residual_sigma(&sched(0.0, 1.2), n), 0.0);
        }
    }

    #[test]
    fn schedule_validation() {
        assert!(AruSchedule::new(-0.1, 1.2, CounterMode::WorkflowIteration).is_err());
        assert!(AruSchedule::new(0.1, 1.0, CounterMode::WorkflowIteration).is_err());
        assert!(DecisionConfig::new(0.5, 1.0).is_err());
        assert!(DecisionConfig::new(0.0, 1.0).is_err());
    }

    #[test]
    fn probability_examples() {
        assert_eq!(congestion_probability(1.0, 0.2, 1.0), 0.5);
        // Phi(-2) from normal tables.
        assert!((congestion_probability(0.8, 0.1, 1.0) - 0.022_750_131_948_179).abs() < 1e-12);
        assert_eq!(congestion_probability(0.5, 0.0, 1.0), 0.0);
        assert_eq!(congestion_probability(1.5, 0.0, 1.0), 1.0);
        assert_eq!(congestion_probability(1.0, 0.0, 1.0), 0.5);
    }

    #[test]
    fn decision_examples() {
        let cfg = DecisionConfig::new(0.01, 1.0).unwrap();
        // |0.8| / 0.15 = 5.33 > 2.326
        let d = decide_raw(0.2, 0.05, 0.1, &cfg);
        assert_eq!(d.verdict, Verdict::PredictSafe);
        assert!((d.sigma_total - 0.15).abs() < 1e-15);
        for s in [0.0, 1e-6, 0.3, 10.0] {
            assert_eq!(decide_raw(1.0, s, 0.0, &cfg).verdict, Verdict::Simulate);
        }
        let d = decide(&post(1.05, 0.001), &sched(0.0, 1.2), 0, &cfg);
        assert_eq!(d.verdict, Verdict::PredictCongestion);
    }

    #[test]
    fn boundary_goes_to_simulate() {
        // Choose sigma so that p == beta as closely as floating point allows,
        // then check the rule never keeps a prediction with p == beta.
        let cfg = DecisionConfig::new(0.25, 1.0).unwrap();
        let d = decide_raw(1.0, 0.0, 0.0, &cfg);
        assert_eq!(d.verdict, Verdict::Simulate);
        let exact = Decision {
            verdict: Verdict::Simulate,
            p_congestion: 0.25,
            sigma_total: 1.0,
        };
        assert!(!(exact.p_congestion < cfg.beta) && !(exact.p_congestion > 1.0 - cfg.beta));
    }

    #[test]
    fn halfwidth_examples() {
        assert_eq!(no_confidence_halfwidth(&sched(0.0, 1.2), 3, 0.01), 0.0);
        let h0 = no_confidence_halfwidth(&sched(0.1, 1.2), 0, 0.01);
        assert!((h0 - 0.232_634_787_404_084).abs() < 1e-12);
        let h1 = no_confidence_halfwidth(&sched(0.1, 1.2), 1, 0.01);
        assert!(h1 < h0);
    }

    #[test]
    fn zero_std_inside_halfwidth_simulates() {
        let s = sched(0.1, 1.2);
        let cfg = DecisionConfig::default();
        for n in [0u64, 3, 10] {
            let h = no_confidence_halfwidth(&s, n, cfg.beta);
            let inside = decide(&post(1.0 - 0.99 * h, 0.0), &s, n, &cfg);
            assert_eq!(inside.verdict, Verdict::Simulate);
            let outside = decide(&post(1.0 - 1.01 * h, 0.0), &s, n, &cfg);
            assert_eq!(outside.verdict, Verdict::PredictSafe);
        }
    }
}
