//! Certification reports and their JSON / CSV serializations.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::gp::KernelParams;
use crate::uq::{CounterMode, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Aru,
    Lhs,
    Bayesian,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Aru => "aru",
            Method::Lhs => "lhs",
            Method::Bayesian => "bayesian",
        }
    }
}

/// One processed scenario. Moments are absent for unconditional warm-start
/// simulations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub iter: usize,
    pub scenario: Vec<f64>,
    pub verdict: Verdict,
    pub p_congestion: Option<f64>,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub sigma_ru: f64,
    pub simulated: bool,
    pub y_true: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub predict_safe: usize,
    pub predict_congestion: usize,
    pub simulate: usize,
}

impl VerdictCounts {
    pub fn tally<'a>(log: impl IntoIterator<Item = &'a LogEntry>) -> Self {
        let mut c = VerdictCounts::default();
        for e in log {
            match e.verdict {
                Verdict::PredictSafe => c.predict_safe += 1,
                Verdict::PredictCongestion => c.predict_congestion += 1,
                Verdict::Simulate => c.simulate += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.predict_safe + self.predict_congestion + self.simulate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub method: Method,
    pub n_scenarios: usize,
    pub failures: usize,
    pub p_failure_hat: f64,
    /// 95% Wilson interval on the failure probability.
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Simulations spent on the scenario stream (or the prior design for baselines).
    pub sims_performed: usize,
    pub sim_fraction: f64,
    /// Simulations run before the stream, outside `sims_performed`.
    pub prior_simulations: usize,
    pub verdicts: VerdictCounts,
    pub kept_predictions: usize,
    pub misclassified: usize,
    pub misclassified_fraction: f64,
    pub final_params: Option<KernelParams>,
    #[serde(skip)]
    pub log: Vec<LogEntry>,
}

/// Provenance embedded in every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub zone: Option<String>,
    pub method: Option<String>,
    pub seed: u64,
    pub n_scenarios: Option<usize>,
    pub beta: Option<f64>,
    pub sigma_ru0: Option<f64>,
    pub alpha: Option<f64>,
    pub counter_mode: Option<CounterMode>,
    pub n_prior: Option<usize>,
    pub pool_size: Option<usize>,
    pub figure: Option<u8>,
    pub tool_version: String,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` when set.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: u64) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            zone: None,
            method: None,
            seed,
            n_scenarios: None,
            beta: None,
            sigma_ru0: None,
            alpha: None,
            counter_mode: None,
            n_prior: None,
            pool_size: None,
            figure: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: build_timestamp(),
        }
    }
}

fn build_timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.trim().parse().ok()) {
        return t;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[derive(Serialize)]
struct ReportFile<'a> {
    manifest: &'a RunManifest,
    report: &'a CertReport,
}

/// `report.json` contents: the manifest followed by the summary.
pub fn report_json(report: &CertReport, manifest: &RunManifest) -> String {
    let mut s = serde_json::to_string_pretty(&ReportFile { manifest, report }).expect("serializable report");
    s.push('\n');
    s
}

/// Six significant digits, fixed notation for moderate magnitudes.
pub fn fmt_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        format!("{v:.5e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_sig6).unwrap_or_default()
}

/// Manifest comment line shared by all CSV outputs.
pub fn manifest_comment(manifest: &RunManifest) -> String {
    format!(
        "# manifest: {}\n",
        serde_json::to_string(manifest).expect("serializable manifest")
    )
}

/// `trace.csv`: one row per scenario, preceded by a manifest comment line.
pub fn trace_csv(report: &CertReport, manifest: &RunManifest) -> String {
    let d = report.log.first().map_or(0, |e| e.scenario.len());
    let mut out = manifest_comment(manifest);
    out.push_str("iter");
    for j in 0..d {
        let _ = write!(out, ",x_{j}");
    }
    out.push_str(",verdict,p_congestion,mu,sigma,sigma_ru,simulated,y_true\n");
    for e in &report.log {
        let _ = write!(out, "{}", e.iter);
        for x in &e.scenario {
            let _ = write!(out, ",{}", fmt_sig6(*x));
        }
        let _ = writeln!(
            out,
            ",{},{},{},{},{},{},{}",
            e.verdict.as_str(),
            opt(e.p_congestion),
            opt(e.mu),
            opt(e.sigma),
            fmt_sig6(e.sigma_ru),
            u8::from(e.simulated),
            opt(e.y_true)
        );
    }
    out
}
