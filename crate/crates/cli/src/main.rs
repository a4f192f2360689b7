use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gpcert::baselines::{run_baseline, BaselineConfig, BaselineMethod};
use gpcert::certification::{run_certification, WorkflowConfig};
use gpcert::figures::figure_csv;
use gpcert::grid::Zone;
use gpcert::report::{manifest_comment, report_json, trace_csv, CertReport, RunManifest};
use gpcert::uq::{AruSchedule, CounterMode};
use gpcert::{Error, Exec};

#[derive(Parser)]
#[command(name = "gpcert", version, about = "GP-surrogate certification of a grid curtailment controller")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the residual-uncertainty certification workflow.
    Certify(CertifyArgs),
    /// Run a fixed-budget baseline (LHS or active straddle design).
    Baseline(BaselineArgs),
    /// Emit CSV data for one of the univariate/bivariate illustrations.
    FigureData(FigureArgs),
}

#[derive(Args)]
struct Common {
    /// Zone configuration (JSON).
    #[arg(long)]
    zone: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    n_scenarios: usize,
    /// Output directory for report.json and trace.csv.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Counter {
    Iter,
    Sims,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    #[arg(long, default_value_t = 0.1)]
    sigma_ru0: f64,
    #[arg(long, default_value_t = 1.2)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = Counter::Sims)]
    counter_mode: Counter,
    /// Also run this many consecutive seeds and report the spread of the estimate.
    #[arg(long, default_value_t = 1)]
    repeats: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Lhs,
    Bayesian,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    method: Method,
    /// Prior simulation budget; defaults to 10 per RES unit.
    #[arg(long)]
    n_prior: Option<usize>,
    #[arg(long, default_value_t = 4096)]
    pool_size: usize,
}

#[derive(Args)]
struct FigureArgs {
    #[arg(long)]
    figure: u8,
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// Failure with the process exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_)
            | Error::InvalidZone(_)
            | Error::Disconnected(_)
            | Error::DimensionMismatch { .. }
            | Error::Io(_)
            | Error::Json(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn load_zone(path: &Path) -> Result<Zone, Failure> {
    Zone::load(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure {
        code: 1,
        message: format!("{}: {e}", dir.join(name).display()),
    };
    fs::create_dir_all(dir).map_err(io)?;
    fs::write(dir.join(name), contents).map_err(io)
}

fn summary(r: &CertReport) -> String {
    format!(
        "p_failure {:.4} [{:.4}, {:.4}]  simulations {} ({:.1}%)  misclassified {} of {} kept ({:.2}%)",
        r.p_failure_hat,
        r.ci_lo,
        r.ci_hi,
        r.sims_performed,
        100.0 * r.sim_fraction,
        r.misclassified,
        r.kept_predictions,
        100.0 * r.misclassified_fraction
    )
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

fn certify(a: CertifyArgs) -> Result<(), Failure> {
    let zone = load_zone(&a.common.zone)?;
    let counter_mode = match a.counter_mode {
        Counter::Iter => CounterMode::WorkflowIteration,
        Counter::Sims => CounterMode::SimulationsPerformed,
    };
    let cfg = WorkflowConfig {
        n_scenarios: a.common.n_scenarios,
        beta: a.beta,
        aru: AruSchedule::new(a.sigma_ru0, a.alpha, counter_mode)?,
        seed: a.common.seed,
        ..WorkflowConfig::default()
    };
    cfg.validate()?;
    if a.repeats == 0 {
        return Err(Failure::config("--repeats must be >= 1"));
    }

    let mut manifest = RunManifest::new("certify", cfg.seed);
    manifest.zone = Some(a.common.zone.display().to_string());
    manifest.method = Some("aru".into());
    manifest.n_scenarios = Some(cfg.n_scenarios);
    manifest.beta = Some(cfg.beta);
    manifest.sigma_ru0 = Some(a.sigma_ru0);
    manifest.alpha = Some(a.alpha);
    manifest.counter_mode = Some(counter_mode);

    let report = run_certification(&zone, &cfg)?;
    let mut json = report_json(&report, &manifest);
    if a.repeats > 1 {
        let mut p = vec![report.p_failure_hat];
        let mut sims = vec![report.sim_fraction];
        let mut mis = vec![report.misclassified_fraction];
        for k in 1..a.repeats {
            let r = run_certification(
                &zone,
                &WorkflowConfig {
                    seed: cfg.seed.wrapping_add(k),
                    ..cfg.clone()
                },
            )?;
            p.push(r.p_failure_hat);
            sims.push(r.sim_fraction);
            mis.push(r.misclassified_fraction);
        }
        let (pm, ps) = mean_std(&p);
        let mut doc: serde_json::Value = serde_json::from_str(&json).expect("report is valid JSON");
        doc["repeats"] = serde_json::json!({
            "seeds": a.repeats,
            "p_failure_mean": pm,
            "p_failure_std": ps,
            "sim_fraction_mean": mean_std(&sims).0,
            "misclassified_fraction_mean": mean_std(&mis).0,
        });
        json = serde_json::to_string_pretty(&doc).expect("serializable") + "\n";
        println!("repeats: p_failure {pm:.4} +/- {ps:.4} over {} seeds", a.repeats);
    }
    write(&a.common.out, "report.json", &json)?;
    write(&a.common.out, "trace.csv", &trace_csv(&report, &manifest))?;
    println!("{}", summary(&report));
    Ok(())
}

fn baseline(a: BaselineArgs) -> Result<(), Failure> {
    let zone = load_zone(&a.common.zone)?;
    let method = match a.method {
        Method::Lhs => BaselineMethod::Lhs,
        Method::Bayesian => BaselineMethod::BayesianActive,
    };
    let mut cfg = BaselineConfig::for_zone(&zone, method, a.common.seed);
    if let Some(n) = a.n_prior {
        cfg.n_prior = n;
    }
    cfg.pool_size = a.pool_size;
    if cfg.n_prior == 0 || cfg.pool_size == 0 || a.common.n_scenarios == 0 {
        return Err(Failure::config("--n-prior, --pool-size and --n-scenarios must be >= 1"));
    }

    let mut manifest = RunManifest::new("baseline", cfg.seed);
    manifest.zone = Some(a.common.zone.display().to_string());
    manifest.method = Some(
        match a.method {
            Method::Lhs => "lhs",
            Method::Bayesian => "bayesian",
        }
        .into(),
    );
    manifest.n_scenarios = Some(a.common.n_scenarios);
    manifest.n_prior = Some(cfg.n_prior);
    if method == BaselineMethod::BayesianActive {
        manifest.pool_size = Some(cfg.pool_size);
    }

    let report = run_baseline(&zone, &cfg, a.common.n_scenarios, Exec::default())?;
    write(&a.common.out, "report.json", &report_json(&report, &manifest))?;
    write(&a.common.out, "trace.csv", &trace_csv(&report, &manifest))?;
    println!("{}", summary(&report));
    Ok(())
}

fn figure_data(a: FigureArgs) -> Result<(), Failure> {
    if !(1..=6).contains(&a.figure) {
        return Err(Failure::config(format!("unknown figure {}; expected 1-6", a.figure)));
    }
    let body = figure_csv(a.figure, a.beta)?;
    let mut manifest = RunManifest::new("figure-data", 0);
    manifest.figure = Some(a.figure);
    manifest.beta = Some(a.beta);
    let name = format!("figure_{}.csv", a.figure);
    write(&a.out, &name, &(manifest_comment(&manifest) + &body))?;
    println!("wrote {}", a.out.join(name).display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("GPCERT_THREADS").ok().and_then(|v| v.parse().ok()) {
        gpcert::exec::init_thread_pool(n);
    }
    let result = match cli.command {
        Command::Certify(a) => certify(a),
        Command::Baseline(a) => baseline(a),
        Command::FigureData(a) => figure_data(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
