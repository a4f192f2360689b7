//! Figure data for the univariate and bivariate toy simulators.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::gp::{confidence_interval, fit, Dataset, FitConfig, GpModel, KernelParams};
use crate::grid::{toy_bivariate, toy_univariate};
use crate::report::fmt_sig6;
use crate::uq::{decide, AruSchedule, CounterMode, DecisionConfig, Verdict};

pub const GRID_POINTS: usize = 200;
pub const X_MAX: f64 = 1.2;
pub const SLOPE: f64 = 1.0;
pub const F_MAX: f64 = 0.99;

/// Training inputs shown for figures 3 to 6.
pub fn training_set(figure: u8) -> Option<&'static [f64]> {
    match figure {
        3 => Some(&[0.15, 0.90, 1.10]),
        4 => Some(&[0.90, 0.98, 1.03, 1.10]),
        5 | 6 => Some(&[0.2, 0.5, 0.8]),
        _ => None,
    }
}

/// GP fitted on the univariate toy at the given inputs.
pub fn fit_toy(xs: &[f64]) -> Result<GpModel> {
    let ys: Vec<f64> = xs.iter().map(|&x| toy_univariate(SLOPE, F_MAX, x)).collect();
    let rows: Vec<[f64; 1]> = xs.iter().map(|&x| [x]).collect();
    let data = Dataset::from_rows(1, &rows, &ys)?;
    let init = KernelParams::new(0.25, vec![0.5], 1e-8)?;
    fit(&data, &init, &FitConfig::default())
}

fn grid() -> impl Iterator<Item = f64> {
    (0..GRID_POINTS).map(|i| X_MAX * i as f64 / (GRID_POINTS - 1) as f64)
}

/// CSV body (header plus rows) for figure `figure` in 1..=6.
///
/// Figure 6 adds a `forced_region` column flagging grid points where the
/// residual term at its initial value (0.1) forces a simulation at `beta`.
pub fn figure_csv(figure: u8, beta: f64) -> Result<String> {
    let mut out = String::new();
    match figure {
        1 => {
            out.push_str("x,truth,prediction,ci_lo,ci_hi\n");
            for x in grid() {
                let _ = writeln!(out, "{},{},,,", fmt_sig6(x), fmt_sig6(toy_univariate(SLOPE, F_MAX, x)));
            }
        }
        2 => {
            out.push_str("x_0,x_1,truth\n");
            let n = 41;
            for i in 0..n {
                for j in 0..n {
                    let x0 = X_MAX * i as f64 / (n - 1) as f64;
                    let x1 = X_MAX * j as f64 / (n - 1) as f64;
                    let y = toy_bivariate([SLOPE, SLOPE], F_MAX, [x0, x1])?;
                    let _ = writeln!(out, "{},{},{}", fmt_sig6(x0), fmt_sig6(x1), fmt_sig6(y));
                }
            }
        }
        3..=6 => {
            let model = fit_toy(training_set(figure).expect("training set"))?;
            let cfg = DecisionConfig::new(beta, 1.0)?;
            let schedule = AruSchedule::new(0.1, 1.2, CounterMode::WorkflowIteration)?;
            out.push_str("x,truth,prediction,ci_lo,ci_hi");
            out.push_str(if figure == 6 { ",forced_region\n" } else { "\n" });
            for x in grid() {
                let post = model.posterior(&[x])?;
                let (lo, hi) = confidence_interval(&post, 0.05)?;
                let _ = write!(
                    out,
                    "{},{},{},{},{}",
                    fmt_sig6(x),
                    fmt_sig6(toy_univariate(SLOPE, F_MAX, x)),
                    fmt_sig6(post.mean),
                    fmt_sig6(lo),
                    fmt_sig6(hi)
                );
                if figure == 6 {
                    let forced = decide(&post, &schedule, 0, &cfg).verdict == Verdict::Simulate;
                    let _ = write!(out, ",{}", u8::from(forced));
                }
                out.push('\n');
            }
        }
        _ => return Err(Error::InvalidParameter(format!("unknown figure {figure}; expected 1-6"))),
    }
    Ok(out)
}
