//! Rate fits on a written diagnostics file.

use std::path::Path;

use anyhow::{bail, Result};
use swarmfp_core::{fit_rate, RateFit, RateModel};

use crate::output::read_csv;

/// Fits `|column - offset|` against `t` over `window`.
pub fn fit_report(path: &Path, column: &str, window: (f64, f64), model: RateModel, offset: f64) -> Result<RateFit> {
    let table = read_csv(path)?;
    let t = table.column("t")?;
    let v = table.column(column)?;
    let series: Vec<(f64, f64)> = t.into_iter().zip(v).map(|(t, v)| (t, (v - offset).abs())).collect();
    if !series.iter().any(|(t, _)| *t >= window.0 && *t <= window.1) {
        bail!("window {}:{} contains no samples of {}", window.0, window.1, path.display());
    }
    Ok(fit_rate(&series, window, model)?)
}

pub fn render_fit(fit: &RateFit) -> String {
    format!(
        "model = {}\nwindow = {:?}:{:?}\nsamples = {}\nrate = {:?}\nintercept = {:?}\nresidual = {:?}\n",
        match fit.model {
            RateModel::Exponential => "exp",
            RateModel::Power => "power",
        },
        fit.window.0,
        fit.window.1,
        fit.samples,
        fit.rate,
        fit.intercept,
        fit.residual
    )
}

/// Parses `t0:t1`.
pub fn parse_window(s: &str) -> Result<(f64, f64)> {
    let Some((a, b)) = s.split_once(':') else { bail!("window must look like t0:t1, got `{s}`") };
    let (a, b): (f64, f64) = (a.trim().parse()?, b.trim().parse()?);
    if !(a < b) {
        bail!("window needs t0 < t1, got {a}:{b}");
    }
    Ok((a, b))
}
