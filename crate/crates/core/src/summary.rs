//! Posterior summaries of scalar traces.

use crate::engine::Chains;
use crate::error::{Result, SnmError};

/// One named scalar chain with the iteration index of each value.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub name: String,
    pub iterations: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q975: f64,
}

/// Linearly interpolated quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = prob * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean, sample sd and 2.5%/97.5% quantiles of the draws at iterations
/// `>= burn_in`.
pub fn summarize(trace: &Trace, burn_in: usize) -> Result<ParamSummary> {
    let mut kept: Vec<f64> = trace
        .iterations
        .iter()
        .zip(&trace.values)
        .filter(|(it, _)| **it >= burn_in)
        .map(|(_, v)| *v)
        .collect();
    if kept.is_empty() {
        return Err(SnmError::invalid(format!(
            "{}: no draws at or after burn-in {burn_in}",
            trace.name
        )));
    }
    let n = kept.len() as f64;
    let mean = kept.iter().sum::<f64>() / n;
    let sd = if kept.len() > 1 {
        (kept.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    kept.sort_by(f64::total_cmp);
    Ok(ParamSummary {
        name: trace.name.clone(),
        mean,
        sd,
        q025: quantile_sorted(&kept, 0.025),
        q975: quantile_sorted(&kept, 0.975),
    })
}

pub fn summarize_all(traces: &[Trace], burn_in: usize) -> Result<Vec<ParamSummary>> {
    traces.iter().map(|t| summarize(t, burn_in)).collect()
}

/// Summaries of every scalar parameter of a chain.
pub fn posterior_summary(chains: &Chains, burn_in: usize) -> Result<Vec<ParamSummary>> {
    summarize_all(&chains.traces(), burn_in)
}
