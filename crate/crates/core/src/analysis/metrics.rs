//! Comparison metrics between LME series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default day-window length in periods.
pub const DEFAULT_DAY_LEN: usize = 24;

/// Guard added to demand changes in [`historical_lme_series`], MWh.
pub const HISTORICAL_EPS: f64 = 0.5;

/// Window RMS of `static − dynamic`, `rms[node][day]`, before normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRms {
    pub day_len: usize,
    pub rms: Vec<Vec<f64>>,
}

impl WindowRms {
    pub fn mean(&self) -> f64 {
        mean(self.rms.iter().flatten().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmsDeviation {
    pub day_len: usize,
    /// Median of `|dynamic|` over every period and node.
    pub median: f64,
    /// `rms[node][day] / median`.
    pub per_node_per_day: Vec<Vec<f64>>,
    pub mean_normalized: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

fn check_shapes(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<usize> {
    let n = b.first().map_or(0, Vec::len);
    if a.len() != b.len() || a.iter().chain(b).any(|r| r.len() != n) {
        return Err(Error::Dimension(format!(
            "LME series shapes differ: {}x{} vs {}x{}",
            a.len(),
            a.first().map_or(0, Vec::len),
            b.len(),
            n
        )));
    }
    Ok(n)
}

/// Unnormalized day-window RMS deviation; `lme_*[t][node]`.
pub fn window_rms(lme_static: &[Vec<f64>], lme_dynamic: &[Vec<f64>], day_len: usize) -> Result<WindowRms> {
    let n = check_shapes(lme_static, lme_dynamic)?;
    let horizon = lme_dynamic.len();
    if day_len == 0 || horizon % day_len != 0 {
        return Err(Error::Dimension(format!("day length {day_len} does not divide the horizon {horizon}")));
    }
    let days = horizon / day_len;
    let rms = (0..n)
        .map(|i| {
            (0..days)
                .map(|d| {
                    let window = d * day_len..(d + 1) * day_len;
                    let ss: f64 = window.map(|t| (lme_static[t][i] - lme_dynamic[t][i]).powi(2)).sum();
                    (ss / day_len as f64).sqrt()
                })
                .collect()
        })
        .collect();
    Ok(WindowRms { day_len, rms })
}

/// Lower median: the `⌊(N−1)/2⌋`-th order statistic. `None` when empty.
pub fn lower_median(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(v[(v.len() - 1) / 2])
}

/// Day-window RMS deviation normalized by the median of `|dynamic|`.
///
/// Fails with [`Error::ZeroMedian`] when that median is zero; use
/// [`window_rms`] for the unnormalized figures in that case.
pub fn rms_deviation(lme_static: &[Vec<f64>], lme_dynamic: &[Vec<f64>], day_len: usize) -> Result<RmsDeviation> {
    let raw = window_rms(lme_static, lme_dynamic, day_len)?;
    let median = lower_median(lme_dynamic.iter().flatten().map(|v| v.abs())).unwrap_or(0.0);
    if !(median > 0.0) {
        return Err(Error::ZeroMedian);
    }
    let per_node_per_day: Vec<Vec<f64>> =
        raw.rms.iter().map(|row| row.iter().map(|r| r / median).collect()).collect();
    let mean_normalized = mean(per_node_per_day.iter().flatten().copied());
    Ok(RmsDeviation {
        day_len,
        median,
        per_node_per_day,
        mean_normalized,
    })
}

/// `ΔE_t / (Δd_t + ε)`, the empirical emissions rate from period-to-period
/// changes in emissions and demand.
pub fn historical_lme_series(delta_e: &[f64], delta_d: &[f64], eps: f64) -> Result<Vec<f64>> {
    if delta_e.len() != delta_d.len() {
        return Err(Error::Dimension(format!("{} emission changes vs {} demand changes", delta_e.len(), delta_d.len())));
    }
    if !(eps > 0.0) {
        return Err(Error::Dimension(format!("ε must be positive, got {eps}")));
    }
    Ok(delta_e.iter().zip(delta_d).map(|(e, d)| e / (d + eps)).collect())
}

/// `|est_t − truth_t| / Z` with `Z` the mean of `|truth|`.
pub fn normalized_abs_error(est: &[f64], truth: &[f64]) -> Result<Vec<f64>> {
    if est.len() != truth.len() {
        return Err(Error::Dimension(format!("{} estimates vs {} reference values", est.len(), truth.len())));
    }
    let z = mean(truth.iter().map(|v| v.abs()));
    if !(z > 0.0) {
        return Err(Error::ZeroNormalizer("reference series is all zero".into()));
    }
    Ok(est.iter().zip(truth).map(|(e, t)| (e - t).abs() / z).collect())
}

/// Trailing rolling mean with a window of `ceil(fraction · len)` samples.
/// The first entries average over the shorter prefix available.
pub fn rolling_mean(series: &[f64], fraction: f64) -> Result<Vec<f64>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Dimension(format!("window fraction must lie in (0, 1], got {fraction}")));
    }
    let w = ((fraction * series.len() as f64).ceil() as usize).max(1);
    let mut out = Vec::with_capacity(series.len());
    let mut sum = 0.0;
    for (t, v) in series.iter().enumerate() {
        sum += v;
        if t >= w {
            sum -= series[t - w];
        }
        out.push(sum / (t + 1).min(w) as f64);
    }
    Ok(out)
}

/// [`rolling_mean`] applied to each node's column of `lme[t][node]`.
pub fn smooth_columns(lme: &[Vec<f64>], fraction: f64) -> Result<Vec<Vec<f64>>> {
    let n = lme.first().map_or(0, Vec::len);
    let mut out = vec![vec![0.0; n]; lme.len()];
    for i in 0..n {
        let col: Vec<f64> = lme.iter().map(|r| r[i]).collect();
        for (t, v) in rolling_mean(&col, fraction)?.into_iter().enumerate() {
            out[t][i] = v;
        }
    }
    Ok(out)
}
