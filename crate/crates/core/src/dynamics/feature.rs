use std::f64::consts::TAU;

use super::{ScanKind, TimeTrace};
use crate::error::{ModelError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Dip,
    Peak,
}

/// Narrow feature of a seed-frequency scan around zero seed offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureReport {
    pub kind: FeatureKind,
    /// Center of the half-depth interval, Hz of nominal seed offset.
    pub center_hz: f64,
    /// Full width at half depth, Hz of nominal seed offset.
    pub width_hz: f64,
    /// Normalized averaged photocurrent at the extremum.
    pub extremum: f64,
    /// Mean normalized level over the outer half of the scan.
    pub background: f64,
    /// `(max - min) / mean` over the central 80% of the half-depth interval.
    pub flatness: f64,
}

/// Relative contrast below which no feature is reported.
const MIN_CONTRAST: f64 = 1e-3;

/// Locates the feature containing the zero crossing of the nominal seed
/// offset in the averaged, normalized photocurrent. `Ok(None)` when the
/// trace is flat there.
pub fn measure_feature(trace: &TimeTrace) -> Result<Option<FeatureReport>> {
    if !matches!(trace.protocol.kind, ScanKind::SeedFrequency { .. }) {
        return Err(ModelError::invalid("trace", "feature analysis needs a seed-frequency scan"));
    }
    let y = trace.normalized_averaged();
    let f: Vec<f64> = trace.scan_value.iter().map(|d| d / TAU).collect();
    let n = y.len();

    let reach = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let outer: Vec<f64> = (0..n).filter(|&i| f[i].abs() >= 0.5 * reach).map(|i| y[i]).collect();
    let background = if outer.is_empty() {
        y.iter().sum::<f64>() / n as f64
    } else {
        outer.iter().sum::<f64>() / outer.len() as f64
    };

    let anchor = (0..n).min_by(|&a, &b| f[a].abs().total_cmp(&f[b].abs())).expect("non-empty trace");
    let contrast = y[anchor] - background;
    if contrast.abs() <= MIN_CONTRAST * background.abs() {
        return Ok(None);
    }
    let (kind, sign) = if contrast < 0.0 { (FeatureKind::Dip, -1.0) } else { (FeatureKind::Peak, 1.0) };

    let (lo, hi) = region(&y, anchor, |v| (v - background) * sign > 0.0);
    let ext = (lo..=hi).max_by(|&a, &b| (y[a] * sign).total_cmp(&(y[b] * sign))).expect("non-empty region");
    let extremum = y[ext];
    let half = 0.5 * (extremum + background);
    let (lo, hi) = region(&y, ext, |v| (v - half) * sign > 0.0);

    let edge = |inside: usize, outside: Option<usize>| -> f64 {
        match outside {
            Some(o) => {
                let t = (half - y[inside]) / (y[o] - y[inside]);
                f[inside] + t * (f[o] - f[inside])
            }
            None => f[inside],
        }
    };
    let f_lo = edge(lo, lo.checked_sub(1));
    let f_hi = edge(hi, (hi + 1 < n).then_some(hi + 1));
    let (left, right) = if f_lo <= f_hi { (f_lo, f_hi) } else { (f_hi, f_lo) };
    let width_hz = right - left;
    let center_hz = 0.5 * (left + right);

    let margin = 0.1 * width_hz;
    let core: Vec<f64> =
        (lo..=hi).filter(|&i| f[i] >= left + margin && f[i] <= right - margin).map(|i| y[i]).collect();
    let flatness = if core.is_empty() {
        f64::NAN
    } else {
        let max = core.iter().cloned().fold(f64::MIN, f64::max);
        let min = core.iter().cloned().fold(f64::MAX, f64::min);
        (max - min) / (core.iter().sum::<f64>() / core.len() as f64)
    };

    Ok(Some(FeatureReport { kind, center_hz, width_hz, extremum, background, flatness }))
}

/// Largest contiguous index range around `at` whose samples satisfy `keep`.
fn region(y: &[f64], at: usize, keep: impl Fn(f64) -> bool) -> (usize, usize) {
    let mut lo = at;
    while lo > 0 && keep(y[lo - 1]) {
        lo -= 1;
    }
    let mut hi = at;
    while hi + 1 < y.len() && keep(y[hi + 1]) {
        hi += 1;
    }
    (lo, hi)
}
