use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::TimeTrace;
use crate::error::{ModelError, Result};

/// Dominant oscillation of a photocurrent record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beat {
    Tone {
        /// Hz, parabolically interpolated between DFT bins.
        frequency: f64,
        /// DFT bin spacing, Hz.
        resolution: f64,
        /// Peak amplitude relative to the mean photocurrent.
        relative_amplitude: f64,
    },
    /// Nothing above the numerical floor besides the mean.
    DcOnly,
}

impl Beat {
    pub fn frequency(&self) -> Option<f64> {
        match self {
            Beat::Tone { frequency, .. } => Some(*frequency),
            Beat::DcOnly => None,
        }
    }
}

const DC_FLOOR: f64 = 1e-9;

/// Finds the strongest nonzero frequency of `trace.photocurrent` with a
/// Hann-windowed DFT. Pass a settled record (see [`TimeTrace::tail`]).
pub fn photocurrent_spectrum(trace: &TimeTrace) -> Result<Beat> {
    let n = trace.photocurrent.len();
    if n < 8 {
        return Err(ModelError::invalid("trace", format!("{n} samples, need at least 8")));
    }
    let dt = trace.sample_interval();
    let mean = trace.photocurrent.iter().sum::<f64>() / n as f64;

    let window: Vec<f64> = (0..n).map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / n as f64).cos()).collect();
    let coherent_gain = window.iter().sum::<f64>();
    let mut buf: Vec<Complex64> =
        trace.photocurrent.iter().zip(&window).map(|(x, w)| Complex64::new((x - mean) * w, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let mags: Vec<f64> = buf[..n / 2 + 1].iter().map(|c| c.norm()).collect();
    // skip the DC bin and its window sidelobe
    let (peak, &peak_mag) =
        mags.iter().enumerate().skip(2).max_by(|a, b| a.1.total_cmp(b.1)).expect("at least one bin");
    let amplitude = 2.0 * peak_mag / coherent_gain;
    if amplitude <= DC_FLOOR * mean.abs() || amplitude == 0.0 {
        return Ok(Beat::DcOnly);
    }

    let mut offset = 0.0;
    if peak + 1 < mags.len() {
        let (l, c, r) = (mags[peak - 1].ln(), mags[peak].ln(), mags[peak + 1].ln());
        let denom = l - 2.0 * c + r;
        if denom.is_finite() && denom != 0.0 {
            offset = (0.5 * (l - r) / denom).clamp(-0.5, 0.5);
        }
    }
    let resolution = 1.0 / (n as f64 * dt);
    Ok(Beat::Tone {
        frequency: (peak as f64 + offset) * resolution,
        resolution,
        relative_amplitude: if mean != 0.0 { amplitude / mean.abs() } else { f64::INFINITY },
    })
}
