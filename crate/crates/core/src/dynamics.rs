//! Time-domain evolution of the intracavity field under scan protocols.
//!
//! The field is tracked in the frame rotating at half the pump frequency,
//!
//! ```text
//! tau da/dt = -(i tau delta_c + gamma) a + g beta conj(a) + sqrt(2 gamma_in) A_in exp(-i phi(t))
//! ```
//!
//! with `delta_c = omega_c - omega_p / 2` and `phi(t)` the seed phase, which
//! advances at the instantaneous seed offset `delta(t) = omega - omega_p / 2`.
//! A seed offset from half the pump shows up as a pair of counter-rotating
//! components (signal and idler) in `a(t)`, so a single equation covers both
//! the degenerate and nondegenerate regimes.
//!
//! Integration is classical fourth-order Runge-Kutta with a fixed step, in
//! units of cavity roundtrips.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{ModelError, Result};
use crate::model::{CavityParams, DecayRates, Drive};
use crate::spectra::normalize_reference;

mod beat;
mod feature;

pub use beat::{photocurrent_spectrum, Beat};
pub use feature::{measure_feature, FeatureKind, FeatureReport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScanKind {
    /// Fixed cavity detuning `delta_c` and seed offset `delta`, both rad/s.
    Hold { cavity_detuning: f64, seed_offset: f64 },
    /// Linear sweep of `delta_c` (rad/s) with the seed at half the pump.
    CavityLength { start: f64, end: f64 },
    /// Linear sweep of the seed offset `delta` (rad/s) with the cavity at
    /// `delta_c = -Omega`. A positive `quantization_hz` holds the offset on a
    /// grid of that spacing, like the frequency steps of a VCO-driven AOM.
    SeedFrequency { start: f64, end: f64, quantization_hz: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanProtocol {
    pub kind: ScanKind,
    /// Seconds.
    pub duration: f64,
}

impl ScanProtocol {
    pub fn hold(cavity_detuning: f64, seed_offset: f64, duration: f64) -> Self {
        Self { kind: ScanKind::Hold { cavity_detuning, seed_offset }, duration }
    }

    pub fn cavity_length(start: f64, end: f64, duration: f64) -> Self {
        Self { kind: ScanKind::CavityLength { start, end }, duration }
    }

    pub fn seed_frequency(start: f64, end: f64, quantization_hz: f64, duration: f64) -> Self {
        Self { kind: ScanKind::SeedFrequency { start, end, quantization_hz }, duration }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(ModelError::invalid("duration", format!("{} must be > 0", self.duration)));
        }
        let finite = |name: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(ModelError::invalid(name, "must be finite"))
            }
        };
        match self.kind {
            ScanKind::Hold { cavity_detuning, seed_offset } => {
                finite("cavity_detuning", cavity_detuning)?;
                finite("seed_offset", seed_offset)
            }
            ScanKind::CavityLength { start, end } => {
                finite("start", start)?;
                finite("end", end)
            }
            ScanKind::SeedFrequency { start, end, quantization_hz } => {
                finite("start", start)?;
                finite("end", end)?;
                if !(quantization_hz.is_finite() && quantization_hz >= 0.0) {
                    return Err(ModelError::invalid(
                        "quantization_hz",
                        format!("{quantization_hz} must be >= 0"),
                    ));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Step size as a fraction of the inverse of the fastest rate in the
    /// problem (`gamma (1 + r) + |tau delta_c| + |tau delta|`).
    pub step_fraction: f64,
    /// Explicit RK4 steps between output samples; overrides `step_fraction`.
    pub steps_per_sample: Option<usize>,
    /// Number of uniformly spaced output samples, including `t = 0`.
    pub samples: usize,
    /// Centered boxcar applied to the photocurrent, seconds. Zero disables it.
    pub boxcar: f64,
    /// Intracavity field at `t = 0` (half-pump frame); zero if absent.
    pub initial: Option<Complex64>,
    pub max_steps: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            step_fraction: 0.01,
            steps_per_sample: None,
            samples: 2001,
            boxcar: 0.0,
            initial: None,
            max_steps: 2_000_000_000,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_fraction.is_finite() && self.step_fraction > 0.0 && self.step_fraction <= 1.0) {
            return Err(ModelError::invalid(
                "step_fraction",
                format!("{} not in (0, 1]", self.step_fraction),
            ));
        }
        if self.steps_per_sample == Some(0) {
            return Err(ModelError::invalid("steps_per_sample", "must be >= 1"));
        }
        if self.samples < 2 {
            return Err(ModelError::invalid("samples", "must be >= 2"));
        }
        if !(self.boxcar.is_finite() && self.boxcar >= 0.0) {
            return Err(ModelError::invalid("boxcar", format!("{} must be >= 0", self.boxcar)));
        }
        if let Some(a) = self.initial {
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(ModelError::invalid("initial", "must be finite"));
            }
        }
        Ok(())
    }
}

/// Uniformly sampled trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTrace {
    /// Seconds.
    pub times: Vec<f64>,
    /// Intracavity field in the half-pump frame.
    pub field: Vec<Complex64>,
    /// Transmitted field `sqrt(2 gamma_c) a`.
    pub output: Vec<Complex64>,
    /// `|a_out|^2`.
    pub photocurrent: Vec<f64>,
    /// Boxcar-averaged photocurrent (a copy when no window is set).
    pub averaged: Vec<f64>,
    /// Scanned quantity at each sample, rad/s: `delta_c` for length scans,
    /// the unquantized seed offset for frequency scans, the seed offset for holds.
    pub scan_value: Vec<f64>,
    /// Pump-off resonant transmitted power used for normalization.
    pub reference: f64,
    pub protocol: ScanProtocol,
    pub steps_per_sample: usize,
    /// RK4 step, roundtrips.
    pub step: f64,
}

impl TimeTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn sample_interval(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    /// Photocurrent normalized to the pump-off resonant transmission.
    pub fn normalized(&self) -> Vec<f64> {
        self.photocurrent.iter().map(|p| p / self.reference).collect()
    }

    pub fn normalized_averaged(&self) -> Vec<f64> {
        self.averaged.iter().map(|p| p / self.reference).collect()
    }

    /// Samples with `t >= from`, keeping uniform spacing.
    pub fn tail(&self, from: f64) -> TimeTrace {
        let k = self.times.partition_point(|&t| t < from);
        TimeTrace {
            times: self.times[k..].to_vec(),
            field: self.field[k..].to_vec(),
            output: self.output[k..].to_vec(),
            photocurrent: self.photocurrent[k..].to_vec(),
            averaged: self.averaged[k..].to_vec(),
            scan_value: self.scan_value[k..].to_vec(),
            ..self.clone()
        }
    }
}

/// Piecewise description of the seed phase, in roundtrip units.
#[derive(Debug, Clone)]
enum SeedPhase {
    /// `phi(s) = phi0 + rate * s`.
    Linear { phi0: f64, rate: f64 },
    /// `phi(s) = phi0 + start * (s - s0) + slope * (s^2 - s0^2) / 2`.
    Chirp { phi0: f64, s0: f64, start: f64, slope: f64 },
    /// Piecewise-constant offset; each segment is `(s_begin, phase_at_begin, rate)`.
    Stepped { segments: Vec<(f64, f64, f64)> },
}

impl SeedPhase {
    fn at(&self, s: f64) -> f64 {
        match self {
            SeedPhase::Linear { phi0, rate } => phi0 + rate * s,
            SeedPhase::Chirp { phi0, s0, start, slope } => {
                let ds = s - s0;
                phi0 + ds * (start + 0.5 * slope * (s + s0))
            }
            SeedPhase::Stepped { segments } => {
                let k = segments.partition_point(|seg| seg.0 <= s).saturating_sub(1);
                let (s_begin, phase, rate) = segments[k];
                phase + rate * (s - s_begin)
            }
        }
    }

    /// Quantized linear ramp from `f0` to `f1` Hz over `span` roundtrips,
    /// with the phase equal to `phi0` at `anchor`.
    fn stepped(f0: f64, f1: f64, step_hz: f64, span: f64, tau: f64, phi0: f64, anchor: f64) -> Result<Self> {
        let level = |f: f64| (f / step_hz).round();
        let (n0, n1) = (level(f0), level(f1));
        let count = (n1 - n0).abs();
        if count > 1e7 {
            return Err(ModelError::invalid(
                "quantization_hz",
                format!("{count} frequency steps in one scan is too many"),
            ));
        }
        let dir = (n1 - n0).signum();
        let mut breaks = vec![(0.0, n0)];
        if dir != 0.0 {
            let mut n = n0;
            while n != n1 {
                let edge = (n + 0.5 * dir) * step_hz;
                let s = (edge - f0) / (f1 - f0) * span;
                n += dir;
                if s >= span {
                    break;
                }
                match breaks.last_mut() {
                    Some(last) if s <= last.0 => last.1 = n,
                    _ => breaks.push((s, n)),
                }
            }
        }
        let mut segments = Vec::with_capacity(breaks.len());
        let mut phase = 0.0;
        for (i, &(s, n)) in breaks.iter().enumerate() {
            if i > 0 {
                let (prev_s, _, prev_rate) = segments[i - 1];
                phase += prev_rate * (s - prev_s);
            }
            segments.push((s, phase, TAU * n * step_hz * tau));
        }
        let mut sched = SeedPhase::Stepped { segments };
        let shift = phi0 - sched.at(anchor);
        if let SeedPhase::Stepped { segments } = &mut sched {
            for seg in segments.iter_mut() {
                seg.1 += shift;
            }
        }
        Ok(sched)
    }
}

/// Right-hand side `tau da/dt` of the field equation as a function of time.
#[derive(Debug, Clone)]
pub struct FieldEquation {
    gamma: f64,
    gain: f64,
    drive_amp: f64,
    tau: f64,
    /// `tau delta_c` at `s = 0` and its change per roundtrip.
    theta0: f64,
    theta_rate: f64,
    seed: SeedPhase,
    /// Largest `|tau delta|` over the protocol.
    max_seed_rate: f64,
}

impl FieldEquation {
    pub fn new(protocol: &ScanProtocol, drive: &Drive, params: &CavityParams) -> Result<Self> {
        protocol.validate()?;
        let rates: DecayRates = params.rates();
        rates.require_positive()?;
        let r = drive.pump_ratio();
        if r >= 1.0 {
            return Err(ModelError::AboveThreshold(r));
        }
        let tau = params.tau();
        let span = protocol.duration / tau;
        let phi0 = drive.seed_phase();
        let (theta0, theta_rate, seed, max_seed_rate) = match protocol.kind {
            ScanKind::Hold { cavity_detuning, seed_offset } => (
                tau * cavity_detuning,
                0.0,
                SeedPhase::Linear { phi0, rate: tau * seed_offset },
                (tau * seed_offset).abs(),
            ),
            ScanKind::CavityLength { start, end } => {
                (tau * start, tau * (end - start) / span, SeedPhase::Linear { phi0, rate: 0.0 }, 0.0)
            }
            ScanKind::SeedFrequency { start, end, quantization_hz } => {
                // phase is pinned to phi0 where the unquantized offset crosses zero
                let anchor =
                    if start != end && start * end <= 0.0 { -start / (end - start) * span } else { 0.0 };
                let seed = if quantization_hz > 0.0 {
                    SeedPhase::stepped(start / TAU, end / TAU, quantization_hz, span, tau, phi0, anchor)?
                } else {
                    SeedPhase::Chirp {
                        phi0,
                        s0: anchor,
                        start: tau * start,
                        slope: tau * (end - start) / span,
                    }
                };
                let peak = start.abs().max(end.abs()) + TAU * quantization_hz;
                (-tau * drive.pump_offset(), 0.0, seed, tau * peak)
            }
        };
        Ok(Self {
            gamma: rates.total,
            gain: drive.parametric_gain(&rates),
            drive_amp: (2.0 * rates.input).sqrt() * drive.seed_amplitude(),
            tau,
            theta0,
            theta_rate,
            seed,
            max_seed_rate,
        })
    }

    /// `tau delta_c` at roundtrip time `s`.
    fn theta(&self, s: f64) -> f64 {
        self.theta0 + self.theta_rate * s
    }

    fn source(&self, s: f64) -> Complex64 {
        Complex64::from_polar(self.drive_amp, -self.seed.at(s))
    }

    /// Fastest rate in the problem, per roundtrip.
    pub fn stiffness(&self, span: f64) -> f64 {
        let theta_max = self.theta(0.0).abs().max(self.theta(span).abs());
        self.gamma + self.gain + theta_max + self.max_seed_rate
    }

    /// `tau da/dt` at field `a` and time `t` (seconds).
    pub fn drift(&self, a: Complex64, t: f64) -> Complex64 {
        let s = t / self.tau;
        rhs(a, self.theta(s), self.source(s), self.gamma, self.gain)
    }
}

#[inline]
fn rhs(a: Complex64, theta: f64, source: Complex64, gamma: f64, gain: f64) -> Complex64 {
    -Complex64::new(gamma, theta) * a + gain * a.conj() + source
}

/// Integrates the field equation over the protocol.
pub fn integrate(
    protocol: &ScanProtocol,
    drive: &Drive,
    params: &CavityParams,
    opts: &SolverOptions,
) -> Result<TimeTrace> {
    opts.validate()?;
    let eq = FieldEquation::new(protocol, drive, params)?;
    let tau = params.tau();
    let span = protocol.duration / tau;
    let intervals = opts.samples - 1;
    let per_sample = span / intervals as f64;

    let steps_per_sample = match opts.steps_per_sample {
        Some(m) => m,
        None => {
            let h_max = opts.step_fraction / eq.stiffness(span);
            let m = (per_sample / h_max).ceil();
            if !m.is_finite() || m > opts.max_steps as f64 {
                return Err(ModelError::StepUnderflow(format!("{m:e} steps per sample")));
            }
            m.max(1.0) as usize
        }
    };
    let total = steps_per_sample as u64 * intervals as u64;
    if total > opts.max_steps {
        return Err(ModelError::StepUnderflow(format!(
            "{total} steps exceeds the limit of {}",
            opts.max_steps
        )));
    }
    let h = per_sample / steps_per_sample as f64;
    if h.is_nan() || h <= 0.0 || h * (eq.gamma + eq.gain) < 1e-15 {
        return Err(ModelError::StepUnderflow(format!("step {h:e} roundtrips")));
    }

    let out_gain = (2.0 * params.rates().coupling).sqrt();
    let mut times = Vec::with_capacity(opts.samples);
    let mut field = Vec::with_capacity(opts.samples);
    let mut a = opts.initial.unwrap_or_default();
    times.push(0.0);
    field.push(a);

    let (gamma, gain) = (eq.gamma, eq.gain);
    let mut src_start = eq.source(0.0);
    for k in 0..intervals {
        for j in 0..steps_per_sample {
            let n = (k * steps_per_sample + j) as f64;
            let s = n * h;
            let s_mid = (n + 0.5) * h;
            let s_end = (n + 1.0) * h;
            let (th0, th_mid, th1) = (eq.theta(s), eq.theta(s_mid), eq.theta(s_end));
            let src_mid = eq.source(s_mid);
            let src_end = eq.source(s_end);

            let k1 = rhs(a, th0, src_start, gamma, gain);
            let k2 = rhs(a + 0.5 * h * k1, th_mid, src_mid, gamma, gain);
            let k3 = rhs(a + 0.5 * h * k2, th_mid, src_mid, gamma, gain);
            let k4 = rhs(a + h * k3, th1, src_end, gamma, gain);
            a += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            src_start = src_end;
        }
        times.push((k + 1) as f64 * per_sample * tau);
        field.push(a);
    }

    let output: Vec<Complex64> = field.iter().map(|a| out_gain * a).collect();
    let photocurrent: Vec<f64> = output.iter().map(|o| o.norm_sqr()).collect();
    let dt = per_sample * tau;
    let half = (0.5 * opts.boxcar / dt).round() as usize;
    let averaged = boxcar(&photocurrent, half);
    let scan_value = times.iter().map(|&t| scan_value_at(protocol, t)).collect();

    Ok(TimeTrace {
        times,
        field,
        output,
        photocurrent,
        averaged,
        scan_value,
        reference: normalize_reference(params, drive.seed_amplitude())?,
        protocol: *protocol,
        steps_per_sample,
        step: h,
    })
}

fn scan_value_at(protocol: &ScanProtocol, t: f64) -> f64 {
    let x = t / protocol.duration;
    match protocol.kind {
        ScanKind::Hold { seed_offset, .. } => seed_offset,
        ScanKind::CavityLength { start, end } | ScanKind::SeedFrequency { start, end, .. } => {
            start + (end - start) * x
        }
    }
}

/// Centered moving average over `2 * half + 1` samples, truncated at the ends.
fn boxcar(x: &[f64], half: usize) -> Vec<f64> {
    if half == 0 {
        return x.to_vec();
    }
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in x {
        acc += v;
        prefix.push(acc);
    }
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Cavity-length scan: the seed stays at half the pump while `delta_c` is swept.
pub fn simulate_length_scan(
    protocol: &ScanProtocol,
    drive: &Drive,
    params: &CavityParams,
    opts: &SolverOptions,
) -> Result<TimeTrace> {
    if !matches!(protocol.kind, ScanKind::CavityLength { .. }) {
        return Err(ModelError::invalid("protocol", "expected a cavity-length scan"));
    }
    integrate(protocol, drive, params, opts)
}

/// Seed-frequency scan with the pump and cavity fixed.
pub fn simulate_frequency_scan(
    protocol: &ScanProtocol,
    drive: &Drive,
    params: &CavityParams,
    opts: &SolverOptions,
) -> Result<TimeTrace> {
    if !matches!(protocol.kind, ScanKind::SeedFrequency { .. }) {
        return Err(ModelError::invalid("protocol", "expected a seed-frequency scan"));
    }
    integrate(protocol, drive, params, opts)
}

/// Slowest relaxation time of the field, seconds.
pub fn relaxation_time(drive: &Drive, params: &CavityParams) -> f64 {
    let g = params.rates().total;
    params.tau() / (g * (1.0 - drive.pump_ratio()))
}
