//! Cavity and drive parameters, decay-rate bookkeeping and calibration helpers.
//!
//! Rates are dimensionless per-roundtrip quantities: a mirror of power
//! transmissivity `T` contributes an amplitude decay rate `T/2`, and the
//! physical (rad/s) linewidth follows by dividing by the roundtrip time.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{ModelError, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Back (input) mirror transmissivity at the subharmonic: 99.8% reflector.
pub const DEFAULT_T_HR: f64 = 0.002;
/// Output coupler transmissivity at the subharmonic.
pub const DEFAULT_T_C: f64 = 0.033;
/// Internal roundtrip loss, `0.0424 - 0.033 - 0.002`.
pub const DEFAULT_A_LOSS: f64 = 0.0074;
/// Mirror separation, m.
pub const DEFAULT_CAVITY_LENGTH: f64 = 0.063;
/// Nonlinear crystal length, m.
pub const DEFAULT_CRYSTAL_LENGTH: f64 = 0.012;
/// Refractive index of KTP near 1064 nm.
pub const DEFAULT_CRYSTAL_INDEX: f64 = 1.83;
/// Measured oscillation threshold, W.
pub const DEFAULT_THRESHOLD_POWER: f64 = 0.035;
/// Measured finesse with the crystal in place.
pub const DEFAULT_FINESSE: f64 = 148.0;

/// Power transmissivities, internal loss and roundtrip time of a standing-wave
/// cavity with two coupling ports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    t_hr: f64,
    t_c: f64,
    a_loss: f64,
    tau: f64,
}

impl CavityParams {
    pub fn new(t_hr: f64, t_c: f64, a_loss: f64, tau: f64) -> Result<Self> {
        for (name, v) in [("t_hr", t_hr), ("t_c", t_c), ("a_loss", a_loss)] {
            if !(v.is_finite() && (0.0..1.0).contains(&v)) {
                return Err(ModelError::invalid(name, format!("{v} not in [0, 1)")));
            }
        }
        let total = t_hr + t_c + a_loss;
        if total >= 1.0 {
            return Err(ModelError::invalid(
                "t_hr + t_c + a_loss",
                format!("total loss {total} must be < 1"),
            ));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(ModelError::invalid("tau", format!("{tau} must be > 0")));
        }
        Ok(Self { t_hr, t_c, a_loss, tau })
    }

    /// Builds the parameters with `tau` derived from the cavity geometry.
    pub fn from_geometry(
        t_hr: f64,
        t_c: f64,
        a_loss: f64,
        cavity_length: f64,
        crystal_length: f64,
        crystal_index: f64,
    ) -> Result<Self> {
        let tau = roundtrip_time(cavity_length, crystal_length, crystal_index)?;
        Self::new(t_hr, t_c, a_loss, tau)
    }

    /// Same mirrors and losses, different roundtrip time. `tau = 1` gives the
    /// dimensionless form where detunings are expressed as `tau * delta`.
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::new(self.t_hr, self.t_c, self.a_loss, tau)
    }

    pub fn t_hr(&self) -> f64 {
        self.t_hr
    }

    pub fn t_c(&self) -> f64 {
        self.t_c
    }

    pub fn a_loss(&self) -> f64 {
        self.a_loss
    }

    /// Roundtrip time in seconds.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn rates(&self) -> DecayRates {
        derive_rates(self)
    }

    /// Half width at half maximum of the empty cavity, rad/s.
    pub fn linewidth(&self) -> f64 {
        self.rates().total / self.tau
    }
}

impl Default for CavityParams {
    fn default() -> Self {
        Self::from_geometry(
            DEFAULT_T_HR,
            DEFAULT_T_C,
            DEFAULT_A_LOSS,
            DEFAULT_CAVITY_LENGTH,
            DEFAULT_CRYSTAL_LENGTH,
            DEFAULT_CRYSTAL_INDEX,
        )
        .expect("default cavity parameters are valid")
    }
}

/// Per-roundtrip amplitude decay rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRates {
    /// Back mirror, through which seed and pump enter.
    pub input: f64,
    /// Output coupler.
    pub coupling: f64,
    /// Internal losses.
    pub loss: f64,
    pub total: f64,
}

impl DecayRates {
    pub(crate) fn require_positive(&self) -> Result<()> {
        if self.total > 0.0 {
            Ok(())
        } else {
            Err(ModelError::invalid("gamma", "total decay rate must be > 0"))
        }
    }
}

pub fn derive_rates(params: &CavityParams) -> DecayRates {
    let input = params.t_hr / 2.0;
    let coupling = params.t_c / 2.0;
    let loss = params.a_loss / 2.0;
    DecayRates { input, coupling, loss, total: input + coupling + loss }
}

fn require_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ModelError::invalid(name, format!("{v} must be > 0")))
    }
}

/// Pump amplitude at which parametric gain equals the total loss.
pub fn threshold_pump(gamma: f64, coupling: f64) -> Result<f64> {
    require_positive("gamma", gamma)?;
    require_positive("g", coupling)?;
    Ok(gamma / coupling)
}

/// Nonlinear coupling implied by a measured threshold amplitude.
pub fn g_from_threshold(gamma: f64, threshold: f64) -> Result<f64> {
    require_positive("gamma", gamma)?;
    require_positive("beta_th", threshold)?;
    Ok(gamma / threshold)
}

/// Total roundtrip power loss of a high-finesse cavity, `2 pi / F`.
pub fn finesse_to_loss(finesse: f64) -> Result<f64> {
    if !(finesse.is_finite() && finesse > 1.0) {
        return Err(ModelError::invalid("finesse", format!("{finesse} must be > 1")));
    }
    Ok(TAU / finesse)
}

/// Inverse of [`finesse_to_loss`].
pub fn loss_to_finesse(loss: f64) -> Result<f64> {
    require_positive("loss", loss)?;
    Ok(TAU / loss)
}

/// Roundtrip time of a linear cavity of mirror separation `cavity_length`
/// containing a crystal of length `crystal_length` and index `crystal_index`.
pub fn roundtrip_time(cavity_length: f64, crystal_length: f64, crystal_index: f64) -> Result<f64> {
    for (name, v) in [("cavity_length", cavity_length), ("crystal_length", crystal_length)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(ModelError::invalid(name, format!("{v} must be >= 0")));
        }
    }
    if !(crystal_index.is_finite() && crystal_index >= 1.0) {
        return Err(ModelError::invalid("crystal_index", format!("{crystal_index} must be >= 1")));
    }
    let optical = cavity_length + (crystal_index - 1.0) * crystal_length;
    Ok(2.0 * optical / SPEED_OF_LIGHT)
}

/// Pump ratio `beta / beta_th` for a pump power, using `beta ~ sqrt(P)`.
pub fn pump_ratio_from_power(power: f64, threshold_power: f64) -> Result<f64> {
    if !(power.is_finite() && power >= 0.0) {
        return Err(ModelError::invalid("pump_power", format!("{power} must be >= 0")));
    }
    require_positive("threshold_power", threshold_power)?;
    Ok((power / threshold_power).sqrt())
}

/// Pump and seed configuration.
///
/// The pump is expressed as the ratio `r = beta / beta_th`, so the parametric
/// coupling that enters the equations of motion is `g * beta = r * gamma`.
/// The pump phase is zero; the seed enters as `A_in * exp(-i phi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drive {
    pump_ratio: f64,
    pump_offset: f64,
    seed_amplitude: f64,
    seed_phase: f64,
}

impl Drive {
    pub fn new(pump_ratio: f64, pump_offset: f64, seed_amplitude: f64, seed_phase: f64) -> Result<Self> {
        if !pump_ratio.is_finite() || pump_ratio < 0.0 {
            return Err(ModelError::invalid("pump_ratio", format!("{pump_ratio} must be >= 0")));
        }
        if pump_ratio >= 1.0 {
            return Err(ModelError::AboveThreshold(pump_ratio));
        }
        if !pump_offset.is_finite() {
            return Err(ModelError::invalid("pump_offset", "must be finite"));
        }
        if !(seed_amplitude.is_finite() && seed_amplitude >= 0.0) {
            return Err(ModelError::invalid("seed_amplitude", format!("{seed_amplitude} must be >= 0")));
        }
        if !seed_phase.is_finite() {
            return Err(ModelError::invalid("seed_phase", "must be finite"));
        }
        Ok(Self { pump_ratio, pump_offset, seed_amplitude, seed_phase })
    }

    #[cfg(test)]
    pub(crate) fn unchecked(pump_ratio: f64, seed_amplitude: f64, seed_phase: f64) -> Self {
        Self { pump_ratio, pump_offset: 0.0, seed_amplitude, seed_phase }
    }

    /// Degenerate drive: pump exactly at twice the seed frequency.
    pub fn degenerate(pump_ratio: f64, seed_amplitude: f64, seed_phase: f64) -> Result<Self> {
        Self::new(pump_ratio, 0.0, seed_amplitude, seed_phase)
    }

    pub fn pump_ratio(&self) -> f64 {
        self.pump_ratio
    }

    /// Half the pump detuning from twice the cavity resonance, rad/s.
    pub fn pump_offset(&self) -> f64 {
        self.pump_offset
    }

    pub fn seed_amplitude(&self) -> f64 {
        self.seed_amplitude
    }

    pub fn seed_phase(&self) -> f64 {
        self.seed_phase
    }

    pub fn with_seed_phase(&self, seed_phase: f64) -> Self {
        Self { seed_phase, ..*self }
    }

    pub fn with_seed_amplitude(&self, seed_amplitude: f64) -> Self {
        Self { seed_amplitude, ..*self }
    }

    /// Complex injected seed `A_in * exp(-i phi)`.
    pub fn seed_field(&self) -> Complex64 {
        Complex64::from_polar(self.seed_amplitude, -self.seed_phase)
    }

    /// Parametric coupling `g * beta` in per-roundtrip units.
    pub fn parametric_gain(&self, rates: &DecayRates) -> f64 {
        self.pump_ratio * rates.total
    }

    pub(crate) fn require_seed(&self) -> Result<()> {
        if self.seed_amplitude > 0.0 {
            Ok(())
        } else {
            Err(ModelError::invalid("seed_amplitude", "must be > 0 for spectra"))
        }
    }
}

/// Ordered detuning grid, stored in the dimensionless form `tau * delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetuningSweep {
    tau_delta: Vec<f64>,
    tau: f64,
}

impl DetuningSweep {
    /// Grid from dimensionless `tau * delta` values.
    pub fn from_tau_delta(tau_delta: Vec<f64>, tau: f64) -> Result<Self> {
        require_positive("tau", tau)?;
        if tau_delta.is_empty() {
            return Err(ModelError::invalid("sweep", "must contain at least one point"));
        }
        if tau_delta.iter().any(|x| !x.is_finite()) {
            return Err(ModelError::invalid("sweep", "values must be finite"));
        }
        if tau_delta.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ModelError::invalid("sweep", "values must be strictly increasing"));
        }
        Ok(Self { tau_delta, tau })
    }

    /// Grid from physical detunings in rad/s.
    pub fn from_rad_per_s(delta: &[f64], tau: f64) -> Result<Self> {
        Self::from_tau_delta(delta.iter().map(|d| d * tau).collect(), tau)
    }

    /// `points` evenly spaced `tau * delta` values from `start` to `end`
    /// inclusive. Symmetric odd-length grids contain zero exactly.
    pub fn linspace(start: f64, end: f64, points: usize, tau: f64) -> Result<Self> {
        if points == 0 {
            return Err(ModelError::invalid("points", "must be >= 1"));
        }
        if points == 1 {
            return Self::from_tau_delta(vec![start], tau);
        }
        let n = (points - 1) as f64;
        let values = (0..points)
            .map(|i| {
                let k = i as f64;
                (start * (n - k) + end * k) / n
            })
            .collect();
        Self::from_tau_delta(values, tau)
    }

    pub fn len(&self) -> usize {
        self.tau_delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau_delta.is_empty()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn tau_delta(&self) -> &[f64] {
        &self.tau_delta
    }

    /// Detunings in rad/s.
    pub fn delta(&self) -> impl Iterator<Item = f64> + '_ {
        self.tau_delta.iter().map(move |x| x / self.tau)
    }

    /// Whether some sample sits exactly at `delta = -pump_offset`, where the
    /// idler coincides with the signal.
    pub fn contains_degeneracy(&self, pump_offset: f64) -> bool {
        self.delta().any(|d| is_degenerate_detuning(d, pump_offset))
    }
}

pub(crate) fn is_degenerate_detuning(delta: f64, pump_offset: f64) -> bool {
    let scale = delta.abs().max(pump_offset.abs());
    (delta + pump_offset).abs() <= 4.0 * f64::EPSILON * scale
}
