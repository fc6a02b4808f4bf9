//! JSON run configuration. Physical quantities carry their unit in the key.

use std::f64::consts::TAU;

use opa_core::dynamics::{ScanProtocol, SolverOptions};
use opa_core::model::{
    finesse_to_loss, pump_ratio_from_power, roundtrip_time, DEFAULT_A_LOSS, DEFAULT_CAVITY_LENGTH,
    DEFAULT_CRYSTAL_INDEX, DEFAULT_CRYSTAL_LENGTH, DEFAULT_T_C, DEFAULT_T_HR,
};
use opa_core::spectra::Branch;
use opa_core::{CavityParams, DetuningSweep, Drive, ModelError};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Sets the roundtrip time to 1, so every `_rad_per_s` value is read as
    /// `tau * delta` and every `_hz` value as cycles per roundtrip.
    pub dimensionless: bool,
    pub cavity: CavityConfig,
    pub drive: DriveConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavityConfig {
    pub t_hr: f64,
    pub t_c: f64,
    pub a_loss: f64,
    /// Overrides the geometric roundtrip time when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_seconds: Option<f64>,
    pub cavity_length_m: f64,
    pub crystal_length_m: f64,
    pub crystal_index: f64,
}

impl Default for CavityConfig {
    fn default() -> Self {
        Self {
            t_hr: DEFAULT_T_HR,
            t_c: DEFAULT_T_C,
            a_loss: DEFAULT_A_LOSS,
            tau_seconds: None,
            cavity_length_m: DEFAULT_CAVITY_LENGTH,
            crystal_length_m: DEFAULT_CRYSTAL_LENGTH,
            crystal_index: DEFAULT_CRYSTAL_INDEX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveConfig {
    /// `beta / beta_th`; exclusive with `pump_power_w`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pump_ratio: Option<f64>,
    /// Converted with `threshold_power_w`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pump_power_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_power_w: Option<f64>,
    pub pump_offset_rad_per_s: f64,
    pub seed_amplitude: f64,
    pub seed_phase_rad: f64,
}

impl Default for DriveConfig {
    fn default() -> Self {
        Self {
            pump_ratio: None,
            pump_power_w: None,
            threshold_power_w: None,
            pump_offset_rad_per_s: 0.0,
            seed_amplitude: 1.0,
            seed_phase_rad: 0.0,
        }
    }
}

/// Detuning grid for the static spectra. Give the range either in rad/s or
/// in linewidths (`gamma / tau`), not both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_rad_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub end_rad_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_linewidths: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub end_linewidths: Option<f64>,
    pub points: usize,
    pub branch: BranchName,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            start_rad_per_s: None,
            end_rad_per_s: None,
            start_linewidths: None,
            end_linewidths: None,
            points: 2001,
            branch: BranchName::Minus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchName {
    Minus,
    Plus,
}

impl From<BranchName> for Branch {
    fn from(b: BranchName) -> Self {
        match b {
            BranchName::Minus => Branch::Minus,
            BranchName::Plus => Branch::Plus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub protocol: ProtocolConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProtocolConfig {
    Hold {
        duration_seconds: f64,
        #[serde(default)]
        cavity_detuning_rad_per_s: f64,
        #[serde(default)]
        seed_offset_rad_per_s: f64,
    },
    CavityLength {
        duration_seconds: f64,
        start_rad_per_s: f64,
        end_rad_per_s: f64,
    },
    SeedFrequency {
        duration_seconds: f64,
        start_hz: f64,
        end_hz: f64,
        #[serde(default)]
        quantization_hz: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub step_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps_per_sample: Option<usize>,
    pub samples: usize,
    pub boxcar_seconds: f64,
    /// Start from the static solution at the initial scan point instead of zero.
    pub warm_start: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self {
            step_fraction: d.step_fraction,
            steps_per_sample: d.steps_per_sample,
            samples: d.samples,
            boxcar_seconds: d.boxcar,
            warm_start: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finesse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_power_w: Option<f64>,
}

/// Which blocks a subcommand needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Needs {
    Spectrum,
    Scan,
    Calibration,
}

/// Core objects built from a validated configuration.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub params: CavityParams,
    pub drive: Option<Drive>,
    pub sweep: Option<DetuningSweep>,
    pub branch: Branch,
    pub protocol: Option<ScanProtocol>,
    pub solver: SolverOptions,
    pub warm_start: bool,
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Validation(vec![format!("config: {e}")]))
}

/// Collects every problem with `cfg` for the given subcommand before failing.
pub fn resolve(cfg: RunConfig, needs: Needs) -> Result<Resolved, CliError> {
    let mut errs = Errors::default();

    let params = resolve_cavity(&cfg, &mut errs);
    let drive = match needs {
        Needs::Calibration => None,
        _ => resolve_drive(&cfg.drive, &mut errs),
    };

    let mut sweep = None;
    let mut branch = Branch::Minus;
    let mut protocol = None;
    let mut solver = SolverOptions::default();
    let mut warm_start = false;

    let mut cfg = cfg;
    match needs {
        Needs::Spectrum => {
            let s = cfg.spectrum.get_or_insert_with(SpectrumConfig::default);
            branch = s.branch.into();
            sweep = resolve_sweep(s, params.as_ref(), &mut errs);
            cfg.scan = None;
            cfg.calibration = None;
        }
        Needs::Scan => {
            match &cfg.scan {
                None => errs.push("scan: block is required"),
                Some(s) => {
                    protocol = errs.take("scan.protocol", resolve_protocol(&s.protocol));
                    solver = SolverOptions {
                        step_fraction: s.solver.step_fraction,
                        steps_per_sample: s.solver.steps_per_sample,
                        samples: s.solver.samples,
                        boxcar: s.solver.boxcar_seconds,
                        ..SolverOptions::default()
                    };
                    errs.take("scan.solver", solver.validate());
                    warm_start = s.solver.warm_start;
                    if warm_start && matches!(s.protocol, ProtocolConfig::SeedFrequency { .. }) {
                        errs.push("scan.solver.warm_start: only hold and cavity_length protocols have a static start");
                    }
                }
            }
            cfg.spectrum = None;
            cfg.calibration = None;
        }
        Needs::Calibration => {
            match &cfg.calibration {
                Some(c) if c.finesse.is_some() || c.threshold_power_w.is_some() => {
                    if let Some(f) = c.finesse {
                        errs.take("calibration.finesse", finesse_to_loss(f));
                    }
                    if let Some(p) = c.threshold_power_w {
                        if !(p.is_finite() && p > 0.0) {
                            errs.push(format!("calibration.threshold_power_w: {p} must be > 0"));
                        }
                    }
                }
                _ => errs.push("calibration: give `finesse` and/or `threshold_power_w`"),
            }
            cfg.spectrum = None;
            cfg.scan = None;
        }
    }

    errs.finish()?;
    let params = params.expect("cavity errors are reported above");
    if cfg.dimensionless {
        cfg.cavity.tau_seconds = Some(1.0);
    }
    Ok(Resolved { config: cfg, params, drive, sweep, branch, protocol, solver, warm_start })
}

#[derive(Default)]
struct Errors(Vec<String>);

impl Errors {
    fn push(&mut self, msg: impl Into<String>) {
        self.0.push(msg.into());
    }

    fn take<T>(&mut self, at: &str, r: Result<T, ModelError>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.push(format!("{at}: {e}"));
                None
            }
        }
    }

    fn finish(self) -> Result<(), CliError> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(self.0))
        }
    }
}

fn resolve_cavity(cfg: &RunConfig, errs: &mut Errors) -> Option<CavityParams> {
    let c = &cfg.cavity;
    let tau = if cfg.dimensionless {
        if c.tau_seconds.is_some() {
            errs.push("cavity.tau_seconds: not allowed in dimensionless mode");
            return None;
        }
        1.0
    } else if let Some(t) = c.tau_seconds {
        t
    } else {
        errs.take("cavity", roundtrip_time(c.cavity_length_m, c.crystal_length_m, c.crystal_index))?
    };
    errs.take("cavity", CavityParams::new(c.t_hr, c.t_c, c.a_loss, tau))
}

fn resolve_drive(d: &DriveConfig, errs: &mut Errors) -> Option<Drive> {
    let ratio = match (d.pump_ratio, d.pump_power_w, d.threshold_power_w) {
        (Some(r), None, _) => Some(r),
        (None, Some(p), Some(th)) => errs.take("drive.pump_power_w", pump_ratio_from_power(p, th)),
        (None, Some(_), None) => {
            errs.push("drive.pump_power_w: requires `threshold_power_w`");
            None
        }
        (Some(_), Some(_), _) => {
            errs.push("drive: give either `pump_ratio` or `pump_power_w`, not both");
            None
        }
        (None, None, _) => {
            errs.push("drive: `pump_ratio` or `pump_power_w` is required");
            None
        }
    }?;
    errs.take("drive", Drive::new(ratio, d.pump_offset_rad_per_s, d.seed_amplitude, d.seed_phase_rad))
}

/// Range checks run even when the cavity is invalid, so every problem is reported.
fn resolve_sweep(s: &SpectrumConfig, p: Option<&CavityParams>, errs: &mut Errors) -> Option<DetuningSweep> {
    let range = match (s.start_rad_per_s, s.end_rad_per_s, s.start_linewidths, s.end_linewidths) {
        (Some(a), Some(b), None, None) => Some((a, b, false)),
        (None, None, Some(a), Some(b)) => Some((a, b, true)),
        _ => {
            errs.push(
                "spectrum: give `start_rad_per_s`/`end_rad_per_s` or `start_linewidths`/`end_linewidths`",
            );
            None
        }
    };
    if s.points < 5 {
        errs.push(format!("spectrum.points: {} must be >= 5", s.points));
    }
    let (start, end, linewidths) = range?;
    if !(start.is_finite() && end.is_finite() && start < end) {
        errs.push(format!("spectrum: start {start} must be below end {end}"));
        return None;
    }
    let p = p?;
    let scale = if linewidths { p.rates().total } else { p.tau() };
    if s.points < 5 {
        return None;
    }
    errs.take("spectrum", DetuningSweep::linspace(start * scale, end * scale, s.points, p.tau()))
}

fn resolve_protocol(p: &ProtocolConfig) -> Result<ScanProtocol, ModelError> {
    let proto = match *p {
        ProtocolConfig::Hold { duration_seconds, cavity_detuning_rad_per_s, seed_offset_rad_per_s } => {
            ScanProtocol::hold(cavity_detuning_rad_per_s, seed_offset_rad_per_s, duration_seconds)
        }
        ProtocolConfig::CavityLength { duration_seconds, start_rad_per_s, end_rad_per_s } => {
            ScanProtocol::cavity_length(start_rad_per_s, end_rad_per_s, duration_seconds)
        }
        ProtocolConfig::SeedFrequency { duration_seconds, start_hz, end_hz, quantization_hz } => {
            ScanProtocol::seed_frequency(start_hz * TAU, end_hz * TAU, quantization_hz, duration_seconds)
        }
    };
    proto.validate()?;
    Ok(proto)
}
