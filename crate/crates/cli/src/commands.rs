//! The four subcommands. Each writes one CSV document to `out` and
//! diagnostics to `diag`.

use std::io::Write;

use num_complex::Complex64;
use opa_core::dynamics::{
    integrate, measure_feature, photocurrent_spectrum, Beat, FeatureKind, ScanKind, ScanProtocol, TimeTrace,
};
use opa_core::model::{finesse_to_loss, g_from_threshold};
use opa_core::spectra::{spectrum_case1, spectrum_case2, Spectrum};
use opa_core::steady::{output_fields, solve_nondegenerate};
use opa_core::{CavityParams, Drive};

use crate::config::{parse, resolve, Needs, Resolved};
use crate::csv::{num, Csv};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum1,
    Spectrum2,
    Scan,
    Calibrate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum1 => "spectrum1",
            Command::Spectrum2 => "spectrum2",
            Command::Scan => "scan",
            Command::Calibrate => "calibrate",
        }
    }

    fn needs(self) -> Needs {
        match self {
            Command::Spectrum1 | Command::Spectrum2 => Needs::Spectrum,
            Command::Scan => Needs::Scan,
            Command::Calibrate => Needs::Calibration,
        }
    }
}

/// Parses and validates `config`, then runs `cmd`.
pub fn run(cmd: Command, config: &str, out: &mut dyn Write, diag: &mut dyn Write) -> Result<(), CliError> {
    let resolved = resolve(parse(config)?, cmd.needs())?;
    let mut csv = Csv::new(out);
    header(&mut csv, cmd, &resolved)?;
    match cmd {
        Command::Spectrum1 => run_spectrum1(&mut csv, &resolved),
        Command::Spectrum2 => run_spectrum2(&mut csv, &resolved, diag),
        Command::Scan => run_scan(&mut csv, &resolved, diag),
        Command::Calibrate => run_calibrate(&mut csv, &resolved),
    }
}

fn header(csv: &mut Csv<&mut dyn Write>, cmd: Command, r: &Resolved) -> Result<(), CliError> {
    let json = serde_json::to_string(&r.config).expect("config serializes");
    csv.comment(&format!("opa-sim {} {}", cmd.name(), env!("CARGO_PKG_VERSION")))?;
    csv.comment(&format!("config = {json}"))?;
    csv.value("tau_seconds", r.params.tau())?;
    csv.value("gamma", r.params.rates().total)?;
    csv.value("linewidth_rad_per_s", r.params.linewidth())?;
    Ok(())
}

fn drive(r: &Resolved) -> &Drive {
    r.drive.as_ref().expect("drive is resolved for this subcommand")
}

fn run_spectrum1(csv: &mut Csv<&mut dyn Write>, r: &Resolved) -> Result<(), CliError> {
    let sweep = r.sweep.as_ref().expect("sweep is resolved");
    let s = spectrum_case1(sweep, drive(r), &r.params)?;
    csv.columns(&["tau_delta", "delta_rad_s", "p_norm"])?;
    for p in &s.points {
        csv.numbers(&[p.tau_delta, p.delta, p.power])?;
    }
    Ok(())
}

fn run_spectrum2(csv: &mut Csv<&mut dyn Write>, r: &Resolved, diag: &mut dyn Write) -> Result<(), CliError> {
    let sweep = r.sweep.as_ref().expect("sweep is resolved");
    let s: Spectrum = spectrum_case2(sweep, drive(r), &r.params, r.branch)?;
    for w in &s.warnings {
        writeln!(diag, "warning: {w}")?;
    }
    csv.comment(&format!("branch = {}", r.branch.name()))?;
    csv.columns(&["tau_delta", "delta_rad_s", "p_norm", "is_degenerate"])?;
    for p in &s.points {
        csv.row(&[num(p.tau_delta), num(p.delta), num(p.power), u8::from(p.is_degenerate).to_string()])?;
    }
    Ok(())
}

/// Static field at the start of a hold or cavity-length protocol.
fn static_start(protocol: &ScanProtocol, d: &Drive, params: &CavityParams) -> Result<Complex64, CliError> {
    let (cavity, seed) = match protocol.kind {
        ScanKind::Hold { cavity_detuning, seed_offset } => (cavity_detuning, seed_offset),
        ScanKind::CavityLength { start, .. } => (start, 0.0),
        ScanKind::SeedFrequency { .. } => unreachable!("rejected during validation"),
    };
    // Signal at cavity - seed, idler at cavity + seed: a pump offset of
    // -cavity places the idler there.
    let pair = Drive::new(d.pump_ratio(), -cavity, d.seed_amplitude(), d.seed_phase())?;
    let s = solve_nondegenerate(cavity - seed, &pair, params)?;
    Ok(s.signal + s.idler)
}

fn run_scan(csv: &mut Csv<&mut dyn Write>, r: &Resolved, diag: &mut dyn Write) -> Result<(), CliError> {
    let protocol = r.protocol.expect("protocol is resolved");
    let d = drive(r);
    let mut opts = r.solver;
    if r.warm_start {
        opts.initial = Some(static_start(&protocol, d, &r.params)?);
    }
    let trace = integrate(&protocol, d, &r.params, &opts)?;

    csv.value("reference_photocurrent", trace.reference)?;
    csv.comment(&format!("steps_per_sample = {}", trace.steps_per_sample))?;
    csv.columns(&["t_seconds", "re_a", "im_a", "photocurrent", "photocurrent_averaged", "scan_rad_per_s"])?;
    for i in 0..trace.len() {
        let a = trace.field[i];
        csv.numbers(&[
            trace.times[i],
            a.re,
            a.im,
            trace.photocurrent[i],
            trace.averaged[i],
            trace.scan_value[i],
        ])?;
    }
    footer(csv, &protocol, d, r, &trace, diag)
}

fn footer(
    csv: &mut Csv<&mut dyn Write>,
    protocol: &ScanProtocol,
    d: &Drive,
    r: &Resolved,
    trace: &TimeTrace,
    diag: &mut dyn Write,
) -> Result<(), CliError> {
    match protocol.kind {
        ScanKind::Hold { seed_offset: 0.0, .. } => {
            let a = static_start(protocol, d, &r.params)?;
            let state = opa_core::steady::IntracavityState::degenerate(a, opa_core::steady::Frame::HalfPump);
            let p = output_fields(&state, d, &r.params).transmitted.norm_sqr();
            csv.value("steady_photocurrent", p)?;
        }
        ScanKind::Hold { .. } => match photocurrent_spectrum(&trace.tail(0.5 * protocol.duration))? {
            Beat::Tone { frequency, resolution, .. } => {
                csv.value("beat_frequency_hz", frequency)?;
                csv.value("beat_resolution_hz", resolution)?;
            }
            Beat::DcOnly => csv.comment("beat = dc_only")?,
        },
        ScanKind::CavityLength { .. } => {}
        ScanKind::SeedFrequency { .. } => match measure_feature(trace)? {
            Some(f) => {
                let kind = match f.kind {
                    FeatureKind::Dip => "dip",
                    FeatureKind::Peak => "peak",
                };
                csv.comment(&format!("feature_kind = {kind}"))?;
                csv.value("feature_width_hz", f.width_hz)?;
                csv.value("feature_center_hz", f.center_hz)?;
                csv.value("feature_extremum", f.extremum)?;
                csv.value("feature_background", f.background)?;
                csv.value("feature_flatness", f.flatness)?;
            }
            None => {
                writeln!(diag, "note: no narrow feature found in the scan")?;
                csv.comment("feature = none")?;
            }
        },
    }
    Ok(())
}

fn run_calibrate(csv: &mut Csv<&mut dyn Write>, r: &Resolved) -> Result<(), CliError> {
    let cal = r.config.calibration.as_ref().expect("calibration is resolved");
    let rates = r.params.rates();
    csv.columns(&["quantity", "value"])?;
    let mut put = |k: &str, v: f64| csv.row(&[k.to_string(), num(v)]);
    if let Some(f) = cal.finesse {
        put("finesse", f)?;
        put("total_loss", finesse_to_loss(f)?)?;
    }
    put("gamma_input", rates.input)?;
    put("gamma_coupling", rates.coupling)?;
    put("gamma_loss", rates.loss)?;
    put("gamma_total", rates.total)?;
    put("linewidth_rad_per_s", r.params.linewidth())?;
    if let Some(p) = cal.threshold_power_w {
        put("threshold_power_w", p)?;
        // threshold amplitude is the square root of the threshold power
        put("g_per_sqrt_w", g_from_threshold(rates.total, p.sqrt())?)?;
    }
    Ok(())
}
