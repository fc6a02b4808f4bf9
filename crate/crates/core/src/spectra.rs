//! Normalized transmission spectra.
//!
//! Case 1 keeps the pump at exactly twice the seed frequency while the
//! detuning is swept, so every point is a degenerate steady state. Case 2
//! fixes the pump and sweeps the seed; away from degeneracy a signal/idler
//! pair is generated and the detected power is their sum, while the single
//! point where idler and signal coincide is phase sensitive.
//!
//! All powers are normalized to the pump-off transmission on resonance.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use crate::error::{ModelError, Result};
use crate::exec::{try_map_ordered, Execution};
use crate::model::{is_degenerate_detuning, CavityParams, DetuningSweep, Drive};
use crate::steady::{
    closed_form_outputs, degenerate_signal, empty_cavity_output, output_fields, solve_nondegenerate,
};

/// Sign choice at the degenerate point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Deamplification, `gamma^2 / (gamma + g beta)^2`; seed out of phase with the pump.
    Minus,
    /// Amplification, `gamma^2 / (gamma - g beta)^2`; seed in phase with the pump.
    Plus,
}

impl Branch {
    /// Seed phase that realizes this branch at degeneracy.
    pub fn seed_phase(self) -> f64 {
        match self {
            Branch::Minus => FRAC_PI_2,
            Branch::Plus => 0.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Branch::Minus => "minus",
            Branch::Plus => "plus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    /// Pump follows the seed (`omega_p = 2 omega`).
    Degenerate,
    /// Pump fixed, seed swept.
    Nondegenerate(Branch),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    /// rad/s
    pub delta: f64,
    pub tau_delta: f64,
    pub power: f64,
    pub is_degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpectrumWarning {
    /// The sweep never lands on `omega = omega_i`, so the narrow feature is absent.
    MissingDegeneratePoint,
}

impl fmt::Display for SpectrumWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectrumWarning::MissingDegeneratePoint => {
                write!(f, "sweep does not sample the degenerate point; narrow feature not shown")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub points: Vec<SpectrumPoint>,
    pub case: Case,
    pub drive: Drive,
    pub params: CavityParams,
    pub warnings: Vec<SpectrumWarning>,
}

impl Spectrum {
    pub fn powers(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.power).collect()
    }

    pub fn degenerate_point(&self) -> Option<&SpectrumPoint> {
        self.points.iter().find(|p| p.is_degenerate)
    }
}

/// Pump-off transmitted power on resonance, `|2 sqrt(gamma_c gamma_in) A_in / gamma|^2`.
pub fn normalize_reference(params: &CavityParams, seed_amplitude: f64) -> Result<f64> {
    Ok(empty_cavity_output(0.0, params, seed_amplitude)?.norm_sqr())
}

pub fn spectrum_case1(sweep: &DetuningSweep, drive: &Drive, params: &CavityParams) -> Result<Spectrum> {
    spectrum_case1_with(sweep, drive, params, Execution::default())
}

pub fn spectrum_case1_with(
    sweep: &DetuningSweep,
    drive: &Drive,
    params: &CavityParams,
    exec: Execution,
) -> Result<Spectrum> {
    if drive.pump_offset() != 0.0 {
        return Err(ModelError::NonzeroPumpOffset(drive.pump_offset()));
    }
    drive.require_seed()?;
    let rates = params.rates();
    let reference = normalize_reference(params, drive.seed_amplitude())?;
    let out = 2.0 * rates.coupling;
    let tau = params.tau();
    let points = try_map_ordered(sweep.tau_delta(), exec, |&td| {
        let a = degenerate_signal(td, drive, &rates)?;
        Ok(SpectrumPoint {
            delta: td / tau,
            tau_delta: td,
            power: out * a.norm_sqr() / reference,
            is_degenerate: false,
        })
    })?;
    Ok(Spectrum { points, case: Case::Degenerate, drive: *drive, params: *params, warnings: Vec::new() })
}

pub fn spectrum_case2(
    sweep: &DetuningSweep,
    drive: &Drive,
    params: &CavityParams,
    branch: Branch,
) -> Result<Spectrum> {
    spectrum_case2_with(sweep, drive, params, branch, Execution::default())
}

/// With zero pump offset the continuous branch uses the closed-form outputs;
/// otherwise the general signal/idler solve.
pub fn spectrum_case2_with(
    sweep: &DetuningSweep,
    drive: &Drive,
    params: &CavityParams,
    branch: Branch,
    exec: Execution,
) -> Result<Spectrum> {
    drive.require_seed()?;
    let r = drive.pump_ratio();
    if r >= 1.0 {
        return Err(ModelError::AboveThreshold(r));
    }
    let rates = params.rates();
    let reference = normalize_reference(params, drive.seed_amplitude())?;
    let tau = params.tau();
    let offset = drive.pump_offset();
    let at_degeneracy = drive.with_seed_phase(branch.seed_phase());

    let points = try_map_ordered(sweep.tau_delta(), exec, |&td| {
        let delta = td / tau;
        let degenerate = is_degenerate_detuning(delta, offset);
        let power = if degenerate {
            let a = degenerate_signal(-tau * offset, &at_degeneracy, &rates)?;
            2.0 * rates.coupling * a.norm_sqr()
        } else if offset == 0.0 {
            let (sig, idl) = closed_form_outputs(delta, drive, params)?;
            sig.norm_sqr() + idl.norm_sqr()
        } else {
            let state = solve_nondegenerate(delta, drive, params)?;
            let out = output_fields(&state, drive, params);
            out.transmitted.norm_sqr() + out.idler_transmitted.norm_sqr()
        };
        Ok(SpectrumPoint { delta, tau_delta: td, power: power / reference, is_degenerate: degenerate })
    })?;

    let mut warnings = Vec::new();
    if !points.iter().any(|p| p.is_degenerate) {
        warnings.push(SpectrumWarning::MissingDegeneratePoint);
    }
    Ok(Spectrum { points, case: Case::Nondegenerate(branch), drive: *drive, params: *params, warnings })
}

/// A located extremum, refined by a parabola through three samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub tau_delta: f64,
    pub power: f64,
    /// Index of the sample the parabola was centred on.
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplittingReport {
    pub dip: Extremum,
    pub left_peak: Extremum,
    pub right_peak: Extremum,
}

impl SplittingReport {
    /// Offset of the peak midpoint from the dip, relative to the peak separation.
    pub fn symmetry_defect(&self) -> f64 {
        let mid = 0.5 * (self.left_peak.tau_delta + self.right_peak.tau_delta);
        (mid - self.dip.tau_delta).abs() / (self.right_peak.tau_delta - self.left_peak.tau_delta)
    }

    /// `right - left` peak power.
    pub fn height_asymmetry(&self) -> f64 {
        self.right_peak.power - self.left_peak.power
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Splitting {
    Split(SplittingReport),
    /// No interior dip; the spectrum has a single maximum.
    Absent {
        peak: Extremum,
    },
}

impl Splitting {
    pub fn report(&self) -> Option<&SplittingReport> {
        match self {
            Splitting::Split(r) => Some(r),
            Splitting::Absent { .. } => None,
        }
    }
}

/// Locates the central dip of a Case-1 spectrum and its two flanking maxima.
pub fn find_splitting(spectrum: &Spectrum) -> Result<Splitting> {
    if spectrum.case != Case::Degenerate {
        return Err(ModelError::invalid("spectrum", "splitting analysis needs a Case-1 spectrum"));
    }
    let n = spectrum.points.len();
    if n < 5 {
        return Err(ModelError::invalid("spectrum", format!("{n} points, need at least 5")));
    }
    let x: Vec<f64> = spectrum.points.iter().map(|p| p.tau_delta).collect();
    let y = spectrum.powers();

    let better = |i: usize, j: usize, lower: bool| -> bool {
        let (a, b) = (y[i], y[j]);
        if a != b {
            return if lower { a < b } else { a > b };
        }
        x[i].abs() < x[j].abs()
    };

    let mut dip: Option<usize> = None;
    for i in 1..n - 1 {
        if y[i] < y[i - 1] && y[i] <= y[i + 1] && dip.is_none_or(|d| better(i, d, true)) {
            dip = Some(i);
        }
    }

    let flanks = dip.and_then(|d| {
        let mut l = d;
        while l > 0 && y[l - 1] >= y[l] {
            l -= 1;
        }
        let mut r = d;
        while r + 1 < n && y[r + 1] >= y[r] {
            r += 1;
        }
        (l > 0 && r < n - 1).then_some((d, l, r))
    });

    match flanks {
        Some((d, l, r)) => Ok(Splitting::Split(SplittingReport {
            dip: refine(&x, &y, d),
            left_peak: refine(&x, &y, l),
            right_peak: refine(&x, &y, r),
        })),
        None => {
            let mut best = 0;
            for i in 1..n {
                if better(i, best, false) {
                    best = i;
                }
            }
            Ok(Splitting::Absent { peak: refine(&x, &y, best) })
        }
    }
}

/// Vertex of the parabola through samples `i-1, i, i+1` (non-uniform spacing allowed).
fn refine(x: &[f64], y: &[f64], i: usize) -> Extremum {
    if i == 0 || i + 1 >= x.len() {
        return Extremum { tau_delta: x[i], power: y[i], index: i };
    }
    let (x0, x1, x2) = (x[i - 1], x[i], x[i + 1]);
    let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let c = (d12 - d01) / (x2 - x0);
    if c == 0.0 {
        return Extremum { tau_delta: x1, power: y1, index: i };
    }
    // vertex of y0 + d01 (t - x0) + c (t - x0)(t - x1)
    let t = 0.5 * (x0 + x1) - d01 / (2.0 * c);
    let t = t.clamp(x0, x2);
    let power = y0 + d01 * (t - x0) + c * (t - x0) * (t - x1);
    Extremum { tau_delta: t, power, index: i }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_params() -> CavityParams {
        CavityParams::default().with_tau(1.0).unwrap()
    }

    fn grid(p: &CavityParams, n: usize) -> DetuningSweep {
        let g = p.rates().total;
        DetuningSweep::linspace(-10.0 * g, 10.0 * g, n, p.tau()).unwrap()
    }

    #[test]
    fn reference_power() {
        let p = CavityParams::default();
        let r1 = normalize_reference(&p, 1.0).unwrap();
        assert_relative_eq!(r1, 0.383209_f64.powi(2), max_relative = 1e-5);
        assert_relative_eq!(normalize_reference(&p, 2.0).unwrap(), 4.0 * r1, max_relative = 1e-15);
        let closed = CavityParams::new(0.002, 0.0, 0.01, 1.0).unwrap();
        assert_eq!(normalize_reference(&closed, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn pump_off_lorentzian() {
        let p = unit_params();
        let g = p.rates().total;
        for phase in [0.0, 1.0, FRAC_PI_2] {
            let d = Drive::degenerate(0.0, 1.0, phase).unwrap();
            let s = spectrum_case1(&grid(&p, 201), &d, &p).unwrap();
            for pt in &s.points {
                let want = g * g / (g * g + pt.tau_delta * pt.tau_delta);
                assert!((pt.power - want).abs() < 1e-12);
            }
            assert_relative_eq!(s.points[100].power, 1.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn out_of_phase_resonance() {
        let p = CavityParams::default();
        let d = Drive::degenerate(0.5, 1.0, FRAC_PI_2).unwrap();
        let s = spectrum_case1(&grid(&p, 101), &d, &p).unwrap();
        assert_relative_eq!(s.points[50].power, 1.0 / 2.25, max_relative = 1e-12);
    }

    #[test]
    fn case1_rejects_offset_and_missing_seed() {
        let p = unit_params();
        let d = Drive::new(0.5, 0.1, 1.0, 0.0).unwrap();
        assert!(spectrum_case1(&grid(&p, 11), &d, &p).is_err());
        let d = Drive::degenerate(0.5, 0.0, 0.0).unwrap();
        assert!(spectrum_case1(&grid(&p, 11), &d, &p).is_err());
    }

    #[test]
    fn case2_branches() {
        let p = unit_params();
        let d = Drive::degenerate(0.5, 1.0, 0.3).unwrap();
        let sweep = grid(&p, 2001);
        let minus = spectrum_case2(&sweep, &d, &p, Branch::Minus).unwrap();
        let plus = spectrum_case2(&sweep, &d, &p, Branch::Plus).unwrap();
        assert!(minus.warnings.is_empty());
        let flagged: Vec<_> = minus.points.iter().filter(|p| p.is_degenerate).collect();
        assert_eq!(flagged.len(), 1);
        assert_eq!(flagged[0].tau_delta, 0.0);
        assert_relative_eq!(flagged[0].power, 1.0 / 2.25, max_relative = 1e-12);
        assert_relative_eq!(plus.degenerate_point().unwrap().power, 4.0, max_relative = 1e-12);
        // neighbours sit on the continuous background (1 + r^2) / (1 - r^2)^2
        assert_relative_eq!(minus.points[999].power, 1.25 / 0.5625, max_relative = 1e-3);
        assert_relative_eq!(minus.points[1001].power, 1.25 / 0.5625, max_relative = 1e-3);
    }

    #[test]
    fn case2_missing_degenerate_point() {
        let p = unit_params();
        let d = Drive::degenerate(0.5, 1.0, 0.0).unwrap();
        let sweep = DetuningSweep::linspace(-0.1, 0.1, 10, 1.0).unwrap();
        let s = spectrum_case2(&sweep, &d, &p, Branch::Minus).unwrap();
        assert_eq!(s.warnings, vec![SpectrumWarning::MissingDegeneratePoint]);
        assert!(s.points.iter().all(|p| !p.is_degenerate));
    }

    #[test]
    fn case2_pump_off_has_no_feature() {
        let p = unit_params();
        let d = Drive::degenerate(0.0, 1.0, 0.0).unwrap();
        let sweep = grid(&p, 101);
        let c1 = spectrum_case1(&sweep, &d, &p).unwrap();
        for b in [Branch::Minus, Branch::Plus] {
            let c2 = spectrum_case2(&sweep, &d, &p, b).unwrap();
            assert_relative_eq!(c2.points[50].power, 1.0, max_relative = 1e-15);
            for (a, b) in c1.points.iter().zip(&c2.points) {
                assert!((a.power - b.power).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn case2_general_offset_uses_solver() {
        let p = unit_params();
        let omega = 0.004;
        let d = Drive::new(0.5, omega, 1.0, 0.0).unwrap();
        let sweep = DetuningSweep::from_tau_delta(vec![-0.01, -omega, 0.0, 0.01], 1.0).unwrap();
        let s = spectrum_case2(&sweep, &d, &p, Branch::Minus).unwrap();
        assert!(s.points[1].is_degenerate);
        assert!(!s.points[2].is_degenerate);
        assert!(s.points.iter().all(|p| p.power > 0.0));
    }

    #[test]
    fn splitting_absent_without_pump() {
        let p = unit_params();
        let d = Drive::degenerate(0.0, 1.0, FRAC_PI_2).unwrap();
        let s = spectrum_case1(&grid(&p, 101), &d, &p).unwrap();
        match find_splitting(&s).unwrap() {
            Splitting::Absent { peak } => {
                assert_eq!(peak.tau_delta, 0.0);
                assert_relative_eq!(peak.power, 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn splitting_symmetric() {
        let p = unit_params();
        let g = p.rates().total;
        let d = Drive::degenerate(0.9, 1.0, FRAC_PI_2).unwrap();
        let sweep = grid(&p, 2001);
        let step = sweep.tau_delta()[1] - sweep.tau_delta()[0];
        let s = spectrum_case1(&sweep, &d, &p).unwrap();
        let rep = *find_splitting(&s).unwrap().report().unwrap();
        assert!(rep.dip.tau_delta.abs() <= step);
        assert_relative_eq!(rep.dip.power, 1.0 / 3.61, max_relative = 1e-6);
        assert!(rep.symmetry_defect() < 1e-9);
        assert!(rep.height_asymmetry().abs() < 1e-9);
        // peaks at tau delta = +-gamma sqrt((1-r)(3r-1)), height 1 / (8 r (1-r))
        let x_star = g * (0.1f64 * 1.7).sqrt();
        assert!((rep.right_peak.tau_delta - x_star).abs() < 0.05 * step);
        assert_relative_eq!(rep.right_peak.power, 1.0 / 0.72, max_relative = 1e-5);
    }

    #[test]
    fn splitting_asymmetric() {
        let p = unit_params();
        let d = Drive::degenerate(0.9, 1.0, FRAC_PI_2 + 0.07).unwrap();
        let s = spectrum_case1(&grid(&p, 2001), &d, &p).unwrap();
        let rep = *find_splitting(&s).unwrap().report().unwrap();
        assert!(rep.dip.tau_delta.abs() > 1e-3 * p.rates().total);
        assert!(rep.height_asymmetry().abs() > 0.5);
    }

    #[test]
    fn splitting_rejects_short_or_case2() {
        let p = unit_params();
        let d = Drive::degenerate(0.9, 1.0, FRAC_PI_2).unwrap();
        let short = DetuningSweep::linspace(-0.1, 0.1, 4, 1.0).unwrap();
        assert!(find_splitting(&spectrum_case1(&short, &d, &p).unwrap()).is_err());
        let c2 = spectrum_case2(&grid(&p, 11), &d, &p, Branch::Minus).unwrap();
        assert!(find_splitting(&c2).is_err());
    }

    #[test]
    fn refine_recovers_parabola_vertex() {
        let x = [0.0, 0.7, 1.9];
        let y: Vec<f64> = x.iter().map(|t| 3.0 - 2.0 * (t - 0.9) * (t - 0.9)).collect();
        let e = refine(&x, &y, 1);
        assert_relative_eq!(e.tau_delta, 0.9, max_relative = 1e-12);
        assert_relative_eq!(e.power, 3.0, max_relative = 1e-12);
    }

    #[test]
    fn parallel_matches_sequential() {
        let p = unit_params();
        let d = Drive::degenerate(0.71, 1.0, 1.2).unwrap();
        let sweep = grid(&p, 501);
        let a = spectrum_case1_with(&sweep, &d, &p, Execution::Sequential).unwrap();
        let b = spectrum_case1_with(&sweep, &d, &p, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        let a = spectrum_case2_with(&sweep, &d, &p, Branch::Plus, Execution::Sequential).unwrap();
        let b = spectrum_case2_with(&sweep, &d, &p, Branch::Plus, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    proptest::proptest! {
        #[test]
        fn seed_amplitude_does_not_change_normalized_power(
            k in 0.01..50.0f64, r in 0.0..0.95f64, phase in -3.2..3.2f64,
        ) {
            let p = unit_params();
            let sweep = grid(&p, 41);
            let d = Drive::degenerate(r, 1.0, phase).unwrap();
            let a = spectrum_case1(&sweep, &d, &p).unwrap();
            let b = spectrum_case1(&sweep, &d.with_seed_amplitude(k), &p).unwrap();
            for (u, v) in a.points.iter().zip(&b.points) {
                proptest::prop_assert!((u.power - v.power).abs() <= 1e-12 * u.power.max(1.0));
            }
            let a = spectrum_case2(&sweep, &d, &p, Branch::Minus).unwrap();
            let b = spectrum_case2(&sweep, &d.with_seed_amplitude(k), &p, Branch::Minus).unwrap();
            for (u, v) in a.points.iter().zip(&b.points) {
                proptest::prop_assert!((u.power - v.power).abs() <= 1e-12 * u.power.max(1.0));
            }
        }

        #[test]
        fn powers_nonnegative(r in 0.0..0.99f64, phase in -3.2..3.2f64) {
            let p = unit_params();
            let d = Drive::degenerate(r, 1.0, phase).unwrap();
            let s = spectrum_case1(&grid(&p, 31), &d, &p).unwrap();
            proptest::prop_assert!(s.points.iter().all(|p| p.power >= 0.0));
        }
    }
}
