//! Stationary intracavity and output fields.
//!
//! The degenerate equation of motion
//!
//! ```text
//! tau da/dt = -(i tau delta + gamma) a + g beta conj(a) + sqrt(2 gamma_in) a_in
//! ```
//!
//! is linear in `(a, conj(a))`, so its steady state is an exact 2x2 real
//! solve in Cartesian components. The nondegenerate pair is linear in
//! `(a, conj(a_i))` and is solved the same way over the complex numbers.
//! The polar amplitude/phase balance and the `Omega = 0` closed form are kept
//! as independent checks.

use num_complex::Complex64;

use crate::error::{ModelError, Result};
use crate::model::{CavityParams, DecayRates, Drive};

/// Rotating frame an [`IntracavityState`] is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    /// Rotating at the seed frequency.
    Seed,
    /// Rotating at half the pump frequency.
    HalfPump,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntracavityState {
    pub signal: Complex64,
    /// Identically zero for degenerate operation.
    pub idler: Complex64,
    pub frame: Frame,
}

impl IntracavityState {
    pub fn degenerate(signal: Complex64, frame: Frame) -> Self {
        Self { signal, idler: Complex64::new(0.0, 0.0), frame }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputFields {
    /// Transmitted through the output coupler.
    pub transmitted: Complex64,
    /// Reflected from the back mirror.
    pub reflected: Complex64,
    pub idler_transmitted: Complex64,
}

fn checked_rates(params: &CavityParams) -> Result<DecayRates> {
    let rates = params.rates();
    rates.require_positive()?;
    Ok(rates)
}

/// Transmitted seed amplitude with the pump off.
pub fn empty_cavity_output(delta: f64, params: &CavityParams, seed_amplitude: f64) -> Result<Complex64> {
    let rates = checked_rates(params)?;
    let num = 2.0 * (rates.coupling * rates.input).sqrt() * seed_amplitude;
    Ok(Complex64::new(num, 0.0) / Complex64::new(rates.total, params.tau() * delta))
}

/// Steady state of the degenerate equation at seed detuning `delta`.
pub fn solve_degenerate(delta: f64, drive: &Drive, params: &CavityParams) -> Result<IntracavityState> {
    let rates = checked_rates(params)?;
    let signal = degenerate_signal(params.tau() * delta, drive, &rates)?;
    Ok(IntracavityState::degenerate(signal, Frame::Seed))
}

pub(crate) fn degenerate_signal(tau_delta: f64, drive: &Drive, rates: &DecayRates) -> Result<Complex64> {
    let r = drive.pump_ratio();
    if r >= 1.0 {
        return Err(ModelError::AboveThreshold(r));
    }
    let gamma = rates.total;
    let gb = drive.parametric_gain(rates);
    let drive_amp = (2.0 * rates.input).sqrt() * drive.seed_amplitude();
    let (sin_p, cos_p) = drive.seed_phase().sin_cos();

    // [gb - gamma, tau_delta; -tau_delta, -(gamma + gb)] [x; y] = [rhs_x; rhs_y]
    let m11 = gb - gamma;
    let m12 = tau_delta;
    let m21 = -tau_delta;
    let m22 = -(gamma + gb);
    let rhs_x = -drive_amp * cos_p;
    let rhs_y = drive_amp * sin_p;

    // Equal to gamma^2 (1 - r^2) + tau_delta^2.
    let det = m11 * m22 - m12 * m21;
    assert!(det > 0.0, "degenerate determinant must be positive below threshold, got {det}");
    let x = (rhs_x * m22 - m12 * rhs_y) / det;
    let y = (m11 * rhs_y - m21 * rhs_x) / det;
    Ok(Complex64::new(x, y))
}

/// Left-hand sides of the polar amplitude/phase stationarity conditions,
/// evaluated at `alpha = |a|`, `phi = -arg(a)`. Both vanish at a steady state.
pub fn polar_residual(
    state: &IntracavityState,
    delta: f64,
    drive: &Drive,
    params: &CavityParams,
) -> Result<(f64, f64)> {
    let rates = params.rates();
    let alpha = state.signal.norm();
    if alpha == 0.0 {
        return Err(ModelError::DegeneratePhase);
    }
    let phi = -state.signal.arg();
    let gb = drive.parametric_gain(&rates);
    let drive_amp = (2.0 * rates.input).sqrt() * drive.seed_amplitude();
    let rel = phi - drive.seed_phase();
    let r1 = -rates.total * alpha + gb * alpha * (2.0 * phi).cos() + drive_amp * rel.cos();
    let r2 = -params.tau() * delta * alpha + gb * alpha * (2.0 * phi).sin() + drive_amp * rel.sin();
    Ok((r1, r2))
}

/// Steady state of the coupled signal/idler equations. The idler detuning
/// follows from `delta + delta_i = -2 Omega`.
pub fn solve_nondegenerate(delta: f64, drive: &Drive, params: &CavityParams) -> Result<IntracavityState> {
    let rates = checked_rates(params)?;
    let r = drive.pump_ratio();
    if r >= 1.0 {
        return Err(ModelError::AboveThreshold(r));
    }
    let tau = params.tau();
    let delta_idler = -2.0 * drive.pump_offset() - delta;
    let gb = Complex64::new(drive.parametric_gain(&rates), 0.0);
    let source = (2.0 * rates.input).sqrt() * drive.seed_field();

    // Unknowns (a, b = conj(a_i)):
    //   (i tau delta + gamma) a - gb b = source
    //   gb a + (i tau delta_i - gamma) b = 0
    let m11 = Complex64::new(rates.total, tau * delta);
    let m12 = -gb;
    let m21 = gb;
    let m22 = Complex64::new(-rates.total, tau * delta_idler);
    let det = m11 * m22 - m12 * m21;
    if det.norm() <= f64::EPSILON * rates.total * rates.total {
        return Err(ModelError::Singular(det.norm()));
    }
    let signal = source * m22 / det;
    let idler_conj = -m21 * source / det;
    Ok(IntracavityState { signal, idler: idler_conj.conj(), frame: Frame::Seed })
}

/// Closed-form transmitted signal and idler amplitudes for `Omega = 0`.
pub fn closed_form_outputs(
    delta: f64,
    drive: &Drive,
    params: &CavityParams,
) -> Result<(Complex64, Complex64)> {
    if drive.pump_offset() != 0.0 {
        return Err(ModelError::NonzeroPumpOffset(drive.pump_offset()));
    }
    let rates = checked_rates(params)?;
    let r = drive.pump_ratio();
    if r >= 1.0 {
        return Err(ModelError::AboveThreshold(r));
    }
    let gb = drive.parametric_gain(&rates);
    let pref = 2.0 * (rates.coupling * rates.input).sqrt();
    let a_in = drive.seed_field();
    let z = Complex64::new(rates.total, params.tau() * delta);
    let signal = pref * a_in / (z - gb * gb / z);
    let zc = z.conj();
    let idler = pref * gb * a_in.conj() / (zc * zc - gb * gb);
    Ok((signal, idler))
}

/// Input-output boundary conditions at both mirrors.
pub fn output_fields(state: &IntracavityState, drive: &Drive, params: &CavityParams) -> OutputFields {
    let rates = params.rates();
    let out = (2.0 * rates.coupling).sqrt();
    OutputFields {
        transmitted: out * state.signal,
        reflected: -drive.seed_field() + (2.0 * rates.input).sqrt() * state.signal,
        idler_transmitted: out * state.idler,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn defaults() -> (CavityParams, DecayRates) {
        let p = CavityParams::default();
        (p, p.rates())
    }

    #[test]
    fn empty_cavity_resonance() {
        let (p, _) = defaults();
        let a = empty_cavity_output(0.0, &p, 1.0).unwrap();
        // 2 sqrt(0.0165 * 0.001) / 0.0212
        assert_relative_eq!(a.re, 0.38321, max_relative = 2e-5);
        assert_eq!(a.im, 0.0);
        assert_eq!(empty_cavity_output(0.3e7, &p, 0.0).unwrap().norm(), 0.0);
    }

    #[test]
    fn empty_cavity_half_width() {
        let p = CavityParams::new(0.01, 0.02, 0.005, 1.0).unwrap();
        let g = p.rates().total;
        let peak = empty_cavity_output(0.0, &p, 1.0).unwrap().norm_sqr();
        let half = empty_cavity_output(g, &p, 1.0).unwrap().norm_sqr();
        assert_relative_eq!(half, 0.5 * peak, max_relative = 1e-14);
    }

    #[test]
    fn degenerate_hand_solutions() {
        let (p, r) = defaults();
        let k = (2.0 * r.input).sqrt();
        let d = Drive::degenerate(0.5, 1.0, FRAC_PI_2).unwrap();
        let a = solve_degenerate(0.0, &d, &p).unwrap().signal;
        assert!(a.re.abs() < 1e-14);
        assert_relative_eq!(a.im, -k / (1.5 * r.total), max_relative = 1e-13);

        let d = Drive::degenerate(0.9, 1.0, 0.0).unwrap();
        let a = solve_degenerate(0.0, &d, &p).unwrap().signal;
        assert_relative_eq!(a.re, k / (0.1 * r.total), max_relative = 1e-12);
        assert!(a.im.abs() < 1e-12);
    }

    #[test]
    fn pump_off_is_empty_cavity() {
        let (p, r) = defaults();
        let d = Drive::degenerate(0.0, 1.0, 0.0).unwrap();
        for td in [-0.3, -0.02, 0.0, 0.01, 0.2] {
            let delta = td / p.tau();
            let a = solve_degenerate(delta, &d, &p).unwrap().signal;
            let want = (2.0 * r.input).sqrt() / Complex64::new(r.total, p.tau() * delta);
            assert_relative_eq!((a - want).norm(), 0.0, epsilon = 1e-13 * want.norm());
        }
    }

    #[test]
    fn above_threshold_rejected() {
        let (p, r) = defaults();
        let d = Drive::unchecked(1.0, 1.0, 0.0);
        assert!(matches!(degenerate_signal(0.0, &d, &r), Err(ModelError::AboveThreshold(_))));
        assert!(matches!(solve_nondegenerate(0.0, &d, &p), Err(ModelError::AboveThreshold(_))));
    }

    #[test]
    fn residual_vanishes_and_detects_perturbation() {
        let (p, r) = defaults();
        let d = Drive::degenerate(0.5, 1.0, FRAC_PI_4).unwrap();
        let s = solve_degenerate(0.0, &d, &p).unwrap();
        let (r1, r2) = polar_residual(&s, 0.0, &d, &p).unwrap();
        let scale = (2.0 * r.input).sqrt();
        assert!(r1.abs() < 1e-12 * scale && r2.abs() < 1e-12 * scale);

        let bumped = IntracavityState::degenerate(s.signal * 1.01, Frame::Seed);
        let (r1, r2) = polar_residual(&bumped, 0.0, &d, &p).unwrap();
        assert!(r1.hypot(r2) >= 1e-3 * r.total * s.signal.norm());

        let zero = IntracavityState::degenerate(Complex64::new(0.0, 0.0), Frame::Seed);
        assert_eq!(polar_residual(&zero, 0.0, &d, &p), Err(ModelError::DegeneratePhase));
    }

    #[test]
    fn residual_empty_cavity_exact() {
        let p = CavityParams::new(0.02, 0.02, 0.0, 1.0).unwrap();
        let r = p.rates();
        let d = Drive::degenerate(0.0, 1.0, 0.0).unwrap();
        let a = (2.0 * r.input).sqrt() / r.total;
        let s = IntracavityState::degenerate(Complex64::new(a, 0.0), Frame::Seed);
        assert_eq!(polar_residual(&s, 0.0, &d, &p).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn nondegenerate_pump_off_and_idler_ratio() {
        let (p, _) = defaults();
        let d = Drive::degenerate(0.0, 1.0, 0.3).unwrap();
        let delta = 0.01 / p.tau();
        let s = solve_nondegenerate(delta, &d, &p).unwrap();
        let empty =
            empty_cavity_output(delta, &p, 1.0).unwrap() * d.seed_field() / (2.0 * p.rates().coupling).sqrt();
        assert_relative_eq!((s.signal - empty).norm(), 0.0, epsilon = 1e-14);
        assert_eq!(s.idler.norm(), 0.0);

        let d = Drive::degenerate(0.5, 1.0, 0.3).unwrap();
        let s = solve_nondegenerate(0.0, &d, &p).unwrap();
        assert_relative_eq!(s.idler.norm(), 0.5 * s.signal.norm(), max_relative = 1e-13);
        // conj(a_i) = g beta a / gamma
        assert_relative_eq!((s.idler.conj() - 0.5 * s.signal).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn closed_form_matches_solver_at_linewidth() {
        let (p, r) = defaults();
        let d = Drive::degenerate(0.5, 1.0, 0.7).unwrap();
        let delta = r.total / p.tau();
        let s = solve_nondegenerate(delta, &d, &p).unwrap();
        let out = output_fields(&s, &d, &p);
        let (sig, idl) = closed_form_outputs(delta, &d, &p).unwrap();
        assert!((out.transmitted - sig).norm() <= 1e-12 * sig.norm());
        assert!((out.idler_transmitted - idl).norm() <= 1e-12 * idl.norm());
    }

    #[test]
    fn closed_form_values() {
        let (p, _) = defaults();
        let empty = empty_cavity_output(0.0, &p, 1.0).unwrap().norm_sqr();
        let d = Drive::degenerate(0.5, 1.0, 0.0).unwrap();
        let (sig, idl) = closed_form_outputs(0.0, &d, &p).unwrap();
        assert_relative_eq!(sig.norm_sqr() / empty, 1.0 / 0.5625, max_relative = 1e-12);
        assert_relative_eq!(idl.norm_sqr() / empty, 0.25 / 0.5625, max_relative = 1e-12);

        let d0 = Drive::degenerate(0.0, 1.0, 0.0).unwrap();
        let (sig, idl) = closed_form_outputs(0.004 / p.tau(), &d0, &p).unwrap();
        let e = empty_cavity_output(0.004 / p.tau(), &p, 1.0).unwrap();
        assert_relative_eq!((sig - e).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(idl.norm(), 0.0);

        let (sig, idl) = closed_form_outputs(1e9 / p.tau(), &d, &p).unwrap();
        assert!(sig.norm() < 1e-10 && idl.norm() < 1e-18);

        let shifted = Drive::new(0.5, 1.0, 1.0, 0.0).unwrap();
        assert!(matches!(closed_form_outputs(0.0, &shifted, &p), Err(ModelError::NonzeroPumpOffset(_))));
    }

    #[test]
    fn boundary_conditions() {
        let (p, r) = defaults();
        let d = Drive::degenerate(0.0, 1.0, 0.0).unwrap();
        let zero = IntracavityState::degenerate(Complex64::new(0.0, 0.0), Frame::Seed);
        assert_eq!(output_fields(&zero, &d, &p).reflected, Complex64::new(-1.0, 0.0));

        let s = solve_degenerate(0.0, &d, &p).unwrap();
        let refl = output_fields(&s, &d, &p).reflected;
        assert_relative_eq!(refl.norm(), 1.0 - 2.0 * r.input / r.total, max_relative = 1e-13);
        assert_relative_eq!(refl.norm(), 0.90566, max_relative = 1e-5);

        let closed = CavityParams::new(0.002, 0.0, 0.01, 1.0).unwrap();
        let s = IntracavityState::degenerate(Complex64::new(0.3, -2.0), Frame::Seed);
        assert_eq!(output_fields(&s, &d, &closed).transmitted.norm(), 0.0);
    }

    proptest::proptest! {
        #[test]
        fn linear_in_seed_amplitude(
            k in 0.01..100.0f64,
            r in 0.0..0.95f64,
            phase in -3.2..3.2f64,
            td in -0.3..0.3f64,
        ) {
            let p = CavityParams::default();
            let delta = td / p.tau();
            let d1 = Drive::degenerate(r, 1.0, phase).unwrap();
            let dk = d1.with_seed_amplitude(k);
            let a1 = solve_degenerate(delta, &d1, &p).unwrap().signal;
            let ak = solve_degenerate(delta, &dk, &p).unwrap().signal;
            proptest::prop_assert!((ak - k * a1).norm() <= 1e-13 * k * a1.norm());

            let n1 = solve_nondegenerate(delta, &d1, &p).unwrap();
            let nk = solve_nondegenerate(delta, &dk, &p).unwrap();
            proptest::prop_assert!((nk.signal - k * n1.signal).norm() <= 1e-13 * k * n1.signal.norm());
            proptest::prop_assert!((nk.idler - k * n1.idler).norm() <= 1e-13 * k * n1.signal.norm());
        }

        #[test]
        fn nondegenerate_general_offset_is_stationary(
            r in 0.0..0.95f64,
            td in -0.3..0.3f64,
            to in -0.3..0.3f64,
        ) {
            let p = CavityParams::new(0.002, 0.033, 0.0074, 1.0).unwrap();
            let rates = p.rates();
            let d = Drive::new(r, to, 1.0, 0.4).unwrap();
            let s = solve_nondegenerate(td, &d, &p).unwrap();
            let gb = r * rates.total;
            let di = -2.0 * to - td;
            let src = (2.0 * rates.input).sqrt() * d.seed_field();
            let e1 = -Complex64::new(rates.total, td) * s.signal + gb * s.idler.conj() + src;
            let e2 = -Complex64::new(rates.total, di) * s.idler + gb * s.signal.conj();
            proptest::prop_assert!(e1.norm() < 1e-14);
            proptest::prop_assert!(e2.norm() < 1e-14);
        }
    }
}
