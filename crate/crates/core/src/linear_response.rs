//! Small-signal response to the weak signal tone.
//!
//! Fluctuations around the steady state are expanded as
//! `δa = a₊ e^{−iδt} + a₋ e^{+iδt}` and `δQ = Q₊ e^{−iδt} + Q₊* e^{+iδt}`.
//! Two independent routes give `a₊`:
//!
//! - [`response_closed_form`]: the published rational expression in the
//!   auxiliary quantities `η, α, β, θ` ([`ClosedFormTerms`]).
//! - [`response_direct_solve`]: the 3×3 complex linear system obtained by
//!   matching `e^{∓iδt}` coefficients in the linearised equations of motion,
//!   solved numerically for `(a₊, a₋*, Q₊)`.
//!
//! The direct solve is the reference; sweeps keep both and report their
//! relative deviation.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{linspace, map_points, strictly_monotone};
use crate::params::{cooperativity, DriveConfig, SystemParams};
use crate::stability::{self, StabilityReport};
use crate::steady_state::{steady_state_one, BranchSelection, SteadyState};

/// Condition number of the nondimensionalised response matrix above which a
/// point is treated as a pole.
pub const POLE_CONDITION: f64 = 1e12;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormTerms {
    /// `ω_n² / (ω_n² − δ² − iγ_n δ)`
    pub eta: Complex64,
    /// `2λ²/ω_n²`
    pub alpha: f64,
    /// `α² η² ω_n² n_p²`
    pub beta: Complex64,
    /// `iα ω_n n_p (η + 1)`
    pub theta: Complex64,
}

impl ClosedFormTerms {
    pub fn new(params: &SystemParams, n_p: f64, delta: f64) -> Self {
        let wn = params.omega_n;
        let eta = Complex64::new(wn * wn, 0.0)
            / Complex64::new(wn * wn - delta * delta, -params.gamma_n * delta);
        let alpha = params.alpha();
        let aen = eta * (alpha * wn * n_p);
        Self {
            eta,
            alpha,
            beta: aen * aen,
            theta: I * (alpha * wn * n_p) * (eta + 1.0),
        }
    }
}

/// Probe amplitude used for the response: the configured signal, or a unit
/// probe when the signal power is zero (the transmission does not depend on it).
fn probe_amplitude(drive: &DriveConfig) -> f64 {
    if drive.e_s > 0.0 {
        drive.e_s
    } else {
        1.0
    }
}

/// `a₊` from the closed-form expression
/// `a₊ = [i(δ+Δ_p) − (κ+θ)] / [(δ+iκ)² + (θ−iΔ_p)² + β] · E_s`.
pub fn response_closed_form(
    params: &SystemParams,
    drive: &DriveConfig,
    ss: &SteadyState,
) -> Result<Complex64> {
    let delta = drive.delta;
    let dp = drive.delta_p;
    let t = ClosedFormTerms::new(params, ss.n_p, delta);
    let num = I * (delta + dp) - (params.kappa + t.theta);
    let p1 = (Complex64::new(delta, params.kappa)).powi(2);
    let p2 = (t.theta - I * dp).powi(2);
    let den = p1 + p2 + t.beta;
    let scale = p1.norm() + p2.norm() + t.beta.norm();
    if !(den.norm() > 1e-12 * scale) {
        return Err(Error::Pole {
            delta,
            condition: scale / den.norm(),
        });
    }
    Ok(num / den * probe_amplitude(drive))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectSolution {
    pub a_plus: Complex64,
    pub a_minus: Complex64,
    pub q_plus: Complex64,
    /// Condition number of the nondimensionalised response matrix.
    pub condition: f64,
}

impl DirectSolution {
    /// `Q₋ = Q₊*`, so that `δQ(t)` is real.
    pub fn q_minus(&self) -> Complex64 {
        self.q_plus.conj()
    }

    /// `δQ(t) = Q₊ e^{−iδt} + Q₋ e^{+iδt}`.
    pub fn delta_q(&self, delta: f64, t: f64) -> Complex64 {
        let ph = Complex64::from_polar(1.0, -delta * t);
        self.q_plus * ph + self.q_minus() * ph.conj()
    }
}

/// The 3×3 response system for `(a₊, a₋*, Q₊)` in the lab frame.
fn response_matrix(params: &SystemParams, ss: &SteadyState, delta: f64) -> Matrix3<Complex64> {
    let k = params.kappa;
    let d = ss.effective_detuning(params);
    let wn = params.omega_n;
    let a = ss.lab_amplitude();
    let g = a * params.lambda_c;
    let mech = Complex64::new(wn * wn - delta * delta, -params.gamma_n * delta);
    let zero = Complex64::default();
    Matrix3::new(
        Complex64::new(k, d - delta),
        zero,
        -I * g,
        zero,
        Complex64::new(k, -d - delta),
        I * g.conj(),
        -2.0 * wn * g.conj(),
        -2.0 * wn * g,
        mech,
    )
}

/// Solves the linearised equations with the sideband ansatz directly.
pub fn response_direct_solve(
    params: &SystemParams,
    drive: &DriveConfig,
    ss: &SteadyState,
) -> Result<DirectSolution> {
    let delta = drive.delta;
    let mut m = response_matrix(params, ss, delta);
    let mut rhs = Vector3::new(
        Complex64::new(probe_amplitude(drive), 0.0),
        Complex64::default(),
        Complex64::default(),
    );

    // nondimensionalise: cavity rows by ω_n, mechanical row by ω_n²
    let wn = params.omega_n;
    for (r, scale) in [(0, wn), (1, wn), (2, wn * wn)] {
        for c in 0..3 {
            m[(r, c)] /= scale;
        }
        rhs[r] /= scale;
    }

    let sv = m.singular_values();
    let condition = sv.max() / sv.min();
    if !(condition <= POLE_CONDITION) {
        return Err(Error::Pole { delta, condition });
    }
    let y = m.lu().solve(&rhs).ok_or(Error::Pole { delta, condition })?;
    Ok(DirectSolution {
        a_plus: y[0],
        a_minus: y[1].conj(),
        q_plus: y[2],
        condition,
    })
}

/// Convention turning the intracavity sideband into a transmission coefficient.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `t = 1 − κ a₊/E_s`: a bare-cavity dip reaching zero on resonance.
    #[default]
    Critical,
    /// `t = 1 − √(2κ) a₊/E_s`, the expression taken at face value.
    Literal,
    /// `t = 1 − 2κ a₊/E_s`: an all-pass response for the bare cavity.
    SingleSided,
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "critical" => Ok(Self::Critical),
            "literal" => Ok(Self::Literal),
            "single-sided" => Ok(Self::SingleSided),
            other => Err(Error::Parse {
                key: "normalization".into(),
                reason: format!("expected critical, literal or single-sided, got `{other}`"),
            }),
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Critical => "critical",
            Self::Literal => "literal",
            Self::SingleSided => "single-sided",
        })
    }
}

pub fn transmission(
    a_plus: Complex64,
    e_s: f64,
    params: &SystemParams,
    normalization: Normalization,
) -> Complex64 {
    let c = match normalization {
        Normalization::Critical => params.kappa,
        Normalization::Literal => (2.0 * params.kappa).sqrt(),
        Normalization::SingleSided => 2.0 * params.kappa,
    };
    1.0 - c * a_plus / e_s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponsePoint {
    pub delta: f64,
    pub delta_s: f64,
    pub a_plus: Complex64,
    pub a_minus: Complex64,
    pub q_plus: Complex64,
    pub t_p: Complex64,
    pub transmission: f64,
    pub closed_form_a_plus: Complex64,
    /// `|a₊(closed form) − a₊(direct)| / |a₊(direct)|`
    pub closedform_deviation: f64,
    pub pole: bool,
}

/// One point of a spectrum from both routes.
pub fn response_point(
    params: &SystemParams,
    drive: &DriveConfig,
    ss: &SteadyState,
    normalization: Normalization,
) -> ResponsePoint {
    let nan = Complex64::new(f64::NAN, f64::NAN);
    let cf = response_closed_form(params, drive, ss).unwrap_or(nan);
    match response_direct_solve(params, drive, ss) {
        Ok(sol) => {
            let t_p = transmission(sol.a_plus, probe_amplitude(drive), params, normalization);
            ResponsePoint {
                delta: drive.delta,
                delta_s: drive.delta_s(),
                a_plus: sol.a_plus,
                a_minus: sol.a_minus,
                q_plus: sol.q_plus,
                t_p,
                transmission: t_p.norm_sqr(),
                closed_form_a_plus: cf,
                closedform_deviation: (cf - sol.a_plus).norm() / sol.a_plus.norm(),
                pole: false,
            }
        }
        Err(_) => ResponsePoint {
            delta: drive.delta,
            delta_s: drive.delta_s(),
            a_plus: nan,
            a_minus: nan,
            q_plus: nan,
            t_p: nan,
            transmission: f64::NAN,
            closed_form_a_plus: cf,
            closedform_deviation: f64::NAN,
            pole: true,
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub drive: DriveConfig,
    pub normalization: Normalization,
    pub steady: SteadyState,
    pub stability: StabilityReport,
    pub cooperativity: f64,
    pub points: Vec<ResponsePoint>,
}

impl Spectrum {
    pub fn max_deviation(&self) -> f64 {
        self.points
            .iter()
            .filter(|p| !p.pole)
            .map(|p| p.closedform_deviation)
            .fold(0.0, f64::max)
    }

    pub fn flagged(&self) -> usize {
        self.points.iter().filter(|p| p.pole).count()
    }
}

/// Transmission spectrum over signal–cavity detunings `Δ_s` (rad/s) on the
/// preferred steady-state branch.
pub fn sweep_spectrum(
    params: &SystemParams,
    drive: &DriveConfig,
    delta_s_grid: &[f64],
    normalization: Normalization,
) -> Result<Spectrum> {
    sweep_spectrum_on(
        params,
        drive,
        delta_s_grid,
        normalization,
        BranchSelection::Preferred,
    )
}

pub fn sweep_spectrum_on(
    params: &SystemParams,
    drive: &DriveConfig,
    delta_s_grid: &[f64],
    normalization: Normalization,
    selection: BranchSelection,
) -> Result<Spectrum> {
    if !strictly_monotone(delta_s_grid) {
        return Err(Error::BadGrid);
    }
    let steady = steady_state_one(params, drive, selection)?;
    let stability = stability::analyze(params, &steady);
    let drives = delta_s_grid
        .iter()
        .map(|&ds| drive.with_delta(params, drive.delta_p + ds))
        .collect::<Result<Vec<_>>>()?;
    let points = map_points(&drives, |d| {
        response_point(params, d, &steady, normalization)
    });
    Ok(Spectrum {
        drive: drive.clone(),
        normalization,
        cooperativity: cooperativity(params, steady.n_p),
        steady,
        stability,
        points,
    })
}

/// Uniform grid of signal–cavity detunings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetuningGrid {
    pub center: f64,
    pub half_span: f64,
    pub points: usize,
}

pub const DEFAULT_POINTS: usize = 2001;

impl DetuningGrid {
    pub fn values(&self) -> Vec<f64> {
        linspace(
            self.center - self.half_span,
            self.center + self.half_span,
            self.points,
        )
    }

    /// Span covering the mechanically induced feature: 50 linewidths
    /// `γ_n(1 + C)`, capped at three times the larger of `κ` and the
    /// normal-mode splitting `2G` once that is the wider scale.
    pub fn auto(params: &SystemParams, n_p: f64, points: usize) -> Self {
        let c = cooperativity(params, n_p);
        let g = params.lambda_c * n_p.sqrt();
        let mech = 50.0 * params.gamma_n * (1.0 + c);
        let optical = 3.0 * params.kappa.max(2.0 * g);
        Self {
            center: 0.0,
            half_span: mech.min(optical),
            points,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainPoint {
    pub pump_power: f64,
    pub n_p: f64,
    pub cooperativity: f64,
    pub t_p: Complex64,
    /// `|t_p|²`
    pub gain: f64,
    pub stable: bool,
}

/// Transistor characteristic: `|t_p|²` versus pump power for a signal on
/// cavity resonance (`Δ_s = 0`) with the pump on the blue sideband
/// (`Δ_p = −ω_n`, so `|δ| = ω_n`).
pub fn gain_curve(
    params: &SystemParams,
    powers: &[f64],
    normalization: Normalization,
) -> Result<Vec<GainPoint>> {
    gain_curve_at(params, powers, -params.omega_n, 0.0, normalization)
}

fn gain_point(
    params: &SystemParams,
    power: f64,
    delta_p: f64,
    delta_s: f64,
    normalization: Normalization,
) -> Result<GainPoint> {
    let drive = DriveConfig::new(params, power, 0.0, delta_p, delta_p + delta_s)?;
    let ss = steady_state_one(params, &drive, BranchSelection::Lowest)?;
    let t_p = match response_direct_solve(params, &drive, &ss) {
        Ok(sol) => transmission(sol.a_plus, probe_amplitude(&drive), params, normalization),
        Err(_) => Complex64::new(f64::NAN, f64::NAN),
    };
    Ok(GainPoint {
        pump_power: power,
        n_p: ss.n_p,
        cooperativity: cooperativity(params, ss.n_p),
        t_p,
        gain: t_p.norm_sqr(),
        stable: ss.dynamically_stable,
    })
}

pub fn gain_curve_at(
    params: &SystemParams,
    powers: &[f64],
    delta_p: f64,
    delta_s: f64,
    normalization: Normalization,
) -> Result<Vec<GainPoint>> {
    if powers.is_empty() || !powers.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::BadGrid);
    }
    map_points(powers, |&p| {
        gain_point(params, p, delta_p, delta_s, normalization)
    })
    .into_iter()
    .collect()
}

/// Pump power at which the resonant gain crosses unity, by bisection within
/// `bracket` (W).
pub fn unity_gain_power(
    params: &SystemParams,
    delta_p: f64,
    normalization: Normalization,
    bracket: (f64, f64),
) -> Result<f64> {
    let excess = |p: f64| gain_point(params, p, delta_p, 0.0, normalization).map(|g| g.gain - 1.0);
    let (mut lo, mut hi) = bracket;
    let flo = excess(lo)?;
    if (flo > 0.0) == (excess(hi)? > 0.0) {
        return Err(Error::NoThreshold { lo, hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (excess(mid)? > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-9 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady_state::BranchSelection;

    fn setup(power: f64, delta_p: f64, delta: f64) -> (SystemParams, DriveConfig, SteadyState) {
        let p = SystemParams::reference();
        let d = DriveConfig::new(&p, power, 1e-18, delta_p, delta).unwrap();
        let ss = steady_state_one(&p, &d, BranchSelection::Preferred).unwrap();
        (p, d, ss)
    }

    #[test]
    fn closed_form_terms_identities() {
        let p = SystemParams::reference();
        let t = ClosedFormTerms::new(&p, 500.0, 0.0);
        assert_eq!(t.eta, Complex64::new(1.0, 0.0));
        for &delta in &[0.0, 1e3, p.omega_n, -p.omega_n + 20.0] {
            let t = ClosedFormTerms::new(&p, 500.0, delta);
            let x = t.alpha * t.eta * p.omega_n * 500.0;
            assert!((t.beta - x * x).norm() <= 1e-15 * t.beta.norm());
        }
    }

    #[test]
    fn pump_off_reduces_to_bare_cavity() {
        let p = SystemParams::reference();
        for &dp in &[-p.omega_n, 0.0, p.omega_n] {
            for &ds in &[-5e6, -1e4, 0.0, 37.0, 2e6] {
                let (_, d, ss) = setup(0.0, dp, dp + ds);
                let bare = d.e_s / Complex64::new(p.kappa, dp - d.delta);
                let cf = response_closed_form(&p, &d, &ss).unwrap();
                let ds_sol = response_direct_solve(&p, &d, &ss).unwrap();
                assert!((cf - bare).norm() <= 1e-12 * bare.norm());
                assert!((ds_sol.a_plus - bare).norm() <= 1e-12 * bare.norm());
                assert_eq!(ds_sol.a_minus, Complex64::default());
                assert_eq!(ds_sol.q_plus, Complex64::default());
            }
        }
    }

    #[test]
    fn normalizations_with_pump_off() {
        let p = SystemParams::reference();
        let (_, d, ss) = setup(0.0, -p.omega_n, -p.omega_n);
        let a = response_direct_solve(&p, &d, &ss).unwrap().a_plus;
        assert!(transmission(a, d.e_s, &p, Normalization::Critical).norm() < 1e-15);
        for &ds in &[-3e6, -100.0, 0.0, 4e5, 1e7] {
            let (_, d, ss) = setup(0.0, -p.omega_n, -p.omega_n + ds);
            let a = response_direct_solve(&p, &d, &ss).unwrap().a_plus;
            let crit = transmission(a, d.e_s, &p, Normalization::Critical).norm_sqr();
            let expect = ds * ds / (p.kappa * p.kappa + ds * ds);
            assert!((crit - expect).abs() <= 1e-12 * expect.max(1e-300) + 1e-30);
            let ss_t = transmission(a, d.e_s, &p, Normalization::SingleSided).norm_sqr();
            assert!((ss_t - 1.0).abs() < 1e-12);
            let lit = transmission(a, d.e_s, &p, Normalization::Literal);
            let expect_lit = 1.0 - (2.0 * p.kappa).sqrt() / Complex64::new(p.kappa, -ds);
            assert!((lit - expect_lit).norm() < 1e-12);
        }
    }

    #[test]
    fn routes_agree_on_blue_sideband() {
        let p = SystemParams::reference();
        for &power in &[0.3e-12, 0.5e-12, 0.9e-12] {
            for i in 0..=40 {
                let ds = -200.0 + 10.0 * i as f64;
                let (_, d, ss) = setup(power, -p.omega_n, -p.omega_n + ds);
                let cf = response_closed_form(&p, &d, &ss).unwrap();
                let dsol = response_direct_solve(&p, &d, &ss).unwrap();
                let dev = (cf - dsol.a_plus).norm() / dsol.a_plus.norm();
                assert!(dev < 1e-8, "P = {power}, Δs = {ds}: {dev:e}");
            }
        }
    }

    #[test]
    fn attenuation_and_amplification_on_resonance() {
        let p = SystemParams::reference();
        let (_, d0, s0) = setup(0.0, -p.omega_n, -p.omega_n);
        let bare = response_closed_form(&p, &d0, &s0).unwrap().norm();
        let (_, d, s) = setup(0.3e-12, -p.omega_n, -p.omega_n);
        let a03 = response_closed_form(&p, &d, &s).unwrap().norm();
        let (_, d, s) = setup(0.9e-12, -p.omega_n, -p.omega_n);
        let a09 = response_closed_form(&p, &d, &s).unwrap().norm();
        // the intracavity sideband grows with pump: 1/(κ(1 − C/2))
        assert!(a03 > bare && a09 > a03);
        let (_, d, s) = setup(0.3e-12, -p.omega_n, -p.omega_n);
        let c = cooperativity(&p, s.n_p);
        let rwa = d.e_s / (p.kappa * (1.0 - c / 2.0));
        assert!((a03 - rwa).abs() / rwa < 0.01);
    }

    #[test]
    fn mechanical_sideband_peaks_at_resonance() {
        let p = SystemParams::reference();
        for &dp in &[p.omega_n, -p.omega_n] {
            let grid: Vec<f64> = (0..=2000)
                .map(|i| p.omega_n - 50.0 * p.gamma_n + 0.05 * p.gamma_n * i as f64)
                .collect();
            let best = grid
                .iter()
                .map(|&delta| {
                    let (_, d, ss) = setup(0.3e-12, dp, delta);
                    (
                        delta,
                        response_direct_solve(&p, &d, &ss).unwrap().q_plus.norm(),
                    )
                })
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert!(
                (best.0 - p.omega_n).abs() <= 2.0 * p.gamma_n,
                "Δ_p = {dp}: peak at δ − ω_n = {}",
                best.0 - p.omega_n
            );
        }
    }

    #[test]
    fn mechanical_motion_is_real() {
        let p = SystemParams::reference();
        let (_, d, ss) = setup(0.5e-12, -p.omega_n, -p.omega_n + 3.0);
        let sol = response_direct_solve(&p, &d, &ss).unwrap();
        for i in 0..100 {
            let t = i as f64 * 1.3e-9;
            let q = sol.delta_q(d.delta, t);
            assert!(q.im.abs() <= 1e-14 * sol.q_plus.norm());
        }
    }

    #[test]
    fn pump_phase_leaves_transmission_unchanged() {
        let p = SystemParams::reference();
        let (_, d, _) = setup(0.5e-12, -p.omega_n, -p.omega_n + 5.0);
        let grid: Vec<f64> = (0..51).map(|i| -50.0 + 2.0 * i as f64).collect();
        let base = sweep_spectrum(&p, &d, &grid, Normalization::Critical).unwrap();
        let rot = sweep_spectrum(
            &p,
            &d.clone().with_pump_phase(2.1),
            &grid,
            Normalization::Critical,
        )
        .unwrap();
        for (a, b) in base.points.iter().zip(&rot.points) {
            assert!((a.transmission - b.transmission).abs() <= 1e-12 * a.transmission);
        }
    }

    #[test]
    fn spectrum_rejects_bad_grid() {
        let p = SystemParams::reference();
        let (_, d, _) = setup(0.3e-12, -p.omega_n, -p.omega_n);
        assert_eq!(
            sweep_spectrum(&p, &d, &[], Normalization::Critical),
            Err(Error::BadGrid)
        );
        assert_eq!(
            sweep_spectrum(&p, &d, &[0.0, 1.0, 1.0], Normalization::Critical),
            Err(Error::BadGrid)
        );
    }

    #[test]
    fn pole_is_flagged_not_fatal() {
        // a practically lossless cavity has a pole at its bare resonance
        let mut p = SystemParams::reference();
        p.kappa = 1e-30;
        let d = DriveConfig::new(&p, 0.0, 1e-18, 0.0, 0.0).unwrap();
        let ss = steady_state_one(&p, &d, BranchSelection::Lowest).unwrap();
        assert!(matches!(
            response_direct_solve(&p, &d, &ss),
            Err(Error::Pole { .. })
        ));
        let spec = sweep_spectrum(&p, &d, &[-1.0, 0.0, 1.0], Normalization::Critical).unwrap();
        assert!(spec.points[1].pole);
        assert!(spec.points[1].transmission.is_nan());
        assert!(!spec.points[0].pole);
        assert_eq!(spec.flagged(), 1);
    }

    #[test]
    fn gain_curve_shape() {
        let p = SystemParams::reference();
        let powers: Vec<f64> = (0..=24).map(|i| i as f64 * 0.05e-12).collect();
        let curve = gain_curve(&p, &powers, Normalization::Critical).unwrap();
        assert_eq!(curve[0].gain, 0.0);
        let stable: Vec<_> = curve.iter().filter(|g| g.stable).collect();
        assert!(stable.windows(2).all(|w| w[1].gain > w[0].gain));
        // resolved-sideband estimate of the resonant gain: (C/2)² / (1 − C/2)².
        // It ignores the Kerr shift of the effective detuning, which matters
        // more as the gain diverges.
        for g in stable.iter().filter(|g| g.cooperativity < 1.2) {
            let h = g.cooperativity / 2.0;
            let est = (h / (1.0 - h)).powi(2);
            assert!(
                (g.gain - est).abs() <= 0.04 * est.max(1e-3),
                "{g:?} vs {est}"
            );
        }
        assert!(gain_curve(&p, &[1.0, 0.5], Normalization::Critical).is_err());
    }

    #[test]
    fn auto_span_scales() {
        let p = SystemParams::reference();
        let narrow = DetuningGrid::auto(&p, 300.0, 11);
        assert!(narrow.half_span < 1e4);
        let wide = DetuningGrid::auto(&p, 9.6e6, 11);
        assert!(wide.half_span > 2.0 * p.lambda_c * 9.6e6f64.sqrt());
        assert_eq!(wide.values().len(), 11);
    }
}
