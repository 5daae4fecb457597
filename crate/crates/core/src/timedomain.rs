//! Time-domain integration of the nonlinear mean-field equations and
//! demodulation of the resulting trace.
//!
//! In the frame rotating at the pump frequency, without noise:
//!
//! ```text
//! ȧ = −(iΔ_p + κ) a + iλ a Q + E_p + E_s e^{−iδt}
//! Q̈ + γ_n Q̇ + ω_n² Q = 2 ω_n λ |a|²
//! ```
//!
//! The state `(Re a, Im a, Q, Q̇)` is integrated with an adaptive
//! Dormand–Prince 5(4) scheme. The signal sidebands are then recovered by a
//! least-squares fit of `c₀ + c₊ e^{−iδt} + c₋ e^{+iδt}` over a trailing
//! window, which gives an estimate of `a₊` independent of the linearisation.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::map_points;
use crate::linear_response::response_direct_solve;
use crate::params::{DriveConfig, SystemParams};
use crate::steady_state::{photon_number_roots, steady_state_one, BranchSelection};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions {
    /// Relative local error per step.
    pub rtol: f64,
    /// Output sample spacing, s. Defaults to `0.05 / max(ω_n, |Δ_p|, κ, |δ|)`.
    pub sample_dt: Option<f64>,
    /// `|a|` beyond this multiple of the steady amplitude counts as escape.
    pub escape_factor: f64,
    pub max_steps: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            sample_dt: None,
            escape_factor: 1e6,
            max_steps: 200_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub a: Complex64,
    pub q: f64,
    pub q_dot: f64,
}

/// Uniformly sampled trajectory. `q` and `q_dot` are stored as reals.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeTrace {
    pub t: Vec<f64>,
    pub a: Vec<Complex64>,
    pub q: Vec<f64>,
    pub q_dot: Vec<f64>,
    /// Time at which `|a|` crossed the escape threshold, if it did; the
    /// trace ends there.
    pub escaped_at: Option<f64>,
    pub steps: usize,
}

impl TimeTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// CSV rows `t,re_a,im_a,q,q_dot`, keeping every `decimate`-th sample.
    pub fn to_csv(&self, decimate: usize) -> String {
        let mut s = String::from("t,re_a,im_a,q,q_dot\n");
        for i in (0..self.len()).step_by(decimate.max(1)) {
            s.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e}\n",
                self.t[i], self.a[i].re, self.a[i].im, self.q[i], self.q_dot[i]
            ));
        }
        s
    }
}

type State = [f64; 4];

struct Model {
    kappa: f64,
    delta_p: f64,
    lambda: f64,
    omega_n: f64,
    gamma_n: f64,
    pump: Complex64,
    e_s: f64,
    delta: f64,
}

impl Model {
    fn rhs(&self, t: f64, y: &State) -> State {
        let a = Complex64::new(y[0], y[1]);
        let q = y[2];
        let (s, c) = (self.delta * t).sin_cos();
        let drive = self.pump + Complex64::new(self.e_s * c, -self.e_s * s);
        let da = Complex64::new(-self.kappa, -self.delta_p + self.lambda * q) * a + drive;
        let ddq = -self.gamma_n * y[3] - self.omega_n * self.omega_n * q
            + 2.0 * self.omega_n * self.lambda * a.norm_sqr();
        [da.re, da.im, y[3], ddq]
    }
}

// Dormand–Prince 5(4) tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..4 {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// One Dormand–Prince step; returns (y_new, k7 = f(t+h, y_new), error vector).
fn dopri_step(m: &Model, t: f64, y: &State, k1: &State, h: f64) -> (State, State, State) {
    let k2 = m.rhs(t + C2 * h, &axpy(y, h, &[(A21, k1)]));
    let k3 = m.rhs(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = m.rhs(
        t + C4 * h,
        &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]),
    );
    let k5 = m.rhs(
        t + C5 * h,
        &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = m.rhs(
        t + h,
        &axpy(
            y,
            h,
            &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ),
    );
    let y_new = axpy(
        y,
        h,
        &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
    );
    let k7 = m.rhs(t + h, &y_new);
    let mut err = [0.0; 4];
    for i in 0..4 {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    (y_new, k7, err)
}

/// Default output spacing satisfying `dt · max(ω_n, |Δ_p|, κ, |δ|) = 0.05`.
pub fn default_sample_dt(params: &SystemParams, drive: &DriveConfig) -> f64 {
    let fastest = params
        .omega_n
        .max(drive.delta_p.abs())
        .max(params.kappa)
        .max(drive.delta.abs());
    0.05 / fastest
}

/// Integrates the mean-field equations from `initial` to `t_final`.
///
/// Escape beyond `escape_factor` times the steady amplitude ends the trace
/// early and is reported through [`TimeTrace::escaped_at`].
pub fn integrate(
    params: &SystemParams,
    drive: &DriveConfig,
    t_final: f64,
    initial: InitialState,
    opts: &IntegrationOptions,
) -> Result<TimeTrace> {
    if !(t_final > 0.0) {
        return Err(Error::Integration(format!(
            "t_final must be positive, got {t_final}"
        )));
    }
    let model = Model {
        kappa: params.kappa,
        delta_p: drive.delta_p,
        lambda: params.lambda_c,
        omega_n: params.omega_n,
        gamma_n: params.gamma_n,
        pump: drive.pump_field(),
        e_s: drive.e_s,
        delta: drive.delta,
    };
    let dt = opts
        .sample_dt
        .unwrap_or_else(|| default_sample_dt(params, drive));
    let n_samples = (t_final / dt).round() as usize + 1;

    let n_steady = *photon_number_roots(params, drive)
        .values
        .first()
        .unwrap_or(&0.0);
    let a_scale = n_steady
        .sqrt()
        .max(initial.a.norm())
        .max(drive.e_s / params.kappa)
        .max(1e-30);
    let q_scale = (2.0 * params.lambda_c * a_scale * a_scale / params.omega_n)
        .max(initial.q.abs())
        .max(initial.q_dot.abs() / params.omega_n)
        .max(1e-30);
    let atol = [
        opts.rtol * a_scale,
        opts.rtol * a_scale,
        opts.rtol * q_scale,
        opts.rtol * q_scale * params.omega_n,
    ];
    let escape = opts.escape_factor * a_scale;

    let mut trace = TimeTrace {
        t: Vec::with_capacity(n_samples),
        a: Vec::with_capacity(n_samples),
        q: Vec::with_capacity(n_samples),
        q_dot: Vec::with_capacity(n_samples),
        escaped_at: None,
        steps: 0,
    };
    let mut y: State = [initial.a.re, initial.a.im, initial.q, initial.q_dot];
    let mut t = 0.0;
    let mut k1 = model.rhs(t, &y);
    let mut h = dt / 4.0;
    let push = |trace: &mut TimeTrace, t: f64, y: &State| {
        trace.t.push(t);
        trace.a.push(Complex64::new(y[0], y[1]));
        trace.q.push(y[2]);
        trace.q_dot.push(y[3]);
    };
    push(&mut trace, 0.0, &y);

    for k in 1..n_samples {
        let target = k as f64 * dt;
        while t < target {
            let last = target - t <= h;
            let step = if last { target - t } else { h };
            let (y_new, k7, err) = dopri_step(&model, t, &y, &k1, step);
            let norm = (0..4)
                .map(|i| {
                    let sc = atol[i] + opts.rtol * y[i].abs().max(y_new[i].abs());
                    (err[i] / sc).powi(2)
                })
                .sum::<f64>()
                .sqrt()
                / 2.0;
            if !norm.is_finite() {
                return Err(Error::Integration(format!("non-finite state at t = {t:e}")));
            }
            let factor = (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0);
            if norm <= 1.0 {
                t = if last { target } else { t + step };
                y = y_new;
                k1 = k7;
                trace.steps += 1;
                if !last || factor < 1.0 {
                    h = step * factor;
                }
                if Complex64::new(y[0], y[1]).norm() > escape {
                    push(&mut trace, t, &y);
                    trace.escaped_at = Some(t);
                    return Ok(trace);
                }
            } else {
                h = step * factor;
            }
            if trace.steps > opts.max_steps {
                return Err(Error::Integration(format!(
                    "step limit {} reached at t = {t:e}",
                    opts.max_steps
                )));
            }
        }
        push(&mut trace, target, &y);
    }
    Ok(trace)
}

/// Initial state on the linear-response orbit: the steady state plus the
/// sideband ansatz evaluated at `t = 0`. Starting here avoids waiting out
/// the slow mechanical transient.
pub fn steady_ansatz_initial(params: &SystemParams, drive: &DriveConfig) -> Result<InitialState> {
    let ss = steady_state_one(params, drive, BranchSelection::Preferred)?;
    let mut init = InitialState {
        a: ss.lab_amplitude(),
        q: ss.q_s,
        q_dot: 0.0,
    };
    if drive.e_s > 0.0 {
        let sol = response_direct_solve(params, drive, &ss)?;
        init.a += sol.a_plus + sol.a_minus;
        init.q += 2.0 * sol.q_plus.re;
        init.q_dot += 2.0 * (Complex64::new(0.0, -drive.delta) * sol.q_plus).re;
    }
    Ok(init)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Demodulated {
    pub offset: Complex64,
    pub a_plus: Complex64,
    pub a_minus: Complex64,
    /// Relative change of the mean `|a|` between the two halves of the window.
    pub drift: f64,
}

/// Maximum envelope drift accepted by [`demodulate`].
pub const DRIFT_TOL: f64 = 1e-3;

/// Least-squares fit of `c₀ + c₊ e^{−iδt} + c₋ e^{+iδt}` to `a(t)` over the
/// trailing `window` fraction of the trace.
pub fn demodulate(trace: &TimeTrace, delta: f64, window: f64) -> Result<Demodulated> {
    let n = trace.len();
    if n < 3 {
        return Err(Error::Integration("trace too short to demodulate".into()));
    }
    // whole number of beat periods ending at the last sample
    let t_end = trace.t[n - 1];
    let mut span = window.clamp(0.0, 1.0) * (t_end - trace.t[0]);
    let period = 2.0 * PI / delta.abs();
    if delta != 0.0 && span >= period {
        span = (span / period).floor() * period;
    }
    let start = trace
        .t
        .partition_point(|&t| t < t_end - span * (1.0 + 1e-12));
    let idx = start.min(n - 3)..n;
    if idx.len() < 3 {
        return Err(Error::Integration("trace too short to demodulate".into()));
    }

    let half = idx.start + idx.len() / 2;
    let mean_abs = |r: std::ops::Range<usize>| {
        let len = r.len() as f64;
        r.map(|i| trace.a[i].norm()).sum::<f64>() / len
    };
    let m1 = mean_abs(idx.start..half);
    let m2 = mean_abs(half..n);
    let drift = if m1 + m2 > 0.0 {
        2.0 * (m2 - m1).abs() / (m1 + m2)
    } else {
        0.0
    };
    if drift > DRIFT_TOL {
        return Err(Error::NotConverged { drift });
    }

    let mut gram = Matrix3::<Complex64>::zeros();
    let mut rhs = Vector3::<Complex64>::zeros();
    for i in idx {
        let e = Complex64::from_polar(1.0, -delta * trace.t[i]);
        let basis = [Complex64::new(1.0, 0.0), e, e.conj()];
        for r in 0..3 {
            for c in 0..3 {
                gram[(r, c)] += basis[r].conj() * basis[c];
            }
            rhs[r] += basis[r].conj() * trace.a[i];
        }
    }
    let x = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Integration("singular demodulation basis".into()))?;
    Ok(Demodulated {
        offset: x[0],
        a_plus: x[1],
        a_minus: x[2],
        drift,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    /// Trace length in beat periods `2π/|δ|`.
    pub periods: f64,
    /// Trailing fraction used for demodulation.
    pub window: f64,
    pub integration: IntegrationOptions,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            periods: 400.0,
            window: 0.25,
            integration: IntegrationOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OraclePoint {
    pub delta: f64,
    pub delta_s: f64,
    pub direct: Complex64,
    pub demodulated: Option<Complex64>,
    /// Relative deviation of the demodulated `a₊`; NaN when flagged.
    pub deviation: f64,
    pub flag: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub points: Vec<OraclePoint>,
    pub max_deviation: f64,
    pub median_deviation: f64,
    pub flagged: usize,
}

fn oracle_point(
    params: &SystemParams,
    drive: &DriveConfig,
    opts: &OracleOptions,
) -> Result<OraclePoint> {
    let ss = steady_state_one(params, drive, BranchSelection::Preferred)?;
    let direct = response_direct_solve(params, drive, &ss)?.a_plus;
    let mut point = OraclePoint {
        delta: drive.delta,
        delta_s: drive.delta_s(),
        direct,
        demodulated: None,
        deviation: f64::NAN,
        flag: None,
    };
    if !ss.dynamically_stable {
        point.flag = Some("steady state unstable".into());
        return Ok(point);
    }
    let init = steady_ansatz_initial(params, drive)?;
    let period = 2.0 * PI / drive.delta.abs();
    let trace = integrate(
        params,
        drive,
        opts.periods * period,
        init,
        &opts.integration,
    )?;
    if let Some(t) = trace.escaped_at {
        point.flag = Some(format!("escaped at t = {t:e} s"));
        return Ok(point);
    }
    match demodulate(&trace, drive.delta, opts.window) {
        Ok(d) => {
            point.demodulated = Some(d.a_plus);
            point.deviation = (d.a_plus - direct).norm() / direct.norm();
        }
        Err(e) => point.flag = Some(e.to_string()),
    }
    Ok(point)
}

/// Compares demodulated time-domain sidebands with the direct linear solve
/// at each signal–pump detuning in `deltas`. Grid points run concurrently.
pub fn oracle_compare(
    params: &SystemParams,
    drive: &DriveConfig,
    deltas: &[f64],
    opts: &OracleOptions,
) -> Result<OracleReport> {
    let drives = deltas
        .iter()
        .map(|&d| drive.with_delta(params, d))
        .collect::<Result<Vec<_>>>()?;
    let points = map_points(&drives, |d| oracle_point(params, d, opts))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut devs: Vec<f64> = points
        .iter()
        .map(|p| p.deviation)
        .filter(|d| d.is_finite())
        .collect();
    devs.sort_by(f64::total_cmp);
    let median = if devs.is_empty() {
        f64::NAN
    } else if devs.len() % 2 == 1 {
        devs[devs.len() / 2]
    } else {
        0.5 * (devs[devs.len() / 2 - 1] + devs[devs.len() / 2])
    };
    Ok(OracleReport {
        max_deviation: devs.last().copied().unwrap_or(f64::NAN),
        median_deviation: median,
        flagged: points.iter().filter(|p| p.flag.is_some()).count(),
        points,
    })
}
