//! Steady state of the driven cavity–resonator system.
//!
//! With all time derivatives set to zero the mean fields satisfy
//! `a_s = E_p / (κ + i(Δ_p − λ Q_s))` and `Q_s = 2 λ |a_s|² / ω_n`, which
//! reduces to a cubic in the photon number `n_p = |a_s|²`:
//!
//! ```text
//! n_p [κ² + (Δ_p − ω_n α n_p)²] = |E_p|²,   α = 2λ²/ω_n²
//! ```
//!
//! Up to three non-negative roots exist (optical multistability). The cubic
//! is solved in the scaled variable `x = ω_n α n_p` (the static cavity pull,
//! rad/s) by a closed-form method followed by a damped-Newton polish.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{DriveConfig, SystemParams};
use crate::stability;

/// Relative residual every returned root must meet.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Two polished roots closer than this (relative) are treated as a double root.
const DEGENERACY_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhotonRoots {
    /// Ascending, non-negative.
    pub values: Vec<f64>,
    /// Set when two roots merged at a fold (saddle-node) point.
    pub degenerate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    OnlyRoot,
    Lower,
    Middle,
    Upper,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchSelection {
    /// Lowest dynamically stable root, falling back to the lowest root when
    /// none is stable. This is the branch reached by ramping the pump up
    /// from zero.
    #[default]
    Preferred,
    Lowest,
    Middle,
    Highest,
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub n_p: f64,
    /// `|a_s|`; the pump phase is rotated out so the amplitude is real.
    pub a_s: f64,
    /// Phase removed from the lab-frame amplitude, `a_lab = a_s e^{i phase}`.
    pub phase: f64,
    /// `2 λ n_p / ω_n`.
    pub q_s: f64,
    pub delta_p: f64,
    pub branch: Branch,
    pub dynamically_stable: bool,
    pub degenerate: bool,
}

impl SteadyState {
    /// Cavity detuning including the static mechanical pull, `Δ_p − λ Q_s`.
    pub fn effective_detuning(&self, params: &SystemParams) -> f64 {
        self.delta_p - params.lambda_c * self.q_s
    }

    pub fn lab_amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.a_s, self.phase)
    }
}

/// Evaluates `n[κ² + (Δ − s n)²] − E²` and the scale used for the residual bound.
fn cubic_residual(kappa: f64, delta_p: f64, shift: f64, e_sq: f64, n: f64) -> (f64, f64) {
    let d = delta_p - shift * n;
    let r = n * (kappa * kappa + d * d) - e_sq;
    (r, e_sq.max(kappa * kappa * n))
}

/// Real roots of `x³ + b x² + c x + d`, unpolished, unordered.
fn solve_real_cubic(b: f64, c: f64, d: f64) -> Vec<f64> {
    let b3 = b / 3.0;
    let p = c - b * b3;
    let q = 2.0 * b3 * b3 * b3 - b3 * c + d;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if disc > 0.0 {
        // one real root; choose the sign that avoids cancellation
        let s = disc.sqrt();
        let u = (-q / 2.0 - q.signum() * s).cbrt();
        let t = if u == 0.0 { 0.0 } else { u - p / (3.0 * u) };
        vec![t - b3]
    } else if p == 0.0 {
        vec![-b3]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - b3)
            .collect()
    }
}

/// Damped Newton on `f(x) = x[κ² + (Δ − x)²] − F`.
fn polish(kappa: f64, delta_p: f64, big_f: f64, mut x: f64) -> f64 {
    let f = |x: f64| x * (kappa * kappa + (delta_p - x).powi(2)) - big_f;
    let df = |x: f64| kappa * kappa + (delta_p - x) * (delta_p - 3.0 * x);
    x = x.max(0.0);
    let mut fx = f(x);
    for _ in 0..6 {
        let slope = df(x);
        if fx == 0.0 || slope == 0.0 {
            break;
        }
        let mut step = fx / slope;
        let mut improved = false;
        for _ in 0..30 {
            let cand = (x - step).max(0.0);
            let fc = f(cand);
            if fc.abs() < fx.abs() {
                x = cand;
                fx = fc;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    x
}

/// Bracketed bisection fallback on a monotone piece `[lo, hi]` of the cubic.
fn bisect(kappa: f64, delta_p: f64, big_f: f64, mut lo: f64, mut hi: f64) -> f64 {
    let f = |x: f64| x * (kappa * kappa + (delta_p - x).powi(2)) - big_f;
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Non-negative real roots of the photon-number cubic for a given detuning
/// and squared pump amplitude.
pub fn roots_for(params: &SystemParams, delta_p: f64, e_p_sq: f64) -> PhotonRoots {
    if e_p_sq == 0.0 {
        return PhotonRoots {
            values: vec![0.0],
            degenerate: false,
        };
    }
    let kappa = params.kappa;
    let s = params.kerr_shift();
    let big_f = s * e_p_sq;

    let mut xs: Vec<f64> =
        solve_real_cubic(-2.0 * delta_p, kappa * kappa + delta_p * delta_p, -big_f)
            .into_iter()
            .map(|x| polish(kappa, delta_p, big_f, x))
            .collect();
    xs.sort_by(f64::total_cmp);

    // Any real root is positive (f < 0 for x <= 0 when F > 0). If polishing
    // failed to meet the bound, fall back to bracketing on monotone pieces.
    let ok = |x: f64| {
        let (r, scale) = cubic_residual(kappa, delta_p, s, e_p_sq, x / s);
        r.abs() <= RESIDUAL_TOL * scale
    };
    if !xs.iter().all(|&x| ok(x)) {
        xs = bracket_roots(kappa, delta_p, big_f);
    }

    // A double root at a fold can be lost to rounding in the discriminant;
    // a critical point that satisfies the cubic is such a root.
    let cd = delta_p * delta_p - 3.0 * kappa * kappa;
    if cd > 0.0 {
        for xc in [
            (2.0 * delta_p - cd.sqrt()) / 3.0,
            (2.0 * delta_p + cd.sqrt()) / 3.0,
        ] {
            let near = xs.iter().any(|&x| (x - xc).abs() <= 1e-4 * xc);
            if xc > 0.0 && !near && ok(xc) {
                xs.push(xc);
                xs.push(xc);
            }
        }
        xs.sort_by(f64::total_cmp);
    }

    let mut degenerate = false;
    let mut merged: Vec<f64> = Vec::with_capacity(3);
    for x in xs {
        match merged.last() {
            Some(&prev) if (x - prev).abs() <= DEGENERACY_TOL * x.abs().max(prev.abs()) => {
                degenerate = true;
            }
            _ => merged.push(x),
        }
    }
    PhotonRoots {
        values: merged.into_iter().map(|x| x / s).collect(),
        degenerate,
    }
}

fn bracket_roots(kappa: f64, delta_p: f64, big_f: f64) -> Vec<f64> {
    let f = |x: f64| x * (kappa * kappa + (delta_p - x).powi(2)) - big_f;
    // critical points of f: 3x² − 4Δx + Δ² + κ² = 0
    let disc = 4.0 * delta_p * delta_p - 3.0 * (delta_p * delta_p + kappa * kappa);
    let mut edges = vec![0.0];
    if disc > 0.0 {
        let r = disc.sqrt();
        edges.push((2.0 * delta_p - r) / 3.0);
        edges.push((2.0 * delta_p + r) / 3.0);
    }
    // f(x) >= x κ² - F, so all roots lie below F/κ²; also beyond the last
    // critical point f is increasing.
    let last = *edges.last().unwrap();
    let mut hi = (big_f / (kappa * kappa)).max(last) * 2.0 + 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    edges.push(hi);
    edges.retain(|&e| e >= 0.0);
    edges
        .windows(2)
        .filter(|w| (f(w[0]) <= 0.0) != (f(w[1]) <= 0.0) || f(w[1]) == 0.0)
        .map(|w| {
            polish(
                kappa,
                delta_p,
                big_f,
                bisect(kappa, delta_p, big_f, w[0], w[1]),
            )
        })
        .collect()
}

/// All physical (real, non-negative) photon-number roots, ascending.
pub fn photon_number_roots(params: &SystemParams, drive: &DriveConfig) -> PhotonRoots {
    roots_for(params, drive.delta_p, drive.e_p * drive.e_p)
}

/// Pump power that yields `n_p` intracavity photons at detuning `delta_p`:
/// the cubic read backwards, `P = n_p[κ² + (Δ_p − ω_n α n_p)²] ħ ω_p / 2κ`.
pub fn pump_power_for_photons(params: &SystemParams, delta_p: f64, n_p: f64) -> f64 {
    let d = delta_p - params.kerr_shift() * n_p;
    let e_sq = n_p * (params.kappa * params.kappa + d * d);
    crate::params::power_from_amplitude(e_sq.sqrt(), params.omega_c - delta_p, params.kappa)
}

fn build_state(
    params: &SystemParams,
    drive: &DriveConfig,
    n_p: f64,
    branch: Branch,
    degenerate: bool,
) -> SteadyState {
    let q_s = 2.0 * params.lambda_c * n_p / params.omega_n;
    let denom = Complex64::new(params.kappa, drive.delta_p - params.lambda_c * q_s);
    let lab = drive.pump_field() / denom;
    let mut ss = SteadyState {
        n_p,
        a_s: n_p.sqrt(),
        phase: if n_p > 0.0 { lab.arg() } else { 0.0 },
        q_s,
        delta_p: drive.delta_p,
        branch,
        dynamically_stable: true,
        degenerate,
    };
    ss.dynamically_stable = stability::analyze(params, &ss).stable;
    ss
}

/// Steady states on the requested branch(es), ordered by photon number.
pub fn steady_state(
    params: &SystemParams,
    drive: &DriveConfig,
    selection: BranchSelection,
) -> Result<Vec<SteadyState>> {
    let roots = photon_number_roots(params, drive);
    let n = roots.values.len();
    let branches: &[Branch] = match n {
        1 => &[Branch::OnlyRoot],
        2 => &[Branch::Lower, Branch::Upper],
        _ => &[Branch::Lower, Branch::Middle, Branch::Upper],
    };
    let all: Vec<SteadyState> = roots
        .values
        .iter()
        .zip(branches)
        .map(|(&n_p, &b)| build_state(params, drive, n_p, b, roots.degenerate))
        .collect();

    Ok(match selection {
        BranchSelection::All => all,
        BranchSelection::Lowest => vec![all[0].clone()],
        BranchSelection::Highest => vec![all[n - 1].clone()],
        BranchSelection::Middle => {
            if n != 3 {
                return Err(Error::NoSuchBranch {
                    requested: "middle",
                    available: n,
                });
            }
            vec![all[1].clone()]
        }
        BranchSelection::Preferred => {
            let pick = all.iter().find(|s| s.dynamically_stable).unwrap_or(&all[0]);
            vec![pick.clone()]
        }
    })
}

/// The single steady state picked by `selection` (which must not be `All`).
pub fn steady_state_one(
    params: &SystemParams,
    drive: &DriveConfig,
    selection: BranchSelection,
) -> Result<SteadyState> {
    let sel = if selection == BranchSelection::All {
        BranchSelection::Preferred
    } else {
        selection
    };
    Ok(steady_state(params, drive, sel)?.remove(0))
}
