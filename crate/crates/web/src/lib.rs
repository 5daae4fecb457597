//! Browser bindings for the interactive demo in `www/`.
//!
//! Each function returns flat `f64` arrays (or a JSON string) so the page
//! can plot them without a serialization layer. Powers are in pW, detunings
//! in rad/s. The functions are ordinary Rust functions off-wasm, which is how
//! the tests exercise them.

use emtransistor::linear_response::{gain_curve_at, DetuningGrid};
use emtransistor::prelude::*;
use emtransistor::stability::analyze;
use wasm_bindgen::prelude::*;

const PW: f64 = 1e-12;

fn delta_p(params: &SystemParams, blue: bool) -> f64 {
    if blue {
        -params.omega_n
    } else {
        params.omega_n
    }
}

fn normalization(name: &str) -> Normalization {
    name.parse().unwrap_or_default()
}

/// Transmission spectrum. Returns `[Δs₀..Δsₙ, |t₀|²..|tₙ|²]` (length `2n`).
/// A non-positive `half_span` picks the span automatically.
#[wasm_bindgen]
pub fn spectrum(
    pump_power_pw: f64,
    blue: bool,
    half_span: f64,
    points: usize,
    norm: &str,
) -> Vec<f64> {
    let params = SystemParams::reference();
    let dp = delta_p(&params, blue);
    let points = points.clamp(2, 20_001);
    let Ok(drive) = DriveConfig::new(&params, pump_power_pw.max(0.0) * PW, 0.0, dp, dp) else {
        return Vec::new();
    };
    let n = photon_number_roots(&params, &drive).values[0];
    let grid = if half_span > 0.0 {
        DetuningGrid {
            center: 0.0,
            half_span,
            points,
        }
    } else {
        DetuningGrid::auto(&params, n, points)
    }
    .values();
    match sweep_spectrum(&params, &drive, &grid, normalization(norm)) {
        Ok(s) => grid
            .iter()
            .copied()
            .chain(s.points.iter().map(|p| p.transmission))
            .collect(),
        Err(_) => Vec::new(),
    }
}

/// Resonant transmission versus pump power from 0 to `p_max_pw`. Returns
/// `[P₀..Pₙ (pW), gain₀..gainₙ, stable₀..stableₙ (1/0)]`.
#[wasm_bindgen]
pub fn gain_curve(p_max_pw: f64, points: usize, blue: bool, norm: &str) -> Vec<f64> {
    let params = SystemParams::reference();
    let points = points.clamp(2, 2001);
    let p_max = p_max_pw.max(1e-6);
    let powers: Vec<f64> = (0..points)
        .map(|i| p_max * PW * i as f64 / (points - 1) as f64)
        .collect();
    match gain_curve_at(
        &params,
        &powers,
        delta_p(&params, blue),
        0.0,
        normalization(norm),
    ) {
        Ok(curve) => powers
            .iter()
            .map(|p| p / PW)
            .chain(curve.iter().map(|g| g.gain))
            .chain(curve.iter().map(|g| f64::from(u8::from(g.stable))))
            .collect(),
        Err(_) => Vec::new(),
    }
}

/// Operating point summary as a JSON object: photon number, cooperativity,
/// stability and the least-damped eigenvalue.
#[wasm_bindgen]
pub fn operating_point(pump_power_pw: f64, blue: bool) -> String {
    let params = SystemParams::reference();
    let dp = delta_p(&params, blue);
    let result = DriveConfig::new(&params, pump_power_pw.max(0.0) * PW, 0.0, dp, dp)
        .and_then(|d| steady_state_one(&params, &d, BranchSelection::Preferred));
    match result {
        Ok(ss) => {
            let report = analyze(&params, &ss);
            format!(
                concat!(
                    "{{\"n_p\":{:e},\"cooperativity\":{:e},\"stable\":{},",
                    "\"max_re_eigenvalue\":{:e},\"effective_damping\":{:e}}}"
                ),
                ss.n_p,
                cooperativity(&params, ss.n_p),
                report.stable,
                report.eigenvalues[0].re,
                report.effective_damping
            )
        }
        Err(e) => format!("{{\"error\":\"{e}\"}}"),
    }
}
