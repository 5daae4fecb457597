//! Dynamical stability of steady states.
//!
//! Fluctuations around a steady state obey the linearised equations of
//! motion. Written in the real quadratures `(Re δa, Im δa, δQ, δQ̇)` of the
//! phase-referenced frame they form a 4×4 real drift matrix; the state is
//! stable when all its eigenvalues have negative real part.

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{cooperativity, DriveConfig, SystemParams};
use crate::steady_state::{self, BranchSelection, SteadyState};

/// Default pump-power bracket for threshold searches, W.
pub const DEFAULT_BRACKET: (f64, f64) = (0.0, 100e-12);

/// Default relative power tolerance for threshold bisection.
pub const DEFAULT_THRESHOLD_TOL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Sorted by descending real part, rad/s.
    pub eigenvalues: [Complex64; 4],
    pub stable: bool,
    /// `−max Re(eigenvalue)`, rad/s.
    pub margin: f64,
    /// Resolved-sideband estimate of the mechanical energy damping including
    /// the optical contribution, `γ_n + Γ_opt`, rad/s. The least-damped
    /// eigenvalue has real part ≈ `−effective_damping / 2`.
    pub effective_damping: f64,
}

/// Drift matrix of the linearised dynamics in `(Re δa, Im δa, δQ, δQ̇)`.
pub fn dynamics_matrix(params: &SystemParams, ss: &SteadyState) -> Matrix4<f64> {
    let k = params.kappa;
    let d = ss.effective_detuning(params);
    let g = params.lambda_c * ss.a_s;
    let wn = params.omega_n;
    #[rustfmt::skip]
    let m = Matrix4::new(
        -k,                 d,   0.0,      0.0,
        -d,                -k,   g,        0.0,
        0.0,              0.0,   0.0,      1.0,
        4.0 * wn * g,     0.0,  -wn * wn, -params.gamma_n,
    );
    m
}

/// Drift matrix in units of ω_n: the similarity `D A D⁻¹ / ω_n` with
/// `D = diag(1, 1, 1, 1/ω_n)`, which brings every entry to order one.
pub fn scaled_matrix(params: &SystemParams, m: &Matrix4<f64>) -> Matrix4<f64> {
    let wn = params.omega_n;
    let mut s = *m;
    for i in 0..4 {
        s[(3, i)] /= wn;
        s[(i, 3)] *= wn;
    }
    s / wn
}

fn scaled_eigenvalues(params: &SystemParams, m: &Matrix4<f64>) -> [Complex64; 4] {
    let wn = params.omega_n;
    let ev = scaled_matrix(params, m).complex_eigenvalues();
    let mut out = [Complex64::default(); 4];
    for (o, e) in out.iter_mut().zip(ev.iter()) {
        *o = e * wn;
    }
    out.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    out
}

/// Optical contribution to the mechanical energy damping in the
/// weak-coupling, sideband picture: `2G²κ [L(Δ'−ω_n) − L(Δ'+ω_n)]`.
pub fn optical_damping(params: &SystemParams, ss: &SteadyState) -> f64 {
    let k = params.kappa;
    let d = ss.effective_detuning(params);
    let g2 = params.lambda_c * params.lambda_c * ss.n_p;
    let lor = |x: f64| 1.0 / (k * k + x * x);
    2.0 * g2 * k * (lor(d - params.omega_n) - lor(d + params.omega_n))
}

pub fn analyze(params: &SystemParams, ss: &SteadyState) -> StabilityReport {
    let eigenvalues = scaled_eigenvalues(params, &dynamics_matrix(params, ss));
    let margin = -eigenvalues[0].re;
    StabilityReport {
        eigenvalues,
        stable: margin > 0.0,
        margin,
        effective_damping: params.gamma_n + optical_damping(params, ss),
    }
}

/// Stability of the lowest steady-state branch at a given pump power.
pub fn report_at(
    params: &SystemParams,
    delta_p: f64,
    power: f64,
) -> Result<(SteadyState, StabilityReport)> {
    let drive = DriveConfig::new(params, power, 0.0, delta_p, delta_p)?;
    let ss = steady_state::steady_state_one(params, &drive, BranchSelection::Lowest)?;
    let report = analyze(params, &ss);
    Ok((ss, report))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub power: f64,
    pub n_p: f64,
    pub cooperativity: f64,
}

/// Pump power at which the lowest branch loses stability, by bisection on
/// the sign of the stability margin.
pub fn instability_threshold(
    params: &SystemParams,
    delta_p: f64,
    bracket: (f64, f64),
    rel_tol: f64,
) -> Result<Threshold> {
    let (mut lo, mut hi) = bracket;
    let stable = |p: f64| report_at(params, delta_p, p).map(|(_, r)| r.stable);
    if !stable(lo)? || stable(hi)? {
        return Err(Error::NoThreshold { lo, hi });
    }
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if stable(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let power = 0.5 * (lo + hi);
    let (ss, _) = report_at(params, delta_p, power)?;
    Ok(Threshold {
        power,
        n_p: ss.n_p,
        cooperativity: cooperativity(params, ss.n_p),
    })
}

/// Eigenvalues along a pump-power sweep, each set reordered to minimise the
/// total displacement from the previous one.
pub fn track_eigenvalues(
    params: &SystemParams,
    delta_p: f64,
    powers: &[f64],
) -> Result<Vec<[Complex64; 4]>> {
    let mut out: Vec<[Complex64; 4]> = Vec::with_capacity(powers.len());
    for &p in powers {
        let (_, r) = report_at(params, delta_p, p)?;
        let ev = match out.last() {
            None => r.eigenvalues,
            Some(prev) => best_pairing(prev, &r.eigenvalues),
        };
        out.push(ev);
    }
    Ok(out)
}

fn best_pairing(prev: &[Complex64; 4], next: &[Complex64; 4]) -> [Complex64; 4] {
    let mut best = *next;
    let mut best_cost = f64::INFINITY;
    let mut idx = [0usize, 1, 2, 3];
    permute(&mut idx, 0, &mut |perm| {
        let cost: f64 = (0..4).map(|i| (prev[i] - next[perm[i]]).norm()).sum();
        if cost < best_cost {
            best_cost = cost;
            best = [next[perm[0]], next[perm[1]], next[perm[2]], next[perm[3]]];
        }
    });
    best
}

fn permute(idx: &mut [usize; 4], k: usize, f: &mut impl FnMut(&[usize; 4])) {
    if k == idx.len() {
        f(idx);
        return;
    }
    for i in k..idx.len() {
        idx.swap(k, i);
        permute(idx, k + 1, f);
        idx.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::photons_for_cooperativity;
    use crate::steady_state::pump_power_for_photons;
    use nalgebra::{Complex, Matrix4 as M4};

    fn reference() -> SystemParams {
        SystemParams::reference()
    }

    #[test]
    fn decoupled_limit() {
        let p = reference();
        let (_, r) = report_at(&p, -p.omega_n, 0.0).unwrap();
        let wm = (p.omega_n.powi(2) - p.gamma_n.powi(2) / 4.0).sqrt();
        let mut expected = [
            Complex64::new(-p.kappa, p.omega_n),
            Complex64::new(-p.kappa, -p.omega_n),
            Complex64::new(-p.gamma_n / 2.0, wm),
            Complex64::new(-p.gamma_n / 2.0, -wm),
        ];
        expected.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
        for (a, b) in r.eigenvalues.iter().zip(&expected) {
            assert!((a - b).norm() <= 1e-9 * p.omega_n, "{a} vs {b}");
        }
        assert!(r.stable);
        assert!((r.margin - p.gamma_n / 2.0).abs() < 1e-6);
    }

    #[test]
    fn eigenpairs_have_small_residual() {
        let p = reference();
        for &power in &[0.0, 0.3e-12, 0.9e-12, 2e-12] {
            let (ss, r) = report_at(&p, -p.omega_n, power).unwrap();
            let a = scaled_matrix(&p, &dynamics_matrix(&p, &ss));
            let norm = a.norm();
            let ac: M4<Complex<f64>> = a.map(|x| Complex::new(x, 0.0));
            for ev in r.eigenvalues {
                let shifted = ac - M4::<Complex<f64>>::identity() * (ev / p.omega_n);
                let smin = shifted.singular_values().min();
                assert!(smin <= 1e-9 * norm, "σ_min = {smin:e}, ‖A‖ = {norm:e}");
            }
        }
    }

    #[test]
    fn eigenvalues_come_in_conjugate_pairs() {
        let p = reference();
        let (_, r) = report_at(&p, -p.omega_n, 0.5e-12).unwrap();
        for ev in r.eigenvalues {
            assert!(r
                .eigenvalues
                .iter()
                .any(|o| (o - ev.conj()).norm() <= 1e-9 * p.omega_n));
        }
    }

    #[test]
    fn blue_pump_below_threshold_is_stable() {
        let p = reference();
        let (ss, r) = report_at(&p, -p.omega_n, 0.3e-12).unwrap();
        let c = cooperativity(&p, ss.n_p);
        assert!((c - 0.48).abs() < 0.01, "C = {c}");
        assert!(r.stable);
        // least-damped pair tracks −(γ_n + Γ_opt)/2
        let est = -r.effective_damping / 2.0;
        assert!((r.eigenvalues[0].re - est).abs() / est.abs() < 0.01);
    }

    #[test]
    fn instability_sets_in_at_twice_unit_cooperativity() {
        // With κ the amplitude decay rate, anti-damping G²/κ cancels the
        // intrinsic γ_n/2 at 2G² = γ_n κ, i.e. C = 4G²/(γ_n κ) = 2.
        let p = reference();
        let th = instability_threshold(&p, -p.omega_n, DEFAULT_BRACKET, 1e-6).unwrap();
        assert!((th.cooperativity - 2.0).abs() < 0.01, "{th:?}");
        let analytic = pump_power_for_photons(&p, -p.omega_n, photons_for_cooperativity(&p, 2.0));
        assert!((th.power - analytic).abs() / analytic < 0.01);
        // 0.9 pW (C ≈ 1.45) is still stable; 1.5 pW is not
        assert!(report_at(&p, -p.omega_n, 0.9e-12).unwrap().1.stable);
        assert!(!report_at(&p, -p.omega_n, 1.5e-12).unwrap().1.stable);
    }

    #[test]
    fn red_detuning_has_no_threshold() {
        let p = reference();
        let r = instability_threshold(&p, p.omega_n, (0.0, 10e-9), DEFAULT_THRESHOLD_TOL);
        assert!(matches!(r, Err(Error::NoThreshold { .. })));
        for &power in &[1e-13, 1e-12, 1e-10, 1e-9, 10e-9] {
            assert!(report_at(&p, p.omega_n, power).unwrap().1.stable);
        }
    }

    #[test]
    fn threshold_scales_with_damping() {
        let p = reference();
        let mut p10 = p.clone();
        p10.q_n = Some(1e5);
        p10.gamma_n *= 10.0;
        let t1 = instability_threshold(&p, -p.omega_n, DEFAULT_BRACKET, 1e-6).unwrap();
        let t10 = instability_threshold(&p10, -p.omega_n, (0.0, 1e-9), 1e-6).unwrap();
        let ratio = t10.power / t1.power;
        assert!((ratio - 10.0).abs() < 0.1, "ratio = {ratio}");
    }

    #[test]
    fn zero_pump_is_stable_for_any_params() {
        for &(wn, k, g) in &[(1e6, 1e7, 1e3), (4e7, 3.8e6, 40.0), (1e5, 1e3, 1.0)] {
            let mut p = reference();
            p.omega_n = wn;
            p.kappa = k;
            p.gamma_n = g;
            p.q_n = None;
            for dp in [-wn, 0.0, wn] {
                assert!(report_at(&p, dp, 0.0).unwrap().1.stable);
            }
        }
    }

    #[test]
    fn eigenvalues_vary_continuously() {
        let p = reference();
        let powers: Vec<f64> = (0..=60).map(|i| i as f64 * 0.025e-12).collect();
        let tracks = track_eigenvalues(&p, -p.omega_n, &powers).unwrap();
        for w in tracks.windows(2) {
            for i in 0..4 {
                // each step moves an eigenvalue by far less than the gap to
                // the other mode family
                assert!((w[1][i] - w[0][i]).norm() < 0.05 * p.kappa);
            }
        }
    }
}
