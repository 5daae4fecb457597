//! Executes an [`ExperimentSpec`] and collects its artifacts in memory.

use std::time::{SystemTime, UNIX_EPOCH};

use emtransistor::params::photons_for_cooperativity;
use emtransistor::prelude::*;
use emtransistor::stability::report_at;
use emtransistor::timedomain::OracleOptions;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::output::{csv_bytes, Artifact};
use crate::spec::{ExperimentSpec, Kind};
use crate::svg::{plot, Series};

pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub summary: Vec<String>,
    pub flagged: usize,
    pub total: usize,
}

impl Outcome {
    pub fn over_quota(&self, quota: f64) -> bool {
        self.total > 0 && self.flagged as f64 > quota * self.total as f64
    }
}

#[derive(Serialize)]
struct SpectrumRow {
    delta_s_rad_s: f64,
    transmission: f64,
    re_tp: f64,
    im_tp: f64,
    re_a_plus: f64,
    im_a_plus: f64,
    re_a_minus: f64,
    im_a_minus: f64,
    closedform_deviation: f64,
    stable_flag: u8,
}

#[derive(Serialize)]
struct GainRow {
    pump_power_w: f64,
    n_p: f64,
    cooperativity: f64,
    re_tp: f64,
    im_tp: f64,
    gain: f64,
    stable_flag: u8,
}

#[derive(Serialize)]
struct ThresholdRow {
    pump_power_w: f64,
    n_p: f64,
    cooperativity: f64,
    max_re_eigenvalue: f64,
    im_eigenvalue: f64,
    effective_damping: f64,
    stable_flag: u8,
}

#[derive(Serialize)]
struct OracleRow {
    delta_s_rad_s: f64,
    re_direct: f64,
    im_direct: f64,
    re_demodulated: f64,
    im_demodulated: f64,
    deviation: f64,
    flag: String,
}

#[derive(Serialize)]
struct SteadyRow {
    pump_power_w: f64,
    root: usize,
    branch: String,
    n_p: f64,
    a_s: f64,
    q_s: f64,
    stable_flag: u8,
}

fn stem(spec: &ExperimentSpec) -> String {
    match spec.preset {
        Some(p) => p.name().to_string(),
        None => match spec.kind {
            Kind::Spectrum => "spectrum",
            Kind::GainCurve => "gain",
            Kind::Threshold => "threshold",
            Kind::OracleCompare => "oracle",
            Kind::SteadyMap => "steady",
        }
        .to_string(),
    }
}

fn branch_name(b: Branch) -> String {
    serde_json::to_value(b)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

pub fn run(spec: &ExperimentSpec, params: &SystemParams) -> Result<Outcome, CliError> {
    let stem = stem(spec);
    let mut out = Outcome {
        artifacts: Vec::new(),
        summary: Vec::new(),
        flagged: 0,
        total: 0,
    };
    let results = match spec.kind {
        Kind::Spectrum => spectra(spec, params, &stem, &mut out)?,
        Kind::GainCurve => gain(spec, params, &stem, &mut out)?,
        Kind::Threshold => threshold(spec, params, &stem, &mut out)?,
        Kind::OracleCompare => oracle(spec, params, &stem, &mut out)?,
        Kind::SteadyMap => steady(spec, params, &stem, &mut out)?,
    };
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "timestamp_unix": timestamp,
        "spec": spec,
        "params": params,
        "normalization": spec.normalization,
        "flagged_points": out.flagged,
        "total_points": out.total,
        "results": results,
    });
    out.artifacts.push(Artifact {
        name: format!("{stem}.json"),
        bytes: serde_json::to_vec_pretty(&meta)?,
    });
    Ok(out)
}

fn push_csv<R: Serialize>(
    out: &mut Outcome,
    spec: &ExperimentSpec,
    name: String,
    rows: &[R],
) -> Result<Option<String>, CliError> {
    if !spec.output.format.csv() {
        return Ok(None);
    }
    out.artifacts.push(Artifact {
        name: name.clone(),
        bytes: csv_bytes(rows)?,
    });
    Ok(Some(name))
}

fn push_svg(out: &mut Outcome, spec: &ExperimentSpec, stem: &str, svg: impl FnOnce() -> String) {
    if spec.output.svg {
        out.artifacts.push(Artifact {
            name: format!("{stem}.svg"),
            bytes: svg().into_bytes(),
        });
    }
}

fn data_value<R: Serialize>(spec: &ExperimentSpec, rows: &[R]) -> Result<Value, CliError> {
    Ok(if spec.output.format.json() {
        serde_json::to_value(rows)?
    } else {
        Value::Null
    })
}

fn spectra(
    spec: &ExperimentSpec,
    params: &SystemParams,
    stem: &str,
    out: &mut Outcome,
) -> Result<Value, CliError> {
    let grid = spec
        .drive
        .detuning
        .as_ref()
        .ok_or_else(|| CliError::Validation("spectrum needs a detuning grid".into()))?
        .values();
    let sweeps: Vec<Spectrum> = spec
        .drive
        .pump_powers
        .par_iter()
        .map(|&p| {
            let drive = spec.drive_at(params, p)?;
            Ok(sweep_spectrum(params, &drive, &grid, spec.normalization)?)
        })
        .collect::<Result<_, CliError>>()?;

    let mut results = Vec::new();
    let mut series = Vec::new();
    for (i, s) in sweeps.iter().enumerate() {
        let stable = s.stability.stable;
        let rows: Vec<SpectrumRow> = s
            .points
            .iter()
            .map(|pt| SpectrumRow {
                delta_s_rad_s: pt.delta_s,
                transmission: pt.transmission,
                re_tp: pt.t_p.re,
                im_tp: pt.t_p.im,
                re_a_plus: pt.a_plus.re,
                im_a_plus: pt.a_plus.im,
                re_a_minus: pt.a_minus.re,
                im_a_minus: pt.a_minus.im,
                closedform_deviation: pt.closedform_deviation,
                stable_flag: u8::from(stable && !pt.pole),
            })
            .collect();
        out.flagged += s.flagged();
        out.total += s.points.len();
        let file = push_csv(out, spec, format!("{stem}_p{i}.csv"), &rows)?;
        out.summary.push(format!(
            "P_p = {:.4e} W: n_p = {:.4e}, C = {:.4}, branch {}, {}, |t(0)|² = {:.4}, closed-form deviation {:.2e}, {} flagged",
            s.drive.pump_power,
            s.steady.n_p,
            s.cooperativity,
            branch_name(s.steady.branch),
            if stable { "stable" } else { "UNSTABLE" },
            s.points[s.points.len() / 2].transmission,
            s.max_deviation(),
            s.flagged()
        ));
        series.push(Series {
            label: format!("{:.3e} W", s.drive.pump_power),
            points: rows
                .iter()
                .map(|r| (r.delta_s_rad_s, r.transmission))
                .collect(),
        });
        results.push(json!({
            "pump_power": s.drive.pump_power,
            "drive": s.drive,
            "file": file,
            "steady_state": s.steady,
            "stability": s.stability,
            "cooperativity": s.cooperativity,
            "flagged": s.flagged(),
            "max_closedform_deviation": s.max_deviation(),
            "points": data_value(spec, &rows)?,
        }));
    }
    push_svg(out, spec, stem, || {
        plot("Transmission", "Δs (rad/s)", "|t_p|²", &series)
    });
    Ok(Value::Array(results))
}

fn gain(
    spec: &ExperimentSpec,
    params: &SystemParams,
    stem: &str,
    out: &mut Outcome,
) -> Result<Value, CliError> {
    let curve = gain_curve_at(
        params,
        &spec.drive.pump_powers,
        spec.drive.delta_p,
        0.0,
        spec.normalization,
    )?;
    let rows: Vec<GainRow> = curve
        .iter()
        .map(|g| GainRow {
            pump_power_w: g.pump_power,
            n_p: g.n_p,
            cooperativity: g.cooperativity,
            re_tp: g.t_p.re,
            im_tp: g.t_p.im,
            gain: g.gain,
            stable_flag: u8::from(g.stable),
        })
        .collect();
    out.flagged += curve.iter().filter(|g| !g.gain.is_finite()).count();
    out.total += curve.len();
    let file = push_csv(out, spec, format!("{stem}.csv"), &rows)?;
    let (lo, hi) = (
        spec.drive.pump_powers[0],
        *spec.drive.pump_powers.last().unwrap(),
    );
    let unity = unity_gain_power(params, spec.drive.delta_p, spec.normalization, (lo, hi)).ok();
    let c1 = pump_power_for_photons(
        params,
        spec.drive.delta_p,
        photons_for_cooperativity(params, 1.0),
    );
    match unity {
        Some(p) => out.summary.push(format!("gain crosses 1 at {p:.4e} W")),
        None => out
            .summary
            .push("gain does not cross 1 on this ladder".into()),
    }
    out.summary.push(format!("C = 1 at {c1:.4e} W"));
    push_svg(out, spec, stem, || {
        plot(
            "Resonant gain",
            "pump power (W)",
            "|t_p|²",
            &[Series {
                label: "gain".into(),
                points: rows.iter().map(|r| (r.pump_power_w, r.gain)).collect(),
            }],
        )
    });
    Ok(json!({
        "file": file,
        "unity_gain_power": unity,
        "c1_power": c1,
        "points": data_value(spec, &rows)?,
    }))
}

fn threshold(
    spec: &ExperimentSpec,
    params: &SystemParams,
    stem: &str,
    out: &mut Outcome,
) -> Result<Value, CliError> {
    let dp = spec.drive.delta_p;
    let rows: Vec<ThresholdRow> = spec
        .drive
        .pump_powers
        .par_iter()
        .map(|&p| {
            let (ss, r) = report_at(params, dp, p)?;
            Ok(ThresholdRow {
                pump_power_w: p,
                n_p: ss.n_p,
                cooperativity: cooperativity(params, ss.n_p),
                max_re_eigenvalue: r.eigenvalues[0].re,
                im_eigenvalue: r.eigenvalues[0].im,
                effective_damping: r.effective_damping,
                stable_flag: u8::from(r.stable),
            })
        })
        .collect::<Result<_, CliError>>()?;
    out.total += rows.len();
    let bracket = (0.0, spec.bracket_hi.unwrap_or(100e-12));
    let found = match instability_threshold(params, dp, bracket, 1e-6) {
        Ok(t) => Some(t),
        Err(Error::NoThreshold { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let c_power = |c: f64| pump_power_for_photons(params, dp, photons_for_cooperativity(params, c));
    out.summary.push(format!(
        "{:>12} {:>12} {:>10} {:>14} {:>8}",
        "P_p (W)", "n_p", "C", "max Re λ", "stable"
    ));
    for r in &rows {
        out.summary.push(format!(
            "{:>12.4e} {:>12.4e} {:>10.4} {:>14.6e} {:>8}",
            r.pump_power_w,
            r.n_p,
            r.cooperativity,
            r.max_re_eigenvalue,
            if r.stable_flag == 1 { "yes" } else { "no" }
        ));
    }
    match &found {
        Some(t) => out.summary.push(format!(
            "instability threshold {:.6e} W (n_p = {:.4e}, C = {:.4})",
            t.power, t.n_p, t.cooperativity
        )),
        None => out.summary.push(format!(
            "no instability in [{:.3e}, {:.3e}] W",
            bracket.0, bracket.1
        )),
    }
    let file = push_csv(out, spec, format!("{stem}.csv"), &rows)?;
    push_svg(out, spec, stem, || {
        plot(
            "Least-damped eigenvalue",
            "pump power (W)",
            "max Re λ (rad/s)",
            &[Series {
                label: "max Re λ".into(),
                points: rows
                    .iter()
                    .map(|r| (r.pump_power_w, r.max_re_eigenvalue))
                    .collect(),
            }],
        )
    });
    Ok(json!({
        "file": file,
        "threshold": found,
        "bracket": bracket,
        "c1_power": c_power(1.0),
        "c2_power": c_power(2.0),
        "points": data_value(spec, &rows)?,
    }))
}

fn oracle(
    spec: &ExperimentSpec,
    params: &SystemParams,
    stem: &str,
    out: &mut Outcome,
) -> Result<Value, CliError> {
    let settings = spec
        .oracle
        .as_ref()
        .ok_or_else(|| CliError::Validation("oracle settings missing".into()))?;
    let grid = spec
        .drive
        .detuning
        .as_ref()
        .ok_or_else(|| CliError::Validation("oracle needs a detuning grid".into()))?
        .values();
    let drive = spec.drive_at(params, spec.drive.pump_powers[0])?;
    let deltas: Vec<f64> = grid.iter().map(|ds| drive.delta_p + ds).collect();
    let opts = OracleOptions {
        periods: settings.periods,
        ..Default::default()
    };
    let report = oracle_compare(params, &drive, &deltas, &opts)?;
    let rows: Vec<OracleRow> = report
        .points
        .iter()
        .map(|p| OracleRow {
            delta_s_rad_s: p.delta_s,
            re_direct: p.direct.re,
            im_direct: p.direct.im,
            re_demodulated: p.demodulated.map_or(f64::NAN, |c| c.re),
            im_demodulated: p.demodulated.map_or(f64::NAN, |c| c.im),
            deviation: p.deviation,
            flag: p.flag.clone().unwrap_or_default(),
        })
        .collect();
    out.flagged += report.flagged;
    out.total += rows.len();
    out.summary.push(format!(
        "{} points, {} flagged, max deviation {:.3e}, median {:.3e}",
        rows.len(),
        report.flagged,
        report.max_deviation,
        report.median_deviation
    ));
    let file = push_csv(out, spec, format!("{stem}.csv"), &rows)?;

    let mut trace_file = None;
    if settings.dump_trace {
        let d = drive.with_delta(params, deltas[deltas.len() / 2])?;
        let init = steady_ansatz_initial(params, &d)?;
        let t_final = settings.periods * std::f64::consts::TAU / d.delta.abs();
        let trace = integrate(params, &d, t_final, init, &opts.integration)?;
        let name = format!("{stem}_trace.csv");
        out.artifacts.push(Artifact {
            name: name.clone(),
            bytes: trace.to_csv(settings.decimate).into_bytes(),
        });
        trace_file = Some(name);
    }
    push_svg(out, spec, stem, || {
        plot(
            "Demodulated vs direct a₊",
            "Δs (rad/s)",
            "relative deviation",
            &[Series {
                label: "deviation".into(),
                points: rows
                    .iter()
                    .map(|r| (r.delta_s_rad_s, r.deviation))
                    .collect(),
            }],
        )
    });
    Ok(json!({
        "file": file,
        "trace_file": trace_file,
        "max_deviation": report.max_deviation,
        "median_deviation": report.median_deviation,
        "flagged": report.flagged,
        "points": data_value(spec, &rows)?,
    }))
}

fn steady(
    spec: &ExperimentSpec,
    params: &SystemParams,
    stem: &str,
    out: &mut Outcome,
) -> Result<Value, CliError> {
    let per_power: Vec<Vec<SteadyState>> = spec
        .drive
        .pump_powers
        .par_iter()
        .map(|&p| {
            Ok(steady_state(
                params,
                &spec.drive_at(params, p)?,
                BranchSelection::All,
            )?)
        })
        .collect::<Result<_, CliError>>()?;
    let mut rows = Vec::new();
    for (&p, states) in spec.drive.pump_powers.iter().zip(&per_power) {
        for (i, s) in states.iter().enumerate() {
            rows.push(SteadyRow {
                pump_power_w: p,
                root: i,
                branch: branch_name(s.branch),
                n_p: s.n_p,
                a_s: s.a_s,
                q_s: s.q_s,
                stable_flag: u8::from(s.dynamically_stable),
            });
        }
    }
    out.total += rows.len();
    let multi = per_power.iter().filter(|s| s.len() > 1).count();
    out.summary.push(format!(
        "{} pump powers, {} with several roots",
        per_power.len(),
        multi
    ));
    let file = push_csv(out, spec, format!("{stem}.csv"), &rows)?;
    push_svg(out, spec, stem, || {
        let series: Vec<Series> = (0..3)
            .map(|k| Series {
                label: format!("root {k}"),
                points: rows
                    .iter()
                    .filter(|r| r.root == k)
                    .map(|r| (r.pump_power_w, r.n_p))
                    .collect(),
            })
            .filter(|s| !s.points.is_empty())
            .collect();
        plot(
            "Intracavity photon number",
            "pump power (W)",
            "n_p",
            &series,
        )
    });
    Ok(json!({
        "file": file,
        "points": data_value(spec, &rows)?,
    }))
}
