//! Resolved description of one run. Serialized into the output metadata so a
//! run can be reproduced from its own artifacts.

use std::path::PathBuf;
use std::str::FromStr;

use emtransistor::linear_response::DetuningGrid;
use emtransistor::params::{parse_power, RawParams};
use emtransistor::prelude::*;
use emtransistor::steady_state::photon_number_roots;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::settings::Settings;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Spectrum,
    GainCurve,
    Threshold,
    OracleCompare,
    SteadyMap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamsRef {
    Default,
    File(PathBuf),
    Inline(RawParams),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    #[default]
    Both,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "both" => Ok(Format::Both),
            _ => Err("expected csv|json|both".into()),
        }
    }
}

impl Format {
    pub fn csv(self) -> bool {
        self != Format::Json
    }

    pub fn json(self) -> bool {
        self != Format::Csv
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub format: Format,
    pub svg: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveGrid {
    /// W, ascending.
    pub pump_powers: Vec<f64>,
    /// rad/s
    pub delta_p: f64,
    /// W; `None` means a unit probe (linear response does not depend on it).
    pub signal_power: Option<f64>,
    /// Signal–cavity detuning grid, rad/s.
    pub detuning: Option<DetuningGrid>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSettings {
    pub periods: f64,
    pub dump_trace: bool,
    pub decimate: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: Kind,
    pub preset: Option<Preset>,
    pub params_ref: ParamsRef,
    pub lambda_units: LambdaUnits,
    pub drive: DriveGrid,
    pub normalization: Normalization,
    pub oracle: Option<OracleSettings>,
    /// Upper end of the threshold search bracket, W.
    pub bracket_hi: Option<f64>,
    pub output: OutputSpec,
    /// Largest tolerated fraction of flagged points.
    pub flag_quota: f64,
}

const PW: f64 = 1e-12;

/// Detuning in rad/s: `red`, `blue`, a plain number (rad/s) or a rate with
/// units such as `2pi*6.3 MHz`.
pub fn parse_detuning(s: &str, params: &SystemParams) -> Result<f64, CliError> {
    match s.trim() {
        "red" => return Ok(params.omega_n),
        "blue" => return Ok(-params.omega_n),
        _ => {}
    }
    if let Ok(v) = s.trim().parse::<f64>() {
        return Ok(v);
    }
    let (neg, body) = match s.trim().strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.trim()),
    };
    let rate: Rate = body
        .parse()
        .map_err(|e| CliError::Validation(format!("detuning `{s}`: {e}")))?;
    let v = rate.to_angular(LambdaUnits::Hz);
    Ok(if neg { -v } else { v })
}

fn parse_powers(s: &str) -> Result<Vec<f64>, CliError> {
    let powers = s
        .split(',')
        .map(|p| parse_power(p.trim()))
        .collect::<emtransistor::Result<Vec<_>>>()?;
    if powers.is_empty() || !powers.windows(2).all(|w| w[1] > w[0]) {
        return Err(CliError::Validation(format!(
            "pump powers `{s}` must be non-empty and ascending"
        )));
    }
    Ok(powers)
}

fn power_setting(s: &Settings, key: &str, default: f64) -> Result<f64, CliError> {
    s.get(key)
        .map(parse_power)
        .transpose()
        .map(|p| p.unwrap_or(default))
        .map_err(Into::into)
}

fn ladder(s: &Settings, points: usize, lo: f64, hi: f64) -> Result<Vec<f64>, CliError> {
    let lo = power_setting(s, "p_min", lo)?;
    let hi = power_setting(s, "p_max", hi)?;
    if !(hi > lo) || points < 2 {
        return Err(CliError::Validation(format!(
            "power ladder needs p_max > p_min and at least 2 points (got {lo:e}..{hi:e}, {points})"
        )));
    }
    Ok((0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect())
}

impl ExperimentSpec {
    /// Resolves the parameter set named by this spec.
    pub fn system_params(&self) -> Result<SystemParams, CliError> {
        let mut raw = match &self.params_ref {
            ParamsRef::Default => RawParams::reference(),
            ParamsRef::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Validation(format!("cannot read params {}: {e}", path.display()))
                })?;
                RawParams::from_config(&text)?
            }
            ParamsRef::Inline(raw) => raw.clone(),
        };
        raw.lambda_units = self.lambda_units;
        Ok(build_params(&raw)?)
    }

    pub fn build(
        kind: Kind,
        preset: Option<Preset>,
        s: &Settings,
    ) -> Result<(ExperimentSpec, SystemParams), CliError> {
        let inline = s.inline_params();
        let params_ref = match (s.path("params"), inline.is_empty()) {
            (Some(_), false) => {
                return Err(CliError::Validation(
                    "give either a params file or inline parameter keys, not both".into(),
                ))
            }
            (Some(path), true) => {
                if !path.is_file() {
                    return Err(CliError::Validation(format!(
                        "params file {} does not exist",
                        path.display()
                    )));
                }
                ParamsRef::File(path)
            }
            (None, false) => ParamsRef::Inline(RawParams::from_key_values(&inline)?),
            (None, true) => ParamsRef::Default,
        };
        let lambda_units = match s.parse::<LambdaUnits>("lambda_units")? {
            Some(u) => u,
            None => match &params_ref {
                ParamsRef::File(path) => {
                    RawParams::from_config(&std::fs::read_to_string(path)?)?.lambda_units
                }
                ParamsRef::Inline(raw) => raw.lambda_units,
                ParamsRef::Default => LambdaUnits::default(),
            },
        };

        let mut spec = ExperimentSpec {
            kind,
            preset,
            params_ref,
            lambda_units,
            drive: DriveGrid {
                pump_powers: Vec::new(),
                delta_p: 0.0,
                signal_power: None,
                detuning: None,
            },
            normalization: s.parse("normalization")?.unwrap_or_default(),
            oracle: None,
            bracket_hi: None,
            output: OutputSpec {
                dir: s.path("out").unwrap_or_else(|| PathBuf::from("out")),
                format: s.parse("format")?.unwrap_or_default(),
                svg: s.flag("svg")?,
            },
            flag_quota: s.parse("flag_quota")?.unwrap_or(0.05),
        };
        let params = spec.system_params()?;
        if !(0.0..=1.0).contains(&spec.flag_quota) {
            return Err(CliError::Validation("flag_quota must lie in [0, 1]".into()));
        }

        let points = s.parse::<usize>("points")?;
        let delta_p = match s.get("delta_p") {
            Some(v) => parse_detuning(v, &params)?,
            None => match preset {
                Some(p) => p.delta_p(&params),
                None => -params.omega_n,
            },
        };
        spec.drive.delta_p = delta_p;
        spec.drive.signal_power = s.get("signal_power").map(parse_power).transpose()?;

        match (kind, preset) {
            (_, Some(p)) => {
                spec.drive.pump_powers = p.pump_powers();
                if kind == Kind::Spectrum {
                    spec.drive.detuning = Some(p.grid(&params, points.unwrap_or(DEFAULT_POINTS)));
                }
            }
            (Kind::Spectrum, None) => {
                spec.drive.pump_powers = parse_powers(s.get("pump_power").unwrap_or("0.3pW"))?;
                spec.drive.detuning = Some(detuning_grid(
                    s,
                    &params,
                    delta_p,
                    *spec.drive.pump_powers.last().unwrap(),
                    points.unwrap_or(DEFAULT_POINTS),
                    None,
                )?);
            }
            (Kind::GainCurve, None) => {
                spec.drive.pump_powers = ladder(s, points.unwrap_or(121), 0.0, 1.2 * PW)?;
            }
            (Kind::SteadyMap, None) => {
                spec.drive.pump_powers = match s.get("pump_power") {
                    Some(list) => parse_powers(list)?,
                    None => ladder(s, points.unwrap_or(121), 0.0, 1.2 * PW)?,
                };
            }
            (Kind::Threshold, None) => {
                spec.drive.pump_powers = ladder(s, points.unwrap_or(41), 0.0, 2.0 * PW)?;
                spec.bracket_hi = Some(power_setting(s, "bracket_hi", 100.0 * PW)?);
            }
            (Kind::OracleCompare, None) => {
                let powers = parse_powers(s.get("pump_power").unwrap_or("0.3pW"))?;
                if powers.len() != 1 {
                    return Err(CliError::Validation(
                        "oracle takes a single pump power".into(),
                    ));
                }
                spec.drive.signal_power = Some(spec.drive.signal_power.unwrap_or(1e-6 * powers[0]));
                if spec.drive.signal_power == Some(0.0) {
                    return Err(CliError::Validation(
                        "oracle needs a non-zero signal power".into(),
                    ));
                }
                spec.drive.pump_powers = powers;
                spec.drive.detuning = Some(detuning_grid(
                    s,
                    &params,
                    delta_p,
                    spec.drive.pump_powers[0],
                    points.unwrap_or(21),
                    Some(5.0 * params.gamma_n),
                )?);
                spec.oracle = Some(OracleSettings {
                    periods: s.parse("periods")?.unwrap_or(400.0),
                    dump_trace: s.flag("dump_trace")?,
                    decimate: s.parse("decimate")?.unwrap_or(10),
                });
            }
        }
        spec.validate()?;
        Ok((spec, params))
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.drive.pump_powers.is_empty() {
            return Err(CliError::Validation("empty pump-power grid".into()));
        }
        if let Some(g) = &self.drive.detuning {
            if g.points < 2 || !(g.half_span > 0.0) {
                return Err(CliError::Validation(
                    "detuning grid needs at least 2 points and a positive span".into(),
                ));
            }
        }
        if let Some(o) = &self.oracle {
            if !(o.periods >= 8.0) || o.decimate == 0 {
                return Err(CliError::Validation(
                    "oracle needs periods >= 8 and decimate >= 1".into(),
                ));
            }
        }
        if let ParamsRef::File(p) = &self.params_ref {
            if !p.is_file() {
                return Err(CliError::Validation(format!(
                    "{} does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    pub fn drive_at(&self, params: &SystemParams, power: f64) -> Result<DriveConfig, CliError> {
        let dp = self.drive.delta_p;
        Ok(DriveConfig::new(
            params,
            power,
            self.drive.signal_power.unwrap_or(0.0),
            dp,
            dp,
        )?)
    }
}

pub const DEFAULT_POINTS: usize = emtransistor::linear_response::DEFAULT_POINTS;

fn detuning_grid(
    s: &Settings,
    params: &SystemParams,
    delta_p: f64,
    power: f64,
    points: usize,
    default_span: Option<f64>,
) -> Result<DetuningGrid, CliError> {
    let center = s
        .get("center")
        .map(|v| parse_detuning(v, params))
        .transpose()?
        .unwrap_or(0.0);
    let half_span = match s.get("span") {
        Some(v) => parse_detuning(v, params)?,
        None => match default_span {
            Some(span) => span,
            None => {
                let d = DriveConfig::new(params, power, 0.0, delta_p, delta_p)?;
                let n = photon_number_roots(params, &d).values[0];
                DetuningGrid::auto(params, n, points).half_span
            }
        },
    };
    Ok(DetuningGrid {
        center,
        half_span,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(pairs: &[(&str, &str)]) -> Settings {
        let mut s = Settings::default();
        for (k, v) in pairs {
            s.set(k, Some(v.to_string()));
        }
        s
    }

    #[test]
    fn spec_survives_json_round_trip() {
        for (kind, preset, pairs) in [
            (
                Kind::Spectrum,
                None,
                vec![("pump_power", "0.3pW,0.5pW"), ("points", "11")],
            ),
            (
                Kind::Spectrum,
                Some(Preset::Fig2a),
                vec![("normalization", "literal")],
            ),
            (Kind::OracleCompare, None, vec![("dump_trace", "true")]),
            (Kind::Threshold, None, vec![("delta_p", "red")]),
            (
                Kind::GainCurve,
                None,
                vec![("p_max", "2pW"), ("lambda_units", "hz")],
            ),
        ] {
            let (spec, _) = ExperimentSpec::build(kind, preset, &settings(&pairs)).unwrap();
            let text = serde_json::to_string(&spec).unwrap();
            let back: ExperimentSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back, spec);
        }
    }

    #[test]
    fn detunings_accept_names_numbers_and_rates() {
        let p = SystemParams::reference();
        assert_eq!(parse_detuning("blue", &p).unwrap(), -p.omega_n);
        assert_eq!(parse_detuning("-1.5e3", &p).unwrap(), -1500.0);
        let r = parse_detuning("-2pi*6.3 MHz", &p).unwrap();
        assert!((r + p.omega_n).abs() < 1e-6 * p.omega_n);
        assert!(parse_detuning("sideways", &p).is_err());
    }

    #[test]
    fn invalid_settings_are_validation_errors() {
        for pairs in [
            vec![("pump_power", "0.5pW,0.3pW")],
            vec![("normalization", "loud")],
            vec![("points", "1")],
            vec![("params", "/nonexistent/params.conf")],
            vec![("flag_quota", "2")],
        ] {
            let err = ExperimentSpec::build(Kind::Spectrum, None, &settings(&pairs)).unwrap_err();
            assert_eq!(err.kind(), "validation", "{pairs:?}: {err}");
        }
    }

    #[test]
    fn lambda_units_change_the_coupling() {
        let (_, angular) = ExperimentSpec::build(Kind::GainCurve, None, &settings(&[])).unwrap();
        let (_, hz) =
            ExperimentSpec::build(Kind::GainCurve, None, &settings(&[("lambda_units", "hz")]))
                .unwrap();
        assert!((hz.lambda_c / angular.lambda_c - std::f64::consts::TAU).abs() < 1e-12);
    }
}
