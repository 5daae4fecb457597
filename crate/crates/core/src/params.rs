//! Physical parameters, unit conversion and drive amplitudes.
//!
//! Internally every frequency and rate is angular (rad/s). External inputs
//! carry an explicit unit tag:
//!
//! - `rad/s`: already angular.
//! - `2pi*<Hz|kHz|MHz|GHz>` (also `2π×`): cyclic frequency, multiplied by 2π.
//! - bare `<Hz|kHz|MHz|GHz>`: resolved by [`LambdaUnits`]. Under the default
//!   [`LambdaUnits::Angular`] reading a bare "250 Hz" is taken as 250 rad/s,
//!   which is how the coupling and damping values of the reference device
//!   are quoted. [`LambdaUnits::Hz`] multiplies by 2π instead.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant (CODATA 2018), J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Relative tolerance allowed between a supplied `gamma_n` and `omega_n / q_n`.
pub const DAMPING_CONSISTENCY_TOL: f64 = 0.02;

/// How bare-Hz values (no `2pi*` prefix) are converted to rad/s.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaUnits {
    /// Bare "Hz" values are already angular.
    #[default]
    Angular,
    /// Bare "Hz" values are cyclic and get multiplied by 2π.
    Hz,
}

impl FromStr for LambdaUnits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "angular" | "rad/s" => Ok(Self::Angular),
            "hz" => Ok(Self::Hz),
            other => Err(Error::Parse {
                key: "lambda_units".into(),
                reason: format!("expected `angular` or `hz`, got `{other}`"),
            }),
        }
    }
}

impl fmt::Display for LambdaUnits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Angular => "angular",
            Self::Hz => "hz",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RateUnit {
    RadPerSec,
    /// `2π × value × multiplier`.
    Cycles(f64),
    /// `value × multiplier`, ambiguous between rad/s and Hz.
    Bare(f64),
}

/// A frequency or rate together with the unit tag it was given in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub value: f64,
    pub unit: RateUnit,
}

impl Rate {
    pub fn rad_per_sec(value: f64) -> Self {
        Self {
            value,
            unit: RateUnit::RadPerSec,
        }
    }

    /// `2π × hz`.
    pub fn cycles(hz: f64) -> Self {
        Self {
            value: hz,
            unit: RateUnit::Cycles(1.0),
        }
    }

    pub fn bare_hz(value: f64) -> Self {
        Self {
            value,
            unit: RateUnit::Bare(1.0),
        }
    }

    pub fn to_angular(self, bare: LambdaUnits) -> f64 {
        match self.unit {
            RateUnit::RadPerSec => self.value,
            RateUnit::Cycles(m) => 2.0 * PI * self.value * m,
            RateUnit::Bare(m) => match bare {
                LambdaUnits::Angular => self.value * m,
                LambdaUnits::Hz => 2.0 * PI * self.value * m,
            },
        }
    }
}

fn hz_multiplier(unit: &str) -> Option<f64> {
    match unit {
        "Hz" | "hz" => Some(1.0),
        "kHz" | "khz" => Some(1e3),
        "MHz" | "mhz" => Some(1e6),
        "GHz" | "ghz" => Some(1e9),
        _ => None,
    }
}

fn split_number(s: &str) -> (&str, &str) {
    let end = s
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit()
                || c == '.'
                || c == '+'
                || c == '-'
                || ((c == 'e' || c == 'E')
                    && s[i + 1..]
                        .starts_with(|d: char| d.is_ascii_digit() || d == '-' || d == '+')))
        })
        .map(|(i, _)| i)
        .unwrap_or(s.len());
    (s[..end].trim(), s[end..].trim())
}

impl FromStr for Rate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = |reason: String| Error::Parse {
            key: s.to_string(),
            reason,
        };
        let trimmed = s.trim();
        let (two_pi, rest) = ["2pi*", "2π×", "2π*", "2pi×", "2pi x", "2π"]
            .iter()
            .find_map(|p| trimmed.strip_prefix(p).map(|r| (true, r.trim())))
            .unwrap_or((false, trimmed));
        let (num, unit) = split_number(rest);
        let value: f64 = num
            .parse()
            .map_err(|_| err(format!("`{num}` is not a number")))?;
        if unit.is_empty() {
            return Err(err("missing unit tag (rad/s, Hz, kHz, MHz, GHz)".into()));
        }
        let unit = if unit == "rad/s" {
            if two_pi {
                return Err(err("`2pi*` cannot be combined with rad/s".into()));
            }
            RateUnit::RadPerSec
        } else {
            let m = hz_multiplier(unit).ok_or_else(|| err(format!("unknown unit `{unit}`")))?;
            if two_pi {
                RateUnit::Cycles(m)
            } else {
                RateUnit::Bare(m)
            }
        };
        Ok(Rate { value, unit })
    }
}

/// Parses a power with an SI suffix, e.g. `0.9 pW`, `10nW`, `1e-12 W`.
pub fn parse_power(s: &str) -> Result<f64> {
    let (num, unit) = split_number(s.trim());
    let err = |reason: String| Error::Parse {
        key: s.to_string(),
        reason,
    };
    let value: f64 = num
        .parse()
        .map_err(|_| err(format!("`{num}` is not a number")))?;
    let scale = match unit {
        "W" => 1.0,
        "mW" => 1e-3,
        "uW" | "µW" => 1e-6,
        "nW" => 1e-9,
        "pW" => 1e-12,
        "fW" => 1e-15,
        "aW" => 1e-18,
        "" => return Err(err("missing power unit (W, mW, uW, nW, pW, fW, aW)".into())),
        other => return Err(err(format!("unknown power unit `{other}`"))),
    };
    let p = value * scale;
    if !(p.is_finite() && p >= 0.0) {
        return Err(Error::Negative {
            name: "power",
            value: p,
        });
    }
    Ok(p)
}

/// Parses a flat `key = value` document. `#` starts a comment; key order is
/// irrelevant; duplicate keys are rejected.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            key: format!("line {}", lineno + 1),
            reason: "expected `key = value`".into(),
        })?;
        let k = k.trim().to_string();
        if out.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Parse {
                key: k,
                reason: "duplicate key".into(),
            });
        }
    }
    Ok(out)
}

/// Parameter record as read from a config file, before validation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RawParams {
    pub omega_c: Option<Rate>,
    pub omega_n: Option<Rate>,
    pub kappa: Option<Rate>,
    pub gamma_n: Option<Rate>,
    pub lambda: Option<Rate>,
    pub q_n: Option<f64>,
    /// kg
    pub mass: Option<f64>,
    /// rad/(s·m)
    pub g_pull: Option<f64>,
    pub lambda_units: LambdaUnits,
}

pub const PARAM_KEYS: &[&str] = &[
    "omega_c",
    "omega_n",
    "kappa",
    "gamma_n",
    "lambda",
    "q_n",
    "mass",
    "g_pull",
    "lambda_units",
];

impl RawParams {
    /// The reference device: 7.5 GHz cavity, 6.3 MHz resonator, 600 kHz
    /// linewidth, λ = 250 and Q_n = 10⁶.
    pub fn reference() -> Self {
        Self {
            omega_c: Some(Rate {
                value: 7.5,
                unit: RateUnit::Cycles(1e9),
            }),
            omega_n: Some(Rate {
                value: 6.3,
                unit: RateUnit::Cycles(1e6),
            }),
            kappa: Some(Rate {
                value: 600.0,
                unit: RateUnit::Cycles(1e3),
            }),
            gamma_n: None,
            lambda: Some(Rate::bare_hz(250.0)),
            q_n: Some(1e6),
            mass: None,
            g_pull: None,
            lambda_units: LambdaUnits::Angular,
        }
    }

    /// Picks the parameter keys out of a key/value document; other keys are
    /// left for the caller.
    pub fn from_key_values(kv: &BTreeMap<String, String>) -> Result<Self> {
        let rate = |k: &str| kv.get(k).map(|v| v.parse::<Rate>()).transpose();
        let float = |k: &str| {
            kv.get(k)
                .map(|v| {
                    v.parse::<f64>().map_err(|_| Error::Parse {
                        key: k.to_string(),
                        reason: format!("`{v}` is not a number"),
                    })
                })
                .transpose()
        };
        Ok(Self {
            omega_c: rate("omega_c")?,
            omega_n: rate("omega_n")?,
            kappa: rate("kappa")?,
            gamma_n: rate("gamma_n")?,
            lambda: rate("lambda")?,
            q_n: float("q_n")?,
            mass: float("mass")?,
            g_pull: float("g_pull")?,
            lambda_units: kv
                .get("lambda_units")
                .map(|v| v.parse())
                .transpose()?
                .unwrap_or_default(),
        })
    }

    pub fn from_config(text: &str) -> Result<Self> {
        Self::from_key_values(&parse_key_values(text)?)
    }
}

/// Physical constants of the coupled cavity–resonator system (rad/s).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega_c: f64,
    pub omega_n: f64,
    /// Cavity amplitude decay rate.
    pub kappa: f64,
    /// Mechanical (energy) damping rate.
    pub gamma_n: f64,
    /// Single-photon coupling strength.
    pub lambda_c: f64,
    pub q_n: Option<f64>,
    pub mass: Option<f64>,
    pub g_pull: Option<f64>,
}

fn require(v: Option<Rate>, name: &'static str, bare: LambdaUnits) -> Result<f64> {
    let v = v.ok_or(Error::MissingField(name))?.to_angular(bare);
    positive(name, v)
}

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPositive { name, value })
    }
}

/// Validates a raw record and converts it to angular units.
///
/// When both `gamma_n` and `q_n` are supplied they must agree within
/// [`DAMPING_CONSISTENCY_TOL`]; `q_n` then wins and `gamma_n = omega_n / q_n`.
pub fn build_params(raw: &RawParams) -> Result<SystemParams> {
    let bare = raw.lambda_units;
    let omega_c = require(raw.omega_c, "omega_c", bare)?;
    let omega_n = require(raw.omega_n, "omega_n", bare)?;
    let kappa = require(raw.kappa, "kappa", bare)?;

    let q_n = raw.q_n.map(|q| positive("q_n", q)).transpose()?;
    let given_gamma = raw
        .gamma_n
        .map(|g| positive("gamma_n", g.to_angular(bare)))
        .transpose()?;
    let gamma_n = match (given_gamma, q_n) {
        (_, Some(q)) => {
            let derived = omega_n / q;
            if let Some(given) = given_gamma {
                if ((given - derived) / derived).abs() > DAMPING_CONSISTENCY_TOL {
                    return Err(Error::InconsistentDamping { given, derived });
                }
            }
            derived
        }
        (Some(g), None) => g,
        (None, None) => return Err(Error::MissingField("gamma_n or q_n")),
    };

    let mass = raw.mass.map(|m| positive("mass", m)).transpose()?;
    let g_pull = raw.g_pull.map(|g| positive("g_pull", g)).transpose()?;
    let lambda_c = match (raw.lambda, g_pull, mass) {
        (Some(l), _, _) => positive("lambda", l.to_angular(bare))?,
        (None, Some(g), Some(m)) => g * zero_point_motion(omega_n, m),
        _ => return Err(Error::MissingField("lambda or (g_pull, mass)")),
    };

    let p = SystemParams {
        omega_c,
        omega_n,
        kappa,
        gamma_n,
        lambda_c,
        q_n,
        mass,
        g_pull,
    };
    p.validate()?;
    Ok(p)
}

/// `sqrt(ħ / (2 ω_n m))`, metres.
pub fn zero_point_motion(omega_n: f64, mass: f64) -> f64 {
    (HBAR / (2.0 * omega_n * mass)).sqrt()
}

impl SystemParams {
    pub fn reference() -> Self {
        build_params(&RawParams::reference()).expect("reference parameters are valid")
    }

    pub fn validate(&self) -> Result<()> {
        positive("omega_c", self.omega_c)?;
        positive("omega_n", self.omega_n)?;
        positive("kappa", self.kappa)?;
        positive("gamma_n", self.gamma_n)?;
        positive("lambda", self.lambda_c)?;
        if let Some(q) = self.q_n {
            let derived = self.omega_n / q;
            if ((self.gamma_n - derived) / self.gamma_n).abs() > 1e-12 {
                return Err(Error::InconsistentDamping {
                    given: self.gamma_n,
                    derived,
                });
            }
        }
        Ok(())
    }

    /// `ω_n > κ`: motional sidebands are resolved by the cavity.
    pub fn resolved_sideband(&self) -> bool {
        self.omega_n > self.kappa
    }

    /// `α = 2λ²/ω_n²`.
    pub fn alpha(&self) -> f64 {
        2.0 * self.lambda_c * self.lambda_c / (self.omega_n * self.omega_n)
    }

    /// Static cavity pull per intracavity photon, `ω_n α = 2λ²/ω_n` (rad/s).
    pub fn kerr_shift(&self) -> f64 {
        2.0 * self.lambda_c * self.lambda_c / self.omega_n
    }

    /// Serialises to the key/value config format with every rate in rad/s.
    /// `build_params(from_config(to_config(p)))` reproduces `p`.
    pub fn to_config(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("omega_c = {:e} rad/s\n", self.omega_c));
        s.push_str(&format!("omega_n = {:e} rad/s\n", self.omega_n));
        s.push_str(&format!("kappa = {:e} rad/s\n", self.kappa));
        s.push_str(&format!("lambda = {:e} rad/s\n", self.lambda_c));
        match self.q_n {
            Some(q) => s.push_str(&format!("q_n = {q:e}\n")),
            None => s.push_str(&format!("gamma_n = {:e} rad/s\n", self.gamma_n)),
        }
        if let Some(m) = self.mass {
            s.push_str(&format!("mass = {m:e}\n"));
        }
        if let Some(g) = self.g_pull {
            s.push_str(&format!("g_pull = {g:e}\n"));
        }
        s
    }
}

/// `|E| = sqrt(2 P κ / (ħ ω))`, in √photon · rad/s.
pub fn drive_amplitude(power: f64, omega: f64, kappa: f64) -> Result<f64> {
    if !(power.is_finite() && power >= 0.0) {
        return Err(Error::Negative {
            name: "power",
            value: power,
        });
    }
    positive("omega", omega)?;
    positive("kappa", kappa)?;
    Ok((2.0 * power * kappa / (HBAR * omega)).sqrt())
}

/// Inverse of [`drive_amplitude`].
pub fn power_from_amplitude(amplitude: f64, omega: f64, kappa: f64) -> f64 {
    amplitude * amplitude * HBAR * omega / (2.0 * kappa)
}

/// `C = 4 λ² n_p / (γ_n κ)`.
pub fn cooperativity(params: &SystemParams, n_p: f64) -> f64 {
    4.0 * params.lambda_c * params.lambda_c * n_p / (params.gamma_n * params.kappa)
}

/// Photon number at which [`cooperativity`] equals `c`.
pub fn photons_for_cooperativity(params: &SystemParams, c: f64) -> f64 {
    c * params.gamma_n * params.kappa / (4.0 * params.lambda_c * params.lambda_c)
}

/// Pump and signal tones. Frequencies in the rotating frame of the pump:
/// `delta_p = ω_c − ω_p`, `delta = ω_s − ω_p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveConfig {
    pub pump_power: f64,
    pub signal_power: f64,
    pub delta_p: f64,
    pub delta: f64,
    /// Global phase of the pump field, radians.
    pub pump_phase: f64,
    pub omega_p: f64,
    pub omega_s: f64,
    pub e_p: f64,
    pub e_s: f64,
}

impl DriveConfig {
    /// The pump carrier is `ω_p = ω_c − Δ_p` and the signal `ω_s = ω_p + δ`.
    pub fn new(
        params: &SystemParams,
        pump_power: f64,
        signal_power: f64,
        delta_p: f64,
        delta: f64,
    ) -> Result<Self> {
        let omega_p = params.omega_c - delta_p;
        let omega_s = omega_p + delta;
        Ok(Self {
            pump_power,
            signal_power,
            delta_p,
            delta,
            pump_phase: 0.0,
            omega_p,
            omega_s,
            e_p: drive_amplitude(pump_power, omega_p, params.kappa)?,
            e_s: drive_amplitude(signal_power, omega_s, params.kappa)?,
        })
    }

    /// Same drive with the signal moved to a new signal–pump detuning.
    pub fn with_delta(&self, params: &SystemParams, delta: f64) -> Result<Self> {
        let mut d = Self::new(
            params,
            self.pump_power,
            self.signal_power,
            self.delta_p,
            delta,
        )?;
        d.pump_phase = self.pump_phase;
        Ok(d)
    }

    /// Same drive with a different pump power.
    pub fn with_pump_power(&self, params: &SystemParams, pump_power: f64) -> Result<Self> {
        let mut d = Self::new(
            params,
            pump_power,
            self.signal_power,
            self.delta_p,
            self.delta,
        )?;
        d.pump_phase = self.pump_phase;
        Ok(d)
    }

    pub fn with_pump_phase(mut self, phase: f64) -> Self {
        self.pump_phase = phase;
        self
    }

    /// Signal–cavity detuning `Δ_s = ω_s − ω_c = δ − Δ_p`.
    pub fn delta_s(&self) -> f64 {
        self.delta - self.delta_p
    }

    /// Complex pump amplitude `E_p e^{iφ}`.
    pub fn pump_field(&self) -> Complex64 {
        Complex64::from_polar(self.e_p, self.pump_phase)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_device_in_angular_units() {
        let p = SystemParams::reference();
        assert!((p.omega_c - 4.7124e10).abs() / 4.7124e10 < 1e-4);
        assert!((p.omega_n - 3.9584e7).abs() / 3.9584e7 < 1e-4);
        assert!((p.kappa - 3.7699e6).abs() / 3.7699e6 < 1e-4);
        assert_eq!(p.lambda_c, 250.0);
        assert!((p.gamma_n - 39.584).abs() < 1e-3);
        assert!(p.resolved_sideband());
    }

    #[test]
    fn caption_damping_is_accepted_within_window() {
        let mut raw = RawParams::reference();
        raw.gamma_n = Some(Rate::bare_hz(40.0));
        let p = build_params(&raw).unwrap();
        assert!((p.gamma_n - p.omega_n / 1e6).abs() < 1e-9);

        raw.gamma_n = Some(Rate::bare_hz(45.0));
        match build_params(&raw) {
            Err(Error::InconsistentDamping { given, derived }) => {
                assert_eq!(given, 45.0);
                assert!((derived - 39.584).abs() < 1e-3);
            }
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn missing_fields_are_reported() {
        let mut raw = RawParams::reference();
        raw.q_n = None;
        assert_eq!(
            build_params(&raw),
            Err(Error::MissingField("gamma_n or q_n"))
        );
        let mut raw = RawParams::reference();
        raw.lambda = None;
        assert_eq!(
            build_params(&raw),
            Err(Error::MissingField("lambda or (g_pull, mass)"))
        );
        let mut raw = RawParams::reference();
        raw.kappa = None;
        assert_eq!(build_params(&raw), Err(Error::MissingField("kappa")));
    }

    #[test]
    fn coupling_from_frequency_pull_and_mass() {
        let mut raw = RawParams::reference();
        raw.lambda = None;
        raw.mass = Some(1e-15);
        raw.g_pull = Some(1e13);
        let p = build_params(&raw).unwrap();
        let zp = (HBAR / (2.0 * p.omega_n * 1e-15)).sqrt();
        assert!((p.lambda_c - 1e13 * zp).abs() / p.lambda_c < 1e-14);
    }

    #[test]
    fn lambda_units_selects_reading() {
        let mut raw = RawParams::reference();
        raw.lambda_units = LambdaUnits::Hz;
        let p = build_params(&raw).unwrap();
        assert!((p.lambda_c - 2.0 * PI * 250.0).abs() < 1e-9);
        // 2π-tagged rates are unaffected
        assert!((p.omega_n - SystemParams::reference().omega_n).abs() < 1e-6);
    }

    #[test]
    fn parses_unit_tags() {
        let r: Rate = "2pi*7.5 GHz".parse().unwrap();
        assert!((r.to_angular(LambdaUnits::Angular) - 2.0 * PI * 7.5e9).abs() < 1.0);
        let r: Rate = "2π×600 kHz".parse().unwrap();
        assert!((r.to_angular(LambdaUnits::Hz) - 2.0 * PI * 6e5).abs() < 1e-6);
        let r: Rate = "39.58 rad/s".parse().unwrap();
        assert_eq!(r.to_angular(LambdaUnits::Hz), 39.58);
        assert!("250".parse::<Rate>().is_err());
        assert!("250 furlongs".parse::<Rate>().is_err());
        assert!("2pi*3 rad/s".parse::<Rate>().is_err());

        assert!((parse_power("0.9 pW").unwrap() - 0.9e-12).abs() < 1e-27);
        assert!((parse_power("10nW").unwrap() - 1e-8).abs() < 1e-22);
        assert!((parse_power("1e-12 W").unwrap() - 1e-12).abs() < 1e-27);
        assert!(parse_power("3").is_err());
        assert!(parse_power("-1 pW").is_err());
    }

    #[test]
    fn config_document() {
        let text = "\
# reference device
kappa = 2pi*600 kHz
omega_n = 2pi*6.3 MHz
omega_c = 2pi*7.5 GHz   # cavity
lambda = 250 Hz
q_n = 1e6
pump_power = 0.9 pW
";
        let kv = parse_key_values(text).unwrap();
        assert_eq!(kv["pump_power"], "0.9 pW");
        let p = build_params(&RawParams::from_key_values(&kv).unwrap()).unwrap();
        assert_eq!(p, SystemParams::reference());
        assert!(parse_key_values("a = 1\na = 2").is_err());
        assert!(parse_key_values("just words").is_err());
    }

    #[test]
    fn drive_amplitude_values() {
        assert_eq!(drive_amplitude(0.0, 1.0, 1.0).unwrap(), 0.0);
        // 2 P κ / (ħ ω) by hand
        let e = drive_amplitude(0.9e-12, 4.7124e10, 3.7699e6).unwrap();
        let by_hand = 2.0 * 0.9e-12 * 3.7699e6 / (1.054571817e-34 * 4.7124e10);
        assert!((e * e - by_hand).abs() / by_hand < 1e-12);
        assert!((e * e - 1.366e18).abs() / 1.366e18 < 1e-3);
        let e = drive_amplitude(10e-9, 4.7124e10, 3.7699e6).unwrap();
        assert!((e * e - 1.517e22).abs() / 1.517e22 < 1e-3);
        assert!(drive_amplitude(1.0, 0.0, 1.0).is_err());
        assert!(drive_amplitude(1.0, 1.0, -1.0).is_err());
        assert!(drive_amplitude(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn cooperativity_unity_photon_number() {
        let p = SystemParams::reference();
        assert_eq!(cooperativity(&p, 0.0), 0.0);
        let n1 = photons_for_cooperativity(&p, 1.0);
        assert!((n1 - 597.0).abs() < 1.0, "n_p(C=1) = {n1}");
        assert!((cooperativity(&p, n1) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_drive_is_valid() {
        let p = SystemParams::reference();
        let d = DriveConfig::new(&p, 0.0, 0.0, -p.omega_n, -p.omega_n).unwrap();
        assert_eq!(d.e_p, 0.0);
        assert_eq!(d.e_s, 0.0);
        assert_eq!(d.delta_s(), 0.0);
    }

    fn arb_params() -> impl Strategy<Value = SystemParams> {
        (
            1e9..1e11f64,
            1e5..1e8f64,
            1e4..1e7f64,
            1.0..1e5f64,
            prop::option::of(1e2..1e8f64),
            1.0..1e4f64,
        )
            .prop_map(|(wc, wn, k, g, q, l)| {
                let gamma_n = q.map(|q| wn / q).unwrap_or(g);
                SystemParams {
                    omega_c: wc,
                    omega_n: wn,
                    kappa: k,
                    gamma_n,
                    lambda_c: l,
                    q_n: q,
                    mass: None,
                    g_pull: None,
                }
            })
    }

    proptest! {
        #[test]
        fn config_round_trip(p in arb_params()) {
            let back = build_params(&RawParams::from_config(&p.to_config()).unwrap()).unwrap();
            let close = |a: f64, b: f64| ((a - b) / b).abs() <= 1e-12;
            prop_assert!(close(back.omega_c, p.omega_c));
            prop_assert!(close(back.omega_n, p.omega_n));
            prop_assert!(close(back.kappa, p.kappa));
            prop_assert!(close(back.gamma_n, p.gamma_n));
            prop_assert!(close(back.lambda_c, p.lambda_c));
            prop_assert_eq!(back.q_n, p.q_n);
        }

        #[test]
        fn amplitude_scaling(power in 0.0..1e-6f64, omega in 1e9..1e11f64, kappa in 1e3..1e8f64) {
            let e = drive_amplitude(power, omega, kappa).unwrap();
            let e4 = drive_amplitude(4.0 * power, omega, kappa).unwrap();
            prop_assert!((e4 - 2.0 * e).abs() <= 1e-12 * e4.max(1e-300));
            prop_assert!(drive_amplitude(power, 2.0 * omega, kappa).unwrap() <= e);
            prop_assert!(drive_amplitude(power, omega, 2.0 * kappa).unwrap() >= e);
            let back = power_from_amplitude(e, omega, kappa);
            prop_assert!((back - power).abs() <= 1e-12 * power.max(1e-300));
        }

        #[test]
        fn cooperativity_is_linear(n in 0.0..1e9f64, s in 0.0..10.0f64) {
            let p = SystemParams::reference();
            let lhs = cooperativity(&p, s * n);
            let rhs = s * cooperativity(&p, n);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300));
        }
    }
}
