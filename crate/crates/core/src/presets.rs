//! Standard sideband experiments: spectra for a red- or blue-detuned pump at
//! a ladder of pump powers, the blue-sideband gain curve, and normal-mode
//! splitting under a strong red pump.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::linspace;
use crate::linear_response::{
    gain_curve, sweep_spectrum, DetuningGrid, GainPoint, Normalization, Spectrum,
};
use crate::params::{DriveConfig, SystemParams};
use crate::steady_state::photon_number_roots;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Red sideband, transparency window widening with pump power.
    Fig2a,
    /// Blue sideband, dip turning into a gain peak.
    Fig2b,
    /// Resonant transmission versus blue pump power.
    Fig3b,
    /// Strong red pump, split cavity resonance.
    #[serde(rename = "nms")]
    NormalModeSplitting,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PresetOutput {
    Spectra(Vec<Spectrum>),
    Gain(Vec<GainPoint>),
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::Fig2a,
        Preset::Fig2b,
        Preset::Fig3b,
        Preset::NormalModeSplitting,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2a => "fig2a",
            Preset::Fig2b => "fig2b",
            Preset::Fig3b => "fig3b",
            Preset::NormalModeSplitting => "nms",
        }
    }

    /// Pump detuning `Δ_p = ω_c − ω_p`.
    pub fn delta_p(self, params: &SystemParams) -> f64 {
        match self {
            Preset::Fig2b | Preset::Fig3b => -params.omega_n,
            Preset::Fig2a | Preset::NormalModeSplitting => params.omega_n,
        }
    }

    /// Pump powers, W.
    pub fn pump_powers(self) -> Vec<f64> {
        let pw = 1e-12;
        match self {
            Preset::Fig2a => [0.0, 0.1, 0.3, 0.9, 3.0, 10.0].map(|p| p * pw).to_vec(),
            Preset::Fig2b => [0.0, 0.3, 0.5, 0.6, 0.8, 0.9].map(|p| p * pw).to_vec(),
            Preset::Fig3b => linspace(0.0, 1.2 * pw, 121),
            Preset::NormalModeSplitting => vec![10e-9],
        }
    }

    /// Signal-detuning grid shared by every spectrum of the preset.
    pub fn grid(self, params: &SystemParams, points: usize) -> DetuningGrid {
        let half_span = match self {
            Preset::Fig2a => {
                let p_max = self.pump_powers().into_iter().fold(0.0, f64::max);
                let n = DriveConfig::new(params, p_max, 0.0, self.delta_p(params), 0.0)
                    .map(|d| photon_number_roots(params, &d).values[0])
                    .unwrap_or(0.0);
                DetuningGrid::auto(params, n, points).half_span
            }
            Preset::Fig2b | Preset::Fig3b => 5.0 * params.gamma_n,
            Preset::NormalModeSplitting => 3.0 * params.kappa,
        };
        DetuningGrid {
            center: 0.0,
            half_span,
            points,
        }
    }

    pub fn run(
        self,
        params: &SystemParams,
        points: usize,
        normalization: Normalization,
    ) -> Result<PresetOutput> {
        let delta_p = self.delta_p(params);
        match self {
            Preset::Fig3b => Ok(PresetOutput::Gain(gain_curve(
                params,
                &self.pump_powers(),
                normalization,
            )?)),
            _ => {
                let grid = self.grid(params, points).values();
                self.pump_powers()
                    .into_iter()
                    .map(|p| {
                        let drive = DriveConfig::new(params, p, 0.0, delta_p, delta_p)?;
                        sweep_spectrum(params, &drive, &grid, normalization)
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(PresetOutput::Spectra)
            }
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parse {
                key: "preset".into(),
                reason: format!("unknown preset '{s}', expected fig2a|fig2b|fig3b|nms"),
            })
    }
}
