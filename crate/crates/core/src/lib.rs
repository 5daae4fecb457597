//! Numerical model of a superconducting microwave cavity capacitively coupled
//! to a nanomechanical resonator and driven by a strong pump plus a weak
//! signal tone.
//!
//! The crate is organised bottom-up:
//!
//! - [`params`]: physical constants, unit handling and drive amplitudes.
//! - [`steady_state`]: the photon-number cubic, its branches and the mean
//!   cavity/resonator amplitudes.
//! - [`linear_response`]: small-signal sideband amplitudes, the closed-form
//!   solution and an independent direct solve, transmission spectra and the
//!   transistor gain curve.
//! - [`stability`]: drift-matrix eigenvalues and the blue-detuned
//!   parametric-instability threshold.
//! - [`timedomain`]: integration of the full nonlinear mean-field equations
//!   and lock-in style demodulation, used as a brute-force oracle for the
//!   linear response.
//! - [`presets`]: the standard red/blue sideband experiments.
//!
//! All frequencies and rates are angular (rad/s). Powers are in watts.
//!
//! ```
//! use emtransistor::prelude::*;
//!
//! let params = SystemParams::reference();
//! let drive = DriveConfig::new(&params, 0.9e-12, 1e-18, -params.omega_n, -params.omega_n).unwrap();
//! let roots = photon_number_roots(&params, &drive);
//! assert_eq!(roots.values.len(), 1);
//! assert!((roots.values[0] - 863.0).abs() < 2.0);
//! ```

pub mod error;
pub mod linear_response;
pub mod params;
pub mod presets;
pub mod stability;
pub mod steady_state;
pub mod timedomain;

mod grid;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::error::Error;
    pub use crate::linear_response::{
        gain_curve, gain_curve_at, response_closed_form, response_direct_solve, sweep_spectrum,
        transmission, unity_gain_power, ClosedFormTerms, DetuningGrid, DirectSolution, GainPoint,
        Normalization, ResponsePoint, Spectrum,
    };
    pub use crate::params::{
        build_params, cooperativity, drive_amplitude, DriveConfig, LambdaUnits, Rate, RateUnit,
        RawParams, SystemParams, HBAR,
    };
    pub use crate::presets::Preset;
    pub use crate::stability::{
        analyze, dynamics_matrix, instability_threshold, StabilityReport, Threshold,
    };
    pub use crate::steady_state::{
        photon_number_roots, pump_power_for_photons, steady_state, steady_state_one, Branch,
        BranchSelection, PhotonRoots, SteadyState,
    };
    pub use crate::timedomain::{
        demodulate, integrate, oracle_compare, steady_ansatz_initial, Demodulated, InitialState,
        IntegrationOptions, OracleOptions, OraclePoint, OracleReport, TimeTrace,
    };
}
