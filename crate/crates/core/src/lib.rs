//! Laser-dressed scattering of an attosecond photoelectron wave packet in a
//! one-dimensional double-well model.

pub mod classical;
pub mod constants;
pub mod error;
pub mod fields;
pub mod grid;
pub mod krylov;
pub mod parcel;
pub mod perturbative;
pub mod potential;
pub mod scattering;
pub mod spectrum;
pub mod spline;
pub mod tdse;

pub use classical::{
    dress_parcel, dressing_params, initial_velocity, integrate_trajectory, synthesize_spectrum,
    DressingParams, Trajectory, TrajectoryConfig,
};
pub use error::{Error, Result};
pub use fields::{
    fit_gamma_params, nir_phase_integrals, BandwidthConvention, FieldPolarity, FieldSet,
    GammaSpectrum, NirParams, NirPulse, PeakConvention, XuvPulse, XuvTargets,
};
pub use grid::{Fourier, Grid, Representation, Wavefunction};
pub use scattering::{
    build_dipole_table, dipole_element, DipoleTable, GreenPrefactor, LippmannSchwinger,
    PrefactorChoice, ScatteringConfig, ScatteringState,
};
pub use spectrum::{momentum_spectrum, Model, Spectrum};
pub use tdse::{
    continuum_part, propagate, run_dressed_scan, run_photoelectron, Drive, Gauge,
    PhotoelectronRun, PropagationConfig, Propagator,
};
pub use parcel::{
    parcel_observables, reflected_spectrum, reflection_probability, split_parcel, wave_parcel,
    Branch, ParcelObservables, SplitConfig, SplitParcel, WaveParcel,
};
pub use perturbative::{
    analyze_fringes, cva_amplitude, field_free_amplitude, field_free_closed_form, fringe_positions, AmplitudeModelResult,
    Fringes, QuadratureConfig,
};
pub use potential::{solve_bound_states, BoundStateSet, Flat, Potential, PotentialParams};
