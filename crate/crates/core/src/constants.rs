//! Atomic-unit conversions. Everything inside the crate is in atomic units;
//! these are only used at input/output boundaries.

use std::f64::consts::PI;

/// Hartree energy in electron-volts.
pub const HARTREE_EV: f64 = 27.211_386_245_988;

/// Atomic unit of time in attoseconds.
pub const AU_TIME_AS: f64 = 24.188_843_265_857;

/// Atomic unit of time in femtoseconds.
pub const AU_TIME_FS: f64 = AU_TIME_AS * 1e-3;

/// Speed of light in atomic units.
pub const SPEED_OF_LIGHT: f64 = 137.035_999_084;

/// Bohr radius in nanometres.
pub const BOHR_NM: f64 = 0.052_917_721_090_3;

/// Peak intensity in W/cm² of a linearly polarized field with amplitude 1 a.u.
pub const INTENSITY_WCM2_PER_AU: f64 = 3.509_445e16;

pub fn ev_to_au(ev: f64) -> f64 {
    ev / HARTREE_EV
}

pub fn au_to_ev(au: f64) -> f64 {
    au * HARTREE_EV
}

pub fn fs_to_au(fs: f64) -> f64 {
    fs / AU_TIME_FS
}

pub fn au_to_as(t: f64) -> f64 {
    t * AU_TIME_AS
}

/// Angular frequency (a.u.) of light with the given vacuum wavelength.
pub fn omega_from_wavelength_nm(nm: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / (nm / BOHR_NM)
}

/// Peak intensity (W/cm²) for a field amplitude in a.u.
pub fn intensity_wcm2(field_amplitude: f64) -> f64 {
    INTENSITY_WCM2_PER_AU * field_amplitude * field_amplitude
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_800nm() {
        assert!((omega_from_wavelength_nm(800.0) - 0.056954).abs() < 1e-5);
    }

    #[test]
    fn intensity_at_0_03() {
        let i = intensity_wcm2(0.03);
        assert!((i / 3.1585e13 - 1.0).abs() < 1e-3, "{i}");
    }

    #[test]
    fn unit_round_trips() {
        assert!((au_to_ev(ev_to_au(80.0)) - 80.0).abs() < 1e-12);
        assert!((HARTREE_EV - 27.2114).abs() < 1e-4);
        assert!((AU_TIME_AS - 24.18884).abs() < 1e-5);
    }
}
