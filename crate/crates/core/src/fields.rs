//! The attosecond XUV pulse and the NIR control pulse.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{fs_to_au, ev_to_au};
use crate::error::{Error, Result};

/// How the quoted XUV photon energy locates the Gamma spectrum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeakConvention {
    /// The peak energy is the mode `(kappa - 1) theta`.
    #[default]
    Mode,
    /// The peak energy is the mean `kappa theta`.
    Mean,
}

/// Which spectral profile the quoted FWHM refers to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthConvention {
    /// Full width at half maximum of the power spectrum `G^2`.
    #[default]
    Intensity,
    /// Full width at half maximum of the amplitude spectrum `G`.
    Amplitude,
}

impl BandwidthConvention {
    /// Level (relative to the peak of `G`) at which the width is measured.
    pub fn level(self) -> f64 {
        match self {
            BandwidthConvention::Intensity => std::f64::consts::FRAC_1_SQRT_2,
            BandwidthConvention::Amplitude => 0.5,
        }
    }
}

/// Sign of the NIR field at its central extremum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldPolarity {
    /// `F_L(0) = +F0`: the electron is first pushed toward negative `q`.
    #[default]
    PositivePeak,
    /// `A = +(F0/w) cos^4 sin`, so `F_L(0) = -F0`.
    NegativePeak,
}

impl FieldPolarity {
    fn sign(self) -> f64 {
        match self {
            FieldPolarity::PositivePeak => -1.0,
            FieldPolarity::NegativePeak => 1.0,
        }
    }
}

/// Gamma distribution with shape `kappa` and scale `theta` (energy units).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaSpectrum {
    pub kappa: f64,
    pub theta: f64,
}

impl GammaSpectrum {
    pub fn new(kappa: f64, theta: f64) -> Result<Self> {
        if !(kappa > 1.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa = {kappa} must exceed 1")));
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidParameter(format!("theta = {theta} must be > 0")));
        }
        Ok(Self { kappa, theta })
    }

    pub fn density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        ((self.kappa - 1.0) * x.ln() - x / self.theta
            - libm::lgamma(self.kappa)
            - self.kappa * self.theta.ln())
        .exp()
    }

    pub fn mode(&self) -> f64 {
        (self.kappa - 1.0) * self.theta
    }

    pub fn mean(&self) -> f64 {
        self.kappa * self.theta
    }

    /// `E[exp(i t X)] = (1 - i theta t)^(-kappa)`.
    pub fn characteristic(&self, t: f64) -> Complex64 {
        (-self.kappa * Complex64::new(1.0, -self.theta * t).ln()).exp()
    }

    /// Crossings of `density = level * density(mode)` below and above the mode.
    pub fn level_crossings(&self, level: f64) -> (f64, f64) {
        let (lo, hi) = unit_mode_crossings(self.kappa - 1.0, level.ln());
        (lo * self.mode(), hi * self.mode())
    }

    pub fn width_at(&self, level: f64) -> f64 {
        let (lo, hi) = self.level_crossings(level);
        hi - lo
    }
}

/// Roots of `s (ln y - y + 1) = ln_level` on either side of `y = 1`.
fn unit_mode_crossings(s: f64, ln_level: f64) -> (f64, f64) {
    let f = |y: f64| s * (y.ln() - y + 1.0) - ln_level;
    let mut lo_bracket = (f64::MIN_POSITIVE, 1.0);
    let mut hi = 2.0;
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    let mut hi_bracket = (1.0, hi);
    for _ in 0..200 {
        let m = 0.5 * (lo_bracket.0 + lo_bracket.1);
        if f(m) > 0.0 {
            lo_bracket.1 = m;
        } else {
            lo_bracket.0 = m;
        }
        let m = 0.5 * (hi_bracket.0 + hi_bracket.1);
        if f(m) > 0.0 {
            hi_bracket.0 = m;
        } else {
            hi_bracket.1 = m;
        }
    }
    (
        0.5 * (lo_bracket.0 + lo_bracket.1),
        0.5 * (hi_bracket.0 + hi_bracket.1),
    )
}

/// Finds `(kappa, theta)` whose Gamma density is located at `peak` and has
/// full width `fwhm`, both in the same energy units.
///
/// The peak constraint eliminates `theta`, leaving a bisection on
/// `ln(kappa - 1)`.
pub fn fit_gamma_params(
    peak: f64,
    fwhm: f64,
    peak_convention: PeakConvention,
    bandwidth: BandwidthConvention,
) -> Result<GammaSpectrum> {
    if !(peak > 0.0 && fwhm > 0.0 && fwhm < 2.0 * peak) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < fwhm < 2 peak, got peak = {peak}, fwhm = {fwhm}"
        )));
    }
    let level = bandwidth.level();
    let theta_for = |kappa: f64| match peak_convention {
        PeakConvention::Mode => peak / (kappa - 1.0),
        PeakConvention::Mean => peak / kappa,
    };
    let width_for = |s: f64| {
        let kappa = 1.0 + s;
        GammaSpectrum {
            kappa,
            theta: theta_for(kappa),
        }
        .width_at(level)
    };

    // Under the mean convention the width rises and then falls with kappa;
    // the narrow-band (large kappa) branch is taken.
    let scan: Vec<f64> = (0..=400).map(|i| -20.0 + 0.1 * i as f64).collect();
    let widest = scan
        .iter()
        .copied()
        .max_by(|a, b| width_for(a.exp()).total_cmp(&width_for(b.exp())))
        .unwrap_or(-20.0);
    let (mut lo, mut hi) = (widest, 20.0f64);
    let (w_lo, w_hi) = (width_for(lo.exp()), width_for(hi.exp()));
    if !((w_lo - fwhm) * (w_hi - fwhm) <= 0.0) {
        return Err(Error::FitFailed(format!(
            "fwhm {fwhm} outside attainable range [{w_hi}, {w_lo}]"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if width_for(mid.exp()) > fwhm {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let kappa = 1.0 + (0.5 * (lo + hi)).exp();
    let g = GammaSpectrum::new(kappa, theta_for(kappa))?;
    let width_err = (g.width_at(level) - fwhm).abs() / fwhm;
    let located = match peak_convention {
        PeakConvention::Mode => g.mode(),
        PeakConvention::Mean => g.mean(),
    };
    let peak_err = (located - peak).abs() / peak;
    if width_err > 1e-8 || peak_err > 1e-8 {
        return Err(Error::FitFailed(format!(
            "residuals: peak {peak_err:e}, width {width_err:e}"
        )));
    }
    Ok(g)
}

/// Fit targets for the XUV spectrum, in eV above threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct XuvTargets {
    pub peak_ev: f64,
    pub fwhm_ev: f64,
    pub amplitude: f64,
    pub peak_convention: PeakConvention,
    pub bandwidth_convention: BandwidthConvention,
    /// Envelope fraction below which the pulse is treated as off.
    pub truncation: f64,
}

impl Default for XuvTargets {
    fn default() -> Self {
        Self {
            peak_ev: 80.0,
            fwhm_ev: 32.4,
            amplitude: 1e-5,
            peak_convention: PeakConvention::Mode,
            bandwidth_convention: BandwidthConvention::Intensity,
            truncation: 1e-12,
        }
    }
}

/// `F_X(t) = F * Re[e^{iWt} (1 - i theta t)^(-kappa)]`, centered at `t = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XuvPulse {
    pub spectrum: GammaSpectrum,
    pub amplitude: f64,
    /// Ionization energy (a.u.); the spectrum is `G(w - W)`.
    pub ionization_energy: f64,
    pub truncation: f64,
}

impl XuvPulse {
    pub fn from_targets(targets: &XuvTargets, ionization_energy: f64) -> Result<Self> {
        if !(targets.truncation > 0.0 && targets.truncation < 1.0) {
            return Err(Error::InvalidParameter("truncation must lie in (0, 1)".into()));
        }
        let spectrum = fit_gamma_params(
            ev_to_au(targets.peak_ev),
            ev_to_au(targets.fwhm_ev),
            targets.peak_convention,
            targets.bandwidth_convention,
        )?;
        Ok(Self {
            spectrum,
            amplitude: targets.amplitude,
            ionization_energy,
            truncation: targets.truncation,
        })
    }

    pub fn field(&self, t: f64) -> f64 {
        let phase = Complex64::from_polar(1.0, self.ionization_energy * t);
        self.amplitude * (phase * self.spectrum.characteristic(t)).re
    }

    /// `|F (1 - i theta t)^(-kappa)|`.
    pub fn envelope(&self, t: f64) -> f64 {
        let s = self.spectrum;
        self.amplitude * (1.0 + (s.theta * t).powi(2)).powf(-0.5 * s.kappa)
    }

    /// FWHM of the squared envelope.
    pub fn intensity_fwhm(&self) -> f64 {
        let s = self.spectrum;
        2.0 * (2f64.powf(1.0 / s.kappa) - 1.0).sqrt() / s.theta
    }

    /// Half-width of the window outside which the envelope is below
    /// `truncation` times its peak.
    pub fn half_window(&self) -> f64 {
        let s = self.spectrum;
        (self.truncation.powf(-2.0 / s.kappa) - 1.0).sqrt() / s.theta
    }

    /// `int F_X(t) e^{iEt} dt` over all time, for photon energy `E > 0`.
    pub fn absorption_amplitude(&self, photon_energy: f64) -> f64 {
        PI * self.amplitude * self.spectrum.density(photon_energy - self.ionization_energy)
    }
}

/// NIR parameters in laboratory units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NirParams {
    pub wavelength_nm: f64,
    /// FWHM of the intensity envelope `cos^8`.
    pub fwhm_fs: f64,
    pub polarity: FieldPolarity,
}

impl Default for NirParams {
    fn default() -> Self {
        Self {
            wavelength_nm: 800.0,
            fwhm_fs: 3.0,
            polarity: FieldPolarity::PositivePeak,
        }
    }
}

/// Half-duration `tau` for which `cos^8(pi t / 2 tau)` has the given FWHM.
pub fn tau_from_intensity_fwhm(fwhm: f64) -> f64 {
    fwhm * PI / (4.0 * 2f64.powf(-1.0 / 8.0).acos())
}

/// `A(t) = s (F0/w) cos^4(pi t / 2 tau) sin(w t)` for `|t| <= tau`, and
/// `F_L = -dA/dt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NirPulse {
    pub f0: f64,
    pub omega: f64,
    pub tau: f64,
    pub polarity: FieldPolarity,
}

impl NirPulse {
    pub fn new(f0: f64, omega: f64, tau: f64, polarity: FieldPolarity) -> Result<Self> {
        if !(f0 >= 0.0 && f0.is_finite()) {
            return Err(Error::InvalidParameter(format!("F0 = {f0} must be >= 0")));
        }
        if !(omega > 0.0 && tau > 0.0) {
            return Err(Error::InvalidParameter("omega and tau must be > 0".into()));
        }
        Ok(Self {
            f0,
            omega,
            tau,
            polarity,
        })
    }

    pub fn from_params(f0: f64, params: &NirParams) -> Result<Self> {
        Self::new(
            f0,
            crate::constants::omega_from_wavelength_nm(params.wavelength_nm),
            tau_from_intensity_fwhm(fs_to_au(params.fwhm_fs)),
            params.polarity,
        )
    }

    pub fn is_off(&self) -> bool {
        self.f0 == 0.0
    }

    pub fn vector_potential(&self, t: f64) -> f64 {
        if t.abs() > self.tau || self.is_off() {
            return 0.0;
        }
        let c = (0.5 * PI * t / self.tau).cos();
        self.polarity.sign() * self.f0 / self.omega * c.powi(4) * (self.omega * t).sin()
    }

    pub fn field(&self, t: f64) -> f64 {
        if t.abs() > self.tau || self.is_off() {
            return 0.0;
        }
        let u = 0.5 * PI * t / self.tau;
        let (s, c) = u.sin_cos();
        let env = c.powi(4);
        let denv = -4.0 * c.powi(3) * s * 0.5 * PI / self.tau;
        let (sw, cw) = (self.omega * t).sin_cos();
        let da = self.f0 / self.omega * (denv * sw + env * self.omega * cw);
        -self.polarity.sign() * da
    }

    /// Largest `|A|` over the pulse.
    pub fn max_vector_potential(&self) -> f64 {
        let n = 20_000;
        (0..=n)
            .map(|i| self.vector_potential(self.tau * i as f64 / n as f64).abs())
            .fold(0.0, f64::max)
    }
}

/// Cumulative `int_{t_0}^{t_i} A dt'` and `int_{t_0}^{t_i} A^2 dt'` on a time
/// grid, by Simpson's rule on each interval with an analytic midpoint.
pub fn nir_phase_integrals(nir: &NirPulse, t_grid: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if let Some(i) = t_grid.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::UnsortedGrid(i + 1));
    }
    let mut a = Vec::with_capacity(t_grid.len());
    let mut a2 = Vec::with_capacity(t_grid.len());
    let (mut sa, mut sa2) = (0.0, 0.0);
    let mut prev = t_grid.first().map(|&t| nir.vector_potential(t));
    for (i, &t) in t_grid.iter().enumerate() {
        if i > 0 {
            let t0 = t_grid[i - 1];
            let h = t - t0;
            let f0 = prev.unwrap_or(0.0);
            let fm = nir.vector_potential(0.5 * (t0 + t));
            let f1 = nir.vector_potential(t);
            sa += h / 6.0 * (f0 + 4.0 * fm + f1);
            sa2 += h / 6.0 * (f0 * f0 + 4.0 * fm * fm + f1 * f1);
            prev = Some(f1);
        }
        a.push(sa);
        a2.push(sa2);
    }
    Ok((a, a2))
}

/// Both pulses, with the XUV centered on the NIR extremum at `t = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSet {
    pub xuv: XuvPulse,
    pub nir: NirPulse,
}

impl FieldSet {
    pub fn total_field(&self, t: f64) -> f64 {
        self.nir.field(t) + self.xuv.field(t)
    }

    pub fn xuv_window(&self) -> (f64, f64) {
        let h = self.xuv.half_window();
        (-h, h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{au_to_as, omega_from_wavelength_nm, HARTREE_EV};

    fn default_xuv() -> XuvPulse {
        XuvPulse::from_targets(&XuvTargets::default(), 12.17 / HARTREE_EV).unwrap()
    }

    #[test]
    fn gamma_density_normalized() {
        let g = GammaSpectrum::new(17.9, 0.17).unwrap();
        let h = 1e-3;
        let total: f64 = (1..20_000).map(|i| g.density(i as f64 * h)).sum::<f64>() * h;
        assert!((total - 1.0).abs() < 1e-10, "{total}");
    }

    #[test]
    fn characteristic_at_zero() {
        let g = GammaSpectrum::new(5.0, 0.3).unwrap();
        assert!((g.characteristic(0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn rejects_bad_gamma() {
        assert!(GammaSpectrum::new(1.0, 1.0).is_err());
        assert!(GammaSpectrum::new(2.0, 0.0).is_err());
        assert!(fit_gamma_params(1.0, 2.5, PeakConvention::Mode, BandwidthConvention::Amplitude).is_err());
    }

    #[test]
    fn narrower_band_needs_larger_kappa() {
        for conv in [BandwidthConvention::Amplitude, BandwidthConvention::Intensity] {
            for peak in [PeakConvention::Mode, PeakConvention::Mean] {
                let wide = fit_gamma_params(80.0, 32.4, peak, conv).unwrap();
                let narrow = fit_gamma_params(80.0, 16.2, peak, conv).unwrap();
                assert!(narrow.kappa > wide.kappa);
            }
        }
    }

    #[test]
    fn pulse_peak_and_duration() {
        let x = default_xuv();
        assert!((x.field(0.0) - 1e-5).abs() < 1e-18);
        let fwhm_as = au_to_as(x.intensity_fwhm());
        assert!((fwhm_as - 55.4).abs() / 55.4 < 0.05, "{fwhm_as}");
        let h = x.half_window();
        assert!((x.envelope(h) / x.envelope(0.0) - 1e-12).abs() < 1e-20);
    }

    #[test]
    fn nir_center() {
        let nir = NirPulse::new(0.02, 0.056954, 237.0, FieldPolarity::NegativePeak).unwrap();
        assert_eq!(nir.vector_potential(0.0), 0.0);
        assert!((nir.field(0.0) + 0.02).abs() < 1e-15);
        let flipped = NirPulse { polarity: FieldPolarity::PositivePeak, ..nir };
        assert!((flipped.field(0.0) - 0.02).abs() < 1e-15);
        assert_eq!(nir.field(237.5), 0.0);
        assert!(nir.vector_potential(237.0).abs() < 1e-15);
    }

    #[test]
    fn tau_calibration() {
        let tau = tau_from_intensity_fwhm(fs_to_au(3.0));
        assert!((tau - 237.41).abs() < 0.01, "{tau}");
        let nir = NirPulse::new(1.0, omega_from_wavelength_nm(800.0), tau, FieldPolarity::PositivePeak).unwrap();
        // half-maximum crossing of cos^8 by bisection
        let env = |t: f64| (0.5 * PI * t / nir.tau).cos().powi(8);
        let (mut lo, mut hi) = (0.0, nir.tau);
        for _ in 0..100 {
            let m = 0.5 * (lo + hi);
            if env(m) > 0.5 {
                lo = m;
            } else {
                hi = m;
            }
        }
        let fwhm = 2.0 * lo;
        assert!((fwhm - fs_to_au(3.0)).abs() / fs_to_au(3.0) < 0.01);
    }

    #[test]
    fn field_is_minus_derivative_of_vector_potential() {
        let nir = NirPulse::new(0.03, 0.056954, 237.2, FieldPolarity::PositivePeak).unwrap();
        let h = 1e-4;
        let mut worst = 0.0f64;
        let mut t = -nir.tau + 2.0 * h;
        while t < nir.tau - 2.0 * h {
            // fourth-order central difference
            let d = (-nir.vector_potential(t + 2.0 * h) + 8.0 * nir.vector_potential(t + h)
                - 8.0 * nir.vector_potential(t - h)
                + nir.vector_potential(t - 2.0 * h))
                / (12.0 * h);
            worst = worst.max((nir.field(t) + d).abs());
            t += 0.37;
        }
        assert!(worst < 1e-9 * nir.f0, "{worst}");
    }

    #[test]
    fn zero_field_is_silent() {
        let nir = NirPulse::new(0.0, 0.056954, 237.2, FieldPolarity::PositivePeak).unwrap();
        let ts: Vec<f64> = (0..1000).map(|i| -300.0 + 0.6 * i as f64).collect();
        assert!(ts.iter().all(|&t| nir.field(t) == 0.0 && nir.vector_potential(t) == 0.0));
        let (a, a2) = nir_phase_integrals(&nir, &ts).unwrap();
        assert!(a.iter().chain(a2.iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn phase_integrals() {
        let nir = NirPulse::new(0.03, 0.056954, 237.2, FieldPolarity::PositivePeak).unwrap();
        let grid = |n: usize| -> Vec<f64> {
            (0..=n).map(|i| -nir.tau + 2.0 * nir.tau * i as f64 / n as f64).collect()
        };
        let (a, a2) = nir_phase_integrals(&nir, &grid(4000)).unwrap();
        assert!(a.last().unwrap().abs() < 1e-12);
        let (_, a2h) = nir_phase_integrals(&nir, &grid(8000)).unwrap();
        let (x, y) = (a2.last().unwrap(), a2h.last().unwrap());
        assert!((x - y).abs() / y < 1e-10);
        assert!(matches!(
            nir_phase_integrals(&nir, &[0.0, 1.0, 1.0]),
            Err(Error::UnsortedGrid(2))
        ));
    }

    #[test]
    fn max_vector_potential() {
        let nir = NirPulse::new(0.03, 0.056954, 237.2, FieldPolarity::PositivePeak).unwrap();
        let m = nir.max_vector_potential();
        assert!(m <= 0.03 / 0.056954 && m > 0.45);
    }
}
