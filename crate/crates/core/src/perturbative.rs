//! First-order amplitudes without the NIR field and in the Coulomb-Volkov
//! approximation, plus the fringe metric used to compare every model.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{nir_phase_integrals, NirPulse, XuvPulse};
use crate::scattering::DipoleTable;
use crate::spectrum::{Model, Spectrum};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeModelResult {
    pub model: Model,
    pub f0: f64,
    pub momenta: Vec<f64>,
    pub amplitudes: Vec<Complex64>,
    /// Time step of the final quadrature (zero for closed forms).
    pub time_step: f64,
}

impl AmplitudeModelResult {
    pub fn spectrum(&self) -> Result<Spectrum> {
        Spectrum::from_amplitudes(self.model, self.f0, self.momenta.clone(), &self.amplitudes)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    pub initial_step: f64,
    /// Relative sup-norm change between successive halvings that ends the
    /// refinement.
    pub tolerance: f64,
    pub max_halvings: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            initial_step: 0.05,
            tolerance: 1e-8,
            max_halvings: 8,
        }
    }
}

/// Closed form of the field-free amplitude:
/// `(-i/sqrt(2 pi)) e^{-i p^2 t_f/2} d(p) int F_X(t) e^{i(p^2/2 + W)t} dt`
/// with the time integral over the whole pulse replaced by `pi F G(p^2/2)`.
/// It differs from [`field_free_amplitude`] only by the truncation of the
/// XUV window and the quadrature error.
pub fn field_free_closed_form(
    momenta: &[f64],
    table: &DipoleTable,
    xuv: &XuvPulse,
    t_f: f64,
) -> Result<AmplitudeModelResult> {
    let pre = -I / (2.0 * PI).sqrt();
    let amplitudes = momenta
        .iter()
        .map(|&p| {
            let e = 0.5 * p * p;
            let d = table.eval(p)?;
            Ok(pre
                * Complex64::from_polar(1.0, -e * t_f)
                * d
                * xuv.absorption_amplitude(e + xuv.ionization_energy))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AmplitudeModelResult {
        model: Model::FieldFree,
        f0: 0.0,
        momenta: momenta.to_vec(),
        amplitudes,
        time_step: 0.0,
    })
}

/// Field-free amplitude by time quadrature over the truncated XUV window,
/// refined until converged. This is [`cva_amplitude`] with the NIR off.
pub fn field_free_amplitude(
    momenta: &[f64],
    table: &DipoleTable,
    xuv: &XuvPulse,
    t_f: f64,
    config: &QuadratureConfig,
) -> Result<AmplitudeModelResult> {
    let off = NirPulse::new(0.0, 1.0, 1.0, Default::default())?;
    let mut r = cva_amplitude(momenta, table, xuv, &off, t_f, config)?;
    r.model = Model::FieldFree;
    Ok(r)
}

/// Coulomb-Volkov amplitude
/// `(-i/sqrt(2 pi)) int F_X(t) d(p + A(t)) exp(i[-1/2 int_t^{t_f} (p + A)^2 + W t]) dt`.
///
/// Without the NIR field this is [`field_free_amplitude`].
pub fn cva_amplitude(
    momenta: &[f64],
    table: &DipoleTable,
    xuv: &XuvPulse,
    nir: &NirPulse,
    t_f: f64,
    config: &QuadratureConfig,
) -> Result<AmplitudeModelResult> {
    let h = xuv.half_window();
    if t_f < h {
        return Err(Error::InvalidParameter(format!(
            "t_f = {t_f} lies inside the XUV window (half-width {h})"
        )));
    }
    let mut step = config.initial_step;
    let mut previous = cva_fixed_step(momenta, table, xuv, nir, t_f, step)?;
    for _ in 0..config.max_halvings {
        step *= 0.5;
        let next = cva_fixed_step(momenta, table, xuv, nir, t_f, step)?;
        let scale = next.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let change = next
            .iter()
            .zip(&previous)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
            / scale.max(f64::MIN_POSITIVE);
        previous = next;
        if change < config.tolerance {
            return Ok(AmplitudeModelResult {
                model: Model::Cva,
                f0: nir.f0,
                momenta: momenta.to_vec(),
                amplitudes: previous,
                time_step: step,
            });
        }
    }
    Err(Error::QuadratureNotConverged(format!(
        "CVA time integral at F0 = {} after {} halvings (step {step})",
        nir.f0, config.max_halvings
    )))
}

fn cva_fixed_step(
    momenta: &[f64],
    table: &DipoleTable,
    xuv: &XuvPulse,
    nir: &NirPulse,
    t_f: f64,
    step: f64,
) -> Result<Vec<Complex64>> {
    let h = xuv.half_window();
    let intervals = 2 * ((h / step).ceil() as usize).max(1);
    let dt = 2.0 * h / intervals as f64;
    let times: Vec<f64> = (0..=intervals).map(|i| -h + i as f64 * dt).collect();
    // integrals from each t to the end of the pulse; A vanishes beyond it
    let t_last = if nir.is_off() { h } else { nir.tau.max(h) };
    let mut grid = times.clone();
    if t_last > h {
        let extra = ((t_last - h) / dt).ceil() as usize;
        let tail = (t_last - h) / extra as f64;
        grid.extend((1..=extra).map(|i| h + i as f64 * tail));
    }
    let (ca, ca2) = nir_phase_integrals(nir, &grid)?;
    let (ia_end, ia2_end) = (ca[ca.len() - 1], ca2[ca2.len() - 1]);
    let samples: Vec<(f64, f64, f64, f64, f64)> = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let weight = if i == 0 || i == intervals {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            (
                t,
                weight * dt / 3.0 * xuv.field(t),
                nir.vector_potential(t),
                ia_end - ca[i],
                ia2_end - ca2[i],
            )
        })
        .collect();
    let w = xuv.ionization_energy;
    let pre = -I / (2.0 * PI).sqrt();
    momenta
        .par_iter()
        .map(|&p| {
            let mut sum = Complex64::new(0.0, 0.0);
            for &(t, fw, a, ia, ia2) in &samples {
                if fw == 0.0 {
                    continue;
                }
                let phase = -0.5 * (p * p * (t_f - t) + 2.0 * p * ia + ia2) + w * t;
                sum += fw * table.eval(p + a)? * Complex64::from_polar(1.0, phase);
            }
            Ok(pre * sum)
        })
        .collect()
}

/// Dominant fringe length `L` (in a.u.) of a spectrum window, by scanning
/// the periodogram of its envelope-normalized density over `[l_min, l_max]`.
pub fn fringe_length(spectrum: &Spectrum, lo: f64, hi: f64, l_min: f64, l_max: f64) -> Result<f64> {
    let dp = lattice_step(spectrum)?;
    // broad envelope: one fifth of the window
    let broad = moving_average(&spectrum.density, (((hi - lo) / 5.0) / dp).round() as usize);
    let (p, x): (Vec<f64>, Vec<f64>) = spectrum
        .momenta
        .iter()
        .zip(spectrum.density.iter().zip(&broad))
        .filter(|(p, _)| **p >= lo && **p <= hi)
        .map(|(p, (d, b))| (*p, if *b > 0.0 { d / b } else { 0.0 }))
        .unzip();
    if p.len() < 8 {
        return Err(Error::TooFewFringes { found: 0 });
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let power = |l: f64| {
        p.iter()
            .zip(&x)
            .map(|(pi, xi)| (xi - mean) * Complex64::from_polar(1.0, -l * pi))
            .sum::<Complex64>()
            .norm_sqr()
    };
    let n = 4000;
    let mut best = (l_min, 0.0);
    for i in 0..=n {
        let l = l_min + (l_max - l_min) * i as f64 / n as f64;
        let v = power(l);
        if v > best.1 {
            best = (l, v);
        }
    }
    // golden-section polish around the best scan point
    let width = (l_max - l_min) / n as f64;
    let (mut a, mut b) = ((best.0 - width).max(l_min), (best.0 + width).min(l_max));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if power(c) > power(d) {
            b = d;
        } else {
            a = c;
        }
    }
    Ok(0.5 * (a + b))
}

/// Local maxima in `[lo, hi]` of the density divided by its moving average
/// over one fringe period, located to sub-bin accuracy by a parabola
/// through the three highest samples. Of two maxima closer than half a
/// period only the higher one is kept.
pub fn fringe_positions(spectrum: &Spectrum, lo: f64, hi: f64, period: f64) -> Result<Vec<f64>> {
    let dp = lattice_step(spectrum)?;
    let points = (period / dp).round() as usize;
    if points < 8 {
        return Err(Error::InvalidParameter(format!(
            "fringe period {period} spans only {points} samples, need at least 8"
        )));
    }
    let env = moving_average(&spectrum.density, points);
    let r: Vec<f64> = spectrum
        .density
        .iter()
        .zip(&env)
        .map(|(d, e)| if *e > 0.0 { d / e } else { 0.0 })
        .collect();
    let mut candidates = Vec::new();
    for i in 1..r.len().saturating_sub(1) {
        let p = spectrum.momenta[i];
        if p < lo || p > hi {
            continue;
        }
        if r[i] > r[i - 1] && r[i] >= r[i + 1] {
            let denom = r[i - 1] - 2.0 * r[i] + r[i + 1];
            let offset = if denom != 0.0 {
                (0.5 * (r[i - 1] - r[i + 1]) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            candidates.push((p + offset * dp, r[i]));
        }
    }
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut peaks: Vec<f64> = Vec::new();
    for (p, _) in candidates {
        if peaks.iter().all(|q| (p - q).abs() >= 0.5 * period) {
            peaks.push(p);
        }
    }
    peaks.sort_by(|a, b| a.total_cmp(b));
    if peaks.len() < 3 {
        return Err(Error::TooFewFringes { found: peaks.len() });
    }
    Ok(peaks)
}

/// Full analysis: period from the periodogram, then the peaks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fringes {
    pub length: f64,
    pub peaks: Vec<f64>,
}

impl Fringes {
    pub fn period(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Least-squares slope of peak position against peak index.
    pub fn mean_spacing(&self) -> f64 {
        let n = self.peaks.len() as f64;
        let mx = (n - 1.0) / 2.0;
        let my = self.peaks.iter().sum::<f64>() / n;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (i, y) in self.peaks.iter().enumerate() {
            let dx = i as f64 - mx;
            sxy += dx * (y - my);
            sxx += dx * dx;
        }
        sxy / sxx
    }
}

pub fn analyze_fringes(spectrum: &Spectrum, lo: f64, hi: f64) -> Result<Fringes> {
    let length = fringe_length(spectrum, lo, hi, 20.0, 100.0)?;
    let peaks = fringe_positions(spectrum, lo, hi, 2.0 * PI / length)?;
    Ok(Fringes { length, peaks })
}

/// Mean displacement of the peaks in `next` relative to `reference`,
/// pairing each reference peak with the nearest peak in `next`. Peaks
/// farther than half a spacing from any partner are ignored.
pub fn mean_shift(reference: &[f64], next: &[f64], spacing: f64) -> Option<f64> {
    let shifts: Vec<f64> = reference
        .iter()
        .filter_map(|r| {
            next.iter()
                .map(|n| n - r)
                .min_by(|a, b| a.abs().total_cmp(&b.abs()))
                .filter(|d| d.abs() < 0.5 * spacing)
        })
        .collect();
    (!shifts.is_empty()).then(|| shifts.iter().sum::<f64>() / shifts.len() as f64)
}

/// Cumulative fringe shift along a sequence of spectra's peak lists,
/// accumulated step by step so that shifts beyond half a spacing are
/// followed continuously.
pub fn tracked_shifts(peaks: &[Vec<f64>], spacing: f64) -> Option<Vec<f64>> {
    let mut out = vec![0.0];
    for w in peaks.windows(2) {
        let s = mean_shift(&w[0], &w[1], spacing)?;
        out.push(out[out.len() - 1] + s);
    }
    Some(out)
}

fn lattice_step(spectrum: &Spectrum) -> Result<f64> {
    if spectrum.momenta.len() < 3 {
        return Err(Error::TooFewFringes { found: 0 });
    }
    Ok((spectrum.momenta[spectrum.momenta.len() - 1] - spectrum.momenta[0]) / (spectrum.momenta.len() - 1) as f64)
}

/// Centered boxcar average with `width` points, shrinking at the ends.
fn moving_average(x: &[f64], width: usize) -> Vec<f64> {
    let half = width.max(1) / 2;
    let mut prefix = vec![0.0; x.len() + 1];
    for (i, v) in x.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    (0..x.len())
        .map(|i| {
            let a = i.saturating_sub(half);
            let b = (i + half + 1).min(x.len());
            (prefix[b] - prefix[a]) / (b - a) as f64
        })
        .collect()
}
