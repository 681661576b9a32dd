//! Wave parcels: the measured continuum state freely propagated back to
//! `t = 0`, split into the direct and reflected humps.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Fourier, Grid, Representation, Wavefunction};
use crate::potential::BoundStateSet;
use crate::spectrum::{momentum_spectrum, Model, Spectrum};

/// Largest overlap (relative to the state's norm) with any bound state that
/// still counts as continuum.
pub const BOUND_CONTAMINATION: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Full,
    Direct,
    Reflected,
}

#[derive(Clone, Debug)]
pub struct WaveParcel {
    pub wave: Wavefunction,
    pub t_f: f64,
    pub f0: f64,
    pub branch: Branch,
}

impl WaveParcel {
    pub fn grid(&self) -> &Grid {
        self.wave.grid()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.wave.norm_sqr()
    }

    /// Keeps only the `p > 0` components.
    pub fn right_going(&self, fourier: &Fourier) -> Result<WaveParcel> {
        let mut m = fourier.to_momentum(&self.wave)?;
        let grid = *m.grid();
        for (k, a) in m.amplitudes_mut().iter_mut().enumerate() {
            if grid.momentum(k) <= 0.0 {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        Ok(WaveParcel {
            wave: fourier.to_position(&m)?,
            ..self.clone()
        })
    }

    /// The parcel restricted to `keep(q)`, zero elsewhere.
    fn restricted(&self, branch: Branch, keep: impl Fn(f64) -> bool) -> Result<WaveParcel> {
        let grid = *self.grid();
        let amps = self
            .wave
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(j, a)| if keep(grid.position(j)) { *a } else { Complex64::new(0.0, 0.0) })
            .collect();
        Ok(WaveParcel {
            wave: Wavefunction::new(grid, amps, Representation::Position)?,
            t_f: self.t_f,
            f0: self.f0,
            branch,
        })
    }

    /// `(q, |w|, phase)` rows; the phase is unwrapped along `q` after
    /// removing `e^{i p_c q}`.
    pub fn profile(&self, central_momentum: f64) -> Vec<(f64, f64, f64)> {
        let grid = self.grid();
        let mut out = Vec::with_capacity(grid.len());
        let mut last = 0.0;
        let mut offset = 0.0;
        for (j, a) in self.wave.amplitudes().iter().enumerate() {
            let q = grid.position(j);
            let raw = (a * Complex64::from_polar(1.0, -central_momentum * q)).arg();
            if j > 0 {
                let d = raw - last;
                offset -= (d / std::f64::consts::TAU).round() * std::f64::consts::TAU;
            }
            last = raw;
            out.push((q, a.norm(), raw + offset));
        }
        out
    }
}

/// `w(q) = int <p|psi> e^{i p^2 t_f/2} e^{ipq} dp` for a continuum state.
///
/// With `bound` given, the state is first checked for overlap with every
/// bound state.
pub fn wave_parcel(
    fourier: &Fourier,
    psi_c: &Wavefunction,
    t_f: f64,
    f0: f64,
    bound: Option<&BoundStateSet>,
) -> Result<WaveParcel> {
    let position = match psi_c.representation() {
        Representation::Position => psi_c.clone(),
        Representation::Momentum => fourier.to_position(psi_c)?,
    };
    if let Some(bound) = bound {
        let norm = position.norm();
        if norm == 0.0 {
            return Err(Error::ZeroNorm("continuum state"));
        }
        for (index, state) in bound.states().iter().enumerate() {
            let overlap = state.inner_product(&position)?.norm() / norm;
            if overlap > BOUND_CONTAMINATION {
                return Err(Error::BoundContamination { index, overlap });
            }
        }
    }
    let mut m = fourier.to_momentum(&position)?;
    let grid = *m.grid();
    for (k, a) in m.amplitudes_mut().iter_mut().enumerate() {
        let p = grid.momentum(k);
        *a *= Complex64::from_polar(1.0, 0.5 * p * p * t_f);
    }
    Ok(WaveParcel {
        wave: fourier.to_position(&m)?,
        t_f,
        f0,
        branch: Branch::Full,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub search_lo: f64,
    pub search_hi: f64,
    /// Width of the boxcar applied to `|w|^2` before locating the minimum.
    pub smoothing: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            search_lo: -35.0,
            search_hi: -10.0,
            smoothing: 5.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SplitParcel {
    /// The `p > 0` part that was partitioned.
    pub right: WaveParcel,
    pub direct: WaveParcel,
    pub reflected: WaveParcel,
    pub q_cut: f64,
}

/// Filters to `p > 0`, then cuts the `q` axis at the leftmost minimum of the
/// smoothed density inside the search window.
pub fn split_parcel(fourier: &Fourier, parcel: &WaveParcel, config: &SplitConfig) -> Result<SplitParcel> {
    let right = parcel.right_going(fourier)?;
    let grid = *right.grid();
    let density: Vec<f64> = right.wave.amplitudes().iter().map(|a| a.norm_sqr()).collect();
    let half = ((0.5 * config.smoothing / grid.dq()).round() as usize).max(1);
    let lo = grid
        .nearest_index(config.search_lo)
        .ok_or_else(|| Error::InvalidParameter("split window outside the grid".into()))?;
    let hi = grid
        .nearest_index(config.search_hi)
        .ok_or_else(|| Error::InvalidParameter("split window outside the grid".into()))?;
    if lo < half || hi + half >= grid.len() || hi <= lo + 2 {
        return Err(Error::InvalidParameter("split window too close to the grid edge".into()));
    }
    let smooth = |j: usize| density[j - half..=j + half].iter().sum::<f64>() / (2 * half + 1) as f64;
    let mut best = (lo, f64::INFINITY);
    for j in lo..=hi {
        let s = smooth(j);
        if s < best.1 {
            best = (j, s);
        }
    }
    if best.0 == lo || best.0 == hi {
        return Err(Error::NoSplitMinimum {
            lo: config.search_lo,
            hi: config.search_hi,
        });
    }
    let q_cut = grid.position(best.0);
    Ok(SplitParcel {
        direct: right.restricted(Branch::Direct, |q| q > q_cut)?,
        reflected: right.restricted(Branch::Reflected, |q| q <= q_cut)?,
        right,
        q_cut,
    })
}

pub fn reflection_probability(direct: &WaveParcel, reflected: &WaveParcel) -> Result<f64> {
    let (d, r) = (direct.norm_sqr(), reflected.norm_sqr());
    if d + r == 0.0 {
        return Err(Error::ZeroNorm("branch parcels"));
    }
    Ok(r / (d + r))
}

/// Momentum density of a branch parcel. The back-propagation phase drops
/// out, so this is also the spectrum of the branch at `t_f`.
pub fn reflected_spectrum(fourier: &Fourier, branch: &WaveParcel) -> Result<Spectrum> {
    momentum_spectrum(fourier, &branch.wave, Model::Tdse, branch.f0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParcelObservables {
    pub q_center: f64,
    pub p_center: f64,
    pub norm_sqr: f64,
    /// `<q>` of the packet `e^{-i p^2 t_f/2} w` at `t_f`.
    pub x_f: f64,
    /// `<p>` of the same packet.
    pub v_f: f64,
}

pub fn parcel_observables(fourier: &Fourier, parcel: &WaveParcel) -> Result<ParcelObservables> {
    let norm_sqr = parcel.norm_sqr();
    if norm_sqr == 0.0 {
        return Err(Error::ZeroNorm("parcel"));
    }
    let q_center = parcel.wave.expectation_position()?;
    let p_center = parcel.wave.expectation_momentum(fourier)?;
    // free flight: <q>(t) = <q>(0) + t <p>, exact and immune to wrap-around
    Ok(ParcelObservables {
        q_center,
        p_center,
        norm_sqr,
        x_f: q_center + parcel.t_f * p_center,
        v_f: p_center,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: Grid, q0: f64, p0: f64, width: f64) -> Wavefunction {
        Wavefunction::from_position_fn(grid, |q| {
            Complex64::from_polar((-(q - q0).powi(2) / (4.0 * width * width)).exp(), p0 * q)
        })
    }

    /// Free evolution by the exact momentum-space propagator.
    fn evolve(fourier: &Fourier, psi: &Wavefunction, t: f64) -> Wavefunction {
        let mut m = fourier.to_momentum(psi).unwrap();
        let grid = *m.grid();
        for (k, a) in m.amplitudes_mut().iter_mut().enumerate() {
            let p = grid.momentum(k);
            *a *= Complex64::from_polar(1.0, -0.5 * p * p * t);
        }
        fourier.to_position(&m).unwrap()
    }

    #[test]
    fn free_packet_parcel_returns_to_launch_point() {
        let grid = Grid::new(-400.0, 400.0, 4096).unwrap();
        let f = Fourier::new(&grid);
        let psi0 = gaussian(grid, -7.0, 1.5, 2.0);
        for t_f in [30.0, 80.0] {
            let psi = evolve(&f, &psi0, t_f);
            let w = wave_parcel(&f, &psi, t_f, 0.0, None).unwrap();
            assert!((w.wave.expectation_position().unwrap() + 7.0).abs() < 1e-8);
            assert!((w.norm_sqr() - psi.norm_sqr()).abs() < 1e-12 * psi.norm_sqr());
            let obs = parcel_observables(&f, &w).unwrap();
            assert!((obs.x_f - psi.expectation_position().unwrap()).abs() < 1e-6);
            assert!((obs.v_f - obs.p_center).abs() < 1e-10);
        }
    }

    #[test]
    fn split_partitions_two_humps() {
        let grid = Grid::new(-400.0, 400.0, 8192).unwrap();
        let f = Fourier::new(&grid);
        let mut psi = gaussian(grid, 0.0, 2.4, 3.0);
        psi.add_scaled(Complex64::new(0.0, 0.4), &gaussian(grid, -45.6, 2.4, 3.0)).unwrap();
        let w = wave_parcel(&f, &psi, 0.0, 0.0, None).unwrap();
        let s = split_parcel(&f, &w, &SplitConfig::default()).unwrap();
        assert!((-35.0..=-10.0).contains(&s.q_cut));
        let total = s.direct.norm_sqr() + s.reflected.norm_sqr();
        assert!((total - s.right.norm_sqr()).abs() < 1e-12 * total);
        let sum: f64 = s
            .direct
            .wave
            .amplitudes()
            .iter()
            .zip(s.reflected.wave.amplitudes())
            .zip(s.right.wave.amplitudes())
            .map(|((d, r), w)| (d + r - w).norm())
            .fold(0.0, f64::max);
        assert_eq!(sum, 0.0);
        let pr = reflection_probability(&s.direct, &s.reflected).unwrap();
        assert!((pr - 0.16 / 1.16).abs() < 1e-3, "{pr}");
        let mut rotated = w.clone();
        rotated.wave.scale(Complex64::from_polar(1.0, 0.7));
        let s2 = split_parcel(&f, &rotated, &SplitConfig::default()).unwrap();
        assert!((reflection_probability(&s2.direct, &s2.reflected).unwrap() - pr).abs() < 1e-14);
        let obs = parcel_observables(&f, &s.reflected).unwrap();
        assert!((obs.q_center + 45.6).abs() < 0.1);
    }

    #[test]
    fn merged_humps_have_no_cut() {
        let grid = Grid::new(-400.0, 400.0, 4096).unwrap();
        let f = Fourier::new(&grid);
        let psi = gaussian(grid, -20.0, 2.0, 30.0);
        let w = wave_parcel(&f, &psi, 0.0, 0.0, None).unwrap();
        assert!(matches!(
            split_parcel(&f, &w, &SplitConfig::default()),
            Err(Error::NoSplitMinimum { .. })
        ));
    }

    #[test]
    fn profile_unwraps_phase() {
        let grid = Grid::new(-50.0, 50.0, 1024).unwrap();
        let psi = gaussian(grid, 0.0, 1.3, 5.0);
        let w = WaveParcel {
            wave: psi,
            t_f: 0.0,
            f0: 0.0,
            branch: Branch::Full,
        };
        let rows = w.profile(0.0);
        let slope = (rows[600].2 - rows[400].2) / (rows[600].0 - rows[400].0);
        assert!((slope - 1.3).abs() < 1e-9);
        let flat = w.profile(1.3);
        assert!(flat.iter().all(|r| r.2.abs() < 1e-9));
    }
}
