//! Split-operator propagation of `p^2/2 + V(q) + (F_L + F_X) q` and the
//! photoelectron run built on it.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{FieldSet, NirPulse, XuvPulse};
use crate::grid::{Fourier, Grid, Representation, Wavefunction};
use crate::potential::{BoundStateSet, Potential};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gauge {
    /// NIR and XUV both enter as `F(t) q`.
    #[default]
    Length,
    /// NIR enters as `(p + A)^2/2`; the XUV stays `F_X q`.
    Velocity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Extra time after `t_end` for a second snapshot; zero disables it.
    pub extra_time: f64,
    /// Width of the strip along each grid edge watched for wrap-around.
    pub edge_margin: f64,
    /// Largest probability allowed in the edge strips.
    pub edge_tolerance: f64,
    /// Largest relative change of the norm.
    pub norm_tolerance: f64,
    /// Steps between watchdog checks.
    pub check_interval: usize,
    pub gauge: Gauge,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            dt: 0.005,
            t_end: 600.0,
            extra_time: 100.0,
            edge_margin: 50.0,
            edge_tolerance: 1e-10,
            norm_tolerance: 1e-8,
            check_interval: 2000,
            gauge: Gauge::Length,
        }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.t_end > 0.0 && self.extra_time >= 0.0) {
            return Err(Error::InvalidParameter(
                "need dt > 0, t_end > 0, extra_time >= 0".into(),
            ));
        }
        if self.check_interval == 0 {
            return Err(Error::InvalidParameter("check_interval must be positive".into()));
        }
        Ok(())
    }
}

/// Time-dependent couplings seen by the propagator.
#[derive(Clone, Copy, Debug)]
pub struct Drive {
    pub nir: Option<NirPulse>,
    pub xuv: Option<XuvPulse>,
}

impl Drive {
    pub const NONE: Drive = Drive { nir: None, xuv: None };

    fn nir_field(&self, t: f64) -> f64 {
        self.nir.map_or(0.0, |n| n.field(t))
    }

    fn xuv_field(&self, t: f64) -> f64 {
        self.xuv.map_or(0.0, |x| x.field(t))
    }

    fn vector_potential(&self, t: f64) -> f64 {
        self.nir.map_or(0.0, |n| n.vector_potential(t))
    }
}

/// `exp(-i alpha j)` for `0 <= j < 2^bits`, split into high and low halves.
struct Ramp {
    shift: u32,
    mask: usize,
    hi: Vec<Complex64>,
    lo: Vec<Complex64>,
}

impl Ramp {
    fn new(bits: u32) -> Self {
        let shift = bits.div_ceil(2);
        Self {
            shift,
            mask: (1usize << shift) - 1,
            hi: vec![Complex64::new(1.0, 0.0); 1usize << (bits - shift)],
            lo: vec![Complex64::new(1.0, 0.0); 1usize << shift],
        }
    }

    /// Fills the tables for `c * exp(-i alpha j)`.
    fn set(&mut self, alpha: f64, c: Complex64) {
        for (l, v) in self.lo.iter_mut().enumerate() {
            *v = Complex64::from_polar(1.0, -alpha * l as f64);
        }
        let step = (1usize << self.shift) as f64;
        for (h, v) in self.hi.iter_mut().enumerate() {
            *v = c * Complex64::from_polar(1.0, -alpha * step * h as f64);
        }
    }

    #[inline(always)]
    fn get(&self, j: usize) -> Complex64 {
        self.hi[j >> self.shift] * self.lo[j & self.mask]
    }
}

/// Strang split-operator stepper on a fixed grid.
///
/// Length gauge: `K/2 V(t+dt/2) K/2` per step. Velocity gauge:
/// `V(t)/2 K(t+dt/2) V(t+dt)/2`. Adjacent half steps are merged, so a run
/// of `n` steps costs `n + 1` transform pairs.
pub struct Propagator {
    grid: Grid,
    fourier: Fourier,
    scratch: Vec<Complex64>,
    dt: f64,
    gauge: Gauge,
    kinetic_full: Vec<Complex64>,
    kinetic_half: Vec<Complex64>,
    potential_full: Vec<Complex64>,
    potential_half: Vec<Complex64>,
    /// Natural-order indices holding negative momenta.
    wraps: Vec<bool>,
    ramp: Ramp,
    bits: u32,
}

impl Propagator {
    pub fn new(grid: &Grid, potential: &dyn Potential, dt: f64, gauge: Gauge) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter("dt must be > 0".into()));
        }
        let n = grid.len();
        let norm = 1.0 / n as f64;
        let kin = |tau: f64| -> Vec<Complex64> {
            grid.momenta()
                .iter()
                .map(|p| Complex64::from_polar(norm, -0.5 * p * p * tau))
                .collect()
        };
        let pot = |tau: f64| -> Vec<Complex64> {
            grid.positions()
                .iter()
                .map(|&q| Complex64::from_polar(1.0, -potential.value(q) * tau))
                .collect()
        };
        let fourier = Fourier::new(grid);
        let scratch = fourier.scratch();
        let bits = n.trailing_zeros();
        Ok(Self {
            grid: *grid,
            scratch,
            dt,
            gauge,
            kinetic_full: kin(dt),
            kinetic_half: kin(0.5 * dt),
            potential_full: pot(dt),
            potential_half: pot(0.5 * dt),
            wraps: (0..n).map(|k| k > n / 2).collect(),
            ramp: Ramp::new(bits),
            bits,
            fourier,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn fourier(&self) -> &Fourier {
        &self.fourier
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn gauge(&self) -> Gauge {
        self.gauge
    }

    /// `psi *= V-factor * exp(-i F tau q)`.
    fn position_kick(&mut self, psi: &mut [Complex64], half: bool, field: f64) {
        let tau = if half { 0.5 * self.dt } else { self.dt };
        let base = if half { &self.potential_half } else { &self.potential_full };
        if field == 0.0 {
            for (a, v) in psi.iter_mut().zip(base.iter()) {
                *a *= v;
            }
            return;
        }
        let c0 = Complex64::from_polar(1.0, -field * tau * self.grid.q_min());
        self.ramp.set(field * tau * self.grid.dq(), c0);
        for (j, (a, v)) in psi.iter_mut().zip(base.iter()).enumerate() {
            *a *= v * self.ramp.get(j);
        }
    }

    /// Momentum-space factor: `exp(-i p^2 tau/2)` (length gauge) or
    /// `exp(-i (p + A)^2 tau/2)` (velocity gauge), including the `1/n` of
    /// the transform pair.
    fn kinetic_kick(&mut self, psi: &mut [Complex64], half: bool, a: f64) {
        self.fourier.fft_in_place(psi, &mut self.scratch);
        let base = if half { &self.kinetic_half } else { &self.kinetic_full };
        if a == 0.0 {
            for (x, k) in psi.iter_mut().zip(base.iter()) {
                *x *= k;
            }
        } else {
            let tau = if half { 0.5 * self.dt } else { self.dt };
            let n = self.grid.len() as f64;
            let alpha = a * tau * self.grid.dp();
            let c0 = Complex64::from_polar(1.0, -0.5 * a * a * tau);
            self.ramp.set(alpha, c0);
            let unwrap = Complex64::from_polar(1.0, alpha * n);
            for (k, (x, b)) in psi.iter_mut().zip(base.iter()).enumerate() {
                let mut f = b * self.ramp.get(k);
                if self.wraps[k] {
                    f *= unwrap;
                }
                *x *= f;
            }
        }
        self.fourier.ifft_in_place(psi, &mut self.scratch);
    }

    /// Advances a position-space state from `t0` by `steps` steps.
    pub fn advance(&mut self, psi: &mut [Complex64], t0: f64, steps: usize, drive: &Drive) {
        debug_assert_eq!(psi.len(), 1usize << self.bits);
        if steps == 0 {
            return;
        }
        let dt = self.dt;
        match self.gauge {
            Gauge::Length => {
                self.kinetic_kick(psi, true, 0.0);
                for s in 0..steps {
                    let tm = t0 + (s as f64 + 0.5) * dt;
                    let f = drive.nir_field(tm) + drive.xuv_field(tm);
                    self.position_kick(psi, false, f);
                    self.kinetic_kick(psi, s + 1 == steps, 0.0);
                }
            }
            Gauge::Velocity => {
                self.position_kick(psi, true, drive.xuv_field(t0));
                for s in 0..steps {
                    let tm = t0 + (s as f64 + 0.5) * dt;
                    self.kinetic_kick(psi, false, drive.vector_potential(tm));
                    let tn = t0 + (s + 1) as f64 * dt;
                    self.position_kick(psi, s + 1 == steps, drive.xuv_field(tn));
                }
            }
        }
    }

    /// Probability within `margin` of either grid edge.
    pub fn edge_probability(&self, psi: &[Complex64], margin: f64) -> f64 {
        let k = ((margin / self.grid.dq()).ceil() as usize).min(psi.len() / 2);
        let n = psi.len();
        (psi[..k].iter().chain(&psi[n - k..]).map(|a| a.norm_sqr()).sum::<f64>()) * self.grid.dq()
    }

    /// `<psi| p^2/2 + V |psi>` for a position-space state, using `potential`.
    pub fn energy(&self, psi: &Wavefunction, potential: &dyn Potential) -> Result<f64> {
        let m = self.fourier.to_momentum(psi)?;
        let kinetic: f64 = m
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(k, a)| 0.5 * self.grid.momentum(k).powi(2) * a.norm_sqr())
            .sum::<f64>()
            * self.grid.dp();
        let pot: f64 = psi
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(j, a)| potential.value(self.grid.position(j)) * a.norm_sqr())
            .sum::<f64>()
            * self.grid.dq();
        Ok(kinetic + pot)
    }
}

/// Watchdog record for one propagation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub steps: usize,
    pub max_edge_probability: f64,
    pub max_norm_drift: f64,
    pub wall_seconds: f64,
}

fn norm_sqr(psi: &[Complex64], dq: f64) -> f64 {
    psi.iter().map(|a| a.norm_sqr()).sum::<f64>() * dq
}

/// Propagates in chunks of `check_interval` steps, checking the edge strips
/// and the norm after each chunk.
pub fn propagate_checked(
    prop: &mut Propagator,
    psi: &mut [Complex64],
    t0: f64,
    steps: usize,
    drive: &Drive,
    config: &PropagationConfig,
    diag: &mut Diagnostics,
) -> Result<()> {
    let dq = prop.grid().dq();
    let reference = norm_sqr(psi, dq);
    let mut done = 0;
    while done < steps {
        let chunk = config.check_interval.min(steps - done);
        prop.advance(psi, t0 + done as f64 * prop.dt(), chunk, drive);
        done += chunk;
        diag.steps += chunk;
        let t = t0 + done as f64 * prop.dt();
        let edge = prop.edge_probability(psi, config.edge_margin);
        diag.max_edge_probability = diag.max_edge_probability.max(edge);
        if edge > config.edge_tolerance {
            return Err(Error::WrapAround { t, probability: edge });
        }
        if reference > 0.0 {
            let drift = (norm_sqr(psi, dq) - reference).abs() / reference;
            diag.max_norm_drift = diag.max_norm_drift.max(drift);
            if drift > config.norm_tolerance {
                return Err(Error::NormDrift { t, drift });
            }
        }
    }
    Ok(())
}

/// `propagate` in the single-state sense: `psi_init` at `t0` carried to
/// `t0 + steps dt` under `drive`.
pub fn propagate(
    prop: &mut Propagator,
    psi_init: &Wavefunction,
    t0: f64,
    steps: usize,
    drive: &Drive,
    config: &PropagationConfig,
) -> Result<(Wavefunction, Diagnostics)> {
    if psi_init.grid() != prop.grid() {
        return Err(Error::GridMismatch);
    }
    if psi_init.representation() != Representation::Position {
        return Err(Error::Contract("propagation needs a position-space state".into()));
    }
    let start = Instant::now();
    let mut diag = Diagnostics::default();
    let mut amps = psi_init.amplitudes().to_vec();
    propagate_checked(prop, &mut amps, t0, steps, drive, config, &mut diag)?;
    diag.wall_seconds = start.elapsed().as_secs_f64();
    Ok((Wavefunction::new(*prop.grid(), amps, Representation::Position)?, diag))
}

/// The XUV-induced part of the wave function for one NIR strength.
#[derive(Clone, Debug)]
pub struct PhotoelectronRun {
    pub f0: f64,
    pub t_start: f64,
    pub xuv_window: (f64, f64),
    /// Measurement time actually reached (a multiple of `dt` from the window).
    pub t_end: f64,
    pub final_state: Wavefunction,
    /// The same at `t_end + extra_time`, when requested.
    pub late_state: Option<(f64, Wavefunction)>,
    pub diagnostics: Diagnostics,
}

/// Runs the photoionization experiment and returns the difference between
/// the propagations with and without the XUV pulse.
///
/// The initial state `e^{iW t_start} psi0` is carried under the NIR alone to
/// the start of the XUV window. There the state is copied; one copy sees
/// both pulses across the window and the other only the NIR. Their
/// difference is exactly the XUV-induced wave, which is then propagated
/// alone to `t_end`. Anything that is common to both copies (the NIR-only
/// evolution of the bound state and the splitting error of the initial
/// eigenstate) cancels.
pub fn run_photoelectron(
    prop: &mut Propagator,
    psi0: &Wavefunction,
    ionization_energy: f64,
    fields: &FieldSet,
    config: &PropagationConfig,
) -> Result<PhotoelectronRun> {
    config.validate()?;
    if psi0.grid() != prop.grid() {
        return Err(Error::GridMismatch);
    }
    let start = Instant::now();
    let dt = prop.dt();
    let half_steps = (fields.xuv.half_window() / dt).ceil() as usize;
    let window_start = -(half_steps as f64) * dt;
    let window_end = half_steps as f64 * dt;
    let pre_steps = if fields.nir.is_off() {
        0
    } else {
        ((fields.nir.tau + window_start) / dt).ceil().max(0.0) as usize
    };
    let t_start = window_start - pre_steps as f64 * dt;
    if config.t_end <= window_end {
        return Err(Error::InvalidParameter(format!(
            "t_end = {} must follow the XUV window end {window_end}",
            config.t_end
        )));
    }
    let post_steps = ((config.t_end - window_end) / dt).round() as usize;
    let t_end = window_end + post_steps as f64 * dt;

    let nir_only = Drive {
        nir: (!fields.nir.is_off()).then_some(fields.nir),
        xuv: None,
    };
    let both = Drive {
        nir: nir_only.nir,
        xuv: Some(fields.xuv),
    };
    let mut diag = Diagnostics::default();

    let phase = Complex64::from_polar(1.0, ionization_energy * t_start);
    let mut bare: Vec<Complex64> = psi0.amplitudes().iter().map(|a| a * phase).collect();
    propagate_checked(prop, &mut bare, t_start, pre_steps, &nir_only, config, &mut diag)?;

    let mut dressed = bare.clone();
    propagate_checked(prop, &mut dressed, window_start, 2 * half_steps, &both, config, &mut diag)?;
    propagate_checked(prop, &mut bare, window_start, 2 * half_steps, &nir_only, config, &mut diag)?;
    let mut delta: Vec<Complex64> = dressed.iter().zip(&bare).map(|(a, b)| a - b).collect();
    drop(dressed);
    drop(bare);

    propagate_checked(prop, &mut delta, window_end, post_steps, &nir_only, config, &mut diag)?;
    let final_state = Wavefunction::new(*prop.grid(), delta.clone(), Representation::Position)?;

    let late_state = if config.extra_time > 0.0 {
        let extra_steps = (config.extra_time / dt).round() as usize;
        propagate_checked(prop, &mut delta, t_end, extra_steps, &nir_only, config, &mut diag)?;
        Some((
            t_end + extra_steps as f64 * dt,
            Wavefunction::new(*prop.grid(), delta, Representation::Position)?,
        ))
    } else {
        None
    };
    diag.wall_seconds = start.elapsed().as_secs_f64();
    Ok(PhotoelectronRun {
        f0: fields.nir.f0,
        t_start,
        xuv_window: (window_start, window_end),
        t_end,
        final_state,
        late_state,
        diagnostics: diag,
    })
}

/// `psi - sum_n <psi_n|psi> psi_n`, applied twice to remove round-off.
pub fn continuum_part(psi: &Wavefunction, bound: &BoundStateSet) -> Result<Wavefunction> {
    if psi.grid() != bound.grid() {
        return Err(Error::GridMismatch);
    }
    let mut out = psi.clone();
    for _ in 0..2 {
        for state in bound.states() {
            let c = state.inner_product(&out)?;
            out.add_scaled(-c, state)?;
        }
    }
    Ok(out)
}

/// One photoelectron run per NIR strength. Failures are reported per run.
pub fn run_dressed_scan(
    grid: &Grid,
    potential: &dyn Potential,
    psi0: &Wavefunction,
    ionization_energy: f64,
    fields: &[FieldSet],
    config: &PropagationConfig,
) -> Vec<Result<PhotoelectronRun>> {
    fields
        .par_iter()
        .map(|f| {
            let mut prop = Propagator::new(grid, potential, config.dt, config.gauge)?;
            run_photoelectron(&mut prop, psi0, ionization_energy, f, config)
        })
        .collect()
}
