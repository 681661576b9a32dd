//! Two-trajectory classical model: launch from the origin, bounce off the
//! neighbouring well as a hard wall, and dress the field-free parcels with
//! the resulting shifts in position, momentum and action.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::NirPulse;
use crate::grid::Fourier;
use crate::parcel::{Branch, ParcelObservables, WaveParcel};
use crate::potential::Potential;
use crate::spectrum::{momentum_spectrum, Model, Spectrum};

/// `+sqrt(v_f^2 + 2(V(x_f) - V(0)))` for the direct branch, the negative
/// root for the reflected one.
pub fn initial_velocity(branch: Branch, observables: &ParcelObservables, potential: &dyn Potential) -> Result<f64> {
    let radicand =
        observables.v_f.powi(2) + 2.0 * (potential.value(observables.x_f) - potential.value(0.0));
    if !(radicand > 0.0) {
        return Err(Error::NegativeRadicand(radicand));
    }
    match branch {
        Branch::Direct => Ok(radicand.sqrt()),
        Branch::Reflected => Ok(-radicand.sqrt()),
        Branch::Full => Err(Error::InvalidParameter(
            "launch velocity needs the direct or reflected branch".into(),
        )),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryConfig {
    pub dt: f64,
    /// Largest change of kinetic plus potential energy plus field work over
    /// `drift_block` steps.
    pub energy_tolerance: f64,
    pub drift_block: usize,
    /// Most substeps tried on a block that fails the energy check.
    pub max_substeps: usize,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            energy_tolerance: 1e-11,
            drift_block: 1000,
            max_substeps: 64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub v: f64,
    pub action: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub branch: Branch,
    pub f0: f64,
    pub samples: Vec<Sample>,
    pub bounce_time: Option<f64>,
    /// Times after launch at which `x` changes sign.
    pub crossings: Vec<f64>,
    /// Speeds just before and after the bounce.
    pub bounce_speeds: Option<(f64, f64)>,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        &self.samples[self.samples.len() - 1]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct State {
    x: f64,
    v: f64,
    s: f64,
    /// Work done by the field, so that `energy` is conserved with the
    /// field on as well.
    w: f64,
}

struct Dynamics<'a> {
    potential: &'a dyn Potential,
    nir: &'a NirPulse,
}

impl Dynamics<'_> {
    fn field(&self, t: f64) -> f64 {
        if self.nir.is_off() {
            0.0
        } else {
            self.nir.field(t)
        }
    }

    fn rhs(&self, t: f64, y: State) -> State {
        let f = self.field(t);
        State {
            x: y.v,
            v: -self.potential.gradient(y.x) - f,
            s: 0.5 * y.v * y.v - self.potential.value(y.x) - f * y.x,
            w: f * y.v,
        }
    }

    /// One RK4 step. The action column is a pure quadrature, for which RK4
    /// reduces to Simpson's rule.
    fn rk4(&self, t: f64, y: State, h: f64) -> State {
        let add = |y: State, k: State, c: f64| State {
            x: y.x + c * k.x,
            v: y.v + c * k.v,
            s: y.s + c * k.s,
            w: y.w + c * k.w,
        };
        let k1 = self.rhs(t, y);
        let k2 = self.rhs(t + 0.5 * h, add(y, k1, 0.5 * h));
        let k3 = self.rhs(t + 0.5 * h, add(y, k2, 0.5 * h));
        let k4 = self.rhs(t + h, add(y, k3, h));
        State {
            x: y.x + h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
            v: y.v + h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v),
            s: y.s + h / 6.0 * (k1.s + 2.0 * k2.s + 2.0 * k3.s + k4.s),
            w: y.w + h / 6.0 * (k1.w + 2.0 * k2.w + 2.0 * k3.w + k4.w),
        }
    }

    fn energy(&self, y: State) -> f64 {
        0.5 * y.v * y.v + self.potential.value(y.x) + y.w
    }
}

/// Fraction `s` in `[0, 1]` of the step at which the cubic Hermite
/// interpolant through the end states crosses `level`.
fn hermite_crossing(a: State, b: State, h: f64, level: f64) -> f64 {
    let eval = |s: f64| {
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * a.x
            + (s3 - 2.0 * s2 + s) * h * a.v
            + (-2.0 * s3 + 3.0 * s2) * b.x
            + (s3 - s2) * h * b.v
            - level
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    let f_lo = eval(lo);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if (eval(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

struct Integrator<'a> {
    dynamics: Dynamics<'a>,
    wall: Option<f64>,
    bounce: Option<(f64, f64, f64)>,
}

impl Integrator<'_> {
    /// Advances by `h` using `substeps` RK4 steps, reflecting at the wall.
    fn advance(&mut self, t: f64, mut y: State, h: f64, substeps: usize) -> State {
        let dh = h / substeps as f64;
        for k in 0..substeps {
            let tk = t + k as f64 * dh;
            let next = self.dynamics.rk4(tk, y, dh);
            y = match self.wall {
                Some(wall) if self.bounce.is_none() && next.x < wall && y.x >= wall => {
                    let s = hermite_crossing(y, next, dh, wall);
                    let hit = self.dynamics.rk4(tk, y, s * dh);
                    let before = hit.v.abs();
                    let flipped = State { v: -hit.v, x: wall, ..hit };
                    self.bounce = Some((tk + s * dh, before, flipped.v.abs()));
                    self.dynamics.rk4(tk + s * dh, flipped, (1.0 - s) * dh)
                }
                _ => next,
            };
        }
        y
    }
}

/// RK4 trajectory from `x(0) = 0` to `t_f`. The reflected branch reverses
/// its velocity when it first reaches `wall`.
pub fn integrate_trajectory(
    branch: Branch,
    v0: f64,
    nir: &NirPulse,
    potential: &dyn Potential,
    wall: f64,
    t_f: f64,
    config: &TrajectoryConfig,
) -> Result<Trajectory> {
    if !(config.dt > 0.0 && t_f > 0.0 && config.drift_block > 0 && config.max_substeps > 0) {
        return Err(Error::InvalidParameter(
            "trajectory needs dt > 0, t_f > 0 and positive block sizes".into(),
        ));
    }
    let mut integ = Integrator {
        dynamics: Dynamics { potential, nir },
        wall: (branch == Branch::Reflected).then_some(wall),
        bounce: None,
    };
    let full = (t_f / config.dt).floor() as usize;
    let mut steps: Vec<f64> = vec![config.dt; full];
    let rest = t_f - full as f64 * config.dt;
    if rest > 1e-12 * config.dt {
        steps.push(rest);
    }

    let mut y = State { x: 0.0, v: v0, s: 0.0, w: 0.0 };
    let mut t = 0.0;
    let mut samples = vec![Sample { t, x: y.x, v: y.v, action: y.s }];
    let mut i = 0;
    while i < steps.len() {
        let block = &steps[i..(i + config.drift_block).min(steps.len())];
        let mut substeps = 1;
        loop {
            let bounce = integ.bounce;
            let mut yb = y;
            let mut tb = t;
            let mut out = Vec::with_capacity(block.len());
            for &h in block {
                yb = integ.advance(tb, yb, h, substeps);
                tb += h;
                out.push(Sample { t: tb, x: yb.x, v: yb.v, action: yb.s });
            }
            let drift = (integ.dynamics.energy(yb) - integ.dynamics.energy(y)).abs();
            if drift <= config.energy_tolerance {
                y = yb;
                t = tb;
                samples.extend(out);
                break;
            }
            integ.bounce = bounce;
            substeps *= 2;
            if substeps > config.max_substeps {
                return Err(Error::EnergyDrift { drift });
            }
        }
        i += block.len();
    }

    if branch == Branch::Reflected && integ.bounce.is_none() {
        return Err(Error::WallNotReached(t_f));
    }
    let crossings = zero_crossings(&samples);
    Ok(Trajectory {
        branch,
        f0: nir.f0,
        samples,
        bounce_time: integ.bounce.map(|b| b.0),
        crossings,
        bounce_speeds: integ.bounce.map(|b| (b.1, b.2)),
    })
}

/// Sign changes of `x` after the launch, located on the Hermite cubic.
fn zero_crossings(samples: &[Sample]) -> Vec<f64> {
    samples
        .windows(2)
        .skip(1)
        .filter(|w| (w[0].x < 0.0) != (w[1].x < 0.0))
        .map(|w| {
            let h = w[1].t - w[0].t;
            let a = State { x: w[0].x, v: w[0].v, s: 0.0, w: 0.0 };
            let b = State { x: w[1].x, v: w[1].v, s: 0.0, w: 0.0 };
            w[0].t + hermite_crossing(a, b, h, 0.0) * h
        })
        .collect()
}

/// Apparent launch point, final momentum and back-propagated action.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DressingParams {
    pub q: f64,
    pub p: f64,
    pub delta_s: f64,
}

pub fn dressing_params(trajectory: &Trajectory) -> DressingParams {
    let end = trajectory.last();
    DressingParams {
        q: end.x - end.v * end.t,
        p: end.v,
        delta_s: end.action - 0.5 * end.v * end.v * end.t,
    }
}

/// `w_L(q) = w_0(q - q_L + q_0) e^{i[(p_L - p_0)(q - q_L) + S_L - S_0]}`.
///
/// The translation is a momentum-space phase ramp, so it is exact for
/// sub-grid shifts.
pub fn dress_parcel(
    fourier: &Fourier,
    parcel: &WaveParcel,
    field_free: &DressingParams,
    dressed: &DressingParams,
    f0: f64,
) -> Result<WaveParcel> {
    let shift = dressed.q - field_free.q;
    let mut m = fourier.to_momentum(&parcel.wave)?;
    let grid = *m.grid();
    for (k, a) in m.amplitudes_mut().iter_mut().enumerate() {
        *a *= Complex64::from_polar(1.0, -grid.momentum(k) * shift);
    }
    let mut wave = fourier.to_position(&m)?;
    let dp = dressed.p - field_free.p;
    let ds = dressed.delta_s - field_free.delta_s;
    for (j, a) in wave.amplitudes_mut().iter_mut().enumerate() {
        *a *= Complex64::from_polar(1.0, dp * (grid.position(j) - dressed.q) + ds);
    }
    Ok(WaveParcel {
        wave,
        t_f: parcel.t_f,
        f0,
        branch: parcel.branch,
    })
}

/// `|<p| w_D + w_R>|^2`, tagged as the classical model.
pub fn synthesize_spectrum(fourier: &Fourier, direct: &WaveParcel, reflected: &WaveParcel) -> Result<Spectrum> {
    let mut sum = direct.wave.clone();
    sum.add_scaled(Complex64::new(1.0, 0.0), &reflected.wave)?;
    momentum_spectrum(fourier, &sum, Model::Classical, direct.f0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{FieldPolarity, NirParams};
    use crate::grid::{Grid, Wavefunction};
    use crate::potential::{Flat, PotentialParams};

    fn off() -> NirPulse {
        NirPulse::from_params(0.0, &NirParams::default()).unwrap()
    }

    fn obs(x_f: f64, v_f: f64) -> ParcelObservables {
        ParcelObservables {
            q_center: 0.0,
            p_center: v_f,
            norm_sqr: 1.0,
            x_f,
            v_f,
        }
    }

    #[test]
    fn launch_velocity_signs() {
        let o = obs(1400.0, 2.4);
        assert_eq!(initial_velocity(Branch::Direct, &o, &Flat(-0.3)).unwrap(), 2.4);
        assert_eq!(initial_velocity(Branch::Reflected, &o, &Flat(-0.3)).unwrap(), -2.4);
        let v = PotentialParams::default();
        let d = initial_velocity(Branch::Direct, &o, &v).unwrap();
        let expect = (2.4f64.powi(2) + 2.0 * (v.value(1400.0) - v.value(0.0))).sqrt();
        assert_eq!(d, expect);
        assert!(d > 2.4);
        assert!(matches!(
            initial_velocity(Branch::Direct, &obs(1400.0, 0.1), &Inverted(v)),
            Err(Error::NegativeRadicand(_))
        ));
    }

    /// The double well turned upside down, so `V(x_f) - V(0)` is negative.
    struct Inverted(PotentialParams);
    impl Potential for Inverted {
        fn value(&self, q: f64) -> f64 {
            -self.0.value(q)
        }
        fn gradient(&self, q: f64) -> f64 {
            -self.0.gradient(q)
        }
    }

    #[test]
    fn free_particle_is_exact() {
        let cfg = TrajectoryConfig::default();
        let tr = integrate_trajectory(Branch::Direct, 1.7, &off(), &Flat(0.0), -24.0, 100.005, &cfg).unwrap();
        let end = tr.last();
        assert!((end.x - 1.7 * 100.005).abs() < 1e-10);
        let p = dressing_params(&tr);
        assert!(p.q.abs() < 1e-10 && p.delta_s.abs() < 1e-10, "{p:?}");
        assert!(tr.crossings.is_empty());
    }

    #[test]
    fn reflected_bounce_and_return() {
        let v = PotentialParams::default();
        let cfg = TrajectoryConfig::default();
        let tr = integrate_trajectory(Branch::Reflected, -2.9, &off(), &v, v.q_r, 300.0, &cfg).unwrap();
        let (before, after) = tr.bounce_speeds.unwrap();
        assert!((before - after).abs() < 1e-10);
        assert_eq!(tr.crossings.len(), 1);
        assert!(tr.crossings[0] > 10.0 && tr.crossings[0] < 30.0);
        assert!(tr.last().v > 0.0);
        let free = Flat(0.0);
        assert!(matches!(
            integrate_trajectory(Branch::Reflected, 1.0, &off(), &free, -24.0, 50.0, &cfg),
            Err(Error::WallNotReached(_))
        ));
    }

    #[test]
    fn halving_dt_is_stable() {
        let v = PotentialParams::default();
        let nir = NirPulse::from_params(0.02, &NirParams {
            polarity: FieldPolarity::PositivePeak,
            ..Default::default()
        })
        .unwrap();
        let coarse = TrajectoryConfig::default();
        let fine = TrajectoryConfig { dt: 0.005, ..coarse };
        for (branch, v0) in [(Branch::Direct, 2.9), (Branch::Reflected, -2.9)] {
            let a = integrate_trajectory(branch, v0, &nir, &v, v.q_r, 400.0, &coarse).unwrap();
            let b = integrate_trajectory(branch, v0, &nir, &v, v.q_r, 400.0, &fine).unwrap();
            let (ea, eb) = (a.last(), b.last());
            assert!((ea.x - eb.x).abs() < 1e-8 && (ea.v - eb.v).abs() < 1e-8, "{branch:?} {ea:?} {eb:?}");
        }
    }

    #[test]
    fn dressing_identity_and_momentum_offset() {
        let grid = Grid::new(-200.0, 200.0, 4096).unwrap();
        let f = Fourier::new(&grid);
        let wave = Wavefunction::from_position_fn(grid, |q| {
            Complex64::from_polar((-(q + 40.0f64).powi(2) / 20.0).exp(), 2.0 * q)
        });
        let w = WaveParcel { wave, t_f: 600.0, f0: 0.0, branch: Branch::Reflected };
        let p0 = DressingParams { q: -45.0, p: 2.4, delta_s: 3.0 };
        let same = dress_parcel(&f, &w, &p0, &p0, 0.0).unwrap();
        let diff = same
            .wave
            .amplitudes()
            .iter()
            .zip(w.wave.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);

        let dp = 4.0 * grid.dp();
        let pl = DressingParams { p: p0.p + dp, ..p0 };
        let moved = dress_parcel(&f, &w, &p0, &pl, 0.01).unwrap();
        assert!((moved.norm_sqr() - w.norm_sqr()).abs() < 1e-12 * w.norm_sqr());
        let s0 = momentum_spectrum(&f, &w.wave, Model::Classical, 0.0).unwrap();
        let s1 = momentum_spectrum(&f, &moved.wave, Model::Classical, 0.0).unwrap();
        for i in 100..s0.len() - 100 {
            assert!((s1.density[i + 4] - s0.density[i]).abs() < 1e-10 * s0.density.iter().cloned().fold(0.0, f64::max));
        }
    }
}
