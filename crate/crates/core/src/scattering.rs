//! Positive-energy eigenstates of `p^2/2 + V` from the Lippmann-Schwinger
//! equation, and the dipole matrix elements `d(p) = <phi_p| q |psi_0>`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Representation, Wavefunction};
use crate::krylov::{gmres, GmresOptions};
use crate::potential::Potential;
use crate::spline::CubicSpline;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Coefficient `c` in `phi = e^{ipq} + (c/|p|) int e^{-i|p||q-q'|} V phi dq'`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GreenPrefactor {
    /// `c = -2i`.
    Printed,
    /// `c = -i`.
    Retarded,
    /// `c = +i`, the Green's function of `E - H_0` for outgoing-in-reverse waves.
    Advanced,
}

impl GreenPrefactor {
    pub const ALL: [GreenPrefactor; 3] = [
        GreenPrefactor::Advanced,
        GreenPrefactor::Retarded,
        GreenPrefactor::Printed,
    ];

    pub fn coefficient(self) -> Complex64 {
        match self {
            GreenPrefactor::Printed => -2.0 * I,
            GreenPrefactor::Retarded => -I,
            GreenPrefactor::Advanced => I,
        }
    }
}

/// Either a fixed prefactor or selection by the eigen-residual test.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrefactorChoice {
    #[default]
    Auto,
    Printed,
    Retarded,
    Advanced,
}

impl PrefactorChoice {
    pub fn fixed(self) -> Option<GreenPrefactor> {
        match self {
            PrefactorChoice::Auto => None,
            PrefactorChoice::Printed => Some(GreenPrefactor::Printed),
            PrefactorChoice::Retarded => Some(GreenPrefactor::Retarded),
            PrefactorChoice::Advanced => Some(GreenPrefactor::Advanced),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScatteringConfig {
    pub p_min: f64,
    /// Relative sup-norm change that ends the Born iteration.
    pub tolerance: f64,
    pub max_order: usize,
    /// Half-width of the region (centered between the wells) where the
    /// potential is kept.
    pub half_width: f64,
    /// Length of the cos^2 roll-off at each end of that region.
    pub taper: f64,
    /// Potential-free margin added beyond the region.
    pub pad: f64,
    /// Fine points per lattice spacing of the bound-state grid.
    pub refine: usize,
    pub prefactor: PrefactorChoice,
    /// Sum the Born series by Krylov iteration when plain iteration fails.
    pub krylov: bool,
}

impl Default for ScatteringConfig {
    fn default() -> Self {
        Self {
            p_min: 0.3,
            tolerance: 1e-8,
            max_order: 200,
            half_width: 150.0,
            taper: 50.0,
            pad: 10.0,
            refine: 4,
            prefactor: PrefactorChoice::Auto,
            krylov: true,
        }
    }
}

impl ScatteringConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_min > 0.0) {
            return Err(Error::InvalidParameter("p_min must be > 0".into()));
        }
        if !(self.tolerance > 0.0) || self.max_order == 0 || self.refine == 0 {
            return Err(Error::InvalidParameter(
                "tolerance, max_order and refine must be positive".into(),
            ));
        }
        if !(self.half_width > self.taper && self.taper >= 0.0 && self.pad >= 0.0) {
            return Err(Error::InvalidParameter(
                "need half_width > taper >= 0 and pad >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    BornIteration,
    Krylov,
}

/// `phi_p` sampled on the solver's fine lattice.
#[derive(Clone, Debug)]
pub struct ScatteringState {
    pub p: f64,
    pub prefactor: GreenPrefactor,
    pub method: SolveMethod,
    /// Born orders (plain iteration) or Krylov iterations (each one more
    /// power of the kernel).
    pub born_orders_used: usize,
    /// Relative interior eigen-residual.
    pub residual: f64,
    origin: f64,
    spacing: f64,
    amplitudes: Vec<Complex64>,
}

impl ScatteringState {
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn position(&self, j: usize) -> f64 {
        self.origin + self.spacing * j as f64
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Amplitude at `q` if it is one of the fine lattice points.
    pub fn at_lattice_point(&self, q: f64) -> Option<Complex64> {
        let x = (q - self.origin) / self.spacing;
        let j = x.round();
        if (x - j).abs() > 1e-6 || j < 0.0 || j >= self.amplitudes.len() as f64 {
            return None;
        }
        Some(self.amplitudes[j as usize])
    }
}

/// The Lippmann-Schwinger kernel for a tapered copy of a potential.
#[derive(Clone)]
pub struct LippmannSchwinger {
    config: ScatteringConfig,
    center: f64,
    origin: f64,
    spacing: f64,
    potential: Arc<[f64]>,
}

impl std::fmt::Debug for LippmannSchwinger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LippmannSchwinger")
            .field("config", &self.config)
            .field("origin", &self.origin)
            .field("spacing", &self.spacing)
            .field("points", &self.potential.len())
            .finish()
    }
}

impl LippmannSchwinger {
    /// Builds the fine lattice around `center` so that every point of
    /// `lattice` inside it is also a fine point.
    pub fn new(
        potential: &dyn Potential,
        center: f64,
        lattice: &Grid,
        config: ScatteringConfig,
    ) -> Result<Self> {
        config.validate()?;
        let dq = lattice.dq();
        let spacing = dq / config.refine as f64;
        let reach = config.half_width + config.pad;
        let steps = ((center - reach - lattice.q_min()) / dq).floor();
        let origin = lattice.q_min() + steps * dq;
        let n = ((center + reach - origin) / spacing).ceil() as usize + 1;
        let values = (0..n)
            .map(|j| {
                let q = origin + spacing * j as f64;
                potential.value(q) * window(q - center, config.half_width, config.taper)
            })
            .collect::<Vec<_>>();
        Ok(Self {
            config,
            center,
            origin,
            spacing,
            potential: values.into(),
        })
    }

    pub fn config(&self) -> &ScatteringConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.potential.len()
    }

    pub fn is_empty(&self) -> bool {
        self.potential.is_empty()
    }

    pub fn position(&self, j: usize) -> f64 {
        self.origin + self.spacing * j as f64
    }

    /// Tapered potential on the fine lattice.
    pub fn potential_values(&self) -> &[f64] {
        &self.potential
    }

    pub fn plane_wave(&self, p: f64) -> Vec<Complex64> {
        (0..self.len())
            .map(|j| Complex64::from_polar(1.0, p * self.position(j)))
            .collect()
    }

    fn check_momentum(&self, p: f64) -> Result<()> {
        if !(p.abs() >= self.config.p_min) {
            return Err(Error::MomentumBelowCutoff {
                p,
                p_min: self.config.p_min,
            });
        }
        Ok(())
    }

    /// `(c/|p|) int e^{-i|p||q-q'|} V(q') phi(q') dq'` on the fine lattice.
    pub fn apply_kernel(&self, p: f64, prefactor: GreenPrefactor, phi: &[Complex64]) -> Vec<Complex64> {
        let k = p.abs();
        let phases: Vec<Complex64> = (0..self.len())
            .map(|j| Complex64::from_polar(1.0, k * (self.position(j) - self.center)))
            .collect();
        self.apply_kernel_with(k, prefactor, &phases, phi)
    }

    fn apply_kernel_with(
        &self,
        k: f64,
        prefactor: GreenPrefactor,
        phases: &[Complex64],
        phi: &[Complex64],
    ) -> Vec<Complex64> {
        let n = self.len();
        let s: Vec<Complex64> = phi.iter().zip(self.potential.iter()).map(|(f, v)| f * v).collect();
        let forward: Vec<Complex64> = s.iter().zip(phases).map(|(a, e)| a * e).collect();
        let backward: Vec<Complex64> = s.iter().zip(phases).map(|(a, e)| a * e.conj()).collect();
        let below = cumulative(&forward, self.spacing);
        let mut above = cumulative(&backward, self.spacing);
        let total = above[n - 1];
        for a in above.iter_mut() {
            *a = total - *a;
        }
        let c = prefactor.coefficient() / k;
        (0..n)
            .map(|j| c * (phases[j].conj() * below[j] + phases[j] * above[j]))
            .collect()
    }

    /// Solves for `phi_p`, by plain Born iteration first and, if that does
    /// not converge and Krylov summation is enabled, by GMRES on
    /// `(1 - K) phi = e^{ipq}`.
    pub fn solve(&self, p: f64, prefactor: GreenPrefactor) -> Result<ScatteringState> {
        self.check_momentum(p)?;
        let k = p.abs();
        let phases: Vec<Complex64> = (0..self.len())
            .map(|j| Complex64::from_polar(1.0, k * (self.position(j) - self.center)))
            .collect();
        let incident = self.plane_wave(p);
        let kernel = |phi: &[Complex64]| self.apply_kernel_with(k, prefactor, &phases, phi);

        let finish = |amplitudes: Vec<Complex64>, method, orders| {
            let residual = self.residual(p, &amplitudes);
            ScatteringState {
                p,
                prefactor,
                method,
                born_orders_used: orders,
                residual,
                origin: self.origin,
                spacing: self.spacing,
                amplitudes,
            }
        };

        if self.potential.iter().all(|&v| v == 0.0) {
            return Ok(finish(incident, SolveMethod::BornIteration, 0));
        }

        let born = self.born_iteration(p, &incident, &kernel);
        match born {
            Ok((phi, orders)) => Ok(finish(phi, SolveMethod::BornIteration, orders)),
            Err(e) if !self.config.krylov => Err(e),
            Err(_) => {
                let opts = GmresOptions {
                    tolerance: self.config.tolerance * 1e-3,
                    ..GmresOptions::default()
                };
                let out = gmres(
                    |x| {
                        let kx = kernel(x);
                        x.iter().zip(kx).map(|(a, b)| a - b).collect()
                    },
                    &incident,
                    &opts,
                );
                if !out.converged {
                    return Err(Error::BornNotConverged {
                        p,
                        order: out.iterations,
                        change: out.relative_residual,
                    });
                }
                Ok(finish(out.solution, SolveMethod::Krylov, out.iterations))
            }
        }
    }

    fn born_iteration(
        &self,
        p: f64,
        incident: &[Complex64],
        kernel: &dyn Fn(&[Complex64]) -> Vec<Complex64>,
    ) -> Result<(Vec<Complex64>, usize)> {
        let mut phi = incident.to_vec();
        let mut last_change = f64::INFINITY;
        let mut growing = 0;
        for order in 1..=self.config.max_order {
            let kphi = kernel(&phi);
            let next: Vec<Complex64> = incident.iter().zip(kphi).map(|(a, b)| a + b).collect();
            let scale = next.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let change = next
                .iter()
                .zip(&phi)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max)
                / scale;
            phi = next;
            if !change.is_finite() {
                return Err(Error::BornDiverged { p, order });
            }
            if change < self.config.tolerance {
                return Ok((phi, order));
            }
            growing = if change > last_change { growing + 1 } else { 0 };
            if growing >= 3 {
                return Err(Error::BornDiverged { p, order });
            }
            last_change = change;
        }
        Err(Error::BornNotConverged {
            p,
            order: self.config.max_order,
            change: last_change,
        })
    }

    /// `||(H_0 - p^2/2) phi|| / ||phi||` over the central 75% of the fine
    /// lattice, with the kinetic term taken by spectral differentiation of a
    /// smoothly windowed copy.
    pub fn residual(&self, p: f64, phi: &[Complex64]) -> f64 {
        let n = self.len();
        let half = 0.5 * self.spacing * (n - 1) as f64;
        let mid = self.position(0) + half;
        let rel: Vec<f64> = (0..n).map(|j| ((self.position(j) - mid) / half).abs()).collect();
        let mut f: Vec<Complex64> = phi
            .iter()
            .zip(&rel)
            .map(|(a, &x)| {
                let w = if x < 0.8 {
                    1.0
                } else if x < 0.98 {
                    (0.5 * std::f64::consts::PI * (x - 0.8) / 0.18).cos().powi(2)
                } else {
                    0.0
                };
                a * w
            })
            .collect();
        let windowed = f.clone();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        fwd.process(&mut f);
        let dk = 2.0 * std::f64::consts::PI / (n as f64 * self.spacing);
        for (m, v) in f.iter_mut().enumerate() {
            let km = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 } * dk;
            *v *= 0.5 * km * km / n as f64;
        }
        inv.process(&mut f);
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..n {
            if rel[j] < 0.75 {
                let r = f[j] + (self.potential[j] - 0.5 * p * p) * windowed[j];
                num += r.norm_sqr();
                den += windowed[j].norm_sqr();
            }
        }
        (num / den).sqrt()
    }

    /// Coefficients `(A, B)` of the least-squares fit `A e^{ipq} + B e^{-ipq}`
    /// over the potential-free margin on one side, and the relative misfit.
    pub fn asymptotic_fit(&self, state: &ScatteringState, right: bool) -> (Complex64, Complex64, f64) {
        let k = state.p.abs();
        let edge = if right {
            self.center + self.config.half_width
        } else {
            self.center - self.config.half_width
        };
        let idx: Vec<usize> = (0..self.len())
            .filter(|&j| {
                let q = self.position(j);
                if right {
                    q > edge
                } else {
                    q < edge
                }
            })
            .collect();
        // normal equations for the 2x2 complex system
        let (mut g11, mut g12, mut g22) = (0.0, Complex64::new(0.0, 0.0), 0.0);
        let (mut r1, mut r2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for &j in &idx {
            let e = Complex64::from_polar(1.0, k * (self.position(j) - self.center));
            let y = state.amplitudes[j];
            g11 += 1.0;
            g22 += 1.0;
            g12 += e.conj() * e.conj();
            r1 += e.conj() * y;
            r2 += e * y;
        }
        let det = g11 * g22 - g12.norm_sqr();
        let a = (g22 * r1 - g12 * r2) / det;
        let b = (g11 * r2 - g12.conj() * r1) / det;
        let (mut num, mut den) = (0.0, 0.0);
        for &j in &idx {
            let e = Complex64::from_polar(1.0, k * (self.position(j) - self.center));
            let y = state.amplitudes[j];
            num += (y - a * e - b * e.conj()).norm_sqr();
            den += y.norm_sqr();
        }
        // report coefficients against e^{+-ipq} with the absolute origin
        let shift = Complex64::from_polar(1.0, -k * self.center);
        (a * shift, b * shift.conj(), (num / den).sqrt())
    }
}

/// 1 inside `|x| <= half - taper`, cos^2 roll-off to 0 at `|x| = half`.
fn window(x: f64, half: f64, taper: f64) -> f64 {
    let r = x.abs();
    if r <= half - taper {
        1.0
    } else if r >= half {
        0.0
    } else {
        (0.5 * std::f64::consts::PI * (r - (half - taper)) / taper).cos().powi(2)
    }
}

/// Running integral `int_{x_0}^{x_j} f` on a uniform lattice: a four-point
/// cubic rule on interior intervals and the trapezoid rule at the ends.
fn cumulative(f: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = f.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n.saturating_sub(1) {
        let piece = if j >= 1 && j + 2 < n {
            (13.0 * (f[j] + f[j + 1]) - f[j - 1] - f[j + 2]) * (h / 24.0)
        } else {
            (f[j] + f[j + 1]) * (0.5 * h)
        };
        out[j + 1] = out[j] + piece;
    }
    out
}

/// `sum_j conj(phi_p(q_j)) q_j psi_0(q_j) dq` over the lattice of `psi0`.
pub fn dipole_element(state: &ScatteringState, psi0: &Wavefunction) -> Result<Complex64> {
    if psi0.representation() != Representation::Position {
        return Err(Error::Contract("psi0 must be in position representation".into()));
    }
    let grid = psi0.grid();
    let mut sum = Complex64::new(0.0, 0.0);
    for (j, a) in psi0.amplitudes().iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let q = grid.position(j);
        let phi = state.at_lattice_point(q).ok_or_else(|| {
            Error::Contract(format!(
                "bound-state point q = {q} is not on the scattering lattice"
            ))
        })?;
        sum += phi.conj() * q * a;
    }
    Ok(sum * grid.dq())
}

/// Residuals of each candidate prefactor at a probe momentum, best first.
pub fn rank_prefactors(
    solver: &LippmannSchwinger,
    p_probe: f64,
) -> Vec<(GreenPrefactor, f64)> {
    let mut out: Vec<(GreenPrefactor, f64)> = GreenPrefactor::ALL
        .iter()
        .map(|&g| {
            let r = solver.solve(p_probe, g).map(|s| s.residual).unwrap_or(f64::INFINITY);
            (g, r)
        })
        .collect();
    out.sort_by(|a, b| a.1.total_cmp(&b.1));
    out
}

/// Resolves `choice`, running the residual test when it is `Auto`.
pub fn select_prefactor(
    solver: &LippmannSchwinger,
    choice: PrefactorChoice,
    p_probe: f64,
    max_residual: f64,
) -> Result<(GreenPrefactor, Vec<(GreenPrefactor, f64)>)> {
    if let Some(g) = choice.fixed() {
        return Ok((g, Vec::new()));
    }
    let ranked = rank_prefactors(solver, p_probe);
    match ranked.first() {
        Some(&(g, r)) if r < max_residual => Ok((g, ranked)),
        _ => Err(Error::Contract(format!(
            "no Green's-function prefactor passes the residual test: {ranked:?}"
        ))),
    }
}

/// Lattice momenta `k * stride * dp` of `grid` with `lo <= |p| <= hi`,
/// ascending, both signs.
pub fn table_momenta(grid: &Grid, stride: usize, lo: f64, hi: f64) -> Vec<f64> {
    let step = grid.dp() * stride.max(1) as f64;
    let kmax = (hi / step).floor() as i64;
    let mut out: Vec<f64> = (-kmax..=kmax)
        .map(|k| k as f64 * step)
        .filter(|p| p.abs() >= lo && p.abs() <= hi)
        .collect();
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

/// Tabulated `d(p)` with cubic interpolation of the real and imaginary parts.
///
/// Momenta may come in disjoint runs (for example both signs with a gap
/// around zero); each run is interpolated on its own.
#[derive(Clone, Debug)]
pub struct DipoleTable {
    momenta: Vec<f64>,
    values: Vec<Complex64>,
    prefactor: GreenPrefactor,
    runs: Vec<(CubicSpline, CubicSpline)>,
}

impl DipoleTable {
    pub fn from_samples(
        momenta: Vec<f64>,
        values: Vec<Complex64>,
        prefactor: GreenPrefactor,
    ) -> Result<Self> {
        if momenta.len() != values.len() || momenta.len() < 2 {
            return Err(Error::InvalidParameter("dipole table needs matching samples".into()));
        }
        if let Some(i) = momenta.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::UnsortedGrid(i + 1));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Contract("non-finite dipole value".into()));
        }
        let mut steps: Vec<f64> = momenta.windows(2).map(|w| w[1] - w[0]).collect();
        steps.sort_by(|a, b| a.total_cmp(b));
        let typical = steps[steps.len() / 2];
        let mut runs = Vec::new();
        let mut start = 0;
        for i in 1..=momenta.len() {
            if i == momenta.len() || momenta[i] - momenta[i - 1] > 1.5 * typical {
                if i - start >= 2 {
                    let x = momenta[start..i].to_vec();
                    let re = values[start..i].iter().map(|v| v.re).collect();
                    let im = values[start..i].iter().map(|v| v.im).collect();
                    runs.push((
                        CubicSpline::natural(x.clone(), re)?,
                        CubicSpline::natural(x, im)?,
                    ));
                }
                start = i;
            }
        }
        Ok(Self {
            momenta,
            values,
            prefactor,
            runs,
        })
    }

    pub fn momenta(&self) -> &[f64] {
        &self.momenta
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn prefactor(&self) -> GreenPrefactor {
        self.prefactor
    }

    /// Covered intervals `(lo, hi)`.
    pub fn windows(&self) -> Vec<(f64, f64)> {
        self.runs.iter().map(|(s, _)| s.range()).collect()
    }

    pub fn covers(&self, p: f64) -> bool {
        self.runs.iter().any(|(s, _)| {
            let (lo, hi) = s.range();
            p >= lo && p <= hi
        })
    }

    pub fn eval(&self, p: f64) -> Result<Complex64> {
        for (re, im) in &self.runs {
            let (lo, hi) = re.range();
            if p >= lo && p <= hi {
                return Ok(Complex64::new(re.eval(p), im.eval(p)));
            }
        }
        let (lo, hi) = (self.momenta[0], self.momenta[self.momenta.len() - 1]);
        Err(Error::OutsideTable { p, lo, hi })
    }
}

/// Solves `phi_p` and evaluates `d(p)` at every momentum, in parallel.
pub fn build_dipole_table(
    solver: &LippmannSchwinger,
    prefactor: GreenPrefactor,
    psi0: &Wavefunction,
    momenta: &[f64],
    max_residual: f64,
) -> Result<DipoleTable> {
    let values = momenta
        .par_iter()
        .map(|&p| {
            let state = solver.solve(p, prefactor)?;
            if !(state.residual < max_residual) {
                return Err(Error::Contract(format!(
                    "scattering state at p = {p} has residual {:e}",
                    state.residual
                )));
            }
            dipole_element(&state, psi0)
        })
        .collect::<Result<Vec<_>>>()?;
    DipoleTable::from_samples(momenta.to_vec(), values, prefactor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{Flat, PotentialParams};

    fn lattice() -> Grid {
        Grid::with_spacing(-64.0, 0.0625, 2048).unwrap()
    }

    #[test]
    fn free_space_gives_plane_wave() {
        let s = LippmannSchwinger::new(&Flat(0.0), -12.0, &lattice(), ScatteringConfig::default()).unwrap();
        let st = s.solve(1.3, GreenPrefactor::Advanced).unwrap();
        assert_eq!(st.born_orders_used, 0);
        for j in (0..s.len()).step_by(97) {
            let q = s.position(j);
            assert!((st.amplitudes()[j] - Complex64::from_polar(1.0, 1.3 * q)).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_slow_momenta() {
        let s = LippmannSchwinger::new(&PotentialParams::default(), -12.0, &lattice(), ScatteringConfig::default())
            .unwrap();
        assert!(matches!(
            s.solve(0.2, GreenPrefactor::Advanced),
            Err(Error::MomentumBelowCutoff { .. })
        ));
    }

    #[test]
    fn cumulative_rule_is_fourth_order() {
        let err = |n: usize| {
            let h = 2.0 / n as f64;
            let f: Vec<Complex64> = (0..=n)
                .map(|j| Complex64::from_polar(1.0, 3.0 * j as f64 * h))
                .collect();
            let c = cumulative(&f, h);
            let exact = (Complex64::from_polar(1.0, 6.0) - 1.0) / (3.0 * I);
            (c[n] - exact).norm()
        };
        // interior is fourth order; the trapezoid end pieces are O(h^3)
        let (e1, e2) = (err(200), err(400));
        assert!(e1 / e2 > 7.5, "{e1} {e2}");
    }

    #[test]
    fn lattice_points_are_shared() {
        let grid = lattice();
        let s = LippmannSchwinger::new(&PotentialParams::default(), -12.0, &grid, ScatteringConfig::default()).unwrap();
        let st = s.solve(2.0, GreenPrefactor::Advanced).unwrap();
        for j in [0usize, 17, 1024, 2047] {
            assert!(st.at_lattice_point(grid.position(j)).is_some());
        }
        assert!(st.at_lattice_point(0.01).is_none());
    }

    #[test]
    fn table_momenta_layout() {
        let grid = Grid::new(-2048.0, 2048.0, 65536).unwrap();
        let m = table_momenta(&grid, 3, 0.3, 4.0);
        assert!(m.windows(2).all(|w| w[1] > w[0]));
        assert!(m.iter().all(|p| p.abs() >= 0.3 && p.abs() <= 4.0));
        assert!(m.iter().any(|&p| p < 0.0));
        let step = 3.0 * grid.dp();
        assert!((m[m.len() - 1] - m[m.len() - 2] - step).abs() < 1e-12);
    }

    #[test]
    fn table_rejects_gap_and_outside() {
        let momenta = vec![-2.0, -1.9, -1.8, 1.8, 1.9, 2.0, 2.1];
        let values: Vec<Complex64> = momenta.iter().map(|&p| Complex64::new(p, -p)).collect();
        let t = DipoleTable::from_samples(momenta.clone(), values.clone(), GreenPrefactor::Advanced).unwrap();
        assert_eq!(t.windows().len(), 2);
        for (p, v) in momenta.iter().zip(&values) {
            assert_eq!(t.eval(*p).unwrap(), *v);
        }
        assert!(matches!(t.eval(0.0), Err(Error::OutsideTable { .. })));
        assert!(matches!(t.eval(2.2), Err(Error::OutsideTable { .. })));
    }

    #[test]
    fn advanced_prefactor_solves_the_eigenproblem() {
        let s = LippmannSchwinger::new(&PotentialParams::default(), -12.0, &lattice(), ScatteringConfig::default())
            .unwrap();
        for p in [0.3, 1.0, 2.42, -2.42, 4.0] {
            let st = s.solve(p, GreenPrefactor::Advanced).unwrap();
            assert!(st.residual < 1e-4, "p = {p}: {} via {:?}", st.residual, st.method);
        }
        let ranked = rank_prefactors(&s, 2.42);
        assert_eq!(ranked[0].0, GreenPrefactor::Advanced);
        assert!(ranked[1].1 > 1e-2, "{ranked:?}");
    }
}
