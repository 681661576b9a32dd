//! Uniform position lattice, its reciprocal momentum lattice, and wavefunctions
//! living on them.
//!
//! The momentum lattice is kept in natural FFT order: index `k` maps to
//! `k * dp` for `k <= n/2` and to `(k - n) * dp` above, so the lattice covers
//! `(-pi/dq, pi/dq]`. Use [`Grid::ascending_momentum_order`] whenever data
//! leaves the crate.
//!
//! The transform pair is normalized so that both representations carry the
//! same L2 norm with their natural quadrature weights:
//!
//! ```text
//! psi~(p_k) = dq / sqrt(2 pi) * sum_j psi(q_j) exp(-i p_k q_j)
//! psi(q_j)  = dp / sqrt(2 pi) * sum_k psi~(p_k) exp(+i p_k q_j)
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    q_min: f64,
    q_max: f64,
    n_points: usize,
}

impl Grid {
    pub fn new(q_min: f64, q_max: f64, n_points: usize) -> Result<Self> {
        if n_points < 2 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_points must be a power of two >= 2, got {n_points}"
            )));
        }
        if !(q_min.is_finite() && q_max.is_finite()) || q_max <= q_min {
            return Err(Error::InvalidGrid(format!(
                "need q_min < q_max, got [{q_min}, {q_max})"
            )));
        }
        Ok(Self {
            q_min,
            q_max,
            n_points,
        })
    }

    /// Grid with the given spacing, `n_points` long, starting at `q_min`.
    pub fn with_spacing(q_min: f64, dq: f64, n_points: usize) -> Result<Self> {
        Self::new(q_min, q_min + dq * n_points as f64, n_points)
    }

    pub fn q_min(&self) -> f64 {
        self.q_min
    }

    pub fn q_max(&self) -> f64 {
        self.q_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / self.n_points as f64
    }

    pub fn dp(&self) -> f64 {
        2.0 * PI / (self.n_points as f64 * self.dq())
    }

    pub fn position(&self, j: usize) -> f64 {
        self.q_min + j as f64 * self.dq()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.position(j)).collect()
    }

    pub fn momentum(&self, k: usize) -> f64 {
        let n = self.n_points;
        let k = k as isize;
        let shifted = if k <= (n / 2) as isize {
            k
        } else {
            k - n as isize
        };
        shifted as f64 * self.dp()
    }

    pub fn momenta(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.momentum(k)).collect()
    }

    pub fn p_max(&self) -> f64 {
        PI / self.dq()
    }

    /// Natural-order indices arranged so that the momenta ascend.
    pub fn ascending_momentum_order(&self) -> Vec<usize> {
        let n = self.n_points;
        ((n / 2 + 1)..n).chain(0..=n / 2).collect()
    }

    /// Index of the lattice point nearest to `q`, if it falls inside the grid.
    pub fn nearest_index(&self, q: f64) -> Option<usize> {
        let x = ((q - self.q_min) / self.dq()).round();
        (x >= 0.0 && x < self.n_points as f64).then_some(x as usize)
    }

    /// Offset (in lattice steps) at which `other` sits inside `self`, when the
    /// two share a spacing and their points coincide.
    pub fn embedding_offset(&self, other: &Grid) -> Option<usize> {
        let dq = self.dq();
        if ((other.dq() - dq) / dq).abs() > 1e-12 {
            return None;
        }
        let shift = (other.q_min - self.q_min) / dq;
        let rounded = shift.round();
        if (shift - rounded).abs() > 1e-9 || rounded < 0.0 {
            return None;
        }
        let offset = rounded as usize;
        (offset + other.n_points <= self.n_points).then_some(offset)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}) x {} (dq = {})",
            self.q_min,
            self.q_max,
            self.n_points,
            self.dq()
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Representation {
    Position,
    Momentum,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Wavefunction {
    grid: Grid,
    amplitudes: Vec<Complex64>,
    representation: Representation,
}

impl Wavefunction {
    pub fn new(
        grid: Grid,
        amplitudes: Vec<Complex64>,
        representation: Representation,
    ) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::Contract(format!(
                "{} amplitudes for a grid of {} points",
                amplitudes.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            amplitudes,
            representation,
        })
    }

    pub fn zeros(grid: Grid, representation: Representation) -> Self {
        Self {
            grid,
            amplitudes: vec![Complex64::new(0.0, 0.0); grid.len()],
            representation,
        }
    }

    /// Samples `f(q)` on the position lattice.
    pub fn from_position_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let amplitudes = (0..grid.len()).map(|j| f(grid.position(j))).collect();
        Self {
            grid,
            amplitudes,
            representation: Representation::Position,
        }
    }

    /// Samples `f(p)` on the (natural-order) momentum lattice.
    pub fn from_momentum_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let amplitudes = (0..grid.len()).map(|k| f(grid.momentum(k))).collect();
        Self {
            grid,
            amplitudes,
            representation: Representation::Momentum,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    /// Quadrature weight of the current representation.
    pub fn weight(&self) -> f64 {
        match self.representation {
            Representation::Position => self.grid.dq(),
            Representation::Momentum => self.grid.dp(),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.weight()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&mut self, factor: Complex64) {
        for a in &mut self.amplitudes {
            *a *= factor;
        }
    }

    /// `<self|other>`; both must share grid and representation.
    pub fn inner_product(&self, other: &Wavefunction) -> Result<Complex64> {
        self.check_compatible(other)?;
        let s: Complex64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.weight())
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, factor: Complex64, other: &Wavefunction) -> Result<()> {
        self.check_compatible(other)?;
        for (a, b) in self.amplitudes.iter_mut().zip(&other.amplitudes) {
            *a += factor * b;
        }
        Ok(())
    }

    pub fn check_compatible(&self, other: &Wavefunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.representation != other.representation {
            return Err(Error::Contract(
                "wavefunctions are in different representations".into(),
            ));
        }
        Ok(())
    }

    /// `<q>` normalized by the state norm.
    pub fn expectation_position(&self) -> Result<f64> {
        self.require(Representation::Position)?;
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, a) in self.amplitudes.iter().enumerate() {
            let w = a.norm_sqr();
            num += w * self.grid.position(j);
            den += w;
        }
        if den == 0.0 {
            return Err(Error::ZeroNorm("expectation_position"));
        }
        Ok(num / den)
    }

    /// `<p>` normalized by the state norm, evaluated in the momentum
    /// representation.
    pub fn expectation_momentum(&self, fourier: &Fourier) -> Result<f64> {
        let m = match self.representation {
            Representation::Momentum => self.clone(),
            Representation::Position => fourier.to_momentum(self)?,
        };
        let mut num = 0.0;
        let mut den = 0.0;
        for (k, a) in m.amplitudes.iter().enumerate() {
            let w = a.norm_sqr();
            num += w * m.grid.momentum(k);
            den += w;
        }
        if den == 0.0 {
            return Err(Error::ZeroNorm("expectation_momentum"));
        }
        Ok(num / den)
    }

    fn require(&self, rep: Representation) -> Result<()> {
        if self.representation != rep {
            return Err(Error::Contract(format!(
                "expected {rep:?} representation, found {:?}",
                self.representation
            )));
        }
        Ok(())
    }
}

/// Planned unitary transforms between the two representations of one grid.
///
/// Planning is done once; the struct is `Sync` and each call allocates its
/// own scratch, so one instance can be shared between workers.
#[derive(Clone)]
pub struct Fourier {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// `exp(-i p_k q_min)` in natural order.
    origin_phase: Vec<Complex64>,
}

impl fmt::Debug for Fourier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fourier").field("grid", &self.grid).finish()
    }
}

impl Fourier {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.len());
        let inverse = planner.plan_fft_inverse(grid.len());
        let origin_phase = grid
            .momenta()
            .into_iter()
            .map(|p| Complex64::from_polar(1.0, -p * grid.q_min()))
            .collect();
        Self {
            grid: *grid,
            forward,
            inverse,
            origin_phase,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn scratch(&self) -> Vec<Complex64> {
        let len = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        vec![Complex64::new(0.0, 0.0); len]
    }

    /// Raw, unnormalized forward DFT in place.
    pub fn fft_in_place(&self, data: &mut [Complex64], scratch: &mut [Complex64]) {
        self.forward.process_with_scratch(data, scratch);
    }

    /// Raw, unnormalized inverse DFT in place.
    pub fn ifft_in_place(&self, data: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inverse.process_with_scratch(data, scratch);
    }

    pub fn to_momentum(&self, wf: &Wavefunction) -> Result<Wavefunction> {
        let mut out = wf.clone();
        self.to_momentum_in_place(&mut out)?;
        Ok(out)
    }

    pub fn to_position(&self, wf: &Wavefunction) -> Result<Wavefunction> {
        let mut out = wf.clone();
        self.to_position_in_place(&mut out)?;
        Ok(out)
    }

    pub fn to_momentum_in_place(&self, wf: &mut Wavefunction) -> Result<()> {
        self.check(wf, Representation::Position)?;
        let mut scratch = self.scratch();
        self.fft_in_place(&mut wf.amplitudes, &mut scratch);
        let scale = self.grid.dq() / (2.0 * PI).sqrt();
        for (a, ph) in wf.amplitudes.iter_mut().zip(&self.origin_phase) {
            *a *= ph * scale;
        }
        wf.representation = Representation::Momentum;
        Ok(())
    }

    pub fn to_position_in_place(&self, wf: &mut Wavefunction) -> Result<()> {
        self.check(wf, Representation::Momentum)?;
        let scale = self.grid.dp() / (2.0 * PI).sqrt();
        for (a, ph) in wf.amplitudes.iter_mut().zip(&self.origin_phase) {
            *a *= ph.conj() * scale;
        }
        let mut scratch = self.scratch();
        self.ifft_in_place(&mut wf.amplitudes, &mut scratch);
        wf.representation = Representation::Position;
        Ok(())
    }

    fn check(&self, wf: &Wavefunction, expected: Representation) -> Result<()> {
        if wf.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        if wf.representation != expected {
            return Err(Error::Contract(format!(
                "transform expects {expected:?} representation, found {:?}",
                wf.representation
            )));
        }
        Ok(())
    }
}
