//! Soft-core double-well ionic potential and its bound states.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Fourier, Grid, Representation, Wavefunction};

/// A static one-dimensional potential with an analytic slope.
pub trait Potential: Send + Sync {
    fn value(&self, q: f64) -> f64;
    fn gradient(&self, q: f64) -> f64;
}

/// Two soft-core Coulomb wells at `0` and `q_r`, normalized by `z1 + z2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialParams {
    pub a: f64,
    pub q_r: f64,
    pub z1: f64,
    pub z2: f64,
}

impl Default for PotentialParams {
    fn default() -> Self {
        Self {
            a: 0.2236,
            q_r: -24.0,
            z1: 2.0,
            z2: 5.0,
        }
    }
}

impl PotentialParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) {
            return Err(Error::InvalidParameter(format!("a = {} must be > 0", self.a)));
        }
        if !(self.z1 > 0.0 && self.z2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "charges must be positive, got z1 = {}, z2 = {}",
                self.z1, self.z2
            )));
        }
        if self.q_r == 0.0 || !self.q_r.is_finite() {
            return Err(Error::InvalidParameter("q_r must be finite and nonzero".into()));
        }
        Ok(())
    }

    /// Same wells with both charges multiplied by `factor`, keeping the
    /// overall normalization fixed. Used to build weak-coupling variants.
    pub fn scaled_coupling(&self, factor: f64) -> ScaledPotential {
        ScaledPotential {
            inner: *self,
            factor,
        }
    }
}

impl Potential for PotentialParams {
    fn value(&self, q: f64) -> f64 {
        let a2 = self.a * self.a;
        let d = q - self.q_r;
        (-self.z1 / (q * q + a2).sqrt() - self.z2 / (d * d + a2).sqrt()) / (self.z1 + self.z2)
    }

    fn gradient(&self, q: f64) -> f64 {
        let a2 = self.a * self.a;
        let d = q - self.q_r;
        let r1 = (q * q + a2).powf(1.5);
        let r2 = (d * d + a2).powf(1.5);
        (self.z1 * q / r1 + self.z2 * d / r2) / (self.z1 + self.z2)
    }
}

/// The double well multiplied by a constant factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledPotential {
    inner: PotentialParams,
    factor: f64,
}

impl Potential for ScaledPotential {
    fn value(&self, q: f64) -> f64 {
        self.factor * self.inner.value(q)
    }

    fn gradient(&self, q: f64) -> f64 {
        self.factor * self.inner.gradient(q)
    }
}

/// A spatially constant potential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Flat(pub f64);

impl Potential for Flat {
    fn value(&self, _q: f64) -> f64 {
        self.0
    }

    fn gradient(&self, _q: f64) -> f64 {
        0.0
    }
}

/// Eigenpairs of `p^2/2 + V` with negative energy.
#[derive(Clone, Debug)]
pub struct BoundStateSet {
    grid: Grid,
    energies: Vec<f64>,
    states: Vec<Wavefunction>,
    residuals: Vec<f64>,
}

/// Index of the initial state (the first excited state).
pub const INITIAL_STATE: usize = 1;

impl BoundStateSet {
    pub fn from_parts(grid: Grid, energies: Vec<f64>, states: Vec<Wavefunction>) -> Result<Self> {
        if energies.len() != states.len() {
            return Err(Error::Contract("energy/state count mismatch".into()));
        }
        if energies.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Contract("energies must be strictly ascending".into()));
        }
        if states.iter().any(|s| *s.grid() != grid) {
            return Err(Error::GridMismatch);
        }
        let residuals = vec![f64::NAN; energies.len()];
        Ok(Self {
            grid,
            energies,
            states,
            residuals,
        })
    }

    /// Attaches residuals recorded elsewhere, e.g. in a cache file.
    pub fn with_residuals(mut self, residuals: Vec<f64>) -> Result<Self> {
        if residuals.len() != self.energies.len() {
            return Err(Error::Contract("residual count mismatch".into()));
        }
        self.residuals = residuals;
        Ok(self)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn states(&self) -> &[Wavefunction] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `||H psi_n - E_n psi_n||` for every state, as measured when solved.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn initial_state(&self) -> &Wavefunction {
        &self.states[INITIAL_STATE]
    }

    pub fn initial_energy(&self) -> f64 {
        self.energies[INITIAL_STATE]
    }

    /// Ionization energy of the initial state.
    pub fn ionization_energy(&self) -> f64 {
        -self.initial_energy()
    }

    /// Copies every state onto `target`. When the lattices coincide the
    /// amplitudes are copied verbatim; otherwise they are band-limited
    /// (trigonometric) interpolants of the auxiliary-grid data.
    pub fn embed(&self, target: &Grid) -> Result<BoundStateSet> {
        let states = match target.embedding_offset(&self.grid) {
            Some(offset) => self
                .states
                .iter()
                .map(|s| {
                    let mut amps = vec![Complex64::new(0.0, 0.0); target.len()];
                    amps[offset..offset + self.grid.len()].copy_from_slice(s.amplitudes());
                    Wavefunction::new(*target, amps, Representation::Position)
                })
                .collect::<Result<Vec<_>>>()?,
            None => {
                let fourier = Fourier::new(&self.grid);
                self.states
                    .iter()
                    .map(|s| resample(&fourier, s, target))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        Ok(BoundStateSet {
            grid: *target,
            energies: self.energies.clone(),
            states,
            residuals: self.residuals.clone(),
        })
    }
}

fn resample(fourier: &Fourier, state: &Wavefunction, target: &Grid) -> Result<Wavefunction> {
    let source = fourier.grid();
    let m = fourier.to_momentum(state)?;
    let dp = source.dp();
    let norm = dp / (2.0 * std::f64::consts::PI).sqrt();
    let (lo, hi) = (source.q_min(), source.q_max());
    let out = (0..target.len())
        .map(|j| {
            let q = target.position(j);
            if q < lo || q >= hi {
                return Complex64::new(0.0, 0.0);
            }
            m.amplitudes()
                .iter()
                .enumerate()
                .map(|(k, a)| a * Complex64::from_polar(1.0, source.momentum(k) * q))
                .sum::<Complex64>()
                * norm
        })
        .collect();
    Wavefunction::new(*target, out, Representation::Position)
}

/// Applies the Fourier-grid Hamiltonian `p^2/2 + V` to a position-space state.
pub fn apply_hamiltonian(
    fourier: &Fourier,
    potential: &dyn Potential,
    psi: &Wavefunction,
) -> Result<Wavefunction> {
    let grid = *fourier.grid();
    let mut m = fourier.to_momentum(psi)?;
    for (k, a) in m.amplitudes_mut().iter_mut().enumerate() {
        let p = grid.momentum(k);
        *a *= 0.5 * p * p;
    }
    let mut out = fourier.to_position(&m)?;
    for (j, (o, a)) in out
        .amplitudes_mut()
        .iter_mut()
        .zip(psi.amplitudes())
        .enumerate()
    {
        *o += potential.value(grid.position(j)) * a;
    }
    Ok(out)
}

/// Diagonalizes the Fourier-grid Hamiltonian on a compact periodic `grid` and
/// returns every negative-energy state.
///
/// The kinetic operator is the exact spectral one for this lattice, so the
/// states are stationary under a split-operator propagation that uses the
/// same spacing.
pub fn solve_bound_states(
    potential: &dyn Potential,
    grid: &Grid,
    min_states: usize,
) -> Result<BoundStateSet> {
    let n = grid.len();
    let fourier = Fourier::new(grid);

    // first row of the circulant kinetic matrix: inverse DFT of p^2/2
    let mut row: Vec<Complex64> = grid
        .momenta()
        .into_iter()
        .map(|p| Complex64::new(0.5 * p * p, 0.0))
        .collect();
    let mut scratch = fourier.scratch();
    fourier.ifft_in_place(&mut row, &mut scratch);
    let kinetic: Vec<f64> = row.iter().map(|c| c.re / n as f64).collect();

    let potential_values: Vec<f64> = grid.positions().iter().map(|&q| potential.value(q)).collect();
    let h = faer::Mat::<f64>::from_fn(n, n, |i, j| {
        let d = if i >= j { i - j } else { j - i };
        kinetic[d] + if i == j { potential_values[i] } else { 0.0 }
    });
    let eig = h
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::FitFailed(format!("eigendecomposition failed: {e:?}")))?;
    let values = eig.S().column_vector();
    let vectors = eig.U();

    let scale = 1.0 / grid.dq().sqrt();
    let mut energies = Vec::new();
    let mut states = Vec::new();
    let mut residuals = Vec::new();
    for col in 0..n {
        let e = values[col];
        if e >= 0.0 {
            break;
        }
        let mut amps: Vec<Complex64> = (0..n)
            .map(|row| Complex64::new(vectors[(row, col)] * scale, 0.0))
            .collect();
        // global phase: real and positive at the probability maximum
        let peak = amps
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if amps[peak].re < 0.0 {
            for a in &mut amps {
                *a = -*a;
            }
        }
        let state = Wavefunction::new(*grid, amps, Representation::Position)?;
        let mut r = apply_hamiltonian(&fourier, potential, &state)?;
        r.add_scaled(Complex64::new(-e, 0.0), &state)?;
        residuals.push(r.norm());
        energies.push(e);
        states.push(state);
    }
    if states.len() < min_states.max(INITIAL_STATE + 1) {
        return Err(Error::TooFewBoundStates {
            requested: min_states.max(INITIAL_STATE + 1),
            found: states.len(),
        });
    }
    Ok(BoundStateSet {
        grid: *grid,
        energies,
        states,
        residuals,
    })
}
