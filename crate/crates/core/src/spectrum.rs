//! Momentum densities shared by every model.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Fourier, Representation, Wavefunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Tdse,
    Cva,
    FieldFree,
    Classical,
}

impl Model {
    pub fn label(self) -> &'static str {
        match self {
            Model::Tdse => "tdse",
            Model::Cva => "cva",
            Model::FieldFree => "fieldfree",
            Model::Classical => "classical",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// `|<p|psi>|^2` on an ascending momentum lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub model: Model,
    pub f0: f64,
    pub momenta: Vec<f64>,
    pub density: Vec<f64>,
}

impl Spectrum {
    pub fn new(model: Model, f0: f64, momenta: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if momenta.len() != density.len() {
            return Err(Error::Contract("momenta and density lengths differ".into()));
        }
        if let Some(i) = momenta.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::UnsortedGrid(i + 1));
        }
        if density.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(Error::Contract("density must be finite and nonnegative".into()));
        }
        Ok(Self {
            model,
            f0,
            momenta,
            density,
        })
    }

    /// From complex amplitudes on an ascending lattice.
    pub fn from_amplitudes(model: Model, f0: f64, momenta: Vec<f64>, amplitudes: &[Complex64]) -> Result<Self> {
        Self::new(model, f0, momenta, amplitudes.iter().map(|a| a.norm_sqr()).collect())
    }

    pub fn len(&self) -> usize {
        self.momenta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.momenta.is_empty()
    }

    /// Riemann sum with the mean lattice spacing.
    pub fn integral(&self) -> f64 {
        if self.momenta.len() < 2 {
            return 0.0;
        }
        let dp = (self.momenta[self.momenta.len() - 1] - self.momenta[0]) / (self.momenta.len() - 1) as f64;
        self.density.iter().sum::<f64>() * dp
    }

    /// The part with `lo <= p <= hi`.
    pub fn window(&self, lo: f64, hi: f64) -> Spectrum {
        let (momenta, density) = self
            .momenta
            .iter()
            .zip(&self.density)
            .filter(|(p, _)| **p >= lo && **p <= hi)
            .map(|(p, d)| (*p, *d))
            .unzip();
        Spectrum {
            model: self.model,
            f0: self.f0,
            momenta,
            density,
        }
    }

    /// `int p rho dp / int rho dp`.
    pub fn centroid(&self) -> Result<f64> {
        let total: f64 = self.density.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroNorm("spectrum"));
        }
        Ok(self.momenta.iter().zip(&self.density).map(|(p, d)| p * d).sum::<f64>() / total)
    }

    pub fn rms_width(&self) -> Result<f64> {
        let c = self.centroid()?;
        let total: f64 = self.density.iter().sum();
        Ok((self
            .momenta
            .iter()
            .zip(&self.density)
            .map(|(p, d)| (p - c).powi(2) * d)
            .sum::<f64>()
            / total)
            .sqrt())
    }

    /// Relative L2 distance `||a - b|| / ||b||` on the common lattice.
    pub fn relative_l2(&self, reference: &Spectrum) -> Result<f64> {
        if self.momenta.len() != reference.momenta.len()
            || self
                .momenta
                .iter()
                .zip(&reference.momenta)
                .any(|(a, b)| (a - b).abs() > 1e-9)
        {
            return Err(Error::Contract("spectra live on different lattices".into()));
        }
        let num: f64 = self.density.iter().zip(&reference.density).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = reference.density.iter().map(|b| b * b).sum();
        if den == 0.0 {
            return Err(Error::ZeroNorm("reference spectrum"));
        }
        Ok((num / den).sqrt())
    }
}

/// Momentum density of a position-space state, sorted by ascending `p`.
/// The density integrates to the squared norm with weight `dp`.
pub fn momentum_spectrum(fourier: &Fourier, psi: &Wavefunction, model: Model, f0: f64) -> Result<Spectrum> {
    let m = match psi.representation() {
        Representation::Position => fourier.to_momentum(psi)?,
        Representation::Momentum => psi.clone(),
    };
    let grid = m.grid();
    let order = grid.ascending_momentum_order();
    let momenta = order.iter().map(|&k| grid.momentum(k)).collect();
    let density = order.iter().map(|&k| m.amplitudes()[k].norm_sqr()).collect();
    Spectrum::new(model, f0, momenta, density)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn parseval_and_order() {
        let grid = Grid::new(-50.0, 50.0, 1024).unwrap();
        let f = Fourier::new(&grid);
        let psi = Wavefunction::from_position_fn(grid, |q| {
            Complex64::from_polar((-(q - 3.0).powi(2) / 4.0).exp(), 1.7 * q)
        });
        let s = momentum_spectrum(&f, &psi, Model::Tdse, 0.0).unwrap();
        assert!(s.momenta.windows(2).all(|w| w[1] > w[0]));
        assert!((s.integral() - psi.norm_sqr()).abs() < 1e-12 * psi.norm_sqr());
        assert!((s.centroid().unwrap() - 1.7).abs() < 1e-6);
    }

    #[test]
    fn validation() {
        assert!(Spectrum::new(Model::Cva, 0.0, vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(Spectrum::new(Model::Cva, 0.0, vec![1.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(Spectrum::new(Model::Cva, 0.0, vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
        let s = Spectrum::new(Model::Cva, 0.0, vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 1.0]).unwrap();
        assert_eq!(s.relative_l2(&s).unwrap(), 0.0);
        assert_eq!(s.window(0.5, 2.0).momenta, vec![1.0, 2.0]);
    }
}
