//! Conditional single-excitation amplitudes `s(z, Δ, t)`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::ensemble::Density;
use crate::error::{invalid, Error, Result};
use crate::grid::Grid;

/// Complex amplitude field on a grid together with the time it refers to.
///
/// The physical weight of a node is `|s|² ρ`; the amplitude itself carries no
/// density factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Amplitude {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
    time: f64,
}

impl Amplitude {
    pub fn uniform(grid: Arc<Grid>, value: Complex64, time: f64) -> Self {
        let values = vec![value; grid.len()];
        Self { grid, values, time }
    }

    pub fn from_values(grid: Arc<Grid>, values: Vec<Complex64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(
                "values",
                format!("{} nodes given for a grid of {}", values.len(), grid.len()),
            ));
        }
        let a = Self { grid, values, time };
        if !a.is_finite() {
            return Err(Error::NonFinite(time));
        }
        Ok(a)
    }

    /// Build from a function of `(z, Δ)`.
    pub fn from_fn(grid: Arc<Grid>, time: f64, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let values = grid
            .z()
            .iter()
            .flat_map(|&z| grid.delta().iter().map(move |&d| (z, d)))
            .map(|(z, d)| f(z, d))
            .collect();
        Self { grid, values, time }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub(crate) fn set_time(&mut self, time: f64) {
        self.time = time;
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// `‖s‖²_ρ = ∬ |s|² ρ dz dΔ`.
    pub fn weighted_norm(&self, density: &Density) -> Result<f64> {
        ensure_same_grid(self, density)?;
        Ok(weighted_norm_raw(&self.grid, &self.values, density.values()))
    }

    /// `∫ |s|² ρ dΔ` at each position.
    pub fn excitation_marginal(&self, density: &Density) -> Result<Vec<f64>> {
        ensure_same_grid(self, density)?;
        let w: Vec<f64> = self
            .values
            .iter()
            .zip(density.values())
            .map(|(s, r)| s.norm_sqr() * r)
            .collect();
        Ok(self.grid.integrate_delta(&w))
    }

    /// Mirror image through `z -> L - z`.
    pub fn reversed_z(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.grid.reverse_z(&self.values),
            time: self.time,
        }
    }

    /// Free dephasing `s -> s·e^{iΔ·duration}`, the exact uncoupled solution
    /// of the no-jump equation.
    pub fn free_evolved(&self, duration: f64) -> Self {
        let nd = self.grid.n_delta();
        let phases: Vec<Complex64> = self
            .grid
            .delta()
            .iter()
            .map(|d| Complex64::from_polar(1.0, d * duration))
            .collect();
        let values = self
            .values
            .chunks_exact(nd)
            .flat_map(|row| row.iter().zip(&phases).map(|(s, p)| s * p))
            .collect();
        Self {
            grid: self.grid.clone(),
            values,
            time: self.time + duration,
        }
    }
}

pub(crate) fn ensure_same_grid(a: &Amplitude, density: &Density) -> Result<()> {
    if Arc::ptr_eq(a.grid(), density.grid()) || **a.grid() == **density.grid() {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

pub(crate) fn weighted_norm_raw(grid: &Grid, s: &[Complex64], rho: &[f64]) -> f64 {
    let nd = grid.n_delta();
    s.chunks_exact(nd)
        .zip(rho.chunks_exact(nd))
        .zip(grid.z_weights())
        .map(|((srow, rrow), wz)| {
            let row: f64 = srow
                .iter()
                .zip(rrow)
                .zip(grid.delta_weights())
                .map(|((s, r), wd)| s.norm_sqr() * r * wd)
                .sum();
            wz * row
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::gaussian_density;
    use crate::grid::make_grid;
    use approx::assert_relative_eq;

    #[test]
    fn unit_amplitude_norm_is_atom_count() {
        let g = Arc::new(make_grid(5, 11, 5.0).unwrap());
        let rho = gaussian_density(g.clone(), 1e5).unwrap();
        let s = Amplitude::uniform(g, Complex64::new(1.0, 0.0), 0.0);
        assert_relative_eq!(s.weighted_norm(&rho).unwrap(), 1e5, max_relative = 1e-12);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let g1 = Arc::new(make_grid(5, 11, 5.0).unwrap());
        let g2 = Arc::new(make_grid(5, 13, 5.0).unwrap());
        let rho = gaussian_density(g2, 1e5).unwrap();
        let s = Amplitude::uniform(g1, Complex64::new(1.0, 0.0), 0.0);
        assert!(matches!(s.weighted_norm(&rho), Err(Error::GridMismatch)));
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let g = Arc::new(make_grid(2, 3, 1.0).unwrap());
        let mut v = vec![Complex64::new(1.0, 0.0); 6];
        v[2].im = f64::NAN;
        assert!(matches!(Amplitude::from_values(g, v, 0.0), Err(Error::NonFinite(_))));
    }

    #[test]
    fn free_evolution_applies_detuning_phase() {
        let g = Arc::new(make_grid(2, 3, 2.0).unwrap());
        let s = Amplitude::uniform(g, Complex64::new(1.0, 0.0), -4.0).free_evolved(4.0);
        assert_eq!(s.time(), 0.0);
        let expect = Complex64::from_polar(1.0, 8.0);
        assert!((s.values()[2] - expect).norm() < 1e-15);
        assert!((s.values()[1] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }
}
