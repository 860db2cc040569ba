//! Atom densities over the grid and the optical-depth ↔ coupling mapping.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::table::Table;

/// Speed of light in internal units.
pub const SPEED_OF_LIGHT: f64 = 1.0;
/// Inhomogeneous width in internal units; it also fixes the time unit.
pub const GAMMA: f64 = 1.0;
/// Atom count used when none is given.
pub const DEFAULT_N_ATOMS: f64 = 1.0e6;

/// Number density `ρ(z, Δ)` of atoms per unit length per unit detuning.
#[derive(Debug, Clone)]
pub struct Density {
    grid: Arc<Grid>,
    values: Vec<f64>,
    n_atoms: f64,
    gamma: f64,
}

impl Density {
    /// Wrap raw node values, rescaling them so the double quadrature is
    /// exactly `n_atoms`.
    pub fn normalized(grid: Arc<Grid>, mut values: Vec<f64>, n_atoms: f64, gamma: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(
                "values",
                format!("{} nodes given for a grid of {}", values.len(), grid.len()),
            ));
        }
        if !(n_atoms > 0.0 && n_atoms.is_finite()) {
            return Err(invalid("n_atoms", format!("{n_atoms} is not a positive count")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(invalid("gamma", format!("{gamma} must be positive")));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(invalid("values", format!("density node {bad} is negative or non-finite")));
        }
        let total = grid.integrate(&values);
        if total <= 0.0 {
            return Err(invalid("values", "density is identically zero"));
        }
        let scale = n_atoms / total;
        values.iter_mut().for_each(|v| *v *= scale);
        Ok(Self {
            grid,
            values,
            n_atoms,
            gamma,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_atoms(&self) -> f64 {
        self.n_atoms
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Double quadrature of ρ; equals `n_atoms` up to rounding.
    pub fn total(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    /// `∫ ρ dΔ` at each position.
    pub fn z_marginal(&self) -> Vec<f64> {
        self.grid.integrate_delta(&self.values)
    }

    /// `∫ ρ dz` at each detuning.
    pub fn spectral_profile(&self) -> Vec<f64> {
        self.grid.integrate_z(&self.values)
    }

    /// Mirror image through `z -> L - z`.
    pub fn reversed_z(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.grid.reverse_z(&self.values),
            n_atoms: self.n_atoms,
            gamma: self.gamma,
        }
    }

    /// `z,delta,rho` rows, z-major.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["z", "delta", "rho"]);
        let g = &self.grid;
        for (iz, z) in g.z().iter().enumerate() {
            for (id, d) in g.delta().iter().enumerate() {
                t.push([*z, *d, self.values[g.index(iz, id)]]);
            }
        }
        t
    }
}

/// Nonnegative weight over the grid with unit double quadrature.
#[derive(Debug, Clone)]
pub struct Distribution {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Distribution {
    pub fn new(grid: Arc<Grid>, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(
                "values",
                format!("{} nodes given for a grid of {}", values.len(), grid.len()),
            ));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("values", "distribution must be finite and nonnegative"));
        }
        let total = grid.integrate(&values);
        if total <= 0.0 {
            return Err(Error::ZeroNorm);
        }
        values.iter_mut().for_each(|v| *v /= total);
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn z_marginal(&self) -> Vec<f64> {
        self.grid.integrate_delta(&self.values)
    }

    pub fn spectral_profile(&self) -> Vec<f64> {
        self.grid.integrate_z(&self.values)
    }

    pub fn reversed_z(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.grid.reverse_z(&self.values),
        }
    }

    /// `z,delta,weight` rows, z-major.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["z", "delta", "weight"]);
        let g = &self.grid;
        for (iz, z) in g.z().iter().enumerate() {
            for (id, d) in g.delta().iter().enumerate() {
                t.push([*z, *d, self.values[g.index(iz, id)]]);
            }
        }
        t
    }
}

/// Per-atom vacuum coupling and the propagation speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    pub g: f64,
    pub c: f64,
}

impl CouplingParams {
    pub fn new(g: f64, c: f64) -> Result<Self> {
        if !(g >= 0.0 && g.is_finite()) {
            return Err(invalid("g", format!("{g} must be finite and >= 0")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid("c", format!("{c} must be positive")));
        }
        Ok(Self { g, c })
    }

    pub fn uncoupled() -> Self {
        Self {
            g: 0.0,
            c: SPEED_OF_LIGHT,
        }
    }
}

/// Flat-in-z ensemble with a Gaussian line of width Γ, truncated to the grid
/// and renormalized to exactly `n_atoms`.
pub fn gaussian_density(grid: Arc<Grid>, n_atoms: f64) -> Result<Density> {
    let norm = 1.0 / (grid.length() * (TAU).sqrt() * GAMMA);
    let line: Vec<f64> = grid
        .delta()
        .iter()
        .map(|d| norm * (-d * d / (2.0 * GAMMA * GAMMA)).exp())
        .collect();
    let values = (0..grid.n_z()).flat_map(|_| line.iter().copied()).collect();
    Density::normalized(grid, values, n_atoms, GAMMA)
}

/// Peak optical depth `αL = 2π g² N / (c Γ)` of a Gaussian-class ensemble.
pub fn peak_optical_depth(density: &Density, coupling: &CouplingParams) -> f64 {
    TAU * coupling.g * coupling.g * density.n_atoms() / (coupling.c * density.gamma())
}

/// Inverse of [`peak_optical_depth`] at `c = 1`.
pub fn coupling_for_depth(target_alpha_l: f64, density: &Density) -> Result<CouplingParams> {
    if !(target_alpha_l >= 0.0 && target_alpha_l.is_finite()) {
        return Err(invalid("alpha_l", format!("{target_alpha_l} must be finite and >= 0")));
    }
    let c = SPEED_OF_LIGHT;
    let g = (target_alpha_l * c * density.gamma() / (TAU * density.n_atoms())).sqrt();
    CouplingParams::new(g, c)
}

/// Peak depth read off the actual spectral profile:
/// `(2π)^{3/2} g² max_Δ ∫ρ dz / c`.
///
/// Agrees with [`peak_optical_depth`] for a Gaussian line (up to the grid
/// truncation) and extends it to arbitrary shapes.
pub fn spectral_peak_depth(density: &Density, coupling: &CouplingParams) -> f64 {
    let peak = density
        .spectral_profile()
        .into_iter()
        .fold(0.0_f64, f64::max);
    (2.0 * PI).powf(1.5) * coupling.g * coupling.g * peak / coupling.c
}

/// Coupling that gives `density` the requested [`spectral_peak_depth`].
pub fn coupling_for_spectral_depth(target_alpha_l: f64, density: &Density) -> Result<CouplingParams> {
    if !(target_alpha_l >= 0.0 && target_alpha_l.is_finite()) {
        return Err(invalid("alpha_l", format!("{target_alpha_l} must be finite and >= 0")));
    }
    let unit = spectral_peak_depth(density, &CouplingParams { g: 1.0, c: SPEED_OF_LIGHT });
    CouplingParams::new((target_alpha_l / unit).sqrt(), SPEED_OF_LIGHT)
}

/// Density proportional to an arbitrary nonnegative shape, normalized to
/// `n_atoms`.
pub fn tailored_density(shape: &Distribution, n_atoms: f64, gamma: f64) -> Result<Density> {
    Density::normalized(shape.grid().clone(), shape.values().to_vec(), n_atoms, gamma)
}
