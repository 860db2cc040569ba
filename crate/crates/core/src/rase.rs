//! Rephasing after the inverting pulse.
//!
//! The light field is adiabatically slaved to the atoms,
//!
//! ```text
//! dφ/dz = −i √(2π) (g/c) ∫ dΔ s ρ,      φ(0, t) = 0,
//! ```
//!
//! so the only dynamical variable is the atomic amplitude. The inversion is an
//! ideal, instantaneous conjugation `s -> s*`; in that conjugated frame the
//! free rotation keeps the sign it had before the pulse,
//!
//! ```text
//! ds/dt = iΔ s − i √(2π) g φ(z, t),
//! ```
//!
//! which is the complex conjugate of the lab-frame equation
//! `ds/dt = −iΔ s − i√(2π) g φ` applied to the unconjugated state. Both give
//! the same `|s|` and `|φ|`, and dephasing accrued before the pulse undoes
//! itself a time `T_S` after it.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::ensemble::{CouplingParams, Density};
use crate::error::{invalid, Error, Result};
use crate::solver::{accumulate_forward, delta_weighted, integrate_z, polarization, Rk4, Stepping};
use crate::state::{ensure_same_grid, weighted_norm_raw, Amplitude};
use crate::table::Table;

/// Default end of the rephasing window, `3 T_S`.
pub const DEFAULT_RASE_END: f64 = 12.0;
/// Allowed `|emitted + residual − 1|` before a run is treated as a solver fault.
pub const FLUX_TOLERANCE: f64 = 1e-3;
/// Overshoot of the emission probability above 1 that is silently clipped.
pub const OVERSHOOT_TOLERANCE: f64 = 1e-6;

/// Ideal π-pulse: conjugate every node and restart the clock at 0.
pub fn invert_state(state: &Amplitude) -> Amplitude {
    let values = state.values().iter().map(|v| v.conj()).collect();
    Amplitude::from_values(state.grid().clone(), values, 0.0)
        .expect("conjugation preserves shape and finiteness")
}

/// Field inside the ensemble for a frozen atomic amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct LightProfile {
    /// Field acting on each slice: the upstream integral plus half of the
    /// slice's own cell (trapezoidal at interior nodes).
    pub nodes: Vec<Complex64>,
    /// `φ(L)`, the full trapezoidal integral.
    pub exit: Complex64,
}

/// Solve the light equation from `φ(0) = 0`.
pub fn propagate_light(s: &Amplitude, density: &Density, coupling: &CouplingParams) -> Result<LightProfile> {
    ensure_same_grid(s, density)?;
    let grid = density.grid();
    let wr = delta_weighted(grid, density.values());
    let mut p = vec![Complex64::new(0.0, 0.0); grid.n_z()];
    polarization(grid, &wr, s.values(), &mut p);
    let mut nodes = vec![Complex64::new(0.0, 0.0); grid.n_z()];
    accumulate_forward(grid.z_weights(), &p, &mut nodes);
    let k = field_factor(coupling);
    nodes.iter_mut().for_each(|v| *v *= k);
    Ok(LightProfile {
        nodes,
        exit: k * integrate_z(grid.z_weights(), &p),
    })
}

fn field_factor(coupling: &CouplingParams) -> Complex64 {
    Complex64::new(0.0, -TAU.sqrt() * coupling.g / coupling.c)
}

/// Exit-face field `φ(L, t)` recorded at every integration step.
#[derive(Debug, Clone, PartialEq)]
pub struct LightRecord {
    pub times: Vec<f64>,
    pub phi_exit: Vec<Complex64>,
    pub c: f64,
}

impl LightRecord {
    /// Photon flux `c |φ(L, t)|²`.
    pub fn intensity(&self) -> Vec<f64> {
        self.phi_exit.iter().map(|p| self.c * p.norm_sqr()).collect()
    }

    /// Time of the brightest sample, refined by a parabola through its
    /// neighbours.
    pub fn peak_time(&self) -> f64 {
        let i = self.intensity();
        let k = i
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap_or(0);
        if k == 0 || k + 1 >= i.len() {
            return self.times[k];
        }
        let (a, b, c) = (i[k - 1], i[k], i[k + 1]);
        let denom = a - 2.0 * b + c;
        if denom == 0.0 {
            return self.times[k];
        }
        let h = self.times[k + 1] - self.times[k];
        self.times[k] + 0.5 * h * (a - c) / denom
    }

    /// `t,re_phi,im_phi,intensity`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["t", "re_phi", "im_phi", "intensity"]);
        for (x, p) in self.times.iter().zip(&self.phi_exit) {
            t.push([*x, p.re, p.im, self.c * p.norm_sqr()]);
        }
        t
    }
}

/// Outcome of a rephasing run.
#[derive(Debug, Clone)]
pub struct RaseResult {
    pub emission_probability: f64,
    pub light: LightRecord,
    /// Final `‖s‖²_ρ` over the initial one.
    pub residual_norm: f64,
    pub initial_norm: f64,
    pub final_state: Amplitude,
}

impl RaseResult {
    pub fn flux_deviation(&self) -> f64 {
        self.emission_probability + self.residual_norm - 1.0
    }
}

/// Trapezoidal `∫ c|φ(L,t)|² dt / initial_norm`.
pub fn emission_probability(light: &LightRecord, initial_norm: f64) -> Result<f64> {
    if !(initial_norm > 0.0 && initial_norm.is_finite()) {
        return Err(invalid("initial_norm", format!("{initial_norm} must be positive")));
    }
    let flux = light.intensity();
    let emitted: f64 = light
        .times
        .windows(2)
        .zip(flux.windows(2))
        .map(|(t, f)| 0.5 * (t[1] - t[0]) * (f[0] + f[1]))
        .sum();
    let p = emitted / initial_norm;
    if p > 1.0 + OVERSHOOT_TOLERANCE || !p.is_finite() {
        return Err(Error::EmissionOvershoot(p));
    }
    Ok(p.min(1.0))
}

struct RephasingOperator {
    n_delta: usize,
    delta: Vec<f64>,
    weighted_rho: Vec<f64>,
    z_weights: Vec<f64>,
    /// `−i√(2π) g` times the field factor: `−2π g² / c`.
    drive: f64,
    polarization: Vec<Complex64>,
    upstream: Vec<Complex64>,
    grid: std::sync::Arc<crate::grid::Grid>,
}

impl RephasingOperator {
    fn new(density: &Density, coupling: &CouplingParams) -> Self {
        let grid = density.grid().clone();
        Self {
            n_delta: grid.n_delta(),
            delta: grid.delta().to_vec(),
            weighted_rho: delta_weighted(&grid, density.values()),
            z_weights: grid.z_weights().to_vec(),
            drive: -TAU * coupling.g * coupling.g / coupling.c,
            polarization: vec![Complex64::new(0.0, 0.0); grid.n_z()],
            upstream: vec![Complex64::new(0.0, 0.0); grid.n_z()],
            grid,
        }
    }

    fn apply(&mut self, s: &[Complex64], out: &mut [Complex64]) {
        polarization(&self.grid, &self.weighted_rho, s, &mut self.polarization);
        accumulate_forward(&self.z_weights, &self.polarization, &mut self.upstream);
        for ((orow, srow), c) in out
            .chunks_exact_mut(self.n_delta)
            .zip(s.chunks_exact(self.n_delta))
            .zip(&self.upstream)
        {
            let f = c * self.drive;
            for ((o, s), d) in orow.iter_mut().zip(srow).zip(&self.delta) {
                *o = Complex64::new(-d * s.im, d * s.re) + f;
            }
        }
    }

    fn exit_field(&mut self, s: &[Complex64], factor: Complex64) -> Complex64 {
        polarization(&self.grid, &self.weighted_rho, s, &mut self.polarization);
        factor * integrate_z(&self.z_weights, &self.polarization)
    }
}

/// Integrate the rephasing dynamics from `initial.time()` to `t_end`.
pub fn evolve_rase(
    initial: &Amplitude,
    density: &Density,
    coupling: &CouplingParams,
    stepping: &Stepping,
    t_end: f64,
) -> Result<RaseResult> {
    evolve_rase_with(initial, density, coupling, stepping, t_end, |_| {})
}

/// As [`evolve_rase`], calling `observer` on every sampled state (both
/// endpoints included).
pub fn evolve_rase_with<F>(
    initial: &Amplitude,
    density: &Density,
    coupling: &CouplingParams,
    stepping: &Stepping,
    t_end: f64,
    mut observer: F,
) -> Result<RaseResult>
where
    F: FnMut(&Amplitude),
{
    ensure_same_grid(initial, density)?;
    let t0 = initial.time();
    let plan = stepping.plan(t_end - t0)?;
    let grid = density.grid().clone();
    let initial_norm = weighted_norm_raw(&grid, initial.values(), density.values());
    if initial_norm <= 0.0 {
        return Err(Error::ZeroNorm);
    }

    let factor = field_factor(coupling);
    let mut op = RephasingOperator::new(density, coupling);
    let mut rk = Rk4::new(grid.len());
    let mut current = initial.clone();
    let mut times = Vec::with_capacity(plan.steps + 1);
    let mut phi = Vec::with_capacity(plan.steps + 1);
    times.push(t0);
    phi.push(op.exit_field(current.values(), factor));
    observer(&current);

    for step in 1..=plan.steps {
        rk.step(current.values_mut(), plan.dt, &mut |y: &[Complex64], out: &mut [Complex64]| {
            op.apply(y, out)
        });
        let t = t0 + step as f64 * plan.dt;
        current.set_time(t);
        let exit = op.exit_field(current.values(), factor);
        if !(exit.re.is_finite() && exit.im.is_finite()) {
            return Err(Error::NonFinite(t));
        }
        times.push(t);
        phi.push(exit);
        if plan.is_sample(step) {
            observer(&current);
        }
    }

    let light = LightRecord {
        times,
        phi_exit: phi,
        c: coupling.c,
    };
    let emission = emission_probability(&light, initial_norm)?;
    let residual = weighted_norm_raw(&grid, current.values(), density.values()) / initial_norm;
    if !residual.is_finite() {
        return Err(Error::NonFinite(current.time()));
    }
    let deviation = (emission + residual - 1.0).abs();
    if deviation > FLUX_TOLERANCE {
        return Err(Error::FluxBreach {
            total: emission + residual,
            deviation,
        });
    }
    Ok(RaseResult {
        emission_probability: emission,
        light,
        residual_norm: residual,
        initial_norm,
        final_state: current,
    })
}

/// Excitation per unit length `∫ dΔ |s|² ρ`, divided by the initial norm,
/// on a (time, position) lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub times: Vec<f64>,
    pub z: Vec<f64>,
    /// Time-major: `values[it * z.len() + iz]`.
    pub values: Vec<f64>,
}

impl Heatmap {
    pub fn at(&self, it: usize, iz: usize) -> f64 {
        self.values[it * self.z.len() + iz]
    }

    pub fn slice(&self, it: usize) -> &[f64] {
        let n = self.z.len();
        &self.values[it * n..(it + 1) * n]
    }

    /// `t,z,excitation`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["t", "z", "excitation"]);
        for (it, time) in self.times.iter().enumerate() {
            for (iz, z) in self.z.iter().enumerate() {
                t.push([*time, *z, self.at(it, iz)]);
            }
        }
        t
    }
}

/// Accumulates heatmap rows from an observer callback.
#[derive(Debug)]
pub struct HeatmapRecorder<'a> {
    density: &'a Density,
    reference: Option<f64>,
    map: Heatmap,
}

impl<'a> HeatmapRecorder<'a> {
    pub fn new(density: &'a Density) -> Self {
        Self {
            density,
            reference: None,
            map: Heatmap {
                times: Vec::new(),
                z: density.grid().z().to_vec(),
                values: Vec::new(),
            },
        }
    }

    /// Normalize by a fixed norm instead of the first recorded state's.
    pub fn with_reference(mut self, norm: f64) -> Self {
        self.reference = Some(norm);
        self
    }

    pub fn record(&mut self, state: &Amplitude) -> Result<()> {
        let reference = match self.reference {
            Some(r) => r,
            None => {
                let r = state.weighted_norm(self.density)?;
                if r <= 0.0 {
                    return Err(Error::ZeroNorm);
                }
                self.reference = Some(r);
                r
            }
        };
        let marginal = state.excitation_marginal(self.density)?;
        self.map.times.push(state.time());
        self.map.values.extend(marginal.into_iter().map(|m| m / reference));
        Ok(())
    }

    pub fn finish(self) -> Heatmap {
        self.map
    }
}

/// Heatmap of a stored trajectory, normalized by the first state's norm.
pub fn excitation_heatmap(trajectory: &[Amplitude], density: &Density) -> Result<Heatmap> {
    let mut rec = HeatmapRecorder::new(density);
    for s in trajectory {
        rec.record(s)?;
    }
    Ok(rec.finish())
}
