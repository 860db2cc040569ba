//! Conditional evolution of the inverted ensemble after a photodetection.
//!
//! A detection leaves one collective de-excitation spread evenly over every
//! atom (`s ≡ 1`). While no further photon is recorded the amplitude obeys
//!
//! ```text
//! ds/dt = iΔ s − (π g² N / c) s − (2π g² / c) ∫_z^L dy ∫ dΔ' s(y, Δ') ρ(y, Δ')
//! ```
//!
//! and its weighted norm is the probability that nothing else was emitted.
//! The coupling integral collects slices at larger `z`, so the ASE light
//! leaves through `z = 0` and the surviving de-excitation piles up towards
//! `z = L`, the face the rephased photon later exits from.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::ensemble::{coupling_for_depth, CouplingParams, Density, Distribution};
use crate::error::{Error, Result};
use crate::experiments::ScanFailure;
use crate::solver::{accumulate_backward, delta_weighted, polarization, Rk4, Stepping};
use crate::state::{ensure_same_grid, weighted_norm_raw, Amplitude};
use crate::table::Table;

/// Time between the heralding detection and the inverting pulse.
pub const DEFAULT_SEPARATION_TIME: f64 = 4.0;

/// Relative norm growth in a single step that aborts the integration.
pub const NORM_GROWTH_LIMIT: f64 = 1e-6;

/// Probability of no further emission, sampled against time since the
/// detection.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    pub times: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl SurvivalCurve {
    /// Linear interpolation; clamps outside the sampled span.
    pub fn value_at(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|x| *x < t);
        if i == 0 {
            return self.probabilities[0];
        }
        if i == self.times.len() {
            return *self.probabilities.last().unwrap();
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (p0, p1) = (self.probabilities[i - 1], self.probabilities[i]);
        p0 + (p1 - p0) * (t - t0) / (t1 - t0)
    }

    pub fn last(&self) -> f64 {
        *self.probabilities.last().expect("curve has samples")
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["t", "p_no_jump"]);
        for (x, p) in self.times.iter().zip(&self.probabilities) {
            t.push([*x, *p]);
        }
        t
    }
}

/// Output of a no-jump integration.
#[derive(Debug, Clone)]
pub struct AseRun {
    pub final_state: Amplitude,
    pub survival: SurvivalCurve,
    pub initial_norm: f64,
    /// Largest relative norm increase seen in any single step (≤ 0 when the
    /// norm decreased monotonically).
    pub max_step_growth: f64,
}

/// State right after a detection at `detection_time`: `s ≡ 1`, with the
/// density carried by the measure.
pub fn post_jump_state(density: &Density, detection_time: f64) -> Amplitude {
    Amplitude::uniform(density.grid().clone(), Complex64::new(1.0, 0.0), detection_time)
}

/// `‖s‖²_ρ` relative to the post-jump norm `‖1‖²_ρ = ∫ρ`.
pub fn survival_probability(state: &Amplitude, density: &Density) -> Result<f64> {
    let reference = density.total();
    if reference <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(state.weighted_norm(density)? / reference)
}

struct NoJumpOperator {
    n_delta: usize,
    delta: Vec<f64>,
    weighted_rho: Vec<f64>,
    z_weights: Vec<f64>,
    decay: f64,
    collective: f64,
    polarization: Vec<Complex64>,
    downstream: Vec<Complex64>,
    grid: std::sync::Arc<crate::grid::Grid>,
}

impl NoJumpOperator {
    fn new(density: &Density, coupling: &CouplingParams) -> Self {
        let grid = density.grid().clone();
        let g2 = coupling.g * coupling.g;
        Self {
            n_delta: grid.n_delta(),
            delta: grid.delta().to_vec(),
            weighted_rho: delta_weighted(&grid, density.values()),
            z_weights: grid.z_weights().to_vec(),
            // (N − 1) ≈ N
            decay: PI * g2 * density.n_atoms() / coupling.c,
            collective: TAU * g2 / coupling.c,
            polarization: vec![Complex64::new(0.0, 0.0); grid.n_z()],
            downstream: vec![Complex64::new(0.0, 0.0); grid.n_z()],
            grid,
        }
    }

    fn apply(&mut self, s: &[Complex64], out: &mut [Complex64]) {
        polarization(&self.grid, &self.weighted_rho, s, &mut self.polarization);
        accumulate_backward(&self.z_weights, &self.polarization, &mut self.downstream);
        for ((orow, srow), c) in out
            .chunks_exact_mut(self.n_delta)
            .zip(s.chunks_exact(self.n_delta))
            .zip(&self.downstream)
        {
            let drive = c * self.collective;
            for ((o, s), d) in orow.iter_mut().zip(srow).zip(&self.delta) {
                *o = Complex64::new(-self.decay, *d) * s - drive;
            }
        }
    }
}

/// Integrate the no-jump equation from `state.time()` to `t_end`.
pub fn evolve_no_jump(
    state: &Amplitude,
    density: &Density,
    coupling: &CouplingParams,
    stepping: &Stepping,
    t_end: f64,
) -> Result<AseRun> {
    evolve_no_jump_with(state, density, coupling, stepping, t_end, |_| {})
}

/// Like [`evolve_no_jump`], but collects the sampled states (both endpoints
/// included). Memory grows with `grid.len() × samples`.
pub fn evolve_no_jump_trajectory(
    state: &Amplitude,
    density: &Density,
    coupling: &CouplingParams,
    stepping: &Stepping,
    t_end: f64,
) -> Result<(AseRun, Vec<Amplitude>)> {
    let mut samples = Vec::new();
    let run = evolve_no_jump_with(state, density, coupling, stepping, t_end, |a| {
        samples.push(a.clone())
    })?;
    Ok((run, samples))
}

/// Core integrator; `observer` sees every sampled state.
pub fn evolve_no_jump_with<F>(
    state: &Amplitude,
    density: &Density,
    coupling: &CouplingParams,
    stepping: &Stepping,
    t_end: f64,
    mut observer: F,
) -> Result<AseRun>
where
    F: FnMut(&Amplitude),
{
    ensure_same_grid(state, density)?;
    let t0 = state.time();
    let plan = stepping.plan(t_end - t0)?;
    let grid = density.grid().clone();
    let initial_norm = weighted_norm_raw(&grid, state.values(), density.values());
    if initial_norm <= 0.0 {
        return Err(Error::ZeroNorm);
    }

    let mut op = NoJumpOperator::new(density, coupling);
    let mut rk = Rk4::new(grid.len());
    let mut current = state.clone();
    let mut norm = initial_norm;
    let mut max_growth = f64::NEG_INFINITY;
    let mut times = vec![0.0];
    let mut probabilities = vec![1.0];
    observer(&current);

    let mut f = |y: &[Complex64], out: &mut [Complex64]| op.apply(y, out);
    for step in 1..=plan.steps {
        rk.step(current.values_mut(), plan.dt, &mut f);
        let t = t0 + step as f64 * plan.dt;
        current.set_time(t);
        let next = weighted_norm_raw(&grid, current.values(), density.values());
        if !next.is_finite() {
            return Err(Error::NonFinite(t));
        }
        let growth = (next - norm) / norm;
        if growth > NORM_GROWTH_LIMIT {
            return Err(Error::NormGrowth { time: t, growth });
        }
        max_growth = max_growth.max(growth);
        norm = next;
        if plan.is_sample(step) {
            times.push(t - t0);
            probabilities.push(norm / initial_norm);
            observer(&current);
        }
    }
    if plan.steps == 0 {
        max_growth = 0.0;
    }

    Ok(AseRun {
        final_state: current,
        survival: SurvivalCurve {
            times,
            probabilities,
        },
        initial_norm,
        max_step_growth: max_growth,
    })
}

/// Detection at `−separation`, no-jump evolution up to the inverting pulse
/// at `t = 0`.
pub fn evolve_after_detection(
    density: &Density,
    coupling: &CouplingParams,
    stepping: &Stepping,
    separation: f64,
) -> Result<AseRun> {
    let start = post_jump_state(density, -separation);
    evolve_no_jump(&start, density, coupling, stepping, 0.0)
}

/// `|s|² ρ` normalized to unit quadrature.
pub fn deexcitation_distribution(state: &Amplitude, density: &Density) -> Result<Distribution> {
    ensure_same_grid(state, density)?;
    let w: Vec<f64> = state
        .values()
        .iter()
        .zip(density.values())
        .map(|(s, r)| s.norm_sqr() * r)
        .collect();
    Distribution::new(density.grid().clone(), w)
}

/// Survival surface `alpha_l,t,p_no_jump` over optical depths and
/// `t ∈ [0, t_max]` (time since detection, sampled at
/// `stepping.sample_interval`). A depth whose solve fails keeps its rows
/// with the probability left empty.
pub fn no_second_emission_surface(
    od_values: &[f64],
    t_max: f64,
    base_density: &Density,
    stepping: &Stepping,
    progress: &(dyn Fn() + Sync),
) -> (Table, Vec<ScanFailure>) {
    let runs: Vec<(f64, Result<SurvivalCurve>)> = od_values
        .par_iter()
        .map(|&alpha_l| {
            let r = (|| {
                if alpha_l.is_nan() || alpha_l <= 0.0 {
                    return Err(crate::error::invalid("alpha_l", format!("{alpha_l} must be > 0")));
                }
                let coupling = coupling_for_depth(alpha_l, base_density)?;
                let start = post_jump_state(base_density, 0.0);
                Ok(evolve_no_jump(&start, base_density, &coupling, stepping, t_max)?.survival)
            })();
            progress();
            (alpha_l, r)
        })
        .collect();

    let nominal: Vec<f64> = match stepping.plan(t_max) {
        Ok(plan) => (0..=plan.steps)
            .filter(|k| plan.is_sample(*k))
            .map(|k| k as f64 * plan.dt)
            .collect(),
        Err(_) => vec![0.0],
    };

    let mut table = Table::new(["alpha_l", "t", "p_no_jump"]);
    let mut failures = Vec::new();
    for (alpha_l, r) in runs {
        match r {
            Ok(curve) => {
                for (t, p) in curve.times.iter().zip(&curve.probabilities) {
                    table.push([alpha_l, *t, *p]);
                }
            }
            Err(e) => {
                for t in &nominal {
                    table.push_cells([Some(alpha_l), Some(*t), None]);
                }
                failures.push(ScanFailure {
                    alpha_l,
                    message: e.to_string(),
                });
            }
        }
    }
    table.sort_by_leading(2);
    (table, failures)
}
