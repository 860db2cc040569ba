//! Named pipelines that regenerate each figure's dataset.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::ase::{self, deexcitation_distribution, evolve_after_detection, post_jump_state};
use crate::ensemble::{
    coupling_for_depth, coupling_for_spectral_depth, gaussian_density, tailored_density, Density,
    DEFAULT_N_ATOMS,
};
use crate::error::{invalid, Result};
use crate::grid::Grid;
use crate::rase::{evolve_rase, evolve_rase_with, invert_state, HeatmapRecorder, RaseResult};
use crate::solver::Stepping;
use crate::state::Amplitude;
use crate::table::Table;

/// How the ASE de-excitation is placed relative to the rephasing exit face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Use the ASE state as computed: its front (z = L) is the RASE exit.
    Same,
    /// Mirror the ASE state through `z -> L - z` first.
    Reversed,
}

/// Coupling used for the rephasing stage of a tailored ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailoredCoupling {
    /// Choose `g` so the tailored spectral peak depth equals the target αL.
    PeakDepth,
    /// Reuse the `g` of the Gaussian ensemble at the target αL.
    MatchG,
}

/// Numerical and physical settings shared by every experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub n_z: usize,
    pub n_delta: usize,
    pub delta_halfspan: f64,
    pub dt: f64,
    pub sample_interval: f64,
    /// Detection-to-inversion delay `T_S`.
    pub t_s: f64,
    /// End of the rephasing window.
    pub t_end: f64,
    pub n_atoms: f64,
    pub mode_match: Orientation,
    pub tailored_coupling: TailoredCoupling,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            n_z: 201,
            n_delta: 201,
            delta_halfspan: 5.0,
            dt: 1e-3,
            sample_interval: 1e-2,
            t_s: ase::DEFAULT_SEPARATION_TIME,
            t_end: crate::rase::DEFAULT_RASE_END,
            n_atoms: DEFAULT_N_ATOMS,
            mode_match: Orientation::Same,
            tailored_coupling: TailoredCoupling::PeakDepth,
        }
    }
}

impl SolverSettings {
    pub fn grid(&self) -> Result<Arc<Grid>> {
        Ok(Arc::new(Grid::new(self.n_z, self.n_delta, self.delta_halfspan)?))
    }

    pub fn stepping(&self) -> Result<Stepping> {
        Stepping::new(self.dt, self.sample_interval)
    }

    /// Doubled node density on both axes and half the time step.
    pub fn refined(&self) -> Self {
        Self {
            n_z: 2 * self.n_z - 1,
            n_delta: 2 * self.n_delta - 1,
            dt: 0.5 * self.dt,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.stepping()?;
        for (name, v) in [("t_s", self.t_s), ("t_end", self.t_end), ("n_atoms", self.n_atoms)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("{v} must be positive")));
            }
        }
        Ok(())
    }
}

/// A scan point whose solve failed; its cells are left empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanFailure {
    pub alpha_l: f64,
    pub message: String,
}

/// Table plus everything needed to regenerate it.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub name: String,
    pub axes: BTreeMap<String, Vec<f64>>,
    pub table: Table,
    pub metadata: serde_json::Map<String, serde_json::Value>,
    pub failures: Vec<ScanFailure>,
}

impl ExperimentResult {
    pub fn from_parts(name: &str, settings: &SolverSettings, table: Table) -> Self {
        let mut metadata = serde_json::Map::new();
        metadata.insert("experiment".into(), json!(name));
        metadata.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        metadata.insert("settings".into(), serde_json::to_value(settings).expect("settings serialize"));
        // the ASE light leaves through z = 0, the rephased photon through z = L;
        // "front" below always means z = L
        metadata.insert("ase_exit_face".into(), json!("z=0"));
        metadata.insert("rase_exit_face".into(), json!("z=L"));
        metadata.insert("front_face".into(), json!("z=L"));
        Self {
            name: name.into(),
            axes: BTreeMap::new(),
            table,
            metadata,
            failures: Vec::new(),
        }
    }

    fn with_axis(mut self, name: &str, values: &[f64]) -> Self {
        self.axes.insert(name.into(), values.to_vec());
        self
    }

    fn with_failures(mut self, failures: Vec<ScanFailure>) -> Self {
        self.failures = failures;
        self
    }

    pub fn insert_metadata(&mut self, key: &str, value: serde_json::Value) {
        self.metadata.insert(key.into(), value);
    }
}

/// Optical depths `10^(m/20)` for `m` in `lo..=hi`: twenty per decade on a
/// fixed lattice, so scans over different ranges share exact values.
pub fn log_depths(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|m| 10f64.powf(m as f64 / 20.0)).collect()
}

pub mod defaults {
    use super::log_depths;

    pub fn shape_depths() -> Vec<f64> {
        vec![0.75, 7.5]
    }

    /// 0.01 ..= 1
    pub fn separation_depths() -> Vec<f64> {
        log_depths(-40, 0)
    }

    pub const SEPARATION_T_MAX: f64 = 8.0;

    /// ≈0.02 ..= 10
    pub fn mode_matched_depths() -> Vec<f64> {
        log_depths(-34, 20)
    }

    /// 0.1 ..= 10
    pub fn flat_depths() -> Vec<f64> {
        log_depths(-20, 20)
    }

    pub fn tailored_depths() -> Vec<f64> {
        log_depths(-20, 20)
    }

    pub const HIGHDEPTH_ALPHA_L: f64 = 10.0;
}

/// Mode-matched rephasing at one depth.
#[derive(Debug, Clone)]
pub struct ModeMatchedRun {
    /// Probability of no further ASE emission during `T_S`.
    pub p_separated: f64,
    pub rase: RaseResult,
}

/// Tailored-density rephasing at one depth.
#[derive(Debug, Clone)]
pub struct TailoredRun {
    pub density: Density,
    pub coupling_g: f64,
    pub rase: RaseResult,
}

type Progress = Arc<dyn Fn(usize, usize) + Send + Sync>;

/// Experiment runner bound to one set of solver settings.
#[derive(Clone)]
pub struct Experiments {
    settings: SolverSettings,
    grid: Arc<Grid>,
    stepping: Stepping,
    progress: Option<Progress>,
}

impl std::fmt::Debug for Experiments {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Experiments").field("settings", &self.settings).finish()
    }
}

impl Experiments {
    pub fn new(settings: SolverSettings) -> Result<Self> {
        settings.validate()?;
        Ok(Self {
            grid: settings.grid()?,
            stepping: settings.stepping()?,
            settings,
            progress: None,
        })
    }

    /// Called with `(done, total)` after each scan point.
    pub fn with_progress(mut self, f: impl Fn(usize, usize) + Send + Sync + 'static) -> Self {
        self.progress = Some(Arc::new(f));
        self
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn stepping(&self) -> &Stepping {
        &self.stepping
    }

    pub fn gaussian(&self) -> Result<Density> {
        gaussian_density(self.grid.clone(), self.settings.n_atoms)
    }

    fn scan<T, F>(&self, values: &[f64], f: F) -> Vec<(f64, Result<T>)>
    where
        T: Send,
        F: Fn(f64) -> Result<T> + Sync,
    {
        let done = AtomicUsize::new(0);
        let total = values.len();
        values
            .par_iter()
            .map(|&x| {
                let r = f(x);
                let k = done.fetch_add(1, Ordering::SeqCst) + 1;
                if let Some(p) = &self.progress {
                    p(k, total);
                }
                (x, r)
            })
            .collect()
    }

    fn orient(&self, s: Amplitude) -> Amplitude {
        match self.settings.mode_match {
            Orientation::Same => s,
            Orientation::Reversed => s.reversed_z(),
        }
    }

    /// De-excitation left `T_S` after a detection at depth `alpha_l`.
    pub fn deexcitation_after_detection(&self, alpha_l: f64) -> Result<crate::ensemble::Distribution> {
        let rho = self.gaussian()?;
        let c = coupling_for_depth(alpha_l, &rho)?;
        let run = evolve_after_detection(&rho, &c, &self.stepping, self.settings.t_s)?;
        deexcitation_distribution(&run.final_state, &rho)
    }

    /// `P(no further emission within T_S)` on the Gaussian ensemble.
    pub fn separation_probability(&self, alpha_l: f64) -> Result<f64> {
        let rho = self.gaussian()?;
        let c = coupling_for_depth(alpha_l, &rho)?;
        Ok(evolve_after_detection(&rho, &c, &self.stepping, self.settings.t_s)?
            .survival
            .last())
    }

    /// ASE and RASE at the same depth.
    pub fn mode_matched(&self, alpha_l: f64) -> Result<ModeMatchedRun> {
        let rho = self.gaussian()?;
        let c = coupling_for_depth(alpha_l, &rho)?;
        let ase = evolve_after_detection(&rho, &c, &self.stepping, self.settings.t_s)?;
        let p_separated = ase.survival.last();
        let start = invert_state(&self.orient(ase.final_state));
        let rase = evolve_rase(&start, &rho, &c, &self.stepping, self.settings.t_end)?;
        Ok(ModeMatchedRun { p_separated, rase })
    }

    /// Inverted state of a detection `T_S` earlier in the vanishing-depth
    /// limit: uniform magnitude, pure dephasing.
    pub fn flat_initial_state(&self, density: &Density) -> Amplitude {
        let t_s = self.settings.t_s;
        invert_state(&post_jump_state(density, -t_s).free_evolved(t_s))
    }

    /// Low-depth preparation, rephasing at `alpha_l`.
    pub fn flat(&self, alpha_l: f64) -> Result<RaseResult> {
        let rho = self.gaussian()?;
        let c = coupling_for_depth(alpha_l, &rho)?;
        evolve_rase(&self.flat_initial_state(&rho), &rho, &c, &self.stepping, self.settings.t_end)
    }

    /// Density shaped like the depth-`alpha_l` de-excitation, prepared at low
    /// depth, rephased at depth `alpha_l`.
    pub fn tailored(&self, alpha_l: f64) -> Result<TailoredRun> {
        let rho = self.gaussian()?;
        let c = coupling_for_depth(alpha_l, &rho)?;
        let ase = evolve_after_detection(&rho, &c, &self.stepping, self.settings.t_s)?;
        let shape = deexcitation_distribution(&self.orient(ase.final_state), &rho)?;
        let tailored = tailored_density(&shape, rho.n_atoms(), rho.gamma())?;
        let coupling = match self.settings.tailored_coupling {
            TailoredCoupling::PeakDepth => coupling_for_spectral_depth(alpha_l, &tailored)?,
            TailoredCoupling::MatchG => c,
        };
        let start = self.flat_initial_state(&tailored);
        let rase = evolve_rase(&start, &tailored, &coupling, &self.stepping, self.settings.t_end)?;
        Ok(TailoredRun {
            coupling_g: coupling.g,
            density: tailored,
            rase,
        })
    }

    /// De-excitation distribution `T_S` after a detection, per depth.
    pub fn run_shape_snapshots(&self, od_values: &[f64]) -> Result<ExperimentResult> {
        let runs = self.scan(od_values, |a| self.deexcitation_after_detection(a));
        let mut table = Table::new(["alpha_l", "z", "delta", "weight"]);
        let mut failures = Vec::new();
        let g = &self.grid;
        for (alpha_l, r) in runs {
            match r {
                Ok(d) => {
                    for (iz, z) in g.z().iter().enumerate() {
                        for (id, delta) in g.delta().iter().enumerate() {
                            table.push([alpha_l, *z, *delta, d.values()[g.index(iz, id)]]);
                        }
                    }
                }
                Err(e) => {
                    for z in g.z() {
                        for delta in g.delta() {
                            table.push_cells([Some(alpha_l), Some(*z), Some(*delta), None]);
                        }
                    }
                    failures.push(ScanFailure {
                        alpha_l,
                        message: e.to_string(),
                    })
                }
            }
        }
        table.sort_by_leading(3);
        Ok(ExperimentResult::from_parts("fig3", &self.settings, table)
            .with_axis("alpha_l", od_values)
            .with_failures(failures))
    }

    /// Survival surface over depth and time since detection.
    pub fn run_separation_surface(&self, od_values: &[f64], t_max: f64) -> Result<ExperimentResult> {
        let rho = self.gaussian()?;
        let done = AtomicUsize::new(0);
        let total = od_values.len();
        let tick = || {
            let k = done.fetch_add(1, Ordering::SeqCst) + 1;
            if let Some(p) = &self.progress {
                p(k, total);
            }
        };
        let (table, failures) = ase::no_second_emission_surface(od_values, t_max, &rho, &self.stepping, &tick);
        let mut r = ExperimentResult::from_parts("fig4", &self.settings, table)
            .with_axis("alpha_l", od_values)
            .with_failures(failures);
        r.insert_metadata("t_max", json!(t_max));
        Ok(r)
    }

    /// Mode-matched rephasing efficiency per depth.
    pub fn run_mode_matched_rase(&self, od_values: &[f64]) -> Result<ExperimentResult> {
        let runs = self.scan(od_values, |a| self.mode_matched(a));
        let (table, failures) = efficiency_table(runs, |r| vec![r.rase.emission_probability], &["efficiency"]);
        Ok(ExperimentResult::from_parts("fig5", &self.settings, table)
            .with_axis("alpha_l", od_values)
            .with_failures(failures))
    }

    /// Separation probability against mode-matched efficiency.
    pub fn run_tradeoff_curve(&self, od_values: &[f64]) -> Result<ExperimentResult> {
        let runs = self.scan(od_values, |a| self.mode_matched(a));
        let (table, failures) = efficiency_table(
            runs,
            |r| vec![r.p_separated, r.rase.emission_probability],
            &["p_separated", "efficiency"],
        );
        Ok(ExperimentResult::from_parts("fig6", &self.settings, table)
            .with_axis("alpha_l", od_values)
            .with_failures(failures))
    }

    /// Flat (low-depth) preparation, rephasing depth swept.
    pub fn run_flat_rase_scan(&self, od_values: &[f64]) -> Result<ExperimentResult> {
        let runs = self.scan(od_values, |a| self.flat(a));
        let (table, failures) = efficiency_table(runs, |r| vec![r.emission_probability], &["efficiency"]);
        Ok(ExperimentResult::from_parts("fig7", &self.settings, table)
            .with_axis("alpha_l", od_values)
            .with_failures(failures))
    }

    /// Excitation per unit length against time for the flat state.
    pub fn run_highdepth_heatmap(&self, alpha_l: f64) -> Result<ExperimentResult> {
        let rho = self.gaussian()?;
        let c = coupling_for_depth(alpha_l, &rho)?;
        let start = self.flat_initial_state(&rho);
        let mut rec = HeatmapRecorder::new(&rho).with_reference(start.weighted_norm(&rho)?);
        let mut record_err = None;
        let rase = evolve_rase_with(&start, &rho, &c, &self.stepping, self.settings.t_end, |s| {
            if let Err(e) = rec.record(s) {
                record_err.get_or_insert(e);
            }
        })?;
        if let Some(e) = record_err {
            return Err(e);
        }
        if let Some(p) = &self.progress {
            p(1, 1);
        }
        let map = rec.finish();
        let mut r = ExperimentResult::from_parts("fig8", &self.settings, map.to_table())
            .with_axis("t", &map.times)
            .with_axis("z", &map.z);
        r.insert_metadata("alpha_l", json!(alpha_l));
        r.insert_metadata("emission_probability", json!(rase.emission_probability));
        r.insert_metadata("residual_norm", json!(rase.residual_norm));
        r.insert_metadata("peak_time", json!(rase.light.peak_time()));
        Ok(r)
    }

    /// Tailored-density rephasing efficiency per depth.
    pub fn run_tailored_pipeline(&self, od_values: &[f64]) -> Result<ExperimentResult> {
        let runs = self.scan(od_values, |a| self.tailored(a));
        let (table, failures) = efficiency_table(runs, |r| vec![r.rase.emission_probability], &["efficiency"]);
        Ok(ExperimentResult::from_parts("fig9", &self.settings, table)
            .with_axis("alpha_l", od_values)
            .with_failures(failures))
    }
}

fn efficiency_table<T>(
    runs: Vec<(f64, Result<T>)>,
    cells: impl Fn(&T) -> Vec<f64>,
    columns: &[&str],
) -> (Table, Vec<ScanFailure>) {
    let mut table = Table::new(std::iter::once("alpha_l").chain(columns.iter().copied()));
    let mut failures = Vec::new();
    for (alpha_l, r) in runs {
        match r {
            Ok(v) => table.push(std::iter::once(alpha_l).chain(cells(&v))),
            Err(e) => {
                table.push_cells(std::iter::once(Some(alpha_l)).chain(columns.iter().map(|_| None)));
                failures.push(ScanFailure {
                    alpha_l,
                    message: e.to_string(),
                });
            }
        }
    }
    table.sort_by_leading(1);
    (table, failures)
}
