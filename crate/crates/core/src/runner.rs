//! Executes a [`RunConfig`] and writes CSV tables with JSON sidecars.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::ase::evolve_after_detection;
use crate::config::RunConfig;
use crate::ensemble::coupling_for_depth;
use crate::error::{Error, Result};
use crate::experiments::{ExperimentResult, Experiments, ScanFailure};
use crate::rase::{evolve_rase_with, invert_state, HeatmapRecorder};
use crate::table::Table;

/// Files written by a run and any scan points that failed.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub failures: Vec<ScanFailure>,
}

impl RunReport {
    pub fn is_clean(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Run `config`, calling `progress(done, total)` per scan point.
pub fn run<P>(config: &RunConfig, progress: P) -> Result<RunReport>
where
    P: Fn(usize, usize) + Send + Sync + 'static,
{
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::Config {
            key: "jobs".into(),
            message: e.to_string(),
        })?;
    let ex = Experiments::new(config.settings())?.with_progress(progress);
    let depths = config.depths();
    let results = pool.install(|| -> Result<Vec<ExperimentResult>> {
        Ok(match config.experiment.as_str() {
            "fig3" => vec![ex.run_shape_snapshots(&depths)?],
            "fig4" => vec![ex.run_separation_surface(&depths, config.t_max)?],
            "fig5" => vec![ex.run_mode_matched_rase(&depths)?],
            "fig6" => vec![ex.run_tradeoff_curve(&depths)?],
            "fig7" => vec![ex.run_flat_rase_scan(&depths)?],
            "fig8" => vec![ex.run_highdepth_heatmap(depths[0])?],
            "fig9" => vec![ex.run_tailored_pipeline(&depths)?],
            _ => run_custom(&ex, config)?,
        })
    })?;

    fs::create_dir_all(&config.out_dir)?;
    let mut report = RunReport {
        files: Vec::new(),
        failures: Vec::new(),
    };
    for r in results {
        report.files.extend(write_result(&r, config)?);
        report.failures.extend(r.failures);
    }
    Ok(report)
}

/// Re-run the configuration recorded in a sidecar, optionally into a
/// different directory.
pub fn replay<P>(meta_path: &Path, out_dir: Option<&Path>, progress: P) -> Result<RunReport>
where
    P: Fn(usize, usize) + Send + Sync + 'static,
{
    let mut config = config_from_meta(meta_path)?;
    if let Some(dir) = out_dir {
        config.out_dir = dir.to_path_buf();
    }
    run(&config, progress)
}

pub fn config_from_meta(meta_path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(meta_path)?;
    let meta: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Config {
        key: "<sidecar>".into(),
        message: e.to_string(),
    })?;
    let toml_text = meta
        .get("config_toml")
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::Config {
            key: "config_toml".into(),
            message: "missing from sidecar".into(),
        })?;
    RunConfig::parse(toml_text)
}

fn write_result(r: &ExperimentResult, config: &RunConfig) -> Result<Vec<PathBuf>> {
    let csv = config.out_dir.join(format!("{}.csv", r.name));
    let meta_path = config.out_dir.join(format!("{}.meta.json", r.name));
    r.table.write_csv(std::io::BufWriter::new(fs::File::create(&csv)?))?;

    let mut meta = serde_json::Map::new();
    meta.insert("table".into(), json!(csv.file_name().and_then(|s| s.to_str())));
    meta.insert("columns".into(), json!(r.table.columns()));
    meta.insert("rows".into(), json!(r.table.len()));
    meta.insert("missing_cells".into(), json!(r.table.missing_cells()));
    meta.insert("config_hash".into(), json!(config.hash()));
    meta.insert("config".into(), serde_json::to_value(config).expect("config serializes"));
    meta.insert("config_toml".into(), json!(config.to_toml()));
    meta.insert("axes".into(), json!(r.axes));
    meta.insert("failures".into(), json!(r.failures));
    for (k, v) in &r.metadata {
        meta.insert(k.clone(), v.clone());
    }
    let text = serde_json::to_string_pretty(&serde_json::Value::Object(meta)).expect("metadata serializes");
    fs::write(&meta_path, text + "\n")?;
    Ok(vec![csv, meta_path])
}

// ASE at one depth, RASE of the same state at another: the split-coupling
// scheme.
fn run_custom(ex: &Experiments, config: &RunConfig) -> Result<Vec<ExperimentResult>> {
    let rho = ex.gaussian()?;
    let ase_coupling = coupling_for_depth(config.alpha_l_ase, &rho)?;
    let rase_coupling = coupling_for_depth(config.alpha_l_rase, &rho)?;
    let ase = evolve_after_detection(&rho, &ase_coupling, ex.stepping(), config.t_s)?;
    let start = invert_state(&ase.final_state);
    let mut rec = HeatmapRecorder::new(&rho);
    let mut record_err = None;
    let rase = evolve_rase_with(&start, &rho, &rase_coupling, ex.stepping(), config.t_end, |s| {
        if let Err(e) = rec.record(s) {
            record_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = record_err {
        return Err(e);
    }

    let settings = ex.settings();
    let mut summary = Table::new([
        "alpha_l_ase",
        "alpha_l_rase",
        "p_separated",
        "efficiency",
        "residual_norm",
        "peak_time",
    ]);
    summary.push([
        config.alpha_l_ase,
        config.alpha_l_rase,
        ase.survival.last(),
        rase.emission_probability,
        rase.residual_norm,
        rase.light.peak_time(),
    ]);

    let named = |name: &str, table: Table| {
        let mut r = ExperimentResult::from_parts(name, settings, table);
        r.insert_metadata("alpha_l_ase", json!(config.alpha_l_ase));
        r.insert_metadata("alpha_l_rase", json!(config.alpha_l_rase));
        r
    };
    Ok(vec![
        named("custom", summary),
        named("custom_survival", ase.survival.to_table()),
        named("custom_light", rase.light.to_table()),
        named("custom_heatmap", rec.finish().to_table()),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(dir: &Path, experiment: &str) -> RunConfig {
        RunConfig {
            experiment: experiment.into(),
            out_dir: dir.to_path_buf(),
            jobs: 1,
            n_z: 11,
            n_delta: 21,
            dt: 1e-2,
            sample_interval: 1e-1,
            ..RunConfig::default()
        }
    }

    #[test]
    fn custom_run_writes_tables_and_sidecars() {
        let dir = tempfile::tempdir().unwrap();
        let report = run(&quick(dir.path(), "custom"), |_, _| {}).unwrap();
        assert!(report.is_clean());
        for name in ["custom", "custom_survival", "custom_light", "custom_heatmap"] {
            assert!(dir.path().join(format!("{name}.csv")).exists());
            assert!(dir.path().join(format!("{name}.meta.json")).exists());
        }
        let survival = fs::read_to_string(dir.path().join("custom_survival.csv")).unwrap();
        let first = survival.lines().nth(1).unwrap();
        assert!(first.starts_with("0.000000000000e0,1.000000000000e0"), "{first}");
    }

    #[test]
    fn sidecar_replays_to_the_same_table() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            alpha_l: Some(vec![0.5, 1.0]),
            ..quick(dir.path(), "fig7")
        };
        run(&cfg, |_, _| {}).unwrap();
        let again = tempfile::tempdir().unwrap();
        replay(&dir.path().join("fig7.meta.json"), Some(again.path()), |_, _| {}).unwrap();
        let a = fs::read(dir.path().join("fig7.csv")).unwrap();
        let b = fs::read(again.path().join("fig7.csv")).unwrap();
        assert_eq!(a, b);
        let meta: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("fig7.meta.json")).unwrap()).unwrap();
        assert_eq!(meta["config_hash"], json!(cfg.hash()));
        assert_eq!(meta["columns"], json!(["alpha_l", "efficiency"]));
    }
}
