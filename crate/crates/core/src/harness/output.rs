//! Result files: `records.csv`, `results.json`, and `plots/*.csv`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hybrid::ModelKind;

use super::metrics::{aggregate_series, series_stats, significance_series, Aggregates, CurvePoint, GroupBy, RrmseRecord, SeriesStats};
use super::{ExperimentSpec, TrainingSummary, UnitFailure};

pub const RECORDS_FILE: &str = "records.csv";
pub const RESULTS_FILE: &str = "results.json";
pub const PLOTS_DIR: &str = "plots";

const HEADER: [&str; 8] = ["experiment", "solution", "alpha", "model", "seed", "step", "time", "rrmse"];
const DEFAULT_THRESHOLDS: [f64; 5] = [1.0, 2.0, 5.0, 10.0, 100.0];

/// Modelling choices the results depend on, written next to them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSwitches {
    pub strain_norm: String,
    pub load_derivative: String,
    pub pbm_material: String,
    pub dimension_reduction: String,
    pub batch_size_and_patience: String,
    pub optimizer: String,
    pub initialization: String,
    pub ddm_inputs: String,
    pub tie_break: String,
    pub divergence: String,
}

impl Default for DesignSwitches {
    fn default() -> Self {
        Self {
            strain_norm: "tensor Frobenius norm (shear counted twice)".into(),
            load_derivative: "Richardson-extrapolated central differences, base step 1e-3".into(),
            pbm_material: "E = 1, nu = 0.25 in every experiment".into(),
            dimension_reduction: "z = 0 plane, in-plane components of the 3D load".into(),
            batch_size_and_patience: "mini-batches per epoch, validation and patience counted per epoch".into(),
            optimizer: "Adam beta1 0.9, beta2 0.999, eps 1e-8".into(),
            initialization: "He-uniform weights, zero biases".into(),
            ddm_inputs: "full state at the current level only, no load input".into(),
            tie_break: "exact ties go to pbm, then ddm, then costa, and are flagged".into(),
            divergence: "non-finite steps and failed training score inf from that step on".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub software_version: String,
    pub spec: Option<ExperimentSpec>,
    pub seeds: Vec<u64>,
    pub design: DesignSwitches,
    pub training: Vec<TrainingSummary>,
    pub failures: Vec<UnitFailure>,
}

impl RunMetadata {
    pub fn new(spec: Option<ExperimentSpec>) -> Self {
        Self {
            software_version: env!("CARGO_PKG_VERSION").to_string(),
            seeds: spec.as_ref().map_or_else(Vec::new, |s| (0..s.seeds).collect()),
            spec,
            design: DesignSwitches::default(),
            training: Vec::new(),
            failures: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct ResultsFile<'a> {
    metadata: &'a RunMetadata,
    record_count: usize,
    by_alpha: Aggregates,
    by_error: Aggregates,
    by_solution: Aggregates,
    significance: Vec<CurvePoint>,
    series: &'a [SeriesStats],
}

/// Writes records to `path` with a fixed header, also when empty.
pub fn write_records(records: &[RrmseRecord], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    let fail = |e: csv::Error| Error::format(path, e.to_string());
    w.write_record(HEADER).map_err(fail)?;
    for r in records {
        w.serialize(r).map_err(fail)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<RrmseRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rd = csv::Reader::from_reader(file);
    let headers = rd.headers().map_err(|e| Error::format(path, e.to_string()))?;
    if headers.iter().ne(HEADER) {
        return Err(Error::format(path, format!("unexpected header {headers:?}")));
    }
    rd.deserialize()
        .map(|r| r.map_err(|e| Error::format(path, e.to_string())))
        .collect()
}

fn plot_name(s: &SeriesStats) -> String {
    format!("exp{}_{}_alpha{}.csv", s.key.experiment, s.key.solution, s.key.alpha)
}

fn write_plots(stats: &[SeriesStats], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut i = 0;
    while i < stats.len() {
        let j = stats[i..]
            .iter()
            .position(|s| s.key != stats[i].key)
            .map_or(stats.len(), |p| i + p);
        let path = dir.join(plot_name(&stats[i]));
        let mut body = String::from("model,step,time,mean,mean_plus_std\n");
        for s in &stats[i..j] {
            for (n, step) in s.steps.iter().enumerate() {
                body.push_str(&format!(
                    "{},{},{},{},{}\n",
                    s.model,
                    step,
                    s.times[n],
                    s.mean[n],
                    s.mean[n] + s.std[n]
                ));
            }
        }
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        i = j;
    }
    Ok(())
}

/// Writes every result artifact into `out_dir`, creating it if needed.
/// Output contains no timestamps, so equal inputs give identical files.
pub fn emit_results(records: &[RrmseRecord], metadata: &RunMetadata, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_records(records, &out_dir.join(RECORDS_FILE))?;

    let stats = series_stats(records);
    let results = ResultsFile {
        metadata,
        record_count: records.len(),
        by_alpha: aggregate_series(&stats, GroupBy::Alpha),
        by_error: aggregate_series(&stats, GroupBy::Error),
        by_solution: aggregate_series(&stats, GroupBy::Solution),
        significance: significance_series(&stats, &DEFAULT_THRESHOLDS)?,
        series: &stats,
    };
    let path = out_dir.join(RESULTS_FILE);
    let mut file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::to_writer_pretty(&mut file, &results).map_err(|e| Error::format(&path, e.to_string()))?;
    file.write_all(b"\n").map_err(|e| Error::io(&path, e))?;

    let plots = out_dir.join(PLOTS_DIR);
    // stale plots from an earlier run in the same directory would mislead
    if plots.exists() {
        for entry in fs::read_dir(&plots).map_err(|e| Error::io(&plots, e))? {
            let p = entry.map_err(|e| Error::io(&plots, e))?.path();
            if p.extension().is_some_and(|x| x == "csv") {
                fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
            }
        }
    }
    write_plots(&stats, &plots)
}

/// Models present in a record set, in canonical order.
pub fn models_in(records: &[RrmseRecord]) -> Vec<ModelKind> {
    ModelKind::ALL.into_iter().filter(|m| records.iter().any(|r| r.model == *m)).collect()
}
