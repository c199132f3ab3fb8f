//! Per-layer and aggregate metrics, exported as CSV.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::anneal::{remaining_fraction, trace_csv, AnnealTrace};
use crate::cluster::{lower_bound_arrays, ClusterPlan};
use crate::codegen::PEConfig;
use crate::error::{Error, Result};
use crate::layer::{redundancy_stats, GroupedWeights};
use crate::netlist::CompileMeta;
use crate::place::PlacementPlan;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerReport {
    pub name: String,
    pub n_uwg: usize,
    pub theoretical_max: u64,
    pub n_arr: usize,
    pub lower_bound_arrays: usize,
    pub chunk_baseline_arrays: usize,
    pub luts_per_array: usize,
    pub initial_routes: usize,
    pub final_routes: usize,
    pub seed: u64,
    pub nn_k: usize,
    pub anneal_seed: u64,
    pub anneal_iters: u64,
}

impl LayerReport {
    /// Unique weight groups per LUT array.
    pub fn logic_density(&self) -> f64 {
        density(self.n_uwg, self.n_arr)
    }

    pub fn total_luts(&self) -> usize {
        self.n_arr * self.luts_per_array
    }

    pub fn remaining_fraction(&self) -> f64 {
        remaining_fraction(self.final_routes, self.initial_routes)
    }

    /// Rebuilds the report of a stored netlist.
    pub fn from_netlist(cfg: &PEConfig, meta: &CompileMeta) -> Self {
        Self {
            name: meta.name.clone(),
            n_uwg: meta.n_uwg,
            theoretical_max: meta.theoretical_max,
            n_arr: cfg.n_arr(),
            lower_bound_arrays: meta.lower_bound_arrays,
            chunk_baseline_arrays: meta.chunk_baseline_arrays,
            luts_per_array: cfg.widths.lut_bits as usize,
            initial_routes: meta.initial_routes,
            final_routes: cfg.total_wires(),
            seed: meta.seed,
            nn_k: meta.nn_k,
            anneal_seed: meta.anneal_seed,
            anneal_iters: meta.anneal_iters,
        }
    }
}

fn density(n_uwg: usize, n_arr: usize) -> f64 {
    if n_arr == 0 {
        0.0
    } else {
        n_uwg as f64 / n_arr as f64
    }
}

/// Report for one compiled layer. Seeds and baseline figures are left at
/// zero; the pipeline fills them in.
pub fn layer_report(
    gw: &GroupedWeights,
    cp: &ClusterPlan,
    plan: &PlacementPlan,
    trace: &AnnealTrace,
) -> LayerReport {
    let stats = redundancy_stats(gw);
    LayerReport {
        name: gw.layer.name.clone(),
        n_uwg: stats.unique_groups,
        theoretical_max: stats.theoretical_max,
        n_arr: cp.n_arr,
        lower_bound_arrays: lower_bound_arrays(&gw.assignment),
        chunk_baseline_arrays: 0,
        luts_per_array: gw.layer.weight_bits as usize + crate::cost::ceil_log2(gw.layer.kernel as u64) as usize,
        initial_routes: trace.initial,
        final_routes: plan.routes(),
        seed: 0,
        nn_k: 0,
        anneal_seed: 0,
        anneal_iters: 0,
    }
}

/// Totals over layers. Density is `sum N_uwg / sum N_arr`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub layers: usize,
    pub n_uwg: usize,
    pub n_arr: usize,
    pub total_luts: usize,
    pub initial_routes: usize,
    pub final_routes: usize,
}

impl AggregateReport {
    pub fn from_layers(reports: &[LayerReport]) -> Self {
        Self {
            layers: reports.len(),
            n_uwg: reports.iter().map(|r| r.n_uwg).sum(),
            n_arr: reports.iter().map(|r| r.n_arr).sum(),
            total_luts: reports.iter().map(LayerReport::total_luts).sum(),
            initial_routes: reports.iter().map(|r| r.initial_routes).sum(),
            final_routes: reports.iter().map(|r| r.final_routes).sum(),
        }
    }

    pub fn logic_density(&self) -> f64 {
        density(self.n_uwg, self.n_arr)
    }

    pub fn remaining_fraction(&self) -> f64 {
        remaining_fraction(self.final_routes, self.initial_routes)
    }
}

pub const LAYER_HEADER: &str = "layer,n_uwg,theoretical_max,n_arr,lower_bound_arrays,chunk_baseline_arrays,\
logic_density,luts_per_array,total_luts,initial_routes,final_routes,remaining_fraction,\
seed,nn_k,anneal_seed,anneal_iters";

pub const AGGREGATE_HEADER: &str =
    "layers,n_uwg,n_arr,logic_density,total_luts,initial_routes,final_routes,remaining_fraction";

pub fn layer_csv(r: &LayerReport) -> String {
    let mut s = String::from(LAYER_HEADER);
    s.push('\n');
    writeln!(
        s,
        "{},{},{},{},{},{},{:.6},{},{},{},{},{:.6},{},{},{},{}",
        r.name,
        r.n_uwg,
        r.theoretical_max,
        r.n_arr,
        r.lower_bound_arrays,
        r.chunk_baseline_arrays,
        r.logic_density(),
        r.luts_per_array,
        r.total_luts(),
        r.initial_routes,
        r.final_routes,
        r.remaining_fraction(),
        r.seed,
        r.nn_k,
        r.anneal_seed,
        r.anneal_iters
    )
    .unwrap();
    s
}

/// Header plus one totals row; header only when there are no layers.
pub fn aggregate_csv(reports: &[LayerReport]) -> String {
    let mut s = String::from(AGGREGATE_HEADER);
    s.push('\n');
    if !reports.is_empty() {
        let a = AggregateReport::from_layers(reports);
        writeln!(
            s,
            "{},{},{},{:.6},{},{},{},{:.6}",
            a.layers,
            a.n_uwg,
            a.n_arr,
            a.logic_density(),
            a.total_luts,
            a.initial_routes,
            a.final_routes,
            a.remaining_fraction()
        )
        .unwrap();
    }
    s
}

/// File-name-safe form of a layer name.
pub fn file_stem(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect();
    if s.is_empty() {
        "layer".into()
    } else {
        s
    }
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf> {
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `<layer>.csv`, `<layer>_anneal.csv` (when a trace is given) and
/// `aggregate.csv` into `dir`. Returns the written paths.
pub fn export_reports(entries: &[(LayerReport, Option<AnnealTrace>)], dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for (report, trace) in entries {
        let stem = file_stem(&report.name);
        written.push(write(dir.join(format!("{stem}.csv")), &layer_csv(report))?);
        if let Some(trace) = trace {
            written.push(write(dir.join(format!("{stem}_anneal.csv")), &trace_csv(trace))?);
        }
    }
    let reports: Vec<LayerReport> = entries.iter().map(|(r, _)| r.clone()).collect();
    written.push(write(dir.join("aggregate.csv"), &aggregate_csv(&reports))?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(n_uwg: usize, n_arr: usize) -> LayerReport {
        LayerReport {
            name: "l".into(),
            n_uwg,
            theoretical_max: 512,
            n_arr,
            lower_bound_arrays: 1,
            chunk_baseline_arrays: n_arr,
            luts_per_array: 5,
            initial_routes: 10,
            final_routes: 6,
            seed: 0,
            nn_k: 10,
            anneal_seed: 0,
            anneal_iters: 100,
        }
    }

    #[test]
    fn aggregate_density_is_ratio_of_sums() {
        let rs = vec![report(10, 10), report(30, 10)];
        let a = AggregateReport::from_layers(&rs);
        assert_eq!(a.logic_density(), 2.0);
        let mean = (rs[0].logic_density() + rs[1].logic_density()) / 2.0;
        assert_eq!(mean, 2.0);
        let rs = vec![report(10, 10), report(30, 5)];
        assert_eq!(AggregateReport::from_layers(&rs).logic_density(), 40.0 / 15.0);
        assert_eq!(AggregateReport::from_layers(&rs).total_luts, 75);
    }

    #[test]
    fn empty_aggregate_is_header_only() {
        assert_eq!(aggregate_csv(&[]), format!("{AGGREGATE_HEADER}\n"));
    }

    #[test]
    fn stems_are_sanitised() {
        assert_eq!(file_stem("layer1/conv 2"), "layer1_conv_2");
        assert_eq!(file_stem(""), "layer");
    }
}
