//! End-to-end compilation and verification of one layer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::anneal::{anneal, iteration_budget, AcceptanceRule, AnnealConfig, AnnealTrace, DEFAULT_ALPHA};
use crate::cluster::{baseline_chunk_cluster, lower_bound_arrays, spectral_cluster, ClusterPlan, SpectralOptions};
use crate::codegen::{build_pe_config, PEConfig};
use crate::cost::cluster_capacity;
use crate::error::Result;
use crate::layer::{redundancy_stats, reshape_to_groups, ActTensor, GroupedWeights, OutTensor, QuantLayer, DEFAULT_PARALLEL_FACTOR};
use crate::netlist::CompileMeta;
use crate::place::{place_groups, PlacementPlan};
use crate::report::{layer_report, LayerReport};
use crate::sim::{oracle_conv, simulate_layer};

pub const DEFAULT_BUDGET_PER_ROUTE: u64 = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct CompileOptions {
    pub parallel_factor: usize,
    pub neighbours: usize,
    /// Seed of the random initial placement.
    pub seed: u64,
    /// Fixed iteration count; when `None` the budget scales with the
    /// initial route count.
    pub anneal_iters: Option<u64>,
    pub anneal_alpha: f64,
    pub anneal_seed: u64,
    pub budget_per_route: u64,
    pub rule: AcceptanceRule,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self {
            parallel_factor: DEFAULT_PARALLEL_FACTOR,
            neighbours: SpectralOptions::default().neighbours,
            seed: 0,
            anneal_iters: None,
            anneal_alpha: DEFAULT_ALPHA,
            anneal_seed: 0,
            budget_per_route: DEFAULT_BUDGET_PER_ROUTE,
            rule: AcceptanceRule::BestEnergy,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompiledLayer {
    pub grouped: GroupedWeights,
    pub clusters: ClusterPlan,
    pub initial_placement: PlacementPlan,
    pub placement: PlacementPlan,
    pub trace: AnnealTrace,
    pub config: PEConfig,
    pub report: LayerReport,
    pub meta: CompileMeta,
}

pub fn compile_layer(layer: &QuantLayer, opts: &CompileOptions) -> Result<CompiledLayer> {
    let gw = reshape_to_groups(layer, opts.parallel_factor)?;
    let n_clus = cluster_capacity(layer.kernel as u32)?;
    let clusters = spectral_cluster(
        &gw.assignment,
        n_clus,
        &SpectralOptions {
            neighbours: opts.neighbours,
        },
    )?;
    clusters.check(&gw.assignment)?;
    let baseline = baseline_chunk_cluster(&gw.assignment, n_clus)?;

    let initial_placement = place_groups(&clusters, &gw, opts.seed)?;
    let initial_routes = initial_placement.routes();
    let cfg = AnnealConfig {
        iterations: opts
            .anneal_iters
            .unwrap_or_else(|| iteration_budget(initial_routes, opts.budget_per_route)),
        alpha: opts.anneal_alpha,
        seed: opts.anneal_seed,
        rule: opts.rule,
    };
    let (placement, trace) = anneal(initial_placement.clone(), &cfg);
    placement.check()?;

    let config = build_pe_config(&placement, &clusters, &gw)?;

    let mut report = layer_report(&gw, &clusters, &placement, &trace);
    report.chunk_baseline_arrays = baseline.n_arr;
    report.seed = opts.seed;
    report.nn_k = opts.neighbours;
    report.anneal_seed = opts.anneal_seed;
    report.anneal_iters = cfg.iterations;

    let stats = redundancy_stats(&gw);
    let meta = CompileMeta {
        name: layer.name.clone(),
        seed: opts.seed,
        nn_k: opts.neighbours,
        anneal_seed: opts.anneal_seed,
        anneal_iters: cfg.iterations,
        anneal_alpha: opts.anneal_alpha,
        n_uwg: stats.unique_groups,
        theoretical_max: stats.theoretical_max,
        lower_bound_arrays: lower_bound_arrays(&gw.assignment),
        chunk_baseline_arrays: baseline.n_arr,
        initial_routes: trace.initial,
        final_routes: config.total_wires(),
    };

    Ok(CompiledLayer {
        grouped: gw,
        clusters,
        initial_placement,
        placement,
        trace,
        config,
        report,
        meta,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerifyOutcome {
    Match,
    Mismatch {
        /// `(output channel, row, column)`.
        at: (usize, usize, usize),
        expected: i64,
        got: i64,
    },
}

/// Simulates the PE on `input` and compares with the direct convolution.
pub fn verify(cfg: &PEConfig, layer: &QuantLayer, input: &ActTensor, stride: usize, pad: usize) -> Result<(VerifyOutcome, OutTensor)> {
    let gw = reshape_to_groups(layer, cfg.dims.parallel_factor.max(1))?;
    let got = simulate_layer(cfg, &gw, input, stride, pad)?;
    let expected = oracle_conv(layer, input, stride, pad)?;
    let outcome = match expected.first_mismatch(&got) {
        None => VerifyOutcome::Match,
        Some((c, y, x)) => VerifyOutcome::Mismatch {
            at: (c, y, x),
            expected: expected.get(c, y, x),
            got: got.get(c, y, x),
        },
    };
    Ok((outcome, got))
}

/// Uniform random activations for a layer.
pub fn random_input(layer: &QuantLayer, height: usize, width: usize, seed: u64) -> ActTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let limit = 1u32 << layer.act_bits;
    let values = (0..layer.in_channels * height * width)
        .map(|_| rng.random_range(0..limit))
        .collect();
    ActTensor {
        channels: layer.in_channels,
        height,
        width,
        act_bits: layer.act_bits,
        values,
    }
}
