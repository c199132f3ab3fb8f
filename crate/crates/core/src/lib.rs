//! Compiler for table-lookup multiply-accumulate (TLMAC) processing elements.
//!
//! A quantised convolution layer is split into weight groups (kernel rows),
//! the sequential steps are clustered so that shared groups are stored once
//! per LUT select index, groups are placed on LUT arrays and the placement is
//! annealed to cut array-to-switch wiring. The result is a set of LUT-6 INIT
//! values plus the step-addressed mapping memories, which a bit-serial
//! functional model checks against a direct integer convolution.
//!
//! ```text
//! QuantLayer -> GroupedWeights -> ClusterPlan -> PlacementPlan -> PEConfig
//!                                                     |              |
//!                                                  anneal()     simulate_layer()
//! ```

pub mod anneal;
pub mod cluster;
pub mod codegen;
pub mod cost;
pub mod error;
pub mod layer;
pub mod netlist;
pub mod pipeline;
pub mod place;
pub mod report;
pub mod sim;

pub use anneal::{anneal, count_routes, AcceptanceRule, AnnealConfig, AnnealTrace, Annealer};
pub use cluster::{baseline_chunk_cluster, lower_bound_arrays, spectral_cluster, ClusterPlan, SpectralOptions};
pub use codegen::{build_pe_config, build_truth_tables, LutArraySpec, PEConfig, Widths};
pub use error::{Error, Result};
pub use layer::{load_layer, load_layers, reshape_to_groups, ActTensor, GroupedWeights, OutTensor, QuantLayer, WeightGroup};
pub use pipeline::{compile_layer, verify, CompileOptions, CompiledLayer, VerifyOutcome};
pub use place::{place_groups, PlacementPlan, RoutingMatrix};
pub use sim::{oracle_conv, pe_step, simulate_layer, ActWindow};
