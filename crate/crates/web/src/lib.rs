//! WebAssembly bindings for the browser demo. Every export returns a JSON
//! string; the plain Rust functions underneath are usable natively.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use tlmac_core::anneal::route_reduction_report;
use tlmac_core::codegen::{array_from_slots, LutArraySpec};
use tlmac_core::cost::{ceil_log2, cluster_capacity};
use tlmac_core::netlist::init_hex;
use tlmac_core::{compile_layer, ActWindow, CompileOptions, QuantLayer, WeightGroup, Widths};
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, Copy)]
pub struct SyntheticLayer {
    pub out_channels: usize,
    pub in_channels: usize,
    pub kernel: usize,
    pub weight_bits: u32,
    /// Distinct kernel rows to draw from; 0 draws every weight freely.
    pub palette: usize,
    pub parallel_factor: usize,
    pub iterations: u64,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct RoutingCurve {
    pub n_uwg: usize,
    pub theoretical_max: u64,
    pub n_arr: usize,
    pub lower_bound_arrays: usize,
    pub chunk_baseline_arrays: usize,
    pub logic_density: f64,
    pub initial_routes: usize,
    pub final_routes: usize,
    /// `(iteration, remaining fraction)`.
    pub curve: Vec<(u64, f64)>,
}

fn synthetic_weights(p: &SyntheticLayer) -> Vec<i32> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let lo = -(1i32 << (p.weight_bits - 1));
    let hi = (1i32 << (p.weight_bits - 1)) - 1;
    let rows = p.out_channels * p.in_channels * p.kernel;
    if p.palette == 0 {
        return (0..rows * p.kernel).map(|_| rng.random_range(lo..=hi)).collect();
    }
    let palette: Vec<Vec<i32>> = (0..p.palette)
        .map(|_| (0..p.kernel).map(|_| rng.random_range(lo..=hi)).collect())
        .collect();
    (0..rows)
        .flat_map(|_| palette[rng.random_range(0..p.palette)].clone())
        .collect()
}

/// Compiles a random layer and returns its clustering figures and the
/// annealing route-reduction curve.
pub fn routing_curve(p: &SyntheticLayer) -> Result<RoutingCurve, String> {
    if !(2..=8).contains(&p.weight_bits) {
        return Err("weight bits must be between 2 and 8".into());
    }
    if p.out_channels * p.in_channels > 256 * 256 {
        return Err("layer too large for the demo".into());
    }
    let layer = QuantLayer::new(
        "demo",
        p.weight_bits,
        2,
        None,
        p.out_channels,
        p.in_channels,
        p.kernel,
        synthetic_weights(p),
    )
    .map_err(|e| e.to_string())?;
    let opts = CompileOptions {
        parallel_factor: p.parallel_factor,
        seed: p.seed,
        anneal_seed: p.seed,
        anneal_iters: Some(p.iterations.min(2_000_000)),
        ..Default::default()
    };
    let c = compile_layer(&layer, &opts).map_err(|e| e.to_string())?;
    Ok(RoutingCurve {
        n_uwg: c.report.n_uwg,
        theoretical_max: c.report.theoretical_max,
        n_arr: c.report.n_arr,
        lower_bound_arrays: c.report.lower_bound_arrays,
        chunk_baseline_arrays: c.report.chunk_baseline_arrays,
        logic_density: c.report.logic_density(),
        initial_routes: c.trace.initial,
        final_routes: c.trace.final_routes,
        curve: route_reduction_report(&c.trace),
    })
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, String> {
    text.split([',', ' '])
        .filter(|s| !s.is_empty())
        .map(|s| s.trim().parse().map_err(|_| format!("bad {what} {s:?}")))
        .collect()
}

fn single_slot_array(weights: &[i32], weight_bits: u32) -> Result<(LutArraySpec, Widths), String> {
    let g = weights.len() as u32;
    let capacity = cluster_capacity(g).map_err(|e| e.to_string())?;
    if !(1..=16).contains(&weight_bits) {
        return Err("weight bits must be between 1 and 16".into());
    }
    let (lo, hi) = (-(1i32 << (weight_bits - 1)), (1i32 << (weight_bits - 1)) - 1);
    if let Some(w) = weights.iter().find(|w| !(lo..=hi).contains(*w)) {
        return Err(format!("weight {w} does not fit in {weight_bits} bits"));
    }
    let widths = Widths {
        group_size: g,
        act_bits: 1,
        weight_bits,
        lut_bits: weight_bits + ceil_log2(g as u64),
        psum_bits: 32,
    };
    let mut slots = vec![None; capacity];
    slots[0] = Some(WeightGroup(weights.to_vec()));
    let arr = array_from_slots(0, slots, &widths).map_err(|e| e.to_string())?;
    Ok((arr, widths))
}

#[derive(Debug, Serialize)]
pub struct TruthTableRow {
    pub pattern: String,
    pub value: i64,
    pub bits: String,
}

#[derive(Debug, Serialize)]
pub struct TruthTable {
    pub group_size: u32,
    pub lut_bits: u32,
    pub select_values: usize,
    /// INIT value per LUT, LUT 0 first.
    pub init: Vec<String>,
    pub rows: Vec<TruthTableRow>,
}

/// Truth table of one LUT array storing `weights` at select value 0.
pub fn truth_table(weights: &str, weight_bits: u32) -> Result<TruthTable, String> {
    let weights: Vec<i32> = parse_list(weights, "weight")?;
    let (arr, widths) = single_slot_array(&weights, weight_bits)?;
    let g = widths.group_size;
    let rows = (0..1u32 << g)
        .map(|pattern| {
            let raw = arr.raw_output(pattern as usize);
            TruthTableRow {
                pattern: format!("{pattern:0w$b}", w = g as usize),
                value: arr.output(0, pattern, g),
                bits: format!("{raw:0w$b}", w = widths.lut_bits as usize),
            }
        })
        .collect();
    Ok(TruthTable {
        group_size: g,
        lut_bits: widths.lut_bits,
        select_values: widths.n_clus(),
        init: arr.init.iter().map(|&v| init_hex(v)).collect(),
        rows,
    })
}

#[derive(Debug, Serialize)]
pub struct MacStep {
    pub bit: u32,
    pub pattern: String,
    pub lut_output: i64,
    pub shifted: i64,
    pub accumulator: i64,
}

#[derive(Debug, Serialize)]
pub struct MacTrace {
    pub steps: Vec<MacStep>,
    pub result: i64,
    pub expected: i64,
}

/// Bit-serial evaluation of `sum w_g * a_g` through the LUT array, one
/// activation bit per cycle.
pub fn mac_steps(weights: &str, acts: &str, weight_bits: u32, act_bits: u32) -> Result<MacTrace, String> {
    let weights: Vec<i32> = parse_list(weights, "weight")?;
    let acts: Vec<u32> = parse_list(acts, "activation")?;
    if weights.len() != acts.len() {
        return Err(format!("{} weights but {} activations", weights.len(), acts.len()));
    }
    if !(1..=16).contains(&act_bits) {
        return Err("activation bits must be between 1 and 16".into());
    }
    let (arr, widths) = single_slot_array(&weights, weight_bits)?;
    let window = ActWindow::new(acts.clone(), act_bits).map_err(|e| e.to_string())?;
    let g = widths.group_size;
    let mut acc = 0i64;
    let steps = (0..act_bits)
        .map(|b| {
            let pattern = window.bit_plane(b);
            let lut_output = arr.output(0, pattern, g);
            let shifted = lut_output << b;
            acc += shifted;
            MacStep {
                bit: b,
                pattern: format!("{pattern:0w$b}", w = g as usize),
                lut_output,
                shifted,
                accumulator: acc,
            }
        })
        .collect();
    Ok(MacTrace {
        steps,
        result: acc,
        expected: WeightGroup(weights).mac(&acts),
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen(js_name = routingCurve)]
pub fn routing_curve_js(
    out_channels: usize,
    in_channels: usize,
    kernel: usize,
    weight_bits: u32,
    palette: usize,
    parallel_factor: usize,
    iterations: u64,
    seed: u64,
) -> Result<String, JsError> {
    to_js(routing_curve(&SyntheticLayer {
        out_channels,
        in_channels,
        kernel,
        weight_bits,
        palette,
        parallel_factor,
        iterations,
        seed,
    }))
}

#[wasm_bindgen(js_name = truthTable)]
pub fn truth_table_js(weights: &str, weight_bits: u32) -> Result<String, JsError> {
    to_js(truth_table(weights, weight_bits))
}

#[wasm_bindgen(js_name = macSteps)]
pub fn mac_steps_js(weights: &str, acts: &str, weight_bits: u32, act_bits: u32) -> Result<String, JsError> {
    to_js(mac_steps(weights, acts, weight_bits, act_bits))
}
