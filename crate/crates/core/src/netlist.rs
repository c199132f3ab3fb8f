//! JSON netlist for a compiled processing element.
//!
//! ```text
//! {"widths":{"G","B_a","B_w","B_l","B_p"},
//!  "dims":{"D_s","D_p","D_o","D_i","P"},
//!  "arrays":[{"id","slots":[[w,...]|null,...],"init":["hex16",...]}],
//!  "step_select":[...], "mux_map":[[...],...], "switch_wiring":[[...],...],
//!  "meta":{...}}
//! ```
//!
//! `init[j]` is LUT `j` of the array as 16 hex digits; bit `v` of the value is
//! the LUT output for input pattern `v`. `meta` is optional.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codegen::{array_from_slots, Dims, LutArraySpec, PEConfig, Widths};
use crate::error::{Error, Result};
use crate::layer::WeightGroup;

/// Compilation provenance stored alongside the configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompileMeta {
    pub name: String,
    pub seed: u64,
    pub nn_k: usize,
    pub anneal_seed: u64,
    pub anneal_iters: u64,
    pub anneal_alpha: f64,
    pub n_uwg: usize,
    pub theoretical_max: u64,
    pub lower_bound_arrays: usize,
    pub chunk_baseline_arrays: usize,
    pub initial_routes: usize,
    pub final_routes: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WidthsDoc {
    #[serde(rename = "G")]
    group_size: u32,
    #[serde(rename = "B_a")]
    act_bits: u32,
    #[serde(rename = "B_w")]
    weight_bits: u32,
    #[serde(rename = "B_l")]
    lut_bits: u32,
    #[serde(rename = "B_p")]
    psum_bits: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DimsDoc {
    #[serde(rename = "D_s")]
    d_s: usize,
    #[serde(rename = "D_p")]
    d_p: usize,
    #[serde(rename = "D_o")]
    out_channels: usize,
    #[serde(rename = "D_i")]
    in_channels: usize,
    #[serde(rename = "P")]
    parallel_factor: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArrayDoc {
    id: usize,
    slots: Vec<Option<WeightGroup>>,
    init: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetlistDoc {
    widths: WidthsDoc,
    dims: DimsDoc,
    arrays: Vec<ArrayDoc>,
    step_select: Vec<usize>,
    mux_map: Vec<Vec<usize>>,
    switch_wiring: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<CompileMeta>,
}

pub fn init_hex(init: u64) -> String {
    format!("{init:016x}")
}

pub fn parse_init_hex(s: &str) -> Option<u64> {
    (s.len() == 16 && s.bytes().all(|b| b.is_ascii_hexdigit()))
        .then(|| u64::from_str_radix(s, 16).ok())
        .flatten()
}

/// Serialises a configuration. Output is deterministic.
pub fn netlist_json(cfg: &PEConfig, meta: Option<&CompileMeta>) -> String {
    let w = &cfg.widths;
    let doc = NetlistDoc {
        widths: WidthsDoc {
            group_size: w.group_size,
            act_bits: w.act_bits,
            weight_bits: w.weight_bits,
            lut_bits: w.lut_bits,
            psum_bits: w.psum_bits,
        },
        dims: DimsDoc {
            d_s: cfg.dims.d_s,
            d_p: cfg.dims.d_p,
            out_channels: cfg.dims.out_channels,
            in_channels: cfg.dims.in_channels,
            parallel_factor: cfg.dims.parallel_factor,
        },
        arrays: cfg
            .arrays
            .iter()
            .map(|a| ArrayDoc {
                id: a.id,
                slots: a.slots.clone(),
                init: a.init.iter().map(|&i| init_hex(i)).collect(),
            })
            .collect(),
        step_select: cfg.step_select.clone(),
        mux_map: cfg.mux_map.clone(),
        switch_wiring: cfg.switch_wiring.clone(),
        meta: meta.cloned(),
    };
    let mut s = serde_json::to_string(&doc).expect("netlist serialises");
    s.push('\n');
    s
}

pub fn emit_netlist(cfg: &PEConfig, meta: Option<&CompileMeta>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, netlist_json(cfg, meta)).map_err(|e| Error::io(path, e))
}

/// Parses a netlist and checks its structure. INIT values are taken as
/// stored; they are not regenerated from the slots.
pub fn parse_netlist(text: &str, context: &str) -> Result<(PEConfig, Option<CompileMeta>)> {
    let doc: NetlistDoc = serde_json::from_str(text).map_err(|e| Error::parse(context, e.to_string()))?;
    let widths = Widths {
        group_size: doc.widths.group_size,
        act_bits: doc.widths.act_bits,
        weight_bits: doc.widths.weight_bits,
        lut_bits: doc.widths.lut_bits,
        psum_bits: doc.widths.psum_bits,
    };
    if !(1..=6).contains(&widths.group_size) || widths.lut_bits == 0 || widths.lut_bits > 32 {
        return Err(Error::parse(context, "widths out of range"));
    }
    let arrays = doc
        .arrays
        .into_iter()
        .map(|a| {
            let init = a
                .init
                .iter()
                .map(|h| {
                    parse_init_hex(h)
                        .ok_or_else(|| Error::parse(context, format!("array {}: bad INIT {h:?}", a.id)))
                })
                .collect::<Result<Vec<u64>>>()?;
            Ok(LutArraySpec {
                id: a.id,
                slots: a.slots,
                init,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let cfg = PEConfig {
        arrays,
        step_select: doc.step_select,
        mux_map: doc.mux_map,
        switch_wiring: doc.switch_wiring,
        widths,
        dims: Dims {
            d_s: doc.dims.d_s,
            d_p: doc.dims.d_p,
            out_channels: doc.dims.out_channels,
            in_channels: doc.dims.in_channels,
            parallel_factor: doc.dims.parallel_factor,
        },
    };
    cfg.check_structure()
        .map_err(|e| Error::parse(context, e.to_string()))?;
    Ok((cfg, doc.meta))
}

pub fn load_netlist(path: impl AsRef<Path>) -> Result<(PEConfig, Option<CompileMeta>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_netlist(&text, &path.display().to_string())
}

/// Indices `(array, lut)` whose INIT differs from what the stored slots
/// encode.
pub fn stale_tables(cfg: &PEConfig) -> Result<Vec<(usize, usize)>> {
    let mut stale = Vec::new();
    for a in &cfg.arrays {
        let fresh = array_from_slots(a.id, a.slots.clone(), &cfg.widths)?;
        for (j, (x, y)) in a.init.iter().zip(&fresh.init).enumerate() {
            if x != y {
                stale.push((a.id, j));
            }
        }
    }
    Ok(stale)
}
