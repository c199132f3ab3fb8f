//! LUT truth tables and mapping memories for a processing element.
//!
//! LUT input `v` (six bits) is laid out as
//!
//! ```text
//! bit:   5 ... G | G-1 ... 0
//!        select s| a_{G-1} .. a_0
//! ```
//!
//! and LUT `j` of an array holds bit `j` of the two's-complement MAC result,
//! so the array's `B_l` outputs read LSB-first give the signed sum of the
//! weights whose activation bit is set. Vacant slots produce zero.

use std::collections::HashMap;

use crate::cluster::ClusterPlan;
use crate::cost::{cluster_capacity, lut_array_width, LutCostParams, LUT_INPUTS};
use crate::error::{Error, Result};
use crate::layer::{GroupedWeights, WeightGroup};
use crate::place::PlacementPlan;

/// Number of entries in a LUT-6 truth table.
pub const LUT_ENTRIES: usize = 1 << LUT_INPUTS;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Widths {
    pub group_size: u32,
    pub act_bits: u32,
    pub weight_bits: u32,
    pub lut_bits: u32,
    pub psum_bits: u32,
}

impl Widths {
    pub fn for_layer(gw: &GroupedWeights) -> Result<Self> {
        let l = &gw.layer;
        let params = LutCostParams::new(l.kernel as u32, l.act_bits, l.weight_bits, l.psum_bits)?;
        Ok(Self {
            group_size: params.group_size,
            act_bits: params.act_bits,
            weight_bits: params.weight_bits,
            lut_bits: lut_array_width(&params),
            psum_bits: params.psum_bits,
        })
    }

    pub fn n_clus(&self) -> usize {
        1 << (LUT_INPUTS - self.group_size)
    }

    fn activation_mask(&self) -> usize {
        (1 << self.group_size) - 1
    }
}

/// Interprets the low `bits` bits of `raw` as two's complement.
#[inline]
pub fn sign_extend(raw: u64, bits: u32) -> i64 {
    let shift = 64 - bits;
    ((raw << shift) as i64) >> shift
}

/// One LUT array: `N_lut` LUT-6 sharing their six inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LutArraySpec {
    pub id: usize,
    pub slots: Vec<Option<WeightGroup>>,
    /// INIT value per LUT; bit `v` is the output for input pattern `v`.
    pub init: Vec<u64>,
}

impl LutArraySpec {
    /// Raw output bits for the six-bit LUT input `v`, LUT 0 in bit 0.
    #[inline]
    pub fn raw_output(&self, v: usize) -> u64 {
        self.init
            .iter()
            .enumerate()
            .fold(0, |acc, (j, &init)| acc | ((init >> v) & 1) << j)
    }

    /// Signed array output for select `s` and activation bits `pattern`.
    #[inline]
    pub fn output(&self, select: usize, pattern: u32, group_size: u32) -> i64 {
        let v = (select << group_size) | pattern as usize;
        sign_extend(self.raw_output(v), self.init.len() as u32)
    }
}

/// Truth tables for every LUT array of a placement.
pub fn build_truth_tables(
    plan: &PlacementPlan,
    group_table: &[WeightGroup],
    widths: &Widths,
) -> Result<Vec<LutArraySpec>> {
    let capacity = cluster_capacity(widths.group_size)?;
    if plan.n_clus() > capacity {
        return Err(Error::Internal(format!(
            "{} clusters exceed the {capacity} select values of G={}",
            plan.n_clus(),
            widths.group_size
        )));
    }
    (0..plan.n_arr())
        .map(|e| {
            let slots: Vec<Option<WeightGroup>> = (0..capacity)
                .map(|c| {
                    (c < plan.n_clus())
                        .then(|| plan.slot(e, c))
                        .flatten()
                        .map(|u| group_table[u].clone())
                })
                .collect();
            array_from_slots(e, slots, widths)
        })
        .collect()
}

/// Encodes one array from its slot contents.
pub fn array_from_slots(id: usize, slots: Vec<Option<WeightGroup>>, widths: &Widths) -> Result<LutArraySpec> {
    let bits = widths.lut_bits;
    let (lo, hi) = (-(1i64 << (bits - 1)), (1i64 << (bits - 1)) - 1);
    let mask = (1u64 << bits) - 1;
    let mut init = vec![0u64; bits as usize];
    for v in 0..LUT_ENTRIES {
        let select = v >> widths.group_size;
        let Some(Some(group)) = slots.get(select) else {
            continue;
        };
        if group.len() != widths.group_size as usize {
            return Err(Error::Internal(format!(
                "array {id} slot {select}: group {group} has {} weights, G={}",
                group.len(),
                widths.group_size
            )));
        }
        let value = group.mac_bits((v & widths.activation_mask()) as u32);
        if value < lo || value > hi {
            return Err(Error::Internal(format!(
                "array {id} slot {select}: MAC {value} of {group} exceeds {bits} bits"
            )));
        }
        let enc = value as u64 & mask;
        for (j, word) in init.iter_mut().enumerate() {
            *word |= (enc >> j & 1) << v;
        }
    }
    Ok(LutArraySpec { id, slots, init })
}

/// Shape of the layer a configuration was compiled for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub d_s: usize,
    pub d_p: usize,
    pub out_channels: usize,
    pub in_channels: usize,
    pub parallel_factor: usize,
}

/// Everything needed to instantiate one processing element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PEConfig {
    pub arrays: Vec<LutArraySpec>,
    /// Step -> select value memory.
    pub step_select: Vec<usize>,
    /// Step -> per-output LUT array choice, `[D_s][D_p]`.
    pub mux_map: Vec<Vec<usize>>,
    /// Sorted arrays wired to each output switch.
    pub switch_wiring: Vec<Vec<usize>>,
    pub widths: Widths,
    pub dims: Dims,
}

impl PEConfig {
    pub fn n_arr(&self) -> usize {
        self.arrays.len()
    }

    pub fn total_wires(&self) -> usize {
        self.switch_wiring.iter().map(Vec::len).sum()
    }

    pub fn total_luts(&self) -> usize {
        self.arrays.iter().map(|a| a.init.len()).sum()
    }

    /// Structural consistency, independent of any weights.
    pub fn check_structure(&self) -> Result<()> {
        let Dims { d_s, d_p, .. } = self.dims;
        let w = &self.widths;
        let capacity = cluster_capacity(w.group_size)?;
        let expect_lut = lut_array_width(&LutCostParams::new(
            w.group_size,
            w.act_bits,
            w.weight_bits,
            w.psum_bits,
        )?);
        if w.lut_bits != expect_lut {
            return Err(Error::Config(format!(
                "B_l={} but B_w + ceil(log2 G) = {expect_lut}",
                w.lut_bits
            )));
        }
        if self.dims.parallel_factor * w.group_size as usize != d_p {
            return Err(Error::Config(format!(
                "D_p={d_p} is not P*G = {}*{}",
                self.dims.parallel_factor, w.group_size
            )));
        }
        if self.dims.in_channels * self.dims.out_channels.div_ceil(self.dims.parallel_factor.max(1)) != d_s {
            return Err(Error::Config(format!("D_s={d_s} inconsistent with D_i, D_o and P")));
        }
        for (e, a) in self.arrays.iter().enumerate() {
            if a.id != e {
                return Err(Error::Config(format!("array {e} carries id {}", a.id)));
            }
            if a.init.len() != w.lut_bits as usize || a.slots.len() != capacity {
                return Err(Error::Config(format!(
                    "array {e}: {} LUTs and {} slots, expected {} and {capacity}",
                    a.init.len(),
                    a.slots.len(),
                    w.lut_bits
                )));
            }
        }
        if self.step_select.len() != d_s || self.mux_map.len() != d_s || self.switch_wiring.len() != d_p {
            return Err(Error::Config("mapping memory sizes differ from D_s/D_p".into()));
        }
        for (t, row) in self.mux_map.iter().enumerate() {
            if self.step_select[t] >= capacity {
                return Err(Error::Config(format!("step {t} selects {}", self.step_select[t])));
            }
            if row.len() != d_p {
                return Err(Error::Config(format!("mux row {t} has {} entries", row.len())));
            }
            for (p, &e) in row.iter().enumerate() {
                if self.switch_wiring[p].binary_search(&e).is_err() {
                    return Err(Error::Config(format!(
                        "step {t} output {p} selects array {e}, which is not wired to that switch"
                    )));
                }
            }
        }
        for (p, wires) in self.switch_wiring.iter().enumerate() {
            if wires.windows(2).any(|w| w[0] >= w[1]) || wires.iter().any(|&e| e >= self.arrays.len()) {
                return Err(Error::Config(format!("switch {p} wiring not a sorted set of arrays")));
            }
        }
        Ok(())
    }

    /// Checks that every mapped slot holds the group the layer needs.
    pub fn check_against(&self, gw: &GroupedWeights) -> Result<()> {
        self.check_structure()?;
        if self.dims.d_s != gw.d_s || self.dims.d_p != gw.d_p {
            return Err(Error::Config(format!(
                "configuration is {}x{}, layer is {}x{}",
                self.dims.d_s, self.dims.d_p, gw.d_s, gw.d_p
            )));
        }
        for t in 0..gw.d_s {
            let s = self.step_select[t];
            for p in 0..gw.d_p {
                let e = self.mux_map[t][p];
                let stored = self.arrays[e].slots[s].as_ref();
                if stored != Some(gw.group_at(t, p)) {
                    return Err(Error::Infeasible(format!(
                        "step {t} output {p}: array {e} slot {s} holds {stored:?}, need {}",
                        gw.group_at(t, p)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Assembles truth tables, mapping memories and switch wiring.
pub fn build_pe_config(plan: &PlacementPlan, cp: &ClusterPlan, gw: &GroupedWeights) -> Result<PEConfig> {
    let widths = Widths::for_layer(gw)?;
    let arrays = build_truth_tables(plan, &gw.group_table, &widths)?;

    let mut location: HashMap<(usize, usize), usize> = HashMap::new();
    for e in 0..plan.n_arr() {
        for c in 0..plan.n_clus() {
            if let Some(u) = plan.slot(e, c) {
                location.insert((c, u), e);
            }
        }
    }

    let mut mux_map = Vec::with_capacity(gw.d_s);
    for (t, &c) in cp.labels.iter().enumerate() {
        let row = (0..gw.d_p)
            .map(|p| {
                let u = gw.index(t, p);
                location.get(&(c, u)).copied().ok_or_else(|| {
                    Error::Infeasible(format!("group {u} of step {t} has no slot in cluster {c}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        mux_map.push(row);
    }

    let r = plan.routing_matrix();
    let switch_wiring = (0..gw.d_p)
        .map(|p| {
            (0..plan.n_arr())
                .filter(|&e| (0..plan.n_clus()).any(|c| r.get(e, c, p)))
                .collect()
        })
        .collect();

    let cfg = PEConfig {
        arrays,
        step_select: cp.labels.clone(),
        mux_map,
        switch_wiring,
        widths,
        dims: Dims {
            d_s: gw.d_s,
            d_p: gw.d_p,
            out_channels: gw.layer.out_channels,
            in_channels: gw.layer.in_channels,
            parallel_factor: gw.parallel_factor,
        },
    };
    cfg.check_against(gw)?;
    Ok(cfg)
}
