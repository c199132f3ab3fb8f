//! Closed-form LUT-6 cost formulas used for sizing processing elements.
//!
//! A LUT-6 has six inputs. In the bit-serial scheme `G` of them carry one
//! activation bit each and the remaining `6 - G` form the select signal that
//! picks one of the weight groups stored in a LUT array.

use crate::error::{Error, Result};

/// Number of physical LUT inputs.
pub const LUT_INPUTS: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LutCostParams {
    /// Group size: activations (and weights) feeding one LUT array.
    pub group_size: u32,
    pub act_bits: u32,
    pub weight_bits: u32,
    pub psum_bits: u32,
}

impl LutCostParams {
    pub fn new(group_size: u32, act_bits: u32, weight_bits: u32, psum_bits: u32) -> Result<Self> {
        if !(1..=LUT_INPUTS).contains(&group_size) {
            return Err(Error::Domain(format!(
                "group size {group_size} outside [1, {LUT_INPUTS}]"
            )));
        }
        if act_bits == 0 || weight_bits == 0 || psum_bits == 0 {
            return Err(Error::Domain("bit widths must be at least 1".into()));
        }
        Ok(Self {
            group_size,
            act_bits,
            weight_bits,
            psum_bits,
        })
    }
}

/// `ceil(log2(n))` with `ceil(log2(1)) = 0`.
pub fn ceil_log2(n: u64) -> u32 {
    assert!(n > 0, "ceil_log2 of zero");
    u64::BITS - (n - 1).leading_zeros()
}

/// LUT-6 count of a fully bit-parallel MAC: `2^(G*B_a - 6) * B_p`.
pub fn bitparallel_lut_count(p: &LutCostParams) -> Result<u64> {
    let inputs = p.group_size * p.act_bits;
    if inputs < LUT_INPUTS {
        return Err(Error::Domain(format!(
            "bit-parallel cost needs at least {LUT_INPUTS} input bits, got {inputs}"
        )));
    }
    let shift = inputs - LUT_INPUTS;
    1u64.checked_shl(shift)
        .and_then(|t| t.checked_mul(p.psum_bits as u64))
        .ok_or_else(|| Error::Domain(format!("bit-parallel cost 2^{shift} overflows")))
}

/// LUT-6 primitives per LUT array, `B_l = B_w + ceil(log2 G)`.
///
/// This is also the output width of the array: enough bits for the sum of
/// `G` signed `B_w`-bit weights.
pub fn lut_array_width(p: &LutCostParams) -> u32 {
    p.weight_bits + ceil_log2(p.group_size as u64)
}

/// Weight groups one LUT array can hold, `N_clus = 2^(6 - G)`.
pub fn cluster_capacity(group_size: u32) -> Result<usize> {
    if !(1..=LUT_INPUTS).contains(&group_size) {
        return Err(Error::Domain(format!(
            "group size {group_size} outside [1, {LUT_INPUTS}]"
        )));
    }
    Ok(1usize << (LUT_INPUTS - group_size))
}

/// LUTs spent per stored weight when every slot of an array is used.
pub fn luts_per_weight(p: &LutCostParams) -> Result<f64> {
    let n_clus = cluster_capacity(p.group_size)?;
    Ok(lut_array_width(p) as f64 / (p.group_size as f64 * n_clus as f64))
}
