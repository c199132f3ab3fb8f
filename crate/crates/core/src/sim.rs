//! Functional model of the processing element and a full-layer driver.
//!
//! The PE only ever reads its truth tables and mapping memories. For each of
//! the `B_a` activation bit-planes (LSB first) it looks up every output's
//! selected array, sign-extends the `B_l`-bit result, shifts it by the bit
//! index and adds it to the `B_p`-bit accumulator.
//!
//! The layer driver slides a `1 x D_k` window over the zero-padded input in
//! row-major order and runs all `D_s` steps at each position. Kernel row `r`
//! of the window at padded row `y` contributes to output row
//! `(y - r) / stride`; rows still waiting for later input rows are kept in a
//! partial-sum buffer and flushed once their last kernel row is consumed.

use std::collections::BTreeMap;

use crate::codegen::PEConfig;
use crate::error::{Error, Result};
use crate::layer::{ActTensor, GroupedWeights, OutTensor, QuantLayer};

/// `G` unsigned activations fed to the PE together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActWindow {
    acts: Vec<u32>,
}

impl ActWindow {
    pub fn new(acts: Vec<u32>, act_bits: u32) -> Result<Self> {
        if let Some(&a) = acts.iter().find(|&&a| (a as u64) >> act_bits != 0) {
            return Err(Error::Validation(format!(
                "activation {a} does not fit in {act_bits} bits"
            )));
        }
        Ok(Self { acts })
    }

    pub fn acts(&self) -> &[u32] {
        &self.acts
    }

    /// Bit `b` of every activation, packed with activation `g` in bit `g`.
    #[inline]
    pub fn bit_plane(&self, b: u32) -> u32 {
        self.acts
            .iter()
            .enumerate()
            .fold(0, |acc, (g, &a)| acc | ((a >> b) & 1) << g)
    }
}

fn psum_range(bits: u32) -> (i64, i64) {
    (-(1i64 << (bits - 1)), (1i64 << (bits - 1)) - 1)
}

/// One PE step: all `D_p` outputs for `window` at sequential index `step`,
/// accumulated onto `preload`.
pub fn pe_step(cfg: &PEConfig, window: &ActWindow, step: usize, preload: &[i64]) -> Result<Vec<i64>> {
    let mut acc = preload.to_vec();
    pe_step_into(cfg, window, step, &mut acc)?;
    Ok(acc)
}

/// In-place form of [`pe_step`].
pub fn pe_step_into(cfg: &PEConfig, window: &ActWindow, step: usize, acc: &mut [i64]) -> Result<()> {
    let w = &cfg.widths;
    if step >= cfg.dims.d_s {
        return Err(Error::Validation(format!("step {step} outside [0, {})", cfg.dims.d_s)));
    }
    if window.acts.len() != w.group_size as usize {
        return Err(Error::Validation(format!(
            "window holds {} activations, G={}",
            window.acts.len(),
            w.group_size
        )));
    }
    if acc.len() != cfg.dims.d_p {
        return Err(Error::Validation(format!(
            "{} partial sums for {} outputs",
            acc.len(),
            cfg.dims.d_p
        )));
    }
    if let Some(&a) = window.acts.iter().find(|&&a| (a as u64) >> w.act_bits != 0) {
        return Err(Error::Validation(format!(
            "activation {a} does not fit in {} bits",
            w.act_bits
        )));
    }
    let (lo, hi) = psum_range(w.psum_bits);
    if let Some((p, &v)) = acc.iter().enumerate().find(|(_, &v)| v < lo || v > hi) {
        return Err(Error::Validation(format!(
            "preload {v} at output {p} outside {}-bit range",
            w.psum_bits
        )));
    }

    let select = cfg.step_select[step];
    let mux = &cfg.mux_map[step];
    for b in 0..w.act_bits {
        let pattern = window.bit_plane(b);
        for (p, slot) in acc.iter_mut().enumerate() {
            let partial = cfg.arrays[mux[p]].output(select, pattern, w.group_size);
            let next = *slot + (partial << b);
            if next < lo || next > hi {
                return Err(Error::Overflow {
                    step,
                    output: p,
                    value: next,
                    bits: w.psum_bits,
                });
            }
            *slot = next;
        }
    }
    Ok(())
}

/// Output spatial size for one axis.
pub fn output_extent(input: usize, kernel: usize, stride: usize, pad: usize) -> Option<usize> {
    let padded = input + 2 * pad;
    (stride > 0 && padded >= kernel).then(|| (padded - kernel) / stride + 1)
}

fn check_conv_args(channels: usize, input: &ActTensor, kernel: usize, stride: usize, pad: usize) -> Result<(usize, usize)> {
    if stride == 0 {
        return Err(Error::Validation("stride must be at least 1".into()));
    }
    if input.channels != channels {
        return Err(Error::Config(format!(
            "input has {} channels, layer expects {channels}",
            input.channels
        )));
    }
    match (
        output_extent(input.height, kernel, stride, pad),
        output_extent(input.width, kernel, stride, pad),
    ) {
        (Some(h), Some(w)) => Ok((h, w)),
        _ => Err(Error::Config(format!(
            "{}x{} input with pad {pad} is smaller than the {kernel}x{kernel} kernel",
            input.height, input.width
        ))),
    }
}

#[inline]
fn padded_at(input: &ActTensor, c: usize, y: usize, x: usize, pad: usize) -> u32 {
    if y < pad || x < pad || y - pad >= input.height || x - pad >= input.width {
        0
    } else {
        input.get(c, y - pad, x - pad)
    }
}

/// Runs a whole convolution layer on the PE model.
pub fn simulate_layer(
    cfg: &PEConfig,
    gw: &GroupedWeights,
    input: &ActTensor,
    stride: usize,
    pad: usize,
) -> Result<OutTensor> {
    let dims = cfg.dims;
    let kernel = cfg.widths.group_size as usize;
    if dims.d_s != gw.d_s
        || dims.d_p != gw.d_p
        || dims.out_channels != gw.layer.out_channels
        || dims.in_channels != gw.layer.in_channels
        || dims.parallel_factor != gw.parallel_factor
        || kernel != gw.layer.kernel
    {
        return Err(Error::Config(format!(
            "configuration (D_s={}, D_p={}, D_o={}, D_i={}, P={}, G={kernel}) does not match layer {} \
             (D_s={}, D_p={}, D_o={}, D_i={}, P={}, D_k={})",
            dims.d_s,
            dims.d_p,
            dims.out_channels,
            dims.in_channels,
            dims.parallel_factor,
            gw.layer.name,
            gw.d_s,
            gw.d_p,
            gw.layer.out_channels,
            gw.layer.in_channels,
            gw.parallel_factor,
            gw.layer.kernel
        )));
    }
    cfg.check_structure()?;
    input.validate()?;
    if input.act_bits > cfg.widths.act_bits {
        return Err(Error::Config(format!(
            "input is {}-bit, PE takes {}-bit activations",
            input.act_bits, cfg.widths.act_bits
        )));
    }
    let (h_out, w_out) = check_conv_args(dims.in_channels, input, kernel, stride, pad)?;
    let d_o = dims.out_channels;
    let h_pad = input.height + 2 * pad;

    let mut out = OutTensor::zeros(d_o, h_out, w_out, cfg.widths.psum_bits);
    // Pending output rows: oy -> [D_o][W_out] partial sums.
    let mut pending: BTreeMap<usize, Vec<i64>> = BTreeMap::new();
    let mut acc = vec![0i64; dims.d_p];
    let mut targets: Vec<Option<(usize, usize)>> = vec![None; dims.d_p];
    let mut acts = vec![0u32; kernel];

    for y in 0..h_pad {
        // Output row fed by kernel row r from this input row, if any.
        let row_of = |r: usize| -> Option<usize> {
            (y >= r && (y - r).is_multiple_of(stride))
                .then(|| (y - r) / stride)
                .filter(|&oy| oy < h_out)
        };
        if (0..kernel).any(|r| row_of(r).is_some()) {
            for ox in 0..w_out {
                let x0 = ox * stride;
                for t in 0..dims.d_s {
                    let (tile, i) = (t / dims.in_channels, t % dims.in_channels);
                    for (g, a) in acts.iter_mut().enumerate() {
                        *a = padded_at(input, i, y, x0 + g, pad);
                    }
                    let window = ActWindow { acts: acts.clone() };
                    for p in 0..dims.d_p {
                        let o = tile * dims.parallel_factor + p / kernel;
                        let target = (o < d_o).then(|| row_of(p % kernel)).flatten().map(|oy| (oy, o));
                        targets[p] = target;
                        acc[p] = match target {
                            Some((oy, o)) => pending
                                .get(&oy)
                                .map_or(0, |row| row[o * w_out + ox]),
                            None => 0,
                        };
                    }
                    pe_step_into(cfg, &window, t, &mut acc)?;
                    for (p, target) in targets.iter().enumerate() {
                        if let Some((oy, o)) = *target {
                            pending.entry(oy).or_insert_with(|| vec![0; d_o * w_out])[o * w_out + ox] = acc[p];
                        }
                    }
                }
            }
        }
        // Rows whose last kernel row was just consumed are complete.
        if y + 1 >= kernel && (y + 1 - kernel).is_multiple_of(stride) {
            let oy = (y + 1 - kernel) / stride;
            if oy < h_out {
                let row = pending.remove(&oy).unwrap_or_else(|| vec![0; d_o * w_out]);
                for o in 0..d_o {
                    for ox in 0..w_out {
                        *out.get_mut(o, oy, ox) = row[o * w_out + ox];
                    }
                }
            }
        }
    }
    debug_assert!(pending.is_empty());
    Ok(out)
}

/// Direct integer convolution in `i64`, the reference for the PE model.
pub fn oracle_conv(layer: &QuantLayer, input: &ActTensor, stride: usize, pad: usize) -> Result<OutTensor> {
    let k = layer.kernel;
    let (h_out, w_out) = check_conv_args(layer.in_channels, input, k, stride, pad)?;
    let mut out = OutTensor::zeros(layer.out_channels, h_out, w_out, layer.psum_bits);
    for o in 0..layer.out_channels {
        for oy in 0..h_out {
            for ox in 0..w_out {
                let mut sum = 0i64;
                for i in 0..layer.in_channels {
                    for r in 0..k {
                        for c in 0..k {
                            let a = padded_at(input, i, oy * stride + r, ox * stride + c, pad);
                            sum += layer.weight(o, i, r, c) as i64 * a as i64;
                        }
                    }
                }
                *out.get_mut(o, oy, ox) = sum;
            }
        }
    }
    Ok(out)
}
