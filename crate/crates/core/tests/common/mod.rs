//! Test-only generators and independent reference implementations.
#![allow(dead_code)]

use std::collections::BTreeMap;

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tlmac_core::layer::{ActTensor, AssignmentMatrix, OutTensor, QuantLayer};
use tlmac_core::place::PlacementPlan;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random layer with weights uniform over the signed range.
pub fn random_layer(
    rng: &mut ChaCha8Rng,
    weight_bits: u32,
    act_bits: u32,
    out_channels: usize,
    in_channels: usize,
    kernel: usize,
) -> QuantLayer {
    let hi = (1i32 << (weight_bits - 1)) - 1;
    let lo = -(1i32 << (weight_bits - 1));
    let n = out_channels * in_channels * kernel * kernel;
    let weights = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
    QuantLayer::new("rand", weight_bits, act_bits, None, out_channels, in_channels, kernel, weights)
        .unwrap()
}

/// Layer whose weights come from a small palette of kernel rows, as in
/// trained low-bit networks.
pub fn redundant_layer(
    rng: &mut ChaCha8Rng,
    weight_bits: u32,
    act_bits: u32,
    out_channels: usize,
    in_channels: usize,
    kernel: usize,
    palette: usize,
) -> QuantLayer {
    let hi = (1i32 << (weight_bits - 1)) - 1;
    let lo = -(1i32 << (weight_bits - 1));
    let rows: Vec<Vec<i32>> = (0..palette)
        .map(|_| (0..kernel).map(|_| rng.random_range(lo..=hi)).collect())
        .collect();
    let mut weights = Vec::new();
    for _ in 0..out_channels * in_channels * kernel {
        weights.extend_from_slice(&rows[rng.random_range(0..palette)]);
    }
    QuantLayer::new("pal", weight_bits, act_bits, None, out_channels, in_channels, kernel, weights)
        .unwrap()
}

pub fn random_input(rng: &mut ChaCha8Rng, channels: usize, h: usize, w: usize, act_bits: u32) -> ActTensor {
    let values = (0..channels * h * w)
        .map(|_| rng.random_range(0..(1u32 << act_bits)))
        .collect();
    ActTensor::new(channels, h, w, act_bits, values).unwrap()
}

/// Convolution through an explicit im2col matrix and a matrix product,
/// with the loop order of a GEMM rather than a direct convolution.
pub fn im2col_conv(layer: &QuantLayer, input: &ActTensor, stride: usize, pad: usize) -> OutTensor {
    let k = layer.kernel;
    let h_out = (input.height + 2 * pad - k) / stride + 1;
    let w_out = (input.width + 2 * pad - k) / stride + 1;
    let cols = h_out * w_out;
    let rows = layer.in_channels * k * k;
    let mut patches = vec![0i64; rows * cols];
    for i in 0..layer.in_channels {
        for r in 0..k {
            for c in 0..k {
                let row = (i * k + r) * k + c;
                for oy in 0..h_out {
                    for ox in 0..w_out {
                        let y = (oy * stride + r) as isize - pad as isize;
                        let x = (ox * stride + c) as isize - pad as isize;
                        if y >= 0 && x >= 0 && (y as usize) < input.height && (x as usize) < input.width {
                            patches[row * cols + oy * w_out + ox] = input.get(i, y as usize, x as usize) as i64;
                        }
                    }
                }
            }
        }
    }
    let mut out = OutTensor::zeros(layer.out_channels, h_out, w_out, layer.psum_bits);
    for (row, chunk) in patches.chunks(cols).enumerate() {
        for o in 0..layer.out_channels {
            let w = layer.weights[o * rows + row] as i64;
            if w == 0 {
                continue;
            }
            for (j, &a) in chunk.iter().enumerate() {
                out.values[o * cols + j] += w * a;
            }
        }
    }
    out
}

/// Smallest achievable `max_c |union(c)|` over every labelling of the rows
/// into at most `n_clus` clusters.
pub fn brute_force_min_arrays(c: &AssignmentMatrix, n_clus: usize) -> usize {
    let d_s = c.n_rows();
    let mut labels = vec![0usize; d_s];
    let mut best = usize::MAX;
    loop {
        let mut unions = vec![FixedBitSet::with_capacity(c.n_cols()); n_clus];
        for (t, &l) in labels.iter().enumerate() {
            unions[l].union_with(c.row(t));
        }
        best = best.min(unions.iter().map(|u| u.count_ones(..)).max().unwrap_or(0));
        // Next labelling in base n_clus.
        let mut t = 0;
        loop {
            if t == d_s {
                return best;
            }
            labels[t] += 1;
            if labels[t] < n_clus {
                break;
            }
            labels[t] = 0;
            t += 1;
        }
    }
}

/// Steps drawn alternately from two disjoint pools of groups.
pub fn two_pool_matrix(rng: &mut ChaCha8Rng, d_s: usize, pool: usize, per_step: usize) -> AssignmentMatrix {
    let sets: Vec<Vec<usize>> = (0..d_s)
        .map(|t| {
            let base = if t % 2 == 0 { 0 } else { pool };
            let mut picked: Vec<usize> = (0..pool).collect();
            for i in 0..per_step {
                let j = rng.random_range(i..pool);
                picked.swap(i, j);
            }
            picked[..per_step].iter().map(|g| base + g).collect()
        })
        .collect();
    AssignmentMatrix::from_sets(2 * pool, sets)
}

/// Random placement of shape `[n_arr][n_clus]` where every cluster holds
/// `fill` groups feeding random outputs.
pub fn random_placement(rng: &mut ChaCha8Rng, n_arr: usize, n_clus: usize, d_p: usize, fill: usize) -> PlacementPlan {
    let mut usage = Vec::new();
    let mut next = 0;
    for _ in 0..n_clus {
        let mut m = BTreeMap::new();
        for _ in 0..fill {
            let mut outs = FixedBitSet::with_capacity(d_p);
            for p in 0..d_p {
                if rng.random_bool(0.3) {
                    outs.insert(p);
                }
            }
            m.insert(next, outs);
            next += 1;
        }
        usage.push(m);
    }
    tlmac_core::place::place_usage(n_arr, d_p, usage, rng.random()).unwrap()
}

/// Route count by enumerating the dense tensor entry by entry.
pub fn recount_routes(plan: &PlacementPlan) -> usize {
    let r = plan.routing_matrix();
    let mut n = 0;
    for e in 0..r.n_arr {
        for p in 0..r.d_p {
            let mut any = false;
            for c in 0..r.n_clus {
                any |= r.get(e, c, p);
            }
            n += any as usize;
        }
    }
    n
}
