//! Quantised layer ingest and the weight-group layout.
//!
//! A convolution weight tensor `[D_o, D_i, D_k, D_k]` is viewed as a grid of
//! weight groups (one kernel row of `D_k` weights each) with a sequential
//! dimension `D_s` and a parallel dimension `D_p`:
//!
//! * step `t = o_tile * D_i + i` (output-tile-major, input-channel-minor)
//! * output `p = o_local * D_k + r` with kernel row `r`
//!
//! where output channel `o = o_tile * P + o_local`. When `D_o` is not a
//! multiple of `P` the last tile is padded with all-zero groups.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::cost::{ceil_log2, LUT_INPUTS};
use crate::error::{Error, Result};

/// Widest supported weight or activation.
pub const MAX_OPERAND_BITS: u32 = 16;
/// Partial sums are held in `i64`.
pub const MAX_PSUM_BITS: u32 = 63;

/// Default parallel channel factor.
pub const DEFAULT_PARALLEL_FACTOR: usize = 64;

/// A quantised convolution layer with signed two's-complement weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantLayer {
    pub name: String,
    pub weight_bits: u32,
    pub act_bits: u32,
    pub psum_bits: u32,
    pub out_channels: usize,
    pub in_channels: usize,
    pub kernel: usize,
    /// Row-major `[o][i][r][c]`.
    pub weights: Vec<i32>,
}

/// Partial-sum width used when a layer file leaves it out: enough headroom
/// for `D_i * D_k^2` products plus one spare bit.
pub fn default_psum_bits(weight_bits: u32, act_bits: u32, in_channels: usize, kernel: usize) -> u32 {
    let terms = (in_channels * kernel * kernel).max(1) as u64;
    weight_bits + act_bits + ceil_log2(terms) + 1
}

fn signed_range(bits: u32) -> (i64, i64) {
    (-(1i64 << (bits - 1)), (1i64 << (bits - 1)) - 1)
}

impl QuantLayer {
    /// Builds a layer and checks every range invariant.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        weight_bits: u32,
        act_bits: u32,
        psum_bits: Option<u32>,
        out_channels: usize,
        in_channels: usize,
        kernel: usize,
        weights: Vec<i32>,
    ) -> Result<Self> {
        let name = name.into();
        for (label, bits) in [("B_w", weight_bits), ("B_a", act_bits)] {
            if !(1..=MAX_OPERAND_BITS).contains(&bits) {
                return Err(Error::Validation(format!(
                    "{name}: {label}={bits} outside [1, {MAX_OPERAND_BITS}]"
                )));
            }
        }
        if out_channels == 0 || in_channels == 0 || kernel == 0 {
            return Err(Error::Validation(format!(
                "{name}: dimensions must be positive (D_o={out_channels}, D_i={in_channels}, D_k={kernel})"
            )));
        }
        if kernel > LUT_INPUTS as usize {
            return Err(Error::Unsupported(format!(
                "{name}: D_k={kernel} exceeds the LUT group limit of {LUT_INPUTS}"
            )));
        }
        let psum_bits = psum_bits
            .unwrap_or_else(|| default_psum_bits(weight_bits, act_bits, in_channels, kernel));
        if psum_bits < weight_bits + act_bits || psum_bits > MAX_PSUM_BITS {
            return Err(Error::Validation(format!(
                "{name}: B_p={psum_bits} must lie in [B_w + B_a = {}, {MAX_PSUM_BITS}]",
                weight_bits + act_bits
            )));
        }
        let expected = out_channels * in_channels * kernel * kernel;
        if weights.len() != expected {
            return Err(Error::parse(
                format!("{name}: weights"),
                format!("expected {expected} values, found {}", weights.len()),
            ));
        }
        let (lo, hi) = signed_range(weight_bits);
        if let Some((idx, &v)) = weights
            .iter()
            .enumerate()
            .find(|(_, &v)| (v as i64) < lo || (v as i64) > hi)
        {
            let (o, rest) = (idx / (in_channels * kernel * kernel), idx % (in_channels * kernel * kernel));
            let (i, rest) = (rest / (kernel * kernel), rest % (kernel * kernel));
            return Err(Error::Validation(format!(
                "{name}: weight {v} at index {idx} [o={o}, i={i}, r={}, c={}] outside signed {weight_bits}-bit range [{lo}, {hi}]",
                rest / kernel,
                rest % kernel
            )));
        }
        Ok(Self {
            name,
            weight_bits,
            act_bits,
            psum_bits,
            out_channels,
            in_channels,
            kernel,
            weights,
        })
    }

    #[inline]
    pub fn weight(&self, o: usize, i: usize, r: usize, c: usize) -> i32 {
        let k = self.kernel;
        self.weights[((o * self.in_channels + i) * k + r) * k + c]
    }

    /// The `D_k` weights of kernel row `r` of filter `(o, i)`.
    pub fn kernel_row(&self, o: usize, i: usize, r: usize) -> &[i32] {
        let k = self.kernel;
        let start = ((o * self.in_channels + i) * k + r) * k;
        &self.weights[start..start + k]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&LayerDoc::from(self)).expect("layer serialises")
    }
}

/// On-disk layer document (`QWeights`).
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDoc {
    name: String,
    #[serde(rename = "B_w")]
    weight_bits: u32,
    #[serde(rename = "B_a")]
    act_bits: u32,
    #[serde(rename = "B_p", default, skip_serializing_if = "Option::is_none")]
    psum_bits: Option<u32>,
    #[serde(rename = "D_o")]
    out_channels: usize,
    #[serde(rename = "D_i")]
    in_channels: usize,
    #[serde(rename = "D_k")]
    kernel: usize,
    weights: Vec<i32>,
}

impl From<&QuantLayer> for LayerDoc {
    fn from(l: &QuantLayer) -> Self {
        Self {
            name: l.name.clone(),
            weight_bits: l.weight_bits,
            act_bits: l.act_bits,
            psum_bits: Some(l.psum_bits),
            out_channels: l.out_channels,
            in_channels: l.in_channels,
            kernel: l.kernel,
            weights: l.weights.clone(),
        }
    }
}

impl LayerDoc {
    fn into_layer(self) -> Result<QuantLayer> {
        QuantLayer::new(
            self.name,
            self.weight_bits,
            self.act_bits,
            self.psum_bits,
            self.out_channels,
            self.in_channels,
            self.kernel,
            self.weights,
        )
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LayerFile {
    One(LayerDoc),
    Many(Vec<LayerDoc>),
}

/// Parses one or more layers from `QWeights` JSON text. A file may hold a
/// single layer object or an array of them.
pub fn parse_layers(text: &str, context: &str) -> Result<Vec<QuantLayer>> {
    // Try the single-layer form first so its error carries line/column.
    let file = match serde_json::from_str::<LayerDoc>(text) {
        Ok(doc) => LayerFile::One(doc),
        Err(single) => match serde_json::from_str::<Vec<LayerDoc>>(text) {
            Ok(docs) => LayerFile::Many(docs),
            Err(_) => return Err(Error::parse(context, single.to_string())),
        },
    };
    match file {
        LayerFile::One(doc) => Ok(vec![doc.into_layer()?]),
        LayerFile::Many(docs) => docs.into_iter().map(LayerDoc::into_layer).collect(),
    }
}

/// Loads a single-layer `QWeights` file. `name` overrides the stored name
/// when non-empty.
pub fn load_layer(path: impl AsRef<Path>, name: &str) -> Result<QuantLayer> {
    let path = path.as_ref();
    let mut layers = load_layers(path)?;
    if layers.len() != 1 {
        return Err(Error::parse(
            path.display().to_string(),
            format!("expected a single layer, found {}", layers.len()),
        ));
    }
    let mut layer = layers.pop().unwrap();
    if !name.is_empty() {
        layer.name = name.to_string();
    }
    Ok(layer)
}

pub fn load_layers(path: impl AsRef<Path>) -> Result<Vec<QuantLayer>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_layers(&text, &path.display().to_string())
}

/// A weight group: one kernel row.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightGroup(pub Vec<i32>);

impl WeightGroup {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    /// Multiply-accumulate against binary activations packed LSB-first.
    pub fn mac_bits(&self, pattern: u32) -> i64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(g, _)| pattern >> g & 1 == 1)
            .map(|(_, &w)| w as i64)
            .sum()
    }

    /// Multiply-accumulate against unsigned activations.
    pub fn mac(&self, acts: &[u32]) -> i64 {
        self.0
            .iter()
            .zip(acts)
            .map(|(&w, &a)| w as i64 * a as i64)
            .sum()
    }
}

impl fmt::Display for WeightGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, w) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{w}")?;
        }
        write!(f, ")")
    }
}

/// Binary step-by-group matrix: row `t` marks the unique groups step `t` uses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentMatrix {
    rows: Vec<FixedBitSet>,
    cols: usize,
}

impl AssignmentMatrix {
    pub fn from_rows(cols: usize, rows: Vec<FixedBitSet>) -> Self {
        debug_assert!(rows.iter().all(|r| r.len() == cols));
        Self { rows, cols }
    }

    /// Builds a matrix from lists of column indices per row.
    pub fn from_sets<I, R>(cols: usize, sets: I) -> Self
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = usize>,
    {
        let rows = sets
            .into_iter()
            .map(|set| {
                let mut row = FixedBitSet::with_capacity(cols);
                for u in set {
                    row.insert(u);
                }
                row
            })
            .collect();
        Self { rows, cols }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, t: usize) -> &FixedBitSet {
        &self.rows[t]
    }

    pub fn rows(&self) -> &[FixedBitSet] {
        &self.rows
    }

    pub fn get(&self, t: usize, u: usize) -> bool {
        self.rows[t].contains(u)
    }

    pub fn row_count(&self, t: usize) -> usize {
        self.rows[t].count_ones(..)
    }
}

/// A layer reshaped into the `[D_s, D_p]` weight-group layout.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedWeights {
    pub layer: QuantLayer,
    pub parallel_factor: usize,
    pub d_p: usize,
    pub d_s: usize,
    /// Unique groups in first-occurrence order.
    pub group_table: Vec<WeightGroup>,
    /// Row-major `[D_s][D_p]` indices into `group_table`.
    pub group_index: Vec<usize>,
    pub assignment: AssignmentMatrix,
}

impl GroupedWeights {
    pub fn group_size(&self) -> usize {
        self.layer.kernel
    }

    pub fn n_uwg(&self) -> usize {
        self.group_table.len()
    }

    #[inline]
    pub fn index(&self, t: usize, p: usize) -> usize {
        self.group_index[t * self.d_p + p]
    }

    pub fn group_at(&self, t: usize, p: usize) -> &WeightGroup {
        &self.group_table[self.index(t, p)]
    }

    pub fn out_tiles(&self) -> usize {
        self.layer.out_channels.div_ceil(self.parallel_factor)
    }

    /// Splits step `t` into `(o_tile, input channel)`.
    pub fn step_coords(&self, t: usize) -> (usize, usize) {
        (t / self.layer.in_channels, t % self.layer.in_channels)
    }

    /// Output channel and kernel row of parallel output `p` at step `t`, or
    /// `None` for padding outputs.
    pub fn output_coords(&self, t: usize, p: usize) -> Option<(usize, usize)> {
        let (tile, _) = self.step_coords(t);
        let k = self.layer.kernel;
        let o = tile * self.parallel_factor + p / k;
        (o < self.layer.out_channels).then_some((o, p % k))
    }

    pub fn is_padding(&self, t: usize, p: usize) -> bool {
        self.output_coords(t, p).is_none()
    }

    /// Distinct groups used by non-padding positions.
    pub fn used_groups(&self) -> FixedBitSet {
        let mut used = FixedBitSet::with_capacity(self.n_uwg());
        for t in 0..self.d_s {
            for p in 0..self.d_p {
                if !self.is_padding(t, p) {
                    used.insert(self.index(t, p));
                }
            }
        }
        used
    }
}

/// Reshapes `[D_o, D_i, D_k, D_k]` into weight groups with `P` output
/// channels in parallel.
pub fn reshape_to_groups(layer: &QuantLayer, parallel_factor: usize) -> Result<GroupedWeights> {
    if parallel_factor == 0 {
        return Err(Error::Validation("parallel factor must be at least 1".into()));
    }
    let k = layer.kernel;
    if k > LUT_INPUTS as usize {
        return Err(Error::Unsupported(format!(
            "D_k={k} exceeds the LUT group limit of {LUT_INPUTS}"
        )));
    }
    let tiles = layer.out_channels.div_ceil(parallel_factor);
    let d_p = parallel_factor * k;
    let d_s = layer.in_channels * tiles;

    let mut lookup: HashMap<WeightGroup, usize> = HashMap::new();
    let mut group_table = Vec::new();
    let mut group_index = Vec::with_capacity(d_s * d_p);
    let zero = WeightGroup(vec![0; k]);

    for tile in 0..tiles {
        for i in 0..layer.in_channels {
            for o_local in 0..parallel_factor {
                let o = tile * parallel_factor + o_local;
                for r in 0..k {
                    let group = if o < layer.out_channels {
                        WeightGroup(layer.kernel_row(o, i, r).to_vec())
                    } else {
                        zero.clone()
                    };
                    let idx = *lookup.entry(group.clone()).or_insert_with(|| {
                        group_table.push(group);
                        group_table.len() - 1
                    });
                    group_index.push(idx);
                }
            }
        }
    }

    let assignment = AssignmentMatrix::from_sets(
        group_table.len(),
        group_index.chunks(d_p).map(|row| row.iter().copied()),
    );

    Ok(GroupedWeights {
        layer: layer.clone(),
        parallel_factor,
        d_p,
        d_s,
        group_table,
        group_index,
        assignment,
    })
}

/// Weight-redundancy figures for one layer. Padding positions are excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct RedundancyStats {
    pub unique_groups: usize,
    /// `2^(B_w * D_k)`, saturated at `u64::MAX`.
    pub theoretical_max: u64,
    pub total_groups: usize,
    /// Unique groups over all group positions.
    pub redundancy_ratio: f64,
    /// Unique groups over the theoretical maximum.
    pub uniqueness_ratio: f64,
}

pub fn theoretical_max_groups(weight_bits: u32, kernel: usize) -> u64 {
    let exp = weight_bits as u64 * kernel as u64;
    if exp >= 64 {
        u64::MAX
    } else {
        1u64 << exp
    }
}

pub fn redundancy_stats(gw: &GroupedWeights) -> RedundancyStats {
    let unique_groups = gw.used_groups().count_ones(..);
    let theoretical_max = theoretical_max_groups(gw.layer.weight_bits, gw.layer.kernel);
    let total_groups = gw.layer.out_channels * gw.layer.in_channels * gw.layer.kernel;
    RedundancyStats {
        unique_groups,
        theoretical_max,
        total_groups,
        redundancy_ratio: unique_groups as f64 / total_groups as f64,
        uniqueness_ratio: unique_groups as f64 / theoretical_max as f64,
    }
}

/// Unsigned activation tensor `[D_i, H, W]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActTensor {
    #[serde(rename = "D_i")]
    pub channels: usize,
    #[serde(rename = "H")]
    pub height: usize,
    #[serde(rename = "W")]
    pub width: usize,
    #[serde(rename = "B_a")]
    pub act_bits: u32,
    pub values: Vec<u32>,
}

impl ActTensor {
    pub fn new(
        channels: usize,
        height: usize,
        width: usize,
        act_bits: u32,
        values: Vec<u32>,
    ) -> Result<Self> {
        let t = Self {
            channels,
            height,
            width,
            act_bits,
            values,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn zeros(channels: usize, height: usize, width: usize, act_bits: u32) -> Self {
        Self {
            channels,
            height,
            width,
            act_bits,
            values: vec![0; channels * height * width],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_OPERAND_BITS).contains(&self.act_bits) {
            return Err(Error::Validation(format!(
                "activation B_a={} outside [1, {MAX_OPERAND_BITS}]",
                self.act_bits
            )));
        }
        let expected = self.channels * self.height * self.width;
        if self.values.len() != expected {
            return Err(Error::parse(
                "activations: values",
                format!("expected {expected} values, found {}", self.values.len()),
            ));
        }
        let limit = 1u64 << self.act_bits;
        if let Some((idx, v)) = self
            .values
            .iter()
            .enumerate()
            .find(|(_, &v)| v as u64 >= limit)
        {
            return Err(Error::Validation(format!(
                "activation {v} at index {idx} does not fit in {} bits",
                self.act_bits
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> u32 {
        self.values[(c * self.height + y) * self.width + x]
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let t: Self = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        t.validate()?;
        Ok(t)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tensor serialises")
    }
}

/// Signed partial-sum tensor `[D_o, H, W]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutTensor {
    #[serde(rename = "D_o")]
    pub channels: usize,
    #[serde(rename = "H")]
    pub height: usize,
    #[serde(rename = "W")]
    pub width: usize,
    #[serde(rename = "B_p")]
    pub psum_bits: u32,
    pub values: Vec<i64>,
}

impl OutTensor {
    pub fn zeros(channels: usize, height: usize, width: usize, psum_bits: u32) -> Self {
        Self {
            channels,
            height,
            width,
            psum_bits,
            values: vec![0; channels * height * width],
        }
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> i64 {
        self.values[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn get_mut(&mut self, c: usize, y: usize, x: usize) -> &mut i64 {
        &mut self.values[(c * self.height + y) * self.width + x]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tensor serialises")
    }

    /// First coordinate `(c, y, x)` where the tensors differ.
    pub fn first_mismatch(&self, other: &OutTensor) -> Option<(usize, usize, usize)> {
        if (self.channels, self.height, self.width) != (other.channels, other.height, other.width) {
            return Some((0, 0, 0));
        }
        let idx = self
            .values
            .iter()
            .zip(&other.values)
            .position(|(a, b)| a != b)?;
        let plane = self.height * self.width;
        Some((idx / plane, idx % plane / self.width, idx % self.width))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer_json(b_w: u32, weights: &[i32], d_o: usize, d_i: usize, d_k: usize) -> String {
        format!(
            r#"{{"name":"t","B_w":{b_w},"B_a":2,"B_p":16,"D_o":{d_o},"D_i":{d_i},"D_k":{d_k},"weights":{weights:?}}}"#
        )
    }

    #[test]
    fn out_of_range_weight_is_rejected() {
        let err = parse_layers(&layer_json(2, &[3], 1, 1, 1), "t").unwrap_err();
        match err {
            Error::Validation(msg) => assert!(msg.contains("index 0"), "{msg}"),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn loads_declared_shape() {
        let w: Vec<i32> = (0..72).map(|v| v % 3 - 1).collect();
        let layers = parse_layers(&layer_json(2, &w, 4, 2, 3), "t").unwrap();
        let l = &layers[0];
        assert_eq!((l.out_channels, l.in_channels, l.kernel), (4, 2, 3));
        assert_eq!(l.weights.len(), 72);
    }

    #[test]
    fn short_weight_list_reports_count() {
        let w = vec![0; 71];
        let err = parse_layers(&layer_json(2, &w, 4, 2, 3), "t").unwrap_err();
        assert!(err.to_string().contains("expected 72 values"), "{err}");
    }

    #[test]
    fn malformed_json_has_line_context() {
        let err = parse_layers("{\n\"name\": \"x\",\n\"B_w\": \"two\"}", "f.json").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("f.json") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn missing_psum_bits_uses_default() {
        let text = r#"{"name":"t","B_w":3,"B_a":2,"D_o":1,"D_i":2,"D_k":3,"weights":[0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0]}"#;
        let l = &parse_layers(text, "t").unwrap()[0];
        // 3 + 2 + ceil(log2 18) + 1
        assert_eq!(l.psum_bits, 11);
    }

    #[test]
    fn array_of_layers() {
        let one = layer_json(2, &[1], 1, 1, 1);
        let text = format!("[{one},{one}]");
        assert_eq!(parse_layers(&text, "t").unwrap().len(), 2);
    }

    #[test]
    fn kernel_above_six_unsupported() {
        let r = QuantLayer::new("x", 2, 2, None, 1, 1, 7, vec![0; 49]);
        assert!(matches!(r, Err(Error::Unsupported(_))));
    }

    #[test]
    fn reshape_small_dims() {
        let l = QuantLayer::new("x", 2, 2, None, 4, 2, 3, vec![0; 72]).unwrap();
        let gw = reshape_to_groups(&l, 2).unwrap();
        assert_eq!((gw.d_p, gw.d_s), (6, 4));
    }

    #[test]
    fn reshape_all_zero_is_fully_redundant() {
        let l = QuantLayer::new("x", 2, 2, None, 4, 2, 3, vec![0; 72]).unwrap();
        let gw = reshape_to_groups(&l, 2).unwrap();
        assert_eq!(gw.group_table, vec![WeightGroup(vec![0, 0, 0])]);
        for t in 0..gw.d_s {
            assert_eq!(gw.assignment.row_count(t), 1);
            assert!(gw.assignment.get(t, 0));
        }
    }

    #[test]
    fn reshape_large_block_dims() {
        let l = QuantLayer::new("x", 1, 1, None, 512, 512, 3, vec![0; 512 * 512 * 9]).unwrap();
        let gw = reshape_to_groups(&l, 64).unwrap();
        assert_eq!((gw.d_s, gw.d_p), (4096, 192));
    }

    #[test]
    fn padding_tile_marked() {
        let w: Vec<i32> = (0..3 * 2 * 9).map(|v| (v % 3) - 1).collect();
        let l = QuantLayer::new("x", 2, 2, None, 3, 2, 3, w).unwrap();
        let gw = reshape_to_groups(&l, 2).unwrap();
        assert_eq!(gw.d_s, 4);
        // Tile 1 holds o=2 at o_local 0 and padding at o_local 1.
        assert!(!gw.is_padding(2, 2));
        assert!(gw.is_padding(2, 3));
        assert!(gw.group_at(3, 5).is_zero());
    }

    #[test]
    fn theoretical_maxima() {
        assert_eq!(theoretical_max_groups(2, 3), 64);
        assert_eq!(theoretical_max_groups(3, 3), 512);
    }

    #[test]
    fn act_tensor_range_checked() {
        assert!(ActTensor::new(1, 1, 2, 2, vec![3, 4]).is_err());
        assert!(ActTensor::new(1, 1, 2, 2, vec![3, 0]).is_ok());
    }
}
