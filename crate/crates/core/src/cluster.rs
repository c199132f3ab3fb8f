//! Partitioning of the sequential dimension into clusters.
//!
//! All steps of one cluster share a LUT select index, so the groups they use
//! are stored once per cluster. The number of LUT arrays a layer needs is the
//! size of its largest cluster union.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::layer::AssignmentMatrix;

pub const DEFAULT_NEIGHBOURS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterPlan {
    /// Cluster id of every step. Doubles as the step-to-select mapping
    /// memory.
    pub labels: Vec<usize>,
    /// Per cluster, the sorted union of groups its steps use.
    pub members: Vec<Vec<usize>>,
    pub n_clus: usize,
    pub n_arr: usize,
}

impl ClusterPlan {
    /// Derives cluster members and `N_arr` from a step labelling.
    pub fn from_labels(c: &AssignmentMatrix, n_clus: usize, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != c.n_rows() {
            return Err(Error::Internal(format!(
                "{} labels for {} steps",
                labels.len(),
                c.n_rows()
            )));
        }
        let mut unions = vec![FixedBitSet::with_capacity(c.n_cols()); n_clus];
        for (t, &l) in labels.iter().enumerate() {
            if l >= n_clus {
                return Err(Error::Internal(format!(
                    "step {t} labelled {l}, only {n_clus} clusters"
                )));
            }
            unions[l].union_with(c.row(t));
        }
        let members: Vec<Vec<usize>> = unions.iter().map(|u| u.ones().collect()).collect();
        let n_arr = members.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Self {
            labels,
            members,
            n_clus,
            n_arr,
        })
    }

    pub fn step_select_memory(&self) -> &[usize] {
        &self.labels
    }

    pub fn used_clusters(&self) -> usize {
        let mut seen = vec![false; self.n_clus];
        self.labels.iter().for_each(|&l| seen[l] = true);
        seen.into_iter().filter(|&s| s).count()
    }

    /// Checks that every group of every step is stored in that step's cluster
    /// and that `N_arr` is the largest cluster union.
    pub fn check(&self, c: &AssignmentMatrix) -> Result<()> {
        if self.members.len() != self.n_clus {
            return Err(Error::Internal("member list length differs from N_clus".into()));
        }
        for (t, &l) in self.labels.iter().enumerate() {
            if l >= self.n_clus {
                return Err(Error::Infeasible(format!("step {t} has label {l} >= {}", self.n_clus)));
            }
            for u in c.row(t).ones() {
                if self.members[l].binary_search(&u).is_err() {
                    return Err(Error::Infeasible(format!(
                        "group {u} of step {t} missing from cluster {l}"
                    )));
                }
            }
        }
        let max = self.members.iter().map(Vec::len).max().unwrap_or(0);
        if max != self.n_arr {
            return Err(Error::Infeasible(format!("N_arr {} but largest cluster {max}", self.n_arr)));
        }
        Ok(())
    }
}

/// Largest number of groups any single step uses. No partition can need
/// fewer LUT arrays.
pub fn lower_bound_arrays(c: &AssignmentMatrix) -> usize {
    (0..c.n_rows()).map(|t| c.row_count(t)).max().unwrap_or(0)
}

/// Contiguous, balanced chunks of steps. Used as the comparison baseline.
pub fn baseline_chunk_cluster(c: &AssignmentMatrix, n_clus: usize) -> Result<ClusterPlan> {
    if n_clus == 0 {
        return Err(Error::Validation("N_clus must be at least 1".into()));
    }
    let d_s = c.n_rows();
    let labels = (0..d_s).map(|t| t * n_clus / d_s.max(1)).collect();
    ClusterPlan::from_labels(c, n_clus, labels)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    /// Nearest neighbours per sample in the affinity graph.
    pub neighbours: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            neighbours: DEFAULT_NEIGHBOURS,
        }
    }
}

/// Spectral clustering of steps with ClusterQR label assignment.
///
/// Identical steps always share a label: clustering runs on the distinct
/// rows of `c`. When there are no more distinct rows than clusters each
/// gets its own cluster, and when `D_s <= N_clus` the identity partition is
/// returned.
pub fn spectral_cluster(c: &AssignmentMatrix, n_clus: usize, opts: &SpectralOptions) -> Result<ClusterPlan> {
    if n_clus == 0 {
        return Err(Error::Validation("N_clus must be at least 1".into()));
    }
    let d_s = c.n_rows();
    if d_s <= n_clus {
        return ClusterPlan::from_labels(c, n_clus, (0..d_s).collect());
    }

    let mut distinct: Vec<&FixedBitSet> = Vec::new();
    let mut seen: HashMap<&FixedBitSet, usize> = HashMap::new();
    let rep: Vec<usize> = c
        .rows()
        .iter()
        .map(|row| {
            *seen.entry(row).or_insert_with(|| {
                distinct.push(row);
                distinct.len() - 1
            })
        })
        .collect();

    let distinct_labels = if distinct.len() <= n_clus {
        (0..distinct.len()).collect()
    } else {
        let affinity = knn_affinity(&distinct, opts.neighbours);
        let embedding = spectral_embedding(&affinity, n_clus);
        cluster_qr(&embedding)
    };
    let labels = rep.iter().map(|&r| distinct_labels[r]).collect();
    ClusterPlan::from_labels(c, n_clus, labels)
}

/// Symmetrised k-nearest-neighbour affinity with a heat-kernel weight on the
/// Hamming distance. Ties in distance go to the lower row index.
fn knn_affinity(rows: &[&FixedBitSet], neighbours: usize) -> DMatrix<f64> {
    let m = rows.len();
    let k = neighbours.clamp(1, m - 1);

    let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(m * k);
    let mut dist: Vec<(usize, usize)> = Vec::with_capacity(m);
    for i in 0..m {
        dist.clear();
        dist.extend(
            (0..m)
                .filter(|&j| j != i)
                .map(|j| (rows[i].symmetric_difference_count(rows[j]), j)),
        );
        dist.select_nth_unstable(k - 1);
        dist[..k].sort_unstable();
        edges.extend(dist[..k].iter().map(|&(d, j)| (i, j, d as f64)));
    }

    // Squared Euclidean distance between binary rows equals Hamming distance.
    let scale = edges.iter().map(|e| e.2).sum::<f64>() / edges.len() as f64;
    let scale = if scale > 0.0 { scale } else { 1.0 };

    let mut w = DMatrix::<f64>::zeros(m, m);
    for &(i, j, d2) in &edges {
        let a = 0.5 * (-d2 / (2.0 * scale)).exp();
        w[(i, j)] += a;
        w[(j, i)] += a;
    }
    w
}

/// Eigenvectors of the `dims` smallest eigenvalues of the symmetric
/// normalised Laplacian, rescaled by `D^{-1/2}` and sign-normalised.
fn spectral_embedding(w: &DMatrix<f64>, dims: usize) -> DMatrix<f64> {
    let m = w.nrows();
    let inv_sqrt: Vec<f64> = (0..m)
        .map(|i| {
            let d = w.row(i).sum();
            if d > 0.0 {
                d.sqrt().recip()
            } else {
                0.0
            }
        })
        .collect();

    // The smallest eigenvalues of I - D^-1/2 W D^-1/2 are the largest of the
    // normalised adjacency.
    let mut norm_adj = w.clone();
    for i in 0..m {
        for j in 0..m {
            norm_adj[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let eig = norm_adj.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut emb = DMatrix::<f64>::zeros(m, dims);
    for (col, &src) in order.iter().take(dims).enumerate() {
        let v = eig.eigenvectors.column(src);
        let mut pivot = 0;
        for i in 1..m {
            if v[i].abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..m {
            emb[(i, col)] = sign * v[i] * inv_sqrt[i];
        }
    }
    emb
}

/// ClusterQR: pick `k` pivot rows by column-pivoted QR of the transposed
/// embedding, align the embedding to them with the polar factor of the pivot
/// block, and label each row by its largest absolute coordinate.
fn cluster_qr(emb: &DMatrix<f64>) -> Vec<usize> {
    let (m, k) = emb.shape();
    let pivots = pivoted_rows(emb, k);

    let block = DMatrix::from_fn(k, k, |r, c| emb[(pivots[r], c)]);
    let svd = block.transpose().svd(true, true);
    let rotation = svd.u.expect("svd u") * svd.v_t.expect("svd v_t");
    let rotated = emb * rotation;

    (0..m)
        .map(|i| {
            let row = rotated.row(i);
            let mut best = 0;
            for c in 1..k {
                // Strict comparison keeps the lowest index on ties.
                if row[c].abs() > row[best].abs() {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Greedy column pivoting (Businger-Golub) over the rows of `emb`.
fn pivoted_rows(emb: &DMatrix<f64>, k: usize) -> Vec<usize> {
    let m = emb.nrows();
    let mut residual = emb.clone();
    let mut norms: Vec<f64> = (0..m).map(|i| residual.row(i).norm_squared()).collect();
    let mut taken = vec![false; m];
    let mut pivots = Vec::with_capacity(k);

    for _ in 0..k {
        let mut best: Option<usize> = None;
        for i in 0..m {
            if !taken[i] && best.is_none_or(|b| norms[i] > norms[b]) {
                best = Some(i);
            }
        }
        let Some(p) = best else { break };
        taken[p] = true;
        pivots.push(p);
        let norm = norms[p].sqrt();
        if norm <= f64::EPSILON {
            continue;
        }
        let q = residual.row(p).transpose() / norm;
        for i in 0..m {
            if taken[i] {
                continue;
            }
            let proj = residual.row(i).dot(&q.transpose());
            for c in 0..residual.ncols() {
                residual[(i, c)] -= proj * q[c];
            }
            norms[i] = residual.row(i).norm_squared();
        }
    }
    pivots
}
