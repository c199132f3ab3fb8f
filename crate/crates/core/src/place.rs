//! Placement of clustered weight groups onto LUT array slots.

use std::collections::BTreeMap;

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cluster::ClusterPlan;
use crate::error::{Error, Result};
use crate::layer::GroupedWeights;

/// Which LUT array holds each (cluster, group) pair, plus the set of
/// outputs every stored group feeds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacementPlan {
    n_arr: usize,
    n_clus: usize,
    d_p: usize,
    /// Row-major `[N_arr][N_clus]`.
    occupancy: Vec<Option<usize>>,
    /// Per cluster: group -> outputs that read it in some step of the cluster.
    usage: Vec<BTreeMap<usize, FixedBitSet>>,
}

/// Binary `[N_arr][N_clus][D_p]` tensor marking array/cluster/output wires.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingMatrix {
    pub n_arr: usize,
    pub n_clus: usize,
    pub d_p: usize,
    bits: FixedBitSet,
}

impl RoutingMatrix {
    pub fn zeros(n_arr: usize, n_clus: usize, d_p: usize) -> Self {
        Self {
            n_arr,
            n_clus,
            d_p,
            bits: FixedBitSet::with_capacity(n_arr * n_clus * d_p),
        }
    }

    #[inline]
    fn offset(&self, e: usize, c: usize, p: usize) -> usize {
        (e * self.n_clus + c) * self.d_p + p
    }

    pub fn get(&self, e: usize, c: usize, p: usize) -> bool {
        self.bits.contains(self.offset(e, c, p))
    }

    pub fn set(&mut self, e: usize, c: usize, p: usize, value: bool) {
        let off = self.offset(e, c, p);
        self.bits.set(off, value);
    }
}

/// Number of array-to-switch wires: pairs `(e, p)` connected through any
/// cluster.
pub fn count_routes(r: &RoutingMatrix) -> usize {
    let mut routes = 0;
    for e in 0..r.n_arr {
        for p in 0..r.d_p {
            if (0..r.n_clus).any(|c| r.get(e, c, p)) {
                routes += 1;
            }
        }
    }
    routes
}

impl PlacementPlan {
    /// An empty placement over `usage`, one map of group -> outputs per
    /// cluster.
    pub fn empty(n_arr: usize, d_p: usize, usage: Vec<BTreeMap<usize, FixedBitSet>>) -> Self {
        let n_clus = usage.len();
        Self {
            n_arr,
            n_clus,
            d_p,
            occupancy: vec![None; n_arr * n_clus],
            usage,
        }
    }

    /// Group usage per cluster as seen by a layer.
    pub fn usage_from(cp: &ClusterPlan, gw: &GroupedWeights) -> Vec<BTreeMap<usize, FixedBitSet>> {
        let mut usage: Vec<BTreeMap<usize, FixedBitSet>> = vec![BTreeMap::new(); cp.n_clus];
        for (t, &c) in cp.labels.iter().enumerate() {
            for p in 0..gw.d_p {
                usage[c]
                    .entry(gw.index(t, p))
                    .or_insert_with(|| FixedBitSet::with_capacity(gw.d_p))
                    .insert(p);
            }
        }
        usage
    }

    pub fn n_arr(&self) -> usize {
        self.n_arr
    }

    pub fn n_clus(&self) -> usize {
        self.n_clus
    }

    pub fn d_p(&self) -> usize {
        self.d_p
    }

    #[inline]
    pub fn slot(&self, e: usize, c: usize) -> Option<usize> {
        self.occupancy[e * self.n_clus + c]
    }

    pub fn occupancy(&self) -> &[Option<usize>] {
        &self.occupancy
    }

    /// Places group `u` at `(e, c)`, returning the previous occupant.
    pub fn assign(&mut self, e: usize, c: usize, u: Option<usize>) -> Option<usize> {
        std::mem::replace(&mut self.occupancy[e * self.n_clus + c], u)
    }

    pub fn usage(&self, c: usize) -> &BTreeMap<usize, FixedBitSet> {
        &self.usage[c]
    }

    /// Outputs fed by whatever sits at `(e, c)`.
    pub fn outputs_at(&self, e: usize, c: usize) -> Option<&FixedBitSet> {
        self.slot(e, c).and_then(|u| self.usage[c].get(&u))
    }

    /// LUT array holding group `u` under cluster index `c`.
    pub fn location(&self, c: usize, u: usize) -> Option<usize> {
        (0..self.n_arr).find(|&e| self.slot(e, c) == Some(u))
    }

    /// Exchanges the cluster-`c` slots of arrays `e0` and `e1`.
    pub fn swap(&mut self, c: usize, e0: usize, e1: usize) {
        self.occupancy.swap(e0 * self.n_clus + c, e1 * self.n_clus + c);
    }

    pub fn routing_matrix(&self) -> RoutingMatrix {
        let mut r = RoutingMatrix::zeros(self.n_arr, self.n_clus, self.d_p);
        for e in 0..self.n_arr {
            for c in 0..self.n_clus {
                if let Some(outs) = self.outputs_at(e, c) {
                    for p in outs.ones() {
                        r.set(e, c, p, true);
                    }
                }
            }
        }
        r
    }

    pub fn routes(&self) -> usize {
        count_routes(&self.routing_matrix())
    }

    /// Every group of every cluster sits in exactly one array of its column
    /// and nothing else does.
    pub fn check(&self) -> Result<()> {
        for c in 0..self.n_clus {
            let mut placed = BTreeMap::new();
            for e in 0..self.n_arr {
                if let Some(u) = self.slot(e, c) {
                    if !self.usage[c].contains_key(&u) {
                        return Err(Error::Infeasible(format!(
                            "array {e} stores group {u} not used by cluster {c}"
                        )));
                    }
                    if let Some(prev) = placed.insert(u, e) {
                        return Err(Error::Infeasible(format!(
                            "group {u} of cluster {c} stored in arrays {prev} and {e}"
                        )));
                    }
                }
            }
            if let Some(u) = self.usage[c].keys().find(|u| !placed.contains_key(u)) {
                return Err(Error::Infeasible(format!("group {u} of cluster {c} is not placed")));
            }
        }
        Ok(())
    }
}

/// Random initial placement: each group of a cluster takes a uniformly
/// chosen free array in that cluster's column.
pub fn place_groups(cp: &ClusterPlan, gw: &GroupedWeights, seed: u64) -> Result<PlacementPlan> {
    let usage = PlacementPlan::usage_from(cp, gw);
    place_usage(cp.n_arr, gw.d_p, usage, seed)
}

/// [`place_groups`] over an explicit usage map.
pub fn place_usage(
    n_arr: usize,
    d_p: usize,
    usage: Vec<BTreeMap<usize, FixedBitSet>>,
    seed: u64,
) -> Result<PlacementPlan> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut plan = PlacementPlan::empty(n_arr, d_p, usage);
    for c in 0..plan.n_clus {
        let groups: Vec<usize> = plan.usage[c].keys().copied().collect();
        if groups.len() > n_arr {
            return Err(Error::Internal(format!(
                "cluster {c} has {} groups but N_arr is {n_arr}",
                groups.len()
            )));
        }
        let mut free: Vec<usize> = (0..n_arr).collect();
        for u in groups {
            let pick = rng.random_range(0..free.len());
            let e = free.remove(pick);
            plan.assign(e, c, Some(u));
        }
    }
    Ok(plan)
}
