//! Routing reduction by simulated annealing over group placements.
//!
//! A move picks a cluster `c` and two arrays `e0`, `e1` and exchanges their
//! cluster-`c` slots (either may be vacant). The energy is the number of
//! array-to-switch wires. Candidates are judged against the best energy seen
//! so far:
//!
//! ```text
//! accept  iff  R_new < R_best  or  U(0,1) < exp((R_best - R_new - 1) / T)
//! T = I / (i + 1)^alpha
//! ```
//!
//! A textbook Metropolis rule against the current energy is available through
//! [`AcceptanceRule::Metropolis`].

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::place::PlacementPlan;

pub use crate::place::{count_routes, RoutingMatrix};

pub const DEFAULT_ALPHA: f64 = 1.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AcceptanceRule {
    /// Compare against the best energy, with the `-1` offset in the exponent.
    #[default]
    BestEnergy,
    /// Compare against the current energy: `exp((R_cur - R_new) / T)`.
    Metropolis,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealConfig {
    pub iterations: u64,
    /// Cooling exponent.
    pub alpha: f64,
    pub seed: u64,
    pub rule: AcceptanceRule,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self {
            iterations: 0,
            alpha: DEFAULT_ALPHA,
            seed: 0,
            rule: AcceptanceRule::BestEnergy,
        }
    }
}

impl AnnealConfig {
    pub fn temperature(&self, i: u64) -> f64 {
        self.iterations as f64 / ((i + 1) as f64).powf(self.alpha)
    }
}

/// Iteration budget proportional to the initial wire count.
pub fn iteration_budget(initial_routes: usize, per_route: u64) -> u64 {
    initial_routes as u64 * per_route
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnealTrace {
    /// `(iteration, best route count)`; iteration 0 is the initial placement.
    pub samples: Vec<(u64, usize)>,
    pub initial: usize,
    pub final_routes: usize,
}

/// Incremental annealing state. Route counts are updated per swap in
/// `O(D_p)` from per-(array, output) cluster counts.
pub struct Annealer {
    plan: PlacementPlan,
    cfg: AnnealConfig,
    rng: ChaCha8Rng,
    /// `[N_arr][D_p]`: clusters of array `e` whose group feeds output `p`.
    fanin: Vec<u32>,
    routes: usize,
    best: usize,
    best_occupancy: Vec<Option<usize>>,
    iter: u64,
    sample_every: u64,
    trace: AnnealTrace,
}

impl Annealer {
    pub fn new(plan: PlacementPlan, cfg: AnnealConfig) -> Self {
        assert!(cfg.alpha > 0.0, "cooling exponent must be positive");
        let d_p = plan.d_p();
        let mut fanin = vec![0u32; plan.n_arr() * d_p];
        for e in 0..plan.n_arr() {
            for c in 0..plan.n_clus() {
                if let Some(outs) = plan.outputs_at(e, c) {
                    outs.ones().for_each(|p| fanin[e * d_p + p] += 1);
                }
            }
        }
        let routes = fanin.iter().filter(|&&n| n > 0).count();
        Self {
            best_occupancy: plan.occupancy().to_vec(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            fanin,
            routes,
            best: routes,
            iter: 0,
            sample_every: (cfg.iterations / 256).max(1),
            trace: AnnealTrace {
                samples: vec![(0, routes)],
                initial: routes,
                final_routes: routes,
            },
            plan,
            cfg,
        }
    }

    pub fn plan(&self) -> &PlacementPlan {
        &self.plan
    }

    pub fn routes(&self) -> usize {
        self.routes
    }

    pub fn best_routes(&self) -> usize {
        self.best
    }

    pub fn iteration(&self) -> u64 {
        self.iter
    }

    pub fn is_done(&self) -> bool {
        self.iter >= self.cfg.iterations || self.plan.n_arr() == 0 || self.plan.n_clus() == 0
    }

    fn move_slot(&mut self, from: Option<usize>, e_out: usize, e_in: usize, c: usize) {
        let Some(u) = from else { return };
        let d_p = self.plan.d_p();
        let outs = &self.plan.usage(c)[&u];
        for p in outs.ones() {
            let src = &mut self.fanin[e_out * d_p + p];
            *src -= 1;
            if *src == 0 {
                self.routes -= 1;
            }
            let dst = &mut self.fanin[e_in * d_p + p];
            *dst += 1;
            if *dst == 1 {
                self.routes += 1;
            }
        }
    }

    /// Applies the swap and returns the new route count.
    fn swap(&mut self, c: usize, e0: usize, e1: usize) -> usize {
        if e0 != e1 {
            let g0 = self.plan.slot(e0, c);
            let g1 = self.plan.slot(e1, c);
            self.move_slot(g0, e0, e1, c);
            self.move_slot(g1, e1, e0, c);
            self.plan.swap(c, e0, e1);
        }
        self.routes
    }

    /// Runs one iteration. Returns whether the candidate was accepted.
    pub fn step(&mut self) -> bool {
        if self.is_done() {
            return false;
        }
        self.iter += 1;
        let i = self.iter;
        let temp = self.cfg.temperature(i);
        let c = self.rng.random_range(0..self.plan.n_clus());
        let e0 = self.rng.random_range(0..self.plan.n_arr());
        let e1 = self.rng.random_range(0..self.plan.n_arr());
        let draw: f64 = self.rng.random();

        let current = self.routes;
        let candidate = self.swap(c, e0, e1) as f64;
        let accept = match self.cfg.rule {
            AcceptanceRule::BestEnergy => {
                let best = self.best as f64;
                candidate < best || draw < ((best - candidate - 1.0) / temp).exp()
            }
            AcceptanceRule::Metropolis => {
                let cur = current as f64;
                candidate < cur || draw < ((cur - candidate) / temp).exp()
            }
        };
        if !accept {
            self.swap(c, e0, e1);
        } else if self.routes < self.best {
            self.best = self.routes;
            self.best_occupancy.copy_from_slice(self.plan.occupancy());
            self.trace.samples.push((i, self.best));
        }
        if (i.is_multiple_of(self.sample_every) || i == self.cfg.iterations)
            && self.trace.samples.last().map(|s| s.0) != Some(i)
        {
            self.trace.samples.push((i, self.best));
        }
        accept
    }

    /// Runs the remaining iterations and returns the best placement found.
    pub fn run(mut self) -> (PlacementPlan, AnnealTrace) {
        while !self.is_done() {
            self.step();
        }
        self.finish()
    }

    pub fn finish(mut self) -> (PlacementPlan, AnnealTrace) {
        for (e, slot) in self.best_occupancy.iter().enumerate() {
            let (e, c) = (e / self.plan.n_clus(), e % self.plan.n_clus());
            self.plan.assign(e, c, *slot);
        }
        self.trace.final_routes = self.best;
        (self.plan, self.trace)
    }
}

/// Anneals `plan` and returns the lowest-route placement visited.
pub fn anneal(plan: PlacementPlan, cfg: &AnnealConfig) -> (PlacementPlan, AnnealTrace) {
    Annealer::new(plan, *cfg).run()
}

/// `(iteration, remaining fraction of the initial routes)` per trace sample.
pub fn route_reduction_report(trace: &AnnealTrace) -> Vec<(u64, f64)> {
    trace
        .samples
        .iter()
        .map(|&(i, r)| (i, remaining_fraction(r, trace.initial)))
        .collect()
}

pub fn remaining_fraction(routes: usize, initial: usize) -> f64 {
    if initial == 0 {
        1.0
    } else {
        routes as f64 / initial as f64
    }
}

/// Trace as CSV with header `iter,remaining_fraction`.
pub fn trace_csv(trace: &AnnealTrace) -> String {
    let mut out = String::from("iter,remaining_fraction\n");
    for (i, f) in route_reduction_report(trace) {
        writeln!(out, "{i},{f:.6}").unwrap();
    }
    out
}
