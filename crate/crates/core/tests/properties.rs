mod common;

use proptest::prelude::*;
use rand::Rng;
use tlmac_core::anneal::{AnnealConfig, Annealer};
use tlmac_core::cluster::{lower_bound_arrays, spectral_cluster, SpectralOptions};
use tlmac_core::codegen::build_pe_config;
use tlmac_core::layer::{reshape_to_groups, QuantLayer};
use tlmac_core::netlist::{netlist_json, parse_netlist};
use tlmac_core::place::place_groups;
use tlmac_core::sim::{oracle_conv, pe_step, simulate_layer, ActWindow};

fn layer_strategy() -> impl Strategy<Value = (QuantLayer, usize)> {
    (2u32..=4, 2u32..=4, prop_oneof![Just(1usize), Just(3)], 1usize..7, 1usize..6, 1usize..4, any::<u64>()).prop_map(
        |(bw, ba, k, d_o, d_i, p, seed)| {
            let mut rng = common::rng(seed);
            // Mix a palette with fresh rows so redundancy varies.
            let layer = if seed % 2 == 0 {
                common::random_layer(&mut rng, bw, ba, d_o, d_i, k)
            } else {
                common::redundant_layer(&mut rng, bw, ba, d_o, d_i, k, 1 + (seed as usize % 5))
            };
            (layer, p)
        },
    )
}

fn compiled(layer: &QuantLayer, p: usize, seed: u64) -> (tlmac_core::GroupedWeights, tlmac_core::ClusterPlan, tlmac_core::PlacementPlan) {
    let gw = reshape_to_groups(layer, p).unwrap();
    let n_clus = 1 << (6 - layer.kernel);
    let cp = spectral_cluster(&gw.assignment, n_clus, &SpectralOptions::default()).unwrap();
    let plan = place_groups(&cp, &gw, seed).unwrap();
    (gw, cp, plan)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grouping_round_trips((layer, p) in layer_strategy()) {
        let gw = reshape_to_groups(&layer, p).unwrap();
        for o in 0..layer.out_channels {
            for i in 0..layer.in_channels {
                for r in 0..layer.kernel {
                    let t = (o / p) * layer.in_channels + i;
                    let q = (o % p) * layer.kernel + r;
                    prop_assert_eq!(&gw.group_at(t, q).0[..], layer.kernel_row(o, i, r));
                }
            }
        }
        let distinct: std::collections::HashSet<_> = gw.group_table.iter().collect();
        prop_assert_eq!(distinct.len(), gw.n_uwg());
        let bound = (gw.d_s * gw.d_p).min(1usize << (layer.weight_bits as usize * layer.kernel));
        prop_assert!(gw.n_uwg() <= bound);
        for t in 0..gw.d_s {
            let used: std::collections::HashSet<_> = (0..gw.d_p).map(|q| gw.index(t, q)).collect();
            prop_assert_eq!(gw.assignment.row_count(t), used.len());
            for u in 0..gw.n_uwg() {
                prop_assert_eq!(gw.assignment.get(t, u), used.contains(&u));
            }
        }
    }

    #[test]
    fn clustering_is_feasible((layer, p) in layer_strategy()) {
        let gw = reshape_to_groups(&layer, p).unwrap();
        let n_clus = 1 << (6 - layer.kernel);
        let cp = spectral_cluster(&gw.assignment, n_clus, &SpectralOptions::default()).unwrap();
        cp.check(&gw.assignment).unwrap();
        prop_assert!(cp.used_clusters() <= n_clus);
        prop_assert!(cp.n_arr >= lower_bound_arrays(&gw.assignment));
        if gw.d_s <= n_clus {
            prop_assert_eq!(cp.labels.clone(), (0..gw.d_s).collect::<Vec<_>>());
        }
        let used = gw.used_groups().count_ones(..).max(1);
        prop_assert!(gw.n_uwg() as f64 / cp.n_arr as f64 >= 1.0 || used < gw.n_uwg());
    }

    #[test]
    fn swaps_keep_placement_feasible((layer, p) in layer_strategy(), seed in any::<u64>()) {
        let (gw, cp, plan) = compiled(&layer, p, seed);
        let cfg = AnnealConfig { iterations: 300, seed, ..Default::default() };
        let mut a = Annealer::new(plan, cfg);
        let mut last_best = a.best_routes();
        while !a.is_done() {
            a.step();
            prop_assert_eq!(a.routes(), common::recount_routes(a.plan()));
            prop_assert!(a.best_routes() <= last_best);
            last_best = a.best_routes();
            a.plan().check().unwrap();
        }
        let (plan, trace) = a.finish();
        prop_assert!(trace.final_routes <= trace.initial);
        prop_assert_eq!(plan.routes(), trace.final_routes);
        build_pe_config(&plan, &cp, &gw).unwrap();
    }

    #[test]
    fn netlist_round_trips((layer, p) in layer_strategy(), seed in any::<u64>()) {
        let (gw, cp, plan) = compiled(&layer, p, seed);
        let cfg = build_pe_config(&plan, &cp, &gw).unwrap();
        let text = netlist_json(&cfg, None);
        let (back, meta) = parse_netlist(&text, "mem").unwrap();
        prop_assert!(meta.is_none());
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(netlist_json(&back, None), text);
    }

    #[test]
    fn pe_step_is_bit_serial_mac_and_linear((layer, p) in layer_strategy(), seed in any::<u64>()) {
        let (gw, cp, plan) = compiled(&layer, p, seed);
        let cfg = build_pe_config(&plan, &cp, &gw).unwrap();
        let mut rng = common::rng(seed);
        let t = rng.random_range(0..gw.d_s);
        let acts: Vec<u32> = (0..layer.kernel).map(|_| rng.random_range(0..1u32 << layer.act_bits)).collect();
        let window = ActWindow::new(acts.clone(), layer.act_bits).unwrap();
        let zero = pe_step(&cfg, &window, t, &vec![0; gw.d_p]).unwrap();
        let bound = 1i64 << (layer.psum_bits - 2);
        let preload: Vec<i64> = (0..gw.d_p).map(|_| rng.random_range(-bound..bound)).collect();
        let loaded = pe_step(&cfg, &window, t, &preload).unwrap();
        for q in 0..gw.d_p {
            prop_assert_eq!(zero[q], gw.group_at(t, q).mac(&acts));
            prop_assert_eq!(loaded[q], zero[q] + preload[q]);
        }
    }

    #[test]
    fn simulation_matches_oracle((layer, p) in layer_strategy(), seed in any::<u64>(), stride in 1usize..=2, pad in 0usize..=1) {
        let (gw, cp, plan) = compiled(&layer, p, seed);
        let cfg = build_pe_config(&plan, &cp, &gw).unwrap();
        let mut rng = common::rng(seed ^ 0x5eed);
        let h = rng.random_range(layer.kernel..7);
        let w = rng.random_range(layer.kernel..7);
        let input = common::random_input(&mut rng, layer.in_channels, h, w, layer.act_bits);
        prop_assert_eq!(simulate_layer(&cfg, &gw, &input, stride, pad).unwrap(), oracle_conv(&layer, &input, stride, pad).unwrap());
    }
}
