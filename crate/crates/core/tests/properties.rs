//! Cross-module invariants on randomized networks: build determinism,
//! mask isolation, field consistency, integration and scaling laws, and
//! agreement with the brute-force reference implementations.

use proptest::prelude::*;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use corridor_stress::fixtures::muni;
use corridor_stress::metrics::{
    access_curve, acis, edge_betweenness_hospital, ha_total, integrate_curve,
    nearest_hospital_field, AccessCurve, CurvePoint,
};
use corridor_stress::network::{
    build_corridor_network, CorridorNetwork, DeletionMask, Municipality, RoadSegment,
};
use corridor_stress::stats::{ccdf_points, spearman_rho, RankTable};
use corridor_stress_oracles::{oracle_nearest_hospital_field, oracle_step_integral};

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn pick(rng: &mut ChaCha8Rng, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

/// Random connected inputs: spanning tree plus extra edges, continuous
/// weights, at least one hospital.
fn random_inputs(seed: u64, n: usize) -> (Vec<Municipality>, Vec<RoadSegment>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut munis = Vec::with_capacity(n);
    for i in 0..n {
        let hospital = i == 0 || unit(&mut rng) < 0.2;
        munis.push(muni(
            &format!("N{i:03}"),
            1 + rng.next_u64() % 1000,
            if hospital { 1 + rng.next_u64() % 50 } else { 0 },
        ));
    }
    let mut roads = Vec::new();
    for i in 1..n {
        let j = pick(&mut rng, i);
        roads.push(RoadSegment {
            road_id: format!("t{i}"),
            muni_a: format!("N{i:03}"),
            muni_b: format!("N{j:03}"),
            length_km: 1.0 + 99.0 * unit(&mut rng),
        });
    }
    for e in 0..n {
        let a = pick(&mut rng, n);
        let b = pick(&mut rng, n);
        if a != b {
            roads.push(RoadSegment {
                road_id: format!("e{e}"),
                muni_a: format!("N{a:03}"),
                muni_b: format!("N{b:03}"),
                length_km: 1.0 + 99.0 * unit(&mut rng),
            });
        }
    }
    (munis, roads)
}

fn network_from(seed: u64, n: usize) -> CorridorNetwork {
    let (munis, roads) = random_inputs(seed, n);
    build_corridor_network(munis, &roads).unwrap()
}

fn populations(net: &CorridorNetwork) -> Vec<u64> {
    net.municipalities().iter().map(|m| m.population).collect()
}

fn networks_equal(a: &CorridorNetwork, b: &CorridorNetwork) -> bool {
    a.municipalities() == b.municipalities()
        && a.corridor_count() == b.corridor_count()
        && (0..a.corridor_count()).all(|k| a.corridor(k) == b.corridor(k))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn build_is_input_order_independent(seed in any::<u64>(), n in 4usize..24) {
        let (munis, roads) = random_inputs(seed, n);
        let reference = build_corridor_network(munis.clone(), &roads).unwrap();

        let mut munis_rev = munis.clone();
        munis_rev.reverse();
        let mut roads_rev = roads.clone();
        roads_rev.reverse();
        let reversed = build_corridor_network(munis_rev, &roads_rev).unwrap();
        prop_assert!(networks_equal(&reference, &reversed));

        let mut munis_rot = munis;
        munis_rot.rotate_left(n / 2);
        let mut roads_rot = roads;
        let pivot = roads_rot.len() / 3;
        roads_rot.rotate_left(pivot);
        let rotated = build_corridor_network(munis_rot, &roads_rot).unwrap();
        prop_assert!(networks_equal(&reference, &rotated));
    }

    #[test]
    fn road_counts_sum_to_inter_municipality_segments(seed in any::<u64>(), n in 4usize..24) {
        let (munis, roads) = random_inputs(seed, n);
        let net = build_corridor_network(munis, &roads).unwrap();
        let bundled: u64 = net.corridors().iter().map(|c| u64::from(c.road_count)).sum();
        prop_assert_eq!(bundled, roads.len() as u64);
        prop_assert_eq!(net.report().intra_municipality_dropped, 0);
    }

    #[test]
    fn masked_traversals_never_touch_the_base_network(seed in any::<u64>(), n in 4usize..24) {
        let net = network_from(seed, n);
        let before: Vec<Vec<(usize, usize)>> =
            (0..net.municipality_count()).map(|m| net.incident(m).to_vec()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..5 {
            let k = pick(&mut rng, net.corridor_count());
            let mask = DeletionMask::from_indices(&net, [k]).unwrap();
            let view = net.apply_mask(&mask).unwrap();
            for m in 0..net.municipality_count() {
                let _ = view.active_incident(m).count();
            }
            let _ = nearest_hospital_field(&view);
        }
        for m in 0..net.municipality_count() {
            prop_assert_eq!(&before[m], net.incident(m));
        }
    }

    #[test]
    fn distance_field_is_triangle_consistent(seed in any::<u64>(), n in 4usize..24) {
        let net = network_from(seed, n);
        let field = nearest_hospital_field(&net.view());
        for c in net.corridors() {
            let du = field.distance_km[c.a];
            let dv = field.distance_km[c.b];
            if du.is_finite() && dv.is_finite() {
                prop_assert!((du - dv).abs() <= c.length_km + 1e-9);
            }
        }
    }

    #[test]
    fn engine_field_matches_relaxation_oracle(seed in any::<u64>(), n in 4usize..20) {
        // integer weights make tie-breaking exact in both implementations
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut munis = Vec::new();
        for i in 0..n {
            let hospital = i == 0 || unit(&mut rng) < 0.25;
            munis.push(muni(
                &format!("N{i:03}"),
                rng.next_u64() % 500,
                if hospital { 1 + rng.next_u64() % 20 } else { 0 },
            ));
        }
        let mut roads = Vec::new();
        for i in 1..n {
            let j = pick(&mut rng, i);
            roads.push(RoadSegment {
                road_id: format!("t{i}"),
                muni_a: format!("N{i:03}"),
                muni_b: format!("N{j:03}"),
                length_km: (1 + rng.next_u64() % 100) as f64,
            });
        }
        let net = build_corridor_network(munis, &roads).unwrap();
        let engine = nearest_hospital_field(&net.view());
        let oracle = oracle_nearest_hospital_field(&net.view()).unwrap();
        for m in 0..n {
            prop_assert_eq!(engine.distance_km[m], oracle.distance_km[m]);
            prop_assert_eq!(engine.nearest_hospital[m], oracle.nearest_hospital[m]);
        }
    }

    #[test]
    fn empty_mask_scores_zero(seed in any::<u64>(), n in 4usize..24) {
        let net = network_from(seed, n);
        let pops = populations(&net);
        let base = access_curve(&nearest_hospital_field(&net.view()), &pops);
        let same = access_curve(
            &nearest_hospital_field(&net.apply_mask(&DeletionMask::empty()).unwrap()),
            &pops,
        );
        prop_assert_eq!(acis(&base, &same), 0.0);
        let ha = ha_total(&nearest_hospital_field(&net.view()), &pops);
        if let Ok(ha) = ha {
            prop_assert_eq!(
                corridor_stress::metrics::ha_impact(ha, ha).unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn trapezoid_matches_midpoint_rule_on_random_curves(
        seed in any::<u64>(),
        len in 1usize..40,
        upper_scale in 0.2f64..1.5,
    ) {
        // exact for piecewise-linear functions, algebraically distinct route
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(len);
        let mut d = 0.0;
        let mut cum = 0u64;
        for _ in 0..len {
            d += 0.1 + 20.0 * unit(&mut rng);
            cum += rng.next_u64() % 1000;
            points.push(CurvePoint { distance_km: d, cumulative_population: cum });
        }
        let curve = AccessCurve { points: points.clone(), total_population_considered: cum };
        let upper = d * upper_scale;
        let engine = integrate_curve(&curve, upper).unwrap();

        // the integrand: linear between kept samples, flat after the last
        // sample inside the window, zero before the first
        let kept: Vec<CurvePoint> = points
            .iter()
            .copied()
            .filter(|p| p.distance_km <= upper)
            .collect();
        let value_at = |x: f64| -> f64 {
            let mut prev: Option<&CurvePoint> = None;
            for p in &kept {
                if p.distance_km > x {
                    return match prev {
                        None => 0.0,
                        Some(q) => {
                            let w = (x - q.distance_km)
                                / (p.distance_km - q.distance_km);
                            q.cumulative_population as f64
                                + w * (p.cumulative_population as f64
                                    - q.cumulative_population as f64)
                        }
                    };
                }
                prev = Some(p);
            }
            prev.map_or(0.0, |q| q.cumulative_population as f64)
        };
        let mut expected = 0.0;
        let mut knots: Vec<f64> = points
            .iter()
            .map(|p| p.distance_km)
            .filter(|&x| x < upper)
            .collect();
        knots.push(upper);
        let mut prev_knot: Option<f64> = None;
        for &k in &knots {
            if let Some(a) = prev_knot {
                expected += value_at((a + k) / 2.0) * (k - a);
            }
            prev_knot = Some(k);
        }
        let scale = engine.abs().max(expected.abs()).max(1.0);
        prop_assert!((engine - expected).abs() <= 1e-9 * scale);
    }

    #[test]
    fn doubling_populations_doubles_scores_and_keeps_ranking(
        seed in any::<u64>(),
        n in 5usize..20,
    ) {
        let net = network_from(seed, n);
        let pops = populations(&net);
        let doubled: Vec<u64> = pops.iter().map(|p| p * 2).collect();
        let base_field = nearest_hospital_field(&net.view());
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);

        let mut scores = Vec::new();
        let mut scores2 = Vec::new();
        for _ in 0..6 {
            let k = pick(&mut rng, net.corridor_count());
            let mask = DeletionMask::from_indices(&net, [k]).unwrap();
            let field = nearest_hospital_field(&net.apply_mask(&mask).unwrap());
            let a1 = acis(&access_curve(&base_field, &pops), &access_curve(&field, &pops));
            let a2 = acis(
                &access_curve(&base_field, &doubled),
                &access_curve(&field, &doubled),
            );
            // powers of two scale float arithmetic exactly
            prop_assert_eq!(2.0 * a1, a2);
            scores.push((net.corridor_id(k), a1));
            scores2.push((net.corridor_id(k), a2));
        }
        let t1 = RankTable::from_scores("acis", scores);
        let t2 = RankTable::from_scores("acis", scores2);
        let order1: Vec<&str> = t1.entries.iter().map(|e| e.corridor_id.as_str()).collect();
        let order2: Vec<&str> = t2.entries.iter().map(|e| e.corridor_id.as_str()).collect();
        prop_assert_eq!(order1, order2);
    }

    #[test]
    fn doubling_lengths_and_cutoff_keeps_betweenness_ranking(
        seed in any::<u64>(),
        n in 5usize..16,
    ) {
        let (munis, roads) = random_inputs(seed, n);
        let doubled: Vec<RoadSegment> = roads
            .iter()
            .map(|r| RoadSegment { length_km: r.length_km * 2.0, ..r.clone() })
            .collect();
        let net1 = build_corridor_network(munis.clone(), &roads).unwrap();
        let net2 = build_corridor_network(munis, &doubled).unwrap();
        let b1 = edge_betweenness_hospital(&net1, 100.0);
        let b2 = edge_betweenness_hospital(&net2, 200.0);
        for k in 0..net1.corridor_count() {
            prop_assert_eq!(b1[k], b2[k]);
        }
    }

    #[test]
    fn spearman_is_invariant_under_monotone_maps(
        values in prop::collection::vec(-1e6f64..1e6, 2..50),
        a in 0.1f64..10.0,
        b in -100.0f64..100.0,
    ) {
        let up: Vec<f64> = values.iter().map(|&x| a * x + b).collect();
        let down: Vec<f64> = values.iter().map(|&x| -a * x + b).collect();
        match spearman_rho(&values, &up) {
            Ok(rho) => {
                prop_assert_eq!(rho, 1.0);
                prop_assert_eq!(spearman_rho(&values, &down).unwrap(), -1.0);
            }
            Err(_) => {
                // constant input; nothing to rank
                prop_assert!(values.iter().all(|&x| x == values[0]));
            }
        }
    }

    #[test]
    fn ccdf_fractions_are_nonincreasing_and_bounded(
        values in prop::collection::vec(-1e9f64..1e9, 1..80),
    ) {
        let points = ccdf_points(&values).unwrap();
        let n = values.len() as f64;
        prop_assert_eq!(points[0].fraction, 1.0);
        for pair in points.windows(2) {
            prop_assert!(pair[0].value < pair[1].value);
            prop_assert!(pair[0].fraction > pair[1].fraction);
        }
        for p in &points {
            prop_assert!(p.fraction >= 1.0 / n - 1e-12 && p.fraction <= 1.0);
        }
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let count_max = values.iter().filter(|&&v| v == max).count() as f64;
        prop_assert_eq!(points.last().unwrap().fraction, count_max / n);
    }

    #[test]
    fn trapezoid_never_undershoots_the_step_integral(seed in any::<u64>(), n in 4usize..20) {
        // the interpolation anticipates population between samples, so its
        // area dominates the pure step reading over the same window
        let net = network_from(seed, n);
        let pops = populations(&net);
        let field = nearest_hospital_field(&net.view());
        let curve = access_curve(&field, &pops);
        if let Some(dist_max) = curve.max_distance() {
            let trapezoid = integrate_curve(&curve, dist_max).unwrap();
            let step = oracle_step_integral(&field, &pops, dist_max);
            prop_assert!(trapezoid >= step - 1e-9 * step.abs().max(1.0));
        }
    }
}

#[test]
fn hospital_affect_frequency_survives_relabeling() {
    use corridor_stress::hospital::hospital_affect_frequency;
    use corridor_stress::stress::{run_single_sweep_seq, StressParams};

    let (munis, roads) = random_inputs(99, 14);
    let net = build_corridor_network(munis.clone(), &roads).unwrap();
    let mut shuffled_roads = roads.clone();
    shuffled_roads.reverse();
    let mut shuffled_munis = munis;
    shuffled_munis.rotate_left(5);
    let relabeled = build_corridor_network(shuffled_munis, &shuffled_roads).unwrap();

    let params = StressParams::default();
    let f1 = hospital_affect_frequency(&net, &run_single_sweep_seq(&net, &params).unwrap());
    let f2 = hospital_affect_frequency(
        &relabeled,
        &run_single_sweep_seq(&relabeled, &params).unwrap(),
    );
    assert_eq!(f1, f2);
    assert!(f1.iter().all(|&f| (0.0..=1.0).contains(&f)));
}
