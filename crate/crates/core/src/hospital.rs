//! Hospital catchments and how corridor deletions shift them: assignment of
//! municipalities to their nearest hospital, people-per-bed loads, the
//! per-(hospital, corridor) impact table, and affect frequencies.

use thiserror::Error;

use crate::metrics::DistanceField;
use crate::network::CorridorNetwork;
use crate::stress::SingleSweep;

#[derive(Debug, Error)]
pub enum HospitalError {
    #[error("municipality `{0}` is marked as hospital but has zero beds")]
    ZeroBeds(String),
}

/// Per-municipality nearest-hospital assignment; `None` for municipalities
/// that cannot reach any hospital.
#[derive(Debug, Clone, PartialEq)]
pub struct CatchmentAssignment {
    pub assigned: Vec<Option<usize>>,
}

/// Direct projection of the distance field's nearest-hospital labels.
pub fn catchment(field: &DistanceField) -> CatchmentAssignment {
    CatchmentAssignment {
        assigned: field.nearest_hospital.clone(),
    }
}

/// Total population of municipalities whose assigned hospital changed,
/// including changes to unreachable.
pub fn affected_population(
    base: &CatchmentAssignment,
    stressed: &CatchmentAssignment,
    populations: &[u64],
) -> u64 {
    base.assigned
        .iter()
        .zip(&stressed.assigned)
        .zip(populations)
        .filter(|((b, s), _)| b != s)
        .map(|(_, &pop)| pop)
        .sum()
}

/// Catchment population and people-per-bed for one hospital.
#[derive(Debug, Clone, PartialEq)]
pub struct HospitalLoad {
    pub hospital: usize,
    pub beds: u64,
    pub catchment_population: u64,
    pub people_per_bed: f64,
}

/// Loads per hospital plus the population assigned to no hospital.
pub fn hospital_loads(
    net: &CorridorNetwork,
    assignment: &CatchmentAssignment,
) -> Result<(Vec<HospitalLoad>, u64), HospitalError> {
    let mut population_of: Vec<u64> = vec![0; net.municipality_count()];
    let mut unassigned = 0u64;
    for (m, &a) in assignment.assigned.iter().enumerate() {
        let pop = net.municipality(m).population;
        match a {
            Some(h) => population_of[h] += pop,
            None => unassigned += pop,
        }
    }
    let mut loads = Vec::with_capacity(net.hospitals().len());
    for &h in net.hospitals() {
        let beds = net.municipality(h).beds;
        if beds == 0 {
            return Err(HospitalError::ZeroBeds(net.municipality(h).id.clone()));
        }
        loads.push(HospitalLoad {
            hospital: h,
            beds,
            catchment_population: population_of[h],
            people_per_bed: population_of[h] as f64 / beds as f64,
        });
    }
    Ok((loads, unassigned))
}

/// One (hospital, corridor) pair whose catchment changed under that
/// corridor's deletion.
#[derive(Debug, Clone, PartialEq)]
pub struct HospitalImpactRecord {
    pub hospital: usize,
    pub corridor: usize,
    pub people_per_bed_initial: f64,
    pub people_per_bed_stressed: f64,
    /// Percent change of people per bed; infinite when an empty catchment
    /// gains population.
    pub change_pct: f64,
    pub change_people_per_bed: f64,
    /// Population gained from other hospitals' catchments.
    pub inbound_population: u64,
}

/// Impact records for every catchment change in the sweep, sorted by
/// absolute percent change descending (ties by hospital then corridor id
/// order).
pub fn hospital_impact_table(net: &CorridorNetwork, sweep: &SingleSweep) -> Vec<HospitalImpactRecord> {
    let mut records = Vec::new();
    for result in &sweep.results {
        for shift in &result.catchment_shifts {
            let beds = net.municipality(shift.hospital).beds as f64;
            let initial = shift.baseline_population as f64 / beds;
            let stressed = shift.stressed_population as f64 / beds;
            let change_pct = if initial > 0.0 {
                (stressed - initial) / initial * 100.0
            } else if stressed > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            records.push(HospitalImpactRecord {
                hospital: shift.hospital,
                corridor: result.corridor,
                people_per_bed_initial: initial,
                people_per_bed_stressed: stressed,
                change_pct,
                change_people_per_bed: stressed - initial,
                inbound_population: shift.inbound_population,
            });
        }
    }
    records.sort_by(|l, r| {
        r.change_pct
            .abs()
            .total_cmp(&l.change_pct.abs())
            .then_with(|| l.hospital.cmp(&r.hospital))
            .then_with(|| l.corridor.cmp(&r.corridor))
    });
    records
}

/// Per hospital: the fraction of corridor deletions that changed its
/// catchment, aligned with `net.hospitals()`.
pub fn hospital_affect_frequency(net: &CorridorNetwork, sweep: &SingleSweep) -> Vec<f64> {
    let mut hospital_slot = vec![usize::MAX; net.municipality_count()];
    for (i, &h) in net.hospitals().iter().enumerate() {
        hospital_slot[h] = i;
    }
    let mut counts = vec![0u64; net.hospitals().len()];
    for result in &sweep.results {
        for shift in &result.catchment_shifts {
            counts[hospital_slot[shift.hospital]] += 1;
        }
    }
    let total = net.corridor_count() as f64;
    counts.iter().map(|&c| c as f64 / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{muni, toy_network, two_hospital_line};
    use crate::metrics::nearest_hospital_field;
    use crate::network::{build_corridor_network, DeletionMask, RoadSegment};
    use crate::stress::{run_single_sweep_seq, StressParams};

    #[test]
    fn toy_baseline_assigns_everything_to_the_single_hospital() {
        let net = toy_network();
        let field = nearest_hospital_field(&net.view());
        let assignment = catchment(&field);
        let a = net.municipality_index("A").unwrap();
        assert!(assignment.assigned.iter().all(|&x| x == Some(a)));
    }

    #[test]
    fn equidistant_municipality_goes_to_smaller_hospital_id() {
        let munis = vec![muni("H1", 100, 5), muni("H2", 100, 5), muni("M", 50, 0)];
        let road = |id: &str, a: &str, b: &str, km: f64| RoadSegment {
            road_id: id.into(),
            muni_a: a.into(),
            muni_b: b.into(),
            length_km: km,
        };
        let roads = vec![road("r1", "H1", "M", 7.0), road("r2", "H2", "M", 7.0)];
        let net = build_corridor_network(munis, &roads).unwrap();
        let field = nearest_hospital_field(&net.view());
        let assignment = catchment(&field);
        let m = net.municipality_index("M").unwrap();
        let h1 = net.municipality_index("H1").unwrap();
        assert_eq!(assignment.assigned[m], Some(h1));
    }

    #[test]
    fn unreachable_municipality_is_unassigned() {
        let net = toy_network();
        let mask = DeletionMask::from_ids(&net, ["C--D"]).unwrap();
        let field = nearest_hospital_field(&net.apply_mask(&mask).unwrap());
        let assignment = catchment(&field);
        let d = net.municipality_index("D").unwrap();
        assert_eq!(assignment.assigned[d], None);
    }

    #[test]
    fn affected_population_counts_changed_assignments() {
        let base = CatchmentAssignment {
            assigned: vec![Some(0), Some(0), Some(1)],
        };
        assert_eq!(affected_population(&base, &base, &[10, 30, 5]), 0);
        let moved = CatchmentAssignment {
            assigned: vec![Some(0), Some(1), Some(1)],
        };
        assert_eq!(affected_population(&base, &moved, &[10, 30, 5]), 30);
        let dropped = CatchmentAssignment {
            assigned: vec![Some(0), None, Some(1)],
        };
        assert_eq!(affected_population(&base, &dropped, &[10, 30, 5]), 30);
    }

    #[test]
    fn line_cut_moves_exactly_the_rerouted_town() {
        let net = two_hospital_line();
        let base = catchment(&nearest_hospital_field(&net.view()));
        // cutting M1--M2 changes nothing: both towns keep their own side
        let mask = DeletionMask::from_ids(&net, ["M1--M2"]).unwrap();
        let cut = catchment(&nearest_hospital_field(&net.apply_mask(&mask).unwrap()));
        let pops: Vec<u64> = net.municipalities().iter().map(|m| m.population).collect();
        assert_eq!(affected_population(&base, &cut, &pops), 0);
        // cutting M2--H2 sends M2 across the line to H1
        let mask = DeletionMask::from_ids(&net, ["H2--M2"]).unwrap();
        let cut = catchment(&nearest_hospital_field(&net.apply_mask(&mask).unwrap()));
        let m2 = net.municipality_index("M2").unwrap();
        let h1 = net.municipality_index("H1").unwrap();
        assert_eq!(cut.assigned[m2], Some(h1));
        assert_eq!(affected_population(&base, &cut, &pops), 60);
    }

    #[test]
    fn loads_on_toy_baseline() {
        let net = toy_network();
        let assignment = catchment(&nearest_hospital_field(&net.view()));
        let (loads, unassigned) = hospital_loads(&net, &assignment).unwrap();
        assert_eq!(loads.len(), 1);
        assert_eq!(loads[0].catchment_population, 200);
        assert_eq!(loads[0].beds, 10);
        assert_eq!(loads[0].people_per_bed, 20.0);
        assert_eq!(unassigned, 0);
    }

    #[test]
    fn loads_on_self_serving_hospital() {
        let net = build_corridor_network(vec![muni("H", 100, 10)], &[]).unwrap();
        let assignment = catchment(&nearest_hospital_field(&net.view()));
        let (loads, unassigned) = hospital_loads(&net, &assignment).unwrap();
        assert_eq!(loads[0].people_per_bed, 10.0);
        assert_eq!(unassigned, 0);
    }

    #[test]
    fn impact_table_is_empty_when_no_catchment_changes() {
        let net = toy_network();
        let sweep = run_single_sweep_seq(&net, &StressParams::default()).unwrap();
        // deleting A--B never reassigns anyone: every reachable municipality
        // still belongs to A, and only full cut-offs (C--D for D) appear
        let table = hospital_impact_table(&net, &sweep);
        for record in &table {
            assert!(record.change_people_per_bed < 0.0, "only losses possible");
        }
    }

    #[test]
    fn line_cut_produces_balanced_donor_and_receiver_records() {
        let net = two_hospital_line();
        let sweep = run_single_sweep_seq(&net, &StressParams::default()).unwrap();
        let table = hospital_impact_table(&net, &sweep);
        let h2m2 = net.corridor_index_by_id("H2--M2").unwrap();
        let records: Vec<_> = table.iter().filter(|r| r.corridor == h2m2).collect();
        assert_eq!(records.len(), 2);
        let gained: u64 = records.iter().map(|r| r.inbound_population).sum();
        let net_change: f64 = records
            .iter()
            .map(|r| r.change_people_per_bed * net.municipality(r.hospital).beds as f64)
            .sum();
        assert_eq!(gained, 60);
        assert!(net_change.abs() < 1e-9, "gains equal losses, nobody cut off");
    }

    #[test]
    fn affect_frequency_counts_impacting_cuts() {
        let net = two_hospital_line();
        let sweep = run_single_sweep_seq(&net, &StressParams::default()).unwrap();
        let freqs = hospital_affect_frequency(&net, &sweep);
        // corridors: H1--M1, H2--M2, M1--M2; only the end cuts change a
        // catchment (each stranding or moving one town), the middle cut none
        assert_eq!(net.corridor_count(), 3);
        for f in freqs {
            assert!((f - 2.0 / 3.0).abs() < 1e-12);
        }
    }
}
