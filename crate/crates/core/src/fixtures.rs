//! Small hand-checkable networks used in documentation and tests.

use crate::network::{
    build_corridor_network, CorridorNetwork, Municipality, RoadSegment,
};

/// Municipality with zeroed coordinates, for fixtures and tests.
pub fn muni(id: &str, population: u64, beds: u64) -> Municipality {
    Municipality {
        id: id.into(),
        name: id.into(),
        population,
        beds,
        lat: 0.0,
        lon: 0.0,
    }
}

/// The canonical four-town valley network used throughout the docs and
/// tests: one hospital town `A` and three towns strung out behind it.
///
/// ```text
///   A (pop 100, 10 beds) --10km-- B (50) --10km-- C (30) --10km-- D (20)
///    \_______________25km________________________/
/// ```
///
/// Corridors: `A--B` (2 roads, 10 km), `B--C` (10 km), `C--D` (10 km) and
/// the longer direct `A--C` (25 km).
pub fn toy_network() -> CorridorNetwork {
    let municipalities = vec![
        muni("A", 100, 10),
        muni("B", 50, 0),
        muni("C", 30, 0),
        muni("D", 20, 0),
    ];
    let road = |id: &str, a: &str, b: &str, km: f64| RoadSegment {
        road_id: id.into(),
        muni_a: a.into(),
        muni_b: b.into(),
        length_km: km,
    };
    let roads = vec![
        road("r1", "A", "B", 10.0),
        road("r2", "A", "B", 12.0),
        road("r3", "B", "C", 10.0),
        road("r4", "C", "D", 10.0),
        road("r5", "A", "C", 25.0),
    ];
    build_corridor_network(municipalities, &roads).expect("toy network is valid")
}

/// Two hospitals at the ends of a four-town line:
///
/// ```text
///   H1 (hosp) --5km-- M1 --4km-- M2 --5km-- H2 (hosp)
/// ```
///
/// `M1` is nearer to `H1`, `M2` nearer to `H2`; cutting `M1--M2` changes
/// nothing, while cutting an end corridor strands a town.
pub fn two_hospital_line() -> CorridorNetwork {
    let municipalities = vec![
        muni("H1", 200, 8),
        muni("H2", 150, 6),
        muni("M1", 40, 0),
        muni("M2", 60, 0),
    ];
    let road = |id: &str, a: &str, b: &str, km: f64| RoadSegment {
        road_id: id.into(),
        muni_a: a.into(),
        muni_b: b.into(),
        length_km: km,
    };
    let roads = vec![
        road("r1", "H1", "M1", 5.0),
        road("r2", "M1", "M2", 4.0),
        road("r3", "M2", "H2", 5.0),
    ];
    build_corridor_network(municipalities, &roads).expect("line network is valid")
}
