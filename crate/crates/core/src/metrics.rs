//! Nearest-hospital distance fields and all corridor-importance measures:
//! the population-weighted access-loss integral, aggregate hospital
//! accessibility and its per-deletion drop, hospital-restricted edge
//! betweenness, and travel-time conversions.
//!
//! Everything here is a pure function of immutable inputs; the distance
//! field is the hot path and keeps its scratch state per caller so workers
//! can run concurrently.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::network::{CorridorNetwork, NetworkView};

/// Sentinel distance for municipalities cut off from every hospital.
pub const UNREACHABLE: f64 = f64::INFINITY;

pub const DEFAULT_SPEED_KMH: f64 = 50.0;
pub const DEFAULT_BETWEENNESS_CUTOFF_KM: f64 = 100.0;
pub const DEFAULT_THRESHOLDS_MIN: [f64; 3] = [15.0, 30.0, 60.0];

/// Relative tolerance for treating two path lengths as equal when counting
/// shortest paths.
pub const PATH_LENGTH_REL_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("integration bound must be nonnegative, got {0}")]
    NegativeUpper(f64),
    #[error("hospital accessibility is undefined: every municipality hosts a hospital")]
    AllHospitals,
    #[error("hospital accessibility is undefined: non-hospital population is zero")]
    ZeroPopulation,
    #[error("baseline hospital accessibility must be positive, got {0}")]
    NonPositiveBaseline(f64),
}

/// Per-municipality distance to (and identity of) the nearest hospital
/// under one deletion scenario. Indices follow the network's municipality
/// order; [`UNREACHABLE`] pairs with a `None` hospital.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    pub distance_km: Vec<f64>,
    pub nearest_hospital: Vec<Option<usize>>,
}

impl DistanceField {
    pub fn len(&self) -> usize {
        self.distance_km.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distance_km.is_empty()
    }

    pub fn is_reachable(&self, muni: usize) -> bool {
        self.distance_km[muni].is_finite()
    }

    /// Largest finite distance, or `None` when nothing is reachable.
    pub fn max_finite_distance(&self) -> Option<f64> {
        self.distance_km
            .iter()
            .copied()
            .filter(|d| d.is_finite())
            .fold(None, |acc, d| Some(acc.map_or(d, |a: f64| a.max(d))))
    }

    fn with_capacity(n: usize) -> Self {
        DistanceField {
            distance_km: vec![UNREACHABLE; n],
            nearest_hospital: vec![None; n],
        }
    }
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    dist: f64,
    hospital: u32,
    node: u32,
}

impl Eq for HeapEntry {}

// Min-heap over (dist, hospital): among equal distances the smallest
// hospital index wins, which is the lexicographic-id tie-break because
// municipalities are stored sorted by id.
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.hospital.cmp(&self.hospital))
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Reusable workspace for [`nearest_hospital_field_into`]. One per worker.
#[derive(Default)]
pub struct DistanceScratch {
    heap: BinaryHeap<HeapEntry>,
}

/// Exact multi-source shortest-path field from the hospital set, corridor
/// lengths as weights. Ties on distance resolve to the lexicographically
/// smallest hospital id.
pub fn nearest_hospital_field(view: &NetworkView<'_>) -> DistanceField {
    let mut field = DistanceField::with_capacity(view.network().municipality_count());
    let mut scratch = DistanceScratch::default();
    nearest_hospital_field_into(view, &mut field, &mut scratch);
    field
}

pub fn nearest_hospital_field_into(
    view: &NetworkView<'_>,
    field: &mut DistanceField,
    scratch: &mut DistanceScratch,
) {
    let net = view.network();
    let n = net.municipality_count();
    field.distance_km.clear();
    field.distance_km.resize(n, UNREACHABLE);
    field.nearest_hospital.clear();
    field.nearest_hospital.resize(n, None);
    let heap = &mut scratch.heap;
    heap.clear();

    for &h in net.hospitals() {
        field.distance_km[h] = 0.0;
        field.nearest_hospital[h] = Some(h);
        heap.push(HeapEntry {
            dist: 0.0,
            hospital: h as u32,
            node: h as u32,
        });
    }

    while let Some(HeapEntry {
        dist,
        hospital,
        node,
    }) = heap.pop()
    {
        let v = node as usize;
        // Skip stale entries: each improvement pushed a fresh entry.
        if dist != field.distance_km[v] || Some(hospital as usize) != field.nearest_hospital[v] {
            continue;
        }
        for (corridor, u) in view.active_incident(v) {
            let cand = dist + net.corridor(corridor).length_km;
            let better = cand < field.distance_km[u]
                || (cand == field.distance_km[u]
                    && (hospital as usize) < field.nearest_hospital[u].unwrap_or(usize::MAX));
            if better {
                field.distance_km[u] = cand;
                field.nearest_hospital[u] = Some(hospital as usize);
                heap.push(HeapEntry {
                    dist: cand,
                    hospital,
                    node: u as u32,
                });
            }
        }
    }
}

/// One sample of the cumulative population-vs-distance curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub distance_km: f64,
    pub cumulative_population: u64,
}

/// Sorted cumulative-population-vs-distance samples: one point per distinct
/// finite distance; unreachable municipalities contribute nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct AccessCurve {
    pub points: Vec<CurvePoint>,
    /// Total population of the municipality set the field was computed over,
    /// reachable or not. Constant across deletion scenarios.
    pub total_population_considered: u64,
}

impl AccessCurve {
    /// Distance of the last sample, i.e. the largest finite distance in the
    /// underlying field.
    pub fn max_distance(&self) -> Option<f64> {
        self.points.last().map(|p| p.distance_km)
    }
}

pub fn access_curve(field: &DistanceField, populations: &[u64]) -> AccessCurve {
    let mut points = Vec::new();
    fill_curve_points(field, populations, &mut points);
    AccessCurve {
        points,
        total_population_considered: populations.iter().sum(),
    }
}

/// Curve construction into a caller-owned buffer (sweep hot path).
pub(crate) fn fill_curve_points(
    field: &DistanceField,
    populations: &[u64],
    out: &mut Vec<CurvePoint>,
) {
    out.clear();
    for (m, &d) in field.distance_km.iter().enumerate() {
        if d.is_finite() {
            out.push(CurvePoint {
                distance_km: d,
                cumulative_population: populations[m],
            });
        }
    }
    out.sort_unstable_by(|x, y| x.distance_km.total_cmp(&y.distance_km));
    // merge equal distances, then turn per-point populations into a running sum
    let mut write = 0usize;
    for read in 0..out.len() {
        if write > 0 && out[read].distance_km == out[write - 1].distance_km {
            out[write - 1].cumulative_population += out[read].cumulative_population;
        } else {
            out[write] = out[read];
            write += 1;
        }
    }
    out.truncate(write);
    let mut running = 0u64;
    for p in out.iter_mut() {
        running += p.cumulative_population;
        p.cumulative_population = running;
    }
}

/// Trapezoid integral of the piecewise-linear interpolation through the
/// curve points over `[0, upper]`.
///
/// Samples beyond `upper` are dropped and the curve is extended flat from
/// the last kept sample to `upper`; the integral starts at the first sample
/// (the curve counts as zero before it). An empty curve integrates to zero.
pub fn integrate_curve(curve: &AccessCurve, upper_km: f64) -> Result<f64, MetricsError> {
    integrate_points(&curve.points, upper_km)
}

pub(crate) fn integrate_points(points: &[CurvePoint], upper_km: f64) -> Result<f64, MetricsError> {
    if upper_km < 0.0 {
        return Err(MetricsError::NegativeUpper(upper_km));
    }
    let mut total = 0.0f64;
    let mut prev: Option<CurvePoint> = None;
    for &p in points {
        if p.distance_km > upper_km {
            break;
        }
        if let Some(q) = prev {
            let width = p.distance_km - q.distance_km;
            total += 0.5
                * (q.cumulative_population as f64 + p.cumulative_population as f64)
                * width;
        }
        prev = Some(p);
    }
    if let Some(q) = prev {
        if q.distance_km < upper_km {
            total += q.cumulative_population as f64 * (upper_km - q.distance_km);
        }
    }
    Ok(total)
}

/// Difference between the baseline and stressed access integrals, both taken
/// up to the largest finite baseline distance.
pub fn acis(base: &AccessCurve, stressed: &AccessCurve) -> f64 {
    match base.max_distance() {
        Some(dist_max) => {
            let base_integral =
                integrate_points(&base.points, dist_max).expect("dist_max is nonnegative");
            let stressed_integral =
                integrate_points(&stressed.points, dist_max).expect("dist_max is nonnegative");
            base_integral - stressed_integral
        }
        None => 0.0,
    }
}

/// Per-municipality hospital accessibility: population over nearest-hospital
/// distance. `None` marks hospital municipalities (distance zero), which are
/// excluded from aggregation; unreachable municipalities score zero.
pub fn ha_municipality(population: u64, distance_km: f64) -> Option<f64> {
    if distance_km == 0.0 {
        None
    } else if distance_km.is_finite() {
        Some(population as f64 / distance_km)
    } else {
        Some(0.0)
    }
}

/// Population-weighted aggregate accessibility over all non-hospital
/// municipalities.
pub fn ha_total(field: &DistanceField, populations: &[u64]) -> Result<f64, MetricsError> {
    debug_assert_eq!(field.len(), populations.len());
    let mut weighted = 0.0f64;
    let mut non_hospital_population = 0u64;
    let mut non_hospital_count = 0usize;
    for (m, &pop) in populations.iter().enumerate() {
        if let Some(ha) = ha_municipality(pop, field.distance_km[m]) {
            weighted += ha * pop as f64;
            non_hospital_population += pop;
            non_hospital_count += 1;
        }
    }
    if non_hospital_count == 0 {
        return Err(MetricsError::AllHospitals);
    }
    if non_hospital_population == 0 {
        return Err(MetricsError::ZeroPopulation);
    }
    Ok(weighted / non_hospital_population as f64)
}

/// Percent drop of aggregate accessibility caused by a deletion.
pub fn ha_impact(base_ha: f64, stressed_ha: f64) -> Result<f64, MetricsError> {
    if base_ha <= 0.0 {
        return Err(MetricsError::NonPositiveBaseline(base_ha));
    }
    Ok((base_ha - stressed_ha) / base_ha * 100.0)
}

/// Per-corridor scores produced by the single-deletion sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CorridorScore {
    pub corridor: usize,
    pub acis: f64,
    pub ha_impact_pct: f64,
    pub betweenness: f64,
}

/// Edge betweenness restricted to (municipality, hospital) pairs within
/// `cutoff_km` of each other, all distinct shortest paths counted.
///
/// Follows the ordered double sum over sources and hospital targets, so a
/// pair of hospitals within the cutoff contributes from both directions.
pub fn edge_betweenness_hospital(net: &CorridorNetwork, cutoff_km: f64) -> Vec<f64> {
    let n = net.municipality_count();
    let view = net.view();
    let mut scores = vec![0.0f64; net.corridor_count()];

    let mut dist = vec![UNREACHABLE; n];
    let mut scratch = DistanceScratch::default();
    let mut sigma = vec![0.0f64; n];
    let mut delta = vec![0.0f64; n];
    let mut preds: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut order: Vec<usize> = Vec::with_capacity(n);

    for &t in net.hospitals() {
        single_source_distances(&view, t, &mut dist, &mut scratch);

        order.clear();
        order.extend((0..n).filter(|&v| dist[v].is_finite()));
        order.sort_unstable_by(|&x, &y| dist[x].total_cmp(&dist[y]).then(x.cmp(&y)));

        // Predecessor DAG and path counts, in nondecreasing distance order.
        for v in 0..n {
            sigma[v] = 0.0;
            delta[v] = 0.0;
            preds[v].clear();
        }
        sigma[t] = 1.0;
        for &v in &order {
            if v == t {
                continue;
            }
            for (corridor, u) in view.active_incident(v) {
                if !dist[u].is_finite() {
                    continue;
                }
                let via = dist[u] + net.corridor(corridor).length_km;
                if same_path_length(via, dist[v]) {
                    preds[v].push((u, corridor));
                    sigma[v] += sigma[u];
                }
            }
        }

        // Accumulate pair dependencies from the farthest node inward.
        for &w in order.iter().rev() {
            let counted = w != t && dist[w] <= cutoff_km;
            for &(u, corridor) in &preds[w] {
                let contrib = sigma[u] / sigma[w] * (if counted { 1.0 } else { 0.0 } + delta[w]);
                scores[corridor] += contrib;
                delta[u] += contrib;
            }
        }
    }
    scores
}

fn same_path_length(candidate: f64, best: f64) -> bool {
    (candidate - best).abs() <= PATH_LENGTH_REL_TOL * best.max(candidate)
}

fn single_source_distances(
    view: &NetworkView<'_>,
    source: usize,
    dist: &mut [f64],
    scratch: &mut DistanceScratch,
) {
    let net = view.network();
    dist.fill(UNREACHABLE);
    dist[source] = 0.0;
    let heap = &mut scratch.heap;
    heap.clear();
    heap.push(HeapEntry {
        dist: 0.0,
        hospital: 0,
        node: source as u32,
    });
    while let Some(HeapEntry { dist: d, node, .. }) = heap.pop() {
        let v = node as usize;
        if d != dist[v] {
            continue;
        }
        for (corridor, u) in view.active_incident(v) {
            let cand = d + net.corridor(corridor).length_km;
            if cand < dist[u] {
                dist[u] = cand;
                heap.push(HeapEntry {
                    dist: cand,
                    hospital: 0,
                    node: u as u32,
                });
            }
        }
    }
}

/// Distance to minutes at a constant driving speed; unreachable stays
/// unreachable.
pub fn travel_minutes(distance_km: f64, speed_kmh: f64) -> f64 {
    distance_km / speed_kmh * 60.0
}

/// Populations pushed over each travel-time threshold by a deletion.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdCrossings {
    /// Aligned with the thresholds passed in: population whose travel time
    /// was below the threshold at baseline and at or above it (or
    /// unreachable) afterwards.
    pub crossing_population: Vec<u64>,
    /// Population reachable at baseline but cut off afterwards.
    pub newly_unreachable: u64,
}

pub fn threshold_crossings(
    base: &DistanceField,
    stressed: &DistanceField,
    populations: &[u64],
    thresholds_min: &[f64],
    speed_kmh: f64,
) -> ThresholdCrossings {
    let mut crossing_population = vec![0u64; thresholds_min.len()];
    let mut newly_unreachable = 0u64;
    for (m, &pop) in populations.iter().enumerate() {
        let before = travel_minutes(base.distance_km[m], speed_kmh);
        let after = travel_minutes(stressed.distance_km[m], speed_kmh);
        if before.is_finite() && !after.is_finite() {
            newly_unreachable += pop;
        }
        for (i, &threshold) in thresholds_min.iter().enumerate() {
            if before < threshold && after >= threshold {
                crossing_population[i] += pop;
            }
        }
    }
    ThresholdCrossings {
        crossing_population,
        newly_unreachable,
    }
}
