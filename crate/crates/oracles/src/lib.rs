//! Deliberately simple and slow reference implementations used by tests to
//! validate the optimized engine.
//!
//! Nothing here shares code with the engine beyond the domain types: the
//! all-pairs matrix comes from iterative edge relaxation instead of
//! heap-based search, betweenness from exhaustive simple-path enumeration
//! instead of dependency accumulation, and the step integral from exact
//! rectangle sums instead of trapezoids. A bug in the engine cannot
//! self-validate through these paths.

use thiserror::Error;

use corridor_stress::metrics::DistanceField;
use corridor_stress::network::{CorridorNetwork, NetworkView};

pub const MAX_ALL_PAIRS_NODES: usize = 500;
pub const MAX_BETWEENNESS_NODES: usize = 12;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle size cap exceeded: {nodes} nodes > {cap}")]
    TooLarge { nodes: usize, cap: usize },
}

/// Comparison record for one checked case.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub case_id: String,
    pub engine_value: f64,
    pub oracle_value: f64,
    pub absolute_deviation: f64,
    pub relative_deviation: f64,
}

impl OracleReport {
    pub fn new(case_id: impl Into<String>, engine_value: f64, oracle_value: f64) -> Self {
        let absolute_deviation = (engine_value - oracle_value).abs();
        let scale = engine_value.abs().max(oracle_value.abs());
        let relative_deviation = if scale == 0.0 {
            0.0
        } else {
            absolute_deviation / scale
        };
        OracleReport {
            case_id: case_id.into(),
            engine_value,
            oracle_value,
            absolute_deviation,
            relative_deviation,
        }
    }

    pub fn within_relative(&self, tol: f64) -> bool {
        self.relative_deviation <= tol
    }
}

/// Exact all-pairs distances by repeated edge relaxation until a fixed
/// point. `matrix[i][j]` is infinite when `j` is unreachable from `i`.
pub fn oracle_all_pairs_distances(view: &NetworkView<'_>) -> Result<Vec<Vec<f64>>, OracleError> {
    let net = view.network();
    let n = net.municipality_count();
    if n > MAX_ALL_PAIRS_NODES {
        return Err(OracleError::TooLarge {
            nodes: n,
            cap: MAX_ALL_PAIRS_NODES,
        });
    }
    let edges: Vec<(usize, usize, f64)> = (0..net.corridor_count())
        .filter(|&k| !view.is_removed(k))
        .map(|k| {
            let c = net.corridor(k);
            (c.a, c.b, c.length_km)
        })
        .collect();

    let mut matrix = vec![vec![f64::INFINITY; n]; n];
    for (s, row) in matrix.iter_mut().enumerate() {
        row[s] = 0.0;
        // at most n-1 relaxation rounds are ever needed
        for _ in 0..n {
            let mut changed = false;
            for &(a, b, w) in &edges {
                if row[a] + w < row[b] {
                    row[b] = row[a] + w;
                    changed = true;
                }
                if row[b] + w < row[a] {
                    row[a] = row[b] + w;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }
    Ok(matrix)
}

/// Nearest-hospital field derived from the all-pairs oracle matrix: argmin
/// over hospitals with ties resolved to the smallest hospital index
/// (= lexicographically smallest id).
pub fn oracle_nearest_hospital_field(
    view: &NetworkView<'_>,
) -> Result<DistanceField, OracleError> {
    let net = view.network();
    let matrix = oracle_all_pairs_distances(view)?;
    let n = net.municipality_count();
    let mut distance_km = vec![f64::INFINITY; n];
    let mut nearest_hospital = vec![None; n];
    for m in 0..n {
        for &h in net.hospitals() {
            let d = matrix[m][h];
            if d < distance_km[m] {
                distance_km[m] = d;
                nearest_hospital[m] = Some(h);
            }
        }
    }
    Ok(DistanceField {
        distance_km,
        nearest_hospital,
    })
}

/// Hospital-restricted edge betweenness by exhaustive simple-path
/// enumeration. Shortest paths are identified by length within a relative
/// tolerance of 1e-9; every (municipality, hospital) ordered pair with
/// baseline distance at most `cutoff_km` contributes.
pub fn oracle_betweenness(
    net: &CorridorNetwork,
    cutoff_km: f64,
) -> Result<Vec<f64>, OracleError> {
    let n = net.municipality_count();
    if n > MAX_BETWEENNESS_NODES {
        return Err(OracleError::TooLarge {
            nodes: n,
            cap: MAX_BETWEENNESS_NODES,
        });
    }
    let view = net.view();
    let mut scores = vec![0.0f64; net.corridor_count()];
    for s in 0..n {
        for &t in net.hospitals() {
            if s == t {
                continue;
            }
            let paths = enumerate_simple_paths(&view, s, t);
            if paths.is_empty() {
                continue;
            }
            let best = paths
                .iter()
                .map(|(len, _)| *len)
                .fold(f64::INFINITY, f64::min);
            if best > cutoff_km {
                continue;
            }
            let shortest: Vec<&Vec<usize>> = paths
                .iter()
                .filter(|(len, _)| (len - best).abs() <= 1e-9 * best.max(*len))
                .map(|(_, corridors)| corridors)
                .collect();
            let sigma = shortest.len() as f64;
            for path in shortest {
                for &corridor in path {
                    scores[corridor] += 1.0 / sigma;
                }
            }
        }
    }
    Ok(scores)
}

/// All simple paths from `s` to `t` as (length, corridor list) pairs.
fn enumerate_simple_paths(
    view: &NetworkView<'_>,
    s: usize,
    t: usize,
) -> Vec<(f64, Vec<usize>)> {
    let net = view.network();
    let mut found = Vec::new();
    let mut on_path = vec![false; net.municipality_count()];
    let mut corridors = Vec::new();
    fn walk(
        view: &NetworkView<'_>,
        v: usize,
        t: usize,
        length: f64,
        on_path: &mut Vec<bool>,
        corridors: &mut Vec<usize>,
        found: &mut Vec<(f64, Vec<usize>)>,
    ) {
        if v == t {
            found.push((length, corridors.clone()));
            return;
        }
        on_path[v] = true;
        let next: Vec<(usize, usize)> = view.active_incident(v).collect();
        for (corridor, u) in next {
            if on_path[u] {
                continue;
            }
            corridors.push(corridor);
            let w = view.network().corridor(corridor).length_km;
            walk(view, u, t, length + w, on_path, corridors, found);
            corridors.pop();
        }
        on_path[v] = false;
    }
    walk(view, s, t, 0.0, &mut on_path, &mut corridors, &mut found);
    found
}

/// Exact area under the right-continuous population step function from zero
/// to `upper_km`: population becomes reachable exactly at its distance, with
/// no interpolation.
pub fn oracle_step_integral(field: &DistanceField, populations: &[u64], upper_km: f64) -> f64 {
    let mut samples: Vec<(f64, u64)> = field
        .distance_km
        .iter()
        .zip(populations)
        .filter(|(d, _)| d.is_finite())
        .map(|(&d, &p)| (d, p))
        .collect();
    samples.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut area = 0.0f64;
    let mut cumulative = 0u64;
    let mut i = 0usize;
    while i < samples.len() {
        let d = samples[i].0;
        if d >= upper_km {
            break;
        }
        while i < samples.len() && samples[i].0 == d {
            cumulative += samples[i].1;
            i += 1;
        }
        let next = if i < samples.len() {
            samples[i].0.min(upper_km)
        } else {
            upper_km
        };
        area += cumulative as f64 * (next - d);
    }
    area
}
