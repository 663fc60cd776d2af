//! The coarse corridor network: municipalities as nodes, corridors as edges
//! bundling every real-world road that runs between the same two
//! municipalities.
//!
//! Networks are immutable once built and safe to share across workers.
//! Stress scenarios are expressed as [`DeletionMask`]s applied through
//! [`CorridorNetwork::apply_mask`], which yields a read-only [`NetworkView`]
//! without copying or mutating the base network.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("duplicate municipality id `{0}`")]
    DuplicateMunicipality(String),
    #[error("road `{road_id}` references unknown municipality `{municipality}`")]
    UnknownMunicipality {
        road_id: String,
        municipality: String,
    },
    #[error("road `{road_id}` has non-positive length {length_km} km")]
    InvalidLength { road_id: String, length_km: f64 },
    #[error("corridor {muni_a}--{muni_b}: {reason}")]
    InvalidCorridorRow {
        muni_a: String,
        muni_b: String,
        reason: String,
    },
    #[error("network needs at least one municipality")]
    NoMunicipalities,
    #[error("network needs at least one municipality with hospital beds")]
    NoHospitals,
    #[error("unknown corridor `{0}`")]
    UnknownCorridor(String),
}

/// Node of the coarse network.
#[derive(Debug, Clone, PartialEq)]
pub struct Municipality {
    pub id: String,
    pub name: String,
    pub population: u64,
    /// Hospital beds; zero means the municipality hosts no hospital.
    pub beds: u64,
    pub lat: f64,
    pub lon: f64,
}

impl Municipality {
    pub fn has_hospital(&self) -> bool {
        self.beds > 0
    }
}

/// One real-world road between two municipalities, before bundling.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadSegment {
    pub road_id: String,
    pub muni_a: String,
    pub muni_b: String,
    pub length_km: f64,
}

/// Pre-aggregated corridor input row (alternative to raw road segments).
#[derive(Debug, Clone, PartialEq)]
pub struct CorridorRow {
    pub muni_a: String,
    pub muni_b: String,
    pub length_km: f64,
    pub road_count: u32,
}

/// Coarse edge bundling all roads between one unordered pair of
/// municipalities. `a < b` as indices into the network's municipality list;
/// `length_km` is the minimum over the bundled segments.
#[derive(Debug, Clone, PartialEq)]
pub struct Corridor {
    pub a: usize,
    pub b: usize,
    pub length_km: f64,
    pub road_count: u32,
}

impl Corridor {
    /// The endpoint opposite to `m`, or `None` if `m` is not an endpoint.
    pub fn other_endpoint(&self, m: usize) -> Option<usize> {
        if m == self.a {
            Some(self.b)
        } else if m == self.b {
            Some(self.a)
        } else {
            None
        }
    }
}

/// Statistics gathered while building a network.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct BuildReport {
    pub municipality_count: usize,
    pub hospital_count: usize,
    pub road_segments_in: usize,
    /// Segments with both endpoints in the same municipality, silently
    /// dropped during ingestion.
    pub intra_municipality_dropped: usize,
    pub corridor_count: usize,
    pub max_roads_in_corridor: u32,
}

/// Immutable coarse network. Municipalities are stored sorted by id, so
/// indices are stable for identical inputs regardless of input order.
#[derive(Debug, Clone)]
pub struct CorridorNetwork {
    municipalities: Vec<Municipality>,
    corridors: Vec<Corridor>,
    /// municipality index -> (corridor index, opposite endpoint index)
    adjacency: Vec<Vec<(usize, usize)>>,
    hospitals: Vec<usize>,
    index_by_id: HashMap<String, usize>,
    corridor_by_pair: HashMap<(usize, usize), usize>,
    report: BuildReport,
}

impl CorridorNetwork {
    pub fn municipality_count(&self) -> usize {
        self.municipalities.len()
    }

    pub fn corridor_count(&self) -> usize {
        self.corridors.len()
    }

    pub fn municipalities(&self) -> &[Municipality] {
        &self.municipalities
    }

    pub fn municipality(&self, idx: usize) -> &Municipality {
        &self.municipalities[idx]
    }

    pub fn corridors(&self) -> &[Corridor] {
        &self.corridors
    }

    pub fn corridor(&self, idx: usize) -> &Corridor {
        &self.corridors[idx]
    }

    /// Municipality indices hosting a hospital, ascending (= lexicographic id
    /// order, which is the deterministic tie-break order everywhere).
    pub fn hospitals(&self) -> &[usize] {
        &self.hospitals
    }

    pub fn municipality_index(&self, id: &str) -> Option<usize> {
        self.index_by_id.get(id).copied()
    }

    /// Canonical corridor id string `A--B` with `A < B` lexicographically.
    pub fn corridor_id(&self, idx: usize) -> String {
        let c = &self.corridors[idx];
        format!(
            "{}--{}",
            self.municipalities[c.a].id, self.municipalities[c.b].id
        )
    }

    pub fn corridor_index(&self, muni_a: &str, muni_b: &str) -> Option<usize> {
        let ia = self.municipality_index(muni_a)?;
        let ib = self.municipality_index(muni_b)?;
        let key = (ia.min(ib), ia.max(ib));
        self.corridor_by_pair.get(&key).copied()
    }

    /// Resolve a canonical `A--B` corridor id.
    pub fn corridor_index_by_id(&self, id: &str) -> Option<usize> {
        let (a, b) = id.split_once("--")?;
        self.corridor_index(a, b)
    }

    /// Incident corridors of a municipality as `(corridor, opposite)` pairs.
    pub fn incident(&self, muni: usize) -> &[(usize, usize)] {
        &self.adjacency[muni]
    }

    pub fn total_population(&self) -> u64 {
        self.municipalities.iter().map(|m| m.population).sum()
    }

    pub fn report(&self) -> &BuildReport {
        &self.report
    }

    /// All corridors sharing at least one endpoint with `corridor`,
    /// excluding the corridor itself, in canonical (ascending index) order.
    pub fn corridor_neighbors(&self, corridor: usize) -> Vec<usize> {
        let c = &self.corridors[corridor];
        let mut out: Vec<usize> = self.adjacency[c.a]
            .iter()
            .chain(self.adjacency[c.b].iter())
            .map(|&(k, _)| k)
            .filter(|&k| k != corridor)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Id-keyed variant of [`Self::corridor_neighbors`].
    pub fn neighbors_of_corridor(&self, corridor_id: &str) -> Result<Vec<String>, NetworkError> {
        let idx = self
            .corridor_index_by_id(corridor_id)
            .ok_or_else(|| NetworkError::UnknownCorridor(corridor_id.to_string()))?;
        Ok(self
            .corridor_neighbors(idx)
            .into_iter()
            .map(|k| self.corridor_id(k))
            .collect())
    }

    /// View of the intact network (no deletions).
    pub fn view(&self) -> NetworkView<'_> {
        NetworkView {
            net: self,
            removed: Cow::Owned(vec![false; self.corridors.len()]),
        }
    }

    /// Read-only traversal view in which masked corridors are invisible.
    pub fn apply_mask<'a>(&'a self, mask: &DeletionMask) -> Result<NetworkView<'a>, NetworkError> {
        let mut removed = vec![false; self.corridors.len()];
        for &k in &mask.removed {
            if k >= self.corridors.len() {
                return Err(NetworkError::UnknownCorridor(format!("#{k}")));
            }
            removed[k] = true;
        }
        Ok(NetworkView {
            net: self,
            removed: Cow::Owned(removed),
        })
    }
}

/// A stress scenario: the set of corridors considered deleted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DeletionMask {
    removed: Vec<usize>,
}

impl DeletionMask {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Build from corridor indices, validated against `net`.
    pub fn from_indices(
        net: &CorridorNetwork,
        indices: impl IntoIterator<Item = usize>,
    ) -> Result<Self, NetworkError> {
        let mut removed: Vec<usize> = Vec::new();
        for k in indices {
            if k >= net.corridor_count() {
                return Err(NetworkError::UnknownCorridor(format!("#{k}")));
            }
            removed.push(k);
        }
        removed.sort_unstable();
        removed.dedup();
        Ok(Self { removed })
    }

    /// Build from canonical `A--B` corridor ids.
    pub fn from_ids<S: AsRef<str>>(
        net: &CorridorNetwork,
        ids: impl IntoIterator<Item = S>,
    ) -> Result<Self, NetworkError> {
        let mut removed = Vec::new();
        for id in ids {
            let idx = net
                .corridor_index_by_id(id.as_ref())
                .ok_or_else(|| NetworkError::UnknownCorridor(id.as_ref().to_string()))?;
            removed.push(idx);
        }
        removed.sort_unstable();
        removed.dedup();
        Ok(Self { removed })
    }

    pub fn removed(&self) -> &[usize] {
        &self.removed
    }

    pub fn len(&self) -> usize {
        self.removed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.removed.is_empty()
    }

    pub fn contains(&self, corridor: usize) -> bool {
        self.removed.binary_search(&corridor).is_ok()
    }
}

/// Read-only masked view of a network. Masked corridors are invisible to
/// adjacency queries; the base network is never touched.
pub struct NetworkView<'a> {
    net: &'a CorridorNetwork,
    removed: Cow<'a, [bool]>,
}

impl<'a> NetworkView<'a> {
    /// Borrow a caller-managed removal buffer (one slot per corridor). Used
    /// by the sweep engine to avoid per-scenario allocation.
    pub(crate) fn with_removed(net: &'a CorridorNetwork, removed: &'a [bool]) -> Self {
        debug_assert_eq!(removed.len(), net.corridor_count());
        NetworkView {
            net,
            removed: Cow::Borrowed(removed),
        }
    }

    pub fn network(&self) -> &CorridorNetwork {
        self.net
    }

    pub fn is_removed(&self, corridor: usize) -> bool {
        self.removed[corridor]
    }

    /// Active incident corridors of `muni` as `(corridor, opposite)` pairs.
    pub fn active_incident(&self, muni: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.net.adjacency[muni]
            .iter()
            .copied()
            .filter(move |&(k, _)| !self.removed[k])
    }

    pub fn degree(&self, muni: usize) -> usize {
        self.active_incident(muni).count()
    }
}

/// Bundle road segments into corridors and assemble the network.
///
/// One corridor per unordered municipality pair with at least one road;
/// corridor length is the minimum bundled segment length. Segments with both
/// endpoints in the same municipality are dropped and counted in the report.
pub fn build_corridor_network(
    municipalities: Vec<Municipality>,
    roads: &[RoadSegment],
) -> Result<CorridorNetwork, NetworkError> {
    let (munis, index_by_id) = prepare_municipalities(municipalities)?;

    let mut dropped = 0usize;
    let mut bundles: BTreeMap<(usize, usize), (f64, u32)> = BTreeMap::new();
    for road in roads {
        let ia = *index_by_id
            .get(&road.muni_a)
            .ok_or_else(|| NetworkError::UnknownMunicipality {
                road_id: road.road_id.clone(),
                municipality: road.muni_a.clone(),
            })?;
        let ib = *index_by_id
            .get(&road.muni_b)
            .ok_or_else(|| NetworkError::UnknownMunicipality {
                road_id: road.road_id.clone(),
                municipality: road.muni_b.clone(),
            })?;
        if !(road.length_km > 0.0) || !road.length_km.is_finite() {
            return Err(NetworkError::InvalidLength {
                road_id: road.road_id.clone(),
                length_km: road.length_km,
            });
        }
        if ia == ib {
            dropped += 1;
            continue;
        }
        let key = (ia.min(ib), ia.max(ib));
        bundles
            .entry(key)
            .and_modify(|(len, count)| {
                *len = len.min(road.length_km);
                *count += 1;
            })
            .or_insert((road.length_km, 1));
    }

    let corridors: Vec<Corridor> = bundles
        .into_iter()
        .map(|((a, b), (length_km, road_count))| Corridor {
            a,
            b,
            length_km,
            road_count,
        })
        .collect();

    assemble(munis, index_by_id, corridors, roads.len(), dropped)
}

/// Assemble a network from pre-aggregated corridor rows (bundling skipped).
pub fn build_from_corridor_rows(
    municipalities: Vec<Municipality>,
    rows: &[CorridorRow],
) -> Result<CorridorNetwork, NetworkError> {
    let (munis, index_by_id) = prepare_municipalities(municipalities)?;

    let mut by_pair: BTreeMap<(usize, usize), Corridor> = BTreeMap::new();
    let mut segments = 0usize;
    for row in rows {
        let invalid = |reason: String| NetworkError::InvalidCorridorRow {
            muni_a: row.muni_a.clone(),
            muni_b: row.muni_b.clone(),
            reason,
        };
        let ia = *index_by_id
            .get(&row.muni_a)
            .ok_or_else(|| invalid(format!("unknown municipality `{}`", row.muni_a)))?;
        let ib = *index_by_id
            .get(&row.muni_b)
            .ok_or_else(|| invalid(format!("unknown municipality `{}`", row.muni_b)))?;
        if ia == ib {
            return Err(invalid("both endpoints are the same municipality".into()));
        }
        if !(row.length_km > 0.0) || !row.length_km.is_finite() {
            return Err(invalid(format!("non-positive length {} km", row.length_km)));
        }
        if row.road_count == 0 {
            return Err(invalid("road_count must be at least 1".into()));
        }
        let key = (ia.min(ib), ia.max(ib));
        if by_pair.contains_key(&key) {
            return Err(invalid("duplicate corridor row".into()));
        }
        segments += row.road_count as usize;
        by_pair.insert(
            key,
            Corridor {
                a: key.0,
                b: key.1,
                length_km: row.length_km,
                road_count: row.road_count,
            },
        );
    }

    let corridors: Vec<Corridor> = by_pair.into_values().collect();
    assemble(munis, index_by_id, corridors, segments, 0)
}

fn prepare_municipalities(
    mut municipalities: Vec<Municipality>,
) -> Result<(Vec<Municipality>, HashMap<String, usize>), NetworkError> {
    if municipalities.is_empty() {
        return Err(NetworkError::NoMunicipalities);
    }
    municipalities.sort_by(|x, y| x.id.cmp(&y.id));
    for pair in municipalities.windows(2) {
        if pair[0].id == pair[1].id {
            return Err(NetworkError::DuplicateMunicipality(pair[0].id.clone()));
        }
    }
    if !municipalities.iter().any(Municipality::has_hospital) {
        return Err(NetworkError::NoHospitals);
    }
    let index_by_id = municipalities
        .iter()
        .enumerate()
        .map(|(i, m)| (m.id.clone(), i))
        .collect();
    Ok((municipalities, index_by_id))
}

fn assemble(
    municipalities: Vec<Municipality>,
    index_by_id: HashMap<String, usize>,
    corridors: Vec<Corridor>,
    road_segments_in: usize,
    intra_dropped: usize,
) -> Result<CorridorNetwork, NetworkError> {
    let mut adjacency = vec![Vec::new(); municipalities.len()];
    let mut corridor_by_pair = HashMap::with_capacity(corridors.len());
    for (k, c) in corridors.iter().enumerate() {
        adjacency[c.a].push((k, c.b));
        adjacency[c.b].push((k, c.a));
        corridor_by_pair.insert((c.a, c.b), k);
    }
    let hospitals: Vec<usize> = municipalities
        .iter()
        .enumerate()
        .filter(|(_, m)| m.has_hospital())
        .map(|(i, _)| i)
        .collect();
    let report = BuildReport {
        municipality_count: municipalities.len(),
        hospital_count: hospitals.len(),
        road_segments_in,
        intra_municipality_dropped: intra_dropped,
        corridor_count: corridors.len(),
        max_roads_in_corridor: corridors.iter().map(|c| c.road_count).max().unwrap_or(0),
    };
    Ok(CorridorNetwork {
        municipalities,
        corridors,
        adjacency,
        hospitals,
        index_by_id,
        corridor_by_pair,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{muni, toy_network};

    fn road(id: &str, a: &str, b: &str, km: f64) -> RoadSegment {
        RoadSegment {
            road_id: id.into(),
            muni_a: a.into(),
            muni_b: b.into(),
            length_km: km,
        }
    }

    fn four_munis() -> Vec<Municipality> {
        vec![
            muni("A", 100, 10),
            muni("B", 50, 0),
            muni("C", 30, 0),
            muni("D", 20, 0),
        ]
    }

    #[test]
    fn bundles_parallel_roads_with_min_length() {
        let roads = vec![
            road("r1", "A", "B", 10.0),
            road("r2", "A", "B", 12.0),
            road("r3", "B", "C", 10.0),
        ];
        let net = build_corridor_network(four_munis(), &roads).unwrap();
        assert_eq!(net.corridor_count(), 2);
        let ab = net.corridor(net.corridor_index("A", "B").unwrap());
        assert_eq!(ab.length_km, 10.0);
        assert_eq!(ab.road_count, 2);
        let bc = net.corridor(net.corridor_index("B", "C").unwrap());
        assert_eq!(bc.length_km, 10.0);
        assert_eq!(bc.road_count, 1);
    }

    #[test]
    fn single_road_is_identity_case() {
        let roads = vec![road("r1", "A", "B", 5.0)];
        let net = build_corridor_network(four_munis(), &roads).unwrap();
        assert_eq!(net.corridor_count(), 1);
        let ab = net.corridor(0);
        assert_eq!(ab.road_count, 1);
        assert_eq!(ab.length_km, 5.0);
    }

    #[test]
    fn intra_municipality_segments_are_dropped_and_reported() {
        let with_loop = vec![
            road("r1", "A", "B", 10.0),
            road("r3", "B", "C", 10.0),
            road("r4", "C", "C", 3.0),
        ];
        let filtered = vec![road("r1", "A", "B", 10.0), road("r3", "B", "C", 10.0)];
        let net = build_corridor_network(four_munis(), &with_loop).unwrap();
        let oracle = build_corridor_network(four_munis(), &filtered).unwrap();
        assert_eq!(net.report().intra_municipality_dropped, 1);
        assert_eq!(net.corridor_count(), oracle.corridor_count());
        for k in 0..net.corridor_count() {
            assert_eq!(net.corridor(k), oracle.corridor(k));
        }
    }

    #[test]
    fn unknown_road_endpoint_names_the_road() {
        let roads = vec![road("r9", "A", "Z", 1.0)];
        let err = build_corridor_network(four_munis(), &roads).unwrap_err();
        match err {
            NetworkError::UnknownMunicipality {
                road_id,
                municipality,
            } => {
                assert_eq!(road_id, "r9");
                assert_eq!(municipality, "Z");
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn rejects_empty_and_hospital_free_networks() {
        assert!(matches!(
            build_corridor_network(vec![], &[]),
            Err(NetworkError::NoMunicipalities)
        ));
        let no_beds = vec![muni("A", 10, 0), muni("B", 5, 0)];
        assert!(matches!(
            build_corridor_network(no_beds, &[]),
            Err(NetworkError::NoHospitals)
        ));
    }

    #[test]
    fn neighbors_share_an_endpoint() {
        let net = toy_network();
        let got = net.neighbors_of_corridor("B--C").unwrap();
        assert_eq!(got, vec!["A--B".to_string(), "A--C".into(), "C--D".into()]);
        assert!(matches!(
            net.neighbors_of_corridor("A--Z"),
            Err(NetworkError::UnknownCorridor(_))
        ));
    }

    #[test]
    fn neighbors_on_path_graph() {
        let munis = vec![muni("A", 10, 1), muni("B", 5, 0), muni("C", 5, 0)];
        let roads = vec![road("r1", "A", "B", 1.0), road("r2", "B", "C", 1.0)];
        let net = build_corridor_network(munis, &roads).unwrap();
        assert_eq!(net.neighbors_of_corridor("A--B").unwrap(), vec!["B--C"]);
    }

    #[test]
    fn neighbors_on_star_are_all_other_spokes() {
        let mut munis = vec![muni("HUB", 10, 1)];
        let mut roads = Vec::new();
        for leaf in ["L1", "L2", "L3", "L4", "L5"] {
            munis.push(muni(leaf, 5, 0));
            roads.push(road(&format!("r{leaf}"), "HUB", leaf, 2.0));
        }
        let net = build_corridor_network(munis, &roads).unwrap();
        let got = net.neighbors_of_corridor("HUB--L3").unwrap();
        assert_eq!(got.len(), 4);
        assert!(!got.contains(&"HUB--L3".to_string()));
    }

    #[test]
    fn empty_mask_view_matches_network() {
        let net = toy_network();
        let view = net.apply_mask(&DeletionMask::empty()).unwrap();
        for m in 0..net.municipality_count() {
            assert_eq!(view.degree(m), net.incident(m).len());
        }
    }

    #[test]
    fn full_mask_isolates_every_municipality() {
        let net = toy_network();
        let mask = DeletionMask::from_indices(&net, 0..net.corridor_count()).unwrap();
        let view = net.apply_mask(&mask).unwrap();
        for m in 0..net.municipality_count() {
            assert_eq!(view.degree(m), 0);
        }
    }

    #[test]
    fn masking_one_corridor_lowers_endpoint_degrees() {
        let net = toy_network();
        let mask = DeletionMask::from_ids(&net, ["B--C"]).unwrap();
        let view = net.apply_mask(&mask).unwrap();
        let b = net.municipality_index("B").unwrap();
        let c = net.municipality_index("C").unwrap();
        assert_eq!(view.degree(b), 1);
        assert_eq!(view.degree(c), 2);
        // base adjacency untouched
        assert_eq!(net.incident(b).len(), 2);
        assert_eq!(net.incident(c).len(), 3);
    }

    #[test]
    fn mask_rejects_unknown_corridor() {
        let net = toy_network();
        assert!(matches!(
            DeletionMask::from_ids(&net, ["A--Z"]),
            Err(NetworkError::UnknownCorridor(_))
        ));
        assert!(DeletionMask::from_indices(&net, [99]).is_err());
    }

    #[test]
    fn duplicate_corridor_rows_rejected() {
        let rows = vec![
            CorridorRow {
                muni_a: "A".into(),
                muni_b: "B".into(),
                length_km: 10.0,
                road_count: 2,
            },
            CorridorRow {
                muni_a: "B".into(),
                muni_b: "A".into(),
                length_km: 12.0,
                road_count: 1,
            },
        ];
        assert!(build_from_corridor_rows(four_munis(), &rows).is_err());
    }
}
