//! Result writers. Every table has a fixed column order and deterministic
//! row order; floats go through [`fmt_sig6`]. The network bundle keeps full
//! float precision so a reload reproduces the network exactly.

use std::path::{Path, PathBuf};

use serde_json::json;

use crate::hospital::{HospitalImpactRecord, HospitalLoad};
use crate::io::fmt::{fmt_sig6, sig6};
use crate::io::{io_err, IoError};
use crate::metrics::travel_minutes;
use crate::network::{BuildReport, CorridorNetwork};
use crate::stats::{CcdfPoint, RankTable};
use crate::stress::{NeighborhoodResult, SingleSweep};

pub const CORRIDOR_RANKINGS_FILE: &str = "corridor_rankings.csv";
pub const NEIGHBORHOOD_RANKINGS_FILE: &str = "neighborhood_rankings.csv";
pub const CCDF_FILE: &str = "ccdf_acis.csv";
pub const TRAVEL_TIME_FILE: &str = "travel_time_impacts.csv";
pub const HOSPITAL_IMPACT_FILE: &str = "hospital_impact.csv";
pub const HOSPITAL_FREQUENCY_FILE: &str = "hospital_frequency.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const OVERLAY_FILE: &str = "overlay.geojson";

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, IoError> {
    csv::Writer::from_path(path).map_err(|e| IoError::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn write_rows(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<(), IoError> {
    let mut writer = csv_writer(path)?;
    let fail = |e: csv::Error| IoError::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    writer.write_record(header).map_err(fail)?;
    for row in rows {
        writer.write_record(&row).map_err(fail)?;
    }
    writer.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Main ranking table: per corridor, all three measures and their ranks.
pub fn write_corridor_rankings(
    dir: &Path,
    net: &CorridorNetwork,
    sweep: &SingleSweep,
    acis_table: &RankTable,
    ha_table: &RankTable,
    betweenness_table: &RankTable,
) -> Result<PathBuf, IoError> {
    let path = dir.join(CORRIDOR_RANKINGS_FILE);
    let rank_of = |table: &RankTable| -> std::collections::HashMap<String, usize> {
        table.ranks().map(|(id, r)| (id.to_string(), r)).collect()
    };
    let acis_ranks = rank_of(acis_table);
    let ha_ranks = rank_of(ha_table);
    let betweenness_ranks = rank_of(betweenness_table);

    write_rows(
        &path,
        &[
            "corridor_id",
            "muni_a",
            "muni_b",
            "road_count",
            "acis",
            "ha_impact_pct",
            "betweenness",
            "rank_acis",
            "rank_ha",
            "rank_betweenness",
        ],
        sweep.results.iter().map(|r| {
            let corridor = net.corridor(r.corridor);
            let id = net.corridor_id(r.corridor);
            vec![
                id.clone(),
                net.municipality(corridor.a).id.clone(),
                net.municipality(corridor.b).id.clone(),
                corridor.road_count.to_string(),
                fmt_sig6(r.score.acis),
                fmt_sig6(r.score.ha_impact_pct),
                fmt_sig6(r.score.betweenness),
                acis_ranks[&id].to_string(),
                ha_ranks[&id].to_string(),
                betweenness_ranks[&id].to_string(),
            ]
        }),
    )?;
    Ok(path)
}

pub fn write_neighborhood_rankings(
    dir: &Path,
    net: &CorridorNetwork,
    results: &[NeighborhoodResult],
) -> Result<PathBuf, IoError> {
    let path = dir.join(NEIGHBORHOOD_RANKINGS_FILE);
    write_rows(
        &path,
        &["corridor_id", "p", "acis_mean", "acis_p90"],
        results.iter().map(|r| {
            vec![
                net.corridor_id(r.corridor),
                fmt_sig6(r.probability),
                fmt_sig6(r.acis_mean),
                fmt_sig6(r.acis_p90),
            ]
        }),
    )?;
    Ok(path)
}

pub fn write_ccdf(dir: &Path, points: &[CcdfPoint]) -> Result<PathBuf, IoError> {
    let path = dir.join(CCDF_FILE);
    write_rows(
        &path,
        &["value", "fraction"],
        points
            .iter()
            .map(|p| vec![fmt_sig6(p.value), fmt_sig6(p.fraction)]),
    )?;
    Ok(path)
}

pub fn write_travel_time_impacts(
    dir: &Path,
    net: &CorridorNetwork,
    sweep: &SingleSweep,
    thresholds_min: &[f64],
) -> Result<PathBuf, IoError> {
    let path = dir.join(TRAVEL_TIME_FILE);
    write_rows(
        &path,
        &[
            "corridor_id",
            "threshold_min",
            "crossing_population",
            "newly_unreachable",
        ],
        sweep.results.iter().flat_map(|r| {
            let id = net.corridor_id(r.corridor);
            thresholds_min
                .iter()
                .enumerate()
                .map(move |(i, &threshold)| {
                    vec![
                        id.clone(),
                        fmt_sig6(threshold),
                        r.threshold_crossings[i].to_string(),
                        r.newly_unreachable.to_string(),
                    ]
                })
                .collect::<Vec<_>>()
        }),
    )?;
    Ok(path)
}

pub fn write_hospital_impact(
    dir: &Path,
    net: &CorridorNetwork,
    records: &[HospitalImpactRecord],
) -> Result<PathBuf, IoError> {
    let path = dir.join(HOSPITAL_IMPACT_FILE);
    write_rows(
        &path,
        &[
            "hospital_id",
            "corridor_id",
            "ppb_initial",
            "ppb_stressed",
            "change_pct",
            "inbound_population",
        ],
        records.iter().map(|r| {
            vec![
                net.municipality(r.hospital).id.clone(),
                net.corridor_id(r.corridor),
                fmt_sig6(r.people_per_bed_initial),
                fmt_sig6(r.people_per_bed_stressed),
                fmt_sig6(r.change_pct),
                r.inbound_population.to_string(),
            ]
        }),
    )?;
    Ok(path)
}

pub fn write_hospital_frequency(
    dir: &Path,
    net: &CorridorNetwork,
    fractions: &[f64],
) -> Result<PathBuf, IoError> {
    let path = dir.join(HOSPITAL_FREQUENCY_FILE);
    write_rows(
        &path,
        &["hospital_id", "affect_fraction"],
        net.hospitals().iter().zip(fractions).map(|(&h, &f)| {
            vec![net.municipality(h).id.clone(), fmt_sig6(f)]
        }),
    )?;
    Ok(path)
}

/// One pairwise measure comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub measure_a: String,
    pub measure_b: String,
    /// `None` when the correlation is undefined (constant scores).
    pub spearman_rho: Option<f64>,
    pub top_k_requested: usize,
    pub top_k_used: usize,
    pub topk_overlap: f64,
}

pub fn write_comparison(dir: &Path, rows: &[ComparisonRow]) -> Result<PathBuf, IoError> {
    let path = dir.join(COMPARISON_FILE);
    write_rows(
        &path,
        &[
            "measure_a",
            "measure_b",
            "spearman_rho",
            "top_k_requested",
            "top_k_used",
            "topk_overlap",
        ],
        rows.iter().map(|r| {
            vec![
                r.measure_a.clone(),
                r.measure_b.clone(),
                r.spearman_rho.map_or("NaN".to_string(), fmt_sig6),
                r.top_k_requested.to_string(),
                r.top_k_used.to_string(),
                fmt_sig6(r.topk_overlap),
            ]
        }),
    )?;
    Ok(path)
}

/// GeoJSON overlay: one Point per municipality with population, beds, and
/// baseline distance, one LineString per corridor with its scores.
pub fn write_overlay_geojson(
    dir: &Path,
    net: &CorridorNetwork,
    sweep: &SingleSweep,
) -> Result<PathBuf, IoError> {
    let path = dir.join(OVERLAY_FILE);
    let mut features = Vec::new();

    for (m, muni) in net.municipalities().iter().enumerate() {
        let distance = sweep.baseline.field.distance_km[m];
        let nearest = sweep.baseline.field.nearest_hospital[m]
            .map(|h| json!(net.municipality(h).id))
            .unwrap_or(serde_json::Value::Null);
        features.push(json!({
            "type": "Feature",
            "geometry": {
                "type": "Point",
                "coordinates": [sig6(muni.lon), sig6(muni.lat)],
            },
            "properties": {
                "id": muni.id,
                "name": muni.name,
                "population": muni.population,
                "beds": muni.beds,
                "baseline_distance_km": if distance.is_finite() {
                    json!(sig6(distance))
                } else {
                    serde_json::Value::Null
                },
                "nearest_hospital": nearest,
            },
        }));
    }

    for r in &sweep.results {
        let corridor = net.corridor(r.corridor);
        let a = net.municipality(corridor.a);
        let b = net.municipality(corridor.b);
        features.push(json!({
            "type": "Feature",
            "geometry": {
                "type": "LineString",
                "coordinates": [
                    [sig6(a.lon), sig6(a.lat)],
                    [sig6(b.lon), sig6(b.lat)],
                ],
            },
            "properties": {
                "corridor_id": net.corridor_id(r.corridor),
                "muni_a": a.id,
                "muni_b": b.id,
                "length_km": sig6(corridor.length_km),
                "road_count": corridor.road_count,
                "acis": sig6(r.score.acis),
                "ha_impact_pct": sig6(r.score.ha_impact_pct),
                "betweenness": sig6(r.score.betweenness),
            },
        }));
    }

    let collection = json!({
        "type": "FeatureCollection",
        "features": features,
    });
    let mut text = serde_json::to_string_pretty(&collection).map_err(|e| IoError::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

/// Canonical network bundle under `<dir>/network/`: municipalities plus
/// pre-aggregated corridors. Floats keep full round-trip precision here so
/// reloading reproduces the network exactly.
pub fn write_network_bundle(dir: &Path, net: &CorridorNetwork) -> Result<PathBuf, IoError> {
    let bundle_dir = dir.join("network");
    std::fs::create_dir_all(&bundle_dir).map_err(|e| io_err(&bundle_dir, e))?;

    let munis_path = bundle_dir.join("municipalities.csv");
    write_rows(
        &munis_path,
        &["id", "name", "population", "beds", "lat", "lon"],
        net.municipalities().iter().map(|m| {
            vec![
                m.id.clone(),
                m.name.clone(),
                m.population.to_string(),
                m.beds.to_string(),
                format!("{}", m.lat),
                format!("{}", m.lon),
            ]
        }),
    )?;

    let corridors_path = bundle_dir.join("corridors.csv");
    write_rows(
        &corridors_path,
        &["muni_a", "muni_b", "length_km", "road_count"],
        (0..net.corridor_count()).map(|k| {
            let c = net.corridor(k);
            vec![
                net.municipality(c.a).id.clone(),
                net.municipality(c.b).id.clone(),
                format!("{}", c.length_km),
                c.road_count.to_string(),
            ]
        }),
    )?;
    Ok(bundle_dir)
}

/// Synthetic network as loadable input files: `municipalities.csv` plus
/// `roads.csv`, full float precision.
pub fn write_synth_inputs(
    dir: &Path,
    synth: &crate::synth::SynthNetwork,
) -> Result<(), IoError> {
    let munis_path = dir.join("municipalities.csv");
    write_rows(
        &munis_path,
        &["id", "name", "population", "beds", "lat", "lon"],
        synth.municipalities.iter().map(|m| {
            vec![
                m.id.clone(),
                m.name.clone(),
                m.population.to_string(),
                m.beds.to_string(),
                format!("{}", m.lat),
                format!("{}", m.lon),
            ]
        }),
    )?;
    let roads_path = dir.join("roads.csv");
    write_rows(
        &roads_path,
        &["road_id", "muni_a", "muni_b", "length_km"],
        synth.roads.iter().map(|r| {
            vec![
                r.road_id.clone(),
                r.muni_a.clone(),
                r.muni_b.clone(),
                format!("{}", r.length_km),
            ]
        }),
    )?;
    Ok(())
}

pub fn write_build_report(dir: &Path, report: &BuildReport) -> Result<PathBuf, IoError> {
    let path = dir.join("build_report.json");
    let mut text = serde_json::to_string_pretty(report).map_err(|e| IoError::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

/// Baseline tables: per-municipality distances, per-hospital loads, and a
/// one-object summary.
pub fn write_baseline_files(
    dir: &Path,
    net: &CorridorNetwork,
    sweep_baseline: &crate::stress::Baseline,
    loads: &[HospitalLoad],
    unassigned: u64,
    speed_kmh: f64,
) -> Result<(), IoError> {
    let distances_path = dir.join("baseline_distances.csv");
    write_rows(
        &distances_path,
        &["municipality_id", "distance_km", "travel_min", "nearest_hospital"],
        (0..net.municipality_count()).map(|m| {
            let d = sweep_baseline.field.distance_km[m];
            vec![
                net.municipality(m).id.clone(),
                fmt_sig6(d),
                fmt_sig6(travel_minutes(d, speed_kmh)),
                sweep_baseline.field.nearest_hospital[m]
                    .map(|h| net.municipality(h).id.clone())
                    .unwrap_or_default(),
            ]
        }),
    )?;

    let loads_path = dir.join("baseline_hospital_loads.csv");
    write_rows(
        &loads_path,
        &["hospital_id", "beds", "catchment_population", "people_per_bed"],
        loads.iter().map(|l| {
            vec![
                net.municipality(l.hospital).id.clone(),
                l.beds.to_string(),
                l.catchment_population.to_string(),
                fmt_sig6(l.people_per_bed),
            ]
        }),
    )?;

    let summary_path = dir.join("baseline_summary.json");
    let report = net.report();
    let summary = json!({
        "municipalities": net.municipality_count(),
        "corridors": net.corridor_count(),
        "hospitals": net.hospitals().len(),
        "road_segments_in": report.road_segments_in,
        "intra_municipality_dropped": report.intra_municipality_dropped,
        "total_population": net.total_population(),
        "unassigned_population": unassigned,
        "dist_max_km": sig6(sweep_baseline.dist_max_km),
        "ha_total": sig6(sweep_baseline.ha_total),
    });
    let mut text = serde_json::to_string_pretty(&summary).map_err(|e| IoError::Malformed {
        path: summary_path.display().to_string(),
        message: e.to_string(),
    })?;
    text.push('\n');
    std::fs::write(&summary_path, text).map_err(|e| io_err(&summary_path, e))?;
    Ok(())
}
