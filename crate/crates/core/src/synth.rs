//! Deterministic synthetic networks for desk-scale runs: a grid of
//! well-connected towns (plus a few shortcuts) with pendant valley chains
//! hanging off it. Hospitals sit on the grid, so cutting into a chain can
//! strand its whole population — the structure that produces the heavy
//! right tail of corridor importance.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::network::{Municipality, RoadSegment};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub nodes: usize,
    /// Fraction of municipalities hosting a hospital (grid nodes only).
    pub hospital_fraction: f64,
    pub seed: u64,
    /// Fraction of municipalities placed in pendant valley chains.
    pub valley_fraction: f64,
    /// Extra grid shortcuts as a fraction of the regular grid corridors.
    pub shortcut_fraction: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            nodes: 1700,
            hospital_fraction: 0.05,
            seed: 1,
            valley_fraction: 0.17,
            shortcut_fraction: 0.08,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SynthSummary {
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub grid_nodes: usize,
    pub valley_nodes: usize,
    pub valley_chains: usize,
    pub corridors: usize,
    pub roads: usize,
    pub hospitals: usize,
}

#[derive(Debug, Clone)]
pub struct SynthNetwork {
    pub municipalities: Vec<Municipality>,
    pub roads: Vec<RoadSegment>,
    pub summary: SynthSummary,
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit(rng)
}

fn pick(rng: &mut ChaCha8Rng, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

/// Box-Muller standard normal.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = unit(rng).max(1e-12);
    let u2 = unit(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn lognormal(rng: &mut ChaCha8Rng, mu: f64, sigma: f64, lo: f64, hi: f64) -> u64 {
    (mu + sigma * normal(rng)).exp().clamp(lo, hi) as u64
}

/// Generate a synthetic valley/grid network. The same parameters always
/// produce the same municipalities and roads, byte for byte.
pub fn generate(params: &SynthParams) -> SynthNetwork {
    assert!(params.nodes >= 2, "need at least two municipalities");
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let valley_nodes = ((params.nodes as f64) * params.valley_fraction).round() as usize;
    let grid_nodes = params.nodes - valley_nodes;
    let grid_cols = ((grid_nodes as f64 * 1.4).sqrt().ceil() as usize).max(1);
    let grid_rows = grid_nodes.div_ceil(grid_cols);

    let mut positions: Vec<(f64, f64)> = Vec::with_capacity(params.nodes);
    let mut populations: Vec<u64> = Vec::with_capacity(params.nodes);

    for g in 0..grid_nodes {
        let row = g / grid_cols;
        let col = g % grid_cols;
        let lat = 46.4 + row as f64 * 0.027 + uniform(&mut rng, -0.004, 0.004);
        let lon = 9.5 + col as f64 * 0.038 + uniform(&mut rng, -0.005, 0.005);
        positions.push((lat, lon));
        populations.push(lognormal(&mut rng, 6.3, 1.1, 50.0, 60_000.0));
    }

    // corridors as (a, b, length_km), a < b
    let mut corridors: Vec<(usize, usize, f64)> = Vec::new();
    for g in 0..grid_nodes {
        let row = g / grid_cols;
        let col = g % grid_cols;
        if col + 1 < grid_cols && g + 1 < grid_nodes && (g + 1) / grid_cols == row {
            corridors.push((g, g + 1, uniform(&mut rng, 2.5, 9.5)));
        }
        if g + grid_cols < grid_nodes {
            corridors.push((g, g + grid_cols, uniform(&mut rng, 2.5, 9.5)));
        }
    }
    let regular_grid_corridors = corridors.len();

    // diagonal-ish shortcuts between nearby grid nodes
    let mut have: std::collections::BTreeSet<(usize, usize)> =
        corridors.iter().map(|&(a, b, _)| (a, b)).collect();
    let wanted = (regular_grid_corridors as f64 * params.shortcut_fraction).round() as usize;
    let mut added = 0usize;
    let mut attempts = 0usize;
    while added < wanted && attempts < wanted * 20 {
        attempts += 1;
        let g = pick(&mut rng, grid_nodes);
        let dr = pick(&mut rng, 3);
        let dc = [1usize, 2][pick(&mut rng, 2)];
        let row = g / grid_cols + dr;
        let col = g % grid_cols + dc;
        if col >= grid_cols {
            continue;
        }
        let h = row * grid_cols + col;
        if h >= grid_nodes || h == g {
            continue;
        }
        let key = (g.min(h), g.max(h));
        if !have.insert(key) {
            continue;
        }
        corridors.push((key.0, key.1, uniform(&mut rng, 4.0, 16.0)));
        added += 1;
    }

    // pendant valley chains anchored on random grid nodes
    let mut next = grid_nodes;
    let mut chains = 0usize;
    while next < params.nodes {
        let len = (3 + pick(&mut rng, 8)).min(params.nodes - next);
        let anchor = pick(&mut rng, grid_nodes);
        let heading = uniform(&mut rng, 0.0, std::f64::consts::TAU);
        let (mut lat, mut lon) = positions[anchor];
        let mut prev = anchor;
        for _ in 0..len {
            lat += 0.03 * heading.sin() + uniform(&mut rng, -0.006, 0.006);
            lon += 0.042 * heading.cos() + uniform(&mut rng, -0.008, 0.008);
            positions.push((lat, lon));
            populations.push(lognormal(&mut rng, 5.6, 0.9, 20.0, 6_000.0));
            corridors.push((prev.min(next), prev.max(next), uniform(&mut rng, 3.0, 10.0)));
            prev = next;
            next += 1;
        }
        chains += 1;
    }

    // hospitals live on the grid; valleys depend on reaching them
    let hospital_count = ((params.nodes as f64 * params.hospital_fraction).round() as usize)
        .clamp(1, grid_nodes);
    let mut hospital_at = vec![false; params.nodes];
    let mut placed = 0usize;
    while placed < hospital_count {
        let g = pick(&mut rng, grid_nodes);
        if !hospital_at[g] {
            hospital_at[g] = true;
            placed += 1;
        }
    }

    let width = params.nodes.to_string().len().max(5);
    let municipalities: Vec<Municipality> = (0..params.nodes)
        .map(|i| {
            let beds = if hospital_at[i] {
                25 + populations[i] / 60 + pick(&mut rng, 120) as u64
            } else {
                0
            };
            Municipality {
                id: format!("M{i:0width$}"),
                name: format!("Town {i}"),
                population: populations[i],
                beds,
                lat: positions[i].0,
                lon: positions[i].1,
            }
        })
        .collect();

    // some corridors carry parallel roads so that bundling has work to do
    let mut roads = Vec::new();
    for (k, &(a, b, length_km)) in corridors.iter().enumerate() {
        let draw = pick(&mut rng, 100);
        let count = if draw < 8 {
            3
        } else if draw < 30 {
            2
        } else {
            1
        };
        for extra in 0..count {
            let length = if extra == 0 {
                length_km
            } else {
                length_km * uniform(&mut rng, 1.02, 1.5)
            };
            roads.push(RoadSegment {
                road_id: format!("R{:06}", roads.len()),
                muni_a: municipalities[a].id.clone(),
                muni_b: municipalities[b].id.clone(),
                length_km: length,
            });
        }
        let _ = k;
    }

    let summary = SynthSummary {
        grid_rows,
        grid_cols,
        grid_nodes,
        valley_nodes,
        valley_chains: chains,
        corridors: corridors.len(),
        roads: roads.len(),
        hospitals: hospital_count,
    };
    SynthNetwork {
        municipalities,
        roads,
        summary,
    }
}
