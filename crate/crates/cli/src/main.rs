//! Command-line driver: ingest networks, run the stress sweeps, and write
//! every result table. Exit codes: 0 success, 1 input/usage error, 2
//! internal invariant violation.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use corridor_stress::exec::with_worker_pool;
use corridor_stress::hospital::{
    hospital_affect_frequency, hospital_impact_table, hospital_loads,
};
use corridor_stress::io::{
    self, fmt_sig6, load_network, prepare_output_dir, read_manifest, verify_inputs,
    write_baseline_files, write_build_report, write_ccdf, write_comparison,
    write_corridor_rankings, write_hospital_frequency, write_hospital_impact, write_manifest,
    write_neighborhood_rankings, write_network_bundle, write_overlay_geojson,
    write_travel_time_impacts, ComparisonRow, ManifestParams, NetworkInputs, NetworkSource,
    RunManifest,
};
use corridor_stress::network::CorridorNetwork;
use corridor_stress::stats::{ccdf_points, spearman_rho, topk_overlap, RankTable, StatsError};
use corridor_stress::stress::{
    run_neighborhood_sweep, run_single_sweep, NeighborhoodConfig, NeighborhoodResult, SingleSweep,
    StressError, StressParams,
};
use corridor_stress::synth::{generate, SynthParams};

const OUT_ENV: &str = "CORRIDOR_STRESS_OUT";

#[derive(Parser)]
#[command(
    name = "corridor-stress",
    version,
    about = "Stress-test road corridors for nearest-hospital accessibility"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest and validate inputs, emit the canonical network bundle
    Build(BuildCmd),
    /// Baseline distance field, aggregate accessibility, hospital loads
    Baseline(RunCmd),
    /// Single-corridor deletion sweep: rankings, CCDF, travel times, overlay
    StressSingle(RunCmd),
    /// Neighborhood deletion sweep (focal corridor plus random neighbors)
    StressNeighborhood(RunCmd),
    /// Hospital catchment impact and affect-frequency tables
    HospitalImpact(RunCmd),
    /// Measure comparisons (Spearman, top-k overlap) and the score CCDF
    Report(RunCmd),
    /// Full pipeline: bundle, baseline, both sweeps, every table
    All(AllCmd),
    /// Generate a synthetic valley/grid network as input files
    Synth(SynthCmd),
}

#[derive(Args)]
struct InputArgs {
    /// Municipality table: id,name,population,beds,lat,lon
    #[arg(long, value_name = "FILE")]
    municipalities: Option<PathBuf>,
    /// Raw road segments: road_id,muni_a,muni_b,length_km
    #[arg(long, value_name = "FILE", conflicts_with = "corridors")]
    roads: Option<PathBuf>,
    /// Pre-aggregated corridors: muni_a,muni_b,length_km,road_count
    #[arg(long, value_name = "FILE")]
    corridors: Option<PathBuf>,
}

impl InputArgs {
    fn resolve(&self) -> Result<NetworkInputs> {
        let municipalities = self
            .municipalities
            .clone()
            .ok_or_else(|| anyhow!("missing --municipalities"))?;
        let source = match (&self.roads, &self.corridors) {
            (Some(r), None) => NetworkSource::Roads(r.clone()),
            (None, Some(c)) => NetworkSource::Corridors(c.clone()),
            (None, None) => bail!("one of --roads or --corridors is required"),
            (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
        };
        Ok(NetworkInputs {
            municipalities,
            source,
        })
    }
}

#[derive(Args)]
struct OutArgs {
    /// Output directory (falls back to $CORRIDOR_STRESS_OUT)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl OutArgs {
    fn resolve(&self) -> Result<PathBuf> {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .ok_or_else(|| anyhow!("missing --out (or set {OUT_ENV})"))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MeasureSelection {
    Acis,
    Ha,
    Betweenness,
    All,
}

impl MeasureSelection {
    fn includes(self, other: MeasureSelection) -> bool {
        self == MeasureSelection::All || self == other
    }

    fn as_str(self) -> &'static str {
        match self {
            MeasureSelection::Acis => "acis",
            MeasureSelection::Ha => "ha",
            MeasureSelection::Betweenness => "betweenness",
            MeasureSelection::All => "all",
        }
    }

    fn parse(text: &str) -> Result<Self> {
        <Self as ValueEnum>::from_str(text, true)
            .map_err(|e| anyhow!("bad measure selection: {e}"))
    }
}

#[derive(Args, Clone)]
struct ParamArgs {
    /// Global seed for the neighborhood replicates
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for the sweeps (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Constant driving speed for travel-time conversion
    #[arg(long, default_value_t = 50.0)]
    speed_kmh: f64,
    /// Municipality-hospital pair cutoff for edge betweenness
    #[arg(long, default_value_t = 100.0)]
    betweenness_cutoff_km: f64,
    /// Travel-time thresholds in minutes
    #[arg(long, value_delimiter = ',', default_values_t = vec![15.0, 30.0, 60.0])]
    thresholds_min: Vec<f64>,
    /// Neighbor deletion probabilities for the neighborhood sweep
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.25, 0.5, 0.75])]
    probabilities: Vec<f64>,
    /// Replicates per (corridor, probability) cell
    #[arg(long, default_value_t = 100)]
    replicates: u32,
    /// Measures compared in the report
    #[arg(long, value_enum, default_value_t = MeasureSelection::All)]
    measures: MeasureSelection,
    /// Top-k size for ranking overlap
    #[arg(long, default_value_t = 100)]
    top_k: usize,
}

impl ParamArgs {
    fn stress_params(&self) -> StressParams {
        StressParams {
            speed_kmh: self.speed_kmh,
            betweenness_cutoff_km: self.betweenness_cutoff_km,
            thresholds_min: self.thresholds_min.clone(),
        }
    }

    fn neighborhood_config(&self) -> NeighborhoodConfig {
        NeighborhoodConfig {
            probabilities: self.probabilities.clone(),
            replicates: self.replicates,
            global_seed: self.seed,
            retain_replicates: false,
        }
    }

    fn manifest_params(&self) -> ManifestParams {
        ManifestParams {
            seed: self.seed,
            speed_kmh: self.speed_kmh,
            betweenness_cutoff_km: self.betweenness_cutoff_km,
            thresholds_min: self.thresholds_min.clone(),
            probabilities: self.probabilities.clone(),
            replicates: self.replicates,
            measures: self.measures.as_str().to_string(),
            top_k: self.top_k,
        }
    }

    fn from_manifest(params: &ManifestParams, workers: Option<usize>) -> Result<Self> {
        Ok(ParamArgs {
            seed: params.seed,
            workers,
            speed_kmh: params.speed_kmh,
            betweenness_cutoff_km: params.betweenness_cutoff_km,
            thresholds_min: params.thresholds_min.clone(),
            probabilities: params.probabilities.clone(),
            replicates: params.replicates,
            measures: MeasureSelection::parse(&params.measures)?,
            top_k: params.top_k,
        })
    }
}

fn default_manifest_params() -> ManifestParams {
    ManifestParams {
        seed: 0,
        speed_kmh: corridor_stress::metrics::DEFAULT_SPEED_KMH,
        betweenness_cutoff_km: corridor_stress::metrics::DEFAULT_BETWEENNESS_CUTOFF_KM,
        thresholds_min: corridor_stress::metrics::DEFAULT_THRESHOLDS_MIN.to_vec(),
        probabilities: NeighborhoodConfig::default().probabilities,
        replicates: NeighborhoodConfig::default().replicates,
        measures: "all".to_string(),
        top_k: 100,
    }
}

#[derive(Args)]
struct BuildCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct RunCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    out: OutArgs,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct AllCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    out: OutArgs,
    #[command(flatten)]
    params: ParamArgs,
    /// Re-run from a previously written run_manifest.json (verifies input
    /// hashes, reuses its parameters)
    #[arg(
        long,
        value_name = "FILE",
        conflicts_with_all = ["municipalities", "roads", "corridors"]
    )]
    from_manifest: Option<PathBuf>,
}

#[derive(Args)]
struct SynthCmd {
    #[arg(long, default_value_t = 1700)]
    nodes: usize,
    #[arg(long, default_value_t = 0.05)]
    hospital_fraction: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0.17)]
    valley_fraction: f64,
    #[arg(long, default_value_t = 0.08)]
    shortcut_fraction: f64,
    #[command(flatten)]
    out: OutArgs,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        let internal = matches!(
            err.downcast_ref::<StressError>(),
            Some(StressError::Internal(_))
        );
        std::process::exit(if internal { 2 } else { 1 });
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Build(cmd) => cmd_build(cmd),
        Command::Baseline(cmd) => cmd_baseline(cmd),
        Command::StressSingle(cmd) => cmd_stress_single(cmd),
        Command::StressNeighborhood(cmd) => cmd_stress_neighborhood(cmd),
        Command::HospitalImpact(cmd) => cmd_hospital_impact(cmd),
        Command::Report(cmd) => cmd_report(cmd),
        Command::All(cmd) => cmd_all(cmd),
        Command::Synth(cmd) => cmd_synth(cmd),
    }
}

fn load(inputs: &NetworkInputs) -> Result<CorridorNetwork> {
    let net = load_network(inputs)?;
    let report = net.report();
    println!(
        "network: {} municipalities ({} hospitals), {} corridors from {} segments \
         ({} intra-municipality dropped)",
        report.municipality_count,
        report.hospital_count,
        report.corridor_count,
        report.road_segments_in,
        report.intra_municipality_dropped
    );
    Ok(net)
}

fn manifest_for(
    command: &str,
    inputs: &NetworkInputs,
    params: ManifestParams,
) -> Result<RunManifest> {
    let mut manifest = RunManifest::new(command, params);
    manifest.record_input("municipalities", &inputs.municipalities)?;
    match &inputs.source {
        NetworkSource::Roads(path) => manifest.record_input("roads", path)?,
        NetworkSource::Corridors(path) => manifest.record_input("corridors", path)?,
    }
    Ok(manifest)
}

fn cmd_build(cmd: BuildCmd) -> Result<()> {
    let out = cmd.out.resolve()?;
    prepare_output_dir(&out)?;
    let inputs = cmd.input.resolve()?;
    let net = load(&inputs)?;
    let bundle_dir = write_network_bundle(&out, &net)?;
    write_build_report(&out, net.report())?;
    let manifest = manifest_for("build", &inputs, default_manifest_params())?;
    write_manifest(&out, &manifest)?;
    println!("bundle written to {}", bundle_dir.display());
    Ok(())
}

fn cmd_baseline(cmd: RunCmd) -> Result<()> {
    let out = cmd.out.resolve()?;
    prepare_output_dir(&out)?;
    let inputs = cmd.input.resolve()?;
    let net = load(&inputs)?;
    let params = cmd.params.stress_params();
    let baseline = corridor_stress::stress::compute_baseline(&net, &params)?;
    let (loads, unassigned) = hospital_loads(&net, &baseline.assignment)?;
    write_baseline_files(&out, &net, &baseline, &loads, unassigned, params.speed_kmh)?;
    let manifest = manifest_for("baseline", &inputs, cmd.params.manifest_params())?;
    write_manifest(&out, &manifest)?;
    println!(
        "baseline: ha_total {} over dist_max {} km",
        fmt_sig6(baseline.ha_total),
        fmt_sig6(baseline.dist_max_km)
    );
    Ok(())
}

fn single_sweep(net: &CorridorNetwork, params: &ParamArgs) -> Result<SingleSweep> {
    let stress_params = params.stress_params();
    let started = Instant::now();
    let sweep = with_worker_pool(params.workers, || run_single_sweep(net, &stress_params))?;
    println!(
        "single sweep: {} corridors in {:.2} s",
        sweep.results.len(),
        started.elapsed().as_secs_f64()
    );
    Ok(sweep)
}

fn neighborhood_sweep(
    net: &CorridorNetwork,
    params: &ParamArgs,
) -> Result<Vec<NeighborhoodResult>> {
    let config = params.neighborhood_config();
    let started = Instant::now();
    let results = with_worker_pool(params.workers, || run_neighborhood_sweep(net, &config))?;
    println!(
        "neighborhood sweep: {} cells x {} replicates in {:.2} s",
        results.len(),
        config.replicates,
        started.elapsed().as_secs_f64()
    );
    Ok(results)
}

fn rank_tables(net: &CorridorNetwork, sweep: &SingleSweep) -> (RankTable, RankTable, RankTable) {
    let scores = |f: &dyn Fn(&corridor_stress::stress::SingleDeletionResult) -> f64| {
        sweep
            .results
            .iter()
            .map(|r| (net.corridor_id(r.corridor), f(r)))
            .collect::<Vec<_>>()
    };
    (
        RankTable::from_scores("acis", scores(&|r| r.score.acis)),
        RankTable::from_scores("ha_impact_pct", scores(&|r| r.score.ha_impact_pct)),
        RankTable::from_scores("betweenness", scores(&|r| r.score.betweenness)),
    )
}

fn cmd_stress_single(cmd: RunCmd) -> Result<()> {
    let out = cmd.out.resolve()?;
    prepare_output_dir(&out)?;
    let inputs = cmd.input.resolve()?;
    let net = load(&inputs)?;
    let sweep = single_sweep(&net, &cmd.params)?;
    let (acis_table, ha_table, betweenness_table) = rank_tables(&net, &sweep);
    write_corridor_rankings(&out, &net, &sweep, &acis_table, &ha_table, &betweenness_table)?;
    let acis_scores: Vec<f64> = sweep.results.iter().map(|r| r.score.acis).collect();
    write_ccdf(&out, &ccdf_points(&acis_scores)?)?;
    write_travel_time_impacts(&out, &net, &sweep, &cmd.params.thresholds_min)?;
    write_overlay_geojson(&out, &net, &sweep)?;
    let manifest = manifest_for("stress-single", &inputs, cmd.params.manifest_params())?;
    write_manifest(&out, &manifest)?;
    Ok(())
}

fn cmd_stress_neighborhood(cmd: RunCmd) -> Result<()> {
    let out = cmd.out.resolve()?;
    prepare_output_dir(&out)?;
    let inputs = cmd.input.resolve()?;
    let net = load(&inputs)?;
    let results = neighborhood_sweep(&net, &cmd.params)?;
    write_neighborhood_rankings(&out, &net, &results)?;
    let manifest = manifest_for("stress-neighborhood", &inputs, cmd.params.manifest_params())?;
    write_manifest(&out, &manifest)?;
    Ok(())
}

fn cmd_hospital_impact(cmd: RunCmd) -> Result<()> {
    let out = cmd.out.resolve()?;
    prepare_output_dir(&out)?;
    let inputs = cmd.input.resolve()?;
    let net = load(&inputs)?;
    let sweep = single_sweep(&net, &cmd.params)?;
    write_hospital_impact(&out, &net, &hospital_impact_table(&net, &sweep))?;
    write_hospital_frequency(&out, &net, &hospital_affect_frequency(&net, &sweep))?;
    let manifest = manifest_for("hospital-impact", &inputs, cmd.params.manifest_params())?;
    write_manifest(&out, &manifest)?;
    Ok(())
}

/// All pairwise comparisons among the selected single-sweep measures, plus
/// single-vs-neighborhood rows for each probability.
fn comparison_rows(
    net: &CorridorNetwork,
    sweep: &SingleSweep,
    neighborhood: &[NeighborhoodResult],
    measures: MeasureSelection,
    top_k: usize,
) -> Result<Vec<ComparisonRow>> {
    let ids: Vec<String> = sweep
        .results
        .iter()
        .map(|r| net.corridor_id(r.corridor))
        .collect();
    let acis: Vec<f64> = sweep.results.iter().map(|r| r.score.acis).collect();
    let ha: Vec<f64> = sweep.results.iter().map(|r| r.score.ha_impact_pct).collect();
    let betweenness: Vec<f64> = sweep.results.iter().map(|r| r.score.betweenness).collect();

    let mut columns: Vec<(&str, &[f64])> = Vec::new();
    if measures.includes(MeasureSelection::Acis) {
        columns.push(("acis", &acis));
    }
    if measures.includes(MeasureSelection::Ha) {
        columns.push(("ha_impact_pct", &ha));
    }
    if measures.includes(MeasureSelection::Betweenness) {
        columns.push(("betweenness", &betweenness));
    }

    // neighborhood aggregates compare against the single-deletion scores
    let mut neighborhood_columns: Vec<(String, Vec<f64>)> = Vec::new();
    if measures.includes(MeasureSelection::Acis) && !neighborhood.is_empty() {
        let mut probabilities: Vec<f64> = neighborhood.iter().map(|r| r.probability).collect();
        probabilities.sort_by(|a, b| a.total_cmp(b));
        probabilities.dedup();
        for &p in &probabilities {
            let mut mean = vec![0.0; sweep.results.len()];
            let mut p90 = vec![0.0; sweep.results.len()];
            for r in neighborhood.iter().filter(|r| r.probability == p) {
                mean[r.corridor] = r.acis_mean;
                p90[r.corridor] = r.acis_p90;
            }
            neighborhood_columns.push((format!("neighborhood_mean_p{}", fmt_sig6(p)), mean));
            neighborhood_columns.push((format!("neighborhood_p90_p{}", fmt_sig6(p)), p90));
        }
    }

    let table_of = |name: &str, scores: &[f64]| {
        RankTable::from_scores(
            name,
            ids.iter()
                .cloned()
                .zip(scores.iter().copied())
                .collect::<Vec<_>>(),
        )
    };
    let mut rows = Vec::new();
    let mut push_pair =
        |name_a: &str, scores_a: &[f64], name_b: &str, scores_b: &[f64]| -> Result<()> {
            let rho = match spearman_rho(scores_a, scores_b) {
                Ok(v) => Some(v),
                Err(StatsError::ZeroVariance) => None,
                Err(e) => return Err(anyhow!("comparison {name_a} vs {name_b}: {e}")),
            };
            let overlap =
                topk_overlap(&table_of(name_a, scores_a), &table_of(name_b, scores_b), top_k)
                    .with_context(|| format!("comparison {name_a} vs {name_b}"))?;
            rows.push(ComparisonRow {
                measure_a: name_a.to_string(),
                measure_b: name_b.to_string(),
                spearman_rho: rho,
                top_k_requested: overlap.requested_k,
                top_k_used: overlap.effective_k,
                topk_overlap: overlap.fraction,
            });
            Ok(())
        };

    for i in 0..columns.len() {
        for j in (i + 1)..columns.len() {
            push_pair(columns[i].0, columns[i].1, columns[j].0, columns[j].1)?;
        }
    }
    for (name, scores) in &neighborhood_columns {
        push_pair("acis", &acis, name, scores)?;
    }
    Ok(rows)
}

fn cmd_report(cmd: RunCmd) -> Result<()> {
    let out = cmd.out.resolve()?;
    prepare_output_dir(&out)?;
    let inputs = cmd.input.resolve()?;
    let net = load(&inputs)?;
    let sweep = single_sweep(&net, &cmd.params)?;
    let neighborhood = neighborhood_sweep(&net, &cmd.params)?;
    let rows = comparison_rows(&net, &sweep, &neighborhood, cmd.params.measures, cmd.params.top_k)?;
    write_comparison(&out, &rows)?;
    let acis_scores: Vec<f64> = sweep.results.iter().map(|r| r.score.acis).collect();
    write_ccdf(&out, &ccdf_points(&acis_scores)?)?;
    let manifest = manifest_for("report", &inputs, cmd.params.manifest_params())?;
    write_manifest(&out, &manifest)?;
    Ok(())
}

fn cmd_all(cmd: AllCmd) -> Result<()> {
    let out = cmd.out.resolve()?;
    prepare_output_dir(&out)?;

    let (inputs, params) = match &cmd.from_manifest {
        Some(path) => {
            let manifest = read_manifest(path)?;
            verify_inputs(&manifest)?;
            let municipalities = manifest
                .input_path("municipalities")
                .ok_or_else(|| anyhow!("manifest records no municipalities input"))?;
            let source = if let Some(roads) = manifest.input_path("roads") {
                NetworkSource::Roads(roads)
            } else if let Some(corridors) = manifest.input_path("corridors") {
                NetworkSource::Corridors(corridors)
            } else {
                bail!("manifest records neither roads nor corridors input");
            };
            (
                NetworkInputs {
                    municipalities,
                    source,
                },
                ParamArgs::from_manifest(&manifest.params, cmd.params.workers)?,
            )
        }
        None => (cmd.input.resolve()?, cmd.params.clone()),
    };

    let net = load(&inputs)?;
    write_network_bundle(&out, &net)?;
    write_build_report(&out, net.report())?;

    let sweep = single_sweep(&net, &params)?;
    let (loads, unassigned) = hospital_loads(&net, &sweep.baseline.assignment)?;
    write_baseline_files(&out, &net, &sweep.baseline, &loads, unassigned, params.speed_kmh)?;

    let (acis_table, ha_table, betweenness_table) = rank_tables(&net, &sweep);
    write_corridor_rankings(&out, &net, &sweep, &acis_table, &ha_table, &betweenness_table)?;
    let acis_scores: Vec<f64> = sweep.results.iter().map(|r| r.score.acis).collect();
    write_ccdf(&out, &ccdf_points(&acis_scores)?)?;
    write_travel_time_impacts(&out, &net, &sweep, &params.thresholds_min)?;
    write_overlay_geojson(&out, &net, &sweep)?;
    write_hospital_impact(&out, &net, &hospital_impact_table(&net, &sweep))?;
    write_hospital_frequency(&out, &net, &hospital_affect_frequency(&net, &sweep))?;

    let neighborhood = neighborhood_sweep(&net, &params)?;
    write_neighborhood_rankings(&out, &net, &neighborhood)?;

    let rows = comparison_rows(&net, &sweep, &neighborhood, params.measures, params.top_k)?;
    write_comparison(&out, &rows)?;

    let manifest = manifest_for("all", &inputs, params.manifest_params())?;
    write_manifest(&out, &manifest)?;
    println!("all outputs written to {}", out.display());
    Ok(())
}

fn cmd_synth(cmd: SynthCmd) -> Result<()> {
    let out = cmd.out.resolve()?;
    prepare_output_dir(&out)?;
    let params = SynthParams {
        nodes: cmd.nodes,
        hospital_fraction: cmd.hospital_fraction,
        seed: cmd.seed,
        valley_fraction: cmd.valley_fraction,
        shortcut_fraction: cmd.shortcut_fraction,
    };
    let synth = generate(&params);
    io::write_synth_inputs(&out, &synth)?;

    let mut manifest = RunManifest::new("synth", default_manifest_params());
    manifest.params.seed = params.seed;
    manifest.synth = Some(params);
    manifest.record_input("municipalities", &out.join("municipalities.csv"))?;
    manifest.record_input("roads", &out.join("roads.csv"))?;
    write_manifest(&out, &manifest)?;

    let s = &synth.summary;
    println!(
        "synthetic network: {} municipalities ({} hospitals), {} corridors \
         ({} valley chains), {} road segments",
        synth.municipalities.len(),
        s.hospitals,
        s.corridors,
        s.valley_chains,
        s.roads
    );
    Ok(())
}
