use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use tracetopk::analysis::{ad_diff, k_avg, predict_pe, predict_pe_analytic, tree_bucket_weights, PEConfig, RankedList};
use tracetopk::bench::{measure_point, time_update_mix};
use tracetopk::engine::Engine;
use tracetopk::mobility::{generate_corpus, Corpus, IMParams, UNIT_SECONDS};
use tracetopk::persist::{index_to_bytes, load_index, parse_traces, save_index, Dataset, TraceFormat};
use tracetopk::query::brute_force_topk;
use tracetopk::{GridHierarchyConfig, HashFamily, Measure, MinSigTree, QueryResult, SpIndex, Variant};

#[derive(Parser, Debug)]
#[command(name = "tracetopk", version, about = "Top-k association queries over digital traces")]
struct Cli {
    /// Master seed; every random component derives its stream from it.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Number of hash functions n_h. Commands that load an index default to
    /// the index's own value.
    #[arg(long, global = true)]
    hashes: Option<usize>,
    /// Keep every node's full group signature, not just its routing value.
    #[arg(long, global = true)]
    store_full_signatures: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a synthetic corpus and its grid hierarchy.
    Generate(GenerateArgs),
    /// Convert a trace file into the canonical binary dataset.
    Ingest(IngestArgs),
    /// Build and save a MinSigTree index for a dataset.
    Build(BuildArgs),
    /// Answer top-k queries from a saved index.
    Query(QueryArgs),
    /// Replace or add entity traces in a dataset and its index.
    Update(UpdateArgs),
    /// Sweep index and corpus parameters and report pruning and costs.
    Bench(BenchArgs),
    /// Predict pruning effectiveness from the analytic model.
    PredictPe(PredictArgs),
    /// Compare top-k answers of different measures.
    CompareMeasures(CompareArgs),
}

#[derive(Args, Debug, Clone, serde::Serialize)]
struct ImArgs {
    #[arg(long, default_value_t = 0.6)]
    alpha: f64,
    #[arg(long, default_value_t = 0.8)]
    beta: f64,
    #[arg(long, default_value_t = 0.2)]
    gamma: f64,
    #[arg(long, default_value_t = 0.6)]
    rho: f64,
    #[arg(long, default_value_t = 1.2)]
    zeta: f64,
    /// Longest dwell in hours.
    #[arg(long, default_value_t = 24)]
    max_dwell: u32,
    /// Simulated hours per entity.
    #[arg(long, default_value_t = 72)]
    duration: u32,
    /// Simulated days per entity; overrides --duration.
    #[arg(long)]
    days: Option<u32>,
    /// Area and base-unit side lengths as `L,Lbsu`; overrides --side-length and --base-side.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(u32, u32)>,
    /// Side length of the area.
    #[arg(long, default_value_t = 32)]
    side_length: u32,
    /// Side length of a base unit.
    #[arg(long, default_value_t = 1)]
    base_side: u32,
    /// Hierarchy levels m.
    #[arg(long, default_value_t = 4)]
    levels: usize,
    /// Width exponent a.
    #[arg(long, alias = "a", default_value_t = 2.0)]
    width_exponent: f64,
    /// Density exponent b.
    #[arg(long, alias = "b", default_value_t = 2.0)]
    density_exponent: f64,
}

impl ImArgs {
    fn params(&self) -> IMParams {
        IMParams {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            rho: self.rho,
            zeta: self.zeta,
            max_dwell: self.max_dwell,
            duration: self.days.map_or(self.duration, |d| d * 24),
        }
    }

    fn grid(&self) -> GridHierarchyConfig {
        GridHierarchyConfig {
            side_length: self.grid.map_or(self.side_length, |g| g.0),
            base_side: self.grid.map_or(self.base_side, |g| g.1),
            levels: self.levels,
            width_exponent: self.width_exponent,
            density_exponent: self.density_exponent,
        }
    }

    /// Sets one sweepable parameter by name.
    fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "alpha" => self.alpha = value,
            "beta" => self.beta = value,
            "gamma" => self.gamma = value,
            "rho" => self.rho = value,
            "zeta" => self.zeta = value,
            "a" | "width_exponent" => self.width_exponent = value,
            "b" | "density_exponent" => self.density_exponent = value,
            "m" | "levels" => self.levels = value as usize,
            "duration" => {
                self.duration = value as u32;
                self.days = None;
            }
            other => bail!("unknown sweep parameter `{other}`"),
        }
        Ok(())
    }
}

fn parse_grid(s: &str) -> std::result::Result<(u32, u32), String> {
    let (l, b) = s.split_once(',').ok_or("expected L,Lbsu")?;
    let num = |x: &str| x.trim().parse::<u32>().map_err(|e| format!("`{x}`: {e}"));
    Ok((num(l)?, num(b)?))
}

#[derive(Args, Debug, Clone, serde::Serialize)]
struct MeasureArgs {
    /// adm, dice, jaccard or cosine.
    #[arg(long, default_value = "adm")]
    measure: String,
    /// Level exponent u.
    #[arg(long, default_value_t = 1.0)]
    u: f64,
    /// Overlap exponent v (adm only).
    #[arg(long, default_value_t = 1.0)]
    v: f64,
    /// Explicit comma-separated level weights for dice/jaccard/cosine.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
}

impl MeasureArgs {
    fn build(&self, m: usize) -> Result<Measure> {
        let variant: Variant = self.measure.parse()?;
        Ok(Measure::from_options(variant, m, self.u, self.v, self.weights.clone())?)
    }
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, default_value_t = 10_000)]
    entities: usize,
    /// Trace output; `.csv` writes CSV, anything else JSON lines.
    #[arg(long)]
    out: PathBuf,
    /// Hierarchy CSV output.
    #[arg(long)]
    hierarchy_out: PathBuf,
    /// Also write the canonical dataset here.
    #[arg(long)]
    dataset_out: Option<PathBuf>,
    #[command(flatten)]
    im: ImArgs,
}

#[derive(Args, Debug)]
struct IngestArgs {
    #[arg(long)]
    traces: PathBuf,
    #[arg(long)]
    hierarchy: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Seconds per temporal unit.
    #[arg(long, default_value_t = UNIT_SECONDS)]
    unit_seconds: i64,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Hash range; defaults to base units times temporal units.
    #[arg(long)]
    range: Option<u64>,
}

#[derive(Args, Debug)]
struct QueryArgs {
    /// The dataset the index was built from.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    index: PathBuf,
    /// Query entity names; repeatable.
    #[arg(long = "entity")]
    entities: Vec<String>,
    /// Sample this many query entities instead.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[command(flatten)]
    measure: MeasureArgs,
    /// Hits as CSV (query_id,query,rank,entity,degree); stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-query statistics CSV.
    #[arg(long, alias = "stats-out")]
    stats: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct UpdateArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    index: PathBuf,
    /// Replacement traces; each entity named here gets exactly these records.
    #[arg(long)]
    traces: PathBuf,
    #[arg(long)]
    dataset_out: PathBuf,
    #[arg(long)]
    index_out: PathBuf,
    /// Apply all updates in one batch instead of one by one.
    #[arg(long)]
    bulk: bool,
    /// Recompute node values loosened by removals before saving.
    #[arg(long)]
    refresh: bool,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = 10_000)]
    entities: usize,
    #[arg(long, value_delimiter = ',', default_value = "8,64,256,1024,2048")]
    nh: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "10")]
    k: Vec<usize>,
    /// Queries per grid point.
    #[arg(long, default_value_t = 100)]
    queries: usize,
    /// Sweep one corpus parameter, e.g. `alpha=0.2,0.4,0.6`. Sweepable:
    /// alpha beta gamma rho zeta a b m duration.
    #[arg(long)]
    sweep: Option<String>,
    /// Entities per update batch; 0 skips update timing.
    #[arg(long, default_value_t = 200)]
    update_batch: usize,
    /// Shares of existing entities in the update batches.
    #[arg(long, value_delimiter = ',', default_value = "1.0,0.7,0.4")]
    mixes: Vec<f64>,
    #[command(flatten)]
    im: ImArgs,
    #[command(flatten)]
    measure: MeasureArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, serde::Serialize)]
struct PredictArgs {
    /// Base units.
    #[arg(long)]
    n: u64,
    /// Temporal units.
    #[arg(long)]
    t: u64,
    /// Finest-level cells per entity.
    #[arg(long)]
    trace_size: usize,
    /// Sub-ranges of the routing-value histogram.
    #[arg(long, default_value_t = 64)]
    nr: usize,
    /// Overlap needed to reach the k-th degree.
    #[arg(long)]
    nc: usize,
    /// k-th best degree.
    #[arg(long)]
    de: f64,
    /// Also predict from this index's routing-value histogram.
    #[arg(long)]
    index: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Dataset file.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "10")]
    k: Vec<usize>,
    /// Colon-separated measures; the first is the reference.
    #[arg(long, default_value = "adm:dice:jaccard:cosine")]
    measures: String,
    #[arg(long, default_value_t = 1.0)]
    u: f64,
    #[arg(long, default_value_t = 1.0)]
    v: f64,
    #[arg(long, default_value_t = 100)]
    queries: usize,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring thread pool")?;
    }
    match &cli.cmd {
        Command::Generate(a) => generate(&cli, a),
        Command::Ingest(a) => ingest(&cli, a),
        Command::Build(a) => build(&cli, a),
        Command::Query(a) => query(&cli, a),
        Command::Update(a) => update(&cli, a),
        Command::Bench(a) => bench(&cli, a),
        Command::PredictPe(a) => predict(&cli, a),
        Command::CompareMeasures(a) => compare(&cli, a),
    }
}

fn globals(cli: &Cli) -> Value {
    json!({
        "seed": cli.seed,
        "threads": cli.threads.unwrap_or_else(rayon::current_num_threads),
        "hashes": cli.hashes,
        "store_full_signatures": cli.store_full_signatures,
    })
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Writes `<out>.manifest.json` echoing the resolved configuration.
fn write_manifest(cli: &Cli, out: &Path, command: &str, config: Value, results: Value) -> Result<()> {
    let m = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "globals": globals(cli),
        "config": config,
        "results": results,
    });
    let path = manifest_path(out);
    std::fs::write(&path, serde_json::to_string_pretty(&m)?).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn corpus_dataset(corpus: &Corpus) -> Result<Dataset> {
    let records = corpus.records().into_iter().enumerate().map(|(i, r)| (i + 1, r)).collect();
    Ok(Dataset::from_records(records, corpus.index.clone(), UNIT_SECONDS)?)
}

fn generate(cli: &Cli, a: &GenerateArgs) -> Result<()> {
    let params = a.im.params();
    params.validate()?;
    let corpus = generate_corpus(a.entities, &params, &a.im.grid(), cli.seed)?;
    let records = corpus.records();
    let mut w = BufWriter::new(File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?);
    match TraceFormat::from_path(&a.out) {
        TraceFormat::Csv => {
            let mut csv = csv::Writer::from_writer(w);
            for r in &records {
                csv.serialize(r)?;
            }
            csv.flush()?;
        }
        TraceFormat::JsonLines => {
            corpus.write_jsonl(&mut w)?;
            w.flush()?;
        }
    }
    std::fs::write(&a.hierarchy_out, corpus.index.to_csv())?;
    if let Some(path) = &a.dataset_out {
        corpus_dataset(&corpus)?.save(path)?;
    }
    let config = json!({
        "entities": a.entities,
        "im": params,
        "grid": a.im.grid(),
        "out": a.out,
        "hierarchy_out": a.hierarchy_out,
        "dataset_out": a.dataset_out,
    });
    write_manifest(cli, &a.out, "generate", config, json!({ "records": records.len(), "levels": corpus.index.height() }))?;
    eprintln!("wrote {} records for {} entities", records.len(), a.entities);
    Ok(())
}

fn ingest(cli: &Cli, a: &IngestArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.hierarchy).with_context(|| format!("reading {}", a.hierarchy.display()))?;
    let index = SpIndex::from_csv(&text)?;
    let reader = BufReader::new(File::open(&a.traces).with_context(|| format!("opening {}", a.traces.display()))?);
    let ds = Dataset::ingest(reader, TraceFormat::from_path(&a.traces), index, a.unit_seconds)?;
    ds.save(&a.out)?;
    let results = json!({ "entities": ds.entities.len(), "records": ds.record_count(), "fingerprint": ds.fingerprint() });
    write_manifest(cli, &a.out, "ingest", json!({ "traces": a.traces, "hierarchy": a.hierarchy, "unit_seconds": a.unit_seconds }), results)?;
    eprintln!("ingested {} entities, {} records", ds.entities.len(), ds.record_count());
    Ok(())
}

fn build(cli: &Cli, a: &BuildArgs) -> Result<()> {
    let ds = Dataset::load(&a.dataset)?;
    let seqs = ds.sequences()?;
    let (n, t) = Engine::cell_space(&ds.index, &seqs);
    let range = a.range.unwrap_or(n * t);
    let n_h = cli.hashes.unwrap_or(64);
    let family = HashFamily::new(n_h, cli.seed, range)?;
    let m = ds.index.height();
    let start = Instant::now();
    let engine = Engine::build(ds.index.clone(), seqs, family, Measure::adm(m, 1.0, 1.0)?, cli.store_full_signatures)?;
    let build_millis = start.elapsed().as_secs_f64() * 1e3;
    let fingerprint = ds.fingerprint();
    save_index(&engine.tree, fingerprint, &a.out)?;
    let bytes = std::fs::metadata(&a.out)?.len();
    let results = json!({
        "entities": engine.tree.entity_count(),
        "nodes": engine.tree.node_count(),
        "build_millis": build_millis,
        "index_bytes": bytes,
        "dataset_fingerprint": fingerprint,
    });
    write_manifest(cli, &a.out, "build", json!({ "dataset": a.dataset, "n_h": n_h, "range": range }), results)?;
    eprintln!("built index: {} nodes, {} bytes, {:.1} ms", engine.tree.node_count(), bytes, build_millis);
    Ok(())
}

/// Loads a dataset and an index built from it, checking the fingerprint and
/// that the hash family given by the global flags matches the index.
fn load_engine(cli: &Cli, dataset: &Path, index: &Path, measure: &MeasureArgs) -> Result<(Dataset, Engine)> {
    let ds = Dataset::load(dataset)?;
    let (tree, header) = load_index(index)?;
    if header.dataset_fingerprint != ds.fingerprint() {
        bail!(
            "index {} was built from a different dataset (fingerprint {:#010x}, dataset has {:#010x})",
            index.display(),
            header.dataset_fingerprint,
            ds.fingerprint()
        );
    }
    let family = HashFamily::new(cli.hashes.unwrap_or(header.n_h), cli.seed, header.range)?;
    let m = ds.index.height();
    let engine = Engine::with_tree(ds.index.clone(), ds.sequences()?, family, measure.build(m)?, tree)?;
    Ok((ds, engine))
}

fn query(cli: &Cli, a: &QueryArgs) -> Result<()> {
    let (ds, engine) = load_engine(cli, &a.dataset, &a.index, &a.measure)?;
    let ids = match (a.sample, a.entities.is_empty()) {
        (Some(n), true) => engine.sample_queries(n, cli.seed),
        (None, false) => a
            .entities
            .iter()
            .map(|name| ds.entity_id(name).with_context(|| format!("unknown entity `{name}`")))
            .collect::<Result<_>>()?,
        _ => bail!("give either --entity (repeatable) or --sample"),
    };
    let results = engine.query_many(&ids, a.k)?;
    let sink: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["query_id", "query", "rank", "entity", "degree"])?;
    for (qi, (&q, r)) in ids.iter().zip(&results).enumerate() {
        for (rank, h) in r.hits.iter().enumerate() {
            w.write_record([
                qi.to_string(),
                ds.entities[q as usize].name.clone(),
                (rank + 1).to_string(),
                ds.entities[h.entity as usize].name.clone(),
                h.degree.to_string(),
            ])?;
        }
    }
    w.flush()?;
    if let Some(p) = &a.stats {
        write_stats(p, a.k, &results)?;
    }
    if let Some(out) = &a.out {
        let mean_pe = results.iter().map(|r| r.stats.pe).sum::<f64>() / results.len().max(1) as f64;
        let config = json!({ "dataset": a.dataset, "index": a.index, "k": a.k, "measure": a.measure, "queries": ids.len() });
        write_manifest(cli, out, "query", config, json!({ "mean_pe": mean_pe }))?;
    }
    Ok(())
}

fn write_stats(path: &Path, k: usize, results: &[QueryResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["query_id", "k", "entities_examined", "nodes_visited", "pe", "wall_micros"])?;
    for (i, r) in results.iter().enumerate() {
        let s = &r.stats;
        w.write_record([
            i.to_string(),
            k.to_string(),
            s.entities_examined.to_string(),
            s.nodes_visited.to_string(),
            s.pe.to_string(),
            s.wall_micros.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn update(cli: &Cli, a: &UpdateArgs) -> Result<()> {
    let (mut ds, mut engine) = load_engine(cli, &a.dataset, &a.index, &MeasureArgs {
        measure: "adm".into(),
        u: 1.0,
        v: 1.0,
        weights: None,
    })?;
    let reader = BufReader::new(File::open(&a.traces).with_context(|| format!("opening {}", a.traces.display()))?);
    let records = parse_traces(reader, TraceFormat::from_path(&a.traces), ds.unit_seconds)?;
    let before = ds.entities.len();
    let ids = ds.upsert(records)?;
    let added = ds.entities.len() - before;
    let mut updates: Vec<_> = ids.iter().map(|&e| Ok((e, ds_sequence(&ds, e)?))).collect::<Result<_>>()?;
    updates.sort_by_key(|u| u.0);
    let start = Instant::now();
    let stats = if a.bulk {
        engine.upsert_many(updates)?
    } else {
        let mut total = tracetopk::tree::UpdateStats::default();
        for (e, seq) in updates {
            total += engine.upsert(e, seq)?;
        }
        total
    };
    let refreshed = if a.refresh { engine.refresh()? } else { 0 };
    let micros = start.elapsed().as_micros();
    ds.save(&a.dataset_out)?;
    save_index(&engine.tree, ds.fingerprint(), &a.index_out)?;
    let results = json!({
        "updated": ids.len() - added,
        "added": added,
        "nodes_touched": stats.nodes_touched,
        "nodes_created": stats.nodes_created,
        "nodes_removed": stats.nodes_removed,
        "nodes_refreshed": refreshed,
        "micros": micros,
    });
    let config = json!({ "dataset": a.dataset, "index": a.index, "traces": a.traces, "bulk": a.bulk, "refresh": a.refresh });
    write_manifest(cli, &a.index_out, "update", config, results.clone())?;
    println!("{}", serde_json::to_string_pretty(&results)?);
    Ok(())
}

fn ds_sequence(ds: &Dataset, e: u32) -> Result<tracetopk::CellSequence> {
    let cells = ds.base_cells(e as usize)?;
    Ok(tracetopk::traces::lift_sequence(&ds.entities[e as usize].name, &cells, &ds.index)?)
}

fn parse_sweep(spec: &str) -> Result<(String, Vec<f64>)> {
    let (name, values) = spec.split_once('=').context("sweep must look like name=v1,v2,...")?;
    let values = values.split(',').map(|v| v.trim().parse::<f64>().with_context(|| format!("bad sweep value `{v}`"))).collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        bail!("empty sweep");
    }
    Ok((name.trim().to_string(), values))
}

fn bench(cli: &Cli, a: &BenchArgs) -> Result<()> {
    let sweep = a.sweep.as_deref().map(parse_sweep).transpose()?;
    if let Some(&k) = a.k.iter().find(|&&k| k == 0 || k >= a.entities) {
        bail!("k = {k} is infeasible for {} entities", a.entities);
    }
    let points: Vec<(Option<f64>, ImArgs)> = match &sweep {
        Some((name, values)) => values
            .iter()
            .map(|&v| {
                let mut im = a.im.clone();
                im.set(name, v)?;
                Ok((Some(v), im))
            })
            .collect::<Result<_>>()?,
        None => vec![(None, a.im.clone())],
    };
    let mut w = csv::Writer::from_path(&a.out)?;
    w.write_record([
        "sweep_param",
        "sweep_value",
        "n_h",
        "k",
        "queries",
        "mean_pe",
        "pe_std_err",
        "p50_micros",
        "p95_micros",
        "build_millis",
        "index_bytes",
        "dataset_bytes",
        "update_mix",
        "update_batch",
        "update_micros",
        "update_tree_micros",
    ])?;
    let mut rows = Vec::new();
    for (pi, (value, im)) in points.iter().enumerate() {
        let params = im.params();
        params.validate()?;
        let corpus = generate_corpus(a.entities, &params, &im.grid(), cli.seed)?;
        let ds = corpus_dataset(&corpus)?;
        let dataset_bytes = ds.to_bytes().len();
        let seqs = corpus.sequences();
        let (n, t) = Engine::cell_space(&corpus.index, &seqs);
        let measure = a.measure.build(corpus.index.height())?;
        for &n_h in &a.nh {
            let family = HashFamily::new(n_h, cli.seed, n * t)?;
            let start = Instant::now();
            let mut engine = Engine::build(corpus.index.clone(), seqs.clone(), family, measure.clone(), cli.store_full_signatures)?;
            let build_millis = start.elapsed().as_secs_f64() * 1e3;
            let index_bytes = index_to_bytes(&engine.tree, 0).len();
            let point_seed = tracetopk::seed::derive_seed(cli.seed, "bench-point", pi as u64);
            let mut base = vec![
                sweep.as_ref().map_or(String::new(), |s| s.0.clone()),
                value.map_or(String::new(), |v| v.to_string()),
                n_h.to_string(),
            ];
            for &k in &a.k {
                let p = measure_point(&engine, k, a.queries, point_seed)?;
                let mut row = base.clone();
                row.extend([
                    k.to_string(),
                    p.queries.to_string(),
                    p.mean_pe.to_string(),
                    p.std_err.to_string(),
                    p.p50_micros.to_string(),
                    p.p95_micros.to_string(),
                    format!("{build_millis:.3}"),
                    index_bytes.to_string(),
                    dataset_bytes.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ]);
                w.write_record(&row)?;
                rows.push(json!({ "sweep_value": value, "n_h": n_h, "point": p, "build_millis": build_millis, "index_bytes": index_bytes }));
                eprintln!("n_h={n_h} k={k} value={value:?} pe={:.4}", p.mean_pe);
            }
            if a.update_batch > 0 {
                base.extend(std::iter::repeat_n(String::new(), 9));
                for (mi, &mix) in a.mixes.iter().enumerate() {
                    let u = time_update_mix(&mut engine, &params, mix, a.update_batch, tracetopk::seed::derive_seed(point_seed, "mix", mi as u64))?;
                    let mut row = base.clone();
                    row.extend([mix.to_string(), a.update_batch.to_string(), u.micros.to_string(), u.tree_micros.to_string()]);
                    w.write_record(&row)?;
                    rows.push(json!({ "sweep_value": value, "n_h": n_h, "update": u }));
                }
            }
            w.flush()?;
        }
    }
    let config = json!({
        "entities": a.entities,
        "nh": a.nh,
        "k": a.k,
        "queries": a.queries,
        "sweep": a.sweep,
        "update_batch": a.update_batch,
        "mixes": a.mixes,
        "corpus": a.im,
        "measure": a.measure,
    });
    write_manifest(cli, &a.out, "bench", config, Value::Array(rows))?;
    Ok(())
}

fn predict(cli: &Cli, a: &PredictArgs) -> Result<()> {
    let n_h = cli.hashes.unwrap_or(64);
    let cfg = PEConfig { n: a.n, t: a.t, n_h, trace_size: a.trace_size, n_r: a.nr, n_c: a.nc, d_e: a.de };
    cfg.validate()?;
    let analytic = predict_pe_analytic(&cfg)?;
    let from_tree = match &a.index {
        Some(p) => {
            let (tree, header): (MinSigTree, _) = load_index(p)?;
            if header.n_h != n_h {
                bail!("index has n_h = {}, prediction asked for {n_h}", header.n_h);
            }
            Some(predict_pe(&cfg, &tree_bucket_weights(&tree, a.nr)?)?)
        }
        None => None,
    };
    println!("{}", serde_json::to_string_pretty(&json!({ "config": cfg, "predicted_pe": analytic, "predicted_pe_tree": from_tree }))?);
    Ok(())
}

fn compare(cli: &Cli, a: &CompareArgs) -> Result<()> {
    let ds = Dataset::load(&a.corpus)?;
    let seqs = ds.sequences()?;
    let m = ds.index.height();
    let variants: Vec<Variant> = a.measures.split(':').map(str::parse).collect::<std::result::Result<_, _>>()?;
    if variants.len() < 2 {
        bail!("need at least two measures to compare");
    }
    let measures: Vec<Measure> = variants.iter().map(|&v| Measure::from_options(v, m, a.u, a.v, None)).collect::<std::result::Result<_, _>>()?;
    let live: Vec<u32> = (0..seqs.len()).filter(|&i| !seqs[i].is_empty()).map(|i| i as u32).collect();
    let picks = {
        use rand::seq::index::sample;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cli.seed);
        let mut p: Vec<u32> = sample(&mut rng, live.len(), a.queries.min(live.len())).into_iter().map(|i| live[i]).collect();
        p.sort_unstable();
        p
    };
    let mut w = csv::Writer::from_path(&a.out)?;
    w.write_record(["reference", "measure", "k", "queries", "k_avg", "ad_diff"])?;
    let mut rows = Vec::new();
    for &k in &a.k {
        let answers: Vec<Vec<RankedList>> = measures
            .iter()
            .map(|me| {
                use rayon::prelude::*;
                picks
                    .par_iter()
                    .map(|&q| Ok(RankedList::new(brute_force_topk(&seqs, &seqs[q as usize], Some(q), k, me)?.hits)?))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        for j in 1..measures.len() {
            let (mut ka, mut ad) = (0.0, 0.0);
            for (r, o) in answers[0].iter().zip(&answers[j]) {
                ka += k_avg(r, o)?;
                ad += ad_diff(r, o)?;
            }
            let q = picks.len() as f64;
            let (ka, ad) = (ka / q, ad / q);
            w.write_record([variants[0].to_string(), variants[j].to_string(), k.to_string(), picks.len().to_string(), ka.to_string(), ad.to_string()])?;
            rows.push(json!({ "reference": variants[0].to_string(), "measure": variants[j].to_string(), "k": k, "k_avg": ka, "ad_diff": ad }));
        }
    }
    w.flush()?;
    let config = json!({ "corpus": a.corpus, "k": a.k, "measures": a.measures, "u": a.u, "v": a.v, "queries": a.queries });
    write_manifest(cli, &a.out, "compare-measures", config, Value::Array(rows))?;
    Ok(())
}
