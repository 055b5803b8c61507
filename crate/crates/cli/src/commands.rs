use std::collections::BTreeSet;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use pathgpt::corpus::{build_corpus, parse_trajectories, split_held_out, AddressBook, SkipReport, Trajectory};
use pathgpt::eval::{
    evaluate_system, make_samples, read_samples, recommend, sample_connected_pairs, trajectory_ods, write_samples,
    EvalConfig, LatencyReport, Pipeline,
};
use pathgpt::llm::{augment_query, Query};
use pathgpt::retrieval::{retrieve, KnowledgeBase, RetrievalQuery, CORPUS_FILE};
use pathgpt::roadnet::{load_network, load_pois, Coord, NodeId, Poi, RoadNetError, RoadNetwork};
use pathgpt::synth::{CityParams, SyntheticCity};

use crate::config::{Config, OdSource};
use crate::{Cli, Command, EvaluateArgs, GenTruthArgs, OdArgs, RecommendArgs, RetrieveArgs, SynthArgs};

/// Terminal domain failure: no route between the requested endpoints.
#[derive(Debug)]
pub struct NoRoute(pub String);

impl fmt::Display for NoRoute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NoRoute {}

pub fn run(cli: &Cli) -> Result<()> {
    if let Command::SynthCity(args) = &cli.command {
        return synth_city(cli, args);
    }
    let mut config = Config::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let ctx = Ctx::new(cli, config);
    match &cli.command {
        Command::BuildKb => build_kb(&ctx),
        Command::Retrieve(a) => retrieve_cmd(&ctx, a),
        Command::Recommend(a) => recommend_cmd(&ctx, a),
        Command::GenTruth(a) => gen_truth(&ctx, a),
        Command::Evaluate(a) => evaluate(&ctx, a),
        Command::Report => report(&ctx),
        Command::SynthCity(_) => unreachable!(),
    }
}

struct Ctx {
    config: Config,
    out: PathBuf,
    jobs: usize,
}

impl Ctx {
    fn new(cli: &Cli, config: Config) -> Self {
        let out = cli.out.clone().unwrap_or_else(|| config.kb_dir.clone());
        let jobs = cli
            .jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1);
        Self { config, out, jobs }
    }

    fn network(&self) -> Result<RoadNetwork> {
        let p = &self.config.network_path;
        require(p)?;
        load_network(p).with_context(|| format!("cannot load network {}", p.display()))
    }

    fn pois(&self) -> Result<Vec<Poi>> {
        let p = &self.config.poi_path;
        require(p)?;
        load_pois(p).with_context(|| format!("cannot load POIs {}", p.display()))
    }

    fn addresses(&self) -> Result<AddressBook> {
        let p = &self.config.address_book_path;
        AddressBook::parse(&read(p)?).with_context(|| format!("invalid address book {}", p.display()))
    }

    fn trajectories(&self, p: &Path) -> Result<Vec<Trajectory>> {
        parse_trajectories(&read(p)?).with_context(|| format!("invalid trajectory file {}", p.display()))
    }

    /// Indices of `trajectory_path` held out by the configured fraction.
    fn held_out_indices(&self, count: usize) -> BTreeSet<usize> {
        split_held_out(count, self.config.held_out_fraction, self.config.seed)
    }

    fn kb(&self) -> Result<KnowledgeBase> {
        let dir = &self.config.kb_dir;
        if !dir.join(CORPUS_FILE).is_file() {
            bail!("no knowledge base in {}; run build-kb first", dir.display());
        }
        KnowledgeBase::load(dir).with_context(|| format!("cannot load knowledge base {}", dir.display()))
    }

    fn create_out(&self) -> Result<()> {
        fs::create_dir_all(&self.out).with_context(|| format!("cannot create {}", self.out.display()))
    }
}

fn require(p: &Path) -> Result<()> {
    if !p.is_file() {
        bail!("missing input file {}", p.display());
    }
    Ok(())
}

fn read(p: &Path) -> Result<String> {
    require(p)?;
    fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))
}

fn write(p: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(p, contents).with_context(|| format!("cannot write {}", p.display()))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Contents of `build_summary.json`.
#[derive(Debug, Serialize)]
struct BuildSummary {
    trajectories: usize,
    documents: usize,
    held_out: Vec<usize>,
    skips: SkipReport,
}

fn build_kb(ctx: &Ctx) -> Result<()> {
    let c = &ctx.config;
    let network = ctx.network()?;
    require(&c.poi_path)?;
    let book = ctx.addresses()?;
    let trajectories = ctx.trajectories(&c.trajectory_path)?;
    let held_out = ctx.held_out_indices(trajectories.len());
    let corpus = build_corpus(&network, &trajectories, &book, &held_out);
    if corpus.documents.is_empty() {
        bail!("no valid trajectories in {}", c.trajectory_path.display());
    }
    log::info!("{} documents, embedding with {:?}", corpus.documents.len(), c.embedding.provider);
    let embedder = c.embedder();
    let kb = KnowledgeBase::build(corpus.documents, c.bm25(), embedder.as_ref()).context("cannot build knowledge base")?;
    ctx.create_out()?;
    kb.save(&ctx.out)
        .with_context(|| format!("cannot write knowledge base to {}", ctx.out.display()))?;
    let summary = BuildSummary {
        trajectories: trajectories.len(),
        documents: kb.len(),
        held_out: held_out.into_iter().collect(),
        skips: corpus.skips,
    };
    write(&ctx.out.join("build_summary.json"), to_json(&summary))?;
    let s = &summary.skips;
    println!(
        "corpus: {} documents from {} trajectories",
        summary.documents, summary.trajectories
    );
    println!(
        "skipped: {} invalid ({} discontiguous, {} unreachable), {} duplicate OD, {} held out",
        s.invalid(),
        s.discontiguous,
        s.unreachable,
        s.duplicate_od,
        s.held_out
    );
    println!("knowledge base written to {}", ctx.out.display());
    Ok(())
}

fn parse_coord(s: &str) -> Result<Coord> {
    let (lat, lon) = s.split_once(',').with_context(|| format!("expected lat,lon, got {s:?}"))?;
    let lat: f64 = lat.trim().parse().with_context(|| format!("bad latitude in {s:?}"))?;
    let lon: f64 = lon.trim().parse().with_context(|| format!("bad longitude in {s:?}"))?;
    Ok(Coord::new(lat, lon))
}

fn endpoint(network: &RoadNetwork, id: Option<u64>, coord: Option<&str>, which: &str) -> Result<NodeId> {
    match (id, coord) {
        (Some(id), _) => {
            let node = NodeId(id);
            if !network.contains_node(node) {
                bail!("unknown {which} node {id}");
            }
            Ok(node)
        }
        (None, Some(c)) => Ok(network.nearest_node(parse_coord(c)?)?),
        (None, None) => bail!("give --{which} or a coordinate"),
    }
}

fn query(network: &RoadNetwork, od: &OdArgs) -> Result<Query> {
    let o = endpoint(network, od.origin, od.from.as_deref(), "origin")?;
    let d = endpoint(network, od.destination, od.to.as_deref(), "destination")?;
    Ok(Query::new(o, d, od.constraints.clone())?)
}

fn retrieve_cmd(ctx: &Ctx, a: &RetrieveArgs) -> Result<()> {
    let c = &ctx.config;
    let kb = ctx.kb()?;
    let rq = match &a.query {
        Some(text) => RetrievalQuery::plain(text.clone()),
        None => {
            let network = ctx.network()?;
            let q = query(&network, &a.od)?;
            let aug = augment_query(&q, &network, &ctx.addresses()?);
            RetrievalQuery {
                lexical: aug.body.clone(),
                semantic: aug.text(),
            }
        }
    };
    let embedder = c.embedder();
    let k = a.k.unwrap_or(c.retrieval.k);
    let k_prime = a.k_prime.unwrap_or(c.retrieval.k_prime);
    let r = retrieve(&kb, embedder.as_ref(), &rq, k_prime, k)?;
    println!("bm25 candidates: {}", r.candidates.0.len());
    for (rank, s) in r.result.0.iter().enumerate() {
        let doc = kb.document(s.doc).expect("retrieved document exists");
        println!("{:>2}. doc {} cosine {:.6}  {}", rank + 1, s.doc, s.score, doc.text);
    }
    Ok(())
}

fn recommend_cmd(ctx: &Ctx, a: &RecommendArgs) -> Result<()> {
    let c = &ctx.config;
    let network = ctx.network()?;
    let book = ctx.addresses()?;
    let kb = ctx.kb()?;
    let q = query(&network, &a.od)?;
    let embedder = c.embedder();
    let provider = c.provider();
    let pipeline = Pipeline {
        kb: &kb,
        network: &network,
        addresses: &book,
        embedder: embedder.as_ref(),
        provider: provider.as_ref(),
    };
    let k = a.k.unwrap_or(c.retrieval.k);
    let k_prime = a.k_prime.unwrap_or(c.retrieval.k_prime);
    let rec = match recommend(&pipeline, &q, k, k_prime, a.base_llm) {
        Ok(r) => r,
        Err(e) => {
            if let RoadNetError::NoRoute { .. } = e.root() {
                return Err(NoRoute(e.to_string()).into());
            }
            return Err(e.into());
        }
    };
    let ids: Vec<String> = rec.retrieved.iter().map(|d| d.to_string()).collect();
    println!("retrieved={}", ids.join(" "));
    println!(
        "route_line={}",
        rec.generation.as_ref().and_then(|g| g.route_line.as_deref()).unwrap_or("-")
    );
    print!("{}", rec.report.to_record());
    println!("route={}", rec.report.final_path.road_names(&network).join(" -> "));
    Ok(())
}

fn gen_truth(ctx: &Ctx, a: &GenTruthArgs) -> Result<()> {
    let c = &ctx.config;
    let network = ctx.network()?;
    let pois = ctx.pois()?;
    let count = a.count.unwrap_or(c.eval.samples);
    let source = a.od_source.map(OdSource::from).unwrap_or(c.eval.od_source);
    let mut ods = match source {
        OdSource::Random => sample_connected_pairs(&network, count, c.seed),
        OdSource::HeldOut => {
            let trajectories = ctx.trajectories(&c.trajectory_path)?;
            let mut held: Vec<Trajectory> = ctx
                .held_out_indices(trajectories.len())
                .into_iter()
                .map(|i| trajectories[i].clone())
                .collect();
            if let Some(p) = &c.held_out_path {
                held.extend(ctx.trajectories(p)?);
            }
            trajectory_ods(&network, &held)
        }
    };
    ods.truncate(count);
    if ods.is_empty() {
        bail!("no origin-destination pairs to sample");
    }
    let (samples, skipped) = make_samples(&network, &pois, &ods, a.task, &c.task_params());
    ctx.create_out()?;
    let path = ctx.out.join(format!("samples_{}.jsonl", a.task));
    let file = File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
    let mut w = BufWriter::new(file);
    write_samples(&samples, &mut w)?;
    w.flush()?;
    println!(
        "{} samples written to {} ({} unreachable pairs skipped)",
        samples.len(),
        path.display(),
        skipped.len()
    );
    Ok(())
}

fn evaluate(ctx: &Ctx, a: &EvaluateArgs) -> Result<()> {
    let c = &ctx.config;
    let network = ctx.network()?;
    let book = ctx.addresses()?;
    let kb = ctx.kb()?;
    let samples_path = a
        .samples
        .clone()
        .unwrap_or_else(|| ctx.out.join(format!("samples_{}.jsonl", a.task)));
    require(&samples_path)?;
    let file = File::open(&samples_path).with_context(|| format!("cannot read {}", samples_path.display()))?;
    let samples =
        read_samples(BufReader::new(file)).with_context(|| format!("invalid samples {}", samples_path.display()))?;
    if let Some(s) = samples.iter().find(|s| s.task != a.task) {
        bail!("{} holds {} samples, not {}", samples_path.display(), s.task, a.task);
    }
    let embedder = c.embedder();
    let provider = c.provider();
    let pipeline = Pipeline {
        kb: &kb,
        network: &network,
        addresses: &book,
        embedder: embedder.as_ref(),
        provider: provider.as_ref(),
    };
    let ks: Vec<usize> = if a.base_llm {
        vec![a.k.first().copied().unwrap_or(c.retrieval.k)]
    } else if a.k.is_empty() {
        vec![c.retrieval.k]
    } else {
        a.k.clone()
    };
    ctx.create_out()?;
    for k in ks {
        let config = EvalConfig {
            dataset: c.dataset.clone(),
            k,
            k_prime: a.k_prime.unwrap_or(c.retrieval.k_prime),
            base_llm: a.base_llm,
            jobs: ctx.jobs,
            max_in_flight: c.llm.max_in_flight,
        };
        let report = evaluate_system(&pipeline, &samples, &config)?;
        let stem = config.file_stem(a.task);
        let table = report.to_table();
        write(&ctx.out.join(format!("eval_{stem}.json")), to_json(&report))?;
        write(&ctx.out.join(format!("eval_{stem}.txt")), &table)?;
        write(&ctx.out.join(format!("latency_{stem}.json")), to_json(&report.latency))?;
        print!("{table}");
    }
    Ok(())
}

fn report(ctx: &Ctx) -> Result<()> {
    let entries = fs::read_dir(&ctx.out).with_context(|| format!("cannot read {}", ctx.out.display()))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("latency_") && n.ends_with(".json"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no latency_*.json files in {}; run evaluate first", ctx.out.display());
    }
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["dataset", "retrieval_ms", "inference_ms"])?;
    for p in &files {
        let r: LatencyReport =
            serde_json::from_str(&read(p)?).with_context(|| format!("invalid latency file {}", p.display()))?;
        out.write_record([
            format!("{}/{}/{}", r.dataset, r.task, r.system),
            format!("{:.3}", r.mean.retrieval_ms),
            format!("{:.3}", r.mean.inference_ms),
        ])?;
    }
    let bytes = out.into_inner().context("cannot render CSV")?;
    write(&ctx.out.join("latency.csv"), &bytes)?;
    print!("{}", String::from_utf8_lossy(&bytes));
    Ok(())
}

fn synth_city(cli: &Cli, a: &SynthArgs) -> Result<()> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let seed = cli.seed.unwrap_or(42);
    let params = CityParams {
        rows: a.rows,
        cols: a.cols,
        od_pairs: a.od_pairs,
        duplicates: a.duplicates,
        held_out: a.held_out,
        ..CityParams::default()
    };
    let city = SyntheticCity::generate(&params, seed)?;
    let files = city
        .write_to(&dir)
        .with_context(|| format!("cannot write city to {}", dir.display()))?;
    let file_name = |p: &Path| PathBuf::from(p.file_name().expect("generated file has a name"));
    let config = Config {
        dataset: "synthetic".to_string(),
        network_path: file_name(&files.network),
        poi_path: file_name(&files.pois),
        address_book_path: file_name(&files.addresses),
        trajectory_path: file_name(&files.trajectories),
        held_out_path: Some(file_name(&files.held_out)),
        kb_dir: "kb".into(),
        held_out_fraction: 0.0,
        seed,
        ..Config::default()
    };
    let config_path = dir.join("pathgpt.toml");
    write(&config_path, config.render())?;
    println!(
        "{} nodes, {} edges, {} POIs, {} trajectories, {} held out; config {}",
        city.network.node_count(),
        city.network.edge_count(),
        city.pois.len(),
        city.trajectories.len(),
        city.held_out.len(),
        config_path.display()
    );
    Ok(())
}
