mod config;

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand};
use log::{info, warn};
use serde_json::{json, Value};

use ktune::bench::{
    competition_heatmaps, expand_grid, canonical_setting, fraction_curve, grid_from_records, import_external_trace,
    run_experiment_with_workers, select_hyperparameters, to_defaults, write_records, AlgorithmTemplate, CacheSource,
    ExperimentPlan, RunRecord, ALPHA, ALTERNATE_SPLITS, DEFAULT_BUDGETS, DEFAULT_REPETITIONS, DEFAULT_SPLIT,
};
use ktune::fitness::{generate_nk_landscape, generate_synthetic_kernel_space, CacheMetadata, RidgeProfile};
use ktune::landscape::{
    analyze, export_graph, minima_fraction_report, FitnessFlowGraph, GraphFormat, PageRankSettings, DEFAULT_NODE_LIMIT,
};
use ktune::optim::{run, Algorithm, DefaultsTable, Hyperparameters, OptimizerSpec};
use ktune::{fixtures, FitnessMode, NeighbourhoodKind, ParameterSpace, SearchSpaceCache};

/// Auto-tuning optimizers, benchmarks and landscape analysis over cached
/// search spaces.
#[derive(Parser)]
#[command(name = "ktune", version)]
struct Cli {
    /// JSON file whose keys mirror the command-line flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimizer on a cache.
    Tune(TuneArgs),
    /// Run an experiment plan and write results, curves and competitions.
    Bench(BenchArgs),
    /// Minima census, PageRank centrality and the C_p curve of a cache.
    Analyze(AnalyzeArgs),
    /// Select per-budget hyperparameters from a grid of settings.
    Hyperopt(HyperoptArgs),
    /// Write a synthetic cache.
    #[command(subcommand)]
    Generate(GenerateCommand),
    /// Import a cache file and write it in the native format.
    ImportCache(ImportArgs),
}

#[derive(Args)]
struct TuneArgs {
    #[arg(long)]
    cache: PathBuf,
    /// Algorithm name, e.g. random, first-ils, dual-annealing.
    #[arg(long)]
    algo: Algorithm,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    budget: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// deterministic or stochastic.
    #[arg(long, default_value = "deterministic")]
    mode: FitnessMode,
    /// Hyperparameters as a JSON object, or @FILE. Defaults come from the
    /// per-budget table.
    #[arg(long, value_name = "JSON")]
    hyper: Option<String>,
    /// Defaults table replacing the bundled one.
    #[arg(long)]
    defaults: Option<PathBuf>,
    /// Where to write the run and its trace as JSON.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    plan: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, env = "KTUNE_WORKERS", value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
    /// Base seed, overriding the plan.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    repetitions: Option<u64>,
    #[arg(long)]
    mode: Option<FitnessMode>,
    /// One independently seeded run per budget.
    #[arg(long)]
    independent_budgets: bool,
    /// Budget splitting the low and high competition bands.
    #[arg(long, default_value_t = DEFAULT_SPLIT)]
    split: usize,
    /// External trace CSV (algorithm, cache, budget, rep, best_fitness) to
    /// include in the competitions.
    #[arg(long, value_name = "CSV")]
    external: Vec<PathBuf>,
    /// Annotate the summary with each cache's C_p curve.
    #[arg(long)]
    cp: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    cache: PathBuf,
    #[arg(long, default_value = "hamming")]
    neighbourhood: NeighbourhoodKind,
    /// Largest band of the C_p sweep, in percent.
    #[arg(long, default_value_t = 15, value_parser = clap::value_parser!(u32).range(0..=1000))]
    p_max: u32,
    #[arg(long, default_value_t = 0.85)]
    damping: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
    node_limit: usize,
    /// Also write the fitness flow graph (dot, graphml or csv).
    #[arg(long)]
    export: Option<GraphFormat>,
    #[arg(long, default_value = "analysis")]
    out: PathBuf,
}

#[derive(Args)]
struct HyperoptArgs {
    #[arg(long)]
    algo: Algorithm,
    /// JSON object mapping each hyperparameter to its list of choices.
    #[arg(long)]
    grid: PathBuf,
    /// Cache files to tune on (repeatable).
    #[arg(long, required = true)]
    cache: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_BUDGETS)]
    budgets: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_REPETITIONS as u64, value_parser = clap::value_parser!(u64).range(1..))]
    repetitions: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "deterministic")]
    mode: FitnessMode,
    #[arg(long, env = "KTUNE_WORKERS", value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    /// Defaults-table JSON with the selected settings.
    #[arg(long, default_value = "selected_defaults.json")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum GenerateCommand {
    /// NK landscape over N bits.
    Nk {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Kernel-like runtimes over a bundled or given space.
    Kernel {
        /// Bundled space: convolution, convolution_mi50, gemm or pnpoly.
        #[arg(long, conflicts_with = "space", required_unless_present = "space")]
        fixture: Option<String>,
        /// Space JSON file.
        #[arg(long)]
        space: Option<PathBuf>,
        /// Share of failing configurations (default: the fixture's typical share, else 0).
        #[arg(long)]
        fail_fraction: Option<f64>,
        /// smooth, ridged or rugged.
        #[arg(long, default_value = "smooth")]
        profile: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        kernel: Option<String>,
        #[arg(long)]
        device: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ImportArgs {
    input: PathBuf,
    /// Where to write the normalized cache.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    device: Option<String>,
}

fn main() -> ExitCode {
    let args = match config::expand(&Cli::command(), std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    let result = match cli.command {
        Command::Tune(a) => tune(a),
        Command::Bench(a) => bench(a),
        Command::Analyze(a) => analyze_cmd(a),
        Command::Hyperopt(a) => hyperopt(a),
        Command::Generate(g) => generate(g),
        Command::ImportCache(a) => import_cache(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_cache(path: &Path) -> Result<SearchSpaceCache> {
    SearchSpaceCache::read_json(path).with_context(|| format!("loading cache {}", path.display()))
}

fn load_defaults(path: Option<&Path>) -> Result<DefaultsTable> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            DefaultsTable::from_json(&text).with_context(|| format!("parsing {}", p.display()))
        }
        None => Ok(DefaultsTable::bundled()),
    }
}

fn parse_hyper(text: &str) -> Result<Hyperparameters> {
    let text = match text.strip_prefix('@') {
        Some(path) => fs::read_to_string(path).with_context(|| format!("reading {path}"))?,
        None => text.to_string(),
    };
    match serde_json::from_str(&text).context("hyperparameters must be a JSON object")? {
        Value::Object(m) => Ok(m),
        _ => bail!("hyperparameters must be a JSON object"),
    }
}

fn workers(n: Option<u64>) -> usize {
    n.map(|n| n as usize).unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn tune(a: TuneArgs) -> Result<()> {
    let budget = a.budget as usize;
    let (hyper, source) = match &a.hyper {
        Some(h) => (parse_hyper(h)?, "given".to_string()),
        None if a.algo == Algorithm::RandomSampling => (Hyperparameters::new(), "none".to_string()),
        None => {
            let table = load_defaults(a.defaults.as_deref())?;
            let (b, h) = table.nearest(a.algo, budget)?;
            if b != budget {
                warn!("no defaults for {} at budget {budget}; using those for budget {b}", a.algo);
            }
            (h, format!("defaults for budget {b}"))
        }
    };
    let spec = OptimizerSpec::new(a.algo, hyper, a.seed);
    spec.config()?;
    let cache = load_cache(&a.cache)?;
    let f_opt = cache.f_opt()?;
    let result = run(&spec, &cache, a.mode, budget)?;
    let space = cache.space();
    let mean = cache.fitness_of(&result.best_config)?;
    println!("algorithm   {} ({source})", a.algo);
    println!("cache       {}", cache.id());
    println!("best        {}", space.key(&result.best_config));
    println!("fitness     {} {}", result.best_fitness, cache.metadata().units);
    println!("fraction    {:.6}", f_opt / mean);
    println!("evals used  {} of {} ({:?})", result.evals_used, budget, result.stop);
    if let Some(path) = &a.trace {
        let doc = json!({
            "cache": cache.id(),
            "algorithm": a.algo,
            "hyperparameters": spec.hyperparameters,
            "mode": a.mode,
            "budget": budget,
            "best_key": space.key(&result.best_config),
            "fraction": f_opt / mean,
            "run": result,
        });
        serde_json::to_writer_pretty(create(path)?, &doc)?;
    }
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let text = fs::read_to_string(&a.plan).with_context(|| format!("reading plan {}", a.plan.display()))?;
    let mut plan = ExperimentPlan::from_json(&text).with_context(|| format!("parsing plan {}", a.plan.display()))?;
    if let Some(s) = a.seed {
        plan.seed = s;
    }
    if let Some(r) = a.repetitions {
        plan.repetitions = r as usize;
    }
    if let Some(m) = a.mode {
        plan.mode = m;
    }
    plan.independent_budgets |= a.independent_budgets;
    let base = a.plan.parent().unwrap_or(Path::new("."));
    let caches = plan.load_caches(base)?;
    let defaults = plan.load_defaults(base)?;
    let optima: HashMap<String, f64> = caches.iter().map(|c| Ok((c.id(), c.f_opt()?))).collect::<Result<_>>()?;
    let mut external = Vec::new();
    for path in &a.external {
        let trace = import_external_trace(File::open(path).with_context(|| format!("opening {}", path.display()))?, &optima)
            .with_context(|| format!("importing {}", path.display()))?;
        for r in &trace.repetitions {
            info!("{}: {} runs of {} on {} at budget {}", path.display(), r.runs, r.algorithm, r.cache, r.budget);
        }
        external.extend(trace.records);
    }

    fs::create_dir_all(&a.out)?;
    let records = run_experiment_with_workers(&plan, &caches, &defaults, workers(a.workers))?;
    write_records(&records, create(&a.out.join("results.jsonl"))?)?;
    if !external.is_empty() {
        write_records(&external, create(&a.out.join("external.jsonl"))?)?;
    }
    let all: Vec<RunRecord> = records.iter().chain(&external).cloned().collect();

    let mut labels: Vec<String> = Vec::new();
    for r in &all {
        if !labels.contains(&r.algorithm) {
            labels.push(r.algorithm.clone());
        }
    }
    let mut curves = csv::Writer::from_writer(create(&a.out.join("curves.csv"))?);
    curves.write_record(["cache", "algorithm", "budget", "runs", "mean_evals", "fraction", "ci95"])?;
    let mut summary = Vec::new();
    for c in &caches {
        let mut per_alg = serde_json::Map::new();
        for l in &labels {
            let curve = fraction_curve(&all, &c.id(), l);
            for p in &curve {
                curves.write_record([
                    c.id(),
                    l.clone(),
                    p.budget.to_string(),
                    p.runs.to_string(),
                    p.mean_evals.to_string(),
                    p.fraction.to_string(),
                    p.ci95.to_string(),
                ])?;
            }
            per_alg.insert(l.clone(), serde_json::to_value(&curve)?);
        }
        let mut entry = json!({ "cache": c.id(), "f_opt": c.f_opt()?, "points": c.space().size(), "curves": per_alg });
        if a.cp {
            let report = analyze(c, NeighbourhoodKind::Hamming, &PageRankSettings::default(), 15)?;
            entry["c_p"] = serde_json::to_value(&report.c_p_curve)?;
            entry["local_minima"] = json!(report.census.local_minima);
        }
        summary.push(entry);
    }
    curves.flush()?;

    let mut splits = vec![a.split];
    splits.extend(ALTERNATE_SPLITS.iter().filter(|&&s| s != a.split));
    for split in splits {
        let result = competition_heatmaps(&all, split, &plan.tuning_caches, ALPHA);
        result.write_heatmap_csv(0, create(&a.out.join(format!("heatmap_le{split}.csv")))?)?;
        result.write_heatmap_csv(1, create(&a.out.join(format!("heatmap_gt{split}.csv")))?)?;
        result.write_totals_csv(create(&a.out.join(format!("totals_{split}.csv")))?)?;
        serde_json::to_writer_pretty(create(&a.out.join(format!("competition_{split}.json")))?, &result)?;
        if split == a.split {
            println!("wins (<= {split} | > {split} | all), Welch one-sided t-test, alpha {ALPHA}:");
            for l in &result.algorithms {
                let t = |band: &str| result.total(l, band).map_or(0, |t| t.wins);
                println!("  {l:<24} {:>5} {:>5} {:>5}", t(&format!("<={split}")), t(&format!(">{split}")), t("all"));
            }
        }
    }
    let summary = json!({
        "plan": plan,
        "test": "welch one-sided",
        "alpha": ALPHA,
        "runs": records.len(),
        "external_runs": external.len(),
        "caches": summary,
    });
    serde_json::to_writer_pretty(create(&a.out.join("summary.json"))?, &summary)?;
    println!("{} runs written to {}", records.len(), a.out.join("results.jsonl").display());
    Ok(())
}

fn analyze_cmd(a: AnalyzeArgs) -> Result<()> {
    let cache = load_cache(&a.cache)?;
    let f_opt = cache.f_opt()?;
    if cache.space().size() > a.node_limit {
        bail!(
            "search space has {} points, above the node limit of {}; raise --node-limit or analyze a sub-space",
            cache.space().size(),
            a.node_limit
        );
    }
    if !(0.0..=1.0).contains(&a.damping) {
        bail!("--damping must be in [0, 1]");
    }
    let settings = PageRankSettings { damping: a.damping, tol: a.tol, max_iter: a.max_iter };
    let report = analyze(&cache, a.neighbourhood, &settings, a.p_max)?;
    let fractions = minima_fraction_report(&cache, a.neighbourhood)?;
    fs::create_dir_all(&a.out)?;
    report.write_json(a.out.join("report.json"))?;
    report.write_minima_csv(a.out.join("minima.csv"))?;
    report.write_curve_csv(a.out.join("cp_curve.csv"))?;
    serde_json::to_writer_pretty(create(&a.out.join("minima_fractions.json"))?, &fractions)?;
    if let Some(format) = a.export {
        let graph = FitnessFlowGraph::build_with_limit(&cache, a.neighbourhood, a.node_limit)?;
        let path = a.out.join(format!("ffg.{}", format.extension()));
        export_graph(&graph, &cache, format, create(&path)?)?;
        println!("graph written to {}", path.display());
    }
    let c = &report.census;
    println!("cache          {} ({} points, f_opt {f_opt})", cache.id(), c.points);
    println!("neighbourhood  {}", report.neighbourhood);
    println!(
        "census         {} local minima, {} plateau sinks, {} slopes, {} failed ({} fail plateaus)",
        c.local_minima, c.plateau_sinks, c.slopes, c.fail_points, c.fail_plateaus
    );
    println!("graph          {} nodes, {} edges", report.nodes, report.edges);
    println!(
        "minima f_opt/f mean {:.4}, median {:.4}, min {:.4}, max {:.4}",
        fractions.mean, fractions.median, fractions.min, fractions.max
    );
    println!("p%    C_p");
    for p in &report.c_p_curve {
        println!("{:<5} {:.6}", p.p, p.c_p);
    }
    println!("report written to {}", a.out.display());
    Ok(())
}

fn hyperopt(a: HyperoptArgs) -> Result<()> {
    let text = fs::read_to_string(&a.grid).with_context(|| format!("reading grid {}", a.grid.display()))?;
    let choices: Value = serde_json::from_str(&text).with_context(|| format!("parsing grid {}", a.grid.display()))?;
    let choices = choices.as_object().ok_or_else(|| anyhow!("grid must be a JSON object of choice lists"))?;
    let settings = expand_grid(choices)?;
    let labels: Vec<String> = settings.iter().map(|s| format!("{} {}", a.algo, canonical_setting(s))).collect();
    for s in &settings {
        OptimizerSpec::new(a.algo, s.clone(), 0).config()?;
    }
    let caches: Vec<SearchSpaceCache> = a.cache.iter().map(|p| load_cache(p)).collect::<Result<_>>()?;
    let mut plan = ExperimentPlan::new(
        a.cache.iter().cloned().map(CacheSource::Path).collect(),
        settings.iter().zip(&labels).map(|(s, l)| AlgorithmTemplate::with(a.algo, l.clone(), s.clone())).collect(),
    );
    plan.budgets = a.budgets.clone();
    plan.repetitions = a.repetitions as usize;
    plan.seed = a.seed;
    plan.mode = a.mode;
    info!("{} settings x {} caches x {} budgets x {} repetitions", settings.len(), caches.len(), plan.budgets.len(), plan.repetitions);
    let records = run_experiment_with_workers(&plan, &caches, &DefaultsTable::bundled(), workers(a.workers))?;
    let grid = grid_from_records(a.algo, settings, &labels, &records)?;
    let choices = select_hyperparameters(&grid)?;
    for c in &choices {
        println!(
            "budget {:>5}: {} (k = {:.3}, {} candidate(s))",
            c.budget,
            canonical_setting(&c.hyperparameters),
            c.k,
            c.candidates
        );
    }
    serde_json::to_writer_pretty(create(&a.out)?, &to_defaults(a.algo, &choices))?;
    println!("defaults written to {}", a.out.display());
    Ok(())
}

fn generate(g: GenerateCommand) -> Result<()> {
    match g {
        GenerateCommand::Nk { n, k, seed, out } => {
            let cache = generate_nk_landscape(n, k, seed)?;
            cache.write_json(&out)?;
            println!("{}: {} entries written to {}", cache.id(), cache.space().size(), out.display());
        }
        GenerateCommand::Kernel { fixture, space, fail_fraction, profile, seed, kernel, device, out } => {
            let (space, name): (ParameterSpace, String) = match (&fixture, &space) {
                (Some(f), _) => (fixtures::space(f).ok_or_else(|| anyhow!("unknown fixture `{f}`"))?, f.clone()),
                (None, Some(p)) => {
                    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                    (ParameterSpace::from_json(&text)?, "synthetic".to_string())
                }
                (None, None) => unreachable!("clap requires one of them"),
            };
            let fail = fail_fraction.or_else(|| fixture.as_deref().and_then(fixtures::typical_fail_fraction)).unwrap_or(0.0);
            let profile = RidgeProfile::named(&profile).ok_or_else(|| anyhow!("unknown profile `{profile}`"))?;
            let metadata = CacheMetadata {
                kernel: kernel.unwrap_or(name),
                device: device.unwrap_or_else(|| format!("synthetic-s{seed}")),
                units: "ms".into(),
            };
            let cache = generate_synthetic_kernel_space(&space, fail, profile, seed)?.with_metadata(metadata);
            cache.write_json(&out)?;
            println!(
                "{}: {} entries ({} failed) written to {}",
                cache.id(),
                cache.space().size(),
                cache.fail_count(),
                out.display()
            );
        }
    }
    Ok(())
}

fn import_cache(a: ImportArgs) -> Result<()> {
    let text = fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let mut cache = SearchSpaceCache::from_json_str(&text).with_context(|| format!("importing {}", a.input.display()))?;
    if a.kernel.is_some() || a.device.is_some() {
        let m = cache.metadata().clone();
        cache = cache.with_metadata(CacheMetadata {
            kernel: a.kernel.unwrap_or(m.kernel),
            device: a.device.unwrap_or(m.device),
            units: m.units,
        });
    }
    let size = cache.space().size();
    println!("cache        {}", cache.id());
    println!("points       {size}");
    println!("ok           {}", cache.ok_count());
    println!("fail points  {} ({:.1}%)", cache.fail_count(), 100.0 * cache.fail_count() as f64 / size as f64);
    if !cache.is_complete() {
        println!("missing      {} (partial cache)", cache.missing_count());
    }
    match cache.f_opt() {
        Ok(f) => println!("f_opt        {f} {}", cache.metadata().units),
        Err(e) => warn!("{e}"),
    }
    if let Some(out) = &a.out {
        cache.write_json(out)?;
        println!("written to   {}", out.display());
    }
    Ok(())
}
