use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use horopca::baselines::{hmds, perturb_base, Method};
use horopca::geometry::LogConvention;
use horopca::horopca::{require_centered, Whitening};
use horopca::io::{
    distance_matrix, format_embeddings, format_rows, generate, graph_distances,
    load_distance_matrix, load_embeddings, GeneratorKind, GeneratorSpec,
};
use horopca::report::{benchmark, fit_method, format_table, summarize, BenchmarkPlan, RunOptions};
use horopca::stats::{center, Dataset, FrechetConfig};
use horopca::{FitConfig, Model, ReductionReport};

mod config;
mod plot;

use config::ConfigFile;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, files or values: exit 2.
    Usage(String),
    Lib(horopca::Error),
    /// `--strict` and a solver stopped at its iteration cap: exit 3.
    Strict(String),
}

impl From<horopca::Error> for CliError {
    fn from(e: horopca::Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(e) if e.is_numerical() => 3,
            CliError::Lib(_) => 2,
            CliError::Strict(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Strict(m) => f.write_str(m),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "horopca",
    version,
    about = "Hyperbolic dimensionality reduction"
)]
struct Cli {
    /// Key-value file with defaults for the flags below; flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Print reports as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Exit 3 when an optimizer hits its iteration cap.
    #[arg(long, global = true)]
    strict: bool,
    /// Embedding files have a header row (with an optional `label` column).
    #[arg(long, global = true)]
    header: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a synthetic dataset.
    Generate(GenerateArgs),
    /// Move the Fréchet mean to the origin.
    Center(IoArgs),
    /// Fit a reduction, save the model and print a report.
    Fit(FitArgs),
    /// Reduce points with a saved model.
    Transform(TransformArgs),
    /// Normalized Busemann coordinates of a HoroPCA model.
    Whiten(WhitenArgs),
    /// Run several methods over several seeds and tabulate the metrics.
    Benchmark(BenchmarkArgs),
    /// Render a 2-D embedding as SVG.
    Plot(PlotArgs),
    /// Pairwise distances of a dataset or shortest paths of a graph.
    Distances(DistancesArgs),
    /// Compare a reduced file against its source and print a report.
    Distortion(DistortionArgs),
}

#[derive(Args, Debug)]
struct IoArgs {
    #[arg(long, short)]
    input: PathBuf,
    /// Defaults to standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, default_value = "tangent-gaussian")]
    kind: String,
    #[arg(long, short = 'n', default_value_t = 200)]
    points: usize,
    /// Dimension; defaults to the number of covariance entries.
    #[arg(long)]
    dim: Option<usize>,
    /// Diagonal tangent covariance; one entry is broadcast.
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    cov: Vec<f64>,
    /// Edge length of the tree-like generator.
    #[arg(long, default_value_t = 0.5)]
    edge: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
struct SolverArgs {
    #[arg(short = 'k', long = "components")]
    components: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Log map without the factor 2, for tPCA.
    #[arg(long)]
    legacy_log: bool,
    /// Center uncentered input instead of rejecting it.
    #[arg(long)]
    auto_center: bool,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Embedding to reduce.
    #[arg(long, short, required_unless_present = "distances")]
    input: Option<PathBuf>,
    /// Distance matrix to embed (hmds only).
    #[arg(long, conflicts_with = "input")]
    distances: Option<PathBuf>,
    #[arg(long, short)]
    method: Option<String>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Move the base point of a fitted subspace by Gaussian noise.
    #[arg(long, value_name = "SIGMA")]
    noise: Option<f64>,
    /// Where to write the model.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Where to write the reduced points.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TransformArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Write projections in the ambient ball instead of reduced coordinates.
    #[arg(long)]
    ambient: bool,
}

#[derive(Args, Debug)]
struct WhitenArgs {
    #[arg(long)]
    model: PathBuf,
    /// Training points; ignored for the statistics when the model stores them.
    #[arg(long, short)]
    input: PathBuf,
    /// Points to whiten; defaults to the input.
    #[arg(long)]
    apply: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Write the model with the whitening statistics attached.
    #[arg(long)]
    save_model: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    #[arg(long, short)]
    input: PathBuf,
    /// Comma-separated; defaults to every method.
    #[arg(long, short, alias = "method", value_delimiter = ',')]
    methods: Vec<String>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Seeds `seed..seed+runs`.
    #[arg(long)]
    runs: Option<usize>,
    /// Adds base-perturbed PGA/BSA rows.
    #[arg(long, value_name = "SIGMA")]
    noise: Option<f64>,
}

#[derive(Args, Debug)]
struct PlotArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Reduce with this model first, or draw its components for 2-D models.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    no_labels: bool,
}

#[derive(Args, Debug)]
struct DistancesArgs {
    #[arg(long, short, required_unless_present = "edges")]
    input: Option<PathBuf>,
    /// Whitespace-separated `u v [w]` edge list.
    #[arg(long, conflicts_with = "input")]
    edges: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Write graph node names in matrix order, one per line.
    #[arg(long, requires = "edges")]
    nodes: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DistortionArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    reduced: PathBuf,
    /// Method name to put in the report.
    #[arg(long, short, default_value = "unknown")]
    method: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Global switches after merging the config file.
struct Ctx {
    cfg: ConfigFile,
    json: bool,
    strict: bool,
    header: bool,
}

fn write_out(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

impl Ctx {
    fn load(&self, path: &Path) -> CliResult<Dataset> {
        Ok(load_embeddings(path, self.header)?)
    }

    fn save(&self, path: Option<&Path>, data: &Dataset) -> CliResult<()> {
        write_out(path, &format_embeddings(data, self.header))
    }

    fn report(&self, r: &ReductionReport) -> CliResult<()> {
        if self.json {
            let s = serde_json::to_string_pretty(r).map_err(|e| CliError::Usage(e.to_string()))?;
            println!("{s}");
        } else {
            print!("{}", r.to_key_values());
        }
        Ok(())
    }

    fn run_options(&self, s: &SolverArgs) -> CliResult<RunOptions> {
        let c = &self.cfg;
        let d = FitConfig::default();
        let fit = FitConfig {
            n_components: c
                .pick("components", s.components)?
                .unwrap_or(d.n_components),
            restarts: c.pick("restarts", s.restarts)?.unwrap_or(d.restarts),
            max_iter: c.pick("max-iter", s.max_iter)?.unwrap_or(d.max_iter),
            learning_rate: c.pick("lr", s.lr)?.unwrap_or(d.learning_rate),
            tol: c.pick("tol", s.tol)?.unwrap_or(d.tol),
            seed: c.pick("seed", s.seed)?.unwrap_or(d.seed),
            auto_center: c.flag("auto-center", s.auto_center)?,
        };
        let log_convention = if c.flag("legacy-log", s.legacy_log)? {
            LogConvention::Legacy
        } else {
            LogConvention::Standard
        };
        Ok(RunOptions {
            fit,
            log_convention,
        })
    }

    fn noise(&self, cli: Option<f64>) -> CliResult<Option<f64>> {
        let n = self.cfg.pick("noise", cli)?;
        if let Some(s) = n {
            if !s.is_finite() || s < 0.0 {
                return Err(CliError::Usage(format!(
                    "noise must be a non-negative number, got {s}"
                )));
            }
        }
        Ok(n)
    }
}

fn parse_method(s: &str) -> CliResult<Method> {
    s.parse().map_err(|_| {
        let names: Vec<&str> = Method::ALL.iter().map(|m| m.as_str()).collect();
        CliError::Usage(format!(
            "unknown method '{s}' (expected one of {})",
            names.join(", ")
        ))
    })
}

fn converged(model: &Model) -> &[bool] {
    match model {
        Model::Horo(m) => &m.converged,
        Model::Subspace(m) => &m.converged,
    }
}

fn cmd_generate(ctx: &Ctx, a: &GenerateArgs) -> CliResult<()> {
    let kind: GeneratorKind = a.kind.parse()?;
    let seed = ctx.cfg.pick("seed", a.seed)?.unwrap_or(0);
    let spec = match kind {
        GeneratorKind::TangentGaussian => GeneratorSpec {
            kind,
            n: a.points,
            d: a.dim.unwrap_or(a.cov.len()),
            covariance: a.cov.clone(),
            seed,
        },
        GeneratorKind::TreeLike => {
            GeneratorSpec::tree_like(a.points, a.dim.unwrap_or(2), a.edge, seed)
        }
    };
    ctx.save(a.output.as_deref(), &generate(&spec)?)
}

fn cmd_center(ctx: &Ctx, a: &IoArgs) -> CliResult<()> {
    let data = ctx.load(&a.input)?;
    let (out, _) = center(&data, &FrechetConfig::default())?;
    ctx.save(a.output.as_deref(), &out)
}

fn cmd_fit(ctx: &Ctx, a: &FitArgs) -> CliResult<()> {
    let method = match a.method.clone() {
        Some(m) => m,
        None => ctx
            .cfg
            .get("method")?
            .unwrap_or_else(|| "horopca".to_string()),
    };
    let method = parse_method(&method)?;
    let opts = ctx.run_options(&a.solver)?;
    let noise = ctx.noise(a.noise)?;
    let seed = opts.fit.seed;
    let start = Instant::now();

    if method == Method::Hmds {
        if a.model.is_some() {
            return Err(CliError::Usage(
                "hmds embeds the given points only and has no model file".into(),
            ));
        }
        let k = opts.fit.n_components;
        let (out, report) = match (&a.input, &a.distances) {
            (_, Some(path)) => {
                let dm = load_distance_matrix(path)?;
                let out = hmds(&dm, k)?.data;
                let t = start.elapsed().as_secs_f64();
                let r = ReductionReport::evaluate_matrix(method.as_str(), &dm, &out, seed, t)?;
                (out, r)
            }
            (Some(path), None) => {
                let data = ctx.load(path)?;
                let out = hmds(&distance_matrix(&data), k)?.data;
                let t = start.elapsed().as_secs_f64();
                let r = ReductionReport::evaluate(method.as_str(), &data, &out, seed, t)?;
                (out, r)
            }
            (None, None) => unreachable!("clap requires one input"),
        };
        if let Some(p) = &a.output {
            ctx.save(Some(p), &out)?;
        }
        return ctx.report(&report);
    }

    let input = a.input.as_ref().ok_or_else(|| {
        CliError::Usage(format!("{method} needs --input; --distances is for hmds"))
    })?;
    let data = ctx.load(input)?;
    let model = fit_method(method, &data, &opts, seed)?
        .ok_or_else(|| CliError::Usage(format!("{method} has no model")))?;
    let model = match (noise, model) {
        (Some(sigma), Model::Subspace(m)) => Model::from(perturb_base(&m, sigma, seed)?),
        (Some(_), m) => {
            eprintln!("warning: --noise only applies to subspace methods; ignored for {method}");
            m
        }
        (None, m) => m,
    };
    let reduced = model.transform(&data)?;
    let runtime = start.elapsed().as_secs_f64();
    let report = ReductionReport::evaluate(model.label(), &data, &reduced, seed, runtime)?;

    if let Model::Horo(m) = &model {
        if !m.explained_is_monotone() {
            eprintln!(
                "warning: explained variance is not monotone in K: {:?}",
                m.explained
            );
        }
    }
    if let Some(p) = &a.model {
        model.save(p)?;
    }
    if let Some(p) = &a.output {
        ctx.save(Some(p), &reduced)?;
    }
    ctx.report(&report)?;
    if ctx.strict {
        let flags = converged(&model);
        if let Some(j) = flags.iter().position(|c| !c) {
            return Err(CliError::Strict(format!(
                "component {j} did not converge within {} iterations",
                opts.fit.max_iter
            )));
        }
    }
    Ok(())
}

fn cmd_transform(ctx: &Ctx, a: &TransformArgs) -> CliResult<()> {
    let model = Model::load(&a.model)?;
    let data = ctx.load(&a.input)?;
    let out = if a.ambient {
        model.project(&data)?
    } else {
        model.transform(&data)?
    };
    ctx.save(a.output.as_deref(), &out)
}

fn cmd_whiten(ctx: &Ctx, a: &WhitenArgs) -> CliResult<()> {
    let Model::Horo(mut model) = Model::load(&a.model)? else {
        return Err(CliError::Usage("whiten needs a horopca model".into()));
    };
    let train = ctx.load(&a.input)?;
    let target = match &a.apply {
        Some(p) => ctx.load(p)?,
        None => train.clone(),
    };
    let w = match &model.whitening {
        Some(w) => w.clone(),
        None => Whitening::fit(&model.busemann_coordinates(&train)?)?,
    };
    let coords = w.apply(&model.busemann_coordinates(&target)?)?;
    let header: Option<Vec<String>> = ctx
        .header
        .then(|| (0..model.k()).map(|j| format!("w{j}")).collect());
    write_out(
        a.output.as_deref(),
        &format_rows(&coords, header.as_deref()),
    )?;
    if let Some(p) = &a.save_model {
        model.whitening = Some(w);
        Model::from(model).save(p)?;
    }
    Ok(())
}

fn cmd_benchmark(ctx: &Ctx, a: &BenchmarkArgs) -> CliResult<()> {
    let names: Vec<String> = if a.methods.is_empty() {
        match ctx.cfg.get::<String>("methods")? {
            Some(s) => s.split(',').map(|m| m.trim().to_string()).collect(),
            None => Method::ALL.iter().map(|m| m.to_string()).collect(),
        }
    } else {
        a.methods.clone()
    };
    let methods = names
        .iter()
        .map(|m| parse_method(m))
        .collect::<CliResult<Vec<_>>>()?;
    let options = ctx.run_options(&a.solver)?;
    let runs = ctx.cfg.pick("runs", a.runs)?.unwrap_or(5);
    if runs == 0 {
        return Err(CliError::Usage("runs must be at least 1".into()));
    }
    let seed = options.fit.seed;
    let plan = BenchmarkPlan {
        methods,
        seeds: (seed..seed + runs as u64).collect(),
        noise: ctx.noise(a.noise)?,
        options,
    };
    let (data, _) = require_centered(&ctx.load(&a.input)?, true)?;
    let reports = benchmark(&data, &plan)?;
    let summary = summarize(&reports);
    if ctx.json {
        let doc = serde_json::json!({ "reports": reports, "summary": summary });
        let s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Usage(e.to_string()))?;
        println!("{s}");
    } else {
        print!("{}", format_table(&summary));
    }
    Ok(())
}

fn cmd_plot(ctx: &Ctx, a: &PlotArgs) -> CliResult<()> {
    let data = ctx.load(&a.input)?;
    let model = a.model.as_deref().map(Model::load).transpose()?;
    let (points, traces) = match &model {
        Some(m) if m.dim() == 2 && data.dim() == 2 => (data.clone(), m.component_geodesics(200)),
        Some(m) if m.k() == 2 => (m.transform(&data)?, Vec::new()),
        Some(m) => {
            return Err(CliError::Usage(format!(
                "model reduces {}-D data to {} dimensions; plotting needs 2",
                m.dim(),
                m.k()
            )))
        }
        None => (data.clone(), Vec::new()),
    };
    if points.dim() != 2 {
        return Err(CliError::Usage(format!(
            "cannot plot {}-D data; reduce it to 2-D first or pass --model",
            points.dim()
        )));
    }
    let labels = if a.no_labels { None } else { points.labels() };
    write_out(
        a.output.as_deref(),
        &plot::render(&points.rows(), labels, &traces),
    )
}

fn cmd_distances(ctx: &Ctx, a: &DistancesArgs) -> CliResult<()> {
    match (&a.input, &a.edges) {
        (_, Some(edges)) => {
            let g = graph_distances(edges)?;
            write_out(a.output.as_deref(), &format_rows(&g.distances.rows(), None))?;
            if let Some(p) = &a.nodes {
                write_out(Some(p), &(g.nodes.join("\n") + "\n"))?;
            }
            Ok(())
        }
        (Some(input), None) => {
            let dm = distance_matrix(&ctx.load(input)?);
            write_out(a.output.as_deref(), &format_rows(&dm.rows(), None))
        }
        (None, None) => unreachable!("clap requires one input"),
    }
}

fn cmd_distortion(ctx: &Ctx, a: &DistortionArgs) -> CliResult<()> {
    let source = ctx.load(&a.source)?;
    let reduced = ctx.load(&a.reduced)?;
    ctx.report(&ReductionReport::evaluate(
        &a.method, &source, &reduced, a.seed, 0.0,
    )?)
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = ConfigFile::load(cli.config.as_deref())?;
    let ctx = Ctx {
        json: cfg.flag("json", cli.json)?,
        strict: cfg.flag("strict", cli.strict)?,
        header: cfg.flag("header", cli.header)?,
        cfg,
    };
    match &cli.command {
        Command::Generate(a) => cmd_generate(&ctx, a),
        Command::Center(a) => cmd_center(&ctx, a),
        Command::Fit(a) => cmd_fit(&ctx, a),
        Command::Transform(a) => cmd_transform(&ctx, a),
        Command::Whiten(a) => cmd_whiten(&ctx, a),
        Command::Benchmark(a) => cmd_benchmark(&ctx, a),
        Command::Plot(a) => cmd_plot(&ctx, a),
        Command::Distances(a) => cmd_distances(&ctx, a),
        Command::Distortion(a) => cmd_distortion(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
