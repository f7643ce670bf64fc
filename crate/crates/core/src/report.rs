//! Reduction metrics and the multi-method benchmark.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::baselines::{bsa_fit, hmds, pca_fit, perturb_base, pga_fit, tpca_fit, Method};
use crate::error::{Error, Result};
use crate::geometry::poincare_distance;
use crate::geometry::LogConvention;
use crate::horopca::{fit, FitConfig};
use crate::io::{distance_matrix, DistanceMatrix};
use crate::model::Model;
use crate::stats::{average_distortion, distance_variance, frechet_variance, Dataset};

/// Metrics of one reduction. Field names are the report keys.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionReport {
    pub method: String,
    pub k: usize,
    pub distortion: f64,
    pub frechet_variance: f64,
    pub distance_variance: f64,
    pub seed: u64,
    pub runtime_s: f64,
}

impl ReductionReport {
    /// Compares `reduced` against `source`, paired by index.
    pub fn evaluate(
        method: impl Into<String>,
        source: &Dataset,
        reduced: &Dataset,
        seed: u64,
        runtime_s: f64,
    ) -> Result<Self> {
        Ok(Self {
            method: method.into(),
            k: reduced.dim(),
            distortion: average_distortion(source, reduced)?,
            frechet_variance: frechet_variance(reduced),
            distance_variance: distance_variance(reduced),
            seed,
            runtime_s,
        })
    }

    /// Same as [`evaluate`](Self::evaluate) against a target distance matrix
    /// instead of source points.
    pub fn evaluate_matrix(
        method: impl Into<String>,
        source: &DistanceMatrix,
        reduced: &Dataset,
        seed: u64,
        runtime_s: f64,
    ) -> Result<Self> {
        Ok(Self {
            method: method.into(),
            k: reduced.dim(),
            distortion: matrix_distortion(source, reduced)?,
            frechet_variance: frechet_variance(reduced),
            distance_variance: distance_variance(reduced),
            seed,
            runtime_s,
        })
    }

    /// `key=value` lines.
    pub fn to_key_values(&self) -> String {
        format!(
            "method={}\nk={}\ndistortion={:?}\nfrechet_variance={:?}\ndistance_variance={:?}\nseed={}\nruntime_s={:?}\n",
            self.method,
            self.k,
            self.distortion,
            self.frechet_variance,
            self.distance_variance,
            self.seed,
            self.runtime_s
        )
    }
}

/// Mean relative pairwise error of `mapped` against the distances in `source`.
pub fn matrix_distortion(source: &DistanceMatrix, mapped: &Dataset) -> Result<f64> {
    let n = source.len();
    if mapped.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: mapped.len(),
        });
    }
    if n < 2 {
        return Err(Error::InvalidPoint(
            "average distortion needs at least two points".into(),
        ));
    }
    let pts = mapped.points();
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = source.get(i, j);
            if d == 0.0 {
                return Err(Error::DegeneratePair { i, j });
            }
            acc += (poincare_distance(&pts[i], &pts[j]) - d).abs() / d;
        }
    }
    Ok(acc / (n * (n - 1) / 2) as f64)
}

/// Options shared by every method of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Component count, restarts and solver settings; the seed is set per run.
    pub fit: FitConfig,
    pub log_convention: LogConvention,
}

impl RunOptions {
    pub fn new(fit: FitConfig) -> Self {
        Self {
            fit,
            log_convention: LogConvention::Standard,
        }
    }
}

/// Fits `method` with the given seed. `None` for hMDS, which only embeds
/// the points it is given.
pub fn fit_method(
    method: Method,
    data: &Dataset,
    opts: &RunOptions,
    seed: u64,
) -> Result<Option<Model>> {
    let cfg = FitConfig { seed, ..opts.fit };
    let k = cfg.n_components;
    Ok(Some(match method {
        Method::Pca => pca_fit(data, k)?.into(),
        Method::Tpca => tpca_fit(data, k, opts.log_convention)?.into(),
        Method::Pga => pga_fit(data, &cfg)?.into(),
        Method::Bsa => bsa_fit(data, &cfg)?.into(),
        Method::HoroPca => fit(data, &cfg)?.into(),
        Method::Hmds => return Ok(None),
    }))
}

/// Reduces `data` with `method` and reports the metrics. With `noise`, PGA
/// and BSA are refitted with their base moved by `perturb_base`.
pub fn run_method(
    method: Method,
    data: &Dataset,
    opts: &RunOptions,
    seed: u64,
    noise: Option<f64>,
) -> Result<ReductionReport> {
    let start = Instant::now();
    let (label, reduced) = match fit_method(method, data, opts, seed)? {
        Some(model) => {
            let model = match (noise, model) {
                (Some(sigma), Model::Subspace(m)) => Model::from(perturb_base(&m, sigma, seed)?),
                (_, m) => m,
            };
            (model.label(), model.transform(data)?)
        }
        None => {
            let out = hmds(&distance_matrix(data), opts.fit.n_components)?;
            (method.to_string(), out.data)
        }
    };
    let runtime = start.elapsed().as_secs_f64();
    ReductionReport::evaluate(label, data, &reduced, seed, runtime)
}

/// What a benchmark runs.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkPlan {
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    /// Adds base-perturbed PGA and BSA rows.
    pub noise: Option<f64>,
    pub options: RunOptions,
}

/// One report per (method, seed), plus the perturbed rows, in plan order.
pub fn benchmark(data: &Dataset, plan: &BenchmarkPlan) -> Result<Vec<ReductionReport>> {
    if plan.methods.is_empty() || plan.seeds.is_empty() {
        return Err(Error::Config(
            "benchmark needs at least one method and one seed".into(),
        ));
    }
    let mut out = Vec::new();
    for &m in &plan.methods {
        for &seed in &plan.seeds {
            out.push(run_method(m, data, &plan.options, seed, None)?);
        }
    }
    if let Some(sigma) = plan.noise {
        for &m in plan
            .methods
            .iter()
            .filter(|m| matches!(m, Method::Pga | Method::Bsa))
        {
            for &seed in &plan.seeds {
                out.push(run_method(m, data, &plan.options, seed, Some(sigma))?);
            }
        }
    }
    Ok(out)
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    fn of(v: impl Iterator<Item = f64> + Clone) -> Self {
        let n = v.clone().count() as f64;
        let mean = v.clone().sum::<f64>() / n;
        let var = v.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

/// Aggregate over the seeds of one method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub method: String,
    pub k: usize,
    pub runs: usize,
    pub distortion: Stat,
    pub frechet_variance: Stat,
    pub distance_variance: Stat,
    pub runtime_s: Stat,
}

/// Groups reports by method label, keeping first-appearance order.
pub fn summarize(reports: &[ReductionReport]) -> Vec<Summary> {
    let mut labels: Vec<&str> = Vec::new();
    for r in reports {
        if !labels.contains(&r.method.as_str()) {
            labels.push(&r.method);
        }
    }
    labels
        .into_iter()
        .map(|label| {
            let rs: Vec<&ReductionReport> = reports.iter().filter(|r| r.method == label).collect();
            Summary {
                method: label.to_string(),
                k: rs[0].k,
                runs: rs.len(),
                distortion: Stat::of(rs.iter().map(|r| r.distortion)),
                frechet_variance: Stat::of(rs.iter().map(|r| r.frechet_variance)),
                distance_variance: Stat::of(rs.iter().map(|r| r.distance_variance)),
                runtime_s: Stat::of(rs.iter().map(|r| r.runtime_s)),
            }
        })
        .collect()
}

/// One row per method, `mean ± std` per metric.
pub fn format_table(rows: &[Summary]) -> String {
    let cell = |s: &Stat| format!("{:.4} ± {:.4}", s.mean, s.std);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>2} {:>4}  {:<18} {:<18} {:<18} {:<18}",
        "method", "k", "runs", "distortion", "frechet_variance", "distance_variance", "runtime_s"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<12} {:>2} {:>4}  {:<18} {:<18} {:<18} {:<18}",
            r.method,
            r.k,
            r.runs,
            cell(&r.distortion),
            cell(&r.frechet_variance),
            cell(&r.distance_variance),
            cell(&r.runtime_s)
        );
    }
    out
}
