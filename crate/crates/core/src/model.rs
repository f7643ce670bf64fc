//! Model files.
//!
//! A model is a plain-text document of `key = value` lines; `#` starts a
//! comment line. Vectors are comma-separated decimals in shortest round-trip
//! form, so a save/load cycle reproduces every coefficient bit for bit.
//! Keys that hold one entry per component (`component`, `basis`, `trace`) are
//! repeated in order.

use std::fmt::Write as _;
use std::path::Path;

use crate::baselines::{Method, SubspaceModel};
use crate::error::{Error, Result};
use crate::geometry::{IdealPoint, LogConvention, PoincarePoint, Reflection};
use crate::horopca::{FitConfig, FittedModel, Whitening};
use crate::projections::ComponentSet;
use crate::stats::Dataset;

const FORMAT_VERSION: &str = "1";

/// Any fitted model that can reduce new points.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Horo(FittedModel),
    Subspace(SubspaceModel),
}

impl From<FittedModel> for Model {
    fn from(m: FittedModel) -> Self {
        Model::Horo(m)
    }
}

impl From<SubspaceModel> for Model {
    fn from(m: SubspaceModel) -> Self {
        Model::Subspace(m)
    }
}

impl Model {
    pub fn method(&self) -> Method {
        match self {
            Model::Horo(_) => Method::HoroPca,
            Model::Subspace(m) => m.method,
        }
    }

    /// Method name as it appears in reports, e.g. `pga-noise`.
    pub fn label(&self) -> String {
        match self {
            Model::Horo(_) => Method::HoroPca.to_string(),
            Model::Subspace(m) => m.label(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Model::Horo(m) => m.dim(),
            Model::Subspace(m) => m.dim(),
        }
    }

    pub fn k(&self) -> usize {
        match self {
            Model::Horo(m) => m.k(),
            Model::Subspace(m) => m.k(),
        }
    }

    /// Reduced points in the `K`-dimensional ball.
    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        match self {
            Model::Horo(m) => m.transform(data),
            Model::Subspace(m) => m.transform(data),
        }
    }

    /// Projections in the ambient ball.
    pub fn project(&self, data: &Dataset) -> Result<Dataset> {
        match self {
            Model::Horo(m) => m.project(data),
            Model::Subspace(m) => m.project(data),
        }
    }

    /// Sampled geodesics through the base point along each component, in the
    /// coordinates of the data the model was fitted on. Each trace has
    /// `samples` points running from one boundary end to the other.
    pub fn component_geodesics(&self, samples: usize) -> Vec<Vec<Vec<f64>>> {
        let (base, centering, dirs): (&PoincarePoint, &Reflection, Vec<Vec<f64>>) = match self {
            Model::Horo(m) => {
                let to_origin = Reflection::new(m.components.base());
                let dirs = m
                    .components
                    .directions()
                    .iter()
                    .map(|p| {
                        let q = to_origin.apply_raw(p.coords());
                        let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
                        q.iter().map(|v| v / n).collect()
                    })
                    .collect();
                (m.components.base(), &m.centering, dirs)
            }
            Model::Subspace(m) => (&m.base, &m.centering, m.basis.clone()),
        };
        let moved = Reflection::new(base);
        let samples = samples.max(2);
        let reach = 1.0 - 1e-6;
        dirs.iter()
            .map(|q| {
                (0..samples)
                    .map(|i| {
                        let s = reach * (2.0 * i as f64 / (samples - 1) as f64 - 1.0);
                        let x: Vec<f64> = q.iter().map(|v| s * v).collect();
                        centering.apply_raw(&moved.apply_raw(&x))
                    })
                    .collect()
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut w = Writer::default();
        w.put("format", FORMAT_VERSION);
        w.put("method", self.method().as_str());
        w.put("dim", self.dim());
        w.put("k", self.k());
        match self {
            Model::Horo(m) => {
                for p in m.components.directions() {
                    w.put("component", vec_str(p.coords()));
                }
                w.put("base", vec_str(m.components.base().coords()));
                w.put("centering", vec_str(m.centering.center()));
                w.put("explained", vec_str(&m.explained));
                for t in &m.objective_trace {
                    w.put("trace", trace_str(t));
                }
                w.put("converged", flags_str(&m.converged));
                put_config(&mut w, &m.config);
                if let Some(wh) = &m.whitening {
                    w.put("whitening.mean", vec_str(&wh.mean));
                    w.put("whitening.scale", vec_str(&wh.scale));
                }
            }
            Model::Subspace(m) => {
                for e in &m.basis {
                    w.put("basis", vec_str(e));
                }
                w.put("base", vec_str(m.base.coords()));
                w.put("centering", vec_str(m.centering.center()));
                w.put(
                    "log_convention",
                    match m.log_convention {
                        LogConvention::Standard => "standard",
                        LogConvention::Legacy => "legacy",
                    },
                );
                for t in &m.trace {
                    w.put("trace", trace_str(t));
                }
                w.put("converged", flags_str(&m.converged));
                if let Some(c) = &m.config {
                    put_config(&mut w, c);
                }
            }
        }
        w.out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let doc = Doc::parse(text)?;
        let version = doc.one("format")?;
        if version.1 != FORMAT_VERSION {
            return Err(Error::Format {
                line: version.0,
                msg: format!("unsupported model format {:?}", version.1),
            });
        }
        let method: Method = doc.value("method")?;
        let dim: usize = doc.value("dim")?;
        let k: usize = doc.value("k")?;
        let base = doc.point("base", dim)?;
        let centering = Reflection::new(&doc.point("centering", dim)?);
        let traces = doc
            .all("trace")
            .into_iter()
            .map(|(line, v)| parse_trace(line, v))
            .collect::<Result<Vec<_>>>()?;
        let model = match method {
            Method::HoroPca => {
                let directions = doc
                    .vectors("component", dim)?
                    .into_iter()
                    .map(IdealPoint::new)
                    .collect::<Result<Vec<_>>>()?;
                let explained = doc.vector("explained")?;
                if explained.len() != directions.len()
                    || !(traces.is_empty() || traces.len() == directions.len())
                {
                    return Err(Error::Format {
                        line: doc.one("explained")?.0,
                        msg: "explained variances and traces must match the components".into(),
                    });
                }
                let whitening = match doc.maybe_one("whitening.mean") {
                    None => None,
                    Some(_) => Some(Whitening {
                        mean: doc.vector("whitening.mean")?,
                        scale: doc.vector("whitening.scale")?,
                    }),
                };
                Model::Horo(FittedModel {
                    components: ComponentSet::new(directions, base)?,
                    objective_trace: traces,
                    explained,
                    converged: doc.flags("converged")?,
                    centering,
                    config: doc.config()?.ok_or_else(|| Error::Format {
                        line: 0,
                        msg: "missing config".into(),
                    })?,
                    whitening,
                })
            }
            Method::Hmds => {
                return Err(Error::Config(
                    "hmds has no out-of-sample model to load".into(),
                ))
            }
            _ => {
                let conv = match doc.one("log_convention")?.1 {
                    "standard" => LogConvention::Standard,
                    "legacy" => LogConvention::Legacy,
                    other => {
                        return Err(Error::Format {
                            line: doc.one("log_convention")?.0,
                            msg: format!("unknown log convention {other:?}"),
                        })
                    }
                };
                Model::Subspace(SubspaceModel {
                    method,
                    basis: doc.vectors("basis", dim)?,
                    base,
                    log_convention: conv,
                    centering,
                    trace: traces,
                    converged: doc.flags("converged")?,
                    config: doc.config()?,
                })
            }
        };
        if model.k() != k {
            return Err(Error::Format {
                line: doc.one("k")?.0,
                msg: format!("k = {k} but {} components are listed", model.k()),
            });
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

fn vec_str(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:?}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn flags_str(v: &[bool]) -> String {
    v.iter()
        .map(|b| b.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn trace_str(t: &[(usize, f64)]) -> String {
    t.iter()
        .map(|(i, v)| format!("{i}:{v:?}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_trace(line: usize, v: &str) -> Result<Vec<(usize, f64)>> {
    v.split_whitespace()
        .map(|pair| {
            let bad = || Error::Format {
                line,
                msg: format!("bad trace entry {pair:?}"),
            };
            let (i, x) = pair.split_once(':').ok_or_else(bad)?;
            Ok((i.parse().map_err(|_| bad())?, x.parse().map_err(|_| bad())?))
        })
        .collect()
}

fn put_config(w: &mut Writer, c: &FitConfig) {
    w.put("config.n_components", c.n_components);
    w.put("config.restarts", c.restarts);
    w.put("config.max_iter", c.max_iter);
    w.put("config.learning_rate", format!("{:?}", c.learning_rate));
    w.put("config.tol", format!("{:?}", c.tol));
    w.put("config.seed", c.seed);
    w.put("config.auto_center", c.auto_center);
}

#[derive(Default)]
struct Writer {
    out: String,
}

impl Writer {
    fn put(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.out, "{key} = {value}");
    }
}

/// `(line, key, value)` triples in file order.
struct Doc<'a> {
    entries: Vec<(usize, &'a str, &'a str)>,
}

impl<'a> Doc<'a> {
    fn parse(text: &'a str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Format {
                line: i + 1,
                msg: format!("expected `key = value`, got {line:?}"),
            })?;
            entries.push((i + 1, k.trim(), v.trim()));
        }
        Ok(Self { entries })
    }

    fn all(&self, key: &str) -> Vec<(usize, &'a str)> {
        self.entries
            .iter()
            .filter(|e| e.1 == key)
            .map(|e| (e.0, e.2))
            .collect()
    }

    fn maybe_one(&self, key: &str) -> Option<(usize, &'a str)> {
        self.all(key).into_iter().next()
    }

    fn one(&self, key: &str) -> Result<(usize, &'a str)> {
        let found = self.all(key);
        match found.as_slice() {
            [one] => Ok(*one),
            [] => Err(Error::Format {
                line: 0,
                msg: format!("missing key {key:?}"),
            }),
            [_, second, ..] => Err(Error::Format {
                line: second.0,
                msg: format!("duplicate key {key:?}"),
            }),
        }
    }

    fn value<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let (line, v) = self.one(key)?;
        v.parse().map_err(|_| Error::Format {
            line,
            msg: format!("bad value for {key}: {v:?}"),
        })
    }

    fn vector(&self, key: &str) -> Result<Vec<f64>> {
        let (line, v) = self.one(key)?;
        parse_vec(line, v)
    }

    fn vectors(&self, key: &str, dim: usize) -> Result<Vec<Vec<f64>>> {
        self.all(key)
            .into_iter()
            .map(|(line, v)| {
                let x = parse_vec(line, v)?;
                if x.len() != dim {
                    return Err(Error::Format {
                        line,
                        msg: format!("expected {dim} entries, got {}", x.len()),
                    });
                }
                Ok(x)
            })
            .collect()
    }

    fn point(&self, key: &str, dim: usize) -> Result<PoincarePoint> {
        let (line, v) = self.one(key)?;
        let x = parse_vec(line, v)?;
        if x.len() != dim {
            return Err(Error::Format {
                line,
                msg: format!("expected {dim} entries, got {}", x.len()),
            });
        }
        PoincarePoint::new(x)
    }

    fn flags(&self, key: &str) -> Result<Vec<bool>> {
        let (line, v) = self.one(key)?;
        if v.is_empty() {
            return Ok(Vec::new());
        }
        v.split(',')
            .map(|x| {
                x.trim().parse().map_err(|_| Error::Format {
                    line,
                    msg: format!("bad flag {x:?}"),
                })
            })
            .collect()
    }

    fn config(&self) -> Result<Option<FitConfig>> {
        if self.maybe_one("config.n_components").is_none() {
            return Ok(None);
        }
        Ok(Some(FitConfig {
            n_components: self.value("config.n_components")?,
            restarts: self.value("config.restarts")?,
            max_iter: self.value("config.max_iter")?,
            learning_rate: self.value("config.learning_rate")?,
            tol: self.value("config.tol")?,
            seed: self.value("config.seed")?,
            auto_center: self.value("config.auto_center")?,
        }))
    }
}

fn parse_vec(line: usize, v: &str) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|x| {
            x.trim().parse().map_err(|_| Error::Format {
                line,
                msg: format!("bad number {x:?}"),
            })
        })
        .collect()
}
