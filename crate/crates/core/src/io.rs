//! File formats, synthetic data and distance matrices.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::baselines::hmds;
use crate::error::{Error, Result};
use crate::geometry::{ball_distance, exp_origin, LogConvention, PoincarePoint};
use crate::stats::Dataset;

/// Symmetric matrix of pairwise distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidMatrix("empty matrix".into()));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::InvalidMatrix(format!(
                "row {i} has {} entries, expected {n}",
                rows[i].len()
            )));
        }
        for i in 0..n {
            if rows[i][i] != 0.0 {
                return Err(Error::InvalidMatrix(format!(
                    "nonzero diagonal entry at {i}"
                )));
            }
            for j in 0..n {
                let v = rows[i][j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidMatrix(format!(
                        "entry ({i}, {j}) = {v} is not a nonnegative number"
                    )));
                }
                if (v - rows[j][i]).abs() > 1e-12 * v.abs().max(1.0) {
                    return Err(Error::InvalidMatrix(format!("not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self {
            n,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn max(&self) -> f64 {
        self.entries.iter().fold(0.0, |a, b| a.max(*b))
    }
}

/// Pairwise hyperbolic distances of a dataset.
pub fn distance_matrix(data: &Dataset) -> DistanceMatrix {
    let pts = data.points();
    let n = pts.len();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = ball_distance(pts[i].coords(), pts[j].coords());
            entries[i * n + j] = d;
            entries[j * n + i] = d;
        }
    }
    DistanceMatrix { n, entries }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeneratorKind {
    /// Gaussian tangent vectors at the origin pushed through the exponential map.
    TangentGaussian,
    /// A random tree embedded with hMDS; `covariance[0]` is the edge length.
    TreeLike,
}

impl std::str::FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tangent-gaussian" => Ok(Self::TangentGaussian),
            "tree-like" => Ok(Self::TreeLike),
            _ => Err(Error::Config(format!("unknown generator kind '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n: usize,
    pub d: usize,
    /// Diagonal of the tangent covariance; a single entry is broadcast.
    pub covariance: Vec<f64>,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn tangent_gaussian(n: usize, covariance: Vec<f64>, seed: u64) -> Self {
        Self {
            kind: GeneratorKind::TangentGaussian,
            n,
            d: covariance.len(),
            covariance,
            seed,
        }
    }

    pub fn tree_like(n: usize, d: usize, edge_length: f64, seed: u64) -> Self {
        Self {
            kind: GeneratorKind::TreeLike,
            n,
            d,
            covariance: vec![edge_length],
            seed,
        }
    }

    fn validate(&self) -> Result<Vec<f64>> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::Config("n and d must be positive".into()));
        }
        if self
            .covariance
            .iter()
            .any(|c| !(*c > 0.0) || !c.is_finite())
        {
            return Err(Error::Config("covariance entries must be positive".into()));
        }
        match self.covariance.len() {
            1 => Ok(vec![self.covariance[0]; self.d]),
            l if l == self.d => Ok(self.covariance.clone()),
            l => Err(Error::Config(format!(
                "covariance has {l} entries for dimension {}",
                self.d
            ))),
        }
    }
}

pub fn generate(spec: &GeneratorSpec) -> Result<Dataset> {
    let cov = spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.kind {
        GeneratorKind::TangentGaussian => {
            let sd: Vec<f64> = cov.iter().map(|c| c.sqrt()).collect();
            let points = (0..spec.n)
                .map(|_| {
                    let v: Vec<f64> = sd
                        .iter()
                        .map(|s| s * rng.sample::<f64, _>(StandardNormal))
                        .collect();
                    exp_origin(&v, LogConvention::Standard)
                })
                .collect::<Result<Vec<_>>>()?;
            Dataset::new(points)
        }
        GeneratorKind::TreeLike => {
            let edges = random_tree(spec.n, cov[0], &mut rng);
            let dm = tree_distances(spec.n, &edges)?;
            Ok(hmds(&dm, spec.d)?.data)
        }
    }
}

/// Random recursive tree: node `i` hangs off a uniformly chosen earlier node.
fn random_tree(n: usize, length: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, usize, f64)> {
    (1..n)
        .map(|i| (rng.random_range(0..i), i, length))
        .collect()
}

fn tree_distances(n: usize, edges: &[(usize, usize, f64)]) -> Result<DistanceMatrix> {
    let names: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    shortest_paths(&names, edges)
}

/// Parses comma-separated rows. With `header`, the first line names the
/// columns and a column called `label` holds point labels.
pub fn parse_embeddings(text: &str, header: bool) -> Result<Dataset> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut label_col = None;
    if header {
        if let Some((_, h)) = lines.next() {
            label_col = h.split(',').position(|c| c.trim() == "label");
        }
    }
    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (line, l) in lines {
        let mut row = Vec::new();
        for (c, field) in l.split(',').enumerate() {
            if Some(c) == label_col {
                labels.push(field.trim().to_string());
                continue;
            }
            let v: f64 = field.trim().parse().map_err(|_| Error::Format {
                line,
                msg: format!("cannot parse '{}' as a number", field.trim()),
            })?;
            row.push(v);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Format {
                    line,
                    msg: format!("expected {w} values, found {}", row.len()),
                })
            }
            _ => {}
        }
        let p = PoincarePoint::new(row).map_err(|e| Error::Format {
            line,
            msg: e.to_string(),
        })?;
        points.push(p);
    }
    if points.is_empty() {
        return Err(Error::Format {
            line: 0,
            msg: "no data rows".into(),
        });
    }
    let ds = Dataset::new(points)?;
    if label_col.is_some() {
        ds.with_labels(labels)
    } else {
        Ok(ds)
    }
}

pub fn load_embeddings(path: impl AsRef<Path>, header: bool) -> Result<Dataset> {
    parse_embeddings(&std::fs::read_to_string(path)?, header)
}

/// Shortest round-trip decimal form, so parsing the output is bit-exact.
pub fn format_rows(rows: &[Vec<f64>], header: Option<&[String]>) -> String {
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str(&h.join(","));
        out.push('\n');
    }
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn format_embeddings(data: &Dataset, header: bool) -> String {
    let mut out = String::new();
    if header {
        let mut cols: Vec<String> = (0..data.dim()).map(|i| format!("x{i}")).collect();
        if data.labels().is_some() {
            cols.push("label".into());
        }
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    for (i, p) in data.points().iter().enumerate() {
        let mut fields: Vec<String> = p.coords().iter().map(|v| format!("{v:?}")).collect();
        if header {
            if let Some(l) = data.labels() {
                fields.push(l[i].clone());
            }
        }
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

pub fn save_embeddings(path: impl AsRef<Path>, data: &Dataset, header: bool) -> Result<()> {
    std::fs::write(path, format_embeddings(data, header))?;
    Ok(())
}

/// Parses a square CSV matrix of distances.
pub fn parse_distance_matrix(text: &str) -> Result<DistanceMatrix> {
    let mut rows = Vec::new();
    for (i, l) in text.lines().enumerate() {
        let l = l.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let row = l
            .split(',')
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| Error::Format {
                    line: i + 1,
                    msg: format!("cannot parse '{}' as a number", f.trim()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    DistanceMatrix::new(rows)
}

pub fn load_distance_matrix(path: impl AsRef<Path>) -> Result<DistanceMatrix> {
    parse_distance_matrix(&std::fs::read_to_string(path)?)
}

pub fn save_distance_matrix(path: impl AsRef<Path>, dm: &DistanceMatrix) -> Result<()> {
    std::fs::write(path, format_rows(&dm.rows(), None))?;
    Ok(())
}

/// Shortest-path metric of an undirected graph, with node names in order of
/// first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphDistances {
    pub nodes: Vec<String>,
    pub distances: DistanceMatrix,
}

/// Parses whitespace-separated `u v [w]` lines; `#` starts a comment.
pub fn parse_edge_list(text: &str) -> Result<GraphDistances> {
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut id = |name: &str, nodes: &mut Vec<String>| {
        *index.entry(name.to_string()).or_insert_with(|| {
            nodes.push(name.to_string());
            nodes.len() - 1
        })
    };
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 2 && f.len() != 3 {
            return Err(Error::Format {
                line: i + 1,
                msg: format!("expected 'u v [w]', found {} fields", f.len()),
            });
        }
        let w = match f.get(2) {
            Some(s) => s.parse::<f64>().map_err(|_| Error::Format {
                line: i + 1,
                msg: format!("cannot parse weight '{s}'"),
            })?,
            None => 1.0,
        };
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::Format {
                line: i + 1,
                msg: format!("edge weight {w} must be a nonnegative number"),
            });
        }
        let u = id(f[0], &mut nodes);
        let v = id(f[1], &mut nodes);
        edges.push((u, v, w));
    }
    if nodes.is_empty() {
        return Err(Error::Format {
            line: 0,
            msg: "no edges".into(),
        });
    }
    let distances = shortest_paths(&nodes, &edges)?;
    Ok(GraphDistances { nodes, distances })
}

pub fn graph_distances(path: impl AsRef<Path>) -> Result<GraphDistances> {
    parse_edge_list(&std::fs::read_to_string(path)?)
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All-pairs Dijkstra.
fn shortest_paths(names: &[String], edges: &[(usize, usize, f64)]) -> Result<DistanceMatrix> {
    let n = names.len();
    let mut adj = vec![Vec::new(); n];
    for &(u, v, w) in edges {
        adj[u].push((v, w));
        adj[v].push((u, w));
    }
    let mut rows = vec![vec![f64::INFINITY; n]; n];
    for (s, dist) in rows.iter_mut().enumerate() {
        dist[s] = 0.0;
        let mut heap = BinaryHeap::from([Item(0.0, s)]);
        while let Some(Item(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, w) in &adj[u] {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Item(nd, v));
                }
            }
        }
    }
    if rows[0].iter().any(|d| d.is_infinite()) {
        let mut comp = vec![usize::MAX; n];
        let mut groups: Vec<Vec<String>> = Vec::new();
        for i in 0..n {
            if comp[i] != usize::MAX {
                continue;
            }
            let g = groups.len();
            let mut members = Vec::new();
            for j in 0..n {
                if rows[i][j].is_finite() {
                    comp[j] = g;
                    members.push(names[j].clone());
                }
            }
            groups.push(members);
        }
        return Err(Error::Disconnected(groups));
    }
    // Dijkstra sums edges in different orders from each end
    for i in 0..n {
        for j in (i + 1)..n {
            let m = rows[i][j].min(rows[j][i]);
            rows[i][j] = m;
            rows[j][i] = m;
        }
    }
    DistanceMatrix::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{center, frechet_mean, FrechetConfig};

    #[test]
    fn parse_and_validate() {
        let ds = parse_embeddings("0.0,0.0\n0.5,0.0\n", false).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.points()[1].coords(), &[0.5, 0.0]);
        match parse_embeddings("0.0,0.0\n1.0,0.0\n", false) {
            Err(Error::Format { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_embeddings("0.0,0.0\n0.1\n", false),
            Err(Error::Format { line: 2, .. })
        ));
        assert!(matches!(
            parse_embeddings("x0,x1\n0.1,abc\n", true),
            Err(Error::Format { line: 2, .. })
        ));
    }

    #[test]
    fn labels_round_trip() {
        let ds = Dataset::from_rows(vec![vec![0.1, 0.2], vec![-0.3, 0.0]])
            .unwrap()
            .with_labels(vec!["a".into(), "b".into()])
            .unwrap();
        let text = format_embeddings(&ds, true);
        assert_eq!(parse_embeddings(&text, true).unwrap(), ds);
    }

    #[test]
    fn save_load_bit_exact() {
        let ds = generate(&GeneratorSpec::tangent_gaussian(50, vec![1.0, 0.3, 2.0], 9)).unwrap();
        let back = parse_embeddings(&format_embeddings(&ds, false), false).unwrap();
        for (a, b) in ds.points().iter().zip(back.points()) {
            for (x, y) in a.coords().iter().zip(b.coords()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn generator_properties() {
        let spec = GeneratorSpec::tangent_gaussian(20, vec![1e-12, 1e-12], 3);
        let ds = generate(&spec).unwrap();
        assert!(ds.points().iter().all(|p| p.norm() < 1e-5));
        let spec = GeneratorSpec::tangent_gaussian(1000, vec![1.0, 1.0], 11);
        let a = generate(&spec).unwrap();
        assert_eq!(a, generate(&spec).unwrap());
        let fm = frechet_mean(&a, &FrechetConfig::default());
        assert!(fm.mean.norm() < 0.1, "{}", fm.mean.norm());
        let bad = GeneratorSpec::tangent_gaussian(5, vec![1.0, 0.0], 1);
        assert!(generate(&bad).is_err());
    }

    #[test]
    fn tree_generator_is_deterministic() {
        let spec = GeneratorSpec::tree_like(40, 5, 0.5, 2);
        let a = generate(&spec).unwrap();
        assert_eq!(a.dim(), 5);
        assert_eq!(a, generate(&spec).unwrap());
    }

    #[test]
    fn graph_examples() {
        let g = parse_edge_list("1 2\n2 3 # path\n").unwrap();
        assert_eq!(g.nodes, vec!["1", "2", "3"]);
        assert_eq!(g.distances.get(0, 2), 2.0);
        let g = parse_edge_list("a b 0.5\n").unwrap();
        assert_eq!(g.distances.get(0, 1), 0.5);
        match parse_edge_list("a b\nc d\n") {
            Err(Error::Disconnected(c)) => assert_eq!(c, vec![vec!["a", "b"], vec!["c", "d"]]),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_edge_list("a b -1\n"),
            Err(Error::Format { line: 1, .. })
        ));
    }

    #[test]
    fn binary_tree_matches_bfs() {
        // heap-indexed balanced binary tree of depth 3
        let mut text = String::new();
        for i in 1..8 {
            text.push_str(&format!("{} {}\n{} {}\n", i, 2 * i, i, 2 * i + 1));
        }
        let g = parse_edge_list(&text).unwrap();
        let pos = |name: usize| g.nodes.iter().position(|s| s == &name.to_string()).unwrap();
        // independent oracle: depth of the lowest common ancestor
        let depth = |mut v: usize| {
            let mut d = 0;
            while v > 1 {
                v /= 2;
                d += 1;
            }
            d
        };
        for a in 1..16usize {
            for b in 1..16usize {
                let (mut x, mut y) = (a, b);
                while x != y {
                    if x > y {
                        x /= 2
                    } else {
                        y /= 2
                    }
                }
                let expect = (depth(a) + depth(b) - 2 * depth(x)) as f64;
                assert_eq!(g.distances.get(pos(a), pos(b)), expect);
            }
        }
        assert_eq!(g.distances.get(pos(8), pos(9)), 2.0);
    }

    #[test]
    fn matrix_validation_and_centering_invariance() {
        assert!(DistanceMatrix::new(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(DistanceMatrix::new(vec![vec![0.0, -1.0], vec![-1.0, 0.0]]).is_err());
        assert!(DistanceMatrix::new(vec![vec![1.0]]).is_err());
        let ds = generate(&GeneratorSpec::tangent_gaussian(30, vec![0.5, 0.2], 4)).unwrap();
        let shifted = ds
            .try_map(|p| PoincarePoint::new(crate::geometry::mobius_add(&[0.3, 0.1], p.coords())))
            .unwrap();
        let (c, _) = center(&shifted, &FrechetConfig::default()).unwrap();
        let (a, b) = (distance_matrix(&shifted), distance_matrix(&c));
        for i in 0..30 {
            for j in 0..30 {
                assert!((a.get(i, j) - b.get(i, j)).abs() < 1e-9);
            }
        }
        let text = format_rows(&a.rows(), None);
        assert_eq!(parse_distance_matrix(&text).unwrap(), a);
    }
}
