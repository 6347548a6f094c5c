//! Mask graphs: simple undirected graphs with an optional bipartition, the
//! random families used in the experiments, a small textual spec language,
//! and a stable JSON form.
//!
//! Vertices are labeled `0..n`. Edges are stored sorted with `u < v`, and all
//! sampling walks vertex pairs in lexicographic order drawing one uniform per
//! pair, so a graph is a pure function of `(family parameters, seed)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde_json::{json, Value};
use thiserror::Error;

use crate::seeding::{self, streams};

/// Errors from graph construction and queries.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("edge probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("vertex label {label} out of range for a graph on {n} vertices")]
    InvalidVertex { label: u32, n: u32 },
    #[error("self-loop at vertex {0}")]
    SelfLoop(u32),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(u32, u32),
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("vertex list is empty")]
    EmptyVertexList,
    #[error("bipartition side lists must partition the vertex set")]
    BadOrientation,
    #[error("edge ({0}, {1}) does not cross the bipartition")]
    NonCrossingEdge(u32, u32),
    #[error("invalid graph spec: {0}")]
    Spec(String),
    #[error("invalid graph json: {0}")]
    Json(String),
}

/// A bipartition of the vertex set into a left and a right class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Orientation {
    left: Vec<u32>,
    right: Vec<u32>,
    is_left: Vec<bool>,
}

impl Orientation {
    pub fn left(&self) -> &[u32] {
        &self.left
    }

    pub fn right(&self) -> &[u32] {
        &self.right
    }

    pub fn is_left(&self, v: u32) -> bool {
        self.is_left[v as usize]
    }
}

/// A simple undirected graph, optionally bipartitioned.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: u32,
    edges: Vec<(u32, u32)>,
    adj: Vec<Vec<u32>>,
    orientation: Option<Orientation>,
}

impl Graph {
    /// Builds a graph from an edge list, validating labels and simplicity.
    pub fn from_parts(n: u32, edges: Vec<(u32, u32)>) -> Result<Self, GraphError> {
        Self::build(n, edges, None)
    }

    /// Builds a bipartitioned graph; `left` lists the left-class vertices and
    /// every edge must cross the partition.
    pub fn from_parts_bipartite(
        n: u32,
        edges: Vec<(u32, u32)>,
        left: Vec<u32>,
    ) -> Result<Self, GraphError> {
        Self::build(n, edges, Some(left))
    }

    fn build(n: u32, edges: Vec<(u32, u32)>, left: Option<Vec<u32>>) -> Result<Self, GraphError> {
        let mut norm = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a >= n {
                return Err(GraphError::InvalidVertex { label: a, n });
            }
            if b >= n {
                return Err(GraphError::InvalidVertex { label: b, n });
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        for w in norm.windows(2) {
            if w[0] == w[1] {
                return Err(GraphError::DuplicateEdge(w[0].0, w[0].1));
            }
        }

        let orientation = match left {
            None => None,
            Some(mut left) => {
                left.sort_unstable();
                left.dedup();
                if left.iter().any(|&v| v >= n) {
                    return Err(GraphError::BadOrientation);
                }
                let mut is_left = vec![false; n as usize];
                for &v in &left {
                    is_left[v as usize] = true;
                }
                let right: Vec<u32> = (0..n).filter(|&v| !is_left[v as usize]).collect();
                for &(u, v) in &norm {
                    if is_left[u as usize] == is_left[v as usize] {
                        return Err(GraphError::NonCrossingEdge(u, v));
                    }
                }
                Some(Orientation {
                    left,
                    right,
                    is_left,
                })
            }
        };

        let mut adj = vec![Vec::new(); n as usize];
        for &(u, v) in &norm {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }

        Ok(Self {
            n,
            edges: norm,
            adj,
            orientation,
        })
    }

    /// The complete graph on `n` vertices.
    pub fn complete(n: u32) -> Self {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                edges.push((u, v));
            }
        }
        Self::from_parts(n, edges).expect("complete graph construction cannot fail")
    }

    /// The complete bipartite graph with left class `0..n` and right class
    /// `n..n+m`.
    pub fn complete_bipartite(n: u32, m: u32) -> Self {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in n..(n + m) {
                edges.push((u, v));
            }
        }
        Self::from_parts_bipartite(n + m, edges, (0..n).collect())
            .expect("complete bipartite construction cannot fail")
    }

    /// An Erdos-Renyi graph G(n, p): one uniform draw per vertex pair, pairs
    /// visited in lexicographic order.
    pub fn erdos_renyi(n: u32, p: f64, rng: &mut impl Rng) -> Result<Self, GraphError> {
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(GraphError::InvalidProbability(p));
        }
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.random::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        Self::from_parts(n, edges)
    }

    /// A bipartite Erdos-Renyi graph with left class `0..n`, right class
    /// `n..n+m`, and independent edge probability `p`; crossing pairs are
    /// visited in lexicographic order.
    pub fn bipartite_erdos_renyi(
        n: u32,
        m: u32,
        p: f64,
        rng: &mut impl Rng,
    ) -> Result<Self, GraphError> {
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(GraphError::InvalidProbability(p));
        }
        let mut edges = Vec::new();
        for u in 0..n {
            for v in n..(n + m) {
                if rng.random::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        Self::from_parts_bipartite(n + m, edges, (0..n).collect())
    }

    pub fn n_vertices(&self) -> usize {
        self.n as usize
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges sorted lexicographically with `u < v`.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Sorted neighbor list of `v`.
    pub fn neighbors(&self, v: u32) -> Result<&[u32], GraphError> {
        self.check_vertex(v)?;
        Ok(&self.adj[v as usize])
    }

    pub fn degree(&self, v: u32) -> Result<usize, GraphError> {
        self.check_vertex(v)?;
        Ok(self.adj[v as usize].len())
    }

    pub fn adjacent(&self, u: u32, v: u32) -> bool {
        if u >= self.n || v >= self.n || u == v {
            return false;
        }
        self.adj[u as usize].binary_search(&v).is_ok()
    }

    /// Position of edge `{u, v}` in [`edges`](Self::edges), if present.
    pub fn edge_index(&self, u: u32, v: u32) -> Option<usize> {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).ok()
    }

    /// The number of vertices adjacent to every vertex in `vs`.
    pub fn shared_degree(&self, vs: &[u32]) -> Result<usize, GraphError> {
        if vs.is_empty() {
            return Err(GraphError::EmptyVertexList);
        }
        for &v in vs {
            self.check_vertex(v)?;
        }
        let mut distinct: Vec<u32> = vs.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        distinct.sort_unstable_by_key(|&v| self.adj[v as usize].len());
        let mut common: Vec<u32> = self.adj[distinct[0] as usize].clone();
        for &v in &distinct[1..] {
            let other = &self.adj[v as usize];
            common.retain(|w| other.binary_search(w).is_ok());
            if common.is_empty() {
                break;
            }
        }
        Ok(common.len())
    }

    /// The maximum-degree vertex (smallest label on ties) and its degree.
    pub fn max_degree_vertex(&self) -> Result<(u32, usize), GraphError> {
        if self.n == 0 {
            return Err(GraphError::EmptyGraph);
        }
        let mut best = (0u32, self.adj[0].len());
        for v in 1..self.n {
            let d = self.adj[v as usize].len();
            if d > best.1 {
                best = (v, d);
            }
        }
        Ok(best)
    }

    pub fn orientation(&self) -> Option<&Orientation> {
        self.orientation.as_ref()
    }

    /// Stable JSON form: `{"n": .., "edges": [[u, v], ..], "left": [..]?}`.
    pub fn to_json(&self) -> Value {
        let edges: Vec<Value> = self.edges.iter().map(|&(u, v)| json!([u, v])).collect();
        match &self.orientation {
            Some(o) => json!({"n": self.n, "edges": edges, "left": o.left}),
            None => json!({"n": self.n, "edges": edges}),
        }
    }

    /// Parses the JSON form produced by [`to_json`](Self::to_json).
    pub fn from_json(value: &Value) -> Result<Self, GraphError> {
        let obj = value
            .as_object()
            .ok_or_else(|| GraphError::Json("expected an object".into()))?;
        let n = obj
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| GraphError::Json("missing or non-integer field `n`".into()))?;
        let n = u32::try_from(n).map_err(|_| GraphError::Json("`n` too large".into()))?;
        let edges_val = obj
            .get("edges")
            .and_then(Value::as_array)
            .ok_or_else(|| GraphError::Json("missing or non-array field `edges`".into()))?;
        let mut edges = Vec::with_capacity(edges_val.len());
        for e in edges_val {
            let pair = e
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| GraphError::Json("each edge must be a two-element array".into()))?;
            let u = pair[0]
                .as_u64()
                .and_then(|x| u32::try_from(x).ok())
                .ok_or_else(|| GraphError::Json("edge endpoint is not a small integer".into()))?;
            let v = pair[1]
                .as_u64()
                .and_then(|x| u32::try_from(x).ok())
                .ok_or_else(|| GraphError::Json("edge endpoint is not a small integer".into()))?;
            edges.push((u, v));
        }
        match obj.get("left") {
            None | Some(Value::Null) => Self::from_parts(n, edges),
            Some(Value::Array(items)) => {
                let mut left = Vec::with_capacity(items.len());
                for item in items {
                    let v = item
                        .as_u64()
                        .and_then(|x| u32::try_from(x).ok())
                        .ok_or_else(|| GraphError::Json("`left` entries must be integers".into()))?;
                    left.push(v);
                }
                Self::from_parts_bipartite(n, edges, left)
            }
            Some(_) => Err(GraphError::Json("`left` must be an array".into())),
        }
    }

    fn check_vertex(&self, v: u32) -> Result<(), GraphError> {
        if v >= self.n {
            Err(GraphError::InvalidVertex { label: v, n: self.n })
        } else {
            Ok(())
        }
    }
}

/// A graph family description in the CLI mini-language.
///
/// Examples: `complete:n=10`, `kbip:n=8,m=8`, `er:n=50,p=0.3`,
/// `biper:n=40,m=10,p=0.2`.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSpec {
    Complete { n: u32 },
    Kbip { n: u32, m: u32 },
    Er { n: u32, p: f64 },
    Biper { n: u32, m: u32, p: f64 },
}

impl GraphSpec {
    /// Materializes the graph; random families draw from a stream derived
    /// from `base_seed`, so the result is a pure function of spec and seed.
    pub fn build(&self, base_seed: u64) -> Result<Graph, GraphError> {
        match *self {
            GraphSpec::Complete { n } => Ok(Graph::complete(n)),
            GraphSpec::Kbip { n, m } => Ok(Graph::complete_bipartite(n, m)),
            GraphSpec::Er { n, p } => {
                let mut rng = seeding::trial_rng(base_seed, streams::GRAPH, 0);
                Graph::erdos_renyi(n, p, &mut rng)
            }
            GraphSpec::Biper { n, m, p } => {
                let mut rng = seeding::trial_rng(base_seed, streams::GRAPH, 0);
                Graph::bipartite_erdos_renyi(n, m, p, &mut rng)
            }
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            GraphSpec::Complete { .. } => "complete",
            GraphSpec::Kbip { .. } => "kbip",
            GraphSpec::Er { .. } => "er",
            GraphSpec::Biper { .. } => "biper",
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GraphSpec::Complete { n } => write!(f, "complete:n={n}"),
            GraphSpec::Kbip { n, m } => write!(f, "kbip:n={n},m={m}"),
            GraphSpec::Er { n, p } => write!(f, "er:n={n},p={p}"),
            GraphSpec::Biper { n, m, p } => write!(f, "biper:n={n},m={m},p={p}"),
        }
    }
}

impl FromStr for GraphSpec {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, GraphError> {
        let (family, params) = s
            .split_once(':')
            .ok_or_else(|| GraphError::Spec(format!("missing `:` after family in `{s}`")))?;
        let mut n: Option<u32> = None;
        let mut m: Option<u32> = None;
        let mut p: Option<f64> = None;
        for item in params.split(',') {
            let (key, val) = item
                .split_once('=')
                .ok_or_else(|| GraphError::Spec(format!("expected key=value, got `{item}`")))?;
            match key {
                "n" | "m" => {
                    let parsed: u32 = val
                        .parse()
                        .map_err(|_| GraphError::Spec(format!("bad value for `{key}`: `{val}`")))?;
                    let slot = if key == "n" { &mut n } else { &mut m };
                    if slot.replace(parsed).is_some() {
                        return Err(GraphError::Spec(format!("duplicate key `{key}`")));
                    }
                }
                "p" => {
                    let parsed: f64 = val
                        .parse()
                        .map_err(|_| GraphError::Spec(format!("bad value for `p`: `{val}`")))?;
                    if p.replace(parsed).is_some() {
                        return Err(GraphError::Spec("duplicate key `p`".into()));
                    }
                }
                other => return Err(GraphError::Spec(format!("unknown key `{other}`"))),
            }
        }
        let need = |opt: Option<u32>, key: &str| {
            opt.ok_or_else(|| GraphError::Spec(format!("missing key `{key}` for `{family}`")))
        };
        let need_p =
            |opt: Option<f64>| opt.ok_or_else(|| GraphError::Spec(format!("missing key `p` for `{family}`")));
        let reject_p = |opt: Option<f64>| {
            if opt.is_some() {
                Err(GraphError::Spec(format!("key `p` not valid for `{family}`")))
            } else {
                Ok(())
            }
        };
        let reject_m = |opt: Option<u32>| {
            if opt.is_some() {
                Err(GraphError::Spec(format!("key `m` not valid for `{family}`")))
            } else {
                Ok(())
            }
        };
        match family {
            "complete" => {
                reject_p(p)?;
                reject_m(m)?;
                Ok(GraphSpec::Complete { n: need(n, "n")? })
            }
            "kbip" => {
                reject_p(p)?;
                Ok(GraphSpec::Kbip {
                    n: need(n, "n")?,
                    m: need(m, "m")?,
                })
            }
            "er" => {
                reject_m(m)?;
                Ok(GraphSpec::Er {
                    n: need(n, "n")?,
                    p: need_p(p)?,
                })
            }
            "biper" => Ok(GraphSpec::Biper {
                n: need(n, "n")?,
                m: need(m, "m")?,
                p: need_p(p)?,
            }),
            other => Err(GraphError::Spec(format!("unknown family `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding;

    #[test]
    fn complete_graph_counts() {
        let g = Graph::complete(5);
        assert_eq!(g.n_vertices(), 5);
        assert_eq!(g.n_edges(), 10);
        assert_eq!(g.degree(3).unwrap(), 4);
        assert!(g.orientation().is_none());
    }

    #[test]
    fn complete_bipartite_structure() {
        let g = Graph::complete_bipartite(2, 3);
        assert_eq!(g.n_vertices(), 5);
        assert_eq!(g.n_edges(), 6);
        let o = g.orientation().unwrap();
        assert_eq!(o.left(), &[0, 1]);
        assert_eq!(o.right(), &[2, 3, 4]);
        assert!(o.is_left(1));
        assert!(!o.is_left(4));
        assert_eq!(g.degree(0).unwrap(), 3);
        assert_eq!(g.degree(4).unwrap(), 2);
    }

    #[test]
    fn from_parts_rejects_bad_edges() {
        assert!(matches!(
            Graph::from_parts(3, vec![(0, 3)]),
            Err(GraphError::InvalidVertex { label: 3, n: 3 })
        ));
        assert!(matches!(
            Graph::from_parts(3, vec![(1, 1)]),
            Err(GraphError::SelfLoop(1))
        ));
        assert!(matches!(
            Graph::from_parts(3, vec![(0, 1), (1, 0)]),
            Err(GraphError::DuplicateEdge(0, 1))
        ));
    }

    #[test]
    fn bipartite_rejects_non_crossing_edge() {
        assert!(matches!(
            Graph::from_parts_bipartite(4, vec![(0, 1)], vec![0, 1]),
            Err(GraphError::NonCrossingEdge(0, 1))
        ));
    }

    #[test]
    fn edges_are_sorted_and_indexable() {
        let g = Graph::from_parts(4, vec![(3, 2), (1, 0), (0, 2)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (2, 3)]);
        assert_eq!(g.edge_index(2, 0), Some(1));
        assert_eq!(g.edge_index(3, 2), Some(2));
        assert_eq!(g.edge_index(1, 2), None);
        assert!(g.adjacent(0, 2));
        assert!(!g.adjacent(1, 3));
    }

    #[test]
    fn shared_degree_examples() {
        // Square 0-1-2-3-0: opposite corners share both others.
        let g = Graph::from_parts(4, vec![(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        assert_eq!(g.shared_degree(&[0, 2]).unwrap(), 2);
        assert_eq!(g.shared_degree(&[0, 1]).unwrap(), 0);
        assert_eq!(g.shared_degree(&[1]).unwrap(), 2);
        assert!(matches!(
            g.shared_degree(&[]),
            Err(GraphError::EmptyVertexList)
        ));
        assert!(g.shared_degree(&[9]).is_err());
    }

    #[test]
    fn max_degree_vertex_breaks_ties_by_label() {
        let g = Graph::from_parts(4, vec![(0, 1), (2, 3)]).unwrap();
        assert_eq!(g.max_degree_vertex().unwrap(), (0, 1));
        let star = Graph::from_parts(4, vec![(2, 0), (2, 1), (2, 3)]).unwrap();
        assert_eq!(star.max_degree_vertex().unwrap(), (2, 3));
        assert!(matches!(
            Graph::from_parts(0, vec![]).unwrap().max_degree_vertex(),
            Err(GraphError::EmptyGraph)
        ));
    }

    #[test]
    fn erdos_renyi_is_deterministic_and_edge_monotone_extremes() {
        let mut rng = seeding::trial_rng(11, 0, 0);
        let g1 = Graph::erdos_renyi(20, 0.3, &mut rng).unwrap();
        let mut rng = seeding::trial_rng(11, 0, 0);
        let g2 = Graph::erdos_renyi(20, 0.3, &mut rng).unwrap();
        assert_eq!(g1, g2);

        let mut rng = seeding::trial_rng(1, 0, 0);
        assert_eq!(Graph::erdos_renyi(10, 0.0, &mut rng).unwrap().n_edges(), 0);
        assert_eq!(Graph::erdos_renyi(10, 1.0, &mut rng).unwrap().n_edges(), 45);
        assert!(Graph::erdos_renyi(5, 1.5, &mut rng).is_err());
        assert!(Graph::erdos_renyi(5, -0.1, &mut rng).is_err());
    }

    #[test]
    fn bipartite_er_respects_partition() {
        let mut rng = seeding::trial_rng(3, 0, 0);
        let g = Graph::bipartite_erdos_renyi(6, 4, 0.5, &mut rng).unwrap();
        let o = g.orientation().unwrap();
        for &(u, v) in g.edges() {
            assert_ne!(o.is_left(u), o.is_left(v));
        }
        let mut rng2 = seeding::trial_rng(3, 0, 0);
        assert_eq!(g, Graph::bipartite_erdos_renyi(6, 4, 0.5, &mut rng2).unwrap());
    }

    #[test]
    fn json_round_trip_plain_and_bipartite() {
        let g = Graph::from_parts(4, vec![(0, 1), (1, 2)]).unwrap();
        assert_eq!(Graph::from_json(&g.to_json()).unwrap(), g);
        let b = Graph::complete_bipartite(2, 2);
        assert_eq!(Graph::from_json(&b.to_json()).unwrap(), b);
        assert!(Graph::from_json(&serde_json::json!({"edges": []})).is_err());
        assert!(Graph::from_json(&serde_json::json!({"n": 2, "edges": [[0]]})).is_err());
    }

    #[test]
    fn spec_language_round_trips() {
        for s in [
            "complete:n=10",
            "kbip:n=8,m=8",
            "er:n=50,p=0.3",
            "biper:n=40,m=10,p=0.2",
        ] {
            let spec: GraphSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
    }

    #[test]
    fn spec_language_names_bad_tokens() {
        let err = "ladder:n=3".parse::<GraphSpec>().unwrap_err().to_string();
        assert!(err.contains("ladder"), "{err}");
        let err = "er:n=3,q=0.5".parse::<GraphSpec>().unwrap_err().to_string();
        assert!(err.contains('q'), "{err}");
        let err = "er:n=3".parse::<GraphSpec>().unwrap_err().to_string();
        assert!(err.contains('p'), "{err}");
        let err = "er:n=abc,p=0.1".parse::<GraphSpec>().unwrap_err().to_string();
        assert!(err.contains("abc"), "{err}");
        let err = "complete:n=4,p=0.5".parse::<GraphSpec>().unwrap_err().to_string();
        assert!(err.contains('p'), "{err}");
    }

    #[test]
    fn spec_build_is_deterministic() {
        let spec: GraphSpec = "er:n=30,p=0.2".parse().unwrap();
        assert_eq!(spec.build(99).unwrap(), spec.build(99).unwrap());
        assert_ne!(spec.build(99).unwrap(), spec.build(100).unwrap());
    }
}
