//! Metric graphs: finitely many vertices joined by edges that carry positive
//! lengths and a fixed orientation (init -> term).  An optional straight-line
//! planar embedding may be attached; when present, edge lengths must equal
//! the Euclidean distances of their endpoints.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph is not connected")]
    DisconnectedGraph,
    #[error("edge {0} is a loop (init == term)")]
    LoopEdge(usize),
    #[error("edge {0} has non-positive length {1}")]
    NonPositiveLength(usize, f64),
    #[error("edge {edge}: embedded endpoint distance {found} does not match length {expected}")]
    EmbeddingLengthMismatch {
        edge: usize,
        expected: f64,
        found: f64,
    },
    #[error("edge {edge} references unknown vertex {vertex}")]
    UnknownVertex { edge: usize, vertex: String },
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("graph has no edges")]
    Empty,
    #[error("edge {0} is semi-infinite; this operation requires finite lengths")]
    SemiInfiniteEdge(usize),
    #[error("embedding is required but missing")]
    MissingEmbedding,
}

/// JSON description of a metric graph.  Lengths are in abstract units; a
/// length of `null` (or the string "inf") denotes a semi-infinite edge.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphSpec {
    pub vertices: Vec<VertexSpec>,
    pub edges: Vec<EdgeSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VertexSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xy: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub id: String,
    pub init: String,
    pub term: String,
    #[serde(default, deserialize_with = "de_length", serialize_with = "ser_length")]
    pub length: f64,
}

fn de_length<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Str(String),
        None,
    }
    Ok(match Raw::deserialize(d)? {
        Raw::Num(x) => x,
        Raw::Str(s) if s == "inf" => f64::INFINITY,
        Raw::Str(s) => s.parse().map_err(serde::de::Error::custom)?,
        Raw::None => f64::INFINITY,
    })
}

fn ser_length<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("inf")
    }
}

/// One oriented edge of a validated graph; `init`/`term` are dense vertex
/// indices assigned in spec order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub init: usize,
    pub term: usize,
    pub length: f64,
}

impl Edge {
    pub fn is_finite(&self) -> bool {
        self.length.is_finite()
    }
}

/// A validated metric graph.  Vertex and edge ids are dense integers in spec
/// order; they double as block indices everywhere downstream, so identical
/// specs produce identical discretizations.
#[derive(Debug, Clone)]
pub struct MetricGraph {
    edges: Vec<Edge>,
    n_vertices: usize,
    embedding: Option<Vec<[f64; 2]>>,
    vertex_names: Vec<String>,
    edge_names: Vec<String>,
    ell0: f64,
}

impl MetricGraph {
    /// Validates a spec and builds the graph: connectivity, no loops,
    /// positive lengths, and (when every vertex carries coordinates) the
    /// straight-edge length consistency.
    pub fn build(spec: &GraphSpec) -> Result<Self, GraphError> {
        if spec.edges.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut v_index: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, v) in spec.vertices.iter().enumerate() {
            if v_index.insert(v.id.as_str(), i).is_some() {
                return Err(GraphError::DuplicateId(v.id.clone()));
            }
        }
        let mut seen_edges = BTreeMap::new();
        let mut edges = Vec::with_capacity(spec.edges.len());
        for (k, e) in spec.edges.iter().enumerate() {
            if seen_edges.insert(e.id.as_str(), k).is_some() {
                return Err(GraphError::DuplicateId(e.id.clone()));
            }
            let init = *v_index.get(e.init.as_str()).ok_or(GraphError::UnknownVertex {
                edge: k,
                vertex: e.init.clone(),
            })?;
            let term = *v_index.get(e.term.as_str()).ok_or(GraphError::UnknownVertex {
                edge: k,
                vertex: e.term.clone(),
            })?;
            if init == term {
                return Err(GraphError::LoopEdge(k));
            }
            if !(e.length > 0.0) {
                return Err(GraphError::NonPositiveLength(k, e.length));
            }
            edges.push(Edge {
                init,
                term,
                length: e.length,
            });
        }

        let n = spec.vertices.len();
        let embedding = if spec.vertices.iter().all(|v| v.xy.is_some()) {
            let coords: Vec<[f64; 2]> = spec.vertices.iter().map(|v| v.xy.unwrap()).collect();
            for (k, e) in edges.iter().enumerate() {
                if !e.is_finite() {
                    continue;
                }
                let a = coords[e.init];
                let b = coords[e.term];
                let d = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                if (d - e.length).abs() > 1e-9 * e.length.max(1.0) {
                    return Err(GraphError::EmbeddingLengthMismatch {
                        edge: k,
                        expected: e.length,
                        found: d,
                    });
                }
            }
            Some(coords)
        } else {
            None
        };

        // connectivity over the undirected skeleton
        let mut adj = vec![Vec::new(); n];
        for e in &edges {
            adj[e.init].push(e.term);
            adj[e.term].push(e.init);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(GraphError::DisconnectedGraph);
        }

        let ell0 = edges
            .iter()
            .map(|e| e.length)
            .filter(|l| l.is_finite())
            .fold(f64::INFINITY, f64::min);

        Ok(Self {
            edges,
            n_vertices: n,
            embedding,
            vertex_names: spec.vertices.iter().map(|v| v.id.clone()).collect(),
            edge_names: spec.edges.iter().map(|e| e.id.clone()).collect(),
            ell0,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let spec: GraphSpec =
            serde_json::from_str(text).map_err(|e| GraphError::DuplicateId(e.to_string()))?;
        Self::build(&spec)
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    /// Minimal finite edge length.
    pub fn ell0(&self) -> f64 {
        self.ell0
    }

    pub fn embedding(&self) -> Option<&[[f64; 2]]> {
        self.embedding.as_deref()
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.vertex_names[v]
    }

    pub fn edge_name(&self, e: usize) -> &str {
        &self.edge_names[e]
    }

    /// Edges adjacent to `v`, in id order.  An edge adjacent with both
    /// endpoints cannot occur (loops are rejected).
    pub fn edges_at(&self, v: usize) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| self.edges[e].init == v || self.edges[e].term == v)
            .collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges_at(v).len()
    }

    pub fn has_semi_infinite(&self) -> bool {
        self.edges.iter().any(|e| !e.is_finite())
    }

    /// Rejects graphs with semi-infinite edges; all numerical operations call
    /// this before discretizing.
    pub fn require_finite(&self) -> Result<(), GraphError> {
        for (k, e) in self.edges.iter().enumerate() {
            if !e.is_finite() {
                return Err(GraphError::SemiInfiniteEdge(k));
            }
        }
        Ok(())
    }

    /// Betti numbers (b0, b1).  The graph is connected by construction, so
    /// b0 = 1 and b1 = |E| - |V| + 1.
    pub fn betti_numbers(&self) -> (usize, usize) {
        (1, self.edges.len() + 1 - self.n_vertices)
    }

    /// Euler characteristic |V| - |E| = b0 - b1.
    pub fn euler_index(&self) -> i64 {
        self.n_vertices as i64 - self.edges.len() as i64
    }

    /// Fundamental cycles with respect to a BFS spanning tree.  Each cycle is
    /// a list of (edge id, sign) with sign +1 when the cycle traverses the
    /// edge along its orientation.  Exactly b1 cycles are returned.
    pub fn fundamental_cycles(&self) -> Vec<Vec<(usize, f64)>> {
        let n = self.n_vertices;
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n]; // (vertex, edge)
        let mut in_tree = vec![false; self.edges.len()];
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for e in self.edges_at(v) {
                let w = if self.edges[e].init == v {
                    self.edges[e].term
                } else {
                    self.edges[e].init
                };
                if !seen[w] {
                    seen[w] = true;
                    in_tree[e] = true;
                    parent[w] = Some((v, e));
                    queue.push_back(w);
                }
            }
        }
        // path from each vertex up to the root, as (edge, sign along path)
        let path_to_root = |mut v: usize| -> Vec<(usize, f64)> {
            let mut path = Vec::new();
            while let Some((p, e)) = parent[v] {
                let sign = if self.edges[e].term == v { -1.0 } else { 1.0 };
                // walking from v toward the root traverses e against its
                // orientation when v is the terminal vertex
                path.push((e, sign));
                v = p;
            }
            path
        };
        let mut cycles = Vec::new();
        for (e, edge) in self.edges.iter().enumerate() {
            if in_tree[e] {
                continue;
            }
            // cycle: init -> term along e, then term back to init in the tree
            let mut coeff = vec![0.0; self.edges.len()];
            coeff[e] = 1.0;
            for (t, s) in path_to_root(edge.term) {
                coeff[t] += s;
            }
            for (t, s) in path_to_root(edge.init) {
                coeff[t] -= s;
            }
            let cycle: Vec<(usize, f64)> = coeff
                .iter()
                .enumerate()
                .filter(|(_, &c)| c != 0.0)
                .map(|(t, &c)| (t, c))
                .collect();
            cycles.push(cycle);
        }
        cycles
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn spec(vertices: &[&str], edges: &[(&str, &str, &str, f64)]) -> GraphSpec {
        GraphSpec {
            vertices: vertices
                .iter()
                .map(|id| VertexSpec {
                    id: id.to_string(),
                    xy: None,
                })
                .collect(),
            edges: edges
                .iter()
                .map(|(id, a, b, l)| EdgeSpec {
                    id: id.to_string(),
                    init: a.to_string(),
                    term: b.to_string(),
                    length: *l,
                })
                .collect(),
        }
    }

    #[test]
    fn single_edge_is_valid() {
        let g = MetricGraph::build(&spec(&["a", "b"], &[("e", "a", "b", 1.0)])).unwrap();
        assert_eq!(g.ell0(), 1.0);
        assert_eq!(g.betti_numbers(), (1, 0));
        assert_eq!(g.euler_index(), 1);
    }

    #[test]
    fn loop_edge_is_rejected() {
        let err = MetricGraph::build(&spec(&["a", "b"], &[("e", "a", "a", 1.0)])).unwrap_err();
        assert!(matches!(err, GraphError::LoopEdge(0)));
    }

    #[test]
    fn three_star_min_length() {
        let g = MetricGraph::build(&spec(
            &["c", "a", "b", "d"],
            &[
                ("e1", "c", "a", 1.0),
                ("e2", "c", "b", 1.5),
                ("e3", "c", "d", 2.0),
            ],
        ))
        .unwrap();
        assert_eq!(g.ell0(), 1.0);
        assert_eq!(g.euler_index(), 1);
        assert!(g.fundamental_cycles().is_empty());
    }

    #[test]
    fn theta_graph_topology() {
        let g = MetricGraph::build(&spec(
            &["a", "b"],
            &[
                ("e1", "a", "b", 1.0),
                ("e2", "a", "b", 1.2),
                ("e3", "a", "b", 1.5),
            ],
        ))
        .unwrap();
        assert_eq!(g.betti_numbers(), (1, 2));
        assert_eq!(g.euler_index(), -1);
        assert_eq!(g.fundamental_cycles().len(), 2);
    }

    #[test]
    fn two_cycle() {
        let g = MetricGraph::build(&spec(
            &["a", "b"],
            &[("e1", "a", "b", 1.0), ("e2", "b", "a", 1.0)],
        ))
        .unwrap();
        assert_eq!(g.betti_numbers(), (1, 1));
        assert_eq!(g.euler_index(), 0);
    }

    #[test]
    fn disconnected_is_rejected() {
        let err = MetricGraph::build(&spec(
            &["a", "b", "c", "d"],
            &[("e1", "a", "b", 1.0), ("e2", "c", "d", 1.0)],
        ))
        .unwrap_err();
        assert!(matches!(err, GraphError::DisconnectedGraph));
    }

    #[test]
    fn nonpositive_length_rejected() {
        let err = MetricGraph::build(&spec(&["a", "b"], &[("e", "a", "b", 0.0)])).unwrap_err();
        assert!(matches!(err, GraphError::NonPositiveLength(0, _)));
    }

    #[test]
    fn embedding_mismatch_rejected() {
        let mut s = spec(&["a", "b"], &[("e", "a", "b", 2.0)]);
        s.vertices[0].xy = Some([0.0, 0.0]);
        s.vertices[1].xy = Some([1.0, 0.0]);
        let err = MetricGraph::build(&s).unwrap_err();
        assert!(matches!(err, GraphError::EmbeddingLengthMismatch { .. }));
    }

    #[test]
    fn semi_infinite_representable_but_rejected_numerically() {
        let mut s = spec(&["a", "b", "c"], &[("e1", "a", "b", 1.0)]);
        s.edges.push(EdgeSpec {
            id: "ray".into(),
            init: "b".into(),
            term: "c".into(),
            length: f64::INFINITY,
        });
        let g = MetricGraph::build(&s).unwrap();
        assert_eq!(g.ell0(), 1.0); // infinite edges do not lower ell0
        assert!(g.has_semi_infinite());
        assert!(matches!(
            g.require_finite(),
            Err(GraphError::SemiInfiniteEdge(1))
        ));
    }

    #[test]
    fn deterministic_ids() {
        let s = spec(
            &["x", "y", "z"],
            &[("p", "x", "y", 1.0), ("q", "y", "z", 2.0)],
        );
        let g1 = MetricGraph::build(&s).unwrap();
        let g2 = MetricGraph::build(&s).unwrap();
        assert_eq!(g1.edges(), g2.edges());
        assert_eq!(g1.vertex_name(0), "x");
        assert_eq!(g1.edge_name(1), "q");
    }
}
