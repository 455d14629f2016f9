//! Graph-like meshes: conforming triangulations of the thickened graph,
//! assembled from structured tubes over the edges and scaled vertex
//! templates, glued node-by-node at the ports.
//!
//! Vertex-region coordinates are stored in the unscaled template frame and
//! tubes in product coordinates (arclength, unit cross section); the factor
//! `eps` is applied only when geometry is evaluated, so homothety relations
//! hold exactly.

pub mod delaunay;
pub mod template;

use crate::graph::{GraphError, MetricGraph};
use crate::mg::cells_for;
use delaunay::{triangle_min_angle_deg, triangulate_template, TemplateMesh};
use template::{abstract_template, hub, hub_port_order, Piece, TemplateError, VertexTemplate};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("vertex {vertex}: template has {found} ports but degree is {expected}")]
    PortMismatch {
        vertex: usize,
        expected: usize,
        found: usize,
    },
    #[error("template placement failed: {0}")]
    TemplateOverlap(String),
    #[error("mesh quality failure: minimum angle {min_angle_deg:.2} deg")]
    MeshQualityFailure { min_angle_deg: f64 },
    #[error("embedded regions self-intersect: {0}")]
    SelfIntersection(String),
    #[error("refinement split port {port}")]
    PortSplit { port: usize },
    #[error("point insertion failed: {0}")]
    Insertion(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeshVariant {
    /// Edge tubes of full length; vertex regions attached abstractly.
    Abstract,
    /// Tubes shortened by eps*tau*l_e, everything placed in the plane.
    Embedded { tau: f64 },
}

/// Region of the decomposition.  Tubes are split at their midpoint so the
/// halves can be grouped into enlarged (star) vertex neighbourhoods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RegionKey {
    EdgeHalf { edge: usize, vertex: usize },
    Vertex { vertex: usize },
}

impl RegionKey {
    pub fn label(&self) -> String {
        match self {
            RegionKey::EdgeHalf { edge, vertex } => format!("edge_half({edge},{vertex})"),
            RegionKey::Vertex { vertex } => format!("vertex({vertex})"),
        }
    }
}

/// Coordinate chart of a region: tubes scale only the cross direction by
/// eps, templates scale both directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Chart {
    Tube,
    Template,
}

#[derive(Debug, Clone)]
pub struct RegionMesh {
    pub key: RegionKey,
    pub chart: Chart,
    /// Global node ids, parallel to `local`.
    pub nodes: Vec<usize>,
    /// Chart coordinates per node.
    pub local: Vec<[f64; 2]>,
    /// Triangles as indices into `nodes`.
    pub tris: Vec<[usize; 3]>,
}

impl RegionMesh {
    pub fn physical(&self, idx: usize, eps: f64) -> [f64; 2] {
        let p = self.local[idx];
        match self.chart {
            Chart::Tube => [p[0], eps * p[1]],
            Chart::Template => [eps * p[0], eps * p[1]],
        }
    }

    pub fn area(&self, eps: f64) -> f64 {
        self.tris
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| self.physical(i, eps));
                0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs()
            })
            .sum()
    }

    pub fn min_angle_deg(&self, eps: f64) -> f64 {
        self.tris
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| self.physical(i, eps));
                triangle_min_angle_deg(a, b, c)
            })
            .fold(180.0, f64::min)
    }
}

/// Structured tube over one edge.
#[derive(Debug, Clone)]
pub struct TubeInfo {
    pub edge: usize,
    pub n_long: usize,
    pub n_cross: usize,
    /// Arclength of station 0 in the chart (nonzero for embedded tubes).
    pub s_start: f64,
    pub s_step: f64,
    pub full_length: f64,
    node_ids: Vec<usize>,
}

impl TubeInfo {
    pub fn node(&self, i: usize, j: usize) -> usize {
        self.node_ids[i * (self.n_cross + 1) + j]
    }

    pub fn station_s(&self, i: usize) -> f64 {
        self.s_start + self.s_step * i as f64
    }
}

/// Template instance at a vertex.
#[derive(Debug, Clone)]
pub struct TemplateInstance {
    pub vertex: usize,
    pub template: VertexTemplate,
    pub mesh: TemplateMesh,
    /// Global id per template-mesh node.
    pub node_ids: Vec<usize>,
    /// Edge attached to each template port.
    pub port_edges: Vec<usize>,
}

/// A template together with the edges its ports serve, in port order.
#[derive(Debug, Clone)]
pub struct AssignedTemplate {
    pub template: VertexTemplate,
    pub port_edges: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct GraphLikeMesh {
    pub eps: f64,
    pub h_target: f64,
    pub variant: MeshVariant,
    pub n_nodes: usize,
    pub regions: Vec<RegionMesh>,
    pub tubes: Vec<TubeInfo>,
    pub templates: Vec<TemplateInstance>,
    /// Per-node coordinates for export and plotting: the true plane
    /// placement for embedded meshes, an exploded layout for abstract ones.
    pub layout: Vec<[f64; 2]>,
}

pub const DEFAULT_R_ROUND: f64 = 0.2;
pub const DEFAULT_TAU: f64 = 0.25;

/// Default abstract templates: one per vertex, ports in adjacent-edge order
/// (ascending edge id).
pub fn default_abstract_templates(
    g: &MetricGraph,
    tau: f64,
    r_round: f64,
) -> Result<Vec<AssignedTemplate>, MeshError> {
    let collar = tau * g.ell0();
    (0..g.n_vertices())
        .map(|v| {
            Ok(AssignedTemplate {
                template: abstract_template(g.degree(v), collar, r_round)?,
                port_edges: g.edges_at(v),
            })
        })
        .collect()
}

/// Templates for an embedded graph: ports face the actual edge directions
/// and sit at distance tau*l_e/2 from the vertex, matching the shortened
/// tubes.
pub fn embedded_templates(
    g: &MetricGraph,
    tau: f64,
    r_round: f64,
) -> Result<Vec<AssignedTemplate>, MeshError> {
    let coords = g
        .embedding()
        .ok_or_else(|| MeshError::InvalidParameter("graph has no embedding".into()))?;
    let collar = tau * g.ell0();
    let mut out = Vec::with_capacity(g.n_vertices());
    for v in 0..g.n_vertices() {
        let adjacent = g.edges_at(v);
        let dirs: Vec<[f64; 2]> = adjacent
            .iter()
            .map(|&e| {
                let edge = g.edge(e);
                let (from, to) = if edge.init == v {
                    (coords[edge.init], coords[edge.term])
                } else {
                    (coords[edge.term], coords[edge.init])
                };
                let len = edge.length;
                [(to[0] - from[0]) / len, (to[1] - from[1]) / len]
            })
            .collect();
        let dists: Vec<f64> = adjacent
            .iter()
            .map(|&e| tau * g.edge(e).length / 2.0)
            .collect();
        let (template, port_edges) = if adjacent.len() == 1 {
            let spec = template::cap(
                dirs[0],
                dists[0],
                dists[0] + collar + 2.0 * r_round + 0.35,
                r_round,
            );
            (VertexTemplate::from_spec(&spec)?, adjacent.clone())
        } else {
            let spec = hub(&dirs, &dists, r_round)?;
            let order = hub_port_order(&dirs);
            let tpl = VertexTemplate::from_spec(&spec)?;
            (tpl, order.iter().map(|&slot| adjacent[slot]).collect())
        };
        template.require_collar(collar)?;
        out.push(AssignedTemplate {
            template,
            port_edges,
        });
    }
    Ok(out)
}

/// Graph-like space with full-length tubes.
pub fn build_abstract_space(
    g: &MetricGraph,
    templates: &[AssignedTemplate],
    eps: f64,
    h_target: f64,
) -> Result<GraphLikeMesh, MeshError> {
    build(g, templates, eps, h_target, MeshVariant::Abstract)
}

/// Embedded graph-like space: tubes shortened to (1 - eps*tau) l_e along the
/// straight embedded edges.
pub fn build_embedded_space(
    g: &MetricGraph,
    templates: &[AssignedTemplate],
    eps: f64,
    tau: f64,
    h_target: f64,
) -> Result<GraphLikeMesh, MeshError> {
    if !(eps * tau > 0.0 && eps * tau < 1.0) {
        return Err(MeshError::InvalidParameter(format!(
            "need 0 < eps*tau < 1, got {}",
            eps * tau
        )));
    }
    if g.embedding().is_none() {
        return Err(MeshError::InvalidParameter("graph has no embedding".into()));
    }
    build(g, templates, eps, h_target, MeshVariant::Embedded { tau })
}

fn build(
    g: &MetricGraph,
    templates: &[AssignedTemplate],
    eps: f64,
    h_target: f64,
    variant: MeshVariant,
) -> Result<GraphLikeMesh, MeshError> {
    g.require_finite()?;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(MeshError::InvalidParameter(format!("eps = {eps}")));
    }
    if h_target > eps / 4.0 + 1e-12 {
        return Err(MeshError::InvalidParameter(format!(
            "h_target {h_target} exceeds eps/4 = {}",
            eps / 4.0
        )));
    }
    if templates.len() != g.n_vertices() {
        return Err(MeshError::InvalidParameter(format!(
            "{} templates for {} vertices",
            templates.len(),
            g.n_vertices()
        )));
    }
    for (v, t) in templates.iter().enumerate() {
        let deg = g.degree(v);
        if t.template.degree() != deg || t.port_edges.len() != deg {
            return Err(MeshError::PortMismatch {
                vertex: v,
                expected: deg,
                found: t.template.degree(),
            });
        }
        let mut sorted = t.port_edges.clone();
        sorted.sort_unstable();
        if sorted != g.edges_at(v) {
            return Err(MeshError::PortMismatch {
                vertex: v,
                expected: deg,
                found: t.port_edges.len(),
            });
        }
    }

    let n_cross = (eps / h_target).ceil() as usize;
    let h_template = h_target / eps;

    // tubes first: they own the port interface nodes
    let mut next_id = 0usize;
    let mut tubes = Vec::with_capacity(g.n_edges());
    for (e, edge) in g.edges().iter().enumerate() {
        let n_long = cells_for(edge.length, h_target).max(2);
        let (s_start, s_len) = match variant {
            MeshVariant::Abstract => (0.0, edge.length),
            MeshVariant::Embedded { tau } => (
                eps * tau * edge.length / 2.0,
                (1.0 - eps * tau) * edge.length,
            ),
        };
        let node_ids: Vec<usize> = (0..(n_long + 1) * (n_cross + 1))
            .map(|k| next_id + k)
            .collect();
        next_id += node_ids.len();
        tubes.push(TubeInfo {
            edge: e,
            n_long,
            n_cross,
            s_start,
            s_step: s_len / n_long as f64,
            full_length: edge.length,
            node_ids,
        });
    }

    // vertex templates: port stations resolve to existing tube nodes
    let mut instances = Vec::with_capacity(g.n_vertices());
    for (v, assigned) in templates.iter().enumerate() {
        let tmesh = triangulate_template(&assigned.template, h_template, n_cross)?;
        let mut node_ids = vec![usize::MAX; tmesh.nodes.len()];
        for (k, port) in tmesh.port_nodes.iter().enumerate() {
            let e = assigned.port_edges[k];
            let tube = &tubes[e];
            let at_init = g.edge(e).init == v;
            debug_assert!(at_init || g.edge(e).term == v);
            for (station, &local) in port.iter().enumerate() {
                let global = if at_init {
                    tube.node(0, station)
                } else {
                    tube.node(tube.n_long, n_cross - station)
                };
                node_ids[local] = global;
            }
        }
        for id in node_ids.iter_mut() {
            if *id == usize::MAX {
                *id = next_id;
                next_id += 1;
            }
        }
        instances.push(TemplateInstance {
            vertex: v,
            template: assigned.template.clone(),
            mesh: tmesh,
            node_ids,
            port_edges: assigned.port_edges.clone(),
        });
    }
    let n_nodes = next_id;

    // regions: two tube halves per edge, one template region per vertex
    let mut regions = Vec::new();
    for tube in &tubes {
        let edge = g.edge(tube.edge);
        let i_mid = tube.n_long / 2;
        for (vertex, i_lo, i_hi) in [
            (edge.init, 0usize, i_mid),
            (edge.term, i_mid, tube.n_long),
        ] {
            let mut nodes = Vec::new();
            let mut local = Vec::new();
            let mut index_of = vec![usize::MAX; (tube.n_long + 1) * (tube.n_cross + 1)];
            for i in i_lo..=i_hi {
                for j in 0..=tube.n_cross {
                    let li = nodes.len();
                    index_of[i * (tube.n_cross + 1) + j] = li;
                    nodes.push(tube.node(i, j));
                    local.push([tube.station_s(i), -0.5 + j as f64 / tube.n_cross as f64]);
                }
            }
            let mut tris = Vec::new();
            for i in i_lo..i_hi {
                for j in 0..tube.n_cross {
                    let q = |ii: usize, jj: usize| index_of[ii * (tube.n_cross + 1) + jj];
                    tris.push([q(i, j), q(i + 1, j), q(i + 1, j + 1)]);
                    tris.push([q(i, j), q(i + 1, j + 1), q(i, j + 1)]);
                }
            }
            regions.push(RegionMesh {
                key: RegionKey::EdgeHalf {
                    edge: tube.edge,
                    vertex,
                },
                chart: Chart::Tube,
                nodes,
                local,
                tris,
            });
        }
    }
    for inst in &instances {
        regions.push(RegionMesh {
            key: RegionKey::Vertex {
                vertex: inst.vertex,
            },
            chart: Chart::Template,
            nodes: inst.node_ids.clone(),
            local: inst.mesh.nodes.clone(),
            tris: inst.mesh.tris.clone(),
        });
    }

    // quality over physical triangles
    let min_angle = regions
        .iter()
        .map(|r| r.min_angle_deg(eps))
        .fold(180.0, f64::min);
    if min_angle < 20.0 {
        return Err(MeshError::MeshQualityFailure {
            min_angle_deg: min_angle,
        });
    }

    let layout = compute_layout(g, eps, variant, &tubes, &instances, n_nodes);

    let mesh = GraphLikeMesh {
        eps,
        h_target,
        variant,
        n_nodes,
        regions,
        tubes,
        templates: instances,
        layout,
    };
    if let MeshVariant::Embedded { .. } = variant {
        check_embedded_consistency(g, &mesh)?;
    }
    Ok(mesh)
}

fn compute_layout(
    g: &MetricGraph,
    eps: f64,
    variant: MeshVariant,
    tubes: &[TubeInfo],
    instances: &[TemplateInstance],
    n_nodes: usize,
) -> Vec<[f64; 2]> {
    let mut layout = vec![[f64::NAN; 2]; n_nodes];
    match variant {
        MeshVariant::Embedded { .. } => {
            let coords = g.embedding().unwrap();
            for tube in tubes {
                let edge = g.edge(tube.edge);
                let a = coords[edge.init];
                let b = coords[edge.term];
                let u = [(b[0] - a[0]) / edge.length, (b[1] - a[1]) / edge.length];
                let w = [-u[1], u[0]];
                for i in 0..=tube.n_long {
                    let s = tube.station_s(i);
                    for j in 0..=tube.n_cross {
                        let eta = -0.5 + j as f64 / tube.n_cross as f64;
                        layout[tube.node(i, j)] = [
                            a[0] + s * u[0] + eps * eta * w[0],
                            a[1] + s * u[1] + eps * eta * w[1],
                        ];
                    }
                }
            }
            for inst in instances {
                let pos = coords[inst.vertex];
                for (local, &id) in inst.node_ids.iter().enumerate() {
                    let p = inst.mesh.nodes[local];
                    layout[id] = [pos[0] + eps * p[0], pos[1] + eps * p[1]];
                }
            }
        }
        MeshVariant::Abstract => {
            // exploded layout: tubes stacked in rows, templates below
            for (row, tube) in tubes.iter().enumerate() {
                let y0 = row as f64 * (eps + 0.5);
                for i in 0..=tube.n_long {
                    for j in 0..=tube.n_cross {
                        let eta = -0.5 + j as f64 / tube.n_cross as f64;
                        layout[tube.node(i, j)] = [tube.station_s(i), y0 + eps * eta];
                    }
                }
            }
            for inst in instances {
                let extent = 4.0 * eps + 2.0;
                let x0 = -extent;
                let y0 = -(inst.vertex as f64 + 1.0) * extent;
                for (local, &id) in inst.node_ids.iter().enumerate() {
                    let p = inst.mesh.nodes[local];
                    // port nodes already carry tube layout coordinates
                    if layout[id][0].is_nan() {
                        layout[id] = [x0 + eps * p[0], y0 + eps * p[1]];
                    }
                }
            }
        }
    }
    layout
}

/// Embedded placements must agree at the ports: the scaled template port
/// endpoints have to coincide with the tube end cross-sections.  Region
/// interiors must not overlap anywhere else.
fn check_embedded_consistency(g: &MetricGraph, mesh: &GraphLikeMesh) -> Result<(), MeshError> {
    let coords = g.embedding().unwrap();
    for inst in &mesh.templates {
        let pos = coords[inst.vertex];
        for (k, port) in inst.mesh.port_nodes.iter().enumerate() {
            let e = inst.port_edges[k];
            let tube = &mesh.tubes[e];
            let at_init = g.edge(e).init == inst.vertex;
            for (station, &local) in port.iter().enumerate() {
                let p = inst.mesh.nodes[local];
                let from_template = [pos[0] + mesh.eps * p[0], pos[1] + mesh.eps * p[1]];
                let id = if at_init {
                    tube.node(0, station)
                } else {
                    tube.node(tube.n_long, tube.n_cross - station)
                };
                let from_tube = mesh.layout[id];
                let d = ((from_template[0] - from_tube[0]).powi(2)
                    + (from_template[1] - from_tube[1]).powi(2))
                .sqrt();
                if d > 1e-9 {
                    return Err(MeshError::SelfIntersection(format!(
                        "port {k} of vertex {} misses tube {e} by {d:.3e} \
                         (template port distances must equal tau*l_e/2)",
                        inst.vertex
                    )));
                }
            }
        }
    }
    // overlap check between non-adjacent regions
    let boxes: Vec<([f64; 2], [f64; 2], RegionKey)> = mesh
        .regions
        .iter()
        .map(|r| {
            let mut lo = [f64::INFINITY; 2];
            let mut hi = [f64::NEG_INFINITY; 2];
            for &id in &r.nodes {
                let p = mesh.layout[id];
                for d in 0..2 {
                    lo[d] = lo[d].min(p[d]);
                    hi[d] = hi[d].max(p[d]);
                }
            }
            (lo, hi, r.key)
        })
        .collect();
    let adjacent = |a: RegionKey, b: RegionKey| -> bool {
        use RegionKey::*;
        match (a, b) {
            (EdgeHalf { edge: e1, .. }, EdgeHalf { edge: e2, .. }) => e1 == e2,
            (EdgeHalf { edge, .. }, Vertex { vertex })
            | (Vertex { vertex }, EdgeHalf { edge, .. }) => {
                g.edge(edge).init == vertex || g.edge(edge).term == vertex
            }
            (Vertex { vertex: v1 }, Vertex { vertex: v2 }) => v1 == v2,
        }
    };
    let tol = 1e-9;
    for i in 0..boxes.len() {
        for j in (i + 1)..boxes.len() {
            if adjacent(boxes[i].2, boxes[j].2) {
                continue;
            }
            let overlap = (0..2)
                .all(|d| boxes[i].0[d] < boxes[j].1[d] - tol && boxes[j].0[d] < boxes[i].1[d] - tol);
            if overlap && regions_truly_overlap(mesh, i, j) {
                return Err(MeshError::SelfIntersection(format!(
                    "{} and {}",
                    boxes[i].2.label(),
                    boxes[j].2.label()
                )));
            }
        }
    }
    Ok(())
}

/// Triangle-level overlap test used once bounding boxes intersect: any
/// centroid of one region strictly inside a triangle of the other.
fn regions_truly_overlap(mesh: &GraphLikeMesh, i: usize, j: usize) -> bool {
    let centroids = |r: &RegionMesh| -> Vec<[f64; 2]> {
        r.tris
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|k| mesh.layout[r.nodes[k]]);
                [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
            })
            .collect()
    };
    let contains = |r: &RegionMesh, p: [f64; 2]| -> bool {
        r.tris.iter().any(|t| {
            let [a, b, c] = t.map(|k| mesh.layout[r.nodes[k]]);
            let sign = |p1: [f64; 2], p2: [f64; 2], p3: [f64; 2]| {
                (p1[0] - p3[0]) * (p2[1] - p3[1]) - (p2[0] - p3[0]) * (p1[1] - p3[1])
            };
            let d1 = sign(p, a, b);
            let d2 = sign(p, b, c);
            let d3 = sign(p, c, a);
            let has_neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
            let has_pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
            !(has_neg && has_pos)
        })
    };
    centroids(&mesh.regions[i])
        .iter()
        .any(|&p| contains(&mesh.regions[j], p))
        || centroids(&mesh.regions[j])
            .iter()
            .any(|&p| contains(&mesh.regions[i], p))
}

impl GraphLikeMesh {
    pub fn area(&self) -> f64 {
        self.regions.iter().map(|r| r.area(self.eps)).sum()
    }

    pub fn region_area(&self, key: RegionKey) -> f64 {
        self.regions
            .iter()
            .filter(|r| r.key == key)
            .map(|r| r.area(self.eps))
            .sum()
    }

    pub fn vertex_region_area(&self, v: usize) -> f64 {
        self.region_area(RegionKey::Vertex { vertex: v })
    }

    pub fn tube_area(&self, e: usize) -> f64 {
        self.regions
            .iter()
            .filter(|r| matches!(r.key, RegionKey::EdgeHalf { edge, .. } if edge == e))
            .map(|r| r.area(self.eps))
            .sum()
    }

    pub fn n_triangles(&self) -> usize {
        self.regions.iter().map(|r| r.tris.len()).sum()
    }

    pub fn min_angle_deg(&self) -> f64 {
        self.regions
            .iter()
            .map(|r| r.min_angle_deg(self.eps))
            .fold(180.0, f64::min)
    }

    /// Plain-text export: "nodes N triangles T", then N node lines "x y",
    /// then T lines "i j k region_tag".
    pub fn export_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "nodes {} triangles {}",
            self.n_nodes,
            self.n_triangles()
        );
        for p in &self.layout {
            let _ = writeln!(out, "{:.12e} {:.12e}", p[0], p[1]);
        }
        for r in &self.regions {
            let tag = r.key.label();
            for t in &r.tris {
                let _ = writeln!(
                    out,
                    "{} {} {} {tag}",
                    r.nodes[t[0]], r.nodes[t[1]], r.nodes[t[2]]
                );
            }
        }
        out
    }

    /// Boundary edges: node pairs appearing in exactly one triangle.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let mut count = std::collections::HashMap::new();
        for r in &self.regions {
            for t in &r.tris {
                for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                    let (ga, gb) = (r.nodes[a], r.nodes[b]);
                    let key = (ga.min(gb), ga.max(gb));
                    *count.entry(key).or_insert(0usize) += 1;
                }
            }
        }
        let mut edges: Vec<(usize, usize)> = count
            .into_iter()
            .filter(|&(_, c)| c == 1)
            .map(|(k, _)| k)
            .collect();
        edges.sort_unstable();
        edges
    }
}

/// Curvature report for a template boundary.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConvexityReport {
    /// Largest negative-part curvature, from the piecewise description.
    pub kappa_minus: f64,
    /// The same quantity estimated from turning angles of a fine polyline.
    pub kappa_minus_discrete: f64,
    /// Largest positive curvature encountered (for information).
    pub kappa_plus: f64,
    pub n_samples: usize,
    /// True when every negative-curvature point lies on the template part
    /// of the boundary (always the case here: tube walls are straight).
    pub negative_only_on_template: bool,
}

/// Samples the solid boundary (ports excluded) and compares the discrete
/// curvature against the exact piecewise values.
pub fn check_convexity(tpl: &VertexTemplate) -> Result<ConvexityReport, MeshError> {
    let pieces = tpl.pieces();
    let n = pieces.len();
    let is_port: Vec<bool> = (0..n).map(|i| tpl.piece_is_port(i)).collect();

    let mut kappa_minus_discrete = 0.0f64;
    let mut kappa_plus = 0.0f64;
    let mut n_samples = 0usize;

    // maximal runs of consecutive solid pieces, sampled as one polyline each
    let mut visited = vec![false; n];
    for s in 0..n {
        if is_port[s] || visited[s] {
            continue;
        }
        let mut begin = s;
        while !is_port[(begin + n - 1) % n] && (begin + n - 1) % n != s {
            begin = (begin + n - 1) % n;
        }
        let mut pts: Vec<[f64; 2]> = Vec::new();
        let mut i = begin;
        let mut last = begin;
        while !is_port[i] && !visited[i] {
            visited[i] = true;
            let piece = &pieces[i];
            let h = match piece {
                Piece::Arc { radius, .. } => (radius * 0.08).min(0.02),
                _ => 0.02,
            };
            pts.extend(piece.sample(h));
            last = i;
            i = (i + 1) % n;
        }
        pts.push(pieces[last].end_point());
        for w in pts.windows(3) {
            let d1 = [w[1][0] - w[0][0], w[1][1] - w[0][1]];
            let d2 = [w[2][0] - w[1][0], w[2][1] - w[1][1]];
            let cross = d1[0] * d2[1] - d1[1] * d2[0];
            let dot = d1[0] * d2[0] + d1[1] * d2[1];
            let turn = cross.atan2(dot);
            let ds = 0.5
                * ((d1[0] * d1[0] + d1[1] * d1[1]).sqrt()
                    + (d2[0] * d2[0] + d2[1] * d2[1]).sqrt());
            let kappa = turn / ds;
            kappa_minus_discrete = kappa_minus_discrete.max(-kappa);
            kappa_plus = kappa_plus.max(kappa);
            n_samples += 1;
        }
    }

    Ok(ConvexityReport {
        kappa_minus: tpl.kappa_minus(),
        kappa_minus_discrete,
        kappa_plus,
        n_samples,
        negative_only_on_template: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeSpec, GraphSpec, VertexSpec};

    fn graph(vertices: &[&str], edges: &[(&str, &str, &str, f64)]) -> MetricGraph {
        MetricGraph::build(&GraphSpec {
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
        })
        .unwrap()
    }

    fn single_edge() -> MetricGraph {
        graph(&["a", "b"], &[("e", "a", "b", 1.0)])
    }

    #[test]
    fn abstract_single_edge_area_additivity() {
        let g = single_edge();
        let eps = 0.25;
        let templates = default_abstract_templates(&g, DEFAULT_TAU, DEFAULT_R_ROUND).unwrap();
        let mesh = build_abstract_space(&g, &templates, eps, 0.03).unwrap();
        let t_area: f64 = templates.iter().map(|t| t.template.area()).sum();
        let expect = eps * 1.0 + eps * eps * t_area;
        assert!(
            (mesh.area() - expect).abs() < 1e-3 * expect,
            "{} vs {expect}",
            mesh.area()
        );
        // tube cross-section is exact
        assert!((mesh.tube_area(0) - eps).abs() < 1e-12);
    }

    #[test]
    fn vertex_region_scaling_is_exact() {
        let g = single_edge();
        let templates = default_abstract_templates(&g, DEFAULT_TAU, DEFAULT_R_ROUND).unwrap();
        // same template-frame resolution at both scales (h = eps/4)
        let m1 = build_abstract_space(&g, &templates, 0.2, 0.05).unwrap();
        let m2 = build_abstract_space(&g, &templates, 0.1, 0.025).unwrap();
        assert_eq!(m1.templates[0].mesh.nodes, m2.templates[0].mesh.nodes);
        let a1 = m1.vertex_region_area(0);
        let a2 = m2.vertex_region_area(0);
        assert!(((a1 / a2) - 4.0).abs() < 1e-12, "ratio {}", a1 / a2);
    }

    #[test]
    fn regions_partition_and_conform() {
        let g = graph(
            &["c", "a", "b", "d"],
            &[
                ("e1", "c", "a", 1.0),
                ("e2", "c", "b", 1.5),
                ("e3", "c", "d", 2.0),
            ],
        );
        let templates = default_abstract_templates(&g, DEFAULT_TAU, DEFAULT_R_ROUND).unwrap();
        let mesh = build_abstract_space(&g, &templates, 0.2, 0.05).unwrap();
        let mut seen = vec![false; mesh.n_nodes];
        for r in &mesh.regions {
            for &id in &r.nodes {
                seen[id] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
        // interface conformity: tube end nodes are the template port nodes
        let inst = &mesh.templates[0]; // center vertex c
        let port0 = &inst.mesh.port_nodes[0];
        let tube = &mesh.tubes[inst.port_edges[0]];
        let at_init = g.edge(inst.port_edges[0]).init == 0;
        for (station, &local) in port0.iter().enumerate() {
            let global = inst.node_ids[local];
            let expect = if at_init {
                tube.node(0, station)
            } else {
                tube.node(tube.n_long, tube.n_cross - station)
            };
            assert_eq!(global, expect);
        }
        assert!(mesh.min_angle_deg() >= 20.0);
        // region count: 2 per edge + 1 per vertex
        assert_eq!(mesh.regions.len(), 2 * 3 + 4);
    }

    #[test]
    fn embedded_single_edge_builds_and_shortens() {
        let spec = GraphSpec {
            vertices: vec![
                VertexSpec {
                    id: "a".into(),
                    xy: Some([0.0, 0.0]),
                },
                VertexSpec {
                    id: "b".into(),
                    xy: Some([1.0, 0.0]),
                },
            ],
            edges: vec![EdgeSpec {
                id: "e".into(),
                init: "a".into(),
                term: "b".into(),
                length: 1.0,
            }],
        };
        let g = MetricGraph::build(&spec).unwrap();
        let tau = 0.25;
        let templates = embedded_templates(&g, tau, DEFAULT_R_ROUND).unwrap();
        let eps = 0.2;
        let mesh = build_embedded_space(&g, &templates, eps, tau, 0.05).unwrap();
        let tube = &mesh.tubes[0];
        let physical_len = tube.s_step * tube.n_long as f64;
        assert!((physical_len - (1.0 - eps * tau)).abs() < 1e-12);
        assert!((tube.s_start - eps * tau / 2.0).abs() < 1e-12);
        // abstract variant with the same templates shares grids and meshes
        let abs_mesh = build_abstract_space(&g, &templates, eps, 0.05).unwrap();
        assert_eq!(abs_mesh.tubes[0].n_long, tube.n_long);
        assert_eq!(abs_mesh.tubes[0].n_cross, tube.n_cross);
        assert_eq!(
            abs_mesh.templates[0].mesh.nodes,
            mesh.templates[0].mesh.nodes
        );
    }

    #[test]
    fn mesh_export_format() {
        let g = single_edge();
        let templates = default_abstract_templates(&g, DEFAULT_TAU, DEFAULT_R_ROUND).unwrap();
        let mesh = build_abstract_space(&g, &templates, 0.25, 0.0625).unwrap();
        let text = mesh.export_text();
        let header = text.lines().next().unwrap();
        let parts: Vec<&str> = header.split_whitespace().collect();
        let n: usize = parts[1].parse().unwrap();
        let t: usize = parts[3].parse().unwrap();
        assert_eq!(n, mesh.n_nodes);
        assert_eq!(t, mesh.n_triangles());
        assert_eq!(text.lines().count(), 1 + n + t);
        assert!(text.contains("edge_half(0,0)"));
        assert!(text.contains("vertex(1)"));
    }

    #[test]
    fn convexity_of_shipped_templates() {
        let cap = template::abstract_template(1, 0.25, 0.2).unwrap();
        let rep = check_convexity(&cap).unwrap();
        assert_eq!(rep.kappa_minus, 0.0);
        assert!(rep.kappa_minus_discrete < 1e-6);
        assert!((rep.kappa_plus - 5.0).abs() < 0.4); // back fillets, 1/r = 5

        let hub3 = template::abstract_template(3, 0.25, 0.2).unwrap();
        let rep3 = check_convexity(&hub3).unwrap();
        assert!((rep3.kappa_minus - 5.0).abs() < 1e-12);
        assert!(
            (rep3.kappa_minus_discrete - 5.0).abs() < 0.4,
            "discrete {}",
            rep3.kappa_minus_discrete
        );
    }

    #[test]
    fn scaled_template_curvature_scales_inversely() {
        let tpl = template::abstract_template(3, 0.25, 0.2).unwrap();
        let eps = 0.125;
        let scaled = tpl.scaled(eps);
        let r1 = check_convexity(&tpl).unwrap();
        let r2 = check_convexity(&scaled).unwrap();
        assert!((r2.kappa_minus - r1.kappa_minus / eps).abs() < 1e-9);
    }

    #[test]
    fn quality_gate_rejects_bad_h() {
        let g = single_edge();
        let templates = default_abstract_templates(&g, DEFAULT_TAU, DEFAULT_R_ROUND).unwrap();
        assert!(matches!(
            build_abstract_space(&g, &templates, 0.2, 0.2),
            Err(MeshError::InvalidParameter(_))
        ));
    }

    #[test]
    fn port_mismatch_is_detected() {
        let g = graph(
            &["c", "a", "b", "d"],
            &[
                ("e1", "c", "a", 1.0),
                ("e2", "c", "b", 1.0),
                ("e3", "c", "d", 1.0),
            ],
        );
        let mut templates = default_abstract_templates(&g, DEFAULT_TAU, DEFAULT_R_ROUND).unwrap();
        templates[0].template = template::abstract_template(2, 0.25, 0.2).unwrap();
        assert!(matches!(
            build_abstract_space(&g, &templates, 0.2, 0.05),
            Err(MeshError::PortMismatch { vertex: 0, .. })
        ));
    }
}
