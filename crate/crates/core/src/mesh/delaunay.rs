//! Conforming triangulation of a vertex template: boundary resampled at the
//! target spacing (ports at exactly the prescribed station count), a
//! hexagonal interior seed lattice, and a constrained Delaunay refinement
//! that never splits the boundary constraints.

use super::template::VertexTemplate;
use super::MeshError;
use spade::{
    AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation,
};
use std::collections::HashSet;

/// Triangulated unscaled template.  Nodes are in the template frame; the
/// first `n_boundary` nodes are the sampled boundary in traversal order.
#[derive(Debug, Clone)]
pub struct TemplateMesh {
    pub nodes: Vec<[f64; 2]>,
    pub tris: Vec<[usize; 3]>,
    /// Node indices of each port, ordered from port endpoint `a` to `b`
    /// (n_cross + 1 entries).
    pub port_nodes: Vec<Vec<usize>>,
    pub n_boundary: usize,
    pub min_angle_deg: f64,
}

pub(crate) fn triangle_min_angle_deg(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let d = |p: [f64; 2], q: [f64; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
    let (la, lb, lc) = (d(b, c), d(a, c), d(a, b));
    let angle = |opp: f64, s1: f64, s2: f64| {
        let cos = ((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2)).clamp(-1.0, 1.0);
        cos.acos().to_degrees()
    };
    angle(la, lb, lc)
        .min(angle(lb, la, lc))
        .min(angle(lc, la, lb))
}

/// Meshes the template at spacing `h` with `n_cross` segments per port.
pub fn triangulate_template(
    tpl: &VertexTemplate,
    h: f64,
    n_cross: usize,
) -> Result<TemplateMesh, MeshError> {
    let (boundary, port_ranges) = tpl.boundary_polyline(h, n_cross);
    let n_boundary = boundary.len();

    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> =
        ConstrainedDelaunayTriangulation::new();
    let mut handles = Vec::with_capacity(n_boundary);
    for p in &boundary {
        let handle = cdt
            .insert(Point2::new(p[0], p[1]))
            .map_err(|e| MeshError::Insertion(format!("{e:?}")))?;
        if handle.index() != handles.len() {
            return Err(MeshError::Insertion(
                "duplicate boundary sample while triangulating a template".into(),
            ));
        }
        handles.push(handle);
    }
    for i in 0..n_boundary {
        cdt.add_constraint(handles[i], handles[(i + 1) % n_boundary]);
    }

    // interior seeds: hexagonal lattice kept clear of the boundary
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &boundary {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let clearance = 0.7 * h;
    let dist_to_boundary = |p: [f64; 2]| -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..n_boundary {
            let a = boundary[i];
            let b = boundary[(i + 1) % n_boundary];
            let ab = [b[0] - a[0], b[1] - a[1]];
            let ap = [p[0] - a[0], p[1] - a[1]];
            let t = ((ap[0] * ab[0] + ap[1] * ab[1]) / (ab[0] * ab[0] + ab[1] * ab[1]))
                .clamp(0.0, 1.0);
            let dx = ap[0] - t * ab[0];
            let dy = ap[1] - t * ab[1];
            best = best.min((dx * dx + dy * dy).sqrt());
        }
        best
    };
    let row_step = h * 3.0f64.sqrt() / 2.0;
    let mut row = 0usize;
    let mut y = lo[1] + 0.5 * h;
    while y < hi[1] {
        let offset = if row % 2 == 0 { 0.5 * h } else { h };
        let mut x = lo[0] + offset;
        while x < hi[0] {
            let p = [x, y];
            if tpl.contains(p) && dist_to_boundary(p) >= clearance {
                cdt.insert(Point2::new(x, y))
                    .map_err(|e| MeshError::Insertion(format!("{e:?}")))?;
            }
            x += h;
        }
        y += row_step;
        row += 1;
    }

    let params = RefinementParameters::<f64>::new()
        .exclude_outer_faces(true)
        .keep_constraint_edges()
        .with_angle_limit(AngleLimit::from_deg(25.0))
        .with_max_allowed_area(0.75 * h * h);
    let result = cdt.refine(params);
    let excluded: HashSet<usize> = result.excluded_faces.iter().map(|f| f.index()).collect();

    let nodes: Vec<[f64; 2]> = cdt.vertices().map(|v| [v.position().x, v.position().y]).collect();
    let mut tris = Vec::new();
    let mut min_angle = 180.0f64;
    for face in cdt.inner_faces() {
        if excluded.contains(&face.fix().index()) {
            continue;
        }
        let vs = face.vertices();
        let t = [vs[0].index(), vs[1].index(), vs[2].index()];
        min_angle = min_angle.min(triangle_min_angle_deg(nodes[t[0]], nodes[t[1]], nodes[t[2]]));
        tris.push(t);
    }
    if tris.is_empty() {
        return Err(MeshError::Insertion("template triangulation is empty".into()));
    }
    if min_angle < 20.0 {
        return Err(MeshError::MeshQualityFailure {
            min_angle_deg: min_angle,
        });
    }

    // ports must have survived refinement verbatim
    let mut port_nodes = Vec::with_capacity(port_ranges.len());
    for (k, &(start, end)) in port_ranges.iter().enumerate() {
        let mut ids: Vec<usize> = (start..end).collect();
        ids.push(end % n_boundary);
        for w in ids.windows(2) {
            if cdt
                .get_edge_from_neighbors(handles[w[0]], handles[w[1]])
                .is_none()
            {
                return Err(MeshError::PortSplit { port: k });
            }
        }
        port_nodes.push(ids);
    }

    Ok(TemplateMesh {
        nodes,
        tris,
        port_nodes,
        n_boundary,
        min_angle_deg: min_angle,
    })
}

#[cfg(test)]
mod tests {
    use super::super::template::abstract_template;
    use super::*;

    #[test]
    fn cap_mesh_has_exact_ports_and_area() {
        let tpl = abstract_template(1, 0.25, 0.2).unwrap();
        let mesh = triangulate_template(&tpl, 0.1, 6).unwrap();
        assert_eq!(mesh.port_nodes.len(), 1);
        assert_eq!(mesh.port_nodes[0].len(), 7);
        // port stations are evenly spaced along the port segment
        let p = &tpl.ports()[0];
        for (i, &id) in mesh.port_nodes[0].iter().enumerate() {
            let t = i as f64 / 6.0;
            let expect = [
                p.a[0] + t * (p.b[0] - p.a[0]),
                p.a[1] + t * (p.b[1] - p.a[1]),
            ];
            let got = mesh.nodes[id];
            assert!((got[0] - expect[0]).abs() + (got[1] - expect[1]).abs() < 1e-12);
        }
        let area: f64 = mesh
            .tris
            .iter()
            .map(|t| {
                let [a, b, c] = [mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]];
                0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs()
            })
            .sum();
        assert!(
            (area - tpl.area()).abs() < 2e-3 * tpl.area(),
            "mesh area {area} vs exact {}",
            tpl.area()
        );
        assert!(mesh.min_angle_deg >= 20.0);
    }

    #[test]
    fn hub_mesh_quality_and_refinement() {
        // port station count and boundary spacing are coupled as in the
        // mesh builder: n_cross ~ 1/h in the template frame
        let tpl = abstract_template(3, 0.25, 0.2).unwrap();
        for (h, n_cross) in [(0.2, 5), (0.1, 10)] {
            let mesh = triangulate_template(&tpl, h, n_cross).unwrap();
            assert!(mesh.min_angle_deg >= 20.0);
            assert_eq!(mesh.port_nodes.len(), 3);
            let area: f64 = mesh
                .tris
                .iter()
                .map(|t| {
                    let [a, b, c] = [mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]];
                    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs()
                })
                .sum();
            assert!((area - tpl.area()).abs() < 5e-3 * tpl.area());
        }
    }

    #[test]
    fn deterministic_triangulation() {
        let tpl = abstract_template(2, 0.25, 0.2).unwrap();
        let a = triangulate_template(&tpl, 0.15, 5).unwrap();
        let b = triangulate_template(&tpl, 0.15, 5).unwrap();
        assert_eq!(a.nodes, b.nodes);
        assert_eq!(a.tris, b.tris);
    }
}
