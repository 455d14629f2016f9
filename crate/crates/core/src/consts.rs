//! Explicit constants of the convergence estimates.  Everything is computed
//! on the unscaled objects: template eigenvalues by FEM with Richardson
//! extrapolation, areas and curvatures from the exact piecewise boundary
//! description, and the rates delta_eps / delta_eps' by literal evaluation
//! of their closed-form expressions.

use crate::fem::{assemble_regions, EigOptions, FemError};
use crate::graph::MetricGraph;
use crate::mesh::delaunay::triangulate_template;
use crate::mesh::{AssignedTemplate, Chart, MeshError, RegionKey, RegionMesh};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConstError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("constants need at least one vertex template")]
    Empty,
}

/// One reported constant with how it was obtained.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantEntry {
    pub value: f64,
    pub provenance: String,
}

impl ConstantEntry {
    fn new(value: f64, provenance: impl Into<String>) -> Self {
        Self {
            value,
            provenance: provenance.into(),
        }
    }
}

/// Per-vertex diagnostics feeding the fine-grained vertex estimate.
#[derive(Debug, Clone, Serialize)]
pub struct VertexConstants {
    pub vertex: usize,
    /// Second Neumann eigenvalue of the unscaled template (Richardson
    /// extrapolated) and the extrapolation error estimate.
    pub lambda2: f64,
    pub lambda2_error: f64,
    pub area: f64,
    pub kappa_minus: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantsReport {
    pub ell0: ConstantEntry,
    pub vol_y: ConstantEntry,
    pub tau: ConstantEntry,
    pub lambda2_vx: ConstantEntry,
    pub lambda2_ed: ConstantEntry,
    pub c_isoper: ConstantEntry,
    pub c_vxcol: ConstantEntry,
    pub c_vx: ConstantEntry,
    pub kappa_max: ConstantEntry,
    pub kappa_minus: ConstantEntry,
    pub c_gaffney: ConstantEntry,
    pub coth_ell0_half: ConstantEntry,
    /// Operator-norm bounds of the boundary pairings entering the resolvent
    /// difference: graph-side evaluations are bounded by coth(ell0/2), the
    /// space-side ones by eps times these coefficients.
    pub a_norm_sq_bound: ConstantEntry,
    pub b_norm_sq_bound: ConstantEntry,
    pub a_prime_norm_sq_per_eps: ConstantEntry,
    pub b_prime_norm_sq_per_eps: ConstantEntry,
    pub per_vertex: Vec<VertexConstants>,
}

#[derive(Debug, Clone)]
pub struct ConstOptions {
    /// Template-frame mesh sizes for the coarse and fine eigenvalue solves.
    pub h_coarse: f64,
    pub h_fine: f64,
    pub eig: EigOptions,
}

impl Default for ConstOptions {
    fn default() -> Self {
        Self {
            h_coarse: 0.02,
            h_fine: 0.01,
            eig: EigOptions::default(),
        }
    }
}

fn coth(x: f64) -> f64 {
    1.0 / x.tanh()
}

/// Second Neumann eigenvalue of a template at one mesh size.
fn template_lambda2(
    tpl: &crate::mesh::template::VertexTemplate,
    h: f64,
    eig: &EigOptions,
) -> Result<f64, ConstError> {
    let n_cross = (1.0 / h).ceil() as usize;
    let tm = triangulate_template(tpl, h, n_cross)?;
    let region = RegionMesh {
        key: RegionKey::Vertex { vertex: 0 },
        chart: Chart::Template,
        nodes: (0..tm.nodes.len()).collect(),
        local: tm.nodes.clone(),
        tris: tm.tris,
    };
    let n = tm.nodes.len();
    let sys = assemble_regions(&[region], 1.0, n)?;
    let res = sys.eigenpairs(2, eig)?;
    Ok(res.values[1])
}

/// Evaluates the eps-independent constants for a graph with its assigned
/// templates.  `tau` is the collar parameter the templates were built for.
pub fn compute_constants(
    g: &MetricGraph,
    templates: &[AssignedTemplate],
    tau: f64,
    opts: &ConstOptions,
) -> Result<ConstantsReport, ConstError> {
    if templates.is_empty() {
        return Err(ConstError::Empty);
    }
    let ell0 = g.ell0();

    let mut per_vertex = Vec::with_capacity(templates.len());
    for (v, assigned) in templates.iter().enumerate() {
        let tpl = &assigned.template;
        let coarse = template_lambda2(tpl, opts.h_coarse, &opts.eig)?;
        let fine = template_lambda2(tpl, opts.h_fine, &opts.eig)?;
        // Richardson extrapolation assuming O(h^2) convergence
        let lambda2 = (4.0 * fine - coarse) / 3.0;
        per_vertex.push(VertexConstants {
            vertex: v,
            lambda2,
            lambda2_error: (fine - coarse).abs() / 3.0,
            area: tpl.area(),
            kappa_minus: tpl.kappa_minus(),
        });
    }

    let lambda2_vx = per_vertex
        .iter()
        .map(|v| v.lambda2)
        .fold(f64::INFINITY, f64::min);
    let lambda2_vx_err = per_vertex
        .iter()
        .map(|v| v.lambda2_error)
        .fold(0.0, f64::max);
    let lambda2_ed = std::f64::consts::PI * std::f64::consts::PI;
    let c_isoper = per_vertex
        .iter()
        .enumerate()
        .map(|(v, pv)| pv.area / g.degree(v) as f64)
        .fold(0.0, f64::max);
    let kappa_minus = per_vertex.iter().map(|v| v.kappa_minus).fold(0.0, f64::max);
    let c_gaffney = if kappa_minus == 0.0 {
        1.0
    } else {
        (8.0 * kappa_minus * kappa_minus).max(2.0)
    };
    let c_vxcol = tau + 2.0 / (tau * ell0 * lambda2_vx);
    let coth_half = coth(ell0 / 2.0);
    let c_vx = 4.0 * (1.0 / lambda2_vx + c_isoper * (c_vxcol + coth_half));

    Ok(ConstantsReport {
        ell0: ConstantEntry::new(ell0, "minimum finite edge length of the graph"),
        vol_y: ConstantEntry::new(
            1.0,
            "cross-section volume; fixed to 1 by template construction",
        ),
        tau: ConstantEntry::new(tau, "collar parameter of the template family"),
        lambda2_vx: ConstantEntry::new(
            lambda2_vx,
            format!(
                "min over vertices of the 2nd Neumann eigenvalue of the unscaled template; \
                 FEM at h={}/{} with Richardson extrapolation, error bar {:.2e}",
                opts.h_coarse, opts.h_fine, lambda2_vx_err
            ),
        ),
        lambda2_ed: ConstantEntry::new(
            lambda2_ed,
            "pi^2: 2nd Neumann eigenvalue of the unit-interval cross section (closed form)",
        ),
        c_isoper: ConstantEntry::new(
            c_isoper,
            "max over vertices of area(template)/(deg * vol Y); areas from the exact \
             piecewise boundary",
        ),
        c_vxcol: ConstantEntry::new(c_vxcol, "tau + 2/(tau * ell0 * lambda2_vx)"),
        c_vx: ConstantEntry::new(
            c_vx,
            "4 (1/lambda2_vx + C_isoper (C_vxcol + coth(ell0/2)))",
        ),
        kappa_max: ConstantEntry::new(
            kappa_minus,
            "uniform bound on the negative boundary curvature of the vertex templates",
        ),
        kappa_minus: ConstantEntry::new(
            kappa_minus,
            "sup of negative-part curvature over the unscaled template boundaries \
             (exact piecewise values)",
        ),
        c_gaffney: ConstantEntry::new(
            c_gaffney,
            "1 if the boundary is convex, else max(2, 8 kappa_minus^2)",
        ),
        coth_ell0_half: ConstantEntry::new(coth_half, "optimal trace constant coth(ell0/2)"),
        a_norm_sq_bound: ConstantEntry::new(
            coth_half,
            "bound for the squared norm of the graph-side vertex evaluation",
        ),
        b_norm_sq_bound: ConstantEntry::new(
            coth_half,
            "bound for the squared norm of the graph-side oriented evaluation",
        ),
        a_prime_norm_sq_per_eps: ConstantEntry::new(
            c_isoper,
            "coefficient of eps bounding the squared norm of the space-side \
             divergence pairing",
        ),
        b_prime_norm_sq_per_eps: ConstantEntry::new(
            c_vxcol,
            "coefficient of eps bounding the squared norm of the space-side \
             collar averaging",
        ),
        per_vertex,
    })
}

/// The rate delta_eps = sqrt(eps) * max{(C_vx + m eps/lambda2_ed) C_Gaffney,
/// (C_isoper + C_vxcol) coth(ell0/2)}^{1/2}.
pub fn delta_eps(report: &ConstantsReport, eps: f64, m: usize) -> f64 {
    let a = (report.c_vx.value + m as f64 * eps / report.lambda2_ed.value)
        * report.c_gaffney.value;
    let b = (report.c_isoper.value + report.c_vxcol.value) * report.coth_ell0_half.value;
    eps.sqrt() * a.max(b).sqrt()
}

/// The embedded-perturbation rate delta_eps' = sqrt(eps) * max{tau,
/// C_vx (1 + C_Gaffney)}^{1/2}.
pub fn delta_eps_prime(report: &ConstantsReport, eps: f64) -> f64 {
    let a = report.tau.value;
    let b = report.c_vx.value * (1.0 + report.c_gaffney.value);
    eps.sqrt() * a.max(b).sqrt()
}

/// Fine-grained vertex constant: the sharp eps-dependent bound for one
/// vertex, dominated by eps * C_vx on (0, 1].
pub fn c_vx_fine(report: &ConstantsReport, g: &MetricGraph, v: usize, eps: f64) -> f64 {
    let pv = &report.per_vertex[v];
    let tau = report.tau.value;
    let ratio = pv.area / g.degree(v) as f64; // vol X_v / vol ring-boundary
    g.edges_at(v)
        .into_iter()
        .map(|e| {
            let len = g.edge(e).length;
            let collar = tau * len.min(1.0) + 2.0 / (tau * len * pv.lambda2);
            eps * eps / pv.lambda2 + eps * eps * ratio * collar + eps * ratio * coth(len / 2.0)
        })
        .fold(0.0, f64::max)
        * 4.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeSpec, GraphSpec, VertexSpec};
    use crate::mesh::default_abstract_templates;

    fn star3() -> MetricGraph {
        MetricGraph::build(&GraphSpec {
            vertices: ["c", "a", "b", "d"]
                .iter()
                .map(|s| VertexSpec {
                    id: s.to_string(),
                    xy: None,
                })
                .collect(),
            edges: vec![
                EdgeSpec {
                    id: "e1".into(),
                    init: "c".into(),
                    term: "a".into(),
                    length: 1.0,
                },
                EdgeSpec {
                    id: "e2".into(),
                    init: "c".into(),
                    term: "b".into(),
                    length: 1.5,
                },
                EdgeSpec {
                    id: "e3".into(),
                    init: "c".into(),
                    term: "d".into(),
                    length: 2.0,
                },
            ],
        })
        .unwrap()
    }

    fn single_edge() -> MetricGraph {
        MetricGraph::build(&GraphSpec {
            vertices: ["a", "b"]
                .iter()
                .map(|s| VertexSpec {
                    id: s.to_string(),
                    xy: None,
                })
                .collect(),
            edges: vec![EdgeSpec {
                id: "e".into(),
                init: "a".into(),
                term: "b".into(),
                length: 1.0,
            }],
        })
        .unwrap()
    }

    fn coarse_opts() -> ConstOptions {
        ConstOptions {
            h_coarse: 0.08,
            h_fine: 0.04,
            ..Default::default()
        }
    }

    #[test]
    fn convex_configuration_has_unit_gaffney_constant() {
        let g = single_edge();
        let templates = default_abstract_templates(&g, 0.25, 0.2).unwrap();
        let rep = compute_constants(&g, &templates, 0.25, &coarse_opts()).unwrap();
        assert_eq!(rep.c_gaffney.value, 1.0);
        assert_eq!(rep.kappa_minus.value, 0.0);
        assert!((rep.lambda2_ed.value - 9.869604401089358).abs() < 1e-12);
        assert!(rep.lambda2_vx.value > 0.0);
        // coth(1/2) for ell0 = 1
        assert!((rep.coth_ell0_half.value - 2.163953413738653).abs() < 1e-12);
        // every provenance string is non-empty
        let json = serde_json::to_value(&rep).unwrap();
        for (k, v) in json.as_object().unwrap() {
            if k == "per_vertex" {
                continue;
            }
            assert!(
                !v["provenance"].as_str().unwrap().is_empty(),
                "missing provenance for {k}"
            );
        }
    }

    #[test]
    fn star_configuration_constants() {
        let g = star3();
        let templates = default_abstract_templates(&g, 0.25, 0.2).unwrap();
        let rep = compute_constants(&g, &templates, 0.25, &coarse_opts()).unwrap();
        // the degree-3 hub has re-entrant fillets of radius 0.2
        assert!((rep.kappa_minus.value - 5.0).abs() < 1e-12);
        assert_eq!(rep.c_gaffney.value, 200.0);
        assert!(rep.c_vx.value > 0.0);
        // delta_eps is nondecreasing in eps
        let mut last = 0.0;
        for eps in [0.05, 0.1, 0.2, 0.4, 1.0] {
            let d = delta_eps(&rep, eps, 2);
            assert!(d >= last);
            last = d;
        }
        // square-root scaling: delta at eps/4 is at most half of delta at eps
        let d1 = delta_eps(&rep, 0.4, 2);
        let d4 = delta_eps(&rep, 0.1, 2);
        assert!(d4 <= 0.5 * d1 * 1.001);
    }

    #[test]
    fn fine_vertex_constant_is_dominated() {
        let g = star3();
        let templates = default_abstract_templates(&g, 0.25, 0.2).unwrap();
        let rep = compute_constants(&g, &templates, 0.25, &coarse_opts()).unwrap();
        for v in 0..g.n_vertices() {
            for eps in [0.05, 0.1, 0.25, 0.5, 1.0] {
                let fine = c_vx_fine(&rep, &g, v, eps);
                assert!(
                    fine <= eps * rep.c_vx.value * (1.0 + 1e-12),
                    "vertex {v}, eps {eps}: {fine} vs {}",
                    eps * rep.c_vx.value
                );
            }
        }
    }

    #[test]
    fn prescale_roundtrip_reproduces_constants() {
        let g = single_edge();
        let mut templates = default_abstract_templates(&g, 0.25, 0.2).unwrap();
        let rep1 = compute_constants(&g, &templates, 0.25, &coarse_opts()).unwrap();
        for t in templates.iter_mut() {
            t.template = t.template.scaled(3.0).scaled(1.0 / 3.0);
        }
        let rep2 = compute_constants(&g, &templates, 0.25, &coarse_opts()).unwrap();
        for (a, b) in [
            (&rep1.lambda2_vx, &rep2.lambda2_vx),
            (&rep1.c_isoper, &rep2.c_isoper),
            (&rep1.c_vx, &rep2.c_vx),
            (&rep1.kappa_minus, &rep2.kappa_minus),
        ] {
            assert!(
                (a.value - b.value).abs() <= 1e-6 * a.value.abs().max(1e-12),
                "{} vs {}",
                a.value,
                b.value
            );
        }
    }

    #[test]
    fn delta_eps_prime_formula() {
        let g = single_edge();
        let templates = default_abstract_templates(&g, 0.25, 0.2).unwrap();
        let rep = compute_constants(&g, &templates, 0.25, &coarse_opts()).unwrap();
        let eps: f64 = 0.2;
        let expect = eps.sqrt()
            * (rep.c_vx.value * (1.0 + rep.c_gaffney.value))
                .max(rep.tau.value)
                .sqrt();
        assert_eq!(delta_eps_prime(&rep, eps), expect);
    }
}
