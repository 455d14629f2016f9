//! The `verify` suites: each runs one family of analytic checks and
//! returns JSON-serializable reports plus an overall pass flag.

use anyhow::Result;
use fatgraph::analysis::{
    kato_standard_reports, verify_gaffney_identity, verify_scaling_laws, verify_supersymmetry,
    verify_trace_estimate,
};
use fatgraph::fem::{assemble_neumann, EigOptions};
use fatgraph::graph::{EdgeSpec, GraphSpec, MetricGraph, VertexSpec};
use fatgraph::mesh::{build_abstract_space, default_abstract_templates, DEFAULT_R_ROUND};
use fatgraph::util::Lcg;
use serde_json::{json, Value};

pub struct SuiteResult {
    pub report: Value,
    pub pass: bool,
}

pub fn gaffney_suite() -> Result<SuiteResult> {
    let orders = [16usize, 32, 64];
    let mut reports = Vec::new();
    let mut pass = true;
    let mut last_residual = f64::INFINITY;
    for &o in &orders {
        let rep = verify_gaffney_identity(o)?;
        pass &= rep.pass;
        if o == orders[orders.len() - 1] {
            pass &= rep.residual <= last_residual.max(1e-12);
        }
        last_residual = rep.residual;
        reports.push(serde_json::to_value(&rep)?);
    }
    Ok(SuiteResult {
        report: json!({ "suite": "gaffney", "reports": reports }),
        pass,
    })
}

pub fn kato_suite() -> Result<SuiteResult> {
    let reports = kato_standard_reports(1e-4);
    let pass = reports.iter().all(|r| r.pass);
    Ok(SuiteResult {
        report: json!({ "suite": "kato", "reports": reports }),
        pass,
    })
}

pub fn scaling_suite() -> Result<SuiteResult> {
    let mut all = Vec::new();
    let mut pass = true;
    for eps in [0.5, 0.2, 0.05] {
        let checks = verify_scaling_laws(eps, 32, 1e-6);
        pass &= checks.iter().all(|c| c.pass);
        all.push(json!({ "eps": eps, "checks": checks }));
    }
    Ok(SuiteResult {
        report: json!({ "suite": "scaling", "reports": all }),
        pass,
    })
}

pub fn trace_suite(g: &MetricGraph, tau: f64) -> Result<SuiteResult> {
    let templates = default_abstract_templates(g, tau, DEFAULT_R_ROUND)?;
    let eps = 0.25;
    let mesh = build_abstract_space(g, &templates, eps, eps / 4.0)?;
    let fem = assemble_neumann(&mesh)?;
    let mut reports = Vec::new();
    let mut pass = true;
    for e in 0..g.n_edges() {
        let edge = g.edge(e);
        for v in [edge.init, edge.term] {
            let rep = verify_trace_estimate(&mesh, &fem, e, v, None, &EigOptions::default())?;
            pass &= rep.pass;
            reports.push(serde_json::to_value(&rep)?);
        }
    }
    Ok(SuiteResult {
        report: json!({ "suite": "trace", "eps": eps, "reports": reports }),
        pass,
    })
}

/// Deterministic random connected graphs for the supersymmetry sweep.
pub fn random_connected_graph(seed: u64, max_vertices: usize) -> MetricGraph {
    let mut rng = Lcg::new(seed);
    let n = 2 + (rng.next_u64() as usize) % (max_vertices - 1);
    let vertices: Vec<VertexSpec> = (0..n)
        .map(|i| VertexSpec {
            id: format!("v{i}"),
            xy: None,
        })
        .collect();
    let mut edges = Vec::new();
    for child in 1..n {
        let parent = (rng.next_u64() as usize) % child;
        edges.push(EdgeSpec {
            id: format!("t{child}"),
            init: format!("v{parent}"),
            term: format!("v{child}"),
            length: 0.7 + 0.5 * (rng.next_f64() + 1.0),
        });
    }
    let extras = (rng.next_u64() as usize) % 4;
    for k in 0..extras {
        let a = (rng.next_u64() as usize) % n;
        let b = (rng.next_u64() as usize) % n;
        if a == b {
            continue;
        }
        edges.push(EdgeSpec {
            id: format!("x{k}"),
            init: format!("v{a}"),
            term: format!("v{b}"),
            length: 0.7 + 0.5 * (rng.next_f64() + 1.0),
        });
    }
    MetricGraph::build(&GraphSpec { vertices, edges }).expect("generated graph is valid")
}

pub fn supersym_suite(explicit: Option<&MetricGraph>) -> Result<SuiteResult> {
    let mut reports = Vec::new();
    let mut pass = true;
    let opts = EigOptions::default();
    if let Some(g) = explicit {
        let rep = verify_supersymmetry(g, 0.02, &opts)?;
        pass &= rep.pass;
        reports.push(json!({ "graph": "explicit", "report": rep }));
    } else {
        for seed in 0..10u64 {
            let g = random_connected_graph(1000 + seed, 8);
            let rep = verify_supersymmetry(&g, 0.05, &opts)?;
            pass &= rep.pass;
            reports.push(json!({
                "graph": format!("random_{seed}"),
                "vertices": g.n_vertices(),
                "edges": g.n_edges(),
                "report": rep,
            }));
        }
    }
    Ok(SuiteResult {
        report: json!({ "suite": "supersym", "reports": reports }),
        pass,
    })
}
