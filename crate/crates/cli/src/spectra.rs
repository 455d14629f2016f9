//! Spectrum computations behind the `mgspec` and `femspec` subcommands,
//! with the shared CSV export format.

use anyhow::{Context, Result};
use fatgraph::fem::{assemble_neumann, EigOptions};
use fatgraph::graph::MetricGraph;
use fatgraph::mesh::{
    build_abstract_space, build_embedded_space, default_abstract_templates, embedded_templates,
    AssignedTemplate, DEFAULT_R_ROUND,
};
use fatgraph::mg::secular::{flattened, secular_eigenvalues};
use fatgraph::mg::{assemble_kirchhoff_laplacian, cluster_eigenvalues, MgGrid};

pub const CLUSTER_REL_GAP: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SpectrumRow {
    pub index: usize,
    pub eigenvalue: f64,
    pub cluster: usize,
    pub source: &'static str,
}

pub fn spectrum_csv(rows: &[SpectrumRow]) -> String {
    let mut out = String::from("index,eigenvalue,multiplicity_cluster_id,source\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.12e},{},{}\n",
            r.index, r.eigenvalue, r.cluster, r.source
        ));
    }
    out
}

fn cluster_ids(values: &[f64]) -> Vec<usize> {
    let clusters = cluster_eigenvalues(values, CLUSTER_REL_GAP);
    let mut ids = vec![0usize; values.len()];
    for (cid, c) in clusters.iter().enumerate() {
        for i in c.first_index..c.first_index + c.count {
            ids[i] = cid;
        }
    }
    ids
}

/// Kirchhoff spectrum by FEM together with the secular-oracle values.
pub fn mg_spectrum(g: &MetricGraph, h: f64, k: usize, seed: u64) -> Result<Vec<SpectrumRow>> {
    let grid = MgGrid::new(g, h).context("building the graph grid")?;
    let pair = assemble_kirchhoff_laplacian(&grid);
    let eig = pair
        .eigenpairs(
            k.min(grid.n_dofs()),
            &EigOptions {
                seed,
                ..Default::default()
            },
        )
        .context("metric-graph eigenvalue solve")?;
    let mut rows = Vec::new();
    let fem_clusters = cluster_ids(&eig.values);
    for (i, (&v, &c)) in eig.values.iter().zip(&fem_clusters).enumerate() {
        rows.push(SpectrumRow {
            index: i + 1,
            eigenvalue: v,
            cluster: c,
            source: "fem",
        });
    }
    let lambda_max = eig.values.last().copied().unwrap_or(1.0).max(1.0);
    let k_max = lambda_max.sqrt() * 1.02 + 0.5;
    let roots = secular_eigenvalues(g, k_max).context("secular oracle")?;
    let lambdas = flattened(&roots);
    let mut idx = 0usize;
    for (cid, root) in roots.iter().enumerate() {
        for _ in 0..root.multiplicity {
            idx += 1;
            if idx > lambdas.len() {
                break;
            }
            rows.push(SpectrumRow {
                index: idx,
                eigenvalue: root.lambda,
                cluster: cid,
                source: "secular",
            });
        }
    }
    Ok(rows)
}

pub fn resolve_templates(
    g: &MetricGraph,
    tau: f64,
    embedded: bool,
) -> Result<Vec<AssignedTemplate>> {
    Ok(if embedded {
        embedded_templates(g, tau, DEFAULT_R_ROUND)?
    } else {
        default_abstract_templates(g, tau, DEFAULT_R_ROUND)?
    })
}

/// Neumann spectrum of the graph-like space at one eps.
pub fn fem_spectrum(
    g: &MetricGraph,
    eps: f64,
    h: f64,
    k: usize,
    tau: f64,
    embedded: bool,
    seed: u64,
) -> Result<Vec<SpectrumRow>> {
    let templates = resolve_templates(g, tau, embedded)?;
    let mesh = if embedded {
        build_embedded_space(g, &templates, eps, tau, h)?
    } else {
        build_abstract_space(g, &templates, eps, h)?
    };
    let sys = assemble_neumann(&mesh).context("assembling the Neumann system")?;
    let eig = sys
        .eigenpairs(
            k.min(sys.n_dofs),
            &EigOptions {
                seed,
                ..Default::default()
            },
        )
        .context("tube eigenvalue solve")?;
    let clusters = cluster_ids(&eig.values);
    Ok(eig
        .values
        .iter()
        .zip(&clusters)
        .enumerate()
        .map(|(i, (&v, &c))| SpectrumRow {
            index: i + 1,
            eigenvalue: v,
            cluster: c,
            source: "fem",
        })
        .collect())
}
