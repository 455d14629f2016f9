//! The eps-sweep harness: builds the shrinking family, compares spectra
//! against the secular oracle, measures identification defects and their
//! certificates, fits convergence slopes, and writes the CSV/JSON/SVG
//! reports.

use crate::svg::loglog_chart;
use anyhow::{Context, Result};
use fatgraph::consts::{compute_constants, delta_eps, delta_eps_prime, ConstOptions, ConstantsReport};
use fatgraph::fem::{assemble_neumann, EigOptions};
use fatgraph::graph::MetricGraph;
use fatgraph::ident::{
    build_j0, defect_norms_laplacian, embedded_defects, hausdorff_resolvent_distance,
    resolvent_truncation_term, DefectNorms, EmbeddedReport, PowerOpts,
};
use fatgraph::mesh::{build_abstract_space, build_embedded_space, AssignedTemplate};
use fatgraph::mg::secular::{flattened, secular_eigenvalues};
use fatgraph::mg::{assemble_kirchhoff_laplacian, cluster_eigenvalues, MgGrid};
use fatgraph::util::loglog_slope;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub fn default_eps_list() -> Vec<f64> {
    vec![0.4, 0.3, 0.2, 0.15, 0.1, 0.07, 0.05]
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum VariantConfig {
    Abstract,
    Embedded { tau: f64 },
}

impl Default for VariantConfig {
    fn default() -> Self {
        VariantConfig::Abstract
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct SweepConfig {
    pub graph: PathBuf,
    #[serde(default = "default_eps_list")]
    pub eps_list: Vec<f64>,
    /// h = min(eps / h_frac, h_cap)
    #[serde(default = "default_h_frac")]
    pub h_frac: f64,
    #[serde(default = "default_h_cap")]
    pub h_cap: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub variant: VariantConfig,
    /// Collar parameter of the template family.
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

fn default_h_frac() -> f64 {
    4.0
}

fn default_h_cap() -> f64 {
    0.02
}

fn default_k() -> usize {
    8
}

fn default_tau() -> f64 {
    0.25
}

fn default_seed() -> u64 {
    0xFA7
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        anyhow::ensure!(!self.eps_list.is_empty(), "eps list must not be empty");
        for w in self.eps_list.windows(2) {
            anyhow::ensure!(w[0] > w[1], "eps values must be strictly decreasing");
        }
        for &e in &self.eps_list {
            anyhow::ensure!(e > 0.0 && e <= 1.0, "eps must lie in (0, 1], got {e}");
        }
        anyhow::ensure!(self.h_frac >= 4.0, "h_frac below 4 violates h <= eps/4");
        Ok(())
    }

    pub fn h_for(&self, eps: f64) -> f64 {
        (eps / self.h_frac).min(self.h_cap)
    }
}

/// Per-eps measurement results.
#[derive(Debug, Clone, Serialize)]
pub struct EpsRow {
    pub eps: f64,
    pub h: f64,
    /// (reference value, tube cluster mean, |difference|) per eigenvalue
    /// index (flattened with multiplicity).
    pub eigenvalues: Vec<(f64, f64, f64)>,
    pub defects: DefectNorms,
    pub delta_eps: f64,
    pub bound_ok: bool,
    pub hausdorff: f64,
    pub hausdorff_bound: f64,
    pub hausdorff_bound_ok: bool,
    pub truncation_term: f64,
    pub solver_ok: bool,
    pub embedded: Option<EmbeddedReport>,
    pub delta_eps_prime: f64,
    pub runtime_ms: u128,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub eigen_error_slope: Option<f64>,
    pub d3_slope: Option<f64>,
    pub monotone_indices_ok: bool,
    pub non_monotone_details: Vec<String>,
    pub all_bounds_ok: bool,
    pub excluded_rows: Vec<String>,
    pub reference_eigenvalues: Vec<f64>,
    pub total_runtime_ms: u128,
}

#[derive(Debug)]
pub struct SweepOutput {
    pub rows: Vec<EpsRow>,
    pub failures: Vec<(f64, String)>,
    pub summary: SweepSummary,
    pub constants: ConstantsReport,
    pub csv: String,
}

/// Defect report in the external JSON schema.
#[derive(Debug, Serialize)]
struct DefectReportJson {
    eps: f64,
    d1: f64,
    d2: f64,
    d3: f64,
    delta_eps: f64,
    bound_ok: bool,
    hausdorff: f64,
    hausdorff_bound_ok: bool,
    truncation_term: f64,
}

/// Matches the ascending tube eigenvalues against the reference spectrum
/// cluster by cluster; every flattened index receives the cluster-mean
/// comparison.
fn cluster_match(reference: &[f64], tube: &[f64]) -> Vec<(f64, f64, f64)> {
    let clusters = cluster_eigenvalues(reference, 1e-9);
    let mut out = Vec::with_capacity(reference.len());
    let mut consumed = 0usize;
    for c in clusters {
        if consumed >= tube.len() {
            break;
        }
        let take = c.count.min(tube.len() - consumed);
        let mean: f64 = tube[consumed..consumed + take].iter().sum::<f64>() / take as f64;
        for _ in 0..take {
            out.push((c.mean, mean, (mean - c.mean).abs()));
        }
        consumed += take;
    }
    out
}

pub fn run_sweep(cfg: &SweepConfig, g: &MetricGraph, templates: &[AssignedTemplate]) -> Result<SweepOutput> {
    cfg.validate()?;
    let t_start = std::time::Instant::now();
    let eig_opts = EigOptions {
        seed: cfg.seed,
        ..Default::default()
    };
    let power_opts = PowerOpts {
        seed: cfg.seed ^ 0x9E37,
        ..Default::default()
    };

    let constants = compute_constants(g, templates, cfg.tau, &ConstOptions::default())
        .context("computing the uniformity constants")?;

    // reference spectrum: a fine graph solve seeds the scan range, the
    // secular oracle provides the exact values with multiplicities
    let reference = {
        let grid = MgGrid::new(g, 2e-3)?;
        let pair = assemble_kirchhoff_laplacian(&grid);
        let eig = pair.eigenpairs(cfg.k.min(grid.n_dofs()), &eig_opts)?;
        let lambda_max = eig.values.last().copied().unwrap_or(1.0).max(1.0);
        let roots = secular_eigenvalues(g, lambda_max.sqrt() * 1.02 + 0.5)?;
        let mut flat = flattened(&roots);
        flat.truncate(cfg.k);
        flat
    };
    anyhow::ensure!(
        reference.len() >= cfg.k.min(4),
        "oracle produced too few eigenvalues"
    );

    let mut rows: Vec<EpsRow> = Vec::new();
    let mut failures: Vec<(f64, String)> = Vec::new();
    for &eps in &cfg.eps_list {
        let row_start = std::time::Instant::now();
        let h = cfg.h_for(eps);
        let result = (|| -> Result<EpsRow> {
            let abs_mesh = build_abstract_space(g, templates, eps, h)?;
            let grid = MgGrid::new(g, h)?;
            let pair = assemble_kirchhoff_laplacian(&grid);
            let fem = assemble_neumann(&abs_mesh)?;
            let eig = fem.eigenpairs(cfg.k.min(fem.n_dofs), &eig_opts)?;
            let solver_ok = eig.residuals.iter().all(|&r| r <= 1e-8);

            let eigenvalues = cluster_match(&reference, &eig.values);
            let map = build_j0(g, &grid, &pair, &abs_mesh)?;
            let defects = defect_norms_laplacian(&pair, &fem, &map, &power_opts)?;
            let delta = delta_eps(&constants, eps, 2);
            let bound_ok =
                defects.d1 <= 2.0 * delta && defects.d2 <= 2.0 * delta && defects.d3 <= 2.0 * delta;

            let lambda_max = reference
                .last()
                .copied()
                .unwrap_or(1.0)
                .min(eig.values.last().copied().unwrap_or(1.0));
            let hausdorff = hausdorff_resolvent_distance(&reference, &eig.values)?;
            let hausdorff_bound = 3.0f64.sqrt() * 2.0 * delta;
            let embedded = match cfg.variant {
                VariantConfig::Abstract => None,
                VariantConfig::Embedded { tau } => {
                    let emb_mesh = build_embedded_space(g, templates, eps, tau, h)?;
                    let fem_emb = assemble_neumann(&emb_mesh)?;
                    Some(embedded_defects(
                        g, &abs_mesh, &emb_mesh, &fem, &fem_emb, &power_opts,
                    )?)
                }
            };
            Ok(EpsRow {
                eps,
                h,
                eigenvalues,
                defects,
                delta_eps: delta,
                bound_ok,
                hausdorff,
                hausdorff_bound,
                hausdorff_bound_ok: hausdorff <= hausdorff_bound,
                truncation_term: resolvent_truncation_term(lambda_max),
                solver_ok,
                embedded,
                delta_eps_prime: delta_eps_prime(&constants, eps),
                runtime_ms: row_start.elapsed().as_millis(),
            })
        })();
        match result {
            Ok(row) => rows.push(row),
            Err(e) => failures.push((eps, format!("{e:#}"))),
        }
    }

    // slope fits over rows whose solvers met tolerance
    let usable: Vec<&EpsRow> = rows.iter().filter(|r| r.solver_ok).collect();
    let excluded_rows: Vec<String> = rows
        .iter()
        .filter(|r| !r.solver_ok)
        .map(|r| format!("eps={}: solver residuals above tolerance", r.eps))
        .chain(failures.iter().map(|(e, m)| format!("eps={e}: {m}")))
        .collect();
    let idx_hi = 5.min(cfg.k);
    let agg_error = |r: &EpsRow| -> Option<f64> {
        let errs: Vec<f64> = r
            .eigenvalues
            .iter()
            .take(idx_hi)
            .skip(1)
            .map(|&(_, _, e)| e)
            .collect();
        errs.iter().cloned().reduce(f64::max)
    };
    let xs: Vec<f64> = usable.iter().map(|r| r.eps).collect();
    let eig_errors: Vec<f64> = usable.iter().filter_map(|r| agg_error(r)).collect();
    let d3s: Vec<f64> = usable.iter().map(|r| r.defects.d3).collect();
    let eigen_error_slope = if eig_errors.len() == xs.len() {
        loglog_slope(&xs, &eig_errors)
    } else {
        None
    };
    let d3_slope = loglog_slope(&xs, &d3s);

    // per-index monotonicity along decreasing eps
    let mut non_monotone = Vec::new();
    for idx in 1..idx_hi {
        let series: Vec<(f64, f64)> = usable
            .iter()
            .filter_map(|r| r.eigenvalues.get(idx).map(|&(_, _, e)| (r.eps, e)))
            .collect();
        for w in series.windows(2) {
            // rows are ordered by decreasing eps; errors must not grow
            if w[1].1 > w[0].1 + 1e-12 {
                non_monotone.push(format!(
                    "lambda index {}: error grows from {:.3e} at eps={} to {:.3e} at eps={}",
                    idx + 1,
                    w[0].1,
                    w[0].0,
                    w[1].1,
                    w[1].0
                ));
            }
        }
    }

    let all_bounds_ok = rows.iter().all(|r| r.bound_ok && r.hausdorff_bound_ok);
    let csv = render_csv(&rows);
    let summary = SweepSummary {
        eigen_error_slope,
        d3_slope,
        monotone_indices_ok: non_monotone.is_empty(),
        non_monotone_details: non_monotone,
        all_bounds_ok,
        excluded_rows,
        reference_eigenvalues: reference,
        total_runtime_ms: t_start.elapsed().as_millis(),
    };
    Ok(SweepOutput {
        rows,
        failures,
        summary,
        constants,
        csv,
    })
}

fn render_csv(rows: &[EpsRow]) -> String {
    let mut out = String::from("eps,lambda_idx,mg_value,tube_value,abs_err,d1,d2,d3,delta_eps,pass\n");
    for r in rows {
        let pass = r.bound_ok && r.hausdorff_bound_ok && r.solver_ok;
        for (i, &(mg_v, tube_v, err)) in r.eigenvalues.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}\n",
                r.eps,
                i + 1,
                mg_v,
                tube_v,
                err,
                r.defects.d1,
                r.defects.d2,
                r.defects.d3,
                r.delta_eps,
                pass
            ));
        }
    }
    out
}

/// Writes sweep artifacts into the output directory: CSV, per-eps defect
/// reports, a summary, and the two log-log charts.
pub fn write_outputs(out: &SweepOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("sweep.csv"), &out.csv)?;
    for r in &out.rows {
        let rep = DefectReportJson {
            eps: r.eps,
            d1: r.defects.d1,
            d2: r.defects.d2,
            d3: r.defects.d3,
            delta_eps: r.delta_eps,
            bound_ok: r.bound_ok,
            hausdorff: r.hausdorff,
            hausdorff_bound_ok: r.hausdorff_bound_ok,
            truncation_term: r.truncation_term,
        };
        std::fs::write(
            dir.join(format!("defects_eps_{}.json", r.eps)),
            serde_json::to_string_pretty(&rep)?,
        )?;
        if let Some(emb) = &r.embedded {
            std::fs::write(
                dir.join(format!("embedded_eps_{}.json", r.eps)),
                serde_json::to_string_pretty(emb)?,
            )?;
        }
    }
    std::fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&out.summary)?,
    )?;
    std::fs::write(
        dir.join("constants.json"),
        serde_json::to_string_pretty(&out.constants)?,
    )?;

    let idx_hi = 5;
    let eig_series: Vec<(f64, f64)> = out
        .rows
        .iter()
        .filter_map(|r| {
            r.eigenvalues
                .iter()
                .take(idx_hi)
                .skip(1)
                .map(|&(_, _, e)| e)
                .reduce(f64::max)
                .map(|e| (r.eps, e))
        })
        .collect();
    std::fs::write(
        dir.join("eigen_error_vs_eps.svg"),
        loglog_chart(
            "eigenvalue error vs eps",
            "eps",
            &[("max |lambda_k(eps) - lambda_k(0)|, k<=5".into(), eig_series)],
            true,
        ),
    )?;
    let d3_series: Vec<(f64, f64)> = out.rows.iter().map(|r| (r.eps, r.defects.d3)).collect();
    std::fs::write(
        dir.join("d3_vs_eps.svg"),
        loglog_chart("resolvent commutator defect vs eps", "eps", &[("d3".into(), d3_series)], true),
    )?;
    Ok(())
}
