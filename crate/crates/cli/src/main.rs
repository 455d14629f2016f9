//! Command-line harness around the metric-graph / graph-like-space
//! laboratory: spectra, constants, eps-sweeps, verification suites, and
//! mesh export.
//!
//! Exit codes: 0 on success, 2 when a quantitative bound is violated,
//! 1 on operational failure (with a JSON error object on stderr).

mod spectra;
mod svg;
mod sweep;
mod verify;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use fatgraph::consts::{compute_constants, delta_eps, delta_eps_prime, ConstOptions};
use fatgraph::graph::MetricGraph;
use fatgraph::mesh::{build_abstract_space, build_embedded_space};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "fatgraph",
    about = "Spectral convergence laboratory for metric graphs and their thickened neighbourhoods"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Grid / mesh spacing override.
    #[arg(long, global = true)]
    h: Option<f64>,
    /// Number of eigenvalues.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Seed for all deterministic pseudo-random starts.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for file outputs (stdout when absent).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Emit JSON on stdout where applicable.
    #[arg(long, global = true)]
    json: bool,
    /// Emit CSV on stdout where applicable.
    #[arg(long, global = true)]
    csv: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Metric-graph spectrum: FEM plus the secular-equation oracle.
    Mgspec { graph: PathBuf },
    /// Neumann spectrum of the graph-like space at one eps.
    Femspec {
        graph: PathBuf,
        #[arg(long)]
        eps: f64,
        /// Collar / shortening parameter of the template family.
        #[arg(long, default_value_t = 0.25)]
        tau: f64,
        #[arg(long)]
        embedded: bool,
    },
    /// Uniformity constants and the rates delta_eps, delta_eps'.
    Constants {
        graph: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        tau: f64,
    },
    /// Full eps-sweep from a JSON config.
    Sweep { config: PathBuf },
    /// Analytic verification suites.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        /// Optional graph for the trace / supersym suites.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, default_value_t = 0.25)]
        tau: f64,
    },
    /// Build a graph-like mesh and export it as plain text.
    Mesh {
        graph: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        tau: f64,
        #[arg(long)]
        embedded: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Gaffney,
    Kato,
    Trace,
    Scaling,
    Supersym,
}

fn load_graph(path: &PathBuf) -> Result<MetricGraph> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading graph spec {}", path.display()))?;
    Ok(MetricGraph::from_json(&text)?)
}

fn emit(cli: &Cli, file_name: &str, content: &str) -> Result<()> {
    match &cli.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(file_name), content)?;
            eprintln!("wrote {}", dir.join(file_name).display());
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<u8> {
    let seed = cli.seed.unwrap_or(0xFA7);
    match &cli.cmd {
        Cmd::Mgspec { graph } => {
            let g = load_graph(graph)?;
            let h = cli.h.unwrap_or(5e-3);
            let k = cli.k.unwrap_or(8);
            let rows = spectra::mg_spectrum(&g, h, k, seed)?;
            emit(cli, "mgspec.csv", &spectra::spectrum_csv(&rows))?;
            Ok(0)
        }
        Cmd::Femspec {
            graph,
            eps,
            tau,
            embedded,
        } => {
            let g = load_graph(graph)?;
            let h = cli.h.unwrap_or((eps / 4.0).min(0.02));
            let k = cli.k.unwrap_or(8);
            let rows = spectra::fem_spectrum(&g, *eps, h, k, *tau, *embedded, seed)?;
            emit(cli, "femspec.csv", &spectra::spectrum_csv(&rows))?;
            Ok(0)
        }
        Cmd::Constants { graph, tau } => {
            let g = load_graph(graph)?;
            let templates = spectra::resolve_templates(&g, *tau, false)?;
            let report = compute_constants(&g, &templates, *tau, &ConstOptions::default())?;
            let rates: Vec<serde_json::Value> = sweep::default_eps_list()
                .into_iter()
                .map(|eps| {
                    serde_json::json!({
                        "eps": eps,
                        "delta_eps": delta_eps(&report, eps, 2),
                        "delta_eps_prime": delta_eps_prime(&report, eps),
                    })
                })
                .collect();
            let out = serde_json::json!({ "constants": report, "rates": rates });
            emit(cli, "constants.json", &format!("{:#}\n", out))?;
            Ok(0)
        }
        Cmd::Sweep { config } => {
            let text = std::fs::read_to_string(config)
                .with_context(|| format!("reading sweep config {}", config.display()))?;
            let mut cfg: sweep::SweepConfig = serde_json::from_str(&text)?;
            if let Some(k) = cli.k {
                cfg.k = k;
            }
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(dir) = &cli.out_dir {
                cfg.out_dir = Some(dir.clone());
            }
            // resolve the graph path relative to the config file
            if cfg.graph.is_relative() {
                if let Some(parent) = config.parent() {
                    cfg.graph = parent.join(&cfg.graph);
                }
            }
            let g = load_graph(&cfg.graph)?;
            let embedded_variant = matches!(cfg.variant, sweep::VariantConfig::Embedded { .. });
            let templates = spectra::resolve_templates(&g, cfg.tau, embedded_variant)?;
            let out = sweep::run_sweep(&cfg, &g, &templates)?;
            if let Some(dir) = &cfg.out_dir {
                sweep::write_outputs(&out, dir)?;
            }
            if cli.csv || cfg.out_dir.is_none() {
                print!("{}", out.csv);
            }
            eprintln!(
                "sweep: {} rows, {} failures; eigen slope {:?}, d3 slope {:?}, bounds ok: {}",
                out.rows.len(),
                out.failures.len(),
                out.summary.eigen_error_slope,
                out.summary.d3_slope,
                out.summary.all_bounds_ok
            );
            if !out.failures.is_empty() {
                return Ok(1);
            }
            Ok(if out.summary.all_bounds_ok { 0 } else { 2 })
        }
        Cmd::Verify { suite, graph, tau } => {
            let result = match suite {
                Suite::Gaffney => verify::gaffney_suite()?,
                Suite::Kato => verify::kato_suite()?,
                Suite::Scaling => verify::scaling_suite()?,
                Suite::Trace => {
                    let g = match graph {
                        Some(p) => load_graph(p)?,
                        None => verify::random_connected_graph(7, 5),
                    };
                    verify::trace_suite(&g, *tau)?
                }
                Suite::Supersym => {
                    let g = graph.as_ref().map(load_graph).transpose()?;
                    verify::supersym_suite(g.as_ref())?
                }
            };
            emit(cli, "verify.json", &format!("{:#}\n", result.report))?;
            Ok(if result.pass { 0 } else { 2 })
        }
        Cmd::Mesh {
            graph,
            eps,
            out,
            tau,
            embedded,
        } => {
            let g = load_graph(graph)?;
            let h = cli.h.unwrap_or((eps / 4.0).min(0.02));
            let templates = spectra::resolve_templates(&g, *tau, *embedded)?;
            let mesh = if *embedded {
                build_embedded_space(&g, &templates, *eps, *tau, h)?
            } else {
                build_abstract_space(&g, &templates, *eps, h)?
            };
            std::fs::write(out, mesh.export_text())?;
            eprintln!(
                "mesh: {} nodes, {} triangles, min angle {:.1} deg",
                mesh.n_nodes,
                mesh.n_triangles(),
                mesh.min_angle_deg()
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let err = serde_json::json!({
                "error": format!("{e:#}"),
            });
            eprintln!("{err}");
            ExitCode::from(1)
        }
    }
}
