//! Discrete exterior derivative and divergence on the metric graph, harmonic
//! 1-forms from the cycle space, and the Dirac spectrum via supersymmetry.

use super::{MGFunction, MGOneForm, MgError, MgGrid, WeightedOperatorPair};
use crate::fem::EigOptions;
use crate::graph::MetricGraph;

/// Eigenvalues below this (absolute) threshold count as kernel elements when
/// converting Laplace spectra into Dirac spectra.
pub const KERNEL_TOL: f64 = 1e-8;

/// Second-order finite differences of per-edge samples: central in the
/// interior, one-sided at the endpoints.  Exact on linear functions.
fn differentiate(samples: &[f64], h: f64) -> Vec<f64> {
    let n = samples.len() - 1;
    let mut d = vec![0.0; n + 1];
    d[0] = (-3.0 * samples[0] + 4.0 * samples[1] - samples[2]) / (2.0 * h);
    for i in 1..n {
        d[i] = (samples[i + 1] - samples[i - 1]) / (2.0 * h);
    }
    d[n] = (3.0 * samples[n] - 4.0 * samples[n - 1] + samples[n - 2]) / (2.0 * h);
    d
}

/// Discrete exterior derivative: f -> (f_e' ds_e).
pub fn mg_gradient(grid: &MgGrid, f: &MGFunction) -> Result<MGOneForm, MgError> {
    if f.dofs.len() != grid.n_dofs() {
        return Err(MgError::GridMismatch);
    }
    let per_edge = (0..grid.n_edges())
        .map(|e| differentiate(&grid.edge_samples(e, &f.dofs), grid.edge_grid(e).h))
        .collect();
    Ok(MGOneForm { per_edge })
}

/// Discrete divergence: F -> (-F_e' . ds_e).  The one-sided endpoint values
/// of the edges adjacent to a vertex need not agree (the continuum
/// divergence is only an L² function), so the shared vertex dof takes their
/// length-weighted mean, which is the L²-projection onto the continuous
/// space up to higher order.
pub fn mg_divergence(grid: &MgGrid, form: &MGOneForm) -> Result<MGFunction, MgError> {
    if form.per_edge.len() != grid.n_edges() {
        return Err(MgError::GridMismatch);
    }
    let mut dofs = vec![0.0; grid.n_dofs()];
    let mut vertex_weight = vec![0.0; grid.n_vertices()];
    for e in 0..grid.n_edges() {
        let g = grid.edge_grid(e);
        if form.per_edge[e].len() != g.n_cells + 1 {
            return Err(MgError::GridMismatch);
        }
        let d = differentiate(&form.per_edge[e], g.h);
        for (i, &di) in d.iter().enumerate() {
            let dof = grid.station_dof(e, i);
            if i == 0 || i == g.n_cells {
                dofs[dof] += -di * g.h;
                vertex_weight[dof] += g.h;
            } else {
                dofs[dof] = -di;
            }
        }
    }
    for v in 0..grid.n_vertices() {
        if vertex_weight[v] > 0.0 {
            dofs[v] /= vertex_weight[v];
        }
    }
    Ok(MGFunction { dofs })
}

/// Basis of the discrete harmonic 1-forms: one edgewise-constant form per
/// fundamental cycle, signs following the edge orientations.  The list is
/// empty exactly for trees.
pub fn harmonic_oneform_basis(g: &MetricGraph, grid: &MgGrid) -> Vec<MGOneForm> {
    g.fundamental_cycles()
        .into_iter()
        .map(|cycle| {
            let mut form = MGOneForm::zeros(grid);
            for (e, sign) in cycle {
                form.per_edge[e] = vec![sign; grid.edge_grid(e).n_cells + 1];
            }
            form
        })
        .collect()
}

/// The `k` smallest-magnitude eigenvalues of the Dirac-type operator,
/// obtained from the Kirchhoff spectrum: each nonzero Laplace eigenvalue
/// lambda contributes the pair ±sqrt(lambda), and the kernel has dimension
/// b0 + b1.  Ties between +x and -x order the negative value first.
pub fn mg_dirac_spectrum(
    g: &MetricGraph,
    grid: &MgGrid,
    pair: &WeightedOperatorPair,
    k: usize,
    opts: &EigOptions,
) -> Result<Vec<f64>, MgError> {
    let _ = grid;
    let (b0, b1) = g.betti_numbers();
    let kernel_dim = b0 + b1;
    // enough Laplace eigenvalues to cover k Dirac values
    let need = kernel_dim + k.div_ceil(2) + 2;
    let res = pair.eigenpairs(need.min(pair.dim()), opts)?;
    let mut dirac: Vec<f64> = vec![0.0; kernel_dim];
    for &lam in &res.values {
        if lam > KERNEL_TOL {
            let mu = lam.sqrt();
            dirac.push(mu);
            dirac.push(-mu);
        }
    }
    dirac.sort_by(|a, b| (a.abs(), *a).partial_cmp(&(b.abs(), *b)).unwrap());
    dirac.truncate(k);
    Ok(dirac)
}
