//! Discrete operators on the metric graph: P1 Kirchhoff Laplacian, exterior
//! derivative and divergence, harmonic 1-forms, the Dirac spectrum obtained
//! through supersymmetry, and an independent secular-equation oracle.

pub mod calculus;
pub mod secular;

use crate::fem::{smallest_eigenpairs, CooBuilder, CsrMatrix, EigError, EigOptions, EigResult};
use crate::graph::{GraphError, MetricGraph};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MgError {
    #[error("edge {edge}: {n} cells is too coarse (need >= 2)")]
    TooCoarse { edge: usize, n: usize },
    #[error("grids do not match")]
    GridMismatch,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Eig(#[from] EigError),
    #[error("root bracketing failed on [{lo}, {hi}]")]
    RootBracketingFailure { lo: f64, hi: f64 },
}

/// Number of grid cells placed on an edge of length `len` at target spacing
/// `h`; shared with the tube mesher so both sides sample the same stations.
pub fn cells_for(len: f64, h_target: f64) -> usize {
    (len / h_target).ceil() as usize
}

#[derive(Debug, Clone, Copy)]
pub struct EdgeGrid {
    pub n_cells: usize,
    pub h: f64,
    pub length: f64,
    offset: usize,
}

/// Uniform per-edge grids with vertex degrees of freedom shared between
/// adjacent edges.  Dofs 0..|V| are the vertices (continuity is built into
/// the indexing); edge-interior dofs follow in edge order.
#[derive(Debug, Clone)]
pub struct MgGrid {
    n_vertices: usize,
    edges: Vec<EdgeGrid>,
    edge_ends: Vec<(usize, usize)>,
    n_dofs: usize,
}

impl MgGrid {
    pub fn new(g: &MetricGraph, h_target: f64) -> Result<Self, MgError> {
        g.require_finite()?;
        assert!(h_target > 0.0, "h_target must be positive");
        let mut edges = Vec::with_capacity(g.n_edges());
        let mut offset = g.n_vertices();
        for (e, edge) in g.edges().iter().enumerate() {
            let n = cells_for(edge.length, h_target);
            if n < 2 {
                return Err(MgError::TooCoarse { edge: e, n });
            }
            edges.push(EdgeGrid {
                n_cells: n,
                h: edge.length / n as f64,
                length: edge.length,
                offset,
            });
            offset += n - 1;
        }
        Ok(Self {
            n_vertices: g.n_vertices(),
            edge_ends: g.edges().iter().map(|e| (e.init, e.term)).collect(),
            edges,
            n_dofs: offset,
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_grid(&self, e: usize) -> &EdgeGrid {
        &self.edges[e]
    }

    /// Global dof of station `i` on edge `e` (stations 0..=n_cells).
    pub fn station_dof(&self, e: usize, i: usize) -> usize {
        let grid = &self.edges[e];
        let (init, term) = self.edge_ends[e];
        if i == 0 {
            init
        } else if i == grid.n_cells {
            term
        } else {
            grid.offset + i - 1
        }
    }

    /// Arclength coordinate of station `i` on edge `e`.
    pub fn station_s(&self, e: usize, i: usize) -> f64 {
        self.edges[e].h * i as f64
    }

    /// Samples a dof vector along edge `e` (n_cells + 1 values).
    pub fn edge_samples(&self, e: usize, dofs: &[f64]) -> Vec<f64> {
        (0..=self.edges[e].n_cells)
            .map(|i| dofs[self.station_dof(e, i)])
            .collect()
    }

    /// Interpolates a smooth closed-form function onto the grid.
    pub fn interpolate(&self, f: impl Fn(usize, f64) -> f64) -> Vec<f64> {
        let mut v = vec![0.0; self.n_dofs];
        for e in 0..self.edges.len() {
            for i in 0..=self.edges[e].n_cells {
                v[self.station_dof(e, i)] = f(e, self.station_s(e, i));
            }
        }
        v
    }

    pub fn compatible_with(&self, other: &MgGrid) -> bool {
        self.n_vertices == other.n_vertices
            && self.edges.len() == other.edges.len()
            && self
                .edges
                .iter()
                .zip(&other.edges)
                .all(|(a, b)| a.n_cells == b.n_cells && a.length == b.length)
    }
}

/// Sparse symmetric pencil (K, M) representing a self-adjoint operator in an
/// L²-weighted discrete space.
#[derive(Debug, Clone)]
pub struct WeightedOperatorPair {
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
}

impl WeightedOperatorPair {
    pub fn dim(&self) -> usize {
        self.stiffness.nrows()
    }

    pub fn eigenpairs(&self, k: usize, opts: &EigOptions) -> Result<EigResult, EigError> {
        smallest_eigenpairs(&self.stiffness, &self.mass, k, opts)
    }
}

/// P1 pencil of the Kirchhoff Laplacian on the glued edge grids.  Vertex
/// continuity is enforced by shared dofs; the flux condition is the natural
/// boundary condition of the bilinear form.
pub fn assemble_kirchhoff_laplacian(grid: &MgGrid) -> WeightedOperatorPair {
    let n = grid.n_dofs();
    let mut kb = CooBuilder::new(n, n);
    let mut mb = CooBuilder::new(n, n);
    for e in 0..grid.n_edges() {
        let h = grid.edge_grid(e).h;
        for c in 0..grid.edge_grid(e).n_cells {
            let i = grid.station_dof(e, c);
            let j = grid.station_dof(e, c + 1);
            kb.push(i, i, 1.0 / h);
            kb.push(j, j, 1.0 / h);
            kb.push_sym(i, j, -1.0 / h);
            mb.push(i, i, h / 3.0);
            mb.push(j, j, h / 3.0);
            mb.push_sym(i, j, h / 6.0);
        }
    }
    WeightedOperatorPair {
        stiffness: kb.build(),
        mass: mb.build(),
    }
}

/// Continuous piecewise-linear function on the graph, stored as a dof vector
/// of the grid (vertex values shared by construction).
#[derive(Debug, Clone)]
pub struct MGFunction {
    pub dofs: Vec<f64>,
}

impl MGFunction {
    pub fn from_dofs(grid: &MgGrid, dofs: Vec<f64>) -> Result<Self, MgError> {
        if dofs.len() != grid.n_dofs() {
            return Err(MgError::GridMismatch);
        }
        Ok(Self { dofs })
    }

    /// Builds a function from per-edge sample vectors, checking that all
    /// edges adjacent to a vertex agree there.
    pub fn from_edge_samples(grid: &MgGrid, samples: &[Vec<f64>]) -> Result<Self, MgError> {
        if samples.len() != grid.n_edges() {
            return Err(MgError::GridMismatch);
        }
        let mut dofs = vec![f64::NAN; grid.n_dofs()];
        for (e, vals) in samples.iter().enumerate() {
            if vals.len() != grid.edge_grid(e).n_cells + 1 {
                return Err(MgError::GridMismatch);
            }
            for (i, &v) in vals.iter().enumerate() {
                let d = grid.station_dof(e, i);
                if dofs[d].is_nan() {
                    dofs[d] = v;
                } else if (dofs[d] - v).abs() > 1e-12 * (1.0 + v.abs()) {
                    return Err(MgError::GridMismatch);
                }
            }
        }
        Ok(Self { dofs })
    }

    pub fn inner(&self, pair: &WeightedOperatorPair, other: &MGFunction) -> f64 {
        pair.mass.bilinear(&self.dofs, &other.dofs)
    }

    pub fn norm(&self, pair: &WeightedOperatorPair) -> f64 {
        self.inner(pair, self).max(0.0).sqrt()
    }
}

/// Piecewise-linear 1-form: per-edge sample vectors with no vertex coupling.
/// Vertex evaluation is oriented: -F_e(0) at the initial vertex, +F_e(l_e)
/// at the terminal one.
#[derive(Debug, Clone)]
pub struct MGOneForm {
    pub per_edge: Vec<Vec<f64>>,
}

impl MGOneForm {
    pub fn zeros(grid: &MgGrid) -> Self {
        Self {
            per_edge: (0..grid.n_edges())
                .map(|e| vec![0.0; grid.edge_grid(e).n_cells + 1])
                .collect(),
        }
    }

    /// Oriented endpoint evaluation of edge `e` at vertex `v`.
    pub fn oriented_eval(&self, grid: &MgGrid, e: usize, v: usize) -> f64 {
        let (init, term) = grid.edge_ends[e];
        let vals = &self.per_edge[e];
        if v == term {
            vals[vals.len() - 1]
        } else if v == init {
            -vals[0]
        } else {
            0.0
        }
    }

    /// Sum of oriented evaluations over the edges at `v`; zero for members
    /// of the Kirchhoff form space.
    pub fn flux_defect(&self, g: &MetricGraph, grid: &MgGrid, v: usize) -> f64 {
        g.edges_at(v)
            .into_iter()
            .map(|e| self.oriented_eval(grid, e, v))
            .sum()
    }

    pub fn max_flux_defect(&self, g: &MetricGraph, grid: &MgGrid) -> f64 {
        (0..g.n_vertices())
            .map(|v| self.flux_defect(g, grid, v).abs())
            .fold(0.0, f64::max)
    }

    /// L² pairing through the per-edge P1 mass matrices.
    pub fn inner(&self, grid: &MgGrid, other: &MGOneForm) -> f64 {
        let mut acc = 0.0;
        for e in 0..grid.n_edges() {
            let h = grid.edge_grid(e).h;
            let a = &self.per_edge[e];
            let b = &other.per_edge[e];
            for c in 0..grid.edge_grid(e).n_cells {
                acc += h / 6.0
                    * (2.0 * a[c] * b[c]
                        + a[c] * b[c + 1]
                        + a[c + 1] * b[c]
                        + 2.0 * a[c + 1] * b[c + 1]);
            }
        }
        acc
    }

    pub fn norm(&self, grid: &MgGrid) -> f64 {
        self.inner(grid, self).max(0.0).sqrt()
    }
}

/// One multiplicity cluster of a computed spectrum.
#[derive(Debug, Clone)]
pub struct EigenCluster {
    pub mean: f64,
    pub count: usize,
    pub first_index: usize,
}

/// Groups ascending eigenvalues into clusters whose internal gaps stay below
/// `rel_gap * max(1, lambda)`; discrete stand-in for true multiplicities.
pub fn cluster_eigenvalues(values: &[f64], rel_gap: f64) -> Vec<EigenCluster> {
    let mut clusters: Vec<EigenCluster> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match clusters.last_mut() {
            Some(c) if (v - values[i - 1]).abs() <= rel_gap * v.abs().max(1.0) => {
                c.mean = (c.mean * c.count as f64 + v) / (c.count + 1) as f64;
                c.count += 1;
            }
            _ => clusters.push(EigenCluster {
                mean: v,
                count: 1,
                first_index: i,
            }),
        }
    }
    clusters
}
