//! Identification operators between the metric-graph space and the
//! graph-like space, and the defect norms certifying their quasi-unitary
//! equivalence.
//!
//! The discrete carrier of L²(X_eps) used here is the region-split space
//! L²(X_eps) = ⊕_e L²(tube_e) ⊕ ⊕_v L²(template_v): one block per tube and
//! per vertex region, with interface nodes duplicated between blocks.  The
//! conforming finite-element space embeds isometrically (block masses add up
//! to the conforming mass), while the splitting lets the identification
//! operator place a function on the tubes and literally zero on the vertex
//! blocks, exactly like its continuum counterpart.  With matched
//! longitudinal grids J is then an exact isometry: J*J = id up to roundoff.

use crate::fem::assembly::local_p1;
use crate::fem::{CooBuilder, CsrMatrix, EigError, FactorError, FemError, FemSystem, SkylineFactor};
use crate::graph::MetricGraph;
use crate::mesh::{GraphLikeMesh, MeshError, MeshVariant};
use crate::mg::{MgError, MgGrid, WeightedOperatorPair};
use crate::util::Lcg;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IdentError {
    #[error("operation requires the {expected} mesh variant")]
    VariantMismatch { expected: &'static str },
    #[error("dimension mismatch between operators")]
    DimensionMismatch,
    #[error("spectrum is empty")]
    EmptySpectrum,
    #[error("solver failure: {0}")]
    SolverFailure(#[from] FactorError),
    #[error(transparent)]
    Eig(#[from] EigError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Mg(#[from] MgError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKey {
    Edge(usize),
    Vertex(usize),
}

/// One block of the region-split space.
#[derive(Debug)]
pub struct Block {
    pub key: BlockKey,
    /// Conforming (mesh) dof behind each block dof.
    pub global_ids: Vec<usize>,
    pub offset: usize,
    pub mass: CsrMatrix,
}

/// The region-split (broken) L² space over a graph-like mesh.
#[derive(Debug)]
pub struct BrokenSpace {
    pub blocks: Vec<Block>,
    pub total_dim: usize,
    pub conforming_dim: usize,
}

impl BrokenSpace {
    pub fn from_mesh(mesh: &GraphLikeMesh) -> BrokenSpace {
        let mut blocks = Vec::new();
        let mut offset = 0usize;
        for tube in &mesh.tubes {
            let n_local = (tube.n_long + 1) * (tube.n_cross + 1);
            let mut global_ids = Vec::with_capacity(n_local);
            let mut coords = Vec::with_capacity(n_local);
            for i in 0..=tube.n_long {
                for j in 0..=tube.n_cross {
                    global_ids.push(tube.node(i, j));
                    coords.push([
                        tube.station_s(i),
                        mesh.eps * (-0.5 + j as f64 / tube.n_cross as f64),
                    ]);
                }
            }
            let mut mb = CooBuilder::new(n_local, n_local);
            let at = |i: usize, j: usize| i * (tube.n_cross + 1) + j;
            for i in 0..tube.n_long {
                for j in 0..tube.n_cross {
                    for t in [
                        [at(i, j), at(i + 1, j), at(i + 1, j + 1)],
                        [at(i, j), at(i + 1, j + 1), at(i, j + 1)],
                    ] {
                        let (area, _) = local_p1(t.map(|k| coords[k]));
                        for a in 0..3 {
                            for b in 0..3 {
                                let m = if a == b { area / 6.0 } else { area / 12.0 };
                                mb.push(t[a], t[b], m);
                            }
                        }
                    }
                }
            }
            blocks.push(Block {
                key: BlockKey::Edge(tube.edge),
                global_ids,
                offset,
                mass: mb.build(),
            });
            offset += n_local;
        }
        for inst in &mesh.templates {
            let n_local = inst.mesh.nodes.len();
            let mut mb = CooBuilder::new(n_local, n_local);
            for t in &inst.mesh.tris {
                let coords = t.map(|k| {
                    let p = inst.mesh.nodes[k];
                    [mesh.eps * p[0], mesh.eps * p[1]]
                });
                let (area, _) = local_p1(coords);
                for a in 0..3 {
                    for b in 0..3 {
                        let m = if a == b { area / 6.0 } else { area / 12.0 };
                        mb.push(t[a], t[b], m);
                    }
                }
            }
            blocks.push(Block {
                key: BlockKey::Vertex(inst.vertex),
                global_ids: inst.node_ids.clone(),
                offset,
                mass: mb.build(),
            });
            offset += n_local;
        }
        BrokenSpace {
            blocks,
            total_dim: offset,
            conforming_dim: mesh.n_nodes,
        }
    }

    /// The isometric embedding of the conforming space: duplicate interface
    /// values into every block.
    pub fn inject(&self, conforming: &[f64]) -> Vec<f64> {
        debug_assert_eq!(conforming.len(), self.conforming_dim);
        let mut out = vec![0.0; self.total_dim];
        for b in &self.blocks {
            for (k, &g) in b.global_ids.iter().enumerate() {
                out[b.offset + k] = conforming[g];
            }
        }
        out
    }

    /// Transpose of `inject` (scatter-add of block values).
    pub fn inject_transpose(&self, broken: &[f64]) -> Vec<f64> {
        debug_assert_eq!(broken.len(), self.total_dim);
        let mut out = vec![0.0; self.conforming_dim];
        for b in &self.blocks {
            for (k, &g) in b.global_ids.iter().enumerate() {
                out[g] += broken[b.offset + k];
            }
        }
        out
    }

    /// Block-diagonal mass application.
    pub fn mass_apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.total_dim);
        let mut out = vec![0.0; self.total_dim];
        for b in &self.blocks {
            let lo = b.offset;
            let hi = lo + b.global_ids.len();
            let local = b.mass.mul_vec(&x[lo..hi]);
            out[lo..hi].copy_from_slice(&local);
        }
        out
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        self.mass_apply(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        self.inner(x, x).max(0.0).sqrt()
    }
}

/// Rectangular identification operator from the metric-graph P1 space into
/// the region-split space over the mesh, with its cached M-adjoint.
pub struct IdentificationMap {
    /// Sparse matrix, broken_dim x mg_dim.
    pub matrix: CsrMatrix,
    pub broken: BrokenSpace,
    mg_mass: CsrMatrix,
    mg_mass_factor: SkylineFactor,
}

impl IdentificationMap {
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(f)
    }

    /// The M-adjoint J* = M0^{-1} J^T M_b; satisfies the pairing identity
    /// <Jf, u>_{M_b} = <f, J*u>_{M0} to machine precision by construction.
    pub fn apply_adjoint(&self, u: &[f64]) -> Vec<f64> {
        let mbu = self.broken.mass_apply(u);
        let jt = self.matrix.mul_vec_transpose(&mbu);
        self.mg_mass_factor.solve(&jt)
    }

    pub fn mg_inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.mg_mass.bilinear(f, g)
    }

    /// Operator norm in the weighted spaces, by power iteration on J*J.
    pub fn operator_norm(&self, opts: &PowerOpts) -> f64 {
        let dim = self.matrix.ncols();
        operator_norm(
            dim,
            |f| self.apply(f),
            |u| self.apply_adjoint(u),
            |f, g| self.mg_inner(f, g),
            opts,
        )
    }
}

/// The function identification operator: on each tube the metric-graph
/// function is extended constantly in the cross direction and scaled by
/// eps^{-1/2} (the normalized constant cross-section mode); vertex blocks
/// receive zero.  Station values come from longitudinal-linear
/// interpolation, which is exact when the grids match.
pub fn build_j0(
    g: &MetricGraph,
    grid: &MgGrid,
    pair: &WeightedOperatorPair,
    mesh: &GraphLikeMesh,
) -> Result<IdentificationMap, IdentError> {
    if mesh.variant != MeshVariant::Abstract {
        return Err(IdentError::VariantMismatch {
            expected: "abstract",
        });
    }
    if grid.n_edges() != g.n_edges() || grid.n_edges() != mesh.tubes.len() {
        return Err(IdentError::DimensionMismatch);
    }
    let broken = BrokenSpace::from_mesh(mesh);
    let scale = 1.0 / mesh.eps.sqrt();
    let mut jb = CooBuilder::new(broken.total_dim, grid.n_dofs());
    for (block, tube) in broken.blocks.iter().zip(&mesh.tubes) {
        debug_assert_eq!(block.key, BlockKey::Edge(tube.edge));
        let e = tube.edge;
        let eg = grid.edge_grid(e);
        for i in 0..=tube.n_long {
            let s = tube.station_s(i);
            // clamp into the edge and locate the mg cell
            let t = (s / eg.h).clamp(0.0, eg.n_cells as f64);
            let cell = (t.floor() as usize).min(eg.n_cells - 1);
            let w1 = t - cell as f64;
            let w0 = 1.0 - w1;
            for j in 0..=tube.n_cross {
                let row = block.offset + i * (tube.n_cross + 1) + j;
                if w0.abs() > 1e-14 {
                    jb.push(row, grid.station_dof(e, cell), scale * w0);
                }
                if w1.abs() > 1e-14 {
                    jb.push(row, grid.station_dof(e, cell + 1), scale * w1);
                }
            }
        }
    }
    let mg_mass_factor = SkylineFactor::new(&pair.mass)?;
    Ok(IdentificationMap {
        matrix: jb.build(),
        broken,
        mg_mass: pair.mass.clone(),
        mg_mass_factor,
    })
}

#[derive(Debug, Clone)]
pub struct PowerOpts {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for PowerOpts {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 300,
            seed: 0xD1AC,
        }
    }
}

/// Largest singular value of A between weighted spaces, via power iteration
/// on A*A in the source inner product.  Returns 0 early for numerically
/// zero operators.
pub fn operator_norm(
    src_dim: usize,
    apply: impl Fn(&[f64]) -> Vec<f64>,
    apply_adjoint: impl Fn(&[f64]) -> Vec<f64>,
    src_inner: impl Fn(&[f64], &[f64]) -> f64,
    opts: &PowerOpts,
) -> f64 {
    let mut rng = Lcg::new(opts.seed);
    let mut x = rng.vector(src_dim);
    let nx = src_inner(&x, &x).max(0.0).sqrt();
    if nx == 0.0 {
        return 0.0;
    }
    for v in x.iter_mut() {
        *v /= nx;
    }
    let mut nu = 0.0f64;
    for _ in 0..opts.max_iter {
        let y = apply_adjoint(&apply(&x));
        let nu_new = src_inner(&y, &x);
        let ny = src_inner(&y, &y).max(0.0).sqrt();
        if ny < 1e-28 {
            return 0.0;
        }
        x = y;
        for v in x.iter_mut() {
            *v /= ny;
        }
        if (nu_new - nu).abs() <= opts.tol * nu_new.abs() {
            return nu_new.max(0.0).sqrt();
        }
        nu = nu_new;
    }
    nu.max(0.0).sqrt()
}

/// Resolvent-defect norms of Def.-style quasi-unitary equivalence, measured
/// at the Laplacian level with spectral parameter -1:
/// d1 = ||(1 - J*J)(L0+1)^{-1}||, d2 = ||(1 - JJ*)(L+1)^{-1}||,
/// d3 = ||J (L0+1)^{-1} - (L+1)^{-1} J||.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct DefectNorms {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

pub fn defect_norms_laplacian(
    mg: &WeightedOperatorPair,
    fem: &FemSystem,
    map: &IdentificationMap,
    opts: &PowerOpts,
) -> Result<DefectNorms, IdentError> {
    if map.broken.conforming_dim != fem.n_dofs {
        return Err(IdentError::DimensionMismatch);
    }
    let mg_dim = map.matrix.ncols();
    let broken_dim = map.broken.total_dim;

    // resolvents (A + M)^{-1} M in each space
    let mg_shifted = mg.stiffness.linear_combination(1.0, &mg.mass, 1.0);
    let mg_res = SkylineFactor::new(&mg_shifted)?;
    let fem_shifted = fem.stiffness.linear_combination(1.0, &fem.mass, 1.0);
    let fem_res = SkylineFactor::new(&fem_shifted)?;
    let fem_mass_factor = SkylineFactor::new(&fem.mass)?;

    let r0 = |f: &[f64]| mg_res.solve(&mg.mass.mul_vec(f));
    // lifted resolvent on the broken space: inject . R . iota*
    let rb = |u: &[f64]| {
        let mbu = map.broken.mass_apply(u);
        let it = map.broken.inject_transpose(&mbu);
        let conf = fem_mass_factor.solve(&it); // iota* u
        let res = fem_res.solve(&fem.mass.mul_vec(&conf));
        map.broken.inject(&res)
    };
    let mg_inner = |f: &[f64], g: &[f64]| map.mg_inner(f, g);
    let br_inner = |u: &[f64], v: &[f64]| map.broken.inner(u, v);

    // d1: (1 - J*J) R0, an operator on the graph side
    let d1 = {
        let apply = |f: &[f64]| {
            let rf = r0(f);
            let jj = map.apply_adjoint(&map.apply(&rf));
            rf.iter().zip(&jj).map(|(a, b)| a - b).collect::<Vec<_>>()
        };
        let adjoint = |f: &[f64]| {
            let jj = map.apply_adjoint(&map.apply(f));
            let diff: Vec<f64> = f.iter().zip(&jj).map(|(a, b)| a - b).collect();
            r0(&diff)
        };
        operator_norm(mg_dim, apply, adjoint, mg_inner, opts)
    };

    // d2: (1 - JJ*) R, an operator on the space side
    let d2 = {
        let apply = |u: &[f64]| {
            let ru = rb(u);
            let jj = map.apply(&map.apply_adjoint(&ru));
            ru.iter().zip(&jj).map(|(a, b)| a - b).collect::<Vec<_>>()
        };
        let adjoint = |u: &[f64]| {
            let jj = map.apply(&map.apply_adjoint(u));
            let diff: Vec<f64> = u.iter().zip(&jj).map(|(a, b)| a - b).collect();
            rb(&diff)
        };
        operator_norm(broken_dim, apply, adjoint, br_inner, opts)
    };

    // d3: J R0 - R J, from the graph side into the space side
    let d3 = {
        let apply = |f: &[f64]| {
            let a = map.apply(&r0(f));
            let b = rb(&map.apply(f));
            a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>()
        };
        let adjoint = |u: &[f64]| {
            let a = r0(&map.apply_adjoint(u));
            let b = map.apply_adjoint(&rb(u));
            a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>()
        };
        operator_norm(mg_dim, apply, adjoint, mg_inner, opts)
    };

    Ok(DefectNorms { d1, d2, d3 })
}

/// Hausdorff distance between the Laplacian-resolvent spectra: eigenvalues
/// are mapped to 1/(lambda+1) and 0 is appended to both sets to stand for
/// the truncated tails.
pub fn hausdorff_resolvent_distance(spec_a: &[f64], spec_b: &[f64]) -> Result<f64, IdentError> {
    if spec_a.is_empty() || spec_b.is_empty() {
        return Err(IdentError::EmptySpectrum);
    }
    let image = |s: &[f64]| -> Vec<f64> {
        let mut v: Vec<f64> = s.iter().map(|&l| 1.0 / (l + 1.0)).collect();
        v.push(0.0);
        v
    };
    let a = image(spec_a);
    let b = image(spec_b);
    let directed = |x: &[f64], y: &[f64]| -> f64 {
        x.iter()
            .map(|&p| y.iter().map(|&q| (p - q).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(directed(&a, &b).max(directed(&b, &a)))
}

/// Contribution of the truncated spectral tail to the Hausdorff distance.
pub fn resolvent_truncation_term(lambda_max: f64) -> f64 {
    1.0 / (lambda_max + 1.0)
}

/// Measured embedded-vs-abstract perturbation quantities.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EmbeddedReport {
    pub eps: f64,
    pub tau: f64,
    /// ||1 - J~* J~|| on the abstract side; equals eps*tau in exact
    /// arithmetic.
    pub defect_source: f64,
    /// ||1 - J~ J~*|| on the embedded side.
    pub defect_target: f64,
    pub expected_defect: f64,
    /// ||J~ R_abs - R_emb J~|| at the Laplacian level.
    pub commutator: f64,
}

/// Builds the pullback identification between the abstract and embedded
/// variants (same templates, same grids) and measures its defects.  The
/// pullback along the affine tube reparametrization maps node to node, so
/// the only nontrivial factor is the Jacobian 1 - eps*tau in the tube
/// masses.
pub fn embedded_defects(
    g: &MetricGraph,
    abstract_mesh: &GraphLikeMesh,
    embedded_mesh: &GraphLikeMesh,
    fem_abs: &FemSystem,
    fem_emb: &FemSystem,
    opts: &PowerOpts,
) -> Result<EmbeddedReport, IdentError> {
    let _ = g;
    if abstract_mesh.variant != MeshVariant::Abstract {
        return Err(IdentError::VariantMismatch {
            expected: "abstract",
        });
    }
    let tau = match embedded_mesh.variant {
        MeshVariant::Embedded { tau } => tau,
        _ => {
            return Err(IdentError::VariantMismatch {
                expected: "embedded",
            })
        }
    };
    let eps = abstract_mesh.eps;
    if embedded_mesh.eps != eps {
        return Err(IdentError::DimensionMismatch);
    }
    for (ta, te) in abstract_mesh.tubes.iter().zip(&embedded_mesh.tubes) {
        if ta.n_long != te.n_long || ta.n_cross != te.n_cross {
            return Err(IdentError::DimensionMismatch);
        }
    }
    let broken_abs = BrokenSpace::from_mesh(abstract_mesh);
    let broken_emb = BrokenSpace::from_mesh(embedded_mesh);
    if broken_abs.total_dim != broken_emb.total_dim {
        return Err(IdentError::DimensionMismatch);
    }
    let dim = broken_abs.total_dim;

    // J~: node-to-node pullback, identity on the coefficients
    let j_apply = |u: &[f64]| u.to_vec();
    // J~* = M_abs^{-1} J^T M_emb, applied block by block
    let abs_mass_factors: Vec<SkylineFactor> = broken_abs
        .blocks
        .iter()
        .map(|b| SkylineFactor::new(&b.mass))
        .collect::<Result<_, _>>()?;
    let j_adjoint = |u: &[f64]| {
        let memb = broken_emb.mass_apply(u);
        let mut out = vec![0.0; dim];
        for (b, f) in broken_abs.blocks.iter().zip(&abs_mass_factors) {
            let lo = b.offset;
            let hi = lo + b.global_ids.len();
            let local = f.solve(&memb[lo..hi]);
            out[lo..hi].copy_from_slice(&local);
        }
        out
    };

    let abs_inner = |x: &[f64], y: &[f64]| broken_abs.inner(x, y);
    let emb_inner = |x: &[f64], y: &[f64]| broken_emb.inner(x, y);

    // ||1 - J~*J~|| on the abstract side
    let defect_source = {
        let apply = |u: &[f64]| {
            let jj = j_adjoint(&j_apply(u));
            u.iter().zip(&jj).map(|(a, b)| a - b).collect::<Vec<_>>()
        };
        operator_norm(dim, &apply, &apply, abs_inner, opts)
    };
    // ||1 - J~J~*|| on the embedded side
    let defect_target = {
        let apply = |u: &[f64]| {
            let jj = j_apply(&j_adjoint(u));
            u.iter().zip(&jj).map(|(a, b)| a - b).collect::<Vec<_>>()
        };
        operator_norm(dim, &apply, &apply, emb_inner, opts)
    };

    // commutator of the lifted Laplacian resolvents with J~
    let abs_shifted = fem_abs.stiffness.linear_combination(1.0, &fem_abs.mass, 1.0);
    let emb_shifted = fem_emb.stiffness.linear_combination(1.0, &fem_emb.mass, 1.0);
    let abs_res = SkylineFactor::new(&abs_shifted)?;
    let emb_res = SkylineFactor::new(&emb_shifted)?;
    let abs_mass = SkylineFactor::new(&fem_abs.mass)?;
    let emb_mass = SkylineFactor::new(&fem_emb.mass)?;
    let r_abs = |u: &[f64]| {
        let it = broken_abs.inject_transpose(&broken_abs.mass_apply(u));
        let conf = abs_mass.solve(&it);
        broken_abs.inject(&abs_res.solve(&fem_abs.mass.mul_vec(&conf)))
    };
    let r_emb = |u: &[f64]| {
        let it = broken_emb.inject_transpose(&broken_emb.mass_apply(u));
        let conf = emb_mass.solve(&it);
        broken_emb.inject(&emb_res.solve(&fem_emb.mass.mul_vec(&conf)))
    };
    let commutator = {
        let apply = |u: &[f64]| {
            let a = j_apply(&r_abs(u));
            let b = r_emb(&j_apply(u));
            a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>()
        };
        let adjoint = |u: &[f64]| {
            let a = r_abs(&j_adjoint(u));
            let b = j_adjoint(&r_emb(u));
            a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>()
        };
        operator_norm(dim, apply, adjoint, abs_inner, opts)
    };

    Ok(EmbeddedReport {
        eps,
        tau,
        defect_source,
        defect_target,
        expected_defect: eps * tau,
        commutator,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble_neumann;
    use crate::graph::{EdgeSpec, GraphSpec, VertexSpec};
    use crate::mesh::{
        build_abstract_space, build_embedded_space, default_abstract_templates, embedded_templates,
    };
    use crate::mg::{assemble_kirchhoff_laplacian, MgGrid};

    fn single_edge(embedded: bool) -> MetricGraph {
        MetricGraph::build(&GraphSpec {
            vertices: vec![
                VertexSpec {
                    id: "a".into(),
                    xy: embedded.then_some([0.0, 0.0]),
                },
                VertexSpec {
                    id: "b".into(),
                    xy: embedded.then_some([1.0, 0.0]),
                },
            ],
            edges: vec![EdgeSpec {
                id: "e".into(),
                init: "a".into(),
                term: "b".into(),
                length: 1.0,
            }],
        })
        .unwrap()
    }

    struct Fixture {
        g: MetricGraph,
        grid: MgGrid,
        pair: crate::mg::WeightedOperatorPair,
        mesh: GraphLikeMesh,
    }

    fn fixture(eps: f64, h: f64) -> Fixture {
        let g = single_edge(false);
        let templates = default_abstract_templates(&g, 0.25, 0.2).unwrap();
        let mesh = build_abstract_space(&g, &templates, eps, h).unwrap();
        let grid = MgGrid::new(&g, h).unwrap();
        let pair = assemble_kirchhoff_laplacian(&grid);
        Fixture { g, grid, pair, mesh }
    }

    #[test]
    fn j_is_an_exact_isometry_on_matched_grids() {
        let fx = fixture(0.2, 0.05);
        let map = build_j0(&fx.g, &fx.grid, &fx.pair, &fx.mesh).unwrap();
        let mut rng = Lcg::new(42);
        let f = rng.vector(fx.grid.n_dofs());
        let jf = map.apply(&f);
        // norms agree and J*J f = f to machine precision
        let nf = map.mg_inner(&f, &f).sqrt();
        let njf = map.broken.norm(&jf);
        assert!((nf - njf).abs() < 1e-12 * nf);
        let jjf = map.apply_adjoint(&jf);
        let err: f64 = jjf
            .iter()
            .zip(&f)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-11 * nf, "J*J defect {err}");
        let norm = map.operator_norm(&PowerOpts::default());
        assert!((norm - 1.0).abs() < 1e-6, "|J| = {norm}");
    }

    #[test]
    fn adjoint_pairing_identity_holds_to_machine_precision() {
        let fx = fixture(0.25, 0.0625);
        let map = build_j0(&fx.g, &fx.grid, &fx.pair, &fx.mesh).unwrap();
        let mut rng = Lcg::new(7);
        for _ in 0..5 {
            let f = rng.vector(fx.grid.n_dofs());
            let u = rng.vector(map.broken.total_dim);
            let lhs = map.broken.inner(&map.apply(&f), &u);
            let rhs = map.mg_inner(&f, &map.apply_adjoint(&u));
            assert!(
                (lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0),
                "{lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn constants_map_as_in_the_continuum() {
        let eps = 0.2;
        let fx = fixture(eps, 0.05);
        let map = build_j0(&fx.g, &fx.grid, &fx.pair, &fx.mesh).unwrap();
        let ones = vec![1.0; fx.grid.n_dofs()];
        let j1 = map.apply(&ones);
        let scale = 1.0 / eps.sqrt();
        for b in &map.broken.blocks {
            for k in 0..b.global_ids.len() {
                let v = j1[b.offset + k];
                match b.key {
                    BlockKey::Edge(_) => assert!((v - scale).abs() < 1e-13),
                    BlockKey::Vertex(_) => assert_eq!(v, 0.0),
                }
            }
        }
        // and back: the adjoint averages the tubes to 1 and discards the
        // vertex blocks entirely
        let back = map.apply_adjoint(&j1);
        assert!(back.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let mut vertex_only = vec![0.0; map.broken.total_dim];
        for b in &map.broken.blocks {
            if matches!(b.key, BlockKey::Vertex(_)) {
                for k in 0..b.global_ids.len() {
                    vertex_only[b.offset + k] = 1.0 + k as f64;
                }
            }
        }
        let discarded = map.apply_adjoint(&vertex_only);
        assert!(discarded.iter().all(|v| v.abs() == 0.0));
    }

    #[test]
    fn broken_embedding_is_isometric() {
        let fx = fixture(0.2, 0.05);
        let fem = assemble_neumann(&fx.mesh).unwrap();
        let broken = BrokenSpace::from_mesh(&fx.mesh);
        let mut rng = Lcg::new(5);
        let x = rng.vector(fem.n_dofs);
        let ix = broken.inject(&x);
        let broken_norm = broken.inner(&ix, &ix);
        let conf_norm = fem.mass.bilinear(&x, &x);
        assert!(
            (broken_norm - conf_norm).abs() < 1e-12 * conf_norm,
            "{broken_norm} vs {conf_norm}"
        );
    }

    #[test]
    fn weighted_inner_product_is_in_effect() {
        let fx = fixture(0.2, 0.05);
        let map = build_j0(&fx.g, &fx.grid, &fx.pair, &fx.mesh).unwrap();
        let mut rng = Lcg::new(11);
        let f = rng.vector(fx.grid.n_dofs());
        let u = rng.vector(map.broken.total_dim);
        let weighted = map.broken.inner(&map.apply(&f), &u);
        let unweighted: f64 = map.apply(&f).iter().zip(&u).map(|(a, b)| a * b).sum();
        assert!((weighted - unweighted).abs() > 1e-6 * weighted.abs().max(1e-6));
    }

    #[test]
    fn defect_norms_on_a_single_edge() {
        let fx = fixture(0.2, 0.05);
        let fem = assemble_neumann(&fx.mesh).unwrap();
        let map = build_j0(&fx.g, &fx.grid, &fx.pair, &fx.mesh).unwrap();
        let d = defect_norms_laplacian(&fx.pair, &fem, &map, &PowerOpts::default()).unwrap();
        // J is an exact isometry, so d1 vanishes identically
        assert!(d.d1 < 1e-9, "d1 = {}", d.d1);
        assert!(d.d2 > 0.0 && d.d2 < 1.0, "d2 = {}", d.d2);
        assert!(d.d3 > 0.0 && d.d3 < 1.0, "d3 = {}", d.d3);
    }

    #[test]
    fn variant_mismatch_is_rejected() {
        let g = single_edge(true);
        let tau = 0.25;
        let templates = embedded_templates(&g, tau, 0.2).unwrap();
        let mesh = build_embedded_space(&g, &templates, 0.2, tau, 0.05).unwrap();
        let grid = MgGrid::new(&g, 0.05).unwrap();
        let pair = assemble_kirchhoff_laplacian(&grid);
        assert!(matches!(
            build_j0(&g, &grid, &pair, &mesh),
            Err(IdentError::VariantMismatch { .. })
        ));
    }

    #[test]
    fn embedded_pullback_defect_equals_eps_tau() {
        let g = single_edge(true);
        let (eps, tau, h) = (0.2, 0.25, 0.05);
        let templates = embedded_templates(&g, tau, 0.2).unwrap();
        let abs_mesh = build_abstract_space(&g, &templates, eps, h).unwrap();
        let emb_mesh = build_embedded_space(&g, &templates, eps, tau, h).unwrap();
        let fem_abs = assemble_neumann(&abs_mesh).unwrap();
        let fem_emb = assemble_neumann(&emb_mesh).unwrap();
        let rep = embedded_defects(
            &g,
            &abs_mesh,
            &emb_mesh,
            &fem_abs,
            &fem_emb,
            &PowerOpts::default(),
        )
        .unwrap();
        let expect = eps * tau;
        assert!(
            (rep.defect_source - expect).abs() < 1e-9,
            "source defect {} vs {expect}",
            rep.defect_source
        );
        assert!(
            (rep.defect_target - expect).abs() < 1e-9,
            "target defect {} vs {expect}",
            rep.defect_target
        );
        assert!(rep.commutator < 1.0);
    }

    #[test]
    fn hausdorff_distance_examples() {
        assert_eq!(
            hausdorff_resolvent_distance(&[0.0, 1.0, 4.0], &[0.0, 1.0, 4.0]).unwrap(),
            0.0
        );
        let d = hausdorff_resolvent_distance(&[0.0, 1.0], &[0.0, 2.0]).unwrap();
        assert!((d - (0.5 - 1.0 / 3.0)).abs() < 1e-15);
        assert!(hausdorff_resolvent_distance(&[], &[0.0]).is_err());
    }
}
