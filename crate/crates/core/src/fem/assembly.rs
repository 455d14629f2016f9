//! P1 assembly of the Neumann Laplacian on a graph-like mesh, with
//! region-restricted stiffness and mass forms for the localized estimates.

use super::eigen::{smallest_eigenpairs, EigError, EigOptions, EigResult};
use super::sparse::{CooBuilder, CsrMatrix};
use crate::mesh::{GraphLikeMesh, RegionKey, RegionMesh};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FemError {
    #[error("degenerate triangle in {region} (area {area:.3e})")]
    DegenerateTriangle { region: String, area: f64 },
    #[error("unknown region {0}")]
    UnknownRegion(String),
    #[error(transparent)]
    Eig(#[from] EigError),
}

/// Region selector for restricted quadratic forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegionSelector {
    One(RegionKey),
    /// Both halves of an edge tube.
    Edge(usize),
    /// Enlarged (star) vertex neighbourhood: the vertex region plus the
    /// adjacent tube halves.
    Star(usize),
    All,
}

/// Discrete Neumann Laplacian: global pencil plus per-region pencils whose
/// forms sum to the global ones.
#[derive(Debug)]
pub struct FemSystem {
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    pub n_dofs: usize,
    region_pencils: BTreeMap<RegionKey, (CsrMatrix, CsrMatrix)>,
}

pub(crate) fn local_p1(coords: [[f64; 2]; 3]) -> (f64, [[f64; 3]; 3]) {
    let [p1, p2, p3] = coords;
    let det = (p2[0] - p1[0]) * (p3[1] - p1[1]) - (p3[0] - p1[0]) * (p2[1] - p1[1]);
    let area = det / 2.0;
    // gradients of the barycentric basis
    let b = [p2[1] - p3[1], p3[1] - p1[1], p1[1] - p2[1]];
    let c = [p3[0] - p2[0], p1[0] - p3[0], p2[0] - p1[0]];
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
        }
    }
    (area, k)
}

/// Assembles one region into the builders; returns the region's area.
fn assemble_region(
    region: &RegionMesh,
    eps: f64,
    kb: &mut CooBuilder,
    mb: &mut CooBuilder,
) -> Result<(), FemError> {
    for t in &region.tris {
        let coords = t.map(|i| region.physical(i, eps));
        let (area, k_loc) = local_p1(coords);
        if !(area > 1e-14 * eps * eps) {
            return Err(FemError::DegenerateTriangle {
                region: region.key.label(),
                area,
            });
        }
        let ids = t.map(|i| region.nodes[i]);
        for i in 0..3 {
            for j in 0..3 {
                kb.push(ids[i], ids[j], k_loc[i][j]);
                let m = if i == j { area / 6.0 } else { area / 12.0 };
                mb.push(ids[i], ids[j], m);
            }
        }
    }
    Ok(())
}

/// Standard P1 stiffness and mass with natural (Neumann) boundary
/// conditions; the per-region pencils are kept for restricted evaluations.
pub fn assemble_neumann(mesh: &GraphLikeMesh) -> Result<FemSystem, FemError> {
    assemble_regions(&mesh.regions, mesh.eps, mesh.n_nodes)
}

/// Assembles a system from regions (region keys must be unique).  The
/// global pencil is the sum of the per-region ones.
pub fn assemble_regions(
    regions: &[RegionMesh],
    eps: f64,
    n_nodes: usize,
) -> Result<FemSystem, FemError> {
    let mut kb = CooBuilder::new(n_nodes, n_nodes);
    let mut mb = CooBuilder::new(n_nodes, n_nodes);
    let mut region_pencils = BTreeMap::new();
    for region in regions {
        let mut rkb = CooBuilder::new(n_nodes, n_nodes);
        let mut rmb = CooBuilder::new(n_nodes, n_nodes);
        assemble_region(region, eps, &mut rkb, &mut rmb)?;
        let (rk, rm) = (rkb.build(), rmb.build());
        for (r, c, v) in rk.triplets() {
            kb.push(r, c, v);
        }
        for (r, c, v) in rm.triplets() {
            mb.push(r, c, v);
        }
        let previous = region_pencils.insert(region.key, (rk, rm));
        debug_assert!(previous.is_none(), "duplicate region key");
    }
    Ok(FemSystem {
        stiffness: kb.build(),
        mass: mb.build(),
        n_dofs: n_nodes,
        region_pencils,
    })
}

impl FemSystem {
    pub fn eigenpairs(&self, k: usize, opts: &EigOptions) -> Result<EigResult, FemError> {
        Ok(smallest_eigenpairs(&self.stiffness, &self.mass, k, opts)?)
    }

    pub fn region_keys(&self) -> Vec<RegionKey> {
        self.region_pencils.keys().copied().collect()
    }

    fn selected(&self, sel: RegionSelector) -> Result<Vec<&(CsrMatrix, CsrMatrix)>, FemError> {
        let picked: Vec<&(CsrMatrix, CsrMatrix)> = self
            .region_pencils
            .iter()
            .filter(|(key, _)| match sel {
                RegionSelector::One(k) => **key == k,
                RegionSelector::Edge(e) => {
                    matches!(key, RegionKey::EdgeHalf { edge, .. } if *edge == e)
                }
                RegionSelector::Star(v) => match key {
                    RegionKey::EdgeHalf { vertex, .. } => *vertex == v,
                    RegionKey::Vertex { vertex } => *vertex == v,
                },
                RegionSelector::All => true,
            })
            .map(|(_, pencil)| pencil)
            .collect();
        if picked.is_empty() {
            return Err(FemError::UnknownRegion(format!("{sel:?}")));
        }
        Ok(picked)
    }

    /// Dirichlet energy and mass of `x` restricted to the selected region.
    pub fn rayleigh_region(&self, x: &[f64], sel: RegionSelector) -> Result<(f64, f64), FemError> {
        let mut energy = 0.0;
        let mut mass = 0.0;
        for (k, m) in self.selected(sel)? {
            energy += k.bilinear(x, x);
            mass += m.bilinear(x, x);
        }
        Ok((energy, mass))
    }

    /// Region-restricted L² pairing x^T M_region y.
    pub fn region_mass_pairing(
        &self,
        x: &[f64],
        y: &[f64],
        sel: RegionSelector,
    ) -> Result<f64, FemError> {
        let mut acc = 0.0;
        for (_, m) in self.selected(sel)? {
            acc += m.bilinear(x, y);
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Chart, RegionKey, RegionMesh};
    use std::f64::consts::PI;

    /// Structured unit-square mesh as a single region.
    pub(crate) fn unit_square_region(n: usize) -> RegionMesh {
        let mut local = Vec::new();
        for i in 0..=n {
            for j in 0..=n {
                local.push([i as f64 / n as f64, j as f64 / n as f64]);
            }
        }
        let mut tris = Vec::new();
        let at = |i: usize, j: usize| i * (n + 1) + j;
        for i in 0..n {
            for j in 0..n {
                tris.push([at(i, j), at(i + 1, j), at(i + 1, j + 1)]);
                tris.push([at(i, j), at(i + 1, j + 1), at(i, j + 1)]);
            }
        }
        RegionMesh {
            key: RegionKey::Vertex { vertex: 0 },
            chart: Chart::Template,
            nodes: (0..(n + 1) * (n + 1)).collect(),
            local,
            tris,
        }
    }

    #[test]
    fn unit_square_neumann_spectrum() {
        let mut errs = Vec::new();
        for n in [16, 32] {
            let region = unit_square_region(n);
            let n_nodes = region.nodes.len();
            let sys = assemble_regions(&[region], 1.0, n_nodes).unwrap();
            let res = sys.eigenpairs(3, &EigOptions::default()).unwrap();
            assert!(res.values[0].abs() < 1e-9);
            errs.push((res.values[1] - PI * PI).abs());
            // second eigenvalue is double on the square
            assert!((res.values[2] - PI * PI).abs() < 0.1);
        }
        // O(h^2) refinement toward pi^2
        let ratio = errs[0] / errs[1];
        assert!((3.3..4.7).contains(&ratio), "ratio {ratio}, errs {errs:?}");
    }

    #[test]
    fn kernel_is_constant_and_simple() {
        let region = unit_square_region(12);
        let n_nodes = region.nodes.len();
        let sys = assemble_regions(&[region], 1.0, n_nodes).unwrap();
        let ones = vec![1.0; n_nodes];
        let kx = sys.stiffness.mul_vec(&ones);
        assert!(kx.iter().all(|v| v.abs() < 1e-12));
        let res = sys.eigenpairs(2, &EigOptions::default()).unwrap();
        assert!(res.values[0].abs() < 1e-10);
        assert!(res.values[1] > 1.0); // no second kernel vector
    }

    #[test]
    fn region_masks_sum_to_global() {
        use crate::graph::{EdgeSpec, GraphSpec, VertexSpec};
        use crate::mesh::{build_abstract_space, default_abstract_templates};
        let g = crate::graph::MetricGraph::build(&GraphSpec {
            vertices: vec![
                VertexSpec {
                    id: "a".into(),
                    xy: None,
                },
                VertexSpec {
                    id: "b".into(),
                    xy: None,
                },
            ],
            edges: vec![EdgeSpec {
                id: "e".into(),
                init: "a".into(),
                term: "b".into(),
                length: 1.0,
            }],
        })
        .unwrap();
        let templates = default_abstract_templates(&g, 0.25, 0.2).unwrap();
        let mesh = build_abstract_space(&g, &templates, 0.25, 0.0625).unwrap();
        let sys = assemble_neumann(&mesh).unwrap();
        let mut rng = crate::util::Lcg::new(3);
        let x = rng.vector(sys.n_dofs);
        let (e_all, m_all) = sys.rayleigh_region(&x, RegionSelector::All).unwrap();
        let e_global = sys.stiffness.bilinear(&x, &x);
        let m_global = sys.mass.bilinear(&x, &x);
        assert!((e_all - e_global).abs() < 1e-9 * e_global.abs().max(1.0));
        assert!((m_all - m_global).abs() < 1e-12 + 1e-9 * m_global.abs());
        // constant vector: zero energy, region mass = region area
        let ones = vec![1.0; sys.n_dofs];
        let (e0, m0) = sys
            .rayleigh_region(&ones, RegionSelector::Edge(0))
            .unwrap();
        assert!(e0.abs() < 1e-12);
        assert!((m0 - mesh.tube_area(0)).abs() < 1e-12);
        let (_, mv) = sys
            .rayleigh_region(&ones, RegionSelector::One(RegionKey::Vertex { vertex: 0 }))
            .unwrap();
        assert!((mv - mesh.vertex_region_area(0)).abs() < 1e-12);
        assert!(sys
            .rayleigh_region(&ones, RegionSelector::Edge(7))
            .is_err());
    }

    #[test]
    fn scaled_template_eigenvalues_scale_exactly() {
        // identical mesh topology, coordinates scaled by eps through the
        // chart: eigenvalues must scale by exactly eps^{-2}
        let tpl = crate::mesh::template::abstract_template(3, 0.25, 0.2).unwrap();
        let tm = crate::mesh::delaunay::triangulate_template(&tpl, 0.05, 8).unwrap();
        let region = RegionMesh {
            key: RegionKey::Vertex { vertex: 0 },
            chart: Chart::Template,
            nodes: (0..tm.nodes.len()).collect(),
            local: tm.nodes.clone(),
            tris: tm.tris.clone(),
        };
        let n = tm.nodes.len();
        let sys1 = assemble_regions(&[region.clone()], 1.0, n).unwrap();
        let eps = 0.125;
        let sys2 = assemble_regions(&[region], eps, n).unwrap();
        let r1 = sys1.eigenpairs(3, &EigOptions::default()).unwrap();
        let r2 = sys2.eigenpairs(3, &EigOptions::default()).unwrap();
        for (a, b) in r1.values.iter().zip(&r2.values).skip(1) {
            let ratio = b / a;
            assert!(
                (ratio - 1.0 / (eps * eps)).abs() < 1e-6 / (eps * eps),
                "ratio {ratio}"
            );
        }
    }

    #[test]
    fn dense_and_sparse_agree_on_mesh_system() {
        let region = unit_square_region(21); // 484 dofs
        let n_nodes = region.nodes.len();
        let sys = assemble_regions(&[region], 1.0, n_nodes).unwrap();
        let dense = crate::fem::dense_path(&sys.stiffness, &sys.mass, 5).unwrap();
        let sparse = smallest_eigenpairs(
            &sys.stiffness,
            &sys.mass,
            5,
            &EigOptions {
                force_sparse: true,
                ..Default::default()
            },
        )
        .unwrap();
        for (a, b) in dense.values.iter().zip(&sparse.values) {
            assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }
}
