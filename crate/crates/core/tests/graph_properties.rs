//! Topological invariants on randomly generated connected graphs.

use fatgraph::graph::{EdgeSpec, GraphSpec, MetricGraph, VertexSpec};
use fatgraph::mg::calculus::harmonic_oneform_basis;
use fatgraph::mg::MgGrid;
use proptest::prelude::*;

/// Random connected multigraph: a random spanning tree plus extra edges.
fn arb_connected_graph() -> impl Strategy<Value = GraphSpec> {
    (2usize..=8)
        .prop_flat_map(|n| {
            let tree = proptest::collection::vec(any::<prop::sample::Index>(), n - 1);
            let extra = proptest::collection::vec((any::<prop::sample::Index>(), any::<prop::sample::Index>()), 0..=5);
            let lengths = proptest::collection::vec(0.5f64..3.0, (n - 1) + 5);
            (Just(n), tree, extra, lengths)
        })
        .prop_map(|(n, tree, extra, lengths)| {
            let vertices: Vec<VertexSpec> = (0..n)
                .map(|i| VertexSpec {
                    id: format!("v{i}"),
                    xy: None,
                })
                .collect();
            let mut edges = Vec::new();
            for (i, idx) in tree.iter().enumerate() {
                let child = i + 1;
                let parent = idx.index(child); // in 0..child
                edges.push(EdgeSpec {
                    id: format!("t{i}"),
                    init: format!("v{parent}"),
                    term: format!("v{child}"),
                    length: lengths[i],
                });
            }
            for (k, (a, b)) in extra.iter().enumerate() {
                let va = a.index(n);
                let vb = b.index(n);
                if va == vb {
                    continue; // no loops
                }
                edges.push(EdgeSpec {
                    id: format!("x{k}"),
                    init: format!("v{va}"),
                    term: format!("v{vb}"),
                    length: lengths[n - 1 + k],
                });
            }
            GraphSpec { vertices, edges }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn euler_index_equals_b0_minus_b1(spec in arb_connected_graph()) {
        let g = MetricGraph::build(&spec).unwrap();
        let (b0, b1) = g.betti_numbers();
        prop_assert_eq!(g.euler_index(), b0 as i64 - b1 as i64);
        prop_assert_eq!(g.euler_index(), g.n_vertices() as i64 - g.n_edges() as i64);
    }

    #[test]
    fn harmonic_basis_has_dimension_b1(spec in arb_connected_graph()) {
        let g = MetricGraph::build(&spec).unwrap();
        let grid = MgGrid::new(&g, 0.2).unwrap();
        let basis = harmonic_oneform_basis(&g, &grid);
        prop_assert_eq!(basis.len(), g.betti_numbers().1);
        for form in &basis {
            prop_assert!(form.max_flux_defect(&g, &grid) < 1e-12);
        }
    }

    #[test]
    fn build_is_deterministic(spec in arb_connected_graph()) {
        let g1 = MetricGraph::build(&spec).unwrap();
        let g2 = MetricGraph::build(&spec).unwrap();
        prop_assert_eq!(g1.edges(), g2.edges());
    }
}
