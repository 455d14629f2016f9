use fatgraph::fem::assemble_neumann;
use fatgraph::graph::MetricGraph;
use fatgraph::ident::{build_j0, defect_norms_laplacian, PowerOpts};
use fatgraph::mesh::{build_abstract_space, default_abstract_templates};
use fatgraph::mg::{assemble_kirchhoff_laplacian, MgGrid};

fn main() {
    let text = std::fs::read_to_string("configs/star3.json").unwrap();
    let g = MetricGraph::from_json(&text).unwrap();
    let templates = default_abstract_templates(&g, 0.25, 0.2).unwrap();
    for (eps, hs) in [(0.2, vec![0.02, 0.01, 0.005]), (0.4, vec![0.02, 0.01])] {
        for h in hs {
            let mesh = build_abstract_space(&g, &templates, eps, h).unwrap();
            let grid = MgGrid::new(&g, h).unwrap();
            let pair = assemble_kirchhoff_laplacian(&grid);
            let fem = assemble_neumann(&mesh).unwrap();
            let map = build_j0(&g, &grid, &pair, &mesh).unwrap();
            let d = defect_norms_laplacian(&pair, &fem, &map, &PowerOpts::default()).unwrap();
            println!("eps={eps} h={h}: d1={:.3e} d2={:.4} d3={:.4} (dofs {})", d.d1, d.d2, d.d3, fem.n_dofs);
        }
    }
}
