//! Independent oracle for the Kirchhoff spectrum.  Each eigenfunction is
//! A_e cos(kappa s) + B_e sin(kappa s) per edge; continuity and the flux
//! condition give a square real system T(kappa) in the amplitudes whose
//! determinant vanishes exactly at the eigenvalues.  Roots are located by
//! scanning the (row-normalized) determinant for sign changes plus near-zero
//! local minima (even-order roots do not change sign), refined by bisection
//! or golden-section, and multiplicities are read off as the rank drop of
//! T(kappa*).

use super::MgError;
use crate::graph::MetricGraph;
use nalgebra::DMatrix;

const SCAN_STEPS: usize = 2000;
const REFINE_TOL: f64 = 1e-10;
const MINIMUM_CANDIDATE: f64 = 1e-3;
const RANK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct SecularRoot {
    pub kappa: f64,
    pub lambda: f64,
    pub multiplicity: usize,
}

/// Amplitude system at wave number `kappa`, rows scaled to unit norm (which
/// preserves both the zero set and the determinant sign as functions of
/// kappa).
fn secular_matrix(g: &MetricGraph, kappa: f64) -> DMatrix<f64> {
    let ne = g.n_edges();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(2 * ne);
    let value_coeffs = |e: usize, v: usize| -> [f64; 2] {
        let edge = g.edge(e);
        if edge.init == v {
            [1.0, 0.0]
        } else {
            let t = kappa * edge.length;
            [t.cos(), t.sin()]
        }
    };
    // inward derivative at v, divided by kappa
    let slope_coeffs = |e: usize, v: usize| -> [f64; 2] {
        let edge = g.edge(e);
        if edge.init == v {
            [0.0, 1.0]
        } else {
            let t = kappa * edge.length;
            [t.sin(), -t.cos()]
        }
    };
    for v in 0..g.n_vertices() {
        let adj = g.edges_at(v);
        let e0 = adj[0];
        for &e in &adj[1..] {
            let mut row = vec![0.0; 2 * ne];
            let a = value_coeffs(e, v);
            let b = value_coeffs(e0, v);
            row[2 * e] += a[0];
            row[2 * e + 1] += a[1];
            row[2 * e0] -= b[0];
            row[2 * e0 + 1] -= b[1];
            rows.push(row);
        }
        let mut row = vec![0.0; 2 * ne];
        for &e in &adj {
            let c = slope_coeffs(e, v);
            row[2 * e] += c[0];
            row[2 * e + 1] += c[1];
        }
        rows.push(row);
    }
    debug_assert_eq!(rows.len(), 2 * ne);
    for row in rows.iter_mut() {
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in row.iter_mut() {
                *x /= norm;
            }
        }
    }
    DMatrix::from_fn(2 * ne, 2 * ne, |i, j| rows[i][j])
}

fn secular_det(g: &MetricGraph, kappa: f64) -> f64 {
    secular_matrix(g, kappa).lu().determinant()
}

/// Dimension of ker T(kappa): singular values below RANK_TOL relative to the
/// largest one.
fn rank_drop(g: &MetricGraph, kappa: f64) -> usize {
    let svd = secular_matrix(g, kappa).svd(false, false);
    let smax = svd
        .singular_values
        .iter()
        .cloned()
        .fold(0.0f64, f64::max)
        .max(1e-300);
    svd.singular_values
        .iter()
        .filter(|&&s| s < RANK_TOL * smax)
        .count()
}

fn bisect(g: &MetricGraph, mut lo: f64, mut hi: f64) -> Result<f64, MgError> {
    let mut f_lo = secular_det(g, lo);
    for _ in 0..200 {
        if hi - lo <= REFINE_TOL {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = secular_det(g, mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_lo < 0.0) != (f_mid < 0.0) {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    Err(MgError::RootBracketingFailure { lo, hi })
}

/// Golden-section search for the minimum of |det| on [lo, hi].
fn minimize_abs(g: &MetricGraph, mut lo: f64, mut hi: f64) -> f64 {
    let phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = secular_det(g, x1).abs();
    let mut f2 = secular_det(g, x2).abs();
    while hi - lo > REFINE_TOL {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = secular_det(g, x1).abs();
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = secular_det(g, x2).abs();
        }
    }
    0.5 * (lo + hi)
}

/// All Kirchhoff eigenvalues lambda = kappa² with kappa in [0, k_max].
/// The zero eigenvalue (simple, the graph is connected) is prepended.
pub fn secular_eigenvalues(g: &MetricGraph, k_max: f64) -> Result<Vec<SecularRoot>, MgError> {
    g.require_finite()?;
    assert!(k_max > 0.0);
    let step = k_max / SCAN_STEPS as f64;
    let kappas: Vec<f64> = (1..=SCAN_STEPS).map(|i| i as f64 * step).collect();
    let dets: Vec<f64> = kappas.iter().map(|&k| secular_det(g, k)).collect();

    let mut candidates: Vec<f64> = Vec::new();
    for i in 0..kappas.len() - 1 {
        let (a, b) = (dets[i], dets[i + 1]);
        if a == 0.0 {
            candidates.push(kappas[i]);
        } else if (a < 0.0) != (b < 0.0) {
            candidates.push(bisect(g, kappas[i], kappas[i + 1])?);
        }
    }
    // near-zero local minima of |det| catch even-order roots
    for i in 1..kappas.len() - 1 {
        let m = dets[i].abs();
        if m < MINIMUM_CANDIDATE && m <= dets[i - 1].abs() && m <= dets[i + 1].abs() {
            candidates.push(minimize_abs(g, kappas[i - 1], kappas[i + 1]));
        }
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup_by(|a, b| (*a - *b).abs() < 1e-7 * a.abs().max(1.0));

    let mut roots = vec![SecularRoot {
        kappa: 0.0,
        lambda: 0.0,
        multiplicity: 1,
    }];
    for kappa in candidates {
        let multiplicity = rank_drop(g, kappa);
        if multiplicity > 0 {
            roots.push(SecularRoot {
                kappa,
                lambda: kappa * kappa,
                multiplicity,
            });
        }
    }
    Ok(roots)
}

/// Eigenvalues repeated by multiplicity, ascending.
pub fn flattened(roots: &[SecularRoot]) -> Vec<f64> {
    let mut out = Vec::new();
    for r in roots {
        for _ in 0..r.multiplicity {
            out.push(r.lambda);
        }
    }
    out
}
