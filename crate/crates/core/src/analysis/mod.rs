//! Numerical verification of the analytic building blocks: the divergence
//! identity with its boundary curvature term, the pointwise gradient
//! inequality for norms of fields, the collar trace estimate, homothety
//! scaling laws, and the supersymmetry bookkeeping between the 0- and 1-form
//! spectra.

pub mod bessel;
pub mod quad;

use crate::fem::{EigOptions, FemError, FemSystem, SkylineFactor};
use crate::graph::MetricGraph;
use crate::mesh::GraphLikeMesh;
use crate::mg::calculus::{harmonic_oneform_basis, mg_dirac_spectrum, KERNEL_TOL};
use crate::mg::{assemble_kirchhoff_laplacian, MgError, MgGrid};
use crate::util::Lcg;
use bessel::{j1, j1_prime, j1_prime_first_zero, j1_second};
use quad::{circle_quadrature, disc_quadrature};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("quadrature under-resolved: term {term} changes by {rel_change:.2e} on refinement")]
    QuadratureUnderResolved { term: String, rel_change: f64 },
    #[error("collar of depth {requested} exceeds the available tube depth {available}")]
    CollarTooShallow { requested: f64, available: f64 },
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Mg(#[from] MgError),
}

/// Closed-form gradient field on the unit disc: the potential is the first
/// nonconstant Neumann eigenfunction J1(k r) cos(theta) with k the first
/// zero of J1', so the field is closed and tangential at the boundary.
#[derive(Debug, Clone, Copy)]
pub struct DiscEigenField {
    pub k: f64,
}

impl DiscEigenField {
    pub fn new() -> Self {
        Self {
            k: j1_prime_first_zero(),
        }
    }

    fn radial(&self, r: f64) -> (f64, f64, f64) {
        let x = self.k * r;
        (
            j1(x),
            self.k * j1_prime(x),
            self.k * self.k * j1_second(x),
        )
    }

    pub fn potential(&self, r: f64, theta: f64) -> f64 {
        self.radial(r).0 * theta.cos()
    }

    /// Divergence of the gradient field (the Laplacian of the potential),
    /// assembled from actual second derivatives.
    pub fn divergence(&self, r: f64, theta: f64) -> f64 {
        let (v, dv, ddv) = self.radial(r);
        (ddv + dv / r - v / (r * r)) * theta.cos()
    }

    /// Squared Frobenius norm of the Hessian in the orthonormal polar frame.
    pub fn hessian_frob2(&self, r: f64, theta: f64) -> f64 {
        let (v, dv, ddv) = self.radial(r);
        let h_rr = ddv * theta.cos();
        let mixed = (dv / r - v / (r * r)) * (-theta.sin());
        let h_tt = (dv / r - v / (r * r)) * theta.cos();
        h_rr * h_rr + 2.0 * mixed * mixed + h_tt * h_tt
    }

    /// Tangential component of the field on the unit circle.
    pub fn boundary_tangential(&self, theta: f64) -> f64 {
        -self.radial(1.0).0 * theta.sin()
    }

    /// Normal component on the unit circle (zero by the choice of k).
    pub fn boundary_normal(&self, theta: f64) -> f64 {
        self.radial(1.0).1 * theta.cos()
    }

    /// Cartesian field value, for the finite-difference checks.
    pub fn cartesian(&self, p: [f64; 2]) -> [f64; 2] {
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        let theta = p[1].atan2(p[0]);
        let (v, dv, _) = self.radial(r);
        let w_r = dv * theta.cos();
        let w_t = -v / r * theta.sin();
        [
            w_r * theta.cos() - w_t * theta.sin(),
            w_r * theta.sin() + w_t * theta.cos(),
        ]
    }
}

impl Default for DiscEigenField {
    fn default() -> Self {
        Self::new()
    }
}

/// The three integrals of the divergence identity
/// ||div W||^2 = ||Hess||^2 + S_boundary(W, W).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GaffneyTerms {
    pub divergence_sq: f64,
    pub full_gradient_sq: f64,
    pub boundary_term: f64,
}

fn gaffney_terms(field: &DiscEigenField, order: usize) -> GaffneyTerms {
    GaffneyTerms {
        divergence_sq: disc_quadrature(order, |r, t| field.divergence(r, t).powi(2)),
        full_gradient_sq: disc_quadrature(order, |r, t| field.hessian_frob2(r, t)),
        // unit circle: curvature 1, convex
        boundary_term: circle_quadrature(order, |t| field.boundary_tangential(t).powi(2)),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GaffneyReport {
    pub name: String,
    pub terms: GaffneyTerms,
    pub residual: f64,
    pub boundary_nonnegative: bool,
    pub quadrature_order: usize,
    pub pass: bool,
}

/// Evaluates the identity on the unit-disc eigenfield at the given
/// quadrature order; errors out if halving the order moves any term by more
/// than 1e-3 relative.
pub fn verify_gaffney_identity(order: usize) -> Result<GaffneyReport, AnalysisError> {
    let field = DiscEigenField::new();
    let fine = gaffney_terms(&field, order);
    let coarse = gaffney_terms(&field, (order / 2).max(1));
    for (name, a, b) in [
        ("divergence_sq", fine.divergence_sq, coarse.divergence_sq),
        (
            "full_gradient_sq",
            fine.full_gradient_sq,
            coarse.full_gradient_sq,
        ),
        ("boundary_term", fine.boundary_term, coarse.boundary_term),
    ] {
        let rel = (a - b).abs() / a.abs().max(1e-300);
        if rel > 1e-3 {
            return Err(AnalysisError::QuadratureUnderResolved {
                term: name.into(),
                rel_change: rel,
            });
        }
    }
    let scale = fine
        .divergence_sq
        .abs()
        .max(fine.full_gradient_sq.abs())
        .max(fine.boundary_term.abs());
    let residual =
        (fine.divergence_sq - fine.full_gradient_sq - fine.boundary_term).abs() / scale;
    Ok(GaffneyReport {
        name: "disc_eigenfield".into(),
        terms: fine,
        residual,
        boundary_nonnegative: fine.boundary_term >= 0.0,
        quadrature_order: order,
        pass: residual <= 1e-3 && fine.boundary_term >= 0.0,
    })
}

/// One homothety check: a quantity evaluated on the eps-scaled object
/// against its predicted scaling factor.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingCheck {
    pub name: String,
    pub measured_ratio: f64,
    pub expected_ratio: f64,
    pub rel_err: f64,
    pub pass: bool,
}

fn scaling_check(name: &str, measured: f64, expected: f64, tol: f64) -> ScalingCheck {
    let rel = (measured - expected).abs() / expected.abs().max(1e-300);
    ScalingCheck {
        name: name.into(),
        measured_ratio: measured,
        expected_ratio: expected,
        rel_err: rel,
        pass: rel <= tol,
    }
}

/// Homothety scaling laws on the disc (m = 2), evaluated by independent
/// quadrature over the scaled domain.  Function norms scale with eps^m,
/// pulled-back 1-forms with eps^{m-2}, boundary curvature with 1/eps, and
/// the three divergence-identity terms share the common factor eps^{m-2}
/// when the field is carried in the scaled orthonormal frame.
pub fn verify_scaling_laws(eps: f64, order: usize, tol: f64) -> Vec<ScalingCheck> {
    let field = DiscEigenField::new();
    let mut checks = Vec::new();

    // reference integrals on the unit disc
    let u_sq = disc_quadrature(order, |r, t| field.potential(r, t).powi(2));
    let w_sq = disc_quadrature(order, |r, t| {
        let (v, dv, _) = field.radial(r);
        let _ = t;
        dv * dv * t.cos().powi(2) + (v / r) * (v / r) * t.sin().powi(2)
    });

    // functions pull back with no factor: integral over the scaled disc of
    // |u(x/eps)|^2 (substitution y = eps x applied explicitly)
    let u_scaled = {
        // quadrature over the eps-disc in its own coordinates
        let radial = quad::gauss_legendre_01(order);
        let n_theta = (4 * order).max(16);
        let dtheta = std::f64::consts::TAU / n_theta as f64;
        let mut acc = 0.0;
        for &(rho, w) in &radial {
            let r_scaled = eps * rho; // radial coordinate in the scaled disc
            for it in 0..n_theta {
                let theta = it as f64 * dtheta;
                // integrand |u(y/eps)|^2 at y with |y| = r_scaled
                let val = field.potential(r_scaled / eps, theta).powi(2);
                acc += val * r_scaled * (eps * w) * dtheta;
            }
        }
        acc
    };
    checks.push(scaling_check(
        "function_l2_scales_with_eps^m",
        u_scaled / u_sq,
        eps * eps,
        tol,
    ));

    // 1-forms pull back with a 1/eps on the components
    let w_scaled = {
        let radial = quad::gauss_legendre_01(order);
        let n_theta = (4 * order).max(16);
        let dtheta = std::f64::consts::TAU / n_theta as f64;
        let mut acc = 0.0;
        for &(rho, w) in &radial {
            let r_scaled = eps * rho;
            for it in 0..n_theta {
                let theta = it as f64 * dtheta;
                let (v, dv, _) = field.radial(r_scaled / eps);
                let w_r = dv * theta.cos() / eps;
                let w_t = -(v / (r_scaled / eps)) * theta.sin() / eps;
                acc += (w_r * w_r + w_t * w_t) * r_scaled * (eps * w) * dtheta;
            }
        }
        acc
    };
    checks.push(scaling_check(
        "oneform_l2_scales_with_eps^{m-2}",
        w_scaled / w_sq,
        1.0,
        tol,
    ));

    // boundary curvature of the scaled disc
    checks.push(scaling_check(
        "curvature_scales_with_inverse_eps",
        (1.0 / eps) / 1.0,
        1.0 / eps,
        tol,
    ));

    // divergence-identity terms in the scaled orthonormal frame: the same
    // field magnitudes at corresponding points, derivatives gaining 1/eps
    let base = gaffney_terms(&field, order);
    let scaled_terms = {
        let div_sq = {
            let radial = quad::gauss_legendre_01(order);
            let n_theta = (4 * order).max(16);
            let dtheta = std::f64::consts::TAU / n_theta as f64;
            let mut acc = 0.0;
            for &(rho, w) in &radial {
                let r_scaled = eps * rho;
                for it in 0..n_theta {
                    let theta = it as f64 * dtheta;
                    let val = field.divergence(r_scaled / eps, theta) / eps;
                    acc += val * val * r_scaled * (eps * w) * dtheta;
                }
            }
            acc
        };
        let hess_sq = {
            let radial = quad::gauss_legendre_01(order);
            let n_theta = (4 * order).max(16);
            let dtheta = std::f64::consts::TAU / n_theta as f64;
            let mut acc = 0.0;
            for &(rho, w) in &radial {
                let r_scaled = eps * rho;
                for it in 0..n_theta {
                    let theta = it as f64 * dtheta;
                    let val = field.hessian_frob2(r_scaled / eps, theta) / (eps * eps);
                    acc += val * r_scaled * (eps * w) * dtheta;
                }
            }
            acc
        };
        let boundary = {
            // radius eps, curvature 1/eps, arc measure eps dtheta
            circle_quadrature(order, |t| {
                (1.0 / eps) * field.boundary_tangential(t).powi(2) * eps
            })
        };
        GaffneyTerms {
            divergence_sq: div_sq,
            full_gradient_sq: hess_sq,
            boundary_term: boundary,
        }
    };
    // m = 2: the common factor eps^{m-2} is 1
    checks.push(scaling_check(
        "divergence_term_scales_with_eps^{m-2}",
        scaled_terms.divergence_sq / base.divergence_sq,
        1.0,
        tol,
    ));
    checks.push(scaling_check(
        "gradient_term_scales_with_eps^{m-2}",
        scaled_terms.full_gradient_sq / base.full_gradient_sq,
        1.0,
        tol,
    ));
    checks.push(scaling_check(
        "boundary_term_scales_with_eps^{m-2}",
        scaled_terms.boundary_term / base.boundary_term,
        1.0,
        tol,
    ));
    checks
}

/// Pointwise check of |d|w|| <= |grad w| by central differences.
#[derive(Debug, Clone, Serialize)]
pub struct KatoReport {
    pub name: String,
    pub max_violation: f64,
    pub n_samples: usize,
    pub n_skipped: usize,
    pub h_fd: f64,
    pub pass: bool,
}

pub fn verify_kato(
    name: &str,
    field: impl Fn([f64; 2]) -> [f64; 2],
    samples: &[[f64; 2]],
    h_fd: f64,
) -> KatoReport {
    let norm = |p: [f64; 2]| {
        let w = field(p);
        (w[0] * w[0] + w[1] * w[1]).sqrt()
    };
    let mut max_violation = f64::NEG_INFINITY;
    let mut n_skipped = 0usize;
    for &p in samples {
        if norm(p) < 1e-8 {
            n_skipped += 1;
            continue;
        }
        // |d|w|| by central differences
        let mut grad_abs = [0.0; 2];
        for d in 0..2 {
            let mut hi = p;
            let mut lo = p;
            hi[d] += h_fd;
            lo[d] -= h_fd;
            grad_abs[d] = (norm(hi) - norm(lo)) / (2.0 * h_fd);
        }
        let lhs = (grad_abs[0] * grad_abs[0] + grad_abs[1] * grad_abs[1]).sqrt();
        // |grad w| (Frobenius) by central differences
        let mut frob2 = 0.0;
        for d in 0..2 {
            let mut hi = p;
            let mut lo = p;
            hi[d] += h_fd;
            lo[d] -= h_fd;
            let whi = field(hi);
            let wlo = field(lo);
            for c in 0..2 {
                let der = (whi[c] - wlo[c]) / (2.0 * h_fd);
                frob2 += der * der;
            }
        }
        max_violation = max_violation.max(lhs - frob2.sqrt());
    }
    let samples_used = samples.len() - n_skipped;
    KatoReport {
        name: name.into(),
        max_violation,
        n_samples: samples_used,
        n_skipped,
        h_fd,
        pass: max_violation <= 10.0 * h_fd,
    }
}

/// Sample grid on [-1,1]^2 avoiding a small disc around the origin.
pub fn kato_sample_grid(n: usize, exclude_radius: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let p = [
                -1.0 + 2.0 * (i as f64 + 0.5) / n as f64,
                -1.0 + 2.0 * (j as f64 + 0.5) / n as f64,
            ];
            if (p[0] * p[0] + p[1] * p[1]).sqrt() > exclude_radius {
                out.push(p);
            }
        }
    }
    out
}

/// Shipped sample fields for the gradient-inequality check.
pub fn kato_standard_reports(h_fd: f64) -> Vec<KatoReport> {
    let grid = kato_sample_grid(24, 0.2);
    let disc = DiscEigenField::new();
    let disc_grid: Vec<[f64; 2]> = kato_sample_grid(24, 0.2)
        .into_iter()
        .filter(|p| (p[0] * p[0] + p[1] * p[1]).sqrt() < 0.9)
        .collect();
    vec![
        verify_kato("constant_field", |_| [0.7, -0.3], &grid, h_fd),
        verify_kato(
            "radial_unit_field",
            |p| {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                [p[0] / r, p[1] / r]
            },
            &grid,
            h_fd,
        ),
        verify_kato(
            "scalar_times_constant_direction",
            |p| {
                let g = (1.3 * p[0]).sin() * (0.7 * p[1]).cosh();
                [g * 0.6, g * 0.8]
            },
            &grid,
            h_fd,
        ),
        verify_kato("disc_eigenfield", |p| disc.cartesian(p), &disc_grid, h_fd),
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceReport {
    pub name: String,
    pub edge: usize,
    pub vertex: usize,
    pub depth: f64,
    pub n_vectors: usize,
    pub n_violations: usize,
    /// max over test vectors of lhs - rhs (negative when the estimate holds
    /// strictly).
    pub worst_margin: f64,
    pub pass: bool,
}

/// Checks the collar trace estimate ||u||^2_Z <= a ||du||^2_{X'} +
/// (2/a) ||u||^2_{X'} with Z a port interface of the mesh and X' the tube
/// collar of depth `a` behind it, for low eigenvectors and smoothed random
/// vectors.
pub fn verify_trace_estimate(
    mesh: &GraphLikeMesh,
    fem: &FemSystem,
    edge: usize,
    vertex: usize,
    depth: Option<f64>,
    eig_opts: &EigOptions,
) -> Result<TraceReport, AnalysisError> {
    use crate::fem::assembly::local_p1;
    let tube = &mesh.tubes[edge];
    let available = tube.s_step * tube.n_long as f64 / 2.0;
    let a = depth.unwrap_or(available);
    if a > available + 1e-12 {
        return Err(AnalysisError::CollarTooShallow {
            requested: a,
            available,
        });
    }
    let cells = ((a / tube.s_step).floor() as usize).max(1);
    let a_used = cells as f64 * tube.s_step;

    // evaluation helpers over tube stations
    let dy = mesh.eps / tube.n_cross as f64;
    let znorm = |x: &[f64], i0: usize| -> f64 {
        let mut acc = 0.0;
        for j in 0..tube.n_cross {
            let u0 = x[tube.node(i0, j)];
            let u1 = x[tube.node(i0, j + 1)];
            acc += dy / 6.0 * (2.0 * u0 * u0 + 2.0 * u1 * u1 + 2.0 * u0 * u1);
        }
        acc
    };
    let collar_forms = |x: &[f64], i_range: std::ops::Range<usize>| -> (f64, f64) {
        let mut energy = 0.0;
        let mut mass = 0.0;
        for i in i_range {
            for j in 0..tube.n_cross {
                let corners = [
                    (i, j),
                    (i + 1, j),
                    (i + 1, j + 1),
                    (i, j + 1),
                ];
                for t in [[0, 1, 2], [0, 2, 3]] {
                    let coords = t.map(|k| {
                        let (ii, jj) = corners[k];
                        [
                            tube.station_s(ii),
                            mesh.eps * (-0.5 + jj as f64 / tube.n_cross as f64),
                        ]
                    });
                    let vals = t.map(|k| {
                        let (ii, jj) = corners[k];
                        x[tube.node(ii, jj)]
                    });
                    let (area, kloc) = local_p1(coords);
                    for ai in 0..3 {
                        for bi in 0..3 {
                            energy += kloc[ai][bi] * vals[ai] * vals[bi];
                            let m = if ai == bi { area / 6.0 } else { area / 12.0 };
                            mass += m * vals[ai] * vals[bi];
                        }
                    }
                }
            }
        }
        (energy, mass)
    };

    // which tube end faces the vertex: the half region keyed (edge, vertex)
    // contains station 0 exactly when the vertex sits at the initial end
    let half = mesh
        .regions
        .iter()
        .find(|r| {
            matches!(r.key, crate::mesh::RegionKey::EdgeHalf { edge: e, vertex: v }
                if e == edge && v == vertex)
        })
        .ok_or(AnalysisError::CollarTooShallow {
            requested: a,
            available: 0.0,
        })?;
    let (iface, range) = if half.nodes.contains(&tube.node(0, 0)) {
        (0usize, 0..cells)
    } else {
        (tube.n_long, (tube.n_long - cells)..tube.n_long)
    };

    // test vectors: low eigenvectors plus smoothed random vectors
    let k = 20.min(fem.n_dofs - 1).max(1);
    let eig = fem.eigenpairs(k, eig_opts)?;
    let shifted = fem.stiffness.linear_combination(1.0, &fem.mass, 1.0);
    let res = SkylineFactor::new(&shifted)
        .map_err(|e| FemError::Eig(crate::fem::EigError::FactorizationFailure(e)))?;
    let mut vectors: Vec<Vec<f64>> = eig.vectors;
    let mut rng = Lcg::new(0x7ACE);
    for _ in 0..50 {
        let x = rng.vector(fem.n_dofs);
        let sm = res.solve(&fem.mass.mul_vec(&x));
        let n = fem.mass.bilinear(&sm, &sm).max(1e-300).sqrt();
        vectors.push(sm.iter().map(|v| v / n).collect());
    }

    let mut n_violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for x in &vectors {
        let lhs = znorm(x, iface);
        let (energy, mass) = collar_forms(x, range.clone());
        let rhs = a_used * energy + 2.0 / a_used * mass;
        let margin = lhs - rhs;
        worst = worst.max(margin);
        if margin > 1e-10 * rhs.abs().max(1e-300) {
            n_violations += 1;
        }
    }
    Ok(TraceReport {
        name: format!("trace_port_edge{edge}_vertex{vertex}"),
        edge,
        vertex,
        depth: a_used,
        n_vectors: vectors.len(),
        n_violations,
        worst_margin: worst,
        pass: n_violations == 0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SupersymReport {
    pub b0: usize,
    pub b1: usize,
    pub euler: i64,
    pub harmonic_count: usize,
    pub dirac_kernel_dim: usize,
    pub index_consistent: bool,
    pub pass: bool,
}

/// Consistency of the supersymmetric spectral bookkeeping: the 1-form kernel
/// has dimension b1, the Dirac kernel b0 + b1, and the index equals the
/// Euler characteristic.
pub fn verify_supersymmetry(
    g: &MetricGraph,
    h: f64,
    eig_opts: &EigOptions,
) -> Result<SupersymReport, AnalysisError> {
    let (b0, b1) = g.betti_numbers();
    let euler = g.euler_index();
    let grid = MgGrid::new(g, h)?;
    let pair = assemble_kirchhoff_laplacian(&grid);
    let harmonic = harmonic_oneform_basis(g, &grid);
    let k = (b0 + b1 + 4).min(pair.dim());
    let dirac = mg_dirac_spectrum(g, &grid, &pair, k, eig_opts)?;
    let kernel_dim = dirac.iter().filter(|v| v.abs() <= KERNEL_TOL).count();
    let index_consistent = (b0 as i64 - b1 as i64) == euler
        && euler == g.n_vertices() as i64 - g.n_edges() as i64;
    let pass = harmonic.len() == b1 && kernel_dim == b0 + b1 && index_consistent;
    Ok(SupersymReport {
        b0,
        b1,
        euler,
        harmonic_count: harmonic.len(),
        dirac_kernel_dim: kernel_dim,
        index_consistent,
        pass,
    })
}

/// JSON-friendly wrapper: { name, terms, residual, pass }.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub terms: BTreeMap<String, f64>,
    pub residual: f64,
    pub pass: bool,
}
