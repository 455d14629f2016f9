//! Gauss-Legendre quadrature on [0, 1] (nodes by Newton iteration on the
//! Legendre recurrence) and a periodic trapezoid rule for the angular
//! direction.

/// Legendre polynomial value and derivative at x.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Nodes and weights of n-point Gauss-Legendre quadrature on [0, 1].
pub fn gauss_legendre_01(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev initial guess, then Newton
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let step = p / dp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

/// Integrates f over the unit disc in polar coordinates: Gauss-Legendre in
/// r, trapezoid (spectrally accurate for periodic integrands) in theta.
pub fn disc_quadrature(order: usize, f: impl Fn(f64, f64) -> f64) -> f64 {
    let radial = gauss_legendre_01(order);
    let n_theta = (4 * order).max(16);
    let dtheta = std::f64::consts::TAU / n_theta as f64;
    let mut acc = 0.0;
    for &(r, wr) in &radial {
        for it in 0..n_theta {
            let theta = it as f64 * dtheta;
            acc += f(r, theta) * r * wr * dtheta;
        }
    }
    acc
}

/// Integrates f(theta) over the unit circle.
pub fn circle_quadrature(order: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n_theta = (4 * order).max(16);
    let dtheta = std::f64::consts::TAU / n_theta as f64;
    (0..n_theta).map(|i| f(i as f64 * dtheta) * dtheta).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_on_polynomials() {
        for n in [2usize, 5, 16] {
            let nodes = gauss_legendre_01(n);
            // degree 2n-1 is integrated exactly
            let p = 2 * n - 1;
            let int: f64 = nodes
                .iter()
                .map(|&(x, w)| w * x.powi(p as i32))
                .sum();
            let exact = 1.0 / (p as f64 + 1.0);
            assert!((int - exact).abs() < 1e-13, "n={n}: {int} vs {exact}");
            let total: f64 = nodes.iter().map(|&(_, w)| w).sum();
            assert!((total - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn disc_area_and_moment() {
        let area = disc_quadrature(16, |_, _| 1.0);
        assert!((area - std::f64::consts::PI).abs() < 1e-12);
        let m2 = disc_quadrature(16, |r, t| (r * t.cos()).powi(2));
        assert!((m2 - std::f64::consts::PI / 4.0).abs() < 1e-12);
    }
}
